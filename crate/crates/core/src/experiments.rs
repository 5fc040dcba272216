//! Reproducible experiment setups: enclosure overestimation against domain
//! size, separable convergence in `N`, and the kinetics parameter-estimation
//! case study.

use std::sync::Arc;

use crate::error::Result;
use crate::expr::Expr;
use crate::interval::{Interval, IntervalBox};
use crate::ism::{ism_of_expr, Grid};
use crate::oracle::{closed_form_output, round_significant, sampled_range, tensor_grid};
use crate::problem::{MeasurementSpec, OneOrMany, ProblemFile};
use crate::setinv::Engine;

/// Benchmark function for the overestimation experiment, on `[0,1] x [0, xbar2]`.
pub const BENCH_FUNCTION: &str = "exp(sin(x1) + sin(x2)*cos(x2))";

/// Separable function for the convergence experiment, on `[0,4]^2`.
pub const SEPARABLE_FUNCTION: &str = "exp(x1) + sin(x2)";

/// Fixed third rate constant of the case study.
pub const CASE_X3: f64 = 0.35;
/// Parameters used to simulate the case-study measurements.
pub const CASE_TRUTH: [f64; 3] = [0.6, 0.15, 0.35];
/// Measurement half-width of the case study.
pub const CASE_ETA: f64 = 1e-3;
/// Significant digits kept when rounding simulated measurements.
pub const CASE_DIGITS: usize = 3;

/// Hausdorff distance from the sampled range of output 0 to the model range.
pub fn range_overestimation(e: &Expr, domain: &IntervalBox, n: usize, samples: usize) -> Result<f64> {
    let grid = Arc::new(Grid::new(domain.clone(), n)?);
    let model = ism_of_expr(e, &grid)?;
    let sampled = sampled_range(e, 0, domain, samples)?;
    Interval::hausdorff_1d(sampled.interval, model[0].range())
}

/// `d_H` for [`BENCH_FUNCTION`] over `[0,1] x [0, xbar2]`.
pub fn bench_overestimation(n: usize, xbar2: f64, samples: usize) -> Result<f64> {
    let e = Expr::parse(BENCH_FUNCTION)?;
    let domain = IntervalBox::from_bounds(&[(0.0, 1.0), (0.0, xbar2)])?;
    range_overestimation(&e, &domain, n, samples)
}

/// Largest distance from `f(x)` to the far end of the model value at `x`,
/// over a `samples^n` tensor grid: the pointwise overestimation of the model.
pub fn pointwise_overestimation(e: &Expr, domain: &IntervalBox, n: usize, samples: usize) -> Result<f64> {
    let grid = Arc::new(Grid::new(domain.clone(), n)?);
    let model = ism_of_expr(e, &grid)?;
    let mut worst = 0.0f64;
    for x in tensor_grid(domain, samples) {
        let f = e.eval_real(&x)?[0];
        let g = model[0].eval(&x)?;
        worst = worst.max(f - g.lo()).max(g.hi() - f);
    }
    Ok(worst)
}

/// Case-study output expression at time `t` over `(x1, x2)`.
///
/// `sigma^2 = (x1 + x2 - x3)^2 + 4 x1 x3` is increasing in both parameters
/// on the search domain, so its natural interval extension is tight.
pub fn case_expression(t: f64) -> String {
    let h = t / 2.0;
    let s = format!("sqrt((x1 + x2 - {x3})^2 + {c}*x1)", x3 = CASE_X3, c = 4.0 * CASE_X3);
    format!("exp(-{h}*(x1 + x2 + {x3}))*x1*(exp({h}*{s}) - exp(-{h}*{s}))/{s}", x3 = CASE_X3)
}

/// The 15-measurement kinetics problem over `(x1, x2)` with measurements
/// rounded to `digits` significant digits.
pub fn case_study(digits: usize, domain: [[f64; 2]; 2], epsilon: f64, engine: Engine, n: usize) -> ProblemFile {
    let times: Vec<f64> = (1..=15).map(f64::from).collect();
    let expressions = times.iter().map(|&t| case_expression(t)).collect();
    let measurements = times
        .iter()
        .enumerate()
        .map(|(k, &t)| MeasurementSpec {
            output: k,
            y: round_significant(closed_form_output(CASE_TRUTH, t), digits),
            eta: CASE_ETA,
        })
        .collect();
    ProblemFile {
        variables: Some(vec!["x1".into(), "x2".into()]),
        expressions: OneOrMany::Many(expressions),
        domain: domain.to_vec(),
        measurements,
        epsilon,
        engine: Some(engine),
        grid_n: Some(n),
        max_corners: None,
        budget: None,
        seed: Some(0),
    }
}

/// Default search domain of the case study.
pub const CASE_DOMAIN: [[f64; 2]; 2] = [[0.5, 0.7], [0.1, 0.2]];
