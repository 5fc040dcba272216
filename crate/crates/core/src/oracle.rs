//! Brute-force references: dense sampling, exhaustive cell enumeration and
//! the two-compartment kinetics model used by the parameter-estimation case
//! study.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::interval::{Interval, IntervalBox};
use crate::ism::IsmVector;
use crate::setinv::{classify_enclosures, BoxClass, Measurement};
use crate::staircase::CellIter;

/// Default cap on enumerated cells.
pub const DEFAULT_CELL_CAP: u128 = 1_000_000;

/// Min and max of one output over a tensor sample grid. Always an inner
/// approximation of the true range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampledRange {
    pub interval: Interval,
    pub samples_per_dim: usize,
}

/// Tensor grid of `k` points per coordinate, endpoints included.
pub fn tensor_grid(x: &IntervalBox, k: usize) -> impl Iterator<Item = Vec<f64>> + '_ {
    let n = x.dim();
    CellIter::new(n, k).map(move |idx| {
        idx.iter()
            .zip(x.iter())
            .map(|(&i, c)| lerp(*c, i, k))
            .collect()
    })
}

fn lerp(c: Interval, i: usize, k: usize) -> f64 {
    if i + 1 == k {
        c.hi()
    } else {
        c.lo() + (c.hi() - c.lo()) * (i as f64 / (k - 1) as f64)
    }
}

/// Range of output `output` of `e` sampled on a `k^n` tensor grid.
pub fn sampled_range(e: &Expr, output: usize, x: &IntervalBox, k: usize) -> Result<SampledRange> {
    if k < 2 {
        return Err(Error::invalid("samples", "need at least 2 samples per coordinate"));
    }
    if output >= e.n_outputs() {
        return Err(Error::IndexOutOfRange {
            index: output,
            len: e.n_outputs(),
        });
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in tensor_grid(x, k) {
        let v = e.eval_real(&p)?[output];
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(SampledRange {
        interval: Interval::new(lo, hi)?,
        samples_per_dim: k,
    })
}

/// Classify every grid cell of `models` against `bands` (component `i`
/// against band `i`), in lexicographic order.
pub fn enumerate_cells(models: &IsmVector, bands: &[Interval], cap: u128) -> Result<Vec<(Vec<usize>, BoxClass)>> {
    if models.len() != bands.len() {
        return Err(Error::DimensionMismatch {
            expected: models.len(),
            found: bands.len(),
        });
    }
    let Some(grid) = models.grid() else {
        return Ok(Vec::new());
    };
    let cells = grid.cell_count();
    if cells > cap {
        return Err(Error::CapExceeded { cells, cap });
    }
    let meas: Vec<Measurement> = bands
        .iter()
        .enumerate()
        .map(|(i, &b)| Measurement::with_band(i, b))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(cells as usize);
    let mut enc = vec![Interval::ZERO; bands.len()];
    for j in CellIter::new(grid.dim(), grid.resolution()) {
        for (i, m) in models.components().iter().enumerate() {
            enc[i] = m.cell(&j)?;
        }
        let class = classify_enclosures(&meas, &enc);
        out.push((j, class));
    }
    Ok(out)
}

/// `z2(t_end)` of the linear two-state system
/// `z1' = -(x1 + x3) z1 + x2 z2`, `z2' = x1 z1 - x2 z2`, `z(0) = (1, 0)`,
/// by fixed-step RK4.
pub fn integrate_kinetics(x: [f64; 3], t_end: f64, steps: usize) -> f64 {
    integrate_states(x, t_end, steps)[1]
}

fn integrate_states(x: [f64; 3], t_end: f64, steps: usize) -> [f64; 2] {
    let [x1, x2, x3] = x;
    let f = |z: [f64; 2]| [-(x1 + x3) * z[0] + x2 * z[1], x1 * z[0] - x2 * z[1]];
    let steps = steps.max(1);
    let h = t_end / steps as f64;
    let mut z = [1.0, 0.0];
    let axpy = |z: [f64; 2], k: [f64; 2], s: f64| [z[0] + s * k[0], z[1] + s * k[1]];
    for _ in 0..steps {
        let k1 = f(z);
        let k2 = f(axpy(z, k1, h / 2.0));
        let k3 = f(axpy(z, k2, h / 2.0));
        let k4 = f(axpy(z, k3, h));
        for i in 0..2 {
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    z
}

/// Closed-form `z2(t)` of the kinetics system,
/// `e^(-t rho/2) x1 (e^(t sigma/2) - e^(-t sigma/2)) / sigma` with
/// `rho = x1 + x2 + x3` and `sigma^2 = rho^2 - 4 x2 x3`.
pub fn closed_form_output(x: [f64; 3], t: f64) -> f64 {
    let [x1, x2, x3] = x;
    let rho = x1 + x2 + x3;
    let sigma2 = x1 * x1 + x2 * x2 + x3 * x3 + 2.0 * x1 * x2 + 2.0 * x1 * x3 - 2.0 * x2 * x3;
    let sigma = sigma2.max(0.0).sqrt();
    let decay = (-t * rho / 2.0).exp();
    if sigma * t < 1e-8 {
        // sinh(u)/u -> 1
        return decay * x1 * t;
    }
    decay * x1 * 2.0 * (t * sigma / 2.0).sinh() / sigma
}

/// Round `v` to `digits` significant digits, ties to even.
pub fn round_significant(v: f64, digits: usize) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let s = format!("{:.*e}", digits.max(1) - 1, v);
    s.parse().expect("formatted float parses")
}

/// Result of sampling a subpaving against a problem's constraints.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SandwichReport {
    /// Interior samples that violate some constraint.
    pub interior_violations: usize,
    pub interior_samples: usize,
    /// Samples outside every box that satisfy all constraints.
    pub outside_feasible: usize,
    pub outside_samples: usize,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.interior_violations == 0 && self.outside_feasible == 0
    }
}

/// Draw `samples` uniform points inside interior boxes and `samples` points
/// of the domain outside all boxes, and count constraint failures of each
/// kind. Points where the model is undefined are skipped.
pub fn sandwich_check<R: rand::Rng>(
    problem: &crate::setinv::GpeProblem,
    sp: &crate::setinv::Subpaving,
    samples: usize,
    rng: &mut R,
) -> SandwichReport {
    let mut r = SandwichReport::default();
    let draw = |b: &IntervalBox, rng: &mut R| -> Vec<f64> {
        b.iter().map(|c| if c.lo() < c.hi() { rng.gen_range(c.lo()..=c.hi()) } else { c.lo() }).collect()
    };
    if !sp.interior.is_empty() {
        let volumes: Vec<f64> = sp.interior.iter().map(volume).collect();
        let total: f64 = volumes.iter().sum();
        for _ in 0..samples {
            let b = if total > 0.0 {
                let mut u = rng.gen_range(0.0..total);
                let mut k = 0;
                while k + 1 < volumes.len() && u >= volumes[k] {
                    u -= volumes[k];
                    k += 1;
                }
                k
            } else {
                rng.gen_range(0..sp.interior.len())
            };
            let x = draw(&sp.interior[b], rng);
            if let Some(ok) = problem.satisfied_at(&x) {
                r.interior_samples += 1;
                r.interior_violations += usize::from(!ok);
            }
        }
    }
    let mut attempts = 0;
    while r.outside_samples < samples && attempts < samples * 100 {
        attempts += 1;
        let x = draw(&problem.domain, rng);
        if sp.covers(&x) {
            continue;
        }
        if let Some(ok) = problem.satisfied_at(&x) {
            r.outside_samples += 1;
            r.outside_feasible += usize::from(ok);
        }
    }
    r
}

fn volume(b: &IntervalBox) -> f64 {
    b.iter().map(|c| c.hi() - c.lo()).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_range_examples() {
        let e = Expr::parse("x1 + x2").unwrap();
        let b = IntervalBox::from_bounds(&[(0.0, 1.0), (0.0, 1.0)]).unwrap();
        for k in [2, 3, 17] {
            assert_eq!(sampled_range(&e, 0, &b, k).unwrap().interval, Interval::new(0.0, 2.0).unwrap());
        }
        let e = Expr::parse("x1*x1").unwrap();
        let b = IntervalBox::from_bounds(&[(-1.0, 1.0)]).unwrap();
        assert_eq!(sampled_range(&e, 0, &b, 3).unwrap().interval, Interval::new(0.0, 1.0).unwrap());
        assert!(sampled_range(&e, 0, &b, 1).is_err());
    }

    #[test]
    fn kinetics_trivial_cases() {
        assert_eq!(integrate_kinetics([0.0, 0.0, 0.0], 5.0, 100), 0.0);
        assert_eq!(closed_form_output([0.0, 0.3, 0.2], 4.0), 0.0);
        assert_eq!(closed_form_output([0.6, 0.15, 0.35], 0.0), 0.0);
    }

    #[test]
    fn kinetics_closed_form_matches_rk4() {
        let x = [0.6, 0.15, 0.35];
        let want = 0.6 * ((-0.1f64).exp() - (-2.1f64).exp());
        assert!((closed_form_output(x, 2.0) - want).abs() < 1e-15);
        assert!((integrate_kinetics(x, 2.0, 10_000) - want).abs() < 1e-6);
    }

    #[test]
    fn kinetics_repeated_eigenvalue_limit() {
        // x2 = 0 and x1 + x3 = 0 give sigma = 0
        let x = [0.0, 0.0, 0.0];
        assert_eq!(closed_form_output(x, 3.0), 0.0);
        let x = [0.5, 0.5, 0.5];
        let y = closed_form_output(x, 3.0);
        assert!((y - integrate_kinetics(x, 3.0, 10_000)).abs() < 1e-6);
    }

    #[test]
    fn mass_decays() {
        let x = [0.6, 0.15, 0.35];
        let mut prev = 1.0;
        for t in 1..=15 {
            let z = integrate_states(x, t as f64, 2000);
            assert!(z[0] + z[1] < prev);
            prev = z[0] + z[1];
        }
    }

    #[test]
    fn significant_rounding() {
        assert_eq!(round_significant(0.482241, 2), 0.48);
        assert_eq!(round_significant(0.482241, 3), 0.482);
        assert_eq!(round_significant(0.0001234, 2), 0.00012);
        assert_eq!(round_significant(-12.5, 2), -12.0);
        assert_eq!(round_significant(0.0, 3), 0.0);
    }
}
