//! Set inversion of measurement bands.
//!
//! Both engines work through a FIFO queue of boxes starting from the search
//! domain. Every dequeued box counts as one iteration. A box is classified
//! against every measurement band `Y_i` using an enclosure of the selected
//! model output:
//!
//! - interior if every enclosure lies inside its band,
//! - excluded if some enclosure misses its band,
//! - indeterminate otherwise.
//!
//! [`sivia`] bounds with the natural interval extension and bisects
//! indeterminate boxes. [`ism_setinv`] grids each box, prunes cells with
//! staircases and re-queues indeterminate cells as new boxes. Indeterminate
//! boxes (or cells) of diameter at most `epsilon` become boundary boxes.
//! A domain violation while bounding makes a box indeterminate.
//!
//! The queue is processed one breadth-first level at a time. Parallel mode
//! maps a level concurrently and collects results in queue order, so it
//! yields the same boxes in the same order as sequential mode.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::interval::{Interval, IntervalBox};
use crate::ism::{ism_of_outputs, Grid, IsmVector};
use crate::staircase::{build_staircases, sort_rows, CellIter, StaircaseCovers, DEFAULT_MAX_CORNERS};

/// Default iteration budget.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Sivia,
    Ism,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Sivia => "sivia",
            Engine::Ism => "ism",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sivia" => Ok(Engine::Sivia),
            "ism" => Ok(Engine::Ism),
            _ => Err(Error::invalid("engine", format!("expected \"sivia\" or \"ism\", got {s:?}"))),
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Band `Y` that model output `output` must fall into.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement {
    pub output: usize,
    pub band: Interval,
}

impl Measurement {
    /// `y +- eta`, rounded outward.
    pub fn new(output: usize, y: f64, eta: f64) -> Result<Self> {
        if !y.is_finite() {
            return Err(Error::invalid("y", "must be finite"));
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::invalid("eta", "must be finite and non-negative"));
        }
        Ok(Measurement {
            output,
            band: Interval::point(y) + Interval::UNIT.scale(eta),
        })
    }

    pub fn with_band(output: usize, band: Interval) -> Result<Self> {
        if band.is_empty() {
            return Err(Error::EmptyOperand);
        }
        Ok(Measurement { output, band })
    }
}

/// A set-inversion problem.
#[derive(Clone, Debug)]
pub struct GpeProblem {
    pub model: Expr,
    pub domain: IntervalBox,
    pub measurements: Vec<Measurement>,
    pub epsilon: f64,
    pub engine: Engine,
    /// Pieces per coordinate for the model-based engine.
    pub grid_n: usize,
    /// Corner cap per staircase; `None` keeps the full frontier.
    pub max_corners: Option<usize>,
    pub budget: u64,
    pub parallel: bool,
}

impl GpeProblem {
    /// Problem with default engine settings (SIVIA, `N = 2`, 64 corners,
    /// budget of one million iterations, sequential).
    pub fn new(model: Expr, domain: IntervalBox, measurements: Vec<Measurement>, epsilon: f64) -> Result<Self> {
        let p = GpeProblem {
            model,
            domain,
            measurements,
            epsilon,
            engine: Engine::Sivia,
            grid_n: 2,
            max_corners: Some(DEFAULT_MAX_CORNERS),
            budget: DEFAULT_BUDGET,
            parallel: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_grid(mut self, n: usize) -> Self {
        self.grid_n = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.model.n_vars() != self.domain.dim() {
            return Err(Error::invalid(
                "domain",
                format!("{} variables but {} domain intervals", self.model.n_vars(), self.domain.dim()),
            ));
        }
        if self.measurements.is_empty() {
            return Err(Error::invalid("measurements", "at least one measurement is required"));
        }
        for m in &self.measurements {
            if m.output >= self.model.n_outputs() {
                return Err(Error::invalid(
                    "measurements.output",
                    format!("output {} out of range ({} expressions)", m.output, self.model.n_outputs()),
                ));
            }
            if m.band.is_empty() {
                return Err(Error::invalid("measurements", "empty band"));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon", "must be positive and finite"));
        }
        if self.grid_n == 0 {
            return Err(Error::invalid("N", "must be at least 1"));
        }
        if self.budget == 0 {
            return Err(Error::invalid("budget", "must be at least 1"));
        }
        Ok(())
    }

    /// Whether the model at `x` satisfies every measurement; `None` when the
    /// model is undefined at `x`.
    pub fn satisfied_at(&self, x: &[f64]) -> Option<bool> {
        let y = self.model.eval_real(x).ok()?;
        Some(self.measurements.iter().all(|m| m.band.contains(y[m.output])))
    }

    fn selected_outputs(&self) -> Vec<usize> {
        self.measurements
            .iter()
            .map(|m| m.output)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoxClass {
    Interior,
    Excluded,
    Indeterminate,
}

/// Classify per-measurement enclosures (`enclosures[i]` bounds measurement `i`).
pub fn classify_enclosures(measurements: &[Measurement], enclosures: &[Interval]) -> BoxClass {
    let pairs = || measurements.iter().zip(enclosures);
    if pairs().any(|(m, e)| e.is_disjoint(m.band)) {
        BoxClass::Excluded
    } else if pairs().all(|(m, e)| e.is_subset(m.band)) {
        BoxClass::Interior
    } else {
        BoxClass::Indeterminate
    }
}

/// Classify `x` with the natural interval extension of the model.
pub fn classify_box(p: &GpeProblem, x: &IntervalBox) -> BoxClass {
    match p.model.eval_interval(x) {
        Ok(y) => {
            let enc: Vec<Interval> = p.measurements.iter().map(|m| y[m.output]).collect();
            classify_enclosures(&p.measurements, &enc)
        }
        Err(_) => BoxClass::Indeterminate,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    /// Boxes dequeued.
    pub iterations: u64,
    /// Boxes and cells classified.
    pub boxes_tested: u64,
    pub wall_time: Duration,
}

/// Inner and boundary boxes of a set inversion.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Subpaving {
    pub interior: Vec<IntervalBox>,
    pub boundary: Vec<IntervalBox>,
    #[serde(skip)]
    pub stats: Stats,
}

impl Subpaving {
    /// Sort both lists lexicographically by bounds.
    pub fn canonicalize(&mut self) {
        let key = |b: &IntervalBox| -> Vec<f64> { b.iter().flat_map(|c| [c.lo(), c.hi()]).collect() };
        let cmp = |a: &IntervalBox, b: &IntervalBox| {
            let (ka, kb) = (key(a), key(b));
            ka.iter()
                .zip(&kb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        };
        self.interior.sort_by(cmp);
        self.boundary.sort_by(cmp);
    }

    pub fn boxes(&self) -> impl Iterator<Item = (BoxClass, &IntervalBox)> {
        self.interior
            .iter()
            .map(|b| (BoxClass::Interior, b))
            .chain(self.boundary.iter().map(|b| (BoxClass::Indeterminate, b)))
    }

    pub fn in_interior(&self, x: &[f64]) -> bool {
        self.interior.iter().any(|b| b.contains_point(x))
    }

    /// Whether `x` lies in the union of interior and boundary boxes.
    pub fn covers(&self, x: &[f64]) -> bool {
        self.in_interior(x) || self.boundary.iter().any(|b| b.contains_point(x))
    }

    /// Hull of all boxes, `None` when both lists are empty.
    pub fn bounding_box(&self) -> Option<IntervalBox> {
        let mut it = self.interior.iter().chain(&self.boundary);
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, b| {
            IntervalBox::new(acc.iter().zip(b.iter()).map(|(x, y)| x.hull(*y)).collect())
                .expect("hull of boxes is a box")
        }))
    }
}

#[derive(Default)]
struct Outcome {
    interior: Vec<IntervalBox>,
    boundary: Vec<IntervalBox>,
    queued: Vec<IntervalBox>,
    tested: u64,
}

impl Outcome {
    fn indeterminate(&mut self, x: IntervalBox, epsilon: f64) {
        if x.diam() <= epsilon {
            self.boundary.push(x);
            return;
        }
        match x.bisect() {
            Ok((l, r)) => {
                self.queued.push(l);
                self.queued.push(r);
            }
            Err(_) => self.boundary.push(x),
        }
    }
}

/// Run the engine selected in `p`.
pub fn solve(p: &GpeProblem) -> Result<Subpaving> {
    match p.engine {
        Engine::Sivia => sivia(p),
        Engine::Ism => ism_setinv(p),
    }
}

/// Bisection-based set inversion over plain interval bounds.
pub fn sivia(p: &GpeProblem) -> Result<Subpaving> {
    p.validate()?;
    run_queue(p, |x| {
        let mut out = Outcome {
            tested: 1,
            ..Outcome::default()
        };
        match classify_box(p, x) {
            BoxClass::Interior => out.interior.push(x.clone()),
            BoxClass::Excluded => {}
            BoxClass::Indeterminate => out.indeterminate(x.clone(), p.epsilon),
        }
        out
    })
}

/// Set inversion over interval superposition models with staircase pruning.
pub fn ism_setinv(p: &GpeProblem) -> Result<Subpaving> {
    p.validate()?;
    run_queue(p, |x| {
        let mut out = Outcome::default();
        let pass = match ism_pass(p, x) {
            Ok(pass) => pass,
            Err(_) => {
                out.tested = 1;
                out.indeterminate(x.clone(), p.epsilon);
                return out;
            }
        };
        match pass {
            IsmPass::Whole(class) => {
                out.tested = 1;
                match class {
                    BoxClass::Interior => out.interior.push(x.clone()),
                    BoxClass::Excluded => {}
                    BoxClass::Indeterminate => out.indeterminate(x.clone(), p.epsilon),
                }
            }
            IsmPass::Cells(cells) => {
                out.tested = 1 + cells.len() as u64;
                let single = p.grid_n == 1;
                for c in cells {
                    match c.class {
                        BoxClass::Interior => out.interior.push(c.cell),
                        BoxClass::Excluded => {}
                        // a single cell is the box itself: split it instead
                        BoxClass::Indeterminate if single => out.indeterminate(c.cell, p.epsilon),
                        BoxClass::Indeterminate if c.cell.diam() > p.epsilon => out.queued.push(c.cell),
                        BoxClass::Indeterminate => out.boundary.push(c.cell),
                    }
                }
            }
        }
        out
    })
}

fn run_queue<F>(p: &GpeProblem, step: F) -> Result<Subpaving>
where
    F: Fn(&IntervalBox) -> Outcome + Sync,
{
    let start = Instant::now();
    let mut sp = Subpaving::default();
    let mut level = vec![p.domain.clone()];
    let mut iterations = 0u64;
    let mut tested = 0u64;
    while !level.is_empty() {
        let take = (level.len() as u64).min(p.budget - iterations) as usize;
        let outcomes: Vec<Outcome> = if p.parallel {
            level[..take].par_iter().map(&step).collect()
        } else {
            level[..take].iter().map(&step).collect()
        };
        iterations += take as u64;
        let mut next = Vec::new();
        for o in outcomes {
            sp.interior.extend(o.interior);
            sp.boundary.extend(o.boundary);
            next.extend(o.queued);
            tested += o.tested;
        }
        let pending = level.len() - take + next.len();
        if pending > 0 && iterations >= p.budget {
            // undecided boxes stay in the boundary so the partial result
            // still encloses the solution set
            sp.boundary.extend(level.drain(take..));
            sp.boundary.extend(next);
            sp.stats = Stats {
                iterations,
                boxes_tested: tested,
                wall_time: start.elapsed(),
            };
            return Err(Error::BudgetExceeded {
                iterations,
                partial: Box::new(sp),
            });
        }
        level = next;
    }
    sp.stats = Stats {
        iterations,
        boxes_tested: tested,
        wall_time: start.elapsed(),
    };
    Ok(sp)
}

/// A grid cell and its classification.
#[derive(Clone, Debug, PartialEq)]
pub struct CellClass {
    pub index: Vec<usize>,
    pub cell: IntervalBox,
    pub class: BoxClass,
}

/// Result of one model-based pass over a box.
#[derive(Clone, Debug, PartialEq)]
pub enum IsmPass {
    /// The model ranges decide the whole box.
    Whole(BoxClass),
    /// Cells that survived staircase pruning, in lexicographic order.
    Cells(Vec<CellClass>),
}

/// Build models of the measured outputs over `x` gridded at `p.grid_n`,
/// prune with staircases and classify the surviving cells.
pub fn ism_pass(p: &GpeProblem, x: &IntervalBox) -> Result<IsmPass> {
    let grid = Arc::new(Grid::new(x.clone(), p.grid_n)?);
    let outputs = p.selected_outputs();
    let models = ism_of_outputs(&p.model, &grid, &outputs)?;
    let slot = |m: &crate::setinv::Measurement| outputs.binary_search(&m.output).expect("selected");

    let ranges: Vec<Interval> = p.measurements.iter().map(|m| models[slot(m)].range()).collect();
    match classify_enclosures(&p.measurements, &ranges) {
        BoxClass::Indeterminate => {}
        whole => return Ok(IsmPass::Whole(whole)),
    }

    let covers = staircases(p, &models, &ranges, &slot);
    let mut cells = Vec::new();
    let mut enc = vec![Interval::ZERO; p.measurements.len()];
    for j in CellIter::new(grid.dim(), grid.resolution()) {
        if covers.iter().any(|c| c.cells_excluded(&j)) {
            continue;
        }
        for (k, m) in p.measurements.iter().enumerate() {
            enc[k] = models[slot(m)].cell(&j)?;
        }
        let class = classify_enclosures(&p.measurements, &enc);
        cells.push(CellClass {
            cell: grid.cell_box(&j),
            index: j,
            class,
        });
    }
    Ok(IsmPass::Cells(cells))
}

fn staircases(
    p: &GpeProblem,
    models: &IsmVector,
    ranges: &[Interval],
    slot: &dyn Fn(&Measurement) -> usize,
) -> Vec<StaircaseCovers> {
    let mut perms = vec![None; models.len()];
    let mut covers = Vec::new();
    for (m, r) in p.measurements.iter().zip(ranges) {
        if r.is_subset(m.band) {
            continue;
        }
        let k = slot(m);
        let perm = perms[k].get_or_insert_with(|| sort_rows(&models[k]));
        let c = build_staircases(&models[k], perm, m.band, p.max_corners);
        if !c.is_empty() {
            covers.push(c);
        }
    }
    covers
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubes(y: (f64, f64), bounds: &[(f64, f64)], eps: f64) -> GpeProblem {
        let e = Expr::parse("x1^3 + x2^3").unwrap();
        let band = Interval::new(y.0, y.1).unwrap();
        GpeProblem::new(
            e,
            IntervalBox::from_bounds(bounds).unwrap(),
            vec![Measurement::with_band(0, band).unwrap()],
            eps,
        )
        .unwrap()
    }

    #[test]
    fn classify_examples() {
        let p = cubes((-2.0, 2.0), &[(-3.0, 3.0), (-3.0, 3.0)], 0.1);
        let b = |v: &[(f64, f64)]| IntervalBox::from_bounds(v).unwrap();
        assert_eq!(classify_box(&p, &b(&[(0.0, 0.5), (0.0, 0.5)])), BoxClass::Interior);
        assert_eq!(classify_box(&p, &b(&[(2.0, 3.0), (2.0, 3.0)])), BoxClass::Excluded);
        assert_eq!(classify_box(&p, &b(&[(0.0, 2.0), (0.0, 2.0)])), BoxClass::Indeterminate);
    }

    #[test]
    fn domain_violation_is_indeterminate() {
        let e = Expr::parse("log(x1)").unwrap();
        let p = GpeProblem::new(
            e,
            IntervalBox::from_bounds(&[(-1.0, 1.0)]).unwrap(),
            vec![Measurement::new(0, 0.0, 0.1).unwrap()],
            0.25,
        )
        .unwrap();
        let x = p.domain.clone();
        assert_eq!(classify_box(&p, &x), BoxClass::Indeterminate);
        for engine in [Engine::Sivia, Engine::Ism] {
            let sp = solve(&p.clone().with_engine(engine)).unwrap();
            assert!(sp.covers(&[1.0]), "{engine}");
        }
    }

    #[test]
    fn range_as_band_is_one_iteration() {
        let p = cubes((0.0, 16.0), &[(0.0, 2.0), (0.0, 2.0)], 0.1);
        let sp = sivia(&p).unwrap();
        assert_eq!(sp.interior, vec![p.domain.clone()]);
        assert!(sp.boundary.is_empty());
        assert_eq!(sp.stats.iterations, 1);
    }

    #[test]
    fn disjoint_band_is_empty() {
        for engine in [Engine::Sivia, Engine::Ism] {
            let p = cubes((100.0, 200.0), &[(0.0, 2.0), (0.0, 2.0)], 0.1).with_engine(engine);
            let sp = solve(&p).unwrap();
            assert!(sp.interior.is_empty() && sp.boundary.is_empty());
            assert_eq!(sp.stats.iterations, 1);
        }
    }

    #[test]
    fn boundary_boxes_are_small_and_cover_solutions() {
        for engine in [Engine::Sivia, Engine::Ism] {
            for n in [1, 2, 5] {
                let p = cubes((-2.0, 2.0), &[(-3.0, 3.0), (-3.0, 3.0)], 0.05)
                    .with_engine(engine)
                    .with_grid(n);
                let sp = solve(&p).unwrap();
                assert!(sp.boundary.iter().all(|b| b.diam() <= 0.05));
                for a in 0..=60 {
                    for b in 0..=60 {
                        let x = [-3.0 + 0.1 * a as f64, -3.0 + 0.1 * b as f64];
                        let f = x[0].powi(3) + x[1].powi(3);
                        if (-2.0..=2.0).contains(&f) {
                            assert!(sp.covers(&x), "{engine} N={n} {x:?}");
                        }
                        if sp.in_interior(&x) {
                            assert!((-2.0..=2.0).contains(&f));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        for engine in [Engine::Sivia, Engine::Ism] {
            let mut p = cubes((-2.0, 2.0), &[(-3.0, 3.0), (-3.0, 3.0)], 0.02).with_engine(engine);
            let seq = solve(&p).unwrap();
            p.parallel = true;
            let par = solve(&p).unwrap();
            assert_eq!(seq.interior, par.interior);
            assert_eq!(seq.boundary, par.boundary);
            assert_eq!(seq.stats.iterations, par.stats.iterations);
        }
    }

    #[test]
    fn budget_exceeded_keeps_partial_enclosure() {
        let mut p = cubes((-2.0, 2.0), &[(-3.0, 3.0), (-3.0, 3.0)], 1e-3);
        p.budget = 10;
        match sivia(&p) {
            Err(Error::BudgetExceeded { iterations, partial }) => {
                assert_eq!(iterations, 10);
                assert!(partial.covers(&[0.0, 0.0]));
                assert!(partial.covers(&[1.2, -0.3]));
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn validation_names_fields() {
        let e = Expr::parse("x1").unwrap();
        let d = IntervalBox::from_bounds(&[(0.0, 1.0)]).unwrap();
        let m = vec![Measurement::new(0, 0.5, 0.1).unwrap()];
        let err = GpeProblem::new(e.clone(), d.clone(), m.clone(), 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidProblem { ref field, .. } if field == "epsilon"));
        let err = GpeProblem::new(e.clone(), d.clone(), vec![], 0.1).unwrap_err();
        assert!(matches!(err, Error::InvalidProblem { ref field, .. } if field == "measurements"));
        let bad = vec![Measurement::new(3, 0.5, 0.1).unwrap()];
        assert!(GpeProblem::new(e, d, bad, 0.1).is_err());
    }
}
