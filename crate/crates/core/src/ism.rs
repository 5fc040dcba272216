//! Interval superposition models.
//!
//! An [`Ism`] over a box `X` split into `N` equal pieces per coordinate is an
//! `n x N` matrix of intervals `A`. At a point `x` the model value is
//! `sum_i A[i][j_i(x)]`, where `j_i(x)` is the piece of coordinate `i`
//! containing `x_i`. Only `n*N` intervals are stored for the `N^n` cells.
//!
//! Indices are 0-based. A point on a shared piece boundary belongs to the
//! right-hand piece; the last piece is closed.

use std::sync::Arc;

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Node};
use crate::interval::{AtomTag, Interval, IntervalBox};

/// Uniform partition of a box into `N` pieces per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    domain: IntervalBox,
    n: usize,
    h: Vec<f64>,
    edges: Vec<Vec<f64>>,
}

impl Grid {
    pub fn new(domain: IntervalBox, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroResolution);
        }
        let mut h = Vec::with_capacity(domain.dim());
        let mut edges = Vec::with_capacity(domain.dim());
        for (i, c) in domain.iter().enumerate() {
            if c.lo() >= c.hi() {
                return Err(Error::DegenerateGrid { coord: i });
            }
            let hi = (c.hi() - c.lo()) / n as f64;
            let mut e: Vec<f64> = (0..n).map(|j| c.lo() + j as f64 * hi).collect();
            e.push(c.hi());
            // rounding must not reorder edges
            for j in 1..=n {
                if e[j] < e[j - 1] {
                    e[j] = e[j - 1];
                }
            }
            h.push(hi);
            edges.push(e);
        }
        Ok(Grid {
            domain,
            n,
            h,
            edges,
        })
    }

    pub fn domain(&self) -> &IntervalBox {
        &self.domain
    }

    /// Pieces per coordinate.
    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn step(&self) -> &[f64] {
        &self.h
    }

    /// Piece `j` of coordinate `i`.
    pub fn cell(&self, i: usize, j: usize) -> Interval {
        Interval::from_sorted(self.edges[i][j], self.edges[i][j + 1])
    }

    pub fn cell_box(&self, index: &[usize]) -> IntervalBox {
        IntervalBox::new(index.iter().enumerate().map(|(i, &j)| self.cell(i, j)).collect())
            .expect("grid cells are non-empty")
    }

    /// Piece of coordinate `i` containing `x` (half-open pieces).
    pub fn locate(&self, i: usize, x: f64) -> Option<usize> {
        let e = &self.edges[i];
        if !(e[0] <= x && x <= e[self.n]) {
            return None;
        }
        let guess = ((x - e[0]) / self.h[i]).floor();
        let mut j = if guess.is_finite() && guess >= 0.0 {
            (guess as usize).min(self.n - 1)
        } else {
            0
        };
        while j > 0 && x < e[j] {
            j -= 1;
        }
        while j + 1 < self.n && x >= e[j + 1] {
            j += 1;
        }
        Some(j)
    }

    pub fn cell_count(&self) -> u128 {
        (self.n as u128).saturating_pow(self.dim() as u32)
    }
}

/// Interval superposition model of a scalar function.
#[derive(Clone, Debug, PartialEq)]
pub struct Ism {
    grid: Arc<Grid>,
    coeffs: Vec<Interval>,
}

impl Ism {
    fn filled(grid: &Arc<Grid>, value: Interval) -> Self {
        Ism {
            grid: Arc::clone(grid),
            coeffs: vec![value; grid.dim() * grid.n],
        }
    }

    /// Model of the coordinate function `x_i`: row `i` holds the grid pieces,
    /// every other row is zero.
    pub fn var(grid: &Arc<Grid>, i: usize) -> Result<Self> {
        if i >= grid.dim() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: grid.dim(),
            });
        }
        let mut m = Ism::filled(grid, Interval::ZERO);
        for j in 0..grid.n {
            m.coeffs[i * grid.n + j] = grid.cell(i, j);
        }
        Ok(m)
    }

    /// Constant model: `c` in every piece of row 0.
    pub fn constant(grid: &Arc<Grid>, c: Interval) -> Result<Self> {
        if c.is_empty() || !c.is_finite() {
            return Err(Error::EmptyOperand);
        }
        let mut m = Ism::filled(grid, Interval::ZERO);
        m.coeffs[..grid.n].fill(c);
        Ok(m)
    }

    /// Build from an explicit row-major `n x N` coefficient matrix.
    pub fn from_coeffs(grid: &Arc<Grid>, coeffs: Vec<Interval>) -> Result<Self> {
        let expected = grid.dim() * grid.n;
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| c.is_empty() || !c.is_finite()) {
            return Err(Error::EmptyOperand);
        }
        Ok(Ism {
            grid: Arc::clone(grid),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn rows(&self) -> usize {
        self.grid.dim()
    }

    pub fn resolution(&self) -> usize {
        self.grid.n
    }

    pub fn coeffs(&self) -> &[Interval] {
        &self.coeffs
    }

    pub fn row(&self, i: usize) -> &[Interval] {
        &self.coeffs[i * self.grid.n..(i + 1) * self.grid.n]
    }

    pub fn coeff(&self, i: usize, j: usize) -> Interval {
        self.coeffs[i * self.grid.n + j]
    }

    /// Smallest lower bound in row `i`.
    pub fn row_min(&self, i: usize) -> f64 {
        self.row(i).iter().map(|c| c.lo()).fold(f64::INFINITY, f64::min)
    }

    /// Largest upper bound in row `i`.
    pub fn row_max(&self, i: usize) -> f64 {
        self.row(i).iter().map(|c| c.hi()).fold(f64::NEG_INFINITY, f64::max)
    }

    fn row_hull(&self, i: usize) -> Interval {
        Interval::from_sorted(self.row_min(i), self.row_max(i))
    }

    /// Row with the largest total width; lowest index on ties.
    fn widest_row(&self) -> usize {
        let widths: Vec<f64> = (0..self.rows())
            .map(|i| self.row(i).iter().map(|c| c.diam()).sum())
            .collect();
        let mut k = 0;
        for (i, &w) in widths.iter().enumerate() {
            if w > widths[k] {
                k = i;
            }
        }
        k
    }

    fn same_grid(&self, other: &Ism) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn map(&self, f: impl Fn(Interval) -> Interval) -> Ism {
        Ism {
            grid: Arc::clone(&self.grid),
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }

    fn inflate_row(&mut self, k: usize, r: f64) {
        if r > 0.0 {
            let slack = Interval::UNIT.scale(r);
            let n = self.grid.n;
            for c in &mut self.coeffs[k * n..(k + 1) * n] {
                *c = *c + slack;
            }
        }
    }

    /// `[lambda, mu]`: the sum of per-row minima and maxima.
    pub fn range(&self) -> Interval {
        Interval::sum((0..self.rows()).map(|i| self.row_hull(i)))
    }

    /// Model value at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<Interval> {
        if x.len() != self.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                found: x.len(),
            });
        }
        let mut acc = Interval::ZERO;
        for (i, &xi) in x.iter().enumerate() {
            let j = self.grid.locate(i, xi).ok_or(Error::PointOutsideDomain)?;
            acc = acc + self.coeff(i, j);
        }
        Ok(acc)
    }

    /// Enclosure over the cell with piece indices `index`.
    pub fn cell(&self, index: &[usize]) -> Result<Interval> {
        if index.len() != self.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                found: index.len(),
            });
        }
        let mut acc = Interval::ZERO;
        for (i, &j) in index.iter().enumerate() {
            if j >= self.grid.n {
                return Err(Error::IndexOutOfRange {
                    index: j,
                    len: self.grid.n,
                });
            }
            acc = acc + self.coeff(i, j);
        }
        Ok(acc)
    }

    pub fn add(&self, other: &Ism) -> Result<Ism> {
        self.same_grid(other)?;
        Ok(Ism {
            grid: Arc::clone(&self.grid),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Ism) -> Result<Ism> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Ism {
        self.map(|c| -c)
    }

    pub fn scale(&self, c: f64) -> Ism {
        self.map(|a| a.scale(c))
    }

    /// Multiply by an interval constant, piece by piece.
    pub fn scale_interval(&self, c: Interval) -> Ism {
        self.map(|a| a * c)
    }

    /// Univariate composition rule.
    pub fn compose(&self, atom: AtomTag) -> Result<Ism> {
        let n = self.rows();
        let lows: Vec<f64> = (0..n).map(|i| self.row_min(i)).collect();
        let highs: Vec<f64> = (0..n).map(|i| self.row_max(i)).collect();
        let centers: Vec<f64> = (0..n)
            .map(|i| central_point(atom, lows[i], highs[i]))
            .collect();
        let omega = Interval::sum(centers.iter().map(|&a| Interval::point(a)));

        let frac = Interval::point((n - 1) as f64) * Interval::point(n as f64).recip()?;
        let base = frac * atom.apply(omega)?;
        let mut out = Ism::filled(&self.grid, Interval::ZERO);
        let pieces = self.grid.n;
        for (i, &a) in centers.iter().enumerate() {
            let shift = omega - Interval::point(a);
            for j in 0..pieces {
                let v = atom.apply(shift + self.coeff(i, j))?;
                out.coeffs[i * pieces + j] = v - base;
            }
        }

        let r = remainder_bound(atom, &lows, &highs, &centers, omega)?;
        out.inflate_row(self.widest_row(), r);
        Ok(out)
    }

    /// Product rule.
    pub fn mul(&self, other: &Ism) -> Result<Ism> {
        self.same_grid(other)?;
        let n = self.rows();
        let pieces = self.grid.n;
        let (mut ca, mut cb, mut ra, mut rb) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            let ha = self.row_hull(i);
            let hb = other.row_hull(i);
            ca[i] = ha.mid();
            cb[i] = hb.mid();
            ra[i] = radius_about(ha, ca[i]);
            rb[i] = radius_about(hb, cb[i]);
        }
        let a = Interval::sum(ca.iter().map(|&v| Interval::point(v)));
        let b = Interval::sum(cb.iter().map(|&v| Interval::point(v)));
        let c = Interval::sum((0..n).map(|i| Interval::point(ca[i]) * Interval::point(cb[i])));
        let omega = (a * b - c) * Interval::point(n as f64).recip()?;

        // (sum rho_A)(sum rho_B) - sum rho_A rho_B, written so that a single
        // active row gives exactly zero
        let sum_rb = Interval::sum(rb.iter().map(|&v| Interval::point(v)));
        let r = Interval::sum(
            (0..n).map(|i| Interval::point(ra[i]) * (sum_rb - Interval::point(rb[i]))),
        )
        .hi()
        .max(0.0);

        let mut out = Ism::filled(&self.grid, Interval::ZERO);
        for i in 0..n {
            let sa = a - Interval::point(ca[i]);
            let sb = b - Interval::point(cb[i]);
            let corr = sa * sb + omega;
            for j in 0..pieces {
                let v = (self.coeff(i, j) + sa) * (other.coeff(i, j) + sb);
                out.coeffs[i * pieces + j] = v - corr;
            }
        }
        out.inflate_row(self.widest_row(), r);
        Ok(out)
    }

    /// Integer power. A model with one varying row is raised piecewise;
    /// otherwise square-and-multiply over [`Ism::mul`].
    pub fn powi(&self, k: i32) -> Result<Ism> {
        if k == 0 {
            return Ism::constant(&self.grid, Interval::ONE);
        }
        if k < 0 {
            return self.powi(-k)?.compose(AtomTag::Recip);
        }
        if k == 1 {
            return Ok(self.clone());
        }
        if let Some(row) = self.single_varying_row() {
            let offset = Interval::sum((0..self.rows()).filter(|&i| i != row).map(|i| self.row_hull(i)));
            let mut out = Ism::filled(&self.grid, Interval::ZERO);
            let pieces = self.grid.n;
            for j in 0..pieces {
                out.coeffs[row * pieces + j] = (self.coeff(row, j) + offset).powi(k)?;
            }
            return Ok(out);
        }
        let mut base = self.clone();
        let mut acc: Option<Ism> = None;
        let mut e = k as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(m) => m.mul(&base)?,
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc.expect("k >= 1"))
    }

    /// The only row whose hull is wider than rounding noise relative to the
    /// widest row, if there is exactly one such row.
    fn single_varying_row(&self) -> Option<usize> {
        let k = self.widest_row();
        let wk = self.row_hull(k).diam();
        let others_flat = (0..self.rows())
            .filter(|&i| i != k)
            .all(|i| self.row_hull(i).diam() <= 1e-9 * wk);
        others_flat.then_some(k)
    }
}

impl Serialize for Ism {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[Interval]> = (0..self.rows()).map(|i| self.row(i)).collect();
        let mut st = s.serialize_struct("Ism", 3)?;
        st.serialize_field("domain", self.grid.domain())?;
        st.serialize_field("N", &self.grid.n)?;
        st.serialize_field("A", &rows)?;
        st.end()
    }
}

/// Largest distance from `center` to an endpoint of `hull`, rounded up.
fn radius_about(hull: Interval, center: f64) -> f64 {
    let up = (Interval::point(hull.hi()) - Interval::point(center)).hi();
    let down = (Interval::point(center) - Interval::point(hull.lo())).hi();
    up.max(down).max(0.0)
}

fn central_point(atom: AtomTag, lo: f64, hi: f64) -> f64 {
    let a = match atom {
        // log((e^U + e^L) / 2), evaluated without overflow
        AtomTag::Exp => hi + ((1.0 + (lo - hi).exp()) / 2.0).ln(),
        _ => 0.5 * lo + 0.5 * hi,
    };
    if a.is_finite() {
        a.clamp(lo, hi)
    } else {
        0.5 * lo + 0.5 * hi
    }
}

/// Bound on `|sum_i f(w + d_i) - (n-1) f(w) - f(w + sum_i d_i)|` over
/// `lows[i] <= a_i + d_i <= highs[i]`. Rows with `d_i` identically zero drop
/// out of the defect, so at most one varying row gives zero.
fn remainder_bound(
    atom: AtomTag,
    lows: &[f64],
    highs: &[f64],
    centers: &[f64],
    omega: Interval,
) -> Result<f64> {
    let active: Vec<usize> = (0..lows.len()).filter(|&i| lows[i] != highs[i]).collect();
    if active.len() <= 1 {
        return Ok(0.0);
    }
    let deltas: Vec<Interval> = active
        .iter()
        .map(|&i| {
            let lo = (Interval::point(lows[i]) - Interval::point(centers[i])).lo();
            let hi = (Interval::point(highs[i]) - Interval::point(centers[i])).hi();
            Interval::from_sorted(lo.min(0.0), hi.max(0.0))
        })
        .collect();

    if atom == AtomTag::Exp {
        return exp_remainder(&active, lows, highs, centers, omega);
    }

    let total = Interval::sum(deltas.iter().copied());
    let fw = atom.apply(omega)?;
    let mut defect = Interval::ZERO;
    for d in &deltas {
        defect = defect + atom.apply(omega + *d)?;
    }
    let m = Interval::point((active.len() - 1) as f64);
    defect = defect - m * fw - atom.apply(omega + total)?;
    let naive = defect.mag();

    // |D| <= sup|f''| * sum_{i<k} rho_i rho_k
    let mixed = atom.second_derivative(omega + total).ok().map(|f2| {
        let rhos: Vec<Interval> = deltas.iter().map(|d| Interval::point(d.mag())).collect();
        let s = Interval::sum(rhos.iter().copied());
        let cross = Interval::sum(rhos.iter().map(|&r| r * (s - r)));
        (Interval::point(0.5 * f2.mag()) * cross).hi()
    });
    let r = match mixed {
        Some(v) if v.is_finite() => naive.min(v),
        _ => naive,
    };
    if !r.is_finite() {
        return Err(Error::domain(atom.name(), omega + total));
    }
    Ok(r.max(0.0))
}

/// `e^w (prod(1 + s_i) - sum s_i - 1)` with
/// `s_i = max(e^(U_i - a_i) - 1, 1 - e^(L_i - a_i))`.
fn exp_remainder(
    active: &[usize],
    lows: &[f64],
    highs: &[f64],
    centers: &[f64],
    omega: Interval,
) -> Result<f64> {
    let mut s = Vec::with_capacity(active.len());
    for &i in active {
        let a = Interval::point(centers[i]);
        let up = (Interval::point(highs[i]) - a).exp()? - Interval::ONE;
        let down = Interval::ONE - (Interval::point(lows[i]) - a).exp()?;
        s.push(Interval::point(up.hi().max(down.hi()).max(0.0)));
    }
    let prod = s.iter().fold(Interval::ONE, |acc, &si| acc * (Interval::ONE + si));
    let tail = prod - Interval::sum(s.iter().copied()) - Interval::ONE;
    let r = (omega.exp()? * tail).hi().max(0.0);
    if !r.is_finite() {
        return Err(Error::domain("exp", omega));
    }
    Ok(r)
}

/// Models of several outputs on one grid.
#[derive(Clone, Debug, Serialize)]
#[serde(transparent)]
pub struct IsmVector {
    components: Vec<Ism>,
}

impl IsmVector {
    pub fn new(components: Vec<Ism>) -> Result<Self> {
        if let Some(first) = components.first() {
            for c in &components[1..] {
                first.same_grid(c)?;
            }
        }
        Ok(IsmVector { components })
    }

    pub fn components(&self) -> &[Ism] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn grid(&self) -> Option<&Arc<Grid>> {
        self.components.first().map(|c| c.grid())
    }
}

impl std::ops::Index<usize> for IsmVector {
    type Output = Ism;
    fn index(&self, i: usize) -> &Ism {
        &self.components[i]
    }
}

/// Propagate models through every output of `expr`.
pub fn ism_of_expr(expr: &Expr, grid: &Arc<Grid>) -> Result<IsmVector> {
    let all: Vec<usize> = (0..expr.n_outputs()).collect();
    ism_of_outputs(expr, grid, &all)
}

/// Propagate models through the DAG for the selected outputs only.
pub fn ism_of_outputs(expr: &Expr, grid: &Arc<Grid>, outputs: &[usize]) -> Result<IsmVector> {
    if expr.n_vars() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: expr.n_vars(),
        });
    }
    if let Some(&o) = outputs.iter().find(|&&o| o >= expr.n_outputs()) {
        return Err(Error::IndexOutOfRange {
            index: o,
            len: expr.n_outputs(),
        });
    }
    let nodes = expr.nodes();
    let live = expr.live_mask(outputs);
    let is_const = expr.constant_mask();

    let mut consts: Vec<Interval> = vec![Interval::EMPTY; nodes.len()];
    let mut models: Vec<Option<Ism>> = vec![None; nodes.len()];
    for (idx, node) in nodes.iter().enumerate() {
        if is_const[idx] {
            consts[idx] = const_value(node, &consts).map_err(|e| e.at_node(idx))?;
        }
        if !live[idx] {
            continue;
        }
        let m = |k: usize| models[k].as_ref().expect("children precede parents");
        let model = if is_const[idx] {
            Ism::constant(grid, consts[idx])
        } else {
            match *node {
                Node::Var(k) => Ism::var(grid, k),
                Node::Const(_) => unreachable!("constant nodes handled above"),
                Node::Add(l, r) => m(l).add(m(r)),
                Node::Sub(l, r) => m(l).sub(m(r)),
                Node::Mul(l, r) if is_const[l] => Ok(m(r).scale_interval(consts[l])),
                Node::Mul(l, r) if is_const[r] => Ok(m(l).scale_interval(consts[r])),
                Node::Mul(l, r) => m(l).mul(m(r)),
                Node::Neg(u) => Ok(m(u).neg()),
                Node::ScalarMul(c, u) => Ok(m(u).scale(c)),
                Node::Pow(u, k) => m(u).powi(k),
                Node::Univariate(tag, u) => m(u).compose(tag),
            }
        }
        .map_err(|e| e.at_node(idx))?;
        models[idx] = Some(model);
    }
    let components = outputs
        .iter()
        .map(|&o| models[expr.outputs()[o]].clone().expect("outputs are live"))
        .collect();
    IsmVector::new(components)
}

fn const_value(node: &Node, consts: &[Interval]) -> Result<Interval> {
    Ok(match *node {
        Node::Const(c) => c.enclosure(),
        Node::Add(l, r) => consts[l] + consts[r],
        Node::Sub(l, r) => consts[l] - consts[r],
        Node::Mul(l, r) => consts[l] * consts[r],
        Node::Neg(u) => -consts[u],
        Node::ScalarMul(c, u) => consts[u].scale(c),
        Node::Pow(u, k) => consts[u].powi(k)?,
        Node::Univariate(tag, u) => tag.apply(consts[u])?,
        Node::Var(_) => unreachable!("variables are never constant"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn grid(bounds: &[(f64, f64)], n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(IntervalBox::from_bounds(bounds).unwrap(), n).unwrap())
    }

    #[test]
    fn grid_rejects_degenerate() {
        let b = IntervalBox::from_bounds(&[(0.0, 1.0), (2.0, 2.0)]).unwrap();
        assert!(matches!(Grid::new(b.clone(), 3), Err(Error::DegenerateGrid { coord: 1 })));
        let b = IntervalBox::from_bounds(&[(0.0, 1.0)]).unwrap();
        assert!(matches!(Grid::new(b, 0), Err(Error::ZeroResolution)));
    }

    #[test]
    fn grid_cells_reconstruct_partition() {
        let g = grid(&[(-3.0, 3.0)], 20);
        assert_eq!(g.cell(0, 0).lo(), -3.0);
        assert_eq!(g.cell(0, 19).hi(), 3.0);
        for j in 1..20 {
            assert_eq!(g.cell(0, j - 1).hi(), g.cell(0, j).lo());
            assert!((g.cell(0, j).lo() - (-3.0 + j as f64 * 0.3)).abs() < 1e-14);
        }
    }

    #[test]
    fn var_initialization() {
        let g = grid(&[(0.0, 2.0), (0.0, 2.0)], 2);
        let m = Ism::var(&g, 0).unwrap();
        assert_eq!(m.row(0), &[iv(0.0, 1.0), iv(1.0, 2.0)]);
        assert_eq!(m.row(1), &[Interval::ZERO, Interval::ZERO]);
        assert!(matches!(Ism::var(&g, 2), Err(Error::IndexOutOfRange { .. })));
        let g1 = grid(&[(0.0, 2.0), (-1.0, 5.0)], 1);
        assert_eq!(Ism::var(&g1, 1).unwrap().row(1), &[iv(-1.0, 5.0)]);
    }

    #[test]
    fn var_eval_width_is_step() {
        let g = grid(&[(0.0, 1.0), (0.0, 3.0)], 7);
        let m = Ism::var(&g, 0).unwrap();
        for &x in &[0.0, 0.13, 0.5, 0.99, 1.0] {
            let v = m.eval(&[x, 1.0]).unwrap();
            assert!(v.contains(x));
            assert!((v.diam() - 1.0 / 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_model() {
        let g = grid(&[(0.0, 1.0), (0.0, 1.0)], 4);
        let c = Ism::constant(&g, iv(2.0, 2.0)).unwrap();
        assert_eq!(c.eval(&[0.3, 0.7]).unwrap(), iv(2.0, 2.0));
        assert_eq!(c.range(), iv(2.0, 2.0));
        assert!(Ism::constant(&g, Interval::EMPTY).is_err());
    }

    #[test]
    fn half_open_cells() {
        let g = grid(&[(0.0, 2.0)], 2);
        let m = Ism::var(&g, 0).unwrap();
        assert_eq!(m.eval(&[0.5]).unwrap(), iv(0.0, 1.0));
        assert_eq!(m.eval(&[1.0]).unwrap(), iv(1.0, 2.0));
        assert_eq!(m.eval(&[2.0]).unwrap(), iv(1.0, 2.0));
        assert!(matches!(m.eval(&[2.5]), Err(Error::PointOutsideDomain)));
    }

    #[test]
    fn add_is_exact_for_separable_sums() {
        let g = grid(&[(0.0, 1.0), (0.0, 1.0)], 2);
        let s = Ism::var(&g, 0).unwrap().add(&Ism::var(&g, 1).unwrap()).unwrap();
        assert_eq!(s.cell(&[1, 0]).unwrap(), iv(0.5, 1.5));
        assert_eq!(s.range(), iv(0.0, 2.0));
        let zero = Ism::constant(&g, Interval::ZERO).unwrap();
        assert_eq!(s.add(&zero).unwrap(), s);
    }

    #[test]
    fn range_of_explicit_matrix() {
        let g = grid(&[(0.0, 1.0), (0.0, 1.0)], 2);
        let m = Ism::from_coeffs(&g, vec![iv(-1.0, 2.0), iv(2.0, 3.0), iv(0.0, 3.0), iv(-2.0, 1.0)]).unwrap();
        assert_eq!(m.range(), iv(-3.0, 6.0));
        let cells = [[0, 0], [0, 1], [1, 0], [1, 1]].map(|j| m.cell(&j).unwrap());
        assert_eq!(cells.iter().map(|c| c.lo()).fold(f64::INFINITY, f64::min), -3.0);
        assert_eq!(cells.iter().map(|c| c.hi()).fold(f64::NEG_INFINITY, f64::max), 6.0);
    }

    #[test]
    fn grid_mismatch() {
        let a = Ism::var(&grid(&[(0.0, 1.0)], 2), 0).unwrap();
        let b = Ism::var(&grid(&[(0.0, 1.0)], 3), 0).unwrap();
        assert!(matches!(a.add(&b), Err(Error::GridMismatch)));
        assert!(matches!(a.mul(&b), Err(Error::GridMismatch)));
    }

    #[test]
    fn compose_single_row_is_plain_interval_image() {
        let g = grid(&[(0.0, 1.0)], 4);
        let x = Ism::var(&g, 0).unwrap();
        for atom in [AtomTag::Exp, AtomTag::Sin, AtomTag::Cos, AtomTag::Sqrt] {
            let c = x.compose(atom).unwrap();
            for j in 0..4 {
                assert_eq!(c.coeff(0, j), atom.apply(g.cell(0, j)).unwrap(), "{atom}");
            }
        }
    }

    #[test]
    fn exp_central_points_and_spread() {
        // for L = 0, U = 1 the log-mean center gives s = (e - 1)/(e + 1)
        let a = central_point(AtomTag::Exp, 0.0, 1.0);
        let e = std::f64::consts::E;
        assert!((a - ((e + 1.0) / 2.0).ln()).abs() < 1e-15);
        let s_up = (1.0 - a).exp() - 1.0;
        let s_down = 1.0 - (0.0 - a).exp();
        let s = (e - 1.0) / (e + 1.0);
        assert!((s_up - s).abs() < 1e-14 && (s_down - s).abs() < 1e-14);
        assert!((s - 0.4621171572600098).abs() < 1e-15);
    }

    #[test]
    fn compose_exp_of_sum_encloses() {
        let g = grid(&[(0.0, 1.0), (0.0, 1.0)], 10);
        let s = Ism::var(&g, 0).unwrap().add(&Ism::var(&g, 1).unwrap()).unwrap();
        let c = s.compose(AtomTag::Exp).unwrap();
        for a in 0..=20 {
            for b in 0..=20 {
                let x = [a as f64 / 20.0, b as f64 / 20.0];
                let v = c.eval(&x).unwrap();
                assert!(v.contains((x[0] + x[1]).exp()), "{x:?} {v}");
            }
        }
    }

    #[test]
    fn mul_single_row_has_no_remainder() {
        let g = grid(&[(1.0, 2.0)], 4);
        let x = Ism::var(&g, 0).unwrap();
        let sq = x.mul(&x).unwrap();
        for j in 0..4 {
            let c = g.cell(0, j);
            assert_eq!(sq.coeff(0, j), c * c);
        }
    }

    #[test]
    fn mul_by_constant_one_keeps_cells() {
        let g = grid(&[(0.0, 1.0), (-1.0, 2.0)], 3);
        let x = Ism::var(&g, 1).unwrap();
        let one = Ism::constant(&g, Interval::ONE).unwrap();
        let p = x.mul(&one).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                let want = x.cell(&[j, k]).unwrap();
                let got = p.cell(&[j, k]).unwrap();
                assert!(want.is_subset(got));
                assert!(got.diam() - want.diam() < 1e-12);
            }
        }
    }

    #[test]
    fn product_of_coordinates_encloses() {
        let g = grid(&[(0.0, 1.0), (0.0, 1.0)], 1);
        let p = Ism::var(&g, 0).unwrap().mul(&Ism::var(&g, 1).unwrap()).unwrap();
        for a in 0..=10 {
            for b in 0..=10 {
                let x = [a as f64 / 10.0, b as f64 / 10.0];
                assert!(p.eval(&x).unwrap().contains(x[0] * x[1]));
            }
        }
    }

    #[test]
    fn storage_is_rows_times_pieces() {
        let g = grid(&[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)], 17);
        let e = Expr::parse("x1*x2 + sin(x3)").unwrap();
        let m = ism_of_expr(&e, &g).unwrap();
        assert_eq!(m[0].coeffs().len(), 3 * 17);
    }

    #[test]
    fn eval_within_range() {
        let g = grid(&[(-1.0, 2.0), (0.0, 3.0)], 6);
        let e = Expr::parse("exp(x1*x2) - x2^2").unwrap();
        let m = &ism_of_expr(&e, &g).unwrap()[0];
        let r = m.range();
        for a in 0..=12 {
            for b in 0..=12 {
                let x = [-1.0 + a as f64 * 0.25, b as f64 * 0.25];
                assert!(m.eval(&x).unwrap().is_subset(r));
            }
        }
    }

    #[test]
    fn cubes_are_tight_per_cell() {
        let g = grid(&[(-3.0, 3.0), (-3.0, 3.0)], 20);
        let e = Expr::parse("x1^3 + x2^3").unwrap();
        let m = &ism_of_expr(&e, &g).unwrap()[0];
        let cell = m.cell(&[15, 4]).unwrap();
        let exact = g.cell(0, 15).powi(3).unwrap() + g.cell(1, 4).powi(3).unwrap();
        assert!(exact.is_subset(cell));
        assert!(cell.diam() - exact.diam() < 1e-12);
    }

    #[test]
    fn domain_violation_reports_node() {
        let g = grid(&[(-1.0, 1.0)], 4);
        let e = Expr::parse("log(x1)").unwrap();
        assert!(matches!(
            ism_of_expr(&e, &g),
            Err(Error::DomainViolation { node: Some(1), .. })
        ));
    }

    #[test]
    fn serializes_matrix() {
        let g = grid(&[(0.0, 2.0)], 2);
        let m = Ism::var(&g, 0).unwrap();
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["N"], 2);
        assert_eq!(v["A"], serde_json::json!([[[0.0, 1.0], [1.0, 2.0]]]));
        assert_eq!(v["domain"], serde_json::json!([[0.0, 2.0]]));
    }
}
