//! Staircase pruning of grid cells.
//!
//! Sort each model row by lower bounds (decreasing) and by upper bounds
//! (increasing). In the lower-bound order the cell sum `sum_i lo(A_i[pi_i(q_i)])`
//! is non-increasing in every sorted position `q_i`, so the cells whose sum
//! exceeds `sup Y` form a downward-closed set of sorted positions. It is
//! described by its maximal elements (the above corners). The upper-bound
//! order gives the symmetric set of cells lying strictly below `inf Y`.
//!
//! Both inequalities are strict: a cell touching `Y` is never excluded.
//! Corners are sorted-position vectors, 0-based. Any subset of the maximal
//! corners is a sound cover, so enumeration may stop at a configured cap.

use serde::Serialize;

use crate::interval::Interval;
use crate::ism::Ism;

/// Default number of corners kept per side.
pub const DEFAULT_MAX_CORNERS: usize = 64;

/// Per-row sort orders of an [`Ism`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowPermutations {
    /// `lower[i][q]` is the column with the `q`-th largest lower bound.
    pub lower: Vec<Vec<usize>>,
    /// `upper[i][q]` is the column with the `q`-th smallest upper bound.
    pub upper: Vec<Vec<usize>>,
    #[serde(skip)]
    lower_pos: Vec<Vec<usize>>,
    #[serde(skip)]
    upper_pos: Vec<Vec<usize>>,
}

impl RowPermutations {
    /// Sorted position of column `j` in the lower-bound order of row `i`.
    pub fn lower_position(&self, i: usize, j: usize) -> usize {
        self.lower_pos[i][j]
    }

    /// Sorted position of column `j` in the upper-bound order of row `i`.
    pub fn upper_position(&self, i: usize, j: usize) -> usize {
        self.upper_pos[i][j]
    }
}

fn inverse(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (q, &j) in p.iter().enumerate() {
        inv[j] = q;
    }
    inv
}

/// Stable per-row sorts, `O(n N log N)`.
pub fn sort_rows(a: &Ism) -> RowPermutations {
    let n = a.resolution();
    let mut lower = Vec::with_capacity(a.rows());
    let mut upper = Vec::with_capacity(a.rows());
    for i in 0..a.rows() {
        let row = a.row(i);
        let mut l: Vec<usize> = (0..n).collect();
        l.sort_by(|&p, &q| row[q].lo().total_cmp(&row[p].lo()));
        let mut u: Vec<usize> = (0..n).collect();
        u.sort_by(|&p, &q| row[p].hi().total_cmp(&row[q].hi()));
        lower.push(l);
        upper.push(u);
    }
    let lower_pos = lower.iter().map(|p| inverse(p)).collect();
    let upper_pos = upper.iter().map(|p| inverse(p)).collect();
    RowPermutations {
        lower,
        upper,
        lower_pos,
        upper_pos,
    }
}

/// Implicit description of the cells proven infeasible for one measurement.
#[derive(Clone, Debug, Serialize)]
pub struct StaircaseCovers {
    /// Corners of regions where the model lies strictly above `Y`.
    pub corners_above: Vec<Vec<usize>>,
    /// Corners of regions where the model lies strictly below `Y`.
    pub corners_below: Vec<Vec<usize>>,
    pub perms: RowPermutations,
    /// Whether either corner list was cut at the cap.
    pub truncated: bool,
    #[serde(skip)]
    rows: usize,
    #[serde(skip)]
    resolution: usize,
}

/// Enumerate staircase corners of `a` against `y`; `max_corners = None`
/// keeps the full frontier.
pub fn build_staircases(
    a: &Ism,
    perms: &RowPermutations,
    y: Interval,
    max_corners: Option<usize>,
) -> StaircaseCovers {
    let n = a.rows();
    let res = a.resolution();
    let above_ok = |p: &[usize]| {
        let s = Interval::sum(p.iter().enumerate().map(|(i, &q)| a.coeff(i, perms.lower[i][q])));
        s.lo() > y.hi()
    };
    let below_ok = |p: &[usize]| {
        let s = Interval::sum(p.iter().enumerate().map(|(i, &q)| a.coeff(i, perms.upper[i][q])));
        s.hi() < y.lo()
    };
    let (corners_above, t1) = if y.is_empty() {
        (Vec::new(), false)
    } else {
        frontier(n, res, &above_ok, max_corners)
    };
    let (corners_below, t2) = if y.is_empty() {
        (Vec::new(), false)
    } else {
        frontier(n, res, &below_ok, max_corners)
    };
    StaircaseCovers {
        corners_above,
        corners_below,
        perms: perms.clone(),
        truncated: t1 || t2,
        rows: n,
        resolution: res,
    }
}

/// Maximal elements of the downward-closed set `{p in [0, res)^n : ok(p)}`
/// in lexicographic order.
fn frontier(
    n: usize,
    res: usize,
    ok: &dyn Fn(&[usize]) -> bool,
    cap: Option<usize>,
) -> (Vec<Vec<usize>>, bool) {
    let mut out = Vec::new();
    let mut p = vec![0; n];
    if n == 0 || !ok(&p) {
        return (out, false);
    }
    let truncated = walk(0, &mut p, res, ok, cap, &mut out);
    (out, truncated)
}

fn walk(
    d: usize,
    p: &mut Vec<usize>,
    res: usize,
    ok: &dyn Fn(&[usize]) -> bool,
    cap: Option<usize>,
    out: &mut Vec<Vec<usize>>,
) -> bool {
    let n = p.len();
    if d + 1 == n {
        p[d] = 0;
        if !ok(p) {
            return false;
        }
        // largest feasible last coordinate
        let (mut lo, mut hi) = (0, res - 1);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            p[d] = mid;
            if ok(p) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        p[d] = lo;
        let maximal = (0..d).all(|i| {
            if p[i] + 1 >= res {
                return true;
            }
            p[i] += 1;
            let dominated = ok(p);
            p[i] -= 1;
            !dominated
        });
        if maximal {
            if cap.is_some_and(|c| out.len() >= c) {
                return true;
            }
            out.push(p.clone());
        }
        return false;
    }
    for v in 0..res {
        p[d] = v;
        p[d + 1..].fill(0);
        if !ok(p) {
            break;
        }
        if walk(d + 1, p, res, ok, cap, out) {
            return true;
        }
    }
    false
}

impl StaircaseCovers {
    /// Whether cell `j` (column indices) lies under some corner.
    pub fn cells_excluded(&self, j: &[usize]) -> bool {
        let dominated = |corners: &[Vec<usize>], pos: &dyn Fn(usize, usize) -> usize| {
            corners
                .iter()
                .any(|c| c.iter().enumerate().all(|(i, &ci)| pos(i, j[i]) <= ci))
        };
        dominated(&self.corners_above, &|i, ji| self.perms.lower_position(i, ji))
            || dominated(&self.corners_below, &|i, ji| self.perms.upper_position(i, ji))
    }

    /// Whether every cell is excluded.
    pub fn excludes_all(&self) -> bool {
        let full = |c: &Vec<usize>| c.iter().all(|&q| q + 1 == self.resolution);
        self.corners_above.iter().any(full) || self.corners_below.iter().any(full)
    }

    pub fn is_empty(&self) -> bool {
        self.corners_above.is_empty() && self.corners_below.is_empty()
    }

    /// Cells not under any corner, in lexicographic order of column indices.
    pub fn surviving_cells(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let all_gone = self.excludes_all();
        CellIter::new(self.rows, self.resolution)
            .filter(move |j| !all_gone && !self.cells_excluded(j))
    }
}

/// Lexicographic walk over `[0, res)^n`.
#[derive(Clone, Debug)]
pub struct CellIter {
    next: Option<Vec<usize>>,
    res: usize,
}

impl CellIter {
    pub fn new(n: usize, res: usize) -> Self {
        CellIter {
            next: (res > 0).then(|| vec![0; n]),
            res,
        }
    }
}

impl Iterator for CellIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        let mut d = succ.len();
        loop {
            if d == 0 {
                break;
            }
            d -= 1;
            succ[d] += 1;
            if succ[d] < self.res {
                self.next = Some(succ);
                break;
            }
            succ[d] = 0;
        }
        Some(cur)
    }
}
