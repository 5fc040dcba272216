//! Closed real intervals and boxes.
//!
//! Every endpoint computation rounds outward. Basic arithmetic uses error-free
//! transformations (two-sum, fused multiply-add residuals) to decide whether a
//! rounded endpoint needs to move by one ulp, so exact results stay exact.
//! Library transcendentals are not correctly rounded and are widened by two
//! ulps per endpoint.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this magnitude a product residual may underflow, so products are
/// widened unconditionally.
const TINY: f64 = 1e-290;

/// A closed interval `[lo, hi]`, or the explicit empty set.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

/// Univariate atoms of the expression library.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomTag {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Recip,
}

impl AtomTag {
    pub const ALL: [AtomTag; 6] = [
        AtomTag::Exp,
        AtomTag::Log,
        AtomTag::Sin,
        AtomTag::Cos,
        AtomTag::Sqrt,
        AtomTag::Recip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AtomTag::Exp => "exp",
            AtomTag::Log => "log",
            AtomTag::Sin => "sin",
            AtomTag::Cos => "cos",
            AtomTag::Sqrt => "sqrt",
            AtomTag::Recip => "recip",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        AtomTag::ALL.into_iter().find(|a| a.name() == name)
    }

    /// Point evaluation in plain floating point.
    pub fn eval(self, x: f64) -> Result<f64> {
        let ok = match self {
            AtomTag::Log => x > 0.0,
            AtomTag::Sqrt => x >= 0.0,
            AtomTag::Recip => x != 0.0,
            _ => true,
        };
        if !ok {
            return Err(Error::domain(self.name(), Interval::point(x)));
        }
        Ok(match self {
            AtomTag::Exp => x.exp(),
            AtomTag::Log => x.ln(),
            AtomTag::Sin => x.sin(),
            AtomTag::Cos => x.cos(),
            AtomTag::Sqrt => x.sqrt(),
            AtomTag::Recip => 1.0 / x,
        })
    }

    /// Enclosure of the atom over `a`.
    pub fn apply(self, a: Interval) -> Result<Interval> {
        match self {
            AtomTag::Exp => a.exp(),
            AtomTag::Log => a.ln(),
            AtomTag::Sin => Ok(a.sin()),
            AtomTag::Cos => Ok(a.cos()),
            AtomTag::Sqrt => a.sqrt(),
            AtomTag::Recip => a.recip(),
        }
    }

    /// Enclosure of the second derivative over `a`.
    pub(crate) fn second_derivative(self, a: Interval) -> Result<Interval> {
        match self {
            AtomTag::Exp => a.exp(),
            AtomTag::Log => Ok(-a.powi(-2)?),
            AtomTag::Sin => Ok(-a.sin()),
            AtomTag::Cos => Ok(-a.cos()),
            // -1/4 x^(-3/2)
            AtomTag::Sqrt => {
                if a.lo <= 0.0 {
                    return Err(Error::domain("sqrt''", a));
                }
                let root = a.sqrt()?;
                Ok(Interval::point(-0.25) * (a * root).recip()?)
            }
            AtomTag::Recip => Ok(Interval::point(2.0) * a.powi(-3)?),
        }
    }
}

impl fmt::Display for AtomTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return s;
    }
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return s;
    }
    if two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    if !p.is_finite() {
        return p;
    }
    if p.abs() < TINY {
        return p.next_down();
    }
    if a.mul_add(b, -p) < 0.0 {
        p.next_down()
    } else {
        p
    }
}

fn mul_up(a: f64, b: f64) -> f64 {
    let p = a * b;
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    if !p.is_finite() {
        return p;
    }
    if p.abs() < TINY {
        return p.next_up();
    }
    if a.mul_add(b, -p) > 0.0 {
        p.next_up()
    } else {
        p
    }
}

/// Widen a libm result by two ulps each way.
fn widen(lo: f64, hi: f64) -> (f64, f64) {
    (lo.next_down().next_down(), hi.next_up().next_up())
}

impl Interval {
    pub const EMPTY: Interval = Interval {
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
    };
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };
    /// `[-1, 1]`
    pub const UNIT: Interval = Interval { lo: -1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY
        {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        debug_assert!(!x.is_nan());
        Interval { lo: x, hi: x }
    }

    /// Builds `[lo, hi]` from endpoints already known to be ordered.
    pub(crate) fn from_sorted(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "unordered endpoints {lo} > {hi}");
        Interval { lo, hi }
    }

    /// Smallest interval containing both endpoints, in either order.
    pub fn hull_of(a: f64, b: f64) -> Self {
        Interval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    /// Tight enclosure of pi.
    pub fn pi() -> Self {
        Interval {
            lo: PI,
            hi: PI.next_up(),
        }
    }

    /// Tight enclosure of Euler's number.
    pub fn e() -> Self {
        let e = std::f64::consts::E;
        Interval {
            lo: e,
            hi: e.next_up(),
        }
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.lo > self.hi
    }

    pub fn is_point(self) -> bool {
        self.lo == self.hi
    }

    pub fn is_finite(self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Width `hi - lo`, rounded up. Zero for the empty set.
    pub fn diam(self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            add_up(self.hi, -self.lo)
        }
    }

    pub fn mid(self) -> f64 {
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    /// Largest absolute value over the interval.
    pub fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset(self, other: Interval) -> bool {
        self.is_empty() || (other.lo <= self.lo && self.hi <= other.hi)
    }

    pub fn intersect(self, other: Interval) -> Interval {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo > hi {
            Interval::EMPTY
        } else {
            Interval { lo, hi }
        }
    }

    pub fn is_disjoint(self, other: Interval) -> bool {
        self.intersect(other).is_empty()
    }

    pub fn hull(self, other: Interval) -> Interval {
        if self.is_empty() {
            return other;
        }
        if other.is_empty() {
            return self;
        }
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn scale(self, c: f64) -> Interval {
        if self.is_empty() {
            return self;
        }
        if c >= 0.0 {
            Interval {
                lo: mul_down(c, self.lo),
                hi: mul_up(c, self.hi),
            }
        } else {
            Interval {
                lo: mul_down(c, self.hi),
                hi: mul_up(c, self.lo),
            }
        }
    }

    pub fn abs(self) -> Interval {
        if self.is_empty() || self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            -self
        } else {
            Interval {
                lo: 0.0,
                hi: (-self.lo).max(self.hi),
            }
        }
    }

    pub fn sqr(self) -> Interval {
        if self.is_empty() {
            return self;
        }
        let m = self.abs();
        Interval {
            lo: mul_down(m.lo, m.lo),
            hi: mul_up(m.hi, m.hi),
        }
    }

    pub fn recip(self) -> Result<Interval> {
        if self.is_empty() {
            return Ok(self);
        }
        if self.contains(0.0) {
            return Err(Error::domain("recip", self));
        }
        Ok(Interval {
            lo: recip_down(self.hi),
            hi: recip_up(self.lo),
        })
    }

    pub fn sqrt(self) -> Result<Interval> {
        if self.is_empty() {
            return Ok(self);
        }
        if self.lo < 0.0 {
            return Err(Error::domain("sqrt", self));
        }
        Ok(Interval {
            lo: sqrt_down(self.lo),
            hi: sqrt_up(self.hi),
        })
    }

    pub fn exp(self) -> Result<Interval> {
        if self.is_empty() {
            return Ok(self);
        }
        let (mut lo, mut hi) = widen(self.lo.exp(), self.hi.exp());
        if self.lo == 0.0 {
            lo = 1.0;
        }
        if self.hi == 0.0 {
            hi = 1.0;
        }
        if !hi.is_finite() {
            return Err(Error::domain("exp", self));
        }
        Ok(Interval { lo: lo.max(0.0), hi })
    }

    pub fn ln(self) -> Result<Interval> {
        if self.is_empty() {
            return Ok(self);
        }
        if self.lo <= 0.0 {
            return Err(Error::domain("log", self));
        }
        let (mut lo, mut hi) = widen(self.lo.ln(), self.hi.ln());
        if self.lo == 1.0 {
            lo = 0.0;
        }
        if self.hi == 1.0 {
            hi = 0.0;
        }
        Ok(Interval { lo, hi })
    }

    pub fn sin(self) -> Interval {
        periodic_range(self, f64::sin, FRAC_PI_2, -FRAC_PI_2)
    }

    pub fn cos(self) -> Interval {
        periodic_range(self, f64::cos, 0.0, PI)
    }

    /// Integer power with the parity-aware rule.
    pub fn powi(self, k: i32) -> Result<Interval> {
        if self.is_empty() {
            return Ok(self);
        }
        if k < 0 {
            if self.contains(0.0) {
                return Err(Error::domain("pow", self));
            }
            return self.powi(-k)?.recip();
        }
        if k == 0 {
            return Ok(Interval::ONE);
        }
        let k = k as u32;
        if k.is_multiple_of(2) {
            let m = self.abs();
            Ok(Interval {
                lo: pow_point(m.lo, k).lo,
                hi: pow_point(m.hi, k).hi,
            })
        } else {
            Ok(Interval {
                lo: pow_point(self.lo, k).lo,
                hi: pow_point(self.hi, k).hi,
            })
        }
    }

    /// One-sided Hausdorff distance from `range` to an enclosure containing it.
    pub fn hausdorff_1d(range: Interval, enclosure: Interval) -> Result<f64> {
        if range.is_empty() || !range.is_subset(enclosure) {
            return Err(Error::NotNested { range, enclosure });
        }
        Ok(add_up(range.lo, -enclosure.lo).max(add_up(enclosure.hi, -range.hi)))
    }

    /// Outward sum of a sequence, accumulated left to right.
    pub fn sum<I: IntoIterator<Item = Interval>>(items: I) -> Interval {
        items.into_iter().fold(Interval::ZERO, |acc, x| acc + x)
    }
}

fn recip_down(x: f64) -> f64 {
    let q = 1.0 / x;
    if q.is_infinite() || q == 0.0 {
        return if q > 0.0 { f64::MAX } else { q.next_down() };
    }
    // q*x - 1 has the sign of (q - 1/x) * x
    let r = q.mul_add(x, -1.0);
    if r == 0.0 {
        q
    } else if (r > 0.0) == (x > 0.0) {
        q.next_down()
    } else {
        q
    }
}

fn recip_up(x: f64) -> f64 {
    let q = 1.0 / x;
    if q.is_infinite() || q == 0.0 {
        return if q < 0.0 { -f64::MAX } else { q.next_up() };
    }
    let r = q.mul_add(x, -1.0);
    // q x - 1 is exact; its sign against x's tells which side of 1/x q lies
    if r == 0.0 || (r > 0.0) == (x > 0.0) {
        q
    } else {
        q.next_up()
    }
}

fn sqrt_down(x: f64) -> f64 {
    let s = x.sqrt();
    if s.mul_add(s, -x) > 0.0 {
        s.next_down().max(0.0)
    } else {
        s
    }
}

fn sqrt_up(x: f64) -> f64 {
    let s = x.sqrt();
    if s.mul_add(s, -x) < 0.0 {
        s.next_up()
    } else {
        s
    }
}

fn pow_point(x: f64, k: u32) -> Interval {
    let mut base = Interval::point(x);
    let mut acc = Interval::ONE;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base;
        }
        e >>= 1;
        if e > 0 {
            base = base.sqr();
        }
    }
    acc
}

/// Range of sin or cos by endpoint evaluation plus a scan for interior
/// maxima at `max_at + 2k*pi` and minima at `min_at + 2k*pi`.
fn periodic_range(a: Interval, f: fn(f64) -> f64, max_at: f64, min_at: f64) -> Interval {
    if a.is_empty() {
        return a;
    }
    if !a.is_finite() || a.hi - a.lo >= TAU || a.lo.abs().max(a.hi.abs()) > 1e12 {
        return Interval::UNIT;
    }
    // f(0) is exact for both sin and cos
    let endpoint = |x: f64| {
        let v = f(x);
        if x == 0.0 {
            (v, v)
        } else {
            widen(v, v)
        }
    };
    let (l1, h1) = endpoint(a.lo);
    let (l2, h2) = endpoint(a.hi);
    let (mut lo, mut hi) = (l1.min(l2), h1.max(h2));
    if has_critical_point(a, max_at) {
        hi = 1.0;
    }
    if has_critical_point(a, min_at) {
        lo = -1.0;
    }
    Interval {
        lo: lo.max(-1.0),
        hi: hi.min(1.0),
    }
}

/// Whether `offset + 2k*pi` lies in `a` for some integer k. Errs on the side
/// of reporting a critical point near the endpoints.
fn has_critical_point(a: Interval, offset: f64) -> bool {
    let k = ((a.lo - offset) / TAU).ceil();
    for kk in [k - 1.0, k, k + 1.0] {
        let c = offset + kk * TAU;
        let tol = 1e-12 * (1.0 + c.abs());
        if c >= a.lo - tol && c <= a.hi + tol {
            return true;
        }
    }
    false
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        if self.is_empty() || rhs.is_empty() {
            return Interval::EMPTY;
        }
        Interval {
            lo: add_down(self.lo, rhs.lo),
            hi: add_up(self.hi, rhs.hi),
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        if self.is_empty() {
            return self;
        }
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        self + (-rhs)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        if self.is_empty() || rhs.is_empty() {
            return Interval::EMPTY;
        }
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        let lo = mul_down(a, c)
            .min(mul_down(a, d))
            .min(mul_down(b, c))
            .min(mul_down(b, d));
        let hi = mul_up(a, c)
            .max(mul_up(a, d))
            .max(mul_up(b, c))
            .max(mul_up(b, d));
        Interval { lo, hi }
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("[empty]")
        } else {
            write!(f, "[{:?}, {:?}]", self.lo, self.hi)
        }
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_empty() {
            return s.serialize_seq(Some(0))?.end();
        }
        let mut seq = s.serialize_seq(Some(2))?;
        seq.serialize_element(&self.lo)?;
        seq.serialize_element(&self.hi)?;
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Interval;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an interval as [lo, hi] or [] for empty")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Interval, A::Error> {
                let Some(lo) = seq.next_element::<f64>()? else {
                    return Ok(Interval::EMPTY);
                };
                let hi = seq
                    .next_element::<f64>()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Interval::new(lo, hi).map_err(de::Error::custom)
            }
        }
        d.deserialize_seq(V)
    }
}

/// An axis-aligned box, one interval per coordinate.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct IntervalBox(Vec<Interval>);

impl TryFrom<Vec<Interval>> for IntervalBox {
    type Error = Error;
    fn try_from(v: Vec<Interval>) -> Result<Self> {
        IntervalBox::new(v)
    }
}

impl From<IntervalBox> for Vec<Interval> {
    fn from(b: IntervalBox) -> Self {
        b.0
    }
}

impl IntervalBox {
    pub fn new(components: Vec<Interval>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if components.iter().any(|c| c.is_empty() || !c.is_finite()) {
            return Err(Error::EmptyOperand);
        }
        Ok(IntervalBox(components))
    }

    /// Convenience constructor from `(lo, hi)` pairs.
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let comps = bounds
            .iter()
            .map(|&(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        IntervalBox::new(comps)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[Interval] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Interval> {
        self.0.iter()
    }

    /// Max-norm diameter: the largest component width.
    pub fn diam(&self) -> f64 {
        self.0.iter().map(|c| c.diam()).fold(0.0, f64::max)
    }

    /// Index of the widest component; ties go to the lowest index.
    pub fn widest(&self) -> usize {
        let mut best = 0;
        for (i, c) in self.0.iter().enumerate() {
            if c.diam() > self.0[best].diam() {
                best = i;
            }
        }
        best
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.mid()).collect()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.len() == self.0.len() && self.0.iter().zip(x).all(|(c, &v)| c.contains(v))
    }

    pub fn is_subset(&self, other: &IntervalBox) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a.is_subset(*b))
    }

    /// Intersection, or `None` when some component is empty.
    pub fn intersect(&self, other: &IntervalBox) -> Option<IntervalBox> {
        if self.dim() != other.dim() {
            return None;
        }
        let comps: Vec<_> = self.0.iter().zip(&other.0).map(|(a, b)| a.intersect(*b)).collect();
        if comps.iter().any(|c| c.is_empty()) {
            None
        } else {
            Some(IntervalBox(comps))
        }
    }

    /// Whether the interiors of the two boxes intersect.
    pub fn overlaps_interior(&self, other: &IntervalBox) -> bool {
        self.0
            .iter()
            .zip(&other.0)
            .all(|(a, b)| a.lo.max(b.lo) < a.hi.min(b.hi))
    }

    /// Split at the midpoint of the widest coordinate.
    pub fn bisect(&self) -> Result<(IntervalBox, IntervalBox)> {
        let k = self.widest();
        let c = self.0[k];
        let m = c.mid();
        if !(c.lo < m && m < c.hi) {
            return Err(Error::DegenerateBox);
        }
        let mut left = self.0.clone();
        let mut right = self.0.clone();
        left[k] = Interval { lo: c.lo, hi: m };
        right[k] = Interval { lo: m, hi: c.hi };
        Ok((IntervalBox(left), IntervalBox(right)))
    }
}

impl Index<usize> for IntervalBox {
    type Output = Interval;
    fn index(&self, i: usize) -> &Interval {
        &self.0[i]
    }
}
