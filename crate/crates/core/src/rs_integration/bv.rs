use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::density::DensityGrid;
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, pairwise_sum_scalar, Norm, Real};

pub type VecFn<T> = Arc<dyn Fn(T) -> DVector<T> + Send + Sync>;

/// A jump of height `value` located at `at`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jump<T: Real> {
    pub at: T,
    pub value: DVector<T>,
}

impl<T: Real> Jump<T> {
    pub fn new(at: T, value: DVector<T>) -> Self {
        Self { at, value }
    }
}

/// Which structured pieces a function carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructureHint {
    PureJump,
    AbsolutelyContinuous,
    Mixed,
    Raw,
}

/// `f(t) = base + Σ_{visible jumps} w_k + ∫_a^t g`.
///
/// A jump at `s` is visible at `t` when `t >= s` and `t > a`, so a jump placed at
/// the left end is realised immediately to the right of `a` and interior jumps
/// are right-continuous.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuredBv<T: Real> {
    pub a: T,
    pub b: T,
    pub base: DVector<T>,
    pub jumps: Vec<Jump<T>>,
    pub density: Option<DensityGrid<T>>,
    pub norm: Norm,
}

/// A black-box function on `[a, b]`.
#[derive(Clone)]
pub struct ClosureBv<T: Real> {
    pub a: T,
    pub b: T,
    pub dim: usize,
    pub f: VecFn<T>,
    pub derivative: Option<VecFn<T>>,
    pub discontinuities: Vec<T>,
    pub norm: Norm,
}

impl<T: Real> fmt::Debug for ClosureBv<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosureBv")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("dim", &self.dim)
            .field("has_derivative", &self.derivative.is_some())
            .field("discontinuities", &self.discontinuities)
            .finish()
    }
}

/// A function of bounded variation with values in a coordinate space.
#[derive(Clone, Debug)]
pub enum BvFunction<T: Real> {
    Structured(StructuredBv<T>),
    Closure(ClosureBv<T>),
}

#[inline]
pub(crate) fn jump_visible<T: Real>(t: T, at: T, a: T) -> bool {
    t >= at && t > a
}

fn merge_jumps<T: Real>(mut jumps: Vec<Jump<T>>, a: T, b: T) -> Vec<Jump<T>> {
    jumps.sort_by(|x, y| x.at.partial_cmp(&y.at).expect("finite jump locations"));
    let tol = T::eps() * lit(64.0) * (b - a);
    let mut out: Vec<Jump<T>> = Vec::with_capacity(jumps.len());
    for j in jumps {
        match out.last_mut() {
            Some(last) if (j.at - last.at).abs() <= tol => last.value += j.value,
            _ => out.push(j),
        }
    }
    out
}

impl<T: Real> StructuredBv<T> {
    pub fn new(
        a: T,
        b: T,
        base: DVector<T>,
        jumps: Vec<Jump<T>>,
        density: Option<DensityGrid<T>>,
        norm: Norm,
    ) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidInput("BV domain must satisfy a < b".into()));
        }
        let dim = base.len();
        for j in &jumps {
            if j.value.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: j.value.len() });
            }
            if j.at < a || j.at > b || !j.at.is_finite() {
                return Err(Error::InvalidInput("jump location outside the domain".into()));
            }
        }
        if let Some(g) = &density {
            if g.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: g.dim() });
            }
        }
        Ok(Self { a, b, base, jumps: merge_jumps(jumps, a, b), density, norm })
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn eval(&self, t: T) -> DVector<T> {
        let mut v = self.base.clone();
        for j in &self.jumps {
            if jump_visible(t, j.at, self.a) {
                v += &j.value;
            }
        }
        if let Some(g) = &self.density {
            v += g.integral(self.a, t);
        }
        v
    }

    /// Exact variation on `[lo, hi]`: visible jumps plus the trapezoid of `|g|`.
    pub fn variation_on(&self, lo: T, hi: T) -> T {
        if !(lo < hi) {
            return T::zero();
        }
        let mut v = T::zero();
        for j in &self.jumps {
            if jump_visible(hi, j.at, self.a) && !jump_visible(lo, j.at, self.a) {
                v += self.norm.of(&j.value);
            }
        }
        if let Some(g) = &self.density {
            v += g.l1_norm_on(lo, hi, self.norm);
        }
        v
    }

    pub fn hint(&self) -> StructureHint {
        match (self.jumps.is_empty(), self.density.is_some()) {
            (false, false) | (true, false) => StructureHint::PureJump,
            (true, true) => StructureHint::AbsolutelyContinuous,
            (false, true) => StructureHint::Mixed,
        }
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            a: self.a,
            b: self.b,
            base: &self.base * c,
            jumps: self.jumps.iter().map(|j| Jump::new(j.at, &j.value * c)).collect(),
            density: self.density.as_ref().map(|g| g.scale(c)),
            norm: self.norm,
        }
    }

    /// Sum on the same domain; densities must share a grid when both are present.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.a != other.a || self.b != other.b {
            return Err(Error::InvalidInput("BV sum needs identical domains".into()));
        }
        let density = match (&self.density, &other.density) {
            (Some(g), Some(k)) => Some(g.add(k)?),
            (Some(g), None) | (None, Some(g)) => Some(g.clone()),
            (None, None) => None,
        };
        let jumps = self.jumps.iter().chain(&other.jumps).cloned().collect();
        Self::new(self.a, self.b, &self.base + &other.base, jumps, density, self.norm)
    }
}

impl<T: Real> BvFunction<T> {
    pub fn structured(
        a: T,
        b: T,
        base: DVector<T>,
        jumps: Vec<Jump<T>>,
        density: Option<DensityGrid<T>>,
        norm: Norm,
    ) -> Result<Self> {
        StructuredBv::new(a, b, base, jumps, density, norm).map(BvFunction::Structured)
    }

    pub fn pure_jump(a: T, b: T, base: DVector<T>, jumps: Vec<Jump<T>>, norm: Norm) -> Result<Self> {
        Self::structured(a, b, base, jumps, None, norm)
    }

    pub fn absolutely_continuous(a: T, b: T, base: DVector<T>, density: DensityGrid<T>, norm: Norm) -> Result<Self> {
        Self::structured(a, b, base, Vec::new(), Some(density), norm)
    }

    /// Wraps a closure. Known jumps are declared with [`BvFunction::with_discontinuities`].
    pub fn from_fn<F>(a: T, b: T, dim: usize, f: F, norm: Norm) -> Self
    where
        F: Fn(T) -> DVector<T> + Send + Sync + 'static,
    {
        BvFunction::Closure(ClosureBv {
            a,
            b,
            dim,
            f: Arc::new(f),
            derivative: None,
            discontinuities: Vec::new(),
            norm,
        })
    }

    /// Attaches a derivative to a closure (ignored for structured functions).
    pub fn with_derivative<F>(self, df: F) -> Self
    where
        F: Fn(T) -> DVector<T> + Send + Sync + 'static,
    {
        match self {
            BvFunction::Closure(mut c) => {
                c.derivative = Some(Arc::new(df));
                BvFunction::Closure(c)
            }
            s => s,
        }
    }

    pub fn with_discontinuities(self, mut pts: Vec<T>) -> Self {
        match self {
            BvFunction::Closure(mut c) => {
                pts.sort_by(|x, y| x.partial_cmp(y).expect("finite points"));
                c.discontinuities = pts;
                BvFunction::Closure(c)
            }
            s => s,
        }
    }

    pub fn domain(&self) -> (T, T) {
        match self {
            BvFunction::Structured(s) => (s.a, s.b),
            BvFunction::Closure(c) => (c.a, c.b),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BvFunction::Structured(s) => s.dim(),
            BvFunction::Closure(c) => c.dim,
        }
    }

    pub fn norm(&self) -> Norm {
        match self {
            BvFunction::Structured(s) => s.norm,
            BvFunction::Closure(c) => c.norm,
        }
    }

    pub fn eval(&self, t: T) -> DVector<T> {
        match self {
            BvFunction::Structured(s) => s.eval(t),
            BvFunction::Closure(c) => (c.f)(t),
        }
    }

    pub fn hint(&self) -> StructureHint {
        match self {
            BvFunction::Structured(s) => s.hint(),
            BvFunction::Closure(_) => StructureHint::Raw,
        }
    }

    pub fn as_structured(&self) -> Option<&StructuredBv<T>> {
        match self {
            BvFunction::Structured(s) => Some(s),
            BvFunction::Closure(_) => None,
        }
    }

    /// Jump locations strictly inside the domain or at its ends.
    pub fn discontinuities(&self) -> Vec<T> {
        match self {
            BvFunction::Structured(s) => s.jumps.iter().map(|j| j.at).collect(),
            BvFunction::Closure(c) => c.discontinuities.clone(),
        }
    }

    /// Additional points where the function is smooth on either side but not across,
    /// such as density cell edges.
    pub fn kinks(&self) -> Vec<T> {
        match self {
            BvFunction::Structured(s) => match &s.density {
                Some(g) => (0..=g.n_cells()).map(|k| g.node(k)).collect(),
                None => Vec::new(),
            },
            BvFunction::Closure(_) => Vec::new(),
        }
    }

    /// Supremum of `|f|` over `[a, b]`, sampled on a fine grid plus both sides of known jumps.
    pub fn sup_norm(&self) -> T {
        let (a, b) = self.domain();
        let norm = self.norm();
        let n = 4096usize;
        let step = (b - a) / from_usize::<T>(n);
        let mut m = T::zero();
        for k in 0..=n {
            m = m.max(norm.of(&self.eval(a + step * from_usize(k))));
        }
        let nudge = (b - a) * lit(1e-12);
        for p in self.discontinuities() {
            for q in [p - nudge, p, p + nudge] {
                if q >= a && q <= b {
                    m = m.max(norm.of(&self.eval(q)));
                }
            }
        }
        m
    }
}

/// `Σ |f(σ_j) − f(σ_{j−1})|` over the given breakpoints.
pub fn partition_variation<T: Real>(f: &BvFunction<T>, breakpoints: &[T]) -> T {
    let norm = f.norm();
    let vals: Vec<DVector<T>> = breakpoints.iter().map(|&t| f.eval(t)).collect();
    let terms: Vec<T> = vals.windows(2).map(|w| norm.of(&(&w[1] - &w[0]))).collect();
    pairwise_sum_scalar(&terms)
}

/// Refinement ladder used for black-box variation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariationLadder {
    pub min_level: u32,
    pub max_level: u32,
    /// Relative stabilisation tolerance between successive levels.
    pub tol: f64,
}

impl Default for VariationLadder {
    fn default() -> Self {
        Self { min_level: 4, max_level: 16, tol: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariationStatus {
    /// Computed from the structured representation.
    Exact,
    /// Ladder supremum that stopped changing within tolerance.
    Stabilized,
    /// Ladder supremum still growing at the deepest level.
    PossiblyUnbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariationReport<T: Real> {
    pub value: T,
    pub status: VariationStatus,
    /// Values seen on the ladder, coarsest first (empty for exact results).
    pub ladder: Vec<T>,
}

/// Total variation of `f` on `[lo, hi]`.
pub fn total_variation<T: Real>(f: &BvFunction<T>, lo: T, hi: T, ladder: VariationLadder) -> Result<VariationReport<T>> {
    if !(lo < hi) {
        return Err(Error::InvalidInput("total variation needs lo < hi".into()));
    }
    if let BvFunction::Structured(s) = f {
        return Ok(VariationReport { value: s.variation_on(lo, hi), status: VariationStatus::Exact, ladder: Vec::new() });
    }
    let mut values = Vec::new();
    let mut status = VariationStatus::PossiblyUnbounded;
    let disc: Vec<T> = f.discontinuities().into_iter().filter(|p| *p > lo && *p < hi).collect();
    for level in ladder.min_level..=ladder.max_level {
        let n = 1usize << level;
        let step = (hi - lo) / from_usize::<T>(n);
        let mut pts: Vec<T> = (0..n).map(|k| lo + step * from_usize(k)).collect();
        pts.push(hi);
        pts.extend(disc.iter().copied());
        pts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        pts.dedup();
        let v = partition_variation(f, &pts);
        let prev = values.last().copied();
        // Nested dyadic partitions make the sequence non-decreasing up to rounding.
        let v = match prev {
            Some(p) if v < p => p,
            _ => v,
        };
        values.push(v);
        if let Some(p) = prev {
            if v - p <= lit::<T>(ladder.tol) * v.max(T::one()) {
                status = VariationStatus::Stabilized;
                break;
            }
        }
    }
    let value = *values.last().expect("ladder has at least one level");
    Ok(VariationReport { value, status, ladder: values })
}

/// `|V_a(f)(b) − V_a(f)(c) − V_c(f)(b)|` on a structured function.
pub fn variation_additivity_check<T: Real>(f: &StructuredBv<T>, a: T, c: T, b: T) -> Result<T> {
    if !(a <= c && c <= b) {
        return Err(Error::InvalidInput("additivity check needs a <= c <= b".into()));
    }
    Ok((f.variation_on(a, b) - f.variation_on(a, c) - f.variation_on(c, b)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn unit_jump_at_left_end_has_variation_one() {
        let f = BvFunction::pure_jump(0.0, 1.0, v(&[0.0]), vec![Jump::new(0.0, v(&[1.0]))], Norm::Euclidean).unwrap();
        let r = total_variation(&f, 0.0, 1.0, VariationLadder::default()).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.status, VariationStatus::Exact);
        assert_eq!(f.eval(0.0)[0], 0.0);
        assert_eq!(f.eval(1e-9)[0], 1.0);
    }

    #[test]
    fn jump_plus_density_variation() {
        let g = DensityGrid::constant(0.0, 1.0, 10, v(&[0.0, 2.0]));
        let f = BvFunction::structured(0.0, 1.0, v(&[0.0, 0.0]), vec![Jump::new(0.0, v(&[1.0, 0.0]))], Some(g), Norm::Euclidean).unwrap();
        let r = total_variation(&f, 0.0, 1.0, VariationLadder::default()).unwrap();
        assert!((r.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ramp_variation_on_closure_stabilizes() {
        let f = BvFunction::from_fn(0.0, 1.0, 1, |t: f64| DVector::from_vec(vec![t]), Norm::Euclidean);
        let r = total_variation(&f, 0.0, 1.0, VariationLadder::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert_eq!(r.status, VariationStatus::Stabilized);
    }

    #[test]
    fn wild_oscillation_is_flagged() {
        // sin(1/t) has unbounded variation near zero.
        let f = BvFunction::from_fn(
            0.0,
            1.0,
            1,
            |t: f64| DVector::from_vec(vec![if t == 0.0 { 0.0 } else { (1.0 / t).sin() }]),
            Norm::Euclidean,
        );
        let r = total_variation(&f, 0.0, 1.0, VariationLadder { min_level: 4, max_level: 12, tol: 1e-9 }).unwrap();
        assert_eq!(r.status, VariationStatus::PossiblyUnbounded);
        assert!(r.ladder.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn additivity_at_jump_location() {
        let f = StructuredBv::new(0.0, 1.0, v(&[0.0]), vec![Jump::new(0.5, v(&[2.0]))], None, Norm::Euclidean).unwrap();
        assert_eq!(variation_additivity_check(&f, 0.0, 0.5, 1.0).unwrap(), 0.0);
        assert_eq!(variation_additivity_check(&f, 0.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(f.variation_on(0.0, 0.0), 0.0);
    }

    #[test]
    fn coincident_jumps_merge() {
        let f = StructuredBv::new(
            0.0,
            1.0,
            v(&[0.0]),
            vec![Jump::new(0.5, v(&[2.0])), Jump::new(0.5, v(&[-2.0]))],
            None,
            Norm::Euclidean,
        )
        .unwrap();
        assert_eq!(f.jumps.len(), 1);
        assert_eq!(f.variation_on(0.0, 1.0), 0.0);
    }
}
