use nalgebra::DVector;

use super::history::HistoryX;
use crate::density::DensityGrid;
use crate::error::{Error, Result};
use crate::rs_integration::{BvFunction, Jump};
use crate::scalar::{from_usize, grid_tol, lit, Norm, Real};

/// A functional on histories in normalized bounded-variation form:
/// `f(0) = 0`, `f(t) = w_0 + ∫_0^t g + Σ_{t_k <= t} w_k` for `t > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct NbvFunction<T: Real> {
    pub h: T,
    pub jump0: DVector<T>,
    pub density: DensityGrid<T>,
    /// Interior jumps at `t_k ∈ (0, h]`, sorted and merged.
    pub jumps: Vec<Jump<T>>,
    /// Norm on the dual coordinate space.
    pub dual_norm: Norm,
}

/// Element `(y⊙, g)` of the sun dual `Y* × L¹([0,h]; Y*)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SunState<T: Real> {
    pub h: T,
    pub y_sun: DVector<T>,
    pub g: DensityGrid<T>,
    pub dual_norm: Norm,
}

/// Element `(head, tail)` of the sun-star subspace `Y × L∞([0,h]; Y)`; the tail
/// is sampled at `m + 1` equispaced nodes of `[0, h]` and read piecewise linearly.
#[derive(Clone, Debug, PartialEq)]
pub struct SunStarState<T: Real> {
    pub h: T,
    pub head: DVector<T>,
    pub tail: Vec<DVector<T>>,
    pub norm: Norm,
}

fn merge_tol<T: Real>(h: T) -> T {
    h * lit(1e-12)
}

impl<T: Real> NbvFunction<T> {
    pub fn new(h: T, jump0: DVector<T>, density: DensityGrid<T>, jumps: Vec<Jump<T>>, dual_norm: Norm) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(Error::InvalidInput("delay must be positive".into()));
        }
        if density.start() != T::zero() || (density.end() - h).abs() > merge_tol(h) {
            return Err(Error::InvalidInput("density must live on [0, h]".into()));
        }
        let dim = jump0.len();
        if density.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: density.dim() });
        }
        for j in &jumps {
            if !(j.at > T::zero() && j.at <= h + merge_tol(h)) {
                return Err(Error::InvalidInput("interior jumps must lie in (0, h]".into()));
            }
            if j.value.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: j.value.len() });
            }
        }
        let mut sorted = jumps;
        sorted.sort_by(|a, b| a.at.partial_cmp(&b.at).expect("finite jump locations"));
        let mut merged: Vec<Jump<T>> = Vec::with_capacity(sorted.len());
        for j in sorted {
            match merged.last_mut() {
                Some(last) if (j.at - last.at).abs() <= merge_tol(h) => last.value += j.value,
                _ => merged.push(j),
            }
        }
        Ok(Self { h, jump0, density, jumps: merged, dual_norm })
    }

    pub fn dim(&self) -> usize {
        self.jump0.len()
    }

    /// Point evaluation; zero at `t = 0` and right-continuous inside.
    pub fn eval(&self, t: T) -> DVector<T> {
        if t <= T::zero() {
            return DVector::zeros(self.dim());
        }
        let mut v = &self.jump0 + self.density.integral(T::zero(), t);
        for j in &self.jumps {
            if j.at <= t {
                v += &j.value;
            }
        }
        v
    }

    /// `|w_0| + ∫|g| + Σ|w_k|`.
    pub fn total_variation(&self) -> T {
        self.dual_norm.of(&self.jump0)
            + self.density.l1_norm(self.dual_norm)
            + self.jumps.iter().fold(T::zero(), |s, j| s + self.dual_norm.of(&j.value))
    }

    /// The same function as a generic structured BV function on `[0, h]`.
    pub fn as_bv(&self) -> Result<BvFunction<T>> {
        let mut jumps = vec![Jump::new(T::zero(), self.jump0.clone())];
        jumps.extend(self.jumps.iter().cloned());
        BvFunction::structured(T::zero(), self.h, DVector::zeros(self.dim()), jumps, Some(self.density.clone()), self.dual_norm)
    }

    pub fn has_interior_jumps(&self) -> bool {
        self.jumps.iter().any(|j| j.value.iter().any(|x| *x != T::zero()))
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            h: self.h,
            jump0: &self.jump0 * c,
            density: self.density.scale(c),
            jumps: self.jumps.iter().map(|j| Jump::new(j.at, &j.value * c)).collect(),
            dual_norm: self.dual_norm,
        }
    }

    /// Difference on a shared density grid; jumps closer than `1e-12 h` merge.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut jumps = self.jumps.clone();
        jumps.extend(other.jumps.iter().map(|j| Jump::new(j.at, -&j.value)));
        Self::new(self.h, &self.jump0 - &other.jump0, self.density.sub(&other.density)?, jumps, self.dual_norm)
    }
}

impl<T: Real> SunState<T> {
    pub fn new(h: T, y_sun: DVector<T>, g: DensityGrid<T>, dual_norm: Norm) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(Error::InvalidInput("delay must be positive".into()));
        }
        if g.start() != T::zero() || (g.end() - h).abs() > merge_tol(h) {
            return Err(Error::InvalidInput("density must live on [0, h]".into()));
        }
        if g.dim() != y_sun.len() {
            return Err(Error::DimensionMismatch { expected: y_sun.len(), got: g.dim() });
        }
        Ok(Self { h, y_sun, g, dual_norm })
    }

    pub fn dim(&self) -> usize {
        self.y_sun.len()
    }

    /// `|y⊙| + |g|_{L¹}`.
    pub fn norm(&self) -> T {
        self.dual_norm.of(&self.y_sun) + self.g.l1_norm(self.dual_norm)
    }

    pub fn distance(&self, other: &Self) -> Result<T> {
        Ok(self.dual_norm.of(&(&self.y_sun - &other.y_sun)) + self.g.l1_distance(&other.g, self.dual_norm)?)
    }
}

impl<T: Real> SunStarState<T> {
    pub fn new(h: T, head: DVector<T>, tail: Vec<DVector<T>>, norm: Norm) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(Error::InvalidInput("delay must be positive".into()));
        }
        if tail.len() < 2 {
            return Err(Error::InvalidInput("tail needs at least two nodes".into()));
        }
        for v in &tail {
            if v.len() != head.len() {
                return Err(Error::DimensionMismatch { expected: head.len(), got: v.len() });
            }
        }
        Ok(Self { h, head, tail, norm })
    }

    pub fn zeros(h: T, m: usize, dim: usize, norm: Norm) -> Self {
        Self { h, head: DVector::zeros(dim), tail: vec![DVector::zeros(dim); m + 1], norm }
    }

    pub fn m(&self) -> usize {
        self.tail.len() - 1
    }

    pub fn step(&self) -> T {
        self.h / from_usize::<T>(self.m())
    }

    pub fn dim(&self) -> usize {
        self.head.len()
    }

    pub fn node(&self, i: usize) -> T {
        if i == self.m() {
            self.h
        } else {
            self.step() * from_usize(i)
        }
    }

    /// Tail value at `θ ∈ [0, h]` by linear interpolation.
    pub fn tail_at(&self, theta: T) -> DVector<T> {
        let m = self.m();
        let mut x = (theta / self.step()).max(T::zero()).min(from_usize(m));
        if (x - x.round()).abs() <= grid_tol::<T>() {
            x = x.round();
        }
        let i = x.floor().to_usize().unwrap_or(0).min(m - 1);
        let s = x - from_usize::<T>(i);
        if s == T::zero() {
            return self.tail[i].clone();
        }
        if s == T::one() {
            return self.tail[i + 1].clone();
        }
        &self.tail[i] * (T::one() - s) + &self.tail[i + 1] * s
    }

    /// `max(|head|, max_i |tail_i|)`.
    pub fn sup_norm(&self) -> T {
        self.tail.iter().fold(self.norm.of(&self.head), |m, v| m.max(self.norm.of(v)))
    }

    pub fn distance(&self, other: &Self) -> Result<T> {
        if self.tail.len() != other.tail.len() {
            return Err(Error::InvalidInput("sun-star states on different grids".into()));
        }
        Ok(self
            .tail
            .iter()
            .zip(&other.tail)
            .fold(self.norm.of(&(&self.head - &other.head)), |m, (a, b)| m.max(self.norm.of(&(a - b)))))
    }

    pub fn add_scaled(&mut self, other: &Self, c: T) -> Result<()> {
        if self.tail.len() != other.tail.len() {
            return Err(Error::InvalidInput("sun-star states on different grids".into()));
        }
        self.head += &other.head * c;
        for (a, b) in self.tail.iter_mut().zip(&other.tail) {
            *a += b * c;
        }
        Ok(())
    }
}

/// Breakpoints on `[0, h]` where `θ ↦ φ(−θ)` changes slope.
pub(crate) fn reflected_nodes<T: Real>(phi: &HistoryX<T>) -> Vec<T> {
    (0..=phi.m()).map(|i| -phi.theta(i)).collect()
}
