use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::{from_usize, grid_tol, lerp, Norm, Real};
use crate::semigroup::SemigroupHandle;

/// A history segment `φ ∈ C([-h,0]; Y)` sampled at `θ_i = −h + i h/m`,
/// evaluated by linear interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryX<T: Real> {
    h: T,
    values: Vec<DVector<T>>,
    norm: Norm,
}

impl<T: Real> HistoryX<T> {
    pub fn new(h: T, values: Vec<DVector<T>>, norm: Norm) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(Error::InvalidInput("delay must be positive".into()));
        }
        if values.len() < 2 {
            return Err(Error::InvalidInput("history needs at least two samples".into()));
        }
        let dim = values[0].len();
        for v in &values {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("history values must be finite".into()));
            }
        }
        Ok(Self { h, values, norm })
    }

    pub fn from_fn<F: Fn(T) -> DVector<T>>(h: T, m: usize, norm: Norm, f: F) -> Result<Self> {
        let step = h / from_usize::<T>(m);
        let values = (0..=m).map(|i| f(-h + step * from_usize(i))).collect();
        Self::new(h, values, norm)
    }

    pub fn constant(h: T, m: usize, y: DVector<T>, norm: Norm) -> Self {
        Self::new(h, vec![y; m + 1], norm).expect("valid constant history")
    }

    pub fn zeros(h: T, m: usize, dim: usize, norm: Norm) -> Self {
        Self::constant(h, m, DVector::zeros(dim), norm)
    }

    pub fn delay(&self) -> T {
        self.h
    }

    pub fn m(&self) -> usize {
        self.values.len() - 1
    }

    pub fn step(&self) -> T {
        self.h / from_usize::<T>(self.m())
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn norm_kind(&self) -> Norm {
        self.norm
    }

    pub fn theta(&self, i: usize) -> T {
        if i == self.m() {
            T::zero()
        } else {
            -self.h + self.step() * from_usize(i)
        }
    }

    pub fn values(&self) -> &[DVector<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<DVector<T>> {
        self.values
    }

    /// `φ(0)`.
    pub fn head(&self) -> &DVector<T> {
        self.values.last().expect("non-empty history")
    }

    /// Linear interpolation, clamped to `[-h, 0]`.
    pub fn eval(&self, theta: T) -> DVector<T> {
        let m = self.m();
        let mut x = ((theta + self.h) / self.step()).max(T::zero()).min(from_usize(m));
        // Snap to a node when within rounding of it, so aligned shifts copy samples.
        if (x - x.round()).abs() <= grid_tol::<T>() {
            x = x.round();
        }
        let i = x.floor().to_usize().unwrap_or(0).min(m - 1);
        let s = x - from_usize::<T>(i);
        if s == T::zero() {
            return self.values[i].clone();
        }
        if s == T::one() {
            return self.values[i + 1].clone();
        }
        lerp(&self.values[i], &self.values[i + 1], s)
    }

    /// `max_i |φ(θ_i)|`.
    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(self.norm.of(v)))
    }

    pub fn max_distance(&self, other: &Self) -> Result<T> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (a, b)| m.max(self.norm.of(&(a - b)))))
    }

    pub fn linear_combination(&self, alpha: T, other: &Self, beta: T) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * alpha + b * beta).collect();
        Ok(Self { h: self.h, values, norm: self.norm })
    }

    pub fn scale(&self, c: T) -> Self {
        Self { h: self.h, values: self.values.iter().map(|v| v * c).collect(), norm: self.norm }
    }

    /// Re-samples onto a grid with `m` cells by interpolation.
    pub fn resample(&self, m: usize) -> Result<Self> {
        Self::from_fn(self.h, m, self.norm, |th| self.eval(th))
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.values.len() != other.values.len() || self.h != other.h {
            return Err(Error::InvalidInput("histories live on different grids".into()));
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(())
    }

    /// `true` when `t` is an integer multiple of the grid step (to grid tolerance).
    pub fn is_aligned(&self, t: T) -> bool {
        let r = t / self.step();
        (r - r.round()).abs() <= grid_tol::<T>()
    }
}

/// `(T₀(t)φ)(θ) = φ(t+θ)` for `t+θ <= 0` and `S(t+θ)φ(0)` otherwise, on the same grid.
pub fn shift_t0<T: Real>(handle: &SemigroupHandle<T>, t: T, phi: &HistoryX<T>) -> Result<HistoryX<T>> {
    if t < T::zero() {
        return Err(Error::NegativeTime(crate::scalar::to_f64(t)));
    }
    let m = phi.m();
    let head = phi.head();
    let mut values = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let s = t + phi.theta(i);
        if s <= T::zero() {
            values.push(phi.eval(s));
        } else {
            values.push(handle.apply(s, head)?);
        }
    }
    HistoryX::new(phi.delay(), values, phi.norm_kind())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::GeneratorSpec;
    use nalgebra::DMatrix;

    fn ramp(m: usize) -> HistoryX<f64> {
        HistoryX::from_fn(1.0, m, Norm::Euclidean, |t: f64| DVector::from_vec(vec![t.sin() + 1.0, t * t])).unwrap()
    }

    #[test]
    fn zero_shift_is_identity() {
        let phi = ramp(20);
        let h = SemigroupHandle::zero(2);
        assert_eq!(shift_t0(&h, 0.0, &phi).unwrap(), phi);
    }

    #[test]
    fn zero_generator_flushes_memory() {
        let phi = ramp(20);
        let h = SemigroupHandle::zero(2);
        let out = shift_t0(&h, 1.5, &phi).unwrap();
        assert!(out.values().iter().all(|v| v == phi.head()));
    }

    #[test]
    fn half_delay_shift_uses_semigroup() {
        let phi = ramp(20);
        let b = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.0, -2.0]);
        let h = SemigroupHandle::new(GeneratorSpec::Matrix(b), Norm::Euclidean, 10.0).unwrap();
        let out = shift_t0(&h, 0.5, &phi).unwrap();
        let expect = h.apply(0.25, phi.head()).unwrap();
        assert!((out.eval(-0.25) - expect).norm() < 1e-14);
        assert!((out.eval(-0.75) - phi.eval(-0.25)).norm() < 1e-14);
    }

    #[test]
    fn interpolation_is_exact_at_nodes() {
        let phi = ramp(10);
        for i in 0..=10 {
            assert_eq!(phi.eval(phi.theta(i)), phi.values()[i]);
        }
    }
}
