//! Scalar abstraction and the small amount of shared vector plumbing.

use std::fmt;

use nalgebra::{DMatrix, DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

/// Real scalar type the whole crate is generic over (`f32` or `f64`).
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Machine epsilon of the type.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Slack for deciding that a ratio of grid quantities is an integer: `1e-9`,
/// or 64 ulps when the scalar type is coarser than that.
#[inline]
pub fn grid_tol<T: Real>() -> T {
    lit::<T>(1e-9).max(T::eps() * lit(64.0))
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

/// Norm on the coordinate space `Y = K^n`.
///
/// The dual of `Sup` is `L1` and vice versa; Euclidean is self-dual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    #[default]
    Euclidean,
    Sup,
    L1,
}

impl Norm {
    pub fn dual(self) -> Norm {
        match self {
            Norm::Euclidean => Norm::Euclidean,
            Norm::Sup => Norm::L1,
            Norm::L1 => Norm::Sup,
        }
    }

    pub fn of<T: Real>(self, v: &DVector<T>) -> T {
        match self {
            Norm::Euclidean => v.norm(),
            Norm::Sup => v.iter().fold(T::zero(), |m, x| m.max(x.abs())),
            Norm::L1 => v.iter().fold(T::zero(), |s, x| s + x.abs()),
        }
    }

    /// Induced operator norm of a matrix acting on `(K^n, self)`.
    pub fn operator<T: Real>(self, a: &DMatrix<T>) -> T {
        match self {
            Norm::Euclidean => {
                if a.nrows() == 0 {
                    return T::zero();
                }
                a.singular_values().iter().fold(T::zero(), |m, s| m.max(*s))
            }
            Norm::Sup => a
                .row_iter()
                .map(|r| r.iter().fold(T::zero(), |s, x| s + x.abs()))
                .fold(T::zero(), |m, x| m.max(x)),
            Norm::L1 => a
                .column_iter()
                .map(|c| c.iter().fold(T::zero(), |s, x| s + x.abs()))
                .fold(T::zero(), |m, x| m.max(x)),
        }
    }

    /// A dual vector `y*` with `<y, y*> = |y|` and `|y*|_dual = 1` (zero for `y = 0`).
    pub fn aligned_dual<T: Real>(self, y: &DVector<T>) -> DVector<T> {
        let n = y.len();
        let norm = self.of(y);
        if norm == T::zero() {
            return DVector::zeros(n);
        }
        match self {
            Norm::Euclidean => y / norm,
            Norm::Sup => {
                let (i, _) = y
                    .iter()
                    .enumerate()
                    .fold((0, T::zero()), |(bi, bv), (i, x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) });
                let mut d = DVector::zeros(n);
                d[i] = y[i].signum();
                d
            }
            Norm::L1 => y.map(|x| if x == T::zero() { T::zero() } else { x.signum() }),
        }
    }
}

/// Pairwise (tree) summation with a fixed reduction order.
pub fn pairwise_sum<T: Real>(terms: &[DVector<T>], dim: usize) -> DVector<T> {
    match terms.len() {
        0 => DVector::zeros(dim),
        1 => terms[0].clone(),
        n => {
            let mid = n / 2;
            pairwise_sum(&terms[..mid], dim) + pairwise_sum(&terms[mid..], dim)
        }
    }
}

pub fn pairwise_sum_scalar<T: Real>(terms: &[T]) -> T {
    match terms.len() {
        0 => T::zero(),
        1 => terms[0],
        n => {
            let mid = n / 2;
            pairwise_sum_scalar(&terms[..mid]) + pairwise_sum_scalar(&terms[mid..])
        }
    }
}

/// Linear interpolation between two vectors, `s` in `[0, 1]`.
#[inline]
pub fn lerp<T: Real>(a: &DVector<T>, b: &DVector<T>, s: T) -> DVector<T> {
    a * (T::one() - s) + b * s
}

/// `(e^{w t} - 1) / w`, with the limiting value `t` at `w = 0`.
pub fn exp_growth_factor<T: Real>(omega: T, t: T) -> T {
    let z = omega * t;
    if z.abs() < lit(1e-8) {
        t * (T::one() + z / lit(2.0))
    } else {
        (z.exp() - T::one()) / omega
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_norms_pair_to_norm() {
        let y = DVector::from_vec(vec![3.0_f64, -4.0, 1.0]);
        for norm in [Norm::Euclidean, Norm::Sup, Norm::L1] {
            let d = norm.aligned_dual(&y);
            assert!((y.dot(&d) - norm.of(&y)).abs() < 1e-14);
            assert!((norm.dual().of(&d) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn growth_factor_limit() {
        assert_eq!(exp_growth_factor(0.0_f64, 2.0), 2.0);
        let v = exp_growth_factor(-1.0_f64, 1.0);
        assert!((v - (1.0 - (-1.0_f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn operator_norms() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0_f64, -2.0, 3.0, 4.0]);
        assert_eq!(Norm::Sup.operator(&a), 7.0);
        assert_eq!(Norm::L1.operator(&a), 6.0);
    }
}
