use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, grid_tol, lerp, lit, to_f64, Norm, Real};
use crate::sun_duality::HistoryX;

/// Read access to a history segment `θ ↦ x(t+θ)` on `[-h, 0]`.
pub trait HistorySample<T: Real> {
    fn delay(&self) -> T;
    fn dim(&self) -> usize;
    fn at(&self, theta: T) -> DVector<T>;
}

impl<T: Real> HistorySample<T> for HistoryX<T> {
    fn delay(&self) -> T {
        HistoryX::delay(self)
    }

    fn dim(&self) -> usize {
        HistoryX::dim(self)
    }

    fn at(&self, theta: T) -> DVector<T> {
        self.eval(theta)
    }
}

/// Borrowed uniform samples `x(t−h), …, x(t)` read by linear interpolation.
#[derive(Clone, Copy, Debug)]
pub struct GridHistory<'a, T: Real> {
    pub h: T,
    pub step: T,
    pub values: &'a [DVector<T>],
}

impl<T: Real> HistorySample<T> for GridHistory<'_, T> {
    fn delay(&self) -> T {
        self.h
    }

    fn dim(&self) -> usize {
        self.values[0].len()
    }

    fn at(&self, theta: T) -> DVector<T> {
        let m = self.values.len() - 1;
        let mut x = ((theta + self.h) / self.step).max(T::zero()).min(from_usize(m));
        if (x - x.round()).abs() <= grid_tol::<T>() {
            x = x.round();
        }
        let i = x.floor().to_usize().unwrap_or(0).min(m.saturating_sub(1));
        let s = x - from_usize::<T>(i);
        if s == T::zero() {
            return self.values[i].clone();
        }
        lerp(&self.values[i], &self.values[i + 1], s)
    }
}

/// Coordinatewise map applied by [`RhsSpec::PointwiseNonlinear`] to the inner
/// value `u`; the logistic map also reads the current state `x(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarMap {
    Identity,
    Negate,
    /// `x_i(t) (1 − u_i)`.
    Logistic,
    Sin,
    Cubic,
}

impl ScalarMap {
    fn apply<T: Real>(self, u: T, current: T) -> T {
        match self {
            ScalarMap::Identity => u,
            ScalarMap::Negate => -u,
            ScalarMap::Logistic => current * (T::one() - u),
            ScalarMap::Sin => u.sin(),
            ScalarMap::Cubic => u * u * u,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DelayTerm<T: Real> {
    pub matrix: DMatrix<T>,
    pub delay: T,
}

/// The right-hand side `F : X → Y`.
#[derive(Clone, Debug, PartialEq)]
pub enum RhsSpec<T: Real> {
    /// `Σ C_k x(t − τ_k)`, read by linear interpolation between grid samples.
    DiscreteDelays(Vec<DelayTerm<T>>),
    /// `∫_{-h}^0 K(θ) x(t+θ) dθ` with `K` given at equispaced nodes of `[-h, 0]`,
    /// integrated by the trapezoid rule on those nodes.
    DistributedKernel(Vec<DMatrix<T>>),
    PointwiseNonlinear { inner: Box<RhsSpec<T>>, map: ScalarMap, scale: T },
    Sum(Vec<RhsSpec<T>>),
    Constant(DVector<T>),
}

impl<T: Real> RhsSpec<T> {
    pub fn zero(n: usize) -> Self {
        RhsSpec::Constant(DVector::zeros(n))
    }

    pub fn point_delay(matrix: DMatrix<T>, delay: T) -> Self {
        RhsSpec::DiscreteDelays(vec![DelayTerm { matrix, delay }])
    }

    pub fn validate(&self, h: T, dim: usize) -> Result<()> {
        let square = |m: &DMatrix<T>| -> Result<()> {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: m.nrows().max(m.ncols()) });
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("matrix entries must be finite".into()));
            }
            Ok(())
        };
        match self {
            RhsSpec::DiscreteDelays(terms) => {
                for t in terms {
                    square(&t.matrix)?;
                    if !(t.delay >= T::zero() && t.delay <= h * (T::one() + lit(1e-12))) {
                        return Err(Error::InvalidInput(format!("delay {} outside [0, h]", to_f64(t.delay))));
                    }
                }
                Ok(())
            }
            RhsSpec::DistributedKernel(nodes) => {
                if nodes.len() < 2 {
                    return Err(Error::InvalidInput("kernel needs at least two nodes".into()));
                }
                nodes.iter().try_for_each(square)
            }
            RhsSpec::PointwiseNonlinear { inner, scale, .. } => {
                if !scale.is_finite() {
                    return Err(Error::InvalidInput("nonlinearity scale must be finite".into()));
                }
                inner.validate(h, dim)
            }
            RhsSpec::Sum(parts) => parts.iter().try_for_each(|p| p.validate(h, dim)),
            RhsSpec::Constant(c) => {
                if c.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: c.len() });
                }
                Ok(())
            }
        }
    }

    pub fn eval<H: HistorySample<T>>(&self, x: &H) -> DVector<T> {
        match self {
            RhsSpec::DiscreteDelays(terms) => {
                let mut acc = DVector::zeros(x.dim());
                for t in terms {
                    acc += &t.matrix * x.at(-t.delay);
                }
                acc
            }
            RhsSpec::DistributedKernel(nodes) => {
                let q = nodes.len() - 1;
                let h = x.delay();
                let w = h / from_usize::<T>(q);
                let mut acc = DVector::zeros(x.dim());
                for (i, k) in nodes.iter().enumerate() {
                    let theta = if i == q { T::zero() } else { -h + w * from_usize(i) };
                    let c = if i == 0 || i == q { w / lit(2.0) } else { w };
                    acc += k * x.at(theta) * c;
                }
                acc
            }
            RhsSpec::PointwiseNonlinear { inner, map, scale } => {
                let u = inner.eval(x);
                let now = x.at(T::zero());
                u.zip_map(&now, |ui, xi| *scale * map.apply(ui, xi))
            }
            RhsSpec::Sum(parts) => {
                let mut acc = DVector::zeros(x.dim());
                for p in parts {
                    acc += p.eval(x);
                }
                acc
            }
            RhsSpec::Constant(c) => c.clone(),
        }
    }

    /// `true` when `F` is linear (so `F(0) = 0` and superposition holds).
    pub fn is_linear(&self) -> bool {
        match self {
            RhsSpec::DiscreteDelays(_) | RhsSpec::DistributedKernel(_) => true,
            RhsSpec::PointwiseNonlinear { inner, map, .. } => {
                matches!(map, ScalarMap::Identity | ScalarMap::Negate) && inner.is_linear()
            }
            RhsSpec::Sum(parts) => parts.iter().all(|p| p.is_linear()),
            RhsSpec::Constant(c) => c.iter().all(|x| *x == T::zero()),
        }
    }

    /// A global Lipschitz constant with respect to the sup norm on histories of
    /// delay `h`, when one follows from the structure; `None` for the non-global maps.
    pub fn lipschitz_bound(&self, h: T, norm: Norm) -> Option<T> {
        match self {
            RhsSpec::DiscreteDelays(terms) => Some(terms.iter().fold(T::zero(), |s, t| s + norm.operator(&t.matrix))),
            RhsSpec::DistributedKernel(nodes) => {
                let q = nodes.len() - 1;
                let w = h / from_usize::<T>(q);
                let mut acc = T::zero();
                for (i, k) in nodes.iter().enumerate() {
                    let c = if i == 0 || i == q { w / lit(2.0) } else { w };
                    acc += c * norm.operator(k);
                }
                Some(acc)
            }
            RhsSpec::PointwiseNonlinear { inner, map, scale } => match map {
                ScalarMap::Identity | ScalarMap::Negate | ScalarMap::Sin => inner.lipschitz_bound(h, norm).map(|l| l * scale.abs()),
                ScalarMap::Logistic | ScalarMap::Cubic => None,
            },
            RhsSpec::Sum(parts) => parts.iter().try_fold(T::zero(), |s, p| p.lipschitz_bound(h, norm).map(|l| s + l)),
            RhsSpec::Constant(_) => Some(T::zero()),
        }
    }
}

/// Checks a declared Lipschitz constant on random history pairs:
/// `|F(φ) − F(ψ)| ≤ 1.05 L |φ − ψ|`. Returns the largest sampled ratio.
pub fn validate_lipschitz<T: Real>(
    rhs: &RhsSpec<T>,
    declared: T,
    h: T,
    m: usize,
    dim: usize,
    norm: Norm,
    seed: u64,
    samples: usize,
) -> Result<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::zero();
    let draw = |rng: &mut ChaCha8Rng| -> Result<HistoryX<T>> {
        let values = (0..=m).map(|_| DVector::from_fn(dim, |_, _| lit::<T>(rng.random_range(-1.0..1.0)))).collect();
        HistoryX::new(h, values, norm)
    };
    for _ in 0..samples {
        let a = draw(&mut rng)?;
        let b = draw(&mut rng)?;
        let d = a.max_distance(&b)?;
        if d == T::zero() {
            continue;
        }
        let ratio = norm.of(&(rhs.eval(&a) - rhs.eval(&b))) / d;
        worst = worst.max(ratio);
    }
    if worst > declared * lit(1.05) {
        return Err(Error::LipschitzViolated { declared: to_f64(declared), sampled: to_f64(worst) });
    }
    Ok(worst)
}
