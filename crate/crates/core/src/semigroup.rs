//! Generators `B` on `Y = K^n` and the semigroups `S(t) = e^{tB}` they generate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Norm, Real};

/// Margin by which a resolvent parameter must exceed the growth exponent.
pub const RESOLVENT_MARGIN: f64 = 1e-6;

/// The coordinate space `Y`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceSpec {
    pub dim: usize,
    pub norm: Norm,
    pub label: String,
}

impl SpaceSpec {
    pub fn new(dim: usize, norm: Norm, label: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("space dimension must be positive".into()));
        }
        Ok(Self { dim, norm, label: label.into() })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec<T: Real> {
    Matrix(DMatrix<T>),
    Zero { n: usize },
    /// Sine-coefficient representation of `d ∂²` on `(0, ℓ)` with Dirichlet ends,
    /// eigenvalues `−d (kπ/ℓ)²` for `k = 1..modes`.
    DirichletLaplacianSpectral { modes: usize, diffusivity: T, length: T },
}

impl<T: Real> GeneratorSpec<T> {
    pub fn dim(&self) -> usize {
        match self {
            GeneratorSpec::Matrix(b) => b.nrows(),
            GeneratorSpec::Zero { n } => *n,
            GeneratorSpec::DirichletLaplacianSpectral { modes, .. } => *modes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GeneratorSpec::Matrix(b) => {
                if b.nrows() == 0 || b.nrows() != b.ncols() {
                    return Err(Error::InvalidInput("generator matrix must be square and non-empty".into()));
                }
                if b.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput("generator matrix entries must be finite".into()));
                }
            }
            GeneratorSpec::Zero { n } => {
                if *n == 0 {
                    return Err(Error::InvalidInput("zero generator needs n >= 1".into()));
                }
            }
            GeneratorSpec::DirichletLaplacianSpectral { modes, diffusivity, length } => {
                if *modes == 0 || !(*diffusivity > T::zero()) || !(*length > T::zero()) {
                    return Err(Error::InvalidInput("spectral Laplacian needs modes >= 1, d > 0, length > 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Eigenvalues of the diagonal spectral family, `−d (kπ/ℓ)²`.
    pub fn spectral_eigenvalues(&self) -> Option<DVector<T>> {
        match self {
            GeneratorSpec::DirichletLaplacianSpectral { modes, diffusivity, length } => Some(DVector::from_fn(*modes, |k, _| {
                let kk: T = from_usize(k + 1);
                -*diffusivity * (kk * T::pi() / *length).powi(2)
            })),
            _ => None,
        }
    }

    /// Dense matrix of `B`.
    pub fn matrix(&self) -> DMatrix<T> {
        match self {
            GeneratorSpec::Matrix(b) => b.clone(),
            GeneratorSpec::Zero { n } => DMatrix::zeros(*n, *n),
            GeneratorSpec::DirichletLaplacianSpectral { .. } => {
                DMatrix::from_diagonal(&self.spectral_eigenvalues().expect("spectral family"))
            }
        }
    }
}

/// `B`, its semigroup and a growth pair `(M, ω)` with `|S(t)| <= M e^{ωt}`.
#[derive(Clone, Debug)]
pub struct SemigroupHandle<T: Real> {
    generator: GeneratorSpec<T>,
    norm: Norm,
    b: DMatrix<T>,
    diag: Option<DVector<T>>,
    growth_m: T,
    growth_omega: T,
}

impl<T: Real> SemigroupHandle<T> {
    /// Builds the handle; `sample_horizon` is the window on which a sampled
    /// growth constant is certified (typically ten delays).
    pub fn new(generator: GeneratorSpec<T>, norm: Norm, sample_horizon: T) -> Result<Self> {
        generator.validate()?;
        if !(sample_horizon > T::zero()) {
            return Err(Error::InvalidInput("growth sampling horizon must be positive".into()));
        }
        let b = generator.matrix();
        let diag = match &generator {
            GeneratorSpec::Zero { n } => Some(DVector::zeros(*n)),
            GeneratorSpec::DirichletLaplacianSpectral { .. } => generator.spectral_eigenvalues(),
            GeneratorSpec::Matrix(_) => None,
        };
        let mut handle = Self { generator, norm, b, diag, growth_m: T::one(), growth_omega: T::zero() };
        let (m, w) = handle.estimate_growth(sample_horizon);
        handle.growth_m = m;
        handle.growth_omega = w;
        Ok(handle)
    }

    pub fn zero(n: usize) -> Self {
        Self::new(GeneratorSpec::Zero { n }, Norm::Euclidean, T::one()).expect("valid zero generator")
    }

    pub fn generator(&self) -> &GeneratorSpec<T> {
        &self.generator
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    /// Matrix of `B`.
    pub fn b_matrix(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.generator, GeneratorSpec::Zero { .. })
    }

    pub fn is_diagonal(&self) -> bool {
        self.diag.is_some()
    }

    /// `(M, ω)`.
    pub fn growth_bound(&self) -> (T, T) {
        (self.growth_m, self.growth_omega)
    }

    fn estimate_growth(&self, horizon: T) -> (T, T) {
        match &self.generator {
            GeneratorSpec::Zero { .. } => (T::one(), T::zero()),
            GeneratorSpec::DirichletLaplacianSpectral { .. } => {
                let mu = self.diag.as_ref().expect("spectral diagonal");
                (T::one(), mu.iter().fold(mu[0], |m, x| m.max(*x)))
            }
            GeneratorSpec::Matrix(b) => {
                let omega = b
                    .complex_eigenvalues()
                    .iter()
                    .fold(T::min_value().unwrap_or(-T::one() / T::eps()), |m, z| m.max(z.re))
                    + lit(1e-9);
                let mut times: Vec<T> = (0..200).map(|k| horizon * from_usize(k) / lit(199.0)).collect();
                // Logarithmic grid resolves transient growth at small t.
                for k in 0..60 {
                    times.push(horizon * lit(10f64.powf(-6.0 + 6.0 * k as f64 / 59.0)));
                }
                let mut worst = T::one();
                for t in times {
                    let s = self.propagator(t).expect("non-negative sample time");
                    let r = self.norm.operator(&s) * (-omega * t).exp();
                    if r.is_finite() {
                        worst = worst.max(r);
                    }
                }
                (worst * lit(1.05), omega)
            }
        }
    }

    fn check_time(t: T) -> Result<()> {
        if t < T::zero() || !t.is_finite() {
            return Err(Error::NegativeTime(to_f64(t)));
        }
        Ok(())
    }

    /// Matrix of `S(t)`.
    pub fn propagator(&self, t: T) -> Result<DMatrix<T>> {
        Self::check_time(t)?;
        Ok(match &self.diag {
            Some(mu) => DMatrix::from_diagonal(&mu.map(|m| (m * t).exp())),
            None => (&self.b * t).exp(),
        })
    }

    pub fn apply(&self, t: T, y: &DVector<T>) -> Result<DVector<T>> {
        Self::check_time(t)?;
        self.check_dim(y.len())?;
        Ok(match &self.diag {
            Some(mu) => y.zip_map(mu, |yi, m| yi * (m * t).exp()),
            None => (&self.b * t).exp() * y,
        })
    }

    pub fn apply_adjoint(&self, t: T, ystar: &DVector<T>) -> Result<DVector<T>> {
        Self::check_time(t)?;
        self.check_dim(ystar.len())?;
        Ok(match &self.diag {
            Some(_) => self.apply(t, ystar)?,
            None => (&self.b * t).exp().transpose() * ystar,
        })
    }

    fn check_lambda(&self, lambda: T) -> Result<()> {
        if !(lambda > self.growth_omega + lit(RESOLVENT_MARGIN)) {
            return Err(Error::LambdaNotAdmissible { lambda: to_f64(lambda), omega: to_f64(self.growth_omega) });
        }
        Ok(())
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got });
        }
        Ok(())
    }

    /// `(λ − B)⁻¹ y`.
    pub fn resolvent(&self, lambda: T, y: &DVector<T>) -> Result<DVector<T>> {
        self.check_lambda(lambda)?;
        self.check_dim(y.len())?;
        match &self.diag {
            Some(mu) => Ok(y.zip_map(mu, |yi, m| yi / (lambda - m))),
            None => {
                let n = self.dim();
                let a = DMatrix::identity(n, n) * lambda - &self.b;
                a.lu().solve(y).ok_or(Error::SingularSolve)
            }
        }
    }

    /// `(λ − B*)⁻¹ y*`.
    pub fn resolvent_adjoint(&self, lambda: T, ystar: &DVector<T>) -> Result<DVector<T>> {
        self.check_lambda(lambda)?;
        self.check_dim(ystar.len())?;
        match &self.diag {
            Some(_) => self.resolvent(lambda, ystar),
            None => {
                let n = self.dim();
                let a = DMatrix::identity(n, n) * lambda - self.b.transpose();
                a.lu().solve(ystar).ok_or(Error::SingularSolve)
            }
        }
    }

    /// `S(kΔ)` for `k = 0..=count`, built by repeated multiplication so that
    /// `S(iΔ) S(jΔ) = S((i+j)Δ)` holds to rounding.
    pub fn table(&self, step: T, count: usize) -> Result<PropagatorTable<T>> {
        let one = self.propagator(step)?;
        let n = self.dim();
        let mut mats = Vec::with_capacity(count + 1);
        mats.push(DMatrix::identity(n, n));
        for k in 1..=count {
            let next = match &self.diag {
                Some(mu) => DMatrix::from_diagonal(&mu.map(|m| (m * step * from_usize::<T>(k)).exp())),
                None => &one * &mats[k - 1],
            };
            mats.push(next);
        }
        Ok(PropagatorTable { step, mats })
    }
}

/// Cached propagators on an arithmetic time grid.
#[derive(Clone, Debug)]
pub struct PropagatorTable<T: Real> {
    step: T,
    mats: Vec<DMatrix<T>>,
}

impl<T: Real> PropagatorTable<T> {
    pub fn step(&self) -> T {
        self.step
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn get(&self, k: usize) -> &DMatrix<T> {
        &self.mats[k]
    }

    pub fn apply(&self, k: usize, y: &DVector<T>) -> DVector<T> {
        &self.mats[k] * y
    }

    pub fn apply_adjoint(&self, k: usize, y: &DVector<T>) -> DVector<T> {
        self.mats[k].tr_mul(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;

    fn m(rows: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, rows, data)
    }

    fn families() -> Vec<SemigroupHandle<f64>> {
        vec![
            SemigroupHandle::zero(2),
            SemigroupHandle::new(GeneratorSpec::Matrix(m(2, &[-1.0, 2.0, -0.5, -0.3])), Norm::Euclidean, 10.0).unwrap(),
            SemigroupHandle::new(
                GeneratorSpec::DirichletLaplacianSpectral { modes: 2, diffusivity: 0.5, length: std::f64::consts::PI },
                Norm::Euclidean,
                10.0,
            )
            .unwrap(),
        ]
    }

    #[test]
    fn scalar_decay_example() {
        let h = SemigroupHandle::new(GeneratorSpec::Matrix(m(1, &[-1.0])), Norm::Euclidean, 10.0).unwrap();
        let v = h.apply(1.0, &DVector::from_element(1, 1.0)).unwrap();
        assert!((v[0] - 0.3678794412).abs() < 1e-10);
        assert!((h.resolvent(1.0, &DVector::from_element(1, 1.0)).unwrap()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_generator_is_identity() {
        let h = SemigroupHandle::<f64>::zero(3);
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        assert_eq!(h.apply(7.5, &y).unwrap(), y);
        assert_eq!(h.growth_bound(), (1.0, 0.0));
        assert!((h.resolvent(2.0, &y).unwrap() - &y / 2.0).norm() < 1e-15);
        assert!(matches!(h.resolvent(0.0, &y), Err(Error::LambdaNotAdmissible { .. })));
        assert!(matches!(h.apply(-1.0, &y), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn spectral_first_mode_decay() {
        let h = SemigroupHandle::new(
            GeneratorSpec::DirichletLaplacianSpectral { modes: 3, diffusivity: 1.0, length: std::f64::consts::PI },
            Norm::Euclidean,
            1.0,
        )
        .unwrap();
        let v = h.apply(0.7, &DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
        assert!((v[0] - (-0.7f64).exp()).abs() < 1e-15);
        assert!((h.growth_bound().1 + 1.0).abs() < 1e-15);
    }

    #[test]
    fn normal_matrix_growth_constant_near_one() {
        let h = SemigroupHandle::new(GeneratorSpec::Matrix(m(2, &[-1.0, 3.0, -3.0, -1.0])), Norm::Euclidean, 10.0).unwrap();
        let (mm, w) = h.growth_bound();
        assert!(mm <= 1.05 + 1e-12 && mm >= 1.0);
        assert!((w + 1.0).abs() < 1e-6);
    }

    #[test]
    fn jordan_block_has_transient_growth() {
        let h = SemigroupHandle::new(GeneratorSpec::Matrix(m(2, &[-1.0, 1.0, 0.0, -1.0])), Norm::Euclidean, 10.0).unwrap();
        let (mm, w) = h.growth_bound();
        assert!(mm > 1.05);
        // Exact norm of e^{tJ} e^{t} = [[1, t], [0, 1]] at the horizon.
        let t = 10.0f64;
        let exact = (1.0 + t * t / 2.0 + t * (1.0 + t * t / 4.0).sqrt()).sqrt();
        assert!(mm >= exact * (-(w + 1.0) * t).exp() * 0.999);
        for k in 0..=200 {
            let t = 10.0 * k as f64 / 200.0;
            let s = h.propagator(t).unwrap();
            assert!(Norm::Euclidean.operator(&s) <= mm * (w * t).exp() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn matches_independent_exponential() {
        let b = m(3, &[0.1, -2.0, 0.3, 1.0, -0.4, 0.0, 0.2, 0.5, -1.5]);
        let h = SemigroupHandle::new(GeneratorSpec::Matrix(b.clone()), Norm::Euclidean, 10.0).unwrap();
        for t in [0.0, 0.01, 0.5, 2.0, 7.0] {
            let d = h.propagator(t).unwrap() - oracle::expm_taylor(&b, t);
            assert!(d.amax() < 1e-11 * (1.0 + oracle::expm_taylor(&b, t).amax()), "t={t}");
        }
    }

    #[test]
    fn strong_continuity_ladder() {
        for h in families() {
            let y = DVector::from_vec(vec![1.0, -0.5]);
            let mut prev = f64::INFINITY;
            let mut t = 1.0;
            for _ in 0..20 {
                let d = (h.apply(t, &y).unwrap() - &y).norm();
                assert!(d <= prev * (1.0 + 1e-12));
                if h.is_zero() {
                    assert_eq!(d, 0.0);
                }
                prev = d;
                t /= 2.0;
            }
            assert!(prev < 1e-5);
        }
    }

    #[test]
    fn resolvent_matches_laplace_transform() {
        for h in families() {
            let (_, w) = h.growth_bound();
            let y = DVector::from_vec(vec![0.3, -1.2]);
            for lam in [w + 1.0, w + 5.0] {
                let r = h.resolvent(lam, &y).unwrap();
                let oracle = oracle::laplace_of_semigroup(&h.b_matrix().clone(), w, lam, &y);
                assert!((&r - &oracle).norm() <= 1e-8 * (1.0 + r.norm()), "{r} vs {oracle}");
            }
        }
    }

    proptest! {
        #[test]
        fn semigroup_law(t in 0.0..2.0f64, s in 0.0..2.0f64, y0 in -3.0..3.0f64, y1 in -3.0..3.0f64) {
            let y = DVector::from_vec(vec![y0, y1]);
            for h in families() {
                let lhs = h.apply(t + s, &y).unwrap();
                let rhs = h.apply(t, &h.apply(s, &y).unwrap()).unwrap();
                prop_assert!((lhs - rhs).norm() <= 1e-10 * y.norm().max(1e-300));
                let (mm, w) = h.growth_bound();
                prop_assert!(h.apply(t, &y).unwrap().norm() <= mm * (w * t).exp() * y.norm() * (1.0 + 1e-12) + 1e-14);
            }
        }

        #[test]
        fn adjointness(t in 0.0..3.0f64, y in prop::collection::vec(-2.0..2.0f64, 2), z in prop::collection::vec(-2.0..2.0f64, 2)) {
            let (y, z) = (DVector::from_vec(y), DVector::from_vec(z));
            for h in families() {
                let lhs = h.apply(t, &y).unwrap().dot(&z);
                let rhs = y.dot(&h.apply_adjoint(t, &z).unwrap());
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + y.norm() * z.norm()));
            }
        }

        #[test]
        fn resolvent_identity(dl in 0.5..4.0f64, dm in 0.5..4.0f64, y in prop::collection::vec(-2.0..2.0f64, 2)) {
            let y = DVector::from_vec(y);
            for h in families() {
                let (_, w) = h.growth_bound();
                let (l, mu) = (w + dl, w + dm);
                let lhs = h.resolvent(l, &y).unwrap() - h.resolvent(mu, &y).unwrap();
                let rhs = h.resolvent(l, &h.resolvent(mu, &y).unwrap()).unwrap() * (mu - l);
                prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + y.norm()));
                let r = h.resolvent(l, &y).unwrap();
                let back = DMatrix::identity(2, 2) * l * &r - h.b_matrix() * &r;
                prop_assert!((back - &y).norm() <= 1e-12 * (1.0 + y.norm()));
            }
        }
    }
}
