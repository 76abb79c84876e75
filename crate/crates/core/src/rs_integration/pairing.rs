use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::scalar::Real;

pub type BilinearFn<T> = Arc<dyn Fn(&DVector<T>, &DVector<T>) -> DVector<T> + Send + Sync>;

#[derive(Clone)]
pub enum PairingKind<T: Real> {
    /// `<v, w>`, a scalar (one-dimensional `Z`).
    Duality,
    /// `v · α = α v` with a scalar right factor.
    ScalarRight,
    /// `α · w = α w` with a scalar left factor.
    ScalarLeft,
    Custom(BilinearFn<T>),
}

/// A continuous bilinear product `V × W → Z` with `|v·w| <= c |v| |w|`.
#[derive(Clone)]
pub struct BilinearPairing<T: Real> {
    kind: PairingKind<T>,
    bound: T,
}

impl<T: Real> fmt::Debug for BilinearPairing<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            PairingKind::Duality => "duality",
            PairingKind::ScalarRight => "scalar_right",
            PairingKind::ScalarLeft => "scalar_left",
            PairingKind::Custom(_) => "custom",
        };
        f.debug_struct("BilinearPairing").field("kind", &name).field("bound", &self.bound).finish()
    }
}

impl<T: Real> BilinearPairing<T> {
    /// Duality pairing between a space and its dual; the bound is 1 for dual norms.
    pub fn duality() -> Self {
        Self { kind: PairingKind::Duality, bound: T::one() }
    }

    pub fn scalar_right() -> Self {
        Self { kind: PairingKind::ScalarRight, bound: T::one() }
    }

    pub fn scalar_left() -> Self {
        Self { kind: PairingKind::ScalarLeft, bound: T::one() }
    }

    pub fn custom<F>(f: F, bound: T) -> Self
    where
        F: Fn(&DVector<T>, &DVector<T>) -> DVector<T> + Send + Sync + 'static,
    {
        Self { kind: PairingKind::Custom(Arc::new(f)), bound }
    }

    pub fn bound(&self) -> T {
        self.bound
    }

    pub fn kind(&self) -> &PairingKind<T> {
        &self.kind
    }

    pub fn apply(&self, v: &DVector<T>, w: &DVector<T>) -> DVector<T> {
        match &self.kind {
            PairingKind::Duality => DVector::from_element(1, v.dot(w)),
            PairingKind::ScalarRight => v * w[0],
            PairingKind::ScalarLeft => w * v[0],
            PairingKind::Custom(f) => f(v, w),
        }
    }

    /// Dimension of `Z` for the given argument dimensions.
    pub fn output_dim(&self, v_dim: usize, w_dim: usize) -> usize {
        match &self.kind {
            PairingKind::Duality => 1,
            PairingKind::ScalarRight => v_dim,
            PairingKind::ScalarLeft => w_dim,
            PairingKind::Custom(f) => f(&DVector::zeros(v_dim), &DVector::zeros(w_dim)).len(),
        }
    }

    /// Largest bilinearity defect over the supplied triples, relative to the term sizes.
    pub fn bilinearity_defect(&self, v1: &DVector<T>, v2: &DVector<T>, w1: &DVector<T>, w2: &DVector<T>, alpha: T) -> T {
        let left = self.apply(&(v1 * alpha + v2), w1) - (self.apply(v1, w1) * alpha + self.apply(v2, w1));
        let right = self.apply(v1, &(w1 * alpha + w2)) - (self.apply(v1, w1) * alpha + self.apply(v1, w2));
        let scale = (v1.norm() * alpha.abs() + v2.norm()) * (w1.norm() * alpha.abs() + w2.norm());
        left.norm().max(right.norm()) / scale.max(T::eps())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vecs(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0..10.0f64, n)
    }

    proptest! {
        #[test]
        fn pairings_are_bilinear(v1 in vecs(3), v2 in vecs(3), w1 in vecs(3), w2 in vecs(3), alpha in -5.0..5.0f64) {
            let (v1, v2) = (DVector::from_vec(v1), DVector::from_vec(v2));
            let (w1, w2) = (DVector::from_vec(w1), DVector::from_vec(w2));
            prop_assert!(BilinearPairing::duality().bilinearity_defect(&v1, &v2, &w1, &w2, alpha) < 1e-13);
            let s1 = DVector::from_element(1, w1[0]);
            let s2 = DVector::from_element(1, w2[0]);
            prop_assert!(BilinearPairing::scalar_right().bilinearity_defect(&v1, &v2, &s1, &s2, alpha) < 1e-13);
            let outer = BilinearPairing::custom(|a: &DVector<f64>, b: &DVector<f64>| DVector::from_vec(vec![a[0] * b[1], a[2] * b[0]]), 1.0);
            prop_assert!(outer.bilinearity_defect(&v1, &v2, &w1, &w2, alpha) < 1e-13);
        }

        #[test]
        fn duality_respects_bound(v in vecs(4), w in vecs(4)) {
            let (v, w) = (DVector::from_vec(v), DVector::from_vec(w));
            let p = BilinearPairing::duality();
            prop_assert!(p.apply(&v, &w).norm() <= p.bound() * v.norm() * w.norm() * (1.0 + 1e-14) + 1e-14);
        }
    }
}
