//! Gauss–Legendre rules and small exact product rules for piecewise-linear data.

use std::sync::OnceLock;

use nalgebra::DVector;

use crate::scalar::{lit, Real};

const MAX_ORDER: usize = 32;

fn legendre_table() -> &'static Vec<Vec<(f64, f64)>> {
    static TABLE: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();
    TABLE.get_or_init(|| (0..=MAX_ORDER).map(compute_rule).collect())
}

// Newton iteration on P_n started from the Chebyshev-like guess.
fn compute_rule(n: usize) -> Vec<(f64, f64)> {
    if n == 0 {
        return Vec::new();
    }
    let mut rule = vec![(0.0, 0.0); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule[i] = (-x, w);
        rule[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        rule[n / 2].0 = 0.0;
    }
    rule
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`, `1 <= n <= 32`.
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    assert!((1..=MAX_ORDER).contains(&n), "Gauss-Legendre order out of range");
    &legendre_table()[n]
}

/// Integrates a vector-valued function over `[a, b]` with one Gauss–Legendre panel.
pub fn gl_panel<T: Real, F: Fn(T) -> DVector<T>>(f: &F, a: T, b: T, order: usize, dim: usize) -> DVector<T> {
    let half = (b - a) / lit(2.0);
    let mid = (a + b) / lit(2.0);
    let mut acc = DVector::zeros(dim);
    for &(x, w) in gauss_legendre(order) {
        acc += f(mid + half * lit(x)) * (half * lit(w));
    }
    acc
}

/// Scalar variant of [`gl_panel`].
pub fn gl_panel_scalar<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, order: usize) -> T {
    let half = (b - a) / lit(2.0);
    let mid = (a + b) / lit(2.0);
    let mut acc = T::zero();
    for &(x, w) in gauss_legendre(order) {
        acc += f(mid + half * lit(x)) * (half * lit(w));
    }
    acc
}

/// `∫ <a(s), b(s)> ds` over a cell of length `len` when both factors are linear
/// with endpoint values `(a0, a1)` and `(b0, b1)`.
#[inline]
pub fn linear_product<T: Real>(len: T, a0: &DVector<T>, a1: &DVector<T>, b0: &DVector<T>, b1: &DVector<T>) -> T {
    let two: T = lit(2.0);
    len / lit(6.0) * (two * a0.dot(b0) + a0.dot(b1) + a1.dot(b0) + two * a1.dot(b1))
}

/// Same rule with a matrix-valued left factor given by its action, returning a vector:
/// `∫ A(s) g(s) ds` where `A` and `g` are linear on the cell.
#[inline]
pub fn linear_product_vec<T: Real>(len: T, a0g0: DVector<T>, a0g1: DVector<T>, a1g0: DVector<T>, a1g1: DVector<T>) -> DVector<T> {
    let two: T = lit(2.0);
    (a0g0 * two + a0g1 + a1g0 + a1g1 * two) * (len / lit(6.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for n in 1..=12 {
            let rule = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let s: f64 = rule.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((s - exact).abs() < 1e-13, "n={n} deg={deg}: {s} vs {exact}");
            }
        }
    }

    #[test]
    fn weights_sum_to_two() {
        for n in 1..=MAX_ORDER {
            let s: f64 = gauss_legendre(n).iter().map(|p| p.1).sum();
            assert!((s - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_product_matches_gauss() {
        let a0 = DVector::from_vec(vec![1.0, -2.0]);
        let a1 = DVector::from_vec(vec![0.5, 3.0]);
        let b0 = DVector::from_vec(vec![-1.0, 4.0]);
        let b1 = DVector::from_vec(vec![2.0, 0.25]);
        let len = 0.7;
        let f = |s: f64| {
            let u = s / len;
            let a = &a0 * (1.0 - u) + &a1 * u;
            let b = &b0 * (1.0 - u) + &b1 * u;
            a.dot(&b)
        };
        let q = gl_panel_scalar(&f, 0.0, len, 3);
        assert!((q - linear_product(len, &a0, &a1, &b0, &b1)).abs() < 1e-14);
    }
}
