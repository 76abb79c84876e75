//! Reference computations used to check the production code paths.
//!
//! Everything here is deliberately plain: `f64` arithmetic, adaptive Simpson
//! quadrature and direct evaluation of the defining formulas, sharing no
//! assembly code with the modules under test.

use nalgebra::{DMatrix, DVector};

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of a scalar function on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson for vector-valued integrands (error measured in the max norm).
pub fn adaptive_simpson_vec<F: Fn(f64) -> DVector<f64>>(f: &F, a: f64, b: f64, tol: f64, dim: usize) -> DVector<f64> {
    if a == b {
        return DVector::zeros(dim);
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (&fa + &fm * 4.0 + &fb) * ((b - a) / 6.0);
    simpson_vec_rec(f, a, b, &fa, &fm, &fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_vec_rec<F: Fn(f64) -> DVector<f64>>(
    f: &F,
    a: f64,
    b: f64,
    fa: &DVector<f64>,
    fm: &DVector<f64>,
    fb: &DVector<f64>,
    whole: DVector<f64>,
    tol: f64,
    depth: u32,
) -> DVector<f64> {
    let m = 0.5 * (a + b);
    let flm = f(0.5 * (a + m));
    let frm = f(0.5 * (m + b));
    let left = (fa + &flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + &frm * 4.0 + fb) * ((b - m) / 6.0);
    let delta = &left + &right - &whole;
    if depth == 0 || delta.amax() <= 15.0 * tol || (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
        return left + right + delta / 15.0;
    }
    simpson_vec_rec(f, a, m, fa, &flm, fm, left, 0.5 * tol, depth - 1) + simpson_vec_rec(f, m, b, fm, &frm, fb, right, 0.5 * tol, depth - 1)
}

/// `e^{tB}` by a long Taylor series with scaling and squaring, independent of
/// the production exponential.
pub fn expm_taylor(b: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = b.nrows();
    let a = b * t;
    let norm = a.iter().fold(0.0f64, |m, x| m.max(x.abs())) * n as f64;
    let mut s = 0u32;
    while norm / 2f64.powi(s as i32) > 0.25 {
        s += 1;
    }
    let a = a / 2f64.powi(s as i32);
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..30 {
        term = &term * &a / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// `∫_0^∞ e^{−λt} e^{tB} y dt`, truncated where `e^{(ω−λ)T} <= 1e-12` and
/// integrated panel by panel.
pub fn laplace_of_semigroup(b: &DMatrix<f64>, omega: f64, lambda: f64, y: &DVector<f64>) -> DVector<f64> {
    let horizon = (1e12f64).ln() / (lambda - omega);
    let panels = (horizon * (lambda.abs() + b.amax() + 1.0)).ceil().max(8.0) as usize;
    let width = horizon / panels as f64;
    let mut acc = DVector::zeros(y.len());
    for p in 0..panels {
        let lo = p as f64 * width;
        // Propagate from the panel start so each evaluation only needs a short exponential.
        let base = expm_taylor(b, lo) * y;
        acc += adaptive_simpson_vec(
            &|t: f64| expm_taylor(b, t - lo) * &base * (-lambda * t).exp(),
            lo,
            lo + width,
            1e-14,
            y.len(),
        );
    }
    acc
}

/// `<T₀(t)φ, (y⊙, g)>` for continuous `φ` and `g` given as closures:
/// `<S(t)φ(0), y⊙> + ∫_0^h <(T₀(t)φ)(−θ), g(θ)> dθ`, split where the shifted
/// history switches from the semigroup part to the old history.
pub fn continuum_shift_pairing(
    b: &DMatrix<f64>,
    h: f64,
    phi: &dyn Fn(f64) -> DVector<f64>,
    y_sun: &DVector<f64>,
    g: &dyn Fn(f64) -> DVector<f64>,
    t: f64,
    tol: f64,
) -> f64 {
    let phi0 = phi(0.0);
    let mut acc = (expm_taylor(b, t) * &phi0).dot(y_sun);
    let split = t.min(h);
    acc += adaptive_simpson(&|th: f64| (expm_taylor(b, t - th) * &phi0).dot(&g(th)), 0.0, split, tol);
    if split < h {
        acc += adaptive_simpson(&|th: f64| phi(t - th).dot(&g(th)), split, h, tol);
    }
    acc
}

/// A functional on histories with data on a uniform grid of `m` cells:
/// jump at zero, piecewise linear density cells, and interior jumps at grid nodes.
#[derive(Clone, Debug)]
pub struct GridFunctional {
    pub jump0: DVector<f64>,
    pub cells: Vec<(DVector<f64>, DVector<f64>)>,
    /// `(k, w)`: jump `w` at `θ = kΔ`, `1 <= k <= m`.
    pub jumps: Vec<(usize, DVector<f64>)>,
}

/// `∫_0^∞ e^{−λt} <T₀(t)φ, f> dt` for a piecewise linear history on `m` cells.
///
/// On `[0, h]` each time cell is integrated with Gauss–Legendre nodes; the
/// inner `θ` integral is split where the history switches branch and at the
/// kinks of the shifted history. Beyond `h` the state is pure semigroup and
/// the tail reduces to a Laplace transform of `e^{tBᵀ}`.
pub fn laplace_resolvent_pairing(
    b: &DMatrix<f64>,
    h: f64,
    phi: &[DVector<f64>],
    f: &GridFunctional,
    omega: f64,
    lambda: f64,
) -> f64 {
    let m = phi.len() - 1;
    assert_eq!(f.cells.len(), m, "density must share the history grid");
    let dx = h / m as f64;
    let phi_at = |s: f64| -> DVector<f64> {
        let x = ((s + h) / dx).clamp(0.0, m as f64);
        let i = (x.floor() as usize).min(m - 1);
        let r = x - i as f64;
        &phi[i] * (1.0 - r) + &phi[i + 1] * r
    };
    let g_at = |i: usize, nu: f64| -> DVector<f64> {
        let (l, r) = &f.cells[i];
        l + (r - l) * (nu / dx)
    };
    let step = expm_taylor(b, dx);
    let mut p = vec![phi[m].clone()];
    let mut mats = vec![DMatrix::identity(b.nrows(), b.nrows())];
    for k in 1..=m {
        p.push(&step * &p[k - 1]);
        mats.push(&step * &mats[k - 1]);
    }
    let gl = gauss_nodes();
    let mut total = 0.0;
    for &(xd, wd) in &gl {
        let delta = dx * xd;
        // Short propagators for both halves of a split cell.
        let first: Vec<(f64, f64, DMatrix<f64>)> = gl
            .iter()
            .map(|&(x, w)| (delta * x, delta * w, expm_taylor(b, delta - delta * x)))
            .collect();
        let second: Vec<(f64, f64, DMatrix<f64>)> = gl
            .iter()
            .map(|&(x, w)| {
                let nu = delta + (dx - delta) * x;
                (nu, (dx - delta) * w, expm_taylor(b, dx + delta - nu))
            })
            .collect();
        let e_delta = expm_taylor(b, delta);
        for j in 0..m {
            let t = j as f64 * dx + delta;
            let mut val = (&e_delta * &p[j]).dot(&f.jump0);
            for (k, w) in &f.jumps {
                let x = if *k <= j { &e_delta * &p[j - k] } else { phi_at(t - *k as f64 * dx) };
                val += x.dot(w);
            }
            for i in 0..m {
                for (nu, w, e) in &first {
                    let x = if i <= j { e * &p[j - i] } else { phi_at(t - i as f64 * dx - nu) };
                    val += w * x.dot(&g_at(i, *nu));
                }
                for (nu, w, e) in &second {
                    let x = if i < j { e * &p[j - i - 1] } else { phi_at(t - i as f64 * dx - nu) };
                    val += w * x.dot(&g_at(i, *nu));
                }
            }
            total += dx * wd * (-lambda * t).exp() * val;
        }
    }
    // z = S*(h) w_0 + Σ S*(h − t_k) w_k + ∫ S*(h − θ) g(θ) dθ.
    let mut z = mats[m].tr_mul(&f.jump0);
    for (k, w) in &f.jumps {
        z += mats[m - k].tr_mul(w);
    }
    let cell_props: Vec<(f64, f64, DMatrix<f64>)> =
        gl.iter().map(|&(x, w)| (dx * x, dx * w, expm_taylor(b, dx - dx * x))).collect();
    for i in 0..m {
        for (nu, w, e) in &cell_props {
            z += (e * &mats[m - i - 1]).tr_mul(&g_at(i, *nu)) * *w;
        }
    }
    let tail = laplace_of_semigroup(&b.transpose(), omega, lambda, &z);
    total + (-lambda * h).exp() * phi[m].dot(&tail)
}

/// Ten-point Gauss–Legendre nodes and weights on `[0, 1]`.
fn gauss_nodes() -> Vec<(f64, f64)> {
    const X: [f64; 5] = [0.148_874_338_981_631_2, 0.433_395_394_129_247_2, 0.679_409_568_299_024_4, 0.865_063_366_688_984_5, 0.973_906_528_517_171_7];
    const W: [f64; 5] = [0.295_524_224_714_752_9, 0.269_266_719_309_996_4, 0.219_086_362_515_982_0, 0.149_451_349_150_580_6, 0.066_671_344_308_688_1];
    let mut out = Vec::with_capacity(10);
    for k in (0..5).rev() {
        out.push((0.5 * (1.0 - X[k]), 0.5 * W[k]));
    }
    for k in 0..5 {
        out.push((0.5 * (1.0 + X[k]), 0.5 * W[k]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_handles_smooth_and_kinked() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-13);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
        let k = adaptive_simpson(&|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-13);
        assert!((k - (0.045 + 0.245)).abs() < 1e-11);
    }

    #[test]
    fn gauss_nodes_integrate_polynomials() {
        let v: f64 = gauss_nodes().iter().map(|(x, w)| w * x.powi(19)).sum();
        assert!((v - 1.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn laplace_pairing_of_constant_history_under_zero_generator() {
        // φ ≡ 1, B = 0, f = unit jump at zero: <T₀(t)φ, f> = 1, so the transform is 1/λ.
        let b = DMatrix::zeros(1, 1);
        let phi = vec![DVector::from_element(1, 1.0); 11];
        let f = GridFunctional {
            jump0: DVector::from_element(1, 1.0),
            cells: vec![(DVector::zeros(1), DVector::zeros(1)); 10],
            jumps: vec![],
        };
        let v = laplace_resolvent_pairing(&b, 1.0, &phi, &f, 0.0, 2.0);
        assert!((v - 0.5).abs() < 1e-10, "{v}");
    }

    #[test]
    fn taylor_exponential_of_rotation() {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let e = expm_taylor(&b, 1.0);
        assert!((e[(0, 0)] - 1f64.cos()).abs() < 1e-14);
        assert!((e[(1, 0)] - 1f64.sin()).abs() < 1e-14);
    }
}
