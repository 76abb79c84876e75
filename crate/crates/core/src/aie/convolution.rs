use nalgebra::DVector;

use super::trajectory::aligned_count;
use crate::error::{Error, Result};
use crate::scalar::{exp_growth_factor, from_usize, lit, Real};
use crate::semigroup::SemigroupHandle;
use crate::sun_duality::{j_embed, j_inverse, sunstar_shift, HistoryX, RangeGate, SunStarState};

/// `∫_r^s T₀⊙*(t−τ) G(τ) dτ` for sun-star valued `G` sampled at `r + kΔ`,
/// `k = 0..=K`, by the midpoint rule with `G` interpolated linearly to the
/// cell midpoints.
pub fn weakstar_convolve<T: Real>(
    handle: &SemigroupHandle<T>,
    g: &[SunStarState<T>],
    t: T,
    s: T,
    r: T,
) -> Result<SunStarState<T>> {
    let first = g.first().ok_or_else(|| Error::InvalidInput("need at least one sample".into()))?;
    if !(r >= T::zero() && r <= s && s <= t) {
        return Err(Error::InvalidInput("limits must satisfy 0 <= r <= s <= t".into()));
    }
    let mut acc = SunStarState::zeros(first.h, first.m(), first.dim(), first.norm);
    let k = g.len() - 1;
    if k == 0 || s == r {
        return Ok(acc);
    }
    let step = (s - r) / from_usize::<T>(k);
    aligned_count(t - r, step)?;
    for c in 0..k {
        let mut mid = g[c].clone();
        mid.add_scaled(&g[c + 1], T::one())?;
        let mid_time = r + step * (from_usize::<T>(c) + lit(0.5));
        let mid = SunStarState { head: mid.head / lit::<T>(2.0), tail: mid.tail.into_iter().map(|v| v / lit::<T>(2.0)).collect(), ..mid };
        acc.add_scaled(&sunstar_shift(handle, t - mid_time, &mid)?, step)?;
    }
    Ok(acc)
}

/// `∫_r^s T₀⊙*(t−τ) ℓ y(τ) dτ` for `Y`-valued samples `y(r + kΔ)` with
/// `Δ = h/m`, assembled from propagators at half steps.
///
/// The head is `Σ Δ S(t−τ_c) y_c` over cell midpoints `τ_c`; the tail at `θ`
/// keeps the cells lying in `[r, min(s, t−θ)]` and propagates them to `t−θ`.
pub fn weakstar_convolve_ell<T: Real>(
    handle: &SemigroupHandle<T>,
    y: &[DVector<T>],
    t: T,
    r: T,
    h: T,
    m: usize,
) -> Result<SunStarState<T>> {
    let dim = handle.dim();
    let norm = handle.norm();
    let step = h / from_usize::<T>(m);
    let cells = y.len().saturating_sub(1);
    let s = r + step * from_usize(cells);
    if !(r >= T::zero() && s <= t * (T::one() + lit(1e-12))) {
        return Err(Error::InvalidInput("limits must satisfy 0 <= r <= s <= t".into()));
    }
    let offset = aligned_count(t - r, step)?;
    let mut out = SunStarState::zeros(h, m, dim, norm);
    if cells == 0 {
        return Ok(out);
    }
    let table = handle.table(step / lit(2.0), 2 * offset)?;
    let mids: Vec<DVector<T>> = (0..cells).map(|c| (&y[c] + &y[c + 1]) / lit::<T>(2.0)).collect();
    // Half-step index of t − θ_i − τ_c is 2(offset − i − c) − 1.
    let conv_at = |i: usize| -> DVector<T> {
        let mut acc = DVector::zeros(dim);
        if i >= offset {
            return acc;
        }
        let last = cells.min(offset - i);
        for (c, yc) in mids.iter().enumerate().take(last) {
            acc += table.apply(2 * (offset - i - c) - 1, yc);
        }
        acc * step
    };
    out.head = conv_at(0);
    for i in 0..=m {
        out.tail[i] = conv_at(i);
    }
    Ok(out)
}

/// `ψ(θ) = ∫_0^{(t+θ)⁺} S(t+θ−τ) f(τ) dτ` for samples `f(kΔ)`, `k = 0..=N`,
/// `t = NΔ`, by the trapezoid rule at each node of a grid with `h/Δ` cells.
pub fn variation_of_constants_psi<T: Real>(
    handle: &SemigroupHandle<T>,
    f: &[DVector<T>],
    step: T,
    h: T,
) -> Result<HistoryX<T>> {
    let m = aligned_count(h, step)?;
    if m == 0 {
        return Err(Error::InvalidInput("delay must span at least one step".into()));
    }
    let n = f.len().checked_sub(1).ok_or_else(|| Error::InvalidInput("need at least one sample".into()))?;
    let table = handle.table(step, n)?;
    let dim = handle.dim();
    let half: T = lit(0.5);
    let values = (0..=m)
        .map(|i| {
            // t + θ_i = (N − m + i)Δ.
            let mut acc = DVector::zeros(dim);
            if n + i <= m {
                return acc;
            }
            let j = n + i - m;
            for (k, fk) in f.iter().enumerate().take(j + 1) {
                let w = if k == 0 || k == j { half } else { T::one() };
                acc += table.apply(j - k, fk) * w;
            }
            acc * step
        })
        .collect();
    HistoryX::new(h, values, handle.norm())
}

/// Distance between the weak* convolution of `ℓ f` over `[0, t]` and `jψ`.
pub fn range_identity_check<T: Real>(handle: &SemigroupHandle<T>, f: &[DVector<T>], step: T, h: T) -> Result<T> {
    let m = aligned_count(h, step)?;
    let t = step * from_usize(f.len().saturating_sub(1));
    let conv = weakstar_convolve_ell(handle, f, t, T::zero(), h, m)?;
    let psi = variation_of_constants_psi(handle, f, step, h)?;
    conv.distance(&j_embed(&psi))
}

/// `(|j⁻¹ ∫_0^t T₀⊙*(t−τ) ℓ f(τ) dτ|, M (e^{ωt} − 1)/ω sup|f|)`.
pub fn convolution_bound_check<T: Real>(handle: &SemigroupHandle<T>, f: &[DVector<T>], step: T, h: T) -> Result<(T, T)> {
    let m = aligned_count(h, step)?;
    let t = step * from_usize(f.len().saturating_sub(1));
    let conv = weakstar_convolve_ell(handle, f, t, T::zero(), h, m)?;
    let lhs = j_inverse(&conv, RangeGate::default())?.sup_norm();
    let (big_m, omega) = handle.growth_bound();
    let sup_f = f.iter().fold(T::zero(), |a, v| a.max(handle.norm().of(v)));
    Ok((lhs, big_m * exp_growth_factor(omega, t) * sup_f))
}
