use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::rhs::RhsSpec;
use super::trajectory::{aligned_count, Trajectory};
use crate::error::{Error, Result};
use crate::scalar::{exp_growth_factor, from_usize, lit, to_f64, Real};
use crate::semigroup::SemigroupHandle;
use crate::sun_duality::HistoryX;

/// Starting guess for the iteration on each window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialIterate {
    Zero,
    /// `x(t) = S(t − t_w) x(t_w)` on the window starting at `t_w`.
    #[default]
    FreeEvolution,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardOptions<T: Real> {
    pub picard_tol: T,
    pub max_iter: usize,
    pub initial: InitialIterate,
    /// Declared Lipschitz constant of `F`; sizes the contraction windows.
    /// Without one the structural bound of `F` is used, and failing that a
    /// single step per window.
    pub lipschitz: Option<T>,
}

impl<T: Real> Default for PicardOptions<T> {
    fn default() -> Self {
        Self { picard_tol: lit(1e-12), max_iter: 200, initial: InitialIterate::FreeEvolution, lipschitz: None }
    }
}

/// Diagnostics of a Picard run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub window_steps: usize,
    /// `M (e^{ωw} − 1)/ω · L` for the chosen window, when `L` was available.
    pub window_bound: Option<f64>,
    pub iterations: Vec<usize>,
    /// Largest ratio of successive iterate changes per window, measured while
    /// the changes stay above the rounding floor.
    pub contraction: Vec<f64>,
    pub growth_m: f64,
    pub growth_omega: f64,
    pub final_change: f64,
}

impl PicardReport {
    pub fn max_contraction(&self) -> f64 {
        self.contraction.iter().fold(0.0, |a, b| a.max(*b))
    }

    pub fn total_iterations(&self) -> usize {
        self.iterations.iter().sum()
    }
}

/// Largest number of steps `j` with `M (e^{ω jΔ} − 1)/ω · L <= 1/2`, at least one.
fn window_steps<T: Real>(m: T, omega: T, l: T, step: T, cap: usize) -> usize {
    if l <= T::zero() {
        return cap.max(1);
    }
    let bound = |j: usize| m * exp_growth_factor(omega, step * from_usize(j)) * l;
    let half: T = lit(0.5);
    if bound(1) > half {
        return 1;
    }
    let (mut lo, mut hi) = (1usize, cap.max(1));
    if bound(hi) <= half {
        return hi;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if bound(mid) <= half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Solves `u(t) = T₀(t)φ + j⁻¹ ∫_0^t T₀⊙*(t−τ) ℓ F(u(τ)) dτ` on `[0, horizon]`.
///
/// The `j⁻¹`-convolution is the variation-of-constants history, so on the
/// time grid the fixed point reads `x_{n+1} = S(Δ)(x_n + Δ/2 F_n) + Δ/2 F_{n+1}`,
/// the trapezoid rule for `∫ S(t−τ) F(x_τ) dτ`. Iterates are formed on
/// windows short enough for the map to contract.
pub fn picard_solve_aie<T: Real>(
    handle: &SemigroupHandle<T>,
    rhs: &RhsSpec<T>,
    phi: &HistoryX<T>,
    horizon: T,
    dt: T,
    opts: &PicardOptions<T>,
) -> Result<(Trajectory<T>, PicardReport)> {
    let h = phi.delay();
    let k = aligned_count(h, dt)?;
    let m = phi.m();
    if k == 0 || k % m != 0 {
        return Err(Error::Misaligned { t: to_f64(h / from_usize::<T>(m)), step: to_f64(dt) });
    }
    let n_steps = aligned_count(horizon, dt)?;
    rhs.validate(h, handle.dim())?;
    if phi.dim() != handle.dim() {
        return Err(Error::DimensionMismatch { expected: handle.dim(), got: phi.dim() });
    }
    let phi = if k == m { phi.clone() } else { phi.resample(k)? };
    let mut traj = Trajectory::from_history(&phi);
    let (big_m, omega) = handle.growth_bound();
    let prop = handle.propagator(dt)?;
    let lipschitz = opts.lipschitz.or_else(|| rhs.lipschitz_bound(h, handle.norm()));
    let w = match lipschitz {
        Some(l) => window_steps(big_m, omega, l, dt, n_steps),
        None => 1,
    };
    let window_bound = lipschitz.map(|l| to_f64(big_m * exp_growth_factor(omega, dt * from_usize(w)) * l));
    let mut report = PicardReport {
        window_steps: w,
        window_bound,
        iterations: Vec::new(),
        contraction: Vec::new(),
        growth_m: to_f64(big_m),
        growth_omega: to_f64(omega),
        final_change: 0.0,
    };
    let half_dt = dt / lit(2.0);
    let mut start = 0usize;
    while start < n_steps {
        let len = w.min(n_steps - start);
        let (iters, ratio, change) = solve_window(&mut traj, rhs, &prop, start, len, half_dt, opts)?;
        report.iterations.push(iters);
        report.contraction.push(ratio);
        report.final_change = report.final_change.max(change);
        start += len;
    }
    Ok((traj, report))
}

fn solve_window<T: Real>(
    traj: &mut Trajectory<T>,
    rhs: &RhsSpec<T>,
    prop: &DMatrix<T>,
    start: usize,
    len: usize,
    half_dt: T,
    opts: &PicardOptions<T>,
) -> Result<(usize, f64, f64)> {
    let base = traj.hist_cells() + start;
    let norm = traj.norm_kind();
    let x0 = traj.samples()[base].clone();
    let dim = x0.len();
    {
        let samples = traj.samples_mut();
        let mut prev = x0.clone();
        for _ in 0..len {
            let next = match opts.initial {
                InitialIterate::Zero => DVector::zeros(dim),
                InitialIterate::FreeEvolution => prop * &prev,
            };
            prev = next.clone();
            samples.push(next);
        }
    }
    let f0 = rhs.eval(&traj.view(start));
    let mut prev_change: Option<T> = None;
    let mut worst_ratio = 0.0f64;
    for iter in 1..=opts.max_iter {
        let forces: Vec<DVector<T>> = (1..=len).map(|j| rhs.eval(&traj.view(start + j))).collect();
        let mut x = x0.clone();
        let mut f_prev = &f0;
        let mut change = T::zero();
        let mut scale = norm.of(&x0);
        let samples = traj.samples_mut();
        for (j, fj) in forces.iter().enumerate() {
            x = prop * (&x + f_prev * half_dt) + fj * half_dt;
            let slot = &mut samples[base + j + 1];
            change = change.max(norm.of(&(&x - &*slot)));
            scale = scale.max(norm.of(&x));
            *slot = x.clone();
            f_prev = fj;
        }
        if !change.is_finite() || change > lit::<T>(1e12) * (T::one() + scale) {
            return Err(Error::NonContraction { window_start: to_f64(traj.time(base)), residual: to_f64(change), iterations: iter });
        }
        if let Some(p) = prev_change {
            // Ratios near the rounding floor carry no information.
            if p > T::eps() * lit(1e4) * (T::one() + scale) {
                worst_ratio = worst_ratio.max(to_f64(change / p));
            }
        }
        if change <= opts.picard_tol * (T::one() + scale) {
            return Ok((iter, worst_ratio, to_f64(change)));
        }
        prev_change = Some(change);
    }
    let residual = prev_change.map(to_f64).unwrap_or(f64::NAN);
    Err(Error::NonContraction { window_start: to_f64(traj.time(base)), residual, iterations: opts.max_iter })
}

/// `T(t)φ` for the semigroup perturbed by a linear `Φ`, computed through the
/// integral equation on a grid of step `h/m` (the grid of `φ`).
pub fn perturbed_semigroup_t<T: Real>(
    handle: &SemigroupHandle<T>,
    rhs: &RhsSpec<T>,
    t: T,
    phi: &HistoryX<T>,
    opts: &PicardOptions<T>,
) -> Result<HistoryX<T>> {
    if !rhs.is_linear() {
        return Err(Error::InvalidInput("perturbation must be linear".into()));
    }
    if t == T::zero() {
        return Ok(phi.clone());
    }
    let (traj, _) = picard_solve_aie(handle, rhs, phi, t, phi.step(), opts)?;
    Ok(traj.history_at(traj.n_steps()))
}

/// `|T(t+s)φ − T(t)T(s)φ|`.
pub fn semigroup_property_residual<T: Real>(
    handle: &SemigroupHandle<T>,
    rhs: &RhsSpec<T>,
    t: T,
    s: T,
    phi: &HistoryX<T>,
    opts: &PicardOptions<T>,
) -> Result<T> {
    let joint = perturbed_semigroup_t(handle, rhs, t + s, phi, opts)?;
    let split = perturbed_semigroup_t(handle, rhs, t, &perturbed_semigroup_t(handle, rhs, s, phi, opts)?, opts)?;
    joint.max_distance(&split)
}
