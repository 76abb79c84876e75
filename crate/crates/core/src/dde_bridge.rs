//! Mild solutions of the delay equation `ẋ = Bx + F(x_t)`, their one-to-one
//! correspondence with solutions of the abstract integral equation, and an
//! independent method-of-steps solver used as an oracle.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::aie::trajectory::aligned_count;
use crate::aie::{picard_solve_aie, HistorySample, PicardOptions, RhsSpec, Trajectory};
use crate::error::{Error, Result};
use crate::scalar::{from_usize, grid_tol, lerp, lit, to_f64, Real};
use crate::semigroup::{GeneratorSpec, SemigroupHandle};
use crate::sun_duality::HistoryX;

/// History of a Runge–Kutta stage at `t_n + cΔ`: recorded samples up to
/// `t_n`, and the chord from `x(t_n)` to the stage value beyond it.
struct StageHistory<'a, T: Real> {
    h: T,
    step: T,
    past: &'a [DVector<T>],
    c: T,
    stage: &'a DVector<T>,
}

impl<T: Real> HistorySample<T> for StageHistory<'_, T> {
    fn delay(&self) -> T {
        self.h
    }

    fn dim(&self) -> usize {
        self.stage.len()
    }

    fn at(&self, theta: T) -> DVector<T> {
        let last = self.past.len() - 1;
        // Position in steps relative to t_n.
        let mut s = self.c + theta / self.step;
        if (s - s.round()).abs() <= grid_tol::<T>() {
            s = s.round();
        }
        if s > T::zero() {
            return lerp(&self.past[last], self.stage, s / self.c);
        }
        let x = (from_usize::<T>(last) + s).max(T::zero());
        let i = x.floor().to_usize().unwrap_or(0).min(last);
        let frac = x - from_usize::<T>(i);
        if frac == T::zero() || i == last {
            return self.past[i].clone();
        }
        lerp(&self.past[i], &self.past[i + 1], frac)
    }
}

/// `(e^z − 1)/z` and `(e^z − 1 − z)/z²`.
fn phi_functions<T: Real>(z: T) -> (T, T) {
    if z.abs() < lit(1e-2) {
        let p1 = T::one() + z * (lit::<T>(0.5) + z * (lit::<T>(1.0 / 6.0) + z * (lit::<T>(1.0 / 24.0) + z * lit::<T>(1.0 / 120.0))));
        let p2 = lit::<T>(0.5) + z * (lit::<T>(1.0 / 6.0) + z * (lit::<T>(1.0 / 24.0) + z * (lit::<T>(1.0 / 120.0) + z * lit::<T>(1.0 / 720.0))));
        return (p1, p2);
    }
    let em1 = z.exp_m1();
    (em1 / z, (em1 - z) / (z * z))
}

fn prepare<T: Real>(handle: &SemigroupHandle<T>, rhs: &RhsSpec<T>, phi: &HistoryX<T>, horizon: T, dt: T) -> Result<(HistoryX<T>, usize)> {
    let h = phi.delay();
    let k = aligned_count(h, dt)?;
    if k == 0 || k % phi.m() != 0 {
        return Err(Error::Misaligned { t: to_f64(phi.step()), step: to_f64(dt) });
    }
    if phi.dim() != handle.dim() {
        return Err(Error::DimensionMismatch { expected: handle.dim(), got: phi.dim() });
    }
    rhs.validate(h, handle.dim())?;
    let n = aligned_count(horizon, dt)?;
    let phi = if k == phi.m() { phi.clone() } else { phi.resample(k)? };
    Ok((phi, n))
}

/// Steps `ẋ = Bx + F(x_t)` forward on the grid of step `dt`.
///
/// Matrix and zero generators use classical RK4; the spectral generator uses
/// the second-order exponential Runge–Kutta scheme on its diagonal. Stage
/// histories reaching past `t_n` are linear in time between `x(t_n)` and the
/// stage value.
pub fn method_of_steps_solve<T: Real>(
    handle: &SemigroupHandle<T>,
    rhs: &RhsSpec<T>,
    phi: &HistoryX<T>,
    horizon: T,
    dt: T,
) -> Result<Trajectory<T>> {
    let (phi, n_steps) = prepare(handle, rhs, phi, horizon, dt)?;
    let h = phi.delay();
    let mut samples = phi.values().to_vec();
    samples.reserve(n_steps);
    let force = |past: &[DVector<T>], c: T, stage: &DVector<T>| rhs.eval(&StageHistory { h, step: dt, past, c, stage });
    let half = dt / lit(2.0);
    let spectral = match handle.generator() {
        GeneratorSpec::DirichletLaplacianSpectral { .. } => handle.generator().spectral_eigenvalues(),
        _ => None,
    };
    for _ in 0..n_steps {
        let xn = samples.last().expect("non-empty").clone();
        let next = match &spectral {
            Some(eig) => {
                let f0 = force(&samples, T::zero(), &xn);
                let coef: Vec<(T, T, T)> = eig
                    .iter()
                    .map(|&l| {
                        let (p1, p2) = phi_functions(l * dt);
                        ((l * dt).exp(), p1, p2)
                    })
                    .collect();
                let a = DVector::from_fn(xn.len(), |i, _| coef[i].0 * xn[i] + dt * coef[i].1 * f0[i]);
                let f1 = force(&samples, T::one(), &a);
                DVector::from_fn(xn.len(), |i, _| a[i] + dt * coef[i].2 * (f1[i] - f0[i]))
            }
            None => {
                let b = handle.b_matrix();
                let k1 = b * &xn + force(&samples, T::zero(), &xn);
                let y2 = &xn + &k1 * half;
                let k2 = b * &y2 + force(&samples, lit(0.5), &y2);
                let y3 = &xn + &k2 * half;
                let k3 = b * &y3 + force(&samples, lit(0.5), &y3);
                let y4 = &xn + &k3 * dt;
                let k4 = b * &y4 + force(&samples, T::one(), &y4);
                &xn + (k1 + (k2 + k3) * lit::<T>(2.0) + k4) * (dt / lit(6.0))
            }
        };
        if next.iter().any(|v| !v.is_finite()) {
            let t = dt * from_usize(samples.len() - phi.m());
            return Err(Error::Overflow(to_f64(t)));
        }
        samples.push(next);
    }
    Trajectory::new(h, dt, samples, phi.norm_kind())
}

/// `max_n |x(nΔ) − S(nΔ)φ(0) − ∫_0^{nΔ} S(nΔ−τ) F(x_τ) dτ|` with the
/// integral taken by the trapezoid rule on the trajectory grid.
pub fn mild_residual<T: Real>(handle: &SemigroupHandle<T>, traj: &Trajectory<T>, rhs: &RhsSpec<T>) -> Result<T> {
    let n = traj.n_steps();
    let step = traj.step();
    let table = handle.table(step, n)?;
    let forces: Vec<DVector<T>> = (0..=n).map(|k| rhs.eval(&traj.view(k))).collect();
    let x0 = traj.at_step(0);
    let norm = traj.norm_kind();
    let half: T = lit(0.5);
    let mut worst = T::zero();
    for j in 1..=n {
        let mut integral = DVector::zeros(traj.dim());
        for (k, fk) in forces.iter().enumerate().take(j + 1) {
            let w = if k == 0 || k == j { half } else { T::one() };
            integral += table.apply(j - k, fk) * w;
        }
        let r = traj.at_step(j) - table.apply(j, x0) - integral * step;
        worst = worst.max(norm.of(&r));
    }
    Ok(worst)
}

/// `u(t) = x_t` at every grid time `t ≥ 0`.
pub fn dde_to_aie<T: Real>(traj: &Trajectory<T>) -> Vec<HistoryX<T>> {
    (0..=traj.n_steps()).map(|n| traj.history_at(n)).collect()
}

/// Glues `φ` on `[−h, 0]` with `t ↦ u(t)(0)`.
pub fn aie_to_dde<T: Real>(u: &[HistoryX<T>], phi: &HistoryX<T>) -> Result<Trajectory<T>> {
    let mut samples = phi.values().to_vec();
    for (n, un) in u.iter().enumerate() {
        if un.m() != phi.m() || un.delay() != phi.delay() {
            return Err(Error::InvalidInput(format!("state {n} lives on a different grid")));
        }
        if n > 0 {
            samples.push(un.head().clone());
        }
    }
    Trajectory::new(phi.delay(), phi.step(), samples, phi.norm_kind())
}

/// Largest distance between `u(t)` and the segment `x_t` of the glued trajectory.
pub fn state_consistency<T: Real>(u: &[HistoryX<T>], phi: &HistoryX<T>) -> Result<T> {
    let traj = aie_to_dde(u, phi)?;
    u.iter().enumerate().try_fold(T::zero(), |acc, (n, un)| Ok(acc.max(un.max_distance(&traj.history_at(n))?)))
}

/// Outcome of [`correspondence_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct Correspondence<T: Real> {
    /// `sup |x_picard − x_steps|`.
    pub discrepancy: T,
    /// Mild residual of the Picard trajectory.
    pub mild_residual: T,
    pub picard: Trajectory<T>,
    pub steps: Trajectory<T>,
}

/// Solves by Picard on the integral equation and by the method of steps, and
/// compares.
pub fn correspondence_check<T: Real>(
    handle: &SemigroupHandle<T>,
    rhs: &RhsSpec<T>,
    phi: &HistoryX<T>,
    horizon: T,
    dt: T,
    opts: &PicardOptions<T>,
) -> Result<Correspondence<T>> {
    let (picard, _) = picard_solve_aie(handle, rhs, phi, horizon, dt, opts)?;
    let steps = method_of_steps_solve(handle, rhs, phi, horizon, dt)?;
    Ok(Correspondence {
        discrepancy: picard.sup_distance(&steps)?,
        mild_residual: mild_residual(handle, &picard, rhs)?,
        picard,
        steps,
    })
}

/// `max |(x(t+Δ) − x(t−Δ))/2Δ − F(x_t)|` over grid times inside `(0, T)`;
/// only meaningful for `B = 0`.
pub fn classical_check_b0<T: Real>(handle: &SemigroupHandle<T>, traj: &Trajectory<T>, rhs: &RhsSpec<T>) -> Result<T> {
    if !handle.is_zero() {
        return Err(Error::InvalidInput("classical check needs the zero generator".into()));
    }
    let n = traj.n_steps();
    let two_step = traj.step() * lit(2.0);
    let norm = traj.norm_kind();
    let mut worst = T::zero();
    for k in 1..n {
        let deriv = (traj.at_step(k + 1) - traj.at_step(k - 1)) / two_step;
        worst = worst.max(norm.of(&(deriv - rhs.eval(&traj.view(k)))));
    }
    Ok(worst)
}

/// Continuity data of `t ↦ x_t` on the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub step: f64,
    /// `max_n |x_{(n+1)Δ} − x_{nΔ}|_X`.
    pub max_increment: f64,
    /// Largest difference quotient of the sampled path on `[−h, T]`.
    pub max_slope: f64,
}

impl ModulusReport {
    /// Whether the increments stay below `slope · Δ`, up to relative slack.
    pub fn within(&self, slope: f64, slack: f64) -> bool {
        self.max_increment <= slope * self.step * (1.0 + slack) + slack * self.step
    }
}

pub fn history_map_modulus<T: Real>(traj: &Trajectory<T>) -> ModulusReport {
    let norm = traj.norm_kind();
    let samples = traj.samples();
    let diffs: Vec<T> = samples.windows(2).map(|w| norm.of(&(&w[1] - &w[0]))).collect();
    let m = traj.hist_cells();
    // A history is piecewise linear, so its sup distance is attained at nodes.
    let mut max_increment = T::zero();
    for n in 0..traj.n_steps() {
        let d = diffs[n..n + m].iter().fold(T::zero(), |a, b| a.max(*b));
        max_increment = max_increment.max(d);
    }
    let max_slope = diffs.iter().fold(T::zero(), |a, b| a.max(*b)) / traj.step();
    ModulusReport { step: to_f64(traj.step()), max_increment: to_f64(max_increment), max_slope: to_f64(max_slope) }
}
