use nalgebra::DVector;

use super::rhs::GridHistory;
use crate::error::{Error, Result};
use crate::scalar::{from_usize, grid_tol, lerp, to_f64, Norm, Real};
use crate::sun_duality::HistoryX;

/// Samples of `x` on `t_i = −h + iΔ`, `i = 0, …`, with `h = kΔ` for an integer `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: Real> {
    h: T,
    step: T,
    hist_cells: usize,
    samples: Vec<DVector<T>>,
    norm: Norm,
}

/// `round(x / step)` when `x` is a multiple of `step` to relative accuracy `grid_tol`.
pub(crate) fn aligned_count<T: Real>(x: T, step: T) -> Result<usize> {
    let r = x / step;
    let k = r.round();
    if (r - k).abs() > grid_tol::<T>() * k.abs().max(T::one()) || k < T::zero() {
        return Err(Error::Misaligned { t: to_f64(x), step: to_f64(step) });
    }
    Ok(k.to_usize().unwrap_or(0))
}

impl<T: Real> Trajectory<T> {
    pub fn new(h: T, step: T, samples: Vec<DVector<T>>, norm: Norm) -> Result<Self> {
        if !(step > T::zero()) {
            return Err(Error::InvalidInput("time step must be positive".into()));
        }
        let hist_cells = aligned_count(h, step)?;
        if hist_cells == 0 {
            return Err(Error::InvalidInput("delay must span at least one step".into()));
        }
        if samples.len() < hist_cells + 1 {
            return Err(Error::InvalidInput("trajectory shorter than its initial history".into()));
        }
        let dim = samples[0].len();
        if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        Ok(Self { h, step, hist_cells, samples, norm })
    }

    /// A trajectory holding only the initial history.
    pub fn from_history(phi: &HistoryX<T>) -> Self {
        Self {
            h: phi.delay(),
            step: phi.step(),
            hist_cells: phi.m(),
            samples: phi.values().to_vec(),
            norm: phi.norm_kind(),
        }
    }

    pub fn delay(&self) -> T {
        self.h
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn hist_cells(&self) -> usize {
        self.hist_cells
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn norm_kind(&self) -> Norm {
        self.norm
    }

    /// Number of steps past `t = 0`.
    pub fn n_steps(&self) -> usize {
        self.samples.len() - 1 - self.hist_cells
    }

    pub fn horizon(&self) -> T {
        self.step * from_usize(self.n_steps())
    }

    pub fn samples(&self) -> &[DVector<T>] {
        &self.samples
    }

    pub(crate) fn samples_mut(&mut self) -> &mut Vec<DVector<T>> {
        &mut self.samples
    }

    /// `t_i`.
    pub fn time(&self, i: usize) -> T {
        self.step * (from_usize::<T>(i) - from_usize::<T>(self.hist_cells))
    }

    /// `x(nΔ)`.
    pub fn at_step(&self, n: usize) -> &DVector<T> {
        &self.samples[self.hist_cells + n]
    }

    /// `x(t)` by linear interpolation, for `t ∈ [−h, T]`.
    pub fn eval(&self, t: T) -> DVector<T> {
        let last = self.samples.len() - 1;
        let x = ((t + self.h) / self.step).max(T::zero()).min(from_usize(last));
        let i = x.floor().to_usize().unwrap_or(0).min(last.saturating_sub(1));
        let s = x - from_usize::<T>(i);
        if s == T::zero() || last == 0 {
            return self.samples[i].clone();
        }
        lerp(&self.samples[i], &self.samples[i + 1], s)
    }

    /// The segment `x_{nΔ}` as a borrowed view.
    pub fn view(&self, n: usize) -> GridHistory<'_, T> {
        GridHistory { h: self.h, step: self.step, values: &self.samples[n..=n + self.hist_cells] }
    }

    /// The segment `x_{nΔ}` as an owned history.
    pub fn history_at(&self, n: usize) -> HistoryX<T> {
        HistoryX::new(self.h, self.samples[n..=n + self.hist_cells].to_vec(), self.norm).expect("valid history window")
    }

    /// `x_t` for a grid-aligned `t`.
    pub fn history_at_time(&self, t: T) -> Result<HistoryX<T>> {
        let n = aligned_count(t, self.step)?;
        if n > self.n_steps() {
            return Err(Error::InvalidInput(format!("time {} beyond the horizon", to_f64(t))));
        }
        Ok(self.history_at(n))
    }

    /// `max_i |x_i − y_i|` over the common samples.
    pub fn sup_distance(&self, other: &Self) -> Result<T> {
        if self.samples.len() != other.samples.len() || self.step != other.step || self.h != other.h {
            return Err(Error::InvalidInput("trajectories live on different grids".into()));
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .fold(T::zero(), |m, (a, b)| m.max(self.norm.of(&(a - b)))))
    }

    /// `max_i |x_i|`.
    pub fn sup_norm(&self) -> T {
        self.samples.iter().fold(T::zero(), |m, v| m.max(self.norm.of(v)))
    }

    /// Keeps every `k`-th sample, turning a step-`Δ` trajectory into a step-`kΔ` one.
    pub fn coarsen(&self, k: usize) -> Result<Self> {
        if k == 0 || self.hist_cells % k != 0 || (self.samples.len() - 1) % k != 0 {
            return Err(Error::InvalidInput(format!("cannot coarsen by {k}")));
        }
        let samples = self.samples.iter().step_by(k).cloned().collect();
        Self::new(self.h, self.step * from_usize(k), samples, self.norm)
    }
}
