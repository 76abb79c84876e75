use nalgebra::DVector;

use super::history::HistoryX;
use super::states::{NbvFunction, SunState};
use crate::density::DensityGrid;
use crate::error::{Error, Result};
use crate::rs_integration::Jump;
use crate::quadrature::gl_panel_scalar;
use crate::scalar::{lit, Real};
use crate::semigroup::SemigroupHandle;

/// `(∫_0^d e^{−λu} du, ∫_0^d u e^{−λu} du)`, with a series when `λd` is small.
fn exp_moments<T: Real>(lambda: T, d: T) -> (T, T) {
    let x = lambda * d;
    if x.abs() < lit(1e-3) {
        // Taylor in x up to x^4 keeps ~1e-16 relative accuracy on this range.
        let (x2, x3, x4) = (x * x, x * x * x, x * x * x * x);
        let e0 = d * (T::one() - x / lit(2.0) + x2 / lit(6.0) - x3 / lit(24.0) + x4 / lit(120.0));
        let e1 = d * d * (lit::<T>(0.5) - x / lit(3.0) + x2 / lit(8.0) - x3 / lit(30.0) + x4 / lit(144.0));
        return (e0, e1);
    }
    let e = (-x).exp();
    ((T::one() - e) / lambda, (T::one() - e * (T::one() + x)) / (lambda * lambda))
}

/// `∫_0^d e^{−λu} p(u) du` for `p` linear with `p(0) = p0`, `p(d) = p1`.
fn exp_weighted_linear<T: Real>(lambda: T, d: T, p0: &DVector<T>, p1: &DVector<T>) -> DVector<T> {
    if !(d > T::zero()) {
        return DVector::zeros(p0.len());
    }
    let (e0, e1) = exp_moments(lambda, d);
    p0 * (e0 - e1 / d) + p1 * (e1 / d)
}

/// `R(λ, A₀)φ` as an exact function of `θ` for piecewise linear `φ`:
/// `e^{λθ} R(λ,B) φ(0) + ∫_θ^0 e^{λ(θ−s)} φ(s) ds`.
#[derive(Clone, Debug)]
pub struct ResolventA0Action<T: Real> {
    lambda: T,
    head: DVector<T>,
    phi: HistoryX<T>,
    /// Memory integral at each grid node.
    memory: Vec<DVector<T>>,
}

impl<T: Real> ResolventA0Action<T> {
    pub fn new(handle: &SemigroupHandle<T>, lambda: T, phi: &HistoryX<T>) -> Result<Self> {
        let head = handle.resolvent(lambda, phi.head())?;
        let m = phi.m();
        let mut memory = vec![DVector::zeros(phi.dim()); m + 1];
        let vals = phi.values();
        for i in (0..m).rev() {
            let d = phi.theta(i + 1) - phi.theta(i);
            memory[i] = exp_weighted_linear(lambda, d, &vals[i], &vals[i + 1]) + &memory[i + 1] * (-lambda * d).exp();
        }
        Ok(Self { lambda, head, phi: phi.clone(), memory })
    }

    pub fn eval(&self, theta: T) -> DVector<T> {
        let phi = &self.phi;
        let theta = theta.max(-phi.delay()).min(T::zero());
        let m = phi.m();
        let mut i = ((theta + phi.delay()) / phi.step()).floor().to_usize().unwrap_or(0).min(m - 1);
        while i + 1 < m && phi.theta(i + 1) <= theta {
            i += 1;
        }
        let up = phi.theta(i + 1);
        let d = (up - theta).max(T::zero());
        let mem = exp_weighted_linear(self.lambda, d, &phi.eval(theta), &phi.values()[i + 1])
            + &self.memory[i + 1] * (-self.lambda * d).exp();
        &self.head * (self.lambda * theta).exp() + mem
    }

    /// Samples onto a grid with `m` cells.
    pub fn sample(&self, m: usize) -> Result<HistoryX<T>> {
        HistoryX::from_fn(self.phi.delay(), m, self.phi.norm_kind(), |th| self.eval(th))
    }
}

/// `R(λ, A₀)φ` sampled on the grid of `φ`. Node values are exact for the
/// piecewise linear history.
pub fn resolvent_a0<T: Real>(handle: &SemigroupHandle<T>, lambda: T, phi: &HistoryX<T>) -> Result<HistoryX<T>> {
    let act = ResolventA0Action::new(handle, lambda, phi)?;
    let values = (0..=phi.m())
        .map(|i| &act.head * (lambda * phi.theta(i)).exp() + &act.memory[i])
        .collect();
    HistoryX::new(phi.delay(), values, phi.norm_kind())
}

/// `R(λ, A₀*)f` with its density available as an exact function:
/// `y⊙ = R(λ,B*) ∫_0^h e^{−λθ} df(θ)` and `g(s) = ∫_{(s,h]} e^{λ(s−θ)} df(θ)`.
#[derive(Clone, Debug)]
pub struct ResolventA0StarAction<T: Real> {
    lambda: T,
    y_sun: DVector<T>,
    density: DensityGrid<T>,
    jumps: Vec<Jump<T>>,
    /// Absolutely continuous part of `g` at the density grid nodes.
    tail: Vec<DVector<T>>,
    f: NbvFunction<T>,
}

impl<T: Real> ResolventA0StarAction<T> {
    pub fn new(handle: &SemigroupHandle<T>, lambda: T, f: &NbvFunction<T>) -> Result<Self> {
        let g = &f.density;
        let n = g.n_cells();
        let mut tail = vec![DVector::zeros(f.dim()); n + 1];
        for k in (0..n).rev() {
            let d = g.node(k + 1) - g.node(k);
            let (l, r) = &g.cells()[k];
            tail[k] = exp_weighted_linear(lambda, d, l, r) + &tail[k + 1] * (-lambda * d).exp();
        }
        // ∫_0^h e^{−λθ} df = w_0 + ∫ e^{−λθ} g + Σ e^{−λ t_k} w_k.
        let mut total = &f.jump0 + &tail[0];
        for j in &f.jumps {
            total += &j.value * (-lambda * j.at).exp();
        }
        let y_sun = handle.resolvent_adjoint(lambda, &total)?;
        Ok(Self { lambda, y_sun, density: g.clone(), jumps: f.jumps.clone(), tail, f: f.clone() })
    }

    pub fn y_sun(&self) -> &DVector<T> {
        &self.y_sun
    }

    fn continuous_part(&self, s: T) -> DVector<T> {
        let g = &self.density;
        let s = s.max(T::zero()).min(g.end());
        let n = g.n_cells();
        let mut k = (s / g.step()).floor().to_usize().unwrap_or(0).min(n - 1);
        while k + 1 < n && g.node(k + 1) <= s {
            k += 1;
        }
        let up = g.node(k + 1);
        let d = (up - s).max(T::zero());
        exp_weighted_linear(self.lambda, d, &g.eval(s), &g.eval_left(up)) + &self.tail[k + 1] * (-self.lambda * d).exp()
    }

    /// Right-continuous density value at `s`; a jump at `s` (to within `1e-12 h`) is excluded.
    pub fn density_at(&self, s: T) -> DVector<T> {
        let mut v = self.continuous_part(s);
        let tol = self.f.h * lit(1e-12);
        for j in &self.jumps {
            if j.at > s + tol {
                v += &j.value * (self.lambda * (s - j.at)).exp();
            }
        }
        v
    }

    /// Left limit of the density at `s`; includes a jump sitting at `s`.
    pub fn density_left(&self, s: T) -> DVector<T> {
        let mut v = self.continuous_part(s);
        let tol = self.f.h * lit(1e-12);
        for j in &self.jumps {
            if j.at >= s - tol {
                v += &j.value * (self.lambda * (s - j.at)).exp();
            }
        }
        v
    }

    /// Discretizes onto `out_cells` equal cells, each cell carrying the one-sided
    /// limits of the exact density at its ends.
    pub fn to_sun_state(&self, out_cells: usize) -> Result<SunState<T>> {
        if out_cells == 0 {
            return Err(Error::InvalidInput("need at least one output cell".into()));
        }
        let h = self.f.h;
        let g = DensityGrid::from_cell_fn(T::zero(), h, out_cells, |_, x0, x1| (self.density_at(x0), self.density_left(x1)))?;
        SunState::new(h, self.y_sun.clone(), g, self.f.dual_norm)
    }
}

/// `R(λ, A₀*)f` on a uniform output grid with `out_cells` cells.
pub fn resolvent_a0star<T: Real>(
    handle: &SemigroupHandle<T>,
    lambda: T,
    f: &NbvFunction<T>,
    out_cells: usize,
) -> Result<SunState<T>> {
    ResolventA0StarAction::new(handle, lambda, f)?.to_sun_state(out_cells)
}

/// Default number of output cells for [`resolvent_a0star`]: four per input cell.
pub fn default_out_cells<T: Real>(f: &NbvFunction<T>) -> usize {
    4 * f.density.n_cells()
}

/// `<φ, R(λ,A₀*) f>` with both sides exact functions, by Gauss–Legendre panels
/// on the merged grid. Used to separate formula error from grid error.
pub fn resolvent_pairing_exact<T: Real>(
    act: &ResolventA0StarAction<T>,
    phi: &HistoryX<T>,
) -> T {
    let h = act.f.h;
    let mut pts: Vec<T> = (0..=phi.m()).map(|i| -phi.theta(i)).collect();
    pts.extend((0..=act.density.n_cells()).map(|k| act.density.node(k)));
    pts.extend(act.jumps.iter().map(|j| j.at));
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup_by(|a, b| (*a - *b).abs() <= h * lit(1e-13));
    let mut acc = phi.head().dot(&act.y_sun);
    for w in pts.windows(2) {
        let (u, v) = (w[0], w[1]);
        if !(u < v) {
            continue;
        }
        // Interior nodes only, so the right-continuous density is read off the open panel.
        acc += gl_panel_scalar(&|s: T| phi.eval(-s).dot(&act.density_at(s)), u, v, 8);
    }
    acc
}

/// `<R(λ,A₀)φ, f>` using the exact resolvent function rather than its samples.
pub fn resolvent_a0_pairing_exact<T: Real>(act: &ResolventA0Action<T>, f: &NbvFunction<T>) -> T {
    let h = f.h;
    let mut acc = act.eval(T::zero()).dot(&f.jump0);
    for j in &f.jumps {
        acc += act.eval(-j.at).dot(&j.value);
    }
    let phi = &act.phi;
    let mut pts: Vec<T> = (0..=phi.m()).map(|i| -phi.theta(i)).collect();
    pts.extend((0..=f.density.n_cells()).map(|k| f.density.node(k)));
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup_by(|a, b| (*a - *b).abs() <= h * lit(1e-13));
    for w in pts.windows(2) {
        let (u, v) = (w[0], w[1]);
        if u < v {
            acc += gl_panel_scalar(&|s: T| act.eval(-s).dot(&f.density.eval(s)), u, v, 8);
        }
    }
    acc
}
