use nalgebra::DVector;

use super::history::HistoryX;
use super::states::{reflected_nodes, NbvFunction, SunStarState, SunState};
use crate::density::DensityGrid;
use crate::error::{Error, Result};
use crate::quadrature::{linear_product, linear_product_vec};
use crate::rs_integration::Jump;
use crate::scalar::{from_usize, lit, to_f64, Norm, Real};
use crate::semigroup::SemigroupHandle;

fn check_delay<T: Real>(a: T, b: T) -> Result<()> {
    if (a - b).abs() > a.abs() * lit(1e-12) {
        return Err(Error::InvalidInput("objects use different delays".into()));
    }
    Ok(())
}

/// `<φ, f> = <φ(0), w_0> + Σ <φ(−t_k), w_k> + ∫_0^h <φ(−θ), g(θ)> dθ`.
pub fn pair_x_dual<T: Real>(phi: &HistoryX<T>, f: &NbvFunction<T>) -> Result<T> {
    check_delay(phi.delay(), f.h)?;
    let mut acc = phi.head().dot(&f.jump0);
    for j in &f.jumps {
        acc += phi.eval(-j.at).dot(&j.value);
    }
    acc += f.density.pair_with_linear(|th| phi.eval(-th), &reflected_nodes(phi));
    Ok(acc)
}

/// `ι(y⊙, g)(t) = χ₀(t) y⊙ + ∫_0^t g`.
pub fn iota<T: Real>(sigma: &SunState<T>) -> NbvFunction<T> {
    NbvFunction {
        h: sigma.h,
        jump0: sigma.y_sun.clone(),
        density: sigma.g.clone(),
        jumps: Vec::new(),
        dual_norm: sigma.dual_norm,
    }
}

/// Recovers `(y⊙, g)`; fails when `f` has interior jumps.
pub fn iota_inverse<T: Real>(f: &NbvFunction<T>) -> Result<SunState<T>> {
    if f.has_interior_jumps() {
        return Err(Error::NotInSunDual);
    }
    SunState::new(f.h, f.jump0.clone(), f.density.clone(), f.dual_norm)
}

/// `<φ, (y⊙, g)> = <φ(0), y⊙> + ∫_0^h <φ(−θ), g(θ)> dθ`.
pub fn pair_x_sun<T: Real>(phi: &HistoryX<T>, sigma: &SunState<T>) -> Result<T> {
    check_delay(phi.delay(), sigma.h)?;
    Ok(phi.head().dot(&sigma.y_sun) + sigma.g.pair_with_linear(|th| phi.eval(-th), &reflected_nodes(phi)))
}

/// Left shift with zero extension, `(T₁(t)g)(θ) = g(t+θ)`.
pub fn translate_t1<T: Real>(t: T, g: &DensityGrid<T>) -> Result<DensityGrid<T>> {
    if t < T::zero() {
        return Err(Error::NegativeTime(to_f64(t)));
    }
    Ok(g.shift_left(t))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SunShiftOptions {
    /// Flips the sign of the memory integral in the head update. Exists only so
    /// the verification suites can demonstrate that they detect such a defect.
    pub inject_sign_bug: bool,
}

/// `∫_0^{t∧h} S*(t−θ) g(θ) dθ`, exact for the linear interpolant of
/// `θ ↦ S*(t−θ)` on each density cell.
pub(crate) fn memory_integral<T: Real>(handle: &SemigroupHandle<T>, t: T, g: &DensityGrid<T>) -> Result<DVector<T>> {
    let upper = t.min(g.end());
    let mut acc = DVector::zeros(g.dim());
    if !(upper > T::zero()) {
        return Ok(acc);
    }
    let pts = g.breakpoints_in(T::zero(), upper);
    let props = pts
        .iter()
        .map(|&u| handle.propagator((t - u).max(T::zero())))
        .collect::<Result<Vec<_>>>()?;
    for (k, w) in pts.windows(2).enumerate() {
        let (u, v) = (w[0], w[1]);
        if !(u < v) {
            continue;
        }
        let gu = g.eval(u);
        let gv = g.eval_left(v);
        let (pu, pv) = (&props[k], &props[k + 1]);
        acc += linear_product_vec(v - u, pu.tr_mul(&gu), pu.tr_mul(&gv), pv.tr_mul(&gu), pv.tr_mul(&gv));
    }
    Ok(acc)
}

/// `T₀⊙(t)(y⊙, g) = (S*(t) y⊙ + ∫_0^{t∧h} S*(t−θ) g(θ) dθ, T₁(t) g)`.
pub fn sun_shift_t0sun<T: Real>(handle: &SemigroupHandle<T>, t: T, sigma: &SunState<T>) -> Result<SunState<T>> {
    sun_shift_with(handle, t, sigma, SunShiftOptions::default())
}

pub fn sun_shift_with<T: Real>(
    handle: &SemigroupHandle<T>,
    t: T,
    sigma: &SunState<T>,
    opts: SunShiftOptions,
) -> Result<SunState<T>> {
    if t < T::zero() {
        return Err(Error::NegativeTime(to_f64(t)));
    }
    let mut memory = memory_integral(handle, t, &sigma.g)?;
    if opts.inject_sign_bug {
        memory = -memory;
    }
    let head = handle.apply_adjoint(t, &sigma.y_sun)? + memory;
    SunState::new(sigma.h, head, translate_t1(t, &sigma.g)?, sigma.dual_norm)
}

/// `<T₀(t)φ, σ>` assembled as `<S(t)φ(0), y⊙> + ∫_0^{t∧h} <S(t−θ)φ(0), g(θ)> dθ
/// + ∫_0^h <φ(−θ), (T₁(t)g)(θ)> dθ`, using only forward propagators.
pub fn shifted_pairing_split<T: Real>(handle: &SemigroupHandle<T>, t: T, phi: &HistoryX<T>, sigma: &SunState<T>) -> Result<T> {
    check_delay(phi.delay(), sigma.h)?;
    if t < T::zero() {
        return Err(Error::NegativeTime(to_f64(t)));
    }
    let head = phi.head();
    let g = &sigma.g;
    let mut acc = handle.apply(t, head)?.dot(&sigma.y_sun);
    let upper = t.min(g.end());
    if upper > T::zero() {
        let pts = g.breakpoints_in(T::zero(), upper);
        let vals = pts.iter().map(|&u| handle.apply((t - u).max(T::zero()), head)).collect::<Result<Vec<_>>>()?;
        for (k, w) in pts.windows(2).enumerate() {
            if w[0] < w[1] {
                acc += linear_product(w[1] - w[0], &vals[k], &vals[k + 1], &g.eval(w[0]), &g.eval_left(w[1]));
            }
        }
    }
    acc += translate_t1(t, g)?.pair_with_linear(|th| phi.eval(-th), &reflected_nodes(phi));
    Ok(acc)
}

/// Adjoint shift `T₀*(t)` on a general functional. Interior jumps slide left
/// by `t`; a jump that reaches zero is absorbed into the jump at zero through `S*`.
pub fn adjoint_shift_t0star<T: Real>(handle: &SemigroupHandle<T>, t: T, f: &NbvFunction<T>) -> Result<NbvFunction<T>> {
    if t < T::zero() {
        return Err(Error::NegativeTime(to_f64(t)));
    }
    let mut jump0 = handle.apply_adjoint(t, &f.jump0)? + memory_integral(handle, t, &f.density)?;
    let mut jumps = Vec::new();
    for j in &f.jumps {
        if j.at > t {
            jumps.push(Jump::new(j.at - t, j.value.clone()));
        } else {
            jump0 += handle.apply_adjoint(t - j.at, &j.value)?;
        }
    }
    NbvFunction::new(f.h, jump0, f.density.shift_left(t), jumps, f.dual_norm)
}

/// `δ(y⊙, g) = y⊙`.
pub fn delta_op<T: Real>(sigma: &SunState<T>) -> DVector<T> {
    sigma.y_sun.clone()
}

/// The canonical embedding of `Y` into `Y⊙*`; the identity in coordinates.
pub fn j_y_embed<T: Real>(y: &DVector<T>) -> DVector<T> {
    y.clone()
}

/// `ℓ y = (j_Y y, 0)` on a tail grid with `m` cells.
pub fn ell_op<T: Real>(h: T, m: usize, y: &DVector<T>, norm: Norm) -> SunStarState<T> {
    SunStarState { h, head: j_y_embed(y), tail: vec![DVector::zeros(y.len()); m + 1], norm }
}

/// `<(y⊙, g), (head, tail)> = <head, y⊙> + ∫_0^h <tail(θ), g(θ)> dθ`.
pub fn pair_sun_sunstar<T: Real>(sigma: &SunState<T>, xi: &SunStarState<T>) -> Result<T> {
    check_delay(sigma.h, xi.h)?;
    let nodes: Vec<T> = (0..=xi.m()).map(|i| xi.node(i)).collect();
    Ok(xi.head.dot(&sigma.y_sun) + sigma.g.pair_with_linear(|th| xi.tail_at(th), &nodes))
}

/// `j φ = (φ(0), θ ↦ φ(−θ))`.
pub fn j_embed<T: Real>(phi: &HistoryX<T>) -> SunStarState<T> {
    let tail = phi.values().iter().rev().cloned().collect();
    SunStarState { h: phi.delay(), head: phi.head().clone(), tail, norm: phi.norm_kind() }
}

/// Acceptance test for membership in `j(X)` at grid resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeGate<T: Real> {
    /// Allowed mismatch between head and `tail(0)`, relative to `max(1, |head|)`.
    pub tol: T,
    /// Largest admissible slope of the tail between neighbouring nodes.
    pub max_slope: Option<T>,
}

impl<T: Real> Default for RangeGate<T> {
    fn default() -> Self {
        Self { tol: lit(1e-9), max_slope: None }
    }
}

/// Inverts `j` on its range.
pub fn j_inverse<T: Real>(xi: &SunStarState<T>, gate: RangeGate<T>) -> Result<HistoryX<T>> {
    let scale = xi.norm.of(&xi.head).max(T::one());
    let gap = xi.norm.of(&(&xi.head - &xi.tail[0]));
    if gap > gate.tol * scale {
        return Err(Error::NotInRange(format!("head differs from tail(0) by {:e}", to_f64(gap))));
    }
    if let Some(k) = gate.max_slope {
        let dt = xi.step();
        for (i, w) in xi.tail.windows(2).enumerate() {
            let d = xi.norm.of(&(&w[1] - &w[0]));
            if d > k * dt + gate.tol * scale {
                return Err(Error::NotInRange(format!(
                    "tail increment {:e} on cell {i} exceeds the continuity bound {:e}",
                    to_f64(d),
                    to_f64(k * dt)
                )));
            }
        }
    }
    let values = xi.tail.iter().rev().cloned().collect();
    HistoryX::new(xi.h, values, xi.norm)
}

/// `T₀⊙*(u)` restricted to sun-star states: the head propagates with `S`, the
/// tail is overwritten on `[0, u)` by `θ ↦ S(u−θ) head` and shifted right elsewhere.
pub fn sunstar_shift<T: Real>(handle: &SemigroupHandle<T>, u: T, xi: &SunStarState<T>) -> Result<SunStarState<T>> {
    if u < T::zero() {
        return Err(Error::NegativeTime(to_f64(u)));
    }
    let head = handle.apply(u, &xi.head)?;
    let mut tail = Vec::with_capacity(xi.tail.len());
    for i in 0..=xi.m() {
        let th = xi.node(i);
        if th < u {
            tail.push(handle.apply(u - th, &xi.head)?);
        } else {
            tail.push(xi.tail_at(th - u));
        }
    }
    SunStarState::new(xi.h, head, tail, xi.norm)
}

/// `κ v`, the functional `g ↦ ∫_0^h <v(θ), g(θ)> dθ` on densities.
#[derive(Clone, Debug, PartialEq)]
pub struct KappaFunctional<T: Real> {
    h: T,
    nodes: Vec<DVector<T>>,
    norm: Norm,
}

pub fn kappa_embed<T: Real>(h: T, v: Vec<DVector<T>>, norm: Norm) -> Result<KappaFunctional<T>> {
    if v.len() < 2 {
        return Err(Error::InvalidInput("kappa needs at least two nodes".into()));
    }
    Ok(KappaFunctional { h, nodes: v, norm })
}

impl<T: Real> KappaFunctional<T> {
    fn as_state(&self) -> SunStarState<T> {
        SunStarState {
            h: self.h,
            head: DVector::zeros(self.nodes[0].len()),
            tail: self.nodes.clone(),
            norm: self.norm,
        }
    }

    pub fn apply(&self, g: &DensityGrid<T>) -> T {
        let st = self.as_state();
        let nodes: Vec<T> = (0..=st.m()).map(|i| st.node(i)).collect();
        g.pair_with_linear(|th| st.tail_at(th), &nodes)
    }

    /// `‖v‖_∞` over the nodes.
    pub fn sup_norm(&self) -> T {
        self.nodes.iter().fold(T::zero(), |m, v| m.max(self.norm.of(v)))
    }

    /// Best value of `<g, κv>` over unit-mass densities supported on a single
    /// tail cell and pointing along an aligned dual vector of a node value.
    pub fn norm_lower_bound(&self) -> T {
        let st = self.as_state();
        let m = st.m();
        let dt = st.step();
        let dual = self.norm.dual();
        let mut best = T::zero();
        for i in 0..=m {
            let d = self.norm.aligned_dual(&self.nodes[i]);
            let dn = dual.of(&d);
            if dn == T::zero() {
                continue;
            }
            let d = d / dn;
            for cell in [i.checked_sub(1), if i < m { Some(i) } else { None }].into_iter().flatten() {
                let dens = DensityGrid::from_cell_fn(T::zero(), self.h, m, |k, _, _| {
                    if k == cell {
                        (&d / dt, &d / dt)
                    } else {
                        (DVector::zeros(d.len()), DVector::zeros(d.len()))
                    }
                })
                .expect("valid cell density");
                best = best.max(self.apply(&dens));
            }
        }
        best
    }
}

/// Uniform grid of `m` cells on `[0, h]`.
pub fn tail_nodes<T: Real>(h: T, m: usize) -> Vec<T> {
    (0..=m).map(|i| if i == m { h } else { h * from_usize(i) / from_usize::<T>(m) }).collect()
}
