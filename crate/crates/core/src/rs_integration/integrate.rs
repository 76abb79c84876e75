use nalgebra::DVector;

use super::bv::{BvFunction, Jump};
use super::pairing::BilinearPairing;
use super::partition::{TagRule, TaggedPartition};
use crate::density::DensityGrid;
use crate::error::{Error, Result};
use crate::oracle;
use crate::quadrature::gl_panel;
use crate::scalar::{from_usize, lit, pairwise_sum, to_f64, Norm, Real};

/// `S(f, P, dη) = Σ f(τ_j)·(η(σ_j) − η(σ_{j−1}))`.
pub fn rs_sum_left<T: Real, F: Fn(T) -> DVector<T>>(
    f: &F,
    eta: &BvFunction<T>,
    p: &TaggedPartition<T>,
    pairing: &BilinearPairing<T>,
) -> DVector<T> {
    let bp = p.breakpoints();
    let eta_vals: Vec<DVector<T>> = bp.iter().map(|&s| eta.eval(s)).collect();
    let terms: Vec<DVector<T>> = p
        .tags()
        .iter()
        .enumerate()
        .map(|(j, &tau)| pairing.apply(&f(tau), &(&eta_vals[j + 1] - &eta_vals[j])))
        .collect();
    let dim = terms.first().map_or(1, |t| t.len());
    pairwise_sum(&terms, dim)
}

/// `S(df, P, η) = Σ (f(σ_j) − f(σ_{j−1}))·η(τ_j)`.
pub fn rs_sum_right<T: Real, G: Fn(T) -> DVector<T>>(
    f: &BvFunction<T>,
    eta: &G,
    p: &TaggedPartition<T>,
    pairing: &BilinearPairing<T>,
) -> DVector<T> {
    let bp = p.breakpoints();
    let f_vals: Vec<DVector<T>> = bp.iter().map(|&s| f.eval(s)).collect();
    let terms: Vec<DVector<T>> = p
        .tags()
        .iter()
        .enumerate()
        .map(|(j, &tau)| pairing.apply(&(&f_vals[j + 1] - &f_vals[j]), &eta(tau)))
        .collect();
    let dim = terms.first().map_or(1, |t| t.len());
    pairwise_sum(&terms, dim)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumMode {
    /// `∫ f dη`
    LeftSum,
    /// `∫ df η`
    RightSum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LadderSchedule {
    Dyadic,
    Triadic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RsOptions {
    pub tol: f64,
    pub max_depth: u32,
    pub min_depth: u32,
    pub schedule: LadderSchedule,
    /// Skip the structured shortcut and run the refinement ladder.
    pub force_ladder: bool,
}

impl RsOptions {
    /// Defaults for a `Z` of the given dimension: 1e-10 for scalars, 1e-8 otherwise.
    pub fn for_output_dim(dim: usize) -> Self {
        Self {
            tol: if dim <= 1 { 1e-10 } else { 1e-8 },
            max_depth: 24,
            min_depth: 3,
            schedule: LadderSchedule::Dyadic,
            force_ladder: false,
        }
    }

    pub fn ladder(tol: f64) -> Self {
        Self { tol, force_ladder: true, ..Self::for_output_dim(1) }
    }
}

impl Default for RsOptions {
    fn default() -> Self {
        Self::for_output_dim(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RsPath {
    Structured,
    Ladder,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RsOutcome<T: Real> {
    pub value: DVector<T>,
    /// Mesh of the last partition used (zero on the structured path).
    pub mesh: T,
    pub depth: u32,
    pub path: RsPath,
}

const GL_ORDER: usize = 8;

fn sorted_unique<T: Real>(mut pts: Vec<T>, a: T, b: T) -> Vec<T> {
    pts.retain(|p| *p >= a && *p <= b);
    pts.push(a);
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).expect("finite points"));
    let tol = T::eps() * lit(64.0) * (b - a);
    pts.dedup_by(|x, y| (*x - *y).abs() <= tol);
    pts
}

fn check_shared<T: Real>(f: &BvFunction<T>, eta: &BvFunction<T>) -> Result<()> {
    let (a, b) = eta.domain();
    let tol = T::eps() * lit(64.0) * (b - a);
    for p in f.discontinuities() {
        if eta.discontinuities().iter().any(|q| (*q - p).abs() <= tol) {
            return Err(Error::SharedDiscontinuity(to_f64(p)));
        }
    }
    Ok(())
}

/// Integral of `t ↦ pairing(u(t), v(t))` over `[a, b]`, panel-wise Gauss–Legendre
/// on the given breakpoints.
fn panel_integral<T: Real, U, V>(u: U, v: V, breaks: &[T], pairing: &BilinearPairing<T>, out_dim: usize) -> DVector<T>
where
    U: Fn(T) -> DVector<T>,
    V: Fn(T) -> DVector<T>,
{
    let integrand = |t: T| pairing.apply(&u(t), &v(t));
    let terms: Vec<DVector<T>> = breaks
        .windows(2)
        .filter(|w| w[0] < w[1])
        .map(|w| gl_panel(&integrand, w[0], w[1], GL_ORDER, out_dim))
        .collect();
    pairwise_sum(&terms, out_dim)
}

// Points inside a cell where an integrator density is not polynomial: its cell
// edges, plus the other factor's jumps and kinks.
fn structured_breaks<T: Real>(integrator_density: &DensityGrid<T>, other: &BvFunction<T>, a: T, b: T) -> Vec<T> {
    let mut pts: Vec<T> = (0..=integrator_density.n_cells()).map(|k| integrator_density.node(k)).collect();
    pts.extend(other.discontinuities());
    pts.extend(other.kinks());
    sorted_unique(pts, a, b)
}

fn structured_left<T: Real>(f: &BvFunction<T>, eta: &BvFunction<T>, pairing: &BilinearPairing<T>, out_dim: usize) -> Option<DVector<T>> {
    let s = eta.as_structured()?;
    let (a, b) = (s.a, s.b);
    let mut acc = DVector::zeros(out_dim);
    for j in &s.jumps {
        acc += pairing.apply(&f.eval(j.at), &j.value);
    }
    if let Some(g) = &s.density {
        let breaks = structured_breaks(g, f, a.max(g.start()), b.min(g.end()));
        acc += panel_integral(|t| f.eval(t), |t| g.eval(t), &breaks, pairing, out_dim);
    }
    Some(acc)
}

fn structured_right<T: Real>(f: &BvFunction<T>, eta: &BvFunction<T>, pairing: &BilinearPairing<T>, out_dim: usize) -> Option<DVector<T>> {
    let s = f.as_structured()?;
    let (a, b) = (s.a, s.b);
    let mut acc = DVector::zeros(out_dim);
    for j in &s.jumps {
        acc += pairing.apply(&j.value, &eta.eval(j.at));
    }
    if let Some(g) = &s.density {
        let breaks = structured_breaks(g, eta, a.max(g.start()), b.min(g.end()));
        acc += panel_integral(|t| g.eval(t), |t| eta.eval(t), &breaks, pairing, out_dim);
    }
    Some(acc)
}

fn ladder_partition<T: Real>(a: T, b: T, cells: usize, extra: &[T]) -> Result<TaggedPartition<T>> {
    let step = (b - a) / from_usize::<T>(cells);
    let mut pts: Vec<T> = (0..cells).map(|k| a + step * from_usize(k)).collect();
    pts.extend(extra.iter().copied());
    let pts = sorted_unique(pts, a, b);
    TaggedPartition::with_rule(pts, TagRule::Midpoint)
}

/// Riemann–Stieltjes integral `∫ f dη` (left mode) or `∫ df η` (right mode).
///
/// Structured integrators (left mode) or structured integrands (right mode)
/// are evaluated by the exact jump sum plus panel Gauss–Legendre quadrature.
/// Otherwise a mesh-refinement ladder with midpoint tags runs until two
/// successive sums agree within `opts.tol`.
pub fn rs_integrate<T: Real>(
    f: &BvFunction<T>,
    eta: &BvFunction<T>,
    pairing: &BilinearPairing<T>,
    mode: SumMode,
    opts: RsOptions,
) -> Result<RsOutcome<T>> {
    let (a, b) = eta.domain();
    let (fa, fb) = f.domain();
    let span_tol = T::eps() * lit(64.0) * (b - a).abs().max(T::one());
    if (fa - a).abs() > span_tol || (fb - b).abs() > span_tol {
        return Err(Error::InvalidInput("integrand and integrator must share a domain".into()));
    }
    check_shared(f, eta)?;
    let out_dim = pairing.output_dim(f.dim(), eta.dim());

    if !opts.force_ladder {
        let shortcut = match mode {
            SumMode::LeftSum => structured_left(f, eta, pairing, out_dim),
            SumMode::RightSum => structured_right(f, eta, pairing, out_dim),
        };
        if let Some(value) = shortcut {
            return Ok(RsOutcome { value, mesh: T::zero(), depth: 0, path: RsPath::Structured });
        }
    }

    let mut extra = f.discontinuities();
    extra.extend(eta.discontinuities());
    let base: usize = match opts.schedule {
        LadderSchedule::Dyadic => 2,
        LadderSchedule::Triadic => 3,
    };
    let tol: T = lit(opts.tol);
    let mut prev: Option<DVector<T>> = None;
    let mut cells = 1usize;
    for depth in 1..=opts.max_depth {
        cells = cells.saturating_mul(base);
        let p = ladder_partition(a, b, cells, &extra)?;
        let value = match mode {
            SumMode::LeftSum => rs_sum_left(&|t| f.eval(t), eta, &p, pairing),
            SumMode::RightSum => rs_sum_right(f, &|t| eta.eval(t), &p, pairing),
        };
        if let Some(pv) = &prev {
            if depth >= opts.min_depth && (&value - pv).norm() <= tol {
                return Ok(RsOutcome { value, mesh: p.mesh(), depth, path: RsPath::Ladder });
            }
        }
        if depth == opts.max_depth {
            let previous = prev.unwrap_or_else(|| value.clone());
            return Err(Error::NonConvergence {
                depth,
                gap: to_f64((&value - &previous).norm()),
                previous: previous.iter().map(|x| to_f64(*x)).collect(),
                last: value.iter().map(|x| to_f64(*x)).collect(),
            });
        }
        prev = Some(value);
    }
    Err(Error::InvalidInput("ladder depth must be at least 1".into()))
}

// Pulls panel end points slightly inside so one-sided values of piecewise data apply.
fn open_panel(t: f64, lo: f64, hi: f64) -> f64 {
    let d = (hi - lo) * 1e-13;
    t.clamp(lo + d, hi - d)
}

fn boundary_term<T: Real>(f: &BvFunction<T>, eta: &BvFunction<T>, pairing: &BilinearPairing<T>) -> DVector<T> {
    let (a, b) = eta.domain();
    pairing.apply(&f.eval(b), &eta.eval(b)) - pairing.apply(&f.eval(a), &eta.eval(a))
}

/// `‖∫ f dη + ∫ df η − [f·η]_a^b‖`.
pub fn integration_by_parts_residual<T: Real>(
    f: &BvFunction<T>,
    eta: &BvFunction<T>,
    pairing: &BilinearPairing<T>,
    opts: RsOptions,
) -> Result<T> {
    let left = rs_integrate(f, eta, pairing, SumMode::LeftSum, opts)?;
    let right = rs_integrate(f, eta, pairing, SumMode::RightSum, opts)?;
    Ok((left.value + right.value - boundary_term(f, eta, pairing)).norm())
}

/// `(∫ df η, ∫ f′(t)·η(t) dt)` where `f` is a closure carrying its derivative.
pub fn rs_vs_riemann<T: Real>(
    f: &BvFunction<T>,
    eta: &BvFunction<T>,
    pairing: &BilinearPairing<T>,
    opts: RsOptions,
) -> Result<(DVector<T>, DVector<T>)> {
    let df = match f {
        BvFunction::Closure(c) => c
            .derivative
            .clone()
            .ok_or_else(|| Error::InvalidInput("integrand needs a derivative".into()))?,
        BvFunction::Structured(_) => return Err(Error::InvalidInput("integrand must be a C1 closure".into())),
    };
    let rs = rs_integrate(f, eta, pairing, SumMode::RightSum, opts)?.value;
    let (a, b) = eta.domain();
    let mut pts = eta.discontinuities();
    pts.extend(eta.kinks());
    let pts = sorted_unique(pts, a, b);
    let out_dim = pairing.output_dim(f.dim(), eta.dim());
    let mut q = DVector::zeros(out_dim);
    for w in pts.windows(2) {
        let (lo, hi) = (to_f64(w[0]), to_f64(w[1]));
        q += oracle::adaptive_simpson_vec(
            &|t: f64| {
                let tt: T = lit(open_panel(t, lo, hi));
                pairing.apply(&df(tt), &eta.eval(tt)).map(|x| to_f64(x))
            },
            lo,
            hi,
            1e-13,
            out_dim,
        )
        .map(lit::<T>);
    }
    Ok((rs, q))
}

/// For `η = χ_a w + ∫_a g`, returns `(∫ f dη, f(a)·w + ∫ f·g)` with the right side
/// from an independent adaptive quadrature.
pub fn rs_vs_lebesgue<T: Real>(
    f: &BvFunction<T>,
    w: &DVector<T>,
    g: &DensityGrid<T>,
    pairing: &BilinearPairing<T>,
    norm: Norm,
) -> Result<(DVector<T>, DVector<T>)> {
    let (a, b) = f.domain();
    let eta = BvFunction::structured(
        a,
        b,
        DVector::zeros(w.len()),
        vec![Jump::new(a, w.clone())],
        Some(g.clone()),
        norm,
    )?;
    let rs = rs_integrate(f, &eta, pairing, SumMode::LeftSum, RsOptions::default())?.value;
    let out_dim = pairing.output_dim(f.dim(), w.len());
    let mut q = pairing.apply(&f.eval(a), w).map(|x| to_f64(x));
    let mut pts: Vec<T> = (0..=g.n_cells()).map(|k| g.node(k)).collect();
    pts.extend(f.discontinuities());
    let pts = sorted_unique(pts, a.max(g.start()), b.min(g.end()));
    for win in pts.windows(2) {
        let (lo, hi) = (to_f64(win[0]), to_f64(win[1]));
        q += oracle::adaptive_simpson_vec(
            &|t: f64| {
                let tt: T = lit(open_panel(t, lo, hi));
                pairing.apply(&f.eval(tt), &g.eval(tt)).map(|x| to_f64(x))
            },
            lo,
            hi,
            1e-13,
            out_dim,
        );
    }
    Ok((rs, q.map(lit::<T>)))
}
