//! Densities on a uniform grid, linear inside each cell and possibly discontinuous across cells.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::quadrature::linear_product;
use crate::scalar::{from_usize, grid_tol, lit, Norm, Real};

/// A piecewise-linear density on `[a, b]` split into `N` equal cells.
///
/// Each cell stores its left and right end values, so interior jumps at cell
/// boundaries are exact. Point evaluation is right-continuous.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid<T: Real> {
    a: T,
    b: T,
    dim: usize,
    cells: Vec<(DVector<T>, DVector<T>)>,
}

impl<T: Real> DensityGrid<T> {
    pub fn new(a: T, b: T, cells: Vec<(DVector<T>, DVector<T>)>) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidInput("density interval must satisfy a < b".into()));
        }
        if cells.is_empty() {
            return Err(Error::InvalidInput("density grid needs at least one cell".into()));
        }
        let dim = cells[0].0.len();
        for (l, r) in &cells {
            if l.len() != dim || r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: l.len().min(r.len()) });
            }
            if l.iter().chain(r.iter()).any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("density values must be finite".into()));
            }
        }
        Ok(Self { a, b, dim, cells })
    }

    pub fn zeros(a: T, b: T, n_cells: usize, dim: usize) -> Self {
        let z = DVector::zeros(dim);
        Self::new(a, b, vec![(z.clone(), z); n_cells.max(1)]).expect("valid zero grid")
    }

    pub fn constant(a: T, b: T, n_cells: usize, value: DVector<T>) -> Self {
        Self::new(a, b, vec![(value.clone(), value); n_cells.max(1)]).expect("valid constant grid")
    }

    /// Continuous density interpolating the given node values (`N + 1` of them).
    pub fn from_nodes(a: T, b: T, nodes: &[DVector<T>]) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidInput("need at least two nodes".into()));
        }
        let cells = nodes.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
        Self::new(a, b, cells)
    }

    /// Samples a function at the nodes. Left and right cell values use the
    /// one-sided limits `f(x_k + 0)` and `f(x_{k+1} - 0)` as supplied by the two closures.
    pub fn from_fn<F: Fn(T) -> DVector<T>>(a: T, b: T, n_cells: usize, f: F) -> Result<Self> {
        let step = (b - a) / from_usize::<T>(n_cells);
        let nodes: Vec<_> = (0..=n_cells).map(|k| f(a + step * from_usize(k))).collect();
        Self::from_nodes(a, b, &nodes)
    }

    pub fn from_cell_fn<F: Fn(usize, T, T) -> (DVector<T>, DVector<T>)>(a: T, b: T, n_cells: usize, f: F) -> Result<Self> {
        let step = (b - a) / from_usize::<T>(n_cells);
        let cells = (0..n_cells)
            .map(|k| {
                let x0 = a + step * from_usize(k);
                f(k, x0, x0 + step)
            })
            .collect();
        Self::new(a, b, cells)
    }

    pub fn start(&self) -> T {
        self.a
    }

    pub fn end(&self) -> T {
        self.b
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn step(&self) -> T {
        (self.b - self.a) / from_usize::<T>(self.cells.len())
    }

    pub fn node(&self, k: usize) -> T {
        if k == self.cells.len() {
            self.b
        } else {
            self.a + self.step() * from_usize(k)
        }
    }

    pub fn cells(&self) -> &[(DVector<T>, DVector<T>)] {
        &self.cells
    }

    /// Cell index containing `t`, right-continuous; the last cell owns `b`.
    fn cell_of(&self, t: T) -> usize {
        let n = self.cells.len();
        let raw = ((t - self.a) / self.step()).floor();
        let k = raw.to_usize().unwrap_or(0);
        // Guard against rounding just below a node.
        let k = if k + 1 <= n && (self.node(k + 1) - t).abs() <= T::eps() * lit(16.0) * (self.b - self.a).abs().max(T::one()) {
            k + 1
        } else {
            k
        };
        k.min(n - 1)
    }

    fn interp(&self, k: usize, t: T) -> DVector<T> {
        let (l, r) = &self.cells[k];
        let s = ((t - self.node(k)) / self.step()).max(T::zero()).min(T::one());
        l * (T::one() - s) + r * s
    }

    /// Right-continuous evaluation; zero outside `[a, b]`.
    pub fn eval(&self, t: T) -> DVector<T> {
        if t < self.a || t > self.b {
            return DVector::zeros(self.dim);
        }
        self.interp(self.cell_of(t), t)
    }

    /// Left limit at `t`; zero at or left of `a`.
    pub fn eval_left(&self, t: T) -> DVector<T> {
        if t <= self.a || t > self.b {
            return DVector::zeros(self.dim);
        }
        let mut k = self.cell_of(t);
        if k > 0 && t <= self.node(k) {
            k -= 1;
        }
        let (l, r) = &self.cells[k];
        let s = ((t - self.node(k)) / self.step()).max(T::zero()).min(T::one());
        l * (T::one() - s) + r * s
    }

    /// Breakpoints of the grid clipped to `[lo, hi]`, both included.
    pub fn breakpoints_in(&self, lo: T, hi: T) -> Vec<T> {
        let mut pts = vec![lo];
        for k in 0..=self.cells.len() {
            let x = self.node(k);
            if x > lo && x < hi {
                pts.push(x);
            }
        }
        pts.push(hi);
        pts
    }

    /// Exact `∫_lo^hi g`, with the integration range clipped to the grid.
    pub fn integral(&self, lo: T, hi: T) -> DVector<T> {
        let lo = lo.max(self.a);
        let hi = hi.min(self.b);
        let mut acc = DVector::zeros(self.dim);
        if !(lo < hi) {
            return acc;
        }
        let pts = self.breakpoints_in(lo, hi);
        for w in pts.windows(2) {
            let (u, v) = (w[0], w[1]);
            let k = self.cell_of(u);
            acc += (self.interp(k, u) + self.interp(k, v)) * ((v - u) / lit(2.0));
        }
        acc
    }

    /// `∫_lo^hi |g|` by the composite trapezoid rule on the clipped cells.
    pub fn l1_norm_on(&self, lo: T, hi: T, norm: Norm) -> T {
        let lo = lo.max(self.a);
        let hi = hi.min(self.b);
        if !(lo < hi) {
            return T::zero();
        }
        let pts = self.breakpoints_in(lo, hi);
        let mut acc = T::zero();
        for w in pts.windows(2) {
            let (u, v) = (w[0], w[1]);
            let k = self.cell_of(u);
            acc += (norm.of(&self.interp(k, u)) + norm.of(&self.interp(k, v))) * ((v - u) / lit(2.0));
        }
        acc
    }

    pub fn l1_norm(&self, norm: Norm) -> T {
        self.l1_norm_on(self.a, self.b, norm)
    }

    pub fn sup_norm(&self, norm: Norm) -> T {
        self.cells
            .iter()
            .fold(T::zero(), |m, (l, r)| m.max(norm.of(l)).max(norm.of(r)))
    }

    /// `∫ <p(s), g(s)> ds` where `p` is given by a closure that is linear between
    /// the supplied breakpoints (plus this grid's own nodes).
    pub fn pair_with_linear<F: Fn(T) -> DVector<T>>(&self, p: F, extra_breaks: &[T]) -> T {
        let mut pts = self.breakpoints_in(self.a, self.b);
        for &x in extra_breaks {
            if x > self.a && x < self.b {
                pts.push(x);
            }
        }
        pts.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
        pts.dedup_by(|x, y| (*x - *y).abs() <= T::eps() * lit(64.0) * (self.b - self.a));
        let mut acc = T::zero();
        for w in pts.windows(2) {
            let (u, v) = (w[0], w[1]);
            if !(u < v) {
                continue;
            }
            let k = self.cell_of(u);
            let pu = p(u);
            let pv = p(v);
            acc += linear_product(v - u, &pu, &pv, &self.interp(k, u), &self.interp(k, v));
        }
        acc
    }

    /// Left translation `θ ↦ g(θ + t)` with zero extension past `b`.
    ///
    /// Exact when `t` is a multiple of the cell width; otherwise the new cell
    /// end values are sampled from the one-sided limits of the shifted density.
    pub fn shift_left(&self, t: T) -> Self {
        let n = self.cells.len();
        let ratio = t / self.step();
        let k = ratio.round();
        if (ratio - k).abs() <= grid_tol::<T>() {
            let k = k.to_usize().unwrap_or(usize::MAX);
            let z = DVector::zeros(self.dim);
            let cells = (0..n)
                .map(|i| if i + k < n { self.cells[i + k].clone() } else { (z.clone(), z.clone()) })
                .collect();
            return Self { a: self.a, b: self.b, dim: self.dim, cells };
        }
        let cells = (0..n)
            .map(|i| (self.eval(self.node(i) + t), self.eval_left(self.node(i + 1) + t)))
            .collect();
        Self { a: self.a, b: self.b, dim: self.dim, cells }
    }

    pub fn map_values<F: Fn(&DVector<T>) -> DVector<T>>(&self, f: F) -> Self {
        let cells = self.cells.iter().map(|(l, r)| (f(l), f(r))).collect();
        Self { a: self.a, b: self.b, dim: self.dim, cells }
    }

    pub fn scale(&self, c: T) -> Self {
        self.map_values(|v| v * c)
    }

    /// Sum of two densities on identical grids.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|((l1, r1), (l2, r2))| (l1 + l2, r1 + r2))
            .collect();
        Ok(Self { a: self.a, b: self.b, dim: self.dim, cells })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-T::one()))
    }

    /// `‖g − k‖_{L¹}` on identical grids.
    pub fn l1_distance(&self, other: &Self, norm: Norm) -> Result<T> {
        Ok(self.sub(other)?.l1_norm(norm))
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.check_same_grid(other).is_ok()
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if self.cells.len() != other.cells.len() || self.a != other.a || self.b != other.b {
            return Err(Error::InvalidInput("densities live on different grids".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn evaluation_is_right_continuous_at_cell_jumps() {
        let g = DensityGrid::new(0.0, 1.0, vec![(v(&[0.0]), v(&[1.0])), (v(&[5.0]), v(&[5.0]))]).unwrap();
        assert_eq!(g.eval(0.5)[0], 5.0);
        assert_eq!(g.eval_left(0.5)[0], 1.0);
        assert_eq!(g.eval(0.25)[0], 0.5);
        assert_eq!(g.eval(1.0)[0], 5.0);
        assert_eq!(g.eval(1.5)[0], 0.0);
    }

    #[test]
    fn integral_of_linear_cells_is_exact() {
        let g = DensityGrid::from_fn(0.0, 2.0, 7, |t| v(&[3.0 * t - 1.0])).unwrap();
        let exact = |x: f64| 1.5 * x * x - x;
        let got = g.integral(0.3, 1.9)[0];
        assert!((got - (exact(1.9) - exact(0.3))).abs() < 1e-13);
    }

    #[test]
    fn aligned_shift_moves_cells() {
        let g = DensityGrid::from_fn(0.0, 1.0, 4, |t| v(&[t])).unwrap();
        let s = g.shift_left(0.25);
        assert_eq!(s.cells()[0], g.cells()[1]);
        assert_eq!(s.cells()[3].0[0], 0.0);
        let z = g.shift_left(1.0);
        assert_eq!(z.l1_norm(Norm::Euclidean), 0.0);
        assert_eq!(g.shift_left(0.0), g);
    }

    #[test]
    fn pair_with_linear_matches_manual() {
        let g = DensityGrid::constant(0.0, 1.0, 3, v(&[2.0]));
        let val = g.pair_with_linear(|t| v(&[t]), &[]);
        assert!((val - 1.0).abs() < 1e-14);
    }
}
