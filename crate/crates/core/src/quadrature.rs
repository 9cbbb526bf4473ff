//! Polar-grid quadrature on `B_r`, discrete fields on the grid, and
//! polynomial bump test functions.
//!
//! Nodes sit at radial cell centers `R_i` and uniform angles `θ_j`. Every
//! rule is a ring-constant weight times the periodic trapezoid sum in `θ`:
//!
//! * `Unit`: `∫ f dx`, weight `∫_cell R dR` (midpoint rule);
//! * `InvR`: `∫ f / R dx`, weight `ΔR`;
//! * `LogR`: `∫ f ln R dx`, product rule integrating `R ln R` exactly
//!   against the quadratic interpolant through three neighboring nodes;
//! * [`PolarGrid::integrate_polar`]: `∫∫ f dR dθ`.
//!
//! Reductions are a pairwise sum within each ring and then across rings, so
//! results do not depend on the thread count.

use nalgebra::{DVector, Vector2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::homog::{PolarJet, PolarMap};
use crate::linalg::{e_r, e_theta, pairwise_sum};
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layout {
    Uniform,
    /// Edges `0, r q^{N_R−1}, …, r q, r`.
    Geometric { q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    Unit,
    LogR,
    InvR,
}

/// A quadrature node: ring `i`, angle `j`, and its polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub i: usize,
    pub j: usize,
    pub r: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    r: f64,
    n_r: usize,
    n_theta: usize,
    layout: Layout,
    theta_offset: f64,
    edges: Vec<f64>,
    nodes: Vec<f64>,
    w_unit: Vec<f64>,
    w_log: Vec<f64>,
    w_inv: Vec<f64>,
    w_polar: Vec<f64>,
}

pub fn make_polar_grid(r: f64, n_r: usize, n_theta: usize, layout: Layout) -> Result<PolarGrid> {
    PolarGrid::new(r, n_r, n_theta, layout)
}

impl PolarGrid {
    pub const DEFAULT_N_R: usize = 256;
    pub const DEFAULT_N_THETA: usize = 512;

    pub fn new(r: f64, n_r: usize, n_theta: usize, layout: Layout) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::BadLayout(format!("radius must be positive, got {r}")));
        }
        if n_r < 8 {
            return Err(Error::BadLayout(format!("N_R must be >= 8, got {n_r}")));
        }
        if n_theta < 16 {
            return Err(Error::BadLayout(format!("N_theta must be >= 16, got {n_theta}")));
        }
        let (edges, nodes) = match layout {
            Layout::Uniform => {
                let h = r / n_r as f64;
                let edges: Vec<f64> = (0..=n_r).map(|i| h * i as f64).collect();
                let nodes = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
                (edges, nodes)
            }
            Layout::Geometric { q } => {
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::BadLayout(format!("geometric ratio must lie in (0, 1), got {q}")));
                }
                let mut edges = vec![0.0];
                edges.extend((1..=n_r).map(|i| r * q.powi((n_r - i) as i32)));
                if edges[1] <= 0.0 {
                    return Err(Error::BadLayout(format!("q = {q} underflows with N_R = {n_r}")));
                }
                let mut nodes: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
                nodes[0] = nodes[0].max(r * q.powi(n_r as i32));
                (edges, nodes)
            }
        };
        let dtheta = std::f64::consts::TAU / n_theta as f64;
        let w_unit = edges
            .windows(2)
            .map(|w| 0.5 * (w[1] * w[1] - w[0] * w[0]) * dtheta)
            .collect();
        let w_inv: Vec<f64> = edges.windows(2).map(|w| (w[1] - w[0]) * dtheta).collect();
        let w_polar = w_inv.clone();
        let w_log = log_weights(&edges, &nodes).into_iter().map(|w| w * dtheta).collect();
        Ok(Self {
            r,
            n_r,
            n_theta,
            layout,
            theta_offset: 0.0,
            edges,
            nodes,
            w_unit,
            w_log,
            w_inv,
            w_polar,
        })
    }

    /// The default grid on `B_r`.
    pub fn default_for(r: f64) -> Self {
        Self::new(r, Self::DEFAULT_N_R, Self::DEFAULT_N_THETA, Layout::Uniform).expect("default grid is valid")
    }

    /// Shifts every angular node by `offset`.
    pub fn with_theta_offset(mut self, offset: f64) -> Self {
        self.theta_offset = offset;
        self
    }

    /// Multiplies `N_R` and `N_θ` by `scale`; a geometric ratio becomes
    /// `q^{1/scale}` so the layout is refined consistently.
    pub fn refined(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::BadLayout(format!("grid scale must be positive, got {scale}")));
        }
        let n_r = (self.n_r as f64 * scale).round() as usize;
        let n_theta = (self.n_theta as f64 * scale).round() as usize;
        let layout = match self.layout {
            Layout::Uniform => Layout::Uniform,
            Layout::Geometric { q } => Layout::Geometric { q: q.powf(1.0 / scale) },
        };
        Ok(Self::new(self.r, n_r, n_theta, layout)?.with_theta_offset(self.theta_offset))
    }

    pub fn radius(&self) -> f64 {
        self.r
    }
    pub fn n_r(&self) -> usize {
        self.n_r
    }
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
    pub fn layout(&self) -> Layout {
        self.layout
    }
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }
    /// Radial node positions, innermost first.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn dtheta(&self) -> f64 {
        std::f64::consts::TAU / self.n_theta as f64
    }
    pub fn theta(&self, j: usize) -> f64 {
        self.theta_offset + self.dtheta() * j as f64
    }

    /// Ring weights (including `Δθ`) for a weight kind.
    pub fn ring_weights(&self, weight: Weight) -> &[f64] {
        match weight {
            Weight::Unit => &self.w_unit,
            Weight::LogR => &self.w_log,
            Weight::InvR => &self.w_inv,
        }
    }

    pub fn node(&self, i: usize, j: usize) -> Node {
        Node {
            i,
            j,
            r: self.nodes[i],
            theta: self.theta(j),
        }
    }

    fn ring_sums_with(&self, f: &(dyn Fn(&Node) -> f64 + Sync), weights: &[f64]) -> Vec<f64> {
        (0..self.n_r)
            .into_par_iter()
            .map(|i| {
                let vals: Vec<f64> = (0..self.n_theta).map(|j| f(&self.node(i, j))).collect();
                weights[i] * pairwise_sum(&vals)
            })
            .collect()
    }

    /// Per-ring contributions to [`PolarGrid::integrate`].
    pub fn ring_sums(&self, f: impl Fn(&Node) -> f64 + Sync, weight: Weight) -> Vec<f64> {
        self.ring_sums_with(&f, self.ring_weights(weight))
    }

    /// `∫_{B_r} f w dx` for `w ∈ {1, ln R, 1/R}`.
    pub fn integrate(&self, f: impl Fn(&Node) -> f64 + Sync, weight: Weight) -> f64 {
        pairwise_sum(&self.ring_sums_with(&f, self.ring_weights(weight)))
    }

    /// `∫_0^r ∫_0^{2π} f dθ dR`.
    pub fn integrate_polar(&self, f: impl Fn(&Node) -> f64 + Sync) -> f64 {
        pairwise_sum(&self.ring_sums_with(&f, &self.w_polar))
    }

    /// Scalar-valued convenience over `(R, θ)`.
    pub fn integrate_rt(&self, f: impl Fn(f64, f64) -> f64 + Sync, weight: Weight) -> f64 {
        self.integrate(|n| f(n.r, n.theta), weight)
    }

    fn same_shape(&self, other: &PolarGrid) -> bool {
        self.n_r == other.n_r && self.n_theta == other.n_theta && self.r == other.r
    }
}

#[allow(clippy::excessive_precision)]
const GL8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// `∫_a^b R^n ln R dR` through the antiderivative
/// `R^{n+1}(ln R/(n+1) − 1/(n+1)²)`, with the `R → 0` limit.
fn log_moment(n: i32, a: f64, b: f64) -> f64 {
    let np1 = f64::from(n + 1);
    let anti = |x: f64| {
        if x == 0.0 {
            0.0
        } else {
            x.powi(n + 1) * (x.ln() / np1 - 1.0 / (np1 * np1))
        }
    };
    anti(b) - anti(a)
}

/// Node weights `W_i` such that `Σ W_i f(R_i) ≈ ∫_0^r f(R) R ln R dR`.
fn log_weights(edges: &[f64], nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    for cell in 0..n {
        let base = cell.saturating_sub(1).min(n - 3);
        let xs = [nodes[base], nodes[base + 1], nodes[base + 2]];
        let (lo, hi) = (edges[cell], edges[cell + 1]);
        let mut local = [0.0; 3];
        if lo == 0.0 || hi / lo > 1.5 {
            let i1 = log_moment(1, lo, hi);
            let i2 = log_moment(2, lo, hi);
            let i3 = log_moment(3, lo, hi);
            for a in 0..3 {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                let d = (xs[a] - xs[b]) * (xs[a] - xs[c]);
                local[a] = (i3 - (xs[b] + xs[c]) * i2 + xs[b] * xs[c] * i1) / d;
            }
        } else {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            for &(x, wg) in &GL8 {
                for s in [-x, x] {
                    let rr = mid + half * s;
                    let base_w = wg * half * rr * rr.ln();
                    for a in 0..3 {
                        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                        let la = (rr - xs[b]) * (rr - xs[c]) / ((xs[a] - xs[b]) * (xs[a] - xs[c]));
                        local[a] += base_w * la;
                    }
                }
            }
        }
        for a in 0..3 {
            w[base + a] += local[a];
        }
    }
    w
}

/// Derivative weights at `x` of the quadratic interpolant through `xs`.
fn lagrange_deriv(xs: [f64; 3], x: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        let d = (xs[a] - xs[b]) * (xs[a] - xs[c]);
        out[a] = ((x - xs[b]) + (x - xs[c])) / d;
    }
    out
}

/// Anything that yields a value and polar partials at grid nodes.
pub trait GridSampled: Sync {
    fn dim(&self) -> usize;
    fn jet_at(&self, node: &Node) -> PolarJet;
}

impl<T: PolarMap + ?Sized> GridSampled for T {
    fn dim(&self) -> usize {
        PolarMap::dim(self)
    }
    fn jet_at(&self, node: &Node) -> PolarJet {
        self.jet(node.r, node.theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Free,
    /// The outer ring `R = r` holds the trace and is never modified.
    Dirichlet,
}

/// Vector values at the `N_R` node rings plus an outer ring at `R = r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: PolarGrid,
    m: usize,
    boundary: Boundary,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &PolarGrid, m: usize, boundary: Boundary) -> Self {
        Self {
            grid: grid.clone(),
            m,
            boundary,
            values: vec![0.0; (grid.n_r + 1) * grid.n_theta * m],
        }
    }

    /// Samples `map` at every node and on the outer ring.
    pub fn from_map(grid: &PolarGrid, map: &dyn PolarMap, boundary: Boundary) -> Self {
        let m = map.dim();
        let mut f = Self::zeros(grid, m, boundary);
        for i in 0..=grid.n_r {
            let r = f.ring_radius(i);
            for j in 0..grid.n_theta {
                let v = map.jet(r, grid.theta(j)).value;
                f.set(i, j, &v);
            }
        }
        f
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }
    pub fn dim(&self) -> usize {
        self.m
    }
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `R_i` for `i < N_R`, and `r` for the outer ring `i = N_R`.
    pub fn ring_radius(&self, i: usize) -> f64 {
        if i == self.grid.n_r {
            self.grid.r
        } else {
            self.grid.nodes[i]
        }
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        (i * self.grid.n_theta + j) * self.m
    }

    pub fn get(&self, i: usize, j: usize) -> DVector<f64> {
        let s = self.index(i, j);
        DVector::from_column_slice(&self.values[s..s + self.m])
    }

    pub fn set(&mut self, i: usize, j: usize, v: &DVector<f64>) {
        let s = self.index(i, j);
        self.values[s..s + self.m].copy_from_slice(v.as_slice());
    }

    /// `true` for entries the minimizer may change.
    pub fn is_free(&self, i: usize) -> bool {
        i < self.grid.n_r || self.boundary == Boundary::Free
    }

    /// `max |u − trace|` over the outer ring.
    pub fn trace_defect(&self, trace: &dyn PolarMap) -> f64 {
        let i = self.grid.n_r;
        (0..self.grid.n_theta)
            .map(|j| (self.get(i, j) - trace.jet(self.grid.r, self.grid.theta(j)).value).amax())
            .fold(0.0, f64::max)
    }

    /// Discrete `L²(B_r)` norm of `self − other` with unit ring weights.
    pub fn l2_distance(&self, other: &Field) -> f64 {
        assert!(self.grid.same_shape(&other.grid) && self.m == other.m, "field shapes differ");
        let w = self.grid.ring_weights(Weight::Unit);
        let n_t = self.grid.n_theta;
        let rings: Vec<f64> = (0..self.grid.n_r)
            .map(|i| {
                let s = self.index(i, 0);
                let e = s + n_t * self.m;
                let sq: Vec<f64> = self.values[s..e]
                    .iter()
                    .zip(&other.values[s..e])
                    .map(|(a, b)| (a - b) * (a - b))
                    .collect();
                w[i] * pairwise_sum(&sq)
            })
            .collect();
        pairwise_sum(&rings).sqrt()
    }

    /// Polar partials at node `(i, j)` from second-order stencils: centered
    /// in `R` (the outer ring supplies the last neighbor), one-sided at the
    /// innermost ring, centered periodic in `θ`.
    pub fn stencil_jet(&self, i: usize, j: usize) -> PolarJet {
        let g = &self.grid;
        assert!(i < g.n_r, "stencils are defined on interior rings");
        let (rows, wts) = if i == 0 {
            let xs = [self.ring_radius(0), self.ring_radius(1), self.ring_radius(2)];
            ([0, 1, 2], lagrange_deriv(xs, xs[0]))
        } else {
            let xs = [self.ring_radius(i - 1), self.ring_radius(i), self.ring_radius(i + 1)];
            ([i - 1, i, i + 1], lagrange_deriv(xs, xs[1]))
        };
        let mut d_r = DVector::zeros(self.m);
        for (row, w) in rows.iter().zip(wts) {
            d_r += self.get(*row, j) * w;
        }
        let n_t = g.n_theta;
        let jp = (j + 1) % n_t;
        let jm = (j + n_t - 1) % n_t;
        let d_tau = (self.get(i, jp) - self.get(i, jm)) / (2.0 * g.dtheta() * g.nodes[i]);
        PolarJet {
            value: self.get(i, j),
            d_r,
            d_tau,
        }
    }
}

impl GridSampled for Field {
    fn dim(&self) -> usize {
        self.m
    }
    fn jet_at(&self, node: &Node) -> PolarJet {
        self.stencil_jet(node.i, node.j)
    }
}

/// `(1 − d²/s²)^{q_s}` on the ball `|x − center| < s`, times a unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    center: Vector2<f64>,
    support: f64,
    order: u32,
    direction: DVector<f64>,
    amplitude: f64,
}

/// A scalar bump (direction `e₁ ∈ R²`) with support inside `B_r`.
pub fn make_bump(center: [f64; 2], s: f64, q_s: u32, r: f64) -> Result<TestFunction> {
    if q_s < 3 {
        return Err(Error::InvalidArgument(format!("bump order must be >= 3, got {q_s}")));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("support radius must be positive, got {s}")));
    }
    let c = Vector2::new(center[0], center[1]);
    let reach = c.norm() + s;
    if reach >= r {
        return Err(Error::SupportEscapesDomain { reach, radius: r });
    }
    Ok(TestFunction {
        center: c,
        support: s,
        order: q_s,
        direction: DVector::from_vec(vec![1.0, 0.0]),
        amplitude: 1.0,
    })
}

impl TestFunction {
    /// Replaces the direction by `v / |v|`.
    pub fn with_direction(mut self, v: DVector<f64>) -> Self {
        let n = v.norm();
        assert!(n > 0.0, "direction must be nonzero");
        self.direction = v / n;
        self
    }

    /// Multiplies the bump by `s`.
    pub fn scaled(mut self, s: f64) -> Self {
        self.amplitude *= s;
        self
    }

    pub fn center(&self) -> Vector2<f64> {
        self.center
    }
    pub fn support(&self) -> f64 {
        self.support
    }
    pub fn order(&self) -> u32 {
        self.order
    }
    pub fn direction(&self) -> &DVector<f64> {
        &self.direction
    }

    /// Scalar profile and its Cartesian gradient at `p`.
    pub fn profile(&self, p: Vector2<f64>) -> (f64, Vector2<f64>) {
        let d = p - self.center;
        let s2 = self.support * self.support;
        let base = 1.0 - d.norm_squared() / s2;
        if base <= 0.0 {
            return (0.0, Vector2::zeros());
        }
        let q = self.order as i32;
        let grad = d * (-2.0 * self.amplitude * f64::from(self.order) * base.powi(q - 1) / s2);
        (self.amplitude * base.powi(q), grad)
    }
}

impl PolarMap for TestFunction {
    fn dim(&self) -> usize {
        self.direction.len()
    }
    fn jet(&self, r: f64, theta: f64) -> PolarJet {
        let (v, g) = self.profile(e_r(theta) * r);
        PolarJet {
            value: &self.direction * v,
            d_r: &self.direction * g.dot(&e_r(theta)),
            d_tau: &self.direction * g.dot(&e_theta(theta)),
        }
    }
}

/// Bump order used by [`bump_battery`].
pub const BATTERY_ORDER: u32 = 8;

/// `count` bumps of order [`BATTERY_ORDER`] with centers on the rings `0.3r` and `0.6r`,
/// supports clear of the origin, and random unit directions in `R^m`.
pub fn bump_battery(r: f64, m: usize, count: usize, seed: u64) -> Vec<TestFunction> {
    let mut rng = CounterRng::new(seed, "bump-battery");
    (0..count)
        .map(|n| {
            let inner = n < count.div_ceil(2);
            let ring = if inner { 0.3 * r } else { 0.6 * r };
            let s_max = if inner { 0.25 * r } else { 0.35 * r };
            let angle = rng.uniform(0.0, std::f64::consts::TAU);
            let s = rng.uniform(0.1 * r, s_max);
            let dir = DVector::from_vec(rng.unit_vector(m));
            let c = e_r(angle) * ring;
            make_bump([c.x, c.y], s, BATTERY_ORDER, r)
                .expect("battery supports lie inside the disk")
                .with_direction(dir)
        })
        .collect()
}
