//! Uniform space-time grids in one or two space dimensions, scalar fields
//! sampled on them, and the discrete calculus used by the solver and the
//! diagnostics.
//!
//! Nodes are treated as cell centres: node `i` along an axis sits at
//! `origin + i·h` and owns a cell of width `h`. Time level `k` sits at
//! `t_start + k·dt`. Spatial nodes are stored row-major (`j·nx + i`) and time
//! slices are contiguous.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A spatial point; the second coordinate is ignored in one dimension.
pub type Point = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub h: f64,
    pub dt: f64,
    pub origin: Point,
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    pub t_start: f64,
}

impl Grid {
    pub fn new_1d(origin: f64, h: f64, nx: usize, t_start: f64, dt: f64, nt: usize) -> Result<Self> {
        let g = Self {
            dim: 1,
            h,
            dt,
            origin: [origin, 0.0],
            nx,
            ny: 1,
            nt,
            t_start,
        };
        g.validate()?;
        Ok(g)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new_2d(
        origin: Point,
        h: f64,
        nx: usize,
        ny: usize,
        t_start: f64,
        dt: f64,
        nt: usize,
    ) -> Result<Self> {
        let g = Self {
            dim: 2,
            h,
            dt,
            origin,
            nx,
            ny,
            nt,
            t_start,
        };
        g.validate()?;
        Ok(g)
    }

    /// Uniform grid on `[x_lo, x_hi] × [0, t_end]` with `cells` spatial and
    /// `steps` temporal intervals.
    pub fn interval(x_lo: f64, x_hi: f64, cells: usize, t_end: f64, steps: usize) -> Result<Self> {
        if cells < 1 || steps < 1 || !(x_hi > x_lo) || !(t_end > 0.0) {
            return Err(Error::invalid("interval grid needs cells, steps >= 1 and positive extents"));
        }
        Self::new_1d(
            x_lo,
            (x_hi - x_lo) / cells as f64,
            cells + 1,
            0.0,
            t_end / steps as f64,
            steps + 1,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::invalid(format!("dimension must be 1 or 2, got {}", self.dim)));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::invalid(format!("spacing h must be positive, got {}", self.h)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid(format!("time step must be positive, got {}", self.dt)));
        }
        if self.nx < 2 || self.nt < 2 || (self.dim == 2 && self.ny < 2) {
            return Err(Error::invalid("grid counts must be >= 2"));
        }
        if self.dim == 1 && self.ny != 1 {
            return Err(Error::invalid("one-dimensional grids have ny = 1"));
        }
        Ok(())
    }

    pub fn n_space(&self) -> usize {
        self.nx * self.ny
    }

    pub fn len(&self) -> usize {
        self.n_space() * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Spatial volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.nt - 1)
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn point(&self, idx: usize) -> Point {
        let (i, j) = self.coords(idx);
        [
            self.origin[0] + i as f64 * self.h,
            if self.dim == 2 {
                self.origin[1] + j as f64 * self.h
            } else {
                0.0
            },
        ]
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.coords(idx);
        i == 0 || i + 1 == self.nx || (self.dim == 2 && (j == 0 || j + 1 == self.ny))
    }

    /// Immediate neighbours along each axis that exist on the grid.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.coords(idx);
        let mut out = [usize::MAX; 4];
        if i > 0 {
            out[0] = idx - 1;
        }
        if i + 1 < self.nx {
            out[1] = idx + 1;
        }
        if self.dim == 2 {
            if j > 0 {
                out[2] = idx - self.nx;
            }
            if j + 1 < self.ny {
                out[3] = idx + self.nx;
            }
        }
        out.into_iter().filter(|&n| n != usize::MAX)
    }

    /// Nearest time level to `t`.
    pub fn level_of(&self, t: f64) -> usize {
        let k = ((t - self.t_start) / self.dt).round();
        (k.max(0.0) as usize).min(self.nt - 1)
    }

    /// Nearest spatial node to `p` along each axis.
    pub fn node_near(&self, p: Point) -> usize {
        let snap = |x: f64, o: f64, n: usize| {
            let k = ((x - o) / self.h).round();
            (k.max(0.0) as usize).min(n - 1)
        };
        let i = snap(p[0], self.origin[0], self.nx);
        let j = if self.dim == 2 {
            snap(p[1], self.origin[1], self.ny)
        } else {
            0
        };
        self.index(i, j)
    }

    pub fn distance(&self, a: Point, b: Point) -> f64 {
        let dx = a[0] - b[0];
        if self.dim == 1 {
            dx.abs()
        } else {
            let dy = a[1] - b[1];
            (dx * dx + dy * dy).sqrt()
        }
    }

    /// Same grid restricted to time levels `k_lo..=k_hi`.
    pub fn time_window(&self, k_lo: usize, k_hi: usize) -> Result<Grid> {
        if k_hi >= self.nt || k_hi <= k_lo {
            return Err(Error::invalid(format!("bad time window {k_lo}..={k_hi}")));
        }
        let mut g = self.clone();
        g.t_start = self.time(k_lo);
        g.nt = k_hi - k_lo + 1;
        Ok(g)
    }

    fn time_tol(&self) -> f64 {
        1e-9 * self.dt
    }

    fn space_tol(&self) -> f64 {
        1e-9 * self.h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Enthalpy,
    Temperature,
    Auxiliary,
}

impl Role {
    fn as_str(self) -> &'static str {
        match self {
            Role::Enthalpy => "enthalpy",
            Role::Temperature => "temperature",
            Role::Auxiliary => "auxiliary",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "enthalpy" => Ok(Role::Enthalpy),
            "temperature" => Ok(Role::Temperature),
            "auxiliary" => Ok(Role::Auxiliary),
            other => Err(Error::invalid(format!("unknown field role {other}"))),
        }
    }
}

/// A scalar field on every node and time level of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    grid: Grid,
    role: Role,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn new(grid: Grid, role: Role, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at flat index {bad}")));
        }
        Ok(Self { grid, role, values })
    }

    pub fn zeros(grid: Grid, role: Role) -> Self {
        let n = grid.len();
        Self {
            grid,
            role,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: Grid, role: Role, f: impl Fn(Point, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..grid.nt {
            let t = grid.time(k);
            for idx in 0..grid.n_space() {
                values.push(f(grid.point(idx), t));
            }
        }
        Self::new(grid, role, values)
    }

    /// Assemble from per-level spatial slices.
    pub fn from_slices(grid: Grid, role: Role, slices: Vec<Vec<f64>>) -> Result<Self> {
        if slices.len() != grid.nt {
            return Err(Error::DimensionMismatch(format!(
                "expected {} slices, got {}",
                grid.nt,
                slices.len()
            )));
        }
        let values = slices.into_iter().flatten().collect();
        Self::new(grid, role, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let n = self.grid.n_space();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn get(&self, idx: usize, k: usize) -> f64 {
        self.values[k * self.grid.n_space() + idx]
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn map(&self, role: Role, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            role,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &SpaceTimeField, role: Role, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            role,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn check_same_grid(&self, other: &SpaceTimeField) -> Result<()> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::DimensionMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Sub-field on time levels `k_lo..=k_hi`.
    pub fn time_window(&self, k_lo: usize, k_hi: usize) -> Result<Self> {
        let grid = self.grid.time_window(k_lo, k_hi)?;
        let n = self.grid.n_space();
        Ok(Self {
            grid,
            role: self.role,
            values: self.values[k_lo * n..(k_hi + 1) * n].to_vec(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn discrete_gradient(&self, k: usize) -> Vec<Point> {
        gradient(&self.grid, self.slice(k))
    }

    pub fn discrete_laplacian(&self, k: usize) -> Vec<f64> {
        laplacian(&self.grid, self.slice(k))
    }

    /// Backward difference in time; the first slice copies the second.
    pub fn discrete_dt(&self) -> SpaceTimeField {
        let n = self.grid.n_space();
        let mut out = vec![0.0; self.values.len()];
        for k in 1..self.grid.nt {
            for idx in 0..n {
                out[k * n + idx] = (self.values[k * n + idx] - self.values[(k - 1) * n + idx]) / self.grid.dt;
            }
        }
        let (first, rest) = out.split_at_mut(n);
        first.copy_from_slice(&rest[..n]);
        Self {
            grid: self.grid.clone(),
            role: Role::Auxiliary,
            values: out,
        }
    }

    /// Midpoint-rule integral over the nodes inside `region`.
    pub fn integrate(&self, region: &Cylinder) -> Result<f64> {
        self.integrate_with(region, |v| v)
    }

    /// Integral of `f(value)` over `region`. Each node carries its dual
    /// cell clipped to the region: exactly in time, and in space for 1D
    /// grids; 2D nodes count fully when inside the ball.
    pub fn integrate_with(&self, region: &Cylinder, f: impl Fn(f64) -> f64) -> Result<f64> {
        let (nodes, levels) = region_weights(&self.grid, region)?;
        let mut acc = 0.0;
        for &(k, wt) in &levels {
            let s = self.slice(k);
            acc += wt * nodes.iter().map(|&(i, wx)| wx * f(s[i])).sum::<f64>();
        }
        Ok(acc)
    }

    /// `∬ |∇f|²` over `region`, with the centred node gradient and the
    /// weights of [`SpaceTimeField::integrate_with`].
    pub fn integrate_gradient_sq(&self, region: &Cylinder) -> Result<f64> {
        let (nodes, levels) = region_weights(&self.grid, region)?;
        let mut acc = 0.0;
        for &(k, wt) in &levels {
            let grad = self.discrete_gradient(k);
            acc += wt
                * nodes
                    .iter()
                    .map(|&(i, wx)| wx * (grad[i][0] * grad[i][0] + grad[i][1] * grad[i][1]))
                    .sum::<f64>();
        }
        Ok(acc)
    }

    /// `h^d·dt·Σ f(value)` over the nodes and levels of the closed region.
    pub fn node_sum_with(&self, region: &Cylinder, f: impl Fn(f64) -> f64) -> Result<f64> {
        let g = &self.grid;
        let nodes = ball_nodes(g, &region.ball());
        let levels = region_levels(g, region.t_lo, region.t_hi);
        if nodes.is_empty() || levels.is_empty() {
            return Err(Error::EmptyRegion(format!("{region:?}")));
        }
        let mut acc = 0.0;
        for &k in &levels {
            let s = self.slice(k);
            acc += nodes.iter().map(|&i| f(s[i])).sum::<f64>();
        }
        Ok(acc * g.cell_volume() * g.dt)
    }
}

fn overlap(center: f64, half: f64, lo: f64, hi: f64) -> f64 {
    ((center + half).min(hi) - (center - half).max(lo)).max(0.0)
}

/// Quadrature weights of `region`: `(node, spatial weight)` and
/// `(level, temporal weight)` with nonzero weight.
fn region_weights(g: &Grid, region: &Cylinder) -> Result<(Vec<(usize, f64)>, Vec<(usize, f64)>)> {
    let nodes: Vec<(usize, f64)> = if g.dim == 1 {
        let (c, r) = (region.center[0], region.radius);
        (0..g.n_space())
            .map(|i| (i, overlap(g.point(i)[0], 0.5 * g.h, c - r, c + r)))
            .filter(|&(_, w)| w > 0.0)
            .collect()
    } else {
        ball_nodes(g, &region.ball()).into_iter().map(|i| (i, g.cell_volume())).collect()
    };
    let levels: Vec<(usize, f64)> = (0..g.nt)
        .map(|k| (k, overlap(g.time(k), 0.5 * g.dt, region.t_lo, region.t_hi)))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    if nodes.is_empty() || levels.is_empty() {
        return Err(Error::EmptyRegion(format!("{region:?}")));
    }
    Ok((nodes, levels))
}

pub(crate) fn same_grid(a: &Grid, b: &Grid) -> bool {
    a.dim == b.dim
        && a.nx == b.nx
        && a.ny == b.ny
        && a.nt == b.nt
        && (a.h - b.h).abs() <= 1e-12 * a.h
        && (a.dt - b.dt).abs() <= 1e-12 * a.dt
        && (a.t_start - b.t_start).abs() <= 1e-9 * a.dt
        && (a.origin[0] - b.origin[0]).abs() <= 1e-9 * a.h
        && (a.origin[1] - b.origin[1]).abs() <= 1e-9 * a.h
}

/// Centred differences in the interior, one-sided at the grid boundary.
pub fn gradient(grid: &Grid, f: &[f64]) -> Vec<Point> {
    let h = grid.h;
    let axis = |idx: usize, lo: Option<usize>, hi: Option<usize>| match (lo, hi) {
        (Some(a), Some(b)) => (f[b] - f[a]) / (2.0 * h),
        (None, Some(b)) => (f[b] - f[idx]) / h,
        (Some(a), None) => (f[idx] - f[a]) / h,
        (None, None) => 0.0,
    };
    (0..grid.n_space())
        .map(|idx| {
            let (i, j) = grid.coords(idx);
            let gx = axis(
                idx,
                (i > 0).then(|| idx - 1),
                (i + 1 < grid.nx).then(|| idx + 1),
            );
            let gy = if grid.dim == 2 {
                axis(
                    idx,
                    (j > 0).then(|| idx - grid.nx),
                    (j + 1 < grid.ny).then(|| idx + grid.nx),
                )
            } else {
                0.0
            };
            [gx, gy]
        })
        .collect()
}

/// 3-point (1D) / 5-point (2D) Laplacian at interior nodes; zero on the grid
/// boundary.
pub fn laplacian(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let h2 = grid.h * grid.h;
    (0..grid.n_space())
        .map(|idx| {
            if grid.is_boundary(idx) {
                return 0.0;
            }
            let s: f64 = grid.neighbors(idx).map(|n| f[n] - f[idx]).sum();
            s / h2
        })
        .collect()
}

/// Edge-based Dirichlet form `Σ_edges (δf)(δg)/h² · h^dim`.
///
/// This is the inner product of the staggered (edge) gradients, and it is the
/// one that satisfies summation by parts against [`laplacian`] exactly.
pub fn dirichlet_form(grid: &Grid, f: &[f64], g: &[f64]) -> f64 {
    let mut acc = 0.0;
    for idx in 0..grid.n_space() {
        let (i, j) = grid.coords(idx);
        if i + 1 < grid.nx {
            acc += (f[idx + 1] - f[idx]) * (g[idx + 1] - g[idx]);
        }
        if grid.dim == 2 && j + 1 < grid.ny {
            let up = idx + grid.nx;
            acc += (f[up] - f[idx]) * (g[up] - g[idx]);
        }
    }
    acc / (grid.h * grid.h) * grid.cell_volume()
}

/// Plain `Σ f g · h^dim` over all spatial nodes.
pub fn inner(grid: &Grid, f: &[f64], g: &[f64]) -> f64 {
    f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() * grid.cell_volume()
}

/// A closed Euclidean ball (an interval in one dimension).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }
}

/// Spatial nodes whose centres lie in the closed ball.
pub fn ball_nodes(grid: &Grid, ball: &Ball) -> Vec<usize> {
    let tol = grid.space_tol();
    (0..grid.n_space())
        .filter(|&idx| grid.distance(grid.point(idx), ball.center) <= ball.radius + tol)
        .collect()
}

fn region_levels(grid: &Grid, t_lo: f64, t_hi: f64) -> Vec<usize> {
    let tol = grid.time_tol();
    (0..grid.nt)
        .filter(|&k| {
            let t = grid.time(k);
            t >= t_lo - tol && t <= t_hi + tol
        })
        .collect()
}

/// Time levels strictly inside `(t_lo, t_hi)`.
pub fn open_levels(grid: &Grid, t_lo: f64, t_hi: f64) -> Vec<usize> {
    let tol = grid.time_tol();
    (0..grid.nt)
        .filter(|&k| {
            let t = grid.time(k);
            t > t_lo + tol && t < t_hi - tol
        })
        .collect()
}

/// `∫_B f dx` for one spatial slice.
pub fn integrate_slice(grid: &Grid, f: &[f64], ball: &Ball) -> Result<f64> {
    let nodes = ball_nodes(grid, ball);
    if nodes.is_empty() {
        return Err(Error::EmptyRegion(format!("{ball:?}")));
    }
    Ok(nodes.iter().map(|&i| f[i]).sum::<f64>() * grid.cell_volume())
}

/// A space-time cylinder `B(center, radius) × [t_lo, t_hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub center: Point,
    pub radius: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl Cylinder {
    pub fn new(center: Point, radius: f64, t_lo: f64, t_hi: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!("cylinder radius must be positive, got {radius}")));
        }
        if !(t_lo < t_hi) {
            return Err(Error::invalid(format!("cylinder needs t_lo < t_hi, got {t_lo} >= {t_hi}")));
        }
        Ok(Self {
            center,
            radius,
            t_lo,
            t_hi,
        })
    }

    pub fn ball(&self) -> Ball {
        Ball {
            center: self.center,
            radius: self.radius,
        }
    }

    pub fn duration(&self) -> f64 {
        self.t_hi - self.t_lo
    }

    /// Strict inclusion of `inner` (same centre assumed checked separately).
    pub fn strictly_contains(&self, inner: &Cylinder) -> bool {
        let d = ((self.center[0] - inner.center[0]).powi(2) + (self.center[1] - inner.center[1]).powi(2)).sqrt();
        d + inner.radius < self.radius && self.t_lo < inner.t_lo && inner.t_hi < self.t_hi
    }
}

/// The five nested cylinders `ω = ω₁ ⊂ ω₂ ⊂ ω₃ ⊂ ω₄ ⊂ ω₅ = ω̃` of the energy
/// estimate, with the intermediate balls `B₁ = B(x₀, (3r+R)/4)` and
/// `B₂ = B(x₀, (r+R)/2)`.
///
/// ω₃ = `B(x₀, r₁) × (a, b)` depends on the selected slices and radius and is
/// unset until [`NestedCylinders::with_selection`] is called.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedCylinders {
    pub omega1: Cylinder,
    pub omega2: Cylinder,
    pub omega4: Cylinder,
    pub omega5: Cylinder,
    pub b1_radius: f64,
    pub b2_radius: f64,
    pub slice_a: Option<f64>,
    pub slice_b: Option<f64>,
    pub r1: Option<f64>,
}

/// Builds the nested family from `ω = B(x₀,r) × (t₀,t₁)` and
/// `ω̃ = B(x₀,R) × (T₀,T₁)`.
pub fn build_nested(omega: Cylinder, omega_tilde: Cylinder) -> Result<NestedCylinders> {
    let same_center = (omega.center[0] - omega_tilde.center[0]).abs() <= 1e-12
        && (omega.center[1] - omega_tilde.center[1]).abs() <= 1e-12;
    if !same_center {
        return Err(Error::NotNested("cylinders must be concentric".into()));
    }
    if !omega_tilde.strictly_contains(&omega) {
        return Err(Error::NotNested(format!("{omega:?} is not strictly inside {omega_tilde:?}")));
    }
    let (r, big_r) = (omega.radius, omega_tilde.radius);
    let (t0, t1) = (omega.t_lo, omega.t_hi);
    let (big_t0, big_t1) = (omega_tilde.t_lo, omega_tilde.t_hi);
    let c = omega.center;
    let omega4 = Cylinder::new(
        c,
        (r + 3.0 * big_r) / 4.0,
        (3.0 * big_t0 + t0) / 4.0,
        (t1 + 3.0 * big_t1) / 4.0,
    )?;
    let omega2 = Cylinder::new(c, (r + big_r) / 2.0, (big_t0 + t0) / 2.0, (t1 + big_t1) / 2.0)?;
    Ok(NestedCylinders {
        omega1: omega,
        omega2,
        omega4,
        omega5: omega_tilde,
        b1_radius: (3.0 * r + big_r) / 4.0,
        b2_radius: (r + big_r) / 2.0,
        slice_a: None,
        slice_b: None,
        r1: None,
    })
}

impl NestedCylinders {
    pub fn center(&self) -> Point {
        self.omega1.center
    }

    /// Open window `((3T₀+t₀)/4, (T₀+t₀)/2)` for the lower slice `a`.
    pub fn a_window(&self) -> (f64, f64) {
        let (t0, big_t0) = (self.omega1.t_lo, self.omega5.t_lo);
        ((3.0 * big_t0 + t0) / 4.0, (big_t0 + t0) / 2.0)
    }

    /// Open window `((t₁+T₁)/2, (t₁+3T₁)/4)` for the upper slice `b`.
    pub fn b_window(&self) -> (f64, f64) {
        let (t1, big_t1) = (self.omega1.t_hi, self.omega5.t_hi);
        ((t1 + big_t1) / 2.0, (t1 + 3.0 * big_t1) / 4.0)
    }

    /// Open range `((r+R)/2, (r+3R)/4)` for the lateral radius `r₁`.
    pub fn r1_range(&self) -> (f64, f64) {
        let (r, big_r) = (self.omega1.radius, self.omega5.radius);
        ((r + big_r) / 2.0, (r + 3.0 * big_r) / 4.0)
    }

    pub fn with_selection(mut self, a: f64, b: f64, r1: f64) -> Result<Self> {
        let inside = |x: f64, (lo, hi): (f64, f64)| x > lo && x < hi;
        if !inside(a, self.a_window()) {
            return Err(Error::NotNested(format!("slice a = {a} outside {:?}", self.a_window())));
        }
        if !inside(b, self.b_window()) {
            return Err(Error::NotNested(format!("slice b = {b} outside {:?}", self.b_window())));
        }
        if !inside(r1, self.r1_range()) {
            return Err(Error::NotNested(format!("radius r1 = {r1} outside {:?}", self.r1_range())));
        }
        self.slice_a = Some(a);
        self.slice_b = Some(b);
        self.r1 = Some(r1);
        Ok(self)
    }

    pub fn omega3(&self) -> Result<Cylinder> {
        match (self.slice_a, self.slice_b, self.r1) {
            (Some(a), Some(b), Some(r1)) => Cylinder::new(self.center(), r1, a, b),
            _ => Err(Error::invalid("ω₃ needs the slice/radius selection")),
        }
    }

    /// Cylinders in inclusion order; ω₃ is included once selected.
    pub fn chain(&self) -> Vec<Cylinder> {
        let mut out = vec![self.omega1, self.omega2];
        if let Ok(w3) = self.omega3() {
            out.push(w3);
        }
        out.push(self.omega4);
        out.push(self.omega5);
        out
    }

    pub fn is_strict_chain(&self) -> bool {
        self.chain().windows(2).all(|w| w[1].strictly_contains(&w[0]))
    }
}

/// Quintic smoothstep `6t⁵ − 15t⁴ + 10t³` on `[0, 1]`, clamped outside.
pub fn smootherstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

pub fn smootherstep_derivative(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    30.0 * t * t * (1.0 - t) * (1.0 - t)
}

/// Squared transition profile: 1 for `d <= inner`, 0 for `d >= outer`.
///
/// Squaring the transition keeps `|η'| / √η` bounded.
pub fn squared_transition(d: f64, inner: f64, outer: f64) -> f64 {
    let s = smootherstep((outer - d) / (outer - inner));
    s * s
}

/// `|η'| / √η` of [`squared_transition`] (zero where η vanishes).
pub fn squared_transition_quotient(d: f64, inner: f64, outer: f64) -> f64 {
    let w = outer - inner;
    let t = (outer - d) / w;
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    2.0 * smootherstep_derivative(t) / w
}

/// Smooth cutoff ≡ 1 on `inner`, ≡ 0 outside `outer`, together with the
/// grid supremum of `|∇η| / √η`.
pub fn bump_test_function(grid: &Grid, inner: &Ball, outer: &Ball) -> Result<(Vec<f64>, f64)> {
    let d = grid.distance(inner.center, outer.center);
    if d + inner.radius >= outer.radius {
        return Err(Error::NotNested("inner ball must lie strictly inside the outer ball".into()));
    }
    let (r_in, r_out) = (inner.radius, outer.radius);
    let mut sup = 0.0f64;
    let values = (0..grid.n_space())
        .map(|idx| {
            let dist = grid.distance(grid.point(idx), outer.center);
            sup = sup.max(squared_transition_quotient(dist, r_in, r_out));
            squared_transition(dist, r_in, r_out)
        })
        .collect();
    Ok((values, sup))
}

const CSV_HEADER: [&str; 10] = ["dim", "h", "dt", "nx", "ny", "nt", "t_start", "origin_x", "origin_y", "role"];

fn fmt_f64(v: f64) -> String {
    format!("{v:.12e}")
}

/// Writes the field as CSV.
///
/// Layout: a header row naming the grid parameters, one row with their
/// values, then one row per time level holding `t` followed by the spatial
/// values in row-major node order.
pub fn write_csv<W: Write>(field: &SpaceTimeField, writer: W) -> Result<()> {
    let g = field.grid();
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    w.write_record(CSV_HEADER)?;
    w.write_record([
        g.dim.to_string(),
        fmt_f64(g.h),
        fmt_f64(g.dt),
        g.nx.to_string(),
        g.ny.to_string(),
        g.nt.to_string(),
        fmt_f64(g.t_start),
        fmt_f64(g.origin[0]),
        fmt_f64(g.origin[1]),
        field.role().as_str().to_string(),
    ])?;
    for k in 0..g.nt {
        let mut row = Vec::with_capacity(g.n_space() + 1);
        row.push(fmt_f64(g.time(k)));
        row.extend(field.slice(k).iter().map(|&v| fmt_f64(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<SpaceTimeField> {
    let mut r = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(reader);
    let mut records = r.records();
    let meta = records
        .next()
        .ok_or_else(|| Error::invalid("csv has no grid row"))??;
    let num = |i: usize| -> Result<f64> {
        meta.get(i)
            .ok_or_else(|| Error::invalid("short grid row"))?
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::invalid(format!("grid row column {i}: {e}")))
    };
    let count = |i: usize| -> Result<usize> { Ok(num(i)? as usize) };
    let grid = Grid {
        dim: count(0)?,
        h: num(1)?,
        dt: num(2)?,
        nx: count(3)?,
        ny: count(4)?,
        nt: count(5)?,
        t_start: num(6)?,
        origin: [num(7)?, num(8)?],
    };
    grid.validate()?;
    let role = Role::parse(meta.get(9).unwrap_or("auxiliary").trim())?;
    let mut values = Vec::with_capacity(grid.len());
    for rec in records {
        let rec = rec?;
        for cell in rec.iter().skip(1) {
            values.push(
                cell.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad value {cell}: {e}")))?,
            );
        }
    }
    SpaceTimeField::new(grid, role, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid1(nx: usize, h: f64) -> Grid {
        Grid::new_1d(0.0, h, nx, 0.0, 0.1, 3).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new_1d(0.0, 0.0, 4, 0.0, 0.1, 3).is_err());
        assert!(Grid::new_1d(0.0, 0.1, 1, 0.0, 0.1, 3).is_err());
        assert!(Grid::new_1d(0.0, 0.1, 4, 0.0, -0.1, 3).is_err());
        assert!(Grid::new_2d([0.0, 0.0], 0.1, 4, 1, 0.0, 0.1, 3).is_err());
        assert!(SpaceTimeField::new(grid1(4, 0.1), Role::Enthalpy, vec![0.0; 11]).is_err());
        let mut v = vec![0.0; 12];
        v[3] = f64::NAN;
        assert!(SpaceTimeField::new(grid1(4, 0.1), Role::Enthalpy, v).is_err());
    }

    #[test]
    fn gradient_examples() {
        let g = grid1(21, 0.1);
        let zero = gradient(&g, &vec![3.0; 21]);
        assert!(zero.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
        let lin: Vec<f64> = (0..21).map(|i| 3.0 * g.point(i)[0]).collect();
        for v in &gradient(&g, &lin)[1..20] {
            assert_abs_diff_eq!(v[0], 3.0, epsilon = 1e-12);
        }
        let quad: Vec<f64> = (0..21).map(|i| g.point(i)[0].powi(2)).collect();
        assert_abs_diff_eq!(gradient(&g, &quad)[10][0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn laplacian_examples() {
        let g = grid1(21, 0.1);
        assert!(laplacian(&g, &vec![1.5; 21]).iter().all(|&v| v == 0.0));
        let quad: Vec<f64> = (0..21).map(|i| g.point(i)[0].powi(2)).collect();
        for v in &laplacian(&g, &quad)[1..20] {
            assert_abs_diff_eq!(*v, 2.0, epsilon = 1e-9);
        }
        let g2 = Grid::new_2d([-1.0, -1.0], 0.125, 17, 17, 0.0, 0.1, 2).unwrap();
        let f: Vec<f64> = (0..g2.n_space())
            .map(|i| {
                let p = g2.point(i);
                p[0] * p[0] + p[1] * p[1]
            })
            .collect();
        let lap = laplacian(&g2, &f);
        for idx in 0..g2.n_space() {
            if !g2.is_boundary(idx) {
                assert_abs_diff_eq!(lap[idx], 4.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn dt_examples() {
        let g = Grid::new_1d(0.0, 0.1, 3, 0.0, 0.1, 11).unwrap();
        let c = SpaceTimeField::from_fn(g.clone(), Role::Auxiliary, |_, _| 2.0).unwrap();
        assert!(c.discrete_dt().values().iter().all(|&v| v == 0.0));
        let lin = SpaceTimeField::from_fn(g.clone(), Role::Auxiliary, |_, t| 5.0 * t).unwrap();
        assert!(lin.discrete_dt().values().iter().all(|&v| (v - 5.0).abs() < 1e-12));
        let sq = SpaceTimeField::from_fn(g.clone(), Role::Auxiliary, |_, t| t * t).unwrap();
        let d = sq.discrete_dt();
        assert_abs_diff_eq!(d.get(1, 10), 1.9, epsilon = 1e-12);
        assert_eq!(d.get(0, 0), d.get(0, 1));
    }

    #[test]
    fn integrate_examples() {
        let g = Grid::interval(-2.0, 2.0, 400, 2.0, 200).unwrap();
        let one = SpaceTimeField::from_fn(g.clone(), Role::Auxiliary, |_, _| 1.0).unwrap();
        let cyl = Cylinder::new([0.0, 0.0], 1.0, 0.5, 1.5).unwrap();
        let vol = one.integrate(&cyl).unwrap();
        assert_abs_diff_eq!(vol, 2.0, epsilon = 1e-12);
        let node_vol = one.node_sum_with(&cyl, |v| v).unwrap();
        assert!((node_vol - 2.0).abs() <= 2.0 * (g.h + g.dt) + 1e-12);
        let zero = SpaceTimeField::zeros(g.clone(), Role::Auxiliary);
        assert_eq!(zero.integrate(&cyl).unwrap(), 0.0);
        let x = SpaceTimeField::from_fn(g.clone(), Role::Auxiliary, |p, _| p[0]).unwrap();
        let off = Cylinder::new([0.5, 0.0], 0.75, 0.5, 1.5).unwrap();
        let ix = x.integrate(&off).unwrap();
        let iv = one.integrate(&off).unwrap();
        assert_abs_diff_eq!(ix, 0.5 * iv, epsilon = 1e-10);
        let outside = Cylinder::new([0.0, 0.0], 1.0, 5.0, 6.0).unwrap();
        assert!(matches!(one.integrate(&outside), Err(Error::EmptyRegion(_))));
    }

    #[test]
    fn nested_examples() {
        let omega = Cylinder::new([0.0, 0.0], 1.0, 1.0, 2.0).unwrap();
        let tilde = Cylinder::new([0.0, 0.0], 2.0, 0.0, 3.0).unwrap();
        let n = build_nested(omega, tilde).unwrap();
        assert_abs_diff_eq!(n.omega4.radius, 1.75);
        assert_abs_diff_eq!(n.omega4.t_lo, 0.25);
        assert_abs_diff_eq!(n.omega4.t_hi, 2.75);
        assert_abs_diff_eq!(n.b1_radius, 1.25);
        assert_abs_diff_eq!(n.b2_radius, 1.5);
        assert_eq!(n.r1_range(), (1.5, 1.75));
        assert!(n.omega3().is_err());
        assert!(n.is_strict_chain());
        let (alo, ahi) = n.a_window();
        let (blo, bhi) = n.b_window();
        let sel = n.clone().with_selection((alo + ahi) / 2.0, (blo + bhi) / 2.0, 1.6).unwrap();
        assert!(sel.is_strict_chain());
        assert_eq!(sel.chain().len(), 5);
        assert!(n.clone().with_selection(ahi + 0.01, blo + 0.01, 1.6).is_err());

        let shifted = Cylinder::new([0.1, 0.0], 1.0, 1.0, 2.0).unwrap();
        assert!(build_nested(shifted, tilde).is_err());
        assert!(build_nested(tilde, omega).is_err());
    }

    #[test]
    fn bump_examples() {
        let g = Grid::interval(-1.0, 1.0, 200, 1.0, 1).unwrap();
        let inner = Ball::new([0.0, 0.0], 0.3).unwrap();
        let outer = Ball::new([0.0, 0.0], 0.6).unwrap();
        let (eta, sup) = bump_test_function(&g, &inner, &outer).unwrap();
        assert_eq!(eta[g.node_near([0.1, 0.0])], 1.0);
        assert_eq!(eta[g.node_near([0.8, 0.0])], 0.0);
        assert!(eta.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let fine = Grid::interval(-1.0, 1.0, 400, 1.0, 1).unwrap();
        let (_, sup_fine) = bump_test_function(&fine, &inner, &outer).unwrap();
        assert!(sup.is_finite() && sup > 0.0);
        assert!(sup_fine / sup < 2.0 && sup / sup_fine < 2.0);
        // analytic value 2·max S' / width = 3.75 / 0.3
        assert!((sup_fine - 12.5).abs() < 0.05);
        assert!(bump_test_function(&g, &outer, &inner).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::new_2d([0.0, -1.0], 0.25, 3, 4, 0.5, 0.1, 3).unwrap();
        let f = SpaceTimeField::from_fn(g, Role::Temperature, |p, t| p[0] - 2.0 * p[1] + t).unwrap();
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dim,h,dt,nx,ny,nt,t_start,origin_x,origin_y,role\n2,"));
        let back = read_csv(&buf[..]).unwrap();
        assert_eq!(back.role(), Role::Temperature);
        assert!(same_grid(back.grid(), f.grid()));
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() <= 1e-11 * (1.0 + b.abs()));
        }
    }

    fn sbp_case(grid: &Grid, f: &[f64], g: &[f64]) -> (f64, f64) {
        let lhs = dirichlet_form(grid, f, g);
        let rhs = -inner(grid, &laplacian(grid, f), g);
        (lhs, rhs)
    }

    proptest! {
        #[test]
        fn summation_by_parts_1d(f in prop::collection::vec(-5.0f64..5.0, 12), g in prop::collection::vec(-5.0f64..5.0, 12)) {
            let grid = grid1(12, 0.07);
            let mut g = g;
            g[0] = 0.0;
            g[11] = 0.0;
            let (lhs, rhs) = sbp_case(&grid, &f, &g);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1.0));
        }

        #[test]
        fn summation_by_parts_2d(f in prop::collection::vec(-5.0f64..5.0, 30), g in prop::collection::vec(-5.0f64..5.0, 30)) {
            let grid = Grid::new_2d([0.0, 0.0], 0.2, 6, 5, 0.0, 0.1, 2).unwrap();
            let mut g = g;
            for idx in 0..30 {
                if grid.is_boundary(idx) { g[idx] = 0.0; }
            }
            let (lhs, rhs) = sbp_case(&grid, &f, &g);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1.0));
        }

        #[test]
        fn integrate_linear_and_monotone(a in prop::collection::vec(-3.0f64..3.0, 33), d in prop::collection::vec(0.0f64..2.0, 33), c in -4.0f64..4.0) {
            let g = Grid::new_1d(0.0, 0.1, 11, 0.0, 0.5, 3).unwrap();
            let fa = SpaceTimeField::new(g.clone(), Role::Auxiliary, a.clone()).unwrap();
            let fb = SpaceTimeField::new(g.clone(), Role::Auxiliary, a.iter().zip(&d).map(|(x, y)| x + y).collect()).unwrap();
            let cyl = Cylinder::new([0.5, 0.0], 0.3, 0.0, 1.0).unwrap();
            let ia = fa.integrate(&cyl).unwrap();
            prop_assert!(ia <= fb.integrate(&cyl).unwrap() + 1e-12);
            let scaled = fa.map(Role::Auxiliary, |v| c * v + 1.0).integrate(&cyl).unwrap();
            let one = fa.map(Role::Auxiliary, |_| 1.0).integrate(&cyl).unwrap();
            prop_assert!((scaled - (c * ia + one)).abs() <= 1e-10);
        }
    }
}
