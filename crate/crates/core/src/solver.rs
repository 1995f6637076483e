//! Backward-Euler time stepping for `v_t = Δ θ(v)` with Dirichlet
//! temperature data, for the regularized graphs α_m (the auxiliary problems)
//! and for the exact graph α (the direct scheme).
//!
//! Each step solves `G(v) = v - v_prev - dt·Δ_h θ(v) = 0` at the interior
//! nodes by Newton's method in the enthalpy unknown. The Jacobian
//! `I - dt·Δ_h·diag(θ'(v))` is column diagonally dominant for any
//! nonnegative slope, so the banded LU needs no pivoting. For the exact graph
//! the slope is the generalized derivative (zero on the plateau), which makes
//! the iteration a semismooth Newton method.

use serde::{Deserialize, Serialize};

use crate::banded::Banded;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{Constitutive, EnthalpyGraph, RegularizedGraph};
use crate::grid::{ball_nodes, same_grid, Ball, Cylinder, Grid, NestedCylinders, Role, SpaceTimeField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Bound on the max-norm of the step residual.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Lower bound applied to θ' in the Jacobian.
    pub derivative_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_newton: 50,
            derivative_floor: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0 && self.derivative_floor > 0.0) || self.max_newton < 1 {
            return Err(Error::invalid(format!("solver configuration {self:?}")));
        }
        Ok(())
    }
}

/// Active nodes of a solve; interior nodes are active nodes whose grid
/// neighbours are all active and which are not on the grid boundary.
/// The remaining active nodes carry Dirichlet data.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    active: Vec<bool>,
    interior: Vec<bool>,
}

impl Domain {
    pub fn from_mask(grid: &Grid, active: Vec<bool>) -> Result<Self> {
        if active.len() != grid.n_space() {
            return Err(Error::DimensionMismatch(format!(
                "mask of {} nodes on a grid of {}",
                active.len(),
                grid.n_space()
            )));
        }
        let interior: Vec<bool> = (0..grid.n_space())
            .map(|i| active[i] && !grid.is_boundary(i) && grid.neighbors(i).all(|n| active[n]))
            .collect();
        if !interior.iter().any(|&b| b) {
            return Err(Error::EmptyRegion("domain has no interior node".into()));
        }
        Ok(Self { active, interior })
    }

    /// The whole grid, with Dirichlet data on the grid boundary.
    pub fn full(grid: &Grid) -> Result<Self> {
        Self::from_mask(grid, vec![true; grid.n_space()])
    }

    /// Nodes of the closed ball.
    pub fn ball(grid: &Grid, ball: &Ball) -> Result<Self> {
        let mut mask = vec![false; grid.n_space()];
        ball_nodes(grid, ball).into_iter().for_each(|i| mask[i] = true);
        Self::from_mask(grid, mask)
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.active[idx]
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        self.interior[idx]
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.active[idx] && !self.interior[idx]
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.active.len()).filter(|&i| self.interior[i]).collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.active.len()).filter(|&i| self.is_boundary(i)).collect()
    }
}

/// Diagnostics of one accepted implicit step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub iterations: usize,
    pub residual: f64,
}

/// `Σ_interior (v - v_prev) - dt Σ_interior Δ_h θ`, scaled by the cell volume.
fn residual<C: Constitutive>(
    grid: &Grid,
    domain: &Domain,
    graph: &C,
    v: &[f64],
    v_prev: &[f64],
    theta_bc: &[f64],
    interior: &[usize],
) -> Vec<f64> {
    let theta = |i: usize| if domain.interior[i] { graph.temperature(v[i]) } else { theta_bc[i] };
    let c = grid.dt / (grid.h * grid.h);
    interior
        .iter()
        .map(|&i| {
            let ti = theta(i);
            let lap: f64 = grid.neighbors(i).map(|n| theta(n) - ti).sum();
            v[i] - v_prev[i] - c * lap
        })
        .collect()
}

fn norm2(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_inf(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// One backward-Euler step.
///
/// `theta_bc` holds the new-level temperature at every spatial node; only the
/// domain's Dirichlet nodes read it. The returned enthalpy is zero off the
/// domain, equals `graph.enthalpy_for(theta_bc, v_prev)` at Dirichlet nodes
/// and solves the step equation to `cfg.newton_tol` in the interior.
pub fn implicit_step<C: Constitutive>(
    grid: &Grid,
    domain: &Domain,
    graph: &C,
    v_prev: &[f64],
    theta_bc: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, StepStats)> {
    cfg.validate()?;
    let n = grid.n_space();
    if v_prev.len() != n || theta_bc.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "step data of length {} / {} on {n} nodes",
            v_prev.len(),
            theta_bc.len()
        )));
    }
    if v_prev.iter().chain(theta_bc).any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite step data"));
    }
    let interior = domain.interior_nodes();
    let mut compact = vec![usize::MAX; n];
    interior.iter().enumerate().for_each(|(c, &i)| compact[i] = c);
    let band = interior
        .iter()
        .flat_map(|&i| grid.neighbors(i).filter(|&j| domain.interior[j]).map(move |j| (i, j)))
        .map(|(i, j)| compact[i].abs_diff(compact[j]))
        .max()
        .unwrap_or(0);

    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            if domain.interior[i] {
                v_prev[i]
            } else if domain.active[i] {
                graph.enthalpy_for(theta_bc[i], v_prev[i])
            } else {
                0.0
            }
        })
        .collect();

    let c = grid.dt / (grid.h * grid.h);
    let mut r = residual(grid, domain, graph, &v, v_prev, theta_bc, &interior);
    let mut iterations = 0;
    while norm_inf(&r) > cfg.newton_tol {
        if iterations == cfg.max_newton {
            return Err(Error::NonConvergence {
                level: None,
                iterations,
                residual: norm_inf(&r),
            });
        }
        iterations += 1;
        let mut jac = Banded::zeros(interior.len(), band, band);
        for (row, &i) in interior.iter().enumerate() {
            let s = graph.slope(v[i]).max(cfg.derivative_floor);
            jac.add(row, row, 1.0 + c * grid.neighbors(i).count() as f64 * s);
            for j in grid.neighbors(i) {
                if domain.interior[j] {
                    let sj = graph.slope(v[j]).max(cfg.derivative_floor);
                    jac.add(row, compact[j], -c * sj);
                }
            }
        }
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        let delta = jac.solve(&neg)?;

        let r0 = norm2(&r);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let mut trial = v.clone();
            for (row, &i) in interior.iter().enumerate() {
                trial[i] += lambda * delta[row];
            }
            let rt = residual(grid, domain, graph, &trial, v_prev, theta_bc, &interior);
            if norm2(&rt) < (1.0 - 1e-4 * lambda) * r0 {
                accepted = Some((trial, rt));
                break;
            }
            lambda *= 0.5;
        }
        let (trial, rt) = accepted.unwrap_or_else(|| {
            // no decrease along the direction: take the full step
            let mut trial = v.clone();
            for (row, &i) in interior.iter().enumerate() {
                trial[i] += delta[row];
            }
            let rt = residual(grid, domain, graph, &trial, v_prev, theta_bc, &interior);
            (trial, rt)
        });
        v = trial;
        r = rt;
    }
    Ok((
        v,
        StepStats {
            iterations,
            residual: norm_inf(&r),
        },
    ))
}

/// Max-norm residual of a step, recomputed from scratch.
pub fn step_residual<C: Constitutive>(
    grid: &Grid,
    domain: &Domain,
    graph: &C,
    v_new: &[f64],
    v_prev: &[f64],
    theta_bc: &[f64],
) -> f64 {
    let interior = domain.interior_nodes();
    norm_inf(&residual(grid, domain, graph, v_new, v_prev, theta_bc, &interior))
}

/// Temperature of an enthalpy slice: θ(v) in the interior, the data on the
/// Dirichlet nodes, zero off the domain.
pub fn temperature_slice<C: Constitutive>(domain: &Domain, graph: &C, v: &[f64], theta_bc: &[f64]) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            if domain.interior[i] {
                graph.temperature(v[i])
            } else if domain.active[i] {
                theta_bc[i]
            } else {
                0.0
            }
        })
        .collect()
}

/// `dt · Σ_{interior i, boundary j adjacent} (θ_j - θ_i)/h² · h^dim`.
pub fn boundary_flux(grid: &Grid, domain: &Domain, theta: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in domain.interior_nodes() {
        for j in grid.neighbors(i) {
            if !domain.interior[j] {
                acc += theta[j] - theta[i];
            }
        }
    }
    acc * grid.dt / (grid.h * grid.h) * grid.cell_volume()
}

/// A time-marched solution with its temperature and per-step statistics.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub enthalpy: SpaceTimeField,
    pub temperature: SpaceTimeField,
    pub steps: Vec<StepStats>,
    /// Largest relative mismatch between the interior enthalpy change and
    /// the boundary flux over all steps.
    pub conservation_error: f64,
}

/// Marches `initial` over all levels of `temperature_data`'s grid.
///
/// Level 0 stores `initial` on the interior and the data-compatible enthalpy
/// on the Dirichlet nodes.
pub fn march<C: Constitutive>(
    domain: &Domain,
    graph: &C,
    initial: &[f64],
    temperature_data: &SpaceTimeField,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    let grid = temperature_data.grid();
    let n = grid.n_space();
    if initial.len() != n {
        return Err(Error::DimensionMismatch(format!("initial data of length {} on {n} nodes", initial.len())));
    }
    let bc0 = temperature_data.slice(0);
    let first: Vec<f64> = (0..n)
        .map(|i| {
            if domain.interior[i] {
                initial[i]
            } else if domain.active[i] {
                graph.enthalpy_for(bc0[i], initial[i])
            } else {
                0.0
            }
        })
        .collect();
    let mut slices = vec![first];
    let mut temps = vec![temperature_slice(domain, graph, &slices[0], bc0)];
    let mut steps = Vec::with_capacity(grid.nt.saturating_sub(1));
    let mut conservation_error: f64 = 0.0;
    let interior = domain.interior_nodes();
    for k in 1..grid.nt {
        let bc = temperature_data.slice(k);
        let prev = &slices[k - 1];
        let (v, stats) = implicit_step(grid, domain, graph, prev, bc, cfg).map_err(|e| e.at_level(k))?;
        let theta = temperature_slice(domain, graph, &v, bc);
        let change: f64 = interior.iter().map(|&i| v[i] - prev[i]).sum::<f64>() * grid.cell_volume();
        let flux = boundary_flux(grid, domain, &theta);
        let scale = change.abs().max(flux.abs()).max(interior.iter().map(|&i| v[i].abs()).sum::<f64>() * grid.cell_volume() * 1e-6).max(f64::MIN_POSITIVE);
        conservation_error = conservation_error.max((change - flux).abs() / scale);
        steps.push(stats);
        slices.push(v);
        temps.push(theta);
    }
    Ok(Trajectory {
        enthalpy: SpaceTimeField::from_slices(grid.clone(), Role::Enthalpy, slices)?,
        temperature: SpaceTimeField::from_slices(grid.clone(), Role::Temperature, temps)?,
        steps,
        conservation_error,
    })
}

/// `v_t = Δα_m(v)` on ω₃ with initial enthalpy at time `a` and lateral
/// temperature data on `∂B(x₀, r₁) × (a, b)`.
#[derive(Clone, Debug)]
pub struct AuxiliaryProblem {
    pub omega3: Cylinder,
    pub graph: RegularizedGraph,
    /// Enthalpy at the first level of `boundary`'s grid, on every node.
    pub initial: Vec<f64>,
    /// Temperature data on the grid restricted to the levels of `[a, b]`;
    /// only the Dirichlet nodes of the ball are read.
    pub boundary: SpaceTimeField,
}

impl AuxiliaryProblem {
    /// Checks the data against the constructed cylinder chain.
    pub fn new(
        nested: &NestedCylinders,
        graph: RegularizedGraph,
        initial: Vec<f64>,
        boundary: SpaceTimeField,
    ) -> Result<Self> {
        let omega3 = nested.omega3()?;
        let g = boundary.grid();
        if initial.len() != g.n_space() {
            return Err(Error::DimensionMismatch("initial slice does not match the boundary grid".into()));
        }
        if initial.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite initial data"));
        }
        let tol = 1e-9 * g.dt;
        if (g.t_start - omega3.t_lo).abs() > tol || (g.t_end() - omega3.t_hi).abs() > tol {
            return Err(Error::Inconsistent(format!(
                "boundary data spans [{}, {}] but the cylinder spans [{}, {}]",
                g.t_start,
                g.t_end(),
                omega3.t_lo,
                omega3.t_hi
            )));
        }
        Ok(Self {
            omega3,
            graph,
            initial,
            boundary,
        })
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::ball(self.boundary.grid(), &self.omega3.ball())
    }
}

pub fn solve_auxiliary(p: &AuxiliaryProblem, cfg: &SolverConfig) -> Result<Trajectory> {
    let domain = p.domain()?;
    march(&domain, &p.graph, &p.initial, &p.boundary, cfg)
}

/// One entry of the regularization schedule of a direct solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    /// `None` for the exact-graph limit stage.
    pub m: Option<u32>,
    /// L² distance in space-time between this stage's temperature and the
    /// previous stage's.
    pub gap_to_previous: Option<f64>,
    pub max_newton_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct DirectSolution {
    /// The exact-graph solution.
    pub trajectory: Trajectory,
    pub stages: Vec<StageSummary>,
    /// Set when the consecutive temperature gaps fail to decrease.
    pub nonmonotone: bool,
}

pub fn l2_distance(a: &SpaceTimeField, b: &SpaceTimeField) -> Result<f64> {
    a.check_same_grid(b)?;
    let g = a.grid();
    let s: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((s * g.cell_volume() * g.dt).sqrt())
}

/// The direct enthalpy scheme for `u_t = Δα(u)`.
///
/// Every `m` of the schedule is solved with the regularized graph and the
/// unchanged temperature data, then the exact graph closes the sequence.
/// The returned trajectory is the exact-graph one; the stage summaries record
/// the temperature gaps between consecutive entries.
pub fn solve_direct(
    domain: &Domain,
    graph: &EnthalpyGraph,
    initial: &[f64],
    temperature_data: &SpaceTimeField,
    cfg: &SolverConfig,
    m_schedule: &[u32],
    exec: Exec,
) -> Result<DirectSolution> {
    if m_schedule.is_empty() || m_schedule.windows(2).any(|w| w[0] >= w[1]) || m_schedule[0] < 1 {
        return Err(Error::invalid(format!("m schedule must be nonempty and increasing, got {m_schedule:?}")));
    }
    let n_stages = m_schedule.len() + 1;
    let mut runs = exec.try_map(n_stages, |s| {
        if s < m_schedule.len() {
            let reg = RegularizedGraph::new(*graph, m_schedule[s])?;
            march(domain, &reg, initial, temperature_data, cfg)
        } else {
            march(domain, graph, initial, temperature_data, cfg)
        }
    })?;
    let mut stages = Vec::with_capacity(n_stages);
    for (s, run) in runs.iter().enumerate() {
        let gap = if s == 0 {
            None
        } else {
            Some(l2_distance(&run.temperature, &runs[s - 1].temperature)?)
        };
        stages.push(StageSummary {
            m: m_schedule.get(s).copied(),
            gap_to_previous: gap,
            max_newton_iterations: run.steps.iter().map(|st| st.iterations).max().unwrap_or(0),
        });
    }
    let gaps: Vec<f64> = stages.iter().filter_map(|s| s.gap_to_previous).collect();
    let nonmonotone = gaps.windows(2).any(|w| w[1] >= w[0] && w[0] > 0.0);
    let trajectory = runs.pop().expect("at least the limit stage");
    Ok(DirectSolution {
        trajectory,
        stages,
        nonmonotone,
    })
}

/// Convenience: the exact-graph trajectory alone.
pub fn solve_exact(
    domain: &Domain,
    graph: &EnthalpyGraph,
    initial: &[f64],
    temperature_data: &SpaceTimeField,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    march(domain, graph, initial, temperature_data, cfg)
}

/// Checks that `field` and `data` live on the same grid.
pub fn check_pairing(field: &SpaceTimeField, data: &SpaceTimeField) -> Result<()> {
    if !same_grid(field.grid(), data.grid()) {
        return Err(Error::Inconsistent("field and data grids differ".into()));
    }
    Ok(())
}
