//! Shipped scenarios on `[0, 1]` with their data and exact solutions.
//!
//! The traveling wave is the one-phase melting front with speed `s`: with
//! `ξ = x − x_f(t)`, `x_f(t) = x_f(0) + s·t`, the liquid side `ξ < 0` has
//! `θ = 2(e^{−sξ} − 1)` and `u = θ + 1`, the solid side has `u = −1`,
//! `θ = 0`. The liquid profile solves `θ_t = θ_xx`, θ is continuous at the
//! front, and the flux balance `−θ_x(0⁻) = 2s = s·[u]` holds with the
//! enthalpy jump `[u] = 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::EnthalpyGraph;
use crate::grid::{Cylinder, Grid, Point, Role, SpaceTimeField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    /// `u_I = 0.4 + 0.5 sin(2πx)`, zero temperature on the boundary.
    MushyStationary,
    /// `u_I` steps from 0.9 to 0 at `x = 0.5`, zero temperature.
    MushyStep,
    /// `u = 2 + e^{−π²t} sin(πx)`, boundary temperature 1.
    LiquidHeat,
    TravelingWave { speed: f64, front0: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub cells: usize,
    pub steps: usize,
    pub t_end: f64,
    pub omega: Cylinder,
    pub omega_tilde: Cylinder,
}

fn default_cylinders(t_end: f64) -> (Cylinder, Cylinder) {
    (
        Cylinder::new([0.5, 0.0], 0.25, 0.25 * t_end, 0.75 * t_end).expect("valid cylinder"),
        Cylinder::new([0.5, 0.0], 0.45, 0.05 * t_end, 0.95 * t_end).expect("valid cylinder"),
    )
}

fn build(name: &str, kind: ScenarioKind, cells: usize, steps: usize, t_end: f64) -> Scenario {
    let (omega, omega_tilde) = default_cylinders(t_end);
    Scenario {
        name: name.to_string(),
        kind,
        cells,
        steps,
        t_end,
        omega,
        omega_tilde,
    }
}

pub fn scenario_mushy_stationary() -> Scenario {
    build("mushy", ScenarioKind::MushyStationary, 64, 100, 0.1)
}

pub fn scenario_mushy_step() -> Scenario {
    build("mushy-step", ScenarioKind::MushyStep, 64, 100, 0.1)
}

/// `dt = h/4` at every level.
pub fn scenario_liquid_heat() -> Scenario {
    build("liquid-heat", ScenarioKind::LiquidHeat, 32, 16, 0.125)
}

/// Front from `x = 0.25` to `0.25 + s/2`; `dt = h/16` at every level for
/// `s = 1`.
pub fn scenario_traveling_wave(speed: f64) -> Result<Scenario> {
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(Error::invalid(format!("front speed must be positive, got {speed}")));
    }
    if 0.25 + 0.5 * speed >= 0.95 {
        return Err(Error::invalid(format!("front speed {speed} leaves the domain before t = 0.5")));
    }
    Ok(build(
        "traveling-wave",
        ScenarioKind::TravelingWave { speed, front0: 0.25 },
        64,
        512,
        0.5,
    ))
}

pub fn all() -> Vec<Scenario> {
    vec![
        scenario_mushy_stationary(),
        scenario_mushy_step(),
        scenario_liquid_heat(),
        scenario_traveling_wave(1.0).expect("unit speed is valid"),
    ]
}

pub fn by_name(name: &str) -> Result<Scenario> {
    all()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::Config(format!("unknown scenario '{name}' (see `list`)")))
}

impl Scenario {
    pub fn graph(&self) -> EnthalpyGraph {
        EnthalpyGraph::unit()
    }

    pub fn description(&self) -> &'static str {
        match self.kind {
            ScenarioKind::MushyStationary => "smooth mushy initial enthalpy, zero boundary temperature",
            ScenarioKind::MushyStep => "discontinuous mushy initial enthalpy, zero boundary temperature",
            ScenarioKind::LiquidHeat => "fully liquid single Fourier mode over temperature 1",
            ScenarioKind::TravelingWave { .. } => "exact one-phase melting front with latent heat 2",
        }
    }

    /// Refinement level `k` halves `h` and `dt` `k` times.
    pub fn grid(&self, level: usize) -> Result<Grid> {
        let f = 1usize << level;
        Grid::interval(0.0, 1.0, self.cells * f, self.t_end, self.steps * f)
    }

    /// Scenario with its default cylinders recomputed for a new horizon.
    pub fn with_horizon(mut self, t_end: f64) -> Result<Self> {
        if !(t_end > 0.0) {
            return Err(Error::invalid("horizon must be positive"));
        }
        let scale = t_end / self.t_end;
        self.t_end = t_end;
        self.omega = Cylinder::new(self.omega.center, self.omega.radius, self.omega.t_lo * scale, self.omega.t_hi * scale)?;
        self.omega_tilde = Cylinder::new(
            self.omega_tilde.center,
            self.omega_tilde.radius,
            self.omega_tilde.t_lo * scale,
            self.omega_tilde.t_hi * scale,
        )?;
        Ok(self)
    }

    pub fn initial_enthalpy(&self, p: Point) -> f64 {
        self.exact_enthalpy(p, 0.0)
    }

    /// All shipped scenarios have closed-form solutions.
    pub fn exact_enthalpy(&self, p: Point, t: f64) -> f64 {
        let x = p[0];
        match self.kind {
            ScenarioKind::MushyStationary => 0.4 + 0.5 * (2.0 * std::f64::consts::PI * x).sin(),
            ScenarioKind::MushyStep => {
                if x < 0.5 {
                    0.9
                } else {
                    0.0
                }
            }
            ScenarioKind::LiquidHeat => {
                let pi = std::f64::consts::PI;
                2.0 + (-pi * pi * t).exp() * (pi * x).sin()
            }
            ScenarioKind::TravelingWave { speed, front0 } => {
                let xi = x - front0 - speed * t;
                if xi < 0.0 {
                    2.0 * ((-speed * xi).exp() - 1.0) + 1.0
                } else {
                    -1.0
                }
            }
        }
    }

    pub fn exact_temperature(&self, p: Point, t: f64) -> f64 {
        self.graph().alpha(self.exact_enthalpy(p, t))
    }

    pub fn initial_slice(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.n_space()).map(|i| self.initial_enthalpy(grid.point(i))).collect()
    }

    /// Boundary temperature on every node and level; only the Dirichlet
    /// nodes are read by the solver.
    pub fn temperature_data(&self, grid: &Grid) -> Result<SpaceTimeField> {
        SpaceTimeField::from_fn(grid.clone(), Role::Temperature, |p, t| self.exact_temperature(p, t))
    }

    pub fn exact_field(&self, grid: &Grid) -> Result<SpaceTimeField> {
        SpaceTimeField::from_fn(grid.clone(), Role::Enthalpy, |p, t| self.exact_enthalpy(p, t))
    }

    /// Whether the enthalpy is independent of time.
    pub fn is_stationary(&self) -> bool {
        matches!(self.kind, ScenarioKind::MushyStationary | ScenarioKind::MushyStep)
    }

    pub fn has_front(&self) -> bool {
        matches!(self.kind, ScenarioKind::TravelingWave { .. })
    }
}

/// Discrete weak residual `Σ_k [⟨θ^k, Δ_h η^k⟩ dt + ⟨u^k, η^{k+1} − η^k⟩]`
/// of sampled fields against a test function vanishing near the boundary.
pub fn weak_residual(u: &SpaceTimeField, theta: &SpaceTimeField, eta: &crate::diagnostics::TestFunction) -> Result<f64> {
    u.check_same_grid(theta)?;
    let g = u.grid();
    let lap_eta = crate::grid::laplacian(g, &eta.space);
    let mut acc = 0.0;
    for k in 0..g.nt - 1 {
        let a = crate::grid::inner(g, theta.slice(k), &lap_eta) * eta.time[k] * g.dt;
        let b = crate::grid::inner(g, u.slice(k), &eta.space) * (eta.time[k + 1] - eta.time[k]);
        acc += a + b;
    }
    Ok(acc)
}
