//! Run configuration, the per-level pipeline, refinement/m sweeps, pass/fail
//! checks and report emission.
//!
//! One level runs the direct solve, builds the nested cylinders, selects the
//! slices `a`, `b` and the radius `r₁` from maximal functions, mollifies the
//! direct enthalpy and temperature, solves the auxiliary problem for every m
//! of the schedule, and evaluates every diagnostic on the result.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::diagnostics::{
    comparison_defect, continuity_modulus, energy_report, fit_through_origin, l2_temperature_bound, local_bound_check,
    subcaloric_test, temperature_agreement, AgreementReport, ContinuityReport, EnergyReport, L2BoundReport,
    LocalBoundReport, SubcaloricReport,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{CutoffVariant, RegularizedGraph};
use crate::grid::{build_nested, write_csv, Ball, Cylinder, NestedCylinders, Role, SpaceTimeField};
use crate::mollify::{maximal_function, mollify, select_radius, select_time_slice, MaxWindows, Mollifier, RadiusSelection, SliceSelection};
use crate::scenarios::{self, Scenario};
use crate::solver::{l2_distance, solve_auxiliary, solve_direct, AuxiliaryProblem, Domain, SolverConfig, StageSummary};

/// `C_tol` of the weak-form and comparison tolerances `C_tol·h`, calibrated
/// on the liquid-heat scenario (see `calibrate_c_tol`) and frozen.
pub const C_TOL: f64 = 1e-9;

/// Constant of the temperature-agreement tolerance `C_agree·h`.
pub const C_AGREE: f64 = 1.0;

/// Relative spread allowed for energy ratios across refinement levels.
pub const ENERGY_SPREAD: f64 = 0.2;

/// Relative deviation of each modulus from the fitted `C·h`.
pub const MODULUS_FIT_SLACK: f64 = 0.2;

/// Accepted band for the latent-heat jump across the front.
pub const JUMP_BAND: (f64, f64) = (1.8, 2.2);

/// Accepted band for the empirical order of the liquid-heat error.
pub const ORDER_BAND: (f64, f64) = (0.8, 1.2);

/// Stationarity bound on mushy scenarios.
pub const STATIONARY_TOL: f64 = 1e-12;

/// Relative conservation bound per step.
pub const CONSERVATION_TOL: f64 = 1e-8;

/// Rounding allowance of the domination `|u_m| <= M(uχ)`, relative to
/// `max(1, max|u|)`: the kernel weights sum to one only up to rounding.
pub const DOMINATION_ROUNDOFF: f64 = 1e-12;

/// Fraction of the cylinder margins used by the mollifier support.
pub const KERNEL_MARGIN_FRACTION: f64 = 0.9;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverrides {
    pub cells: Option<usize>,
    pub steps: Option<usize>,
    pub t_end: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubcaloricConfig {
    pub trials: usize,
    pub c_tol: f64,
}

impl Default for SubcaloricConfig {
    fn default() -> Self {
        Self { trials: 100, c_tol: C_TOL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: String,
    pub levels: usize,
    pub seed: u64,
    pub m_schedule: Vec<u32>,
    pub out: PathBuf,
    pub grid: GridOverrides,
    pub solver: SolverConfig,
    pub subcaloric: SubcaloricConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: "mushy".into(),
            levels: 3,
            seed: 2024,
            m_schedule: vec![4, 16, 64, 256],
            out: PathBuf::from("out"),
            grid: GridOverrides::default(),
            solver: SolverConfig::default(),
            subcaloric: SubcaloricConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.levels < 1 {
            return bad("levels must be >= 1");
        }
        if self.m_schedule.len() < 2 || self.m_schedule.windows(2).any(|w| w[0] >= w[1]) || self.m_schedule[0] < 1 {
            return bad("m_schedule must hold at least two increasing entries >= 1");
        }
        if !(self.solver.newton_tol > 0.0) || !(self.solver.derivative_floor > 0.0) || self.solver.max_newton < 1 {
            return bad("solver tolerances must be positive and max_newton >= 1");
        }
        if self.subcaloric.trials < 1 || !(self.subcaloric.c_tol > 0.0) {
            return bad("subcaloric trials must be >= 1 and c_tol > 0");
        }
        if self.grid.cells == Some(0) || self.grid.steps == Some(0) || self.grid.t_end.is_some_and(|t| !(t > 0.0)) {
            return bad("grid overrides must be positive");
        }
        scenarios::by_name(&self.scenario)?;
        Ok(())
    }

    /// The scenario with grid overrides applied.
    pub fn scenario(&self) -> Result<Scenario> {
        let mut s = scenarios::by_name(&self.scenario)?;
        if let Some(t) = self.grid.t_end {
            s = s.with_horizon(t)?;
        }
        if let Some(c) = self.grid.cells {
            s.cells = c;
        }
        if let Some(n) = self.grid.steps {
            s.steps = n;
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectReport {
    pub stages: Vec<StageSummary>,
    pub nonmonotone_temperature_sequence: bool,
    pub max_newton_iterations: usize,
    pub max_residual: f64,
    pub conservation_error: f64,
    /// Max-norm distance to the exact enthalpy over all levels.
    pub max_error: f64,
    /// Space-time L² distance to the exact enthalpy.
    pub l2_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub a: SliceSelection,
    pub b: SliceSelection,
    pub r1: RadiusSelection,
    pub omega3: Cylinder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxReport {
    pub m: u32,
    pub space_half_width: usize,
    pub time_half_width: usize,
    pub comparison_defect: f64,
    pub comparison_tolerance: f64,
    pub conservation_error: f64,
    pub max_newton_iterations: usize,
    pub l2_bound: L2BoundReport,
    /// `max(|u_m| − M(uχ), 0)` over all nodes.
    pub domination_violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub scenario: String,
    pub level: usize,
    pub h: f64,
    pub dt: f64,
    pub cells: usize,
    pub steps: usize,
    pub direct: DirectReport,
    pub nested: NestedCylinders,
    pub selection: SelectionReport,
    pub energy: EnergyReport,
    pub auxiliary: Vec<AuxReport>,
    pub agreement: AgreementReport,
    pub agreement_tolerance: f64,
    pub subcaloric: Vec<SubcaloricReport>,
    pub local_bound: LocalBoundReport,
}

/// A computed level: fields plus report.
#[derive(Clone, Debug)]
pub struct LevelOutcome {
    pub enthalpy: SpaceTimeField,
    pub temperature: SpaceTimeField,
    pub report: LevelReport,
}

/// `f` on the nodes and levels of `region`, zero elsewhere.
pub fn truncate(f: &SpaceTimeField, region: &Cylinder) -> Result<SpaceTimeField> {
    let g = f.grid();
    let mut mask = vec![false; g.n_space()];
    crate::grid::ball_nodes(g, &region.ball()).into_iter().for_each(|i| mask[i] = true);
    let tol = 1e-9 * g.dt;
    let n = g.n_space();
    let values = f
        .values()
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let t = g.time(j / n);
            if mask[j % n] && t >= region.t_lo - tol && t <= region.t_hi + tol {
                v
            } else {
                0.0
            }
        })
        .collect();
    SpaceTimeField::new(g.clone(), f.role(), values)
}

/// Mollifier of index `m` whose support fits the gaps between ω₄ and ω₅.
pub fn mollifier_for(nested: &NestedCylinders, m: u32) -> Result<Mollifier> {
    let space_gap = (nested.omega5.radius - nested.omega4.radius).min(nested.omega5.radius - nested.omega1.radius);
    let time_gap = (nested.omega4.t_lo - nested.omega5.t_lo).min(nested.omega5.t_hi - nested.omega4.t_hi);
    Mollifier::scaled(m, KERNEL_MARGIN_FRACTION * space_gap, KERNEL_MARGIN_FRACTION * time_gap)
}

pub fn run_level(scenario: &Scenario, level: usize, cfg: &RunConfig, exec: Exec) -> Result<LevelOutcome> {
    let grid = scenario.grid(level)?;
    let graph = scenario.graph();
    let domain = Domain::full(&grid)?;
    let data = scenario.temperature_data(&grid)?;
    let init = scenario.initial_slice(&grid);
    let direct = solve_direct(&domain, &graph, &init, &data, &cfg.solver, &cfg.m_schedule, exec)?;
    let u = direct.trajectory.enthalpy.clone();
    let theta = direct.trajectory.temperature.clone();

    let exact = scenario.exact_field(&grid)?;
    let max_error = u.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let direct_report = DirectReport {
        stages: direct.stages.clone(),
        nonmonotone_temperature_sequence: direct.nonmonotone,
        max_newton_iterations: direct.trajectory.steps.iter().map(|s| s.iterations).max().unwrap_or(0),
        max_residual: direct.trajectory.steps.iter().map(|s| s.residual).fold(0.0, f64::max),
        conservation_error: direct.trajectory.conservation_error,
        max_error,
        l2_error: l2_distance(&u, &exact)?,
    };

    // slice and radius selection from maximal functions of the truncated fields
    let nested = build_nested(scenario.omega, scenario.omega_tilde)?;
    let w5 = nested.omega5;
    let coarsest = mollifier_for(&nested, cfg.m_schedule[0])?;
    let windows = MaxWindows::covering(&grid, &coarsest);
    let max_u = maximal_function(&truncate(&u, &w5)?, windows, exec);
    let max_theta = maximal_function(&truncate(&theta, &w5)?, windows, exec);
    let big_ball = Ball::new(w5.center, w5.radius)?;
    let mu2 = max_u.map(Role::Auxiliary, |x| x * x);
    let mt2 = max_theta.map(Role::Auxiliary, |x| x * x);
    let sel_a = select_time_slice(&mu2, nested.a_window(), &big_ball)?;
    let sel_b = select_time_slice(&mu2, nested.b_window(), &big_ball)?;
    let sel_r = select_radius(&mt2, nested.center(), nested.r1_range(), (w5.t_lo, w5.t_hi))?;
    let nested = nested.with_selection(sel_a.time, sel_b.time, sel_r.radius)?;
    let w3 = nested.omega3()?;
    let (ka, kb) = (sel_a.level, sel_b.level);
    let theta_window = theta.time_window(ka, kb)?;

    let aux = exec.try_map(cfg.m_schedule.len(), |i| {
        let m = cfg.m_schedule[i];
        let moll = mollifier_for(&nested, m)?;
        let u_m = mollify(&u, &w5, &moll, Exec::Sequential)?;
        let w_m = mollify(&theta, &w5, &moll, Exec::Sequential)?;
        let domination_violation = u_m
            .values()
            .iter()
            .zip(max_u.values())
            .map(|(a, b)| (a.abs() - b).max(0.0))
            .fold(0.0, f64::max);
        let u_mw = u_m.time_window(ka, kb)?;
        let w_mw = w_m.time_window(ka, kb)?;
        let reg = RegularizedGraph::new(graph, m)?;
        let problem = AuxiliaryProblem::new(&nested, reg, u_mw.slice(0).to_vec(), w_mw.clone())?;
        let traj = solve_auxiliary(&problem, &cfg.solver)?;
        let defect = comparison_defect(&traj.enthalpy, &u_mw, &traj.temperature, &w_mw, &w3)?;
        let report = AuxReport {
            m,
            space_half_width: moll.space_half_width(&grid),
            time_half_width: moll.time_half_width(&grid),
            comparison_defect: defect,
            comparison_tolerance: cfg.subcaloric.c_tol * (grid.h + grid.dt),
            conservation_error: traj.conservation_error,
            max_newton_iterations: traj.steps.iter().map(|s| s.iterations).max().unwrap_or(0),
            l2_bound: l2_temperature_bound(&traj.temperature, &u, &nested)?,
            domination_violation,
        };
        Ok::<_, Error>((report, traj.temperature))
    })?;
    let temps: Vec<(u32, &SpaceTimeField)> = aux.iter().map(|(r, t)| (r.m, t)).collect();
    let agreement = temperature_agreement(&theta_window, &temps, &w3)?;
    let energy = energy_report(&u, &theta, &graph, &nested)?;
    let subcaloric = [CutoffVariant::TwoSided, CutoffVariant::Plus, CutoffVariant::Minus]
        .into_iter()
        .map(|v| subcaloric_test(&theta, v, cfg.subcaloric.trials, cfg.seed, cfg.subcaloric.c_tol, exec))
        .collect::<Result<Vec<_>>>()?;
    let local_bound = local_bound_check(&theta, &nested.omega1, &nested.omega5)?;

    let report = LevelReport {
        scenario: scenario.name.clone(),
        level,
        h: grid.h,
        dt: grid.dt,
        cells: grid.nx - 1,
        steps: grid.nt - 1,
        direct: direct_report,
        selection: SelectionReport {
            a: sel_a,
            b: sel_b,
            r1: sel_r,
            omega3: w3,
        },
        nested,
        energy,
        auxiliary: aux.into_iter().map(|(r, _)| r).collect(),
        agreement,
        agreement_tolerance: C_AGREE * grid.h,
        subcaloric,
        local_bound,
    };
    Ok(LevelOutcome {
        enthalpy: u,
        temperature: theta,
        report,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, ok: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            detail,
        }
    }

    pub fn skip(name: &str, why: &str) -> Self {
        Self {
            name: name.into(),
            status: Status::Skip,
            detail: why.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        write!(f, "{tag}  {:<28} {}", self.name, self.detail)
    }
}

/// Trend verdict of a sequence over refinement or m.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Decreasing,
    Stable,
    Violated,
}

pub fn trend(values: &[f64], spread: f64) -> Trend {
    if values.windows(2).all(|w| w[1] < w[0]) {
        return Trend::Decreasing;
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo || (hi - lo) <= spread * lo.abs() {
        Trend::Stable
    } else {
        Trend::Violated
    }
}

/// `(max − min) / min`, zero for a constant sequence.
pub fn relative_spread(values: &[f64]) -> f64 {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        0.0
    } else {
        (hi - lo) / lo.abs()
    }
}

/// Empirical orders `log₂(e_k / e_{k+1})`.
pub fn empirical_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub m_schedule: Vec<u32>,
    pub h: Vec<f64>,
    pub ratio_gradient: Vec<f64>,
    pub ratio_dt: Vec<f64>,
    pub ratio_gradient_trend: Trend,
    pub ratio_dt_trend: Trend,
    pub l2_error: Vec<f64>,
    pub empirical_order: Vec<f64>,
    pub continuity: Option<ContinuityReport>,
    pub modulus_constant: Option<f64>,
    /// Comparison defect at the largest m, per level.
    pub defect_by_level: Vec<f64>,
    /// Temperature-agreement distances per level (rows) and m (columns).
    pub agreement_by_level: Vec<Vec<f64>>,
    pub agreement_trend: Vec<Trend>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn all_levels<F: Fn(&LevelReport) -> bool>(levels: &[LevelReport], f: F) -> bool {
    levels.iter().all(f)
}

/// Pass/fail checks for a scenario over its computed levels.
pub fn evaluate(scenario: &Scenario, outcomes: &[LevelOutcome]) -> Result<(Vec<Check>, Option<ContinuityReport>)> {
    let levels: Vec<LevelReport> = outcomes.iter().map(|o| o.report.clone()).collect();
    let mut checks = Vec::new();
    let multi = levels.len() >= 2;

    let conservation = levels.iter().map(|l| l.direct.conservation_error).fold(0.0, f64::max);
    checks.push(Check::new("conservation", conservation <= CONSERVATION_TOL, format!("max relative mismatch {conservation:.3e}")));

    if scenario.is_stationary() {
        let dev = levels.iter().map(|l| l.direct.max_error).fold(0.0, f64::max);
        checks.push(Check::new("mushy-stationarity", dev <= STATIONARY_TOL, format!("max |u - u_I| = {dev:.3e}")));
    }

    let rg: Vec<f64> = levels.iter().map(|l| l.energy.ratio_gradient).collect();
    let rd: Vec<f64> = levels.iter().map(|l| l.energy.ratio_dt).collect();
    if scenario.is_stationary() {
        let zero = rg.iter().chain(&rd).all(|&r| r == 0.0);
        checks.push(Check::new("energy-zero", zero, format!("ratio_gradient {}, ratio_dt {}", sci(&rg), sci(&rd))));
    } else if multi {
        let (sg, sd) = (relative_spread(&rg), relative_spread(&rd));
        checks.push(Check::new(
            "energy-stable",
            sg < ENERGY_SPREAD && sd < ENERGY_SPREAD,
            format!("spread gradient {sg:.3}, dt {sd:.3} (limit {ENERGY_SPREAD})"),
        ));
    } else {
        checks.push(Check::skip("energy-stable", "needs two levels"));
    }

    for (i, name) in ["subcaloric-abs", "subcaloric-plus", "supercaloric-minus"].iter().enumerate() {
        let ok = all_levels(&levels, |l| l.subcaloric[i].passed);
        let worst: Vec<f64> = levels.iter().map(|l| l.subcaloric[i].worst).collect();
        checks.push(Check::new(name, ok, format!("worst per level {}", sci(&worst))));
    }

    let sign_ok = all_levels(&levels, |l| l.auxiliary.iter().all(|a| a.comparison_defect <= a.comparison_tolerance));
    let worst_defect = levels
        .iter()
        .flat_map(|l| l.auxiliary.iter().map(|a| a.comparison_defect))
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new("comparison-sign", sign_ok, format!("largest defect {worst_defect:.3e}")));

    let dom = levels
        .iter()
        .flat_map(|l| l.auxiliary.iter().map(|a| a.domination_violation))
        .fold(0.0, f64::max);
    let scale = outcomes.iter().map(|o| o.enthalpy.max_abs()).fold(1.0, f64::max);
    checks.push(Check::new(
        "mollifier-domination",
        dom <= DOMINATION_ROUNDOFF * scale,
        format!("max excess {dom:.3e} (rounding allowance {:.1e})", DOMINATION_ROUNDOFF * scale),
    ));

    let sel_ok = all_levels(&levels, |l| {
        l.selection.a.value <= l.selection.a.window_mean
            && l.selection.b.value <= l.selection.b.window_mean
            && l.selection.r1.value <= l.selection.r1.mean
    });
    checks.push(Check::new("selection-below-mean", sel_ok, "a, b and r1 at or below their window means".into()));

    let torsion_ok = all_levels(&levels, |l| {
        l.auxiliary.iter().all(|a| a.l2_bound.torsion.laplacian_error <= 1e-8 && a.l2_bound.torsion.max_value <= 1e-12)
    });
    checks.push(Check::new("torsion-potential", torsion_ok, "Δ_h φ = 1 inside, φ <= 0 on the ball".into()));

    if matches!(scenario.kind, scenarios::ScenarioKind::LiquidHeat) {
        let errs: Vec<f64> = levels.iter().map(|l| l.direct.l2_error).collect();
        let orders = empirical_orders(&errs);
        if orders.is_empty() {
            checks.push(Check::skip("liquid-order", "needs two levels"));
        } else {
            let ok = orders.iter().all(|o| (ORDER_BAND.0..=ORDER_BAND.1).contains(o));
            checks.push(Check::new("liquid-order", ok, format!("orders {orders:.3?} in {ORDER_BAND:?}")));
        }
    }

    let mut continuity = None;
    if multi {
        let pairs: Vec<(&SpaceTimeField, &SpaceTimeField)> = outcomes.iter().map(|o| (&o.enthalpy, &o.temperature)).collect();
        let c = continuity_modulus(&pairs)?;
        if scenario.has_front() {
            let fit = fit_through_origin(&c.h, &c.temperature_modulus);
            let dec = c.temperature_modulus.windows(2).all(|w| w[1] < w[0]);
            let near = c
                .h
                .iter()
                .zip(&c.temperature_modulus)
                .all(|(h, m)| (m - fit * h).abs() <= MODULUS_FIT_SLACK * fit * h);
            let jumps = c.enthalpy_jump.iter().all(|j| (JUMP_BAND.0..=JUMP_BAND.1).contains(j));
            checks.push(Check::new(
                "continuity-modulus",
                dec && near && jumps,
                format!(
                    "θ modulus {} (fit C = {fit:.4}), enthalpy jump {:.4?}",
                    sci(&c.temperature_modulus), c.enthalpy_jump
                ),
            ));

            let defects: Vec<f64> = levels.iter().map(|l| l.auxiliary.last().unwrap().comparison_defect.abs()).collect();
            let ok = defects.windows(2).all(|w| w[1] < w[0]);
            checks.push(Check::new("comparison-refinement", ok, format!("|defect| at largest m {}", sci(&defects))));

            let ag_ok = all_levels(&levels, |l| {
                l.agreement.strictly_decreasing && *l.agreement.distances.last().unwrap() <= l.agreement_tolerance
            });
            let last = levels.last().unwrap();
            checks.push(Check::new(
                "temperature-agreement",
                ag_ok,
                format!("finest level distances {} (tol {:.3e})", sci(&last.agreement.distances), last.agreement_tolerance),
            ));
        } else {
            let dec = c.temperature_modulus.windows(2).all(|w| w[1] <= w[0]);
            checks.push(Check::new(
                "continuity-modulus",
                dec,
                format!("θ modulus {} non-increasing", sci(&c.temperature_modulus)),
            ));
        }
        continuity = Some(c);
    } else if scenario.has_front() {
        checks.push(Check::skip("continuity-modulus", "needs two levels"));
    }
    Ok((checks, continuity))
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub levels: Vec<LevelOutcome>,
    pub summary: Summary,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.summary.passed
    }
}

/// Runs every refinement level of the configured scenario and evaluates
/// the checks.
pub fn run(cfg: &RunConfig, exec: Exec) -> Result<RunOutcome> {
    cfg.validate()?;
    let scenario = cfg.scenario()?;
    let levels = exec.try_map(cfg.levels, |k| run_level(&scenario, k, cfg, Exec::Sequential).map_err(|e| annotate(e, k)))?;
    let (checks, continuity) = evaluate(&scenario, &levels)?;
    let reports: Vec<&LevelReport> = levels.iter().map(|l| &l.report).collect();
    let rg: Vec<f64> = reports.iter().map(|l| l.energy.ratio_gradient).collect();
    let rd: Vec<f64> = reports.iter().map(|l| l.energy.ratio_dt).collect();
    let l2: Vec<f64> = reports.iter().map(|l| l.direct.l2_error).collect();
    let modulus_constant = continuity.as_ref().map(|c| fit_through_origin(&c.h, &c.temperature_modulus));
    let agreement_by_level: Vec<Vec<f64>> = reports.iter().map(|l| l.agreement.distances.clone()).collect();
    let summary = Summary {
        scenario: scenario.name.clone(),
        seed: cfg.seed,
        m_schedule: cfg.m_schedule.clone(),
        h: reports.iter().map(|l| l.h).collect(),
        ratio_gradient_trend: trend(&rg, ENERGY_SPREAD),
        ratio_dt_trend: trend(&rd, ENERGY_SPREAD),
        ratio_gradient: rg,
        ratio_dt: rd,
        empirical_order: empirical_orders(&l2),
        l2_error: l2,
        continuity,
        modulus_constant,
        defect_by_level: reports.iter().map(|l| l.auxiliary.last().unwrap().comparison_defect).collect(),
        agreement_trend: agreement_by_level.iter().map(|d| trend(d, 0.0)).collect(),
        agreement_by_level,
        passed: checks.iter().all(|c| c.status != Status::Fail),
        checks,
    };
    Ok(RunOutcome { levels, summary })
}

fn annotate(e: Error, level: usize) -> Error {
    match e {
        Error::NonConvergence { .. } => e,
        other => Error::Inconsistent(format!("refinement level {level}: {other}")),
    }
}

/// Sweep axis of [`sweep_summary`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Refinement,
    M,
}

/// Axis-specific aggregate: per-level values and trend verdicts.
pub fn sweep_summary(outcome: &RunOutcome, axis: Axis) -> Value {
    let s = &outcome.summary;
    match axis {
        Axis::Refinement => serde_json::json!({
            "axis": "refinement",
            "h": s.h,
            "ratio_gradient": { "values": s.ratio_gradient, "trend": s.ratio_gradient_trend },
            "ratio_dt": { "values": s.ratio_dt, "trend": s.ratio_dt_trend },
            "l2_error": { "values": s.l2_error, "orders": s.empirical_order,
                          "trend": trend(&s.l2_error, 0.0) },
            "temperature_modulus": s.continuity.as_ref().map(|c| serde_json::json!({
                "values": c.temperature_modulus, "trend": trend(&c.temperature_modulus, 0.0) })),
            "enthalpy_jump": s.continuity.as_ref().map(|c| c.enthalpy_jump.clone()),
            "comparison_defect": { "values": s.defect_by_level,
                "trend": trend(&s.defect_by_level.iter().map(|d| d.abs()).collect::<Vec<_>>(), 0.0) },
        }),
        Axis::M => serde_json::json!({
            "axis": "m",
            "m": s.m_schedule,
            "levels": outcome.levels.iter().map(|l| serde_json::json!({
                "h": l.report.h,
                "temperature_agreement": { "values": l.report.agreement.distances,
                                           "trend": trend(&l.report.agreement.distances, 0.0) },
                "comparison_defect": l.report.auxiliary.iter().map(|a| a.comparison_defect).collect::<Vec<_>>(),
                "l2_ratio": l.report.auxiliary.iter().map(|a| a.l2_bound.ratio).collect::<Vec<_>>(),
                "direct_stage_gaps": l.report.direct.stages.iter().map(|st| st.gap_to_previous).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        }),
    }
}

/// Rounds every float to 10 significant digits so reports are
/// byte-identical across runs and execution modes.
pub fn canonical_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            let r: f64 = format!("{x:.9e}").parse().unwrap();
            serde_json::Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonical_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canonical_json(v))).collect()),
        other => other,
    }
}

pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&canonical_json(serde_json::to_value(value)?))?)
}

/// Writes `<out>/<scenario>/<level>/{fields.csv, temperature.csv,
/// reports.json}` and `<out>/summary.json`.
pub fn write_outputs(outcome: &RunOutcome, out: &Path, axis: Option<Axis>) -> Result<()> {
    for l in &outcome.levels {
        let dir = out.join(&l.report.scenario).join(l.report.level.to_string());
        fs::create_dir_all(&dir)?;
        write_csv(&l.enthalpy, fs::File::create(dir.join("fields.csv"))?)?;
        write_csv(&l.temperature, fs::File::create(dir.join("temperature.csv"))?)?;
        fs::write(dir.join("reports.json"), to_canonical_string(&l.report)?)?;
    }
    let mut summary = serde_json::to_value(&outcome.summary)?;
    if let (Some(axis), Value::Object(map)) = (axis, &mut summary) {
        map.insert("sweep".into(), sweep_summary(outcome, axis));
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&canonical_json(summary))?)?;
    Ok(())
}

/// The pass/fail table printed by the CLI.
pub fn table(summary: &Summary) -> String {
    let mut s = format!("scenario {} ({} levels)\n", summary.scenario, summary.h.len());
    for c in &summary.checks {
        s.push_str(&format!("{c}\n"));
    }
    s.push_str(if summary.passed { "result: PASS\n" } else { "result: FAIL\n" });
    s
}

/// Largest `|W| / h` of the |θ| weak form on the liquid-heat scenario over
/// `levels` refinements; `C_TOL` sits well above it.
pub fn calibrate_c_tol(levels: usize, trials: usize, seed: u64, exec: Exec) -> Result<f64> {
    let sc = scenarios::scenario_liquid_heat();
    let cfg = SolverConfig::default();
    let mut worst: f64 = 0.0;
    for k in 0..levels {
        let g = sc.grid(k)?;
        let t = crate::solver::solve_exact(&Domain::full(&g)?, &sc.graph(), &sc.initial_slice(&g), &sc.temperature_data(&g)?, &cfg)?;
        let abs_theta = t.temperature.map(Role::Auxiliary, f64::abs);
        let vals = exec.try_map(trials, |i| {
            let eta = crate::diagnostics::random_test_function(&g, seed, i as u64)?;
            Ok::<_, Error>(crate::diagnostics::weak_form(&abs_theta, &eta).abs())
        })?;
        worst = worst.max(vals.into_iter().fold(0.0, f64::max) / g.h);
    }
    Ok(worst)
}
