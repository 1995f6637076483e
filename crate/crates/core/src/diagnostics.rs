//! Checks run on computed fields: energy ratios, the L² temperature bound
//! with its torsion potential, the subcaloric weak-form test, the comparison
//! defect, temperature agreement across m, the continuity modulus and the
//! local bound ratio.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{Constitutive, CutoffVariant, EnthalpyGraph};
use crate::grid::{
    ball_nodes, dirichlet_form, inner, squared_transition, Cylinder, Grid, NestedCylinders, Point, Role,
    SpaceTimeField,
};

/// `a / b` with the convention `0 / 0 = 0`.
pub fn safe_ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        0.0
    } else {
        a / b
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `∬_ω |∇θ|²`.
    pub gradient_sq: f64,
    /// `∬_ω |∂_t θ|²`.
    pub dt_sq: f64,
    /// `∬_ω̃ u²`.
    pub enthalpy_sq: f64,
    pub ratio_gradient: f64,
    pub ratio_dt: f64,
    /// `∬_{ω₃} θ²`, once ω₃ is selected.
    pub temperature_sq_omega3: Option<f64>,
    pub ratio_l2: Option<f64>,
}

/// Energy integrals of a direct solution on the nested cylinders.
pub fn energy_report(
    u: &SpaceTimeField,
    theta: &SpaceTimeField,
    graph: &EnthalpyGraph,
    nested: &NestedCylinders,
) -> Result<EnergyReport> {
    u.check_same_grid(theta)?;
    let mismatch = u
        .values()
        .iter()
        .zip(theta.values())
        .map(|(a, b)| (graph.alpha(*a) - b).abs())
        .fold(0.0, f64::max);
    if mismatch > 1e-12 {
        return Err(Error::Inconsistent(format!("θ differs from α(u) by {mismatch:e}")));
    }
    let gradient_sq = theta.integrate_gradient_sq(&nested.omega1)?;
    let dt_sq = theta.discrete_dt().integrate_with(&nested.omega1, |x| x * x)?;
    let enthalpy_sq = u.integrate_with(&nested.omega5, |x| x * x)?;
    let t3 = match nested.omega3() {
        Ok(w3) => Some(theta.integrate_with(&w3, |x| x * x)?),
        Err(_) => None,
    };
    Ok(EnergyReport {
        gradient_sq,
        dt_sq,
        enthalpy_sq,
        ratio_gradient: safe_ratio(gradient_sq, enthalpy_sq),
        ratio_dt: safe_ratio(dt_sq, enthalpy_sq),
        temperature_sq_omega3: t3,
        ratio_l2: t3.map(|t| safe_ratio(t, enthalpy_sq)),
    })
}

/// `φ(x) = (|x − x₀|² − r₁²) / (2n)` on every node.
pub fn torsion_potential(grid: &Grid, center: Point, r1: f64) -> Vec<f64> {
    (0..grid.n_space())
        .map(|i| {
            let d = grid.distance(grid.point(i), center);
            (d * d - r1 * r1) / (2.0 * grid.dim as f64)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorsionCheck {
    /// `max |Δ_h φ − 1|` over interior nodes of the ball.
    pub laplacian_error: f64,
    /// `max φ` over the closed ball.
    pub max_value: f64,
}

pub fn torsion_check(grid: &Grid, center: Point, r1: f64) -> Result<TorsionCheck> {
    let ball = crate::grid::Ball::new(center, r1)?;
    let domain = crate::solver::Domain::ball(grid, &ball)?;
    let phi = torsion_potential(grid, center, r1);
    let lap = crate::grid::laplacian(grid, &phi);
    let laplacian_error = domain
        .interior_nodes()
        .iter()
        .map(|&i| (lap[i] - 1.0).abs())
        .fold(0.0, f64::max);
    let max_value = ball_nodes(grid, &ball).iter().map(|&i| phi[i]).fold(f64::NEG_INFINITY, f64::max);
    Ok(TorsionCheck {
        laplacian_error,
        max_value,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L2BoundReport {
    /// `∬_{ω₃} α_m(v_m)²`.
    pub temperature_sq: f64,
    /// `∬_{ω₅} u²`.
    pub enthalpy_sq: f64,
    pub ratio: f64,
    pub torsion: TorsionCheck,
}

/// `∬_{ω₃} α_m(v_m)² / ∬_{ω₅} u²`, with the torsion potential of `B(x₀, r₁)`.
pub fn l2_temperature_bound(
    theta_m: &SpaceTimeField,
    u: &SpaceTimeField,
    nested: &NestedCylinders,
) -> Result<L2BoundReport> {
    let w3 = nested.omega3()?;
    let temperature_sq = theta_m.integrate_with(&w3, |x| x * x)?;
    let enthalpy_sq = u.integrate_with(&nested.omega5, |x| x * x)?;
    Ok(L2BoundReport {
        temperature_sq,
        enthalpy_sq,
        ratio: safe_ratio(temperature_sq, enthalpy_sq),
        torsion: torsion_check(theta_m.grid(), w3.center, w3.radius)?,
    })
}

/// The part of θ fed to the weak form: `|θ|`, `θ⁺ = max(θ, 0)` or
/// `θ⁻ = min(θ, 0)`; the first two are subcaloric, the last supercaloric.
pub fn caloric_part(variant: CutoffVariant, theta: f64) -> f64 {
    match variant {
        CutoffVariant::TwoSided => theta.abs(),
        CutoffVariant::Plus => theta.max(0.0),
        CutoffVariant::Minus => theta.min(0.0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubcaloricReport {
    pub variant: CutoffVariant,
    /// Minimum weak-form value for the subcaloric variants, maximum for the
    /// supercaloric one.
    pub worst: f64,
    pub tested: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// A nonnegative space-time test function `ψ_t(t) · Π_axes ψ(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub space: Vec<f64>,
    /// One factor per time level.
    pub time: Vec<f64>,
}

fn transition_axis(rng: &mut ChaCha8Rng, lo: f64, hi: f64, step: f64) -> Option<(f64, f64, f64)> {
    // support stays at least one step away from both ends
    let room = (hi - lo) / 2.0 - step;
    let min_outer = 3.0 * step;
    let max_outer = room;
    if max_outer < min_outer {
        return None;
    }
    let outer = rng.gen_range(min_outer..=max_outer);
    let center = rng.gen_range(lo + outer + step..=hi - outer - step);
    let inner = outer * rng.gen_range(0.2..0.8);
    Some((center, inner, outer))
}

/// Random parameters `(center, inner, outer)` per space axis and for time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestParameters {
    pub axes: Vec<(f64, f64, f64)>,
    pub time: (f64, f64, f64),
}

/// Draws the parameters of test function `trial` from the stream seeded by
/// `seed`.
///
/// Supports stay one cell/level inside the grid, so η vanishes on the grid
/// boundary and on the first and last level.
pub fn draw_test_parameters(grid: &Grid, seed: u64, trial: u64) -> Result<TestParameters> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let short = || Error::InsufficientMargin(format!("grid {}x{}x{} too small for test functions", grid.nx, grid.ny, grid.nt));
    let mut axes = Vec::with_capacity(grid.dim);
    for (o, n) in [(grid.origin[0], grid.nx), (grid.origin[1], grid.ny)].into_iter().take(grid.dim) {
        axes.push(transition_axis(&mut rng, o, o + (n - 1) as f64 * grid.h, grid.h).ok_or_else(short)?);
    }
    let time = transition_axis(&mut rng, grid.t_start, grid.t_end(), grid.dt).ok_or_else(short)?;
    Ok(TestParameters { axes, time })
}

/// Samples the test function with parameters `p` on `grid`.
pub fn test_function_on(grid: &Grid, p: &TestParameters) -> TestFunction {
    let profile = |x: f64, (c, i, o): (f64, f64, f64)| squared_transition((x - c).abs(), i, o);
    let space = (0..grid.n_space())
        .map(|idx| {
            let pt = grid.point(idx);
            p.axes.iter().enumerate().map(|(d, &a)| profile(pt[d], a)).product()
        })
        .collect();
    let time = (0..grid.nt).map(|k| profile(grid.time(k), p.time)).collect();
    TestFunction { space, time }
}

pub fn random_test_function(grid: &Grid, seed: u64, trial: u64) -> Result<TestFunction> {
    Ok(test_function_on(grid, &draw_test_parameters(grid, seed, trial)?))
}

/// `Σ_k [−D(g^k, η^k) + ⟨g^k, (η^{k+1} − η^k)/dt⟩] · dt` with the edge
/// Dirichlet form `D`.
pub fn weak_form(g: &SpaceTimeField, eta: &TestFunction) -> f64 {
    let grid = g.grid();
    let mut acc = 0.0;
    for k in 0..grid.nt - 1 {
        let gk = g.slice(k);
        let d = dirichlet_form(grid, gk, &eta.space);
        let m = inner(grid, gk, &eta.space);
        acc += -eta.time[k] * d * grid.dt + m * (eta.time[k + 1] - eta.time[k]);
    }
    acc
}

/// Weak-form sign test for the `variant` part of θ over `trials` random
/// test functions; passes iff every value is `>= −C_tol·h` (subcaloric
/// variants) or `<= C_tol·h` (supercaloric variant).
pub fn subcaloric_test(
    theta: &SpaceTimeField,
    variant: CutoffVariant,
    trials: usize,
    seed: u64,
    c_tol: f64,
    exec: Exec,
) -> Result<SubcaloricReport> {
    if trials < 1 {
        return Err(Error::invalid("at least one trial"));
    }
    let g = theta.map(Role::Auxiliary, |t| caloric_part(variant, t));
    let values = exec.try_map(trials, |i| {
        let eta = random_test_function(theta.grid(), seed, i as u64)?;
        Ok::<_, Error>(weak_form(&g, &eta))
    })?;
    let tolerance = c_tol * theta.grid().h;
    let (worst, passed) = if variant == CutoffVariant::Minus {
        let w = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (w, w <= tolerance)
    } else {
        let w = values.iter().cloned().fold(f64::INFINITY, f64::min);
        (w, w >= -tolerance)
    };
    Ok(SubcaloricReport {
        variant,
        worst,
        tested: trials,
        tolerance,
        passed,
    })
}

/// `∬_{ω₃} (v_m − u_m)(θ_m − w_m)`.
pub fn comparison_defect(
    v_m: &SpaceTimeField,
    u_m: &SpaceTimeField,
    theta_m: &SpaceTimeField,
    w_m: &SpaceTimeField,
    omega3: &Cylinder,
) -> Result<f64> {
    let d = v_m.zip_map(u_m, Role::Auxiliary, |a, b| a - b)?;
    let e = theta_m.zip_map(w_m, Role::Auxiliary, |a, b| a - b)?;
    d.zip_map(&e, Role::Auxiliary, |a, b| a * b)?.node_sum_with(omega3, |x| x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub m: Vec<u32>,
    /// `‖θ_direct − α_m(v_m)‖_{L²(ω₃)}` per m.
    pub distances: Vec<f64>,
    pub strictly_decreasing: bool,
}

/// L²(ω₃) distances between the direct temperature and each auxiliary one.
pub fn temperature_agreement(
    theta_direct: &SpaceTimeField,
    aux: &[(u32, &SpaceTimeField)],
    omega3: &Cylinder,
) -> Result<AgreementReport> {
    if aux.len() < 2 {
        return Err(Error::invalid("temperature agreement needs at least two m values"));
    }
    let mut distances = Vec::with_capacity(aux.len());
    for (_, tm) in aux {
        let diff = theta_direct.zip_map(tm, Role::Auxiliary, |a, b| a - b)?;
        distances.push(diff.integrate_with(omega3, |x| x * x)?.sqrt());
    }
    Ok(AgreementReport {
        m: aux.iter().map(|a| a.0).collect(),
        strictly_decreasing: distances.windows(2).all(|w| w[1] < w[0]),
        distances,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub h: Vec<f64>,
    /// Max adjacent-node |Δθ| over the computed levels.
    pub temperature_modulus: Vec<f64>,
    /// Max adjacent-node |Δu| over the computed levels.
    pub enthalpy_jump: Vec<f64>,
    /// Midpoint of the edge carrying the largest |Δu| at the final level.
    pub front_location: Vec<Point>,
}

fn max_adjacent(grid: &Grid, f: &[f64]) -> (f64, Point) {
    let mut best = (0.0, grid.point(0));
    for idx in 0..grid.n_space() {
        for n in grid.neighbors(idx).filter(|&n| n > idx) {
            let d = (f[n] - f[idx]).abs();
            if d > best.0 {
                let (p, q) = (grid.point(idx), grid.point(n));
                best = (d, [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]);
            }
        }
    }
    best
}

/// Adjacent-cell moduli across refinement levels, `(u, θ)` per level.
///
/// The initial level is skipped: it holds the data, not computed values.
pub fn continuity_modulus(levels: &[(&SpaceTimeField, &SpaceTimeField)]) -> Result<ContinuityReport> {
    if levels.len() < 2 {
        return Err(Error::invalid("continuity modulus needs at least two levels"));
    }
    let first = levels[0].0.grid();
    let mut report = ContinuityReport {
        h: vec![],
        temperature_modulus: vec![],
        enthalpy_jump: vec![],
        front_location: vec![],
    };
    for (u, theta) in levels {
        u.check_same_grid(theta)?;
        let g = u.grid();
        let span_lo = (g.origin[0] - first.origin[0]).abs() > 1e-12;
        let span_hi = (g.t_end() - first.t_end()).abs() > 1e-9 * first.dt;
        if g.dim != first.dim || span_lo || span_hi {
            return Err(Error::Inconsistent("levels describe different problems".into()));
        }
        let (mut tm, mut um) = (0.0f64, 0.0f64);
        for k in 1..g.nt {
            tm = tm.max(max_adjacent(g, theta.slice(k)).0);
            um = um.max(max_adjacent(g, u.slice(k)).0);
        }
        report.h.push(g.h);
        report.temperature_modulus.push(tm);
        report.enthalpy_jump.push(um);
        report.front_location.push(max_adjacent(g, u.slice(g.nt - 1)).1);
    }
    Ok(report)
}

/// Least-squares constant `C` of `y ≈ C·h` through the origin.
pub fn fit_through_origin(h: &[f64], y: &[f64]) -> f64 {
    let num: f64 = h.iter().zip(y).map(|(a, b)| a * b).sum();
    let den: f64 = h.iter().map(|a| a * a).sum();
    safe_ratio(num, den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalBoundReport {
    pub sup_inner: f64,
    pub mean_outer: f64,
    pub ratio: f64,
}

/// `sup_{inner} |θ| / mean_{outer} |θ|`; `0/0` counts as 0.
pub fn local_bound_check(theta: &SpaceTimeField, inner_cyl: &Cylinder, outer: &Cylinder) -> Result<LocalBoundReport> {
    if !outer.strictly_contains(inner_cyl) || inner_cyl.t_hi > outer.t_hi {
        return Err(Error::NotNested("inner cylinder must sit strictly inside the outer one".into()));
    }
    let g = theta.grid();
    let nodes = ball_nodes(g, &inner_cyl.ball());
    let tol = 1e-9 * g.dt;
    let mut sup = 0.0f64;
    let mut any = false;
    for k in 0..g.nt {
        let t = g.time(k);
        if t >= inner_cyl.t_lo - tol && t <= inner_cyl.t_hi + tol {
            for &i in &nodes {
                sup = sup.max(theta.get(i, k).abs());
                any = true;
            }
        }
    }
    if !any {
        return Err(Error::EmptyRegion(format!("{inner_cyl:?}")));
    }
    let total = theta.integrate_with(outer, f64::abs)?;
    let one = SpaceTimeField::from_fn(g.clone(), Role::Auxiliary, |_, _| 1.0)?;
    let volume = one.integrate(outer)?;
    let mean = total / volume;
    if mean == 0.0 && sup > 0.0 {
        return Err(Error::Inconsistent("zero outer mean with nonzero inner supremum".into()));
    }
    Ok(LocalBoundReport {
        sup_inner: sup,
        mean_outer: mean,
        ratio: safe_ratio(sup, mean),
    })
}

/// Discrete temperature field of a regularized or exact enthalpy field.
pub fn temperature_of<C: Constitutive>(u: &SpaceTimeField, graph: &C) -> SpaceTimeField {
    u.map(Role::Temperature, |x| graph.temperature(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_nested;
    use crate::solver::{solve_exact, Domain, SolverConfig};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn nested() -> NestedCylinders {
        build_nested(
            Cylinder::new([0.5, 0.0], 0.25, 0.25, 0.75).unwrap(),
            Cylinder::new([0.5, 0.0], 0.45, 0.05, 0.95).unwrap(),
        )
        .unwrap()
    }

    fn heat(cells: usize, steps: usize) -> (SpaceTimeField, SpaceTimeField) {
        let g = Grid::interval(0.0, 1.0, cells, 1.0, steps).unwrap();
        let data = SpaceTimeField::from_fn(g.clone(), Role::Temperature, |_, _| 1.0).unwrap();
        let init: Vec<f64> = (0..g.n_space()).map(|i| 2.0 + (std::f64::consts::PI * g.point(i)[0]).sin()).collect();
        let t = solve_exact(&Domain::full(&g).unwrap(), &EnthalpyGraph::unit(), &init, &data, &SolverConfig::default()).unwrap();
        (t.enthalpy, t.temperature)
    }

    #[test]
    fn energy_of_stationary_mushy_field_is_zero() {
        let g = Grid::interval(0.0, 1.0, 40, 1.0, 40).unwrap();
        let u = SpaceTimeField::from_fn(g.clone(), Role::Enthalpy, |p, _| 0.4 + 0.5 * (6.0 * p[0]).sin()).unwrap();
        let theta = temperature_of(&u, &EnthalpyGraph::unit());
        let r = energy_report(&u, &theta, &EnthalpyGraph::unit(), &nested()).unwrap();
        assert_eq!((r.gradient_sq, r.dt_sq, r.ratio_gradient, r.ratio_dt), (0.0, 0.0, 0.0, 0.0));
        let bad = theta.map(Role::Temperature, |x| x + 1e-6);
        assert!(matches!(energy_report(&u, &bad, &EnthalpyGraph::unit(), &nested()), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn liquid_energy_ratios_are_scale_invariant() {
        // u -> λu keeps the liquid problem closed since θ = u - 1 is affine
        let g = Grid::interval(0.0, 1.0, 40, 1.0, 40).unwrap();
        let ratios = |lambda: f64| {
            let data = SpaceTimeField::from_fn(g.clone(), Role::Temperature, |_, _| 2.0 * lambda - 1.0).unwrap();
            let init: Vec<f64> = (0..g.n_space()).map(|i| lambda * (2.0 + (std::f64::consts::PI * g.point(i)[0]).sin())).collect();
            let t = solve_exact(&Domain::full(&g).unwrap(), &EnthalpyGraph::unit(), &init, &data, &SolverConfig::default()).unwrap();
            let r = energy_report(&t.enthalpy, &t.temperature, &EnthalpyGraph::unit(), &nested()).unwrap();
            (r.ratio_gradient, r.ratio_dt)
        };
        let (a, b) = (ratios(1.0), ratios(2.0));
        assert!((a.0 - b.0).abs() <= 1e-6 * a.0 && (a.1 - b.1).abs() <= 1e-6 * a.1);
    }

    #[test]
    fn torsion_identities() {
        let g = Grid::new_1d(-1.0, 0.05, 41, 0.0, 0.1, 2).unwrap();
        let t = torsion_check(&g, [0.0, 0.0], 1.0).unwrap();
        assert!(t.laplacian_error < 1e-10 && t.max_value <= 1e-12);
        let phi = torsion_potential(&g, [0.0, 0.0], 1.0);
        assert_abs_diff_eq!(phi[20], -0.5, epsilon = 1e-15);
        let g2 = Grid::new_2d([0.0, 0.0], 1.0 / 32.0, 33, 33, 0.0, 0.1, 2).unwrap();
        let t2 = torsion_check(&g2, [0.5, 0.5], 0.4).unwrap();
        assert!(t2.laplacian_error < 1e-8 && t2.max_value <= 1e-12);
    }

    #[test]
    fn weak_form_vanishes_for_zero_and_caloric_fields() {
        let g = Grid::interval(0.0, 1.0, 40, 0.5, 40).unwrap();
        let zero = SpaceTimeField::zeros(g.clone(), Role::Temperature);
        let r = subcaloric_test(&zero, CutoffVariant::TwoSided, 20, 1, 1e-9, Exec::default()).unwrap();
        assert_eq!(r.worst, 0.0);
        let (_, theta) = heat(40, 40);
        for seed in 0..20 {
            let eta = random_test_function(theta.grid(), 7, seed).unwrap();
            assert!(weak_form(&theta, &eta).abs() < 1e-12);
        }
    }

    #[test]
    fn test_functions_vanish_on_the_margins() {
        let g = Grid::new_2d([0.0, 0.0], 0.1, 11, 11, 0.0, 0.1, 11).unwrap();
        for trial in 0..30 {
            let eta = random_test_function(&g, 3, trial).unwrap();
            assert!(eta.space.iter().chain(&eta.time).all(|&v| (0.0..=1.0).contains(&v)));
            assert_eq!(eta.time[0], 0.0);
            assert_eq!(eta.time[10], 0.0);
            for idx in 0..g.n_space() {
                if g.is_boundary(idx) {
                    assert_eq!(eta.space[idx], 0.0);
                }
            }
            assert!(eta.space.iter().any(|&v| v > 0.0));
        }
        assert_eq!(random_test_function(&g, 3, 4).unwrap(), random_test_function(&g, 3, 4).unwrap());
        let tiny = Grid::interval(0.0, 1.0, 4, 1.0, 4).unwrap();
        assert!(matches!(random_test_function(&tiny, 0, 0), Err(Error::InsufficientMargin(_))));
    }

    #[test]
    fn comparison_defect_trivial_cases() {
        let g = Grid::interval(0.0, 1.0, 20, 1.0, 20).unwrap();
        let w3 = Cylinder::new([0.5, 0.0], 0.3, 0.3, 0.7).unwrap();
        let a = SpaceTimeField::from_fn(g.clone(), Role::Enthalpy, |p, t| p[0] * t).unwrap();
        let b = SpaceTimeField::from_fn(g.clone(), Role::Enthalpy, |p, t| p[0] - t).unwrap();
        assert_eq!(comparison_defect(&a, &a, &b, &a, &w3).unwrap(), 0.0);
        assert_eq!(comparison_defect(&a, &b, &b, &b, &w3).unwrap(), 0.0);
    }

    #[test]
    fn local_bound_examples() {
        let g = Grid::interval(0.0, 1.0, 20, 1.0, 20).unwrap();
        let outer = Cylinder::new([0.5, 0.0], 0.4, 0.1, 0.9).unwrap();
        let inner_c = Cylinder::new([0.5, 0.0], 0.2, 0.3, 0.7).unwrap();
        let c = SpaceTimeField::from_fn(g.clone(), Role::Temperature, |_, _| -3.0).unwrap();
        assert_abs_diff_eq!(local_bound_check(&c, &inner_c, &outer).unwrap().ratio, 1.0, epsilon = 1e-12);
        let z = SpaceTimeField::zeros(g, Role::Temperature);
        assert_eq!(local_bound_check(&z, &inner_c, &outer).unwrap().ratio, 0.0);
        assert!(local_bound_check(&z, &outer, &inner_c).is_err());
    }

    #[test]
    fn fit_through_origin_exact_line() {
        assert_abs_diff_eq!(fit_through_origin(&[0.1, 0.05], &[0.3, 0.15]), 3.0, epsilon = 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        // |θ| of any exact-graph solve passes the weak-form sign test.
        #[test]
        fn abs_temperature_is_subcaloric(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Grid::interval(0.0, 1.0, 24, 0.2, 24).unwrap();
            let init: Vec<f64> = (0..g.n_space()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let bl = rng.gen_range(-1.0..1.0);
            let br = rng.gen_range(-1.0..1.0);
            let data = SpaceTimeField::from_fn(g.clone(), Role::Temperature, |p, _| if p[0] < 0.5 { bl } else { br }).unwrap();
            let t = solve_exact(&Domain::full(&g).unwrap(), &EnthalpyGraph::unit(), &init, &data, &SolverConfig::default()).unwrap();
            for v in [CutoffVariant::TwoSided, CutoffVariant::Plus, CutoffVariant::Minus] {
                let r = subcaloric_test(&t.temperature, v, 10, seed, 1e-6, Exec::Sequential).unwrap();
                prop_assert!(r.passed, "{:?}", r);
            }
        }
    }
}
