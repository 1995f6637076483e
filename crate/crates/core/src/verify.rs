//! Property suites for the constitutive graphs and the discrete proof
//! devices, run by the `verify` subcommand and the acceptance target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::torsion_check;
use crate::error::Result;
use crate::exec::Exec;
use crate::graph::{EnthalpyGraph, RegularizedGraph};
use crate::grid::{dirichlet_form, inner, laplacian, Ball, Cylinder, Grid, Role, SpaceTimeField};
use crate::mollify::{maximal_function, mollify, select_radius, select_time_slice, MaxWindows, Mollifier};
use crate::runner::{truncate, Check, DOMINATION_ROUNDOFF};

/// Largest m of the regularization sweep.
pub const M_MAX: u32 = 1024;
/// Samples per m.
pub const SAMPLES: usize = 10_000;
/// Half-width of the sampled enthalpy interval.
pub const SAMPLE_RANGE: f64 = 10.0;
/// Round-trip bound of `α_m⁻¹ ∘ α_m`.
pub const ROUND_TRIP_TOL: f64 = 1e-10;
/// Below this `|α_m(s)|` the power law underflows and `s` is unrecoverable.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;
/// Relative bound of the summation-by-parts identity.
pub const SBP_TOL: f64 = 1e-10;
/// Bound on `|Δ_h φ − 1|` of the torsion potential.
pub const TORSION_TOL: f64 = 1e-10;
/// Random fields per device suite.
pub const DEVICE_TRIALS: usize = 20;

fn samples(m: u32, seed: u64) -> Vec<f64> {
    // half uniform on the range, half inside the band where α_m differs
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(m));
    let b = 1.0 + 1.0 / m as f64;
    (0..SAMPLES)
        .map(|i| {
            if i % 2 == 0 {
                rng.gen_range(-SAMPLE_RANGE..=SAMPLE_RANGE)
            } else {
                rng.gen_range(-b..=b)
            }
        })
        .collect()
}

/// `‖α_m − α‖∞ ≤ 1/m`, `0 ≤ A_m(s) ≤ s²` and the inverse round trip, for
/// every m in `1..=M_MAX`.
pub fn regularization_suite(seed: u64, exec: Exec) -> Vec<Check> {
    let graph = EnthalpyGraph::unit();
    let rows = exec.map(M_MAX as usize, |i| {
        let m = i as u32 + 1;
        let r = RegularizedGraph::new(graph, m).expect("m >= 1");
        let mut dev: f64 = 0.0;
        let mut anti_ok = true;
        let mut trip: f64 = 0.0;
        for &s in &samples(m, seed) {
            let y = r.alpha_m(s);
            dev = dev.max((y - graph.alpha(s)).abs() * m as f64);
            let a = r.antiderivative(s);
            anti_ok &= (0.0..=s * s).contains(&a);
            if y.abs() > UNDERFLOW_FLOOR {
                trip = trip.max((r.alpha_m_inverse(y) - s).abs());
            }
        }
        (dev, anti_ok, trip)
    });
    let worst_dev = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let anti = rows.iter().all(|r| r.1);
    let worst_trip = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    vec![
        Check::new(
            "regularization-sup-bound",
            worst_dev <= 1.0,
            format!("max m·|α_m − α| = {worst_dev:.6} over m = 1..{M_MAX}, {SAMPLES} samples each"),
        ),
        Check::new("antiderivative-bounds", anti, format!("0 <= A_m(s) <= s² on [-{SAMPLE_RANGE}, {SAMPLE_RANGE}]")),
        Check::new(
            "inverse-round-trip",
            worst_trip <= ROUND_TRIP_TOL,
            format!("max |α_m⁻¹(α_m(s)) − s| = {worst_trip:.3e} where |α_m(s)| > {UNDERFLOW_FLOOR:e}"),
        ),
    ]
}

fn random_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

/// `D(f, g) = −⟨Δ_h f, g⟩` for `g` vanishing on the boundary, in 1D and 2D.
pub fn sbp_suite(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grids = [Grid::interval(0.0, 1.0, 37, 1.0, 1)?, Grid::new_2d([0.0, 0.0], 0.05, 17, 13, 0.0, 1.0, 2)?];
    let mut worst: f64 = 0.0;
    for _ in 0..DEVICE_TRIALS {
        for g in &grids {
            let f = random_values(&mut rng, g.n_space());
            let mut w = random_values(&mut rng, g.n_space());
            (0..g.n_space()).filter(|&i| g.is_boundary(i)).for_each(|i| w[i] = 0.0);
            let lhs = dirichlet_form(g, &f, &w);
            let rhs = -inner(g, &laplacian(g, &f), &w);
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
        }
    }
    Ok(Check::new("summation-by-parts", worst <= SBP_TOL, format!("max relative mismatch {worst:.3e}")))
}

/// `Δ_h φ = 1` strictly inside the radius and `φ <= 0` on the ball.
pub fn torsion_suite() -> Result<Check> {
    let g1 = Grid::interval(0.0, 1.0, 128, 1.0, 1)?;
    let g2 = Grid::new_2d([0.0, 0.0], 1.0 / 48.0, 49, 49, 0.0, 1.0, 2)?;
    let mut lap: f64 = 0.0;
    let mut top = f64::NEG_INFINITY;
    for r1 in [0.1, 0.23, 0.37, 0.45] {
        for g in [&g1, &g2] {
            let c = torsion_check(g, [0.5, if g.dim == 2 { 0.5 } else { 0.0 }], r1)?;
            lap = lap.max(c.laplacian_error);
            top = top.max(c.max_value);
        }
    }
    Ok(Check::new(
        "torsion-potential",
        lap <= TORSION_TOL && top <= 0.0,
        format!("max |Δ_h φ − 1| = {lap:.3e}, max φ = {top:.3e}"),
    ))
}

fn device_grids() -> Result<[Grid; 2]> {
    Ok([Grid::interval(0.0, 1.0, 48, 1.0, 48)?, Grid::new_2d([0.0, 0.0], 0.05, 21, 21, 0.0, 0.05, 21)?])
}

fn random_field(g: &Grid, rng: &mut ChaCha8Rng) -> Result<SpaceTimeField> {
    SpaceTimeField::new(g.clone(), Role::Auxiliary, random_values(rng, g.len()))
}

/// `|(fχ) * φ_m| <= M(fχ)` pointwise on random fields.
pub fn domination_suite(seed: u64, exec: Exec) -> Result<Check> {
    let grids = device_grids()?;
    let region = Cylinder::new([0.5, 0.5], 0.3, 0.3, 0.7)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for trial in 0..DEVICE_TRIALS {
        let g = &grids[trial % 2];
        let region = if g.dim == 1 { Cylinder::new([0.5, 0.0], 0.3, 0.3, 0.7)? } else { region };
        let f = random_field(g, &mut rng)?;
        let m = rng.gen_range(2..6);
        let moll = Mollifier::scaled(m, 0.35, 0.35)?;
        let fm = mollify(&f, &region, &moll, exec)?;
        let mf = maximal_function(&truncate(&f, &region)?, MaxWindows::covering(g, &moll), exec);
        let excess = fm.values().iter().zip(mf.values()).map(|(a, b)| a.abs() - b).fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(excess / f.max_abs().max(1.0));
    }
    Ok(Check::new(
        "mollifier-domination",
        worst <= DOMINATION_ROUNDOFF,
        format!("max (|f_m| − M(fχ)) / max(1, max|f|) = {worst:.3e} over {DEVICE_TRIALS} random fields"),
    ))
}

/// Selected slices and radii never exceed their window means.
pub fn selection_suite(seed: u64) -> Result<Check> {
    let grids = device_grids()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = true;
    let mut tested = 0;
    for trial in 0..DEVICE_TRIALS {
        let g = &grids[trial % 2];
        let c = [0.5, if g.dim == 2 { 0.5 } else { 0.0 }];
        let f = random_field(g, &mut rng)?.map(Role::Auxiliary, |v| v * v);
        let lo = rng.gen_range(0.05..0.4);
        let window = (lo, lo + rng.gen_range(0.2..0.5));
        let s = select_time_slice(&f, window, &Ball::new(c, 0.3)?)?;
        let r = select_radius(&f, c, (0.1, rng.gen_range(0.25..0.45)), window)?;
        ok &= s.value <= s.window_mean && r.value <= r.mean;
        tested += 2;
    }
    Ok(Check::new("selection-below-mean", ok, format!("{tested} selections at or below their window means")))
}

/// Every suite in order.
pub fn verify_all(seed: u64, exec: Exec) -> Result<Vec<Check>> {
    let mut checks = regularization_suite(seed, exec);
    checks.push(sbp_suite(seed)?);
    checks.push(torsion_suite()?);
    checks.push(domination_suite(seed, exec)?);
    checks.push(selection_suite(seed)?);
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::Status;

    #[test]
    fn device_suites_pass() {
        for seed in [1, 2] {
            assert_eq!(sbp_suite(seed).unwrap().status, Status::Pass);
            assert_eq!(domination_suite(seed, Exec::default()).unwrap().status, Status::Pass);
            assert_eq!(selection_suite(seed).unwrap().status, Status::Pass);
        }
        assert_eq!(torsion_suite().unwrap().status, Status::Pass);
    }

    #[test]
    fn samples_cover_the_band() {
        let s = samples(1024, 3);
        assert_eq!(s.len(), SAMPLES);
        let b = 1.0 + 1.0 / 1024.0;
        assert!(s.iter().filter(|x| x.abs() <= b && x.abs() >= 1.0).count() > 2);
        assert!(s.iter().all(|x| x.abs() <= SAMPLE_RANGE));
    }
}
