//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Every tolerance is pinned below or in
//! `stefan_core::runner` / `stefan_core::verify`.

use std::process::ExitCode;

use stefan_core::runner::{self, relative_spread, run, RunConfig, RunOutcome, Status};
use stefan_core::verify;
use stefan_core::Exec;

const SEED: u64 = 2024;
const LEVELS: usize = 3;
const TRIALS: usize = 100;
/// Roundoff seen on liquid heat must sit this far below the frozen `C_tol`.
const C_TOL_SAFETY: f64 = 100.0;

struct Outcomes {
    mushy: RunOutcome,
    mushy_step: RunOutcome,
    heat: RunOutcome,
    wave: RunOutcome,
}

impl Outcomes {
    fn all(&self) -> [&RunOutcome; 4] {
        [&self.mushy, &self.mushy_step, &self.heat, &self.wave]
    }
}

fn solve(name: &str) -> RunOutcome {
    let cfg = RunConfig {
        scenario: name.into(),
        levels: LEVELS,
        seed: SEED,
        ..RunConfig::default()
    };
    assert_eq!(cfg.subcaloric.trials, TRIALS);
    run(&cfg, Exec::default()).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn check(o: &RunOutcome, name: &str) -> bool {
    o.summary
        .checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("{}: no check {name}", o.summary.scenario))
        .status
        == Status::Pass
}

fn detail(o: &RunOutcome, name: &str) -> String {
    o.summary.checks.iter().find(|c| c.name == name).map(|c| c.detail.clone()).unwrap_or_default()
}

fn report(n: usize, ok: bool, what: &str, detail: String) -> bool {
    println!("criterion {n}: {}  {what}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn criterion_1(o: &Outcomes) -> bool {
    let ok = [&o.mushy, &o.mushy_step].iter().all(|r| check(r, "mushy-stationarity"));
    let dev = [&o.mushy, &o.mushy_step]
        .iter()
        .flat_map(|r| r.levels.iter().map(|l| l.report.direct.max_error))
        .fold(0.0, f64::max);
    let steps = o.mushy.levels[0].report.steps;
    report(
        1,
        ok && steps >= 100,
        "mushy stationarity",
        format!("max deviation {dev:.3e} <= {:.0e} over >= {steps} steps, smooth and step data", runner::STATIONARY_TOL),
    )
}

fn criterion_2() -> bool {
    let checks = verify::regularization_suite(SEED, Exec::default());
    let ok = checks.iter().all(|c| c.status == Status::Pass);
    let d: Vec<String> = checks.iter().map(|c| c.detail.clone()).collect();
    report(2, ok, "regularized graph", d.join("; "))
}

fn criterion_3(o: &Outcomes) -> bool {
    let ok = check(&o.wave, "continuity-modulus");
    report(
        3,
        ok,
        "continuity modulus on the wave",
        format!(
            "{} (each within {:.0}% of C·h, jump in {:?})",
            detail(&o.wave, "continuity-modulus"),
            100.0 * runner::MODULUS_FIT_SLACK,
            runner::JUMP_BAND
        ),
    )
}

fn criterion_4(o: &Outcomes) -> bool {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in [&o.heat, &o.wave] {
        let (g, d) = (relative_spread(&r.summary.ratio_gradient), relative_spread(&r.summary.ratio_dt));
        ok &= r.summary.ratio_gradient.len() == LEVELS && g < runner::ENERGY_SPREAD && d < runner::ENERGY_SPREAD;
        parts.push(format!("{} spread {g:.3}/{d:.3}", r.summary.scenario));
    }
    for r in [&o.mushy, &o.mushy_step] {
        let zero = r.summary.ratio_gradient.iter().chain(&r.summary.ratio_dt).all(|&x| x == 0.0);
        ok &= zero;
        parts.push(format!("{} ratios exactly zero: {zero}", r.summary.scenario));
    }
    report(4, ok, "energy ratios", format!("{} (limit {})", parts.join(", "), runner::ENERGY_SPREAD))
}

fn criterion_5(o: &Outcomes) -> bool {
    let measured = runner::calibrate_c_tol(LEVELS, TRIALS, SEED, Exec::default()).expect("calibration");
    let mut ok = measured * C_TOL_SAFETY <= runner::C_TOL;
    let mut worst = Vec::new();
    for r in o.all() {
        for name in ["subcaloric-abs", "subcaloric-plus", "supercaloric-minus"] {
            ok &= check(r, name);
        }
        let tested = r.levels.iter().all(|l| l.report.subcaloric.iter().all(|s| s.tested == TRIALS));
        ok &= tested;
        let w = r
            .levels
            .iter()
            .flat_map(|l| l.report.subcaloric.iter().map(|s| if s.variant == stefan_core::CutoffVariant::Minus { -s.worst } else { s.worst }))
            .fold(f64::INFINITY, f64::min);
        worst.push(format!("{} {w:.2e}", r.summary.scenario));
    }
    report(
        5,
        ok,
        "subcaloric cutoffs",
        format!(
            "C_tol = {:.0e} (heat roundoff {measured:.2e}·h), {TRIALS} trials, signed worst: {}",
            runner::C_TOL,
            worst.join(", ")
        ),
    )
}

fn criterion_6(o: &Outcomes) -> bool {
    let sign = o.all().iter().all(|r| check(r, "comparison-sign"));
    let refine = check(&o.wave, "comparison-refinement");
    let entries: usize = o.all().iter().map(|r| r.levels.iter().map(|l| l.report.auxiliary.len()).sum::<usize>()).sum();
    report(
        6,
        sign && refine,
        "comparison defect",
        format!("sign holds on {entries} (scenario, level, m) entries; wave {}", detail(&o.wave, "comparison-refinement")),
    )
}

fn criterion_7(o: &Outcomes) -> bool {
    report(7, check(&o.wave, "temperature-agreement"), "temperature agreement", detail(&o.wave, "temperature-agreement"))
}

fn criterion_8() -> bool {
    let checks = [
        verify::sbp_suite(SEED),
        verify::torsion_suite(),
        verify::domination_suite(SEED, Exec::default()),
        verify::selection_suite(SEED),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for c in checks {
        let c = c.expect("device suite");
        ok &= c.status == Status::Pass;
        parts.push(format!("{}: {}", c.name, c.detail));
    }
    report(8, ok, "proof devices", parts.join("; "))
}

fn criterion_9(o: &Outcomes) -> bool {
    let ok = check(&o.heat, "liquid-order") && o.heat.summary.empirical_order.len() == LEVELS - 1;
    report(9, ok, "liquid-heat order", detail(&o.heat, "liquid-order"))
}

fn main() -> ExitCode {
    let outcomes = Outcomes {
        mushy: solve("mushy"),
        mushy_step: solve("mushy-step"),
        heat: solve("liquid-heat"),
        wave: solve("traveling-wave"),
    };
    let results = [
        criterion_1(&outcomes),
        criterion_2(),
        criterion_3(&outcomes),
        criterion_4(&outcomes),
        criterion_5(&outcomes),
        criterion_6(&outcomes),
        criterion_7(&outcomes),
        criterion_8(),
        criterion_9(&outcomes),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
