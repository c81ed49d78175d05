//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines are always shown; exits non-zero if any criterion fails.

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use micz::dynamics::{
    cone_solve, cotangent_lift, effective_potential, hamiltonian_adjoint, integrate_reduced, minimal_coupling,
    turning_points, ConeState, Scenario,
};
use micz::exec::Execution;
use micz::liealg::{expm, make_magnetic, SkewMatrix};
use micz::verify::{
    annulus_scenario, connection_consistency, kepler_conic_check, kepler_scenario, oracle_sweep,
    planarity_residual, random_scenarios, submersion_check, ComparisonReport, Fault,
};
use micz::Error;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 1729;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

fn scenarios() -> Vec<Scenario> {
    (3..=5).flat_map(|n| random_scenarios(SEED, n, 20)).collect()
}

fn oracle_equivalence(scenarios: &[Scenario]) -> Outcome {
    let start = Instant::now();
    let reports = match oracle_sweep(scenarios, 1.0, Fault::None, Execution::Parallel) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("solver error: {e}")),
    };
    let secs = start.elapsed().as_secs_f64();
    let sup = max_of(reports.iter().map(|r| r.sup_error));
    outcome(
        sup < 1e-6 && secs < 60.0,
        format!("{} scenarios, max sup|q_reduced - q_cone| = {sup:.3e} (< 1e-6), runtime {secs:.1} s (< 60 s)", reports.len()),
    )
}

fn literal_potential_breaks(scenarios: &[Scenario]) -> Outcome {
    let mut worst = usize::MAX;
    let mut parts = Vec::new();
    for n in 3..=5 {
        let group: Vec<Scenario> = scenarios.iter().filter(|s| s.n() == n).cloned().collect();
        let reports: Vec<ComparisonReport> = match oracle_sweep(&group, 1.0, Fault::LiteralPotential, Execution::Parallel) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("solver error: {e}")),
        };
        let broken = reports.iter().filter(|r| r.sup_error > 1e-2).count();
        worst = worst.min(broken);
        parts.push(format!("n={n}: {broken}/{}", reports.len()));
    }
    outcome(worst >= 18, format!("sup error > 1e-2 on {} (need >= 18/20 each)", parts.join(", ")))
}

fn conservation(scenarios: &[Scenario]) -> Outcome {
    let runs = Execution::Parallel.map(scenarios, |s| -> Result<(f64, f64), Error> {
        let mut s = s.clone();
        let period = s.radial_period().ok_or(Error::CollisionOrbit)?;
        s.t_span = (0.0, 10.0 * period);
        let traj = integrate_reduced(&s, &s.time_grid()?)?;
        Ok((traj.energy_drift(), traj.casimir_drift()))
    });
    let mut energy = 0.0f64;
    let mut casimir = 0.0f64;
    for r in runs {
        match r {
            Ok((e, c)) => {
                energy = energy.max(e);
                casimir = casimir.max(c);
            }
            Err(e) => return outcome(false, format!("solver error: {e}")),
        }
    }
    outcome(
        energy < 1e-8 && casimir < 1e-10,
        format!("over 10 radial periods: energy drift {energy:.3e} (< 1e-8), Casimir drift {casimir:.3e} (< 1e-10)"),
    )
}

fn kepler_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut colour, mut planar, mut conic) = (0.0f64, 0.0f64, 0.0f64);
    for n in 3..=5 {
        for _ in 0..3 {
            let s = kepler_scenario(&mut rng, n);
            let times = s.time_grid().expect("valid grid");
            for traj in [cone_solve(&s, &times), integrate_reduced(&s, &times)] {
                let traj = match traj {
                    Ok(t) => t,
                    Err(e) => return outcome(false, format!("solver error: {e}")),
                };
                colour = colour.max(max_of(traj.samples.iter().map(|x| x.phi.norm_sq().sqrt())));
                let first = &traj.samples[0];
                planar = planar.max(planarity_residual(&traj, &first.q, &first.v).unwrap_or(f64::INFINITY));
                conic = conic.max(kepler_conic_check(&traj).map(|f| f.residual).unwrap_or(f64::INFINITY));
            }
        }
    }
    outcome(
        colour < 1e-10 && planar < 1e-8 && conic < 1e-6,
        format!("|phi| {colour:.3e} (< 1e-10), planarity {planar:.3e} (< 1e-8), conic fit {conic:.3e} (< 1e-6)"),
    )
}

fn magnetic_planarity() -> Outcome {
    let mut worst = 0.0f64;
    for (k, mu) in [0.5, 0.8, 1.0, 1.3].into_iter().enumerate() {
        let xi = make_magnetic(mu, 4).expect("n = 4 is even");
        let j = xi.scale(1.0 / mu);
        let w = DVector::from_vec(vec![1.0, -2.0, 0.5, 1.5 + k as f64]).normalize();
        let r0 = 0.8 * mu * mu + 0.5;
        let mut s = Scenario::new(xi, w.clone(), r0, 0.1, (0.0, 1.0));
        let period = s.radial_period().expect("bounded");
        s.t_span = (0.0, period);
        let times = s.time_grid().expect("valid grid");
        let q0 = &w * r0;
        let jq0 = j.apply(&q0);
        for traj in [cone_solve(&s, &times), integrate_reduced(&s, &times)] {
            match traj {
                Ok(t) => worst = worst.max(planarity_residual(&t, &q0, &jq0).unwrap_or(f64::INFINITY)),
                Err(e) => return outcome(false, format!("solver error: {e}")),
            }
        }
    }
    outcome(worst < 1e-8, format!("distance from span{{q(0), Jq(0)}} {worst:.3e} (< 1e-8)"))
}

fn generic_annulus() -> Outcome {
    let tp = match turning_points(-3.0 / 8.0, 1.0) {
        Ok(tp) => tp,
        Err(e) => return outcome(false, format!("turning points failed: {e}")),
    };
    let roots_ok = (tp.r_min - 2.0 / 3.0).abs() < 1e-12
        && (tp.r_max - 2.0).abs() < 1e-12
        && [tp.r_min, tp.r_max].iter().all(|&r| (effective_potential(r, 1.0).unwrap() + 3.0 / 8.0).abs() < 1e-12);
    let s = annulus_scenario(20.0);
    let times = s.time_grid().expect("valid grid");
    let mut excursion = 0.0f64;
    for traj in [cone_solve(&s, &times), integrate_reduced(&s, &times)] {
        match traj {
            Ok(t) => {
                excursion = excursion.max(max_of(t.samples.iter().map(|x| (tp.r_min - x.r).max(x.r - tp.r_max))));
            }
            Err(e) => return outcome(false, format!("solver error: {e}")),
        }
    }
    outcome(
        roots_ok && excursion < 1e-6,
        format!(
            "turning_points(-3/8, 1) = ({:.12}, {:.12}); max excursion beyond annulus over 20 periods {excursion:.3e} (< 1e-6)",
            tp.r_min, tp.r_max
        ),
    )
}

fn geometry_suite() -> Outcome {
    let mut fails = Vec::new();
    let mut closure = 0.0f64;
    let mut speed = 0.0f64;
    for n in 3..=7 {
        match submersion_check(n, Fault::None) {
            Ok(r) => {
                closure = closure.max(r.closure_residual);
                speed = speed.max(r.speed_error);
                if !r.checks.iter().all(|c| c.passed) {
                    fails.push(format!("submersion n={n}"));
                }
            }
            Err(e) => fails.push(format!("submersion n={n}: {e}")),
        }
    }
    let (mut curv, mut horiz, mut cov) = (0.0f64, 0.0f64, 0.0f64);
    for (n, trials) in [(3, 100), (5, 50)] {
        match connection_consistency(n, trials, SEED, Fault::None) {
            Ok(r) => {
                curv = curv.max(r.curvature_residual);
                horiz = horiz.max(r.horizontal_residual);
                cov = cov.max(r.covariance_residual);
                if !r.checks.iter().all(|c| c.passed) {
                    fails.push(format!("connection n={n}"));
                }
            }
            Err(e) => fails.push(format!("connection n={n}: {e}")),
        }
    }
    let detected = |fault: Fault, idx: usize| {
        connection_consistency(4, 4, SEED, fault).map(|r| !r.checks[idx].passed).unwrap_or(false)
    };
    let faults = [
        ("curvature sign", detected(Fault::CurvatureSign, 0)),
        ("scaled connection", detected(Fault::ScaledConnection, 1)),
        ("skipped colour transform", detected(Fault::SkipColourTransform, 2)),
        ("scaled metric", submersion_check(3, Fault::ScaledMetric).map(|r| !r.checks[1].passed).unwrap_or(false)),
    ];
    for (name, caught) in faults {
        if !caught {
            fails.push(format!("fault not caught: {name}"));
        }
    }
    outcome(
        fails.is_empty(),
        format!(
            "closure {closure:.1e}, speed {speed:.1e}, curvature FD {curv:.1e}, horizontal {horiz:.1e}, covariance {cov:.1e}; 4/4 faults {}{}",
            if fails.is_empty() { "caught" } else { "checked" },
            if fails.is_empty() { String::new() } else { format!("; failures: {}", fails.join(", ")) }
        ),
    )
}

fn random_cone_state(rng: &mut ChaCha8Rng, n: usize) -> ConeState {
    let skew = |rng: &mut ChaCha8Rng| {
        let mut coeffs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                coeffs.push((i, j, rng.random_range(-1.0..=1.0)));
            }
        }
        SkewMatrix::from_coefficients(n, &coeffs).unwrap()
    };
    let g = expm(&skew(rng).scale(3.0));
    let xi = skew(rng).scale(rng.random_range(0.1..=2.0));
    ConeState { r: rng.random_range(0.3..=3.0), pr: rng.random_range(-1.0..=1.0), g, xi }
}

fn minimal_coupling_identity() -> Outcome {
    let mut worst = 0.0f64;
    for n in 3..=5 {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + n as u64);
        let atlas = micz::monopole::GaugeAtlas::standard(n, micz::monopole::DEFAULT_CAP_ANGLE);
        for _ in 0..1000 {
            let state = random_cone_state(&mut rng, n);
            let gauge = atlas.gauge(atlas.preferred_chart(&state.position()));
            let h1 = state.conserved().unwrap().energy;
            let h2 = cotangent_lift(gauge, &state)
                .and_then(|(x, p, phi)| {
                    let pi = minimal_coupling(gauge, &x, &p, &phi)?;
                    hamiltonian_adjoint(&x, &pi, &phi)
                })
                .unwrap_or(f64::INFINITY);
            worst = worst.max((h1 - h2).abs());
        }
    }
    outcome(worst < 1e-10, format!("3000 states, max |H2 - H1| = {worst:.3e} (< 1e-10)"))
}

fn free_fall() -> Outcome {
    let expected = PI / (2.0 * SQRT_2);
    let mut s = Scenario::new(SkewMatrix::zeros(3), DVector::from_vec(vec![0.0, 0.0, 1.0]), 1.0, 0.0, (0.0, 2.0));
    s.output_step = Some(0.01);
    let times = s.time_grid().unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, res) in [("cone", cone_solve(&s, &times)), ("reduced", integrate_reduced(&s, &times))] {
        match res {
            Err(Error::Collision { t }) => {
                ok &= (t - expected).abs() < 1e-6;
                parts.push(format!("{name} t* = {t:.9}"));
            }
            other => {
                ok = false;
                parts.push(format!("{name}: no collision ({:?})", other.err()));
            }
        }
    }
    outcome(ok, format!("{} vs pi/(2 sqrt 2) = {expected:.9} (+- 1e-6)", parts.join(", ")))
}

fn run_bin(args: &[&str], dir: &Path) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_micz")).args(args).current_dir(dir).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = r#"{
  "schema_version": 1,
  "n": 4,
  "xi": [{"i": 1, "j": 2, "value": 0.4}, {"i": 1, "j": 4, "value": -0.9}, {"i": 2, "j": 3, "value": 0.8}, {"i": 3, "j": 4, "value": 0.5}],
  "w": [0.5, -0.5, 0.5, 0.5],
  "r0": 1.5,
  "pr0": 0.1,
  "t_span": [0.0, 12.0],
  "solver": {"method": "rk54", "rtol": 1e-10, "atol": 1e-10}
}
"#;
    std::fs::write(dir.path().join("scenario.json"), config).unwrap();
    let mut codes = Vec::new();
    for name in ["a.json", "b.json"] {
        codes.push(run_bin(&["compare", "--config", "scenario.json", "--report", name], dir.path()).0);
    }
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap_or_default();
    let compare_same = !read("a.json").is_empty() && read("a.json") == read("b.json");
    let (c1, v1) = run_bin(&["verify", "--suite", "all", "--seed", "7"], dir.path());
    let (c2, v2) = run_bin(&["verify", "--suite", "all", "--seed", "7"], dir.path());
    codes.extend([c1, c2]);
    let verify_same = !v1.is_empty() && v1 == v2;
    outcome(
        compare_same && verify_same && codes.iter().all(|&c| c == 0),
        format!("compare reports identical: {compare_same}, verify reports identical: {verify_same}, exit codes {codes:?}"),
    )
}

fn main() {
    let scenarios = scenarios();
    let criteria: Vec<Criterion> = vec![
        ("1 oracle equivalence", Box::new(|| oracle_equivalence(&scenarios))),
        ("2 literal potential breaks equivalence", Box::new(|| literal_potential_breaks(&scenarios))),
        ("3 conservation", Box::new(|| conservation(&scenarios))),
        ("4 Kepler reduction", Box::new(kepler_reduction)),
        ("5 magnetic planarity", Box::new(magnetic_planarity)),
        ("6 generic annulus", Box::new(generic_annulus)),
        ("7 geometry suite", Box::new(geometry_suite)),
        ("8 minimal coupling", Box::new(minimal_coupling_identity)),
        ("9 free-fall collision time", Box::new(free_fall)),
        ("10 determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let o = run();
        println!("{} criterion {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
