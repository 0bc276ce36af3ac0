//! Exit criteria. Each test writes one `PASS`/`FAIL` line to stderr,
//! bypassing the test harness's output capture.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use monoinv::cli;
use monoinv::dynamics::{estimate_lipschitz, simulate, Signal, SystemModel};
use monoinv::feasibility::{beta_radius, classify_point, classify_point_robust, Classification, ClassifyOptions};
use monoinv::models::{self, TankParameters};
use monoinv::monotonicity::{check_kamke_muller, MonotoneClass};
use monoinv::order::{BoxRegion, Lattice, LowerSet, Vector};
use monoinv::solver::{compute_invariant, inclusion_violations, verify_result, SolverConfig, SolverResult, VerifyOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, ok: bool, detail: &str) {
    let line = format!("acceptance {id:>2} [{}] {name}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {id} failed: {detail}");
}

fn v(x: f64, y: f64) -> Vector {
    Vector::from([x, y])
}

fn tanks() -> (SystemModel, LowerSet) {
    models::by_name("coupled_tanks", None).unwrap()
}

fn u_min_control(m: &SystemModel) -> Vec<Signal> {
    vec![Signal::constant(m.u_min().clone())]
}

fn options() -> ClassifyOptions {
    ClassifyOptions { t_max: 200.0, h: 0.01, margin: 0.0, decisive: true }
}

fn feasibility_of(points: &[Vector]) -> (bool, String) {
    let (m, x) = tanks();
    let labels: Vec<(String, &str)> = points
        .iter()
        .map(|p| (p.to_string(), classify_point(&m, &x, p, &u_min_control(&m), &options()).unwrap().label()))
        .collect();
    let ok = labels.iter().all(|(_, l)| *l == "feasible");
    let detail = labels.iter().map(|(p, l)| format!("{p} {l}")).collect::<Vec<_>>().join(", ");
    (ok, detail)
}

fn tanks_result(epsilon: f64) -> SolverResult {
    let (m, x) = tanks();
    compute_invariant(&m, &x, &SolverConfig { epsilon, ..Default::default() }).unwrap()
}

#[test]
fn criterion_01_tank_trajectories_coarse() {
    let (ok, detail) = feasibility_of(&[v(30.0, 18.0), v(29.0, 19.0), v(20.0, 20.0)]);
    report(1, "tanks feasibility, coarse figure", ok, &detail);
}

#[test]
fn criterion_02_tank_trajectories_fine() {
    let (ok, detail) = feasibility_of(&[v(30.0, 18.5), v(29.5, 19.0), v(26.5, 19.5), v(20.0, 20.0)]);
    report(2, "tanks feasibility, fine figure", ok, &detail);
}

#[test]
fn criterion_03_benchmark_runs_converge() {
    let tmp = tempfile::tempdir().unwrap();
    let mut details = Vec::new();
    let mut ok = true;
    for epsilon in [1.0, 0.5] {
        let config = tmp.path().join(format!("tanks_{epsilon}.toml"));
        let out = tmp.path().join(format!("out_{epsilon}"));
        write_config(&config, "coupled_tanks", epsilon, &out);
        let started = Instant::now();
        let code = cli::run(["monoinv", "compute", "--config", config.to_str().unwrap()]);
        let secs = started.elapsed().as_secs_f64();
        let record: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
        let gap = record["gap"].as_f64().unwrap_or(f64::INFINITY);
        ok &= code == 0 && gap <= epsilon && secs < 60.0;
        details.push(format!("eps {epsilon}: exit {code}, gap {gap}, {secs:.2} s"));
    }
    report(3, "benchmark runs", ok, &details.join("; "));
}

fn write_config(path: &Path, model: &str, epsilon: f64, out: &Path) {
    let text = format!(
        "[model]\nname = \"{model}\"\n[solver]\nepsilon = {epsilon:?}\n[output]\ndir = {:?}\n",
        out.to_str().unwrap()
    );
    std::fs::write(path, text).unwrap();
}

#[test]
fn criterion_04_invariance_replay() {
    let (m, x) = tanks();
    let r = tanks_result(1.0);
    let opts = VerifyOptions { trials: 20, horizon_factor: 10.0, tau: 1e-3, h: 0.01, ..Default::default() };
    let rep = verify_result(&m, &x, &r, &opts).unwrap();
    let ok = rep.passed() && rep.generators_checked == r.f1.generators().len() && rep.generators_checked > 0;
    let first = rep.violations.first().map(|v| v.to_string()).unwrap_or_default();
    report(
        4,
        "invariance replay",
        ok,
        &format!("{} generators, {} simulations, {} violations {first}", rep.generators_checked, rep.simulations, rep.violations.len()),
    );
}

#[test]
fn criterion_05_monotonicity_certification() {
    let (m, _) = tanks();
    let region = BoxRegion::new(v(1e-3, 1e-3), v(30.0, 20.0)).unwrap();
    let tank = check_kamke_muller(&m, &region, 10_000, 1e-5, 1e-9).unwrap();
    let unit = BoxRegion::new(v(-1.0, -1.0), v(1.0, 1.0)).unwrap();
    let rot = check_kamke_muller(&models::rotation(), &unit, 10_000, 1e-5, 1e-9).unwrap();
    let ok = tank.classification == MonotoneClass::Csm
        && tank.violations.is_empty()
        && tank.samples_used == 10_000
        && rot.classification == MonotoneClass::None;
    report(
        5,
        "monotonicity certification",
        ok,
        &format!(
            "tanks {} with {} violations over {} samples, rotation {}",
            tank.classification,
            tank.violations.len(),
            tank.samples_used,
            rot.classification
        ),
    );
}

#[test]
fn criterion_06_analytic_oracles() {
    let config = SolverConfig { epsilon: 0.1, ..Default::default() };

    // ẋ = −x under u = 0: x(t) = x0·e^{−t} never exceeds x0, so every point of [0, 2] is safe
    let decay = models::linear_decay();
    let x_decay = models::oracle_safety_set("linear_decay").unwrap();
    let r = compute_invariant(&decay, &x_decay, &config).unwrap();
    let lattice = Lattice::new(x_decay.ambient(), r.resolution).unwrap();
    let mut decay_mismatch = 0;
    for k in 0..lattice.len() {
        let x0 = lattice.point_at(k)[0];
        let peak = (0..=2000).map(|i| x0 * (-(i as f64) * 0.01).exp()).fold(f64::MIN, f64::max);
        let oracle_feasible = peak <= 2.0;
        if oracle_feasible != r.f1.contains(&lattice.point_at(k)) {
            decay_mismatch += 1;
        }
    }

    // ẋ = 1: x(t) = x0 + t leaves [0, 1] at t = 1 − x0 from every start
    let drift = models::drift();
    let x_drift = models::oracle_safety_set("drift").unwrap();
    let r2 = compute_invariant(&drift, &x_drift, &config).unwrap();
    let lattice2 = Lattice::new(x_drift.ambient(), r2.resolution).unwrap();
    let mut drift_mismatch = 0;
    for k in 0..lattice2.len() {
        let p = lattice2.point_at(k);
        let oracle_exit = 1.0 - p[0] < 200.0;
        if r2.f1.contains(&p) || oracle_exit != r2.f2.contains(&p) {
            drift_mismatch += 1;
        }
    }
    let ok = decay_mismatch == 0 && drift_mismatch == 0 && r2.f1.is_empty() && r2.f2.contains(&Vector::from([0.0]));
    report(
        6,
        "analytic oracles",
        ok,
        &format!(
            "decay: {decay_mismatch} mismatches over {} points; drift: {drift_mismatch} mismatches over {} points, K empty = {}",
            lattice.len(),
            lattice2.len(),
            r2.f1.is_empty()
        ),
    );
}

#[test]
fn criterion_07_maximal_disturbance_reduction() {
    let (m, x) = tanks();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = Vec::new();
    for _ in 0..20 {
        let p = x.ambient().sample(&mut rng);
        let mut ds: Vec<Vector> = (0..10).map(|_| m.disturbances().sample(&mut rng)).collect();
        ds.push(m.d_max().clone());
        let single = classify_point(&m, &x, &p, &u_min_control(&m), &options()).unwrap();
        let probed = classify_point_robust(&m, &x, &p, &u_min_control(&m), &ds, &options()).unwrap();
        if single.label() != probed.label() {
            mismatches.push(format!("{p}: {} vs {}", single.label(), probed.label()));
        }
    }
    report(7, "maximal disturbance reduction", mismatches.is_empty(), &format!("20 states, {} mismatches {mismatches:?}", mismatches.len()));
}

#[test]
fn criterion_08_inclusion_under_smaller_sets() {
    let base = tanks_result(1.0);
    let (_, x) = tanks();
    let config = SolverConfig { epsilon: 1.0, ..Default::default() };
    let small_d = models::coupled_tanks(&TankParameters { d_min: -10.0, ..Default::default() }).unwrap();
    let small_u = models::coupled_tanks(&TankParameters { u_max: 11.0, ..Default::default() }).unwrap();
    let with_small_d = compute_invariant(&small_d, &x, &config).unwrap();
    let with_small_u = compute_invariant(&small_u, &x, &config).unwrap();
    let d_violations = inclusion_violations(&base.f1, &with_small_d.f1, x.ambient(), base.resolution, 0.0).unwrap();
    let u_violations = inclusion_violations(&with_small_u.f1, &base.f1, x.ambient(), base.resolution, 0.0).unwrap();
    let ok = d_violations.is_empty() && u_violations.is_empty();
    report(
        8,
        "inclusion under smaller sets",
        ok,
        &format!("smaller D: {} violations; smaller U: {} violations", d_violations.len(), u_violations.len()),
    );
}

#[test]
fn criterion_09_expansion_radius() {
    let (m, x) = tanks();
    let x0 = v(20.0, 20.0);
    let opts = ClassifyOptions { margin: 0.1, ..options() };
    let outcome = classify_point(&m, &x, &x0, &u_min_control(&m), &opts).unwrap();
    let Classification::Feasible { certificate } = outcome else {
        report(9, "expansion radius", false, &format!("(20,20) not feasible with margin 0.1: {}", outcome.label()));
        return;
    };
    let lambda = estimate_lipschitz(&m, x.ambient(), 2000, 1.5).unwrap();
    let beta = beta_radius(&certificate, lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = Vec::new();
    for _ in 0..20 {
        let angle = rng.gen::<f64>() * std::f64::consts::FRAC_PI_2;
        let r = beta * rng.gen::<f64>().sqrt();
        let p = v(x0[0] + r * angle.cos(), x0[1] + r * angle.sin());
        match classify_point(&m, &x, &p, &u_min_control(&m), &options()) {
            Ok(c) if c.is_feasible() => {}
            Ok(c) => failures.push(format!("{p} {}", c.label())),
            Err(e) => failures.push(format!("{p} {e}")),
        }
    }
    // every point of the upper cone inside the constraint set has the form (20 + s, 20) and starts rising in x2
    let neighbour = v(20.01, 20.0);
    let rate = m.eval(&neighbour, m.u_min(), m.d_max()).unwrap()[1];
    let ok = beta > 0.0 && failures.is_empty();
    report(
        9,
        "expansion radius",
        ok,
        &format!(
            "eps_T {:.4}, gamma {:.4}, lambda {lambda:.3}, beta {beta:e}, {} sample failures, dx2/dt at {neighbour} = {rate:+.4}",
            certificate.eps_t,
            certificate.gamma,
            failures.len(),
        ),
    );
}

#[test]
fn criterion_10_integrator_order() {
    let m = models::linear_decay();
    let zero = Signal::constant(Vector::from([0.0]));
    let err = |h: f64| {
        let traj = simulate(&m, &Vector::from([1.0]), &zero, &zero, 1.0, h).unwrap();
        (traj.end()[0] - (-1f64).exp()).abs()
    };
    let (coarse, fine) = (err(0.05), err(0.025));
    let ratio = coarse / fine;
    report(10, "integrator order", ratio >= 12.0, &format!("errors {coarse:e} and {fine:e}, ratio {ratio:.2}"));
}
