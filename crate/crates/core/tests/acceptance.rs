//! Acceptance criteria, run in order with one PASS/FAIL line each.
//!
//! Runs without the libtest harness so that nothing else competes for the
//! CPU while per-step costs are measured. Failed criteria are listed at the
//! end; with `TDGL_ACCEPTANCE_STRICT=1` they also make the exit status
//! non-zero. A plain exit keeps `cargo test` running the remaining targets.
//! Takes about half an hour on one core.

use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdgl::config::{DataFormat, RunConfig};
use tdgl::diagnostics::reduced_ode_oracle;
use tdgl::driver::{self, files, probe_stability, NoHooks, RunStatus, RunSummary, Simulation, DEFAULT_PROBE_STEPS};
use tdgl::fields::{gauge_transform, vertex_layout, Params, State};
use tdgl::grid::GridSpec;
use tdgl::integrators::{find_stability_limit, round_sig, AlgorithmId, StabilityLimit, Stepper};
use tdgl::verify;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

// ---- 1: semigroup exactness ----------------------------------------------

fn uniform_error(alg: AlgorithmId, psi0: f64, dt: f64, steps: usize) -> f64 {
    let g = GridSpec::new(8, 6, 2, 6, 0.5, 0.5).unwrap();
    let p = Params::uniform(&g, 4.0, 1.0, 0.0, dt);
    let mut s = State::uniform(&g, &p, C64::new(psi0, 0.0));
    let mut st = Stepper::new(alg);
    for _ in 0..steps {
        st.step(&mut s, &p, &g).unwrap();
    }
    let (x, _) = reduced_ode_oracle(psi0 * psi0, 0.0, 1.0, 0.0, steps as f64 * dt);
    let mut worst = 0.0f64;
    for j in 1..=g.n_y {
        for i in g.n_sx..=g.n_ex {
            worst = worst.max((s.psi.get(i, j) - C64::new(x.sqrt(), 0.0)).norm());
        }
    }
    worst
}

fn criterion_1() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let exact = [0.1, 0.5, 0.9].iter().map(|&a| uniform_error(AlgorithmId::FullyImplicit, a, 1.0, 100)).fold(0.0, f64::max);
    ok &= exact <= 1e-12;
    notes.push(format!("IV err {exact:.1e}"));
    for alg in [AlgorithmId::Explicit, AlgorithmId::SemiImplicit, AlgorithmId::Implicit] {
        let mut worst_dev = 0.0f64;
        for a in [0.1, 0.5, 0.9] {
            // same final time t = 1
            let r = uniform_error(alg, a, 0.01, 100) / uniform_error(alg, a, 0.005, 200);
            worst_dev = worst_dev.max((r - 2.0).abs());
            ok &= (r - 2.0).abs() <= 0.2;
        }
        notes.push(format!("{alg} |ratio-2| {worst_dev:.3}"));
    }
    outcome(ok, notes.join(", "))
}

// ---- 2-4: oracle checks ----------------------------------------------------

fn criterion_2() -> Outcome {
    let r = verify::check_adi_order(0.15, 2024);
    outcome(r.passed, r.detail)
}

fn criterion_3() -> Outcome {
    let inv = verify::check_gauge_invariance(100, 1e-12, tdgl::fields::link_variables, 31);
    let g = GridSpec::new(12, 8, 3, 10, 0.5, 0.5).unwrap();
    let p = Params::uniform(&g, 2.0, 1.0, 0.5, 0.02);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for alg in AlgorithmId::ALL {
        for k in 0..10 {
            let s = State::meissner_seeded(&g, &p, 100 + k, 0.8);
            let mut chi = vertex_layout(&g, 0.0);
            for v in chi.as_mut_slice() {
                *v = rng.random_range(-4.0..4.0);
            }
            let t = gauge_transform(&s, &chi, &p, &g);
            let (mut a, mut b) = (s, t);
            Stepper::new(alg).step(&mut a, &p, &g).unwrap();
            Stepper::new(alg).step(&mut b, &p, &g).unwrap();
            let back = gauge_transform(&a, &chi, &p, &g);
            for j in 1..=g.n_y {
                for i in g.n_sx..=g.n_ex {
                    worst = worst.max((back.psi.get(i, j) - b.psi.get(i, j)).norm());
                }
                for i in 0..=g.n_x {
                    worst = worst.max((back.ax.get(i, j) - b.ax.get(i, j)).abs());
                }
            }
        }
    }
    outcome(
        inv.passed && worst <= 1e-10,
        format!("observables rel {:.1e} (tol 1e-12), one-step equivariance {:.1e} (tol 1e-10)", inv.measured, worst),
    )
}

fn criterion_4() -> Outcome {
    let t = verify::check_tridiagonal(250, 1e-11, 77);
    let o = verify::check_operators(1e-13, 77);
    outcome(
        t.passed && o.passed,
        format!("{}: {:.1e} (tol 1e-11); operators {:.1e} (tol 1e-13)", t.detail, t.measured, o.measured),
    )
}

// ---- 5: stability ordering -------------------------------------------------

fn desk(alg: AlgorithmId, dt: f64) -> RunConfig {
    RunConfig::desk(alg, dt)
}

fn criterion_5(limits: &mut Vec<(AlgorithmId, f64)>) -> Outcome {
    let mut notes = Vec::new();
    for alg in AlgorithmId::ALL {
        let t0 = Instant::now();
        let r = find_stability_limit(alg, 1e-3, 100.0, |a, dt| probe_stability(&desk(a, dt), a, dt, DEFAULT_PROBE_STEPS));
        let v = match r {
            Ok(StabilityLimit::Finite(v)) => v,
            Ok(StabilityLimit::Unbounded { cap }) => cap,
            Err(e) => return outcome(false, format!("{alg}: {e}")),
        };
        notes.push(format!("{alg} {} ({:.0}s)", round_sig(v, 2), t0.elapsed().as_secs_f64()));
        limits.push((alg, v));
    }
    let r: Vec<f64> = limits.iter().map(|&(_, v)| round_sig(v, 2)).collect();
    let ok = r[0] < r[1] && r[1] < r[2] && r[2] <= r[3];
    outcome(ok, format!("max dt {}", notes.join(", ")))
}

// ---- 6, 7, 9: equilibrium runs ---------------------------------------------

const SAMPLE_INTERVAL: f64 = 5.0;
const MAX_TIME: f64 = 10_000.0;

fn equilibrium_config(alg: AlgorithmId, dt: f64) -> RunConfig {
    let mut c = desk(alg, dt);
    c.diagnostics.sample_every = ((SAMPLE_INTERVAL / dt).round() as u64).max(1);
    c.integrator.max_steps = (MAX_TIME / dt).ceil() as u64;
    c
}

fn run_to_equilibrium(c: RunConfig) -> (RunSummary, Simulation) {
    let mut sim = Simulation::new(c).unwrap();
    let s = sim.run(&mut NoHooks).unwrap();
    (s, sim)
}

fn describe(s: &RunSummary) -> String {
    format!("{} dt {} {:?} N {} Ndt {:.0} vortices {}", s.algorithm, round_sig(s.dt, 3), s.status, s.steps, s.t, s.vortex_count)
}

fn criterion_6(runs: &[RunSummary]) -> Outcome {
    let all_eq = runs.iter().all(|s| s.status == RunStatus::Equilibrium);
    let n0 = runs[0].vortex_count;
    let same_count = runs.iter().all(|s| s.vortex_count == n0);
    let mut ok = all_eq && same_count;
    let mut notes: Vec<String> = runs.iter().map(describe).collect();
    let lengths: Option<Vec<f64>> = runs.iter().map(|s| s.mean_bond_length).collect();
    let angles: Option<Vec<f64>> = runs.iter().map(|s| s.mean_bond_angle).collect();
    match (lengths, angles) {
        (Some(l), Some(a)) => {
            let spread = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
            let (dl, da) = (spread(&l), spread(&a));
            ok &= dl <= 1e-3 && da <= 1e-3;
            notes.push(format!("bond length spread {dl:.2e}, angle spread {da:.2e}"));
        }
        _ if ok => notes.push(format!("bond statistics undefined with {n0} vortices; only counts compared (vacuous)")),
        _ => notes.push("bond statistics not comparable".into()),
    }
    outcome(ok, notes.join("; "))
}

fn criterion_7(runs: &[RunSummary]) -> Outcome {
    let times: Vec<f64> = runs.iter().map(|s| s.steps as f64 * s.dt).collect();
    let lo = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let all_eq = runs.iter().all(|s| s.status == RunStatus::Equilibrium);
    let spread = hi / lo - 1.0;
    outcome(
        all_eq && spread <= 0.25,
        format!("N dt = {:?}, max/min - 1 = {spread:.3}", times.iter().map(|t| t.round()).collect::<Vec<_>>()),
    )
}

fn criterion_9(limit_i: f64, horizon: f64) -> Outcome {
    let dt = 0.4 * limit_i;
    let mut c = desk(AlgorithmId::Explicit, dt);
    c.integrator.max_steps = (horizon / dt).ceil() as u64;
    c.diagnostics.sample_every = ((1.0 / dt).round() as u64).max(1);
    // run the whole horizon unless the energy stops changing exactly
    c.diagnostics.energy_tolerance = f64::MIN_POSITIVE;
    let mut sim = Simulation::new(c.clone()).unwrap();
    let s = sim.run(&mut NoHooks).unwrap();
    let skip = c.integrator.max_steps / 20;
    let e: Vec<(u64, f64)> = sim.records.iter().filter(|r| r.step >= skip).map(|r| (r.step, r.energy)).collect();
    let worst = e.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max);
    outcome(
        s.status != RunStatus::Diverged && worst <= 1e-10,
        format!("dt {}, {} samples over {} steps, largest increase {worst:.2e}", round_sig(dt, 3), e.len(), s.steps),
    )
}

// ---- 8: multirate ----------------------------------------------------------

/// The update period multiplies the step seen by the potential, so the
/// comparison runs where `m dt` stays inside Algorithm IV's stable range.
const MULTIRATE_DT: f64 = 1.0;

fn criterion_8() -> Outcome {
    let mut res = Vec::new();
    for m in [1, 10] {
        let mut c = equilibrium_config(AlgorithmId::FullyImplicit, MULTIRATE_DT);
        c.integrator.m = m;
        let (s, _) = run_to_equilibrium(c);
        res.push(s);
    }
    let (a, b) = (&res[0], &res[1]);
    let ratio = b.seconds_per_step / a.seconds_per_step;
    let ok = a.status == RunStatus::Equilibrium
        && b.status == RunStatus::Equilibrium
        && a.vortex_count == b.vortex_count
        && ratio < 0.6;
    outcome(
        ok,
        format!(
            "dt {MULTIRATE_DT}: m=1 {:?} N {} C {:.3e} vortices {}; m=10 {:?} N {} C {:.3e} vortices {}; cost ratio {ratio:.3}",
            a.status, a.steps, a.seconds_per_step, a.vortex_count, b.status, b.steps, b.seconds_per_step, b.vortex_count
        ),
    )
}

// ---- 10: determinism and resume ---------------------------------------------

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut c = desk(AlgorithmId::FullyImplicit, 0.5);
    c.integrator.m = 3;
    c.integrator.max_steps = 1200;
    c.diagnostics.sample_every = 20;
    c.diagnostics.energy_tolerance = f64::MIN_POSITIVE;
    c.io.checkpoint_every = 500;
    c.io.format = DataFormat::Binary;
    let at = |name: &str| {
        let mut x = c.clone();
        x.io.out_dir = dir.path().join(name);
        x
    };
    driver::run(at("a")).unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    single.install(|| driver::run(at("b"))).unwrap();
    let mut split = at("c");
    split.integrator.max_steps = 700;
    driver::run(split.clone()).unwrap();
    split.integrator.max_steps = 1200;
    let ckpt = split.io.out_dir.join(files::CHECKPOINT);
    driver::resume(split, &ckpt).unwrap();

    let read = |d: &str, f: &str| std::fs::read(dir.path().join(d).join(f)).unwrap();
    let repeat = read("a", files::DIAGNOSTICS) == read("b", files::DIAGNOSTICS);
    let resumed = read("a", files::DIAGNOSTICS) == read("c", files::DIAGNOSTICS) && read("a", files::FINAL) == read("c", files::FINAL);
    outcome(
        repeat && resumed,
        format!("repeat run (1 thread vs pool) identical: {repeat}; resume at step 500 identical: {resumed}"),
    )
}

// ---- driver -----------------------------------------------------------------

fn report(n: u32, name: &str, o: &Outcome, failed: &mut Vec<u32>) {
    println!("{} criterion {n:>2} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    if !o.passed {
        failed.push(n);
    }
}

fn main() {
    let t0 = Instant::now();
    let mut failed = Vec::new();
    report(1, "semigroup exactness", &criterion_1(), &mut failed);
    report(2, "ADI splitting order", &criterion_2(), &mut failed);
    report(3, "gauge invariance", &criterion_3(), &mut failed);
    report(4, "linear-algebra oracles", &criterion_4(), &mut failed);

    let mut limits = Vec::new();
    report(5, "stability ordering", &criterion_5(&mut limits), &mut failed);
    if limits.len() == 4 {
        let runs: Vec<RunSummary> = limits.iter().map(|&(alg, v)| run_to_equilibrium(equilibrium_config(alg, 0.5 * v)).0).collect();
        report(6, "equilibrium consistency", &criterion_6(&runs), &mut failed);
        report(7, "physical-time invariance", &criterion_7(&runs), &mut failed);
        report(8, "multirate", &criterion_8(), &mut failed);
        let horizon = (runs[0].steps as f64 * runs[0].dt).max(100.0);
        report(9, "energy descent", &criterion_9(limits[0].1, horizon), &mut failed);
    } else {
        for (n, name) in [(6, "equilibrium consistency"), (7, "physical-time invariance"), (9, "energy descent")] {
            report(n, name, &outcome(false, "no stability limits"), &mut failed);
        }
        report(8, "multirate", &criterion_8(), &mut failed);
    }
    report(10, "determinism and resume", &criterion_10(), &mut failed);

    println!("acceptance: {} of 10 passed in {:.0} s", 10 - failed.len(), t0.elapsed().as_secs_f64());
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        if std::env::var("TDGL_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}
