//! The eight acceptance criteria, one PASS/FAIL line each. Runs as a plain
//! binary; pass criterion numbers as arguments to run a subset.

mod common;

use std::time::Instant;

use common::*;
use eidarp::oracle::{brute_force_solve, verify, ExactLimits, OBJECTIVE_TOL};
use eidarp::search::{best_of, run, run_many, run_observed, SearchConfig};
use eidarp::toolkit::{generate, sweep, Axis, GeneratorConfig, Layout};
use eidarp::transit::{expand_timetables, fixtures::two_line_timetable, transfer_arcs};
use eidarp::{Problem, Solution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn golden_expansion() -> Outcome {
    let t = Instant::now();
    let nodes = expand_timetables(&two_line_timetable(), 10.0);
    let arcs = transfer_arcs(&nodes, 1.0, 10.0);
    // the worked example numbers nodes from 1
    let kept = arcs.iter().any(|&(i, j, w)| (i + 1, j + 1) == (2, 6) && w == 3.0);
    let pruned = !arcs.iter().any(|&(i, j, _)| (i + 1, j + 1) == (2, 14));
    let secs = t.elapsed().as_secs_f64();
    outcome(
        nodes.len() == 20 && arcs.len() == 2 && kept && pruned && secs < 1.0,
        format!(
            "{} nodes, {} transfer arcs, 2->6 kept {kept}, 2->14 pruned {pruned}, {secs:.3}s",
            nodes.len(),
            arcs.len()
        ),
    )
}

fn tiny_for_oracle(seed: u64) -> Problem {
    let n = 2 + (seed % 3) as usize;
    generated(n, seed, |c| {
        c.area = 6.0;
        c.layout = Layout::One;
        c.departures_per_direction = Some(1);
        c.fleet = Some(2);
        if seed % 2 == 1 {
            c.init_soc = 0.12;
        }
    })
}

fn exact_equivalence() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for seed in 0..30u64 {
        let prob = tiny_for_oracle(seed);
        let exact = match brute_force_solve(&prob, ExactLimits::default()) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("seed {seed}: oracle refused: {e}")),
        };
        let mut cfg = SearchConfig::from_params(prob.params(), seed);
        cfg.n_iter = 100;
        let results = run_many(&prob, &cfg, 5, 1);
        let lns = &best_of(&results).unwrap().best;
        let gap = (lns.objective - exact.objective).abs();
        worst = worst.max(gap);
        if gap > 0.2 || !verify(&prob, &exact).is_feasible() {
            bad.push(seed);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        bad.is_empty() && secs < 300.0,
        format!("30 instances, worst |gap| {worst:.4}, off seeds {bad:?}, {secs:.1}s"),
    )
}

fn feasibility_soundness() -> Outcome {
    let mut t = FuzzTally::default();
    let mut seed = 0u64;
    while t.cases < 1000 {
        let prob = generated(12, seed, |c| c.area = 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = fuzz_base(&prob, &mut rng);
        for _ in 0..50 {
            if t.cases >= 1000 {
                break;
            }
            fuzz_route_case(&prob, &base, &mut rng, &mut t);
        }
        seed += 1;
    }
    outcome(
        t.unsound == 0 && t.false_rate() < 0.10 && t.coupled > 0,
        format!(
            "{} routes ({} coupled), {} accepted, {} unsound, false-infeasible {}/{} = {:.1}%",
            t.cases,
            t.coupled,
            t.accepted,
            t.unsound,
            t.false_infeasible,
            t.oracle_feasible,
            100.0 * t.false_rate()
        ),
    )
}

fn charging_invariants() -> Outcome {
    let started = Instant::now();
    let mut t = ChargeTally::default();
    let mut seed = 0u64;
    while t.solutions < 500 {
        charging_case(seed, &mut t);
        seed += 1;
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        t.overlaps == 0 && t.soc_violations == 0 && t.verify_failures == 0 && t.residue == 0 && secs < 120.0,
        format!(
            "{} solutions, {} charging events, {} overlaps, {} SoC breaches, {} verifier failures, {} failed calls with {} residue, {secs:.1}s",
            t.solutions, t.charging_events, t.overlaps, t.soc_violations, t.verify_failures, t.failed_calls, t.residue
        ),
    )
}

fn monotone_and_deterministic() -> Outcome {
    let prob = generated(20, 11, |_| {});
    let mut notes = Vec::new();
    let mut pass = true;
    for seed in [0u64, 1, 2] {
        let mut cfg = SearchConfig::from_params(prob.params(), seed);
        cfg.n_iter = 150;
        let a = run(&prob, &cfg);
        let b = run(&prob, &cfg);
        let monotone = a.trace.windows(2).all(|w| w[1] <= w[0]) && a.trace[0] <= a.initial_objective;
        let same = a.best.to_json() == b.best.to_json();
        pass &= monotone && same;
        notes.push(format!("seed {seed}: monotone {monotone}, identical {same}"));
    }
    outcome(pass, notes.join("; "))
}

fn scale_smoke() -> Outcome {
    let cfg = GeneratorConfig {
        n_customers: 50,
        ..GeneratorConfig::default()
    };
    let prob = Problem::new(generate(&cfg, 0).expect("default generator config"));
    let search = SearchConfig::from_params(prob.params(), 0);
    let t = Instant::now();
    let res = run(&prob, &search);
    let secs = t.elapsed().as_secs_f64();
    let rep = verify(&prob, &res.best);
    let gain = 1.0 - res.best.objective / res.initial_objective;
    outcome(
        search.n_iter == 600 && secs < 900.0 && rep.is_feasible() && gain >= 0.15,
        format!(
            "n_iter {}, initial {:.2}, best {:.2}, improvement {:.1}%, verifier findings {}, {} rejected, {secs:.0}s",
            search.n_iter,
            res.initial_objective,
            res.best.objective,
            100.0 * gain,
            rep.findings.len(),
            res.best.rejected.len()
        ),
    )
}

fn phi_sweep() -> Outcome {
    let cfg = GeneratorConfig {
        n_customers: 100,
        ..GeneratorConfig::default()
    };
    let base = generate(&cfg, 0).expect("default generator config");
    let search = SearchConfig::from_params(&base.params, 0);
    let rows = match sweep(&base, &cfg, Axis::Phi, &[1.3, 2.5], &search, 1, 1) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("sweep failed: {e}")),
    };
    let at = |v: f64| rows.iter().find(|r| r.value == v).map(|r| &r.kpi).unwrap();
    let (lo, hi) = (at(1.3), at(2.5));
    outcome(
        hi.btt < lo.btt && hi.ctt > lo.ctt,
        format!(
            "BTT {:.1} -> {:.1}, CTT {:.3} -> {:.3} (phi 1.3 -> 2.5)",
            lo.btt, hi.btt, lo.ctt, hi.ctt
        ),
    )
}

fn objective_accounting() -> Outcome {
    let prob = generated(25, 5, |_| {});
    let mut cfg = SearchConfig::from_params(prob.params(), 3);
    cfg.n_iter = 120;
    let (mut seen, mut worst, mut bad) = (0usize, 0.0f64, 0usize);
    run_observed(&prob, &cfg, &mut |s: &Solution| {
        seen += 1;
        let rep = verify(&prob, s);
        let diff = (rep.objective - s.objective).abs();
        worst = worst.max(diff);
        if diff > OBJECTIVE_TOL || !rep.is_feasible() {
            bad += 1;
        }
    });
    let empty = Solution::empty(&prob);
    let omega = prob.params().omega * prob.n() as f64;
    let all_rejected = empty.objective == omega && verify(&prob, &empty).objective == omega;
    outcome(
        bad == 0 && all_rejected && seen > 1,
        format!("{seen} accepted solutions, worst |cached - recomputed| {worst:.2e}, all-rejected equals omega*n {all_rejected}"),
    )
}

fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("golden timetable expansion", golden_expansion),
        ("exact-oracle equivalence", exact_equivalence),
        ("feasibility soundness", feasibility_soundness),
        ("charging invariants", charging_invariants),
        ("monotone best and determinism", monotone_and_deterministic),
        ("50-customer scale smoke test", scale_smoke),
        ("phi sweep directions", phi_sweep),
        ("objective accounting", objective_accounting),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let o = check();
        println!(
            "{} [{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        failed += !o.pass as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
