#![allow(dead_code)]

use eidarp::charging::rebuild_calendars;
use eidarp::feasibility::{nine_step_evaluate, View};
use eidarp::insertion::remove_customers;
use eidarp::oracle::{schedule_exists, verify, StopSequence};
use eidarp::search::construct_initial;
use eidarp::solution::{Mile, Plan, Route, Stop};
use eidarp::toolkit::{generate, GeneratorConfig, Layout};
use eidarp::{Problem, Solution};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn generated(n: usize, seed: u64, tweak: impl FnOnce(&mut GeneratorConfig)) -> Problem {
    let mut cfg = GeneratorConfig {
        n_customers: n,
        ..GeneratorConfig::default()
    };
    tweak(&mut cfg);
    Problem::new(generate(&cfg, seed).expect("generator config is valid"))
}

/// Tiny instance: one line with one run per direction.
pub fn tiny(seed: u64, n: usize, buses: usize) -> Problem {
    generated(n, seed, |c| {
        c.area = 8.0;
        c.layout = Layout::One;
        c.departures_per_direction = Some(1);
        c.fleet = Some(buses);
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FuzzTally {
    pub cases: usize,
    /// Declared feasible by the nine-step evaluation.
    pub accepted: usize,
    /// Accepted but rejected by the verifier or the schedule oracle.
    pub unsound: usize,
    /// Timing-feasible according to the schedule oracle.
    pub oracle_feasible: usize,
    /// Oracle-feasible but declared infeasible.
    pub false_infeasible: usize,
    /// Cases touching a bus-transit-bus customer.
    pub coupled: usize,
}

impl FuzzTally {
    pub fn false_rate(&self) -> f64 {
        if self.oracle_feasible == 0 {
            0.0
        } else {
            self.false_infeasible as f64 / self.oracle_feasible as f64
        }
    }
}

/// A solved base with about a fifth of its customers removed again, so
/// that mutations can insert them.
pub fn fuzz_base(prob: &Problem, rng: &mut ChaCha8Rng) -> Solution {
    let mut sol = construct_initial(prob);
    let served: Vec<usize> = (0..prob.n()).filter(|r| sol.journeys[*r].is_some()).collect();
    let drop: Vec<usize> = served.choose_multiple(rng, served.len() / 5).copied().collect();
    remove_customers(prob, &mut sol, &drop);
    sol
}

fn is_coupled(sol: &Solution, stops: &[Stop]) -> bool {
    stops
        .iter()
        .any(|s| s.req().and_then(|r| sol.plan(r)).is_some_and(|p| p.option == 4))
}

/// Mutate one route of `base`, evaluate it, and compare with the verifier
/// and the exact schedule oracle.
pub fn fuzz_route_case(prob: &Problem, base: &Solution, rng: &mut ChaCha8Rng, tally: &mut FuzzTally) {
    let used: Vec<usize> = (0..base.routes.len()).filter(|&k| base.routes[k].is_used()).collect();
    let idle: Vec<usize> = (0..base.routes.len()).filter(|&k| !base.routes[k].is_used()).collect();
    let coupled: Vec<usize> = used
        .iter()
        .copied()
        .filter(|&k| is_coupled(base, &base.routes[k].stops))
        .collect();
    let k = if !coupled.is_empty() && rng.gen_bool(0.5) {
        *coupled.choose(rng).unwrap()
    } else if !used.is_empty() && rng.gen_bool(0.8) {
        *used.choose(rng).unwrap()
    } else if let Some(&k) = idle.choose(rng) {
        k
    } else {
        return;
    };
    let mut stops = base.routes[k].stops.clone();
    let mut plans: Vec<(usize, Option<Plan>)> = Vec::new();
    let inner = stops.len() - 2;
    let rejected: Vec<usize> = base.rejected.iter().copied().collect();
    match rng.gen_range(0..4) {
        0 if inner >= 2 => {
            let i = rng.gen_range(1..=inner);
            let j = rng.gen_range(1..=inner);
            stops.swap(i, j);
        }
        1 if inner >= 2 => {
            let i = rng.gen_range(1..=inner);
            let s = stops.remove(i);
            let j = rng.gen_range(1..=inner);
            stops.insert(j, s);
        }
        _ if !rejected.is_empty() => {
            let r = *rejected.choose(rng).unwrap();
            // door to door, or a transit journey with one bus mile on k
            let tps: Vec<_> = prob.tps(r).iter().filter(|c| c.allows(2) || c.allows(3)).collect();
            let (plan, a, b) = match tps.choose(rng) {
                Some(c) if rng.gen_bool(0.5) => {
                    let pair = prob.pair(c.tp);
                    if c.allows(2) {
                        (
                            Plan::with_transit(2, c.tp, Mile::Bus(k), Mile::Walk),
                            Stop::Pickup { req: r },
                            Stop::TransitDrop {
                                req: r,
                                node: pair.entry,
                            },
                        )
                    } else {
                        (
                            Plan::with_transit(3, c.tp, Mile::Walk, Mile::Bus(k)),
                            Stop::TransitPick {
                                req: r,
                                node: pair.exit,
                            },
                            Stop::Dropoff { req: r },
                        )
                    }
                }
                _ => (Plan::bus_only(k), Stop::Pickup { req: r }, Stop::Dropoff { req: r }),
            };
            let i = rng.gen_range(1..stops.len());
            stops.insert(i, a);
            let j = rng.gen_range(i + 1..stops.len());
            stops.insert(j, b);
            plans.push((r, Some(plan)));
        }
        _ => return,
    }

    tally.cases += 1;
    let mut view = View::new(base);
    for &(r, p) in &plans {
        view.set_plan(r, p);
    }
    if is_coupled(base, &stops) {
        tally.coupled += 1;
    }
    let plan_of = |r: usize| view.plan(r);
    let seqs: Vec<StopSequence> = (0..base.routes.len())
        .map(|q| StopSequence {
            route: q,
            bus: base.routes[q].bus,
            stops: if q == k { &stops } else { &base.routes[q].stops },
        })
        .collect();
    let oracle = schedule_exists(prob, &seqs, &plan_of).is_some();
    if oracle {
        tally.oracle_feasible += 1;
    }
    match nine_step_evaluate(prob, &view, k, &stops) {
        Ok((sched, others)) => {
            tally.accepted += 1;
            let mut sol = base.clone();
            sol.routes[k] = Route {
                bus: base.routes[k].bus,
                stops: stops.clone(),
                schedule: sched,
            };
            for (q, s) in others {
                sol.routes[q].schedule = s;
            }
            for &(r, p) in &plans {
                if let Some(p) = p {
                    sol.journeys[r] = Some(sol.journey_from_routes(prob, r, p));
                    sol.rejected.remove(&r);
                }
            }
            rebuild_calendars(prob, &mut sol);
            sol.refresh(prob);
            let rep = verify(prob, &sol);
            if !rep.is_feasible() || !oracle {
                tally.unsound += 1;
                eprintln!(
                    "unsound case on route {k}: oracle {oracle}, findings {:?}",
                    rep.findings
                );
            }
        }
        Err(v) => {
            if oracle {
                if std::env::var("FUZZ_DEBUG").is_ok() {
                    eprintln!(
                        "false infeasible on route {k}: {v:?} coupled {}",
                        is_coupled(base, &stops)
                    );
                }
                tally.false_infeasible += 1;
            }
        }
    }
}

/// Low-battery instance whose buses all share the single depot charger.
pub fn contended(seed: u64, n: usize, fleet: usize, init_soc: f64, layout: Layout) -> Problem {
    generated(n, seed, |c| {
        c.area = 8.0;
        c.layout = layout;
        c.n_depots = 1;
        c.fleet = Some(fleet);
        c.init_soc = init_soc;
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ChargeTally {
    pub solutions: usize,
    pub charging_events: usize,
    pub overlaps: usize,
    pub soc_violations: usize,
    pub verify_failures: usize,
    /// Recharge scheduling calls that failed, and those that left a trace.
    pub failed_calls: usize,
    pub residue: usize,
}

pub fn state_hash<T: serde::Serialize>(x: &T) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    serde_json::to_vec(x).unwrap().hash(&mut h);
    h.finish()
}

/// Charger intervals per charger, collected from the routes.
fn intervals(sol: &Solution, n_chargers: usize) -> Vec<Vec<(f64, f64)>> {
    let mut out = vec![Vec::new(); n_chargers];
    for r in &sol.routes {
        for s in &r.stops {
            if let Stop::Charger {
                charger,
                start,
                duration,
            } = *s
            {
                out[charger].push((start, start + duration));
            }
        }
    }
    for v in &mut out {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

/// SoC on arrival and after charging at every stop, from distances alone.
fn soc_ok(prob: &Problem, route: &Route) -> bool {
    let b = prob.bus(route.bus);
    let mut e = b.e_init;
    let tol = 1e-6;
    for (i, s) in route.stops.iter().enumerate() {
        if i > 0 {
            let d = prob.location(&route.stops[i - 1]).dist(&prob.location(s));
            e -= d * b.consumption;
        }
        if e < b.e_min - tol || e > b.e_max + tol {
            return false;
        }
        if let Stop::Charger { charger, duration, .. } = *s {
            e += duration * prob.instance.chargers[charger].power;
            if e > b.e_max + tol {
                return false;
            }
        }
    }
    true
}

fn check_solution(prob: &Problem, sol: &Solution, tally: &mut ChargeTally) {
    tally.solutions += 1;
    for iv in intervals(sol, prob.instance.chargers.len()) {
        tally.charging_events += iv.len();
        if iv.windows(2).any(|w| w[1].0 < w[0].1 - 1e-6) {
            tally.overlaps += 1;
        }
    }
    if sol.calendars.iter().any(|c| c.has_overlap()) {
        tally.overlaps += 1;
    }
    if sol.routes.iter().any(|r| !soc_ok(prob, r)) {
        tally.soc_violations += 1;
    }
    let rep = verify(prob, sol);
    if !rep.is_feasible() {
        tally.verify_failures += 1;
        eprintln!("verifier: {:?}", rep.findings);
    }
}

/// Build a contended low-battery solution, shake it a few times and check the
/// charging invariants after every step; then drive recharge scheduling into
/// failure against blocked calendars and check it leaves no trace.
pub fn charging_case(seed: u64, tally: &mut ChargeTally) {
    use eidarp::charging::{calendars_from_view, energy_pass, schedule_recharges};
    use eidarp::insertion::{apply_insertion, best_insertion, InsertFilter};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(5..=9);
    let soc = rng.gen_range(0.11..0.3);
    let layout = if rng.gen_bool(0.5) { Layout::One } else { Layout::None };
    let prob = contended(seed, n, 3, soc, layout);
    let mut sol = construct_initial(&prob);
    check_solution(&prob, &sol, tally);
    for _ in 0..2 {
        let served: Vec<usize> = (0..prob.n()).filter(|r| sol.journeys[*r].is_some()).collect();
        let k = (served.len() / 2).max(1).min(served.len());
        let mut out: Vec<usize> = served.choose_multiple(&mut rng, k).copied().collect();
        remove_customers(&prob, &mut sol, &out);
        out.shuffle(&mut rng);
        for r in out {
            if let Some(ins) = best_insertion(&prob, &sol, r, &InsertFilter::default()) {
                apply_insertion(&prob, &mut sol, ins);
            }
        }
        check_solution(&prob, &sol, tally);
    }

    let view = View::new(&sol);
    for (k, route) in sol.routes.iter().enumerate() {
        if !route.is_used() {
            continue;
        }
        let bare: Vec<Stop> = route.stops.iter().copied().filter(|s| !s.is_charger()).collect();
        let Ok((sched, _)) = nine_step_evaluate(&prob, &view, k, &bare) else {
            continue;
        };
        if energy_pass(&prob, route.bus, &bare, &sched).i_low.is_none() {
            continue;
        }
        let mut cals = calendars_from_view(&prob, &view, Some(k));
        // block a random stretch of the horizon at every charger
        let from = rng.gen_range(-10.0..60.0);
        let to = from + rng.gen_range(30.0..200.0);
        for c in cals.iter_mut() {
            let busy: Vec<(f64, f64)> = c.vacant().into_iter().filter(|(a, b)| *b > from && *a < to).collect();
            for (a, b) in busy {
                c.reserve(usize::MAX, a.max(from), b.min(to));
            }
        }
        let before = state_hash(&cals);
        let sol_before = state_hash(&sol);
        match schedule_recharges(&prob, &view, k, &bare, &sched, &mut cals) {
            None => {
                tally.failed_calls += 1;
                if state_hash(&cals) != before || state_hash(&sol) != sol_before {
                    tally.residue += 1;
                }
            }
            Some(_) => {
                if cals.iter().any(|c| c.has_overlap()) {
                    tally.overlaps += 1;
                }
            }
        }
    }
}
