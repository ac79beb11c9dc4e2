//! Large neighbourhood search with deterministic-annealing acceptance.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charging::{evaluate_route, rebuild_calendars};
use crate::feasibility::{route_is_valid, RouteSchedule, View};
use crate::insertion::{apply_insertion, best_insertion, insertion_candidates, remove_customers, InsertFilter};
use crate::model::Params;
use crate::problem::Problem;
use crate::solution::{Mile, Plan, Solution, Stop};

/// Guard for relatedness when all three terms vanish.
pub const RELATEDNESS_CAP: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Operator {
    DestroyRandom,
    DestroyWorst,
    DestroyRelated,
    DestroyRoute,
    RepairRandom,
    RepairGreedy,
    RepairRegret,
    RepairTpPriority,
    RepairTp,
    LsBusExchange,
    LsExchangeTp,
    LsTpToBus,
    LsReassignBus,
    LsWalkToBus,
}

impl Operator {
    pub const DESTROY: [Operator; 4] = [
        Operator::DestroyRandom,
        Operator::DestroyWorst,
        Operator::DestroyRelated,
        Operator::DestroyRoute,
    ];
    pub const REPAIR: [Operator; 5] = [
        Operator::RepairRandom,
        Operator::RepairGreedy,
        Operator::RepairRegret,
        Operator::RepairTpPriority,
        Operator::RepairTp,
    ];
    pub const LOCAL: [Operator; 5] = [
        Operator::LsBusExchange,
        Operator::LsExchangeTp,
        Operator::LsTpToBus,
        Operator::LsReassignBus,
        Operator::LsWalkToBus,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Operator::DestroyRandom => "d_random",
            Operator::DestroyWorst => "d_worst",
            Operator::DestroyRelated => "d_related",
            Operator::DestroyRoute => "d_route",
            Operator::RepairRandom => "r_random",
            Operator::RepairGreedy => "r_greedy",
            Operator::RepairRegret => "r_regret",
            Operator::RepairTpPriority => "r_tp_priority",
            Operator::RepairTp => "r_tp",
            Operator::LsBusExchange => "ls_bus_exchange",
            Operator::LsExchangeTp => "ls_exchange_tp",
            Operator::LsTpToBus => "ls_tp_to_bus",
            Operator::LsReassignBus => "ls_reassign_bus",
            Operator::LsWalkToBus => "ls_walk_to_bus",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Operator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Operator::DESTROY
            .iter()
            .chain(Operator::REPAIR.iter())
            .chain(Operator::LOCAL.iter())
            .find(|o| o.name() == s)
            .copied()
            .ok_or_else(|| format!("unknown operator '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n_iter: usize,
    pub t_max_factor: f64,
    pub t_red: f64,
    pub xi_max: f64,
    pub alpha_ls: f64,
    pub seed: u64,
    pub disabled: BTreeSet<Operator>,
}

impl SearchConfig {
    pub fn from_params(p: &Params, seed: u64) -> Self {
        SearchConfig {
            n_iter: p.n_iter,
            t_max_factor: p.t_max_factor,
            t_red: p.t_red,
            xi_max: p.xi_max,
            alpha_ls: p.alpha_ls,
            seed,
            disabled: BTreeSet::new(),
        }
    }

    fn enabled(&self, ops: &[Operator]) -> Vec<Operator> {
        ops.iter().copied().filter(|o| !self.disabled.contains(o)).collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.enabled(&Operator::DESTROY).is_empty() {
            return Err("every destroy operator is disabled".into());
        }
        if self.enabled(&Operator::REPAIR).is_empty() {
            return Err("every repair operator is disabled".into());
        }
        if !(self.xi_max > 0.0 && self.xi_max < 1.0) {
            return Err("xi_max must lie in (0, 1)".into());
        }
        if self.t_red <= 0.0 {
            return Err("t_red must be positive".into());
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// construction

/// Transit-eligible customers first, by earliest pickup, trying options 1 to
/// 4 in turn before falling back to door-to-door service.
pub fn construct_initial(prob: &Problem) -> Solution {
    let mut sol = Solution::empty(prob);
    let by_start = |v: &mut Vec<usize>| {
        v.sort_by(|&a, &b| {
            prob.requests[a]
                .origin_tw
                .e
                .total_cmp(&prob.requests[b].origin_tw.e)
                .then(a.cmp(&b))
        })
    };
    let (mut transit, mut rest): (Vec<usize>, Vec<usize>) = (0..prob.n()).partition(|&r| !prob.tps(r).is_empty());
    by_start(&mut transit);
    by_start(&mut rest);
    for r in transit {
        let mut done = false;
        'options: for option in 1..=5u8 {
            for used_only in [true, false] {
                let filter = InsertFilter {
                    used_only,
                    ..InsertFilter::options(&[option])
                };
                if let Some(ins) = best_insertion(prob, &sol, r, &filter) {
                    apply_insertion(prob, &mut sol, ins);
                    done = true;
                    break 'options;
                }
            }
        }
        if !done {
            log::debug!("initial: request {r} rejected");
        }
    }
    for r in rest {
        let opened = |used_only| InsertFilter {
            used_only,
            ..InsertFilter::options(&[5])
        };
        if let Some(ins) =
            best_insertion(prob, &sol, r, &opened(true)).or_else(|| best_insertion(prob, &sol, r, &opened(false)))
        {
            apply_insertion(prob, &mut sol, ins);
        }
    }
    sol
}

// ---------------------------------------------------------------------------
// destroy

fn served(sol: &Solution) -> Vec<usize> {
    sol.journeys
        .iter()
        .enumerate()
        .filter(|(_, j)| j.is_some())
        .map(|(r, _)| r)
        .collect()
}

/// Objective saved by deleting each served customer, most expensive first.
pub fn worst_customers(prob: &Problem, sol: &Solution) -> Vec<(usize, f64)> {
    let omega = prob.params().omega;
    let mut v: Vec<(usize, f64)> = served(sol)
        .into_iter()
        .map(|r| {
            let mut s = sol.clone();
            remove_customers(prob, &mut s, &[r]);
            // the penalty for rejecting r is not part of its contribution
            let gain = sol.objective - (s.objective - omega);
            (r, gain)
        })
        .collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

/// Inverted sum of spatial, temporal and shared-transit-pair distances.
pub fn relatedness(prob: &Problem, sol: &Solution, i: usize, j: usize, n_union: usize, cmax: f64) -> f64 {
    let (ri, rj) = (&prob.requests[i], &prob.requests[j]);
    let tmax = prob.params().t_end;
    let spatial = if cmax > 0.0 {
        (ri.origin.dist(&rj.origin) + ri.destination.dist(&rj.destination)) / (2.0 * cmax)
    } else {
        0.0
    };
    let times = |r: usize| sol.journeys[r].as_ref().map_or((0.0, 0.0), |j| (j.dep, j.arr));
    let ((bi, ai), (bj, aj)) = (times(i), times(j));
    let temporal = ((bi - bj).abs() + (ai - aj).abs()) / (2.0 * tmax);
    let shared = if n_union == 0 {
        0.0
    } else {
        let ti: BTreeSet<usize> = prob.tps(i).iter().map(|c| c.tp).collect();
        let common = prob.tps(j).iter().filter(|c| ti.contains(&c.tp)).count();
        common as f64 / n_union as f64
    };
    let sum = spatial + temporal + shared;
    if sum <= 0.0 {
        RELATEDNESS_CAP
    } else {
        1.0 / sum
    }
}

pub fn tp_union_size(prob: &Problem) -> usize {
    let all: BTreeSet<usize> = (0..prob.n()).flat_map(|r| prob.tps(r).iter().map(|c| c.tp)).collect();
    all.len()
}

/// Remove customers with the chosen operator; returns those removed.
pub fn destroy(prob: &Problem, sol: &mut Solution, op: Operator, n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let pool = served(sol);
    if pool.is_empty() {
        return Vec::new();
    }
    let n = n.min(pool.len());
    let pick: Vec<usize> = match op {
        Operator::DestroyRandom => pool.choose_multiple(rng, n).copied().collect(),
        Operator::DestroyWorst => worst_customers(prob, sol).into_iter().take(n).map(|(r, _)| r).collect(),
        Operator::DestroyRelated => {
            let seed = *pool.choose(rng).unwrap();
            let nu = tp_union_size(prob);
            let cmax = prob.max_arc_distance();
            let mut others: Vec<(usize, f64)> = pool
                .iter()
                .filter(|&&r| r != seed)
                .map(|&r| (r, relatedness(prob, sol, seed, r, nu, cmax)))
                .collect();
            others.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            std::iter::once(seed)
                .chain(others.into_iter().take(n - 1).map(|(r, _)| r))
                .collect()
        }
        Operator::DestroyRoute => {
            let used: Vec<usize> = (0..sol.routes.len()).filter(|&k| sol.routes[k].is_used()).collect();
            match used.choose(rng) {
                Some(&k) => sol.routes[k].requests(),
                None => Vec::new(),
            }
        }
        _ => unreachable!("not a destroy operator"),
    };
    remove_customers(prob, sol, &pick)
}

// ---------------------------------------------------------------------------
// repair

fn insert_best(prob: &Problem, sol: &mut Solution, r: usize, filter: &InsertFilter) -> bool {
    match best_insertion(prob, sol, r, filter) {
        Some(ins) => {
            apply_insertion(prob, sol, ins);
            true
        }
        None => false,
    }
}

fn by_earliest(prob: &Problem, v: &mut [usize]) {
    v.sort_by(|&a, &b| {
        prob.requests[a]
            .origin_tw
            .e
            .total_cmp(&prob.requests[b].origin_tw.e)
            .then(a.cmp(&b))
    });
}

/// Insert rejected customers with the chosen operator.
pub fn repair(prob: &Problem, sol: &mut Solution, op: Operator, rng: &mut ChaCha8Rng) {
    let all = InsertFilter::default();
    let mut pool: Vec<usize> = sol.rejected.iter().copied().collect();
    match op {
        Operator::RepairRandom => {
            pool.shuffle(rng);
            for r in pool {
                insert_best(prob, sol, r, &all);
            }
        }
        Operator::RepairGreedy => {
            while !pool.is_empty() {
                let mut best: Option<(usize, crate::insertion::Insertion)> = None;
                for (idx, &r) in pool.iter().enumerate() {
                    if let Some(ins) = best_insertion(prob, sol, r, &all) {
                        if best.as_ref().is_none_or(|(_, b)| ins.cost < b.cost) {
                            best = Some((idx, ins));
                        }
                    }
                }
                let Some((idx, ins)) = best else { break };
                pool.remove(idx);
                apply_insertion(prob, sol, ins);
            }
        }
        Operator::RepairRegret => {
            let k = if rng.gen_bool(0.5) { 2 } else { 3 };
            regret_repair(prob, sol, &mut pool, k);
        }
        Operator::RepairTpPriority => {
            let (mut first, mut rest): (Vec<usize>, Vec<usize>) =
                pool.into_iter().partition(|&r| !prob.tps(r).is_empty());
            by_earliest(prob, &mut first);
            by_earliest(prob, &mut rest);
            for r in first.into_iter().chain(rest) {
                insert_best(prob, sol, r, &all);
            }
        }
        Operator::RepairTp => tp_group_repair(prob, sol, pool),
        _ => unreachable!("not a repair operator"),
    }
}

/// Regret value: summed gaps between the best and the next `k − 1`
/// alternatives, a missing alternative costing the rejection penalty.
pub fn regret_value(costs: &[f64], k: usize, omega: f64) -> f64 {
    let best = costs[0];
    (1..k).map(|h| costs.get(h).copied().unwrap_or(omega) - best).sum()
}

fn regret_repair(prob: &Problem, sol: &mut Solution, pool: &mut Vec<usize>, k: usize) {
    let omega = prob.params().omega;
    while !pool.is_empty() {
        let mut best: Option<(f64, f64, usize, crate::insertion::Insertion)> = None;
        for (idx, &r) in pool.iter().enumerate() {
            let cands = insertion_candidates(prob, sol, r, &InsertFilter::default());
            if cands.is_empty() {
                continue;
            }
            let costs: Vec<f64> = cands.iter().map(|c| c.cost).collect();
            let reg = regret_value(&costs, k, omega);
            let better = match &best {
                None => true,
                Some((br, bc, _, _)) => reg > *br + 1e-12 || ((reg - *br).abs() <= 1e-12 && costs[0] < *bc),
            };
            if better {
                let ins = cands.into_iter().next().unwrap();
                best = Some((reg, costs[0], idx, ins));
            }
        }
        let Some((_, _, idx, ins)) = best else { break };
        pool.remove(idx);
        apply_insertion(prob, sol, ins);
    }
}

/// Customers sharing a transit pair are inserted together on that pair,
/// largest group first; the rest get their best insertion.
fn tp_group_repair(prob: &Problem, sol: &mut Solution, pool: Vec<usize>) {
    let mut left: Vec<usize> = pool;
    loop {
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for &r in &left {
            for c in prob.tps(r) {
                groups.entry(c.tp).or_default().push(r);
            }
        }
        let Some((&tp, members)) = groups
            .iter()
            .filter(|(_, m)| m.len() >= 2)
            .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(a.0)))
        else {
            break;
        };
        let mut members = members.clone();
        by_earliest(prob, &mut members);
        let filter = InsertFilter {
            tp: Some(tp),
            mask: crate::insertion::OptionMask::only(&[1, 2, 3, 4]),
            ..Default::default()
        };
        for r in &members {
            insert_best(prob, sol, *r, &filter);
        }
        left.retain(|r| !members.contains(r));
        left.retain(|r| sol.rejected.contains(r));
        // members that did not fit on the shared pair are retried below
        let missed: Vec<usize> = members.into_iter().filter(|r| sol.rejected.contains(r)).collect();
        for r in missed {
            insert_best(prob, sol, r, &InsertFilter::default());
        }
    }
    by_earliest(prob, &mut left);
    for r in left {
        insert_best(prob, sol, r, &InsertFilter::default());
    }
}

// ---------------------------------------------------------------------------
// local search

/// Remove `r` and insert it again under `filter`; kept only if the objective
/// drops.
fn try_reinsert(prob: &Problem, sol: &mut Solution, r: usize, filter: &InsertFilter) -> bool {
    let mut s = sol.clone();
    let removed = remove_customers(prob, &mut s, &[r]);
    if removed.len() != 1 {
        return false;
    }
    if !insert_best(prob, &mut s, r, filter) {
        return false;
    }
    if s.objective < sol.objective - 1e-9 {
        *sol = s;
        true
    } else {
        false
    }
}

fn remap(m: Mile, a: usize, b: usize) -> Mile {
    match m {
        Mile::Bus(k) if k == a => Mile::Bus(b),
        Mile::Bus(k) if k == b => Mile::Bus(a),
        other => other,
    }
}

/// Give the stop sequence of route `a` to bus `b` and vice versa.
pub fn exchange_buses(prob: &Problem, sol: &Solution, a: usize, b: usize) -> Option<Solution> {
    let mut s = sol.clone();
    let swap_depots = |stops: &[Stop], bus: usize| -> Vec<Stop> {
        let bk = prob.bus(bus);
        let mut st: Vec<Stop> = stops.iter().copied().filter(|x| !x.is_charger()).collect();
        let n = st.len();
        st[0] = Stop::OriginDepot { depot: bk.origin_depot };
        st[n - 1] = Stop::DestDepot { depot: bk.dest_depot };
        st
    };
    let sa = swap_depots(&sol.routes[b].stops, sol.routes[a].bus);
    let sb = swap_depots(&sol.routes[a].stops, sol.routes[b].bus);
    s.routes[a].stops = sa;
    s.routes[b].stops = sb;
    for j in s.journeys.iter_mut().flatten() {
        j.plan.first = remap(j.plan.first, a, b);
        j.plan.last = remap(j.plan.last, a, b);
    }
    for k in [a, b] {
        let route = &mut s.routes[k];
        let n = route.stops.len();
        route.schedule = RouteSchedule::propagate(prob, route.bus, &route.stops, 0.0, &vec![f64::NEG_INFINITY; n]);
    }
    for k in [a, b] {
        let stops = s.routes[k].stops.clone();
        let out = {
            let view = View::new(&s);
            evaluate_route(prob, &view, k, &stops).ok()?
        };
        for (sigma, sch) in out.others {
            s.routes[sigma].schedule = sch;
        }
        s.routes[k] = out.route;
    }
    // the first route may depend on the second through shared journeys
    if !(route_is_valid(prob, &s, a) && route_is_valid(prob, &s, b)) {
        return None;
    }
    rebuild_calendars(prob, &mut s);
    s.refresh(prob);
    Some(s)
}

fn ls_bus_exchange(prob: &Problem, sol: &mut Solution) -> bool {
    let mut improved = false;
    let n = sol.routes.len();
    for a in 0..n {
        if !sol.routes[a].is_used() {
            continue;
        }
        for b in 0..n {
            if a == b {
                continue;
            }
            let (ba, bb) = (prob.bus(sol.routes[a].bus), prob.bus(sol.routes[b].bus));
            if ba.origin_depot == bb.origin_depot {
                continue;
            }
            if let Some(s) = exchange_buses(prob, sol, a, b) {
                if s.objective < sol.objective - 1e-9 {
                    *sol = s;
                    improved = true;
                    break;
                }
            }
        }
    }
    improved
}

fn transit_users(sol: &Solution) -> Vec<(usize, Plan)> {
    sol.journeys
        .iter()
        .flatten()
        .filter(|j| j.plan.uses_transit())
        .map(|j| (j.req, j.plan))
        .collect()
}

fn ls_exchange_tp(prob: &Problem, sol: &mut Solution) -> bool {
    let mut improved = false;
    for (r, plan) in transit_users(sol) {
        if sol.plan(r) != Some(plan) {
            continue;
        }
        let filter = InsertFilter {
            mask: crate::insertion::OptionMask::only(&[1, 2, 3, 4]),
            exclude_tp: plan.tp,
            tp: None,
            used_only: false,
        };
        improved |= try_reinsert(prob, sol, r, &filter);
    }
    improved
}

fn ls_tp_to_bus(prob: &Problem, sol: &mut Solution) -> bool {
    let mut improved = false;
    for (r, plan) in transit_users(sol) {
        if sol.plan(r) != Some(plan) {
            continue;
        }
        improved |= try_reinsert(prob, sol, r, &InsertFilter::options(&[5]));
    }
    improved
}

fn ls_reassign_bus(prob: &Problem, sol: &mut Solution) -> bool {
    let mut improved = false;
    for (r, plan) in transit_users(sol) {
        if sol.plan(r) != Some(plan) || plan.routes().is_empty() {
            continue;
        }
        let filter = InsertFilter {
            mask: crate::insertion::OptionMask::only(&[plan.option]),
            tp: plan.tp,
            exclude_tp: None,
            used_only: false,
        };
        improved |= try_reinsert(prob, sol, r, &filter);
    }
    improved
}

fn ls_walk_to_bus(prob: &Problem, sol: &mut Solution) -> bool {
    let mut improved = false;
    for (r, plan) in transit_users(sol) {
        if sol.plan(r) != Some(plan) {
            continue;
        }
        let options: &[u8] = match plan.option {
            1 => &[2, 3, 4],
            2 | 3 => &[4],
            _ => continue,
        };
        let filter = InsertFilter {
            mask: crate::insertion::OptionMask::only(options),
            tp: plan.tp,
            exclude_tp: None,
            used_only: false,
        };
        improved |= try_reinsert(prob, sol, r, &filter);
    }
    improved
}

/// Ordered passes over the enabled operators until a full pass finds nothing.
pub fn local_search(prob: &Problem, sol: &mut Solution, disabled: &BTreeSet<Operator>) {
    loop {
        let mut improved = false;
        for op in Operator::LOCAL {
            if disabled.contains(&op) {
                continue;
            }
            improved |= match op {
                Operator::LsBusExchange => ls_bus_exchange(prob, sol),
                Operator::LsExchangeTp => ls_exchange_tp(prob, sol),
                Operator::LsTpToBus => ls_tp_to_bus(prob, sol),
                Operator::LsReassignBus => ls_reassign_bus(prob, sol),
                Operator::LsWalkToBus => ls_walk_to_bus(prob, sol),
                _ => false,
            };
        }
        if !improved {
            break;
        }
    }
}

// ---------------------------------------------------------------------------
// driver

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best: Solution,
    pub initial_objective: f64,
    /// Best objective after each iteration.
    pub trace: Vec<f64>,
}

pub fn run(prob: &Problem, cfg: &SearchConfig) -> SearchResult {
    run_observed(prob, cfg, &mut |_| {})
}

/// `run`, calling `on_accept` with the initial solution and every incumbent
/// accepted afterwards.
pub fn run_observed(prob: &Problem, cfg: &SearchConfig, on_accept: &mut dyn FnMut(&Solution)) -> SearchResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let destroys = cfg.enabled(&Operator::DESTROY);
    let repairs = cfg.enabled(&Operator::REPAIR);
    let mut s = construct_initial(prob);
    s.seed = cfg.seed;
    let initial_objective = s.objective;
    on_accept(&s);
    let mut best = s.clone();
    let t_max = cfg.t_max_factor * prob.mean_arc_distance();
    let mut temp = t_max;
    let max_destroy = ((prob.n() as f64 * cfg.xi_max).ceil() as usize).max(1);
    let mut trace = Vec::with_capacity(cfg.n_iter);
    log::info!("seed {}: initial objective {:.3}", cfg.seed, initial_objective);
    for it in 0..cfg.n_iter {
        let d = *destroys.choose(&mut rng).unwrap();
        let r = *repairs.choose(&mut rng).unwrap();
        let n_destroy = rng.gen_range(1..=max_destroy);
        let mut s1 = s.clone();
        destroy(prob, &mut s1, d, n_destroy, &mut rng);
        repair(prob, &mut s1, r, &mut rng);
        if s1.objective < cfg.alpha_ls * best.objective {
            local_search(prob, &mut s1, &cfg.disabled);
        }
        temp -= t_max / cfg.t_red;
        if temp <= 0.0 {
            temp = t_max;
        }
        if s1.objective < best.objective + temp {
            s = s1.clone();
            on_accept(&s);
        }
        if s1.objective < best.objective {
            best = s1;
        }
        trace.push(best.objective);
        log::debug!(
            "seed {} iter {}: {} + {} -> {:.3}, best {:.3}",
            cfg.seed,
            it + 1,
            d,
            r,
            s.objective,
            best.objective
        );
    }
    log::info!("seed {}: best objective {:.3}", cfg.seed, best.objective);
    SearchResult {
        best,
        initial_objective,
        trace,
    }
}

/// Independent runs with seeds `seed, seed + 1, ...`; the best objective
/// wins, ties going to the smaller seed.
pub fn run_many(prob: &Problem, cfg: &SearchConfig, runs: usize, jobs: usize) -> Vec<SearchResult> {
    let one = |i: usize| {
        let mut c = cfg.clone();
        c.seed = cfg.seed.wrapping_add(i as u64);
        run(prob, &c)
    };
    if jobs <= 1 {
        (0..runs).map(one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool");
        pool.install(|| (0..runs).into_par_iter().map(one).collect())
    }
}

pub fn best_of(results: &[SearchResult]) -> Option<&SearchResult> {
    results.iter().min_by(|a, b| {
        a.best
            .objective
            .total_cmp(&b.best.objective)
            .then(a.best.seed.cmp(&b.best.seed))
    })
}
