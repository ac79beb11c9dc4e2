//! Exhaustive solver for tiny instances.
//!
//! Customers are assigned in turn to rejection, a door-to-door bus ride or a
//! transit journey with every admissible (pair, option, bus) combination.
//! The cheapest feasible stop ordering of each bus is memoised per set of
//! legs; since adding legs never makes a bus cheaper, the sum of these
//! minima bounds every completion and prunes the assignment tree. Timing is
//! decided exactly by a temporal network; each bus may recharge once, for
//! the shortest time that keeps its battery within bounds.

use std::collections::HashMap;
use std::rc::Rc;

use crate::charging::rebuild_calendars;
use crate::error::{Error, Result};
use crate::feasibility::RouteSchedule;
use crate::model::{EPS_ENERGY, EPS_TIME};
use crate::problem::Problem;
use crate::solution::{Mile, Plan, Route, Solution, Stop};

use super::{drive, loc, schedule_net, svc, walk, StopSequence};

#[derive(Debug, Clone, Copy)]
pub struct ExactLimits {
    pub max_requests: usize,
    pub max_buses: usize,
    pub max_nodes: usize,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits {
            max_requests: 4,
            max_buses: 2,
            max_nodes: 12,
        }
    }
}

fn mile_code(m: Mile) -> i64 {
    match m {
        Mile::None => -1,
        Mile::Walk => -2,
        Mile::Bus(k) => k as i64,
    }
}

fn mile_of(c: i64) -> Mile {
    match c {
        -1 => Mile::None,
        -2 => Mile::Walk,
        k => Mile::Bus(k as usize),
    }
}

/// One bus leg of a customer together with the full plan it belongs to, so
/// that the memo key determines every constraint the leg takes part in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Leg {
    req: usize,
    option: u8,
    tp: usize,
    first: i64,
    last: i64,
    /// 0 door to door, 1 first mile, 2 last mile
    part: u8,
}

impl Leg {
    fn plan(&self) -> Plan {
        Plan {
            option: self.option,
            tp: (self.tp != usize::MAX).then_some(self.tp),
            first: mile_of(self.first),
            last: mile_of(self.last),
        }
    }

    fn stops(&self, prob: &Problem) -> (Stop, Stop) {
        let r = self.req;
        match self.part {
            0 => (Stop::Pickup { req: r }, Stop::Dropoff { req: r }),
            1 => (
                Stop::Pickup { req: r },
                Stop::TransitDrop {
                    req: r,
                    node: prob.graph.pairs[self.tp].entry,
                },
            ),
            _ => (
                Stop::TransitPick {
                    req: r,
                    node: prob.graph.pairs[self.tp].exit,
                },
                Stop::Dropoff { req: r },
            ),
        }
    }
}

#[derive(Debug, Clone)]
struct Choice {
    plan: Option<Plan>,
    fixed: f64,
    legs: Vec<(usize, Leg)>,
}

fn choices(prob: &Problem, r: usize) -> Vec<Choice> {
    let p = prob.params();
    let nb = prob.instance.buses.len();
    let tr = &prob.requests[r];
    let mut out = vec![Choice {
        plan: None,
        fixed: p.omega,
        legs: vec![],
    }];
    let leg = |plan: &Plan, part: u8| Leg {
        req: r,
        option: plan.option,
        tp: plan.tp.unwrap_or(usize::MAX),
        first: mile_code(plan.first),
        last: mile_code(plan.last),
        part,
    };
    for k in 0..nb {
        let plan = Plan::bus_only(k);
        out.push(Choice {
            plan: Some(plan),
            fixed: 0.0,
            legs: vec![(k, leg(&plan, 0))],
        });
    }
    for ct in &prob.graph.per_customer[r] {
        let pair = &prob.graph.pairs[ct.tp];
        let (entry, exit) = (&prob.graph.nodes[pair.entry], &prob.graph.nodes[pair.exit]);
        let transit = exit.theta_arr - entry.theta_dep;
        let wf = walk(prob, tr.origin, entry.location);
        let wl = walk(prob, exit.location, tr.destination);
        let mut firsts = vec![];
        if let Some(w) = wf {
            firsts.push((Mile::Walk, w));
        }
        let mut lasts = vec![];
        if let Some(w) = wl {
            lasts.push((Mile::Walk, w));
        }
        for k in 0..nb {
            firsts.push((Mile::Bus(k), 0.0));
            lasts.push((Mile::Bus(k), 0.0));
        }
        for &(f, wf) in &firsts {
            for &(l, wl) in &lasts {
                let option = match (f, l) {
                    (Mile::Walk, Mile::Walk) => 1,
                    (Mile::Bus(_), Mile::Walk) => 2,
                    (Mile::Walk, Mile::Bus(_)) => 3,
                    _ => 4,
                };
                if !ct.allows(option) {
                    continue;
                }
                let plan = Plan::with_transit(option, ct.tp, f, l);
                let mut legs = vec![];
                if let Mile::Bus(k) = f {
                    legs.push((k, leg(&plan, 1)));
                }
                if let Mile::Bus(k) = l {
                    legs.push((k, leg(&plan, 2)));
                }
                out.push(Choice {
                    plan: Some(plan),
                    fixed: p.lambda2 * (transit + wf + wl),
                    legs,
                });
            }
        }
    }
    out
}

/// A feasible ordering of one bus.
#[derive(Debug, Clone)]
struct Cand {
    cost: f64,
    stops: Vec<Stop>,
    /// (stop index, charger) of the single charging visit
    charge: Option<(usize, usize)>,
}

fn route_cost(prob: &Problem, bus: usize, stops: &[Stop]) -> f64 {
    let p = prob.params();
    let arcs: Vec<f64> = stops.windows(2).map(|w| drive(prob, bus, &w[0], &w[1])).collect();
    let mut in_bus = 0.0;
    for (i, s) in stops.iter().enumerate() {
        if s.is_boarding() {
            let r = s.req();
            if let Some(j) = stops[i + 1..].iter().position(|t| t.req() == r && !t.is_boarding()) {
                in_bus += arcs[i..i + 1 + j].iter().sum::<f64>();
            }
        }
    }
    p.lambda1 * arcs.iter().sum::<f64>() + p.lambda2 * in_bus
}

struct Solver<'a> {
    prob: &'a Problem,
    memo: HashMap<(usize, Vec<Leg>), Rc<Vec<Cand>>>,
}

impl<'a> Solver<'a> {
    fn plan_lookup(legs: &[Leg]) -> impl Fn(usize) -> Option<Plan> + '_ {
        move |r| legs.iter().find(|l| l.req == r).map(|l| l.plan())
    }

    fn candidates(&mut self, bus: usize, mut legs: Vec<Leg>) -> Rc<Vec<Cand>> {
        legs.sort();
        let key = (bus, legs);
        if let Some(c) = self.memo.get(&key) {
            return c.clone();
        }
        let cands = Rc::new(self.enumerate(bus, &key.1));
        self.memo.insert(key, cands.clone());
        cands
    }

    fn enumerate(&self, bus: usize, legs: &[Leg]) -> Vec<Cand> {
        let prob = self.prob;
        let bk = prob.bus(bus);
        let pairs: Vec<(Stop, Stop)> = legs.iter().map(|l| l.stops(prob)).collect();
        let mut seqs = Vec::new();
        let mut seq = vec![Stop::OriginDepot { depot: bk.origin_depot }];
        let mut state = vec![0u8; legs.len()];
        self.orderings(bus, &pairs, &mut state, &mut seq, 0.0, 0, &mut seqs);

        let plan_of = Self::plan_lookup(legs);
        let mut out = Vec::new();
        for stops in seqs {
            if energy_ok(prob, bus, &stops) {
                let net = schedule_net(
                    prob,
                    &[StopSequence {
                        route: bus,
                        bus,
                        stops: &stops,
                    }],
                    &plan_of,
                    false,
                );
                if net.stn.solve(EPS_TIME).is_some() {
                    out.push(Cand {
                        cost: route_cost(prob, bus, &stops),
                        stops,
                        charge: None,
                    });
                }
                continue;
            }
            for cand in with_charge(prob, bus, &stops) {
                let net = schedule_net(
                    prob,
                    &[StopSequence {
                        route: bus,
                        bus,
                        stops: &cand.stops,
                    }],
                    &plan_of,
                    true,
                );
                if net.stn.solve(EPS_TIME).is_some() {
                    out.push(cand);
                }
            }
        }
        out.sort_by(|a, b| a.cost.total_cmp(&b.cost));
        out
    }

    /// Orderings with boarding before alighting, pruned by capacity and by
    /// earliest possible service times.
    #[allow(clippy::too_many_arguments)]
    fn orderings(
        &self,
        bus: usize,
        pairs: &[(Stop, Stop)],
        state: &mut [u8],
        seq: &mut Vec<Stop>,
        t: f64,
        load: u32,
        out: &mut Vec<Vec<Stop>>,
    ) {
        let prob = self.prob;
        let p = prob.params();
        let bk = prob.bus(bus);
        let last = *seq.last().unwrap();
        if state.iter().all(|s| *s == 2) {
            let end = Stop::DestDepot { depot: bk.dest_depot };
            if t + svc(prob, &last) + drive(prob, bus, &last, &end) <= p.t_end + EPS_TIME {
                let mut v = seq.clone();
                v.push(end);
                out.push(v);
            }
            return;
        }
        for i in 0..pairs.len() {
            if state[i] == 2 {
                continue;
            }
            let s = if state[i] == 0 { pairs[i].0 } else { pairs[i].1 };
            let new_load = if state[i] == 0 { load + 1 } else { load - 1 };
            if new_load > bk.capacity {
                continue;
            }
            let arrive = t + svc(prob, &last) + drive(prob, bus, &last, &s);
            let b = match s {
                Stop::Pickup { req } => {
                    let w = prob.requests[req].origin_tw;
                    (arrive <= w.l + EPS_TIME).then(|| arrive.max(w.e))
                }
                Stop::Dropoff { req } => {
                    let w = prob.requests[req].dest_tw;
                    (arrive <= w.l + EPS_TIME).then(|| arrive.max(w.e))
                }
                Stop::TransitDrop { node, .. } => {
                    let th = prob.graph.nodes[node].theta_dep;
                    (arrive <= th + EPS_TIME).then(|| arrive.max(th - p.gamma))
                }
                Stop::TransitPick { node, .. } => {
                    let th = prob.graph.nodes[node].theta_arr;
                    (arrive <= th + p.gamma + EPS_TIME).then(|| arrive.max(th))
                }
                _ => Some(arrive),
            };
            let Some(b) = b else { continue };
            state[i] += 1;
            seq.push(s);
            self.orderings(bus, pairs, state, seq, b, new_load, out);
            seq.pop();
            state[i] -= 1;
        }
    }

    /// Cheapest joint schedule of the chosen legs, or `None`.
    fn leaf(&mut self, per_bus: &[Vec<Leg>], bound: f64) -> Option<(f64, Vec<Cand>)> {
        let nb = per_bus.len();
        let lists: Vec<Rc<Vec<Cand>>> = (0..nb).map(|k| self.candidates(k, per_bus[k].clone())).collect();
        let idle = |k: usize| per_bus[k].is_empty();
        for k in 0..nb {
            if !idle(k) && lists[k].is_empty() {
                return None;
            }
        }
        let empty_cand = |_k: usize| Cand {
            cost: 0.0,
            stops: vec![],
            charge: None,
        };
        if nb == 1 {
            return Some(if idle(0) {
                (0.0, vec![empty_cand(0)])
            } else {
                (lists[0][0].cost, vec![lists[0][0].clone()])
            });
        }
        // two buses
        let coupled_legs = per_bus[0].iter().any(|l| per_bus[1].iter().any(|m| m.req == l.req));
        let opts: Vec<Vec<Cand>> = (0..2)
            .map(|k| {
                if idle(k) {
                    vec![empty_cand(k)]
                } else {
                    lists[k].to_vec()
                }
            })
            .collect();
        let mut best: Option<(f64, Vec<Cand>)> = None;
        let mut limit = bound;
        for a in &opts[0] {
            if a.cost + opts[1][0].cost >= limit {
                break;
            }
            for b in &opts[1] {
                let total = a.cost + b.cost;
                if total >= limit {
                    break;
                }
                let shared = matches!((a.charge, b.charge), (Some((_, c1)), Some((_, c2))) if c1 == c2);
                if (coupled_legs || shared) && !self.joint_ok(per_bus, a, b) {
                    continue;
                }
                limit = total;
                best = Some((total, vec![a.clone(), b.clone()]));
                break;
            }
        }
        best
    }

    fn joint_ok(&self, per_bus: &[Vec<Leg>], a: &Cand, b: &Cand) -> bool {
        joint_times(self.prob, per_bus, &[a, b]).is_some()
    }
}

/// Service start times for the chosen orderings of every bus, charger
/// contention included.
fn joint_times(prob: &Problem, per_bus: &[Vec<Leg>], cands: &[&Cand]) -> Option<Vec<Vec<f64>>> {
    let all: Vec<Leg> = per_bus.iter().flatten().copied().collect();
    let plan_of = |r: usize| all.iter().find(|l| l.req == r).map(|l| l.plan());
    let seqs: Vec<StopSequence> = cands
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.stops.is_empty())
        .map(|(k, c)| StopSequence {
            route: k,
            bus: k,
            stops: &c.stops,
        })
        .collect();
    let net = schedule_net(prob, &seqs, &plan_of, true);
    // charging visits per charger: (network variable, duration)
    let mut visits: Vec<(usize, usize, f64)> = Vec::new();
    for (si, sq) in seqs.iter().enumerate() {
        for (i, s) in sq.stops.iter().enumerate() {
            if let Stop::Charger { charger, duration, .. } = *s {
                visits.push((charger, net.vars[si][i], duration));
            }
        }
    }
    let contended: Vec<(usize, usize)> = (0..visits.len())
        .flat_map(|i| (i + 1..visits.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| visits[i].0 == visits[j].0)
        .collect();
    // every contended pair in either order
    for mask in 0..(1u32 << contended.len()) {
        let mut stn = net.stn.clone();
        for (bit, &(i, j)) in contended.iter().enumerate() {
            let (first, second) = if mask >> bit & 1 == 0 { (i, j) } else { (j, i) };
            stn.ge(visits[second].1, visits[first].1, visits[first].2);
        }
        if let Some(x) = stn.solve_earliest(EPS_TIME) {
            let mut out = Vec::new();
            let mut si = 0;
            for c in cands {
                if c.stops.is_empty() {
                    out.push(vec![]);
                } else {
                    out.push(net.vars[si].iter().map(|&v| x[v]).collect());
                    si += 1;
                }
            }
            return Some(out);
        }
    }
    None
}

fn energy_ok(prob: &Problem, bus: usize, stops: &[Stop]) -> bool {
    let bk = prob.bus(bus);
    let mut e = bk.e_init;
    for w in stops.windows(2) {
        e -= loc(prob, &w[0]).dist(&loc(prob, &w[1])) * bk.consumption;
        if e < bk.e_min - EPS_ENERGY {
            return false;
        }
    }
    true
}

/// The ordering with one charging visit at each empty-bus position and each
/// charger, charging exactly the shortfall.
fn with_charge(prob: &Problem, bus: usize, stops: &[Stop]) -> Vec<Cand> {
    let bk = prob.bus(bus);
    let mut out = Vec::new();
    let mut load = 0i32;
    for pos in 0..stops.len() - 1 {
        load += match stops[pos] {
            Stop::Pickup { .. } | Stop::TransitPick { .. } => 1,
            Stop::Dropoff { .. } | Stop::TransitDrop { .. } => -1,
            _ => 0,
        };
        if load != 0 {
            continue;
        }
        for (c, ch) in prob.instance.chargers.iter().enumerate() {
            let mut v = stops.to_vec();
            v.insert(
                pos + 1,
                Stop::Charger {
                    charger: c,
                    start: 0.0,
                    duration: 0.0,
                },
            );
            // arrival SoC without charging
            let mut soc = vec![bk.e_init];
            for w in v.windows(2) {
                let e = soc.last().unwrap() - loc(prob, &w[0]).dist(&loc(prob, &w[1])) * bk.consumption;
                soc.push(e);
            }
            let ci = pos + 1;
            if soc[..=ci].iter().any(|e| *e < bk.e_min - EPS_ENERGY) {
                continue;
            }
            let low = soc[ci + 1..].iter().copied().fold(f64::INFINITY, f64::min);
            let need = bk.e_min - low;
            if need <= 0.0 || soc[ci] + need > bk.e_max + EPS_ENERGY {
                continue;
            }
            let duration = need / ch.power;
            v[ci] = Stop::Charger {
                charger: c,
                start: 0.0,
                duration,
            };
            out.push(Cand {
                cost: route_cost(prob, bus, &v),
                stops: v,
                charge: Some((ci, c)),
            });
        }
    }
    out
}

/// Minimum-objective feasible solution of a tiny instance.
///
/// Exact except that each bus charges at most once; refuses instances above
/// `limits`.
pub fn brute_force_solve(prob: &Problem, limits: ExactLimits) -> Result<Solution> {
    let n = prob.n();
    let nb = prob.instance.buses.len();
    let nodes = prob.graph.nodes.len();
    if n > limits.max_requests || nb > limits.max_buses || nodes > limits.max_nodes {
        return Err(Error::TooLarge(format!(
            "{n} requests, {nb} buses, {nodes} transit nodes (limits {}, {}, {})",
            limits.max_requests, limits.max_buses, limits.max_nodes
        )));
    }
    let all_choices: Vec<Vec<Choice>> = (0..n).map(|r| choices(prob, r)).collect();
    let mut solver = Solver {
        prob,
        memo: HashMap::new(),
    };
    let mut best: Option<(f64, Vec<Option<Plan>>, Vec<Cand>)> = None;
    let mut picked: Vec<usize> = Vec::with_capacity(n);
    let mut per_bus: Vec<Vec<Leg>> = vec![Vec::new(); nb];
    dfs(&mut solver, &all_choices, &mut picked, &mut per_bus, 0.0, &mut best);

    let (_, plans, cands) = best.expect("rejecting everyone is always feasible");
    let per_bus: Vec<Vec<Leg>> = {
        let mut v = vec![Vec::new(); nb];
        for (r, plan) in plans.iter().enumerate() {
            if let Some(plan) = plan {
                let ch = all_choices[r].iter().find(|c| c.plan == Some(*plan)).unwrap();
                for &(k, l) in &ch.legs {
                    v[k].push(l);
                }
            }
        }
        v
    };
    let refs: Vec<&Cand> = cands.iter().collect();
    let times = joint_times(prob, &per_bus, &refs).expect("chosen orderings are jointly feasible");

    let mut sol = Solution::empty(prob);
    let cst = prob.params().charge_service_time;
    for k in 0..nb {
        if cands[k].stops.is_empty() {
            continue;
        }
        let mut stops = cands[k].stops.clone();
        let b = &times[k];
        for (i, s) in stops.iter_mut().enumerate() {
            if let Stop::Charger { start, .. } = s {
                *start = b[i] + cst;
            }
        }
        let schedule = RouteSchedule::propagate(prob, k, &stops, b[0], b);
        sol.routes[k] = Route {
            bus: k,
            stops,
            schedule,
        };
    }
    for (r, plan) in plans.iter().enumerate() {
        if let Some(plan) = plan {
            sol.journeys[r] = Some(sol.journey_from_routes(prob, r, *plan));
            sol.rejected.remove(&r);
        }
    }
    rebuild_calendars(prob, &mut sol);
    sol.refresh(prob);
    Ok(sol)
}

fn dfs(
    solver: &mut Solver,
    all: &[Vec<Choice>],
    picked: &mut Vec<usize>,
    per_bus: &mut Vec<Vec<Leg>>,
    fixed: f64,
    best: &mut Option<(f64, Vec<Option<Plan>>, Vec<Cand>)>,
) {
    let bound = best.as_ref().map_or(f64::INFINITY, |b| b.0);
    // lower bound: fixed costs so far plus each bus's cheapest ordering
    let mut lb = fixed;
    for (k, legs) in per_bus.iter().enumerate() {
        if legs.is_empty() {
            continue;
        }
        let c = solver.candidates(k, legs.clone());
        match c.first() {
            Some(c) => lb += c.cost,
            None => return,
        }
    }
    if lb >= bound - 1e-12 {
        return;
    }
    let r = picked.len();
    if r == all.len() {
        if let Some((routes_cost, cands)) = solver.leaf(per_bus, bound - fixed) {
            let total = fixed + routes_cost;
            if total < bound {
                let plans = picked.iter().enumerate().map(|(r, &c)| all[r][c].plan).collect();
                *best = Some((total, plans, cands));
            }
        }
        return;
    }
    for (ci, ch) in all[r].iter().enumerate() {
        for &(k, l) in &ch.legs {
            per_bus[k].push(l);
        }
        picked.push(ci);
        dfs(solver, all, picked, per_bus, fixed + ch.fixed, best);
        picked.pop();
        for &(k, _) in &ch.legs {
            per_bus[k].pop();
        }
    }
}
