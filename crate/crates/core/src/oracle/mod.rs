//! Ground truth independent of the solver: a full-constraint verifier, an
//! exact schedule-existence check on simple temporal networks, and an
//! exhaustive solver for tiny instances.
//!
//! Nothing here calls into the feasibility or charging engines; geometry and
//! time windows are recomputed from the instance.

mod exact;
pub mod stn;

pub use exact::{brute_force_solve, ExactLimits};

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::model::{Point, EPS_ENERGY, EPS_TIME};
use crate::problem::Problem;
use crate::solution::{Mile, Plan, Solution, Stop};
use stn::Stn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Depot,
    Pairing,
    TransitLeg,
    SameBus,
    Capacity,
    Schedule,
    TimeWindow,
    Transfer,
    Walk,
    JourneyTime,
    Energy,
    ChargerOverlap,
    Objective,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub family: Family,
    pub route: Option<usize>,
    pub stop: Option<usize>,
    pub req: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.family)?;
        if let Some(k) = self.route {
            write!(f, " route {k}")?;
        }
        if let Some(i) = self.stop {
            write!(f, " stop {i}")?;
        }
        if let Some(r) = self.req {
            write!(f, " request {r}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub findings: Vec<Finding>,
    /// Objective recomputed from routes and plans.
    pub objective: f64,
    pub cached_objective: f64,
}

impl VerifyReport {
    pub fn is_feasible(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn families(&self) -> Vec<Family> {
        let mut v: Vec<Family> = self.findings.iter().map(|f| f.family).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn has(&self, fam: Family) -> bool {
        self.findings.iter().any(|f| f.family == fam)
    }
}

/// Absolute tolerance between cached and recomputed objective.
pub const OBJECTIVE_TOL: f64 = 1e-9;

struct Ctx<'a> {
    prob: &'a Problem,
    out: Vec<Finding>,
}

impl Ctx<'_> {
    fn flag(&mut self, family: Family, route: Option<usize>, stop: Option<usize>, req: Option<usize>, detail: String) {
        self.out.push(Finding {
            family,
            route,
            stop,
            req,
            detail,
        });
    }
}

fn loc(prob: &Problem, s: &Stop) -> Point {
    let inst = &prob.instance;
    match *s {
        Stop::OriginDepot { depot } | Stop::DestDepot { depot } => inst.depots[depot],
        Stop::Pickup { req } => inst.requests[req].origin,
        Stop::Dropoff { req } => inst.requests[req].destination,
        Stop::TransitDrop { node, .. } | Stop::TransitPick { node, .. } => prob.graph.nodes[node].location,
        Stop::Charger { charger, .. } => inst.chargers[charger].location,
    }
}

fn svc(prob: &Problem, s: &Stop) -> f64 {
    let p = prob.params();
    match *s {
        Stop::OriginDepot { .. } | Stop::DestDepot { .. } => 0.0,
        Stop::Charger { duration, .. } => p.charge_service_time + duration,
        _ => p.mu,
    }
}

fn drive(prob: &Problem, bus: usize, a: &Stop, b: &Stop) -> f64 {
    let bk = &prob.instance.buses[bus];
    loc(prob, a).dist(&loc(prob, b)) / bk.speed
}

fn walk(prob: &Problem, a: Point, b: Point) -> Option<f64> {
    let p = prob.params();
    let d = a.dist(&b);
    (d <= p.max_walk_dist + 1e-12).then(|| d / p.walk_speed)
}

/// Stops a plan requires on each route, in required relative order.
fn expected_stops(prob: &Problem, r: usize, plan: &Plan) -> Option<Vec<(usize, Stop, Stop)>> {
    let mut v = Vec::new();
    if plan.option == 5 {
        let Mile::Bus(k) = plan.first else { return None };
        if plan.last != Mile::Bus(k) || plan.tp.is_some() {
            return None;
        }
        v.push((k, Stop::Pickup { req: r }, Stop::Dropoff { req: r }));
        return Some(v);
    }
    let tp = prob.graph.pairs.get(plan.tp?)?;
    let shape = match (plan.first, plan.last) {
        (Mile::Walk, Mile::Walk) => 1,
        (Mile::Bus(_), Mile::Walk) => 2,
        (Mile::Walk, Mile::Bus(_)) => 3,
        (Mile::Bus(_), Mile::Bus(_)) => 4,
        _ => return None,
    };
    if shape != plan.option {
        return None;
    }
    if let Mile::Bus(k) = plan.first {
        v.push((k, Stop::Pickup { req: r }, Stop::TransitDrop { req: r, node: tp.entry }));
    }
    if let Mile::Bus(k) = plan.last {
        v.push((k, Stop::TransitPick { req: r, node: tp.exit }, Stop::Dropoff { req: r }));
    }
    Some(v)
}

/// Whether the pair's legs form a real timetabled connection.
fn pair_is_connection(prob: &Problem, tp: usize) -> bool {
    let pair = &prob.graph.pairs[tp];
    let nodes = &prob.graph.nodes;
    let p = prob.params();
    if pair.legs.is_empty() || pair.legs[0].0 != pair.entry || pair.legs.last().unwrap().1 != pair.exit {
        return false;
    }
    for (i, &(a, b)) in pair.legs.iter().enumerate() {
        let (na, nb) = (&nodes[a], &nodes[b]);
        if na.line != nb.line || na.departure != nb.departure || nb.position <= na.position {
            return false;
        }
        if i > 0 {
            let prev = &nodes[pair.legs[i - 1].1];
            let gap = na.theta_dep - prev.theta_arr;
            if prev.line == na.line
                || !prev.location.coincides(&na.location)
                || gap < p.eta_min - EPS_TIME
                || gap > p.eta_max + EPS_TIME
            {
                return false;
            }
        }
    }
    nodes[pair.exit].theta_arr > nodes[pair.entry].theta_dep
}

/// Check every constraint family on `sol` and recompute its objective.
pub fn verify(prob: &Problem, sol: &Solution) -> VerifyReport {
    let mut cx = Ctx { prob, out: Vec::new() };
    let p = prob.params();
    let inst = &prob.instance;
    let n = prob.n();

    if sol.routes.len() != inst.buses.len() || sol.journeys.len() != n {
        cx.flag(
            Family::Pairing,
            None,
            None,
            None,
            format!(
                "{} routes / {} journeys for {} buses / {} requests",
                sol.routes.len(),
                sol.journeys.len(),
                inst.buses.len(),
                n
            ),
        );
        return VerifyReport {
            findings: cx.out,
            objective: f64::NAN,
            cached_objective: sol.objective,
        };
    }

    let mut drive_total = 0.0;
    let mut in_bus = vec![0.0; n];
    // charger -> (start, end, route)
    let mut occupancy: BTreeMap<usize, Vec<(f64, f64, usize)>> = BTreeMap::new();

    for k in 0..sol.routes.len() {
        check_route(&mut cx, sol, k, &mut drive_total, &mut in_bus, &mut occupancy);
    }

    for (c, mut ivs) in occupancy {
        ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in ivs.windows(2) {
            if w[1].0 < w[0].1 - EPS_TIME {
                cx.flag(
                    Family::ChargerOverlap,
                    Some(w[1].2),
                    None,
                    None,
                    format!(
                        "charger {c}: [{:.3}, {:.3}] overlaps [{:.3}, {:.3}] of route {}",
                        w[1].0, w[1].1, w[0].0, w[0].1, w[0].2
                    ),
                );
            }
        }
    }

    let mut cust_total = 0.0;
    for r in 0..n {
        cust_total += check_customer(&mut cx, sol, r, in_bus[r]);
    }

    let rejected = sol.journeys.iter().filter(|j| j.is_none()).count();
    let objective = p.lambda1 * drive_total + p.lambda2 * cust_total + p.omega * rejected as f64;
    if !((objective - sol.objective).abs() <= OBJECTIVE_TOL) {
        cx.flag(
            Family::Objective,
            None,
            None,
            None,
            format!("cached {} but recomputed {}", sol.objective, objective),
        );
    }
    VerifyReport {
        findings: cx.out,
        objective,
        cached_objective: sol.objective,
    }
}

fn check_route(
    cx: &mut Ctx,
    sol: &Solution,
    k: usize,
    drive_total: &mut f64,
    in_bus: &mut [f64],
    occupancy: &mut BTreeMap<usize, Vec<(f64, f64, usize)>>,
) {
    let prob = cx.prob;
    let p = prob.params();
    let route = &sol.routes[k];
    let stops = &route.stops;
    let rt = Some(k);
    if route.bus != k {
        cx.flag(
            Family::Depot,
            rt,
            None,
            None,
            format!("route {k} driven by bus {}", route.bus),
        );
        return;
    }
    let bus = &prob.instance.buses[k];
    let m = stops.len();
    if m < 2
        || stops[0]
            != (Stop::OriginDepot {
                depot: bus.origin_depot,
            })
        || stops[m - 1] != (Stop::DestDepot { depot: bus.dest_depot })
        || stops[1..m - 1].iter().any(|s| s.is_depot())
    {
        cx.flag(
            Family::Depot,
            rt,
            None,
            None,
            "route must start at the origin depot and end at the destination depot".into(),
        );
        return;
    }
    let b = &route.schedule.b;
    if b.len() != m {
        cx.flag(
            Family::Schedule,
            rt,
            None,
            None,
            format!("{} service times for {m} stops", b.len()),
        );
        return;
    }

    // pairing and per-stop validity
    for (i, s) in stops.iter().enumerate() {
        let Some(r) = s.req() else { continue };
        if r >= prob.n() {
            cx.flag(Family::Pairing, rt, Some(i), Some(r), "unknown request".into());
            continue;
        }
        if stops.iter().filter(|t| *t == s).count() > 1 {
            cx.flag(Family::Pairing, rt, Some(i), Some(r), "stop visited twice".into());
        }
        let partner = match *s {
            Stop::Pickup { .. } => stops[i + 1..]
                .iter()
                .position(|t| matches!(t, Stop::Dropoff { req } | Stop::TransitDrop { req, .. } if *req == r)),
            Stop::TransitPick { .. } => stops[i + 1..]
                .iter()
                .position(|t| matches!(t, Stop::Dropoff { req } if *req == r)),
            Stop::Dropoff { .. } => stops[..i]
                .iter()
                .position(|t| matches!(t, Stop::Pickup { req } | Stop::TransitPick { req, .. } if *req == r)),
            Stop::TransitDrop { .. } => stops[..i]
                .iter()
                .position(|t| matches!(t, Stop::Pickup { req } if *req == r)),
            _ => Some(0),
        };
        if partner.is_none() {
            cx.flag(
                Family::Pairing,
                rt,
                Some(i),
                Some(r),
                "boarding and alighting not paired in order on this bus".into(),
            );
        }
    }

    // load
    let mut q: i64 = 0;
    for (i, s) in stops.iter().enumerate() {
        q += match s {
            Stop::Pickup { .. } | Stop::TransitPick { .. } => 1,
            Stop::Dropoff { .. } | Stop::TransitDrop { .. } => -1,
            _ => 0,
        };
        if q > bus.capacity as i64 || q < 0 {
            cx.flag(
                Family::Capacity,
                rt,
                Some(i),
                None,
                format!("load {q} outside [0, {}]", bus.capacity),
            );
        }
        if s.is_charger() && q != 0 {
            cx.flag(
                Family::Capacity,
                rt,
                Some(i),
                None,
                format!("charging with {q} on board"),
            );
        }
    }
    if q != 0 {
        cx.flag(Family::Capacity, rt, Some(m - 1), None, format!("ends with load {q}"));
    }

    // timing
    if !(b[0] >= -EPS_TIME) || b[m - 1] > p.t_end + EPS_TIME {
        cx.flag(
            Family::Depot,
            rt,
            None,
            None,
            format!("operates over [{}, {}] outside [0, {}]", b[0], b[m - 1], p.t_end),
        );
    }
    for i in 1..m {
        let (prev, cur) = (&stops[i - 1], &stops[i]);
        let arrive = b[i - 1] + svc(prob, prev) + drive(prob, k, prev, cur);
        *drive_total += drive(prob, k, prev, cur);
        if b[i] < arrive - EPS_TIME {
            cx.flag(
                Family::Schedule,
                rt,
                Some(i),
                None,
                format!("service at {} before arrival at {arrive}", b[i]),
            );
        }
        match *cur {
            Stop::Pickup { req } => {
                let w = prob.requests[req].origin_tw;
                if !w.contains(b[i]) {
                    cx.flag(
                        Family::TimeWindow,
                        rt,
                        Some(i),
                        Some(req),
                        format!("pickup at {} outside [{}, {}]", b[i], w.e, w.l),
                    );
                }
            }
            Stop::Dropoff { req } => {
                let w = prob.requests[req].dest_tw;
                if !w.contains(b[i]) {
                    cx.flag(
                        Family::TimeWindow,
                        rt,
                        Some(i),
                        Some(req),
                        format!("dropoff at {} outside [{}, {}]", b[i], w.e, w.l),
                    );
                }
            }
            Stop::TransitDrop { req, node } => {
                let theta = prob.graph.nodes[node].theta_dep;
                if arrive < theta - p.gamma - EPS_TIME || arrive > theta + EPS_TIME {
                    cx.flag(
                        Family::Transfer,
                        rt,
                        Some(i),
                        Some(req),
                        format!("arrives {arrive} for a departure at {theta} (allowed wait {})", p.gamma),
                    );
                }
            }
            Stop::TransitPick { req, node } => {
                let theta = prob.graph.nodes[node].theta_arr;
                if b[i] < theta - EPS_TIME || b[i] > theta + p.gamma + EPS_TIME {
                    cx.flag(
                        Family::Transfer,
                        rt,
                        Some(i),
                        Some(req),
                        format!(
                            "picks up at {} for an arrival at {theta} (allowed wait {})",
                            b[i], p.gamma
                        ),
                    );
                }
            }
            Stop::Charger {
                charger,
                start,
                duration,
            } => {
                if (b[i] + p.charge_service_time - start).abs() > EPS_TIME || duration < 0.0 {
                    cx.flag(
                        Family::Schedule,
                        rt,
                        Some(i),
                        None,
                        format!("charging starts at {start}, service begins at {}", b[i]),
                    );
                }
                occupancy.entry(charger).or_default().push((start, start + duration, k));
            }
            _ => {}
        }
    }

    // in-bus time per customer
    for (i, s) in stops.iter().enumerate() {
        if !s.is_boarding() {
            continue;
        }
        let r = s.req().unwrap();
        if let Some(j) = stops[i + 1..]
            .iter()
            .position(|t| t.req() == Some(r) && !t.is_boarding())
        {
            if r < in_bus.len() {
                in_bus[r] += (i..i + 1 + j)
                    .map(|x| drive(prob, k, &stops[x], &stops[x + 1]))
                    .sum::<f64>();
            }
        }
    }

    // state of charge
    let mut e = bus.e_init;
    for i in 1..m {
        e -= loc(prob, &stops[i - 1]).dist(&loc(prob, &stops[i])) * bus.consumption;
        if e < bus.e_min - EPS_ENERGY || e > bus.e_max + EPS_ENERGY {
            cx.flag(
                Family::Energy,
                rt,
                Some(i),
                None,
                format!("arrives with {e:.6} kWh outside [{}, {}]", bus.e_min, bus.e_max),
            );
        }
        if let Stop::Charger { charger, duration, .. } = stops[i] {
            e += duration * prob.instance.chargers[charger].power;
            if e > bus.e_max + EPS_ENERGY {
                cx.flag(
                    Family::Energy,
                    rt,
                    Some(i),
                    None,
                    format!("charged to {e:.6} kWh above {}", bus.e_max),
                );
            }
        }
    }
}

/// Returns the customer's travel cost (in-bus + transit + walk).
fn check_customer(cx: &mut Ctx, sol: &Solution, r: usize, in_bus: f64) -> f64 {
    let prob = cx.prob;
    let req = Some(r);
    let on_routes: Vec<(usize, usize, Stop)> = sol
        .routes
        .iter()
        .enumerate()
        .flat_map(|(k, rt)| {
            rt.stops
                .iter()
                .enumerate()
                .filter(move |(_, s)| s.req() == Some(r))
                .map(move |(i, s)| (k, i, *s))
        })
        .collect();
    let rejected = sol.rejected.contains(&r);
    let Some(j) = &sol.journeys[r] else {
        if !rejected {
            cx.flag(Family::Pairing, None, None, req, "neither served nor rejected".into());
        }
        if !on_routes.is_empty() {
            cx.flag(
                Family::Pairing,
                Some(on_routes[0].0),
                Some(on_routes[0].1),
                req,
                "rejected customer still on a route".into(),
            );
        }
        return 0.0;
    };
    if rejected {
        cx.flag(Family::Pairing, None, None, req, "served and rejected at once".into());
    }
    let plan = j.plan;
    let Some(expected) = expected_stops(prob, r, &plan) else {
        cx.flag(Family::TransitLeg, None, None, req, format!("malformed plan {plan:?}"));
        return 0.0;
    };
    if plan.option == 4 && expected.len() != 2 {
        cx.flag(
            Family::SameBus,
            None,
            None,
            req,
            "option 4 needs both miles by bus".into(),
        );
    }
    if expected.iter().any(|(k, _, _)| *k >= sol.routes.len()) {
        cx.flag(Family::Pairing, None, None, req, "plan names a missing route".into());
        return 0.0;
    }

    // every expected stop on its route in order, nothing else anywhere
    for &(k, a, b) in &expected {
        let stops = &sol.routes[k].stops;
        let ia = stops.iter().position(|s| *s == a);
        let ib = stops.iter().position(|s| *s == b);
        match (ia, ib) {
            (Some(x), Some(y)) if x < y => {}
            _ => cx.flag(
                Family::Pairing,
                Some(k),
                None,
                req,
                format!("{a:?} must precede {b:?} on route {k}"),
            ),
        }
    }
    let n_expected = expected.len() * 2;
    if on_routes.len() != n_expected {
        cx.flag(
            Family::Pairing,
            on_routes.first().map(|x| x.0),
            None,
            req,
            format!("{} stops on routes, plan needs {n_expected}", on_routes.len()),
        );
    }
    if on_routes
        .iter()
        .any(|&(k, _, s)| !expected.iter().any(|&(ek, a, b)| ek == k && (s == a || s == b)))
    {
        cx.flag(
            Family::SameBus,
            None,
            None,
            req,
            "stops on a route the plan does not use".into(),
        );
    }

    let time_of = |k: usize, s: Stop| -> Option<f64> {
        let rt = &sol.routes[k];
        rt.stops
            .iter()
            .position(|x| *x == s)
            .and_then(|i| rt.schedule.b.get(i).copied())
    };
    let tr = &prob.requests[r];
    let mut cost = in_bus;
    let (dep, arr);
    if plan.option == 5 {
        let Mile::Bus(k) = plan.first else { unreachable!() };
        dep = time_of(k, Stop::Pickup { req: r });
        arr = time_of(k, Stop::Dropoff { req: r });
    } else {
        let tp_idx = plan.tp.unwrap();
        if !prob.graph.per_customer[r]
            .iter()
            .any(|c| c.tp == tp_idx && c.allows(plan.option))
        {
            cx.flag(
                Family::TransitLeg,
                None,
                None,
                req,
                format!("pair {tp_idx} not admissible for option {}", plan.option),
            );
        }
        if !pair_is_connection(prob, tp_idx) {
            cx.flag(
                Family::TransitLeg,
                None,
                None,
                req,
                format!("pair {tp_idx} is not a timetabled connection"),
            );
        }
        let pair = &prob.graph.pairs[tp_idx];
        let (entry, exit) = (&prob.graph.nodes[pair.entry], &prob.graph.nodes[pair.exit]);
        cost += exit.theta_arr - entry.theta_dep;
        dep = match plan.first {
            Mile::Walk => match walk(prob, tr.origin, entry.location) {
                Some(w) => {
                    cost += w;
                    let t = entry.theta_dep - w;
                    if !tr.origin_tw.contains(t) {
                        cx.flag(
                            Family::Walk,
                            None,
                            None,
                            req,
                            format!("leaves home at {t} outside [{}, {}]", tr.origin_tw.e, tr.origin_tw.l),
                        );
                    }
                    Some(t)
                }
                None => {
                    cx.flag(
                        Family::Walk,
                        None,
                        None,
                        req,
                        "entry station beyond walking distance".into(),
                    );
                    None
                }
            },
            Mile::Bus(k) => time_of(k, Stop::Pickup { req: r }),
            Mile::None => None,
        };
        arr = match plan.last {
            Mile::Walk => match walk(prob, exit.location, tr.destination) {
                Some(w) => {
                    cost += w;
                    let t = exit.theta_arr + w;
                    if !tr.dest_tw.contains(t) {
                        cx.flag(
                            Family::Walk,
                            None,
                            None,
                            req,
                            format!("arrives home at {t} outside [{}, {}]", tr.dest_tw.e, tr.dest_tw.l),
                        );
                    }
                    Some(t)
                }
                None => {
                    cx.flag(
                        Family::Walk,
                        None,
                        None,
                        req,
                        "exit station beyond walking distance".into(),
                    );
                    None
                }
            },
            Mile::Bus(k) => time_of(k, Stop::Dropoff { req: r }),
            Mile::None => None,
        };
    }
    if let (Some(d), Some(a)) = (dep, arr) {
        if a - d > tr.max_travel_time + EPS_TIME {
            cx.flag(
                Family::JourneyTime,
                None,
                None,
                req,
                format!("journey {:.4} exceeds {:.4}", a - d, tr.max_travel_time),
            );
        }
        if a < d - EPS_TIME {
            cx.flag(Family::JourneyTime, None, None, req, "arrives before departing".into());
        }
    }
    cost
}

/// One bus route given by its stops only; the route index is the one plans
/// refer to in `Mile::Bus`.
#[derive(Debug, Clone, Copy)]
pub struct StopSequence<'a> {
    pub route: usize,
    pub bus: usize,
    pub stops: &'a [Stop],
}

/// Variables of a schedule network, one per stop.
pub struct ScheduleNet {
    pub stn: Stn,
    pub vars: Vec<Vec<usize>>,
}

/// Every customer alights after boarding, and the load stays within
/// [0, capacity], is zero when charging and at the end.
fn load_ok(prob: &Problem, bus: usize, stops: &[Stop]) -> bool {
    let cap = prob.instance.buses[bus].capacity as i64;
    let mut q = 0i64;
    let mut aboard: Vec<usize> = Vec::new();
    for s in stops {
        if let Some(r) = s.req() {
            if s.is_boarding() {
                if aboard.contains(&r) {
                    return false;
                }
                aboard.push(r);
            } else if let Some(i) = aboard.iter().position(|x| *x == r) {
                aboard.swap_remove(i);
            } else {
                return false;
            }
        }
        q += match s {
            Stop::Pickup { .. } | Stop::TransitPick { .. } => 1,
            Stop::Dropoff { .. } | Stop::TransitDrop { .. } => -1,
            _ => 0,
        };
        if q < 0 || q > cap || (s.is_charger() && q != 0) {
            return false;
        }
    }
    q == 0
}

/// Encode every timing constraint on `routes` as difference constraints.
///
/// Journey bounds are added for each customer whose two ends are either on
/// the given routes or fixed by walking; a mile on a route outside the set
/// leaves the bound open. With `free_chargers` the charging start is a
/// variable rather than the value stored in the stop.
pub fn schedule_net(
    prob: &Problem,
    routes: &[StopSequence],
    plan_of: &dyn Fn(usize) -> Option<Plan>,
    free_chargers: bool,
) -> ScheduleNet {
    let p = prob.params();
    let mut stn = Stn::new();
    let mut vars = Vec::with_capacity(routes.len());
    for sq in routes {
        stn.require(load_ok(prob, sq.bus, sq.stops));
        let v: Vec<usize> = sq.stops.iter().map(|_| stn.var()).collect();
        for (i, s) in sq.stops.iter().enumerate() {
            let x = v[i];
            stn.bounds(x, 0.0, p.t_end);
            if i > 0 {
                let prev = &sq.stops[i - 1];
                let c = svc(prob, prev) + drive(prob, sq.bus, prev, s);
                stn.ge(x, v[i - 1], c);
            }
            match *s {
                Stop::Pickup { req } => {
                    let w = prob.requests[req].origin_tw;
                    stn.bounds(x, w.e, w.l);
                }
                Stop::Dropoff { req } => {
                    let w = prob.requests[req].dest_tw;
                    stn.bounds(x, w.e, w.l);
                }
                Stop::TransitDrop { node, .. } => {
                    // arrival = previous service start + service + drive
                    let theta = prob.graph.nodes[node].theta_dep;
                    let prev = &sq.stops[i - 1];
                    let c = svc(prob, prev) + drive(prob, sq.bus, prev, s);
                    stn.bounds(v[i - 1], theta - p.gamma - c, theta - c);
                }
                Stop::TransitPick { node, .. } => {
                    let theta = prob.graph.nodes[node].theta_arr;
                    stn.bounds(x, theta, theta + p.gamma);
                }
                Stop::Charger { start, .. } if !free_chargers => {
                    stn.fix(x, start - p.charge_service_time);
                }
                _ => {}
            }
        }
        vars.push(v);
    }

    let find = |s: Stop| -> Option<usize> {
        for (ri, sq) in routes.iter().enumerate() {
            if let Some(i) = sq.stops.iter().position(|x| *x == s) {
                return Some(vars[ri][i]);
            }
        }
        None
    };
    enum End {
        Var(usize),
        Const(f64),
        Open,
    }
    let mut seen = Vec::new();
    for sq in routes {
        for s in sq.stops {
            let Some(r) = s.req() else { continue };
            if seen.contains(&r) {
                continue;
            }
            seen.push(r);
            let Some(plan) = plan_of(r) else { continue };
            let tr = &prob.requests[r];
            let tp = plan.tp.map(|t| &prob.graph.pairs[t]);
            let dep = match plan.first {
                Mile::Bus(_) => find(Stop::Pickup { req: r }).map_or(End::Open, End::Var),
                Mile::Walk => {
                    let g = tp.unwrap().entry;
                    match walk(prob, tr.origin, prob.graph.nodes[g].location) {
                        Some(w) => {
                            let t = prob.graph.nodes[g].theta_dep - w;
                            stn.require(tr.origin_tw.contains(t));
                            End::Const(t)
                        }
                        None => {
                            stn.require(false);
                            End::Open
                        }
                    }
                }
                Mile::None => End::Open,
            };
            let arr = match plan.last {
                Mile::Bus(_) => find(Stop::Dropoff { req: r }).map_or(End::Open, End::Var),
                Mile::Walk => {
                    let g = tp.unwrap().exit;
                    match walk(prob, prob.graph.nodes[g].location, tr.destination) {
                        Some(w) => {
                            let t = prob.graph.nodes[g].theta_arr + w;
                            stn.require(tr.dest_tw.contains(t));
                            End::Const(t)
                        }
                        None => {
                            stn.require(false);
                            End::Open
                        }
                    }
                }
                Mile::None => End::Open,
            };
            let lmax = tr.max_travel_time;
            match (dep, arr) {
                (End::Var(d), End::Var(a)) => stn.le(a, d, lmax),
                (End::Var(d), End::Const(t)) => stn.ge(d, 0, t - lmax),
                (End::Const(t), End::Var(a)) => stn.le(a, 0, t + lmax),
                (End::Const(t0), End::Const(t1)) => stn.require(t1 - t0 <= lmax + EPS_TIME),
                _ => {}
            }
        }
    }
    ScheduleNet { stn, vars }
}

/// Service start times satisfying every timing and load constraint on
/// `routes`, if any exist. Energy is not part of this check.
pub fn schedule_exists(
    prob: &Problem,
    routes: &[StopSequence],
    plan_of: &dyn Fn(usize) -> Option<Plan>,
) -> Option<Vec<Vec<f64>>> {
    let net = schedule_net(prob, routes, plan_of, false);
    let x = net.stn.solve(EPS_TIME)?;
    Some(net.vars.iter().map(|v| v.iter().map(|&i| x[i]).collect()).collect())
}

#[cfg(test)]
mod tests;
