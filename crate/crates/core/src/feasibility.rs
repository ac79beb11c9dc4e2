//! Route schedules, forward slack times and the nine-step evaluation.
//!
//! A schedule is fully determined by the departure time from the origin depot
//! (`d0`) and a per-stop floor on the beginning of service. Waiting added by
//! the delay steps is stored as a raised floor so that later propagation
//! reproduces it exactly.

use serde::{Deserialize, Serialize};

use crate::model::{EPS_ENERGY, EPS_TIME};
use crate::problem::Problem;
use crate::solution::{Mile, Plan, Route, Solution, Stop};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSchedule {
    pub d0: f64,
    /// Unset floors are minus infinity, stored as null.
    #[serde(with = "floor_serde")]
    pub floor: Vec<f64>,
    /// Arrival
    pub a: Vec<f64>,
    /// Beginning of service
    pub b: Vec<f64>,
    /// Wait before service
    pub w: Vec<f64>,
    /// Departure
    pub d: Vec<f64>,
    /// Load after service
    pub q: Vec<i32>,
    /// State of charge on leaving the stop (kWh)
    pub soc: Vec<f64>,
    /// Early-arrival violation at first-mile transit stops
    pub rho: Vec<f64>,
    pub f_delay: bool,
}

mod floor_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let o: Vec<Option<f64>> = v.iter().map(|x| x.is_finite().then_some(*x)).collect();
        o.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let o: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(o.into_iter().map(|x| x.unwrap_or(f64::NEG_INFINITY)).collect())
    }
}

impl RouteSchedule {
    /// Forward pass from `d0` honouring windows and floors; performs no checks.
    pub fn propagate(prob: &Problem, bus: usize, stops: &[Stop], d0: f64, floor: &[f64]) -> Self {
        let n = stops.len();
        let bk = prob.bus(bus);
        let mut s = RouteSchedule {
            d0,
            floor: floor.to_vec(),
            a: vec![0.0; n],
            b: vec![0.0; n],
            w: vec![0.0; n],
            d: vec![0.0; n],
            q: vec![0; n],
            soc: vec![0.0; n],
            rho: vec![0.0; n],
            f_delay: false,
        };
        s.a[0] = d0;
        s.b[0] = d0;
        s.d[0] = d0 + prob.service(&stops[0]);
        s.soc[0] = bk.e_init;
        for i in 1..n {
            let (prev, cur) = (&stops[i - 1], &stops[i]);
            s.a[i] = s.d[i - 1] + prob.travel(bus, prev, cur);
            let win = prob.window(cur);
            s.b[i] = s.a[i].max(win.e).max(floor[i]);
            s.w[i] = s.b[i] - s.a[i];
            s.d[i] = s.b[i] + prob.service(cur);
            s.q[i] = s.q[i - 1] + prob.load_delta(cur);
            let mut e = s.soc[i - 1] - prob.energy(bus, prev, cur);
            if let Stop::Charger { charger, duration, .. } = cur {
                e += duration * prob.instance.chargers[*charger].power;
            }
            s.soc[i] = e;
            if let Some(ab) = prob.arrival_bound(cur) {
                s.rho[i] = (ab.e - s.a[i]).max(0.0);
            }
        }
        s
    }

    fn repropagate(&mut self, prob: &Problem, bus: usize, stops: &[Stop]) {
        let f = self.f_delay;
        *self = RouteSchedule::propagate(prob, bus, stops, self.d0, &self.floor.clone());
        self.f_delay = f;
    }

    /// Same timing inputs restricted to the stops kept by `keep`.
    pub fn restricted(&self, prob: &Problem, bus: usize, stops: &[Stop], keep: &[bool]) -> Self {
        let kept: Vec<Stop> = stops.iter().zip(keep).filter(|(_, k)| **k).map(|(s, _)| *s).collect();
        let floor: Vec<f64> = self
            .floor
            .iter()
            .zip(keep)
            .filter(|(_, k)| **k)
            .map(|(f, _)| *f)
            .collect();
        let mut s = RouteSchedule::propagate(prob, bus, &kept, self.d0, &floor);
        s.f_delay = self.f_delay;
        s
    }

    /// SoC on arrival at stop `i` (before any charging there).
    pub fn soc_arrival(&self, prob: &Problem, bus: usize, stops: &[Stop], i: usize) -> f64 {
        if i == 0 {
            return self.soc[0];
        }
        self.soc[i - 1] - prob.energy(bus, &stops[i - 1], &stops[i])
    }
}

/// Where one end of a customer's journey gets its time from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor {
    /// Beginning of service at this stop of the route under evaluation.
    Here(usize),
    /// Fixed by walking or by another route.
    Fixed(f64),
    /// The leg is not inserted yet.
    Unknown,
}

/// Journey-time bound of a customer touching the route.
#[derive(Debug, Clone, PartialEq)]
pub struct RideLink {
    pub req: usize,
    pub dep: Anchor,
    pub arr: Anchor,
    pub lmax: f64,
    /// Route holding the first mile when it is not this one.
    pub dep_route: Option<usize>,
}

impl RideLink {
    pub fn ride(&self, s: &RouteSchedule) -> Option<f64> {
        let t = |a: Anchor| match a {
            Anchor::Here(i) => Some(s.b[i]),
            Anchor::Fixed(t) => Some(t),
            Anchor::Unknown => None,
        };
        Some(t(self.arr)? - t(self.dep)?)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RouteContext {
    pub links: Vec<RideLink>,
}

impl RouteContext {
    fn destination_link(&self, i: usize) -> Option<&RideLink> {
        self.links.iter().find(|l| l.arr == Anchor::Here(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    Structure,
    Window,
    Capacity,
    LateForTransit,
    EarlyForTransit,
    RideTime,
    Energy,
    ChargerOverlap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Evaluation step that gave up (9 for the final check).
    pub step: u8,
    pub stop: usize,
    pub kind: ViolationKind,
    pub amount: f64,
}

/// Read access to committed routes and plans with local overrides.
#[derive(Clone)]
pub struct View<'a> {
    pub sol: &'a Solution,
    pub plans: Vec<(usize, Option<Plan>)>,
    pub routes: Vec<(usize, Route)>,
}

impl<'a> View<'a> {
    pub fn new(sol: &'a Solution) -> Self {
        View {
            sol,
            plans: Vec::new(),
            routes: Vec::new(),
        }
    }

    pub fn plan(&self, r: usize) -> Option<Plan> {
        match self.plans.iter().rev().find(|(q, _)| *q == r) {
            Some((_, p)) => *p,
            None => self.sol.plan(r),
        }
    }

    pub fn route(&self, k: usize) -> &Route {
        match self.routes.iter().rev().find(|(q, _)| *q == k) {
            Some((_, r)) => r,
            None => &self.sol.routes[k],
        }
    }

    pub fn set_plan(&mut self, r: usize, p: Option<Plan>) {
        self.plans.retain(|(q, _)| *q != r);
        self.plans.push((r, p));
    }

    pub fn set_route(&mut self, k: usize, route: Route) {
        self.routes.retain(|(q, _)| *q != k);
        self.routes.push((k, route));
    }

    pub fn n_routes(&self) -> usize {
        self.sol.routes.len()
    }
}

/// Journey-time links of every customer with a stop in `stops`.
pub fn build_context(prob: &Problem, view: &View, k: usize, stops: &[Stop]) -> RouteContext {
    let mut links = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for s in stops {
        let Some(r) = s.req() else { continue };
        if seen.contains(&r) {
            continue;
        }
        seen.push(r);
        let Some(plan) = view.plan(r) else { continue };
        let here = |want: Stop| stops.iter().position(|t| *t == want);
        let tp = plan.tp.map(|t| prob.pair(t));
        let mut dep_route = None;
        let dep = if let Some(i) = here(Stop::Pickup { req: r }) {
            Anchor::Here(i)
        } else {
            match (plan.first, tp) {
                (Mile::Walk, Some(tp)) => match prob.walk_to(r, tp.entry) {
                    Some(w) => Anchor::Fixed(prob.node(tp.entry).theta_dep - w),
                    None => Anchor::Unknown,
                },
                (Mile::Bus(k2), _) if k2 != k => {
                    dep_route = Some(k2);
                    let other = view.route(k2);
                    match other.position(|t| *t == Stop::Pickup { req: r }) {
                        Some(i) => Anchor::Fixed(other.schedule.b[i]),
                        None => Anchor::Unknown,
                    }
                }
                _ => Anchor::Unknown,
            }
        };
        let arr = if let Some(i) = here(Stop::Dropoff { req: r }) {
            Anchor::Here(i)
        } else {
            match (plan.last, tp) {
                (Mile::Walk, Some(tp)) => match prob.walk_from(tp.exit, r) {
                    Some(w) => Anchor::Fixed(prob.node(tp.exit).theta_arr + w),
                    None => Anchor::Unknown,
                },
                (Mile::Bus(k2), _) if k2 != k => {
                    let other = view.route(k2);
                    match other.position(|t| *t == Stop::Dropoff { req: r }) {
                        Some(i) => Anchor::Fixed(other.schedule.b[i]),
                        None => Anchor::Unknown,
                    }
                }
                _ => Anchor::Unknown,
            }
        };
        links.push(RideLink {
            req: r,
            dep,
            arr,
            lmax: prob.requests[r].max_travel_time,
            dep_route,
        });
    }
    RouteContext { links }
}

/// Forward slack of stop `i`: the largest delay of its service start that
/// keeps every later stop within its window, every first-mile transfer on
/// time and every journey within its bound.
pub fn forward_slack(prob: &Problem, stops: &[Stop], s: &RouteSchedule, ctx: &RouteContext, i: usize) -> f64 {
    slack_from(prob, stops, s, ctx, i, i)
}

/// Slack available for lengthening the arc leaving stop `i`; the stop itself
/// is not delayed.
pub fn departure_slack(prob: &Problem, stops: &[Stop], s: &RouteSchedule, ctx: &RouteContext, i: usize) -> f64 {
    if i + 1 >= stops.len() {
        return f64::INFINITY;
    }
    slack_from(prob, stops, s, ctx, i, i + 1)
}

fn slack_from(prob: &Problem, stops: &[Stop], s: &RouteSchedule, ctx: &RouteContext, i: usize, first: usize) -> f64 {
    let gamma = prob.params().gamma;
    let mut best = f64::INFINITY;
    // Σ_{i<p≤j} W_p
    let mut cum = 0.0;
    for j in first..stops.len() {
        let before = cum;
        if j > i {
            cum += s.w[j];
        }
        let term = match stops[j] {
            Stop::TransitDrop { node, .. } => {
                // an arrival bound: the wait at j itself cannot absorb the delay
                let th = prob.node(node).theta_dep;
                let zeta = (th - s.a[j].max(th - gamma)).max(0.0);
                if j > i {
                    before + zeta
                } else {
                    zeta
                }
            }
            _ => {
                let l = prob.window(&stops[j]).l;
                let mut zeta = l - s.b[j];
                if let Some(link) = ctx.destination_link(j) {
                    // an origin inside the delayed segment moves with j
                    let moves_too = matches!(link.dep, Anchor::Here(p) if p >= first);
                    if let Some(ride) = link.ride(s).filter(|_| !moves_too) {
                        zeta = zeta.min(link.lmax - ride);
                    }
                }
                cum + zeta.max(0.0)
            }
        };
        best = best.min(term);
    }
    best
}

/// Violations of the hard time, load and journey-time rules (energy excluded).
pub fn check_schedule(
    prob: &Problem,
    bus: usize,
    stops: &[Stop],
    s: &RouteSchedule,
    ctx: &RouteContext,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let v = |stop: usize, kind: ViolationKind, amount: f64| Violation {
        step: 9,
        stop,
        kind,
        amount,
    };
    let n = stops.len();
    if n < 2 || !matches!(stops[0], Stop::OriginDepot { .. }) || !matches!(stops[n - 1], Stop::DestDepot { .. }) {
        out.push(v(0, ViolationKind::Structure, 0.0));
        return out;
    }
    let cap = prob.bus(bus).capacity as i32;
    let win0 = prob.window(&stops[0]);
    if s.d0 < win0.e - EPS_TIME || s.d0 > win0.l + EPS_TIME {
        out.push(v(0, ViolationKind::Window, s.d0));
    }
    for i in 1..n {
        let win = prob.window(&stops[i]);
        if s.b[i] > win.l + EPS_TIME {
            out.push(v(i, ViolationKind::Window, s.b[i] - win.l));
        }
        if s.b[i] < win.e - EPS_TIME {
            out.push(v(i, ViolationKind::Window, win.e - s.b[i]));
        }
        if let Some(ab) = prob.arrival_bound(&stops[i]) {
            if s.a[i] > ab.l + EPS_TIME {
                out.push(v(i, ViolationKind::LateForTransit, s.a[i] - ab.l));
            }
            if s.a[i] < ab.e - EPS_TIME {
                out.push(v(i, ViolationKind::EarlyForTransit, ab.e - s.a[i]));
            }
        }
        if s.q[i] > cap || s.q[i] < 0 {
            out.push(v(i, ViolationKind::Capacity, s.q[i] as f64));
        }
        if (stops[i].is_charger() || stops[i].is_depot()) && s.q[i] != 0 {
            out.push(v(i, ViolationKind::Capacity, s.q[i] as f64));
        }
    }
    for link in &ctx.links {
        if let Some(ride) = link.ride(s) {
            if ride > link.lmax + EPS_TIME {
                let at = match link.arr {
                    Anchor::Here(i) => i,
                    _ => match link.dep {
                        Anchor::Here(i) => i,
                        _ => 0,
                    },
                };
                out.push(v(at, ViolationKind::RideTime, ride - link.lmax));
            }
        }
    }
    out
}

/// Violations of the SoC bounds along the route.
pub fn check_energy(prob: &Problem, bus: usize, stops: &[Stop], s: &RouteSchedule) -> Vec<Violation> {
    let b = prob.bus(bus);
    let mut out = Vec::new();
    for i in 1..stops.len() {
        let arr = s.soc_arrival(prob, bus, stops, i);
        if arr < b.e_min - EPS_ENERGY {
            out.push(Violation {
                step: 9,
                stop: i,
                kind: ViolationKind::Energy,
                amount: b.e_min - arr,
            });
        }
        if s.soc[i] > b.e_max + EPS_ENERGY {
            out.push(Violation {
                step: 9,
                stop: i,
                kind: ViolationKind::Energy,
                amount: s.soc[i] - b.e_max,
            });
        }
    }
    out
}

fn rides_ok(ctx: &RouteContext, s: &RouteSchedule) -> bool {
    ctx.links
        .iter()
        .all(|l| l.ride(s).is_none_or(|r| r <= l.lmax + EPS_TIME))
}

fn rho_sum(s: &RouteSchedule) -> f64 {
    s.rho.iter().sum()
}

fn first_failure(prob: &Problem, bus: usize, stops: &[Stop], s: &RouteSchedule) -> Option<Violation> {
    let cap = prob.bus(bus).capacity as i32;
    for i in 1..stops.len() {
        let win = prob.window(&stops[i]);
        let fail = |kind, amount| {
            Some(Violation {
                step: 2,
                stop: i,
                kind,
                amount,
            })
        };
        if s.b[i] > win.l + EPS_TIME {
            return fail(ViolationKind::Window, s.b[i] - win.l);
        }
        if s.q[i] > cap || s.q[i] < 0 {
            return fail(ViolationKind::Capacity, s.q[i] as f64);
        }
        if let Some(ab) = prob.arrival_bound(&stops[i]) {
            if s.a[i] > ab.l + EPS_TIME {
                return fail(ViolationKind::LateForTransit, s.a[i] - ab.l);
            }
        }
    }
    None
}

/// Result of steps 1 to 7 on a single route.
#[derive(Debug, Clone)]
pub struct Partial {
    pub schedule: RouteSchedule,
    pub ctx: RouteContext,
}

/// Steps 1 to 7: forward pass, depot-departure shift and per-stop delays.
pub fn steps_one_to_seven(prob: &Problem, bus: usize, stops: &[Stop], ctx: RouteContext) -> Result<Partial, Violation> {
    let n = stops.len();
    let e0 = prob.window(&stops[0]).e;
    // leave the depot at the start of its window
    let floor = vec![f64::NEG_INFINITY; n];
    // earliest schedule
    let mut s = RouteSchedule::propagate(prob, bus, stops, e0, &floor);
    if let Some(v) = first_failure(prob, bus, stops, &s) {
        return Err(v);
    }
    // push the departure back by the slack the route can absorb
    let f0 = forward_slack(prob, stops, &s, &ctx, 0);
    let waits: f64 = s.w[1..].iter().sum();
    s.d0 = e0 + f0.min(waits).max(0.0);
    s.repropagate(prob, bus, stops);
    // done if ride times and transit waits already hold
    if rides_ok(&ctx, &s) && rho_sum(&s) <= EPS_TIME {
        return Ok(Partial { schedule: s, ctx });
    }
    // otherwise delay origins one at a time by their slack
    for j in 1..n {
        if !matches!(stops[j], Stop::Pickup { .. } | Stop::TransitDrop { .. }) {
            continue;
        }
        let f = forward_slack(prob, stops, &s, &ctx, j);
        if f > EPS_TIME && f.is_finite() {
            s.floor[j] = s.b[j] + f;
            s.repropagate(prob, bus, stops);
        }
        s.f_delay = true;
        if rides_ok(&ctx, &s) && rho_sum(&s) <= EPS_TIME {
            break;
        }
    }
    Ok(Partial { schedule: s, ctx })
}

/// Full evaluation of route `k` with stop sequence `stops` inside `view`.
///
/// Returns the schedule of `k` and the re-timed schedules of first-mile
/// routes delayed for bus-transit-bus customers.
pub fn nine_step_evaluate(
    prob: &Problem,
    view: &View,
    k: usize,
    stops: &[Stop],
) -> Result<(RouteSchedule, Vec<(usize, RouteSchedule)>), Violation> {
    let bus = view.route(k).bus;
    let ctx = build_context(prob, view, k, stops);
    let Partial { schedule: s, mut ctx } = steps_one_to_seven(prob, bus, stops, ctx)?;
    let mut others: Vec<(usize, RouteSchedule)> = Vec::new();

    // first-mile routes of bus-transit-bus customers whose bound is broken
    let mut late: Vec<(usize, usize)> = Vec::new(); // (link idx, first-mile route)
    for (li, l) in ctx.links.iter().enumerate() {
        if let (Anchor::Here(_), Some(sigma)) = (l.arr, l.dep_route) {
            if let Some(ride) = l.ride(&s) {
                if ride > l.lmax + EPS_TIME {
                    late.push((li, sigma));
                }
            }
        }
    }
    let mut sigmas: Vec<usize> = late.iter().map(|&(_, g)| g).collect();
    sigmas.sort();
    sigmas.dedup();
    for sigma in sigmas {
        let targets: Vec<(usize, f64, f64)> = late
            .iter()
            .filter(|&&(_, g)| g == sigma)
            .map(|&(li, _)| {
                let l = &ctx.links[li];
                let arr = match l.arr {
                    Anchor::Here(i) => s.b[i],
                    _ => unreachable!(),
                };
                (l.req, arr, l.lmax)
            })
            .collect();
        if let Some(new) = delay_first_mile_route(prob, view, k, stops, &s, sigma, &targets) {
            let route = view.route(sigma);
            for (li, _) in late.iter().filter(|&&(_, g)| g == sigma) {
                let r = ctx.links[*li].req;
                if let Some(i) = route.position(|t| *t == Stop::Pickup { req: r }) {
                    ctx.links[*li].dep = Anchor::Fixed(new.b[i]);
                }
            }
            others.push((sigma, new));
        }
    }

    // final check of every constraint
    let v = check_schedule(prob, bus, stops, &s, &ctx);
    if let Some(first) = v.into_iter().next() {
        return Err(first);
    }
    Ok((s, others))
}

/// The origin-delay pass applied to the first-mile route `sigma` until the journeys ending on
/// route `k` respect their bounds. Returns the new schedule of `sigma` when it
/// stays feasible.
fn delay_first_mile_route(
    prob: &Problem,
    view: &View,
    k: usize,
    k_stops: &[Stop],
    k_sched: &RouteSchedule,
    sigma: usize,
    targets: &[(usize, f64, f64)],
) -> Option<RouteSchedule> {
    let route = view.route(sigma);
    if route.schedule.f_delay {
        return None;
    }
    let stops = &route.stops;
    let mut s = route.schedule.clone();
    // the context of sigma sees the candidate times of route k
    let mut v2 = view.clone();
    let mut rk = view.route(k).clone();
    rk.stops = k_stops.to_vec();
    rk.schedule = k_sched.clone();
    v2.set_route(k, rk);
    let ctx = build_context(prob, &v2, sigma, stops);
    let met = |s: &RouteSchedule| {
        targets.iter().all(
            |&(r, arr, lmax)| match stops.iter().position(|t| *t == Stop::Pickup { req: r }) {
                Some(i) => arr - s.b[i] <= lmax + EPS_TIME,
                None => false,
            },
        )
    };
    for j in 1..stops.len() {
        if !matches!(stops[j], Stop::Pickup { .. } | Stop::TransitDrop { .. }) {
            continue;
        }
        let f = forward_slack(prob, stops, &s, &ctx, j);
        if f > EPS_TIME && f.is_finite() {
            s.floor[j] = s.b[j] + f;
            s.repropagate(prob, route.bus, stops);
        }
        s.f_delay = true;
        if met(&s) {
            break;
        }
    }
    if !check_schedule(prob, route.bus, stops, &s, &ctx).is_empty() {
        return None;
    }
    Some(s)
}

/// Whether the stored schedule of route `k` meets every time, load, journey
/// and energy rule given the other routes of `sol`.
pub fn route_is_valid(prob: &Problem, sol: &Solution, k: usize) -> bool {
    let route = &sol.routes[k];
    let view = View::new(sol);
    let ctx = build_context(prob, &view, k, &route.stops);
    let fresh = RouteSchedule::propagate(prob, route.bus, &route.stops, route.schedule.d0, &route.schedule.floor);
    fresh.b == route.schedule.b
        && check_schedule(prob, route.bus, &route.stops, &route.schedule, &ctx).is_empty()
        && check_energy(prob, route.bus, &route.stops, &route.schedule).is_empty()
}
