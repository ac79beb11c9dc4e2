//! Inserting customers into routes under each travel option, and removing
//! them again.

use crate::charging::{evaluate_route, rebuild_calendars, RouteOutcome};
use crate::feasibility::{RouteSchedule, View};
use crate::model::EPS_TIME;
use crate::problem::Problem;
use crate::solution::{route_cost, Mile, Plan, Route, Solution, Stop};

/// A fully evaluated way of serving one customer.
#[derive(Debug, Clone)]
pub struct Insertion {
    pub req: usize,
    pub plan: Plan,
    /// Objective increase, not counting the rejection penalty saved.
    pub cost: f64,
    /// Replacement routes, including re-timed routes of other customers.
    pub routes: Vec<(usize, Route)>,
}

/// Earliest beginning of service and latest arrival per stop, ignoring
/// journey-time bounds.
struct Bounds {
    earliest_dep: Vec<f64>,
    latest: Vec<f64>,
    load: Vec<i32>,
}

fn bounds(prob: &Problem, bus: usize, stops: &[Stop]) -> Bounds {
    let n = stops.len();
    let s = RouteSchedule::propagate(prob, bus, stops, prob.window(&stops[0]).e, &vec![f64::NEG_INFINITY; n]);
    let mut latest = vec![f64::INFINITY; n];
    for p in (0..n).rev() {
        let own = match prob.arrival_bound(&stops[p]) {
            Some(ab) => ab.l,
            None => prob.window(&stops[p]).l,
        };
        let next = if p + 1 < n {
            latest[p + 1] - prob.travel(bus, &stops[p], &stops[p + 1]) - prob.service(&stops[p])
        } else {
            f64::INFINITY
        };
        latest[p] = own.min(next);
    }
    Bounds {
        earliest_dep: s.d,
        latest,
        load: s.q,
    }
}

fn latest_of(prob: &Problem, s: &Stop) -> f64 {
    match prob.arrival_bound(s) {
        Some(ab) => ab.l,
        None => prob.window(s).l,
    }
}

/// Buses whose empty routes are interchangeable yield the same candidates;
/// only the first of each kind is tried.
fn routes_to_try(prob: &Problem, view: &View, used_only: bool) -> Vec<usize> {
    let mut seen: Vec<(usize, usize, usize)> = Vec::new();
    let mut out = Vec::new();
    for k in 0..view.n_routes() {
        let route = view.route(k);
        if route.is_used() {
            out.push(k);
            continue;
        }
        if used_only {
            continue;
        }
        let b = prob.bus(route.bus);
        let key = (b.origin_depot, b.dest_depot, b.type_id);
        let same = seen.contains(&key);
        if !same {
            seen.push(key);
            out.push(k);
        }
    }
    out
}

/// Cheapest feasible placement of the pair (`a`, `b`) on route `k`, `a`
/// before `b`. The plan of the customer must already be set in `view`.
pub fn best_on_route(prob: &Problem, view: &View, k: usize, a: Stop, b: Stop) -> Option<(f64, RouteOutcome)> {
    let route = view.route(k);
    let bus = route.bus;
    let bk = prob.bus(bus);
    let p = prob.params();
    let stops: Vec<Stop> = route.stops.iter().copied().filter(|s| !s.is_charger()).collect();
    let n = stops.len();
    let bd = bounds(prob, bus, &stops);
    let t = |x: &Stop, y: &Stop| prob.travel(bus, x, y);
    let (ea_win, eb_win) = (prob.window(&a), prob.window(&b));
    let (la, lb) = (latest_of(prob, &a), latest_of(prob, &b));
    let cap = bk.capacity as i32;

    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n - 1 {
        if bd.load[i] + 1 > cap {
            continue;
        }
        let arr_a = bd.earliest_dep[i] + t(&stops[i], &a);
        if arr_a > la + EPS_TIME {
            // later positions only arrive later
            break;
        }
        let dep_a = arr_a.max(ea_win.e) + prob.service(&a);
        // adjacent placement
        {
            let arr_b = dep_a + t(&a, &b);
            let dep_b = arr_b.max(eb_win.e) + prob.service(&b);
            if arr_b <= lb + EPS_TIME && dep_b + t(&b, &stops[i + 1]) <= bd.latest[i + 1] + EPS_TIME {
                let detour = t(&stops[i], &a) + t(&a, &b) + t(&b, &stops[i + 1]) - t(&stops[i], &stops[i + 1]);
                cands.push((p.lambda1 * detour + p.lambda2 * t(&a, &b), i, i));
            }
        }
        if dep_a + t(&a, &stops[i + 1]) > bd.latest[i + 1] + EPS_TIME {
            continue;
        }
        let detour_a = t(&stops[i], &a) + t(&a, &stops[i + 1]) - t(&stops[i], &stops[i + 1]);
        for j in i + 1..n - 1 {
            if bd.load[j] + 1 > cap {
                break;
            }
            let arr_b = bd.earliest_dep[j] + t(&stops[j], &b);
            if arr_b > lb + EPS_TIME {
                break;
            }
            let dep_b = arr_b.max(eb_win.e) + prob.service(&b);
            if dep_b + t(&b, &stops[j + 1]) > bd.latest[j + 1] + EPS_TIME {
                continue;
            }
            let detour_b = t(&stops[j], &b) + t(&b, &stops[j + 1]) - t(&stops[j], &stops[j + 1]);
            cands.push((p.lambda1 * (detour_a + detour_b) + p.lambda2 * t(&a, &b), i, j));
        }
    }
    cands.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let old = route_cost(prob, bus, &route.stops);
    let mut best: Option<(f64, RouteOutcome)> = None;
    for (lbound, i, j) in cands {
        if let Some((c, _)) = &best {
            if lbound >= *c - 1e-12 {
                break;
            }
        }
        let mut st = stops.clone();
        st.insert(j + 1, b);
        st.insert(i + 1, a);
        let Ok(out) = evaluate_route(prob, view, k, &st) else {
            continue;
        };
        let c = route_cost(prob, bus, &out.route.stops) - old;
        if best.as_ref().is_none_or(|(bc, _)| c < *bc - 1e-12) {
            best = Some((c, out));
        }
    }
    best
}

fn with_outcome<'a>(view: &View<'a>, k: usize, out: &RouteOutcome) -> View<'a> {
    let mut v = view.clone();
    for (sigma, s) in &out.others {
        let mut r = view.route(*sigma).clone();
        r.schedule = s.clone();
        v.set_route(*sigma, r);
    }
    v.set_route(k, out.route.clone());
    v
}

fn finish(prob: &Problem, sol: &Solution, view: &View, r: usize, plan: Plan, extra: f64) -> Insertion {
    let mut routes = Vec::new();
    let mut cost = extra;
    for (k, route) in &view.routes {
        cost += route_cost(prob, route.bus, &route.stops) - route_cost(prob, route.bus, &sol.routes[*k].stops);
        routes.push((*k, route.clone()));
    }
    routes.sort_by_key(|(k, _)| *k);
    Insertion {
        req: r,
        plan,
        cost,
        routes,
    }
}

/// Options a customer may be offered; all five by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptionMask(pub [bool; 5]);

impl Default for OptionMask {
    fn default() -> Self {
        OptionMask([true; 5])
    }
}

impl OptionMask {
    pub fn allows(&self, option: u8) -> bool {
        self.0[(option - 1) as usize]
    }

    pub fn only(options: &[u8]) -> Self {
        let mut m = [false; 5];
        for &o in options {
            m[(o - 1) as usize] = true;
        }
        OptionMask(m)
    }
}

/// Restrictions on the insertions generated for a customer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InsertFilter {
    pub mask: OptionMask,
    /// Only this transit pair.
    pub tp: Option<usize>,
    /// Never this transit pair.
    pub exclude_tp: Option<usize>,
    /// Leave idle buses alone.
    pub used_only: bool,
}

impl InsertFilter {
    pub fn options(options: &[u8]) -> Self {
        InsertFilter {
            mask: OptionMask::only(options),
            ..Default::default()
        }
    }
}

/// Feasible insertions of `r`, cheapest first: the best one per route (or
/// route pair) and option.
pub fn insertion_candidates(prob: &Problem, sol: &Solution, r: usize, filter: &InsertFilter) -> Vec<Insertion> {
    let mask = filter.mask;
    let p = prob.params();
    let req = &prob.requests[r];
    let base = View::new(sol);
    let ks = routes_to_try(prob, &base, filter.used_only);
    let mut out: Vec<Insertion> = Vec::new();

    if req.bus_servable && mask.allows(5) {
        for &k in &ks {
            let plan = Plan::bus_only(k);
            let mut v = base.clone();
            v.set_plan(r, Some(plan));
            if let Some((_, o)) = best_on_route(prob, &v, k, Stop::Pickup { req: r }, Stop::Dropoff { req: r }) {
                let v2 = with_outcome(&v, k, &o);
                out.push(finish(prob, sol, &v2, r, plan, 0.0));
            }
        }
    }

    let tps = prob
        .tps(r)
        .iter()
        .filter(|c| filter.tp.is_none_or(|t| t == c.tp) && filter.exclude_tp != Some(c.tp))
        .take(p.tp_candidates);
    for ctp in tps {
        let tpi = ctp.tp;
        let tp = prob.pair(tpi);
        let (entry, exit) = (prob.node(tp.entry), prob.node(tp.exit));
        let walk_first = prob.walk_to(r, tp.entry).filter(|w| {
            let dep = entry.theta_dep - w;
            req.origin_tw.contains(dep)
        });
        let walk_last = prob.walk_from(tp.exit, r).filter(|w| {
            let arr = exit.theta_arr + w;
            req.dest_tw.contains(arr)
        });
        let drop = Stop::TransitDrop { req: r, node: tp.entry };
        let pick = Stop::TransitPick { req: r, node: tp.exit };

        if ctp.allows(1) && mask.allows(1) {
            if let (Some(wf), Some(wl)) = (walk_first, walk_last) {
                let ride = exit.theta_arr + wl - (entry.theta_dep - wf);
                if ride <= req.max_travel_time + EPS_TIME {
                    let plan = Plan::with_transit(1, tpi, Mile::Walk, Mile::Walk);
                    out.push(finish(
                        prob,
                        sol,
                        &base,
                        r,
                        plan,
                        p.lambda2 * (tp.travel_time + wf + wl),
                    ));
                }
            }
        }
        if ctp.allows(2) && mask.allows(2) {
            if let Some(wl) = walk_last {
                for &k in &ks {
                    let plan = Plan::with_transit(2, tpi, Mile::Bus(k), Mile::Walk);
                    let mut v = base.clone();
                    v.set_plan(r, Some(plan));
                    if let Some((_, o)) = best_on_route(prob, &v, k, Stop::Pickup { req: r }, drop) {
                        let v2 = with_outcome(&v, k, &o);
                        out.push(finish(prob, sol, &v2, r, plan, p.lambda2 * (tp.travel_time + wl)));
                    }
                }
            }
        }
        if ctp.allows(3) && mask.allows(3) {
            if let Some(wf) = walk_first {
                for &k in &ks {
                    let plan = Plan::with_transit(3, tpi, Mile::Walk, Mile::Bus(k));
                    let mut v = base.clone();
                    v.set_plan(r, Some(plan));
                    if let Some((_, o)) = best_on_route(prob, &v, k, pick, Stop::Dropoff { req: r }) {
                        let v2 = with_outcome(&v, k, &o);
                        out.push(finish(prob, sol, &v2, r, plan, p.lambda2 * (tp.travel_time + wf)));
                    }
                }
            }
        }
        if ctp.allows(4) && mask.allows(4) {
            let mut firsts: Vec<(f64, usize, RouteOutcome)> = Vec::new();
            for &k1 in &ks {
                let plan = Plan::with_transit(4, tpi, Mile::Bus(k1), Mile::None);
                let mut v = base.clone();
                v.set_plan(r, Some(plan));
                if let Some((c, o)) = best_on_route(prob, &v, k1, Stop::Pickup { req: r }, drop) {
                    firsts.push((c, k1, o));
                }
            }
            firsts.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            for (_, k1, o1) in firsts.into_iter().take(2) {
                let mut v1 = base.clone();
                v1.set_plan(r, Some(Plan::with_transit(4, tpi, Mile::Bus(k1), Mile::None)));
                let v1 = with_outcome(&v1, k1, &o1);
                for &k2 in &routes_to_try(prob, &v1, filter.used_only) {
                    let plan = Plan::with_transit(4, tpi, Mile::Bus(k1), Mile::Bus(k2));
                    let mut v = v1.clone();
                    v.set_plan(r, Some(plan));
                    if let Some((_, o2)) = best_on_route(prob, &v, k2, pick, Stop::Dropoff { req: r }) {
                        let v2 = with_outcome(&v, k2, &o2);
                        out.push(finish(prob, sol, &v2, r, plan, p.lambda2 * tp.travel_time));
                    }
                }
            }
        }
    }
    out.sort_by(|x, y| x.cost.total_cmp(&y.cost).then(x.plan.option.cmp(&y.plan.option)));
    out
}

pub fn best_insertion(prob: &Problem, sol: &Solution, r: usize, filter: &InsertFilter) -> Option<Insertion> {
    insertion_candidates(prob, sol, r, filter).into_iter().next()
}

pub fn apply_insertion(prob: &Problem, sol: &mut Solution, ins: Insertion) {
    for (k, route) in ins.routes {
        sol.routes[k] = route;
    }
    let r = ins.req;
    sol.journeys[r] = Some(sol.journey_from_routes(prob, r, ins.plan));
    sol.rejected.remove(&r);
    rebuild_calendars(prob, sol);
    sol.refresh(prob);
}

fn commit_outcome(sol: &mut Solution, k: usize, out: RouteOutcome) {
    for (sigma, s) in out.others {
        sol.routes[sigma].schedule = s;
    }
    sol.routes[k] = out.route;
}

/// Remove customers and re-time the routes they leave. A route that cannot be
/// re-timed loses the customer at its failing stop as well. Returns every
/// customer removed.
pub fn remove_customers(prob: &Problem, sol: &mut Solution, reqs: &[usize]) -> Vec<usize> {
    let mut work: Vec<usize> = reqs.iter().rev().copied().collect();
    let mut removed = Vec::new();
    let mut dirty: Vec<usize> = Vec::new();
    loop {
        while let Some(r) = work.pop() {
            let Some(j) = sol.journeys[r].take() else { continue };
            sol.rejected.insert(r);
            removed.push(r);
            for k in j.plan.routes() {
                let route = &mut sol.routes[k];
                let keep: Vec<bool> = route.stops.iter().map(|s| s.req() != Some(r)).collect();
                route.schedule = route.schedule.restricted(prob, route.bus, &route.stops, &keep);
                route.stops.retain(|s| s.req() != Some(r));
                if !dirty.contains(&k) {
                    dirty.push(k);
                }
            }
        }
        let Some(k) = dirty.first().copied() else { break };
        let stops = sol.routes[k].stops.clone();
        let res = {
            let view = View::new(sol);
            evaluate_route(prob, &view, k, &stops)
        };
        match res {
            Ok(out) => {
                dirty.remove(0);
                commit_outcome(sol, k, out);
            }
            Err(v) => {
                let bare: Vec<Stop> = stops.iter().copied().filter(|s| !s.is_charger()).collect();
                let victim = bare
                    .get(v.stop)
                    .and_then(|s| s.req())
                    .or_else(|| bare[..v.stop.min(bare.len())].iter().rev().find_map(|s| s.req()))
                    .or_else(|| bare.iter().find_map(|s| s.req()));
                match victim {
                    Some(r) => work.push(r),
                    None => {
                        // nothing left to remove; an empty route is always feasible
                        dirty.remove(0);
                        sol.routes[k] = Route::empty(prob, sol.routes[k].bus);
                    }
                }
            }
        }
    }
    rebuild_calendars(prob, sol);
    sol.refresh(prob);
    removed
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{Bus, Charger, Instance, Params, Point, Request, Window};

    pub(crate) fn small(n_bus: usize, reqs: Vec<Request>) -> Problem {
        let bus = |id| Bus {
            id,
            type_id: 0,
            capacity: 4,
            consumption: 0.5,
            battery_capacity: 100.0,
            e_min: 10.0,
            e_max: 80.0,
            e_init: 80.0,
            origin_depot: 0,
            dest_depot: 0,
            speed: 25.0 / 60.0,
        };
        Problem::new(Instance {
            params: Params::default(),
            area: None,
            requests: reqs,
            buses: (0..n_bus).map(bus).collect(),
            depots: vec![Point::new(0.0, 0.0)],
            chargers: vec![Charger {
                id: 0,
                location: Point::new(0.0, 0.0),
                power: 0.83,
            }],
            lines: vec![],
            rng_seed: 0,
        })
    }

    pub(crate) fn req(id: usize, o: (f64, f64), d: (f64, f64), e: f64) -> Request {
        Request {
            id,
            origin: Point::new(o.0, o.1),
            destination: Point::new(d.0, d.1),
            origin_tw: Some(Window::new(e, e + 15.0)),
            dest_tw: None,
        }
    }

    #[test]
    fn single_customer_matches_enumeration() {
        let p = small(1, vec![req(0, (2.0, 0.0), (4.0, 0.0), 10.0)]);
        let sol = Solution::empty(&p);
        let ins = best_insertion(&p, &sol, 0, &InsertFilter::default()).unwrap();
        // only one placement exists on an empty route
        let stops = [
            Stop::OriginDepot { depot: 0 },
            Stop::Pickup { req: 0 },
            Stop::Dropoff { req: 0 },
            Stop::DestDepot { depot: 0 },
        ];
        let want = route_cost(&p, 0, &stops);
        assert!((ins.cost - want).abs() < 1e-9);
        // 2 km out, 2 km loaded, 4 km back at 25 km/h; the loaded leg counts twice
        assert!((want - (8.0 + 2.0) * 60.0 / 25.0).abs() < 1e-9);
    }

    #[test]
    fn insert_then_remove_restores_empty_solution() {
        let p = small(
            2,
            vec![
                req(0, (2.0, 0.0), (4.0, 0.0), 10.0),
                req(1, (3.0, 0.0), (5.0, 0.0), 12.0),
            ],
        );
        let mut sol = Solution::empty(&p);
        let empty_obj = sol.objective;
        for r in 0..2 {
            let ins = best_insertion(&p, &sol, r, &InsertFilter::default()).unwrap();
            apply_insertion(&p, &mut sol, ins);
        }
        assert!(sol.rejected.is_empty());
        sol.check_consistency(&p).unwrap();
        assert!(sol.objective < empty_obj);
        let removed = remove_customers(&p, &mut sol, &[0, 1]);
        assert_eq!(removed.len(), 2);
        sol.check_consistency(&p).unwrap();
        assert!((sol.objective - empty_obj).abs() < 1e-9);
    }

    #[test]
    fn shared_ride_is_cheaper_than_two_routes() {
        let p = small(
            2,
            vec![
                req(0, (2.0, 0.0), (6.0, 0.0), 10.0),
                req(1, (2.5, 0.0), (6.5, 0.0), 11.0),
            ],
        );
        let mut sol = Solution::empty(&p);
        for r in 0..2 {
            let ins = best_insertion(&p, &sol, r, &InsertFilter::default()).unwrap();
            apply_insertion(&p, &mut sol, ins);
        }
        assert_eq!(sol.routes.iter().filter(|r| r.is_used()).count(), 1);
    }
}
