//! Routes, customer journeys, the objective and the KPI suite.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::charging::ChargerCalendar;
use crate::error::{Error, Result};
use crate::feasibility::RouteSchedule;
use crate::problem::Problem;

/// One bus visit. Customer stops carry the request they serve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stop {
    OriginDepot {
        depot: usize,
    },
    Pickup {
        req: usize,
    },
    Dropoff {
        req: usize,
    },
    /// First mile: the customer leaves the bus to board transit at `node`.
    TransitDrop {
        req: usize,
        node: usize,
    },
    /// Last mile: the customer leaves transit at `node` and boards the bus.
    TransitPick {
        req: usize,
        node: usize,
    },
    Charger {
        charger: usize,
        start: f64,
        duration: f64,
    },
    DestDepot {
        depot: usize,
    },
}

impl Stop {
    pub fn req(&self) -> Option<usize> {
        match *self {
            Stop::Pickup { req }
            | Stop::Dropoff { req }
            | Stop::TransitDrop { req, .. }
            | Stop::TransitPick { req, .. } => Some(req),
            _ => None,
        }
    }

    /// Stop where the customer boards the bus.
    pub fn is_boarding(&self) -> bool {
        matches!(self, Stop::Pickup { .. } | Stop::TransitPick { .. })
    }

    pub fn is_charger(&self) -> bool {
        matches!(self, Stop::Charger { .. })
    }

    pub fn is_depot(&self) -> bool {
        matches!(self, Stop::OriginDepot { .. } | Stop::DestDepot { .. })
    }
}

/// How a customer covers the stretch between their door and transit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mile {
    None,
    Walk,
    Bus(usize),
}

/// Chosen travel option of a customer, independent of schedule times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    /// 1 walk-transit-walk, 2 bus-transit-walk, 3 walk-transit-bus,
    /// 4 bus-transit-bus, 5 bus only
    pub option: u8,
    /// Index of the transit pair, absent for option 5.
    pub tp: Option<usize>,
    pub first: Mile,
    pub last: Mile,
}

impl Plan {
    pub fn bus_only(route: usize) -> Self {
        Plan {
            option: 5,
            tp: None,
            first: Mile::Bus(route),
            last: Mile::Bus(route),
        }
    }

    pub fn with_transit(option: u8, tp: usize, first: Mile, last: Mile) -> Self {
        Plan {
            option,
            tp: Some(tp),
            first,
            last,
        }
    }

    /// Routes carrying this customer.
    pub fn routes(&self) -> Vec<usize> {
        let mut v = Vec::new();
        if let Mile::Bus(k) = self.first {
            v.push(k);
        }
        if let Mile::Bus(k) = self.last {
            if !v.contains(&k) {
                v.push(k);
            }
        }
        v
    }

    pub fn uses_transit(&self) -> bool {
        self.tp.is_some()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LegTimes {
    pub first_mile: f64,
    pub transit: f64,
    pub last_mile: f64,
    pub walk: f64,
    /// Driving time with the customer on board.
    pub in_bus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Journey {
    pub req: usize,
    pub plan: Plan,
    pub legs: LegTimes,
    pub dep: f64,
    pub arr: f64,
}

impl Journey {
    /// In-bus + in-transit + walking time; waiting is excluded.
    pub fn travel_cost(&self) -> f64 {
        self.legs.in_bus + self.legs.transit + self.legs.walk
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub bus: usize,
    pub stops: Vec<Stop>,
    pub schedule: RouteSchedule,
}

impl Route {
    pub fn empty(prob: &Problem, bus: usize) -> Self {
        let b = prob.bus(bus);
        let stops = vec![
            Stop::OriginDepot { depot: b.origin_depot },
            Stop::DestDepot { depot: b.dest_depot },
        ];
        let schedule = RouteSchedule::propagate(prob, bus, &stops, 0.0, &[f64::NEG_INFINITY; 2]);
        Route { bus, stops, schedule }
    }

    pub fn is_used(&self) -> bool {
        self.stops.iter().any(|s| !s.is_depot())
    }

    pub fn position(&self, pred: impl Fn(&Stop) -> bool) -> Option<usize> {
        self.stops.iter().position(pred)
    }

    pub fn pickup_of(&self, r: usize) -> Option<usize> {
        self.position(|s| s.req() == Some(r) && s.is_boarding())
    }

    pub fn dropoff_of(&self, r: usize) -> Option<usize> {
        self.position(|s| s.req() == Some(r) && !s.is_boarding())
    }

    /// Requests with at least one stop on the route, in first-visit order.
    pub fn requests(&self) -> Vec<usize> {
        let mut v: Vec<usize> = Vec::new();
        for s in &self.stops {
            if let Some(r) = s.req() {
                if !v.contains(&r) {
                    v.push(r);
                }
            }
        }
        v
    }
}

/// Sum of arc driving times along `stops[from..=to]`.
pub fn arc_time(prob: &Problem, bus: usize, stops: &[Stop], from: usize, to: usize) -> f64 {
    (from..to).map(|i| prob.travel(bus, &stops[i], &stops[i + 1])).sum()
}

/// λ1 · driving time + λ2 · in-bus time of every leg on the route.
pub fn route_cost(prob: &Problem, bus: usize, stops: &[Stop]) -> f64 {
    let p = prob.params();
    let total = arc_time(prob, bus, stops, 0, stops.len() - 1);
    let mut in_bus = 0.0;
    for (i, s) in stops.iter().enumerate() {
        if s.is_boarding() {
            let r = s.req().unwrap();
            if let Some(j) = stops[i + 1..]
                .iter()
                .position(|t| t.req() == Some(r) && !t.is_boarding())
            {
                in_bus += arc_time(prob, bus, stops, i, i + 1 + j);
            }
        }
    }
    p.lambda1 * total + p.lambda2 * in_bus
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub routes: Vec<Route>,
    pub journeys: Vec<Option<Journey>>,
    pub rejected: BTreeSet<usize>,
    pub calendars: Vec<ChargerCalendar>,
    pub objective: f64,
    /// Seed of the search that produced the solution.
    #[serde(default)]
    pub seed: u64,
}

impl Solution {
    /// Every bus idle and every customer rejected.
    pub fn empty(prob: &Problem) -> Self {
        let routes = (0..prob.instance.buses.len()).map(|k| Route::empty(prob, k)).collect();
        let calendars = (0..prob.instance.chargers.len()).map(ChargerCalendar::new).collect();
        let mut s = Solution {
            routes,
            journeys: vec![None; prob.n()],
            rejected: (0..prob.n()).collect(),
            calendars,
            objective: 0.0,
            seed: 0,
        };
        s.refresh(prob);
        s
    }

    pub fn plan(&self, r: usize) -> Option<Plan> {
        self.journeys[r].as_ref().map(|j| j.plan)
    }

    pub fn served(&self) -> impl Iterator<Item = &Journey> {
        self.journeys.iter().flatten()
    }

    /// Recompute journey times and the cached objective from the routes.
    pub fn refresh(&mut self, prob: &Problem) {
        for r in 0..self.journeys.len() {
            if let Some(j) = &self.journeys[r] {
                let plan = j.plan;
                self.journeys[r] = Some(self.journey_from_routes(prob, r, plan));
            }
        }
        self.objective = self.compute_objective(prob);
    }

    /// Journey times of `r` under `plan` read off the current schedules.
    pub fn journey_from_routes(&self, prob: &Problem, r: usize, plan: Plan) -> Journey {
        let mut legs = LegTimes::default();
        let (mut dep, mut arr) = (0.0, 0.0);
        let tp = plan.tp.map(|k| prob.pair(k));
        if let Some(tp) = tp {
            legs.transit = tp.travel_time;
        }
        if plan.option == 5 {
            if let Mile::Bus(k) = plan.first {
                let route = &self.routes[k];
                if let (Some(i), Some(j)) = (route.pickup_of(r), route.dropoff_of(r)) {
                    legs.in_bus = arc_time(prob, route.bus, &route.stops, i, j);
                    legs.first_mile = legs.in_bus;
                    dep = route.schedule.b[i];
                    arr = route.schedule.b[j];
                }
            }
        } else if let Some(tp) = tp {
            match plan.first {
                Mile::Walk => {
                    let w = prob.walk_to(r, tp.entry).unwrap_or(f64::INFINITY);
                    legs.first_mile = w;
                    legs.walk += w;
                    dep = prob.node(tp.entry).theta_dep - w;
                }
                Mile::Bus(k) => {
                    let route = &self.routes[k];
                    let i = route.position(|s| *s == Stop::Pickup { req: r });
                    let j = route.position(|s| *s == Stop::TransitDrop { req: r, node: tp.entry });
                    if let (Some(i), Some(j)) = (i, j) {
                        let t = arc_time(prob, route.bus, &route.stops, i, j);
                        legs.first_mile = t;
                        legs.in_bus += t;
                        dep = route.schedule.b[i];
                    }
                }
                Mile::None => {}
            }
            match plan.last {
                Mile::Walk => {
                    let w = prob.walk_from(tp.exit, r).unwrap_or(f64::INFINITY);
                    legs.last_mile = w;
                    legs.walk += w;
                    arr = prob.node(tp.exit).theta_arr + w;
                }
                Mile::Bus(k) => {
                    let route = &self.routes[k];
                    let i = route.position(|s| *s == Stop::TransitPick { req: r, node: tp.exit });
                    let j = route.position(|s| *s == Stop::Dropoff { req: r });
                    if let (Some(i), Some(j)) = (i, j) {
                        let t = arc_time(prob, route.bus, &route.stops, i, j);
                        legs.last_mile = t;
                        legs.in_bus += t;
                        arr = route.schedule.b[j];
                    }
                }
                Mile::None => {}
            }
        }
        Journey {
            req: r,
            plan,
            legs,
            dep,
            arr,
        }
    }

    /// λ1 Σ route driving time + λ2 Σ_r L̄_r + ω |rejected|.
    pub fn compute_objective(&self, prob: &Problem) -> f64 {
        let p = prob.params();
        let btt: f64 = self
            .routes
            .iter()
            .map(|r| arc_time(prob, r.bus, &r.stops, 0, r.stops.len() - 1))
            .sum();
        let ctt: f64 = self.served().map(Journey::travel_cost).sum();
        p.lambda1 * btt + p.lambda2 * ctt + p.omega * self.rejected.len() as f64
    }

    /// Structural consistency between journeys, routes and the rejection set.
    pub fn check_consistency(&self, prob: &Problem) -> Result<()> {
        for r in 0..prob.n() {
            let on_routes: Vec<usize> = self
                .routes
                .iter()
                .enumerate()
                .filter(|(_, rt)| rt.stops.iter().any(|s| s.req() == Some(r)))
                .map(|(k, _)| k)
                .collect();
            match (&self.journeys[r], self.rejected.contains(&r)) {
                (None, true) => {
                    if !on_routes.is_empty() {
                        return Err(Error::Inconsistent(format!("rejected request {r} still on a route")));
                    }
                }
                (Some(j), false) => {
                    let mut want = j.plan.routes();
                    want.sort();
                    if want != on_routes {
                        return Err(Error::Inconsistent(format!(
                            "request {r}: plan routes {want:?} but stops on {on_routes:?}"
                        )));
                    }
                    if j.plan.option == 4 && matches!(j.plan.last, Mile::None) {
                        return Err(Error::Inconsistent(format!(
                            "request {r}: option 4 without a last mile"
                        )));
                    }
                }
                _ => {
                    return Err(Error::Inconsistent(format!(
                        "request {r} must be either served or rejected"
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Solution> {
        serde_json::from_str(text).map_err(Error::from_json)
    }
}

/// The indicators reported per solution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    /// Total bus driving time (min).
    pub btt: f64,
    /// Total recharging time (min).
    pub rt: f64,
    /// Number of recharging events.
    pub n_recharge: usize,
    pub ctt: f64,
    pub ctt_transit: f64,
    pub ctt_bus: f64,
    pub ctt_walk: f64,
    pub wt: f64,
    pub n_cus_transit: usize,
    pub n_used_buses: usize,
    pub cus_per_bus: f64,
    pub n_reject: usize,
    pub n_to4: usize,
}

impl KpiReport {
    pub const HEADER: [&'static str; 13] = [
        "BTT",
        "RT",
        "#RE",
        "CTT",
        "CTT-transit",
        "CTT-bus",
        "CTT-walk",
        "WT",
        "#cus-transit",
        "#used-buses",
        "#cus/bus",
        "#reject",
        "#TO4",
    ];

    pub fn row(&self) -> Vec<String> {
        vec![
            format!("{:.3}", self.btt),
            format!("{:.3}", self.rt),
            self.n_recharge.to_string(),
            format!("{:.3}", self.ctt),
            format!("{:.3}", self.ctt_transit),
            format!("{:.3}", self.ctt_bus),
            format!("{:.3}", self.ctt_walk),
            format!("{:.3}", self.wt),
            self.n_cus_transit.to_string(),
            self.n_used_buses.to_string(),
            format!("{:.3}", self.cus_per_bus),
            self.n_reject.to_string(),
            self.n_to4.to_string(),
        ]
    }
}

/// Waiting experienced by `r`: at transit stations and on board while the bus
/// serves others or idles.
pub fn customer_wait(sol: &Solution, prob: &Problem, j: &Journey) -> f64 {
    let r = j.req;
    let mut wt = 0.0;
    let on_board = |k: usize, board: usize, alight: usize| {
        let route = &sol.routes[k];
        let s = &route.schedule;
        let ride = s.b[alight] - s.d[board];
        (ride - arc_time(prob, route.bus, &route.stops, board, alight)).max(0.0)
    };
    if let Some(tp) = j.plan.tp.map(|k| prob.pair(k)) {
        if let Mile::Bus(k) = j.plan.first {
            let route = &sol.routes[k];
            let a = route.position(|s| *s == Stop::Pickup { req: r });
            let b = route.position(|s| *s == Stop::TransitDrop { req: r, node: tp.entry });
            if let (Some(a), Some(b)) = (a, b) {
                wt += (prob.node(tp.entry).theta_dep - route.schedule.a[b]).max(0.0);
                wt += on_board(k, a, b);
            }
        }
        if let Mile::Bus(k) = j.plan.last {
            let route = &sol.routes[k];
            let a = route.position(|s| *s == Stop::TransitPick { req: r, node: tp.exit });
            let b = route.position(|s| *s == Stop::Dropoff { req: r });
            if let (Some(a), Some(b)) = (a, b) {
                wt += (route.schedule.b[a] - prob.node(tp.exit).theta_arr).max(0.0);
                wt += on_board(k, a, b);
            }
        }
    } else if let Mile::Bus(k) = j.plan.first {
        let route = &sol.routes[k];
        if let (Some(a), Some(b)) = (route.pickup_of(r), route.dropoff_of(r)) {
            wt += on_board(k, a, b);
        }
    }
    wt
}

pub fn kpis(sol: &Solution, prob: &Problem) -> KpiReport {
    let mut k = KpiReport::default();
    for route in &sol.routes {
        k.btt += arc_time(prob, route.bus, &route.stops, 0, route.stops.len() - 1);
        for s in &route.stops {
            if let Stop::Charger { duration, .. } = s {
                k.rt += duration;
                k.n_recharge += 1;
            }
        }
        if route.is_used() {
            k.n_used_buses += 1;
        }
    }
    let served: Vec<&Journey> = sol.served().collect();
    let mut on_bus = 0usize;
    for j in &served {
        k.ctt += j.travel_cost();
        k.ctt_transit += j.legs.transit;
        k.ctt_bus += j.legs.in_bus;
        k.ctt_walk += j.legs.walk;
        k.wt += customer_wait(sol, prob, j);
        if j.plan.uses_transit() {
            k.n_cus_transit += 1;
        }
        if j.plan.option == 4 {
            k.n_to4 += 1;
        }
        if !j.plan.routes().is_empty() {
            on_bus += 1;
        }
    }
    let ns = served.len().max(1) as f64;
    k.ctt /= ns;
    k.ctt_transit /= ns;
    k.ctt_bus /= ns;
    k.ctt_walk /= ns;
    k.wt /= ns;
    k.cus_per_bus = if k.n_used_buses > 0 {
        on_bus as f64 / k.n_used_buses as f64
    } else {
        0.0
    };
    k.n_reject = sol.rejected.len();
    k
}
