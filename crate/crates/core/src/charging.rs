//! Charger calendars and partial-recharge scheduling for energy-infeasible routes.

use serde::{Deserialize, Serialize};

use crate::feasibility::{
    build_context, check_energy, check_schedule, departure_slack, nine_step_evaluate, RouteSchedule, View, Violation,
    ViolationKind,
};
use crate::model::{EPS_ENERGY, EPS_TIME};
use crate::problem::Problem;
use crate::solution::{Mile, Route, Solution, Stop};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reservation {
    pub bus: usize,
    pub start: f64,
    pub end: f64,
}

/// Charging intervals booked at one charger; one vehicle at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargerCalendar {
    pub charger: usize,
    /// Sorted by start, pairwise disjoint.
    pub reserved: Vec<Reservation>,
}

impl ChargerCalendar {
    pub fn new(charger: usize) -> Self {
        ChargerCalendar {
            charger,
            reserved: Vec::new(),
        }
    }

    /// Gaps between reservations, ascending by start.
    pub fn vacant(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.reserved.len() + 1);
        let mut t = f64::NEG_INFINITY;
        for r in &self.reserved {
            if r.start > t {
                out.push((t, r.start));
            }
            t = t.max(r.end);
        }
        out.push((t, f64::INFINITY));
        out
    }

    pub fn is_free(&self, start: f64, end: f64) -> bool {
        self.reserved
            .iter()
            .all(|r| end <= r.start + EPS_TIME || start >= r.end - EPS_TIME)
    }

    /// Book an interval; refuses overlaps.
    pub fn reserve(&mut self, bus: usize, start: f64, end: f64) -> bool {
        if !self.is_free(start, end) {
            return false;
        }
        let at = self.reserved.partition_point(|r| r.start < start);
        self.reserved.insert(at, Reservation { bus, start, end });
        true
    }

    pub fn release_bus(&mut self, bus: usize) {
        self.reserved.retain(|r| r.bus != bus);
    }

    pub fn has_overlap(&self) -> bool {
        self.reserved
            .windows(2)
            .any(|w| w[1].start < w[0].end - EPS_TIME || w[1].start < w[0].start)
    }
}

/// Calendars implied by the charger stops on the routes of `view`, leaving out
/// route `skip`.
pub fn calendars_from_view(prob: &Problem, view: &View, skip: Option<usize>) -> Vec<ChargerCalendar> {
    let mut cals: Vec<ChargerCalendar> = (0..prob.instance.chargers.len()).map(ChargerCalendar::new).collect();
    for k in 0..view.n_routes() {
        if Some(k) == skip {
            continue;
        }
        let route = view.route(k);
        for s in &route.stops {
            if let Stop::Charger {
                charger,
                start,
                duration,
            } = *s
            {
                let c = &mut cals[charger];
                let at = c.reserved.partition_point(|r| r.start < start);
                c.reserved.insert(
                    at,
                    Reservation {
                        bus: route.bus,
                        start,
                        end: start + duration,
                    },
                );
            }
        }
    }
    cals
}

pub fn rebuild_calendars(prob: &Problem, sol: &mut Solution) {
    let view = View::new(sol);
    let cals = calendars_from_view(prob, &view, None);
    sol.calendars = cals;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargingEvent {
    /// The charger is visited right after this stop of the route it was
    /// scheduled on.
    pub position: usize,
    pub charger: usize,
    pub start: f64,
    pub duration: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyPass {
    /// Total energy shortfall at the end of the route.
    pub delta_e: f64,
    /// First stop reached with SoC below the minimum.
    pub i_low: Option<usize>,
    pub delta_e_low: f64,
    /// SoC on arrival at each stop.
    pub soc: Vec<f64>,
}

pub fn energy_pass(prob: &Problem, bus: usize, stops: &[Stop], s: &RouteSchedule) -> EnergyPass {
    let b = prob.bus(bus);
    let soc: Vec<f64> = (0..stops.len()).map(|i| s.soc_arrival(prob, bus, stops, i)).collect();
    let last = *soc.last().unwrap_or(&b.e_init);
    let i_low = soc.iter().position(|&e| e < b.e_min - EPS_ENERGY);
    EnergyPass {
        delta_e: b.e_min - last,
        i_low,
        delta_e_low: i_low.map_or(0.0, |i| b.e_min - soc[i]),
        soc,
    }
}

/// Route with charger stops spliced in.
#[derive(Debug, Clone)]
pub struct Recharged {
    pub stops: Vec<Stop>,
    pub schedule: RouteSchedule,
    pub events: Vec<ChargingEvent>,
}

fn splice(
    prob: &Problem,
    bus: usize,
    stops: &[Stop],
    s: &RouteSchedule,
    i: usize,
    stop: Stop,
    d0: f64,
) -> (Vec<Stop>, RouteSchedule) {
    let mut st = stops.to_vec();
    st.insert(i + 1, stop);
    let mut floor = s.floor.clone();
    if d0 < s.d0 {
        // leaving earlier must not pull the later stops forward
        for (f, b) in floor.iter_mut().zip(&s.b).skip(1) {
            *f = f.max(*b);
        }
    }
    floor.insert(i + 1, f64::NEG_INFINITY);
    let mut ns = RouteSchedule::propagate(prob, bus, &st, d0, &floor);
    ns.f_delay = s.f_delay;
    (st, ns)
}

/// Insert partial recharges on route `k` so that its SoC never drops below
/// the minimum, booking vacant time in `cals`. On failure `cals` is left as
/// it was.
pub fn schedule_recharges(
    prob: &Problem,
    view: &View,
    k: usize,
    stops: &[Stop],
    sched: &RouteSchedule,
    cals: &mut [ChargerCalendar],
) -> Option<Recharged> {
    let bus = view.route(k).bus;
    let bk = prob.bus(bus);
    let cst = prob.params().charge_service_time;
    let mut stops = stops.to_vec();
    let mut s = sched.clone();
    let mut events: Vec<ChargingEvent> = Vec::new();
    let mut booked: Vec<usize> = Vec::new();
    let mut from = 0usize;

    let rollback = |cals: &mut [ChargerCalendar], booked: &[usize], events: &[ChargingEvent]| {
        for (c, ev) in booked.iter().zip(events) {
            cals[*c]
                .reserved
                .retain(|r| !(r.bus == bus && r.start == ev.start && r.end == ev.start + ev.duration));
        }
    };

    'outer: loop {
        let ep = energy_pass(prob, bus, &stops, &s);
        let Some(i_low) = ep.i_low else {
            return Some(Recharged {
                stops,
                schedule: s,
                events,
            });
        };
        let delta_e = ep.delta_e.max(ep.delta_e_low);
        let ctx = build_context(prob, view, k, &stops);
        for i in from..i_low.min(stops.len() - 1) {
            if s.q[i] != 0 || stops[i].is_charger() || stops[i + 1].is_charger() {
                continue;
            }
            let f = departure_slack(prob, &stops, &s, &ctx, i);
            // at the origin depot the bus may simply leave earlier
            let early = if i == 0 {
                (s.d[0] - prob.window(&stops[0]).e).max(0.0)
            } else {
                0.0
            };
            let here = prob.location(&stops[i]);
            let next = prob.location(&stops[i + 1]);
            let mut order: Vec<usize> = (0..prob.instance.chargers.len()).collect();
            order.sort_by(|&a, &b| {
                let da = here.dist(&prob.instance.chargers[a].location);
                let db = here.dist(&prob.instance.chargers[b].location);
                da.total_cmp(&db).then(a.cmp(&b))
            });
            'chargers: for c in order {
                let ch = &prob.instance.chargers[c];
                let t_in = bk.travel_time(&here, &ch.location);
                let t_out = bk.travel_time(&ch.location, &next);
                let detour_t = t_in + t_out - bk.travel_time(&here, &next);
                let detour_e =
                    bk.energy(&here, &ch.location) + bk.energy(&ch.location, &next) - bk.energy(&here, &next);
                let avail = f - detour_t - cst;
                let need = delta_e + detour_e;
                let need_low = ep.delta_e_low + detour_e;
                let soc_at = ep.soc[i] - bk.energy(&here, &ch.location);
                if soc_at < bk.e_min - EPS_ENERGY {
                    continue;
                }
                let cap = (bk.e_max - soc_at) / ch.power;
                let d_max = (need / ch.power).min(cap);
                let d_min = need_low / ch.power;
                if d_min > cap + EPS_TIME || avail + early < d_min - EPS_TIME {
                    continue;
                }
                let hi = s.d[i] + t_in + cst + avail;
                let lo = s.d[i] - early + t_in + cst;
                for (vs, ve) in cals[c].vacant() {
                    if ve <= lo + EPS_TIME {
                        continue;
                    }
                    let (a, b) = (lo.max(vs), hi.min(ve));
                    if b < a - EPS_TIME {
                        // nothing left at this position
                        break 'chargers;
                    }
                    let len = b - a;
                    let dur = if len >= d_max - EPS_TIME {
                        d_max
                    } else if len >= d_min - EPS_TIME {
                        len
                    } else {
                        continue;
                    };
                    if dur <= EPS_TIME {
                        continue;
                    }
                    let stop = Stop::Charger {
                        charger: c,
                        start: a,
                        duration: dur,
                    };
                    let d0 = if i == 0 { s.d0.min(a - cst - t_in) } else { s.d0 };
                    let (nst, ns) = splice(prob, bus, &stops, &s, i, stop, d0);
                    let nctx = build_context(prob, view, k, &nst);
                    if !check_schedule(prob, bus, &nst, &ns, &nctx).is_empty() {
                        continue;
                    }
                    if !cals[c].reserve(bus, a, a + dur) {
                        continue;
                    }
                    booked.push(c);
                    events.push(ChargingEvent {
                        position: i,
                        charger: c,
                        start: a,
                        duration: dur,
                        energy: dur * ch.power,
                    });
                    stops = nst;
                    s = ns;
                    from = i + 2;
                    continue 'outer;
                }
            }
        }
        rollback(cals, &booked, &events);
        return None;
    }
}

/// A route re-timed and recharged, with the schedules of other routes it moved.
#[derive(Debug, Clone)]
pub struct RouteOutcome {
    pub route: Route,
    pub others: Vec<(usize, RouteSchedule)>,
    pub events: Vec<ChargingEvent>,
}

/// Evaluate route `k` with a new stop sequence: charger stops are dropped,
/// the nine-step evaluation times the route, journeys shared with other routes
/// are re-checked and recharges are scheduled against the calendars of the
/// remaining routes.
pub fn evaluate_route(prob: &Problem, view: &View, k: usize, stops: &[Stop]) -> Result<RouteOutcome, Violation> {
    let bus = view.route(k).bus;
    let bare: Vec<Stop> = stops.iter().copied().filter(|s| !s.is_charger()).collect();
    let (sched, others) = nine_step_evaluate(prob, view, k, &bare)?;
    let mut v2 = view.clone();
    for (sigma, s) in &others {
        let mut r = view.route(*sigma).clone();
        r.schedule = s.clone();
        v2.set_route(*sigma, r);
    }
    let energy = energy_pass(prob, bus, &bare, &sched);
    let (stops, schedule, events) = if energy.i_low.is_none() {
        (bare, sched, Vec::new())
    } else {
        let mut cals = calendars_from_view(prob, &v2, Some(k));
        match schedule_recharges(prob, &v2, k, &bare, &sched, &mut cals) {
            Some(rc) => (rc.stops, rc.schedule, rc.events),
            None => {
                return Err(Violation {
                    step: 9,
                    stop: energy.i_low.unwrap_or(0),
                    kind: ViolationKind::Energy,
                    amount: energy.delta_e,
                })
            }
        }
    };
    if let Some(v) = check_energy(prob, bus, &stops, &schedule).into_iter().next() {
        return Err(v);
    }
    let route = Route { bus, stops, schedule };
    partner_check(prob, &v2, k, &route)?;
    Ok(RouteOutcome { route, others, events })
}

/// Journey bounds of customers whose other bus leg is on a different route.
fn partner_check(prob: &Problem, view: &View, k: usize, route: &Route) -> Result<(), Violation> {
    for r in route.requests() {
        let Some(plan) = view.plan(r) else { continue };
        let (Mile::Bus(f), Mile::Bus(l)) = (plan.first, plan.last) else {
            continue;
        };
        if f == l || (f != k && l != k) {
            continue;
        }
        let pick_route = if f == k { route } else { view.route(f) };
        let drop_route = if l == k { route } else { view.route(l) };
        let (Some(i), Some(j)) = (
            pick_route.position(|s| *s == Stop::Pickup { req: r }),
            drop_route.position(|s| *s == Stop::Dropoff { req: r }),
        ) else {
            continue;
        };
        let ride = drop_route.schedule.b[j] - pick_route.schedule.b[i];
        let lmax = prob.requests[r].max_travel_time;
        if ride > lmax + EPS_TIME {
            let at = route.position(|s| s.req() == Some(r)).unwrap_or(0);
            return Err(Violation {
                step: 9,
                stop: at,
                kind: ViolationKind::RideTime,
                amount: ride - lmax,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::insertion::tests::{req, small};
    use crate::model::{Request, Window};
    use crate::solution::Plan;

    fn one_customer(e_init: f64, r: Request) -> (Problem, Solution, Vec<Stop>) {
        let mut p = small(1, vec![r]);
        p.instance.buses[0].e_init = e_init;
        let p = Problem::new(p.instance);
        let mut sol = Solution::empty(&p);
        let stops = vec![
            Stop::OriginDepot { depot: 0 },
            Stop::Pickup { req: 0 },
            Stop::Dropoff { req: 0 },
            Stop::DestDepot { depot: 0 },
        ];
        sol.journeys[0] = Some(sol.journey_from_routes(&p, 0, Plan::bus_only(0)));
        sol.rejected.remove(&0);
        (p, sol, stops)
    }

    #[test]
    fn calendar_refuses_overlap_and_lists_gaps() {
        let mut c = ChargerCalendar::new(0);
        assert!(c.reserve(0, 30.0, 40.0));
        assert!(c.reserve(1, 10.0, 20.0));
        assert!(!c.reserve(2, 15.0, 25.0));
        assert!(c.reserve(2, 20.0, 30.0));
        assert_eq!(c.vacant(), vec![(f64::NEG_INFINITY, 10.0), (40.0, f64::INFINITY)]);
        assert!(!c.has_overlap());
        c.release_bus(2);
        assert_eq!(c.vacant()[1], (20.0, 30.0));
    }

    #[test]
    fn energy_pass_sums_leg_consumption() {
        // 2 km out, 2 km loaded, 4 km back at 0.5 kWh/km
        let (p, sol, stops) = one_customer(80.0, req(0, (2.0, 0.0), (4.0, 0.0), 10.0));
        let (s, _) = nine_step_evaluate(&p, &View::new(&sol), 0, &stops).unwrap();
        let ep = energy_pass(&p, 0, &stops, &s);
        assert!((ep.soc[3] - 76.0).abs() < 1e-9);
        assert!((ep.delta_e - (10.0 - 76.0)).abs() < 1e-9);
        assert_eq!(ep.i_low, None);
    }

    #[test]
    fn battery_at_minimum_runs_low_at_first_stop() {
        let (p, sol, stops) = one_customer(10.0, req(0, (2.0, 0.0), (4.0, 0.0), 10.0));
        let (s, _) = nine_step_evaluate(&p, &View::new(&sol), 0, &stops).unwrap();
        let ep = energy_pass(&p, 0, &stops, &s);
        assert_eq!(ep.i_low, Some(1));
        assert!((ep.delta_e_low - 1.0).abs() < 1e-9);
        assert!((ep.delta_e - 4.0).abs() < 1e-9);
    }

    #[test]
    fn sufficient_battery_schedules_nothing() {
        let (p, sol, stops) = one_customer(80.0, req(0, (2.0, 0.0), (4.0, 0.0), 10.0));
        let out = evaluate_route(&p, &View::new(&sol), 0, &stops).unwrap();
        assert!(out.events.is_empty());
        assert_eq!(out.route.stops, stops);
    }

    #[test]
    fn vacant_charger_gets_one_full_recharge() {
        // 2 kWh short at the end; the depot charger delivers 0.83 kWh/min
        let (p, sol, stops) = one_customer(12.0, req(0, (2.0, 0.0), (4.0, 0.0), 10.0));
        let view = View::new(&sol);
        let (s, _) = nine_step_evaluate(&p, &view, 0, &stops).unwrap();
        let mut cals = calendars_from_view(&p, &view, Some(0));
        let rc = schedule_recharges(&p, &view, 0, &stops, &s, &mut cals).unwrap();
        assert_eq!(rc.events.len(), 1);
        let ev = &rc.events[0];
        assert_eq!(ev.position, 0);
        assert!((ev.duration - 2.0 / 0.83).abs() < 1e-9);
        assert!((ev.energy - 2.0).abs() < 1e-9);
        let end = *rc.schedule.soc.last().unwrap();
        assert!((end - 10.0).abs() < 1e-9);
        assert_eq!(cals[0].reserved.len(), 1);
        assert!(check_energy(&p, 0, &rc.stops, &rc.schedule).is_empty());
    }

    #[test]
    fn busy_charger_fails_without_residue() {
        let (p, sol, stops) = one_customer(12.0, req(0, (2.0, 0.0), (4.0, 0.0), 10.0));
        let view = View::new(&sol);
        let (s, _) = nine_step_evaluate(&p, &view, 0, &stops).unwrap();
        let mut cals = calendars_from_view(&p, &view, Some(0));
        assert!(cals[0].reserve(7, -1e6, 1e6));
        let before = cals.clone();
        assert!(schedule_recharges(&p, &view, 0, &stops, &s, &mut cals).is_none());
        assert_eq!(cals, before);
        assert!(evaluate_route(&p, &view, 0, &stops).is_ok_and(|o| o.events.len() == 1));
    }

    #[test]
    fn depot_charge_may_start_before_the_planned_departure() {
        // a one-minute pickup window leaves no room after leaving, but the bus
        // idles at the depot long before it has to go
        let mut r = req(0, (2.0, 0.0), (4.0, 0.0), 30.0);
        r.origin_tw = Some(Window::new(30.0, 31.0));
        let (p, sol, stops) = one_customer(10.5, r);
        let view = View::new(&sol);
        let (s, _) = nine_step_evaluate(&p, &view, 0, &stops).unwrap();
        let out = evaluate_route(&p, &view, 0, &stops).unwrap();
        let ev = &out.events[0];
        assert!((ev.duration - 3.5 / 0.83).abs() < 1e-9);
        assert!(ev.start + ev.duration <= s.d0 + 1e-9);
        let b = &out.route.schedule.b;
        assert!((b[2] - s.b[1]).abs() < 1e-9 && (b[3] - s.b[2]).abs() < 1e-9);
    }

    #[test]
    fn contending_buses_book_disjoint_slots() {
        let mut p = small(
            2,
            vec![
                req(0, (2.0, 0.0), (4.0, 0.0), 10.0),
                req(1, (0.0, 2.0), (0.0, 4.0), 10.0),
            ],
        );
        for b in &mut p.instance.buses {
            b.e_init = 12.0;
        }
        let p = Problem::new(p.instance);
        let mut sol = Solution::empty(&p);
        for r in 0..2 {
            let ins = crate::insertion::best_insertion(&p, &sol, r, &Default::default()).unwrap();
            crate::insertion::apply_insertion(&p, &mut sol, ins);
        }
        assert!(sol.rejected.is_empty());
        let starts: Vec<(f64, f64)> = sol
            .routes
            .iter()
            .flat_map(|r| r.stops.iter())
            .filter_map(|s| match *s {
                Stop::Charger { start, duration, .. } => Some((start, start + duration)),
                _ => None,
            })
            .collect();
        assert_eq!(starts.len(), 2);
        assert!(starts[0].1 <= starts[1].0 + 1e-9 || starts[1].1 <= starts[0].0 + 1e-9);
        assert!(sol.calendars.iter().all(|c| !c.has_overlap()));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn reservations_never_overlap(
                asks in prop::collection::vec((0usize..4, 0.0..200.0f64, 0.0..30.0f64), 0..40)
            ) {
                let mut cal = ChargerCalendar::new(0);
                for (bus, start, len) in asks {
                    let free = cal.is_free(start, start + len);
                    prop_assert_eq!(cal.reserve(bus, start, start + len), free);
                    prop_assert!(!cal.has_overlap());
                }
                let gaps = cal.vacant();
                prop_assert_eq!(gaps.len(), cal.reserved.len() + 1);
                prop_assert!(gaps.windows(2).all(|w| w[0].1 <= w[1].0));
            }
        }
    }
}
