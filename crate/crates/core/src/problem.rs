//! A loaded instance together with everything derived from it once: request
//! windows, the expanded transit graph and stop attributes.

use crate::model::{Bus, Instance, Params, Point, TimedRequest, Window};
use crate::solution::Stop;
use crate::transit::{walk_time, CustomerTp, ExpandedTransitGraph, TransitNode, TransitPair};

#[derive(Debug, Clone)]
pub struct Problem {
    pub instance: Instance,
    pub requests: Vec<TimedRequest>,
    pub graph: ExpandedTransitGraph,
}

impl Problem {
    pub fn new(instance: Instance) -> Self {
        let requests = instance.timed_requests();
        let graph = ExpandedTransitGraph::build(&instance.lines, &requests, &instance.params);
        Problem {
            instance,
            requests,
            graph,
        }
    }

    pub fn params(&self) -> &Params {
        &self.instance.params
    }

    pub fn n(&self) -> usize {
        self.requests.len()
    }

    pub fn bus(&self, k: usize) -> &Bus {
        &self.instance.buses[k]
    }

    pub fn node(&self, g: usize) -> &TransitNode {
        &self.graph.nodes[g]
    }

    pub fn pair(&self, tp: usize) -> &TransitPair {
        &self.graph.pairs[tp]
    }

    pub fn tps(&self, r: usize) -> &[CustomerTp] {
        &self.graph.per_customer[r]
    }

    pub fn location(&self, s: &Stop) -> Point {
        match *s {
            Stop::OriginDepot { depot } | Stop::DestDepot { depot } => self.instance.depots[depot],
            Stop::Pickup { req } => self.requests[req].origin,
            Stop::Dropoff { req } => self.requests[req].destination,
            Stop::TransitDrop { node, .. } | Stop::TransitPick { node, .. } => self.graph.nodes[node].location,
            Stop::Charger { charger, .. } => self.instance.chargers[charger].location,
        }
    }

    /// Time spent at the stop once service begins (including any charging).
    pub fn service(&self, s: &Stop) -> f64 {
        match *s {
            Stop::OriginDepot { .. } | Stop::DestDepot { .. } => 0.0,
            Stop::Charger { duration, .. } => self.params().charge_service_time + duration,
            _ => self.params().mu,
        }
    }

    /// Window on the beginning of service.
    pub fn window(&self, s: &Stop) -> Window {
        let t_end = self.params().t_end;
        match *s {
            Stop::OriginDepot { .. } | Stop::DestDepot { .. } => Window::new(0.0, t_end),
            Stop::Pickup { req } => self.requests[req].origin_tw,
            Stop::Dropoff { req } => self.requests[req].dest_tw,
            // the bus is bound by its arrival time here, see `arrival_bound`
            Stop::TransitDrop { .. } => Window::new(f64::NEG_INFINITY, f64::INFINITY),
            Stop::TransitPick { node, .. } => {
                let n = &self.graph.nodes[node];
                Window::new(n.theta_arr, n.theta_arr + self.params().gamma)
            }
            Stop::Charger { start, .. } => {
                let b = start - self.params().charge_service_time;
                Window::new(b, b)
            }
        }
    }

    /// Window on the arrival time at first-mile transit stops.
    pub fn arrival_bound(&self, s: &Stop) -> Option<Window> {
        match *s {
            Stop::TransitDrop { node, .. } => {
                let n = &self.graph.nodes[node];
                Some(Window::new(n.theta_dep - self.params().gamma, n.theta_dep))
            }
            _ => None,
        }
    }

    pub fn load_delta(&self, s: &Stop) -> i32 {
        match s {
            Stop::Pickup { .. } | Stop::TransitPick { .. } => 1,
            Stop::Dropoff { .. } | Stop::TransitDrop { .. } => -1,
            _ => 0,
        }
    }

    pub fn travel(&self, bus: usize, a: &Stop, b: &Stop) -> f64 {
        self.bus(bus).travel_time(&self.location(a), &self.location(b))
    }

    pub fn energy(&self, bus: usize, a: &Stop, b: &Stop) -> f64 {
        self.bus(bus).energy(&self.location(a), &self.location(b))
    }

    /// Walking time from the origin of `r` to transit node `g`.
    pub fn walk_to(&self, r: usize, g: usize) -> Option<f64> {
        walk_time(&self.requests[r].origin, &self.graph.nodes[g].location, self.params())
    }

    /// Walking time from transit node `g` to the destination of `r`.
    pub fn walk_from(&self, g: usize, r: usize) -> Option<f64> {
        walk_time(
            &self.graph.nodes[g].location,
            &self.requests[r].destination,
            self.params(),
        )
    }

    /// Mean distance over all pairs of distinct bus-graph locations.
    pub fn mean_arc_distance(&self) -> f64 {
        let mut pts: Vec<Point> = Vec::new();
        let mut add = |p: Point| {
            if !pts.iter().any(|q| q.coincides(&p)) {
                pts.push(p);
            }
        };
        for r in &self.requests {
            add(r.origin);
            add(r.destination);
        }
        for d in &self.instance.depots {
            add(*d);
        }
        for c in &self.instance.chargers {
            add(c.location);
        }
        for n in &self.graph.nodes {
            add(n.location);
        }
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i != j {
                    sum += pts[i].dist(&pts[j]);
                    count += 1;
                }
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    /// Longest distance between any two bus-graph locations.
    pub fn max_arc_distance(&self) -> f64 {
        let mut pts: Vec<Point> = Vec::new();
        for r in &self.requests {
            pts.push(r.origin);
            pts.push(r.destination);
        }
        pts.extend(self.instance.depots.iter().copied());
        pts.extend(self.instance.chargers.iter().map(|c| c.location));
        pts.extend(self.graph.nodes.iter().map(|n| n.location));
        let mut m: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                m = m.max(pts[i].dist(&pts[j]));
            }
        }
        m
    }
}
