//! Immutable problem data: customers, buses, depots, chargers, transit lines and
//! the global parameter set.
//!
//! Times are minutes from the start of the horizon, distances are kilometres,
//! energy is kWh.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for every time comparison (minutes).
pub const EPS_TIME: f64 = 1e-6;
/// Tolerance for every energy comparison (kWh).
pub const EPS_ENERGY: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Same physical place, up to a metre.
    pub fn coincides(&self, other: &Point) -> bool {
        self.dist(other) < 1e-3
    }
}

/// Travel time in minutes between two points at `speed` km/min.
pub fn bus_travel_time(a: &Point, b: &Point, speed: f64) -> f64 {
    debug_assert!(speed > 0.0);
    a.dist(b) / speed
}

/// Closed interval `[e, l]` in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub e: f64,
    pub l: f64,
}

impl Window {
    pub const fn new(e: f64, l: f64) -> Self {
        Window { e, l }
    }

    pub fn is_empty(&self) -> bool {
        self.e > self.l + EPS_TIME
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.e - EPS_TIME && t <= self.l + EPS_TIME
    }

    pub fn clip(&self, lo: f64, hi: f64) -> Window {
        Window::new(self.e.max(lo), self.l.min(hi))
    }
}

fn default_lambda() -> f64 {
    1.0
}
fn default_omega() -> f64 {
    200.0
}
fn default_phi() -> f64 {
    1.5
}
fn default_gamma() -> f64 {
    10.0
}
fn default_eta_min() -> f64 {
    1.0
}
fn default_eta_max() -> f64 {
    10.0
}
fn default_max_walk() -> f64 {
    1.5
}
fn default_walk_speed() -> f64 {
    0.085
}
fn default_bus_speed() -> f64 {
    25.0 / 60.0
}
fn default_mu() -> f64 {
    0.5
}
fn default_charge_service() -> f64 {
    1.0
}
fn default_t_end() -> f64 {
    120.0
}
fn default_n_iter() -> usize {
    600
}
fn default_t_max_factor() -> f64 {
    1.0
}
fn default_t_red() -> f64 {
    700.0
}
fn default_xi_max() -> f64 {
    0.25
}
fn default_alpha_ls() -> f64 {
    1.06
}
fn default_tp_candidates() -> usize {
    8
}

/// Global weights, service rules and search parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(default = "default_lambda")]
    pub lambda1: f64,
    #[serde(default = "default_lambda")]
    pub lambda2: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_phi")]
    pub phi: f64,
    /// Longest wait at a transit station (min).
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_eta_min")]
    pub eta_min: f64,
    #[serde(default = "default_eta_max")]
    pub eta_max: f64,
    #[serde(default = "default_max_walk")]
    pub max_walk_dist: f64,
    /// km/min
    #[serde(default = "default_walk_speed")]
    pub walk_speed: f64,
    /// Reference bus speed used for direct travel times (km/min).
    #[serde(default = "default_bus_speed")]
    pub bus_speed: f64,
    /// Service time at every customer and transit stop (min).
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Hookup time for one charging operation (min).
    #[serde(default = "default_charge_service")]
    pub charge_service_time: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_n_iter")]
    pub n_iter: usize,
    #[serde(default = "default_t_max_factor")]
    pub t_max_factor: f64,
    #[serde(default = "default_t_red")]
    pub t_red: f64,
    #[serde(default = "default_xi_max")]
    pub xi_max: f64,
    #[serde(default = "default_alpha_ls")]
    pub alpha_ls: f64,
    /// Transit pairs examined per customer and travel option during insertion.
    #[serde(default = "default_tp_candidates")]
    pub tp_candidates: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            lambda1: default_lambda(),
            lambda2: default_lambda(),
            omega: default_omega(),
            phi: default_phi(),
            gamma: default_gamma(),
            eta_min: default_eta_min(),
            eta_max: default_eta_max(),
            max_walk_dist: default_max_walk(),
            walk_speed: default_walk_speed(),
            bus_speed: default_bus_speed(),
            mu: default_mu(),
            charge_service_time: default_charge_service(),
            t_end: default_t_end(),
            n_iter: default_n_iter(),
            t_max_factor: default_t_max_factor(),
            t_red: default_t_red(),
            xi_max: default_xi_max(),
            alpha_ls: default_alpha_ls(),
            tp_candidates: default_tp_candidates(),
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid("params", m));
        if !(self.phi >= 1.0) {
            return bad("phi must be >= 1");
        }
        if !(self.gamma >= 0.0) {
            return bad("gamma must be >= 0");
        }
        if !(self.xi_max > 0.0 && self.xi_max < 1.0) {
            return bad("xi_max must lie in (0, 1)");
        }
        if !(self.alpha_ls > 1.0) {
            return bad("alpha_ls must be > 1");
        }
        if self.eta_min > self.eta_max {
            // an empty transfer band is allowed by the builder but not by a
            // loaded instance
            return bad("eta_min must not exceed eta_max");
        }
        if !(self.walk_speed > 0.0 && self.bus_speed > 0.0) {
            return bad("speeds must be positive");
        }
        if !(self.t_end > 0.0) {
            return bad("t_end must be positive");
        }
        if self.t_red <= 0.0 || self.t_max_factor < 0.0 {
            return bad("t_red must be positive and t_max_factor non-negative");
        }
        if self.mu < 0.0 || self.charge_service_time < 0.0 {
            return bad("service times must be non-negative");
        }
        Ok(())
    }
}

/// A customer request. Exactly one of the two windows is given; the other is
/// derived by [`derive_time_windows`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: usize,
    pub origin: Point,
    pub destination: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_tw: Option<Window>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dest_tw: Option<Window>,
}

/// A request with both windows populated and its derived travel bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedRequest {
    pub id: usize,
    pub origin: Point,
    pub destination: Point,
    pub origin_tw: Window,
    pub dest_tw: Window,
    /// t_{r,n+r}
    pub direct_bus_time: f64,
    /// L_r^max
    pub max_travel_time: f64,
    /// False when a derived window came out empty: bus-only service is
    /// impossible and the request can only travel with transit.
    pub bus_servable: bool,
}

/// Fill in the missing window and the ride-time bound of a request.
pub fn derive_time_windows(r: &Request, params: &Params) -> Result<TimedRequest> {
    let direct = bus_travel_time(&r.origin, &r.destination, params.bus_speed);
    let lmax = direct * params.phi;
    let (o, d) = match (r.origin_tw, r.dest_tw) {
        (Some(o), None) => (o, Window::new(o.e + direct, o.l + lmax)),
        (None, Some(d)) => (Window::new(d.e - lmax, d.l - direct), d),
        _ => {
            return Err(Error::invalid(
                format!("requests[{}]", r.id),
                "exactly one of origin_tw / dest_tw must be given",
            ))
        }
    };
    let o = o.clip(0.0, params.t_end);
    let d = d.clip(0.0, params.t_end);
    Ok(TimedRequest {
        id: r.id,
        origin: r.origin,
        destination: r.destination,
        origin_tw: o,
        dest_tw: d,
        direct_bus_time: direct,
        max_travel_time: lmax,
        bus_servable: !o.is_empty() && !d.is_empty(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    #[serde(default)]
    pub type_id: usize,
    pub capacity: u32,
    /// kWh per km
    pub consumption: f64,
    pub battery_capacity: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub e_init: f64,
    pub origin_depot: usize,
    pub dest_depot: usize,
    /// km/min
    pub speed: f64,
}

impl Bus {
    pub fn travel_time(&self, a: &Point, b: &Point) -> f64 {
        bus_travel_time(a, b, self.speed)
    }

    pub fn energy(&self, a: &Point, b: &Point) -> f64 {
        a.dist(b) * self.consumption
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Charger {
    pub id: usize,
    pub location: Point,
    /// kWh per minute
    pub power: f64,
}

/// One timetabled trip of a line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    /// Runs from the last station to the first.
    #[serde(default)]
    pub reverse: bool,
    /// Departure time at each station in travel order.
    pub departures: Vec<f64>,
}

impl Run {
    /// Station indices in travel order.
    pub fn station_order(&self, n_stations: usize) -> Vec<usize> {
        if self.reverse {
            (0..n_stations).rev().collect()
        } else {
            (0..n_stations).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitLine {
    pub id: usize,
    pub stations: Vec<Point>,
    pub runs: Vec<Run>,
    /// km/min, informational once the timetable is written out.
    #[serde(default)]
    pub speed: f64,
    /// Dwell time at every station; arrival = departure - dwell.
    #[serde(default)]
    pub dwell: f64,
}

impl TransitLine {
    /// Build a run from its first departure using the line speed and dwell.
    pub fn make_run(&self, first_departure: f64, reverse: bool) -> Run {
        let order: Vec<usize> = if reverse {
            (0..self.stations.len()).rev().collect()
        } else {
            (0..self.stations.len()).collect()
        };
        let mut t = first_departure;
        let mut departures = Vec::with_capacity(order.len());
        for (k, &s) in order.iter().enumerate() {
            if k > 0 {
                let prev = order[k - 1];
                t += self.stations[prev].dist(&self.stations[s]) / self.speed + self.dwell;
            }
            departures.push(t);
        }
        Run { reverse, departures }
    }

    /// Travel time from the first to the last station of any run.
    pub fn run_duration(&self) -> f64 {
        let mut d = 0.0;
        for w in self.stations.windows(2) {
            d += w[0].dist(&w[1]) / self.speed + self.dwell;
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<Area>,
    pub requests: Vec<Request>,
    pub buses: Vec<Bus>,
    pub depots: Vec<Point>,
    #[serde(default)]
    pub chargers: Vec<Charger>,
    #[serde(default)]
    pub lines: Vec<TransitLine>,
    #[serde(default)]
    pub rng_seed: u64,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Instance> {
        let inst: Instance = serde_json::from_str(text).map_err(Error::from_json)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Instance> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Instance::from_json(&text)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let in_area = |p: &Point| match self.area {
            Some(a) => p.x >= -EPS_TIME && p.y >= -EPS_TIME && p.x <= a.width + EPS_TIME && p.y <= a.height + EPS_TIME,
            None => p.x.is_finite() && p.y.is_finite(),
        };
        for (i, r) in self.requests.iter().enumerate() {
            let at = format!("requests[{i}]");
            if r.id != i {
                return Err(Error::invalid(at, "request ids must equal their position"));
            }
            if !in_area(&r.origin) || !in_area(&r.destination) {
                return Err(Error::invalid(at, "coordinates outside the service area"));
            }
            for w in [r.origin_tw, r.dest_tw].into_iter().flatten() {
                if w.is_empty() {
                    return Err(Error::invalid(at, "given time window has e > l"));
                }
            }
            derive_time_windows(r, &self.params)?;
        }
        for (i, b) in self.buses.iter().enumerate() {
            let at = format!("buses[{i}]");
            if b.id != i {
                return Err(Error::invalid(at, "bus ids must equal their position"));
            }
            if b.capacity < 1 {
                return Err(Error::invalid(at, "capacity must be at least 1"));
            }
            let ok = b.e_min <= b.e_init + EPS_ENERGY
                && b.e_init <= b.e_max + EPS_ENERGY
                && b.e_max <= b.battery_capacity + EPS_ENERGY;
            if !ok {
                return Err(Error::invalid(at, "need e_min <= e_init <= e_max <= battery_capacity"));
            }
            if b.origin_depot >= self.depots.len() || b.dest_depot >= self.depots.len() {
                return Err(Error::invalid(at, "unknown depot"));
            }
            if !(b.speed > 0.0) || b.consumption < 0.0 {
                return Err(Error::invalid(at, "speed must be positive, consumption >= 0"));
            }
        }
        for (i, d) in self.depots.iter().enumerate() {
            if !in_area(d) {
                return Err(Error::invalid(format!("depots[{i}]"), "outside the service area"));
            }
        }
        for (i, c) in self.chargers.iter().enumerate() {
            let at = format!("chargers[{i}]");
            if c.id != i {
                return Err(Error::invalid(at, "charger ids must equal their position"));
            }
            if !(c.power > 0.0) {
                return Err(Error::invalid(at, "power must be positive"));
            }
            if !in_area(&c.location) {
                return Err(Error::invalid(at, "outside the service area"));
            }
        }
        for (i, l) in self.lines.iter().enumerate() {
            let at = format!("lines[{i}]");
            if l.id != i {
                return Err(Error::invalid(at, "line ids must equal their position"));
            }
            if l.stations.len() < 2 {
                return Err(Error::invalid(at, "a line needs at least two stations"));
            }
            if l.dwell < 0.0 {
                return Err(Error::invalid(at, "dwell must be non-negative"));
            }
            for (k, run) in l.runs.iter().enumerate() {
                if run.departures.len() != l.stations.len() {
                    return Err(Error::invalid(
                        format!("{at}.runs[{k}]"),
                        "one departure per station required",
                    ));
                }
                if run.departures.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid(
                        format!("{at}.runs[{k}]"),
                        "departure times must strictly increase along the run",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn timed_requests(&self) -> Vec<TimedRequest> {
        self.requests
            .iter()
            .map(|r| derive_time_windows(r, &self.params).expect("validated instance"))
            .collect()
    }
}
