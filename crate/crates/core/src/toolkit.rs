//! Synthetic instance generation and one-parameter sweeps.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Area, Bus, Charger, Instance, Params, Point, Request, TransitLine, Window};
use crate::problem::Problem;
use crate::search::{best_of, run_many, SearchConfig};
use crate::solution::{customer_wait, kpis, KpiReport, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    None,
    One,
    TwoCrossed,
    Three,
    Four,
}

impl Layout {
    pub fn from_count(n: usize) -> Option<Layout> {
        match n {
            0 => Some(Layout::None),
            1 => Some(Layout::One),
            2 => Some(Layout::TwoCrossed),
            3 => Some(Layout::Three),
            4 => Some(Layout::Four),
            _ => None,
        }
    }

    pub fn n_lines(&self) -> usize {
        match self {
            Layout::None => 0,
            Layout::One => 1,
            Layout::TwoCrossed => 2,
            Layout::Three => 3,
            Layout::Four => 4,
        }
    }
}

impl FromStr for Layout {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Layout::None),
            "one" => Ok(Layout::One),
            "two-crossed" | "two" => Ok(Layout::TwoCrossed),
            "three" => Ok(Layout::Three),
            "four" => Ok(Layout::Four),
            _ => Err(format!("unknown layout '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusType {
    pub capacity: u32,
    /// kWh
    pub battery: f64,
    /// kWh/km
    pub consumption: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    /// Side of the square service area (km).
    pub area: f64,
    pub n_customers: usize,
    /// Share of customers with a window at their origin.
    pub outbound_fraction: f64,
    pub layout: Layout,
    /// Runs per line and direction; `None` fills the horizon at `headway`.
    pub departures_per_direction: Option<usize>,
    pub headway: f64,
    pub first_departure: f64,
    /// km/min
    pub transit_speed: f64,
    pub dwell: f64,
    /// `None` gives one bus per customer.
    pub fleet: Option<usize>,
    pub bus_types: Vec<BusType>,
    pub n_depots: usize,
    /// kWh/min
    pub charger_power: f64,
    /// Initial charge as a fraction of battery capacity.
    pub init_soc: f64,
    pub soc_max_fraction: f64,
    pub soc_min_fraction: f64,
    pub window_width: f64,
    pub params: Params,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            area: 16.0,
            n_customers: 50,
            outbound_fraction: 0.5,
            layout: Layout::TwoCrossed,
            departures_per_direction: Some(2),
            headway: 30.0,
            first_departure: 20.0,
            transit_speed: 50.0 / 60.0,
            dwell: 0.5,
            fleet: None,
            bus_types: vec![
                BusType {
                    capacity: 15,
                    battery: 69.0,
                    consumption: 0.552,
                },
                BusType {
                    capacity: 22,
                    battery: 103.5,
                    consumption: 0.828,
                },
            ],
            n_depots: 2,
            charger_power: 0.83,
            init_soc: 1.0,
            soc_max_fraction: 0.8,
            soc_min_fraction: 0.1,
            window_width: 15.0,
            params: Params::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid("generator", m));
        if !(self.area > 0.0) {
            return bad("area must be positive");
        }
        if !(0.0..=1.0).contains(&self.outbound_fraction) {
            return bad("outbound_fraction must lie in [0, 1]");
        }
        if self.bus_types.is_empty() {
            return bad("at least one bus type is needed");
        }
        if self.n_depots == 0 {
            return bad("at least one depot is needed");
        }
        if !(self.headway > 0.0) || !(self.transit_speed > 0.0) {
            return bad("headway and transit speed must be positive");
        }
        if !(0.0..=1.0).contains(&self.init_soc) {
            return bad("init_soc must lie in [0, 1]");
        }
        self.params.validate()
    }
}

/// Station templates of each line on the unit square.
fn line_templates(layout: Layout) -> Vec<[(f64, f64); 3]> {
    let all = [
        [(0.125, 0.5), (0.5, 0.5), (0.875, 0.5)],
        [(0.5, 0.125), (0.5, 0.5), (0.5, 0.875)],
        [(0.125, 0.125), (0.5, 0.5), (0.875, 0.875)],
        [(0.125, 0.875), (0.5, 0.5), (0.875, 0.125)],
    ];
    all[..layout.n_lines()].to_vec()
}

/// Depot positions on the unit square.
pub fn depot_template(n: usize) -> Vec<(f64, f64)> {
    match n {
        1 => vec![(0.5, 0.25)],
        2 => vec![(0.25, 0.25), (0.75, 0.75)],
        _ => (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                (0.5 + 0.3 * a.cos(), 0.5 + 0.3 * a.sin())
            })
            .collect(),
    }
}

pub fn build_lines(cfg: &GeneratorConfig) -> Vec<TransitLine> {
    let a = cfg.area;
    line_templates(cfg.layout)
        .into_iter()
        .enumerate()
        .map(|(id, tpl)| {
            let mut line = TransitLine {
                id,
                stations: tpl.iter().map(|&(x, y)| Point::new(x * a, y * a)).collect(),
                runs: Vec::new(),
                speed: cfg.transit_speed,
                dwell: cfg.dwell,
            };
            let dur = line.run_duration();
            let count = cfg.departures_per_direction.unwrap_or_else(|| {
                let span = cfg.params.t_end - cfg.first_departure - dur;
                if span < 0.0 {
                    0
                } else {
                    (span / cfg.headway).floor() as usize + 1
                }
            });
            for reverse in [false, true] {
                for k in 0..count {
                    let first = cfg.first_departure + k as f64 * cfg.headway;
                    line.runs.push(line.make_run(first, reverse));
                }
            }
            // forward and backward runs interleaved by departure
            line.runs.sort_by(|x, y| {
                x.departures[0]
                    .total_cmp(&y.departures[0])
                    .then(x.reverse.cmp(&y.reverse))
            });
            line
        })
        .collect()
}

pub fn build_buses(cfg: &GeneratorConfig, m: usize) -> Vec<Bus> {
    (0..m)
        .map(|k| {
            let ty = k % cfg.bus_types.len();
            let t = &cfg.bus_types[ty];
            let depot = k % cfg.n_depots;
            let e_max = cfg.soc_max_fraction * t.battery;
            Bus {
                id: k,
                type_id: ty,
                capacity: t.capacity,
                consumption: t.consumption,
                battery_capacity: t.battery,
                e_min: cfg.soc_min_fraction * t.battery,
                e_max,
                e_init: (cfg.init_soc * t.battery).min(e_max),
                origin_depot: depot,
                dest_depot: depot,
                speed: cfg.params.bus_speed,
            }
        })
        .collect()
}

/// A random instance; the same config and seed give the same instance.
pub fn generate(cfg: &GeneratorConfig, seed: u64) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = cfg.area;
    let p = &cfg.params;
    let n_out = (cfg.n_customers as f64 * cfg.outbound_fraction).round() as usize;
    let mut requests = Vec::with_capacity(cfg.n_customers);
    for id in 0..cfg.n_customers {
        let origin = Point::new(rng.gen_range(0.0..a), rng.gen_range(0.0..a));
        let destination = Point::new(rng.gen_range(0.0..a), rng.gen_range(0.0..a));
        let direct = crate::model::bus_travel_time(&origin, &destination, p.bus_speed);
        let lmax = p.phi * direct;
        let w = cfg.window_width;
        let (lo, hi) = if id < n_out {
            (0.0, p.t_end - w - lmax)
        } else {
            (lmax, p.t_end - w)
        };
        let e = if hi > lo {
            rng.gen_range(lo..hi)
        } else {
            lo.min(p.t_end - w).max(0.0)
        };
        let win = Window::new(e, e + w);
        requests.push(if id < n_out {
            Request {
                id,
                origin,
                destination,
                origin_tw: Some(win),
                dest_tw: None,
            }
        } else {
            Request {
                id,
                origin,
                destination,
                origin_tw: None,
                dest_tw: Some(win),
            }
        });
    }
    let depots: Vec<Point> = depot_template(cfg.n_depots)
        .into_iter()
        .map(|(x, y)| Point::new(x * a, y * a))
        .collect();
    let chargers = depots
        .iter()
        .enumerate()
        .map(|(id, &location)| Charger {
            id,
            location,
            power: cfg.charger_power,
        })
        .collect();
    let m = cfg.fleet.unwrap_or(cfg.n_customers.max(1));
    let inst = Instance {
        params: cfg.params.clone(),
        area: Some(Area { width: a, height: a }),
        requests,
        buses: build_buses(cfg, m),
        depots,
        chargers,
        lines: build_lines(cfg),
        rng_seed: seed,
    };
    inst.validate()?;
    Ok(inst)
}

// ---------------------------------------------------------------------------
// sweeps

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Phi,
    Lambda2,
    Gamma,
    Fleet,
    /// km/h
    BusSpeed,
    InitSoc,
    Headway,
    NLines,
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "phi" => Axis::Phi,
            "lambda2" => Axis::Lambda2,
            "gamma" => Axis::Gamma,
            "fleet" => Axis::Fleet,
            "bus_speed" => Axis::BusSpeed,
            "init_soc" => Axis::InitSoc,
            "headway" => Axis::Headway,
            "n_lines" => Axis::NLines,
            _ => return Err(format!("unknown sweep axis '{s}'")),
        })
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::Phi => "phi",
            Axis::Lambda2 => "lambda2",
            Axis::Gamma => "gamma",
            Axis::Fleet => "fleet",
            Axis::BusSpeed => "bus_speed",
            Axis::InitSoc => "init_soc",
            Axis::Headway => "headway",
            Axis::NLines => "n_lines",
        };
        f.write_str(s)
    }
}

/// `a:step:b` (inclusive) or a comma-separated list.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::invalid("values", format!("'{t}' is not a number")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let (a, step, b) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || b < a {
            return Err(Error::invalid("values", "range needs a positive step and a <= b"));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect());
    }
    s.split(',').map(num).collect()
}

/// The base instance with one parameter changed; customers stay the same.
pub fn apply_axis(base: &Instance, cfg: &GeneratorConfig, axis: Axis, value: f64) -> Result<Instance> {
    let mut inst = base.clone();
    let mut c = cfg.clone();
    match axis {
        Axis::Phi => inst.params.phi = value,
        Axis::Lambda2 => inst.params.lambda2 = value,
        Axis::Gamma => inst.params.gamma = value,
        Axis::Fleet => {
            if value < 1.0 {
                return Err(Error::invalid("fleet", "at least one bus"));
            }
            inst.buses = build_buses(cfg, value as usize);
        }
        Axis::BusSpeed => {
            let v = value / 60.0;
            inst.params.bus_speed = v;
            for b in &mut inst.buses {
                b.speed = v;
            }
        }
        Axis::InitSoc => {
            for b in &mut inst.buses {
                b.e_init = (value * b.battery_capacity).min(b.e_max);
            }
        }
        Axis::Headway => {
            c.headway = value;
            c.departures_per_direction = None;
            inst.lines = build_lines(&c);
        }
        Axis::NLines => {
            c.layout = Layout::from_count(value as usize).ok_or_else(|| Error::invalid("n_lines", "0 to 4"))?;
            inst.lines = build_lines(&c);
        }
    }
    inst.validate()?;
    Ok(inst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub seed: u64,
    pub best: bool,
    pub objective: f64,
    pub kpi: KpiReport,
    pub runtime_s: f64,
}

impl SweepRow {
    pub fn header() -> Vec<String> {
        let mut h: Vec<String> = ["axis", "value", "seed", "best", "objective"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend(KpiReport::HEADER.iter().map(|s| s.to_string()));
        h.push("runtime_s".into());
        h
    }

    pub fn record(&self) -> Vec<String> {
        let mut r = vec![
            self.axis.clone(),
            format!("{}", self.value),
            self.seed.to_string(),
            (self.best as u8).to_string(),
            format!("{:.3}", self.objective),
        ];
        r.extend(self.kpi.row());
        r.push(format!("{:.3}", self.runtime_s));
        r
    }
}

/// Solve the base instance once per value with `runs` seeds each.
pub fn sweep(
    base: &Instance,
    cfg: &GeneratorConfig,
    axis: Axis,
    values: &[f64],
    search: &SearchConfig,
    runs: usize,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    let instances: Vec<Instance> = values
        .iter()
        .map(|&v| apply_axis(base, cfg, axis, v))
        .collect::<Result<_>>()?;
    let solve = |(v, inst): (f64, &Instance)| {
        let prob = Problem::new(inst.clone());
        let started = Instant::now();
        let results = run_many(&prob, search, runs, 1);
        let secs = started.elapsed().as_secs_f64() / runs.max(1) as f64;
        let best_seed = best_of(&results).map(|r| r.best.seed);
        results
            .iter()
            .map(|r| SweepRow {
                axis: axis.to_string(),
                value: v,
                seed: r.best.seed,
                best: Some(r.best.seed) == best_seed,
                objective: r.best.objective,
                kpi: kpis(&r.best, &prob),
                runtime_s: secs,
            })
            .collect::<Vec<_>>()
    };
    let pairs: Vec<(f64, &Instance)> = values.iter().copied().zip(instances.iter()).collect();
    let rows: Vec<Vec<SweepRow>> = if jobs <= 1 {
        pairs.into_iter().map(solve).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Io(e.to_string()))?;
        pool.install(|| pairs.into_par_iter().map(solve).collect())
    };
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_csv<W: std::io::Write>(w: W, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        out.write_record(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    out.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Journey time over direct bus time per served customer, with and without
/// waiting.
pub fn experienced_detours(sol: &Solution, prob: &Problem) -> Vec<(usize, f64, f64)> {
    sol.served()
        .filter(|j| prob.requests[j.req].direct_bus_time > 0.0)
        .map(|j| {
            let direct = prob.requests[j.req].direct_bus_time;
            let total = j.arr - j.dep;
            let wt = customer_wait(sol, prob, j);
            (j.req, total / direct, (total - wt) / direct)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_setting_has_two_lines_of_four_runs() {
        let inst = generate(&GeneratorConfig::default(), 3).unwrap();
        assert_eq!(inst.params.t_end, 120.0);
        assert_eq!(inst.depots.len(), 2);
        assert_eq!(inst.chargers.len(), 2);
        assert_eq!(inst.lines.len(), 2);
        assert!(inst.lines.iter().all(|l| l.runs.len() == 4));
        // five distinct stations: the middle one is shared
        let mut st: Vec<Point> = Vec::new();
        for l in &inst.lines {
            for s in &l.stations {
                if !st.iter().any(|q| q.coincides(s)) {
                    st.push(*s);
                }
            }
        }
        assert_eq!(st.len(), 5);
    }

    #[test]
    fn same_seed_same_file() {
        let c = GeneratorConfig {
            n_customers: 12,
            ..Default::default()
        };
        assert_eq!(generate(&c, 9).unwrap().to_json(), generate(&c, 9).unwrap().to_json());
        assert_ne!(generate(&c, 9).unwrap().to_json(), generate(&c, 10).unwrap().to_json());
    }

    #[test]
    fn empty_instance_is_valid() {
        let c = GeneratorConfig {
            n_customers: 0,
            ..Default::default()
        };
        let inst = generate(&c, 1).unwrap();
        assert!(inst.requests.is_empty());
        assert_eq!(inst.buses.len(), 1);
    }

    #[test]
    fn windows_stay_inside_the_horizon() {
        let c = GeneratorConfig {
            n_customers: 40,
            ..Default::default()
        };
        let inst = generate(&c, 5).unwrap();
        let prob = Problem::new(inst);
        for r in &prob.requests {
            assert!(r.origin_tw.e >= -1e-9 && r.dest_tw.l <= 120.0 + 1e-9, "{r:?}");
            assert!(r.bus_servable);
        }
        let outbound = prob.instance.requests.iter().filter(|r| r.origin_tw.is_some()).count();
        assert_eq!(outbound, 20);
    }

    #[test]
    fn range_and_list_values() {
        assert_eq!(
            parse_values("1.3:0.2:2.5").unwrap(),
            vec![1.3, 1.5, 1.7, 1.9, 2.1, 2.3, 2.5]
        );
        assert_eq!(parse_values("10,20").unwrap(), vec![10.0, 20.0]);
        assert!(parse_values("1:0:2").is_err());
    }

    #[test]
    fn headway_axis_fills_the_horizon() {
        let c = GeneratorConfig {
            n_customers: 2,
            ..Default::default()
        };
        let base = generate(&c, 1).unwrap();
        let i10 = apply_axis(&base, &c, Axis::Headway, 10.0).unwrap();
        let i60 = apply_axis(&base, &c, Axis::Headway, 60.0).unwrap();
        assert!(i10.lines[0].runs.len() > i60.lines[0].runs.len());
        assert_eq!(i10.requests, base.requests);
    }

    #[test]
    fn layouts_add_lines_through_the_centre() {
        for n in 0..=4 {
            let c = GeneratorConfig {
                layout: Layout::from_count(n).unwrap(),
                n_customers: 1,
                ..Default::default()
            };
            let inst = generate(&c, 0).unwrap();
            assert_eq!(inst.lines.len(), n);
            for l in &inst.lines {
                assert!(l.stations[1].coincides(&Point::new(8.0, 8.0)));
            }
        }
    }
}
