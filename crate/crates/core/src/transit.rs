//! Departure-expanded transit graph and transit pairs.
//!
//! Every station of every timetabled run becomes its own node with fixed
//! departure and arrival times. A transit pair (TP) is an (entry, exit) pair of
//! such nodes joined by a timetabled path with at most a few short transfers.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::model::{bus_travel_time, Params, Point, TimedRequest, TransitLine, Window, EPS_TIME};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitNode {
    pub id: usize,
    pub line: usize,
    /// Index into the line's station list.
    pub station: usize,
    /// Index of the run (departure) on its line.
    pub departure: usize,
    /// Position of the station along the run.
    pub position: usize,
    pub location: Point,
    pub theta_dep: f64,
    pub theta_arr: f64,
    pub tw: Window,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitPair {
    pub entry: usize,
    pub exit: usize,
    /// Exit arrival minus entry departure (min).
    pub travel_time: f64,
    pub transfers: usize,
    /// Riding legs as (board, alight) node ids.
    pub legs: Vec<(usize, usize)>,
}

/// The four transit-using travel options, indexed 0..4 for options 1..4.
pub type OptionFlags = [bool; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomerTp {
    /// Index into [`ExpandedTransitGraph::pairs`].
    pub tp: usize,
    pub flags: OptionFlags,
    /// Lower bound on the journey time for each option (min).
    pub min_time: [f64; 4],
}

impl CustomerTp {
    pub fn allows(&self, option: u8) -> bool {
        (1..=4).contains(&option) && self.flags[option as usize - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandedTransitGraph {
    pub nodes: Vec<TransitNode>,
    pub pairs: Vec<TransitPair>,
    pub per_customer: Vec<Vec<CustomerTp>>,
}

impl ExpandedTransitGraph {
    pub fn build(lines: &[TransitLine], requests: &[TimedRequest], params: &Params) -> Self {
        let nodes = expand_timetables(lines, params.gamma);
        let pairs = generate_transit_pairs(&nodes, params.eta_min, params.eta_max);
        let per_customer = requests
            .iter()
            .map(|r| customer_tp_set(r, &nodes, &pairs, params))
            .collect();
        ExpandedTransitGraph {
            nodes,
            pairs,
            per_customer,
        }
    }

    pub fn pair(&self, entry: usize, exit: usize) -> Option<&TransitPair> {
        self.pairs
            .binary_search_by(|p| (p.entry, p.exit).cmp(&(entry, exit)))
            .ok()
            .map(|k| &self.pairs[k])
    }

    pub fn pair_index(&self, entry: usize, exit: usize) -> Option<usize> {
        self.pairs
            .binary_search_by(|p| (p.entry, p.exit).cmp(&(entry, exit)))
            .ok()
    }

    /// CSV dump of nodes followed by pairs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,id,line,station,departure,x,y,theta_dep,theta_arr,tw_e,tw_l\n");
        for n in &self.nodes {
            out.push_str(&format!(
                "node,{},{},{},{},{},{},{},{},{},{}\n",
                n.id,
                n.line,
                n.station,
                n.departure,
                n.location.x,
                n.location.y,
                n.theta_dep,
                n.theta_arr,
                n.tw.e,
                n.tw.l
            ));
        }
        out.push_str("kind,entry,exit,travel_time,transfers\n");
        for p in &self.pairs {
            out.push_str(&format!(
                "pair,{},{},{},{}\n",
                p.entry, p.exit, p.travel_time, p.transfers
            ));
        }
        out
    }
}

/// One node per (line, run, station). Ids follow (departure index, line,
/// station position), so the first runs of all lines come first.
pub fn expand_timetables(lines: &[TransitLine], gamma: f64) -> Vec<TransitNode> {
    let max_runs = lines.iter().map(|l| l.runs.len()).max().unwrap_or(0);
    let mut nodes = Vec::new();
    for d in 0..max_runs {
        for line in lines {
            let Some(run) = line.runs.get(d) else { continue };
            for (pos, &s) in run.station_order(line.stations.len()).iter().enumerate() {
                let dep = run.departures[pos];
                let arr = dep - line.dwell;
                nodes.push(TransitNode {
                    id: nodes.len(),
                    line: line.id,
                    station: s,
                    departure: d,
                    position: pos,
                    location: line.stations[s],
                    theta_dep: dep,
                    theta_arr: arr,
                    tw: Window::new(dep - gamma, arr + gamma),
                });
            }
        }
    }
    nodes
}

/// Nodes later on the same run, reachable without leaving the vehicle.
fn direct_successors(nodes: &[TransitNode], i: usize) -> impl Iterator<Item = &TransitNode> {
    let a = &nodes[i];
    nodes
        .iter()
        .filter(move |b| b.line == a.line && b.departure == a.departure && b.position > a.position)
}

/// All direct arcs (i, j, weight) within runs.
pub fn direct_arcs(nodes: &[TransitNode]) -> Vec<(usize, usize, f64)> {
    let mut arcs = Vec::new();
    for i in 0..nodes.len() {
        for b in direct_successors(nodes, i) {
            arcs.push((i, b.id, b.theta_arr - nodes[i].theta_dep));
        }
    }
    arcs
}

/// Feasible transfer arcs: different lines, same physical station, and a
/// connection time within [eta_min, eta_max].
pub fn transfer_arcs(nodes: &[TransitNode], eta_min: f64, eta_max: f64) -> Vec<(usize, usize, f64)> {
    let mut arcs = Vec::new();
    for a in nodes {
        for b in nodes {
            if a.line == b.line || !a.location.coincides(&b.location) {
                continue;
            }
            let gap = b.theta_dep - a.theta_arr;
            if gap >= eta_min - EPS_TIME && gap <= eta_max + EPS_TIME {
                arcs.push((a.id, b.id, gap));
            }
        }
    }
    arcs
}

#[derive(Clone, Copy, PartialEq)]
struct Label {
    time: f64,
    transfers: usize,
    node: usize,
    /// true when the node was reached by riding (a valid exit).
    alighted: bool,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (time, transfers, node)
        other
            .time
            .total_cmp(&self.time)
            .then(other.transfers.cmp(&self.transfers))
            .then(other.node.cmp(&self.node))
            .then(other.alighted.cmp(&self.alighted))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest timetabled connections between all node pairs.
///
/// A temporary graph holds direct and transfer arcs; Dijkstra runs from every
/// source with ties broken by fewer transfers and then by node id. Paths must
/// start and end with a riding leg, so pure transfer arcs never become pairs.
pub fn generate_transit_pairs(nodes: &[TransitNode], eta_min: f64, eta_max: f64) -> Vec<TransitPair> {
    let n = nodes.len();
    let mut ride: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, j, w) in direct_arcs(nodes) {
        ride[i].push((j, w));
    }
    let mut xfer: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, j, w) in transfer_arcs(nodes, eta_min, eta_max) {
        xfer[i].push((j, w));
    }

    let mut pairs = Vec::new();
    for s in 0..n {
        // state index: 2*node + alighted
        let mut best: Vec<Option<(f64, usize)>> = vec![None; 2 * n];
        let mut pred: Vec<Option<usize>> = vec![None; 2 * n];
        let mut heap = BinaryHeap::new();
        best[2 * s] = Some((0.0, 0));
        heap.push(Label {
            time: 0.0,
            transfers: 0,
            node: s,
            alighted: false,
        });
        while let Some(lab) = heap.pop() {
            let st = 2 * lab.node + lab.alighted as usize;
            match best[st] {
                Some((t, k)) if (t, k) != (lab.time, lab.transfers) => continue,
                _ => {}
            }
            let mut relax = |to: usize, alighted: bool, time: f64, transfers: usize, heap: &mut BinaryHeap<Label>| {
                let ts = 2 * to + alighted as usize;
                let better = match best[ts] {
                    None => true,
                    Some((t, k)) => time < t - EPS_TIME || ((time - t).abs() <= EPS_TIME && transfers < k),
                };
                if better {
                    best[ts] = Some((time, transfers));
                    pred[ts] = Some(st);
                    heap.push(Label {
                        time,
                        transfers,
                        node: to,
                        alighted,
                    });
                }
            };
            if lab.alighted {
                for &(j, w) in &xfer[lab.node] {
                    relax(j, false, lab.time + w, lab.transfers + 1, &mut heap);
                }
            } else {
                for &(j, w) in &ride[lab.node] {
                    relax(j, true, lab.time + w, lab.transfers, &mut heap);
                }
            }
        }
        for x in 0..n {
            let Some((time, transfers)) = best[2 * x + 1] else {
                continue;
            };
            if nodes[x].location.coincides(&nodes[s].location) {
                continue;
            }
            // walk predecessors back to recover riding legs
            let mut legs = Vec::new();
            let mut cur = 2 * x + 1;
            let mut alight = x;
            while let Some(p) = pred[cur] {
                if cur % 2 == 1 && p % 2 == 0 {
                    legs.push((p / 2, alight));
                } else if cur % 2 == 0 {
                    alight = p / 2;
                }
                cur = p;
            }
            legs.reverse();
            pairs.push(TransitPair {
                entry: s,
                exit: x,
                travel_time: time,
                transfers,
                legs,
            });
        }
    }
    pairs.sort_by_key(|p| (p.entry, p.exit));
    pairs
}

/// Walking time in minutes, or `None` beyond the walking limit.
pub fn walk_time(a: &Point, b: &Point, params: &Params) -> Option<f64> {
    let d = a.dist(b);
    (d <= params.max_walk_dist + 1e-12).then(|| d / params.walk_speed)
}

/// Feasible TPs of one customer with per-option flags.
pub fn customer_tp_set(
    r: &TimedRequest,
    nodes: &[TransitNode],
    pairs: &[TransitPair],
    params: &Params,
) -> Vec<CustomerTp> {
    let g = params.gamma;
    let (e_o, l_o) = (r.origin_tw.e, r.origin_tw.l);
    let (e_d, l_d) = (r.dest_tw.e, r.dest_tw.l);
    let mut out = Vec::new();
    for (k, p) in pairs.iter().enumerate() {
        let ni = &nodes[p.entry];
        let nj = &nodes[p.exit];
        let th = ni.theta_dep;
        let tb = nj.theta_arr;

        let origin_ok = |t: f64| e_o + t <= th + EPS_TIME && l_o + t >= th - g - EPS_TIME;
        let dest_ok = |t: f64| tb + t <= l_d + EPS_TIME && tb + t + g >= e_d - EPS_TIME;

        let wo = walk_time(&r.origin, &ni.location, params);
        let wd = walk_time(&nj.location, &r.destination, params);
        let bo = bus_travel_time(&r.origin, &ni.location, params.bus_speed);
        let bd = bus_travel_time(&nj.location, &r.destination, params.bus_speed);

        let walk_o = wo.filter(|&t| origin_ok(t));
        let walk_d = wd.filter(|&t| dest_ok(t));
        let bus_o = origin_ok(bo).then_some(bo);
        let bus_d = dest_ok(bd).then_some(bd);

        let legs = [(walk_o, walk_d), (bus_o, walk_d), (walk_o, bus_d), (bus_o, bus_d)];
        let mut flags = [false; 4];
        let mut min_time = [f64::INFINITY; 4];
        for (o, (a, b)) in legs.iter().enumerate() {
            if let (Some(a), Some(b)) = (a, b) {
                let t = a + p.travel_time + b;
                if t <= r.max_travel_time + EPS_TIME {
                    flags[o] = true;
                    min_time[o] = t;
                }
            }
        }
        if flags.iter().any(|&f| f) {
            out.push(CustomerTp { tp: k, flags, min_time });
        }
    }
    out
}

/// Small hand-checkable timetables.
pub mod fixtures {
    use super::*;
    use crate::model::Run;

    fn hm(h: u32, m: u32) -> f64 {
        (h * 60 + m) as f64
    }

    /// Two lines with four stations each. Line 1 (A-B-C-D) has three runs and
    /// line 2 (E-F-G-H) has two; B/F and D/H are shared stations. Times are in
    /// minutes after midnight, dwell is zero.
    pub fn two_line_timetable() -> Vec<TransitLine> {
        let a = Point::new(0.0, 4.0);
        let b = Point::new(4.0, 4.0);
        let c = Point::new(8.0, 4.0);
        let d = Point::new(12.0, 4.0);
        let e = Point::new(4.0, 0.0);
        let g = Point::new(8.0, 8.0);
        let run = |ts: [f64; 4]| Run {
            reverse: false,
            departures: ts.to_vec(),
        };
        vec![
            TransitLine {
                id: 0,
                stations: vec![a, b, c, d],
                runs: vec![
                    run([hm(7, 20), hm(7, 26), hm(7, 32), hm(7, 38)]),
                    run([hm(7, 46), hm(7, 52), hm(7, 58), hm(8, 4)]),
                    run([hm(8, 5), hm(8, 11), hm(8, 17), hm(8, 23)]),
                ],
                speed: 40.0 / 60.0,
                dwell: 0.0,
            },
            TransitLine {
                id: 1,
                stations: vec![e, b, g, d],
                runs: vec![
                    run([hm(7, 25), hm(7, 29), hm(7, 34), hm(7, 39)]),
                    run([hm(7, 36), hm(7, 40), hm(7, 45), hm(7, 50)]),
                ],
                speed: 1.0, // 60 km/h
                dwell: 0.0,
            },
        ]
    }
}
