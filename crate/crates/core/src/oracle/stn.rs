//! Simple temporal networks: conjunctions of difference constraints
//! `x_v - x_u <= w`, decided exactly with Bellman-Ford.

/// Node 0 is the time origin, fixed at zero.
#[derive(Debug, Clone, Default)]
pub struct Stn {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    infeasible: bool,
}

impl Stn {
    pub fn new() -> Self {
        Stn {
            n: 1,
            edges: Vec::new(),
            infeasible: false,
        }
    }

    pub fn var(&mut self) -> usize {
        self.n += 1;
        self.n - 1
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 1
    }

    /// x_v - x_u <= w
    pub fn le(&mut self, v: usize, u: usize, w: f64) {
        if w.is_nan() {
            self.infeasible = true;
        } else if w.is_finite() {
            self.edges.push((u, v, w));
        } else if w < 0.0 {
            self.infeasible = true;
        }
    }

    /// x_v - x_u >= w
    pub fn ge(&mut self, v: usize, u: usize, w: f64) {
        self.le(u, v, -w);
    }

    pub fn bounds(&mut self, v: usize, lo: f64, hi: f64) {
        self.le(v, 0, hi);
        self.ge(v, 0, lo);
    }

    pub fn fix(&mut self, v: usize, t: f64) {
        self.bounds(v, t, t);
    }

    /// A constraint between constants only.
    pub fn require(&mut self, ok: bool) {
        if !ok {
            self.infeasible = true;
        }
    }

    /// Earliest consistent assignment.
    pub fn solve_earliest(&self, tol: f64) -> Option<Vec<f64>> {
        let rev = Stn {
            n: self.n,
            edges: self.edges.iter().map(|&(u, v, w)| (v, u, w)).collect(),
            infeasible: self.infeasible,
        };
        let x = rev.solve(tol)?;
        Some(x.iter().map(|d| if *d == 0.0 { 0.0 } else { -d }).collect())
    }

    /// Latest consistent assignment, or `None` when the constraints conflict.
    /// `tol` absorbs rounding in the input data.
    pub fn solve(&self, tol: f64) -> Option<Vec<f64>> {
        if self.infeasible {
            return None;
        }
        let mut dist = vec![f64::INFINITY; self.n];
        dist[0] = 0.0;
        // every variable is reachable from the origin through a bound far past
        // any horizon, yet small enough to keep sub-microsecond precision
        for v in 1..self.n {
            dist[v] = 1e6;
        }
        for _ in 0..self.n {
            let mut changed = false;
            for &(u, v, w) in &self.edges {
                let cand = dist[u] + w;
                if cand < dist[v] - tol * 1e-3 {
                    dist[v] = cand;
                    changed = true;
                }
            }
            if !changed {
                return if dist[0] < -tol { None } else { Some(dist) };
            }
        }
        // still relaxing after n rounds: a cycle is negative beyond `tol`
        let mut dist2 = dist.clone();
        for &(u, v, w) in &self.edges {
            if dist2[u] + w < dist2[v] - tol {
                dist2[v] = dist2[u] + w;
                return None;
            }
        }
        if dist2[0] < -tol {
            None
        } else {
            Some(dist2)
        }
    }
}
