//! Minimum-cost flow by the primal network simplex method, specialised to
//! balanced problems with uncapacitated arcs.
//!
//! The spanning tree is stored with parent/thread/successor-count arrays and
//! kept strongly feasible, with block-search pricing. Costs and supplies are
//! floating point, so entering arcs need a reduced cost below `-eps`.

use crate::error::{Error, Result};

const UP: i8 = 1;
const DOWN: i8 = -1;
const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;

pub struct Network {
    node_num: usize,
    source: Vec<usize>,
    target: Vec<usize>,
    cost: Vec<f64>,
    supply: Vec<f64>,
}

/// Optimal flow on the real arcs and its total cost.
#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub cost: f64,
    pub flow: Vec<f64>,
    pub potential: Vec<f64>,
}

impl Network {
    pub fn new(node_num: usize) -> Self {
        Network {
            node_num,
            source: Vec::new(),
            target: Vec::new(),
            cost: Vec::new(),
            supply: vec![0.0; node_num],
        }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cost: f64) -> usize {
        self.source.push(from);
        self.target.push(to);
        self.cost.push(cost);
        self.source.len() - 1
    }

    pub fn set_supply(&mut self, node: usize, supply: f64) {
        self.supply[node] = supply;
    }

    /// Solves `min Σ c_e x_e` subject to flow conservation with the given
    /// supplies (which must sum to zero up to rounding) and `x >= 0`.
    pub fn solve(&self) -> Result<FlowSolution> {
        Simplex::new(self)?.run()
    }
}

struct Simplex {
    n: usize,
    m: usize,
    source: Vec<usize>,
    target: Vec<usize>,
    cost: Vec<f64>,
    flow: Vec<f64>,
    state: Vec<i8>,
    pi: Vec<f64>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_dir: Vec<i8>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    dirty_revs: Vec<usize>,
    eps: f64,
    block_size: usize,
    next_arc: usize,
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: f64,
}

const NONE: usize = usize::MAX;

impl Simplex {
    fn new(net: &Network) -> Result<Self> {
        let n = net.node_num;
        let m = net.source.len();
        if net.cost.iter().any(|c| !c.is_finite()) || net.supply.iter().any(|s| !s.is_finite()) {
            return Err(Error::Solver("non-finite cost or supply".into()));
        }
        let total: f64 = net.supply.iter().sum();
        let scale: f64 = net.supply.iter().map(|s| s.abs()).sum::<f64>().max(1e-300);
        if total.abs() > 1e-9 * scale {
            return Err(Error::Solver(format!("unbalanced supplies (sum {total})")));
        }
        let max_cost = net.cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let art_cost = (max_cost + 1.0) * (n as f64 + 1.0);
        let all = m + n;
        let root = n;
        let mut s = Simplex {
            n,
            m,
            source: net.source.clone(),
            target: net.target.clone(),
            cost: net.cost.clone(),
            flow: vec![0.0; all],
            state: vec![STATE_LOWER; all],
            pi: vec![0.0; n + 1],
            parent: vec![NONE; n + 1],
            pred: vec![NONE; n + 1],
            pred_dir: vec![UP; n + 1],
            thread: vec![0; n + 1],
            rev_thread: vec![0; n + 1],
            succ_num: vec![1; n + 1],
            last_succ: vec![0; n + 1],
            dirty_revs: Vec::new(),
            eps: 1e-12 * (max_cost + 1.0),
            block_size: ((m as f64).sqrt() as usize).max(10),
            next_arc: 0,
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0.0,
        };
        s.source.resize(all, 0);
        s.target.resize(all, 0);
        s.cost.resize(all, 0.0);
        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = n + 1;
        s.last_succ[root] = if n == 0 { root } else { n - 1 };
        for u in 0..n {
            let e = m + u;
            s.parent[u] = root;
            s.pred[u] = e;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.succ_num[u] = 1;
            s.last_succ[u] = u;
            s.state[e] = STATE_TREE;
            if net.supply[u] >= 0.0 {
                s.pred_dir[u] = UP;
                s.pi[u] = 0.0;
                s.source[e] = u;
                s.target[e] = root;
                s.flow[e] = net.supply[u];
                s.cost[e] = 0.0;
            } else {
                s.pred_dir[u] = DOWN;
                s.pi[u] = art_cost;
                s.source[e] = root;
                s.target[e] = u;
                s.flow[e] = -net.supply[u];
                s.cost[e] = art_cost;
            }
        }
        if n > 0 {
            // the thread is a cycle through the root
            s.thread[n - 1] = root;
            s.rev_thread[root] = n - 1;
        }
        Ok(s)
    }

    fn reduced(&self, e: usize) -> f64 {
        self.state[e] as f64 * (self.cost[e] + self.pi[self.source[e]] - self.pi[self.target[e]])
    }

    fn find_entering_arc(&mut self) -> bool {
        let mut min = -self.eps;
        let mut found = false;
        let mut cnt = self.block_size;
        let m = self.m;
        let mut e = self.next_arc;
        for _ in 0..m {
            let c = self.reduced(e);
            if c < min {
                min = c;
                self.in_arc = e;
                found = true;
            }
            e += 1;
            if e == m {
                e = 0;
            }
            cnt -= 1;
            if cnt == 0 {
                if found {
                    self.next_arc = e;
                    return true;
                }
                cnt = self.block_size;
            }
        }
        if found {
            self.next_arc = e;
        }
        found
    }

    fn find_join_node(&mut self) {
        let mut u = self.source[self.in_arc];
        let mut v = self.target[self.in_arc];
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    fn find_leaving_arc(&mut self) -> bool {
        let (first, second) = if self.state[self.in_arc] == STATE_LOWER {
            (self.source[self.in_arc], self.target[self.in_arc])
        } else {
            (self.target[self.in_arc], self.source[self.in_arc])
        };
        self.delta = f64::INFINITY;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            let e = self.pred[u];
            let d = if self.pred_dir[u] == DOWN { f64::INFINITY } else { self.flow[e] };
            if d < self.delta {
                self.delta = d;
                self.u_out = u;
                result = 1;
            }
            u = self.parent[u];
        }
        u = second;
        while u != self.join {
            let e = self.pred[u];
            let d = if self.pred_dir[u] == UP { f64::INFINITY } else { self.flow[e] };
            if d <= self.delta {
                self.delta = d;
                self.u_out = u;
                result = 2;
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        result != 0
    }

    fn change_flow(&mut self) {
        if self.delta > 0.0 {
            let val = self.state[self.in_arc] as f64 * self.delta;
            self.flow[self.in_arc] += val;
            let mut u = self.source[self.in_arc];
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] -= self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
            u = self.target[self.in_arc];
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] += self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = STATE_TREE;
        let out = self.pred[self.u_out];
        self.flow[out] = 0.0;
        self.state[out] = STATE_LOWER;
    }

    fn update_tree_structure(&mut self) {
        let u_in = self.u_in;
        let v_in = self.v_in;
        let u_out = self.u_out;
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = if u_in == self.source[self.in_arc] { UP } else { DOWN };
            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[v_in]
            };
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);
                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;
                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;
                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;
            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }
            for i in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[i];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }
            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u];
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                tmp_sc = tmp_sc + self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = if u_in == self.source[self.in_arc] { UP } else { DOWN };
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[self.join] == v_in { self.join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }
        if self.join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && u != NONE && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && u != NONE && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }
        let mut u = v_in;
        while u != self.join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != self.join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let sigma =
            self.pi[self.v_in] - self.pi[self.u_in] - self.pred_dir[self.u_in] as f64 * self.cost[self.in_arc];
        let end = self.thread[self.last_succ[self.u_in]];
        let mut u = self.u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    fn run(mut self) -> Result<FlowSolution> {
        let limit = 50 * (self.m + self.n + 10) + 100_000;
        let mut iter = 0usize;
        while self.m > 0 && self.find_entering_arc() {
            iter += 1;
            if iter > limit {
                return Err(Error::Solver(format!("no convergence after {iter} pivots")));
            }
            self.find_join_node();
            if !self.find_leaving_arc() || !self.delta.is_finite() {
                return Err(Error::Solver("unbounded problem".into()));
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
        }
        let scale: f64 = self.flow[self.m..].iter().fold(0.0, |a, f| a + f.abs());
        let art: f64 = (self.m..self.m + self.n).map(|e| self.flow[e]).fold(0.0, f64::max);
        let total: f64 = self.flow[..self.m].iter().fold(0.0f64, |a, f| a.max(*f));
        if art > 1e-9 * (total + scale).max(1.0) {
            return Err(Error::Solver(format!("infeasible problem (artificial flow {art})")));
        }
        let flow = self.flow[..self.m].to_vec();
        let cost = flow.iter().zip(&self.cost).map(|(f, c)| f * c).sum();
        let potential = self.pi[..self.n].to_vec();
        Ok(FlowSolution { cost, flow, potential })
    }
}

/// Minimum cost of moving `supply` (positive entries) to `demand` (negative
/// entries) where mass may also leave or enter through a boundary at the
/// per-node costs `boundary`. Nodes are given by a cost callback; every
/// source–sink pair is an arc.
pub fn transport_with_boundary<F>(net_supply: &[f64], boundary: &[f64], cost: F) -> Result<f64>
where
    F: Fn(usize, usize) -> f64,
{
    let pos: Vec<usize> = (0..net_supply.len()).filter(|&i| net_supply[i] > 0.0).collect();
    let neg: Vec<usize> = (0..net_supply.len()).filter(|&i| net_supply[i] < 0.0).collect();
    let all: Vec<(usize, usize)> = (0..pos.len()).flat_map(|a| (0..neg.len()).map(move |b| (a, b))).collect();
    Ok(BoundaryTransport::new(net_supply, boundary, pos, neg).solve(&cost, &all)?.0)
}

/// Same optimum as [`transport_with_boundary`], found by column generation:
/// the problem is solved on the seed arcs, then every omitted arc is priced
/// against the dual potentials and the violated ones are added until none
/// remain. `initial(i)` lists seed partners of node `i`; partners of the
/// same sign are ignored.
pub fn transport_with_boundary_sparse<F, G>(net_supply: &[f64], boundary: &[f64], cost: F, initial: G) -> Result<f64>
where
    F: Fn(usize, usize) -> f64,
    G: Fn(usize) -> Vec<usize>,
{
    let pos: Vec<usize> = (0..net_supply.len()).filter(|&i| net_supply[i] > 0.0).collect();
    let neg: Vec<usize> = (0..net_supply.len()).filter(|&i| net_supply[i] < 0.0).collect();
    let np = pos.len();
    let nn = neg.len();
    let mut slot = vec![usize::MAX; net_supply.len()];
    for (a, &k) in pos.iter().enumerate() {
        slot[k] = a;
    }
    for (b, &k) in neg.iter().enumerate() {
        slot[k] = b;
    }
    let mut present = vec![false; np * nn];
    let mut arcs = Vec::new();
    for i in pos.iter().chain(&neg).copied() {
        for k in initial(i) {
            if k >= net_supply.len() || net_supply[k] * net_supply[i] >= 0.0 {
                continue;
            }
            let (a, b) = if net_supply[i] > 0.0 { (slot[i], slot[k]) } else { (slot[k], slot[i]) };
            if !present[a * nn + b] {
                present[a * nn + b] = true;
                arcs.push((a, b));
            }
        }
    }
    let problem = BoundaryTransport::new(net_supply, boundary, pos, neg);
    loop {
        let (value, pi) = problem.solve(&cost, &arcs)?;
        let scale = boundary.iter().fold(1.0f64, |m, b| m.max(b.abs()));
        let tol = 1e-10 * scale;
        // all violated arcs enter at once
        let mut added = 0;
        for a in 0..np {
            for b in 0..nn {
                if present[a * nn + b] {
                    continue;
                }
                let rc = cost(problem.pos[a], problem.neg[b]) + pi[a] - pi[np + 1 + b];
                if rc < -tol {
                    present[a * nn + b] = true;
                    arcs.push((a, b));
                    added += 1;
                }
            }
        }
        if added == 0 {
            return Ok(value);
        }
    }
}

struct BoundaryTransport<'a> {
    supply: &'a [f64],
    boundary: &'a [f64],
    pos: Vec<usize>,
    neg: Vec<usize>,
}

impl<'a> BoundaryTransport<'a> {
    fn new(supply: &'a [f64], boundary: &'a [f64], pos: Vec<usize>, neg: Vec<usize>) -> Self {
        BoundaryTransport {
            supply,
            boundary,
            pos,
            neg,
        }
    }

    /// Optimal cost on the given source–sink arcs plus all boundary arcs, and
    /// the node potentials (sources, boundary source, sinks, boundary sink).
    fn solve<F: Fn(usize, usize) -> f64>(&self, cost: &F, arcs: &[(usize, usize)]) -> Result<(f64, Vec<f64>)> {
        let (pos, neg) = (&self.pos, &self.neg);
        if pos.is_empty() && neg.is_empty() {
            return Ok((0.0, Vec::new()));
        }
        let s_pos: f64 = pos.iter().map(|&i| self.supply[i]).sum();
        let s_neg: f64 = neg.iter().map(|&i| -self.supply[i]).sum();
        let np = pos.len();
        let nn = neg.len();
        let bsrc = np;
        let bsink = np + 1 + nn;
        let mut net = Network::new(np + nn + 2);
        for (a, &i) in pos.iter().enumerate() {
            net.set_supply(a, self.supply[i]);
            net.add_arc(a, bsink, self.boundary[i]);
        }
        for &(a, b) in arcs {
            net.add_arc(a, np + 1 + b, cost(pos[a], neg[b]));
        }
        net.set_supply(bsrc, s_neg);
        for (b, &k) in neg.iter().enumerate() {
            net.set_supply(np + 1 + b, self.supply[k]);
            net.add_arc(bsrc, np + 1 + b, self.boundary[k]);
        }
        net.add_arc(bsrc, bsink, 0.0);
        net.set_supply(bsink, -s_pos);
        let sol = net.solve()?;
        Ok((sol.cost, sol.potential))
    }
}
