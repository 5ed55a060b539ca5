//! Static kd-tree with exact ball and nearest-neighbour queries.

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    // children are `None` for leaves
    left: Option<usize>,
    right: Option<usize>,
}

/// Exact range-search index over a frozen set of points stored row-major.
#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    coords: Vec<f64>,
    perm: Vec<usize>,
    nodes: Vec<Node>,
    bbox_lo: Vec<f64>,
    bbox_hi: Vec<f64>,
}

impl KdTree {
    /// Builds the tree over `coords.len() / dim` points.
    pub fn new(dim: usize, coords: Vec<f64>) -> Self {
        assert!(dim > 0 && coords.len() % dim == 0);
        let n = coords.len() / dim;
        let mut tree = KdTree {
            dim,
            coords,
            perm: (0..n).collect(),
            nodes: Vec::new(),
            bbox_lo: Vec::new(),
            bbox_hi: Vec::new(),
        };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let d = self.dim;
        let id = self.nodes.len();
        self.nodes.push(Node {
            start,
            end,
            left: None,
            right: None,
        });
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for &p in &self.perm[start..end] {
            for k in 0..d {
                let v = self.coords[p * d + k];
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        let axis = (0..d)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        let spread = hi[axis] - lo[axis];
        self.bbox_lo.extend_from_slice(&lo);
        self.bbox_hi.extend_from_slice(&hi);
        if end - start <= LEAF_SIZE || spread <= 0.0 {
            return id;
        }
        let mid = start + (end - start) / 2;
        let coords = &self.coords;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            coords[a * d + axis]
                .total_cmp(&coords[b * d + axis])
                .then(a.cmp(&b))
        });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id].left = Some(left);
        self.nodes[id].right = Some(right);
        id
    }

    fn box_dist2(&self, node: usize, x: &[f64]) -> f64 {
        let d = self.dim;
        let lo = &self.bbox_lo[node * d..(node + 1) * d];
        let hi = &self.bbox_hi[node * d..(node + 1) * d];
        let mut s = 0.0;
        for k in 0..d {
            let v = if x[k] < lo[k] {
                lo[k] - x[k]
            } else if x[k] > hi[k] {
                x[k] - hi[k]
            } else {
                0.0
            };
            s += v * v;
        }
        s
    }

    fn dist2(&self, i: usize, x: &[f64]) -> f64 {
        self.point(i)
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Calls `f(i, |p_i - x|^2)` for every point with `|p_i - x| < r`
    /// (or `<= r` when `inclusive`). Visiting order follows the tree layout.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, x: &[f64], r: f64, inclusive: bool, mut f: F) {
        if self.nodes.is_empty() || r < 0.0 || (!inclusive && r <= 0.0) {
            return;
        }
        let r2 = r * r;
        let inside = |d2: f64| if inclusive { d2 <= r2 } else { d2 < r2 };
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            if !inside(self.box_dist2(node, x)) {
                continue;
            }
            let n = &self.nodes[node];
            match (n.left, n.right) {
                (Some(l), Some(rt)) => {
                    stack.push(rt);
                    stack.push(l);
                }
                _ => {
                    for &p in &self.perm[n.start..n.end] {
                        let d2 = self.dist2(p, x);
                        if inside(d2) {
                            f(p, d2);
                        }
                    }
                }
            }
        }
    }

    /// Indices of the points in the open ball `B(x, r)`, ascending.
    pub fn within(&self, x: &[f64], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(x, r, false, |i, _| out.push(i));
        out.sort_unstable();
        out
    }

    /// True if some point other than those rejected by `skip` lies in the
    /// closed ball `B̄(x, r)`.
    pub fn any_within_closed<S: Fn(usize) -> bool>(&self, x: &[f64], r: f64, skip: S) -> bool {
        if self.nodes.is_empty() || r < 0.0 {
            return false;
        }
        let r2 = r * r;
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            if self.box_dist2(node, x) > r2 {
                continue;
            }
            let n = &self.nodes[node];
            match (n.left, n.right) {
                (Some(l), Some(rt)) => {
                    stack.push(rt);
                    stack.push(l);
                }
                _ => {
                    for &p in &self.perm[n.start..n.end] {
                        if !skip(p) && self.dist2(p, x) <= r2 {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// Nearest point to `x`, skipping `exclude`. Ties go to the lowest index.
    /// Returns `(index, distance)`.
    pub fn nearest(&self, x: &[f64], exclude: Option<usize>) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            let bd = self.box_dist2(node, x);
            if let Some((_, b)) = best {
                if bd > b {
                    continue;
                }
            }
            let n = &self.nodes[node];
            match (n.left, n.right) {
                (Some(l), Some(rt)) => {
                    // visit the closer child first
                    let (dl, dr) = (self.box_dist2(l, x), self.box_dist2(rt, x));
                    if dl <= dr {
                        stack.push(rt);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(rt);
                    }
                }
                _ => {
                    for &p in &self.perm[n.start..n.end] {
                        if Some(p) == exclude {
                            continue;
                        }
                        let d2 = self.dist2(p, x);
                        let better = match best {
                            None => true,
                            Some((bi, b)) => d2 < b || (d2 == b && p < bi),
                        };
                        if better {
                            best = Some((p, d2));
                        }
                    }
                }
            }
        }
        best.map(|(i, d2)| (i, d2.sqrt()))
    }

    /// The `k` nearest points to `x` as `(index, distance)`, closest first,
    /// ties by index.
    pub fn k_nearest(&self, x: &[f64], k: usize) -> Vec<(usize, f64)> {
        use std::collections::BinaryHeap;
        if self.nodes.is_empty() || k == 0 {
            return Vec::new();
        }
        // max-heap on (d2, index): the root is the current k-th candidate
        let mut heap: BinaryHeap<(u64, usize)> = BinaryHeap::with_capacity(k + 1);
        let worst = |h: &BinaryHeap<(u64, usize)>| {
            if h.len() < k {
                f64::INFINITY
            } else {
                f64::from_bits(h.peek().unwrap().0)
            }
        };
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            if self.box_dist2(node, x) > worst(&heap) {
                continue;
            }
            let n = &self.nodes[node];
            match (n.left, n.right) {
                (Some(l), Some(rt)) => {
                    let (dl, dr) = (self.box_dist2(l, x), self.box_dist2(rt, x));
                    if dl <= dr {
                        stack.push(rt);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(rt);
                    }
                }
                _ => {
                    for &p in &self.perm[n.start..n.end] {
                        // nonnegative floats order like their bit patterns
                        let key = (self.dist2(p, x).to_bits(), p);
                        if heap.len() < k {
                            heap.push(key);
                        } else if key < *heap.peek().unwrap() {
                            heap.pop();
                            heap.push(key);
                        }
                    }
                }
            }
        }
        let mut out: Vec<(u64, usize)> = heap.into_vec();
        out.sort_unstable();
        out.into_iter().map(|(b, i)| (i, f64::from_bits(b).sqrt())).collect()
    }
}
