//! Minimum 1-trees, α-nearness and the Held-Karp penalty ascent.
//!
//! All penalized arithmetic is done in integers scaled by [`PI_SCALE`]:
//! a penalized edge cost is `PI_SCALE * d(i,j) + pi_i + pi_j`. With integer
//! costs the α-values, 1-tree lengths and move gains are exact, and on any
//! closed tour the penalty terms cancel to exactly `2 * sum(pi)`.

use std::fmt::Write as _;

use crate::tsplib::Instance;

/// Fixed-point scale for penalties and penalized costs.
pub const PI_SCALE: i64 = 1000;

const NONE: usize = usize::MAX;

/// Node penalties π together with the lower bound w(π) they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct Penalties {
    pi: Vec<i64>,
    w: i64,
}

impl Penalties {
    pub fn zero(inst: &Instance) -> Self {
        Self::from_scaled(inst, vec![0; inst.dimension()])
    }

    /// Penalties given in [`PI_SCALE`] units; w(π) is computed from a fresh 1-tree.
    pub fn from_scaled(inst: &Instance, pi: Vec<i64>) -> Self {
        assert_eq!(pi.len(), inst.dimension());
        let tree = one_tree_core(inst, &pi, None);
        let w = tree.total - 2 * pi.iter().sum::<i64>();
        Penalties { pi, w }
    }

    /// Real-valued penalties, rounded to the fixed-point grid.
    pub fn from_reals(inst: &Instance, pi: &[f64]) -> Self {
        let scaled = pi.iter().map(|p| (p * PI_SCALE as f64).round() as i64).collect();
        Self::from_scaled(inst, scaled)
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn pi(&self, i: usize) -> f64 {
        self.pi[i] as f64 / PI_SCALE as f64
    }

    pub fn pi_scaled(&self) -> &[i64] {
        &self.pi
    }

    /// Held-Karp lower bound w(π) = L(T_π) − 2Σπ in length units.
    pub fn w(&self) -> f64 {
        self.w as f64 / PI_SCALE as f64
    }

    pub fn w_scaled(&self) -> i64 {
        self.w
    }

    /// CSV with one `city,pi` row per city (1-based city ids).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("city,pi\n");
        for (i, _) in self.pi.iter().enumerate() {
            let _ = writeln!(s, "{},{}", i + 1, self.pi(i));
        }
        s
    }
}

/// Penalized edge cost C(i,j) = d(i,j) + π_i + π_j.
#[derive(Debug, Clone, Copy)]
pub struct PenalizedCost<'a> {
    inst: &'a Instance,
    pi: &'a [i64],
}

impl<'a> PenalizedCost<'a> {
    pub fn new(inst: &'a Instance, pen: &'a Penalties) -> Self {
        PenalizedCost { inst, pi: &pen.pi }
    }

    fn raw(inst: &'a Instance, pi: &'a [i64]) -> Self {
        PenalizedCost { inst, pi }
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    /// C(i,j) in [`PI_SCALE`] units.
    #[inline]
    pub fn scaled(&self, i: usize, j: usize) -> i64 {
        PI_SCALE * self.inst.distance(i, j) + self.pi[i] + self.pi[j]
    }

    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.scaled(i, j) as f64 / PI_SCALE as f64
    }
}

pub fn penalized_cost(inst: &Instance, p: &Penalties, i: usize, j: usize) -> f64 {
    PenalizedCost::new(inst, p).cost(i, j)
}

/// Sparse neighbour lists used in place of the complete graph on large instances.
#[derive(Debug, Clone)]
pub struct NeighborGraph {
    lists: Vec<Vec<usize>>,
}

impl NeighborGraph {
    /// The `k` nearest cities of every city under the plain distance.
    pub fn nearest(inst: &Instance, k: usize) -> Self {
        let n = inst.dimension();
        let k = k.min(n - 1);
        let mut lists: Vec<Vec<usize>> = Vec::with_capacity(n);
        let mut buf: Vec<(i64, usize)> = Vec::with_capacity(n);
        for i in 0..n {
            buf.clear();
            buf.extend((0..n).filter(|&j| j != i).map(|j| (inst.distance(i, j), j)));
            buf.select_nth_unstable(k - 1);
            let mut head: Vec<(i64, usize)> = buf[..k].to_vec();
            head.sort_unstable();
            lists.push(head.into_iter().map(|(_, j)| j).collect());
        }
        // make the relation symmetric so Prim sees every listed edge from both ends
        let mut sym: Vec<Vec<usize>> = lists.clone();
        for (i, l) in lists.iter().enumerate() {
            for &j in l {
                if !sym[j].contains(&i) {
                    sym[j].push(i);
                }
            }
        }
        NeighborGraph { lists: sym }
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.lists[i]
    }
}

/// Degrees, special node and total of a minimum 1-tree; enough for the ascent.
struct CoreTree {
    /// Prim parent over all n nodes (root has NONE).
    mst_parent: Vec<usize>,
    special: usize,
    /// Tree neighbour of the special leaf, then the added second-nearest neighbour.
    special_edges: [usize; 2],
    degree: Vec<u32>,
    total: i64,
}

fn prim_dense(cost: &PenalizedCost<'_>, n: usize) -> (Vec<usize>, i64) {
    let mut in_tree = vec![false; n];
    let mut key = vec![i64::MAX; n];
    let mut parent = vec![NONE; n];
    let mut total = 0i64;
    let mut u = 0usize;
    in_tree[0] = true;
    for _ in 1..n {
        let mut best = NONE;
        let mut best_key = i64::MAX;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let c = cost.scaled(u, v);
            if c < key[v] {
                key[v] = c;
                parent[v] = u;
            }
            if key[v] < best_key {
                best_key = key[v];
                best = v;
            }
        }
        in_tree[best] = true;
        total += best_key;
        u = best;
    }
    (parent, total)
}

fn prim_sparse(cost: &PenalizedCost<'_>, n: usize, graph: &NeighborGraph) -> (Vec<usize>, i64) {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let mut in_tree = vec![false; n];
    let mut key = vec![i64::MAX; n];
    let mut parent = vec![NONE; n];
    let mut total = 0i64;
    let mut heap = BinaryHeap::new();
    let mut added = 0usize;
    let mut next_seed = 0usize;
    while added < n {
        // seed a new component; join it to the tree through its nearest tree node
        while in_tree[next_seed] {
            next_seed += 1;
        }
        let s = next_seed;
        if added > 0 {
            let (c, w) = (0..n)
                .filter(|&w| in_tree[w])
                .map(|w| (cost.scaled(s, w), w))
                .min()
                .unwrap();
            parent[s] = w;
            total += c;
        }
        key[s] = 0;
        heap.push(Reverse((0i64, s)));
        while let Some(Reverse((k, u))) = heap.pop() {
            if in_tree[u] || k != key[u] {
                continue;
            }
            in_tree[u] = true;
            added += 1;
            if u != s {
                total += k;
            }
            for &v in graph.neighbors(u) {
                if in_tree[v] {
                    continue;
                }
                let c = cost.scaled(u, v);
                if c < key[v] {
                    key[v] = c;
                    parent[v] = u;
                    heap.push(Reverse((c, v)));
                }
            }
        }
    }
    (parent, total)
}

fn one_tree_core(inst: &Instance, pi: &[i64], graph: Option<&NeighborGraph>) -> CoreTree {
    let n = inst.dimension();
    let cost = PenalizedCost::raw(inst, pi);
    let (mst_parent, mst_total) = match graph {
        Some(g) => prim_sparse(&cost, n, g),
        None => prim_dense(&cost, n),
    };
    let mut degree = vec![0u32; n];
    let mut tree_nbr = vec![NONE; n];
    for (v, &p) in mst_parent.iter().enumerate() {
        if p != NONE {
            degree[v] += 1;
            degree[p] += 1;
            tree_nbr[v] = p;
            tree_nbr[p] = v;
        }
    }
    // tree_nbr is only meaningful for leaves, where it is the unique neighbour
    let mut special = NONE;
    let mut special_second = NONE;
    let mut best = i64::MIN;
    for v in 0..n {
        if degree[v] != 1 {
            continue;
        }
        let u = tree_nbr[v];
        let mut second = (i64::MAX, NONE);
        let mut consider = |j: usize| {
            if j != v && j != u {
                let c = cost.scaled(v, j);
                if (c, j) < second {
                    second = (c, j);
                }
            }
        };
        match graph {
            Some(g) => g.neighbors(v).iter().for_each(|&j| consider(j)),
            None => (0..n).for_each(consider),
        }
        if second.1 != NONE && second.0 > best {
            best = second.0;
            special = v;
            special_second = second.1;
        }
    }
    debug_assert!(special != NONE);
    degree[special] += 1;
    degree[special_second] += 1;
    CoreTree {
        special_edges: [tree_nbr[special], special_second],
        mst_parent,
        special,
        degree,
        total: mst_total + best,
    }
}

/// A minimum 1-tree: a spanning tree on V \ {special} plus two edges at `special`.
#[derive(Debug, Clone)]
pub struct OneTree {
    special: usize,
    special_edges: [usize; 2],
    /// Parent links of the spanning tree over V \ {special}, rooted at `root`.
    parent: Vec<usize>,
    root: usize,
    /// Breadth-first order of the tree over V \ {special}.
    order: Vec<usize>,
    adj_start: Vec<usize>,
    adj: Vec<usize>,
    degree: Vec<u32>,
    total: i64,
}

impl OneTree {
    fn from_core(core: CoreTree) -> Self {
        let n = core.degree.len();
        let v = core.special;
        // CSR adjacency of the MST minus the special leaf's edge
        let mut count = vec![0usize; n];
        for (c, &p) in core.mst_parent.iter().enumerate() {
            if p != NONE && c != v && p != v {
                count[c] += 1;
                count[p] += 1;
            }
        }
        let mut adj_start = vec![0usize; n + 1];
        for i in 0..n {
            adj_start[i + 1] = adj_start[i] + count[i];
        }
        let mut fill = adj_start.clone();
        let mut adj = vec![0usize; adj_start[n]];
        for (c, &p) in core.mst_parent.iter().enumerate() {
            if p != NONE && c != v && p != v {
                adj[fill[c]] = p;
                fill[c] += 1;
                adj[fill[p]] = c;
                fill[p] += 1;
            }
        }
        let root = core.special_edges[0];
        let mut parent = vec![NONE; n];
        let mut order = Vec::with_capacity(n - 1);
        let mut seen = vec![false; n];
        seen[root] = true;
        seen[v] = true;
        order.push(root);
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &w in &adj[adj_start[u]..adj_start[u + 1]] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = u;
                    order.push(w);
                }
            }
        }
        debug_assert_eq!(order.len(), n - 1);
        OneTree {
            special: v,
            special_edges: core.special_edges,
            parent,
            root,
            order,
            adj_start,
            adj,
            degree: core.degree,
            total: core.total,
        }
    }

    pub fn special(&self) -> usize {
        self.special
    }

    /// The two 1-tree edges at the special node, cheapest first.
    pub fn special_edges(&self) -> [usize; 2] {
        self.special_edges
    }

    /// Parent of `c` in the spanning tree over V \ {special}; `None` for the root and the special node.
    pub fn parent(&self, c: usize) -> Option<usize> {
        let p = self.parent[c];
        (p != NONE).then_some(p)
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Breadth-first order of the spanning tree over V \ {special}, root first.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn degree(&self, c: usize) -> u32 {
        self.degree[c]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degree
    }

    /// L(T) in length units (penalized).
    pub fn total_length(&self) -> f64 {
        self.total as f64 / PI_SCALE as f64
    }

    pub fn total_scaled(&self) -> i64 {
        self.total
    }

    /// All n edges of the 1-tree.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .parent
            .iter()
            .enumerate()
            .filter(|&(_, &p)| p != NONE)
            .map(|(c, &p)| (p, c))
            .collect();
        e.push((self.special, self.special_edges[0]));
        e.push((self.special, self.special_edges[1]));
        e
    }

    pub fn contains_edge(&self, i: usize, j: usize) -> bool {
        if i == self.special || j == self.special {
            let o = if i == self.special { j } else { i };
            return self.special_edges.contains(&o);
        }
        self.parent[i] == j || self.parent[j] == i
    }

    fn tree_neighbors(&self, u: usize) -> &[usize] {
        &self.adj[self.adj_start[u]..self.adj_start[u + 1]]
    }

    /// Fills `beta[j]` with the largest edge cost on the tree path from `from` to `j`.
    fn path_maxima(&self, cost: &PenalizedCost<'_>, from: usize, beta: &mut [i64], stack: &mut Vec<(usize, usize)>) {
        beta[from] = i64::MIN;
        stack.clear();
        stack.push((from, NONE));
        while let Some((u, prev)) = stack.pop() {
            for &w in self.tree_neighbors(u) {
                if w != prev {
                    beta[w] = beta[u].max(cost.scaled(u, w));
                    stack.push((w, u));
                }
            }
        }
    }
}

/// Minimum 1-tree under penalties `p`, special node chosen as the MST leaf
/// whose second-nearest neighbour is farthest.
pub fn minimum_one_tree(inst: &Instance, p: &Penalties) -> OneTree {
    OneTree::from_core(one_tree_core(inst, &p.pi, None))
}

pub fn minimum_one_tree_sparse(inst: &Instance, p: &Penalties, graph: &NeighborGraph) -> OneTree {
    OneTree::from_core(one_tree_core(inst, &p.pi, Some(graph)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaEntry {
    pub city: usize,
    /// α(i, city) in [`PI_SCALE`] units.
    pub alpha: i64,
}

impl AlphaEntry {
    pub fn alpha(&self) -> f64 {
        self.alpha as f64 / PI_SCALE as f64
    }
}

/// Per-city α-values over a neighbourhood of the nearest cities by penalized cost.
#[derive(Debug, Clone)]
pub struct AlphaTable {
    rows: Vec<Vec<AlphaEntry>>,
}

impl AlphaTable {
    pub fn row(&self, i: usize) -> &[AlphaEntry] {
        &self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get_scaled(&self, i: usize, j: usize) -> Option<i64> {
        self.rows[i].iter().find(|e| e.city == j).map(|e| e.alpha)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.get_scaled(i, j).map(|a| a as f64 / PI_SCALE as f64)
    }

    /// CSV of `city,neighbor,alpha` rows (1-based city ids).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("city,neighbor,alpha\n");
        for (i, row) in self.rows.iter().enumerate() {
            for e in row {
                let _ = writeln!(s, "{},{},{}", i + 1, e.city + 1, e.alpha());
            }
        }
        s
    }
}

/// Computes α(i,j) = L(T⁺(i,j)) − L(T) for each city and its `neighborhood`
/// nearest cities under the penalized cost.
pub fn alpha_values(inst: &Instance, pen: &Penalties, tree: &OneTree, neighborhood: usize) -> AlphaTable {
    let n = inst.dimension();
    let cost = PenalizedCost::new(inst, pen);
    let keep = neighborhood.min(n - 1).max(1);
    let v = tree.special;
    let [_, far] = tree.special_edges;
    let special_cut = cost.scaled(v, far);
    let mut beta = vec![0i64; n];
    let mut stack = Vec::new();
    let mut by_cost: Vec<(i64, usize)> = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        by_cost.clear();
        by_cost.extend((0..n).filter(|&j| j != i).map(|j| (cost.scaled(i, j), j)));
        if keep < by_cost.len() {
            by_cost.select_nth_unstable(keep - 1);
            by_cost.truncate(keep);
        }
        by_cost.sort_unstable();
        if i != v {
            tree.path_maxima(&cost, i, &mut beta, &mut stack);
        }
        let row = by_cost
            .iter()
            .map(|&(c, j)| {
                let alpha = if i == v || j == v {
                    let o = if i == v { j } else { i };
                    if tree.special_edges.contains(&o) {
                        0
                    } else {
                        (c - special_cut).max(0)
                    }
                } else {
                    (c - beta[j]).max(0)
                };
                AlphaEntry { city: j, alpha }
            })
            .collect();
        rows.push(row);
    }
    AlphaTable { rows }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentConfig {
    /// Hard cap on 1-tree evaluations; `None` means max(10n, 1000). The step
    /// schedule usually ends well before the cap.
    pub max_iterations: Option<usize>,
    /// Length of the first step-halving period; `None` means max(n/2, 100).
    pub initial_period: Option<usize>,
    /// First step size in [`PI_SCALE`] units.
    pub initial_step: i64,
    /// Above this many cities the ascent's 1-trees are built on a nearest-neighbour
    /// graph. The returned bound is always recomputed on the complete graph.
    pub dense_limit: usize,
    /// Neighbours per city in the sparse graph.
    pub sparse_neighbors: usize,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            max_iterations: None,
            initial_period: None,
            initial_step: PI_SCALE,
            dense_limit: 1000,
            sparse_neighbors: 20,
        }
    }
}

/// Result of the ascent: the best penalties plus w(π) of every evaluated π.
#[derive(Debug, Clone)]
pub struct AscentTrace {
    pub best: Penalties,
    pub history: Vec<i64>,
}

/// Sub-gradient ascent on w(π): π_i moves along deg_i − 2. Returns the π with
/// the largest bound seen.
pub fn subgradient_ascent(inst: &Instance, cfg: &AscentConfig) -> Penalties {
    subgradient_ascent_traced(inst, cfg).best
}

pub fn subgradient_ascent_traced(inst: &Instance, cfg: &AscentConfig) -> AscentTrace {
    let n = inst.dimension();
    let graph = (n > cfg.dense_limit).then(|| NeighborGraph::nearest(inst, cfg.sparse_neighbors));
    let graph = graph.as_ref();
    let max_iter = cfg.max_iterations.unwrap_or((10 * n).max(1000));
    let initial_period = cfg.initial_period.unwrap_or((n / 2).max(100)).max(1);

    let mut pi = vec![0i64; n];
    let eval = |pi: &[i64]| {
        let t = one_tree_core(inst, pi, graph);
        let w = t.total - 2 * pi.iter().sum::<i64>();
        (t.degree, w)
    };
    let (mut degree, w0) = eval(&pi);
    let mut history = vec![w0];
    let mut best_w = w0;
    let mut best_pi = pi.clone();
    let mut last_v = vec![0i64; n];
    let mut step = cfg.initial_step.max(1);
    let mut period = initial_period;
    let mut initial_phase = true;
    let mut iterations = 0usize;

    'outer: while period > 0 && step > 0 {
        if degree.iter().all(|&d| d == 2) {
            break;
        }
        let mut p = 1usize;
        while p <= period {
            if iterations >= max_iter {
                break 'outer;
            }
            for i in 0..n {
                let v = degree[i] as i64 - 2;
                if v != 0 || last_v[i] != 0 {
                    pi[i] += step * (7 * v + 3 * last_v[i]) / 10;
                }
                last_v[i] = v;
            }
            let (d, w) = eval(&pi);
            degree = d;
            iterations += 1;
            history.push(w);
            if w > best_w {
                best_w = w;
                best_pi.copy_from_slice(&pi);
                if initial_phase {
                    step *= 2;
                }
                if p == period {
                    period = (period * 2).min(initial_period);
                }
            } else if initial_phase && p > period / 2 {
                initial_phase = false;
                p = 0;
                step = 3 * step / 4;
            }
            if degree.iter().all(|&d| d == 2) {
                break 'outer;
            }
            p += 1;
        }
        period /= 2;
        step /= 2;
    }
    let best = match graph {
        // a tree on a subgraph can be longer than the true minimum 1-tree
        Some(_) => Penalties::from_scaled(inst, best_pi),
        None => Penalties { pi: best_pi, w: best_w },
    };
    AscentTrace { best, history }
}
