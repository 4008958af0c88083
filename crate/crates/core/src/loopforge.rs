//! Plane forests, looptrees, contour indexing and looptree distances.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lukapath::{self, LukaPath};
use crate::rmq::SparseMin;

const NONE: usize = usize::MAX;

/// Plane forest with `rho` trees, stored as one plane tree whose extra root 0
/// has the forest roots as children. Vertices are numbered in depth-first
/// order, so vertex `k` is visited at time `k` of the coding path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneForest {
    parent: Vec<usize>,
    child_start: Vec<usize>,
    children: Vec<usize>,
}

impl PlaneForest {
    /// Tree given by ordered child lists, rooted at vertex 0; vertices are
    /// renumbered in depth-first order. Unreachable vertices are dropped.
    pub fn from_children(children: &[Vec<usize>]) -> Self {
        let mut order = Vec::with_capacity(children.len());
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            order.push(v);
            for &c in children[v].iter().rev() {
                stack.push(c);
            }
        }
        let mut new_id = vec![NONE; children.len()];
        for (k, &v) in order.iter().enumerate() {
            new_id[v] = k;
        }
        let ids: Vec<Vec<usize>> = order
            .iter()
            .map(|&v| children[v].iter().map(|&c| new_id[c]).collect())
            .collect();
        Self::from_dfs_children(&ids)
    }

    fn from_dfs_children(children: &[Vec<usize>]) -> Self {
        let n = children.len();
        let mut parent = vec![NONE; n];
        let mut child_start = Vec::with_capacity(n + 1);
        let mut flat = Vec::with_capacity(n.saturating_sub(1));
        for (v, cs) in children.iter().enumerate() {
            child_start.push(flat.len());
            for &c in cs {
                parent[c] = v;
                flat.push(c);
            }
        }
        child_start.push(flat.len());
        PlaneForest { parent, child_start, children: flat }
    }

    /// Number of tree vertices, extra root included (`E + 1`).
    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn edges(&self) -> usize {
        self.parent.len() - 1
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        (self.parent[v] != NONE).then_some(self.parent[v])
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[self.child_start[v]..self.child_start[v + 1]]
    }

    pub fn num_children(&self, v: usize) -> usize {
        self.child_start[v + 1] - self.child_start[v]
    }

    /// Roots of the forest (children of the extra root).
    pub fn roots(&self) -> &[usize] {
        self.children(0)
    }

    /// Position of `v` among its siblings, from 0.
    pub fn sibling_rank(&self, v: usize) -> usize {
        let p = self.parent[v];
        self.children(p).iter().position(|&c| c == v).expect("child of its parent")
    }

    /// Number of strict ancestors excluding the extra root.
    pub fn heights(&self) -> Vec<usize> {
        let mut h = vec![0; self.vertex_count()];
        for v in 1..self.vertex_count() {
            let p = self.parent[v];
            h[v] = if p == 0 { 0 } else { h[p] + 1 };
        }
        h
    }

    /// Rightmost descendant leaf of every vertex.
    pub fn rightmost_leaf(&self) -> Vec<usize> {
        let n = self.vertex_count();
        let mut l = vec![0; n];
        for v in (0..n).rev() {
            let cs = self.children(v);
            l[v] = match cs.last() {
                Some(&c) => l[c],
                None => v,
            };
        }
        l
    }
}

/// Forest whose depth-first jump sequence is `path`.
pub fn forest_from_path(path: &LukaPath) -> Result<PlaneForest> {
    if !path.is_excursion() {
        return Err(Error::NotExcursion);
    }
    let parent = lukapath::parents(path);
    let mut children = vec![Vec::new(); path.len() + 1];
    for (v, &p) in parent.iter().enumerate().skip(1) {
        children[p].push(v);
    }
    Ok(PlaneForest::from_dfs_children(&children))
}

/// Depth-first offspring sequence of the forest.
pub fn path_of_forest(forest: &PlaneForest) -> LukaPath {
    let jumps = (1..forest.vertex_count()).map(|v| forest.num_children(v)).collect();
    LukaPath::new(forest.num_children(0), jumps)
}

/// Looptree stored in contour order: edge `i` goes from the vertex of corner
/// `i` to the vertex of corner `i + 1`, with the outer face on its left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Looptree {
    vertex_count: usize,
    corner_vertex: Vec<usize>,
    edge_cycle: Vec<usize>,
    edge_pos: Vec<usize>,
    cycle_start: Vec<usize>,
    cycle_edges: Vec<usize>,
}

impl Looptree {
    fn from_contour(corner_vertex: Vec<usize>, edge_cycle: Vec<usize>, edge_pos: Vec<usize>) -> Self {
        let cycles = edge_cycle.iter().copied().max().map_or(0, |m| m + 1);
        let mut len = vec![0usize; cycles];
        for &c in &edge_cycle {
            len[c] += 1;
        }
        let mut cycle_start = vec![0; cycles + 1];
        for c in 0..cycles {
            cycle_start[c + 1] = cycle_start[c] + len[c];
        }
        let mut cycle_edges = vec![0; edge_cycle.len()];
        for (e, (&c, &p)) in edge_cycle.iter().zip(&edge_pos).enumerate() {
            cycle_edges[cycle_start[c] + p] = e;
        }
        let vertex_count = corner_vertex.iter().copied().max().map_or(0, |m| m + 1);
        Looptree { vertex_count, corner_vertex, edge_cycle, edge_pos, cycle_start, cycle_edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_cycle.len()
    }

    pub fn cycle_count(&self) -> usize {
        self.cycle_start.len() - 1
    }

    /// Vertices of corners `0..=E`; corner `E` is the root corner again.
    pub fn corner_vertices(&self) -> &[usize] {
        &self.corner_vertex
    }

    pub fn corner_vertex(&self, i: usize) -> usize {
        self.corner_vertex[i]
    }

    /// `(src, dst)` of contour edge `i`.
    pub fn edge(&self, i: usize) -> (usize, usize) {
        (self.corner_vertex[i], self.corner_vertex[i + 1])
    }

    pub fn edge_cycle(&self, i: usize) -> usize {
        self.edge_cycle[i]
    }

    /// Position of edge `i` in its cycle, from 0.
    pub fn edge_pos(&self, i: usize) -> usize {
        self.edge_pos[i]
    }

    pub fn cycle_len(&self, c: usize) -> usize {
        self.cycle_start[c + 1] - self.cycle_start[c]
    }

    /// Edges of cycle `c` in contour order.
    pub fn cycle_edges(&self, c: usize) -> &[usize] {
        &self.cycle_edges[self.cycle_start[c]..self.cycle_start[c + 1]]
    }

    pub fn cycle_lengths(&self) -> Vec<usize> {
        (0..self.cycle_count()).map(|c| self.cycle_len(c)).collect()
    }

    /// Adjacency lists of the underlying multigraph.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for i in 0..self.edge_count() {
            let (a, b) = self.edge(i);
            adj[a].push(b);
            if a != b {
                adj[b].push(a);
            }
        }
        adj
    }

    /// Graph distances from `source`.
    pub fn bfs(&self, source: usize) -> Vec<usize> {
        bfs(&self.adjacency(), source)
    }
}

pub(crate) fn bfs(adj: &[Vec<usize>], source: usize) -> Vec<usize> {
    let mut dist = vec![NONE; adj.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if dist[w] == NONE {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Looptree obtained by merging every internal vertex with its rightmost
/// child. Its vertices are the leaves of the tree, numbered by first
/// appearance along the contour.
pub fn looptree_from_forest(forest: &PlaneForest) -> Looptree {
    let n = forest.vertex_count();
    let e = n - 1;
    let leaf = forest.rightmost_leaf();
    let mut id = vec![NONE; n];
    let mut next = 0;
    let mut corner_vertex = Vec::with_capacity(e + 1);
    for &l in leaf.iter() {
        if id[l] == NONE {
            id[l] = next;
            next += 1;
        }
        corner_vertex.push(id[l]);
    }
    let mut cycle_of = vec![NONE; n];
    let mut cycles = 0;
    let mut edge_cycle = Vec::with_capacity(e);
    let mut edge_pos = Vec::with_capacity(e);
    let mut rank = vec![0usize; n];
    for v in 0..n {
        for (r, &c) in forest.children(v).iter().enumerate() {
            rank[c] = r;
        }
    }
    for i in 0..e {
        let p = forest.parent[i + 1];
        if cycle_of[p] == NONE {
            cycle_of[p] = cycles;
            cycles += 1;
        }
        edge_cycle.push(cycle_of[p]);
        edge_pos.push(rank[i + 1]);
    }
    Looptree::from_contour(corner_vertex, edge_cycle, edge_pos)
}

/// Looptree of an excursion path.
pub fn looptree_from_path(path: &LukaPath) -> Result<Looptree> {
    Ok(looptree_from_forest(&forest_from_path(path)?))
}

/// Łukasiewicz path read off a looptree: the jump at time `i` is the length
/// of the cycle of edge `i` when that edge opens its cycle, 0 otherwise.
pub fn luka_of_looptree(lt: &Looptree) -> LukaPath {
    let e = lt.edge_count();
    let start = lt.cycle_len(lt.edge_cycle(0));
    let mut jumps: Vec<usize> = (1..e)
        .map(|i| if lt.edge_pos(i) == 0 { lt.cycle_len(lt.edge_cycle(i)) } else { 0 })
        .collect();
    jumps.push(0);
    LukaPath::new(start, jumps)
}

/// `Lambda(t)` = number of null jumps at times `1..=t`, and `lambda(k)`, the
/// time of the `k`-th null jump (`k = 1..=f(0)`, stored at index `k - 1`).
pub fn vertex_counting(lt: &Looptree) -> (Vec<usize>, Vec<usize>) {
    let path = luka_of_looptree(lt);
    let mut big = vec![0; path.len() + 1];
    let mut small = Vec::new();
    for t in 1..=path.len() {
        big[t] = big[t - 1];
        if path.jump(t) == 0 {
            big[t] += 1;
            small.push(t);
        }
    }
    (big, small)
}

pub fn looptree_distance_bfs(lt: &Looptree, i: usize, j: usize) -> usize {
    lt.bfs(i)[j]
}

/// `min(|a - b|, k - |a - b|)`, the distance between positions `a` and `b`
/// on a cycle of length `k`.
pub fn cycle_delta(k: usize, a: usize, b: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(k - d)
}

/// Looptree distance between corners computed from the coding path.
#[derive(Debug, Clone)]
pub struct DistanceOracle {
    path: LukaPath,
    lefts: Vec<i64>,
    parent: Vec<usize>,
    sparse: SparseMin<i64>,
}

impl DistanceOracle {
    pub fn new(path: &LukaPath) -> Result<Self> {
        if !path.is_excursion() {
            return Err(Error::NotExcursion);
        }
        let lefts = path.lefts();
        Ok(DistanceOracle {
            path: path.clone(),
            parent: lukapath::parents(path),
            sparse: SparseMin::new(&lefts),
            lefts,
        })
    }

    /// Last common ancestor `s ∧ t` (ancestry includes equality).
    pub fn common_ancestor(&self, s: usize, t: usize) -> usize {
        let (s, t) = (s.min(t), s.max(t));
        if s == t {
            return s;
        }
        let m = self.sparse.min(s + 1, t);
        if self.lefts[s] <= m {
            s
        } else {
            self.sparse.last_at_most(s - 1, m).expect("time 0 is a common ancestor")
        }
    }

    /// Sum of `delta_r(0, R^x_r)` over ancestors strictly between `top` and
    /// `x`, and `R^x_top`.
    fn climb(&self, x: usize, top: usize) -> (usize, usize) {
        if x == top {
            return (0, self.path.jump(top));
        }
        let mut sum = 0;
        let mut cur = x;
        loop {
            let p = self.parent[cur];
            let r = (self.lefts[cur] - self.lefts[p]) as usize;
            if p == top {
                return (sum, r);
            }
            sum += cycle_delta(self.path.jump(p), 0, r);
            cur = p;
        }
    }

    /// Distance between corners `s` and `t` in `0..=E`.
    pub fn distance(&self, s: usize, t: usize) -> Result<usize> {
        let e = self.path.len();
        for x in [s, t] {
            if x > e {
                return Err(Error::OutOfRange { index: x, max: e });
            }
        }
        let s = if s == e { 0 } else { s };
        let t = if t == e { 0 } else { t };
        if s == t {
            return Ok(0);
        }
        let top = self.common_ancestor(s, t);
        let (a, ra) = self.climb(s, top);
        let (b, rb) = self.climb(t, top);
        Ok(a + b + cycle_delta(self.path.jump(top), ra, rb))
    }
}

/// Corner distance from the path formula (single query).
pub fn looptree_distance_formula(path: &LukaPath, s: usize, t: usize) -> Result<usize> {
    DistanceOracle::new(path)?.distance(s, t)
}

/// Non-contracted looptree: every internal vertex with `k` children carries
/// a cycle of length `k + 1` through itself and its children.
pub fn ck_variant(forest: &PlaneForest) -> Looptree {
    let mut corner_vertex = vec![0usize];
    let mut edge_cycle = Vec::new();
    let mut edge_pos = Vec::new();
    let mut cycle_of = vec![NONE; forest.vertex_count()];
    let mut cycles = 0;
    // Explicit stack of (vertex, next child index).
    let mut stack = vec![(0usize, 0usize)];
    while let Some(&mut (v, ref mut r)) = stack.last_mut() {
        let cs = forest.children(v);
        if cs.is_empty() {
            stack.pop();
            continue;
        }
        if cycle_of[v] == NONE {
            cycle_of[v] = cycles;
            cycles += 1;
        }
        let pos = *r;
        if pos < cs.len() {
            *r += 1;
            edge_cycle.push(cycle_of[v]);
            edge_pos.push(pos);
            corner_vertex.push(cs[pos]);
            stack.push((cs[pos], 0));
        } else {
            edge_cycle.push(cycle_of[v]);
            edge_pos.push(pos);
            corner_vertex.push(v);
            stack.pop();
        }
    }
    Looptree::from_contour(corner_vertex, edge_cycle, edge_pos)
}

/// Contracts the last edge of every cycle and renumbers vertices by first
/// appearance along the contour.
pub fn contract_rightmost(lt: &Looptree) -> Looptree {
    let n = lt.vertex_count();
    let mut uf: Vec<usize> = (0..n).collect();
    fn find(uf: &mut [usize], mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    for i in 0..lt.edge_count() {
        if lt.edge_pos(i) + 1 == lt.cycle_len(lt.edge_cycle(i)) {
            let (a, b) = lt.edge(i);
            let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
            uf[ra] = rb;
        }
    }
    let mut id = vec![NONE; n];
    let mut next = 0;
    let mut corner_vertex = Vec::new();
    let mut edge_cycle = Vec::new();
    let mut edge_pos = Vec::new();
    let mut push_corner = |v: usize, uf: &mut Vec<usize>, out: &mut Vec<usize>| {
        let r = find(uf, v);
        if id[r] == NONE {
            id[r] = next;
            next += 1;
        }
        out.push(id[r]);
    };
    push_corner(lt.corner_vertex(0), &mut uf, &mut corner_vertex);
    for i in 0..lt.edge_count() {
        let c = lt.edge_cycle(i);
        if lt.edge_pos(i) + 1 == lt.cycle_len(c) {
            continue;
        }
        edge_cycle.push(c);
        edge_pos.push(lt.edge_pos(i));
        push_corner(lt.corner_vertex(i + 1), &mut uf, &mut corner_vertex);
    }
    Looptree::from_contour(corner_vertex, edge_cycle, edge_pos)
}

/// How `reduced_tree` samples its vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexSampling {
    /// Uniform among the looptree vertices, i.e. the leaves of the tree.
    LooptreeVertices,
    /// Uniform among all non-root tree vertices.
    TreeVertices,
}

/// Subtree spanned by sampled vertices, with unary chains merged into single
/// edges whose length is the height difference. The root is kept (planted).
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTree {
    pub parent: Vec<usize>,
    pub length: Vec<f64>,
    pub tree_vertex: Vec<usize>,
    pub sampled: Vec<usize>,
}

impl ReducedTree {
    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn child_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.parent.len()];
        for &p in &self.parent {
            if p != NONE {
                c[p] += 1;
            }
        }
        c
    }

    pub fn leaf_count(&self) -> usize {
        self.child_counts().iter().enumerate().filter(|&(v, &c)| c == 0 && v != 0).count()
    }

    pub fn total_length(&self) -> f64 {
        self.length.iter().sum()
    }
}

/// Reduced tree of `q` i.i.d. uniform vertices.
pub fn reduced_tree<R: Rng + ?Sized>(
    forest: &PlaneForest,
    q: usize,
    sampling: VertexSampling,
    rng: &mut R,
) -> ReducedTree {
    let pool: Vec<usize> = match sampling {
        VertexSampling::LooptreeVertices => {
            (1..forest.vertex_count()).filter(|&v| forest.num_children(v) == 0).collect()
        }
        VertexSampling::TreeVertices => (1..forest.vertex_count()).collect(),
    };
    let sampled: Vec<usize> = (0..q).map(|_| pool[rng.random_range(0..pool.len())]).collect();
    reduced_tree_of(forest, &sampled)
}

/// Reduced tree spanned by the given vertices.
pub fn reduced_tree_of(forest: &PlaneForest, sampled: &[usize]) -> ReducedTree {
    let n = forest.vertex_count();
    let heights = forest.heights();
    let mut spanned_children = vec![0usize; n];
    let mut in_span = vec![false; n];
    in_span[0] = true;
    for &v in sampled {
        let mut cur = v;
        while !in_span[cur] {
            in_span[cur] = true;
            let p = forest.parent[cur];
            spanned_children[p] += 1;
            cur = p;
        }
    }
    let keep = |v: usize| v == 0 || (in_span[v] && spanned_children[v] != 1);
    let mut node_of = vec![NONE; n];
    let mut tree = ReducedTree { parent: Vec::new(), length: Vec::new(), tree_vertex: Vec::new(), sampled: sampled.to_vec() };
    // Depth-first numbering guarantees ancestors come first.
    for v in 0..n {
        if !in_span[v] || !keep(v) {
            continue;
        }
        node_of[v] = tree.parent.len();
        tree.tree_vertex.push(v);
        if v == 0 {
            tree.parent.push(NONE);
            tree.length.push(0.0);
            continue;
        }
        let mut a = forest.parent[v];
        while !keep(a) {
            a = forest.parent[a];
        }
        tree.parent.push(node_of[a]);
        tree.length.push((heights[v] - heights[a]) as f64);
    }
    tree
}
