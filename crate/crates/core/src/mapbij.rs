//! Pointed bipartite maps and their bijection with labelled looptrees.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::labels::{self, Labelling};
use crate::loopforge::{self, Looptree};
use crate::lukapath::LukaPath;
use crate::mmspace;

const NONE: usize = usize::MAX;

/// Plane map stored as half-edges with an involution `twin` and the rotation
/// `next` around each vertex. Faces are the orbits of `h -> twin(next(h))`.
///
/// Vertices are numbered by the smallest half-edge of their rotation orbit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteMap {
    twin: Vec<usize>,
    next: Vec<usize>,
    prev: Vec<usize>,
    vertex_of: Vec<usize>,
    vertex_count: usize,
    root: usize,
    vstar: Option<usize>,
}

impl BipartiteMap {
    /// Checks that `twin` is a fixed-point-free involution, `next` a
    /// permutation, and that the map is connected.
    pub fn new(twin: Vec<usize>, next: Vec<usize>, root: usize, vstar: Option<usize>) -> Result<Self> {
        let n = twin.len();
        if n == 0 || n % 2 == 1 || next.len() != n {
            return Err(Error::InvalidMap("half-edge count must be even and positive".into()));
        }
        if root >= n {
            return Err(Error::InvalidMap("root out of range".into()));
        }
        for (h, &t) in twin.iter().enumerate() {
            if t >= n || t == h || twin[t] != h {
                return Err(Error::InvalidMap(format!("twin is not an involution at {h}")));
            }
        }
        let mut prev = vec![NONE; n];
        for (h, &s) in next.iter().enumerate() {
            if s >= n || prev[s] != NONE {
                return Err(Error::InvalidMap(format!("next is not a permutation at {h}")));
            }
            prev[s] = h;
        }
        let mut vertex_of = vec![NONE; n];
        let mut vertex_count = 0;
        for h in 0..n {
            if vertex_of[h] == NONE {
                let mut g = h;
                while vertex_of[g] == NONE {
                    vertex_of[g] = vertex_count;
                    g = next[g];
                }
                vertex_count += 1;
            }
        }
        if let Some(v) = vstar {
            if v >= vertex_count {
                return Err(Error::InvalidMap("distinguished vertex out of range".into()));
            }
        }
        let map = BipartiteMap { twin, next, prev, vertex_of, vertex_count, root, vstar };
        if map.bfs_from(0).contains(&NONE) {
            return Err(Error::InvalidMap("map is not connected".into()));
        }
        Ok(map)
    }

    pub fn half_edge_count(&self) -> usize {
        self.twin.len()
    }

    pub fn edge_count(&self) -> usize {
        self.twin.len() / 2
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn twin(&self, h: usize) -> usize {
        self.twin[h]
    }

    pub fn next(&self, h: usize) -> usize {
        self.next[h]
    }

    pub fn prev(&self, h: usize) -> usize {
        self.prev[h]
    }

    /// Vertex at the origin of half-edge `h`.
    pub fn vertex_of(&self, h: usize) -> usize {
        self.vertex_of[h]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn vstar(&self) -> Option<usize> {
        self.vstar
    }

    /// Face containing each half-edge, and the number of faces.
    pub fn face_of(&self) -> (Vec<usize>, usize) {
        let n = self.twin.len();
        let mut face = vec![NONE; n];
        let mut count = 0;
        for h in 0..n {
            if face[h] == NONE {
                let mut g = h;
                while face[g] == NONE {
                    face[g] = count;
                    g = self.twin[self.next[g]];
                }
                count += 1;
            }
        }
        (face, count)
    }

    pub fn face_degrees(&self) -> Vec<usize> {
        let (face, count) = self.face_of();
        let mut deg = vec![0; count];
        for f in face {
            deg[f] += 1;
        }
        deg
    }

    pub fn face_count(&self) -> usize {
        self.face_of().1
    }

    /// `V - E + F`, which is 2 for a plane map.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count as i64 - self.edge_count() as i64 + self.face_count() as i64
    }

    pub fn is_bipartite(&self) -> bool {
        self.face_degrees().iter().all(|d| d % 2 == 0)
    }

    /// Vertex degrees.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertex_count];
        for &v in &self.vertex_of {
            deg[v] += 1;
        }
        deg
    }

    fn bfs_from(&self, source: usize) -> Vec<usize> {
        let mut first = vec![NONE; self.vertex_count];
        for h in (0..self.twin.len()).rev() {
            first[self.vertex_of[h]] = h;
        }
        let mut dist = vec![NONE; self.vertex_count];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let start = first[v];
            let mut h = start;
            loop {
                let w = self.vertex_of[self.twin[h]];
                if dist[w] == NONE {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                h = self.next[h];
                if h == start {
                    break;
                }
            }
        }
        dist
    }
}

/// Graph distances from `source`.
pub fn bfs_distances(m: &BipartiteMap, source: usize) -> Vec<usize> {
    m.bfs_from(source)
}

/// Map labels `Z - min Z + 1` of corners `0..E`.
fn shifted_labels(z: &[i64]) -> Vec<i64> {
    let e = z.len() - 1;
    let min = *z[..e].iter().min().expect("at least one corner");
    z[..e].iter().map(|&x| x - min + 1).collect()
}

/// `succ[i]`: next corner in the periodic contour with label `l_i - 1`, or
/// `NONE` for corners with label 1, which are linked to the extra vertex.
fn successors(l: &[i64]) -> Vec<usize> {
    let e = l.len();
    let max = *l.iter().max().unwrap() as usize;
    let mut nearest = vec![NONE; max + 1];
    let mut succ = vec![NONE; e];
    for p in (0..2 * e).rev() {
        let li = l[p % e] as usize;
        if p < e && li > 1 {
            succ[p] = nearest[li - 1] % e;
        }
        nearest[li] = p;
    }
    succ
}

/// Pointed negative bipartite map of a good labelling.
///
/// Corner `i` emits the edge with half-edges `2i` (outgoing) and `2i + 1`,
/// towards the next corner with a smaller label, or towards the extra vertex
/// `v*` when its label is minimal. The root is half-edge 0.
pub fn map_from_labelled_looptree(lt: &Looptree, lab: &Labelling) -> Result<BipartiteMap> {
    lab.check_good()?;
    let z = labels::label_process(lt, lab)?;
    let e = lt.edge_count();
    let l = shifted_labels(&z);
    let succ = successors(&l);

    // Incoming edges of each corner, farthest source (backwards) first.
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); e];
    for (j, &s) in succ.iter().enumerate() {
        if s != NONE {
            incoming[s].push(j);
        }
    }
    for (i, inc) in incoming.iter_mut().enumerate() {
        inc.sort_unstable_by_key(|&j| std::cmp::Reverse((i + e - j) % e));
    }

    let mut corners_of: Vec<Vec<usize>> = vec![Vec::new(); lt.vertex_count()];
    for i in 0..e {
        corners_of[lt.corner_vertex(i)].push(i);
    }
    let mut next = vec![NONE; 2 * e];
    let mut link = |cycle: &[usize]| {
        for k in 0..cycle.len() {
            next[cycle[k]] = cycle[(k + 1) % cycle.len()];
        }
    };
    let mut rot = Vec::new();
    for corners in &corners_of {
        rot.clear();
        for &c in corners.iter().rev() {
            rot.push(2 * c);
            rot.extend(incoming[c].iter().map(|&j| 2 * j + 1));
        }
        link(&rot);
    }
    let star: Vec<usize> = (0..e).filter(|&i| l[i] == 1).map(|i| 2 * i + 1).collect();
    link(&star);
    let twin = (0..2 * e).map(|h| h ^ 1).collect();
    let mut m = BipartiteMap::new(twin, next, 0, None)?;
    m.vstar = Some(m.vertex_of(star[0]));
    Ok(m)
}

/// Inverse of [`map_from_labelled_looptree`]. A positive root is reversed
/// first; the returned flag records whether that happened.
pub fn looptree_from_pointed_map(m: &BipartiteMap) -> Result<(Looptree, Labelling, bool)> {
    let vstar = m.vstar().ok_or_else(|| Error::InvalidMap("map is not pointed".into()))?;
    let d = bfs_distances(m, vstar);
    let lab_of = |h: usize| d[m.vertex_of(h)];
    for h in 0..m.half_edge_count() {
        if lab_of(h) == lab_of(m.twin(h)) {
            return Err(Error::NotBipartite);
        }
    }
    let down = |h: usize| lab_of(m.twin(h)) < lab_of(h);
    let (mut root, mut flipped) = (m.root(), false);
    if !down(root) {
        root = m.twin(root);
        flipped = true;
    }
    if m.vertex_of(root) == vstar {
        return Err(Error::InvalidMap("root edge leaves the distinguished vertex".into()));
    }
    let e = m.edge_count();
    let mut outs = Vec::with_capacity(e);
    let mut h0 = root;
    for _ in 0..e {
        outs.push(h0);
        let mut h = m.twin(h0);
        while !down(m.next(h)) {
            h = m.twin(m.next(h));
        }
        while !down(h) {
            h = m.prev(h);
        }
        h0 = h;
    }
    if h0 != root {
        return Err(Error::InvalidMap("contour does not close".into()));
    }

    let (face, faces) = m.face_of();
    let deg = m.face_degrees();
    let mut seen = vec![false; faces];
    let mut jumps = Vec::with_capacity(e);
    for &o in &outs {
        let f = face[m.prev(o)];
        jumps.push(if seen[f] { 0 } else { deg[f] / 2 });
        seen[f] = true;
    }
    if seen.iter().filter(|&&s| s).count() != faces {
        return Err(Error::InvalidMap("faces not all reached by the contour".into()));
    }
    let start = jumps[0];
    jumps.remove(0);
    jumps.push(0);
    let path = LukaPath::new(start, jumps);
    let lt = loopforge::looptree_from_path(&path).map_err(|_| Error::InvalidMap("contour is not an excursion".into()))?;

    let z: Vec<i64> = outs.iter().chain([&root]).map(|&o| lab_of(o) as i64 - lab_of(root) as i64).collect();
    let bridges = (0..lt.cycle_count())
        .map(|c| lt.cycle_edges(c).iter().map(|&i| z[i + 1] - z[i]).collect())
        .collect();
    Ok((lt, Labelling::new(labels::BridgeLaw::Geometric, bridges), flipped))
}

/// Whether some bijection of half-edges sends `a.root()` to `b.root()` and
/// commutes with `twin` and `next`, mapping `v*` to `v*`. Such a bijection is
/// unique since the maps are connected.
pub fn rooted_isomorphic(a: &BipartiteMap, b: &BipartiteMap) -> bool {
    let n = a.half_edge_count();
    if n != b.half_edge_count() || a.vstar.is_some() != b.vstar.is_some() {
        return false;
    }
    let mut phi = vec![NONE; n];
    let mut used = vec![false; n];
    let mut stack = vec![(a.root, b.root)];
    while let Some((x, y)) = stack.pop() {
        if phi[x] != NONE {
            if phi[x] != y {
                return false;
            }
            continue;
        }
        if used[y] {
            return false;
        }
        phi[x] = y;
        used[y] = true;
        stack.push((a.twin[x], b.twin[y]));
        stack.push((a.next[x], b.next[y]));
    }
    match (a.vstar, b.vstar) {
        (Some(u), Some(v)) => {
            let h = (0..n).find(|&h| a.vertex_of[h] == u).expect("vertex has a half-edge");
            b.vertex_of[phi[h]] == v
        }
        _ => true,
    }
}

/// Distances from `v*` summarised.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProfileStats {
    /// Eccentricity of `v*`.
    pub radius: usize,
    pub max_eccentricity_from_vstar: usize,
    /// `histogram[k]`: number of vertices at distance `k >= 1` from `v*`.
    pub histogram: Vec<usize>,
    /// Distance from `v*` to the origin of the root edge.
    pub root_distance: usize,
}

pub fn profile_stats(m: &BipartiteMap, vstar: usize) -> ProfileStats {
    let d = bfs_distances(m, vstar);
    let radius = *d.iter().max().unwrap();
    let mut histogram = vec![0; radius + 1];
    for &x in &d {
        histogram[x] += 1;
    }
    histogram[0] = 0;
    ProfileStats { radius, max_eccentricity_from_vstar: radius, histogram, root_distance: d[m.vertex_of(m.root())] }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CactusReport {
    pub checked: usize,
    pub violations: usize,
    /// Largest `d - D_Z` observed; the bound asserts it is at most 2.
    pub max_excess: i64,
}

/// Checks `d(v_i, v_j) <= D_Z(i, j) + 2` for the given corner pairs, where
/// `m` was built from `(lt, lab)` so that corner `i` sits at half-edge `2i`.
pub fn cactus_bound_check(m: &BipartiteMap, lt: &Looptree, lab: &Labelling, pairs: &[(usize, usize)]) -> Result<CactusReport> {
    let z = labels::label_process(lt, lab)?;
    let e = lt.edge_count();
    let zf: Vec<f64> = z[..e].iter().map(|&x| x as f64).collect();
    let circ = mmspace::GridFunction::new(zf);
    let mut by_source: Vec<(usize, usize)> = pairs.to_vec();
    by_source.sort_unstable();
    let mut report = CactusReport { max_excess: i64::MIN, ..Default::default() };
    let mut cur = NONE;
    let mut dist = Vec::new();
    for &(i, j) in &by_source {
        if i >= e || j >= e {
            return Err(Error::OutOfRange { index: i.max(j), max: e - 1 });
        }
        if i != cur {
            dist = bfs_distances(m, m.vertex_of(2 * i));
            cur = i;
        }
        let d = dist[m.vertex_of(2 * j)] as i64;
        let bound = circ.circular(i, j).round() as i64;
        report.checked += 1;
        report.max_excess = report.max_excess.max(d - bound);
        if d > bound + 2 {
            report.violations += 1;
        }
    }
    Ok(report)
}
