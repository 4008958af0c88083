//! Limit objects: exchangeable-increment bridges, their Vervaat transforms,
//! continuum looptree distances and Gaussian labels.
//!
//! Paths are piecewise linear and càdlàg, given by knots `(t_k, X_{t_k-},
//! X_{t_k})`. Knots are the grid points `k / G` together with the exact jump
//! times, so every functional below is computed exactly for the stored path;
//! the only approximations are the grid and the truncation of the jump series.

use rand::Rng;
use rand::distr::Open01;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::degseq::ThetaParams;
use crate::error::{Error, Result};
use crate::lukapath::LukaPath;
use crate::mmspace::GridFunction;
use crate::rmq::SparseMin;
use crate::rng;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CadlagPath {
    times: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    /// Number of grid intervals used to sample the Gaussian part.
    pub grid_size: usize,
    /// `sum theta_i^2` over the jumps dropped by the truncation.
    pub dropped_l2: f64,
}

impl CadlagPath {
    /// Path from its knots. `left[0]` is `X_{0-}`, normally 0.
    pub fn from_knots(times: Vec<f64>, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        let k = times.len();
        if k < 2 || left.len() != k || right.len() != k {
            return Err(Error::LengthMismatch);
        }
        if times[0] != 0.0 || times[k - 1] != 1.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParams("knot times must increase from 0 to 1".into()));
        }
        if left.iter().zip(&right).any(|(l, r)| !(r >= l)) {
            return Err(Error::InvalidParams("negative jump".into()));
        }
        Ok(CadlagPath { times, left, right, grid_size: k - 1, dropped_l2: 0.0 })
    }

    /// Càdlàg version of a Łukasiewicz path on `[0, 1]`, time `i` sent to
    /// `i / E`, space unscaled.
    pub fn from_luka(path: &LukaPath) -> Self {
        let e = path.len();
        let times = (0..=e).map(|i| i as f64 / e as f64).collect();
        let left = (0..=e).map(|i| path.left(i) as f64).collect();
        let right = (0..=e).map(|i| path.value(i) as f64).collect();
        CadlagPath { times, left, right, grid_size: e, dropped_l2: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `X_{t_k -}`.
    pub fn left(&self, k: usize) -> f64 {
        self.left[k]
    }

    /// `X_{t_k}`.
    pub fn right(&self, k: usize) -> f64 {
        self.right[k]
    }

    pub fn jump(&self, k: usize) -> f64 {
        self.right[k] - self.left[k]
    }

    /// Last knot at or before `t`.
    pub fn knot_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// `X_t`.
    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.knot_at(t);
        if k + 1 == self.len() || t == self.times[k] {
            return self.right[k];
        }
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        self.right[k] + w * (self.left[k + 1] - self.right[k])
    }

    /// Same path with space multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        CadlagPath {
            left: self.left.iter().map(|x| x * c).collect(),
            right: self.right.iter().map(|x| x * c).collect(),
            ..self.clone()
        }
    }

    /// `inf X` over `[0, 1]`.
    fn infimum(&self) -> f64 {
        self.left[1..].iter().copied().fold(self.right[0], f64::min)
    }

    /// Smallest value of `X` on the open interval `(0, 1)` at knot resolution.
    pub fn interior_min(&self) -> f64 {
        let k = self.len();
        let mut m = f64::INFINITY;
        for i in 1..k - 1 {
            m = m.min(self.left[i]).min(self.right[i]);
        }
        m
    }

    fn insert_knot(&mut self, k: usize, t: f64, x: f64) {
        self.times.insert(k, t);
        self.left.insert(k, x);
        self.right.insert(k, x);
    }
}

fn brownian_bridge<R: Rng + ?Sized>(g: usize, rng: &mut R) -> Vec<f64> {
    let sd = (1.0 / g as f64).sqrt();
    let mut w = vec![0.0; g + 1];
    for k in 1..=g {
        let z: f64 = rng.sample(StandardNormal);
        w[k] = w[k - 1] + sd * z;
    }
    let end = w[g];
    for (k, x) in w.iter_mut().enumerate() {
        *x -= k as f64 / g as f64 * end;
    }
    w[g] = 0.0;
    w
}

/// `Y_t = rho (1 - t) + theta0 b_t + sum_{i <= jmax} theta_i (1{U_i <= t} - t)`
/// with a grid Brownian bridge `b` (linearly interpolated at jump times) and
/// exact uniform jump times.
pub fn sample_ei_bridge(params: &ThetaParams, grid: usize, jmax: usize, seed: u64) -> Result<CadlagPath> {
    if grid == 0 {
        return Err(Error::InvalidParams("grid must be positive".into()));
    }
    let mut r = rng::stream(seed, 0);
    let b = brownian_bridge(grid, &mut r);
    let kept = &params.thetas[..jmax.min(params.thetas.len())];
    let dropped_l2 = params.thetas[kept.len()..].iter().map(|t| t * t).sum();
    let mut jumps: Vec<(f64, f64)> = kept
        .iter()
        .map(|&th| (r.sample(Open01), th))
        .filter(|&(_, th)| th > 0.0)
        .collect();
    jumps.sort_by(|x, y| x.0.total_cmp(&y.0));
    let total: f64 = kept.iter().sum();

    let mut times = Vec::with_capacity(grid + 1 + jumps.len());
    let mut left = Vec::with_capacity(times.capacity());
    let mut right = Vec::with_capacity(times.capacity());
    let mut acc = 0.0;
    let mut ji = 0;
    let value = |t: f64, bt: f64, acc: f64| params.rho * (1.0 - t) + params.theta0 * bt + acc - total * t;
    for k in 0..=grid {
        let tk = k as f64 / grid as f64;
        while ji < jumps.len() && jumps[ji].0 < tk {
            let (u, th) = jumps[ji];
            let pos = u * grid as f64;
            let i = (pos.floor() as usize).min(grid - 1);
            let w = pos - i as f64;
            let bu = b[i] + w * (b[i + 1] - b[i]);
            let before = value(u, bu, acc);
            acc += th;
            times.push(u);
            left.push(before);
            right.push(before + th);
            ji += 1;
        }
        let mut jump_here = 0.0;
        while ji < jumps.len() && jumps[ji].0 == tk {
            jump_here += jumps[ji].1;
            ji += 1;
        }
        let before = value(tk, b[k], acc);
        acc += jump_here;
        times.push(tk);
        left.push(before);
        right.push(before + jump_here);
    }
    let n = times.len();
    left[0] = 0.0;
    right[0] = params.rho;
    left[n - 1] = 0.0;
    right[n - 1] = 0.0;
    Ok(CadlagPath { times, left, right, grid_size: grid, dropped_l2 })
}

/// Rotation `theta_r` at knot `kr`: swaps `[0, t_r)` and `[t_r, 1]`, adds the
/// jump at `t_r` to the start and keeps the endpoint value.
fn rotate(y: &CadlagPath, kr: usize) -> CadlagPath {
    let k = y.len();
    let (tr, yr, y0, y1) = (y.times[kr], y.left[kr], y.right[0], y.right[k - 1]);
    let mut times = Vec::with_capacity(k + 1);
    let mut left = Vec::with_capacity(k + 1);
    let mut right = Vec::with_capacity(k + 1);
    for i in kr..k {
        times.push(y.times[i] - tr);
        left.push(y.left[i] - yr + y0);
        right.push(y.right[i] - yr + y0);
    }
    left[0] = 0.0;
    if kr > 0 {
        *right.last_mut().unwrap() = y.right[0] - yr + y1;
        for i in 1..=kr {
            times.push(y.times[i] + 1.0 - tr);
            left.push(y.left[i] - yr + y1);
            right.push(y.right[i] - yr + y1);
        }
    }
    let n = times.len();
    times[n - 1] = 1.0;
    left[n - 1] = y1;
    right[n - 1] = y1;
    CadlagPath { times, left, right, grid_size: y.grid_size, dropped_l2: y.dropped_l2 }
}

/// Vervaat transform at height `u`: rotation at the first time `I_u` with
/// `Y_{I_u -} = u + inf Y`. A knot is inserted at `I_u` when it falls inside
/// a segment.
pub fn vervaat_at(y: &CadlagPath, u: f64) -> CadlagPath {
    let level = u + y.infimum();
    if y.left[0] == level {
        return rotate(y, 0);
    }
    let mut y = y.clone();
    for k in 0..y.len() - 1 {
        let (a, b) = (y.right[k], y.left[k + 1]);
        if b <= level {
            if b == level || a <= b {
                return rotate(&y, k + 1);
            }
            let t = y.times[k] + (a - level) / (a - b) * (y.times[k + 1] - y.times[k]);
            if t <= y.times[k] {
                return rotate(&y, k);
            }
            y.insert_knot(k + 1, t, level);
            return rotate(&y, k + 1);
        }
    }
    rotate(&y, y.len() - 1)
}

/// `V_U Y` with `U` uniform on `[0, rho]`. When `rho = 0` the rotation is at
/// the earliest knot realising the minimum of the left limits.
pub fn vervaat_continuum(y: &CadlagPath, seed: u64) -> CadlagPath {
    let rho = y.right[0];
    if rho <= 0.0 {
        let mut kr = 0;
        for k in 1..y.len() {
            if y.left[k] < y.left[kr] {
                kr = k;
            }
        }
        return rotate(y, kr);
    }
    let u = rng::stream(seed, 1).random::<f64>() * rho;
    vervaat_at(y, u)
}

/// Vervaat transform of [`sample_ei_bridge`].
pub fn sample_excursion(params: &ThetaParams, grid: usize, jmax: usize, seed: u64) -> Result<CadlagPath> {
    Ok(vervaat_continuum(&sample_ei_bridge(params, grid, jmax, seed)?, seed))
}

/// Ancestral structure of a path: `s < t` with `X_{s-} <= inf_{[s,t]} X`.
///
/// Precomputes the nearest jumping strict ancestor of every knot, the jump
/// part `J` and the continuous part `C = X_{.-} - J` at every knot.
#[derive(Debug, Clone)]
pub struct LoopMetric<'a> {
    path: &'a CadlagPath,
    left_rmq: SparseMin<f64>,
    jump_parent: Vec<usize>,
    c: Vec<f64>,
    c_fn: GridFunction,
}

impl<'a> LoopMetric<'a> {
    pub fn new(path: &'a CadlagPath) -> Self {
        let k = path.len();
        let left_rmq = SparseMin::new(&path.left);
        let mut jump_parent = vec![NONE; k];
        let mut c = vec![0.0; k];
        // Stack of ancestors with the sum of R over the entries below each.
        let mut stack: Vec<(usize, f64)> = Vec::new();
        for j in 0..k {
            if j > 0 {
                let p = j - 1;
                let below = match stack.last() {
                    Some(&(q, s)) => s + r_value(path, q, path.left[p]),
                    None => 0.0,
                };
                stack.push((p, below));
                while stack.last().is_some_and(|&(q, _)| path.left[q] > path.left[j]) {
                    stack.pop();
                }
            }
            let jsum = match stack.last() {
                Some(&(q, s)) => s + r_value(path, q, path.left[j]),
                None => 0.0,
            };
            c[j] = (path.left[j] - jsum).max(0.0);
            if let Some(&(q, _)) = stack.last() {
                jump_parent[j] = if path.jump(q) > 0.0 { q } else { jump_parent[q] };
            }
        }
        let c_fn = GridFunction::new(c.clone());
        LoopMetric { path, left_rmq, jump_parent, c, c_fn }
    }

    pub fn path(&self) -> &CadlagPath {
        self.path
    }

    /// `C` at every knot.
    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// `J_t = X_{t-} - C_t`.
    pub fn j(&self, k: usize) -> f64 {
        self.path.left[k] - self.c[k]
    }

    /// `R^t_p` for an ancestor `p` of knot `t` (`p < t`).
    pub fn r(&self, p: usize, t: usize) -> f64 {
        r_value(self.path, p, self.left_rmq.min(p + 1, t))
    }

    /// Jumping strict ancestors of `t` with their `R` values, nearest first.
    pub fn jump_ancestors(&self, t: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let mut p = self.jump_parent[t];
        while p != NONE {
            out.push((p, self.r(p, t)));
            p = self.jump_parent[p];
        }
        out
    }

    /// `C^delta_t = X_{t-} - sum of R^t_p over ancestors with jump > delta`.
    pub fn continuous_part(&self, t: usize, delta: f64) -> f64 {
        let big: f64 = self.jump_ancestors(t).iter().filter(|&&(p, _)| self.path.jump(p) > delta).map(|&(_, r)| r).sum();
        self.path.left[t] - big
    }

    /// Last common ancestor `s ∧ t` (which may be `s` or `t` itself).
    pub fn common_ancestor(&self, s: usize, t: usize) -> usize {
        let (s, t) = (s.min(t), s.max(t));
        if s == t {
            return s;
        }
        let m = self.left_rmq.min(s + 1, t);
        if self.path.left[s] <= m {
            return s;
        }
        self.left_rmq.last_at_most(s - 1, m).expect("knot 0 is a common ancestor")
    }

    fn climb(&self, x: usize, w: usize) -> f64 {
        let mut sum = 0.0;
        let mut p = self.jump_parent[x];
        while p != NONE && p > w {
            sum += cycle_delta(self.path.jump(p), 0.0, self.r(p, x));
            p = self.jump_parent[p];
        }
        sum
    }

    /// `d^0_Loop(s, t)` between two knots.
    pub fn distance0(&self, s: usize, t: usize) -> f64 {
        let (s, t) = (s.min(t), s.max(t));
        if s == t {
            return 0.0;
        }
        let w = self.common_ancestor(s, t);
        let rs = if w == s { 0.0 } else { self.r(w, s) };
        let rt = self.r(w, t);
        cycle_delta(self.path.jump(w), rs, rt) + self.climb(s, w) + self.climb(t, w)
    }

    /// `d_C(s, t)`, the tree pseudo-distance coded by `C`.
    pub fn tree_distance(&self, s: usize, t: usize) -> f64 {
        self.c_fn.linear(s, t)
    }

    /// `d^a_Loop(s, t) = d^0_Loop(s, t) + a d_C(s, t)`.
    pub fn distance(&self, a: f64, s: usize, t: usize) -> f64 {
        self.distance0(s, t) + a * self.tree_distance(s, t)
    }
}

fn r_value(path: &CadlagPath, p: usize, inf_after: f64) -> f64 {
    (path.right[p].min(inf_after) - path.left[p]).max(0.0)
}

/// `delta(a, b) = min(|a - b|, k - |a - b|)` on a cycle of length `k`.
pub fn cycle_delta(k: f64, a: f64, b: f64) -> f64 {
    if k <= 0.0 {
        return 0.0;
    }
    let d = (a - b).abs();
    d.min(k - d).max(0.0)
}

/// `d^a_Loop(s, t)` between knots `s` and `t`.
pub fn loop_distance_continuum(path: &CadlagPath, a: f64, s: usize, t: usize) -> f64 {
    LoopMetric::new(path).distance(a, s, t)
}

/// `C^delta` at knot `t`.
pub fn continuous_part(path: &CadlagPath, t: usize, delta: f64) -> f64 {
    LoopMetric::new(path).continuous_part(t, delta)
}

/// `C^delta_t` for a decreasing ladder of `delta` values, ending with the
/// exact `C_t` (the limit `delta -> 0`).
pub fn continuous_part_ladder(path: &CadlagPath, t: usize, deltas: &[f64]) -> (Vec<f64>, f64) {
    let m = LoopMetric::new(path);
    (deltas.iter().map(|&d| m.continuous_part(t, d)).collect(), m.c()[t])
}

/// Centred Gaussian vector with `E[Z_s Z_t] = min_{[s,t]} g`, sampled along
/// the tree coded by `g`.
pub fn snake_sample<R: Rng + ?Sized>(g: &[f64], rng: &mut R) -> Vec<f64> {
    // Lineage of the current index: (height, value) with increasing heights.
    let mut line: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    let mut out = Vec::with_capacity(g.len());
    let mut prev = 0.0f64;
    for (k, &h) in g.iter().enumerate() {
        let m = if k == 0 { 0.0f64.min(h) } else { prev.min(h) };
        let mut above = None;
        while line.last().is_some_and(|&(x, _)| x > m) {
            above = line.pop();
        }
        let &(h1, v1) = line.last().unwrap();
        if let Some((h2, v2)) = above {
            if m > h1 {
                let w = (m - h1) / (h2 - h1);
                let sd = ((m - h1) * (h2 - m) / (h2 - h1)).sqrt();
                let z: f64 = rng.sample(StandardNormal);
                line.push((m, v1 + w * (v2 - v1) + sd * z));
            }
        }
        let &(hb, vb) = line.last().unwrap();
        let z: f64 = rng.sample(StandardNormal);
        let v = vb + (h - hb).max(0.0).sqrt() * z;
        if h > hb {
            line.push((h, v));
        }
        out.push(v);
        prev = h;
    }
    out
}

/// Sample of `Z^a` at some knots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianLabelField {
    pub a: f64,
    pub knots: Vec<usize>,
    /// `Z^C` at the requested knots.
    pub snake: Vec<f64>,
    /// `Z^a = sqrt(a) Z^C + cycle bridges`.
    pub values: Vec<f64>,
}

/// Brownian bridge on `[0, 1]` sampled jointly at sorted positions.
fn bridge_at<R: Rng + ?Sized>(xs: &[f64], rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let (mut x0, mut b0) = (0.0f64, 0.0f64);
    for &x in xs {
        // Given b(x0) = b0 and b(1) = 0.
        let (span, dx) = (1.0 - x0, x - x0);
        let val = if span <= 0.0 || dx <= 0.0 {
            b0
        } else {
            let mean = b0 * (1.0 - dx / span);
            let var = dx * (span - dx) / span;
            let z: f64 = rng.sample(StandardNormal);
            mean + var.max(0.0).sqrt() * z
        };
        out.push(val);
        x0 = x;
        b0 = val;
    }
    out
}

/// Joint sample of `Z^a` at the given knots: `sqrt(a)` times a snake driven
/// by `C` plus, for every jumping ancestor `p`, an independent bridge
/// `sqrt(dX_p) b_p(R^t_p / dX_p)`.
pub fn snake_labels(path: &CadlagPath, a: f64, knots: &[usize], seed: u64) -> GaussianLabelField {
    let m = LoopMetric::new(path);
    let mut r = rng::stream(seed, 2);
    let full = snake_sample(m.c(), &mut r);
    let snake: Vec<f64> = knots.iter().map(|&k| full[k]).collect();
    let mut values: Vec<f64> = snake.iter().map(|z| a.sqrt() * z).collect();
    let mut by_jump: std::collections::BTreeMap<usize, Vec<(f64, usize)>> = Default::default();
    for (q, &t) in knots.iter().enumerate() {
        for (p, rv) in m.jump_ancestors(t) {
            by_jump.entry(p).or_default().push((rv / path.jump(p), q));
        }
    }
    for (p, mut list) in by_jump {
        list.sort_by(|x, y| x.0.total_cmp(&y.0));
        let xs: Vec<f64> = list.iter().map(|&(x, _)| x).collect();
        let b = bridge_at(&xs, &mut rng::stream(seed, 3 + p as u64));
        let s = path.jump(p).sqrt();
        for ((_, q), v) in list.iter().zip(b) {
            values[*q] += s * v;
        }
    }
    GaussianLabelField { a, knots: knots.to_vec(), snake, values }
}

/// `Z^a_t` at a single knot, using the Gaussian marginals directly.
pub fn label_at<R: Rng + ?Sized>(path: &CadlagPath, a: f64, t: usize, rng: &mut R) -> f64 {
    let m = LoopMetric::new(path);
    let mut z: f64 = rng.sample::<f64, _>(StandardNormal) * (a * m.c()[t]).sqrt();
    for (p, rv) in m.jump_ancestors(t) {
        let d = path.jump(p);
        let var = rv * (d - rv) / d;
        z += rng.sample::<f64, _>(StandardNormal) * var.max(0.0).sqrt();
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::loopforge::DistanceOracle;
    use crate::testutil::random_excursion;
    use proptest::prelude::*;

    fn bm() -> ThetaParams {
        ThetaParams::new(1.0, vec![], 0.0).unwrap()
    }

    fn one_jump() -> ThetaParams {
        ThetaParams::new(0.0, vec![1.0], 0.0).unwrap()
    }

    fn mixed() -> ThetaParams {
        let th = vec![0.6, 0.4, 0.3, 0.2];
        let s: f64 = th.iter().map(|t| t * t).sum();
        ThetaParams::new((1.0 - s).sqrt(), th, 0.5).unwrap()
    }

    #[test]
    fn bridge_endpoints_and_variance() {
        let reps = 4000;
        let mut sq = [0.0; 3];
        for s in 0..reps {
            let y = sample_ei_bridge(&bm(), 64, 0, s).unwrap();
            assert_eq!(y.right(0), 0.0);
            assert_eq!(y.right(y.len() - 1), 0.0);
            for (i, t) in [0.25, 0.5, 0.75].iter().enumerate() {
                sq[i] += y.value_at(*t).powi(2);
            }
        }
        for (i, t) in [0.25f64, 0.5, 0.75].iter().enumerate() {
            let v = sq[i] / reps as f64;
            let target = t * (1.0 - t);
            // The sd of a squared normal is sqrt(2) times its variance.
            assert!((v - target).abs() < 4.0 * 2f64.sqrt() * target / (reps as f64).sqrt(), "{t}: {v}");
        }
    }

    #[test]
    fn single_jump_bridge() {
        let y = sample_ei_bridge(&one_jump(), 16, 5, 3).unwrap();
        let u = (0..y.len()).find(|&k| y.jump(k) > 0.0).unwrap();
        let u_t = y.time(u);
        for k in 0..y.len() {
            let t = y.time(k);
            let expect = if t >= u_t { 1.0 - t } else { -t };
            assert!((y.right(k) - expect).abs() < 1e-12);
        }
        let x = vervaat_continuum(&y, 3);
        // The rotation at the jump gives 1 - t.
        for k in 0..x.len() {
            assert!((x.right(k) - (1.0 - x.time(k))).abs() < 1e-12);
        }
        let m = LoopMetric::new(&x);
        for s in 0..x.len() {
            for t in 0..x.len() {
                let d = (x.time(s) - x.time(t)).abs();
                assert!((m.distance(1.0, s, t) - d.min(1.0 - d)).abs() < 1e-12);
            }
            assert!(m.c()[s].abs() < 1e-12);
        }
    }

    #[test]
    fn pure_drift() {
        let p = ThetaParams { theta0: 0.0, thetas: vec![], rho: 1.0, a: 0.0, sigma2_label: 1.0 };
        let y = sample_ei_bridge(&p, 10, 0, 0).unwrap();
        for k in 0..y.len() {
            assert!((y.right(k) - (1.0 - y.time(k))).abs() < 1e-12);
        }
    }

    #[test]
    fn vervaat_identity_and_positivity() {
        let y = CadlagPath::from_knots(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(vervaat_continuum(&y, 0), y);
        for s in 0..20 {
            let x = sample_excursion(&bm(), 256, 0, s).unwrap();
            assert_eq!(x.right(x.len() - 1), 0.0);
            assert!(x.interior_min() > 0.0);
            let x = sample_excursion(&mixed(), 256, 10, s).unwrap();
            assert_eq!(x.right(x.len() - 1), 0.0);
            assert!(x.interior_min() > -1e-12);
            assert!(x.right(0) >= 0.5 - 1e-12);
        }
    }

    #[test]
    fn brownian_c_is_x() {
        let x = sample_excursion(&bm(), 128, 0, 9).unwrap();
        let m = LoopMetric::new(&x);
        for k in 0..x.len() {
            assert!((m.c()[k] - x.left(k)).abs() < 1e-12);
            assert!(m.j(k).abs() < 1e-12);
        }
        assert_eq!(continuous_part(&x, 0, 0.1), 0.0);
    }

    #[test]
    fn pure_jump_has_no_continuous_part() {
        let th = vec![0.5; 4];
        let p = ThetaParams::new(0.0, th, 0.0).unwrap();
        let x = sample_excursion(&p, 64, 4, 1).unwrap();
        let m = LoopMetric::new(&x);
        assert!(m.c().iter().all(|c| c.abs() < 1e-9));
        let (ladder, c) = continuous_part_ladder(&x, x.len() / 2, &[0.6, 0.1, 0.0]);
        assert!(ladder[2].abs() < 1e-9 && c.abs() < 1e-9);
        assert!(ladder[0] >= ladder[1]);
    }

    #[test]
    fn snake_constant_driver() {
        let mut r = rng::rng(1);
        let z = snake_sample(&[2.0; 6], &mut r);
        assert!(z.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn snake_covariance() {
        let g = [0.3, 1.0, 0.5, 0.8, 0.2];
        let mut r = rng::rng(7);
        let n = 40_000;
        let mut prod = [[0.0; 5]; 5];
        for _ in 0..n {
            let z = snake_sample(&g, &mut r);
            for i in 0..5 {
                for j in 0..5 {
                    prod[i][j] += z[i] * z[j];
                }
            }
        }
        for i in 0..5 {
            for j in i..5 {
                let target = g[i..=j].iter().copied().fold(f64::INFINITY, f64::min);
                let est = prod[i][j] / n as f64;
                let se = (g[i] * g[j] + target * target).sqrt() / (n as f64).sqrt();
                assert!((est - target).abs() < 4.0 * se, "({i},{j}) {est} vs {target}");
            }
        }
    }

    #[test]
    fn single_cycle_label_variance() {
        let x = CadlagPath::from_knots(vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 0.0], vec![1.0, 0.5, 0.0]).unwrap();
        let n = 40_000;
        let mut sq = 0.0;
        for s in 0..n {
            let f = snake_labels(&x, 1.0, &[1], s);
            sq += f.values[0].powi(2);
        }
        let v = sq / n as f64;
        assert!((v - 0.25).abs() < 4.0 * 0.25 * 2f64.sqrt() / (n as f64).sqrt(), "{v}");
    }

    #[test]
    fn matches_discrete_distance() {
        for seed in 0..30 {
            let p = random_excursion(80, seed);
            let x = CadlagPath::from_luka(&p);
            let m = LoopMetric::new(&x);
            let o = DistanceOracle::new(&p).unwrap();
            for s in 0..p.len() {
                for t in 0..p.len() {
                    assert!((m.distance(0.5, s, t) - o.distance(s, t).unwrap() as f64).abs() < 1e-9);
                }
                assert!(m.c()[s].abs() < 1e-9);
            }
        }
    }

    /// `d^0` straight from the definitions, in `O(K)` per pair.
    fn brute_distance0(x: &CadlagPath, s: usize, t: usize) -> f64 {
        let (s, t) = (s.min(t), s.max(t));
        let inf = |p: usize, q: usize| (p + 1..=q).map(|i| x.left(i)).fold(x.right(p), f64::min);
        let anc = |p: usize, q: usize| p == q || (p < q && x.left(p) <= inf(p, q));
        let r = |p: usize, q: usize| if p == q { 0.0 } else { inf(p, q) - x.left(p) };
        let w = (0..=s).rev().find(|&p| anc(p, s) && anc(p, t)).unwrap();
        let mut d = cycle_delta(x.jump(w), r(w, s), r(w, t));
        for q in [s, t] {
            for p in w + 1..q {
                if anc(p, q) {
                    d += cycle_delta(x.jump(p), 0.0, r(p, q));
                }
            }
        }
        d
    }

    #[test]
    fn distance_matches_definition() {
        for seed in [8586712300731785987u64, 1, 2, 3] {
            let x = sample_excursion(&mixed(), 32, 4, seed).unwrap();
            let m = LoopMetric::new(&x);
            for s in 0..x.len() {
                for t in 0..x.len() {
                    let (a, b) = (m.distance0(s, t), brute_distance0(&x, s, t));
                    assert!((a - b).abs() < 1e-9, "seed {seed} ({s},{t}): {a} vs {b}");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn loop_metric_properties(seed in any::<u64>(), a in 0.0f64..2.0) {
            let x = sample_excursion(&mixed(), 64, 4, seed).unwrap();
            let m = LoopMetric::new(&x);
            let k = x.len();
            let mut r = rng::rng(seed);
            for _ in 0..200 {
                let (s, t, u) = (r.random_range(0..k), r.random_range(0..k), r.random_range(0..k));
                let d = m.distance(a, s, t);
                prop_assert!(d >= 0.0);
                prop_assert!((d - m.distance(a, t, s)).abs() < 1e-12);
                prop_assert!(d <= m.distance(a, s, u) + m.distance(a, u, t) + 1e-9);
                let (lo, hi) = (s.min(t), s.max(t));
                if lo == hi {
                    continue;
                }
                let inf = (lo + 1..=hi).map(|i| x.left(i)).fold(x.right(lo), f64::min);
                let bound = x.right(lo) + x.left(hi) - 2.0 * inf;
                prop_assert!(m.distance(1.0, lo, hi) <= bound + 1e-9);
            }
            prop_assert_eq!(m.distance(a, 3, 3), 0.0);
            for t in 0..k {
                prop_assert!((m.j(t) + m.c()[t] - x.left(t)).abs() < 1e-9);
                prop_assert!(m.c()[t] >= -1e-12);
            }
        }
    }

    #[test]
    fn label_second_moment_bound() {
        let x = sample_excursion(&mixed(), 64, 4, 11).unwrap();
        let m = LoopMetric::new(&x);
        let knots: Vec<usize> = (0..x.len()).step_by(7).collect();
        let n = 4000;
        let mut sq = vec![0.0; knots.len()];
        for s in 0..n {
            let f = snake_labels(&x, 0.5, &knots, s);
            for (i, v) in f.values.iter().enumerate() {
                sq[i] += v * v;
            }
        }
        for (i, &t) in knots.iter().enumerate() {
            let bound = m.distance(0.5, 0, t);
            let v = sq[i] / n as f64;
            assert!(v <= bound + 4.0 * 2f64.sqrt() * bound / (n as f64).sqrt() + 1e-12, "t {t}: {v} > {bound}");
        }
    }
}
