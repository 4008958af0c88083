//! Finite metric measure spaces, GHP upper bounds and sample comparisons.

use std::io::{Read, Write};

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::rmq::SparseMin;
use crate::rng;

/// Largest space accepted by the dense GHP routines.
pub const DENSE_LIMIT: usize = 5000;
/// Distances below this are treated as zero by the quotient.
pub const ZERO_TOL: f64 = 1e-12;
const TRIANGLE_TOL: f64 = 1e-9;
const FULL_CHECK: usize = 200;
const SAMPLED_TRIPLES: usize = 20_000;
const MAGIC: &[u8; 8] = b"MMSPACE1";

/// Points `0..n` with a dense symmetric distance matrix and a probability
/// vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMMSpace {
    n: usize,
    dist: Vec<f64>,
    weights: Vec<f64>,
}

impl FiniteMMSpace {
    /// Validates zero diagonal, symmetry, nonnegativity, total mass 1 and the
    /// triangle inequality (every triple up to 200 points, sampled above).
    pub fn new(dist: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        if dist.len() != n * n {
            return Err(Error::LengthMismatch);
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!("weights must be a probability vector, total {total}")));
        }
        let space = FiniteMMSpace { n, dist, weights };
        space.check_pseudometric()?;
        Ok(space)
    }

    /// Space with uniform weights and distances given by `d`.
    pub fn from_fn<F: Fn(usize, usize) -> f64>(n: usize, d: F) -> Result<Self> {
        let dist = (0..n * n).map(|k| d(k / n, k % n)).collect();
        FiniteMMSpace::new(dist, vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Same space with distances multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        FiniteMMSpace { n: self.n, dist: self.dist.iter().map(|d| d * lambda).collect(), weights: self.weights.clone() }
    }

    fn check_pseudometric(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            if self.d(i, i).abs() > ZERO_TOL {
                return Err(Error::NotPseudoMetric(format!("d({i},{i}) != 0")));
            }
            for j in 0..i {
                let (a, b) = (self.d(i, j), self.d(j, i));
                if !(a >= 0.0) || (a - b).abs() > TRIANGLE_TOL {
                    return Err(Error::NotPseudoMetric(format!("asymmetric or negative at ({i},{j})")));
                }
            }
        }
        check_triangles(n, |i, j| self.d(i, j))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        for x in self.weights.iter().chain(&self.dist) {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads the binary format written by [`FiniteMMSpace::write_to`].
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let io = |e: std::io::Error| Error::Parse(e.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::Parse("bad magic".into()));
        }
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf).map_err(io)?;
        let n = u64::from_le_bytes(buf) as usize;
        if n > DENSE_LIMIT * 4 {
            return Err(Error::SizeLimit { size: n, limit: DENSE_LIMIT * 4 });
        }
        let mut vals = Vec::with_capacity(n + n * n);
        for _ in 0..n + n * n {
            r.read_exact(&mut buf).map_err(io)?;
            vals.push(f64::from_le_bytes(buf));
        }
        let dist = vals.split_off(n);
        FiniteMMSpace::new(dist, vals)
    }
}

fn check_triangles<F: Fn(usize, usize) -> f64>(n: usize, d: F) -> Result<()> {
    let bad = |i: usize, j: usize, k: usize| d(i, k) > d(i, j) + d(j, k) + TRIANGLE_TOL;
    if n <= FULL_CHECK {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if bad(i, j, k) {
                        return Err(Error::NotPseudoMetric(format!("triangle ({i},{j},{k})")));
                    }
                }
            }
        }
    } else {
        let mut r = rng::rng(n as u64);
        for _ in 0..SAMPLED_TRIPLES {
            let (i, j, k) = (r.random_range(0..n), r.random_range(0..n), r.random_range(0..n));
            if bad(i, j, k) {
                return Err(Error::NotPseudoMetric(format!("triangle ({i},{j},{k})")));
            }
        }
    }
    Ok(())
}

/// How the correspondence between two spaces is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MatchingStrategy {
    /// Both spaces are coded by `[0, 1]` through their point order and
    /// masses; points covering overlapping mass intervals are matched.
    IndexAligned,
    /// Points sorted by distance to a root, then aligned by mass; the best
    /// of a few roots on each side is kept.
    Greedy,
}

/// Correspondence `R` with coupling `nu` certifying a GHP upper bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GhpBound {
    pub epsilon: f64,
    pub distortion: f64,
    pub uncoupled_mass: f64,
    /// `(i, j, mass)` triples; every point of both spaces appears.
    pub coupling: Vec<(usize, usize, f64)>,
}

impl GhpBound {
    /// Recomputes distortion and masses from the witness.
    pub fn validate(&self, a: &FiniteMMSpace, b: &FiniteMMSpace) -> Result<()> {
        let mut seen_a = vec![false; a.len()];
        let mut seen_b = vec![false; b.len()];
        let mut ma = vec![0.0; a.len()];
        let mut mb = vec![0.0; b.len()];
        for &(i, j, w) in &self.coupling {
            seen_a[i] = true;
            seen_b[j] = true;
            ma[i] += w;
            mb[j] += w;
        }
        if seen_a.contains(&false) || seen_b.contains(&false) {
            return Err(Error::MismatchFound("not a correspondence".into()));
        }
        let marg = ma.iter().zip(a.weights()).chain(mb.iter().zip(b.weights())).all(|(x, y)| (x - y).abs() < 1e-9);
        let dis = distortion(a, b, &self.coupling);
        let eps = (dis / 2.0).max(self.uncoupled_mass);
        if !marg || (dis - self.distortion).abs() > 1e-12 || eps > self.epsilon + 1e-12 {
            return Err(Error::MismatchFound("GHP witness does not certify the bound".into()));
        }
        Ok(())
    }
}

fn distortion(a: &FiniteMMSpace, b: &FiniteMMSpace, pairs: &[(usize, usize, f64)]) -> f64 {
    let mut dis = 0.0f64;
    for (k, &(i, j, _)) in pairs.iter().enumerate() {
        for &(i2, j2, _) in &pairs[..k] {
            dis = dis.max((a.d(i, i2) - b.d(j, j2)).abs());
        }
    }
    dis
}

/// Pieces of `[0, 1]` where the mass intervals of `oa` (in `a`) and `ob`
/// (in `b`) overlap. Zero-mass points are attached where they sit.
fn align(a: &FiniteMMSpace, oa: &[usize], b: &FiniteMMSpace, ob: &[usize]) -> Vec<(usize, usize, f64)> {
    let (mut x, mut y) = (0, 0);
    let (mut ra, mut rb) = (a.weight(oa[0]), b.weight(ob[0]));
    let mut out = Vec::with_capacity(oa.len() + ob.len());
    loop {
        let m = ra.min(rb);
        out.push((oa[x], ob[y], m));
        ra -= m;
        rb -= m;
        let (done_a, done_b) = (x + 1 == oa.len(), y + 1 == ob.len());
        if done_a && done_b {
            return out;
        }
        // One of the remainders is exactly zero unless a side is finished.
        if !done_a && (ra <= 0.0 || done_b) {
            x += 1;
            ra = a.weight(oa[x]);
        }
        if !done_b && (rb <= 0.0 || done_a) {
            y += 1;
            rb = b.weight(ob[y]);
        }
    }
}

fn bound_from(a: &FiniteMMSpace, b: &FiniteMMSpace, coupling: Vec<(usize, usize, f64)>) -> GhpBound {
    let dis = distortion(a, b, &coupling);
    GhpBound { epsilon: dis / 2.0, distortion: dis, uncoupled_mass: 0.0, coupling }
}

fn root_candidates(s: &FiniteMMSpace) -> Vec<usize> {
    let far = (0..s.len()).max_by(|&i, &j| s.d(0, i).total_cmp(&s.d(0, j))).unwrap();
    let heavy = (0..s.len()).max_by(|&i, &j| s.weight(i).total_cmp(&s.weight(j))).unwrap();
    let mut c = vec![0, far, heavy, s.len() / 2];
    c.sort_unstable();
    c.dedup();
    c
}

/// Upper bound on the GHP distance with its certifying witness.
pub fn ghp_bound(a: &FiniteMMSpace, b: &FiniteMMSpace, strategy: MatchingStrategy) -> Result<GhpBound> {
    for s in [a, b] {
        if s.len() > DENSE_LIMIT {
            return Err(Error::SizeLimit { size: s.len(), limit: DENSE_LIMIT });
        }
    }
    let best = match strategy {
        MatchingStrategy::IndexAligned => {
            let oa: Vec<usize> = (0..a.len()).collect();
            let ob: Vec<usize> = (0..b.len()).collect();
            bound_from(a, b, align(a, &oa, b, &ob))
        }
        MatchingStrategy::Greedy => {
            let order = |s: &FiniteMMSpace, r: usize| {
                let mut o: Vec<usize> = (0..s.len()).collect();
                o.sort_by(|&i, &j| s.d(r, i).total_cmp(&s.d(r, j)).then(i.cmp(&j)));
                o
            };
            let mut best: Option<GhpBound> = None;
            for ra in root_candidates(a) {
                for rb in root_candidates(b) {
                    let cand = bound_from(a, b, align(a, &order(a, ra), b, &order(b, rb)));
                    if best.as_ref().is_none_or(|x| cand.epsilon < x.epsilon) {
                        best = Some(cand);
                    }
                }
            }
            best.unwrap()
        }
    };
    best.validate(a, b)?;
    Ok(best)
}

/// `epsilon` of [`ghp_bound`].
pub fn ghp_upper(a: &FiniteMMSpace, b: &FiniteMMSpace, strategy: MatchingStrategy) -> Result<f64> {
    Ok(ghp_bound(a, b, strategy)?.epsilon)
}

/// Quotient of the grid `0..n` (uniform masses) by `{d = 0}`. Returns the
/// space and the class of every grid point; classes are numbered by their
/// smallest grid point.
pub fn quotient_from_pseudodistance<F: Fn(usize, usize) -> f64>(n: usize, d: F) -> Result<(FiniteMMSpace, Vec<usize>)> {
    if n == 0 {
        return Err(Error::Empty);
    }
    for i in 0..n {
        if d(i, i).abs() > ZERO_TOL {
            return Err(Error::NotPseudoMetric(format!("d({i},{i}) != 0")));
        }
        for j in 0..i {
            let x = d(i, j);
            if !(x >= 0.0) || (x - d(j, i)).abs() > TRIANGLE_TOL {
                return Err(Error::NotPseudoMetric(format!("asymmetric or negative at ({i},{j})")));
            }
        }
    }
    check_triangles(n, &d)?;
    let mut class = vec![usize::MAX; n];
    let mut reps = Vec::new();
    for i in 0..n {
        if class[i] != usize::MAX {
            continue;
        }
        class[i] = reps.len();
        for j in i + 1..n {
            if class[j] == usize::MAX && d(i, j) < ZERO_TOL {
                class[j] = reps.len();
            }
        }
        reps.push(i);
    }
    let k = reps.len();
    let mut weights = vec![0.0; k];
    for &c in &class {
        weights[c] += 1.0 / n as f64;
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let dist = (0..k * k).map(|x| d(reps[x / k], reps[x % k])).collect();
    Ok((FiniteMMSpace::new(dist, weights)?, class))
}

/// Which tree a grid function codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TreeMode {
    /// `d_g(s,t) = g_s + g_t - 2 min_{[s,t]} g`.
    Linear,
    /// `D_g(s,t) = g_s + g_t - 2 max(min_{[s,t]} g, min_{[0,s] u [t,1]} g)`.
    Circular,
}

/// Grid function with range-minimum support.
#[derive(Debug, Clone)]
pub struct GridFunction {
    rmq: SparseMin<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        GridFunction { rmq: SparseMin::new(&values) }
    }

    pub fn len(&self) -> usize {
        self.rmq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rmq.is_empty()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.rmq.get(i)
    }

    pub fn linear(&self, s: usize, t: usize) -> f64 {
        let (s, t) = (s.min(t), s.max(t));
        self.value(s) + self.value(t) - 2.0 * self.rmq.min(s, t)
    }

    pub fn circular(&self, s: usize, t: usize) -> f64 {
        let (s, t) = (s.min(t), s.max(t));
        let inner = self.rmq.min(s, t);
        let outer = self.rmq.min(0, s).min(self.rmq.min(t, self.len() - 1));
        self.value(s) + self.value(t) - 2.0 * inner.max(outer)
    }

    pub fn distance(&self, s: usize, t: usize, mode: TreeMode) -> f64 {
        match mode {
            TreeMode::Linear => self.linear(s, t),
            TreeMode::Circular => self.circular(s, t),
        }
    }
}

pub fn d_g_pseudodistance(g: &GridFunction, s: usize, t: usize, mode: TreeMode) -> f64 {
    g.distance(s, t, mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov statistic with its asymptotic p-value.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty);
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = (n * m / (n + m)).sqrt();
    Ok(KsResult { statistic: d, p_value: q_ks((ne + 0.12 + 0.11 / ne) * d) })
}

fn q_ks(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Upper tail of the chi-square law with `dof` degrees of freedom.
pub fn chi_square_sf(x: f64, dof: usize) -> f64 {
    ChiSquared::new(dof as f64).expect("positive degrees of freedom").sf(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::loopforge::{looptree_from_path, DistanceOracle};
    use crate::testutil::random_excursion;
    use proptest::prelude::*;

    fn point() -> FiniteMMSpace {
        FiniteMMSpace::new(vec![0.0], vec![1.0]).unwrap()
    }

    fn segment(n: usize, len: f64) -> FiniteMMSpace {
        FiniteMMSpace::from_fn(n, |i, j| (i as f64 - j as f64).abs() * len / (n - 1).max(1) as f64).unwrap()
    }

    #[test]
    fn ghp_examples() {
        let two = FiniteMMSpace::new(vec![0.0, 1.0, 1.0, 0.0], vec![0.5, 0.5]).unwrap();
        for s in [MatchingStrategy::IndexAligned, MatchingStrategy::Greedy] {
            assert_eq!(ghp_upper(&two, &two, s).unwrap(), 0.0);
            assert!((ghp_upper(&point(), &two, s).unwrap() - 0.5).abs() < 1e-12);
        }
        let a = segment(30, 2.0);
        let b = a.scaled(1.5);
        let e = ghp_upper(&a, &b, MatchingStrategy::IndexAligned).unwrap();
        assert!(e <= 0.5 * a.diameter() + 1e-12);
    }

    #[test]
    fn ghp_size_limit() {
        let big = FiniteMMSpace { n: DENSE_LIMIT + 1, dist: Vec::new(), weights: Vec::new() };
        assert!(matches!(ghp_upper(&big, &point(), MatchingStrategy::Greedy), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn validation() {
        assert_eq!(FiniteMMSpace::new(vec![], vec![]), Err(Error::Empty));
        assert!(FiniteMMSpace::new(vec![0.0, 1.0, 2.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(FiniteMMSpace::new(vec![0.0, 1.0, 1.0, 0.0], vec![0.5, 0.6]).is_err());
        let bad = FiniteMMSpace::from_fn(3, |i, j| if i == j { 0.0 } else if i + j == 2 { 5.0 } else { 1.0 });
        assert!(matches!(bad, Err(Error::NotPseudoMetric(_))));
    }

    #[test]
    fn binary_round_trip() {
        let a = segment(7, 3.0);
        let mut buf = Vec::new();
        a.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 8 * (7 + 49));
        assert_eq!(FiniteMMSpace::read_from(&buf[..]).unwrap(), a);
        assert!(FiniteMMSpace::read_from(&b"XXXXXXXX"[..]).is_err());
    }

    #[test]
    fn quotient_examples() {
        let (q, class) = quotient_from_pseudodistance(10, |_, _| 0.0).unwrap();
        assert_eq!(q.len(), 1);
        assert!((q.weight(0) - 1.0).abs() < 1e-15);
        assert!(class.iter().all(|&c| c == 0));
        let g = GridFunction::new((0..10).map(|i| i as f64).collect());
        let (q, _) = quotient_from_pseudodistance(10, |s, t| g.linear(s, t)).unwrap();
        assert_eq!(q.len(), 10);
    }

    #[test]
    fn quotient_of_looptree_distance() {
        for seed in 0..20 {
            let p = random_excursion(60, seed);
            let lt = looptree_from_path(&p).unwrap();
            let oracle = DistanceOracle::new(&p).unwrap();
            let e = p.len();
            let (q, class) = quotient_from_pseudodistance(e, |s, t| oracle.distance(s, t).unwrap() as f64).unwrap();
            assert_eq!(q.len(), lt.vertex_count());
            for s in 0..e {
                let d = lt.bfs(lt.corner_vertex(s));
                for t in 0..e {
                    assert_eq!(q.d(class[s], class[t]), d[lt.corner_vertex(t)] as f64);
                }
            }
            let total: f64 = q.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tree_distances() {
        // Points at height 3 on both sides of a valley at 1.
        let g = GridFunction::new(vec![5.0, 3.0, 1.0, 3.0, 5.0]);
        assert_eq!(g.linear(1, 3), 4.0);
        assert_eq!(g.linear(2, 2), 0.0);
        // Around the circle the two points meet above the valley.
        assert_eq!(g.circular(1, 3), 0.0);
        // On the far sides of a single peak they are identified.
        let peak = GridFunction::new(vec![1.0, 3.0, 5.0, 3.0, 1.0]);
        assert_eq!(peak.linear(1, 3), 0.0);
        let h = GridFunction::new(vec![0.0, 2.0, 1.0, 3.0, 0.5]);
        for s in 0..5 {
            for t in 0..5 {
                assert!(h.circular(s, t) <= h.linear(s, t) + 1e-15);
            }
        }
    }

    #[test]
    fn ks_examples() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let r = ks_distance(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let b: Vec<f64> = a.iter().map(|x| x + 1000.0).collect();
        assert_eq!(ks_distance(&a, &b).unwrap().statistic, 1.0);
        assert_eq!(ks_distance(&a, &[]), Err(Error::Empty));
    }

    #[test]
    fn ks_calibration() {
        let mut low = 0;
        for seed in 0..100u64 {
            let mut r = rng::rng(seed);
            let a: Vec<f64> = (0..10_000).map(|_| r.random()).collect();
            let b: Vec<f64> = (0..10_000).map(|_| r.random()).collect();
            if ks_distance(&a, &b).unwrap().p_value <= 0.001 {
                low += 1;
            }
        }
        assert!(low <= 1, "{low} runs below 0.001");
    }

    #[test]
    fn chi_square_tail() {
        assert!((chi_square_sf(0.0, 3) - 1.0).abs() < 1e-12);
        // P(chi2_1 > 3.841459) = 0.05.
        assert!((chi_square_sf(3.841_458_820_694_124, 1) - 0.05).abs() < 1e-9);
    }

    fn random_space(seed: u64, n: usize) -> FiniteMMSpace {
        let mut r = rng::rng(seed);
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (r.random(), r.random())).collect();
        let mut w: Vec<f64> = (0..n).map(|_| r.random::<f64>() + 0.1).collect();
        let tot: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= tot);
        let w_sum: f64 = w[..n - 1].iter().sum();
        w[n - 1] = 1.0 - w_sum;
        let dist = (0..n * n).map(|k| {
            let (a, b) = (pts[k / n], pts[k % n]);
            ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
        });
        FiniteMMSpace::new(dist.collect(), w).unwrap()
    }

    proptest! {
        #[test]
        fn ghp_properties(s1 in any::<u64>(), s2 in any::<u64>(), n in 1usize..25, m in 1usize..25) {
            let a = random_space(s1, n);
            let b = random_space(s2, m);
            let ab = ghp_bound(&a, &b, MatchingStrategy::IndexAligned).unwrap();
            let ba = ghp_bound(&b, &a, MatchingStrategy::IndexAligned).unwrap();
            prop_assert!((ab.epsilon - ba.epsilon).abs() < 1e-12);
            prop_assert_eq!(ghp_upper(&a, &a, MatchingStrategy::IndexAligned).unwrap(), 0.0);
            let g = ghp_bound(&a, &b, MatchingStrategy::Greedy).unwrap();
            g.validate(&a, &b).unwrap();
            // Half the diameter difference is a lower bound for GH, hence GHP.
            prop_assert!(g.epsilon + 1e-12 >= (a.diameter() - b.diameter()).abs() / 2.0);
        }

        #[test]
        fn quotient_keeps_mass(seed in any::<u64>(), n in 2usize..60) {
            let mut r = rng::rng(seed);
            let vals: Vec<f64> = (0..n).map(|_| r.random_range(0..4) as f64).collect();
            let g = GridFunction::new(vals);
            let (q, _) = quotient_from_pseudodistance(n, |s, t| g.linear(s, t)).unwrap();
            let total: f64 = q.weights().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
