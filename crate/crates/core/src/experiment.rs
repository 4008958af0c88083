//! Experiment harness: model families indexed by a size, rescaled statistics
//! collected over seeded replicas, two-sample comparisons between sizes and
//! against the continuum, exhaustive enumerators and instance checks.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::continuum::{self, CadlagPath, LoopMetric};
use crate::degseq::{DegreeSequence, ThetaParams};
use crate::error::{Error, Result};
use crate::labels::{self, BridgeLaw, Labelling};
use crate::loopforge::{DistanceOracle, Looptree};
use crate::lukapath::{self, LukaPath};
use crate::mapbij::BipartiteMap;
use crate::mmspace::{self, FiniteMMSpace, MatchingStrategy};
use crate::rng;

/// A family of degree sequences indexed by a size.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// `size` faces of degree 4 and a boundary of length 2.
    Quadrangulation,
    /// Large parts close to `theta_i sigma`, small parts carrying the
    /// `theta0` mass and ones filling the edge count up to `size`, where
    /// `sigma^2` is close to `size`. See [`theta_family`].
    Theta(ThetaParams),
    /// Every count of the template multiplied by `size`, boundary kept.
    Template(DegreeSequence),
}

/// Continuum counterpart of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitParams {
    pub theta: ThetaParams,
    /// Coefficient of `d_C` in the limit looptree distance.
    pub loop_a: f64,
    /// Variance parameter of the limit labels.
    pub label_a: f64,
}

impl Model {
    pub fn sequence(&self, size: usize, seed: u64) -> Result<DegreeSequence> {
        match self {
            Model::Quadrangulation => Ok(DegreeSequence::quadrangulation(size)),
            Model::Theta(p) => theta_family(p, size, seed).map(|(s, _)| s),
            Model::Template(t) => {
                let counts: Vec<(usize, usize)> = t.counts().filter(|&(k, _)| k > 0).map(|(k, c)| (k, c * size)).collect();
                DegreeSequence::from_counts(t.rho(), &counts)
            }
        }
    }

    /// Limit parameters when the family satisfies the hypotheses of the
    /// invariance principles with geometric labels.
    pub fn limit(&self) -> Option<LimitParams> {
        match self {
            Model::Quadrangulation => Some(LimitParams {
                theta: ThetaParams::new(1.0, vec![], 0.0).expect("valid"),
                loop_a: 1.0,
                label_a: 1.0 / 3.0,
            }),
            Model::Theta(p) => {
                let a = if p.theta0 > 0.0 { p.a } else { 0.0 };
                Some(LimitParams { theta: p.clone(), loop_a: (a + 1.0) / 2.0, label_a: p.sigma2_label / 3.0 })
            }
            Model::Template(_) => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Model::Quadrangulation => "quadrangulation".into(),
            Model::Theta(p) => format!("theta(theta0={}, thetas={:?}, rho={}, a={})", p.theta0, p.thetas, p.rho, p.a),
            Model::Template(t) => format!("template({})", crate::io::format_degrees(t).trim().replace('\n', "; ")),
        }
    }
}

/// Sequence of the θ family at `size`, and the number of its large parts.
///
/// With `sigma = sqrt(size)`, part `i` is `theta_i sigma` rounded up with
/// probability equal to its fractional part (one uniform from sub-stream
/// `(seed, i)`, so the rounding is coupled across sizes); parts below 3 are
/// dropped. The remaining `sigma^2` budget `S` is carried by twos and threes
/// when `theta0 > 0`: `(1 - a) S / 4` threes and the rest twos, so that the
/// number of even parts (leaves included) is close to `a S`. This requires
/// `1/3 <= a <= 1`. Finally ones are added until the edge count reaches
/// `size`; they change neither `sigma^2` nor the number of even parts.
pub fn theta_family(params: &ThetaParams, size: usize, seed: u64) -> Result<(DegreeSequence, usize)> {
    params.validate()?;
    if size == 0 {
        return Err(Error::Infeasible("size must be positive".into()));
    }
    let sigma = (size as f64).sqrt();
    let mut counts: Vec<(usize, usize)> = Vec::new();
    let mut used = 0usize;
    for (i, &t) in params.thetas.iter().enumerate() {
        let x = t * sigma;
        let u: f64 = rng::stream(seed, i as u64).random();
        let k = (x.floor() + if u < x - x.floor() { 1.0 } else { 0.0 }) as usize;
        if k < 3 {
            continue;
        }
        used += k * (k - 1);
        counts.push((k, 1));
    }
    let big = counts.len();
    if used as f64 > 1.05 * size as f64 {
        return Err(Error::Infeasible(format!("large parts alone give sigma^2 = {used} > {size}")));
    }
    if params.theta0 > 0.0 {
        if !(1.0 / 3.0 - 1e-12..=1.0 + 1e-12).contains(&params.a) {
            return Err(Error::InvalidParams("a must lie in [1/3, 1] when theta0 > 0".into()));
        }
        let budget = size.saturating_sub(used) as f64;
        let threes = ((1.0 - params.a) * budget / 4.0).round().max(0.0) as usize;
        let twos = ((budget - 6.0 * threes as f64) / 2.0).round().max(0.0) as usize;
        counts.push((3, threes));
        counts.push((2, twos));
    }
    let rho = ((params.rho * sigma).round() as usize).max(1);
    let seq = DegreeSequence::from_counts(rho, &counts)?;
    let ones = size.saturating_sub(seq.edges());
    if ones == 0 {
        return Ok((seq, big));
    }
    counts.push((1, ones));
    Ok((DegreeSequence::from_counts(rho, &counts)?, big))
}

/// `f(2Z_+) / sigma^2`: even parts, leaves included, relative to `sigma^2`.
pub fn even_ratio(seq: &DegreeSequence) -> f64 {
    let even: usize = seq.counts().filter(|&(k, _)| k % 2 == 0).map(|(_, c)| c).sum();
    even as f64 / seq.sigma2().max(1) as f64
}

/// Uniform excursion with the given parts: bridge from sub-stream
/// `(seed, 0)`, Vervaat shift from sub-stream `(seed, 1)`.
pub fn sample_excursion(seq: &DegreeSequence, seed: u64) -> LukaPath {
    let bridge = lukapath::sample_bridge(seq, &mut rng::stream(seed, 0));
    lukapath::vervaat_discrete(&bridge, &mut rng::stream(seed, 1)).expect("rho >= 1")
}

/// Uniform excursion in which the `big` largest parts and the Vervaat level
/// are driven by uniforms shared by every call with the same `key_seed`.
///
/// Parts are ordered by independent uniform keys, which yields a uniform
/// arrangement; the keys of the large parts come from `(key_seed, i)` and
/// the others from `seed`. Two sizes of the same family thus place their
/// large jumps at nearly the same relative times.
pub fn coupled_excursion(seq: &DegreeSequence, big: usize, key_seed: u64, seed: u64) -> LukaPath {
    let parts = seq.parts();
    let mut r = rng::rng(seed);
    let keys: Vec<f64> = (0..parts.len())
        .map(|i| if i < big { rng::stream(key_seed, i as u64).random() } else { r.random() })
        .collect();
    let mut order: Vec<usize> = (0..parts.len()).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
    let bridge = LukaPath::new(seq.rho(), order.iter().map(|&i| parts[i]).collect());
    let v: f64 = rng::stream(key_seed, u64::MAX).random();
    let u = ((v * seq.rho() as f64) as usize).min(seq.rho() - 1);
    lukapath::vervaat_at(&bridge, u).expect("bridge with rho >= 1")
}

/// `sigma^2` of the parts of a path (the root cycle excluded).
pub fn path_sigma2(path: &LukaPath) -> f64 {
    path.jumps().iter().map(|&k| (k * k.saturating_sub(1)) as f64).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    /// `sigma^-1 d_LT` between two uniform corners.
    PairDistance,
    /// `(Var(xi) sigma)^-1/2 (Z_U + W)` at a uniform corner.
    LabelAtUniform,
    /// `(Var(xi) sigma)^-1/2 (max Z - min Z + 1 + W)`, from the eccentricity
    /// of `v*`.
    Radius,
    /// `|C^delta_U - sigma^2_delta / (2n) H_U| / sqrt(sigma^2_delta)`.
    Spinal,
}

impl Statistic {
    pub const ALL: [Statistic; 4] = [Statistic::PairDistance, Statistic::LabelAtUniform, Statistic::Radius, Statistic::Spinal];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::PairDistance => "pair-distance",
            Statistic::LabelAtUniform => "label-at-uniform",
            Statistic::Radius => "radius",
            Statistic::Spinal => "spinal",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Statistic::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown statistic '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub model: Model,
    /// Strictly increasing sizes.
    pub sizes: Vec<usize>,
    pub replicas: usize,
    pub seed: u64,
    pub statistics: Vec<Statistic>,
    /// Truncation level of the spinal statistic, relative to `sigma`.
    pub delta: f64,
    /// Grid size of continuum samples; `None` skips the continuum.
    pub continuum_grid: Option<usize>,
    /// Replicas of the continuum (defaults to `replicas`).
    pub continuum_replicas: Option<usize>,
    pub law: BridgeLaw,
}

impl ExperimentSpec {
    pub fn new(model: Model, sizes: Vec<usize>, replicas: usize, seed: u64) -> Result<Self> {
        let spec = ExperimentSpec {
            model,
            sizes,
            replicas,
            seed,
            statistics: Statistic::ALL.to_vec(),
            delta: 0.1,
            continuum_grid: None,
            continuum_replicas: None,
            law: BridgeLaw::Geometric,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.into()));
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return bad("sizes must be nonempty and positive");
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sizes must be strictly increasing");
        }
        if self.replicas == 0 || self.continuum_replicas == Some(0) {
            return bad("replicas must be at least 1");
        }
        if self.statistics.is_empty() {
            return bad("no statistic requested");
        }
        if !(self.delta > 0.0) {
            return bad("delta must be positive");
        }
        if self.continuum_grid == Some(0) {
            return bad("continuum grid must be positive");
        }
        Ok(())
    }
}

/// All requested statistics of one discrete replica, in the order of `stats`.
pub fn discrete_replica(
    seq: &DegreeSequence,
    stats: &[Statistic],
    law: BridgeLaw,
    delta: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let path = sample_excursion(seq, seed);
    let e = path.len();
    let sigma = (seq.sigma2() as f64).sqrt();
    if sigma == 0.0 {
        return Err(Error::ZeroSigma);
    }
    let label_scale = (law.variance() * sigma).sqrt();
    let mut r = rng::stream(seed, 2);
    // Integer statistics get an independent uniform W on (-1/2, 1/2) so that
    // two-sample tests, which assume continuous laws, are not driven by the
    // lattice. W vanishes after rescaling.
    let mut jitter = rng::stream(seed, 4);
    let mut w = move || jitter.random::<f64>() - 0.5;
    let mut out = Vec::with_capacity(stats.len());
    for &s in stats {
        let v = match s {
            Statistic::PairDistance => {
                let (a, b) = (r.random_range(0..e), r.random_range(0..e));
                DistanceOracle::new(&path)?.distance(a, b)? as f64 / sigma
            }
            Statistic::LabelAtUniform => {
                let u = r.random_range(0..e);
                (labels::label_at(&path, u, law, rng::derive(seed, 3))? as f64 + w()) / label_scale
            }
            Statistic::Radius => {
                let z = labels::label_process_from_path(&path, law, rng::derive(seed, 3))?;
                let (lo, hi) = (z.iter().min().unwrap(), z.iter().max().unwrap());
                ((hi - lo + 1) as f64 + w()) / label_scale
            }
            Statistic::Spinal => spinal_statistic(seq, &path, r.random_range(1..=e), delta)?,
        };
        out.push(v);
    }
    Ok(out)
}

/// `|C^{n,delta}_u - sigma^2_delta / (2n) H_u| / sqrt(sigma^2_delta)` for the
/// vertex visited at time `u >= 1`, the root cycle excluded.
pub fn spinal_statistic(seq: &DegreeSequence, path: &LukaPath, u: usize, delta: f64) -> Result<f64> {
    let s2d = seq.sigma2_truncated(delta)? as f64;
    if s2d == 0.0 {
        return Err(Error::Infeasible("no part below delta sigma".into()));
    }
    let cut = delta * (seq.sigma2() as f64).sqrt() + 1e-9;
    let rec = lukapath::ancestors(&path.clone(), u)?;
    let (mut c, mut h) = (0.0, 0.0);
    for a in rec.jump_ancestors() {
        h += 1.0;
        if a.jump as f64 <= cut {
            c += a.r as f64;
        }
    }
    Ok((c - s2d / (2.0 * seq.n() as f64) * h).abs() / s2d.sqrt())
}

/// Continuum values of the statistics (`None` where the limit is identically
/// zero, as for the spinal statistic).
pub fn continuum_replica(limit: &LimitParams, grid: usize, stats: &[Statistic], seed: u64) -> Result<Vec<Option<f64>>> {
    let x = continuum::sample_excursion(&limit.theta, grid, limit.theta.thetas.len(), rng::derive(seed, 0))?;
    let metric = LoopMetric::new(&x);
    let mut r = rng::stream(seed, 1);
    let knot = |r: &mut rng::Rng| x.knot_at(r.random::<f64>());
    let mut out = Vec::with_capacity(stats.len());
    for &s in stats {
        let v = match s {
            Statistic::PairDistance => {
                let (a, b) = (knot(&mut r), knot(&mut r));
                Some(metric.distance(limit.loop_a, a.min(b), a.max(b)))
            }
            Statistic::LabelAtUniform => {
                let k = knot(&mut r);
                Some(continuum::label_at(&x, limit.label_a, k, &mut r))
            }
            Statistic::Radius => {
                let all: Vec<usize> = (0..x.len()).collect();
                let f = continuum::snake_labels(&x, limit.label_a, &all, rng::derive(seed, 2));
                let lo = f.values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = f.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Some(hi - lo)
            }
            Statistic::Spinal => None,
        };
        out.push(v);
    }
    Ok(out)
}

/// Samples of one statistic from one source (a size or the continuum).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Samples {
    pub statistic: Statistic,
    /// Size, or `None` for the continuum.
    pub size: Option<usize>,
    pub values: Vec<f64>,
}

impl Samples {
    pub fn source(&self) -> String {
        self.size.map_or_else(|| "continuum".to_string(), |n| n.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub statistic: Statistic,
    pub source: String,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub statistic: Statistic,
    pub left: String,
    pub right: String,
    pub ks: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeInfo {
    pub size: usize,
    pub edges: usize,
    pub sigma: f64,
    pub max_part: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub model: String,
    pub seed: u64,
    pub replicas: usize,
    pub delta: f64,
    pub sizes: Vec<SizeInfo>,
    pub summaries: Vec<Summary>,
    pub comparisons: Vec<Comparison>,
    #[serde(skip)]
    pub samples: Vec<Samples>,
}

impl InvarianceReport {
    pub fn samples_of(&self, stat: Statistic, size: Option<usize>) -> Option<&[f64]> {
        self.samples.iter().find(|s| s.statistic == stat && s.size == size).map(|s| s.values.as_slice())
    }

    pub fn median_of(&self, stat: Statistic, size: Option<usize>) -> Option<f64> {
        self.samples_of(stat, size).map(median)
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn summary(s: &Samples) -> Summary {
    let count = s.values.len();
    Summary {
        statistic: s.statistic,
        source: s.source(),
        count,
        mean: s.values.iter().sum::<f64>() / count.max(1) as f64,
        median: median(&s.values),
    }
}

/// Collects every statistic at every size (and in the continuum when asked)
/// and compares consecutive sizes, then the largest size with the continuum.
///
/// Replica `r` at size index `i` uses seed `derive(derive(seed, i), r)`; the
/// sequence of size index `i` uses `derive(seed, i)` as well.
pub fn run_invariance(spec: &ExperimentSpec) -> Result<InvarianceReport> {
    spec.validate()?;
    let stats = &spec.statistics;
    let mut samples: Vec<Samples> = Vec::new();
    let mut sizes = Vec::new();
    for (i, &n) in spec.sizes.iter().enumerate() {
        let size_seed = rng::derive(spec.seed, i as u64);
        let seq = spec.model.sequence(n, size_seed)?;
        sizes.push(SizeInfo { size: n, edges: seq.edges(), sigma: (seq.sigma2() as f64).sqrt(), max_part: seq.max_part() });
        let rows = (0..spec.replicas)
            .into_par_iter()
            .map(|r| discrete_replica(&seq, stats, spec.law, spec.delta, rng::derive(size_seed, r as u64)))
            .collect::<Result<Vec<_>>>()?;
        for (k, &s) in stats.iter().enumerate() {
            samples.push(Samples { statistic: s, size: Some(n), values: rows.iter().map(|row| row[k]).collect() });
        }
    }
    if let (Some(grid), Some(limit)) = (spec.continuum_grid, spec.model.limit()) {
        let reps = spec.continuum_replicas.unwrap_or(spec.replicas);
        let cseed = rng::derive(spec.seed, u64::MAX);
        let rows = (0..reps)
            .into_par_iter()
            .map(|r| continuum_replica(&limit, grid, stats, rng::derive(cseed, r as u64)))
            .collect::<Result<Vec<_>>>()?;
        for (k, &s) in stats.iter().enumerate() {
            let values: Option<Vec<f64>> = rows.iter().map(|row| row[k]).collect();
            if let Some(values) = values {
                samples.push(Samples { statistic: s, size: None, values });
            }
        }
    }
    let mut comparisons = Vec::new();
    for &s in stats {
        let mine: Vec<&Samples> = samples.iter().filter(|x| x.statistic == s).collect();
        for w in mine.windows(2) {
            let ks = mmspace::ks_distance(&w[0].values, &w[1].values)?;
            comparisons.push(Comparison {
                statistic: s,
                left: w[0].source(),
                right: w[1].source(),
                ks: ks.statistic,
                p_value: ks.p_value,
            });
        }
    }
    Ok(InvarianceReport {
        model: spec.model.name(),
        seed: spec.seed,
        replicas: spec.replicas,
        delta: spec.delta,
        sizes,
        summaries: samples.iter().map(summary).collect(),
        comparisons,
        samples,
    })
}

/// Writes `statistic,source,replica,value` rows.
pub fn write_samples_csv<W: std::io::Write>(mut w: W, report: &InvarianceReport) -> std::io::Result<()> {
    writeln!(w, "statistic,source,replica,value")?;
    for s in &report.samples {
        for (r, v) in s.values.iter().enumerate() {
            writeln!(w, "{},{},{},{}", s.statistic, s.source(), r, v)?;
        }
    }
    Ok(())
}

/// Table 1 counts, Euler's formula, good labels, `Z_0 = Z_E = 0`, excursion
/// positivity and the distance identity `d(v*, .) = Z - min Z + 1`.
pub fn check_instance(path: &LukaPath, lt: &Looptree, lab: &Labelling, m: &BipartiteMap) -> Result<()> {
    let fail = |m: String| Err(Error::MismatchFound(m));
    if !path.is_excursion() {
        return Err(Error::NotExcursion);
    }
    let e = path.len();
    let leaves = path.jumps().iter().filter(|&&k| k == 0).count();
    let mut cycles: Vec<usize> = path.jumps().iter().copied().filter(|&k| k > 0).collect();
    cycles.push(path.start());
    cycles.sort_unstable();
    let mut got = lt.cycle_lengths();
    got.sort_unstable();
    if lt.edge_count() != e || lt.vertex_count() != leaves || got != cycles {
        return fail(format!(
            "looptree has {} edges, {} vertices; expected {e}, {leaves}",
            lt.edge_count(),
            lt.vertex_count()
        ));
    }
    lab.matches(lt)?;
    lab.check_good()?;
    if lab.bridges.iter().any(|b| b.iter().sum::<i64>() != 0) {
        return fail("a cycle increment sum is not zero".into());
    }
    let z = labels::label_process(lt, lab)?;
    if z[0] != 0 || z[e] != 0 {
        return fail(format!("Z_0 = {}, Z_E = {}", z[0], z[e]));
    }
    let mut faces = m.face_degrees();
    faces.sort_unstable();
    let doubled: Vec<usize> = cycles.iter().map(|k| 2 * k).collect();
    if m.vertex_count() != leaves + 1 || m.edge_count() != e || faces != doubled {
        return fail(format!("map has {} vertices, {} edges", m.vertex_count(), m.edge_count()));
    }
    if m.euler_characteristic() != 2 || !m.is_bipartite() {
        return fail("map is not a bipartite sphere".into());
    }
    let vstar = m.vstar().ok_or_else(|| Error::InvalidMap("map is not pointed".into()))?;
    let d = crate::mapbij::bfs_distances(m, vstar);
    let zmin = *z.iter().min().unwrap();
    for (i, &zi) in z[..e].iter().enumerate() {
        let got = d[m.vertex_of(2 * i)] as i64;
        if got != zi - zmin + 1 {
            return fail(format!("corner {i}: d(v*) = {got}, Z - min Z + 1 = {}", zi - zmin + 1));
        }
    }
    Ok(())
}

/// Every first-passage excursion with exactly `e` edges (any `rho >= 1`).
pub fn all_excursions(e: usize) -> Vec<LukaPath> {
    fn rec(x: i64, left: usize, jumps: &mut Vec<usize>, rho: usize, out: &mut Vec<LukaPath>) {
        if left == 0 {
            if x == 0 {
                out.push(LukaPath::new(rho, jumps.clone()));
            }
            return;
        }
        // After this step the value is x + k - 1, which must stay positive
        // except at the last step, and must be able to reach 0 in time.
        for k in 0..=left {
            let y = x + k as i64 - 1;
            let ok = if left == 1 { y == 0 } else { y > 0 && y < left as i64 };
            if ok {
                jumps.push(k);
                rec(y, left - 1, jumps, rho, out);
                jumps.pop();
            }
        }
    }
    let mut out = Vec::new();
    for rho in 1..=e {
        rec(rho as i64, e, &mut Vec::with_capacity(e), rho, &mut out);
    }
    out
}

/// Every sequence of `k` integers `>= -1` summing to zero.
pub fn all_good_bridges(k: usize) -> Vec<Vec<i64>> {
    fn rec(left: usize, sum: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if left == 0 {
            if sum == 0 {
                out.push(cur.clone());
            }
            return;
        }
        // Remaining steps can lower the sum by at most `left - 1`.
        let hi = left as i64 - 1 - sum;
        for step in -1..=hi {
            cur.push(step);
            rec(left - 1, sum + step, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Calls `f` on every good labelling of `lt`.
pub fn for_each_labelling<F: FnMut(&Labelling)>(lt: &Looptree, mut f: F) {
    let choices: Vec<Vec<Vec<i64>>> = (0..lt.cycle_count()).map(|c| all_good_bridges(lt.cycle_len(c))).collect();
    let mut idx = vec![0usize; choices.len()];
    loop {
        let bridges = idx.iter().zip(&choices).map(|(&i, c)| c[i].clone()).collect();
        f(&Labelling::new(BridgeLaw::Geometric, bridges));
        let mut c = 0;
        loop {
            if c == idx.len() {
                return;
            }
            idx[c] += 1;
            if idx[c] < choices[c].len() {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
    }
}

/// `sigma^-1`-rescaled looptree distances between the corners
/// `floor(k E / m)`, `k < m`, with mass `1/m` each.
pub fn looptree_grid_space(path: &LukaPath, m: usize) -> Result<FiniteMMSpace> {
    let sigma = path_sigma2(path).sqrt();
    if sigma == 0.0 {
        return Err(Error::ZeroSigma);
    }
    let e = path.len();
    let oracle = DistanceOracle::new(path)?;
    let corners: Vec<usize> = (0..m).map(|k| k * e / m).collect();
    let rows: Vec<Vec<f64>> = corners
        .par_iter()
        .map(|&a| corners.iter().map(|&b| oracle.distance(a, b).map(|d| d as f64 / sigma)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    FiniteMMSpace::from_fn(m, |i, j| rows[i][j])
}

/// Largest gap between the sorted off-diagonal distances of two spaces with
/// the same number of points: the `W_inf` distance between their pair
/// distance distributions.
pub fn pair_distance_discrepancy(a: &FiniteMMSpace, b: &FiniteMMSpace) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidParams("spaces differ in size".into()));
    }
    let pairs = |s: &FiniteMMSpace| {
        let mut v: Vec<f64> = (0..s.len()).flat_map(|i| (i + 1..s.len()).map(move |j| (i, j))).map(|(i, j)| s.d(i, j)).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (pa, pb) = (pairs(a), pairs(b));
    Ok(pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Index-aligned GHP bound and pair-distance discrepancy between two
/// consecutive sizes of a coupled θ ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GhpStep {
    pub left: usize,
    pub right: usize,
    pub epsilon: f64,
    pub proxy: f64,
}

/// Coupled excursions of the θ family at every size, compared on an `m`
/// point parameter grid.
pub fn ghp_ladder(params: &ThetaParams, sizes: &[usize], m: usize, seed: u64) -> Result<Vec<GhpStep>> {
    let key_seed = rng::derive(seed, 0);
    let spaces = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let (seq, big) = theta_family(params, n, rng::derive(seed, 1))?;
            let path = coupled_excursion(&seq, big, key_seed, rng::derive(seed, 2 + i as u64));
            looptree_grid_space(&path, m)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (w, s) in spaces.windows(2).zip(sizes.windows(2)) {
        out.push(GhpStep {
            left: s[0],
            right: s[1],
            epsilon: mmspace::ghp_upper(&w[0], &w[1], MatchingStrategy::IndexAligned)?,
            proxy: pair_distance_discrepancy(&w[0], &w[1])?,
        });
    }
    Ok(out)
}

/// Same path as a càdlàg function on `[0, 1]` with space scaled by `sigma^-1`.
pub fn rescaled_path(path: &LukaPath) -> CadlagPath {
    CadlagPath::from_luka(path).scaled(1.0 / path_sigma2(path).sqrt().max(1.0))
}
