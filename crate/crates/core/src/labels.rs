//! Conditioned bridges on cycles, good labellings and the label process.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loopforge::Looptree;
use crate::lukapath::{self, LukaPath};
use crate::rng;

/// Maximum number of proposals of the rejection sampler.
pub const MAX_RETRIES: u64 = 1_000_000;

/// Law of the label increments before conditioning on a zero sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BridgeLaw {
    /// `P(xi = i) = 2^{-i-2}` for `i >= -1`.
    Geometric,
    /// Uniform on `{-m, ..., m}`.
    Uniform { m: u32 },
}

impl BridgeLaw {
    pub fn pmf(&self, i: i64) -> f64 {
        match *self {
            BridgeLaw::Geometric => {
                if i < -1 {
                    0.0
                } else {
                    0.5f64.powi((i + 2) as i32)
                }
            }
            BridgeLaw::Uniform { m } => {
                if i.abs() <= m as i64 {
                    1.0 / (2 * m + 1) as f64
                } else {
                    0.0
                }
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            BridgeLaw::Geometric => 2.0,
            BridgeLaw::Uniform { m } => {
                let m = m as f64;
                m * (m + 1.0) / 3.0
            }
        }
    }

    fn min_step(&self) -> i64 {
        match *self {
            BridgeLaw::Geometric => -1,
            BridgeLaw::Uniform { m } => -(m as i64),
        }
    }

    /// Largest step that can occur in a bridge of length `ell`.
    fn max_step(&self, ell: usize) -> i64 {
        match *self {
            BridgeLaw::Geometric => ell as i64 - 1,
            BridgeLaw::Uniform { m } => m as i64,
        }
    }
}

/// `(xi_1, ..., xi_ell)` conditioned on `xi_1 + ... + xi_ell = 0`.
///
/// The geometric law gives the uniform law on bridges with steps `>= -1`,
/// sampled exactly from a uniform composition of `ell` into `ell` parts.
/// Other laws use rejection on the last step, capped at [`MAX_RETRIES`].
pub fn sample_bridge_conditioned<R: Rng + ?Sized>(law: BridgeLaw, ell: usize, rng: &mut R) -> Result<Vec<i64>> {
    if ell == 0 {
        return Err(Error::LengthMismatch);
    }
    match law {
        BridgeLaw::Geometric => {
            let slots = 2 * ell - 1;
            let mut bars = index::sample(rng, slots, ell - 1).into_vec();
            bars.sort_unstable();
            let mut steps = Vec::with_capacity(ell);
            let mut prev: i64 = -1;
            for &b in &bars {
                steps.push(b as i64 - prev - 1 - 1);
                prev = b as i64;
            }
            steps.push(slots as i64 - prev - 1 - 1);
            let shift = rng.random_range(0..ell);
            steps.rotate_left(shift);
            Ok(steps)
        }
        BridgeLaw::Uniform { m } => {
            let m = m as i64;
            for _ in 0..MAX_RETRIES {
                let mut steps: Vec<i64> = (0..ell - 1).map(|_| rng.random_range(-m..=m)).collect();
                let s: i64 = steps.iter().sum();
                if s.abs() <= m {
                    steps.push(-s);
                    return Ok(steps);
                }
            }
            Err(Error::RetryLimit(MAX_RETRIES))
        }
    }
}

/// Exact law of `xi_1` given a zero sum over `k` steps, as `(value, prob)`.
pub fn conditioned_first_step(law: BridgeLaw, k: usize) -> Vec<(i64, f64)> {
    let lo = law.min_step();
    let hi = law.max_step(k);
    // Law of the sum of k - 1 steps restricted to the window that can
    // still return to the range [-hi, -lo].
    let width = (k as i64) * (hi - lo) + 1;
    let offset = -(k as i64) * hi;
    let mut dist = vec![0.0f64; width as usize];
    dist[(0 - offset) as usize] = 1.0;
    for _ in 0..k.saturating_sub(1) {
        let mut next = vec![0.0f64; width as usize];
        for (idx, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let v = idx as i64 + offset;
            for x in lo..=hi {
                let w = v + x;
                let wi = w - offset;
                if wi >= 0 && wi < width {
                    next[wi as usize] += p * law.pmf(x);
                }
            }
        }
        dist = next;
    }
    let mut out: Vec<(i64, f64)> = (lo..=hi)
        .map(|x| {
            let idx = -x - offset;
            let rest = if idx >= 0 && idx < width { dist[idx as usize] } else { 0.0 };
            (x, law.pmf(x) * rest)
        })
        .filter(|&(_, p)| p > 0.0)
        .collect();
    let z: f64 = out.iter().map(|&(_, p)| p).sum();
    for e in &mut out {
        e.1 /= z;
    }
    out
}

/// `Var(xi_1 + ... + xi_j)` for a conditioned bridge of length `k`.
pub fn bridge_variance(law: BridgeLaw, k: usize, j: usize) -> f64 {
    assert!(1 <= j && j <= k, "need 1 <= j <= k");
    if k == 1 || j == k {
        return 0.0;
    }
    let first = match law {
        BridgeLaw::Geometric => 2.0 * (k as f64 - 1.0) / (k as f64 + 1.0),
        _ => conditioned_first_step(law, k).iter().map(|&(x, p)| (x * x) as f64 * p).sum(),
    };
    (j * (k - j)) as f64 / (k - 1) as f64 * first
}

/// One bridge per cycle of a looptree, indexed by cycle id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labelling {
    pub law: BridgeLaw,
    pub bridges: Vec<Vec<i64>>,
}

impl Labelling {
    pub fn new(law: BridgeLaw, bridges: Vec<Vec<i64>>) -> Self {
        Labelling { law, bridges }
    }

    /// Every cycle sums to zero and every step is at least -1.
    pub fn check_good(&self) -> Result<()> {
        for (c, b) in self.bridges.iter().enumerate() {
            if b.iter().sum::<i64>() != 0 {
                return Err(Error::NotGoodLabelling(format!("cycle {c} does not sum to 0")));
            }
            if let Some(x) = b.iter().find(|&&x| x < -1) {
                return Err(Error::NotGoodLabelling(format!("cycle {c} has step {x} < -1")));
            }
        }
        Ok(())
    }

    pub fn matches(&self, lt: &Looptree) -> Result<()> {
        if self.bridges.len() != lt.cycle_count()
            || (0..lt.cycle_count()).any(|c| self.bridges[c].len() != lt.cycle_len(c))
        {
            return Err(Error::LengthMismatch);
        }
        Ok(())
    }
}

/// Label increment carried by contour edge `i`.
pub fn edge_increment(lt: &Looptree, lab: &Labelling, i: usize) -> i64 {
    lab.bridges[lt.edge_cycle(i)][lt.edge_pos(i)]
}

/// Corner labels `Z_0..=Z_E` with `Z_0 = Z_E = 0`.
pub fn label_process(lt: &Looptree, lab: &Labelling) -> Result<Vec<i64>> {
    lab.matches(lt)?;
    let mut z = Vec::with_capacity(lt.edge_count() + 1);
    z.push(0);
    for i in 0..lt.edge_count() {
        z.push(z[i] + edge_increment(lt, lab, i));
    }
    Ok(z)
}

/// Labelling whose label process is `z` (corners `0..E`, with `Z_E = 0`
/// implied). Fails unless the increments form a good labelling.
pub fn labelling_from_process(lt: &Looptree, z: &[i64]) -> Result<Labelling> {
    let e = lt.edge_count();
    if z.len() != e && z.len() != e + 1 {
        return Err(Error::LengthMismatch);
    }
    if z[0] != 0 || z.get(e).is_some_and(|&x| x != 0) {
        return Err(Error::NotGoodLabelling("Z_0 and Z_E must be 0".into()));
    }
    let mut bridges: Vec<Vec<i64>> = (0..lt.cycle_count()).map(|c| vec![0; lt.cycle_len(c)]).collect();
    for i in 0..e {
        let next = if i + 1 < e { z[i + 1] } else { 0 };
        bridges[lt.edge_cycle(i)][lt.edge_pos(i)] = next - z[i];
    }
    let lab = Labelling::new(BridgeLaw::Geometric, bridges);
    lab.check_good()?;
    Ok(lab)
}

/// Label of every looptree vertex, read from its corners.
pub fn vertex_labels(lt: &Looptree, z: &[i64]) -> Vec<i64> {
    let mut out = vec![0; lt.vertex_count()];
    for (i, &v) in lt.corner_vertices().iter().enumerate() {
        out[v] = z[i];
    }
    out
}

/// Independent conditioned bridges on every cycle; cycle `c` uses the
/// sub-stream `(seed, c)`.
pub fn labelling_with(lt: &Looptree, law: BridgeLaw, seed: u64) -> Result<Labelling> {
    let bridges = (0..lt.cycle_count())
        .into_par_iter()
        .map(|c| sample_bridge_conditioned(law, lt.cycle_len(c), &mut rng::stream(seed, c as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Labelling::new(law, bridges))
}

/// Uniform good labelling given the looptree.
pub fn good_labelling_uniform(lt: &Looptree, seed: u64) -> Labelling {
    labelling_with(lt, BridgeLaw::Geometric, seed).expect("geometric sampler is exact")
}

/// Same values as `label_process(looptree_from_path(path), labelling_with(.., law, seed))`
/// computed directly on the path.
pub fn label_process_from_path(path: &LukaPath, law: BridgeLaw, seed: u64) -> Result<Vec<i64>> {
    if !path.is_excursion() {
        return Err(Error::NotExcursion);
    }
    let e = path.len();
    let mut cycle_id = vec![usize::MAX; e + 1];
    let mut next = 0;
    for (t, id) in cycle_id.iter_mut().enumerate() {
        if path.jump(t) > 0 {
            *id = next;
            next += 1;
        }
    }
    let bridges = (0..=e)
        .into_par_iter()
        .filter(|&t| path.jump(t) > 0)
        .map(|t| sample_bridge_conditioned(law, path.jump(t), &mut rng::stream(seed, cycle_id[t] as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut z = vec![0i64; e + 1];
    let mut pos = vec![0usize; bridges.len()];
    // Walk the contour: edge j-1 belongs to the cycle of parent(j).
    let parent = lukapath::parents(path);
    for j in 1..=e {
        let c = cycle_id[parent[j]];
        z[j] = z[j - 1] + bridges[c][pos[c]];
        pos[c] += 1;
    }
    Ok(z)
}

/// `Z_j` for one corner, sampling only the bridges of the ancestral cycles
/// with the same sub-streams as [`label_process_from_path`].
pub fn label_at(path: &LukaPath, j: usize, law: BridgeLaw, seed: u64) -> Result<i64> {
    let rec = lukapath::ancestors(path, j)?;
    let mut ids = Vec::with_capacity(rec.entries.len());
    let mut count = 0;
    let mut next = rec.entries.iter().peekable();
    for t in 0..j {
        if path.jump(t) > 0 {
            if next.peek().is_some_and(|a| a.time == t) {
                ids.push(count);
                next.next();
            }
            count += 1;
        }
    }
    let mut z = 0;
    for (a, &c) in rec.entries.iter().zip(&ids) {
        let b = sample_bridge_conditioned(law, a.jump, &mut rng::stream(seed, c as u64))?;
        z += b[..a.jump - a.r].iter().sum::<i64>();
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::loopforge::looptree_from_path;
    use crate::testutil::random_excursion;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn brute_bridges(ell: usize) -> Vec<Vec<i64>> {
        fn rec(ell: usize, left: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
            if cur.len() == ell - 1 {
                if left >= -1 {
                    let mut v = cur.clone();
                    v.push(left);
                    out.push(v);
                }
                return;
            }
            for x in -1..=(ell as i64) {
                cur.push(x);
                rec(ell, left - x, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(ell, 0, &mut Vec::new(), &mut out);
        out
    }

    fn binom(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    fn chi2_uniform(counts: &HashMap<Vec<i64>, usize>, cells: usize, trials: usize) -> f64 {
        let exp = trials as f64 / cells as f64;
        let seen: f64 = counts.values().map(|&c| (c as f64 - exp).powi(2) / exp).sum();
        let stat = seen + (cells - counts.len()) as f64 * exp;
        crate::mmspace::chi_square_sf(stat, cells - 1)
    }

    #[test]
    fn labelling_from_its_process() {
        for seed in 0..30 {
            let p = crate::testutil::random_excursion(40, seed);
            let lt = crate::loopforge::looptree_from_path(&p).unwrap();
            let lab = good_labelling_uniform(&lt, seed);
            let z = label_process(&lt, &lab).unwrap();
            assert_eq!(labelling_from_process(&lt, &z).unwrap().bridges, lab.bridges);
            assert_eq!(labelling_from_process(&lt, &z[..lt.edge_count()]).unwrap().bridges, lab.bridges);
        }
        // A step of -2 on a 2-cycle.
        let lt = crate::loopforge::looptree_from_path(&LukaPath::new(2, vec![0, 0])).unwrap();
        assert!(matches!(labelling_from_process(&lt, &[0, 2]), Err(Error::NotGoodLabelling(_))));
        assert!(matches!(labelling_from_process(&lt, &[0]), Err(Error::LengthMismatch)));
    }

    #[test]
    fn trivial_bridge() {
        let mut r = rng::rng(1);
        assert_eq!(sample_bridge_conditioned(BridgeLaw::Geometric, 1, &mut r).unwrap(), vec![0]);
        assert_eq!(sample_bridge_conditioned(BridgeLaw::Uniform { m: 3 }, 1, &mut r).unwrap(), vec![0]);
    }

    #[test]
    fn small_bridges_are_uniform() {
        for (ell, trials) in [(2usize, 100_000usize), (3, 100_000), (4, 100_000)] {
            let all = brute_bridges(ell);
            assert_eq!(all.len() as u64, binom(2 * ell as u64 - 1, ell as u64 - 1));
            let mut r = rng::rng(ell as u64);
            let mut counts: HashMap<Vec<i64>, usize> = HashMap::new();
            for _ in 0..trials {
                let b = sample_bridge_conditioned(BridgeLaw::Geometric, ell, &mut r).unwrap();
                assert!(all.contains(&b));
                *counts.entry(b).or_default() += 1;
            }
            if ell == 2 {
                let sd = (trials as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
                for c in counts.values() {
                    assert!((*c as f64 - trials as f64 / 3.0).abs() < 3.0 * sd);
                }
            }
            let p = chi2_uniform(&counts, all.len(), trials);
            assert!(p > 0.001, "ell {ell} p {p}");
        }
    }

    #[test]
    fn exact_sampler_agrees_with_rejection() {
        // Rejection from the unconditioned geometric law, as an oracle.
        let ell = 3;
        let mut r = rng::rng(9);
        let trials = 40_000;
        let mut exact: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut rejected: HashMap<Vec<i64>, usize> = HashMap::new();
        for _ in 0..trials {
            *exact.entry(sample_bridge_conditioned(BridgeLaw::Geometric, ell, &mut r).unwrap()).or_default() += 1;
            loop {
                let v: Vec<i64> = (0..ell)
                    .map(|_| {
                        let mut k = -1;
                        while r.random::<bool>() {
                            k += 1;
                        }
                        k
                    })
                    .collect();
                if v.iter().sum::<i64>() == 0 {
                    *rejected.entry(v).or_default() += 1;
                    break;
                }
            }
        }
        for b in brute_bridges(ell) {
            let a = *exact.get(&b).unwrap_or(&0) as f64;
            let c = *rejected.get(&b).unwrap_or(&0) as f64;
            let p = 0.1;
            let sd = (2.0 * trials as f64 * p * (1.0 - p)).sqrt();
            assert!((a - c).abs() < 4.0 * sd, "{b:?}: {a} vs {c}");
        }
    }

    #[test]
    fn cyclic_shift_invariance() {
        let ell = 3;
        let mut r = rng::rng(21);
        let trials = 60_000;
        let mut first: HashMap<i64, usize> = HashMap::new();
        let mut last: HashMap<i64, usize> = HashMap::new();
        for _ in 0..trials {
            let b = sample_bridge_conditioned(BridgeLaw::Geometric, ell, &mut r).unwrap();
            *first.entry(b[0]).or_default() += 1;
            *last.entry(b[ell - 1]).or_default() += 1;
        }
        for x in -1..=2 {
            let a = *first.get(&x).unwrap_or(&0) as f64;
            let c = *last.get(&x).unwrap_or(&0) as f64;
            let sd = (2.0 * trials as f64 * 0.25).sqrt();
            assert!((a - c).abs() < 4.0 * sd);
        }
    }

    #[test]
    fn variance_formulas() {
        assert!((bridge_variance(BridgeLaw::Geometric, 2, 1) - 2.0 / 3.0).abs() < 1e-12);
        assert!((bridge_variance(BridgeLaw::Uniform { m: 1 }, 2, 1) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(bridge_variance(BridgeLaw::Geometric, 7, 7), 0.0);
        assert!((bridge_variance(BridgeLaw::Geometric, 5, 2) - 2.0).abs() < 1e-12);
        for k in [2usize, 3, 5, 10, 20] {
            let dp: f64 = conditioned_first_step(BridgeLaw::Geometric, k).iter().map(|&(x, p)| (x * x) as f64 * p).sum();
            assert!((dp - 2.0 * (k as f64 - 1.0) / (k as f64 + 1.0)).abs() < 1e-9, "k {k}");
        }
    }

    #[test]
    fn variance_monte_carlo_k5_j2() {
        let mut r = rng::rng(33);
        let n = 1_000_000;
        let mut s2 = 0.0;
        for _ in 0..n {
            let b = sample_bridge_conditioned(BridgeLaw::Geometric, 5, &mut r).unwrap();
            s2 += ((b[0] + b[1]) as f64).powi(2);
        }
        let v = s2 / n as f64;
        assert!((v - 2.0).abs() < 0.02, "{v}");
    }

    #[test]
    fn uniform_law_rejection() {
        let mut r = rng::rng(2);
        for ell in 1..20 {
            let b = sample_bridge_conditioned(BridgeLaw::Uniform { m: 2 }, ell, &mut r).unwrap();
            assert_eq!(b.len(), ell);
            assert_eq!(b.iter().sum::<i64>(), 0);
            assert!(b.iter().all(|x| x.abs() <= 2));
        }
    }

    #[test]
    fn label_examples() {
        let p = LukaPath::new(2, vec![0, 0]);
        let lt = looptree_from_path(&p).unwrap();
        let lab = Labelling::new(BridgeLaw::Geometric, vec![vec![1, -1]]);
        assert_eq!(label_process(&lt, &lab).unwrap(), vec![0, 1, 0]);
        let zero = Labelling::new(BridgeLaw::Geometric, vec![vec![0, 0]]);
        assert_eq!(label_process(&lt, &zero).unwrap(), vec![0, 0, 0]);
        let bad = Labelling::new(BridgeLaw::Geometric, vec![vec![0]]);
        assert_eq!(label_process(&lt, &bad), Err(Error::LengthMismatch));

        let loops = LukaPath::new(1, vec![1, 1, 1, 0]);
        let lt = looptree_from_path(&loops).unwrap();
        let lab = good_labelling_uniform(&lt, 5);
        assert!(label_process(&lt, &lab).unwrap().iter().all(|&z| z == 0));
    }

    fn formula_labels(path: &LukaPath, lab: &Labelling) -> Vec<i64> {
        // Z_j as a sum over ancestors p of the prefix of p's bridge of
        // length jump(p) - R^j_p.
        let mut ids = vec![usize::MAX; path.len() + 1];
        let mut next = 0;
        for (t, id) in ids.iter_mut().enumerate() {
            if path.jump(t) > 0 {
                *id = next;
                next += 1;
            }
        }
        (0..=path.len())
            .map(|j| {
                lukapath::ancestors(path, j)
                    .unwrap()
                    .entries
                    .iter()
                    .map(|a| lab.bridges[ids[a.time]][..a.jump - a.r].iter().sum::<i64>())
                    .sum()
            })
            .collect()
    }

    fn propagated_labels(lt: &Looptree, lab: &Labelling) -> Option<Vec<i64>> {
        // Graph walk from the root vertex; fails on any inconsistency.
        let mut adj = vec![Vec::new(); lt.vertex_count()];
        for i in 0..lt.edge_count() {
            let (a, b) = lt.edge(i);
            let x = edge_increment(lt, lab, i);
            adj[a].push((b, x));
            adj[b].push((a, -x));
        }
        let mut lab_v = vec![None; lt.vertex_count()];
        lab_v[lt.corner_vertex(0)] = Some(0i64);
        let mut stack = vec![lt.corner_vertex(0)];
        while let Some(v) = stack.pop() {
            let lv = lab_v[v].unwrap();
            for &(w, x) in &adj[v] {
                match lab_v[w] {
                    None => {
                        lab_v[w] = Some(lv + x);
                        stack.push(w);
                    }
                    Some(lw) if lw != lv + x => return None,
                    _ => {}
                }
            }
        }
        Some(lt.corner_vertices().iter().map(|&v| lab_v[v].unwrap()).collect())
    }

    proptest! {
        #[test]
        fn label_process_oracles(seed in any::<u64>()) {
            let p = random_excursion(300, seed);
            let lt = looptree_from_path(&p).unwrap();
            let lab = good_labelling_uniform(&lt, seed);
            lab.check_good().unwrap();
            let z = label_process(&lt, &lab).unwrap();
            prop_assert_eq!(z[0], 0);
            prop_assert_eq!(z[p.len()], 0);
            prop_assert!(z.windows(2).all(|w| w[1] - w[0] >= -1));
            prop_assert_eq!(&z, &formula_labels(&p, &lab));
            prop_assert_eq!(Some(z.clone()), propagated_labels(&lt, &lab));
            let vl = vertex_labels(&lt, &z);
            prop_assert!(*vl.iter().min().unwrap() <= 0 && *vl.iter().max().unwrap() >= 0);
            prop_assert_eq!(&z, &label_process_from_path(&p, BridgeLaw::Geometric, seed).unwrap());
            let j = (seed as usize) % (p.len() + 1);
            prop_assert_eq!(z[j], label_at(&p, j, BridgeLaw::Geometric, seed).unwrap());
        }
    }

    #[test]
    fn labels_are_centred() {
        let p = random_excursion(30, 77);
        let lt = looptree_from_path(&p).unwrap();
        let reps = 20_000;
        let mut sum = vec![0.0; p.len() + 1];
        let mut sq = vec![0.0; p.len() + 1];
        for s in 0..reps {
            let z = label_process(&lt, &good_labelling_uniform(&lt, s)).unwrap();
            for (j, &x) in z.iter().enumerate() {
                sum[j] += x as f64;
                sq[j] += (x * x) as f64;
            }
        }
        for j in 0..=p.len() {
            let mean = sum[j] / reps as f64;
            let var = sq[j] / reps as f64 - mean * mean;
            assert!(mean.abs() <= 3.0 * (var / reps as f64).sqrt() + 1e-12, "j {j} mean {mean}");
        }
    }
}
