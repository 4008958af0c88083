//! Discrete Łukasiewicz paths and their functionals.
//!
//! A path with `E` edges starts at `X_0 = start`, jumps by `jump(i) >= 0` at
//! each integer time `1..=E` and decreases at unit speed in between. The left
//! limit at time `i` is `S_i = X_{i-}`, with `S_0 = 0`, so the jump at time 0
//! has size `start`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::degseq::DegreeSequence;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LukaPath {
    start: usize,
    jumps: Vec<usize>,
}

/// One strict ancestor `time` of a query time, with the jump at that time and
/// `r = inf_{[time, j]} X - X_{time-}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ancestor {
    pub time: usize,
    pub jump: usize,
    pub r: usize,
}

/// Strict ancestors of a time `j`, increasing. Time 0 (the root cycle) is
/// included whenever `j >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AncestralRecord {
    pub j: usize,
    pub entries: Vec<Ancestor>,
}

impl AncestralRecord {
    /// Ancestors at positive jump times, i.e. without the root cycle.
    pub fn jump_ancestors(&self) -> impl Iterator<Item = &Ancestor> {
        self.entries.iter().filter(|a| a.time > 0)
    }

    /// `sum of R` over all ancestors, which equals `X_{j-}`.
    pub fn total_r(&self) -> usize {
        self.entries.iter().map(|a| a.r).sum()
    }
}

impl LukaPath {
    /// Path with `X_0 = start` and jumps `jumps[i - 1]` at times `i = 1..=E`.
    pub fn new(start: usize, jumps: Vec<usize>) -> Self {
        LukaPath { start, jumps }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// Number of edges `E`.
    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    /// Jumps at times `1..=E`.
    pub fn jumps(&self) -> &[usize] {
        &self.jumps
    }

    /// Jump at time `i`; time 0 carries `start`.
    pub fn jump(&self, i: usize) -> usize {
        if i == 0 {
            self.start
        } else {
            self.jumps[i - 1]
        }
    }

    /// `S_i = X_{i-}` for `i = 0..=E`.
    pub fn lefts(&self) -> Vec<i64> {
        let mut s = Vec::with_capacity(self.jumps.len() + 1);
        s.push(0);
        let mut x = self.start as i64;
        for &d in &self.jumps {
            s.push(x - 1);
            x += d as i64 - 1;
        }
        s
    }

    /// `X_i` at integer time `i`.
    pub fn value(&self, i: usize) -> i64 {
        self.start as i64 + self.jumps[..i].iter().map(|&d| d as i64).sum::<i64>() - i as i64
    }

    /// `X_{i-}` at integer time `i`.
    pub fn left(&self, i: usize) -> i64 {
        if i == 0 {
            0
        } else {
            self.value(i) - self.jumps[i - 1] as i64
        }
    }

    /// `X_t` at real time `t` in `[0, E]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let k = (t.floor() as usize).min(self.len());
        self.value(k) as f64 - (t - k as f64)
    }

    /// `X_E = 0`.
    pub fn is_bridge(&self) -> bool {
        self.start as i64 + self.jumps.iter().map(|&d| d as i64).sum::<i64>() == self.jumps.len() as i64
    }

    /// Bridge with `X_t > 0` on `[0, E)`.
    pub fn is_excursion(&self) -> bool {
        if self.start == 0 || !self.is_bridge() {
            return false;
        }
        let mut x = self.start as i64;
        for (i, &d) in self.jumps.iter().enumerate() {
            x += d as i64 - 1;
            if i + 1 < self.jumps.len() && x <= 0 {
                return false;
            }
        }
        true
    }

    /// Multiset of jumps at times `1..=E`, sorted decreasingly.
    pub fn sorted_jumps(&self) -> Vec<usize> {
        let mut v = self.jumps.clone();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }

    fn check_excursion(&self) -> Result<()> {
        if self.is_excursion() {
            Ok(())
        } else {
            Err(Error::NotExcursion)
        }
    }
}

/// Uniformly permuted bridge from `rho` to 0 with the parts as jumps.
pub fn sample_bridge<R: Rng + ?Sized>(seq: &DegreeSequence, rng: &mut R) -> LukaPath {
    let mut jumps = seq.parts().to_vec();
    jumps.shuffle(rng);
    LukaPath::new(seq.rho(), jumps)
}

/// Discrete Vervaat transform with `U` uniform on `[0, rho)`.
pub fn vervaat_discrete<R: Rng + ?Sized>(path: &LukaPath, rng: &mut R) -> Result<LukaPath> {
    if path.start == 0 {
        return Err(Error::NotABridge);
    }
    let u = rng.random_range(0..path.start);
    vervaat_at(path, u)
}

/// Vervaat transform at height `u + inf Y` with integer part `u` in `0..rho`.
pub fn vervaat_at(path: &LukaPath, u: usize) -> Result<LukaPath> {
    if !path.is_bridge() || path.start == 0 || u >= path.start {
        return Err(Error::NotABridge);
    }
    let e = path.len();
    let lefts = path.lefts();
    let inf = lefts[1..].iter().copied().min().unwrap_or(0);
    let h = inf + u as i64 + 1;
    let mut x = path.start as i64;
    let mut r = 0;
    while x != h {
        x += path.jumps[r] as i64 - 1;
        r += 1;
    }
    let mut jumps = Vec::with_capacity(e);
    jumps.extend_from_slice(&path.jumps[r..]);
    jumps.extend_from_slice(&path.jumps[..r]);
    Ok(LukaPath::new(path.start, jumps))
}

/// Calls `visit(j, stack)` for every time `j = 0..=E`, where `stack` holds the
/// strict ancestors of `j` in increasing order. Runs in `O(E)` plus the cost
/// of the visitor.
pub fn sweep_ancestors<F: FnMut(usize, &[usize])>(path: &LukaPath, lefts: &[i64], mut visit: F) {
    let mut stack: Vec<usize> = Vec::new();
    visit(0, &stack);
    for j in 1..=path.len() {
        let prev = j - 1;
        if path.jump(prev) > 0 {
            stack.push(prev);
        }
        while let Some(&top) = stack.last() {
            if lefts[top] > lefts[j] {
                stack.pop();
            } else {
                break;
            }
        }
        visit(j, &stack);
    }
}

/// Record for one `j` built from an ancestor stack.
pub fn record_from_stack(path: &LukaPath, lefts: &[i64], j: usize, stack: &[usize]) -> AncestralRecord {
    let entries = stack
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let above = stack.get(k + 1).copied().unwrap_or(j);
            Ancestor { time: i, jump: path.jump(i), r: (lefts[above] - lefts[i]) as usize }
        })
        .collect();
    AncestralRecord { j, entries }
}

/// Strict ancestors of `j` with their `R` values.
pub fn ancestors(path: &LukaPath, j: usize) -> Result<AncestralRecord> {
    if j > path.len() {
        return Err(Error::OutOfRange { index: j, max: path.len() });
    }
    let lefts = path.lefts();
    let mut stack: Vec<usize> = Vec::new();
    for k in 1..=j {
        if path.jump(k - 1) > 0 {
            stack.push(k - 1);
        }
        while stack.last().is_some_and(|&t| lefts[t] > lefts[k]) {
            stack.pop();
        }
    }
    Ok(record_from_stack(path, &lefts, j, &stack))
}

/// Parent of every time in the augmented tree (`usize::MAX` for time 0).
pub fn parents(path: &LukaPath) -> Vec<usize> {
    let lefts = path.lefts();
    let mut parent = vec![usize::MAX; path.len() + 1];
    sweep_ancestors(path, &lefts, |j, stack| {
        if let Some(&p) = stack.last() {
            parent[j] = p;
        }
    });
    parent
}

/// `C^delta_j`: sum of `R^j_r` over ancestors `r` of `j` with jump at most
/// `delta_abs`. Discrete paths have no continuous part.
pub fn continuous_part_delta(path: &LukaPath, j: usize, delta_abs: f64) -> Result<f64> {
    let rec = ancestors(path, j)?;
    Ok(rec
        .entries
        .iter()
        .filter(|a| a.jump as f64 <= delta_abs)
        .map(|a| a.r as f64)
        .sum())
}

/// `H_j`, the number of strict ancestors of `j` at positive times.
pub fn height_process(path: &LukaPath) -> Result<Vec<usize>> {
    path.check_excursion()?;
    let lefts = path.lefts();
    let mut h = vec![0; path.len() + 1];
    sweep_ancestors(path, &lefts, |j, stack| {
        h[j] = stack.iter().filter(|&&i| i > 0).count();
    });
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::rng;
    use proptest::prelude::*;

    fn brute_ancestors(path: &LukaPath, j: usize) -> Vec<Ancestor> {
        // Definition: i < j is an ancestor iff X_{i-} <= inf over [i, j] of X.
        let lefts = path.lefts();
        let mut out = Vec::new();
        for i in 0..j {
            let inf = (i + 1..=j).map(|k| lefts[k]).min().unwrap();
            if lefts[i] <= inf {
                out.push(Ancestor { time: i, jump: path.jump(i), r: (inf - lefts[i]) as usize });
            }
        }
        out
    }

    fn random_excursion(max_e: usize, seed: u64) -> LukaPath {
        crate::testutil::random_excursion(max_e, seed)
    }

    #[test]
    fn pure_slope_bridge() {
        let seq = DegreeSequence::new(2, vec![]).unwrap();
        let p = sample_bridge(&seq, &mut rng::rng(1));
        assert_eq!(p.start(), 2);
        assert_eq!(p.jumps(), &[0, 0]);
        assert!((p.value_at(1.5) - 0.5).abs() < 1e-12);
        assert_eq!(p.value(2), 0);
        let x = vervaat_discrete(&p, &mut rng::rng(2)).unwrap();
        assert_eq!(x, p);
    }

    #[test]
    fn bridge_arrangements_are_uniform() {
        let seq = DegreeSequence::new(1, vec![2, 0, 0]).unwrap();
        let mut r = rng::rng(11);
        let mut counts = [0usize; 3];
        let trials = 30_000;
        for _ in 0..trials {
            let p = sample_bridge(&seq, &mut r);
            counts[p.jumps().iter().position(|&d| d == 2).unwrap()] += 1;
        }
        let sd = (trials as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for c in counts {
            assert!((c as f64 - trials as f64 / 3.0).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn vervaat_identity_on_excursion() {
        let p = LukaPath::new(1, vec![2, 0, 0]);
        assert!(p.is_excursion());
        assert_eq!(vervaat_discrete(&p, &mut rng::rng(3)).unwrap(), p);
    }

    #[test]
    fn vervaat_rejects_non_bridge() {
        let p = LukaPath::new(1, vec![2, 0]);
        assert_eq!(vervaat_discrete(&p, &mut rng::rng(3)), Err(Error::NotABridge));
    }

    #[test]
    fn ancestor_examples() {
        let p = LukaPath::new(1, vec![1, 0]);
        let rec = ancestors(&p, 2).unwrap();
        let jumps: Vec<_> = rec.jump_ancestors().map(|a| (a.time, a.jump, a.r)).collect();
        assert_eq!(jumps, vec![(1, 1, 0)]);
        assert!(ancestors(&p, 0).unwrap().entries.is_empty());
        assert!(matches!(ancestors(&p, 3), Err(Error::OutOfRange { .. })));

        let k = 4;
        let mut jumps = vec![k];
        jumps.extend(std::iter::repeat_n(0, k));
        let p = LukaPath::new(1, jumps);
        assert!(p.is_excursion());
        for m in 2..=k + 1 {
            let rec = ancestors(&p, m).unwrap();
            let v: Vec<_> = rec.jump_ancestors().map(|a| (a.time, a.jump, a.r)).collect();
            let inf = (2..=m).map(|t| p.left(t)).min().unwrap();
            assert_eq!(v, vec![(1, k, (inf - p.left(1)) as usize)]);
        }
    }

    #[test]
    fn continuous_part_examples() {
        let k = 3;
        let p = LukaPath::new(1, vec![k, 0, 0, 0]);
        for j in 0..=p.len() {
            let c = continuous_part_delta(&p, j, 10.0).unwrap();
            assert_eq!(c, p.left(j) as f64);
            assert_eq!(continuous_part_delta(&p, j, 0.5).unwrap(), 0.0);
        }
        let r = (p.left(2) - p.left(1)) as f64;
        let c = continuous_part_delta(&p, 2, k as f64).unwrap();
        assert_eq!(c - ancestors(&p, 2).unwrap().entries[0].r as f64, r);
    }

    #[test]
    fn height_examples() {
        let p = LukaPath::new(3, vec![0, 0, 0]);
        assert_eq!(height_process(&p).unwrap(), vec![0, 0, 0, 0]);
        let p = LukaPath::new(1, vec![3, 0, 0, 0]);
        assert_eq!(height_process(&p).unwrap(), vec![0, 0, 1, 1, 1]);
        let m = 5;
        let mut jumps = vec![1; m];
        jumps.push(0);
        let p = LukaPath::new(1, jumps);
        let h = height_process(&p).unwrap();
        for j in 1..=p.len() {
            assert_eq!(h[j], j - 1);
            assert_eq!(h[j], brute_ancestors(&p, j).iter().filter(|a| a.time > 0).count());
        }
    }

    #[test]
    fn vervaat_output_is_uniform_over_excursions() {
        // All distinct excursions with jump multiset {2, 1, 0, 0} and rho = 1.
        let seq = DegreeSequence::new(1, vec![2, 1, 0, 0]).unwrap();
        let mut perms = std::collections::BTreeSet::new();
        let parts = seq.parts().to_vec();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let idx = [a, b, c, d];
                        let mut seen = idx.to_vec();
                        seen.sort();
                        seen.dedup();
                        if seen.len() == 4 {
                            let j: Vec<usize> = idx.iter().map(|&i| parts[i]).collect();
                            let p = LukaPath::new(1, j.clone());
                            if p.is_excursion() {
                                perms.insert(j);
                            }
                        }
                    }
                }
            }
        }
        let classes: Vec<Vec<usize>> = perms.into_iter().collect();
        let mut counts = vec![0usize; classes.len()];
        let mut r = rng::rng(5);
        let trials = 100_000;
        for _ in 0..trials {
            let x = vervaat_discrete(&sample_bridge(&seq, &mut r), &mut r).unwrap();
            counts[classes.iter().position(|c| c.as_slice() == x.jumps()).unwrap()] += 1;
        }
        let exp = trials as f64 / classes.len() as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - exp).powi(2) / exp).sum();
        let p = crate::mmspace::chi_square_sf(chi2, classes.len() - 1);
        assert!(p > 0.001, "chi2 {chi2} p {p} counts {counts:?}");
    }

    proptest! {
        #[test]
        fn stack_ancestors_match_definition(seed in any::<u64>()) {
            let p = random_excursion(12, seed);
            let lefts = p.lefts();
            sweep_ancestors(&p, &lefts, |j, stack| {
                let rec = record_from_stack(&p, &lefts, j, stack);
                assert_eq!(rec.entries, brute_ancestors(&p, j));
            });
        }

        #[test]
        fn conservation_and_r_identity(seed in any::<u64>()) {
            let p = random_excursion(40, seed);
            prop_assert!(p.is_excursion());
            prop_assert_eq!(p.jumps().iter().sum::<usize>() as i64 - p.len() as i64, -(p.start() as i64));
            prop_assert_eq!(*p.jumps().last().unwrap(), 0);
            for j in 0..=p.len() {
                let rec = ancestors(&p, j).unwrap();
                prop_assert_eq!(rec.total_r() as i64, p.left(j));
                for a in rec.entries {
                    prop_assert!(a.r < a.jump);
                }
            }
        }

        #[test]
        fn vervaat_gives_excursion_rotation(seed in any::<u64>(), e in 1usize..30) {
            let mut r = rng::rng(seed);
            let rho = r.random_range(1..=e);
            let mut parts = vec![0usize; e];
            for _ in 0..e - rho { parts[r.random_range(0..e)] += 1; }
            parts.sort_unstable_by(|a, b| b.cmp(a));
            let seq = DegreeSequence::new(rho, parts).unwrap();
            let y = sample_bridge(&seq, &mut r);
            prop_assert!(y.is_bridge());
            let x = vervaat_discrete(&y, &mut r).unwrap();
            prop_assert!(x.is_excursion());
            prop_assert_eq!(x.start(), rho);
            prop_assert_eq!(x.sorted_jumps(), seq.parts().to_vec());
            let rotations: Vec<Vec<usize>> = (0..e).map(|k| {
                let mut v = y.jumps()[k..].to_vec();
                v.extend_from_slice(&y.jumps()[..k]);
                v
            }).collect();
            prop_assert!(rotations.iter().any(|v| v.as_slice() == x.jumps()));
        }
    }
}
