//! Prescribed degree sequences and the scalar statistics derived from them.

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Half-boundary length `rho` and the non-increasing list of half face
/// degrees, zeros (leaves) included, so that `len(parts) = sum(parts) + rho`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    rho: usize,
    parts: Vec<usize>,
    counts: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub edges: usize,
    pub faces: usize,
    pub leaves: usize,
    pub sigma2: u64,
}

/// Checks the invariants of a raw `(rho, parts)` pair.
pub fn validate(rho: i64, parts: &[i64]) -> Result<()> {
    if rho <= 0 {
        return Err(Error::ZeroRho);
    }
    for (index, &value) in parts.iter().enumerate() {
        if value < 0 {
            return Err(Error::NegativePart { index, value });
        }
    }
    for i in 1..parts.len() {
        if parts[i] > parts[i - 1] {
            return Err(Error::NotSorted { index: i });
        }
    }
    let lhs = parts.iter().sum::<i64>() + rho;
    if lhs != parts.len() as i64 {
        return Err(Error::SumMismatch { lhs, len: parts.len() });
    }
    Ok(())
}

impl DegreeSequence {
    /// Builds a sequence from `rho` and its parts.
    ///
    /// When `parts` contains no zero at all, the leaves are implicit and
    /// `rho + sum(k - 1)` zeros are appended. Otherwise the list is taken
    /// literally and must satisfy `sum(parts) + rho = len(parts)`.
    pub fn new(rho: usize, parts: Vec<usize>) -> Result<Self> {
        let mut parts = parts;
        if !parts.contains(&0) {
            let zeros = (rho + parts.iter().sum::<usize>()) as i64 - parts.len() as i64;
            if zeros < 0 {
                return Err(Error::SumMismatch {
                    lhs: (rho + parts.iter().sum::<usize>()) as i64,
                    len: parts.len(),
                });
            }
            parts.extend(std::iter::repeat_n(0, zeros as usize));
        }
        let raw: Vec<i64> = parts.iter().map(|&p| p as i64).collect();
        validate(rho as i64, &raw)?;
        let mut counts = BTreeMap::new();
        for &p in &parts {
            *counts.entry(p).or_insert(0) += 1;
        }
        Ok(DegreeSequence { rho, parts, counts })
    }

    /// Sequence with `counts[k]` parts equal to `k` for each `k >= 1`; zeros
    /// are completed from the identity `f(0) = rho + sum (k-1) f(k)`.
    pub fn from_counts(rho: usize, counts: &[(usize, usize)]) -> Result<Self> {
        let mut parts = Vec::new();
        let mut sorted: Vec<(usize, usize)> = counts.iter().copied().filter(|&(k, _)| k > 0).collect();
        sorted.sort_by(|a, b| b.0.cmp(&a.0));
        for (k, c) in sorted {
            parts.extend(std::iter::repeat_n(k, c));
        }
        Self::new(rho, parts)
    }

    /// `faces` inner faces of degree 4 and a boundary of length 2.
    pub fn quadrangulation(faces: usize) -> Self {
        Self::from_counts(1, &[(2, faces)]).expect("quadrangulation sequence is valid")
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// `f(k)`, the number of parts equal to `k`.
    pub fn count(&self, k: usize) -> usize {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    /// Pairs `(k, f(k))` with `f(k) > 0`, `k` decreasing.
    pub fn counts(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.counts.iter().rev().map(|(&k, &c)| (k, c))
    }

    pub fn n(&self) -> usize {
        self.parts.len() - self.rho
    }

    pub fn edges(&self) -> usize {
        self.parts.len()
    }

    pub fn max_part(&self) -> usize {
        self.parts.first().copied().unwrap_or(0)
    }

    pub fn sigma2(&self) -> u64 {
        self.counts.iter().map(|(&k, &c)| (k * k.saturating_sub(1) * c) as u64).sum()
    }

    pub fn stats(&self) -> Stats {
        let leaves = self.count(0);
        Stats {
            n: self.n(),
            edges: self.edges(),
            faces: self.edges() - leaves,
            leaves,
            sigma2: self.sigma2(),
        }
    }

    /// `sum over k <= delta * sigma of k(k-1) f(k)`.
    pub fn sigma2_truncated(&self, delta: f64) -> Result<u64> {
        let s2 = self.sigma2();
        if s2 == 0 {
            return Err(Error::ZeroSigma);
        }
        let threshold = delta * (s2 as f64).sqrt() + 1e-9;
        Ok(self
            .counts
            .iter()
            .filter(|(&k, _)| (k as f64) <= threshold)
            .map(|(&k, &c)| (k * k.saturating_sub(1) * c) as u64)
            .sum())
    }
}

/// Parameters of the limit objects: Gaussian weight `theta0`, jump weights
/// `thetas`, boundary `rho`, loop-distance parameter `a` and label variance
/// `sigma2_label`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaParams {
    pub theta0: f64,
    pub thetas: Vec<f64>,
    pub rho: f64,
    pub a: f64,
    pub sigma2_label: f64,
}

impl ThetaParams {
    pub fn new(theta0: f64, thetas: Vec<f64>, rho: f64) -> Result<Self> {
        let p = ThetaParams { theta0, thetas, rho, a: 0.0, sigma2_label: 1.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if !(self.theta0 >= 0.0) || !(self.rho >= 0.0) || !(self.a >= 0.0) || !(self.sigma2_label >= 0.0) {
            return bad("theta0, rho, a and sigma2 must be nonnegative");
        }
        if self.thetas.iter().any(|t| !(*t >= 0.0)) {
            return bad("thetas must be nonnegative");
        }
        if self.thetas.windows(2).any(|w| w[1] > w[0]) {
            return bad("thetas must be non-increasing");
        }
        let total = self.theta0 * self.theta0 + self.thetas.iter().map(|t| t * t).sum::<f64>();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!("theta0^2 + sum theta_i^2 = {total} != 1")));
        }
        Ok(())
    }
}

/// A sequence with large parts close to `theta_i * sigma` and small parts
/// (twos, then ones, then leaves) carrying the remaining `sigma^2` mass.
///
/// Large parts are rounded randomly (unbiased) using `seed`; `rho` is
/// `max(1, round(params.rho * sigma))`.
pub fn discretize_theta(params: &ThetaParams, target_sigma2: u64, seed: u64) -> Result<DegreeSequence> {
    params.validate()?;
    if target_sigma2 == 0 {
        return Err(Error::Infeasible("target sigma^2 must be positive".into()));
    }
    let sigma = (target_sigma2 as f64).sqrt();
    let mut rng = rng::rng(seed);
    let mut big = Vec::new();
    let mut used: u64 = 0;
    for &t in &params.thetas {
        let x = t * sigma;
        let fl = x.floor();
        let k = if rng.random::<f64>() < x - fl { fl + 1.0 } else { fl } as usize;
        if k <= 2 {
            continue;
        }
        used += (k * (k - 1)) as u64;
        big.push(k);
    }
    if used as f64 > target_sigma2 as f64 * 1.05 {
        return Err(Error::Infeasible(format!(
            "large parts alone give sigma^2 = {used} > target {target_sigma2}"
        )));
    }
    let twos = ((target_sigma2 - used.min(target_sigma2)) as f64 / 2.0).round() as usize;
    let rho = ((params.rho * sigma).round() as usize).max(1);
    let mut counts: Vec<(usize, usize)> = big.iter().map(|&k| (k, 1)).collect();
    counts.push((2, twos));
    let seq = DegreeSequence::from_counts(rho, &counts)?;
    let s2 = seq.sigma2() as f64;
    if (s2 - target_sigma2 as f64).abs() > 0.05 * target_sigma2 as f64 {
        return Err(Error::Infeasible(format!("sigma^2 = {s2} is not within 5% of {target_sigma2}")));
    }
    Ok(seq)
}
