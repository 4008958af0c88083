use rand::Rng as _;

use crate::degseq::DegreeSequence;
use crate::lukapath::{sample_bridge, vervaat_discrete, LukaPath};
use crate::rng;

/// Degree sequence with `e` edges, random `rho` and parts of mixed sizes.
pub fn random_sequence(e: usize, r: &mut rng::Rng) -> DegreeSequence {
    let rho = r.random_range(1..=e);
    let mut parts = vec![0usize; e];
    let mut mass = e - rho;
    while mass > 0 {
        let k = r.random_range(0..e);
        let add = r.random_range(1..=mass.min(1 + mass / 3));
        parts[k] += add;
        mass -= add;
    }
    parts.sort_unstable_by(|a, b| b.cmp(a));
    DegreeSequence::new(rho, parts).unwrap()
}

pub fn random_excursion(max_e: usize, seed: u64) -> LukaPath {
    let mut r = rng::rng(seed);
    let e = r.random_range(1..=max_e);
    let seq = random_sequence(e, &mut r);
    vervaat_discrete(&sample_bridge(&seq, &mut r), &mut r).unwrap()
}
