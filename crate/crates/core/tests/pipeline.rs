//! End-to-end properties over random degree sequences.

use looptree::experiment;
use looptree::io;
use looptree::labels;
use looptree::loopforge::{looptree_from_path, luka_of_looptree};
use looptree::mapbij::{self, looptree_from_pointed_map, map_from_labelled_looptree};
use looptree::DegreeSequence;
use proptest::prelude::*;

/// `rho` and a list of positive parts; the leaves are implied.
fn sequence() -> impl Strategy<Value = DegreeSequence> {
    (1usize..6, prop::collection::vec(1usize..7, 0..40)).prop_map(|(rho, mut parts)| {
        parts.sort_unstable_by(|a, b| b.cmp(a));
        let text = format!("rho={rho}\nformat=parts\n{}\n", parts.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" "));
        io::parse_degrees(&text).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stats_match_definitions(seq in sequence()) {
        let st = seq.stats();
        let parts = seq.parts();
        prop_assert_eq!(parts.iter().sum::<usize>() + seq.rho(), parts.len());
        prop_assert_eq!(st.edges, parts.len());
        prop_assert_eq!(st.n, parts.iter().sum::<usize>());
        prop_assert_eq!(st.sigma2, parts.iter().map(|&k| (k * k.saturating_sub(1)) as u64).sum::<u64>());
        prop_assert_eq!(st.leaves, parts.iter().filter(|&&k| k == 0).count());
        prop_assert_eq!(st.faces, parts.iter().filter(|&&k| k > 0).count());
    }

    #[test]
    fn degree_file_round_trip(seq in sequence()) {
        let back = io::parse_degrees(&io::format_degrees(&seq)).unwrap();
        prop_assert_eq!(back, seq);
    }

    #[test]
    fn whole_pipeline(seq in sequence(), seed in any::<u64>()) {
        let path = experiment::sample_excursion(&seq, seed);
        prop_assert!(path.is_excursion());
        prop_assert_eq!(path.sorted_jumps(), seq.parts());
        let lt = looptree_from_path(&path).unwrap();
        prop_assert_eq!(&luka_of_looptree(&lt), &path);
        let lab = labels::good_labelling_uniform(&lt, seed ^ 1);
        let m = map_from_labelled_looptree(&lt, &lab).unwrap();
        experiment::check_instance(&path, &lt, &lab, &m).unwrap();

        let mut text = Vec::new();
        io::write_map(&mut text, &m).unwrap();
        let m2 = io::parse_map(std::str::from_utf8(&text).unwrap()).unwrap();
        prop_assert!(mapbij::rooted_isomorphic(&m, &m2));
        let (lt2, lab2, flipped) = looptree_from_pointed_map(&m2).unwrap();
        prop_assert!(!flipped);
        prop_assert_eq!(&lt2, &lt);
        prop_assert_eq!(&lab2.bridges, &lab.bridges);

        let z = labels::label_process(&lt, &lab).unwrap();
        let mut csv = Vec::new();
        io::write_labels_csv(&mut csv, &lt, &z).unwrap();
        let z2 = io::parse_labels_csv(std::str::from_utf8(&csv).unwrap()).unwrap();
        let lab3 = labels::labelling_from_process(&lt, &z2).unwrap();
        prop_assert_eq!(&lab3.bridges, &lab.bridges);

        let mut pcsv = Vec::new();
        io::write_path_csv(&mut pcsv, &path, seed).unwrap();
        prop_assert_eq!(io::parse_path_csv(std::str::from_utf8(&pcsv).unwrap()).unwrap(), path);
    }
}
