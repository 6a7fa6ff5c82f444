use std::collections::BTreeSet;

use chorex_core::extraction::{extract, ExtractError, Strategy, StrategyKind};
use chorex_core::semantics::{chor_enabled, AnnotatedNetwork};
use chorex_oracles::{
    rewrite_enabled, small_choreography, small_network, valid_seg_exists, BruteForce,
};

#[test]
fn engine_matches_brute_force() {
    let mut unextractable = 0;
    for seed in 0..300u64 {
        let net = small_network(seed, 3, 8);
        let root = AnnotatedNetwork::initial(net.clone(), &BTreeSet::new());
        let oracle = valid_seg_exists(&root, 200_000);
        assert_ne!(oracle, BruteForce::Unknown, "seed {seed}");
        for kind in StrategyKind::ALL {
            let ok = match extract(&net, &BTreeSet::new(), Strategy { kind, seed }, false) {
                Ok(_) => true,
                Err(ExtractError::NoValidSeg(_)) => false,
                Err(e) => panic!("seed {seed}: {e}"),
            };
            assert_eq!(ok, oracle == BruteForce::Exists, "seed {seed} {kind}\n{net}");
        }
        unextractable += usize::from(oracle == BruteForce::None);
    }
    assert!(unextractable > 0, "sample has no unextractable network");
}

#[test]
fn enablement_matches_rewrites() {
    for seed in 0..300u64 {
        let c = small_choreography(seed);
        let mut bodies = vec![c.main.clone()];
        bodies.extend(c.procedures.values().cloned());
        for b in bodies {
            let scanned: BTreeSet<_> = chor_enabled(&c, &b).into_iter().map(|(a, _)| a).collect();
            assert!(rewrite_enabled(&c, &b, 4).is_subset(&scanned), "seed {seed}: {c}");
            assert!(scanned.is_subset(&rewrite_enabled(&c, &b, 7)), "seed {seed}: {c}");
        }
    }
}
