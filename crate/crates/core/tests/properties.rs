use std::collections::BTreeSet;
use std::sync::Arc;

use chorex_core::epp::{epp, merge};
use chorex_core::equiv::{programs_bisimilar, SearchOrder, SimBudget, StateKeys};
use chorex_core::extraction::{extract, Strategy as Extraction, StrategyKind};
use chorex_core::semantics::{enabled_steps, AnnotatedNetwork};
use chorex_core::testgen::{amend, generate, GenParams};
use chorex_core::{parse_choreography, parse_network, Behaviour, Program};
use chorex_oracles::small_network;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = GenParams> {
    (1usize..12, 2usize..5, 0usize..3, 0usize..3, any::<u64>()).prop_map(
        |(size, processes, ifs, defs, seed)| GenParams { size, processes, ifs, defs, seed },
    )
}

fn behaviour() -> impl Strategy<Value = Behaviour> {
    let leaf = prop_oneof![Just(Behaviour::Nil), Just(Behaviour::call("X"))];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|k| Behaviour::send("q", "e", k)),
            inner.clone().prop_map(|k| Behaviour::receive("q", "x", k)),
            inner.clone().prop_map(|k| Behaviour::select("q", "l", k)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Behaviour::cond("c", a, b)),
            inner.clone().prop_map(|k| Behaviour::offer("q", [("l", k)]).unwrap()),
            inner.clone().prop_map(|k| Behaviour::offer("q", [("r", k)]).unwrap()),
            (inner.clone(), inner).prop_map(|(a, b)| Behaviour::offer("q", [("l", a), ("r", b)]).unwrap()),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(std::env::var("PROPTEST_CASES").ok().and_then(|v| v.parse().ok()).unwrap_or(64)))]

    #[test]
    fn choreography_text_round_trips(p in params()) {
        if let Ok(c) = generate(&p) {
            prop_assert_eq!(parse_choreography(&c.to_string()).unwrap(), c);
        }
    }

    #[test]
    fn network_text_round_trips(seed in any::<u64>()) {
        let n = small_network(seed, 3, 8);
        prop_assert_eq!(parse_network(&n.to_string()).unwrap(), n);
    }

    #[test]
    fn merge_is_commutative(a in behaviour(), b in behaviour()) {
        let (a, b) = (Arc::new(a), Arc::new(b));
        prop_assert_eq!(merge(&a, &b).ok(), merge(&b, &a).ok());
    }

    #[test]
    fn merge_is_associative(a in behaviour(), b in behaviour(), c in behaviour()) {
        let (a, b, c) = (Arc::new(a), Arc::new(b), Arc::new(c));
        let left = merge(&a, &b).and_then(|ab| merge(&ab, &c)).ok();
        let right = merge(&b, &c).and_then(|bc| merge(&a, &bc)).ok();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn merge_is_idempotent(a in behaviour()) {
        let a = Arc::new(a);
        prop_assert_eq!(merge(&a, &a).unwrap(), a);
    }

    #[test]
    fn labels_determine_successors(seed in any::<u64>()) {
        let root = AnnotatedNetwork::initial(small_network(seed, 3, 8), &BTreeSet::new());
        let mut todo = vec![root];
        let mut seen = BTreeSet::new();
        while let Some(an) = todo.pop() {
            if seen.len() > 200 || !seen.insert(an.net.to_string() + &an.marking.bits()) {
                continue;
            }
            let steps = enabled_steps(&an);
            for (i, s) in steps.iter().enumerate() {
                for t in &steps[i + 1..] {
                    prop_assert!(s.label != t.label || s.successor == t.successor);
                }
            }
            todo.extend(steps.into_iter().map(|s| s.successor));
        }
    }

    #[test]
    fn amended_choreographies_project(p in params()) {
        if let Ok(c) = generate(&p) {
            let amended = amend(&c).unwrap();
            prop_assert!(epp(&amended).is_ok(), "{}", amended);
        }
    }

    #[test]
    fn extraction_of_projection_is_bisimilar(p in params()) {
        let Ok(c) = generate(&p).and_then(|c| amend(&c)) else { return Ok(()) };
        let net = epp(&c).unwrap();
        let kind = StrategyKind::ALL[(p.seed % 10) as usize];
        let out = extract(&net, &BTreeSet::new(), Extraction { kind, seed: p.seed }, true).unwrap();
        let v = programs_bisimilar(
            &Program::single(c),
            &out.program,
            SimBudget::default(),
            SearchOrder::BreadthFirst,
            StateKeys::Projected,
        );
        prop_assert!(v.is_yes(), "{:?}", v);
    }

    #[test]
    fn verdicts_ignore_search_order_and_keys(p in params(), q in params()) {
        let (Ok(a), Ok(b)) = (generate(&p), generate(&q)) else { return Ok(()) };
        let (a, b) = (Program::single(a), Program::single(b));
        let budget = SimBudget { max_pairs: 20_000, max_millis: 5_000 };
        let verdicts: Vec<_> = [
            (SearchOrder::BreadthFirst, StateKeys::Projected),
            (SearchOrder::DepthFirst, StateKeys::Projected),
            (SearchOrder::BreadthFirst, StateKeys::Structural),
            (SearchOrder::DepthFirst, StateKeys::Structural),
        ]
        .into_iter()
        .map(|(o, k)| programs_bisimilar(&a, &b, budget, o, k).answer)
        .filter(|v| *v != chorex_core::equiv::Answer::Exhausted)
        .collect();
        prop_assert!(verdicts.windows(2).all(|w| w[0] == w[1]), "{:?}", verdicts);
    }
}
