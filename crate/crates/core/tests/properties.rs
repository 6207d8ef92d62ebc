use std::collections::{BTreeSet, HashSet};

use pn2sc::init::initialize_statechart;
use pn2sc::io::StatechartDocument;
use pn2sc::reduce::{and_rule, assign_hyperedges, create_top, fixpoint_observed, or_rule, Firing, Side};
use pn2sc::*;
use proptest::prelude::*;

/// Random net over `n_places` places; each transition picks pre/post subsets.
fn arb_net() -> impl Strategy<Value = ModelStore> {
    (1usize..7).prop_flat_map(|n_places| {
        let subset = proptest::collection::btree_set(0..n_places, 0..=n_places.min(3));
        proptest::collection::vec((subset.clone(), subset), 0..8).prop_map(move |ts| {
            let mut pn = ModelStore::new();
            let places: Vec<_> = (0..n_places).map(|i| pn.create(ElementKind::Place, format!("P{i}"))).collect();
            for (i, (pre, post)) in ts.into_iter().enumerate() {
                let t = pn.create(ElementKind::Transition, format!("T{i}"));
                for p in pre {
                    pn.add_ref(t, Slot::Prep, places[p]).unwrap();
                }
                for p in post {
                    pn.add_ref(t, Slot::Postp, places[p]).unwrap();
                }
            }
            pn
        })
    })
}

fn arb_sp_net() -> impl Strategy<Value = ModelStore> {
    (1usize..150, any::<u64>(), 2usize..6, 0.0f64..=1.0).prop_map(|(n, seed, bf, prob)| {
        let spec = GenSpec {
            branch_factor_max: bf,
            parallel_prob: prob,
            ..GenSpec::new(n, seed)
        };
        generate_sp_net(&spec).unwrap().to_store().unwrap()
    })
}

/// Deepest compound containing every basic, found by intersecting complete
/// ancestor sets.
fn brute_force_nca(sc: &ModelStore, basics: &BTreeSet<ElementId>) -> Option<ElementId> {
    let ancestor_set = |b: ElementId| {
        let mut set = HashSet::new();
        let mut cur = b;
        while let Some(c) = sc.single(cur, Slot::Rcontains).unwrap() {
            set.insert(c);
            cur = c;
        }
        set
    };
    let mut common: Option<HashSet<ElementId>> = None;
    for &b in basics {
        let s = ancestor_set(b);
        common = Some(match common {
            None => s,
            Some(c) => c.intersection(&s).copied().collect(),
        });
    }
    let depth = |mut x: ElementId| {
        let mut d = 0;
        while let Some(c) = sc.container(x) {
            d += 1;
            x = c;
        }
        d
    };
    common?.into_iter().max_by_key(|&c| depth(c))
}

fn check_success_shape(sc: &ModelStore, result: &ReductionResult) {
    let root = result.statechart_root.unwrap();
    let top = sc.single(root, Slot::TopState).unwrap().unwrap();
    for id in sc.live_ids() {
        let kind = sc.kind(id).unwrap();
        if kind.is_containable() && id != top {
            assert!(sc.ancestors(id).contains(&top), "{id} not under the top state");
        }
        if kind == ElementKind::And {
            for &c in sc.refs(id, Slot::Contains).unwrap() {
                let ck = sc.kind(c).unwrap();
                assert!(ck == ElementKind::Or || ck == ElementKind::HyperEdge, "AND child is a {ck}");
            }
        }
        if kind == ElementKind::Basic {
            assert_eq!(sc.kind(sc.container(id).unwrap()).unwrap(), ElementKind::Or);
        }
    }
    for he in sc.all_of_kind(ElementKind::HyperEdge) {
        let mut n = sc.refs_as_set(he, Slot::Next).unwrap();
        n.extend(sc.refs(he, Slot::Rnext).unwrap());
        let expected = if n.is_empty() { Some(top) } else { brute_force_nca(sc, &n) };
        assert_eq!(sc.container(he), expected, "hyperedge {he}");
    }
}

fn check_trace_coverage(pn: &ModelStore, sc: &ModelStore, trace: &TraceMap) {
    for p in pn.all_of_kind(ElementKind::Place) {
        let or = trace.or_of(p).unwrap();
        assert!(sc.is_live(or));
        assert_eq!(sc.kind(or).unwrap(), ElementKind::Or);
        assert_eq!(sc.container(or), None, "OR of a live place is nested");
    }
}

fn counts(pn: &ModelStore, sc: &ModelStore) -> [i64; 4] {
    [
        sc.count(ElementKind::Or) as i64,
        sc.count(ElementKind::And) as i64,
        pn.count(ElementKind::Place) as i64,
        pn.count(ElementKind::Transition) as i64,
    ]
}

/// Runs the whole pipeline step by step, checking every invariant on the way.
fn run_checked(pn0: &ModelStore) -> (ModelStore, ReductionResult) {
    let mut pn = pn0.clone();
    let (mut sc, mut trace) = initialize_statechart(&pn).unwrap();

    // Count law and wiring bijection.
    assert_eq!(sc.count(ElementKind::Or), pn.count(ElementKind::Place));
    assert_eq!(sc.count(ElementKind::Basic), pn.count(ElementKind::Place));
    assert_eq!(sc.count(ElementKind::HyperEdge), pn.count(ElementKind::Transition));
    let mut arcs = BTreeSet::new();
    for t in pn.all_of_kind(ElementKind::Transition) {
        for &p in pn.refs(t, Slot::Prep).unwrap() {
            arcs.insert((trace.place_to_basic[&p], trace.transition_to_hyperedge[&t], true));
        }
        for &p in pn.refs(t, Slot::Postp).unwrap() {
            arcs.insert((trace.place_to_basic[&p], trace.transition_to_hyperedge[&t], false));
        }
    }
    let mut links = BTreeSet::new();
    for b in sc.all_of_kind(ElementKind::Basic) {
        for &h in sc.refs(b, Slot::Next).unwrap() {
            links.insert((b, h, true));
        }
        for &h in sc.refs(b, Slot::Rnext).unwrap() {
            links.insert((b, h, false));
        }
    }
    assert_eq!(arcs, links);
    check_trace_coverage(&pn, &sc, &trace);

    let basics = sc.all_of_kind(ElementKind::Basic);
    let hyperedges = sc.all_of_kind(ElementKind::HyperEdge);
    let budget = pn.count(ElementKind::Place) + pn.count(ElementKind::Transition);

    // Individual passes, checking trace coverage after each.
    let mut passes = 0;
    loop {
        let mut applied = false;
        for side in [Side::Pre, Side::Post] {
            applied |= and_rule(&mut pn, &mut sc, side, &mut trace).unwrap().applied;
            check_trace_coverage(&pn, &sc, &trace);
        }
        applied |= or_rule(&mut pn, &mut sc, &mut trace).unwrap().applied;
        check_trace_coverage(&pn, &sc, &trace);
        sc.check_invariants().unwrap();
        pn.check_invariants().unwrap();
        passes += 1;
        assert!(passes <= budget + 1, "no termination");
        if !applied {
            break;
        }
    }

    // Replaying with the fixpoint driver gives the same outcome, and every
    // firing obeys its count delta.
    let mut pn2 = pn0.clone();
    let (mut sc2, mut trace2) = initialize_statechart(&pn2).unwrap();
    let mut prev = counts(&pn2, &sc2);
    let mut firings = 0;
    let mut observe = |f: &Firing, pn: &ModelStore, sc: &ModelStore| {
        let now = counts(pn, sc);
        let delta: Vec<i64> = now.iter().zip(prev).map(|(a, b)| a - b).collect();
        let law = match *f {
            Firing::And { arity, .. } => vec![1, 1, -(arity as i64 - 1), 0],
            Firing::Or { merged: true, .. } => vec![-1, 0, -1, -1],
            Firing::Or { merged: false, .. } => vec![0, 0, 0, -1],
        };
        assert_eq!(delta, law, "{f:?}");
        prev = now;
        firings += 1;
    };
    fixpoint_observed(&mut pn2, &mut sc2, &mut trace2, &mut observe).unwrap();
    assert!(firings <= budget);
    assert_eq!(counts(&pn, &sc), counts(&pn2, &sc2));

    assert_eq!(sc.all_of_kind(ElementKind::Basic), basics);
    assert_eq!(sc.all_of_kind(ElementKind::HyperEdge), hyperedges);

    let result = create_top(&pn, &mut sc).unwrap();
    assert_eq!(result.is_success(), result.top_ors == 1);
    if result.is_success() {
        assign_hyperedges(&mut sc).unwrap();
        check_success_shape(&sc, &result);
    } else {
        assert_eq!(sc.count(ElementKind::Statechart), 0);
    }
    assert_eq!(sc.all_of_kind(ElementKind::Basic), basics);
    assert_eq!(sc.all_of_kind(ElementKind::HyperEdge), hyperedges);
    sc.check_invariants().unwrap();
    (sc, result)
}

proptest! {
    #[test]
    fn arbitrary_nets_keep_invariants(pn in arb_net()) {
        let (sc, result) = run_checked(&pn);
        let (sc2, result2) = create_statechart(&pn).unwrap();
        prop_assert_eq!(result, result2);
        if result.is_success() {
            prop_assert_eq!(write_statechart(&sc, &result).unwrap(), write_statechart(&sc2, &result2).unwrap());
        }
    }

    #[test]
    fn generated_nets_reduce(pn in arb_sp_net()) {
        let (sc, result) = run_checked(&pn);
        prop_assert!(result.is_success());
        prop_assert_eq!(sc.count(ElementKind::Basic), pn.count(ElementKind::Place));
        prop_assert_eq!(sc.count(ElementKind::HyperEdge), pn.count(ElementKind::Transition));

        let bytes = write_statechart(&sc, &result).unwrap();
        let back = read_statechart(&bytes).unwrap();
        prop_assert!(validate_full(&back, &sc).passed);
        prop_assert!(validate_counts(&back, &sc).passed);
        prop_assert_eq!(StatechartDocument::from_store(&back).unwrap().to_json(), bytes);
    }

    #[test]
    fn generator_laws(n in 1usize..400, seed in any::<u64>()) {
        let spec = GenSpec::new(n, seed);
        let doc = generate_sp_net(&spec).unwrap();
        prop_assert_eq!(doc.places.len(), n);
        prop_assert!(doc.transitions.len() + 1 >= n && doc.transitions.len() <= 2 * n);
        prop_assert_eq!(doc.to_json(), generate_sp_net(&spec).unwrap().to_json());
        prop_assert_eq!(PetriNetDocument::from_json(&doc.to_json()).unwrap(), doc);
    }

    #[test]
    fn store_invariants_under_random_edits(ops in proptest::collection::vec((0u8..6, any::<u16>(), any::<u16>()), 0..60)) {
        let mut m = ModelStore::new();
        let mut ids: Vec<ElementId> = Vec::new();
        for (op, a, b) in ops {
            let pick = |x: u16| (!ids.is_empty()).then(|| ids[x as usize % ids.len()]);
            match op {
                0 => ids.push(m.create(ElementKind::Place, "p")),
                1 => ids.push(m.create(ElementKind::Transition, "t")),
                2 => ids.push(m.create(ElementKind::Or, "")),
                3 => ids.push(m.create(ElementKind::Basic, "b")),
                4 => {
                    if let (Some(x), Some(y)) = (pick(a), pick(b)) {
                        for slot in [Slot::Prep, Slot::Postp, Slot::Contains, Slot::Rcontains] {
                            let _ = m.add_ref(x, slot, y);
                        }
                    }
                }
                _ => {
                    if let Some(x) = pick(a) {
                        let _ = m.delete(x);
                    }
                }
            }
            prop_assert!(m.check_invariants().is_ok(), "{:?}", m.check_invariants());
        }
        for kind in ElementKind::ALL {
            let all = m.all_of_kind(kind);
            prop_assert!(all.windows(2).all(|w| w[0] < w[1]));
        }
    }
}

#[test]
fn corpus_fixtures_match_expectations() {
    for fixture in generate_known_corpus() {
        let pn = fixture.net.to_store().unwrap();
        let (sc, result) = run_checked(&pn);
        match &fixture.expected {
            Expected::Statechart(doc) => {
                assert!(result.is_success(), "{}", fixture.name);
                assert_eq!(StatechartDocument::from_store(&sc).unwrap(), *doc, "{}", fixture.name);
                let expected = doc.to_store().unwrap();
                assert!(validate_full(&sc, &expected).passed, "{}", fixture.name);
            }
            Expected::Irreducible {
                top_ors,
                places,
                transitions,
            } => {
                assert_eq!(
                    (result.status, result.top_ors, result.remaining_places, result.remaining_transitions),
                    (Status::Irreducible, *top_ors, *places, *transitions),
                    "{}",
                    fixture.name
                );
            }
        }
    }
}

#[test]
fn reduced_net_stays_reduced() {
    let pn = generate_sp_net(&GenSpec::new(60, 5)).unwrap().to_store().unwrap();
    let mut pn = pn.clone();
    let (mut sc, mut trace) = initialize_statechart(&pn).unwrap();
    pn2sc::reduce::fixpoint(&mut pn, &mut sc, &mut trace).unwrap();
    assert_eq!((pn.count(ElementKind::Place), pn.count(ElementKind::Transition)), (1, 0));
    let stats = pn2sc::reduce::fixpoint(&mut pn, &mut sc, &mut trace).unwrap();
    assert_eq!((stats.and_firings, stats.or_firings), (0, 0));
}
