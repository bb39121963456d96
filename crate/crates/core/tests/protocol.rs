use std::collections::HashSet;

use popleak::detect::{build_robust_detect, build_truncated_ideal};
use popleak::{parse, serialize, NamedReaction, Output, Protocol, Reaction, SpeciesDecl, SpeciesId};
use proptest::prelude::*;

fn decls(names: &[&str]) -> Vec<SpeciesDecl> {
    names
        .iter()
        .map(|n| SpeciesDecl::new(*n, Output::Detect))
        .collect()
}

#[test]
fn catalytic_examples() {
    let p = Protocol::from_named(
        decls(&["A", "B", "C", "D"]),
        &[
            NamedReaction::new("A", "C", "B", "C"),
            NamedReaction::new("A", "B", "A", "D"),
        ],
    )
    .unwrap();
    let part = p.classify_catalytic();
    assert_eq!(part.catalytic_names(&p), ["C"]);
    let non: Vec<&str> = part
        .non_catalytic
        .iter()
        .map(|&id| p.species_by_id(id).name.as_str())
        .collect();
    assert_eq!(non, ["A", "B", "D"]);

    let p = Protocol::from_named(decls(&["L", "A", "B"]), &[NamedReaction::new("L", "L", "A", "B")])
        .unwrap();
    assert!(!p.classify_catalytic().is_catalytic(p.find("L").unwrap()));

    let p = build_robust_detect(9).unwrap();
    assert_eq!(p.classify_catalytic().catalytic_names(&p), ["D"]);
}

#[test]
fn round_trip_detection_protocols() {
    for s in [1, 2, 3, 14, 17] {
        let p = build_robust_detect(s).unwrap();
        let text = serialize(&p);
        let q = parse(&text).unwrap();
        assert!(q.same_structure(&p), "s={s}");
        assert_eq!(serialize(&q), text);
    }
    let text = serialize(&build_robust_detect(2).unwrap());
    assert!(text.lines().any(|l| l == "reaction X2 + N -> N + N"));
}

#[test]
fn parse_small_document() {
    let p = parse("species D detect\nspecies N nondetect\nreaction D + N -> D + D\n").unwrap();
    assert_eq!(p.len(), 2);
    assert_eq!(p.reactions().len(), 1);
    let (d, n) = (p.find("D").unwrap(), p.find("N").unwrap());
    assert_eq!(p.apply(n, d), Some((d, d)));
}

#[test]
fn min_plus_one_and_reset_laws() {
    for s in 1..=17u32 {
        let p = build_robust_detect(s).unwrap();
        let level = |id: SpeciesId| p.species_by_id(id).level.unwrap();
        for i in 1..s {
            for j in 1..s {
                let (c, d) = p.apply(SpeciesId(i), SpeciesId(j)).unwrap();
                assert_eq!((level(c), level(d)), (i.min(j) + 1, i.min(j) + 1));
            }
        }
        let d = SpeciesId(0);
        for other in (2..=s).chain([s + 1]) {
            assert_eq!(p.apply(d, SpeciesId(other)), Some((d, SpeciesId(1))));
            assert_eq!(p.apply(SpeciesId(other), d), Some((SpeciesId(1), d)));
        }
        assert_eq!(p.apply(d, SpeciesId(1)), None);
        assert_eq!(p.apply(d, d), None);
    }
}

/// The ideal truncated at `cap` agrees with the finite protocol under the
/// neutral/collapsed renaming on every pair except `Xi + Xcap`, `i < cap`.
#[test]
fn truncated_ideal_matches_finite_protocol() {
    for cap in 1..=12u32 {
        let finite = build_robust_detect(cap).unwrap();
        let ideal = build_truncated_ideal(cap).unwrap();
        assert_eq!(finite.len(), ideal.len());
        let q = finite.len() as u32;
        for a in 0..q {
            for b in 0..q {
                let (ia, ib) = (SpeciesId(a), SpeciesId(b));
                let exception = (1..cap).contains(&a.min(b)) && a.max(b) == cap;
                if exception {
                    assert_eq!(finite.apply(ia, ib), None);
                    let m = SpeciesId(a.min(b) + 1);
                    assert_eq!(ideal.apply(ia, ib), Some((m, m)));
                } else {
                    assert_eq!(finite.apply(ia, ib), ideal.apply(ia, ib), "cap={cap} {a},{b}");
                }
            }
        }
    }
    // With a single level there is no exception and the documents coincide.
    let ideal = build_truncated_ideal(1).unwrap();
    let renamed = parse(&serialize(&ideal).replace("Xinf", "N")).unwrap();
    assert!(renamed.same_structure(&build_robust_detect(1).unwrap()));
}

/// Random protocols built from a pool of names: unordered rules, each pair at most once.
fn arb_protocol() -> impl Strategy<Value = Protocol> {
    (1usize..7)
        .prop_flat_map(|q| {
            let outputs = prop::collection::vec(any::<bool>(), q);
            let rules = prop::collection::vec((0..q, 0..q, 0..q, 0..q), 0..12);
            (Just(q), outputs, rules)
        })
        .prop_map(|(q, outputs, rules)| {
            let species: Vec<SpeciesDecl> = (0..q)
                .map(|i| {
                    let out = if outputs[i] { Output::Detect } else { Output::Nondetect };
                    SpeciesDecl::new(format!("S{i}"), out)
                })
                .collect();
            let mut seen = HashSet::new();
            let reactions: Vec<Reaction> = rules
                .into_iter()
                .filter(|&(a, b, _, _)| seen.insert((a.min(b), a.max(b))))
                .map(|(a, b, c, d)| {
                    Reaction::new(SpeciesId::from(a), SpeciesId::from(b), SpeciesId::from(c), SpeciesId::from(d))
                })
                .collect();
            Protocol::new(species, &reactions).unwrap()
        })
}

proptest! {
    #[test]
    fn parse_serialize_round_trip(p in arb_protocol()) {
        let q = parse(&serialize(&p)).unwrap();
        prop_assert!(q.same_structure(&p));
    }

    #[test]
    fn apply_preserves_catalysts_and_is_deterministic(p in arb_protocol()) {
        let part = p.classify_catalytic();
        let q = p.len() as u32;
        for a in 0..q {
            for b in 0..q {
                let (a, b) = (SpeciesId(a), SpeciesId(b));
                let r = p.apply(a, b);
                prop_assert_eq!(r, p.apply(a, b));
                if let Some((c, d)) = r {
                    for &cat in &part.catalytic {
                        let before = [a, b].iter().filter(|&&x| x == cat).count();
                        let after = [c, d].iter().filter(|&&x| x == cat).count();
                        prop_assert_eq!(before, after);
                    }
                    if a != b {
                        // Reverse order gives swapped products.
                        prop_assert_eq!(p.apply(b, a), Some((d, c)));
                    }
                }
            }
        }
        prop_assert_eq!(part.catalytic.len() + part.non_catalytic.len(), p.len());
    }
}
