//! Cross-module property: everything the proof checker accepts is valid in
//! every frame the searchers produce.

use dsmalc_core::calculus::{check_derivation, derive_bounded, CalculusConfig};
use dsmalc_core::frames::frame_validates;
use dsmalc_core::search::{enumerate_frames, random_frame, SearchBudget};
use dsmalc_core::syntax::{parse_sequent, RawSignature, SubexpSignature};

fn rich_sig() -> SubexpSignature {
    SubexpSignature::validate(&RawSignature {
        indices: vec!["k".into(), "c".into(), "e".into(), "w".into()],
        preceq: vec![],
        w: vec!["w".into()],
        e: vec!["e".into()],
        c: vec!["c".into()],
    })
    .unwrap()
}

#[test]
fn checked_derivations_are_valid_on_generated_frames() {
    let sig = rich_sig();
    let cfg = CalculusConfig::default();
    let goals = [
        "p1 |- p1",
        "p1 |- T",
        "![k]p1 |- p1",
        "1 |- ![k]1",
        "![w]p1 |- 1",
        "![e]p1 * p2 |- p2 * ![e]p1",
        "![c]p1 * p2 |- (![c]p1 * p2) * ![c]p1",
        "![k]p1 * ![k]p2 |- ![k](p1 * p2)",
        "p1 /\\ (p2 \\/ p3) |- p1 /\\ p2 \\/ p1 /\\ p3",
    ];
    let mut derivations = Vec::new();
    for g in goals {
        let goal = parse_sequent(g, &sig).unwrap();
        let d = derive_bounded(&sig, &goal, goal.max_formula_size())
            .unwrap()
            .unwrap_or_else(|| panic!("{g} should be derivable"));
        assert_eq!(check_derivation(&sig, &cfg, &d), Ok(()));
        derivations.push(d);
    }

    // exhaustive frames up to two worlds plus a spread of random ones
    let budget = SearchBudget::default();
    let mut frames = Vec::new();
    for n in 1..=2 {
        frames.extend(enumerate_frames(&sig, n, &budget).unwrap());
    }
    for seed in 0..10 {
        frames.push(random_frame(&sig, 1 + (seed as usize % 3), seed).unwrap());
    }
    assert!(frames.len() > 10);

    for d in &derivations {
        for (k, frame) in frames.iter().enumerate() {
            assert_eq!(
                frame_validates(frame, &d.conclusion),
                Ok(true),
                "{} fails on generated frame {k}",
                d.conclusion
            );
        }
    }

    // the checked inclusion O <= [Ri]O upgrades to equality because each
    // accessibility relation is reflexive
    for frame in &frames {
        for i in 0..frame.sig.len() {
            assert_eq!(frame.box_mask(i, frame.base.o), frame.base.o);
        }
    }
}
