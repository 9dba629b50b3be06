//! Acceptance suite: one test per headline property of the toolkit, each
//! printing a `criterion N ... PASS` line (run with `--nocapture` to see
//! them all).
//!
//! Everything here is deterministic: fixed seeds, fixed corpora, exhaustive
//! sweeps where the property calls for them.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use serde_json::Value;

use dsmalc_cli::json::{DerivationDoc, SigDoc};
use dsmalc_core::algebra::standard_corpus;
use dsmalc_core::calculus::{
    axiom_schemas, check_derivation, CalculusConfig, RuleId, StepError, CORE_AXIOMS,
};
use dsmalc_core::frames::{complex_algebra, duality_check, eval, Model};
use dsmalc_core::order::upsets;
use dsmalc_core::search::{
    find_countermodel, random_formula, soundness_fuzz_with, SearchBudget,
};
use dsmalc_core::syntax::{parse_formula, SubexpSignature};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus_path(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(rel).display().to_string()
}

fn load_sig(rel: &str) -> SubexpSignature {
    let text = std::fs::read_to_string(corpus_path(rel)).unwrap();
    let doc: SigDoc = serde_json::from_str(&text).unwrap();
    doc.to_core().unwrap()
}

fn report(criterion: &str, elapsed: Duration, detail: &str) {
    println!("criterion {criterion}: PASS ({elapsed:.2?}) - {detail}");
}

/// 500 random frames of up to 4 worlds across three signatures; every axiom
/// schema holds exhaustively over its metavariables and under 5 random
/// instantiations each. Zero violations, under a minute.
#[test]
fn criterion_1_soundness_suite() {
    let start = Instant::now();
    let sigs = [
        ("trivial", load_sig("sigs/trivial.json")),
        ("wec", load_sig("sigs/wec.json")),
        ("chain3", load_sig("sigs/chain3.json")),
    ];
    let mut frames = 0u64;
    let mut schema_checks = 0u64;
    let mut instance_checks = 0u64;
    let mut premise_hits = 0u64;
    for (k, (name, sig)) in sigs.iter().enumerate() {
        let trials = if k == 0 { 168 } else { 166 };
        let rep = soundness_fuzz_with(sig, trials, 0xACC0 + k as u64, 5);
        assert!(
            rep.failures.is_empty(),
            "soundness failures on {name}: {:?}",
            rep.failures.first()
        );
        assert_eq!(rep.frames_generated, trials, "every trial produced a frame on {name}");
        frames += rep.frames_generated;
        schema_checks += rep.schema_checks;
        instance_checks += rep.instance_checks;
        premise_hits += rep.rule_premise_hits;
    }
    assert_eq!(frames, 500);
    assert!(premise_hits > 500, "rule replay is non-vacuous (got {premise_hits} hits)");
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    report(
        "1 (soundness suite)",
        elapsed,
        &format!("500 frames, {schema_checks} schema checks, {instance_checks} instance checks, {premise_hits} non-vacuous rule replays, 0 violations"),
    );
}

/// The embedding into the complex algebra of the atom structure is an
/// isomorphism on the whole enumerated corpus.
#[test]
fn criterion_2_duality_suite() {
    let start = Instant::now();
    let corpus = standard_corpus();
    assert!(corpus.len() >= 200, "corpus has only {} algebras", corpus.len());
    for (k, algebra) in corpus.iter().enumerate() {
        duality_check(algebra)
            .unwrap_or_else(|e| panic!("duality failure on corpus algebra {k}: {e}"));
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    report(
        "2 (duality suite)",
        elapsed,
        &format!("{} corpus algebras, eta is an isomorphism on every one", corpus.len()),
    );
}

/// The finite canonical extension is the identity, operation by operation,
/// and its output passes the algebra checker on the whole corpus.
#[test]
fn criterion_3_finite_canonicity() {
    let start = Instant::now();
    let corpus = standard_corpus();
    assert!(corpus.len() >= 200);
    for (k, algebra) in corpus.iter().enumerate() {
        let ext = algebra.canonical_extension_finite();
        assert_eq!(&ext, algebra, "canonical extension differs on corpus algebra {k}");
        assert!(
            ext.check().is_empty(),
            "canonical extension of corpus algebra {k} fails the checker"
        );
    }
    let elapsed = start.elapsed();
    report(
        "3 (finite canonicity)",
        elapsed,
        &format!("{} corpus algebras, extension equals input everywhere", corpus.len()),
    );
}

/// Residuation and unit laws of the complex algebra, exhaustively over all
/// upset pairs and triples of every enumerated frame with up to 3 worlds.
#[test]
fn criterion_4_cm_residuation_and_units() {
    let start = Instant::now();
    let sig = load_sig("sigs/trivial.json");
    let budget = SearchBudget { max_worlds: 3, ..SearchBudget::default() };
    let mut frames_checked = 0u64;
    let mut triples = 0u64;
    for n in 1..=3usize {
        for frame in dsmalc_core::search::enumerate_frames(&sig, n, &budget).unwrap() {
            frames_checked += 1;
            let ups = upsets(&frame.base.poset).unwrap();
            let o = frame.base.o;
            for &a in &ups {
                let ao = frame.base.prod_mask(o, a);
                let oa = frame.base.prod_mask(a, o);
                assert_eq!(ao, a, "O.A = A fails on frame {frames_checked}");
                assert_eq!(oa, a, "A.O = A fails on frame {frames_checked}");
                for &b in &ups {
                    let ab = frame.base.prod_mask(a, b);
                    for &c in &ups {
                        triples += 1;
                        let holds = ab & !c == 0;
                        let via_ldiv = b & !frame.base.ldiv_mask(a, c) == 0;
                        let via_rdiv = a & !frame.base.rdiv_mask(c, b) == 0;
                        assert_eq!(holds, via_ldiv, "left residuation fails");
                        assert_eq!(holds, via_rdiv, "right residuation fails");
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        "4 (complex-algebra residuation and units)",
        elapsed,
        &format!("{frames_checked} frames with <= 3 worlds, {triples} triples, exhaustive"),
    );
}

/// Countermodel search: one-world countermodel for `p |- q`, a two-world
/// one for `p |- ![a]p`, and no countermodel up to 3 worlds for any of the
/// 13 signature-free axiom schemas.
#[test]
fn criterion_5_countermodel_sanity() {
    let start = Instant::now();
    let trivial = load_sig("sigs/trivial.json");
    let empty = load_sig("sigs/empty.json");
    let budget = SearchBudget { max_worlds: 3, ..SearchBudget::default() };

    let seq = |text: &str, sig: &SubexpSignature| {
        dsmalc_core::syntax::parse_sequent(text, sig).unwrap()
    };

    let cm = find_countermodel(&seq("p |- q", &trivial), &trivial, &budget)
        .unwrap()
        .expect("p |- q has a countermodel");
    assert_eq!(cm.model.frame.len(), 1);
    assert!(cm.verify());

    let cm = find_countermodel(&seq("p |- ![a]p", &trivial), &trivial, &budget)
        .unwrap()
        .expect("p |- ![a]p has a countermodel");
    assert_eq!(cm.model.frame.len(), 2, "one-world frames force reflexive boxes");
    assert!(cm.verify());

    let cfg = CalculusConfig::default();
    let schemas = axiom_schemas(&empty, &cfg);
    let mut checked = 0;
    for rule in CORE_AXIOMS {
        let schema = schemas.iter().find(|s| s.rule == *rule).expect("core schema");
        let verdict = find_countermodel(&schema.sequent, &empty, &budget).unwrap();
        assert!(
            verdict.is_none(),
            "axiom {} unexpectedly has a countermodel",
            rule.name()
        );
        checked += 1;
    }
    assert_eq!(checked, 13);
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    report(
        "5 (countermodel sanity)",
        elapsed,
        "size-1 and size-2 countermodels found; 13 axiom schemas clean through size 3",
    );
}

/// The shipped derivation corpus verifies; every mutated derivation fails
/// at exactly the expected node.
#[test]
fn criterion_6_proof_checking() {
    let start = Instant::now();
    let sig = load_sig("sigs/derivations.json");
    let cfg = CalculusConfig::default();
    let mut good = 0;
    let mut entries: Vec<_> = std::fs::read_dir(corpus_path("derivations/good"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    let mut used_contraction = false;
    let mut used_exchange = false;
    for path in entries {
        let doc: DerivationDoc =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let derivation = doc.to_core(&sig).unwrap();
        check_derivation(&sig, &cfg, &derivation)
            .unwrap_or_else(|e| panic!("{path:?} fails: {e}"));
        fn rules(d: &dsmalc_core::Derivation, out: &mut Vec<RuleId>) {
            out.push(d.rule);
            for p in &d.premises {
                rules(p, out);
            }
        }
        let mut used = Vec::new();
        rules(&derivation, &mut used);
        used_contraction |= used.contains(&RuleId::ContractL);
        used_exchange |= used.contains(&RuleId::ExchangeLR);
        good += 1;
    }
    assert!(good >= 10, "only {good} good derivations shipped");
    assert!(used_contraction, "corpus exercises non-local contraction");
    assert!(used_exchange, "corpus exercises the exchange axiom");

    type Expectation = (&'static str, &'static [usize], fn(&StepError) -> bool);
    let expectations: &[Expectation] = &[
        ("resid_wrong_rule.json", &[], |e| matches!(e, StepError::SchemaMismatch { .. })),
        ("cut_swapped.json", &[], |e| matches!(e, StepError::SchemaMismatch { .. })),
        ("contract_wrong_index.json", &[], |e| {
            matches!(e, StepError::SideConditionFailed { .. })
        }),
        ("exchange_wrong_index.json", &[], |e| {
            matches!(e, StepError::SideConditionFailed { .. })
        }),
        ("bang_mono_incomparable.json", &[], |e| {
            matches!(e, StepError::SideConditionFailed { .. })
        }),
        ("conj_wrong_premise.json", &[1], |e| matches!(e, StepError::SchemaMismatch { .. })),
        ("promotion_bad_k.json", &[], |e| matches!(e, StepError::SideConditionFailed { .. })),
        ("conj_arity.json", &[], |e| matches!(e, StepError::ArityMismatch { .. })),
        ("deep_break.json", &[1, 0], |e| matches!(e, StepError::SchemaMismatch { .. })),
        ("subst_wrong_theta.json", &[], |e| matches!(e, StepError::SchemaMismatch { .. })),
    ];
    assert_eq!(expectations.len(), 10);
    for (file, path, kind_ok) in expectations {
        let full = corpus_path(&format!("derivations/bad/{file}"));
        let doc: DerivationDoc =
            serde_json::from_str(&std::fs::read_to_string(&full).unwrap()).unwrap();
        let derivation = doc.to_core(&sig).unwrap();
        let err = check_derivation(&sig, &cfg, &derivation)
            .expect_err(&format!("{file} must fail"));
        assert_eq!(&err.path, path, "{file}: wrong node path ({})", err.error);
        assert!(kind_ok(&err.error), "{file}: wrong error kind: {}", err.error);
    }
    let elapsed = start.elapsed();
    report(
        "6 (proof checking)",
        elapsed,
        &format!("{good} derivations verify; 10 mutations fail at the expected nodes"),
    );
}

/// Recursive evaluation agrees with interpretation in the complex algebra
/// under the transported valuation, on 1000 random (model, formula) pairs.
#[test]
fn criterion_7_eval_matches_complex_algebra() {
    let start = Instant::now();
    let sigs =
        [load_sig("sigs/trivial.json"), load_sig("sigs/wec.json"), load_sig("sigs/chain3.json")];
    let mut rng = ChaCha8Rng::seed_from_u64(0x04AC1E);
    let mut pairs = 0u64;
    let vars = ["p", "q"];
    for round in 0..100u64 {
        let sig = &sigs[(round % 3) as usize];
        let n = 1 + (round as usize % 3);
        let frame = dsmalc_core::search::random_frame(sig, n, 0xE7A1 + round).unwrap();
        let (algebra, carrier) = complex_algebra(&frame).unwrap();
        let id_of: BTreeMap<u64, usize> =
            carrier.iter().enumerate().map(|(k, &u)| (u, k)).collect();
        let ups = upsets(&frame.base.poset).unwrap();
        for _ in 0..10 {
            let formula = random_formula(&mut rng, &vars, sig, 3);
            let valuation: BTreeMap<String, u64> = vars
                .iter()
                .map(|v| (v.to_string(), ups[rng.gen_range(0..ups.len())]))
                .collect();
            let assignment: BTreeMap<String, usize> =
                valuation.iter().map(|(v, mask)| (v.clone(), id_of[mask])).collect();
            let model = Model { frame: frame.clone(), valuation };
            let direct = eval(&model, &formula).unwrap();
            let through_algebra = carrier[algebra.interpret(&formula, &assignment).unwrap()];
            assert_eq!(
                direct, through_algebra,
                "disagreement on {formula} (round {round})"
            );
            pairs += 1;
        }
    }
    assert_eq!(pairs, 1000);
    let elapsed = start.elapsed();
    report("7 (evaluation agrees with the complex algebra)", elapsed, "1000 pairs, exact equality");
}

/// Printing then parsing is the identity on ten thousand random formulas.
#[test]
fn criterion_8_parser_round_trip() {
    let start = Instant::now();
    let sig = load_sig("sigs/wec.json");
    let mut rng = ChaCha8Rng::seed_from_u64(0x70BF);
    let vars = ["p0", "p1", "p2", "q"];
    for k in 0..10_000u32 {
        let depth = 1 + (k % 5) as usize;
        let formula = random_formula(&mut rng, &vars, &sig, depth);
        let printed = formula.to_string();
        let parsed = parse_formula(&printed, &sig)
            .unwrap_or_else(|e| panic!("reparse failure on '{printed}': {e}"));
        assert_eq!(parsed, formula, "round trip changed '{printed}'");
    }
    let elapsed = start.elapsed();
    report("8 (parser round trip)", elapsed, "10000 formulas, zero failures");
}

/// The spec-level CLI contract holds end to end for the countermodel
/// command used by criterion 5 (exit codes and payload shape).
#[test]
fn countermodel_cli_contract() {
    use clap::Parser;
    let sig = corpus_path("sigs/trivial.json");
    let argv =
        ["dsmalc", "countermodel", "--sig", &sig, "--sequent", "p |- q", "--max-worlds", "3"];
    let cli = dsmalc_cli::Cli::try_parse_from(argv).unwrap();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = dsmalc_cli::run(cli, &mut out, &mut err);
    assert_eq!(code, dsmalc_cli::EXIT_OK);
    let v: Value = serde_json::from_str(std::str::from_utf8(&out).unwrap()).unwrap();
    assert_eq!(v["found"], Value::Bool(true));
    assert_eq!(v["countermodel"]["model"]["frame"]["poset"]["n"], Value::from(1));
}
