mod common;

use coa_core::fixtures;
use coa_core::verify::mutations::{math_mutations, scramble, wiki_mutations, MutationKind};
use coa_core::verify::{verify_math, verify_wiki, RejectReason, Verdict, WikiCheck};
use coa_core::wiki::{Bm25Params, Chunking, GazetteerExtractor, Index, LexicalCosine, PlanConfig, WikiTools};
use coa_core::{parse_trace, Domain};

#[test]
fn math_corruptions_are_rejected_unless_value_preserving() {
    let mut checked = 0;
    let mut preserving = 0;
    for rec in fixtures::math_records() {
        let trace = parse_trace(&rec.candidate, Domain::Math).unwrap();
        let gold = rec.gold.gold_final_number().unwrap();
        let muts = math_mutations(&trace);
        assert!(
            muts.iter().any(|m| m.kind == MutationKind::OperatorFlip),
            "{}",
            rec.gold.id
        );
        for m in muts {
            if common::oracle_final_answer(&m.text).as_ref() == Some(&gold) {
                preserving += 1;
                continue;
            }
            let r = verify_math(&m.text, &rec.gold);
            assert!(!r.is_accept(), "{} {:?} accepted: {}", rec.gold.id, m.kind, m.text);
            checked += 1;
        }
    }
    assert!(checked > 50, "only {checked} mutations checked");
    assert!(preserving < checked);
}

#[test]
fn operator_flip_in_constructed_trace() {
    let rec = fixtures::math_records()
        .into_iter()
        .find(|r| r.gold.id == "shelf")
        .unwrap();
    let bad = rec.candidate.replace("[90 - y1 = y2]", "[90 + y1 = y2]");
    assert_ne!(bad, rec.candidate);
    assert_eq!(
        verify_math(&bad, &rec.gold).verdict,
        Verdict::Reject(RejectReason::AnswerMismatch)
    );
}

#[test]
fn query_scrambles_are_rejected() {
    let corpus = fixtures::wiki_corpus();
    let ner = GazetteerExtractor::from_corpus(&corpus);
    let index = Index::build(corpus, Bm25Params::default(), Chunking::PerArticle).unwrap();
    let tools = WikiTools {
        index: &index,
        ner: &ner,
        scorer: &LexicalCosine,
        config: PlanConfig::default(),
    };
    let mut n = 0;
    for rec in fixtures::wiki_records() {
        let trace = parse_trace(&rec.candidate, Domain::Wiki).unwrap();
        for m in wiki_mutations(&trace) {
            let r = verify_wiki(&m.text, &rec.gold, &tools, WikiCheck::default());
            assert!(
                matches!(
                    r.verdict,
                    Verdict::Reject(RejectReason::TitleMismatch { .. } | RejectReason::StructureError)
                ),
                "{} step {}: {:?} for {}",
                rec.gold.id,
                m.step,
                r.verdict,
                m.text
            );
            n += 1;
        }
    }
    assert!(n >= 8);
}

#[test]
fn scramble_reverses_words() {
    assert_eq!(scramble("y2 in what city"), "2y ni tahw ytic");
}
