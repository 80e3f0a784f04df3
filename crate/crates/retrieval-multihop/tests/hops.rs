mod common;

use std::collections::BTreeMap;

use common::{fallback_cases, fixture_paragraphs, negation_findings, TableVerifier};
use sdp_retrieval::{
    escalate_query, resolve_title, validate_answer, validate_hop, EscalationError, Guesser,
    HopFinding, KeywordQueries, SearchCache,
};

#[test]
fn wrong_citations_are_corrected_by_the_fallback() {
    let paras = fixture_paragraphs();
    let cases = fallback_cases();
    assert_eq!(cases.len(), 20);
    let verifier = TableVerifier::for_cases(&cases);
    for c in &cases {
        let v = validate_hop(&c.finding, &paras, &SearchCache::new(), &verifier).unwrap();
        assert_eq!(v.k, 1, "{}: {}", c.finding.finding_text, v.reason);
        assert_eq!(v.detail["title"], c.true_title);
        assert_eq!(v.detail["stage"], "fallback");
    }
}

#[test]
fn correct_citations_pass_at_the_primary_stage() {
    let paras = fixture_paragraphs();
    let cases = fallback_cases();
    let verifier = TableVerifier::for_cases(&cases);
    for c in &cases {
        let mut f = c.finding.clone();
        f.cited_title = c.true_title.to_string();
        let v = validate_hop(&f, &paras, &SearchCache::new(), &verifier).unwrap();
        assert_eq!((v.k, v.detail["stage"].as_str()), (1, Some("primary")));
    }
}

#[test]
fn negated_findings_fail_without_consulting_the_verifier() {
    let paras = fixture_paragraphs();
    let verifier = TableVerifier::for_cases(&fallback_cases());
    for f in negation_findings() {
        let v = validate_hop(&f, &paras, &SearchCache::new(), &verifier).unwrap();
        assert_eq!(v.k, 0);
    }
    assert_eq!(verifier.calls.get(), 0);
}

#[test]
fn unsupported_finding_is_rejected_after_both_stages() {
    let paras = fixture_paragraphs();
    let verifier = TableVerifier::for_cases(&fallback_cases());
    let f = HopFinding {
        sub_question: "Where?".into(),
        cited_title: "Eiffel Tower".into(),
        finding_text: "The lattice tower stands in Lyon, a city in France.".into(),
        bridge_entity: None,
    };
    let v = validate_hop(&f, &paras, &SearchCache::new(), &verifier).unwrap();
    assert_eq!(v.k, 0);
    assert_eq!(verifier.calls.get(), 2);
}

#[test]
fn title_resolution_order() {
    let paras = fixture_paragraphs();
    let cache = SearchCache::new();
    assert_eq!(
        resolve_title("eiffel tower", &paras, &cache).unwrap().title,
        "Eiffel Tower"
    );
    // The cited title contains a paragraph title.
    assert_eq!(
        resolve_title("Inception (film)", &paras, &cache)
            .unwrap()
            .title,
        "Inception"
    );
    assert!(resolve_title("Burgundy wine", &paras, &cache).is_none());
    let mut cache = SearchCache::new();
    cache.insert("burgundy wine".into(), vec!["p02".into()]);
    assert_eq!(
        resolve_title("Burgundy wine", &paras, &cache)
            .unwrap()
            .title,
        "Dijon"
    );
}

#[test]
fn answer_filters() {
    let chain = vec![
        HopFinding {
            sub_question: "Who designed the Eiffel Tower?".into(),
            cited_title: "Eiffel Tower".into(),
            finding_text: "Gustave Eiffel's company designed it.".into(),
            bridge_entity: Some("Gustave Eiffel".into()),
        },
        HopFinding {
            sub_question: "Where was Gustave Eiffel born?".into(),
            cited_title: "Gustave Eiffel".into(),
            finding_text: "He was born in Dijon.".into(),
            bridge_entity: Some("Dijon".into()),
        },
    ];
    let q = "Where was the designer of the Eiffel Tower born?";
    assert_eq!(validate_answer("Dijon", q, &chain, true, true).k, 2);
    assert_eq!(validate_answer("Dijon", q, &chain, true, false).k, 1);
    for bad in ["", "unknown", "N/A", "The answer cannot be determined"] {
        assert_eq!(validate_answer(bad, q, &chain, false, true).k, 0, "{bad}");
    }
    // Strict mode only.
    assert_eq!(
        validate_answer("Gustave Eiffel", q, &chain, false, true).k,
        2
    );
    assert_eq!(
        validate_answer("Gustave Eiffel", q, &chain, true, true).k,
        0
    );
    assert_eq!(validate_answer("Eiffel Tower", q, &chain, true, true).k, 0);
    let long =
        "it is a small city in the east of France known for mustard and the old dukes of Burgundy";
    assert_eq!(validate_answer(long, q, &chain, true, true).k, 0);
    let when = "In what year was the designer of the Eiffel Tower born?";
    assert_eq!(validate_answer("Dijon", when, &chain, true, true).k, 0);
    assert_eq!(validate_answer("1832", when, &chain, true, true).k, 2);
    assert_eq!(validate_answer("December", when, &chain, true, true).k, 2);
}

struct TableGuesser(BTreeMap<String, String>);

impl Guesser for TableGuesser {
    fn guess(&self, sub_question: &str) -> Result<String, sdp_core::OperatorError> {
        Ok(self.0[sub_question].clone())
    }
}

#[test]
fn query_escalation_ladder() {
    let sub = "Where was Gustave Eiffel born?";
    let q = "Where was the designer of the Eiffel Tower born?";
    let guesser = TableGuesser([(sub.to_string(), "Dijon".to_string())].into());
    let mut tried: Vec<String> = Vec::new();
    let mut issued = Vec::new();
    for _ in 0..7 {
        let next = escalate_query(q, sub, &[], &tried, &KeywordQueries, Some(&guesser)).unwrap();
        issued.push(next.clone());
        tried.push(next);
    }
    assert!(issued[4].contains("Gustave Eiffel"), "{issued:?}");
    assert_eq!(issued[6], "Dijon");
    assert!(matches!(
        escalate_query(q, sub, &[], &tried[..6], &KeywordQueries, None),
        Err(EscalationError::GuesserUnavailable)
    ));
}
