use intervene_core::trace::{parse_jsonl, read_trace, write_trace};
use intervene_core::{gold_label, validate_trace, EventRecord, ProbPair, ViolationKind};
use proptest::prelude::*;

fn label() -> impl Strategy<Value = Option<bool>> {
    prop_oneof![Just(None), any::<bool>().prop_map(Some)]
}

fn record() -> impl Strategy<Value = EventRecord> {
    ("[a-c]{1,3}", "[xy]", 0u64..5, 0.0f64..=1.0, 0.0f64..=1.0, label(), label()).prop_map(|(id, clip, step, q, p, n, a)| {
        let mut r = EventRecord::new(id, clip, step, ProbPair::new(q, p).unwrap());
        r.y_need = n.map(u8::from);
        r.y_accept = a.map(u8::from);
        r
    })
}

proptest! {
    #[test]
    fn gold_label_is_symmetric(a in any::<bool>(), b in any::<bool>()) {
        prop_assert_eq!(gold_label(Some(a), Some(b)).unwrap(), gold_label(Some(b), Some(a)).unwrap());
        prop_assert_eq!(gold_label(Some(a), Some(b)).unwrap(), a && b);
    }

    #[test]
    fn validation_is_idempotent(records in proptest::collection::vec(record(), 0..20)) {
        let first = validate_trace(&records);
        prop_assert_eq!(&first, &validate_trace(&records));
        prop_assert_eq!(first.ok, first.violations.is_empty());
    }
}

#[test]
fn missing_label_is_an_error() {
    assert!(gold_label(None, Some(true)).is_err());
    assert!(gold_label(Some(true), None).is_err());
}

#[test]
fn duplicate_ids_are_reported() {
    let p = ProbPair::new(0.5, 0.5).unwrap();
    let recs = vec![EventRecord::new("a", "c", 0, p), EventRecord::new("a", "c", 1, p)];
    let rep = validate_trace(&recs);
    assert!(!rep.ok);
    assert!(rep.violations.iter().any(|v| v.kind == ViolationKind::DuplicateId));
}

#[test]
fn nan_is_rejected_at_parse_time() {
    let line = r#"{"id":"a","clip_id":"c","step":0,"fast":{"p_need":NaN,"p_accept":0.5}}"#;
    assert!(parse_jsonl::<EventRecord, _>(line.as_bytes()).is_err());
}

#[test]
fn out_of_range_probability_is_one_violation() {
    let line = r#"{"id":"a","clip_id":"c","step":0,"fast":{"p_need":1.2,"p_accept":0.5}}"#;
    let recs: Vec<EventRecord> = parse_jsonl(line.as_bytes()).unwrap();
    let rep = validate_trace(&recs);
    assert_eq!(rep.violations.len(), 1);
    assert_eq!(rep.violations[0].kind, ViolationKind::ProbabilityOutOfRange);
    assert_eq!(rep.violations[0].record_id, "a");
}

#[test]
fn empty_trace_is_ok() {
    let rep = validate_trace(&[]);
    assert!(rep.ok && rep.violations.is_empty());
}

#[test]
fn unknown_fields_survive_a_round_trip() {
    let line = r#"{"id":"a","clip_id":"c","step":3,"fast":{"p_need":0.25,"p_accept":0.75},"y_need":1,"y_accept":0,"annotator":"r2","extra":{"k":[1,2]}}"#;
    let recs: Vec<EventRecord> = parse_jsonl(line.as_bytes()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    write_trace(&path, &recs).unwrap();
    let back = read_trace(&path).unwrap();
    assert_eq!(back, recs);
    let v: serde_json::Value = serde_json::from_str(std::fs::read_to_string(&path).unwrap().trim()).unwrap();
    assert_eq!(v["annotator"], "r2");
    assert_eq!(v["extra"]["k"][1], 2);
    assert!(!back[0].gold().unwrap());
}

#[test]
fn parse_errors_carry_the_line_number() {
    let text = "{\"id\":\"a\",\"clip_id\":\"c\",\"step\":0,\"fast\":{\"p_need\":0.1,\"p_accept\":0.2}}\nnot json\n";
    match parse_jsonl::<EventRecord, _>(text.as_bytes()) {
        Err(intervene_core::Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("unexpected {other:?}"),
    }
}
