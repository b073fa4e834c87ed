use proptest::prelude::*;
use woz_core::protocol::ProtocolError;
use woz_core::{PredictionKind, WireMessage};

fn golden(name: &str) -> Vec<u8> {
    let path = format!("{}/tests/golden/{name}.ndjson", env!("CARGO_MANIFEST_DIR"));
    std::fs::read(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn fixtures() -> Vec<(&'static str, WireMessage)> {
    vec![
        (
            "session_start",
            WireMessage::SessionStart {
                session_id: "cycle-1".into(),
                target_accuracy: 50.0,
            },
        ),
        (
            "prediction_exposed",
            WireMessage::Prediction {
                seq: 2,
                predicted_label: Some("flour".into()),
                confidence: Some(80),
                correct: Some(true),
                kind: Some(PredictionKind::Correct),
                timestamp_ms: 1_700_000_000_000,
            },
        ),
        (
            "prediction_hidden",
            WireMessage::Prediction {
                seq: 2,
                predicted_label: Some("flour".into()),
                confidence: Some(80),
                correct: None,
                kind: None,
                timestamp_ms: 1_700_000_000_000,
            },
        ),
        (
            "prediction_no_recognition",
            WireMessage::Prediction {
                seq: 1,
                predicted_label: None,
                confidence: None,
                correct: Some(false),
                kind: Some(PredictionKind::NoRecognition),
                timestamp_ms: 1_700_000_000_000,
            },
        ),
        (
            "session_end",
            WireMessage::SessionEnd {
                session_id: "cycle-2".into(),
                final_accuracy: 200.0 / 3.0,
            },
        ),
        ("ack", WireMessage::Ack { seq: 3 }),
    ]
}

#[test]
fn encodings_match_golden_bytes() {
    for (name, msg) in fixtures() {
        assert_eq!(
            String::from_utf8(msg.encode()).unwrap(),
            String::from_utf8(golden(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn golden_bytes_decode_to_fixture() {
    for (name, msg) in fixtures() {
        assert_eq!(WireMessage::decode(&golden(name)).unwrap(), msg, "{name}");
    }
}

#[test]
fn decode_tolerates_key_order_and_crlf() {
    let msg = WireMessage::decode(b"{\"seq\":3,\"type\":\"ack\"}\r\n").unwrap();
    assert_eq!(msg, WireMessage::Ack { seq: 3 });
    let msg = WireMessage::decode(
        br#"{"timestamp_ms":5,"confidence":null,"seq":9,"predicted_label":null,"type":"prediction"}"#,
    )
    .unwrap();
    assert_eq!(
        msg,
        WireMessage::Prediction {
            seq: 9,
            predicted_label: None,
            confidence: None,
            correct: None,
            kind: None,
            timestamp_ms: 5
        }
    );
}

#[test]
fn decode_errors() {
    assert!(matches!(
        WireMessage::decode(b"{\"type\":\"ack\",\"se"),
        Err(ProtocolError::MalformedFrame(_))
    ));
    assert_eq!(
        WireMessage::decode(b"{\"type\":\"ping\"}\n"),
        Err(ProtocolError::UnknownType("ping".into()))
    );
    assert!(matches!(
        WireMessage::decode(b"{\"type\":\"ack\"}\n"),
        Err(ProtocolError::MalformedFrame(_))
    ));
    assert!(matches!(
        WireMessage::decode(b"[1,2]\n"),
        Err(ProtocolError::MalformedFrame(_))
    ));
}

fn kind() -> impl Strategy<Value = PredictionKind> {
    prop::sample::select(PredictionKind::ALL.to_vec())
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        (0u32..=10_000).prop_map(|h| h as f64 / 100.0),
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
    ]
}

fn message() -> impl Strategy<Value = WireMessage> {
    prop_oneof![
        (".*", finite()).prop_map(|(session_id, target_accuracy)| WireMessage::SessionStart {
            session_id,
            target_accuracy
        }),
        (
            any::<u64>(),
            prop::option::of(".*"),
            prop::option::of(0u8..=100),
            prop::option::of((any::<bool>(), kind())),
            any::<i64>()
        )
            .prop_map(|(seq, predicted_label, confidence, exposed, timestamp_ms)| {
                WireMessage::Prediction {
                    seq,
                    predicted_label,
                    confidence,
                    correct: exposed.map(|e| e.0),
                    kind: exposed.map(|e| e.1),
                    timestamp_ms,
                }
            }),
        (".*", finite()).prop_map(|(session_id, final_accuracy)| WireMessage::SessionEnd {
            session_id,
            final_accuracy
        }),
        any::<u64>().prop_map(|seq| WireMessage::Ack { seq }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn decode_inverts_encode(msg in message()) {
        let bytes = msg.encode();
        prop_assert_eq!(bytes.iter().filter(|&&b| b == b'\n').count(), 1);
        prop_assert_eq!(bytes.last(), Some(&b'\n'));
        prop_assert!(bytes.starts_with(br#"{"type":"#), "type key first");
        prop_assert_eq!(WireMessage::decode(&bytes).unwrap(), msg);
    }
}
