//! Newline-delimited JSON frames sent to prototype clients.
//!
//! Each frame is one JSON object on one line. `type` always comes first and
//! the remaining keys follow a fixed order per message type:
//!
//! | type            | keys after `type`                                                      |
//! |-----------------|------------------------------------------------------------------------|
//! | `session_start` | `session_id`, `target_accuracy`                                        |
//! | `prediction`    | `seq`, `predicted_label`, `confidence`, [`correct`, `kind`], `timestamp_ms` |
//! | `session_end`   | `session_id`, `final_accuracy`                                         |
//! | `ack`           | `seq`                                                                  |
//!
//! `predicted_label` and `confidence` are `null` for a no-recognition error.
//! `correct` and `kind` are present only when the session exposes correctness
//! to prototypes. Decoding accepts keys in any order and ignores unknown keys.

use std::io::{self, Write};
use std::net::TcpStream;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::kind::PredictionKind;
use crate::session::{PredictionEvent, SessionConfig};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("unknown message type `{0}`")]
    UnknownType(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireMessage {
    SessionStart {
        session_id: String,
        target_accuracy: f64,
    },
    Prediction {
        seq: u64,
        predicted_label: Option<String>,
        confidence: Option<u8>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        correct: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kind: Option<PredictionKind>,
        timestamp_ms: i64,
    },
    SessionEnd {
        session_id: String,
        final_accuracy: f64,
    },
    Ack {
        seq: u64,
    },
}

const KNOWN_TYPES: [&str; 4] = ["session_start", "prediction", "session_end", "ack"];

impl WireMessage {
    pub fn session_start(config: &SessionConfig) -> Self {
        WireMessage::SessionStart {
            session_id: config.session_id.clone(),
            target_accuracy: config.target_accuracy,
        }
    }

    pub fn prediction(event: &PredictionEvent, expose_correctness: bool) -> Self {
        WireMessage::Prediction {
            seq: event.seq,
            predicted_label: event.predicted_label.clone(),
            confidence: event.confidence,
            correct: expose_correctness.then_some(event.correct),
            kind: expose_correctness.then_some(event.kind),
            timestamp_ms: event.timestamp_ms,
        }
    }

    pub fn session_end(session_id: &str, final_accuracy: f64) -> Self {
        WireMessage::SessionEnd {
            session_id: session_id.to_string(),
            final_accuracy,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            WireMessage::SessionStart { .. } => "session_start",
            WireMessage::Prediction { .. } => "prediction",
            WireMessage::SessionEnd { .. } => "session_end",
            WireMessage::Ack { .. } => "ack",
        }
    }

    /// One line of UTF-8 JSON terminated by `\n`.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec(self).expect("wire messages always serialize");
        out.push(b'\n');
        out
    }

    /// Parses one line; a trailing `\n` or `\r\n` is optional.
    pub fn decode(line: &[u8]) -> Result<Self, ProtocolError> {
        let line = line.strip_suffix(b"\n").unwrap_or(line);
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        if line.contains(&b'\n') {
            return Err(ProtocolError::MalformedFrame("more than one line".into()));
        }
        let value: serde_json::Value =
            serde_json::from_slice(line).map_err(|e| ProtocolError::MalformedFrame(e.to_string()))?;
        let ty = value
            .as_object()
            .ok_or_else(|| ProtocolError::MalformedFrame("frame is not a JSON object".into()))?
            .get("type")
            .and_then(|t| t.as_str())
            .ok_or_else(|| ProtocolError::MalformedFrame("missing string `type`".into()))?;
        if !KNOWN_TYPES.contains(&ty) {
            return Err(ProtocolError::UnknownType(ty.to_string()));
        }
        serde_json::from_slice(line).map_err(|e| ProtocolError::MalformedFrame(e.to_string()))
    }
}

/// A connected client that accepts encoded frames.
///
/// Implementations must not block past their own write timeout; an error
/// means the client is dead or too slow and will be evicted.
pub trait FrameSink: Send {
    fn send_frame(&mut self, frame: &[u8]) -> io::Result<()>;
}

/// Blocking TCP client with a bounded write timeout.
#[derive(Debug)]
pub struct TcpSink {
    stream: TcpStream,
}

impl TcpSink {
    pub fn new(stream: TcpStream, write_timeout: Duration) -> io::Result<Self> {
        stream.set_write_timeout(Some(write_timeout))?;
        stream.set_nodelay(true)?;
        Ok(Self { stream })
    }
}

impl FrameSink for TcpSink {
    fn send_frame(&mut self, frame: &[u8]) -> io::Result<()> {
        self.stream.write_all(frame)?;
        self.stream.flush()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ClientId(pub u64);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeliveryFailure {
    pub client: ClientId,
    pub message_type: &'static str,
    pub error: String,
}

/// Connected prototype clients. Failed clients are evicted on the first
/// failed write and the failure is kept for inspection.
#[derive(Debug)]
pub struct ClientRegistry<C> {
    next_id: u64,
    clients: Vec<(ClientId, C)>,
    failures: Vec<DeliveryFailure>,
}

impl<C> Default for ClientRegistry<C> {
    fn default() -> Self {
        Self {
            next_id: 1,
            clients: Vec::new(),
            failures: Vec::new(),
        }
    }
}

impl<C: FrameSink> ClientRegistry<C> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, client: C) -> ClientId {
        let id = ClientId(self.next_id);
        self.next_id += 1;
        self.clients.push((id, client));
        id
    }

    pub fn remove(&mut self, id: ClientId) -> Option<C> {
        let pos = self.clients.iter().position(|(c, _)| *c == id)?;
        Some(self.clients.remove(pos).1)
    }

    pub fn len(&self) -> usize {
        self.clients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clients.is_empty()
    }

    pub fn ids(&self) -> Vec<ClientId> {
        self.clients.iter().map(|(id, _)| *id).collect()
    }

    pub fn failures(&self) -> &[DeliveryFailure] {
        &self.failures
    }

    /// Sends `msg` to every client and returns how many accepted it.
    pub fn broadcast(&mut self, msg: &WireMessage) -> usize {
        let frame = msg.encode();
        let mut delivered = 0;
        let failures = &mut self.failures;
        self.clients.retain_mut(|(id, client)| match client.send_frame(&frame) {
            Ok(()) => {
                delivered += 1;
                true
            }
            Err(e) => {
                failures.push(DeliveryFailure {
                    client: *id,
                    message_type: msg.type_name(),
                    error: e.to_string(),
                });
                false
            }
        });
        delivered
    }

    pub fn broadcast_event(&mut self, event: &PredictionEvent, expose_correctness: bool) -> usize {
        self.broadcast(&WireMessage::prediction(event, expose_correctness))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::{Arc, Mutex};

    fn event(label: Option<&str>, kind: PredictionKind) -> PredictionEvent {
        PredictionEvent {
            seq: 2,
            trial_index: 2,
            ground_truth: "flour".into(),
            kind,
            predicted_label: label.map(String::from),
            confidence: label.map(|_| 80),
            correct: kind == PredictionKind::Correct,
            accuracy_after: 50.0,
            timestamp_ms: 1_700_000_000_000,
        }
    }

    #[test]
    fn null_label_is_encoded() {
        let msg = WireMessage::Prediction {
            seq: 1,
            predicted_label: None,
            confidence: None,
            correct: Some(false),
            kind: Some(PredictionKind::NoRecognition),
            timestamp_ms: 5,
        };
        let line = String::from_utf8(msg.encode()).unwrap();
        assert!(line.contains(r#""predicted_label":null"#));
        assert!(line.ends_with('\n'));
        assert_eq!(line.matches('\n').count(), 1);
    }

    #[test]
    fn correctness_hidden_when_not_exposed() {
        let e = event(Some("flour"), PredictionKind::Correct);
        let hidden = String::from_utf8(WireMessage::prediction(&e, false).encode()).unwrap();
        assert_eq!(
            hidden,
            "{\"type\":\"prediction\",\"seq\":2,\"predicted_label\":\"flour\",\"confidence\":80,\"timestamp_ms\":1700000000000}\n"
        );
        let shown = String::from_utf8(WireMessage::prediction(&e, true).encode()).unwrap();
        assert!(shown.contains(r#""correct":true,"kind":"correct""#));
    }

    #[test]
    fn decode_cases() {
        assert_eq!(
            WireMessage::decode(b"{\"type\":\"ack\",\"seq\":3}\n"),
            Ok(WireMessage::Ack { seq: 3 })
        );
        assert_eq!(
            WireMessage::decode(b"{\"seq\":3,\"type\":\"ack\"}"),
            Ok(WireMessage::Ack { seq: 3 })
        );
        assert!(matches!(
            WireMessage::decode(b"{\"type\":\"ack\",\"se"),
            Err(ProtocolError::MalformedFrame(_))
        ));
        assert_eq!(
            WireMessage::decode(b"{\"type\":\"ping\"}\n"),
            Err(ProtocolError::UnknownType("ping".into()))
        );
        assert!(matches!(
            WireMessage::decode(b"[1,2]"),
            Err(ProtocolError::MalformedFrame(_))
        ));
        assert!(matches!(
            WireMessage::decode(b"{\"type\":\"ack\"}"),
            Err(ProtocolError::MalformedFrame(_))
        ));
        assert!(matches!(
            WireMessage::decode(b"{\"type\":\"ack\",\"seq\":1}\n{\"type\":\"ack\",\"seq\":2}\n"),
            Err(ProtocolError::MalformedFrame(_))
        ));
    }

    #[derive(Clone, Default)]
    struct Recorder(Arc<Mutex<Vec<Vec<u8>>>>);

    impl FrameSink for Recorder {
        fn send_frame(&mut self, frame: &[u8]) -> io::Result<()> {
            self.0.lock().unwrap().push(frame.to_vec());
            Ok(())
        }
    }

    struct Dead;

    impl FrameSink for Dead {
        fn send_frame(&mut self, _: &[u8]) -> io::Result<()> {
            Err(io::Error::new(io::ErrorKind::BrokenPipe, "peer gone"))
        }
    }

    enum Fake {
        Live(Recorder),
        Dead(Dead),
    }

    impl FrameSink for Fake {
        fn send_frame(&mut self, frame: &[u8]) -> io::Result<()> {
            match self {
                Fake::Live(r) => r.send_frame(frame),
                Fake::Dead(d) => d.send_frame(frame),
            }
        }
    }

    #[test]
    fn broadcast_with_no_clients() {
        let mut reg: ClientRegistry<Recorder> = ClientRegistry::new();
        assert_eq!(
            reg.broadcast_event(&event(Some("flour"), PredictionKind::Correct), true),
            0
        );
    }

    #[test]
    fn dead_client_is_evicted() {
        let live = Recorder::default();
        let mut reg = ClientRegistry::new();
        let live_id = reg.add(Fake::Live(live.clone()));
        let dead_id = reg.add(Fake::Dead(Dead));
        let e = event(Some("flour"), PredictionKind::Correct);
        assert_eq!(reg.broadcast_event(&e, true), 1);
        assert_eq!(reg.ids(), [live_id]);
        assert_eq!(reg.failures()[0].client, dead_id);
        assert_eq!(reg.failures()[0].message_type, "prediction");
        assert_eq!(live.0.lock().unwrap().len(), 1);
        assert_eq!(reg.broadcast_event(&e, true), 1);
        assert_eq!(reg.failures().len(), 1);
    }

    #[test]
    fn clients_see_seq_order() {
        let rec = Recorder::default();
        let mut reg = ClientRegistry::new();
        reg.add(rec.clone());
        for seq in 1..=20 {
            let mut e = event(None, PredictionKind::NoRecognition);
            e.seq = seq;
            reg.broadcast_event(&e, false);
        }
        let seqs: Vec<u64> = rec
            .0
            .lock()
            .unwrap()
            .iter()
            .map(|f| match WireMessage::decode(f).unwrap() {
                WireMessage::Prediction { seq, .. } => seq,
                other => panic!("unexpected {other:?}"),
            })
            .collect();
        assert_eq!(seqs, (1..=20).collect::<Vec<_>>());
    }

    #[test]
    fn tcp_sink_delivers_lines() {
        use std::io::{BufRead, BufReader};
        use std::net::TcpListener;

        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let reader = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut line = String::new();
            BufReader::new(stream).read_line(&mut line).unwrap();
            line
        });
        let sink = TcpSink::new(TcpStream::connect(addr).unwrap(), Duration::from_millis(500)).unwrap();
        let mut reg = ClientRegistry::new();
        reg.add(sink);
        assert_eq!(reg.broadcast(&WireMessage::Ack { seq: 9 }), 1);
        assert_eq!(reader.join().unwrap(), "{\"type\":\"ack\",\"seq\":9}\n");
    }
}
