#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;

use serde_json::Value;
use woz_core::StepClock;
use woz_service::{Running, ServiceConfig};

pub const TABLE1: &[u8] = include_bytes!("../../../core/tests/fixtures/table1.csv");

pub struct Harness {
    pub running: Running,
    pub base: String,
    pub http: reqwest::Client,
    pub dir: tempfile::TempDir,
}

fn loopback() -> SocketAddr {
    "127.0.0.1:0".parse().unwrap()
}

pub async fn start() -> Harness {
    start_in(tempfile::tempdir().unwrap()).await
}

/// Starts a service over `dir` with a step clock (0, 1000, 2000, ...).
pub async fn start_in(dir: tempfile::TempDir) -> Harness {
    let config = ServiceConfig::new(loopback(), loopback(), dir.path());
    let running = woz_service::start_with_clock(config, Arc::new(StepClock::new(0, 1000)))
        .await
        .unwrap();
    let base = format!("http://{}", running.http_addr);
    Harness {
        running,
        base,
        http: reqwest::Client::new(),
        dir,
    }
}

impl Harness {
    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub async fn upload_table1(&self) {
        let r = self
            .http
            .post(self.url("/repositories?name=table1"))
            .body(TABLE1)
            .send()
            .await
            .unwrap();
        assert_eq!(r.status(), 201);
    }

    pub async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let r = self.http.post(self.url(path)).json(&body).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        let r = self.http.get(self.url(path)).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn get_bytes(&self, path: &str) -> (u16, Vec<u8>) {
        let r = self.http.get(self.url(path)).send().await.unwrap();
        (r.status().as_u16(), r.bytes().await.unwrap().to_vec())
    }

    /// Creates a session and returns its id.
    pub async fn create(&self, body: Value) -> String {
        let (status, v) = self.post("/sessions", body).await;
        assert_eq!(status, 201, "{v}");
        v["session_id"].as_str().unwrap().to_string()
    }

    /// Ground truth, optional confidence, prediction; returns the event.
    pub async fn trial(&self, id: &str, label: &str, confidence: Option<i64>, kind: Option<&str>) -> Value {
        let (s, v) = self
            .post(
                &format!("/sessions/{id}/ground-truth"),
                serde_json::json!({ "label": label }),
            )
            .await;
        assert_eq!(s, 200, "{v}");
        if let Some(c) = confidence {
            let (s, v) = self
                .post(&format!("/sessions/{id}/confidence"), serde_json::json!({ "value": c }))
                .await;
            assert_eq!(s, 200, "{v}");
        }
        let body = match kind {
            Some(k) => serde_json::json!({ "kind": k }),
            None => serde_json::json!({}),
        };
        let (s, v) = self.post(&format!("/sessions/{id}/prediction"), body).await;
        assert_eq!(s, 200, "{v}");
        v
    }
}
