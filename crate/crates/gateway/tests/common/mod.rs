#![allow(dead_code)]

use std::sync::Arc;
use std::time::{Duration, Instant};

use chair_gateway::{AppState, GatewayConfig};
use futures::StreamExt;
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;

pub type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

pub struct Gateway {
    pub base: String,
    pub ws_url: String,
    pub state: Arc<AppState>,
    pub http: reqwest::Client,
}

pub async fn gateway(config: GatewayConfig) -> Gateway {
    let config = GatewayConfig { listen: "127.0.0.1:0".parse().unwrap(), ..config };
    let (addr, state, serve) = chair_gateway::bind(config).await.unwrap();
    tokio::spawn(serve);
    Gateway {
        base: format!("http://{addr}"),
        ws_url: format!("ws://{addr}/telemetry"),
        state,
        http: reqwest::Client::new(),
    }
}

pub async fn gateway_at(time_scale: f64) -> Gateway {
    gateway(GatewayConfig { time_scale, ..Default::default() }).await
}

impl Gateway {
    pub async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let r = self.http.post(format!("{}{path}", self.base)).json(&body).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn post_raw(&self, path: &str, body: &'static str) -> u16 {
        let r = self.http.post(format!("{}{path}", self.base)).body(body).send().await.unwrap();
        r.status().as_u16()
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        let r = self.http.get(format!("{}{path}", self.base)).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    pub async fn delete(&self, path: &str) -> u16 {
        self.http.delete(format!("{}{path}", self.base)).send().await.unwrap().status().as_u16()
    }

    pub async fn start(&self, profile: &str, map: &str, seed: u64) {
        let (status, body) = self
            .post("/session", json!({"profile": profile, "map": map, "seed": seed, "noise_free_sensors": true}))
            .await;
        assert_eq!(status, 201, "{body}");
    }

    pub async fn ws(&self) -> Ws {
        tokio_tungstenite::connect_async(&self.ws_url).await.unwrap().0
    }

    /// Poll GET /state until `pred` holds or `timeout` passes.
    pub async fn wait_state(&self, timeout: Duration, pred: impl Fn(&Value) -> bool) -> Value {
        let deadline = Instant::now() + timeout;
        loop {
            let (_, s) = self.get("/state").await;
            if pred(&s) {
                return s;
            }
            assert!(Instant::now() < deadline, "state condition not reached; last {s}");
            tokio::time::sleep(Duration::from_millis(10)).await;
        }
    }
}

/// Messages received within `dur`, each with its arrival time since `t0`.
pub async fn collect(ws: &mut Ws, dur: Duration, t0: Instant) -> Vec<(Duration, Value)> {
    let deadline = tokio::time::Instant::now() + dur;
    let mut out = Vec::new();
    while let Ok(Some(msg)) = tokio::time::timeout_at(deadline, ws.next()).await {
        if let Message::Text(t) = msg.unwrap() {
            out.push((t0.elapsed(), serde_json::from_str(t.as_str()).unwrap()));
        }
    }
    out
}

/// Read until a message satisfies `pred`.
pub async fn wait_for(ws: &mut Ws, timeout: Duration, pred: impl Fn(&Value) -> bool) -> Vec<Value> {
    let deadline = tokio::time::Instant::now() + timeout;
    let mut seen = Vec::new();
    loop {
        let msg = tokio::time::timeout_at(deadline, ws.next()).await.expect("telemetry condition not reached");
        if let Message::Text(t) = msg.unwrap().unwrap() {
            let v: Value = serde_json::from_str(t.as_str()).unwrap();
            let hit = pred(&v);
            seen.push(v);
            if hit {
                return seen;
            }
        }
    }
}
