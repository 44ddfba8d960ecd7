//! HTTP/WebSocket front end.
//!
//! * `GET /ws` — WebSocket: telemetry frames and acks out, commands in
//! * `GET /state` — latest frame plus the static drive description
//! * `POST /command` — one [`CommandMessage`] in, its [`Ack`] out
//! * `GET /health` — `ok`

use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{CloseFrame, Message, Utf8Bytes, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use serde::Serialize;
use tokio::net::TcpListener;
use tokio::sync::mpsc;

use super::host::{SubscriptionEnd, TelemetryHost};
use super::protocol::{parse_command, Ack, ServerMessage, TelemetryFrame, PROTOCOL_VERSION};
use crate::config::HandednessName;

/// A client that cannot take a message within this long is disconnected.
const SEND_TIMEOUT: Duration = Duration::from_secs(2);

/// Close code for policy violations (RFC 6455).
const CLOSE_POLICY: u16 = 1008;
const CLOSE_GOING_AWAY: u16 = 1001;

#[derive(Debug, Clone, Serialize)]
pub struct ScrewInfo {
    /// mm/rev
    pub lead: f64,
    pub starts: u32,
    pub handedness: HandednessName,
}

#[derive(Debug, Clone, Serialize)]
pub struct DriveInfo {
    pub screw: ScrewInfo,
    pub screw_ratio: f64,
    pub spline_ratio: f64,
    /// rpm
    pub real_speed_cap: f64,
    /// s
    pub control_period: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateResponse {
    pub version: u32,
    pub drive: DriveInfo,
    pub frame: TelemetryFrame,
}

fn drive_info(host: &TelemetryHost) -> DriveInfo {
    let cfg = host.config();
    let t = &cfg.drivetrain;
    DriveInfo {
        screw: ScrewInfo {
            lead: t.screw.lead(),
            starts: t.screw.starts(),
            handedness: match t.screw.handedness() {
                diffdrive_core::kinematics::Handedness::Right => HandednessName::Right,
                diffdrive_core::kinematics::Handedness::Left => HandednessName::Left,
            },
        },
        screw_ratio: t.screw_transmission.ratio(),
        spline_ratio: t.spline_transmission.ratio(),
        real_speed_cap: t.insertion_motor.real_speed_cap(),
        control_period: cfg.controller.control_period,
    }
}

pub fn router(host: Arc<TelemetryHost>) -> Router {
    Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/state", get(state))
        .route("/command", post(command))
        .route("/health", get(|| async { "ok" }))
        .with_state(host)
}

/// Serve until the listener fails.
pub async fn serve(listener: TcpListener, host: Arc<TelemetryHost>) -> std::io::Result<()> {
    axum::serve(listener, router(host)).await
}

async fn state(State(host): State<Arc<TelemetryHost>>) -> Json<StateResponse> {
    Json(StateResponse {
        version: PROTOCOL_VERSION,
        drive: drive_info(&host),
        frame: host.latest(),
    })
}

async fn command(State(host): State<Arc<TelemetryHost>>, body: String) -> Json<Ack> {
    Json(handle_text(&host, &body).await)
}

async fn handle_text(host: &TelemetryHost, text: &str) -> Ack {
    match parse_command(text) {
        Ok((id, cmd)) => host.command(id, cmd).await,
        Err(ack) => ack,
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(host): State<Arc<TelemetryHost>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| session(socket, host))
}

fn encode(msg: &ServerMessage) -> Message {
    Message::Text(serde_json::to_string(msg).expect("server messages serialize").into())
}

fn close(code: u16, reason: &str) -> Message {
    Message::Close(Some(CloseFrame {
        code,
        reason: Utf8Bytes::from(reason),
    }))
}

async fn session(socket: WebSocket, host: Arc<TelemetryHost>) {
    let (mut sink, mut stream) = socket.split();
    let mut frames = host.subscribe();
    let (ack_tx, mut acks) = mpsc::unbounded_channel::<Ack>();

    // Commands are handled one at a time, so at most one ack is in flight.
    let reader_host = Arc::clone(&host);
    let reader = tokio::spawn(async move {
        while let Some(Ok(msg)) = stream.next().await {
            let ack = match msg {
                Message::Text(text) => handle_text(&reader_host, text.as_str()).await,
                Message::Binary(_) => Ack::rejected(None, "binary messages are not supported"),
                Message::Close(_) => break,
                Message::Ping(_) | Message::Pong(_) => continue,
            };
            if ack_tx.send(ack).is_err() {
                break;
            }
        }
    });

    loop {
        let outgoing = tokio::select! {
            ack = acks.recv() => match ack {
                Some(ack) => encode(&ServerMessage::Ack(ack)),
                None => break,
            },
            frame = frames.recv() => match frame {
                Ok(f) => encode(&ServerMessage::Telemetry(f)),
                Err(SubscriptionEnd::Lagged(n)) => {
                    let reason = format!("consumer too slow: {n} frames dropped");
                    let _ = tokio::time::timeout(SEND_TIMEOUT, sink.send(close(CLOSE_POLICY, &reason))).await;
                    break;
                }
                Err(SubscriptionEnd::Closed) => {
                    let _ = tokio::time::timeout(SEND_TIMEOUT, sink.send(close(CLOSE_GOING_AWAY, "service stopping"))).await;
                    break;
                }
            },
        };
        match tokio::time::timeout(SEND_TIMEOUT, sink.send(outgoing)).await {
            Ok(Ok(())) => {}
            _ => break,
        }
    }
    reader.abort();
}
