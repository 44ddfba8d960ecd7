use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use diffdrive::telemetry::protocol::{
    Ack, AckStatus, Command, CommandMessage, ModeName, MotorName, ServerMessage, TelemetryFrame,
};
use diffdrive::telemetry::{router, HostOptions, TelemetryHost};
use diffdrive_core::SimConfig;
use futures_util::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream};
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

/// Real-time 10 ms ticks, 20 Hz frames.
async fn start() -> (u16, Arc<TelemetryHost>) {
    let cfg = SimConfig::default();
    let host = Arc::new(TelemetryHost::spawn(cfg, HostOptions::realtime(&cfg)).unwrap());
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let port = listener.local_addr().unwrap().port();
    let app = router(Arc::clone(&host));
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (port, host)
}

async fn connect(port: u16) -> Ws {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://127.0.0.1:{port}/ws"))
        .await
        .unwrap();
    ws
}

async fn next_message(ws: &mut Ws) -> ServerMessage {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next())
            .await
            .expect("message within 5 s")
            .expect("stream open")
            .unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(t.as_str()).unwrap();
        }
    }
}

async fn next_frame(ws: &mut Ws) -> TelemetryFrame {
    loop {
        if let ServerMessage::Telemetry(f) = next_message(ws).await {
            return f;
        }
    }
}

async fn send(ws: &mut Ws, id: &str, cmd: Command) {
    let text = serde_json::to_string(&CommandMessage::new(id, cmd)).unwrap();
    ws.send(Message::Text(text.into())).await.unwrap();
}

/// Send and wait for the ack; returns the ack and the first frame after it.
async fn command(ws: &mut Ws, id: &str, cmd: Command) -> (Ack, TelemetryFrame) {
    send(ws, id, cmd).await;
    let ack = loop {
        if let ServerMessage::Ack(a) = next_message(ws).await {
            break a;
        }
    };
    (ack, next_frame(ws).await)
}

#[tokio::test]
async fn frames_are_ordered_at_twenty_hertz() {
    let (port, _host) = start().await;
    let mut ws = connect(port).await;
    let first = next_frame(&mut ws).await;
    let mut prev = first.clone();
    for _ in 0..20 {
        let f = next_frame(&mut ws).await;
        assert!(f.sequence > prev.sequence);
        assert_eq!(f.version, 1);
        prev = f;
    }
    // simulated time advances 50 ms per frame
    let dt = (prev.time - first.time) / (prev.sequence - first.sequence) as f64;
    assert!((dt - 0.05).abs() < 1e-9, "dt {dt}");
}

#[tokio::test]
async fn subscribers_see_identical_frames() {
    let (port, _host) = start().await;
    let mut a = connect(port).await;
    let mut b = connect(port).await;
    let mut seen_a = HashMap::new();
    let mut seen_b = HashMap::new();
    for _ in 0..15 {
        let f = next_frame(&mut a).await;
        seen_a.insert(f.sequence, f);
        let f = next_frame(&mut b).await;
        seen_b.insert(f.sequence, f);
    }
    let common: Vec<_> = seen_a.keys().filter(|k| seen_b.contains_key(k)).collect();
    assert!(common.len() >= 10);
    for k in common {
        assert_eq!(seen_a[k], seen_b[k]);
    }
}

#[tokio::test]
async fn rotation_enable_freezes_insertion() {
    let (port, _host) = start().await;
    let mut ws = connect(port).await;
    let (ack, _) = command(&mut ws, "ins", Command::SetInsertionTarget { mm: 2.0 }).await;
    assert_eq!(ack, Ack::accepted("ins"));
    let mut f = next_frame(&mut ws).await;
    while f.insertion_motor.enabled || (f.insertion_display - 2.0).abs() > 0.05 {
        f = next_frame(&mut ws).await;
    }

    let (ack, f) = command(&mut ws, "rot-on", Command::SetRotationEnable { enabled: true }).await;
    assert_eq!(ack.status, AckStatus::Accepted);
    assert_eq!(f.mode, ModeName::RotationEnabled);
    let held = f.insertion_display;

    command(&mut ws, "turn", Command::SetRotaryTarget { deg: 720.0 }).await;
    let mut last_rot = f.rotary_display;
    let mut advanced = false;
    for _ in 0..10 {
        let f = next_frame(&mut ws).await;
        assert_eq!(f.insertion_display, held);
        advanced |= f.rotary_display > last_rot;
        last_rot = f.rotary_display;
    }
    assert!(advanced);
}

#[tokio::test]
async fn speed_above_cap_is_rejected() {
    let (port, _host) = start().await;
    let mut ws = connect(port).await;
    let cmd = Command::SetSpeed {
        motor: MotorName::Rotary,
        rpm: 200.0,
    };
    let (ack, _) = command(&mut ws, "fast", cmd).await;
    assert_eq!(ack.request_id.as_deref(), Some("fast"));
    assert_eq!(ack.status, AckStatus::Rejected);
    assert!(ack.reason.unwrap().contains("exceeds real_speed_cap"));
    let (ack, _) = command(
        &mut ws,
        "ok",
        Command::SetSpeed {
            motor: MotorName::Rotary,
            rpm: 40.0,
        },
    )
    .await;
    assert_eq!(ack.status, AckStatus::Accepted);
}

#[tokio::test]
async fn estop_disables_and_latches() {
    let (port, _host) = start().await;
    let mut ws = connect(port).await;
    command(&mut ws, "go", Command::SetInsertionTarget { mm: 100.0 }).await;
    let f = next_frame(&mut ws).await;
    assert!(f.insertion_motor.enabled);

    let (_, f) = command(&mut ws, "stop", Command::EStop { engaged: true }).await;
    assert!(f.estop);
    for m in [f.insertion_motor, f.rotary_motor] {
        assert!(!m.enabled);
        assert_eq!(m.actual_speed, 0.0);
    }
    // new targets do not release the latch
    command(&mut ws, "again", Command::SetRotaryTarget { deg: 90.0 }).await;
    for _ in 0..3 {
        let f = next_frame(&mut ws).await;
        assert!(!f.insertion_motor.enabled && !f.rotary_motor.enabled);
    }
    let (_, f) = command(&mut ws, "reset", Command::EStop { engaged: false }).await;
    assert!(!f.estop);
    let f = next_frame(&mut ws).await;
    assert!(f.insertion_motor.enabled || f.rotary_motor.enabled);
}

#[tokio::test]
async fn every_command_gets_exactly_one_ack() {
    let (port, _host) = start().await;
    let mut ws = connect(port).await;
    let raw = [
        r#"{"version":1,"request_id":"a","kind":"SetInsertionTarget","value":{"mm":1.0}}"#,
        r#"{"version":1,"request_id":"b","kind":"Teleport","value":{}}"#,
        r#"{"version":1,"request_id":"c","kind":"SetSpeed","value":{"motor":"insertion"}}"#,
        r#"{"version":1,"request_id":"d","kind":"SetRotationEnable","value":{"enabled":false}}"#,
        "garbage",
    ];
    for text in raw {
        ws.send(Message::Text(text.into())).await.unwrap();
    }
    let mut acks = Vec::new();
    while acks.len() < raw.len() {
        if let ServerMessage::Ack(a) = next_message(&mut ws).await {
            acks.push(a);
        }
    }
    let ids: Vec<Option<&str>> = acks.iter().map(|a| a.request_id.as_deref()).collect();
    assert_eq!(ids, [Some("a"), Some("b"), Some("c"), Some("d"), None]);
    let status: Vec<AckStatus> = acks.iter().map(|a| a.status).collect();
    use AckStatus::*;
    assert_eq!(status, [Accepted, Rejected, Rejected, Accepted, Rejected]);
    // nothing else queued: the next few messages are frames only
    for _ in 0..4 {
        assert!(matches!(next_message(&mut ws).await, ServerMessage::Telemetry(_)));
    }
}

#[tokio::test]
async fn state_and_command_endpoints() {
    let (port, host) = start().await;
    let http = |req: String| async move {
        use tokio::io::{AsyncReadExt, AsyncWriteExt};
        let mut s = TcpStream::connect(("127.0.0.1", port)).await.unwrap();
        s.write_all(req.as_bytes()).await.unwrap();
        let mut out = String::new();
        s.read_to_string(&mut out).await.unwrap();
        out
    };
    let state = http("GET /state HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n".into()).await;
    assert!(state.starts_with("HTTP/1.1 200"));
    assert!(state.contains("\"screw_ratio\":2.5"));

    let body = serde_json::to_string(&CommandMessage::new("h1", Command::SetRotationEnable { enabled: true })).unwrap();
    let resp = http(format!(
        "POST /command HTTP/1.1\r\nHost: x\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    ))
    .await;
    assert!(resp.contains(r#""request_id":"h1","status":"accepted""#), "{resp}");
    tokio::time::sleep(Duration::from_millis(120)).await;
    assert_eq!(host.latest().mode, ModeName::RotationEnabled);
}
