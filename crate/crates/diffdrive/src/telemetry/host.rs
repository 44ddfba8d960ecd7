//! The thread that owns the simulator.
//!
//! Commands arrive on a bounded queue and are applied at the start of the
//! next control tick; telemetry leaves on a broadcast channel whose `send`
//! never waits, so a slow client can only lose frames, never stall the loop.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use diffdrive_core::sim::SimError;
use diffdrive_core::{SimConfig, Simulator};
use tokio::sync::{broadcast, mpsc, oneshot, watch};

use super::protocol::{Ack, Command, TelemetryFrame, PROTOCOL_VERSION};

pub const DEFAULT_FRAME_RATE_HZ: f64 = 20.0;
pub const DEFAULT_BUFFER: usize = 64;
const COMMAND_QUEUE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HostOptions {
    /// Wall-clock time per control tick. Defaults to the control period.
    pub tick_interval: Duration,
    /// Control ticks between telemetry frames.
    pub ticks_per_frame: u32,
    /// Frames a subscriber may fall behind before it is dropped.
    pub buffer: usize,
}

impl HostOptions {
    /// Real-time pacing with frames at [`DEFAULT_FRAME_RATE_HZ`].
    pub fn realtime(sim: &SimConfig) -> Self {
        let period = sim.controller.control_period;
        Self {
            tick_interval: Duration::from_secs_f64(period),
            ticks_per_frame: ((1.0 / DEFAULT_FRAME_RATE_HZ) / period).round().max(1.0) as u32,
            buffer: DEFAULT_BUFFER,
        }
    }
}

struct Request {
    request_id: String,
    command: Command,
    reply: oneshot::Sender<Ack>,
}

/// Why a subscription ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubscriptionEnd {
    /// The subscriber fell more than the buffer behind.
    Lagged(u64),
    /// The host stopped.
    Closed,
}

/// One consumer's view of the telemetry stream.
pub struct Subscription {
    first: Option<TelemetryFrame>,
    rx: broadcast::Receiver<TelemetryFrame>,
    last_sequence: u64,
}

impl Subscription {
    /// Next frame. The first call returns the current state.
    pub async fn recv(&mut self) -> Result<TelemetryFrame, SubscriptionEnd> {
        if let Some(f) = self.first.take() {
            self.last_sequence = f.sequence;
            return Ok(f);
        }
        loop {
            match self.rx.recv().await {
                // the snapshot may already be queued behind us
                Ok(f) if f.sequence <= self.last_sequence => continue,
                Ok(f) => {
                    self.last_sequence = f.sequence;
                    return Ok(f);
                }
                Err(broadcast::error::RecvError::Lagged(n)) => return Err(SubscriptionEnd::Lagged(n)),
                Err(broadcast::error::RecvError::Closed) => return Err(SubscriptionEnd::Closed),
            }
        }
    }
}

/// Handle to a running simulator thread. Dropping it stops the thread.
pub struct TelemetryHost {
    config: SimConfig,
    commands: mpsc::Sender<Request>,
    frames: broadcast::Sender<TelemetryFrame>,
    latest: watch::Receiver<TelemetryFrame>,
    stop: Arc<AtomicBool>,
    thread: Mutex<Option<JoinHandle<()>>>,
}

fn frame(sim: &Simulator, sequence: u64) -> TelemetryFrame {
    let d = sim.drive();
    let c = sim.controller_state();
    let disp = sim.display();
    TelemetryFrame {
        version: PROTOCOL_VERSION,
        sequence,
        time: sim.time(),
        insertion_display: disp.insertion,
        rotary_display: disp.rotary,
        mode: sim.mode().into(),
        estop: c.estop,
        insertion_target: c.insertion_target,
        rotary_target: c.rotary_target,
        insertion_motor: (&d.insertion_motor).into(),
        rotary_motor: (&d.rotary_motor).into(),
        ie_counts: d.ie.counts,
        re_counts: d.re.counts,
    }
}

fn apply(sim: &mut Simulator, command: Command) -> Result<(), String> {
    match command {
        Command::SetInsertionTarget { mm } => sim.set_insertion_target(mm),
        Command::SetRotaryTarget { deg } => sim.set_rotary_target(deg),
        Command::SetRotationEnable { enabled } => sim.set_rotation_enable(enabled),
        Command::SetSpeed { motor, rpm } => sim.set_speed(motor.into(), rpm).map_err(|e| e.to_string())?,
        Command::EStop { engaged } => sim.set_estop(engaged),
    }
    Ok(())
}

impl TelemetryHost {
    pub fn spawn(config: SimConfig, options: HostOptions) -> Result<Self, SimError> {
        let mut sim = Simulator::new(&config)?;
        let (cmd_tx, mut cmd_rx) = mpsc::channel::<Request>(COMMAND_QUEUE);
        let (frame_tx, _) = broadcast::channel(options.buffer.max(1));
        let (latest_tx, latest_rx) = watch::channel(frame(&sim, 0));
        let stop = Arc::new(AtomicBool::new(false));

        let frames = frame_tx.clone();
        let stop_flag = Arc::clone(&stop);
        let ticks_per_frame = options.ticks_per_frame.max(1);
        let thread = std::thread::Builder::new()
            .name("diffdrive-sim".into())
            .spawn(move || {
                let mut sequence = 0u64;
                let mut ticks = 0u32;
                let mut deadline = Instant::now();
                while !stop_flag.load(Ordering::Acquire) {
                    loop {
                        match cmd_rx.try_recv() {
                            Ok(req) => {
                                let ack = match apply(&mut sim, req.command) {
                                    Ok(()) => Ack::accepted(req.request_id),
                                    Err(reason) => Ack::rejected(Some(req.request_id), reason),
                                };
                                // the requester may have gone away; nothing to do then
                                let _ = req.reply.send(ack);
                            }
                            Err(mpsc::error::TryRecvError::Empty) => break,
                            Err(mpsc::error::TryRecvError::Disconnected) => return,
                        }
                    }
                    if let Err(e) = sim.tick() {
                        eprintln!("simulation stopped: {e}");
                        return;
                    }
                    ticks += 1;
                    if ticks == ticks_per_frame {
                        ticks = 0;
                        sequence += 1;
                        let f = frame(&sim, sequence);
                        latest_tx.send_replace(f.clone());
                        // no subscribers is fine
                        let _ = frames.send(f);
                    }
                    deadline += options.tick_interval;
                    let now = Instant::now();
                    if deadline > now {
                        std::thread::sleep(deadline - now);
                    } else if now - deadline > options.tick_interval * 10 {
                        // badly behind (suspended process); do not try to catch up
                        deadline = now;
                    }
                }
            })
            .expect("spawn simulation thread");

        Ok(Self {
            config,
            commands: cmd_tx,
            frames: frame_tx,
            latest: latest_rx,
            stop,
            thread: Mutex::new(Some(thread)),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// The most recent frame.
    pub fn latest(&self) -> TelemetryFrame {
        self.latest.borrow().clone()
    }

    pub fn subscribe(&self) -> Subscription {
        let rx = self.frames.subscribe();
        Subscription {
            first: Some(self.latest()),
            rx,
            last_sequence: 0,
        }
    }

    /// Queue a command and wait for its acknowledgment.
    pub async fn command(&self, request_id: String, command: Command) -> Ack {
        let (reply, rx) = oneshot::channel();
        let req = Request {
            request_id: request_id.clone(),
            command,
            reply,
        };
        if self.commands.send(req).await.is_err() {
            return Ack::rejected(Some(request_id), "simulator is not running");
        }
        rx.await
            .unwrap_or_else(|_| Ack::rejected(Some(request_id), "simulator is not running"))
    }

    pub fn shutdown(&self) {
        self.stop.store(true, Ordering::Release);
        let handle = self.thread.lock().map(|mut t| t.take()).unwrap_or(None);
        if let Some(h) = handle {
            let _ = h.join();
        }
    }
}

impl Drop for TelemetryHost {
    fn drop(&mut self) {
        self.shutdown();
    }
}
