//! Live teleoperation: a deterministic [`Session`] core plus a WebSocket
//! front end that paces it to the wall clock.
//!
//! The simulation task is the only owner of the session. Connections push
//! their frames into one ordered queue that is drained before every step, and
//! receive outbound frames through their own channel.

use crate::config::Scenario;
use crate::mission::MissionEvent;
use crate::mixer::RcChannels;
use crate::protocol::{self, Event, Frame, Hello, Message, Role};
use crate::sim::{SimError, Simulation};
use futures_util::{SinkExt, StreamExt};
use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::time::Duration;
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tokio_tungstenite::tungstenite::Message as WsMessage;

pub const DEFAULT_PORT: u16 = 8765;
pub const PORT_ENV: &str = "PODSIM_PORT";
/// Seconds without a pilot command before the channels revert to neutral.
pub const FAILSAFE_TIMEOUT_S: f64 = 0.5;

pub type ClientId = u64;

#[derive(Debug, Clone)]
struct Client {
    role: Role,
    last_seq_in: Option<u64>,
    next_seq_out: u64,
}

/// Frames addressed to one client.
pub type Outbox = Vec<(ClientId, Frame)>;

pub struct Session {
    sim: Simulation,
    clients: BTreeMap<ClientId, Client>,
    next_client: ClientId,
    pilot: Option<ClientId>,
    pending_cmd: Option<RcChannels>,
    pending_events: Vec<MissionEvent>,
    last_cmd_time: Option<f64>,
    failsafe: bool,
    paused: bool,
    faulted: bool,
    log_every: u64,
}

impl Session {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        let log_every = scenario.log_every();
        Ok(Self {
            sim: Simulation::new(scenario)?,
            clients: BTreeMap::new(),
            next_client: 1,
            pilot: None,
            pending_cmd: None,
            pending_events: Vec::new(),
            last_cmd_time: None,
            failsafe: false,
            paused: false,
            faulted: false,
            log_every,
        })
    }

    pub fn sim(&self) -> &Simulation {
        &self.sim
    }

    pub fn pilot(&self) -> Option<ClientId> {
        self.pilot
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn connect(&mut self) -> ClientId {
        let id = self.next_client;
        self.next_client += 1;
        self.clients.insert(
            id,
            Client {
                role: Role::Observer,
                last_seq_in: None,
                next_seq_out: 0,
            },
        );
        id
    }

    pub fn disconnect(&mut self, id: ClientId) -> Outbox {
        self.clients.remove(&id);
        let mut out = Outbox::new();
        if self.pilot == Some(id) {
            self.pilot = None;
            self.engage_failsafe("pilot disconnected", &mut out);
        }
        out
    }

    fn frame_for(&mut self, id: ClientId, message: Message) -> Option<(ClientId, Frame)> {
        let c = self.clients.get_mut(&id)?;
        let seq = c.next_seq_out;
        c.next_seq_out += 1;
        Some((id, Frame { seq, message }))
    }

    fn send(&mut self, id: ClientId, message: Message, out: &mut Outbox) {
        out.extend(self.frame_for(id, message));
    }

    fn broadcast(&mut self, message: Message, out: &mut Outbox) {
        let ids: Vec<_> = self.clients.keys().copied().collect();
        for id in ids {
            out.extend(self.frame_for(id, message.clone()));
        }
    }

    fn error(&mut self, id: ClientId, message: String, out: &mut Outbox) {
        self.send(id, Message::Event(Event::ProtocolError { message }), out);
    }

    fn engage_failsafe(&mut self, reason: &str, out: &mut Outbox) {
        let neutral = RcChannels::neutral(self.sim.channels().buoyancy);
        self.sim.set_channels(neutral);
        self.pending_cmd = None;
        self.last_cmd_time = None;
        self.failsafe = true;
        self.broadcast(
            Message::Event(Event::Failsafe {
                reason: reason.to_string(),
            }),
            out,
        );
    }

    /// Handles one inbound text frame. Malformed input produces an error event
    /// for the sender and nothing else.
    pub fn handle_text(&mut self, id: ClientId, text: &str) -> Outbox {
        let mut out = Outbox::new();
        let Some(client) = self.clients.get(&id) else {
            return out;
        };
        let frame = match protocol::decode(text) {
            Ok(f) => f,
            Err(e) => {
                self.error(id, e.to_string(), &mut out);
                return out;
            }
        };
        if client.last_seq_in.is_some_and(|last| frame.seq <= last) {
            self.error(
                id,
                format!("seq {} not greater than the previous frame", frame.seq),
                &mut out,
            );
            return out;
        }
        let role = client.role;
        if let Some(c) = self.clients.get_mut(&id) {
            c.last_seq_in = Some(frame.seq);
        }

        let pilot_only = |s: &mut Self, out: &mut Outbox, what: &str| -> bool {
            if role == Role::Pilot {
                true
            } else {
                s.error(id, format!("{what} requires the pilot role"), out);
                false
            }
        };
        match frame.message {
            Message::Hello(h) => {
                let granted = if h.role == Role::Pilot && self.pilot.is_none() {
                    self.pilot = Some(id);
                    Role::Pilot
                } else if h.role == Role::Pilot && self.pilot == Some(id) {
                    Role::Pilot
                } else {
                    Role::Observer
                };
                if let Some(c) = self.clients.get_mut(&id) {
                    c.role = granted;
                }
                let reply = Hello {
                    role: granted,
                    name: None,
                    version: Some(env!("CARGO_PKG_VERSION").to_string()),
                    scenario: Some(self.sim.scenario().name.clone()),
                };
                self.send(id, Message::Hello(reply), &mut out);
            }
            Message::Cmd(ch) => {
                if pilot_only(self, &mut out, "cmd") {
                    self.pending_cmd = Some(ch);
                    self.last_cmd_time = Some(self.sim.time());
                    self.failsafe = false;
                }
            }
            Message::Event(Event::Mission { event }) => {
                if pilot_only(self, &mut out, "mission event") {
                    self.pending_events.push(event);
                }
            }
            Message::Reset => {
                if pilot_only(self, &mut out, "reset") {
                    match self.sim.reset() {
                        Ok(()) => {
                            self.pending_cmd = None;
                            self.pending_events.clear();
                            self.last_cmd_time = None;
                            self.faulted = false;
                            self.broadcast(Message::Event(Event::Reset), &mut out);
                            let t = self.sim.telemetry();
                            self.broadcast(Message::Telemetry(t), &mut out);
                        }
                        Err(e) => self.error(id, e.to_string(), &mut out),
                    }
                }
            }
            Message::Pause(p) => {
                if pilot_only(self, &mut out, "pause") {
                    self.paused = p.paused;
                    self.broadcast(Message::Event(Event::Paused { paused: p.paused }), &mut out);
                }
            }
            other => {
                let name = other.type_name();
                self.error(
                    id,
                    format!("clients may not send `{name}` messages"),
                    &mut out,
                );
            }
        }
        out
    }

    /// Advances one simulation step (unless paused) and returns the frames it produced.
    pub fn tick(&mut self) -> Outbox {
        let mut out = Outbox::new();
        if self.paused || self.faulted {
            return out;
        }
        if let Some(ch) = self.pending_cmd.take() {
            self.sim.set_channels(ch);
        }
        if let Some(t) = self.last_cmd_time {
            if self.sim.time() - t >= FAILSAFE_TIMEOUT_S - 1e-9 {
                self.engage_failsafe("no command for 0.5 s", &mut out);
            }
        }
        let events = std::mem::take(&mut self.pending_events);
        match self.sim.step(&events) {
            Ok(report) => {
                for w in report.warnings {
                    let value = w.value.is_finite().then_some(w.value);
                    self.broadcast(
                        Message::Event(Event::ClampWarning {
                            channel: w.channel.to_string(),
                            value,
                        }),
                        &mut out,
                    );
                }
                if let Some(tr) = report.transition {
                    let abort_reason = self.sim.mission().abort;
                    self.broadcast(
                        Message::Event(Event::PhaseTransition {
                            t_s: tr.t,
                            from: tr.from,
                            to: tr.to,
                            abort_reason,
                        }),
                        &mut out,
                    );
                }
                if let Some(i) = report.grasped {
                    self.broadcast(
                        Message::Event(Event::Grasp {
                            object: i,
                            held: true,
                        }),
                        &mut out,
                    );
                }
                if let Some(i) = report.released {
                    self.broadcast(
                        Message::Event(Event::Grasp {
                            object: i,
                            held: false,
                        }),
                        &mut out,
                    );
                }
            }
            Err(e) => {
                self.faulted = true;
                self.broadcast(
                    Message::Event(Event::Fault {
                        message: e.to_string(),
                    }),
                    &mut out,
                );
                return out;
            }
        }
        if self.sim.state().step.is_multiple_of(self.log_every) {
            let t = self.sim.telemetry();
            self.broadcast(Message::Telemetry(t), &mut out);
        }
        out
    }

    pub fn failsafe_active(&self) -> bool {
        self.failsafe
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
}

enum Ingress {
    Connect {
        outbound: mpsc::UnboundedSender<String>,
        reply: tokio::sync::oneshot::Sender<ClientId>,
    },
    Text(ClientId, String),
    Disconnect(ClientId),
}

/// Binds the listener; fails immediately when the port is taken.
pub async fn bind(addr: SocketAddr) -> Result<TcpListener, ServeError> {
    TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })
}

/// Runs a live session on an already bound listener until the task is dropped.
pub async fn serve(scenario: Scenario, listener: TcpListener) -> Result<(), ServeError> {
    let step = Duration::from_secs_f64(scenario.step_s);
    let mut session = Session::new(scenario)?;
    let (tx, mut rx) = mpsc::unbounded_channel::<Ingress>();

    let accept_tx = tx.clone();
    tokio::spawn(async move {
        while let Ok((stream, peer)) = listener.accept().await {
            let tx = accept_tx.clone();
            tokio::spawn(async move {
                if let Err(e) = connection(stream, tx).await {
                    tracing::debug!(%peer, "connection closed: {e}");
                }
            });
        }
    });

    let mut senders: BTreeMap<ClientId, mpsc::UnboundedSender<String>> = BTreeMap::new();
    let mut interval = tokio::time::interval(step);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        interval.tick().await;
        let mut out = Outbox::new();
        while let Ok(msg) = rx.try_recv() {
            match msg {
                Ingress::Connect { outbound, reply } => {
                    let id = session.connect();
                    senders.insert(id, outbound);
                    let _ = reply.send(id);
                }
                Ingress::Text(id, text) => out.extend(session.handle_text(id, &text)),
                Ingress::Disconnect(id) => {
                    senders.remove(&id);
                    out.extend(session.disconnect(id));
                }
            }
        }
        out.extend(session.tick());
        for (id, frame) in out {
            if let Some(s) = senders.get(&id) {
                let _ = s.send(protocol::encode(&frame));
            }
        }
    }
}

async fn connection(
    stream: TcpStream,
    ingress: mpsc::UnboundedSender<Ingress>,
) -> Result<(), tokio_tungstenite::tungstenite::Error> {
    let ws = tokio_tungstenite::accept_async(stream).await?;
    let (mut sink, mut source) = ws.split();
    let (out_tx, mut out_rx) = mpsc::unbounded_channel();
    let (id_tx, id_rx) = tokio::sync::oneshot::channel();
    if ingress
        .send(Ingress::Connect {
            outbound: out_tx,
            reply: id_tx,
        })
        .is_err()
    {
        return Ok(());
    }
    let Ok(id) = id_rx.await else {
        return Ok(());
    };
    let result = loop {
        tokio::select! {
            inbound = source.next() => match inbound {
                Some(Ok(WsMessage::Text(t))) => {
                    let _ = ingress.send(Ingress::Text(id, t.to_string()));
                }
                Some(Ok(WsMessage::Binary(_))) => {
                    let _ = ingress.send(Ingress::Text(id, String::new()));
                }
                Some(Ok(WsMessage::Close(_))) | None => break Ok(()),
                Some(Ok(_)) => {}
                Some(Err(e)) => break Err(e),
            },
            outbound = out_rx.recv() => match outbound {
                Some(text) => {
                    if let Err(e) = sink.send(WsMessage::Text(text.into())).await {
                        break Err(e);
                    }
                }
                None => break Ok(()),
            },
        }
    };
    let _ = ingress.send(Ingress::Disconnect(id));
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::encode;

    fn scenario() -> Scenario {
        Scenario::from_json(
            r#"{"name": "live", "duration_s": 60, "mission": {"start_phase": "UnderwaterTransit"},
                "initial": {"position_m": [0, 0, 1], "tether_length_m": 5}}"#,
        )
        .unwrap()
    }

    fn text(seq: u64, message: Message) -> String {
        encode(&Frame { seq, message })
    }

    fn pilot(s: &mut Session) -> ClientId {
        let id = s.connect();
        s.handle_text(
            id,
            &text(
                0,
                Message::Hello(Hello {
                    role: Role::Pilot,
                    name: None,
                    version: None,
                    scenario: None,
                }),
            ),
        );
        id
    }

    #[test]
    fn second_pilot_becomes_observer() {
        let mut s = Session::new(scenario()).unwrap();
        let a = pilot(&mut s);
        let b = s.connect();
        let out = s.handle_text(
            b,
            &text(
                0,
                Message::Hello(Hello {
                    role: Role::Pilot,
                    name: None,
                    version: None,
                    scenario: None,
                }),
            ),
        );
        assert_eq!(s.pilot(), Some(a));
        assert!(matches!(&out[0].1.message, Message::Hello(h) if h.role == Role::Observer));
    }

    #[test]
    fn stale_seq_is_rejected() {
        let mut s = Session::new(scenario()).unwrap();
        let p = pilot(&mut s);
        let out = s.handle_text(p, &text(0, Message::Cmd(RcChannels::default())));
        assert!(matches!(
            &out[0].1.message,
            Message::Event(Event::ProtocolError { .. })
        ));
    }

    #[test]
    fn outbound_seq_increases_per_client() {
        let mut s = Session::new(scenario()).unwrap();
        let p = pilot(&mut s);
        let mut seqs = Vec::new();
        for _ in 0..20 {
            for (id, f) in s.tick() {
                if id == p {
                    seqs.push(f.seq);
                }
            }
        }
        assert!(seqs.windows(2).all(|w| w[1] > w[0]));
        assert!(!seqs.is_empty());
    }
}
