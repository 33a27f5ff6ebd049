//! One endpoint of the pairing and capture-sync protocol as a pure state
//! machine. [`step`] is the only way a session changes.
//!
//! Pairing is a request/accept exchange followed by an offer/ack round:
//!
//! ```text
//! initiator                       responder
//!   PairRequest(caps A)  ------>
//!                        <------  PairAccept
//!                        <------  CapabilityOffer(caps B)
//!   CapabilityAck(profile) ---->
//! ```
//!
//! The initiator is configured once it has sent the ack; the responder once
//! the ack matches its own negotiation. Unanswered messages are resent with a
//! doubling timeout. A session that gives up, or sees an input its phase does
//! not allow, moves to `Failed` and sends a burst of `Error` copies so the
//! peer fails too. [`TRANSITIONS`] lists every allowed phase change.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::message::{Message, MessageKind, Role};
use crate::registry::{negotiate_sets, CapabilityProfile, CapabilitySet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    Idle,
    Pairing,
    Negotiating,
    Configured,
    Capturing,
    Done,
    Failed,
}

impl Phase {
    pub const ALL: [Phase; 7] = [
        Phase::Idle,
        Phase::Pairing,
        Phase::Negotiating,
        Phase::Configured,
        Phase::Capturing,
        Phase::Done,
        Phase::Failed,
    ];

    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Done | Phase::Failed)
    }

    /// Configured, Capturing or Done.
    pub fn is_configured(self) -> bool {
        matches!(self, Phase::Configured | Phase::Capturing | Phase::Done)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyncConfig {
    /// Wait before the first retransmission; each later wait doubles.
    pub initial_timeout_ms: f64,
    pub retries: u32,
    /// How long a responder waits for the first PairRequest.
    pub listen_timeout_ms: f64,
    /// Copies of an Error message sent on failure.
    pub error_repeats: u32,
}

impl SyncConfig {
    /// Defaults for a link with the given one-way latency bounds. The first
    /// timeout is four one-way latencies, raised when needed so it always
    /// covers a worst-case round trip.
    pub fn for_link(base_latency_ms: f64, jitter_ms: f64) -> Self {
        let t0 = (4.0 * base_latency_ms).max(2.0 * (base_latency_ms + jitter_ms) + 1.0);
        SyncConfig { initial_timeout_ms: t0, retries: 3, listen_timeout_ms: 16.0 * t0, error_repeats: 8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TimerKind {
    Retransmit,
    ListenTimeout,
    CaptureBegin,
    Frame,
    CaptureEnd,
}

/// Pending timer, in the session's local clock. Only the latest one armed
/// is live; a timer event carrying any other id is stale and ignored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deadline {
    pub at: f64,
    pub kind: TimerKind,
    pub id: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Command {
    /// Initiator only: begin capturing `delay_ms` from now.
    StartCapture {
        delay_ms: f64,
        duration_ms: u64,
    },
    /// Initiator only: change focus `lead_frames` frames ahead of the next one.
    SetFocus {
        mode: String,
        depth: f64,
        lead_frames: u64,
    },
    SetMode {
        mode: String,
        lead_frames: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Event {
    Start,
    Timer { kind: TimerKind, id: u64 },
    Message(Message),
    Command(Command),
}

/// An event and the local time it is observed at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Input {
    pub now: f64,
    pub event: Event,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptureSchedule {
    pub start_time: f64,
    pub duration_ms: u64,
    pub frame_rate: u32,
    pub frame_count: u64,
}

impl CaptureSchedule {
    fn new(start_time: f64, duration_ms: u64, frame_rate: u32) -> Self {
        let frame_count = duration_ms * u64::from(frame_rate) / 1000;
        CaptureSchedule { start_time, duration_ms, frame_rate, frame_count }
    }

    pub fn frame_time(&self, seq: u64) -> f64 {
        self.start_time + seq as f64 * 1000.0 / f64::from(self.frame_rate)
    }

    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration_ms as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CameraChange {
    Focus { mode: String, depth: f64 },
    Mode { mode: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendingChange {
    pub effective_seq: u64,
    pub change: CameraChange,
}

/// A change and the frame it was applied just before.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppliedChange {
    pub before_seq: u64,
    pub effective_seq: u64,
    pub change: CameraChange,
}

/// Endpoint-local camera settings, standing in for the platform camera API.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CameraState {
    pub focus_mode: Option<String>,
    pub focus_depth: Option<f64>,
    pub capture_mode: Option<String>,
    pub pending: Vec<PendingChange>,
    pub applied: Vec<AppliedChange>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub role: Role,
    pub phase: Phase,
    /// Set exactly while the phase is Configured, Capturing or Done.
    pub negotiated: Option<CapabilityProfile>,
    /// Offset of the peer clock from ours. Clocks are not synchronized by
    /// the protocol, so this stays 0.
    pub clock_offset_estimate: f64,
    /// Highest FrameTick seq received from the peer.
    pub last_seq_seen: Option<u64>,
    pub capabilities: CapabilitySet,
    pub peer_capabilities: Option<CapabilitySet>,
    pub config: SyncConfig,
    pub next_msg_id: u64,
    /// Peer message ids already handled.
    pub seen: BTreeSet<u64>,
    pub deadline: Option<Deadline>,
    pub next_timer_id: u64,
    pub attempts: u32,
    /// Messages resent on retransmission or on a duplicate request.
    pub unanswered: Vec<Message>,
    pub last_ack: Option<Message>,
    pub capture: Option<CaptureSchedule>,
    /// Seq of the next FrameTick this endpoint will emit.
    pub next_seq: u64,
    pub camera: CameraState,
    pub failure: Option<String>,
}

impl SessionState {
    pub fn new(role: Role, capabilities: CapabilitySet, config: SyncConfig) -> Self {
        SessionState {
            role,
            phase: Phase::Idle,
            negotiated: None,
            clock_offset_estimate: 0.0,
            last_seq_seen: None,
            capabilities,
            peer_capabilities: None,
            config,
            next_msg_id: 0,
            seen: BTreeSet::new(),
            deadline: None,
            next_timer_id: 0,
            attempts: 0,
            unanswered: Vec::new(),
            last_ack: None,
            capture: None,
            next_seq: 0,
            camera: CameraState::default(),
            failure: None,
        }
    }

    fn message(&mut self, kind: MessageKind) -> Message {
        let msg = Message { sender: self.role, msg_id: self.next_msg_id, kind };
        self.next_msg_id += 1;
        msg
    }

    fn arm(&mut self, kind: TimerKind, at: f64) {
        self.deadline = Some(Deadline { at, kind, id: self.next_timer_id });
        self.next_timer_id += 1;
    }

    fn profile(&self) -> Result<&CapabilityProfile, String> {
        self.negotiated.as_ref().ok_or_else(|| "no negotiated profile".to_string())
    }
}

/// Input categories used by the transition table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InputKind {
    Start,
    Timer(TimerKind),
    PairRequest,
    PairAccept,
    CapabilityOffer,
    CapabilityAck,
    CaptureStart,
    FocusSet,
    ModeSet,
    FrameTick,
    Error,
    StartCapture,
    SetFocus,
    SetMode,
}

impl InputKind {
    pub const ALL: [InputKind; 18] = [
        InputKind::Start,
        InputKind::Timer(TimerKind::Retransmit),
        InputKind::Timer(TimerKind::ListenTimeout),
        InputKind::Timer(TimerKind::CaptureBegin),
        InputKind::Timer(TimerKind::Frame),
        InputKind::Timer(TimerKind::CaptureEnd),
        InputKind::PairRequest,
        InputKind::PairAccept,
        InputKind::CapabilityOffer,
        InputKind::CapabilityAck,
        InputKind::CaptureStart,
        InputKind::FocusSet,
        InputKind::ModeSet,
        InputKind::FrameTick,
        InputKind::Error,
        InputKind::StartCapture,
        InputKind::SetFocus,
        InputKind::SetMode,
    ];

    pub fn of(event: &Event) -> InputKind {
        match event {
            Event::Start => InputKind::Start,
            Event::Timer { kind, .. } => InputKind::Timer(*kind),
            Event::Message(m) => match m.kind {
                MessageKind::PairRequest { .. } => InputKind::PairRequest,
                MessageKind::PairAccept => InputKind::PairAccept,
                MessageKind::CapabilityOffer { .. } => InputKind::CapabilityOffer,
                MessageKind::CapabilityAck { .. } => InputKind::CapabilityAck,
                MessageKind::CaptureStart { .. } => InputKind::CaptureStart,
                MessageKind::FocusSet { .. } => InputKind::FocusSet,
                MessageKind::ModeSet { .. } => InputKind::ModeSet,
                MessageKind::FrameTick { .. } => InputKind::FrameTick,
                MessageKind::Error { .. } => InputKind::Error,
            },
            Event::Command(c) => match c {
                Command::StartCapture { .. } => InputKind::StartCapture,
                Command::SetFocus { .. } => InputKind::SetFocus,
                Command::SetMode { .. } => InputKind::SetMode,
            },
        }
    }
}

/// An allowed (role, phase, input) combination and the phases it may lead
/// to. Combinations not listed are protocol violations and lead to
/// `Failed`. `Done` and `Failed` absorb every input unchanged.
#[derive(Clone, Copy, Debug)]
pub struct Transition {
    pub role: Role,
    pub from: Phase,
    pub input: InputKind,
    pub to: &'static [Phase],
}

const fn t(role: Role, from: Phase, input: InputKind, to: &'static [Phase]) -> Transition {
    Transition { role, from, input, to }
}

use InputKind as K;
use Phase::{Capturing as Cap, Configured as Cfg, Done, Failed as F, Idle, Negotiating as Neg, Pairing};
use Role::{Initiator as I, Responder as R};
use TimerKind as Tk;

pub const TRANSITIONS: &[Transition] = &[
    t(I, Idle, K::Start, &[Pairing]),
    t(I, Pairing, K::Timer(Tk::Retransmit), &[Pairing, F]),
    t(I, Pairing, K::PairAccept, &[Neg]),
    t(I, Pairing, K::CapabilityOffer, &[Cfg, F]),
    t(I, Pairing, K::Error, &[F]),
    t(I, Neg, K::Timer(Tk::Retransmit), &[Neg, F]),
    t(I, Neg, K::PairAccept, &[Neg]),
    t(I, Neg, K::CapabilityOffer, &[Cfg, F]),
    t(I, Neg, K::Error, &[F]),
    t(I, Cfg, K::PairAccept, &[Cfg]),
    t(I, Cfg, K::CapabilityOffer, &[Cfg, F]),
    t(I, Cfg, K::StartCapture, &[Cfg, F]),
    t(I, Cfg, K::Timer(Tk::CaptureBegin), &[Cap, F]),
    t(I, Cfg, K::FrameTick, &[Cfg, F]),
    t(I, Cfg, K::Error, &[F]),
    t(I, Cap, K::PairAccept, &[Cap]),
    t(I, Cap, K::CapabilityOffer, &[Cap, F]),
    t(I, Cap, K::Timer(Tk::Frame), &[Cap]),
    t(I, Cap, K::Timer(Tk::CaptureEnd), &[Done]),
    t(I, Cap, K::FrameTick, &[Cap, F]),
    t(I, Cap, K::SetFocus, &[Cap, F]),
    t(I, Cap, K::SetMode, &[Cap, F]),
    t(I, Cap, K::Error, &[F]),
    t(R, Idle, K::Start, &[Pairing]),
    t(R, Pairing, K::Timer(Tk::ListenTimeout), &[F]),
    t(R, Pairing, K::PairRequest, &[Neg]),
    t(R, Pairing, K::Error, &[F]),
    t(R, Neg, K::PairRequest, &[Neg, F]),
    t(R, Neg, K::Timer(Tk::Retransmit), &[Neg, F]),
    t(R, Neg, K::CapabilityAck, &[Cfg, F]),
    t(R, Neg, K::Error, &[F]),
    t(R, Cfg, K::PairRequest, &[Cfg, F]),
    t(R, Cfg, K::CapabilityAck, &[Cfg, F]),
    t(R, Cfg, K::CaptureStart, &[Cfg, F]),
    t(R, Cfg, K::Timer(Tk::CaptureBegin), &[Cap, F]),
    t(R, Cfg, K::FrameTick, &[Cfg, F]),
    t(R, Cfg, K::FocusSet, &[Cfg, F]),
    t(R, Cfg, K::ModeSet, &[Cfg, F]),
    t(R, Cfg, K::Error, &[F]),
    t(R, Cap, K::PairRequest, &[Cap, F]),
    t(R, Cap, K::CapabilityAck, &[Cap, F]),
    t(R, Cap, K::CaptureStart, &[Cap, F]),
    t(R, Cap, K::Timer(Tk::Frame), &[Cap]),
    t(R, Cap, K::Timer(Tk::CaptureEnd), &[Done]),
    t(R, Cap, K::FrameTick, &[Cap, F]),
    t(R, Cap, K::FocusSet, &[Cap, F]),
    t(R, Cap, K::ModeSet, &[Cap, F]),
    t(R, Cap, K::Error, &[F]),
];

pub fn transition(role: Role, from: Phase, input: InputKind) -> Option<&'static Transition> {
    TRANSITIONS.iter().find(|t| t.role == role && t.from == from && t.input == input)
}

type Outcome = Result<(), String>;

/// Advances `state` by one input. Never panics; protocol violations end in
/// `Failed` with an `Error` burst as the output.
pub fn step(mut state: SessionState, input: &Input) -> (SessionState, Vec<Message>) {
    let mut out = Vec::new();
    if state.phase.is_terminal() {
        return (state, out);
    }
    let s = &mut state;
    let result = match &input.event {
        Event::Timer { kind, id } => match s.deadline {
            Some(d) if d.id == *id && d.kind == *kind => {
                s.deadline = None;
                match transition(s.role, s.phase, InputKind::Timer(*kind)) {
                    Some(_) => on_timer(s, d, &mut out),
                    None => Err(format!("unexpected {kind:?} timer in phase {:?}", s.phase)),
                }
            }
            _ => Ok(()),
        },
        _ if transition(s.role, s.phase, InputKind::of(&input.event)).is_none() => {
            if let Event::Message(Message { kind: MessageKind::Error { reason }, .. }) = &input.event {
                peer_failed(s, reason);
                return (state, out);
            }
            Err(format!("unexpected {:?} in phase {:?}", InputKind::of(&input.event), s.phase))
        }
        Event::Start => on_start(s, input.now, &mut out),
        Event::Message(m) => {
            if m.sender != s.role.peer() {
                Err(format!("message from {:?} addressed to itself", m.sender))
            } else {
                let dup = !s.seen.insert(m.msg_id);
                on_message(s, m, dup, input.now, &mut out)
            }
        }
        Event::Command(c) => on_command(s, c, input.now, &mut out),
    };
    if let Err(reason) = result {
        fail(s, reason, &mut out);
    }
    (state, out)
}

fn fail(s: &mut SessionState, reason: String, out: &mut Vec<Message>) {
    out.clear();
    s.phase = Phase::Failed;
    s.negotiated = None;
    s.deadline = None;
    let msg = s.message(MessageKind::Error { reason: reason.clone() });
    out.extend(std::iter::repeat_n(msg, s.config.error_repeats as usize));
    s.failure = Some(reason);
}

fn peer_failed(s: &mut SessionState, reason: &str) {
    s.phase = Phase::Failed;
    s.negotiated = None;
    s.deadline = None;
    s.failure = Some(format!("peer failed: {reason}"));
}

fn on_start(s: &mut SessionState, now: f64, out: &mut Vec<Message>) -> Outcome {
    s.phase = Phase::Pairing;
    match s.role {
        Role::Initiator => {
            let req = s.message(MessageKind::PairRequest { capabilities: s.capabilities.clone() });
            s.unanswered = vec![req.clone()];
            s.attempts = 0;
            out.push(req);
            s.arm(TimerKind::Retransmit, now + s.config.initial_timeout_ms);
        }
        Role::Responder => s.arm(TimerKind::ListenTimeout, now + s.config.listen_timeout_ms),
    }
    Ok(())
}

fn on_timer(s: &mut SessionState, d: Deadline, out: &mut Vec<Message>) -> Outcome {
    match (d.kind, s.phase) {
        (TimerKind::Retransmit, Phase::Pairing | Phase::Negotiating) => {
            if s.attempts >= s.config.retries {
                return Err(format!("no reply after {} attempts", s.config.retries + 1));
            }
            s.attempts += 1;
            out.extend(s.unanswered.iter().cloned());
            let wait = s.config.initial_timeout_ms * f64::from(1u32 << s.attempts.min(30));
            s.arm(TimerKind::Retransmit, d.at + wait);
            Ok(())
        }
        (TimerKind::ListenTimeout, Phase::Pairing) => {
            Err(format!("no pairing request within {} ms", s.config.listen_timeout_ms))
        }
        (TimerKind::CaptureBegin, Phase::Configured) => {
            if s.capture.is_none() {
                return Err("capture timer without a capture schedule".into());
            }
            s.phase = Phase::Capturing;
            s.next_seq = 0;
            advance_frames(s, out)
        }
        (TimerKind::Frame, Phase::Capturing) => advance_frames(s, out),
        (TimerKind::CaptureEnd, Phase::Capturing) => {
            s.phase = Phase::Done;
            Ok(())
        }
        (kind, phase) => Err(format!("unexpected {kind:?} timer in phase {phase:?}")),
    }
}

/// Emits the next due FrameTick, applying camera changes scheduled for it,
/// and arms the following frame or the end of the capture.
fn advance_frames(s: &mut SessionState, out: &mut Vec<Message>) -> Outcome {
    let cap = s.capture.ok_or("capturing without a schedule")?;
    if s.next_seq < cap.frame_count {
        let seq = s.next_seq;
        apply_due_changes(s, seq);
        let tick = s.message(MessageKind::FrameTick { seq, timestamp: cap.frame_time(seq) });
        out.push(tick);
        s.next_seq += 1;
    }
    if s.next_seq < cap.frame_count {
        s.arm(TimerKind::Frame, cap.frame_time(s.next_seq));
    } else {
        s.arm(TimerKind::CaptureEnd, cap.end_time());
    }
    Ok(())
}

fn apply_due_changes(s: &mut SessionState, seq: u64) {
    let (due, later): (Vec<_>, Vec<_>) = s.camera.pending.drain(..).partition(|p| p.effective_seq <= seq);
    s.camera.pending = later;
    for p in due {
        match &p.change {
            CameraChange::Focus { mode, depth } => {
                s.camera.focus_mode = Some(mode.clone());
                s.camera.focus_depth = Some(*depth);
            }
            CameraChange::Mode { mode } => s.camera.capture_mode = Some(mode.clone()),
        }
        s.camera.applied.push(AppliedChange { before_seq: seq, effective_seq: p.effective_seq, change: p.change });
    }
}

fn on_message(s: &mut SessionState, m: &Message, dup: bool, now: f64, out: &mut Vec<Message>) -> Outcome {
    match (&m.kind, s.role, s.phase) {
        (MessageKind::Error { reason }, _, _) => {
            if !dup {
                peer_failed(s, reason);
            }
            Ok(())
        }

        (MessageKind::PairAccept, Role::Initiator, Phase::Pairing) => {
            s.phase = Phase::Negotiating;
            Ok(())
        }
        // Late or duplicated: the offer may already have overtaken it.
        (MessageKind::PairAccept, Role::Initiator, _) => Ok(()),

        (MessageKind::CapabilityOffer { capabilities }, Role::Initiator, Phase::Pairing | Phase::Negotiating) => {
            let profile = negotiate_sets(&s.capabilities, capabilities).ok_or("no common capture profile")?;
            let ack = s.message(MessageKind::CapabilityAck { profile: profile.clone() });
            s.last_ack = Some(ack.clone());
            out.push(ack);
            s.peer_capabilities = Some(capabilities.clone());
            s.negotiated = Some(profile);
            s.unanswered.clear();
            s.deadline = None;
            s.phase = Phase::Configured;
            Ok(())
        }
        (MessageKind::CapabilityOffer { .. }, Role::Initiator, _) if dup => {
            // The responder has not seen our ack yet.
            out.extend(s.last_ack.clone());
            Ok(())
        }

        (MessageKind::PairRequest { capabilities }, Role::Responder, Phase::Pairing) => {
            s.peer_capabilities = Some(capabilities.clone());
            let accept = s.message(MessageKind::PairAccept);
            let offer = s.message(MessageKind::CapabilityOffer { capabilities: s.capabilities.clone() });
            s.unanswered = vec![accept, offer];
            out.extend(s.unanswered.iter().cloned());
            s.attempts = 0;
            s.arm(TimerKind::Retransmit, now + s.config.initial_timeout_ms);
            s.phase = Phase::Negotiating;
            Ok(())
        }
        (MessageKind::PairRequest { .. }, Role::Responder, Phase::Negotiating) if dup => {
            out.extend(s.unanswered.iter().cloned());
            Ok(())
        }
        (MessageKind::PairRequest { .. }, Role::Responder, _) if dup => Ok(()),

        (MessageKind::CapabilityAck { profile }, Role::Responder, Phase::Negotiating) => {
            let peer = s.peer_capabilities.as_ref().ok_or("ack before any pairing request")?;
            let expected = negotiate_sets(peer, &s.capabilities);
            if expected.as_ref() != Some(profile) {
                return Err("acknowledged profile differs from local negotiation".into());
            }
            s.negotiated = expected;
            s.unanswered.clear();
            s.deadline = None;
            s.phase = Phase::Configured;
            Ok(())
        }
        (MessageKind::CapabilityAck { .. }, Role::Responder, _) if dup => Ok(()),

        (MessageKind::CaptureStart { start_time, duration_ms }, Role::Responder, Phase::Configured)
            if s.capture.is_none() =>
        {
            if !start_time.is_finite() || *start_time < now {
                return Err(format!("start time in past: {start_time:.3} < now {now:.3}"));
            }
            let fps = s.profile()?.frame_rate;
            let cap = CaptureSchedule::new(*start_time, *duration_ms, fps);
            s.capture = Some(cap);
            s.arm(TimerKind::CaptureBegin, cap.start_time);
            Ok(())
        }
        (MessageKind::CaptureStart { .. }, Role::Responder, _) if dup => Ok(()),

        (MessageKind::FocusSet { .. } | MessageKind::ModeSet { .. }, Role::Responder, _) if dup => Ok(()),
        (MessageKind::FocusSet { mode, depth, effective_seq }, Role::Responder, _) if s.capture.is_some() => {
            let change = CameraChange::Focus { mode: mode.clone(), depth: *depth };
            schedule_change(s, change, *effective_seq)
        }
        (MessageKind::ModeSet { mode, effective_seq }, Role::Responder, _) if s.capture.is_some() => {
            schedule_change(s, CameraChange::Mode { mode: mode.clone() }, *effective_seq)
        }

        (MessageKind::FrameTick { seq, timestamp }, _, Phase::Configured | Phase::Capturing) => {
            if !dup {
                check_tick(s, *seq, *timestamp)?;
            }
            Ok(())
        }

        _ => Err(format!("unexpected {} in phase {:?}", m.kind.name(), s.phase)),
    }
}

/// Peer ticks follow the same schedule as ours: any other timestamp means
/// the peer runs a different frame rate or start time.
fn check_tick(s: &mut SessionState, seq: u64, timestamp: f64) -> Outcome {
    let cap = s.capture.ok_or("FrameTick before CaptureStart")?;
    let expected = cap.frame_time(seq);
    if seq >= cap.frame_count || !((timestamp - expected).abs() <= 1e-6 * expected.abs().max(1.0)) {
        return Err(format!(
            "frame rate mismatch: peer tick {seq} at {timestamp:.3}, expected {expected:.3} at {} fps",
            cap.frame_rate
        ));
    }
    s.last_seq_seen = Some(s.last_seq_seen.map_or(seq, |v| v.max(seq)));
    Ok(())
}

fn schedule_change(s: &mut SessionState, change: CameraChange, effective_seq: u64) -> Outcome {
    let profile = s.profile()?;
    match &change {
        CameraChange::Focus { mode, depth } => {
            if !profile.focus_modes.contains(mode) {
                return Err(format!("focus mode `{mode}` not negotiated"));
            }
            if !(depth.is_finite() && *depth >= 0.0) {
                return Err(format!("focus depth must be finite and non-negative, got {depth}"));
            }
        }
        CameraChange::Mode { mode } => {
            if !profile.capture_modes.contains(mode) {
                return Err(format!("capture mode `{mode}` not negotiated"));
            }
        }
    }
    if effective_seq < s.next_seq {
        return Err(format!("change for frame {effective_seq} arrived after frame {} was sent", s.next_seq - 1));
    }
    s.camera.pending.push(PendingChange { effective_seq, change });
    Ok(())
}

fn on_command(s: &mut SessionState, c: &Command, now: f64, out: &mut Vec<Message>) -> Outcome {
    match c {
        Command::StartCapture { delay_ms, duration_ms } => {
            if s.capture.is_some() {
                return Err("capture already scheduled".into());
            }
            if !(delay_ms.is_finite() && *delay_ms >= 0.0) {
                return Err(format!("capture delay must be finite and non-negative, got {delay_ms}"));
            }
            let fps = s.profile()?.frame_rate;
            let cap = CaptureSchedule::new(now + delay_ms, *duration_ms, fps);
            s.capture = Some(cap);
            let msg = s.message(MessageKind::CaptureStart { start_time: cap.start_time, duration_ms: *duration_ms });
            out.push(msg);
            s.arm(TimerKind::CaptureBegin, cap.start_time);
            Ok(())
        }
        Command::SetFocus { mode, depth, lead_frames } => {
            let effective_seq = s.next_seq + lead_frames;
            schedule_change(s, CameraChange::Focus { mode: mode.clone(), depth: *depth }, effective_seq)?;
            let msg = s.message(MessageKind::FocusSet { mode: mode.clone(), depth: *depth, effective_seq });
            out.push(msg);
            Ok(())
        }
        Command::SetMode { mode, lead_frames } => {
            let effective_seq = s.next_seq + lead_frames;
            schedule_change(s, CameraChange::Mode { mode: mode.clone() }, effective_seq)?;
            let msg = s.message(MessageKind::ModeSet { mode: mode.clone(), effective_seq });
            out.push(msg);
            Ok(())
        }
    }
}
