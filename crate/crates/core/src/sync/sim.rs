//! Deterministic discrete-event run of two sessions over a simulated link.
//!
//! There is one global clock. Each device reads it through a constant
//! offset drawn from `[−clock_error, +clock_error]`; sessions only ever see
//! their local time. All randomness comes from one seeded ChaCha stream, so
//! a seed fully determines the transcript.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::message::{Message, MessageKind, Role};
use super::session::{step, AppliedChange, CameraChange, Command, Event, Input, Phase, SessionState, SyncConfig};
use super::transport::{LinkParams, SimulatedTransport};
use super::SyncError;
use crate::exec::Exec;
use crate::registry::{CapabilityProfile, DeviceSpec};

/// Upper bound on processed events per run, against runaway schedules.
const EVENT_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSetup {
    pub link: LinkParams,
    pub seed: u64,
    /// Bound on each device's clock offset, ms.
    pub clock_error_ms: f64,
    /// Protocol timing; derived from `link` when `None`.
    pub config: Option<SyncConfig>,
}

impl SimSetup {
    pub fn new(link: LinkParams, seed: u64) -> Self {
        SimSetup { link, seed, clock_error_ms: 0.0, config: None }
    }

    pub fn with_clock_error(mut self, clock_error_ms: f64) -> Self {
        self.clock_error_ms = clock_error_ms;
        self
    }

    pub fn sync_config(&self) -> SyncConfig {
        self.config.unwrap_or_else(|| SyncConfig::for_link(self.link.base_latency, self.link.jitter))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Entry {
    Sent { time: f64, msg: Message, delivered_at: Option<f64> },
    Phase { time: f64, who: Role, phase: Phase, reason: Option<String> },
    Applied { time: f64, who: Role, change: AppliedChange },
}

impl Entry {
    pub fn time(&self) -> f64 {
        match self {
            Entry::Sent { time, .. } | Entry::Phase { time, .. } | Entry::Applied { time, .. } => *time,
        }
    }
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entry::Sent { time, msg, delivered_at } => {
                let from = msg.sender.tag();
                let to = msg.sender.peer().tag();
                write!(f, "{time:.3} {from}->{to} {} #{}", msg.kind, msg.msg_id)?;
                match delivered_at {
                    Some(at) => write!(f, " deliver={at:.3}"),
                    None => write!(f, " lost"),
                }
            }
            Entry::Phase { time, who, phase, reason } => {
                write!(f, "{time:.3} {} phase {phase:?}", who.tag())?;
                match reason {
                    Some(r) => write!(f, " reason={r:?}"),
                    None => Ok(()),
                }
            }
            Entry::Applied { time, who, change } => {
                write!(f, "{time:.3} {} apply ", who.tag())?;
                match &change.change {
                    CameraChange::Focus { mode, depth } => write!(f, "FocusSet mode={mode} depth={depth}")?,
                    CameraChange::Mode { mode } => write!(f, "ModeSet mode={mode}")?,
                }
                write!(f, " from_seq={} before_seq={}", change.effective_seq, change.before_seq)
            }
        }
    }
}

/// Ordered log of a run; one line per entry in text form.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<Entry>,
}

impl Transcript {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }

    pub fn sent(&self) -> impl Iterator<Item = (f64, &Message, Option<f64>)> {
        self.entries.iter().filter_map(|e| match e {
            Entry::Sent { time, msg, delivered_at } => Some((*time, msg, *delivered_at)),
            _ => None,
        })
    }
}

/// A FrameTick as emitted by one endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub seq: u64,
    /// Sender's local clock.
    pub timestamp: f64,
    pub global_time: f64,
}

#[derive(Clone, Debug)]
pub struct Simulation {
    setup: SimSetup,
    transport: SimulatedTransport,
    rng: ChaCha8Rng,
    now: f64,
    clock_offsets: [f64; 2],
    sessions: [SessionState; 2],
    /// Pending commands: global time, endpoint, event. Kept sorted.
    commands: Vec<(f64, Role, Event)>,
    transcript: Transcript,
    capture_started: [Option<f64>; 2],
    ticks: [Vec<TickRecord>; 2],
}

impl Simulation {
    pub fn new(spec_a: &DeviceSpec, spec_b: &DeviceSpec, setup: SimSetup) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
        let eps = setup.clock_error_ms.abs();
        let mut offset = || if eps > 0.0 { rng.random_range(-eps..=eps) } else { 0.0 };
        let clock_offsets = [offset(), offset()];
        let config = setup.sync_config();
        Simulation {
            setup,
            transport: SimulatedTransport::new(setup.link),
            rng,
            now: 0.0,
            clock_offsets,
            sessions: [
                SessionState::new(Role::Initiator, spec_a.capabilities(), config),
                SessionState::new(Role::Responder, spec_b.capabilities(), config),
            ],
            commands: Vec::new(),
            transcript: Transcript::default(),
            capture_started: [None, None],
            ticks: [Vec::new(), Vec::new()],
        }
    }

    pub fn setup(&self) -> &SimSetup {
        &self.setup
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn initiator(&self) -> &SessionState {
        &self.sessions[0]
    }

    pub fn responder(&self) -> &SessionState {
        &self.sessions[1]
    }

    pub fn session(&self, role: Role) -> &SessionState {
        &self.sessions[role.index()]
    }

    pub fn session_mut(&mut self, role: Role) -> &mut SessionState {
        &mut self.sessions[role.index()]
    }

    pub fn clock_offsets(&self) -> [f64; 2] {
        self.clock_offsets
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn local_time(&self, role: Role) -> f64 {
        self.now + self.clock_offsets[role.index()]
    }

    /// Queues `event` for `role` at global time `at`.
    pub fn schedule(&mut self, at: f64, role: Role, event: Event) {
        let pos = self.commands.partition_point(|(t, _, _)| *t <= at);
        self.commands.insert(pos, (at, role, event));
    }

    fn deadline_global(&self, i: usize) -> Option<f64> {
        self.sessions[i].deadline.map(|d| (d.at - self.clock_offsets[i]).max(self.now))
    }

    /// Processes events in time order until none remain. At equal times,
    /// deliveries go first, then timers, then commands.
    pub fn run(&mut self) {
        for _ in 0..EVENT_BUDGET {
            let delivery = self.transport.next_delivery();
            let timers = [self.deadline_global(0), self.deadline_global(1)];
            let command = self.commands.first().map(|(t, _, _)| *t);
            let mut best: Option<(f64, u8)> = None;
            let candidates = [(delivery, 0u8), (timers[0], 1), (timers[1], 2), (command, 3)];
            for (t, tag) in candidates {
                if let Some(t) = t {
                    if best.is_none_or(|(bt, _)| t < bt) {
                        best = Some((t, tag));
                    }
                }
            }
            let Some((t, tag)) = best else { return };
            self.now = self.now.max(t);
            match tag {
                0 => {
                    let (_, msg) = self.transport.pop_next().expect("peeked delivery");
                    let to = msg.sender.peer();
                    self.deliver(to, Event::Message(msg));
                }
                1 | 2 => {
                    let i = usize::from(tag - 1);
                    let d = self.sessions[i].deadline.expect("peeked deadline");
                    let role = self.sessions[i].role;
                    self.deliver(role, Event::Timer { kind: d.kind, id: d.id });
                }
                _ => {
                    let (_, role, event) = self.commands.remove(0);
                    self.deliver(role, event);
                }
            }
        }
    }

    fn deliver(&mut self, role: Role, event: Event) {
        let i = role.index();
        let input = Input { now: self.local_time(role), event };
        let before = self.sessions[i].clone();
        let (after, out) = step(before.clone(), &input);
        if after.phase != before.phase {
            self.transcript.entries.push(Entry::Phase {
                time: self.now,
                who: role,
                phase: after.phase,
                reason: if after.phase == Phase::Failed { after.failure.clone() } else { None },
            });
            if after.phase == Phase::Capturing {
                self.capture_started[i] = Some(self.now);
            }
        }
        for change in &after.camera.applied[before.camera.applied.len()..] {
            self.transcript.entries.push(Entry::Applied { time: self.now, who: role, change: change.clone() });
        }
        self.sessions[i] = after;
        for msg in out {
            if let MessageKind::FrameTick { seq, timestamp } = msg.kind {
                self.ticks[i].push(TickRecord { seq, timestamp, global_time: self.now });
            }
            let delivered_at = self.transport.send(&mut self.rng, self.now, msg.clone());
            self.transcript.entries.push(Entry::Sent { time: self.now, msg, delivered_at });
        }
    }

    /// Both sessions configured with the same profile.
    pub fn agreed_profile(&self) -> Option<&CapabilityProfile> {
        let (a, b) = (self.initiator(), self.responder());
        match (&a.negotiated, &b.negotiated) {
            (Some(pa), Some(pb)) if pa == pb && a.phase.is_configured() && b.phase.is_configured() => Some(pa),
            _ => None,
        }
    }

    fn failure(&self) -> SyncError {
        SyncError::Failed { initiator: self.sessions[0].failure.clone(), responder: self.sessions[1].failure.clone() }
    }
}

/// Starts both endpoints at time zero and runs the pairing exchange to
/// completion.
pub fn pair(spec_a: &DeviceSpec, spec_b: &DeviceSpec, setup: SimSetup) -> Simulation {
    let mut sim = Simulation::new(spec_a, spec_b, setup);
    sim.schedule(0.0, Role::Initiator, Event::Start);
    sim.schedule(0.0, Role::Responder, Event::Start);
    sim.run();
    sim
}

/// Pairing with perfect clocks. Returns the finished simulation; its two
/// sessions and transcript are available through accessors.
pub fn run_pairing(spec_a: &DeviceSpec, spec_b: &DeviceSpec, link: LinkParams, seed: u64) -> Simulation {
    pair(spec_a, spec_b, SimSetup::new(link, seed))
}

#[derive(Clone, Debug)]
pub struct CaptureSync {
    /// Global times at which each endpoint began capturing.
    pub start_a: f64,
    pub start_b: f64,
    pub skew: f64,
    pub simulation: Simulation,
}

/// A failed capture run together with the simulated exchange that led to it.
#[derive(Clone, Debug)]
pub struct SyncFailure {
    pub error: SyncError,
    pub simulation: Simulation,
}

impl fmt::Display for SyncFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for SyncFailure {}

fn require_configured(sim: &Simulation) -> Result<(), Box<SyncFailure>> {
    let (a, b) = (sim.initiator().phase, sim.responder().phase);
    if a == Phase::Configured && b == Phase::Configured && sim.agreed_profile().is_some() {
        Ok(())
    } else {
        Err(Box::new(SyncFailure {
            error: SyncError::NotConfigured { initiator: a, responder: b },
            simulation: sim.clone(),
        }))
    }
}

fn start_capture(sim: &mut Simulation, delay_ms: f64, duration_ms: u64) {
    let now = sim.now;
    sim.schedule(now, Role::Initiator, Event::Command(Command::StartCapture { delay_ms, duration_ms }));
    sim.run();
}

/// Has the initiator propose a capture start `capture_delay` ms ahead and
/// reports when each endpoint actually began, on the global clock. The
/// input simulation is left untouched.
pub fn run_capture_sync(sim: &Simulation, capture_delay: f64) -> Result<CaptureSync, Box<SyncFailure>> {
    require_configured(sim)?;
    let mut sim = sim.clone();
    // Keep capturing long enough for a rejection to make it back.
    let hold = safe_capture_delay(&sim.setup).ceil() as u64;
    start_capture(&mut sim, capture_delay, hold);
    match sim.capture_started {
        [Some(start_a), Some(start_b)]
            if sim.initiator().phase == Phase::Done && sim.responder().phase == Phase::Done =>
        {
            Ok(CaptureSync { start_a, start_b, skew: (start_a - start_b).abs(), simulation: sim })
        }
        _ => Err(Box::new(SyncFailure { error: sim.failure(), simulation: sim })),
    }
}

/// A focus or mode change issued `after_ms` after the initiator starts
/// capturing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduledChange {
    pub after_ms: f64,
    pub change: CameraChange,
}

#[derive(Clone, Debug)]
pub struct FrameSync {
    pub frame_rate: u32,
    pub ticks_a: Vec<TickRecord>,
    pub ticks_b: Vec<TickRecord>,
    pub applied_a: Vec<AppliedChange>,
    pub applied_b: Vec<AppliedChange>,
    pub simulation: Simulation,
}

impl FrameSync {
    /// (seq, tick from A, tick from B) for every seq both sides emitted.
    pub fn pairs(&self) -> Vec<(u64, TickRecord, TickRecord)> {
        self.ticks_a
            .iter()
            .filter_map(|a| self.ticks_b.iter().find(|b| b.seq == a.seq).map(|b| (a.seq, *a, *b)))
            .collect()
    }
}

/// Capture start delay that always reaches the responder in time: one
/// worst-case round trip plus twice the clock error bound, plus 1 ms.
pub fn safe_capture_delay(setup: &SimSetup) -> f64 {
    2.0 * setup.link.worst_case_delay() + 2.0 * setup.clock_error_ms.abs() + 1.0
}

/// Runs a capture of `duration_ms` from a configured pair, applying the
/// given camera changes on the way, and returns both FrameTick streams.
pub fn run_frame_sync(
    sim: &Simulation,
    duration_ms: u64,
    changes: &[ScheduledChange],
) -> Result<FrameSync, Box<SyncFailure>> {
    require_configured(sim)?;
    let mut sim = sim.clone();
    let fps = sim.initiator().negotiated.as_ref().map(|p| p.frame_rate).unwrap_or(1);
    let interval = 1000.0 / f64::from(fps.max(1));
    let delay = safe_capture_delay(&sim.setup);
    // A change must reach the responder before it emits the target frame.
    let reach = sim.setup.link.worst_case_delay() + 2.0 * sim.setup.clock_error_ms.abs();
    let lead_frames = (reach / interval).ceil() as u64 + 1;

    let start_local = sim.local_time(Role::Initiator) + delay;
    let start_global = start_local - sim.clock_offsets[0];
    for c in changes {
        let command = match &c.change {
            CameraChange::Focus { mode, depth } => Command::SetFocus { mode: mode.clone(), depth: *depth, lead_frames },
            CameraChange::Mode { mode } => Command::SetMode { mode: mode.clone(), lead_frames },
        };
        sim.schedule(start_global + c.after_ms.max(0.0), Role::Initiator, Event::Command(command));
    }
    start_capture(&mut sim, delay, duration_ms);

    if sim.initiator().phase != Phase::Done || sim.responder().phase != Phase::Done {
        return Err(Box::new(SyncFailure { error: sim.failure(), simulation: sim }));
    }
    Ok(FrameSync {
        frame_rate: fps,
        ticks_a: sim.ticks[0].clone(),
        ticks_b: sim.ticks[1].clone(),
        applied_a: sim.initiator().camera.applied.clone(),
        applied_b: sim.responder().camera.applied.clone(),
        simulation: sim,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingSummary {
    pub seed: u64,
    pub initiator: Phase,
    pub responder: Phase,
    pub profile_a: Option<CapabilityProfile>,
    pub profile_b: Option<CapabilityProfile>,
}

impl PairingSummary {
    pub fn agreed(&self) -> bool {
        self.initiator == self.responder && self.profile_a == self.profile_b
    }
}

/// Pairing outcome for each seed, in seed order.
pub fn sweep_pairing(
    spec_a: &DeviceSpec,
    spec_b: &DeviceSpec,
    link: LinkParams,
    seeds: &[u64],
    exec: Exec,
) -> Vec<PairingSummary> {
    exec.map(seeds, |&seed| {
        let sim = run_pairing(spec_a, spec_b, link, seed);
        PairingSummary {
            seed,
            initiator: sim.initiator().phase,
            responder: sim.responder().phase,
            profile_a: sim.initiator().negotiated.clone(),
            profile_b: sim.responder().negotiated.clone(),
        }
    })
}

/// Capture-start skew for each seed, with clock offsets bounded by
/// `clock_error_ms`. `None` marks seeds whose pairing or capture failed.
pub fn sweep_capture_skew(
    spec_a: &DeviceSpec,
    spec_b: &DeviceSpec,
    link: LinkParams,
    clock_error_ms: f64,
    capture_delay: f64,
    seeds: &[u64],
    exec: Exec,
) -> Vec<Option<f64>> {
    exec.map(seeds, |&seed| {
        let sim = pair(spec_a, spec_b, SimSetup::new(link, seed).with_clock_error(clock_error_ms));
        run_capture_sync(&sim, capture_delay).ok().map(|c| c.skew)
    })
}
