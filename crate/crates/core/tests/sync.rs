mod common;

use common::{corpus, random_caps, rng};
use rand::Rng;
use stereorig::registry::{negotiate_sets, CapabilitySet};
use stereorig::sync::{
    pair, run_frame_sync, safe_capture_delay, step, sweep_capture_skew, sweep_pairing, transition, CameraChange,
    Command, Deadline, Event, Input, InputKind, LinkParams, Message, MessageKind, Phase, Role, ScheduledChange,
    SessionState, SimSetup, SyncConfig, TimerKind,
};
use stereorig::Exec;

fn link(base: f64, jitter: f64, loss: f64) -> LinkParams {
    LinkParams::new(base, jitter, loss).unwrap()
}

#[test]
fn zero_loss_always_configures() {
    let specs = corpus(41, 40);
    let mut r = rng(42);
    for i in 0..200 {
        let (a, b) = (&specs[i % 40], &specs[(i * 7 + 3) % 40]);
        let l = link(r.random_range(0.5..50.0), r.random_range(0.0..40.0), 0.0);
        let sim = pair(a, b, SimSetup::new(l, i as u64));
        assert_eq!(sim.initiator().phase, Phase::Configured, "run {i}");
        assert_eq!(sim.responder().phase, Phase::Configured, "run {i}");
        let expected = negotiate_sets(&a.capabilities(), &b.capabilities());
        assert_eq!(sim.initiator().negotiated, expected);
        assert_eq!(sim.responder().negotiated, expected);
    }
}

#[test]
fn lossy_runs_end_in_matching_phases() {
    let specs = corpus(43, 2);
    let seeds: Vec<u64> = (0..100).collect();
    for loss in [0.1, 0.3, 0.5] {
        let out = sweep_pairing(&specs[0], &specs[1], link(8.0, 12.0, loss), &seeds, Exec::default());
        for s in &out {
            assert!(s.agreed(), "loss {loss}: {s:?}");
            assert!(matches!(s.initiator, Phase::Configured | Phase::Failed));
        }
    }
}

#[test]
fn capture_skew_bounded_by_clock_error() {
    let specs = corpus(47, 2);
    let seeds: Vec<u64> = (0..1000).collect();
    let l = link(10.0, 5.0, 0.0);
    let eps = 5.0;
    let delay = safe_capture_delay(&SimSetup::new(l, 0).with_clock_error(eps));
    let skews = sweep_capture_skew(&specs[0], &specs[1], l, eps, delay, &seeds, Exec::default());
    let measured: Vec<f64> = skews.iter().flatten().copied().collect();
    assert!(measured.len() == seeds.len(), "only {} runs captured", measured.len());
    for s in measured {
        assert!(s <= 2.0 * eps + 1e-9, "{s}");
    }
}

#[test]
fn sequential_and_parallel_sweeps_agree() {
    let specs = corpus(53, 2);
    let seeds: Vec<u64> = (0..64).collect();
    let l = link(5.0, 5.0, 0.3);
    assert_eq!(
        sweep_pairing(&specs[0], &specs[1], l, &seeds, Exec::Sequential),
        sweep_pairing(&specs[0], &specs[1], l, &seeds, Exec::Parallel)
    );
}

// ---- exhaustive interleavings ------------------------------------------

#[derive(Clone)]
struct World {
    a: SessionState,
    b: SessionState,
    /// In flight towards A (index 0) and towards B (index 1).
    wire: [Vec<Message>; 2],
    reorders_left: u8,
    retransmits_left: [u8; 2],
}

impl World {
    fn session(&mut self, role: Role) -> &mut SessionState {
        match role {
            Role::Initiator => &mut self.a,
            Role::Responder => &mut self.b,
        }
    }

    fn feed(&mut self, role: Role, event: Event) {
        let s = self.session(role).clone();
        let (next, out) = step(s, &Input { now: 0.0, event });
        *self.session(role) = next;
        self.wire[role.peer().index()].extend(out);
    }
}

struct Stats {
    leaves: usize,
    expected: Option<stereorig::CapabilityProfile>,
}

fn explore(w: World, stats: &mut Stats) {
    let mut moved = false;
    for to in [Role::Initiator, Role::Responder] {
        let queue = &w.wire[to.index()];
        let last = if w.reorders_left > 0 { queue.len() } else { queue.len().min(1) };
        for i in 0..last {
            let mut next = w.clone();
            if i > 0 {
                next.reorders_left -= 1;
            }
            let msg = next.wire[to.index()].remove(i);
            next.feed(to, Event::Message(msg));
            explore(next, stats);
            moved = true;
        }
        let s = match to {
            Role::Initiator => &w.a,
            Role::Responder => &w.b,
        };
        if let Some(d) = s.deadline.filter(|d| d.kind == TimerKind::Retransmit) {
            if w.retransmits_left[to.index()] > 0 {
                let mut next = w.clone();
                next.retransmits_left[to.index()] -= 1;
                next.feed(to, Event::Timer { kind: d.kind, id: d.id });
                explore(next, stats);
                moved = true;
            }
        }
    }
    if !moved {
        stats.leaves += 1;
        assert_eq!(w.a.phase, Phase::Configured, "initiator: {:?}", w.a.failure);
        assert_eq!(w.b.phase, Phase::Configured, "responder: {:?}", w.b.failure);
        assert_eq!(w.a.negotiated, stats.expected);
        assert_eq!(w.b.negotiated, stats.expected);
    }
}

fn explore_pairing(ca: CapabilitySet, cb: CapabilitySet) -> usize {
    let config = SyncConfig::for_link(10.0, 5.0);
    let mut w = World {
        a: SessionState::new(Role::Initiator, ca.clone(), config),
        b: SessionState::new(Role::Responder, cb.clone(), config),
        wire: [Vec::new(), Vec::new()],
        reorders_left: 1,
        retransmits_left: [1, 1],
    };
    w.feed(Role::Responder, Event::Start);
    w.feed(Role::Initiator, Event::Start);
    let mut stats = Stats { leaves: 0, expected: negotiate_sets(&ca, &cb) };
    explore(w, &mut stats);
    stats.leaves
}

#[test]
fn every_interleaving_with_one_reordering_configures() {
    let mut r = rng(59);
    let mut total = 0;
    for _ in 0..5 {
        total += explore_pairing(random_caps(&mut r), random_caps(&mut r));
    }
    assert!(total > 100, "explored only {total} interleavings");
}

// ---- transition table --------------------------------------------------

fn sample_event(kind: InputKind, sender: Role, caps: &CapabilitySet) -> Event {
    let msg = |kind| Event::Message(Message { sender, msg_id: 999, kind });
    let profile = negotiate_sets(caps, caps).unwrap();
    match kind {
        InputKind::Start => Event::Start,
        InputKind::Timer(kind) => Event::Timer { kind, id: 0 },
        InputKind::PairRequest => msg(MessageKind::PairRequest { capabilities: caps.clone() }),
        InputKind::PairAccept => msg(MessageKind::PairAccept),
        InputKind::CapabilityOffer => msg(MessageKind::CapabilityOffer { capabilities: caps.clone() }),
        InputKind::CapabilityAck => msg(MessageKind::CapabilityAck { profile }),
        InputKind::CaptureStart => msg(MessageKind::CaptureStart { start_time: 1e6, duration_ms: 100 }),
        InputKind::FocusSet => msg(MessageKind::FocusSet { mode: "auto".into(), depth: 1.0, effective_seq: 5 }),
        InputKind::ModeSet => msg(MessageKind::ModeSet { mode: "color".into(), effective_seq: 5 }),
        InputKind::FrameTick => msg(MessageKind::FrameTick { seq: 0, timestamp: 0.0 }),
        InputKind::Error => msg(MessageKind::Error { reason: "test".into() }),
        InputKind::StartCapture => Event::Command(Command::StartCapture { delay_ms: 100.0, duration_ms: 100 }),
        InputKind::SetFocus => Event::Command(Command::SetFocus { mode: "auto".into(), depth: 1.0, lead_frames: 2 }),
        InputKind::SetMode => Event::Command(Command::SetMode { mode: "color".into(), lead_frames: 2 }),
    }
}

#[test]
fn unlisted_inputs_fail_and_terminal_phases_absorb() {
    let caps = random_caps(&mut rng(61));
    let config = SyncConfig::for_link(10.0, 0.0);
    let mut checked = 0;
    for role in [Role::Initiator, Role::Responder] {
        for phase in Phase::ALL {
            for kind in InputKind::ALL {
                let mut s = SessionState::new(role, caps.clone(), config);
                s.phase = phase;
                if let InputKind::Timer(kind) = kind {
                    s.deadline = Some(Deadline { at: 0.0, kind, id: 0 });
                }
                let event = sample_event(kind, role.peer(), &caps);
                let (after, _) = step(s.clone(), &Input { now: 0.0, event });
                if phase.is_terminal() {
                    assert_eq!(after.phase, phase, "{role:?} {phase:?} {kind:?}");
                } else if let Some(t) = transition(role, phase, kind) {
                    assert!(t.to.contains(&after.phase) || after.phase == Phase::Failed, "{role:?} {phase:?} {kind:?}");
                } else {
                    assert_eq!(after.phase, Phase::Failed, "{role:?} {phase:?} {kind:?} should fail");
                    assert!(after.negotiated.is_none());
                }
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 2 * 7 * 18);
}

#[test]
fn focus_changes_apply_on_the_same_frame() {
    let specs = corpus(67, 2);
    let (mut a, mut b) = (specs[0].clone(), specs[1].clone());
    a.focus_modes = ["auto".to_string(), "macro".to_string()].into();
    b.focus_modes = a.focus_modes.clone();
    let sim = pair(&a, &b, SimSetup::new(link(6.0, 4.0, 0.0), 9).with_clock_error(1.0));
    let changes = [
        ScheduledChange { after_ms: 100.0, change: CameraChange::Focus { mode: "macro".into(), depth: 0.3 } },
        ScheduledChange { after_ms: 400.0, change: CameraChange::Focus { mode: "auto".into(), depth: 2.0 } },
    ];
    let fs = run_frame_sync(&sim, 1000, &changes).unwrap();
    assert_eq!(fs.applied_a.len(), 2);
    assert_eq!(fs.applied_a.len(), fs.applied_b.len());
    for (x, y) in fs.applied_a.iter().zip(&fs.applied_b) {
        assert_eq!(x.effective_seq, y.effective_seq);
        assert_eq!(x.change, y.change);
    }
    for (seq, ta, tb) in fs.pairs() {
        assert!((ta.global_time - tb.global_time).abs() <= 2.0 + 1e-9, "seq {seq}");
    }
}
