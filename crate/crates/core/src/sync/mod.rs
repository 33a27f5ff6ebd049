//! Pairing, capability exchange and capture synchronization between two
//! devices, run over a simulated link.

mod message;
mod session;
mod sim;
mod transport;

use thiserror::Error;

pub use message::{Message, MessageKind, Role};
pub use session::{
    step, transition, AppliedChange, CameraChange, CameraState, CaptureSchedule, Command, Deadline, Event, Input,
    InputKind, PendingChange, Phase, SessionState, SyncConfig, TimerKind, Transition, TRANSITIONS,
};
pub use sim::{
    pair, run_capture_sync, run_frame_sync, run_pairing, safe_capture_delay, sweep_capture_skew, sweep_pairing,
    CaptureSync, Entry, FrameSync, PairingSummary, ScheduledChange, SimSetup, Simulation, SyncFailure, TickRecord,
    Transcript,
};
pub use transport::{LinkParams, SimulatedTransport};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SyncError {
    #[error("invalid transport: {0}")]
    InvalidTransport(String),
    #[error("capture needs both sessions configured (initiator {initiator:?}, responder {responder:?})")]
    NotConfigured { initiator: Phase, responder: Phase },
    #[error("sync failed: initiator: {}; responder: {}", .initiator.as_deref().unwrap_or("ok"), .responder.as_deref().unwrap_or("ok"))]
    Failed { initiator: Option<String>, responder: Option<String> },
}
