use std::fmt;

use serde::{Deserialize, Serialize};

use crate::registry::{CapabilityProfile, CapabilitySet};

/// The two endpoints. The initiator drives pairing and capture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Initiator,
    Responder,
}

impl Role {
    pub fn peer(self) -> Role {
        match self {
            Role::Initiator => Role::Responder,
            Role::Responder => Role::Initiator,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Role::Initiator => 0,
            Role::Responder => 1,
        }
    }

    /// One-letter tag used in transcripts.
    pub fn tag(self) -> char {
        match self {
            Role::Initiator => 'A',
            Role::Responder => 'B',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MessageKind {
    PairRequest {
        capabilities: CapabilitySet,
    },
    PairAccept,
    CapabilityOffer {
        capabilities: CapabilitySet,
    },
    CapabilityAck {
        profile: CapabilityProfile,
    },
    /// Start and length of the capture, in the receiver's local clock.
    CaptureStart {
        start_time: f64,
        duration_ms: u64,
    },
    FocusSet {
        mode: String,
        depth: f64,
        effective_seq: u64,
    },
    ModeSet {
        mode: String,
        effective_seq: u64,
    },
    FrameTick {
        seq: u64,
        timestamp: f64,
    },
    Error {
        reason: String,
    },
}

impl MessageKind {
    pub fn name(&self) -> &'static str {
        match self {
            MessageKind::PairRequest { .. } => "PairRequest",
            MessageKind::PairAccept => "PairAccept",
            MessageKind::CapabilityOffer { .. } => "CapabilityOffer",
            MessageKind::CapabilityAck { .. } => "CapabilityAck",
            MessageKind::CaptureStart { .. } => "CaptureStart",
            MessageKind::FocusSet { .. } => "FocusSet",
            MessageKind::ModeSet { .. } => "ModeSet",
            MessageKind::FrameTick { .. } => "FrameTick",
            MessageKind::Error { .. } => "Error",
        }
    }
}

fn join<'a>(items: impl IntoIterator<Item = &'a String>) -> String {
    items.into_iter().map(String::as_str).collect::<Vec<_>>().join(",")
}

fn caps(c: &CapabilitySet) -> String {
    let res: Vec<String> = c.resolutions.iter().map(|r| r.to_string()).collect();
    let fps: Vec<String> = c.frame_rates.iter().map(|f| f.to_string()).collect();
    format!(
        "res=[{}] fps=[{}] focus=[{}] capture=[{}]",
        res.join(","),
        fps.join(","),
        join(&c.focus_modes),
        join(&c.capture_modes)
    )
}

impl fmt::Display for MessageKind {
    /// Kind name followed by a flat payload rendering.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        match self {
            MessageKind::PairRequest { capabilities } | MessageKind::CapabilityOffer { capabilities } => {
                write!(f, " {}", caps(capabilities))
            }
            MessageKind::PairAccept => Ok(()),
            MessageKind::CapabilityAck { profile } => write!(
                f,
                " res={} fps={} focus=[{}] capture=[{}]",
                profile.resolution,
                profile.frame_rate,
                join(&profile.focus_modes),
                join(&profile.capture_modes)
            ),
            MessageKind::CaptureStart { start_time, duration_ms } => {
                write!(f, " start={start_time:.3} duration={duration_ms}")
            }
            MessageKind::FocusSet { mode, depth, effective_seq } => {
                write!(f, " mode={mode} depth={depth} from_seq={effective_seq}")
            }
            MessageKind::ModeSet { mode, effective_seq } => write!(f, " mode={mode} from_seq={effective_seq}"),
            MessageKind::FrameTick { seq, timestamp } => write!(f, " seq={seq} ts={timestamp:.3}"),
            MessageKind::Error { reason } => write!(f, " reason={reason:?}"),
        }
    }
}

/// Wire message. `msg_id` counts up per sender; retransmissions reuse it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub sender: Role,
    pub msg_id: u64,
    pub kind: MessageKind,
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {}", self.msg_id, self.kind)
    }
}
