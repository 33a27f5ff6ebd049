use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::message::Message;
use super::SyncError;

/// Link parameters. Delivery takes `base_latency + U(0, jitter)` ms; each
/// message is dropped independently with probability `loss_rate`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub base_latency: f64,
    pub jitter: f64,
    pub loss_rate: f64,
}

impl LinkParams {
    pub fn new(base_latency: f64, jitter: f64, loss_rate: f64) -> Result<Self, SyncError> {
        let bad = |what: &str, v: f64| Err(SyncError::InvalidTransport(format!("{what} {v}")));
        if !(base_latency.is_finite() && base_latency >= 0.0) {
            return bad("base latency must be finite and non-negative, got", base_latency);
        }
        if !(jitter.is_finite() && jitter >= 0.0) {
            return bad("jitter must be finite and non-negative, got", jitter);
        }
        if !(0.0..=1.0).contains(&loss_rate) {
            return bad("loss rate must lie in [0, 1], got", loss_rate);
        }
        Ok(LinkParams { base_latency, jitter, loss_rate })
    }

    /// Longest possible one-way delay.
    pub fn worst_case_delay(&self) -> f64 {
        self.base_latency + self.jitter
    }
}

#[derive(Clone, Debug)]
struct InFlight {
    deliver_at: f64,
    order: u64,
    msg: Message,
}

impl PartialEq for InFlight {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for InFlight {}

impl PartialOrd for InFlight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for InFlight {
    fn cmp(&self, other: &Self) -> Ordering {
        self.deliver_at.total_cmp(&other.deliver_at).then(self.order.cmp(&other.order))
    }
}

/// Lossy, reordering link between the two endpoints, with one in-flight
/// queue per direction. Messages sent later may arrive earlier.
#[derive(Clone, Debug)]
pub struct SimulatedTransport {
    pub params: LinkParams,
    in_flight: [BinaryHeap<Reverse<InFlight>>; 2],
    sent: u64,
}

impl SimulatedTransport {
    pub fn new(params: LinkParams) -> Self {
        SimulatedTransport { params, in_flight: [BinaryHeap::new(), BinaryHeap::new()], sent: 0 }
    }

    /// Queues `msg` sent at `now`. Returns its delivery time, or `None` if
    /// the link drops it.
    pub fn send<R: Rng>(&mut self, rng: &mut R, now: f64, msg: Message) -> Option<f64> {
        let lost = self.params.loss_rate > 0.0 && rng.random::<f64>() < self.params.loss_rate;
        let jitter = if self.params.jitter > 0.0 { rng.random_range(0.0..=self.params.jitter) } else { 0.0 };
        if lost {
            return None;
        }
        let deliver_at = now + self.params.base_latency + jitter;
        let dir = msg.sender.index();
        self.in_flight[dir].push(Reverse(InFlight { deliver_at, order: self.sent, msg }));
        self.sent += 1;
        Some(deliver_at)
    }

    pub fn next_delivery(&self) -> Option<f64> {
        self.in_flight.iter().filter_map(|q| q.peek().map(|Reverse(m)| m.deliver_at)).min_by(f64::total_cmp)
    }

    /// Removes and returns the earliest in-flight message of either direction.
    pub fn pop_next(&mut self) -> Option<(f64, Message)> {
        let pick = match (self.in_flight[0].peek(), self.in_flight[1].peek()) {
            (Some(Reverse(a)), Some(Reverse(b))) => usize::from(b < a),
            (Some(_), None) => 0,
            (None, Some(_)) => 1,
            (None, None) => return None,
        };
        self.in_flight[pick].pop().map(|Reverse(m)| (m.deliver_at, m.msg))
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.iter().map(BinaryHeap::len).sum()
    }
}
