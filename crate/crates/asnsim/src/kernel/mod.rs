//! Deterministic discrete-event kernel.
//!
//! Simulated time is an integer count of microseconds, which represents the
//! 250 us sensing window, the 8 ms slot, and the 4 ms packet exactly and
//! keeps event ordering free of floating-point comparisons. Events dispatch
//! in strict `(time, priority, seq)` order, where `seq` is the insertion
//! counter, so two runs over the same inputs replay identically.

mod channel;
mod energy;
mod rng;

pub use channel::{Channel, ChannelError, CompletedTx, TxHandle};
pub use energy::EnergyLedger;
pub use rng::{RunSeed, StreamPurpose};

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use thiserror::Error;

/// Transmit power from the common parameter table, in milliwatts.
pub const TX_POWER_MW: u64 = 35;
/// Idle/listen power from the common parameter table, in milliwatts.
pub const IDLE_POWER_MW: u64 = 41;

/// Simulated time as a count of 1 us ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_us(us: u64) -> Self {
        SimTime(us)
    }

    pub fn from_ms(ms: u64) -> Self {
        SimTime(ms * 1_000)
    }

    pub fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000)
    }

    pub fn as_us(self) -> u64 {
        self.0
    }

    pub fn as_ms_f64(self) -> f64 {
        self.0 as f64 / 1_000.0
    }

    /// Duration since `earlier`. Panics if `earlier` is later, which would
    /// mean the caller violated monotonicity.
    pub fn since(self, earlier: SimTime) -> u64 {
        self.0
            .checked_sub(earlier.0)
            .expect("time arithmetic underflow")
    }
}

impl std::ops::Add<u64> for SimTime {
    type Output = SimTime;
    fn add(self, us: u64) -> SimTime {
        SimTime(self.0 + us)
    }
}

impl std::fmt::Display for SimTime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}us", self.0)
    }
}

/// Within-tick dispatch phases. Lower dispatches first at equal times.
///
/// Carrier-sense decisions run before transmission starts so that two nodes
/// deciding in the same microsecond both observe the pre-transmission
/// channel and can collide, which is the vulnerable window of unslotted CCA.
pub mod priority {
    /// Superframe/slot boundaries closing out the previous interval.
    pub const BOUNDARY_END: u8 = 0;
    /// Superframe/slot boundaries opening the next interval, beacons.
    pub const BOUNDARY_START: u8 = 1;
    /// Receiver preamble-sampling checks.
    pub const SAMPLE: u8 = 2;
    /// Carrier-sense window expiries and CCA decisions.
    pub const SENSE: u8 = 3;
    /// Transmission starts.
    pub const TX_START: u8 = 4;
    /// Transmission completions.
    pub const TX_END: u8 = 5;
}

/// Handle returned by [`EventQueue::schedule`]; usable for cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("cannot schedule event at {at} before current time {now}")]
    ScheduleInPast { at: SimTime, now: SimTime },
}

struct Scheduled<P> {
    time: SimTime,
    priority: u8,
    seq: u64,
    payload: P,
}

impl<P> PartialEq for Scheduled<P> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_key() == other.cmp_key()
    }
}
impl<P> Eq for Scheduled<P> {}

impl<P> Scheduled<P> {
    fn cmp_key(&self) -> (u64, u8, u64) {
        (self.time.0, self.priority, self.seq)
    }
}

impl<P> Ord for Scheduled<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse for earliest-first dispatch.
        other.cmp_key().cmp(&self.cmp_key())
    }
}

impl<P> PartialOrd for Scheduled<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A dispatched event as handed back to the driver loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dispatched<P> {
    pub time: SimTime,
    pub priority: u8,
    pub payload: P,
}

/// Ordered event queue with a simulated clock.
///
/// One queue drives one simulation run; runs never share state, so any
/// number of runs may execute concurrently.
pub struct EventQueue<P> {
    heap: BinaryHeap<Scheduled<P>>,
    cancelled: HashSet<u64>,
    now: SimTime,
    next_seq: u64,
    dispatched: u64,
}

impl<P> Default for EventQueue<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> EventQueue<P> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            cancelled: HashSet::new(),
            now: SimTime::ZERO,
            next_seq: 0,
            dispatched: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    /// Schedule `payload` at absolute time `at`. Scheduling in the past is
    /// rejected; scheduling at the current instant is allowed and dispatches
    /// after already-queued events of the same (time, priority).
    pub fn schedule(&mut self, at: SimTime, priority: u8, payload: P) -> Result<EventHandle, KernelError> {
        if at < self.now {
            return Err(KernelError::ScheduleInPast { at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Scheduled {
            time: at,
            priority,
            seq,
            payload,
        });
        Ok(EventHandle(seq))
    }

    /// Cancel a pending event. Returns true if the event had not yet
    /// dispatched (and is now guaranteed never to).
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if handle.0 >= self.next_seq {
            return false;
        }
        // Dispatched or already-cancelled handles cannot be revived.
        if self.heap.iter().any(|e| e.seq == handle.0) && self.cancelled.insert(handle.0) {
            return true;
        }
        false
    }

    /// Pop the next live event, advancing the clock to its time.
    pub fn pop(&mut self) -> Option<Dispatched<P>> {
        while let Some(ev) = self.heap.pop() {
            if self.cancelled.remove(&ev.seq) {
                continue;
            }
            debug_assert!(ev.time >= self.now, "event queue went backwards");
            self.now = ev.time;
            self.dispatched += 1;
            return Some(Dispatched {
                time: ev.time,
                priority: ev.priority,
                payload: ev.payload,
            });
        }
        None
    }

    pub fn is_empty(&self) -> bool {
        self.heap.len() <= self.cancelled.len()
    }
}
