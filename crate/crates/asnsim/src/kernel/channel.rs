//! Idealized shared half-duplex channel for one cluster.
//!
//! All cluster members hear all transmissions with zero propagation delay.
//! Transmission intervals are half-open `[start, end)`: sensing exactly at a
//! transmission's end tick reads idle, and back-to-back transmissions that
//! share a boundary tick do not overlap. A transmission is delivered
//! successfully iff its interval overlaps no other transmission interval.

use thiserror::Error;

use super::{EnergyLedger, SimTime};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChannelError {
    #[error("node {0} is already transmitting")]
    AlreadyTransmitting(u32),
    #[error("unknown transmission handle")]
    UnknownHandle,
}

/// Identifies one in-flight transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxHandle(u64);

#[derive(Debug, Clone)]
struct ActiveTx {
    handle: u64,
    node: u32,
    start: SimTime,
    end: SimTime,
    collided: bool,
    /// Set by the BMAC receiver sampler when a periodic check lands inside
    /// this transmission's preamble.
    sampled: bool,
}

/// Completed transmission with its collision verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompletedTx {
    pub node: u32,
    pub start: SimTime,
    pub end: SimTime,
    pub collided: bool,
    pub sampled: bool,
}

/// Shared-channel state: the set of active transmissions.
#[derive(Default)]
pub struct Channel {
    active: Vec<ActiveTx>,
    next_handle: u64,
    total_started: u64,
    total_collided: u64,
}

impl Channel {
    pub fn new() -> Self {
        Channel::default()
    }

    /// True iff some transmission interval covers `at` (half-open).
    pub fn carrier_sense(&self, at: SimTime) -> bool {
        self.active.iter().any(|tx| tx.start <= at && at < tx.end)
    }

    /// Start a transmission of `duration_us` at `now`, charging the sender's
    /// energy ledger at transmit power for the whole interval. Any
    /// transmission concurrently on the air is marked collided, as is this
    /// one.
    pub fn begin_transmission(
        &mut self,
        node: u32,
        now: SimTime,
        duration_us: u64,
        ledger: &mut EnergyLedger,
    ) -> Result<TxHandle, ChannelError> {
        if self.active.iter().any(|tx| tx.node == node && tx.end > now) {
            return Err(ChannelError::AlreadyTransmitting(node));
        }
        let end = now + duration_us;
        let mut collided = false;
        for tx in &mut self.active {
            // Active intervals all contain `now` unless they end exactly here.
            if tx.end > now {
                collided = true;
                if !tx.collided {
                    tx.collided = true;
                    self.total_collided += 1;
                }
            }
        }
        if collided {
            self.total_collided += 1;
        }
        let handle = self.next_handle;
        self.next_handle += 1;
        self.total_started += 1;
        ledger.charge_tx(node, duration_us);
        self.active.push(ActiveTx {
            handle,
            node,
            start: now,
            end,
            collided,
            sampled: false,
        });
        Ok(TxHandle(handle))
    }

    /// Remove a transmission whose end time has been reached and return its
    /// verdict. Drivers call this from the completion event.
    pub fn complete(&mut self, handle: TxHandle) -> Result<CompletedTx, ChannelError> {
        let idx = self
            .active
            .iter()
            .position(|tx| tx.handle == handle.0)
            .ok_or(ChannelError::UnknownHandle)?;
        let tx = self.active.swap_remove(idx);
        Ok(CompletedTx {
            node: tx.node,
            start: tx.start,
            end: tx.end,
            collided: tx.collided,
            sampled: tx.sampled,
        })
    }

    /// Mark the active transmission covering `at` whose first
    /// `preamble_us` microseconds contain `at`, if any, as caught by a
    /// receiver sample.
    pub fn mark_sampled(&mut self, at: SimTime, preamble_us: u64) {
        for tx in &mut self.active {
            if tx.start <= at && at < tx.end && at.since(tx.start) < preamble_us {
                tx.sampled = true;
            }
        }
    }

    /// Nodes with a transmission on the air at `at`.
    pub fn active_nodes(&self, at: SimTime) -> Vec<u32> {
        self.active
            .iter()
            .filter(|tx| tx.start <= at && at < tx.end)
            .map(|tx| tx.node)
            .collect()
    }

    pub fn transmissions_started(&self) -> u64 {
        self.total_started
    }
}
