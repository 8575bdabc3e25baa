//! Channel access schemes: the proposed slotted carrier-sense scheme with
//! autonomous queue rotation, and the two baselines it is compared against
//! (IEEE 802.15.4 contention-free TDMA and BMAC preamble sampling).
//!
//! Each driver owns one single-threaded event-kernel run over a shared
//! in-cluster channel; drivers share nothing, so independent runs can
//! execute concurrently.

pub mod bmac;
pub mod ieee802154;
pub mod proposed;

use std::io::Write;

use thiserror::Error;

use crate::kernel::SimTime;
use crate::metrics::PacketRecord;

#[derive(Debug, Error, PartialEq)]
pub enum MacError {
    #[error("queue position {position} out of range 1..={len}")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("node ids do not form a permutation")]
    NotAPermutation,
    #[error("observed transmitter {0} is absent from the local queue view")]
    UnknownTransmitter(u32),
    #[error("observed transmission offset {got_us} us does not match queue position (expected {expected_us} us)")]
    OffsetMismatch { got_us: u64, expected_us: u64 },
    #[error(
        "infeasible slot config: worst-case window plus packet ({worst_us} us) overruns the {slot_us} us slot"
    )]
    Infeasible { worst_us: u64, slot_us: u64 },
    #[error("preamble ({preamble_us} us) must be at least the check interval ({check_us} us)")]
    PreambleTooShort { preamble_us: u64, check_us: u64 },
    #[error("kernel error: {0}")]
    Kernel(#[from] crate::kernel::KernelError),
    #[error("channel error: {0}")]
    Channel(#[from] crate::kernel::ChannelError),
    #[error("trace write failed: {0}")]
    Trace(String),
}

/// Result of driving one scheme over one population.
#[derive(Debug, Default)]
pub struct MacOutcome {
    pub records: Vec<PacketRecord>,
    /// Packets generated inside the horizon still undelivered when the run
    /// (horizon plus drain) ended.
    pub pending_at_end: u64,
    /// Transmissions that ended collided (counted per transmission).
    pub collisions: u64,
    /// Slot instances executed (slotted schemes).
    pub slots_run: u64,
    /// Transmissions won per node (proposed scheme).
    pub wins_per_node: Vec<u64>,
    /// Slots after which some local queue view disagreed with the rest
    /// (proposed scheme; always zero unless the protocol is broken).
    pub view_divergences: u64,
}

/// Optional conformance trace outputs.
#[derive(Default)]
pub struct TraceSinks<'a> {
    /// One line per dispatched event: `time_us node action busy`.
    pub events: Option<&'a mut dyn Write>,
    /// One line per slot of the proposed scheme: slot index, queue order,
    /// winner.
    pub queues: Option<&'a mut dyn Write>,
}

impl TraceSinks<'_> {
    pub(crate) fn event(
        &mut self,
        time: SimTime,
        node: Option<u32>,
        action: &str,
        busy: bool,
    ) -> Result<(), MacError> {
        if let Some(w) = self.events.as_deref_mut() {
            let node = node.map_or_else(|| "-".to_string(), |n| n.to_string());
            writeln!(w, "{} {} {} {}", time.as_us(), node, action, u8::from(busy))
                .map_err(|e| MacError::Trace(e.to_string()))?;
        }
        Ok(())
    }

    pub(crate) fn queue(
        &mut self,
        slot_index: u64,
        order: &[u32],
        winner: Option<u32>,
    ) -> Result<(), MacError> {
        if let Some(w) = self.queues.as_deref_mut() {
            let order = order
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(",");
            let winner = winner.map_or_else(|| "-".to_string(), |n| n.to_string());
            writeln!(w, "{slot_index} [{order}] {winner}").map_err(|e| MacError::Trace(e.to_string()))?;
        }
        Ok(())
    }
}
