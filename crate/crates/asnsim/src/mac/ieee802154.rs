//! IEEE 802.15.4 baseline as configured for the comparison: every slot of
//! the superframe dedicated to contention-free access, with the coordinator
//! allocating guaranteed time slots at each beacon. Requests reach the
//! coordinator instantly and at zero signaling cost, and a packet can never
//! transmit before the first beacon after its generation.
//!
//! Two allocation policies exist:
//!
//! - [`GtsAllocation::RoundRobinStatic`] (the comparison default): the
//!   coordinator arranges all nodes in a fixed transmission order and cycles
//!   through them, so with N nodes per slot each node owns one guaranteed
//!   slot every N superframes. This is plain TDMA: insensitive to traffic
//!   type, with delay growing with the population.
//! - [`GtsAllocation::FifoDemand`]: slots are granted per beacon to the
//!   oldest pending packets, FIFO by generation time, via [`allocate_gts`];
//!   unserved requests carry over.
//!
//! The standard's 7-GTS cap is deliberately overridden to 15 in the comparison study;
//! a strict-standard toggle restores it (FIFO mode only; the static cycle
//! needs every slot).

use std::collections::VecDeque;

use super::{MacError, MacOutcome, TraceSinks};
use crate::kernel::{priority, Channel, EnergyLedger, EventQueue, SimTime, TxHandle};
use crate::metrics::{PacketRecord, Scheme};
use crate::traffic::{packet_tx_us, Population};

/// How the coordinator assigns guaranteed time slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GtsAllocation {
    /// Fixed node order, one slot per node every N superframes.
    #[default]
    RoundRobinStatic,
    /// Oldest pending packets first, reallocated at every beacon.
    FifoDemand,
}

/// CFP allocation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CfpConfig {
    pub slots_per_superframe: u32,
    pub superframe_us: u64,
    /// Slots the coordinator may grant per superframe. 15 in the comparison study,
    /// 7 with the strict-standard toggle.
    pub max_gts_per_superframe: u32,
    pub allocation: GtsAllocation,
}

impl CfpConfig {
    pub fn study_default() -> Self {
        CfpConfig {
            slots_per_superframe: 15,
            superframe_us: 120_000,
            max_gts_per_superframe: 15,
            allocation: GtsAllocation::RoundRobinStatic,
        }
    }

    /// The standard's contention-free period allows at most 7 GTS.
    pub fn strict_standard() -> Self {
        CfpConfig {
            max_gts_per_superframe: 7,
            allocation: GtsAllocation::FifoDemand,
            ..CfpConfig::study_default()
        }
    }

    pub fn slot_duration_us(&self) -> u64 {
        self.superframe_us / self.slots_per_superframe as u64
    }

    fn cap(&self) -> usize {
        self.max_gts_per_superframe.min(self.slots_per_superframe) as usize
    }
}

/// One queued transmission request: a generated packet waiting for a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GtsRequest {
    pub gen_us: u64,
    pub node: u32,
    pub packet_seq: u64,
}

/// Per-superframe slot map produced at a beacon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GtsSchedule {
    pub superframe_index: u64,
    /// slot index -> granted request; trailing slots may be empty.
    pub slots: Vec<Option<GtsRequest>>,
}

impl GtsSchedule {
    pub fn granted(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }
}

/// Grant the first `min(cap, pending)` requests one slot each, in request
/// order. Unserved requests stay pending for the next superframe.
pub fn allocate_gts(pending: &VecDeque<GtsRequest>, superframe_index: u64, cfg: &CfpConfig) -> GtsSchedule {
    let mut slots = vec![None; cfg.slots_per_superframe as usize];
    for (slot, req) in slots.iter_mut().zip(pending.iter()).take(cfg.cap()) {
        *slot = Some(*req);
    }
    GtsSchedule {
        superframe_index,
        slots,
    }
}

enum Ev {
    Beacon { index: u64 },
    TxStart { req: GtsRequest },
    TxComplete { req: GtsRequest, handle: TxHandle },
}

/// Event-driven CFP run over one cluster.
pub struct CfpSim<'a> {
    cfg: CfpConfig,
    nodes_per_slot: u32,
    /// All generated packets, FIFO by (generation time, node id); demand
    /// mode grants from the front.
    fifo_pending: VecDeque<GtsRequest>,
    /// Per-node queues for the static round-robin cycle.
    node_pending: Vec<VecDeque<GtsRequest>>,
    horizon_us: u64,
    end_us: u64,
    traces: TraceSinks<'a>,
}

impl<'a> CfpSim<'a> {
    pub fn new(
        population: &Population,
        cfg: CfpConfig,
        horizon_us: u64,
        drain_us: u64,
        traces: TraceSinks<'a>,
    ) -> Self {
        let mut requests: Vec<GtsRequest> = Vec::new();
        let mut node_pending = vec![VecDeque::new(); population.nodes.len()];
        for node in &population.nodes {
            for (k, &gen) in node.arrivals.iter().enumerate() {
                let req = GtsRequest {
                    gen_us: gen,
                    node: node.node_id,
                    packet_seq: k as u64,
                };
                requests.push(req);
                node_pending[node.node_id as usize].push_back(req);
            }
        }
        requests.sort_by_key(|r| (r.gen_us, r.node, r.packet_seq));
        CfpSim {
            cfg,
            nodes_per_slot: population.mix.nodes_per_slot,
            fifo_pending: requests.into(),
            node_pending,
            horizon_us,
            end_us: horizon_us + drain_us,
            traces,
        }
    }

    /// Grants for one beacon under the active allocation policy. Granted
    /// packets leave their pending queues.
    fn grant(&mut self, index: u64, beacon_us: u64) -> GtsSchedule {
        match self.cfg.allocation {
            GtsAllocation::FifoDemand => {
                // Only packets generated strictly before this beacon are
                // known requests; later ones wait for the next beacon.
                let known_prefix = self
                    .fifo_pending
                    .iter()
                    .take_while(|r| r.gen_us < beacon_us)
                    .count();
                let eligible: VecDeque<GtsRequest> =
                    self.fifo_pending.iter().take(known_prefix).copied().collect();
                let schedule = allocate_gts(&eligible, index, &self.cfg);
                self.fifo_pending.drain(..schedule.granted());
                schedule
            }
            GtsAllocation::RoundRobinStatic => {
                // Superframe k serves the k-th group of the fixed cycle: the
                // node in position (k mod N) of every slot's membership.
                let slots = self.cfg.slots_per_superframe as usize;
                let cycle = (index % self.nodes_per_slot.max(1) as u64) as usize;
                let mut granted = vec![None; slots];
                for (slot, grant) in granted.iter_mut().enumerate() {
                    let owner = cycle * slots + slot;
                    if owner >= self.node_pending.len() {
                        continue;
                    }
                    let usable = self.node_pending[owner]
                        .front()
                        .is_some_and(|r| r.gen_us < beacon_us);
                    if usable {
                        *grant = self.node_pending[owner].pop_front();
                    }
                }
                GtsSchedule {
                    superframe_index: index,
                    slots: granted,
                }
            }
        }
    }

    pub fn run(mut self) -> Result<MacOutcome, MacError> {
        let mut events: EventQueue<Ev> = EventQueue::new();
        let mut channel = Channel::new();
        let mut ledger = EnergyLedger::new(self.node_pending.len());
        let mut outcome = MacOutcome::default();
        let slot_dur = self.cfg.slot_duration_us();

        events.schedule(SimTime::ZERO, priority::BOUNDARY_START, Ev::Beacon { index: 0 })?;

        while let Some(ev) = events.pop() {
            let now = ev.time;
            match ev.payload {
                Ev::Beacon { index } => {
                    self.traces.event(now, None, "beacon", channel.carrier_sense(now))?;
                    let schedule = self.grant(index, now.as_us());
                    for (slot, grant) in schedule.slots.iter().enumerate() {
                        if let Some(req) = grant {
                            events.schedule(
                                now + slot as u64 * slot_dur,
                                priority::TX_START,
                                Ev::TxStart { req: *req },
                            )?;
                        }
                    }
                    outcome.slots_run += self.cfg.slots_per_superframe as u64;

                    let next = now + self.cfg.superframe_us;
                    if next.as_us() < self.end_us {
                        events.schedule(next, priority::BOUNDARY_START, Ev::Beacon { index: index + 1 })?;
                    }
                }
                Ev::TxStart { req } => {
                    let handle =
                        channel.begin_transmission(req.node, now, packet_tx_us(), &mut ledger)?;
                    self.traces.event(now, Some(req.node), "tx_start", true)?;
                    events.schedule(
                        now + packet_tx_us(),
                        priority::TX_END,
                        Ev::TxComplete { req, handle },
                    )?;
                }
                Ev::TxComplete { req, handle } => {
                    let done = channel.complete(handle)?;
                    assert!(!done.collided, "coordinator-assigned slots are exclusive");
                    ledger.charge_idle(req.node, done.start.as_us() - req.gen_us);
                    outcome.records.push(PacketRecord {
                        packet_id: (req.node as u64) << 32 | req.packet_seq,
                        node_id: req.node,
                        scheme: Scheme::Ieee802154Cfp,
                        gen_us: req.gen_us,
                        tx_start_us: done.start.as_us(),
                        tx_end_us: done.end.as_us(),
                        collided_attempts: 0,
                        attempt_tx_us: packet_tx_us(),
                    });
                    self.traces.event(now, Some(req.node), "tx_end", channel.carrier_sense(now))?;
                }
            }
        }

        outcome.pending_at_end = match self.cfg.allocation {
            GtsAllocation::FifoDemand => self
                .fifo_pending
                .iter()
                .filter(|r| r.gen_us <= self.horizon_us)
                .count() as u64,
            GtsAllocation::RoundRobinStatic => self
                .node_pending
                .iter()
                .flat_map(|q| q.iter())
                .filter(|r| r.gen_us <= self.horizon_us)
                .count() as u64,
        };
        Ok(outcome)
    }
}
