//! The proposed channel access scheme: repeating superframes of 15 slots,
//! N nodes per slot, and per-slot carrier-sense windows whose duration
//! encodes each node's position in a virtual queue.
//!
//! The node at the head of the queue transmits from the beginning of the
//! slot; the node at position k first senses the channel for (k-1) times the
//! base window W1 and transmits only if the whole window was idle. The
//! winner moves to the tail of the queue and everyone behind it shifts one
//! position toward the head, so precedence rotates without any coordinator
//! involvement: every node tracks the queue locally from the transmissions
//! it hears. Distinct windows make the winner unique, so the scheme is
//! collision-free within a cluster.
//!
//! Packets take part in a slot only if generated strictly before the slot
//! start; a packet arriving mid-slot waits for the slot's next superframe
//! occurrence. After the winner transmits, the slot's remainder stays
//! unused.

use std::collections::VecDeque;

use super::{MacError, MacOutcome, TraceSinks};
use crate::kernel::{priority, Channel, EnergyLedger, EventQueue, SimTime, TxHandle};
use crate::metrics::{PacketRecord, Scheme};
use crate::traffic::{packet_tx_us, Population, SLOTS_PER_SUPERFRAME};

/// Slot/superframe geometry and the per-slot population size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotConfig {
    pub slots_per_superframe: u32,
    pub superframe_us: u64,
    /// Smallest carrier-sense window W1.
    pub w1_us: u64,
    pub nodes_per_slot: u32,
}

impl SlotConfig {
    /// The configuration used throughout the comparison study: 15 slots,
    /// 120 ms superframe, W1 = 250 us.
    pub fn study_default(nodes_per_slot: u32) -> Self {
        SlotConfig {
            slots_per_superframe: SLOTS_PER_SUPERFRAME,
            superframe_us: 120_000,
            w1_us: 250,
            nodes_per_slot,
        }
    }

    pub fn slot_duration_us(&self) -> u64 {
        self.superframe_us / self.slots_per_superframe as u64
    }

    /// Feasibility guard: the last position's window plus a full packet must
    /// fit inside the slot, or the scheme cannot work as specified.
    pub fn validate(&self, packet_tx_us: u64) -> Result<(), MacError> {
        let worst = (self.nodes_per_slot as u64).saturating_sub(1) * self.w1_us + packet_tx_us;
        let slot = self.slot_duration_us();
        if worst > slot {
            return Err(MacError::Infeasible {
                worst_us: worst,
                slot_us: slot,
            });
        }
        Ok(())
    }
}

/// Sensing window before the transmission of the node at `position`
/// (1-based): position 1 transmits from the beginning of the slot, position
/// k waits (k-1) * W1.
pub fn window_duration_us(position: usize, cfg: &SlotConfig) -> Result<u64, MacError> {
    if position == 0 || position > cfg.nodes_per_slot as usize {
        return Err(MacError::PositionOutOfRange {
            position,
            len: cfg.nodes_per_slot as usize,
        });
    }
    Ok((position as u64 - 1) * cfg.w1_us)
}

/// The permutation of one slot's node ids; index 0 is the head of line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualQueue {
    order: Vec<u32>,
}

impl VirtualQueue {
    /// Build from an explicit order; duplicates are rejected.
    pub fn new(order: Vec<u32>) -> Result<Self, MacError> {
        let mut seen = order.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != order.len() || order.is_empty() {
            return Err(MacError::NotAPermutation);
        }
        Ok(VirtualQueue { order })
    }

    /// The preset initial order: ascending node id.
    pub fn initial(mut ids: Vec<u32>) -> Result<Self, MacError> {
        ids.sort_unstable();
        VirtualQueue::new(ids)
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// 1-based queue position of `node`.
    pub fn position(&self, node: u32) -> Option<usize> {
        self.order.iter().position(|&n| n == node).map(|i| i + 1)
    }

    /// Apply one transmission: the winner at `winner_position` (1-based)
    /// moves to the tail, everyone behind it shifts one toward the head,
    /// and everyone ahead of it keeps their position.
    pub fn rotate(&mut self, winner_position: usize) -> Result<(), MacError> {
        if winner_position == 0 || winner_position > self.order.len() {
            return Err(MacError::PositionOutOfRange {
                position: winner_position,
                len: self.order.len(),
            });
        }
        let winner = self.order.remove(winner_position - 1);
        self.order.push(winner);
        Ok(())
    }
}

/// What a node heard during one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotOutcome {
    /// Nobody transmitted; all positions stay intact.
    Idle,
    /// `node` transmitted, starting `offset_us` after the slot began.
    Transmission { node: u32, offset_us: u64 },
}

/// One node's copy of its slot's virtual queue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalView {
    pub node: u32,
    pub queue: VirtualQueue,
}

impl LocalView {
    pub fn new(node: u32, queue: VirtualQueue) -> Self {
        LocalView { node, queue }
    }

    /// This node's own 1-based position.
    pub fn own_position(&self) -> usize {
        self.queue
            .position(self.node)
            .expect("own node is always in the queue")
    }

    /// Fold one observed slot outcome into the view. The observed start
    /// offset must equal the transmitter's window for its queue position; a
    /// transmitter we cannot place, or a mismatched offset, means the views
    /// have diverged and is reported as a protocol violation.
    pub fn observe_and_update(
        &mut self,
        outcome: SlotOutcome,
        cfg: &SlotConfig,
    ) -> Result<(), MacError> {
        match outcome {
            SlotOutcome::Idle => Ok(()),
            SlotOutcome::Transmission { node, offset_us } => {
                let pos = self
                    .queue
                    .position(node)
                    .ok_or(MacError::UnknownTransmitter(node))?;
                let expected_us = window_duration_us(pos, cfg)?;
                if expected_us != offset_us {
                    return Err(MacError::OffsetMismatch {
                        got_us: offset_us,
                        expected_us,
                    });
                }
                self.queue.rotate(pos)
            }
        }
    }
}

/// Pure slot resolution: the queue-earliest node with backlog wins and
/// transmits after its window; `None` when nobody has backlog.
pub fn resolve_slot<F>(
    queue: &VirtualQueue,
    mut has_backlog: F,
    cfg: &SlotConfig,
) -> Option<(u32, u64)>
where
    F: FnMut(u32) -> bool,
{
    for (idx, &node) in queue.order().iter().enumerate() {
        if has_backlog(node) {
            let offset = (idx as u64) * cfg.w1_us;
            return Some((node, offset));
        }
    }
    None
}

enum Ev {
    SlotStart { slot_index: u64 },
    SlotEnd { slot_index: u64 },
    WindowExpiry { node: u32 },
    TxComplete { node: u32, handle: TxHandle },
}

struct NodeState {
    /// Generation instants not yet served, oldest first.
    pending: VecDeque<u64>,
    view: LocalView,
    next_packet_seq: u64,
}

/// Event-driven simulation of the proposed scheme over one cluster.
pub struct ProposedSim<'a> {
    cfg: SlotConfig,
    groups: Vec<Vec<u32>>,
    nodes: Vec<NodeState>,
    horizon_us: u64,
    end_us: u64,
    traces: TraceSinks<'a>,
}

struct SlotCtx {
    group: usize,
    start: SimTime,
    tx: Option<(u32, u64)>,
    /// Eligibility snapshot at slot start, for the cross-check against
    /// [`resolve_slot`].
    eligible: Vec<bool>,
    /// Reference queue state at slot start (all views agreed then).
    queue_at_start: VirtualQueue,
}

impl<'a> ProposedSim<'a> {
    /// Build a simulation over `population`. `horizon_us` bounds packet
    /// generation; the run itself continues to `end_us` so queued packets
    /// can drain.
    pub fn new(
        population: &Population,
        cfg: SlotConfig,
        horizon_us: u64,
        drain_us: u64,
        traces: TraceSinks<'a>,
    ) -> Result<Self, MacError> {
        cfg.validate(packet_tx_us())?;
        let slots = cfg.slots_per_superframe as usize;
        let mut groups: Vec<Vec<u32>> = vec![Vec::new(); slots];
        for node in &population.nodes {
            groups[node.slot as usize].push(node.node_id);
        }
        for g in &mut groups {
            g.sort_unstable();
        }
        let total = population.nodes.len();
        let mut nodes: Vec<Option<NodeState>> = (0..total).map(|_| None).collect();
        for node in &population.nodes {
            let queue = VirtualQueue::initial(groups[node.slot as usize].clone())?;
            nodes[node.node_id as usize] = Some(NodeState {
                pending: node.arrivals.iter().copied().collect(),
                view: LocalView::new(node.node_id, queue),
                next_packet_seq: 0,
            });
        }
        Ok(ProposedSim {
            cfg,
            groups,
            nodes: nodes.into_iter().map(|n| n.expect("dense node ids")).collect(),
            horizon_us,
            end_us: horizon_us + drain_us,
            traces,
        })
    }

    pub fn run(mut self) -> Result<MacOutcome, MacError> {
        let mut events: EventQueue<Ev> = EventQueue::new();
        let mut channel = Channel::new();
        let mut ledger = EnergyLedger::new(self.nodes.len());
        let mut outcome = MacOutcome {
            wins_per_node: vec![0; self.nodes.len()],
            ..MacOutcome::default()
        };
        let slot_dur = self.cfg.slot_duration_us();
        let mut ctx: Option<SlotCtx> = None;

        events.schedule(SimTime::ZERO, priority::BOUNDARY_START, Ev::SlotStart { slot_index: 0 })?;

        while let Some(ev) = events.pop() {
            let now = ev.time;
            match ev.payload {
                Ev::SlotStart { slot_index } => {
                    let group = (slot_index % self.cfg.slots_per_superframe as u64) as usize;
                    self.traces.event(now, None, "slot_start", channel.carrier_sense(now))?;
                    let members = &self.groups[group];
                    let mut eligible = vec![false; members.len()];
                    let queue_at_start = self.nodes[members[0] as usize].view.queue.clone();
                    for (i, &node_id) in members.iter().enumerate() {
                        let st = &self.nodes[node_id as usize];
                        // Strictly before slot start: a packet generated at
                        // the boundary tick waits for the next superframe.
                        let has_backlog = st
                            .pending
                            .front()
                            .is_some_and(|&gen| gen < now.as_us());
                        eligible[i] = has_backlog;
                        if has_backlog {
                            let pos = st.view.own_position();
                            let offset = window_duration_us(pos, &self.cfg)?;
                            events.schedule(
                                now + offset,
                                priority::SENSE,
                                Ev::WindowExpiry { node: node_id },
                            )?;
                        }
                    }
                    ctx = Some(SlotCtx {
                        group,
                        start: now,
                        tx: None,
                        eligible,
                        queue_at_start,
                    });
                    events.schedule(now + slot_dur, priority::BOUNDARY_END, Ev::SlotEnd { slot_index })?;
                }
                Ev::WindowExpiry { node } => {
                    let slot = ctx.as_mut().expect("window expiry inside a slot");
                    // A transmission earlier in this slot means the channel
                    // turned busy during this node's window: it stops
                    // competing for the slot instance.
                    if slot.tx.is_some() {
                        self.traces.event(now, Some(node), "defer", true)?;
                        continue;
                    }
                    debug_assert!(
                        !channel.carrier_sense(now),
                        "channel busy without an in-slot transmission"
                    );
                    let offset = now.since(slot.start);
                    let handle = channel.begin_transmission(node, now, packet_tx_us(), &mut ledger)?;
                    slot.tx = Some((node, offset));
                    self.traces.event(now, Some(node), "tx_start", true)?;
                    events.schedule(
                        now + packet_tx_us(),
                        priority::TX_END,
                        Ev::TxComplete { node, handle },
                    )?;
                }
                Ev::TxComplete { node, handle } => {
                    let done = channel.complete(handle)?;
                    assert!(
                        !done.collided,
                        "collision in the proposed scheme: distinct windows must prevent this"
                    );
                    let st = &mut self.nodes[node as usize];
                    let gen = st.pending.pop_front().expect("winner had backlog");
                    ledger.charge_idle(node, done.start.as_us() - gen);
                    outcome.records.push(PacketRecord {
                        packet_id: (node as u64) << 32 | st.next_packet_seq,
                        node_id: node,
                        scheme: Scheme::Proposed,
                        gen_us: gen,
                        tx_start_us: done.start.as_us(),
                        tx_end_us: done.end.as_us(),
                        collided_attempts: 0,
                        attempt_tx_us: packet_tx_us(),
                    });
                    st.next_packet_seq += 1;
                    outcome.wins_per_node[node as usize] += 1;
                    self.traces.event(now, Some(node), "tx_end", channel.carrier_sense(now))?;
                }
                Ev::SlotEnd { slot_index } => {
                    let slot = ctx.take().expect("slot end closes an open slot");
                    outcome.slots_run += 1;
                    let observed = match slot.tx {
                        Some((node, offset_us)) => SlotOutcome::Transmission { node, offset_us },
                        None => SlotOutcome::Idle,
                    };

                    // The winner the event machinery produced must equal the
                    // pure resolution over the slot-start snapshot.
                    let members = &self.groups[slot.group];
                    let expected = resolve_slot(
                        &slot.queue_at_start,
                        |n| {
                            let i = members.iter().position(|&m| m == n).expect("member");
                            slot.eligible[i]
                        },
                        &self.cfg,
                    );
                    let actual = slot.tx;
                    assert_eq!(actual, expected, "event-driven winner diverged from the slot rules");

                    // Every member folds in what it heard.
                    for &node_id in members {
                        let view = &mut self.nodes[node_id as usize].view;
                        view.observe_and_update(observed, &self.cfg)?;
                    }
                    // All views must agree after every slot.
                    let reference = &self.nodes[members[0] as usize].view.queue;
                    let mut diverged = false;
                    for &node_id in &members[1..] {
                        if &self.nodes[node_id as usize].view.queue != reference {
                            diverged = true;
                        }
                    }
                    if diverged {
                        outcome.view_divergences += 1;
                    }
                    self.traces
                        .queue(slot_index, reference.order(), slot.tx.map(|(n, _)| n))?;
                    self.traces
                        .event(now, None, "slot_end", channel.carrier_sense(now))?;

                    let next_start = slot.start + slot_dur;
                    if next_start.as_us() < self.end_us {
                        events.schedule(
                            next_start,
                            priority::BOUNDARY_START,
                            Ev::SlotStart {
                                slot_index: slot_index + 1,
                            },
                        )?;
                    }
                }
            }
        }

        outcome.collisions = 0;
        outcome.pending_at_end = self
            .nodes
            .iter()
            .flat_map(|n| n.pending.iter())
            .filter(|&&gen| gen <= self.horizon_us)
            .count() as u64;
        Ok(outcome)
    }
}
