//! BMAC baseline: unslotted low-power-listening with clear channel
//! assessment, uniform backoff, and long preambles.
//!
//! A sender listens for the CCA duration and decides on the channel state at
//! the end of that window; if idle it transmits preamble plus data as one
//! busy interval, otherwise it backs off a uniform random delay and retries.
//! Two nodes whose CCA decisions land in the same microsecond both see the
//! pre-transmission channel and both transmit; that is the scheme's
//! vulnerable window, and such overlapping transmissions destroy each other.
//! Collided packets retry after backoff until delivered (the ideal channel
//! stands in for link-layer acknowledgments).
//!
//! The cluster head samples the channel every check interval; because the
//! preamble is at least as long as the check interval, at least one sample
//! lands inside every preamble, so no collision-free transmission is ever
//! missed. The head is mains-powered here: its energy is outside the
//! per-packet sender metrics.

use std::collections::VecDeque;

use rand::Rng;

use super::{MacError, MacOutcome, TraceSinks};
use crate::kernel::{priority, Channel, EnergyLedger, EventQueue, RunSeed, SimTime, StreamPurpose, TxHandle};
use crate::metrics::{PacketRecord, Scheme};
use crate::traffic::{packet_tx_us, Population};

/// BMAC tunables. The defaults put the scheme deep in the regime where the
/// preamble dominates every cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BmacConfig {
    /// Receiver sampling period.
    pub check_interval_us: u64,
    /// Preamble length; must be at least the check interval so the receiver
    /// cannot sleep through it.
    pub preamble_us: u64,
    /// Clear channel assessment listen time.
    pub cca_us: u64,
    /// Backoff delays are drawn uniformly from (0, backoff_window].
    pub backoff_window_us: u64,
}

impl Default for BmacConfig {
    fn default() -> Self {
        let check_interval_us = 100_000;
        BmacConfig {
            check_interval_us,
            // Check interval plus a 5 ms guard.
            preamble_us: check_interval_us + 5_000,
            cca_us: 250,
            backoff_window_us: 10_000,
        }
    }
}

impl BmacConfig {
    pub fn validate(&self) -> Result<(), MacError> {
        if self.preamble_us < self.check_interval_us {
            return Err(MacError::PreambleTooShort {
                preamble_us: self.preamble_us,
                check_us: self.check_interval_us,
            });
        }
        Ok(())
    }

    /// Airtime of one attempt: preamble plus data.
    pub fn attempt_tx_us(&self) -> u64 {
        self.preamble_us + packet_tx_us()
    }

    /// Offered channel occupancy: aggregate packet rate times per-attempt
    /// airtime. Above 1 the channel cannot keep up regardless of
    /// arbitration.
    pub fn effective_utilization(&self, aggregate_rate_per_s: f64) -> f64 {
        aggregate_rate_per_s * (self.attempt_tx_us() as f64 / 1e6)
    }
}

enum Ev {
    Arrival { node: u32, gen_us: u64 },
    CcaDecision { node: u32 },
    TxStart { node: u32 },
    TxComplete { node: u32, handle: TxHandle },
    Sample,
}

struct NodeState {
    pending: VecDeque<u64>,
    /// Send procedure in progress for the head-of-queue packet.
    attempting: bool,
    collided_attempts: u32,
    next_packet_seq: u64,
}

/// Event-driven BMAC run over one cluster.
pub struct BmacSim<'a> {
    cfg: BmacConfig,
    nodes: Vec<NodeState>,
    arrivals: Vec<(u64, u32)>,
    seed: RunSeed,
    rep: u32,
    horizon_us: u64,
    end_us: u64,
    traces: TraceSinks<'a>,
}

impl<'a> BmacSim<'a> {
    pub fn new(
        population: &Population,
        cfg: BmacConfig,
        seed: RunSeed,
        rep: u32,
        horizon_us: u64,
        drain_us: u64,
        traces: TraceSinks<'a>,
    ) -> Result<Self, MacError> {
        cfg.validate()?;
        let mut arrivals = Vec::new();
        let mut nodes = Vec::with_capacity(population.nodes.len());
        for node in &population.nodes {
            for &gen in &node.arrivals {
                arrivals.push((gen, node.node_id));
            }
            nodes.push(NodeState {
                pending: VecDeque::new(),
                attempting: false,
                collided_attempts: 0,
                next_packet_seq: 0,
            });
        }
        arrivals.sort_unstable();
        Ok(BmacSim {
            cfg,
            nodes,
            arrivals,
            seed,
            rep,
            horizon_us,
            end_us: horizon_us + drain_us,
            traces,
        })
    }

    pub fn run(mut self) -> Result<MacOutcome, MacError> {
        let mut events: EventQueue<Ev> = EventQueue::new();
        let mut channel = Channel::new();
        let mut ledger = EnergyLedger::new(self.nodes.len());
        let mut outcome = MacOutcome::default();
        let mut backoff_rngs: Vec<_> = (0..self.nodes.len() as u32)
            .map(|n| self.seed.substream(StreamPurpose::Backoff, n, self.rep))
            .collect();

        for &(gen, node) in &self.arrivals {
            events.schedule(
                SimTime::from_us(gen),
                priority::BOUNDARY_START,
                Ev::Arrival { node, gen_us: gen },
            )?;
        }
        events.schedule(SimTime::ZERO, priority::SAMPLE, Ev::Sample)?;

        while let Some(ev) = events.pop() {
            let now = ev.time;
            if now.as_us() > self.end_us {
                break;
            }
            match ev.payload {
                Ev::Arrival { node, gen_us } => {
                    let st = &mut self.nodes[node as usize];
                    st.pending.push_back(gen_us);
                    if !st.attempting {
                        st.attempting = true;
                        st.collided_attempts = 0;
                        events.schedule(
                            now + self.cfg.cca_us,
                            priority::SENSE,
                            Ev::CcaDecision { node },
                        )?;
                    }
                }
                Ev::CcaDecision { node } => {
                    if channel.carrier_sense(now) {
                        // Busy: back off, then listen again.
                        let delay: u64 = backoff_rngs[node as usize]
                            .random_range(1..=self.cfg.backoff_window_us);
                        self.traces.event(now, Some(node), "cca_busy", true)?;
                        events.schedule(
                            now + delay + self.cfg.cca_us,
                            priority::SENSE,
                            Ev::CcaDecision { node },
                        )?;
                    } else {
                        // Decide now, transmit in the same tick after every
                        // simultaneous decision has read the channel.
                        self.traces.event(now, Some(node), "cca_idle", false)?;
                        events.schedule(now, priority::TX_START, Ev::TxStart { node })?;
                    }
                }
                Ev::TxStart { node } => {
                    let dur = self.cfg.attempt_tx_us();
                    let handle = channel.begin_transmission(node, now, dur, &mut ledger)?;
                    self.traces.event(now, Some(node), "tx_start", true)?;
                    events.schedule(now + dur, priority::TX_END, Ev::TxComplete { node, handle })?;
                }
                Ev::TxComplete { node, handle } => {
                    let done = channel.complete(handle)?;
                    let st = &mut self.nodes[node as usize];
                    if done.collided {
                        outcome.collisions += 1;
                        st.collided_attempts += 1;
                        let delay: u64 = backoff_rngs[node as usize]
                            .random_range(1..=self.cfg.backoff_window_us);
                        self.traces.event(now, Some(node), "tx_collided", channel.carrier_sense(now))?;
                        events.schedule(
                            now + delay + self.cfg.cca_us,
                            priority::SENSE,
                            Ev::CcaDecision { node },
                        )?;
                    } else {
                        debug_assert!(
                            done.sampled,
                            "a clean preamble must contain a receiver sample"
                        );
                        let gen = st.pending.pop_front().expect("attempt had a packet");
                        let attempts = st.collided_attempts;
                        let total_tx = (attempts as u64 + 1) * self.cfg.attempt_tx_us();
                        let delay_window = done.end.as_us() - gen;
                        debug_assert!(total_tx <= delay_window);
                        ledger.charge_idle(node, delay_window - total_tx);
                        outcome.records.push(PacketRecord {
                            packet_id: (node as u64) << 32 | st.next_packet_seq,
                            node_id: node,
                            scheme: Scheme::Bmac,
                            gen_us: gen,
                            tx_start_us: done.start.as_us(),
                            tx_end_us: done.end.as_us(),
                            collided_attempts: attempts,
                            attempt_tx_us: self.cfg.attempt_tx_us(),
                        });
                        st.next_packet_seq += 1;
                        st.collided_attempts = 0;
                        self.traces.event(now, Some(node), "tx_end", channel.carrier_sense(now))?;
                        if st.pending.is_empty() {
                            st.attempting = false;
                        } else {
                            events.schedule(
                                now + self.cfg.cca_us,
                                priority::SENSE,
                                Ev::CcaDecision { node },
                            )?;
                        }
                    }
                }
                Ev::Sample => {
                    channel.mark_sampled(now, self.cfg.preamble_us);
                    self.traces.event(now, None, "sample", channel.carrier_sense(now))?;
                    let next = now + self.cfg.check_interval_us;
                    if next.as_us() <= self.end_us {
                        events.schedule(next, priority::SAMPLE, Ev::Sample)?;
                    }
                }
            }
        }

        outcome.pending_at_end = self
            .nodes
            .iter()
            .flat_map(|n| n.pending.iter())
            .filter(|&&gen| gen <= self.horizon_us)
            .count() as u64;
        Ok(outcome)
    }
}
