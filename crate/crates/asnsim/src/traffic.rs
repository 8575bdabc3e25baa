//! Per-node packet generation: fixed-interval (periodic detection) and
//! random (event-driven detection, modeled as a Poisson process), plus the
//! mixed-population construction and channel-utilization arithmetic.
//!
//! Table-driven intervals follow the common parameter set: fixed profiles
//! use 400/800/1200/1600 ms, random profiles 1000/2000/3000/4000 ms, paired
//! by entry index. Arbitrary intervals are accepted in free-form mode.

use rand::Rng;

use crate::kernel::{RunSeed, StreamPurpose};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fixed generation intervals, microseconds, by table entry.
pub const FIXED_INTERVALS_US: [u64; 4] = [400_000, 800_000, 1_200_000, 1_600_000];
/// Random (mean) generation intervals, microseconds, by table entry.
pub const RANDOM_INTERVALS_US: [u64; 4] = [1_000_000, 2_000_000, 3_000_000, 4_000_000];

/// Number of time slots per superframe.
pub const SLOTS_PER_SUPERFRAME: u32 = 15;

/// Packet payload size, octets.
pub const PACKET_SIZE_BYTES: u64 = 50;
/// Data transmission rate, bits per second.
pub const DATA_RATE_BPS: u64 = 100_000;

/// Time on air of one data packet: 50 bytes at 100 kbps = 4 ms, derived and
/// never set independently.
pub const fn packet_tx_us() -> u64 {
    PACKET_SIZE_BYTES * 8 * 1_000_000 / DATA_RATE_BPS
}

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("table entry must be 1..=4, got {0}")]
    BadEntry(u8),
    #[error("ratio {fixed}:{random} does not divide {nodes} nodes per slot evenly")]
    RatioMismatch { fixed: u32, random: u32, nodes: u32 },
    #[error("ratio must have at least one nonzero part")]
    EmptyRatio,
    #[error("nodes_per_slot must be >= 1")]
    NoNodes,
    #[error("malformed ratio string {0:?}, expected like \"2:1\"")]
    RatioParse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrafficKind {
    Fixed,
    Random,
}

/// One node's generation process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrafficProfile {
    pub kind: TrafficKind,
    /// Generation interval (fixed) or mean inter-arrival (random), us.
    pub interval_us: u64,
    /// Start offset of the periodic process; unused for random.
    pub phase_offset_us: u64,
}

/// Fixed:random population split, for example 2:1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Ratio {
    pub fixed: u32,
    pub random: u32,
}

impl Ratio {
    pub fn new(fixed: u32, random: u32) -> Result<Self, TrafficError> {
        if fixed == 0 && random == 0 {
            return Err(TrafficError::EmptyRatio);
        }
        Ok(Ratio { fixed, random })
    }

    /// Split `nodes_per_slot` into (fixed, random) counts; the split must be
    /// exact.
    pub fn split(&self, nodes_per_slot: u32) -> Result<(u32, u32), TrafficError> {
        let parts = self.fixed + self.random;
        if nodes_per_slot == 0 {
            return Err(TrafficError::NoNodes);
        }
        if nodes_per_slot % parts != 0 {
            return Err(TrafficError::RatioMismatch {
                fixed: self.fixed,
                random: self.random,
                nodes: nodes_per_slot,
            });
        }
        let unit = nodes_per_slot / parts;
        Ok((unit * self.fixed, unit * self.random))
    }
}

impl std::str::FromStr for Ratio {
    type Err = TrafficError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| TrafficError::RatioParse(s.to_string()))?;
        let fixed = a
            .trim()
            .parse()
            .map_err(|_| TrafficError::RatioParse(s.to_string()))?;
        let random = b
            .trim()
            .parse()
            .map_err(|_| TrafficError::RatioParse(s.to_string()))?;
        Ratio::new(fixed, random)
    }
}

impl TryFrom<String> for Ratio {
    type Error = TrafficError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Ratio> for String {
    fn from(r: Ratio) -> String {
        r.to_string()
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.fixed, self.random)
    }
}

/// Population description for one run: N nodes in each of the 15 slots,
/// split fixed:random, with intervals from the table entry (or free-form
/// overrides).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationMix {
    pub nodes_per_slot: u32,
    pub ratio: Ratio,
    /// Table entry 1..=4 selecting the interval pair.
    pub entry: u8,
    /// Free-form interval overrides, us. When set, the entry table is
    /// bypassed for that kind.
    pub fixed_interval_override_us: Option<u64>,
    pub random_interval_override_us: Option<u64>,
}

impl PopulationMix {
    pub fn table(nodes_per_slot: u32, ratio: Ratio, entry: u8) -> Result<Self, TrafficError> {
        if !(1..=4).contains(&entry) {
            return Err(TrafficError::BadEntry(entry));
        }
        ratio.split(nodes_per_slot)?;
        Ok(PopulationMix {
            nodes_per_slot,
            ratio,
            entry,
            fixed_interval_override_us: None,
            random_interval_override_us: None,
        })
    }

    pub fn fixed_interval_us(&self) -> u64 {
        self.fixed_interval_override_us
            .unwrap_or(FIXED_INTERVALS_US[(self.entry - 1) as usize])
    }

    pub fn random_interval_us(&self) -> u64 {
        self.random_interval_override_us
            .unwrap_or(RANDOM_INTERVALS_US[(self.entry - 1) as usize])
    }

    pub fn total_nodes(&self) -> u32 {
        self.nodes_per_slot * SLOTS_PER_SUPERFRAME
    }

    /// Aggregate packet rate in packets per second.
    pub fn aggregate_rate_per_s(&self) -> f64 {
        let (fixed, random) = self.ratio.split(self.nodes_per_slot).expect("validated mix");
        let fixed_total = (fixed * SLOTS_PER_SUPERFRAME) as f64;
        let random_total = (random * SLOTS_PER_SUPERFRAME) as f64;
        fixed_total / (self.fixed_interval_us() as f64 / 1e6)
            + random_total / (self.random_interval_us() as f64 / 1e6)
    }
}

/// Aggregate packet rate times time-on-air; must stay below 1 for the
/// channel to keep up.
pub fn channel_utilization(mix: &PopulationMix) -> f64 {
    mix.aggregate_rate_per_s() * (packet_tx_us() as f64 / 1e6)
}

/// Per-slot packet rate times the superframe period: each slot instance
/// serves at most one packet in the slotted schemes, so this must also stay
/// below 1.
pub fn per_slot_load(mix: &PopulationMix, superframe_us: u64) -> f64 {
    let per_slot_rate = mix.aggregate_rate_per_s() / SLOTS_PER_SUPERFRAME as f64;
    per_slot_rate * (superframe_us as f64 / 1e6)
}

/// Arrival instants of a periodic profile: `phase + k * interval` for all
/// k >= 0 with the arrival at or before `horizon_us`.
pub fn fixed_arrivals(profile: &TrafficProfile, horizon_us: u64) -> Vec<u64> {
    debug_assert_eq!(profile.kind, TrafficKind::Fixed);
    let mut out = Vec::new();
    let mut t = profile.phase_offset_us;
    while t <= horizon_us {
        out.push(t);
        t += profile.interval_us;
    }
    out
}

/// One Poisson-process realization: exponential inter-arrivals with the
/// profile's mean, quantized to the microsecond grid (minimum 1 us so the
/// sequence stays strictly increasing), deterministic given the stream.
pub fn random_arrivals<R: Rng>(profile: &TrafficProfile, rng: &mut R, horizon_us: u64) -> Vec<u64> {
    debug_assert_eq!(profile.kind, TrafficKind::Random);
    let mean = profile.interval_us as f64;
    let mut out = Vec::new();
    let mut t = 0u64;
    loop {
        let gap = exponential_us(rng, mean);
        t += gap;
        if t > horizon_us {
            return out;
        }
        out.push(t);
    }
}

fn exponential_us<R: Rng>(rng: &mut R, mean_us: f64) -> u64 {
    // Inverse transform on (0, 1]; u = 0 (probability 2^-53) is redrawn to
    // keep gaps strictly positive.
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            let gap = -mean_us * u.ln();
            return (gap.round() as u64).max(1);
        }
    }
}

/// One node of a built population.
#[derive(Debug, Clone)]
pub struct NodeTraffic {
    pub node_id: u32,
    pub slot: u32,
    pub profile: TrafficProfile,
    /// Strictly increasing generation instants within the horizon.
    pub arrivals: Vec<u64>,
}

/// The full population for one run, arrivals included.
#[derive(Debug, Clone)]
pub struct Population {
    pub nodes: Vec<NodeTraffic>,
    pub mix: PopulationMix,
}

/// Build the per-node profiles and arrival realizations. Nodes are numbered
/// consecutively with `slot = node_id % 15`; within a slot the first
/// `fixed_count` members (in node order) are periodic and the rest random.
/// Fixed phases are drawn uniformly in `[0, interval)` from the node's
/// traffic substream, so identical `(seed, rep)` reproduce identical
/// populations regardless of which scheme consumes them.
pub fn build_population(
    mix: &PopulationMix,
    seed: RunSeed,
    rep: u32,
    horizon_us: u64,
) -> Result<Population, TrafficError> {
    let (fixed_count, _) = mix.ratio.split(mix.nodes_per_slot)?;
    let total = mix.total_nodes();
    let mut nodes = Vec::with_capacity(total as usize);
    for node_id in 0..total {
        let slot = node_id % SLOTS_PER_SUPERFRAME;
        let member_index = node_id / SLOTS_PER_SUPERFRAME;
        let mut rng = seed.substream(StreamPurpose::Traffic, node_id, rep);
        let (profile, arrivals) = if member_index < fixed_count {
            let interval = mix.fixed_interval_us();
            let profile = TrafficProfile {
                kind: TrafficKind::Fixed,
                interval_us: interval,
                phase_offset_us: rng.random_range(0..interval),
            };
            let arrivals = fixed_arrivals(&profile, horizon_us);
            (profile, arrivals)
        } else {
            let profile = TrafficProfile {
                kind: TrafficKind::Random,
                interval_us: mix.random_interval_us(),
                phase_offset_us: 0,
            };
            let arrivals = random_arrivals(&profile, &mut rng, horizon_us);
            (profile, arrivals)
        };
        nodes.push(NodeTraffic {
            node_id,
            slot,
            profile,
            arrivals,
        });
    }
    Ok(Population { nodes, mix: *mix })
}

/// Stable fingerprint of every arrival instant, for verifying that paired
/// sweep cells feed identical traffic to each scheme.
pub fn arrival_fingerprint(pop: &Population) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for node in &pop.nodes {
        for &t in &node.arrivals {
            h ^= t ^ (node.node_id as u64) << 40;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packet_time_on_air_is_4ms() {
        assert_eq!(packet_tx_us(), 4_000);
    }

    #[test]
    fn fixed_arrivals_examples() {
        let p = TrafficProfile {
            kind: TrafficKind::Fixed,
            interval_us: 400_000,
            phase_offset_us: 0,
        };
        assert_eq!(
            fixed_arrivals(&p, 1_200_000),
            vec![0, 400_000, 800_000, 1_200_000]
        );
        let shifted = TrafficProfile {
            phase_offset_us: 100_000,
            ..p
        };
        assert_eq!(
            fixed_arrivals(&shifted, 1_200_000),
            vec![100_000, 500_000, 900_000]
        );
        // Count over the horizon is floor((H - offset)/interval) + 1.
        for (offset, horizon) in [(0u64, 10_000_000u64), (37_000, 5_000_000), (399_999, 400_000)] {
            let p = TrafficProfile {
                kind: TrafficKind::Fixed,
                interval_us: 400_000,
                phase_offset_us: offset,
            };
            let want = (horizon - offset) / 400_000 + 1;
            assert_eq!(fixed_arrivals(&p, horizon).len() as u64, want);
        }
    }

    #[test]
    fn random_arrivals_mean_within_one_percent() {
        let seed = RunSeed(2024);
        let mut rng = seed.substream(StreamPurpose::Traffic, 0, 0);
        let mean = 1_000.0;
        let n = 100_000;
        let total: u64 = (0..n).map(|_| exponential_us(&mut rng, mean)).sum();
        let empirical = total as f64 / n as f64;
        assert!(
            (empirical - mean).abs() / mean < 0.01,
            "empirical mean {empirical}"
        );
    }

    #[test]
    fn random_arrivals_deterministic_and_distinct_streams() {
        let p = TrafficProfile {
            kind: TrafficKind::Random,
            interval_us: 1_000_000,
            phase_offset_us: 0,
        };
        let seed = RunSeed(7);
        let a = random_arrivals(&p, &mut seed.substream(StreamPurpose::Traffic, 3, 0), 60_000_000);
        let b = random_arrivals(&p, &mut seed.substream(StreamPurpose::Traffic, 3, 0), 60_000_000);
        let c = random_arrivals(&p, &mut seed.substream(StreamPurpose::Traffic, 4, 0), 60_000_000);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn arrivals_strictly_increasing() {
        let seed = RunSeed(99);
        let p = TrafficProfile {
            kind: TrafficKind::Random,
            interval_us: 1_000,
            phase_offset_us: 0,
        };
        let mut rng = seed.substream(StreamPurpose::Traffic, 0, 0);
        let arr = random_arrivals(&p, &mut rng, 2_000_000);
        assert!(arr.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn build_population_study_example() {
        // 9 nodes/slot at 2:1 with entry 3: per slot 6 fixed @ 1200 ms and
        // 3 random @ 3000 ms, 135 nodes total.
        let mix = PopulationMix::table(9, Ratio::new(2, 1).unwrap(), 3).unwrap();
        let pop = build_population(&mix, RunSeed(1), 0, 10_000_000).unwrap();
        assert_eq!(pop.nodes.len(), 135);
        for slot in 0..15u32 {
            let members: Vec<&NodeTraffic> =
                pop.nodes.iter().filter(|n| n.slot == slot).collect();
            assert_eq!(members.len(), 9);
            let fixed = members
                .iter()
                .filter(|n| n.profile.kind == TrafficKind::Fixed)
                .count();
            assert_eq!(fixed, 6);
            for m in &members {
                match m.profile.kind {
                    TrafficKind::Fixed => assert_eq!(m.profile.interval_us, 1_200_000),
                    TrafficKind::Random => assert_eq!(m.profile.interval_us, 3_000_000),
                }
            }
        }
    }

    #[test]
    fn build_population_inverse_ratio() {
        let mix = PopulationMix::table(9, Ratio::new(1, 2).unwrap(), 3).unwrap();
        let pop = build_population(&mix, RunSeed(1), 0, 1_000_000).unwrap();
        let fixed = pop
            .nodes
            .iter()
            .filter(|n| n.profile.kind == TrafficKind::Fixed)
            .count();
        assert_eq!(fixed, 45);
        assert_eq!(pop.nodes.len(), 135);
    }

    #[test]
    fn build_population_degenerate_all_fixed() {
        let mix = PopulationMix::table(1, Ratio::new(1, 0).unwrap(), 1).unwrap();
        let pop = build_population(&mix, RunSeed(1), 0, 1_000_000).unwrap();
        assert_eq!(pop.nodes.len(), 15);
        assert!(pop
            .nodes
            .iter()
            .all(|n| n.profile.kind == TrafficKind::Fixed));
    }

    #[test]
    fn ratio_must_divide() {
        let mix = PopulationMix::table(8, Ratio::new(2, 1).unwrap(), 1);
        assert!(matches!(mix, Err(TrafficError::RatioMismatch { .. })));
    }

    #[test]
    fn utilization_examples() {
        let mix = PopulationMix::table(9, Ratio::new(2, 1).unwrap(), 3).unwrap();
        // 90 fixed @ 1.2 s + 45 random @ 3 s = 90 pkt/s; x 4 ms = 0.36.
        assert!((channel_utilization(&mix) - 0.36).abs() < 1e-12);

        let single = PopulationMix {
            nodes_per_slot: 1,
            ratio: Ratio::new(1, 0).unwrap(),
            entry: 1,
            fixed_interval_override_us: None,
            random_interval_override_us: None,
        };
        // 15 nodes @ 400 ms = 37.5 pkt/s x 4 ms = 0.15; per single node 0.01.
        let per_node = 1.0 / 0.4 * 0.004;
        assert!((channel_utilization(&single) - 15.0 * per_node).abs() < 1e-12);

        // Utilization is linear in N at fixed entry and ratio.
        let n3 = PopulationMix::table(3, Ratio::new(2, 1).unwrap(), 2).unwrap();
        let n6 = PopulationMix::table(6, Ratio::new(2, 1).unwrap(), 2).unwrap();
        assert!((channel_utilization(&n6) - 2.0 * channel_utilization(&n3)).abs() < 1e-12);
    }

    #[test]
    fn study_mixes_all_under_capacity() {
        for entry in 1..=4u8 {
            let n = 3 * entry as u32;
            for ratio in [Ratio::new(2, 1).unwrap(), Ratio::new(1, 2).unwrap()] {
                let mix = PopulationMix::table(n, ratio, entry).unwrap();
                assert!(channel_utilization(&mix) < 1.0);
                assert!(per_slot_load(&mix, 120_000) < 1.0);
            }
        }
    }

    #[test]
    fn population_is_reproducible() {
        let mix = PopulationMix::table(3, Ratio::new(2, 1).unwrap(), 1).unwrap();
        let a = build_population(&mix, RunSeed(5), 2, 30_000_000).unwrap();
        let b = build_population(&mix, RunSeed(5), 2, 30_000_000).unwrap();
        assert_eq!(arrival_fingerprint(&a), arrival_fingerprint(&b));
        let c = build_population(&mix, RunSeed(6), 2, 30_000_000).unwrap();
        assert_ne!(arrival_fingerprint(&a), arrival_fingerprint(&c));
    }
}
