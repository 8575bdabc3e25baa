//! Deterministic discrete-event simulator and protocol library for clustered
//! acoustic sensor networks.
//!
//! What lives here:
//!
//! - [`sensing`] - energy-detection math: Marcum-Q / incomplete-gamma based
//!   per-node detection and false-alarm probabilities, OR-rule fusion, and
//!   minimum cluster sizing (closed form plus an independent search).
//! - [`cluster`] - the registration/join handshake, bit-exact RGT and J_REQ
//!   codecs, nearest-head assignment, and the cluster plan file.
//! - [`kernel`] - integer-microsecond event kernel, the shared half-duplex
//!   channel with collision detection, per-node energy ledgers, and seeded
//!   substreams.
//! - [`traffic`] - periodic and Poisson packet generation, population mixes,
//!   and channel-utilization checks.
//! - [`mac`] - the slotted carrier-sense scheme with autonomous virtual-queue
//!   rotation, plus the IEEE 802.15.4 contention-free and BMAC
//!   preamble-sampling baselines.
//! - [`metrics`] - per-packet delay/energy records and CSV/plot outputs.
//! - [`scenario`] / [`runner`] - config files, validation, single runs, and
//!   the comparison sweep.
//!
//! Every run is deterministic: identical scenario plus seed reproduces
//! byte-identical outputs.

pub mod cluster;
pub mod kernel;
pub mod mac;
pub mod metrics;
pub mod runner;
pub mod scenario;
pub mod sensing;
pub mod traffic;

pub use kernel::{RunSeed, SimTime};
pub use metrics::{RunSummary, Scheme};
pub use runner::{run_scenario, sweep, RunError, RunOutput};
pub use scenario::{load_scenario, load_sweep, ConfigError, ScenarioConfig, SweepSpec};
