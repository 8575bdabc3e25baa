//! Run orchestration: single scenario runs, paired sweeps over the
//! comparison grid, and deterministic result merging.

use thiserror::Error;

use crate::kernel::RunSeed;
use crate::mac::bmac::BmacSim;
use crate::mac::ieee802154::CfpSim;
use crate::mac::proposed::{ProposedSim, SlotConfig};
use crate::mac::{MacError, MacOutcome, TraceSinks};
use crate::metrics::{summarize, MetricsError, PacketRecord, RunSummary, Scheme};
use crate::scenario::{ScenarioConfig, SweepSpec};
use crate::traffic::{self, build_population, Population, TrafficError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Mac(#[from] MacError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Everything one run produces.
pub struct RunOutput {
    pub summary: RunSummary,
    pub outcome: MacOutcome,
    /// Fingerprint of the traffic realization the run consumed.
    pub traffic_fingerprint: u64,
}

fn drive(
    scheme: Scheme,
    population: &Population,
    cfg: &ScenarioConfig,
    rep: u32,
    traces: TraceSinks<'_>,
) -> Result<MacOutcome, RunError> {
    let out = match scheme {
        Scheme::Proposed => ProposedSim::new(
            population,
            cfg.slot_config,
            cfg.horizon_us,
            cfg.drain_us,
            traces,
        )?
        .run()?,
        Scheme::Ieee802154Cfp => CfpSim::new(
            population,
            cfg.cfp,
            cfg.horizon_us,
            cfg.drain_us,
            traces,
        )
        .run()?,
        Scheme::Bmac => BmacSim::new(
            population,
            cfg.bmac,
            RunSeed(cfg.seed),
            rep,
            cfg.horizon_us,
            cfg.drain_us,
            traces,
        )?
        .run()?,
    };
    Ok(out)
}

/// Execute one validated scenario (repetition 0 of its seed).
pub fn run_scenario(cfg: &ScenarioConfig, traces: TraceSinks<'_>) -> Result<RunOutput, RunError> {
    let population = build_population(&cfg.mix, RunSeed(cfg.seed), 0, cfg.horizon_us)?;
    let outcome = drive(cfg.scheme, &population, cfg, 0, traces)?;
    let summary = summarize(
        &outcome.records,
        cfg.scheme,
        cfg.mix.nodes_per_slot,
        cfg.mix.ratio,
        cfg.mix.entry,
        outcome.pending_at_end,
        cfg.seed,
        cfg.horizon_us as f64 / 1e6,
    )?;
    Ok(RunOutput {
        summary,
        outcome,
        traffic_fingerprint: traffic::arrival_fingerprint(&population),
    })
}

/// One sweep cell, pooled over every repetition: records are concatenated
/// across reps before averaging, so the row reflects all delivered packets.
pub fn run_cell(
    spec: &SweepSpec,
    scheme: Scheme,
    nodes_per_slot: u32,
    axis_index: usize,
    ratio: crate::traffic::Ratio,
) -> Result<RunSummary, RunError> {
    let entry = SweepSpec::entry_for_index(axis_index);
    let mix = crate::traffic::PopulationMix::table(nodes_per_slot, ratio, entry)?;
    let cell_cfg = ScenarioConfig {
        scheme,
        mix,
        slot_config: SlotConfig::study_default(nodes_per_slot),
        cfp: spec.cfp,
        bmac: spec.bmac,
        seed: spec.master_seed,
        horizon_us: spec.horizon_us,
        drain_us: spec.drain_us,
        trace: false,
        queue_trace: false,
    };
    let mut pooled: Vec<PacketRecord> = Vec::new();
    let mut pending = 0u64;
    for rep in 0..spec.repetitions {
        let population = build_population(&mix, RunSeed(spec.master_seed), rep, spec.horizon_us)?;
        let outcome = drive(scheme, &population, &cell_cfg, rep, TraceSinks::default())?;
        pending += outcome.pending_at_end;
        pooled.extend(outcome.records);
    }
    Ok(summarize(
        &pooled,
        scheme,
        nodes_per_slot,
        ratio,
        entry,
        pending,
        spec.master_seed,
        spec.horizon_us as f64 / 1e6,
    )?)
}

/// Run the full grid. Cells execute independently; rows merge in the
/// canonical (scheme, nodes-per-slot, ratio) order of the spec lists, so
/// the output is deterministic.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<RunSummary>, RunError> {
    let mut rows = Vec::new();
    for &scheme in &spec.schemes {
        for (axis_index, &n) in spec.nodes_per_slot.iter().enumerate() {
            for &ratio in &spec.ratios {
                rows.push(run_cell(spec, scheme, n, axis_index, ratio)?);
            }
        }
    }
    Ok(rows)
}
