//! Per-packet delay/energy capture and the aggregated comparison outputs.
//!
//! Both metrics cover the same window: from packet generation to the end of
//! its successful transmission. Energy is the sender's only: transmit power
//! over every transmission attempt (collided attempts included: that energy
//! was really spent) and idle/listen power over the rest of the window.

use std::io::Write;

use thiserror::Error;

use crate::kernel::{IDLE_POWER_MW, TX_POWER_MW};
use crate::traffic::Ratio;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("packet record is incomplete or inconsistent: {0}")]
    BadRecord(String),
    #[error("cannot summarize an empty record set")]
    NoRecords,
    #[error("output error: {0}")]
    Io(String),
}

/// Scheme selector shared by records, summaries, and configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Proposed,
    Ieee802154Cfp,
    Bmac,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Ieee802154Cfp => "ieee802154-cfp",
            Scheme::Bmac => "bmac",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One delivered packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketRecord {
    pub packet_id: u64,
    pub node_id: u32,
    pub scheme: Scheme,
    pub gen_us: u64,
    /// Start of the successful transmission attempt.
    pub tx_start_us: u64,
    pub tx_end_us: u64,
    /// Attempts that ended in a collision before the successful one.
    pub collided_attempts: u32,
    /// Airtime of a single attempt (data only for the slotted schemes,
    /// preamble plus data for BMAC).
    pub attempt_tx_us: u64,
}

impl PacketRecord {
    fn validate(&self) -> Result<(), MetricsError> {
        if !(self.gen_us <= self.tx_start_us && self.tx_start_us < self.tx_end_us) {
            return Err(MetricsError::BadRecord(format!(
                "gen {} tx_start {} tx_end {}",
                self.gen_us, self.tx_start_us, self.tx_end_us
            )));
        }
        if self.tx_end_us - self.tx_start_us != self.attempt_tx_us {
            return Err(MetricsError::BadRecord(
                "successful attempt duration mismatch".into(),
            ));
        }
        Ok(())
    }

    /// Total airtime across all attempts, us.
    pub fn total_tx_us(&self) -> u64 {
        (self.collided_attempts as u64 + 1) * self.attempt_tx_us
    }
}

/// Delay from generation to end of transmission, us.
pub fn packet_delay_us(r: &PacketRecord) -> Result<u64, MetricsError> {
    r.validate()?;
    Ok(r.tx_end_us - r.gen_us)
}

/// Sender energy over the delay window in exact nanojoules:
/// 35 mW across every transmission attempt, 41 mW across the remainder.
pub fn packet_energy_nj(r: &PacketRecord) -> Result<u64, MetricsError> {
    let delay = packet_delay_us(r)?;
    let tx = r.total_tx_us();
    if tx > delay {
        return Err(MetricsError::BadRecord(
            "transmit time exceeds the delay window".into(),
        ));
    }
    Ok(TX_POWER_MW * tx + IDLE_POWER_MW * (delay - tx))
}

/// Aggregates for one (scheme, population) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub scheme: Scheme,
    pub total_nodes: u32,
    pub nodes_per_slot: u32,
    pub ratio: Ratio,
    pub entry: u8,
    pub avg_delay_ms: f64,
    pub avg_energy_uj: f64,
    /// Delivered packets the averages cover.
    pub packets: u64,
    /// Packets generated within the horizon but never delivered by the end
    /// of the drain margin.
    pub pending_at_end: u64,
    pub seed: u64,
    pub horizon_s: f64,
}

/// Fold delivered-packet records into a [`RunSummary`]. Averages cover
/// delivered packets only.
pub fn summarize(
    records: &[PacketRecord],
    scheme: Scheme,
    nodes_per_slot: u32,
    ratio: Ratio,
    entry: u8,
    pending_at_end: u64,
    seed: u64,
    horizon_s: f64,
) -> Result<RunSummary, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::NoRecords);
    }
    let mut delay_sum_us: u128 = 0;
    let mut energy_sum_nj: u128 = 0;
    for r in records {
        delay_sum_us += packet_delay_us(r)? as u128;
        energy_sum_nj += packet_energy_nj(r)? as u128;
    }
    let n = records.len() as f64;
    Ok(RunSummary {
        scheme,
        total_nodes: nodes_per_slot * crate::traffic::SLOTS_PER_SUPERFRAME,
        nodes_per_slot,
        ratio,
        entry,
        avg_delay_ms: delay_sum_us as f64 / n / 1_000.0,
        avg_energy_uj: energy_sum_nj as f64 / n / 1_000.0,
        packets: records.len() as u64,
        pending_at_end,
        seed,
        horizon_s,
    })
}

/// Delay percentiles over delivered packets (nearest-rank), milliseconds.
/// Off the default reporting path; exposed behind a CLI flag.
pub fn delay_percentiles_ms(
    records: &[PacketRecord],
    percentiles: &[f64],
) -> Result<Vec<f64>, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::NoRecords);
    }
    let mut delays: Vec<u64> = records
        .iter()
        .map(packet_delay_us)
        .collect::<Result<_, _>>()?;
    delays.sort_unstable();
    Ok(percentiles
        .iter()
        .map(|&p| {
            let rank = ((p / 100.0) * delays.len() as f64).ceil().max(1.0) as usize;
            delays[rank.min(delays.len()) - 1] as f64 / 1_000.0
        })
        .collect())
}

/// Exact CSV header of the sweep output.
pub const CSV_HEADER: &str =
    "scheme,total_nodes,nodes_per_slot,ratio,entry,avg_delay_ms,avg_energy_uJ,packets,seed,horizon_s";

/// Write summaries as CSV with the fixed header. Float fields use six
/// decimals so identical runs emit identical bytes.
pub fn emit_csv<W: Write>(summaries: &[RunSummary], out: &mut W) -> Result<(), MetricsError> {
    if summaries.is_empty() {
        return Err(MetricsError::NoRecords);
    }
    let io = |e: std::io::Error| MetricsError::Io(e.to_string());
    writeln!(out, "{CSV_HEADER}").map_err(io)?;
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6},{},{},{}",
            s.scheme,
            s.total_nodes,
            s.nodes_per_slot,
            s.ratio,
            s.entry,
            s.avg_delay_ms,
            s.avg_energy_uj,
            s.packets,
            s.seed,
            s.horizon_s
        )
        .map_err(io)?;
    }
    Ok(())
}

/// Write plot-ready text: one whitespace-separated block per scheme
/// (columns: total_nodes, avg_delay_ms, avg_energy_uJ), blocks separated by
/// blank lines, suitable for generic plotting tools.
pub fn emit_plot_data<W: Write>(summaries: &[RunSummary], out: &mut W) -> Result<(), MetricsError> {
    if summaries.is_empty() {
        return Err(MetricsError::NoRecords);
    }
    let io = |e: std::io::Error| MetricsError::Io(e.to_string());
    let mut schemes: Vec<Scheme> = Vec::new();
    for s in summaries {
        if !schemes.contains(&s.scheme) {
            schemes.push(s.scheme);
        }
    }
    for (i, scheme) in schemes.iter().enumerate() {
        if i > 0 {
            writeln!(out).map_err(io)?;
        }
        writeln!(out, "# scheme: {scheme}").map_err(io)?;
        writeln!(out, "# total_nodes avg_delay_ms avg_energy_uJ").map_err(io)?;
        for s in summaries.iter().filter(|s| s.scheme == *scheme) {
            writeln!(
                out,
                "{} {:.6} {:.6}",
                s.total_nodes, s.avg_delay_ms, s.avg_energy_uj
            )
            .map_err(io)?;
        }
    }
    Ok(())
}
