//! Per-node energy accounting in exact integer nanojoules.
//!
//! With powers in milliwatts and durations in microseconds the product is
//! nanojoules with no rounding: 1 mW x 1 us = 1 nJ. Only two power states
//! exist, transmitting (35 mW) and idle listening (41 mW).

use super::{IDLE_POWER_MW, TX_POWER_MW};

/// Accumulated energy and state-time tallies per node.
pub struct EnergyLedger {
    tx_us: Vec<u64>,
    idle_us: Vec<u64>,
}

impl EnergyLedger {
    pub fn new(nodes: usize) -> Self {
        EnergyLedger {
            tx_us: vec![0; nodes],
            idle_us: vec![0; nodes],
        }
    }

    pub fn charge_tx(&mut self, node: u32, duration_us: u64) {
        self.tx_us[node as usize] += duration_us;
    }

    pub fn charge_idle(&mut self, node: u32, duration_us: u64) {
        self.idle_us[node as usize] += duration_us;
    }

    pub fn tx_us(&self, node: u32) -> u64 {
        self.tx_us[node as usize]
    }

    pub fn idle_us(&self, node: u32) -> u64 {
        self.idle_us[node as usize]
    }

    /// Total energy charged to `node` in nanojoules.
    pub fn total_nj(&self, node: u32) -> u64 {
        TX_POWER_MW * self.tx_us[node as usize] + IDLE_POWER_MW * self.idle_us[node as usize]
    }

    pub fn grand_total_nj(&self) -> u64 {
        (0..self.tx_us.len() as u32).map(|n| self.total_nj(n)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_is_power_times_time_exactly() {
        let mut ledger = EnergyLedger::new(3);
        ledger.charge_tx(1, 4_000);
        ledger.charge_idle(1, 6_000);
        ledger.charge_idle(2, 250);
        assert_eq!(ledger.total_nj(0), 0);
        // 35 * 4000 + 41 * 6000 = 386_000 nJ = 386 uJ.
        assert_eq!(ledger.total_nj(1), 386_000);
        assert_eq!(ledger.total_nj(2), 41 * 250);
        assert_eq!(ledger.grand_total_nj(), 386_000 + 41 * 250);
    }
}
