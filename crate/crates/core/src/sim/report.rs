use serde::Serialize;

use super::station::{DirectionCounts, RadioLedger};
use crate::scenario::PowerProfile;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationSummary {
    pub station_id: u32,
    pub page: u32,
    pub tim_group: u32,
    pub rate: f64,
    pub ledger: RadioLedger,
    pub mean_current: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub scenario: String,
    pub n_tim: u32,
    pub dtim_period: f64,
    pub seed: u64,
    pub periods: u64,
    /// Simulated seconds (whole DTIM periods).
    pub duration: f64,
    /// Ledger summed over all stations.
    pub ledger: RadioLedger,
    pub dl: DirectionCounts,
    pub ul: DirectionCounts,
    /// Per-station collision count (a two-way collision counts twice).
    pub station_collisions: u64,
    /// Channel collision events.
    pub collision_events: u64,
    pub errors: u64,
    pub multicast_packets: u64,
    /// mA, averaged over stations.
    pub mean_current: f64,
    /// Hours.
    pub battery_lifetime: f64,
    pub stations: Vec<StationSummary>,
}

impl SimReport {
    /// Share of station time in `rx, tx, id, sl` order.
    pub fn fractions(&self) -> [f64; 4] {
        let t = self.ledger.total();
        [self.ledger.rx / t, self.ledger.tx / t, self.ledger.id / t, self.ledger.sl / t]
    }

    pub fn sleep_fraction(&self) -> f64 {
        self.fractions()[3]
    }

    pub fn success_dl(&self) -> f64 {
        self.dl.success()
    }

    pub fn success_ul(&self) -> f64 {
        self.ul.success()
    }
}

pub(crate) fn ledger_current(l: &RadioLedger, power: &PowerProfile) -> f64 {
    (l.rx * power.i_rx + l.tx * power.i_tx + l.id * power.i_id + l.sl * power.i_sl) / l.total()
}
