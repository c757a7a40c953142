//! Discrete-event simulator of the DTIM/TIM/RAW cycle.
//!
//! Stations buffer their packets across periods, contend with slotted DCF
//! inside their group's RAW segments and keep a per-state time ledger.

mod engine;
pub mod event;
mod report;
pub mod station;
mod trace;

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

pub use report::{SimReport, StationSummary};
pub use station::{DirectionCounts, RadioLedger, RadioState};

use crate::analytic::EnergyReport;
use crate::error::{Error, Result};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ArrivalProcess {
    /// Exponential inter-arrival times with the scenario mean.
    #[default]
    Exponential,
    /// One packet every mean interval, from a random phase.
    Periodic,
}

#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    pub arrivals: ArrivalProcess,
    /// Backoff used for a station's first draw in each RAW segment.
    pub forced_backoff: Option<u32>,
    /// Uplink packets placed in every station's buffer at time zero.
    pub preload_ul: u32,
}

/// Whole DTIM periods covering `duration`.
pub fn periods_for(duration: f64, dtim_period: f64) -> Result<u64> {
    if !(duration.is_finite() && duration >= dtim_period) {
        return Err(Error::Domain(format!(
            "simulated duration {duration} s must cover at least one DTIM period ({dtim_period} s)"
        )));
    }
    Ok((duration / dtim_period - 1e-9).ceil() as u64)
}

pub fn run(scenario: &Scenario, duration: f64, seed: u64) -> Result<SimReport> {
    run_with(scenario, duration, seed, &SimOptions::default(), None)
}

/// Run with options and an optional event-trace sink.
pub fn run_with(
    scenario: &Scenario,
    duration: f64,
    seed: u64,
    opts: &SimOptions,
    trace: Option<Box<dyn Write + Send>>,
) -> Result<SimReport> {
    let periods = periods_for(duration, scenario.dtim_period)?;
    let trace = trace.map(trace::Trace::new).transpose()?;
    engine::Engine::new(scenario, periods, seed, opts, trace)?.run()
}

/// Mean radio-state fractions, current and lifetime of one or more runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub fractions: [f64; 4],
    pub mean_current: f64,
    pub battery_lifetime: f64,
    pub success_dl: f64,
    pub success_ul: f64,
}

impl SimReport {
    pub fn summary(&self) -> SimSummary {
        SimSummary {
            fractions: self.fractions(),
            mean_current: self.mean_current,
            battery_lifetime: self.battery_lifetime,
            success_dl: self.success_dl(),
            success_ul: self.success_ul(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replication {
    pub reports: Vec<SimReport>,
    /// Half-width of the 95% confidence interval on the mean current (mA).
    pub current_ci95: f64,
}

impl Replication {
    pub fn summary(&self) -> SimSummary {
        let n = self.reports.len() as f64;
        let mut fractions = [0.0; 4];
        let (mut current, mut s_dl, mut s_ul) = (0.0, 0.0, 0.0);
        for r in &self.reports {
            for (f, x) in fractions.iter_mut().zip(r.fractions()) {
                *f += x / n;
            }
            current += r.mean_current / n;
            s_dl += r.success_dl() / n;
            s_ul += r.success_ul() / n;
        }
        let capacity = self.reports[0].battery_lifetime * self.reports[0].mean_current;
        SimSummary {
            fractions,
            mean_current: current,
            battery_lifetime: capacity / current,
            success_dl: s_dl,
            success_ul: s_ul,
        }
    }
}

/// Independent runs over `seeds`, executed in parallel; results keep seed order.
pub fn replicate(scenario: &Scenario, duration: f64, seeds: &[u64]) -> Result<Replication> {
    if seeds.is_empty() {
        return Err(Error::Domain("replication needs at least one seed".into()));
    }
    let reports = seeds
        .par_iter()
        .map(|&seed| run(scenario, duration, seed))
        .collect::<Result<Vec<_>>>()?;
    let n = reports.len() as f64;
    let mean = reports.iter().map(|r| r.mean_current).sum::<f64>() / n;
    let current_ci95 = if reports.len() < 2 {
        f64::NAN
    } else {
        let var = reports.iter().map(|r| (r.mean_current - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let t = StudentsT::new(0.0, 1.0, n - 1.0)
            .map_err(|e| Error::Invariant(e.to_string()))?
            .inverse_cdf(0.975);
        t * (var / n).sqrt()
    };
    Ok(Replication { reports, current_ci95 })
}

/// Model-versus-simulation deltas (simulation minus model).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub model_fractions: [f64; 4],
    pub sim_fractions: [f64; 4],
    pub delta_fractions: [f64; 4],
    pub model_current: f64,
    pub sim_current: f64,
    pub delta_current: f64,
    pub model_lifetime: f64,
    pub sim_lifetime: f64,
    /// `(sim - model) / model`.
    pub lifetime_rel_delta: f64,
}

pub fn compare(analytic: &EnergyReport, sim: &SimSummary) -> ComparisonReport {
    let model_fractions = analytic.state_times.fractions();
    let mut delta = [0.0; 4];
    for (k, d) in delta.iter_mut().enumerate() {
        *d = sim.fractions[k] - model_fractions[k];
    }
    ComparisonReport {
        scenario: analytic.scenario.clone(),
        model_fractions,
        sim_fractions: sim.fractions,
        delta_fractions: delta,
        model_current: analytic.mean_current,
        sim_current: sim.mean_current,
        delta_current: sim.mean_current - analytic.mean_current,
        model_lifetime: analytic.battery_lifetime,
        sim_lifetime: sim.battery_lifetime,
        lifetime_rel_delta: (sim.battery_lifetime - analytic.battery_lifetime) / analytic.battery_lifetime,
    }
}

impl EnergyReport {
    /// The model's numbers in simulator-summary form.
    pub fn as_summary(&self) -> SimSummary {
        SimSummary {
            fractions: self.state_times.fractions(),
            mean_current: self.mean_current,
            battery_lifetime: self.battery_lifetime,
            success_dl: self.success_dl,
            success_ul: self.success_ul,
        }
    }
}
