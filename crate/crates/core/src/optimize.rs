//! Sweeps over N_TIM and the DTIM period.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{evaluate, EnergyReport};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::sim;

pub const DEFAULT_NTIM_CANDIDATES: [u32; 6] = [1, 2, 4, 8, 16, 32];
pub const DEFAULT_THRESHOLD: f64 = 0.999;
pub const DEFAULT_T_STEP: f64 = 0.1;
pub const DEFAULT_N_TIM: u32 = 8;
pub const DEFAULT_DTIM_PERIOD: f64 = 1.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    NTim,
    DtimPeriod,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::NTim => "n_tim",
            Axis::DtimPeriod => "dtim_period",
        })
    }
}

/// Which evaluator produces the sweep points.
#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Model,
    /// Mean of simulator runs over `seeds`, each `periods` DTIM periods long.
    Sim { periods: u64, seeds: Vec<u64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub mean_current: f64,
    pub success_dl: f64,
    pub success_ul: f64,
    /// Success relative to the DATA-error ceiling; the sweep constraint.
    pub contention_success_dl: f64,
    pub contention_success_ul: f64,
    pub battery_lifetime: f64,
    pub sleep_fraction: f64,
}

impl SweepPoint {
    pub fn min_contention_success(&self) -> f64 {
        self.contention_success_dl.min(self.contention_success_ul)
    }

    fn from_report(value: f64, r: &EnergyReport) -> Self {
        SweepPoint {
            value,
            mean_current: r.mean_current,
            success_dl: r.success_dl,
            success_ul: r.success_ul,
            contention_success_dl: r.contention_success_dl,
            contention_success_ul: r.contention_success_ul,
            battery_lifetime: r.battery_lifetime,
            sleep_fraction: r.sleep_fraction(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub scenario: String,
    pub axis: Axis,
    pub points: Vec<SweepPoint>,
    pub chosen: f64,
    pub constraint_threshold: f64,
    /// Grid values the configuration could not run at, with the reason.
    pub skipped: Vec<(f64, String)>,
}

impl SweepResult {
    pub fn chosen_point(&self) -> &SweepPoint {
        self.points
            .iter()
            .find(|p| p.value == self.chosen)
            .expect("chosen value is a sweep point")
    }
}

/// `0.1, 0.2, ...` up to the shorter mean packet interval, where the
/// per-period packet probability reaches one.
pub fn default_t_grid(scenario: &Scenario) -> Vec<f64> {
    let top = scenario.mean_dl_interval.min(scenario.mean_ul_interval);
    let top = if top.is_finite() { top } else { 120.0 };
    t_grid(DEFAULT_T_STEP, top, DEFAULT_T_STEP)
}

/// Inclusive grid `start, start + step, ...` with values rounded to the step's decimals.
pub fn t_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor();
    if !(n >= 0.0) || step <= 0.0 {
        return Vec::new();
    }
    (0..=n as u64)
        .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

fn evaluate_point(scenario: &Scenario, value: f64, backend: &Backend) -> Result<SweepPoint> {
    match backend {
        Backend::Model => Ok(SweepPoint::from_report(value, &evaluate(scenario)?)),
        Backend::Sim { periods, seeds } => {
            let rep = sim::replicate(scenario, *periods as f64 * scenario.dtim_period, seeds)?;
            let s = rep.summary();
            let m = &scenario.mac;
            let ceil_dl = 1.0 - m.p_e_dl.powi(m.m_err as i32);
            let ceil_ul = 1.0 - m.p_e_ul.powi(m.m_err as i32);
            Ok(SweepPoint {
                value,
                mean_current: s.mean_current,
                success_dl: s.success_dl,
                success_ul: s.success_ul,
                contention_success_dl: s.success_dl / ceil_dl,
                contention_success_ul: s.success_ul / ceil_ul,
                battery_lifetime: s.battery_lifetime,
                sleep_fraction: s.fractions[3],
            })
        }
    }
}

fn run_grid(
    scenario: &Scenario,
    values: &[f64],
    configure: impl Fn(f64) -> Scenario + Sync,
    backend: &Backend,
) -> Result<(Vec<SweepPoint>, Vec<(f64, String)>)> {
    let results: Vec<_> = values
        .par_iter()
        .map(|&v| evaluate_point(&configure(v), v, backend))
        .collect();
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (&v, r) in values.iter().zip(results) {
        match r {
            Ok(p) => points.push(p),
            Err(e @ Error::Infeasible(_)) => skipped.push((v, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    if points.is_empty() {
        return Err(Error::Infeasible(format!(
            "no feasible configuration of `{}` on the sweep grid",
            scenario.name
        )));
    }
    Ok((points, skipped))
}

/// N_TIM with the lowest mean current at the scenario's DTIM period; ties go
/// to the smaller value.
pub fn sweep_ntim(scenario: &Scenario, candidates: &[u32]) -> Result<SweepResult> {
    sweep_ntim_with(scenario, candidates, &Backend::Model)
}

pub fn sweep_ntim_with(scenario: &Scenario, candidates: &[u32], backend: &Backend) -> Result<SweepResult> {
    if candidates.is_empty() {
        return Err(Error::Domain("empty N_TIM candidate list".into()));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted[0] == 0 {
        return Err(Error::Domain("N_TIM candidates must be >= 1".into()));
    }
    let values: Vec<f64> = sorted.iter().map(|&n| n as f64).collect();
    let t = scenario.dtim_period;
    let (points, skipped) = run_grid(scenario, &values, |v| scenario.with_config(v as u32, t), backend)?;
    let chosen = points
        .iter()
        .fold(None::<&SweepPoint>, |best, p| match best {
            Some(b) if b.mean_current <= p.mean_current => Some(b),
            _ => Some(p),
        })
        .map(|p| p.value)
        .expect("non-empty");
    Ok(SweepResult {
        scenario: scenario.name.clone(),
        axis: Axis::NTim,
        points,
        chosen,
        constraint_threshold: 0.0,
        skipped,
    })
}

/// Largest DTIM period on `grid` whose delivery success (both directions,
/// relative to the DATA-error ceiling) stays at or above `threshold`.
pub fn sweep_t(scenario: &Scenario, grid: &[f64], threshold: f64) -> Result<SweepResult> {
    sweep_t_with(scenario, grid, threshold, &Backend::Model)
}

pub fn sweep_t_with(scenario: &Scenario, grid: &[f64], threshold: f64, backend: &Backend) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::Domain("empty DTIM period grid".into()));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Domain(format!("success threshold {threshold} outside [0, 1]")));
    }
    if let Some(bad) = grid.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::Domain(format!("DTIM period {bad} must be positive")));
    }
    let mut values = grid.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let n_tim = scenario.n_tim;
    let (points, skipped) = run_grid(scenario, &values, |t| scenario.with_config(n_tim, t), backend)?;
    let chosen = points
        .iter()
        .rev()
        .find(|p| p.min_contention_success() >= threshold)
        .map(|p| p.value)
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "no DTIM period on the grid keeps `{}` above success {threshold}",
                scenario.name
            ))
        })?;
    Ok(SweepResult {
        scenario: scenario.name.clone(),
        axis: Axis::DtimPeriod,
        points,
        chosen,
        constraint_threshold: threshold,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationComparison {
    pub scenario: String,
    pub default_n_tim: u32,
    pub default_t: f64,
    pub optimized_n_tim: u32,
    pub optimized_t: f64,
    pub default: EnergyReport,
    pub optimized: EnergyReport,
    /// optimized / default.
    pub current_ratio: f64,
    pub lifetime_ratio: f64,
}

/// Default settings (N_TIM = 8, T = 1.6 s) against the N_TIM sweep optimum
/// followed by the DTIM period sweep at that N_TIM.
pub fn compare_default_vs_optimized(scenario: &Scenario) -> Result<OptimizationComparison> {
    let base = scenario.with_config(DEFAULT_N_TIM, DEFAULT_DTIM_PERIOD);
    let n_tim = sweep_ntim(&base, &DEFAULT_NTIM_CANDIDATES)?.chosen as u32;
    let at_n = base.with_config(n_tim, DEFAULT_DTIM_PERIOD);
    let t = sweep_t(&at_n, &default_t_grid(&at_n), DEFAULT_THRESHOLD)?.chosen;
    compare_configs(&base, n_tim, t)
}

/// Default settings against an explicit `(n_tim, t)`.
pub fn compare_configs(scenario: &Scenario, n_tim: u32, t: f64) -> Result<OptimizationComparison> {
    let base = scenario.with_config(DEFAULT_N_TIM, DEFAULT_DTIM_PERIOD);
    let default = evaluate(&base)?;
    let optimized = evaluate(&base.with_config(n_tim, t))?;
    Ok(OptimizationComparison {
        scenario: scenario.name.clone(),
        default_n_tim: DEFAULT_N_TIM,
        default_t: DEFAULT_DTIM_PERIOD,
        optimized_n_tim: n_tim,
        optimized_t: t,
        current_ratio: optimized.mean_current / default.mean_current,
        lifetime_ratio: optimized.battery_lifetime / default.battery_lifetime,
        default,
        optimized,
    })
}
