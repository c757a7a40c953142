//! CSV tables and plot data, each headed by a run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analytic::EnergyReport;
use crate::error::{Error, Result};
use crate::optimize::{OptimizationComparison, SweepResult};
use crate::sim::{ComparisonReport, SimReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance written as `# key: value` lines at the top of every output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub command: String,
    pub scenario: String,
    pub overrides: Vec<(String, String)>,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, scenario: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            scenario: scenario.to_string(),
            ..Default::default()
        }
    }

    pub fn with_override(mut self, key: &str, value: impl ToString) -> Self {
        self.overrides.push((key.to_string(), value.to_string()));
        self
    }

    pub fn write_header<W: Write>(&self, w: &mut W) -> Result<()> {
        let overrides = if self.overrides.is_empty() {
            "none".to_string()
        } else {
            self.overrides
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let seed = self.seed.map_or("none".to_string(), |s| s.to_string());
        let outputs = if self.outputs.is_empty() {
            "stdout".to_string()
        } else {
            self.outputs.join(" ")
        };
        write!(
            w,
            "# command: {}\n# scenario: {}\n# overrides: {overrides}\n# seed: {seed}\n# version: {VERSION}\n# outputs: {outputs}\n",
            self.command, self.scenario
        )
        .map_err(io_err)
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Output(e.to_string())
}

/// Row shared by model and simulator results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub scenario: String,
    pub source: String,
    pub n_tim: u32,
    #[serde(rename = "T")]
    pub t: f64,
    pub frac_rx: f64,
    pub frac_tx: f64,
    pub frac_id: f64,
    pub frac_sl: f64,
    pub mean_current_ma: f64,
    pub success_dl: f64,
    pub success_ul: f64,
    pub battery_lifetime_h: f64,
}

impl ResultRow {
    pub fn from_model(r: &EnergyReport) -> Self {
        let f = r.state_times.fractions();
        ResultRow {
            scenario: r.scenario.clone(),
            source: "model".into(),
            n_tim: r.n_tim,
            t: r.dtim_period,
            frac_rx: f[0],
            frac_tx: f[1],
            frac_id: f[2],
            frac_sl: f[3],
            mean_current_ma: r.mean_current,
            success_dl: r.success_dl,
            success_ul: r.success_ul,
            battery_lifetime_h: r.battery_lifetime,
        }
    }

    pub fn from_sim(r: &SimReport) -> Self {
        let f = r.fractions();
        ResultRow {
            scenario: r.scenario.clone(),
            source: "sim".into(),
            n_tim: r.n_tim,
            t: r.dtim_period,
            frac_rx: f[0],
            frac_tx: f[1],
            frac_id: f[2],
            frac_sl: f[3],
            mean_current_ma: r.mean_current,
            success_dl: r.success_dl(),
            success_ul: r.success_ul(),
            battery_lifetime_h: r.battery_lifetime,
        }
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(true).from_writer(w)
}

fn write_serialized<W: Write, T: Serialize>(manifest: &RunManifest, rows: &[T], mut w: W) -> Result<()> {
    manifest.write_header(&mut w)?;
    let mut c = csv_writer(w);
    for r in rows {
        c.serialize(r)?;
    }
    c.flush().map_err(io_err)
}

pub fn write_results_csv<W: Write>(manifest: &RunManifest, rows: &[ResultRow], w: W) -> Result<()> {
    write_serialized(manifest, rows, w)
}

#[derive(Serialize)]
struct StationRow {
    station_id: u32,
    page: u32,
    tim_group: u32,
    rate: f64,
    t_rx: f64,
    t_tx: f64,
    t_id: f64,
    t_sl: f64,
    mean_current_ma: f64,
}

/// Per-station ledger of a simulator run.
pub fn write_stations_csv<W: Write>(manifest: &RunManifest, r: &SimReport, w: W) -> Result<()> {
    let rows: Vec<_> = r
        .stations
        .iter()
        .map(|s| StationRow {
            station_id: s.station_id,
            page: s.page,
            tim_group: s.tim_group,
            rate: s.rate,
            t_rx: s.ledger.rx,
            t_tx: s.ledger.tx,
            t_id: s.ledger.id,
            t_sl: s.ledger.sl,
            mean_current_ma: s.mean_current,
        })
        .collect();
    write_serialized(manifest, &rows, w)
}

#[derive(Serialize)]
struct PacketRow {
    direction: &'static str,
    generated: u64,
    delivered: u64,
    dropped_collision: u64,
    dropped_error: u64,
    buffered: u64,
}

/// Packet counters of a simulator run, one row per direction.
pub fn write_packets_csv<W: Write>(manifest: &RunManifest, r: &SimReport, w: W) -> Result<()> {
    let rows: Vec<_> = [("dl", r.dl), ("ul", r.ul)]
        .into_iter()
        .map(|(d, c)| PacketRow {
            direction: d,
            generated: c.generated,
            delivered: c.delivered,
            dropped_collision: c.dropped_collision,
            dropped_error: c.dropped_error,
            buffered: c.buffered,
        })
        .collect();
    write_serialized(manifest, &rows, w)
}

#[derive(Serialize)]
struct ComparisonRow {
    quantity: &'static str,
    model: f64,
    sim: f64,
    delta: f64,
}

/// Side-by-side model and simulator values; `delta` is sim minus model.
pub fn write_comparison_csv<W: Write>(manifest: &RunManifest, c: &ComparisonReport, w: W) -> Result<()> {
    let names = ["frac_rx", "frac_tx", "frac_id", "frac_sl"];
    let mut rows: Vec<_> = names
        .iter()
        .enumerate()
        .map(|(k, &quantity)| ComparisonRow {
            quantity,
            model: c.model_fractions[k],
            sim: c.sim_fractions[k],
            delta: c.delta_fractions[k],
        })
        .collect();
    rows.push(ComparisonRow {
        quantity: "mean_current_ma",
        model: c.model_current,
        sim: c.sim_current,
        delta: c.delta_current,
    });
    rows.push(ComparisonRow {
        quantity: "battery_lifetime_h",
        model: c.model_lifetime,
        sim: c.sim_lifetime,
        delta: c.sim_lifetime - c.model_lifetime,
    });
    write_serialized(manifest, &rows, w)
}

#[derive(Serialize)]
struct SweepRow<'a> {
    flag: &'static str,
    axis: String,
    value: f64,
    mean_current_ma: f64,
    success_dl: f64,
    success_ul: f64,
    contention_success_dl: f64,
    contention_success_ul: f64,
    battery_lifetime_h: f64,
    sleep_fraction: f64,
    scenario: &'a str,
}

/// One row per grid point and a final `summary` row repeating the chosen point.
pub fn write_sweep_csv<W: Write>(manifest: &RunManifest, s: &SweepResult, w: W) -> Result<()> {
    let row = |flag, p: &crate::optimize::SweepPoint| SweepRow {
        flag,
        axis: s.axis.to_string(),
        value: p.value,
        mean_current_ma: p.mean_current,
        success_dl: p.success_dl,
        success_ul: p.success_ul,
        contention_success_dl: p.contention_success_dl,
        contention_success_ul: p.contention_success_ul,
        battery_lifetime_h: p.battery_lifetime,
        sleep_fraction: p.sleep_fraction,
        scenario: &s.scenario,
    };
    let mut rows: Vec<_> = s.points.iter().map(|p| row("point", p)).collect();
    rows.push(row("summary", s.chosen_point()));
    write_serialized(manifest, &rows, w)
}

/// Two-column whitespace-separated curve for plotting tools.
pub fn write_curve<W: Write>(manifest: &RunManifest, x: &str, y: &str, points: &[(f64, f64)], mut w: W) -> Result<()> {
    manifest.write_header(&mut w)?;
    writeln!(w, "# {x} {y}").map_err(io_err)?;
    for (a, b) in points {
        writeln!(w, "{a} {b}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Curves of a sweep: mean current, and the constraint success, against the axis.
pub fn sweep_curves(s: &SweepResult) -> Vec<(String, String, Vec<(f64, f64)>)> {
    let axis = s.axis.to_string();
    vec![
        (
            axis.clone(),
            "mean_current_ma".to_string(),
            s.points.iter().map(|p| (p.value, p.mean_current)).collect(),
        ),
        (
            axis.clone(),
            "success_dl".to_string(),
            s.points.iter().map(|p| (p.value, p.success_dl)).collect(),
        ),
        (
            axis,
            "success_ul".to_string(),
            s.points.iter().map(|p| (p.value, p.success_ul)).collect(),
        ),
    ]
}

pub fn write_optimization_csv<W: Write>(manifest: &RunManifest, c: &OptimizationComparison, w: W) -> Result<()> {
    let mut d = ResultRow::from_model(&c.default);
    d.source = "default".into();
    let mut o = ResultRow::from_model(&c.optimized);
    o.source = "optimized".into();
    write_results_csv(manifest, &[d, o], w)
}

/// Create `dir/name` (and `dir`), buffered.
pub fn create_output(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path: PathBuf = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io { path, source })
}
