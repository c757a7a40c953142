//! Command-line front end behind the `ah-energy` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytic::evaluate;
use crate::error::{Error, Result};
use crate::optimize::{self, Backend};
use crate::report::{self, ResultRow, RunManifest};
use crate::scenario::{builtin_scenarios, load_pattern_scenarios, load_scenario, resolve, Scenario};
use crate::sim;

#[derive(Debug, Parser)]
#[command(name = "ah-energy", version, about = "Energy model and simulator for 802.11ah TIM stations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the analytic model
    Model(ScenarioArgs),
    /// Run the discrete-event simulator
    Simulate(SimArgs),
    /// Model against simulator, side by side
    Compare(CompareArgs),
    /// Sweep N_TIM or the DTIM period
    Optimize(OptimizeArgs),
    /// List the built-in scenarios
    Scenarios,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Built-in scenario name, or a file stem in $AH_ENERGY_SCENARIO_DIR
    #[arg(long, conflicts_with = "config")]
    pub scenario: Option<String>,
    /// Scenario TOML file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// TIM groups per DTIM period
    #[arg(long)]
    pub ntim: Option<u32>,
    /// DTIM period in seconds
    #[arg(long)]
    pub t: Option<f64>,
    /// Directory for CSV outputs; CSV goes to stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Simulated seconds (rounded up to whole DTIM periods); default 2000 periods
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the event log to trace.csv in the output directory
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub duration: Option<f64>,
    /// First seed; replications use consecutive seeds
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 10)]
    pub replications: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Ntim,
    T,
    /// Default settings against the sequential N_TIM then T optimum
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Model,
    Sim,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "ntim")]
    pub axis: AxisArg,
    /// Comma list (`1,2,4,8`) or, for T, a range `start:stop:step`
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = optimize::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value = "model")]
    pub backend: BackendArg,
    /// Simulator periods per point with the sim backend
    #[arg(long, default_value_t = 500)]
    pub periods: u64,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parse arguments and run; returns the process exit status.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return e.exit_code();
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Model(a) => cmd_model(a, stdout, stderr),
        Command::Simulate(a) => cmd_simulate(a, stdout, stderr),
        Command::Compare(a) => cmd_compare(a, stdout, stderr),
        Command::Optimize(a) => cmd_optimize(a, stdout, stderr),
        Command::Scenarios => cmd_scenarios(stdout),
    }
}

fn out_err(e: std::io::Error) -> Error {
    Error::Output(e.to_string())
}

impl ScenarioArgs {
    pub fn load(&self) -> Result<Scenario> {
        let base = match (&self.scenario, &self.config) {
            (_, Some(path)) => load_scenario(path)?,
            (Some(name), None) => resolve(name)?,
            (None, None) => return Err(Error::Domain("one of --scenario or --config is required".into())),
        };
        let s = base.with_config(
            self.ntim.unwrap_or(base.n_tim),
            self.t.unwrap_or(base.dtim_period),
        );
        s.validate()?;
        Ok(s)
    }

    fn manifest(&self, command: &str, s: &Scenario) -> RunManifest {
        let mut m = RunManifest::new(command, &s.name);
        if let Some(p) = &self.config {
            m = m.with_override("config", p.display());
        }
        if let Some(n) = self.ntim {
            m = m.with_override("ntim", n);
        }
        if let Some(t) = self.t {
            m = m.with_override("t", t);
        }
        m
    }
}

/// Write through `write` either into `out/name` or to stdout.
fn emit(
    out: Option<&Path>,
    name: &str,
    manifest: &mut RunManifest,
    stdout: &mut dyn Write,
    write: impl FnOnce(&RunManifest, &mut dyn Write) -> Result<()>,
) -> Result<()> {
    match out {
        Some(dir) => {
            manifest.outputs = vec![dir.join(name).display().to_string()];
            let mut f = report::create_output(dir, name)?;
            write(manifest, &mut f)?;
            f.flush().map_err(out_err)
        }
        None => {
            manifest.outputs.clear();
            write(manifest, stdout)
        }
    }
}

fn summary_line(stderr: &mut dyn Write, row: &ResultRow) -> Result<()> {
    writeln!(
        stderr,
        "{} [{}] N_TIM={} T={} s: rx {:.4}% tx {:.4}% idle {:.4}% sleep {:.4}%, {:.5} mA, success dl {:.4} ul {:.4}, lifetime {:.1} h",
        row.scenario,
        row.source,
        row.n_tim,
        row.t,
        100.0 * row.frac_rx,
        100.0 * row.frac_tx,
        100.0 * row.frac_id,
        100.0 * row.frac_sl,
        row.mean_current_ma,
        row.success_dl,
        row.success_ul,
        row.battery_lifetime_h
    )
    .map_err(out_err)
}

fn cmd_model(a: &ScenarioArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let s = a.load()?;
    let r = evaluate(&s)?;
    let row = ResultRow::from_model(&r);
    summary_line(stderr, &row)?;
    let mut m = a.manifest("model", &s);
    emit(a.out.as_deref(), "model.csv", &mut m, stdout, |m, w| {
        report::write_results_csv(m, std::slice::from_ref(&row), w)
    })
}

fn default_duration(s: &Scenario) -> f64 {
    2000.0 * s.dtim_period
}

fn cmd_simulate(a: &SimArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let s = a.scenario.load()?;
    let seed = a.seed.unwrap_or(s.seed);
    let duration = a.duration.unwrap_or_else(|| default_duration(&s));
    let trace: Option<Box<dyn Write + Send>> = if a.trace {
        let dir = a.scenario.out.clone().unwrap_or_else(|| PathBuf::from("."));
        Some(Box::new(report::create_output(&dir, "trace.csv")?))
    } else {
        None
    };
    let r = sim::run_with(&s, duration, seed, &sim::SimOptions::default(), trace)?;
    let row = ResultRow::from_sim(&r);
    summary_line(stderr, &row)?;
    writeln!(
        stderr,
        "packets dl {}/{} ul {}/{} delivered/generated, {} collision events",
        r.dl.delivered, r.dl.generated, r.ul.delivered, r.ul.generated, r.collision_events
    )
    .map_err(out_err)?;
    let mut m = a.scenario.manifest("simulate", &s).with_override("duration", r.duration);
    m.seed = Some(seed);
    let out = a.scenario.out.as_deref();
    emit(out, "simulate.csv", &mut m, stdout, |m, w| report::write_results_csv(m, &[row], w))?;
    if let Some(dir) = out {
        let mut m2 = m.clone();
        emit(Some(dir), "stations.csv", &mut m2, stdout, |m, w| report::write_stations_csv(m, &r, w))?;
        emit(Some(dir), "packets.csv", &mut m2, stdout, |m, w| report::write_packets_csv(m, &r, w))?;
    }
    Ok(())
}

fn cmd_compare(a: &CompareArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let s = a.scenario.load()?;
    if a.replications == 0 {
        return Err(Error::Domain("--replications must be >= 1".into()));
    }
    let seed = a.seed.unwrap_or(s.seed);
    let duration = a.duration.unwrap_or_else(|| default_duration(&s));
    let seeds: Vec<u64> = (0..a.replications as u64).map(|k| seed + k).collect();
    let model = evaluate(&s)?;
    let rep = sim::replicate(&s, duration, &seeds)?;
    let c = sim::compare(&model, &rep.summary());
    writeln!(
        stderr,
        "{}: model {:.5} mA, sim {:.5} mA (±{:.5}, 95% CI over {} runs), delta {:+.5} mA; lifetime delta {:+.2}%",
        s.name,
        c.model_current,
        c.sim_current,
        rep.current_ci95,
        seeds.len(),
        c.delta_current,
        100.0 * c.lifetime_rel_delta
    )
    .map_err(out_err)?;
    let mut m = a
        .scenario
        .manifest("compare", &s)
        .with_override("duration", rep.reports[0].duration)
        .with_override("replications", a.replications);
    m.seed = Some(seed);
    emit(a.scenario.out.as_deref(), "compare.csv", &mut m, stdout, |m, w| {
        report::write_comparison_csv(m, &c, w)
    })
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|_| Error::Domain(format!("bad grid value `{x}`"))))
        .collect()
}

/// `start:stop:step` or a comma list.
pub fn parse_t_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [a, b, c] => {
            let [a, b, c]: [f64; 3] = [a, b, c].map(|x| x.trim().parse().unwrap_or(f64::NAN));
            if !(a.is_finite() && b.is_finite() && c > 0.0) {
                return Err(Error::Domain(format!("bad grid range `{s}`")));
            }
            optimize::t_grid(a, b, c)
        }
        [_] => parse_list(s)?,
        _ => return Err(Error::Domain(format!("bad grid `{s}`"))),
    };
    if grid.is_empty() {
        return Err(Error::Domain(format!("grid `{s}` is empty")));
    }
    Ok(grid)
}

fn cmd_optimize(a: &OptimizeArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let s = a.scenario.load()?;
    let seed = a.seed.unwrap_or(s.seed);
    let backend = match a.backend {
        BackendArg::Model => Backend::Model,
        BackendArg::Sim => Backend::Sim {
            periods: a.periods,
            seeds: vec![seed],
        },
    };
    let mut m = a
        .scenario
        .manifest("optimize", &s)
        .with_override("axis", format!("{:?}", a.axis).to_lowercase())
        .with_override("threshold", a.threshold)
        .with_override("backend", format!("{:?}", a.backend).to_lowercase());
    if let Some(g) = &a.grid {
        m = m.with_override("grid", g);
    }
    if a.backend == BackendArg::Sim {
        m.seed = Some(seed);
        m = m.with_override("periods", a.periods);
    }
    let out = a.scenario.out.as_deref();

    if a.axis == AxisArg::Full {
        let c = optimize::compare_default_vs_optimized(&s)?;
        writeln!(
            stderr,
            "{}: default N_TIM={} T={} s {:.5} mA -> optimized N_TIM={} T={} s {:.5} mA (x{:.3} current, x{:.3} lifetime)",
            s.name,
            c.default_n_tim,
            c.default_t,
            c.default.mean_current,
            c.optimized_n_tim,
            c.optimized_t,
            c.optimized.mean_current,
            c.current_ratio,
            c.lifetime_ratio
        )
        .map_err(out_err)?;
        return emit(out, "optimize_full.csv", &mut m, stdout, |m, w| {
            report::write_optimization_csv(m, &c, w)
        });
    }

    let sweep = match a.axis {
        AxisArg::Ntim => {
            let candidates = match &a.grid {
                Some(g) => parse_list::<u32>(g)?,
                None => optimize::DEFAULT_NTIM_CANDIDATES.to_vec(),
            };
            if candidates.is_empty() {
                return Err(Error::Domain("N_TIM grid is empty".into()));
            }
            optimize::sweep_ntim_with(&s, &candidates, &backend)?
        }
        _ => {
            let grid = match &a.grid {
                Some(g) => parse_t_grid(g)?,
                None => optimize::default_t_grid(&s),
            };
            optimize::sweep_t_with(&s, &grid, a.threshold, &backend)?
        }
    };
    let p = sweep.chosen_point();
    writeln!(
        stderr,
        "{}: chosen {} = {} ({:.5} mA, success dl {:.4} ul {:.4}); {} points, {} skipped",
        s.name,
        sweep.axis,
        sweep.chosen,
        p.mean_current,
        p.success_dl,
        p.success_ul,
        sweep.points.len(),
        sweep.skipped.len()
    )
    .map_err(out_err)?;
    let name = format!("sweep_{}.csv", sweep.axis);
    emit(out, &name, &mut m, stdout, |m, w| report::write_sweep_csv(m, &sweep, w))?;
    if let Some(dir) = out {
        for (x, y, pts) in report::sweep_curves(&sweep) {
            let mut mc = m.clone();
            emit(Some(dir), &format!("{x}_vs_{y}.dat"), &mut mc, stdout, |m, w| {
                report::write_curve(m, &x, &y, &pts, w)
            })?;
        }
    }
    Ok(())
}

fn cmd_scenarios(stdout: &mut dyn Write) -> Result<()> {
    writeln!(
        stdout,
        "{:<20} {:>6} {:>8} {:>10} {:>10} {:>12}",
        "name", "n_sta", "env", "dl_s", "ul_s", "area_m"
    )
    .map_err(out_err)?;
    for s in builtin_scenarios().iter().chain(load_pattern_scenarios().iter()) {
        writeln!(
            stdout,
            "{:<20} {:>6} {:>8} {:>10} {:>10} {:>12}",
            s.name,
            s.n_sta,
            s.environment.to_string(),
            s.mean_dl_interval,
            s.mean_ul_interval,
            format!("{}x{}", s.area.width, s.area.height)
        )
        .map_err(out_err)?;
    }
    Ok(())
}
