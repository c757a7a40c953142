//! Write model, simulator and sweep CSVs into a directory (first argument,
//! default a temp dir).

use std::path::PathBuf;

use dot11ah_energy::analytic::evaluate;
use dot11ah_energy::optimize::{sweep_ntim, DEFAULT_NTIM_CANDIDATES};
use dot11ah_energy::report::{
    create_output, write_results_csv, write_stations_csv, write_sweep_csv, ResultRow, RunManifest,
};
use dot11ah_energy::scenario::builtin;
use dot11ah_energy::sim::run;

fn main() -> dot11ah_energy::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ah-energy-export"));
    std::fs::create_dir_all(&dir).map_err(|source| dot11ah_energy::Error::Io {
        path: dir.clone(),
        source,
    })?;

    let s = builtin("animal_monitoring").expect("builtin");
    let seed = 3;
    let manifest = RunManifest::new("export_csv", &s.name).with_override("seed", seed);

    let model = evaluate(&s)?;
    let sim = run(&s, 200.0 * s.dtim_period, seed)?;
    let rows = [ResultRow::from_model(&model), ResultRow::from_sim(&sim)];
    write_results_csv(&manifest, &rows, create_output(&dir, "results.csv")?)?;
    write_stations_csv(&manifest, &sim, create_output(&dir, "stations.csv")?)?;
    let sweep = sweep_ntim(&s, &DEFAULT_NTIM_CANDIDATES)?;
    write_sweep_csv(&manifest, &sweep, create_output(&dir, "sweep_n_tim.csv")?)?;

    println!("wrote results.csv, stations.csv and sweep_n_tim.csv to {}", dir.display());
    Ok(())
}
