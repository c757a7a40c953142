//! MCS ranges per environment and the rate mix of the builtin deployments.

use dot11ah_energy::link_budget::{max_range, place_stations, rate_histogram};
use dot11ah_energy::scenario::{builtin, builtin_scenarios, Environment};

fn main() -> dot11ah_energy::Result<()> {
    let phy = builtin("industrial").expect("builtin").phy;
    println!("{:<6} {:>10} {:>12} {:>12}", "mcs", "rate", "indoor (m)", "outdoor (m)");
    for m in &phy.mcs_table {
        println!(
            "{:<6} {:>10.0} {:>12.1} {:>12.1}",
            m.mode_name,
            m.data_rate,
            max_range(m, Environment::Indoor, &phy)?,
            max_range(m, Environment::Outdoor, &phy)?
        );
    }

    for s in builtin_scenarios() {
        let placements = place_stations(&s, s.seed)?;
        let far = placements.iter().map(|p| p.distance).fold(0.0, f64::max);
        println!("\n{} ({} stations, farthest {far:.1} m)", s.name, s.n_sta);
        for (rate, count) in rate_histogram(&placements) {
            println!("  {:>8.0} bit/s  {count}", rate);
        }
    }
    Ok(())
}
