//! Closed-form state fractions, current and lifetime for each scenario.

use dot11ah_energy::analytic::evaluate;
use dot11ah_energy::scenario::{builtin_scenarios, load_pattern_scenarios};

fn main() -> dot11ah_energy::Result<()> {
    println!(
        "{:<18} {:>9} {:>9} {:>9} {:>9} {:>10} {:>8} {:>8} {:>10}",
        "scenario", "rx", "tx", "idle", "sleep", "I (mA)", "succ_dl", "succ_ul", "life (h)"
    );
    for s in builtin_scenarios().into_iter().chain(load_pattern_scenarios()) {
        let r = evaluate(&s)?;
        let f = r.state_times.fractions();
        println!(
            "{:<18} {:>9.2e} {:>9.2e} {:>9.2e} {:>9.5} {:>10.5} {:>8.4} {:>8.4} {:>10.0}",
            r.scenario, f[0], f[1], f[2], f[3], r.mean_current, r.success_dl, r.success_ul, r.battery_lifetime
        );
    }
    Ok(())
}
