//! Replicated simulation against the closed-form model for every scenario.

use dot11ah_energy::analytic::evaluate;
use dot11ah_energy::scenario::builtin_scenarios;
use dot11ah_energy::sim::{compare, replicate};

fn main() -> dot11ah_energy::Result<()> {
    let seeds: Vec<u64> = (1..=5).collect();
    for s in builtin_scenarios() {
        let model = evaluate(&s)?;
        let rep = replicate(&s, 500.0 * s.dtim_period, &seeds)?;
        let c = compare(&model, &rep.summary());
        println!(
            "{:<18} model {:.5} mA  sim {:.5} ± {:.5} mA  lifetime delta {:+.1}%",
            c.scenario,
            c.model_current,
            c.sim_current,
            rep.current_ci95,
            100.0 * c.lifetime_rel_delta
        );
    }
    Ok(())
}
