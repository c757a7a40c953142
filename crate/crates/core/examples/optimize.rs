//! N_TIM and DTIM period sweeps, then default against optimized settings.

use dot11ah_energy::optimize::{
    compare_default_vs_optimized, default_t_grid, sweep_ntim, sweep_t, DEFAULT_NTIM_CANDIDATES,
    DEFAULT_THRESHOLD,
};
use dot11ah_energy::scenario::builtin_scenarios;

fn main() -> dot11ah_energy::Result<()> {
    for s in builtin_scenarios() {
        let ntim = sweep_ntim(&s, &DEFAULT_NTIM_CANDIDATES)?;
        let currents: Vec<String> = ntim
            .points
            .iter()
            .map(|p| format!("{}:{:.5}", p.value, p.mean_current))
            .collect();
        println!("{}: n_tim -> {} ({})", s.name, ntim.chosen, currents.join(" "));

        let at = s.with_config(ntim.chosen as u32, s.dtim_period);
        let t = sweep_t(&at, &default_t_grid(&at), DEFAULT_THRESHOLD)?;
        let p = t.chosen_point();
        println!(
            "  T -> {:.1} s (success dl {:.4} ul {:.4}, {} grid points skipped)",
            t.chosen,
            p.contention_success_dl,
            p.contention_success_ul,
            t.skipped.len()
        );

        let c = compare_default_vs_optimized(&s)?;
        println!(
            "  current {:.5} -> {:.5} mA (x{:.3}), lifetime x{:.2}",
            c.default.mean_current, c.optimized.mean_current, c.current_ratio, c.lifetime_ratio
        );
    }
    Ok(())
}
