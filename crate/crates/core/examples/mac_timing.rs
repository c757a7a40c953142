//! Beacon sizes and the per-interval time budget for several N_TIM values.

use dot11ah_energy::scenario::builtin;
use dot11ah_energy::timing::{Direction, MacTiming};

fn main() -> dot11ah_energy::Result<()> {
    let base = builtin("agricultural").expect("builtin");
    for n_tim in [1, 2, 4, 8, 16, 32] {
        let t = MacTiming::new(&base.with_config(n_tim, 1.6))?;
        println!(
            "n_tim={n_tim:<2} pages={} dtim={:.2} ms tim={:.2} ms raw_dl={:.1} ms raw_ul={:.1} ms",
            t.n_pages,
            t.t_dtim_beacon * 1e3,
            t.t_tim_beacon * 1e3,
            t.t_raw(Direction::Dl) * 1e3,
            t.t_raw(Direction::Ul) * 1e3,
        );
    }

    let t = MacTiming::new(&base)?;
    println!("\nbreakdown at the lowest rate:");
    t.write_breakdown_csv(t.r_min, std::io::stdout())?;
    let ex = t.exchange(Direction::Ul, t.r_min);
    println!(
        "uplink exchange {:.3} ms, at most {} per RAW",
        ex.exchange * 1e3,
        t.max_packets(Direction::Ul, t.r_min)
    );
    Ok(())
}
