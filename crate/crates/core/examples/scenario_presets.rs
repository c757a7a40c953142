//! List the builtin scenarios, tweak one and round-trip it through TOML.

use dot11ah_energy::scenario::{builtin, builtin_scenarios, load_pattern_scenarios, Scenario};

fn main() -> dot11ah_energy::Result<()> {
    println!("{:<18} {:>6} {:>10} {:>10} {:>6} {:>6}", "name", "n_sta", "dl (s)", "ul (s)", "n_tim", "T (s)");
    for s in builtin_scenarios().iter().chain(load_pattern_scenarios().iter()) {
        println!(
            "{:<18} {:>6} {:>10.1} {:>10.1} {:>6} {:>6.1}",
            s.name, s.n_sta, s.mean_dl_interval, s.mean_ul_interval, s.n_tim, s.dtim_period
        );
    }

    let mut s = builtin("industrial").expect("builtin");
    s.name = "industrial_dense".into();
    s.n_sta = 2000;
    let text = s.to_toml_string()?;
    let back = Scenario::from_toml_str(&text)?;
    assert_eq!(back, s);
    println!("\n{}", text.lines().take(12).collect::<Vec<_>>().join("\n"));

    // Validation catches bad edits.
    let bad = text.replace("n_tim = 8", "n_tim = 0");
    match Scenario::from_toml_str(&bad) {
        Err(e) => println!("\nrejected: {e}"),
        Ok(_) => println!("\nunexpectedly accepted"),
    }
    Ok(())
}
