//! One simulator run with an event trace written next to the binary's temp dir.

use dot11ah_energy::scenario::builtin;
use dot11ah_energy::sim::{run_with, SimOptions};

fn main() -> dot11ah_energy::Result<()> {
    let s = builtin("industrial").expect("builtin");
    let path = std::env::temp_dir().join("industrial_trace.csv");
    let file = std::fs::File::create(&path).map_err(|source| dot11ah_energy::Error::Io {
        path: path.clone(),
        source,
    })?;
    let r = run_with(&s, 160.0, 7, &SimOptions::default(), Some(Box::new(std::io::BufWriter::new(file))))?;

    let f = r.fractions();
    println!("{} periods, {:.1} s simulated", r.periods, r.duration);
    println!("fractions rx={:.2e} tx={:.2e} idle={:.2e} sleep={:.5}", f[0], f[1], f[2], f[3]);
    println!("mean current {:.5} mA, lifetime {:.0} h", r.mean_current, r.battery_lifetime);
    for (name, c) in [("dl", r.dl), ("ul", r.ul)] {
        println!(
            "{name}: generated {} delivered {} dropped {} buffered {}",
            c.generated, c.delivered, c.dropped(), c.buffered
        );
    }
    println!("collision events {}, DATA errors {}", r.collision_events, r.errors);
    println!("trace: {}", path.display());
    Ok(())
}
