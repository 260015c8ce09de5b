//! Entanglement quantities of the named three-qubit states and of the
//! family `cos t|000> + sin t|111>`.
//!
//!     cargo run --example ghz_vs_w

use tritangle::state::{canonical_state, Canonical};
use tritangle::tangle;

fn main() -> tritangle::error::Result<()> {
    println!("{:<12} {:>8} {:>8} {:>8} {:>8}", "state", "C_a", "C", "tau", "tau^2");
    for (name, which) in [("GHZ", Canonical::Ghz), ("W", Canonical::W), ("|000>", Canonical::Product)] {
        let r = tangle::tau(&canonical_state(which))?;
        println!("{name:<12} {:>8.5} {:>8.5} {:>8.5} {:>8.5}", r.c_a, r.c, r.tau, r.three_tangle.unwrap_or(0.0));
    }

    println!("\ngeneralized GHZ: tau against sin 2t");
    for k in 0..=6 {
        let t = k as f64 * (std::f64::consts::PI / 12.0);
        let r = tangle::tau(&canonical_state(Canonical::GeneralizedGhz(t)))?;
        println!("t = {t:.4}  tau = {:.10}  sin 2t = {:.10}", r.tau, (2.0 * t).sin());
    }
    Ok(())
}
