//! RMS error of the estimate against shots per setting, averaged over
//! seeds. Prints `(shots, rms_error)` CSV.
//!
//!     cargo run --release --example shot_scaling -- [seeds]

use tritangle::protocol::{tau_from_protocol, ProtocolConfig};
use tritangle::state::{canonical_state, Canonical};

fn main() -> tritangle::error::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(50);
    let ghz = canonical_state(Canonical::Ghz);
    println!("shots,rms_error");
    for exp in 2..=7 {
        let shots = 10u64.pow(exp);
        let mut sq = 0.0;
        for seed in 0..seeds {
            let cfg = ProtocolConfig { shots_per_setting: shots, seed, search: None };
            sq += (tau_from_protocol(&ghz, &cfg)?.tau_hat - 1.0).powi(2);
        }
        println!("{shots},{}", (sq / seeds as f64).sqrt());
    }
    Ok(())
}
