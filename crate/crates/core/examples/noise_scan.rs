//! How far tau drifts when both copies are mixed with white noise and the
//! second copy is tilted towards W. Prints plot-ready CSV.
//!
//!     cargo run --example noise_scan > scan.csv

use tritangle::noise::{deviation_scan, Estimator, NoiseSpec};
use tritangle::state::{canonical_state, Canonical};

fn main() -> tritangle::error::Result<()> {
    let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.01).collect();
    println!("state,eps,tau_true,tau_noisy,delta,detected");
    for (label, which) in [("ghz", Canonical::Ghz), ("gghz_0.2", Canonical::GeneralizedGhz(0.2)), ("w", Canonical::W)] {
        let s = canonical_state(which);
        let scan = deviation_scan(&s, &NoiseSpec::defaults(&s, 0.0)?, &grid, Estimator::ExactDiag, false)?;
        for r in &scan.rows {
            println!("{label},{},{},{},{},{}", r.eps, r.tau_true, r.tau_noisy, r.delta, r.detected);
        }
        eprintln!("{label}: slope {:?}, R^2 {:?}", scan.slope, scan.r_squared);
    }
    Ok(())
}
