//! The measurable lower bounds on tau, for random states and for states
//! with rank-one `M` where every bound must vanish.
//!
//!     cargo run --example lower_bounds

use tritangle::state::random_pure;
use tritangle::tangle;
use tritangle::verify::random_w_class;

fn main() -> tritangle::error::Result<()> {
    println!("{:<10} {:>3} {:>9} {:>9} {:>9} {:>6} {:>9}", "state", "n", "tau", "spectral", "sigma_u", "q*", "det");
    for seed in 0..4u64 {
        for (label, s) in [("random", random_pure(2 + seed as usize, seed)?), ("W-class", random_w_class(2 + seed as usize, seed)?)] {
            let r = tangle::tau(&s)?;
            let b = &r.bounds;
            let det = b.qubit_det.map(|d| format!("{:.6}", d.bound)).unwrap_or_else(|| "-".into());
            println!(
                "{label:<10} {:>3} {:>9.6} {:>9.6} {:>9.6} {:>6.3} {:>9}",
                r.n, r.tau, b.spectral, b.sigma_u.bound, b.sigma_u.q_star, det
            );
        }
    }
    Ok(())
}
