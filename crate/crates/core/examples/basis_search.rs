//! Turning the wave plates until the off-diagonal coincidences vanish.
//!
//!     cargo run --release --example basis_search -- [seed]

use tritangle::protocol::{self, SearchConfig};
use tritangle::state::random_pure;
use tritangle::tangle::{self, SpectrumRoute};

fn main() -> tritangle::error::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5);
    let s = random_pure(2, seed)?;
    let trace = protocol::search_basis(&s, &SearchConfig { seed, tol: 1e-12, ..Default::default() })?;

    for (k, step) in trace.iterations.iter().enumerate() {
        let p = &step.params;
        println!("{k:>3}  quarter {:>9.5}  half {:>9.5}  off-diagonal {:.3e}", p[0], p[1], step.signal);
    }
    println!("converged: {} after {} start(s)", trace.converged, trace.starts_used);

    let found = protocol::diagonal_moduli(&s, &trace.final_basis)?;
    let lam = tangle::lambda_spectrum(&s, SpectrumRoute::ViaM)?.values();
    println!("diagonal |M~_ii| = {:.9?}", found);
    println!("spectrum lam     = {:.9?}", &lam[..2]);
    Ok(())
}
