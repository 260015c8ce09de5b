//! The lambda spectrum three ways: singular values of `M`, eigenvalues of
//! `R = rho K rho^* K`, and the Hermitian form `sqrt(rho) rho~ sqrt(rho)`.
//!
//!     cargo run --example spectrum_routes -- [n] [seed]

use tritangle::state::random_pure;
use tritangle::tangle::{self, SpectrumRoute};

fn main() -> tritangle::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(3);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);

    let s = random_pure(n, seed)?;
    let m = tangle::build_m(&s);
    println!("M ({n}x{n}, rank {}):{}", m.rank(), m.matrix());

    let via_m = tangle::lambda_spectrum(&s, SpectrumRoute::ViaM)?;
    for route in [SpectrumRoute::ViaM, SpectrumRoute::ViaR, SpectrumRoute::ViaHermitian] {
        let lam = tangle::lambda_spectrum(&s, route)?;
        let v = lam.values();
        println!(
            "{:<14} {:.12} {:.12} {:.12} {:.12}   distance to M route {:.2e}",
            format!("{route:?}"),
            v[0],
            v[1],
            v[2],
            v[3],
            via_m.distance(&lam)
        );
    }
    Ok(())
}
