//! Two-copy measurement of a random state: fourfold coincidence
//! probabilities in the computational basis and in the Takagi basis of `M`,
//! then the finite-shot estimate of tau.
//!
//!     cargo run --release --example two_copy_protocol -- [shots]

use tritangle::protocol::{self, ProtocolConfig, TwoCopyObservable};
use tritangle::state::{random_pure, CBasis};
use tritangle::tangle;

fn table(s: &tritangle::state::PureState, basis: &CBasis) -> tritangle::error::Result<()> {
    for i in 0..s.n() {
        let row: Vec<String> = (0..s.n())
            .map(|j| {
                let obs = TwoCopyObservable::shared(basis, i, j)?;
                Ok(format!("{:.3e}", protocol::expectation(s, &obs)?))
            })
            .collect::<tritangle::error::Result<_>>()?;
        println!("  {}", row.join("  "));
    }
    Ok(())
}

fn main() -> tritangle::error::Result<()> {
    let shots: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100_000);
    let s = random_pure(2, 2024)?;

    println!("p_ij, computational basis on C:");
    table(&s, &CBasis::identity(2))?;
    let best = protocol::optimal_basis(&s)?;
    println!("p_ij, optimal basis on C:");
    table(&s, &best)?;

    let exact = tangle::tau(&s)?.tau;
    let report = protocol::tau_from_protocol(&s, &ProtocolConfig { shots_per_setting: shots, seed: 1, search: None })?;
    println!("\nexact tau    {exact:.6}");
    match report.tau_std_err {
        Some(se) => println!("estimated    {:.6} +- {se:.6}  ({shots} shots per setting)", report.tau_hat),
        None => println!("estimated    {:.6}  ({shots} shots per setting)", report.tau_hat),
    }
    Ok(())
}
