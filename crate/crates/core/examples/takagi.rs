//! Takagi factorization `M = U diag(lam) U^T` of complex symmetric matrices,
//! including degenerate and rank-deficient ones.
//!
//!     cargo run --example takagi

use tritangle::linalg;
use tritangle::verify::{random_symmetric, SymmetricKind};

fn main() -> tritangle::error::Result<()> {
    for (kind, n) in [(SymmetricKind::Generic, 4), (SymmetricKind::Degenerate, 4), (SymmetricKind::RankDeficient, 5)] {
        let m = random_symmetric(n, 11, kind);
        let f = linalg::takagi(&m)?;
        let err = (f.reconstruct() - &m).norm() / m.norm();
        println!("{kind:?} n = {n}");
        println!("  lam = {:?}", f.lam.iter().map(|l| format!("{l:.6}")).collect::<Vec<_>>());
        println!("  |U lam U^T - M| / |M| = {err:.2e}, |U U^dagger - I| = {:.2e}", linalg::unitarity_defect(&f.u));
    }
    Ok(())
}
