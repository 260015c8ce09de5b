//! Runs the verification suites, once as shipped and once with a sign
//! error planted in the kernel of `M`.
//!
//!     cargo run --release --example self_check

use tritangle::verify::{mutated_kernel, run_all, VerifyConfig};

fn main() -> tritangle::error::Result<()> {
    for (label, kernel) in [("intact", None), ("broken kernel", Some(mutated_kernel()))] {
        let report = run_all(&VerifyConfig { trials: 50, kernel, ..Default::default() })?;
        println!("{label}:");
        for s in &report.suites {
            println!("  {} {:<13} worst {:.2e}", if s.passed { "PASS" } else { "FAIL" }, s.name, s.worst);
        }
    }
    Ok(())
}
