//! Writing a state to the JSON state format and reading it back.
//!
//!     cargo run --example state_files

use tritangle::state::{parse_state_json, random_pure, state_to_json};
use tritangle::tangle;

fn main() -> tritangle::error::Result<()> {
    let s = random_pure(3, 99)?;
    let text = state_to_json(&s);
    let path = std::env::temp_dir().join("tritangle-example-state.json");
    std::fs::write(&path, &text)?;
    println!("wrote {}", path.display());

    let back = parse_state_json(&std::fs::read_to_string(&path)?)?;
    println!("identical amplitudes: {}", back.amplitudes() == s.amplitudes());
    println!("tau = {:.12}", tangle::tau(&back)?.tau);

    // Slightly off norms are accepted and flagged.
    let sloppy = r#"{"n": 1, "amplitudes": [[0.5, 0], [0.5, 0], [0.5, 0], [0.5, 0.001]]}"#;
    println!("renormalized: {}", parse_state_json(sloppy)?.was_renormalized());
    Ok(())
}
