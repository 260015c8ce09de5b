pub mod error;
pub mod linalg;
pub mod state;
pub mod tangle;
pub mod protocol;
pub mod noise;
pub mod verify;
pub mod cli;
