//! Two-party secure computation engine and the Starfish federated unlearning protocol.

pub mod config;
pub mod error;
pub mod fixedpoint;
pub mod gates;
pub mod oracle;
pub mod par;
pub mod prg;
pub mod roundsel;
pub mod sharing;
pub mod task;
pub mod unlearn;

pub use error::{Error, Result};
