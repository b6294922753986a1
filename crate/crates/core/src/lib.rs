//! Trust-filtered, tamper-evident storage and attack detection for
//! simulated IoT healthcare sensor streams.
//!
//! Transactions pass a reputation-based trust gate, are turned into noised
//! VAE latents, stored off-chain under content addresses and sealed on a
//! lightweight proof-of-work ledger. An LSTM (optionally with low-rank
//! factorized weights) classifies them, and detected attacks lower the
//! sending device's reputation.

pub mod cli;
pub mod clock;
pub mod config;
pub mod dataset;
pub mod ledger;
pub mod linalg;
pub mod lstm;
pub mod metrics;
pub mod modelio;
pub mod offchain;
pub mod optim;
pub mod pipeline;
pub mod trust;
pub mod vae;
