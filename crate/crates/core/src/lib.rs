//! Simulation and analysis toolkit for blockchain-mediated cellular roaming.
//!
//! * [`ledger`]: hash-linked chain with PoW and coin-age PoS.
//! * [`contracts`]: registrar, MNO and cursory contract state machines,
//!   driven only by ledger transactions.
//! * [`gatekeeper`]: operator-side record stores answering permissioned,
//!   hash-anchored queries.
//! * [`roamsim`]: deterministic agent-based roaming lifecycle with
//!   settlement and metrics.
//! * [`economics`]: operator revenue and consumer surplus under traditional
//!   and blockchain roaming, price and transit-price games, sweeps.

pub mod codec;
pub mod contracts;
pub mod crypto;
pub mod economics;
pub mod fixed;
pub mod gatekeeper;
pub mod ledger;
pub mod roamsim;

pub use crypto::{Address, Digest};
pub use fixed::{convert_price, convert_to_crypto, ConversionRate, Crypto, Fiat};
