//! Hash-linked block ledger with proof-of-work and coin-age proof-of-stake.
//!
//! The ledger is a single linear chain: there is no fork choice, gossip or
//! mempool. Blocks carry signed [`Transaction`]s whose payloads are contract
//! actions; [`validate_chain`] re-derives every digest and reports the
//! earliest inconsistent block.

mod block;
mod chain;
mod consensus;
mod tx;

use thiserror::Error;

use crate::crypto::Digest;

pub use block::{tx_root, Block, BlockHeader};
pub use chain::{
    append_block, chain_fingerprint, validate_chain, validate_chain_with, Chain, Fault,
    ImportError, Ledger, ValidationReport,
};
pub use consensus::{
    mine_pow, pos_rng, CoinAgeLedger, ConsensusConfig, ConsensusMode, Holding, Target,
};
pub use tx::{tx_digest, Transaction, TxKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("prev_hash {found:?} does not match chain tip {expected:?}")]
    BadLink { expected: Digest, found: Digest },
    #[error("block index {found}, expected {expected}")]
    BadIndex { expected: u64, found: u64 },
    #[error("block timestamp {found} not after previous {previous}")]
    BadTimestamp { previous: u64, found: u64 },
    #[error("consensus proof does not verify")]
    BadProof,
    #[error("tx_root does not match transactions")]
    BadRoot,
    #[error("block_hash does not match header")]
    BadHash,
    #[error("transaction {position} is malformed or unsigned")]
    BadTransaction { position: usize },
    #[error("no nonce below {bound} meets the target")]
    Exhausted { bound: u64 },
    #[error("no identity holds coin age")]
    NoStake,
    #[error("non-monetary {0:?} transaction carries an amount")]
    NonMonetaryAmount(TxKind),
    #[error("invalid consensus config: {0}")]
    InvalidConfig(String),
}
