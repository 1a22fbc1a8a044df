use std::fmt;

use crate::codec::DecodeError;
use crate::crypto::{Address, Digest};

use super::block::{merkle_root, tx_root, Block};
use super::consensus::{mine_pow, pos_rng, CoinAgeLedger, ConsensusConfig, ConsensusMode};
use super::tx::{tx_digest, Transaction};
use super::LedgerError;

/// A single linear chain of blocks starting at the fixed genesis block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    pub blocks: Vec<Block>,
}

impl Default for Chain {
    fn default() -> Self {
        Self::new()
    }
}

impl Chain {
    pub fn new() -> Self {
        Chain {
            blocks: vec![Block::genesis()],
        }
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain always holds genesis")
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// All transactions in ledger order.
    pub fn transactions(&self) -> impl Iterator<Item = &Transaction> {
        self.blocks.iter().flat_map(|b| b.transactions.iter())
    }

    /// One hex-encoded canonical block per line, LF-terminated.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            out.push_str(&hex::encode(b.encode()));
            out.push('\n');
        }
        out
    }

    /// Parses [`Chain::export`] output. Does not validate; run
    /// [`validate_chain`] on the result.
    pub fn import(text: &str) -> Result<Self, ImportError> {
        let mut blocks = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bytes = hex::decode(line).map_err(|e| ImportError {
                line: i + 1,
                source: DecodeError::Hex(e.to_string()),
            })?;
            let block = Block::decode(&bytes).map_err(|source| ImportError {
                line: i + 1,
                source,
            })?;
            blocks.push(block);
        }
        if blocks.is_empty() {
            return Err(ImportError {
                line: 0,
                source: DecodeError::Truncated(0),
            });
        }
        Ok(Chain { blocks })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {source}")]
pub struct ImportError {
    pub line: usize,
    #[source]
    pub source: DecodeError,
}

/// Why a block failed validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fault {
    BadGenesis,
    BadIndex,
    BadLink,
    BadTimestamp,
    /// Stored tx_id, signature or amount rule of the transaction at this
    /// position is inconsistent with its content.
    BadTransaction {
        position: usize,
    },
    BadRoot,
    BadHash,
    BadProof,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fault::BadTransaction { position } => write!(f, "BadTransaction@{position}"),
            other => write!(f, "{other:?}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    /// Every fault found as (position in chain, fault), ordered by position.
    pub faults: Vec<(u64, Fault)>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.faults.is_empty()
    }

    pub fn first_invalid(&self) -> Option<u64> {
        self.faults.iter().map(|(i, _)| *i).min()
    }

    pub fn faults_at(&self, index: u64) -> impl Iterator<Item = &Fault> {
        self.faults
            .iter()
            .filter(move |(i, _)| *i == index)
            .map(|(_, f)| f)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.first_invalid() {
            None => write!(f, "OK"),
            Some(first) => {
                write!(f, "INVALID first={first}")?;
                for (i, fault) in &self.faults {
                    write!(f, " [{i}:{fault}]")?;
                }
                Ok(())
            }
        }
    }
}

fn transaction_ok(tx: &Transaction) -> bool {
    content_ok(tx, &tx_digest(tx))
}

fn content_ok(tx: &Transaction, digest: &Digest) -> bool {
    tx.tx_id == *digest && tx.signature_valid() && (tx.amount == 0 || tx.kind.is_monetary())
}

/// Structural checks of `block` against its predecessor (consensus excluded).
fn block_faults(prev: &Block, block: &Block) -> Vec<Fault> {
    let mut faults = Vec::new();
    let h = &block.header;
    if h.index != prev.header.index + 1 {
        faults.push(Fault::BadIndex);
    }
    if h.prev_hash != prev.block_hash {
        faults.push(Fault::BadLink);
    }
    if h.timestamp <= prev.header.timestamp {
        faults.push(Fault::BadTimestamp);
    }
    let digests: Vec<Digest> = block.transactions.iter().map(tx_digest).collect();
    for (position, (tx, d)) in block.transactions.iter().zip(&digests).enumerate() {
        if !content_ok(tx, d) {
            faults.push(Fault::BadTransaction { position });
        }
    }
    if h.tx_root != merkle_root(&digests) {
        faults.push(Fault::BadRoot);
    }
    if block.block_hash != h.hash() {
        faults.push(Fault::BadHash);
    }
    faults
}

/// Checks genesis, linkage, indices, timestamps, transaction ids and
/// signatures, roots and header hashes. Failures are reported, not thrown.
pub fn validate_chain(chain: &Chain) -> ValidationReport {
    let mut report = ValidationReport::default();
    let Some(genesis) = chain.blocks.first() else {
        report.faults.push((0, Fault::BadGenesis));
        return report;
    };
    if *genesis != Block::genesis() {
        report.faults.push((0, Fault::BadGenesis));
    }
    for (pos, pair) in chain.blocks.windows(2).enumerate() {
        for fault in block_faults(&pair[0], &pair[1]) {
            report.faults.push((pos as u64 + 1, fault));
        }
    }
    report
}

/// [`validate_chain`] plus consensus proofs: the PoW target for every
/// non-genesis block, or a replay of PoS leader selection from
/// `initial_stake`.
pub fn validate_chain_with(
    chain: &Chain,
    cfg: &ConsensusConfig,
    initial_stake: &CoinAgeLedger,
) -> ValidationReport {
    let mut report = validate_chain(chain);
    let mut stake = initial_stake.clone();
    for (pos, block) in chain.blocks.iter().enumerate().skip(1) {
        let ok = match cfg.mode {
            ConsensusMode::Pow => cfg.pow_target.is_met_by(&block.header.hash()),
            ConsensusMode::Pos => {
                let mut rng = pos_rng(cfg.pos_seed, block.header.index);
                match stake.select_pos(block.header.timestamp, &mut rng) {
                    Ok(winner) => winner == block.header.creator,
                    Err(_) => false,
                }
            }
        };
        if !ok {
            report.faults.push((pos as u64, Fault::BadProof));
        }
    }
    report.faults.sort_by_key(|(i, _)| *i);
    report
}

/// Appends `block` to `chain` after checking linkage, content and the
/// consensus proof. On PoS success the winner's coin age in `stake` is
/// consumed. Nothing is modified on error.
pub fn append_block(
    chain: &mut Chain,
    block: Block,
    cfg: &ConsensusConfig,
    stake: &mut CoinAgeLedger,
) -> Result<(), LedgerError> {
    let tip = chain.tip();
    let h = &block.header;
    if h.index != tip.header.index + 1 {
        return Err(LedgerError::BadIndex {
            expected: tip.header.index + 1,
            found: h.index,
        });
    }
    if h.prev_hash != tip.block_hash {
        return Err(LedgerError::BadLink {
            expected: tip.block_hash,
            found: h.prev_hash,
        });
    }
    if h.timestamp <= tip.header.timestamp {
        return Err(LedgerError::BadTimestamp {
            previous: tip.header.timestamp,
            found: h.timestamp,
        });
    }
    if let Some(position) = block.transactions.iter().position(|tx| !transaction_ok(tx)) {
        return Err(LedgerError::BadTransaction { position });
    }
    if h.tx_root != tx_root(&block.transactions) {
        return Err(LedgerError::BadRoot);
    }
    let computed = h.hash();
    if block.block_hash != computed {
        return Err(LedgerError::BadHash);
    }
    match cfg.mode {
        ConsensusMode::Pow => {
            if !cfg.pow_target.is_met_by(&computed) {
                return Err(LedgerError::BadProof);
            }
        }
        ConsensusMode::Pos => {
            let mut next = stake.clone();
            let winner = next.select_pos(h.timestamp, &mut pos_rng(cfg.pos_seed, h.index))?;
            if winner != h.creator {
                return Err(LedgerError::BadProof);
            }
            *stake = next;
        }
    }
    chain.blocks.push(block);
    Ok(())
}

/// A chain bundled with its consensus configuration and stake state.
#[derive(Clone, Debug)]
pub struct Ledger {
    chain: Chain,
    config: ConsensusConfig,
    stake: CoinAgeLedger,
    initial_stake: CoinAgeLedger,
}

impl Ledger {
    pub fn new(config: ConsensusConfig, stake: CoinAgeLedger) -> Result<Self, LedgerError> {
        config.validate()?;
        Ok(Ledger {
            chain: Chain::new(),
            config,
            initial_stake: stake.clone(),
            stake,
        })
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn into_chain(self) -> Chain {
        self.chain
    }

    pub fn config(&self) -> &ConsensusConfig {
        &self.config
    }

    pub fn stake(&self) -> &CoinAgeLedger {
        &self.stake
    }

    pub fn initial_stake(&self) -> &CoinAgeLedger {
        &self.initial_stake
    }

    /// Builds the next block with a valid consensus proof and appends it.
    ///
    /// Under PoW `miner` becomes the creator and a nonce is searched; under
    /// PoS the creator is whoever wins leader selection and `miner` is
    /// ignored.
    pub fn seal_block(
        &mut self,
        transactions: Vec<Transaction>,
        timestamp: u64,
        miner: Address,
    ) -> Result<&Block, LedgerError> {
        let tip = self.chain.tip();
        let index = tip.header.index + 1;
        let prev_hash = tip.block_hash;
        let block = match self.config.mode {
            ConsensusMode::Pow => {
                let draft = Block::assemble(index, prev_hash, miner, timestamp, 0, transactions);
                let nonce = mine_pow(
                    &draft.header,
                    &self.config.pow_target,
                    self.config.pow_nonce_bound,
                )?;
                Block::assemble(
                    index,
                    prev_hash,
                    miner,
                    timestamp,
                    nonce,
                    draft.transactions,
                )
            }
            ConsensusMode::Pos => {
                let creator = self
                    .stake
                    .clone()
                    .select_pos(timestamp, &mut pos_rng(self.config.pos_seed, index))?;
                Block::assemble(index, prev_hash, creator, timestamp, 0, transactions)
            }
        };
        append_block(&mut self.chain, block, &self.config, &mut self.stake)?;
        Ok(self.chain.tip())
    }

    pub fn append_block(&mut self, block: Block) -> Result<(), LedgerError> {
        append_block(&mut self.chain, block, &self.config, &mut self.stake)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_chain_with(&self.chain, &self.config, &self.initial_stake)
    }
}

/// Digest of the exported chain, handy for determinism checks.
pub fn chain_fingerprint(chain: &Chain) -> Digest {
    Digest::of(chain.export().as_bytes())
}
