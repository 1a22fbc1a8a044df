use crate::codec::{DecodeError, Decoder, Encoder};
use crate::crypto::{Address, Digest};

use super::tx::{tx_digest, Transaction};

/// The hashed part of a block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockHeader {
    pub index: u64,
    pub prev_hash: Digest,
    pub tx_root: Digest,
    pub nonce: u64,
    pub creator: Address,
    pub timestamp: u64,
}

impl BlockHeader {
    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.u64(self.index)
            .digest(&self.prev_hash)
            .digest(&self.tx_root)
            .u64(self.nonce)
            .address(&self.creator)
            .u64(self.timestamp);
        e.finish()
    }

    pub fn hash(&self) -> Digest {
        Digest::of(&self.encode())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<Transaction>,
    pub block_hash: Digest,
}

impl Block {
    pub fn genesis() -> Self {
        let header = BlockHeader {
            index: 0,
            prev_hash: Digest::ZERO,
            tx_root: tx_root(&[]),
            nonce: 0,
            creator: Address::ZERO,
            timestamp: 0,
        };
        let block_hash = header.hash();
        Block {
            header,
            transactions: Vec::new(),
            block_hash,
        }
    }

    /// Assembles a block and stamps its hash; no consensus proof is attached
    /// beyond the supplied nonce.
    pub fn assemble(
        index: u64,
        prev_hash: Digest,
        creator: Address,
        timestamp: u64,
        nonce: u64,
        transactions: Vec<Transaction>,
    ) -> Self {
        let header = BlockHeader {
            index,
            prev_hash,
            tx_root: tx_root(&transactions),
            nonce,
            creator,
            timestamp,
        };
        let block_hash = header.hash();
        Block {
            header,
            transactions,
            block_hash,
        }
    }

    pub fn index(&self) -> u64 {
        self.header.index
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        let h = &self.header;
        e.u64(h.index)
            .digest(&h.prev_hash)
            .digest(&h.tx_root)
            .u64(h.nonce)
            .address(&h.creator)
            .u64(h.timestamp)
            .digest(&self.block_hash)
            .u32(self.transactions.len() as u32);
        for tx in &self.transactions {
            e.bytes(&tx.encode());
        }
        e.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(buf);
        let header = BlockHeader {
            index: d.u64()?,
            prev_hash: d.digest()?,
            tx_root: d.digest()?,
            nonce: d.u64()?,
            creator: d.address()?,
            timestamp: d.u64()?,
        };
        let block_hash = d.digest()?;
        let count = d.u32()?;
        let mut transactions = Vec::with_capacity(count.min(4096) as usize);
        for _ in 0..count {
            transactions.push(Transaction::decode(&d.bytes()?)?);
        }
        d.finish()?;
        Ok(Block {
            header,
            transactions,
            block_hash,
        })
    }
}

/// Merkle root over the recomputed digests of `txs`, in order.
///
/// Leaves and interior nodes are domain-separated; an odd node at any level
/// is promoted unchanged rather than duplicated.
pub fn tx_root(txs: &[Transaction]) -> Digest {
    let digests: Vec<Digest> = txs.iter().map(tx_digest).collect();
    merkle_root(&digests)
}

/// [`tx_root`] from already computed transaction digests.
pub(crate) fn merkle_root(digests: &[Digest]) -> Digest {
    if digests.is_empty() {
        return Digest::of(b"");
    }
    let mut level: Vec<Digest> = digests
        .iter()
        .map(|d| Digest::of_parts(&[&[0x00], &d.0]))
        .collect();
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| match pair {
                [l, r] => Digest::of_parts(&[&[0x01], &l.0, &r.0]),
                [single] => *single,
                _ => unreachable!(),
            })
            .collect();
    }
    level[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::TxKind;

    fn txs(n: usize) -> Vec<Transaction> {
        (0..n)
            .map(|i| {
                Transaction::new_signed(
                    TxKind::CcUpdate,
                    vec![i as u8],
                    Address::from_label("a"),
                    0,
                    1,
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn root_depends_on_order() {
        let mut t = txs(3);
        let before = tx_root(&t);
        t.swap(0, 2);
        assert_ne!(before, tx_root(&t));
    }

    #[test]
    fn odd_promotion_does_not_equal_duplication() {
        let t = txs(3);
        let mut dup = t.clone();
        dup.push(t[2].clone());
        assert_ne!(tx_root(&t), tx_root(&dup));
    }

    #[test]
    fn block_codec_round_trip() {
        let b = Block::assemble(3, Digest::of(b"p"), Address::from_label("c"), 9, 42, txs(5));
        assert_eq!(Block::decode(&b.encode()).unwrap(), b);
    }

    #[test]
    fn genesis_is_fixed() {
        let g = Block::genesis();
        assert_eq!(g, Block::genesis());
        assert_eq!(g.header.index, 0);
        assert_eq!(g.header.prev_hash, Digest::ZERO);
        assert!(g.transactions.is_empty());
    }
}
