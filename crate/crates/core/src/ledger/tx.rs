use crate::codec::{DecodeError, Decoder, Encoder};
use crate::crypto::{self, Address, Digest};

use super::LedgerError;

/// What a transaction does; mirrors the contract actions it carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TxKind {
    IdentityRegistration,
    MnocIssue,
    PermissionGrant,
    CcUpdate,
    TermsAcceptance,
    Charge,
    Transfer,
}

impl TxKind {
    pub const ALL: [TxKind; 7] = [
        TxKind::IdentityRegistration,
        TxKind::MnocIssue,
        TxKind::PermissionGrant,
        TxKind::CcUpdate,
        TxKind::TermsAcceptance,
        TxKind::Charge,
        TxKind::Transfer,
    ];

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Result<Self, DecodeError> {
        Self::ALL
            .get(tag as usize)
            .copied()
            .ok_or(DecodeError::BadTag {
                what: "tx kind",
                tag,
            })
    }

    pub fn is_monetary(self) -> bool {
        matches!(self, TxKind::Charge | TxKind::Transfer)
    }
}

/// A signed ledger transaction.
///
/// `amount` is in minor units of the kind's currency (fiat for `Charge`,
/// cryptocurrency for `Transfer`) and is zero for every other kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transaction {
    pub tx_id: Digest,
    pub kind: TxKind,
    pub payload: Vec<u8>,
    pub signer: Address,
    pub signature: Digest,
    pub amount: u64,
    pub timestamp: u64,
}

impl Transaction {
    /// Builds, signs and identifies a transaction.
    pub fn new_signed(
        kind: TxKind,
        payload: Vec<u8>,
        signer: Address,
        amount: u64,
        timestamp: u64,
    ) -> Result<Self, LedgerError> {
        if amount != 0 && !kind.is_monetary() {
            return Err(LedgerError::NonMonetaryAmount(kind));
        }
        let signature = crypto::sign(&payload, &signer);
        let mut tx = Transaction {
            tx_id: Digest::ZERO,
            kind,
            payload,
            signer,
            signature,
            amount,
            timestamp,
        };
        tx.tx_id = tx_digest(&tx);
        Ok(tx)
    }

    pub fn signature_valid(&self) -> bool {
        crypto::verify(&self.payload, &self.signer, &self.signature)
    }

    fn encode_body(&self, e: &mut Encoder) {
        e.u8(self.kind.tag())
            .bytes(&self.payload)
            .address(&self.signer)
            .digest(&self.signature)
            .u64(self.amount)
            .u64(self.timestamp);
    }

    /// Canonical encoding including the stored `tx_id`.
    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.digest(&self.tx_id);
        self.encode_body(&mut e);
        e.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(buf);
        let tx = Self::decode_from(&mut d)?;
        d.finish()?;
        Ok(tx)
    }

    pub(crate) fn decode_from(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Transaction {
            tx_id: d.digest()?,
            kind: TxKind::from_tag(d.u8()?)?,
            payload: d.bytes()?,
            signer: d.address()?,
            signature: d.digest()?,
            amount: d.u64()?,
            timestamp: d.u64()?,
        })
    }
}

/// Digest of the canonical serialization of every field except `tx_id`.
pub fn tx_digest(tx: &Transaction) -> Digest {
    let mut e = Encoder::new();
    tx.encode_body(&mut e);
    Digest::of(&e.finish())
}
