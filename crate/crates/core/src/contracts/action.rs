use crate::codec::{DecodeError, Decoder, Encoder};
use crate::crypto::{Address, Digest};
use crate::ledger::{LedgerError, Transaction, TxKind};

use super::{QueryPointer, RelationshipStatus, Role};

/// Payload schema of every contract-bearing transaction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ContractAction {
    RegisterIdentity {
        id_string: String,
        address: Address,
        role: Role,
    },
    IssueMnoc {
        hno: Address,
        vno: Address,
        user: Address,
        pointers: Vec<QueryPointer>,
    },
    GrantPermission {
        mnoc_id: Digest,
        grantee: Address,
        query: String,
    },
    UpdateCc {
        owner: Address,
        mnoc_id: Digest,
        status: RelationshipStatus,
    },
    AcceptTerms {
        mnoc_id: Digest,
    },
    /// Fiat charge from a roaming user to the visited operator.
    Charge(Settlement),
    /// Cryptocurrency transfer from the home operator to the visited operator.
    Transfer(Settlement),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Settlement {
    pub mnoc_id: Digest,
    pub payer: Address,
    pub payee: Address,
    /// Minor units: fiat for charges, cryptocurrency for transfers.
    pub amount: u64,
    pub volume: u64,
}

impl ContractAction {
    pub fn kind(&self) -> TxKind {
        match self {
            ContractAction::RegisterIdentity { .. } => TxKind::IdentityRegistration,
            ContractAction::IssueMnoc { .. } => TxKind::MnocIssue,
            ContractAction::GrantPermission { .. } => TxKind::PermissionGrant,
            ContractAction::UpdateCc { .. } => TxKind::CcUpdate,
            ContractAction::AcceptTerms { .. } => TxKind::TermsAcceptance,
            ContractAction::Charge(_) => TxKind::Charge,
            ContractAction::Transfer(_) => TxKind::Transfer,
        }
    }

    pub fn amount(&self) -> u64 {
        match self {
            ContractAction::Charge(s) | ContractAction::Transfer(s) => s.amount,
            _ => 0,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.u8(self.kind().tag());
        match self {
            ContractAction::RegisterIdentity {
                id_string,
                address,
                role,
            } => {
                e.str(id_string).address(address).u8(role.tag());
            }
            ContractAction::IssueMnoc {
                hno,
                vno,
                user,
                pointers,
            } => {
                e.address(hno).address(vno).address(user);
                encode_pointers(&mut e, pointers);
            }
            ContractAction::GrantPermission {
                mnoc_id,
                grantee,
                query,
            } => {
                e.digest(mnoc_id).address(grantee).str(query);
            }
            ContractAction::UpdateCc {
                owner,
                mnoc_id,
                status,
            } => {
                e.address(owner).digest(mnoc_id).u8(status.tag());
            }
            ContractAction::AcceptTerms { mnoc_id } => {
                e.digest(mnoc_id);
            }
            ContractAction::Charge(s) | ContractAction::Transfer(s) => {
                e.digest(&s.mnoc_id)
                    .address(&s.payer)
                    .address(&s.payee)
                    .u64(s.amount)
                    .u64(s.volume);
            }
        }
        e.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(buf);
        let kind = TxKind::from_tag(d.u8()?)?;
        let action = match kind {
            TxKind::IdentityRegistration => ContractAction::RegisterIdentity {
                id_string: d.str()?,
                address: d.address()?,
                role: Role::from_tag(d.u8()?)?,
            },
            TxKind::MnocIssue => ContractAction::IssueMnoc {
                hno: d.address()?,
                vno: d.address()?,
                user: d.address()?,
                pointers: decode_pointers(&mut d)?,
            },
            TxKind::PermissionGrant => ContractAction::GrantPermission {
                mnoc_id: d.digest()?,
                grantee: d.address()?,
                query: d.str()?,
            },
            TxKind::CcUpdate => ContractAction::UpdateCc {
                owner: d.address()?,
                mnoc_id: d.digest()?,
                status: RelationshipStatus::from_tag(d.u8()?)?,
            },
            TxKind::TermsAcceptance => ContractAction::AcceptTerms {
                mnoc_id: d.digest()?,
            },
            TxKind::Charge | TxKind::Transfer => {
                let s = Settlement {
                    mnoc_id: d.digest()?,
                    payer: d.address()?,
                    payee: d.address()?,
                    amount: d.u64()?,
                    volume: d.u64()?,
                };
                if kind == TxKind::Charge {
                    ContractAction::Charge(s)
                } else {
                    ContractAction::Transfer(s)
                }
            }
        };
        d.finish()?;
        Ok(action)
    }

    /// Wraps the action in a transaction signed by `signer`.
    pub fn into_tx(self, signer: Address, timestamp: u64) -> Result<Transaction, LedgerError> {
        Transaction::new_signed(self.kind(), self.encode(), signer, self.amount(), timestamp)
    }
}

pub(crate) fn encode_pointers(e: &mut Encoder, pointers: &[QueryPointer]) {
    e.u32(pointers.len() as u32);
    for p in pointers {
        e.str(&p.query).digest(&p.content_hash);
    }
}

fn decode_pointers(d: &mut Decoder<'_>) -> Result<Vec<QueryPointer>, DecodeError> {
    let n = d.u32()?;
    let mut out = Vec::with_capacity(n.min(1024) as usize);
    for _ in 0..n {
        out.push(QueryPointer {
            query: d.str()?,
            content_hash: d.digest()?,
        });
    }
    Ok(out)
}
