//! Registrar, MNO and cursory contracts as deterministic state machines.
//!
//! A [`ContractWorld`] is a pure fold over ledger transactions: every
//! transition is triggered by [`ContractWorld::apply_action`] and a failing
//! guard leaves the world untouched.
//!
//! Lifecycle of one roaming agreement:
//!
//! ```text
//! IssueMnoc (HNO or VNO)      -> MNOC Proposed, CC entries New
//! CcUpdate  (HNO, optional)   -> user's entry AwaitingUpdate
//! TermsAcceptance (user)      -> MNOC UserAccepted, user's entry Accepted
//!   or CcUpdate Rejected (user, terminal)
//! PermissionGrant (HNO)       -> MNOC Active
//! Charge / Transfer           -> MNOC Closed
//! ```

mod action;
mod snapshot;
mod world;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::DecodeError;
use crate::crypto::{Address, Digest};
use crate::ledger::TxKind;

pub use action::{ContractAction, Settlement};
pub use snapshot::world_snapshot;
pub use world::{mnoc_contract_id, Applied, ContractWorld, Policy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    User,
    Operator,
}

impl Role {
    pub(crate) fn tag(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_tag(tag: u8) -> Result<Self, DecodeError> {
        match tag {
            0 => Ok(Role::User),
            1 => Ok(Role::Operator),
            _ => Err(DecodeError::BadTag { what: "role", tag }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegistrarEntry {
    pub id_string: String,
    pub address: Address,
    pub role: Role,
}

/// A query string against an operator's record store plus the digest of
/// the data it returned when the pointer was minted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct QueryPointer {
    pub query: String,
    pub content_hash: Digest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum MnocStatus {
    Proposed,
    UserAccepted,
    Active,
    Closed,
}

impl fmt::Display for MnocStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MnocContract {
    pub contract_id: Digest,
    pub hno: Address,
    pub vno: Address,
    pub user: Address,
    pub pointers: Vec<QueryPointer>,
    /// (grantee, query) pairs.
    pub permissions: std::collections::BTreeSet<(Address, String)>,
    pub status: MnocStatus,
    pub issued_at: u64,
}

impl MnocContract {
    pub fn pointer(&self, query: &str) -> Option<&QueryPointer> {
        self.pointers.iter().find(|p| p.query == query)
    }

    pub fn permits(&self, grantee: &Address, query: &str) -> bool {
        self.permissions
            .iter()
            .any(|(g, q)| g == grantee && q == query)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RelationshipStatus {
    New,
    AwaitingUpdate,
    Accepted,
    Rejected,
}

impl RelationshipStatus {
    pub(crate) fn tag(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_tag(tag: u8) -> Result<Self, DecodeError> {
        match tag {
            0 => Ok(RelationshipStatus::New),
            1 => Ok(RelationshipStatus::AwaitingUpdate),
            2 => Ok(RelationshipStatus::Accepted),
            3 => Ok(RelationshipStatus::Rejected),
            _ => Err(DecodeError::BadTag {
                what: "relationship status",
                tag,
            }),
        }
    }
}

/// Per-identity index of MNOC relationships, in insertion order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CursoryContract {
    pub owner: Address,
    pub relationships: Vec<(Digest, RelationshipStatus)>,
}

impl CursoryContract {
    pub fn status_of(&self, mnoc_id: &Digest) -> Option<RelationshipStatus> {
        self.relationships
            .iter()
            .find(|(id, _)| id == mnoc_id)
            .map(|(_, s)| *s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("payload does not decode: {0}")]
    Decode(#[from] DecodeError),
    #[error("transaction kind {tx:?} does not match payload {payload:?}")]
    KindMismatch { tx: TxKind, payload: TxKind },
    #[error("identity string {0:?} already registered")]
    DuplicateId(String),
    #[error("address {0} already registered")]
    DuplicateAddress(Address),
    #[error("address {0} is not an allowlisted operator")]
    PolicyDenied(Address),
    #[error("address {0} is not registered")]
    UnknownParty(Address),
    #[error("address {address} is not registered as {expected:?}")]
    RoleMismatch { address: Address, expected: Role },
    #[error("home and visited operator are the same")]
    SelfRoam,
    #[error("MNOC needs at least one data pointer")]
    EmptyPointers,
    #[error("query pointers must carry a nonempty query")]
    EmptyQuery,
    #[error("contract {0:?} already exists")]
    DuplicateContract(Digest),
    #[error("no contract {0:?}")]
    UnknownContract(Digest),
    /// The MNOC status, or the relevant cursory relationship when
    /// `relationship` is set, forbids the transition.
    #[error("contract {mnoc_id:?} ({status}, relationship {relationship:?}) cannot take this transition")]
    WrongState {
        mnoc_id: Digest,
        status: MnocStatus,
        relationship: Option<RelationshipStatus>,
    },
    #[error("signer {found} is not the expected party {expected}")]
    WrongSigner { expected: Address, found: Address },
    #[error("signature does not verify")]
    BadSignature,
    #[error("query {0:?} is not among the contract's pointers")]
    UnknownQuery(String),
    #[error("grantee {0} is not the contract's visited operator")]
    NotCounterparty(Address),
    #[error("owner {owner} has no relationship with {mnoc_id:?}")]
    UnknownRelationship { owner: Address, mnoc_id: Digest },
    #[error("owner {0} has no cursory contract")]
    UnknownOwner(Address),
    #[error("{actor} may not set {status:?} on {owner}'s relationship")]
    NotAuthorized {
        actor: Address,
        owner: Address,
        status: RelationshipStatus,
    },
    #[error("settlement parties do not match the contract")]
    PartyMismatch,
    #[error("transaction amount {tx} differs from payload amount {payload}")]
    AmountMismatch { tx: u64, payload: u64 },
}
