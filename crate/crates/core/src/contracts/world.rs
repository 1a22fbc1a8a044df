use std::collections::{BTreeMap, BTreeSet};

use crate::codec::Encoder;
use crate::crypto::{Address, Digest};
use crate::ledger::{Transaction, TxKind};

use super::action::{encode_pointers, ContractAction, Settlement};
use super::{
    ContractError, CursoryContract, MnocContract, MnocStatus, QueryPointer, RegistrarEntry,
    RelationshipStatus, Role,
};

/// Registration policy coded into the registrar.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Policy {
    /// When set, only these addresses may register as operators.
    pub operator_allowlist: Option<BTreeSet<Address>>,
}

impl Policy {
    pub fn open() -> Self {
        Self::default()
    }

    pub fn participants(addresses: impl IntoIterator<Item = Address>) -> Self {
        Policy {
            operator_allowlist: Some(addresses.into_iter().collect()),
        }
    }

    fn admits_operator(&self, address: &Address) -> bool {
        self.operator_allowlist
            .as_ref()
            .is_none_or(|list| list.contains(address))
    }
}

/// What a successfully applied transaction did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Applied {
    Registered(Address),
    Issued(Digest),
    Accepted(Digest),
    Granted(Digest),
    CcUpdated(Digest),
    Settled(Digest),
}

/// All contract state, rebuilt by folding ledger transactions in order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ContractWorld {
    registrar: BTreeMap<String, RegistrarEntry>,
    id_by_address: BTreeMap<Address, String>,
    mnocs: BTreeMap<Digest, MnocContract>,
    ccs: BTreeMap<Address, CursoryContract>,
    policy: Policy,
}

/// contract_id = digest(hno, vno, user, pointers, issuing tick).
pub fn mnoc_contract_id(
    hno: &Address,
    vno: &Address,
    user: &Address,
    pointers: &[QueryPointer],
    issued_at: u64,
) -> Digest {
    let mut e = Encoder::new();
    e.address(hno).address(vno).address(user);
    encode_pointers(&mut e, pointers);
    e.u64(issued_at);
    Digest::of(&e.finish())
}

impl ContractWorld {
    pub fn new(policy: Policy) -> Self {
        ContractWorld {
            policy,
            ..Default::default()
        }
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn registrar(&self) -> impl Iterator<Item = &RegistrarEntry> {
        self.registrar.values()
    }

    pub fn entry_by_address(&self, address: &Address) -> Option<&RegistrarEntry> {
        self.id_by_address
            .get(address)
            .and_then(|id| self.registrar.get(id))
    }

    pub fn entry_by_id(&self, id_string: &str) -> Option<&RegistrarEntry> {
        self.registrar.get(id_string)
    }

    pub fn mnoc(&self, id: &Digest) -> Option<&MnocContract> {
        self.mnocs.get(id)
    }

    pub fn mnocs(&self) -> impl Iterator<Item = &MnocContract> {
        self.mnocs.values()
    }

    pub fn cc(&self, owner: &Address) -> Option<&CursoryContract> {
        self.ccs.get(owner)
    }

    pub fn ccs(&self) -> impl Iterator<Item = &CursoryContract> {
        self.ccs.values()
    }

    fn require_role(&self, address: &Address, role: Role) -> Result<(), ContractError> {
        match self.entry_by_address(address) {
            None => Err(ContractError::UnknownParty(*address)),
            Some(e) if e.role != role => Err(ContractError::RoleMismatch {
                address: *address,
                expected: role,
            }),
            Some(_) => Ok(()),
        }
    }

    fn mnoc_or_err(&self, id: &Digest) -> Result<&MnocContract, ContractError> {
        self.mnocs
            .get(id)
            .ok_or(ContractError::UnknownContract(*id))
    }

    fn set_relationship(&mut self, owner: &Address, mnoc_id: &Digest, status: RelationshipStatus) {
        if let Some(cc) = self.ccs.get_mut(owner) {
            if let Some(entry) = cc.relationships.iter_mut().find(|(id, _)| id == mnoc_id) {
                entry.1 = status;
            }
        }
    }

    /// Adds a registrar entry and an empty cursory contract for the address.
    pub fn register_identity(
        &mut self,
        id_string: &str,
        address: Address,
        role: Role,
    ) -> Result<(), ContractError> {
        if self.registrar.contains_key(id_string) {
            return Err(ContractError::DuplicateId(id_string.to_string()));
        }
        if self.id_by_address.contains_key(&address) {
            return Err(ContractError::DuplicateAddress(address));
        }
        if role == Role::Operator && !self.policy.admits_operator(&address) {
            return Err(ContractError::PolicyDenied(address));
        }
        self.registrar.insert(
            id_string.to_string(),
            RegistrarEntry {
                id_string: id_string.to_string(),
                address,
                role,
            },
        );
        self.id_by_address.insert(address, id_string.to_string());
        self.ccs.insert(
            address,
            CursoryContract {
                owner: address,
                relationships: Vec::new(),
            },
        );
        Ok(())
    }

    pub fn issue_mnoc(
        &mut self,
        hno: Address,
        vno: Address,
        user: Address,
        pointers: Vec<QueryPointer>,
        issued_at: u64,
    ) -> Result<Digest, ContractError> {
        self.require_role(&hno, Role::Operator)?;
        self.require_role(&vno, Role::Operator)?;
        self.require_role(&user, Role::User)?;
        if hno == vno {
            return Err(ContractError::SelfRoam);
        }
        if pointers.is_empty() {
            return Err(ContractError::EmptyPointers);
        }
        if pointers.iter().any(|p| p.query.is_empty()) {
            return Err(ContractError::EmptyQuery);
        }
        let contract_id = mnoc_contract_id(&hno, &vno, &user, &pointers, issued_at);
        if self.mnocs.contains_key(&contract_id) {
            return Err(ContractError::DuplicateContract(contract_id));
        }
        self.mnocs.insert(
            contract_id,
            MnocContract {
                contract_id,
                hno,
                vno,
                user,
                pointers,
                permissions: BTreeSet::new(),
                status: MnocStatus::Proposed,
                issued_at,
            },
        );
        for party in [user, hno, vno] {
            self.ccs
                .get_mut(&party)
                .expect("registered parties own a cursory contract")
                .relationships
                .push((contract_id, RelationshipStatus::New));
        }
        Ok(contract_id)
    }

    /// Records the user's signed acceptance of the MNOC terms.
    pub fn accept_terms(
        &mut self,
        mnoc_id: &Digest,
        acceptance: &Transaction,
    ) -> Result<(), ContractError> {
        if acceptance.kind != TxKind::TermsAcceptance {
            return Err(ContractError::KindMismatch {
                tx: acceptance.kind,
                payload: TxKind::TermsAcceptance,
            });
        }
        if !acceptance.signature_valid() {
            return Err(ContractError::BadSignature);
        }
        match ContractAction::decode(&acceptance.payload)? {
            ContractAction::AcceptTerms { mnoc_id: id } if id == *mnoc_id => {}
            other => {
                return Err(ContractError::KindMismatch {
                    tx: acceptance.kind,
                    payload: other.kind(),
                })
            }
        }
        let mnoc = self.mnoc_or_err(mnoc_id)?;
        if acceptance.signer != mnoc.user {
            return Err(ContractError::WrongSigner {
                expected: mnoc.user,
                found: acceptance.signer,
            });
        }
        if mnoc.status != MnocStatus::Proposed {
            return Err(ContractError::WrongState {
                mnoc_id: *mnoc_id,
                status: mnoc.status,
                relationship: None,
            });
        }
        let user = mnoc.user;
        let rel = self.ccs.get(&user).and_then(|cc| cc.status_of(mnoc_id));
        if matches!(rel, Some(RelationshipStatus::Rejected) | None) {
            return Err(ContractError::WrongState {
                mnoc_id: *mnoc_id,
                status: mnoc.status,
                relationship: rel,
            });
        }
        self.mnocs.get_mut(mnoc_id).unwrap().status = MnocStatus::UserAccepted;
        self.set_relationship(&user, mnoc_id, RelationshipStatus::Accepted);
        Ok(())
    }

    /// Grants the visited operator access to one of the contract's queries.
    /// The first grant activates the contract.
    pub fn grant_permission(
        &mut self,
        mnoc_id: &Digest,
        grantee: Address,
        query: &str,
    ) -> Result<(), ContractError> {
        let mnoc = self.mnoc_or_err(mnoc_id)?;
        if !matches!(mnoc.status, MnocStatus::UserAccepted | MnocStatus::Active) {
            return Err(ContractError::WrongState {
                mnoc_id: *mnoc_id,
                status: mnoc.status,
                relationship: None,
            });
        }
        if mnoc.pointer(query).is_none() {
            return Err(ContractError::UnknownQuery(query.to_string()));
        }
        if grantee != mnoc.vno {
            return Err(ContractError::NotCounterparty(grantee));
        }
        let (hno, vno) = (mnoc.hno, mnoc.vno);
        let first = mnoc.status == MnocStatus::UserAccepted;
        let mnoc = self.mnocs.get_mut(mnoc_id).unwrap();
        mnoc.permissions.insert((grantee, query.to_string()));
        mnoc.status = MnocStatus::Active;
        if first {
            self.set_relationship(&hno, mnoc_id, RelationshipStatus::Accepted);
            self.set_relationship(&vno, mnoc_id, RelationshipStatus::Accepted);
        }
        Ok(())
    }

    /// Updates one cursory relationship on behalf of `actor`.
    ///
    /// Owners may mark their own open relationships `AwaitingUpdate` or
    /// `Rejected`; a home operator may mark its user's relationship
    /// `AwaitingUpdate`. `Accepted` and `Rejected` entries are final.
    pub fn set_cc_status(
        &mut self,
        actor: Address,
        owner: Address,
        mnoc_id: &Digest,
        status: RelationshipStatus,
    ) -> Result<(), ContractError> {
        let cc = self
            .ccs
            .get(&owner)
            .ok_or(ContractError::UnknownOwner(owner))?;
        let current = cc
            .status_of(mnoc_id)
            .ok_or(ContractError::UnknownRelationship {
                owner,
                mnoc_id: *mnoc_id,
            })?;
        let mnoc = self.mnoc_or_err(mnoc_id)?;
        if matches!(
            current,
            RelationshipStatus::Accepted | RelationshipStatus::Rejected
        ) {
            return Err(ContractError::WrongState {
                mnoc_id: *mnoc_id,
                status: mnoc.status,
                relationship: Some(current),
            });
        }
        let allowed = match status {
            RelationshipStatus::Rejected => actor == owner,
            RelationshipStatus::AwaitingUpdate => {
                actor == owner || (actor == mnoc.hno && owner == mnoc.user)
            }
            RelationshipStatus::New | RelationshipStatus::Accepted => false,
        };
        if !allowed {
            return Err(ContractError::NotAuthorized {
                actor,
                owner,
                status,
            });
        }
        self.set_relationship(&owner, mnoc_id, status);
        Ok(())
    }

    /// Relationships of `owner` in insertion order.
    pub fn poll_cc(
        &self,
        owner: &Address,
    ) -> Result<Vec<(Digest, RelationshipStatus)>, ContractError> {
        self.ccs
            .get(owner)
            .map(|cc| cc.relationships.clone())
            .ok_or(ContractError::UnknownOwner(*owner))
    }

    fn settle(
        &mut self,
        kind: TxKind,
        tx: &Transaction,
        s: &Settlement,
    ) -> Result<(), ContractError> {
        let mnoc = self.mnoc_or_err(&s.mnoc_id)?;
        if mnoc.status != MnocStatus::Active {
            return Err(ContractError::WrongState {
                mnoc_id: s.mnoc_id,
                status: mnoc.status,
                relationship: None,
            });
        }
        let expected_payer = if kind == TxKind::Charge {
            mnoc.user
        } else {
            mnoc.hno
        };
        if s.payer != expected_payer || s.payee != mnoc.vno {
            return Err(ContractError::PartyMismatch);
        }
        if tx.signer != s.payer {
            return Err(ContractError::WrongSigner {
                expected: s.payer,
                found: tx.signer,
            });
        }
        if tx.amount != s.amount {
            return Err(ContractError::AmountMismatch {
                tx: tx.amount,
                payload: s.amount,
            });
        }
        self.mnocs.get_mut(&s.mnoc_id).unwrap().status = MnocStatus::Closed;
        Ok(())
    }

    /// Decodes `tx` and dispatches it to the matching transition.
    ///
    /// Every guard runs before any state is written, so an error leaves the
    /// world exactly as it was.
    pub fn apply_action(&mut self, tx: &Transaction) -> Result<Applied, ContractError> {
        let action = ContractAction::decode(&tx.payload)?;
        if action.kind() != tx.kind {
            return Err(ContractError::KindMismatch {
                tx: tx.kind,
                payload: action.kind(),
            });
        }
        if !tx.signature_valid() {
            return Err(ContractError::BadSignature);
        }
        let expect_signer = |expected: Address| {
            if tx.signer == expected {
                Ok(())
            } else {
                Err(ContractError::WrongSigner {
                    expected,
                    found: tx.signer,
                })
            }
        };
        match action {
            ContractAction::RegisterIdentity {
                id_string,
                address,
                role,
            } => {
                expect_signer(address)?;
                self.register_identity(&id_string, address, role)?;
                Ok(Applied::Registered(address))
            }
            ContractAction::IssueMnoc {
                hno,
                vno,
                user,
                pointers,
            } => {
                if tx.signer != hno && tx.signer != vno {
                    return Err(ContractError::WrongSigner {
                        expected: vno,
                        found: tx.signer,
                    });
                }
                let id = self.issue_mnoc(hno, vno, user, pointers, tx.timestamp)?;
                Ok(Applied::Issued(id))
            }
            ContractAction::AcceptTerms { mnoc_id } => {
                self.accept_terms(&mnoc_id, tx)?;
                Ok(Applied::Accepted(mnoc_id))
            }
            ContractAction::GrantPermission {
                mnoc_id,
                grantee,
                query,
            } => {
                let hno = self.mnoc_or_err(&mnoc_id)?.hno;
                expect_signer(hno)?;
                self.grant_permission(&mnoc_id, grantee, &query)?;
                Ok(Applied::Granted(mnoc_id))
            }
            ContractAction::UpdateCc {
                owner,
                mnoc_id,
                status,
            } => {
                self.set_cc_status(tx.signer, owner, &mnoc_id, status)?;
                Ok(Applied::CcUpdated(mnoc_id))
            }
            ContractAction::Charge(s) => {
                self.settle(TxKind::Charge, tx, &s)?;
                Ok(Applied::Settled(s.mnoc_id))
            }
            ContractAction::Transfer(s) => {
                self.settle(TxKind::Transfer, tx, &s)?;
                Ok(Applied::Settled(s.mnoc_id))
            }
        }
    }

    /// Folds `txs` into a fresh world in order. Transactions whose guards
    /// fail change nothing and are returned with their position.
    pub fn replay<'a>(
        policy: Policy,
        txs: impl IntoIterator<Item = &'a Transaction>,
    ) -> (Self, Vec<(usize, ContractError)>) {
        let mut world = ContractWorld::new(policy);
        let mut rejected = Vec::new();
        for (i, tx) in txs.into_iter().enumerate() {
            if let Err(e) = world.apply_action(tx) {
                rejected.push((i, e));
            }
        }
        (world, rejected)
    }
}
