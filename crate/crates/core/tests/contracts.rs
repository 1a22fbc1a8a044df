use roamchain::contracts::{
    world_snapshot, Applied, ContractAction, ContractError, ContractWorld, MnocStatus, Policy,
    QueryPointer, RelationshipStatus, Role, Settlement,
};
use roamchain::ledger::{Transaction, TxKind};
use roamchain::{Address, Digest};

use proptest::prelude::*;

struct Parties {
    hno: Address,
    vno: Address,
    user: Address,
    other_user: Address,
}

fn parties() -> Parties {
    Parties {
        hno: Address::from_label("operator:HNO"),
        vno: Address::from_label("operator:VNO"),
        user: Address::from_label("user:8901000000000000001"),
        other_user: Address::from_label("user:8901000000000000002"),
    }
}

fn pointers() -> Vec<QueryPointer> {
    vec![
        QueryPointer {
            query: "charging/8901000000000000001".into(),
            content_hash: Digest::of(b"charging record"),
        },
        QueryPointer {
            query: "profile/8901000000000000001".into(),
            content_hash: Digest::of(b"profile"),
        },
    ]
}

fn tx(action: ContractAction, signer: Address, ts: u64) -> Transaction {
    action.into_tx(signer, ts).unwrap()
}

/// register ×3, MnocIssue, TermsAcceptance, PermissionGrant.
fn lifecycle() -> (Vec<Transaction>, Digest) {
    let p = parties();
    let mut txs = vec![
        tx(
            ContractAction::RegisterIdentity {
                id_string: "HNO-001".into(),
                address: p.hno,
                role: Role::Operator,
            },
            p.hno,
            1,
        ),
        tx(
            ContractAction::RegisterIdentity {
                id_string: "VNO-002".into(),
                address: p.vno,
                role: Role::Operator,
            },
            p.vno,
            1,
        ),
        tx(
            ContractAction::RegisterIdentity {
                id_string: "8901000000000000001".into(),
                address: p.user,
                role: Role::User,
            },
            p.user,
            1,
        ),
        tx(
            ContractAction::IssueMnoc {
                hno: p.hno,
                vno: p.vno,
                user: p.user,
                pointers: pointers(),
            },
            p.vno,
            2,
        ),
    ];
    let mnoc_id = roamchain::contracts::mnoc_contract_id(&p.hno, &p.vno, &p.user, &pointers(), 2);
    txs.push(tx(ContractAction::AcceptTerms { mnoc_id }, p.user, 3));
    txs.push(tx(
        ContractAction::GrantPermission {
            mnoc_id,
            grantee: p.vno,
            query: pointers()[0].query.clone(),
        },
        p.hno,
        4,
    ));
    (txs, mnoc_id)
}

fn registered_world() -> ContractWorld {
    let p = parties();
    let mut w = ContractWorld::new(Policy::open());
    w.register_identity("HNO-001", p.hno, Role::Operator)
        .unwrap();
    w.register_identity("VNO-002", p.vno, Role::Operator)
        .unwrap();
    w.register_identity("8901000000000000001", p.user, Role::User)
        .unwrap();
    w.register_identity("8901000000000000002", p.other_user, Role::User)
        .unwrap();
    w
}

fn issued_world() -> (ContractWorld, Digest) {
    let p = parties();
    let mut w = registered_world();
    let id = w.issue_mnoc(p.hno, p.vno, p.user, pointers(), 2).unwrap();
    (w, id)
}

fn acceptance(id: Digest, signer: Address) -> Transaction {
    tx(ContractAction::AcceptTerms { mnoc_id: id }, signer, 3)
}

#[test]
fn register_creates_empty_cc() {
    let mut w = ContractWorld::new(Policy::open());
    let a = Address::from_label("fresh");
    w.register_identity("8901000000000000001", a, Role::User)
        .unwrap();
    assert_eq!(
        w.entry_by_address(&a).unwrap().id_string,
        "8901000000000000001"
    );
    assert_eq!(w.poll_cc(&a).unwrap(), vec![]);
}

#[test]
fn duplicate_registrations_rejected() {
    let mut w = registered_world();
    let err = w
        .register_identity(
            "8901000000000000001",
            Address::from_label("new"),
            Role::User,
        )
        .unwrap_err();
    assert!(matches!(err, ContractError::DuplicateId(_)));
    let err = w
        .register_identity("other-id", parties().user, Role::User)
        .unwrap_err();
    assert!(matches!(err, ContractError::DuplicateAddress(_)));
}

#[test]
fn allowlist_limits_operators() {
    let p = parties();
    let mut w = ContractWorld::new(Policy::participants([p.hno]));
    w.register_identity("HNO-001", p.hno, Role::Operator)
        .unwrap();
    let err = w
        .register_identity("VNO-002", p.vno, Role::Operator)
        .unwrap_err();
    assert_eq!(err, ContractError::PolicyDenied(p.vno));
    // Users are not gated by the operator allowlist.
    w.register_identity("8901000000000000001", p.user, Role::User)
        .unwrap();
}

#[test]
fn issue_mnoc_populates_ccs() {
    let p = parties();
    let (w, id) = issued_world();
    assert_eq!(w.mnoc(&id).unwrap().status, MnocStatus::Proposed);
    assert_eq!(
        w.poll_cc(&p.user).unwrap(),
        vec![(id, RelationshipStatus::New)]
    );
    assert_eq!(
        w.poll_cc(&p.hno).unwrap(),
        vec![(id, RelationshipStatus::New)]
    );
    assert_eq!(
        w.poll_cc(&p.vno).unwrap(),
        vec![(id, RelationshipStatus::New)]
    );
}

#[test]
fn issue_mnoc_guards() {
    let p = parties();
    let mut w = registered_world();
    assert!(matches!(
        w.issue_mnoc(p.hno, p.other_user, p.user, pointers(), 2),
        Err(ContractError::RoleMismatch {
            expected: Role::Operator,
            ..
        })
    ));
    assert_eq!(
        w.issue_mnoc(p.hno, p.hno, p.user, pointers(), 2),
        Err(ContractError::SelfRoam)
    );
    assert_eq!(
        w.issue_mnoc(p.hno, p.vno, p.user, vec![], 2),
        Err(ContractError::EmptyPointers)
    );
    let stranger = Address::from_label("stranger");
    assert_eq!(
        w.issue_mnoc(p.hno, p.vno, stranger, pointers(), 2),
        Err(ContractError::UnknownParty(stranger))
    );
}

#[test]
fn accept_terms_paths() {
    let p = parties();
    let (mut w, id) = issued_world();

    let err = w
        .accept_terms(&id, &acceptance(id, p.other_user))
        .unwrap_err();
    assert!(matches!(err, ContractError::WrongSigner { .. }));

    let mut forged = acceptance(id, p.user);
    forged.signature = Digest::of(b"forged");
    assert_eq!(
        w.accept_terms(&id, &forged),
        Err(ContractError::BadSignature)
    );

    w.accept_terms(&id, &acceptance(id, p.user)).unwrap();
    assert_eq!(w.mnoc(&id).unwrap().status, MnocStatus::UserAccepted);
    assert_eq!(
        w.cc(&p.user).unwrap().status_of(&id),
        Some(RelationshipStatus::Accepted)
    );
}

#[test]
fn replayed_acceptance_is_wrong_state() {
    let (txs, id) = lifecycle();
    let mut w = ContractWorld::new(Policy::open());
    for t in &txs {
        w.apply_action(t).unwrap();
    }
    assert_eq!(w.mnoc(&id).unwrap().status, MnocStatus::Active);
    let before = w.clone();
    let err = w.apply_action(&txs[4]).unwrap_err();
    assert!(matches!(
        err,
        ContractError::WrongState {
            status: MnocStatus::Active,
            ..
        }
    ));
    assert_eq!(w, before);
}

#[test]
fn grant_permission_paths() {
    let p = parties();
    let (mut w, id) = issued_world();
    let q = pointers()[0].query.clone();

    assert!(matches!(
        w.grant_permission(&id, p.vno, &q),
        Err(ContractError::WrongState {
            status: MnocStatus::Proposed,
            ..
        })
    ));

    w.accept_terms(&id, &acceptance(id, p.user)).unwrap();
    assert_eq!(
        w.grant_permission(&id, p.vno, "not-a-pointer"),
        Err(ContractError::UnknownQuery("not-a-pointer".into()))
    );
    assert_eq!(
        w.grant_permission(&id, p.hno, &q),
        Err(ContractError::NotCounterparty(p.hno))
    );

    w.grant_permission(&id, p.vno, &q).unwrap();
    let m = w.mnoc(&id).unwrap();
    assert_eq!(m.status, MnocStatus::Active);
    assert!(m.permits(&p.vno, &q));
    assert_eq!(
        w.cc(&p.hno).unwrap().status_of(&id),
        Some(RelationshipStatus::Accepted)
    );
}

#[test]
fn cc_status_updates_and_rejection_is_terminal() {
    let p = parties();
    let (mut w, id) = issued_world();

    // HNO flags a new roaming activity for its user.
    w.set_cc_status(p.hno, p.user, &id, RelationshipStatus::AwaitingUpdate)
        .unwrap();
    assert_eq!(
        w.poll_cc(&p.user).unwrap(),
        vec![(id, RelationshipStatus::AwaitingUpdate)]
    );

    // Only the owner may reject.
    assert!(matches!(
        w.set_cc_status(p.hno, p.user, &id, RelationshipStatus::Rejected),
        Err(ContractError::NotAuthorized { .. })
    ));
    w.set_cc_status(p.user, p.user, &id, RelationshipStatus::Rejected)
        .unwrap();

    // Acceptance after rejection hits the relationship guard.
    let err = w.accept_terms(&id, &acceptance(id, p.user)).unwrap_err();
    assert!(matches!(
        err,
        ContractError::WrongState {
            relationship: Some(RelationshipStatus::Rejected),
            ..
        }
    ));
    assert!(matches!(
        w.set_cc_status(p.user, p.user, &id, RelationshipStatus::AwaitingUpdate),
        Err(ContractError::WrongState { .. })
    ));
}

#[test]
fn cc_lookup_errors() {
    let p = parties();
    let (mut w, id) = issued_world();
    let stranger = Address::from_label("stranger");
    assert_eq!(
        w.poll_cc(&stranger),
        Err(ContractError::UnknownOwner(stranger))
    );
    assert!(matches!(
        w.set_cc_status(
            p.other_user,
            p.other_user,
            &id,
            RelationshipStatus::Rejected
        ),
        Err(ContractError::UnknownRelationship { .. })
    ));
}

#[test]
fn lifecycle_replay_reaches_active() {
    let (txs, id) = lifecycle();
    assert_eq!(txs.len(), 6);
    let (w, rejected) = ContractWorld::replay(Policy::open(), &txs);
    assert!(rejected.is_empty(), "{rejected:?}");
    assert_eq!(w.mnoc(&id).unwrap().status, MnocStatus::Active);

    let (again, _) = ContractWorld::replay(Policy::open(), &txs);
    assert_eq!(again, w);
    assert_eq!(world_snapshot(&again), world_snapshot(&w));
}

#[test]
fn malformed_payload_is_decode_error() {
    let mut w = registered_world();
    let before = w.clone();
    let bad =
        Transaction::new_signed(TxKind::MnocIssue, vec![1, 2, 3], parties().vno, 0, 1).unwrap();
    assert!(matches!(
        w.apply_action(&bad),
        Err(ContractError::Decode(_))
    ));
    assert_eq!(w, before);
}

#[test]
fn kind_must_match_payload() {
    let mut w = registered_world();
    let payload = ContractAction::AcceptTerms {
        mnoc_id: Digest::ZERO,
    }
    .encode();
    let t = Transaction::new_signed(TxKind::CcUpdate, payload, parties().user, 0, 1).unwrap();
    assert!(matches!(
        w.apply_action(&t),
        Err(ContractError::KindMismatch { .. })
    ));
}

#[test]
fn grant_must_be_signed_by_hno() {
    let (mut txs, _) = lifecycle();
    let p = parties();
    let last = txs.pop().unwrap();
    let action = ContractAction::decode(&last.payload).unwrap();
    let (mut w, _) = ContractWorld::replay(Policy::open(), &txs);
    let wrong = action.into_tx(p.vno, 4).unwrap();
    assert!(matches!(
        w.apply_action(&wrong),
        Err(ContractError::WrongSigner { .. })
    ));
}

#[test]
fn settlement_closes_active_contract() {
    let p = parties();
    let (txs, id) = lifecycle();
    let (mut w, _) = ContractWorld::replay(Policy::open(), &txs);
    let charge = |payer, amount_tx: u64, amount: u64| {
        let s = Settlement {
            mnoc_id: id,
            payer,
            payee: p.vno,
            amount,
            volume: 3,
        };
        let mut t = ContractAction::Charge(s).into_tx(payer, 5).unwrap();
        if amount_tx != amount {
            t = Transaction::new_signed(TxKind::Charge, t.payload, payer, amount_tx, 5).unwrap();
        }
        t
    };
    assert_eq!(
        w.apply_action(&charge(p.hno, 6, 6)),
        Err(ContractError::PartyMismatch)
    );
    assert!(matches!(
        w.apply_action(&charge(p.user, 7, 6)),
        Err(ContractError::AmountMismatch { .. })
    ));
    assert_eq!(
        w.apply_action(&charge(p.user, 6, 6)),
        Ok(Applied::Settled(id))
    );
    assert_eq!(w.mnoc(&id).unwrap().status, MnocStatus::Closed);
    assert!(matches!(
        w.apply_action(&charge(p.user, 6, 6)),
        Err(ContractError::WrongState {
            status: MnocStatus::Closed,
            ..
        })
    ));
}

#[test]
fn snapshot_is_line_per_record() {
    let (txs, _) = lifecycle();
    let (w, _) = ContractWorld::replay(Policy::open(), &txs);
    let snap = world_snapshot(&w);
    // 3 registrar entries, 1 MNOC, 3 cursory contracts.
    assert_eq!(snap.lines().count(), 7);
    assert!(snap
        .lines()
        .all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    assert!(snap.contains("\"status\":\"Active\""));
}

fn status_rank(s: MnocStatus) -> u8 {
    s as u8
}

proptest! {
    /// Applying an arbitrary interleaving (with repeats) of lifecycle and
    /// hostile transactions never moves an MNOC status backwards, failed
    /// transactions leave the world unchanged, and every permission follows
    /// an accepted user signature.
    #[test]
    fn status_monotone_and_atomic(order in proptest::collection::vec(0usize..10, 0..40)) {
        let p = parties();
        let (mut pool, id) = lifecycle();
        pool.push(tx(ContractAction::UpdateCc { owner: p.user, mnoc_id: id, status: RelationshipStatus::Rejected }, p.user, 3));
        pool.push(tx(ContractAction::UpdateCc { owner: p.user, mnoc_id: id, status: RelationshipStatus::AwaitingUpdate }, p.hno, 3));
        pool.push(acceptance(id, p.other_user));
        pool.push(tx(ContractAction::Charge(Settlement { mnoc_id: id, payer: p.user, payee: p.vno, amount: 4, volume: 2 }), p.user, 6));

        let mut w = ContractWorld::new(Policy::open());
        let mut last_rank = 0u8;
        let mut accepted_seen = false;
        for i in order {
            let t = &pool[i];
            let before = w.clone();
            match w.apply_action(t) {
                Ok(Applied::Accepted(_)) => accepted_seen = true,
                Ok(_) => {}
                Err(_) => prop_assert_eq!(&w, &before),
            }
            if let Some(m) = w.mnoc(&id) {
                prop_assert!(status_rank(m.status) >= last_rank);
                last_rank = status_rank(m.status);
                if !m.permissions.is_empty() {
                    prop_assert!(accepted_seen);
                }
            }
            // Registrar bijectivity.
            for e in w.registrar() {
                prop_assert_eq!(&w.entry_by_address(&e.address).unwrap().id_string, &e.id_string);
            }
        }
    }
}
