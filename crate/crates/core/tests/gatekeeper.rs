use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roamchain::contracts::{ContractAction, ContractWorld, Policy, QueryPointer, Role, Settlement};
use roamchain::gatekeeper::{AccessRequest, AccessResponse, DenyReason, RecordStore};
use roamchain::{Address, Digest};

struct Fixture {
    world: ContractWorld,
    operators: Vec<Address>,
    stores: Vec<RecordStore>,
    /// Pointer anchored in an MNOC, by (store index, query).
    anchored: BTreeMap<(usize, String), QueryPointer>,
    /// (store index, requester, query) that should be served.
    allowed: BTreeSet<(usize, Address, String)>,
}

fn apply(world: &mut ContractWorld, action: ContractAction, signer: Address, ts: u64) {
    let tx = action.into_tx(signer, ts).unwrap();
    world.apply_action(&tx).unwrap();
}

/// Eight users with homes 0/1 and visited networks 2/3. User `k`'s MNOC
/// ends Proposed, UserAccepted, Active or Closed by `k % 4`.
fn fixture() -> Fixture {
    let operators: Vec<Address> = (0..4)
        .map(|i| Address::from_label(&format!("op{i}")))
        .collect();
    let mut world = ContractWorld::new(Policy::open());
    for (i, a) in operators.iter().enumerate() {
        apply(
            &mut world,
            ContractAction::RegisterIdentity {
                id_string: format!("MNO-{i}"),
                address: *a,
                role: Role::Operator,
            },
            *a,
            1,
        );
    }
    let mut stores: Vec<RecordStore> = operators.iter().map(|a| RecordStore::new(*a)).collect();
    let mut anchored = BTreeMap::new();
    let mut allowed = BTreeSet::new();
    for k in 0..8usize {
        let user = Address::from_label(&format!("user{k}"));
        apply(
            &mut world,
            ContractAction::RegisterIdentity {
                id_string: format!("8900{k:06}"),
                address: user,
                role: Role::User,
            },
            user,
            1,
        );
        let (h, v) = (k % 2, 2 + (k / 2) % 2);
        let charging = format!("charging/{k}");
        let profile = format!("profile/{k}");
        stores[h]
            .put_record(&charging, format!("usage {k}").into_bytes())
            .unwrap();
        stores[h]
            .put_record(&profile, format!("profile {k}").into_bytes())
            .unwrap();
        let pointers = vec![
            stores[h].make_pointer(&charging).unwrap(),
            stores[h].make_pointer(&profile).unwrap(),
        ];
        for p in &pointers {
            anchored.insert((h, p.query.clone()), p.clone());
        }
        let (hno, vno) = (operators[h], operators[v]);
        apply(
            &mut world,
            ContractAction::IssueMnoc {
                hno,
                vno,
                user,
                pointers: pointers.clone(),
            },
            vno,
            2,
        );
        let id = world.mnocs().find(|m| m.user == user).unwrap().contract_id;
        if k % 4 >= 1 {
            apply(
                &mut world,
                ContractAction::AcceptTerms { mnoc_id: id },
                user,
                3,
            );
        }
        if k % 4 >= 2 {
            apply(
                &mut world,
                ContractAction::GrantPermission {
                    mnoc_id: id,
                    grantee: vno,
                    query: charging.clone(),
                },
                hno,
                4,
            );
        }
        match k % 4 {
            2 => {
                allowed.insert((h, vno, charging));
            }
            3 => apply(
                &mut world,
                ContractAction::Charge(Settlement {
                    mnoc_id: id,
                    payer: user,
                    payee: vno,
                    amount: 10,
                    volume: 1,
                }),
                user,
                5,
            ),
            _ => {}
        }
    }
    Fixture {
        world,
        operators,
        stores,
        anchored,
        allowed,
    }
}

#[test]
fn randomized_requests_match_permissions() {
    let f = fixture();
    assert_eq!(f.allowed.len(), 2);
    let queries: Vec<String> = (0..8)
        .flat_map(|k| [format!("charging/{k}"), format!("profile/{k}")])
        .chain(["charging/none".to_string()])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut granted = 0;
    for _ in 0..100 {
        // Bias towards permitted triples so both outcomes are exercised.
        let (store, requester, query) = if rng.random_bool(0.3) {
            let pick = rng.random_range(0..f.allowed.len());
            f.allowed.iter().nth(pick).unwrap().clone()
        } else {
            (
                rng.random_range(0..4),
                f.operators[rng.random_range(0..4)],
                queries[rng.random_range(0..queries.len())].clone(),
            )
        };
        let forged = rng.random_bool(0.1);
        let pointer = match f.anchored.get(&(store, query.clone())) {
            Some(p) if !forged => p.clone(),
            _ => QueryPointer {
                query: query.clone(),
                content_hash: Digest::of(&rng.random::<[u8; 8]>()),
            },
        };
        let expect = !forged && f.allowed.contains(&(store, requester, query.clone()));
        let resp = f.stores[store].serve_request(
            &f.world,
            &AccessRequest {
                requester,
                pointer: pointer.clone(),
            },
        );
        assert_eq!(resp.is_granted(), expect, "{store} {requester} {query}");
        match resp {
            AccessResponse::Granted(data) => {
                granted += 1;
                assert_eq!(Digest::of(&data), pointer.content_hash);
            }
            AccessResponse::Denied(r) => assert_eq!(r, DenyReason::NoPermission),
        }
    }
    assert!(granted > 0);
}

#[test]
fn tampered_records_are_refused() {
    let mut f = fixture();
    for (store, requester, query) in f.allowed.clone() {
        let pointer = f.anchored[&(store, query.clone())].clone();
        f.stores[store]
            .put_record(&query, b"rewritten".to_vec())
            .unwrap();
        let req = AccessRequest { requester, pointer };
        assert_eq!(
            f.stores[store].serve_request(&f.world, &req),
            AccessResponse::Denied(DenyReason::HashMismatch)
        );
    }
}

#[test]
fn deleted_record_is_unknown() {
    let f = fixture();
    let (store, requester, query) = f.allowed.iter().next().unwrap().clone();
    let pointer = f.anchored[&(store, query)].clone();
    let empty = RecordStore::new(f.stores[store].owner());
    assert_eq!(
        empty.serve_request(&f.world, &AccessRequest { requester, pointer }),
        AccessResponse::Denied(DenyReason::UnknownQuery)
    );
}

#[test]
fn dump_round_trip_keeps_serving() {
    let f = fixture();
    let (store, requester, query) = f.allowed.iter().next().unwrap().clone();
    let reloaded = RecordStore::load(&f.stores[store].dump()).unwrap();
    let pointer = f.anchored[&(store, query)].clone();
    assert!(reloaded
        .serve_request(&f.world, &AccessRequest { requester, pointer })
        .is_granted());
}
