//! Line-oriented world export for golden-file comparisons.

use serde::Serialize;

use crate::crypto::{Address, Digest};

use super::{ContractWorld, MnocStatus, QueryPointer, RelationshipStatus, Role};

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record<'a> {
    Registrar {
        id: &'a str,
        address: Address,
        role: Role,
    },
    Mnoc {
        contract_id: Digest,
        hno: Address,
        vno: Address,
        user: Address,
        status: MnocStatus,
        issued_at: u64,
        pointers: &'a [QueryPointer],
        permissions: Vec<(Address, &'a str)>,
    },
    Cc {
        owner: Address,
        relationships: &'a [(Digest, RelationshipStatus)],
    },
}

/// One JSON object per line: registrar entries by id string, then MNOCs by
/// contract id, then cursory contracts by owner address.
pub fn world_snapshot(world: &ContractWorld) -> String {
    let mut records = Vec::new();
    for e in world.registrar() {
        records.push(Record::Registrar {
            id: &e.id_string,
            address: e.address,
            role: e.role,
        });
    }
    for m in world.mnocs() {
        records.push(Record::Mnoc {
            contract_id: m.contract_id,
            hno: m.hno,
            vno: m.vno,
            user: m.user,
            status: m.status,
            issued_at: m.issued_at,
            pointers: &m.pointers,
            permissions: m
                .permissions
                .iter()
                .map(|(a, q)| (*a, q.as_str()))
                .collect(),
        });
    }
    for cc in world.ccs() {
        records.push(Record::Cc {
            owner: cc.owner,
            relationships: &cc.relationships,
        });
    }
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&r).expect("snapshot records serialize"));
        out.push('\n');
    }
    out
}
