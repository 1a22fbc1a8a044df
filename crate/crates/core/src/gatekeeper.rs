//! Operator-side record stores answering query-string requests.
//!
//! Queries are exact-match strings. A [`QueryPointer`] anchors the digest of
//! the data a query returned when an MNOC was issued; the store re-hashes on
//! every read so that any alteration at the source is detected.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{DecodeError, Decoder, Encoder};
use crate::contracts::{ContractWorld, MnocStatus, QueryPointer};
use crate::crypto::{Address, Digest};
use crate::fixed::Fiat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatekeeperError {
    #[error("query string must be nonempty")]
    EmptyQuery,
    #[error("no record for query {0:?}")]
    UnknownQuery(String),
    #[error("record for {query:?} hashes to {found:?}, pointer expects {expected:?}")]
    HashMismatch {
        query: String,
        expected: Digest,
        found: Digest,
    },
    #[error("malformed record dump at line {line}: {reason}")]
    BadDump { line: usize, reason: String },
}

/// An operator's off-chain database, keyed by query string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordStore {
    owner: Address,
    records: BTreeMap<String, Vec<u8>>,
}

impl RecordStore {
    pub fn new(owner: Address) -> Self {
        RecordStore {
            owner,
            records: BTreeMap::new(),
        }
    }

    pub fn owner(&self) -> Address {
        self.owner
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Stores or overwrites the record behind `query`.
    pub fn put_record(&mut self, query: &str, data: Vec<u8>) -> Result<(), GatekeeperError> {
        if query.is_empty() {
            return Err(GatekeeperError::EmptyQuery);
        }
        self.records.insert(query.to_string(), data);
        Ok(())
    }

    pub fn get(&self, query: &str) -> Option<&[u8]> {
        self.records.get(query).map(Vec::as_slice)
    }

    /// Pointer anchoring the current content of `query`.
    pub fn make_pointer(&self, query: &str) -> Result<QueryPointer, GatekeeperError> {
        let data = self
            .records
            .get(query)
            .ok_or_else(|| GatekeeperError::UnknownQuery(query.to_string()))?;
        Ok(QueryPointer {
            query: query.to_string(),
            content_hash: Digest::of(data),
        })
    }

    /// Runs the pointer's query and checks the result against its anchor.
    pub fn execute_query(&self, pointer: &QueryPointer) -> Result<&[u8], GatekeeperError> {
        let data = self
            .records
            .get(&pointer.query)
            .ok_or_else(|| GatekeeperError::UnknownQuery(pointer.query.clone()))?;
        let found = Digest::of(data);
        if found != pointer.content_hash {
            return Err(GatekeeperError::HashMismatch {
                query: pointer.query.clone(),
                expected: pointer.content_hash,
                found,
            });
        }
        Ok(data)
    }

    /// Answers another operator's request against a contract snapshot.
    ///
    /// Access is granted only when an Active MNOC whose home operator owns
    /// this store lists `(requester, query)` among its permissions and
    /// anchors exactly the requested pointer.
    pub fn serve_request(&self, world: &ContractWorld, req: &AccessRequest) -> AccessResponse {
        let permitted = world.mnocs().any(|m| {
            m.status == MnocStatus::Active
                && m.hno == self.owner
                && m.permits(&req.requester, &req.pointer.query)
                && m.pointer(&req.pointer.query) == Some(&req.pointer)
        });
        if !permitted {
            return AccessResponse::Denied(DenyReason::NoPermission);
        }
        match self.execute_query(&req.pointer) {
            Ok(data) => AccessResponse::Granted(data.to_vec()),
            Err(GatekeeperError::HashMismatch { .. }) => {
                AccessResponse::Denied(DenyReason::HashMismatch)
            }
            Err(_) => AccessResponse::Denied(DenyReason::UnknownQuery),
        }
    }

    /// Structured text dump: one JSON object per line, ordered by query.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(&serde_json::to_string(&DumpHeader { owner: self.owner }).unwrap());
        out.push('\n');
        for (query, data) in &self.records {
            let line = DumpRecord {
                query: query.clone(),
                data: hex::encode(data),
            };
            out.push_str(&serde_json::to_string(&line).unwrap());
            out.push('\n');
        }
        out
    }

    pub fn load(text: &str) -> Result<Self, GatekeeperError> {
        let bad = |line: usize, reason: String| GatekeeperError::BadDump { line, reason };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.is_empty());
        let (_, first) = lines
            .next()
            .ok_or_else(|| bad(1, "missing header".into()))?;
        let header: DumpHeader = serde_json::from_str(first).map_err(|e| bad(1, e.to_string()))?;
        let mut store = RecordStore::new(header.owner);
        for (i, line) in lines {
            let rec: DumpRecord =
                serde_json::from_str(line).map_err(|e| bad(i + 1, e.to_string()))?;
            let data = hex::decode(&rec.data).map_err(|e| bad(i + 1, e.to_string()))?;
            store
                .put_record(&rec.query, data)
                .map_err(|e| bad(i + 1, e.to_string()))?;
        }
        Ok(store)
    }
}

#[derive(Serialize, Deserialize)]
struct DumpHeader {
    owner: Address,
}

#[derive(Serialize, Deserialize)]
struct DumpRecord {
    query: String,
    data: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessRequest {
    pub requester: Address,
    pub pointer: QueryPointer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DenyReason {
    NoPermission,
    UnknownQuery,
    HashMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AccessResponse {
    Granted(Vec<u8>),
    Denied(DenyReason),
}

impl AccessResponse {
    pub fn is_granted(&self) -> bool {
        matches!(self, AccessResponse::Granted(_))
    }
}

/// A billable usage record held by the home operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChargingRecord {
    pub user: Address,
    pub service: String,
    pub volume: u64,
    pub unit_price: Fiat,
    pub currency: String,
}

impl ChargingRecord {
    pub fn total(&self) -> Fiat {
        self.unit_price
            .checked_mul_int(self.volume)
            .expect("charging total overflows")
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.address(&self.user)
            .str(&self.service)
            .u64(self.volume)
            .i64(self.unit_price.minor())
            .str(&self.currency);
        e.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(buf);
        let rec = ChargingRecord {
            user: d.address()?,
            service: d.str()?,
            volume: d.u64()?,
            unit_price: Fiat::from_minor(d.i64()?),
            currency: d.str()?,
        };
        d.finish()?;
        Ok(rec)
    }
}

impl fmt::Display for ChargingRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} x {} {} = {}",
            self.service,
            self.volume,
            self.unit_price,
            self.currency,
            self.total()
        )
    }
}
