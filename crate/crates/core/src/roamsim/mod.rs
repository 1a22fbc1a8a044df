//! Deterministic agent-based simulation of the roaming lifecycle.
//!
//! Everything that happens is a ledger transaction applied to a
//! [`ContractWorld`] as it is emitted, so replaying the final chain yields
//! the final world. Time is a tick counter; each nonempty tick seals one
//! block. Tick 1 registers every operator and subscriber; roamers then make
//! a single attempt each at a seeded tick in `2..=ticks + 1`.

mod config;
mod metrics;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::contracts::{
    Applied, ContractAction, ContractError, ContractWorld, Policy, RelationshipStatus, Role,
    Settlement,
};
use crate::crypto::{Address, Digest};
use crate::fixed::{convert_price, ConversionRate, Crypto, Fiat};
use crate::gatekeeper::{
    AccessRequest, AccessResponse, ChargingRecord, DenyReason, GatekeeperError, RecordStore,
};
use crate::ledger::{Chain, CoinAgeLedger, Ledger, LedgerError, Transaction};

pub use config::{
    ConfigError, ConsensusSection, CountrySection, OperatorSection, ScenarioConfig, ScenarioSection,
};
pub use metrics::{Audit, MetricsReport, OperatorMetrics, SessionCounts};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Gatekeeper(#[from] GatekeeperError),
    #[error("record access denied: {0:?}")]
    AccessDenied(DenyReason),
    #[error("{payer} cannot pay {needed}, balance {available}")]
    InsufficientFunds {
        payer: Address,
        needed: String,
        available: String,
    },
    #[error("{0} is not registered")]
    NotRegistered(Address),
    #[error("visited operator is the user's home operator")]
    SameOperator,
    #[error("session is {0:?}, settlement needs Active")]
    NotActive(SessionState),
    #[error("charging record disagrees with the session")]
    RecordMismatch,
    #[error("amount overflow")]
    Overflow,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UserAgent {
    pub id_string: String,
    pub address: Address,
    /// Index of the home operator.
    pub home: usize,
    /// Willingness to pay, fiat per month.
    pub theta: f64,
    pub wallet: Fiat,
    pub initial_wallet: Fiat,
    /// Usage units consumed if the user roams.
    pub volume: u64,
    /// Visited operator and tick of the single roaming attempt, if any.
    pub roams_to: Option<(usize, u64)>,
    /// MNOCs whose terms (privacy and charging) the user accepted.
    pub privacy_accepted: BTreeSet<Digest>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tariff {
    pub p: Fiat,
    pub c: Crypto,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorAgent {
    pub name: String,
    pub id_string: String,
    pub address: Address,
    pub country: usize,
    pub tariff: Tariff,
    pub rate: ConversionRate,
    pub crypto_balance: Crypto,
    pub initial_crypto: Crypto,
    /// Fiat collected from visiting users.
    pub roaming_fiat: Fiat,
    pub crypto_in: Crypto,
    pub crypto_out: Crypto,
    pub store: RecordStore,
    pub preference: Vec<usize>,
    /// Potential users drawn, subscribed or not.
    pub potential_users: u64,
    pub subscribers: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SessionState {
    Requested,
    TermsOffered,
    Accepted,
    Rejected,
    Active,
    Settled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SettlementMode {
    /// Same country: operators settle between themselves in cryptocurrency.
    National,
    /// Different countries: the user is charged in fiat by the VNO.
    International,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoamingSession {
    pub user: usize,
    pub hno: usize,
    pub vno: usize,
    pub mnoc_id: Option<Digest>,
    pub state: SessionState,
    /// Fiat per usage unit.
    pub offered_price: Fiat,
    pub volume: u64,
}

impl RoamingSession {
    fn advance(&mut self, to: SessionState) {
        debug_assert!(to > self.state);
        self.state = to;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AgreementMode {
    /// Bilateral agreements between every pair of operators.
    PeerToPeer,
    /// One registrar entry per operator.
    Blockchain,
}

pub fn agreement_count(n: u64, mode: AgreementMode) -> u64 {
    match mode {
        AgreementMode::PeerToPeer => n * n.saturating_sub(1) / 2,
        AgreementMode::Blockchain => n,
    }
}

/// Accept iff the offered fiat price is within the user's willingness to pay.
pub fn accepts(offer: Fiat, theta: f64) -> bool {
    offer.to_f64() <= theta
}

pub const CHARGING_PREFIX: &str = "charging/";
pub const PROFILE_PREFIX: &str = "profile/";

/// Mutable simulation state.
pub struct Simulation {
    config: ScenarioConfig,
    pub users: Vec<UserAgent>,
    pub operators: Vec<OperatorAgent>,
    world: ContractWorld,
    ledger: Ledger,
    pending: Vec<Transaction>,
    sessions: Vec<RoamingSession>,
}

impl Simulation {
    /// Draws every agent from the seeded generator. Nothing is on the chain
    /// yet; see [`Simulation::register_all`].
    pub fn new(config: ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.scenario.seed);
        let n_ops = config.operators.len();

        let mut operators = Vec::with_capacity(n_ops);
        for (i, o) in config.operators.iter().enumerate() {
            let address = Address::from_label(&format!("operator:{}", o.name));
            let country = config.country_index(&o.country).expect("validated");
            let preference = if o.vno_preference.is_empty() {
                if n_ops > 1 {
                    vec![(i + 1) % n_ops]
                } else {
                    vec![]
                }
            } else {
                o.vno_preference
                    .iter()
                    .map(|v| config.operator_index(v).expect("validated"))
                    .collect()
            };
            operators.push(OperatorAgent {
                name: o.name.clone(),
                id_string: format!("MNO-{}", o.code),
                address,
                country,
                tariff: Tariff {
                    p: o.p,
                    c: o.c,
                    t: o.t,
                },
                rate: o.rate,
                crypto_balance: o.initial_crypto,
                initial_crypto: o.initial_crypto,
                roaming_fiat: Fiat::ZERO,
                crypto_in: Crypto::ZERO,
                crypto_out: Crypto::ZERO,
                store: RecordStore::new(address),
                preference,
                potential_users: 0,
                subscribers: 0,
            });
        }

        let mut users = Vec::new();
        for (h, o) in config.operators.iter().enumerate() {
            let country = &config.countries[operators[h].country];
            let exp = Exp::new(country.lambda).expect("lambda validated");
            let first = users.len();
            for k in 0..o.users {
                operators[h].potential_users += 1;
                let theta: f64 = exp.sample(&mut rng);
                let volume = rng.random_range(0..=config.scenario.volume_max);
                if theta < country.theta_bar {
                    continue;
                }
                let id_string = format!("89{:02}{}{:08}", operators[h].country + 1, o.code, k);
                let address = Address::from_label(&id_string);
                operators[h].subscribers += 1;
                operators[h]
                    .store
                    .put_record(
                        &format!("{PROFILE_PREFIX}{id_string}"),
                        format!("iccid={id_string};home={}", o.name).into_bytes(),
                    )
                    .expect("nonempty query");
                users.push(UserAgent {
                    id_string,
                    address,
                    home: h,
                    theta,
                    wallet: o.user_wallet,
                    initial_wallet: o.user_wallet,
                    volume,
                    roams_to: None,
                    privacy_accepted: BTreeSet::new(),
                });
            }
            let vno = operators[h].preference.iter().copied().find(|&v| v != h);
            if let Some(vno) = vno {
                let mut idx: Vec<usize> = (first..users.len()).collect();
                idx.shuffle(&mut rng);
                let roamers = (idx.len() as f64 * config.scenario.roamer_fraction).round() as usize;
                for &u in &idx[..roamers] {
                    let tick = 2 + rng.random_range(0..config.scenario.ticks);
                    users[u].roams_to = Some((vno, tick));
                }
            }
        }

        let mut stake = CoinAgeLedger::new();
        for o in &operators {
            let amount = o.initial_crypto.minor() as u64;
            if amount > 0 {
                stake.add_holding(o.address, amount, 0);
            }
        }
        let ledger = Ledger::new(config.consensus_config(), stake)?;
        let world = ContractWorld::new(Policy::participants(operators.iter().map(|o| o.address)));
        Ok(Simulation {
            config,
            users,
            operators,
            world,
            ledger,
            pending: Vec::new(),
            sessions: Vec::new(),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn world(&self) -> &ContractWorld {
        &self.world
    }

    pub fn chain(&self) -> &Chain {
        self.ledger.chain()
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn sessions(&self) -> &[RoamingSession] {
        &self.sessions
    }

    pub fn pending(&self) -> &[Transaction] {
        &self.pending
    }

    /// Signs `action`, applies it to the world and queues it for the next block.
    fn submit(
        &mut self,
        action: ContractAction,
        signer: Address,
        tick: u64,
    ) -> Result<Applied, SimError> {
        let tx = action.into_tx(signer, tick)?;
        let applied = self.world.apply_action(&tx)?;
        self.pending.push(tx);
        Ok(applied)
    }

    /// Registers all operators, then all subscribers.
    pub fn register_all(&mut self, tick: u64) -> Result<(), SimError> {
        let mut regs = Vec::new();
        for o in &self.operators {
            regs.push((o.id_string.clone(), o.address, Role::Operator));
        }
        for u in &self.users {
            regs.push((u.id_string.clone(), u.address, Role::User));
        }
        for (id_string, address, role) in regs {
            self.submit(
                ContractAction::RegisterIdentity {
                    id_string,
                    address,
                    role,
                },
                address,
                tick,
            )?;
        }
        Ok(())
    }

    /// Seals queued transactions into one block. Empty ticks produce nothing.
    pub fn seal(&mut self, tick: u64) -> Result<(), SimError> {
        if self.pending.is_empty() {
            return Ok(());
        }
        let miner = self.operators[(self.ledger.chain().len() - 1) % self.operators.len()].address;
        let txs = std::mem::take(&mut self.pending);
        self.ledger.seal_block(txs, tick, miner)?;
        Ok(())
    }

    pub fn settlement_mode(&self, hno: usize, vno: usize) -> SettlementMode {
        if self.operators[hno].country == self.operators[vno].country {
            SettlementMode::National
        } else {
            SettlementMode::International
        }
    }

    /// One roaming attempt of user `u` at operator `vno`.
    ///
    /// The home operator records the expected usage and mints pointers to
    /// it, the VNO issues the MNOC, the home operator flags the user's
    /// relationship for attention and the user decides on the converted
    /// price. Acceptance is followed by the home operator granting the VNO
    /// access to the charging record; rejection is a terminal CC update.
    pub fn attempt_roam(
        &mut self,
        u: usize,
        vno: usize,
        tick: u64,
    ) -> Result<RoamingSession, SimError> {
        let user = &self.users[u];
        let hno = user.home;
        if hno == vno {
            return Err(SimError::SameOperator);
        }
        for a in [user.address, self.operators[vno].address] {
            if self.world.entry_by_address(&a).is_none() {
                return Err(SimError::NotRegistered(a));
            }
        }
        let (user_addr, hno_addr, vno_addr) = (
            user.address,
            self.operators[hno].address,
            self.operators[vno].address,
        );
        let offer = convert_price(self.operators[vno].tariff.c, self.operators[vno].rate);
        let mut session = RoamingSession {
            user: u,
            hno,
            vno,
            mnoc_id: None,
            state: SessionState::Requested,
            offered_price: offer,
            volume: user.volume,
        };

        let charging_q = format!("{CHARGING_PREFIX}{}", user.id_string);
        let profile_q = format!("{PROFILE_PREFIX}{}", user.id_string);
        let record = ChargingRecord {
            user: user_addr,
            service: "data".into(),
            volume: user.volume,
            unit_price: offer,
            currency: "FIAT".into(),
        };
        let store = &mut self.operators[hno].store;
        store.put_record(&charging_q, record.encode())?;
        let pointers = vec![
            store.make_pointer(&charging_q)?,
            store.make_pointer(&profile_q)?,
        ];

        let Applied::Issued(id) = self.submit(
            ContractAction::IssueMnoc {
                hno: hno_addr,
                vno: vno_addr,
                user: user_addr,
                pointers,
            },
            vno_addr,
            tick,
        )?
        else {
            unreachable!("issue yields Issued")
        };
        session.mnoc_id = Some(id);
        self.submit(
            ContractAction::UpdateCc {
                owner: user_addr,
                mnoc_id: id,
                status: RelationshipStatus::AwaitingUpdate,
            },
            hno_addr,
            tick,
        )?;
        session.advance(SessionState::TermsOffered);

        if accepts(offer, self.users[u].theta) {
            self.submit(ContractAction::AcceptTerms { mnoc_id: id }, user_addr, tick)?;
            self.users[u].privacy_accepted.insert(id);
            session.advance(SessionState::Accepted);
            self.submit(
                ContractAction::GrantPermission {
                    mnoc_id: id,
                    grantee: vno_addr,
                    query: charging_q,
                },
                hno_addr,
                tick,
            )?;
            session.advance(SessionState::Active);
        } else {
            self.submit(
                ContractAction::UpdateCc {
                    owner: user_addr,
                    mnoc_id: id,
                    status: RelationshipStatus::Rejected,
                },
                user_addr,
                tick,
            )?;
            session.advance(SessionState::Rejected);
        }
        Ok(session)
    }

    /// Settles an Active session. The VNO first fetches the usage record
    /// from the home operator's gatekeeper.
    pub fn settle(
        &mut self,
        session: &mut RoamingSession,
        tick: u64,
    ) -> Result<SettlementMode, SimError> {
        if session.state != SessionState::Active {
            return Err(SimError::NotActive(session.state));
        }
        let id = session.mnoc_id.expect("active sessions carry an MNOC");
        let (hno, vno) = (session.hno, session.vno);
        let user_addr = self.users[session.user].address;
        let (hno_addr, vno_addr) = (self.operators[hno].address, self.operators[vno].address);

        let pointer = self
            .world
            .mnoc(&id)
            .and_then(|m| {
                m.pointers
                    .iter()
                    .find(|p| p.query.starts_with(CHARGING_PREFIX))
            })
            .cloned()
            .ok_or(SimError::RecordMismatch)?;
        let request = AccessRequest {
            requester: vno_addr,
            pointer,
        };
        let record = match self.operators[hno]
            .store
            .serve_request(&self.world, &request)
        {
            AccessResponse::Granted(data) => {
                ChargingRecord::decode(&data).map_err(|_| SimError::RecordMismatch)?
            }
            AccessResponse::Denied(reason) => return Err(SimError::AccessDenied(reason)),
        };
        if record.user != user_addr || record.volume != session.volume {
            return Err(SimError::RecordMismatch);
        }

        let mode = self.settlement_mode(hno, vno);
        match mode {
            SettlementMode::International => {
                let amount = record
                    .unit_price
                    .checked_mul_int(record.volume)
                    .ok_or(SimError::Overflow)?;
                let wallet = self.users[session.user].wallet;
                if wallet < amount {
                    return Err(SimError::InsufficientFunds {
                        payer: user_addr,
                        needed: amount.to_string(),
                        available: wallet.to_string(),
                    });
                }
                self.submit(
                    ContractAction::Charge(Settlement {
                        mnoc_id: id,
                        payer: user_addr,
                        payee: vno_addr,
                        amount: amount.minor() as u64,
                        volume: record.volume,
                    }),
                    user_addr,
                    tick,
                )?;
                self.users[session.user].wallet -= amount;
                self.operators[vno].roaming_fiat += amount;
            }
            SettlementMode::National => {
                let amount = self.operators[vno]
                    .tariff
                    .c
                    .checked_mul_int(record.volume)
                    .ok_or(SimError::Overflow)?;
                let balance = self.operators[hno].crypto_balance;
                if balance < amount {
                    return Err(SimError::InsufficientFunds {
                        payer: hno_addr,
                        needed: amount.to_string(),
                        available: balance.to_string(),
                    });
                }
                self.submit(
                    ContractAction::Transfer(Settlement {
                        mnoc_id: id,
                        payer: hno_addr,
                        payee: vno_addr,
                        amount: amount.minor() as u64,
                        volume: record.volume,
                    }),
                    hno_addr,
                    tick,
                )?;
                let (h, v) = (&mut self.operators[hno], amount);
                h.crypto_balance -= v;
                h.crypto_out += v;
                let o = &mut self.operators[vno];
                o.crypto_balance += v;
                o.crypto_in += v;
            }
        }
        session.advance(SessionState::Settled);
        Ok(mode)
    }

    /// Drives the whole scenario: registration at tick 1, then each tick's
    /// roaming attempts in user order, settling every Active session right
    /// away. Sessions that cannot be paid for stay Active.
    pub fn run(&mut self) -> Result<(), SimError> {
        self.register_all(1)?;
        self.seal(1)?;
        let mut schedule: Vec<(u64, usize, usize)> = self
            .users
            .iter()
            .enumerate()
            .filter_map(|(u, a)| a.roams_to.map(|(vno, tick)| (tick, u, vno)))
            .collect();
        schedule.sort();
        let last = self.config.scenario.ticks + 1;
        let mut next = 0;
        for tick in 2..=last {
            while next < schedule.len() && schedule[next].0 == tick {
                let (_, u, vno) = schedule[next];
                next += 1;
                let mut session = self.attempt_roam(u, vno, tick)?;
                if session.state == SessionState::Active {
                    match self.settle(&mut session, tick) {
                        Ok(_) | Err(SimError::InsufficientFunds { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
                self.sessions.push(session);
            }
            self.seal(tick)?;
        }
        Ok(())
    }

    pub fn report(&self) -> MetricsReport {
        metrics::build(self)
    }

    pub fn finish(self) -> (Chain, ContractWorld, MetricsReport) {
        let report = self.report();
        (self.ledger.into_chain(), self.world, report)
    }
}

pub fn run_scenario(
    config: ScenarioConfig,
) -> Result<(Chain, ContractWorld, MetricsReport), SimError> {
    let mut sim = Simulation::new(config)?;
    sim.run()?;
    Ok(sim.finish())
}

/// The contract world a chain encodes, under the scenario's participation
/// policy, along with any transactions it refused.
pub fn replay_world(
    config: &ScenarioConfig,
    chain: &Chain,
) -> (ContractWorld, Vec<(usize, ContractError)>) {
    let policy = Policy::participants(
        config
            .operators
            .iter()
            .map(|o| Address::from_label(&format!("operator:{}", o.name))),
    );
    ContractWorld::replay(policy, chain.transactions())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agreement_counts() {
        assert_eq!(agreement_count(4, AgreementMode::PeerToPeer), 6);
        assert_eq!(agreement_count(1, AgreementMode::PeerToPeer), 0);
        assert_eq!(agreement_count(1, AgreementMode::Blockchain), 1);
        assert_eq!(agreement_count(20, AgreementMode::PeerToPeer), 190);
        assert_eq!(agreement_count(20, AgreementMode::Blockchain), 20);
    }

    #[test]
    fn decision_rule() {
        assert!(accepts(Fiat::from_units(4), 10.0));
        assert!(accepts(Fiat::from_units(4), 4.0));
        assert!(!accepts(Fiat::from_units(4), 2.0));
    }
}
