use crate::contracts::ContractAction;
use crate::fixed::{Crypto, Fiat};
use crate::ledger::TxKind;

use super::{agreement_count, AgreementMode, SessionState, Simulation};

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMetrics {
    pub name: String,
    pub potential_users: u64,
    pub subscribers: u64,
    /// Subscribers times the monthly home price.
    pub domestic_revenue: Fiat,
    /// Fiat charged to visiting users.
    pub roaming_revenue: Fiat,
    /// Cryptocurrency received from other operators.
    pub transit_in: Crypto,
    /// Cryptocurrency paid to other operators.
    pub transit_out: Crypto,
    pub crypto_delta: Crypto,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SessionCounts {
    pub attempted: u64,
    pub rejected: u64,
    /// Accepted and active but not paid for.
    pub unsettled: u64,
    pub settled: u64,
}

/// Agent-side and ledger-side totals of one currency, in minor units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Audit {
    /// Decrease of payer balances.
    pub debits: i64,
    /// Increase of payee balances.
    pub credits: i64,
    /// Sum of settlement amounts recorded on the chain.
    pub ledger_total: i64,
    /// Change of the money supply held by all agents; zero when nothing
    /// was created or destroyed.
    pub drift: i64,
}

impl Audit {
    pub fn balanced(&self) -> bool {
        self.debits == self.credits && self.credits == self.ledger_total && self.drift == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub operators: Vec<OperatorMetrics>,
    /// Realized utility: domestic `theta - p` for every subscriber plus
    /// `kappa * (theta - offer)^2` for every accepted roamer.
    pub consumer_surplus: f64,
    pub sessions: SessionCounts,
    pub agreements_peer_to_peer: u64,
    pub agreements_blockchain: u64,
    pub fiat: Audit,
    pub crypto: Audit,
    pub blocks: u64,
    pub transactions: u64,
}

impl MetricsReport {
    pub fn conserved(&self) -> bool {
        self.fiat.balanced() && self.crypto.balanced()
    }
}

pub(super) fn build(sim: &Simulation) -> MetricsReport {
    let operators = sim
        .operators
        .iter()
        .map(|o| OperatorMetrics {
            name: o.name.clone(),
            potential_users: o.potential_users,
            subscribers: o.subscribers,
            domestic_revenue: o
                .tariff
                .p
                .checked_mul_int(o.subscribers)
                .expect("domestic revenue"),
            roaming_revenue: o.roaming_fiat,
            transit_in: o.crypto_in,
            transit_out: o.crypto_out,
            crypto_delta: o.crypto_balance - o.initial_crypto,
        })
        .collect();

    let mut sessions = SessionCounts::default();
    for s in sim.sessions() {
        sessions.attempted += 1;
        match s.state {
            SessionState::Rejected => sessions.rejected += 1,
            SessionState::Active => sessions.unsettled += 1,
            SessionState::Settled => sessions.settled += 1,
            _ => {}
        }
    }

    let kappa = sim.config().model.kappa;
    let mut surplus = 0.0;
    for u in &sim.users {
        surplus += u.theta - sim.operators[u.home].tariff.p.to_f64();
    }
    for s in sim.sessions() {
        if s.state >= SessionState::Active {
            let gap = sim.users[s.user].theta - s.offered_price.to_f64();
            surplus += kappa * gap * gap;
        }
    }

    let initial_wallets: i64 = sim.users.iter().map(|u| u.initial_wallet.minor()).sum();
    let final_wallets: i64 = sim.users.iter().map(|u| u.wallet.minor()).sum();
    let vno_fiat: i64 = sim.operators.iter().map(|o| o.roaming_fiat.minor()).sum();
    let mut fiat = Audit {
        debits: initial_wallets - final_wallets,
        credits: vno_fiat,
        ledger_total: 0,
        drift: final_wallets + vno_fiat - initial_wallets,
    };
    let initial_crypto: i64 = sim.operators.iter().map(|o| o.initial_crypto.minor()).sum();
    let final_crypto: i64 = sim.operators.iter().map(|o| o.crypto_balance.minor()).sum();
    let mut crypto = Audit {
        debits: sim.operators.iter().map(|o| o.crypto_out.minor()).sum(),
        credits: sim.operators.iter().map(|o| o.crypto_in.minor()).sum(),
        ledger_total: 0,
        drift: final_crypto - initial_crypto,
    };
    let chain = sim.chain();
    let mut transactions = 0;
    for tx in chain.transactions() {
        transactions += 1;
        match (tx.kind, ContractAction::decode(&tx.payload)) {
            (TxKind::Charge, Ok(ContractAction::Charge(s))) => fiat.ledger_total += s.amount as i64,
            (TxKind::Transfer, Ok(ContractAction::Transfer(s))) => {
                crypto.ledger_total += s.amount as i64
            }
            _ => {}
        }
    }

    let n = sim.operators.len() as u64;
    MetricsReport {
        operators,
        consumer_surplus: surplus,
        sessions,
        agreements_peer_to_peer: agreement_count(n, AgreementMode::PeerToPeer),
        agreements_blockchain: agreement_count(n, AgreementMode::Blockchain),
        fiat,
        crypto,
        blocks: chain.len() as u64,
        transactions,
    }
}
