//! Proof of work and coin-age proof of stake.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crypto::{Address, Digest, DIGEST_LEN};

use super::block::BlockHeader;
use super::LedgerError;

/// A 256-bit big-endian PoW threshold; a header qualifies when its digest,
/// read as a 256-bit integer, is strictly below the target.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Target(pub [u8; DIGEST_LEN]);

impl Target {
    /// 2^256 - 1.
    pub const MAX: Target = Target([0xff; DIGEST_LEN]);

    /// 2^exp, for `exp < 256`.
    pub fn pow2(exp: u32) -> Self {
        assert!(exp < 256, "2^{exp} does not fit in 256 bits");
        let mut out = [0u8; DIGEST_LEN];
        let byte = DIGEST_LEN - 1 - (exp / 8) as usize;
        out[byte] = 1 << (exp % 8);
        Target(out)
    }

    /// Target demanding `bits` leading zero bits: 2^(256 - bits).
    pub fn leading_zero_bits(bits: u32) -> Self {
        if bits == 0 {
            Self::MAX
        } else {
            Self::pow2(256 - bits)
        }
    }

    pub fn from_u64(v: u64) -> Self {
        let mut out = [0u8; DIGEST_LEN];
        out[DIGEST_LEN - 8..].copy_from_slice(&v.to_be_bytes());
        Target(out)
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; DIGEST_LEN]
    }

    pub fn is_met_by(&self, digest: &Digest) -> bool {
        digest.0 < self.0
    }
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Target({})", hex::encode(self.0))
    }
}

impl FromStr for Target {
    type Err = hex::FromHexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; DIGEST_LEN];
        hex::decode_to_slice(s, &mut out)?;
        Ok(Target(out))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConsensusMode {
    Pow,
    Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsensusConfig {
    pub mode: ConsensusMode,
    pub pow_target: Target,
    pub pow_nonce_bound: u64,
    pub pos_seed: u64,
}

impl ConsensusConfig {
    pub fn pow(target: Target, nonce_bound: u64) -> Self {
        ConsensusConfig {
            mode: ConsensusMode::Pow,
            pow_target: target,
            pow_nonce_bound: nonce_bound,
            pos_seed: 0,
        }
    }

    pub fn pos(seed: u64) -> Self {
        ConsensusConfig {
            mode: ConsensusMode::Pos,
            pow_target: Target::MAX,
            pow_nonce_bound: 1,
            pos_seed: seed,
        }
    }

    pub fn validate(&self) -> Result<(), LedgerError> {
        if self.pow_target.is_zero() {
            return Err(LedgerError::InvalidConfig("pow_target must be > 0".into()));
        }
        if self.pow_nonce_bound == 0 {
            return Err(LedgerError::InvalidConfig(
                "pow_nonce_bound must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Scans nonces `0, 1, 2, ...` below `bound` for one whose header digest
/// meets `target`. The header's own `nonce` field is ignored.
pub fn mine_pow(header: &BlockHeader, target: &Target, bound: u64) -> Result<u64, LedgerError> {
    if target.is_zero() {
        return Err(LedgerError::InvalidConfig("pow_target must be > 0".into()));
    }
    let mut candidate = header.clone();
    for nonce in 0..bound {
        candidate.nonce = nonce;
        if target.is_met_by(&candidate.hash()) {
            return Ok(nonce);
        }
    }
    Err(LedgerError::Exhausted { bound })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Holding {
    pub amount: u64,
    pub created_at: u64,
}

/// Unspent holdings per identity, from which coin age is derived.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoinAgeLedger {
    holdings: BTreeMap<Address, Vec<Holding>>,
}

impl CoinAgeLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_holding(&mut self, owner: Address, amount: u64, created_at: u64) {
        self.holdings
            .entry(owner)
            .or_default()
            .push(Holding { amount, created_at });
    }

    pub fn holdings(&self, owner: &Address) -> &[Holding] {
        self.holdings.get(owner).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn owners(&self) -> impl Iterator<Item = &Address> {
        self.holdings.keys()
    }

    /// Σ amount × (now − created_at). Holdings created after `now` have not
    /// aged yet and contribute nothing.
    pub fn coin_age(&self, owner: &Address, now: u64) -> u128 {
        self.holdings(owner)
            .iter()
            .map(|h| h.amount as u128 * now.saturating_sub(h.created_at) as u128)
            .sum()
    }

    pub fn total_age(&self, now: u64) -> u128 {
        self.holdings.keys().map(|a| self.coin_age(a, now)).sum()
    }

    /// Samples an identity with probability proportional to coin age,
    /// without consuming anything.
    pub fn sample<R: Rng + ?Sized>(&self, now: u64, rng: &mut R) -> Result<Address, LedgerError> {
        let total = self.total_age(now);
        if total == 0 {
            return Err(LedgerError::NoStake);
        }
        let mut pick = rng.random_range(0..total);
        for owner in self.holdings.keys() {
            let age = self.coin_age(owner, now);
            if pick < age {
                return Ok(*owner);
            }
            pick -= age;
        }
        unreachable!("pick is below the total age")
    }

    /// Re-timestamps every holding of `owner` to `now`, zeroing its age.
    pub fn consume_age(&mut self, owner: &Address, now: u64) {
        if let Some(hs) = self.holdings.get_mut(owner) {
            for h in hs {
                h.created_at = now;
            }
        }
    }

    /// Proof-of-stake leader selection: sample, then consume the winner's age.
    pub fn select_pos<R: Rng + ?Sized>(
        &mut self,
        now: u64,
        rng: &mut R,
    ) -> Result<Address, LedgerError> {
        let winner = self.sample(now, rng)?;
        self.consume_age(&winner, now);
        Ok(winner)
    }
}

/// The deterministic random stream used to pick the PoS leader at `height`.
pub fn pos_rng(seed: u64, height: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(height);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> BlockHeader {
        BlockHeader {
            index: 1,
            prev_hash: Digest::of(b"prev"),
            tx_root: Digest::of(b""),
            nonce: 0,
            creator: Address::from_label("miner"),
            timestamp: 1,
        }
    }

    #[test]
    fn target_constructors() {
        let t = Target::pow2(248);
        assert_eq!(t.0[0], 1);
        assert!(t.0[1..].iter().all(|b| *b == 0));
        assert_eq!(Target::leading_zero_bits(8), t);
        assert_eq!(Target::pow2(0), Target::from_u64(1));
        assert!(Target::MAX.is_met_by(&Digest([0xfe; 32])));
        assert!(!Target::MAX.is_met_by(&Digest([0xff; 32])));
    }

    #[test]
    fn max_target_accepts_nonce_zero() {
        assert_eq!(mine_pow(&header(), &Target::MAX, 10).unwrap(), 0);
    }

    #[test]
    fn eight_bit_target_recheck() {
        let target = Target::pow2(248);
        let nonce = mine_pow(&header(), &target, 1 << 20).unwrap();
        let mut h = header();
        h.nonce = nonce;
        let d = h.hash();
        assert_eq!(d.0[0], 0, "8 leading zero bits");
        // Every smaller nonce must have failed.
        for n in 0..nonce {
            h.nonce = n;
            assert_ne!(h.hash().0[0], 0);
        }
    }

    #[test]
    fn unreachable_target_exhausts() {
        let err = mine_pow(&header(), &Target::from_u64(1), 100).unwrap_err();
        assert!(matches!(err, LedgerError::Exhausted { bound: 100 }));
    }

    #[test]
    fn single_staker_always_wins() {
        let a = Address::from_label("a");
        let mut stake = CoinAgeLedger::new();
        stake.add_holding(a, 10, 0);
        let mut rng = pos_rng(1, 1);
        for now in 1..20 {
            assert_eq!(stake.select_pos(now, &mut rng).unwrap(), a);
        }
    }

    #[test]
    fn winner_age_is_consumed() {
        let a = Address::from_label("a");
        let b = Address::from_label("b");
        let mut stake = CoinAgeLedger::new();
        stake.add_holding(a, 3, 0);
        stake.add_holding(b, 1, 0);
        let winner = stake.select_pos(5, &mut pos_rng(3, 0)).unwrap();
        assert_eq!(stake.coin_age(&winner, 5), 0);
    }

    #[test]
    fn no_stake_is_an_error() {
        let mut stake = CoinAgeLedger::new();
        stake.add_holding(Address::from_label("a"), 10, 4);
        assert!(matches!(
            stake.select_pos(4, &mut pos_rng(0, 0)),
            Err(LedgerError::NoStake)
        ));
        assert!(matches!(
            CoinAgeLedger::new().select_pos(4, &mut pos_rng(0, 0)),
            Err(LedgerError::NoStake)
        ));
    }

    #[test]
    fn coin_age_definition() {
        let a = Address::from_label("a");
        let mut stake = CoinAgeLedger::new();
        stake.add_holding(a, 3, 2);
        stake.add_holding(a, 5, 4);
        assert_eq!(stake.coin_age(&a, 10), 3 * 8 + 5 * 6);
        assert_eq!(stake.coin_age(&a, 3), 3);
    }
}
