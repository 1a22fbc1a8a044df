//! Scenario files.
//!
//! ```toml
//! [scenario]
//! seed = 7
//! ticks = 10             # roaming attempts spread over ticks 2..=ticks+1
//! roamer_fraction = 0.3  # share of each operator's subscribers who roam
//! volume_max = 5         # usage per session drawn from 0..=volume_max
//!
//! [consensus]
//! mode = "pow"           # or "pos"
//! pow_target_bits = 8
//! pow_nonce_bound = 1000000
//! pos_seed = 1
//!
//! [model]                # economic model, see `economics::ModelConfig`
//! kappa = 1.0
//!
//! [[country]]
//! name = "north"
//! m = 1.0
//! lambda = 1.0
//! theta_bar = 0.5
//!
//! [[operator]]
//! name = "alpha"
//! code = "001"           # digits, used in subscriber serials
//! country = "north"
//! p = "0.5"              # fiat per month
//! c = "0.25"             # cryptocurrency per unit of roaming usage
//! t = 0.0                # transit price, economic commands only
//! rate = "8"             # fiat per cryptocurrency unit
//! users = 50             # potential users drawn for this operator
//! initial_crypto = "1000"
//! user_wallet = "100"    # starting fiat balance of each subscriber
//! vno_preference = ["beta"]
//! ```
//!
//! Amounts accept strings (exact) or numbers (rounded to the minor unit).

use std::collections::BTreeSet;

use serde::Deserialize;
use thiserror::Error;

use crate::economics::{CountryMarket, EconError, ModelConfig, OperatorTariff};
use crate::fixed::{convert_price, ConversionRate, Crypto, Fiat};
use crate::ledger::{ConsensusConfig, ConsensusMode, Target};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {reason}")]
pub struct ConfigError {
    pub path: String,
    pub reason: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

impl From<EconError> for ConfigError {
    fn from(e: EconError) -> Self {
        match e {
            EconError::Domain { ref field, .. } => ConfigError::new(field.clone(), e.to_string()),
            other => ConfigError::new("model", other.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub consensus: ConsensusSection,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(rename = "country", default)]
    pub countries: Vec<CountrySection>,
    #[serde(rename = "operator", default)]
    pub operators: Vec<OperatorSection>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub seed: u64,
    #[serde(default = "default_ticks")]
    pub ticks: u64,
    #[serde(default)]
    pub roamer_fraction: f64,
    #[serde(default = "default_volume_max")]
    pub volume_max: u64,
}

fn default_ticks() -> u64 {
    10
}

fn default_volume_max() -> u64 {
    10
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConsensusSection {
    pub mode: ConsensusMode,
    pub pow_target_bits: u32,
    pub pow_nonce_bound: u64,
    pub pos_seed: u64,
}

impl Default for ConsensusSection {
    fn default() -> Self {
        ConsensusSection {
            mode: ConsensusMode::Pow,
            pow_target_bits: 8,
            pow_nonce_bound: 1_000_000,
            pos_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountrySection {
    pub name: String,
    pub m: f64,
    pub lambda: f64,
    pub theta_bar: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub name: String,
    pub code: String,
    pub country: String,
    pub p: Fiat,
    pub c: Crypto,
    #[serde(default)]
    pub t: f64,
    pub rate: ConversionRate,
    #[serde(default)]
    pub users: u32,
    #[serde(default)]
    pub initial_crypto: Crypto,
    #[serde(default)]
    pub user_wallet: Fiat,
    #[serde(default)]
    pub vno_preference: Vec<String>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text)
            .map_err(|e| ConfigError::new("config", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.scenario;
        if s.ticks == 0 {
            return Err(ConfigError::new("scenario.ticks", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&s.roamer_fraction) {
            return Err(ConfigError::new(
                "scenario.roamer_fraction",
                "must be within [0, 1]",
            ));
        }
        let c = &self.consensus;
        if c.mode == ConsensusMode::Pow {
            if c.pow_target_bits > 255 {
                return Err(ConfigError::new(
                    "consensus.pow_target_bits",
                    "must be <= 255",
                ));
            }
            if c.pow_nonce_bound == 0 {
                return Err(ConfigError::new("consensus.pow_nonce_bound", "must be > 0"));
            }
        }
        self.model.validate()?;

        if self.countries.is_empty() {
            return Err(ConfigError::new(
                "country",
                "at least one country is required",
            ));
        }
        let mut names = BTreeSet::new();
        for (i, k) in self.countries.iter().enumerate() {
            if !names.insert(k.name.as_str()) {
                return Err(ConfigError::new(
                    format!("country[{i}].name"),
                    "duplicate name",
                ));
            }
            for (field, v) in [("m", k.m), ("lambda", k.lambda), ("theta_bar", k.theta_bar)] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(ConfigError::new(
                        format!("country[{i}].{field}"),
                        format!("must be finite and > 0, got {v}"),
                    ));
                }
            }
        }

        if self.operators.is_empty() {
            return Err(ConfigError::new(
                "operator",
                "at least one operator is required",
            ));
        }
        let mut op_names = BTreeSet::new();
        let mut codes = BTreeSet::new();
        for (i, o) in self.operators.iter().enumerate() {
            let at = |f: &str| format!("operator[{i}].{f}");
            if o.name.is_empty() || !op_names.insert(o.name.as_str()) {
                return Err(ConfigError::new(at("name"), "empty or duplicate name"));
            }
            if o.code.is_empty() || !o.code.bytes().all(|b| b.is_ascii_digit()) {
                return Err(ConfigError::new(
                    at("code"),
                    "must be a nonempty digit string",
                ));
            }
            if !codes.insert(o.code.as_str()) {
                return Err(ConfigError::new(at("code"), "duplicate code"));
            }
            if !names.contains(o.country.as_str()) {
                return Err(ConfigError::new(
                    at("country"),
                    format!("unknown country {:?}", o.country),
                ));
            }
            for (field, negative) in [
                ("p", o.p.is_negative()),
                ("c", o.c.is_negative()),
                ("initial_crypto", o.initial_crypto.is_negative()),
                ("user_wallet", o.user_wallet.is_negative()),
            ] {
                if negative {
                    return Err(ConfigError::new(at(field), "must be >= 0"));
                }
            }
            if !(o.t.is_finite() && o.t >= 0.0) {
                return Err(ConfigError::new(at("t"), "must be finite and >= 0"));
            }
        }
        for (i, o) in self.operators.iter().enumerate() {
            for (k, v) in o.vno_preference.iter().enumerate() {
                let path = format!("operator[{i}].vno_preference[{k}]");
                if v == &o.name {
                    return Err(ConfigError::new(path, "an operator cannot be its own VNO"));
                }
                if !op_names.contains(v.as_str()) {
                    return Err(ConfigError::new(path, format!("unknown operator {v:?}")));
                }
            }
        }
        if c.mode == ConsensusMode::Pos
            && self.operators.iter().all(|o| o.initial_crypto.minor() == 0)
        {
            return Err(ConfigError::new(
                "operator.initial_crypto",
                "proof of stake needs some operator with a positive balance",
            ));
        }
        Ok(())
    }

    pub fn country_index(&self, name: &str) -> Option<usize> {
        self.countries.iter().position(|c| c.name == name)
    }

    pub fn operator_index(&self, name: &str) -> Option<usize> {
        self.operators.iter().position(|o| o.name == name)
    }

    pub fn consensus_config(&self) -> ConsensusConfig {
        let c = &self.consensus;
        match c.mode {
            ConsensusMode::Pow => ConsensusConfig::pow(
                Target::leading_zero_bits(c.pow_target_bits),
                c.pow_nonce_bound,
            ),
            ConsensusMode::Pos => ConsensusConfig::pos(c.pos_seed),
        }
    }

    /// Economic view: operator `i` with its country's market, roaming price
    /// converted to fiat at the operator's rate.
    pub fn economic_inputs(&self) -> (Vec<CountryMarket>, Vec<OperatorTariff>, ModelConfig) {
        let mut markets = Vec::new();
        let mut tariffs = Vec::new();
        for o in &self.operators {
            let k = &self.countries[self.country_index(&o.country).expect("validated")];
            markets.push(CountryMarket {
                m: k.m,
                lambda: k.lambda,
                theta_bar: k.theta_bar,
            });
            tariffs.push(OperatorTariff {
                p: o.p.to_f64(),
                c: convert_price(o.c, o.rate).to_f64(),
                t: o.t,
            });
        }
        (markets, tariffs, self.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = r#"
[scenario]
seed = 7
ticks = 4
roamer_fraction = 0.5
volume_max = 3

[[country]]
name = "north"
m = 1.0
lambda = 1.0
theta_bar = 0.5

[[country]]
name = "south"
m = 2.0
lambda = 1.0
theta_bar = 0.5

[[operator]]
name = "alpha"
code = "01"
country = "north"
p = "0.5"
c = "0.25"
rate = "8"
users = 5
initial_crypto = "100"
user_wallet = "50"

[[operator]]
name = "beta"
code = "02"
country = "south"
p = 0.5
c = 0.125
rate = 8
users = 5
initial_crypto = "100"
user_wallet = "50"
"#;

    #[test]
    fn parses_sample() {
        let cfg = ScenarioConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.operators[0].c, "0.25".parse().unwrap());
        assert_eq!(cfg.operators[1].p, "0.5".parse().unwrap());
        assert_eq!(cfg.consensus, ConsensusSection::default());
        let (mk, tf, _) = cfg.economic_inputs();
        assert_eq!(mk[1].m, 2.0);
        assert_eq!(tf[0].c, 2.0);
        assert_eq!(tf[1].c, 1.0);
    }

    fn broken(from: &str, to: &str) -> ConfigError {
        ScenarioConfig::from_toml_str(&SAMPLE.replacen(from, to, 1)).unwrap_err()
    }

    #[test]
    fn errors_carry_field_paths() {
        assert_eq!(
            broken("lambda = 1.0", "lambda = 0.0").path,
            "country[0].lambda"
        );
        assert_eq!(
            broken("country = \"south\"", "country = \"west\"").path,
            "operator[1].country"
        );
        assert_eq!(
            broken("code = \"02\"", "code = \"01\"").path,
            "operator[1].code"
        );
        assert_eq!(
            broken("roamer_fraction = 0.5", "roamer_fraction = 1.5").path,
            "scenario.roamer_fraction"
        );
        assert_eq!(
            broken(
                "user_wallet = \"50\"\n\n",
                "user_wallet = \"50\"\nvno_preference = [\"alpha\"]\n\n"
            )
            .path,
            "operator[0].vno_preference[0]"
        );
        assert_eq!(broken("ticks = 4", "ticks = 0").path, "scenario.ticks");
        assert_eq!(broken("seed = 7", "seed = 7\nbogus = 1").path, "config");
        assert_eq!(broken("rate = 8", "rate = 0").path, "config");
    }
}
