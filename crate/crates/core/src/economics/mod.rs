//! Operator revenue and consumer surplus for traditional and blockchain
//! roaming.
//!
//! Operator `i` serves country `i`. In country `i` willingness-to-pay is
//! exponential with rate `lambda` and only users above `theta_bar`
//! subscribe, so every revenue component scales with the reach
//! `m / (lambda * theta_bar)`.
//!
//! Traditional roaming: the home operator bills its own roamers `c`, and
//! operators charge each other transit `t` for foreign users on their
//! network. Blockchain roaming: visitors pay the visited operator directly,
//! no transit is routed and the home roaming charge vanishes.

mod game;
mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use game::{
    optimize_prices, transit_grid, transit_nash, transit_regulator, verify_regulator, NashResult,
    PriceGrid, PriceOptimum, RegulatorCheck,
};
pub use sweep::{
    classify, compare_models, sweep, two_country_defaults, Check, Comparison, ComparisonPoint,
    Direction, ModeOutcome, Quantity, SweepParam, SweepPoint, SweepResult,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EconError {
    #[error("{field} must be {rule}, got {value}")]
    Domain {
        field: String,
        rule: &'static str,
        value: f64,
    },
    #[error("{markets} markets but {tariffs} tariffs")]
    Mismatch { markets: usize, tariffs: usize },
    #[error("price grid is empty")]
    EmptyGrid,
    #[error("bad range: {0}")]
    BadRange(String),
    #[error("index {index} out of range for {len} operators")]
    NoSuchOperator { index: usize, len: usize },
    #[error("model comparison needs exactly two countries, got {0}")]
    NotTwoCountries(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountryMarket {
    pub m: f64,
    pub lambda: f64,
    pub theta_bar: f64,
}

impl CountryMarket {
    pub fn new(m: f64, lambda: f64, theta_bar: f64) -> Result<Self, EconError> {
        let c = CountryMarket {
            m,
            lambda,
            theta_bar,
        };
        c.check(0)?;
        Ok(c)
    }

    fn check(&self, i: usize) -> Result<(), EconError> {
        positive(&format!("country[{i}].m"), self.m)?;
        positive(&format!("country[{i}].lambda"), self.lambda)?;
        positive(&format!("country[{i}].theta_bar"), self.theta_bar)
    }

    /// Subscriber mass per unit price.
    pub fn reach(&self) -> f64 {
        self.m / (self.lambda * self.theta_bar)
    }

    /// Share of potential users above the subscription threshold.
    pub fn participation(&self) -> f64 {
        (-self.lambda * self.theta_bar).exp()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OperatorTariff {
    pub p: f64,
    pub c: f64,
    pub t: f64,
}

impl OperatorTariff {
    pub fn new(p: f64, c: f64, t: f64) -> Result<Self, EconError> {
        let tariff = OperatorTariff { p, c, t };
        tariff.check(0)?;
        Ok(tariff)
    }

    fn check(&self, i: usize) -> Result<(), EconError> {
        non_negative(&format!("operator[{i}].p"), self.p)?;
        non_negative(&format!("operator[{i}].c"), self.c)?;
        non_negative(&format!("operator[{i}].t"), self.t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Traditional,
    Blockchain,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Traditional => "traditional",
            Mode::Blockchain => "blockchain",
        }
    }
}

/// How inter-operator transit is priced in traditional mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitModel {
    /// Every `t` is treated as zero.
    Free,
    /// Transit revenue linear in `t`.
    Linear,
    /// Foreign demand thins out as `exp(-lambda * beta * t)`.
    Attenuated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub mode: Mode,
    /// Weight of the quadratic roaming utility.
    pub kappa: f64,
    /// Share of foreign transit prices passed on to roaming users.
    pub beta: f64,
    pub transit: TransitModel,
    pub t_max: f64,
    pub grid_step: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            mode: Mode::Traditional,
            kappa: 1.0,
            beta: 1.0,
            transit: TransitModel::Linear,
            t_max: 5.0,
            grid_step: 0.01,
        }
    }
}

impl ModelConfig {
    pub fn with_mode(self, mode: Mode) -> Self {
        ModelConfig { mode, ..self }
    }

    pub fn validate(&self) -> Result<(), EconError> {
        positive("model.kappa", self.kappa)?;
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(EconError::Domain {
                field: "model.beta".into(),
                rule: "within [0, 1]",
                value: self.beta,
            });
        }
        non_negative("model.t_max", self.t_max)?;
        positive("model.grid_step", self.grid_step)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RevenueBreakdown {
    pub domestic: f64,
    pub roaming: f64,
    pub transit_in: f64,
    pub transit_out: f64,
    pub total: f64,
}

impl RevenueBreakdown {
    fn new(domestic: f64, roaming: f64, transit_in: f64, transit_out: f64) -> Self {
        RevenueBreakdown {
            domestic,
            roaming,
            transit_in,
            transit_out,
            total: domestic + roaming + transit_in - transit_out,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct CountrySurplus {
    pub domestic: f64,
    pub roaming: f64,
}

impl CountrySurplus {
    pub fn total(&self) -> f64 {
        self.domestic + self.roaming
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SurplusReport {
    pub countries: Vec<CountrySurplus>,
    pub aggregate: f64,
}

fn positive(field: &str, v: f64) -> Result<(), EconError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(EconError::Domain {
            field: field.into(),
            rule: "finite and > 0",
            value: v,
        })
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), EconError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(EconError::Domain {
            field: field.into(),
            rule: "finite and >= 0",
            value: v,
        })
    }
}

pub(crate) fn check_inputs(
    markets: &[CountryMarket],
    tariffs: &[OperatorTariff],
    cfg: &ModelConfig,
) -> Result<(), EconError> {
    if markets.len() != tariffs.len() {
        return Err(EconError::Mismatch {
            markets: markets.len(),
            tariffs: tariffs.len(),
        });
    }
    for (i, m) in markets.iter().enumerate() {
        m.check(i)?;
    }
    for (i, t) in tariffs.iter().enumerate() {
        t.check(i)?;
    }
    cfg.validate()
}

fn effective_t(tariff: &OperatorTariff, cfg: &ModelConfig) -> f64 {
    match cfg.transit {
        TransitModel::Free => 0.0,
        _ => tariff.t,
    }
}

/// Transit that operator `carrier` earns from the users of `home`.
fn transit_flow(home: &CountryMarket, t: f64, cfg: &ModelConfig) -> f64 {
    match cfg.transit {
        TransitModel::Free => 0.0,
        TransitModel::Linear => home.reach() * t,
        TransitModel::Attenuated => {
            home.reach() * t * (-home.lambda * (home.theta_bar + cfg.beta * t)).exp()
        }
    }
}

pub fn revenue(
    markets: &[CountryMarket],
    tariffs: &[OperatorTariff],
    cfg: &ModelConfig,
) -> Result<Vec<RevenueBreakdown>, EconError> {
    check_inputs(markets, tariffs, cfg)?;
    Ok(revenue_unchecked(markets, tariffs, cfg))
}

pub(crate) fn revenue_unchecked(
    markets: &[CountryMarket],
    tariffs: &[OperatorTariff],
    cfg: &ModelConfig,
) -> Vec<RevenueBreakdown> {
    let n = markets.len();
    (0..n)
        .map(|i| {
            let own = &markets[i];
            let domestic = own.reach() * tariffs[i].p;
            match cfg.mode {
                Mode::Traditional => {
                    let roaming = own.reach() * tariffs[i].c;
                    let t_i = effective_t(&tariffs[i], cfg);
                    let mut transit_in = 0.0;
                    let mut transit_out = 0.0;
                    for j in (0..n).filter(|&j| j != i) {
                        transit_in += transit_flow(&markets[j], t_i, cfg);
                        transit_out += transit_flow(own, effective_t(&tariffs[j], cfg), cfg);
                    }
                    RevenueBreakdown::new(domestic, roaming, transit_in, transit_out)
                }
                Mode::Blockchain => {
                    let roaming = (0..n)
                        .filter(|&j| j != i)
                        .map(|j| markets[j].reach() * tariffs[i].c)
                        .sum();
                    RevenueBreakdown::new(domestic, roaming, 0.0, 0.0)
                }
            }
        })
        .collect()
}

/// Roaming price a subscriber of country `i` effectively faces.
pub fn effective_roaming_price(i: usize, tariffs: &[OperatorTariff], cfg: &ModelConfig) -> f64 {
    match cfg.mode {
        Mode::Blockchain => 0.0,
        Mode::Traditional => {
            let n = tariffs.len();
            let foreign = if n > 1 {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| effective_t(&tariffs[j], cfg))
                    .sum::<f64>()
                    / (n - 1) as f64
            } else {
                0.0
            };
            tariffs[i].c + cfg.beta * foreign
        }
    }
}

/// Expected utility of subscribed users, integrated in closed form over the
/// exponential tail above `theta_bar`.
pub fn consumer_surplus(
    markets: &[CountryMarket],
    tariffs: &[OperatorTariff],
    cfg: &ModelConfig,
) -> Result<SurplusReport, EconError> {
    check_inputs(markets, tariffs, cfg)?;
    Ok(surplus_unchecked(markets, tariffs, cfg))
}

pub(crate) fn surplus_unchecked(
    markets: &[CountryMarket],
    tariffs: &[OperatorTariff],
    cfg: &ModelConfig,
) -> SurplusReport {
    let countries: Vec<CountrySurplus> = markets
        .iter()
        .enumerate()
        .map(|(i, mk)| {
            let c_eff = effective_roaming_price(i, tariffs, cfg);
            let inv = 1.0 / mk.lambda;
            let scale = mk.m * mk.participation();
            let gap = mk.theta_bar - c_eff;
            CountrySurplus {
                domestic: scale * (mk.theta_bar - tariffs[i].p + inv),
                roaming: cfg.kappa * scale * (gap * gap + 2.0 * gap * inv + 2.0 * inv * inv),
            }
        })
        .collect();
    let aggregate = countries.iter().map(CountrySurplus::total).sum();
    SurplusReport {
        countries,
        aggregate,
    }
}
