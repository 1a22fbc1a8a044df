use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{
    check_inputs, revenue_unchecked, surplus_unchecked, CountryMarket, EconError, Mode,
    ModelConfig, OperatorTariff, RevenueBreakdown, SurplusReport,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    Increases,
    Decreases,
    Flat,
    Mixed,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Direction of a series by comparing each consecutive pair. Differences
/// below 1e-12 relative count as ties; a series of ties is `Flat`, and ties
/// mixed with moves are `Mixed`.
pub fn classify(values: &[f64]) -> Direction {
    let mut up = false;
    let mut down = false;
    let mut tie = false;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        let scale = w[0].abs().max(w[1].abs());
        if d.abs() <= 1e-12 * scale {
            tie = true;
        } else if d > 0.0 {
            up = true;
        } else {
            down = true;
        }
    }
    match (up, down, tie) {
        (true, false, false) => Direction::Increases,
        (false, true, false) => Direction::Decreases,
        (false, false, _) => Direction::Flat,
        _ => Direction::Mixed,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepParam {
    P,
    C,
    T,
    Lambda,
    ThetaBar,
}

impl SweepParam {
    pub fn label(self) -> &'static str {
        match self {
            SweepParam::P => "p",
            SweepParam::C => "c",
            SweepParam::T => "t",
            SweepParam::Lambda => "lambda",
            SweepParam::ThetaBar => "theta_bar",
        }
    }
}

impl FromStr for SweepParam {
    type Err = EconError;

    fn from_str(s: &str) -> Result<Self, EconError> {
        Ok(match s {
            "p" => SweepParam::P,
            "c" => SweepParam::C,
            "t" => SweepParam::T,
            "lambda" => SweepParam::Lambda,
            "theta_bar" => SweepParam::ThetaBar,
            _ => {
                return Err(EconError::BadRange(format!(
                    "unknown parameter {s:?} (expected p, c, t, lambda or theta_bar)"
                )))
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Domestic(usize),
    Roaming(usize),
    TransitIn(usize),
    TransitOut(usize),
    Revenue(usize),
    CountrySurplus(usize),
    Surplus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub revenue: Vec<RevenueBreakdown>,
    pub surplus: SurplusReport,
}

impl SweepPoint {
    pub fn get(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Domestic(i) => self.revenue[i].domestic,
            Quantity::Roaming(i) => self.revenue[i].roaming,
            Quantity::TransitIn(i) => self.revenue[i].transit_in,
            Quantity::TransitOut(i) => self.revenue[i].transit_out,
            Quantity::Revenue(i) => self.revenue[i].total,
            Quantity::CountrySurplus(i) => self.surplus.countries[i].total(),
            Quantity::Surplus => self.surplus.aggregate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub param: SweepParam,
    pub target: usize,
    pub mode: Mode,
    pub operators: usize,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn series(&self, q: Quantity) -> Vec<f64> {
        self.points.iter().map(|p| p.get(q)).collect()
    }

    pub fn direction(&self, q: Quantity) -> Direction {
        classify(&self.series(q))
    }

    /// Direction rows for the usual report: per-operator revenue and
    /// transit income, per-country and aggregate surplus.
    pub fn verdicts(&self) -> Vec<(String, Direction)> {
        let mut rows = Vec::new();
        for i in 0..self.operators {
            rows.push((
                format!("revenue[{i}]"),
                self.direction(Quantity::Revenue(i)),
            ));
            rows.push((
                format!("transit_in[{i}]"),
                self.direction(Quantity::TransitIn(i)),
            ));
        }
        for i in 0..self.operators {
            rows.push((
                format!("cs[{i}]"),
                self.direction(Quantity::CountrySurplus(i)),
            ));
        }
        rows.push(("cs".to_string(), self.direction(Quantity::Surplus)));
        rows
    }
}

/// Evaluates revenue and surplus as one parameter of operator (or country)
/// `target` moves across `values`, which must be finite, strictly
/// increasing and at least three long.
pub fn sweep(
    markets: &[CountryMarket],
    tariffs: &[OperatorTariff],
    cfg: &ModelConfig,
    param: SweepParam,
    target: usize,
    values: &[f64],
) -> Result<SweepResult, EconError> {
    check_inputs(markets, tariffs, cfg)?;
    if target >= markets.len() {
        return Err(EconError::NoSuchOperator {
            index: target,
            len: markets.len(),
        });
    }
    if values.len() < 3 {
        return Err(EconError::BadRange(format!(
            "need at least 3 points, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EconError::BadRange(
            "points must be finite and strictly increasing".into(),
        ));
    }
    let mut mk = markets.to_vec();
    let mut tf = tariffs.to_vec();
    let mut points = Vec::with_capacity(values.len());
    for &v in values {
        match param {
            SweepParam::P => tf[target].p = v,
            SweepParam::C => tf[target].c = v,
            SweepParam::T => tf[target].t = v,
            SweepParam::Lambda => mk[target].lambda = v,
            SweepParam::ThetaBar => mk[target].theta_bar = v,
        }
        check_inputs(&mk, &tf, cfg)?;
        points.push(SweepPoint {
            value: v,
            revenue: revenue_unchecked(&mk, &tf, cfg),
            surplus: surplus_unchecked(&mk, &tf, cfg),
        });
    }
    Ok(SweepResult {
        param,
        target,
        mode: cfg.mode,
        operators: markets.len(),
        points,
    })
}

/// Two countries with `m = (1, 2)`, `lambda = (1, 1)`, `theta_bar = 1`,
/// `p = c = 0.5`, no transit, `kappa = beta = 1`.
pub fn two_country_defaults() -> (Vec<CountryMarket>, Vec<OperatorTariff>, ModelConfig) {
    let markets = vec![
        CountryMarket {
            m: 1.0,
            lambda: 1.0,
            theta_bar: 1.0,
        },
        CountryMarket {
            m: 2.0,
            lambda: 1.0,
            theta_bar: 1.0,
        },
    ];
    let tariff = OperatorTariff {
        p: 0.5,
        c: 0.5,
        t: 0.0,
    };
    (markets, vec![tariff; 2], ModelConfig::default())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeOutcome {
    pub revenue: Vec<RevenueBreakdown>,
    pub surplus: SurplusReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonPoint {
    pub lambda1: f64,
    pub traditional: ModeOutcome,
    pub blockchain: ModeOutcome,
}

impl ComparisonPoint {
    pub fn outcome(&self, mode: Mode) -> &ModeOutcome {
        match mode {
            Mode::Traditional => &self.traditional,
            Mode::Blockchain => &self.blockchain,
        }
    }

    /// Blockchain minus traditional total revenue of operator `i`.
    pub fn revenue_gap(&self, i: usize) -> f64 {
        self.blockchain.revenue[i].total - self.traditional.revenue[i].total
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub points: Vec<ComparisonPoint>,
    /// The `lambda1` at which the visited-side gain of operator 2 changes
    /// sign: `m1 * lambda2 * theta_bar2 / (m2 * theta_bar1)`.
    pub crossover: f64,
}

impl Comparison {
    fn series(&self, f: impl Fn(&ComparisonPoint) -> f64) -> Vec<f64> {
        self.points.iter().map(f).collect()
    }

    /// Structural claims about the two models across the `lambda1` range.
    /// Monotonicity claims hold vacuously for fewer than two points.
    pub fn checks(&self) -> Vec<Check> {
        let moves = |v: Vec<f64>, d: Direction| v.len() < 2 || classify(&v) == d;
        let r1 = |m: Mode| self.series(|p| p.outcome(m).revenue[0].total);
        let cs = |m: Mode| self.series(|p| p.outcome(m).surplus.aggregate);
        let sign_ok = self.points.iter().all(|p| {
            let scale = p.traditional.revenue[1]
                .total
                .abs()
                .max(p.blockchain.revenue[1].total.abs());
            let gap = sign(p.revenue_gap(1), 1e-9 * scale);
            gap == sign(self.crossover - p.lambda1, 1e-12 * self.crossover)
        });
        let dominates = self.points.iter().all(|p| {
            let (b, t) = (
                p.blockchain.surplus.aggregate,
                p.traditional.surplus.aggregate,
            );
            b >= t - 1e-12 * t.abs()
        });
        vec![
            Check {
                name: "r1_decreasing_traditional",
                passed: moves(r1(Mode::Traditional), Direction::Decreases),
            },
            Check {
                name: "r1_decreasing_blockchain",
                passed: moves(r1(Mode::Blockchain), Direction::Decreases),
            },
            Check {
                name: "r1_gain_increasing",
                passed: moves(self.series(|p| p.revenue_gap(0)), Direction::Increases),
            },
            Check {
                name: "r2_gain_decreasing",
                passed: moves(self.series(|p| p.revenue_gap(1)), Direction::Decreases),
            },
            Check {
                name: "r2_gain_sign_flips_at_crossover",
                passed: sign_ok,
            },
            Check {
                name: "cs_blockchain_dominates",
                passed: dominates,
            },
            Check {
                name: "cs_decreasing_traditional",
                passed: moves(cs(Mode::Traditional), Direction::Decreases),
            },
            Check {
                name: "cs_decreasing_blockchain",
                passed: moves(cs(Mode::Blockchain), Direction::Decreases),
            },
        ]
    }

    pub fn all_pass(&self) -> bool {
        self.checks().iter().all(|c| c.passed)
    }
}

fn sign(x: f64, tol: f64) -> i8 {
    if x.abs() <= tol {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

/// Evaluates both roaming models for each `lambda1` (the first country's
/// wealth rate) in a two-country market.
pub fn compare_models(
    markets: &[CountryMarket],
    tariffs: &[OperatorTariff],
    cfg: &ModelConfig,
    lambda1: &[f64],
) -> Result<Comparison, EconError> {
    check_inputs(markets, tariffs, cfg)?;
    if markets.len() != 2 {
        return Err(EconError::NotTwoCountries(markets.len()));
    }
    let mut mk = markets.to_vec();
    let mut points = Vec::with_capacity(lambda1.len());
    for &l in lambda1 {
        mk[0].lambda = l;
        check_inputs(&mk, tariffs, cfg)?;
        let eval = |mode: Mode| {
            let c = cfg.with_mode(mode);
            ModeOutcome {
                revenue: revenue_unchecked(&mk, tariffs, &c),
                surplus: surplus_unchecked(&mk, tariffs, &c),
            }
        };
        points.push(ComparisonPoint {
            lambda1: l,
            traditional: eval(Mode::Traditional),
            blockchain: eval(Mode::Blockchain),
        });
    }
    let crossover = markets[0].m * markets[1].lambda * markets[1].theta_bar
        / (markets[1].m * markets[0].theta_bar);
    Ok(Comparison { points, crossover })
}
