//! Grid-search pricing: revenue-maximizing tariffs, the zero-transit
//! regulator and the transit-price game between operators.

use serde::Serialize;

use super::{
    check_inputs, revenue_unchecked, surplus_unchecked, CountryMarket, EconError, ModelConfig,
    OperatorTariff,
};

/// Candidate values for `p` and `c`. Both lists are sorted on use.
#[derive(Clone, Debug, PartialEq)]
pub struct PriceGrid {
    pub p_values: Vec<f64>,
    pub c_values: Vec<f64>,
}

impl PriceGrid {
    /// `0, step, 2*step, ...` up to and including each maximum.
    pub fn uniform(p_max: f64, c_max: f64, step: f64) -> Self {
        PriceGrid {
            p_values: steps(p_max, step),
            c_values: steps(c_max, step),
        }
    }
}

fn steps(max: f64, step: f64) -> Vec<f64> {
    let usable = step > 0.0 && max >= 0.0;
    if !usable {
        return Vec::new();
    }
    let k = (max / step + 1e-9).floor() as usize;
    (0..=k).map(|i| i as f64 * step).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PriceOptimum {
    pub p: f64,
    pub c: f64,
    pub revenue: f64,
    /// The optimum sits on an edge of the grid, so a wider grid might do better.
    pub on_boundary: bool,
}

/// Revenue-maximizing `(p, c)` for operator `i` with everyone else fixed.
/// Ties go to the smallest `p`, then the smallest `c`.
pub fn optimize_prices(
    i: usize,
    markets: &[CountryMarket],
    tariffs: &[OperatorTariff],
    cfg: &ModelConfig,
    grid: &PriceGrid,
) -> Result<PriceOptimum, EconError> {
    check_inputs(markets, tariffs, cfg)?;
    if i >= tariffs.len() {
        return Err(EconError::NoSuchOperator {
            index: i,
            len: tariffs.len(),
        });
    }
    let mut ps = grid.p_values.clone();
    let mut cs = grid.c_values.clone();
    if ps.is_empty() || cs.is_empty() || ps.iter().chain(&cs).any(|v| !v.is_finite() || *v < 0.0) {
        return Err(EconError::EmptyGrid);
    }
    ps.sort_by(f64::total_cmp);
    cs.sort_by(f64::total_cmp);

    let mut trial = tariffs.to_vec();
    let mut best: Option<PriceOptimum> = None;
    for &p in &ps {
        for &c in &cs {
            trial[i].p = p;
            trial[i].c = c;
            let r = revenue_unchecked(markets, &trial, cfg)[i].total;
            if best.is_none_or(|b| r > b.revenue) {
                best = Some(PriceOptimum {
                    p,
                    c,
                    revenue: r,
                    on_boundary: false,
                });
            }
        }
    }
    let mut best = best.expect("grid is nonempty");
    let edge = |v: f64, vals: &[f64]| v == vals[0] || v == vals[vals.len() - 1];
    best.on_boundary = edge(best.p, &ps) || edge(best.c, &cs);
    Ok(best)
}

/// Transit prices a welfare-minded regulator would set: zero everywhere.
pub fn transit_regulator(markets: &[CountryMarket]) -> Vec<f64> {
    vec![0.0; markets.len()]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegulatorCheck {
    pub baseline: f64,
    /// Points `(operator, t, aggregate CS)` where raising one transit price
    /// above zero increased surplus.
    pub violations: Vec<(usize, f64, f64)>,
}

impl RegulatorCheck {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Raises each operator's transit price alone across the transit grid and
/// confirms aggregate surplus never beats the all-zero baseline.
pub fn verify_regulator(
    markets: &[CountryMarket],
    tariffs: &[OperatorTariff],
    cfg: &ModelConfig,
) -> Result<RegulatorCheck, EconError> {
    check_inputs(markets, tariffs, cfg)?;
    let mut trial = tariffs.to_vec();
    for (tf, t) in trial.iter_mut().zip(transit_regulator(markets)) {
        tf.t = t;
    }
    let baseline = surplus_unchecked(markets, &trial, cfg).aggregate;
    let mut violations = Vec::new();
    for i in 0..trial.len() {
        for &g in transit_grid(cfg).iter().skip(1) {
            let mut moved = trial.clone();
            moved[i].t = g;
            let cs = surplus_unchecked(markets, &moved, cfg).aggregate;
            if cs > baseline {
                violations.push((i, g, cs));
            }
        }
    }
    Ok(RegulatorCheck {
        baseline,
        violations,
    })
}

/// `0, step, 2*step, ...` up to `t_max`.
pub fn transit_grid(cfg: &ModelConfig) -> Vec<f64> {
    steps(cfg.t_max, cfg.grid_step)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NashResult {
    pub t: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Some equilibrium price sits at 0 or at the top of the grid.
    pub corner: bool,
}

const NASH_ITERATION_CAP: usize = 1000;

/// Synchronous best-response dynamics over the transit grid, starting from
/// all-zero transit. Each round every operator picks the grid price that
/// maximizes its own total revenue against last round's prices, ties to
/// the smallest price. Stops once a round changes nothing.
pub fn transit_nash(
    markets: &[CountryMarket],
    tariffs: &[OperatorTariff],
    cfg: &ModelConfig,
) -> Result<NashResult, EconError> {
    check_inputs(markets, tariffs, cfg)?;
    let grid = transit_grid(cfg);
    let n = tariffs.len();
    let mut current: Vec<usize> = vec![0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < NASH_ITERATION_CAP {
        iterations += 1;
        let next: Vec<usize> = (0..n)
            .map(|i| best_response(i, markets, tariffs, cfg, &grid, &current))
            .collect();
        if next == current {
            converged = true;
            break;
        }
        current = next;
    }
    let last = grid.len() - 1;
    Ok(NashResult {
        t: current.iter().map(|&k| grid[k]).collect(),
        iterations,
        converged,
        corner: current.iter().any(|&k| k == 0 || k == last),
    })
}

fn best_response(
    i: usize,
    markets: &[CountryMarket],
    tariffs: &[OperatorTariff],
    cfg: &ModelConfig,
    grid: &[f64],
    current: &[usize],
) -> usize {
    let mut trial: Vec<OperatorTariff> = tariffs
        .iter()
        .zip(current)
        .map(|(tf, &k)| OperatorTariff { t: grid[k], ..*tf })
        .collect();
    let mut best = (0, f64::NEG_INFINITY);
    for (k, &g) in grid.iter().enumerate() {
        trial[i].t = g;
        let r = revenue_unchecked(markets, &trial, cfg)[i].total;
        if r > best.1 {
            best = (k, r);
        }
    }
    best.0
}
