//! Text and CSV renderings. Floats use six significant digits; money is
//! printed exactly.

use std::fmt::Write as _;

use roamchain::economics::{Comparison, Mode, ModeOutcome, NashResult, SweepResult};
use roamchain::roamsim::{Audit, MetricsReport};

/// `printf("%g")` with six significant digits, independent of locale.
pub fn fmt_g(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

fn outcome_header(first: &str, names: &[String]) -> Vec<String> {
    let mut h = vec![first.to_string()];
    for n in names {
        for part in ["domestic", "roaming", "transit_in", "transit_out", "total"] {
            h.push(format!("{n}_{part}"));
        }
    }
    for n in names {
        h.push(format!("cs_{n}"));
    }
    h.push("cs_aggregate".into());
    h.push("mode".into());
    h
}

fn outcome_row(value: f64, out: &ModeOutcome, mode: Mode) -> Vec<String> {
    let mut row = vec![fmt_g(value)];
    for r in &out.revenue {
        for v in [r.domestic, r.roaming, r.transit_in, r.transit_out, r.total] {
            row.push(fmt_g(v));
        }
    }
    for c in &out.surplus.countries {
        row.push(fmt_g(c.total()));
    }
    row.push(fmt_g(out.surplus.aggregate));
    row.push(mode.label().into());
    row
}

pub fn sweep_csv(names: &[String], result: &SweepResult) -> String {
    let mut w = writer();
    w.write_record(outcome_header(result.param.label(), names))
        .unwrap();
    for p in &result.points {
        let out = ModeOutcome {
            revenue: p.revenue.clone(),
            surplus: p.surplus.clone(),
        };
        w.write_record(outcome_row(p.value, &out, result.mode))
            .unwrap();
    }
    finish(w)
}

pub fn sweep_table(names: &[String], result: &SweepResult) -> String {
    let mut s = format!(
        "sweep of {} for {} ({}), {} points\n",
        result.param.label(),
        names.get(result.target).map(String::as_str).unwrap_or("?"),
        result.mode.label(),
        result.points.len()
    );
    for (label, dir) in result.verdicts() {
        let _ = writeln!(s, "  {:<24} {}", rename(&label, names), dir);
    }
    s
}

/// `revenue[1]` -> `revenue[beta]`.
fn rename(label: &str, names: &[String]) -> String {
    if let Some((head, rest)) = label.split_once('[') {
        if let Ok(i) = rest.trim_end_matches(']').parse::<usize>() {
            if let Some(n) = names.get(i) {
                return format!("{head}[{n}]");
            }
        }
    }
    label.to_string()
}

pub fn compare_csv(names: &[String], cmp: &Comparison) -> String {
    let mut w = writer();
    w.write_record(outcome_header("lambda1", names)).unwrap();
    for p in &cmp.points {
        for mode in [Mode::Traditional, Mode::Blockchain] {
            w.write_record(outcome_row(p.lambda1, p.outcome(mode), mode))
                .unwrap();
        }
    }
    finish(w)
}

pub fn compare_table(cmp: &Comparison) -> String {
    let mut s = format!("crossover lambda1 = {}\n", fmt_g(cmp.crossover));
    let _ = writeln!(
        s,
        "  {:>10} {:>12} {:>12} {:>12} {:>12}",
        "lambda1", "R1 gain", "R2 gain", "CS trad", "CS chain"
    );
    for p in &cmp.points {
        let _ = writeln!(
            s,
            "  {:>10} {:>12} {:>12} {:>12} {:>12}",
            fmt_g(p.lambda1),
            fmt_g(p.revenue_gap(0)),
            fmt_g(p.revenue_gap(1)),
            fmt_g(p.traditional.surplus.aggregate),
            fmt_g(p.blockchain.surplus.aggregate)
        );
    }
    for c in cmp.checks() {
        let _ = writeln!(
            s,
            "  {:<34} {}",
            c.name,
            if c.passed { "PASS" } else { "FAIL" }
        );
    }
    s
}

pub fn nash_csv(names: &[String], r: &NashResult) -> String {
    let mut w = writer();
    w.write_record(["operator", "t", "iterations", "converged", "corner"])
        .unwrap();
    for (n, t) in names.iter().zip(&r.t) {
        w.write_record([
            n.clone(),
            fmt_g(*t),
            r.iterations.to_string(),
            r.converged.to_string(),
            r.corner.to_string(),
        ])
        .unwrap();
    }
    finish(w)
}

pub fn nash_table(names: &[String], r: &NashResult) -> String {
    let mut s = format!(
        "transit game: {} after {} iterations{}\n",
        if r.converged {
            "converged"
        } else {
            "did not converge"
        },
        r.iterations,
        if r.corner { ", corner solution" } else { "" }
    );
    for (n, t) in names.iter().zip(&r.t) {
        let _ = writeln!(s, "  {n:<16} t = {}", fmt_g(*t));
    }
    s
}

pub fn operators_csv(report: &MetricsReport) -> String {
    let mut w = writer();
    w.write_record([
        "operator",
        "potential_users",
        "subscribers",
        "domestic_revenue",
        "roaming_revenue",
        "transit_in",
        "transit_out",
        "crypto_delta",
    ])
    .unwrap();
    for o in &report.operators {
        w.write_record([
            o.name.clone(),
            o.potential_users.to_string(),
            o.subscribers.to_string(),
            o.domestic_revenue.to_string(),
            o.roaming_revenue.to_string(),
            o.transit_in.to_string(),
            o.transit_out.to_string(),
            o.crypto_delta.to_string(),
        ])
        .unwrap();
    }
    finish(w)
}

fn audit_line(a: &Audit) -> String {
    format!(
        "debits {} credits {} ledger {} drift {} -> {}",
        a.debits,
        a.credits,
        a.ledger_total,
        a.drift,
        if a.balanced() {
            "balanced"
        } else {
            "UNBALANCED"
        }
    )
}

pub fn summary(seed: u64, report: &MetricsReport, replay_ok: bool) -> String {
    let mut s = String::new();
    let rows: Vec<(&str, String)> = vec![
        ("seed", seed.to_string()),
        ("blocks", report.blocks.to_string()),
        ("transactions", report.transactions.to_string()),
        ("sessions attempted", report.sessions.attempted.to_string()),
        ("sessions rejected", report.sessions.rejected.to_string()),
        ("sessions unsettled", report.sessions.unsettled.to_string()),
        ("sessions settled", report.sessions.settled.to_string()),
        (
            "agreements bilateral",
            report.agreements_peer_to_peer.to_string(),
        ),
        (
            "agreements on-chain",
            report.agreements_blockchain.to_string(),
        ),
        ("consumer surplus", fmt_g(report.consumer_surplus)),
        ("fiat audit (minor units)", audit_line(&report.fiat)),
        ("crypto audit (minor units)", audit_line(&report.crypto)),
        (
            "replay",
            if replay_ok { "matches" } else { "DIFFERS" }.to_string(),
        ),
    ];
    for (k, v) in rows {
        let _ = writeln!(s, "{k:<28} {v}");
    }
    let _ = writeln!(
        s,
        "\n{:<12} {:>11} {:>14} {:>14} {:>16} {:>16}",
        "operator", "subscribers", "domestic", "roaming", "crypto in", "crypto out"
    );
    for o in &report.operators {
        let _ = writeln!(
            s,
            "{:<12} {:>11} {:>14} {:>14} {:>16} {:>16}",
            o.name,
            o.subscribers,
            o.domestic_revenue.to_string(),
            o.roaming_revenue.to_string(),
            o.transit_in.to_string(),
            o.transit_out.to_string()
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use roamchain::economics::SweepParam;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(0.5), "0.5");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_g(2.0 / 3.0), "0.666667");
        assert_eq!(fmt_g(123456.0), "123456");
        assert_eq!(fmt_g(1234567.0), "1.23457e+06");
        assert_eq!(fmt_g(0.0001), "0.0001");
        assert_eq!(fmt_g(0.00001234), "1.234e-05");
        assert_eq!(fmt_g(-2.5), "-2.5");
        assert_eq!(fmt_g(999999.5), "1e+06");
        assert_eq!(fmt_g(0.1 + 0.2), "0.3");
        assert_eq!(fmt_g(f64::NAN), "nan");
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let r = SweepResult {
            param: SweepParam::P,
            target: 0,
            mode: Mode::Traditional,
            operators: 1,
            points: vec![],
        };
        let csv = sweep_csv(&["a".into()], &r);
        assert_eq!(
            csv,
            "p,a_domestic,a_roaming,a_transit_in,a_transit_out,a_total,cs_a,cs_aggregate,mode\n"
        );
    }
}
