//! Machine-readable outputs and the naive Bonferroni comparator.

use std::io::Write;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::engine::{Findings, Strategy};
use crate::error::{Error, Result};
use crate::stats::{format_log10, LogProb, Tail};
use crate::txdb::LabelOrientation;

/// `Σ_{i=1}^{d} C(P, i)`: the number of hypotheses when interactions are
/// restricted to order `d`. `d = P` gives `2^P - 1`.
pub fn naive_bonferroni_factor(p: u64, d: u64) -> Result<BigUint> {
    if d > p {
        return Err(Error::domain(format!("order d={d} exceeds P={p}")));
    }
    let mut sum = BigUint::from(0u32);
    let mut term = BigUint::from(1u32); // C(P, 0)
    for i in 1..=d {
        term = term * (p - i + 1) / i;
        sum += &term;
    }
    Ok(sum)
}

/// Scientific notation with `digits` significant figures, exact for any size.
pub fn format_biguint(v: &BigUint, digits: usize) -> String {
    let digits = digits.max(1);
    let mut s = v.to_str_radix(10);
    let exp0 = s.len() - 1;
    while s.len() <= digits {
        s.push('0');
    }
    // round the leading digits by hand to avoid going through f64
    let mut lead: Vec<u8> = s.as_bytes()[..digits].iter().map(|b| b - b'0').collect();
    let mut exp = exp0;
    if s.as_bytes()[digits] >= b'5' {
        let mut i = digits;
        loop {
            if i == 0 {
                lead.insert(0, 1);
                lead.pop();
                exp += 1;
                break;
            }
            i -= 1;
            if lead[i] == 9 {
                lead[i] = 0;
            } else {
                lead[i] += 1;
                break;
            }
        }
    }
    let mut out = String::new();
    out.push((b'0' + lead[0]) as char);
    if digits > 1 {
        out.push('.');
        out.extend(lead[1..].iter().map(|d| (b'0' + d) as char));
    }
    format!("{out}e+{exp:02}")
}

/// Three significant figures, matching how testable counts are tabulated.
pub fn format_count(v: u128) -> String {
    format_biguint(&BigUint::from(v), 3)
}

/// Header of `patterns.tsv`.
pub const PATTERNS_HEADER: &str = "items\tsupport\ta\tp_value\tlog10_p";

/// Writes significant patterns, one per line, in the order given.
pub fn write_patterns_tsv<W: Write>(findings: &Findings, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{PATTERNS_HEADER}")?;
    for p in &findings.patterns {
        let items = p
            .items
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(
            out,
            "{items}\t{}\t{}\t{}\t{:.6}",
            p.support,
            p.positive_count,
            format_pvalue(p.p_value),
            p.p_value.log10()
        )?;
    }
    Ok(())
}

/// Decimal p-value with 12 significant digits, computed in log space so tiny
/// values do not underflow.
pub fn format_pvalue(p: LogProb) -> String {
    format_log10(p.log10(), 12)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub dataset: String,
    #[serde(rename = "N")]
    pub total: u64,
    #[serde(rename = "P")]
    pub num_items: u64,
    pub n: u64,
    pub alpha: f64,
    pub strategy: Strategy,
    pub tail: Tail,
    pub sigma_rt: u64,
    /// Exact, as a decimal string: counts can exceed 2^53.
    pub num_testable: String,
    pub num_testable_sci: String,
    pub delta: LogProb,
    pub delta_log10: f64,
    pub num_significant: u64,
    pub miner_invocations: u64,
    pub wall_time_ms: u64,
    pub label_orientation: LabelOrientation,
    pub notice: Option<String>,
    pub version: String,
}

impl RunSummary {
    pub fn from_findings(
        dataset: &str,
        num_items: u64,
        findings: &Findings,
        wall_time_ms: u64,
    ) -> Self {
        let r = &findings.result;
        RunSummary {
            dataset: dataset.to_string(),
            total: r.total,
            num_items,
            n: r.n,
            alpha: r.alpha,
            strategy: r.strategy,
            tail: findings.tail,
            sigma_rt: r.sigma_rt,
            num_testable: r.num_testable.to_string(),
            num_testable_sci: format_count(r.num_testable),
            delta: r.delta,
            delta_log10: r.delta.log10(),
            num_significant: findings.patterns.len() as u64,
            miner_invocations: r.miner_invocations,
            wall_time_ms,
            label_orientation: findings.orientation,
            notice: findings.notice.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Rows of `compare.tsv`: the LAMP factor next to naive factors for orders
/// 3, 5, 7, 9 (where `d <= P`) and for all orders.
pub fn comparison_rows(num_items: u64, num_testable: u128) -> Vec<(String, BigUint)> {
    let mut rows = vec![("lamp".to_string(), BigUint::from(num_testable))];
    for d in [3, 5, 7, 9] {
        if d <= num_items {
            let f = naive_bonferroni_factor(num_items, d).expect("d <= P");
            rows.push((format!("naive_d{d}"), f));
        }
    }
    rows.push((
        "naive_all".to_string(),
        (BigUint::from(1u32) << num_items) - 1u32,
    ));
    rows
}

pub fn write_compare_tsv<W: Write>(
    num_items: u64,
    num_testable: u128,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "method\tfactor\tfactor_sci")?;
    for (name, f) in comparison_rows(num_items, num_testable) {
        writeln!(out, "{name}\t{f}\t{}", format_biguint(&f, 3))?;
    }
    Ok(())
}
