//! Exact discrete statistics for 2x2 contingency tables.
//!
//! Every probability is carried as a natural logarithm. Minimum attainable
//! p-values shrink super-exponentially with support, so anything computed in
//! linear space underflows long before the interesting thresholds are reached.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Natural log of a probability. `-inf` encodes probability zero.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogProb(f64);

impl LogProb {
    pub const ONE: LogProb = LogProb(0.0);
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);

    /// Wraps a log value, clamping tiny positive rounding excursions to zero.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() {
            return Err(Error::domain("log-probability is NaN"));
        }
        if value > 1e-9 {
            return Err(Error::domain(format!(
                "log-probability {value} is positive"
            )));
        }
        Ok(LogProb(value.min(0.0)))
    }

    pub(crate) fn clamped(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        LogProb(value.min(0.0))
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn log10(self) -> f64 {
        self.0 / std::f64::consts::LN_10
    }

    /// Linear-space probability; underflows to 0 below ~1e-308.
    #[inline]
    pub fn prob(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_log10(self.log10(), 12))
    }
}

/// Renders `10^log10` in scientific notation with `digits` significant digits
/// without ever leaving log space, so values below f64's range still print.
pub fn format_log10(log10: f64, digits: usize) -> String {
    if log10 == f64::NEG_INFINITY {
        return "0".to_string();
    }
    let digits = digits.max(1);
    let mut exponent = log10.floor();
    let mut mantissa = 10f64.powf(log10 - exponent);
    // Round the mantissa first; rounding can carry it to 10.
    let scale = 10f64.powi(digits as i32 - 1);
    mantissa = (mantissa * scale).round() / scale;
    if mantissa >= 10.0 {
        mantissa /= 10.0;
        exponent += 1.0;
    }
    format!("{:.*}e{}", digits - 1, mantissa, exponent as i64)
}

/// The 2x2 table behind one pattern's association test.
///
/// `a` is the number of positive-class rows containing the pattern, `x` the
/// pattern's support, `n` the positive-class size and `total` the number of
/// rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub a: u64,
    pub x: u64,
    pub n: u64,
    pub total: u64,
}

impl ContingencyTable {
    pub fn new(a: u64, x: u64, n: u64, total: u64) -> Result<Self> {
        check_marginals(x, n, total)?;
        let (lo, hi) = cell_range(x, n, total);
        if a < lo || a > hi {
            return Err(Error::domain(format!(
                "cell a={a} outside [{lo}, {hi}] for x={x}, n={n}, N={total}"
            )));
        }
        Ok(ContingencyTable { a, x, n, total })
    }

    /// Smallest and largest feasible value of `a` given the marginals.
    pub fn cell_range(&self) -> (u64, u64) {
        cell_range(self.x, self.n, self.total)
    }
}

fn check_marginals(x: u64, n: u64, total: u64) -> Result<()> {
    if x > total || n > total {
        return Err(Error::domain(format!(
            "invalid marginals: x={x}, n={n} must not exceed N={total}"
        )));
    }
    Ok(())
}

#[inline]
fn cell_range(x: u64, n: u64, total: u64) -> (u64, u64) {
    ((x + n).saturating_sub(total), x.min(n))
}

#[inline]
fn ln_factorial_uncached(k: u64) -> f64 {
    libm::lgamma(k as f64 + 1.0)
}

const SHARED_TABLE_LEN: usize = 1 << 14;

/// Cache of `ln k!` values.
///
/// Each entry is computed independently with the same log-gamma routine used
/// past the end of the table, so a value never depends on whether it came from
/// a cache or not. Two tables of different sizes agree bit for bit.
#[derive(Clone, Debug)]
pub struct LogFactorials {
    table: Arc<[f64]>,
}

impl LogFactorials {
    pub fn new(max: u64) -> Self {
        let len = (max as usize).saturating_add(1).max(2);
        let table: Vec<f64> = (0..len as u64).map(ln_factorial_uncached).collect();
        LogFactorials {
            table: table.into(),
        }
    }

    /// Process-wide table for ad-hoc calls.
    pub fn shared() -> &'static LogFactorials {
        static SHARED: OnceLock<LogFactorials> = OnceLock::new();
        SHARED.get_or_init(|| LogFactorials::new(SHARED_TABLE_LEN as u64 - 1))
    }

    #[inline]
    pub fn ln_factorial(&self, k: u64) -> f64 {
        match self.table.get(k as usize) {
            Some(&v) => v,
            None => ln_factorial_uncached(k),
        }
    }

    #[inline]
    pub fn ln_binomial(&self, n: u64, k: u64) -> f64 {
        if k > n {
            return f64::NEG_INFINITY;
        }
        if k == 0 || k == n {
            return 0.0;
        }
        self.ln_factorial(n) - self.ln_factorial(k) - self.ln_factorial(n - k)
    }
}

/// `ln C(n, k)`, or `-inf` when `k > n`.
pub fn log_binomial(n: u64, k: u64) -> f64 {
    LogFactorials::shared().ln_binomial(n, k)
}

/// Fisher's exact test and the minimum attainable p-value for fixed row
/// marginals `(n, total)`. Holds its own factorial cache sized to `total`.
#[derive(Clone, Debug)]
pub struct FisherKernel {
    lf: LogFactorials,
    n: u64,
    total: u64,
}

/// Which tail(s) a Fisher p-value sums over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    /// Upper tail: tables with at least as many positive occurrences.
    #[default]
    One,
    /// Twice the smaller tail, capped at 1.
    Two,
}

impl FisherKernel {
    pub fn new(n: u64, total: u64) -> Result<Self> {
        if n > total {
            return Err(Error::domain(format!("n={n} exceeds N={total}")));
        }
        Ok(FisherKernel {
            lf: LogFactorials::new(total),
            n,
            total,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn log_factorials(&self) -> &LogFactorials {
        &self.lf
    }

    /// Hypergeometric log-pmf of `a` given support `x`; `-inf` off-support.
    #[inline]
    pub fn pmf(&self, a: u64, x: u64) -> f64 {
        let (lo, hi) = cell_range(x, self.n, self.total);
        if a < lo || a > hi {
            return f64::NEG_INFINITY;
        }
        let lf = &self.lf;
        lf.ln_binomial(self.n, a) + lf.ln_binomial(self.total - self.n, x - a)
            - lf.ln_binomial(self.total, x)
    }

    /// `ln Σ_{k=from}^{to} pmf(k)`, accumulated as a running log-sum-exp.
    fn tail_sum(&self, x: u64, from: u64, to: u64) -> f64 {
        let mut max = f64::NEG_INFINITY;
        let mut acc = 0.0f64;
        for k in from..=to {
            let t = self.pmf(k, x);
            if t == f64::NEG_INFINITY {
                continue;
            }
            if t > max {
                acc = acc * (max - t).exp() + 1.0;
                max = t;
            } else {
                acc += (t - max).exp();
            }
        }
        if max == f64::NEG_INFINITY {
            max
        } else {
            max + acc.ln()
        }
    }

    pub fn upper_tail(&self, a: u64, x: u64) -> LogProb {
        let (lo, hi) = cell_range(x, self.n, self.total);
        LogProb::clamped(self.tail_sum(x, a.max(lo), hi))
    }

    pub fn lower_tail(&self, a: u64, x: u64) -> LogProb {
        let (lo, hi) = cell_range(x, self.n, self.total);
        LogProb::clamped(self.tail_sum(x, lo, a.min(hi)))
    }

    pub fn pvalue(&self, a: u64, x: u64, tail: Tail) -> LogProb {
        match tail {
            Tail::One => self.upper_tail(a, x),
            Tail::Two => {
                let smaller = self.upper_tail(a, x).ln().min(self.lower_tail(a, x).ln());
                LogProb::clamped(std::f64::consts::LN_2 + smaller)
            }
        }
    }

    /// Minimum attainable p-value for a pattern with support `x`.
    ///
    /// Requires `n <= N - n`. Past `x = n` the exact minimum stops being
    /// monotone, so the constant `1 / C(N, n)` is used instead; it is a lower
    /// bound and keeps the function non-increasing.
    #[inline]
    pub fn psi(&self, x: u64) -> LogProb {
        let lf = &self.lf;
        if x <= self.n {
            LogProb::clamped(lf.ln_binomial(self.n, x) - lf.ln_binomial(self.total, x))
        } else {
            LogProb::clamped(-lf.ln_binomial(self.total, self.n))
        }
    }
}

/// `ln [C(n,a) C(N-n,x-a) / C(N,x)]`.
pub fn hypergeom_pmf(a: u64, x: u64, n: u64, total: u64) -> Result<LogProb> {
    check_marginals(x, n, total)?;
    let (lo, hi) = cell_range(x, n, total);
    if a < lo || a > hi {
        return Ok(LogProb::ZERO);
    }
    let lf = LogFactorials::shared();
    Ok(LogProb::clamped(
        lf.ln_binomial(n, a) + lf.ln_binomial(total - n, x - a) - lf.ln_binomial(total, x),
    ))
}

fn adhoc_kernel(n: u64, total: u64) -> FisherKernel {
    FisherKernel {
        lf: LogFactorials::shared().clone(),
        n,
        total,
    }
}

/// Upper-tail Fisher p-value: `P(A >= a)` under the hypergeometric null.
pub fn fisher_pvalue_one_tailed(t: &ContingencyTable) -> LogProb {
    adhoc_kernel(t.n, t.total).upper_tail(t.a, t.x)
}

/// `min(1, 2 * min(upper, lower))`.
pub fn fisher_pvalue_two_tailed(t: &ContingencyTable) -> LogProb {
    adhoc_kernel(t.n, t.total).pvalue(t.a, t.x, Tail::Two)
}

/// `Ψ(x, n, N)`: the smallest p-value Fisher's test can produce for support
/// `x`. Fails if `n` is the majority class; swap labels first.
pub fn min_attainable_pvalue(x: u64, n: u64, total: u64) -> Result<LogProb> {
    check_minority(n, total)?;
    if x > total {
        return Err(Error::domain(format!("support x={x} exceeds N={total}")));
    }
    Ok(adhoc_kernel(n, total).psi(x))
}

pub(crate) fn check_minority(n: u64, total: u64) -> Result<()> {
    if n > total || n > total - n {
        return Err(Error::domain(format!(
            "n={n} is the majority class of N={total}; swap the labels so n <= N - n"
        )));
    }
    Ok(())
}

/// `σ ln(n/N)`, the small-support approximation of `ln Ψ`. Diagnostics only.
pub fn approx_min_pvalue(sigma: u64, n: u64, total: u64) -> LogProb {
    if sigma == 0 {
        return LogProb::ONE;
    }
    LogProb::clamped(sigma as f64 * (n as f64 / total as f64).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn log_binomial_examples() {
        assert!(close(log_binomial(5, 2), 10f64.ln(), 1e-14));
        for n in [0, 1, 7, 1000, 1 << 20] {
            assert_eq!(log_binomial(n, 0), 0.0);
        }
        assert_eq!(log_binomial(3, 5), f64::NEG_INFINITY);
    }

    #[test]
    fn table_and_fallback_agree() {
        let small = LogFactorials::new(10);
        let big = LogFactorials::new(100_000);
        for k in [0u64, 5, 11, 999, 50_000, 99_999] {
            assert_eq!(
                small.ln_factorial(k).to_bits(),
                big.ln_factorial(k).to_bits()
            );
        }
    }

    #[test]
    fn hypergeom_examples() {
        let v = hypergeom_pmf(1, 2, 2, 4).unwrap();
        assert!(close(v.ln(), (2.0f64 / 3.0).ln(), 1e-13));
        assert!(hypergeom_pmf(5, 2, 2, 4).unwrap().is_zero());
        let total: f64 = (0..=3)
            .map(|a| hypergeom_pmf(a, 3, 4, 10).unwrap().prob())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(hypergeom_pmf(0, 5, 2, 4).is_err());
        assert!(hypergeom_pmf(0, 1, 5, 4).is_err());
    }

    #[test]
    fn one_tailed_examples() {
        let t = ContingencyTable::new(2, 2, 2, 4).unwrap();
        assert!(close(
            fisher_pvalue_one_tailed(&t).ln(),
            (1.0f64 / 6.0).ln(),
            1e-13
        ));
        // a at the bottom of its range sums the whole support
        let t = ContingencyTable::new(1, 7, 4, 10).unwrap();
        assert!(fisher_pvalue_one_tailed(&t).ln().abs() < 1e-14);
        // (2, 3, 4, 10): P(A>=2) = [C(4,2)C(6,1) + C(4,3)] / C(10,3) = 40/120
        let t = ContingencyTable::new(2, 3, 4, 10).unwrap();
        assert!(close(
            fisher_pvalue_one_tailed(&t).prob(),
            40.0 / 120.0,
            1e-13
        ));
    }

    #[test]
    fn two_tailed_examples() {
        let t = ContingencyTable::new(2, 2, 2, 4).unwrap();
        assert!(close(
            fisher_pvalue_two_tailed(&t).ln(),
            (1.0f64 / 3.0).ln(),
            1e-13
        ));
        // symmetric table: both tails equal 1/2 + pmf(mid)/2 > 1/2, so capped at 1
        let t = ContingencyTable::new(1, 2, 2, 4).unwrap();
        assert_eq!(fisher_pvalue_two_tailed(&t).ln(), 0.0);
        // x=1, n=1, N=2, a=1: each tail is 1/2, doubled is exactly 1
        let t = ContingencyTable::new(1, 1, 1, 2).unwrap();
        assert!(fisher_pvalue_two_tailed(&t).ln().abs() < 1e-15);
    }

    #[test]
    fn invalid_tables_rejected() {
        assert!(ContingencyTable::new(3, 2, 4, 10).is_err());
        assert!(ContingencyTable::new(0, 8, 5, 10).is_err()); // a >= x + n - N = 3
        assert!(ContingencyTable::new(0, 11, 5, 10).is_err());
    }

    #[test]
    fn psi_examples() {
        for (n, total) in [(1u64, 2u64), (3, 10), (40, 100)] {
            assert_eq!(min_attainable_pvalue(0, n, total).unwrap().ln(), 0.0);
            let one = min_attainable_pvalue(1, n, total).unwrap();
            assert!(close(one.ln(), (n as f64 / total as f64).ln(), 1e-13));
        }
        let v = min_attainable_pvalue(2, 5, 10).unwrap();
        assert!(close(v.ln(), (10.0f64 / 45.0).ln(), 1e-13));
        assert!(min_attainable_pvalue(1, 6, 10).is_err());
        // beyond n the value is pinned at 1 / C(N, n)
        let above = min_attainable_pvalue(7, 5, 10).unwrap();
        assert!(close(above.ln(), -(252.0f64).ln(), 1e-13));
        assert_eq!(above, min_attainable_pvalue(5, 5, 10).unwrap());
    }

    #[test]
    fn psi_equals_pvalue_of_most_extreme_table() {
        let k = FisherKernel::new(7, 30).unwrap();
        for x in 0..=7 {
            let p = k.upper_tail(x, x);
            assert!(close(p.ln(), k.psi(x).ln(), 1e-12), "x={x}");
        }
    }

    #[test]
    fn approx_psi() {
        assert_eq!(approx_min_pvalue(0, 3, 9).ln(), 0.0);
        assert!(close(approx_min_pvalue(1, 5, 10).ln(), 0.5f64.ln(), 1e-15));
        let exact = min_attainable_pvalue(10, 50, 100).unwrap().ln();
        let approx = approx_min_pvalue(10, 50, 100).ln();
        assert!(
            (exact - approx).abs() <= std::f64::consts::LN_2,
            "{exact} vs {approx}"
        );
    }

    #[test]
    fn format_log10_handles_underflow() {
        assert_eq!(format_log10(-400.0, 3), "1.00e-400");
        assert_eq!(format_log10(0.0, 12), "1.00000000000e0");
        assert_eq!(format_log10((0.5f64).log10(), 4), "5.000e-1");
        assert_eq!(format_log10(f64::NEG_INFINITY, 4), "0");
        // 9.9999999 rounds up across a decade
        assert_eq!(format_log10((9.99999999f64).log10(), 3), "1.00e1");
    }

    #[test]
    fn log_prob_rejects_positive() {
        assert!(LogProb::new(0.1).is_err());
        assert!(LogProb::new(f64::NAN).is_err());
        assert_eq!(LogProb::new(1e-12).unwrap().ln(), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn pmf_normalizes(total in 1u64..=200, n_frac in 0.0f64..=1.0, x_frac in 0.0f64..=1.0) {
                let n = (n_frac * total as f64) as u64;
                let x = (x_frac * total as f64) as u64;
                let k = FisherKernel::new(n, total).unwrap();
                let (lo, hi) = cell_range(x, n, total);
                let s: f64 = (lo..=hi).map(|a| k.pmf(a, x).exp()).sum();
                prop_assert!((s - 1.0).abs() < 1e-10);
            }

            #[test]
            fn one_tailed_in_unit_interval(total in 1u64..=150, n_frac in 0.0f64..=1.0, x_frac in 0.0f64..=1.0, a_frac in 0.0f64..=1.0) {
                let n = (n_frac * total as f64) as u64;
                let x = (x_frac * total as f64) as u64;
                let (lo, hi) = cell_range(x, n, total);
                let a = lo + ((hi - lo) as f64 * a_frac) as u64;
                let p = fisher_pvalue_one_tailed(&ContingencyTable::new(a, x, n, total).unwrap()).prob();
                prop_assert!(p > 0.0 && p <= 1.0);
            }

            #[test]
            fn psi_non_increasing(total in 2u64..=500, n_frac in 0.0f64..0.5) {
                let n = ((n_frac * total as f64) as u64).max(1).min(total / 2);
                let k = FisherKernel::new(n, total).unwrap();
                let mut prev = k.psi(0);
                for x in 1..=total {
                    let cur = k.psi(x);
                    prop_assert!(cur.ln() <= prev.ln());
                    prev = cur;
                }
            }
        }
    }
}
