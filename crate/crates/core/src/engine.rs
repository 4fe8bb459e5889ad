//! Root-frequency search and significance testing under Tarone's bound.
//!
//! Because `Ψ` is non-increasing in support, the testable patterns at the
//! corrected level are exactly the itemsets with support `>= σ_rt`, where
//! `σ_rt` is the first support at which the number of frequent itemsets no
//! longer exceeds `α / Ψ(σ)`. All comparisons against `α / Ψ(σ)` happen in log
//! space; see [`MinerBudget::from_log_limit`].

use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::miner::{Miner, MinerBudget, MinerStats, PositiveMask, Representation};
use crate::stats::{check_minority, FisherKernel, LogProb, Tail};
use crate::txdb::{LabelOrientation, LabelVector, TransactionDatabase};

/// Largest item count the exhaustive oracle accepts.
pub const BRUTE_FORCE_MAX_ITEMS: usize = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Increase σ from 1, stopping the miner as soon as the count exceeds
    /// `α / Ψ(σ)`.
    #[default]
    Incremental,
    /// Decrease σ from `n`, enumerating every frequent itemset each time.
    Decremental,
    /// Score every non-empty subset directly. Small inputs only.
    BruteForce,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Incremental => "incremental",
            Strategy::Decremental => "decremental",
            Strategy::BruteForce => "brute-force",
        })
    }
}

/// Outcome of a root-frequency search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaroneResult {
    /// `σ_rt`.
    pub sigma_rt: u64,
    /// Number of testable patterns, i.e. itemsets with support `>= σ_rt`.
    /// This is the Bonferroni factor.
    pub num_testable: u128,
    /// Corrected threshold `α / num_testable` (`ln 0` when nothing is
    /// testable).
    pub delta: LogProb,
    pub alpha: f64,
    pub n: u64,
    pub total: u64,
    /// Miner runs made by the search loop itself.
    pub miner_invocations: u64,
    pub strategy: Strategy,
    pub miner_stats: MinerStats,
}

impl TaroneResult {
    /// The `ln 0` threshold means no test can pass.
    pub fn has_testable(&self) -> bool {
        self.num_testable > 0
    }
}

/// Shared configuration for the searches.
#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub threads: usize,
    pub representation: Representation,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            threads: 1,
            representation: Representation::Auto,
        }
    }
}

/// Everything needed to evaluate `α / Ψ(σ)` and mine one database.
pub struct LampSearch<'a> {
    db: &'a TransactionDatabase,
    kernel: FisherKernel,
    alpha: f64,
    log_alpha: f64,
    // Ψ is evaluated at `scale * σ` (subsampled databases)
    scale: u64,
    miner: Miner<'a>,
}

impl<'a> LampSearch<'a> {
    pub fn new(db: &'a TransactionDatabase, n: u64, alpha: f64) -> Result<Self> {
        Self::with_options(db, n, alpha, SearchOptions::default())
    }

    pub fn with_options(
        db: &'a TransactionDatabase,
        n: u64,
        alpha: f64,
        options: SearchOptions,
    ) -> Result<Self> {
        Self::with_marginals(db, n, db.num_transactions() as u64, 1, alpha, options)
    }

    /// Like [`LampSearch::with_options`] but with `Ψ(scale * σ)` evaluated
    /// against the given marginals rather than the database's own.
    pub(crate) fn with_marginals(
        db: &'a TransactionDatabase,
        n: u64,
        total: u64,
        scale: u64,
        alpha: f64,
        options: SearchOptions,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha={alpha} must lie in (0, 1)")));
        }
        if n == 0 {
            return Err(Error::DegenerateLabels("n=0".into()));
        }
        check_minority(n, total)?;
        Ok(LampSearch {
            db,
            kernel: FisherKernel::new(n, total)?,
            alpha,
            log_alpha: alpha.ln(),
            scale: scale.max(1),
            miner: Miner::new(db)
                .with_representation(options.representation)
                .with_threads(options.threads),
        })
    }

    pub fn database(&self) -> &'a TransactionDatabase {
        self.db
    }

    pub fn kernel(&self) -> &FisherKernel {
        &self.kernel
    }

    pub fn miner(&self) -> &Miner<'a> {
        &self.miner
    }

    /// `ln(α / Ψ(σ))`.
    pub fn log_limit(&self, sigma: u64) -> f64 {
        self.log_alpha - self.kernel.psi(sigma.saturating_mul(self.scale)).ln()
    }

    /// Largest pattern count that is still `<= α / Ψ(σ)`.
    pub fn budget(&self, sigma: u64) -> MinerBudget {
        MinerBudget::from_log_limit(self.log_limit(sigma))
    }

    fn result(
        &self,
        sigma_rt: u64,
        num_testable: u128,
        invocations: u64,
        strategy: Strategy,
        stats: MinerStats,
    ) -> TaroneResult {
        let delta = if num_testable == 0 {
            LogProb::ZERO
        } else {
            LogProb::clamped(self.log_alpha - (num_testable as f64).ln())
        };
        TaroneResult {
            sigma_rt,
            num_testable,
            delta,
            alpha: self.alpha,
            n: self.kernel.n(),
            total: self.kernel.total(),
            miner_invocations: invocations,
            strategy,
            miner_stats: stats,
        }
    }

    /// Increase σ from 1 until the capped count no longer exceeds
    /// `α / Ψ(σ)`. Uses exactly `σ_rt` miner runs.
    pub fn incremental(&self) -> Result<TaroneResult> {
        let mut stats = MinerStats::default();
        let mut sigma = 1u64;
        loop {
            let out = self.miner.count_capped(sigma, self.budget(sigma))?;
            stats = add_stats(stats, out.stats);
            if !out.stopped_early {
                return Ok(self.result(sigma, out.count, sigma, Strategy::Incremental, stats));
            }
            sigma += 1;
        }
    }

    /// Decrease σ from `n` with full enumeration until the count exceeds
    /// `α / Ψ(σ)`; `σ_rt` is one above that. The loop makes `n - σ_rt + 2`
    /// evaluations whenever `σ_rt <= n + 1`. Reaching σ = 0 means every subset of the `P` items is
    /// "frequent"; that count, `2^P - 1`, is known without mining.
    pub fn decremental(&self) -> Result<TaroneResult> {
        let mut stats = MinerStats::default();
        let mut invocations = 0u64;
        let mut above: Option<u128> = None;
        let mut sigma = self.kernel.n() + 1;
        loop {
            sigma -= 1;
            invocations += 1;
            if sigma == 0 {
                // every one of the 2^P - 1 subsets has support >= 0, and
                // 2^P - 1 > α = α / Ψ(0) whenever P >= 1
                break;
            }
            let out = self.miner.count_capped(sigma, MinerBudget::UNBOUNDED)?;
            stats = add_stats(stats, out.stats);
            if self.budget(sigma).exceeded_by(out.count) {
                break;
            }
            above = Some(out.count);
        }
        let mut sigma_rt = sigma + 1;
        let num_testable = match above {
            Some(c) => c,
            // The very first evaluation already overflowed. The pseudocode
            // stops at σ_rt = n + 1, but Ψ is constant past n, so T(n + 1)
            // itself may still exceed the limit; keep going up until it fits.
            // Each rejected σ counts as one more invocation.
            None => loop {
                let out = self.miner.count_capped(sigma_rt, MinerBudget::UNBOUNDED)?;
                stats = add_stats(stats, out.stats);
                if !self.budget(sigma_rt).exceeded_by(out.count) {
                    break out.count;
                }
                sigma_rt += 1;
                invocations += 1;
            },
        };
        Ok(self.result(
            sigma_rt,
            num_testable,
            invocations,
            Strategy::Decremental,
            stats,
        ))
    }

    /// Scores all `2^P - 1` subsets by scanning rows, then reads `σ_rt` off
    /// the definition. Refuses `P > 20`.
    pub fn brute_force(&self) -> Result<TaroneResult> {
        let p = self.db.num_items();
        if p > BRUTE_FORCE_MAX_ITEMS {
            return Err(Error::TooManyItems {
                items: p,
                limit: BRUTE_FORCE_MAX_ITEMS,
            });
        }
        let n_rows = self.db.num_transactions();
        let rows: Vec<u32> = self
            .db
            .transactions()
            .iter()
            .map(|t| t.iter().fold(0u32, |m, &d| m | 1 << self.db.external_id(d)))
            .collect();
        // at_least[s] = number of subsets with support >= s
        let mut hist = vec![0u128; n_rows + 2];
        for subset in 1u32..(1u32 << p) {
            let support = rows.iter().filter(|&&r| r & subset == subset).count();
            hist[support] += 1;
        }
        let mut at_least = vec![0u128; n_rows + 2];
        for s in (0..=n_rows).rev() {
            at_least[s] = at_least[s + 1] + hist[s];
        }
        let fits = |s: u64| {
            !self
                .budget(s)
                .exceeded_by(at_least[(s as usize).min(n_rows + 1)])
        };
        let sigma_rt = (1..=n_rows as u64 + 1)
            .find(|&s| fits(s))
            .expect("no itemset has support above N");
        Ok(self.result(
            sigma_rt,
            at_least[sigma_rt as usize],
            1,
            Strategy::BruteForce,
            MinerStats::default(),
        ))
    }

    pub fn run(&self, strategy: Strategy) -> Result<TaroneResult> {
        match strategy {
            Strategy::Incremental => self.incremental(),
            Strategy::Decremental => self.decremental(),
            Strategy::BruteForce => self.brute_force(),
        }
    }

    /// Re-checks both defining inequalities of `σ_rt` with uncapped counts.
    pub fn satisfies_root_definition(&self, result: &TaroneResult) -> Result<bool> {
        let sigma = result.sigma_rt;
        let at = self
            .miner
            .count_capped(sigma, MinerBudget::UNBOUNDED)?
            .count;
        if at != result.num_testable || self.budget(sigma).exceeded_by(at) {
            return Ok(false);
        }
        if sigma >= 2 {
            let below = self
                .miner
                .count_capped(sigma - 1, MinerBudget::UNBOUNDED)?
                .count;
            if !self.budget(sigma - 1).exceeded_by(below) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Per-σ comparison of the frequent-itemset count against `α / Ψ(σ)`,
    /// for σ in `1..=max_sigma`. Counts are capped at `count_cap`; a capped
    /// entry reports `count = None`.
    pub fn testability_profile(
        &self,
        max_sigma: u64,
        count_cap: u128,
    ) -> Result<Vec<ProfilePoint>> {
        (1..=max_sigma)
            .map(|sigma| {
                let out = self
                    .miner
                    .count_capped(sigma, MinerBudget::at_most(count_cap))?;
                let limit = self.log_limit(sigma);
                Ok(ProfilePoint {
                    sigma,
                    log10_limit: limit / std::f64::consts::LN_10,
                    log10_psi: self.kernel.psi(sigma.saturating_mul(self.scale)).log10(),
                    count: (!out.stopped_early).then_some(out.count),
                    testable: !out.stopped_early
                        && !MinerBudget::from_log_limit(limit).exceeded_by(out.count),
                })
            })
            .collect()
    }
}

fn add_stats(a: MinerStats, b: MinerStats) -> MinerStats {
    MinerStats {
        expansions: a.expansions + b.expansions,
        intersections: a.intersections + b.intersections,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub sigma: u64,
    pub log10_limit: f64,
    pub log10_psi: f64,
    pub count: Option<u128>,
    pub testable: bool,
}

/// `σ_rt` by increasing σ with early stopping.
pub fn incremental_search(db: &TransactionDatabase, n: u64, alpha: f64) -> Result<TaroneResult> {
    LampSearch::new(db, n, alpha)?.incremental()
}

/// `σ_rt` by the original decreasing search.
pub fn decremental_search(db: &TransactionDatabase, n: u64, alpha: f64) -> Result<TaroneResult> {
    LampSearch::new(db, n, alpha)?.decremental()
}

/// `σ_rt` straight from its definition, by enumerating every subset.
pub fn brute_force_root(db: &TransactionDatabase, n: u64, alpha: f64) -> Result<TaroneResult> {
    LampSearch::new(db, n, alpha)?.brute_force()
}

/// A testable pattern whose p-value clears the corrected threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignificantPattern {
    pub items: Vec<u32>,
    /// `x_S`.
    pub support: u64,
    /// `a_S`, counted in the (canonical) positive class.
    pub positive_count: u64,
    pub p_value: LogProb,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Findings {
    pub result: TaroneResult,
    /// Sorted by p-value, then items.
    pub patterns: Vec<SignificantPattern>,
    pub tail: Tail,
    pub orientation: LabelOrientation,
    /// Distinct contingency tables evaluated (one per equivalence class).
    pub tables_evaluated: u64,
    pub notice: Option<String>,
}

/// Runs the chosen search and tests every testable pattern at `δ`.
pub fn find_significant(
    db: &TransactionDatabase,
    labels: &LabelVector,
    alpha: f64,
    strategy: Strategy,
    tail: Tail,
) -> Result<Findings> {
    find_significant_with(db, labels, alpha, strategy, tail, SearchOptions::default())
}

pub fn find_significant_with(
    db: &TransactionDatabase,
    labels: &LabelVector,
    alpha: f64,
    strategy: Strategy,
    tail: Tail,
    options: SearchOptions,
) -> Result<Findings> {
    if labels.len() != db.num_transactions() {
        return Err(Error::domain(format!(
            "{} labels for {} transactions",
            labels.len(),
            db.num_transactions()
        )));
    }
    let search = LampSearch::with_options(db, labels.n(), alpha, options)?;
    let result = search.run(strategy)?;
    let mut findings = Findings {
        result,
        patterns: Vec::new(),
        tail,
        orientation: labels.orientation(),
        tables_evaluated: 0,
        notice: None,
    };
    if !findings.result.has_testable() {
        findings.notice = Some("no testable hypotheses".into());
        return Ok(findings);
    }
    let delta = findings.result.delta.ln();
    let mask = PositiveMask::new(db.num_transactions(), &labels.positive_tids());
    let kernel = search.kernel();
    let found = Mutex::new(Vec::new());
    let tables = std::sync::atomic::AtomicU64::new(0);
    search
        .miner()
        .for_each_class(findings.result.sigma_rt, |class| {
            tables.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            let x = class.support;
            let a = class.tids.count_in(&mask);
            // any p-value is at least the probability of the observed table
            if kernel.pmf(a, x) > delta {
                return;
            }
            let p = kernel.pvalue(a, x, tail);
            if p.ln() > delta {
                return;
            }
            let mut batch = Vec::new();
            class.for_each_itemset(db, |items| {
                batch.push(SignificantPattern {
                    items,
                    support: x,
                    positive_count: a,
                    p_value: p,
                })
            });
            found.lock().expect("lock not poisoned").extend(batch);
        })?;
    let mut patterns = found.into_inner().expect("lock not poisoned");
    patterns.sort_by(|l, r| {
        l.p_value
            .ln()
            .total_cmp(&r.p_value.ln())
            .then_with(|| l.items.cmp(&r.items))
    });
    findings.patterns = patterns;
    findings.tables_evaluated = tables.into_inner();
    Ok(findings)
}

/// `a_S` by intersecting the pattern's transactions with the positive class.
pub fn positive_count(
    db: &TransactionDatabase,
    labels: &LabelVector,
    items: &[u32],
) -> Result<u64> {
    Ok(db
        .tidset(items)?
        .into_iter()
        .filter(|&t| labels.is_positive(t as usize))
        .count() as u64)
}
