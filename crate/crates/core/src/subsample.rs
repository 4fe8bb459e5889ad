//! Cheap estimates of `σ_rt` from a with-replacement subsample.
//!
//! Drawing `floor(N / K)` rows makes each subsample support roughly `x_S / K`,
//! so the root found on the subsample, with `Ψ` evaluated at `K σ'` against
//! the original marginals, scales back by `K`. Results are approximate and
//! carry a resolution of `K`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{LampSearch, SearchOptions};
use crate::error::{Error, Result};
use crate::miner::MinerBudget;
use crate::txdb::TransactionDatabase;

/// Name of the generator behind [`draw_subsample`], recorded in reports.
pub const RNG_NAME: &str = "ChaCha8Rng";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsampleEstimate {
    #[serde(rename = "K")]
    pub k: u64,
    /// `σ'_rt` on the subsample.
    pub sigma_prime: u64,
    /// `K σ'_rt`.
    pub sigma_hat: u64,
    /// Frequent-itemset count of the subsample at `σ'_rt`.
    pub estimated_testable: u128,
    pub seed: Option<u64>,
    /// Set when the subsample contains no items at all.
    pub degenerate: bool,
    pub approximate: bool,
    pub miner_invocations: u64,
}

/// `floor(N / K)` rows drawn uniformly with replacement.
pub fn draw_subsample(db: &TransactionDatabase, k: u64, seed: u64) -> Result<TransactionDatabase> {
    let total = db.num_transactions() as u64;
    if k == 0 {
        return Err(Error::domain("subsampling ratio K must be at least 1"));
    }
    if total < k {
        return Err(Error::domain(format!("K={k} exceeds N={total}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tids: Vec<usize> = (0..total / k)
        .map(|_| rng.random_range(0..total as usize))
        .collect();
    Ok(db.select(&tids))
}

/// Incremental search on `db_sub` with `Ψ(K σ, n, N)` in the stopping rule.
/// `n` and `total` are the original database's marginals.
pub fn estimate_root(
    db_sub: &TransactionDatabase,
    k: u64,
    n: u64,
    total: u64,
    alpha: f64,
) -> Result<SubsampleEstimate> {
    estimate_root_with(db_sub, k, n, total, alpha, SearchOptions::default())
}

pub fn estimate_root_with(
    db_sub: &TransactionDatabase,
    k: u64,
    n: u64,
    total: u64,
    alpha: f64,
    options: SearchOptions,
) -> Result<SubsampleEstimate> {
    if k == 0 {
        return Err(Error::domain("subsampling ratio K must be at least 1"));
    }
    let search = LampSearch::with_marginals(db_sub, n, total, k, alpha, options)?;
    let degenerate = db_sub.num_occurrences() == 0;
    let r = search.incremental()?;
    Ok(SubsampleEstimate {
        k,
        sigma_prime: r.sigma_rt,
        sigma_hat: k * r.sigma_rt,
        estimated_testable: r.num_testable,
        seed: None,
        degenerate,
        approximate: true,
        miner_invocations: r.miner_invocations,
    })
}

/// Draws a subsample with `seed` and estimates its root.
pub fn estimate_with_seed(
    db: &TransactionDatabase,
    k: u64,
    n: u64,
    alpha: f64,
    seed: u64,
    options: SearchOptions,
) -> Result<SubsampleEstimate> {
    let sub = draw_subsample(db, k, seed)?;
    let mut est = estimate_root_with(&sub, k, n, db.num_transactions() as u64, alpha, options)?;
    est.seed = Some(seed);
    Ok(est)
}

/// Checks both inequalities of the subsample root definition on `db_sub`.
pub fn satisfies_subsample_root(
    db_sub: &TransactionDatabase,
    est: &SubsampleEstimate,
    n: u64,
    total: u64,
    alpha: f64,
) -> Result<bool> {
    let search =
        LampSearch::with_marginals(db_sub, n, total, est.k, alpha, SearchOptions::default())?;
    let count = |s| {
        search
            .miner()
            .count_capped(s, MinerBudget::UNBOUNDED)
            .map(|o| o.count)
    };
    let at = count(est.sigma_prime)?;
    if at != est.estimated_testable || search.budget(est.sigma_prime).exceeded_by(at) {
        return Ok(false);
    }
    if est.sigma_prime >= 2
        && !search
            .budget(est.sigma_prime - 1)
            .exceeded_by(count(est.sigma_prime - 1)?)
    {
        return Ok(false);
    }
    Ok(true)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64;
    (m, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::incremental_search;

    fn sample_db() -> TransactionDatabase {
        let rows: Vec<Vec<u32>> = (0..60u32)
            .map(|i| {
                (0..7)
                    .filter(|b| (i * 5 + b * 11) % 7 < 3 || (i < 15 && *b < 2))
                    .collect()
            })
            .collect();
        TransactionDatabase::from_transactions(rows)
    }

    #[test]
    fn sizes_and_errors() {
        let db = sample_db();
        assert_eq!(draw_subsample(&db, 1, 3).unwrap().num_transactions(), 60);
        assert_eq!(draw_subsample(&db, 7, 3).unwrap().num_transactions(), 8);
        assert_eq!(
            draw_subsample(&db, 7, 3).unwrap().num_items(),
            db.num_items()
        );
        assert!(draw_subsample(&db, 61, 3).is_err());
        assert!(draw_subsample(&db, 0, 3).is_err());
    }

    #[test]
    fn seeded_draws_repeat() {
        let db = sample_db();
        let a = draw_subsample(&db, 2, 42).unwrap();
        let b = draw_subsample(&db, 2, 42).unwrap();
        let c = draw_subsample(&db, 2, 43).unwrap();
        assert_eq!(a.to_fimi_string(), b.to_fimi_string());
        assert_ne!(a.to_fimi_string(), c.to_fimi_string());
    }

    #[test]
    fn unit_ratio_without_resampling_is_exact() {
        let db = sample_db();
        let est = estimate_root(&db, 1, 15, 60, 0.05).unwrap();
        let exact = incremental_search(&db, 15, 0.05).unwrap();
        assert_eq!(est.sigma_prime, exact.sigma_rt);
        assert_eq!(est.sigma_hat, exact.sigma_rt);
        assert_eq!(est.estimated_testable, exact.num_testable);
    }

    #[test]
    fn estimates_are_multiples_of_k_and_definitional() {
        let db = sample_db();
        for k in [1, 2, 3, 5] {
            for seed in 0..5 {
                let est =
                    estimate_with_seed(&db, k, 15, 0.05, seed, SearchOptions::default()).unwrap();
                assert_eq!(est.sigma_hat, k * est.sigma_prime);
                assert!(est.sigma_hat >= k);
                let sub = draw_subsample(&db, k, seed).unwrap();
                assert!(satisfies_subsample_root(&sub, &est, 15, 60, 0.05).unwrap());
            }
        }
    }

    #[test]
    fn empty_subsample_is_flagged() {
        let db = TransactionDatabase::from_transactions(vec![Vec::<u32>::new(); 10]);
        let est = estimate_root(&db, 2, 3, 20, 0.05).unwrap();
        assert!(est.degenerate);
        assert_eq!((est.sigma_prime, est.estimated_testable), (1, 0));
    }

    #[test]
    fn mean_and_std() {
        assert_eq!(mean_std(&[12.0; 10]), (12.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }
}
