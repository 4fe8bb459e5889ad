//! Significant itemset mining with family-wise error control.
//!
//! Given binary features and a binary label, finds every feature combination
//! whose association with the label survives a Bonferroni correction that
//! only counts *testable* combinations (Tarone's bound). The correction
//! factor is found by frequent-itemset mining at the root support `σ_rt`.
//!
//! ```
//! use lamp_core::{find_significant, parse_fimi, LabelVector, Strategy, Tail};
//!
//! let db = parse_fimi("1 2\n1 2\n1 2\n1 2\n3\n3\n3\n3\n3\n3\n".as_bytes()).unwrap();
//! let labels = LabelVector::from_bools((0..10).map(|i| i < 4).collect()).unwrap();
//! let found = find_significant(&db, &labels, 0.05, Strategy::Incremental, Tail::One).unwrap();
//! assert!(found.patterns.iter().any(|p| p.items == [1, 2]));
//! ```

pub mod datasets;
pub mod engine;
pub mod error;
pub mod miner;
pub mod report;
pub mod stats;
pub mod subsample;
pub mod txdb;

pub use engine::{
    brute_force_root, decremental_search, find_significant, find_significant_with,
    incremental_search, Findings, LampSearch, SearchOptions, SignificantPattern, Strategy,
    TaroneResult,
};
pub use error::{Error, Result};
pub use miner::{
    mine_count_capped, mine_enumerate, CountOutcome, Miner, MinerBudget, Representation,
};
pub use report::{naive_bonferroni_factor, RunSummary};
pub use stats::{
    fisher_pvalue_one_tailed, fisher_pvalue_two_tailed, hypergeom_pmf, log_binomial,
    min_attainable_pvalue, ContingencyTable, LogProb, Tail,
};
pub use subsample::{draw_subsample, estimate_root, SubsampleEstimate};
pub use txdb::{parse_fimi, parse_labels, LabelOrientation, LabelVector, TransactionDatabase};
