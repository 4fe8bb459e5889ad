//! Independent oracles for the statistics and the miner.

use lamp_core::stats::{
    fisher_pvalue_one_tailed, fisher_pvalue_two_tailed, hypergeom_pmf, ContingencyTable,
};
use lamp_core::{mine_count_capped, mine_enumerate, MinerBudget, TransactionDatabase};
use proptest::prelude::*;

fn exact_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn pmf_normalizes_up_to_200() {
    for total in 0..=200u64 {
        for n in (0..=total).step_by(7) {
            for x in 0..=total {
                let lo = (x + n).saturating_sub(total);
                let s: f64 = (lo..=x.min(n))
                    .map(|a| hypergeom_pmf(a, x, n, total).unwrap().prob())
                    .sum();
                assert!((s - 1.0).abs() <= 1e-10, "x={x} n={n} N={total}: {s}");
            }
        }
    }
}

#[test]
fn tail_by_enumerating_tables() {
    // a=2, x=3, n=4, N=10: tables with cell >= 2 are a = 2, 3
    let p = |a: u64| exact_binomial(4, a) * exact_binomial(6, 3 - a) / exact_binomial(10, 3);
    let expect = p(2) + p(3);
    let t = ContingencyTable::new(2, 3, 4, 10).unwrap();
    assert!((fisher_pvalue_one_tailed(&t).prob() - expect).abs() < 1e-14);
    // lower tail is p(0) + p(1) + p(2) = 1 - p(3)
    let lower = p(0) + p(1) + p(2);
    let two = (2.0 * expect.min(lower)).min(1.0);
    assert!((fisher_pvalue_two_tailed(&t).prob() - two).abs() < 1e-14);
}

fn brute_force_itemsets(rows: &[Vec<u32>], p: u32, sigma: u64) -> Vec<(Vec<u32>, u64)> {
    let masks: Vec<u32> = rows
        .iter()
        .map(|r| r.iter().fold(0, |m, &i| m | 1 << i))
        .collect();
    let mut out = Vec::new();
    for s in 1u32..1 << p {
        let x = masks.iter().filter(|&&m| m & s == s).count() as u64;
        if x >= sigma {
            out.push(((0..p).filter(|b| s >> b & 1 == 1).collect(), x));
        }
    }
    out.sort();
    out
}

proptest! {
    #[test]
    fn enumerate_matches_subset_scan(
        rows in prop::collection::vec(prop::collection::vec(0u32..8, 0..8), 0..20),
        sigma in 1u64..6,
    ) {
        let db = TransactionDatabase::from_transactions(rows.clone());
        let mut got: Vec<(Vec<u32>, u64)> = mine_enumerate(&db, sigma)
            .unwrap()
            .into_iter()
            .map(|f| (f.items, f.support))
            .collect();
        got.sort();
        let want = brute_force_itemsets(&rows, 8, sigma);
        prop_assert_eq!(&got, &want);
        let c = mine_count_capped(&db, sigma, MinerBudget::UNBOUNDED).unwrap();
        prop_assert_eq!(c.count, want.len() as u128);
    }

    #[test]
    fn support_matches_row_scan(
        rows in prop::collection::vec(prop::collection::vec(0u32..10, 0..10), 1..30),
        items in prop::collection::btree_set(0u32..10, 0..4),
    ) {
        let db = TransactionDatabase::from_transactions_with(rows.clone(), lamp_core::txdb::ItemSpace::MaxId);
        let items: Vec<u32> = items.into_iter().collect();
        let want = rows.iter().filter(|r| items.iter().all(|i| r.contains(i))).count() as u64;
        if items.iter().all(|&i| (i as usize) < db.num_items()) {
            prop_assert_eq!(db.pattern_support(&items).unwrap(), want);
        } else {
            prop_assert!(db.pattern_support(&items).is_err());
        }
    }
}
