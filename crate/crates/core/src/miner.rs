//! Depth-first frequent itemset enumeration over a vertical database.
//!
//! The search walks a lexicographic set-enumeration tree (Eclat style). Each
//! node carries the transaction set of its prefix; children are formed by
//! intersecting sibling transaction sets and dropping the ones below the
//! support threshold.
//!
//! Extensions whose support equals the prefix support ("perfect" extensions)
//! are pulled out of the tree: every subset of them can be added to any
//! itemset below the node without changing its transaction set. A node together
//! with its accumulated perfect extensions forms an equivalence class of
//! `2^|perfect|` itemsets that share one transaction set, which is what the
//! miner reports and counts.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
#[cfg(feature = "parallel")]
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::txdb::TransactionDatabase;

/// Upper bound on the number of frequent itemsets to count before giving up.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MinerBudget {
    cap: Option<u128>,
}

impl MinerBudget {
    pub const UNBOUNDED: MinerBudget = MinerBudget { cap: None };

    pub fn at_most(cap: u128) -> Self {
        MinerBudget { cap: Some(cap) }
    }

    /// The largest integer `m` with `ln(m) <= log_limit`, evaluated the same
    /// way callers compare counts against `α / Ψ` in log space.
    pub fn from_log_limit(log_limit: f64) -> Self {
        if log_limit.is_nan() {
            return MinerBudget::at_most(0);
        }
        if log_limit == f64::INFINITY {
            return MinerBudget::UNBOUNDED;
        }
        let ok = |m: u128| (m as f64).ln() <= log_limit;
        if ok(u128::MAX) {
            return MinerBudget::at_most(u128::MAX);
        }
        // ok(0) always holds since ln 0 = -inf
        let (mut lo, mut hi) = (0u128, u128::MAX);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        MinerBudget::at_most(lo)
    }

    pub fn cap(&self) -> Option<u128> {
        self.cap
    }

    /// True when `count` exceeds the budget.
    pub fn exceeded_by(&self, count: u128) -> bool {
        self.cap.is_some_and(|c| count > c)
    }
}

/// Work counters, exposed so tests can bound what early stopping saves.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinerStats {
    /// Search-tree nodes (equivalence classes) processed.
    pub expansions: u64,
    /// Transaction-set intersections computed.
    pub intersections: u64,
}

impl MinerStats {
    fn merge(self, other: MinerStats) -> MinerStats {
        MinerStats {
            expansions: self.expansions + other.expansions,
            intersections: self.intersections + other.intersections,
        }
    }
}

/// Result of a count-only mining run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CountOutcome {
    /// Exact number of frequent itemsets if `!stopped_early`; otherwise some
    /// number above the cap.
    pub count: u128,
    pub stopped_early: bool,
    pub stats: MinerStats,
}

/// A frequent itemset over external item ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FrequentItemset {
    pub items: Vec<u32>,
    pub support: u64,
}

/// Transaction-set backing store.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Representation {
    /// Bit vectors for dense databases, sorted id lists otherwise.
    #[default]
    Auto,
    Bitset,
    TidList,
}

/// Membership mask of the positive class, usable against either backing.
#[derive(Clone, Debug)]
pub struct PositiveMask {
    words: Vec<u64>,
    flags: Vec<bool>,
}

impl PositiveMask {
    pub fn new(num_transactions: usize, positive: &[u32]) -> Self {
        let mut words = vec![0u64; num_transactions.div_ceil(64)];
        let mut flags = vec![false; num_transactions];
        for &t in positive {
            words[t as usize / 64] |= 1 << (t % 64);
            flags[t as usize] = true;
        }
        PositiveMask { words, flags }
    }
}

/// Read access to a class's transaction set.
pub trait TidsetView {
    fn support(&self) -> u64;
    /// Number of transactions that are also in `mask`.
    fn count_in(&self, mask: &PositiveMask) -> u64;
    fn to_vec(&self) -> Vec<u32>;
}

trait Tidset: TidsetView + Sized + Send + Sync {
    fn from_occurrences(occ: &[u32], num_transactions: usize) -> Self;
    /// Intersection, or `None` once it provably falls below `min_support`.
    fn intersect(&self, other: &Self, min_support: u64) -> Option<Self>;
}

struct BitTids {
    words: Vec<u64>,
    count: u64,
}

impl TidsetView for BitTids {
    fn support(&self) -> u64 {
        self.count
    }

    fn count_in(&self, mask: &PositiveMask) -> u64 {
        self.words
            .iter()
            .zip(&mask.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    fn to_vec(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.count as usize);
        for (i, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                out.push(i as u32 * 64 + w.trailing_zeros());
                w &= w - 1;
            }
        }
        out
    }
}

impl Tidset for BitTids {
    fn from_occurrences(occ: &[u32], num_transactions: usize) -> Self {
        let mut words = vec![0u64; num_transactions.div_ceil(64)];
        for &t in occ {
            words[t as usize / 64] |= 1 << (t % 64);
        }
        BitTids {
            words,
            count: occ.len() as u64,
        }
    }

    fn intersect(&self, other: &Self, min_support: u64) -> Option<Self> {
        let n = self.words.len();
        let mut words = Vec::with_capacity(n);
        let mut count = 0u64;
        let (mut seen_a, mut seen_b) = (0u64, 0u64);
        for (a, b) in self.words.iter().zip(&other.words) {
            let v = a & b;
            count += v.count_ones() as u64;
            seen_a += a.count_ones() as u64;
            seen_b += b.count_ones() as u64;
            // what is left of either operand bounds the final support
            let remaining = (self.count - seen_a).min(other.count - seen_b);
            if count + remaining < min_support {
                return None;
            }
            words.push(v);
        }
        (count >= min_support).then_some(BitTids { words, count })
    }
}

struct ListTids {
    ids: Vec<u32>,
}

impl TidsetView for ListTids {
    fn support(&self) -> u64 {
        self.ids.len() as u64
    }

    fn count_in(&self, mask: &PositiveMask) -> u64 {
        self.ids.iter().filter(|&&t| mask.flags[t as usize]).count() as u64
    }

    fn to_vec(&self) -> Vec<u32> {
        self.ids.clone()
    }
}

impl Tidset for ListTids {
    fn from_occurrences(occ: &[u32], _num_transactions: usize) -> Self {
        ListTids { ids: occ.to_vec() }
    }

    fn intersect(&self, other: &Self, min_support: u64) -> Option<Self> {
        let (a, b) = (&self.ids, &other.ids);
        if (a.len().min(b.len()) as u64) < min_support {
            return None;
        }
        let mut out = Vec::with_capacity(a.len().min(b.len()));
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if ((out.len() + (a.len() - i).min(b.len() - j)) as u64) < min_support {
                return None;
            }
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        ((out.len() as u64) >= min_support).then_some(ListTids { ids: out })
    }
}

/// One equivalence class: `base` plus any subset of `perfect`, all sharing
/// the same transaction set. Item indices are dense; map them through the
/// database for external ids.
pub struct ClassView<'a> {
    pub base: &'a [u32],
    pub perfect: &'a [u32],
    pub support: u64,
    pub tids: &'a dyn TidsetView,
    /// The root class has an empty base; its empty itemset is not counted.
    pub is_root: bool,
}

impl ClassView<'_> {
    /// Number of itemsets in the class, saturating.
    pub fn size(&self) -> u128 {
        let full = pow2_saturating(self.perfect.len());
        if self.is_root && full != u128::MAX {
            full - 1
        } else {
            full
        }
    }

    /// Calls `f` with every itemset of the class as sorted external ids.
    pub fn for_each_itemset(&self, db: &TransactionDatabase, mut f: impl FnMut(Vec<u32>)) {
        let k = self.perfect.len();
        assert!(
            k < 64,
            "class with {k} perfect extensions is too large to expand"
        );
        let start = u64::from(self.is_root);
        for mask in start..(1u64 << k) {
            let mut items: Vec<u32> = self.base.iter().map(|&d| db.external_id(d)).collect();
            for (bit, &d) in self.perfect.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    items.push(db.external_id(d));
                }
            }
            items.sort_unstable();
            f(items);
        }
    }
}

fn pow2_saturating(k: usize) -> u128 {
    if k >= 128 {
        u128::MAX
    } else {
        1u128 << k
    }
}

struct Entry<T> {
    item: u32,
    tids: T,
}

#[derive(Default)]
struct Local {
    count: u128,
    saturated: bool,
    stats: MinerStats,
}

impl Local {
    fn merge(mut self, other: Local) -> Local {
        let (sum, overflow) = self.count.overflowing_add(other.count);
        self.count = if overflow { u128::MAX } else { sum };
        self.saturated |= other.saturated || overflow;
        self.stats = self.stats.merge(other.stats);
        self
    }
}

struct Search<'a, V> {
    sigma: u64,
    cap: Option<u128>,
    global: AtomicU64,
    stop: AtomicBool,
    visitor: &'a V,
}

impl<V> Search<'_, V>
where
    V: Fn(&ClassView<'_>) + Sync,
{
    fn stopped(&self) -> bool {
        self.stop.load(Ordering::Relaxed)
    }

    fn add(&self, local: &mut Local, contrib: u128) {
        let (sum, overflow) = local.count.overflowing_add(contrib);
        if overflow || contrib == u128::MAX {
            local.saturated = true;
            local.count = u128::MAX;
        } else {
            local.count = sum;
        }
        if let Some(cap) = self.cap {
            let c = contrib.min(u64::MAX as u128) as u64;
            let prev = self
                .global
                .fetch_update(Ordering::Relaxed, Ordering::Relaxed, |g| {
                    Some(g.saturating_add(c))
                })
                .expect("closure always returns Some");
            if prev.saturating_add(c) as u128 > cap {
                self.stop.store(true, Ordering::Relaxed);
            }
        }
    }

    /// Processes one class and returns its remaining (non-perfect) extensions,
    /// sorted by ascending support.
    fn visit_class<T: Tidset>(
        &self,
        local: &mut Local,
        base: &[u32],
        perfect: &mut Vec<u32>,
        tids: &T,
        mut cands: Vec<Entry<T>>,
        is_root: bool,
    ) -> Vec<Entry<T>> {
        local.stats.expansions += 1;
        let support = tids.support();
        cands.retain(|e| {
            if e.tids.support() == support {
                perfect.push(e.item);
                false
            } else {
                true
            }
        });
        let view = ClassView {
            base,
            perfect,
            support,
            tids,
            is_root,
        };
        let size = view.size();
        if size > 0 {
            (self.visitor)(&view);
            self.add(local, size);
        }
        cands.sort_by_key(|e| e.tids.support());
        cands
    }

    fn expand_child<T: Tidset>(
        &self,
        local: &mut Local,
        base: &mut Vec<u32>,
        perfect: &mut Vec<u32>,
        cands: &[Entry<T>],
        i: usize,
    ) {
        let head = &cands[i];
        let mut next = Vec::with_capacity(cands.len() - i - 1);
        for other in &cands[i + 1..] {
            local.stats.intersections += 1;
            if let Some(t) = head.tids.intersect(&other.tids, self.sigma) {
                next.push(Entry {
                    item: other.item,
                    tids: t,
                });
            }
        }
        base.push(head.item);
        self.recurse(local, base, perfect, &head.tids, next);
        base.pop();
    }

    fn recurse<T: Tidset>(
        &self,
        local: &mut Local,
        base: &mut Vec<u32>,
        perfect: &mut Vec<u32>,
        tids: &T,
        cands: Vec<Entry<T>>,
    ) {
        if self.stopped() {
            return;
        }
        let before = perfect.len();
        let cands = self.visit_class(local, base, perfect, tids, cands, false);
        for i in 0..cands.len() {
            if self.stopped() {
                break;
            }
            self.expand_child(local, base, perfect, &cands, i);
        }
        perfect.truncate(before);
    }
}

/// Frequent itemset miner over one database.
#[derive(Clone)]
pub struct Miner<'a> {
    db: &'a TransactionDatabase,
    representation: Representation,
    threads: usize,
    #[cfg(feature = "parallel")]
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl<'a> Miner<'a> {
    pub fn new(db: &'a TransactionDatabase) -> Self {
        Miner {
            db,
            representation: Representation::Auto,
            threads: 1,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    pub fn with_representation(mut self, representation: Representation) -> Self {
        self.representation = representation;
        self
    }

    /// Number of worker threads for top-level branches. Results do not depend
    /// on it. Without the `parallel` feature this is ignored.
    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        #[cfg(feature = "parallel")]
        {
            self.pool = if self.threads > 1 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(self.threads)
                    .build()
                    .ok()
                    .map(Arc::new)
            } else {
                None
            };
        }
        self
    }

    pub fn database(&self) -> &'a TransactionDatabase {
        self.db
    }

    fn use_bitsets(&self) -> bool {
        match self.representation {
            Representation::Bitset => true,
            Representation::TidList => false,
            Representation::Auto => {
                let cells = self.db.num_transactions() as f64 * self.db.num_dense_items() as f64;
                cells > 0.0 && self.db.num_occurrences() as f64 / cells >= 1.0 / 48.0
            }
        }
    }

    /// Counts itemsets with support `>= sigma`, aborting once the count
    /// exceeds the budget.
    pub fn count_capped(&self, sigma: u64, budget: MinerBudget) -> Result<CountOutcome> {
        let local = self.run(sigma, budget.cap, &|_: &ClassView<'_>| {})?;
        if local.saturated && budget.cap.is_none_or(|c| c == u128::MAX) {
            return Err(Error::CountOverflow { sigma });
        }
        Ok(CountOutcome {
            count: local.count,
            stopped_early: budget.exceeded_by(local.count),
            stats: local.stats,
        })
    }

    /// Visits every equivalence class of frequent itemsets. Classes arrive in
    /// no particular order and possibly from several threads.
    pub fn for_each_class<F>(&self, sigma: u64, f: F) -> Result<MinerStats>
    where
        F: Fn(&ClassView<'_>) + Sync,
    {
        let local = self.run(sigma, None, &f)?;
        Ok(local.stats)
    }

    /// Every itemset with support `>= sigma`, sorted by items.
    pub fn enumerate(&self, sigma: u64) -> Result<Vec<FrequentItemset>> {
        let out = std::sync::Mutex::new(Vec::new());
        self.for_each_class(sigma, |class| {
            let mut batch = Vec::new();
            class.for_each_itemset(self.db, |items| {
                batch.push(FrequentItemset {
                    items,
                    support: class.support,
                })
            });
            out.lock()
                .expect("no panics while holding the lock")
                .extend(batch);
        })?;
        let mut v = out.into_inner().expect("lock not poisoned");
        v.sort_unstable();
        Ok(v)
    }

    fn run<V>(&self, sigma: u64, cap: Option<u128>, visitor: &V) -> Result<Local>
    where
        V: Fn(&ClassView<'_>) + Sync,
    {
        if sigma == 0 {
            return Err(Error::domain(
                "minimum support must be at least 1; sigma = 0 would count unsupported itemsets",
            ));
        }
        let search = Search {
            sigma,
            cap,
            global: AtomicU64::new(0),
            stop: AtomicBool::new(false),
            visitor,
        };
        Ok(if self.use_bitsets() {
            self.run_typed::<BitTids, V>(&search)
        } else {
            self.run_typed::<ListTids, V>(&search)
        })
    }

    fn run_typed<T: Tidset, V>(&self, search: &Search<'_, V>) -> Local
    where
        V: Fn(&ClassView<'_>) + Sync,
    {
        let db = self.db;
        let n = db.num_transactions();
        let mut local = Local::default();
        if (n as u64) < search.sigma {
            return local;
        }
        let all: Vec<u32> = (0..n as u32).collect();
        let root_tids = T::from_occurrences(&all, n);
        let cands: Vec<Entry<T>> = (0..db.num_dense_items() as u32)
            .filter(|&d| db.occurrences(d).len() as u64 >= search.sigma)
            .map(|d| Entry {
                item: d,
                tids: T::from_occurrences(db.occurrences(d), n),
            })
            .collect();
        let mut perfect = Vec::new();
        let cands = search.visit_class(&mut local, &[], &mut perfect, &root_tids, cands, true);
        if search.stopped() {
            return local;
        }
        let branch = |i: usize| {
            let mut l = Local::default();
            if !search.stopped() {
                let mut base = Vec::new();
                let mut perf = perfect.clone();
                search.expand_child(&mut l, &mut base, &mut perf, &cands, i);
            }
            l
        };
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            let rest = pool.install(|| {
                (0..cands.len())
                    .into_par_iter()
                    .map(branch)
                    .reduce(Local::default, Local::merge)
            });
            return local.merge(rest);
        }
        (0..cands.len()).map(branch).fold(local, Local::merge)
    }
}

/// Counts itemsets with support `>= sigma`, stopping once the count exceeds
/// `budget`.
pub fn mine_count_capped(
    db: &TransactionDatabase,
    sigma: u64,
    budget: MinerBudget,
) -> Result<CountOutcome> {
    Miner::new(db).count_capped(sigma, budget)
}

/// Every itemset with support `>= sigma`.
pub fn mine_enumerate(db: &TransactionDatabase, sigma: u64) -> Result<Vec<FrequentItemset>> {
    Miner::new(db).enumerate(sigma)
}
