//! Transaction databases, class labels and their plain-text formats.
//!
//! Transactions are read in FIMI format: one transaction per line, decimal
//! item ids separated by whitespace. Item ids are kept as given on the outside
//! and remapped to a dense range internally.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the item count `P` is reported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ItemSpace {
    /// `P = max item id + 1`.
    #[default]
    MaxId,
    /// `P = number of distinct item ids that occur`.
    Distinct,
}

/// `N` transactions over `P` items, stored both horizontally and as
/// per-item occurrence lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransactionDatabase {
    num_items: usize,
    /// dense index -> external id, ascending
    item_ids: Vec<u32>,
    /// transactions over dense indices, each sorted ascending
    transactions: Vec<Vec<u32>>,
    /// per dense index, ascending transaction ids
    occurrences: Vec<Vec<u32>>,
}

impl TransactionDatabase {
    /// Builds a database from transactions over external item ids. Duplicate
    /// ids within a transaction are merged.
    pub fn from_transactions<I, T>(rows: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = u32>,
    {
        Self::from_transactions_with(rows, ItemSpace::MaxId)
    }

    pub fn from_transactions_with<I, T>(rows: I, space: ItemSpace) -> Self
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = u32>,
    {
        let raw: Vec<Vec<u32>> = rows
            .into_iter()
            .map(|r| {
                let mut v: Vec<u32> = r.into_iter().collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        let item_ids: Vec<u32> = raw
            .iter()
            .flatten()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let num_items = match space {
            ItemSpace::MaxId => item_ids.last().map_or(0, |&m| m as usize + 1),
            ItemSpace::Distinct => item_ids.len(),
        };
        let mut occurrences = vec![Vec::new(); item_ids.len()];
        let transactions: Vec<Vec<u32>> = raw
            .into_iter()
            .enumerate()
            .map(|(tid, row)| {
                row.into_iter()
                    .map(|id| {
                        let dense = item_ids.binary_search(&id).expect("id collected above") as u32;
                        occurrences[dense as usize].push(tid as u32);
                        dense
                    })
                    .collect()
            })
            .collect();
        TransactionDatabase {
            num_items,
            item_ids,
            transactions,
            occurrences,
        }
    }

    /// `N`, including empty transactions.
    pub fn num_transactions(&self) -> usize {
        self.transactions.len()
    }

    /// `P`; see [`ItemSpace`].
    pub fn num_items(&self) -> usize {
        self.num_items
    }

    /// Number of items that occur at least once.
    pub fn num_dense_items(&self) -> usize {
        self.item_ids.len()
    }

    /// External id of a dense item index.
    pub fn external_id(&self, dense: u32) -> u32 {
        self.item_ids[dense as usize]
    }

    pub fn item_ids(&self) -> &[u32] {
        &self.item_ids
    }

    pub fn dense_index(&self, id: u32) -> Option<u32> {
        self.item_ids.binary_search(&id).ok().map(|i| i as u32)
    }

    /// Transaction `tid` as dense item indices.
    pub fn transaction(&self, tid: usize) -> &[u32] {
        &self.transactions[tid]
    }

    pub fn transactions(&self) -> &[Vec<u32>] {
        &self.transactions
    }

    /// Ascending transaction ids containing dense item `dense`.
    pub fn occurrences(&self, dense: u32) -> &[u32] {
        &self.occurrences[dense as usize]
    }

    /// Support of a single external item id (0 if it never occurs).
    pub fn item_support(&self, id: u32) -> u64 {
        self.dense_index(id)
            .map_or(0, |d| self.occurrences[d as usize].len() as u64)
    }

    /// Total number of item occurrences.
    pub fn num_occurrences(&self) -> usize {
        self.occurrences.iter().map(Vec::len).sum()
    }

    /// Transaction ids containing every item of `items` (external ids).
    /// The empty itemset is contained in every transaction.
    pub fn tidset(&self, items: &[u32]) -> Result<Vec<u32>> {
        if let Some(&id) = items.iter().find(|&&id| id as usize >= self.num_items) {
            return Err(Error::domain(format!(
                "item id {id} out of range (P = {})",
                self.num_items
            )));
        }
        let mut lists = Vec::with_capacity(items.len());
        for &id in items {
            match self.dense_index(id) {
                Some(d) => lists.push(self.occurrences(d)),
                None => return Ok(Vec::new()),
            }
        }
        if lists.is_empty() {
            return Ok((0..self.num_transactions() as u32).collect());
        }
        lists.sort_by_key(|l| l.len());
        let mut acc = lists[0].to_vec();
        for other in &lists[1..] {
            acc = intersect_sorted(&acc, other);
            if acc.is_empty() {
                break;
            }
        }
        Ok(acc)
    }

    /// `x_S`: number of transactions containing every item in `items`.
    pub fn pattern_support(&self, items: &[u32]) -> Result<u64> {
        self.tidset(items).map(|t| t.len() as u64)
    }

    /// Resamples transactions by index, keeping the item space.
    pub fn select(&self, tids: &[usize]) -> TransactionDatabase {
        let rows = tids.iter().map(|&t| {
            self.transactions[t]
                .iter()
                .map(|&d| self.item_ids[d as usize])
                .collect::<Vec<_>>()
        });
        let mut db = Self::from_transactions(rows);
        db.num_items = self.num_items;
        db
    }

    /// Splits off `item` as a binary class column: returns the database with
    /// `item` removed and, per transaction, whether it contained `item`.
    pub fn split_class_item(
        &self,
        item: u32,
        also_remove: &[u32],
    ) -> (TransactionDatabase, Vec<bool>) {
        let target = self.dense_index(item);
        let drop: Vec<Option<u32>> = also_remove.iter().map(|&i| self.dense_index(i)).collect();
        let mut labels = Vec::with_capacity(self.num_transactions());
        let rows: Vec<Vec<u32>> = self
            .transactions
            .iter()
            .map(|row| {
                labels.push(target.is_some_and(|t| row.binary_search(&t).is_ok()));
                row.iter()
                    .filter(|&&d| Some(d) != target && !drop.contains(&Some(d)))
                    .map(|&d| self.item_ids[d as usize])
                    .collect()
            })
            .collect();
        (Self::from_transactions(rows), labels)
    }

    /// Writes the database back out in FIMI format.
    pub fn write_fimi<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for row in &self.transactions {
            let mut first = true;
            for &d in row {
                if !first {
                    out.write_all(b" ")?;
                }
                first = false;
                write!(out, "{}", self.item_ids[d as usize])?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_fimi_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_fimi(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("FIMI output is ASCII")
    }

    /// Dense index -> external id table, one `dense\texternal` pair per line.
    pub fn write_id_map<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (dense, id) in self.item_ids.iter().enumerate() {
            writeln!(out, "{dense}\t{id}")?;
        }
        Ok(())
    }
}

/// Merge-intersects two ascending id lists.
pub fn intersect_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
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
    out
}

/// Reads a FIMI transaction file. An empty input yields an empty database.
pub fn parse_fimi<R: BufRead>(reader: R) -> Result<TransactionDatabase> {
    parse_fimi_with(reader, ItemSpace::MaxId)
}

pub fn parse_fimi_with<R: BufRead>(reader: R, space: ItemSpace) -> Result<TransactionDatabase> {
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let mut row = Vec::new();
        for tok in line.split_ascii_whitespace() {
            let id: u32 = tok
                .parse()
                .map_err(|_| Error::parse(idx + 1, format!("invalid item id {tok:?}")))?;
            row.push(id);
        }
        rows.push(row);
    }
    Ok(TransactionDatabase::from_transactions_with(rows, space))
}

/// Which original label value ended up as the analysed (minority) class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelOrientation {
    /// Rows labelled `1` are the positive class.
    AsGiven,
    /// `1` was the majority, so rows labelled `0` are the positive class.
    Swapped,
}

/// Binary class labels, canonicalized so the positive class is the minority.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelVector {
    raw: Vec<bool>,
    swapped: bool,
    n: u64,
}

impl LabelVector {
    /// Canonicalizes `raw` (true = label `1`). Fails if either class is empty.
    pub fn from_bools(raw: Vec<bool>) -> Result<Self> {
        let ones = raw.iter().filter(|&&b| b).count() as u64;
        let zeros = raw.len() as u64 - ones;
        let n = ones.min(zeros);
        if n == 0 {
            return Err(Error::DegenerateLabels(format!(
                "n=0 ({ones} ones, {zeros} zeros); every pattern would have Ψ = 1"
            )));
        }
        Ok(LabelVector {
            raw,
            swapped: ones > zeros,
            n,
        })
    }

    /// Placeholder labels with `n = floor(N / r)`: the first `n` rows are
    /// positive. Only `n` and `N` are meaningful.
    pub fn synthetic_ratio(total: usize, r: u64) -> Result<Self> {
        if r < 2 {
            return Err(Error::domain(format!("ratio r={r} must be at least 2")));
        }
        let n = total as u64 / r;
        let raw = (0..total as u64).map(|i| i < n).collect();
        Self::from_bools(raw)
    }

    /// `N`.
    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Size of the positive (minority) class.
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn orientation(&self) -> LabelOrientation {
        if self.swapped {
            LabelOrientation::Swapped
        } else {
            LabelOrientation::AsGiven
        }
    }

    /// True when both classes have the same size, so the minority is a tie.
    pub fn is_balanced(&self) -> bool {
        2 * self.n == self.raw.len() as u64
    }

    /// Labels as read from input.
    pub fn raw(&self) -> &[bool] {
        &self.raw
    }

    #[inline]
    pub fn is_positive(&self, tid: usize) -> bool {
        self.raw[tid] != self.swapped
    }

    /// Positive-class transaction ids, ascending.
    pub fn positive_tids(&self) -> Vec<u32> {
        (0..self.raw.len())
            .filter(|&t| self.is_positive(t))
            .map(|t| t as u32)
            .collect()
    }
}

/// Reads one `0`/`1` label per line; exactly `expected` labels are required.
pub fn parse_labels<R: BufRead>(reader: R, expected: usize) -> Result<LabelVector> {
    let mut raw = Vec::with_capacity(expected);
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let bit = match line.trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::parse(
                    idx + 1,
                    format!("expected label 0 or 1, found {other:?}"),
                ))
            }
        };
        raw.push(bit);
    }
    if raw.len() != expected {
        return Err(Error::parse(
            raw.len(),
            format!("found {} labels for {expected} transactions", raw.len()),
        ));
    }
    LabelVector::from_bools(raw)
}

pub fn write_labels<W: Write>(labels: &[bool], mut out: W) -> std::io::Result<()> {
    for &b in labels {
        out.write_all(if b { b"1\n" } else { b"0\n" })?;
    }
    Ok(())
}
