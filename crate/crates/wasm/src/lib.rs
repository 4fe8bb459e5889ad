//! Browser bindings. Every export takes plain text (FIMI transactions, one
//! 0/1 label per line) and returns a JSON string.

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use lamp_core::datasets::tic_tac_toe;
use lamp_core::report::{format_count, format_pvalue};
use lamp_core::subsample::{estimate_with_seed, mean_std, RNG_NAME};
use lamp_core::{
    find_significant, parse_fimi, parse_labels, LabelVector, LampSearch, SearchOptions, Strategy,
    Tail, TransactionDatabase,
};

/// Patterns beyond this many are counted but not returned.
const MAX_PATTERNS: usize = 500;

type Res<T> = Result<T, String>;

fn load(fimi: &str, labels: &str) -> Res<(TransactionDatabase, LabelVector)> {
    let db = parse_fimi(fimi.as_bytes()).map_err(|e| format!("transactions: {e}"))?;
    let labels = parse_labels(labels.trim_end().as_bytes(), db.num_transactions())
        .map_err(|e| format!("labels: {e}"))?;
    Ok((db, labels))
}

fn strategy(name: &str) -> Res<Strategy> {
    match name {
        "inc" | "incremental" => Ok(Strategy::Incremental),
        "dec" | "decremental" => Ok(Strategy::Decremental),
        "brute" | "brute-force" => Ok(Strategy::BruteForce),
        other => Err(format!("unknown strategy {other:?}")),
    }
}

fn to_json<T: Serialize>(v: &T) -> Res<String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Root frequency, correction factor and significant patterns.
pub fn analyze_json(
    fimi: &str,
    labels: &str,
    alpha: f64,
    strategy_name: &str,
    two_tailed: bool,
) -> Res<String> {
    let (db, labels) = load(fimi, labels)?;
    let tail = if two_tailed { Tail::Two } else { Tail::One };
    let f = find_significant(&db, &labels, alpha, strategy(strategy_name)?, tail)
        .map_err(|e| e.to_string())?;
    let r = &f.result;
    let patterns: Vec<_> = f
        .patterns
        .iter()
        .take(MAX_PATTERNS)
        .map(|p| {
            json!({
                "items": p.items,
                "support": p.support,
                "a": p.positive_count,
                "p_value": format_pvalue(p.p_value),
                "log10_p": p.p_value.log10(),
            })
        })
        .collect();
    to_json(&json!({
        "N": db.num_transactions(),
        "P": db.num_items(),
        "n": labels.n(),
        "label_orientation": f.orientation,
        "sigma_rt": r.sigma_rt,
        "num_testable": r.num_testable.to_string(),
        "num_testable_sci": format_count(r.num_testable),
        "delta_log10": r.delta.log10(),
        "miner_invocations": r.miner_invocations,
        "num_significant": f.patterns.len(),
        "notice": f.notice,
        "patterns": patterns,
    }))
}

/// Per-σ frequent-pattern count against the limit `α / Ψ(σ)`.
pub fn profile_json(fimi: &str, labels: &str, alpha: f64, max_sigma: u32) -> Res<String> {
    let (db, labels) = load(fimi, labels)?;
    let search = LampSearch::new(&db, labels.n(), alpha).map_err(|e| e.to_string())?;
    let top = u64::from(max_sigma)
        .min(db.num_transactions() as u64 + 1)
        .max(1);
    let points = search
        .testability_profile(top, 1 << 24)
        .map_err(|e| e.to_string())?;
    to_json(&points)
}

/// Subsampling estimate of `σ_rt` over `reps` seeds.
pub fn estimate_json(
    fimi: &str,
    labels: &str,
    alpha: f64,
    k: u32,
    reps: u32,
    seed: u32,
) -> Res<String> {
    let (db, labels) = load(fimi, labels)?;
    let runs = (0..u64::from(reps.max(1)))
        .map(|i| {
            estimate_with_seed(
                &db,
                u64::from(k),
                labels.n(),
                alpha,
                u64::from(seed) + i,
                SearchOptions::default(),
            )
            .map_err(|e| e.to_string())
        })
        .collect::<Res<Vec<_>>>()?;
    let sig: Vec<f64> = runs.iter().map(|r| r.sigma_hat as f64).collect();
    let est: Vec<f64> = runs.iter().map(|r| r.estimated_testable as f64).collect();
    let (sm, ss) = mean_std(&sig);
    let (em, es) = mean_std(&est);
    to_json(&json!({
        "K": k,
        "rng": RNG_NAME,
        "approximate": true,
        "sigma_hat_mean": sm,
        "sigma_hat_std": ss,
        "estimated_testable_mean": em,
        "estimated_testable_std": es,
        "runs": runs,
    }))
}

/// The tic-tac-toe endgame dataset as `{ "fimi": ..., "labels": ... }`.
pub fn tictactoe_json() -> String {
    let (db, labels) = tic_tac_toe();
    let lab: String = labels
        .raw()
        .iter()
        .map(|&b| if b { "1\n" } else { "0\n" })
        .collect();
    json!({ "fimi": db.to_fimi_string(), "labels": lab }).to_string()
}

#[wasm_bindgen]
pub fn analyze(
    fimi: &str,
    labels: &str,
    alpha: f64,
    strategy: &str,
    two_tailed: bool,
) -> Result<String, JsValue> {
    analyze_json(fimi, labels, alpha, strategy, two_tailed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn profile(fimi: &str, labels: &str, alpha: f64, max_sigma: u32) -> Result<String, JsValue> {
    profile_json(fimi, labels, alpha, max_sigma).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn estimate(
    fimi: &str,
    labels: &str,
    alpha: f64,
    k: u32,
    reps: u32,
    seed: u32,
) -> Result<String, JsValue> {
    estimate_json(fimi, labels, alpha, k, reps, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn tictactoe() -> String {
    tictactoe_json()
}
