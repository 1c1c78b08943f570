//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain strings and numbers and returns a JSON string,
//! so the page needs no bundler. The `*_json` functions hold the logic and
//! are callable from native code too.

use serde_json::json;
use wasm_bindgen::prelude::*;

use samplab::dist::{min_entropy, smooth, ExactDist};
use samplab::hardness::{addr_iso_zero, build_hard_dist, theorem_bound_terms};
use samplab::isolators::BoolFnTable;
use samplab::rational::{format_q, parse_q};
use samplab::sources::addr_dist;

fn text(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// The distance lower bound and its components for rational `alpha`, `beta`.
pub fn bound_json(alpha: &str, beta: &str, k: i64, n: u32, t: u32) -> Result<String, String> {
    let terms = theorem_bound_terms(&parse_q(alpha).map_err(text)?, &parse_q(beta).map_err(text)?, k, n, t).map_err(text)?;
    serde_json::to_string(&terms).map_err(text)
}

/// Smoothing buckets of a distribution given as whitespace or comma
/// separated probabilities, whose count must be a power of two.
pub fn smooth_json(probs: &str, k: u32) -> Result<String, String> {
    let probs = probs
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(parse_q)
        .collect::<Result<Vec<_>, _>>()
        .map_err(text)?;
    if !probs.len().is_power_of_two() {
        return Err(format!("{} probabilities; need a power of two", probs.len()));
    }
    let dist = ExactDist::new(probs.len().trailing_zeros(), probs).map_err(text)?;
    let map = smooth(&dist, k);
    Ok(json!({
        "min_entropy": min_entropy(&dist),
        "smoothing": map,
    })
    .to_string())
}

/// The hard distribution for the isolator with the given hex truth table,
/// its image under addr, and both sides of `Pr[Iso(Y) = 0] = (1 - a)^(t+1)`.
pub fn hard_json(table: &str, n: u32, t: u32) -> Result<String, String> {
    let iso = BoolFnTable::from_hex(n, table.trim()).map_err(text)?;
    let hard = build_hard_dist(&iso, t).map_err(text)?;
    let y = addr_dist(&hard.dist, n, t).map_err(text)?;
    let (lhs, rhs) = addr_iso_zero(&iso, t).map_err(text)?;
    Ok(json!({
        "bits": hard.dist.n(),
        "support": hard.dist.support(),
        "addr": y,
        "iso_zero": format_q(&lhs),
        "predicted": format_q(&rhs),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn bound(alpha: &str, beta: &str, k: i64, n: u32, t: u32) -> Result<String, JsValue> {
    bound_json(alpha, beta, k, n, t).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn smoothing(probs: &str, k: u32) -> Result<String, JsValue> {
    smooth_json(probs, k).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn hard_distribution(table: &str, n: u32, t: u32) -> Result<String, JsValue> {
    hard_json(table, n, t).map_err(|e| JsValue::from_str(&e))
}
