//! Rayon-backed drivers for independent scans.

use hypercyc_core::algebra::GeneratorFamily;
use hypercyc_core::counterexample::{
    assemble_theorem_report, basis_jset_score, build_counterexample, DensePair, ReproduceConfig, TheoremReport,
};
use hypercyc_core::dynamics::{jset_score_limited, JsetScore, SearchLimits, WordBudget};
use hypercyc_core::{Complex64, Result};
use rayon::prelude::*;

pub const THREADS_VAR: &str = "HYPERCYC_THREADS";

/// Thread pool capped by `HYPERCYC_THREADS`, or `None` when it is unset.
pub fn pool_from_env() -> std::result::Result<Option<rayon::ThreadPool>, String> {
    let Ok(raw) = std::env::var(THREADS_VAR) else { return Ok(None) };
    let threads = raw
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("{THREADS_VAR} must be a positive integer, got \"{raw}\""))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map(Some).map_err(|e| e.to_string())
}

/// J-set scores of `(x_i, y_i)` pairs, in input order.
pub fn jset_pairs(
    family: &GeneratorFamily,
    pairs: &[(Vec<Complex64>, Vec<Complex64>)],
    delta: f64,
    budget: &WordBudget,
    limits: SearchLimits,
) -> Result<Vec<JsetScore>> {
    pairs.par_iter().map(|(x, y)| jset_score_limited(family, x, y, delta, budget, limits)).collect()
}

/// J-set scores of one source against every target, in target order.
pub fn jset_targets(
    family: &GeneratorFamily,
    x: &[Complex64],
    targets: &[Vec<Complex64>],
    delta: f64,
    budget: &WordBudget,
    limits: SearchLimits,
) -> Result<Vec<JsetScore>> {
    targets.par_iter().map(|y| jset_score_limited(family, x, y, delta, budget, limits)).collect()
}

/// Same result as the sequential reproduction, with the J-set table scored in parallel.
pub fn reproduce_theorem(n: usize, pair: &DensePair, config: &ReproduceConfig, targets: &[Vec<Complex64>]) -> Result<TheoremReport> {
    let cf = build_counterexample(n, pair)?;
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|k| (0..targets.len()).map(move |t| (k, t))).collect();
    let scores: Vec<JsetScore> =
        cells.par_iter().map(|&(k, t)| basis_jset_score(&cf, k, &targets[t], config)).collect::<Result<_>>()?;
    let mut rows = vec![Vec::with_capacity(targets.len()); n];
    for ((k, _), s) in cells.into_iter().zip(scores) {
        rows[k].push(s);
    }
    assemble_theorem_report(cf, rows, config, targets)
}
