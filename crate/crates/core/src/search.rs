//! Exhaustive search over canonical patterns up to a length bound.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{free_energy, ModelParams, WidthVector};
use crate::error::{Error, Result};
use crate::numeric::format_significant;
use crate::optimizer::{optimize_widths, OptimizationResult, OptimizerOptions};
use crate::pattern::{enumerate_patterns, merge_thin_layers, CanonicalPattern, MAX_ENUMERATION_LENGTH};

/// Energies closer than this are compared by length, then pattern order.
pub const ENERGY_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub pattern: CanonicalPattern,
    pub result: OptimizationResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthBest {
    pub pattern: CanonicalPattern,
    pub energy: f64,
}

/// One enumerated pattern and what it was scored as.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRecord {
    pub pattern: CanonicalPattern,
    pub scored_as: Option<CanonicalPattern>,
    pub energy: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub best: SearchEntry,
    pub per_length_best: BTreeMap<usize, LengthBest>,
    /// The best length equals `max_len`; longer patterns might do better.
    pub frontier_stopped: bool,
    pub evaluated_count: usize,
    pub max_len: usize,
    /// Patterns whose optimization did not converge or could not be scored.
    pub failures: Vec<String>,
    #[serde(skip)]
    pub records: Vec<PatternRecord>,
}

impl SearchReport {
    /// Per-pattern table: `pattern,length,energy,converged,scored_as`.
    pub fn records_csv(&self) -> String {
        let mut out = String::from("pattern,length,energy,converged,scored_as\n");
        for r in &self.records {
            let energy = r.energy.map(|e| format_significant(e, 15)).unwrap_or_default();
            let scored = r.scored_as.as_ref().map(|p| p.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", r.pattern, r.pattern.len(), energy, r.converged, scored);
        }
        out
    }
}

/// Strict preference with the energy tolerance and deterministic tie-breaks.
pub fn better(a: &SearchEntry, b: &SearchEntry) -> bool {
    let (ea, eb) = (a.result.energy.total, b.result.energy.total);
    if ea < eb - ENERGY_TIE_TOL {
        return true;
    }
    if ea > eb + ENERGY_TIE_TOL {
        return false;
    }
    (a.pattern.len(), &a.pattern) < (b.pattern.len(), &b.pattern)
}

/// Optimizes one pattern; collapsed layers are merged and the merged pattern re-scored.
pub fn score_pattern(pattern: &CanonicalPattern, params: &ModelParams, opts: &OptimizerOptions) -> Result<SearchEntry> {
    let result = optimize_widths(pattern, params, opts)?;
    if result.degenerate_layers.is_empty() {
        return Ok(SearchEntry { pattern: pattern.clone(), result });
    }
    let (merged, widths) = merge_thin_layers(pattern, result.widths.as_slice(), opts.constraint_tol)
        .ok_or_else(|| Error::Widths(format!("{pattern}: collapsed layers leave no valid pattern")))?;
    let t = merged.canonical_transform();
    let canonical = merged.canonicalize();
    let widths = WidthVector::from_raw(t.apply(&widths));
    let energy = free_energy(&canonical, &widths, params)?;
    Ok(SearchEntry {
        pattern: canonical,
        result: OptimizationResult { widths, energy, degenerate_layers: Vec::new(), ..result },
    })
}

/// Optimizes every canonical pattern of length `3..=max_len` and returns the best.
///
/// Work is spread over the current rayon pool; the reduction runs in
/// enumeration order so the report does not depend on the worker count.
pub fn global_search(params: &ModelParams, max_len: usize, opts: &OptimizerOptions) -> Result<SearchReport> {
    if max_len > MAX_ENUMERATION_LENGTH {
        return Err(Error::CapExceeded { what: "max_len", value: max_len, cap: MAX_ENUMERATION_LENGTH });
    }
    opts.validate()?;
    let patterns = enumerate_patterns(max_len)?;
    let scored: Vec<Result<SearchEntry>> = patterns.par_iter().map(|p| score_pattern(p, params, opts)).collect();

    let mut best: Option<SearchEntry> = None;
    let mut per_length: BTreeMap<usize, SearchEntry> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut records = Vec::with_capacity(patterns.len());
    for (p, s) in patterns.iter().zip(scored) {
        match s {
            Ok(entry) => {
                if !entry.result.converged {
                    failures.push(format!("{p}: not converged (stationarity {:e})", entry.result.stationarity));
                }
                records.push(PatternRecord {
                    pattern: p.clone(),
                    scored_as: (entry.pattern != *p).then(|| entry.pattern.clone()),
                    energy: Some(entry.result.energy.total),
                    converged: entry.result.converged,
                });
                let len = entry.pattern.len();
                if per_length.get(&len).is_none_or(|b| better(&entry, b)) {
                    per_length.insert(len, entry.clone());
                }
                if best.as_ref().is_none_or(|b| better(&entry, b)) {
                    best = Some(entry);
                }
            }
            Err(e) => {
                failures.push(format!("{p}: {e}"));
                records.push(PatternRecord { pattern: p.clone(), scored_as: None, energy: None, converged: false });
            }
        }
    }
    let best = best.ok_or_else(|| Error::Domain("no pattern could be scored".into()))?;
    Ok(SearchReport {
        frontier_stopped: best.pattern.len() >= max_len,
        per_length_best: per_length
            .into_iter()
            .map(|(l, e)| (l, LengthBest { pattern: e.pattern, energy: e.result.energy.total }))
            .collect(),
        best,
        evaluated_count: patterns.len(),
        max_len,
        failures,
        records,
    })
}
