//! Per-cell aggregates of result rows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::run::{ResultRow, STATUS_SKIPPED};
use crate::spec::{Method, Scenario};

/// Median, mean and interquartile range of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub median: f64,
    pub mean: f64,
    pub iqr: f64,
}

/// Linear-interpolation quantile of a sorted, nonempty sample.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        Some(Self {
            median: quantile(&s, 0.5),
            mean: s.iter().sum::<f64>() / s.len() as f64,
            iqr: quantile(&s, 0.75) - quantile(&s, 0.25),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: Scenario,
    pub method: Method,
    pub n_b: usize,
    pub n_u: usize,
    pub n_r: usize,
    pub l_br: usize,
    pub l_ru: usize,
    pub snr_db: f64,
    pub slots: Option<usize>,
    pub b0: Option<usize>,
    pub b_max: Option<usize>,
    pub iteration: Option<usize>,
    pub rows: usize,
    pub valid: usize,
    /// Fraction of non-skipped rows without a usable estimate.
    pub failed_fraction: f64,
    pub nmse_median: Option<f64>,
    pub nmse_mean: Option<f64>,
    pub nmse_iqr: Option<f64>,
    pub time_median_ms: Option<f64>,
    pub time_mean_ms: Option<f64>,
    pub time_iqr_ms: Option<f64>,
    pub slots_used_mean: Option<f64>,
    /// Every row was skipped by the size cap.
    pub skipped: bool,
    /// Rows were attempted but none produced a usable estimate.
    pub empty: bool,
}

type CellKey = (Scenario, Method, [usize; 5], u64, [Option<usize>; 4]);

fn key(r: &ResultRow) -> CellKey {
    (
        r.scenario,
        r.method,
        [r.n_b, r.n_u, r.n_r, r.l_br, r.l_ru],
        r.snr_db.to_bits(),
        [r.slots, r.b0, r.b_max, r.iteration],
    )
}

/// Aggregates rows per cell (all coordinates except the trial), in first-seen order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut order: Vec<CellKey> = Vec::new();
    let mut cells: BTreeMap<CellKey, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        let k = key(r);
        cells
            .entry(k)
            .or_insert_with(|| {
                order.push(k);
                Vec::new()
            })
            .push(r);
    }
    order
        .iter()
        .map(|k| {
            let cell = &cells[k];
            let first = cell[0];
            let attempted: Vec<&&ResultRow> = cell.iter().filter(|r| r.status != STATUS_SKIPPED).collect();
            let valid: Vec<&&ResultRow> = attempted.iter().copied().filter(|r| r.is_valid()).collect();
            let nmse = Stats::of(&valid.iter().filter_map(|r| r.nmse).collect::<Vec<_>>());
            let time = Stats::of(&valid.iter().map(|r| r.wall_time_ms).collect::<Vec<_>>());
            let slots = Stats::of(&valid.iter().map(|r| r.slots_used as f64).collect::<Vec<_>>());
            SummaryRow {
                scenario: first.scenario,
                method: first.method,
                n_b: first.n_b,
                n_u: first.n_u,
                n_r: first.n_r,
                l_br: first.l_br,
                l_ru: first.l_ru,
                snr_db: first.snr_db,
                slots: first.slots,
                b0: first.b0,
                b_max: first.b_max,
                iteration: first.iteration,
                rows: cell.len(),
                valid: valid.len(),
                failed_fraction: if attempted.is_empty() {
                    0.0
                } else {
                    1.0 - valid.len() as f64 / attempted.len() as f64
                },
                nmse_median: nmse.map(|s| s.median),
                nmse_mean: nmse.map(|s| s.mean),
                nmse_iqr: nmse.map(|s| s.iqr),
                time_median_ms: time.map(|s| s.median),
                time_mean_ms: time.map(|s| s.mean),
                time_iqr_ms: time.map(|s| s.iqr),
                slots_used_mean: slots.map(|s| s.mean),
                skipped: attempted.is_empty(),
                empty: !attempted.is_empty() && valid.is_empty(),
            }
        })
        .collect()
}

/// Whether any attempted cell has no usable row.
pub fn any_cell_failed(summary: &[SummaryRow]) -> bool {
    summary.iter().any(|s| s.empty)
}
