//! Three-stage outlier screening, applied strictly in order:
//! spatial accident filter, per-session movement-time IQR filter, then
//! participant-level IQR filter over per-worker mean movement times.
//!
//! Re-screening already cleaned data may remove more trials; idempotence is
//! not claimed.

use crate::aggregation::TrialRecord;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub n_input: usize,
    pub n_spatial_removed: usize,
    pub n_trial_iqr_removed: usize,
    pub outlier_worker_ids: Vec<String>,
    pub n_participant_removed: usize,
    pub n_output: usize,
    pub removal_pct: f64,
}

/// Movement distance reconstructed from the previous target center (the
/// trial's start point) to the first click: the nominal movement vector of
/// length A plus the click offset. Screen y grows downward, so a nominal
/// angle of `angle_deg` maps to the direction (cos θ, −sin θ).
fn movement_distance(t: &TrialRecord) -> f64 {
    let theta = t.angle_deg.to_radians();
    let dx = t.amplitude * theta.cos() + t.click_dx;
    let dy = -t.amplitude * theta.sin() + t.click_dy;
    (dx * dx + dy * dy).sqrt()
}

/// True iff the reconstructed movement distance is strictly shorter than
/// A/2 (accidental operations such as double-clicking the previous target).
pub fn flag_spatial_outliers(trials: &[TrialRecord]) -> Vec<bool> {
    trials
        .iter()
        .map(|t| movement_distance(t) < t.amplitude / 2.0)
        .collect()
}

/// (Q1 - 3·IQR, Q3 + 3·IQR) with type-7 quartiles (linear interpolation at
/// position p·(n−1)).
pub fn iqr_bounds(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "iqr_bounds needs at least 4 values, got {}",
            values.len()
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quartile = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        if frac == 0.0 {
            sorted[lo]
        } else {
            sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
        }
    };
    let (q1, q3) = (quartile(0.25), quartile(0.75));
    let iqr = q3 - q1;
    Ok((q1 - 3.0 * iqr, q3 + 3.0 * iqr))
}

/// Run the full screening pipeline, returning the surviving trials and a
/// reconciled per-stage report.
pub fn screen_trials(trials: &[TrialRecord]) -> Result<(Vec<TrialRecord>, ScreeningReport)> {
    let n_input = trials.len();

    // stage 1: spatial accidents
    let flags = flag_spatial_outliers(trials);
    let survivors: Vec<&TrialRecord> = trials
        .iter()
        .zip(&flags)
        .filter(|(_, &f)| !f)
        .map(|(t, _)| t)
        .collect();
    let n_spatial_removed = n_input - survivors.len();

    // stage 2: per-session movement-time IQR
    let mut sessions: BTreeMap<(&str, u32), Vec<&TrialRecord>> = BTreeMap::new();
    for t in &survivors {
        sessions
            .entry((t.worker_id.as_str(), t.session_index))
            .or_default()
            .push(t);
    }
    let mut stage2: Vec<&TrialRecord> = Vec::with_capacity(survivors.len());
    for ((worker, session), group) in &sessions {
        let mts: Vec<f64> = group.iter().map(|t| t.movement_time_ms).collect();
        let (low, high) = iqr_bounds(&mts).map_err(|_| {
            Error::InsufficientData(format!(
                "session {session} of worker {worker} has {} trial(s); need at least 4 for quartiles",
                group.len()
            ))
        })?;
        stage2.extend(
            group
                .iter()
                .filter(|t| t.movement_time_ms >= low && t.movement_time_ms <= high),
        );
    }
    let n_trial_iqr_removed = survivors.len() - stage2.len();

    // stage 3: participant-level IQR over per-worker mean movement times
    let mut by_worker: BTreeMap<&str, Vec<&TrialRecord>> = BTreeMap::new();
    for t in &stage2 {
        by_worker.entry(t.worker_id.as_str()).or_default().push(t);
    }
    let worker_means: Vec<(&str, f64)> = by_worker
        .iter()
        .map(|(w, ts)| {
            let mean = ts.iter().map(|t| t.movement_time_ms).sum::<f64>() / ts.len() as f64;
            (*w, mean)
        })
        .collect();
    let means: Vec<f64> = worker_means.iter().map(|(_, m)| *m).collect();
    let (low, high) = iqr_bounds(&means).map_err(|_| {
        Error::InsufficientData(format!(
            "participant screening needs at least 4 workers, got {}",
            means.len()
        ))
    })?;
    let outlier_worker_ids: Vec<String> = worker_means
        .iter()
        .filter(|(_, m)| *m < low || *m > high)
        .map(|(w, _)| w.to_string())
        .collect();

    let mut clean: Vec<TrialRecord> = Vec::with_capacity(stage2.len());
    let mut n_participant_removed = 0;
    for t in stage2 {
        if outlier_worker_ids.iter().any(|w| w == &t.worker_id) {
            n_participant_removed += 1;
        } else {
            clean.push(t.clone());
        }
    }

    let n_output = clean.len();
    let report = ScreeningReport {
        n_input,
        n_spatial_removed,
        n_trial_iqr_removed,
        outlier_worker_ids,
        n_participant_removed,
        n_output,
        removal_pct: if n_input == 0 {
            0.0
        } else {
            100.0 * (n_input - n_output) as f64 / n_input as f64
        },
    };
    Ok((clean, report))
}
