//! Per-condition endpoint statistics: group screened trials by (W, H),
//! pooling all workers, sessions, and movement angles.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One pointing trial. `click_dx`/`click_dy` are the first-click offset from
/// the target center on screen axes; `angle_deg` is the nominal movement
/// angle and is never used in prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub worker_id: String,
    pub session_index: u32,
    #[serde(rename = "width_px")]
    pub width: f64,
    #[serde(rename = "height_px")]
    pub height: f64,
    pub angle_deg: f64,
    #[serde(rename = "amplitude_px")]
    pub amplitude: f64,
    pub trial_index: u32,
    pub click_dx: f64,
    pub click_dy: f64,
    pub movement_time_ms: f64,
    #[serde(with = "int_bool")]
    pub is_error: bool,
}

mod int_bool {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(serde::de::Error::custom(format!(
                "is_error must be 0 or 1, got {other}"
            ))),
        }
    }
}

/// Aggregate endpoint statistics for one (W, H) condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionStats {
    #[serde(rename = "width_px")]
    pub width: f64,
    #[serde(rename = "height_px")]
    pub height: f64,
    pub n: usize,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub rho: f64,
    pub mu_x: f64,
    pub mu_y: f64,
    pub error_rate_pct: f64,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation about the sample mean (n-1 denominator).
fn sample_sd(values: &[f64]) -> f64 {
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Sample Pearson correlation. Returns 0 when either variance is zero, so
/// degenerate synthetic inputs do not poison downstream reports.
pub fn pearson_rho(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Domain(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Domain("pearson_rho needs at least 2 points".into()));
    }
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Pool trials into one `ConditionStats` per distinct (W, H), sorted by
/// (width, height). Angle-blind by construction: grouping ignores angles,
/// workers, and sessions.
pub fn aggregate_conditions(trials: &[TrialRecord]) -> Result<Vec<ConditionStats>> {
    if trials.is_empty() {
        return Err(Error::InsufficientData("no trials to aggregate".into()));
    }
    // widths/heights are positive finite, so bit order equals numeric order
    let mut groups: BTreeMap<(u64, u64), Vec<&TrialRecord>> = BTreeMap::new();
    for t in trials {
        if !(t.width > 0.0 && t.height > 0.0) {
            return Err(Error::Format(format!(
                "trial with non-positive geometry W={}, H={}",
                t.width, t.height
            )));
        }
        groups
            .entry((t.width.to_bits(), t.height.to_bits()))
            .or_default()
            .push(t);
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((wb, hb), group) in groups {
        let (width, height) = (f64::from_bits(wb), f64::from_bits(hb));
        if group.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "condition (W={width}, H={height}) has {} trial(s); need at least 2",
                group.len()
            )));
        }
        // canonical within-group order so the floating-point reductions (and
        // hence the stats) are invariant under input-row permutation
        let mut offsets: Vec<(f64, f64)> = group.iter().map(|t| (t.click_dx, t.click_dy)).collect();
        offsets.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let dxs: Vec<f64> = offsets.iter().map(|o| o.0).collect();
        let dys: Vec<f64> = offsets.iter().map(|o| o.1).collect();
        let n_errors = group.iter().filter(|t| t.is_error).count();
        out.push(ConditionStats {
            width,
            height,
            n: group.len(),
            sigma_x: sample_sd(&dxs),
            sigma_y: sample_sd(&dys),
            rho: pearson_rho(&dxs, &dys)?,
            mu_x: mean(&dxs),
            mu_y: mean(&dys),
            error_rate_pct: 100.0 * n_errors as f64 / group.len() as f64,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn trial(w: f64, h: f64, dx: f64, dy: f64, is_error: bool) -> TrialRecord {
        TrialRecord {
            worker_id: "w0".into(),
            session_index: 0,
            width: w,
            height: h,
            angle_deg: 0.0,
            amplitude: 550.0,
            trial_index: 0,
            click_dx: dx,
            click_dy: dy,
            movement_time_ms: 700.0,
            is_error,
        }
    }

    #[test]
    fn four_symmetric_offsets() {
        let trials = vec![
            trial(30.0, 30.0, 1.0, 1.0, false),
            trial(30.0, 30.0, 1.0, -1.0, false),
            trial(30.0, 30.0, -1.0, 1.0, false),
            trial(30.0, 30.0, -1.0, -1.0, false),
        ];
        let stats = aggregate_conditions(&trials).unwrap();
        assert_eq!(stats.len(), 1);
        let s = &stats[0];
        // sample SD of {-1,-1,1,1} = sqrt(4/3)
        assert!((s.sigma_x - 1.1547005383792515).abs() < 1e-12);
        assert!((s.sigma_y - 1.1547005383792515).abs() < 1e-12);
        assert_eq!(s.rho, 0.0);
        assert_eq!(s.error_rate_pct, 0.0);
        assert_eq!(s.mu_x, 0.0);
        assert_eq!(s.mu_y, 0.0);
    }

    #[test]
    fn zero_variance_offsets() {
        let trials = vec![
            trial(20.0, 20.0, 2.0, 3.0, false),
            trial(20.0, 20.0, 2.0, 3.0, false),
            trial(20.0, 20.0, 2.0, 3.0, false),
        ];
        let s = &aggregate_conditions(&trials).unwrap()[0];
        assert_eq!(s.sigma_x, 0.0);
        assert_eq!(s.sigma_y, 0.0);
        assert_eq!(s.rho, 0.0);
    }

    #[test]
    fn error_rate_counting() {
        let mut trials = Vec::new();
        for i in 0..100 {
            trials.push(trial(40.0, 40.0, 0.1 * i as f64, 0.0, i < 7));
        }
        let s = &aggregate_conditions(&trials).unwrap()[0];
        assert_eq!(s.n, 100);
        assert_eq!(s.error_rate_pct, 7.0);
    }

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 3.0];
        assert_eq!(pearson_rho(&xs, &xs).unwrap(), 1.0);
        let neg: Vec<f64> = xs.iter().map(|v| -v).collect();
        assert_eq!(pearson_rho(&xs, &neg).unwrap(), -1.0);
        assert!((pearson_rho(&xs, &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(pearson_rho(&xs, &[1.0, 2.0]).is_err());
        assert!(pearson_rho(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn order_independence() {
        let mut trials = vec![
            trial(30.0, 50.0, 1.0, 2.0, false),
            trial(30.0, 50.0, -2.0, 0.5, true),
            trial(30.0, 50.0, 0.3, -1.0, false),
            trial(80.0, 30.0, 4.0, -2.0, false),
            trial(80.0, 30.0, -1.0, 3.0, true),
        ];
        let a = aggregate_conditions(&trials).unwrap();
        trials.reverse();
        trials.swap(0, 2);
        let b = aggregate_conditions(&trials).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn angle_blind() {
        let mut trials = vec![
            trial(30.0, 50.0, 1.0, 2.0, false),
            trial(30.0, 50.0, -2.0, 0.5, true),
            trial(30.0, 50.0, 0.3, -1.0, false),
        ];
        let a = aggregate_conditions(&trials).unwrap();
        trials[0].angle_deg = 90.0;
        trials[1].angle_deg = 30.0;
        trials[2].angle_deg = 210.0;
        let b = aggregate_conditions(&trials).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn insufficient_group_named() {
        let trials = vec![
            trial(30.0, 50.0, 1.0, 2.0, false),
            trial(30.0, 50.0, -2.0, 0.5, false),
            trial(80.0, 30.0, 4.0, -2.0, false),
        ];
        match aggregate_conditions(&trials) {
            Err(Error::InsufficientData(msg)) => {
                assert!(msg.contains("80") && msg.contains("30"), "{msg}");
            }
            other => panic!("expected insufficient-data error, got {other:?}"),
        }
    }

    #[test]
    fn output_sorted_by_geometry() {
        let trials = vec![
            trial(80.0, 30.0, 1.0, 1.0, false),
            trial(80.0, 30.0, -1.0, 0.0, false),
            trial(30.0, 120.0, 1.0, 1.0, false),
            trial(30.0, 120.0, 0.0, -1.0, false),
            trial(30.0, 50.0, 1.0, 1.0, false),
            trial(30.0, 50.0, 2.0, -1.0, false),
        ];
        let stats = aggregate_conditions(&trials).unwrap();
        let keys: Vec<(f64, f64)> = stats.iter().map(|s| (s.width, s.height)).collect();
        assert_eq!(keys, vec![(30.0, 50.0), (30.0, 120.0), (80.0, 30.0)]);
    }
}
