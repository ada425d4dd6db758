//! Prediction-accuracy metrics and shuffle-split cross-validation over
//! target conditions.

use crate::aggregation::ConditionStats;
use crate::core_model::{error_rate_2d, ModelForm, SigmaModel, TargetGeometry};
use crate::error::{Error, Result};
use crate::fitting::fit_sigma_model;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    /// Coefficient of determination, 1 - SSE/TSS. May be negative.
    pub r2: f64,
    /// Squared Pearson correlation between observed and predicted.
    pub r2_pearson: f64,
    pub mae_pct: f64,
    pub rmse_pct: f64,
}

/// Error-rate prediction accuracy, both series in percent.
pub fn prediction_metrics(observed_pct: &[f64], predicted_pct: &[f64]) -> Result<Metrics> {
    if observed_pct.len() != predicted_pct.len() {
        return Err(Error::Domain(format!(
            "length mismatch: {} observed vs {} predicted",
            observed_pct.len(),
            predicted_pct.len()
        )));
    }
    let n = observed_pct.len();
    if n < 2 {
        return Err(Error::Domain("metrics need at least 2 points".into()));
    }
    let mean_obs = observed_pct.iter().sum::<f64>() / n as f64;
    let tss: f64 = observed_pct.iter().map(|o| (o - mean_obs) * (o - mean_obs)).sum();
    if tss == 0.0 {
        return Err(Error::Domain(
            "observed values have zero variance; r2 undefined".into(),
        ));
    }
    let sse: f64 = observed_pct
        .iter()
        .zip(predicted_pct)
        .map(|(o, p)| (o - p) * (o - p))
        .sum();
    let mae = observed_pct
        .iter()
        .zip(predicted_pct)
        .map(|(o, p)| (o - p).abs())
        .sum::<f64>()
        / n as f64;
    let r2_pearson = crate::aggregation::pearson_rho(observed_pct, predicted_pct)?.powi(2);
    Ok(Metrics {
        r2: 1.0 - sse / tss,
        r2_pearson,
        mae_pct: mae,
        rmse_pct: (sse / n as f64).sqrt(),
    })
}

/// Predicted error rate (percent) for each condition: predicted sigmas on
/// both axes composed with the uncorrelated 2D formula.
pub fn predict_er_table(
    model_x: &SigmaModel,
    model_y: &SigmaModel,
    conditions: &[ConditionStats],
) -> Result<Vec<f64>> {
    conditions
        .iter()
        .map(|c| {
            let geom = TargetGeometry::new(c.width, c.height)?;
            let sx = model_x.predict(&geom)?;
            let sy = model_y.predict(&geom)?;
            Ok(100.0 * error_rate_2d(&geom, sx, sy)?)
        })
        .collect()
}

/// Training-set size for a shuffle split: ceil(ratio * n).
pub fn train_split_size(n_conditions: usize, train_ratio: f64) -> usize {
    (train_ratio * n_conditions as f64).ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub format_version: u32,
    pub form: ModelForm,
    pub train_ratio: f64,
    pub iterations: u32,
    pub mean_r2: f64,
    pub mean_r2_pearson: f64,
    pub mean_mae_pct: f64,
    pub mean_rmse_pct: f64,
    pub seed: u64,
}

fn iteration_rng(seed: u64, iteration: u32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&iteration.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Shuffle-split cross-validation: per iteration, sample ceil(ratio * N)
/// conditions without replacement, fit both axes' sigma models of the given
/// form on them, predict error rates on the held-out conditions, and average
/// the metrics over iterations.
///
/// `train_ratio = 1` degenerates to the all-data analysis: a single
/// iteration with metrics computed on the training set itself.
///
/// Deterministic: conditions are canonically pre-sorted by (W, H) and each
/// iteration draws from a generator seeded by (seed, iteration), so the
/// report is independent of input ordering and bit-identical across runs.
pub fn shuffle_split_cv(
    conditions: &[ConditionStats],
    form: ModelForm,
    train_ratio: f64,
    iterations: u32,
    seed: u64,
) -> Result<CvReport> {
    if conditions.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "cross-validation needs at least 5 conditions, got {}",
            conditions.len()
        )));
    }
    if !(train_ratio > 0.0 && train_ratio <= 1.0) {
        return Err(Error::Config(format!(
            "train_ratio must be in (0, 1], got {train_ratio}"
        )));
    }
    if iterations < 1 {
        return Err(Error::Config("iterations must be >= 1".into()));
    }
    if train_ratio == 1.0 && iterations > 1 {
        return Err(Error::Config(
            "train_ratio = 1 leaves no test split; use a single iteration".into(),
        ));
    }

    let mut sorted: Vec<ConditionStats> = conditions.to_vec();
    sorted.sort_by(|a, b| {
        (a.width, a.height)
            .partial_cmp(&(b.width, b.height))
            .unwrap()
    });
    let n = sorted.len();
    let train_size = train_split_size(n, train_ratio);

    let fit_and_score = |train: &[ConditionStats], test: &[ConditionStats], iter: u32| {
        let context = |e: Error| Error::Numerical(format!("iteration {iter}: {e}"));
        let model_x = fit_sigma_model(train, form, crate::core_model::Axis::X)
            .map_err(context)?
            .model;
        let model_y = fit_sigma_model(train, form, crate::core_model::Axis::Y)
            .map_err(context)?
            .model;
        let predicted = predict_er_table(&model_x, &model_y, test).map_err(context)?;
        let observed: Vec<f64> = test.iter().map(|c| c.error_rate_pct).collect();
        prediction_metrics(&observed, &predicted).map_err(context)
    };

    let mut sums = (0.0, 0.0, 0.0, 0.0);
    if train_ratio == 1.0 {
        let m = fit_and_score(&sorted, &sorted, 0)?;
        sums = (m.r2, m.r2_pearson, m.mae_pct, m.rmse_pct);
    } else {
        for iter in 0..iterations {
            let mut rng = iteration_rng(seed, iter);
            let chosen = rand::seq::index::sample(&mut rng, n, train_size);
            let mut in_train = vec![false; n];
            for idx in chosen.iter() {
                in_train[idx] = true;
            }
            let train: Vec<ConditionStats> = (0..n)
                .filter(|&i| in_train[i])
                .map(|i| sorted[i].clone())
                .collect();
            let test: Vec<ConditionStats> = (0..n)
                .filter(|&i| !in_train[i])
                .map(|i| sorted[i].clone())
                .collect();
            let m = fit_and_score(&train, &test, iter)?;
            sums.0 += m.r2;
            sums.1 += m.r2_pearson;
            sums.2 += m.mae_pct;
            sums.3 += m.rmse_pct;
        }
    }
    let denom = if train_ratio == 1.0 { 1.0 } else { iterations as f64 };
    Ok(CvReport {
        format_version: 1,
        form,
        train_ratio,
        iterations: if train_ratio == 1.0 { 1 } else { iterations },
        mean_r2: sums.0 / denom,
        mean_r2_pearson: sums.1 / denom,
        mean_mae_pct: sums.2 / denom,
        mean_rmse_pct: sums.3 / denom,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_model::Axis;

    const EXP2_SIZES: [f64; 7] = [12.0, 18.0, 26.0, 36.0, 48.0, 62.0, 78.0];
    const EQ11: [f64; 4] = [0.8713, 0.1614, 0.01273, 0.3162];
    const EQ12: [f64; 4] = [0.7221, 0.1309, 0.02284, 0.4282];

    fn eq11_model() -> SigmaModel {
        SigmaModel::three_var(Axis::X, EQ11[0], EQ11[1], EQ11[2], EQ11[3])
    }

    fn eq12_model() -> SigmaModel {
        SigmaModel::three_var(Axis::Y, EQ12[0], EQ12[1], EQ12[2], EQ12[3])
    }

    /// Conditions whose observed ER equals the model family's own
    /// prediction (model-consistent synthetic data).
    fn model_consistent_conditions() -> Vec<ConditionStats> {
        let (mx, my) = (eq11_model(), eq12_model());
        let mut out = Vec::new();
        for &w in &EXP2_SIZES {
            for &h in &EXP2_SIZES {
                let geom = TargetGeometry::new(w, h).unwrap();
                let sx = mx.predict(&geom).unwrap();
                let sy = my.predict(&geom).unwrap();
                out.push(ConditionStats {
                    width: w,
                    height: h,
                    n: 1000,
                    sigma_x: sx,
                    sigma_y: sy,
                    rho: 0.0,
                    mu_x: 0.0,
                    mu_y: 0.0,
                    error_rate_pct: 100.0 * error_rate_2d(&geom, sx, sy).unwrap(),
                });
            }
        }
        out
    }

    #[test]
    fn metrics_examples() {
        let obs = [1.0, 2.0, 3.0];
        let m = prediction_metrics(&obs, &obs).unwrap();
        assert_eq!((m.r2, m.mae_pct, m.rmse_pct), (1.0, 0.0, 0.0));

        let m = prediction_metrics(&obs, &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(m.r2, 0.0);
        assert!((m.mae_pct - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.rmse_pct - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);

        assert!(prediction_metrics(&obs, &[1.0, 2.0]).is_err());
        assert!(prediction_metrics(&[5.0, 5.0], &[4.0, 6.0]).is_err());
    }

    #[test]
    fn rmse_at_least_mae() {
        let obs = [1.0, 4.0, 2.0, 8.0, 3.0];
        let pred = [1.5, 3.0, 2.5, 9.0, 2.0];
        let m = prediction_metrics(&obs, &pred).unwrap();
        assert!(m.rmse_pct >= m.mae_pct);
    }

    #[test]
    fn er_table_over_exp2_grid() {
        let conds = model_consistent_conditions();
        let table = predict_er_table(&eq11_model(), &eq12_model(), &conds).unwrap();
        // grid max is 15.82% at (78, 12)
        assert!(table.iter().all(|&er| er > 0.0 && er < 16.0));
        // decreasing along the diagonal W = H
        let diag: Vec<f64> = conds
            .iter()
            .zip(&table)
            .filter(|(c, _)| c.width == c.height)
            .map(|(_, &er)| er)
            .collect();
        assert_eq!(diag.len(), 7);
        assert!(diag.windows(2).all(|w| w[1] < w[0]));
        // (12, 12) matches the hand-evaluated value
        let at_12 = conds
            .iter()
            .zip(&table)
            .find(|(c, _)| c.width == 12.0 && c.height == 12.0)
            .unwrap()
            .1;
        assert!((at_12 - 10.96).abs() < 0.2);
    }

    #[test]
    fn er_table_saturates_for_huge_targets() {
        // fixed-sigma models: a huge target leaves essentially no mass outside
        let mx = SigmaModel::one_var(Axis::X, 3.0, 0.0);
        let my = SigmaModel::one_var(Axis::Y, 4.0, 0.0);
        let conds = vec![
            ConditionStats {
                width: 1e4,
                height: 1e4,
                n: 10,
                sigma_x: 0.0,
                sigma_y: 0.0,
                rho: 0.0,
                mu_x: 0.0,
                mu_y: 0.0,
                error_rate_pct: 0.0,
            };
            1
        ];
        let table = predict_er_table(&mx, &my, &conds).unwrap();
        assert!(table[0] < 1e-6);
    }

    #[test]
    fn split_sizes_match_hand_computation() {
        assert_eq!(train_split_size(16, 0.8), 13);
        assert_eq!(train_split_size(16, 0.7), 12);
        assert_eq!(train_split_size(16, 0.6), 10);
        assert_eq!(train_split_size(49, 0.8), 40);
        assert_eq!(train_split_size(49, 0.7), 35);
        assert_eq!(train_split_size(49, 0.6), 30);
    }

    #[test]
    fn cv_deterministic_and_order_independent() {
        let mut conds = model_consistent_conditions();
        let a = shuffle_split_cv(&conds, ModelForm::ThreeVar, 0.7, 20, 42).unwrap();
        let b = shuffle_split_cv(&conds, ModelForm::ThreeVar, 0.7, 20, 42).unwrap();
        assert_eq!(a, b);
        conds.reverse();
        let c = shuffle_split_cv(&conds, ModelForm::ThreeVar, 0.7, 20, 42).unwrap();
        assert_eq!(a, c);
        let d = shuffle_split_cv(&conds, ModelForm::ThreeVar, 0.7, 20, 43).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn cv_all_data_ratio() {
        let conds = model_consistent_conditions();
        let report = shuffle_split_cv(&conds, ModelForm::ThreeVar, 1.0, 1, 7).unwrap();
        assert!(report.mean_r2 > 0.95);
        assert_eq!(report.iterations, 1);
        assert!(matches!(
            shuffle_split_cv(&conds, ModelForm::ThreeVar, 1.0, 2, 7),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn cv_config_validation() {
        let conds = model_consistent_conditions();
        assert!(shuffle_split_cv(&conds[..4], ModelForm::OneVar, 0.7, 10, 1).is_err());
        assert!(shuffle_split_cv(&conds, ModelForm::OneVar, 0.0, 10, 1).is_err());
        assert!(shuffle_split_cv(&conds, ModelForm::OneVar, 1.5, 10, 1).is_err());
        assert!(shuffle_split_cv(&conds, ModelForm::OneVar, 0.7, 0, 1).is_err());
    }
}
