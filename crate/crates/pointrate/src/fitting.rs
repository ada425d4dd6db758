//! Ordinary least squares for the sigma models, with R², adjusted R², AIC,
//! and the ΔAIC > 2 model-selection rule.

use crate::aggregation::ConditionStats;
use crate::core_model::{Axis, ModelForm, SigmaModel};
use crate::error::{Error, Result};
use serde::Serialize;

/// Raw OLS solution with diagnostics.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub rss: f64,
    pub r2: f64,
    pub n: usize,
    pub k: usize,
}

/// Least squares via Householder QR on the design matrix. Rank deficiency
/// is reported as a collinearity error rather than solved with a
/// pseudoinverse.
pub fn ols_fit(rows: &[Vec<f64>], responses: &[f64]) -> Result<OlsFit> {
    let n = rows.len();
    if n == 0 || n != responses.len() {
        return Err(Error::Domain(format!(
            "predictor rows ({n}) and responses ({}) must match and be non-empty",
            responses.len()
        )));
    }
    let k = rows[0].len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::Format("ragged predictor matrix".into()));
    }
    if n < k + 1 {
        return Err(Error::InsufficientData(format!(
            "need at least {} rows for {k} coefficients, got {n}",
            k + 1
        )));
    }

    // column-major working copy of [X | y]
    let mut a = vec![0.0; n * k];
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            a[j * n + i] = *v;
        }
    }
    let mut qty = responses.to_vec();

    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for j in 0..k {
        // Householder vector for column j below the diagonal
        let col = &a[j * n..(j + 1) * n];
        let norm = col[j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-12 * scale {
            return Err(Error::Collinearity(format!(
                "predictor column {j} is linearly dependent on earlier columns"
            )));
        }
        let alpha = if col[j] >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = col[j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        a[j * n + j] = alpha;
        for x in &mut a[j * n + j + 1..(j + 1) * n] {
            *x = 0.0;
        }
        if vnorm2 == 0.0 {
            continue;
        }
        for jj in j + 1..k {
            let dot: f64 = v
                .iter()
                .zip(&a[jj * n + j..(jj + 1) * n])
                .map(|(vi, xi)| vi * xi)
                .sum();
            let f = 2.0 * dot / vnorm2;
            for (vi, xi) in v.iter().zip(&mut a[jj * n + j..(jj + 1) * n]) {
                *xi -= f * vi;
            }
        }
        let dot: f64 = v.iter().zip(&qty[j..]).map(|(vi, yi)| vi * yi).sum();
        let f = 2.0 * dot / vnorm2;
        for (vi, yi) in v.iter().zip(&mut qty[j..]) {
            *yi -= f * vi;
        }
    }

    // back-substitute R beta = (Q^T y)[..k]
    let mut beta = vec![0.0; k];
    for j in (0..k).rev() {
        let mut s = qty[j];
        for jj in j + 1..k {
            s -= a[jj * n + j] * beta[jj];
        }
        let r_jj = a[j * n + j];
        if r_jj.abs() <= 1e-12 * scale {
            return Err(Error::Collinearity(format!("rank-deficient at column {j}")));
        }
        beta[j] = s / r_jj;
    }

    let residuals: Vec<f64> = rows
        .iter()
        .zip(responses)
        .map(|(row, y)| y - row.iter().zip(&beta).map(|(x, b)| x * b).sum::<f64>())
        .collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let mean_y = responses.iter().sum::<f64>() / n as f64;
    let tss: f64 = responses.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    let r2 = if tss == 0.0 { 0.0 } else { 1.0 - rss / tss };

    // (X'X)^-1 = R^-1 R^-T from the stored R factor
    let mut r_inv = vec![0.0; k * k]; // column-major k x k
    for j in 0..k {
        r_inv[j * k + j] = 1.0 / a[j * n + j];
        for i in (0..j).rev() {
            let mut s = 0.0;
            for l in i + 1..=j {
                s += a[l * n + i] * r_inv[j * k + l];
            }
            r_inv[j * k + i] = -s / a[i * n + i];
        }
    }
    let dof = n - k;
    let sigma2 = if dof > 0 { rss / dof as f64 } else { f64::NAN };
    let std_errors: Vec<f64> = (0..k)
        .map(|i| {
            let xtx_inv_ii: f64 = (i..k).map(|j| r_inv[j * k + i] * r_inv[j * k + i]).sum();
            (sigma2 * xtx_inv_ii).sqrt()
        })
        .collect();

    Ok(OlsFit {
        coefficients: beta,
        residuals,
        std_errors,
        rss,
        r2,
        n,
        k,
    })
}

/// AIC = n·ln(rss/n) + 2·(k + 1), counting the error variance as a
/// parameter. Absolute values are convention-dependent; only differences
/// are meaningful.
pub fn aic(rss: f64, n: usize, k_coefficients: usize) -> Result<f64> {
    if rss <= 0.0 {
        return Err(Error::DegenerateFit(format!(
            "AIC undefined for rss = {rss} (perfect or degenerate fit)"
        )));
    }
    if n <= k_coefficients {
        return Err(Error::InsufficientData(format!(
            "AIC needs n > k, got n={n}, k={k_coefficients}"
        )));
    }
    Ok(n as f64 * (rss / n as f64).ln() + 2.0 * (k_coefficients as f64 + 1.0))
}

/// A fitted sigma model plus goodness-of-fit diagnostics.
///
/// Serializes as `{format_version, axis, form, coefficients, r2, adj_r2,
/// aic, n_points}`; residuals and standard errors stay in memory.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub format_version: u32,
    #[serde(flatten)]
    pub model: SigmaModel,
    pub r2: f64,
    pub adj_r2: f64,
    pub aic: f64,
    pub n_points: usize,
    #[serde(skip)]
    pub rss: f64,
    #[serde(skip)]
    pub residuals: Vec<f64>,
    #[serde(skip)]
    pub std_errors: Vec<f64>,
}

/// Fit a sigma model of the given form and axis to per-condition observed
/// sigmas. Predictors: OneVar {1, size}; ThreeVar {1, size, other,
/// size/other} with (size, other) = (W, H) for axis X and (H, W) for axis Y.
pub fn fit_sigma_model(
    conditions: &[ConditionStats],
    form: ModelForm,
    axis: Axis,
) -> Result<FitReport> {
    let min_points = match form {
        ModelForm::OneVar => 3,
        ModelForm::ThreeVar => 5,
    };
    if conditions.len() < min_points {
        return Err(Error::InsufficientData(format!(
            "{form} fit needs at least {min_points} conditions, got {}",
            conditions.len()
        )));
    }
    let mut rows = Vec::with_capacity(conditions.len());
    let mut responses = Vec::with_capacity(conditions.len());
    for c in conditions {
        if !(c.width > 0.0 && c.height > 0.0) {
            return Err(Error::Domain(format!(
                "condition with non-positive geometry W={}, H={}",
                c.width, c.height
            )));
        }
        let (size, other, sigma) = match axis {
            Axis::X => (c.width, c.height, c.sigma_x),
            Axis::Y => (c.height, c.width, c.sigma_y),
        };
        rows.push(match form {
            ModelForm::OneVar => vec![1.0, size],
            ModelForm::ThreeVar => vec![1.0, size, other, size / other],
        });
        responses.push(sigma);
    }
    let fit = ols_fit(&rows, &responses)?;
    let model = match form {
        ModelForm::OneVar => SigmaModel::one_var(axis, fit.coefficients[0], fit.coefficients[1]),
        ModelForm::ThreeVar => SigmaModel::three_var(
            axis,
            fit.coefficients[0],
            fit.coefficients[1],
            fit.coefficients[2],
            fit.coefficients[3],
        ),
    };
    let n = fit.n as f64;
    let adj_r2 = 1.0 - (1.0 - fit.r2) * (n - 1.0) / (n - fit.k as f64);
    // a numerically exact fit has no defined AIC; mark it as -inf so it
    // always wins a comparison
    let aic_value = aic(fit.rss, fit.n, fit.k).unwrap_or(f64::NEG_INFINITY);
    Ok(FitReport {
        format_version: 1,
        model,
        r2: fit.r2,
        adj_r2,
        aic: aic_value,
        n_points: fit.n,
        rss: fit.rss,
        residuals: fit.residuals,
        std_errors: fit.std_errors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSelection {
    pub preferred_form: ModelForm,
    pub delta_aic: f64,
    pub significant: bool,
}

/// Pick the lower-AIC fit; the preference is significant iff ΔAIC > 2.
/// Both fits must describe the same axis and condition set.
pub fn select_model(fit_a: &FitReport, fit_b: &FitReport) -> Result<ModelSelection> {
    if fit_a.model.axis != fit_b.model.axis || fit_a.n_points != fit_b.n_points {
        return Err(Error::Domain(format!(
            "fits are not comparable: axis {} over {} points vs axis {} over {} points",
            fit_a.model.axis, fit_a.n_points, fit_b.model.axis, fit_b.n_points
        )));
    }
    let delta_aic = (fit_a.aic - fit_b.aic).abs();
    let preferred = if fit_b.aic < fit_a.aic { fit_b } else { fit_a };
    Ok(ModelSelection {
        preferred_form: preferred.model.form,
        delta_aic,
        significant: delta_aic > 2.0,
    })
}

#[cfg(test)]
pub(crate) fn synthetic_conditions(
    sizes: &[f64],
    sigma_x: impl Fn(f64, f64) -> f64,
    sigma_y: impl Fn(f64, f64) -> f64,
) -> Vec<ConditionStats> {
    let mut out = Vec::new();
    for &w in sizes {
        for &h in sizes {
            out.push(ConditionStats {
                width: w,
                height: h,
                n: 100,
                sigma_x: sigma_x(w, h),
                sigma_y: sigma_y(w, h),
                rho: 0.0,
                mu_x: 0.0,
                mu_y: 0.0,
                error_rate_pct: 0.0,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXP1_SIZES: [f64; 4] = [30.0, 50.0, 80.0, 120.0];
    const EQ9: [f64; 4] = [0.8407, 0.1698, 0.01698, 0.3949];

    fn eq9_conditions() -> Vec<ConditionStats> {
        synthetic_conditions(
            &EXP1_SIZES,
            |w, h| EQ9[0] + EQ9[1] * w + EQ9[2] * h + EQ9[3] * (w / h),
            |_, h| 0.5 + 0.15 * h,
        )
    }

    #[test]
    fn exact_linear_recovery() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64]).collect();
        let responses: Vec<f64> = (0..10).map(|i| 2.5 - 0.75 * i as f64).collect();
        let fit = ols_fit(&rows, &responses).unwrap();
        assert!((fit.coefficients[0] - 2.5).abs() < 1e-9);
        assert!((fit.coefficients[1] + 0.75).abs() < 1e-9);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_response_convention() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64]).collect();
        let responses = vec![4.0; 6];
        let fit = ols_fit(&rows, &responses).unwrap();
        assert!(fit.coefficients[1].abs() < 1e-12);
        assert_eq!(fit.r2, 0.0);
    }

    #[test]
    fn residuals_orthogonal_to_predictors() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let x = i as f64;
                vec![1.0, x, (0.3 * x).sin()]
            })
            .collect();
        let responses: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).cos() * 3.0 + 1.0).collect();
        let fit = ols_fit(&rows, &responses).unwrap();
        for j in 0..3 {
            let dot: f64 = rows.iter().zip(&fit.residuals).map(|(r, e)| r[j] * e).sum();
            assert!(dot.abs() < 1e-8 * 20.0, "column {j}: {dot}");
        }
    }

    #[test]
    fn aic_examples() {
        let n = 16;
        let a1 = aic(2.0, n, 2).unwrap();
        let a2 = aic(4.0, n, 2).unwrap();
        assert!((a2 - a1 - 16.0 * 2f64.ln()).abs() < 1e-12);
        let a = aic(16f64.exp(), 16, 2).unwrap();
        assert!((a - (16.0 * (16.0 - 16f64.ln()) + 6.0)).abs() < 1e-10);
        assert!(aic(0.0, 16, 2).is_err());
        assert!(aic(1.0, 2, 2).is_err());
    }

    #[test]
    fn eq9_round_trip() {
        let fit = fit_sigma_model(&eq9_conditions(), ModelForm::ThreeVar, Axis::X).unwrap();
        let c = fit.model.coefficients;
        let got = [c.intercept, c.primary, c.cross.unwrap(), c.interaction.unwrap()];
        for (g, e) in got.iter().zip(&EQ9) {
            assert!((g - e).abs() / e.abs() < 1e-9, "{g} vs {e}");
        }
        assert!(fit.r2 > 1.0 - 1e-12);
    }

    #[test]
    fn one_var_on_interaction_data() {
        let fit = fit_sigma_model(&eq9_conditions(), ModelForm::OneVar, Axis::X).unwrap();
        assert!(fit.r2 < 1.0 && fit.r2 > 0.99, "r2 = {}", fit.r2);
    }

    #[test]
    fn repeated_geometry_is_collinear() {
        let conds: Vec<ConditionStats> = (0..6)
            .map(|i| ConditionStats {
                width: 30.0,
                height: 30.0,
                n: 10,
                sigma_x: 5.0 + 0.01 * i as f64,
                sigma_y: 5.0,
                rho: 0.0,
                mu_x: 0.0,
                mu_y: 0.0,
                error_rate_pct: 0.0,
            })
            .collect();
        assert!(matches!(
            fit_sigma_model(&conds, ModelForm::ThreeVar, Axis::X),
            Err(Error::Collinearity(_))
        ));
    }

    #[test]
    fn adding_predictors_never_lowers_r2() {
        let conds = synthetic_conditions(
            &EXP1_SIZES,
            |w, h| 1.0 + 0.2 * w + 0.01 * h + (w * 0.05).sin(),
            |_, h| 0.5 + 0.15 * h,
        );
        let one = fit_sigma_model(&conds, ModelForm::OneVar, Axis::X).unwrap();
        let three = fit_sigma_model(&conds, ModelForm::ThreeVar, Axis::X).unwrap();
        assert!(three.r2 >= one.r2);
        assert!(one.adj_r2 <= one.r2);
        assert!(three.adj_r2 <= three.r2);
    }

    #[test]
    fn fit_invariant_to_row_order() {
        let mut conds = eq9_conditions();
        let a = fit_sigma_model(&conds, ModelForm::ThreeVar, Axis::X).unwrap();
        conds.reverse();
        conds.swap(1, 7);
        let b = fit_sigma_model(&conds, ModelForm::ThreeVar, Axis::X).unwrap();
        let (ca, cb) = (a.model.coefficients, b.model.coefficients);
        assert!((ca.intercept - cb.intercept).abs() < 1e-10);
        assert!((ca.primary - cb.primary).abs() < 1e-12);
    }

    #[test]
    fn selection_rules() {
        let conds = synthetic_conditions(
            &EXP1_SIZES,
            |w, h| 1.0 + 0.2 * w + 0.01 * h + (w * 0.05).sin(),
            |_, h| 0.5 + 0.15 * h,
        );
        let fit = fit_sigma_model(&conds, ModelForm::OneVar, Axis::X).unwrap();
        let same = select_model(&fit, &fit).unwrap();
        assert_eq!(same.delta_aic, 0.0);
        assert!(!same.significant);

        let mut b = fit.clone();
        b.aic = fit.aic - 2.0; // boundary: strict >
        assert!(!select_model(&fit, &b).unwrap().significant);
        b.aic = fit.aic - 2.0001;
        let sel = select_model(&fit, &b).unwrap();
        assert!(sel.significant);

        let mut mismatched = fit.clone();
        mismatched.n_points = 7;
        assert!(select_model(&fit, &mismatched).is_err());
    }

    #[test]
    fn three_var_wins_on_interaction_truth() {
        // noiseless ThreeVar truth: its rss underflows to a perfect fit,
        // so perturb slightly to keep both AICs defined
        let mut conds = eq9_conditions();
        for (i, c) in conds.iter_mut().enumerate() {
            c.sigma_x += 1e-3 * ((i * 7919 % 13) as f64 / 13.0 - 0.5);
        }
        let one = fit_sigma_model(&conds, ModelForm::OneVar, Axis::X).unwrap();
        let three = fit_sigma_model(&conds, ModelForm::ThreeVar, Axis::X).unwrap();
        let sel = select_model(&one, &three).unwrap();
        assert_eq!(sel.preferred_form, ModelForm::ThreeVar);
        assert!(sel.significant);
    }
}
