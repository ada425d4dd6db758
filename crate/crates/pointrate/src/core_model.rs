//! Pure numerical kernel: the error function, sigma prediction from target
//! geometry, and the error-rate formulas (1D, uncorrelated 2D product, and
//! the correlated bivariate rectangle integral).

// the erf constants keep their published digit strings even where they
// exceed f64 precision
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Rectangular target extents on the screen axes, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetGeometry {
    pub width: f64,
    pub height: f64,
}

impl TargetGeometry {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width.is_finite() && height.is_finite() && width > 0.0 && height > 0.0) {
            return Err(Error::Domain(format!(
                "target geometry must have finite positive W and H, got W={width}, H={height}"
            )));
        }
        Ok(TargetGeometry { width, height })
    }
}

/// Screen axis a sigma model predicts for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::X => write!(f, "x"),
            Axis::Y => write!(f, "y"),
        }
    }
}

/// Number of predictor terms in a sigma model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelForm {
    /// sigma = intercept + primary * size (same-axis target size only).
    #[serde(rename = "1var")]
    OneVar,
    /// sigma = intercept + primary * size + cross * other + interaction * (size / other).
    #[serde(rename = "3var")]
    ThreeVar,
}

impl std::fmt::Display for ModelForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelForm::OneVar => write!(f, "1var"),
            ModelForm::ThreeVar => write!(f, "3var"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub intercept: f64,
    pub primary: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<f64>,
}

/// A fitted endpoint-variability predictor for one screen axis.
///
/// For axis X the primary size is W and the interaction term is W/H;
/// for axis Y the primary size is H and the interaction term is H/W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaModel {
    pub axis: Axis,
    pub form: ModelForm,
    pub coefficients: Coefficients,
}

impl SigmaModel {
    pub fn one_var(axis: Axis, intercept: f64, primary: f64) -> Self {
        SigmaModel {
            axis,
            form: ModelForm::OneVar,
            coefficients: Coefficients {
                intercept,
                primary,
                cross: None,
                interaction: None,
            },
        }
    }

    pub fn three_var(axis: Axis, intercept: f64, primary: f64, cross: f64, interaction: f64) -> Self {
        SigmaModel {
            axis,
            form: ModelForm::ThreeVar,
            coefficients: Coefficients {
                intercept,
                primary,
                cross: Some(cross),
                interaction: Some(interaction),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        match self.form {
            ModelForm::OneVar => {
                if self.coefficients.cross.is_some() || self.coefficients.interaction.is_some() {
                    return Err(Error::Domain(
                        "1var model carries exactly two coefficients".into(),
                    ));
                }
            }
            ModelForm::ThreeVar => {
                if self.coefficients.cross.is_none() || self.coefficients.interaction.is_none() {
                    return Err(Error::Domain(
                        "3var model carries exactly four coefficients".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Predicted endpoint standard deviation (pixels) at the given geometry.
    ///
    /// A non-positive prediction means the model is being used outside its
    /// validity range and is reported as an error, never clamped.
    pub fn predict(&self, geometry: &TargetGeometry) -> Result<f64> {
        self.validate()?;
        let (size, other) = match self.axis {
            Axis::X => (geometry.width, geometry.height),
            Axis::Y => (geometry.height, geometry.width),
        };
        let c = &self.coefficients;
        let sigma = match self.form {
            ModelForm::OneVar => c.intercept + c.primary * size,
            ModelForm::ThreeVar => {
                c.intercept
                    + c.primary * size
                    + c.cross.unwrap() * other
                    + c.interaction.unwrap() * (size / other)
            }
        };
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidSigma(format!(
                "predicted sigma_{} = {sigma} at W={}, H={} (model outside validity range)",
                self.axis, geometry.width, geometry.height
            )));
        }
        Ok(sigma)
    }
}

/// Centered bivariate normal endpoint distribution on screen axes.
///
/// The prediction formulas assume zero mean offsets; nonzero `mu_x`/`mu_y`
/// are carried for auditing and Monte Carlo sampling only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointDistribution {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub rho: f64,
    #[serde(default)]
    pub mu_x: f64,
    #[serde(default)]
    pub mu_y: f64,
}

impl EndpointDistribution {
    pub fn new(sigma_x: f64, sigma_y: f64, rho: f64) -> Result<Self> {
        if !(sigma_x.is_finite() && sigma_x > 0.0 && sigma_y.is_finite() && sigma_y > 0.0) {
            return Err(Error::Domain(format!(
                "sigmas must be finite and positive, got sigma_x={sigma_x}, sigma_y={sigma_y}"
            )));
        }
        if !(rho.is_finite() && rho.abs() < 1.0) {
            return Err(Error::Domain(format!("|rho| must be < 1, got rho={rho}")));
        }
        Ok(EndpointDistribution {
            sigma_x,
            sigma_y,
            rho,
            mu_x: 0.0,
            mu_y: 0.0,
        })
    }
}

// ---------------------------------------------------------------------------
// Gauss error function
//
// Rational approximations from the classic FreeBSD msun s_erf.c (SunPro),
// accurate to well under one ulp across the whole real line. The constants
// keep their published digit strings even where they exceed f64 precision.

const ERX: f64 = 8.45062911510467529297e-01;

// |x| < 0.84375
const EFX: f64 = 1.28379167095512586316e-01;
const EFX8: f64 = 1.02703333676410069053e+00;
const PP0: f64 = 1.28379167095512558561e-01;
const PP1: f64 = -3.25042107247001499370e-01;
const PP2: f64 = -2.84817495755985104766e-02;
const PP3: f64 = -5.77027029648944159157e-03;
const PP4: f64 = -2.37630166566501626084e-05;
const QQ1: f64 = 3.97917223959155352819e-01;
const QQ2: f64 = 6.50222499887672944485e-02;
const QQ3: f64 = 5.08130628187576562776e-03;
const QQ4: f64 = 1.32494738004321644526e-04;
const QQ5: f64 = -3.96022827877536812320e-06;

// 0.84375 <= |x| < 1.25
const PA0: f64 = -2.36211856075265944077e-03;
const PA1: f64 = 4.14856118683748331666e-01;
const PA2: f64 = -3.72207876035701323847e-01;
const PA3: f64 = 3.18346619901161753674e-01;
const PA4: f64 = -1.10894694282396677476e-01;
const PA5: f64 = 3.54783043256182359371e-02;
const PA6: f64 = -2.16637559486879084300e-03;
const QA1: f64 = 1.06420880400844228286e-01;
const QA2: f64 = 5.40397917702171048937e-01;
const QA3: f64 = 7.18286544141962662868e-02;
const QA4: f64 = 1.26171219808761642112e-01;
const QA5: f64 = 1.36370839120290507362e-02;
const QA6: f64 = 1.19844998467991074170e-02;

// erfc on 1.25 <= |x| < 1/0.35
const RA0: f64 = -9.86494403484714822705e-03;
const RA1: f64 = -6.93858572707181764372e-01;
const RA2: f64 = -1.05586262253232909814e+01;
const RA3: f64 = -6.23753324503260060396e+01;
const RA4: f64 = -1.62396669462573470355e+02;
const RA5: f64 = -1.84605092906711035994e+02;
const RA6: f64 = -8.12874355063065934246e+01;
const RA7: f64 = -9.81432934416914548592e+00;
const SA1: f64 = 1.96512716674392571292e+01;
const SA2: f64 = 1.37657754143519042600e+02;
const SA3: f64 = 4.34565877475229228821e+02;
const SA4: f64 = 6.45387271733267880336e+02;
const SA5: f64 = 4.29008140027567833386e+02;
const SA6: f64 = 1.08635005541779435134e+02;
const SA7: f64 = 6.57024977031928170135e+00;
const SA8: f64 = -6.04244152148580987438e-02;

// erfc on 1/0.35 <= |x| < 6
const RB0: f64 = -9.86494292470009928597e-03;
const RB1: f64 = -7.99283237680523006574e-01;
const RB2: f64 = -1.77579549177547519889e+01;
const RB3: f64 = -1.60636384855821916062e+02;
const RB4: f64 = -6.37566443368389627722e+02;
const RB5: f64 = -1.02509513161107724954e+03;
const RB6: f64 = -4.83519191608651397019e+02;
const SB1: f64 = 3.03380607434824582924e+01;
const SB2: f64 = 3.25792512996573918826e+02;
const SB3: f64 = 1.53672958608443695994e+03;
const SB4: f64 = 3.19985821950859553908e+03;
const SB5: f64 = 2.55305040643316442583e+03;
const SB6: f64 = 4.74528541206955367215e+02;
const SB7: f64 = -2.24409524465858183362e+01;

const VERY_TINY: f64 = 2.848094538889218e-306;
const SMALL: f64 = 3.725290298461914e-9; // 2^-28

fn erf_core(x: f64) -> f64 {
    let sign = x < 0.0;
    let x = x.abs();
    if x < 0.84375 {
        let temp = if x < SMALL {
            if x < VERY_TINY {
                0.125 * (8.0 * x + EFX8 * x)
            } else {
                x + EFX * x
            }
        } else {
            let z = x * x;
            let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
            let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
            x + x * (r / s)
        };
        return if sign { -temp } else { temp };
    }
    if x < 1.25 {
        let s = x - 1.0;
        let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
        let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
        return if sign { -ERX - p / q } else { ERX + p / q };
    }
    if x >= 6.0 {
        return if sign { -1.0 } else { 1.0 };
    }
    let s = 1.0 / (x * x);
    let (r, q) = if x < 1.0 / 0.35 {
        (
            RA0 + s * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
            1.0 + s
                * (SA1
                    + s * (SA2
                        + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
        )
    } else {
        (
            RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
            1.0 + s
                * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
        )
    };
    // split x into a 20-bit high part so -z*z is exact
    let z = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
    let tail = f64::exp(-z * z - 0.5625) * f64::exp((z - x) * (z + x) + r / q);
    if sign {
        tail / x - 1.0
    } else {
        1.0 - tail / x
    }
}

/// Gauss error function, absolute error well under 1e-12.
pub fn erf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("erf requires finite input, got {x}")));
    }
    Ok(erf_core(x))
}

/// Standard normal CDF on an already-validated argument.
fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf_core(z / std::f64::consts::SQRT_2))
}

// ---------------------------------------------------------------------------
// Error-rate formulas

const TWO_SQRT_2: f64 = 2.0 * std::f64::consts::SQRT_2;

/// 1D error rate: 1 - erf(size / (2 sqrt(2) sigma)).
pub fn error_rate_1d(size: f64, sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if !(size.is_finite() && size >= 0.0) {
        return Err(Error::Domain(format!("size must be >= 0, got {size}")));
    }
    Ok(1.0 - erf_core(size / (TWO_SQRT_2 * sigma)))
}

/// 2D error rate ignoring correlation: 1 - erf(W/(2√2 σx)) · erf(H/(2√2 σy)).
pub fn error_rate_2d(geometry: &TargetGeometry, sigma_x: f64, sigma_y: f64) -> Result<f64> {
    if !(sigma_x.is_finite() && sigma_x > 0.0 && sigma_y.is_finite() && sigma_y > 0.0) {
        return Err(Error::Domain(format!(
            "sigmas must be positive, got sigma_x={sigma_x}, sigma_y={sigma_y}"
        )));
    }
    let px = erf_core(geometry.width / (TWO_SQRT_2 * sigma_x));
    let py = erf_core(geometry.height / (TWO_SQRT_2 * sigma_y));
    Ok(1.0 - px * py)
}

/// Correlated bivariate error rate: 1 - P(D) for the centered W x H
/// rectangle under the given endpoint distribution (mean offsets ignored).
///
/// P(D) is reduced to a single integral over x of the normal density times
/// the conditional y-interval probability, evaluated with adaptive Simpson
/// quadrature to absolute error below 1e-8.
pub fn error_rate_bivariate(geometry: &TargetGeometry, dist: &EndpointDistribution) -> Result<f64> {
    if !(dist.sigma_x > 0.0 && dist.sigma_y > 0.0) {
        return Err(Error::Domain(format!(
            "sigmas must be positive, got sigma_x={}, sigma_y={}",
            dist.sigma_x, dist.sigma_y
        )));
    }
    if !(dist.rho.is_finite() && dist.rho.abs() < 1.0) {
        return Err(Error::Domain(format!("|rho| must be < 1, got rho={}", dist.rho)));
    }
    let (sx, sy, rho) = (dist.sigma_x, dist.sigma_y, dist.rho);
    let half_w = geometry.width / 2.0;
    let half_h = geometry.height / 2.0;
    // Y | X = x is normal with mean rho*(sy/sx)*x and sd sy*sqrt(1 - rho^2).
    let cond_sd = sy * (1.0 - rho * rho).sqrt();
    let slope = rho * sy / sx;
    let norm = 1.0 / (sx * (2.0 * std::f64::consts::PI).sqrt());
    let integrand = move |x: f64| {
        let density = norm * (-0.5 * (x / sx) * (x / sx)).exp();
        let m = slope * x;
        density * (normal_cdf((half_h - m) / cond_sd) - normal_cdf((-half_h - m) / cond_sd))
    };
    // beyond 8.5 sigma the density contributes < 1e-16
    let limit = half_w.min(8.5 * sx);
    let p_inside = adaptive_simpson(&integrand, -limit, limit, 1e-10)?;
    Ok((1.0 - p_inside).clamp(0.0, 1.0))
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numerical(format!(
            "quadrature failed to converge on [{a}, {b}]: residual {delta:e} at max depth"
        )));
    }
    let half_tol = 0.5 * tol;
    Ok(simpson_step(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?)
}
