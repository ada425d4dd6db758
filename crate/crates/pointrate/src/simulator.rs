//! Synthetic-experiment generator and Monte Carlo error-rate oracle.
//!
//! Reproduces the two task designs (cyclic pointing with four movement
//! angles; multi-directional ring pointing) from a ground-truth sigma model,
//! so the whole screen → aggregate → fit → predict pipeline can be checked
//! against known truth.
//!
//! Screen convention throughout: x grows rightward, y grows downward, and a
//! nominal movement angle θ maps to the direction (cos θ, −sin θ).

use crate::aggregation::TrialRecord;
use crate::core_model::{EndpointDistribution, SigmaModel, TargetGeometry};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// One session: a fixed (W, H) condition with a per-click angle schedule.
#[derive(Debug, Clone)]
pub struct SessionSpec {
    pub width: f64,
    pub height: f64,
    /// Nominal movement angle for every click, warmups included.
    pub trial_angles: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentDesign {
    pub name: String,
    pub amplitude: f64,
    pub clicks_per_session: usize,
    pub warmup_clicks: usize,
    sessions: Vec<SessionSpec>,
}

impl ExperimentDesign {
    pub fn sessions(&self) -> &[SessionSpec] {
        &self.sessions
    }

    pub fn analyzed_trials_per_worker(&self) -> usize {
        self.sessions.len() * (self.clicks_per_session - self.warmup_clicks)
    }
}

/// Cyclic pointing: A = 550, W and H in {30, 50, 80, 120}, angles
/// {0°, 30°, 60°, 90°} with outbound/return alternation, 17 clicks per
/// session with the first 3 dropped, 64 sessions -> 896 analyzed trials per
/// worker.
pub fn exp1_design() -> ExperimentDesign {
    let sizes = [30.0, 50.0, 80.0, 120.0];
    let angles = [0.0, 30.0, 60.0, 90.0];
    let clicks = 17;
    let mut sessions = Vec::new();
    for &w in &sizes {
        for &h in &sizes {
            for &theta in &angles {
                let trial_angles = (0..clicks)
                    .map(|i| if i % 2 == 0 { theta } else { theta + 180.0 })
                    .collect();
                sessions.push(SessionSpec {
                    width: w,
                    height: h,
                    trial_angles,
                });
            }
        }
    }
    ExperimentDesign {
        name: "exp1".into(),
        amplitude: 550.0,
        clicks_per_session: clicks,
        warmup_clicks: 3,
        sessions,
    }
}

/// Multi-directional ring pointing: A = 500, W and H in
/// {12, 18, 26, 36, 48, 62, 78}, 25 targets on a ring selected in the
/// cross-circle order (step 13), 26 selections per session with the first
/// dropped, 49 sessions -> 1225 analyzed trials per worker.
pub fn exp2_design() -> ExperimentDesign {
    let sizes = [12.0, 18.0, 26.0, 36.0, 48.0, 62.0, 78.0];
    let (n_targets, step) = (25usize, 13usize);
    let amplitude = 500.0;
    // chord between targets `step` apart equals the amplitude
    let radius = amplitude / (2.0 * (std::f64::consts::PI * step as f64 / n_targets as f64).sin());
    let pos = |k: usize| {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / n_targets as f64;
        // target 0 at the top of the window (screen y grows downward)
        (radius * phi.sin(), -radius * phi.cos())
    };
    let clicks = 26;
    let mut trial_angles = Vec::with_capacity(clicks);
    let mut current = 0usize;
    // the first selection is the warmup click on the top target
    trial_angles.push(0.0);
    for _ in 1..clicks {
        let next = (current + step) % n_targets;
        let (x0, y0) = pos(current);
        let (x1, y1) = pos(next);
        let angle = (-(y1 - y0)).atan2(x1 - x0).to_degrees().rem_euclid(360.0);
        trial_angles.push(angle);
        current = next;
    }
    let sessions = sizes
        .iter()
        .flat_map(|&w| {
            let trial_angles = trial_angles.clone();
            sizes.iter().map(move |&h| SessionSpec {
                width: w,
                height: h,
                trial_angles: trial_angles.clone(),
            })
        })
        .collect();
    ExperimentDesign {
        name: "exp2".into(),
        amplitude,
        clicks_per_session: clicks,
        warmup_clicks: 1,
        sessions,
    }
}

/// Ground truth driving the simulator. Movement times are lognormal and
/// exist only to exercise screening; they never feed the models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub sigma_model_x: SigmaModel,
    pub sigma_model_y: SigmaModel,
    /// Elongation of the endpoint ellipse along the movement axis; 1 keeps
    /// the isotropic per-axis model.
    #[serde(default = "default_anisotropy")]
    pub anisotropy: f64,
    #[serde(default = "default_mt_median")]
    pub mt_median_ms: f64,
    #[serde(default = "default_mt_sigma_log")]
    pub mt_sigma_log: f64,
    /// Fraction of trials whose movement time is inflated.
    #[serde(default)]
    pub outlier_rate: f64,
    #[serde(default = "default_outlier_inflation")]
    pub outlier_inflation: f64,
}

fn default_anisotropy() -> f64 {
    1.0
}
fn default_mt_median() -> f64 {
    900.0
}
fn default_mt_sigma_log() -> f64 {
    0.35
}
fn default_outlier_inflation() -> f64 {
    10.0
}

impl GroundTruth {
    pub fn new(sigma_model_x: SigmaModel, sigma_model_y: SigmaModel) -> Self {
        GroundTruth {
            sigma_model_x,
            sigma_model_y,
            anisotropy: default_anisotropy(),
            mt_median_ms: default_mt_median(),
            mt_sigma_log: default_mt_sigma_log(),
            outlier_rate: 0.0,
            outlier_inflation: default_outlier_inflation(),
        }
    }

    pub fn with_outliers(mut self, rate: f64, inflation: f64) -> Self {
        self.outlier_rate = rate;
        self.outlier_inflation = inflation;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.anisotropy < 1.0 {
            return Err(Error::Domain(format!(
                "anisotropy must be >= 1, got {}",
                self.anisotropy
            )));
        }
        if !(0.0..=1.0).contains(&self.outlier_rate) {
            return Err(Error::Domain(format!(
                "outlier rate must be in [0, 1], got {}",
                self.outlier_rate
            )));
        }
        Ok(())
    }
}

/// Draw one endpoint offset from a bivariate normal.
///
/// With `anisotropy` > 1 the covariance is built in the movement-axis frame:
/// along-axis SD scaled up by the anisotropy, cross-axis SD scaled down so
/// the geometric-mean SD sqrt(sigma_x * sigma_y) is preserved, then rotated
/// by the movement angle back to screen axes.
pub fn sample_endpoint(
    sigma_x: f64,
    sigma_y: f64,
    rho: f64,
    angle_deg: f64,
    anisotropy: f64,
    rng: &mut impl Rng,
) -> Result<(f64, f64)> {
    if !(sigma_x > 0.0 && sigma_y > 0.0) {
        return Err(Error::Domain(format!(
            "sigmas must be positive, got ({sigma_x}, {sigma_y})"
        )));
    }
    if rho.abs() >= 1.0 || rho.is_nan() {
        return Err(Error::Domain(format!("|rho| must be < 1, got {rho}")));
    }
    if anisotropy < 1.0 {
        return Err(Error::Domain(format!(
            "anisotropy must be >= 1, got {anisotropy}"
        )));
    }
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    if anisotropy == 1.0 {
        let dx = sigma_x * z1;
        let dy = sigma_y * (rho * z1 + (1.0 - rho * rho).sqrt() * z2);
        return Ok((dx, dy));
    }
    let s = (sigma_x * sigma_y).sqrt();
    let along = anisotropy * s * z1;
    let cross = (s / anisotropy) * (rho * z1 + (1.0 - rho * rho).sqrt() * z2);
    let theta = angle_deg.to_radians();
    let (sin, cos) = (theta.sin(), theta.cos());
    // movement direction (cos θ, −sin θ) in screen coordinates
    Ok((along * cos + cross * sin, -along * sin + cross * cos))
}

/// Generate the full trial log for `n_workers` simulated workers. Session
/// order is randomized per worker; warmup trials are excluded from the
/// output. Deterministic for a fixed seed, ordered (worker, session, trial).
pub fn generate_experiment(
    design: &ExperimentDesign,
    truth: &GroundTruth,
    n_workers: usize,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    if n_workers < 1 {
        return Err(Error::Config("n_workers must be >= 1".into()));
    }
    truth.validate()?;
    let mut out = Vec::with_capacity(n_workers * design.analyzed_trials_per_worker());
    let ln_median = truth.mt_median_ms.ln();
    for worker in 0..n_workers {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(worker as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        let worker_id = format!("w{worker:04}");

        let mut order: Vec<usize> = (0..design.sessions.len()).collect();
        rand::seq::SliceRandom::shuffle(&mut order[..], &mut rng);

        for (session_index, &session_id) in order.iter().enumerate() {
            let session = &design.sessions[session_id];
            let geom = TargetGeometry::new(session.width, session.height)?;
            let sx = truth.sigma_model_x.predict(&geom)?;
            let sy = truth.sigma_model_y.predict(&geom)?;
            for (click, &angle) in session.trial_angles.iter().enumerate() {
                let (dx, dy) = sample_endpoint(sx, sy, 0.0, angle, truth.anisotropy, &mut rng)?;
                let z: f64 = rng.sample(StandardNormal);
                let mut mt = (ln_median + truth.mt_sigma_log * z).exp();
                if truth.outlier_rate > 0.0 && rng.gen::<f64>() < truth.outlier_rate {
                    mt *= truth.outlier_inflation;
                }
                if click < design.warmup_clicks {
                    continue;
                }
                out.push(TrialRecord {
                    worker_id: worker_id.clone(),
                    session_index: session_index as u32,
                    width: session.width,
                    height: session.height,
                    angle_deg: angle.rem_euclid(360.0),
                    amplitude: design.amplitude,
                    trial_index: (click - design.warmup_clicks) as u32,
                    click_dx: dx,
                    click_dy: dy,
                    movement_time_ms: mt,
                    is_error: dx.abs() > session.width / 2.0 || dy.abs() > session.height / 2.0,
                });
            }
        }
    }
    Ok(out)
}

/// Monte Carlo error rate: fraction of endpoint draws landing outside the
/// centered width x height rectangle. The oracle for the closed-form and
/// quadrature error-rate routes; standard error ~ sqrt(p(1-p)/n).
pub fn monte_carlo_er(
    width: f64,
    height: f64,
    dist: &EndpointDistribution,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(width.is_finite() && width >= 0.0 && height.is_finite() && height >= 0.0) {
        return Err(Error::Domain(format!(
            "rectangle sizes must be >= 0, got ({width}, {height})"
        )));
    }
    if n_samples < 1 {
        return Err(Error::Config("n_samples must be >= 1".into()));
    }
    if !(dist.sigma_x > 0.0 && dist.sigma_y > 0.0 && dist.rho.abs() < 1.0) {
        return Err(Error::Domain("invalid endpoint distribution".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (half_w, half_h) = (width / 2.0, height / 2.0);
    let cross = (1.0 - dist.rho * dist.rho).sqrt();
    let mut outside = 0usize;
    for _ in 0..n_samples {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let x = dist.mu_x + dist.sigma_x * z1;
        let y = dist.mu_y + dist.sigma_y * (dist.rho * z1 + cross * z2);
        if x.abs() > half_w || y.abs() > half_h {
            outside += 1;
        }
    }
    Ok(outside as f64 / n_samples as f64)
}
