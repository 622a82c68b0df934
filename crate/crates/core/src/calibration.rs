//! Scalar collapse and MLE weight calibration.
//!
//! S = exp(alpha * lambda_xi + beta * (-H) + gamma * (-sigma_rho)) with the
//! simplex constraint handled by softmax reparameterization over an
//! unconstrained u in R^3. The fit maximizes mean binary cross-entropy
//! likelihood against hard defensibility labels (y = 1 iff L1/L2) by
//! gradient descent with backtracking line search from u = (0, 0, 0), which
//! makes the fit deterministic and starts at the documented equal-weight
//! fallback.

use crate::pds::PdsVector;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Clamp applied to S inside the loss only, so log(1 - S) stays finite.
const LOSS_CLAMP: f64 = 1e-12;
/// Clamp applied to the collapsed scalar itself.
const S_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("MISSING_COMPONENT: {0}")]
    MissingComponent(String),
    #[error("DEGENERATE_LABELS: both classes must be represented")]
    DegenerateLabels,
    #[error("TOO_FEW_SAMPLES: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("SCHEMA_MISMATCH: {0}")]
    SchemaMismatch(String),
    #[error("IO_FAILURE: {0}")]
    Io(#[from] std::io::Error),
}

/// Which entropy slot the model was fit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntropyComponent {
    #[serde(rename = "h_w")]
    HW,
    #[serde(rename = "h_kappa")]
    HKappa,
}

impl fmt::Display for EntropyComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntropyComponent::HW => write!(f, "h_w"),
            EntropyComponent::HKappa => write!(f, "h_kappa"),
        }
    }
}

/// Fitted collapse weights. alpha + beta + gamma = 1, all strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationModel {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub component: EntropyComponent,
    /// Mean binary cross-entropy at the optimum.
    pub loss: f64,
    pub n_samples: usize,
}

impl CalibrationModel {
    /// Equal-weight fallback used when no weights file is available.
    pub fn equal_weights(component: EntropyComponent) -> Self {
        CalibrationModel {
            alpha: 1.0 / 3.0,
            beta: 1.0 / 3.0,
            gamma: 1.0 / 3.0,
            component,
            loss: f64::NAN,
            n_samples: 0,
        }
    }

    fn check_invariants(&self) -> Result<(), CalibrationError> {
        let sum = self.alpha + self.beta + self.gamma;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CalibrationError::SchemaMismatch(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        if self.alpha <= 0.0 || self.beta <= 0.0 || self.gamma <= 0.0 {
            return Err(CalibrationError::SchemaMismatch(
                "weights must be strictly positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// Binary calibration target: 1 iff the audited level is L1 or L2.
pub type CalibrationLabel = bool;

/// The (lambda_xi, entropy, sigma_rho) triple a model consumes. Extracted
/// from a PdsVector according to the model's component selector.
fn components(
    v: &PdsVector,
    component: EntropyComponent,
) -> Result<(f64, f64, f64), CalibrationError> {
    let lambda = v
        .lambda_xi
        .ok_or_else(|| CalibrationError::MissingComponent("lambda_xi".to_string()))?;
    let h = match component {
        EntropyComponent::HW => v
            .h_w
            .ok_or_else(|| CalibrationError::MissingComponent("h_w".to_string()))?,
        EntropyComponent::HKappa => v
            .h_kappa
            .ok_or_else(|| CalibrationError::MissingComponent("h_kappa".to_string()))?,
    };
    let sigma = v
        .sigma_rho
        .ok_or_else(|| CalibrationError::MissingComponent("sigma_rho".to_string()))?;
    Ok((lambda, h, sigma))
}

/// Collapses a PDS vector to the scalar S in (0, 1].
pub fn scalar_collapse(v: &PdsVector, m: &CalibrationModel) -> Result<f64, CalibrationError> {
    let (lambda, h, sigma) = components(v, m.component)?;
    Ok(collapse_raw(lambda, h, sigma, m.alpha, m.beta, m.gamma))
}

/// Collapse from raw component values; exposed for replicate pipelines that
/// already carry the triple.
pub fn collapse_raw(lambda: f64, h: f64, sigma: f64, alpha: f64, beta: f64, gamma: f64) -> f64 {
    let z = alpha * lambda + beta * (-h) + gamma * (-sigma);
    z.exp().clamp(S_FLOOR, 1.0)
}

pub fn softmax3(u: [f64; 3]) -> [f64; 3] {
    let m = u[0].max(u[1]).max(u[2]);
    let e = [(u[0] - m).exp(), (u[1] - m).exp(), (u[2] - m).exp()];
    let s = e[0] + e[1] + e[2];
    [e[0] / s, e[1] / s, e[2] / s]
}

/// Mean binary cross-entropy of the collapse at weights w over prepared
/// samples (x = (lambda, -h, -sigma), y).
fn mean_loss(xs: &[[f64; 3]], ys: &[f64], w: [f64; 3]) -> f64 {
    let mut sum = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let z = w[0] * x[0] + w[1] * x[1] + w[2] * x[2];
        let s = z.exp().clamp(LOSS_CLAMP, 1.0 - LOSS_CLAMP);
        sum -= y * s.ln() + (1.0 - y) * (1.0 - s).ln();
    }
    sum / xs.len() as f64
}

/// Analytic gradient of the mean loss with respect to the unconstrained u.
/// The clamp makes the loss flat outside [LOSS_CLAMP, 1 - LOSS_CLAMP]; the
/// gradient is zero there, consistent with the piecewise loss.
pub fn loss_and_grad_u(xs: &[[f64; 3]], ys: &[f64], u: [f64; 3]) -> (f64, [f64; 3]) {
    let w = softmax3(u);
    let n = xs.len() as f64;
    let mut loss = 0.0;
    let mut gw = [0.0f64; 3];
    for (x, &y) in xs.iter().zip(ys) {
        let z = w[0] * x[0] + w[1] * x[1] + w[2] * x[2];
        let s_raw = z.exp();
        let s = s_raw.clamp(LOSS_CLAMP, 1.0 - LOSS_CLAMP);
        loss -= y * s.ln() + (1.0 - y) * (1.0 - s).ln();
        if s_raw > LOSS_CLAMP && s_raw < 1.0 - LOSS_CLAMP {
            // dLoss/dz = -y + (1 - y) * s / (1 - s)
            let dz = -y + (1.0 - y) * s / (1.0 - s);
            for k in 0..3 {
                gw[k] += dz * x[k];
            }
        }
    }
    loss /= n;
    for g in gw.iter_mut() {
        *g /= n;
    }
    // softmax Jacobian: dL/du_j = w_j * (gw_j - sum_k w_k gw_k)
    let dot = w[0] * gw[0] + w[1] * gw[1] + w[2] * gw[2];
    let gu = [
        w[0] * (gw[0] - dot),
        w[1] * (gw[1] - dot),
        w[2] * (gw[2] - dot),
    ];
    (loss, gu)
}

/// Mean loss of a weight triple over the usable samples, without fitting.
pub fn mean_loss_at(
    samples: &[(PdsVector, CalibrationLabel)],
    component: EntropyComponent,
    w: [f64; 3],
) -> Result<f64, CalibrationError> {
    let (xs, ys, _) = prepare(samples, component);
    if xs.is_empty() {
        return Err(CalibrationError::TooFewSamples { needed: 1, got: 0 });
    }
    Ok(mean_loss(&xs, &ys, w))
}

/// Outcome of a weight fit: the model plus attrition and convergence info.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: CalibrationModel,
    /// Samples excluded because a required component was missing.
    pub excluded: usize,
    pub converged: bool,
    pub iterations: usize,
}

fn prepare(
    samples: &[(PdsVector, CalibrationLabel)],
    component: EntropyComponent,
) -> (Vec<[f64; 3]>, Vec<f64>, usize) {
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    let mut excluded = 0;
    for (v, y) in samples {
        match components(v, component) {
            Ok((lambda, h, sigma)) => {
                xs.push([lambda, -h, -sigma]);
                ys.push(if *y { 1.0 } else { 0.0 });
            }
            Err(_) => excluded += 1,
        }
    }
    (xs, ys, excluded)
}

/// Fits (alpha, beta, gamma) by maximum likelihood. Deterministic: fixed
/// initialization u = (0,0,0), fixed summation order, no randomness. Returns
/// the best iterate with a warning flag if the iteration cap is hit.
pub fn fit_weights(
    samples: &[(PdsVector, CalibrationLabel)],
    component: EntropyComponent,
) -> Result<FitResult, CalibrationError> {
    let (xs, ys, excluded) = prepare(samples, component);
    if xs.len() < 2 {
        return Err(CalibrationError::TooFewSamples {
            needed: 2,
            got: xs.len(),
        });
    }
    let pos = ys.iter().filter(|&&y| y == 1.0).count();
    if pos == 0 || pos == ys.len() {
        return Err(CalibrationError::DegenerateLabels);
    }

    let mut u = [0.0f64; 3];
    let (mut loss, mut grad) = loss_and_grad_u(&xs, &ys, u);
    let max_iters = 5000;
    let mut converged = false;
    let mut iterations = 0;
    // the accepted step carries over between iterations so the line search
    // stays O(1) evaluations per iteration after warmup
    let mut step = 1.0f64;
    for iter in 0..max_iters {
        iterations = iter + 1;
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-9 {
            converged = true;
            break;
        }
        // backtracking line search (Armijo)
        step = (step * 2.0).min(1e6);
        let mut accepted = false;
        for _ in 0..60 {
            let cand = [
                u[0] - step * grad[0],
                u[1] - step * grad[1],
                u[2] - step * grad[2],
            ];
            let cand_loss = mean_loss(&xs, &ys, softmax3(cand));
            if cand_loss <= loss - 1e-4 * step * gnorm * gnorm {
                let drop = loss - cand_loss;
                u = cand;
                loss = cand_loss;
                accepted = true;
                if drop < 1e-14 {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            converged = true; // no descent direction at machine precision
            break;
        }
        if converged {
            break;
        }
        let (l, g) = loss_and_grad_u(&xs, &ys, u);
        loss = l;
        grad = g;
    }

    let w = softmax3(u);
    Ok(FitResult {
        model: CalibrationModel {
            alpha: w[0],
            beta: w[1],
            gamma: w[2],
            component,
            loss,
            n_samples: xs.len(),
        },
        excluded,
        converged,
        iterations,
    })
}

/// Expected calibration error under equal-frequency binning: sort by S,
/// split into B contiguous groups whose sizes differ by at most one, and
/// average |mean S - mean y| weighted by bin size.
pub fn compute_ece(scores: &[(f64, CalibrationLabel)], bins: usize) -> Result<f64, CalibrationError> {
    let n = scores.len();
    if n < bins || bins == 0 {
        return Err(CalibrationError::TooFewSamples {
            needed: bins,
            got: n,
        });
    }
    let mut sorted: Vec<(f64, f64)> = scores
        .iter()
        .map(|(s, y)| (*s, if *y { 1.0 } else { 0.0 }))
        .collect();
    // total order so the result is invariant to input permutation even with ties
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("scores must not be NaN"));

    let base = n / bins;
    let extra = n % bins;
    let mut ece = 0.0;
    let mut idx = 0;
    for b in 0..bins {
        let size = base + usize::from(b < extra);
        let chunk = &sorted[idx..idx + size];
        idx += size;
        let mean_s: f64 = chunk.iter().map(|(s, _)| s).sum::<f64>() / size as f64;
        let mean_y: f64 = chunk.iter().map(|(_, y)| y).sum::<f64>() / size as f64;
        ece += (size as f64 / n as f64) * (mean_s - mean_y).abs();
    }
    Ok(ece)
}

/// Per-bin reliability rows (equal-frequency), for diagram-style reporting.
#[derive(Debug, Clone, Serialize)]
pub struct ReliabilityBin {
    pub count: usize,
    pub mean_score: f64,
    pub empirical_rate: f64,
}

pub fn reliability_bins(
    scores: &[(f64, CalibrationLabel)],
    bins: usize,
) -> Result<Vec<ReliabilityBin>, CalibrationError> {
    let n = scores.len();
    if n < bins || bins == 0 {
        return Err(CalibrationError::TooFewSamples {
            needed: bins,
            got: n,
        });
    }
    let mut sorted: Vec<(f64, f64)> = scores
        .iter()
        .map(|(s, y)| (*s, if *y { 1.0 } else { 0.0 }))
        .collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("scores must not be NaN"));
    let base = n / bins;
    let extra = n % bins;
    let mut out = Vec::with_capacity(bins);
    let mut idx = 0;
    for b in 0..bins {
        let size = base + usize::from(b < extra);
        let chunk = &sorted[idx..idx + size];
        idx += size;
        out.push(ReliabilityBin {
            count: size,
            mean_score: chunk.iter().map(|(s, _)| s).sum::<f64>() / size as f64,
            empirical_rate: chunk.iter().map(|(_, y)| y).sum::<f64>() / size as f64,
        });
    }
    Ok(out)
}

/// Writes the weights file: a single object with keys exactly
/// alpha, beta, gamma, component, loss, n_samples.
pub fn save_weights(m: &CalibrationModel, path: &Path) -> Result<(), CalibrationError> {
    m.check_invariants()?;
    let json = serde_json::to_string_pretty(m)
        .map_err(|e| CalibrationError::SchemaMismatch(e.to_string()))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<CalibrationModel, CalibrationError> {
    let text = std::fs::read_to_string(path)?;
    let m: CalibrationModel =
        serde_json::from_str(&text).map_err(|e| CalibrationError::SchemaMismatch(e.to_string()))?;
    m.check_invariants()?;
    Ok(m)
}

/// Loads weights, falling back to equal weights when the file is absent.
/// Returns the model and whether the fallback was taken.
pub fn load_weights_or_fallback(
    path: &Path,
    component: EntropyComponent,
) -> Result<(CalibrationModel, bool), CalibrationError> {
    if path.exists() {
        Ok((load_weights(path)?, false))
    } else {
        Ok((CalibrationModel::equal_weights(component), true))
    }
}
