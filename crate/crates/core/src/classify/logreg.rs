//! L2-regularized logistic regression with an unpenalized intercept:
//!
//! `J(θ, η) = ½‖θ‖² + C · Σ_n ln(1 + exp(−ỹ_n (θᵀz_n + η)))`, `ỹ ∈ {−1, +1}`,
//!
//! minimized with damped Newton steps and a backtracking line search.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Class;

pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    #[serde(with = "crate::io::b64::vec")]
    pub theta: Vec<f64>,
    pub eta: f64,
    pub reg_c: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sign(y: Class) -> f64 {
    if y.is_positive() {
        1.0
    } else {
        -1.0
    }
}

fn margin(params: &[f64], z: &[f64]) -> f64 {
    let d = z.len();
    params[..d].iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + params[d]
}

/// `J` at `params = [θ…, η]`.
pub fn objective(params: &[f64], x: &[Vec<f64>], y: &[Class], reg_c: f64) -> f64 {
    let d = params.len() - 1;
    let penalty = 0.5 * params[..d].iter().map(|v| v * v).sum::<f64>();
    let loss: f64 = x
        .iter()
        .zip(y)
        .map(|(z, &l)| softplus(-sign(l) * margin(params, z)))
        .sum();
    penalty + reg_c * loss
}

/// `∇J` at `params = [θ…, η]`.
pub fn gradient(params: &[f64], x: &[Vec<f64>], y: &[Class], reg_c: f64) -> Vec<f64> {
    let d = params.len() - 1;
    let mut g = params.to_vec();
    g[d] = 0.0;
    for (z, &l) in x.iter().zip(y) {
        let s = sign(l);
        let w = -reg_c * s * sigmoid(-s * margin(params, z));
        for (gi, zi) in g[..d].iter_mut().zip(z) {
            *gi += w * zi;
        }
        g[d] += w;
    }
    g
}

fn hessian(params: &[f64], x: &[Vec<f64>], reg_c: f64) -> DMatrix<f64> {
    let d = params.len() - 1;
    let mut h = DMatrix::<f64>::zeros(d + 1, d + 1);
    for i in 0..d {
        h[(i, i)] = 1.0;
    }
    let mut aug = vec![0.0; d + 1];
    for z in x {
        let p = sigmoid(margin(params, z));
        let w = reg_c * p * (1.0 - p);
        if w == 0.0 {
            continue;
        }
        aug[..d].copy_from_slice(z);
        aug[d] = 1.0;
        for i in 0..=d {
            let wi = w * aug[i];
            if wi == 0.0 {
                continue;
            }
            for j in i..=d {
                h[(i, j)] += wi * aug[j];
            }
        }
    }
    h.fill_lower_triangle_with_upper_triangle();
    h
}

fn newton_direction(h: DMatrix<f64>, g: &[f64]) -> Option<DVector<f64>> {
    let rhs = -DVector::from_column_slice(g);
    let scale = h.diagonal().amax().max(1.0);
    let mut damping = 0.0;
    for _ in 0..12 {
        let mut m = h.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += damping;
        }
        if let Some(ch) = m.cholesky() {
            return Some(ch.solve(&rhs));
        }
        damping = if damping == 0.0 { 1e-10 * scale } else { damping * 100.0 };
    }
    None
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn logreg_fit(x: &[Vec<f64>], y: &[Class], reg_c: f64) -> Result<LogRegModel> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Dimension("features and labels must be non-empty and aligned".into()));
    }
    if !(reg_c > 0.0 && reg_c.is_finite()) {
        return Err(Error::Parameter(format!("regularization C must be positive, got {reg_c}")));
    }
    let d = x[0].len();
    if x.iter().any(|z| z.len() != d) {
        return Err(Error::Dimension("feature vectors of different lengths".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite feature value".into()));
    }
    if !y.contains(&Class::Interictal) || !y.contains(&Class::Preictal) {
        return Err(Error::Parameter("logistic regression needs both classes".into()));
    }

    let mut params = vec![0.0; d + 1];
    let mut f = objective(&params, x, y, reg_c);
    let mut g = gradient(&params, x, y, reg_c);
    let mut iterations = 0;
    while inf_norm(&g) > GRADIENT_TOLERANCE && iterations < MAX_ITERATIONS {
        iterations += 1;
        let dir = newton_direction(hessian(&params, x, reg_c), &g)
            .unwrap_or_else(|| -DVector::from_column_slice(&g));
        let slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        let (dir, slope) = if slope < 0.0 {
            (dir, slope)
        } else {
            let sd = -DVector::from_column_slice(&g);
            let s = -g.iter().map(|v| v * v).sum::<f64>();
            (sd, s)
        };
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = params.iter().zip(dir.iter()).map(|(p, d)| p + step * d).collect();
            let ft = objective(&trial, x, y, reg_c);
            if ft <= f + 1e-4 * step * slope {
                params = trial;
                f = ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        g = gradient(&params, x, y, reg_c);
        if !accepted {
            // no representable decrease left along the search direction
            break;
        }
    }
    if params.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("logistic regression diverged".into()));
    }
    let gradient_norm = inf_norm(&g);
    log::debug!("logreg C={reg_c}: {iterations} iterations, |grad|inf = {gradient_norm:.2e}");
    Ok(LogRegModel {
        eta: params[d],
        theta: params[..d].to_vec(),
        reg_c,
        iterations,
        gradient_norm,
    })
}

/// `(class, P(preictal))`; the class is preictal only when the probability
/// is strictly above one half.
pub fn logreg_predict(model: &LogRegModel, z: &[f64]) -> Result<(Class, f64)> {
    if z.len() != model.theta.len() {
        return Err(Error::Dimension(format!(
            "{} features for a model over {}",
            z.len(),
            model.theta.len()
        )));
    }
    let m = model.theta.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + model.eta;
    let p = sigmoid(m);
    Ok((if p > 0.5 { Class::Preictal } else { Class::Interictal }, p))
}
