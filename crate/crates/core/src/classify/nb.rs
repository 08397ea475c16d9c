use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Class;

/// Laplace smoothing used unless configured otherwise.
pub const DEFAULT_ALPHA: f64 = 1.0;
/// Joint log-likelihoods closer than this, relative to their magnitude,
/// count as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Multinomial naive Bayes over waveform counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub log_prior: [f64; 2],
    /// `log_likelihood[y][i]` = log P(waveform i | class y)
    #[serde(with = "crate::io::b64::pair")]
    pub log_likelihood: [Vec<f64>; 2],
    pub alpha: f64,
}

impl NbModel {
    pub fn n_features(&self) -> usize {
        self.log_likelihood[0].len()
    }

    /// Unnormalized log posterior of each class.
    pub fn joint_log_likelihood(&self, counts: &[u32]) -> Result<[f64; 2]> {
        if counts.len() != self.n_features() {
            return Err(Error::Dimension(format!(
                "{} counts for a model over {} waveforms",
                counts.len(),
                self.n_features()
            )));
        }
        let score = |y: usize| {
            self.log_prior[y]
                + counts
                    .iter()
                    .zip(&self.log_likelihood[y])
                    .map(|(&c, l)| c as f64 * l)
                    .sum::<f64>()
        };
        Ok([score(0), score(1)])
    }
}

pub fn nb_fit(counts: &[&[u32]], labels: &[Class], alpha: f64) -> Result<NbModel> {
    if counts.len() != labels.len() {
        return Err(Error::Dimension("counts and labels differ in length".into()));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Parameter(format!("smoothing alpha must be positive, got {alpha}")));
    }
    let dim = counts.first().map_or(0, |c| c.len());
    let mut n_class = [0usize; 2];
    let mut totals = [vec![0.0f64; dim], vec![0.0f64; dim]];
    for (c, &y) in counts.iter().zip(labels) {
        if c.len() != dim {
            return Err(Error::Dimension("feature vectors of different lengths".into()));
        }
        n_class[y.index()] += 1;
        for (t, &v) in totals[y.index()].iter_mut().zip(c.iter()) {
            *t += v as f64;
        }
    }
    if n_class.contains(&0) {
        return Err(Error::Parameter("naive Bayes needs both classes in training".into()));
    }
    let n = counts.len() as f64;
    let log_likelihood = totals.map(|t| {
        let denom = dim as f64 * alpha + t.iter().sum::<f64>();
        t.iter().map(|v| ((alpha + v) / denom).ln()).collect::<Vec<_>>()
    });
    Ok(NbModel {
        log_prior: [(n_class[0] as f64 / n).ln(), (n_class[1] as f64 / n).ln()],
        log_likelihood,
        alpha,
    })
}

/// Maximum a posteriori class; equal posteriors give the interictal class.
pub fn nb_predict(model: &NbModel, counts: &[u32]) -> Result<Class> {
    let [s0, s1] = model.joint_log_likelihood(counts)?;
    let scale = s0.abs().max(s1.abs()).max(1.0);
    Ok(if s1 - s0 > TIE_TOLERANCE * scale { Class::Preictal } else { Class::Interictal })
}
