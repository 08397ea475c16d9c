//! Shift-invariant spherical k-means.
//!
//! Each signal `x_n` (length `L`) is explained by one centroid `c_ν` (length
//! `P ≤ L`) at one shift `τ`, and the codebook minimizes
//! `Σ_n d(T_P(x_n, τ_n), c_{ν_n})` with `d` the cosine distance. Fitting
//! alternates an exhaustive assignment over centroids and shifts with a
//! centroid update from the aligned windows.

mod assign;

pub use assign::{assign_batch, assign_one, Assigner, Backend, SCREEN_TOLERANCE};

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{cosine_distance_raw, Assignment, Class, Codebook};

/// How aligned windows are averaged into a new centroid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentroidUpdate {
    /// Mean of the unit-normalized aligned windows; the exact minimizer of
    /// the cluster's summed cosine distance.
    #[default]
    NormalizedMean,
    /// Mean of the raw aligned windows, then normalized.
    RawMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SikmeansConfig {
    pub k: usize,
    pub p: usize,
    pub max_iter: usize,
    pub n_init: usize,
    pub seed: u64,
    pub backend: Backend,
    pub update: CentroidUpdate,
}

impl Default for SikmeansConfig {
    fn default() -> Self {
        SikmeansConfig {
            k: 8,
            p: 40,
            max_iter: 100,
            n_init: 3,
            seed: 0,
            backend: Backend::Fft,
            update: CentroidUpdate::NormalizedMean,
        }
    }
}

impl SikmeansConfig {
    pub fn validate(&self, n: usize, l: usize) -> Result<()> {
        if self.k == 0 || self.k > n {
            return Err(Error::Parameter(format!(
                "k = {} must be in 1..={n} (number of signals)",
                self.k
            )));
        }
        if self.p == 0 || self.p > l {
            return Err(Error::Parameter(format!(
                "P = {} must be in 1..={l} (signal length)",
                self.p
            )));
        }
        if self.max_iter == 0 || self.n_init == 0 {
            return Err(Error::Parameter("max_iter and n_init must be at least 1".into()));
        }
        Ok(())
    }
}

/// One restart of the alternating minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub seed: u64,
    /// Objective after each assignment pass.
    pub objective: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub codebook: Codebook,
    pub assignments: Vec<Assignment>,
    pub objective: f64,
    pub iterations_run: usize,
    pub restarts: Vec<RestartTrace>,
}

fn rows(signals: &ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    signals.outer_iter().map(|r| r.to_vec()).collect()
}

fn energy(w: &[f64]) -> f64 {
    w.iter().map(|v| v * v).sum()
}

/// Neumaier-compensated sum.
fn stable_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Picks `k` distinct non-silent signals at random and takes the highest
/// energy `P`-window of each (earliest on ties) as a centroid.
pub fn init_centroids(signals: ArrayView2<'_, f64>, k: usize, p: usize, seed: u64) -> Result<Codebook> {
    let (n, l) = signals.dim();
    if k == 0 || n < k {
        return Err(Error::Parameter(format!("cannot draw {k} centroids from {n} signals")));
    }
    if p == 0 || p > l {
        return Err(Error::Dimension(format!("window length {p} for signals of length {l}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut centroids = Array2::zeros((k, p));
    let mut filled = 0;
    for i in order {
        if filled == k {
            break;
        }
        let x = signals.row(i).to_vec();
        let (mut best_t, mut best_e) = (0, -1.0);
        for t in 0..=l - p {
            let e = energy(&x[t..t + p]);
            if e > best_e {
                (best_t, best_e) = (t, e);
            }
        }
        if best_e <= 0.0 {
            continue;
        }
        centroids
            .row_mut(filled)
            .assign(&ndarray::ArrayView1::from(&x[best_t..best_t + p]));
        filled += 1;
    }
    if filled < k {
        return Err(Error::Parameter(format!(
            "only {filled} non-silent signals available for {k} centroids"
        )));
    }
    Codebook::new(centroids, Class::Interictal)
}

/// Recomputes every centroid from its members' aligned windows. Empty (or
/// cancelled-out) clusters are re-seeded with the aligned window of the
/// signal farthest from its own centroid, first maximum wins.
pub fn update_centroids(
    signals: ArrayView2<'_, f64>,
    assignments: &[Assignment],
    k: usize,
    p: usize,
    rule: CentroidUpdate,
) -> Result<Codebook> {
    let (n, l) = signals.dim();
    if assignments.len() != n {
        return Err(Error::Dimension(format!(
            "{} assignments for {n} signals",
            assignments.len()
        )));
    }
    if k == 0 || p == 0 || p > l {
        return Err(Error::Parameter(format!("invalid codebook shape {k}x{p} for length {l}")));
    }
    let mut sums = Array2::<f64>::zeros((k, p));
    let x = rows(&signals);
    for (xi, a) in x.iter().zip(assignments) {
        if a.centroid >= k || a.shift > l - p {
            return Err(Error::Bounds(format!("assignment {a:?} outside {k} centroids / {l} samples")));
        }
        let w = &xi[a.shift..a.shift + p];
        let weight = match rule {
            CentroidUpdate::RawMean => 1.0,
            CentroidUpdate::NormalizedMean => {
                let e = energy(w);
                if e == 0.0 {
                    continue;
                }
                1.0 / e.sqrt()
            }
        };
        let mut row = sums.row_mut(a.centroid);
        for (s, v) in row.iter_mut().zip(w) {
            *s += weight * v;
        }
    }

    let mut reseed_order: Vec<usize> = (0..n).collect();
    reseed_order.sort_by(|&a, &b| {
        assignments[b]
            .distance
            .total_cmp(&assignments[a].distance)
            .then(a.cmp(&b))
    });
    let mut reseed = reseed_order
        .into_iter()
        .filter(|&i| energy(&x[i][assignments[i].shift..assignments[i].shift + p]) > 0.0);

    for j in 0..k {
        let norm = energy(sums.row(j).as_slice().expect("contiguous")).sqrt();
        if norm > 0.0 && norm.is_finite() {
            continue;
        }
        let mut row = sums.row_mut(j);
        match reseed.next() {
            Some(i) => {
                let s = assignments[i].shift;
                row.assign(&ndarray::ArrayView1::from(&x[i][s..s + p]));
            }
            None => {
                row.fill(0.0);
                row[j % p] = 1.0;
            }
        }
    }
    Codebook::new(sums, Class::Interictal)
}

/// `Σ_n d(T_P(x_n, τ_n), c_{ν_n})`.
pub fn objective(signals: ArrayView2<'_, f64>, codebook: &Codebook, assignments: &[Assignment]) -> Result<f64> {
    let (n, l) = signals.dim();
    if assignments.len() != n {
        return Err(Error::Dimension(format!("{} assignments for {n} signals", assignments.len())));
    }
    let p = codebook.p();
    if p > l {
        return Err(Error::Dimension(format!("centroid length {p} exceeds signal length {l}")));
    }
    let mut terms = Vec::with_capacity(n);
    for (x, a) in signals.outer_iter().zip(assignments) {
        if a.centroid >= codebook.k() || a.shift > l - p {
            return Err(Error::Bounds(format!("assignment {a:?} out of range")));
        }
        let x = x.to_vec();
        terms.push(cosine_distance_raw(&x[a.shift..a.shift + p], codebook.centroid(a.centroid)));
    }
    Ok(stable_sum(terms.into_iter()))
}

fn same_assignment(a: &[Assignment], b: &[Assignment]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.centroid == y.centroid && x.shift == y.shift)
}

struct Restart {
    codebook: Codebook,
    assignments: Vec<Assignment>,
    objective: f64,
    iterations: usize,
    trace: Vec<f64>,
}

fn run_restart(signals: ArrayView2<'_, f64>, cfg: &SikmeansConfig, seed: u64) -> Result<Restart> {
    let mut codebook = init_centroids(signals, cfg.k, cfg.p, seed)?;
    let mut previous: Option<Vec<Assignment>> = None;
    let mut trace = Vec::new();
    for it in 1..=cfg.max_iter {
        let assignments = assign_batch(signals, &codebook, cfg.backend)?;
        let obj = stable_sum(assignments.iter().map(|a| a.distance));
        trace.push(obj);
        log::trace!("seed {seed} iteration {it}: objective {obj:.6}");
        let converged = previous.as_deref().is_some_and(|p| same_assignment(p, &assignments));
        if converged || it == cfg.max_iter {
            return Ok(Restart {
                codebook,
                assignments,
                objective: obj,
                iterations: it,
                trace,
            });
        }
        codebook = update_centroids(signals, &assignments, cfg.k, cfg.p, cfg.update)?;
        previous = Some(assignments);
    }
    unreachable!("max_iter >= 1 is validated")
}

/// Fits a codebook to the rows of an `N × L` matrix, keeping the restart
/// with the smallest objective (earliest on ties).
pub fn fit(signals: ArrayView2<'_, f64>, cfg: &SikmeansConfig, class: Class) -> Result<FitResult> {
    let (n, l) = signals.dim();
    cfg.validate(n, l)?;
    let mut best: Option<Restart> = None;
    let mut restarts = Vec::with_capacity(cfg.n_init);
    for i in 0..cfg.n_init {
        let seed = cfg.seed.wrapping_add(i as u64);
        let r = run_restart(signals, cfg, seed)?;
        restarts.push(RestartTrace {
            seed,
            objective: r.trace.clone(),
        });
        if best.as_ref().is_none_or(|b| r.objective < b.objective) {
            best = Some(r);
        }
    }
    let best = best.expect("n_init >= 1 is validated");
    Ok(FitResult {
        codebook: best.codebook.with_class(class),
        assignments: best.assignments,
        objective: best.objective,
        iterations_run: best.iterations,
        restarts,
    })
}
