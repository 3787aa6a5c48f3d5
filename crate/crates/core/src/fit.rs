//! Maximum probability space fitting.
//!
//! A fit starts from the coordinate-wise median with the mean absolute
//! deviation about it as the window. Each *migration* moves the center to the
//! mean of the points inside the window `center ± Δ`; after the migrations of
//! a round, the *convergence* step recomputes `Δ` about the new center. The
//! loop stops as soon as the squared center shift is within `delta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{check_dim, mean_abs_deviation, FeatVec, ProbSpace};

/// Iteration limits and tolerance for [`fit_max_prob_space`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdlConfig {
    /// Convergence tolerance on the squared center shift.
    pub delta: f64,
    /// Migration steps per convergence round.
    pub max_migrations: u32,
    /// Number of convergence rounds.
    pub max_convergences: u32,
    /// Inner iteration cap per round.
    pub mu: u32,
    pub seed: u64,
}

impl Default for SdlConfig {
    fn default() -> Self {
        SdlConfig {
            delta: 1e-8,
            max_migrations: 3,
            max_convergences: 1,
            mu: 50,
            seed: 0,
        }
    }
}

impl SdlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "delta must be positive and finite, got {}",
                self.delta
            )));
        }
        for (name, v) in [
            ("max_migrations", self.max_migrations),
            ("max_convergences", self.max_convergences),
            ("mu", self.mu),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    /// Upper bound on the number of center updates in one fit.
    pub fn iteration_cap(&self) -> usize {
        self.max_migrations as usize * self.max_convergences as usize * self.mu as usize
    }
}

/// Diagnostics for a single fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    pub iterations: usize,
    /// Initial center followed by the center after every migration.
    pub center_history: Vec<FeatVec>,
    /// Whether the `delta` test fired before the caps ran out.
    pub converged: bool,
}

/// True iff the squared Euclidean distance between the two centers is at most
/// `delta`.
pub fn has_converged(a_prev: &[f64], a_next: &[f64], delta: f64) -> Result<bool> {
    check_dim(a_prev.len(), a_next.len())?;
    Ok(squared_shift(a_prev, a_next) <= delta)
}

fn squared_shift(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn coordinate_median(rows: &[&[f64]], dim: usize) -> Vec<f64> {
    let n = rows.len();
    let mut column = vec![0.0; n];
    (0..dim)
        .map(|j| {
            for (slot, row) in column.iter_mut().zip(rows) {
                *slot = row[j];
            }
            let mid = n / 2;
            let (lower, &mut upper, _) = column.select_nth_unstable_by(mid, f64::total_cmp);
            if n % 2 == 1 {
                upper
            } else {
                let below = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                0.5 * (below + upper)
            }
        })
        .collect()
}

fn mean(rows: &[&[f64]], dim: usize) -> Vec<f64> {
    let mut acc = vec![0.0; dim];
    for row in rows {
        acc.iter_mut().zip(*row).for_each(|(a, x)| *a += x);
    }
    let n = rows.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Mean of the rows inside the box `center ± scale`, or the global mean when
/// the box is empty.
fn windowed_mean(rows: &[&[f64]], center: &[f64], scale: &[f64]) -> Vec<f64> {
    let dim = center.len();
    let mut acc = vec![0.0; dim];
    let mut inside = 0usize;
    for row in rows {
        let within = row
            .iter()
            .zip(center)
            .zip(scale)
            .all(|((x, c), s)| (x - c).abs() <= *s);
        if within {
            acc.iter_mut().zip(*row).for_each(|(a, x)| *a += x);
            inside += 1;
        }
    }
    if inside == 0 {
        return mean(rows, dim);
    }
    let n = inside as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Fits over borrowed rows; callers guarantee a uniform dimension.
pub(crate) fn fit_rows(rows: &[&[f64]], cfg: &SdlConfig) -> Result<(ProbSpace, FitTrace)> {
    let first = rows.first().ok_or(Error::EmptyRegion)?;
    let dim = first.len();

    let mut center = coordinate_median(rows, dim);
    let mut scale = mean_abs_deviation(rows.iter().copied(), &center);
    let mut history = vec![FeatVec::new(center.clone())?];
    let mut iterations = 0usize;
    let mut converged = false;

    let per_round = cfg.max_migrations.min(cfg.mu);
    for _ in 0..cfg.max_convergences {
        for _ in 0..per_round {
            let next = windowed_mean(rows, &center, &scale);
            iterations += 1;
            converged = squared_shift(&center, &next) <= cfg.delta;
            center = next;
            history.push(FeatVec::new(center.clone())?);
            if converged {
                break;
            }
        }
        scale = mean_abs_deviation(rows.iter().copied(), &center);
        if converged {
            break;
        }
    }

    let space = ProbSpace::new(FeatVec::new(center)?, scale, rows.len())?;
    Ok((
        space,
        FitTrace {
            iterations,
            center_history: history,
            converged,
        },
    ))
}

/// Fits the maximum probability space of `points`.
pub fn fit_max_prob_space(points: &[FeatVec], cfg: &SdlConfig) -> Result<(ProbSpace, FitTrace)> {
    cfg.validate()?;
    let first = points.first().ok_or(Error::EmptyRegion)?;
    for p in points {
        check_dim(first.dim(), p.dim())?;
    }
    let rows: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
    fit_rows(&rows, cfg)
}
