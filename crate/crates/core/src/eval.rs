//! Clustering quality metrics, a k-means baseline, and the dimension sweep.

use std::collections::HashMap;
use std::hash::Hash;
use std::io::Write;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{generate_mixture, MixtureComponent, MixtureSpec};
use crate::engine::{cluster, EngineConfig};
use crate::error::{Error, Result};
use crate::metric::{check_dim, point_space_distance, space_space_distance, FeatVec};

fn comb2(n: u64) -> f64 {
    (n as f64) * (n.saturating_sub(1) as f64) / 2.0
}

/// Joint, predicted, and true label counts.
type Contingency<P, T> = (HashMap<(P, T), u64>, HashMap<P, u64>, HashMap<T, u64>);

fn contingency<P, T>(pred: &[P], truth: &[T]) -> Contingency<P, T>
where
    P: Hash + Eq + Copy,
    T: Hash + Eq + Copy,
{
    let mut cells = HashMap::new();
    let mut rows = HashMap::new();
    let mut cols = HashMap::new();
    for (&p, &t) in pred.iter().zip(truth) {
        *cells.entry((p, t)).or_insert(0) += 1;
        *rows.entry(p).or_insert(0) += 1;
        *cols.entry(t).or_insert(0) += 1;
    }
    (cells, rows, cols)
}

/// Adjusted Rand index from the pair-counting contingency table.
///
/// Returns 1.0 when both labelings are the same trivial partition (the
/// chance-corrected ratio is 0/0 there).
pub fn adjusted_rand_index<P, T>(pred: &[P], truth: &[T]) -> Result<f64>
where
    P: Hash + Eq + Copy,
    T: Hash + Eq + Copy,
{
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.len() < 2 {
        return Err(Error::InsufficientInput(
            "ARI needs at least 2 labels".into(),
        ));
    }
    let (cells, rows, cols) = contingency(pred, truth);
    let index: f64 = cells.values().map(|&c| comb2(c)).sum();
    let sum_rows: f64 = rows.values().map(|&c| comb2(c)).sum();
    let sum_cols: f64 = cols.values().map(|&c| comb2(c)).sum();
    let expected = sum_rows * sum_cols / comb2(pred.len() as u64);
    let max = 0.5 * (sum_rows + sum_cols);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Fraction of points whose predicted cluster's majority class matches them.
///
/// Singleton clusters inflate purity to 1.
pub fn purity<P, T>(pred: &[P], truth: &[T]) -> Result<f64>
where
    P: Hash + Eq + Copy,
    T: Hash + Eq + Copy,
{
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InsufficientInput(
            "purity needs at least 1 label".into(),
        ));
    }
    let (cells, _, _) = contingency(pred, truth);
    let mut best: HashMap<P, u64> = HashMap::new();
    for (&(p, _), &c) in &cells {
        let e = best.entry(p).or_insert(0);
        *e = (*e).max(c);
    }
    Ok(best.values().sum::<u64>() as f64 / pred.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Sum of squared distances after each assignment step.
    pub cost_history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Plain Lloyd iterations from `k` distinct, uniformly chosen data points.
///
/// Ties go to the lowest center index; a center that loses all its points
/// stays where it was.
pub fn kmeans_baseline(
    points: &[FeatVec],
    k: usize,
    seed: u64,
    iters: usize,
) -> Result<KMeansResult> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidK { k, n: points.len() });
    }
    let dim = points[0].dim();
    for p in points {
        check_dim(dim, p.dim())?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = index::sample(&mut rng, points.len(), k).into_vec();
    picks.sort_unstable();
    let mut centers: Vec<Vec<f64>> = picks.iter().map(|&i| points[i].to_vec()).collect();
    let mut labels = vec![0usize; points.len()];
    let mut cost_history = Vec::new();

    for _ in 0..iters.max(1) {
        let mut cost = 0.0;
        let mut changed = false;
        for (l, p) in labels.iter_mut().zip(points) {
            let (best, d) = centers
                .iter()
                .enumerate()
                .map(|(c, center)| (c, sq_dist(p, center)))
                .fold(
                    (0, f64::INFINITY),
                    |acc, x| if x.1 < acc.1 { x } else { acc },
                );
            cost += d;
            if *l != best {
                changed = true;
                *l = best;
            }
        }
        cost_history.push(cost);
        if !changed && cost_history.len() > 1 {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&l, p) in labels.iter().zip(points) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p.iter()).for_each(|(s, x)| *s += x);
        }
        for ((c, s), n) in centers.iter_mut().zip(sums).zip(counts) {
            if n > 0 {
                *c = s.into_iter().map(|x| x / n as f64).collect();
            }
        }
    }
    Ok(KMeansResult {
        labels,
        centers,
        cost_history,
    })
}

/// Summary of a clustering against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub ari: f64,
    pub purity: f64,
    pub cluster_count: usize,
    pub sweep: Vec<SweepRow>,
}

impl EvalReport {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        let cluster_count = pred.iter().collect::<std::collections::HashSet<_>>().len();
        Ok(EvalReport {
            ari: adjusted_rand_index(pred, truth)?,
            purity: purity(pred, truth)?,
            cluster_count,
            sweep: Vec::new(),
        })
    }
}

/// Two-component mixture replicated across every swept dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepTemplate {
    pub points_per_component: usize,
    pub sigma: f64,
    /// Center separation per dimension, in units of `sigma`.
    pub separation: f64,
    pub seed: u64,
}

impl Default for SweepTemplate {
    fn default() -> Self {
        SweepTemplate {
            points_per_component: 500,
            sigma: 1.0,
            separation: 6.0,
            seed: 0,
        }
    }
}

impl SweepTemplate {
    pub fn spec(&self, dim: usize) -> MixtureSpec {
        let comp = |offset: f64| MixtureComponent {
            weight: 0.5,
            center: vec![offset; dim],
            sigma: vec![self.sigma; dim],
        };
        MixtureSpec {
            components: vec![comp(0.0), comp(self.separation * self.sigma)],
            n: 2 * self.points_per_component,
            seed: self.seed.wrapping_add(dim as u64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub dim: usize,
    pub cluster_count: usize,
    /// Share of points at distance 0 from their own cluster's space.
    pub zero_fraction: f64,
    /// Smallest space distance between two clusters; `None` with one cluster.
    pub min_between_distance: Option<f64>,
    pub ari: f64,
}

/// Clusters a freshly generated mixture at each dimension. Rows come back in
/// `dims` order.
pub fn dimension_sweep(
    dims: &[usize],
    template: &SweepTemplate,
    cfg: &EngineConfig,
) -> Result<Vec<SweepRow>> {
    if dims.is_empty() {
        return Err(Error::InsufficientInput("no dimensions to sweep".into()));
    }
    dims.par_iter()
        .map(|&dim| {
            let data = generate_mixture(&template.spec(dim))?;
            let model = cluster(&data.vectors, cfg)?;
            let mut inside = 0usize;
            for r in &model.regions {
                let s = r.fitted()?;
                for &m in &r.members {
                    if point_space_distance(&data.vectors[m], s)? == 0.0 {
                        inside += 1;
                    }
                }
            }
            let mut min_between: Option<f64> = None;
            for (i, a) in model.regions.iter().enumerate() {
                for b in &model.regions[i + 1..] {
                    let d = space_space_distance(a.fitted()?, b.fitted()?)?;
                    min_between = Some(min_between.map_or(d, |m| m.min(d)));
                }
            }
            let truth = data.labels.as_deref().unwrap_or_default();
            Ok(SweepRow {
                dim,
                cluster_count: model.cluster_count(),
                zero_fraction: inside as f64 / data.len() as f64,
                min_between_distance: min_between,
                ari: adjusted_rand_index(&model.labels(), truth)?,
            })
        })
        .collect()
}

/// Writes `dim,zero_fraction,min_between_distance` rows (empty distance for a
/// single cluster).
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "dim,zero_fraction,min_between_distance,cluster_count,ari"
    )?;
    for r in rows {
        let d = r
            .min_between_distance
            .map(|d| format!("{d:?}"))
            .unwrap_or_default();
        writeln!(
            out,
            "{},{:?},{},{},{:?}",
            r.dim, r.zero_fraction, d, r.cluster_count, r.ari
        )?;
    }
    Ok(())
}
