//! Seeded Gaussian-mixture generator.

use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metric::FeatVec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub center: Vec<f64>,
    /// Per-dimension standard deviation.
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: Vec<MixtureComponent>,
    pub n: usize,
    pub seed: u64,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        let first = self
            .components
            .first()
            .ok_or_else(|| Error::InvalidSpec("no components".into()))?;
        let dim = first.center.len();
        if dim == 0 {
            return Err(Error::InvalidSpec("component center is empty".into()));
        }
        let mut total = 0.0;
        for (i, c) in self.components.iter().enumerate() {
            if !(c.weight > 0.0 && c.weight <= 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "component {i}: weight {} not in (0, 1]",
                    c.weight
                )));
            }
            if c.center.len() != dim || c.sigma.len() != dim {
                return Err(Error::InvalidSpec(format!(
                    "component {i}: center/sigma must both have dimension {dim}"
                )));
            }
            if c.center.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "component {i}: non-finite center"
                )));
            }
            if c.sigma.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                return Err(Error::InvalidSpec(format!(
                    "component {i}: sigma must be positive"
                )));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, |c| c.center.len())
    }
}

/// Parses `weight:c0,c1,...:s0,s1,...` components separated by `;`.
///
/// A single sigma value is broadcast to every dimension. The result still
/// needs `n` and `seed`, so it is a list of components rather than a spec.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentList(pub Vec<MixtureComponent>);

impl FromStr for ComponentList {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let numbers = |part: &str, what: &str| -> Result<Vec<f64>> {
            part.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidSpec(format!("bad {what} value `{x}`")))
                })
                .collect()
        };
        let comps = s
            .split(';')
            .filter(|c| !c.trim().is_empty())
            .map(|c| {
                let parts: Vec<&str> = c.split(':').collect();
                let [w, center, sigma] = parts.as_slice() else {
                    return Err(Error::InvalidSpec(format!(
                        "component `{c}` must look like weight:center:sigma"
                    )));
                };
                let weight = w
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidSpec(format!("bad weight `{w}`")))?;
                let center = numbers(center, "center")?;
                let mut sigma = numbers(sigma, "sigma")?;
                if sigma.len() == 1 && center.len() > 1 {
                    sigma = vec![sigma[0]; center.len()];
                }
                Ok(MixtureComponent {
                    weight,
                    center,
                    sigma,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if comps.is_empty() {
            return Err(Error::InvalidSpec("no components given".into()));
        }
        Ok(ComponentList(comps))
    }
}

/// Component sizes `round(n * weight)` by largest remainder; they sum to `n`.
fn component_sizes(n: usize, weights: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let assigned: usize = sizes.iter().sum();
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Draws `spec.n` labelled samples; deterministic for a given seed.
///
/// Component sizes are fixed by the weights (largest remainder) and the rows
/// are shuffled, so labels are interleaved.
pub fn generate_mixture(spec: &MixtureSpec) -> Result<Dataset> {
    spec.validate()?;
    if spec.n == 0 {
        return Err(Error::InvalidSpec("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let weights: Vec<f64> = spec.components.iter().map(|c| c.weight).collect();
    let mut labels: Vec<usize> = component_sizes(spec.n, &weights)
        .into_iter()
        .enumerate()
        .flat_map(|(i, size)| std::iter::repeat(i).take(size))
        .collect();
    labels.shuffle(&mut rng);
    let vectors = labels
        .iter()
        .map(|&label| {
            let comp = &spec.components[label];
            let values = comp
                .center
                .iter()
                .zip(&comp.sigma)
                .map(|(m, s)| {
                    let z: f64 = rng.sample(StandardNormal);
                    m + s * z
                })
                .collect();
            FeatVec::new(values)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(
        vectors,
        Some(labels),
        format!("mixture(seed={})", spec.seed),
    )
}
