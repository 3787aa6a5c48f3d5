//! Hierarchical split / exchange / merge clustering.
//!
//! One level of the pipeline fits every region, sweeps boundary exchanges
//! over neighbouring regions (ordered by the modulus of their centers), merges
//! regions whose spaces overlap, and then either stops or halves every region
//! by vector norm. The first level starts from a two-way modulus partition and
//! each later level at most doubles the region count.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::fingerprint;
use crate::error::{Error, Result};
use crate::fit::{fit_rows, SdlConfig};
use crate::metric::{
    check_dim, point_space_distance, point_space_distance_unchecked, space_overlap_gap,
    space_space_distance, FeatVec, ProbSpace,
};

/// A cluster in progress: member indices into the dataset plus the space
/// fitted to them.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: usize,
    /// Dataset indices, kept sorted ascending.
    pub members: Vec<usize>,
    pub space: Option<ProbSpace>,
}

impl Region {
    pub fn new(id: usize, mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        Region {
            id,
            members,
            space: None,
        }
    }

    pub fn fitted(&self) -> Result<&ProbSpace> {
        self.space.as_ref().ok_or(Error::NotFitted(self.id))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Refits the region's space from its current members.
    pub fn refit(&mut self, data: &[FeatVec], cfg: &SdlConfig) -> Result<()> {
        let rows: Vec<&[f64]> = self.members.iter().map(|&i| data[i].as_slice()).collect();
        let (space, _) = fit_rows(&rows, cfg)?;
        self.space = Some(space);
        Ok(())
    }
}

/// Stopping and merging parameters around the per-region fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Stop once the cluster count is at most this.
    pub target_k: Option<usize>,
    /// Maximum number of levels; level `n` holds at most `2^n` regions.
    pub max_levels: u32,
    pub merge_enabled: bool,
    pub sdl: SdlConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            target_k: None,
            max_levels: 6,
            merge_enabled: true,
            sdl: SdlConfig::default(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_levels == 0 {
            return Err(Error::InvalidConfig("max_levels must be at least 1".into()));
        }
        if self.target_k == Some(0) {
            return Err(Error::InvalidConfig("target_k must be at least 1".into()));
        }
        self.sdl.validate()
    }
}

/// One absorbed region in a merge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub level: u32,
    pub survivor: usize,
    pub absorbed: usize,
    /// Clamped space distance between survivor and absorbed before merging.
    pub distance: f64,
}

/// Result of [`cluster`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub regions: Vec<Region>,
    pub dim: usize,
    pub merge_log: Vec<MergeEvent>,
    pub config: EngineConfig,
    pub dataset_fingerprint: String,
}

impl ClusterModel {
    pub fn cluster_count(&self) -> usize {
        self.regions.len()
    }

    /// Region position of every dataset index.
    pub fn labels(&self) -> Vec<usize> {
        let n = self.regions.iter().map(Region::len).sum();
        let mut labels = vec![usize::MAX; n];
        for (pos, r) in self.regions.iter().enumerate() {
            for &m in &r.members {
                if m < n {
                    labels[m] = pos;
                }
            }
        }
        labels
    }

    /// Checks id uniqueness, fitted spaces of dimension `dim`, and that the
    /// members form a partition of `0..n`.
    pub fn validate(&self) -> Result<()> {
        let n: usize = self.regions.iter().map(Region::len).sum();
        let mut seen = vec![false; n];
        let mut ids = std::collections::HashSet::new();
        for (pos, r) in self.regions.iter().enumerate() {
            let at = |field: &str| format!("regions[{pos}].{field}");
            if !ids.insert(r.id) {
                return Err(Error::Format {
                    path: at("id"),
                    message: format!("duplicate region id {}", r.id),
                });
            }
            let space = r.fitted().map_err(|e| Error::Format {
                path: at("center"),
                message: e.to_string(),
            })?;
            if space.dim() != self.dim {
                return Err(Error::Format {
                    path: at("center"),
                    message: format!("dimension {} != model dim {}", space.dim(), self.dim),
                });
            }
            if space.count() != r.len() {
                return Err(Error::Format {
                    path: at("count"),
                    message: format!("count {} != {} members", space.count(), r.len()),
                });
            }
            for &m in &r.members {
                if m >= n || seen[m] {
                    return Err(Error::Format {
                        path: at("members"),
                        message: format!("index {m} is out of range or assigned twice"),
                    });
                }
                seen[m] = true;
            }
        }
        Ok(())
    }
}

/// Sorts dataset indices by vector norm, ties broken by index.
fn norm_order(data: &[FeatVec], members: &mut [usize]) {
    members.sort_by(|&a, &b| data[a].norm().total_cmp(&data[b].norm()).then(a.cmp(&b)));
}

/// Splits the dataset into `k` contiguous norm-quantile blocks whose sizes
/// differ by at most one (larger blocks first).
pub fn initial_partition(points: &[FeatVec], k: usize) -> Result<Vec<Region>> {
    if points.is_empty() {
        return Err(Error::EmptyInput("no points to partition"));
    }
    if k == 0 || k > points.len() {
        return Err(Error::InvalidK { k, n: points.len() });
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    norm_order(points, &mut order);

    let (base, extra) = (points.len() / k, points.len() % k);
    let mut regions = Vec::with_capacity(k);
    let mut start = 0;
    for id in 0..k {
        let size = base + usize::from(id < extra);
        regions.push(Region::new(id, order[start..start + size].to_vec()));
        start += size;
    }
    Ok(regions)
}

/// Outcome of a boundary exchange.
#[derive(Debug, Clone, PartialEq)]
pub enum Exchange {
    Kept(Region, Region),
    /// One side emptied out; the survivor keeps every member.
    Dissolved(Region),
}

/// Reassigns every member of `a ∪ b` to the nearer space (ties go to `b`) and
/// refits both sides.
pub fn boundary_exchange(
    data: &[FeatVec],
    a: &Region,
    b: &Region,
    cfg: &SdlConfig,
) -> Result<Exchange> {
    let sa = a.fitted()?;
    let sb = b.fitted()?;
    let mut to_a = Vec::new();
    let mut to_b = Vec::new();
    for &m in a.members.iter().chain(&b.members) {
        let v = data[m].as_slice();
        if point_space_distance(v, sa)? < point_space_distance(v, sb)? {
            to_a.push(m);
        } else {
            to_b.push(m);
        }
    }
    let unchanged = {
        let mut ta = to_a.clone();
        ta.sort_unstable();
        ta == a.members && to_b.len() == b.members.len()
    };
    if unchanged {
        return Ok(Exchange::Kept(a.clone(), b.clone()));
    }
    if to_a.is_empty() || to_b.is_empty() {
        let survivor_id = if to_a.is_empty() { b.id } else { a.id };
        let mut all = to_a;
        all.extend(to_b);
        let mut r = Region::new(survivor_id, all);
        r.refit(data, cfg)?;
        return Ok(Exchange::Dissolved(r));
    }
    let mut na = Region::new(a.id, to_a);
    let mut nb = Region::new(b.id, to_b);
    na.refit(data, cfg)?;
    nb.refit(data, cfg)?;
    Ok(Exchange::Kept(na, nb))
}

/// Halves every region by vector norm (the lower half takes the odd member).
/// Single-member regions carry forward. Children are unfitted and ids are
/// renumbered by position.
pub fn split_all(data: &[FeatVec], regions: &[Region]) -> Vec<Region> {
    let mut out = Vec::with_capacity(regions.len() * 2);
    for r in regions {
        if r.len() < 2 {
            out.push(r.clone());
            continue;
        }
        let mut order = r.members.clone();
        norm_order(data, &mut order);
        let half = order.len().div_ceil(2);
        out.push(Region::new(0, order[..half].to_vec()));
        out.push(Region::new(0, order[half..].to_vec()));
    }
    for (i, r) in out.iter_mut().enumerate() {
        r.id = i;
    }
    out
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Merges every connected component of overlapping spaces into one region,
/// refitting the result, until no overlapping pair remains.
///
/// Two spaces overlap when [`space_overlap_gap`] is non-positive. The
/// survivor of a component is its smallest id and takes the position of the
/// first member region.
pub fn merge_overlapping(
    data: &[FeatVec],
    regions: Vec<Region>,
    cfg: &SdlConfig,
    level: u32,
) -> Result<(Vec<Region>, Vec<MergeEvent>)> {
    let mut regions = regions;
    let mut log = Vec::new();
    loop {
        let k = regions.len();
        let mut parent: Vec<usize> = (0..k).collect();
        let mut any = false;
        for (i, ri) in regions.iter().enumerate() {
            let si = ri.fitted()?;
            for (j, rj) in regions.iter().enumerate().skip(i + 1) {
                if space_overlap_gap(si, rj.fitted()?)? <= 0.0 {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                    any = true;
                }
            }
        }
        if !any {
            return Ok((regions, log));
        }

        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
        for i in 0..k {
            let root = find(&mut parent, i);
            groups[root].push(i);
        }
        let mut next = Vec::new();
        let mut to_fit = Vec::new();
        for group in groups.into_iter().filter(|g| !g.is_empty()) {
            if group.len() == 1 {
                next.push(regions[group[0]].clone());
                continue;
            }
            let survivor = group
                .iter()
                .copied()
                .min_by_key(|&i| regions[i].id)
                .unwrap_or(group[0]);
            let s_space = regions[survivor].fitted()?;
            let mut members = Vec::new();
            for &i in &group {
                members.extend_from_slice(&regions[i].members);
                if i != survivor {
                    log.push(MergeEvent {
                        level,
                        survivor: regions[survivor].id,
                        absorbed: regions[i].id,
                        distance: space_space_distance(s_space, regions[i].fitted()?)?,
                    });
                }
            }
            to_fit.push(next.len());
            next.push(Region::new(regions[survivor].id, members));
        }
        fit_selected(data, &mut next, &to_fit, cfg)?;
        regions = next;
    }
}

fn fit_selected(
    data: &[FeatVec],
    regions: &mut [Region],
    which: &[usize],
    cfg: &SdlConfig,
) -> Result<()> {
    let fitted: Vec<Result<ProbSpace>> = which
        .par_iter()
        .map(|&i| {
            let rows: Vec<&[f64]> = regions[i]
                .members
                .iter()
                .map(|&m| data[m].as_slice())
                .collect();
            fit_rows(&rows, cfg).map(|(s, _)| s)
        })
        .collect();
    for (&i, space) in which.iter().zip(fitted) {
        regions[i].space = Some(space?);
    }
    Ok(())
}

/// Orders regions by the norm of their center (stable) and renumbers ids.
fn order_by_modulus(regions: &mut [Region]) {
    regions.sort_by(|a, b| {
        let na = a.space.as_ref().map_or(0.0, |s| s.center().norm());
        let nb = b.space.as_ref().map_or(0.0, |s| s.center().norm());
        na.partial_cmp(&nb).unwrap_or(Ordering::Equal)
    });
    renumber(regions);
}

fn renumber(regions: &mut [Region]) {
    for (i, r) in regions.iter_mut().enumerate() {
        r.id = i;
    }
}

fn exchange_sweep(data: &[FeatVec], regions: Vec<Region>, cfg: &SdlConfig) -> Result<Vec<Region>> {
    let mut out: Vec<Region> = Vec::with_capacity(regions.len());
    for next in regions {
        match out.pop() {
            None => out.push(next),
            Some(prev) => match boundary_exchange(data, &prev, &next, cfg)? {
                Exchange::Kept(a, b) => {
                    out.push(a);
                    out.push(b);
                }
                Exchange::Dissolved(r) => out.push(r),
            },
        }
    }
    Ok(out)
}

fn validate_points(points: &[FeatVec]) -> Result<usize> {
    let first = points
        .first()
        .ok_or(Error::EmptyInput("dataset has no vectors"))?;
    for p in points {
        check_dim(first.dim(), p.dim())?;
    }
    Ok(first.dim())
}

/// Runs the full pipeline and returns a model whose regions partition the
/// dataset.
pub fn cluster(points: &[FeatVec], cfg: &EngineConfig) -> Result<ClusterModel> {
    cfg.validate()?;
    let dim = validate_points(points)?;

    let mut regions = initial_partition(points, points.len().min(2))?;
    let mut merge_log = Vec::new();
    let mut level = 1u32;
    loop {
        let pending: Vec<usize> = (0..regions.len())
            .filter(|&i| regions[i].space.is_none())
            .collect();
        fit_selected(points, &mut regions, &pending, &cfg.sdl)?;
        order_by_modulus(&mut regions);

        regions = exchange_sweep(points, regions, &cfg.sdl)?;
        renumber(&mut regions);

        let final_level = level >= cfg.max_levels || regions.iter().all(|r| r.len() <= 2);
        if cfg.merge_enabled {
            let (merged, events) = merge_overlapping(points, regions.clone(), &cfg.sdl, level)?;
            // Collapsing an intermediate level to one region would re-split
            // into the same two-way modulus partition on the next level.
            let collapses = merged.len() == 1 && regions.len() > 1;
            if !collapses || final_level {
                regions = merged;
                merge_log.extend(events);
            }
            order_by_modulus(&mut regions);
        }

        let reached = cfg.target_k.is_some_and(|k| regions.len() <= k);
        if reached || final_level || regions.iter().all(|r| r.len() <= 2) {
            break;
        }
        regions = split_all(points, &regions);
        level += 1;
    }

    let model = ClusterModel {
        regions,
        dim,
        merge_log,
        config: *cfg,
        dataset_fingerprint: fingerprint(points),
    };
    debug_assert!(model.validate().is_ok());
    Ok(model)
}

/// Assignment of one vector to a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub region_id: usize,
    pub distance: f64,
    pub inside: bool,
}

/// Assigns `v` to the region with the smallest point-to-space distance;
/// ties go to the smallest region id.
pub fn assign(v: &[f64], model: &ClusterModel) -> Result<Assignment> {
    check_dim(model.dim, v.len())?;
    let mut best: Option<Assignment> = None;
    for r in &model.regions {
        let d = point_space_distance_unchecked(v, r.fitted()?);
        let better = match best {
            None => true,
            Some(b) => d < b.distance || (d == b.distance && r.id < b.region_id),
        };
        if better {
            best = Some(Assignment {
                region_id: r.id,
                distance: d,
                inside: d == 0.0,
            });
        }
    }
    best.ok_or(Error::EmptyInput("model has no regions"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: &[f64]) -> FeatVec {
        FeatVec::new(v.to_vec()).unwrap()
    }

    fn line(xs: &[f64]) -> Vec<FeatVec> {
        xs.iter().map(|&x| fv(&[x])).collect()
    }

    fn fitted(id: usize, members: Vec<usize>, c: f64, s: f64) -> Region {
        Region {
            id,
            members,
            space: Some(ProbSpace::new(fv(&[c]), vec![s], 1).unwrap()),
        }
    }

    #[test]
    fn partition_k1_and_k2() {
        let data = line(&[4.0, 1.0, 3.0, 2.0]);
        let r = initial_partition(&data, 1).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].members, vec![0, 1, 2, 3]);
        let r = initial_partition(&data, 2).unwrap();
        assert_eq!(r[0].members, vec![1, 3]);
        assert_eq!(r[1].members, vec![0, 2]);
    }

    #[test]
    fn partition_sizes() {
        let data: Vec<FeatVec> = (0..1000).map(|i| fv(&[i as f64])).collect();
        let sizes: Vec<usize> = initial_partition(&data, 3)
            .unwrap()
            .iter()
            .map(Region::len)
            .collect();
        assert_eq!(sizes, vec![334, 333, 333]);
        assert!(matches!(
            initial_partition(&data[..2], 3),
            Err(Error::InvalidK { k: 3, n: 2 })
        ));
    }

    #[test]
    fn partition_ties_by_index() {
        let data = line(&[1.0, -1.0, 1.0, -1.0]);
        let r = initial_partition(&data, 2).unwrap();
        assert_eq!(r[0].members, vec![0, 1]);
    }

    #[test]
    fn exchange_moves_nearer_point() {
        let data = line(&[0.0, 2.0, 10.0]);
        let a = fitted(0, vec![0], 0.0, 0.0);
        let b = fitted(1, vec![1, 2], 10.0, 0.0);
        match boundary_exchange(&data, &a, &b, &SdlConfig::default()).unwrap() {
            Exchange::Kept(a, b) => {
                assert_eq!(a.members, vec![0, 1]);
                assert_eq!(b.members, vec![2]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exchange_tie_goes_to_second_region() {
        let data = line(&[0.0, 5.0, 10.0]);
        let a = fitted(0, vec![0, 1], 0.0, 0.0);
        let b = fitted(1, vec![2], 10.0, 0.0);
        match boundary_exchange(&data, &a, &b, &SdlConfig::default()).unwrap() {
            Exchange::Kept(a, b) => {
                assert_eq!(a.members, vec![0]);
                assert_eq!(b.members, vec![1, 2]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exchange_fixed_point_and_dissolve() {
        let data = line(&[0.0, 1.0, 10.0, 11.0]);
        let a = fitted(0, vec![0, 1], 0.5, 0.5);
        let b = fitted(1, vec![2, 3], 10.5, 0.5);
        let out = boundary_exchange(&data, &a, &b, &SdlConfig::default()).unwrap();
        assert_eq!(out, Exchange::Kept(a.clone(), b.clone()));

        // a's space is far from everything; all members go to b.
        let a = fitted(0, vec![0, 1], -100.0, 0.0);
        match boundary_exchange(&data, &a, &b, &SdlConfig::default()).unwrap() {
            Exchange::Dissolved(r) => {
                assert_eq!(r.members, vec![0, 1, 2, 3]);
                assert_eq!(r.id, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exchange_requires_fitted_regions() {
        let data = line(&[0.0, 1.0]);
        let a = Region::new(0, vec![0]);
        let b = fitted(1, vec![1], 1.0, 0.0);
        assert!(matches!(
            boundary_exchange(&data, &a, &b, &SdlConfig::default()),
            Err(Error::NotFitted(0))
        ));
    }

    #[test]
    fn split_by_median_norm() {
        let data = line(&[4.0, 1.0, 3.0, 2.0, 9.0]);
        let regions = vec![Region::new(0, vec![0, 1, 2, 3]), Region::new(1, vec![4])];
        let out = split_all(&data, &regions);
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].members, vec![1, 3]);
        assert_eq!(out[1].members, vec![0, 2]);
        assert_eq!(out[2].members, vec![4]);

        let odd = split_all(&data, &[Region::new(0, vec![0, 1, 2])]);
        assert_eq!(odd[0].len(), 2);
        assert_eq!(odd[1].len(), 1);
    }

    #[test]
    fn merge_overlapping_pair() {
        let data = line(&[-2.0, 0.0, 2.0, 1.0, 3.0, 5.0]);
        let regions = vec![
            fitted(0, vec![0, 1, 2], 0.0, 2.0),
            fitted(1, vec![3, 4, 5], 3.0, 2.0),
        ];
        let (out, log) = merge_overlapping(&data, regions, &SdlConfig::default(), 1).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].members, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(log.len(), 1);
        assert_eq!(
            (log[0].survivor, log[0].absorbed, log[0].distance),
            (0, 1, 0.0)
        );
    }

    #[test]
    fn merge_chain_is_transitive() {
        let data = line(&[0.0, 3.0, 6.0]);
        let regions = vec![
            fitted(0, vec![0], 0.0, 1.6),
            fitted(1, vec![1], 3.0, 1.6),
            fitted(2, vec![2], 6.0, 1.6),
        ];
        // A-C do not overlap on their own.
        assert!(
            space_overlap_gap(regions[0].fitted().unwrap(), regions[2].fitted().unwrap()).unwrap()
                > 0.0
        );
        let (out, log) = merge_overlapping(&data, regions, &SdlConfig::default(), 1).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(log.len(), 2);
        assert!(log.iter().all(|e| e.survivor == 0));
    }

    #[test]
    fn merge_leaves_separated_regions() {
        let data = line(&[0.0, 10.0]);
        let regions = vec![fitted(0, vec![0], 0.0, 1.0), fitted(1, vec![1], 10.0, 1.0)];
        let (out, log) =
            merge_overlapping(&data, regions.clone(), &SdlConfig::default(), 1).unwrap();
        assert_eq!(out, regions);
        assert!(log.is_empty());
    }

    #[test]
    fn assign_examples() {
        let model = ClusterModel {
            regions: vec![fitted(0, vec![0], 0.0, 1.0), fitted(1, vec![1], 10.0, 1.0)],
            dim: 1,
            merge_log: vec![],
            config: EngineConfig::default(),
            dataset_fingerprint: String::new(),
        };
        let a = assign(&[4.0], &model).unwrap();
        assert_eq!((a.region_id, a.distance, a.inside), (0, 3.0, false));
        let a = assign(&[10.0], &model).unwrap();
        assert_eq!((a.region_id, a.distance, a.inside), (1, 0.0, true));
        let a = assign(&[5.0], &model).unwrap();
        assert_eq!(a.region_id, 0);
        assert!(assign(&[1.0, 2.0], &model).is_err());
    }

    #[test]
    fn identical_points_form_one_cluster() {
        let data = vec![fv(&[2.0, 3.0]); 40];
        let model = cluster(&data, &EngineConfig::default()).unwrap();
        assert_eq!(model.cluster_count(), 1);
        let s = model.regions[0].fitted().unwrap();
        assert_eq!(s.center().as_slice(), &[2.0, 3.0]);
        assert_eq!(s.scale(), &[0.0, 0.0]);
        model.validate().unwrap();
    }

    #[test]
    fn single_point_dataset() {
        let model = cluster(&[fv(&[1.0])], &EngineConfig::default()).unwrap();
        assert_eq!(model.cluster_count(), 1);
        assert_eq!(model.regions[0].members, vec![0]);
    }

    #[test]
    fn cluster_errors() {
        assert!(matches!(
            cluster(&[], &EngineConfig::default()),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            cluster(&[fv(&[1.0]), fv(&[1.0, 2.0])], &EngineConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad = EngineConfig {
            target_k: Some(0),
            ..Default::default()
        };
        assert!(cluster(&[fv(&[1.0])], &bad).is_err());
    }
}
