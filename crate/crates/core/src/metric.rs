//! Probability spaces and the distances defined over them.
//!
//! A [`ProbSpace`] summarises a cluster by its maximum probability value (the
//! center) and a non-negative probability scale per dimension. Distances are
//! Euclidean with every coordinate gap reduced by the scales involved and
//! clamped at zero, so anything inside the scale window counts as distance 0.

use std::ops::Deref;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used by the axiom checks.
pub const AXIOM_TOLERANCE: f64 = 1e-9;

/// An ordered list of finite feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatVec(Vec<f64>);

impl FeatVec {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(FeatVec(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean norm, the "modulus" used to order vectors.
    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl Deref for FeatVec {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for FeatVec {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        FeatVec::new(values)
    }
}

impl From<FeatVec> for Vec<f64> {
    fn from(v: FeatVec) -> Self {
        v.0
    }
}

/// A probability space: center `A`, per-dimension scale `Δ`, and the number of
/// samples it was fitted from.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbSpace {
    center: FeatVec,
    scale: Vec<f64>,
    count: usize,
}

impl ProbSpace {
    pub fn new(center: FeatVec, scale: Vec<f64>, count: usize) -> Result<Self> {
        if scale.len() != center.dim() {
            return Err(Error::DimensionMismatch {
                expected: center.dim(),
                found: scale.len(),
            });
        }
        if let Some((j, s)) = scale
            .iter()
            .enumerate()
            .find(|(_, s)| !s.is_finite() || **s < 0.0)
        {
            return Err(Error::InvalidScale(format!(
                "scale[{j}] = {s} must be finite and non-negative"
            )));
        }
        if count == 0 && scale.iter().any(|&s| s != 0.0) {
            return Err(Error::InvalidScale(
                "a space fitted from zero samples must have zero scale".into(),
            ));
        }
        Ok(ProbSpace {
            center,
            scale,
            count,
        })
    }

    /// A space with zero scale centered on `center`.
    pub fn point(center: FeatVec) -> Self {
        let scale = vec![0.0; center.dim()];
        ProbSpace {
            center,
            scale,
            count: 1,
        }
    }

    pub fn center(&self) -> &FeatVec {
        &self.center
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }
}

pub(crate) fn norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[inline]
fn clamp_gap(gap: f64, threshold: f64) -> f64 {
    if gap <= threshold {
        0.0
    } else {
        gap - threshold
    }
}

/// Mean absolute deviation of each coordinate from `center` over `rows`.
pub(crate) fn mean_abs_deviation<'a, I>(rows: I, center: &[f64]) -> Vec<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut acc = vec![0.0; center.len()];
    let mut n = 0usize;
    for row in rows {
        for ((a, x), c) in acc.iter_mut().zip(row).zip(center) {
            *a += (x - c).abs();
        }
        n += 1;
    }
    if n > 0 {
        let n = n as f64;
        acc.iter_mut().for_each(|a| *a /= n);
    }
    acc
}

/// Per-dimension probability scale of `points` about `center`.
///
/// Returns the empirical mean absolute deviation of each coordinate, which is
/// the sample-aligned form of the shell sum `Σ_i D_ij ρ_ij`. Empty input gives
/// an all-zero scale.
pub fn scale_from_samples(points: &[FeatVec], center: &FeatVec) -> Result<Vec<f64>> {
    for p in points {
        check_dim(center.dim(), p.dim())?;
    }
    Ok(mean_abs_deviation(
        points.iter().map(|p| p.as_slice()),
        center,
    ))
}

pub(crate) fn point_space_distance_unchecked(r: &[f64], s: &ProbSpace) -> f64 {
    r.iter()
        .zip(s.center.iter())
        .zip(&s.scale)
        .map(|((x, c), d)| {
            let g = clamp_gap((x - c).abs(), *d);
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

/// Distance from a feature vector to a probability space (`Dp`).
pub fn point_space_distance(r: &[f64], s: &ProbSpace) -> Result<f64> {
    check_dim(s.dim(), r.len())?;
    Ok(point_space_distance_unchecked(r, s))
}

/// Distance between two probability spaces (`G`).
///
/// Each coordinate gap is reduced by the sum of both scales and clamped at
/// zero. The result is bit-for-bit symmetric in its arguments.
pub fn space_space_distance(v: &ProbSpace, w: &ProbSpace) -> Result<f64> {
    check_dim(v.dim(), w.dim())?;
    Ok(v.center
        .iter()
        .zip(w.center.iter())
        .zip(v.scale.iter().zip(&w.scale))
        .map(|((a, b), (da, db))| {
            let g = clamp_gap((b - a).abs(), da + db);
            g * g
        })
        .sum::<f64>()
        .sqrt())
}

/// Signed whole-vector separation: center distance minus both scale norms.
///
/// Non-positive values mean the two spaces overlap as wholes. This is the
/// criterion used when merging regions. Whenever [`space_space_distance`] is
/// zero this gap is non-positive.
pub fn space_overlap_gap(v: &ProbSpace, w: &ProbSpace) -> Result<f64> {
    check_dim(v.dim(), w.dim())?;
    let d: Vec<f64> = v
        .center
        .iter()
        .zip(w.center.iter())
        .map(|(a, b)| a - b)
        .collect();
    Ok(norm(&d) - norm(&v.scale) - norm(&w.scale))
}

/// Which degenerate configuration a triangle of spaces falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegenerateCase {
    /// All three clamped edges are positive.
    Full,
    /// Exactly one clamped edge is zero.
    OneEdgeZero,
    /// Two (or all three) clamped edges are zero.
    SingleSide,
}

/// A 2-D space for the triangle construction: center and isotropic scale `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarSpace {
    pub center: [f64; 2],
    pub scale: f64,
}

impl PlanarSpace {
    pub fn new(x: f64, y: f64, scale: f64) -> Self {
        PlanarSpace {
            center: [x, y],
            scale,
        }
    }
}

/// Effective triangle between three planar spaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleVertices {
    pub k: [f64; 2],
    pub f: [f64; 2],
    pub h: [f64; 2],
    /// Reported edge lengths `[AB, BC, CA]` after degenerate-case handling.
    pub edges: [f64; 3],
    pub degenerate_case: DegenerateCase,
}

impl TriangleVertices {
    /// Euclidean side lengths `[KF, FH, HK]` of the vertex triangle.
    pub fn side_lengths(&self) -> [f64; 3] {
        let d = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        [d(self.k, self.f), d(self.f, self.h), d(self.h, self.k)]
    }
}

/// Boundary midpoint between two coordinates of neighbouring spaces.
///
/// When the gap is within either scale both scales are dropped and the plain
/// midpoint is used; otherwise each endpoint is pulled inward by its scale.
fn boundary_midpoint(p: f64, mp: f64, q: f64, mq: f64) -> f64 {
    let gap = (p - q).abs();
    let (mp, mq) = if gap <= mp || gap <= mq {
        (0.0, 0.0)
    } else {
        (mp, mq)
    };
    if p < q {
        0.5 * ((p + mp) + (q - mq))
    } else {
        0.5 * ((q + mq) + (p - mp))
    }
}

fn planar_clamped(a: &PlanarSpace, b: &PlanarSpace) -> f64 {
    let t = a.scale + b.scale;
    let gx = clamp_gap((a.center[0] - b.center[0]).abs(), t);
    let gy = clamp_gap((a.center[1] - b.center[1]).abs(), t);
    (gx * gx + gy * gy).sqrt()
}

/// Constructs the vertex triangle `K`, `F`, `H` for spaces `a`, `b`, `c`.
///
/// `K` sits between `a` and `b`, `F` between `b` and `c`, `H` between `c` and
/// `a`. Edge lengths are the clamped pairwise space distances, with the
/// degenerate cases folded so that the reported triple stays a triangle.
pub fn triangle_vertices(a: PlanarSpace, b: PlanarSpace, c: PlanarSpace) -> TriangleVertices {
    let mid = |p: &PlanarSpace, q: &PlanarSpace| {
        [
            boundary_midpoint(p.center[0], p.scale, q.center[0], q.scale),
            boundary_midpoint(p.center[1], p.scale, q.center[1], q.scale),
        ]
    };
    let k = mid(&a, &b);
    let f = mid(&b, &c);
    let h = mid(&c, &a);

    // edges[i] joins vertex i and vertex (i + 1) % 3 with A=0, B=1, C=2.
    let raw = [
        planar_clamped(&a, &b),
        planar_clamped(&b, &c),
        planar_clamped(&c, &a),
    ];
    let zeros: Vec<usize> = (0..3).filter(|&i| raw[i] == 0.0).collect();
    let (edges, degenerate_case) = match zeros.as_slice() {
        [] => (raw, DegenerateCase::Full),
        &[z] => {
            // The two edges meeting at the vertex opposite the zero edge.
            let m = raw[(z + 1) % 3].min(raw[(z + 2) % 3]);
            let mut e = [m; 3];
            e[z] = 0.0;
            (e, DegenerateCase::OneEdgeZero)
        }
        &[z0, z1] => {
            let nz = 3 - z0 - z1;
            let len = raw[nz];
            // Endpoints of the nonzero edge are nz and nz + 1; the lower index
            // keeps both of its incident edges at `len`.
            let (p, q) = (nz, (nz + 1) % 3);
            let low = p.min(q);
            let mut e = [0.0; 3];
            for (i, slot) in e.iter_mut().enumerate() {
                if i == low || (i + 1) % 3 == low {
                    *slot = len;
                }
            }
            (e, DegenerateCase::SingleSide)
        }
        _ => ([0.0; 3], DegenerateCase::SingleSide),
    };

    TriangleVertices {
        k,
        f,
        h,
        edges,
        degenerate_case,
    }
}

/// Violation counts from [`check_metric_axioms`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AxiomReport {
    pub trials: usize,
    pub nonnegativity: usize,
    pub symmetry: usize,
    pub self_distance: usize,
    pub triangle: usize,
    /// Largest observed `G(A,C) - G(A,B) - G(B,C)`; `0` when none exceeded.
    pub max_triangle_excess: f64,
    /// Indices `(a, b, c)` of the worst triangle violation, if any.
    pub worst_triple: Option<(usize, usize, usize)>,
    pub max_distance: f64,
}

impl AxiomReport {
    pub fn total_violations(&self) -> usize {
        self.nonnegativity + self.symmetry + self.self_distance + self.triangle
    }
}

/// Samples `trials` ordered triples of distinct spaces and counts violations
/// of non-negativity, exact symmetry, exact zero self-distance, and the
/// triangle inequality (within [`AXIOM_TOLERANCE`]).
pub fn check_metric_axioms(spaces: &[ProbSpace], trials: usize, seed: u64) -> Result<AxiomReport> {
    if spaces.len() < 3 {
        return Err(Error::InsufficientInput(format!(
            "need at least 3 spaces, got {}",
            spaces.len()
        )));
    }
    if trials == 0 {
        return Err(Error::InsufficientInput("trials must be at least 1".into()));
    }
    let dim = spaces[0].dim();
    for s in spaces {
        check_dim(dim, s.dim())?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AxiomReport {
        trials,
        ..Default::default()
    };
    for _ in 0..trials {
        let picked = index::sample(&mut rng, spaces.len(), 3);
        let (ia, ib, ic) = (picked.index(0), picked.index(1), picked.index(2));
        let (a, b, c) = (&spaces[ia], &spaces[ib], &spaces[ic]);

        let ab = space_space_distance(a, b)?;
        let ba = space_space_distance(b, a)?;
        let bc = space_space_distance(b, c)?;
        let ac = space_space_distance(a, c)?;

        for d in [ab, ba, bc, ac] {
            if d.is_nan() || d < 0.0 {
                report.nonnegativity += 1;
            }
            report.max_distance = report.max_distance.max(d);
        }
        if ab.to_bits() != ba.to_bits() {
            report.symmetry += 1;
        }
        for s in [a, b, c] {
            if space_space_distance(s, s)? != 0.0 {
                report.self_distance += 1;
            }
        }
        let excess = ac - (ab + bc);
        if excess > AXIOM_TOLERANCE {
            report.triangle += 1;
            if excess > report.max_triangle_excess {
                report.max_triangle_excess = excess;
                report.worst_triple = Some((ia, ib, ic));
            }
        }
    }
    Ok(report)
}

/// Draws `n` random spaces: centers uniform in `[-10, 10]`, scales uniform in
/// `[0, 1]` per dimension.
pub fn random_spaces(n: usize, dim: usize, seed: u64) -> Result<Vec<ProbSpace>> {
    if dim == 0 {
        return Err(Error::EmptyVector);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let center: Vec<f64> = (0..dim).map(|_| rng.random_range(-10.0..=10.0)).collect();
            let scale: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..=1.0)).collect();
            ProbSpace::new(FeatVec::new(center)?, scale, 1)
        })
        .collect()
}

/// Outcome of sampling [`triangle_vertices`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TriangleReport {
    pub trials: usize,
    pub full: usize,
    pub one_edge_zero: usize,
    pub single_side: usize,
    /// Vertex triangles `KFH` breaking the triangle inequality.
    pub vertex_violations: usize,
    /// Folded degenerate edge triples breaking the triangle inequality.
    pub edge_violations: usize,
    /// Full triangles whose raw clamped edges break the triangle inequality.
    /// Diagnostic only: this is the clamped distance's own triangle check,
    /// which [`check_metric_axioms`] already counts.
    pub full_edge_excess: usize,
    pub non_finite: usize,
}

impl TriangleReport {
    pub fn total_violations(&self) -> usize {
        self.vertex_violations + self.edge_violations + self.non_finite
    }
}

fn violates_triangle(e: [f64; 3]) -> bool {
    (0..3).any(|i| e[i] + e[(i + 1) % 3] < e[(i + 2) % 3] - AXIOM_TOLERANCE)
}

/// Samples random planar triples (a third of them forced into the degenerate
/// configurations) and checks every resulting triangle.
pub fn check_triangle_vertices(trials: usize, seed: u64) -> Result<TriangleReport> {
    if trials == 0 {
        return Err(Error::InsufficientInput("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = TriangleReport {
        trials,
        ..Default::default()
    };
    for t in 0..trials {
        let draw = |rng: &mut ChaCha8Rng| {
            PlanarSpace::new(
                rng.random_range(-10.0..=10.0),
                rng.random_range(-10.0..=10.0),
                rng.random_range(0.0..=2.0),
            )
        };
        let a = draw(&mut rng);
        let mut b = draw(&mut rng);
        let mut c = draw(&mut rng);
        match t % 3 {
            // Put c inside b's scale so edge BC clamps to zero.
            1 => {
                c.center = [b.center[0] + 0.5 * b.scale, b.center[1] - 0.5 * b.scale];
            }
            // Put both b and c on top of a: two zero edges.
            2 => {
                let s = a.scale + 1.0;
                b.center = a.center;
                b.scale = s;
                c.center = [a.center[0] + 0.5, a.center[1]];
            }
            _ => {}
        }
        let tri = triangle_vertices(a, b, c);
        let coords = [tri.k, tri.f, tri.h].concat();
        if coords.iter().chain(&tri.edges).any(|v| !v.is_finite()) {
            report.non_finite += 1;
            continue;
        }
        match tri.degenerate_case {
            DegenerateCase::Full => report.full += 1,
            DegenerateCase::OneEdgeZero => report.one_edge_zero += 1,
            DegenerateCase::SingleSide => report.single_side += 1,
        }
        if violates_triangle(tri.side_lengths()) {
            report.vertex_violations += 1;
        }
        if violates_triangle(tri.edges) {
            if tri.degenerate_case == DegenerateCase::Full {
                report.full_edge_excess += 1;
            } else {
                report.edge_violations += 1;
            }
        }
    }
    Ok(report)
}
