//! Whitening, single-linkage clustering and the bootstrapped MLFriends
//! reference radius.
//!
//! Distances are measured in whitened coordinates expressed in units of the
//! principal axes of the ellipsoid the live points fill. Whitening alone
//! gives the live points identity covariance; a uniformly filled ellipsoid
//! then has radius `sqrt(d + 2)`, so distances are additionally multiplied by
//! [`WhitenedSpace::axis_scale`] `= 1 / sqrt(d + 2)`. A Mahalanobis distance of
//! one is thus the length of an ellipsoid axis.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods come from std whenever it is linked
use num_traits::Float;
use rand::Rng;

use crate::linalg;
use crate::{Error, Result};

/// Diagonal regularisation factors tried in turn (times `trace / d`).
const REGULARISATION: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Length of the per-point nearest-neighbour lists used by the bootstrap.
const NEIGHBOUR_LIST: usize = 8;

/// Affine map from unit-cube coordinates to decorrelated coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitenedSpace {
    dim: usize,
    mean: Vec<f64>,
    /// Lower triangular, row-major.
    transform: Vec<f64>,
    inverse_transform: Vec<f64>,
    axis_scale: f64,
}

/// How many points whitening insists on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleSizePolicy {
    /// At least `d + 1` points, so the sample covariance has full rank.
    #[default]
    RequireFullRank,
    /// Any number of points ≥ 2. The covariance is made invertible by the
    /// diagonal regularisation; distances between the sample points only
    /// involve the subspace they span.
    AllowUndersampled,
}

impl WhitenedSpace {
    /// A space from an explicit lower-triangular transform. Distances use
    /// the transform as given (axis scale 1).
    pub fn from_lower_triangular(mean: Vec<f64>, transform: Vec<f64>) -> Result<Self> {
        let dim = mean.len();
        if transform.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: transform.len(),
            });
        }
        for i in 0..dim {
            if transform[i * dim + i] == 0.0 {
                return Err(Error::DegenerateGeometry { axis: i });
            }
            if transform[i * dim + i + 1..(i + 1) * dim]
                .iter()
                .any(|&x| x != 0.0)
            {
                return Err(Error::InvalidProblem(
                    "transform is not lower triangular".into(),
                ));
            }
        }
        let inverse_transform = linalg::invert_lower(&transform, dim);
        Ok(Self {
            dim,
            mean,
            transform,
            inverse_transform,
            axis_scale: 1.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Row-major `d × d` whitening matrix (lower triangular).
    pub fn transform(&self) -> &[f64] {
        &self.transform
    }

    pub fn inverse_transform(&self) -> &[f64] {
        &self.inverse_transform
    }

    /// Factor converting whitened lengths to ellipsoid-axis units.
    pub fn axis_scale(&self) -> f64 {
        self.axis_scale
    }

    /// Whitened coordinates of `x` (identity covariance for the live points
    /// the space was built from).
    pub fn whiten(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        let mut out = vec![0.0; self.dim];
        linalg::lower_mul(&self.transform, self.dim, &centered, &mut out);
        out
    }

    /// Inverse of [`whiten`](Self::whiten).
    pub fn unwhiten(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        linalg::lower_mul(&self.inverse_transform, self.dim, y, &mut out);
        for (o, m) in out.iter_mut().zip(&self.mean) {
            *o += m;
        }
        out
    }

    /// Coordinates in which Euclidean distance is the reported Mahalanobis
    /// distance.
    fn metric_coords_into(&self, x: &[f64], centered: &mut [f64], out: &mut [f64]) {
        for ((c, a), m) in centered.iter_mut().zip(x).zip(&self.mean) {
            *c = a - m;
        }
        linalg::lower_mul(&self.transform, self.dim, centered, out);
        for o in out.iter_mut() {
            *o *= self.axis_scale;
        }
    }

    fn metric_coords<P: AsRef<[f64]>>(&self, points: &[P]) -> Vec<f64> {
        let d = self.dim;
        let mut flat = vec![0.0; points.len() * d];
        let mut centered = vec![0.0; d];
        for (p, out) in points.iter().zip(flat.chunks_exact_mut(d)) {
            self.metric_coords_into(p.as_ref(), &mut centered, out);
        }
        flat
    }

    /// Mahalanobis distance between two unit-cube vectors.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        for v in [a, b] {
            if v.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: v.len(),
                });
            }
        }
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let mut w = vec![0.0; self.dim];
        linalg::lower_mul(&self.transform, self.dim, &diff, &mut w);
        Ok(self.axis_scale * w.iter().map(|x| x * x).sum::<f64>().sqrt())
    }
}

/// Partition of the points into clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub num_clusters: usize,
}

impl ClusterAssignment {
    pub fn single(n: usize) -> Self {
        Self {
            labels: vec![0; n],
            num_clusters: 1,
        }
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_clusters];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Bootstrapped reference radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLFriendsRadius {
    pub r: f64,
    pub bootstrap_rounds: usize,
}

/// Outcome of the two-pass radius computation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceGeometry {
    pub radius: MLFriendsRadius,
    /// The space the radius (and jump distances) are measured in.
    pub space: WhitenedSpace,
    /// Clusters found at the first-pass radius.
    pub clusters: ClusterAssignment,
    pub first_pass_radius: f64,
}

fn check_dims<P: AsRef<[f64]>>(points: &[P]) -> Result<usize> {
    let d = points
        .first()
        .map(|p| p.as_ref().len())
        .ok_or(Error::TooFewPoints {
            needed: 1,
            found: 0,
        })?;
    for p in points {
        if p.as_ref().len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.as_ref().len(),
            });
        }
    }
    Ok(d)
}

/// Whitening transform for `points`, optionally centring each point on its
/// own cluster mean before the pooled covariance is estimated.
pub fn build_whitened_space<P: AsRef<[f64]>>(
    points: &[P],
    clusters: Option<&ClusterAssignment>,
) -> Result<WhitenedSpace> {
    build_with_policy(points, clusters, SampleSizePolicy::RequireFullRank)
}

pub fn build_with_policy<P: AsRef<[f64]>>(
    points: &[P],
    clusters: Option<&ClusterAssignment>,
    policy: SampleSizePolicy,
) -> Result<WhitenedSpace> {
    let d = check_dims(points)?;
    let n = points.len();
    let needed = match policy {
        SampleSizePolicy::RequireFullRank => d + 1,
        SampleSizePolicy::AllowUndersampled => 2,
    };
    if n < needed {
        return Err(Error::TooFewPoints { needed, found: n });
    }

    let mut mean = vec![0.0; d];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p.as_ref()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let (centres, labels, dof) = match clusters {
        Some(c) if c.num_clusters > 1 => {
            if c.labels.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: c.labels.len(),
                });
            }
            let mut centres = vec![0.0; c.num_clusters * d];
            let sizes = c.cluster_sizes();
            for (p, &l) in points.iter().zip(&c.labels) {
                for (m, x) in centres[l * d..(l + 1) * d].iter_mut().zip(p.as_ref()) {
                    *m += x;
                }
            }
            for (l, &s) in sizes.iter().enumerate() {
                centres[l * d..(l + 1) * d]
                    .iter_mut()
                    .for_each(|m| *m /= s as f64);
            }
            (centres, Some(&c.labels), n.saturating_sub(c.num_clusters))
        }
        _ => (mean.clone(), None, n - 1),
    };
    if dof == 0 {
        return Err(Error::TooFewPoints { needed, found: n });
    }

    let mut cov = vec![0.0; d * d];
    let mut c = vec![0.0; d];
    for (idx, p) in points.iter().enumerate() {
        let l = labels.map_or(0, |ls| ls[idx]);
        for ((ci, x), m) in c
            .iter_mut()
            .zip(p.as_ref())
            .zip(&centres[l * d..(l + 1) * d])
        {
            *ci = x - m;
        }
        for i in 0..d {
            let row = &mut cov[i * d..i * d + i + 1];
            for (j, v) in row.iter_mut().enumerate() {
                *v += c[i] * c[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            let v = cov[i * d + j] / dof as f64;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }

    let trace: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    if !(trace > 0.0) || !trace.is_finite() {
        let axis = (0..d)
            .min_by(|&a, &b| cov[a * d + a].total_cmp(&cov[b * d + b]))
            .unwrap_or(0);
        return Err(Error::DegenerateGeometry { axis });
    }

    let mut failed_axis = 0;
    for eps in REGULARISATION {
        let mut a = cov.clone();
        let jitter = eps * trace / d as f64;
        for i in 0..d {
            a[i * d + i] += jitter;
        }
        match linalg::cholesky(&a, d) {
            Ok(l) => {
                let transform = linalg::invert_lower(&l, d);
                return Ok(WhitenedSpace {
                    dim: d,
                    mean,
                    transform,
                    inverse_transform: l,
                    axis_scale: 1.0 / ((d + 2) as f64).sqrt(),
                });
            }
            Err(axis) => failed_axis = axis,
        }
    }
    Err(Error::DegenerateGeometry { axis: failed_axis })
}

/// Squared pairwise distances of `n` points stored flat (`n × d`), with the
/// nearest distinct neighbours of every point.
struct DistanceTable {
    n: usize,
    sq: Vec<f64>,
    /// `n × NEIGHBOUR_LIST` indices in increasing distance.
    neighbours: Vec<u32>,
    neighbour_len: Vec<usize>,
}

impl DistanceTable {
    fn from_flat(flat: &[f64], d: usize) -> Self {
        let n = flat.len() / d;
        // Dimension-major copy so each row accumulates over contiguous
        // columns.
        let mut by_dim = vec![0.0; n * d];
        for (i, p) in flat.chunks_exact(d).enumerate() {
            for (k, &x) in p.iter().enumerate() {
                by_dim[k * n + i] = x;
            }
        }
        let mut sq = vec![0.0; n * n];
        for (a, row) in flat.chunks_exact(d).zip(sq.chunks_exact_mut(n)) {
            for (&ak, col) in a.iter().zip(by_dim.chunks_exact(n)) {
                for (out, &b) in row.iter_mut().zip(col) {
                    let diff = ak - b;
                    *out += diff * diff;
                }
            }
        }
        let mut table = Self {
            n,
            sq,
            neighbours: vec![0; n * NEIGHBOUR_LIST],
            neighbour_len: vec![0; n],
        };
        table.fill_neighbours();
        table
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.sq[i * self.n..(i + 1) * self.n]
    }

    /// Nearest distinct (nonzero-distance) neighbours of every point, in
    /// increasing distance, truncated to `NEIGHBOUR_LIST` entries.
    fn fill_neighbours(&mut self) {
        let n = self.n;
        let mut best = [(0.0f64, 0u32); NEIGHBOUR_LIST];
        for i in 0..n {
            let mut len = 0;
            let mut worst = f64::INFINITY;
            for (j, &s) in self.sq[i * n..(i + 1) * n].iter().enumerate() {
                // exact duplicates (and the point itself) are not neighbours
                if s < worst && s > 0.0 {
                    let mut pos = len.min(NEIGHBOUR_LIST - 1);
                    while pos > 0 && best[pos - 1].0 > s {
                        best[pos] = best[pos - 1];
                        pos -= 1;
                    }
                    best[pos] = (s, j as u32);
                    if len < NEIGHBOUR_LIST {
                        len += 1;
                    }
                    if len == NEIGHBOUR_LIST {
                        worst = best[len - 1].0;
                    }
                }
            }
            for (slot, &(_, j)) in self.neighbours[i * NEIGHBOUR_LIST..]
                .iter_mut()
                .zip(&best[..len])
            {
                *slot = j;
            }
            self.neighbour_len[i] = len;
        }
    }

    fn neighbours_of(&self, i: usize) -> &[u32] {
        &self.neighbours[i * NEIGHBOUR_LIST..i * NEIGHBOUR_LIST + self.neighbour_len[i]]
    }

    /// Squared bootstrap radius.
    fn bootstrap_sq<R: Rng + ?Sized>(&self, rounds: usize, rng: &mut R) -> f64 {
        let n = self.n;
        let mut selected = vec![false; n];
        let mut r2: f64 = 0.0;
        let mut done = 0;
        while done < rounds {
            selected.fill(false);
            for _ in 0..n {
                selected[rng.random_range(0..n)] = true;
            }
            if selected.iter().all(|&s| s) {
                // no out-of-bag test points: redraw
                continue;
            }
            done += 1;
            for i in (0..n).filter(|&i| !selected[i]) {
                if let Some(s) = self.nearest_selected(i, &selected) {
                    r2 = r2.max(s);
                }
            }
        }
        if r2 == 0.0 {
            r2 = self.max_nearest_distinct();
        }
        r2
    }

    fn nearest_selected(&self, i: usize, selected: &[bool]) -> Option<f64> {
        let row = self.row(i);
        let list = self.neighbours_of(i);
        if let Some(&j) = list.iter().find(|&&j| selected[j as usize]) {
            return Some(row[j as usize]);
        }
        if list.len() < NEIGHBOUR_LIST {
            // the list holds every distinct neighbour
            return None;
        }
        row.iter()
            .zip(selected)
            .filter(|&(&s, &sel)| sel && s > 0.0)
            .map(|(&s, _)| s)
            .min_by(f64::total_cmp)
    }

    fn max_nearest_distinct(&self) -> f64 {
        (0..self.n)
            .filter_map(|i| {
                self.row(i)
                    .iter()
                    .copied()
                    .filter(|&s| s > 0.0)
                    .min_by(f64::total_cmp)
            })
            .fold(0.0, f64::max)
    }

    fn single_linkage(&self, linking_sq: f64) -> ClusterAssignment {
        let n = self.n;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for i in 0..n {
            for j in 0..i {
                if self.sq[i * n + j] <= linking_sq {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut ids = vec![usize::MAX; n];
        let mut num_clusters = 0;
        let labels = (0..n)
            .map(|i| {
                let root = find(&mut parent, i);
                if ids[root] == usize::MAX {
                    ids[root] = num_clusters;
                    num_clusters += 1;
                }
                ids[root]
            })
            .collect();
        ClusterAssignment {
            labels,
            num_clusters,
        }
    }
}

fn flatten<P: AsRef<[f64]>>(points: &[P]) -> Result<(Vec<f64>, usize)> {
    let d = check_dims(points)?;
    Ok((
        points
            .iter()
            .flat_map(|p| p.as_ref().iter().copied())
            .collect(),
        d,
    ))
}

/// MLFriends radius of already-whitened points: in each of `rounds`
/// bootstrap rounds the resampled points are the training set and the
/// out-of-bag points the test set; the radius is the largest distance from a
/// test point to its nearest training point over all rounds.
pub fn bootstrap_radius<P: AsRef<[f64]>, R: Rng + ?Sized>(
    points: &[P],
    rounds: usize,
    rng: &mut R,
) -> Result<MLFriendsRadius> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            found: points.len(),
        });
    }
    if rounds == 0 {
        return Err(Error::InvalidConfig("bootstrap rounds must be at least 1"));
    }
    let (flat, d) = flatten(points)?;
    let table = DistanceTable::from_flat(&flat, d);
    Ok(MLFriendsRadius {
        r: table.bootstrap_sq(rounds, rng).sqrt(),
        bootstrap_rounds: rounds,
    })
}

/// Transitive closure of "distance ≤ `linking_radius`".
pub fn single_linkage_clusters<P: AsRef<[f64]>>(
    points: &[P],
    linking_radius: f64,
) -> Result<ClusterAssignment> {
    if !(linking_radius > 0.0) {
        return Err(Error::InvalidConfig("linking radius must be positive"));
    }
    let (flat, d) = flatten(points)?;
    Ok(DistanceTable::from_flat(&flat, d).single_linkage(linking_radius * linking_radius))
}

/// Two-pass reference radius: whiten, bootstrap a first radius, cluster at
/// that radius, re-whiten with cluster-centred covariance and bootstrap the
/// final radius in the second space.
pub fn compute_reference_radius<P: AsRef<[f64]>, R: Rng + ?Sized>(
    live: &[P],
    rounds: usize,
    rng: &mut R,
) -> Result<ReferenceGeometry> {
    compute_reference_radius_with(live, rounds, rng, SampleSizePolicy::RequireFullRank)
}

pub fn compute_reference_radius_with<P: AsRef<[f64]>, R: Rng + ?Sized>(
    live: &[P],
    rounds: usize,
    rng: &mut R,
    policy: SampleSizePolicy,
) -> Result<ReferenceGeometry> {
    if rounds == 0 {
        return Err(Error::InvalidConfig("bootstrap rounds must be at least 1"));
    }
    let first = build_with_policy(live, None, policy)?;
    let d = first.dim;
    let table1 = DistanceTable::from_flat(&first.metric_coords(live), d);
    let r1_sq = table1.bootstrap_sq(rounds, rng);
    let clusters = if r1_sq > 0.0 {
        table1.single_linkage(r1_sq)
    } else {
        ClusterAssignment::single(live.len())
    };

    let pooled_dof = live.len().saturating_sub(clusters.num_clusters);
    let (space, table2) = if clusters.num_clusters > 1 && pooled_dof > d {
        let space = build_with_policy(live, Some(&clusters), policy)?;
        let table = DistanceTable::from_flat(&space.metric_coords(live), d);
        (space, table)
    } else {
        (first, table1)
    };
    let r2_sq = table2.bootstrap_sq(rounds, rng);
    Ok(ReferenceGeometry {
        radius: MLFriendsRadius {
            r: r2_sq.sqrt(),
            bootstrap_rounds: rounds,
        },
        space,
        clusters,
        first_pass_radius: r1_sq.sqrt(),
    })
}

/// Jump distance between unit-cube vectors `a` and `b` in `space`.
pub fn mahalanobis_distance(space: &WhitenedSpace, a: &[f64], b: &[f64]) -> Result<f64> {
    space.distance(a, b)
}
