//! Fuzzy C-means over 3-D rating points and the fuzzy silhouette index.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FcmConfig {
    pub clusters: usize,
    pub fuzzifier: f64,
    /// Stop once no centroid moves further than this between iterations.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for FcmConfig {
    fn default() -> Self {
        Self {
            clusters: 4,
            fuzzifier: 2.0,
            tolerance: 1e-6,
            max_iterations: 300,
            seed: 0,
        }
    }
}

impl FcmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clusters < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 clusters, got {}", self.clusters)));
        }
        if !(self.fuzzifier > 1.0) || !self.fuzzifier.is_finite() {
            return Err(Error::InvalidConfig(format!("fuzzifier must be > 1, got {}", self.fuzzifier)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcmResult {
    pub centroids: Vec<Point>,
    /// Row-major n x c membership matrix.
    pub memberships: Vec<Vec<f64>>,
    pub fuzzifier: f64,
    pub iterations_run: usize,
    pub objective_trace: Vec<f64>,
}

impl FcmResult {
    pub fn clusters(&self) -> usize {
        self.centroids.len()
    }

    /// Index of the largest membership in each row.
    pub fn hard_assignments(&self) -> Vec<usize> {
        self.memberships.iter().map(|row| argmax(row)).collect()
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, u) in row.iter().enumerate() {
        if *u > row[best] {
            best = j;
        }
    }
    best
}

fn dist2(a: &Point, b: &Point) -> f64 {
    (0..3).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum()
}

/// Membership row of `x` against fixed centroids. A point sitting exactly on
/// a centroid belongs to that cluster alone.
pub fn membership_row(x: &Point, centroids: &[Point], fuzzifier: f64) -> Vec<f64> {
    let d2: Vec<f64> = centroids.iter().map(|v| dist2(x, v)).collect();
    if let Some(hit) = d2.iter().position(|d| *d == 0.0) {
        let mut row = vec![0.0; centroids.len()];
        row[hit] = 1.0;
        return row;
    }
    let exponent = 1.0 / (fuzzifier - 1.0);
    d2.iter()
        .map(|dj| {
            let s: f64 = d2.iter().map(|dk| (dj / dk).powf(exponent)).sum();
            1.0 / s
        })
        .collect()
}

fn update_centroids(points: &[Point], memberships: &[Vec<f64>], fuzzifier: f64) -> Vec<Point> {
    let c = memberships[0].len();
    let mut num = vec![[0.0; 3]; c];
    let mut den = vec![0.0; c];
    for (x, row) in points.iter().zip(memberships) {
        for (j, u) in row.iter().enumerate() {
            let w = u.powf(fuzzifier);
            den[j] += w;
            for k in 0..3 {
                num[j][k] += w * x[k];
            }
        }
    }
    num.iter()
        .zip(&den)
        .map(|(n, d)| if *d > 0.0 { [n[0] / d, n[1] / d, n[2] / d] } else { *n })
        .collect()
}

fn objective(points: &[Point], centroids: &[Point], memberships: &[Vec<f64>], fuzzifier: f64) -> f64 {
    let mut total = 0.0;
    for (x, row) in points.iter().zip(memberships) {
        for (v, u) in centroids.iter().zip(row) {
            total += u.powf(fuzzifier) * dist2(x, v);
        }
    }
    total
}

fn check_points(points: &[Point]) -> Result<()> {
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cluster input points".into()));
    }
    Ok(())
}

/// Alternating optimisation: centroids from memberships, then memberships
/// from centroids, until the largest centroid move drops below tolerance.
pub fn fcm_fit(points: &[Point], config: &FcmConfig) -> Result<FcmResult> {
    config.validate()?;
    let n = points.len();
    let c = config.clusters;
    if n <= c {
        return Err(Error::DegenerateData(format!("{n} points cannot form {c} clusters")));
    }
    check_points(points)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut memberships: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let row: Vec<f64> = (0..c).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|u| u / s).collect()
        })
        .collect();

    let m = config.fuzzifier;
    let mut previous: Option<Vec<Point>> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut centroids = Vec::new();
    while iterations < config.max_iterations {
        centroids = update_centroids(points, &memberships, m);
        memberships = points.iter().map(|x| membership_row(x, &centroids, m)).collect();
        trace.push(objective(points, &centroids, &memberships, m));
        iterations += 1;
        let moved = previous.as_ref().map(|prev| {
            prev.iter()
                .zip(&centroids)
                .map(|(a, b)| dist2(a, b).sqrt())
                .fold(0.0, f64::max)
        });
        if matches!(moved, Some(d) if d < config.tolerance) {
            break;
        }
        previous = Some(centroids.clone());
    }
    if trace.iter().any(|j| !j.is_finite()) {
        return Err(Error::Numeric("FCM objective became non-finite".into()));
    }
    Ok(FcmResult {
        centroids,
        memberships,
        fuzzifier: m,
        iterations_run: iterations,
        objective_trace: trace,
    })
}

/// Crisp silhouette of every point under the given hard assignment.
pub fn crisp_silhouettes(points: &[Point], labels: &[usize], clusters: usize) -> Result<Vec<f64>> {
    let n = points.len();
    let mut sizes = vec![0usize; clusters];
    for &l in labels {
        sizes[l] += 1;
    }
    if let Some(empty) = sizes.iter().position(|s| *s == 0) {
        return Err(Error::UndefinedIndex(format!("cluster {empty} is empty under hard assignment")));
    }
    let mut out = Vec::with_capacity(n);
    let mut sums = vec![0.0; clusters];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                sums[labels[j]] += dist2(&points[i], &points[j]).sqrt();
            }
        }
        let own = labels[i];
        if sizes[own] == 1 {
            out.push(0.0);
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..clusters)
            .filter(|k| *k != own)
            .map(|k| sums[k] / sizes[k] as f64)
            .fold(f64::INFINITY, f64::min);
        let scale = a.max(b);
        out.push(if scale > 0.0 { (b - a) / scale } else { 0.0 });
    }
    Ok(out)
}

/// Silhouettes weighted by `(u_first - u_second)^alpha`, the margin between
/// each point's two largest memberships.
pub fn fuzzy_silhouette(points: &[Point], result: &FcmResult, alpha: f64) -> Result<f64> {
    if points.len() != result.memberships.len() {
        return Err(Error::Shape(format!(
            "{} points but {} membership rows",
            points.len(),
            result.memberships.len()
        )));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidConfig(format!("alpha must be >= 0, got {alpha}")));
    }
    check_points(points)?;
    if points.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::DegenerateData("all points are identical".into()));
    }
    let labels = result.hard_assignments();
    let s = crisp_silhouettes(points, &labels, result.clusters())?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (row, si) in result.memberships.iter().zip(&s) {
        let mut first = f64::NEG_INFINITY;
        let mut second = f64::NEG_INFINITY;
        for &u in row {
            if u > first {
                second = first;
                first = u;
            } else if u > second {
                second = u;
            }
        }
        let w = (first - second).powf(alpha);
        num += w * si;
        den += w;
    }
    if den <= 0.0 {
        return Err(Error::DegenerateData("all membership margins are zero".into()));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub clusters: usize,
    pub fuzzy_silhouette: f64,
    pub result: FcmResult,
}

/// Fit and score every cluster count in `range`; the template's `clusters`
/// field is overwritten per row.
pub fn sweep_clusters(
    points: &[Point],
    range: RangeInclusive<usize>,
    template: &FcmConfig,
    alpha: f64,
) -> Result<Vec<SweepRow>> {
    if range.is_empty() {
        return Ok(Vec::new());
    }
    let n = points.len();
    if *range.start() < 2 || *range.end() + 1 > n {
        return Err(Error::InvalidConfig(format!(
            "cluster range {}..={} must lie within [2, {}]",
            range.start(),
            range.end(),
            n.saturating_sub(1)
        )));
    }
    range
        .map(|clusters| {
            let config = FcmConfig { clusters, ..*template };
            let result = fcm_fit(points, &config)?;
            let fuzzy_silhouette = fuzzy_silhouette(points, &result, alpha)?;
            Ok(SweepRow {
                clusters,
                fuzzy_silhouette,
                result,
            })
        })
        .collect()
}

/// Cluster memberships of a new point against fitted centroids.
pub fn cluster_membership_features(point: &Point, result: &FcmResult) -> Result<Vec<f64>> {
    if result.clusters() < 2 {
        return Err(Error::InvalidConfig("need at least 2 clusters".into()));
    }
    check_points(std::slice::from_ref(point))?;
    Ok(membership_row(point, &result.centroids, result.fuzzifier))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub counts: Vec<usize>,
    /// Label -> number of that label's samples assigned to each cluster.
    pub label_distribution: BTreeMap<String, Vec<usize>>,
    pub assignments: Vec<usize>,
}

pub fn cluster_report(result: &FcmResult, labels: &[String]) -> Result<ClusterReport> {
    if labels.len() != result.memberships.len() {
        return Err(Error::Shape(format!(
            "{} labels for {} membership rows",
            labels.len(),
            result.memberships.len()
        )));
    }
    let c = result.clusters();
    let assignments = result.hard_assignments();
    let mut counts = vec![0; c];
    let mut label_distribution: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (label, &k) in labels.iter().zip(&assignments) {
        counts[k] += 1;
        label_distribution.entry(label.clone()).or_insert_with(|| vec![0; c])[k] += 1;
    }
    Ok(ClusterReport {
        counts,
        label_distribution,
        assignments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_separated_points() {
        let points = [[1.0, 1.0, 1.0], [9.0, 9.0, 9.0], [9.0, 9.0, 9.0]];
        let result = fcm_fit(&points, &FcmConfig { clusters: 2, ..Default::default() }).unwrap();
        let a = result.hard_assignments();
        assert_ne!(a[0], a[1]);
        assert!(result.memberships[0][a[0]] > 0.999);
        assert!(result.memberships[1][a[1]] > 0.999);
        assert!(dist2(&result.centroids[a[0]], &points[0]).sqrt() < 1e-2);
    }

    #[test]
    fn singular_point_is_one_hot() {
        let centroids = vec![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        assert_eq!(membership_row(&[4.0, 5.0, 6.0], &centroids, 2.0), vec![0.0, 1.0]);
    }

    #[test]
    fn midpoint_is_split_evenly() {
        let result = FcmResult {
            centroids: vec![[2.0, 5.0, 5.0], [8.0, 5.0, 5.0]],
            memberships: vec![],
            fuzzifier: 2.0,
            iterations_run: 0,
            objective_trace: vec![],
        };
        let u = cluster_membership_features(&[5.0, 5.0, 5.0], &result).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-15 && (u[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn config_errors() {
        let pts = [[1.0, 1.0, 1.0]; 5];
        assert!(fcm_fit(&pts, &FcmConfig { clusters: 1, ..Default::default() }).is_err());
        assert!(fcm_fit(&pts, &FcmConfig { fuzzifier: 1.0, ..Default::default() }).is_err());
        assert!(fcm_fit(&pts, &FcmConfig { tolerance: 0.0, ..Default::default() }).is_err());
        assert!(matches!(
            fcm_fit(&pts[..4], &FcmConfig::default()),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn identical_points_are_degenerate_for_silhouette() {
        let pts = vec![[3.0, 3.0, 3.0]; 6];
        let result = FcmResult {
            centroids: vec![[3.0, 3.0, 3.0], [4.0, 4.0, 4.0]],
            memberships: vec![vec![1.0, 0.0]; 6],
            fuzzifier: 2.0,
            iterations_run: 1,
            objective_trace: vec![0.0],
        };
        assert!(matches!(fuzzy_silhouette(&pts, &result, 1.0), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn empty_hard_cluster_is_undefined() {
        let pts = vec![[1.0, 1.0, 1.0], [1.5, 1.0, 1.0], [1.0, 1.5, 1.0]];
        let result = FcmResult {
            centroids: vec![[1.0, 1.0, 1.0], [9.0, 9.0, 9.0]],
            memberships: vec![vec![0.9, 0.1]; 3],
            fuzzifier: 2.0,
            iterations_run: 1,
            objective_trace: vec![0.0],
        };
        assert!(matches!(fuzzy_silhouette(&pts, &result, 1.0), Err(Error::UndefinedIndex(_))));
    }

    #[test]
    fn empty_sweep_range() {
        let pts = vec![[1.0, 1.0, 1.0]; 5];
        #[allow(clippy::reversed_empty_ranges)]
        let rows = sweep_clusters(&pts, 4..=3, &FcmConfig::default(), 1.0).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn report_counts_sum_to_n() {
        let pts = [[1.0, 1.0, 1.0], [1.2, 1.0, 1.0], [8.0, 8.0, 8.0], [8.1, 8.0, 8.0]];
        let result = fcm_fit(&pts, &FcmConfig { clusters: 2, ..Default::default() }).unwrap();
        let labels: Vec<String> = ["a", "a", "b", "b"].iter().map(|s| s.to_string()).collect();
        let report = cluster_report(&result, &labels).unwrap();
        assert_eq!(report.counts.iter().sum::<usize>(), 4);
        assert_eq!(report.label_distribution["a"].iter().sum::<usize>(), 2);
    }
}
