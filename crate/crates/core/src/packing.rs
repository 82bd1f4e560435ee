//! Finite metric-measure spaces and annuli with pairwise disjoint doubles.
//!
//! The search grows mass-capturing annuli around sampled centres. Each new
//! annulus is placed in a radial gap free of previously claimed points, so
//! its double never meets an earlier double. Every result is re-checked by a
//! brute-force verifier that does not share code with the search.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cutoff::Annulus;
use crate::error::{Error, Result};
use crate::geometry::{fs_distance, unit_distance, ProjectivePoint};

/// Theoretical packing constant for `CP^m`: `c = 1/(8·N^12)` with `N = 9^{2m}`.
pub fn theoretical_c(m: usize) -> f64 {
    let n = 9f64.powi(2 * m as i32);
    1.0 / (8.0 * n.powi(12))
}

/// Analytic covering constant of `CP^m`.
pub fn analytic_covering_constant(m: usize) -> u64 {
    9u64.pow(2 * m as u32)
}

/// A point of a metric space with a flat coordinate encoding.
pub trait MetricPoint: Clone + Send + Sync + Serialize + DeserializeOwned {
    fn distance(&self, other: &Self) -> f64;
    fn to_coordinates(&self) -> Vec<f64>;
    fn from_coordinates(coords: &[f64]) -> Result<Self>;
    /// Same point, in a representation that is cheaper to measure.
    fn normalized(self) -> Self {
        self
    }
    fn coordinate_names(dim: usize) -> Vec<String>;
    fn coordinate_len(&self) -> usize {
        self.to_coordinates().len()
    }
}

fn is_unit(p: &ProjectivePoint) -> bool {
    let s: f64 = p.coords().iter().map(|z| z.norm_sqr()).sum();
    (s - 1.0).abs() < 1e-13
}

impl MetricPoint for ProjectivePoint {
    fn distance(&self, other: &Self) -> f64 {
        if self.dim() == other.dim() && is_unit(self) && is_unit(other) {
            unit_distance(self.coords(), other.coords())
        } else {
            fs_distance(self, other).unwrap_or(f64::NAN)
        }
    }

    fn to_coordinates(&self) -> Vec<f64> {
        self.coords().iter().flat_map(|z| [z.re, z.im]).collect()
    }

    fn from_coordinates(coords: &[f64]) -> Result<Self> {
        if !coords.len().is_multiple_of(2) {
            return Err(Error::Parse("projective coordinates come in re,im pairs".into()));
        }
        ProjectivePoint::new(
            coords
                .chunks(2)
                .map(|c| num_complex::Complex64::new(c[0], c[1]))
                .collect(),
        )
    }

    fn normalized(self) -> Self {
        if is_unit(&self) {
            return self;
        }
        ProjectivePoint::new(self.unit()).expect("unit representative")
    }

    fn coordinate_names(dim: usize) -> Vec<String> {
        (0..dim / 2).flat_map(|i| [format!("re{i}"), format!("im{i}")]).collect()
    }
}

/// A point of Euclidean space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EuclideanPoint(pub Vec<f64>);

impl MetricPoint for EuclideanPoint {
    fn distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn to_coordinates(&self) -> Vec<f64> {
        self.0.clone()
    }

    fn from_coordinates(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parse("Euclidean point needs finite coordinates".into()));
        }
        Ok(Self(coords.to_vec()))
    }

    fn coordinate_names(dim: usize) -> Vec<String> {
        (0..dim).map(|i| format!("x{i}")).collect()
    }
}

/// Atoms with nonnegative masses approximating a measure `μ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightedPointCloud<P = ProjectivePoint> {
    points: Vec<P>,
    weights: Vec<f64>,
    total: f64,
}

impl<P: MetricPoint> WeightedPointCloud<P> {
    pub fn new(points: Vec<P>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::OutOfRange("weights must be finite and nonnegative".into()));
        }
        let len = points[0].coordinate_len();
        if points.iter().any(|p| p.coordinate_len() != len) {
            return Err(Error::InvalidPoint("points of mixed dimension".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::OutOfRange("at least one weight must be positive".into()));
        }
        let points = points.into_iter().map(MetricPoint::normalized).collect();
        Ok(Self { points, weights, total })
    }

    /// Equal weights `1/n`.
    pub fn uniform(points: Vec<P>) -> Result<Self> {
        let n = points.len().max(1);
        Self::new(points, vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `μ(X)`.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    /// Multiplies every weight by `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.points.clone(), self.weights.iter().map(|w| w * lambda).collect())
    }

    pub fn to_csv(&self) -> String {
        let dim = self.points[0].coordinate_len();
        let mut out = String::from("index,");
        out += &P::coordinate_names(dim).join(",");
        out += ",weight\n";
        for (i, (p, w)) in self.points.iter().zip(&self.weights).enumerate() {
            let _ = write!(out, "{i}");
            for c in p.to_coordinates() {
                let _ = write!(out, ",{c:.17e}");
            }
            let _ = writeln!(out, ",{w:.17e}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (ln == 0 && line.starts_with("index")) {
                continue;
            }
            let vals = line
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("cloud CSV line {}: bad number '{t}'", ln + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            if vals.len() < 3 {
                return Err(Error::Parse(format!("cloud CSV line {}: too few columns", ln + 1)));
            }
            points.push(P::from_coordinates(&vals[1..vals.len() - 1])?);
            weights.push(vals[vals.len() - 1]);
        }
        Self::new(points, weights)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path)?)
    }

    fn sample_index<R: Rng>(&self, rng: &mut R) -> usize {
        let mut x = rng.random::<f64>() * self.total;
        for (i, w) in self.weights.iter().enumerate() {
            x -= w;
            if x < 0.0 {
                return i;
            }
        }
        self.weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
    }
}

/// `μ(A)` or `μ(2A)`: total weight of points with `inner ≤ d < outer`.
pub fn annulus_measure<P: MetricPoint>(cloud: &WeightedPointCloud<P>, a: &Annulus<P>, doubled: bool) -> f64 {
    let a = if doubled { a.doubled() } else { a.clone() };
    cloud
        .points
        .iter()
        .zip(&cloud.weights)
        .filter(|(p, _)| a.contains_distance(a.center.distance(p)))
        .map(|(_, w)| *w)
        .sum()
}

/// Empirical covering constant: the largest number of `r/2`-balls that a
/// greedy cover needs for a sampled ball `B(p, r)`, over `trials` samples.
pub fn covering_number<P: MetricPoint>(cloud: &WeightedPointCloud<P>, trials: usize, seed: u64) -> Result<usize> {
    const MAX_CANDIDATES: usize = 600;
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 1;
    for _ in 0..trials.max(1) {
        let c = cloud.sample_index(&mut rng);
        let far = cloud.sample_index(&mut rng);
        let r = cloud.points[c].distance(&cloud.points[far]);
        if r <= 0.0 {
            continue;
        }
        let inside: Vec<usize> = (0..cloud.len())
            .filter(|&i| cloud.points[c].distance(&cloud.points[i]) < r)
            .collect();
        let mut cand = inside.clone();
        if cand.len() > MAX_CANDIDATES {
            let picked = rand::seq::index::sample(&mut rng, cand.len(), MAX_CANDIDATES);
            let mut picked: Vec<usize> = picked.into_iter().map(|i| cand[i]).collect();
            picked.sort_unstable();
            cand = picked;
        }
        let half = r / 2.0;
        let cover: Vec<Vec<usize>> = cand
            .par_iter()
            .map(|&q| {
                (0..inside.len())
                    .filter(|&j| cloud.points[q].distance(&cloud.points[inside[j]]) < half)
                    .collect()
            })
            .collect();
        let mut covered = vec![false; inside.len()];
        let mut left = inside.len();
        let mut count = 0;
        while left > 0 {
            let (bi, gain) = cover
                .iter()
                .enumerate()
                .map(|(i, s)| (i, s.iter().filter(|&&j| !covered[j]).count()))
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .unwrap_or((0, 0));
            count += 1;
            if gain > 0 {
                for &j in &cover[bi] {
                    if !covered[j] {
                        covered[j] = true;
                        left -= 1;
                    }
                }
            } else {
                // Centre a ball at the first uncovered point.
                let j0 = covered.iter().position(|c| !c).expect("uncovered point");
                let q = &cloud.points[inside[j0]];
                for j in 0..inside.len() {
                    if !covered[j] && q.distance(&cloud.points[inside[j]]) < half {
                        covered[j] = true;
                        left -= 1;
                    }
                }
            }
        }
        best = best.max(count);
    }
    Ok(best)
}

/// Search parameters for [`pack_annuli_with`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PackingOptions {
    /// First per-annulus capture fraction; halved until it reaches `c_target`.
    pub capture_start: f64,
    /// Upper bound on outer radii (exclusive).
    pub max_outer: Option<f64>,
    pub max_candidates: usize,
    /// Grow each annulus into the free space left by the others.
    pub inflate: bool,
    pub seed: u64,
}

impl Default for PackingOptions {
    fn default() -> Self {
        Self {
            capture_start: 0.5,
            max_outer: None,
            max_candidates: 512,
            inflate: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PackingResult<P = ProjectivePoint> {
    pub annuli: Vec<Annulus<P>>,
    /// `μ(A_i)`.
    pub measures: Vec<f64>,
    /// `μ(2A_i)`.
    pub doubled_measures: Vec<f64>,
    pub total: f64,
    pub k: usize,
    /// `min_i μ(A_i)·k/μ(X)`, zero when fewer than `k` annuli were found.
    pub achieved_fraction: f64,
    pub target_fraction: f64,
    /// Per-annulus capture level that produced this result.
    pub capture: f64,
    pub satisfied: bool,
}

impl<P: MetricPoint> PackingResult<P> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct CenterData {
    order: Vec<usize>,
    dist: Vec<f64>,
    /// `prefix[j]` = weight of the `j` nearest points.
    prefix: Vec<f64>,
}

impl CenterData {
    fn mass_below(&self, r: f64) -> f64 {
        self.prefix[self.dist.partition_point(|&d| d < r)]
    }
}

struct Choice {
    center: usize,
    inner: f64,
    outer: f64,
    consumed: f64,
}

/// Best annulus around one centre whose double avoids every claimed point.
fn best_in_center(c: &CenterData, claimed: &[bool], target: f64, cap: f64) -> Option<(f64, f64, f64)> {
    let n = c.dist.len();
    let mut best: Option<(f64, f64, f64)> = None;
    let mut lower: Option<f64> = None;
    let mut j = 0;
    loop {
        // Next claimed distance at or after position j.
        let mut k = j;
        while k < n && !claimed[c.order[k]] {
            k += 1;
        }
        let upper = if k < n { c.dist[k] } else { f64::INFINITY };
        if let Some(opt) = fit_gap(c, lower, upper, target, cap) {
            if best.is_none_or(|b| opt.2 < b.2) {
                best = Some(opt);
            }
        }
        if k >= n {
            break;
        }
        lower = Some(c.dist[k]);
        j = k + 1;
        while j < n && c.dist[j] == c.dist[k] {
            j += 1;
        }
    }
    best
}

/// Smallest annulus `[r, R)` in the free radial gap `(lower, upper)`
/// capturing `target` mass, with `2A` inside the gap.
fn fit_gap(c: &CenterData, lower: Option<f64>, upper: f64, target: f64, cap: f64) -> Option<(f64, f64, f64)> {
    let inner = match lower {
        None => 0.0,
        Some(a) => {
            let s = c.dist.partition_point(|&d| d <= 2.0 * a);
            let next = *c.dist.get(s)?;
            (2.0 * a + next) / 2.0
        }
    };
    let limit = (upper / 2.0).min(cap);
    if !(limit > inner) {
        return None;
    }
    let s = c.dist.partition_point(|&d| d < inner);
    let need = c.prefix[s] + target;
    // First j with prefix[j+1] ≥ need.
    let j = c.prefix.partition_point(|&p| p < need).checked_sub(1)?;
    if j >= c.dist.len() || c.dist[j] >= limit {
        return None;
    }
    let dj = c.dist[j];
    let outer = match c.dist[j + 1..].iter().find(|&&d| d > dj) {
        Some(&next) => ((dj + next) / 2.0).min(limit),
        None if limit.is_finite() => limit,
        None => dj + 1e-9,
    };
    if !(outer > dj && outer > inner) {
        return None;
    }
    let consumed = c.mass_below(2.0 * outer) - c.mass_below(inner / 2.0);
    Some((inner, outer, consumed))
}

fn greedy(
    centers: &[CenterData],
    candidates: &[usize],
    n: usize,
    k: usize,
    target: f64,
    cap: f64,
) -> Vec<Choice> {
    let mut claimed = vec![false; n];
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let pick = centers
            .par_iter()
            .enumerate()
            .filter_map(|(ci, c)| best_in_center(c, &claimed, target, cap).map(|o| (ci, o)))
            .min_by(|a, b| a.1 .2.total_cmp(&b.1 .2).then(a.0.cmp(&b.0)));
        let Some((ci, (inner, outer, consumed))) = pick else {
            break;
        };
        let c = &centers[ci];
        for (idx, d) in c.order.iter().zip(&c.dist) {
            if *d >= inner / 2.0 && *d < 2.0 * outer {
                claimed[*idx] = true;
            }
        }
        chosen.push(Choice {
            center: candidates[ci],
            inner,
            outer,
            consumed,
        });
    }
    chosen
}

/// [`pack_annuli_with`] under default options.
pub fn pack_annuli<P: MetricPoint>(cloud: &WeightedPointCloud<P>, k: usize, c_target: f64) -> Result<PackingResult<P>> {
    pack_annuli_with(cloud, k, c_target, &PackingOptions::default())
}

/// `k` annuli with pairwise disjoint doubles and `μ(A_i) ≥ c_target·μ(X)/k`.
///
/// When the target cannot be met the best attempt is returned with
/// `satisfied = false`.
pub fn pack_annuli_with<P: MetricPoint>(
    cloud: &WeightedPointCloud<P>,
    k: usize,
    c_target: f64,
    opts: &PackingOptions,
) -> Result<PackingResult<P>> {
    if k == 0 {
        return Err(Error::OutOfRange("k must be positive".into()));
    }
    if !(c_target > 0.0 && c_target <= 1.0) {
        return Err(Error::OutOfRange(format!("c_target must lie in (0, 1], got {c_target}")));
    }
    let limit = c_target * cloud.total / (2.0 * k as f64);
    let max_weight = cloud.max_weight();
    if max_weight > limit * (1.0 + 1e-9) {
        return Err(Error::AtomTooHeavy { max_weight, limit });
    }
    let cap = opts.max_outer.unwrap_or(f64::INFINITY);
    let n = cloud.len();

    if k == 1 {
        let p = &cloud.points[0];
        let far = cloud.points.iter().map(|q| p.distance(q)).fold(0.0, f64::max);
        let outer = far + 1e-9;
        if outer < cap {
            let a = Annulus::new(p.clone(), 0.0, outer)?;
            return Ok(finish(cloud, vec![a], k, c_target, 1.0));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut candidates: Vec<usize> = if n <= opts.max_candidates {
        (0..n).collect()
    } else {
        rand::seq::index::sample_weighted(&mut rng, n, |i| cloud.weights[i] + 1e-300, opts.max_candidates)
            .map_err(|e| Error::OutOfRange(format!("candidate sampling: {e}")))?
            .into_iter()
            .collect()
    };
    candidates.sort_unstable();
    let centers: Vec<CenterData> = candidates
        .par_iter()
        .map(|&ci| {
            let p = &cloud.points[ci];
            let mut order: Vec<usize> = (0..n).collect();
            let d: Vec<f64> = cloud.points.iter().map(|q| p.distance(q)).collect();
            order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
            let dist: Vec<f64> = order.iter().map(|&i| d[i]).collect();
            let mut prefix = Vec::with_capacity(n + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for &i in &order {
                acc += cloud.weights[i];
                prefix.push(acc);
            }
            CenterData { order, dist, prefix }
        })
        .collect();

    let mut levels = Vec::new();
    let mut capture = opts.capture_start.max(c_target);
    while capture > c_target {
        levels.push(capture);
        capture /= 2.0;
    }
    levels.push(c_target);

    let mut best: Option<(Vec<Choice>, f64)> = None;
    for &capture in &levels {
        let target = capture * cloud.total / k as f64;
        let chosen = greedy(&centers, &candidates, n, k, target, cap);
        let done = chosen.len() == k;
        if best.as_ref().is_none_or(|(b, _)| chosen.len() > b.len()) || done {
            best = Some((chosen, capture));
        }
        if done {
            break;
        }
    }
    let (chosen, capture) = best.expect("at least one level");
    let mut annuli = chosen
        .iter()
        .map(|c| {
            debug_assert!(c.consumed >= 0.0);
            Annulus::new(cloud.points[c.center].clone(), c.inner, c.outer)
        })
        .collect::<Result<Vec<_>>>()?;
    if opts.inflate {
        inflate(cloud, &mut annuli, cap);
    }
    Ok(finish(cloud, annuli, k, c_target, capture))
}

/// Enlarges outer radii, lightest annulus first, keeping every double clear of
/// the other doubles and inside the Voronoi cell of its centre.
fn inflate<P: MetricPoint>(cloud: &WeightedPointCloud<P>, annuli: &mut [Annulus<P>], cap: f64) {
    let n = cloud.len();
    let dist: Vec<Vec<f64>> = annuli
        .par_iter()
        .map(|a| cloud.points.iter().map(|q| a.center.distance(q)).collect())
        .collect();
    let mass = |i: usize, a: &Annulus<P>| -> f64 {
        (0..n).filter(|&j| a.contains_distance(dist[i][j])).map(|j| cloud.weights[j]).sum()
    };
    let owner: Vec<usize> = (0..n)
        .map(|j| {
            (0..annuli.len())
                .min_by(|&a, &b| dist[a][j].total_cmp(&dist[b][j]).then(a.cmp(&b)))
                .unwrap_or(0)
        })
        .collect();
    let mut order: Vec<(usize, f64)> = annuli.iter().enumerate().map(|(i, a)| (i, mass(i, a))).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    for (i, _) in order {
        let mut blocked = vec![false; n];
        for (l, other) in annuli.iter().enumerate() {
            if l == i {
                continue;
            }
            let d = other.doubled();
            for j in 0..n {
                if d.contains_distance(dist[l][j]) {
                    blocked[j] = true;
                }
            }
        }
        let half_inner = annuli[i].inner / 2.0;
        let nearest = (0..n)
            .filter(|&j| (blocked[j] || owner[j] != i) && dist[i][j] >= half_inner)
            .map(|j| dist[i][j])
            .fold(f64::INFINITY, f64::min);
        let far = dist[i].iter().cloned().fold(0.0, f64::max) + 1e-9;
        let outer = (nearest / 2.0).min(far).min(cap);
        if outer > annuli[i].outer {
            annuli[i].outer = outer;
        }
    }
}

fn finish<P: MetricPoint>(
    cloud: &WeightedPointCloud<P>,
    annuli: Vec<Annulus<P>>,
    k: usize,
    c_target: f64,
    capture: f64,
) -> PackingResult<P> {
    let measures: Vec<f64> = annuli.iter().map(|a| annulus_measure(cloud, a, false)).collect();
    let doubled_measures = annuli.iter().map(|a| annulus_measure(cloud, a, true)).collect();
    let achieved_fraction = if annuli.len() < k {
        0.0
    } else {
        measures.iter().cloned().fold(f64::INFINITY, f64::min) * k as f64 / cloud.total
    };
    let mut result = PackingResult {
        annuli,
        measures,
        doubled_measures,
        total: cloud.total,
        k,
        achieved_fraction,
        target_fraction: c_target,
        capture,
        satisfied: false,
    };
    result.satisfied = verify_packing(cloud, &result, c_target).ok();
    result
}

/// Outcome of the brute-force packing check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PackingVerification {
    pub annulus_count_ok: bool,
    pub disjoint: bool,
    pub measures_ok: bool,
    pub min_fraction: f64,
    pub violations: Vec<String>,
}

impl PackingVerification {
    pub fn ok(&self) -> bool {
        self.annulus_count_ok && self.disjoint && self.measures_ok
    }
}

/// Recomputes every measure and scans every pair of doubles on every point.
pub fn verify_packing<P: MetricPoint>(
    cloud: &WeightedPointCloud<P>,
    result: &PackingResult<P>,
    c_target: f64,
) -> PackingVerification {
    let mut violations = Vec::new();
    let k = result.k;
    let annulus_count_ok = result.annuli.len() == k;
    if !annulus_count_ok {
        violations.push(format!("{} annuli for k = {k}", result.annuli.len()));
    }
    let doubles: Vec<Annulus<P>> = result.annuli.iter().map(Annulus::doubled).collect();
    let mut disjoint = true;
    for (pi, p) in cloud.points.iter().enumerate() {
        let inside: Vec<bool> = doubles.iter().map(|d| d.contains_distance(d.center.distance(p))).collect();
        for i in 0..doubles.len() {
            for j in i + 1..doubles.len() {
                if inside[i] && inside[j] {
                    disjoint = false;
                    if violations.len() < 20 {
                        violations.push(format!("point {pi} lies in doubles {i} and {j}"));
                    }
                }
            }
        }
    }
    let bound = c_target * cloud.total / k as f64;
    let mut min_fraction = if annulus_count_ok { f64::INFINITY } else { 0.0 };
    let mut measures_ok = annulus_count_ok;
    for (i, a) in result.annuli.iter().enumerate() {
        let mut mass = 0.0;
        for (p, w) in cloud.points.iter().zip(&cloud.weights) {
            let d = a.center.distance(p);
            if a.inner <= d && d < a.outer {
                mass += w;
            }
        }
        min_fraction = min_fraction.min(mass * k as f64 / cloud.total);
        if mass < bound {
            measures_ok = false;
            violations.push(format!("annulus {i} carries {mass:.6e} < {bound:.6e}"));
        }
    }
    PackingVerification {
        annulus_count_ok,
        disjoint,
        measures_ok,
        min_fraction: if min_fraction.is_finite() { min_fraction } else { 0.0 },
        violations,
    }
}

/// Uniform samples of `CP^m` (normalized Gaussian vectors).
pub fn uniform_projective_cloud(m: usize, n: usize, seed: u64) -> Result<WeightedPointCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    WeightedPointCloud::uniform((0..n).map(|_| ProjectivePoint::random(m, &mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn cluster(center: &ProjectivePoint, n: usize, spread: f64, rng: &mut ChaCha8Rng) -> Vec<ProjectivePoint> {
        (0..n)
            .map(|_| {
                let z: Vec<Complex64> = center
                    .unit()
                    .iter()
                    .map(|c| c + Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * spread)
                    .collect();
                ProjectivePoint::new(z).unwrap()
            })
            .collect()
    }

    #[test]
    fn constants() {
        assert_eq!(analytic_covering_constant(1), 81);
        assert_relative_eq!(1.0 / theoretical_c(1), 8.0 * 81f64.powi(12), max_relative = 1e-14);
    }

    #[test]
    fn single_point_cloud_covering_is_one() {
        let c = WeightedPointCloud::uniform(vec![ProjectivePoint::basis(1, 0)]).unwrap();
        assert_eq!(covering_number(&c, 10, 1).unwrap(), 1);
    }

    #[test]
    fn euclidean_square_covering() {
        let mut pts = Vec::new();
        for i in 0..40 {
            for j in 0..40 {
                pts.push(EuclideanPoint(vec![i as f64 / 39.0, j as f64 / 39.0]));
            }
        }
        let c = WeightedPointCloud::uniform(pts).unwrap();
        let n = covering_number(&c, 20, 3).unwrap();
        assert!((1..=16).contains(&n), "N = {n}");
    }

    #[test]
    fn k1_covers_everything() {
        let cloud = uniform_projective_cloud(1, 500, 5).unwrap();
        let r = pack_annuli(&cloud, 1, 0.5).unwrap();
        assert!(r.satisfied);
        assert!(r.annuli[0].is_ball());
        assert_relative_eq!(r.measures[0], cloud.total(), max_relative = 1e-12);
    }

    #[test]
    fn two_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = ProjectivePoint::basis(1, 0);
        let b = ProjectivePoint::basis(1, 1);
        assert_relative_eq!(fs_distance(&a, &b).unwrap(), FRAC_PI_2);
        let mut pts = cluster(&a, 200, 0.05, &mut rng);
        pts.extend(cluster(&b, 200, 0.05, &mut rng));
        let cloud = WeightedPointCloud::uniform(pts).unwrap();
        let r = pack_annuli(&cloud, 2, 0.25).unwrap();
        assert!(r.satisfied);
        assert!(r.achieved_fraction >= 1.0 - 1e-12, "{}", r.achieved_fraction);
        assert!(r.annuli.iter().all(Annulus::is_ball));

        // Half-space-like annulus around one cluster carries its mass.
        let half = Annulus::new(a.clone(), 0.0, PI / 4.0).unwrap();
        assert_relative_eq!(annulus_measure(&cloud, &half, false), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn uniform_cloud_packs_and_verifies() {
        for (m, n) in [(1, 2000), (2, 3000)] {
            let cloud = uniform_projective_cloud(m, n, 21).unwrap();
            for k in [2, 4, 8] {
                let r = pack_annuli(&cloud, k, 0.01).unwrap();
                let v = verify_packing(&cloud, &r, 0.01);
                assert!(v.ok(), "m={m} k={k}: {:?}", v.violations);
                assert!(r.satisfied);
            }
        }
    }

    #[test]
    fn theoretical_constant_is_satisfied() {
        let cloud = uniform_projective_cloud(1, 1000, 2).unwrap();
        let r = pack_annuli(&cloud, 8, theoretical_c(1)).err();
        // Atoms of mass 1/1000 exceed c/(2k) for the theoretical constant.
        assert!(matches!(r, Some(Error::AtomTooHeavy { .. })));
    }

    #[test]
    fn measure_monotone_under_doubling() {
        let cloud = uniform_projective_cloud(1, 800, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let c = ProjectivePoint::random(1, &mut rng);
            let r = rng.random::<f64>() * 0.5;
            let a = Annulus::new(c, r, r + 0.3).unwrap();
            assert!(annulus_measure(&cloud, &a, false) <= annulus_measure(&cloud, &a, true));
        }
        let empty = Annulus::new(ProjectivePoint::basis(1, 0), 2.0, 3.0).unwrap();
        assert_eq!(annulus_measure(&cloud, &empty, false), 0.0);
    }

    #[test]
    fn deterministic_and_scale_invariant() {
        let cloud = uniform_projective_cloud(1, 1500, 6).unwrap();
        let opts = PackingOptions { seed: 3, max_candidates: 200, ..Default::default() };
        let a = pack_annuli_with(&cloud, 6, 0.01, &opts).unwrap();
        let b = pack_annuli_with(&cloud, 6, 0.01, &opts).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let scaled = cloud.scaled(4.0).unwrap();
        let c = pack_annuli_with(&scaled, 6, 0.01, &opts).unwrap();
        assert_eq!(a.annuli, c.annuli);
        for (x, y) in a.measures.iter().zip(&c.measures) {
            assert_relative_eq!(4.0 * x, *y, max_relative = 1e-12);
        }
    }

    #[test]
    fn max_outer_is_respected() {
        let cloud = uniform_projective_cloud(1, 2000, 12).unwrap();
        let opts = PackingOptions { max_outer: Some(PI / 4.0 - 1e-9), ..Default::default() };
        for k in [1, 3, 10] {
            let r = pack_annuli_with(&cloud, k, 0.01, &opts).unwrap();
            assert!(r.satisfied);
            assert!(r.annuli.iter().all(|a| a.outer < PI / 4.0));
        }
    }

    #[test]
    fn heavy_atom_rejected() {
        let cloud = WeightedPointCloud::new(
            vec![ProjectivePoint::basis(1, 0), ProjectivePoint::basis(1, 1)],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert!(matches!(pack_annuli(&cloud, 2, 0.5), Err(Error::AtomTooHeavy { .. })));
    }

    #[test]
    fn verifier_catches_overlap() {
        let cloud = uniform_projective_cloud(1, 400, 1).unwrap();
        let c = ProjectivePoint::basis(1, 0);
        let bad = PackingResult {
            annuli: vec![
                Annulus::new(c.clone(), 0.0, 0.3).unwrap(),
                Annulus::new(c, 0.35, 0.6).unwrap(),
            ],
            measures: vec![0.0; 2],
            doubled_measures: vec![0.0; 2],
            total: 1.0,
            k: 2,
            achieved_fraction: 1.0,
            target_fraction: 0.01,
            capture: 0.5,
            satisfied: true,
        };
        let v = verify_packing(&cloud, &bad, 0.01);
        assert!(!v.disjoint);
        assert!(!v.ok());
    }

    #[test]
    fn csv_roundtrip() {
        let cloud = uniform_projective_cloud(2, 30, 7).unwrap();
        let back = WeightedPointCloud::<ProjectivePoint>::from_csv(&cloud.to_csv()).unwrap();
        assert_eq!(back.points(), cloud.points());
        assert_eq!(back.weights(), cloud.weights());
        assert!(WeightedPointCloud::<ProjectivePoint>::from_csv("index,re0\n").is_err());
    }
}
