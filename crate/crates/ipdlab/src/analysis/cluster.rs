//! Performance clustering: rank-threshold labels and k-means with
//! silhouette-selected k.

use rand::Rng;
use thiserror::Error;

use crate::seeding::stream;

const KMEANS_STREAM_TAG: u64 = 0x6b6d_6561_6e73; // "kmeans"

/// The three rank thresholds used for the binary labelings.
pub const THRESHOLDS: [f64; 3] = [0.05, 0.25, 0.50];

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("need at least {need} distinct points, got {have}")]
    TooFewPoints { need: usize, have: usize },
    #[error("all points identical; clustering is degenerate")]
    Degenerate,
}

/// Label 1 iff the normalized rank is at or below the threshold.
pub fn threshold_labels(rs: &[f64], theta: f64) -> Vec<u8> {
    rs.iter().map(|&r| u8::from(r <= theta)).collect()
}

/// Standardize each coordinate to zero mean, unit variance in place.
/// Zero-variance coordinates are left centered.
pub fn standardize(points: &mut [[f64; 2]]) {
    let n = points.len() as f64;
    for d in 0..2 {
        let mean = points.iter().map(|p| p[d]).sum::<f64>() / n;
        let var = points.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        for p in points.iter_mut() {
            p[d] -= mean;
            if sd > 0.0 {
                p[d] /= sd;
            }
        }
    }
}

fn dist2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn kmeans_once(
    points: &[[f64; 2]],
    k: usize,
    rng: &mut rand_chacha::ChaCha12Rng,
) -> (Vec<usize>, f64) {
    // k-means++ seeding.
    let mut centers: Vec<[f64; 2]> = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.gen_range(0..points.len())
        };
        centers.push(points[idx]);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, centers.last().unwrap()));
        }
    }

    let mut labels = vec![0usize; points.len()];
    for _ in 0..300 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| {
                    dist2(p, &centers[a])
                        .partial_cmp(&dist2(p, &centers[b]))
                        .unwrap()
                })
                .unwrap();
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            sums[labels[i]][0] += p[0];
            sums[labels[i]][1] += p[1];
            counts[labels[i]] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| dist2(p, &centers[l]))
        .sum();
    (labels, inertia)
}

/// Seeded k-means with restarts; the restart with minimal inertia wins, ties
/// to the earliest restart.
pub fn kmeans(
    points: &[[f64; 2]],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<(Vec<usize>, f64), ClusterError> {
    let mut distinct = points.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(ClusterError::Degenerate);
    }
    if distinct.len() < k {
        return Err(ClusterError::TooFewPoints {
            need: k,
            have: distinct.len(),
        });
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for restart in 0..restarts.max(1) {
        let mut rng = stream(&[KMEANS_STREAM_TAG, seed, k as u64, restart as u64]);
        let (labels, inertia) = kmeans_once(points, k, &mut rng);
        if best.as_ref().map(|(_, bi)| inertia < *bi).unwrap_or(true) {
            best = Some((labels, inertia));
        }
    }
    Ok(best.unwrap())
}

/// Mean silhouette coefficient; singleton clusters score 0.
pub fn mean_silhouette(points: &[[f64; 2]], labels: &[usize], k: usize) -> f64 {
    let n = points.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0f64; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += dist2(&points[i], &points[j]).sqrt();
                counts[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if counts[own] == 0 {
            continue; // singleton: s = 0
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if b.is_finite() {
            total += (b - a) / a.max(b);
        }
    }
    total / n as f64
}

/// Standardize, then pick the k in `k_range` maximizing mean silhouette.
/// Values of k exceeding the distinct-point count are skipped.
pub fn kmeans_silhouette(
    points: &[[f64; 2]],
    k_range: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<(Vec<usize>, usize), ClusterError> {
    let mut scaled = points.to_vec();
    standardize(&mut scaled);
    let mut best: Option<(Vec<usize>, usize, f64)> = None;
    let mut degenerate = false;
    for k in k_range {
        if k < 2 {
            continue;
        }
        match kmeans(&scaled, k, seed, 10) {
            Ok((labels, _)) => {
                let s = mean_silhouette(&scaled, &labels, k);
                if best.as_ref().map(|(_, _, bs)| s > *bs).unwrap_or(true) {
                    best = Some((labels, k, s));
                }
            }
            Err(ClusterError::TooFewPoints { .. }) => continue,
            Err(ClusterError::Degenerate) => {
                degenerate = true;
                break;
            }
        }
    }
    match best {
        Some((labels, k, _)) => Ok((labels, k)),
        None if degenerate => Err(ClusterError::Degenerate),
        None => Err(ClusterError::TooFewPoints {
            need: 2,
            have: points.len(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_labels_match_counting_oracle() {
        let rs = vec![0.0, 0.05, 0.06, 0.3, 0.5, 0.51, 1.0];
        assert_eq!(threshold_labels(&rs, 0.05), vec![1, 1, 0, 0, 0, 0, 0]);
        assert_eq!(threshold_labels(&rs, 0.25), vec![1, 1, 1, 0, 0, 0, 0]);
        assert_eq!(threshold_labels(&rs, 0.50), vec![1, 1, 1, 1, 1, 0, 0]);
    }

    #[test]
    fn half_threshold_is_complementary() {
        let rs: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        let labels = threshold_labels(&rs, 0.5);
        for (&r, &l) in rs.iter().zip(&labels) {
            assert_eq!(l == 1, r <= 0.5);
            assert_eq!(l == 0, r > 0.5);
        }
    }

    fn two_blobs() -> Vec<[f64; 2]> {
        let mut pts = Vec::new();
        for i in 0..30 {
            let jitter = (i % 7) as f64 * 0.01;
            pts.push([0.0 + jitter, 0.0 - jitter]);
            pts.push([10.0 - jitter, 10.0 + jitter]);
        }
        pts
    }

    #[test]
    fn separated_blobs_choose_k2() {
        let pts = two_blobs();
        let (labels, k) = kmeans_silhouette(&pts, 2..=8, 7).unwrap();
        assert_eq!(k, 2);
        // Labels match blob identity up to label swap.
        let first = labels[0];
        for (i, &l) in labels.iter().enumerate() {
            assert_eq!(l == first, i % 2 == 0);
        }
        let mut scaled = pts.clone();
        standardize(&mut scaled);
        assert!(mean_silhouette(&scaled, &labels, 2) > 0.7);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let pts = vec![[1.0, 2.0]; 20];
        assert_eq!(
            kmeans_silhouette(&pts, 2..=8, 0).unwrap_err(),
            ClusterError::Degenerate
        );
    }

    #[test]
    fn restarts_are_deterministic() {
        let pts = two_blobs();
        let a = kmeans(&pts, 3, 42, 1).unwrap();
        let b = kmeans(&pts, 3, 42, 1).unwrap();
        assert_eq!(a, b);
        let c = kmeans(&pts, 3, 42, 10).unwrap();
        let d = kmeans(&pts, 3, 42, 10).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn standardize_affine_invariance() {
        let pts = two_blobs();
        let mut rescaled: Vec<[f64; 2]> = pts.iter().map(|p| [p[0] * 50.0 + 3.0, p[1]]).collect();
        let mut orig = pts.clone();
        standardize(&mut orig);
        standardize(&mut rescaled);
        for (a, b) in orig.iter().zip(&rescaled) {
            approx::assert_abs_diff_eq!(a[0], b[0], epsilon = 1e-9);
            approx::assert_abs_diff_eq!(a[1], b[1], epsilon = 1e-9);
        }
    }

    #[test]
    fn silhouette_in_range() {
        let pts = two_blobs();
        let (labels, _) = kmeans(&pts, 4, 1, 5).unwrap();
        let s = mean_silhouette(&pts, &labels, 4);
        assert!((-1.0..=1.0).contains(&s));
    }
}
