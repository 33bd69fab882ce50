//! Power-based user clustering.
//!
//! Each user is described by the received power it would see through every
//! beam of an over-sampled steering codebook, normalized to unit sum, and
//! the signatures are grouped by k-means.

use num_complex::Complex;
use rand::{Rng, RngCore};

use crate::codebook::{beamforming_gain, Codebook};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Users served by one codebook beam, as indices into the clustered slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserCluster {
    pub id: usize,
    pub members: Vec<usize>,
}

/// Unit-sum power signature of `h` across `sensing`.
pub fn power_signature<T: Real>(h: &[Complex<T>], sensing: &Codebook<T>) -> Result<Vec<T>> {
    let mut sig = sensing.beams().iter().map(|b| beamforming_gain(b, h)).collect::<Result<Vec<T>>>()?;
    let total: T = sig.iter().copied().sum();
    if total > T::zero() {
        for s in &mut sig {
            *s /= total;
        }
    } else {
        let uniform = T::one() / T::from_usize_lossy(sig.len());
        sig.iter_mut().for_each(|s| *s = uniform);
    }
    Ok(sig)
}

fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
fn nearest<T: Real>(point: &[T], centroids: &[Vec<T>]) -> usize {
    let mut best = 0;
    let mut best_d = T::infinity();
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// k-means++ seeding.
fn seed_centroids<T: Real>(points: &[Vec<T>], k: usize, rng: &mut dyn RngCore) -> Vec<Vec<T>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    while centroids.len() < k {
        let d: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[nearest(p, &centroids)]).as_f64()).collect();
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            d.iter()
                .position(|&di| {
                    u -= di;
                    u < 0.0
                })
                .unwrap_or(points.len() - 1)
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[pick].clone());
    }
    centroids
}

fn update_centroids<T: Real>(points: &[Vec<T>], labels: &[usize], centroids: &mut [Vec<T>]) {
    let dim = points[0].len();
    let mut counts = vec![0usize; centroids.len()];
    for c in centroids.iter_mut() {
        c.iter_mut().for_each(|x| *x = T::zero());
    }
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (c, &x) in centroids[l].iter_mut().zip(p) {
            *c += x;
        }
    }
    for (c, &n) in centroids.iter_mut().zip(&counts) {
        if n > 0 {
            let n = T::from_usize_lossy(n);
            c.iter_mut().for_each(|x| *x /= n);
        }
    }
    debug_assert!(centroids.iter().all(|c| c.len() == dim));
}

/// Moves one point into every empty cluster: the member of the currently
/// largest cluster farthest from that cluster's centroid (latest index on
/// ties).
fn repair_empty<T: Real>(points: &[Vec<T>], labels: &mut [usize], centroids: &mut [Vec<T>]) {
    let k = centroids.len();
    loop {
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let largest = (0..k).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).expect("k >= 1");
        let mut far = None;
        let mut far_d = T::neg_infinity();
        for (i, p) in points.iter().enumerate() {
            if labels[i] == largest {
                let d = sq_dist(p, &centroids[largest]);
                if d >= far_d {
                    far = Some(i);
                    far_d = d;
                }
            }
        }
        let i = far.expect("largest cluster has members");
        labels[i] = empty;
        centroids[empty] = points[i].clone();
        update_centroids(points, labels, centroids);
    }
}

/// Plain Lloyd iterations with k-means++ seeding and empty-cluster repair.
/// Returns one label per point.
pub fn kmeans<T: Real>(points: &[Vec<T>], k: usize, max_iterations: usize, rng: &mut dyn RngCore) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k-means needs at least one cluster".into()));
    }
    if points.len() < k {
        return Err(Error::TooFewUsers { users: points.len(), clusters: k });
    }
    let mut centroids = seed_centroids(points, k, rng);
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    repair_empty(points, &mut labels, &mut centroids);
    update_centroids(points, &labels, &mut centroids);
    for _ in 0..max_iterations {
        let mut next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        repair_empty(points, &mut next, &mut centroids);
        if next == labels {
            break;
        }
        labels = next;
        update_centroids(points, &labels, &mut centroids);
    }
    Ok(labels)
}

/// Partitions `channels` into `n` nonempty clusters. Deterministic for a
/// given RNG state.
pub fn cluster_users<T: Real>(
    channels: &[&[Complex<T>]],
    n: usize,
    sensing: &Codebook<T>,
    max_iterations: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<UserCluster>> {
    if channels.len() < n {
        return Err(Error::TooFewUsers { users: channels.len(), clusters: n });
    }
    let points = channels.iter().map(|h| power_signature(h, sensing)).collect::<Result<Vec<_>>>()?;
    let labels = kmeans(&points, n, max_iterations, rng)?;
    let mut clusters: Vec<UserCluster> = (0..n).map(|id| UserCluster { id, members: Vec::new() }).collect();
    for (i, &l) in labels.iter().enumerate() {
        clusters[l].members.push(i);
    }
    Ok(clusters)
}
