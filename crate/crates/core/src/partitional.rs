//! Lloyd's K-means, used to over-cluster the data into basal clusters.

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::model::{sq_euclidean, Clustering, Dataset};
use crate::rng::rng_from;

pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub clustering: Clustering,
    /// Row `c` is the mean of the points with id `c + 1`.
    pub centroids: Vec<Vec<f64>>,
    pub wss: f64,
    pub iterations: usize,
    /// Objective after every (assign, update) pass.
    pub wss_trace: Vec<f64>,
}

/// Lloyd iterations from `k` distinct data points drawn uniformly at random.
///
/// Stops when the assignment is unchanged or after [`MAX_ITERATIONS`].
/// Nearest-centroid ties go to the lowest cluster id. A cluster left empty by
/// the assignment step is refilled with the point farthest from its own
/// centroid, so the result always has exactly `k` nonempty clusters.
pub fn kmeans(data: &Dataset, k: usize, seed: u64) -> Result<KMeansResult> {
    let n = data.n();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k-means with k = {k} on {n} points")));
    }
    let mut rng = rng_from(seed);
    let mut centroids: Vec<Vec<f64>> = sample(&mut rng, n, k)
        .into_iter()
        .map(|i| data.point(i).to_vec())
        .collect();

    let mut assignment = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut next: Vec<usize> = data.points().map(|p| nearest(p, &centroids)).collect();
        centroids = means(data, &next, k);
        if repair_empty(data, &mut next, &mut centroids) {
            centroids = means(data, &next, k);
        }
        trace.push(objective(data, &next, &centroids));
        if next == assignment {
            break;
        }
        assignment = next;
    }

    let clustering = Clustering::from_members(n, &group(&assignment, k))?;
    let wss = *trace.last().expect("at least one iteration");
    Ok(KMeansResult {
        clustering,
        centroids,
        wss,
        iterations,
        wss_trace: trace,
    })
}

/// Within-cluster sum of squared distances to each cluster's mean.
pub fn wss(data: &Dataset, clustering: &Clustering) -> f64 {
    assert_eq!(data.n(), clustering.n(), "clustering does not cover the dataset");
    let assignment: Vec<usize> = clustering.assignment().iter().map(|c| c - 1).collect();
    let centroids = means(data, &assignment, clustering.k());
    objective(data, &assignment, &centroids)
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, mu) in centroids.iter().enumerate() {
        let d = sq_euclidean(p, mu);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Cluster means; an empty cluster keeps a NaN row until repaired.
fn means(data: &Dataset, assignment: &[usize], k: usize) -> Vec<Vec<f64>> {
    let m = data.m();
    let mut sums = vec![vec![0.0; m]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in data.points().zip(assignment) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (s, &cnt) in sums.iter_mut().zip(&counts) {
        let inv = 1.0 / cnt as f64;
        s.iter_mut().for_each(|v| *v *= inv);
    }
    sums
}

fn repair_empty(data: &Dataset, assignment: &mut [usize], centroids: &mut [Vec<f64>]) -> bool {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &c in assignment.iter() {
        counts[c] += 1;
    }
    let mut repaired = false;
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        repaired = true;
        let mut far = None;
        let mut far_d = -1.0;
        for (i, p) in data.points().enumerate() {
            let c = assignment[i];
            if counts[c] < 2 {
                continue;
            }
            let d = sq_euclidean(p, &centroids[c]);
            if d > far_d {
                far = Some(i);
                far_d = d;
            }
        }
        let i = far.expect("k <= n leaves a donor cluster with two or more points");
        let donor = assignment[i];
        assignment[i] = empty;
        counts[donor] -= 1;
        counts[empty] = 1;
        centroids[empty] = data.point(i).to_vec();
        // donor mean without point i
        let cnt = counts[donor] as f64;
        for (mu, x) in centroids[donor].iter_mut().zip(data.point(i)) {
            *mu = (*mu * (cnt + 1.0) - x) / cnt;
        }
    }
    repaired
}

fn objective(data: &Dataset, assignment: &[usize], centroids: &[Vec<f64>]) -> f64 {
    data.points()
        .zip(assignment)
        .map(|(p, &c)| sq_euclidean(p, &centroids[c]))
        .sum()
}

fn group(assignment: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); k];
    for (i, &c) in assignment.iter().enumerate() {
        out[c].push(i);
    }
    out
}
