//! Independent reference implementations and shared property checks.
#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use shc_core::ek::{estimate_k_from_dissimilarity, Recount};
use shc_core::eval::accuracy_index;
use shc_core::shc::{shc_cluster, EnsembleConfig, KlRule, ShcConfig};
use shc_core::{
    cut, kmeans, lifetimes, single_linkage, wss, Clustering, Dataset, DissimilarityKind, DissimilarityMatrix,
    SetDissimilarity,
};

/// Clusters as sets of sorted member lists, independent of ids.
pub fn partition(c: &Clustering) -> BTreeSet<Vec<usize>> {
    c.members().into_iter().collect()
}

/// Textbook single linkage: at every step scan all pairs of current
/// clusters and all their cross pairs for the smallest distance.
/// Returns the merge heights and the partition after every merge.
pub fn naive_single_linkage(d: &DissimilarityMatrix) -> (Vec<f64>, Vec<BTreeSet<Vec<usize>>>) {
    let n = d.n();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut heights = Vec::new();
    let mut levels = Vec::new();
    while clusters.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut m = f64::INFINITY;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        m = m.min(d.get(i, j));
                    }
                }
                if m < best.0 {
                    best = (m, a, b);
                }
            }
        }
        let (h, a, b) = best;
        let moved = clusters.remove(b);
        clusters[a].extend(moved);
        clusters[a].sort_unstable();
        heights.push(h);
        levels.push(clusters.iter().cloned().collect());
    }
    (heights, levels)
}

/// Count of differing entries for every pair of 0/1 rows.
pub fn brute_hamming(rows: &[Vec<u8>]) -> Vec<f64> {
    let n = rows.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = rows[i].iter().zip(&rows[j]).filter(|(a, b)| a != b).count() as f64;
        }
    }
    out
}

/// Sample quantile by sorting and interpolating at the 1-based position
/// `h = (N - 1) p + 1`.
pub fn quantile_oracle(values: &[f64], p: f64) -> f64 {
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let h = (x.len() - 1) as f64 * p + 1.0;
    let lo = h.floor() as usize;
    if lo >= x.len() {
        return x[x.len() - 1];
    }
    x[lo - 1] + (h - lo as f64) * (x[lo] - x[lo - 1])
}

pub fn dataset(points: &[Vec<f64>]) -> Dataset {
    Dataset::new("prop", points, None).expect("finite points")
}

pub fn euclidean(points: &[Vec<f64>]) -> DissimilarityMatrix {
    DissimilarityMatrix::euclidean(&dataset(points))
}

pub fn full_matrix(n: usize, upper: &[f64]) -> DissimilarityMatrix {
    let mut v = vec![0.0; n * n];
    let mut it = upper.iter();
    for i in 0..n {
        for j in i + 1..n {
            let x = *it.next().expect("enough entries");
            v[i * n + j] = x;
            v[j * n + i] = x;
        }
    }
    DissimilarityMatrix::from_full(n, v, DissimilarityKind::Precomputed).expect("valid matrix")
}

pub fn points(n: std::ops::RangeInclusive<usize>, m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, m), n)
}

pub fn labels(n: usize, k: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1..=k, n)
}

/// One-hot rows for `b` random clusterings of `n` points.
pub fn membership_rows() -> impl Strategy<Value = (Vec<Vec<u8>>, Vec<usize>, Vec<Vec<usize>>)> {
    (2usize..12, 1usize..6)
        .prop_flat_map(|(n, b)| prop::collection::vec(prop::collection::vec(1usize..5, n), b))
        .prop_map(|raw| {
            let clusterings: Vec<Clustering> = raw.iter().map(|ids| Clustering::from_labels(ids).unwrap()).collect();
            let n = clusterings[0].n();
            let sizes: Vec<usize> = clusterings.iter().map(Clustering::k).collect();
            let mut rows = vec![Vec::new(); n];
            for c in &clusterings {
                for (i, row) in rows.iter_mut().enumerate() {
                    row.extend((1..=c.k()).map(|id| (c.cluster_of(i) == id) as u8));
                }
            }
            let ids = clusterings.iter().map(|c| c.assignment().to_vec()).collect();
            (rows, sizes, ids)
        })
}

// Property checks shared between the property suite and the acceptance run.

pub fn lloyd_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, usize, u64)> {
    points(3..=40, 2).prop_flat_map(|p| {
        let n = p.len();
        (Just(p), 1..=n, any::<u64>())
    })
}

pub fn check_lloyd_monotone((pts, k, seed): (Vec<Vec<f64>>, usize, u64)) -> Result<(), TestCaseError> {
    let data = dataset(&pts);
    let r = kmeans(&data, k, seed).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for w in r.wss_trace.windows(2) {
        prop_assert!(w[1] <= w[0] + 1e-9, "objective rose from {} to {}", w[0], w[1]);
    }
    prop_assert_eq!(r.clustering.k(), k);
    prop_assert!((wss(&data, &r.clustering) - r.wss).abs() <= 1e-9 * (1.0 + r.wss));
    Ok(())
}

pub fn ai_strategy() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, Vec<usize>)> {
    (1usize..30, 1usize..6, 1usize..6).prop_flat_map(|(n, kp, kt)| {
        (
            labels(n, kp),
            labels(n, kt),
            Just((1..=8).collect::<Vec<usize>>()).prop_shuffle(),
        )
    })
}

pub fn check_ai_permutation((pred, truth, perm): (Vec<usize>, Vec<usize>, Vec<usize>)) -> Result<(), TestCaseError> {
    let truth = Clustering::from_labels(&truth).unwrap();
    let pred = Clustering::from_labels(&pred).unwrap();
    let base = accuracy_index(&pred, truth.assignment()).unwrap();
    let relabel = |c: &Clustering| -> Vec<usize> { c.assignment().iter().map(|&id| perm[id - 1]).collect() };
    let pred_perm = Clustering::from_labels(&relabel(&pred)).unwrap();
    prop_assert_eq!(accuracy_index(&pred_perm, truth.assignment()).unwrap(), base);
    prop_assert_eq!(accuracy_index(&pred, &relabel(&truth)).unwrap(), base);
    prop_assert!((0.0..=1.0).contains(&base));
    let largest = *truth.sizes().iter().max().unwrap() as f64 / truth.n() as f64;
    prop_assert!(accuracy_index(&Clustering::single(truth.n()), truth.assignment()).unwrap() >= largest);
    Ok(())
}

pub fn nesting_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, bool, usize)> {
    (points(4..=25, 2), any::<bool>(), 1usize..4)
}

/// Cuts of the dendrogram nest for both kinds, over singleton or grouped
/// leaves.
pub fn check_nesting((pts, percentile, group): (Vec<Vec<f64>>, bool, usize)) -> Result<(), TestCaseError> {
    let d = euclidean(&pts);
    let items: Vec<Vec<usize>> = (0..pts.len())
        .collect::<Vec<_>>()
        .chunks(group)
        .map(|c| c.to_vec())
        .collect();
    if items.len() < 2 {
        return Ok(());
    }
    let kind = if percentile {
        SetDissimilarity::PERCENTILE20
    } else {
        SetDissimilarity::Minimum
    };
    let tree = single_linkage(&items, &d, kind).unwrap();
    for k in 2..=items.len() {
        let fine = cut(&tree, k).unwrap().clustering;
        let coarse = cut(&tree, k - 1).unwrap().clustering;
        prop_assert_eq!(fine.k(), k);
        prop_assert!(fine.refines(&coarse));
    }
    Ok(())
}

pub fn lifetime_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    points(2..=30, 3)
}

pub fn check_lifetime_sum(pts: Vec<Vec<f64>>) -> Result<(), TestCaseError> {
    let d = euclidean(&pts);
    let leaves: Vec<Vec<usize>> = (0..pts.len()).map(|i| vec![i]).collect();
    let tree = single_linkage(&leaves, &d, SetDissimilarity::Minimum).unwrap();
    prop_assert!(tree.is_monotone());
    let total: f64 = lifetimes(&tree).iter().map(|(_, l)| l).sum();
    let top = tree.heights().fold(0.0, f64::max);
    prop_assert!((total - top).abs() <= 1e-9 * (1.0 + top), "{} vs {}", total, top);
    Ok(())
}

pub fn small_config(k: usize, seed: u64, percentile: bool) -> ShcConfig {
    ShcConfig {
        k,
        ensemble: EnsembleConfig {
            b: 8,
            k_max: 6,
            alpha: 0.05,
            dissim: if percentile {
                SetDissimilarity::PERCENTILE20
            } else {
                SetDissimilarity::Minimum
            },
            kl_rule: KlRule::DunifN6N4,
            seed,
        },
    }
}

pub fn shc_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, usize, u64, bool)> {
    (points(24..=48, 2), 2usize..=6, any::<u64>(), any::<bool>())
}

/// Same seed, same clustering; and always exactly `k` clusters.
pub fn check_shc_determinism_and_k(
    (pts, k, seed, percentile): (Vec<Vec<f64>>, usize, u64, bool),
) -> Result<(), TestCaseError> {
    let data = dataset(&pts);
    let cfg = small_config(k, seed, percentile);
    let (a, ta) = shc_cluster(&data, &cfg).unwrap();
    let (b, tb) = shc_cluster(&data, &cfg).unwrap();
    prop_assert_eq!(&a, &b);
    prop_assert_eq!(ta, tb);
    prop_assert_eq!(a.k(), k);
    Ok(())
}

pub fn ek_strategy() -> impl Strategy<Value = (Vec<f64>, usize)> {
    (4usize..20).prop_flat_map(|n| (prop::collection::vec(0.0f64..50.0, n * (n - 1) / 2), Just(n)))
}

/// With nothing removed the two counts are the two lifetime cluster counts.
pub fn check_ek_zero_alpha((upper, n): (Vec<f64>, usize)) -> Result<(), TestCaseError> {
    let d = full_matrix(n, &upper);
    let r = estimate_k_from_dissimilarity(&d, 0.0, Recount::PerLifetime).unwrap();
    prop_assert_eq!(r.counts, r.lifetime_ks);
    let r = estimate_k_from_dissimilarity(&d, 0.05, Recount::Longest).unwrap();
    prop_assert!(r.estimate >= 1.0 && r.estimate <= n as f64);
    Ok(())
}
