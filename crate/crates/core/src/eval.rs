//! Scoring against ground truth, repeated-run aggregation and the
//! co-association (evidence accumulation) baseline.

use std::fmt;
use std::str::FromStr;

use rand::{Rng as _, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkage::{cut, single_linkage, SetDissimilarity};
use crate::model::{Clustering, Dataset, DissimilarityKind, DissimilarityMatrix};
use crate::partitional::kmeans;
use crate::rng::{derive_seed, rng_from};
use crate::shc::{shc_cluster, EnsembleConfig, ShcConfig};

/// Fraction of points whose cluster maps onto their true class under the
/// best one-to-one matching of cluster ids to class ids.
pub fn accuracy_index(predicted: &Clustering, truth: &[usize]) -> Result<f64> {
    let n = predicted.n();
    if truth.len() != n {
        return Err(Error::invalid(format!("{} truth labels for {n} points", truth.len())));
    }
    let truth = Clustering::from_labels(truth)?;
    let size = predicted.k().max(truth.k());
    let mut table = vec![vec![0i64; size]; size];
    for (&p, &t) in predicted.assignment().iter().zip(truth.assignment()) {
        table[p - 1][t - 1] += 1;
    }
    let matched = max_weight_assignment(&table);
    Ok(matched as f64 / n as f64)
}

/// Largest total weight of a perfect matching in a square matrix
/// (Hungarian method with row/column potentials).
pub fn max_weight_assignment(weights: &[Vec<i64>]) -> i64 {
    let n = weights.len();
    if n == 0 {
        return 0;
    }
    let top = weights.iter().flatten().copied().max().unwrap_or(0);
    // 1-based arrays; column 0 is the virtual start
    let cost = |i: usize, j: usize| top - weights[i - 1][j - 1];
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| weights[row_of[j] - 1][j - 1]).sum()
}

/// Mean and sample standard deviation of per-run accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub mai: f64,
    pub sai: f64,
    pub runs: usize,
    pub per_run_ai: Vec<f64>,
}

impl ScoreReport {
    pub fn from_runs(per_run_ai: Vec<f64>) -> Result<Self> {
        let runs = per_run_ai.len();
        if runs == 0 {
            return Err(Error::invalid("score report needs at least one run"));
        }
        let mai = per_run_ai.iter().sum::<f64>() / runs as f64;
        let sai = if runs == 1 {
            0.0
        } else {
            (per_run_ai.iter().map(|a| (a - mai).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt()
        };
        Ok(Self {
            mai,
            sai,
            runs,
            per_run_ai,
        })
    }
}

/// Runs `method(data, seed)` once per seed and scores every run.
pub fn repeat_and_score<F>(method: F, data: &Dataset, seeds: &[u64]) -> Result<ScoreReport>
where
    F: Fn(&Dataset, u64) -> Result<Clustering> + Sync,
{
    let truth = data
        .labels()
        .ok_or_else(|| Error::MissingLabels(data.name().to_string()))?;
    let score = |&seed: &u64| -> Result<f64> { accuracy_index(&method(data, seed)?, truth) };
    #[cfg(feature = "parallel")]
    let ai: Vec<Result<f64>> = {
        use rayon::prelude::*;
        seeds.par_iter().map(score).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let ai: Vec<Result<f64>> = seeds.iter().map(score).collect();
    ScoreReport::from_runs(ai.into_iter().collect::<Result<Vec<_>>>()?)
}

/// Evidence accumulation: `b` K-means runs with `K ~ DUnif(2, k_max)`, the
/// co-association fractions turned into dissimilarities `1 - c_ij`, then
/// single linkage cut at `k`.
pub fn eac_baseline(data: &Dataset, b: usize, k_max: usize, k: usize, seed: u64) -> Result<Clustering> {
    let n = data.n();
    if b == 0 || k_max < 2 || k == 0 || k > n {
        return Err(Error::invalid(format!(
            "EAC needs b >= 1, k_max >= 2 and 1 <= k <= n; got b = {b}, k_max = {k_max}, k = {k}"
        )));
    }
    let run = |r: usize| -> Result<Clustering> {
        let mut rng = rng_from(derive_seed(seed, r as u64));
        let kr = rng.random_range(2..=k_max.min(n));
        Ok(kmeans(data, kr, rng.next_u64())?.clustering)
    };
    #[cfg(feature = "parallel")]
    let runs: Vec<Result<Clustering>> = {
        use rayon::prelude::*;
        (0..b).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<Result<Clustering>> = (0..b).map(run).collect();

    let mut together = vec![0u32; n * n];
    for c in runs {
        let a = c?.assignment().to_vec();
        for i in 0..n {
            for j in 0..n {
                if a[i] == a[j] {
                    together[i * n + j] += 1;
                }
            }
        }
    }
    let values = together.iter().map(|&t| (b as u32 - t) as f64 / b as f64).collect();
    let d = DissimilarityMatrix::from_full(n, values, DissimilarityKind::Precomputed)?;
    let singletons: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let tree = single_linkage(&singletons, &d, SetDissimilarity::Minimum)?;
    Ok(cut(&tree, k)?.clustering)
}

/// Clustering procedures compared by the benchmark harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "shc-min")]
    ShcMin,
    #[serde(rename = "shc-p20")]
    ShcP20,
    #[serde(rename = "kmeans")]
    KMeans,
    #[serde(rename = "eac")]
    Eac,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::KMeans, Method::Eac, Method::ShcMin, Method::ShcP20];

    pub fn name(&self) -> &'static str {
        match self {
            Method::ShcMin => "shc-min",
            Method::ShcP20 => "shc-p20",
            Method::KMeans => "kmeans",
            Method::Eac => "eac",
        }
    }

    /// Runs the method for `k` clusters; `base` supplies B, k_max and alpha
    /// (its seed and dissimilarity are overridden).
    pub fn run(&self, data: &Dataset, k: usize, base: &EnsembleConfig, seed: u64) -> Result<Clustering> {
        match self {
            Method::KMeans => Ok(kmeans(data, k, seed)?.clustering),
            Method::Eac => eac_baseline(data, base.b, base.k_max, k, seed),
            Method::ShcMin | Method::ShcP20 => {
                let dissim = if *self == Method::ShcMin {
                    SetDissimilarity::Minimum
                } else {
                    SetDissimilarity::PERCENTILE20
                };
                let cfg = ShcConfig {
                    k,
                    ensemble: EnsembleConfig {
                        dissim,
                        seed,
                        ..base.clone()
                    },
                };
                Ok(shc_cluster(data, &cfg)?.0)
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::invalid(format!(
                "unknown method `{s}`; expected kmeans, eac, shc-min or shc-p20"
            ))
        })
    }
}

/// Two-row MAI/SAI table with one column per method.
pub fn format_table(title: &str, reports: &[(String, ScoreReport)]) -> String {
    let width = reports.iter().map(|(name, _)| name.len()).max().unwrap_or(0).max(7);
    let mut out = format!("{title}\n{:<6}", "");
    for (name, _) in reports {
        out.push_str(&format!("  {name:>width$}"));
    }
    out.push_str(&format!("\n{:<6}", "MAI"));
    for (_, r) in reports {
        out.push_str(&format!("  {:>width$.2}", r.mai));
    }
    out.push_str(&format!("\n{:<6}", "SAI"));
    for (_, r) in reports {
        out.push_str(&format!("  {:>width$.3}", r.sai));
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl(ids: &[usize]) -> Clustering {
        Clustering::from_labels(ids).unwrap()
    }

    /// Best matching by trying every permutation of the larger side.
    fn brute_force_ai(pred: &[usize], truth: &[usize]) -> f64 {
        let kp = *pred.iter().max().unwrap();
        let kt = *truth.iter().max().unwrap();
        let size = kp.max(kt);
        let mut perm: Vec<usize> = (1..=size).collect();
        let mut best = 0;
        permute(&mut perm, 0, &mut |p| {
            let hits = pred.iter().zip(truth).filter(|(&a, &b)| p[a - 1] == b).count();
            best = best.max(hits);
        });
        best as f64 / pred.len() as f64
    }

    fn permute(v: &mut Vec<usize>, at: usize, f: &mut dyn FnMut(&[usize])) {
        if at == v.len() {
            f(v);
            return;
        }
        for i in at..v.len() {
            v.swap(at, i);
            permute(v, at + 1, f);
            v.swap(at, i);
        }
    }

    #[test]
    fn perfect_and_relabelled() {
        let truth = [1, 1, 2, 2, 3];
        assert_eq!(accuracy_index(&cl(&truth), &truth).unwrap(), 1.0);
        assert_eq!(accuracy_index(&cl(&[3, 3, 1, 1, 2]), &truth).unwrap(), 1.0);
    }

    #[test]
    fn three_quarters() {
        let truth = [1, 1, 2, 2];
        let pred = [1, 1, 1, 2];
        assert_eq!(brute_force_ai(&pred, &truth), 0.75);
        assert_eq!(accuracy_index(&cl(&pred), &truth).unwrap(), 0.75);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = rng_from(3);
        for _ in 0..200 {
            let n = rng.random_range(1..25);
            let kp = rng.random_range(1..6);
            let kt = rng.random_range(1..6);
            let pred: Vec<usize> = (0..n).map(|_| rng.random_range(1..=kp)).collect();
            let truth: Vec<usize> = (0..n).map(|_| rng.random_range(1..=kt)).collect();
            let pred = cl(&pred);
            let truth = cl(&truth);
            let expected = brute_force_ai(pred.assignment(), truth.assignment());
            let got = accuracy_index(&pred, truth.assignment()).unwrap();
            assert!((got - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn single_cluster_scores_largest_class() {
        let truth = [1, 1, 1, 2, 3];
        assert_eq!(accuracy_index(&cl(&[1; 5]), &truth).unwrap(), 0.6);
        assert!(accuracy_index(&cl(&[1; 4]), &truth).is_err());
    }

    #[test]
    fn report_statistics() {
        let r = ScoreReport::from_runs(vec![0.9, 1.0]).unwrap();
        assert!((r.mai - 0.95).abs() < 1e-12);
        assert!((r.sai - 0.005f64.sqrt()).abs() < 1e-12);
        assert!((r.sai - 0.0707).abs() < 1e-4);
        assert_eq!(ScoreReport::from_runs(vec![0.4]).unwrap().sai, 0.0);
        assert_eq!(ScoreReport::from_runs(vec![0.7; 5]).unwrap().sai, 0.0);
        assert!(ScoreReport::from_runs(vec![]).is_err());
    }

    #[test]
    fn repeat_needs_labels() {
        let d = Dataset::new("u", &[vec![0.0], vec![1.0]], None).unwrap();
        let r = repeat_and_score(|d, _| Ok(Clustering::single(d.n())), &d, &[1]);
        assert!(matches!(r, Err(Error::MissingLabels(_))));
    }

    #[test]
    fn repeat_constant_method() {
        let d = Dataset::new("l", &[vec![0.0], vec![1.0], vec![5.0]], Some(vec![1, 1, 2])).unwrap();
        let r = repeat_and_score(|d, _| Ok(Clustering::single(d.n())), &d, &[1, 2, 3]).unwrap();
        assert_eq!(r.runs, 3);
        assert_eq!(r.sai, 0.0);
        assert!((r.mai - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn eac_single_run_is_kmeans_then_linkage() {
        let pts: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i / 4) as f64 * 10.0 + (i % 4) as f64 * 0.1])
            .collect();
        let d = Dataset::new("b", &pts, None).unwrap();
        let got = eac_baseline(&d, 1, 5, 2, 8).unwrap();
        // reproduce the single member directly
        let mut rng = rng_from(derive_seed(8, 0));
        let kr = rng.random_range(2..=5);
        let single = kmeans(&d, kr, rng.next_u64()).unwrap().clustering;
        assert_eq!(got.k(), 2);
        // every pair co-clustered by the K-means run stays together
        for i in 0..12 {
            for j in 0..12 {
                if single.cluster_of(i) == single.cluster_of(j) {
                    assert_eq!(got.cluster_of(i), got.cluster_of(j));
                }
            }
        }
    }

    #[test]
    fn eac_duplicates_always_together() {
        let mut pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * i % 7) as f64]).collect();
        pts.push(pts[3].clone());
        let d = Dataset::new("dup", &pts, None).unwrap();
        for seed in 0..5 {
            let c = eac_baseline(&d, 10, 8, 3, seed).unwrap();
            assert_eq!(c.cluster_of(3), c.cluster_of(20));
        }
    }

    #[test]
    fn methods_parse_and_table() {
        assert_eq!("shc-p20".parse::<Method>().unwrap(), Method::ShcP20);
        assert!("spectral".parse::<Method>().is_err());
        let table = format_table(
            "t",
            &[("kmeans".into(), ScoreReport::from_runs(vec![0.97, 0.97]).unwrap())],
        );
        assert!(table.contains("MAI"));
        assert!(table.contains("0.97"));
        assert!(table.contains("0.000"));
    }
}
