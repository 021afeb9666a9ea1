//! The stabilized hybrid clustering pipeline.
//!
//! 1. For each of `B` ensemble members draw `K_ℓ` and `K_b`, over-cluster the
//!    data into `K_ℓ` basal clusters with K-means and merge them down to
//!    `K_b` clusters with single linkage.
//! 2. Stack the one-hot encodings of the `B` clusterings and take Hamming
//!    distances between rows.
//! 3. Build the single-linkage dendrogram on those distances, cut it a little
//!    deeper than `K`, put the small clusters aside, merge the rest back to
//!    `K` and reattach the small ones.

use rand::{Rng as _, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkage::{self, cut, single_linkage, SetDissimilarity};
use crate::model::{
    hamming_dissimilarity, membership_matrix, Clustering, Dataset, Dendrogram, DissimilarityMatrix, MembershipMatrix,
};
use crate::partitional::kmeans;
use crate::rng::{derive_seed, rng_from};

/// How the number of basal clusters `K_ℓ` is chosen per ensemble member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlRule {
    Fixed(usize),
    /// Uniform on `⌊n/6⌋..=⌊n/4⌋`.
    DunifN6N4,
}

impl KlRule {
    /// `⌊n/5⌋`, the single-value alternative.
    pub fn fifth(n: usize) -> Self {
        KlRule::Fixed(n / 5)
    }

    pub fn bounds(&self, n: usize) -> Result<(usize, usize)> {
        let (lo, hi) = match *self {
            KlRule::Fixed(v) => (v, v),
            KlRule::DunifN6N4 => (n / 6, n / 4),
        };
        if lo < 2 || hi > n {
            return Err(Error::invalid(format!(
                "basal cluster count range {lo}..={hi} is unusable for n = {n} (need 2 <= K_l <= n)"
            )));
        }
        Ok((lo, hi))
    }
}

/// Everything the ensemble stage needs; shared by clustering and
/// cluster-count estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub b: usize,
    pub k_max: usize,
    /// Clusters with at most this fraction of the points count as small.
    pub alpha: f64,
    pub dissim: SetDissimilarity,
    pub kl_rule: KlRule,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            b: 200,
            k_max: 25,
            alpha: 0.05,
            dissim: SetDissimilarity::PERCENTILE20,
            kl_rule: KlRule::DunifN6N4,
            seed: 0,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(Error::invalid("ensemble size B must be at least 1"));
        }
        if self.k_max < 2 {
            return Err(Error::invalid(format!("k_max = {} must be at least 2", self.k_max)));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha = {} must lie in [0, 1)", self.alpha)));
        }
        if let SetDissimilarity::Percentile(p) = self.dissim {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("percentile {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn validate_for(&self, n: usize) -> Result<(usize, usize)> {
        self.validate()?;
        self.kl_rule.bounds(n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShcConfig {
    pub k: usize,
    #[serde(flatten)]
    pub ensemble: EnsembleConfig,
}

impl ShcConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            ensemble: EnsembleConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        if self.k < 2 || self.k > self.ensemble.k_max {
            return Err(Error::invalid(format!(
                "k = {} must satisfy 2 <= k <= k_max = {}",
                self.k, self.ensemble.k_max
            )));
        }
        if self.ensemble.alpha <= 0.0 {
            return Err(Error::invalid("alpha must be positive"));
        }
        Ok(())
    }
}

/// Diagnostics of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShcTrace {
    pub kb_draws: Vec<usize>,
    pub kl_draws: Vec<usize>,
    pub k_star: usize,
    pub v1: usize,
    pub v2: usize,
    pub alpha_used: f64,
    pub h_k: f64,
    pub h_bar: f64,
    pub cut_height: f64,
    pub final_clustering: Clustering,
}

/// One basal over-clustering merged down to `kb` clusters.
pub fn hybrid_iteration(
    data: &Dataset,
    kb: usize,
    kl: usize,
    dissim: SetDissimilarity,
    seed: u64,
) -> Result<Clustering> {
    let base = DissimilarityMatrix::euclidean(data);
    hybrid_with_base(data, &base, kb, kl, dissim, seed)
}

fn hybrid_with_base(
    data: &Dataset,
    base: &DissimilarityMatrix,
    kb: usize,
    kl: usize,
    dissim: SetDissimilarity,
    seed: u64,
) -> Result<Clustering> {
    if kb == 0 || kb > kl || kl > data.n() {
        return Err(Error::invalid(format!(
            "need 1 <= kb <= kl <= n, got kb = {kb}, kl = {kl}, n = {}",
            data.n()
        )));
    }
    let basal = kmeans(data, kl, seed)?.clustering;
    if kb == kl {
        return Ok(basal);
    }
    let items = basal.members();
    let tree = single_linkage(&items, base, dissim)?;
    let merged = cut(&tree, kb)?.clustering;
    linkage::expand_to_points(data.n(), &items, &merged)
}

/// Membership matrix of the `B` hybrid clusterings and its Hamming distances.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub membership: MembershipMatrix,
    pub hamming: DissimilarityMatrix,
    pub kb_draws: Vec<usize>,
    pub kl_draws: Vec<usize>,
}

/// Runs the `B` hybrid iterations. Member `b` draws everything from its own
/// stream derived from `(cfg.seed, b)`, so the result is independent of
/// scheduling. `K_b` is drawn uniformly on `2..=min(k_max, K_ℓ)`.
pub fn ensemble(data: &Dataset, cfg: &EnsembleConfig) -> Result<Ensemble> {
    let (kl_lo, kl_hi) = cfg.validate_for(data.n())?;
    let base = DissimilarityMatrix::euclidean(data);
    let member = |b: usize| -> Result<(usize, usize, Clustering)> {
        let mut rng = rng_from(derive_seed(cfg.seed, b as u64));
        let kl = rng.random_range(kl_lo..=kl_hi);
        let kb = rng.random_range(2..=cfg.k_max.min(kl));
        let clustering = hybrid_with_base(data, &base, kb, kl, cfg.dissim, rng.next_u64())?;
        Ok((kb, kl, clustering))
    };
    #[cfg(feature = "parallel")]
    let runs: Vec<Result<(usize, usize, Clustering)>> = {
        use rayon::prelude::*;
        (0..cfg.b).into_par_iter().map(member).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<Result<(usize, usize, Clustering)>> = (0..cfg.b).map(member).collect();

    let mut kb_draws = Vec::with_capacity(cfg.b);
    let mut kl_draws = Vec::with_capacity(cfg.b);
    let mut clusterings = Vec::with_capacity(cfg.b);
    for run in runs {
        let (kb, kl, c) = run?;
        kb_draws.push(kb);
        kl_draws.push(kl);
        clusterings.push(c);
    }
    let membership = membership_matrix(&clusterings)?;
    let hamming = hamming_dissimilarity(&membership);
    Ok(Ensemble {
        membership,
        hamming,
        kb_draws,
        kl_draws,
    })
}

/// Result of cutting the consensus dendrogram and pruning back to `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowPrune {
    pub clustering: Clustering,
    pub dendrogram: Dendrogram,
    pub k_star: usize,
    pub v1: usize,
    pub v2: usize,
    pub alpha_used: f64,
    pub h_k: f64,
    pub h_bar: f64,
    /// Height at which the `k_star` clusters were read off.
    pub cut_height: f64,
}

/// Single linkage on `d` over individual points, cut `h̄` (the mean length of
/// the `k` branches crossing `H_K`) below `H_K`, then pruned back to `k`.
///
/// Clusters of the deeper cut holding at most `alpha · n` points are set
/// aside (halving `alpha` until at least `k` clusters remain), the rest are
/// merged to `k` main clusters by single linkage, and each set-aside cluster
/// joins the main cluster at the smallest cross distance.
pub fn grow_and_prune(d: &DissimilarityMatrix, k: usize, alpha: f64) -> Result<GrowPrune> {
    let n = d.n();
    if k < 2 || k >= n {
        return Err(Error::invalid(format!(
            "grow-and-prune needs 2 <= k < n, got k = {k}, n = {n}"
        )));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha = {alpha} must lie in [0, 1)")));
    }
    let singletons: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let dendrogram = single_linkage(&singletons, d, SetDissimilarity::Minimum)?;
    let at_k = cut(&dendrogram, k)?;
    let (_, h_bar) = linkage::branch_lengths(&dendrogram, k)?;
    let cut_height = at_k.h_k - h_bar;
    let k_star = linkage::clusters_at_height(&dendrogram, cut_height).max(k);

    let mut out = GrowPrune {
        clustering: at_k.clustering,
        dendrogram,
        k_star,
        v1: 0,
        v2: 0,
        alpha_used: alpha,
        h_k: at_k.h_k,
        h_bar,
        cut_height,
    };
    if k_star == k {
        return Ok(out);
    }

    let groups = cut(&out.dendrogram, k_star)?.clustering.members();
    let mut alpha_used = alpha;
    let is_large = |g: &Vec<usize>, a: f64| g.len() as f64 / n as f64 > a;
    while groups.iter().filter(|g| is_large(g, alpha_used)).count() < k {
        alpha_used /= 2.0;
    }
    let (large, mut small): (Vec<Vec<usize>>, Vec<Vec<usize>>) =
        groups.into_iter().partition(|g| is_large(g, alpha_used));

    let main: Vec<Vec<usize>> = if large.len() == k {
        large.clone()
    } else {
        let tree = single_linkage(&large, d, SetDissimilarity::Minimum)?;
        cut(&tree, k)?
            .clustering
            .members()
            .into_iter()
            .map(|items| items.into_iter().flat_map(|s| large[s].iter().copied()).collect())
            .collect()
    };

    small.sort_by_key(|g| (g.len(), g[0]));
    let mut labels = vec![0usize; n];
    for (c, g) in main.iter().enumerate() {
        for &i in g {
            labels[i] = c + 1;
        }
    }
    for g in &small {
        let mut best = (f64::INFINITY, 0);
        for (c, m) in main.iter().enumerate() {
            let dist = linkage::set_dissimilarity(g, m, d, SetDissimilarity::Minimum)?;
            if dist < best.0 {
                best = (dist, c);
            }
        }
        for &i in g {
            labels[i] = best.1 + 1;
        }
    }

    out.v1 = large.len() - k;
    out.v2 = small.len();
    out.alpha_used = alpha_used;
    out.clustering = Clustering::from_labels(&labels)?;
    Ok(out)
}

/// Full pipeline: ensemble, Hamming consensus, grow-and-prune.
pub fn shc_cluster(data: &Dataset, cfg: &ShcConfig) -> Result<(Clustering, ShcTrace)> {
    let (clustering, trace, _) = shc_cluster_with_dendrogram(data, cfg)?;
    Ok((clustering, trace))
}

/// As [`shc_cluster`], also returning the consensus dendrogram.
pub fn shc_cluster_with_dendrogram(data: &Dataset, cfg: &ShcConfig) -> Result<(Clustering, ShcTrace, Dendrogram)> {
    cfg.validate()?;
    if cfg.k >= data.n() {
        return Err(Error::invalid(format!("k = {} must be below n = {}", cfg.k, data.n())));
    }
    let ens = ensemble(data, &cfg.ensemble)?;
    let gp = grow_and_prune(&ens.hamming, cfg.k, cfg.ensemble.alpha)?;
    let trace = ShcTrace {
        kb_draws: ens.kb_draws,
        kl_draws: ens.kl_draws,
        k_star: gp.k_star,
        v1: gp.v1,
        v2: gp.v2,
        alpha_used: gp.alpha_used,
        h_k: gp.h_k,
        h_bar: gp.h_bar,
        cut_height: gp.cut_height,
        final_clustering: gp.clustering.clone(),
    };
    Ok((gp.clustering, trace, gp.dendrogram))
}
