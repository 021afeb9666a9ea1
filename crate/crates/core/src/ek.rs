//! Estimating the number of clusters from the two longest-lived cuts of the
//! consensus dendrogram.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkage::{clusters_at_height, lifetimes, single_linkage, SetDissimilarity};
use crate::model::{Dataset, Dendrogram, DissimilarityMatrix};
use crate::shc::{ensemble, EnsembleConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EkResult {
    /// Mean of the two counts; may be a half-integer.
    pub estimate: f64,
    /// `estimate` rounded to the nearest integer, halves up.
    pub rounded: usize,
    pub counts: (usize, usize),
    /// Cluster counts of the two longest lifetimes, longest first.
    pub lifetime_ks: (usize, usize),
    /// Height inside each lifetime at which the dendrograms are cut.
    pub lifetime_cuts: (f64, f64),
    /// Sizes of the clusters removed before each recount.
    pub removed_sizes: (Vec<usize>, Vec<usize>),
    pub recount: Recount,
}

/// Height at which each pruned dendrogram is recounted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recount {
    /// Each lifetime's own cut height.
    PerLifetime,
    /// The cut height of the longest lifetime, for both.
    #[default]
    Longest,
}

impl fmt::Display for Recount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Recount::PerLifetime => "per-lifetime",
            Recount::Longest => "longest",
        })
    }
}

impl FromStr for Recount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-lifetime" | "per_lifetime" => Ok(Recount::PerLifetime),
            "longest" => Ok(Recount::Longest),
            _ => Err(Error::invalid(format!(
                "unknown recount `{s}`; expected per-lifetime or longest"
            ))),
        }
    }
}

/// Runs the hybrid ensemble and estimates the cluster count from its Hamming
/// dissimilarities.
pub fn estimate_k(data: &Dataset, cfg: &EnsembleConfig, recount: Recount) -> Result<EkResult> {
    if data.n() < 4 {
        return Err(Error::invalid(format!("estimating k needs n >= 4, got {}", data.n())));
    }
    let ens = ensemble(data, cfg)?;
    estimate_k_from_dissimilarity(&ens.hamming, cfg.alpha, recount)
}

/// Estimate on a given dissimilarity matrix.
///
/// For each of the two longest lifetimes, small clusters (at most
/// `alpha · n` points) that hang directly off one of the two lowest merges
/// above that cut are removed, single linkage is rebuilt on the remaining
/// points, and clusters are counted at the height chosen by `recount`.
pub fn estimate_k_from_dissimilarity(d: &DissimilarityMatrix, alpha: f64, recount: Recount) -> Result<EkResult> {
    let n = d.n();
    if n < 4 {
        return Err(Error::invalid(format!("estimating k needs n >= 4, got {n}")));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha = {alpha} must lie in [0, 1)")));
    }
    let singletons: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let tree = single_linkage(&singletons, d, SetDissimilarity::Minimum)?;

    let mut ranked = lifetimes(&tree);
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let (k1, k2) = (ranked[0].0, ranked[1].0);

    let t1 = lifetime_midpoint(&tree, k1);
    let t2 = match recount {
        Recount::PerLifetime => lifetime_midpoint(&tree, k2),
        Recount::Longest => t1,
    };
    let (c1, r1) = prune_and_count(d, &tree, k1, t1, alpha)?;
    let (c2, r2) = prune_and_count(d, &tree, k2, t2, alpha)?;
    let estimate = (c1 + c2) as f64 / 2.0;
    Ok(EkResult {
        estimate,
        rounded: round_half_up(estimate),
        counts: (c1, c2),
        lifetime_ks: (k1, k2),
        lifetime_cuts: (t1, t2),
        removed_sizes: (r1, r2),
        recount,
    })
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Midpoint of the height interval over which `tree` shows `k` clusters.
fn lifetime_midpoint(tree: &Dendrogram, k: usize) -> f64 {
    let l = tree.leaves();
    let merges = tree.merges();
    let bottom = if k == l { 0.0 } else { merges[l - k - 1].height };
    (bottom + merges[l - k].height) / 2.0
}

/// Removes the small clusters of the `k`-cut that hang off one of the two
/// lowest merges above it, then counts clusters at `threshold`.
fn prune_and_count(
    d: &DissimilarityMatrix,
    tree: &Dendrogram,
    k: usize,
    threshold: f64,
    alpha: f64,
) -> Result<(usize, Vec<usize>)> {
    let n = tree.leaves();
    let merges = tree.merges();

    // leaves under every node, built bottom-up
    let mut under: Vec<Vec<usize>> = (0..=n).map(|v| if v == 0 { vec![] } else { vec![v - 1] }).collect();
    for m in merges {
        let mut both = under[m.left].clone();
        both.extend_from_slice(&under[m.right]);
        under.push(both);
    }

    let first_above = n - k;
    let mut removed = vec![false; n];
    let mut removed_sizes = Vec::new();
    for m in merges.iter().skip(first_above).take(2) {
        for child in [m.left, m.right] {
            // only children that are clusters of the k-cut
            let formed_below = child <= n || child - n - 1 < first_above;
            let members = &under[child];
            if formed_below && members.len() as f64 / n as f64 <= alpha {
                removed_sizes.push(members.len());
                for &i in members {
                    removed[i] = true;
                }
            }
        }
    }

    let keep: Vec<usize> = (0..n).filter(|&i| !removed[i]).collect();
    if keep.len() == n {
        return Ok((clusters_at_height(tree, threshold), removed_sizes));
    }
    if keep.len() == 1 {
        return Ok((1, removed_sizes));
    }
    let sub = d.submatrix(&keep);
    let leaves: Vec<Vec<usize>> = (0..keep.len()).map(|i| vec![i]).collect();
    let sub_tree = single_linkage(&leaves, &sub, SetDissimilarity::Minimum)?;
    removed_sizes.sort_unstable();
    Ok((clusters_at_height(&sub_tree, threshold), removed_sizes))
}
