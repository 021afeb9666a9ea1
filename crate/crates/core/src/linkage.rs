//! Single-linkage agglomeration over pluggable set dissimilarities, plus the
//! dendrogram queries used downstream: cuts, branch lengths and lifetimes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Clustering, Dendrogram, DissimilarityMatrix, Merge};

/// How the dissimilarity between two point sets is derived from the
/// point-level matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetDissimilarity {
    /// Smallest cross-pair distance.
    Minimum,
    /// Linearly interpolated quantile `p` of the cross-pair distances.
    Percentile(f64),
}

impl SetDissimilarity {
    pub const PERCENTILE20: SetDissimilarity = SetDissimilarity::Percentile(0.20);

    pub fn short_name(&self) -> String {
        match self {
            SetDissimilarity::Minimum => "min".into(),
            SetDissimilarity::Percentile(p) => format!("p{}", (p * 100.0).round()),
        }
    }
}

impl fmt::Display for SetDissimilarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.short_name())
    }
}

impl FromStr for SetDissimilarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" | "minimum" => Ok(SetDissimilarity::Minimum),
            _ => {
                let pct: u32 = s
                    .strip_prefix('p')
                    .and_then(|v| v.parse().ok())
                    .filter(|&v| v <= 100)
                    .ok_or_else(|| Error::invalid(format!("unknown set dissimilarity `{s}` (use min or p20)")))?;
                Ok(SetDissimilarity::Percentile(pct as f64 / 100.0))
            }
        }
    }
}

/// Quantile `p` of `values` with linear interpolation between order
/// statistics at position `(N - 1) p` (0-based). Reorders `values`.
pub fn quantile(values: &mut [f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty set");
    let pos = (values.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    let (_, &mut lower, upper) = values.select_nth_unstable_by(lo, f64::total_cmp);
    if frac == 0.0 || upper.is_empty() {
        return lower;
    }
    let next = upper.iter().copied().fold(f64::INFINITY, f64::min);
    lower + frac * (next - lower)
}

fn cross_dissimilarity(a: &[usize], b: &[usize], base: &DissimilarityMatrix, kind: SetDissimilarity) -> f64 {
    match kind {
        SetDissimilarity::Minimum => {
            let mut best = f64::INFINITY;
            for &i in a {
                let row = base.row(i);
                for &j in b {
                    best = best.min(row[j]);
                }
            }
            best
        }
        SetDissimilarity::Percentile(p) => {
            let mut cross = Vec::with_capacity(a.len() * b.len());
            for &i in a {
                let row = base.row(i);
                cross.extend(b.iter().map(|&j| row[j]));
            }
            quantile(&mut cross, p)
        }
    }
}

/// Dissimilarity between the disjoint index sets `a` and `b`.
pub fn set_dissimilarity(a: &[usize], b: &[usize], base: &DissimilarityMatrix, kind: SetDissimilarity) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("set dissimilarity of an empty set"));
    }
    let n = base.n();
    let mut in_a = vec![false; n];
    for &i in a {
        if i >= n {
            return Err(Error::invalid(format!("index {i} outside a {n}-point matrix")));
        }
        in_a[i] = true;
    }
    for &j in b {
        if j >= n {
            return Err(Error::invalid(format!("index {j} outside a {n}-point matrix")));
        }
        if in_a[j] {
            return Err(Error::invalid(format!("sets overlap at index {j}")));
        }
    }
    Ok(cross_dissimilarity(a, b, base, kind))
}

/// Agglomerates `items` (disjoint point sets, the dendrogram leaves) by
/// repeatedly merging the closest pair until one set remains.
///
/// Ties are resolved toward the lexicographically smallest
/// `(min node id, max node id)`. For [`SetDissimilarity::Minimum`] the merged
/// row is the elementwise minimum of the two old rows; other kinds are
/// recomputed from the member points.
pub fn single_linkage(items: &[Vec<usize>], base: &DissimilarityMatrix, kind: SetDissimilarity) -> Result<Dendrogram> {
    let leaves = items.len();
    if leaves < 2 {
        return Err(Error::invalid(format!(
            "single linkage needs at least 2 items, got {leaves}"
        )));
    }
    let n = base.n();
    let mut owner = vec![usize::MAX; n];
    for (s, item) in items.iter().enumerate() {
        if item.is_empty() {
            return Err(Error::invalid(format!("item {s} is empty")));
        }
        for &i in item {
            if i >= n {
                return Err(Error::invalid(format!("index {i} outside a {n}-point matrix")));
            }
            if owner[i] != usize::MAX {
                return Err(Error::invalid(format!("index {i} appears in two items")));
            }
            owner[i] = s;
        }
    }

    let mut dist = initial_item_matrix(items, base, kind);
    let at = |d: &Vec<f64>, a: usize, b: usize| d[a * leaves + b];

    let mut members: Vec<Vec<usize>> = items.to_vec();
    let mut node: Vec<usize> = (1..=leaves).collect();
    let mut size = vec![1usize; leaves];
    let mut active = vec![true; leaves];

    // (d, min id, max id) ordering of a candidate pair.
    let key = |d: f64, a: usize, b: usize| (d, a.min(b), a.max(b));
    let better = |x: (f64, usize, usize), y: (f64, usize, usize)| x.0 < y.0 || (x.0 == y.0 && (x.1, x.2) < (y.1, y.2));
    let scan = |dist: &Vec<f64>, node: &[usize], active: &[bool], s: usize| -> Option<usize> {
        let mut best: Option<(usize, (f64, usize, usize))> = None;
        for t in 0..leaves {
            if t == s || !active[t] {
                continue;
            }
            let cand = key(at(dist, s, t), node[s], node[t]);
            if best.is_none_or(|(_, b)| better(cand, b)) {
                best = Some((t, cand));
            }
        }
        best.map(|(t, _)| t)
    };

    let mut nn: Vec<Option<usize>> = (0..leaves).map(|s| scan(&dist, &node, &active, s)).collect();
    let mut merges = Vec::with_capacity(leaves - 1);

    for step in 0..leaves - 1 {
        let mut pick: Option<(usize, (f64, usize, usize))> = None;
        for s in (0..leaves).filter(|&s| active[s]) {
            let t = nn[s].expect("an active slot has a neighbour while two remain");
            let cand = key(at(&dist, s, t), node[s], node[t]);
            if pick.is_none_or(|(_, b)| better(cand, b)) {
                pick = Some((s, cand));
            }
        }
        let (a, (height, _, _)) = pick.expect("at least two active slots");
        let b = nn[a].expect("picked slot has a neighbour");
        let (keep, gone) = (a.min(b), a.max(b));

        let new_id = leaves + 1 + step;
        merges.push(Merge {
            left: node[keep].min(node[gone]),
            right: node[keep].max(node[gone]),
            height,
            size: size[keep] + size[gone],
        });
        let moved = std::mem::take(&mut members[gone]);
        members[keep].extend(moved);
        size[keep] += size[gone];
        node[keep] = new_id;
        active[gone] = false;

        let others: Vec<usize> = (0..leaves).filter(|&s| active[s] && s != keep).collect();
        let updated: Vec<f64> = match kind {
            SetDissimilarity::Minimum => others
                .iter()
                .map(|&s| at(&dist, keep, s).min(at(&dist, gone, s)))
                .collect(),
            SetDissimilarity::Percentile(_) => {
                let merged = &members[keep];
                let f = |&s: &usize| cross_dissimilarity(merged, &members[s], base, kind);
                #[cfg(feature = "parallel")]
                {
                    use rayon::prelude::*;
                    others.par_iter().map(f).collect()
                }
                #[cfg(not(feature = "parallel"))]
                {
                    others.iter().map(f).collect()
                }
            }
        };
        for (&s, &v) in others.iter().zip(&updated) {
            dist[keep * leaves + s] = v;
            dist[s * leaves + keep] = v;
        }

        nn[gone] = None;
        nn[keep] = scan(&dist, &node, &active, keep);
        for &s in &others {
            match nn[s] {
                Some(t) if t == keep || t == gone => nn[s] = scan(&dist, &node, &active, s),
                Some(t) => {
                    let current = key(at(&dist, s, t), node[s], node[t]);
                    let cand = key(at(&dist, s, keep), node[s], node[keep]);
                    if better(cand, current) {
                        nn[s] = Some(keep);
                    }
                }
                None => unreachable!("active slot without neighbour"),
            }
        }
    }

    Dendrogram::new(leaves, merges)
}

fn initial_item_matrix(items: &[Vec<usize>], base: &DissimilarityMatrix, kind: SetDissimilarity) -> Vec<f64> {
    let l = items.len();
    let row = |a: usize| -> Vec<f64> {
        (0..l)
            .map(|b| {
                if b <= a {
                    0.0
                } else {
                    cross_dissimilarity(&items[a], &items[b], base, kind)
                }
            })
            .collect()
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..l).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<f64>> = (0..l).map(row).collect();
    let mut dist: Vec<f64> = rows.into_iter().flatten().collect();
    for a in 0..l {
        for b in 0..a {
            dist[a * l + b] = dist[b * l + a];
        }
    }
    dist
}

/// Partition obtained by undoing the last `k - 1` merges.
#[derive(Debug, Clone, PartialEq)]
pub struct CutResult {
    /// Over the dendrogram's leaves; ids ordered by each cluster's lowest leaf.
    pub clustering: Clustering,
    /// Height of the last merge replayed (0 when nothing is merged).
    pub height: f64,
    /// Height of the merge that would reduce `k` clusters to `k - 1`;
    /// infinite for `k = 1`.
    pub h_k: f64,
}

/// Tree view used by the replay-based queries.
struct Replay<'a> {
    dendrogram: &'a Dendrogram,
}

impl<'a> Replay<'a> {
    fn new(dendrogram: &'a Dendrogram) -> Self {
        Self { dendrogram }
    }

    /// Node ids present after replaying the first `L - k` merges, ordered by
    /// their lowest leaf.
    fn nodes_at(&self, k: usize) -> Vec<usize> {
        let l = self.dendrogram.leaves();
        let applied = l - k;
        let mut alive = vec![true; 2 * l];
        for m in &self.dendrogram.merges()[..applied] {
            alive[m.left] = false;
            alive[m.right] = false;
        }
        let mut nodes: Vec<usize> = (1..l + 1 + applied).filter(|&v| alive[v]).collect();
        let low = self.lowest_leaf();
        nodes.sort_by_key(|&v| low[v]);
        nodes
    }

    fn lowest_leaf(&self) -> Vec<usize> {
        let l = self.dendrogram.leaves();
        let mut low = vec![usize::MAX; 2 * l];
        for (v, slot) in low.iter_mut().enumerate().take(l + 1).skip(1) {
            *slot = v;
        }
        for (j, m) in self.dendrogram.merges().iter().enumerate() {
            low[l + 1 + j] = low[m.left].min(low[m.right]);
        }
        low
    }

    /// Height at which node `v` was formed; leaves are formed at 0.
    fn formation_height(&self, v: usize) -> f64 {
        let l = self.dendrogram.leaves();
        if v <= l {
            0.0
        } else {
            self.dendrogram.merges()[v - l - 1].height
        }
    }

    /// Leaves (0-based) under each node.
    fn leaves_under(&self, v: usize) -> Vec<usize> {
        let l = self.dendrogram.leaves();
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if u <= l {
                out.push(u - 1);
            } else {
                let m = &self.dendrogram.merges()[u - l - 1];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
        out.sort_unstable();
        out
    }
}

fn check_k(dendrogram: &Dendrogram, k: usize, min: usize) -> Result<()> {
    if k < min || k > dendrogram.leaves() {
        return Err(Error::invalid(format!(
            "k = {k} outside {min}..={} for this dendrogram",
            dendrogram.leaves()
        )));
    }
    Ok(())
}

pub fn cut(dendrogram: &Dendrogram, k: usize) -> Result<CutResult> {
    check_k(dendrogram, k, 1)?;
    let l = dendrogram.leaves();
    let replay = Replay::new(dendrogram);
    let members: Vec<Vec<usize>> = replay.nodes_at(k).into_iter().map(|v| replay.leaves_under(v)).collect();
    let applied = l - k;
    let merges = dendrogram.merges();
    Ok(CutResult {
        clustering: Clustering::from_members(l, &members)?,
        height: if applied == 0 { 0.0 } else { merges[applied - 1].height },
        h_k: if k == 1 { f64::INFINITY } else { merges[applied].height },
    })
}

/// Lengths of the `k` branches crossing `H_K`, each measured down to the
/// branch's own formation (0 for a leaf), and their mean.
pub fn branch_lengths(dendrogram: &Dendrogram, k: usize) -> Result<(Vec<f64>, f64)> {
    check_k(dendrogram, k, 2)?;
    let replay = Replay::new(dendrogram);
    let h_k = dendrogram.merges()[dendrogram.leaves() - k].height;
    let lengths: Vec<f64> = replay
        .nodes_at(k)
        .into_iter()
        .map(|v| h_k - replay.formation_height(v))
        .collect();
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
    Ok((lengths, mean))
}

/// `(k, lifetime)` for `k = 2..=L`: the height span over which the replayed
/// dendrogram shows exactly `k` clusters.
pub fn lifetimes(dendrogram: &Dendrogram) -> Vec<(usize, f64)> {
    let l = dendrogram.leaves();
    let h: Vec<f64> = dendrogram.heights().collect();
    (2..=l)
        .map(|k| {
            let top = h[l - k];
            let bottom = if k == l { 0.0 } else { h[l - k - 1] };
            (k, top - bottom)
        })
        .collect()
}

/// Cluster count when cutting at height `t`; merges at exactly `t` count as
/// applied.
pub fn clusters_at_height(dendrogram: &Dendrogram, t: f64) -> usize {
    1 + dendrogram.heights().filter(|&h| h > t).count()
}

/// Maps a clustering of dendrogram leaves back onto points, where leaf `s`
/// holds the points `items[s]`.
pub fn expand_to_points(n: usize, items: &[Vec<usize>], leaf_clustering: &Clustering) -> Result<Clustering> {
    let mut labels = vec![0usize; n];
    for (s, item) in items.iter().enumerate() {
        for &i in item {
            labels[i] = leaf_clustering.cluster_of(s);
        }
    }
    if labels.contains(&0) {
        return Err(Error::invalid("items do not cover every point"));
    }
    Clustering::from_labels(&labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dataset, DissimilarityKind};

    fn line(xs: &[f64]) -> DissimilarityMatrix {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        DissimilarityMatrix::euclidean(&Dataset::new("l", &pts, None).unwrap())
    }

    fn singletons(n: usize) -> Vec<Vec<usize>> {
        (0..n).map(|i| vec![i]).collect()
    }

    fn chain(heights: [f64; 3]) -> Dendrogram {
        Dendrogram::new(
            4,
            vec![
                Merge {
                    left: 1,
                    right: 2,
                    height: heights[0],
                    size: 2,
                },
                Merge {
                    left: 3,
                    right: 5,
                    height: heights[1],
                    size: 3,
                },
                Merge {
                    left: 4,
                    right: 6,
                    height: heights[2],
                    size: 4,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_pair_both_kinds() {
        let d = line(&[0.0, 2.5]);
        for kind in [SetDissimilarity::Minimum, SetDissimilarity::PERCENTILE20] {
            assert_eq!(set_dissimilarity(&[0], &[1], &d, kind).unwrap(), 2.5);
        }
    }

    #[test]
    fn cross_distances_one_two_three() {
        // cross distances from 0 to {1, 2, 3}
        let d = line(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(
            set_dissimilarity(&[0], &[1, 2, 3], &d, SetDissimilarity::Minimum).unwrap(),
            1.0
        );
        let p20 = set_dissimilarity(&[0], &[1, 2, 3], &d, SetDissimilarity::PERCENTILE20).unwrap();
        assert!((p20 - 1.4).abs() < 1e-12);
    }

    #[test]
    fn overlapping_sets_rejected() {
        let d = line(&[0.0, 1.0, 2.0]);
        assert!(set_dissimilarity(&[0, 1], &[1, 2], &d, SetDissimilarity::Minimum).is_err());
        assert!(set_dissimilarity(&[], &[1], &d, SetDissimilarity::Minimum).is_err());
    }

    #[test]
    fn quantile_endpoints() {
        assert_eq!(quantile(&mut [3.0, 1.0, 2.0], 0.0), 1.0);
        assert_eq!(quantile(&mut [3.0, 1.0, 2.0], 1.0), 3.0);
        assert_eq!(quantile(&mut [3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(quantile(&mut [5.0], 0.2), 5.0);
    }

    #[test]
    fn three_points_on_a_line() {
        let d = line(&[0.0, 1.0, 5.0]);
        let dg = single_linkage(&singletons(3), &d, SetDissimilarity::Minimum).unwrap();
        let m = dg.merges();
        assert_eq!((m[0].left, m[0].right, m[0].height), (1, 2, 1.0));
        assert_eq!((m[1].left, m[1].right, m[1].height, m[1].size), (3, 4, 4.0, 3));
    }

    #[test]
    fn two_items_single_merge() {
        let d = line(&[0.0, 1.0, 4.0, 6.0]);
        let dg = single_linkage(&[vec![0, 1], vec![2, 3]], &d, SetDissimilarity::Minimum).unwrap();
        assert_eq!(dg.merges().len(), 1);
        assert_eq!(dg.merges()[0].height, 3.0);
        let dg = single_linkage(&[vec![0, 1], vec![2, 3]], &d, SetDissimilarity::PERCENTILE20).unwrap();
        // cross {4, 6, 3, 5}: sorted 3,4,5,6; position 0.6 -> 3.6
        assert!((dg.merges()[0].height - 3.6).abs() < 1e-12);
    }

    #[test]
    fn linkage_input_errors() {
        let d = line(&[0.0, 1.0, 2.0]);
        assert!(single_linkage(&[vec![0, 1, 2]], &d, SetDissimilarity::Minimum).is_err());
        assert!(single_linkage(&[vec![0, 1], vec![1, 2]], &d, SetDissimilarity::Minimum).is_err());
        assert!(single_linkage(&[vec![0], vec![]], &d, SetDissimilarity::Minimum).is_err());
    }

    #[test]
    fn ties_resolved_by_smallest_ids() {
        // all pairwise distances equal
        let d = DissimilarityMatrix::from_full(
            3,
            vec![0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0],
            DissimilarityKind::Precomputed,
        )
        .unwrap();
        let dg = single_linkage(&singletons(3), &d, SetDissimilarity::Minimum).unwrap();
        assert_eq!((dg.merges()[0].left, dg.merges()[0].right), (1, 2));
        assert_eq!((dg.merges()[1].left, dg.merges()[1].right), (3, 4));
    }

    #[test]
    fn cut_extremes() {
        let dg = chain([1.0, 2.0, 5.0]);
        let all = cut(&dg, 4).unwrap();
        assert_eq!(all.clustering.k(), 4);
        assert_eq!(all.height, 0.0);
        assert_eq!(all.h_k, 1.0);
        let one = cut(&dg, 1).unwrap();
        assert_eq!(one.clustering.k(), 1);
        assert!(one.h_k.is_infinite());
        assert!(cut(&dg, 0).is_err());
        assert!(cut(&dg, 5).is_err());
    }

    #[test]
    fn cut_chain_at_two() {
        let r = cut(&chain([1.0, 2.0, 5.0]), 2).unwrap();
        assert_eq!(r.h_k, 5.0);
        assert_eq!(r.height, 2.0);
        assert_eq!(r.clustering.assignment(), &[1, 1, 1, 2]);
    }

    #[test]
    fn branch_lengths_chain() {
        let (h, mean) = branch_lengths(&chain([1.0, 2.0, 5.0]), 2).unwrap();
        let mut sorted = h.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, vec![3.0, 5.0]);
        assert_eq!(mean, 4.0);
    }

    #[test]
    fn branch_lengths_star() {
        let dg = chain([3.0, 3.0, 3.0]);
        let (h, mean) = branch_lengths(&dg, 2).unwrap();
        // {1,2,3} formed at 3, leaf 4 at 0
        assert_eq!(h, vec![0.0, 3.0]);
        assert_eq!(mean, 1.5);
        let flat = Dendrogram::new(
            2,
            vec![Merge {
                left: 1,
                right: 2,
                height: 4.0,
                size: 2,
            }],
        )
        .unwrap();
        assert_eq!(branch_lengths(&flat, 2).unwrap(), (vec![4.0, 4.0], 4.0));
        assert!(branch_lengths(&flat, 1).is_err());
    }

    #[test]
    fn lifetimes_chain() {
        let lt = lifetimes(&chain([1.0, 2.0, 5.0]));
        assert_eq!(lt, vec![(2, 3.0), (3, 1.0), (4, 1.0)]);
        let eq = lifetimes(&chain([2.0, 2.0, 2.0]));
        assert_eq!(eq, vec![(2, 0.0), (3, 0.0), (4, 2.0)]);
    }

    #[test]
    fn threshold_counts() {
        let dg = chain([1.0, 2.0, 5.0]);
        assert_eq!(clusters_at_height(&dg, 0.5), 4);
        assert_eq!(clusters_at_height(&dg, 2.0), 2);
        assert_eq!(clusters_at_height(&dg, 10.0), 1);
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("min".parse::<SetDissimilarity>().unwrap(), SetDissimilarity::Minimum);
        assert_eq!(
            "p20".parse::<SetDissimilarity>().unwrap(),
            SetDissimilarity::PERCENTILE20
        );
        assert_eq!(
            "p5".parse::<SetDissimilarity>().unwrap(),
            SetDissimilarity::Percentile(0.05)
        );
        assert!("median".parse::<SetDissimilarity>().is_err());
        assert_eq!(SetDissimilarity::PERCENTILE20.to_string(), "p20");
    }
}
