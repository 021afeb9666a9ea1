//! Shared domain types: datasets, flat clusterings, dissimilarity matrices,
//! dendrograms and ensemble membership matrices.
//!
//! Every type validates its invariants at construction and is immutable
//! afterwards, so values can be shared freely between worker threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` points in `m` dimensions, stored row-major, with optional
/// ground-truth labels in `1..=K_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    n: usize,
    m: usize,
    coords: Vec<f64>,
    labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, points: &[Vec<f64>], labels: Option<Vec<usize>>) -> Result<Self> {
        let m = points.first().map(Vec::len).unwrap_or(0);
        if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| p.len() != m) {
            return Err(Error::invalid(format!(
                "point {i} has {} coordinates, expected {m}",
                p.len()
            )));
        }
        let coords = points.iter().flatten().copied().collect();
        Self::from_flat(name, m, coords, labels)
    }

    pub fn from_flat(name: impl Into<String>, m: usize, coords: Vec<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        if m == 0 || coords.is_empty() {
            return Err(Error::invalid("dataset needs at least one point and one dimension"));
        }
        if !coords.len().is_multiple_of(m) {
            return Err(Error::invalid(format!(
                "{} coordinates do not divide into rows of {m}",
                coords.len()
            )));
        }
        let n = coords.len() / m;
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite coordinate at point {}, dimension {}",
                pos / m,
                pos % m
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::invalid(format!("{} labels for {n} points", labels.len())));
            }
            check_dense(labels)?;
        }
        Ok(Self {
            name: name.into(),
            n,
            m,
            coords,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.m..(i + 1) * self.m]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.m)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of distinct ground-truth classes, if labelled.
    pub fn num_classes(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| l.iter().copied().max().unwrap_or(0))
    }

    pub fn with_labels(mut self, labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.n {
                return Err(Error::invalid(format!("{} labels for {} points", l.len(), self.n)));
            }
            check_dense(l)?;
        }
        self.labels = labels;
        Ok(self)
    }

    /// Rows `idx` of this dataset, in the given order. Labels are re-densified.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let coords = idx.iter().flat_map(|&i| self.point(i).iter().copied()).collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| dense_relabel(&idx.iter().map(|&i| l[i]).collect::<Vec<_>>()).0);
        Self::from_flat(self.name.clone(), self.m, coords, labels)
    }

    pub fn sq_dist(&self, i: usize, j: usize) -> f64 {
        sq_euclidean(self.point(i), self.point(j))
    }
}

pub(crate) fn sq_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_dense(labels: &[usize]) -> Result<()> {
    let k = labels.iter().copied().max().unwrap_or(0);
    let mut seen = vec![false; k + 1];
    for &l in labels {
        if l == 0 {
            return Err(Error::invalid("label ids must start at 1"));
        }
        seen[l] = true;
    }
    if let Some(missing) = (1..=k).find(|&c| !seen[c]) {
        return Err(Error::invalid(format!(
            "label ids must be contiguous 1..{k}; id {missing} is unused"
        )));
    }
    Ok(())
}

/// Maps arbitrary ids onto `1..=K` preserving their sorted order.
pub(crate) fn dense_relabel(ids: &[usize]) -> (Vec<usize>, usize) {
    let mut distinct: Vec<usize> = ids.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let out = ids
        .iter()
        .map(|id| distinct.binary_search(id).expect("id present") + 1)
        .collect();
    (out, distinct.len())
}

/// A hard partition of `n` points into `k` nonempty clusters with ids `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clustering {
    assignment: Vec<usize>,
    k: usize,
}

impl Clustering {
    /// Builds a clustering from arbitrary integer ids, relabelling them densely
    /// in increasing id order.
    pub fn from_labels(ids: &[usize]) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::invalid("clustering over zero points"));
        }
        let (assignment, k) = dense_relabel(ids);
        Ok(Self { assignment, k })
    }

    /// Builds a clustering from member lists (0-based point indices).
    /// Cluster `c` of the input becomes id `c + 1`; every point must appear once.
    pub fn from_members(n: usize, members: &[Vec<usize>]) -> Result<Self> {
        let mut assignment = vec![0; n];
        for (c, group) in members.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::invalid(format!("cluster {} is empty", c + 1)));
            }
            for &i in group {
                if i >= n || assignment[i] != 0 {
                    return Err(Error::invalid(format!("point {i} missing or assigned twice")));
                }
                assignment[i] = c + 1;
            }
        }
        if let Some(i) = assignment.iter().position(|&a| a == 0) {
            return Err(Error::invalid(format!("point {i} is unassigned")));
        }
        Ok(Self {
            assignment,
            k: members.len(),
        })
    }

    pub fn single(n: usize) -> Self {
        Self {
            assignment: vec![1; n],
            k: 1,
        }
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// 1-based cluster id of every point.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    /// 0-based point indices of each cluster, in id order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &c) in self.assignment.iter().enumerate() {
            out[c - 1].push(i);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &c in &self.assignment {
            out[c - 1] += 1;
        }
        out
    }

    /// True when every cluster of `self` lies inside one cluster of `coarser`.
    pub fn refines(&self, coarser: &Clustering) -> bool {
        let mut parent = vec![0usize; self.k + 1];
        self.assignment
            .iter()
            .zip(&coarser.assignment)
            .all(|(&fine, &coarse)| match parent[fine] {
                0 => {
                    parent[fine] = coarse;
                    true
                }
                p => p == coarse,
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DissimilarityKind {
    Euclidean,
    Hamming,
    Precomputed,
}

/// Dense symmetric `n × n` dissimilarity matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    n: usize,
    values: Vec<f64>,
    kind: DissimilarityKind,
}

impl DissimilarityMatrix {
    /// Pairwise Euclidean distances between the rows of `data`.
    pub fn euclidean(data: &Dataset) -> Self {
        let n = data.n();
        let row = |i: usize| -> Vec<f64> { (0..n).map(|j| data.sq_dist(i, j).sqrt()).collect() };
        #[cfg(feature = "parallel")]
        let rows: Vec<Vec<f64>> = {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(row).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let rows: Vec<Vec<f64>> = (0..n).map(row).collect();
        let mut values: Vec<f64> = rows.into_iter().flatten().collect();
        // sqrt of identical sums is identical, but force exact symmetry anyway.
        for i in 0..n {
            values[i * n + i] = 0.0;
            for j in 0..i {
                values[i * n + j] = values[j * n + i];
            }
        }
        Self {
            n,
            values,
            kind: DissimilarityKind::Euclidean,
        }
    }

    /// Validates and wraps a full row-major matrix.
    pub fn from_full(n: usize, values: Vec<f64>, kind: DissimilarityKind) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::invalid(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(format!(
                        "entry ({i},{j}) = {v} is not a finite nonnegative value"
                    )));
                }
                if v != values[j * n + i] {
                    return Err(Error::invalid(format!("matrix is not symmetric at ({i},{j})")));
                }
                if kind == DissimilarityKind::Hamming && v.fract() != 0.0 {
                    return Err(Error::invalid(format!("hamming entry ({i},{j}) = {v} is not integral")));
                }
            }
        }
        Ok(Self { n, values, kind })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> DissimilarityKind {
        self.kind
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Principal submatrix on `idx`, in the given order.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let mut values = Vec::with_capacity(k * k);
        for &i in idx {
            values.extend(idx.iter().map(|&j| self.get(i, j)));
        }
        Self {
            n: k,
            values,
            kind: self.kind,
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// One agglomeration step. Leaves are numbered `1..=L`; merge `j` (0-based)
/// creates node `L + 1 + j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    /// Number of leaves under the new node.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    leaves: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    /// Validates merge topology. Heights are recorded as produced; use
    /// [`Dendrogram::inversions`] to check monotonicity.
    pub fn new(leaves: usize, merges: Vec<Merge>) -> Result<Self> {
        if leaves == 0 {
            return Err(Error::invalid("dendrogram needs at least one leaf"));
        }
        if merges.len() != leaves - 1 {
            return Err(Error::invalid(format!(
                "{leaves} leaves need {} merges, got {}",
                leaves - 1,
                merges.len()
            )));
        }
        let total = 2 * leaves - 1;
        let mut size = vec![0usize; total + 1];
        let mut used = vec![false; total + 1];
        for s in size.iter_mut().take(leaves + 1).skip(1) {
            *s = 1;
        }
        for (j, m) in merges.iter().enumerate() {
            let node = leaves + 1 + j;
            for child in [m.left, m.right] {
                if child == 0 || child >= node {
                    return Err(Error::invalid(format!(
                        "merge {j} references node {child} which does not exist yet"
                    )));
                }
                if used[child] {
                    return Err(Error::invalid(format!("node {child} merged twice")));
                }
                used[child] = true;
            }
            if m.left == m.right {
                return Err(Error::invalid(format!("merge {j} joins node {} with itself", m.left)));
            }
            if !m.height.is_finite() {
                return Err(Error::invalid(format!("merge {j} has non-finite height")));
            }
            size[node] = size[m.left] + size[m.right];
            if m.size != size[node] {
                return Err(Error::invalid(format!(
                    "merge {j} records size {} but joins {} leaves",
                    m.size, size[node]
                )));
            }
        }
        Ok(Self { leaves, merges })
    }

    pub fn leaves(&self) -> usize {
        self.leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn heights(&self) -> impl Iterator<Item = f64> + '_ {
        self.merges.iter().map(|m| m.height)
    }

    /// Number of merges whose height is strictly below the previous one.
    pub fn inversions(&self) -> usize {
        self.merges.windows(2).filter(|w| w[1].height < w[0].height).count()
    }

    pub fn is_monotone(&self) -> bool {
        self.inversions() == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dendrogram serializes")
    }
}

/// Concatenated one-hot encodings of `B` clusterings, bit-packed by row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipMatrix {
    n: usize,
    block_sizes: Vec<usize>,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl MembershipMatrix {
    /// Total number of columns, `S = ΣK_b`.
    pub fn columns(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        let w = self.bits[row * self.words_per_row + col / 64];
        (w >> (col % 64)) & 1 == 1
    }

    pub fn row_words(&self, row: usize) -> &[u64] {
        &self.bits[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    /// Dense 0/1 rows, mainly for inspection and tests.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|r| (0..self.columns()).map(|c| self.get(r, c) as u8).collect())
            .collect()
    }

    /// Wraps explicit 0/1 rows, checking the one-hot-per-block invariant.
    pub fn from_rows(rows: &[Vec<u8>], block_sizes: Vec<usize>) -> Result<Self> {
        let s: usize = block_sizes.iter().sum();
        if rows.is_empty() || block_sizes.is_empty() || block_sizes.contains(&0) {
            return Err(Error::invalid("membership matrix needs rows and nonempty blocks"));
        }
        let words_per_row = s.div_ceil(64);
        let mut bits = vec![0u64; rows.len() * words_per_row];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != s {
                return Err(Error::invalid(format!(
                    "row {r} has {} columns, expected {s}",
                    row.len()
                )));
            }
            let mut offset = 0;
            for (b, &kb) in block_sizes.iter().enumerate() {
                let block = &row[offset..offset + kb];
                if block.iter().any(|&v| v > 1) || block.iter().filter(|&&v| v == 1).count() != 1 {
                    return Err(Error::invalid(format!("row {r} is not one-hot in block {b}")));
                }
                offset += kb;
            }
            for (c, &v) in row.iter().enumerate() {
                if v == 1 {
                    bits[r * words_per_row + c / 64] |= 1 << (c % 64);
                }
            }
        }
        Ok(Self {
            n: rows.len(),
            block_sizes,
            words_per_row,
            bits,
        })
    }
}

/// One-hot encodes each clustering and concatenates the blocks column-wise.
pub fn membership_matrix(clusterings: &[Clustering]) -> Result<MembershipMatrix> {
    let first = clusterings
        .first()
        .ok_or_else(|| Error::invalid("membership matrix needs at least one clustering"))?;
    let n = first.n();
    if let Some((b, c)) = clusterings.iter().enumerate().find(|(_, c)| c.n() != n) {
        return Err(Error::invalid(format!(
            "clustering {b} covers {} points, expected {n}",
            c.n()
        )));
    }
    let block_sizes: Vec<usize> = clusterings.iter().map(Clustering::k).collect();
    let s: usize = block_sizes.iter().sum();
    let words_per_row = s.div_ceil(64);
    let mut bits = vec![0u64; n * words_per_row];
    let mut offset = 0;
    for c in clusterings {
        for (i, &id) in c.assignment().iter().enumerate() {
            let col = offset + id - 1;
            bits[i * words_per_row + col / 64] |= 1 << (col % 64);
        }
        offset += c.k();
    }
    Ok(MembershipMatrix {
        n,
        block_sizes,
        words_per_row,
        bits,
    })
}

/// Number of differing positions between every pair of membership rows.
pub fn hamming_dissimilarity(m: &MembershipMatrix) -> DissimilarityMatrix {
    let n = m.n();
    let row = |i: usize| -> Vec<f64> {
        let a = m.row_words(i);
        (0..n)
            .map(|j| {
                let b = m.row_words(j);
                a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum::<u32>() as f64
            })
            .collect()
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<f64>> = (0..n).map(row).collect();
    DissimilarityMatrix {
        n,
        values: rows.into_iter().flatten().collect(),
        kind: DissimilarityKind::Hamming,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl(ids: &[usize]) -> Clustering {
        Clustering::from_labels(ids).unwrap()
    }

    #[test]
    fn one_clustering_membership() {
        let m = membership_matrix(&[cl(&[1, 1, 2])]).unwrap();
        assert_eq!(m.to_rows(), vec![vec![1, 0], vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn two_clusterings_membership() {
        let m = membership_matrix(&[cl(&[1, 2]), cl(&[2, 1])]).unwrap();
        assert_eq!(m.to_rows(), vec![vec![1, 0, 0, 1], vec![0, 1, 1, 0]]);
        assert_eq!(m.columns(), 4);
    }

    #[test]
    fn mismatched_sizes_rejected() {
        let err = membership_matrix(&[cl(&[1, 2]), cl(&[1, 2, 2])]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        assert!(membership_matrix(&[]).is_err());
    }

    #[test]
    fn hamming_two_positions() {
        let m = MembershipMatrix::from_rows(&[vec![1, 0, 0, 1], vec![0, 1, 0, 1]], vec![2, 2]).unwrap();
        let d = hamming_dissimilarity(&m);
        assert_eq!(d.get(0, 1), 2.0);
        assert_eq!(d.get(1, 0), 2.0);
        assert_eq!(d.get(0, 0), 0.0);
        assert_eq!(d.kind(), DissimilarityKind::Hamming);
    }

    #[test]
    fn identical_rows_zero() {
        let m = membership_matrix(&[cl(&[1, 1, 2]), cl(&[3, 3, 3])]).unwrap();
        let d = hamming_dissimilarity(&m);
        assert_eq!(d.get(0, 1), 0.0);
        assert_eq!(d.get(0, 2), 2.0);
    }

    #[test]
    fn wide_rows_span_words() {
        // 70 columns crosses a u64 boundary.
        let a: Vec<usize> = (1..=70).collect();
        let b: Vec<usize> = (1..=70).rev().collect();
        let m = membership_matrix(&[cl(&a), cl(&b)]).unwrap();
        let d = hamming_dissimilarity(&m);
        assert_eq!(d.get(0, 69), 4.0);
        assert_eq!(d.get(0, 1), 4.0);
        assert_eq!(m.to_rows()[69][69], 1);
    }

    #[test]
    fn dense_relabel_keeps_order() {
        let c = cl(&[7, 3, 3, 9]);
        assert_eq!(c.assignment(), &[2, 1, 1, 3]);
        assert_eq!(c.k(), 3);
        assert_eq!(c.sizes(), vec![2, 1, 1]);
        assert_eq!(c.members(), vec![vec![1, 2], vec![0], vec![3]]);
    }

    #[test]
    fn refinement() {
        assert!(cl(&[1, 2, 3, 3]).refines(&cl(&[1, 1, 2, 2])));
        assert!(!cl(&[1, 1, 2, 2]).refines(&cl(&[1, 2, 2, 2])));
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new("x", &[vec![0.0, f64::NAN]], None).is_err());
        assert!(Dataset::new("x", &[vec![0.0], vec![1.0, 2.0]], None).is_err());
        assert!(Dataset::new("x", &[vec![0.0], vec![1.0]], Some(vec![1, 3])).is_err());
        assert!(Dataset::new("x", &[vec![0.0], vec![1.0]], Some(vec![0, 1])).is_err());
        let d = Dataset::new("x", &[vec![0.0, 1.0], vec![2.0, 3.0]], Some(vec![2, 1])).unwrap();
        assert_eq!((d.n(), d.m()), (2, 2));
        assert_eq!(d.point(1), &[2.0, 3.0]);
        assert_eq!(d.num_classes(), Some(2));
    }

    #[test]
    fn dissimilarity_validation() {
        assert!(DissimilarityMatrix::from_full(2, vec![0.0, 1.0, 2.0, 0.0], DissimilarityKind::Precomputed).is_err());
        assert!(DissimilarityMatrix::from_full(2, vec![0.0, 1.5, 1.5, 0.0], DissimilarityKind::Hamming).is_err());
        assert!(DissimilarityMatrix::from_full(2, vec![0.0, -1.0, -1.0, 0.0], DissimilarityKind::Precomputed).is_err());
        let d = DissimilarityMatrix::from_full(2, vec![0.0, 1.5, 1.5, 0.0], DissimilarityKind::Precomputed).unwrap();
        assert_eq!(d.submatrix(&[1, 0]).get(0, 1), 1.5);
    }

    #[test]
    fn dendrogram_topology_checked() {
        let ok = vec![
            Merge {
                left: 1,
                right: 2,
                height: 1.0,
                size: 2,
            },
            Merge {
                left: 4,
                right: 3,
                height: 2.0,
                size: 3,
            },
        ];
        assert!(Dendrogram::new(3, ok).is_ok());
        let twice = vec![
            Merge {
                left: 1,
                right: 2,
                height: 1.0,
                size: 2,
            },
            Merge {
                left: 1,
                right: 3,
                height: 2.0,
                size: 2,
            },
        ];
        assert!(Dendrogram::new(3, twice).is_err());
        let future = vec![
            Merge {
                left: 5,
                right: 2,
                height: 1.0,
                size: 2,
            },
            Merge {
                left: 1,
                right: 3,
                height: 2.0,
                size: 2,
            },
        ];
        assert!(Dendrogram::new(3, future).is_err());
    }
}
