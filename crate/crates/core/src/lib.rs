//! Stabilized hybrid clustering.
//!
//! The pipeline over-clusters the data with K-means into many small basal
//! clusters, merges them with single linkage, repeats that for a random
//! ensemble of target sizes, and clusters the points again on the Hamming
//! distance between their ensemble membership rows. A final grow-and-prune
//! step cuts the consensus dendrogram slightly deeper than needed, sets small
//! clusters aside, merges back down to `k` and reattaches the small ones.
//!
//! * [`shc::shc_cluster`] runs the whole pipeline for a given `k`.
//! * [`ek::estimate_k`] estimates the number of clusters from lifetimes of
//!   the consensus dendrogram.
//! * [`eval`] scores clusterings against ground truth and hosts the
//!   co-association (EAC) baseline.
//! * [`datasets`] holds the synthetic generators and CSV ingestion.

pub mod datasets;
pub mod ek;
pub mod error;
pub mod eval;
pub mod linkage;
pub mod model;
pub mod partitional;
pub mod rng;
pub mod shc;

pub use error::{Error, Result};
pub use linkage::{branch_lengths, cut, lifetimes, set_dissimilarity, single_linkage, CutResult, SetDissimilarity};
pub use model::{
    hamming_dissimilarity, membership_matrix, Clustering, Dataset, Dendrogram, DissimilarityKind, DissimilarityMatrix,
    MembershipMatrix, Merge,
};
pub use partitional::{kmeans, wss, KMeansResult};
