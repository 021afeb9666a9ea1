//! WebAssembly bindings behind the browser demo in `www/`.
//!
//! Ids cross the boundary as `Uint32Array`s and coordinates as
//! `Float64Array`s of interleaved x, y pairs.

use wasm_bindgen::prelude::*;

use shc_core::datasets::{parse_csv, Generator, GeneratorKind};
use shc_core::ek::{estimate_k, EkResult, Recount};
use shc_core::eval::accuracy_index;
use shc_core::shc::{hybrid_iteration, shc_cluster, EnsembleConfig, ShcConfig};
use shc_core::{Clustering, Dataset, Result, SetDissimilarity};

#[wasm_bindgen]
pub struct Demo {
    data: Dataset,
}

#[wasm_bindgen]
impl Demo {
    /// Built-in dataset: three_normals, spiral, half_ring, two_uniform_1d or blobs.
    pub fn generate(kind: &str, seed: u32) -> std::result::Result<Demo, JsError> {
        Ok(Demo {
            data: generate(kind, seed)?,
        })
    }

    /// CSV text; a column named `label` or `class` is taken as ground truth.
    #[wasm_bindgen(js_name = fromCsv)]
    pub fn from_csv(text: &str) -> std::result::Result<Demo, JsError> {
        Ok(Demo { data: from_csv(text)? })
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn name(&self) -> String {
        self.data.name().to_string()
    }

    pub fn xy(&self) -> Vec<f64> {
        xy(&self.data)
    }

    /// Empty when the data carry no labels.
    pub fn truth(&self) -> Vec<u32> {
        self.data.labels().map(to_u32).unwrap_or_default()
    }

    pub fn cluster(&self, k: usize, b: usize, dissim: &str, seed: u32) -> std::result::Result<Vec<u32>, JsError> {
        Ok(to_u32(cluster(&self.data, k, b, dissim, seed)?.assignment()))
    }

    /// The full result as JSON.
    #[wasm_bindgen(js_name = estimateK)]
    pub fn estimate_k(&self, b: usize, seed: u32) -> std::result::Result<String, JsError> {
        let r = estimate(&self.data, b, seed)?;
        Ok(serde_json::to_string(&r)?)
    }

    /// Basal K-means ids followed by the ids after merging to `kb`.
    pub fn hybrid(&self, kl: usize, kb: usize, dissim: &str, seed: u32) -> std::result::Result<Vec<u32>, JsError> {
        let (basal, merged) = hybrid(&self.data, kl, kb, dissim, seed)?;
        let mut out = to_u32(basal.assignment());
        out.extend(to_u32(merged.assignment()));
        Ok(out)
    }

    /// Accuracy index against the ground truth, NaN without labels.
    pub fn accuracy(&self, ids: Vec<u32>) -> f64 {
        accuracy(&self.data, &ids).unwrap_or(f64::NAN)
    }
}

fn generate(kind: &str, seed: u32) -> Result<Dataset> {
    let kind: GeneratorKind = kind.parse()?;
    Generator::standard(kind, u64::from(seed)).generate()
}

fn from_csv(text: &str) -> Result<Dataset> {
    let header = text.lines().next().unwrap_or("");
    let label = header
        .split(',')
        .map(str::trim)
        .find(|h| h.eq_ignore_ascii_case("label") || h.eq_ignore_ascii_case("class"))
        .map(|h| h.parse().expect("infallible"));
    parse_csv(text, "uploaded", label.as_ref())
}

fn xy(data: &Dataset) -> Vec<f64> {
    data.points()
        .flat_map(|p| [p[0], p.get(1).copied().unwrap_or(0.0)])
        .collect()
}

fn to_u32(ids: &[usize]) -> Vec<u32> {
    ids.iter().map(|&i| i as u32).collect()
}

fn config(b: usize, dissim: SetDissimilarity, seed: u32) -> EnsembleConfig {
    EnsembleConfig {
        b,
        dissim,
        seed: u64::from(seed),
        ..EnsembleConfig::default()
    }
}

fn cluster(data: &Dataset, k: usize, b: usize, dissim: &str, seed: u32) -> Result<Clustering> {
    let cfg = ShcConfig {
        k,
        ensemble: config(b, dissim.parse()?, seed),
    };
    Ok(shc_cluster(data, &cfg)?.0)
}

fn estimate(data: &Dataset, b: usize, seed: u32) -> Result<EkResult> {
    estimate_k(data, &config(b, SetDissimilarity::Minimum, seed), Recount::Longest)
}

fn hybrid(data: &Dataset, kl: usize, kb: usize, dissim: &str, seed: u32) -> Result<(Clustering, Clustering)> {
    let dissim: SetDissimilarity = dissim.parse()?;
    let basal = hybrid_iteration(data, kl, kl, dissim, u64::from(seed))?;
    let merged = hybrid_iteration(data, kb, kl, dissim, u64::from(seed))?;
    Ok((basal, merged))
}

fn accuracy(data: &Dataset, ids: &[u32]) -> Option<f64> {
    let truth = data.labels()?;
    let ids: Vec<usize> = ids.iter().map(|&i| i as usize).collect();
    let c = Clustering::from_labels(&ids).ok()?;
    accuracy_index(&c, truth).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_points_are_pairs() {
        let d = generate("blobs", 3).unwrap();
        assert_eq!(xy(&d).len(), 2 * d.n());
        let line = generate("two_uniform_1d", 3).unwrap();
        assert!(xy(&line).chunks(2).all(|p| p[1] == 0.0));
        assert!(generate("torus", 3).is_err());
    }

    #[test]
    fn csv_label_column_is_detected() {
        let d = from_csv("x,y,class\n0,0,1\n0,1,1\n9,9,2\n9,8,2\n").unwrap();
        assert_eq!(d.m(), 2);
        assert_eq!(d.labels(), Some(&[1, 1, 2, 2][..]));
        assert!(from_csv("x,y\n0,0\n1,1\n").unwrap().labels().is_none());
    }

    #[test]
    fn blobs_round_trip() {
        let d = generate("blobs", 1).unwrap();
        let c = cluster(&d, 2, 20, "p20", 1).unwrap();
        assert_eq!(accuracy(&d, &to_u32(c.assignment())), Some(1.0));
        assert_eq!(estimate(&d, 20, 1).unwrap().rounded, 2);
    }

    #[test]
    fn merged_ids_coarsen_basal_ones() {
        let d = generate("three_normals", 2).unwrap();
        let (basal, merged) = hybrid(&d, 20, 3, "min", 4).unwrap();
        assert_eq!(basal.k(), 20);
        assert_eq!(merged.k(), 3);
        assert!(basal.refines(&merged));
    }
}
