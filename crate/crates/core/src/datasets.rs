//! Synthetic benchmark generators and CSV ingestion.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    ThreeNormals,
    Spiral,
    HalfRing,
    TwoUniform1d,
    Blobs,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 5] = [
        GeneratorKind::ThreeNormals,
        GeneratorKind::Spiral,
        GeneratorKind::HalfRing,
        GeneratorKind::TwoUniform1d,
        GeneratorKind::Blobs,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::ThreeNormals => "three_normals",
            GeneratorKind::Spiral => "spiral",
            GeneratorKind::HalfRing => "half_ring",
            GeneratorKind::TwoUniform1d => "two_uniform_1d",
            GeneratorKind::Blobs => "blobs",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        GeneratorKind::ALL
            .into_iter()
            .find(|k| k.name() == norm || (norm == "two_uniform" && *k == GeneratorKind::TwoUniform1d))
            .ok_or_else(|| {
                let names: Vec<_> = GeneratorKind::ALL.iter().map(|k| k.name()).collect();
                Error::invalid(format!("unknown generator `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

/// A generator together with its parameters. `n` is per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub kind: GeneratorKind,
    pub n: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Generator {
    /// Defaults that reproduce the benchmark shapes at their usual sizes.
    pub fn standard(kind: GeneratorKind, seed: u64) -> Self {
        let (n, noise) = match kind {
            GeneratorKind::ThreeNormals => (40, 0.0),
            GeneratorKind::Spiral => (100, 0.05),
            GeneratorKind::HalfRing => (HALF_RING_DENSE, 0.06),
            GeneratorKind::TwoUniform1d => (500, 1.0),
            GeneratorKind::Blobs => (50, 0.5),
        };
        Self { kind, n, noise, seed }
    }

    pub fn generate(&self) -> Result<Dataset> {
        match self.kind {
            GeneratorKind::ThreeNormals => gen_three_normals_sized(self.n, self.seed),
            GeneratorKind::Spiral => gen_spiral(self.n, self.noise, self.seed),
            GeneratorKind::HalfRing => {
                let sparse = (self.n * HALF_RING_SPARSE).div_ceil(HALF_RING_DENSE);
                gen_half_ring(self.n, sparse, self.noise, self.seed)
            }
            // `noise` doubles as the width parameter `a`
            GeneratorKind::TwoUniform1d => gen_two_uniform_1d(self.noise, self.n, self.seed),
            GeneratorKind::Blobs => gen_blobs(&[vec![0.0, 0.0], vec![10.0, 0.0]], self.n, self.noise, self.seed),
        }
    }
}

const HALF_RING_DENSE: usize = 276;
const HALF_RING_SPARSE: usize = 97;

/// 120 points, 40 from each of three bivariate normals with diagonal
/// covariances.
pub fn gen_three_normals(seed: u64) -> Dataset {
    gen_three_normals_sized(40, seed).expect("fixed parameters are valid")
}

fn gen_three_normals_sized(per: usize, seed: u64) -> Result<Dataset> {
    // (mean, variances)
    const COMPONENTS: [([f64; 2], [f64; 2]); 3] = [
        ([2.0, 2.0], [0.7, 0.7]),
        ([-2.0, 2.0], [0.7, 0.7]),
        ([0.0, -1.0], [1.5, 0.4]),
    ];
    let mut rng = rng_from(seed);
    let mut points = Vec::with_capacity(3 * per);
    let mut labels = Vec::with_capacity(3 * per);
    for (c, (mu, var)) in COMPONENTS.iter().enumerate() {
        let nx = Normal::new(mu[0], var[0].sqrt()).expect("positive sd");
        let ny = Normal::new(mu[1], var[1].sqrt()).expect("positive sd");
        for _ in 0..per {
            points.push(vec![nx.sample(&mut rng), ny.sample(&mut rng)]);
            labels.push(c + 1);
        }
    }
    Dataset::new("three_normals", &points, Some(labels))
}

fn jitter(noise: f64) -> Result<Option<Normal<f64>>> {
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::invalid(format!(
            "noise must be finite and nonnegative, got {noise}"
        )));
    }
    Ok((noise > 0.0).then(|| Normal::new(0.0, noise).expect("positive sd")))
}

/// Three intertwined Archimedean arms `r = θ`, rotated by 120° from each
/// other, each sweeping three quarters of a turn with even spacing along the
/// arc.
pub fn gen_spiral(n_per_arm: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n_per_arm == 0 {
        return Err(Error::invalid("spiral needs at least one point per arm"));
    }
    let normal = jitter(noise)?;
    let mut rng = rng_from(seed);
    let (start, end) = (0.75 * PI, 2.25 * PI);
    let mut points = Vec::with_capacity(3 * n_per_arm);
    let mut labels = Vec::with_capacity(3 * n_per_arm);
    for arm in 0..3 {
        let phase = 2.0 * PI * arm as f64 / 3.0;
        for i in 0..n_per_arm {
            let u = if n_per_arm == 1 {
                0.0
            } else {
                i as f64 / (n_per_arm - 1) as f64
            };
            // arc length of r = θ grows like θ²/2
            let theta = (start * start + (end * end - start * start) * u).sqrt();
            let mut p = [theta * (theta + phase).cos(), theta * (theta + phase).sin()];
            if let Some(nd) = &normal {
                p[0] += nd.sample(&mut rng);
                p[1] += nd.sample(&mut rng);
            }
            points.push(p.to_vec());
            labels.push(arm + 1);
        }
    }
    Dataset::new("spiral", &points, Some(labels))
}

/// Two interleaved half-annuli: a dense lower ring (label 1) and a sparse
/// upper ring (label 2).
pub fn gen_half_ring(n_dense: usize, n_sparse: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n_dense == 0 || n_sparse == 0 {
        return Err(Error::invalid("half-ring needs points in both rings"));
    }
    let normal = jitter(noise)?;
    let mut rng = rng_from(seed);
    let mut points = Vec::with_capacity(n_dense + n_sparse);
    let mut labels = Vec::with_capacity(n_dense + n_sparse);
    let rings = [(n_dense, [1.0, 0.5], PI, 1), (n_sparse, [0.0, 0.0], 0.0, 2)];
    for (count, centre, offset, label) in rings {
        for _ in 0..count {
            let angle = offset + PI * rng.random::<f64>();
            let mut p = [centre[0] + angle.cos(), centre[1] + angle.sin()];
            if let Some(nd) = &normal {
                p[0] += nd.sample(&mut rng);
                p[1] += nd.sample(&mut rng);
            }
            points.push(p.to_vec());
            labels.push(label);
        }
    }
    Dataset::new("half_ring", &points, Some(labels))
}

/// Isotropic Gaussian blobs, `n_per` points around each centre.
pub fn gen_blobs(centres: &[Vec<f64>], n_per: usize, sd: f64, seed: u64) -> Result<Dataset> {
    if centres.is_empty() || n_per == 0 {
        return Err(Error::invalid("blobs need at least one centre and one point each"));
    }
    let normal = jitter(sd)?;
    let mut rng = rng_from(seed);
    let mut points = Vec::with_capacity(centres.len() * n_per);
    let mut labels = Vec::with_capacity(centres.len() * n_per);
    for (c, centre) in centres.iter().enumerate() {
        for _ in 0..n_per {
            let p: Vec<f64> = centre
                .iter()
                .map(|&x| x + normal.as_ref().map_or(0.0, |nd| nd.sample(&mut rng)))
                .collect();
            points.push(p);
            labels.push(c + 1);
        }
    }
    Dataset::new("blobs", &points, Some(labels))
}

/// `n` draws from Unif[0, a] (label 1) followed by `n` from Unif[2a, 4a]
/// (label 2), in one dimension.
pub fn gen_two_uniform_1d(a: f64, n: usize, seed: u64) -> Result<Dataset> {
    if !(a > 0.0 && a.is_finite()) || n == 0 {
        return Err(Error::invalid("two-uniform needs a > 0 and n >= 1"));
    }
    let mut rng = rng_from(seed);
    let mut coords = Vec::with_capacity(2 * n);
    for _ in 0..n {
        coords.push(a * rng.random::<f64>());
    }
    for _ in 0..n {
        coords.push(2.0 * a + 2.0 * a * rng.random::<f64>());
    }
    let labels = (0..2 * n).map(|i| 1 + i / n).collect();
    Dataset::from_flat("two_uniform_1d", 1, coords, Some(labels))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

/// Reads a numeric CSV. A first line containing any non-numeric cell is
/// taken as a header. The label column (0-based index, or name when a header
/// exists) is removed from the coordinates and densified to `1..=K`.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&LabelColumn>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    parse_csv(&text, &name, label_column)
}

pub fn parse_csv(text: &str, name: &str, label_column: Option<&LabelColumn>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut rows: Vec<(usize, csv::StringRecord)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push((line, rec));
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no data rows".into(),
        });
    }

    let header = rows[0]
        .1
        .iter()
        .any(|c| c.parse::<f64>().is_err())
        .then(|| rows.remove(0).1);
    let width = rows.first().map(|(_, r)| r.len()).ok_or(Error::Parse {
        line: 1,
        message: "header but no data rows".into(),
    })?;

    let label_idx = match label_column {
        None => None,
        Some(LabelColumn::Index(i)) if *i < width => Some(*i),
        Some(LabelColumn::Index(i)) => {
            return Err(Error::invalid(format!(
                "label column {i} out of range for {width} columns"
            )))
        }
        Some(LabelColumn::Name(n)) => {
            let h = header
                .as_ref()
                .ok_or_else(|| Error::invalid(format!("label column `{n}` named but the file has no header")))?;
            Some(
                h.iter()
                    .position(|c| c == n)
                    .ok_or_else(|| Error::invalid(format!("no column named `{n}`")))?,
            )
        }
    };
    if width - label_idx.is_some() as usize == 0 {
        return Err(Error::invalid("no coordinate columns"));
    }

    let mut coords = Vec::new();
    let mut raw_labels = Vec::new();
    for (line, rec) in &rows {
        if rec.len() != width {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        for (c, cell) in rec.iter().enumerate() {
            if Some(c) == label_idx {
                raw_labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line: *line,
                message: format!("column {c}: `{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("column {c}: non-finite value `{cell}`"),
                });
            }
            coords.push(v);
        }
    }
    let labels = label_idx.map(|_| densify_text_labels(&raw_labels));
    Dataset::from_flat(name, width - label_idx.is_some() as usize, coords, labels)
}

/// Integer-looking labels keep their numeric order; anything else is
/// numbered by first appearance.
fn densify_text_labels(raw: &[String]) -> Vec<usize> {
    if let Ok(nums) = raw
        .iter()
        .map(|s| s.parse::<i64>())
        .collect::<std::result::Result<Vec<_>, _>>()
    {
        let mut distinct = nums.clone();
        distinct.sort_unstable();
        distinct.dedup();
        return nums.iter().map(|v| distinct.binary_search(v).unwrap() + 1).collect();
    }
    let mut seen: Vec<&str> = Vec::new();
    raw.iter()
        .map(|s| match seen.iter().position(|t| t == s) {
            Some(p) => p + 1,
            None => {
                seen.push(s);
                seen.len()
            }
        })
        .collect()
}
