use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use shc_core::datasets::{load_csv, Generator};
use shc_core::ek::estimate_k;
use shc_core::eval::{format_table, repeat_and_score, Method, ScoreReport};
use shc_core::rng::derive_seed;
use shc_core::shc::{shc_cluster_with_dendrogram, EnsembleConfig, KlRule, ShcConfig};
use shc_core::Dataset;

use crate::args::{BenchArgs, ClusterArgs, Command, DataArgs, EnsembleArgs, EstimateArgs};
use crate::error::CliError;
use crate::manifest::Fingerprint;

/// Stream reserved for generating a built-in dataset from the master seed.
const DATA_STREAM: u64 = u64::MAX;

/// Bytes produced by a command; `path` is `None` for stdout.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub role: &'static str,
    pub path: Option<PathBuf>,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn file(role: &'static str, path: PathBuf, bytes: Vec<u8>) -> Self {
        Self {
            role,
            path: Some(path),
            bytes,
        }
    }

    fn stdout(role: &'static str, text: String) -> Self {
        Self {
            role,
            path: None,
            bytes: text.into_bytes(),
        }
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub dataset: Fingerprint,
    pub artifacts: Vec<Artifact>,
}

/// Runs a data command in memory. The seed must already be resolved.
pub fn execute(cmd: &Command) -> Result<RunOutput, CliError> {
    match cmd {
        Command::Cluster(a) => cluster(a),
        Command::EstimateK(a) => estimate(a),
        Command::Bench(a) => bench(a),
        Command::Replay(_) => Err(CliError::Usage("replay cannot be recorded in a manifest".into())),
    }
}

fn seed_of(e: &EnsembleArgs) -> u64 {
    e.seed.expect("seed resolved before execution")
}

pub fn load(data: &DataArgs, seed: u64) -> Result<Dataset, CliError> {
    match (&data.source.input, data.source.generator) {
        (Some(path), _) => Ok(load_csv(path, data.label_column.as_ref())?),
        (None, Some(kind)) => Ok(Generator::standard(kind, derive_seed(seed, DATA_STREAM)).generate()?),
        (None, None) => Err(CliError::Usage("one of --input or --gen is required".into())),
    }
}

fn ensemble_config(e: &EnsembleArgs) -> Result<EnsembleConfig, CliError> {
    let cfg = EnsembleConfig {
        b: e.b,
        k_max: e.kmax,
        alpha: e.alpha,
        dissim: e.dissim,
        kl_rule: KlRule::DunifN6N4,
        seed: seed_of(e),
    };
    cfg.validate().map_err(|err| CliError::Usage(err.to_string()))?;
    Ok(cfg)
}

fn check_k(k: usize, k_max: usize) -> Result<(), CliError> {
    if k < 2 || k > k_max {
        return Err(CliError::Usage(format!(
            "--k {k} is out of range: need 2 <= k <= k_max = {k_max} (raise --kmax for more clusters)"
        )));
    }
    Ok(())
}

fn labels_text(ids: &[usize]) -> String {
    let mut s = String::with_capacity(ids.len() * 3);
    for id in ids {
        let _ = writeln!(s, "{id}");
    }
    s
}

fn cluster(a: &ClusterArgs) -> Result<RunOutput, CliError> {
    let ensemble = ensemble_config(&a.ensemble)?;
    check_k(a.k, ensemble.k_max)?;
    let data = load(&a.data, ensemble.seed)?;
    let cfg = ShcConfig { k: a.k, ensemble };
    let (clustering, _, tree) = shc_cluster_with_dendrogram(&data, &cfg)?;
    let text = labels_text(clustering.assignment());
    let mut artifacts = vec![match &a.out {
        Some(p) => Artifact::file("labels", p.clone(), text.into_bytes()),
        None => Artifact::stdout("labels", text),
    }];
    if let Some(p) = &a.dump_dendrogram {
        artifacts.push(Artifact::file("dendrogram", p.clone(), tree.to_json().into_bytes()));
    }
    Ok(RunOutput {
        dataset: Fingerprint::of(&data),
        artifacts,
    })
}

fn estimate(a: &EstimateArgs) -> Result<RunOutput, CliError> {
    let cfg = ensemble_config(&a.ensemble)?;
    let data = load(&a.data, cfg.seed)?;
    let r = estimate_k(&data, &cfg, a.recount)?;
    let mut text = String::new();
    let _ = writeln!(text, "estimate: {}", r.estimate);
    let _ = writeln!(text, "k: {}", r.rounded);
    let _ = writeln!(text, "counts after removal: {} {}", r.counts.0, r.counts.1);
    let _ = writeln!(text, "lifetime cluster counts: {} {}", r.lifetime_ks.0, r.lifetime_ks.1);
    let _ = writeln!(text, "cut heights: {} {}", r.lifetime_cuts.0, r.lifetime_cuts.1);
    let _ = writeln!(
        text,
        "removed cluster sizes: {:?} {:?}",
        r.removed_sizes.0, r.removed_sizes.1
    );
    let _ = writeln!(text, "recount: {}", r.recount);
    let mut artifacts = vec![Artifact::stdout("report", text)];
    if let Some(p) = &a.out {
        artifacts.push(Artifact::file("result", p.clone(), json_bytes(&r)?));
    }
    Ok(RunOutput {
        dataset: Fingerprint::of(&data),
        artifacts,
    })
}

#[derive(Serialize)]
struct BenchRow<'a> {
    method: Method,
    k: usize,
    #[serde(flatten)]
    report: &'a ScoreReport,
}

fn bench(a: &BenchArgs) -> Result<RunOutput, CliError> {
    let base = ensemble_config(&a.ensemble)?;
    if a.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    if a.methods.is_empty() {
        return Err(CliError::Usage("--methods needs at least one method".into()));
    }
    let data = load(&a.data, base.seed)?;
    let classes = data.num_classes().ok_or_else(|| {
        CliError::Data(format!(
            "dataset `{}` has no ground-truth labels; pass --label-column or use a built-in generator",
            data.name()
        ))
    })?;
    let k = a.k.unwrap_or(classes);
    if a.methods.iter().any(|m| matches!(m, Method::ShcMin | Method::ShcP20)) {
        check_k(k, base.k_max)?;
    }
    let mut rows = Vec::with_capacity(a.methods.len());
    for (mi, &method) in a.methods.iter().enumerate() {
        let stream = derive_seed(base.seed, mi as u64);
        let seeds: Vec<u64> = (0..a.runs as u64).map(|r| derive_seed(stream, r)).collect();
        let report = repeat_and_score(|d, s| method.run(d, k, &base, s), &data, &seeds)?;
        rows.push((method, report));
    }
    let named: Vec<(String, ScoreReport)> = rows.iter().map(|(m, r)| (m.to_string(), r.clone())).collect();
    let title = format!("{} (n = {}, k = {k}, {} runs)", data.name(), data.n(), a.runs);
    let mut artifacts = vec![Artifact::stdout("table", format_table(&title, &named))];
    if let Some(p) = &a.json {
        let json: Vec<BenchRow> = rows
            .iter()
            .map(|(m, r)| BenchRow {
                method: *m,
                k,
                report: r,
            })
            .collect();
        artifacts.push(Artifact::file("scores", p.clone(), json_bytes(&json)?));
    }
    Ok(RunOutput {
        dataset: Fingerprint::of(&data),
        artifacts,
    })
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}
