mod args;
mod commands;
mod error;
mod manifest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;

use args::{Cli, Command, EnsembleArgs, ReplayArgs};
use commands::{execute, Artifact};
use error::CliError;
use manifest::{sha256_hex, OutputRecord, RunManifest};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    configure_threads()?;
    match command {
        Command::Replay(a) => replay(&a),
        mut cmd => {
            let seed = resolve_seed(&mut cmd);
            record(cmd, seed)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// `SHC_THREADS` sizes the worker pool; unset or 0 means one per core.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SHC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("SHC_THREADS = `{raw}` is not a thread count")))?;
    if n > 0 {
        // fails only if the pool was already built
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn ensemble_args(cmd: &mut Command) -> Option<&mut EnsembleArgs> {
    match cmd {
        Command::Cluster(a) => Some(&mut a.ensemble),
        Command::EstimateK(a) => Some(&mut a.ensemble),
        Command::Bench(a) => Some(&mut a.ensemble),
        Command::Replay(_) => None,
    }
}

fn resolve_seed(cmd: &mut Command) -> u64 {
    let e = ensemble_args(cmd).expect("data command");
    *e.seed.get_or_insert_with(|| {
        let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos());
        let seed = (nanos as u64) ^ ((nanos >> 64) as u64) ^ u64::from(std::process::id());
        eprintln!("seed: {seed}");
        seed
    })
}

fn manifest_path(cmd: &Command) -> PathBuf {
    let (explicit, out) = match cmd {
        Command::Cluster(a) => (a.manifest.clone(), a.out.clone()),
        Command::EstimateK(a) => (a.manifest.clone(), a.out.clone()),
        Command::Bench(a) => (a.manifest.clone(), a.json.clone()),
        Command::Replay(_) => (None, None),
    };
    explicit.unwrap_or_else(|| match out {
        Some(p) => {
            let mut s = p.into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        }
        None => PathBuf::from(format!("shc-{}.manifest.json", cmd.name())),
    })
}

fn record(cmd: Command, seed: u64) -> Result<(), CliError> {
    let start = Instant::now();
    let out = execute(&cmd)?;
    for a in &out.artifacts {
        emit(a, a.path.as_deref())?;
    }
    let manifest = RunManifest {
        tool: format!("shc {}", env!("CARGO_PKG_VERSION")),
        seed,
        dataset: out.dataset,
        outputs: out.artifacts.iter().map(output_record).collect(),
        wall_time_secs: start.elapsed().as_secs_f64(),
        command: cmd,
    };
    let path = manifest_path(&manifest.command);
    manifest.write(&path)?;
    eprintln!("manifest: {}", path.display());
    Ok(())
}

fn output_record(a: &Artifact) -> OutputRecord {
    OutputRecord {
        role: a.role.to_string(),
        path: a.path.clone(),
        bytes: a.bytes.len(),
        sha256: sha256_hex(&a.bytes),
    }
}

fn emit(a: &Artifact, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, &a.bytes).map_err(|e| CliError::io(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(&a.bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn replay(a: &ReplayArgs) -> Result<ExitCode, CliError> {
    let recorded = RunManifest::read(&a.manifest)?;
    let out = execute(&recorded.command)?;
    let mut mismatches = Vec::new();
    if out.dataset != recorded.dataset {
        mismatches.push(format!(
            "dataset fingerprint {} differs from recorded {}",
            out.dataset.sha256, recorded.dataset.sha256
        ));
    }
    if out.artifacts.len() != recorded.outputs.len() {
        mismatches.push(format!(
            "{} outputs produced, {} recorded",
            out.artifacts.len(),
            recorded.outputs.len()
        ));
    }
    for (art, rec) in out.artifacts.iter().zip(&recorded.outputs) {
        let now = output_record(art);
        if now.role != rec.role || now.sha256 != rec.sha256 {
            mismatches.push(format!(
                "{}: sha256 {} differs from recorded {}",
                rec.role, now.sha256, rec.sha256
            ));
        }
    }
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for art in &out.artifacts {
            let name = art
                .path
                .as_deref()
                .and_then(Path::file_name)
                .map_or_else(|| PathBuf::from(format!("{}.txt", art.role)), PathBuf::from);
            emit(art, Some(&dir.join(name)))?;
        }
    }
    if mismatches.is_empty() {
        println!(
            "replay: {} command, {} outputs identical (seed {})",
            recorded.command.name(),
            recorded.outputs.len(),
            recorded.seed
        );
        Ok(ExitCode::SUCCESS)
    } else {
        for m in &mismatches {
            println!("mismatch: {m}");
        }
        Ok(ExitCode::FAILURE)
    }
}
