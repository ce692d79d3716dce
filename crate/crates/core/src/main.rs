use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use scdt_anomaly::error::Error;
use scdt_anomaly::eval::{auc_report, binary_map, roc, threshold_at_fpr};
use scdt_anomaly::io::{self, read_cube, read_envi, read_mask, read_scoremap, write_atomic, write_scoremap, ScoreFormat};
use scdt_anomaly::rx::rx_score_cube;
use scdt_anomaly::subspace::{ScdtDetector, DEFAULT_ENERGY_THRESHOLD};
use scdt_anomaly::synth::{generate_scene, SceneSpec};
use scdt_anomaly::types::HsiCube;

const THREADS_ENV: &str = "HAD_THREADS";

#[derive(Parser)]
#[command(name = "scdt-anomaly", version, about = "Hyperspectral anomaly detection in the signed CDT domain")]
struct Cli {
    /// Worker threads (default: all cores). HAD_THREADS overrides this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene and its ground-truth mask.
    Synth(SynthArgs),
    /// Score every pixel of a cube.
    Detect(DetectArgs),
    /// ROC, AUC and operating points of a score map against a mask.
    Eval(EvalArgs),
    /// Write only the ROC curve as CSV.
    Roc(RocArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Scene spec JSON; missing fields take their defaults.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Override the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Cube sidecar path (portable container, `.json`).
    #[arg(long)]
    output: PathBuf,
    /// Mask path (`.pgm` or `.json`).
    #[arg(long)]
    mask: PathBuf,
    /// Resolved spec path (default: `<output>.spec.json`).
    #[arg(long)]
    spec_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Detector {
    Scdt,
    Rx,
}

#[derive(Args)]
struct DetectArgs {
    /// Portable cube sidecar (`.json`) or ENVI header (`.hdr`).
    #[arg(long)]
    input: PathBuf,
    /// ENVI data file (default: the header path without `.hdr`, or with
    /// `.img`, `.dat`, `.raw`, `.bsq`, `.bil`, `.bip`).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "scdt")]
    detector: Detector,
    /// Quantile grid size M (default: 2 x bands).
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ENERGY_THRESHOLD)]
    energy_threshold: f64,
    /// Multiplier on the two mass coordinates.
    #[arg(long, default_value_t = 1.0)]
    mass_weight: f64,
    /// Subtract the mean before fitting the subspace.
    #[arg(long)]
    centered: bool,
    /// RX diagonal loading (default: 1e-6 x trace / bands).
    #[arg(long)]
    ridge: Option<f64>,
    /// Band keep-list, e.g. `0-103,114-150,170-219`.
    #[arg(long)]
    bands: Option<String>,
    /// Score map path; the format follows the extension unless given.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    format: Option<ScoreFormat>,
    /// Run manifest (default: `<output>.manifest.json`).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Score map (`.csv` or portable `.json`).
    #[arg(long)]
    scores: PathBuf,
    /// Ground truth (`.pgm` or portable `.json`).
    #[arg(long)]
    mask: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-3, 1e-2, 1.0])]
    fpr_targets: Vec<f64>,
    /// Summary JSON (also printed to stdout).
    #[arg(long)]
    summary: Option<PathBuf>,
    /// ROC curve CSV.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Directory for one binary PGM map per FPR target.
    #[arg(long)]
    maps_dir: Option<PathBuf>,
}

#[derive(Args)]
struct RocArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    /// Output CSV (default: stdout).
    #[arg(long)]
    curve: Option<PathBuf>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::BadParameter(msg.into())
}

/// Parses `3,5-7` into `[3, 5, 6, 7]`.
fn parse_keep_list(s: &str) -> Result<Vec<usize>, Error> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad(format!("bad band index `{t}` in --bands")));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if b < a {
                    return Err(bad(format!("empty band range `{part}`")));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err(bad("--bands selects no bands"));
    }
    Ok(out)
}

fn envi_data_path(header: &Path) -> Result<PathBuf, Error> {
    let stem = header.with_extension("");
    io::read_envi_header(header)?;
    let mut candidates = vec![stem.clone()];
    for ext in ["img", "dat", "raw", "bsq", "bil", "bip"] {
        candidates.push(stem.with_extension(ext));
    }
    candidates
        .into_iter()
        .find(|p| p.is_file())
        .ok_or_else(|| {
            io::IoError::Io {
                path: stem,
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no ENVI data file next to the header; pass --data"),
            }
            .into()
        })
}

fn load_cube(input: &Path, data: Option<&Path>) -> Result<HsiCube, Error> {
    let is_hdr = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("hdr"));
    if is_hdr {
        let data = match data {
            Some(d) => d.to_path_buf(),
            None => envi_data_path(input)?,
        };
        Ok(read_envi(input, &data)?)
    } else {
        Ok(read_cube(input)?)
    }
}

fn write_json(path: &Path, value: &Value) -> Result<(), Error> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("json value serializes");
    bytes.push(b'\n');
    Ok(write_atomic(path, &bytes)?)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

fn cmd_synth(a: &SynthArgs) -> Result<(), Error> {
    let mut spec: SceneSpec = match &a.spec {
        Some(p) => {
            let bytes = fs::read(p).map_err(|e| io::IoError::Io { path: p.clone(), source: e })?;
            serde_json::from_slice(&bytes).map_err(|e| io::IoError::Parse {
                path: p.clone(),
                line: e.line(),
                msg: e.to_string(),
            })?
        }
        None => SceneSpec::default(),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let (cube, mask) = generate_scene(&spec)?;
    io::write_cube(&cube, &a.output)?;
    io::write_mask(&mask, &a.mask)?;
    let spec_out = a.spec_out.clone().unwrap_or_else(|| a.output.with_extension("spec.json"));
    write_json(&spec_out, &serde_json::to_value(&spec).expect("spec serializes"))
}

fn cmd_detect(a: &DetectArgs, threads: usize) -> Result<(), Error> {
    if let Some(m) = a.grid_size {
        if m < 2 {
            return Err(bad(format!("--grid-size must be at least 2, got {m}")));
        }
    }
    if !(a.energy_threshold > 0.0 && a.energy_threshold <= 1.0) {
        return Err(bad(format!("--energy-threshold must be in (0, 1], got {}", a.energy_threshold)));
    }
    if !(a.mass_weight.is_finite() && a.mass_weight >= 0.0) {
        return Err(bad(format!("--mass-weight must be finite and non-negative, got {}", a.mass_weight)));
    }
    if let Some(r) = a.ridge {
        if !(r.is_finite() && r >= 0.0) {
            return Err(bad(format!("--ridge must be finite and non-negative, got {r}")));
        }
    }
    let format = match a.format.or_else(|| ScoreFormat::from_path(&a.output)) {
        Some(f) => f,
        None => return Err(bad("cannot infer the score format from --output; pass --format")),
    };
    let keep = a.bands.as_deref().map(parse_keep_list).transpose()?;

    let start = Instant::now();
    let mut cube = load_cube(&a.input, a.data.as_deref())?;
    if let Some(keep) = &keep {
        cube = cube.select_bands(keep)?;
    }
    let mut manifest = json!({
        "command": "detect",
        "version": env!("CARGO_PKG_VERSION"),
        "input": a.input,
        "rows": cube.rows(),
        "cols": cube.cols(),
        "bands": cube.bands(),
        "band_keep_list": keep,
        "threads": threads,
        "output": a.output,
        "format": format!("{format:?}").to_lowercase(),
    });
    let map = match a.detector {
        Detector::Scdt => {
            let det = ScdtDetector {
                grid_size: a.grid_size,
                energy_threshold: a.energy_threshold,
                mass_weight: a.mass_weight,
                centered: a.centered,
            };
            let (map, model) = det.score_cube(&cube)?;
            let extra = json!({
                "detector": "scdt",
                "grid_size": det.resolved_grid_size(cube.bands()),
                "energy_threshold": a.energy_threshold,
                "mass_weight": a.mass_weight,
                "centered": a.centered,
                "k": model.k(),
                "singular_values": model.singular_values(),
                "energy_profile": model.energy_profile(),
            });
            merge(&mut manifest, extra);
            map
        }
        Detector::Rx => {
            let (map, model) = rx_score_cube(&cube, a.ridge)?;
            merge(
                &mut manifest,
                json!({ "detector": "rx", "ridge": model.ridge(), "ridge_was_default": a.ridge.is_none() }),
            );
            map
        }
    };
    write_scoremap(&map, &a.output, format)?;
    manifest["wall_time_s"] = json!(start.elapsed().as_secs_f64());
    let path = a.manifest.clone().unwrap_or_else(|| sibling(&a.output, ".manifest.json"));
    write_json(&path, &manifest)
}

fn merge(base: &mut Value, extra: Value) {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
}

fn target_label(t: f64) -> String {
    format!("{t:e}")
}

fn cmd_eval(a: &EvalArgs) -> Result<(), Error> {
    if a.fpr_targets.is_empty() {
        return Err(bad("--fpr-targets is empty"));
    }
    if let Some(t) = a.fpr_targets.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(bad(format!("FPR target {t} outside (0, 1]")));
    }
    let scores = read_scoremap(&a.scores)?;
    let mask = read_mask(&a.mask)?;
    let curve = roc(&scores, &mask)?;
    let report = auc_report(&curve);
    let mut points = Vec::new();
    for &t in &a.fpr_targets {
        let op = threshold_at_fpr(&curve, t)?;
        let map_path = match &a.maps_dir {
            Some(dir) => {
                let p = dir.join(format!("binary_fpr_{}.pgm", target_label(t)));
                io::write_pgm_mask(&binary_map(&scores, op.map_threshold), &p)?;
                Some(p)
            }
            None => None,
        };
        let mut v = serde_json::to_value(op).expect("operating point serializes");
        // JSON has no infinities; spell them out
        for key in ["threshold", "map_threshold"] {
            let x = if key == "threshold" { op.threshold } else { op.map_threshold };
            if x.is_infinite() {
                v[key] = json!(if x > 0.0 { "inf" } else { "-inf" });
            }
        }
        merge(&mut v, json!({ "target_fpr": t, "map": map_path }));
        points.push(v);
    }
    let (n_anomaly, n_background) = curve.counts();
    let summary = json!({
        "command": "eval",
        "scores": a.scores,
        "mask": a.mask,
        "detector": scores.detector_id(),
        "n_anomaly": n_anomaly,
        "n_background": n_background,
        "auc": report,
        "operating_points": points,
    });
    if let Some(p) = &a.curve {
        write_atomic(p, curve.to_csv().as_bytes())?;
    }
    if let Some(p) = &a.summary {
        write_json(p, &summary)?;
    }
    println!("{}", serde_json::to_string_pretty(&summary).expect("json value serializes"));
    Ok(())
}

fn cmd_roc(a: &RocArgs) -> Result<(), Error> {
    let scores = read_scoremap(&a.scores)?;
    let mask = read_mask(&a.mask)?;
    let csv = roc(&scores, &mask)?.to_csv();
    match &a.curve {
        Some(p) => write_atomic(p, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn thread_count(flag: Option<usize>) -> Result<usize, Error> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| bad(format!("{THREADS_ENV}={v} is not a thread count")))?,
        ),
        Err(_) => flag,
    };
    match n {
        Some(0) => Err(bad("thread count must be at least 1")),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let threads = thread_count(cli.threads)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| bad(e.to_string()))?;
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Detect(a) => cmd_detect(a, threads),
        Command::Eval(a) => cmd_eval(a),
        Command::Roc(a) => cmd_roc(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
