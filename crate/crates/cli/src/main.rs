use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qldpc_lab::construct::SeedKind;
use qldpc_lab::decoder::{DecoderKind, SpaceTimeDecoder, SyndromeRecord};
use qldpc_lab::harness::{
    csv_string, resolve_distance, run_memory_experiment, threshold_scan, CodeSpec, Decoding, ExperimentConfig,
    NoiseModel, RunManifest, ScanConfig,
};
use qldpc_lab::noise::Channel;
use qldpc_lab::overhead::{overhead_report, OverheadRequest};
use qldpc_lab::shorec::ExtractionMode;
use qldpc_lab::stabcode::StabilizerCode;

#[derive(Parser)]
#[command(name = "qldpc-lab", version, about = "Quantum LDPC fault-tolerance experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a hypergraph-product code and print its JSON descriptor.
    BuildCode {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode a syndrome-difference record on a code.
    Decode {
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        syndrome: PathBuf,
        #[command(flatten)]
        decoder: DecoderArgs,
        /// Distance used for diagnostics; computed for small codes.
        #[arg(long)]
        distance: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a memory experiment.
    Simulate(SimulateArgs),
    /// Scan a code family over a grid of physical error rates.
    ThresholdScan(ScanArgs),
    /// Effective rates, thresholds and block plan for protocol parameters.
    Overhead {
        /// Request JSON (params, k, family, f_locations).
        #[arg(long)]
        params: PathBuf,
        /// Emit a CSV sweep instead of the JSON report.
        #[arg(long, value_enum)]
        table: Option<SweepVar>,
        /// Comma-separated sweep values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SeedArg {
    Repetition,
    Hamming,
    Gallager,
}

#[derive(Args, Clone)]
struct CodeArgs {
    #[arg(long, value_enum, default_value = "repetition")]
    seed_kind: SeedArg,
    /// Length of the classical seed code.
    #[arg(long, default_value_t = 3)]
    size: usize,
    /// Gallager check weight.
    #[arg(long, default_value_t = 4)]
    r: usize,
    /// Gallager bit degree.
    #[arg(long, default_value_t = 3)]
    c: usize,
    #[arg(long, default_value_t = 0)]
    code_seed: u64,
}

impl CodeArgs {
    fn seed(&self) -> SeedKind {
        match self.seed_kind {
            SeedArg::Repetition => SeedKind::Repetition,
            SeedArg::Hamming => SeedKind::Hamming,
            SeedArg::Gallager => SeedKind::Gallager {
                r: self.r,
                c: self.c,
                seed: self.code_seed,
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    Exact,
    Greedy,
}

#[derive(Args, Clone)]
struct DecoderArgs {
    #[arg(long, value_enum, default_value = "greedy")]
    decoder: DecoderArg,
    /// Weight cap for the exact decoder.
    #[arg(long, default_value_t = 6)]
    cap: usize,
}

impl DecoderArgs {
    fn kind(&self) -> DecoderKind {
        match self.decoder {
            DecoderArg::Exact => DecoderKind::Exact { cap: self.cap },
            DecoderArg::Greedy => DecoderKind::greedy_default(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Phenomenological,
    Circuit,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecodingArg {
    Static,
    SpaceTime,
}

impl From<DecodingArg> for Decoding {
    fn from(d: DecodingArg) -> Self {
        match d {
            DecodingArg::Static => Decoding::Static,
            DecodingArg::SpaceTime => Decoding::SpaceTime,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "space-time")]
    decoding: DecodingArg,
    #[command(flatten)]
    decoder: DecoderArgs,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Syndrome rounds; defaults to the code distance.
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON run manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config JSON; overrides all other flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long, value_enum, default_value = "phenomenological")]
    noise: NoiseArg,
    #[arg(long, default_value_t = 0.01)]
    p: f64,
    /// Syndrome error rate; defaults to p.
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    p_init: Option<f64>,
    #[command(flatten)]
    run: RunArgs,
    /// Directory for failed trials' fault paths.
    #[arg(long)]
    dump_failures: Option<PathBuf>,
    #[arg(long)]
    max_dumped: Option<usize>,
}

#[derive(Args)]
struct ScanArgs {
    /// Scan config JSON; overrides all other flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.03,0.1")]
    p_grid: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    q_factor: f64,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepVar {
    P,
    S,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn write_manifest<C: Serialize>(
    path: Option<&Path>,
    config: C,
    rows: Vec<qldpc_lab::harness::ResultRow>,
) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, RunManifest::new(config, rows).to_json()?).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => read_json::<ExperimentConfig>(path)?,
        None => {
            let noise = match args.noise {
                NoiseArg::Phenomenological => NoiseModel::Phenomenological {
                    p: args.p,
                    q: args.q.unwrap_or(args.p),
                    p_init: args.p_init,
                    channel: Channel::Depolarizing,
                },
                NoiseArg::Circuit => {
                    if args.q.is_some() {
                        bail!("--q has no meaning for circuit noise");
                    }
                    NoiseModel::Circuit {
                        p: args.p,
                        p_init: args.p_init,
                        mode: ExtractionMode::Shor,
                    }
                }
            };
            ExperimentConfig {
                code: CodeSpec::Product {
                    seed: args.code.seed(),
                    size: args.code.size,
                },
                noise,
                decoding: args.run.decoding.into(),
                decoder: args.run.decoder.kind(),
                trials: args.run.trials,
                seed: args.run.seed,
                rounds: args.run.rounds,
                workers: args.run.workers,
                archive_dir: args.dump_failures.clone(),
                max_archived: args.max_dumped,
            }
        }
    };
    let summary = run_memory_experiment(&config)?;
    eprintln!(
        "{} failures in {} trials ({:.2} s, {} archived)",
        summary.row.failures,
        summary.row.trials,
        summary.wall_seconds,
        summary.archived.len()
    );
    let rows = vec![summary.row.clone()];
    emit(args.run.out.as_deref(), &csv_string(&rows)?)?;
    write_manifest(args.run.manifest.as_deref(), &config, rows)
}

fn scan(args: ScanArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => read_json::<ScanConfig>(path)?,
        None => ScanConfig {
            seed_code: args.code.seed(),
            sizes: args.sizes.clone(),
            p_grid: args.p_grid.clone(),
            q_factor: args.q_factor,
            decoding: args.run.decoding.into(),
            decoder: args.run.decoder.kind(),
            trials: args.run.trials,
            seed: args.run.seed,
            rounds: args.run.rounds,
            workers: args.run.workers,
            max_rel_width: 0.5,
            max_abs_width: 0.01,
        },
    };
    let report = threshold_scan(&config)?;
    match report.crossing {
        Some(c) => eprintln!("crossing between lowest and highest p: {c}"),
        None => eprintln!("no ordering verdict (intervals too wide)"),
    }
    emit(args.run.out.as_deref(), &csv_string(&report.rows)?)?;
    write_manifest(args.run.manifest.as_deref(), &config, report.rows.clone())
}

fn decode(
    code: &Path,
    syndrome: &Path,
    decoder: &DecoderArgs,
    distance: Option<usize>,
    out: Option<&Path>,
) -> Result<()> {
    let code =
        StabilizerCode::from_json(&fs::read_to_string(code).with_context(|| format!("reading {}", code.display()))?)?;
    let record = SyndromeRecord::from_json(
        &fs::read_to_string(syndrome).with_context(|| format!("reading {}", syndrome.display()))?,
    )?;
    if record.rounds.is_empty() {
        bail!("syndrome record has no rounds");
    }
    let d = match distance {
        Some(d) => d,
        None => resolve_distance(&code)?,
    };
    let dec = SpaceTimeDecoder::new(&code, record.rounds.len(), decoder.kind(), d)?;
    let result = dec.decode(&record.rounds, None)?;
    emit(out, &serde_json::to_string_pretty(&result)?)
}

fn overhead(params: &Path, table: Option<SweepVar>, values: &[f64], out: Option<&Path>) -> Result<()> {
    let req: OverheadRequest = read_json(params)?;
    let Some(var) = table else {
        let report = overhead_report(&req)?;
        return emit(out, &serde_json::to_string_pretty(&report)?);
    };
    if values.is_empty() {
        bail!("--table needs --values");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "var",
        "value",
        "p_P",
        "p_B",
        "p_D",
        "q",
        "rates_in_range",
        "qubit_total",
        "locations_total",
        "feasible",
    ])?;
    for &v in values {
        let mut r = req.clone();
        let name = match var {
            SweepVar::P => {
                r.params.p = v;
                "p"
            }
            SweepVar::S => {
                if v < 1.0 || v.fract() != 0.0 {
                    bail!("s must be a positive integer, got {v}");
                }
                r.params.s = v as usize;
                "s"
            }
        };
        let rep = overhead_report(&r)?;
        let opt = |x: Option<f64>| x.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            name.to_string(),
            v.to_string(),
            rep.rates.p_p.to_string(),
            rep.rates.p_b.to_string(),
            rep.rates.p_d.to_string(),
            rep.rates.q.to_string(),
            rep.rates_in_range.to_string(),
            opt(rep.qubit_total),
            opt(rep.locations_total),
            rep.block_plan.as_ref().map(|b| b.feasible).unwrap_or(false).to_string(),
        ])?;
    }
    let bytes = w.into_inner().context("flushing csv")?;
    emit(out, &String::from_utf8(bytes)?)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::BuildCode { code, out } => {
            let built = CodeSpec::Product {
                seed: code.seed(),
                size: code.size,
            }
            .build()?;
            emit(out.as_deref(), &built.to_json())
        }
        Command::Decode {
            code,
            syndrome,
            decoder,
            distance,
            out,
        } => decode(&code, &syndrome, &decoder, distance, out.as_deref()),
        Command::Simulate(args) => simulate(args),
        Command::ThresholdScan(args) => scan(args),
        Command::Overhead {
            params,
            table,
            values,
            out,
        } => overhead(&params, table, &values, out.as_deref()),
    }
}
