use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trackforge::io::{read_config, PipelineConfig};
use trackforge::metrics::{MetricReport, SequenceSummary};
use trackforge::pipeline::{eval_files, gen_files, refine_files, track_files};
use trackforge::Error;

#[derive(Parser)]
#[command(
    name = "trackforge",
    version,
    about = "Motion-agnostic multi-object tracking pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the online tracker over a detection file.
    Track(TrackArgs),
    /// Split and reconnect tracklets offline.
    Refine(RefineArgs),
    /// Score tracks against ground truth.
    Eval(EvalArgs),
    /// Generate a synthetic scenario (gt.txt, det.txt, emb.bin).
    Gen(GenArgs),
}

#[derive(Args)]
struct TrackArgs {
    #[arg(long)]
    dets: PathBuf,
    #[arg(long)]
    embs: PathBuf,
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Embedding sidecar for refine [default: <out>.emb]
    #[arg(long)]
    out_embs: Option<PathBuf>,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    tracks: PathBuf,
    /// Embedding sidecar written by `track`.
    #[arg(long)]
    embs: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Embedding sidecar for the refined tracks [default: <out>.emb]
    #[arg(long)]
    out_embs: Option<PathBuf>,
    /// Skip the splitter.
    #[arg(long)]
    no_split: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Ground-truth file; repeat together with --pred for several sequences.
    #[arg(long, required = true)]
    gt: Vec<PathBuf>,
    #[arg(long, required = true)]
    pred: Vec<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Append the per-threshold breakdown.
    #[arg(long)]
    per_alpha: bool,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn class(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Internal(_) => "internal",
            Failure::Core(e) => match e {
                Error::Config(_) | Error::InvalidParameter(_) | Error::Generation(_) => "config",
                Error::Parse { .. } => "parse",
                Error::Format { .. } => "format",
                Error::Io { .. } => "io",
                Error::Consistency(_) | Error::DimensionMismatch { .. } => "consistency",
                Error::Data(_) | Error::InvalidGeometry(_) | Error::InvalidEmbedding(_) => "data",
                Error::InvalidMatrix(_) | Error::Sequencing { .. } => "internal",
            },
        }
    }

    fn exit_code(&self) -> u8 {
        match self.class() {
            "usage" | "config" => 1,
            "internal" => 3,
            _ => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Internal(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    Ok(match path {
        Some(p) => read_config(p)?,
        None => PipelineConfig::default(),
    })
}

fn sidecar(out: &Path, explicit: Option<PathBuf>) -> PathBuf {
    explicit.unwrap_or_else(|| {
        let mut s = out.as_os_str().to_owned();
        s.push(".emb");
        PathBuf::from(s)
    })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("TRACKFORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        Failure::Usage(format!(
            "TRACKFORGE_THREADS must be a non-negative integer, got {raw:?}"
        ))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Internal(e.to_string()))?;
    }
    Ok(())
}

fn summary_line(r: &MetricReport) -> String {
    format!(
        "HOTA {:.4} IDSW {} LocA {:.4} DetA {:.4} AssA {:.4} FN {} FP {}",
        r.hota, r.idsw, r.loc_a, r.det_a, r.ass_a, r.fn_, r.fp
    )
}

fn mean_line(s: &SequenceSummary) -> String {
    format!(
        "HOTA {:.4} IDSW {:.1} LocA {:.4} DetA {:.4} AssA {:.4} FN {:.1} FP {:.1}",
        s.hota, s.idsw, s.loc_a, s.det_a, s.ass_a, s.fn_, s.fp
    )
}

fn print_per_alpha(r: &MetricReport) {
    for a in &r.per_alpha {
        println!(
            "alpha {:.2} HOTA {:.4} DetA {:.4} AssA {:.4} LocA {:.4} TP {} FN {} FP {}",
            a.alpha, a.hota, a.det_a, a.ass_a, a.loc_a, a.tp, a.fn_, a.fp
        );
    }
}

fn track(args: TrackArgs) -> Result<(), Failure> {
    let config = load_config(args.config.as_deref())?;
    let out_embs = sidecar(&args.out, args.out_embs);
    track_files(&args.dets, &args.embs, &config, &args.out, &out_embs)?;
    Ok(())
}

fn refine(args: RefineArgs) -> Result<(), Failure> {
    let mut config = load_config(args.config.as_deref())?.refine;
    if args.no_split {
        config.enable_split = false;
    }
    let out_embs = sidecar(&args.out, args.out_embs);
    let outcome = refine_files(&args.tracks, &args.embs, &config, &args.out, &out_embs)?;
    println!(
        "tracklets: {} -> {} -> {}",
        outcome.input_count, outcome.after_split, outcome.after_connect
    );
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), Failure> {
    if args.gt.len() != args.pred.len() {
        return Err(Failure::Usage(format!(
            "got {} --gt and {} --pred; pass them in pairs",
            args.gt.len(),
            args.pred.len()
        )));
    }
    let options = load_config(args.config.as_deref())?.metrics;
    let reports = args
        .gt
        .iter()
        .zip(&args.pred)
        .map(|(g, p)| eval_files(g, p, &options))
        .collect::<Result<Vec<_>, _>>()?;

    if let [report] = reports.as_slice() {
        if args.json {
            println!(
                "{}",
                serde_json::to_string_pretty(report)
                    .map_err(|e| Failure::Internal(e.to_string()))?
            );
        } else {
            println!("{}", summary_line(report));
            if args.per_alpha {
                print_per_alpha(report);
            }
        }
        return Ok(());
    }

    let mean =
        SequenceSummary::mean(&reports).ok_or_else(|| Failure::Internal("no reports".into()))?;
    if args.json {
        let doc = serde_json::json!({ "sequences": reports, "mean": mean });
        println!(
            "{}",
            serde_json::to_string_pretty(&doc).map_err(|e| Failure::Internal(e.to_string()))?
        );
        return Ok(());
    }
    for (pred, report) in args.pred.iter().zip(&reports) {
        println!("{} {}", pred.display(), summary_line(report));
        if args.per_alpha {
            print_per_alpha(report);
        }
    }
    println!("mean {}", mean_line(&mean));
    Ok(())
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    let config = load_config(args.config.as_deref())?;
    gen_files(&config.scenario, &args.out_dir)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error[usage]: invalid command line");
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Track(a) => track(a),
        Command::Refine(a) => refine(a),
        Command::Eval(a) => eval(a),
        Command::Gen(a) => gen(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {}", f.class(), f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
