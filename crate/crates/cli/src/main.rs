//! `sedpp` command-line tool.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use sedpp::dataio::{
    read_annotations_tsv, read_prediction_dir, read_weak_tags_tsv, write_atomic, write_events_tsv,
};
use sedpp::metrics::{score, DEFAULT_OFFSET_RATIO, DEFAULT_ONSET_COLLAR};
use sedpp::optimizer::{
    default_space, optimize_class_dependent, optimize_class_independent, Evaluator, Search,
    TuningOptions, DEFAULT_POINTS_PER_DIM, DEFAULT_STEPS,
};
use sedpp::segmentation::segment_dataset;
use sedpp::synthgen::{generate, write_corpus, SynthSpec};
use sedpp::types::{default_margin_frames, CHALLENGE_MARGIN_SECONDS, DEFAULT_FRAME_DURATION};
use sedpp::{AnnotationSet, Collars, Method, ParameterSpace, SegmenterConfig};

#[derive(Parser)]
#[command(
    name = "sedpp",
    version,
    about = "Sound event detection post-processing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn probability CSVs into an event TSV.
    Segment(SegmentArgs),
    /// Score an event TSV against reference annotations.
    Evaluate(EvaluateArgs),
    /// Tune a parametric method against reference annotations.
    Optimize(OptimizeArgs),
    /// Write a synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Parser)]
struct SegmentArgs {
    #[arg(long)]
    pred_dir: PathBuf,
    #[arg(long)]
    method: String,
    /// Parameter file (required for parametric methods).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seconds per frame [default: 10/431].
    #[arg(long)]
    frame_duration: Option<f64>,
    /// Weak-tag TSV restricting each clip to its tagged classes.
    #[arg(long)]
    tags: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Parser)]
struct EvaluateArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    est: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ONSET_COLLAR)]
    onset_collar: f64,
    #[arg(long, default_value_t = DEFAULT_OFFSET_RATIO)]
    offset_ratio: f64,
    /// JSON report path [default: <est>.score.json].
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Grid,
    Dicho,
}

#[derive(Parser)]
struct OptimizeArgs {
    #[arg(long)]
    pred_dir: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    method: String,
    /// Bounds file, one `name = kind lower upper` line per parameter.
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_POINTS_PER_DIM)]
    points: usize,
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, value_enum, default_value = "dicho")]
    mode: Mode,
    #[arg(long)]
    out_config: PathBuf,
    /// JSON report path [default: <out-config>.report.json].
    #[arg(long)]
    report: Option<PathBuf>,
    /// Segment every class of every clip instead of only the annotated ones.
    #[arg(long)]
    no_oracle: bool,
    #[arg(long)]
    frame_duration: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ONSET_COLLAR)]
    onset_collar: f64,
    #[arg(long, default_value_t = DEFAULT_OFFSET_RATIO)]
    offset_ratio: f64,
    /// [default: 200 ms in frames]
    #[arg(long)]
    min_gap_frames: Option<usize>,
    /// [default: 200 ms in frames]
    #[arg(long)]
    min_len_frames: Option<usize>,
}

#[derive(Parser)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    clips: usize,
    #[arg(long)]
    out_dir: PathBuf,
    /// Comma-separated class names.
    #[arg(long, value_delimiter = ',')]
    classes: Option<Vec<String>>,
    #[arg(long)]
    max_events: Option<usize>,
    #[arg(long)]
    min_duration: Option<f64>,
    #[arg(long)]
    max_duration: Option<f64>,
    #[arg(long)]
    min_separation: Option<f64>,
    #[arg(long)]
    inside_prob: Option<f64>,
    #[arg(long)]
    outside_prob: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    render_window: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    frame_duration: Option<f64>,
}

enum Failure {
    Usage(String),
    Data(sedpp::Error),
}

impl From<sedpp::Error> for Failure {
    fn from(e: sedpp::Error) -> Self {
        Failure::Data(e)
    }
}

type CmdResult = Result<(), Failure>;

fn parse_method(name: &str) -> Result<Method, Failure> {
    name.parse()
        .map_err(|e: sedpp::Error| Failure::Usage(e.to_string()))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Data(sedpp::Error::Data(format!("{}: {e}", path.display()))))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Data(sedpp::Error::Data(format!("{}: {e}", path.display()))))
}

fn read_annotations(path: &Path) -> Result<AnnotationSet, Failure> {
    Ok(read_annotations_tsv(
        open(path)?,
        &path.display().to_string(),
    )?)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn json_bytes(value: &serde_json::Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("JSON values always serialize");
    bytes.push(b'\n');
    bytes
}

fn cmd_segment(args: SegmentArgs) -> CmdResult {
    let method = parse_method(&args.method)?;
    let frame_duration = args.frame_duration.unwrap_or(DEFAULT_FRAME_DURATION);
    let margin = default_margin_frames(frame_duration, CHALLENGE_MARGIN_SECONDS);
    let config = match &args.config {
        Some(path) => {
            let config =
                SegmenterConfig::parse_kv(&read_text(path)?, &path.display().to_string(), margin)?;
            if config.method != method {
                return Err(Failure::Usage(format!(
                    "--method {method} does not match method {} in {}",
                    config.method,
                    path.display()
                )));
            }
            config
        }
        None if method.is_statistic() => SegmenterConfig::statistic(method, margin, margin),
        None => return Err(Failure::Usage(format!("{method} requires --config"))),
    };
    let tags = match &args.tags {
        Some(path) => Some(read_weak_tags_tsv(
            open(path)?,
            &path.display().to_string(),
        )?),
        None => None,
    };
    let dataset = read_prediction_dir(&args.pred_dir, frame_duration)?;
    let events = segment_dataset(&dataset, &config, tags.as_ref())?;
    let mut out = Vec::new();
    write_events_tsv(&events, &mut out)?;
    write_atomic(&args.out, &out)?;
    eprintln!(
        "{} events from {} clips -> {}",
        events.len(),
        dataset.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> CmdResult {
    let collars = Collars {
        onset: args.onset_collar,
        offset_ratio: args.offset_ratio,
    };
    collars
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let reference = read_annotations(&args.reference)?;
    let estimate = read_annotations(&args.est)?;
    let report = score(&reference, estimate.events(), &collars)?;
    print!("{}", report.to_text());
    let path = args
        .report
        .unwrap_or_else(|| with_suffix(&args.est, ".score.json"));
    let value = json!({
        "reference": args.reference.display().to_string(),
        "estimate": args.est.display().to_string(),
        "onset_collar": collars.onset,
        "offset_ratio": collars.offset_ratio,
        "report": report,
    });
    write_atomic(&path, &json_bytes(&value))?;
    Ok(())
}

fn cmd_optimize(args: OptimizeArgs) -> CmdResult {
    let method = parse_method(&args.method)?;
    if method.is_statistic() {
        return Err(Failure::Usage(format!(
            "{method} has no parameters to optimize"
        )));
    }
    let frame_duration = args.frame_duration.unwrap_or(DEFAULT_FRAME_DURATION);
    let margin = default_margin_frames(frame_duration, CHALLENGE_MARGIN_SECONDS);
    let collars = Collars {
        onset: args.onset_collar,
        offset_ratio: args.offset_ratio,
    };
    collars
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;

    let space = match &args.space {
        Some(path) => ParameterSpace::parse_bounds(
            &read_text(path)?,
            &path.display().to_string(),
            args.points,
            args.steps,
        )?,
        None => default_space(method.family(), args.points, args.steps)?,
    };
    let search = match args.mode {
        Mode::Grid => Search::Grid(space.initial_grid()),
        Mode::Dicho => Search::Dichotomic(space.clone()),
    };

    let annotations = read_annotations(&args.reference)?;
    let dataset = read_prediction_dir(&args.pred_dir, frame_duration)?;
    let options = TuningOptions {
        collars,
        min_gap_frames: args.min_gap_frames.unwrap_or(margin),
        min_len_frames: args.min_len_frames.unwrap_or(margin),
        use_oracle: !args.no_oracle,
    };
    let evaluator = Evaluator::new(&dataset, &annotations, options)?;
    let outcome = if method.is_class_dependent() {
        optimize_class_dependent(method, &search, &evaluator)?
    } else {
        optimize_class_independent(method, &search, &evaluator)?
    };

    for (label, result) in &outcome.searches {
        for (i, step) in result.trace.iter().enumerate() {
            println!(
                "{label} step {}: {} evaluations, best {:?} -> {:.6}",
                i + 1,
                step.evaluations,
                step.best,
                step.best_value
            );
        }
    }
    println!(
        "{method}: macro-F1 {:.6} after {} evaluations",
        outcome.macro_f1, outcome.evaluations
    );

    write_atomic(&args.out_config, outcome.config.to_kv().as_bytes())?;
    let path = args
        .report
        .unwrap_or_else(|| with_suffix(&args.out_config, ".report.json"));
    let value = json!({
        "method": method.as_str(),
        "mode": match args.mode { Mode::Grid => "grid", Mode::Dicho => "dicho" },
        "space": space,
        "options": options,
        "macro_f1": outcome.macro_f1,
        "evaluations": outcome.evaluations,
        "config": outcome.config.to_kv(),
        "searches": outcome.searches,
    });
    write_atomic(&path, &json_bytes(&value))?;
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> CmdResult {
    let mut spec = SynthSpec {
        seed: args.seed,
        n_clips: args.clips,
        ..SynthSpec::default()
    };
    if let Some(v) = args.classes {
        spec.class_names = v;
    }
    if let Some(v) = args.max_events {
        spec.max_events_per_clip = v;
    }
    if let Some(v) = args.min_duration {
        spec.duration_range.0 = v;
    }
    if let Some(v) = args.max_duration {
        spec.duration_range.1 = v;
    }
    if let Some(v) = args.min_separation {
        spec.min_separation = v;
    }
    if let Some(v) = args.inside_prob {
        spec.inside_prob = v;
    }
    if let Some(v) = args.outside_prob {
        spec.outside_prob = v;
    }
    if let Some(v) = args.noise_sigma {
        spec.noise_sigma = v;
    }
    if let Some(v) = args.render_window {
        spec.render_window = v;
    }
    if let Some(v) = args.frames {
        spec.n_frames = v;
    }
    if let Some(v) = args.frame_duration {
        spec.frame_duration = v;
    }
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let corpus = generate(&spec)?;
    write_corpus(&corpus, &args.out_dir)?;
    eprintln!(
        "{} clips, {} events -> {}",
        corpus.predictions.len(),
        corpus.annotations.events().len(),
        args.out_dir.display()
    );
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Segment(a) => cmd_segment(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Usage(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Data(e))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(3),
    }
}
