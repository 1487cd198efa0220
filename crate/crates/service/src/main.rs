use std::io::{self, BufRead, Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use glyphplan_core::dataprep::{export_dataset, load_samples, ExportConfig};
use glyphplan_core::eval::{run_benchmark, BenchmarkConfig};
use glyphplan_core::grammar::{parse_layout, serialize_layout};
use glyphplan_core::planner::{BackendConfig, HeuristicPlanner, LayoutPlanner, PlanRequest};
use glyphplan_core::record::LayoutRecord;
use glyphplan_core::session::{parse_command, Session, SessionCommand, USAGE};
use glyphplan_core::tokenizer::{decode, encode, EncodeOptions, TokenRecord, TokenizationLevel, Vocabulary};
use glyphplan_core::{Canvas, Layout, ParseMode, ReprVariant};
use glyphplan_service::api::{default_max_len, record_of};
use glyphplan_service::config::{DEFAULT_BODY_LIMIT, DEFAULT_CAPACITY};
use glyphplan_service::{backend_planner, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "glyphplan", version, about = "Plan, edit, tokenize and evaluate text layouts")]
struct Cli {
    /// Output form.
    #[arg(long, global = true, value_enum, default_value = "human", env = "GLYPHPLAN_OUTPUT")]
    output: Output,

    /// Canvas side in grid units.
    #[arg(long, global = true, default_value_t = 128, env = "GLYPHPLAN_CANVAS")]
    canvas: i64,

    /// Leave the 181 angle tokens out of the vocabulary.
    #[arg(long, global = true, env = "GLYPHPLAN_NO_ANGLE_TOKENS")]
    no_angle_tokens: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Human,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plan a layout for a prompt.
    Plan {
        #[command(flatten)]
        request: RequestArgs,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Interactive editing loop reading commands from stdin.
    Edit {
        #[command(flatten)]
        request: RequestArgs,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Encode a prompt and layout into token ids.
    Encode {
        #[arg(long)]
        prompt: String,
        /// Layout file: a JSON layout record or layout text ("-" for stdin).
        #[arg(long)]
        layout: PathBuf,
        #[arg(long, default_value = "char")]
        level: TokenizationLevel,
        /// Box representation of layout text, and of the encoding.
        #[arg(long)]
        variant: Option<ReprVariant>,
        /// Sequence length; 128 by default, 256 for quad boxes.
        #[arg(short = 'L', long = "max-len")]
        max_len: Option<usize>,
    },
    /// Decode a token record back into a prompt and layout.
    Decode {
        /// JSON token record file ("-" for stdin).
        #[arg(long)]
        ids: PathBuf,
    },
    /// Evaluation harness.
    Eval {
        #[command(subcommand)]
        command: EvalCommand,
    },
    /// Fine-tuning data preparation.
    Dataprep {
        #[command(subcommand)]
        command: DataprepCommand,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080", env = "GLYPHPLAN_BIND")]
        bind: SocketAddr,
        #[arg(long, default_value_t = DEFAULT_CAPACITY, env = "GLYPHPLAN_CAPACITY")]
        capacity: usize,
        /// Maximum request body size in bytes.
        #[arg(long, default_value_t = DEFAULT_BODY_LIMIT, env = "GLYPHPLAN_BODY_LIMIT")]
        body_limit: usize,
        /// Session snapshot file, restored on start and rewritten on change.
        #[arg(long, env = "GLYPHPLAN_SNAPSHOT")]
        snapshot: Option<PathBuf>,
        /// Static files served under /ui.
        #[arg(long, env = "GLYPHPLAN_UI_DIR")]
        ui_dir: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
    },
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// Evaluate a dataset of predicted layouts against reference keywords.
    Run {
        #[arg(long, env = "GLYPHPLAN_DATASET")]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0.5, env = "GLYPHPLAN_IOU_THRESHOLD")]
        iou_threshold: f64,
        #[arg(long, env = "GLYPHPLAN_CASE_SENSITIVE")]
        case_sensitive: bool,
        #[arg(long, value_delimiter = ',', default_value = "64,128,256", env = "GLYPHPLAN_LENGTHS")]
        lengths: Vec<usize>,
        #[arg(long, default_value = "char", env = "GLYPHPLAN_LEVEL")]
        level: TokenizationLevel,
    },
}

#[derive(Debug, Subcommand)]
enum DataprepCommand {
    /// Convert caption + OCR records into instruction pairs.
    Export {
        #[arg(long, env = "GLYPHPLAN_INPUT")]
        input: PathBuf,
        #[arg(long, env = "GLYPHPLAN_OUT")]
        out: PathBuf,
        /// Samples per split.
        #[arg(long, value_delimiter = ',', default_value = "5000", env = "GLYPHPLAN_SPLITS")]
        splits: Vec<usize>,
        #[arg(long, default_value_t = 0, env = "GLYPHPLAN_SEED")]
        seed: u64,
        /// Draw every split from the whole pool instead of disjoint slices.
        #[arg(long, env = "GLYPHPLAN_ALLOW_OVERLAP")]
        allow_overlap: bool,
        /// Keep samples without OCR lines, with empty targets.
        #[arg(long, env = "GLYPHPLAN_KEEP_EMPTY")]
        keep_empty: bool,
    },
}

#[derive(Debug, Args)]
struct RequestArgs {
    #[arg(long)]
    prompt: String,
    /// Keywords to place; extracted from the prompt when absent.
    #[arg(long, value_delimiter = ',')]
    keywords: Option<Vec<String>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl RequestArgs {
    fn request(&self) -> PlanRequest {
        PlanRequest { prompt: self.prompt.clone(), keywords: self.keywords.clone(), seed: self.seed }
    }
}

#[derive(Debug, Args)]
struct BackendArgs {
    /// Chat endpoint of a layout model; the heuristic planner is used when
    /// absent.
    #[arg(long, env = "GLYPHPLAN_BACKEND_URL")]
    backend_url: Option<String>,
    #[arg(long, default_value_t = 30_000, env = "GLYPHPLAN_TIMEOUT_MS")]
    timeout_ms: u64,
    #[arg(long, default_value_t = 2, env = "GLYPHPLAN_RETRIES")]
    retries: u32,
    #[arg(long, value_enum, default_value = "strict", env = "GLYPHPLAN_PARSE_MODE")]
    parse_mode: Mode,
    /// Box representation the model answers in.
    #[arg(long, default_value = "ltrb", env = "GLYPHPLAN_BACKEND_VARIANT")]
    backend_variant: ReprVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Strict,
    Lenient,
}

impl BackendArgs {
    fn config(&self) -> Option<BackendConfig> {
        self.backend_url.as_ref().map(|url| BackendConfig {
            endpoint: url.clone(),
            timeout: Duration::from_millis(self.timeout_ms),
            max_retries: self.retries,
            mode: match self.parse_mode {
                Mode::Strict => ParseMode::Strict,
                Mode::Lenient => ParseMode::Lenient,
            },
            variant: self.backend_variant,
        })
    }

    fn planner(&self) -> anyhow::Result<Arc<dyn LayoutPlanner>> {
        Ok(match self.config() {
            Some(c) => {
                c.validate()?;
                backend_planner(c)
            }
            None => Arc::new(HeuristicPlanner),
        })
    }
}

fn read_input(path: &Path) -> anyhow::Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn layout_text(layout: &Layout) -> String {
    let variant = layout.lines.first().map(|l| ReprVariant::of(&l.bbox)).unwrap_or_default();
    serialize_layout(layout, variant).unwrap_or_else(|e| format!("<unprintable layout: {e}>"))
}

fn print_layout(output: Output, prompt: &str, layout: &Layout, warnings: &[String]) -> anyhow::Result<()> {
    match output {
        Output::Json => print_json(&record_of(prompt, layout)?),
        Output::Human => {
            for w in warnings {
                eprintln!("warning: {w}");
            }
            let text = layout_text(layout);
            if !text.is_empty() {
                println!("{text}");
            }
            Ok(())
        }
    }
}

fn show_session(output: Output, session: &Session) -> anyhow::Result<()> {
    match output {
        Output::Json => print_json(&session.to_state()?),
        Output::Human => {
            let layout = session.current();
            if layout.is_empty() {
                println!("(empty layout)");
            }
            let variant = layout.lines.first().map(|l| ReprVariant::of(&l.bbox)).unwrap_or_default();
            for (i, line) in layout.lines.iter().enumerate() {
                let single = Layout::new(vec![line.clone()], layout.canvas);
                println!("{i}: {}", serialize_layout(&single, variant).unwrap_or_default());
            }
            Ok(())
        }
    }
}

fn edit_loop(cli: &Cli, request: PlanRequest, planner: &dyn LayoutPlanner, canvas: Canvas) -> anyhow::Result<()> {
    let mut session = Session::create(request, planner, canvas)?;
    show_session(cli.output, &session)?;
    let stdin = io::stdin();
    let interactive = cli.output == Output::Human;
    loop {
        if interactive {
            print!("> ");
            io::stdout().flush()?;
        }
        let mut line = String::new();
        if stdin.lock().read_line(&mut line)? == 0 {
            break;
        }
        let line = line.trim();
        match line {
            "" => continue,
            "quit" | "exit" => break,
            "help" => {
                println!("{USAGE} | show | quit");
                continue;
            }
            "show" => {
                show_session(cli.output, &session)?;
                continue;
            }
            _ => {}
        }
        let result = parse_command(line)
            .map_err(anyhow::Error::from)
            .and_then(|cmd: SessionCommand| session.apply_command(cmd, planner).map_err(anyhow::Error::from));
        match result {
            Ok(warnings) => {
                for w in warnings {
                    eprintln!("warning: {w}");
                }
                show_session(cli.output, &session)?;
            }
            Err(e) => eprintln!("error: {e}"),
        }
    }
    Ok(())
}

fn load_layout(text: &str, variant: Option<ReprVariant>, canvas: Canvas) -> anyhow::Result<(Layout, ReprVariant)> {
    if text.trim_start().starts_with('{') {
        let record: LayoutRecord = serde_json::from_str(text).context("invalid layout record")?;
        let layout = record.to_layout()?;
        return Ok((layout, variant.unwrap_or(record.repr)));
    }
    let variant = variant.unwrap_or_default();
    let parsed = parse_layout(text, variant, canvas, ParseMode::Lenient)?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    Ok((parsed.layout, variant))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let canvas = Canvas::new(cli.canvas)?;
    let vocab = || Vocabulary::default_with(!cli.no_angle_tokens);
    match &cli.command {
        Command::Plan { request, backend } => {
            let planner = backend.planner()?;
            let outcome = planner.plan(&request.request(), canvas)?;
            print_layout(cli.output, &request.prompt, &outcome.layout, &outcome.warnings)
        }
        Command::Edit { request, backend } => {
            let planner = backend.planner()?;
            edit_loop(&cli, request.request(), planner.as_ref(), canvas)
        }
        Command::Encode { prompt, layout, level, variant, max_len } => {
            let (layout, variant) = load_layout(&read_input(layout)?, *variant, canvas)?;
            let max_len = max_len.unwrap_or_else(|| default_max_len(variant));
            let vocab = vocab();
            let seq = encode(prompt, &layout, &vocab, EncodeOptions { level: *level, variant }, max_len)?;
            match cli.output {
                Output::Json => print_json(&seq.to_record()),
                Output::Human => {
                    let n = seq.content_len();
                    let surfaces: Vec<String> = seq.ids[..n].iter().map(|id| vocab.surface(*id).unwrap_or_default()).collect();
                    println!("{}", surfaces.join(" "));
                    println!("{n} tokens + {} padding (L = {max_len})", max_len - n);
                    println!("{:?}", seq.ids);
                    Ok(())
                }
            }
        }
        Command::Decode { ids } => {
            let record: TokenRecord = serde_json::from_str(&read_input(ids)?).context("invalid token record")?;
            let variant = record.variant;
            let vocab = vocab();
            let seq = record.into_sequence(&vocab)?;
            let (prompt, layout) = decode(&seq, &vocab)?;
            match cli.output {
                Output::Json => print_json(&LayoutRecord::from_layout(prompt, &layout, variant)?),
                Output::Human => {
                    println!("Prompt: {prompt}");
                    let text = serialize_layout(&layout, variant)?;
                    if !text.is_empty() {
                        println!("{text}");
                    }
                    Ok(())
                }
            }
        }
        Command::Eval { command: EvalCommand::Run { dataset, iou_threshold, case_sensitive, lengths, level } } => {
            let config = BenchmarkConfig {
                iou_threshold: *iou_threshold,
                case_sensitive: *case_sensitive,
                lengths: lengths.clone(),
                level: *level,
            };
            let report = run_benchmark(dataset, &config, &vocab())?;
            match cli.output {
                Output::Json => print_json(&report),
                Output::Human => {
                    println!("{report}");
                    Ok(())
                }
            }
        }
        Command::Dataprep {
            command: DataprepCommand::Export { input, out, splits, seed, allow_overlap, keep_empty },
        } => {
            let samples = load_samples(input)?;
            let config = ExportConfig {
                split_sizes: splits.clone(),
                seed: *seed,
                allow_overlap: *allow_overlap,
                keep_empty: *keep_empty,
                canvas,
            };
            let manifest = export_dataset(&samples, out, &config)?;
            match cli.output {
                Output::Json => print_json(&manifest),
                Output::Human => {
                    println!("pool {} usable sample(s), {} rejected", manifest.pool, manifest.rejected);
                    for s in &manifest.splits {
                        println!("{}: {} samples, {} records", out.join(&s.file).display(), s.samples, s.records);
                    }
                    Ok(())
                }
            }
        }
        Command::Serve { bind, capacity, body_limit, snapshot, ui_dir, backend } => {
            if let Some(dir) = ui_dir {
                if !dir.is_dir() {
                    bail!("UI directory {} does not exist", dir.display());
                }
            }
            let config = ServiceConfig {
                bind: *bind,
                backend: backend.config(),
                capacity: *capacity,
                body_limit: *body_limit,
                snapshot: snapshot.clone(),
                ui_dir: ui_dir.clone(),
                canvas,
                angle_tokens: !cli.no_angle_tokens,
            };
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_env("GLYPHPLAN_LOG")
                        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
                )
                .with_writer(io::stderr)
                .init();
            tokio::runtime::Runtime::new()?.block_on(glyphplan_service::serve(config))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
