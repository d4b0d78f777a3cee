//! `slideloop` command line.
//!
//! Failures print `{"error": {"kind", "message"}}` on stderr and exit with
//! 2 for unusable input, 3 when a model backend fails and 1 otherwise.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::Config;
use crate::metrics::{
    export_judgement, load_mappings, read_verdicts, trace_counts, win_rate, MetricsReport, ReviewerCounts, ResponsivenessCounts,
};
use crate::model::{deck_from_json, deck_to_json, estimate_token_length, to_json, Deck, ParseMode, SlideDoc, TOKEN_BUDGET};
use crate::orchestrator::{branch, convergence_histogram, refine, RefinementTrace, StopReason};
use crate::perturb::{batch_generate, perturb, PerturbationKind, PerturbationLog};
use crate::pptx::{export_pptx, load_pptx};
use crate::render::{render_png, render_svg, RenderOptions};
use crate::roles::{
    Contributor, HeuristicContributor, HeuristicReviewer, OracleContributor, OracleReviewer, RemoteClient, RemoteContributor,
    RemoteReviewer, Reviewer,
};
use crate::service::{self, Backends, Service};

#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub code: i32,
}

impl CliError {
    fn input(kind: &str, message: impl Into<String>) -> Self {
        CliError {
            kind: kind.into(),
            message: message.into(),
            code: 2,
        }
    }

    fn backend(message: impl Into<String>) -> Self {
        CliError {
            kind: "backend".into(),
            message: message.into(),
            code: 3,
        }
    }

    fn other(kind: &str, message: impl Into<String>) -> Self {
        CliError {
            kind: kind.into(),
            message: message.into(),
            code: 1,
        }
    }

    pub fn to_json(&self) -> String {
        json!({"error": {"kind": self.kind, "message": self.message}}).to_string()
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "slideloop", version, about = "Slide-design refinement pipeline")]
pub struct Cli {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Oracle,
    Heuristic,
    Remote,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Read a .pptx into deck JSON.
    Ingest {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the skipped-content report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write deck JSON as a .pptx.
    Export {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Perturb one slide into a draft and write it with its log.
    Perturb {
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        slide: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        severity: Option<f64>,
        /// Comma-separated kinds, e.g. position_shift,fill_reset.
        #[arg(long, value_delimiter = ',')]
        kinds: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        log: PathBuf,
    },
    /// Write reviewer/contributor training pairs for every slide as JSONL.
    DatasetGen {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        severity: Option<f64>,
    },
    /// Alternate reviewer and contributor until the reviewer is satisfied.
    Refine {
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        slide: usize,
        #[arg(long, value_enum, default_value_t = BackendArg::Heuristic)]
        backend: BackendArg,
        /// Perturbation log of the input; required by the oracle backend.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Let the reviewer label the first iteration instead of flagging
        /// every element.
        #[arg(long)]
        review_first: bool,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Produce n alternative designs of a slide.
    Branch {
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        slide: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = BackendArg::Heuristic)]
        backend: BackendArg,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score reviewer and contributor from refinement traces and their logs.
    Eval {
        /// Trace files, paired in order with --log.
        #[arg(long = "trace", required = true)]
        traces: Vec<PathBuf>,
        #[arg(long = "log", required = true)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write a blind A/B judgement bundle.
    JudgeExport {
        #[arg(long)]
        draft: PathBuf,
        #[arg(long)]
        ours: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Unblind judge verdicts and report win rates.
    JudgeScore {
        #[arg(long)]
        bundles: PathBuf,
        #[arg(long)]
        verdicts: PathBuf,
    },
    /// Render one slide to SVG, or PNG when --out ends in .png.
    Render {
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        slide: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        highlight: bool,
        #[arg(long)]
        ppi: Option<f64>,
    },
    /// Report proxy token counts per slide against the budget.
    Tokens { input: PathBuf },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
    },
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::input("io", format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::other("io", format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::other("io", format!("{}: {e}", path.display())))
}

/// Loads a deck from .pptx bytes, deck JSON or a single slide JSON.
pub fn load_deck(path: &Path) -> CliResult<Deck> {
    let bytes = read(path)?;
    if bytes.starts_with(b"PK") {
        return load_pptx(&bytes)
            .map(|(deck, _)| deck)
            .map_err(|e| CliError::input(e.kind(), e.to_string()));
    }
    let text = String::from_utf8(bytes).map_err(|_| CliError::input("invalid_json", format!("{} is not UTF-8", path.display())))?;
    deck_from_json(&text, ParseMode::Strict).map_err(|e| CliError::input("invalid_json", format!("{}: {e}", path.display())))
}

fn load_slide(path: &Path, slide: usize) -> CliResult<SlideDoc> {
    let mut deck = load_deck(path)?;
    if slide >= deck.slides.len() {
        return Err(CliError::input(
            "no_such_slide",
            format!("slide {slide} requested, {} has {}", path.display(), deck.slides.len()),
        ));
    }
    Ok(deck.slides.swap_remove(slide))
}

fn load_log(path: &Path) -> CliResult<PerturbationLog> {
    let text = String::from_utf8(read(path)?).map_err(|_| CliError::input("invalid_json", "log is not UTF-8"))?;
    PerturbationLog::from_json(&text).map_err(|e| CliError::input("invalid_json", format!("{}: {e}", path.display())))
}

fn doc_json(doc: &SlideDoc) -> CliResult<String> {
    to_json(doc).map_err(|e| CliError::other("invalid_doc", e.to_string()))
}

fn load_config(path: Option<&Path>) -> CliResult<Config> {
    let cfg = match path {
        Some(p) => Config::load(p).map_err(|e| CliError::input("config", e.to_string()))?,
        None => Config::default(),
    };
    Ok(cfg.with_env())
}

fn remote_client(cfg: &Config) -> CliResult<Arc<RemoteClient>> {
    RemoteClient::new(cfg.remote.clone()).map_err(|e| CliError::backend(e.to_string()))
}

fn roles(
    backend: BackendArg,
    cfg: &Config,
    doc: &SlideDoc,
    log: Option<&Path>,
) -> CliResult<(Box<dyn Reviewer>, Box<dyn Contributor>)> {
    Ok(match backend {
        BackendArg::Heuristic => (
            Box::new(HeuristicReviewer::new(cfg.heuristic.clone())),
            Box::new(HeuristicContributor::new(cfg.heuristic.clone())),
        ),
        BackendArg::Remote => {
            let client = remote_client(cfg)?;
            (Box::new(RemoteReviewer(client.clone())), Box::new(RemoteContributor(client)))
        }
        BackendArg::Oracle => {
            let path = log.ok_or_else(|| CliError::input("missing_log", "the oracle backend needs --log"))?;
            let log = load_log(path)?;
            let contributor =
                OracleContributor::from_log(doc, &log).map_err(|e| CliError::input("invalid_log", e.to_string()))?;
            (Box::new(OracleReviewer::new(log)), Box::new(contributor))
        }
    })
}

pub fn run(cli: Cli) -> CliResult {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { input, out, report } => {
            let bytes = read(&input)?;
            let (deck, rep) = load_pptx(&bytes).map_err(|e| CliError::input(e.kind(), e.to_string()))?;
            write(&out, deck_to_json(&deck).map_err(|e| CliError::other("invalid_doc", e.to_string()))?)?;
            let summary = json!({
                "slides": deck.slides.len(),
                "elements": rep.parsed_elements,
                "skipped": rep.skipped,
            });
            if let Some(path) = report {
                write(&path, serde_json::to_string_pretty(&summary).expect("report serializes"))?;
            }
            println!("{summary}");
        }
        Command::Export { input, out } => {
            let deck = load_deck(&input)?;
            let bytes = export_pptx(&deck).map_err(|e| CliError::input("invalid_doc", e.to_string()))?;
            write(&out, bytes)?;
        }
        Command::Perturb {
            input,
            slide,
            seed,
            severity,
            kinds,
            out,
            log,
        } => {
            let doc = load_slide(&input, slide)?;
            let mut pc = cfg.perturbation.clone();
            if let Some(s) = seed {
                pc.seed = s;
            }
            if let Some(s) = severity {
                pc.severity = s;
            }
            if !kinds.is_empty() {
                pc.enabled_kinds = kinds
                    .iter()
                    .map(|k| PerturbationKind::parse(k).ok_or_else(|| CliError::input("bad_argument", format!("unknown kind {k:?}"))))
                    .collect::<CliResult<_>>()?;
            }
            let (draft, plog) = perturb(&doc, &pc).map_err(|e| CliError::input("perturbation", e.to_string()))?;
            write(&out, doc_json(&draft)?)?;
            write(&log, plog.to_json())?;
            println!("{}", json!({"entries": plog.entries.len(), "warnings": plog.warnings}));
        }
        Command::DatasetGen {
            input,
            out,
            manifest,
            seed,
            severity,
        } => {
            let deck = load_deck(&input)?;
            let mut pc = cfg.perturbation.clone();
            if let Some(s) = seed {
                pc.seed = s;
            }
            if let Some(s) = severity {
                pc.severity = s;
            }
            let file = fs::File::create(&out).map_err(|e| CliError::other("io", format!("{}: {e}", out.display())))?;
            let mut sink = BufWriter::new(file);
            let m = batch_generate(deck.slides, &pc, &mut sink).map_err(|e| CliError::input("dataset", e.to_string()))?;
            let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
            if let Some(path) = manifest {
                write(&path, &text)?;
            }
            println!("{text}");
        }
        Command::Refine {
            input,
            slide,
            backend,
            log,
            max_iter,
            review_first,
            trace,
            out,
        } => {
            let doc = load_slide(&input, slide)?;
            let (reviewer, contributor) = roles(backend, &cfg, &doc, log.as_deref())?;
            let mut opts = cfg.refine.clone();
            if let Some(n) = max_iter {
                opts.max_iterations = n;
            }
            if review_first {
                opts.initial_all_tentative = false;
            }
            let t = refine(&doc, reviewer.as_ref(), contributor.as_ref(), &opts);
            if let Some(path) = trace {
                write(&path, t.to_json())?;
            }
            if let Some(path) = out {
                write(&path, doc_json(t.final_doc())?)?;
            }
            println!(
                "{}",
                json!({"stop_reason": t.stop_reason, "iterations_used": t.iterations_used, "error": t.error})
            );
            if t.stop_reason == StopReason::BackendError {
                return Err(CliError::backend(t.error.unwrap_or_default()));
            }
        }
        Command::Branch {
            input,
            slide,
            n,
            seed,
            backend,
            out_dir,
        } => {
            let doc = load_slide(&input, slide)?;
            let contributor: Box<dyn Contributor> = match backend {
                BackendArg::Heuristic => Box::new(HeuristicContributor::new(cfg.heuristic.clone())),
                BackendArg::Remote => Box::new(RemoteContributor(remote_client(&cfg)?)),
                BackendArg::Oracle => return Err(CliError::input("bad_argument", "branching needs heuristic or remote")),
            };
            let set = branch(&doc, contributor.as_ref(), n, seed).map_err(|e| match e {
                crate::orchestrator::OrchestratorError::AllBranchesFailed(_) => CliError::backend(e.to_string()),
                other => CliError::input("bad_argument", other.to_string()),
            })?;
            let mut ids = Vec::new();
            for b in &set.branches {
                write(&out_dir.join(format!("{}.json", b.branch_id)), doc_json(&b.doc)?)?;
                write(&out_dir.join(format!("{}.svg", b.branch_id)), render_svg(&b.doc, &RenderOptions::default()))?;
                ids.push(b.branch_id.clone());
            }
            println!("{}", json!({"branches": ids, "failures": set.failures}));
        }
        Command::Eval { traces, logs, json } => {
            if traces.len() != logs.len() {
                return Err(CliError::input("bad_argument", "give one --log per --trace"));
            }
            let mut reviewer = ReviewerCounts::default();
            let mut reviewed = 0;
            let mut resp = ResponsivenessCounts::default();
            let mut loaded = Vec::new();
            for (tp, lp) in traces.iter().zip(&logs) {
                let text = String::from_utf8(read(tp)?).map_err(|_| CliError::input("invalid_json", "trace is not UTF-8"))?;
                let t = RefinementTrace::from_json(&text).map_err(|e| CliError::input("invalid_json", format!("{}: {e}", tp.display())))?;
                let l = load_log(lp)?;
                let c = trace_counts(&t, &l).map_err(|e| CliError::input("inconsistent", format!("{}: {e}", tp.display())))?;
                if let Some(r) = &c.reviewer {
                    reviewer.merge(r);
                    reviewed += 1;
                }
                resp.merge(&c.responsiveness);
                loaded.push(t);
            }
            if reviewed == 0 {
                log::warn!("no trace starts with a reviewer labeling; precision and recall are empty (use refine --review-first)");
            }
            let mut report = MetricsReport::from_counts(traces.len(), &reviewer, &resp);
            report.convergence = Some(convergence_histogram(&loaded));
            if let Some(path) = json {
                write(&path, report.to_json())?;
            }
            print!("{}", report.table());
        }
        Command::JudgeExport {
            draft,
            ours,
            baseline,
            seed,
            out,
        } => {
            let b = export_judgement(&load_slide(&draft, 0)?, &load_slide(&ours, 0)?, &load_slide(&baseline, 0)?, seed, &out)
                .map_err(|e| CliError::other("judge", e.to_string()))?;
            println!("{}", json!({"bundle_id": b.mapping.bundle_id, "dir": b.dir}));
        }
        Command::JudgeScore { bundles, verdicts } => {
            let maps = load_mappings(&bundles).map_err(|e| CliError::input("judge", e.to_string()))?;
            let file = fs::File::open(&verdicts).map_err(|e| CliError::input("io", format!("{}: {e}", verdicts.display())))?;
            let vs = read_verdicts(BufReader::new(file)).map_err(|e| CliError::input("invalid_json", e.to_string()))?;
            let w = win_rate(&vs, &maps).map_err(|e| CliError::input("judge", e.to_string()))?;
            println!("{}", serde_json::to_string(&w).expect("win rate serializes"));
        }
        Command::Render {
            input,
            slide,
            out,
            highlight,
            ppi,
        } => {
            let doc = load_slide(&input, slide)?;
            let opts = RenderOptions {
                pixels_per_inch: ppi.unwrap_or(96.0),
                highlight_tentative: highlight,
                ..RenderOptions::default()
            };
            if !(opts.pixels_per_inch > 0.0 && opts.pixels_per_inch.is_finite()) {
                return Err(CliError::input("bad_argument", "--ppi must be positive"));
            }
            if out.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
                write(&out, render_png(&doc, &opts).map_err(|e| CliError::other("render", e.to_string()))?)?;
            } else {
                write(&out, render_svg(&doc, &opts))?;
            }
        }
        Command::Tokens { input } => {
            let deck = load_deck(&input)?;
            let mut over = 0;
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            for (i, slide) in deck.slides.iter().enumerate() {
                let tokens = estimate_token_length(&doc_json(slide)?);
                over += usize::from(tokens >= TOKEN_BUDGET);
                let _ = writeln!(w, "{}", json!({"slide": i, "source_id": slide.source_id, "tokens": tokens}));
            }
            let _ = writeln!(w, "{}", json!({"slides": deck.slides.len(), "budget": TOKEN_BUDGET, "over_budget": over}));
            if over > 0 {
                return Err(CliError::input("token_budget", format!("{over} slide(s) reach the {TOKEN_BUDGET}-token budget")));
            }
        }
        Command::Serve { port, data_dir, backend } => {
            let backends = match backend.unwrap_or(match cfg.backend.contributor {
                crate::roles::BackendKind::Remote => BackendArg::Remote,
                _ => BackendArg::Heuristic,
            }) {
                BackendArg::Heuristic => Backends::heuristic(&cfg.heuristic),
                BackendArg::Remote => Backends::remote(remote_client(&cfg)?),
                BackendArg::Oracle => return Err(CliError::input("bad_argument", "the service needs heuristic or remote backends")),
            };
            let dir = data_dir.unwrap_or_else(|| cfg.service.data_dir.clone());
            let svc = Service::open(&dir, backends)
                .map_err(|e| CliError::other("session_log", e.to_string()))?
                .with_refine_options(cfg.refine.clone());
            let addr = std::net::SocketAddr::from(([127, 0, 0, 1], port.unwrap_or(cfg.service.port)));
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| CliError::other("runtime", e.to_string()))?;
            rt.block_on(service::serve(Arc::new(svc), addr))
                .map_err(|e| CliError::other("io", e.to_string()))?;
        }
    }
    Ok(())
}

/// Entry point used by the binary. Returns the process exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.code
        }
    }
}
