use std::error::Error;
use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use crashviz::client::{load_backends, BackendConfig, GenerationClient};
use crashviz::corpus::{synthetic_corpus, DEFAULT_CASES, DEFAULT_SEED};
use crashviz::pipeline::{evaluate_store, prepare_case, run_batch, RunStatus};
use crashviz::ratings::select_sheets;
use crashviz::record_io::{parse_record, parse_record_batch, serialize_record, RecordSlot};
use crashviz::sheets::ingest_sheets;
use crashviz::store::CaseStore;
use crashviz::template_io::parse_template;
use crashviz_core::prompt::Attachment;
use crashviz_core::record::Severity;
use crashviz_core::scene::Palette;
use crashviz_core::{
    aggregate, build_prompt, build_scene, render_report, render_svg, standard_template, validate_record,
    GeometryTemplate, RenderOptions, ReportFormat, SceneGraph, Tolerances,
};

type CliResult = Result<Status, Box<dyn Error>>;

/// Exit 0 on full success, 2 when some items failed, 1 on a fatal error.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Done,
    Partial,
}

#[derive(Parser)]
#[command(name = "crashviz", version, about = "Roundabout crash diagrams: build, generate, score, report")]
struct Cli {
    /// Case store directory.
    #[arg(long, env = "CRASHVIZ_STORE", default_value = "crashviz-store", global = true)]
    store: PathBuf,
    /// Geometry template JSON; the built-in roundabout when omitted.
    #[arg(long, global = true)]
    template: Option<PathBuf>,
    /// Output format for commands that print results.
    #[arg(long, global = true)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Json,
    Markdown,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Store records with their prompt, base layout and reference diagram.
    Ingest {
        /// Record JSON (one object or an array).
        records: Option<PathBuf>,
        /// Generate this many synthetic records instead.
        #[arg(long, conflicts_with = "records")]
        synthetic: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Print the generation prompt for the template.
    Prompt {
        /// Crash report file to attach (reflected in the fingerprint).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Render a record's reference diagram as SVG.
    Render {
        record: Option<PathBuf>,
        /// Render the empty base layout instead.
        #[arg(long, conflicts_with = "record")]
        base: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_annotation: bool,
        #[arg(long)]
        monochrome: bool,
    },
    /// Send cases to one or more backends.
    Generate {
        /// Records to ingest and run; all stored cases when omitted.
        #[arg(long)]
        records: Option<PathBuf>,
        /// Backend config JSON (object or array); repeatable.
        #[arg(long = "backends")]
        backends: Vec<PathBuf>,
        /// Add an offline mock backend for this model id; repeatable.
        #[arg(long)]
        mock: Vec<String>,
        #[arg(long, default_value_t = 4)]
        parallelism: usize,
        /// Bypass the response cache.
        #[arg(long)]
        no_cache: bool,
    },
    /// Score generated outputs automatically or import human sheets.
    Evaluate {
        #[arg(long, value_enum, default_value_t = EvalMode::Auto)]
        mode: EvalMode,
        /// Score-sheet CSV for `--mode ingest`.
        #[arg(long, required_if_eq("mode", "ingest"))]
        sheets: Option<PathBuf>,
        /// Restrict automatic scoring to one model.
        #[arg(long)]
        model: Option<String>,
    },
    /// Aggregate stored score sheets into the per-model table.
    Benchmark {
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Serve the review API (and optionally a static UI).
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        #[arg(long)]
        ui: Option<PathBuf>,
    },
    /// Check record files against the schema and consistency rules.
    Validate {
        #[arg(required = true)]
        records: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum EvalMode {
    Auto,
    Ingest,
}

fn read(path: &Path) -> Result<Vec<u8>, Box<dyn Error>> {
    fs::read(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn template(cli: &Cli) -> Result<GeometryTemplate, Box<dyn Error>> {
    match &cli.template {
        Some(path) => Ok(parse_template(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?),
        None => Ok(standard_template()),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Box<dyn Error>> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()).into()),
        None => Ok(io::stdout().write_all(bytes)?),
    }
}

fn load_slots(path: &Path) -> Result<Vec<RecordSlot>, Box<dyn Error>> {
    Ok(parse_record_batch(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn ingest(cli: &Cli, records: Option<&Path>, synthetic: Option<usize>, seed: u64) -> CliResult {
    let tpl = template(cli)?;
    let store = CaseStore::open(&cli.store)?;
    let (slots, report_dir) = match (records, synthetic) {
        (Some(path), _) => (load_slots(path)?, path.parent().map(Path::to_path_buf)),
        (None, n) => {
            let records = synthetic_corpus(n.unwrap_or(DEFAULT_CASES), seed, &tpl);
            (records.into_iter().map(RecordSlot::Valid).collect(), None)
        }
    };
    let mut failed = 0;
    for slot in &slots {
        match slot {
            RecordSlot::Valid(r) => match prepare_case(&store, r, &tpl, report_dir.as_deref()) {
                Ok(_) => println!("stored {}", r.case_id),
                Err(e) => {
                    failed += 1;
                    eprintln!("skipped {}: {e}", r.case_id);
                }
            },
            RecordSlot::Invalid { label, error } => {
                failed += 1;
                eprintln!("skipped {label}: {error}");
            }
        }
    }
    println!("{} of {} records stored in {}", slots.len() - failed, slots.len(), cli.store.display());
    Ok(if failed == 0 { Status::Done } else { Status::Partial })
}

fn prompt(cli: &Cli, report: Option<&Path>) -> CliResult {
    let tpl = template(cli)?;
    let attachment = match report {
        Some(path) => {
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let media = match path.extension().and_then(|e| e.to_str()) {
                Some("png") => "image/png",
                Some("jpg" | "jpeg") => "image/jpeg",
                Some("pdf") => "application/pdf",
                Some("json") => "application/json",
                _ => "application/octet-stream",
            };
            Some(Attachment::crash_report(&name, media, read(path)?))
        }
        None => None,
    };
    let bundle = build_prompt(&tpl, attachment);
    match cli.format {
        Some(Format::Json) => {
            let view = serde_json::json!({
                "text": bundle.text,
                "attachments": bundle.attachments,
                "template_fingerprint": bundle.template_fingerprint,
                "prompt_fingerprint": crashviz_core::prompt_fingerprint(&bundle),
            });
            println!("{}", serde_json::to_string_pretty(&view)?);
        }
        _ => print!("{}", bundle.text),
    }
    Ok(Status::Done)
}

fn render(cli: &Cli, record: Option<&Path>, base: bool, out: Option<&Path>, no_annotation: bool, monochrome: bool) -> CliResult {
    let tpl = template(cli)?;
    let scene = match (record, base) {
        (_, true) => SceneGraph::empty(&tpl),
        (Some(path), false) => {
            let r = parse_record(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
            build_scene(&r, &tpl)?
        }
        (None, false) => return Err("give a record file or --base".into()),
    };
    let opts = RenderOptions {
        embed_annotation: !no_annotation,
        palette: if monochrome { Palette::Monochrome } else { Palette::Standard },
        ..RenderOptions::default()
    };
    emit(out, &render_svg(&scene, &opts)?)?;
    Ok(Status::Done)
}

async fn generate(
    cli: &Cli,
    records: Option<&Path>,
    backend_files: &[PathBuf],
    mocks: &[String],
    parallelism: usize,
    no_cache: bool,
) -> CliResult {
    let tpl = template(cli)?;
    let store = Arc::new(CaseStore::open(&cli.store)?);
    let mut configs: Vec<BackendConfig> = Vec::new();
    for path in backend_files {
        configs.extend(load_backends(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?);
    }
    configs.extend(mocks.iter().map(|m| BackendConfig::mock(m)));
    if configs.is_empty() {
        return Err("no backends: pass --backends FILE or --mock MODEL".into());
    }
    let cache = if no_cache { None } else { Some(store.cache()?) };
    let clients = configs
        .into_iter()
        .map(|c| GenerationClient::new(c, tpl.clone(), cache.clone()).map(Arc::new))
        .collect::<Result<Vec<_>, _>>()?;

    let slots = match records {
        Some(path) => {
            let slots = load_slots(path)?;
            // Copies any referenced report images into the store first.
            for slot in &slots {
                if let RecordSlot::Valid(r) = slot {
                    if let Err(e) = prepare_case(&store, r, &tpl, path.parent()) {
                        eprintln!("{}: {e}", r.case_id);
                    }
                }
            }
            slots
        }
        None => store
            .list_cases()?
            .iter()
            .map(|id| store.record(id).map(RecordSlot::Valid))
            .collect::<Result<Vec<_>, _>>()?,
    };
    if slots.is_empty() {
        return Err("no cases to run".into());
    }
    let manifest = run_batch(store.clone(), slots, &tpl, &clients, parallelism).await?;
    if cli.format == Some(Format::Json) {
        println!("{}", serde_json::to_string_pretty(&manifest)?);
    } else {
        for e in manifest.entries.iter().filter(|e| e.status != RunStatus::Ok) {
            eprintln!("{:?} {} [{}]: {}", e.status, e.case_id, e.backend, e.reason.as_deref().unwrap_or(""));
        }
        println!(
            "run {}: {} ok, {} failed, {} skipped ({} cached)",
            manifest.run_id,
            manifest.count(RunStatus::Ok),
            manifest.count(RunStatus::Failed),
            manifest.count(RunStatus::Skipped),
            manifest.entries.iter().filter(|e| e.from_cache).count(),
        );
    }
    Ok(if manifest.is_complete_success() { Status::Done } else { Status::Partial })
}

fn evaluate(cli: &Cli, mode: EvalMode, sheets: Option<&Path>, model: Option<&str>) -> CliResult {
    let store = CaseStore::open(&cli.store)?;
    match mode {
        EvalMode::Auto => {
            let summary = evaluate_store(&store, &template(cli)?, &Tolerances::default(), model)?;
            if cli.format == Some(Format::Json) {
                println!("{}", serde_json::to_string_pretty(&summary)?);
            } else {
                for n in &summary.needs_human {
                    eprintln!("needs human rating: {} [{}]: {}", n.case_id, n.model_id, n.reason);
                }
                println!("{} outputs scored, {} need human rating", summary.scored, summary.needs_human.len());
            }
            Ok(if summary.needs_human.is_empty() { Status::Done } else { Status::Partial })
        }
        EvalMode::Ingest => {
            let path = sheets.ok_or("--sheets is required with --mode ingest")?;
            let sheets = ingest_sheets(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut failed = 0;
            for sheet in &sheets {
                if let Err(e) = store.put_sheet(sheet) {
                    failed += 1;
                    eprintln!("{} [{}]: {e}", sheet.case_id, sheet.model_id);
                }
            }
            println!("{} of {} sheets stored", sheets.len() - failed, sheets.len());
            Ok(if failed == 0 { Status::Done } else { Status::Partial })
        }
    }
}

fn benchmark(cli: &Cli, out: Option<&Path>) -> CliResult {
    let store = CaseStore::open(&cli.store)?;
    let selection = select_sheets(&store.all_sheets()?);
    for c in &selection.unresolved {
        eprintln!("unresolved rater disagreement: {} [{}], excluded", c.case_id, c.model_id);
    }
    let report = aggregate(&selection.sheets)?;
    let format = match cli.format {
        Some(Format::Json) => ReportFormat::Json,
        Some(Format::Csv) => ReportFormat::Csv,
        _ => ReportFormat::Markdown,
    };
    emit(out, &render_report(&report, format))?;
    Ok(if selection.unresolved.is_empty() { Status::Done } else { Status::Partial })
}

fn validate(records: &[PathBuf]) -> CliResult {
    let mut invalid = 0;
    for path in records {
        let slots = match load_slots(path) {
            Ok(s) => s,
            Err(e) => {
                invalid += 1;
                eprintln!("{e}");
                continue;
            }
        };
        for slot in slots {
            match slot {
                RecordSlot::Invalid { label, error } => {
                    invalid += 1;
                    println!("{} {label}: {error}", path.display());
                }
                RecordSlot::Valid(r) => {
                    let report = validate_record(&r);
                    for f in &report.findings {
                        let level = if f.severity == Severity::Error { "error" } else { "warning" };
                        println!("{} {}: {level}: {}: {}", path.display(), r.case_id, f.field, f.message);
                    }
                    if report.has_errors() {
                        invalid += 1;
                    } else if report.is_empty() {
                        println!("{} {}: ok", path.display(), r.case_id);
                    }
                    debug_assert_eq!(parse_record(&serialize_record(&r)).ok().as_ref(), Some(&r));
                }
            }
        }
    }
    if invalid > 0 {
        return Err(format!("{invalid} invalid record(s)").into());
    }
    Ok(Status::Done)
}

async fn run(cli: Cli) -> CliResult {
    match &cli.command {
        Command::Ingest { records, synthetic, seed } => ingest(&cli, records.as_deref(), *synthetic, *seed),
        Command::Prompt { report } => prompt(&cli, report.as_deref()),
        Command::Render { record, base, out, no_annotation, monochrome } => {
            render(&cli, record.as_deref(), *base, out.as_deref(), *no_annotation, *monochrome)
        }
        Command::Generate { records, backends, mock, parallelism, no_cache } => {
            generate(&cli, records.as_deref(), backends, mock, *parallelism, *no_cache).await
        }
        Command::Evaluate { mode, sheets, model } => evaluate(&cli, *mode, sheets.as_deref(), model.as_deref()),
        Command::Benchmark { out } => benchmark(&cli, out.as_deref()),
        Command::Serve { bind, ui } => {
            let store = Arc::new(CaseStore::open(&cli.store)?);
            eprintln!("serving {} on http://{bind}", cli.store.display());
            crashviz::serve::serve(store, *bind, ui.clone()).await?;
            Ok(Status::Done)
        }
        Command::Validate { records } => validate(records),
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    match run(Cli::parse()).await {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
