use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use tabletalk::page_model::{parse_page, PageSnapshot};
use tabletalk::scenario::{run_scenario, CellTarget, HeaderTarget, RowTarget, Scenario, ScenarioError, ScenarioRunner, Step};
use tabletalk::server::{serve, ServerState};
use tabletalk::session::EngineConfig;
use tabletalk::vocabulary::{resolve_column, SharedDictionary};
use tabletalk::{DEFAULT_PORT, HELP_TEXT};

const EXIT_EXPECT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "tabletalk", version, about = "Talk to the tables on a web page")]
struct Cli {
    #[command(flatten)]
    engine: EngineArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct EngineArgs {
    /// Vocabulary dictionary file; created on first definition.
    #[arg(long, global = true)]
    dict: Option<PathBuf>,
    /// How long a pointing gesture stays usable for "this".
    #[arg(long, global = true, default_value_t = tabletalk::event_buffer::DEFAULT_WINDOW_MS)]
    deixis_window_ms: i64,
    /// Leading word stripped from utterances.
    #[arg(long, global = true, default_value = tabletalk::command::DEFAULT_WAKE_WORD)]
    wake_word: String,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an HTML file and print the tables found.
    Parse {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        /// URL the page is treated as coming from.
        #[arg(long)]
        url: Option<String>,
    },
    /// Run a scenario file and report failed expectations.
    Run { scenario: PathBuf },
    /// Interactive session over an HTML file.
    Repl { file: PathBuf },
    /// Serve the WebSocket endpoint and overlay script.
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: std::net::IpAddr,
        /// Serve this file at /overlay.js instead of the built-in script.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
}

/// A failure that maps to the usage exit code.
struct Usage(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.into())
    }
}

fn engine_config(args: &EngineArgs) -> Result<EngineConfig, Usage> {
    let dictionary = match &args.dict {
        Some(path) => {
            let (dict, diagnostics) = SharedDictionary::with_file(path)?;
            for d in diagnostics {
                log::warn!("{d}");
            }
            dict
        }
        None => SharedDictionary::default(),
    };
    let mut config = EngineConfig::new(dictionary);
    config.deixis_window_ms = args.deixis_window_ms;
    config.wake_word = args.wake_word.clone();
    Ok(config)
}

fn file_url(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    format!("http://localhost/{name}")
}

fn cmd_parse(file: &Path, json: bool, url: Option<String>, config: EngineConfig) -> Result<u8, Usage> {
    let html = std::fs::read_to_string(file).with_context(|| format!("cannot read {}", file.display()))?;
    let url = url.unwrap_or_else(|| file_url(file));
    let snapshot = PageSnapshot::new("cli", &url, &html, 0)?;
    let mut model = parse_page(&snapshot);
    config.dictionary.read(|dict| {
        for t in &mut model.tables {
            for c in &mut t.columns {
                c.resolved_term = resolve_column(c, dict, &model.host).term().map(String::from);
            }
        }
    });
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if json {
        serde_json::to_writer_pretty(&mut out, &model)?;
        writeln!(out)?;
        return Ok(0);
    }
    writeln!(out, "{} table(s) on {}", model.tables.len(), model.url)?;
    for t in &model.tables {
        writeln!(out, "{}: {} rows x {} columns at {}", t.table_id, t.row_count(), t.column_count(), t.source_path)?;
        for c in &t.columns {
            let hints: Vec<&str> = c.hints.iter().map(|h| h.text.as_str()).collect();
            let term = c.resolved_term.as_deref().unwrap_or("?");
            writeln!(out, "  [{}] {:?} -> {term} {:?} hints={:?}", c.index, c.raw_label, c.col_type, hints)?;
        }
    }
    for d in &model.diagnostics {
        writeln!(out, "note: {d}")?;
    }
    Ok(0)
}

fn scenario_error(e: ScenarioError) -> Usage {
    Usage(e.into())
}

fn cmd_run(path: &Path, config: EngineConfig) -> Result<u8, Usage> {
    let scenario = Scenario::load(path).map_err(scenario_error)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let report = run_scenario(&scenario, base, config).map_err(scenario_error)?;
    print!("{}", report.transcript_text());
    if report.passed() {
        Ok(0)
    } else {
        eprintln!("{} expectation(s) failed", report.failures.len());
        Ok(EXIT_EXPECT_FAILED)
    }
}

fn repl_step(line: &str) -> Result<Option<Step>, String> {
    let Some(rest) = line.strip_prefix('!') else {
        return Ok(Some(Step::Say(line.to_string())));
    };
    let mut words = rest.split_whitespace();
    let cmd = words.next().unwrap_or("");
    let nums: Result<Vec<usize>, _> = words.map(str::parse::<usize>).collect();
    let nums = nums.map_err(|_| format!("bad arguments to !{cmd}"))?;
    Ok(Some(match (cmd, nums.as_slice()) {
        ("point", [table, row, col]) => Step::Point(CellTarget { table: *table, row: *row, col: *col }),
        ("header", [table, col]) => Step::PointHeader(HeaderTarget { table: *table, col: *col }),
        ("row", [table, row]) => Step::PointRow(RowTarget { table: *table, row: *row }),
        ("wait", [ms]) => Step::WaitMs(*ms as i64),
        _ => return Err("commands: !point T R C, !header T C, !row T R, !wait MS".to_string()),
    }))
}

fn cmd_repl(file: &Path, config: EngineConfig) -> Result<u8, Usage> {
    let abs = file.canonicalize().with_context(|| format!("cannot read {}", file.display()))?;
    let scenario = Scenario {
        page: PathBuf::from(abs.file_name().unwrap_or_default()),
        url: None,
        steps: Vec::new(),
    };
    let base = abs.parent().unwrap_or(Path::new("/"));
    let mut runner = ScenarioRunner::start(&scenario, base, config).map_err(scenario_error)?;
    let mut shown = 0;
    let mut flush = |runner: &ScenarioRunner| {
        let lines = &runner.report().transcript;
        for l in &lines[shown..] {
            println!("{l}");
        }
        shown = lines.len();
    };
    flush(&runner);
    let stdin = std::io::stdin();
    let mut index = 0;
    for line in stdin.lock().lines() {
        let line = line?;
        let line = line.trim();
        match line {
            "" => continue,
            "quit" | "exit" => break,
            "help" => {
                println!("{HELP_TEXT}");
                println!("Pointing: !point T R C, !header T C, !row T R, !wait MS");
                continue;
            }
            _ => {}
        }
        match repl_step(line) {
            Ok(Some(step)) => {
                runner.step(index, &step).map_err(scenario_error)?;
                index += 1;
            }
            Ok(None) => {}
            Err(msg) => println!("{msg}"),
        }
        flush(&runner);
    }
    Ok(0)
}

fn cmd_serve(port: u16, bind: std::net::IpAddr, overlay: Option<PathBuf>, config: EngineConfig) -> Result<u8, Usage> {
    let overlay_js = match overlay {
        Some(p) => Some(std::fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display()))?),
        None => None,
    };
    let state = Arc::new(ServerState::new(config, overlay_js));
    let addr = SocketAddr::new(bind, port);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(serve(addr, state))?;
    Ok(0)
}

/// Joins an error's causes, skipping any already quoted by the message before it.
fn error_chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = engine_config(&cli.engine).and_then(|config| match cli.command {
        Command::Parse { file, json, url } => cmd_parse(&file, json, url, config),
        Command::Run { scenario } => cmd_run(&scenario, config),
        Command::Repl { file } => cmd_repl(&file, config),
        Command::Serve { port, bind, overlay } => cmd_serve(port, bind, overlay, config),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Usage(e)) => {
            eprintln!("error: {}", error_chain(&e));
            ExitCode::from(EXIT_USAGE)
        }
    }
}
