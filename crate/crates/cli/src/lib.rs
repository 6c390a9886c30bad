//! The `mincal` command line.
//!
//! [`run`] takes the arguments and I/O handles so it can be driven in-process;
//! `main` only wires it to the process.

pub mod render;

use std::fs;
use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use mincal_core::app::{self, AppRules};
use mincal_core::calendar::EventStore;
use mincal_core::context::DiscourseContext;
use mincal_core::dialog::{self, handle_utterance, Engine, Session, Transcript};
use mincal_core::domain::{Ontology, SlotFrame};
use mincal_core::generate::{self, DEFAULT_DEPTH};
use mincal_core::grammar::Grammar;
use mincal_core::parser;
use mincal_core::{data, Reading};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_PARSE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Indented bracketed matrices.
    Text,
    /// One JSON document per line.
    Machine,
}

/// Business hours as `LO..HI`, e.g. `9..17`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window(pub i64, pub i64);

fn parse_window(s: &str) -> Result<Window, String> {
    let (lo, hi) = s.split_once("..").ok_or("expected LO..HI")?;
    let lo = lo.trim().parse::<i64>().map_err(|e| format!("LO: {e}"))?;
    let hi = hi.trim().parse::<i64>().map_err(|e| format!("HI: {e}"))?;
    if !(0 <= lo && lo < hi && hi <= 23) {
        return Err("need 0 <= LO < HI <= 23".into());
    }
    Ok(Window(lo, hi))
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct CliConfig {
    /// Construction grammar file (default: the built-in calendar grammar).
    #[arg(long, global = true, env = "MINCAL_GRAMMAR")]
    pub grammar: Option<PathBuf>,
    /// Domain knowledge base (default: built-in).
    #[arg(long, global = true, env = "MINCAL_KB")]
    pub kb: Option<PathBuf>,
    /// Application knowledge base (default: built-in).
    #[arg(long = "app-kb", global = true, env = "MINCAL_APP_KB")]
    pub app_kb: Option<PathBuf>,
    /// Calendar file; created if missing. Without it the calendar is in memory.
    #[arg(long, global = true, env = "MINCAL_STORE")]
    pub store: Option<PathBuf>,
    /// Business hours used to pick am or pm, overriding the application KB.
    #[arg(long, global = true, env = "MINCAL_WINDOW", value_parser = parse_window)]
    pub window: Option<Window>,
    /// Turn off attachment filters and selectional restrictions.
    #[arg(long = "no-filters", global = true, env = "MINCAL_NO_FILTERS")]
    pub no_filters: bool,
    /// Print parser and dialog traces to stderr.
    #[arg(long, global = true, env = "MINCAL_TRACE")]
    pub trace: bool,
    #[arg(long, global = true, value_enum, default_value = "text", env = "MINCAL_FORMAT")]
    pub format: Format,
    /// Date that relative expressions resolve against (default: the local date).
    #[arg(long, global = true, env = "MINCAL_TODAY")]
    pub today: Option<NaiveDate>,
}

#[derive(Debug, Parser)]
#[command(name = "mincal", version, about = "Natural-language calendar assistant")]
pub struct Cli {
    #[command(flatten)]
    pub config: CliConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print every root reading of a sentence.
    Parse {
        /// Parse as a reply to a question of this kind (e.g. wh_time).
        #[arg(long)]
        after: Option<String>,
        #[arg(required = true)]
        words: Vec<String>,
    },
    /// Print the slot frame of a request, and the frame after defaults.
    Interpret {
        #[arg(required = true)]
        words: Vec<String>,
    },
    /// Interactive dialog. `:calendar`, `:trace` and `:quit` are commands.
    Repl,
    /// Run a `U:`/`S:` transcript and compare the replies.
    Replay { transcript: PathBuf },
    /// List distinct sentences derivable from a root construction.
    Enumerate {
        #[arg(long, default_value = "sent(cmnd, v.np)")]
        root: String,
        #[arg(long, default_value_t = 2000)]
        limit: usize,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        /// Also parse every sentence back and fail unless it yields its frame.
        #[arg(long)]
        check: bool,
    },
    /// Serve the HTTP session API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080", env = "MINCAL_ADDR")]
        addr: SocketAddr,
    },
}

/// A failure with the exit status it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn data_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_DATA,
        message: format!("{}: {e}", path.display()),
    }
}

fn read_or(path: &Option<PathBuf>, builtin: &str) -> Result<(String, Option<PathBuf>), Failure> {
    match path {
        None => Ok((builtin.to_string(), None)),
        Some(p) => fs::read_to_string(p)
            .map(|s| (s, Some(p.clone())))
            .map_err(|e| data_err(p, e)),
    }
}

fn origin(p: &Option<PathBuf>, builtin: &str) -> PathBuf {
    p.clone().unwrap_or_else(|| PathBuf::from(builtin))
}

impl CliConfig {
    pub fn engine(&self) -> Result<Engine, String> {
        self.load_engine().map_err(|f| f.message)
    }

    fn load_engine(&self) -> Result<Engine, Failure> {
        let (g, gp) = read_or(&self.grammar, data::CALENDAR_CG)?;
        let (k, kp) = read_or(&self.kb, data::CALENDAR_KB)?;
        let (a, ap) = read_or(&self.app_kb, data::APP_KB)?;
        let grammar = Grammar::load(&g).map_err(|e| data_err(&origin(&gp, "<calendar.cg>"), e))?;
        let ontology = Ontology::load(&k).map_err(|e| data_err(&origin(&kp, "<calendar.kb>"), e))?;
        let mut rules = AppRules::load(&a).map_err(|e| data_err(&origin(&ap, "<app.kb>"), e))?;
        if let Some(Window(lo, hi)) = self.window {
            rules.set_window(lo, hi).map_err(|m| Failure { code: EXIT_USAGE, message: m })?;
        }
        Ok(Engine {
            grammar,
            ontology,
            rules,
            use_filters: !self.no_filters,
        })
    }

    fn open_store(&self) -> Result<EventStore, Failure> {
        match &self.store {
            None => Ok(EventStore::new()),
            Some(p) => EventStore::open(p).map_err(|e| data_err(p, e)),
        }
    }

    fn today(&self) -> NaiveDate {
        self.today.unwrap_or_else(|| chrono::Local::now().date_naive())
    }
}

struct Io<'a> {
    input: &'a mut dyn BufRead,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Runs the command line; returns the process exit status.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut io = Io { input, out, err };
    match dispatch(&cli, &mut io) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(io.err, "mincal: {}", f.message);
            f.code
        }
    }
}

fn io_fail(e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_DATA,
        message: e.to_string(),
    }
}

fn dispatch(cli: &Cli, io: &mut Io) -> Result<i32, Failure> {
    let cfg = &cli.config;
    let engine = cfg.load_engine()?;
    match &cli.command {
        Command::Parse { after, words } => cmd_parse(cfg, &engine, after.as_deref(), &words.join(" "), io),
        Command::Interpret { words } => cmd_interpret(cfg, &engine, &words.join(" "), io),
        Command::Repl => cmd_repl(cfg, &engine, io),
        Command::Replay { transcript } => cmd_replay(cfg, &engine, transcript, io),
        Command::Enumerate {
            root,
            limit,
            depth,
            check,
        } => cmd_enumerate(cfg, &engine, root, *limit, *depth, *check, io),
        Command::Serve { addr } => cmd_serve(cfg, engine, *addr),
    }
}

fn json_line(out: &mut dyn Write, v: &impl serde::Serialize) -> Result<(), Failure> {
    let s = serde_json::to_string(v).expect("serializable");
    writeln!(out, "{s}").map_err(io_fail)
}

fn cmd_parse(cfg: &CliConfig, engine: &Engine, after: Option<&str>, text: &str, io: &mut Io) -> Result<i32, Failure> {
    let ctx = after.map(DiscourseContext::after_question).unwrap_or_default();
    let filters = engine.use_filters.then_some(&engine.ontology.filters);
    let (readings, stats) = parser::parse_with_stats(&engine.grammar, filters, &ctx, &parser::tokenize(text));
    if cfg.trace {
        let _ = writeln!(
            io.err,
            "tokens {:?}\nedges {} predictions {} vetoed {}",
            parser::surfaces(&parser::tokenize(text)),
            stats.edges,
            stats.predictions,
            stats.vetoed
        );
    }
    for r in &readings {
        match cfg.format {
            Format::Text => writeln!(io.out, "{}\n{}", r.construction, render::matrix(&r.message)).map_err(io_fail)?,
            Format::Machine => json_line(io.out, r)?,
        }
    }
    if readings.is_empty() {
        let _ = writeln!(io.err, "mincal: no parse for {text:?}");
        return Ok(EXIT_NO_PARSE);
    }
    Ok(EXIT_OK)
}

/// The request reading the dialog would act on.
fn best_frame(engine: &Engine, readings: &[Reading]) -> Option<SlotFrame> {
    readings
        .iter()
        .filter_map(|r| engine.interpret(&r.message).ok())
        .max_by_key(|f| std::cmp::Reverse(usize::MAX - f.filled().len() - f.participants.len()))
}

fn cmd_interpret(cfg: &CliConfig, engine: &Engine, text: &str, io: &mut Io) -> Result<i32, Failure> {
    let readings = engine.parse(&DiscourseContext::live(), text);
    let Some(frame) = best_frame(engine, &readings) else {
        let _ = writeln!(io.err, "mincal: no request reading for {text:?}");
        return Ok(EXIT_NO_PARSE);
    };
    let defaulted = app::apply_defaults(&engine.rules, &engine.ontology, &frame).map_err(|e| Failure {
        code: EXIT_NO_PARSE,
        message: e.to_string(),
    })?;
    let store = cfg.open_store()?;
    let pending = app::to_app_request(&engine.rules, &engine.ontology, &frame, cfg.today(), &store)
        .map(|r| r.pending)
        .unwrap_or_default();
    match cfg.format {
        Format::Text => {
            writeln!(io.out, "***Slots:\n{}", render::matrix(&frame.to_avm())).map_err(io_fail)?;
            if let Some(d) = &defaulted {
                writeln!(io.out, "***Defaults:\n{}", render::matrix(&d.to_avm())).map_err(io_fail)?;
            }
            if !pending.is_empty() {
                let names: Vec<String> = pending.iter().map(ToString::to_string).collect();
                writeln!(io.out, "pending: {}", names.join(" ")).map_err(io_fail)?;
            }
        }
        Format::Machine => json_line(
            io.out,
            &serde_json::json!({ "frame": frame, "defaulted": defaulted, "pending": pending }),
        )?,
    }
    Ok(EXIT_OK)
}

fn cmd_repl(cfg: &CliConfig, engine: &Engine, io: &mut Io) -> Result<i32, Failure> {
    let mut store = cfg.open_store()?;
    let mut session = Session::new(cfg.today());
    let mut trace = cfg.trace;
    let mut line = String::new();
    loop {
        write!(io.out, "> ").and_then(|_| io.out.flush()).map_err(io_fail)?;
        line.clear();
        if io.input.read_line(&mut line).map_err(io_fail)? == 0 {
            break;
        }
        let text = line.trim();
        match text {
            "" => continue,
            ":quit" | ":q" => break,
            ":trace" => {
                trace = !trace;
                writeln!(io.out, "trace {}", if trace { "on" } else { "off" }).map_err(io_fail)?;
            }
            ":calendar" => {
                let events = store.all();
                if events.is_empty() {
                    writeln!(io.out, "(no events)").map_err(io_fail)?;
                }
                for e in events {
                    writeln!(io.out, "{e}").map_err(io_fail)?;
                }
            }
            _ => {
                let turn = handle_utterance(engine, &mut session, &mut store, text);
                if trace {
                    for t in &turn.trace {
                        writeln!(io.err, "  {t}").map_err(io_fail)?;
                    }
                }
                match cfg.format {
                    Format::Text => writeln!(io.out, "{}", turn.reply).map_err(io_fail)?,
                    Format::Machine => json_line(io.out, &turn)?,
                }
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_replay(cfg: &CliConfig, engine: &Engine, path: &Path, io: &mut Io) -> Result<i32, Failure> {
    let text = fs::read_to_string(path).map_err(|e| data_err(path, e))?;
    let transcript: Transcript = text.parse().map_err(|e| data_err(path, e))?;
    let mut store = cfg.open_store()?;
    let turns = dialog::replay(engine, &transcript, cfg.today(), &mut store);
    for t in &turns {
        if t.ok() {
            writeln!(io.out, "ok   {}:{} {}", path.display(), t.line, t.user).map_err(io_fail)?;
        } else {
            writeln!(
                io.out,
                "FAIL {}:{} {}\n  expected: {}\n  actual:   {}",
                path.display(),
                t.line,
                t.user,
                t.expected.as_deref().unwrap_or(""),
                t.actual
            )
            .map_err(io_fail)?;
            return Ok(EXIT_NO_PARSE);
        }
    }
    writeln!(io.out, "{} turns, all replies match", turns.len()).map_err(io_fail)?;
    Ok(EXIT_OK)
}

fn cmd_enumerate(
    cfg: &CliConfig,
    engine: &Engine,
    root: &str,
    limit: usize,
    depth: usize,
    check: bool,
    io: &mut Io,
) -> Result<i32, Failure> {
    let items = generate::enumerate(engine, root, limit, depth).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: e.to_string(),
    })?;
    let mut failed = 0;
    for g in &items {
        let ok = !check || generate::round_trips(engine, g);
        if !ok {
            failed += 1;
        }
        match cfg.format {
            Format::Text if ok => writeln!(io.out, "{}", g.text),
            Format::Text => writeln!(io.out, "{}\t(does not round-trip)", g.text),
            Format::Machine => writeln!(
                io.out,
                "{}",
                serde_json::json!({ "text": g.text, "frame": g.frame, "round_trips": ok })
            ),
        }
        .map_err(io_fail)?;
    }
    if check {
        writeln!(io.err, "{} strings, {} round-trip failures", items.len(), failed).map_err(io_fail)?;
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_NO_PARSE })
}

fn cmd_serve(cfg: &CliConfig, engine: Engine, addr: SocketAddr) -> Result<i32, Failure> {
    let store = cfg.open_store()?;
    let state = mincal_service::AppState::new(engine, store, cfg.today);
    let rt = tokio::runtime::Runtime::new().map_err(io_fail)?;
    rt.block_on(mincal_service::serve(addr, state)).map_err(io_fail)?;
    Ok(EXIT_OK)
}
