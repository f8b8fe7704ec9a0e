//! Command-line front end: spec validation, term running and tracing,
//! bisimilarity checks, congruence probing, and term enumeration, with
//! deterministic seeds and machine-readable output on stdout.
//!
//! Exit codes: 0 valid / no counterexample, 1 invalid spec, 2 input error,
//! 3 distinguished (or anomalies found).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hosos::bisim::{
    check_auto, congruence_probe, replay_witness, verdict_json, CheckConfig, Verdict,
};
use hosos::builtins;
use hosos::engine::Session;
use hosos::lambda::{
    app_bisim_closed, app_bisim_open, congruence_probe_lambda, enumerate_lambda,
    lambda_verdict_json, parse_lambda, render_debruijn, render_named, replay_lambda_witness,
    LambdaCheckConfig, LambdaSyntax, LambdaTerm, LambdaVerdict, Strategy,
};
use hosos::spec::{desugar, parse_spec, validate, HoSpec};
use hosos::term::{enumerate_closed, parse_term, render, Term, TermMode};

const EXIT_OK: u8 = 0;
const EXIT_INVALID_SPEC: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_DISTINGUISHED: u8 = 3;

/// Environment variable naming the directory searched for spec files given
/// by bare name.
const ASSET_DIR_ENV: &str = "HOSOS_ASSET_DIR";

#[derive(Parser)]
#[command(name = "hosos", version, about = "Higher-order SOS workbench")]
struct Cli {
    /// Output format: a single machine document or human-readable text on
    /// stdout. Summaries always go to stderr.
    #[arg(long, global = true, value_enum, default_value_t = Format::Machine)]
    format: Format,

    /// Seed for all randomized sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, desugar and validate a rule specification file.
    CheckSpec { path: PathBuf },

    /// Run a term, printing its trace.
    Run {
        spec: String,
        term: String,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[command(flatten)]
        term_opts: TermOpts,
    },

    /// Bounded bisimilarity check for two terms.
    Bisim {
        spec: String,
        t1: String,
        t2: String,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        /// Maximum size of enumerated argument-pool terms.
        #[arg(long)]
        pool_size: Option<usize>,
        /// Extra argument terms appended to the pool.
        #[arg(long = "extra-arg")]
        extra_args: Vec<String>,
        /// Closing-tuple limit for open λ-terms.
        #[arg(long, default_value_t = 64)]
        limit: usize,
        /// Re-execute the emitted witness against the engine.
        #[arg(long, hide = true)]
        replay: bool,
        #[command(flatten)]
        term_opts: TermOpts,
    },

    /// Congruence probe: sampled single-hole contexts around a pair.
    Congruence {
        spec: String,
        t1: String,
        t2: String,
        #[arg(long, default_value_t = 500)]
        contexts: usize,
        #[arg(long, default_value_t = 8)]
        ctx_size: usize,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        #[arg(long)]
        pool_size: Option<usize>,
        #[command(flatten)]
        term_opts: TermOpts,
    },

    /// List terms in canonical order up to a size bound.
    Enumerate {
        spec: String,
        #[arg(long, default_value_t = 3)]
        max_size: usize,
        /// Context size for λ enumeration.
        #[arg(long, default_value_t = 0)]
        ctx: usize,
    },
}

#[derive(Args)]
struct TermOpts {
    /// Parse λ-terms in the de Bruijn syntax (`ctx=N lam(app(@0, @1))`).
    #[arg(long)]
    debruijn: bool,

    /// Append Ω to the argument pool.
    #[arg(long)]
    include_omega: bool,
}

enum Calculus {
    Ho(HoSpec),
    Lambda(Strategy),
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_INPUT, message: message.into() }
    }

    fn invalid_spec(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_INVALID_SPEC, message: message.into() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::CheckSpec { path } => cmd_check_spec(cli, path),
        Command::Run { spec, term, steps, term_opts } => {
            cmd_run(cli, spec, term, *steps, term_opts)
        }
        Command::Bisim { spec, t1, t2, depth, pool_size, extra_args, limit, replay, term_opts } => {
            cmd_bisim(cli, spec, t1, t2, *depth, *pool_size, extra_args, *limit, *replay, term_opts)
        }
        Command::Congruence { spec, t1, t2, contexts, ctx_size, depth, pool_size, term_opts } => {
            cmd_congruence(cli, spec, t1, t2, *contexts, *ctx_size, *depth, *pool_size, term_opts)
        }
        Command::Enumerate { spec, max_size, ctx } => cmd_enumerate(cli, spec, *max_size, *ctx),
    }
}

fn emit(cli: &Cli, machine: Value, text: String) {
    match cli.format {
        Format::Machine => println!("{machine}"),
        Format::Text => print!("{text}"),
    }
}

fn load_calculus(name: &str) -> Result<Calculus, Failure> {
    match name {
        "xcl" => Ok(Calculus::Ho(builtins::xcl())),
        "xcl_nd" => Ok(Calculus::Ho(builtins::xcl_nd())),
        "lambda_cbn" => Ok(Calculus::Lambda(Strategy::Cbn)),
        "lambda_cbv" => Ok(Calculus::Lambda(Strategy::Cbv)),
        other => {
            let path = resolve_spec_path(other)?;
            let (spec, _) = load_spec_file(&path)?;
            Ok(Calculus::Ho(spec))
        }
    }
}

fn resolve_spec_path(name: &str) -> Result<PathBuf, Failure> {
    let direct = PathBuf::from(name);
    if direct.exists() {
        return Ok(direct);
    }
    if let Ok(dir) = std::env::var(ASSET_DIR_ENV) {
        let under = Path::new(&dir).join(name);
        if under.exists() {
            return Ok(under);
        }
    }
    Err(Failure::input(format!(
        "`{name}` is not a builtin (xcl, xcl_nd, lambda_cbn, lambda_cbv) or a readable spec file"
    )))
}

fn load_spec_file(path: &Path) -> Result<(HoSpec, usize), Failure> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let sugared = parse_spec(&src)
        .map_err(|e| Failure::invalid_spec(format!("{}: {e}", path.display())))?;
    let n_sugared = sugared.rules.len();
    let spec = desugar(&sugared).map_err(|diags| {
        let lines: Vec<String> = diags.iter().map(ToString::to_string).collect();
        Failure::invalid_spec(format!("{}:\n  {}", path.display(), lines.join("\n  ")))
    })?;
    Ok((spec, n_sugared))
}

fn cmd_check_spec(cli: &Cli, path: &Path) -> Result<u8, Failure> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;

    let mut diagnostics: Vec<String> = Vec::new();
    let mut summary = String::new();
    let mut rules = 0usize;
    let mut mode = String::new();

    match parse_spec(&src) {
        Err(e) => diagnostics.push(e.to_string()),
        Ok(sugared) => {
            mode = sugared.mode.to_string();
            match desugar(&sugared) {
                Err(diags) => diagnostics.extend(diags.iter().map(ToString::to_string)),
                Ok(spec) => {
                    if let Err(diags) = validate(&spec) {
                        diagnostics.extend(diags.iter().map(ToString::to_string));
                    } else {
                        rules = spec.rule_count();
                        summary = format!("{rules} rules, {mode}, complete");
                    }
                }
            }
        }
    }

    if diagnostics.is_empty() {
        eprintln!("{summary}");
        emit(
            cli,
            json!({"status": "complete", "rules": rules, "mode": mode}),
            format!("{summary}\n"),
        );
        Ok(EXIT_OK)
    } else {
        for d in &diagnostics {
            eprintln!("{d}");
        }
        emit(
            cli,
            json!({"status": "invalid", "diagnostics": diagnostics}),
            diagnostics.join("\n") + "\n",
        );
        Ok(EXIT_INVALID_SPEC)
    }
}

fn lambda_aliases() -> BTreeMap<String, LambdaTerm> {
    BTreeMap::from([
        ("OMEGA".to_string(), builtins::omega()),
        ("THETA".to_string(), builtins::theta()),
    ])
}

fn parse_ho_term(src: &str, spec: &HoSpec) -> Result<Term, Failure> {
    parse_term(src, &spec.sig, TermMode::Closed)
        .map_err(|e| Failure::input(format!("in term `{src}`: {e}")))
}

fn parse_lambda_term(src: &str, opts: &TermOpts) -> Result<LambdaTerm, Failure> {
    let syntax = if opts.debruijn { LambdaSyntax::DeBruijn } else { LambdaSyntax::Named };
    parse_lambda(src, syntax, &lambda_aliases())
        .map_err(|e| Failure::input(format!("in term `{src}`: {e}")))
}

fn cmd_run(
    cli: &Cli,
    spec: &str,
    term: &str,
    steps: usize,
    term_opts: &TermOpts,
) -> Result<u8, Failure> {
    match load_calculus(spec)? {
        Calculus::Ho(spec) => {
            let t = parse_ho_term(term, &spec)?;
            let mut session = Session::new(&spec);
            let trace = session
                .trace(&t, steps)
                .map_err(|e| Failure::input(e.to_string()))?;
            eprintln!("{} events, terminal {}", trace.events.len(), trace.terminal);
            emit(cli, trace.to_json(), trace.to_text());
        }
        Calculus::Lambda(strategy) => {
            let t = parse_lambda_term(term, term_opts)?;
            let trace = hosos::lambda::trace(strategy, &t, steps);
            eprintln!("{} events, terminal {}", trace.events.len(), trace.terminal);
            emit(cli, trace.to_json(), trace.to_text());
        }
    }
    Ok(EXIT_OK)
}

fn ho_check_config(
    spec: &HoSpec,
    depth: usize,
    pool_size: Option<usize>,
    extra_args: &[String],
) -> Result<CheckConfig, Failure> {
    let mut cfg = CheckConfig::new(depth, enumerate_closed(&spec.sig, pool_size.unwrap_or(3)));
    for src in extra_args {
        cfg.extra_args.push(parse_ho_term(src, spec)?);
    }
    Ok(cfg)
}

fn lambda_check_config(
    depth: usize,
    pool_size: Option<usize>,
    extra_args: &[String],
    term_opts: &TermOpts,
) -> Result<LambdaCheckConfig, Failure> {
    let mut cfg = LambdaCheckConfig::new(depth, enumerate_lambda(0, pool_size.unwrap_or(4)));
    if term_opts.include_omega {
        cfg.extra_args.push(builtins::omega());
    }
    for src in extra_args {
        let t = parse_lambda_term(src, term_opts)?;
        if !t.is_closed() {
            return Err(Failure::input(format!("pool term `{src}` must be closed")));
        }
        cfg.extra_args.push(t);
    }
    Ok(cfg)
}

#[allow(clippy::too_many_arguments)]
fn cmd_bisim(
    cli: &Cli,
    spec: &str,
    t1: &str,
    t2: &str,
    depth: usize,
    pool_size: Option<usize>,
    extra_args: &[String],
    limit: usize,
    replay: bool,
    term_opts: &TermOpts,
) -> Result<u8, Failure> {
    match load_calculus(spec)? {
        Calculus::Ho(spec) => {
            let p = parse_ho_term(t1, &spec)?;
            let q = parse_ho_term(t2, &spec)?;
            let cfg = ho_check_config(&spec, depth, pool_size, extra_args)?;
            let verdict =
                check_auto(&spec, &p, &q, &cfg).map_err(|e| Failure::input(e.to_string()))?;
            let mut doc = verdict_json(&verdict, cfg.depth, cfg.effective_pool().len());
            if replay {
                let ok = match &verdict {
                    Verdict::Distinguished { witness, .. } => {
                        replay_witness(&spec, &p, &q, witness, &cfg)
                            .map_err(|e| Failure::input(e.to_string()))?
                    }
                    Verdict::NoCounterexampleWithin { .. } => true,
                };
                doc["replay_ok"] = json!(ok);
            }
            finish_verdict(cli, doc, verdict.is_distinguished())
        }
        Calculus::Lambda(strategy) => {
            let p = parse_lambda_term(t1, term_opts)?;
            let q = parse_lambda_term(t2, term_opts)?;
            let cfg = lambda_check_config(depth, pool_size, extra_args, term_opts)?;
            let verdict = if p.is_closed() && q.is_closed() {
                app_bisim_closed(&p, &q, strategy, &cfg)
            } else {
                let pool = cfg.effective_pool();
                app_bisim_open(&p, &q, strategy, &cfg, &pool, limit)
            }
            .map_err(|e| Failure::input(e.to_string()))?;
            let mut doc = lambda_verdict_json(&verdict, cfg.depth, cfg.effective_pool().len());
            if replay {
                let ok = match &verdict {
                    LambdaVerdict::Distinguished { witness, .. } => {
                        replay_lambda_witness(strategy, &p, &q, witness)
                    }
                    LambdaVerdict::NoCounterexampleWithin { .. } => true,
                };
                doc["replay_ok"] = json!(ok);
            }
            finish_verdict(cli, doc, verdict.is_distinguished())
        }
    }
}

fn finish_verdict(cli: &Cli, doc: Value, distinguished: bool) -> Result<u8, Failure> {
    let text = format!("{}\n", doc);
    eprintln!("verdict: {}", doc["verdict"].as_str().unwrap_or("?"));
    emit(cli, doc.clone(), text);
    Ok(if distinguished { EXIT_DISTINGUISHED } else { EXIT_OK })
}

#[allow(clippy::too_many_arguments)]
fn cmd_congruence(
    cli: &Cli,
    spec: &str,
    t1: &str,
    t2: &str,
    contexts: usize,
    ctx_size: usize,
    depth: usize,
    pool_size: Option<usize>,
    term_opts: &TermOpts,
) -> Result<u8, Failure> {
    let doc = match load_calculus(spec)? {
        Calculus::Ho(spec) => {
            let p = parse_ho_term(t1, &spec)?;
            let q = parse_ho_term(t2, &spec)?;
            let cfg = ho_check_config(&spec, depth, pool_size, &[])?;
            let report = congruence_probe(&spec, &p, &q, contexts, ctx_size, &cfg, cli.seed)
                .map_err(|e| match e {
                    hosos::bisim::ProbeError::InputsDistinguished => {
                        Failure { code: EXIT_DISTINGUISHED, message: e.to_string() }
                    }
                    other => Failure::input(other.to_string()),
                })?;
            report.to_json()
        }
        Calculus::Lambda(strategy) => {
            let p = parse_lambda_term(t1, term_opts)?;
            let q = parse_lambda_term(t2, term_opts)?;
            let cfg = lambda_check_config(depth, pool_size, &[], term_opts)?;
            let report =
                congruence_probe_lambda(strategy, &p, &q, contexts, ctx_size, &cfg, cli.seed)
                    .map_err(|e| match e {
                        hosos::lambda::LambdaProbeError::InputsDistinguished => {
                            Failure { code: EXIT_DISTINGUISHED, message: e.to_string() }
                        }
                        other => Failure::input(other.to_string()),
                    })?;
            report.to_json()
        }
    };
    let n_anomalies = doc["anomalies"].as_array().map_or(0, Vec::len);
    eprintln!(
        "{} contexts tried, {} anomalies",
        doc["contexts_tried"], n_anomalies
    );
    emit(cli, doc.clone(), format!("{doc}\n"));
    Ok(if n_anomalies == 0 { EXIT_OK } else { EXIT_DISTINGUISHED })
}

fn cmd_enumerate(cli: &Cli, spec: &str, max_size: usize, ctx: usize) -> Result<u8, Failure> {
    let rendered: Vec<String> = match load_calculus(spec)? {
        Calculus::Ho(spec) => enumerate_closed(&spec.sig, max_size).iter().map(render).collect(),
        Calculus::Lambda(_) => enumerate_lambda(ctx, max_size)
            .iter()
            .map(|t| format!("{}  |  {}", render_named(t), render_debruijn(t)))
            .collect(),
    };
    eprintln!("{} terms", rendered.len());
    emit(
        cli,
        json!({"terms": rendered, "count": rendered.len()}),
        rendered.join("\n") + "\n",
    );
    Ok(EXIT_OK)
}
