//! `cep` — compile pattern formulas, run them over event streams, and
//! benchmark the engines.

use cep_cli::{bench, queries};

use std::fs;
use std::io::{BufRead, BufReader};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cep_core::cea::io_determinize;
use cep_core::error::CompileError;
use cep_core::event::{load_stream, StreamFormat, StreamPrefix};
use cep_core::formula::{Formula, Strategy};
use cep_core::oracle::{apply_selection, oracle_eval, ComplexEvent};
use cep_core::pipeline::{compile_formula, compile_strategy};
use cep_core::rewrite::{to_lp_normal_form, to_safe};
use cep_core::runtime::Engine;
use cep_core::schema::Schema;

use bench::{BenchConfig, BenchMode, Dist};

const EXIT_PARSE: u8 = 1;
const EXIT_NOT_WELL_FORMED: u8 = 2;
const EXIT_NOT_UNARY: u8 = 3;

#[derive(Parser)]
#[command(name = "cep", version, about = "complex event processing over typed streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, rewrite and compile a query; print the requested artifact.
    Compile(CompileArgs),
    /// Evaluate a query over a stream, one output line per complex event.
    Run(RunArgs),
    /// Generate a seeded stream and measure the engine on it (JSON report).
    Bench(BenchArgs),
}

#[derive(Args)]
struct CompileArgs {
    /// Query file, or a bundled id (Q1..Q6)
    #[arg(long)]
    query: String,
    /// Schema file (defaults to the bundled five-type schema for Q1..Q6)
    #[arg(long)]
    schema: Option<String>,
    /// Extra selection strategy applied to the automaton
    #[arg(long, value_enum, default_value_t = StrategyArg::None)]
    strategy: StrategyArg,
    /// Determinize the final automaton
    #[arg(long)]
    determinize: bool,
    #[arg(long, value_enum, default_value_t = Emit::Report)]
    emit: Emit,
}

#[derive(Args)]
struct RunArgs {
    /// Query file, or a bundled id (Q1..Q6)
    #[arg(long)]
    query: String,
    /// Schema file (defaults to the bundled five-type schema for Q1..Q6)
    #[arg(long)]
    schema: Option<String>,
    /// Stream file, `-` for standard input
    #[arg(long)]
    stream: String,
    #[arg(long, value_enum, default_value_t = FormatArg::Jsonl)]
    format: FormatArg,
    #[arg(long, value_enum, default_value_t = StrategyArg::None)]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = EngineArg::Auto)]
    engine: EngineArg,
    /// Emit the raw enumeration sequence (reversed positions, `#` framed)
    #[arg(long)]
    trace: bool,
    /// Reset all partial matches whenever an output fires (heuristic)
    #[arg(long)]
    consumption_policy: bool,
    /// Drop unreachable output nodes every N events
    #[arg(long)]
    compact_every: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    /// Bundled query id (Q1..Q6) or a query file
    #[arg(long)]
    query: String,
    /// Schema file (defaults to the bundled five-type schema)
    #[arg(long)]
    schema: Option<String>,
    /// Stream length to generate
    #[arg(long, default_value_t = 2000)]
    len: usize,
    #[arg(long, value_enum, default_value_t = DistArg::Uniform)]
    dist: DistArg,
    #[arg(long, value_enum, default_value_t = ModeArg::StressTriggerLast)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = StrategyArg::None)]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = EngineArg::Auto)]
    engine: EngineArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Report,
    Rewritten,
    Dot,
    Stats,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    None,
    Strict,
    Nxt,
    Last,
    Max,
}

impl StrategyArg {
    fn to_strategy(self) -> Option<Strategy> {
        match self {
            StrategyArg::None => None,
            StrategyArg::Strict => Some(Strategy::Strict),
            StrategyArg::Nxt => Some(Strategy::Nxt),
            StrategyArg::Last => Some(Strategy::Last),
            StrategyArg::Max => Some(Strategy::Max),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Jsonl,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    /// dispatch: deterministic algorithm, strategy engines, or subsets
    Auto,
    /// brute-force reference semantics
    Oracle,
    /// on-the-fly subset algorithm
    Ndet,
    /// determinize first, then the deterministic algorithm
    Det,
    /// materializing baseline
    Naive,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistArg {
    Uniform,
    Weighted,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    StressTriggerLast,
    Throughput,
    ConsumptionPolicy,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile(args) => cmd_compile(args),
        Command::Run(args) => cmd_run(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_PARSE)
        }
    }
}

/// Loads the query text and its schema; bundled ids use the bench schema.
fn load_inputs(query: &str, schema: &Option<String>) -> Result<(String, Arc<Schema>)> {
    let (query_text, default_schema) = match queries::lookup(query) {
        Some(text) => (text.to_string(), Some(queries::BENCH_SCHEMA)),
        None => {
            let text = fs::read_to_string(query)
                .with_context(|| format!("reading query file `{query}`"))?;
            (text, None)
        }
    };
    let schema_text = match schema {
        Some(path) => {
            fs::read_to_string(path).with_context(|| format!("reading schema file `{path}`"))?
        }
        None => default_schema
            .context("a --schema file is required unless the query is a bundled id")?
            .to_string(),
    };
    let schema = cep_core::load_schema(&schema_text)?;
    Ok((query_text, schema))
}

fn parse_query(text: &str, schema: &Arc<Schema>) -> Result<Formula, ExitCode> {
    cep_core::parse_formula(text.trim(), schema).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_PARSE)
    })
}

/// Finds a binary predicate atom to cite in the non-unary error.
fn first_binary_atom(f: &Formula) -> Option<String> {
    let mut found = None;
    f.for_each_node(&mut |n| {
        if found.is_some() {
            return;
        }
        if let Formula::Filter { pred, .. } = n {
            find_binary(pred, &mut found);
        }
    });
    found
}

fn find_binary(p: &cep_core::PredicateExpr, out: &mut Option<String>) {
    use cep_core::PredicateExpr as P;
    if out.is_some() {
        return;
    }
    match p {
        P::CmpAttrs { lvar, rvar, .. } if lvar != rvar => *out = Some(p.to_string()),
        P::Not(inner) => find_binary(inner, out),
        P::And(a, b) | P::Or(a, b) => {
            find_binary(a, out);
            find_binary(b, out);
        }
        _ => {}
    }
}

fn cmd_compile(args: CompileArgs) -> Result<ExitCode> {
    let (query_text, schema) = load_inputs(&args.query, &args.schema)?;
    let formula = match parse_query(&query_text, &schema) {
        Ok(f) => f,
        Err(code) => return Ok(code),
    };
    let report = cep_core::analyze(&formula);
    if !report.well_formed {
        eprintln!("error: {}", CompileError::NotWellFormed);
        return Ok(ExitCode::from(EXIT_NOT_WELL_FORMED));
    }
    let (wrappers, core) = formula.peel_selects();
    let rewritten = to_lp_normal_form(&to_safe(core)).map_err(|e| anyhow::anyhow!("{e}"))?;

    match args.emit {
        Emit::Rewritten => {
            let mut out = rewritten.clone();
            for s in wrappers.iter().rev() {
                out = Formula::select(*s, out);
            }
            println!("{out}");
            return Ok(ExitCode::SUCCESS);
        }
        Emit::Report => {
            println!("query: {}", args.query);
            println!("size: {}", formula.size());
            println!("variables: {:?}", report.var_all);
            println!("well_formed: {}", report.well_formed);
            println!("safe: {}", report.safe);
            println!("unary: {}", report.unary);
            println!("bound: {:?}", report.bound);
            println!("rewritten: {rewritten}");
            println!("rewritten_size: {}", rewritten.size());
            if report.unary {
                let compiled = compile_formula(&formula).map_err(|e| anyhow::anyhow!("{e}"))?;
                let mut a = compiled.strategy_automaton(false);
                if let Some(s) = args.strategy.to_strategy() {
                    a = compile_strategy(s, &a);
                }
                if args.determinize {
                    a = io_determinize(&a);
                }
                println!("automaton_states: {}", a.n_states);
                println!("automaton_transitions: {}", a.transitions.len());
                println!("io_deterministic: {}", cep_core::cea::is_io_deterministic(&a));
            }
            return Ok(ExitCode::SUCCESS);
        }
        Emit::Dot | Emit::Stats => {}
    }

    // automaton artifacts require a unary formula
    if !report.unary {
        let atom = first_binary_atom(&formula).unwrap_or_else(|| "a binary atom".into());
        eprintln!("error: {}: the predicate `{atom}` is binary", CompileError::NotUnary);
        return Ok(ExitCode::from(EXIT_NOT_UNARY));
    }
    let compiled = compile_formula(&formula).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut a = compiled.strategy_automaton(false);
    if let Some(s) = args.strategy.to_strategy() {
        a = compile_strategy(s, &a);
    }
    if args.determinize {
        a = io_determinize(&a);
    }
    match args.emit {
        Emit::Dot => println!("{}", a.to_dot()),
        Emit::Stats => {
            let stats = serde_json::json!({
                "query": args.query,
                "formula_size": formula.size(),
                "rewritten_size": rewritten.size(),
                "states": a.n_states,
                "transitions": a.transitions.len(),
                "io_deterministic": cep_core::cea::is_io_deterministic(&a),
                "strategies": compiled.strategies.iter().map(|s| s.name()).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&stats)?);
        }
        _ => unreachable!(),
    }
    Ok(ExitCode::SUCCESS)
}

fn read_stream(args: &RunArgs, schema: &Arc<Schema>) -> Result<StreamPrefix> {
    let format = match args.format {
        FormatArg::Jsonl => StreamFormat::Jsonl,
        FormatArg::Csv => StreamFormat::Csv,
    };
    let reader: Box<dyn BufRead> = if args.stream == "-" {
        Box::new(BufReader::new(std::io::stdin()))
    } else {
        Box::new(BufReader::new(
            fs::File::open(&args.stream).with_context(|| format!("opening `{}`", args.stream))?,
        ))
    };
    Ok(load_stream(reader, schema, format)?)
}

fn print_outputs(pos: usize, outs: &[ComplexEvent], trace: bool) {
    if trace {
        let framed: Vec<String> = outs
            .iter()
            .map(|c| {
                c.positions()
                    .iter()
                    .rev()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        println!("{pos}> {}", framed.join(" # "));
    } else {
        for c in outs {
            println!("{pos}: {c}");
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let (query_text, schema) = load_inputs(&args.query, &args.schema)?;
    let formula = match parse_query(&query_text, &schema) {
        Ok(f) => f,
        Err(code) => return Ok(code),
    };
    if !cep_core::analyze(&formula).well_formed {
        eprintln!("error: {}", CompileError::NotWellFormed);
        return Ok(ExitCode::from(EXIT_NOT_WELL_FORMED));
    }
    let stream = read_stream(&args, &schema)?;

    // strategy: the flag overrides the formula's top-level wrappers
    let (wrappers, _) = formula.peel_selects();
    let strategy = args.strategy.to_strategy().or_else(|| wrappers.first().copied());

    if args.engine == EngineArg::Oracle {
        let all = oracle_eval(&formula, &stream).map_err(|e| anyhow::anyhow!("{e}"))?;
        let selected = match (args.strategy.to_strategy(), wrappers.is_empty()) {
            // wrappers already applied inside the oracle
            (None, _) => all,
            (Some(s), _) => apply_selection(s, &all),
        };
        for pos in 0..stream.len() {
            let outs: Vec<ComplexEvent> =
                selected.iter().filter(|c| c.max_pos() == pos).cloned().collect();
            if !outs.is_empty() {
                print_outputs(pos, &outs, args.trace);
            }
        }
        return Ok(ExitCode::SUCCESS);
    }

    if !cep_core::analyze(&formula).unary {
        let atom = first_binary_atom(&formula).unwrap_or_else(|| "a binary atom".into());
        eprintln!(
            "error: {}: the predicate `{atom}` is binary (use --engine oracle)",
            CompileError::NotUnary
        );
        return Ok(ExitCode::from(EXIT_NOT_UNARY));
    }

    let compiled = compile_formula(&formula).map_err(|e| anyhow::anyhow!("{e}"))?;
    // inner wrappers are compiled into the automaton; the outermost (or
    // the flag override) drives the engine
    let base = if args.strategy.to_strategy().is_some() {
        compiled.strategy_automaton(false)
    } else {
        compiled.engine_inputs().0
    };
    let mut engine = match args.engine {
        EngineArg::Auto => Engine::new(&base, schema.clone(), strategy),
        EngineArg::Det => {
            let a = match strategy {
                None => io_determinize(&base),
                Some(s) => io_determinize(&compile_strategy(s, &base)),
            };
            Engine::new(&a, schema.clone(), None)
        }
        EngineArg::Ndet => {
            let a = match strategy {
                None => base.clone(),
                Some(s) => compile_strategy(s, &base),
            };
            Engine::new_on_the_fly(&a, schema.clone())
        }
        EngineArg::Naive => {
            let a = match strategy {
                None => base.clone(),
                Some(s) => compile_strategy(s, &base),
            };
            Engine::new_naive(&a, schema.clone())
        }
        EngineArg::Oracle => unreachable!(),
    };
    engine.consumption_policy = args.consumption_policy;

    let mut since_compact = 0usize;
    for (pos, t) in stream.iter() {
        engine.step(t);
        let outs: Vec<ComplexEvent> = match engine.naive_outputs() {
            Some(outs) => outs,
            None => engine.enumerate().collect(),
        };
        if !outs.is_empty() {
            print_outputs(pos, &outs, args.trace);
            if engine.consumption_policy {
                engine.reset_to_initial();
            }
        }
        since_compact += 1;
        if let Some(every) = args.compact_every {
            if since_compact >= every {
                engine.compact();
                since_compact = 0;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    let (query_text, schema) = load_inputs(&args.query, &args.schema)?;
    let config = BenchConfig {
        query_id: args.query.clone(),
        query_text,
        len: args.len,
        dist: match args.dist {
            DistArg::Uniform => Dist::Uniform,
            DistArg::Weighted => Dist::Weighted,
        },
        mode: match args.mode {
            ModeArg::StressTriggerLast => BenchMode::StressTriggerLast,
            ModeArg::Throughput => BenchMode::Throughput,
            ModeArg::ConsumptionPolicy => BenchMode::ConsumptionPolicy,
        },
        strategy: args.strategy.to_strategy(),
        seed: args.seed,
    };
    let engine = match args.engine {
        EngineArg::Auto => "auto",
        EngineArg::Det => "det",
        EngineArg::Ndet => "ndet",
        EngineArg::Naive => "naive",
        EngineArg::Oracle => bail!("the oracle is not a benchmark engine"),
    };
    if args.engine == EngineArg::Oracle {
        bail!("the oracle is not a benchmark engine");
    }
    let report = bench::run_bench(&config, &schema, engine)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}
