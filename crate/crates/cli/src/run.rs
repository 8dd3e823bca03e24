//! Subcommands, exit codes and run reports.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hypercyc_core::algebra::GeneratorFamily;
use hypercyc_core::counterexample::{build_counterexample, find_dense_pair, DensePair, PairSearch, ReproduceConfig};
use hypercyc_core::dynamics::{
    basis_jset_probe, box_coverage, certify_hypercyclic, orbit_sample, projection_coverage, CertifyConfig, Grid,
    SearchLimits, Verdict,
};
use hypercyc_core::normal_form::{build_normal_form, reference_frame};
use hypercyc_core::structure::rank_condition;
use hypercyc_core::{Complex64, Error, Tolerances};
use serde_json::{json, Value};

use crate::io::{validate_roundtrip, GeneratorSetFile, ParseError};
use crate::parallel;
use crate::parse::{parse_budget, parse_complex, parse_min_degree, TargetSpec, VectorSpec};
use crate::report;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_NOT_HYPERCYCLIC: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "hypercyc", version, about = "Structure and hypercyclicity of abelian matrix semigroups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Generator-set JSON file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output artifact: point-cloud CSV or generator-set JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the run report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Half-width R of the coverage box [−R, R].
    #[arg(long = "box", default_value_t = 2.0)]
    pub half_width: f64,
    /// Grid resolution h.
    #[arg(long, default_value_t = 0.1)]
    pub res: f64,
    /// Maximum degrees of the certification ladder.
    #[arg(long, value_delimiter = ',', default_value = "10,20,40,80")]
    pub ladder: Vec<u64>,
    /// Radius of the ball around the source vector.
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// Minimum word degree: `quarter` (⌈D/4⌉) or an integer.
    #[arg(long, default_value = "quarter")]
    pub min_degree: String,
    /// Commutation tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol_comm: f64,
    /// Structure tolerance of the normal form.
    #[arg(long, default_value_t = 1e-9)]
    pub tol_struct: f64,
    /// Seed of the random target sampler.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Normal form and rank condition of a generator set.
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Empirical hypercyclicity certificate at v₀.
    Certify {
        #[command(flatten)]
        common: Common,
        /// Per-rung word cap; excess words are dropped in enumeration order.
        #[arg(long)]
        max_words: Option<u64>,
        /// Also probe the standard basis vectors lying in U.
        #[arg(long)]
        basis_probe: bool,
    },
    /// J-set scores of one source vector against a list of targets.
    Jset {
        #[command(flatten)]
        common: Common,
        /// Source vector: `e<k>`, `v0` or comma-separated complex entries.
        #[arg(long, default_value = "v0")]
        x: String,
        /// `random:N` or `;`-separated vectors.
        #[arg(long, default_value = "random:100")]
        targets: String,
        /// Word budget `D` or `M:D`.
        #[arg(long, default_value = "80")]
        budget: String,
        /// Cap on boxes expanded by the diagonal search.
        #[arg(long)]
        max_nodes: Option<u64>,
    },
    /// Orbit point cloud and its grid coverage.
    Orbit {
        #[command(flatten)]
        common: Common,
        /// Source vector: `e<k>`, `v0` or comma-separated complex entries.
        #[arg(long, default_value = "v0")]
        x: String,
        /// Word budget `D` or `M:D`; defaults to the top ladder rung.
        #[arg(long)]
        budget: Option<String>,
        /// Word cap; excess words are dropped in enumeration order.
        #[arg(long)]
        max_words: Option<u64>,
    },
    /// Build the diagonal counterexample family and reproduce its properties.
    Counterexample {
        #[command(flatten)]
        common: Common,
        /// Dimension, at least 2.
        #[arg(long)]
        n: usize,
        /// Complex a with |a| > 1.
        #[arg(long, default_value = "2")]
        a: String,
        /// Use this b instead of searching for a dense pair.
        #[arg(long)]
        b: Option<String>,
        /// `random:N` or `;`-separated vectors.
        #[arg(long, default_value = "random:100")]
        targets: String,
        /// J-set word budget `D` or `M:D`.
        #[arg(long, default_value = "32000:128000")]
        budget: String,
        /// J-set threshold for the basis vectors.
        #[arg(long, default_value_t = 1e-3)]
        threshold: f64,
        /// Steps of each explicit witness sequence.
        #[arg(long, default_value_t = 10)]
        witness_steps: usize,
        /// Only build and write the family.
        #[arg(long)]
        no_reproduce: bool,
    },
    /// Search for b making {aᵏbˡ} dense at grid scale.
    DensePair {
        #[command(flatten)]
        common: Common,
        /// Complex a with |a| > 1.
        #[arg(long, default_value = "2")]
        a: String,
        /// Coverage to reach.
        #[arg(long, default_value_t = 0.9)]
        target: f64,
        /// Largest number of (k, l) pairs scored per candidate.
        #[arg(long, default_value_t = 10_000)]
        max_pairs: u64,
        /// Candidate moduli in (1/|a|, 1).
        #[arg(long, default_value_t = 64)]
        moduli: usize,
        /// Candidate arguments per modulus.
        #[arg(long, default_value_t = 8)]
        args: usize,
        /// Lower modulus cut; defaults to half the resolution.
        #[arg(long)]
        floor: Option<f64>,
    },
    /// Check that a generator-set file survives parse → serialize → parse.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze { .. } => "analyze",
            Command::Certify { .. } => "certify",
            Command::Jset { .. } => "jset",
            Command::Orbit { .. } => "orbit",
            Command::Counterexample { .. } => "counterexample",
            Command::DensePair { .. } => "dense-pair",
            Command::Validate { .. } => "validate",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Analyze { common }
            | Command::Certify { common, .. }
            | Command::Jset { common, .. }
            | Command::Orbit { common, .. }
            | Command::Counterexample { common, .. }
            | Command::DensePair { common, .. }
            | Command::Validate { common } => common,
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Parse(ParseError),
    Numerical(Error),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Usage(_) | RunError::Parse(_) => EXIT_USAGE,
            RunError::Numerical(_) | RunError::Io(_) => EXIT_ERROR,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            RunError::Usage(m) => json!({ "code": "usage", "message": m }),
            RunError::Parse(e) => json!({
                "code": "parse_error",
                "message": e.message,
                "line": e.line,
                "column": e.column,
                "field": e.field,
            }),
            RunError::Numerical(e) => report::error(e),
            RunError::Io(m) => json!({ "code": "io", "message": m }),
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Usage(m) | RunError::Io(m) => f.write_str(m),
            RunError::Parse(e) => e.fmt(f),
            RunError::Numerical(e) => e.fmt(f),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Numerical(e)
    }
}

impl From<ParseError> for RunError {
    fn from(e: ParseError) -> Self {
        RunError::Parse(e)
    }
}

fn usage(m: impl Into<String>) -> RunError {
    RunError::Usage(m.into())
}

/// Result body of a successful command.
pub struct Outcome {
    pub result: Value,
    pub exit: u8,
}

/// A finished run: report body, timings and exit code.
pub struct RunReport {
    pub command: String,
    pub config: Value,
    pub body: Result<Value, Value>,
    pub timings: Value,
    pub exit: u8,
}

impl RunReport {
    /// Everything except timings; identical inputs give identical bodies.
    pub fn body_json(&self) -> Value {
        let mut v = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "exit_code": self.exit,
        });
        match &self.body {
            Ok(r) => v["result"] = r.clone(),
            Err(e) => v["error"] = e.clone(),
        }
        v
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.body_json();
        v["timings"] = self.timings.clone();
        v
    }
}

struct Context {
    common: Common,
    rule: hypercyc_core::dynamics::MinDegreeRule,
    tolerances: Tolerances,
    grid: Grid,
}

impl Context {
    fn new(common: &Common) -> Result<Self, RunError> {
        let rule = parse_min_degree(&common.min_degree).map_err(usage)?;
        let grid = Grid::new(common.half_width, common.res).map_err(|_| usage("--box and --res must be positive"))?;
        if common.ladder.is_empty() || common.ladder.contains(&0) {
            return Err(usage("--ladder needs positive degrees"));
        }
        if !(common.delta >= 0.0 && common.delta.is_finite()) {
            return Err(usage("--delta must be finite and nonnegative"));
        }
        let tolerances = Tolerances { commutation: common.tol_comm, structure: common.tol_struct, ..Tolerances::default() };
        Ok(Context { common: common.clone(), rule, tolerances, grid })
    }

    fn certify_config(&self, max_words: Option<u64>) -> CertifyConfig {
        CertifyConfig {
            grid: self.grid,
            ladder: self.common.ladder.clone(),
            min_degree: self.rule,
            max_words,
            tolerances: self.tolerances,
            ..CertifyConfig::default()
        }
    }

    fn input(&self) -> Result<&Path, RunError> {
        self.common.input.as_deref().ok_or_else(|| usage("--input is required"))
    }

    fn family(&self) -> Result<(GeneratorSetFile, GeneratorFamily), RunError> {
        let file = GeneratorSetFile::read(self.input()?)?;
        let family = file.to_family(self.tolerances.commutation)?;
        Ok((file, family))
    }

    fn echo(&self) -> Value {
        json!({
            "input": self.common.input.as_ref().map(|p| p.display().to_string()),
            "out": self.common.out.as_ref().map(|p| p.display().to_string()),
            "box": self.common.half_width,
            "res": self.common.res,
            "ladder": self.common.ladder,
            "delta": self.common.delta,
            "min_degree": report::min_degree(self.rule),
            "seed": self.common.seed,
            "tolerances": report::tolerances(&self.tolerances),
        })
    }

    fn v0(&self, family: &GeneratorFamily) -> Result<Vec<Complex64>, String> {
        build_normal_form(family, &self.tolerances).map(|nf| reference_frame(&nf).v0).map_err(|e| e.to_string())
    }

    fn source(&self, spec: &str, family: &GeneratorFamily) -> Result<Vec<Complex64>, RunError> {
        let spec = VectorSpec::parse(spec).map_err(usage)?;
        if spec == VectorSpec::V0 {
            let nf = build_normal_form(family, &self.tolerances)?;
            return Ok(reference_frame(&nf).v0);
        }
        spec.resolve(family.n(), || self.v0(family)).map_err(usage)
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|e| RunError::Io(format!("cannot write {}: {e}", path.display())))
}

fn analyze(ctx: &Context) -> Result<Outcome, RunError> {
    let (file, family) = ctx.family()?;
    let nf = build_normal_form(&family, &ctx.tolerances)?;
    let rank = rank_condition(&nf, &ctx.tolerances)?;
    Ok(Outcome {
        result: json!({
            "family": report::family(&family, file.labels.as_deref()),
            "normal_form": report::normal_form(&nf),
            "frame": report::frame(&reference_frame(&nf)),
            "rank_condition": report::block_structure(&rank),
        }),
        exit: EXIT_OK,
    })
}

fn certify(ctx: &Context, max_words: Option<u64>, probe: bool) -> Result<(Outcome, Value), RunError> {
    let (file, family) = ctx.family()?;
    let config = ctx.certify_config(max_words);
    let cert = certify_hypercyclic(&family, &config)?;
    let mut result = json!({
        "family": report::family(&family, file.labels.as_deref()),
        "certificate": report::certificate(&cert),
    });
    if probe && !matches!(cert.verdict, Verdict::NotHypercyclic(_)) {
        let n = family.n();
        let basis: Vec<Vec<Complex64>> = (0..n)
            .map(|k| (0..n).map(|l| Complex64::new(if k == l { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect();
        result["basis_probe"] = match basis_jset_probe(&family, &basis, &config) {
            Ok(p) => json!({
                "index": p.index,
                "verdict": report::verdict(&p.verdict),
                "ladder": p.rungs.iter().map(report::rung).collect::<Vec<_>>(),
            }),
            Err(e) => json!({ "error": report::error(&e) }),
        };
    }
    let exit = if matches!(cert.verdict, Verdict::NotHypercyclic(_)) { EXIT_NOT_HYPERCYCLIC } else { EXIT_OK };
    Ok((Outcome { result, exit }, report::certify_config(&config)))
}

fn jset(ctx: &Context, x: &str, targets: &str, budget: &str, max_nodes: Option<u64>) -> Result<(Outcome, Value), RunError> {
    let (_, family) = ctx.family()?;
    let source = ctx.source(x, &family)?;
    let budget = parse_budget(budget, ctx.rule).map_err(usage)?;
    let targets = TargetSpec::parse(targets)
        .and_then(|t| t.resolve(family.n(), ctx.common.half_width, ctx.common.seed))
        .map_err(usage)?;
    let limits = SearchLimits { max_nodes };
    let scores = parallel::jset_targets(&family, &source, &targets, ctx.common.delta, &budget, limits)?;
    let worst = scores.iter().fold(0.0f64, |m, s| m.max(s.best_distance));
    let echo = json!({ "x": x, "budget": report::budget(&budget), "targets": targets.len(), "max_nodes": max_nodes });
    Ok((
        Outcome {
            result: json!({
                "source": report::vector(&source),
                "max_distance": report::num(worst),
                "scores": scores.iter().map(report::jset).collect::<Vec<_>>(),
            }),
            exit: EXIT_OK,
        },
        echo,
    ))
}

fn orbit(ctx: &Context, x: &str, budget: Option<&str>, max_words: Option<u64>) -> Result<(Outcome, Value), RunError> {
    let (_, family) = ctx.family()?;
    let source = ctx.source(x, &family)?;
    let top = *ctx.common.ladder.iter().max().expect("ladder is nonempty");
    let mut budget = match budget {
        Some(b) => parse_budget(b, ctx.rule).map_err(usage)?,
        None => hypercyc_core::dynamics::WordBudget::new(ctx.rule.min_degree(top), top),
    };
    if let Some(cap) = max_words {
        budget = budget.with_cap(cap, true);
    }
    let cloud = orbit_sample(&family, &source, &budget)?;
    let n = family.n();
    let coverage: Vec<Value> = if n <= 2 {
        vec![report::density(&box_coverage(&cloud, &ctx.grid)?)]
    } else {
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let dims = vec![2 * i, 2 * i + 1, 2 * j, 2 * j + 1];
                out.push(report::density(&projection_coverage(&cloud, &ctx.grid, dims)?));
            }
        }
        out
    };
    if let Some(path) = &ctx.common.out {
        let mut buf = Vec::new();
        crate::io::write_cloud(&cloud, &mut buf).map_err(|e| RunError::Io(e.to_string()))?;
        std::fs::write(path, buf).map_err(|e| RunError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    let saturated = cloud.points.iter().filter(|p| p.saturated).count();
    Ok((
        Outcome {
            result: json!({
                "source": report::vector(&source),
                "points": cloud.points.len(),
                "saturated_points": saturated,
                "coverage": coverage,
            }),
            exit: EXIT_OK,
        },
        json!({ "x": x, "budget": report::budget(&budget) }),
    ))
}

struct CounterexampleArgs<'a> {
    n: usize,
    a: &'a str,
    b: Option<&'a str>,
    targets: &'a str,
    budget: &'a str,
    threshold: f64,
    witness_steps: usize,
    no_reproduce: bool,
}

fn counterexample(ctx: &Context, args: &CounterexampleArgs) -> Result<(Outcome, Value), RunError> {
    let a = parse_complex(args.a).map_err(usage)?;
    let search = PairSearch { grid: ctx.grid, ..PairSearch::default() };
    let pair = match args.b {
        Some(b) => DensePair::new(a, parse_complex(b).map_err(usage)?)?,
        None => find_dense_pair(a, &search)?,
    };
    let cf = build_counterexample(args.n, &pair)?;
    if let Some(path) = &ctx.common.out {
        let file = GeneratorSetFile::from_family(&cf.family, Some(cf.labels.clone()));
        write_file(path, &file.to_json())?;
    }
    let budget = parse_budget(args.budget, ctx.rule).map_err(usage)?;
    let config = ReproduceConfig {
        delta: ctx.common.delta,
        jset_budget: budget,
        jset_threshold: args.threshold,
        certify: ctx.certify_config(None),
        witness_steps: args.witness_steps,
        ..ReproduceConfig::default()
    };
    let echo = json!({
        "n": args.n,
        "a": report::complex(a),
        "b": args.b,
        "targets": args.targets,
        "jset_budget": report::budget(&budget),
        "jset_threshold": args.threshold,
        "witness_steps": config.witness_steps,
        "witness_targets": config.witness_targets,
        "witness_max_j": config.witness_max_j,
        "witness_tolerance": config.witness_tolerance,
        "line_threshold": config.line_threshold,
        "coverage_ceiling": config.coverage_ceiling,
        "certify": report::certify_config(&config.certify),
        "reproduce": !args.no_reproduce,
    });
    let mut result = json!({
        "pair": report::dense_pair(&pair),
        "family": report::family(&cf.family, Some(&cf.labels)),
    });
    if !args.no_reproduce {
        let targets = TargetSpec::parse(args.targets)
            .and_then(|t| t.resolve(args.n, ctx.common.half_width, ctx.common.seed))
            .map_err(usage)?;
        let theorem = parallel::reproduce_theorem(args.n, &pair, &config, &targets)?;
        result["theorem"] = report::theorem(&theorem);
    }
    Ok((Outcome { result, exit: EXIT_OK }, echo))
}

fn dense_pair(a: &str, search: PairSearch) -> Result<(Outcome, Value), RunError> {
    let a = parse_complex(a).map_err(usage)?;
    let echo = json!({
        "a": report::complex(a),
        "target": search.target,
        "max_pairs": search.max_pairs,
        "moduli": search.moduli,
        "args": search.args,
        "floor": search.floor,
    });
    let pair = find_dense_pair(a, &search)?;
    Ok((Outcome { result: report::dense_pair(&pair), exit: EXIT_OK }, echo))
}

fn validate(ctx: &Context) -> Result<Outcome, RunError> {
    let ok = validate_roundtrip(ctx.input()?)?;
    Ok(Outcome { result: json!({ "roundtrip": ok }), exit: if ok { EXIT_OK } else { EXIT_ERROR } })
}

/// Runs a parsed command and assembles its report.
pub fn execute(command: &Command) -> RunReport {
    let start = Instant::now();
    let name = command.name().to_string();
    let ctx = match Context::new(command.common()) {
        Ok(c) => c,
        Err(e) => {
            return RunReport {
                command: name,
                config: Value::Null,
                exit: e.exit_code(),
                body: Err(e.to_json()),
                timings: json!({ "total_seconds": start.elapsed().as_secs_f64() }),
            }
        }
    };
    let mut config = ctx.echo();
    let outcome = match command {
        Command::Analyze { .. } => analyze(&ctx),
        Command::Certify { max_words, basis_probe, .. } => certify(&ctx, *max_words, *basis_probe).map(|(o, e)| {
            config["certify"] = e;
            o
        }),
        Command::Jset { x, targets, budget, max_nodes, .. } => jset(&ctx, x, targets, budget, *max_nodes).map(|(o, e)| {
            config["jset"] = e;
            o
        }),
        Command::Orbit { x, budget, max_words, .. } => orbit(&ctx, x, budget.as_deref(), *max_words).map(|(o, e)| {
            config["orbit"] = e;
            o
        }),
        Command::Counterexample { n, a, b, targets, budget, threshold, witness_steps, no_reproduce, .. } => {
            let args = CounterexampleArgs {
                n: *n,
                a,
                b: b.as_deref(),
                targets,
                budget,
                threshold: *threshold,
                witness_steps: *witness_steps,
                no_reproduce: *no_reproduce,
            };
            counterexample(&ctx, &args).map(|(o, e)| {
                config["counterexample"] = e;
                o
            })
        }
        Command::DensePair { a, target, max_pairs, moduli, args, floor, .. } => {
            let search = PairSearch {
                moduli: *moduli,
                args: *args,
                max_pairs: *max_pairs,
                target: *target,
                grid: ctx.grid,
                floor: *floor,
            };
            dense_pair(a, search).map(|(o, e)| {
                config["dense_pair"] = e;
                o
            })
        }
        Command::Validate { .. } => validate(&ctx),
    };
    let timings = json!({ "total_seconds": start.elapsed().as_secs_f64() });
    match outcome {
        Ok(o) => RunReport { command: name, config, exit: o.exit, body: Ok(o.result), timings },
        Err(e) => RunReport { command: name, config, exit: e.exit_code(), body: Err(e.to_json()), timings },
    }
}

/// Full entry point: parses arguments, runs, prints the report and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let pool = match parallel::pool_from_env() {
        Ok(p) => p,
        Err(m) => {
            eprintln!("error: {m}");
            return EXIT_USAGE;
        }
    };
    let run = match &pool {
        Some(p) => p.install(|| execute(&cli.command)),
        None => execute(&cli.command),
    };
    let text = serde_json::to_string_pretty(&run.to_json()).expect("report serializes");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    if let Err(e) = &run.body {
        eprintln!("error: {}", e["message"].as_str().unwrap_or("run failed"));
    }
    if let Some(path) = &cli.command.common().report {
        if let Err(e) = std::fs::write(path, format!("{text}\n")) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_ERROR;
        }
    }
    run.exit
}
