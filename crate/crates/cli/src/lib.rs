//! Command-line front end for `kmsgraph`.
//!
//! [`run`] parses arguments, runs one subcommand and writes its report; the
//! binary is a thin wrapper around it so the whole interface is testable
//! in-process.

pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kmsgraph::classify::{self, Subgroup};
use kmsgraph::exits::{self, Summability};
use kmsgraph::harmonic::{self, HarmonicOutcome};
use kmsgraph::interval::parse_decimal_rational;
use kmsgraph::series::{self, SeriesConfig, Verdict};
use kmsgraph::{geodesics, Coefficient, Error, GraphSpec, Interval, Potential, Vertex};
use serde::Serialize;

use report::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNDECIDED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "kmsgraph",
    version,
    about = "KMS states and factor types for graph algebras"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Working precision in bits.
    #[arg(long, global = true, env = "KMSGRAPH_PRECISION", default_value_t = 128)]
    precision: u32,
    /// Series truncation length.
    #[arg(long, global = true, default_value_t = 400)]
    nmax: usize,
    /// Relative tolerance for series tails.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
struct SpecArgs {
    /// Built-in example name or path to a graph JSON file.
    spec: String,
    /// `spec`, `gauge`, or `stepped:A1,A2` (built-ins only); prefix a value
    /// with `~` to make it an independent symbol.
    #[arg(long, default_value = "spec")]
    potential: String,
    /// Base vertex for loop series (defaults to the example's root).
    #[arg(long)]
    vertex: Option<String>,
    /// Maximum cycle length for subgroup and zero-cycle scans.
    #[arg(long, default_value_t = 12)]
    max_len: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Conservative,
    Exit,
    Boundary,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the structural hypotheses of a graph.
    Validate(SpecArgs),
    /// Full analysis at one inverse temperature.
    Analyze {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        /// Also locate the critical inverse temperature.
        #[arg(long)]
        beta_critical: bool,
        /// Levels of the geodesic diagram.
        #[arg(long, default_value_t = 8)]
        levels: usize,
    },
    /// Locate the critical inverse temperature by bisection.
    BetaCritical {
        #[command(flatten)]
        spec: SpecArgs,
        /// Bracket `LO,HI`.
        #[arg(long, value_parser = parse_bracket)]
        bracket: Option<(f64, f64)>,
        #[arg(long, default_value_t = 1e-9)]
        beta_tol: f64,
    },
    /// Factor type of one weight.
    FactorType {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        #[arg(long, value_enum, default_value_t = Kind::Conservative)]
        kind: Kind,
        /// Exit name, for `--kind exit`.
        #[arg(long)]
        exit: Option<String>,
    },
    /// Ground states from the geodesic diagram.
    GroundStates {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 8)]
        levels: usize,
    },
    /// List or export the built-in examples.
    Examples {
        #[command(subcommand)]
        action: Option<ExamplesAction>,
    },
}

#[derive(Debug, Subcommand)]
enum ExamplesAction {
    List,
    /// Print the canonical JSON of one example.
    Export {
        name: String,
        #[arg(long, default_value = "spec")]
        potential: String,
    },
}

fn parse_bracket(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected LO,HI, got {s:?}"))?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(format!("bracket must satisfy LO < HI, got {s:?}"));
    }
    Ok((lo, hi))
}

/// A failed command: message plus exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn input(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn undecided(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_UNDECIDED,
        message: message.into(),
    }
}

/// Exit code for a library error: 3 when more precision could help, 2 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::PrecisionExhausted(_) | Error::UndecidedAtPrecision(_) => EXIT_UNDECIDED,
        _ => EXIT_INPUT,
    }
}

/// Runs the CLI on `args` (including the program name); returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match execute(&cli) {
        Ok((text, code)) => {
            let _ = out.write_all(text.as_bytes());
            code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

struct Ctx {
    cfg: SeriesConfig,
    format: Format,
}

impl Ctx {
    fn render<T: Serialize>(&self, report: &T) -> String {
        match self.format {
            Format::Json => to_canonical_json(report),
            Format::Text => to_text(report),
        }
    }

    fn header(&self, spec: &GraphSpec) -> Header {
        Header::new(spec, self.cfg.precision, self.cfg.n_max, self.cfg.tol)
    }

    fn beta(&self, s: &str) -> Result<Interval, Failure> {
        Interval::from_decimal(self.cfg.precision, s).map_err(|e| input(format!("--beta: {e}")))
    }
}

fn execute(cli: &Cli) -> Result<(String, i32), Failure> {
    if cli.precision < 32 {
        return Err(input("--precision must be at least 32 bits"));
    }
    if cli.nmax < 8 {
        return Err(input("--nmax must be at least 8"));
    }
    let ctx = Ctx {
        cfg: SeriesConfig {
            n_max: cli.nmax,
            precision: cli.precision,
            tol: cli.tol,
        },
        format: cli.format,
    };
    match &cli.command {
        Command::Validate(a) => {
            let spec = load(a)?;
            let report = ValidateReport {
                header: ctx.header(&spec),
                validation: kmsgraph::validate(&spec, a.max_len)?,
            };
            Ok((ctx.render(&report), EXIT_OK))
        }
        Command::Analyze {
            spec,
            beta,
            beta_critical,
            levels,
        } => analyze(&ctx, spec, beta, *beta_critical, *levels),
        Command::BetaCritical {
            spec,
            bracket,
            beta_tol,
        } => beta_critical(&ctx, spec, *bracket, *beta_tol),
        Command::FactorType {
            spec,
            beta,
            kind,
            exit,
        } => factor_type(&ctx, spec, beta, *kind, exit.as_deref()),
        Command::GroundStates { spec, levels } => {
            let g = load(spec)?;
            let v = root_vertex(&g, spec)?;
            let d = geodesics::bratteli(&g, v, *levels)?;
            let report =
                GroundStatesReport::new(ctx.header(&g), &g, g.vertex_name(v), &d).map_err(input)?;
            Ok((ctx.render(&report), EXIT_OK))
        }
        Command::Examples { action } => match action {
            None | Some(ExamplesAction::List) => {
                let report = ExamplesReport {
                    examples: kmsgraph::builtin_names()
                        .iter()
                        .map(|s| s.to_string())
                        .collect(),
                };
                Ok((ctx.render(&report), EXIT_OK))
            }
            Some(ExamplesAction::Export { name, potential }) => {
                let p = parse_potential(potential)?;
                let spec = kmsgraph::builtin_with(name, p.as_ref().unwrap_or(&Potential::Default))?;
                let mut text = spec.to_canonical_json();
                if !text.ends_with('\n') {
                    text.push('\n');
                }
                Ok((text, EXIT_OK))
            }
        },
    }
}

/// `None` keeps the graph's own potential.
fn parse_potential(s: &str) -> Result<Option<Potential>, Failure> {
    match s {
        "spec" | "default" => Ok(None),
        "gauge" => Ok(Some(Potential::Gauge)),
        _ => {
            let rest = s
                .strip_prefix("stepped:")
                .ok_or_else(|| input(format!("unknown potential {s:?}")))?;
            let (a, b) = rest
                .split_once(',')
                .ok_or_else(|| input(format!("stepped potential needs A1,A2, got {rest:?}")))?;
            Ok(Some(Potential::Stepped(coefficient(a)?, coefficient(b)?)))
        }
    }
}

fn coefficient(s: &str) -> Result<Coefficient, Failure> {
    let s = s.trim();
    let (independent, lit) = match s.strip_prefix('~') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let value = parse_decimal_rational(lit).map_err(|e| input(e.to_string()))?;
    if value < 0 {
        return Err(input(format!("potential value {s:?} is negative")));
    }
    Ok(Coefficient { value, independent })
}

fn load(a: &SpecArgs) -> Result<GraphSpec, Failure> {
    let potential = parse_potential(&a.potential)?;
    let is_builtin = kmsgraph::builtin_names()
        .iter()
        .any(|n| n.eq_ignore_ascii_case(&a.spec));
    if is_builtin {
        return Ok(kmsgraph::builtin_with(
            &a.spec,
            potential.as_ref().unwrap_or(&Potential::Default),
        )?);
    }
    let text = std::fs::read_to_string(&a.spec)
        .map_err(|e| input(format!("cannot read {:?}: {e}", a.spec)))?;
    let spec = GraphSpec::from_json(&text)?;
    match potential {
        None => Ok(spec),
        Some(Potential::Gauge) => Ok(spec.gauge()),
        Some(_) => Err(input(
            "stepped potentials apply to built-in examples only; edit the file instead",
        )),
    }
}

/// Everything except validation and ground states assumes strong connectivity.
fn require_strongly_connected(spec: &GraphSpec) -> Result<(), Failure> {
    if kmsgraph::validate(spec, 0)?.strongly_connected {
        Ok(())
    } else {
        Err(Error::NotStronglyConnected.into())
    }
}

fn root_vertex(spec: &GraphSpec, a: &SpecArgs) -> Result<Vertex, Failure> {
    if let Some(name) = &a.vertex {
        return Ok(spec.vertex_by_name(name)?);
    }
    for name in ["t1", "1"] {
        if let Ok(v) = spec.vertex_by_name(name) {
            return Ok(v);
        }
    }
    if let Some(v) = spec.base_vertices().next() {
        return Ok(v);
    }
    match spec.template() {
        Some(_) => Ok(Vertex::Stage { stage: 1, local: 0 }),
        None => Err(input("graph has no vertices")),
    }
}

fn outcome<T, U>(r: kmsgraph::Result<T>, f: impl FnOnce(T) -> U) -> Outcome<U> {
    match r {
        Ok(x) => Outcome::Ok(f(x)),
        Err(e) => Outcome::Error(e.to_string()),
    }
}

/// Largest gap between the two `λ` routes still reported as agreement; the
/// user's `β` is a decimal approximation of the critical point.
pub const ENTROPY_AGREEMENT: f64 = 1e-6;

/// Stages of the ray shown in harmonic-vector samples.
const SAMPLE_STAGES: u64 = 4;

fn harmonic_json(spec: &GraphSpec, h: &HarmonicOutcome) -> HarmonicJson {
    match h {
        HarmonicOutcome::Exists(vec) => {
            let values: BTreeMap<String, IntervalJson> = vec
                .values()
                .filter(|(v, _)| v.stage() <= SAMPLE_STAGES)
                .map(|(v, x)| (spec.vertex_name(*v), interval(x)))
                .collect();
            HarmonicJson {
                status: "exists".into(),
                critical: vec.is_critical(),
                reason: None,
                spectral_radius: vec.spectral_radius().map(interval),
                values,
            }
        }
        HarmonicOutcome::NoSolution {
            reason,
            spectral_radius,
        } => HarmonicJson {
            status: "no_solution".into(),
            critical: false,
            reason: Some(reason.clone()),
            spectral_radius: spectral_radius.as_ref().map(interval),
            values: BTreeMap::new(),
        },
    }
}

fn summability_json(s: Summability) -> SummabilityJson {
    match s {
        Summability::Summable { value, window } => SummabilityJson::Summable {
            value: interval(&value),
            window,
        },
        Summability::NotSummable { reason } => SummabilityJson::NotSummable { reason },
        Summability::Undecided { reason } => SummabilityJson::Undecided { reason },
    }
}

fn analyze(
    ctx: &Ctx,
    a: &SpecArgs,
    beta: &str,
    want_critical: bool,
    levels: usize,
) -> Result<(String, i32), Failure> {
    let spec = load(a)?;
    let v = root_vertex(&spec, a)?;
    let beta = ctx.beta(beta)?;
    let cfg = &ctx.cfg;
    let basis = spec.basis();
    let validation = kmsgraph::validate(&spec, a.max_len)?;
    if !validation.strongly_connected {
        return Err(Error::NotStronglyConnected.into());
    }
    let recurrence = series::classify_recurrence(&spec, v, &beta, cfg);
    let undecided_verdict = matches!(&recurrence, Ok(r) if r.verdict == Verdict::Undecided);
    let beta_critical = want_critical.then(|| {
        outcome(series::beta_critical(&spec, v, None, 1e-9, cfg), |b| {
            interval(&b.interval)
        })
    });
    let exits = match exits::canonical_exits(&spec) {
        Ok(list) => list
            .iter()
            .map(|x| ExitJson {
                name: x.name().to_string(),
                cycle_len: x.cycle_len(),
                step_counts: x.tail_counts(&spec),
                slim: exits::is_slim(&spec, x),
                summability: outcome(exits::summability(&spec, x, &beta, cfg), summability_json),
                factor: outcome(classify::classify_exit(&spec, x, &beta), |f| {
                    FactorJson::new(basis, &f)
                }),
            })
            .collect(),
        Err(_) => Vec::new(),
    };
    let report = AnalyzeReport {
        header: ctx.header(&spec),
        vertex: spec.vertex_name(v),
        beta: interval(&beta),
        period: outcome(series::period(&spec, v, 64), |p| p),
        recurrence: outcome(recurrence, |r| RecurrenceJson::from(&r)),
        beta_critical,
        harmonic: outcome(harmonic::solve(&spec, &beta, v, cfg), |h| {
            harmonic_json(&spec, &h)
        }),
        gamma: outcome(
            classify::cycle_value_group(&spec, v, &beta, a.max_len),
            |g| SubgroupJson::new(basis, &g),
        ),
        conservative_factor: outcome(
            classify::classify_conservative(&spec, v, &beta, a.max_len, cfg),
            |f| FactorJson::new(basis, &f),
        ),
        boundary_factor: (spec.v_inf().next().is_some())
            .then(|| FactorJson::new(basis, &classify::classify_boundary())),
        exits,
        ground_states: outcome(geodesics::bratteli(&spec, v, levels), |d| {
            geodesics::ground_state_summary(&d)
        }),
        validation,
    };
    let code = if undecided_verdict {
        EXIT_UNDECIDED
    } else {
        EXIT_OK
    };
    Ok((ctx.render(&report), code))
}

fn beta_critical(
    ctx: &Ctx,
    a: &SpecArgs,
    bracket: Option<(f64, f64)>,
    beta_tol: f64,
) -> Result<(String, i32), Failure> {
    let spec = load(a)?;
    require_strongly_connected(&spec)?;
    let v = root_vertex(&spec, a)?;
    let cfg = &ctx.cfg;
    let bc = series::beta_critical(&spec, v, bracket, beta_tol, cfg)?;
    let (lo, hi) = (bc.interval.lo_f64(), bc.interval.hi_f64());
    let margin = (hi - lo).max(1e-3) + 0.05 * hi.abs().max(lo.abs());
    let threshold = if spec.is_finite() {
        Err(Error::InvalidHypothesis(
            "on a finite graph a harmonic vector exists only at the critical point".into(),
        ))
    } else {
        harmonic::existence_threshold(&spec, v, (lo - margin, hi + margin), beta_tol, cfg)
    };
    let routes_agree = threshold.as_ref().ok().map(|t| {
        let slack = 2.0 * beta_tol + (hi - lo);
        t.hi >= lo - slack && t.lo <= hi + slack
    });
    let report = BetaCriticalReport {
        header: ctx.header(&spec),
        vertex: spec.vertex_name(v),
        beta_critical: interval(&bc.interval),
        iterations: bc.iterations,
        harmonic_threshold: outcome(threshold, |t| [t.lo, t.hi]),
        routes_agree,
    };
    Ok((ctx.render(&report), EXIT_OK))
}

fn factor_type(
    ctx: &Ctx,
    a: &SpecArgs,
    beta: &str,
    kind: Kind,
    exit: Option<&str>,
) -> Result<(String, i32), Failure> {
    let spec = load(a)?;
    require_strongly_connected(&spec)?;
    let v = root_vertex(&spec, a)?;
    let beta = ctx.beta(beta)?;
    let cfg = &ctx.cfg;
    let basis = spec.basis();
    let mut entropy_lambda = None;
    let (kind_name, exit_name, verdict) = match kind {
        Kind::Boundary => {
            if spec.v_inf().next().is_none() {
                return Err(input(
                    "graph declares no infinite emitters to carry a boundary weight",
                ));
            }
            ("boundary", None, classify::classify_boundary())
        }
        Kind::Conservative => {
            let verdict = classify::classify_conservative(&spec, v, &beta, a.max_len, cfg)?;
            if spec.is_gauge() {
                if let Some(l) = verdict.factor.lambda() {
                    let e = classify::lambda_from_entropy(&spec, v, cfg)?;
                    let gap = (&e - l).mag().to_f64();
                    entropy_lambda = Some(EntropyCheck {
                        lambda: interval(&e),
                        abs_difference: gap,
                        agrees: gap <= ENTROPY_AGREEMENT,
                    });
                }
            }
            ("conservative", None, verdict)
        }
        Kind::Exit => {
            let name = exit.ok_or_else(|| input("--kind exit requires --exit NAME"))?;
            let path = exits::find_exit(&spec, name)?;
            match exits::summability(&spec, &path, &beta, cfg)? {
                Summability::Summable { .. } => {}
                Summability::NotSummable { reason } => {
                    return Err(input(format!(
                        "exit {name} is not summable at this β: {reason}"
                    )))
                }
                Summability::Undecided { reason } => return Err(undecided(reason)),
            }
            let verdict = classify::classify_exit(&spec, &path, &beta)?;
            ("exit", Some(name.to_string()), verdict)
        }
    };
    if let Some(g) = &verdict.subgroup {
        if matches!(g.group, Subgroup::Zero) && kind == Kind::Conservative {
            return Err(input("trivial cycle-value group"));
        }
    }
    let report = FactorTypeReport {
        header: ctx.header(&spec),
        kind: kind_name.into(),
        beta: interval(&beta),
        vertex: spec.vertex_name(v),
        exit: exit_name,
        factor: FactorJson::new(basis, &verdict),
        entropy_lambda,
    };
    Ok((ctx.render(&report), EXIT_OK))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brackets_parse_and_validate() {
        assert_eq!(parse_bracket("0.1, 2").unwrap(), (0.1, 2.0));
        assert!(parse_bracket("2,1").is_err());
        assert!(parse_bracket("1").is_err());
        assert!(parse_bracket("a,b").is_err());
    }

    #[test]
    fn potentials_parse() {
        assert_eq!(parse_potential("spec").unwrap(), None);
        assert_eq!(parse_potential("gauge").unwrap(), Some(Potential::Gauge));
        let Some(Potential::Stepped(a, b)) = parse_potential("stepped:~1.5,1/3").unwrap() else {
            panic!("expected stepped")
        };
        assert!(a.independent && !b.independent);
        assert_eq!(a.value, rug::Rational::from((3, 2)));
        assert_eq!(b.value, rug::Rational::from((1, 3)));
        assert!(parse_potential("stepped:-1,1").is_err());
        assert!(parse_potential("linear").is_err());
    }

    #[test]
    fn error_codes_separate_input_from_precision() {
        assert_eq!(exit_code(&Error::UnknownExample("x".into())), EXIT_INPUT);
        assert_eq!(exit_code(&Error::Divergent("x".into())), EXIT_INPUT);
        assert_eq!(
            exit_code(&Error::UndecidedAtPrecision("x".into())),
            EXIT_UNDECIDED
        );
        assert_eq!(
            exit_code(&Error::PrecisionExhausted("x".into())),
            EXIT_UNDECIDED
        );
    }
}
