use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use lorentz_null::antilip::{self, Condition, Region, VectorFieldSpec};
use lorentz_null::cosmo;
use lorentz_null::models::{SpacetimeModel, SpacetimePoint};
use lorentz_null::nulldist::{self, SolverConfig};
use lorentz_null::timefuncs::TimeFunction;
use lorentz_null::Error;

#[derive(Parser)]
#[command(name = "nulldist", version, about = "Null distance on model spacetimes")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Bracket for the null distance between two points.
    Distance(PairArgs),
    /// Causal relation between two points.
    Causal(CausalArgs),
    /// Points on a null distance sphere.
    Sphere(SphereArgs),
    /// Cosmological time, generators and gradient on a cone restriction.
    Cosmo(CosmoArgs),
    /// Sampled anti-Lipschitz constant of a time function.
    CheckAntilip(AntilipArgs),
    /// Steepness conditions (A), (B), (C) for a vector field.
    CheckConditions(ConditionArgs),
    /// Minimality audit of the distance witness.
    Audit(PairArgs),
}

#[derive(Args)]
struct Common {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    tau: PathBuf,
    #[arg(short, allow_hyphen_values = true)]
    p: String,
    #[arg(short, allow_hyphen_values = true)]
    q: String,
    #[arg(long)]
    max_bounces: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CausalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(short, allow_hyphen_values = true)]
    p: String,
    #[arg(short, allow_hyphen_values = true)]
    q: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SphereArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    tau: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    center: String,
    #[arg(long)]
    r: f64,
    #[arg(short, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_bounces: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CosmoArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(short, allow_hyphen_values = true)]
    q: String,
    /// Second point: adds the null distance bracket and the reverse-Lipschitz check.
    #[arg(short, allow_hyphen_values = true)]
    p: Option<String>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct AntilipArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    tau: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    region: String,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ConditionArgs {
    /// `steep-spills`, `tips-no-spill` or `gradient`.
    #[arg(long)]
    field: String,
    #[arg(long, allow_hyphen_values = true)]
    region: String,
    #[arg(long, value_enum)]
    which: Which,
    /// Defaults to Minkowski space of the region's dimension.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Time function for `--field gradient`; defaults to `t`.
    #[arg(long)]
    tau: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    A,
    B,
    C,
}

fn read(path: &PathBuf) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

fn load_model(path: &PathBuf) -> Result<SpacetimeModel, Error> {
    SpacetimeModel::from_json(&read(path)?)
}

fn load_tau(path: &PathBuf) -> Result<TimeFunction, Error> {
    TimeFunction::from_json(&read(path)?)
}

fn point(model: &SpacetimeModel, s: &str) -> Result<SpacetimePoint, Error> {
    let p = SpacetimePoint::parse(s)?;
    let p = model.point(p.t, p.x)?;
    model.check_point(&p)?;
    Ok(p)
}

fn config(max_bounces: Option<usize>) -> SolverConfig {
    let mut cfg = SolverConfig::default();
    if let Some(k) = max_bounces {
        cfg.max_bounces = k;
    }
    cfg
}

/// What a verb produced: a JSON document or CSV text, plus whether the
/// computation converged.
struct Output {
    body: String,
    converged: bool,
}

fn json_out<T: Serialize>(value: &T, converged: bool) -> Result<Output, Error> {
    let body = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(Output { body: body + "\n", converged })
}

fn no_csv(common: &Common) -> Result<(), Error> {
    if common.format == Format::Csv {
        return Err(Error::InvalidConfig("csv output is only available for sphere".into()));
    }
    Ok(())
}

fn with_seed(mut v: Value, seed: u64) -> Value {
    if let Value::Object(m) = &mut v {
        m.insert("seed".into(), json!(seed));
    }
    v
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Error> {
    serde_json::to_value(v).map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn run(verb: &Verb) -> Result<Output, Error> {
    match verb {
        Verb::Distance(a) => {
            no_csv(&a.common)?;
            let (model, tf) = (load_model(&a.model)?, load_tau(&a.tau)?);
            let (p, q) = (point(&model, &a.p)?, point(&model, &a.q)?);
            let cfg = config(a.max_bounces);
            let b = nulldist::null_distance(&model, &tf, &p, &q, &cfg)?;
            let j = b.to_json(&model, cfg.acceptance)?;
            let converged = j.converged;
            json_out(&j, converged)
        }
        Verb::Causal(a) => {
            no_csv(&a.common)?;
            let model = load_model(&a.model)?;
            let (p, q) = (point(&model, &a.p)?, point(&model, &a.q)?);
            let rel = model.causal_relation(&p, &q)?;
            let (gap, du) = model.cone_gap(&p, &q)?;
            json_out(
                &json!({
                    "relation": rel,
                    "causal_future": rel.is_causal_future(),
                    "causal_past": rel.is_causal_past(),
                    "boundary": rel.is_boundary(),
                    "cone_gap": gap,
                    "conformal_time_difference": du,
                }),
                true,
            )
        }
        Verb::Sphere(a) => {
            let (model, tf) = (load_model(&a.model)?, load_tau(&a.tau)?);
            let center = point(&model, &a.center)?;
            let pts = nulldist::sphere_sample(&model, &tf, &center, a.r, a.n, a.seed, &config(a.max_bounces))?;
            eprintln!("seed: {}", a.seed);
            match a.common.format {
                Format::Json => json_out(&json!({ "seed": a.seed, "r": a.r, "center": center, "points": pts }), true),
                Format::Csv => {
                    let n = center.x.len();
                    let mut body = String::from("t");
                    for i in 1..=n {
                        body.push_str(&format!(",x{i}"));
                    }
                    body.push_str(",r\n");
                    for s in &pts {
                        let row: Vec<String> = s.point.coords().iter().chain([&s.r]).map(|v| format!("{v:.16e}")).collect();
                        body.push_str(&row.join(","));
                        body.push('\n');
                    }
                    Ok(Output { body, converged: true })
                }
            }
        }
        Verb::Cosmo(a) => {
            no_csv(&a.common)?;
            let model = load_model(&a.model)?;
            cosmo::check_supported(&model)?;
            let q = point(&model, &a.q)?;
            let tau = cosmo::cosmological_time(&model, &q)?;
            let gens = cosmo::generators(&model, &q)?;
            let gradient = match cosmo::cosmological_partials(&model, &q) {
                Ok(_) => to_value(&TimeFunction::cosmological().gradient(&model, &q)?)?,
                Err(Error::GradientUndefined(msg)) => json!({ "undefined": msg }),
                Err(e) => return Err(e),
            };
            let mut out = json!({ "tau": tau, "generators": gens, "gradient": gradient });
            let mut converged = true;
            if let Some(p) = &a.p {
                let p = point(&model, p)?;
                let cfg = SolverConfig::default();
                let (b, agh) = cosmo::cosmo_null_distance(&model, &p, &q, &cfg, a.samples, a.seed)?;
                let bj = b.to_json(&model, cfg.acceptance)?;
                converged = bj.converged;
                out["distance"] = to_value(&bj)?;
                out["agh"] = to_value(&agh)?;
                out = with_seed(out, a.seed);
                eprintln!("seed: {}", a.seed);
            }
            json_out(&out, converged)
        }
        Verb::CheckAntilip(a) => {
            no_csv(&a.common)?;
            let (model, tf) = (load_model(&a.model)?, load_tau(&a.tau)?);
            let region = Region::parse(&a.region)?;
            let r = antilip::check_anti_lipschitz(&tf, &model, &region, a.samples, a.seed)?;
            eprintln!("seed: {}", a.seed);
            json_out(&with_seed(to_value(&r)?, a.seed), true)
        }
        Verb::CheckConditions(a) => {
            no_csv(&a.common)?;
            let region = Region::parse(&a.region)?;
            let model = match &a.model {
                Some(path) => load_model(path)?,
                None => SpacetimeModel::minkowski(region.dim() - 1),
            };
            let tf = a.tau.as_ref().map(load_tau).transpose()?;
            let field = VectorFieldSpec::parse(&a.field, tf)?;
            let which = match a.which {
                Which::A => Condition::A,
                Which::B => Condition::B,
                Which::C => Condition::C,
            };
            let r = antilip::check_condition(&field, &model, &region, which, a.samples, a.seed)?;
            eprintln!("seed: {}", a.seed);
            json_out(&with_seed(to_value(&r)?, a.seed), !r.inconclusive)
        }
        Verb::Audit(a) => {
            no_csv(&a.common)?;
            let (model, tf) = (load_model(&a.model)?, load_tau(&a.tau)?);
            let (p, q) = (point(&model, &a.p)?, point(&model, &a.q)?);
            let cfg = config(a.max_bounces);
            let b = nulldist::null_distance(&model, &tf, &p, &q, &cfg)?;
            let report = nulldist::minimality_audit(&model, &b)?;
            json_out(&json!({ "bracket": b.to_json(&model, cfg.acceptance)?, "audit": report }), true)
        }
    }
}

fn out_path(verb: &Verb) -> Option<&PathBuf> {
    let c = match verb {
        Verb::Distance(a) | Verb::Audit(a) => &a.common,
        Verb::Causal(a) => &a.common,
        Verb::Sphere(a) => &a.common,
        Verb::Cosmo(a) => &a.common,
        Verb::CheckAntilip(a) => &a.common,
        Verb::CheckConditions(a) => &a.common,
    };
    c.out.as_ref()
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::BaseMismatch => "base_mismatch",
        Error::Dimension { .. } => "dimension",
        Error::Unsupported(_) => "unsupported",
        Error::Quadrature(_) => "quadrature",
        Error::RootFinding(_) => "root_finding",
        Error::InvalidConfig(_) => "invalid_config",
        Error::InvalidTimeFunction(_) => "invalid_time_function",
        Error::InvalidCurve(_) => "invalid_curve",
        Error::Precondition(_) => "precondition",
        Error::GradientUndefined(_) => "gradient_undefined",
        Error::InsufficientSamples(_) => "insufficient_samples",
        Error::NonConvergence(_) => "non_convergence",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return fail("usage", e.to_string().trim(), 2);
        }
    };
    let output = match run(&cli.verb) {
        Ok(o) => o,
        Err(e) => return fail(error_kind(&e), &e.to_string(), if e.is_computational() { 1 } else { 2 }),
    };
    let written = match out_path(&cli.verb) {
        Some(path) => fs::write(path, &output.body).map_err(|e| e.to_string()),
        None => std::io::stdout().write_all(output.body.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        return fail("io", &msg, 2);
    }
    if output.converged {
        ExitCode::SUCCESS
    } else {
        fail("non_convergence", "bracket did not reach the acceptance gap", 1)
    }
}
