use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use lasso_cis::bench::{self, BenchConfig, Suite};
use lasso_cis::invariance::{implicit_rcis, invariance_check, safe_box, BoxMode, ImplicitRcis, LassoSpec};
use lasso_cis::io::{rcis_from_json, rcis_to_json, ProblemFile, SpecBlock};
use lasso_cis::numlin::Vector;
use lasso_cis::oracle::{maximal_rcis_with, DEFAULT_MAX_ITERS};
use lasso_cis::polytope::{project_with, HPolytope};
use lasso_cis::runtime::{Encoding, FilterState, Plant};
use lasso_cis::{Error, Tolerances};

const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Parser)]
#[command(name = "lasso-cis", version, about = "Implicit robust controlled invariant sets for linear systems")]
struct Cli {
    /// Feasibility tolerance for LP points and projections.
    #[arg(long, global = true)]
    tol_feas: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sample count for Monte Carlo estimates and sampled checks.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Also write a JSON summary of the result here.
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the implicit RCIS of a problem file.
    Synth(SynthArgs),
    /// Project a stored implicit RCIS onto the state space.
    Project {
        rcis: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Supervise a stream of "t x… ũ…" lines.
    Filter(FilterArgs),
    /// Largest safe hyper-box.
    Box(BoxArgs),
    /// Run an experiment suite and print CSV.
    Bench(BenchArgs),
    /// Maximal RCIS by backward iteration.
    Maximal {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sampled invariance check of a state-space polytope.
    Check {
        file: PathBuf,
        /// Polytope JSON, or a stored implicit RCIS whose projection is checked.
        set: PathBuf,
    },
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long, requires = "lambda", conflicts_with = "q")]
    tau: Option<usize>,
    #[arg(long, requires = "tau", conflicts_with = "q")]
    lambda: Option<usize>,
    /// Hierarchy level: one component per (τ, q−τ).
    #[arg(long)]
    q: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    file: PathBuf,
    #[command(flatten)]
    spec: SpecArgs,
    /// Also project onto the state space.
    #[arg(long)]
    explicit: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FilterArgs {
    file: PathBuf,
    /// Stored implicit RCIS fixing the generator; otherwise the file's spec.
    rcis: Option<PathBuf>,
    /// Flush after every line.
    #[arg(long)]
    stream: bool,
    /// Read lines from here instead of stdin.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EncodingArg::U3)]
    encoding: EncodingArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    U1,
    U2,
    U3,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    GeometricMean,
    SumWidth,
}

#[derive(Args)]
struct BoxArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::GeometricMean)]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    tau: usize,
    #[arg(long, default_value_t = 1)]
    lambda: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_parser = parse_suite)]
    suite: Suite,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    q_max: Option<usize>,
    /// Leave the time column empty so equal seeds give identical bytes.
    #[arg(long)]
    omit_timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Settings after merging the file's options block with command-line flags.
struct Settings {
    tol: Tolerances,
    seed: u64,
    samples: usize,
}

impl Settings {
    fn new(cli: &Cli, problem: Option<&ProblemFile>) -> Self {
        let opts = problem.map(|p| p.options.clone()).unwrap_or_default();
        let mut tol = Tolerances::DEFAULT;
        if let Some(f) = cli.tol_feas.or(opts.tol_feas) {
            tol.feas = f;
        }
        Self { tol, seed: cli.seed.or(opts.seed).unwrap_or(0), samples: cli.samples.or(opts.samples).unwrap_or(DEFAULT_SAMPLES) }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::EmptyImplicit) => 2,
        Some(Error::ExplosionAbort { .. }) => 3,
        Some(Error::InitiallyInfeasible) => 4,
        Some(Error::SafeSetShrank(_)) => 5,
        _ => 1,
    }
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    let mut all_empty = false;
    let summary = match &cli.command {
        Command::Synth(a) => {
            let s = synth(cli, a)?;
            all_empty = s["empty"] == json!(true);
            s
        }
        Command::Project { rcis, out } => project(cli, rcis, out.as_deref())?,
        Command::Filter(a) => filter(a)?,
        Command::Box(a) => safe_box_cmd(a)?,
        Command::Bench(a) => bench_cmd(cli, a)?,
        Command::Maximal { file, max_iters, out } => maximal(cli, file, *max_iters, out.as_deref())?,
        Command::Check { file, set } => check(cli, file, set)?,
    };
    if let Some(path) = &cli.json_out {
        write_file(path, &serde_json::to_string_pretty(&summary)?)?;
    }
    // Artifacts are written first so an empty result can still be inspected.
    if all_empty {
        return Err(Error::EmptyImplicit.into());
    }
    Ok(ExitCode::SUCCESS)
}

fn read_problem(path: &Path) -> anyhow::Result<ProblemFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(ProblemFile::parse(&text)?)
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => write_file(p, text),
        None => print_out(&format!("{text}\n")),
    }
}

/// Stdout write that reports a closed pipe as an error instead of panicking.
fn print_out(text: &str) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    Ok(out.flush()?)
}

fn spec_from(args: &SpecArgs, problem: &ProblemFile, m: usize) -> anyhow::Result<Vec<LassoSpec>> {
    if let Some(q) = args.q {
        return level(q, m);
    }
    if let (Some(tau), Some(lambda)) = (args.tau, args.lambda) {
        return Ok(vec![LassoSpec::lasso(tau, lambda, m)?]);
    }
    match &problem.spec {
        Some(SpecBlock::Level { q }) => level(*q, m),
        Some(block) => Ok(vec![block.lasso(m)?.expect("non-level block")]),
        None => bail!("no generator given: pass --tau/--lambda or --q, or add a \"spec\" block"),
    }
}

fn level(q: usize, m: usize) -> anyhow::Result<Vec<LassoSpec>> {
    if q == 0 {
        return Err(Error::InvalidLasso("hierarchy level must be at least 1".into()).into());
    }
    Ok(lasso_cis::invariance::lasso_pairs(q).into_iter().map(|(t, l)| LassoSpec::lasso(t, l, m)).collect::<Result<_, _>>()?)
}

fn synth(cli: &Cli, a: &SynthArgs) -> anyhow::Result<serde_json::Value> {
    let problem = read_problem(&a.file)?;
    let settings = Settings::new(cli, Some(&problem));
    let (sys, sxu) = problem.system.build()?;
    let plant = Plant::new(&sys)?;
    let shifted = plant.shifted_safe_set(&sxu)?;
    let specs = spec_from(&a.spec, &problem, sys.m())?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;

    let mut components = Vec::new();
    for spec in &specs {
        let ir = implicit_rcis(&plant.nilpotent, &shifted, spec)?;
        let stem = format!("tau{}_lambda{}", spec.tau(), spec.lambda());
        let path = a.out_dir.join(format!("rcis_{stem}.json"));
        write_file(&path, &rcis_to_json(&ir)?)?;
        let mut entry = json!({
            "tau": spec.tau(),
            "lambda": spec.lambda(),
            "rows": ir.polytope.nrows(),
            "empty": ir.empty,
            "file": path.display().to_string(),
        });
        let mut line = format!("tau={} lambda={} rows={} empty={}", spec.tau(), spec.lambda(), ir.polytope.nrows(), ir.empty);
        if a.explicit {
            let ex = ir.explicit_with(&settings.tol)?;
            let ex_path = a.out_dir.join(format!("explicit_{stem}.json"));
            write_file(&ex_path, &serde_json::to_string_pretty(&ex)?)?;
            entry["explicit_rows"] = json!(ex.nrows());
            entry["explicit_file"] = json!(ex_path.display().to_string());
            line.push_str(&format!(" explicit_rows={}", ex.nrows()));
        }
        print_out(&format!("{line}\n"))?;
        components.push((ir.empty, entry));
    }
    let empty = components.iter().all(|(e, _)| *e);
    Ok(json!({
        "components": components.into_iter().map(|(_, e)| e).collect::<Vec<_>>(),
        "empty": empty,
    }))
}

fn load_rcis(path: &Path) -> anyhow::Result<ImplicitRcis> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(rcis_from_json(&text)?)
}

fn project(cli: &Cli, rcis: &Path, out: Option<&Path>) -> anyhow::Result<serde_json::Value> {
    let settings = Settings::new(cli, None);
    let ir = load_rcis(rcis)?;
    let ex = ir.explicit_with(&settings.tol)?;
    let text = serde_json::to_string_pretty(&ex)?;
    emit(out, &text)?;
    eprintln!("rows={} empty={}", ex.nrows(), ir.empty);
    Ok(json!({ "polytope": ex, "rows": ex.nrows() }))
}

/// Twelve significant digits, without exponent noise for ordinary magnitudes.
fn fmt12(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if rounded == 0.0 {
        "0".into()
    } else {
        format!("{rounded}")
    }
}

fn parse_line(line: &str, n: usize, m: usize) -> anyhow::Result<(u64, Vector, Vector)> {
    let mut it = line.split_whitespace();
    let t: u64 = it.next().ok_or_else(|| anyhow!("empty line"))?.parse().context("time stamp")?;
    let vals = it.map(|s| s.parse::<f64>()).collect::<Result<Vec<_>, _>>().context("number")?;
    if vals.len() != n + m {
        return Err(Error::Parse(format!("expected {} values after t, got {}", n + m, vals.len())).into());
    }
    Ok((t, Vector::from_column_slice(&vals[..n]), Vector::from_column_slice(&vals[n..])))
}

fn filter(a: &FilterArgs) -> anyhow::Result<serde_json::Value> {
    let problem = read_problem(&a.file)?;
    let (sys, sxu) = problem.system.build()?;
    let spec = match &a.rcis {
        Some(p) => {
            let ir = load_rcis(p)?;
            let plant = Plant::new(&sys)?;
            let expected = lasso_cis::invariance::fingerprint(&plant.nilpotent, &plant.shifted_safe_set(&sxu)?);
            if ir.fingerprint != expected {
                eprintln!("warning: stored RCIS was built for different data; only its generator is used");
            }
            ir.spec
        }
        None => {
            let specs = spec_from(&SpecArgs { tau: None, lambda: None, q: None }, &problem, sys.m())?;
            if specs.len() != 1 {
                bail!("filtering needs a single generator, not a hierarchy level");
            }
            specs.into_iter().next().expect("one spec")
        }
    };
    let encoding = match a.encoding {
        EncodingArg::U1 => Encoding::U1,
        EncodingArg::U2 => Encoding::U2,
        EncodingArg::U3 => Encoding::U3,
    };
    let mut state = FilterState::new(&sys, &spec)?.with_encoding(encoding);

    let reader: Box<dyn BufRead> = match &a.input {
        Some(p) => Box::new(io::BufReader::new(fs::File::open(p).with_context(|| format!("opening {}", p.display()))?)),
        None => Box::new(io::stdin().lock()),
    };
    let mut out = BufWriter::new(io::stdout().lock());
    let (mut steps, mut passed, mut fallbacks) = (0usize, 0usize, 0usize);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (t, x, nominal) = parse_line(&line, sys.n(), sys.m())?;
        let res = state.step(t, problem.safe_set_at(t), &x, &nominal)?;
        steps += 1;
        passed += res.passed as usize;
        fallbacks += (res.t_star != t) as usize;
        let us: Vec<String> = res.input.iter().map(|v| fmt12(*v)).collect();
        let status = if res.passed { "pass" } else { "corrected" };
        writeln!(out, "{} {status} {}", us.join(" "), res.t_star)?;
        if a.stream {
            out.flush()?;
        }
    }
    out.flush()?;
    eprintln!("steps={steps} pass={passed} corrected={} fallbacks={fallbacks}", steps - passed);
    Ok(json!({ "steps": steps, "pass": passed, "corrected": steps - passed, "fallbacks": fallbacks }))
}

/// Splits `S_xu` into `S_x × U`; rows mixing state and input are rejected.
fn split_product(sxu: &HPolytope, n: usize) -> anyhow::Result<(HPolytope, HPolytope)> {
    let (mut xr, mut ur) = (Vec::new(), Vec::new());
    for i in 0..sxu.nrows() {
        let row = sxu.g().row(i);
        let has_x = row.columns(0, n).iter().any(|v| *v != 0.0);
        let has_u = row.columns(n, sxu.dim() - n).iter().any(|v| *v != 0.0);
        match (has_x, has_u) {
            (true, true) => bail!("the box program needs a product safe set S_x × U; row {i} couples x and u"),
            (_, false) => xr.push(i),
            (false, true) => ur.push(i),
        }
    }
    let pick = |rows: &[usize], start: usize, len: usize| -> anyhow::Result<HPolytope> {
        let g = lasso_cis::numlin::Matrix::from_fn(rows.len(), len, |r, c| sxu.g()[(rows[r], start + c)]);
        let f = Vector::from_fn(rows.len(), |r, _| sxu.f()[rows[r]]);
        Ok(HPolytope::new(g, f)?)
    };
    Ok((pick(&xr, 0, n)?, pick(&ur, n, sxu.dim() - n)?))
}

fn safe_box_cmd(a: &BoxArgs) -> anyhow::Result<serde_json::Value> {
    let problem = read_problem(&a.file)?;
    let (sys, sxu) = problem.system.build()?;
    if sys.nu().is_none() {
        bail!("the box program needs nilpotent dynamics");
    }
    let (sx, u) = split_product(&sxu, sys.n())?;
    let spec = LassoSpec::lasso(a.tau, a.lambda, sys.m())?;
    let mode = match a.mode {
        ModeArg::GeometricMean => BoxMode::GeometricMean,
        ModeArg::SumWidth => BoxMode::SumWidth,
    };
    let b = safe_box(&sys, &sx, &u, &spec, mode)?;
    let value = json!({
        "lower": b.bbox.lower.as_slice(),
        "upper": b.bbox.upper.as_slice(),
        "v": b.v.as_slice(),
        "degenerate": b.degenerate,
    });
    print_out(&format!("{}\n", serde_json::to_string_pretty(&value)?))?;
    Ok(value)
}

fn bench_cmd(cli: &Cli, a: &BenchArgs) -> anyhow::Result<serde_json::Value> {
    let defaults = BenchConfig::default();
    let cfg = BenchConfig {
        seed: cli.seed.unwrap_or(defaults.seed),
        samples: cli.samples.unwrap_or(defaults.samples),
        instances: a.instances.unwrap_or(defaults.instances),
        n_max: a.n_max.unwrap_or(defaults.n_max),
        q_max: a.q_max.unwrap_or(defaults.q_max),
        timing: !a.omit_timing,
        ..defaults
    };
    let rows = bench::run(a.suite, &cfg);
    let mut buf = Vec::new();
    bench::write_csv(&rows, cfg.seed, &mut buf)?;
    let text = String::from_utf8(buf)?;
    match &a.out {
        Some(p) => write_file(p, &text)?,
        None => print_out(&text)?,
    }
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    if failures > 0 {
        eprintln!("{failures} of {} rows failed", rows.len());
    }
    Ok(json!({ "suite": a.suite.to_string(), "rows": rows.len(), "failures": failures }))
}

fn maximal(cli: &Cli, file: &Path, max_iters: usize, out: Option<&Path>) -> anyhow::Result<serde_json::Value> {
    let problem = read_problem(file)?;
    let settings = Settings::new(cli, Some(&problem));
    let (sys, sxu) = problem.system.build()?;
    let res = maximal_rcis_with(&sys, &sxu, max_iters, settings.tol.contain, &settings.tol)?;
    emit(out, &serde_json::to_string_pretty(&res.set)?)?;
    let empty = res.set.is_empty()?;
    eprintln!("converged={} iterations={} rows={} empty={empty}", res.converged, res.iterations, res.set.nrows());
    Ok(json!({
        "polytope": res.set,
        "converged": res.converged,
        "iterations": res.iterations,
        "empty": empty,
    }))
}

fn check(cli: &Cli, file: &Path, set: &Path) -> anyhow::Result<serde_json::Value> {
    let problem = read_problem(file)?;
    let settings = Settings::new(cli, Some(&problem));
    let (sys, sxu) = problem.system.build()?;
    let text = fs::read_to_string(set).with_context(|| format!("reading {}", set.display()))?;
    let c: HPolytope = match serde_json::from_str::<HPolytope>(&text) {
        Ok(p) => p,
        Err(_) => {
            let ir = rcis_from_json(&text)?;
            project_with(&ir.polytope, ir.n, &settings.tol)?
        }
    };
    if c.dim() != sys.n() {
        return Err(Error::DimensionMismatch(format!("set in R^{} for n = {}", c.dim(), sys.n())).into());
    }
    let report = invariance_check(&sys, &sxu, &c, settings.samples, settings.seed)?;
    print_out(&format!("checked={} violations={} invariant={}\n", report.checked, report.violations, report.passed()))?;
    Ok(json!({
        "checked": report.checked,
        "violations": report.violations,
        "invariant": report.passed(),
        "witness": report.witness.map(|w| w.as_slice().to_vec()),
    }))
}
