use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lozenge_cooling::cooling::{run, RunOptions};
use lozenge_cooling::domain::{Domain, Shape};
use lozenge_cooling::exact::{enumerate, exact_times, DEFAULT_CAP};
use lozenge_cooling::hull::triconvex_hull;
use lozenge_cooling::reporting::csv::{
    exact_csv, observables_csv, summary_csv, trajectory_csv, trials_csv,
};
use lozenge_cooling::reporting::{
    fit_power_law, linear_fit, observables_experiment, render_strip, render_svg,
    scaling_experiment, ExperimentConfig, RenderMode, RenderOptions, ScaleMode,
};
use lozenge_cooling::sampling::{initial_state, InitMode, SamplerConfig};
use lozenge_cooling::tiling::Tiling;
use lozenge_cooling::verify::{needs_seed, run_suite, Suite, VerifyOptions};
use lozenge_cooling::Rational;

#[derive(Parser, Serialize)]
#[command(
    name = "lozenge-cooling",
    version,
    about = "Zero-threshold flip cooling of lozenge tilings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// One cooling run.
    Run(RunArgs),
    /// Cooling times over a grid of sides.
    Scale(ScaleArgs),
    /// Exact absorption times by enumeration.
    Exact(ExactArgs),
    /// Triconvex hull of a tiling file.
    Hull(HullArgs),
    /// Property suites; exit code 2 if any instance fails.
    Verify(VerifyArgs),
    /// SVG rendering of a tiling file.
    Render(RenderArgs),
    /// Volume, energy and level count of uniform samples.
    Observables(ObservablesArgs),
}

#[derive(Args, Serialize)]
struct ShapeArg {
    /// Domain family: hexagon (honeycomb of unit hexagons) or rhombus.
    #[arg(long, default_value = "hexagon", value_parser = parse_shape)]
    #[serde(serialize_with = "shape_name")]
    shape: Shape,
}

#[derive(Args, Serialize)]
struct RunArgs {
    #[arg(long, conflicts_with = "domain", required_unless_present = "domain")]
    side: Option<u32>,
    /// Domain file.
    #[arg(long)]
    domain: Option<PathBuf>,
    #[command(flatten)]
    shape: ShapeArg,
    /// max | uniform | errorfree | file:PATH
    #[arg(long, default_value = "max", value_parser = parse_init)]
    #[serde(serialize_with = "init_name")]
    init: InitMode,
    #[arg(long)]
    seed: u64,
    /// 0 means 100·n².
    #[arg(long, default_value_t = 0)]
    step_limit: u64,
    #[arg(long)]
    snapshot_every: Option<u64>,
    #[arg(long)]
    trajectory: Option<PathBuf>,
    #[arg(long)]
    svg_dir: Option<PathBuf>,
    /// Check the incremental allowed set at every step.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Serialize)]
struct ScaleArgs {
    #[arg(long, value_parser = parse_scale_mode)]
    #[serde(serialize_with = "mode_name")]
    mode: ScaleMode,
    #[arg(long, value_delimiter = ',', required = true)]
    sides: Vec<u32>,
    #[arg(long, default_value_t = 30)]
    trials: u32,
    #[arg(long)]
    seed: u64,
    /// Trial CSV; the per-side summary goes next to it.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    shape: ShapeArg,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Fill the wall_ms column (output is then not reproducible).
    #[arg(long)]
    wall_clock: bool,
    /// Approximate uniform states by this many forward heat-bath steps.
    #[arg(long)]
    burn_in: Option<u64>,
    #[arg(long, default_value_t = 0)]
    step_limit: u64,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Serialize)]
struct ExactArgs {
    #[arg(long)]
    side: u32,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    shape: ShapeArg,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Serialize)]
struct HullArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[arg(long, value_parser = parse_suite)]
    #[serde(serialize_with = "suite_name")]
    suite: Suite,
    #[arg(long)]
    side: u32,
    #[command(flatten)]
    shape: ShapeArg,
    /// Required when the corpus is randomized or the suite samples.
    #[arg(long)]
    seed: Option<u64>,
    /// Randomized instances when the domain is too large to enumerate.
    #[arg(long, default_value_t = 100_000)]
    instances: u64,
    /// Largest state count handled exhaustively.
    #[arg(long, default_value_t = 20_000)]
    exhaustive_cap: usize,
    /// Uniform samples for the chi-square test.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Where failing instances are written.
    #[arg(long, default_value = "verify-failures")]
    failures_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct RenderArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "shaded", value_parser = parse_render_mode)]
    #[serde(serialize_with = "render_name")]
    mode: RenderMode,
    #[arg(long)]
    out: PathBuf,
    /// Overdraw error edges.
    #[arg(long)]
    errors: bool,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Serialize)]
struct ObservablesArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    sides: Vec<u32>,
    #[arg(long, default_value_t = 10)]
    trials: u32,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    shape: ShapeArg,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    burn_in: Option<u64>,
    #[arg(long)]
    force: bool,
}

fn parse_shape(s: &str) -> Result<Shape, String> {
    s.parse()
}
fn parse_init(s: &str) -> Result<InitMode, String> {
    s.parse()
}
fn parse_scale_mode(s: &str) -> Result<ScaleMode, String> {
    s.parse()
}
fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}
fn parse_render_mode(s: &str) -> Result<RenderMode, String> {
    s.parse()
}

fn shape_name<S: serde::Serializer>(x: &Shape, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(match x {
        Shape::Hexagon => "hexagon",
        Shape::Rhombus => "rhombus",
    })
}
fn init_name<S: serde::Serializer>(x: &InitMode, s: S) -> Result<S::Ok, S::Error> {
    match x {
        InitMode::Max => s.serialize_str("max"),
        InitMode::Uniform => s.serialize_str("uniform"),
        InitMode::ErrorFree => s.serialize_str("errorfree"),
        InitMode::File(p) => s.serialize_str(&format!("file:{}", p.display())),
    }
}
fn mode_name<S: serde::Serializer>(x: &ScaleMode, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(x.name())
}
fn suite_name<S: serde::Serializer>(x: &Suite, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(x.name())
}
fn render_name<S: serde::Serializer>(x: &RenderMode, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(match x {
        RenderMode::Plain => "plain",
        RenderMode::Shaded => "shaded",
        RenderMode::Height => "height",
    })
}

/// Refuses to replace an existing file unless forced.
fn check_free(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        bail!("{} exists; pass --force to overwrite", path.display());
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str, force: bool) -> Result<()> {
    check_free(path, force)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Path of the config echo written beside an output file.
fn config_path(out: &Path) -> PathBuf {
    let name = out
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    out.with_file_name(format!("{name}.config.json"))
}

fn echo_config(cli: &Cli, path: &Path, force: bool) -> Result<()> {
    write_file(path, &(serde_json::to_string_pretty(cli)? + "\n"), force)
}

/// Companion path: `out.csv` becomes `out.<suffix>.csv`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = out
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}{ext}"))
}

fn read_tiling(path: &Path) -> Result<Tiling> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Tiling::parse(&text, None).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_run(cli: &Cli, a: &RunArgs) -> Result<ExitCode> {
    let domain = Arc::new(match (&a.domain, a.side) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Domain::parse(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        (None, Some(k)) if k > 0 => a.shape.shape.build(k),
        _ => bail!("side must be positive"),
    });
    let mut outputs: Vec<PathBuf> = a.trajectory.iter().cloned().collect();
    if let Some(dir) = &a.svg_dir {
        outputs.push(dir.join("strip.svg"));
    }
    for p in &outputs {
        check_free(p, a.force)?;
    }
    let init = initial_state(&domain, &SamplerConfig::new(a.init.clone(), a.seed))?;
    let mut opts = RunOptions::for_tiles(domain.num_tiles());
    if a.step_limit > 0 {
        opts.step_limit = a.step_limit;
    }
    opts.verify = a.check;
    opts.snapshot_every = a.snapshot_every.filter(|_| a.svg_dir.is_some());
    let mut frames: Vec<(u64, Tiling)> = Vec::new();
    let tr = run(init, a.seed, &opts, |t, tiling| {
        frames.push((t, tiling.clone()))
    })?;
    println!(
        "n={} T={} stop={} initial_volume={} final_energy={} error_free={}",
        domain.num_tiles(),
        tr.t,
        tr.stop,
        tr.initial_volume,
        tr.final_energy,
        tr.final_error_free
    );
    if tr.degenerate {
        println!("note: single-hexagon domain, stopped at zero energy");
    }
    if let Some(p) = &a.trajectory {
        write_file(p, &trajectory_csv(&tr), a.force)?;
        echo_config(cli, &config_path(p), a.force)?;
    }
    if let Some(dir) = &a.svg_dir {
        let ropts = RenderOptions {
            error_edges: true,
            ..RenderOptions::new(RenderMode::Shaded)
        };
        for (t, tiling) in &frames {
            write_file(
                &dir.join(format!("step_{t:09}.svg")),
                &render_svg(tiling, &ropts),
                a.force,
            )?;
        }
        let refs: Vec<(u64, &Tiling)> = frames.iter().map(|(t, x)| (*t, x)).collect();
        write_file(
            &dir.join("strip.svg"),
            &render_strip(&refs, &ropts),
            a.force,
        )?;
        echo_config(cli, &dir.join("config.json"), a.force)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_scale(cli: &Cli, a: &ScaleArgs) -> Result<ExitCode> {
    let summary = sibling(&a.out, "summary");
    for p in [&a.out, &summary, &config_path(&a.out)] {
        check_free(p, a.force)?;
    }
    let cfg = ExperimentConfig {
        shape: a.shape.shape,
        jobs: a.jobs,
        wall_clock: a.wall_clock,
        burn_in: a.burn_in,
        step_limit: a.step_limit,
        ..ExperimentConfig::new(a.sides.clone(), a.trials, a.seed)
    };
    let res = scaling_experiment(&cfg, a.mode)?;
    write_file(&a.out, &trials_csv(&res.trials), a.force)?;
    write_file(&summary, &summary_csv(&res.points), a.force)?;
    echo_config(cli, &config_path(&a.out), a.force)?;
    for p in &res.points {
        println!(
            "side={} n={} mean_T={:.1} stderr={:.1}",
            p.side, p.n, p.mean_t, p.stderr_t
        );
    }
    if res.points.len() >= 3 {
        let pts: Vec<(f64, f64)> = res.points.iter().map(|p| (p.n as f64, p.mean_t)).collect();
        let fit = fit_power_law(&pts)?;
        println!(
            "fit: T ≈ {:.4e} · n^{:.3} (r² = {:.4})",
            fit.constant, fit.exponent, fit.r2
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_exact(cli: &Cli, a: &ExactArgs) -> Result<ExitCode> {
    check_free(&a.out, a.force)?;
    let domain = Arc::new(a.shape.shape.build(a.side));
    let space = enumerate(&domain, a.cap)?;
    let times = exact_times::<Rational>(&space)?;
    write_file(&a.out, &exact_csv(&space, &times), a.force)?;
    echo_config(cli, &config_path(&a.out), a.force)?;
    println!(
        "states={} worst_T={} average_T={}",
        space.len(),
        times.worst,
        times.average
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_hull(cli: &Cli, a: &HullArgs) -> Result<ExitCode> {
    check_free(&a.out, a.force)?;
    let t = read_tiling(&a.input)?;
    let h = triconvex_hull(&t)?;
    write_file(&a.out, &h.to_text(), a.force)?;
    echo_config(cli, &config_path(&a.out), a.force)?;
    println!("phi={} phi_bar={}", t.phi().phi, h.phi().phi);
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: &VerifyArgs) -> Result<ExitCode> {
    if a.side == 0 {
        bail!("side must be positive");
    }
    let domain = Arc::new(a.shape.shape.build(a.side));
    let mut opts = VerifyOptions {
        instances: a.instances,
        exhaustive_cap: a.exhaustive_cap,
        samples: a.samples,
        ..VerifyOptions::default()
    };
    match a.seed {
        Some(s) => opts.seed = s,
        None if needs_seed(&domain, a.suite, &opts) => {
            bail!("this suite samples at random here; pass --seed")
        }
        None => {}
    }
    let report = run_suite(&domain, a.suite, &opts);
    print!("{}", report.to_text());
    if report.passed() {
        return Ok(ExitCode::SUCCESS);
    }
    fs::create_dir_all(&a.failures_dir)
        .with_context(|| format!("creating {}", a.failures_dir.display()))?;
    for (i, c) in report.checks.iter().enumerate() {
        if let Some(f) = &c.first_failure {
            let path = a
                .failures_dir
                .join(format!("{}-{i}.tiling", a.suite.name()));
            let body = format!("# check: {}\n# {}\n{}", c.name, f.detail, f.tiling);
            fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
            println!("failing instance: {}", path.display());
        }
    }
    Ok(ExitCode::from(2))
}

fn cmd_render(cli: &Cli, a: &RenderArgs) -> Result<ExitCode> {
    check_free(&a.out, a.force)?;
    let t = read_tiling(&a.input)?;
    let opts = RenderOptions {
        error_edges: a.errors,
        ..RenderOptions::new(a.mode)
    };
    write_file(&a.out, &render_svg(&t, &opts), a.force)?;
    echo_config(cli, &config_path(&a.out), a.force)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_observables(cli: &Cli, a: &ObservablesArgs) -> Result<ExitCode> {
    check_free(&a.out, a.force)?;
    let cfg = ExperimentConfig {
        shape: a.shape.shape,
        jobs: a.jobs,
        burn_in: a.burn_in,
        ..ExperimentConfig::new(a.sides.clone(), a.trials, a.seed)
    };
    let recs = observables_experiment(&cfg)?;
    write_file(&a.out, &observables_csv(&recs), a.force)?;
    echo_config(cli, &config_path(&a.out), a.force)?;
    if a.sides.len() >= 3 {
        let n: Vec<f64> = recs.iter().map(|r| r.n as f64).collect();
        let v: Vec<f64> = recs.iter().map(|r| r.volume as f64).collect();
        let e: Vec<f64> = recs.iter().map(|r| r.energy as f64).collect();
        let ln: Vec<f64> = n.iter().map(|x| x.ln()).collect();
        let h: Vec<f64> = recs.iter().map(|r| r.levels as f64).collect();
        let fv = linear_fit(&n, &v)?;
        let fe = linear_fit(&n, &e)?;
        let fh = linear_fit(&ln, &h)?;
        println!(
            "V ≈ {:.4}·n + {:.2} (r² = {:.4})",
            fv.slope, fv.intercept, fv.r2
        );
        println!(
            "E ≈ {:.4}·n + {:.2} (r² = {:.4})",
            fe.slope, fe.intercept, fe.r2
        );
        println!(
            "H ≈ {:.4}·ln n + {:.2} (r² = {:.4})",
            fh.slope, fh.intercept, fh.r2
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(&cli, a),
        Command::Scale(a) => cmd_scale(&cli, a),
        Command::Exact(a) => cmd_exact(&cli, a),
        Command::Hull(a) => cmd_hull(&cli, a),
        Command::Verify(a) => cmd_verify(a),
        Command::Render(a) => cmd_render(&cli, a),
        Command::Observables(a) => cmd_observables(&cli, a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
