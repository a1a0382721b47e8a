use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use oceansim::bench::{
    convergence_study, degree_study_bench, interp_accuracy_study, monotonicity_violations, normalization_study,
    ConvergenceConfig, InterpStudyConfig, NormalizationConfig,
};
use oceansim::fft::Precision;
use oceansim::io::{export_heightfield, CsvWriter, COMPOSED_ID};
use oceansim::mesh::TriMesh;
use oceansim::scenario::Scenario;
use oceansim::sim::{run, Simulation};
use oceansim::spectra::Convention;
use oceansim::surface::FieldKind;
use oceansim::Error;

#[derive(Parser)]
#[command(name = "oceansim", version, about = "Spectral ocean with floating rigid bodies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    precision: Option<PrecisionArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    F32,
    F64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Literal,
    Physical,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Literal => Convention::Literal,
            ConventionArg::Physical => Convention::Physical,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Runs a scenario and writes per-step CSVs and snapshots.
    Run {
        #[command(flatten)]
        common: Common,
        /// Prints per-stage wall-clock timings.
        #[arg(long)]
        report_timing: bool,
    },
    /// Numerical studies.
    Bench {
        #[command(subcommand)]
        which: BenchCommand,
    },
    /// Loads OBJ meshes and reports whether they are closed and well formed.
    ValidateMesh {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Writes the composed heightfield and every cascade field at a given time.
    DumpSurface {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        time: f64,
        /// Composed grid size; defaults to the scenario snapshot resolution.
        #[arg(long)]
        resolution: Option<usize>,
    },
}

#[derive(Args, Clone)]
struct StudyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    convention: Option<ConventionArg>,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Velocity error of each depth spacing and interpolation.
    InterpAccuracy {
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long, default_value_t = 20.0)]
        wind: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 128)]
        resolution: usize,
        #[arg(long, default_value_t = 8)]
        degree: usize,
    },
    /// Fixed-point iterations of the height solve against wind speed.
    Convergence {
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long, default_value_t = 1000)]
        points: usize,
        #[arg(long, default_value_t = 0.1)]
        wind_min: f64,
        #[arg(long, default_value_t = 35.0)]
        wind_max: f64,
        #[arg(long, default_value_t = 0.5)]
        wind_step: f64,
    },
    /// Monte-Carlo mean of the approximated directional normalisation.
    Normalization {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Accuracy and cost of the velocity slices per degree.
    DegreeStudy {
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long, value_delimiter = ',', default_values_t = (2..=16).collect::<Vec<usize>>())]
        degrees: Vec<usize>,
        #[arg(long, default_value_t = 10.0)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
        #[arg(long, default_value_t = 20.0)]
        wind: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 128)]
        resolution: usize,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse { .. } => 2,
        Error::Mesh(_) => 3,
        Error::NonFinite { .. } => 4,
        Error::Io { .. } => 5,
        _ => 1,
    }
}

fn setup_threads(common: &Common) -> Result<(), Error> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn load_scenario(common: &Common) -> Result<Scenario, Error> {
    let mut s = match &common.config {
        Some(p) => Scenario::load(p)?,
        None => Scenario::default(),
    };
    if let Some(seed) = common.seed {
        s.seed = Some(seed);
    }
    if let Some(p) = common.precision {
        s.cascades.precision = match p {
            PrecisionArg::F32 => Precision::F32,
            PrecisionArg::F64 => Precision::F64,
        };
    }
    Ok(s)
}

fn create_dir(p: &Path) -> Result<(), Error> {
    fs::create_dir_all(p).map_err(|e| Error::Io { path: p.to_path_buf(), source: e })
}

fn cmd_run(common: &Common, report_timing: bool) -> Result<(), Error> {
    if common.config.is_none() {
        return Err(Error::Config("run needs --config".into()));
    }
    let scenario = load_scenario(common)?;
    let mut sim = Simulation::new(scenario)?;
    let summary = run(&mut sim, &common.out)?;
    println!(
        "ran {} steps to t = {:.4} s with {} bodies; {} snapshots in {}",
        summary.steps,
        summary.time,
        sim.bodies().len(),
        summary.snapshots,
        common.out.display()
    );
    if report_timing {
        println!("timing (not asserted):");
        for line in summary.timing.lines() {
            println!("  {line}");
        }
    }
    Ok(())
}

fn interp_config(study: &StudyArgs, wind: f64, samples: usize, resolution: usize, degree: usize) -> Result<InterpStudyConfig, Error> {
    let s = load_scenario(&study.common)?;
    let mut cfg = InterpStudyConfig::default();
    if study.common.config.is_some() {
        cfg.cascades = s.cascades.clone();
        cfg.slices = s.velocity;
    }
    cfg.spectrum = s.effective_spectrum();
    cfg.cascades.resolution = resolution;
    cfg.cascades.precision = s.cascades.precision;
    cfg.wind = wind;
    cfg.slices.degree = degree;
    cfg.accuracy.samples = samples;
    if let Some(c) = study.convention {
        cfg.spectrum.convention = c.into();
    }
    Ok(cfg)
}

fn cmd_interp(study: &StudyArgs, wind: f64, samples: usize, resolution: usize, degree: usize) -> Result<(), Error> {
    let cfg = interp_config(study, wind, samples, resolution, degree)?;
    let rows = interp_accuracy_study(&cfg)?;
    let out = &study.common.out;
    create_dir(out)?;
    let mut w = CsvWriter::create(&out.join("interp_accuracy.csv"), &["scheme", "degree", "mean_error", "p95_error"])?;
    let mut tw = CsvWriter::create(&out.join("interp_accuracy_timing.csv"), &["scheme", "build_ms", "query_ns"])?;
    for r in &rows {
        w.text_row(&[r.scheme(), r.degree.to_string(), r.mean_error.to_string(), r.p95_error.to_string()])?;
        tw.text_row(&[r.scheme(), r.build_ms.to_string(), r.query_ns.to_string()])?;
        println!("{:<15} mean {:.6} m/s  p95 {:.6} m/s", r.scheme(), r.mean_error, r.p95_error);
    }
    w.finish()?;
    tw.finish()
}

fn cmd_convergence(study: &StudyArgs, points: usize, wind_min: f64, wind_max: f64, wind_step: f64) -> Result<(), Error> {
    let s = load_scenario(&study.common)?;
    let mut cfg = ConvergenceConfig { points, wind_min, wind_max, wind_step, ..ConvergenceConfig::default() };
    cfg.spectrum = s.effective_spectrum();
    if study.common.config.is_some() {
        cfg.cascades = s.cascades.clone();
    }
    cfg.cascades.precision = s.cascades.precision;
    if let Some(c) = study.convention {
        cfg.spectrum.convention = c.into();
    }
    let rows = convergence_study(&cfg)?;
    let out = &study.common.out;
    create_dir(out)?;
    let mut w = CsvWriter::create(
        &out.join("convergence.csv"),
        &["wind", "mean_iters", "var_iters", "fraction_within_4", "max_iters", "unconverged"],
    )?;
    for r in &rows {
        w.text_row(&[
            r.wind.to_string(),
            r.mean_iterations.to_string(),
            r.var_iterations.to_string(),
            r.fraction_within.to_string(),
            r.max_iterations.to_string(),
            r.unconverged.to_string(),
        ])?;
    }
    w.finish()?;
    let worst = rows.iter().map(|r| r.fraction_within).fold(f64::INFINITY, f64::min);
    let drops = monotonicity_violations(&rows, cfg.points, 3.0);
    println!("winds: {}  worst fraction within {} iterations: {:.4}", rows.len(), cfg.within, worst);
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        println!(
            "mean iterations: {:.3} at {} m/s, {:.3} at {} m/s",
            first.mean_iterations, first.wind, last.mean_iterations, last.wind
        );
    }
    println!("monotonicity drops beyond 3 standard errors: {}", drops.len());
    Ok(())
}

fn cmd_normalization(common: &Common, samples: usize) -> Result<(), Error> {
    let cfg = NormalizationConfig { samples, seed: common.seed.unwrap_or(0), ..NormalizationConfig::default() };
    let r = normalization_study(&cfg)?;
    create_dir(&common.out)?;
    let mut w = CsvWriter::create(&common.out.join("normalization.csv"), &["samples", "seed", "mean", "std", "min", "max"])?;
    w.text_row(&[
        r.samples.to_string(),
        r.seed.to_string(),
        r.mean.to_string(),
        r.std.to_string(),
        r.min.to_string(),
        r.max.to_string(),
    ])?;
    w.finish()?;
    println!("mean {:.6} (std {:.6}, range [{:.6}, {:.6}]) over {} samples", r.mean, r.std, r.min, r.max, r.samples);
    if !r.in_band() {
        return Err(Error::Invariant(format!("normalization mean {} outside [1.02, 1.12]", r.mean)));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_degree(study: &StudyArgs, degrees: &[usize], alpha: f64, beta: f64, wind: f64, samples: usize, resolution: usize) -> Result<(), Error> {
    let cfg = interp_config(study, wind, samples, resolution, 8)?;
    let result = degree_study_bench(&cfg, degrees, alpha, beta)?;
    let out = &study.common.out;
    create_dir(out)?;
    let mut w = CsvWriter::create(&out.join("degree_study.csv"), &["degree", "accuracy"])?;
    let mut tw = CsvWriter::create(&out.join("degree_study_timing.csv"), &["degree", "performance_s", "objective"])?;
    for r in &result.rows {
        w.text_row(&[r.degree.to_string(), r.accuracy.to_string()])?;
        tw.text_row(&[r.degree.to_string(), r.performance.to_string(), r.objective.to_string()])?;
        println!("d = {:>2}  A = {:.6} m/s  P = {:.6} s  J = {:.6}", r.degree, r.accuracy, r.performance, r.objective);
    }
    w.finish()?;
    tw.finish()?;
    if let Some(d) = result.best_degree() {
        println!("argmin J (alpha = {alpha}, beta = {beta}): d = {d} (timing dependent)");
    }
    Ok(())
}

fn cmd_validate(paths: &[PathBuf]) -> Result<(), Error> {
    let mut first_err = None;
    for p in paths {
        match TriMesh::from_obj_path(p) {
            Ok(m) => println!(
                "{}: ok, {} vertices, {} triangles, volume {:.6} m^3, area {:.6} m^2",
                p.display(),
                m.vertices().len(),
                m.triangles().len(),
                m.volume(),
                m.total_area()
            ),
            Err(e) => {
                println!("{}: invalid: {e}", p.display());
                first_err.get_or_insert(e);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn cmd_dump(common: &Common, time: f64, resolution: Option<usize>) -> Result<(), Error> {
    let scenario = load_scenario(common)?;
    let n = resolution.unwrap_or(scenario.output.snapshot_resolution);
    if n < 2 {
        return Err(Error::Config("resolution must be >= 2".into()));
    }
    let length = scenario.cascades.lengths[0];
    let cascades = oceansim::surface::Cascades::generate(&scenario.cascades, &scenario.effective_spectrum())?;
    let maps = cascades.maps(time);
    let out = &common.out;
    create_dir(out)?;
    let mut field = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            field[i * n + j] = maps.height_at(i as f64 * length / n as f64, j as f64 * length / n as f64);
        }
    }
    export_heightfield(&out.join("surface.abhf"), n, COMPOSED_ID, time, &field)?;
    for (c, cm) in maps.cascades().iter().enumerate() {
        for (k, kind) in FieldKind::ALL.iter().enumerate() {
            let path = out.join(format!("cascade{c}_{}.abhf", kind.name()));
            export_heightfield(&path, cm.n(), (c * FieldKind::ALL.len() + k) as i32, time, cm.field(*kind).data())?;
        }
    }
    println!("wrote composed {n}x{n} heightfield and {} cascade fields to {}", maps.cascades().len() * 8, out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Run { common, report_timing } => {
            setup_threads(common)?;
            cmd_run(common, *report_timing)
        }
        Command::Bench { which } => match which {
            BenchCommand::InterpAccuracy { study, wind, samples, resolution, degree } => {
                setup_threads(&study.common)?;
                cmd_interp(study, *wind, *samples, *resolution, *degree)
            }
            BenchCommand::Convergence { study, points, wind_min, wind_max, wind_step } => {
                setup_threads(&study.common)?;
                cmd_convergence(study, *points, *wind_min, *wind_max, *wind_step)
            }
            BenchCommand::Normalization { common, samples } => {
                setup_threads(common)?;
                cmd_normalization(common, *samples)
            }
            BenchCommand::DegreeStudy { study, degrees, alpha, beta, wind, samples, resolution } => {
                setup_threads(&study.common)?;
                cmd_degree(study, degrees, *alpha, *beta, *wind, *samples, *resolution)
            }
        },
        Command::ValidateMesh { paths } => cmd_validate(paths),
        Command::DumpSurface { common, time, resolution } => {
            setup_threads(common)?;
            cmd_dump(common, *time, *resolution)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("ERROR {code} {e}");
            ExitCode::from(code)
        }
    }
}
