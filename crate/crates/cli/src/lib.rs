//! Command-line driver: loads JSON scenarios and runs the ablab computations on them.

pub mod scenario;
pub mod suites;

use std::io::Write;
use std::path::{Path, PathBuf};

use ablab::interference::{measure_fringe_shift, simulate_experiment, two_beam_pattern};
use ablab::phase::stokes_residual;
use ablab::sources::{flux_through_disk_with, sample_field};
use ablab::{Error as CoreError, Source, Trajectory, Vec3};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use scenario::Scenario;
use suites::{Outcome, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
/// A verification suite ran to completion and at least one check failed.
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_INVALID,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ablab", version, about = "Vector-potential phases, flux sources and fringe patterns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample A and B on a regular lattice and write a CSV.
    Fields {
        scenario: PathBuf,
        /// Lattice size as nx,ny,nz.
        #[arg(long, value_parser = parse_grid)]
        grid: [usize; 3],
        /// Box as xmin,xmax,ymin,ymax,zmin,zmax; defaults to twice the source extent.
        #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
        bounds: Option<[f64; 6]>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Threaded flux by quadrature and in closed form, and the Stokes residual.
    Flux { scenario: PathBuf },
    /// Phase components for the scenario's subbeam pair.
    Phase { scenario: PathBuf },
    /// Run invariant suites and print a pass/fail table.
    Verify {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
    },
    /// Reference and shifted fringe patterns plus the measured shift.
    Fringes {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_list(s: &str, n: usize) -> Result<Vec<&str>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated values, got {}", parts.len()));
    }
    Ok(parts)
}

fn parse_grid(s: &str) -> Result<[usize; 3], String> {
    let p = parse_list(s, 3)?;
    let mut g = [0; 3];
    for (slot, text) in g.iter_mut().zip(p) {
        *slot = text.parse().map_err(|e| format!("{text:?}: {e}"))?;
    }
    Ok(g)
}

fn parse_bounds(s: &str) -> Result<[f64; 6], String> {
    let p = parse_list(s, 6)?;
    let mut b = [0.0; 6];
    for (slot, text) in b.iter_mut().zip(p) {
        *slot = text.parse().map_err(|e| format!("{text:?}: {e}"))?;
    }
    Ok(b)
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

/// Caps the global thread pool from `ABLAB_THREADS`; 0 or unset means automatic.
fn configure_threads() {
    let Ok(value) = std::env::var("ABLAB_THREADS") else {
        return;
    };
    match value.trim().parse::<usize>() {
        Ok(0) => {}
        Ok(n) => {
            // a pool built earlier in this process wins
            if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
                log::debug!("thread pool already initialised");
            }
        }
        Err(_) => log::warn!("ignoring ABLAB_THREADS={value:?}"),
    }
}

/// Runs the CLI on `args` (program name first), writing results to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_INVALID
                }
            };
        }
    };
    configure_threads();
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Destination for a CSV: the flag, else the scenario's output path (relative
/// to the scenario file), else stdout.
fn emit(text: &str, flag: Option<PathBuf>, configured: Option<&PathBuf>, scenario_path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let target = flag.or_else(|| {
        configured.map(|p| match scenario_path.parent() {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.clone(),
        })
    });
    match target {
        Some(path) => std::fs::write(&path, text).map_err(io_err(&path)),
        None => out.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>"))),
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    let stdout = Path::new("<stdout>");
    match command {
        Command::Fields {
            scenario,
            grid,
            bounds,
            out: dest,
        } => {
            let sc = Scenario::load(&scenario)?;
            let source = sc.build_source()?;
            let csv = field_grid_csv(&source, grid, bounds)?;
            emit(&csv, dest, sc.outputs.fields_csv.as_ref(), &scenario, out)?;
        }
        Command::Flux { scenario } => {
            let sc = Scenario::load(&scenario)?;
            let source = sc.build_source()?;
            let text = flux_report(&sc, &source)?;
            out.write_all(text.as_bytes()).map_err(io_err(stdout))?;
        }
        Command::Phase { scenario } => {
            let sc = Scenario::load(&scenario)?;
            let source = sc.build_source()?;
            let text = phase_report(&sc, &source)?;
            out.write_all(text.as_bytes()).map_err(io_err(stdout))?;
        }
        Command::Verify { scenario, suite } => {
            let sc = Scenario::load(&scenario)?;
            let source = sc.build_source()?;
            let (text, all_passed) = verify_report(&sc, &source, suite)?;
            out.write_all(text.as_bytes()).map_err(io_err(stdout))?;
            if !all_passed {
                return Ok(EXIT_CHECK_FAILED);
            }
        }
        Command::Fringes { scenario, out: dest } => {
            let sc = Scenario::load(&scenario)?;
            let source = sc.build_source()?;
            let csv = fringe_csv(&sc, &source)?;
            emit(&csv, dest, sc.outputs.fringes_csv.as_ref(), &scenario, out)?;
        }
    }
    Ok(EXIT_OK)
}

fn default_bounds(source: &Source) -> [f64; 6] {
    let c = source.threading_circle();
    let half = 2.0 * (c.radius + source.tube_radius());
    [
        c.center.x - half,
        c.center.x + half,
        c.center.y - half,
        c.center.y + half,
        c.center.z - half,
        c.center.z + half,
    ]
}

fn axis_values(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Field lattice CSV. Points on a wire or inside an ideal ring get `NaN` fields.
pub fn field_grid_csv(source: &Source, grid: [usize; 3], bounds: Option<[f64; 6]>) -> Result<String, CliError> {
    if grid.iter().any(|&n| n == 0) {
        return Err(CliError::Validation(format!(
            "grid: every dimension must be positive, got {},{},{}",
            grid[0], grid[1], grid[2]
        )));
    }
    let b = bounds.unwrap_or_else(|| default_bounds(source));
    if b.iter().any(|x| !x.is_finite()) || b[0] > b[1] || b[2] > b[3] || b[4] > b[5] {
        return Err(CliError::Validation("bounds: need finite min <= max on every axis".into()));
    }
    let xs = axis_values(b[0], b[1], grid[0]);
    let ys = axis_values(b[2], b[3], grid[1]);
    let zs = axis_values(b[4], b[5], grid[2]);
    let mut points = Vec::with_capacity(xs.len() * ys.len() * zs.len());
    for &x in &xs {
        for &y in &ys {
            points.extend(zs.iter().map(|&z| Vec3::new(x, y, z)));
        }
    }
    let rows: Vec<String> = points
        .par_iter()
        .map(|&p| -> Result<String, CliError> {
            let (a, bf) = match sample_field(source, p) {
                Ok(s) => (s.vector_potential, s.magnetic_field),
                Err(CoreError::NearWire { .. } | CoreError::InsideSource) => {
                    let nan = Vec3::new(f64::NAN, f64::NAN, f64::NAN);
                    (nan, nan)
                }
                Err(e) => return Err(e.into()),
            };
            Ok([p.x, p.y, p.z, a.x, a.y, a.z, bf.x, bf.y, bf.z]
                .map(fmt_num)
                .join(","))
        })
        .collect::<Result<_, _>>()?;
    let mut csv = String::from("x,y,z,Ax,Ay,Az,Bx,By,Bz\n");
    for row in rows {
        csv.push_str(&row);
        csv.push('\n');
    }
    Ok(csv)
}

fn line(text: &mut String, key: &str, value: impl AsRef<str>) {
    text.push_str(key);
    text.push_str(" = ");
    text.push_str(value.as_ref());
    text.push('\n');
}

pub fn flux_report(sc: &Scenario, source: &Source) -> Result<String, CliError> {
    let rel = sc.numerics.quadrature_tolerance;
    let mut text = String::new();
    line(&mut text, "kind", sc.kind());
    let disk = match source {
        Source::Loop(_) => suites::stokes_disks(source)?[STOKES_REPORT_DISK],
        Source::Coil(c) => c.threading_disk(),
        Source::Ring(r) => match r.discrete_coil() {
            Some(c) => c.threading_disk(),
            None => suites::stokes_disks(source)?[STOKES_REPORT_DISK],
        },
    };
    let q = flux_through_disk_with(source, &disk, rel)?;
    line(&mut text, "disk_radius", fmt_num(disk.radius));
    line(&mut text, "flux_quadrature", fmt_num(q.value));
    line(&mut text, "flux_error", fmt_num(q.error));
    let analytic = match source {
        Source::Loop(_) => None,
        Source::Coil(c) => Some(c.ideal_flux()),
        Source::Ring(r) => Some(r.total_flux()),
    };
    line(&mut text, "flux_analytic", analytic.map_or("none".into(), fmt_num));
    let contour = Trajectory::circle(&disk.boundary(), sc.beam.electron_speed, 256)?;
    let s = stokes_residual(&contour, &disk, source)?;
    line(&mut text, "circulation", fmt_num(s.circulation));
    line(&mut text, "stokes_residual", fmt_num(s.residual));
    Ok(text)
}

const STOKES_REPORT_DISK: usize = 2;

pub fn phase_report(sc: &Scenario, source: &Source) -> Result<String, CliError> {
    let geom = sc.beam_geometry(source)?;
    let exp = simulate_experiment(source, &geom, sc.beam.pairing.into(), sc.beam.charge)?;
    let p = &exp.phase;
    let mut text = String::new();
    line(&mut text, "kind", sc.kind());
    line(
        &mut text,
        "pairing",
        match sc.beam.pairing {
            scenario::PairingSpec::SameSet => "same_set",
            scenario::PairingSpec::CrossSet => "cross_set",
        },
    );
    line(&mut text, "total", fmt_num(p.total));
    line(&mut text, "interaction_term", fmt_num(p.interaction_term));
    line(&mut text, "backreaction_term", fmt_num(p.backreaction_term));
    line(&mut text, "flux_term", p.flux_term.map_or("none".into(), fmt_num));
    line(&mut text, "error_estimate", fmt_num(p.error_estimate));
    line(&mut text, "delta_phi", fmt_num(exp.delta_phi));
    line(&mut text, "expected_shift", fmt_num(ablab::interference::expected_shift(exp.delta_phi)));
    Ok(text)
}

/// The pass/fail table and whether every check passed.
pub fn verify_report(sc: &Scenario, source: &Source, suite: Suite) -> Result<(String, bool), CliError> {
    let results = suites::run_suites(sc, source, suite)?;
    let mut text = format!("{:<13} {:<40} {:<24} {:<10} result\n", "suite", "case", "measured", "threshold");
    let mut all = true;
    for (name, outcome) in results {
        match outcome {
            Outcome::Skipped(why) => {
                text.push_str(&format!("{name:<13} {:<40} {:<24} {:<10} SKIP\n", why, "-", "-"));
            }
            Outcome::Checks(checks) => {
                for c in checks {
                    let ok = c.passed();
                    all &= ok;
                    text.push_str(&format!(
                        "{:<13} {:<40} {:<24} {:<10} {}\n",
                        c.suite,
                        c.case,
                        fmt_num(c.measured),
                        fmt_num(c.threshold),
                        if ok { "PASS" } else { "FAIL" }
                    ));
                }
            }
        }
    }
    Ok((text, all))
}

/// Fringe CSV plus the measured shift in periods.
pub fn fringe_csv(sc: &Scenario, source: &Source) -> Result<String, CliError> {
    let geom = sc.beam_geometry(source)?;
    let exp = simulate_experiment(source, &geom, sc.beam.pairing.into(), sc.beam.charge)?;
    let reference = two_beam_pattern(&geom, 0.0, geom.samples)?;
    let shift = measure_fringe_shift(&reference, &exp.pattern)?;
    let mut csv = String::from("screen_x,intensity_ref,intensity_shifted\n");
    for ((x, r), s) in reference
        .screen_positions
        .iter()
        .zip(&reference.intensities)
        .zip(&exp.pattern.intensities)
    {
        csv.push_str(&format!("{},{},{}\n", fmt_num(*x), fmt_num(*r), fmt_num(*s)));
    }
    csv.push_str(&format!("# shift_fraction={}\n", fmt_num(shift)));
    Ok(csv)
}

/// Reads the `# shift_fraction=` trailer of a fringe CSV.
pub fn parse_shift_fraction(csv: &str) -> Option<f64> {
    csv.lines()
        .rev()
        .find_map(|l| l.strip_prefix("# shift_fraction="))
        .and_then(|v| v.trim().parse().ok())
}
