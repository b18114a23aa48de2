//! Invariant suites run by `verify`.

use std::f64::consts::PI;

use ablab::backreaction::{emf_time_chain_with_charge, interaction_lagrangian, liquid_kinetic_energy_change};
use ablab::phase::stokes_residual;
use ablab::sources::flux_through_disk_with;
use ablab::{CurrentLoop, Disk, ElectronState, FieldSource, Frame, Source, ToroidalCoil, Trajectory, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::Scenario;
use crate::CliError;

pub const STOKES_CONTOURS: usize = 10;
pub const STOKES_TOLERANCE: f64 = 1e-6;
pub const CANCELLATION_PAIRS: usize = 100;
pub const CANCELLATION_TOLERANCE: f64 = 1e-12;
pub const CONFINEMENT_POINTS: usize = 50;
pub const CONFINEMENT_COARSE: usize = 90;
pub const CONFINEMENT_FINE: usize = 720;
pub const CONFINEMENT_RATIO: f64 = 10.0;
pub const CONFINEMENT_LEAKAGE: f64 = 1e-3;
pub const CHAIN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    All,
    Stokes,
    Cancellation,
    Confinement,
    Chain,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Stokes => "stokes",
            Suite::Cancellation => "cancellation",
            Suite::Confinement => "confinement",
            Suite::Chain => "chain",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub case: String,
    pub measured: f64,
    pub threshold: f64,
}

impl Check {
    /// Passes when the measured value does not exceed the threshold.
    pub fn at_most(suite: &'static str, case: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Check {
            suite,
            case: case.into(),
            measured,
            threshold,
        }
    }

    pub fn passed(&self) -> bool {
        self.measured <= self.threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Checks(Vec<Check>),
    Skipped(&'static str),
}

pub fn run_suites(scenario: &Scenario, source: &Source, which: Suite) -> Result<Vec<(&'static str, Outcome)>, CliError> {
    let selected: Vec<Suite> = match which {
        Suite::All => vec![Suite::Stokes, Suite::Cancellation, Suite::Confinement, Suite::Chain],
        one => vec![one],
    };
    let mut out = Vec::new();
    for suite in selected {
        let outcome = match suite {
            Suite::Stokes => stokes(scenario, source)?,
            Suite::Cancellation => cancellation(scenario, source)?,
            Suite::Confinement => confinement(scenario, source)?,
            Suite::Chain => chain(scenario, source)?,
            Suite::All => unreachable!(),
        };
        out.push((suite.name(), outcome));
    }
    Ok(out)
}

/// Circles around the flux: coaxial lifted disks for a loop, meridional disks
/// about the tube (at the half-step azimuth of a winding) for toroidal sources.
pub fn stokes_disks(source: &Source) -> Result<Vec<Disk>, CliError> {
    let disks = match source {
        Source::Loop(lp) => {
            let r = lp.radius();
            let centre = lp.center() + lp.normal() * (0.5 * r);
            (0..STOKES_CONTOURS)
                .map(|k| Disk::new(centre, lp.normal(), r * (0.5 + 0.25 * k as f64)))
                .collect::<ablab::Result<Vec<_>>>()?
        }
        Source::Coil(coil) => meridional_disks(coil.frame(), coil.major_radius(), coil.minor_radius(), PI / coil.loop_count() as f64)?,
        Source::Ring(ring) => {
            let phi = ring.discrete_coil().map_or(0.0, |c| PI / c.loop_count() as f64);
            meridional_disks(ring.frame(), ring.major_radius(), ring.minor_radius(), phi)?
        }
    };
    Ok(disks)
}

fn meridional_disks(frame: &Frame, major: f64, minor: f64, phi: f64) -> ablab::Result<Vec<Disk>> {
    let (s, c) = phi.sin_cos();
    let radial = frame.u * c + frame.w * s;
    let azimuthal = frame.n.cross(radial);
    let span = (3.0 * minor).min(0.9 * major - minor);
    (0..STOKES_CONTOURS)
        .map(|k| {
            let r = minor + span * (k + 1) as f64 / STOKES_CONTOURS as f64;
            Disk::new(frame.origin + radial * major, azimuthal, r)
        })
        .collect()
}

fn stokes(scenario: &Scenario, source: &Source) -> Result<Outcome, CliError> {
    let rel = scenario.numerics.quadrature_tolerance;
    let mut checks = Vec::new();
    for disk in stokes_disks(source)? {
        let contour = Trajectory::circle(&disk.boundary(), scenario.beam.electron_speed, 256)?;
        let report = stokes_residual(&contour, &disk, source)?;
        // the tolerance bounds the flux quadrature; recheck it when a tighter one is asked for
        let flux = if rel < ablab::sources::FLUX_REL_TOL {
            flux_through_disk_with(source, &disk, rel)?.value
        } else {
            report.flux
        };
        let scale = report.circulation.abs().max(flux.abs());
        let measured = if scale == 0.0 { 0.0 } else { (report.circulation - flux).abs() / scale };
        checks.push(Check::at_most(
            "stokes",
            format!("contour r={:?}", disk.radius),
            measured,
            STOKES_TOLERANCE,
        ));
    }
    Ok(Outcome::Checks(checks))
}

/// Random electron state near `lp`: position within three radii of the centre
/// and at least a tenth of a radius from the wire, speed up to 0.1.
pub fn random_state(rng: &mut impl Rng, lp: &CurrentLoop) -> ElectronState {
    let r = lp.radius();
    loop {
        let p = lp.center() + Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)) * r;
        if lp.distance_to_wire(p) <= 0.1 * r {
            continue;
        }
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if v.norm() > 1.0 || v.norm() < 1e-3 {
            continue;
        }
        return ElectronState::electron(p, v * 0.1).expect("subluminal state");
    }
}

/// `|L + ΔT| / |L|` for one loop and electron state.
pub fn cancellation_ratio(lp: &CurrentLoop, e: &ElectronState) -> ablab::Result<f64> {
    let l = interaction_lagrangian(lp, e)?;
    let dt = liquid_kinetic_energy_change(lp, e)?;
    Ok(if l == 0.0 { (l + dt).abs() } else { (l + dt).abs() / l.abs() })
}

fn cancellation(scenario: &Scenario, source: &Source) -> Result<Outcome, CliError> {
    let loops = source.responsive_loops();
    if loops.is_empty() {
        return Ok(Outcome::Skipped("inert source has no responsive liquid"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.numerics.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..CANCELLATION_PAIRS {
        let lp = &loops[rng.gen_range(0..loops.len())];
        let e = random_state(&mut rng, lp);
        worst = worst.max(cancellation_ratio(lp, &e)?);
    }
    Ok(Outcome::Checks(vec![Check::at_most(
        "cancellation",
        format!("worst of {CANCELLATION_PAIRS} pairs"),
        worst,
        CANCELLATION_TOLERANCE,
    )]))
}

/// Points outside the tube, between 0.02 and 0.1 major radii from its surface.
pub fn external_points(coil: &ToroidalCoil, count: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = coil.frame();
    let (big, a) = (coil.major_radius(), coil.minor_radius());
    (0..count)
        .map(|_| {
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let d = a + big * rng.gen_range(0.02..0.1);
            let rho = big + d * theta.cos();
            f.point(rho * phi.cos(), rho * phi.sin(), d * theta.sin())
        })
        .collect()
}

/// Largest `|B|` of `coil` over `points`.
pub fn max_field(coil: &ToroidalCoil, points: &[Vec3]) -> ablab::Result<f64> {
    points
        .iter()
        .try_fold(0.0f64, |m, &p| Ok(m.max(coil.magnetic_field(p)?.norm())))
}

fn confinement(scenario: &Scenario, source: &Source) -> Result<Outcome, CliError> {
    let coil = match source {
        Source::Coil(c) => c,
        Source::Ring(r) => match r.discrete_coil() {
            Some(c) => c,
            None => return Ok(Outcome::Skipped("analytic ring has no winding")),
        },
        Source::Loop(_) => return Ok(Outcome::Skipped("single loop does not confine its field")),
    };
    let points = external_points(coil, CONFINEMENT_POINTS, scenario.numerics.seed);
    let coarse = coil.with_loop_count(CONFINEMENT_COARSE)?;
    let fine = coil.with_loop_count(CONFINEMENT_FINE)?;
    let b_coarse = max_field(&coarse, &points)?;
    let b_fine = max_field(&fine, &points)?;
    Ok(Outcome::Checks(vec![
        Check::at_most(
            "confinement",
            format!("|B| N={CONFINEMENT_FINE} / N={CONFINEMENT_COARSE}"),
            b_fine / b_coarse,
            1.0 / CONFINEMENT_RATIO,
        ),
        Check::at_most(
            "confinement",
            format!("|B| N={CONFINEMENT_FINE} / interior scale"),
            b_fine / fine.interior_field_scale(),
            CONFINEMENT_LEAKAGE,
        ),
    ]))
}

/// Straight flyby in the plane of `lp`, offset 1.5 radii from its centre,
/// starting and ending `start_radii` radii away along the loop frame's first axis.
pub fn flyby(lp: &CurrentLoop, start_radii: f64, steps: usize, speed: f64) -> ablab::Result<Trajectory> {
    let f = lp.frame();
    let r = lp.radius();
    let along = start_radii * r;
    let half = (along * along - 2.25 * r * r).max(0.0).sqrt();
    Trajectory::polyline(&[f.point(-half, 1.5 * r, 0.0), f.point(half, 1.5 * r, 0.0)], speed, steps)
}

fn chain(scenario: &Scenario, source: &Source) -> Result<Outcome, CliError> {
    let Some(lp) = source.responsive_loops().first() else {
        return Ok(Outcome::Skipped("inert source has no responsive liquid"));
    };
    let n = &scenario.numerics;
    let traj = flyby(lp, n.chain_start_radii, n.time_steps, scenario.beam.electron_speed)?;
    let charge = scenario.beam.charge;
    let mut checks = Vec::new();
    for (label, t) in [("closest approach", 0.5 * (traj.t_start() + traj.t_end())), ("end", traj.t_end())] {
        let r = emf_time_chain_with_charge(lp, &traj, t, charge)?;
        checks.push(Check::at_most(
            "chain",
            format!("{label}, start {:?} radii", n.chain_start_radii),
            (r.integrated - r.closed_form).abs() / r.peak,
            CHAIN_TOLERANCE,
        ));
    }
    Ok(Outcome::Checks(checks))
}
