//! Semiclassical phases along electron paths.
//!
//! A single path contributes `−q ∫ A · dx`; a pair of paths sharing both
//! endpoints differs by `−q ∮ A · dx` around the closed contour they form.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Disk, Trajectory, Vec3};
use crate::quadrature::{try_integrate, AdaptiveOptions};
use crate::sources::{circulation, flux_through_disk, FieldSource, Source};
use crate::topology::linking_number;

/// Absolute tolerance of a whole-path phase integral.
pub const PATH_TOLERANCE: f64 = 1e-10;

/// Paths of a pair must share start and end points to this distance.
pub const ENDPOINT_TOLERANCE: f64 = 1e-9;

/// Speeds above this fraction of `c` trigger a warning.
pub const NONRELATIVISTIC_WARNING: f64 = 0.1;

/// Charge of the beam electron, `−e` with `e = 1`.
pub const ELECTRON_CHARGE: f64 = -1.0;

/// Relative tolerance of the rim line integral in [`stokes_residual`].
pub const CIRCULATION_REL_TOL: f64 = 1e-12;

/// Contours used by [`stokes_residual`] must lie on the disk rim to this distance.
pub const CONTOUR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectronState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub charge: f64,
}

impl ElectronState {
    pub fn new(position: Vec3, velocity: Vec3, charge: f64) -> Result<Self> {
        if !(position.is_finite() && velocity.is_finite() && charge.is_finite()) {
            return Err(Error::invalid("electron state must be finite"));
        }
        let speed = velocity.norm();
        if speed >= 1.0 {
            return Err(Error::invalid(format!("electron speed {speed} is not below c = 1")));
        }
        if speed > NONRELATIVISTIC_WARNING {
            log::warn!("electron speed {speed} exceeds {NONRELATIVISTIC_WARNING}; quasi-static treatment degrades");
        }
        Ok(ElectronState {
            position,
            velocity,
            charge,
        })
    }

    /// State with the default charge `−1`.
    pub fn electron(position: Vec3, velocity: Vec3) -> Result<Self> {
        Self::new(position, velocity, ELECTRON_CHARGE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseResult {
    pub total: f64,
    pub interaction_term: f64,
    pub backreaction_term: f64,
    /// `−q × linking × threaded flux`; only for paired paths around a source with a flux.
    pub flux_term: Option<f64>,
    pub error_estimate: f64,
}

impl PhaseResult {
    pub fn zero() -> Self {
        PhaseResult {
            total: 0.0,
            interaction_term: 0.0,
            backreaction_term: 0.0,
            flux_term: None,
            error_estimate: 0.0,
        }
    }

    /// Relative disagreement `|total − flux_term| / max(|total|, |flux_term|)`.
    pub fn flux_discrepancy(&self) -> Option<f64> {
        self.flux_term.map(|f| {
            let scale = self.total.abs().max(f.abs());
            if scale == 0.0 {
                0.0
            } else {
                (self.total - f).abs() / scale
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PathIntegral {
    pub value: f64,
    pub error: f64,
}

/// `∫ A · dx` along the polyline through the trajectory samples.
pub(crate) fn line_integral<S: FieldSource + Sync + ?Sized>(
    traj: &Trajectory,
    source: &S,
    tolerance: f64,
) -> Result<PathIntegral> {
    let samples = traj.samples();
    let segments = samples.len() - 1;
    let opts = AdaptiveOptions::absolute(tolerance / segments as f64);
    let parts = samples
        .par_windows(2)
        .map(|w| {
            let (a, b) = (w[0].position, w[1].position);
            let dx = b - a;
            if dx.norm_squared() == 0.0 {
                return Ok((0.0, 0.0));
            }
            let q = try_integrate(
                |u| Ok(source.vector_potential(a + dx * u)?.dot(dx)),
                0.0,
                1.0,
                &opts,
            )?;
            Ok((q.value, q.error))
        })
        .collect::<Result<Vec<_>>>()?;
    let (value, error) = parts
        .iter()
        .fold((0.0, 0.0), |(v, e), (pv, pe)| (v + pv, e + pe));
    Ok(PathIntegral { value, error })
}

/// Phase `−q ∫ A · dx` accumulated along `traj`. Sample velocities are not used.
pub fn path_phase<S: FieldSource + Sync + ?Sized>(
    traj: &Trajectory,
    source: &S,
    charge: f64,
) -> Result<f64> {
    Ok(-charge * line_integral(traj, source, PATH_TOLERANCE)?.value)
}

fn endpoint_gap(l1: &Trajectory, l2: &Trajectory) -> f64 {
    l1.start().distance(l2.start()).max(l1.end().distance(l2.end()))
}

/// Phase of `l1` minus phase of `l2` for two paths with common endpoints.
///
/// For sources with a threaded flux the closed contour `l1 − l2` is also
/// classified by its linking number with the source and `flux_term` holds
/// `−q × linking × flux`, which the integrated `total` should reproduce.
pub fn phase_difference(
    l1: &Trajectory,
    l2: &Trajectory,
    source: &Source,
    charge: f64,
) -> Result<PhaseResult> {
    let gap = endpoint_gap(l1, l2);
    if gap > ENDPOINT_TOLERANCE {
        return Err(Error::EndpointMismatch { gap });
    }
    if !charge.is_finite() {
        return Err(Error::invalid("charge must be finite"));
    }
    let p1 = line_integral(l1, source, PATH_TOLERANCE)?;
    let p2 = line_integral(l2, source, PATH_TOLERANCE)?;
    let interaction = -charge * (p1.value - p2.value);
    let flux_term = enclosed_flux_term(l1, l2, source, charge)?;
    Ok(PhaseResult {
        total: interaction,
        interaction_term: interaction,
        backreaction_term: 0.0,
        flux_term,
        error_estimate: charge.abs() * (p1.error + p2.error),
    })
}

pub(crate) fn enclosed_flux_term(
    l1: &Trajectory,
    l2: &Trajectory,
    source: &Source,
    charge: f64,
) -> Result<Option<f64>> {
    if matches!(source, Source::Loop(_)) {
        return Ok(None);
    }
    let contour = Trajectory::close_pair(l1, l2, ENDPOINT_TOLERANCE)?;
    let linking = linking_number(&contour, &source.threading_circle())?;
    if linking == 0 {
        return Ok(Some(0.0));
    }
    Ok(source
        .threaded_flux()?
        .map(|flux| -charge * f64::from(linking) * flux))
}

/// Both sides of the Stokes step for a circular contour on the rim of `disk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesReport {
    /// `∮ A · dl` in the traversal direction of the contour.
    pub circulation: f64,
    /// Flux through the disk, oriented right-handed with the contour.
    pub flux: f64,
    /// `|circulation − flux|`.
    pub residual: f64,
    pub error_estimate: f64,
}

/// Compares `∮ A · dl` on the circle traced by `contour` with the quadrature
/// flux through `disk`. The contour only fixes the circle and its direction;
/// the line integral is taken over the exact circle.
pub fn stokes_residual<S: FieldSource + ?Sized>(
    contour: &Trajectory,
    disk: &Disk,
    source: &S,
) -> Result<StokesReport> {
    if !contour.is_closed() {
        return Err(Error::invalid("Stokes contour must be closed"));
    }
    let rim = disk.boundary();
    let tol = CONTOUR_TOLERANCE.max(CONTOUR_TOLERANCE * disk.radius);
    for p in contour.positions() {
        if rim.distance_to(p) > tol {
            return Err(Error::invalid(
                "Stokes contour must be a planar circle on the disk boundary",
            ));
        }
    }
    // signed area decides the traversal direction
    let centre = disk.center;
    let mut area = 0.0;
    for (a, b) in contour.segments() {
        area += (a.position - centre).cross(b.position - centre).dot(disk.unit_normal);
    }
    if area == 0.0 {
        return Err(Error::invalid("Stokes contour encloses no area"));
    }
    let orientation = area.signum();

    let flux = flux_through_disk(source, disk)?;
    let circ = circulation(
        source,
        &rim,
        &AdaptiveOptions::relative(CIRCULATION_REL_TOL, CIRCULATION_REL_TOL * flux.value.abs()),
    )?;
    let circulation = orientation * circ.value;
    let flux_value = orientation * flux.value;
    Ok(StokesReport {
        circulation,
        flux: flux_value,
        residual: (circulation - flux_value).abs(),
        error_estimate: circ.error + flux.error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Circle;
    use crate::sources::{CurrentLoop, InertFluxRing};

    fn loop_source(current: f64) -> Source {
        Source::Loop(CurrentLoop::new(Vec3::ZERO, Vec3::Z, 1.0, current).unwrap())
    }

    fn chord(from: Vec3, to: Vec3) -> Trajectory {
        Trajectory::polyline(&[from, to], 0.01, 20).unwrap()
    }

    #[test]
    fn zero_current_gives_zero_phase() {
        let t = chord(Vec3::new(-5.0, 0.3, 0.2), Vec3::new(5.0, 0.3, 0.2));
        assert_eq!(path_phase(&t, &loop_source(0.0), -1.0).unwrap(), 0.0);
    }

    #[test]
    fn axial_path_has_no_phase() {
        let t = chord(Vec3::new(0.0, 0.0, -5.0), Vec3::new(0.0, 0.0, 5.0));
        assert!(path_phase(&t, &loop_source(3.0), -1.0).unwrap().abs() < 1e-10);
    }

    #[test]
    fn identical_paths_cancel_exactly() {
        let t = chord(Vec3::new(-5.0, 0.3, 0.2), Vec3::new(5.0, 0.3, 0.2));
        let r = phase_difference(&t, &t, &loop_source(2.0), -1.0).unwrap();
        assert_eq!(r.total, 0.0);
        assert_eq!(r.flux_term, None);
    }

    #[test]
    fn mismatched_endpoints_rejected() {
        let a = chord(Vec3::new(-5.0, 0.0, 0.0), Vec3::new(5.0, 0.0, 0.0));
        let b = chord(Vec3::new(-5.0, 0.0, 1e-6), Vec3::new(5.0, 0.0, 0.0));
        assert!(matches!(
            phase_difference(&a, &b, &loop_source(1.0), -1.0),
            Err(Error::EndpointMismatch { .. })
        ));
    }

    #[test]
    fn threading_pair_picks_up_ring_flux() {
        let ring = Source::Ring(InertFluxRing::new(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 0.7).unwrap());
        let s = Vec3::new(1.0, 0.0, -10.0);
        let e = Vec3::new(1.0, 0.0, 10.0);
        let through = Trajectory::polyline(&[s, Vec3::new(0.5, 0.0, 0.0), e], 0.01, 200).unwrap();
        let outside = Trajectory::polyline(&[s, Vec3::new(1.5, 0.0, 0.0), e], 0.01, 200).unwrap();
        let r = phase_difference(&through, &outside, &ring, -1.0).unwrap();
        assert_eq!(r.flux_term, Some(0.7));
        assert!((r.total - 0.7).abs() < 1e-8, "{}", r.total);
    }

    #[test]
    fn stokes_rejects_off_rim_contour() {
        let disk = Disk::new(Vec3::ZERO, Vec3::Z, 2.0).unwrap();
        let c = Circle::new(Vec3::ZERO, Vec3::Z, 2.1).unwrap();
        let contour = Trajectory::circle(&c, 0.01, 64).unwrap();
        assert!(stokes_residual(&contour, &disk, &loop_source(1.0)).is_err());
    }

    #[test]
    fn fast_electron_rejected() {
        assert!(ElectronState::electron(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)).is_err());
        assert!(ElectronState::electron(Vec3::ZERO, Vec3::new(0.01, 0.0, 0.0)).is_ok());
    }
}
