//! Two-beam interference: patterns on a screen, fringe-shift measurement and
//! the end-to-end experiment with subbeams passing inside or outside a source.

use std::f64::consts::{PI, TAU};

use crate::backreaction::total_phase_difference;
use crate::error::{Error, Result};
use crate::geometry::{Trajectory, Vec3};
use crate::phase::{phase_difference, PhaseResult};
use crate::sources::Source;

pub const MIN_SAMPLES_PER_PERIOD: usize = 16;

/// Screen plane with the in-plane axis along which positions are measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Screen {
    pub origin: Vec3,
    pub normal: Vec3,
    pub axis: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    pub source_point: Vec3,
    pub screen: Screen,
    /// Distance between the two subbeam waypoints in the source plane.
    pub slit_separation: f64,
    /// Geometric fringe frequency `g` in radians per screen length.
    pub phase_gradient: f64,
    /// Whole fringe periods covered by a rendered pattern.
    pub fringe_count: usize,
    pub samples: usize,
    /// Straight-line steps on each leg of a trajectory.
    pub steps_per_leg: usize,
    pub electron_speed: f64,
    /// Paths per subbeam; more than one sums amplitudes coherently.
    pub beams_per_subbeam: usize,
    /// Puts the threading subbeam second in cross-set pairs.
    pub swap_beams: bool,
}

impl BeamGeometry {
    /// Beam crossing the plane of `source` at the radius of its threading circle:
    /// source and screen points lie ten radii before and after that plane.
    pub fn around(source: &Source, slit_separation: f64, phase_gradient: f64) -> Result<Self> {
        let ring = source.threading_circle();
        let frame = crate::geometry::Frame::from_normal(ring.center, ring.normal)?;
        let lead = 10.0 * ring.radius;
        let slit = ring.center + frame.u * ring.radius;
        let geom = BeamGeometry {
            source_point: slit - ring.normal * lead,
            screen: Screen {
                origin: slit + ring.normal * lead,
                normal: ring.normal,
                axis: frame.u,
            },
            slit_separation,
            phase_gradient,
            fringe_count: 4,
            samples: 256,
            steps_per_leg: 32,
            electron_speed: 0.01,
            beams_per_subbeam: 1,
            swap_beams: false,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slit_separation > 0.0 && self.slit_separation.is_finite()) {
            return Err(Error::invalid("slit_separation must be > 0"));
        }
        if !(self.phase_gradient > 0.0 && self.phase_gradient.is_finite()) {
            return Err(Error::invalid("phase_gradient must be > 0"));
        }
        if self.fringe_count == 0 || self.steps_per_leg == 0 || self.beams_per_subbeam == 0 {
            return Err(Error::invalid(
                "fringe_count, steps_per_leg and beams_per_subbeam must be positive",
            ));
        }
        if !(self.electron_speed > 0.0 && self.electron_speed < 1.0) {
            return Err(Error::invalid("electron_speed must lie in (0, 1)"));
        }
        if !(self.source_point.is_finite() && self.screen.origin.is_finite()) {
            return Err(Error::invalid("beam points must be finite"));
        }
        crate::geometry::check_unit(self.screen.normal, "screen normal")?;
        crate::geometry::check_unit(self.screen.axis, "screen axis")?;
        Ok(())
    }

    pub fn fringe_period(&self) -> f64 {
        TAU / self.phase_gradient
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferencePattern {
    pub screen_positions: Vec<f64>,
    pub intensities: Vec<f64>,
    pub fringe_period: f64,
    pub fringe_shift_fraction: f64,
}

/// `x` reduced to `(−0.5, 0.5]`.
pub fn reduce_fraction(x: f64) -> f64 {
    let r = x - x.round();
    if r <= -0.5 {
        r + 1.0
    } else {
        r
    }
}

/// Distance between two period fractions on the unit circle.
pub fn fraction_distance(a: f64, b: f64) -> f64 {
    reduce_fraction(a - b).abs()
}

fn screen_grid(geom: &BeamGeometry, n_samples: usize) -> Result<(Vec<f64>, f64)> {
    geom.validate()?;
    let per_period = n_samples as f64 / geom.fringe_count as f64;
    if per_period < MIN_SAMPLES_PER_PERIOD as f64 {
        return Err(Error::Undersampled { per_period });
    }
    if n_samples % geom.fringe_count != 0 {
        return Err(Error::invalid("samples must be a multiple of fringe_count"));
    }
    let period = geom.fringe_period();
    let step = period * geom.fringe_count as f64 / n_samples as f64;
    let half = (n_samples / 2) as f64;
    Ok(((0..n_samples).map(|k| (k as f64 - half) * step).collect(), period))
}

/// Samples `I(x) = 2 (1 + cos(g x + ΔΦ))` over `fringe_count` periods centred on `x = 0`.
pub fn two_beam_pattern(geom: &BeamGeometry, delta_phi: f64, n_samples: usize) -> Result<InterferencePattern> {
    two_beam_pattern_with_amplitudes(geom, delta_phi, 1.0, 1.0, n_samples)
}

/// Pattern `|a₁|² + |a₂|² + 2 |a₁| |a₂| cos(g x + ΔΦ)` for subbeam amplitude magnitudes `a₁, a₂`.
pub fn two_beam_pattern_with_amplitudes(
    geom: &BeamGeometry,
    delta_phi: f64,
    a1: f64,
    a2: f64,
    n_samples: usize,
) -> Result<InterferencePattern> {
    if !delta_phi.is_finite() {
        return Err(Error::invalid("phase difference must be finite"));
    }
    let (xs, period) = screen_grid(geom, n_samples)?;
    let g = geom.phase_gradient;
    let intensities = xs
        .iter()
        .map(|&x| (a1 * a1 + a2 * a2 + 2.0 * a1 * a2 * (g * x + delta_phi).cos()).max(0.0))
        .collect();
    Ok(InterferencePattern {
        screen_positions: xs,
        intensities,
        fringe_period: period,
        fringe_shift_fraction: reduce_fraction(delta_phi / TAU),
    })
}

/// Shift `s` (in periods) such that `shifted(x) ≈ reference(x + s P)`, from the
/// peak of the circular cross-correlation refined by a parabola through the
/// three samples around it.
pub fn measure_fringe_shift(reference: &InterferencePattern, shifted: &InterferencePattern) -> Result<f64> {
    if reference.screen_positions != shifted.screen_positions
        || reference.intensities.len() != reference.screen_positions.len()
        || shifted.intensities.len() != shifted.screen_positions.len()
        || reference.screen_positions.len() < 3
    {
        return Err(Error::GridMismatch);
    }
    let n = reference.intensities.len();
    let r = &reference.intensities;
    let s = &shifted.intensities;
    let corr = |k: usize| -> f64 { (0..n).map(|i| r[(i + k) % n] * s[i]).sum() };
    let c: Vec<f64> = (0..n).map(corr).collect();
    // periodic patterns tie at every whole period; keep the first
    let best = (0..n).fold(0, |b, k| if c[k] > c[b] + 1e-12 * c[b].abs() { k } else { b });
    let (cm, c0, cp) = (c[(best + n - 1) % n], c[best], c[(best + 1) % n]);
    let curvature = cm - 2.0 * c0 + cp;
    let delta = if curvature < 0.0 { 0.5 * (cm - cp) / curvature } else { 0.0 };
    let step = reference.screen_positions[1] - reference.screen_positions[0];
    Ok(reduce_fraction((best as f64 + delta) * step / reference.fringe_period))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// Both subbeams pass outside the source.
    SameSet,
    /// One subbeam passes through the hole, the other outside.
    CrossSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub delta_phi: f64,
    pub phase: PhaseResult,
    pub pattern: InterferencePattern,
    /// Fringe contrast; 1 for a single path per subbeam.
    pub visibility: f64,
}

/// The two subbeam path families: `(first, second)`, each with
/// `beams_per_subbeam` paths from the source point to the screen origin.
pub fn beam_paths(source: &Source, geom: &BeamGeometry, pairing: Pairing) -> Result<(Vec<Trajectory>, Vec<Trajectory>)> {
    geom.validate()?;
    let ring = source.threading_circle();
    let (a, b) = (geom.source_point, geom.screen.origin);
    let dir = b - a;
    let denom = dir.dot(ring.normal);
    if denom.abs() < 1e-12 * dir.norm() {
        return Err(Error::invalid("beam runs parallel to the source plane"));
    }
    let slit = a + dir * ((ring.center - a).dot(ring.normal) / denom);
    let radial_vec = slit - ring.center;
    let radial = radial_vec
        .normalized()
        .map_err(|_| Error::invalid("beam crosses the source plane on its axis"))?;
    let s = geom.slit_separation;
    let (inner, outer) = match pairing {
        Pairing::CrossSet => (-0.5 * s, 0.5 * s),
        Pairing::SameSet => (0.5 * s, 1.5 * s),
    };
    let n = geom.beams_per_subbeam;
    let family = |offset: f64| -> Result<Vec<Trajectory>> {
        (0..n)
            .map(|j| {
                // ensemble members spread over a quarter slit separation
                let spread = if n == 1 { 0.0 } else { s * 0.25 * (j as f64 / (n - 1) as f64 - 0.5) };
                let waypoint = slit + radial * (offset + spread);
                let traj = Trajectory::polyline(&[a, waypoint, b], geom.electron_speed, geom.steps_per_leg)?;
                check_clearance(&traj, source)?;
                Ok(traj)
            })
            .collect()
    };
    let (first, second) = (family(inner)?, family(outer)?);
    Ok(if geom.swap_beams { (second, first) } else { (first, second) })
}

/// Rejects paths that enter the source tube or come near a filament.
fn check_clearance(traj: &Trajectory, source: &Source) -> Result<()> {
    let core = source.threading_circle();
    let tube = source.tube_radius();
    let margin = tube.max(core.radius * 1e-3);
    for (a, b) in traj.segments() {
        for k in 0..=8 {
            let p = a.position + (b.position - a.position) * (k as f64 / 8.0);
            if core.distance_to(p) <= margin {
                return Err(Error::invalid(
                    "trajectory intersects source geometry",
                ));
            }
        }
    }
    Ok(())
}

/// Phase difference between the subbeams and the resulting pattern. Sources with
/// responsive loops include the liquid back-reaction.
pub fn simulate_experiment(source: &Source, geom: &BeamGeometry, pairing: Pairing, charge: f64) -> Result<Experiment> {
    let (first, second) = beam_paths(source, geom, pairing)?;
    let difference = |l1: &Trajectory, l2: &Trajectory| -> Result<PhaseResult> {
        match source {
            Source::Ring(_) => phase_difference(l1, l2, source, charge),
            _ => total_phase_difference(l1, l2, source, charge),
        }
    };
    if first.len() == 1 {
        let phase = difference(&first[0], &second[0])?;
        let pattern = two_beam_pattern(geom, phase.total, geom.samples)?;
        return Ok(Experiment {
            delta_phi: phase.total,
            phase,
            pattern,
            visibility: 1.0,
        });
    }

    // coherent sum of unit phasors per subbeam, phases relative to the second family's first path
    let reference = &second[0];
    let mut sums = [(0.0, 0.0); 2];
    let mut central = None;
    for (f, family) in [&first, &second].into_iter().enumerate() {
        for traj in family.iter() {
            let p = difference(traj, reference)?;
            if f == 0 && central.is_none() {
                central = Some(p);
            }
            sums[f].0 += p.total.cos();
            sums[f].1 += p.total.sin();
        }
    }
    let n = first.len() as f64;
    let (a1, b1) = (sums[0].0 / n, sums[0].1 / n);
    let (a2, b2) = (sums[1].0 / n, sums[1].1 / n);
    let amp1 = a1.hypot(b1);
    let amp2 = a2.hypot(b2);
    let delta_phi = b1.atan2(a1) - b2.atan2(a2);
    let delta_phi = delta_phi - TAU * (delta_phi / TAU).round();
    let pattern = two_beam_pattern_with_amplitudes(geom, delta_phi, amp1, amp2, geom.samples)?;
    let visibility = 2.0 * amp1 * amp2 / (amp1 * amp1 + amp2 * amp2).max(f64::MIN_POSITIVE);
    Ok(Experiment {
        delta_phi,
        phase: central.unwrap_or_else(PhaseResult::zero),
        pattern,
        visibility,
    })
}

/// Fringe shift expected for a phase difference, in periods.
pub fn expected_shift(delta_phi: f64) -> f64 {
    reduce_fraction(delta_phi / (2.0 * PI))
}
