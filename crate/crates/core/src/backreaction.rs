//! Response of a charged-liquid loop to the passing electron.
//!
//! The electron at `x_e` with velocity `v_e` carries the quasi-static potential
//! `A_e(x) = q v_e / |x − x_e|`. For a loop with current `I = ρ v`:
//!
//! ```text
//! L_int = q v_e · A(x_e)  = q I ∮ v_e · dl / r
//! ΔT    = −I ∮ A_e · dl   = −q I ∮ v_e · dl / r
//! ```
//!
//! so `L_int + ΔT = 0` at every instant. `ΔT` is also the time integral of the
//! EMF `I ∮ E_e · dl = −I d/dt ∮ A_e · dl` starting from a distant electron.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Trajectory, Vec3};
use crate::phase::{enclosed_flux_term, ElectronState, PhaseResult, ENDPOINT_TOLERANCE, PATH_TOLERANCE};
use crate::quadrature::{try_integrate, try_integrate_vec, AdaptiveOptions};
use crate::sources::{loop_vector_potential, CurrentLoop, Source, ToroidalCoil};

/// Relative tolerance of the loop line integrals.
pub const LOOP_REL_TOL: f64 = 1e-12;

/// `A_e` is undefined within this distance of the electron.
pub const COINCIDENCE_DISTANCE: f64 = 1e-9;

/// Minimum start distance, in loop radii, for [`emf_time_chain`].
pub const FAR_START: f64 = 50.0;

/// Start-boundary defect `|ΔT(t₀)|`, relative to the peak, above which a warning is logged.
pub const BOUNDARY_DEFECT_WARNING: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackreactionRecord {
    pub time: f64,
    pub interaction_lagrangian: f64,
    pub delta_t: f64,
    /// `ρ v ∮ E_e · dl`
    pub emf_integrand: f64,
}

/// Quasi-static vector potential `q v / r` of the moving electron.
pub fn electron_vector_potential(e: &ElectronState, point: Vec3) -> Result<Vec3> {
    let r = point.distance(e.position);
    if r <= COINCIDENCE_DISTANCE {
        return Err(Error::CoincidentPoint);
    }
    Ok(e.velocity * (e.charge / r))
}

fn loop_options() -> AdaptiveOptions {
    AdaptiveOptions::relative(LOOP_REL_TOL, 0.0)
}

fn loop_integral<F>(lp: &CurrentLoop, mut f: F) -> Result<f64>
where
    F: FnMut(Vec3, Vec3) -> Result<f64>,
{
    Ok(try_integrate(
        |theta| f(lp.wire_point(theta), lp.wire_tangent(theta)),
        0.0,
        TAU,
        &loop_options(),
    )?
    .value)
}

/// `∮ A_e · dl` around the loop wire, traversed along the current.
pub fn electron_circulation(lp: &CurrentLoop, e: &ElectronState) -> Result<f64> {
    lp.check_clearance(e.position)?;
    loop_integral(lp, |x, dl| Ok(electron_vector_potential(e, x)?.dot(dl)))
}

/// Interaction term `q I ∮ v_e · dl / r` by quadrature over the loop.
pub fn interaction_lagrangian(lp: &CurrentLoop, e: &ElectronState) -> Result<f64> {
    lp.check_clearance(e.position)?;
    let v = e.velocity;
    let x = e.position;
    let s = loop_integral(lp, |xl, dl| Ok(v.dot(dl) / xl.distance(x)))?;
    Ok(e.charge * lp.current() * s)
}

/// Interaction term from the loop potential at the electron, `q v_e · A(x_e)`.
pub fn interaction_lagrangian_reciprocal(lp: &CurrentLoop, e: &ElectronState) -> Result<f64> {
    Ok(e.charge * e.velocity.dot(loop_vector_potential(lp, e.position)?))
}

/// Kinetic-energy change `ΔT = −I ∮ A_e · dl` of the loop liquid.
pub fn liquid_kinetic_energy_change(lp: &CurrentLoop, e: &ElectronState) -> Result<f64> {
    Ok(-lp.current() * electron_circulation(lp, e)?)
}

/// `(L_int, ΔT)` from a single shared quadrature over the loop.
fn loop_pair(lp: &CurrentLoop, e: &ElectronState) -> Result<[f64; 2]> {
    lp.check_clearance(e.position)?;
    if lp.current() == 0.0 || e.velocity.norm_squared() == 0.0 {
        return Ok([0.0, 0.0]);
    }
    let (x, v) = (e.position, e.velocity);
    let q = try_integrate_vec(
        |theta| {
            let xl = lp.wire_point(theta);
            let dl = lp.wire_tangent(theta);
            Ok([v.dot(dl) / xl.distance(x), electron_vector_potential(e, xl)?.dot(dl)])
        },
        0.0,
        TAU,
        &loop_options(),
    )?;
    let i = lp.current();
    Ok([e.charge * i * q.value[0], -i * q.value[1]])
}

/// Instantaneous record for `lp` with the EMF term left at zero.
pub fn record(lp: &CurrentLoop, e: &ElectronState, time: f64) -> Result<BackreactionRecord> {
    Ok(BackreactionRecord {
        time,
        interaction_lagrangian: interaction_lagrangian(lp, e)?,
        delta_t: liquid_kinetic_energy_change(lp, e)?,
        emf_integrand: 0.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainResult {
    /// `∫ ρ v ∮ E_e · dl dt` from the trajectory start to `t`.
    pub integrated: f64,
    /// `ΔT` at the state at `t`.
    pub closed_form: f64,
    /// `|ΔT|` at the trajectory start, the truncation of the infinite past.
    pub start_defect: f64,
    /// Largest `|ΔT|` over the trajectory samples.
    pub peak: f64,
    /// Per-sample records up to and including `t`.
    pub records: Vec<BackreactionRecord>,
}

/// Time-integrated EMF on `lp` versus the closed form `ΔT`, for the default
/// electron charge. The EMF is `−I d/dt ∮ A_e · dl` by central differences
/// centred on the half steps between samples, integrated by the midpoint rule.
pub fn emf_time_chain(lp: &CurrentLoop, traj: &Trajectory, t: f64) -> Result<ChainResult> {
    emf_time_chain_with_charge(lp, traj, t, crate::phase::ELECTRON_CHARGE)
}

pub fn emf_time_chain_with_charge(
    lp: &CurrentLoop,
    traj: &Trajectory,
    t: f64,
    charge: f64,
) -> Result<ChainResult> {
    let start_distance = traj.start().distance(lp.center());
    if start_distance < FAR_START * lp.radius() {
        return Err(Error::invalid(format!(
            "trajectory starts {} loop radii from the loop; at least {FAR_START} required",
            start_distance / lp.radius()
        )));
    }
    let (t0, t1) = (traj.t_start(), traj.t_end());
    if !(t >= t0 && t <= t1) {
        return Err(Error::OutsideSpan { t, start: t0, end: t1 });
    }

    let samples = traj.samples();
    let states = samples
        .iter()
        .map(|s| ElectronState::new(s.position, s.velocity, charge))
        .collect::<Result<Vec<_>>>()?;
    let circ = states
        .par_iter()
        .map(|e| electron_circulation(lp, e))
        .collect::<Result<Vec<_>>>()?;
    let i = lp.current();
    let n = samples.len();
    let time = |k: usize| samples[k].t;
    // EMF at the half steps: −I (Φ_{k+1} − Φ_k) / (t_{k+1} − t_k)
    let emf = (0..n - 1)
        .map(|k| -i * (circ[k + 1] - circ[k]) / (time(k + 1) - time(k)))
        .collect::<Vec<_>>();
    let peak = circ.iter().fold(0.0f64, |m, c| m.max((i * c).abs()));
    let start_defect = (i * circ[0]).abs();
    if start_defect > BOUNDARY_DEFECT_WARNING * peak {
        log::warn!(
            "start-boundary defect {start_defect:e} exceeds {BOUNDARY_DEFECT_WARNING:e} x peak {peak:e}"
        );
    }

    let (x, v) = traj.state_at(t)?;
    let state = ElectronState::new(x, v, charge)?;
    let mut records = Vec::new();
    let mut integrated = 0.0;
    for k in 0..n {
        let emf_here = if k == 0 {
            emf.first().copied().unwrap_or(0.0)
        } else if k == n - 1 {
            emf[k - 1]
        } else {
            0.5 * (emf[k - 1] + emf[k])
        };
        records.push(BackreactionRecord {
            time: time(k),
            interaction_lagrangian: i * circ[k],
            delta_t: -i * circ[k],
            emf_integrand: emf_here,
        });
        if k + 1 == n || time(k + 1) > t {
            if t > time(k) {
                // partial step to t
                let emf_partial = -i * (electron_circulation(lp, &state)? - circ[k]) / (t - time(k));
                integrated += emf_partial * (t - time(k));
            }
            break;
        }
        integrated += emf[k] * (time(k + 1) - time(k));
    }

    let closed_form = liquid_kinetic_energy_change(lp, &state)?;
    Ok(ChainResult {
        integrated,
        closed_form,
        start_defect,
        peak,
        records,
    })
}

/// Time integral of `[Σ L_int, Σ ΔT]` over the loops along `traj`, with
/// positions linear in time between samples.
fn time_integrals(traj: &Trajectory, loops: &[CurrentLoop], charge: f64) -> Result<([f64; 2], f64)> {
    let samples = traj.samples();
    let segments = samples.len() - 1;
    let opts = AdaptiveOptions::absolute(PATH_TOLERANCE / segments as f64);
    let parts = samples
        .par_windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let dt = b.t - a.t;
            let v = (b.position - a.position) / dt;
            let q = try_integrate_vec(
                |t| {
                    let e = ElectronState {
                        position: a.position + v * (t - a.t),
                        velocity: v,
                        charge,
                    };
                    let mut sum = [0.0; 2];
                    for (k, lp) in loops.iter().enumerate() {
                        let [l, dt] = loop_pair(lp, &e).map_err(|err| err.with_loop_index(k))?;
                        sum[0] += l;
                        sum[1] += dt;
                    }
                    Ok(sum)
                },
                a.t,
                b.t,
                &opts,
            )?;
            Ok((q.value, q.error))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = [0.0; 2];
    let mut error = 0.0;
    for (v, e) in parts {
        total[0] += v[0];
        total[1] += v[1];
        error += e;
    }
    Ok((total, error))
}

/// Phase along `traj` including the response of every responsive loop of
/// `source`. Terms follow the path-phase sign: `interaction_term = −∫ Σ L_int dt`
/// (equal to `−q ∫ A · dx`) and `backreaction_term = −∫ Σ ΔT dt`. An inert ring
/// has no responsive loops and contributes its path phase alone.
pub fn total_phase(traj: &Trajectory, source: &Source, charge: f64) -> Result<PhaseResult> {
    if let Source::Ring(ring) = source {
        let p = crate::phase::line_integral(traj, ring, PATH_TOLERANCE)?;
        let interaction = -charge * p.value;
        return Ok(PhaseResult {
            total: interaction,
            interaction_term: interaction,
            backreaction_term: 0.0,
            flux_term: None,
            error_estimate: charge.abs() * p.error,
        });
    }
    responsive_phase(traj, source.responsive_loops(), charge)
}

fn responsive_phase(traj: &Trajectory, loops: &[CurrentLoop], charge: f64) -> Result<PhaseResult> {
    let ([l, dt], error) = time_integrals(traj, loops, charge)?;
    Ok(PhaseResult {
        total: -(l + dt),
        interaction_term: -l,
        backreaction_term: -dt,
        flux_term: None,
        error_estimate: error,
    })
}

/// [`total_phase`] for a coil and the default electron charge.
pub fn coil_total_phase(traj: &Trajectory, coil: &ToroidalCoil) -> Result<PhaseResult> {
    responsive_phase(traj, coil.loops(), crate::phase::ELECTRON_CHARGE)
}

/// Difference of [`total_phase`] between two paths with common endpoints.
pub fn total_phase_difference(
    l1: &Trajectory,
    l2: &Trajectory,
    source: &Source,
    charge: f64,
) -> Result<PhaseResult> {
    let gap = l1.start().distance(l2.start()).max(l1.end().distance(l2.end()));
    if gap > ENDPOINT_TOLERANCE {
        return Err(Error::EndpointMismatch { gap });
    }
    let p1 = total_phase(l1, source, charge)?;
    let p2 = total_phase(l2, source, charge)?;
    let interaction = p1.interaction_term - p2.interaction_term;
    let backreaction = p1.backreaction_term - p2.backreaction_term;
    Ok(PhaseResult {
        total: interaction + backreaction,
        interaction_term: interaction,
        backreaction_term: backreaction,
        flux_term: enclosed_flux_term(l1, l2, source, charge)?,
        error_estimate: p1.error_estimate + p2.error_estimate,
    })
}
