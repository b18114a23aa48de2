//! Closed forms and production algorithms checked against independent,
//! brute-force evaluations kept here.

use std::f64::consts::{PI, TAU};

use ablab::backreaction::{
    coil_total_phase, emf_time_chain, interaction_lagrangian, interaction_lagrangian_reciprocal,
    liquid_kinetic_energy_change, total_phase,
};
use ablab::elliptic::complete_elliptic;
use ablab::phase::{path_phase, stokes_residual};
use ablab::quadrature::{integrate, integrate_1d, AdaptiveOptions};
use ablab::sources::{
    biot_savart_reference, circulation, coil_magnetic_field, flux_through_disk, loop_magnetic_field,
    loop_vector_potential,
};
use ablab::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn vrel(a: Vec3, b: Vec3) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
}

fn tilted_loop() -> CurrentLoop {
    let n = Vec3::new(0.3, -0.2, 0.9).normalized().unwrap();
    CurrentLoop::new(Vec3::new(0.4, -0.1, 0.2), n, 1.3, 0.8).unwrap()
}

// ---- quadrature and elliptic integrals ----

#[test]
fn quadrature_textbook_integrals() {
    let q = integrate_1d(|x| x * x, 0.0, 1.0, 1e-12).unwrap();
    assert!((q.value - 1.0 / 3.0).abs() < 1e-12);
    let q = integrate_1d(f64::sin, 0.0, PI, 1e-12).unwrap();
    assert!((q.value - 2.0).abs() < 1e-12);
    let q = integrate_1d(|x| 1.0 / x.sqrt(), 1e-8, 1.0, 1e-10).unwrap();
    assert!((q.value - 2.0 * (1.0 - 1e-4)).abs() < 1e-10);
}

#[test]
fn elliptic_matches_direct_quadrature_of_defining_integrals() {
    let opts = AdaptiveOptions::relative(1e-15, 1e-15);
    for m in [0.1, 0.5, 0.9, 0.999] {
        let k = integrate(|t: f64| 1.0 / (1.0 - m * t.sin().powi(2)).sqrt(), 0.0, PI / 2.0, &opts)
            .unwrap()
            .value;
        let e = integrate(|t: f64| (1.0 - m * t.sin().powi(2)).sqrt(), 0.0, PI / 2.0, &opts)
            .unwrap()
            .value;
        let (kc, ec) = complete_elliptic(m).unwrap();
        assert!((kc - k).abs() < 1e-12, "K({m}): {kc} vs {k}");
        assert!((ec - e).abs() < 1e-12, "E({m}): {ec} vs {e}");
    }
}

// ---- linking number ----

/// Gauss double integral over a polyline and a circle, midpoint rule.
fn gauss_linking(path: &Trajectory, ring: &Circle, per_segment: usize, ring_points: usize) -> f64 {
    let frame = Frame::from_normal(ring.center, ring.normal).unwrap();
    let ring_pts: Vec<(Vec3, Vec3)> = (0..ring_points)
        .map(|j| {
            let th = TAU * (j as f64 + 0.5) / ring_points as f64;
            let (s, c) = th.sin_cos();
            let p = frame.point(ring.radius * c, ring.radius * s, 0.0);
            let dl = (frame.w * c - frame.u * s) * (ring.radius * TAU / ring_points as f64);
            (p, dl)
        })
        .collect();
    let mut sum = 0.0;
    for (a, b) in path.segments() {
        let d = (b.position - a.position) / per_segment as f64;
        for i in 0..per_segment {
            let p = a.position + d * (i as f64 + 0.5);
            for &(q, dl) in &ring_pts {
                let r = p - q;
                sum += r.dot(d.cross(dl)) / r.norm().powi(3);
            }
        }
    }
    sum / (4.0 * PI)
}

#[test]
fn linking_number_matches_gauss_integral() {
    let ring = Circle::new(Vec3::ZERO, Vec3::Z, 1.0).unwrap();
    let once = Trajectory::polyline(
        &[
            Vec3::new(0.5, 0.0, -1.0),
            Vec3::new(0.5, 0.0, 1.0),
            Vec3::new(2.0, 0.0, 1.0),
            Vec3::new(2.0, 0.0, -1.0),
            Vec3::new(0.5, 0.0, -1.0),
        ],
        1.0,
        1,
    )
    .unwrap();
    let twice = Trajectory::polyline(
        &[
            Vec3::new(0.5, 0.0, -1.0),
            Vec3::new(0.5, 0.0, 1.0),
            Vec3::new(2.0, 0.0, 1.0),
            Vec3::new(2.0, 0.0, -1.0),
            Vec3::new(0.0, 0.5, -1.0),
            Vec3::new(0.0, 0.5, 1.0),
            Vec3::new(0.0, 2.0, 1.0),
            Vec3::new(0.0, 2.0, -1.0),
            Vec3::new(0.5, 0.0, -1.0),
        ],
        1.0,
        1,
    )
    .unwrap();
    let outside = Trajectory::polyline(
        &[
            Vec3::new(2.0, -1.0, 0.5),
            Vec3::new(4.0, -1.0, 0.5),
            Vec3::new(4.0, 1.0, -0.5),
            Vec3::new(2.0, 1.0, -0.5),
            Vec3::new(2.0, -1.0, 0.5),
        ],
        1.0,
        1,
    )
    .unwrap();
    for (path, expected) in [(&once, 1), (&twice, 2), (&outside, 0)] {
        let gauss = gauss_linking(path, &ring, 400, 800);
        assert!((gauss - f64::from(expected)).abs() < 0.02, "gauss {gauss}");
        assert_eq!(linking_number(path, &ring).unwrap(), expected);
        assert_eq!(linking_number(&path.reversed(), &ring).unwrap(), -expected);
    }
}

// ---- loop fields ----

#[test]
fn closed_form_matches_quadrature_at_reference_point() {
    let lp = CurrentLoop::new(Vec3::ZERO, Vec3::Z, 1.0, 1.0).unwrap();
    let p = Vec3::new(2.0, 0.0, 1.0);
    let (a, b) = biot_savart_reference(&lp, p).unwrap();
    assert!(vrel(loop_vector_potential(&lp, p).unwrap(), a) < 1e-9);
    assert!(vrel(loop_magnetic_field(&lp, p).unwrap(), b) < 1e-9);
    // centre field 2π I / R
    let (_, b0) = biot_savart_reference(&lp, Vec3::ZERO).unwrap();
    assert!(rel(b0.z, TAU) < 1e-12);
    assert!(rel(loop_magnetic_field(&lp, Vec3::ZERO).unwrap().z, b0.z) < 1e-12);
}

#[test]
fn closed_form_matches_quadrature_at_random_points() {
    let lp = tilted_loop();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 100 {
        let p = lp.center() + Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        if lp.distance_to_wire(p) <= 0.1 * lp.radius() {
            continue;
        }
        let (a, b) = biot_savart_reference(&lp, p).unwrap();
        assert!(vrel(loop_vector_potential(&lp, p).unwrap(), a) < 1e-9, "A at {p:?}");
        assert!(vrel(loop_magnetic_field(&lp, p).unwrap(), b) < 1e-9, "B at {p:?}");
        checked += 1;
    }
}

fn fd_curl(lp: &CurrentLoop, p: Vec3, h: f64) -> Vec3 {
    let a = |q: Vec3| loop_vector_potential(lp, q).unwrap();
    let d = |e: Vec3| (a(p + e * h) - a(p - e * h)) / (2.0 * h);
    let (dx, dy, dz) = (d(Vec3::X), d(Vec3::Y), d(Vec3::Z));
    Vec3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x)
}

#[test]
fn field_is_curl_of_potential() {
    let lp = tilted_loop();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 30 {
        let p = lp.center() + Vec3::new(rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5));
        if lp.distance_to_wire(p) <= 0.1 * lp.radius() {
            continue;
        }
        let curl = fd_curl(&lp, p, 1e-5 * lp.radius());
        assert!(vrel(loop_magnetic_field(&lp, p).unwrap(), curl) < 1e-6, "at {p:?}");
        checked += 1;
    }
}

#[test]
fn reference_far_field_falls_off_as_cube() {
    let lp = CurrentLoop::new(Vec3::ZERO, Vec3::Z, 1.0, 1.0).unwrap();
    let dir = Vec3::new(0.6, 0.0, 0.8);
    let ds: Vec<f64> = (0..10).map(|k| 10.0 * 10f64.powf(k as f64 / 9.0)).collect();
    let pts: Vec<(f64, f64)> = ds
        .iter()
        .map(|&d| (d.ln(), biot_savart_reference(&lp, dir * d).unwrap().1.norm().ln()))
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x, b + x * y));
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!((slope + 3.0).abs() < 0.05, "slope {slope}");
}

// ---- coil ----

#[test]
fn three_loop_coil_centre_dominated_by_own_loop() {
    let coil = ToroidalCoil::new(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 3, 1.0, 1.0).unwrap();
    let lp = &coil.loops()[0];
    let own = loop_magnetic_field(lp, lp.center()).unwrap();
    let total = coil_magnetic_field(&coil, lp.center()).unwrap();
    assert!(vrel(total, own) < 0.2);
}

#[test]
fn coil_axis_field_is_confined() {
    let coil = ToroidalCoil::for_flux(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 720, 1.0, 1.0).unwrap();
    for z in [0.0, 2.0, 5.0] {
        let b = coil.magnetic_field(Vec3::new(0.0, 0.0, z)).unwrap();
        assert!(b.norm() <= 1e-3 * coil.interior_field_scale());
    }
}

#[test]
fn coil_fields_scale_with_charge_density() {
    let coil = ToroidalCoil::new(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 24, 0.7, 0.3).unwrap();
    let doubled = coil.with_linear_charge_density(1.4).unwrap();
    let p = Vec3::new(0.3, 1.4, -0.2);
    assert_eq!(doubled.vector_potential(p).unwrap(), coil.vector_potential(p).unwrap() * 2.0);
    assert_eq!(doubled.magnetic_field(p).unwrap(), coil.magnetic_field(p).unwrap() * 2.0);
}

#[test]
fn coil_flux_satisfies_stokes_and_linearity() {
    let coil = ToroidalCoil::for_flux(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 360, 1.0, 1.0).unwrap();
    let disk = coil.threading_disk();
    let flux = flux_through_disk(&coil, &disk).unwrap().value;
    let circ = circulation(&coil, &disk.boundary(), &AdaptiveOptions::relative(1e-12, 1e-14))
        .unwrap()
        .value;
    assert!(rel(flux, circ) < 1e-6, "{flux} vs {circ}");
    assert!(rel(flux, coil.ideal_flux()) < 1e-6);

    let far = Disk::new(Vec3::new(5.0, 5.0, 5.0), Vec3::Z, 0.1).unwrap();
    assert!(flux_through_disk(&coil, &far).unwrap().value.abs() < 1e-6 * flux.abs());

    let lp = CurrentLoop::new(Vec3::ZERO, Vec3::Z, 1.0, 1.0).unwrap();
    let d = Disk::new(Vec3::new(0.0, 0.0, 0.5), Vec3::Z, 0.7).unwrap();
    let f1 = flux_through_disk(&lp, &d).unwrap().value;
    let f3 = flux_through_disk(&lp.with_current(3.0), &d).unwrap().value;
    assert!(rel(f3, 3.0 * f1) < 1e-10);
}

#[test]
fn stokes_residual_for_loop_and_coil() {
    // coaxial circle of twice the loop radius, lifted off the wire plane
    let lp = CurrentLoop::new(Vec3::ZERO, Vec3::Z, 1.0, 1.0).unwrap();
    let disk = Disk::new(Vec3::new(0.0, 0.0, 0.5), Vec3::Z, 2.0).unwrap();
    let contour = Trajectory::circle(&disk.boundary(), 0.01, 256).unwrap();
    let r = stokes_residual(&contour, &disk, &lp).unwrap();
    assert!(r.residual <= 1e-6 * r.flux.abs(), "{r:?}");
    let none = stokes_residual(&contour, &disk, &lp.with_current(0.0)).unwrap();
    assert!(none.residual < 1e-14);

    let coil = ToroidalCoil::for_flux(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 360, 2.0, 1.0).unwrap();
    let disk = coil.threading_disk();
    let contour = Trajectory::circle(&disk.boundary(), 0.01, 256).unwrap();
    let r = stokes_residual(&contour, &disk, &coil).unwrap();
    assert!(r.residual <= 1e-6 * r.flux.abs(), "{r:?}");
    assert!(rel(r.flux, 2.0) < 1e-6);
}

#[test]
fn discrete_ring_flux_matches_nominal() {
    let ring = InertFluxRing::new(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 1.7)
        .unwrap()
        .with_mode(RingMode::Discrete { loop_count: 360 })
        .unwrap();
    let coil = ring.discrete_coil().unwrap();
    assert!(rel(coil.threaded_flux().unwrap().value, 1.7) < 1e-6);
}

// ---- phases ----

#[test]
fn path_phase_matches_dense_riemann_sum() {
    let lp = CurrentLoop::new(Vec3::ZERO, Vec3::Z, 1.0, 1.0).unwrap();
    let (a, b) = (Vec3::new(-20.0, 1.5, 0.3), Vec3::new(20.0, 1.5, 0.3));
    let traj = Trajectory::polyline(&[a, b], 0.01, 50).unwrap();
    let steps = 1_000_000;
    let dx = (b - a) / steps as f64;
    let mut sum = 0.0;
    for i in 0..steps {
        sum += loop_vector_potential(&lp, a + dx * (i as f64 + 0.5)).unwrap().dot(dx);
    }
    let q = -1.0;
    let phase = path_phase(&traj, &lp, q).unwrap();
    assert!((phase + q * sum).abs() < 1e-8, "{phase} vs {}", -q * sum);
    assert!(phase.abs() > 1e-3);
}

#[test]
fn ring_phase_from_potential_equals_linking_times_flux() {
    let ring = InertFluxRing::new(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 0.9).unwrap();
    let loop_path = Trajectory::polyline(
        &[
            Vec3::new(0.4, 0.0, -1.0),
            Vec3::new(0.4, 0.0, 1.0),
            Vec3::new(1.8, 0.0, 1.0),
            Vec3::new(1.8, 0.0, -1.0),
            Vec3::new(0.4, 0.0, -1.0),
        ],
        0.01,
        64,
    )
    .unwrap();
    let lk = linking_number(&loop_path, &ring.core_circle()).unwrap();
    let phase = path_phase(&loop_path, &ring, -1.0).unwrap();
    assert_eq!(lk, 1);
    assert!((phase - ablab::sources::ring_phase_flux(&ring, lk)).abs() < 1e-9);
}

// ---- back-reaction ----

#[test]
fn interaction_routes_agree_and_cancel() {
    let lp = tilted_loop();
    let e = ElectronState::electron(Vec3::new(1.9, -0.3, 0.8), Vec3::new(0.03, -0.02, 0.05)).unwrap();
    let l = interaction_lagrangian(&lp, &e).unwrap();
    let r = interaction_lagrangian_reciprocal(&lp, &e).unwrap();
    let t = liquid_kinetic_energy_change(&lp, &e).unwrap();
    assert!(rel(l, r) < 1e-10);
    assert!((l + t).abs() <= 1e-12 * l.abs());
}

#[test]
fn kinetic_energy_change_falls_off_as_dipole() {
    // the monopole term of ∮ dl / r vanishes, leaving a 1/r² tail
    let lp = CurrentLoop::new(Vec3::ZERO, Vec3::Z, 1.0, 1.0).unwrap();
    let dir = Vec3::new(0.0, 0.6, 0.8);
    let v = Vec3::new(0.02, 0.0, 0.0);
    let pts: Vec<(f64, f64)> = (0..10)
        .map(|k| {
            let r = 10.0 * 10f64.powf(k as f64 / 9.0);
            let e = ElectronState::electron(dir * r, v).unwrap();
            (r.ln(), liquid_kinetic_energy_change(&lp, &e).unwrap().abs().ln())
        })
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x, b + x * y));
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!((slope + 2.0).abs() < 0.1, "slope {slope}");
}

fn flyby(lp: &CurrentLoop, distance: f64, steps: usize) -> Trajectory {
    let off = Vec3::new(0.0, 1.5, 0.0);
    let d = distance * lp.radius() + off.norm();
    Trajectory::polyline(&[off - Vec3::X * d, off + Vec3::X * d], 0.01, steps).unwrap()
}

#[test]
fn emf_chain_endpoints_and_midpoint() {
    let lp = CurrentLoop::new(Vec3::ZERO, Vec3::Z, 1.0, 1.0).unwrap();
    let traj = flyby(&lp, 200.0, 10_000);
    let start = emf_time_chain(&lp, &traj, traj.t_start()).unwrap();
    assert_eq!(start.integrated, 0.0);
    assert!(start.closed_form.abs() <= 1e-6 * start.peak);

    let end = emf_time_chain(&lp, &traj, traj.t_end()).unwrap();
    assert!(end.integrated.abs() <= 1e-6 * end.peak);
    assert!(end.closed_form.abs() <= 1e-6 * end.peak);

    let mid = emf_time_chain(&lp, &traj, 0.5 * (traj.t_start() + traj.t_end()) + 3.3).unwrap();
    assert!((mid.integrated - mid.closed_form).abs() <= 1e-6 * mid.peak);
    assert!(mid.closed_form.abs() > 0.1 * mid.peak);
}

#[test]
fn coil_phase_cancels_for_generic_flyby() {
    let coil = ToroidalCoil::new(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 36, 1.0, 0.02).unwrap();
    let traj = Trajectory::polyline(&[Vec3::new(-5.0, 0.3, -2.0), Vec3::new(5.0, 0.5, 2.0)], 0.01, 40).unwrap();
    let r = coil_total_phase(&traj, &coil).unwrap();
    assert!(r.interaction_term.abs() > 1e-6);
    assert!(r.total.abs() <= 1e-10 * r.interaction_term.abs(), "{r:?}");
    assert_eq!(r.total, r.interaction_term + r.backreaction_term);

    let idle = coil.with_linear_charge_density(0.0).unwrap();
    let z = coil_total_phase(&traj, &idle).unwrap();
    assert_eq!((z.total, z.interaction_term, z.backreaction_term), (0.0, 0.0, 0.0));
}

#[test]
fn inert_ring_phase_has_no_backreaction() {
    let ring = Source::Ring(InertFluxRing::new(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 1.0).unwrap());
    let traj = Trajectory::polyline(
        &[Vec3::new(1.0, 0.0, -10.0), Vec3::new(0.5, 0.0, 0.0), Vec3::new(1.0, 0.0, 10.0)],
        0.01,
        32,
    )
    .unwrap();
    let r = total_phase(&traj, &ring, -1.0).unwrap();
    assert_eq!(r.backreaction_term, 0.0);
    assert_eq!(r.total, r.interaction_term);
    assert!(r.total.abs() > 1e-3);
}
