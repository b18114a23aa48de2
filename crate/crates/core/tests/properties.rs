use std::f64::consts::{PI, TAU};

use ablab::backreaction::coil_total_phase;
use ablab::elliptic::complete_elliptic;
use ablab::interference::{measure_fringe_shift, simulate_experiment, two_beam_pattern};
use ablab::phase::{path_phase, phase_difference};
use ablab::quadrature::{integrate, AdaptiveOptions};
use ablab::sources::flux_through_disk;
use ablab::*;
use proptest::prelude::*;

fn unit_vector() -> impl Strategy<Value = Vec3> {
    (0.0..TAU, -1.0f64..1.0).prop_map(|(phi, c)| {
        let s = (1.0 - c * c).sqrt();
        Vec3::new(s * phi.cos(), s * phi.sin(), c)
    })
}

fn rotation() -> impl Strategy<Value = Rotation> {
    (unit_vector(), 0.0..TAU).prop_map(|(axis, angle)| Rotation::about_axis(axis, angle).unwrap())
}

fn threading_rectangle() -> Trajectory {
    Trajectory::polyline(
        &[
            Vec3::new(0.5, 0.1, -1.0),
            Vec3::new(0.5, 0.1, 1.0),
            Vec3::new(2.0, -0.2, 1.0),
            Vec3::new(2.0, -0.2, -1.0),
            Vec3::new(0.5, 0.1, -1.0),
        ],
        0.01,
        3,
    )
    .unwrap()
}

fn generic_chord() -> Trajectory {
    Trajectory::polyline(
        &[Vec3::new(-4.0, 0.7, -1.0), Vec3::new(0.3, 1.6, 0.4), Vec3::new(4.0, 0.2, 1.0)],
        0.01,
        12,
    )
    .unwrap()
}

fn loop_source() -> CurrentLoop {
    CurrentLoop::new(Vec3::new(0.1, 0.0, -0.2), Vec3::new(0.0, 0.6, 0.8), 1.0, 1.3).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quadrature_is_linear(
        f in prop::collection::vec(-2.0f64..2.0, 6),
        g in prop::collection::vec(-2.0f64..2.0, 6),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let tol = 1e-12;
        let poly = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, k| acc * x + k);
        let opts = AdaptiveOptions::absolute(tol);
        let lhs = integrate(|x| a * poly(&f, x) + b * poly(&g, x), -1.0, 2.0, &opts).unwrap().value;
        let fi = integrate(|x| poly(&f, x), -1.0, 2.0, &opts).unwrap().value;
        let gi = integrate(|x| poly(&g, x), -1.0, 2.0, &opts).unwrap().value;
        prop_assert!((lhs - (a * fi + b * gi)).abs() <= 10.0 * tol);
    }

    #[test]
    fn legendre_relation(m in 1e-6f64..(1.0 - 1e-6)) {
        let (k, e) = complete_elliptic(m).unwrap();
        let (kc, ec) = complete_elliptic(1.0 - m).unwrap();
        prop_assert!((e * kc + ec * k - k * kc - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn linking_invariant_under_rotation_and_refinement(rot in rotation(), extra in 1usize..5) {
        let ring = Circle::new(Vec3::ZERO, Vec3::Z, 1.0).unwrap();
        let path = threading_rectangle();
        let base = linking_number(&path, &ring).unwrap();
        let moved = path.transformed(&rot, Vec3::ZERO);
        let moved_ring = Circle::new(rot.apply(ring.center), rot.apply(ring.normal), ring.radius).unwrap();
        prop_assert_eq!(linking_number(&moved, &moved_ring).unwrap(), base);
        prop_assert_eq!(linking_number(&path.refined(extra), &ring).unwrap(), base);
        prop_assert_eq!(linking_number(&path.reversed(), &ring).unwrap(), -base);
    }

    #[test]
    fn field_is_divergence_free(x in -2.0f64..2.0, y in -2.0f64..2.0, z in -2.0f64..2.0) {
        let lp = loop_source();
        let p = Vec3::new(x, y, z);
        prop_assume!(lp.distance_to_wire(p) > 0.1);
        let h = 1e-4;
        let b = |q: Vec3| lp.magnetic_field(q).unwrap();
        let div = (b(p + Vec3::X * h).x - b(p - Vec3::X * h).x
            + b(p + Vec3::Y * h).y - b(p - Vec3::Y * h).y
            + b(p + Vec3::Z * h).z - b(p - Vec3::Z * h).z) / (2.0 * h);
        prop_assert!(div.abs() <= 1e-6 * b(p).norm() / h);
    }

    #[test]
    fn flux_invariant_under_rigid_rotation(rot in rotation()) {
        let lp = loop_source();
        let disk = Disk::new(Vec3::new(0.2, 0.3, 0.6), Vec3::new(0.0, 0.6, 0.8), 1.5).unwrap();
        let f0 = flux_through_disk(&lp, &disk).unwrap().value;
        let f1 = flux_through_disk(&lp.rotated(&rot), &disk.rotated(&rot)).unwrap().value;
        prop_assert!((f0 - f1).abs() <= 1e-9 * f0.abs());
    }

    #[test]
    fn path_phase_reverses_and_adds(split in 1usize..23, charge in -3.0f64..3.0) {
        let lp = loop_source();
        let path = generic_chord();
        let whole = path_phase(&path, &lp, charge).unwrap();
        let back = path_phase(&path.reversed(), &lp, charge).unwrap();
        prop_assert!((whole + back).abs() <= 1e-12 * whole.abs().max(1.0));
        let (a, b) = path.split_at(split).unwrap();
        let parts = path_phase(&a, &lp, charge).unwrap() + path_phase(&b, &lp, charge).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(1.0));
    }

    #[test]
    fn deformation_outside_the_ring_leaves_phase_unchanged(r in 1.3f64..3.0, phi in -1.0f64..1.0, h in -0.5f64..0.5) {
        let ring = Source::Ring(InertFluxRing::new(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 1.3).unwrap());
        let (s, e) = (Vec3::new(2.0, 0.0, -3.0), Vec3::new(2.0, 0.0, 3.0));
        let straight = Trajectory::polyline(&[s, e], 0.01, 24).unwrap();
        let bent = Trajectory::polyline(&[s, Vec3::new(r * phi.cos(), r * phi.sin(), h), e], 0.01, 24).unwrap();
        let d = phase_difference(&bent, &straight, &ring, -1.0).unwrap();
        prop_assert!(d.total.abs() <= 1e-8);
        prop_assert_eq!(d.flux_term, Some(0.0));
    }

    #[test]
    fn phase_components_are_linear_in_charge(charge in 0.1f64..2.0) {
        let ring = Source::Ring(InertFluxRing::new(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 0.8).unwrap());
        let (s, e) = (Vec3::new(1.0, 0.0, -3.0), Vec3::new(1.0, 0.0, 3.0));
        let l1 = Trajectory::polyline(&[s, Vec3::new(0.4, 0.0, 0.0), e], 0.01, 16).unwrap();
        let l2 = Trajectory::polyline(&[s, Vec3::new(1.7, 0.0, 0.0), e], 0.01, 16).unwrap();
        let one = phase_difference(&l1, &l2, &ring, -charge).unwrap();
        let two = phase_difference(&l1, &l2, &ring, -2.0 * charge).unwrap();
        prop_assert_eq!(two.total, 2.0 * one.total);
        prop_assert_eq!(two.interaction_term, 2.0 * one.interaction_term);
        prop_assert_eq!(two.flux_term.unwrap(), 2.0 * one.flux_term.unwrap());
    }

    #[test]
    fn fringe_round_trip(delta in -20.0f64..20.0) {
        let ring = Source::Ring(InertFluxRing::new(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 1.0).unwrap());
        let geom = BeamGeometry::around(&ring, 1.0, 3.0).unwrap();
        let r = two_beam_pattern(&geom, 0.0, 256).unwrap();
        let s = two_beam_pattern(&geom, delta, 256).unwrap();
        let measured = measure_fringe_shift(&r, &s).unwrap();
        prop_assert!(ablab::interference::fraction_distance(measured, delta / TAU) <= 1e-3);
    }

    #[test]
    fn pattern_periodic_in_phase(delta in -10.0f64..10.0, k in -3i32..4) {
        let ring = Source::Ring(InertFluxRing::new(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 1.0).unwrap());
        let geom = BeamGeometry::around(&ring, 1.0, 3.0).unwrap();
        let a = two_beam_pattern(&geom, delta, 128).unwrap();
        let b = two_beam_pattern(&geom, delta + TAU * f64::from(k), 128).unwrap();
        for (x, y) in a.intensities.iter().zip(&b.intensities) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn swapping_subbeams_flips_the_phase(flux in -4.0f64..4.0) {
        let ring = Source::Ring(InertFluxRing::new(Vec3::ZERO, Vec3::Z, 1.0, 0.1, flux).unwrap());
        let mut geom = BeamGeometry::around(&ring, 1.0, 3.0).unwrap();
        let a = simulate_experiment(&ring, &geom, Pairing::CrossSet, -1.0).unwrap();
        geom.swap_beams = true;
        let b = simulate_experiment(&ring, &geom, Pairing::CrossSet, -1.0).unwrap();
        prop_assert!((a.delta_phi + b.delta_phi).abs() <= 1e-9);
    }
}

#[test]
fn flux_term_matches_integrated_phase_for_multiple_linking() {
    let coil = ToroidalCoil::for_flux(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 360, 0.9, 1.0).unwrap();
    let source = Source::Coil(coil);
    let (s, e) = (Vec3::new(2.0, 0.0, -2.0), Vec3::new(2.0, 0.0, 2.0));
    let outside = Trajectory::polyline(&[s, e], 0.01, 16).unwrap();
    let once = Trajectory::polyline(&[s, Vec3::new(0.5, 0.0, 0.0), e], 0.01, 16).unwrap();
    let twice = Trajectory::polyline(
        &[
            s,
            Vec3::new(0.5, 0.0, -1.0),
            Vec3::new(0.5, 0.0, 1.0),
            Vec3::new(2.0, 0.5, 1.0),
            Vec3::new(2.0, 0.5, -1.0),
            Vec3::new(0.0, 0.5, -1.0),
            Vec3::new(0.0, 0.5, 1.0),
            e,
        ],
        0.01,
        16,
    )
    .unwrap();
    for (l1, l2, lk) in [(&once, &outside, 1.0), (&outside, &once, -1.0), (&twice, &outside, 2.0), (&outside, &twice, -2.0)] {
        let r = phase_difference(l1, l2, &source, -1.0).unwrap();
        let flux = r.flux_term.unwrap();
        assert!((flux - lk * 0.9).abs() < 1e-6 * 0.9, "{r:?}");
        assert!(r.flux_discrepancy().unwrap() < 1e-6, "{r:?}");
    }
}

#[test]
fn coil_flux_invariant_under_rigid_rotation() {
    let coil = ToroidalCoil::for_flux(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 36, 1.0, 1.0).unwrap();
    let disk = coil.threading_disk();
    let rot = Rotation::about_axis(Vec3::new(1.0, 2.0, -0.5).normalized().unwrap(), 0.83).unwrap();
    let f0 = flux_through_disk(&coil, &disk).unwrap().value;
    let f1 = flux_through_disk(&coil.rotated(&rot).unwrap(), &disk.rotated(&rot)).unwrap().value;
    assert!((f0 - f1).abs() <= 1e-9 * f0.abs());
}

#[test]
fn cancellation_independent_of_liquid_speed() {
    let traj = Trajectory::polyline(&[Vec3::new(-4.0, 0.2, -1.5), Vec3::new(4.0, 0.6, 1.5)], 0.01, 24).unwrap();
    let slow = ToroidalCoil::new(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 24, 2.0, 0.01).unwrap();
    let fast = ToroidalCoil::new(Vec3::ZERO, Vec3::Z, 1.0, 0.1, 24, 2.0, 0.1).unwrap();
    let a = coil_total_phase(&traj, &slow).unwrap();
    let b = coil_total_phase(&traj, &fast).unwrap();
    assert!((b.interaction_term / a.interaction_term - 10.0).abs() < 1e-9);
    assert!((b.backreaction_term / a.backreaction_term - 10.0).abs() < 1e-9);
    for r in [a, b] {
        assert!(r.total.abs() <= 1e-12 * r.interaction_term.abs(), "{r:?}");
    }
}
