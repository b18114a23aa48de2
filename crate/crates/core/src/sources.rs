//! Magnetic sources: a circular current loop, a toroidal winding of such loops
//! and an idealized inert flux ring.
//!
//! Units are Gaussian with `c = 1`: a loop carrying current `I = ρ v` has
//! `A(x) = I ∮ dl / |x − x'|` and `B = ∇ × A = I ∮ dl × (x − x') / |x − x'|³`.

use std::f64::consts::{PI, TAU};

use crate::elliptic::kernels;
use crate::error::{Error, Result};
use crate::geometry::{check_unit, Circle, Disk, Frame, Rotation, Vec3};
use crate::quadrature::{try_integrate, try_integrate_vec, AdaptiveOptions};

/// Closed forms refuse points within this fraction of the wire radius from the wire.
pub const NEAR_WIRE_EPSILON: f64 = 1e-6;

/// Number of loops used when an inert ring is evaluated through a concrete winding.
pub const DEFAULT_DISCRETE_LOOPS: usize = 360;

/// Minor/major radius ratio above which thin-tube assumptions are flagged.
pub const ASPECT_WARNING: f64 = 0.1;

/// Relative tolerance of the quadrature reference (`biot_savart_reference`).
pub const REFERENCE_REL_TOL: f64 = 1e-12;

/// Relative tolerance of the disk flux quadrature (outer radial integral).
pub const FLUX_REL_TOL: f64 = 1e-11;

/// Anything that can report `A` and `B` at a point.
pub trait FieldSource {
    fn vector_potential(&self, point: Vec3) -> Result<Vec3>;

    fn magnetic_field(&self, point: Vec3) -> Result<Vec3>;

    /// Current-carrying loops that make up the source, if any.
    fn wires(&self) -> &[CurrentLoop] {
        &[]
    }

    /// Polar radii about the centre of `disk` at which the normal field jumps.
    /// Flux quadrature splits its radial integral there.
    fn radial_breaks(&self, _disk: &Disk) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub point: Vec3,
    pub vector_potential: Vec3,
    pub magnetic_field: Vec3,
}

pub fn sample_field<S: FieldSource + ?Sized>(source: &S, point: Vec3) -> Result<FieldSample> {
    Ok(FieldSample {
        point,
        vector_potential: source.vector_potential(point)?,
        magnetic_field: source.magnetic_field(point)?,
    })
}

/// Circular filament. Positive current circulates right-handed about the normal.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentLoop {
    frame: Frame,
    radius: f64,
    current: f64,
    near_wire_epsilon: f64,
}

impl CurrentLoop {
    pub fn new(center: Vec3, unit_normal: Vec3, radius: f64, current: f64) -> Result<Self> {
        check_unit(unit_normal, "loop normal")?;
        if !center.is_finite() {
            return Err(Error::invalid("loop center must be finite"));
        }
        Self::from_frame(Frame::from_normal(center, unit_normal)?, radius, current)
    }

    /// Loop of charged liquid with linear charge density `rho` flowing at `speed`.
    pub fn from_liquid(
        center: Vec3,
        unit_normal: Vec3,
        radius: f64,
        linear_charge_density: f64,
        liquid_speed: f64,
    ) -> Result<Self> {
        Self::new(center, unit_normal, radius, linear_charge_density * liquid_speed)
    }

    pub(crate) fn from_frame(frame: Frame, radius: f64, current: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("loop radius must be > 0, got {radius}")));
        }
        if !current.is_finite() {
            return Err(Error::invalid("loop current must be finite"));
        }
        Ok(CurrentLoop {
            frame,
            radius,
            current,
            near_wire_epsilon: NEAR_WIRE_EPSILON,
        })
    }

    pub fn with_near_wire_epsilon(mut self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::invalid("near-wire epsilon must lie in (0, 1)"));
        }
        self.near_wire_epsilon = eps;
        Ok(self)
    }

    pub fn center(&self) -> Vec3 {
        self.frame.origin
    }

    pub fn normal(&self) -> Vec3 {
        self.frame.n
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn near_wire_epsilon(&self) -> f64 {
        self.near_wire_epsilon
    }

    pub fn with_current(&self, current: f64) -> CurrentLoop {
        CurrentLoop {
            current,
            ..self.clone()
        }
    }

    pub fn rotated(&self, rot: &Rotation) -> CurrentLoop {
        CurrentLoop {
            frame: self.frame.rotated(rot),
            ..self.clone()
        }
    }

    pub fn wire_circle(&self) -> Circle {
        Circle {
            center: self.frame.origin,
            normal: self.frame.n,
            radius: self.radius,
        }
    }

    /// Wire point at parameter `theta`.
    #[inline]
    pub fn wire_point(&self, theta: f64) -> Vec3 {
        let (s, c) = theta.sin_cos();
        self.frame.point(self.radius * c, self.radius * s, 0.0)
    }

    /// `dl/dθ` at parameter `theta`, oriented along the current.
    #[inline]
    pub fn wire_tangent(&self, theta: f64) -> Vec3 {
        let (s, c) = theta.sin_cos();
        (self.frame.w * c - self.frame.u * s) * self.radius
    }

    pub fn distance_to_wire(&self, point: Vec3) -> f64 {
        self.wire_circle().distance_to(point)
    }

    pub(crate) fn check_clearance(&self, point: Vec3) -> Result<()> {
        let d = self.distance_to_wire(point);
        if d <= self.near_wire_epsilon * self.radius {
            return Err(Error::NearWire {
                distance: d,
                loop_index: None,
            });
        }
        Ok(())
    }

    /// Cylindrical decomposition of `point` about the loop axis: `(s, z, ŝ, φ̂)`.
    fn cylindrical(&self, point: Vec3) -> (f64, f64, Vec3, Vec3) {
        let d = point - self.frame.origin;
        let z = d.dot(self.frame.n);
        let radial = d - self.frame.n * z;
        let s = radial.norm();
        if s > 0.0 {
            let s_hat = radial / s;
            (s, z, s_hat, self.frame.n.cross(s_hat))
        } else {
            (0.0, z, Vec3::ZERO, Vec3::ZERO)
        }
    }

    /// `(A_φ, B_s, B_z)` at cylindrical coordinates `(s, z)`.
    fn closed_form(&self, s: f64, z: f64) -> (f64, f64, f64) {
        let a = self.radius;
        let i = self.current;
        let p = (a - s) * (a - s) + z * z;
        let q = (a + s) * (a + s) + z * z;
        let m = 4.0 * a * s / q;
        let ker = kernels(m, p / q);
        let root_q = q.sqrt();
        let bz = 2.0 * i / root_q * (ker.k + (a * a - s * s - z * z) / p * ker.e);
        if s == 0.0 {
            return (0.0, 0.0, bz);
        }
        let a_phi = 2.0 * i * root_q * ker.d / s;
        let bs = i * z * root_q * ker.f / (s * p);
        (a_phi, bs, bz)
    }
}

/// Vector potential of a circular loop from the elliptic-integral closed form.
pub fn loop_vector_potential(lp: &CurrentLoop, point: Vec3) -> Result<Vec3> {
    lp.check_clearance(point)?;
    if lp.current == 0.0 {
        return Ok(Vec3::ZERO);
    }
    let (s, z, _, phi_hat) = lp.cylindrical(point);
    if s == 0.0 {
        return Ok(Vec3::ZERO);
    }
    let (a_phi, _, _) = lp.closed_form(s, z);
    Ok(phi_hat * a_phi)
}

/// Magnetic field of a circular loop from the elliptic-integral closed form.
pub fn loop_magnetic_field(lp: &CurrentLoop, point: Vec3) -> Result<Vec3> {
    lp.check_clearance(point)?;
    if lp.current == 0.0 {
        return Ok(Vec3::ZERO);
    }
    let (s, z, s_hat, _) = lp.cylindrical(point);
    let (_, bs, bz) = lp.closed_form(s, z);
    Ok(s_hat * bs + lp.frame.n * bz)
}

/// `(A, B)` of a loop by direct adaptive quadrature of the line integrals
/// `I ∮ dl / r` and `I ∮ dl × r̂ / r²` over the loop parameter.
pub fn biot_savart_reference(lp: &CurrentLoop, point: Vec3) -> Result<(Vec3, Vec3)> {
    lp.check_clearance(point)?;
    let opts = AdaptiveOptions::relative(REFERENCE_REL_TOL, 0.0);
    let i = lp.current;
    let a = try_integrate_vec(
        |theta| {
            let r = point - lp.wire_point(theta);
            Ok((lp.wire_tangent(theta) * (i / r.norm())).to_array())
        },
        0.0,
        TAU,
        &opts,
    )?;
    let b = try_integrate_vec(
        |theta| {
            let r = point - lp.wire_point(theta);
            let r2 = r.norm_squared();
            Ok((lp.wire_tangent(theta).cross(r) * (i / (r2 * r2.sqrt()))).to_array())
        },
        0.0,
        TAU,
        &opts,
    )?;
    let to_vec = |v: [f64; 3]| Vec3::new(v[0], v[1], v[2]);
    Ok((to_vec(a.value), to_vec(b.value)))
}

impl FieldSource for CurrentLoop {
    fn vector_potential(&self, point: Vec3) -> Result<Vec3> {
        loop_vector_potential(self, point)
    }

    fn magnetic_field(&self, point: Vec3) -> Result<Vec3> {
        loop_magnetic_field(self, point)
    }

    fn wires(&self) -> &[CurrentLoop] {
        std::slice::from_ref(self)
    }
}

/// Toroidal winding: `loop_count` meridional loops of radius `minor_radius`
/// centred on the circle of radius `major_radius` about `axis`, each with its
/// normal along the local azimuthal direction and carrying `ρ v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToroidalCoil {
    frame: Frame,
    major_radius: f64,
    minor_radius: f64,
    loop_count: usize,
    linear_charge_density: f64,
    liquid_speed: f64,
    loops: Vec<CurrentLoop>,
}

impl ToroidalCoil {
    pub fn new(
        center: Vec3,
        axis: Vec3,
        major_radius: f64,
        minor_radius: f64,
        loop_count: usize,
        linear_charge_density: f64,
        liquid_speed: f64,
    ) -> Result<Self> {
        check_unit(axis, "coil axis")?;
        if !center.is_finite() {
            return Err(Error::invalid("coil center must be finite"));
        }
        let frame = Frame::from_normal(center, axis)?;
        Self::from_frame(
            frame,
            major_radius,
            minor_radius,
            loop_count,
            linear_charge_density,
            liquid_speed,
            NEAR_WIRE_EPSILON,
        )
    }

    /// Coil whose ideal (continuum) flux equals `flux`, flowing at `liquid_speed`.
    pub fn for_flux(
        center: Vec3,
        axis: Vec3,
        major_radius: f64,
        minor_radius: f64,
        loop_count: usize,
        flux: f64,
        liquid_speed: f64,
    ) -> Result<Self> {
        check_torus(major_radius, minor_radius)?;
        if loop_count == 0 || !(liquid_speed != 0.0 && liquid_speed.is_finite()) {
            return Err(Error::invalid("loop count and liquid speed must be nonzero"));
        }
        let current = flux / (4.0 * PI * loop_count as f64 * hole_factor(major_radius, minor_radius));
        Self::new(
            center,
            axis,
            major_radius,
            minor_radius,
            loop_count,
            current / liquid_speed,
            liquid_speed,
        )
    }

    fn from_frame(
        frame: Frame,
        major_radius: f64,
        minor_radius: f64,
        loop_count: usize,
        linear_charge_density: f64,
        liquid_speed: f64,
        near_wire_epsilon: f64,
    ) -> Result<Self> {
        check_torus(major_radius, minor_radius)?;
        if loop_count < 3 {
            return Err(Error::invalid(format!("loop_count must be >= 3, got {loop_count}")));
        }
        if !(linear_charge_density.is_finite() && liquid_speed.is_finite()) {
            return Err(Error::invalid("charge density and liquid speed must be finite"));
        }
        if minor_radius / major_radius > ASPECT_WARNING {
            log::warn!(
                "minor/major radius ratio {} exceeds {ASPECT_WARNING}; thin-tube assumptions degrade",
                minor_radius / major_radius
            );
        }
        let current = linear_charge_density * liquid_speed;
        let loops = (0..loop_count)
            .map(|k| {
                let phi = TAU * k as f64 / loop_count as f64;
                let (radial, azimuthal) = azimuthal_pair(&frame, phi);
                let loop_frame = Frame::with_reference(
                    frame.origin + radial * major_radius,
                    azimuthal,
                    radial,
                )?;
                CurrentLoop::from_frame(loop_frame, minor_radius, current)?
                    .with_near_wire_epsilon(near_wire_epsilon)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ToroidalCoil {
            frame,
            major_radius,
            minor_radius,
            loop_count,
            linear_charge_density,
            liquid_speed,
            loops,
        })
    }

    /// Fixes the azimuth origin of loop 0; needed to move a coil rigidly.
    pub fn with_reference_direction(self, reference: Vec3) -> Result<Self> {
        let frame = Frame::with_reference(self.frame.origin, self.frame.n, reference)?;
        self.rebuild(frame, self.linear_charge_density)
    }

    pub fn with_near_wire_epsilon(self, eps: f64) -> Result<Self> {
        Self::from_frame(
            self.frame,
            self.major_radius,
            self.minor_radius,
            self.loop_count,
            self.linear_charge_density,
            self.liquid_speed,
            eps,
        )
    }

    pub fn with_linear_charge_density(&self, rho: f64) -> Result<Self> {
        self.rebuild(self.frame, rho)
    }

    /// Same geometry with `loop_count` loops and unchanged ampere-turns `N ρ v`.
    pub fn with_loop_count(&self, loop_count: usize) -> Result<Self> {
        let rho = self.linear_charge_density * self.loop_count as f64 / loop_count as f64;
        Self::from_frame(
            self.frame,
            self.major_radius,
            self.minor_radius,
            loop_count,
            rho,
            self.liquid_speed,
            self.loops[0].near_wire_epsilon,
        )
    }

    pub fn rotated(&self, rot: &Rotation) -> Result<Self> {
        self.rebuild(self.frame.rotated(rot), self.linear_charge_density)
    }

    fn rebuild(&self, frame: Frame, rho: f64) -> Result<Self> {
        Self::from_frame(
            frame,
            self.major_radius,
            self.minor_radius,
            self.loop_count,
            rho,
            self.liquid_speed,
            self.loops[0].near_wire_epsilon,
        )
    }

    pub fn center(&self) -> Vec3 {
        self.frame.origin
    }

    pub fn axis(&self) -> Vec3 {
        self.frame.n
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn major_radius(&self) -> f64 {
        self.major_radius
    }

    pub fn minor_radius(&self) -> f64 {
        self.minor_radius
    }

    pub fn loop_count(&self) -> usize {
        self.loop_count
    }

    pub fn linear_charge_density(&self) -> f64 {
        self.linear_charge_density
    }

    pub fn liquid_speed(&self) -> f64 {
        self.liquid_speed
    }

    pub fn loop_current(&self) -> f64 {
        self.linear_charge_density * self.liquid_speed
    }

    pub fn ampere_turns(&self) -> f64 {
        self.loop_count as f64 * self.loop_current()
    }

    pub fn loops(&self) -> &[CurrentLoop] {
        &self.loops
    }

    /// Field magnitude `2 N I / R` of the ideal winding on the core circle.
    pub fn interior_field_scale(&self) -> f64 {
        2.0 * self.ampere_turns().abs() / self.major_radius
    }

    /// Flux of the ideal continuum winding, `4π N I (R − √(R² − a²))`.
    pub fn ideal_flux(&self) -> f64 {
        4.0 * PI * self.ampere_turns() * hole_factor(self.major_radius, self.minor_radius)
    }

    /// Circle through the tube centres, oriented along the positive interior field.
    pub fn core_circle(&self) -> Circle {
        Circle {
            center: self.frame.origin,
            normal: self.frame.n,
            radius: self.major_radius,
        }
    }

    /// Meridional disk midway between loops 0 and 1 that covers the whole tube
    /// cross-section; its normal points along the interior field.
    pub fn threading_disk(&self) -> Disk {
        let phi = PI / self.loop_count as f64;
        let (radial, azimuthal) = azimuthal_pair(&self.frame, phi);
        let margin = self.minor_radius.min(0.5 * (self.major_radius - self.minor_radius));
        Disk {
            center: self.frame.origin + radial * self.major_radius,
            unit_normal: azimuthal,
            radius: self.minor_radius + margin,
        }
    }

    /// Flux through [`ToroidalCoil::threading_disk`] by quadrature.
    pub fn threaded_flux(&self) -> Result<FluxEstimate> {
        flux_through_disk(self, &self.threading_disk())
    }
}

/// `R − √(R² − a²)` without cancellation.
fn hole_factor(major: f64, minor: f64) -> f64 {
    minor * minor / (major + (major * major - minor * minor).sqrt())
}

fn check_torus(major: f64, minor: f64) -> Result<()> {
    if !(minor > 0.0 && major.is_finite() && minor < major) {
        return Err(Error::invalid(format!(
            "torus radii must satisfy 0 < minor_radius < major_radius (got minor {minor}, major {major})"
        )));
    }
    Ok(())
}

/// `(ρ̂, φ̂)` at azimuth `phi` in the plane of `frame`.
fn azimuthal_pair(frame: &Frame, phi: f64) -> (Vec3, Vec3) {
    let (s, c) = phi.sin_cos();
    (frame.u * c + frame.w * s, frame.w * c - frame.u * s)
}

impl FieldSource for ToroidalCoil {
    fn vector_potential(&self, point: Vec3) -> Result<Vec3> {
        coil_vector_potential(self, point)
    }

    fn magnetic_field(&self, point: Vec3) -> Result<Vec3> {
        coil_magnetic_field(self, point)
    }

    fn wires(&self) -> &[CurrentLoop] {
        &self.loops
    }
}

pub fn coil_vector_potential(coil: &ToroidalCoil, point: Vec3) -> Result<Vec3> {
    let mut sum = Vec3::ZERO;
    for (k, lp) in coil.loops.iter().enumerate() {
        sum += loop_vector_potential(lp, point).map_err(|e| e.with_loop_index(k))?;
    }
    Ok(sum)
}

pub fn coil_magnetic_field(coil: &ToroidalCoil, point: Vec3) -> Result<Vec3> {
    let mut sum = Vec3::ZERO;
    for (k, lp) in coil.loops.iter().enumerate() {
        sum += loop_magnetic_field(lp, point).map_err(|e| e.with_loop_index(k))?;
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RingMode {
    /// Ideal flux tube; phases follow from linking × Φ.
    Analytic,
    /// Evaluated through an internal toroidal winding carrying the same flux.
    Discrete { loop_count: usize },
}

/// Inert flux ring: flux `Φ` confined to a torus of radii `(R, a)`, circulating
/// right-handed about `axis`. Its internal state never responds to the beam.
///
/// In analytic mode the exterior potential is that of a thin flux filament on
/// the core circle, which equals the Biot-Savart field of a loop carrying
/// current `Φ / 4π`; inside the tube the ideal toroidal field `∝ 1/ρ` is used.
#[derive(Debug, Clone, PartialEq)]
pub struct InertFluxRing {
    frame: Frame,
    major_radius: f64,
    minor_radius: f64,
    total_flux: f64,
    mode: RingMode,
    filament: CurrentLoop,
    coil: Option<ToroidalCoil>,
}

impl InertFluxRing {
    pub fn new(
        center: Vec3,
        axis: Vec3,
        major_radius: f64,
        minor_radius: f64,
        total_flux: f64,
    ) -> Result<Self> {
        check_unit(axis, "ring axis")?;
        check_torus(major_radius, minor_radius)?;
        if !total_flux.is_finite() || !center.is_finite() {
            return Err(Error::invalid("ring flux and center must be finite"));
        }
        let frame = Frame::from_normal(center, axis)?;
        let filament = CurrentLoop::from_frame(frame, major_radius, total_flux / (4.0 * PI))?;
        Ok(InertFluxRing {
            frame,
            major_radius,
            minor_radius,
            total_flux,
            mode: RingMode::Analytic,
            filament,
            coil: None,
        })
    }

    pub fn with_mode(mut self, mode: RingMode) -> Result<Self> {
        self.coil = match mode {
            RingMode::Analytic => None,
            RingMode::Discrete { loop_count } => {
                let coil = ToroidalCoil::for_flux(
                    self.frame.origin,
                    self.frame.n,
                    self.major_radius,
                    self.minor_radius,
                    loop_count,
                    self.total_flux,
                    1.0,
                )?
                .with_reference_direction(self.frame.u)?;
                // the discrete winding falls short of the continuum flux; calibrate on the threaded flux
                let measured = coil.threaded_flux()?.value;
                if measured == 0.0 {
                    Some(coil)
                } else {
                    let rho = coil.linear_charge_density() * self.total_flux / measured;
                    Some(coil.with_linear_charge_density(rho)?)
                }
            }
        };
        self.mode = mode;
        Ok(self)
    }

    pub fn center(&self) -> Vec3 {
        self.frame.origin
    }

    pub fn axis(&self) -> Vec3 {
        self.frame.n
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn major_radius(&self) -> f64 {
        self.major_radius
    }

    pub fn minor_radius(&self) -> f64 {
        self.minor_radius
    }

    pub fn total_flux(&self) -> f64 {
        self.total_flux
    }

    pub fn mode(&self) -> RingMode {
        self.mode
    }

    pub fn discrete_coil(&self) -> Option<&ToroidalCoil> {
        self.coil.as_ref()
    }

    pub fn core_circle(&self) -> Circle {
        Circle {
            center: self.frame.origin,
            normal: self.frame.n,
            radius: self.major_radius,
        }
    }

    fn inside_tube(&self, point: Vec3) -> bool {
        self.core_circle().distance_to(point) < self.minor_radius
    }
}

impl FieldSource for InertFluxRing {
    fn vector_potential(&self, point: Vec3) -> Result<Vec3> {
        if let Some(coil) = &self.coil {
            return coil.vector_potential(point);
        }
        if self.inside_tube(point) {
            return Err(Error::InsideSource);
        }
        loop_magnetic_field(&self.filament, point)
    }

    fn magnetic_field(&self, point: Vec3) -> Result<Vec3> {
        if let Some(coil) = &self.coil {
            return coil.magnetic_field(point);
        }
        if !self.inside_tube(point) {
            return Ok(Vec3::ZERO);
        }
        let d = point - self.frame.origin;
        let radial = d - self.frame.n * d.dot(self.frame.n);
        let rho = radial.norm();
        let phi_hat = self.frame.n.cross(radial / rho);
        let strength = self.total_flux
            / (TAU * hole_factor(self.major_radius, self.minor_radius) * rho);
        Ok(phi_hat * strength)
    }

    fn wires(&self) -> &[CurrentLoop] {
        self.coil.as_ref().map_or(&[], |c| c.loops())
    }

    // a meridional disk centred on the core sees the tube wall as a circle of radius a
    fn radial_breaks(&self, disk: &Disk) -> Vec<f64> {
        if self.coil.is_some() || self.minor_radius >= disk.radius {
            return Vec::new();
        }
        let tol = 1e-12 * self.major_radius;
        let d = disk.center - self.frame.origin;
        let radial = d - self.frame.n * d.dot(self.frame.n);
        let on_core = d.dot(self.frame.n).abs() <= tol && (radial.norm() - self.major_radius).abs() <= tol;
        let meridional = on_core
            && disk.unit_normal.cross(self.frame.n.cross(radial / radial.norm())).norm() <= 1e-12;
        if meridional {
            vec![self.minor_radius]
        } else {
            Vec::new()
        }
    }
}

/// Enclosed flux of an ideal inert ring for a contour with the given linking number.
pub fn ring_phase_flux(ring: &InertFluxRing, path_pair_linking: i32) -> f64 {
    f64::from(path_pair_linking) * ring.total_flux
}

/// Any of the three source models.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Loop(CurrentLoop),
    Coil(ToroidalCoil),
    Ring(InertFluxRing),
}

impl Source {
    /// Circle whose linking with a closed contour determines the enclosed flux.
    pub fn threading_circle(&self) -> Circle {
        match self {
            Source::Loop(l) => l.wire_circle(),
            Source::Coil(c) => c.core_circle(),
            Source::Ring(r) => r.core_circle(),
        }
    }

    /// Radius of the excluded tube around [`Source::threading_circle`].
    pub fn tube_radius(&self) -> f64 {
        match self {
            Source::Loop(_) => 0.0,
            Source::Coil(c) => c.minor_radius(),
            Source::Ring(r) => r.minor_radius(),
        }
    }

    /// Loops whose charged liquid responds to the beam. Inert sources have none.
    pub fn responsive_loops(&self) -> &[CurrentLoop] {
        match self {
            Source::Loop(l) => std::slice::from_ref(l),
            Source::Coil(c) => c.loops(),
            Source::Ring(_) => &[],
        }
    }

    /// Flux carried around the threading circle, or `None` for a bare filament.
    pub fn threaded_flux(&self) -> Result<Option<f64>> {
        match self {
            Source::Loop(_) => Ok(None),
            Source::Coil(c) => Ok(Some(c.threaded_flux()?.value)),
            Source::Ring(r) => match r.discrete_coil() {
                None => Ok(Some(r.total_flux())),
                Some(c) => Ok(Some(c.threaded_flux()?.value)),
            },
        }
    }
}

impl FieldSource for Source {
    fn vector_potential(&self, point: Vec3) -> Result<Vec3> {
        match self {
            Source::Loop(l) => l.vector_potential(point),
            Source::Coil(c) => c.vector_potential(point),
            Source::Ring(r) => r.vector_potential(point),
        }
    }

    fn magnetic_field(&self, point: Vec3) -> Result<Vec3> {
        match self {
            Source::Loop(l) => l.magnetic_field(point),
            Source::Coil(c) => c.magnetic_field(point),
            Source::Ring(r) => r.magnetic_field(point),
        }
    }

    fn wires(&self) -> &[CurrentLoop] {
        match self {
            Source::Loop(l) => l.wires(),
            Source::Coil(c) => c.wires(),
            Source::Ring(r) => r.wires(),
        }
    }

    fn radial_breaks(&self, disk: &Disk) -> Vec<f64> {
        match self {
            Source::Loop(l) => l.radial_breaks(disk),
            Source::Coil(c) => c.radial_breaks(disk),
            Source::Ring(r) => r.radial_breaks(disk),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxEstimate {
    pub value: f64,
    pub error: f64,
}

/// Flux of `B` through `disk` along its normal, by nested adaptive quadrature
/// (radial outer, angular inner) in polar coordinates about the disk centre.
pub fn flux_through_disk<S: FieldSource + ?Sized>(source: &S, disk: &Disk) -> Result<FluxEstimate> {
    flux_through_disk_with(source, disk, FLUX_REL_TOL)
}

/// [`flux_through_disk`] with an explicit relative tolerance for the radial integral.
///
/// Both integrals also accept an absolute error of `rel_tol` times the flux
/// scale `|B|max · area`, with `|B|max` sampled at a few interior points, and
/// never ask for less than the roundoff level of summing the individual wires,
/// so that nearly cancelling rings or disks far from the source terminate.
pub fn flux_through_disk_with<S: FieldSource + ?Sized>(
    source: &S,
    disk: &Disk,
    rel_tol: f64,
) -> Result<FluxEstimate> {
    check_unit(disk.unit_normal, "disk normal")?;
    if !(rel_tol > 0.0) {
        return Err(Error::invalid("flux tolerance must be positive"));
    }
    for (k, lp) in source.wires().iter().enumerate() {
        check_wire_clear_of_disk(lp, disk).map_err(|e| e.with_loop_index(k))?;
    }
    let frame = disk.frame();
    let n = disk.unit_normal;
    let at = |rho: f64, theta: f64| -> Result<Vec3> {
        let (s, c) = theta.sin_cos();
        source.magnetic_field(frame.point(rho * c, rho * s, 0.0))
    };

    // field scale and the roundoff level of the per-wire superposition
    let wires = source.wires();
    let scales = |rho: f64, theta: f64| -> Result<(f64, f64)> {
        let (s, c) = theta.sin_cos();
        let p = frame.point(rho * c, rho * s, 0.0);
        let mut gross = 0.0;
        for lp in wires {
            gross += loop_magnetic_field(lp, p)?.norm();
        }
        Ok((at(rho, theta)?.norm(), 64.0 * f64::EPSILON * gross))
    };
    let (mut b_max, mut b_noise) = scales(0.0, 0.0)?;
    for k in 0..8 {
        let theta = TAU * (k as f64 + 0.5) / 8.0;
        for frac in [0.5, 0.95] {
            let (b, noise) = scales(frac * disk.radius, theta)?;
            b_max = b_max.max(b);
            b_noise = b_noise.max(noise);
        }
    }
    if b_max == 0.0 {
        return Ok(FluxEstimate { value: 0.0, error: 0.0 });
    }
    let area = PI * disk.radius * disk.radius;
    let inner_opts = AdaptiveOptions::relative(0.1 * rel_tol, TAU * (0.1 * rel_tol * b_max).max(b_noise));
    let outer_opts = AdaptiveOptions::relative(rel_tol, area * (rel_tol * b_max).max(b_noise));

    let mut edges = vec![0.0];
    edges.extend(source.radial_breaks(disk).into_iter().filter(|&r| r > 0.0 && r < disk.radius));
    edges.push(disk.radius);
    edges.sort_by(f64::total_cmp);

    let mut inner_error: f64 = 0.0;
    let (mut value, mut error) = (0.0, 0.0);
    for w in edges.windows(2) {
        let mut opts = outer_opts;
        opts.abs_tol *= (w[1] * w[1] - w[0] * w[0]) / (disk.radius * disk.radius);
        let piece = try_integrate(
            |rho| {
                let ring = try_integrate(|theta| Ok(at(rho, theta)?.dot(n)), 0.0, TAU, &inner_opts)?;
                inner_error = inner_error.max(ring.error * rho);
                Ok(ring.value * rho)
            },
            w[0],
            w[1],
            &opts,
        )?;
        value += piece.value;
        error += piece.error;
    }
    Ok(FluxEstimate {
        value,
        error: error + inner_error * disk.radius,
    })
}

/// Circulation `∮ A · dl` around `circle`, traversed right-handed about its normal.
pub fn circulation<S: FieldSource + ?Sized>(
    source: &S,
    circle: &Circle,
    opts: &AdaptiveOptions,
) -> Result<FluxEstimate> {
    let frame = Frame::from_normal(circle.center, circle.normal)?;
    let r = circle.radius;
    let q = try_integrate(
        |theta| {
            let (s, c) = theta.sin_cos();
            let p = frame.point(r * c, r * s, 0.0);
            let tangent = (frame.w * c - frame.u * s) * r;
            Ok(source.vector_potential(p)?.dot(tangent))
        },
        0.0,
        TAU,
        opts,
    )?;
    Ok(FluxEstimate {
        value: q.value,
        error: q.error,
    })
}

/// Rejects disks whose closed surface comes within the near-wire radius of `lp`.
fn check_wire_clear_of_disk(lp: &CurrentLoop, disk: &Disk) -> Result<()> {
    let eps = lp.near_wire_epsilon() * lp.radius();
    let n = disk.unit_normal;
    let offset = (lp.center() - disk.center).dot(n);
    let beta = lp.radius() * lp.frame().u.dot(n);
    let gamma = lp.radius() * lp.frame().w.dot(n);
    let amp = beta.hypot(gamma);
    let in_disk = |p: Vec3| {
        let d = p - disk.center;
        (d - n * d.dot(n)).norm() <= disk.radius + eps
    };
    let hit = |theta: f64| -> Result<()> {
        let p = lp.wire_point(theta);
        if in_disk(p) {
            let d = p - disk.center;
            return Err(Error::NearWire {
                distance: d.dot(n).abs(),
                loop_index: None,
            });
        }
        Ok(())
    };
    if amp <= eps {
        // wire parallel to the disk plane
        if offset.abs() <= eps {
            for k in 0..64 {
                hit(TAU * k as f64 / 64.0)?;
            }
        }
        return Ok(());
    }
    if offset.abs() > amp + eps {
        return Ok(());
    }
    let phase = gamma.atan2(beta);
    let spread = (-offset / amp).clamp(-1.0, 1.0).acos();
    hit(phase + spread)?;
    hit(phase - spread)
}
