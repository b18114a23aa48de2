//! Vectors, frames, disks and time-stamped electron paths.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Tolerance on `|n| = 1` for unit normals supplied by callers.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Closed trajectories must return to their first position within this distance.
pub const CLOSURE_TOLERANCE: f64 = 1e-12;

/// Default relative tolerance between stored velocities and finite differences of positions.
pub const VELOCITY_CONSISTENCY: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    /// Unchecked constructor for internal arithmetic. Use [`Vec3::try_new`] on external input.
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn try_new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Vec3 { x, y, z };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::invalid(format!("non-finite vector ({x}, {y}, {z})")))
        }
    }

    pub fn from_array(a: [f64; 3]) -> Result<Self> {
        Self::try_new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y).hypot(self.z)
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Result<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Ok(self / n)
        } else {
            Err(Error::invalid("cannot normalize a zero or non-finite vector"))
        }
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    #[inline]
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

pub(crate) fn check_unit(n: Vec3, what: &str) -> Result<()> {
    if !n.is_finite() || (n.norm() - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::invalid(format!(
            "{what} must be a unit vector (|n| = {})",
            n.norm()
        )));
    }
    Ok(())
}

/// Right-handed orthonormal frame `(u, w, n)` with `u × w = n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub origin: Vec3,
    pub u: Vec3,
    pub w: Vec3,
    pub n: Vec3,
}

impl Frame {
    /// Frame about `normal` with a deterministic choice of in-plane axes.
    pub fn from_normal(origin: Vec3, normal: Vec3) -> Result<Self> {
        let n = normal.normalized()?;
        // Seed with the coordinate axis least aligned with n.
        let seed = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
            Vec3::X
        } else if n.y.abs() <= n.z.abs() {
            Vec3::Y
        } else {
            Vec3::Z
        };
        let u = (seed - n * seed.dot(n)).normalized()?;
        let w = n.cross(u);
        Ok(Frame { origin, u, w, n })
    }

    /// Frame about `normal` whose first in-plane axis is the projection of `reference`.
    pub fn with_reference(origin: Vec3, normal: Vec3, reference: Vec3) -> Result<Self> {
        let n = normal.normalized()?;
        let u = (reference - n * reference.dot(n))
            .normalized()
            .map_err(|_| Error::invalid("reference direction is parallel to the normal"))?;
        let w = n.cross(u);
        Ok(Frame { origin, u, w, n })
    }

    /// Point `origin + a u + b w + c n`.
    #[inline]
    pub fn point(&self, a: f64, b: f64, c: f64) -> Vec3 {
        self.origin + self.u * a + self.w * b + self.n * c
    }

    /// Local coordinates of a world-space point.
    #[inline]
    pub fn local(&self, p: Vec3) -> Vec3 {
        let d = p - self.origin;
        Vec3::new(d.dot(self.u), d.dot(self.w), d.dot(self.n))
    }

    pub fn rotated(&self, rot: &Rotation) -> Frame {
        Frame {
            origin: rot.apply(self.origin),
            u: rot.apply(self.u),
            w: rot.apply(self.w),
            n: rot.apply(self.n),
        }
    }
}

/// Proper rotation stored as a row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: [[f64; 3]; 3],
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Rodrigues rotation by `angle` radians about `axis`.
    pub fn about_axis(axis: Vec3, angle: f64) -> Result<Self> {
        let k = axis.normalized()?;
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Ok(Rotation {
            m: [
                [t * k.x * k.x + c, t * k.x * k.y - s * k.z, t * k.x * k.z + s * k.y],
                [t * k.x * k.y + s * k.z, t * k.y * k.y + c, t * k.y * k.z - s * k.x],
                [t * k.x * k.z - s * k.y, t * k.y * k.z + s * k.x, t * k.z * k.z + c],
            ],
        })
    }

    #[inline]
    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn then(&self, next: &Rotation) -> Rotation {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| next.m[i][k] * self.m[k][j]).sum();
            }
        }
        Rotation { m }
    }
}

/// Oriented circle; the orientation is right-handed about `normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Vec3,
    pub normal: Vec3,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Vec3, normal: Vec3, radius: f64) -> Result<Self> {
        check_unit(normal, "circle normal")?;
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::invalid(format!("circle radius must be > 0, got {radius}")));
        }
        Ok(Circle {
            center,
            normal,
            radius,
        })
    }

    /// Distance from `p` to the nearest point of the circle.
    pub fn distance_to(&self, p: Vec3) -> f64 {
        let d = p - self.center;
        let z = d.dot(self.normal);
        let s = (d - self.normal * z).norm();
        (s - self.radius).hypot(z)
    }
}

/// Flat disk used as the spanning surface of a planar circular contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Vec3,
    pub unit_normal: Vec3,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Vec3, unit_normal: Vec3, radius: f64) -> Result<Self> {
        check_unit(unit_normal, "disk normal")?;
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::invalid(format!("disk radius must be > 0, got {radius}")));
        }
        Ok(Disk {
            center,
            unit_normal,
            radius,
        })
    }

    pub fn boundary(&self) -> Circle {
        Circle {
            center: self.center,
            normal: self.unit_normal,
            radius: self.radius,
        }
    }

    pub fn frame(&self) -> Frame {
        // unit_normal is validated, so this cannot fail
        Frame::from_normal(self.center, self.unit_normal).expect("validated normal")
    }

    pub fn rotated(&self, rot: &Rotation) -> Disk {
        Disk {
            center: rot.apply(self.center),
            unit_normal: rot.apply(self.unit_normal),
            radius: self.radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
}

/// Time-stamped electron path, interpreted as piecewise linear between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<Sample>,
    closed: bool,
}

impl Trajectory {
    pub fn new(samples: Vec<Sample>, closed: bool) -> Result<Self> {
        Self::with_velocity_tolerance(samples, closed, VELOCITY_CONSISTENCY)
    }

    /// Validating constructor. Velocities that disagree with the finite-difference
    /// estimate by more than `velocity_tolerance` (relative) are logged, not rejected.
    pub fn with_velocity_tolerance(
        samples: Vec<Sample>,
        closed: bool,
        velocity_tolerance: f64,
    ) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("a trajectory needs at least 2 samples"));
        }
        for s in &samples {
            if !s.t.is_finite() || !s.position.is_finite() || !s.velocity.is_finite() {
                return Err(Error::invalid("trajectory samples must be finite"));
            }
        }
        if samples.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::invalid("trajectory times must be strictly increasing"));
        }
        if closed {
            let gap = samples[0].position.distance(samples[samples.len() - 1].position);
            if gap > CLOSURE_TOLERANCE {
                return Err(Error::invalid(format!(
                    "closed trajectory does not return to its start (gap {gap:e})"
                )));
            }
        }
        let traj = Trajectory { samples, closed };
        let bad = traj.inconsistent_velocities(velocity_tolerance);
        if bad > 0 {
            log::warn!(
                "{bad} of {} trajectory samples have velocities inconsistent with positions",
                traj.samples.len()
            );
        }
        Ok(traj)
    }

    /// Straight legs through `waypoints` at constant `speed`, `steps_per_leg` segments per leg.
    pub fn polyline(waypoints: &[Vec3], speed: f64, steps_per_leg: usize) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::invalid("a polyline needs at least 2 waypoints"));
        }
        if !(speed > 0.0 && speed.is_finite()) || steps_per_leg == 0 {
            return Err(Error::invalid("polyline speed and step count must be positive"));
        }
        let mut samples = Vec::with_capacity((waypoints.len() - 1) * steps_per_leg + 1);
        let mut t = 0.0;
        for (leg, pair) in waypoints.windows(2).enumerate() {
            let (a, b) = (pair[0], pair[1]);
            let len = a.distance(b);
            if len == 0.0 {
                return Err(Error::invalid("consecutive waypoints coincide"));
            }
            let vel = (b - a) * (speed / len);
            let dt = len / speed;
            let first = if leg == 0 { 0 } else { 1 };
            for k in first..=steps_per_leg {
                let f = k as f64 / steps_per_leg as f64;
                samples.push(Sample {
                    t: t + f * dt,
                    position: a + (b - a) * f,
                    velocity: vel,
                });
            }
            t += dt;
        }
        let closed = waypoints[0].distance(waypoints[waypoints.len() - 1]) <= CLOSURE_TOLERANCE;
        if closed {
            let last = samples.len() - 1;
            samples[last].position = samples[0].position;
        }
        Trajectory::new(samples, closed)
    }

    /// Closed circular contour, traversed right-handed about `normal`.
    pub fn circle(circle: &Circle, speed: f64, segments: usize) -> Result<Self> {
        if segments < 3 || !(speed > 0.0) {
            return Err(Error::invalid("a circular contour needs >= 3 segments and speed > 0"));
        }
        let frame = Frame::from_normal(circle.center, circle.normal)?;
        let r = circle.radius;
        let omega = speed / r;
        let period = std::f64::consts::TAU / omega;
        let mut samples: Vec<Sample> = (0..=segments)
            .map(|k| {
                let t = period * k as f64 / segments as f64;
                let (s, c) = (omega * t).sin_cos();
                Sample {
                    t,
                    position: frame.point(r * c, r * s, 0.0),
                    velocity: (frame.u * (-s) + frame.w * c) * speed,
                }
            })
            .collect();
        samples[segments].position = samples[0].position;
        Trajectory::new(samples, true)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn start(&self) -> Vec3 {
        self.samples[0].position
    }

    pub fn end(&self) -> Vec3 {
        self.samples[self.samples.len() - 1].position
    }

    pub fn t_start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.samples.iter().map(|s| s.position)
    }

    /// Consecutive sample pairs.
    pub fn segments(&self) -> impl Iterator<Item = (&Sample, &Sample)> + '_ {
        self.samples.windows(2).map(|w| (&w[0], &w[1]))
    }

    pub fn length(&self) -> f64 {
        self.segments()
            .map(|(a, b)| a.position.distance(b.position))
            .sum()
    }

    /// Position and chord velocity at time `t`.
    pub fn state_at(&self, t: f64) -> Result<(Vec3, Vec3)> {
        let (t0, t1) = (self.t_start(), self.t_end());
        if !(t >= t0 && t <= t1) {
            return Err(Error::OutsideSpan { t, start: t0, end: t1 });
        }
        let idx = match self.samples.partition_point(|s| s.t <= t) {
            0 => 0,
            i if i >= self.samples.len() => self.samples.len() - 2,
            i => i - 1,
        };
        let (a, b) = (&self.samples[idx], &self.samples[idx + 1]);
        let vel = (b.position - a.position) / (b.t - a.t);
        Ok((a.position + vel * (t - a.t), vel))
    }

    /// Same path traversed backwards in time order, velocities negated.
    pub fn reversed(&self) -> Trajectory {
        let (t0, t1) = (self.t_start(), self.t_end());
        let samples = self
            .samples
            .iter()
            .rev()
            .map(|s| Sample {
                t: t0 + t1 - s.t,
                position: s.position,
                velocity: -s.velocity,
            })
            .collect();
        Trajectory {
            samples,
            closed: self.closed,
        }
    }

    /// Splits at interior sample `index`; both halves contain that sample.
    pub fn split_at(&self, index: usize) -> Result<(Trajectory, Trajectory)> {
        if index == 0 || index + 1 >= self.samples.len() {
            return Err(Error::invalid("split index must be an interior sample"));
        }
        let first = Trajectory {
            samples: self.samples[..=index].to_vec(),
            closed: false,
        };
        let second = Trajectory {
            samples: self.samples[index..].to_vec(),
            closed: false,
        };
        Ok((first, second))
    }

    /// Closed contour `l1` followed by `l2` run backwards. The paths must share endpoints.
    pub fn close_pair(l1: &Trajectory, l2: &Trajectory, tolerance: f64) -> Result<Trajectory> {
        let gap = l1
            .start()
            .distance(l2.start())
            .max(l1.end().distance(l2.end()));
        if gap > tolerance {
            return Err(Error::EndpointMismatch { gap });
        }
        let mut samples = l1.samples.clone();
        let mut t = l1.t_end();
        let back = l2.reversed();
        let offset = t - back.t_start();
        for s in &back.samples[1..] {
            t = s.t + offset;
            samples.push(Sample { t, ..*s });
        }
        let last = samples.len() - 1;
        samples[last].position = samples[0].position;
        Ok(Trajectory {
            samples,
            closed: true,
        })
    }

    /// Applies a rigid motion `p -> rot(p) + shift` to positions and velocities.
    pub fn transformed(&self, rot: &Rotation, shift: Vec3) -> Trajectory {
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                t: s.t,
                position: rot.apply(s.position) + shift,
                velocity: rot.apply(s.velocity),
            })
            .collect();
        Trajectory {
            samples,
            closed: self.closed,
        }
    }

    /// Inserts `extra` evenly spaced samples inside every segment; the geometric path is unchanged.
    pub fn refined(&self, extra: usize) -> Trajectory {
        let mut samples = Vec::with_capacity(self.samples.len() * (extra + 1));
        for (a, b) in self.segments() {
            samples.push(*a);
            for k in 1..=extra {
                let f = k as f64 / (extra + 1) as f64;
                samples.push(Sample {
                    t: a.t + (b.t - a.t) * f,
                    position: a.position + (b.position - a.position) * f,
                    velocity: a.velocity + (b.velocity - a.velocity) * f,
                });
            }
        }
        samples.push(self.samples[self.samples.len() - 1]);
        Trajectory {
            samples,
            closed: self.closed,
        }
    }

    fn inconsistent_velocities(&self, tol: f64) -> usize {
        let s = &self.samples;
        let n = s.len();
        (0..n)
            .filter(|&i| {
                let (a, b) = match i {
                    0 => (0, 1),
                    i if i == n - 1 => (n - 2, n - 1),
                    i => (i - 1, i + 1),
                };
                let fd = (s[b].position - s[a].position) / (s[b].t - s[a].t);
                let scale = fd.norm().max(s[i].velocity.norm());
                scale > 0.0 && (fd - s[i].velocity).norm() > tol * scale
            })
            .count()
    }
}
