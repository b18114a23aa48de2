//! Linking number of a closed polygonal path with a circle.

use crate::error::{Error, Result};
use crate::geometry::{Circle, Trajectory};

/// Crossings closer than this (relative to the ring radius) to the disk boundary are ambiguous.
pub const TOUCH_TOLERANCE: f64 = 1e-9;

/// Gauss linking number of a closed path with `ring`, counted as signed crossings
/// of the path through the flat disk spanned by the ring. A crossing along the
/// ring normal counts +1.
///
/// Vertices lying exactly in the disk plane are classified with the positive
/// side, which makes the count well defined for paths that touch the plane.
pub fn linking_number(path: &Trajectory, ring: &Circle) -> Result<i32> {
    if !path.is_closed() {
        return Err(Error::invalid("linking number requires a closed path"));
    }
    let tol = TOUCH_TOLERANCE * ring.radius;
    let n = ring.normal;
    let project = |p: crate::geometry::Vec3| {
        let d = p - ring.center;
        (d.dot(n), d - n * d.dot(n))
    };

    let mut count = 0;
    for (a, b) in path.segments() {
        let (sa, qa) = project(a.position);
        let (sb, qb) = project(b.position);

        if sa.abs() <= tol && sb.abs() <= tol {
            // segment lies in the plane: it must stay clear of the boundary circle
            let dq = qb - qa;
            let f = if dq.norm_squared() > 0.0 {
                (-qa.dot(dq) / dq.norm_squared()).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let rmin = (qa + dq * f).norm();
            let rmax = qa.norm().max(qb.norm());
            if rmin <= ring.radius + tol && rmax >= ring.radius - tol {
                return Err(Error::AmbiguousTopology);
            }
        }

        let (above_a, above_b) = (sa >= 0.0, sb >= 0.0);
        if above_a == above_b {
            continue;
        }
        let f = sa / (sa - sb);
        let rho = (qa + (qb - qa) * f).norm();
        if (rho - ring.radius).abs() <= tol {
            return Err(Error::AmbiguousTopology);
        }
        if rho < ring.radius {
            count += if above_b { 1 } else { -1 };
        }
    }
    Ok(count)
}
