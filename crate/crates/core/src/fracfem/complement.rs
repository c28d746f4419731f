//! The weight `ω(x) = ∫_{ℝ²∖Ω} |x − y|^{−2−2s} dy` that carries the
//! interaction of the domain with its complement.
//!
//! In polar coordinates around `x`, with `ρ(θ)` the distance to the boundary
//! along direction `θ`, the radial integral is explicit:
//! `ω(x) = (1/2s) ∫_0^{2π} ρ(θ)^{−2s} dθ`.

use crate::error::{Error, Result};
use crate::mesh::{gauss_legendre, Point};

/// Geometry the complement weight is computed for.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainDescriptor {
    UnitDisc,
    /// Counter-clockwise convex polygon.
    ConvexPolygon(Vec<Point>),
}

/// `ω(x)` for `x` strictly inside the domain.
///
/// For the disc the boundary distance is smooth and periodic in `θ`, so the
/// trapezoid rule with `n_angles` nodes converges spectrally. For a polygon
/// each edge at distance `δ` from `x` contributes
/// `δ^{−2s} ∫ cos(φ)^{2s} dφ` over the angle it subtends; this is integrated
/// edge by edge with Gauss–Legendre, using about `n_angles` nodes per full turn.
pub fn complement_weight(domain: &DomainDescriptor, x: Point, s: f64, n_angles: usize) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidOrder(s));
    }
    match domain {
        DomainDescriptor::UnitDisc => {
            let r2 = x[0] * x[0] + x[1] * x[1];
            if r2 >= 1.0 {
                return Err(Error::PointOutsideDomain(x[0], x[1]));
            }
            let n = n_angles.max(4);
            let h = std::f64::consts::TAU / n as f64;
            let sum: f64 = (0..n)
                .map(|k| {
                    let (sn, cs) = (k as f64 * h).sin_cos();
                    let xe = x[0] * cs + x[1] * sn;
                    // Positive root of |x + ρe| = 1, written to avoid cancellation.
                    let rho = (1.0 - r2) / (xe + (xe * xe + 1.0 - r2).sqrt());
                    rho.powf(-2.0 * s)
                })
                .sum();
            Ok(sum * h / (2.0 * s))
        }
        DomainDescriptor::ConvexPolygon(poly) => polygon_weight(poly, x, s, n_angles),
    }
}

fn polygon_weight(poly: &[Point], x: Point, s: f64, n_angles: usize) -> Result<f64> {
    let n = poly.len();
    if n < 3 {
        return Err(Error::InvalidMesh("polygon needs at least three vertices".into()));
    }
    let mut total = 0.0;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let len = ex.hypot(ey);
        // Outward normal of a CCW polygon.
        let (nx, ny) = (ey / len, -ex / len);
        let delta = (a[0] - x[0]) * nx + (a[1] - x[1]) * ny;
        if delta <= 0.0 {
            return Err(Error::PointOutsideDomain(x[0], x[1]));
        }
        // Tangential offsets of the edge end points relative to the foot of
        // the perpendicular from x.
        let ta = (a[0] - x[0]) * (ex / len) + (a[1] - x[1]) * (ey / len);
        let tb = ta + len;
        let (pa, pb) = ((ta / delta).atan(), (tb / delta).atan());
        let span = pb - pa;
        let m = ((n_angles as f64 * span / std::f64::consts::TAU).ceil() as usize).max(3);
        let (nodes, weights) = gauss_legendre(m);
        let integral: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&t, &w)| w * (pa + t * span).cos().powf(2.0 * s))
            .sum::<f64>()
            * span;
        total += delta.powf(-2.0 * s) * integral;
    }
    Ok(total / (2.0 * s))
}
