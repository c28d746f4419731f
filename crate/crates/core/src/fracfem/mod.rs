//! Nonlocal P1 finite elements: the stiffness matrix of
//!
//! ```text
//! A(u, v) = C(d,s)/2 ∬_{ℝ²×ℝ²} (u(x) − u(y)) (v(x) − v(y)) / |x − y|^{2+2s} dx dy
//! ```
//!
//! for functions extended by zero outside the mesh, and the local mass matrices.

mod complement;
mod mass;
mod singular;
mod sparse;
mod stiffness;

pub use complement::{complement_weight, DomainDescriptor};
pub use mass::{
    assemble_mass, assemble_mass_all_vertices, assemble_weighted_mass, local_weighted_mass, nodal_rule,
    weighted_apply, ElementField, FieldLayout, MassMatrix, WeightedMassMatrix, NODAL_RULE_DEGREE,
};
pub use singular::{PairMatrix, SingularRules};
pub use sparse::{read_triplets, write_triplets, CsrMatrix};
pub use stiffness::{assemble_stiffness, StiffnessMatrix};

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// `C(d,s) = 2^{2s} s Γ(s + d/2) / (π^{d/2} Γ(1 − s))`.
pub fn normalization_constant(s: f64, d: usize) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidOrder(s));
    }
    let df = d as f64;
    Ok(4f64.powf(s) * s * gamma(s + df / 2.0) / (std::f64::consts::PI.powf(df / 2.0) * gamma(1.0 - s)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    pub s: f64,
    pub d: usize,
    pub c_ds: f64,
}

impl FracParams {
    pub fn new(s: f64) -> Result<Self> {
        Ok(FracParams {
            s,
            d: 2,
            c_ds: normalization_constant(s, 2)?,
        })
    }
}

/// Quadrature settings for the stiffness assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyConfig {
    /// Gauss points per direction for touching element pairs.
    pub quad_singular: usize,
    /// Gauss points per direction of the collapsed tensor rule used on both
    /// triangles of a non-touching pair closer than `near_distance` diameters.
    pub quad_near: usize,
    /// Same for the remaining pairs.
    pub quad_far: usize,
    /// Angular resolution of the complement weight (nodes per full turn).
    pub n_angles: usize,
    /// Centroid distance, in element diameters, separating near from far pairs.
    pub near_distance: f64,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            quad_singular: 5,
            quad_near: 4,
            quad_far: 2,
            n_angles: 64,
            near_distance: 3.0,
        }
    }
}

impl AssemblyConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(1..=20).contains(&self.quad_singular) {
            return bad("quad_singular must be in 1..=20");
        }
        if !(1..=20).contains(&self.quad_near) || !(1..=20).contains(&self.quad_far) {
            return bad("quad_near and quad_far must be in 1..=20");
        }
        if self.n_angles < 4 {
            return bad("n_angles must be at least 4");
        }
        if !(self.near_distance >= 0.0 && self.near_distance.is_finite()) {
            return bad("near_distance must be finite and non-negative");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with 30-digit arbitrary-precision Γ.
    const REFERENCE: [(f64, f64); 7] = [
        (0.1, 0.032551422029941055115),
        (0.25, 0.083241983875425065489),
        (0.3, 0.10007289206487783637),
        (0.5, 0.15915494309189533577),
        (0.7, 0.17860038243844473381),
        (0.75, 0.17116712969055234293),
        (0.9, 0.10084985986148907972),
    ];

    #[test]
    fn constant_matches_high_precision_values() {
        for (s, c) in REFERENCE {
            let got = normalization_constant(s, 2).unwrap();
            assert!(((got - c) / c).abs() < 1e-13, "s={s}: {got} vs {c}");
        }
    }

    #[test]
    fn half_order_is_one_over_two_pi() {
        let c = normalization_constant(0.5, 2).unwrap();
        assert!((c - 0.5 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn constant_vanishes_as_s_goes_to_zero() {
        let c = normalization_constant(1e-8, 2).unwrap();
        assert!(c > 0.0 && c < 1e-8);
    }

    #[test]
    fn invalid_orders_are_rejected() {
        for s in [0.0, 1.0, -0.2, f64::NAN] {
            assert!(normalization_constant(s, 2).is_err());
        }
    }

    #[test]
    fn default_config_is_valid_and_bad_ones_are_not() {
        AssemblyConfig::default().validate().unwrap();
        let mut c = AssemblyConfig::default();
        c.quad_far = 21;
        assert!(c.validate().is_err());
        c = AssemblyConfig::default();
        c.quad_singular = 0;
        assert!(c.validate().is_err());
    }
}
