//! Equivariant 5D vector fields `v(r,z) x'/|x'| + w(r,z) e_z`.

use std::sync::Arc;

use ndarray::Zip;
use num_complex::Complex64;

use crate::error::Result;
use crate::field::{RoleTag, ScalarFieldRZ};
use crate::spectral::transform::{Basis, SpectralField, SpectralPlan};

#[derive(Debug, Clone)]
pub struct VectorFieldRZ {
    /// Coefficient of `x'/|x'|`.
    pub radial: ScalarFieldRZ,
    /// Coefficient of `e_z`.
    pub axial: ScalarFieldRZ,
}

impl VectorFieldRZ {
    pub fn new(radial: ScalarFieldRZ, axial: ScalarFieldRZ) -> Result<Self> {
        radial.same_grid(&axial)?;
        Ok(Self { radial, axial })
    }

    pub fn zeros(grid: Arc<crate::grid::HalfPlaneGrid>) -> Self {
        Self {
            radial: ScalarFieldRZ::zeros(grid.clone(), RoleTag::Generic),
            axial: ScalarFieldRZ::zeros(grid, RoleTag::Generic),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { radial: self.radial.scaled(c), axial: self.axial.scaled(c) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self { radial: self.radial.add(&other.radial)?, axial: self.axial.add(&other.axial)? })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self { radial: self.radial.sub(&other.radial)?, axial: self.axial.sub(&other.axial)? })
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar(&self, f: &ScalarFieldRZ) -> Result<Self> {
        Ok(Self { radial: self.radial.mul(f)?, axial: self.axial.mul(f)? })
    }

    /// Pointwise `v · w`.
    pub fn dot(&self, other: &Self) -> Result<ScalarFieldRZ> {
        self.radial.mul(&other.radial)?.add(&self.axial.mul(&other.axial)?)
    }

    /// Largest pointwise Euclidean length over the nodes.
    pub fn sup_norm(&self) -> f64 {
        let mut best = 0.0_f64;
        Zip::from(self.radial.values())
            .and(self.axial.values())
            .for_each(|a, b| best = best.max(a.hypot(*b)));
        best
    }

    /// `‖v‖_{L²(dμ₅)}` by quadrature.
    pub fn norm_mu5(&self) -> f64 {
        self.radial.norm_mu5().hypot(self.axial.norm_mu5())
    }

    pub fn max_abs(&self) -> f64 {
        self.radial.max_abs().max(self.axial.max_abs())
    }
}

/// Spectral coefficients of a [`VectorFieldRZ`]: radial part in the vector basis, axial in the scalar one.
#[derive(Debug, Clone)]
pub struct VectorSpectrum {
    pub radial: SpectralField,
    pub axial: SpectralField,
}

impl VectorSpectrum {
    pub fn forward(plan: &Arc<SpectralPlan>, v: &VectorFieldRZ) -> Result<Self> {
        Ok(Self {
            radial: plan.forward_in(&v.radial, Basis::VectorRadial)?,
            axial: plan.forward_in(&v.axial, Basis::Scalar)?,
        })
    }

    /// Exact gradient of a scalar-basis field.
    pub fn gradient(f: &SpectralField) -> Self {
        let plan = f.plan().clone();
        let rho = plan.rho().to_vec();
        let zeta = plan.zeta_deriv().to_vec();
        Self {
            radial: f.apply_mode_symbol(Basis::VectorRadial, |n, _| Complex64::new(-rho[n], 0.0)),
            axial: f.apply_mode_symbol(Basis::Scalar, |_, q| Complex64::new(0.0, zeta[q])),
        }
    }

    /// `∂_r v + (3/r) v + ∂_z w`, exact in the scalar basis.
    pub fn divergence(&self) -> SpectralField {
        let plan = self.radial.plan().clone();
        let rho = plan.rho();
        let zeta = plan.zeta_deriv();
        let mut out = SpectralField::zeros(plan.clone(), Basis::Scalar);
        Zip::indexed(out.coeffs_mut())
            .and(self.radial.coeffs())
            .and(self.axial.coeffs())
            .for_each(|(n, q), o, a, b| *o = rho[n] * *a + Complex64::new(0.0, zeta[q]) * *b);
        out
    }

    pub fn apply_radial_symbol(&self, m: impl Fn(f64) -> f64 + Copy) -> Self {
        Self { radial: self.radial.apply_radial_symbol(m), axial: self.axial.apply_radial_symbol(m) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { radial: self.radial.add(&other.radial), axial: self.axial.add(&other.axial) }
    }

    pub fn norm_sq_mu5(&self) -> f64 {
        self.radial.norm_sq_mu5() + self.axial.norm_sq_mu5()
    }

    pub fn inner_mu5(&self, other: &Self) -> f64 {
        self.radial.inner_mu5(&other.radial) + self.axial.inner_mu5(&other.axial)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { radial: self.radial.scale(s), axial: self.axial.scale(s) }
    }

    pub fn to_field(&self) -> VectorFieldRZ {
        VectorFieldRZ {
            radial: self.radial.to_field(RoleTag::Generic),
            axial: self.axial.to_field(RoleTag::Generic),
        }
    }
}
