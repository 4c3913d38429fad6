//! Hankel ⊗ Fourier transform for SO(4)-radial fields.
//!
//! Scalars are expanded in `J₁(ρₙ r)/r · e^{iζ z}`, which diagonalises
//! `Δ₅ = ∂_rr + (3/r)∂_r + ∂_zz` with symbol `−(ρₙ² + ζ²)`. The radial
//! component of an equivariant 5D vector field (`v(r,z) x'/|x'|`) is expanded
//! in `J₂(ρₙ r)/r` with the *same* `ρₙ = j₁,ₙ/R`, so that
//! `∂_r [J₁(ρr)/r] = −ρ J₂(ρr)/r` and `∂_r [J₂(ρr)/r] + (3/r) J₂(ρr)/r = ρ J₁(ρr)/r`:
//! gradient and divergence act on coefficients only.

use std::sync::Arc;

use nalgebra::DMatrix;
use ndarray::{Array2, Axis, Zip};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::bessel;
use crate::error::{Error, Result};
use crate::field::{RoleTag, ScalarFieldRZ};
use crate::grid::{Collocation, HalfPlaneGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// `J₁(ρr)/r`: SO(4)-radial scalars and the axial component of vectors.
    Scalar,
    /// `J₂(ρr)/r`: radial component of equivariant vector fields.
    VectorRadial,
}

struct RadialMatrices {
    /// Basis values at the nodes, `nr × nr` (node, mode).
    synth: Array2<f64>,
    /// Inverse of `synth`.
    analysis: Array2<f64>,
}

pub struct SpectralPlan {
    grid: Arc<HalfPlaneGrid>,
    rho: Vec<f64>,
    zeta: Vec<f64>,
    /// ζ used for ∂_z; zero at the Nyquist bin so derivatives stay real.
    zeta_deriv: Vec<f64>,
    norms: Vec<f64>,
    scalar: RadialMatrices,
    vector: RadialMatrices,
    /// `∂_r [J₂(ρr)/r]` at the nodes.
    vector_radial_derivative: Array2<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan")
            .field("nr", &self.grid.nr())
            .field("nz", &self.grid.nz())
            .finish()
    }
}

fn invert(m: &Array2<f64>) -> Result<Array2<f64>> {
    let n = m.nrows();
    let dm = DMatrix::from_fn(n, n, |i, j| m[[i, j]]);
    let inv = dm
        .try_inverse()
        .ok_or_else(|| Error::InvalidGrid("radial collocation matrix is singular".into()))?;
    Ok(Array2::from_shape_fn((n, n), |(i, j)| inv[(i, j)]))
}

impl SpectralPlan {
    pub fn new(grid: Arc<HalfPlaneGrid>) -> Result<Arc<Self>> {
        if grid.collocation() != Collocation::BesselJ1 {
            return Err(Error::InvalidGrid(
                "unsupported grid: spectral transforms need Bessel-J1 collocation".into(),
            ));
        }
        let nr = grid.nr();
        let nz = grid.nz();
        let rho = grid.radial_wavenumbers().expect("bessel grid");
        let r = grid.radial_nodes();
        let r_max = grid.r_max();

        let mut s1 = Array2::zeros((nr, nr));
        let mut s2 = Array2::zeros((nr, nr));
        let mut d2 = Array2::zeros((nr, nr));
        for m in 0..nr {
            for n in 0..nr {
                let x = rho[n] * r[m];
                let [_, b1, b2] = bessel::j012(x);
                s1[[m, n]] = b1 / r[m];
                s2[[m, n]] = b2 / r[m];
                // d/dr [J₂(ρr)/r] = ρ J₂'(ρr)/r − J₂/r², J₂' = J₁ − 2J₂/x
                d2[[m, n]] = rho[n] * (b1 - 2.0 * b2 / x) / r[m] - b2 / (r[m] * r[m]);
            }
        }
        let norms = grid.bessel_zeros()[..nr]
            .iter()
            .map(|&j| r_max * r_max * bessel::j2(j).powi(2) / 2.0)
            .collect();
        let zeta: Vec<f64> = (0..nz).map(|q| grid.vertical_wavenumber(q)).collect();
        let zeta_deriv = zeta
            .iter()
            .enumerate()
            .map(|(q, &z)| if nz % 2 == 0 && q == nz / 2 { 0.0 } else { z })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            fft: planner.plan_fft_forward(nz),
            ifft: planner.plan_fft_inverse(nz),
            scalar: RadialMatrices { analysis: invert(&s1)?, synth: s1 },
            vector: RadialMatrices { analysis: invert(&s2)?, synth: s2 },
            vector_radial_derivative: d2,
            rho,
            zeta,
            zeta_deriv,
            norms,
            grid,
        }))
    }

    pub fn grid(&self) -> &Arc<HalfPlaneGrid> {
        &self.grid
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn zeta_deriv(&self) -> &[f64] {
        &self.zeta_deriv
    }

    /// `|ξ|` of mode `(n, q)`.
    pub fn xi(&self, n: usize, q: usize) -> f64 {
        self.rho[n].hypot(self.zeta[q])
    }

    /// Largest `|ξ|` represented on the grid.
    pub fn xi_max(&self) -> f64 {
        let z = self.zeta.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        self.rho.last().copied().unwrap_or(0.0).hypot(z)
    }

    /// `∫₀^R (basis_n)² r³ dr`, identical for both bases.
    pub fn radial_norms(&self) -> &[f64] {
        &self.norms
    }

    fn matrices(&self, basis: Basis) -> &RadialMatrices {
        match basis {
            Basis::Scalar => &self.scalar,
            Basis::VectorRadial => &self.vector,
        }
    }

    fn check_grid(&self, f: &ScalarFieldRZ) -> Result<()> {
        if Arc::ptr_eq(&self.grid, f.grid()) || **f.grid() == *self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("field grid differs from transform grid".into()))
        }
    }

    pub fn forward(self: &Arc<Self>, f: &ScalarFieldRZ) -> Result<SpectralField> {
        self.forward_in(f, Basis::Scalar)
    }

    pub fn forward_in(self: &Arc<Self>, f: &ScalarFieldRZ, basis: Basis) -> Result<SpectralField> {
        self.check_grid(f)?;
        Ok(self.forward_values(f.values(), basis))
    }

    pub(crate) fn forward_values(self: &Arc<Self>, values: &Array2<f64>, basis: Basis) -> SpectralField {
        let radial = self.matrices(basis).analysis.dot(values);
        let nz = self.grid.nz();
        let scale = 1.0 / nz as f64;
        let mut coeffs = radial.mapv(|v| Complex64::new(v, 0.0));
        for mut row in coeffs.axis_iter_mut(Axis(0)) {
            let slice = row.as_slice_mut().expect("row-major coefficients");
            self.fft.process(slice);
            for c in slice.iter_mut() {
                *c *= scale;
            }
        }
        SpectralField { plan: self.clone(), basis, coeffs }
    }

    pub(crate) fn inverse_values(&self, field: &SpectralField) -> Array2<f64> {
        let mut work = field.coeffs.clone();
        for mut row in work.axis_iter_mut(Axis(0)) {
            let slice = row.as_slice_mut().expect("row-major coefficients");
            self.ifft.process(slice);
        }
        let real = work.mapv(|c| c.re);
        self.matrices(field.basis).synth.dot(&real)
    }

    pub fn inverse(&self, field: &SpectralField, role: RoleTag) -> ScalarFieldRZ {
        ScalarFieldRZ::from_parts(self.grid.clone(), self.inverse_values(field), role)
    }

    /// `∂_z` of nodal values, row by row through the FFT.
    pub fn dz_values(&self, values: &Array2<f64>) -> Array2<f64> {
        let nz = self.grid.nz();
        let mut work = values.mapv(|v| Complex64::new(v, 0.0));
        for mut row in work.axis_iter_mut(Axis(0)) {
            let slice = row.as_slice_mut().expect("row-major values");
            self.fft.process(slice);
            for (q, c) in slice.iter_mut().enumerate() {
                *c *= Complex64::new(0.0, self.zeta_deriv[q] / nz as f64);
            }
            self.ifft.process(slice);
        }
        work.mapv(|c| c.re)
    }

    /// `∂_r` at the nodes of a field expanded in the vector-radial basis.
    pub fn vector_radial_derivative(&self, field: &SpectralField) -> Array2<f64> {
        debug_assert_eq!(field.basis, Basis::VectorRadial);
        let mut work = field.coeffs.clone();
        for mut row in work.axis_iter_mut(Axis(0)) {
            self.ifft.process(row.as_slice_mut().expect("row-major coefficients"));
        }
        self.vector_radial_derivative.dot(&work.mapv(|c| c.re))
    }
}

/// Coefficients over (radial mode `n`, vertical FFT bin `q`).
#[derive(Clone)]
pub struct SpectralField {
    plan: Arc<SpectralPlan>,
    basis: Basis,
    coeffs: Array2<Complex64>,
}

impl std::fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralField").field("basis", &self.basis).field("shape", &self.coeffs.dim()).finish()
    }
}

impl SpectralField {
    pub fn zeros(plan: Arc<SpectralPlan>, basis: Basis) -> Self {
        let coeffs = Array2::zeros((plan.grid.nr(), plan.grid.nz()));
        Self { plan, basis, coeffs }
    }

    pub fn plan(&self) -> &Arc<SpectralPlan> {
        &self.plan
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.coeffs
    }

    /// Multiplies every mode by `m(|ξ|)`.
    pub fn apply_radial_symbol(&self, m: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for ((n, q), c) in out.coeffs.indexed_iter_mut() {
            *c *= m(self.plan.xi(n, q));
        }
        out
    }

    /// Multiplies every mode by `m(n, q)`.
    pub fn apply_mode_symbol(&self, basis: Basis, m: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut out = self.clone();
        out.basis = basis;
        for ((n, q), c) in out.coeffs.indexed_iter_mut() {
            *c *= m(n, q);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.basis, other.basis);
        let mut out = self.clone();
        Zip::from(&mut out.coeffs).and(&other.coeffs).for_each(|a, b| *a += *b);
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.mapv_inplace(|c| c * s);
        out
    }

    /// `‖f‖²_{L²(dμ₅)}` by Parseval: `2L Σ Nₙ |c_{nq}|²`.
    pub fn norm_sq_mu5(&self) -> f64 {
        let norms = self.plan.radial_norms();
        let mut total = 0.0;
        for (n, row) in self.coeffs.outer_iter().enumerate() {
            total += norms[n] * row.iter().map(|c| c.norm_sqr()).sum::<f64>();
        }
        2.0 * self.plan.grid.z_extent() * total
    }

    /// `‖∇₅ f‖²_{L²(dμ₅)}` by Parseval (scalar basis).
    /// `∫ f g dμ₅` by Parseval; both fields must share a basis.
    pub fn inner_mu5(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.basis, other.basis);
        let norms = self.plan.radial_norms();
        let mut total = 0.0;
        for (n, (a, b)) in self.coeffs.outer_iter().zip(other.coeffs.outer_iter()).enumerate() {
            total += norms[n] * a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum::<f64>();
        }
        2.0 * self.plan.grid.z_extent() * total
    }

    pub fn gradient_norm_sq_mu5(&self) -> f64 {
        let norms = self.plan.radial_norms();
        let mut total = 0.0;
        for ((n, q), c) in self.coeffs.indexed_iter() {
            total += norms[n] * self.plan.xi(n, q).powi(2) * c.norm_sqr();
        }
        2.0 * self.plan.grid.z_extent() * total
    }

    pub fn to_field(&self, role: RoleTag) -> ScalarFieldRZ {
        self.plan.inverse(self, role)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::lifted_l2_norm_sq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plan() -> Arc<SpectralPlan> {
        SpectralPlan::new(HalfPlaneGrid::new(64, 64, 8.0, 8.0).unwrap()).unwrap()
    }

    fn random_packet_field(plan: &Arc<SpectralPlan>, seed: u64) -> ScalarFieldRZ {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, zc, k, s) = (rng.gen_range(0.5..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.0..2.0), rng.gen_range(0.8..1.2));
        ScalarFieldRZ::from_fn(plan.grid().clone(), RoleTag::G, move |r, z| {
            a * (-(r * r + (z - zc).powi(2)) / (2.0 * s * s)).exp() * (k * z).cos()
        })
        .unwrap()
    }

    #[test]
    fn unsupported_grid() {
        let g = HalfPlaneGrid::midpoint(32, 32, 1.0, 1.0).unwrap();
        assert!(matches!(SpectralPlan::new(g), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn zero_field() {
        let p = plan();
        let f = ScalarFieldRZ::zeros(p.grid().clone(), RoleTag::G);
        let s = p.forward(&f).unwrap();
        assert!(s.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn round_trip_both_bases() {
        let p = plan();
        for seed in 0..5 {
            let f = random_packet_field(&p, seed);
            for basis in [Basis::Scalar, Basis::VectorRadial] {
                let back = p.inverse(&p.forward_in(&f, basis).unwrap(), RoleTag::G);
                let err = (back.values() - f.values()).mapv(f64::abs).fold(0.0_f64, |a, &b| a.max(b));
                assert!(err < 1e-10 * f.max_abs(), "{basis:?}: {err}");
            }
        }
    }

    #[test]
    fn plancherel_matches_quadrature() {
        let p = plan();
        for seed in 10..20 {
            let f = random_packet_field(&p, seed);
            let quad = lifted_l2_norm_sq(&f) / crate::field::SPHERE3_AREA;
            let spec = p.forward(&f).unwrap().norm_sq_mu5();
            assert!(((quad - spec) / quad).abs() < 1e-6, "{quad} vs {spec}");
        }
    }

    #[test]
    fn single_mode_is_eigenfunction() {
        // J₁(ρr)/r cos(ζz) is reproduced exactly by one coefficient pair.
        let p = plan();
        let (n, q) = (3usize, 4usize);
        let (rho, zeta) = (p.rho()[n], p.zeta()[q]);
        let f = ScalarFieldRZ::from_fn(p.grid().clone(), RoleTag::G, |r, z| {
            bessel::j1(rho * r) / r * (zeta * (z + 8.0)).cos()
        })
        .unwrap();
        let s = p.forward(&f).unwrap();
        for ((a, b), c) in s.coeffs().indexed_iter() {
            let expected = if a == n && (b == q || b == 64 - q) { 0.5 } else { 0.0 };
            assert!((c.re - expected).abs() < 1e-10 && c.im.abs() < 1e-10, "({a},{b}) = {c}");
        }
    }

    #[test]
    fn vector_derivative_matches_finite_difference() {
        let p = plan();
        let f = random_packet_field(&p, 3);
        let s = p.forward_in(&f, Basis::VectorRadial).unwrap();
        let d = p.vector_radial_derivative(&s);
        // Compare with centred differences of the basis expansion evaluated off-grid.
        let coeff_cols = {
            let mut w = s.coeffs().clone();
            for mut row in w.axis_iter_mut(Axis(0)) {
                p.ifft.process(row.as_slice_mut().unwrap());
            }
            w.mapv(|c| c.re)
        };
        let eval = |r: f64, j: usize| -> f64 {
            (0..p.grid().nr()).map(|n| bessel::j2(p.rho()[n] * r) / r * coeff_cols[[n, j]]).sum()
        };
        let h = 1e-5;
        for &m in &[5usize, 17, 30] {
            let r = p.grid().radial_nodes()[m];
            let fd = (eval(r + h, 32) - eval(r - h, 32)) / (2.0 * h);
            assert!((fd - d[[m, 32]]).abs() < 1e-6 * (1.0 + fd.abs()), "m = {m}: {fd} vs {}", d[[m, 32]]);
        }
    }
}
