//! Half-plane grids `(r, z) ∈ (0, R_max) × [-L_z, L_z)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::bessel;
use crate::error::{Error, Result};

/// Fraction of the radial extent beyond which the quadrature end correction acts.
const END_CORRECTION_FROM: f64 = 0.9;
/// Number of even monomial moments `∫ r³ r^{2m} dr` made exact.
const EXACT_MOMENTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Collocation {
    /// Nodes at `j₁,ₘ R / j₁,ₙ₊₁`, compatible with the spectral transforms.
    BesselJ1,
    /// Cell midpoints; accepted by the quadrature routines but not by the transforms.
    Midpoint,
}

#[derive(Debug, Clone)]
pub struct HalfPlaneGrid {
    nr: usize,
    nz: usize,
    r_max: f64,
    z_extent: f64,
    collocation: Collocation,
    radial_nodes: Vec<f64>,
    z_nodes: Vec<f64>,
    /// Weights for `∫₀^R f r³ dr`.
    weights_r3: Vec<f64>,
    /// Weights for `∫₀^R f r dr`.
    weights_r1: Vec<f64>,
    /// J₁ zeros `j₁,₁ … j₁,ₙᵣ₊₁` (empty for midpoint grids).
    zeros: Vec<f64>,
}

impl PartialEq for HalfPlaneGrid {
    fn eq(&self, other: &Self) -> bool {
        self.nr == other.nr
            && self.nz == other.nz
            && self.r_max == other.r_max
            && self.z_extent == other.z_extent
            && self.collocation == other.collocation
    }
}

fn validate(nr: usize, nz: usize, r_max: f64, z_extent: f64) -> Result<()> {
    if nr < 8 {
        return Err(Error::InvalidGrid(format!("nr = {nr} is too small (need >= 8)")));
    }
    if nz < 2 || !nz.is_power_of_two() {
        return Err(Error::InvalidGrid(format!("nz = {nz} must be a power of two")));
    }
    if !(r_max.is_finite() && r_max > 0.0) || !(z_extent.is_finite() && z_extent > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "extents must be positive (R_max = {r_max}, L_z = {z_extent})"
        )));
    }
    Ok(())
}

impl HalfPlaneGrid {
    /// Bessel-J₁-zero collocation grid.
    pub fn new(nr: usize, nz: usize, r_max: f64, z_extent: f64) -> Result<Arc<Self>> {
        validate(nr, nz, r_max, z_extent)?;
        let zeros = bessel::j1_zeros(nr + 1);
        let s = zeros[nr];
        let radial_nodes: Vec<f64> = zeros[..nr].iter().map(|j| j * r_max / s).collect();
        let rho: Vec<f64> = zeros[..nr].iter().map(|j| j / r_max).collect();

        // Collocation matrix of the scalar basis J₁(ρₙ r)/r; weights integrate it exactly.
        let basis = DMatrix::from_fn(nr, nr, |m, n| bessel::j1(rho[n] * radial_nodes[m]) / radial_nodes[m]);
        let lu = basis.transpose().lu();
        // ∫₀^R r² J₁(ρr) dr = R² J₂(ρR) / ρ
        let mom3 = DVector::from_fn(nr, |n, _| r_max * r_max * bessel::j2(zeros[n]) / rho[n]);
        // ∫₀^R J₁(ρr) dr = (1 − J₀(ρR)) / ρ
        let mom1 = DVector::from_fn(nr, |n, _| (1.0 - bessel::j0(zeros[n])) / rho[n]);
        let w3 = lu
            .solve(&mom3)
            .ok_or_else(|| Error::InvalidGrid("singular collocation matrix".into()))?;
        let w1 = lu
            .solve(&mom1)
            .ok_or_else(|| Error::InvalidGrid("singular collocation matrix".into()))?;
        let mut weights_r3: Vec<f64> = w3.iter().copied().collect();
        end_correct(&radial_nodes, &mut weights_r3, r_max);

        Ok(Arc::new(Self {
            nr,
            nz,
            r_max,
            z_extent,
            collocation: Collocation::BesselJ1,
            z_nodes: z_nodes(nz, z_extent),
            radial_nodes,
            weights_r3,
            weights_r1: w1.iter().copied().collect(),
            zeros,
        }))
    }

    /// Uniform midpoint grid (quadrature only).
    pub fn midpoint(nr: usize, nz: usize, r_max: f64, z_extent: f64) -> Result<Arc<Self>> {
        validate(nr, nz, r_max, z_extent)?;
        let dr = r_max / nr as f64;
        let radial_nodes: Vec<f64> = (0..nr).map(|m| (m as f64 + 0.5) * dr).collect();
        Ok(Arc::new(Self {
            nr,
            nz,
            r_max,
            z_extent,
            collocation: Collocation::Midpoint,
            z_nodes: z_nodes(nz, z_extent),
            weights_r3: radial_nodes.iter().map(|r| r.powi(3) * dr).collect(),
            weights_r1: radial_nodes.iter().map(|r| r * dr).collect(),
            radial_nodes,
            zeros: Vec::new(),
        }))
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn z_extent(&self) -> f64 {
        self.z_extent
    }

    pub fn collocation(&self) -> Collocation {
        self.collocation
    }

    pub fn radial_nodes(&self) -> &[f64] {
        &self.radial_nodes
    }

    pub fn z_nodes(&self) -> &[f64] {
        &self.z_nodes
    }

    /// Radial weights for the lifted measure `r³ dr`.
    pub fn quadrature_weights_r(&self) -> &[f64] {
        &self.weights_r3
    }

    /// Radial weights for the meridional measure `r dr`.
    pub fn quadrature_weights_r1(&self) -> &[f64] {
        &self.weights_r1
    }

    pub fn dz(&self) -> f64 {
        2.0 * self.z_extent / self.nz as f64
    }

    /// Largest gap between consecutive radial nodes (including the gap to the axis).
    pub fn dr(&self) -> f64 {
        let mut gap = self.radial_nodes[0];
        for w in self.radial_nodes.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        gap
    }

    /// Smallest cell size in either direction.
    pub fn min_cell(&self) -> f64 {
        let mut gap = self.radial_nodes[0];
        for w in self.radial_nodes.windows(2) {
            gap = gap.min(w[1] - w[0]);
        }
        gap.min(self.dz())
    }

    /// Radial wavenumbers `ρₙ = j₁,ₙ / R` of the transform basis.
    pub fn radial_wavenumbers(&self) -> Option<Vec<f64>> {
        match self.collocation {
            Collocation::BesselJ1 => Some(self.zeros[..self.nr].iter().map(|j| j / self.r_max).collect()),
            Collocation::Midpoint => None,
        }
    }

    pub(crate) fn bessel_zeros(&self) -> &[f64] {
        &self.zeros
    }

    /// Vertical wavenumber of FFT bin `q` (Nyquist bin reported as positive).
    pub fn vertical_wavenumber(&self, q: usize) -> f64 {
        let n = self.nz as i64;
        let signed = if (q as i64) <= n / 2 { q as i64 } else { q as i64 - n };
        std::f64::consts::PI * signed as f64 / self.z_extent
    }

    pub fn index(&self, m: usize, j: usize) -> usize {
        m * self.nz + j
    }

    pub fn len(&self) -> usize {
        self.nr * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn z_nodes(nz: usize, z_extent: f64) -> Vec<f64> {
    let dz = 2.0 * z_extent / nz as f64;
    (0..nz).map(|j| -z_extent + j as f64 * dz).collect()
}

/// Minimal-norm correction on the outer nodes so that `∫₀^R r³ r^{2m} dr` is exact.
fn end_correct(nodes: &[f64], weights: &mut [f64], r_max: f64) {
    let n = nodes.len();
    let tail = (0..n)
        .filter(|&m| nodes[m] > END_CORRECTION_FROM * r_max)
        .count()
        .max(2 * EXACT_MOMENTS)
        .min(n);
    let outer: Vec<usize> = (n - tail..n).collect();
    let a = DMatrix::from_fn(EXACT_MOMENTS, outer.len(), |p, c| (nodes[outer[c]] / r_max).powi(2 * p as i32));
    let b = DVector::from_fn(EXACT_MOMENTS, |p, _| {
        let exact = r_max.powi(4 + 2 * p as i32) / (4 + 2 * p) as f64;
        let approx: f64 = nodes
            .iter()
            .zip(weights.iter())
            .map(|(r, w)| w * r.powi(2 * p as i32))
            .sum();
        (exact - approx) / r_max.powi(2 * p as i32)
    });
    let gram = &a * a.transpose();
    if let Some(y) = gram.lu().solve(&b) {
        let corr = a.transpose() * y;
        for (c, &m) in outer.iter().enumerate() {
            weights[m] += corr[c];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_positive_increasing() {
        let g = HalfPlaneGrid::new(64, 32, 6.0, 4.0).unwrap();
        assert!(g.radial_nodes()[0] > 0.0);
        for w in g.radial_nodes().windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(*g.radial_nodes().last().unwrap() < 6.0);
    }

    #[test]
    fn quadrature_reproduces_r3() {
        for &(nr, r) in &[(32, 3.0), (128, 12.0), (192, 8.0)] {
            let g = HalfPlaneGrid::new(nr, 16, r, 1.0).unwrap();
            let s: f64 = g.quadrature_weights_r().iter().sum();
            let exact = r.powi(4) / 4.0;
            assert!(((s - exact) / exact).abs() < 1e-10, "nr = {nr}: {s} vs {exact}");
        }
    }

    #[test]
    fn quadrature_even_moments() {
        let g = HalfPlaneGrid::new(128, 16, 10.0, 1.0).unwrap();
        for m in 0..4 {
            let s: f64 = g
                .radial_nodes()
                .iter()
                .zip(g.quadrature_weights_r())
                .map(|(r, w)| w * r.powi(2 * m))
                .sum();
            let exact = 10f64.powi(4 + 2 * m) / (4 + 2 * m) as f64;
            assert!(((s - exact) / exact).abs() < 1e-8, "m = {m}");
        }
    }

    #[test]
    fn weights_positive() {
        for &nr in &[32, 64, 192, 256] {
            let g = HalfPlaneGrid::new(nr, 16, 8.0, 1.0).unwrap();
            assert!(g.quadrature_weights_r().iter().all(|&w| w > 0.0), "nr = {nr}");
            assert!(g.quadrature_weights_r1().iter().all(|&w| w > 0.0), "nr = {nr}");
        }
    }

    #[test]
    fn gaussian_moment() {
        let g = HalfPlaneGrid::new(96, 16, 8.0, 1.0).unwrap();
        let s: f64 = g
            .radial_nodes()
            .iter()
            .zip(g.quadrature_weights_r())
            .map(|(r, w)| w * (-r * r).exp())
            .sum();
        assert!((s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(HalfPlaneGrid::new(64, 48, 1.0, 1.0).is_err());
        assert!(HalfPlaneGrid::new(64, 64, -1.0, 1.0).is_err());
        assert!(HalfPlaneGrid::new(4, 64, 1.0, 1.0).is_err());
    }
}
