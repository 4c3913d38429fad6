//! Shell projectors `Δ_k`, low-pass sums `S_{k−1}`, and the square function.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{RoleTag, ScalarFieldRZ};
use crate::spectral::partition::DyadicPartition;
use crate::spectral::transform::{Basis, SpectralField, SpectralPlan};
use crate::spectral::vector::{VectorFieldRZ, VectorSpectrum};

/// A transform plan paired with a dyadic partition.
#[derive(Debug, Clone)]
pub struct LittlewoodPaley {
    plan: Arc<SpectralPlan>,
    partition: DyadicPartition,
}

impl LittlewoodPaley {
    pub fn new(plan: Arc<SpectralPlan>, partition: DyadicPartition) -> Self {
        Self { plan, partition }
    }

    pub fn plan(&self) -> &Arc<SpectralPlan> {
        &self.plan
    }

    pub fn partition(&self) -> &DyadicPartition {
        &self.partition
    }

    pub fn shell_spectrum(&self, f: &SpectralField, k: i32) -> Result<SpectralField> {
        self.partition.check(k)?;
        let p = self.partition;
        Ok(f.apply_radial_symbol(move |t| p.symbol(k, t)))
    }

    /// `Δ_k f`.
    pub fn shell_project(&self, f: &ScalarFieldRZ, k: i32) -> Result<ScalarFieldRZ> {
        let s = self.plan.forward(f)?;
        Ok(self.shell_spectrum(&s, k)?.to_field(RoleTag::Shell))
    }

    /// `S_{k−1} f`: the sum of shells `ℓ < k` with `ℓ ∈ range`.
    pub fn low_pass(&self, f: &ScalarFieldRZ, k: i32, range: (i32, i32)) -> Result<ScalarFieldRZ> {
        let s = self.plan.forward(f)?;
        Ok(self.low_pass_spectrum(&s, k, range)?.to_field(RoleTag::Shell))
    }

    pub fn low_pass_spectrum(&self, f: &SpectralField, k: i32, range: (i32, i32)) -> Result<SpectralField> {
        self.partition.check(k)?;
        check_range(&self.partition, range)?;
        let p = self.partition;
        Ok(f.apply_radial_symbol(move |t| p.low_symbol(k, range.0, range.1, t)))
    }

    pub fn shell_project_vector(&self, v: &VectorFieldRZ, k: i32) -> Result<VectorFieldRZ> {
        self.partition.check(k)?;
        let p = self.partition;
        Ok(VectorSpectrum::forward(&self.plan, v)?.apply_radial_symbol(move |t| p.symbol(k, t)).to_field())
    }

    pub fn low_pass_vector(&self, v: &VectorFieldRZ, k: i32, range: (i32, i32)) -> Result<VectorFieldRZ> {
        self.partition.check(k)?;
        check_range(&self.partition, range)?;
        let p = self.partition;
        Ok(VectorSpectrum::forward(&self.plan, v)?
            .apply_radial_symbol(move |t| p.low_symbol(k, range.0, range.1, t))
            .to_field())
    }

    /// All shells of `f`, computed in parallel.
    pub fn decompose(&self, f: &ScalarFieldRZ) -> Result<DyadicDecomposition> {
        let s = self.plan.forward(f)?;
        self.decompose_spectrum(&s)
    }

    pub fn decompose_spectrum(&self, s: &SpectralField) -> Result<DyadicDecomposition> {
        let ks: Vec<i32> = self.partition.shells().collect();
        let shells: Vec<(i32, SpectralField)> = ks
            .par_iter()
            .map(|&k| self.shell_spectrum(s, k).map(|sh| (k, sh)))
            .collect::<Result<_>>()?;
        let spectra: BTreeMap<i32, SpectralField> = shells.into_iter().collect();
        let shells = spectra.iter().map(|(&k, sp)| (k, sp.to_field(RoleTag::Shell))).collect();
        Ok(DyadicDecomposition { partition: self.partition, shells, spectra })
    }

    /// `(∂_r f, ∂_z f)`.
    pub fn gradient5(&self, f: &ScalarFieldRZ) -> Result<VectorFieldRZ> {
        gradient5(&self.plan, f)
    }

    /// `‖Δ_k(U_j G̃_j)‖_{L²(dμ₅)}`.
    pub fn frequency_overlap_check(&self, u_j: &VectorFieldRZ, g_j: &ScalarFieldRZ, k: i32) -> Result<f64> {
        self.partition.check(k)?;
        let product = u_j.mul_scalar(g_j)?;
        let p = self.partition;
        Ok(VectorSpectrum::forward(&self.plan, &product)?
            .apply_radial_symbol(move |t| p.symbol(k, t))
            .norm_sq_mu5()
            .sqrt())
    }
}

fn check_range(p: &DyadicPartition, range: (i32, i32)) -> Result<()> {
    if range.0 > range.1 {
        return Err(Error::EmptyRange(format!("shell range [{}, {}]", range.0, range.1)));
    }
    p.check(range.0)?;
    p.check(range.1)
}

/// `(∂_r f, ∂_z f)` computed spectrally.
pub fn gradient5(plan: &Arc<SpectralPlan>, f: &ScalarFieldRZ) -> Result<VectorFieldRZ> {
    Ok(VectorSpectrum::gradient(&plan.forward(f)?).to_field())
}

/// Shell fields `Δ_k f` for every `k` of a partition.
#[derive(Debug, Clone)]
pub struct DyadicDecomposition {
    partition: DyadicPartition,
    shells: BTreeMap<i32, ScalarFieldRZ>,
    spectra: BTreeMap<i32, SpectralField>,
}

impl DyadicDecomposition {
    pub fn partition(&self) -> &DyadicPartition {
        &self.partition
    }

    pub fn shells(&self) -> &BTreeMap<i32, ScalarFieldRZ> {
        &self.shells
    }

    pub fn shell(&self, k: i32) -> Result<&ScalarFieldRZ> {
        self.partition.check(k)?;
        Ok(&self.shells[&k])
    }

    pub fn spectrum(&self, k: i32) -> Result<&SpectralField> {
        self.partition.check(k)?;
        Ok(&self.spectra[&k])
    }

    /// `‖Δ_k f‖²_{L²(dμ₅)}` by Parseval.
    pub fn shell_norm_sq(&self, k: i32) -> Result<f64> {
        Ok(self.spectrum(k)?.norm_sq_mu5())
    }

    /// `G̃_j = Σ_{|m−j|≤1} Δ_m f`, truncated to the partition.
    pub fn band(&self, j: i32) -> Result<ScalarFieldRZ> {
        self.partition.check(j)?;
        let mut acc: Option<SpectralField> = None;
        for m in (j - 1)..=(j + 1) {
            if let Some(s) = self.spectra.get(&m) {
                acc = Some(match acc {
                    None => s.clone(),
                    Some(a) => a.add(s),
                });
            }
        }
        Ok(acc.expect("j is in range").to_field(RoleTag::Shell))
    }

    /// `Σ_k Δ_k f`.
    pub fn reconstruct(&self) -> ScalarFieldRZ {
        let mut it = self.spectra.values();
        let first = it.next().expect("partition is non-empty").clone();
        it.fold(first, |a, s| a.add(s)).to_field(RoleTag::Generic)
    }
}

/// `Σ_k 2^{2k} ‖Δ_k f‖²_{L²(dμ₅)}`.
pub fn square_function_sum(dec: &DyadicDecomposition) -> f64 {
    square_function_sum_over(dec, dec.partition.k_min(), dec.partition.k_max())
}

/// Square function restricted to `k ∈ [lo, hi]`.
pub fn square_function_sum_over(dec: &DyadicDecomposition, lo: i32, hi: i32) -> f64 {
    dec.spectra
        .range(lo..=hi)
        .map(|(&k, s)| 4f64.powi(k) * s.norm_sq_mu5())
        .sum()
}

/// Random real field whose spectrum is supported in `lo ≤ |ξ| ≤ hi`.
pub fn random_band_limited(plan: &Arc<SpectralPlan>, lo: f64, hi: f64, rng: &mut impl Rng) -> ScalarFieldRZ {
    let mut s = SpectralField::zeros(plan.clone(), Basis::Scalar);
    let nz = plan.grid().nz();
    for n in 0..plan.grid().nr() {
        if plan.rho()[n] > hi {
            break;
        }
        for q in 0..nz {
            let xi = plan.xi(n, q);
            if xi >= lo && xi <= hi && q != nz / 2 {
                s.coeffs_mut()[[n, q]] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
    }
    s.to_field(RoleTag::G)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::HalfPlaneGrid;
    use crate::spectral::partition::Profile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lp(k_min: i32, k_max: i32) -> LittlewoodPaley {
        let plan = SpectralPlan::new(HalfPlaneGrid::new(96, 128, 8.0, 8.0).unwrap()).unwrap();
        LittlewoodPaley::new(plan, DyadicPartition::new(k_min, k_max).unwrap())
    }

    fn mode(plan: &Arc<SpectralPlan>, n: usize, q: usize) -> ScalarFieldRZ {
        let mut s = SpectralField::zeros(plan.clone(), Basis::Scalar);
        s.coeffs_mut()[[n, q]] = Complex64::new(1.0, 0.0);
        s.to_field(RoleTag::G)
    }

    fn rel_err(a: &ScalarFieldRZ, b: &ScalarFieldRZ) -> f64 {
        a.sub(b).unwrap().max_abs() / b.max_abs().max(1e-300)
    }

    #[test]
    fn band_centre_mode_passes_unchanged() {
        // Choose R so that ρ₉ = 4 = 2², the centre of shell 2.
        let r_max = crate::bessel::j1_zeros(10)[9] / 4.0;
        let plan = SpectralPlan::new(HalfPlaneGrid::new(96, 64, r_max, 8.0).unwrap()).unwrap();
        let lp = LittlewoodPaley::new(plan.clone(), DyadicPartition::new(-1, 4).unwrap());
        let f = mode(&plan, 9, 0);
        assert!(rel_err(&lp.shell_project(&f, 2).unwrap(), &f) < 1e-8);
    }

    #[test]
    fn mode_outside_support_is_removed() {
        let lp = lp(-3, 2);
        let plan = lp.plan().clone();
        let n = plan.rho().iter().position(|&r| r >= 32.0).unwrap();
        let f = mode(&plan, n, 0);
        let out = lp.shell_project(&f, 2).unwrap();
        assert!(out.max_abs() < 1e-10 * f.max_abs());
    }

    #[test]
    fn shells_reconstruct_band_limited_field() {
        let lp = lp(-2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_band_limited(lp.plan(), 0.3, 15.0, &mut rng);
        let dec = lp.decompose(&f).unwrap();
        let back = dec.reconstruct();
        let err = back.sub(&f).unwrap().norm_mu5() / f.norm_mu5();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn projector_idempotence_band() {
        let lp = lp(-1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_band_limited(lp.plan(), 0.5, 16.0, &mut rng);
        let s = lp.plan().forward(&f).unwrap();
        let p = *lp.partition();
        for k in p.shells() {
            let twice = lp.shell_spectrum(&lp.shell_spectrum(&s, k).unwrap(), k).unwrap();
            let squared = s.apply_radial_symbol(|t| p.symbol(k, t).powi(2));
            let diff = (twice.coeffs() - squared.coeffs()).mapv(|c| c.norm()).fold(0.0_f64, |a, &b| a.max(b));
            assert!(diff < 1e-15, "k = {k}: {diff}");
        }
    }

    #[test]
    fn bernstein_inequality() {
        let lp = lp(-2, 5);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let f = random_band_limited(lp.plan(), 0.2, 30.0, &mut rng);
            let dec = lp.decompose(&f).unwrap();
            for k in lp.partition().shells() {
                let s = dec.spectrum(k).unwrap();
                let grad = VectorSpectrum::gradient(s).norm_sq_mu5().sqrt();
                let bound = 2f64.powi(k + 1) * s.norm_sq_mu5().sqrt();
                assert!(grad <= bound * (1.0 + 1e-6), "k = {k}: {grad} > {bound}");
            }
        }
    }

    #[test]
    fn square_function_ratio_bounds() {
        let lp = lp(-3, 6);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
            let f = random_band_limited(lp.plan(), 0.25, 40.0, &mut rng);
            let s = lp.plan().forward(&f).unwrap();
            let dec = lp.decompose_spectrum(&s).unwrap();
            let ratio = square_function_sum(&dec) / s.gradient_norm_sq_mu5();
            assert!((0.125..=4.0).contains(&ratio), "{ratio}");
        }
    }

    #[test]
    fn detuned_partition_breaks_square_function_bound() {
        let plan = SpectralPlan::new(HalfPlaneGrid::new(96, 128, 8.0, 8.0).unwrap()).unwrap();
        let p = DyadicPartition::with_profile(-3, 6, Profile::Detuned { inner_ratio: 1.1 }).unwrap();
        let lp = LittlewoodPaley::new(plan, p);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_band_limited(lp.plan(), 0.25, 40.0, &mut rng);
        let s = lp.plan().forward(&f).unwrap();
        let ratio = square_function_sum(&lp.decompose_spectrum(&s).unwrap()) / s.gradient_norm_sq_mu5();
        assert!(ratio < 0.125, "{ratio}");
    }

    #[test]
    fn single_shell_square_function() {
        let lp = lp(0, 4);
        let plan = lp.plan().clone();
        let f = mode(&plan, 3, 0);
        let dec = lp.decompose(&f).unwrap();
        let nonzero: Vec<i32> = (0..=4).filter(|&k| dec.shell_norm_sq(k).unwrap() > 0.0).collect();
        if nonzero.len() == 1 {
            let k = nonzero[0];
            assert_eq!(square_function_sum(&dec), 4f64.powi(k) * dec.shell_norm_sq(k).unwrap());
        }
        let zero = ScalarFieldRZ::zeros(plan.grid().clone(), RoleTag::G);
        assert_eq!(square_function_sum(&lp.decompose(&zero).unwrap()), 0.0);
    }

    #[test]
    fn gradient_of_constant_is_zero_and_matches_finite_differences() {
        let lp = lp(0, 3);
        let g = lp.plan().grid().clone();
        let f = ScalarFieldRZ::from_fn(g.clone(), RoleTag::G, |r, z| (-(r * r + z * z) / 2.0).exp()).unwrap();
        let grad = lp.gradient5(&f).unwrap();
        let r = g.radial_nodes();
        let z = g.z_nodes();
        for &(m, j) in &[(3usize, 60usize), (20, 64), (40, 70)] {
            let (rr, zz) = (r[m], z[j]);
            let v = (-(rr * rr + zz * zz) / 2.0).exp();
            assert!((grad.radial.values()[[m, j]] + rr * v).abs() < 1e-8);
            assert!((grad.axial.values()[[m, j]] + zz * v).abs() < 1e-8);
        }
    }

    #[test]
    fn frequency_overlap_vanishes_for_separated_bands() {
        let lp = lp(-3, 6);
        let f = ScalarFieldRZ::from_fn(lp.plan().grid().clone(), RoleTag::G, |r, z| {
            (-(r * r + (z - 0.3).powi(2)) / 0.5).exp() * (1.0 + 0.5 * (3.0 * z).sin())
                + 0.5 * (-(r * r + (z + 1.0).powi(2)) / 0.1).exp()
        })
        .unwrap();
        let dec = lp.decompose(&f).unwrap();
        let grad = lp.gradient5(&f).unwrap();
        for (j, k) in [(0, 6), (1, 6)] {
            let u = lp.shell_project_vector(&grad, j).unwrap();
            let gt = dec.band(j).unwrap();
            let scale = u.sup_norm() * gt.norm_mu5();
            let far = lp.frequency_overlap_check(&u, &gt, k).unwrap();
            assert!(far < 1e-8 * scale, "({j}, {k}): {}", far / scale);
            let near = lp.frequency_overlap_check(&u, &gt, j + 1).unwrap();
            assert!(near > 1e-3 * scale);
            let zero = VectorFieldRZ::zeros(gt.grid().clone());
            assert_eq!(lp.frequency_overlap_check(&zero, &gt, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn out_of_range_shell_rejected() {
        let lp = lp(0, 3);
        let f = ScalarFieldRZ::zeros(lp.plan().grid().clone(), RoleTag::G);
        assert!(matches!(lp.shell_project(&f, 4), Err(Error::ShellOutOfRange { .. })));
        assert!(lp.low_pass(&f, 2, (0, 5)).is_err());
    }
}
