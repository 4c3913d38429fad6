//! Bony decomposition of the lifted transport term over a singular shell range, the Ψ
//! factors, Schur sums, the audit inequality and the starvation monitor.

use std::collections::BTreeMap;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::biot_savart::{ball_sup, lifted_velocity, LiftedVelocity};
use crate::error::{Error, Result};
use crate::extraction::{self, delta_sup};
use crate::field::{ball_mass, AxisBall, ScalarFieldRZ};
use crate::grid::HalfPlaneGrid;
use crate::packets::{self, BranchLabel, ClassifyParams, CoverParams};
use crate::spectral::{
    square_function_sum_over, LittlewoodPaley, SpectralField, VectorFieldRZ, VectorSpectrum,
};

/// Margin applied on top of the largest calibration ratio.
pub const FIT_MARGIN: f64 = 1.25;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParaproductReport {
    pub k_range: (i32, i32),
    /// `D_k = 2^k ‖Δ_k G‖`.
    pub d: BTreeMap<i32, f64>,
    pub i_lh: BTreeMap<i32, f64>,
    pub i_hl: BTreeMap<i32, f64>,
    pub i_hh: BTreeMap<i32, f64>,
    /// `∫ (U·∇G) G dμ₅` over the whole domain.
    pub n_total: f64,
    /// `Σ_k (I_LH + I_HL + I_HH)`, restricted to the covers when given.
    pub n_local: f64,
    pub d_crit: f64,
    pub r_low: f64,
    /// Unrestricted minus cover-restricted interaction sum (zero without covers).
    pub cover_exterior: f64,
    pub delta: f64,
    pub j_min: i32,
    pub psi: f64,
    pub psi_hl: f64,
    pub psi_hh: f64,
    pub fitted_c: f64,
    /// `Ψ·D_crit + C·R_low − |n_local|`.
    pub margin: f64,
    pub bound_pass: bool,
}

impl ParaproductReport {
    pub fn interaction_sum(&self) -> f64 {
        self.n_local
    }

    /// `|n_local| / D_crit` (zero when `D_crit = 0`).
    pub fn normalized_nonlinearity(&self) -> f64 {
        if self.d_crit > 0.0 {
            self.n_local.abs() / self.d_crit
        } else {
            0.0
        }
    }

    /// CSV rows `k,D_k,I_LH,I_HL,I_HH`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,D_k,I_LH,I_HL,I_HH\n");
        for (k, d) in &self.d {
            out.push_str(&format!(
                "{k},{d:.12e},{:.12e},{:.12e},{:.12e}\n",
                self.i_lh.get(k).copied().unwrap_or(0.0),
                self.i_hl.get(k).copied().unwrap_or(0.0),
                self.i_hh.get(k).copied().unwrap_or(0.0)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiFactors {
    pub psi: f64,
    pub psi_hl: f64,
    pub psi_hh: f64,
}

/// `Ψ = C√δ Σ_{ℓ≥j_min} 2^{−ℓ/2}`, `Ψ_HL = Ψ_HH = C N₀ √δ 2^{−3 j_min/2}`.
pub fn psi_factors(delta: f64, j_min: i32, n0: usize, c: f64) -> Result<PsiFactors> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("delta {delta} must be non-negative")));
    }
    let root = delta.sqrt();
    let psi = c * root * 2f64.powf(-j_min as f64 / 2.0) / (1.0 - 0.5f64.sqrt());
    let psi_hl = c * n0 as f64 * root * 2f64.powf(-1.5 * j_min as f64);
    Ok(PsiFactors { psi, psi_hl, psi_hh: psi_hl })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchurDirection {
    /// Kernel `2^{−e(k−ℓ)}` for `ℓ < k`.
    Lower,
    /// Kernel `2^{−e(j−k)}` for `j > k`.
    Upper,
}

/// `Σ_k Σ_ℓ K(k, ℓ) D_ℓ D_k` for the one-sided kernel.
pub fn schur_sum(d: &BTreeMap<i32, f64>, exponent: f64, direction: SchurDirection) -> f64 {
    let mut total = 0.0;
    for (&k, &dk) in d {
        for (&l, &dl) in d {
            let gap = match direction {
                SchurDirection::Lower => k - l,
                SchurDirection::Upper => l - k,
            };
            if gap > 0 {
                total += 2f64.powf(-exponent * gap as f64) * dl * dk;
            }
        }
    }
    total
}

/// `Σ_{m≥1} 2^{−e m}`.
pub fn schur_constant(exponent: f64) -> f64 {
    let q = 2f64.powf(-exponent);
    q / (1.0 - q)
}

/// `max · FIT_MARGIN` over finite ratios.
pub fn fit_constant(ratios: &[f64]) -> f64 {
    ratios.iter().copied().filter(|r| r.is_finite()).fold(0.0, f64::max) * FIT_MARGIN
}

/// Least-squares exponent `M` in `value ≈ A (1 + d)^{−M}`, ignoring `d = 0` and non-positive values.
pub fn fit_decay_exponent(samples: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(d, v)| *d > 0.0 && *v > 0.0)
        .map(|(d, v)| ((1.0 + d).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

/// Every lattice ball `B_{2^{−k}}(i·2^{−k})` with centre in `[−L, L)`, ordered by `i`.
pub fn lattice_balls(grid: &HalfPlaneGrid, k: i32) -> Vec<AxisBall> {
    let h = 2f64.powi(-k);
    let l = grid.z_extent();
    let first = (-l / h).ceil() as i64;
    (first..)
        .map(|i| i as f64 * h)
        .take_while(|&z| z < l)
        .map(|z| AxisBall::new(z, h).expect("positive radius"))
        .collect()
}

/// Periodic index distance on a lattice of `n` balls.
pub fn lattice_distance(i: usize, m: usize, n: usize) -> usize {
    let d = i.abs_diff(m);
    d.min(n - d)
}

/// Per-row node counts of the union of axis balls.
fn union_counts(grid: &HalfPlaneGrid, balls: &[AxisBall]) -> Vec<usize> {
    let mut counts = vec![0usize; grid.nz()];
    for b in balls {
        for (c, n) in counts.iter_mut().zip(b.row_counts(grid)) {
            *c = (*c).max(n);
        }
    }
    counts
}

/// `∫_mask a b dμ₅` by node quadrature.
fn masked_inner(grid: &HalfPlaneGrid, a: &Array2<f64>, b: &Array2<f64>, counts: &[usize]) -> f64 {
    let w = grid.quadrature_weights_r();
    let mut total = 0.0;
    for (j, &c) in counts.iter().enumerate() {
        for m in 0..c {
            total += w[m] * a[[m, j]] * b[[m, j]];
        }
    }
    total * grid.dz()
}

fn dot_values(u: &VectorFieldRZ, v: &VectorFieldRZ) -> Array2<f64> {
    u.radial.values() * v.radial.values() + u.axial.values() * v.axial.values()
}

fn check_k_range(lp: &LittlewoodPaley, k_range: (i32, i32)) -> Result<()> {
    if k_range.0 > k_range.1 {
        return Err(Error::EmptyRange(format!("singular range [{}, {}]", k_range.0, k_range.1)));
    }
    lp.partition().check(k_range.0)?;
    lp.partition().check(k_range.1)
}

struct Interaction {
    global: f64,
    local: f64,
}

/// Evaluates `∫ Δ_k P · h` globally (Parseval) and over the mask (quadrature).
fn pair(
    lp: &LittlewoodPaley,
    k: i32,
    product: &SpectralField,
    partner: &SpectralField,
    counts: Option<&[usize]>,
) -> Result<Interaction> {
    let shell = lp.shell_spectrum(product, k)?;
    let global = shell.inner_mu5(partner);
    let local = match counts {
        None => global,
        Some(c) => {
            let grid = lp.plan().grid();
            masked_inner(grid, &lp.plan().inverse_values(&shell), &lp.plan().inverse_values(partner), c)
        }
    };
    Ok(Interaction { global, local })
}

fn pair_vector(
    lp: &LittlewoodPaley,
    k: i32,
    product: &VectorSpectrum,
    partner: &VectorSpectrum,
    counts: Option<&[usize]>,
) -> Result<Interaction> {
    let a = pair(lp, k, &product.radial, &partner.radial, counts)?;
    let b = pair(lp, k, &product.axial, &partner.axial, counts)?;
    Ok(Interaction { global: a.global + b.global, local: a.local + b.local })
}

/// LH/HL/HH interaction integrals for every `k` in `k_range`, plus `N_total` and the
/// square-function pieces. Ψ, δ and the audit are left unset.
pub fn decompose_nonlinearity(
    lp: &LittlewoodPaley,
    g: &ScalarFieldRZ,
    u: &LiftedVelocity,
    k_range: (i32, i32),
    covers: Option<&BTreeMap<i32, Vec<AxisBall>>>,
) -> Result<ParaproductReport> {
    check_k_range(lp, k_range)?;
    let plan = lp.plan();
    let grid = plan.grid().clone();
    g.same_grid(&u.v_radial)?;
    let uv = u.vector();
    let g_spec = plan.forward(g)?;
    let u_spec = VectorSpectrum::forward(plan, &uv)?;
    let grad_g = VectorSpectrum::gradient(&g_spec).to_field();
    let dec = lp.decompose_spectrum(&g_spec)?;
    let partition = *lp.partition();

    // N_total = ∫ (U·∇G) G.
    let transport = ScalarFieldRZ::new(grid.clone(), dot_values(&uv, &grad_g), crate::field::RoleTag::Generic)?;
    let n_total = plan.forward(&transport)?.inner_mu5(&g_spec);

    // Products U_j G̃_j for every shell j of the partition, summed from the top down.
    let ks: Vec<i32> = partition.shells().collect();
    let band_products: Vec<VectorSpectrum> = ks
        .par_iter()
        .map(|&j| {
            let u_j = u_spec.apply_radial_symbol(|t| partition.symbol(j, t)).to_field();
            let g_j = dec.band(j)?;
            VectorSpectrum::forward(plan, &u_j.mul_scalar(&g_j)?)
        })
        .collect::<Result<_>>()?;
    let mut suffix: BTreeMap<i32, VectorSpectrum> = BTreeMap::new();
    let mut acc: Option<VectorSpectrum> = None;
    for (idx, &j) in ks.iter().enumerate().rev() {
        acc = Some(match acc {
            None => band_products[idx].clone(),
            Some(a) => a.add(&band_products[idx]),
        });
        suffix.insert(j, acc.clone().expect("set"));
    }

    let singular: Vec<i32> = (k_range.0..=k_range.1).collect();
    let rows: Vec<(i32, [Interaction; 3])> = singular
        .par_iter()
        .map(|&k| -> Result<(i32, [Interaction; 3])> {
            let counts = covers
                .map(|c| {
                    c.get(&k)
                        .map(|balls| union_counts(&grid, balls))
                        .ok_or_else(|| Error::InvalidParameter(format!("no cover supplied for k = {k}")))
                })
                .transpose()?;
            let counts = counts.as_deref();
            let g_k = dec.spectrum(k)?;

            let low_u = u_spec.apply_radial_symbol(|t| partition.low_symbol(k, k_range.0, k_range.1, t)).to_field();
            let lh_values = dot_values(&low_u, &grad_g);
            let lh = plan.forward_values(&lh_values, crate::spectral::Basis::Scalar);
            let i_lh = pair(lp, k, &lh, g_k, counts)?;

            let u_k = u_spec.apply_radial_symbol(|t| partition.symbol(k, t)).to_field();
            let low_g = g_spec.apply_radial_symbol(|t| partition.low_symbol(k, k_range.0, k_range.1, t));
            let grad_low_g = VectorSpectrum::gradient(&low_g).to_field();
            let hl = plan.forward_values(&dot_values(&u_k, &grad_low_g), crate::spectral::Basis::Scalar);
            let i_hl = pair(lp, k, &hl, g_k, counts)?;

            let j0 = (k - 4).max(partition.k_min());
            let i_hh = match suffix.get(&j0) {
                None => Interaction { global: 0.0, local: 0.0 },
                Some(a) => {
                    let grad_gk = VectorSpectrum::gradient(g_k);
                    let v = pair_vector(lp, k, a, &grad_gk, counts)?;
                    Interaction { global: -v.global, local: -v.local }
                }
            };
            Ok((k, [i_lh, i_hl, i_hh]))
        })
        .collect::<Result<_>>()?;

    let mut report = ParaproductReport {
        k_range,
        d: BTreeMap::new(),
        i_lh: BTreeMap::new(),
        i_hl: BTreeMap::new(),
        i_hh: BTreeMap::new(),
        n_total,
        n_local: 0.0,
        d_crit: square_function_sum_over(&dec, k_range.0, k_range.1),
        r_low: 0.0,
        cover_exterior: 0.0,
        delta: 0.0,
        j_min: k_range.0,
        psi: 0.0,
        psi_hl: 0.0,
        psi_hh: 0.0,
        fitted_c: 0.0,
        margin: 0.0,
        bound_pass: false,
    };
    let mut global_sum = 0.0;
    for (k, [lh, hl, hh]) in rows {
        report.d.insert(k, 2f64.powi(k) * dec.shell_norm_sq(k)?.sqrt());
        report.i_lh.insert(k, lh.local);
        report.i_hl.insert(k, hl.local);
        report.i_hh.insert(k, hh.local);
        report.n_local += lh.local + hl.local + hh.local;
        global_sum += lh.global + hl.global + hh.global;
    }
    report.cover_exterior = global_sum - report.n_local;
    let complementary: f64 = partition
        .shells()
        .filter(|k| *k < k_range.0 || *k > k_range.1)
        .map(|k| dec.shell_norm_sq(k).map(|n| 4f64.powi(k) * n))
        .sum::<Result<f64>>()?;
    report.r_low = complementary + (n_total - report.n_local).abs();
    Ok(report)
}

/// Fills Ψ and checks `|n_local| ≤ Ψ·D_crit + C·R_low`.
pub fn audit_bound(report: &mut ParaproductReport, delta: f64, n0: usize, fitted_c: f64) -> Result<bool> {
    let psi = psi_factors(delta, report.j_min, n0, fitted_c)?;
    report.delta = delta;
    report.psi = psi.psi;
    report.psi_hl = psi.psi_hl;
    report.psi_hh = psi.psi_hh;
    report.fitted_c = fitted_c;
    report.margin = psi.psi * report.d_crit + fitted_c * report.r_low - report.n_local.abs();
    report.bound_pass = report.margin >= 0.0;
    Ok(report.bound_pass)
}

/// `|n_local| / (Ψ(C = 1)·D_crit + R_low)`, the smallest admissible audit constant.
pub fn audit_ratio(report: &ParaproductReport, delta: f64, n0: usize) -> Result<f64> {
    let unit = psi_factors(delta, report.j_min, n0, 1.0)?;
    let denom = unit.psi * report.d_crit + report.r_low;
    Ok(if denom > 0.0 { report.n_local.abs() / denom } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub k_range: (i32, i32),
    pub n0: usize,
    pub fitted_c: f64,
}

/// Velocity, δ, decomposition and audit in one call, over the whole domain.
pub fn analyze(lp: &LittlewoodPaley, g: &ScalarFieldRZ, cfg: &AnalysisConfig) -> Result<ParaproductReport> {
    let u = lifted_velocity(lp.plan(), g)?;
    let mut report = decompose_nonlinearity(lp, g, &u, cfg.k_range, None)?;
    let delta = delta_sup(g, cfg.k_range)?.delta;
    audit_bound(&mut report, delta, cfg.n0, cfg.fitted_c)?;
    Ok(report)
}

/// The two forms `∫Δ_k(U_j·∇G̃_j)Δ_kG` and `∫Δ_k(U_jG̃_j)·∇Δ_kG`, which cancel when `div U_j = 0`.
pub fn hh_transfer_forms(lp: &LittlewoodPaley, g: &ScalarFieldRZ, u: &LiftedVelocity, j: i32, k: i32) -> Result<(f64, f64)> {
    let plan = lp.plan();
    let dec = lp.decompose(g)?;
    let g_j = dec.band(j)?;
    let u_j = lp.shell_project_vector(&u.vector(), j)?;
    let grad_gj = lp.gradient5(&g_j)?;
    let transport = plan.forward_values(&dot_values(&u_j, &grad_gj), crate::spectral::Basis::Scalar);
    let g_k = dec.spectrum(k)?;
    let first = lp.shell_spectrum(&transport, k)?.inner_mu5(g_k);
    let flux = VectorSpectrum::forward(plan, &u_j.mul_scalar(&g_j)?)?;
    let p = *lp.partition();
    let second = flux.apply_radial_symbol(|t| p.symbol(k, t)).inner_mu5(&VectorSpectrum::gradient(g_k));
    Ok((first, second))
}

/// `‖1_{B} f‖` for each ball.
pub fn ball_norms(f: &ScalarFieldRZ, balls: &[AxisBall]) -> Result<Vec<f64>> {
    balls.iter().map(|b| ball_mass(f, b).map(f64::sqrt)).collect()
}

/// `max_i t_i / max_m (1 + d(i, m))^{−M} s_m` over a periodic lattice.
pub fn localized_constant(target: &[f64], source: &[f64], exponent: f64) -> f64 {
    let n = target.len();
    let mut worst = 0.0_f64;
    for (i, &t) in target.iter().enumerate() {
        let envelope = source
            .iter()
            .enumerate()
            .map(|(m, &s)| s * (1.0 + lattice_distance(i, m, n) as f64).powf(-exponent))
            .fold(0.0, f64::max);
        if envelope > 0.0 {
            worst = worst.max(t / envelope);
        } else if t > 0.0 {
            return f64::INFINITY;
        }
    }
    worst
}

/// Per-ball `‖1_B a‖_∞ ‖1_B b‖`.
pub fn product_source(a: &VectorFieldRZ, b: &ScalarFieldRZ, balls: &[AxisBall]) -> Result<Vec<f64>> {
    balls.iter().map(|ball| Ok(ball_sup(a, ball) * ball_mass(b, ball)?.sqrt())).collect()
}

/// Per-ball `‖1_B a‖_∞ ‖1_B ∇b‖`.
pub fn gradient_product_source(a: &VectorFieldRZ, grad_b: &VectorFieldRZ, balls: &[AxisBall]) -> Result<Vec<f64>> {
    balls
        .iter()
        .map(|ball| {
            let m = ball_mass(&grad_b.radial, ball)? + ball_mass(&grad_b.axial, ball)?;
            Ok(ball_sup(a, ball) * m.sqrt())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarvationParams {
    pub kappa: f64,
    pub c_starv: f64,
    pub big_c_starv: f64,
    pub k_range: (i32, i32),
    pub quantile: f64,
    pub classify: ClassifyParams,
    pub cover: CoverParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarvationRecord {
    pub time: f64,
    /// `None` when the snapshot was skipped.
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub residual: Option<f64>,
    pub score: Option<f64>,
    pub notice: Option<String>,
}

impl StarvationRecord {
    fn skipped(time: f64, notice: String) -> Self {
        Self { time, lhs: None, rhs: None, residual: None, score: None, notice: Some(notice) }
    }
}

/// Evaluates `(1 − c)D_crit + C·R_low − |N_loc|` on each snapshot that has an admissible packet
/// with score at least `kappa`.
pub fn starvation_monitor(
    lp: &LittlewoodPaley,
    snapshots: &[(f64, ScalarFieldRZ)],
    params: &StarvationParams,
) -> Result<Vec<StarvationRecord>> {
    check_k_range(lp, params.k_range)?;
    let mut out = Vec::with_capacity(snapshots.len());
    for (time, g) in snapshots {
        let time = *time;
        if g.max_abs() == 0.0 {
            let rec = StarvationRecord { time, lhs: Some(0.0), rhs: Some(0.0), residual: Some(0.0), score: Some(0.0), notice: None };
            out.push(rec);
            continue;
        }
        let packets = packets::detect_packets(g, params.quantile)?;
        let mut chosen = None;
        for p in &packets {
            if packets::classify(p, g, &params.classify, None) != BranchLabel::AdmissibleProximal {
                continue;
            }
            let radius = p.lambda.max(extraction::min_lambda(g.grid()));
            let q = extraction::score(g, &AxisBall::new(p.center.1, radius)?)?;
            if q >= params.kappa && chosen.as_ref().is_none_or(|(_, best)| q > *best) {
                chosen = Some((p, q));
            }
        }
        let Some((packet, q)) = chosen else {
            out.push(StarvationRecord::skipped(time, "no admissible packet above the score floor".into()));
            continue;
        };
        let mut covers = BTreeMap::new();
        let mut failed = None;
        for k in params.k_range.0..=params.k_range.1 {
            match packets::window_cover(packet, g, k, &params.cover) {
                Ok(c) => {
                    covers.insert(k, c.balls());
                }
                Err(e) => {
                    failed = Some(e.to_string());
                    break;
                }
            }
        }
        if let Some(msg) = failed {
            out.push(StarvationRecord::skipped(time, format!("packet window unavailable: {msg}")));
            continue;
        }
        let u = lifted_velocity(lp.plan(), g)?;
        let report = decompose_nonlinearity(lp, g, &u, params.k_range, Some(&covers))?;
        let lhs = report.n_local.abs();
        let rhs = (1.0 - params.c_starv) * report.d_crit + params.big_c_starv * report.r_low;
        out.push(StarvationRecord { time, lhs: Some(lhs), rhs: Some(rhs), residual: Some(rhs - lhs), score: Some(q), notice: None });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::RoleTag;
    use crate::spectral::{DyadicPartition, SpectralPlan};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lp(nr: usize, nz: usize, r: f64, l: f64, k: (i32, i32)) -> LittlewoodPaley {
        let plan = SpectralPlan::new(HalfPlaneGrid::new(nr, nz, r, l).unwrap()).unwrap();
        LittlewoodPaley::new(plan, DyadicPartition::new(k.0, k.1).unwrap())
    }

    #[test]
    fn psi_examples() {
        let p = psi_factors(0.04, 4, 8, 1.0).unwrap();
        assert!((p.psi - 0.2 * 0.25 / (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        assert!((p.psi - 0.1707).abs() < 1e-4);
        let z = psi_factors(0.0, 4, 8, 1.0).unwrap();
        assert_eq!((z.psi, z.psi_hl, z.psi_hh), (0.0, 0.0, 0.0));
        let q = psi_factors(0.16, 4, 8, 1.0).unwrap();
        assert!((q.psi / p.psi - 2.0).abs() < 1e-12 && (q.psi_hl / p.psi_hl - 2.0).abs() < 1e-12);
        assert!(psi_factors(-1.0, 0, 8, 1.0).is_err());
    }

    #[test]
    fn schur_examples() {
        let single: BTreeMap<i32, f64> = [(3, 2.0)].into();
        assert_eq!(schur_sum(&single, 1.5, SchurDirection::Lower), 0.0);
        let ones: BTreeMap<i32, f64> = (0..10).map(|k| (k, 1.0)).collect();
        let s = schur_sum(&ones, 1.5, SchurDirection::Lower);
        assert!(s <= 10.0 * schur_constant(1.5));
        assert!((10.0 * schur_constant(1.5) - 5.469).abs() < 1e-3);
        assert!((s - schur_sum(&ones, 1.5, SchurDirection::Upper)).abs() < 1e-12);
    }

    #[test]
    fn schur_bound_on_random_vectors() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let d: BTreeMap<i32, f64> = (0..12).map(|k| (k, rng.gen::<f64>())).collect();
            // Brute-force double sum as the oracle.
            let mut brute = 0.0;
            for k in 0..12 {
                for l in 0..k {
                    brute += 2f64.powf(-1.5 * (k - l) as f64) * d[&l] * d[&k];
                }
            }
            let s = schur_sum(&d, 1.5, SchurDirection::Lower);
            assert!((s - brute).abs() < 1e-12);
            assert!(s <= schur_constant(1.5) * d.values().map(|x| x * x).sum::<f64>());
        }
    }

    #[test]
    fn decay_fit_recovers_power() {
        let samples: Vec<(f64, f64)> = (1..20).map(|d| (d as f64, 3.0 * (1.0 + d as f64).powf(-4.5))).collect();
        assert!((fit_decay_exponent(&samples).unwrap() - 4.5).abs() < 1e-10);
    }

    #[test]
    fn zero_velocity_gives_zero_interactions() {
        let lp = lp(48, 64, 4.0, 4.0, (-1, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = crate::recipes::diffuse(lp.plan(), (0, 3), 1.0, &mut rng).unwrap();
        let u = LiftedVelocity::zeros(g.grid().clone());
        let r = decompose_nonlinearity(&lp, &g, &u, (0, 3), None).unwrap();
        assert_eq!(r.n_total, 0.0);
        for k in 0..=3 {
            assert_eq!(r.i_lh[&k], 0.0);
            assert_eq!(r.i_hl[&k], 0.0);
            assert_eq!(r.i_hh[&k], 0.0);
        }
        assert!(r.d_crit > 0.0 && r.r_low >= 0.0);
    }

    #[test]
    fn zero_field_passes_audit() {
        let lp = lp(48, 64, 4.0, 4.0, (-1, 4));
        let g = ScalarFieldRZ::zeros(lp.plan().grid().clone(), RoleTag::G);
        let r = analyze(&lp, &g, &AnalysisConfig { k_range: (-1, 1), n0: 8, fitted_c: 1.0 }).unwrap();
        assert!(r.bound_pass);
        assert_eq!(r.margin, 0.0);
    }

    #[test]
    fn hh_forms_cancel() {
        let lp = lp(128, 128, 8.0, 4.0, (-2, 5));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = crate::recipes::random_bumps(lp.plan().grid(), 4, &mut rng).unwrap();
        let u = lifted_velocity(lp.plan(), &g).unwrap();
        for (j, k) in [(1, 1), (2, 1), (3, 2)] {
            let (a, b) = hh_transfer_forms(&lp, &g, &u, j, k).unwrap();
            let rel = (a + b).abs() / a.abs().max(b.abs());
            assert!(rel < 1e-6, "(j,k)=({j},{k}): {a} vs {b}, rel {rel}");
        }
    }

    #[test]
    fn cover_restriction_with_full_lattice_matches_global() {
        let lp = lp(128, 128, 8.0, 4.0, (-1, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = crate::recipes::random_bumps(lp.plan().grid(), 4, &mut rng).unwrap();
        let u = lifted_velocity(lp.plan(), &g).unwrap();
        let global = decompose_nonlinearity(&lp, &g, &u, (0, 2), None).unwrap();
        // One ball covering the whole grid, so the restriction is the identity up to quadrature.
        let whole: BTreeMap<i32, Vec<AxisBall>> = (0..=2).map(|k| (k, vec![AxisBall::new(0.0, 12.0).unwrap()])).collect();
        let local = decompose_nonlinearity(&lp, &g, &u, (0, 2), Some(&whole)).unwrap();
        let scale = global.i_lh.values().chain(global.i_hl.values()).map(|x| x.abs()).fold(0.0, f64::max);
        assert!((local.n_local - global.n_local).abs() < 1e-4 * scale);
    }

    #[test]
    fn cubic_and_quadratic_homogeneity() {
        let lp = lp(48, 64, 4.0, 4.0, (-1, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = crate::recipes::diffuse(lp.plan(), (0, 3), 1.0, &mut rng).unwrap();
        let cfg = AnalysisConfig { k_range: (-1, 1), n0: 8, fitted_c: 1.0 };
        let a = analyze(&lp, &g, &cfg).unwrap();
        let b = analyze(&lp, &g.scaled(0.5), &cfg).unwrap();
        assert!((b.n_local / a.n_local - 0.125).abs() < 1e-9);
        assert!((b.d_crit / a.d_crit - 0.25).abs() < 1e-12);
        assert!((b.delta / a.delta - 0.25).abs() < 1e-12);
    }

    #[test]
    fn lattice_geometry() {
        let g = HalfPlaneGrid::new(16, 32, 2.0, 2.0).unwrap();
        let balls = lattice_balls(&g, 1);
        assert_eq!(balls.len(), 8);
        assert_eq!(balls[0].z0(), -2.0);
        assert_eq!(lattice_distance(0, 7, 8), 1);
        assert_eq!(localized_constant(&[1.0, 0.0], &[1.0, 0.0], 4.0), 1.0);
    }
}
