//! Bony decomposition of the lifted nonlinearity for a diffuse field at decreasing amplitude,
//! with the per-shell dissipation and the audit of the Ψ(δ)-weighted bound.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swirl5d::grid::HalfPlaneGrid;
use swirl5d::lemmas::{diffuse_trend, SuiteConfig};
use swirl5d::paraproduct::{analyze, AnalysisConfig};
use swirl5d::recipes;
use swirl5d::spectral::{DyadicPartition, LittlewoodPaley, SpectralPlan};

fn main() -> swirl5d::Result<()> {
    let plan = SpectralPlan::new(HalfPlaneGrid::new(128, 128, 4.0, 2.0)?)?;
    let lp = LittlewoodPaley::new(plan.clone(), DyadicPartition::new(-2, 5)?);
    let g = recipes::diffuse(&plan, (0, 3), 1.0, &mut ChaCha8Rng::seed_from_u64(3))?;
    let report = analyze(&lp, &g, &AnalysisConfig { k_range: (0, 2), n0: 8, fitted_c: 1e-2 })?;
    println!("{:>3} {:>12} {:>12} {:>12} {:>12}", "k", "D_k", "I_LH", "I_HL", "I_HH");
    for (k, d) in &report.d {
        println!("{k:>3} {d:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}", report.i_lh[k], report.i_hl[k], report.i_hh[k]);
    }
    println!("δ = {:.4e}, Ψ = {:.4e}, N = {:.4e}, bound {}", report.delta, report.psi, report.n_total, report.bound_pass);

    let trend = diffuse_trend(&SuiteConfig::default())?;
    println!("\nscaled sequence (fitted C = {:.4e}):", trend.fitted_c);
    println!("{:>3} {:>12} {:>12} {:>6}", "n", "δ_n", "|N|/D_crit", "audit");
    for n in 0..trend.delta.len() {
        println!("{:>3} {:>12.4e} {:>12.4e} {:>6}", n + 1, trend.delta[n], trend.normalized[n], trend.bound_pass[n]);
    }
    Ok(())
}
