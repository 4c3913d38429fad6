//! Littlewood–Paley shells of a random band-limited field: shell energies, telescoping and the
//! square-function comparison with the dissipation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swirl5d::grid::HalfPlaneGrid;
use swirl5d::spectral::{random_band_limited, square_function_sum, DyadicPartition, LittlewoodPaley, SpectralPlan};

fn main() -> swirl5d::Result<()> {
    let plan = SpectralPlan::new(HalfPlaneGrid::new(128, 128, 4.0, 2.0)?)?;
    let lp = LittlewoodPaley::new(plan.clone(), DyadicPartition::new(-2, 5)?);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = random_band_limited(&plan, 0.5, 16.0, &mut rng);
    let dec = lp.decompose(&f)?;

    println!("{:>3} {:>14} {:>14}", "k", "‖Δ_k f‖²", "2^2k ‖Δ_k f‖²");
    for k in lp.partition().shells() {
        let n = dec.shell_norm_sq(k)?;
        println!("{k:>3} {n:>14.6e} {:>14.6e}", 4f64.powi(k) * n);
    }
    let rebuilt = dec.reconstruct();
    println!("reconstruction error ‖f − Σ Δ_k f‖/‖f‖ = {:.2e}", f.sub(&rebuilt)?.norm_mu5() / f.norm_mu5());
    let ratio = square_function_sum(&dec) / plan.forward(&f)?.gradient_norm_sq_mu5();
    println!("Σ 2^2k ‖Δ_k f‖² / ‖∇f‖² = {ratio:.4}");
    Ok(())
}
