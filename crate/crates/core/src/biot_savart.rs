//! Velocity reconstruction from `G` and the divergence-free 5D lift.

use std::sync::Arc;

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::error::Result;
use crate::field::{AxisBall, RoleTag, ScalarFieldRZ, VelocityRZ};
use crate::spectral::{Basis, LittlewoodPaley, SpectralField, SpectralPlan, VectorFieldRZ, VectorSpectrum};

/// Solves `−Δ₅ φ = G` spectrally.
pub fn stream_solve(plan: &Arc<SpectralPlan>, g: &ScalarFieldRZ) -> Result<ScalarFieldRZ> {
    Ok(stream_spectrum(&plan.forward(g)?).to_field(RoleTag::Phi))
}

/// `φ̂ = Ĝ / |ξ|²`. Every mode has `ρₙ > 0`, so there is no zero mode to discard.
pub fn stream_spectrum(g: &SpectralField) -> SpectralField {
    g.apply_radial_symbol(|xi| 1.0 / (xi * xi))
}

pub(crate) fn radial_nodes_column(plan: &SpectralPlan) -> Array2<f64> {
    let r = plan.grid().radial_nodes();
    Array2::from_shape_fn((r.len(), 1), |(m, _)| r[m])
}

/// Pieces of `φ` at the nodes: `(φ, ∂_z φ, ∂_r φ, ∂_rr φ)`.
fn stream_derivatives(phi: &SpectralField) -> [Array2<f64>; 4] {
    let plan = phi.plan();
    let grad = VectorSpectrum::gradient(phi);
    let dr = grad.radial.to_field(RoleTag::Generic).into_values();
    let drr = plan.vector_radial_derivative(&grad.radial);
    let dz = grad.axial.to_field(RoleTag::Generic).into_values();
    [phi.to_field(RoleTag::Phi).into_values(), dz, dr, drr]
}

/// `u_r = −r ∂_z φ`, `u_z = 2φ + r ∂_r φ`, and `u_θ = Γ/r` when `Γ` is supplied.
pub fn velocity_from_phi(
    plan: &Arc<SpectralPlan>,
    phi: &ScalarFieldRZ,
    gamma: Option<&ScalarFieldRZ>,
) -> Result<VelocityRZ> {
    let spec = plan.forward(phi)?;
    velocity_from_stream_spectrum(&spec, gamma)
}

/// `(u_r, u_z)` at the nodes.
pub(crate) fn meridional_velocity(phi: &SpectralField) -> (Array2<f64>, Array2<f64>) {
    let r = radial_nodes_column(phi.plan());
    let [p, pz, pr, _] = stream_derivatives(phi);
    (-(&r * &pz), &p * 2.0 + &r * &pr)
}

pub fn velocity_from_stream_spectrum(phi: &SpectralField, gamma: Option<&ScalarFieldRZ>) -> Result<VelocityRZ> {
    let plan = phi.plan();
    let grid = plan.grid().clone();
    let r = radial_nodes_column(plan);
    let (u_r, u_z) = meridional_velocity(phi);
    let u_theta = match gamma {
        Some(gm) => {
            gm.same_grid(&ScalarFieldRZ::zeros(grid.clone(), RoleTag::Generic))?;
            gm.values() / &r
        }
        None => Array2::zeros((grid.nr(), grid.nz())),
    };

    // Meridional divergence: with w = u_r/r, (1/r)∂_r(r u_r) = 2w + r ∂_r w.
    let w = &u_r / &r;
    let w_spec = plan.forward_values(&w, Basis::Scalar);
    let w_r = VectorSpectrum::gradient(&w_spec).radial.to_field(RoleTag::Generic).into_values();
    let radial_part = &w * 2.0 + &r * &w_r;
    let axial_part = plan.dz_values(&u_z);
    let residual = &radial_part + &axial_part;
    let norm = |a: &Array2<f64>| ScalarFieldRZ::from_parts(grid.clone(), a.clone(), RoleTag::Generic).norm_mu5();
    let scale = norm(&radial_part) + norm(&axial_part);
    let divergence_residual = if scale > 0.0 { norm(&residual) / scale } else { 0.0 };

    Ok(VelocityRZ {
        u_r: ScalarFieldRZ::from_parts(grid.clone(), u_r, RoleTag::Generic),
        u_theta: ScalarFieldRZ::from_parts(grid.clone(), u_theta, RoleTag::Generic),
        u_z: ScalarFieldRZ::from_parts(grid, u_z, RoleTag::Generic),
        divergence_residual,
    })
}

/// `(∂_z u_r − ∂_r u_z)/r` with `∂_z` through the FFT of `u_r` and `∂_r u_z = 3∂_rφ + r∂_rrφ`.
pub fn vorticity_over_r(plan: &Arc<SpectralPlan>, phi: &ScalarFieldRZ, vel: &VelocityRZ) -> Result<ScalarFieldRZ> {
    let spec = plan.forward(phi)?;
    let r = radial_nodes_column(plan);
    let [_, _, pr, prr] = stream_derivatives(&spec);
    let dz_ur = plan.dz_values(vel.u_r.values());
    let dr_uz = &pr * 3.0 + &r * &prr;
    Ok(ScalarFieldRZ::from_parts(plan.grid().clone(), (dz_ur - dr_uz) / &r, RoleTag::G))
}

/// Equivariant 5D velocity `v_radial x'/|x'| + v_z e_z`.
#[derive(Debug, Clone)]
pub struct LiftedVelocity {
    pub v_radial: ScalarFieldRZ,
    pub v_z: ScalarFieldRZ,
    /// `‖div₅ U‖ / ‖U‖` after projection.
    pub divfree_residual: f64,
    /// `‖div₅ U‖ / ‖U‖` of the naive lift `(u_r, u_z)`, whose divergence is `(2/r) u_r`.
    pub naive_residual: f64,
}

impl LiftedVelocity {
    pub fn zeros(grid: Arc<crate::grid::HalfPlaneGrid>) -> Self {
        Self {
            v_radial: ScalarFieldRZ::zeros(grid.clone(), RoleTag::Generic),
            v_z: ScalarFieldRZ::zeros(grid, RoleTag::Generic),
            divfree_residual: 0.0,
            naive_residual: 0.0,
        }
    }

    pub fn vector(&self) -> VectorFieldRZ {
        VectorFieldRZ { radial: self.v_radial.clone(), axial: self.v_z.clone() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { v_radial: self.v_radial.scaled(c), v_z: self.v_z.scaled(c), ..*self }
    }
}

/// Applies `I − ξξᵀ/|ξ|²` on the equivariant two-component class.
pub fn leray_project(v: &VectorSpectrum) -> VectorSpectrum {
    let plan = v.radial.plan().clone();
    let d = v.divergence();
    let rho = plan.rho();
    let zeta = plan.zeta_deriv();
    let mut out = v.clone();
    Zip::indexed(out.radial.coeffs_mut()).and(d.coeffs()).for_each(|(n, q), a, &dv| {
        *a -= rho[n] * dv / (rho[n] * rho[n] + zeta[q] * zeta[q]);
    });
    Zip::indexed(out.axial.coeffs_mut()).and(d.coeffs()).for_each(|(n, q), a, &dv| {
        *a += Complex64::new(0.0, zeta[q]) * dv / (rho[n] * rho[n] + zeta[q] * zeta[q]);
    });
    out
}

fn relative_divergence(v: &VectorSpectrum) -> f64 {
    let norm = v.norm_sq_mu5();
    if norm > 0.0 {
        (v.divergence().norm_sq_mu5() / norm).sqrt()
    } else {
        0.0
    }
}

/// Naive lift `(u_r, u_z)` followed by the 5D Leray projection.
pub fn lift_and_project(plan: &Arc<SpectralPlan>, vel: &VelocityRZ) -> Result<LiftedVelocity> {
    let naive = VectorSpectrum::forward(plan, &VectorFieldRZ::new(vel.u_r.clone(), vel.u_z.clone())?)?;
    let projected = leray_project(&naive);
    let field = projected.to_field();
    Ok(LiftedVelocity {
        v_radial: field.radial,
        v_z: field.axial,
        divfree_residual: relative_divergence(&projected),
        naive_residual: relative_divergence(&naive),
    })
}

/// `G ↦ U_prox`: stream solve, meridional velocity, lift and projection.
pub fn lifted_velocity(plan: &Arc<SpectralPlan>, g: &ScalarFieldRZ) -> Result<LiftedVelocity> {
    let phi = stream_spectrum(&plan.forward(g)?);
    lift_and_project(plan, &velocity_from_stream_spectrum(&phi, None)?)
}

/// `max |U_k|` over the nodes of each ball.
pub fn velocity_block_bound(
    lp: &LittlewoodPaley,
    u: &LiftedVelocity,
    k: i32,
    lattice: &[AxisBall],
) -> Result<Vec<f64>> {
    let block = lp.shell_project_vector(&u.vector(), k)?;
    Ok(lattice.iter().map(|b| ball_sup(&block, b)).collect())
}

/// `max |v|` over the nodes inside `ball` (0 if none).
pub fn ball_sup(v: &VectorFieldRZ, ball: &AxisBall) -> f64 {
    let grid = v.radial.grid();
    let counts = ball.row_counts(grid);
    let (a, b) = (v.radial.values(), v.axial.values());
    let mut best = 0.0_f64;
    for (j, &c) in counts.iter().enumerate() {
        for m in 0..c {
            best = best.max(a[[m, j]].hypot(b[[m, j]]));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::HalfPlaneGrid;
    use crate::spectral::{random_band_limited, DyadicPartition};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plan() -> Arc<SpectralPlan> {
        SpectralPlan::new(HalfPlaneGrid::new(64, 64, 8.0, 8.0).unwrap()).unwrap()
    }

    fn random_g(plan: &Arc<SpectralPlan>, seed: u64) -> ScalarFieldRZ {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps: Vec<(f64, f64, f64, f64)> = (0..3)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.6..1.2), rng.gen_range(0.0..2.0)))
            .collect();
        ScalarFieldRZ::from_fn(plan.grid().clone(), RoleTag::G, move |r, z| {
            bumps
                .iter()
                .map(|&(a, zc, s, k)| a * (-(r * r + (z - zc).powi(2)) / (2.0 * s * s)).exp() * (k * z).cos())
                .sum()
        })
        .unwrap()
    }

    fn rel(a: &ScalarFieldRZ, b: &ScalarFieldRZ) -> f64 {
        a.sub(b).unwrap().norm_mu5() / b.norm_mu5()
    }

    #[test]
    fn zero_inputs() {
        let p = plan();
        let zero = ScalarFieldRZ::zeros(p.grid().clone(), RoleTag::G);
        let phi = stream_solve(&p, &zero).unwrap();
        assert_eq!(phi.max_abs(), 0.0);
        let v = velocity_from_phi(&p, &phi, None).unwrap();
        assert_eq!(v.u_r.max_abs() + v.u_z.max_abs(), 0.0);
        let u = lift_and_project(&p, &v).unwrap();
        assert_eq!(u.vector().max_abs(), 0.0);
    }

    #[test]
    fn single_mode_solve_is_diagonal() {
        let p = plan();
        // Pick a mode with |ξ|² close to 4 and check φ̂ = Ĝ/|ξ|².
        let (mut best, mut idx) = (f64::INFINITY, (0, 0));
        for n in 0..p.grid().nr() {
            for q in 0..p.grid().nz() {
                let d = (p.xi(n, q).powi(2) - 4.0).abs();
                if d < best {
                    best = d;
                    idx = (n, q);
                }
            }
        }
        let mut s = SpectralField::zeros(p.clone(), Basis::Scalar);
        s.coeffs_mut()[idx] = Complex64::new(1.0, 0.0);
        let phi = stream_spectrum(&s);
        let xi2 = p.xi(idx.0, idx.1).powi(2);
        assert!((phi.coeffs()[idx].re - 1.0 / xi2).abs() < 1e-15);
    }

    #[test]
    fn poisson_residual() {
        let p = plan();
        for seed in 0..5 {
            let g = random_g(&p, seed);
            let phi = stream_solve(&p, &g).unwrap();
            // Apply Δ₅ through the gradient/divergence pair, independent of the 1/|ξ|² symbol.
            let lap = VectorSpectrum::gradient(&p.forward(&phi).unwrap()).divergence().to_field(RoleTag::G);
            assert!(rel(&lap.scaled(-1.0), &g) < 1e-8);
        }
    }

    #[test]
    fn vorticity_identity_and_divergence() {
        let p = plan();
        for seed in 0..20 {
            let g = random_g(&p, 10 + seed);
            let phi = stream_solve(&p, &g).unwrap();
            let v = velocity_from_phi(&p, &phi, None).unwrap();
            let w = vorticity_over_r(&p, &phi, &v).unwrap();
            assert!(rel(&w, &g) < 1e-6, "seed {seed}: {}", rel(&w, &g));
            assert!(v.divergence_residual < 1e-6, "seed {seed}: {}", v.divergence_residual);
        }
    }

    #[test]
    fn leray_projection() {
        let p = plan();
        for seed in 0..5 {
            let g = random_g(&p, 40 + seed);
            let phi = stream_solve(&p, &g).unwrap();
            let v = velocity_from_phi(&p, &phi, None).unwrap();
            // Pre-projection residual oracle: div₅ of the naive lift is (2/r) u_r = −2 ∂_z φ.
            let naive = VectorSpectrum::forward(&p, &VectorFieldRZ::new(v.u_r.clone(), v.u_z.clone()).unwrap()).unwrap();
            let div = naive.divergence().to_field(RoleTag::Generic);
            let oracle = ScalarFieldRZ::from_parts(p.grid().clone(), p.dz_values(phi.values()) * -2.0, RoleTag::Generic);
            assert!(rel(&div, &oracle) < 1e-2, "{}", rel(&div, &oracle));
            let u = lift_and_project(&p, &v).unwrap();
            assert!(u.naive_residual > 1e-2);
            assert!(u.divfree_residual < 1e-6);
            let once = leray_project(&naive);
            let twice = leray_project(&once);
            let diff = (once.norm_sq_mu5() - twice.norm_sq_mu5()).abs() / once.norm_sq_mu5();
            assert!(diff < 1e-10);
            assert!(once.norm_sq_mu5() <= naive.norm_sq_mu5() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn block_bound_is_linear_and_zero_for_zero() {
        let p = plan();
        let lp = LittlewoodPaley::new(p.clone(), DyadicPartition::new(-2, 4).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_band_limited(&p, 0.5, 8.0, &mut rng);
        let u = lifted_velocity(&p, &g).unwrap();
        let u2 = lifted_velocity(&p, &g.scaled(2.0)).unwrap();
        let balls: Vec<AxisBall> = (-4..=4).map(|i| AxisBall::new(i as f64, 1.0).unwrap()).collect();
        let a = velocity_block_bound(&lp, &u, 1, &balls).unwrap();
        let b = velocity_block_bound(&lp, &u2, 1, &balls).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x - y).abs() <= 1e-12 * y.abs().max(1e-300));
        }
        let z = velocity_block_bound(&lp, &LiftedVelocity::zeros(p.grid().clone()), 1, &balls).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }
}
