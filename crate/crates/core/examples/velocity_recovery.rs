//! Biot–Savart recovery of the meridional velocity from G for a vortex-ring pair, and its
//! divergence-free 5D lift.

use swirl5d::biot_savart::{lifted_velocity, stream_solve, velocity_from_phi};
use swirl5d::field::{periodic_offset, RoleTag, ScalarFieldRZ};
use swirl5d::grid::HalfPlaneGrid;
use swirl5d::spectral::SpectralPlan;

fn main() -> swirl5d::Result<()> {
    let plan = SpectralPlan::new(HalfPlaneGrid::new(96, 128, 6.0, 4.0)?)?;
    let l = plan.grid().z_extent();
    let ring = |r: f64, z: f64, z0: f64| {
        let dz = periodic_offset(z - z0, l);
        (-((r - 1.5).powi(2) + dz * dz) / 0.25).exp()
    };
    let g = ScalarFieldRZ::from_fn(plan.grid().clone(), RoleTag::G, |r, z| ring(r, z, -1.0) - ring(r, z, 1.0))?;

    let phi = stream_solve(&plan, &g)?;
    let vel = velocity_from_phi(&plan, &phi, None)?;
    println!("max |u_r| = {:.4e}, max |u_z| = {:.4e}", vel.u_r.max_abs(), vel.u_z.max_abs());
    println!("meridional divergence residual = {:.2e}", vel.divergence_residual);

    let lifted = lifted_velocity(&plan, &g)?;
    println!("5D lift: residual before projection {:.2e}, after {:.2e}", lifted.naive_residual, lifted.divfree_residual);
    Ok(())
}
