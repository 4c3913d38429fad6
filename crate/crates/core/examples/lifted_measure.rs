//! The weighted half-plane measure r³dr dz reproduces 5D Lebesgue integrals of SO(4)-radial fields.

use swirl5d::field::{lifted_l2_norm_sq, RoleTag, ScalarFieldRZ};
use swirl5d::grid::HalfPlaneGrid;

fn main() -> swirl5d::Result<()> {
    let grid = HalfPlaneGrid::new(192, 256, 6.0, 6.0)?;
    println!("{:>6} {:>14} {:>14} {:>10}", "h", "∫|G|² dx⁵", "π^(5/2) h⁵", "rel err");
    for h in [0.5, 0.75, 1.0] {
        let g = ScalarFieldRZ::from_fn(grid.clone(), RoleTag::G, |r, z| (-(r * r + z * z) / (2.0 * h * h)).exp())?;
        let measured = lifted_l2_norm_sq(&g);
        let exact = std::f64::consts::PI.powf(2.5) * h.powi(5);
        println!("{h:>6.2} {measured:>14.8e} {exact:>14.8e} {:>10.2e}", (measured / exact - 1.0).abs());
    }

    // Γ must vanish like r² at the axis; a field linear in r is rejected for that role.
    let linear = ScalarFieldRZ::from_fn(grid.clone(), RoleTag::Generic, |r, z| r * (-(r * r + z * z)).exp())?;
    match ScalarFieldRZ::new(grid, linear.into_values(), RoleTag::Gamma) {
        Ok(_) => println!("linear-in-r field accepted as Γ"),
        Err(e) => println!("linear-in-r field rejected as Γ: {e}"),
    }
    Ok(())
}
