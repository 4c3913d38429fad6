//! Axis-centred extraction scores: the sup scan over scales and centres, the diffuseness δ, and
//! the (λ/r)³ capture law for a thin ring.

use swirl5d::extraction::{cap_fraction, delta_sup, ring_capture_fraction, sup_scan_default};
use swirl5d::field::{periodic_offset, RoleTag, ScalarFieldRZ};
use swirl5d::grid::HalfPlaneGrid;

fn main() -> swirl5d::Result<()> {
    let grid = HalfPlaneGrid::new(128, 128, 4.0, 4.0)?;
    let l = grid.z_extent();
    let bump = |r: f64, z: f64, z0: f64, w: f64| {
        let dz = periodic_offset(z - z0, l);
        (-(r * r + dz * dz) / (w * w)).exp()
    };
    let g = ScalarFieldRZ::from_fn(grid.clone(), RoleTag::G, |r, z| bump(r, z, -1.5, 0.6) + 2.0 * bump(r, z, 1.0, 0.3))?;
    let scan = sup_scan_default(&g)?;
    let (lambda, z0, q) = scan.argmax;
    println!("Q* = {q:.4e} at λ = {lambda:.4}, z₀ = {z0:.4} over {} scales", scan.lambdas.len());
    let delta = delta_sup(&g, (0, 2))?;
    println!("δ over k ∈ [0, 2] = {:.4e}, attained at k = {}, z₀ = {}", delta.delta, delta.argmax.0, delta.argmax.1);

    let ring_grid = HalfPlaneGrid::new(256, 512, 8.0, 0.5)?;
    let rc = ring_grid.radial_nodes()[160];
    let sr = (ring_grid.radial_nodes()[161] - rc) / 3.0;
    let ring = ScalarFieldRZ::from_fn(ring_grid, RoleTag::G, |r, z| {
        (-((r - rc) / sr).powi(2) / 2.0 - (z / 0.004).powi(2) / 2.0).exp()
    })?;
    println!("\n{:>8} {:>12} {:>12}", "λ/r", "captured", "cap law");
    for ratio in [0.01, 0.02, 0.05, 0.1] {
        let f = ring_capture_fraction(&ring, ratio * rc, rc, 0.0)?;
        println!("{ratio:>8.3} {f:>12.4e} {:>12.4e}", cap_fraction(2.0 * (ratio / 2.0).asin()));
    }
    Ok(())
}
