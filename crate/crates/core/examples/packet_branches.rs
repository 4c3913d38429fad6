//! Packet detection and branch labels for a proximal bump, a displaced bump and a thin ring,
//! with the lattice window cover of the proximal packet.

use swirl5d::extraction::{kappa_rec, recenter, sup_scan_default};
use swirl5d::field::{periodic_offset, RoleTag, ScalarFieldRZ};
use swirl5d::grid::HalfPlaneGrid;
use swirl5d::packets::{classify, detect_packets, window_cover, ClassifyParams, CoverParams};

fn main() -> swirl5d::Result<()> {
    let grid = HalfPlaneGrid::new(256, 256, 4.0, 2.0)?;
    let l = grid.z_extent();
    let blob = |r: f64, z: f64, r0: f64, z0: f64, w: f64| {
        let dz = periodic_offset(z - z0, l);
        (-((r - r0).powi(2) + dz * dz) / (w * w)).exp()
    };
    let fields = [
        ("proximal bump", ScalarFieldRZ::from_fn(grid.clone(), RoleTag::G, |r, z| blob(r, z, 0.0, 0.0, 0.3))?),
        ("thin ring", ScalarFieldRZ::from_fn(grid.clone(), RoleTag::G, |r, z| blob(r, z, 2.0, 0.0, 0.06))?),
        ("bump and ring", ScalarFieldRZ::from_fn(grid.clone(), RoleTag::G, |r, z| blob(r, z, 0.0, -1.0, 0.2) + 0.3 * blob(r, z, 2.0, 1.0, 0.06))?),
    ];
    let params = ClassifyParams::default();
    for (name, g) in &fields {
        println!("{name}:");
        let scan = sup_scan_default(g)?;
        for p in detect_packets(g, 0.5)? {
            let label = classify(&p, g, &params, Some(&scan));
            println!(
                "  centre ({:.3}, {:.3}) λ = {:.3e} mass = {:.3e} η = {:.3} → {}",
                p.center.0, p.center.1, p.lambda, p.mass, p.eta_measured, label.as_str()
            );
        }
    }

    let g = &fields[0].1;
    let p = &detect_packets(g, 0.9)?[0];
    let cover_params = CoverParams::default();
    let k = (cover_params.proximal_factor / p.max_radius(g)).log2().floor() as i32;
    let cover = window_cover(p, g, k, &cover_params)?;
    println!("\nwindow cover at k = {}: J = {:?}", cover.k, cover.indices);
    let rec = recenter(&detect_packets(g, 0.5)?[0], g, 0.5, 4.0)?;
    println!(
        "recentred score {:.4e} ≥ required {:.4e} (κ_rec = {})",
        rec.achieved_score, rec.required, kappa_rec(0.5, 4.0)
    );
    Ok(())
}
