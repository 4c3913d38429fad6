use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swirl5d::biot_savart::lifted_velocity;
use swirl5d::extraction::{cap_fraction, kappa_rec, score, sup_scan_default, Z_STRIDE};
use swirl5d::field::{ball_mass, periodic_offset, AxisBall, RoleTag, ScalarFieldRZ};
use swirl5d::grid::HalfPlaneGrid;
use swirl5d::packets::{classify, detect_packets, overlap_count, window_cover, ClassifyParams, CoverParams};
use swirl5d::paraproduct::{decompose_nonlinearity, psi_factors};
use swirl5d::spectral::{random_band_limited, square_function_sum, DyadicPartition, LittlewoodPaley, SpectralPlan};

fn grid() -> Arc<HalfPlaneGrid> {
    HalfPlaneGrid::new(96, 128, 4.0, 4.0).unwrap()
}

fn bump(grid: &Arc<HalfPlaneGrid>, r0: f64, z0: f64, w: f64, stretch: f64) -> ScalarFieldRZ {
    let l = grid.z_extent();
    ScalarFieldRZ::from_fn(grid.clone(), RoleTag::G, |r, z| {
        let dz = periodic_offset(z - z0, l) / stretch;
        (-((r - r0).powi(2) + dz * dz) / (w * w)).exp()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn score_is_nonnegative_and_quadratic(w in 0.2f64..0.8, z0 in -2.0f64..2.0, c in -5.0f64..5.0, lambda in 0.25f64..1.5) {
        let g = grid();
        let f = bump(&g, 0.0, 0.0, w, 1.0);
        let ball = AxisBall::new(z0, lambda).unwrap();
        let q = score(&f, &ball).unwrap();
        prop_assert!(q >= 0.0);
        let qc = score(&f.scaled(c), &ball).unwrap();
        prop_assert!((qc - c * c * q).abs() <= 1e-12 * (c * c * q).max(1e-300));
    }

    #[test]
    fn ball_mass_is_monotone_and_additive(w in 0.2f64..0.8, z0 in -1.0f64..1.0, lambda in 0.2f64..0.9, grow in 1.0f64..2.0) {
        let g = grid();
        let f = bump(&g, 0.3, 0.0, w, 1.0);
        let small = ball_mass(&f, &AxisBall::new(z0, lambda).unwrap()).unwrap();
        let large = ball_mass(&f, &AxisBall::new(z0, lambda * grow).unwrap()).unwrap();
        prop_assert!(large >= small);
        // Disjoint translates: the mass of f + f(·−2λ−gap) splits over the two balls.
        let shift = 2.0 * lambda + 0.3;
        let pair = f.add(&bump(&g, 0.3, shift, w, 1.0)).unwrap();
        let a = AxisBall::new(0.0, lambda).unwrap();
        let b = AxisBall::new(shift, lambda).unwrap();
        let both = ball_mass(&pair, &a).unwrap() + ball_mass(&pair, &b).unwrap();
        let direct: f64 = g
            .radial_nodes()
            .iter()
            .enumerate()
            .flat_map(|(m, &r)| g.z_nodes().iter().enumerate().map(move |(j, &z)| (m, j, r, z)))
            .filter(|&(_, _, r, z)| a.contains(r, z) || b.contains(r, z))
            .map(|(m, j, _, _)| pair.values()[[m, j]].powi(2) * g.quadrature_weights_r()[m] * g.dz())
            .sum();
        prop_assert!((both - direct).abs() <= 1e-10 * direct.max(1e-300));
    }

    #[test]
    fn scan_argmax_follows_translation(z0 in -1.5f64..1.5, shift in -1.0f64..1.0) {
        let g = grid();
        let a = sup_scan_default(&bump(&g, 0.0, z0, 0.4, 1.0)).unwrap();
        let b = sup_scan_default(&bump(&g, 0.0, z0 + shift, 0.4, 1.0)).unwrap();
        let moved = periodic_offset(b.argmax.1 - a.argmax.1 - shift, g.z_extent()).abs();
        prop_assert!(moved <= Z_STRIDE * a.argmax.0.max(b.argmax.0) + 1e-9, "moved {moved}");
    }

    #[test]
    fn packets_are_well_formed_and_covered(r0 in 0.0f64..0.2, z0 in -3.0f64..3.0, w in 0.2f64..0.35, stretch in 1.0f64..2.0) {
        let g = grid();
        let f = bump(&g, r0, z0, w, stretch);
        let packets = detect_packets(&f, 0.9).unwrap();
        prop_assert!(!packets.is_empty());
        let again = detect_packets(&f, 0.9).unwrap();
        prop_assert_eq!(packets.len(), again.len());
        let params = CoverParams::default();
        for (p, q) in packets.iter().zip(&again) {
            prop_assert!(p.mass > 0.0 && p.lambda > 0.0);
            prop_assert!((0.0..=1.0).contains(&p.eta_measured));
            prop_assert_eq!(p.center, q.center);
            prop_assert_eq!(classify(p, &f, &ClassifyParams::default(), None), classify(q, &f, &ClassifyParams::default(), None));
            let k = (params.proximal_factor / p.max_radius(&f)).log2().floor() as i32;
            let cover = window_cover(p, &f, k, &params).unwrap();
            prop_assert!(cover.len() <= params.n0);
            let balls = cover.balls();
            let centre = balls[balls.len() / 2].z0();
            for (r, z) in p.points(&f) {
                let z = centre + periodic_offset(z - centre, g.z_extent());
                prop_assert!(overlap_count(&balls, r, z) >= 1);
            }
            let h = cover.spacing();
            for step in 0..200 {
                let z = centre - 6.0 * h + 12.0 * h * step as f64 / 199.0;
                for r in [0.0, 0.5 * h, h] {
                    prop_assert!(overlap_count(&balls, r, z) <= 3);
                    prop_assert!(overlap_count(&cover.enlarged(), r, z) <= 7);
                    prop_assert!(overlap_count(&cover.doubly_enlarged(), r, z) <= 11);
                }
            }
        }
    }

    #[test]
    fn kappa_and_psi_scale(eta in 0.05f64..0.95, c0 in 1.0f64..10.0, delta in 1e-6f64..1.0, j in -2i32..6, n0 in 1usize..16) {
        prop_assert!((kappa_rec(eta, c0) - eta * (c0 + 1.0).powi(-4)).abs() <= 1e-15);
        let p = psi_factors(delta, j, n0, 1.0).unwrap();
        let q = psi_factors(delta / 4.0, j, n0, 1.0).unwrap();
        prop_assert!((q.psi / p.psi - 0.5).abs() < 1e-12);
        prop_assert_eq!(p.psi_hl, p.psi_hh);
        let r = psi_factors(delta, j + 2, n0, 1.0).unwrap();
        prop_assert!((r.psi / p.psi - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cap_fraction_is_a_monotone_fraction(a in 0.0f64..3.2, b in 0.0f64..3.2) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (fl, fh) = (cap_fraction(lo), cap_fraction(hi));
        prop_assert!((0.0..=1.0).contains(&fl) && (0.0..=1.0).contains(&fh));
        prop_assert!(fl <= fh + 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn square_function_is_dominated_by_dissipation(seed in any::<u64>(), lo in -1.0f64..2.0, width in 0.5f64..3.0) {
        let plan = SpectralPlan::new(HalfPlaneGrid::new(64, 64, 4.0, 2.0).unwrap()).unwrap();
        let lp = LittlewoodPaley::new(plan.clone(), DyadicPartition::new(-2, 5).unwrap());
        let f = random_band_limited(&plan, 2f64.powf(lo), 2f64.powf(lo + width), &mut ChaCha8Rng::seed_from_u64(seed));
        let dec = lp.decompose(&f).unwrap();
        let grad = plan.forward(&f).unwrap().gradient_norm_sq_mu5();
        prop_assert!(square_function_sum(&dec) <= 4.0 * grad * (1.0 + 1e-10));
    }

    #[test]
    fn paraproduct_quantities_are_signed_correctly(seed in any::<u64>()) {
        let plan = SpectralPlan::new(HalfPlaneGrid::new(64, 64, 4.0, 2.0).unwrap()).unwrap();
        let lp = LittlewoodPaley::new(plan.clone(), DyadicPartition::new(-2, 5).unwrap());
        let g = random_band_limited(&plan, 0.5, 6.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let u = lifted_velocity(&plan, &g).unwrap();
        let report = decompose_nonlinearity(&lp, &g, &u, (0, 2), None).unwrap();
        prop_assert!(report.d.values().all(|&d| d >= 0.0));
        prop_assert!(report.d_crit >= 0.0 && report.r_low >= 0.0);
        // Finite-band factor: ‖G̃_j‖ ≤ 6·2^{−j} max_{|i−j|≤1} D_i.
        let dec = lp.decompose(&g).unwrap();
        for j in 0..=2 {
            let band = dec.band(j).unwrap().norm_mu5();
            let d_j = (j - 1..=j + 1)
                .map(|i| 2f64.powi(i) * dec.shell_norm_sq(i).unwrap().sqrt())
                .fold(0.0, f64::max);
            prop_assert!(band <= 6.0 * 2f64.powi(-j) * d_j.max(1e-300) || band == 0.0, "j = {j}: {band} vs {d_j}");
        }
    }
}
