//! The ten acceptance criteria, one pass/fail line each.

use std::time::Instant;

use swirl5d::cli::run_checks;
use swirl5d::field::{RoleTag, ScalarFieldRZ};
use swirl5d::grid::HalfPlaneGrid;
use swirl5d::lemmas::{run_suite, LemmaCheckResult, SuiteConfig, LEMMA_IDS};
use swirl5d::recipes::{Recipe, RecipeParams};
use swirl5d::solver::{run, step, FlowState, RunConfig};
use swirl5d::spectral::SpectralPlan;

const MEASURE_RUNTIME: f64 = 30.0;
const RING_RUNTIME: f64 = 60.0;
const WINDOW_RUNTIME: f64 = 60.0;
const OVERLAP_RUNTIME: f64 = 120.0;
const TREND_RUNTIME: f64 = 600.0;
const SUITE_RUNTIME: f64 = 600.0;

struct Ledger {
    lines: Vec<(usize, String, bool, String)>,
}

impl Ledger {
    fn record(&mut self, n: usize, name: &str, pass: bool, detail: String) {
        println!("criterion {n:>2} {:<4} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((n, name.into(), pass, detail));
    }
}

fn find<'a>(results: &'a [LemmaCheckResult], id: &str) -> &'a LemmaCheckResult {
    results.iter().find(|r| r.id == id).unwrap_or_else(|| panic!("missing {id}"))
}

fn value(r: &LemmaCheckResult, name: &str) -> f64 {
    r.checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("{} has no check {name}", r.id)).value
}

/// `G = exp(−r²/w²)` is z-independent, so it carries no velocity and `G` solves the 4D heat
/// equation in `r` exactly.
fn heat_kernel_error() -> f64 {
    let w = 0.5;
    let plan = SpectralPlan::new(HalfPlaneGrid::new(96, 16, 6.0, 2.0).unwrap()).unwrap();
    let g0 = ScalarFieldRZ::from_fn(plan.grid().clone(), RoleTag::G, |r, _| (-r * r / (w * w)).exp()).unwrap();
    let gamma = ScalarFieldRZ::zeros(plan.grid().clone(), RoleTag::Gamma);
    let mut s = FlowState::new(&plan, &gamma, &g0).unwrap();
    let dt = 5e-3;
    for _ in 0..10 {
        s = step(&s, dt).unwrap();
    }
    let t = s.time;
    let s2 = w * w + 4.0 * t;
    let exact = ScalarFieldRZ::from_fn(plan.grid().clone(), RoleTag::G, |r, _| (w * w / s2).powi(2) * (-r * r / s2).exp()).unwrap();
    s.g.sub(&exact).unwrap().norm_mu5() / exact.norm_mu5()
}

#[test]
fn acceptance() {
    let mut ledger = Ledger { lines: Vec::new() };
    let started = Instant::now();
    let results = run_suite(&SuiteConfig::default()).expect("suite runs");
    let suite_seconds = started.elapsed().as_secs_f64();
    let ids: Vec<&str> = results.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, LEMMA_IDS.to_vec(), "suite covers every id once, in order");

    let m = find(&results, "L3.1");
    let (gauss, sigmas) = (value(m, "gaussian_relative_error"), value(m, "monte_carlo_sigmas"));
    ledger.record(
        1,
        "measure identification",
        gauss < 5e-3 && sigmas <= 3.0 && m.seconds < MEASURE_RUNTIME,
        format!("gaussian rel err {gauss:.2e} (< 5e-3), worst MC deviation {sigmas:.2}σ (≤ 3), {:.1}s", m.seconds),
    );

    let r = find(&results, "L4.1");
    let (exp_err, cap_err) = (value(r, "exponent_error"), value(r, "max_relative_cap_error"));
    ledger.record(
        2,
        "ring capture",
        exp_err <= 0.2 && cap_err <= 0.2 && r.seconds < RING_RUNTIME,
        format!("exponent {:.4} (3 ± 0.2), cap-law error {cap_err:.2e} (≤ 0.2), {:.1}s", r.fitted["exponent"], r.seconds),
    );

    let c = find(&results, "L4.3");
    let (tested, violations, kappa) = (value(c, "packets_tested"), value(c, "violations"), value(c, "kappa_rec(0.5, 4)"));
    ledger.record(
        3,
        "recentering",
        tested >= 100.0 && violations == 0.0 && kappa == 8e-4,
        format!("{tested} packets, {violations} violations, κ_rec(1/2, 4) = {kappa:e}"),
    );

    let w = find(&results, "L6.1");
    let f = find(&results, "L8.5");
    let window_ok = value(w, "max_window_len") <= 8.0
        && value(w, "cover_failures") == 0.0
        && value(w, "uncovered_cells") == 0.0
        && value(w, "max_overlap_B") <= 3.0
        && value(f, "max_point_overlap") <= 3.0
        && value(f, "max_local_over_global") <= 3.0;
    ledger.record(
        4,
        "packet window and overlap",
        window_ok && w.seconds + f.seconds < WINDOW_RUNTIME,
        format!(
            "|J| ≤ {}, overlap ≤ {}, Σ local/global ≤ {:.3}, {:.1}s",
            value(w, "max_window_len"),
            value(f, "max_point_overlap").max(value(w, "max_overlap_B")),
            value(f, "max_local_over_global"),
            w.seconds + f.seconds
        ),
    );

    let o = find(&results, "L8.1");
    let overlap = value(o, "max_normalized_overlap");
    ledger.record(
        5,
        "frequency overlap",
        overlap < 1e-7 && o.fitted["pairs"] > 0.0 && o.seconds < OVERLAP_RUNTIME,
        format!("max ratio {overlap:.2e} (< 1e-7) over {} pairs, {:.1}s", o.fitted["pairs"], o.seconds),
    );

    let t = find(&results, "L8.2");
    let (mismatch, div) = (value(t, "max_relative_mismatch"), value(t, "max_divergence_residual"));
    ledger.record(
        6,
        "divergence-free transfer",
        mismatch < 1e-6 && div < 1e-6,
        format!("form mismatch {mismatch:.2e} (< 1e-6), divergence {div:.2e} (< 1e-6)"),
    );

    let d = find(&results, "L8.6");
    let (lo, hi) = (value(d, "min_ratio"), value(d, "max_ratio"));
    ledger.record(
        7,
        "dissipation equivalence",
        lo >= 0.125 && hi <= 4.0,
        format!("ratios in [{lo:.4}, {hi:.4}] ⊂ [1/8, 4]"),
    );

    let mut ok = true;
    let mut parts = Vec::new();
    for id in ["L7.1", "L7.2", "L8.3", "L8.4"] {
        let r = find(&results, id);
        let (decay, cmin, cmax) =
            (value(r, "lattice_decay_exponent"), value(r, "constant_min_over_mean"), value(r, "constant_max_over_mean"));
        ok &= decay >= 4.0 && cmin >= 0.5 && cmax <= 1.5;
        if id == "L7.1" || id == "L7.2" {
            ok &= value(r, "fresh_field_max_ratio") <= r.fitted["frozen_constant"];
        }
        parts.push(format!("{id}: decay {decay:.2}, C ∈ [{cmin:.2}, {cmax:.2}]·mean"));
    }
    let shell = value(find(&results, "L7.2"), "shell_decay_exponent");
    ok &= shell >= 0.5;
    parts.push(format!("U_k shell exponent {shell:.3} (≥ 1/2)"));
    ledger.record(8, "localized bounds", ok, parts.join("; "));

    let n = find(&results, "L9.1");
    let (step_ratio, delta_drop, audits) =
        (value(n, "max_step_ratio"), value(n, "min_delta_decrease"), value(n, "audit_passes"));
    ledger.record(
        9,
        "diffuse trend",
        step_ratio <= 1.1 && delta_drop >= 4.0 * (1.0 - 1e-9) && audits == 5.0 && n.seconds < TREND_RUNTIME,
        format!("δ falls ×{delta_drop:.3} per step, worst |N|/D_crit step ratio {step_ratio:.3} (≤ 1.1), audit {audits}/5"),
    );

    let heat = heat_kernel_error();
    let cfg = RunConfig {
        nr: 48,
        nz: 64,
        r_max: 6.0,
        l_z: 4.0,
        dt: 2e-3,
        t_end: 0.1,
        snapshot_every: 5,
        initial: Recipe::Rings,
        recipe: RecipeParams { amplitude: 2.0, width: 0.6, radius: 1.2, separation: 1.0, swirl: 2.0, ..Default::default() },
        seed: 0,
        scan: false,
    };
    let (log, _) = run(&cfg, None).expect("solver run");
    let checks = run_checks(&log);
    let (div, growth) = (checks[0].value, checks[1].value);
    ledger.record(
        10,
        "solver sanity",
        heat < 1e-4 && log.error.is_none() && growth <= 1e-6 && div < 1e-6 && suite_seconds < SUITE_RUNTIME,
        format!(
            "heat-kernel error {heat:.2e} (< 1e-4), max Γ growth {growth:.1e} (≤ 1e-6), divergence {div:.1e} (< 1e-6), suite {suite_seconds:.1}s"
        ),
    );

    let failed: Vec<usize> = ledger.lines.iter().filter(|l| !l.2).map(|l| l.0).collect();
    assert_eq!(ledger.lines.len(), 10);
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
