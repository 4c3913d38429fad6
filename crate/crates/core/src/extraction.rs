//! Axis-centred extraction scores, the sup-scan, δ, ring capture and recentering.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ball_mass, AxisBall, ScalarFieldRZ};
use crate::grid::HalfPlaneGrid;
use crate::packets::{coherence_fraction_within, Packet};

/// Ratio between consecutive scan scales.
pub const SCALE_RATIO: f64 = 1.189_207_115_002_721; // 2^{1/4}
/// Default z stride of the scan, as a fraction of λ.
pub const Z_STRIDE: f64 = 0.25;

/// Smallest admissible ball radius: four cells in the coarser direction.
pub fn min_lambda(grid: &HalfPlaneGrid) -> f64 {
    4.0 * grid.dr().max(grid.dz())
}

fn check_resolution(grid: &HalfPlaneGrid, lambda: f64) -> Result<()> {
    let min = min_lambda(grid);
    if lambda < min * (1.0 - 1e-12) {
        return Err(Error::BelowResolution { lambda, min });
    }
    Ok(())
}

/// `Q_λ(z₀) = λ^{−4} ∫_{B_λ(z₀)} |G|² dμ₅`.
pub fn score(g: &ScalarFieldRZ, ball: &AxisBall) -> Result<f64> {
    check_resolution(g.grid(), ball.lambda())?;
    Ok(ball_mass(g, ball)? / ball.lambda().powi(4))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreScan {
    pub lambdas: Vec<f64>,
    /// Centres for each scale.
    pub centers: Vec<Vec<f64>>,
    /// `scores[i][c]` is `Q_{lambdas[i]}(centers[i][c])`.
    pub scores: Vec<Vec<f64>>,
    /// `(λ*, z₀*, Q*)`.
    pub argmax: (f64, f64, f64),
}

impl ScoreScan {
    pub fn q_star(&self) -> f64 {
        self.argmax.2
    }

    /// Long-format CSV `lambda,z0,score`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,z0,score\n");
        for (i, &l) in self.lambdas.iter().enumerate() {
            for (z, q) in self.centers[i].iter().zip(&self.scores[i]) {
                out.push_str(&format!("{l:.12e},{z:.12e},{q:.12e}\n"));
            }
        }
        out
    }
}

/// Per row, cumulative `Σ_{m'<m} w_{m'} |G|²` so a ball's mass is one lookup per row.
struct RowPrefix {
    table: Array2<f64>,
    dz: f64,
}

impl RowPrefix {
    fn new(g: &ScalarFieldRZ) -> Self {
        let grid = g.grid();
        let (nr, nz) = (grid.nr(), grid.nz());
        let w = grid.quadrature_weights_r();
        let mut table = Array2::zeros((nz, nr + 1));
        for j in 0..nz {
            let mut acc = 0.0;
            for m in 0..nr {
                acc += w[m] * g.values()[[m, j]].powi(2);
                table[[j, m + 1]] = acc;
            }
        }
        Self { table, dz: grid.dz() }
    }

    fn mass(&self, grid: &HalfPlaneGrid, ball: &AxisBall) -> f64 {
        ball.row_counts(grid).iter().enumerate().map(|(j, &c)| self.table[[j, c]]).sum::<f64>() * self.dz
    }
}

fn lattice(z_extent: f64, stride: f64, offset: f64) -> Vec<f64> {
    let first = ((-z_extent - offset) / stride).ceil() as i64;
    (first..)
        .map(|i| offset + i as f64 * stride)
        .take_while(|&z| z < z_extent)
        .collect()
}

/// Dense scan over `λ ∈ [lo, hi]` (ratio `2^{1/4}`) and `z₀` with stride `z_stride·λ`.
pub fn sup_scan(g: &ScalarFieldRZ, lambda_range: (f64, f64), z_stride: f64) -> Result<ScoreScan> {
    let grid = g.grid();
    let (lo, hi) = lambda_range;
    if !(lo > 0.0) || !(hi >= lo) {
        return Err(Error::EmptyRange(format!("scale range [{lo}, {hi}]")));
    }
    check_resolution(grid, lo)?;
    let cap = grid.z_extent().min(grid.r_max());
    if hi > cap * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!("scan scale {hi} exceeds min(R, L) = {cap}")));
    }
    if !(z_stride > 0.0) {
        return Err(Error::InvalidParameter(format!("z stride {z_stride} must be positive")));
    }
    let lambdas: Vec<f64> = (0..)
        .map(|i| lo * SCALE_RATIO.powi(i))
        .take_while(|&l| l <= hi * (1.0 + 1e-12))
        .collect();
    let prefix = RowPrefix::new(g);
    let rows: Vec<(Vec<f64>, Vec<f64>)> = lambdas
        .par_iter()
        .map(|&l| {
            let centers = lattice(grid.z_extent(), z_stride * l, 0.0);
            let scores = centers
                .iter()
                .map(|&z| prefix.mass(grid, &AxisBall::new(z, l).expect("positive radius")) / l.powi(4))
                .collect();
            (centers, scores)
        })
        .collect();
    let (centers, scores): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let mut argmax = (lambdas[0], centers[0][0], f64::NEG_INFINITY);
    // Strict comparison in (λ, z₀) order keeps the smallest λ, then the smallest z₀.
    for (i, &l) in lambdas.iter().enumerate() {
        for (&z, &q) in centers[i].iter().zip(&scores[i]) {
            if q > argmax.2 {
                argmax = (l, z, q);
            }
        }
    }
    Ok(ScoreScan { lambdas, centers, scores, argmax })
}

/// Scan over the full resolvable range `[4Δr, min(R, L)]`.
pub fn sup_scan_default(g: &ScalarFieldRZ) -> Result<ScoreScan> {
    let grid = g.grid();
    sup_scan(g, (min_lambda(grid), grid.z_extent().min(grid.r_max())), Z_STRIDE)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaReport {
    pub k_range: (i32, i32),
    pub delta: f64,
    pub j_min: i32,
    /// `(k, z₀)` attaining `delta`.
    pub argmax: (i32, f64),
}

/// `δ = max_{k, i} 2^{4k} ∫_{B_{2^{−k}}(i·2^{−k})} |G|² dμ₅`.
pub fn delta_sup(g: &ScalarFieldRZ, k_range: (i32, i32)) -> Result<DeltaReport> {
    let (k_lo, k_hi) = k_range;
    if k_lo > k_hi {
        return Err(Error::EmptyRange(format!("k range [{k_lo}, {k_hi}]")));
    }
    let grid = g.grid();
    check_resolution(grid, 2f64.powi(-k_hi))?;
    let prefix = RowPrefix::new(g);
    let mut best = (k_lo, 0.0, f64::NEG_INFINITY);
    for k in k_lo..=k_hi {
        let h = 2f64.powi(-k);
        if h > grid.z_extent().min(grid.r_max()) * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("scale 2^-{k} exceeds the domain")));
        }
        for z in lattice(grid.z_extent(), h, 0.0) {
            let v = prefix.mass(grid, &AxisBall::new(z, h)?) / h.powi(4);
            if v > best.2 {
                best = (k, z, v);
            }
        }
    }
    Ok(DeltaReport { k_range, delta: best.2.max(0.0), j_min: k_lo, argmax: (best.0, best.1) })
}

/// Normalized area of a polar cap of angular radius `theta` on the unit `S³`.
pub fn cap_fraction(theta: f64) -> f64 {
    let t = theta.clamp(0.0, std::f64::consts::PI);
    (t - t.sin() * t.cos()) / std::f64::consts::PI
}

/// Fraction of `∫|S|² dμ₅` inside one 5D ball of radius `lambda` centred on the orbit point
/// `(r_center, z_center)`; each node contributes its exact angular cap.
pub fn ring_capture_fraction(s: &ScalarFieldRZ, lambda: f64, r_center: f64, z_center: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveRadius(lambda));
    }
    if r_center < 10.0 * lambda {
        return Err(Error::Regime(format!(
            "ring capture needs r_center ≥ 10·lambda (got r = {r_center}, lambda = {lambda})"
        )));
    }
    let grid = s.grid();
    let (r, z, w) = (grid.radial_nodes(), grid.z_nodes(), grid.quadrature_weights_r());
    let (mut total, mut captured) = (0.0, 0.0);
    for (m, row) in s.values().outer_iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let mass = w[m] * v * v;
            if mass == 0.0 {
                continue;
            }
            total += mass;
            let dz = crate::field::periodic_offset(z[j] - z_center, grid.z_extent());
            let c = (r[m] * r[m] + r_center * r_center + dz * dz - lambda * lambda) / (2.0 * r[m] * r_center);
            if c < 1.0 {
                captured += mass * cap_fraction(c.max(-1.0).acos());
            }
        }
    }
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(captured / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recentering {
    /// `R = (C₀+1)λ_n`.
    pub radius: f64,
    pub kappa_rec: f64,
    /// `Q_R(z*)` measured on the full field.
    pub achieved_score: f64,
    /// Axis centre used.
    pub center_z: f64,
    /// `κ_rec · λ_n^{−4} · M_n`.
    pub required: f64,
}

impl Recentering {
    pub fn holds(&self) -> bool {
        self.achieved_score >= self.required
    }
}

pub fn kappa_rec(eta: f64, c0: f64) -> f64 {
    eta * (c0 + 1.0).powi(-4)
}

/// Re-centres an η-coherent, axis-proximal packet onto the axis.
pub fn recenter(packet: &Packet, g: &ScalarFieldRZ, eta: f64, c0: f64) -> Result<Recentering> {
    if !(0.0..=1.0).contains(&eta) || eta == 0.0 || c0 < 0.0 {
        return Err(Error::InvalidParameter(format!("need η ∈ (0, 1] and C0 ≥ 0 (got {eta}, {c0})")));
    }
    let lambda = packet.lambda;
    if packet.center.0 > c0 * lambda {
        return Err(Error::Regime(format!(
            "packet at r = {:.4} > C0·λ = {:.4}; use ring_capture_fraction",
            packet.center.0,
            c0 * lambda
        )));
    }
    let (fraction, (_, z_star)) = coherence_fraction_within(packet, g, lambda, c0 * lambda);
    if fraction < eta {
        return Err(Error::Regime(format!("packet is not {eta}-coherent near the axis (best fraction {fraction:.4})")));
    }
    let radius = (c0 + 1.0) * lambda;
    let ball = AxisBall::new(z_star, radius)?;
    let achieved_score = ball_mass(g, &ball)? / radius.powi(4);
    let kappa = kappa_rec(eta, c0);
    Ok(Recentering {
        radius,
        kappa_rec: kappa,
        achieved_score,
        center_z: z_star,
        required: kappa * lambda.powi(-4) * packet.mass,
    })
}
