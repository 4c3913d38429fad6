//! Packet detection, coherence, six-way classification, and window covers.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::{self, ScoreScan};
use crate::field::{periodic_offset, AxisBall, ScalarFieldRZ};

/// Connected components smaller than this are ignored.
pub const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Packet {
    /// `(m, j)` node indices, 4-connected (periodic in z).
    pub cells: Vec<(usize, usize)>,
    /// μ₅-weighted centroid `(r_n, z_n)`, with `z_n` in `[−L, L)`.
    pub center: (f64, f64),
    /// Half the `(r, z)` diameter of the cell set.
    pub lambda: f64,
    /// `M_n = ∫_packet |G|² dμ₅`.
    pub mass: f64,
    pub thickness_r: f64,
    pub thickness_z: f64,
    /// Best one-ball captured fraction at radius `lambda`.
    pub eta_measured: f64,
    /// Centre `(r*, z*)` attaining `eta_measured`.
    pub best_center: (f64, f64),
    /// Per-cell unwrapped `z` (contiguous across the periodic seam).
    #[serde(skip)]
    unwrapped_z: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchLabel {
    Fragmentation,
    SlabCollapse,
    DisplacedOnly,
    ThinRing,
    AdmissibleProximal,
    ResidualNonconcentration,
}

impl BranchLabel {
    pub const ALL: [BranchLabel; 6] = [
        BranchLabel::Fragmentation,
        BranchLabel::SlabCollapse,
        BranchLabel::DisplacedOnly,
        BranchLabel::ThinRing,
        BranchLabel::AdmissibleProximal,
        BranchLabel::ResidualNonconcentration,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BranchLabel::Fragmentation => "fragmentation",
            BranchLabel::SlabCollapse => "slab_collapse",
            BranchLabel::DisplacedOnly => "displaced_only",
            BranchLabel::ThinRing => "thin_ring",
            BranchLabel::AdmissibleProximal => "admissible_proximal",
            BranchLabel::ResidualNonconcentration => "residual_nonconcentration",
        }
    }
}

/// Mass-weighted quantile of `|G|²`: the smallest value `t` such that nodes below `t` carry
/// at least `q` of the total mass.
pub fn mass_quantile(g: &ScalarFieldRZ, q: f64) -> f64 {
    let grid = g.grid();
    let w = grid.quadrature_weights_r();
    let mut items: Vec<(f64, f64)> = g
        .values()
        .indexed_iter()
        .map(|((m, _), v)| (v * v, w[m] * v * v))
        .filter(|&(v, _)| v > 0.0)
        .collect();
    if items.is_empty() {
        return f64::INFINITY;
    }
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = items.iter().map(|x| x.1).sum();
    let mut acc = 0.0;
    for &(v, mass) in &items {
        if acc >= q * total {
            return v;
        }
        acc += mass;
    }
    items.last().expect("non-empty").0
}

/// Connected super-level components of `|G|²` above the mass-weighted `quantile`.
pub fn detect_packets(g: &ScalarFieldRZ, quantile: f64) -> Result<Vec<Packet>> {
    if !(0.0..1.0).contains(&quantile) {
        return Err(Error::InvalidParameter(format!("threshold quantile {quantile} must lie in [0, 1)")));
    }
    if g.max_abs() == 0.0 {
        return Ok(Vec::new());
    }
    let t = mass_quantile(g, quantile);
    let (nr, nz) = (g.grid().nr(), g.grid().nz());
    let vals = g.values();
    let above = |m: usize, j: usize| {
        let v = vals[[m, j]];
        v * v >= t && v != 0.0
    };
    let mut seen = vec![false; nr * nz];
    let mut packets = Vec::new();
    for m0 in 0..nr {
        for j0 in 0..nz {
            if seen[m0 * nz + j0] || !above(m0, j0) {
                continue;
            }
            // Breadth-first labelling, tracking the unwrapped row offset.
            let mut cells = Vec::new();
            let mut wraps = Vec::new();
            let mut queue = VecDeque::from([(m0, j0, 0i64)]);
            seen[m0 * nz + j0] = true;
            while let Some((m, j, wrap)) = queue.pop_front() {
                cells.push((m, j));
                wraps.push(wrap);
                let up = if j + 1 == nz { (0, wrap + 1) } else { (j + 1, wrap) };
                let down = if j == 0 { (nz - 1, wrap - 1) } else { (j - 1, wrap) };
                let mut next = vec![up, down]
                    .into_iter()
                    .map(|(jj, w)| (m, jj, w))
                    .collect::<Vec<_>>();
                if m > 0 {
                    next.push((m - 1, j, wrap));
                }
                if m + 1 < nr {
                    next.push((m + 1, j, wrap));
                }
                for (mm, jj, w) in next {
                    if !seen[mm * nz + jj] && above(mm, jj) {
                        seen[mm * nz + jj] = true;
                        queue.push_back((mm, jj, w));
                    }
                }
            }
            if cells.len() >= MIN_CELLS {
                packets.push(describe(g, cells, &wraps));
            }
        }
    }
    Ok(packets)
}

fn describe(g: &ScalarFieldRZ, cells: Vec<(usize, usize)>, wraps: &[i64]) -> Packet {
    let grid = g.grid();
    let (r, z, w) = (grid.radial_nodes(), grid.z_nodes(), grid.quadrature_weights_r());
    let period = 2.0 * grid.z_extent();
    let uz: Vec<f64> = cells.iter().zip(wraps).map(|(&(_, j), &k)| z[j] + k as f64 * period).collect();
    let masses: Vec<f64> = cells.iter().map(|&(m, j)| w[m] * grid.dz() * g.values()[[m, j]].powi(2)).collect();
    let mass: f64 = masses.iter().sum();
    let rc = cells.iter().zip(&masses).map(|(&(m, _), &q)| r[m] * q).sum::<f64>() / mass;
    let zc_unwrapped = uz.iter().zip(&masses).map(|(z, q)| z * q).sum::<f64>() / mass;
    let zc = periodic_offset(zc_unwrapped, grid.z_extent());

    let pts: Vec<(f64, f64)> = cells.iter().zip(&uz).map(|(&(m, _), &z)| (r[m], z)).collect();
    let lambda = 0.5 * diameter(&pts);

    let (thickness_r, thickness_z) = thickness(g, &cells, &uz, (rc, zc_unwrapped));
    let (eta, best) = one_ball_fraction(&pts, &masses, lambda, f64::INFINITY);
    Packet {
        cells,
        center: (rc, zc),
        lambda,
        mass,
        thickness_r,
        thickness_z,
        eta_measured: eta,
        best_center: (best.0, periodic_offset(best.1, grid.z_extent())),
        unwrapped_z: uz,
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Diameter of a point set via its convex hull.
fn diameter(points: &[(f64, f64)]) -> f64 {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    p.dedup();
    if p.len() < 3 {
        return p.windows(2).map(|w| (w[0].0 - w[1].0).hypot(w[0].1 - w[1].1)).fold(0.0, f64::max);
    }
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &pt in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0.0 {
                hull.pop();
            }
            hull.push(pt);
        }
        hull.pop();
    }
    let mut best = 0.0_f64;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            best = best.max((hull[i].0 - hull[j].0).hypot(hull[i].1 - hull[j].1));
        }
    }
    best
}

/// Extents through the centre: radial along the row nearest `z_n`, vertical along the column nearest `r_n`.
fn thickness(g: &ScalarFieldRZ, cells: &[(usize, usize)], uz: &[f64], center: (f64, f64)) -> (f64, f64) {
    let grid = g.grid();
    let r = grid.radial_nodes();
    let dz = grid.dz();
    let row_dist = |i: usize| (uz[i] - center.1).abs();
    let near_row = (0..cells.len()).min_by(|&a, &b| row_dist(a).total_cmp(&row_dist(b))).expect("non-empty");
    let row_z = uz[near_row];
    let in_row: Vec<usize> = (0..cells.len()).filter(|&i| uz[i] == row_z).map(|i| cells[i].0).collect();
    let (lo, hi) = (*in_row.iter().min().expect("row"), *in_row.iter().max().expect("row"));
    let gap = |m: usize| if m + 1 < r.len() { r[m + 1] - r[m] } else { r[m] - r[m - 1] };
    let thickness_r = if lo == 0 { 2.0 * r[hi] } else { r[hi] - r[lo] + gap(hi) };

    let col_dist = |i: usize| (r[cells[i].0] - center.0).abs();
    let near_col = (0..cells.len()).min_by(|&a, &b| col_dist(a).total_cmp(&col_dist(b))).expect("non-empty");
    let col_m = cells[near_col].0;
    let zs: Vec<f64> = (0..cells.len()).filter(|&i| cells[i].0 == col_m).map(|i| uz[i]).collect();
    let zmin = zs.iter().copied().fold(f64::INFINITY, f64::min);
    let zmax = zs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (thickness_r, zmax - zmin + dz)
}

/// Largest fraction of `masses` within meridional distance `lambda` of one centre.
/// Candidates are the cells themselves and the axis points at the cells' heights.
fn one_ball_fraction(pts: &[(f64, f64)], masses: &[f64], lambda: f64, r_limit: f64) -> (f64, (f64, f64)) {
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return (0.0, pts.first().copied().unwrap_or((0.0, 0.0)));
    }
    let stride = (pts.len() / 2000).max(1);
    let mut candidates: Vec<(f64, f64)> = pts.iter().step_by(stride).copied().filter(|p| p.0 <= r_limit).collect();
    let mut heights: Vec<f64> = pts.iter().map(|p| p.1).collect();
    heights.sort_by(f64::total_cmp);
    heights.dedup();
    candidates.extend(heights.iter().step_by(stride).map(|&z| (0.0, z)));
    let l2 = lambda * lambda * (1.0 + 1e-12);
    let mut best = (-1.0, candidates[0]);
    for &c in &candidates {
        let captured: f64 = pts
            .iter()
            .zip(masses)
            .filter(|(p, _)| (p.0 - c.0).powi(2) + (p.1 - c.1).powi(2) <= l2)
            .map(|(_, m)| m)
            .sum();
        if captured > best.0 {
            best = (captured, c);
        }
    }
    ((best.0 / total).clamp(0.0, 1.0), best.1)
}

impl Packet {
    /// Cell coordinates `(r, z)` with `z` unwrapped across the periodic seam.
    pub fn points(&self, g: &ScalarFieldRZ) -> Vec<(f64, f64)> {
        let r = g.grid().radial_nodes();
        self.cells.iter().zip(&self.unwrapped_z).map(|(&(m, _), &z)| (r[m], z)).collect()
    }

    pub fn max_radius(&self, g: &ScalarFieldRZ) -> f64 {
        let r = g.grid().radial_nodes();
        self.cells.iter().map(|&(m, _)| r[m]).fold(0.0, f64::max)
    }

    pub fn aspect_ratio(&self) -> f64 {
        (self.thickness_z / self.thickness_r).max(self.thickness_r / self.thickness_z)
    }
}

/// Fraction of the packet's mass captured by the best single ball at radius `λ_n`, and whether it reaches `eta`.
pub fn coherence_test(p: &Packet, g: &ScalarFieldRZ, eta: f64) -> (bool, (f64, f64)) {
    let (fraction, best) = coherence_fraction(p, g, p.lambda);
    (fraction >= eta, best)
}

pub fn coherence_fraction(p: &Packet, g: &ScalarFieldRZ, radius: f64) -> (f64, (f64, f64)) {
    coherence_fraction_within(p, g, radius, f64::INFINITY)
}

/// As [`coherence_fraction`], restricted to centres with `r* ≤ r_limit`.
pub fn coherence_fraction_within(p: &Packet, g: &ScalarFieldRZ, radius: f64, r_limit: f64) -> (f64, (f64, f64)) {
    let grid = g.grid();
    let w = grid.quadrature_weights_r();
    let masses: Vec<f64> = p.cells.iter().map(|&(m, j)| w[m] * grid.dz() * g.values()[[m, j]].powi(2)).collect();
    let (f, c) = one_ball_fraction(&p.points(g), &masses, radius, r_limit);
    (f, (c.0, periodic_offset(c.1, grid.z_extent())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyParams {
    pub eta: f64,
    pub c0: f64,
    pub aspect_max: f64,
    /// Dyadic level for the thickness test; `round(−log₂ λ_n)` when absent.
    pub k: Option<i32>,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        Self { eta: 0.4, c0: 4.0, aspect_max: 20.0, k: None }
    }
}

/// Decision tree over the six branches; `scan` enables the displaced test.
pub fn classify(p: &Packet, g: &ScalarFieldRZ, params: &ClassifyParams, scan: Option<&ScoreScan>) -> BranchLabel {
    let (coherent, _) = coherence_test(p, g, params.eta);
    if !coherent {
        return BranchLabel::Fragmentation;
    }
    if p.aspect_ratio() > params.aspect_max {
        return BranchLabel::SlabCollapse;
    }
    let (r_n, z_n) = p.center;
    if let Some(scan) = scan {
        let (_, z_star, q_star) = scan.argmax;
        let offset = periodic_offset(z_n - z_star, g.grid().z_extent()).abs();
        if offset > (params.c0 + 1.0) * p.lambda && q_star > 0.0 {
            let radius = ((params.c0 + 1.0) * p.lambda).max(extraction::min_lambda(g.grid()));
            let own = AxisBall::new(z_n, radius)
                .and_then(|b| extraction::score(g, &b))
                .unwrap_or(0.0);
            if own < 0.5 * q_star {
                return BranchLabel::DisplacedOnly;
            }
        }
    }
    if r_n >= 10.0 * p.lambda {
        return BranchLabel::ThinRing;
    }
    let k = params.k.unwrap_or_else(|| (-p.lambda.log2()).round() as i32);
    let floor = 2f64.powi(-k);
    if r_n <= params.c0 * p.lambda && p.thickness_r >= floor && p.thickness_z >= floor {
        return BranchLabel::AdmissibleProximal;
    }
    BranchLabel::ResidualNonconcentration
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverParams {
    /// Packets must satisfy `max r ≤ proximal_factor · 2^{−k}`.
    pub proximal_factor: f64,
    pub n0: usize,
}

impl Default for CoverParams {
    fn default() -> Self {
        // Radius-h balls spaced by h cover the strip r ≤ (√3/2) h.
        Self { proximal_factor: 3f64.sqrt() / 2.0, n0: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowCover {
    pub k: i32,
    /// Consecutive lattice indices `i`, ball centres `z_i = i·2^{−k}`.
    pub indices: Vec<i64>,
}

impl WindowCover {
    pub fn spacing(&self) -> f64 {
        2f64.powi(-self.k)
    }

    fn balls_with_radius(&self, factor: f64) -> Vec<AxisBall> {
        let h = self.spacing();
        self.indices
            .iter()
            .map(|&i| AxisBall::new(i as f64 * h, factor * h).expect("positive radius"))
            .collect()
    }

    /// `B_i`, radius `2^{−k}`.
    pub fn balls(&self) -> Vec<AxisBall> {
        self.balls_with_radius(1.0)
    }

    /// `B*_i`, radius `3·2^{−k}`.
    pub fn enlarged(&self) -> Vec<AxisBall> {
        self.balls_with_radius(3.0)
    }

    /// `B**_i`, radius `5·2^{−k}`.
    pub fn doubly_enlarged(&self) -> Vec<AxisBall> {
        self.balls_with_radius(5.0)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Number of balls (plain distance, no periodic images) containing `(r, z)`.
pub fn overlap_count(balls: &[AxisBall], r: f64, z: f64) -> usize {
    balls.iter().filter(|b| b.contains(r, z)).count()
}

/// Smallest run of consecutive lattice balls `B_{2^{−k}}(i·2^{−k})` containing every packet cell.
pub fn window_cover(p: &Packet, g: &ScalarFieldRZ, k: i32, params: &CoverParams) -> Result<WindowCover> {
    let h = 2f64.powi(-k);
    let r_top = p.max_radius(g);
    if r_top > params.proximal_factor * h {
        return Err(Error::Regime(format!(
            "packet reaches r = {r_top:.4} > {:.4}·2^-{k}; not axis-proximal",
            params.proximal_factor
        )));
    }
    let mut intervals: Vec<(i64, i64)> = Vec::with_capacity(p.cells.len());
    for (r, z) in p.points(g) {
        let half = (h * h - r * r).max(0.0).sqrt();
        let lo = ((z - half) / h).ceil() as i64;
        let hi = ((z + half) / h).floor() as i64;
        if lo > hi {
            return Err(Error::Regime(format!("cell (r={r:.4}, z={z:.4}) is not covered by any lattice ball")));
        }
        intervals.push((lo, hi));
    }
    // Greedy stabbing by right endpoint gives a minimum hitting set.
    intervals.sort_by_key(|&(lo, hi)| (hi, lo));
    let mut chosen: Vec<i64> = Vec::new();
    for &(lo, hi) in &intervals {
        if !chosen.last().is_some_and(|&c| c >= lo && c <= hi) {
            if chosen.iter().any(|&c| c >= lo && c <= hi) {
                continue;
            }
            chosen.push(hi);
        }
    }
    let (first, last) = (*chosen.iter().min().expect("cells"), *chosen.iter().max().expect("cells"));
    let indices: Vec<i64> = (first..=last).collect();
    if indices.len() > params.n0 {
        return Err(Error::Regime(format!("cover needs {} balls > N0 = {}", indices.len(), params.n0)));
    }
    Ok(WindowCover { k, indices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::RoleTag;
    use crate::grid::HalfPlaneGrid;
    use std::sync::Arc;

    fn grid() -> Arc<HalfPlaneGrid> {
        HalfPlaneGrid::new(96, 128, 6.0, 6.0).unwrap()
    }

    fn bump(g: &Arc<HalfPlaneGrid>, r0: f64, z0: f64, s: f64) -> ScalarFieldRZ {
        ScalarFieldRZ::from_fn(g.clone(), RoleTag::G, |r, z| (-((r - r0).powi(2) + (z - z0).powi(2)) / (2.0 * s * s)).exp())
            .unwrap()
    }

    #[test]
    fn single_bump_gives_one_packet() {
        let g = grid();
        let f = bump(&g, 0.0, 0.7, 0.5);
        let ps = detect_packets(&f, 0.9).unwrap();
        assert_eq!(ps.len(), 1);
        let p = &ps[0];
        assert!((p.center.1 - 0.7).abs() < g.dz());
        assert!(p.center.0 < p.lambda);
        assert!(p.mass > 0.0 && p.lambda > 0.0);
        assert!((0.0..=1.0).contains(&p.eta_measured));
    }

    #[test]
    fn zero_field_has_no_packets() {
        let f = ScalarFieldRZ::zeros(grid(), RoleTag::G);
        assert!(detect_packets(&f, 0.9).unwrap().is_empty());
    }

    #[test]
    fn two_separated_bumps() {
        let g = grid();
        let f = bump(&g, 0.0, -2.5, 0.25).add(&bump(&g, 0.0, 2.5, 0.25)).unwrap();
        assert_eq!(detect_packets(&f, 0.9).unwrap().len(), 2);
    }

    #[test]
    fn packet_across_periodic_seam_is_connected() {
        let g = grid();
        let f = ScalarFieldRZ::from_fn(g.clone(), RoleTag::G, |r, z| {
            let dz = periodic_offset(z - 6.0, 6.0);
            (-(r * r + dz * dz) / 0.5).exp()
        })
        .unwrap();
        let ps = detect_packets(&f, 0.5).unwrap();
        assert_eq!(ps.len(), 1);
        assert!(periodic_offset(ps[0].center.1 - 6.0, 6.0).abs() < g.dz());
    }

    fn triangle(g: &Arc<HalfPlaneGrid>) -> ScalarFieldRZ {
        // Three lobes of equal μ₅ mass joined by weak bridges.
        let tri = [(3.0, -1.0), (3.0, 1.0), (3.0 + 3f64.sqrt(), 0.0)];
        let seg = |r: f64, z: f64, a: (f64, f64), b: (f64, f64)| {
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let t = (((r - a.0) * dx + (z - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            (r - a.0 - t * dx).powi(2) + (z - a.1 - t * dy).powi(2)
        };
        ScalarFieldRZ::from_fn(g.clone(), RoleTag::G, |r, z| {
            let mut v = 0.0;
            for (i, &p) in tri.iter().enumerate() {
                v += (3.0 / p.0).powf(1.5) * (-((r - p.0).powi(2) + (z - p.1).powi(2)) / (2.0 * 0.15f64.powi(2))).exp();
                v += 0.3 * (-seg(r, z, p, tri[(i + 1) % 3]) / (2.0 * 0.08f64.powi(2))).exp();
            }
            v
        })
        .unwrap()
    }

    #[test]
    fn spread_packet_fails_strict_coherence() {
        let g = HalfPlaneGrid::new(192, 256, 8.0, 4.0).unwrap();
        let f = triangle(&g);
        let ps = detect_packets(&f, 0.1).unwrap();
        assert_eq!(ps.len(), 1);
        let p = &ps[0];
        assert!(p.eta_measured < 0.9, "{}", p.eta_measured);
        let (ok, _) = coherence_test(p, &f, 0.9);
        assert!(!ok);
        // Scale invariance of the predicate.
        let (ok2, _) = coherence_test(p, &f.scaled(2.0), 0.9);
        assert_eq!(ok, ok2);
        let strict = ClassifyParams { eta: 0.9, ..ClassifyParams::default() };
        assert_eq!(classify(p, &f, &strict, None), BranchLabel::Fragmentation);
        // A higher threshold splits it into three compact packets.
        assert_eq!(detect_packets(&f, 0.5).unwrap().len(), 3);
    }

    #[test]
    fn compact_packet_is_fully_coherent() {
        let g = grid();
        let f = bump(&g, 0.0, 0.0, 0.4);
        let p = &detect_packets(&f, 0.9).unwrap()[0];
        let (ok, _) = coherence_test(p, &f, 0.99);
        assert!(ok);
    }

    #[test]
    fn labels_for_constructed_inputs() {
        let g = HalfPlaneGrid::new(192, 256, 8.0, 4.0).unwrap();
        let params = ClassifyParams::default();
        let axis = bump(&g, 0.0, 0.0, 0.35);
        let p = &detect_packets(&axis, 0.9).unwrap()[0];
        assert_eq!(classify(p, &axis, &params, None), BranchLabel::AdmissibleProximal);

        let ring = bump(&g, 6.0, 0.0, 0.2);
        let p = &detect_packets(&ring, 0.5).unwrap()[0];
        assert!(p.center.0 >= 10.0 * p.lambda);
        assert_eq!(classify(p, &ring, &params, None), BranchLabel::ThinRing);

        let slab = ScalarFieldRZ::from_fn(g.clone(), RoleTag::G, |r, z| {
            (-(z * z) / (2.0 * 0.03f64.powi(2))).exp() * (-(r * r) / (2.0 * 2.0f64.powi(2))).exp()
        })
        .unwrap();
        let p = &detect_packets(&slab, 0.5).unwrap()[0];
        assert!(p.aspect_ratio() > 20.0, "{}", p.aspect_ratio());
        assert_eq!(classify(p, &slab, &ClassifyParams { eta: 0.0, ..params }, None), BranchLabel::SlabCollapse);
    }

    #[test]
    fn cover_sizes_and_overlaps() {
        let g = HalfPlaneGrid::new(128, 256, 4.0, 4.0).unwrap();
        let f = bump(&g, 0.0, 0.3, 0.2);
        let p = &detect_packets(&f, 0.9).unwrap()[0];
        let k = (-(p.lambda * 2.0).log2()).floor() as i32;
        let c = window_cover(p, &f, k, &CoverParams::default()).unwrap();
        assert!(c.len() <= 8 && !c.is_empty());
        let balls = c.balls();
        for pt in p.points(&f) {
            assert!(overlap_count(&balls, pt.0, pt.1) >= 1);
        }
        // Axis point at a lattice centre lies in exactly three closed balls.
        let cover = WindowCover { k: 2, indices: (-3..=3).collect() };
        assert_eq!(overlap_count(&cover.balls(), 0.0, 0.0), 3);
        assert_eq!(overlap_count(&cover.enlarged(), 0.0, 0.0), 7);
    }

    #[test]
    fn non_proximal_packet_rejected() {
        let g = grid();
        let f = bump(&g, 3.0, 0.0, 0.4);
        let p = &detect_packets(&f, 0.9).unwrap()[0];
        assert!(matches!(window_cover(p, &f, 2, &CoverParams::default()), Err(Error::Regime(_))));
    }
}
