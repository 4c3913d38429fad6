//! Initial-data library and random test fields.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{periodic_offset, RoleTag, ScalarFieldRZ};
use crate::grid::HalfPlaneGrid;
use crate::spectral::{random_band_limited, SpectralPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    Gaussian,
    Rings,
    Diffuse,
    Thinring,
}

impl std::str::FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Recipe::Gaussian),
            "rings" => Ok(Recipe::Rings),
            "diffuse" => Ok(Recipe::Diffuse),
            "thinring" => Ok(Recipe::Thinring),
            other => Err(Error::InvalidParameter(format!(
                "unknown recipe {other:?} (expected gaussian, rings, diffuse or thinring)"
            ))),
        }
    }
}

/// Knobs shared by the recipes; unused ones are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecipeParams {
    pub amplitude: f64,
    pub width: f64,
    /// Ring radius for `rings` and `thinring`.
    pub radius: f64,
    /// Half the vertical separation of the two rings.
    pub separation: f64,
    /// Dyadic shells `[0, shells)` populated by `diffuse`.
    pub shells: i32,
    pub swirl: f64,
}

impl Default for RecipeParams {
    fn default() -> Self {
        Self { amplitude: 1.0, width: 0.5, radius: 1.5, separation: 1.0, shells: 4, swirl: 1.0 }
    }
}

/// Initial `(Γ, G)`; `Γ` carries the swirl and vanishes like `r²` at the axis.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub gamma: ScalarFieldRZ,
    pub g: ScalarFieldRZ,
}

fn gauss(grid: &HalfPlaneGrid, r: f64, z: f64, r0: f64, z0: f64, w: f64) -> f64 {
    let dz = periodic_offset(z - z0, grid.z_extent());
    (-((r - r0).powi(2) + dz * dz) / (w * w)).exp()
}

pub fn build(plan: &Arc<SpectralPlan>, recipe: Recipe, p: &RecipeParams, rng: &mut impl Rng) -> Result<InitialData> {
    let grid = plan.grid().clone();
    if !(p.width > 0.0) {
        return Err(Error::InvalidParameter(format!("width {} must be positive", p.width)));
    }
    let gr = grid.clone();
    let (gamma, g) = match recipe {
        Recipe::Gaussian => {
            let gamma = ScalarFieldRZ::from_fn(grid.clone(), RoleTag::Gamma, |r, z| p.swirl * r * r * gauss(&gr, r, z, 0.0, 0.0, p.width))?;
            let g = ScalarFieldRZ::from_fn(grid.clone(), RoleTag::G, |r, z| {
                p.amplitude * gauss(&gr, r, z, 0.0, 0.0, p.width)
            })?;
            (gamma, g)
        }
        Recipe::Rings => {
            let g = ScalarFieldRZ::from_fn(grid.clone(), RoleTag::G, |r, z| {
                p.amplitude
                    * (gauss(&gr, r, z, p.radius, -p.separation, p.width) - gauss(&gr, r, z, p.radius, p.separation, p.width))
            })?;
            let gamma = ScalarFieldRZ::from_fn(grid.clone(), RoleTag::Gamma, |r, z| {
                p.swirl
                    * r
                    * r
                    * (gauss(&gr, r, z, p.radius, -p.separation, p.width) + gauss(&gr, r, z, p.radius, p.separation, p.width))
            })?;
            (gamma, g)
        }
        Recipe::Diffuse => {
            let g = diffuse(plan, (0, p.shells.max(1) - 1), p.amplitude, rng)?;
            (ScalarFieldRZ::zeros(grid.clone(), RoleTag::Gamma), g)
        }
        Recipe::Thinring => {
            let g = ScalarFieldRZ::from_fn(grid.clone(), RoleTag::G, |r, z| p.amplitude * gauss(&gr, r, z, p.radius, 0.0, p.width))?;
            let gamma = ScalarFieldRZ::zeros(grid.clone(), RoleTag::Gamma);
            (gamma, g)
        }
    };
    Ok(InitialData { gamma, g })
}

/// Multi-shell noise with equal `2^k ‖Δ_k G‖ ≈ amplitude` on each shell of `shells`.
pub fn diffuse(plan: &Arc<SpectralPlan>, shells: (i32, i32), amplitude: f64, rng: &mut impl Rng) -> Result<ScalarFieldRZ> {
    let mut g = ScalarFieldRZ::zeros(plan.grid().clone(), RoleTag::G);
    for k in shells.0..=shells.1 {
        let piece = random_band_limited(plan, 2f64.powf(k as f64 - 0.4), 2f64.powf(k as f64 + 0.4), rng);
        let n = piece.norm_mu5();
        if n > 0.0 {
            g = g.add(&piece.scaled(amplitude * 2f64.powi(-k) / n))?;
        }
    }
    Ok(g.with_role(RoleTag::G))
}

/// Sum of `count` Gaussian bumps with random centres, widths and signed amplitudes, kept well
/// inside the grid so the field is negligible at `r = R` and across the periodic seam.
pub fn random_bumps(grid: &Arc<HalfPlaneGrid>, count: usize, rng: &mut impl Rng) -> Result<ScalarFieldRZ> {
    let l = grid.z_extent();
    let r_room = grid.r_max() / 6.0;
    let bumps: Vec<(f64, f64, f64, f64)> = (0..count)
        .map(|_| {
            let w = rng.gen_range(0.35..0.8) * (l / 4.0).min(r_room).min(1.0);
            (rng.gen_range(0.0..r_room), rng.gen_range(-l / 2.0..l / 2.0), w, rng.gen_range(-1.0..1.0))
        })
        .collect();
    let g = grid.clone();
    ScalarFieldRZ::from_fn(grid.clone(), RoleTag::G, move |r, z| {
        bumps.iter().map(|&(r0, z0, w, a)| a * gauss(&g, r, z, r0, z0, w)).sum()
    })
}
