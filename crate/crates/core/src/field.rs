//! SO(4)-radial scalar fields on the half-plane and the lifted measure `dμ₅ = r³ dr dz`.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::HalfPlaneGrid;

/// `|S³| = 2π²`, the factor between `L²(dμ₅)` and `L²(ℝ⁵)` for SO(4)-radial functions.
pub const SPHERE3_AREA: f64 = 2.0 * PI * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleTag {
    /// Swirl circulation `Γ = r u_θ`; vanishes like `r²` at the axis.
    Gamma,
    /// `ω_θ / r`; even in `r`.
    G,
    /// Stream function.
    Phi,
    /// Output of a shell projector.
    Shell,
    Generic,
}

#[derive(Debug, Clone)]
pub struct ScalarFieldRZ {
    grid: Arc<HalfPlaneGrid>,
    values: Array2<f64>,
    role: RoleTag,
}

impl ScalarFieldRZ {
    pub fn new(grid: Arc<HalfPlaneGrid>, values: Array2<f64>, role: RoleTag) -> Result<Self> {
        if values.dim() != (grid.nr(), grid.nz()) {
            return Err(Error::GridMismatch(format!(
                "values have shape {:?}, grid is {}x{}",
                values.dim(),
                grid.nr(),
                grid.nz()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field contains non-finite values".into()));
        }
        let field = Self { grid, values, role };
        if role == RoleTag::Gamma {
            field.check_gamma_axis()?;
        }
        Ok(field)
    }

    /// Construction for values produced by internal numerics (shape known, no role checks).
    pub(crate) fn from_parts(grid: Arc<HalfPlaneGrid>, values: Array2<f64>, role: RoleTag) -> Self {
        debug_assert_eq!(values.dim(), (grid.nr(), grid.nz()));
        Self { grid, values, role }
    }

    pub fn zeros(grid: Arc<HalfPlaneGrid>, role: RoleTag) -> Self {
        let values = Array2::zeros((grid.nr(), grid.nz()));
        Self { grid, values, role }
    }

    /// Samples `f(r, z)` at every node.
    pub fn from_fn(grid: Arc<HalfPlaneGrid>, role: RoleTag, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = Array2::from_shape_fn((grid.nr(), grid.nz()), |(m, j)| {
            f(grid.radial_nodes()[m], grid.z_nodes()[j])
        });
        Self::new(grid, values, role)
    }

    pub fn grid(&self) -> &Arc<HalfPlaneGrid> {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn role(&self) -> RoleTag {
        self.role
    }

    pub fn with_role(mut self, role: RoleTag) -> Self {
        self.role = role;
        self
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_parts(self.grid.clone(), &self.values * c, self.role)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts(self.grid.clone(), self.values.mapv(f), self.role)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self::from_parts(self.grid.clone(), &self.values + &other.values, self.role))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self::from_parts(self.grid.clone(), &self.values - &other.values, self.role))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self::from_parts(self.grid.clone(), &self.values * &other.values, RoleTag::Generic))
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("fields live on different grids".into()))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `‖f‖_{L²(dμ₅)}`.
    pub fn norm_mu5(&self) -> f64 {
        integrate_mu5_values(&self.grid, &self.values.mapv(|v| v * v)).max(0.0).sqrt()
    }

    /// `∫ f g dμ₅`.
    pub fn inner_mu5(&self, other: &Self) -> Result<f64> {
        self.same_grid(other)?;
        Ok(integrate_mu5_values(&self.grid, &(&self.values * &other.values)))
    }

    /// Value at the axis, extrapolated from the two innermost nodes with the parity of the role.
    pub fn axis_value(&self, j: usize) -> f64 {
        match self.role {
            RoleTag::Gamma => 0.0,
            _ => {
                let r = self.grid.radial_nodes();
                let (a, b) = (r[0] * r[0], r[1] * r[1]);
                let (fa, fb) = (self.values[[0, j]], self.values[[1, j]]);
                (fa * b - fb * a) / (b - a)
            }
        }
    }

    fn check_gamma_axis(&self) -> Result<()> {
        let r = self.grid.radial_nodes();
        let (r1, r2) = (r[0], r[1]);
        let scale = self
            .values
            .indexed_iter()
            .fold(0.0_f64, |a, ((m, _), v)| a.max(v.abs() / (r[m] * r[m])));
        for j in 0..self.grid.nz() {
            let inner = self.values[[0, j]].abs() / (r1 * r1);
            let next = self.values[[1, j]].abs() / (r2 * r2);
            if inner > 1.5 * next + 1e-2 * scale {
                return Err(Error::InvalidParameter(format!(
                    "gamma field is not O(r^2) at the axis (row {j}: {inner:.3e} vs {next:.3e})"
                )));
            }
        }
        Ok(())
    }
}

/// Axis-centred 5D ball `{ |x'|² + (z − z₀)² ≤ λ² }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBall {
    z0: f64,
    lambda: f64,
}

impl AxisBall {
    pub fn new(z0: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::NonPositiveRadius(lambda));
        }
        if !z0.is_finite() {
            return Err(Error::InvalidParameter(format!("ball centre {z0} is not finite")));
        }
        Ok(Self { z0, lambda })
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Plain Euclidean membership (no periodic images).
    pub fn contains(&self, r: f64, z: f64) -> bool {
        let dz = z - self.z0;
        r * r + dz * dz <= self.lambda * self.lambda
    }

    /// Same centre, radius multiplied by `factor`.
    pub fn dilated(&self, factor: f64) -> Result<Self> {
        Self::new(self.z0, self.lambda * factor)
    }

    /// Per row `j`, the number of radial nodes inside the ball (0 for rows it misses).
    /// Vertical distances use the nearest periodic image.
    pub fn row_counts(&self, grid: &HalfPlaneGrid) -> Vec<usize> {
        let r = grid.radial_nodes();
        grid.z_nodes()
            .iter()
            .map(|&z| {
                let dz = periodic_offset(z - self.z0, grid.z_extent());
                let rem = self.lambda * self.lambda - dz * dz;
                if rem < 0.0 {
                    0
                } else {
                    let lim = rem.sqrt();
                    r.partition_point(|&x| x <= lim)
                }
            })
            .collect()
    }
}

/// `d` reduced to `[−L, L)`.
pub fn periodic_offset(d: f64, z_extent: f64) -> f64 {
    let period = 2.0 * z_extent;
    (d + z_extent).rem_euclid(period) - z_extent
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Whole,
    Ball(AxisBall),
}

fn integrate_mu5_values(grid: &HalfPlaneGrid, values: &Array2<f64>) -> f64 {
    let w = grid.quadrature_weights_r();
    let dz = grid.dz();
    let mut total = 0.0;
    for (m, row) in values.outer_iter().enumerate() {
        total += w[m] * row.sum();
    }
    total * dz
}

/// `∫_region f r³ dr dz` by tensor quadrature; balls use the node indicator.
pub fn integrate_mu5(f: &ScalarFieldRZ, region: Region) -> Result<f64> {
    match region {
        Region::Whole => Ok(integrate_mu5_values(&f.grid, &f.values)),
        Region::Ball(ball) => integrate_ball(&f.grid, &f.values, &ball, |v| v),
    }
}

/// `∫_ball |f|² dμ₅`.
pub fn ball_mass(f: &ScalarFieldRZ, ball: &AxisBall) -> Result<f64> {
    integrate_ball(&f.grid, &f.values, ball, |v| v * v)
}

pub(crate) fn integrate_ball(
    grid: &HalfPlaneGrid,
    values: &Array2<f64>,
    ball: &AxisBall,
    transform: impl Fn(f64) -> f64,
) -> Result<f64> {
    if !(ball.lambda > 0.0) {
        return Err(Error::NonPositiveRadius(ball.lambda));
    }
    let l = grid.z_extent();
    if ball.z0 < -l - ball.lambda || ball.z0 > l + ball.lambda {
        return Err(Error::BallOutsideGrid { z0: ball.z0, lambda: ball.lambda });
    }
    let counts = ball.row_counts(grid);
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::BallOutsideGrid { z0: ball.z0, lambda: ball.lambda });
    }
    let w = grid.quadrature_weights_r();
    let mut total = 0.0;
    for (j, &count) in counts.iter().enumerate() {
        for m in 0..count {
            total += w[m] * transform(values[[m, j]]);
        }
    }
    Ok(total * grid.dz())
}

/// Full `L²(ℝ⁵)` squared norm of the SO(4)-radial extension: `2π² ∫ |f|² dμ₅`.
pub fn lifted_l2_norm_sq(f: &ScalarFieldRZ) -> f64 {
    SPHERE3_AREA * integrate_mu5_values(&f.grid, &f.values.mapv(|v| v * v))
}

/// Meridional velocity plus swirl on a shared grid.
#[derive(Debug, Clone)]
pub struct VelocityRZ {
    pub u_r: ScalarFieldRZ,
    pub u_theta: ScalarFieldRZ,
    pub u_z: ScalarFieldRZ,
    /// `‖(1/r)∂_r(r u_r) + ∂_z u_z‖_{L²(dμ₅)}` relative to the norms of its two terms.
    pub divergence_residual: f64,
}
