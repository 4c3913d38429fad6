//! Axisymmetric Navier–Stokes with swirl in `(Γ, G)` form.
//!
//! The swirl is advanced as `γ = Γ/r²`, which lives in the same Bessel span as `G`:
//!
//! ```text
//! ∂_t γ = Δ₅γ − u·∇γ − (2u_r/r) γ
//! ∂_t G = Δ₅G − u·∇G + ∂_z(γ²)
//! ```
//!
//! Diffusion is integrated exactly in spectral space; the rest uses a second-order
//! integrating-factor Runge–Kutta step.

use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::biot_savart::{meridional_velocity, radial_nodes_column, stream_spectrum, velocity_from_stream_spectrum};
use crate::error::{Error, Result};
use crate::extraction;
use crate::field::{RoleTag, ScalarFieldRZ};
use crate::grid::HalfPlaneGrid;
use crate::io;
use crate::recipes::{self, Recipe, RecipeParams};
use crate::spectral::{Basis, SpectralField, SpectralPlan, VectorSpectrum};

/// Advective Courant limit: `max|u|·dt ≤ CFL_LIMIT · min cell`.
pub const CFL_LIMIT: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct FlowState {
    /// `Γ = r u_θ`.
    pub gamma: ScalarFieldRZ,
    pub g: ScalarFieldRZ,
    pub time: f64,
    pub nu: f64,
    pub energy: f64,
    pub dissipation: f64,
    swirl: SpectralField,
    vort: SpectralField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub energy: f64,
    pub dissipation: f64,
    pub gamma_max: f64,
    pub divergence_residual: f64,
    /// `‖ω_θ/r − G‖ / ‖G‖` with `ω_θ` rebuilt from the velocity.
    pub omega_residual: f64,
}

impl FlowState {
    /// From `Γ` (role `Gamma`) and `G`.
    pub fn new(plan: &Arc<SpectralPlan>, gamma: &ScalarFieldRZ, g: &ScalarFieldRZ) -> Result<Self> {
        gamma.same_grid(g)?;
        if gamma.grid().as_ref() != plan.grid().as_ref() {
            return Err(Error::GridMismatch("initial data and plan use different grids".into()));
        }
        let r = radial_nodes_column(plan);
        let small = gamma.values() / &(&r * &r);
        let swirl = plan.forward_values(&small, Basis::Scalar);
        let vort = plan.forward(g)?;
        Ok(Self::from_spectra(swirl, vort, 0.0))
    }

    fn from_spectra(swirl: SpectralField, vort: SpectralField, time: f64) -> Self {
        let plan = swirl.plan().clone();
        let grid = plan.grid().clone();
        let r = radial_nodes_column(&plan);
        let small = plan.inverse_values(&swirl);
        let gamma = ScalarFieldRZ::from_parts(grid.clone(), &small * &(&r * &r), RoleTag::Gamma);
        let g = ScalarFieldRZ::from_parts(grid, plan.inverse_values(&vort), RoleTag::G);
        let (energy, dissipation) = energy_and_dissipation(&swirl, &vort, &small);
        Self { gamma, g, time, nu: 1.0, energy, dissipation, swirl, vort }
    }

    pub fn plan(&self) -> &Arc<SpectralPlan> {
        self.vort.plan()
    }

    pub fn gamma_max(&self) -> f64 {
        self.gamma.max_abs()
    }

    /// Velocity-consistency diagnostics at the current state.
    pub fn diagnostics(&self) -> Result<Diagnostics> {
        let plan = self.plan();
        let phi = stream_spectrum(&self.vort);
        let vel = velocity_from_stream_spectrum(&phi, Some(&self.gamma))?;
        let phi_field = phi.to_field(RoleTag::Phi);
        let rebuilt = crate::biot_savart::vorticity_over_r(plan, &phi_field, &vel)?;
        let gn = self.g.norm_mu5();
        let omega_residual = if gn > 0.0 { rebuilt.sub(&self.g)?.norm_mu5() / gn } else { 0.0 };
        Ok(Diagnostics {
            energy: self.energy,
            dissipation: self.dissipation,
            gamma_max: self.gamma_max(),
            divergence_residual: vel.divergence_residual,
            omega_residual,
        })
    }

    /// Largest meridional or swirl speed.
    pub fn max_speed(&self) -> f64 {
        let (ur, uz) = meridional_velocity(&stream_spectrum(&self.vort));
        let r = radial_nodes_column(self.plan());
        let ut = self.gamma.values() / &r;
        ur.iter()
            .zip(uz.iter())
            .zip(ut.iter())
            .map(|((a, b), c)| (a * a + b * b + c * c).sqrt())
            .fold(0.0, f64::max)
    }
}

/// `E = π∫|u|² r dr dz` and `∫|ω|² d³x = 2π∫(ω_r² + ω_θ² + ω_z²) r dr dz`.
fn energy_and_dissipation(swirl: &SpectralField, vort: &SpectralField, small: &Array2<f64>) -> (f64, f64) {
    let plan = swirl.plan();
    let grid = plan.grid();
    let r = radial_nodes_column(plan);
    let (ur, uz) = meridional_velocity(&stream_spectrum(vort));
    let ut = small * &r;
    let grad = VectorSpectrum::gradient(swirl);
    let gr = plan.inverse_values(&grad.radial);
    let gz = plan.inverse_values(&grad.axial);
    let g = plan.inverse_values(vort);
    let om_r = -(&r * &gz);
    let om_t = &r * &g;
    let om_z = small * 2.0 + &r * &gr;
    let w = grid.quadrature_weights_r1();
    let dz = grid.dz();
    let integrate = |f: &dyn Fn(usize, usize) -> f64| -> f64 {
        let mut total = 0.0;
        for m in 0..grid.nr() {
            let row: f64 = (0..grid.nz()).map(|j| f(m, j)).sum();
            total += w[m] * row;
        }
        total * dz
    };
    let energy = std::f64::consts::PI
        * integrate(&|m, j| ur[[m, j]].powi(2) + ut[[m, j]].powi(2) + uz[[m, j]].powi(2));
    let dissipation = 2.0
        * std::f64::consts::PI
        * integrate(&|m, j| om_r[[m, j]].powi(2) + om_t[[m, j]].powi(2) + om_z[[m, j]].powi(2));
    (energy, dissipation)
}

/// Explicit terms `(N_γ, N_G)` and the largest speed.
fn nonlinear(swirl: &SpectralField, vort: &SpectralField) -> (SpectralField, SpectralField, f64) {
    let plan = swirl.plan();
    let r = radial_nodes_column(plan);
    let (ur, uz) = meridional_velocity(&stream_spectrum(vort));
    let small = plan.inverse_values(swirl);
    let sg = VectorSpectrum::gradient(swirl);
    let vg = VectorSpectrum::gradient(vort);
    let (sr, sz) = (plan.inverse_values(&sg.radial), plan.inverse_values(&sg.axial));
    let (gr, gz) = (plan.inverse_values(&vg.radial), plan.inverse_values(&vg.axial));
    let n_swirl = -(&ur * &sr + &uz * &sz) - &(&ur / &r * 2.0 * &small);
    let transport = -(&ur * &gr + &uz * &gz);
    let zeta = plan.zeta_deriv().to_vec();
    let source = plan
        .forward_values(&(&small * &small), Basis::Scalar)
        .apply_mode_symbol(Basis::Scalar, |_, q| Complex64::new(0.0, zeta[q]));
    let n_vort = plan.forward_values(&transport, Basis::Scalar).add(&source);
    let ut = &small * &r;
    let speed = ur
        .iter()
        .zip(uz.iter())
        .zip(ut.iter())
        .map(|((a, b), c)| (a * a + b * b + c * c).sqrt())
        .fold(0.0, f64::max);
    (plan.forward_values(&n_swirl, Basis::Scalar), n_vort, speed)
}

fn check_finite(s: &SpectralField, time: f64) -> Result<()> {
    if s.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { time })
    }
}

/// One integrating-factor RK2 step.
pub fn step(state: &FlowState, dt: f64) -> Result<FlowState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("time step {dt} must be positive")));
    }
    let plan = state.plan().clone();
    let min_cell = plan.grid().min_cell();
    let (n1_s, n1_v, speed) = nonlinear(&state.swirl, &state.vort);
    let courant = speed * dt / min_cell;
    if courant > CFL_LIMIT {
        return Err(Error::Cfl { courant, limit: CFL_LIMIT });
    }
    let decay = move |xi: f64| (-xi * xi * dt).exp();
    let e = |f: &SpectralField| f.apply_radial_symbol(decay);
    let s_star = e(&state.swirl.add(&n1_s.scale(dt)));
    let v_star = e(&state.vort.add(&n1_v.scale(dt)));
    check_finite(&s_star, state.time + dt)?;
    check_finite(&v_star, state.time + dt)?;
    let (n2_s, n2_v, _) = nonlinear(&s_star, &v_star);
    let swirl = e(&state.swirl).add(&e(&n1_s).add(&n2_s).scale(0.5 * dt));
    let vort = e(&state.vort).add(&e(&n1_v).add(&n2_v).scale(0.5 * dt));
    check_finite(&swirl, state.time + dt)?;
    check_finite(&vort, state.time + dt)?;
    Ok(FlowState::from_spectra(swirl, vort, state.time + dt))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub nr: usize,
    pub nz: usize,
    pub r_max: f64,
    pub l_z: f64,
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_every: usize,
    pub initial: Recipe,
    pub recipe: RecipeParams,
    pub seed: u64,
    /// Compute `Q_*` for each snapshot.
    pub scan: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nr: 64,
            nz: 64,
            r_max: 6.0,
            l_z: 4.0,
            dt: 1e-3,
            t_end: 0.05,
            snapshot_every: 10,
            initial: Recipe::Gaussian,
            recipe: RecipeParams::default(),
            seed: 0,
            scan: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nr < 4 || self.nz < 4 {
            return Err(Error::InvalidGrid(format!("grid {}x{} too small", self.nr, self.nz)));
        }
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || self.snapshot_every == 0 {
            return Err(Error::InvalidParameter("need dt > 0, T_end ≥ 0 and snapshot_every ≥ 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub index: usize,
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub gamma_max: f64,
    pub divergence_residual: f64,
    pub omega_residual: f64,
    /// `(λ*, z₀*, Q*)`, when scanned.
    pub q_star: Option<(f64, f64, f64)>,
    pub file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub config: RunConfig,
    pub snapshots: Vec<SnapshotRecord>,
    /// Set when the run stopped early.
    pub error: Option<String>,
}

fn record(state: &FlowState, index: usize, step: usize, scan: bool, file: Option<String>) -> Result<SnapshotRecord> {
    let d = state.diagnostics()?;
    let q_star = if scan { Some(extraction::sup_scan_default(&state.g)?.argmax) } else { None };
    Ok(SnapshotRecord {
        index,
        step,
        time: state.time,
        energy: d.energy,
        dissipation: d.dissipation,
        gamma_max: d.gamma_max,
        divergence_residual: d.divergence_residual,
        omega_residual: d.omega_residual,
        q_star,
        file,
    })
}

/// Builds the grid and initial state for a configuration.
pub fn initial_state(cfg: &RunConfig) -> Result<FlowState> {
    use rand::SeedableRng;
    cfg.validate()?;
    let grid = HalfPlaneGrid::new(cfg.nr, cfg.nz, cfg.r_max, cfg.l_z)?;
    let plan = SpectralPlan::new(grid)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = recipes::build(&plan, cfg.initial, &cfg.recipe, &mut rng)?;
    FlowState::new(&plan, &init.gamma, &init.g)
}

/// Evolves to `t_end`, recording every `snapshot_every` steps and writing SWRL1 files to `out`.
/// Numerical faults end the series early with `error` set.
pub fn run(cfg: &RunConfig, out: Option<&Path>) -> Result<(RunLog, FlowState)> {
    let mut state = initial_state(cfg)?;
    let (tx, rx) = mpsc::channel::<(PathBuf, Vec<u8>)>();
    let writer = thread::spawn(move || -> Result<()> {
        for (path, bytes) in rx {
            io::atomic_write(&path, &bytes)?;
        }
        Ok(())
    });
    let mut log = RunLog { config: cfg.clone(), snapshots: Vec::new(), error: None };
    let snap = |state: &FlowState, index: usize, step: usize| -> Result<SnapshotRecord> {
        let file = match out {
            Some(dir) => {
                let name = format!("snap_{index:04}.swrl");
                let bytes = io::encode(state.time, &[("gamma", &state.gamma), ("G", &state.g)])?;
                tx.send((dir.join(&name), bytes)).map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
                Some(name)
            }
            None => None,
        };
        record(state, index, step, cfg.scan, file)
    };
    log.snapshots.push(snap(&state, 0, 0)?);
    let steps = cfg.steps();
    for n in 1..=steps {
        let dt = cfg.dt.min(cfg.t_end - state.time).max(cfg.dt * 1e-9);
        match step(&state, dt) {
            Ok(next) => state = next,
            Err(e @ (Error::NonFinite { .. } | Error::Cfl { .. })) => {
                log.error = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
        if n % cfg.snapshot_every == 0 || n == steps {
            let index = log.snapshots.len();
            log.snapshots.push(snap(&state, index, n)?);
        }
    }
    drop(tx);
    writer.join().map_err(|_| Error::Io(std::io::Error::other("snapshot writer panicked")))??;
    Ok((log, state))
}
