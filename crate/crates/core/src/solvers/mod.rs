//! The three dimer drivers and their shared machinery.
//!
//! * [`run_simple_dimer`] — fixed-step alternating orientation/position
//!   updates (a forward-Euler integrator for the dimer dynamics).
//! * [`run_exact_rotation_dimer`] — tight rotation to the minimal curvature
//!   direction at every iterate, then a fixed translation step.
//! * [`run_linesearch_dimer`] — orientation kept only as accurate as the
//!   translation residual requires, translation steps chosen by a
//!   backtracking linesearch on a local merit function.

mod drivers;
mod merit;
mod rotation;

pub use drivers::{run_exact_rotation_dimer, run_linesearch_dimer, run_simple_dimer};
pub use merit::{gamma_step_heuristic, merit_gradient, merit_value, MeritAnchor};
pub use rotation::{rotate, RotationOutcome};

use crate::dimer::DimerState;
use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Tunable parameters shared by all drivers.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Dimer half-length; fixed for the whole run.
    pub h: f64,
    /// Translation residual tolerance.
    pub tol_x: f64,
    /// Rotation residual tolerance.
    pub tol_v: f64,
    /// Armijo sufficient-decrease fraction, in (0, 1).
    pub theta: f64,
    /// Trial-orientation guard factor for the linesearch driver, > 1.
    pub psi: f64,
    /// Translation step cap for the linesearch driver.
    pub alpha_max: f64,
    /// Rotation step cap.
    pub beta_max: f64,
    /// Seed value for the expanding translation step.
    pub alpha0: f64,
    /// Seed value for the expanding rotation step.
    pub beta0: f64,
    pub max_iters: usize,
    pub max_gradient_calls: u64,
    /// Stagnation guard: give up once a backtracked step falls below
    /// `alpha_min_factor * alpha_max` (or the `beta` analogue).
    pub alpha_min_factor: f64,
    /// Use the step-ratio heuristic for the initial linesearch step.
    pub use_gamma_heuristic: bool,
    pub rotation_max_steps: usize,
    /// Rotation tolerance used by the exact-rotation driver.
    pub exact_rotation_tol: f64,
    /// Walking further than this from the start counts as divergence.
    pub divergence_radius: f64,
    /// A translation residual above this counts as divergence.
    pub residual_cap: f64,
    /// Keep a copy of every iterate in the outcome.
    pub record_positions: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            h: 1e-3,
            tol_x: 1e-5,
            tol_v: 1e-1,
            theta: 0.1f64.sqrt(),
            psi: 100.0,
            alpha_max: 1.0,
            beta_max: 1.0,
            alpha0: 1.0,
            beta0: 1.0,
            max_iters: 10_000,
            max_gradient_calls: 10_000_000,
            alpha_min_factor: 1e-14,
            use_gamma_heuristic: false,
            rotation_max_steps: 1000,
            exact_rotation_tol: 1e-10,
            divergence_radius: 1e6,
            residual_cap: 1e10,
            record_positions: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let checks: [(bool, &str); 10] = [
            (self.h > 0.0, "h must be positive"),
            (self.tol_x > 0.0, "tol_x must be positive"),
            (self.tol_v > 0.0, "tol_v must be positive"),
            (
                self.theta > 0.0 && self.theta < 1.0,
                "theta must lie in (0, 1)",
            ),
            (self.psi > 1.0, "psi must exceed 1"),
            (
                self.alpha_max >= self.alpha0 && self.alpha0 > 0.0,
                "need alpha_max >= alpha0 > 0",
            ),
            (
                self.beta_max >= self.beta0 && self.beta0 > 0.0,
                "need beta_max >= beta0 > 0",
            ),
            (
                self.alpha_min_factor > 0.0 && self.alpha_min_factor < 1.0,
                "alpha_min_factor must lie in (0, 1)",
            ),
            (self.max_iters >= 1, "max_iters must be at least 1"),
            (
                self.rotation_max_steps >= 1,
                "rotation_max_steps must be at least 1",
            ),
        ];
        for (ok, message) in checks {
            if !ok {
                return Err(Error::invalid(message));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    MaxGradientCalls,
    LinesearchStagnation,
    Diverged,
    ZeroTranslationGradient,
}

impl SolveStatus {
    pub fn name(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::MaxGradientCalls => "max_gradient_calls",
            SolveStatus::LinesearchStagnation => "linesearch_stagnation",
            SolveStatus::Diverged => "diverged",
            SolveStatus::ZeroTranslationGradient => "zero_translation_gradient",
        }
    }
}

/// One row of a run's convergence history.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub k: usize,
    /// Cumulative gradient calls at the point this iterate's residuals
    /// became known; strictly increasing across rows.
    pub n_gradient_calls: u64,
    pub dimer_energy: f64,
    pub res_x: f64,
    pub res_v: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_rotation_steps: usize,
}

#[derive(Debug)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub final_state: DimerState,
    pub trace: Vec<IterationRecord>,
    /// Iterates, one per trace row, when `record_positions` was set.
    pub positions: Vec<Vector>,
    pub n_gradient_calls: u64,
}

impl SolveOutcome {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn iterations(&self) -> usize {
        self.trace.last().map(|r| r.k).unwrap_or(0)
    }
}
