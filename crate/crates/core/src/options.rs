use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tunables shared by every scheme. Unknown keys are rejected when parsed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Multi-start count of a root relaxed solve.
    pub n_starts: usize,
    /// Starts per branch solve; the incumbent is always tried first.
    pub branch_starts: usize,
    pub seed: u64,
    /// Absolute residual allowed on capacity (Mb).
    pub tol_constraint: f64,
    /// Projected-gradient stopping threshold.
    pub tol_grad: f64,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    pub smoothing_eps: f64,
    /// Entries within this distance of 0 or 1 count as integral.
    pub fractional_tol: f64,
    /// Move relaxed solutions to a vertex of the caching polytope.
    pub purify: bool,
    /// Greedy rate increment (Mbps); `None` uses `1/(T_d·n)`.
    pub step_override: Option<f64>,
    /// Cap on adopted greedy increments; `None` uses the sum of per-file step ranges.
    pub max_greedy_steps: Option<u64>,
    /// ECST fixed rate as a fraction of each file's `[r_min, r_max]` range.
    pub ecst_rate_fraction: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            n_starts: 16,
            branch_starts: 1,
            seed: 0,
            tol_constraint: 1e-6,
            tol_grad: 1e-6,
            max_inner_iters: 10_000,
            max_outer_iters: 30,
            smoothing_eps: 1e-9,
            fractional_tol: 1e-6,
            purify: true,
            step_override: None,
            max_greedy_steps: None,
            ecst_rate_fraction: 0.0,
        }
    }
}

impl SolverOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(Error::invalid("n_starts", "must be at least 1"));
        }
        if self.branch_starts == 0 {
            return Err(Error::invalid("branch_starts", "must be at least 1"));
        }
        for (field, v) in [
            ("tol_constraint", self.tol_constraint),
            ("tol_grad", self.tol_grad),
            ("smoothing_eps", self.smoothing_eps),
            ("fractional_tol", self.fractional_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(field, format!("must be positive, got {v}")));
            }
        }
        if self.max_inner_iters == 0 || self.max_outer_iters == 0 {
            return Err(Error::invalid(
                "max_inner_iters",
                "iteration caps must be positive",
            ));
        }
        if let Some(step) = self.step_override {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::invalid(
                    "step_override",
                    format!("must be positive, got {step}"),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.ecst_rate_fraction) {
            return Err(Error::invalid(
                "ecst_rate_fraction",
                format!("must lie in [0, 1], got {}", self.ecst_rate_fraction),
            ));
        }
        Ok(())
    }
}
