use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{EncodingPlan, Placement, Scenario};
use crate::error::{Error, Result};
use crate::qoe::{
    check_feasibility, objective, transfer_latency, FeasibilityReport, ObjectiveBreakdown,
};

/// Solution schemes exposed to the harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "ec-ve")]
    EcVe,
    #[serde(rename = "greedy-ec-ve")]
    GreedyEcVe,
    #[serde(rename = "ecst")]
    Ecst,
    #[serde(rename = "ec")]
    Ec,
    #[serde(rename = "ve")]
    Ve,
    #[serde(rename = "oracle")]
    Oracle,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::EcVe,
        Scheme::GreedyEcVe,
        Scheme::Ecst,
        Scheme::Ec,
        Scheme::Ve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::EcVe => "ec-ve",
            Scheme::GreedyEcVe => "greedy-ec-ve",
            Scheme::Ecst => "ecst",
            Scheme::Ec => "ec",
            Scheme::Ve => "ve",
            Scheme::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .chain([Scheme::Oracle])
            .find(|sch| sch.name() == s)
            .ok_or_else(|| {
                Error::invalid(
                    "scheme",
                    format!(
                        "unknown scheme `{s}`; expected one of ec-ve, greedy-ec-ve, ecst, ec, ve"
                    ),
                )
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Feasible,
    Infeasible,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
        })
    }
}

/// Work counters. Fields that do not apply to a scheme stay zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    /// Continuous variables of one relaxed solve.
    pub dimension: usize,
    pub relaxed_solves: u64,
    pub branch_steps: u64,
    pub branches: u64,
    pub greedy_steps: u64,
    pub greedy_passes: u64,
    pub greedy_evaluations: u64,
    pub inner_iterations: u64,
    pub enumerated: u64,
    /// Greedy rate increment actually used (Mbps).
    pub step_mbps: f64,
}

/// Output of every scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub scheme: Scheme,
    pub status: SolveStatus,
    pub placement: Placement,
    pub plan: EncodingPlan<f64>,
    /// Present only for feasible results.
    pub breakdown: Option<ObjectiveBreakdown<f64>>,
    pub feasibility: Option<FeasibilityReport<f64>>,
    /// Root relaxation value in the maximisation sense (EC-VE only).
    pub relaxation_bound: Option<f64>,
    pub counters: Counters,
}

impl SolveResult {
    /// Evaluates a candidate and downgrades it to infeasible if any check fails.
    pub(crate) fn evaluate(
        scheme: Scheme,
        scenario: &Scenario<f64>,
        placement: Placement,
        plan: EncodingPlan<f64>,
        counters: Counters,
    ) -> Result<Self> {
        let report = check_feasibility(scenario, &placement, &plan)?;
        let breakdown = objective(scenario, &placement, &plan)?;
        let status = if report.is_feasible() {
            SolveStatus::Feasible
        } else {
            SolveStatus::Infeasible
        };
        Ok(SolveResult {
            scheme,
            status,
            placement,
            plan,
            breakdown: (status == SolveStatus::Feasible).then_some(breakdown),
            feasibility: Some(report),
            relaxation_bound: None,
            counters,
        })
    }

    pub(crate) fn infeasible(scheme: Scheme, scenario: &Scenario<f64>, counters: Counters) -> Self {
        SolveResult {
            scheme,
            status: SolveStatus::Infeasible,
            placement: Placement::empty_for(scenario),
            plan: EncodingPlan::at_min_rates(scenario),
            breakdown: None,
            feasibility: None,
            relaxation_bound: None,
            counters,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == SolveStatus::Feasible
    }

    /// `Q` in the maximisation sense.
    pub fn q(&self) -> Option<f64> {
        self.breakdown.as_ref().map(|b| b.total)
    }

    /// `Q_min = −Q`.
    pub fn q_min(&self) -> Option<f64> {
        self.q().map(|q| -q)
    }

    pub fn mean_mos(&self) -> Option<f64> {
        self.breakdown.as_ref().map(|b| b.mean_mos)
    }

    pub fn rates(&self, scenario: &Scenario<f64>) -> Vec<f64> {
        self.plan.rates(scenario.duration)
    }

    /// Popularity-weighted backhaul transfer time (s), feasible results only.
    pub fn latency(&self, scenario: &Scenario<f64>) -> Option<f64> {
        self.is_feasible()
            .then(|| transfer_latency(scenario, &self.placement, &self.plan))
    }
}
