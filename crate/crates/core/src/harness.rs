//! Experiment plumbing: config files, scheme dispatch, parameter sweeps,
//! minimum secure capacity search and CSV output.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::baselines::{solve_ec_only, solve_ecst, solve_ve_only, RateRule};
use crate::bnb::solve_ec_ve;
use crate::catalog::{build_scenario, Scenario, ScenarioConfig};
use crate::error::{read_file, Error, Result};
use crate::greedy::solve_greedy_ec_ve;
use crate::options::SolverOptions;
use crate::oracle::oracle_solve;
use crate::solution::{Scheme, SolveResult, SolveStatus};

/// Grid used when the oracle is dispatched by name.
const ORACLE_GRID: usize = 11;
/// Bisection cap of [`min_capacity`].
const MAX_BISECTIONS: usize = 40;

fn parse_toml<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    let value: toml::Value = toml::from_str(text).map_err(|e| Error::Parse {
        what: what.to_string(),
        reason: e.to_string(),
    })?;
    serde_path_to_error::deserialize(value).map_err(|e| {
        let key = e.path().to_string();
        Error::Parse {
            what: what.to_string(),
            reason: format!("key `{key}`: {}", e.into_inner()),
        }
    })
}

/// A scenario with the solver options that go with it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl RunConfig {
    /// Parses a scenario file; an optional `[solver]` table carries options.
    pub fn parse(text: &str) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Parse {
            what: "config".into(),
            reason: e.to_string(),
        })?;
        let solver = match table.remove("solver") {
            Some(v) => parse_toml::<SolverOptions>(
                &toml::to_string(&v).unwrap_or_default(),
                "config [solver]",
            )?,
            None => SolverOptions::default(),
        };
        let scenario =
            parse_toml::<ScenarioConfig>(&toml::to_string(&table).unwrap_or_default(), "config")?;
        Ok(RunConfig { scenario, solver })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_file(path.as_ref())?)
    }

    pub fn build(&self) -> Result<Scenario<f64>> {
        build_scenario(&self.scenario)
    }
}

/// Runs one scheme with the given options.
pub fn solve_scheme(
    scenario: &Scenario<f64>,
    scheme: Scheme,
    options: &SolverOptions,
) -> Result<SolveResult> {
    options.validate()?;
    match scheme {
        Scheme::EcVe => solve_ec_ve(scenario, options),
        Scheme::GreedyEcVe => solve_greedy_ec_ve(scenario, options),
        Scheme::Ecst => {
            let rule = if options.ecst_rate_fraction == 0.0 {
                RateRule::Min
            } else {
                RateRule::Fraction(options.ecst_rate_fraction)
            };
            solve_ecst(scenario, rule)
        }
        Scheme::Ec => solve_ec_only(scenario, options),
        Scheme::Ve => solve_ve_only(scenario),
        Scheme::Oracle => oracle_solve(scenario, ORACLE_GRID),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Capacity,
    NumFiles,
    NumPackets,
    NumServers,
    TotalRequests,
    /// A single solve, not a sweep.
    Point,
}

/// A parameter sweep over one axis for a list of schemes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub scenario: ScenarioConfig,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Option overrides per scheme, replacing `solver` for that scheme.
    #[serde(default)]
    pub scheme_options: BTreeMap<Scheme, SolverOptions>,
    /// Per-point capacity vectors for the `num_servers` axis.
    #[serde(default)]
    pub capacities: Option<Vec<Vec<f64>>>,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: SweepSpec = parse_toml(text, "sweep spec")?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_file(path.as_ref())?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid(
                "values",
                "at least one axis value is required",
            ));
        }
        if self.values.iter().any(|v| !(v.is_finite() && *v > 0.0)) && self.axis != Axis::Point {
            return Err(Error::invalid("values", "axis values must be positive"));
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "values",
                "axis values must be strictly increasing",
            ));
        }
        if self.schemes.is_empty() {
            return Err(Error::invalid("schemes", "at least one scheme is required"));
        }
        let integral = matches!(
            self.axis,
            Axis::NumFiles | Axis::NumPackets | Axis::NumServers
        );
        if integral && self.values.iter().any(|v| v.fract() != 0.0) {
            return Err(Error::invalid("values", "this axis takes whole numbers"));
        }
        if self.axis == Axis::NumServers {
            let caps = self
                .capacities
                .as_ref()
                .ok_or_else(|| Error::invalid("capacities", "required for the num_servers axis"))?;
            if caps.len() != self.values.len() {
                return Err(Error::invalid(
                    "capacities",
                    "one capacity vector per axis value",
                ));
            }
            for (v, c) in self.values.iter().zip(caps) {
                if c.len() != *v as usize {
                    return Err(Error::invalid(
                        "capacities",
                        format!("{} capacities for K = {v}", c.len()),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Scenario config at the `idx`-th axis value.
    pub fn config_at(&self, idx: usize) -> ScenarioConfig {
        let v = self.values[idx];
        let base = &self.scenario;
        match self.axis {
            Axis::Capacity => {
                let k = base.num_servers.max(1);
                let mut c = base.clone();
                c.capacities_mb = vec![v; k];
                c
            }
            Axis::NumFiles => base.with_num_files(v as usize),
            Axis::NumPackets => ScenarioConfig {
                n: v as usize,
                ..base.clone()
            },
            Axis::NumServers => base.with_capacities(
                self.capacities
                    .as_ref()
                    .map(|c| c[idx].clone())
                    .unwrap_or_default(),
            ),
            Axis::TotalRequests => ScenarioConfig {
                total_requests: v,
                ..base.clone()
            },
            Axis::Point => base.clone(),
        }
    }

    pub fn options_for(&self, scheme: Scheme) -> &SolverOptions {
        self.scheme_options.get(&scheme).unwrap_or(&self.solver)
    }
}

/// Rounds to six significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// One CSV line of a sweep. Floats are stored already rounded to six
/// significant digits so that a written table parses back to equal rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub axis: Axis,
    pub value: f64,
    pub scheme: Scheme,
    pub status: SolveStatus,
    pub mean_mos: Option<f64>,
    pub q_total: Option<f64>,
    pub latency_s: Option<f64>,
    pub dimension: usize,
    pub relaxed_solves: u64,
    pub branches: u64,
    pub greedy_steps: u64,
    pub greedy_evaluations: u64,
    pub step_mbps: f64,
}

impl ResultRow {
    pub fn new(axis: Axis, value: f64, scenario: &Scenario<f64>, result: &SolveResult) -> Self {
        let c = &result.counters;
        ResultRow {
            axis,
            value: round_sig(value),
            scheme: result.scheme,
            status: result.status,
            mean_mos: result.mean_mos().map(round_sig),
            q_total: result.q().map(round_sig),
            latency_s: result.latency(scenario).map(round_sig),
            dimension: c.dimension,
            relaxed_solves: c.relaxed_solves,
            branches: c.branches,
            greedy_steps: c.greedy_steps,
            greedy_evaluations: c.greedy_evaluations,
            step_mbps: round_sig(c.step_mbps),
        }
    }
}

/// Solves every `(axis value, scheme)` pair; rows are ordered by axis value,
/// then scheme name.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let jobs: Vec<(usize, Scheme)> = (0..spec.values.len())
        .flat_map(|i| spec.schemes.iter().map(move |&s| (i, s)))
        .collect();
    let mut rows = jobs
        .par_iter()
        .map(|&(idx, scheme)| {
            let scenario: Scenario<f64> = build_scenario(&spec.config_at(idx))?;
            let result = solve_scheme(&scenario, scheme, spec.options_for(scheme))?;
            Ok(ResultRow::new(
                spec.axis,
                spec.values[idx],
                &scenario,
                &result,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.scheme.name().cmp(b.scheme.name()))
    });
    Ok(rows)
}

/// Smallest capacity (a multiple of `resolution`, the same on every server)
/// at which `scheme` is feasible; `None` if infeasible even at twice the
/// all-maximum-rate catalog volume.
pub fn min_capacity(
    template: &ScenarioConfig,
    scheme: Scheme,
    resolution: f64,
    options: &SolverOptions,
) -> Result<Option<f64>> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::invalid("resolution", "must be positive"));
    }
    let k = template.num_servers.max(1);
    let feasible = |steps: u64| -> Result<bool> {
        let mut cfg = template.clone();
        cfg.capacities_mb = vec![steps as f64 * resolution; k];
        let scenario: Scenario<f64> = build_scenario(&cfg)?;
        Ok(solve_scheme(&scenario, scheme, options)?.is_feasible())
    };
    let probe: Scenario<f64> = build_scenario(template)?;
    let upper = 2.0 * probe.max_catalog_volume();
    let mut hi = (upper / resolution).ceil() as u64;
    if !feasible(hi)? {
        return Ok(None);
    }
    if feasible(0)? {
        return Ok(Some(0.0));
    }
    let mut lo = 0;
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= 1 {
            break;
        }
        let mid = lo + (hi - lo) / 2;
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi as f64 * resolution))
}

/// One line of a minimum-capacity table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub scheme: Scheme,
    pub total_requests: f64,
    pub resolution_mb: f64,
    pub status: SolveStatus,
    pub min_capacity_mb: Option<f64>,
}

impl CapacityRow {
    pub fn new(
        scheme: Scheme,
        total_requests: f64,
        resolution_mb: f64,
        found: Option<f64>,
    ) -> Self {
        CapacityRow {
            scheme,
            total_requests: round_sig(total_requests),
            resolution_mb: round_sig(resolution_mb),
            status: if found.is_some() {
                SolveStatus::Feasible
            } else {
                SolveStatus::Infeasible
            },
            min_capacity_mb: found.map(round_sig),
        }
    }
}

pub fn write_csv<R: Serialize, W: Write>(rows: &[R], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: DeserializeOwned, I: Read>(input: I) -> Result<Vec<R>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn to_csv_string<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse {
        what: "csv".into(),
        reason: e.to_string(),
    })
}
