//! Greedy EC-VE: cache once at minimum rates, then raise one file's rate at a
//! time by a fixed step while the placement stays frozen.

use crate::baselines::equal_count_placement;
use crate::bnb::{placement_from, run_bnb};
use crate::catalog::{EncodingPlan, Placement, Scenario};
use crate::error::{Error, Result};
use crate::options::SolverOptions;
use crate::qoe::{
    check_feasibility, latency_penalty, min_secure_packets, objective, quality_at_rate,
    FEASIBILITY_TOL,
};
use crate::relaxed::RelaxedProblem;
use crate::solution::{Counters, Scheme, SolveResult};

/// Placement found at fixed rates together with the work spent on it.
#[derive(Clone, Debug)]
pub struct FixedRateCaching {
    /// `None` when no secure placement fits.
    pub placement: Option<Placement>,
    pub counters: Counters,
}

fn check_rates(scenario: &Scenario<f64>, rates: &[f64]) -> Result<()> {
    if rates.len() != scenario.num_files() {
        return Err(Error::DimensionMismatch(format!(
            "{} rates for {} files",
            rates.len(),
            scenario.num_files()
        )));
    }
    for (file, &r) in scenario.files.iter().zip(rates) {
        if !(r >= file.r_min - FEASIBILITY_TOL && r <= file.r_max + FEASIBILITY_TOL) {
            return Err(Error::invalid(
                "rates",
                format!(
                    "rate {r} of file {} outside [{}, {}]",
                    file.index, file.r_min, file.r_max
                ),
            ));
        }
    }
    Ok(())
}

/// Secrecy minimum packed first-fit (largest packets first), then single
/// packets added by best penalty reduction per Mb while any server has room.
fn count_fill(scenario: &Scenario<f64>, rates: &[f64]) -> Result<Option<Placement>> {
    let (n, f_count) = (scenario.packets, scenario.num_files());
    let size: Vec<f64> = rates
        .iter()
        .map(|r| r * scenario.duration / n as f64)
        .collect();
    let mut room = scenario.capacities.clone();
    let mut placement = Placement::empty_for(scenario);
    let mut cached = vec![0usize; f_count];
    let mut place = |j: usize, room: &mut [f64], cached: &mut [usize]| -> bool {
        match room
            .iter()
            .position(|&left| left + FEASIBILITY_TOL >= size[j])
        {
            Some(k) => {
                room[k] -= size[j];
                placement.set(k, cached[j], j, true);
                cached[j] += 1;
                true
            }
            None => false,
        }
    };

    let mut order: Vec<usize> = (0..f_count).collect();
    order.sort_by(|&a, &b| size[b].total_cmp(&size[a]).then(a.cmp(&b)));
    for &j in &order {
        for _ in 0..min_secure_packets(n, scenario.file(j).requests)? {
            if !place(j, &mut room, &mut cached) {
                return Ok(None);
            }
        }
    }
    let penalty = |j: usize, c: usize| {
        latency_penalty(
            scenario.file(j),
            (n - c) as f64 * size[j],
            scenario.backhaul_rate,
        )
    };
    loop {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..f_count {
            if cached[j] >= n
                || size[j] <= 0.0
                || !room.iter().any(|&left| left + FEASIBILITY_TOL >= size[j])
            {
                continue;
            }
            let ratio = (penalty(j, cached[j]) - penalty(j, cached[j] + 1)) / size[j];
            if ratio > 0.0 && best.is_none_or(|(_, r)| ratio > r) {
                best = Some((j, ratio));
            }
        }
        match best {
            Some((j, _)) => {
                place(j, &mut room, &mut cached);
            }
            None => break,
        }
    }
    Ok(Some(placement))
}

/// Integral placement minimising the total latency penalty at equal packet
/// sizes `r_j·T_d/n`. The branching result competes with two constructive
/// placements; the best certified one wins, branching first on ties.
pub fn solve_caching_fixed_rates(
    scenario: &Scenario<f64>,
    rates: &[f64],
    options: &SolverOptions,
) -> Result<FixedRateCaching> {
    check_rates(scenario, rates)?;
    let problem = RelaxedProblem::with_fixed_rates(scenario, rates, options)?;
    let mut counters = Counters {
        dimension: problem.dimension(),
        ..Counters::default()
    };
    let n = scenario.packets;
    let mut secure_volume = 0.0;
    for (file, &r) in scenario.files.iter().zip(rates) {
        secure_volume +=
            min_secure_packets(n, file.requests)? as f64 * r * scenario.duration / n as f64;
    }
    if secure_volume > scenario.total_capacity() + FEASIBILITY_TOL {
        return Ok(FixedRateCaching {
            placement: None,
            counters,
        });
    }
    let run = run_bnb(&problem, scenario, options)?;
    counters.relaxed_solves = run.state.relaxed_solves;
    counters.branch_steps = run.state.iteration as u64;
    counters.branches = run.state.branches;
    counters.inner_iterations = run.state.inner_iterations;

    let plan = EncodingPlan::equal_split(scenario, rates)?;
    let candidates = [
        run.polished.as_ref().map(placement_from),
        count_fill(scenario, rates)?,
        equal_count_placement(scenario, rates)?,
    ];
    let mut best: Option<(Placement, f64)> = None;
    for p in candidates.into_iter().flatten() {
        if !check_feasibility(scenario, &p, &plan)?.is_feasible() {
            continue;
        }
        let q = objective(scenario, &p, &plan)?.total;
        if best.as_ref().is_none_or(|(_, b)| q > *b) {
            best = Some((p, q));
        }
    }
    Ok(FixedRateCaching {
        placement: best.map(|(p, _)| p),
        counters,
    })
}

/// Per-file state of the rate-stepping loop.
struct FileState {
    steps: u64,
    max_steps: u64,
    /// Cached packets of this file on each server.
    per_server: Vec<usize>,
    cached: usize,
    qoe: f64,
}

/// Greedy rate stepping on top of [`solve_caching_fixed_rates`] at `r_min`.
pub fn solve_greedy_ec_ve(
    scenario: &Scenario<f64>,
    options: &SolverOptions,
) -> Result<SolveResult> {
    options.validate()?;
    let n = scenario.packets;
    let duration = scenario.duration;
    let step = options.step_override.unwrap_or(1.0 / (duration * n as f64));
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid(
            "step",
            format!("must be positive, got {step}"),
        ));
    }
    let min_rates: Vec<f64> = scenario.files.iter().map(|f| f.r_min).collect();
    let caching = solve_caching_fixed_rates(scenario, &min_rates, options)?;
    let mut counters = Counters {
        dimension: scenario.placement_len(),
        step_mbps: step,
        ..caching.counters
    };
    let Some(placement) = caching.placement else {
        return Ok(SolveResult::infeasible(
            Scheme::GreedyEcVe,
            scenario,
            counters,
        ));
    };

    let k_count = scenario.num_servers();
    let rate_of = |j: usize, steps: u64| {
        let f = scenario.file(j);
        (f.r_min + steps as f64 * step).min(f.r_max)
    };
    let file_qoe = |j: usize, rate: f64, cached: usize| {
        let f = scenario.file(j);
        let uncached = (n - cached) as f64 * rate * duration / n as f64;
        quality_at_rate(f, rate) - latency_penalty(f, uncached, scenario.backhaul_rate)
    };
    let mut files: Vec<FileState> = scenario
        .files
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let per_server: Vec<usize> =
                (0..k_count).map(|k| placement.server_count(k, j)).collect();
            let cached = per_server.iter().sum();
            FileState {
                steps: 0,
                max_steps: ((f.r_max - f.r_min) / step + 1e-9).floor() as u64,
                per_server,
                cached,
                qoe: file_qoe(j, f.r_min, cached),
            }
        })
        .collect();
    let usage_of = |files: &[FileState]| -> Vec<f64> {
        (0..k_count)
            .map(|k| {
                files
                    .iter()
                    .enumerate()
                    .map(|(j, st)| {
                        st.per_server[k] as f64 * rate_of(j, st.steps) * duration / n as f64
                    })
                    .sum()
            })
            .collect()
    };
    let step_cap = options
        .max_greedy_steps
        .unwrap_or_else(|| files.iter().map(|st| st.max_steps).sum());
    let mut usage = usage_of(&files);

    while counters.greedy_steps < step_cap {
        counters.greedy_passes += 1;
        let mut best: Option<(usize, f64, f64)> = None;
        for (j, st) in files.iter().enumerate() {
            if st.steps >= st.max_steps {
                continue;
            }
            counters.greedy_evaluations += 1;
            let old_rate = rate_of(j, st.steps);
            let new_rate = rate_of(j, st.steps + 1);
            let grows = (new_rate - old_rate) * duration / n as f64;
            let fits = (0..k_count).all(|k| {
                usage[k] + st.per_server[k] as f64 * grows
                    <= scenario.capacities[k] + FEASIBILITY_TOL
            });
            if !fits {
                continue;
            }
            let qoe = file_qoe(j, new_rate, st.cached);
            let gain = qoe - st.qoe;
            if gain > 0.0 && best.is_none_or(|(_, g, _)| gain > g) {
                best = Some((j, gain, qoe));
            }
        }
        let Some((j, _, qoe)) = best else {
            break;
        };
        files[j].steps += 1;
        files[j].qoe = qoe;
        usage = usage_of(&files);
        counters.greedy_steps += 1;
    }

    let rates: Vec<f64> = files
        .iter()
        .enumerate()
        .map(|(j, st)| rate_of(j, st.steps))
        .collect();
    let plan = EncodingPlan::equal_split(scenario, &rates)?;
    SolveResult::evaluate(Scheme::GreedyEcVe, scenario, placement, plan, counters)
}
