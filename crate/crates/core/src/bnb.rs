//! EC-VE: iterative 0/1 branching on fractional caching weights.
//!
//! Every step solves both sub-relaxations (weight pinned to 0 and to 1) for
//! every fractional entry and adopts the single best one. There is no
//! backtracking; the loop ends once the relaxed placement is integral.

use rayon::prelude::*;

use crate::catalog::{Placement, Scenario};
use crate::error::Result;
use crate::options::SolverOptions;
use crate::relaxed::{fractional_entries, PinSet, RelaxedProblem, RelaxedSolution};
use crate::solution::{Counters, Scheme, SolveResult};

/// Objectives closer than this are treated as equal when picking a branch.
const TIE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct BnbState {
    pub pins: PinSet,
    pub current: RelaxedSolution,
    /// Fractional entries `(k, i, j)` of `current`; its length is `N_b`.
    pub fractional: Vec<(usize, usize, usize)>,
    /// Completed branch steps.
    pub iteration: usize,
    pub relaxed_solves: u64,
    pub branches: u64,
    pub inner_iterations: u64,
    /// Set when every branch of some step was infeasible.
    pub infeasible: bool,
}

impl BnbState {
    pub fn root(current: RelaxedSolution, options: &SolverOptions) -> Self {
        let fractional = fractional_entries(&current, options.fractional_tol);
        let infeasible = !current.is_feasible();
        BnbState {
            pins: PinSet::new(),
            inner_iterations: current.inner_iterations,
            current,
            fractional,
            iteration: 0,
            relaxed_solves: 1,
            branches: 0,
            infeasible,
        }
    }

    pub fn n_b(&self) -> usize {
        self.fractional.len()
    }
}

/// Solves the `2·N_b` sub-relaxations and adopts the best branch.
pub fn branch_step(
    state: BnbState,
    problem: &RelaxedProblem<'_>,
    options: &SolverOptions,
) -> Result<BnbState> {
    if state.fractional.is_empty() || state.infeasible {
        return Ok(state);
    }
    let candidates: Vec<((usize, usize, usize), bool)> = state
        .fractional
        .iter()
        .flat_map(|&e| [(e, false), (e, true)])
        .collect();
    let solved: Vec<(PinSet, RelaxedSolution)> = candidates
        .par_iter()
        .map(|&((k, i, j), value)| {
            let pins = state.pins.with(k, i, j, value)?;
            let sol = problem.solve(&pins, Some(&state.current), options.branch_starts)?;
            Ok((pins, sol))
        })
        .collect::<Result<_>>()?;

    let mut next = state;
    next.relaxed_solves += solved.len() as u64;
    next.branches += solved.len() as u64;
    next.inner_iterations += solved.iter().map(|(_, s)| s.inner_iterations).sum::<u64>();
    next.iteration += 1;

    let score = |s: &RelaxedSolution| {
        if s.is_feasible() {
            s.objective
        } else {
            f64::INFINITY
        }
    };
    let mut best: Option<usize> = None;
    for (idx, (_, sol)) in solved.iter().enumerate() {
        let value = score(sol);
        if value.is_infinite() {
            continue;
        }
        match best {
            Some(b) if value >= score(&solved[b].1) - TIE_TOL => {}
            _ => best = Some(idx),
        }
    }
    match best {
        Some(b) => {
            let (pins, sol) = solved.into_iter().nth(b).expect("index in range");
            next.fractional = fractional_entries(&sol, options.fractional_tol);
            next.pins = pins;
            next.current = sol;
        }
        None => next.infeasible = true,
    }
    Ok(next)
}

/// Outcome of the branching loop before conversion into a [`SolveResult`].
pub(crate) struct BnbRun {
    pub state: BnbState,
    pub root_objective: f64,
    /// Relaxed solve with every weight pinned to its final 0/1 value.
    pub polished: Option<RelaxedSolution>,
}

pub(crate) fn run_bnb(
    problem: &RelaxedProblem<'_>,
    scenario: &Scenario<f64>,
    options: &SolverOptions,
) -> Result<BnbRun> {
    let root = problem.solve(&PinSet::new(), None, options.n_starts)?;
    let root_objective = root.objective;
    let mut state = BnbState::root(root, options);
    let cap = scenario.placement_len();
    while !state.infeasible && state.n_b() > 0 && state.iteration < cap {
        state = branch_step(state, problem, options)?;
    }
    if state.infeasible {
        return Ok(BnbRun {
            state,
            root_objective,
            polished: None,
        });
    }
    let w = &state.current.weights;
    let mut pins = PinSet::new();
    for j in 0..w.files {
        for i in 0..w.packets {
            for k in 0..w.servers {
                let m = w.values[(j * w.packets + i) * w.servers + k];
                pins.insert(k, i, j, m >= 0.5)?;
            }
        }
    }
    let polished = problem.solve(&pins, Some(&state.current), options.branch_starts)?;
    state.relaxed_solves += 1;
    state.inner_iterations += polished.inner_iterations;
    Ok(BnbRun {
        polished: polished.is_feasible().then_some(polished),
        state,
        root_objective,
    })
}

pub(crate) fn placement_from(sol: &RelaxedSolution) -> Placement {
    let w = &sol.weights;
    let flags = w.values.iter().map(|&m| m >= 0.5).collect();
    Placement::from_flags(w.servers, w.packets, w.files, flags).expect("shape taken from solution")
}

/// Runs the full branching scheme and evaluates the integral result.
pub fn solve_ec_ve(scenario: &Scenario<f64>, options: &SolverOptions) -> Result<SolveResult> {
    let problem = RelaxedProblem::new(scenario, options)?;
    let run = run_bnb(&problem, scenario, options)?;
    let counters = Counters {
        dimension: problem.dimension(),
        relaxed_solves: run.state.relaxed_solves,
        branch_steps: run.state.iteration as u64,
        branches: run.state.branches,
        inner_iterations: run.state.inner_iterations,
        ..Counters::default()
    };
    let Some(polished) = run.polished else {
        return Ok(SolveResult::infeasible(Scheme::EcVe, scenario, counters));
    };
    let mut result = SolveResult::evaluate(
        Scheme::EcVe,
        scenario,
        placement_from(&polished),
        polished.plan.clone(),
        counters,
    )?;
    result.relaxation_bound = Some(-run.root_objective);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_scenario, ScenarioConfig};
    use crate::qoe::min_secure_packets;

    fn small(capacity: f64, n: usize, requests: f64) -> Scenario<f64> {
        let mut cfg = ScenarioConfig::reference_catalog(capacity);
        cfg.n = n;
        cfg.total_requests = requests;
        build_scenario(&cfg).unwrap()
    }

    fn quick() -> SolverOptions {
        SolverOptions {
            n_starts: 4,
            ..SolverOptions::default()
        }
    }

    #[test]
    fn no_fractional_entries_is_a_no_op() {
        let s = small(1.0e6, 4, 20.0);
        let problem = RelaxedProblem::new(&s, &quick()).unwrap();
        let root = problem.solve(&PinSet::new(), None, 2).unwrap();
        let mut state = BnbState::root(root, &quick());
        state.fractional.clear();
        let next = branch_step(state.clone(), &problem, &quick()).unwrap();
        assert_eq!(next.iteration, 0);
        assert_eq!(next.relaxed_solves, state.relaxed_solves);
    }

    #[test]
    fn ample_capacity_caches_everything_at_max_rate() {
        let s = small(69_660.0, 4, 100.0);
        let r = solve_ec_ve(&s, &quick()).unwrap();
        assert!(r.is_feasible());
        assert!(r.placement.as_slice().iter().all(|&c| c));
        assert!((r.mean_mos().unwrap() - 4.14422).abs() < 1e-4);
        assert_eq!(r.counters.dimension, 2 * 4 * 8);
    }

    #[test]
    fn secrecy_beyond_capacity_is_infeasible() {
        // two of two packets must be cached, so the whole file (720 Mb at r_min) must fit
        let mut cfg = ScenarioConfig::reference_catalog(700.0);
        cfg.num_files = 1;
        cfg.n = 2;
        cfg.classes.truncate(1);
        cfg.total_requests = 2.0;
        let s: Scenario<f64> = build_scenario(&cfg).unwrap();
        assert_eq!(min_secure_packets(2, 2.0).unwrap(), 2);
        let r = solve_ec_ve(&s, &quick()).unwrap();
        assert!(!r.is_feasible());
    }

    #[test]
    fn feasible_results_are_integral_and_secure() {
        let s = small(9_000.0, 4, 30.0);
        let r = solve_ec_ve(&s, &quick()).unwrap();
        assert!(r.is_feasible());
        let report = r.feasibility.as_ref().unwrap();
        assert!(report.binary_ok && report.is_feasible());
        for (j, f) in s.files.iter().enumerate() {
            assert!(r.placement.file_count(j) >= min_secure_packets(4, f.requests).unwrap());
        }
        assert!(r.counters.branch_steps as usize <= s.placement_len());
    }
}
