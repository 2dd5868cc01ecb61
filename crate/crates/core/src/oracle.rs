//! Exhaustive solver for tiny instances.
//!
//! Every binary placement is combined with every point of a per-file uniform
//! rate grid. [`SplitMode::Equal`] gives all packets of a file the same size;
//! [`SplitMode::Optimal`] (one server only) instead picks the best split of
//! each file between its cached and uncached packets, which is what free
//! packet sizes allow.

use rayon::prelude::*;

use crate::catalog::{EncodingPlan, Placement, Scenario};
use crate::error::{Error, Result};
use crate::qoe::{latency_penalty, min_secure_packets, quality_at_rate, FEASIBILITY_TOL};
use crate::solution::{Counters, Scheme, SolveResult};

/// Largest `K·n·F` the oracle accepts.
pub const MAX_PLACEMENT_BITS: usize = 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SplitMode {
    #[default]
    Equal,
    Optimal,
}

/// Grid rates of one file: `points` values evenly spaced on `[r_min, r_max]`.
pub fn rate_grid(r_min: f64, r_max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![r_min];
    }
    (0..points)
        .map(|t| r_min + (r_max - r_min) * t as f64 / (points - 1) as f64)
        .collect()
}

/// Best candidate of one placement: `(Q, rate indices, cached volume per file)`.
type Candidate = (f64, Vec<usize>, Vec<f64>);

struct Lattice<'a> {
    scenario: &'a Scenario<f64>,
    grids: Vec<Vec<f64>>,
    mode: SplitMode,
}

impl Lattice<'_> {
    fn decode(&self, bits: u64) -> Placement {
        let s = self.scenario;
        let flags = (0..s.placement_len()).map(|b| bits >> b & 1 == 1).collect();
        Placement::from_flags(s.num_servers(), s.packets, s.num_files(), flags)
            .expect("shape from scenario")
    }

    /// Best rate combination for one placement, `None` if nothing is feasible.
    fn best_for(&self, placement: &Placement) -> Option<Candidate> {
        let s = self.scenario;
        let (k_count, n, f_count) = (s.num_servers(), s.packets, s.num_files());
        for j in 0..f_count {
            for i in 0..n {
                if (0..k_count).filter(|&k| placement.get(k, i, j)).count() > 1 {
                    return None;
                }
            }
            let need = min_secure_packets(n, s.files[j].requests).ok()?;
            if placement.file_count(j) < need {
                return None;
            }
        }
        let counts: Vec<Vec<usize>> = (0..f_count)
            .map(|j| (0..k_count).map(|k| placement.server_count(k, j)).collect())
            .collect();
        let mut idx = vec![0usize; f_count];
        let mut best: Option<Candidate> = None;
        loop {
            let rates: Vec<f64> = idx
                .iter()
                .enumerate()
                .map(|(j, &t)| self.grids[j][t])
                .collect();
            let scored = match self.mode {
                SplitMode::Equal => self.equal_split(&counts, &rates),
                SplitMode::Optimal => self.optimal_split(&counts, &rates),
            };
            if let Some((q, cached)) = scored {
                if best.as_ref().is_none_or(|b| q > b.0) {
                    best = Some((q, idx.clone(), cached));
                }
            }
            // odometer over grid indices, last file fastest
            let mut pos = f_count;
            loop {
                if pos == 0 {
                    return best;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < self.grids[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }

    fn equal_split(&self, counts: &[Vec<usize>], rates: &[f64]) -> Option<(f64, Vec<f64>)> {
        let s = self.scenario;
        let n = s.packets as f64;
        let mut used = vec![0.0; s.num_servers()];
        let mut q = 0.0;
        let mut cached_volume = Vec::with_capacity(rates.len());
        for (j, file) in s.files.iter().enumerate() {
            let size = rates[j] * s.duration / n;
            let cached: usize = counts[j].iter().sum();
            for (u, &c) in used.iter_mut().zip(&counts[j]) {
                *u += c as f64 * size;
            }
            let uncached = (s.packets - cached) as f64 * size;
            q += quality_at_rate(file, rates[j]) - latency_penalty(file, uncached, s.backhaul_rate);
            cached_volume.push(cached as f64 * size);
        }
        let fits = used
            .iter()
            .zip(&s.capacities)
            .all(|(u, c)| *u <= c + FEASIBILITY_TOL);
        fits.then_some((q, cached_volume))
    }

    /// One server: each file's cached volume ranges over `[0, V_j]` when some
    /// but not all packets are cached. The penalty is concave in that volume,
    /// so the best split is a vertex of the box cut by the capacity.
    fn optimal_split(&self, counts: &[Vec<usize>], rates: &[f64]) -> Option<(f64, Vec<f64>)> {
        let s = self.scenario;
        let f_count = s.num_files();
        let cap = s.capacities[0];
        let volume: Vec<f64> = rates.iter().map(|r| r * s.duration).collect();
        let bounds: Vec<(f64, f64)> = (0..f_count)
            .map(|j| match counts[j][0] {
                0 => (0.0, 0.0),
                c if c == s.packets => (volume[j], volume[j]),
                _ => (0.0, volume[j]),
            })
            .collect();
        let quality: f64 = s
            .files
            .iter()
            .zip(rates)
            .map(|(f, &r)| quality_at_rate(f, r))
            .sum();
        let score = |cached: &[f64]| -> f64 {
            quality
                - s.files
                    .iter()
                    .enumerate()
                    .map(|(j, f)| latency_penalty(f, volume[j] - cached[j], s.backhaul_rate))
                    .sum::<f64>()
        };
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut consider = |cached: Vec<f64>| {
            if cached.iter().sum::<f64>() > cap + FEASIBILITY_TOL {
                return;
            }
            let q = score(&cached);
            if best.as_ref().is_none_or(|b| q > b.0) {
                best = Some((q, cached));
            }
        };
        for mask in 0..1u64 << f_count {
            let corner: Vec<f64> = (0..f_count)
                .map(|j| {
                    if mask >> j & 1 == 1 {
                        bounds[j].1
                    } else {
                        bounds[j].0
                    }
                })
                .collect();
            consider(corner.clone());
            for free in 0..f_count {
                let rest: f64 = corner
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != free)
                    .map(|(_, v)| v)
                    .sum();
                let fill = cap - rest;
                if fill > bounds[free].0 && fill < bounds[free].1 {
                    let mut point = corner.clone();
                    point[free] = fill;
                    consider(point);
                }
            }
        }
        best
    }

    /// Packet sizes realising a file's rate and cached volume.
    fn plan(
        &self,
        placement: &Placement,
        rates: &[f64],
        cached: &[f64],
    ) -> Result<EncodingPlan<f64>> {
        let s = self.scenario;
        if self.mode == SplitMode::Equal {
            return EncodingPlan::equal_split(s, rates);
        }
        let n = s.packets;
        let mut sizes = vec![0.0; n * s.num_files()];
        for j in 0..s.num_files() {
            let c = placement.file_count(j);
            let total = rates[j] * s.duration;
            for i in 0..n {
                sizes[j * n + i] = if placement.get(0, i, j) {
                    cached[j] / c as f64
                } else {
                    (total - cached[j]) / (n - c) as f64
                };
            }
        }
        EncodingPlan::from_sizes(n, s.num_files(), sizes)
    }
}

/// Global optimum over the equal-split lattice.
pub fn oracle_solve(scenario: &Scenario<f64>, rate_grid_points: usize) -> Result<SolveResult> {
    oracle_solve_with(scenario, rate_grid_points, SplitMode::Equal)
}

/// Global optimum over the lattice in the given split mode.
pub fn oracle_solve_with(
    scenario: &Scenario<f64>,
    rate_grid_points: usize,
    mode: SplitMode,
) -> Result<SolveResult> {
    scenario.validate()?;
    let bits = scenario.placement_len();
    if bits > MAX_PLACEMENT_BITS {
        return Err(Error::invalid(
            "scenario",
            format!("K·n·F = {bits} exceeds the enumeration budget of {MAX_PLACEMENT_BITS}"),
        ));
    }
    if rate_grid_points == 0 {
        return Err(Error::invalid("grid", "needs at least one point"));
    }
    if mode == SplitMode::Optimal && scenario.num_servers() != 1 {
        return Err(Error::invalid(
            "scenario",
            "optimal split mode needs exactly one server",
        ));
    }
    let f_count = scenario.num_files();
    let enumerated = (1u64 << bits)
        .checked_mul(
            (rate_grid_points as u64)
                .checked_pow(f_count as u32)
                .unwrap_or(u64::MAX),
        )
        .ok_or_else(|| Error::invalid("grid", "lattice size overflows"))?;
    let lattice = Lattice {
        scenario,
        grids: scenario
            .files
            .iter()
            .map(|f| rate_grid(f.r_min, f.r_max, rate_grid_points))
            .collect(),
        mode,
    };
    let counters = Counters {
        dimension: bits,
        enumerated,
        ..Counters::default()
    };
    let per_placement: Vec<Option<Candidate>> = (0..1u64 << bits)
        .into_par_iter()
        .map(|b| lattice.best_for(&lattice.decode(b)))
        .collect();
    let mut best: Option<(u64, Candidate)> = None;
    for (b, cand) in per_placement.into_iter().enumerate() {
        if let Some(c) = cand {
            if best.as_ref().is_none_or(|(_, prev)| c.0 > prev.0) {
                best = Some((b as u64, c));
            }
        }
    }
    let Some((bits_best, (_, idx, cached))) = best else {
        return Ok(SolveResult::infeasible(Scheme::Oracle, scenario, counters));
    };
    let placement = lattice.decode(bits_best);
    let rates: Vec<f64> = idx
        .iter()
        .enumerate()
        .map(|(j, &t)| lattice.grids[j][t])
        .collect();
    let plan = lattice.plan(&placement, &rates, &cached)?;
    SolveResult::evaluate(Scheme::Oracle, scenario, placement, plan, counters)
}

/// Moves every rate down to the nearest grid point at or below it, scaling the
/// file's packet sizes by the same factor, and re-evaluates the result.
/// Rates within `1e-9` of a grid point snap to that point.
pub fn snap_to_grid(
    scenario: &Scenario<f64>,
    result: &SolveResult,
    rate_grid_points: usize,
) -> Result<SolveResult> {
    if rate_grid_points == 0 {
        return Err(Error::invalid("grid", "needs at least one point"));
    }
    let n = scenario.packets;
    let mut sizes = result.plan.as_slice().to_vec();
    for (j, f) in scenario.files.iter().enumerate() {
        let rate = result.plan.rate(j, scenario.duration);
        let grid = rate_grid(f.r_min, f.r_max, rate_grid_points);
        let target = grid
            .iter()
            .rev()
            .find(|&&g| g <= rate + 1e-9)
            .copied()
            .unwrap_or(f.r_min);
        let scale = if rate > 0.0 { target / rate } else { 0.0 };
        let block = &mut sizes[j * n..(j + 1) * n];
        if scale > 0.0 {
            block.iter_mut().for_each(|s| *s *= scale);
        } else {
            block
                .iter_mut()
                .for_each(|s| *s = target * scenario.duration / n as f64);
        }
    }
    let plan = EncodingPlan::from_sizes(n, scenario.num_files(), sizes)?;
    let mut snapped = SolveResult::evaluate(
        result.scheme,
        scenario,
        result.placement.clone(),
        plan,
        result.counters.clone(),
    )?;
    snapped.relaxation_bound = result.relaxation_bound;
    Ok(snapped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_scenario, ScenarioConfig};

    fn tiny(capacity: f64, requests: f64) -> Scenario<f64> {
        let mut cfg = ScenarioConfig::reference_catalog(capacity);
        cfg.num_files = 1;
        cfg.n = 2;
        cfg.classes.truncate(1);
        cfg.total_requests = requests;
        build_scenario(&cfg).unwrap()
    }

    #[test]
    fn ample_capacity_caches_all_at_max_rate() {
        let s = tiny(1.0e6, 1.0);
        let r = oracle_solve(&s, 11).unwrap();
        assert!(r.is_feasible());
        assert!(r.placement.as_slice().iter().all(|&c| c));
        assert!((r.rates(&s)[0] - 0.7).abs() < 1e-12);
        assert_eq!(r.counters.enumerated, 4 * 11);
    }

    #[test]
    fn secrecy_beyond_one_packet_is_infeasible() {
        let s = tiny(300.0, 2.0);
        assert!(!oracle_solve(&s, 11).unwrap().is_feasible());
        assert!(!oracle_solve_with(&s, 11, SplitMode::Optimal)
            .unwrap()
            .is_feasible());
    }

    #[test]
    fn budget_refused() {
        let s: Scenario<f64> = build_scenario(&ScenarioConfig::reference_catalog(1.0)).unwrap();
        assert!(oracle_solve(&s, 2).is_err());
        assert!(oracle_solve(&tiny(1.0, 1.0), 0).is_err());
    }

    #[test]
    fn optimal_split_dominates_equal_split() {
        for cap in [100.0, 500.0, 900.0, 1500.0] {
            let s = tiny(cap, 1.0);
            let eq = oracle_solve(&s, 11).unwrap();
            let opt = oracle_solve_with(&s, 11, SplitMode::Optimal).unwrap();
            assert!(opt.feasibility.as_ref().unwrap().is_feasible());
            if let Some(q) = eq.q() {
                assert!(opt.q().unwrap() >= q - 1e-12);
            }
        }
    }

    #[test]
    fn grid_endpoints() {
        assert_eq!(rate_grid(1.0, 2.0, 3), vec![1.0, 1.5, 2.0]);
        assert_eq!(rate_grid(1.0, 2.0, 1), vec![1.0]);
    }

    #[test]
    fn snapping_floors_rates_and_keeps_shape() {
        let s = tiny(1.0e6, 1.0);
        let plan = EncodingPlan::from_sizes(2, 1, vec![400.0, 1000.0]).unwrap();
        let placement = Placement::all_on_first_server(&s);
        let r =
            SolveResult::evaluate(Scheme::EcVe, &s, placement, plan, Counters::default()).unwrap();
        let snapped = snap_to_grid(&s, &r, 11).unwrap();
        let rate = snapped.rates(&s)[0];
        assert!((rate - 0.58).abs() < 1e-12, "{rate}");
        let sz = snapped.plan.file_sizes(0);
        assert!((sz[1] / sz[0] - 2.5).abs() < 1e-12);
    }
}
