//! Comparison schemes: ECST-like fixed-rate caching, caching only (EC) and
//! encoding only (VE).

use crate::catalog::{EncodingPlan, Placement, Scenario};
use crate::error::{Error, Result};
use crate::greedy::solve_caching_fixed_rates;
use crate::options::SolverOptions;
use crate::qoe::{min_secure_packets, quality_slope, FEASIBILITY_TOL};
use crate::solution::{Counters, Scheme, SolveResult};

/// Fixed encoding rate used by ECST.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateRule {
    Min,
    /// `r_min + fraction·(r_max − r_min)`.
    Fraction(f64),
}

impl RateRule {
    /// The presets used in the experiments: `0`, `1/20`, `1/10` and `1/2` of the range.
    pub const PRESETS: [RateRule; 4] = [
        RateRule::Min,
        RateRule::Fraction(0.05),
        RateRule::Fraction(0.1),
        RateRule::Fraction(0.5),
    ];

    pub fn rates(self, scenario: &Scenario<f64>) -> Result<Vec<f64>> {
        let fraction = match self {
            RateRule::Min => 0.0,
            RateRule::Fraction(x) if (0.0..=1.0).contains(&x) => x,
            RateRule::Fraction(x) => {
                return Err(Error::invalid(
                    "ecst_rate_fraction",
                    format!("{x} outside [0, 1]"),
                ));
            }
        };
        Ok(scenario
            .files
            .iter()
            .map(|f| f.r_min + fraction * (f.r_max - f.r_min))
            .collect())
    }
}

/// Equal per-server counts at fixed rates. Counts start at the secrecy
/// minimum and grow greedily by descending `Ψ_j·size`, which minimises the
/// request-weighted backhaul volume. `None` if the minimum does not fit.
pub(crate) fn equal_count_placement(
    scenario: &Scenario<f64>,
    rates: &[f64],
) -> Result<Option<Placement>> {
    let (k_count, n, f_count) = (
        scenario.num_servers(),
        scenario.packets,
        scenario.num_files(),
    );
    let per_server_max = n / k_count;
    let size: Vec<f64> = rates
        .iter()
        .map(|r| r * scenario.duration / n as f64)
        .collect();
    let room = scenario
        .capacities
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);

    let mut count = vec![0usize; f_count];
    for (j, file) in scenario.files.iter().enumerate() {
        count[j] = min_secure_packets(n, file.requests)?.div_ceil(k_count);
        if count[j] > per_server_max {
            return Ok(None);
        }
    }
    let mut used: f64 = count.iter().zip(&size).map(|(&c, &s)| c as f64 * s).sum();
    if used > room + FEASIBILITY_TOL {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..f_count).collect();
    order.sort_by(|&a, &b| {
        let wa = scenario.files[a].requests * size[a];
        let wb = scenario.files[b].requests * size[b];
        wb.total_cmp(&wa).then(a.cmp(&b))
    });
    for &j in &order {
        while count[j] < per_server_max && used + size[j] <= room + FEASIBILITY_TOL {
            count[j] += 1;
            used += size[j];
        }
    }

    let mut placement = Placement::empty_for(scenario);
    for (j, &c) in count.iter().enumerate() {
        for k in 0..k_count {
            for t in 0..c {
                placement.set(k, k * c + t, j, true);
            }
        }
    }
    Ok(Some(placement))
}

/// ECST-like caching: every server holds the same number of packets of a file.
pub fn solve_ecst(scenario: &Scenario<f64>, rule: RateRule) -> Result<SolveResult> {
    scenario.validate()?;
    let rates = rule.rates(scenario)?;
    let plan = EncodingPlan::equal_split(scenario, &rates)?;
    let counters = Counters {
        dimension: scenario.placement_len(),
        ..Counters::default()
    };
    match equal_count_placement(scenario, &rates)? {
        Some(placement) => SolveResult::evaluate(Scheme::Ecst, scenario, placement, plan, counters),
        None => Ok(SolveResult::infeasible(Scheme::Ecst, scenario, counters)),
    }
}

/// Caching only: rates frozen at `r_min`, placement from the fixed-rate solver.
pub fn solve_ec_only(scenario: &Scenario<f64>, options: &SolverOptions) -> Result<SolveResult> {
    let rates: Vec<f64> = scenario.files.iter().map(|f| f.r_min).collect();
    let caching = solve_caching_fixed_rates(scenario, &rates, options)?;
    match caching.placement {
        Some(p) => SolveResult::evaluate(
            Scheme::Ec,
            scenario,
            p,
            EncodingPlan::equal_split(scenario, &rates)?,
            caching.counters,
        ),
        None => Ok(SolveResult::infeasible(
            Scheme::Ec,
            scenario,
            caching.counters,
        )),
    }
}

/// Packs every packet first-fit by server index, files and packets in order.
fn first_fit(scenario: &Scenario<f64>, rates: &[f64]) -> Option<Placement> {
    let n = scenario.packets;
    let mut room = scenario.capacities.clone();
    let mut placement = Placement::empty_for(scenario);
    for (j, &r) in rates.iter().enumerate() {
        let size = r * scenario.duration / n as f64;
        for i in 0..n {
            let k = room
                .iter()
                .position(|&left| left + FEASIBILITY_TOL >= size)?;
            room[k] -= size;
            placement.set(k, i, j, true);
        }
    }
    Some(placement)
}

/// Rates maximising `Σ f_j` with total volume at most `budget`: a Lagrangian
/// price on volume, bisected, with any remainder handed out in file order.
fn allocate_rates(scenario: &Scenario<f64>, budget: f64) -> Vec<f64> {
    let d = scenario.duration;
    let at_price = |price: f64| -> Vec<f64> {
        scenario
            .files
            .iter()
            .map(|f| {
                let [c1, c2, c3, c4] = f.coeffs;
                let value = |r: f64| c1 * r * r * r + c2 * r * r + c3 * r + c4 - price * d * r;
                // stationary points of the priced cubic inside the range
                let (a, b, c) = (3.0 * c1, 2.0 * c2, c3 - price * d);
                let mut cands = vec![f.r_min, f.r_max];
                let disc = b * b - 4.0 * a * c;
                if a.abs() > 1e-15 && disc >= 0.0 {
                    let sq = disc.sqrt();
                    cands.push((-b + sq) / (2.0 * a));
                    cands.push((-b - sq) / (2.0 * a));
                } else if a.abs() <= 1e-15 && b.abs() > 1e-15 {
                    cands.push(-c / b);
                }
                cands
                    .into_iter()
                    .filter(|r| r.is_finite() && *r >= f.r_min && *r <= f.r_max)
                    .fold((f.r_min, f64::NEG_INFINITY), |best, r| {
                        let v = value(r);
                        if v > best.1 || (v == best.1 && r > best.0) {
                            (r, v)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect()
    };
    let volume = |rates: &[f64]| rates.iter().sum::<f64>() * d;
    let max_rates: Vec<f64> = scenario.files.iter().map(|f| f.r_max).collect();
    if volume(&max_rates) <= budget {
        return max_rates;
    }
    let max_slope = scenario
        .files
        .iter()
        .flat_map(|f| [quality_slope(f, f.r_min), quality_slope(f, f.r_max)])
        .fold(0.0_f64, f64::max);
    let (mut lo, mut hi) = (0.0, max_slope.max(1e-12) / d * 4.0 + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if volume(&at_price(mid)) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut rates = at_price(hi);
    let mut spare = budget - volume(&rates);
    for (r, f) in rates.iter_mut().zip(&scenario.files) {
        if spare <= 0.0 {
            break;
        }
        let add = (f.r_max - *r).min(spare / d);
        *r += add;
        spare -= add * d;
    }
    rates
}

/// Encoding only: every packet cached, rates as high as the capacity allows.
pub fn solve_ve_only(scenario: &Scenario<f64>) -> Result<SolveResult> {
    scenario.validate()?;
    let counters = Counters {
        dimension: scenario.num_files(),
        ..Counters::default()
    };
    let min_rates: Vec<f64> = scenario.files.iter().map(|f| f.r_min).collect();
    if first_fit(scenario, &min_rates).is_none() {
        return Ok(SolveResult::infeasible(Scheme::Ve, scenario, counters));
    }
    let total = scenario.total_capacity();
    let floor = scenario.min_catalog_volume();
    // shrink the volume budget until first-fit packs it
    let mut budget = total;
    let mut rates = allocate_rates(scenario, budget);
    let mut placement = first_fit(scenario, &rates);
    if placement.is_none() {
        let (mut lo, mut hi) = (floor, total);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if first_fit(scenario, &allocate_rates(scenario, mid)).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        budget = lo;
        rates = allocate_rates(scenario, budget);
        placement = first_fit(scenario, &rates);
    }
    let placement = match placement {
        Some(p) => p,
        None => {
            rates = min_rates;
            first_fit(scenario, &rates).expect("checked above")
        }
    };
    let plan = EncodingPlan::equal_split(scenario, &rates)?;
    SolveResult::evaluate(Scheme::Ve, scenario, placement, plan, counters)
}
