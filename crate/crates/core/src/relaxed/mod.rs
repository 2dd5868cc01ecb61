//! Continuous relaxation of the joint caching/encoding problem.
//!
//! Variables are the caching weights `m̃ ∈ [0,1]^{K·n·F}` and packet sizes
//! expressed as rates `σ = s / T_d`. The per-server capacity constraints are
//! handled by an augmented Lagrangian; everything else (box, one copy per
//! packet, secrecy lower bound, rate range, pins) is enforced by exact
//! projection inside a spectral projected-gradient loop. Each start ends with
//! a repair pass, an optional restoration phase and vertex purification.

mod projection;
mod purify;

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{EncodingPlan, Scenario};
use crate::error::{Error, Result};
use crate::options::SolverOptions;
use crate::qoe::{
    min_secure_packets, quality_at_rate, quality_slope, security_rhs, RelaxedWeights,
};

use projection::{project_file_weights, project_sizes, FREE};

/// Equality pins on individual caching weights, keyed by `(k, i, j)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinSet {
    pins: BTreeMap<(usize, usize, usize), bool>,
}

impl PinSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a pin; re-pinning an entry to a different value is an error.
    pub fn insert(&mut self, k: usize, i: usize, j: usize, value: bool) -> Result<()> {
        match self.pins.get(&(k, i, j)) {
            Some(&prev) if prev != value => Err(Error::invalid(
                "pins",
                format!("entry ({k}, {i}, {j}) pinned to both 0 and 1"),
            )),
            _ => {
                self.pins.insert((k, i, j), value);
                Ok(())
            }
        }
    }

    pub fn with(&self, k: usize, i: usize, j: usize, value: bool) -> Result<Self> {
        let mut next = self.clone();
        next.insert(k, i, j, value)?;
        Ok(next)
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> Option<bool> {
        self.pins.get(&(k, i, j)).copied()
    }

    pub fn len(&self) -> usize {
        self.pins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pins.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize, usize), bool)> + '_ {
        self.pins.iter().map(|(&key, &v)| (key, v))
    }

    fn mask(&self, servers: usize, packets: usize, files: usize) -> Result<Vec<i8>> {
        let mut mask = vec![FREE; servers * packets * files];
        for (&(k, i, j), &v) in &self.pins {
            if k >= servers || i >= packets || j >= files {
                return Err(Error::DimensionMismatch(format!(
                    "pin ({k}, {i}, {j}) outside {servers}x{packets}x{files}"
                )));
            }
            mask[(j * packets + i) * servers + k] = v as i8;
        }
        Ok(mask)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelaxedStatus {
    Feasible,
    Infeasible,
    /// Feasible, but the best start stopped on an iteration cap.
    MaxIters,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxedSolution {
    pub weights: RelaxedWeights<f64>,
    pub plan: EncodingPlan<f64>,
    /// `Σ_j (g_j − f_j)`; `+∞` when infeasible.
    pub objective: f64,
    pub status: RelaxedStatus,
    pub best_start: Option<usize>,
    pub starts: usize,
    pub inner_iterations: u64,
    pub evaluations: u64,
}

impl RelaxedSolution {
    pub fn is_feasible(&self) -> bool {
        self.status != RelaxedStatus::Infeasible
    }
}

/// Entries farther than `tol` from both 0 and 1, in `(j, i, k)` order, as `(k, i, j)`.
pub fn fractional_entries(sol: &RelaxedSolution, tol: f64) -> Vec<(usize, usize, usize)> {
    let w = &sol.weights;
    w.values
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > tol && m < 1.0 - tol)
        .map(|(idx, _)| {
            let k = idx % w.servers;
            let p = idx / w.servers;
            (k, p % w.packets, p / w.packets)
        })
        .collect()
}

/// Multi-start solve with no fixed rates. See [`RelaxedProblem`].
pub fn solve_relaxed(
    scenario: &Scenario<f64>,
    pins: &PinSet,
    options: &SolverOptions,
) -> Result<RelaxedSolution> {
    RelaxedProblem::new(scenario, options)?.solve(pins, None, options.n_starts)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Objective,
    Restoration,
}

/// Relative objective change under which a feasible outer iterate counts as settled.
const OBJ_SETTLE: f64 = 1e-9;
const RHO_MAX: f64 = 1e8;
/// Smoothing width of the first outer iteration, shrunk tenfold per iteration.
const SMOOTHING_START: f64 = 1e-2;

/// Multipliers, penalty weight and smoothing width of one inner solve.
#[derive(Clone, Copy)]
struct Merit<'a> {
    lam: &'a [f64],
    rho: f64,
    eps: f64,
}

#[derive(Default)]
struct Work {
    inner: u64,
    evals: u64,
}

struct StartOutcome {
    m: Vec<f64>,
    sigma: Vec<f64>,
    objective: f64,
    feasible: bool,
    converged: bool,
    work: Work,
}

/// Precomputed relaxation of one scenario, optionally with frozen packet sizes.
pub struct RelaxedProblem<'a> {
    scenario: &'a Scenario<f64>,
    options: SolverOptions,
    k: usize,
    n: usize,
    f: usize,
    /// Secrecy lower bound on `Σ m̃` per file.
    lower: Vec<f64>,
    /// Capacities in rate units (`Φ_k / T_d`).
    cap: Vec<f64>,
    /// `p_j·T_d / R_bk`, mapping uncached rate mass to the penalty argument.
    lat: Vec<f64>,
    fixed_sigma: Option<Vec<f64>>,
}

impl<'a> RelaxedProblem<'a> {
    pub fn new(scenario: &'a Scenario<f64>, options: &SolverOptions) -> Result<Self> {
        options.validate()?;
        scenario.validate()?;
        let lower = scenario
            .files
            .iter()
            .map(|f| {
                if f.requests > 0.0 {
                    Ok(security_rhs(scenario.packets, f.requests))
                } else {
                    Err(Error::invalid(
                        "requests",
                        "per-file request count must be positive",
                    ))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RelaxedProblem {
            scenario,
            options: options.clone(),
            k: scenario.num_servers(),
            n: scenario.packets,
            f: scenario.num_files(),
            lower,
            cap: scenario
                .capacities
                .iter()
                .map(|c| c / scenario.duration)
                .collect(),
            lat: scenario
                .files
                .iter()
                .map(|f| f.popularity * scenario.duration / scenario.backhaul_rate)
                .collect(),
            fixed_sigma: None,
        })
    }

    /// Caching-only relaxation with equal packet sizes at the given rates.
    pub fn with_fixed_rates(
        scenario: &'a Scenario<f64>,
        rates: &[f64],
        options: &SolverOptions,
    ) -> Result<Self> {
        if rates.len() != scenario.num_files() {
            return Err(Error::DimensionMismatch(format!(
                "{} rates for {} files",
                rates.len(),
                scenario.num_files()
            )));
        }
        let mut problem = Self::new(scenario, options)?;
        let n = scenario.packets;
        // equal sizes make the cached count integral, so the bound rounds up
        for (lower, file) in problem.lower.iter_mut().zip(&scenario.files) {
            *lower = min_secure_packets(n, file.requests)? as f64;
        }
        problem.fixed_sigma = Some(
            rates
                .iter()
                .flat_map(|&r| std::iter::repeat_n(r / n as f64, n))
                .collect(),
        );
        Ok(problem)
    }

    /// Number of continuous variables.
    pub fn dimension(&self) -> usize {
        let m = self.k * self.n * self.f;
        if self.fixed_sigma.is_some() {
            m
        } else {
            m + self.n * self.f
        }
    }

    fn m_len(&self) -> usize {
        self.k * self.n * self.f
    }

    /// Best local optimum over `n_starts` starts, the incumbent `warm` first if given.
    pub fn solve(
        &self,
        pins: &PinSet,
        warm: Option<&RelaxedSolution>,
        n_starts: usize,
    ) -> Result<RelaxedSolution> {
        if n_starts == 0 {
            return Err(Error::invalid("n_starts", "must be at least 1"));
        }
        let mask = pins.mask(self.k, self.n, self.f)?;
        let mut starts: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(n_starts + 1);
        if let Some(w) = warm {
            if w.weights.values.len() != self.m_len() {
                return Err(Error::DimensionMismatch(
                    "warm start shape differs from scenario".into(),
                ));
            }
            let sigma = w
                .plan
                .as_slice()
                .iter()
                .map(|s| s / self.scenario.duration)
                .collect();
            starts.push((w.weights.values.clone(), sigma));
        }
        let regular = if warm.is_some() {
            n_starts - 1
        } else {
            n_starts
        };
        starts.extend((0..regular).map(|idx| self.start_point(idx)));

        let outcomes: Vec<StartOutcome> = starts
            .into_par_iter()
            .map(|(m, sigma)| self.run_start(m, sigma, &mask))
            .collect();

        let mut best: Option<usize> = None;
        for (idx, out) in outcomes.iter().enumerate() {
            if !out.feasible {
                continue;
            }
            match best {
                Some(b) if out.objective >= outcomes[b].objective => {}
                _ => best = Some(idx),
            }
        }
        let inner_iterations = outcomes.iter().map(|o| o.work.inner).sum();
        let evaluations = outcomes.iter().map(|o| o.work.evals).sum();
        let starts = outcomes.len();
        let (m, sigma, objective, status) = match best {
            Some(b) => {
                let o = &outcomes[b];
                let status = if o.converged {
                    RelaxedStatus::Feasible
                } else {
                    RelaxedStatus::MaxIters
                };
                (o.m.clone(), o.sigma.clone(), o.objective, status)
            }
            None => (
                vec![0.0; self.m_len()],
                self.start_point(0).1,
                f64::INFINITY,
                RelaxedStatus::Infeasible,
            ),
        };
        let sizes = sigma.iter().map(|s| s * self.scenario.duration).collect();
        Ok(RelaxedSolution {
            weights: RelaxedWeights {
                servers: self.k,
                packets: self.n,
                files: self.f,
                values: m,
            },
            plan: EncodingPlan::from_sizes(self.n, self.f, sizes)?,
            objective,
            status,
            best_start: best,
            starts,
            inner_iterations,
            evaluations,
        })
    }

    fn sigma_for(&self, rates: impl Iterator<Item = f64>) -> Vec<f64> {
        if let Some(fixed) = &self.fixed_sigma {
            return fixed.clone();
        }
        rates
            .flat_map(|r| std::iter::repeat_n(r / self.n as f64, self.n))
            .collect()
    }

    /// Start 0: secrecy minimum plus popularity-ordered fill at minimum rates.
    /// Start 1: secrecy minimum only, with each file's volume on its uncached packets.
    /// Later starts: uniform weights and a uniform rate per file.
    fn start_point(&self, idx: usize) -> (Vec<f64>, Vec<f64>) {
        let sc = self.scenario;
        let (kk, n) = (self.k, self.n);
        match idx {
            0 | 1 => {
                let sigma = self.sigma_for(sc.files.iter().map(|f| f.r_min));
                let mut m = vec![0.0; self.m_len()];
                let mut room = self.cap.clone();
                let place = |m: &mut Vec<f64>,
                             room: &mut Vec<f64>,
                             j: usize,
                             i: usize,
                             force: bool|
                 -> bool {
                    let size = sigma[j * n + i];
                    let k = (0..kk).max_by(|&a, &b| room[a].total_cmp(&room[b]).then(b.cmp(&a)));
                    match k {
                        Some(k) if force || room[k] >= size => {
                            m[(j * n + i) * kk + k] = 1.0;
                            room[k] -= size;
                            true
                        }
                        _ => false,
                    }
                };
                let mut secure = vec![0; self.f];
                for (j, file) in sc.files.iter().enumerate() {
                    secure[j] = min_secure_packets(n, file.requests).unwrap_or(n);
                    for i in 0..secure[j] {
                        place(&mut m, &mut room, j, i, true);
                    }
                }
                if idx == 0 {
                    for (j, &first) in secure.iter().enumerate() {
                        for i in first..n {
                            if !place(&mut m, &mut room, j, i, false) {
                                break;
                            }
                        }
                    }
                    return (m, sigma);
                }
                let mut sigma = sigma;
                if self.fixed_sigma.is_none() {
                    for (j, file) in sc.files.iter().enumerate() {
                        if secure[j] < n {
                            let per = file.r_min / (n - secure[j]) as f64;
                            for i in 0..n {
                                sigma[j * n + i] = if i < secure[j] { 0.0 } else { per };
                            }
                        }
                    }
                }
                (m, sigma)
            }
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.options.seed);
                rng.set_stream(idx as u64);
                let m: Vec<f64> = (0..self.m_len()).map(|_| rng.gen::<f64>()).collect();
                let rates: Vec<f64> = sc
                    .files
                    .iter()
                    .map(|f| f.r_min + (f.r_max - f.r_min) * rng.gen::<f64>())
                    .collect();
                (m, self.sigma_for(rates.into_iter()))
            }
        }
    }

    fn project(&self, x: &mut [f64], pins: &[i8], scratch: &mut Vec<f64>) -> bool {
        let ml = self.m_len();
        let (m, sigma) = x.split_at_mut(ml);
        let block = self.n * self.k;
        for j in 0..self.f {
            let r = j * block..(j + 1) * block;
            if !project_file_weights(&mut m[r.clone()], &pins[r], self.k, self.lower[j], scratch) {
                return false;
            }
        }
        if self.fixed_sigma.is_none() {
            for (j, file) in self.scenario.files.iter().enumerate() {
                project_sizes(
                    &mut sigma[j * self.n..(j + 1) * self.n],
                    file.r_min,
                    file.r_max,
                );
            }
        }
        true
    }

    fn usage(&self, m: &[f64], sigma: &[f64]) -> Vec<f64> {
        let mut usage = vec![0.0; self.k];
        for (p, &s) in sigma.iter().enumerate() {
            for (k, u) in usage.iter_mut().enumerate() {
                *u += m[p * self.k + k] * s;
            }
        }
        usage
    }

    fn max_violation(&self, m: &[f64], sigma: &[f64]) -> f64 {
        self.usage(m, sigma)
            .iter()
            .zip(&self.cap)
            .fold(0.0_f64, |acc, (u, c)| acc.max(u - c))
    }

    /// Uncached rate mass of file `j`, clamped at zero.
    fn uncached(&self, m: &[f64], sigma: &[f64], j: usize) -> f64 {
        let mut u = 0.0;
        for i in 0..self.n {
            let p = j * self.n + i;
            let cached: f64 = m[p * self.k..(p + 1) * self.k].iter().sum();
            u += sigma[p] * (1.0 - cached);
        }
        u.max(0.0)
    }

    /// Exact latency penalty of file `j`.
    fn file_penalty(&self, m: &[f64], sigma: &[f64], j: usize) -> f64 {
        let x = self.lat[j] * self.uncached(m, sigma, j);
        if x > 0.0 {
            self.scenario.files[j].v * x.powf(2.0 / 3.0)
        } else {
            0.0
        }
    }

    /// Exact `Σ_j (g_j − f_j)`.
    fn exact_objective(&self, m: &[f64], sigma: &[f64]) -> f64 {
        (0..self.f)
            .map(|j| {
                let rate: f64 = sigma[j * self.n..(j + 1) * self.n].iter().sum();
                self.file_penalty(m, sigma, j) - quality_at_rate(&self.scenario.files[j], rate)
            })
            .sum()
    }

    /// Smoothed merit value and gradient.
    fn eval(&self, x: &[f64], mode: Mode, merit: &Merit<'_>, grad: &mut [f64]) -> f64 {
        let Merit { lam, rho, eps } = *merit;
        let ml = self.m_len();
        let (m, sigma) = x.split_at(ml);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let (gm, gs) = grad.split_at_mut(ml);
        let (kk, n) = (self.k, self.n);

        let usage = self.usage(m, sigma);
        let mut value = 0.0;
        let mut h = vec![0.0; kk];
        for k in 0..kk {
            let c = usage[k] - self.cap[k];
            match mode {
                Mode::Objective => {
                    h[k] = (lam[k] + rho * c).max(0.0);
                    value += (h[k] * h[k] - lam[k] * lam[k]) / (2.0 * rho);
                }
                Mode::Restoration => {
                    h[k] = c.max(0.0);
                    value += 0.5 * h[k] * h[k];
                }
            }
        }
        for p in 0..n * self.f {
            let s = sigma[p];
            let mut hm = 0.0;
            for k in 0..kk {
                gm[p * kk + k] += h[k] * s;
                hm += h[k] * m[p * kk + k];
            }
            gs[p] += hm;
        }

        if mode == Mode::Objective {
            let eps2 = eps * eps;
            for (j, file) in self.scenario.files.iter().enumerate() {
                let block = &sigma[j * n..(j + 1) * n];
                let rate: f64 = block.iter().sum();
                let u = self.uncached(m, sigma, j);
                let arg = self.lat[j] * u;
                let base = arg * arg + eps2;
                value += file.v * base.cbrt();
                let dg = if arg > 0.0 {
                    file.v * (2.0 / 3.0) * arg / (base.cbrt() * base.cbrt()) * self.lat[j]
                } else {
                    0.0
                };
                value -= quality_at_rate(file, rate);
                let df = quality_slope(file, rate);
                for i in 0..n {
                    let p = j * n + i;
                    let cached: f64 = m[p * kk..(p + 1) * kk].iter().sum();
                    for k in 0..kk {
                        gm[p * kk + k] -= dg * sigma[p];
                    }
                    gs[p] += dg * (1.0 - cached) - df;
                }
            }
        }
        if self.fixed_sigma.is_some() {
            gs.iter_mut().for_each(|g| *g = 0.0);
        }
        value
    }

    /// Nonmonotone spectral projected gradient. Returns whether the
    /// projected-gradient test `‖P(x − ∇) − x‖∞ < tol` was met; stops early
    /// without success once the merit value stalls.
    #[allow(clippy::too_many_arguments)]
    fn spg(
        &self,
        x: &mut Vec<f64>,
        pins: &[i8],
        mode: Mode,
        merit: &Merit<'_>,
        tol: f64,
        budget: u64,
        work: &mut Work,
    ) -> bool {
        const MEMORY: usize = 10;
        const SUFFICIENT: f64 = 1e-4;
        const ALPHA_MIN: f64 = 1e-4;
        const ALPHA_MAX: f64 = 1e4;
        const STALL_WINDOW: usize = 100;
        const STALL_GAIN: f64 = 1e-10;
        let len = x.len();
        let mut scratch = Vec::new();
        let mut grad = vec![0.0; len];
        let mut value = self.eval(x, mode, merit, &mut grad);
        work.evals += 1;
        let mut history: VecDeque<f64> = VecDeque::from([value]);
        let mut trial = vec![0.0; len];
        let mut next_grad = vec![0.0; len];
        let mut dir = vec![0.0; len];
        let mut alpha = 1.0;
        let mut best = value;
        let mut last_gain = 0;
        for it in 0.. {
            if work.inner >= budget {
                break;
            }
            work.inner += 1;
            if it - last_gain > STALL_WINDOW {
                return false;
            }
            for ((t, &xv), &g) in trial.iter_mut().zip(x.iter()).zip(&grad) {
                *t = xv - g;
            }
            self.project(&mut trial, pins, &mut scratch);
            let pg = trial
                .iter()
                .zip(x.iter())
                .fold(0.0_f64, |acc, (t, xv)| acc.max((t - xv).abs()));
            if pg < tol || !value.is_finite() {
                return value.is_finite();
            }
            for ((t, &xv), &g) in trial.iter_mut().zip(x.iter()).zip(&grad) {
                *t = xv - alpha * g;
            }
            self.project(&mut trial, pins, &mut scratch);
            for ((d, t), &xv) in dir.iter_mut().zip(&trial).zip(x.iter()) {
                *d = t - xv;
            }
            let gtd: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
            let reference = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut step = 1.0;
            let mut next_value;
            loop {
                for ((t, &xv), &d) in trial.iter_mut().zip(x.iter()).zip(&dir) {
                    *t = xv + step * d;
                }
                next_value = self.eval(&trial, mode, merit, &mut next_grad);
                work.evals += 1;
                if next_value <= reference + SUFFICIENT * step * gtd || step < 1e-12 {
                    break;
                }
                let denom = 2.0 * (next_value - value - step * gtd);
                let interp = if denom > 0.0 {
                    -gtd * step * step / denom
                } else {
                    0.5 * step
                };
                step = interp.clamp(0.1 * step, 0.5 * step);
            }
            let mut sts = 0.0;
            let mut sty = 0.0;
            for idx in 0..len {
                let s = trial[idx] - x[idx];
                let y = next_grad[idx] - grad[idx];
                sts += s * s;
                sty += s * y;
            }
            alpha = if sty > 1e-300 {
                (sts / sty).clamp(ALPHA_MIN, ALPHA_MAX)
            } else {
                ALPHA_MAX
            };
            std::mem::swap(x, &mut trial);
            std::mem::swap(&mut grad, &mut next_grad);
            value = next_value;
            if value < best - STALL_GAIN * best.abs().max(1.0) {
                best = value;
                last_gain = it;
            }
            history.push_back(value);
            if history.len() > MEMORY {
                history.pop_front();
            }
        }
        false
    }

    /// Removes small capacity excess by trimming packet sizes within rate
    /// slack, then unpinned weights within secrecy slack.
    fn repair(&self, m: &mut [f64], sigma: &mut [f64], pins: &[i8]) {
        let (kk, n) = (self.k, self.n);
        for k in 0..kk {
            let margin = 1e-12 * self.cap[k].max(1.0);
            let mut excess = self.usage(m, sigma)[k] - self.cap[k] + margin;
            if excess <= margin {
                continue;
            }
            if self.fixed_sigma.is_none() {
                for (j, file) in self.scenario.files.iter().enumerate() {
                    let mut slack = sigma[j * n..(j + 1) * n].iter().sum::<f64>() - file.r_min;
                    for i in 0..n {
                        let p = j * n + i;
                        let w = m[p * kk + k];
                        if excess <= 0.0 || slack <= 0.0 {
                            break;
                        }
                        if w <= 0.0 {
                            continue;
                        }
                        let d = sigma[p].min(slack).min(excess / w);
                        sigma[p] -= d;
                        slack -= d;
                        excess -= d * w;
                    }
                }
            }
            for j in 0..self.f {
                let total: f64 = m[j * n * kk..(j + 1) * n * kk].iter().sum();
                let mut slack = total - self.lower[j].max(0.0);
                for i in 0..n {
                    let p = j * n + i;
                    let idx = p * kk + k;
                    if excess <= 0.0 || slack <= 0.0 {
                        break;
                    }
                    if pins[idx] != FREE || m[idx] <= 0.0 || sigma[p] <= 0.0 {
                        continue;
                    }
                    let d = m[idx].min(slack).min(excess / sigma[p]);
                    m[idx] -= d;
                    slack -= d;
                    excess -= d * sigma[p];
                }
            }
        }
    }

    fn run_start(&self, m0: Vec<f64>, sigma0: Vec<f64>, pins: &[i8]) -> StartOutcome {
        let ml = self.m_len();
        let mut work = Work::default();
        let mut x = m0;
        x.extend(sigma0);
        let mut scratch = Vec::new();
        let infeasible = |x: Vec<f64>, work: Work| StartOutcome {
            m: x[..ml].to_vec(),
            sigma: x[ml..].to_vec(),
            objective: f64::INFINITY,
            feasible: false,
            converged: false,
            work,
        };
        if !self.project(&mut x, pins, &mut scratch) {
            return infeasible(x, work);
        }
        let tol = self.options.tol_constraint / self.scenario.duration;
        let budget = self.options.max_inner_iters as u64;
        let mut lam = vec![0.0; self.k];
        let mut rho = 10.0;
        let mut prev_viol = f64::INFINITY;
        let mut prev_obj = f64::INFINITY;
        let mut converged = false;
        for outer in 0..self.options.max_outer_iters {
            if work.inner >= budget {
                break;
            }
            let inner_tol = (1e-2 * 0.1_f64.powi(outer as i32)).max(self.options.tol_grad);
            let eps =
                (SMOOTHING_START * 0.1_f64.powi(outer as i32)).max(self.options.smoothing_eps);
            let merit = Merit {
                lam: &lam,
                rho,
                eps,
            };
            let inner_ok = self.spg(
                &mut x,
                pins,
                Mode::Objective,
                &merit,
                inner_tol,
                budget,
                &mut work,
            );
            let usage = self.usage(&x[..ml], &x[ml..]);
            let mut viol = 0.0_f64;
            for k in 0..self.k {
                let c = usage[k] - self.cap[k];
                viol = viol.max(c);
                lam[k] = (lam[k] + rho * c).max(0.0);
            }
            let obj = self.exact_objective(&x[..ml], &x[ml..]);
            let settled = (obj - prev_obj).abs() <= OBJ_SETTLE * obj.abs().max(1.0);
            let sharp = eps <= self.options.smoothing_eps;
            if viol <= tol && sharp && ((inner_ok && inner_tol <= self.options.tol_grad) || settled)
            {
                converged = true;
                break;
            }
            if viol > tol && viol > 0.25 * prev_viol {
                rho = (rho * 10.0).min(RHO_MAX);
            }
            prev_viol = viol;
            prev_obj = obj;
        }

        let (m, sigma) = x.split_at_mut(ml);
        self.repair(m, sigma, pins);
        if self.max_violation(m, sigma) > tol {
            let mut y = x.clone();
            let extra = work.inner + self.options.max_inner_iters as u64;
            let merit = Merit {
                lam: &lam,
                rho: 1.0,
                eps: self.options.smoothing_eps,
            };
            self.spg(
                &mut y,
                pins,
                Mode::Restoration,
                &merit,
                self.options.tol_grad,
                extra,
                &mut work,
            );
            x = y;
            let (m, sigma) = x.split_at_mut(ml);
            self.repair(m, sigma, pins);
        }
        let (m, sigma) = x.split_at_mut(ml);
        if self.options.purify {
            self.purify(m, sigma, pins);
            self.repair(m, sigma, pins);
        }
        if self.max_violation(m, sigma) > tol {
            return infeasible(x, work);
        }
        let objective = self.exact_objective(m, sigma);
        StartOutcome {
            m: m.to_vec(),
            sigma: sigma.to_vec(),
            objective,
            feasible: objective.is_finite(),
            converged,
            work,
        }
    }
}
