//! Encoding quality, latency penalty, backhaul packet counts and the
//! constraint checks shared by every solver.

use serde::{Deserialize, Serialize};

use crate::catalog::{EncodingPlan, Placement, Scenario, VideoFile};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Absolute slack allowed on capacity (Mb), rate (Mbps) and packet-count residuals.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Slack used when comparing a cached count against the secrecy bound, so that
/// a right-hand side that is an integer up to rounding is not pushed to the
/// next integer.
pub const SECURITY_TOL: f64 = 1e-9;

/// Read access to a caching tensor, Boolean or relaxed.
pub trait CacheWeights<T: Scalar> {
    fn servers(&self) -> usize;
    fn packets(&self) -> usize;
    fn files(&self) -> usize;
    fn weight(&self, k: usize, i: usize, j: usize) -> T;

    /// `Σ_k Σ_i m̃[k,i,j]`.
    fn file_weight(&self, j: usize) -> T {
        let mut total = T::zero();
        for i in 0..self.packets() {
            for k in 0..self.servers() {
                total = total + self.weight(k, i, j);
            }
        }
        total
    }
}

impl<T: Scalar> CacheWeights<T> for Placement {
    fn servers(&self) -> usize {
        Placement::servers(self)
    }
    fn packets(&self) -> usize {
        Placement::packets(self)
    }
    fn files(&self) -> usize {
        Placement::files(self)
    }
    #[inline]
    fn weight(&self, k: usize, i: usize, j: usize) -> T {
        if self.get(k, i, j) {
            T::one()
        } else {
            T::zero()
        }
    }
}

/// Dense real-valued caching tensor, used for relaxed solutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxedWeights<T> {
    pub servers: usize,
    pub packets: usize,
    pub files: usize,
    /// Same layout as [`Placement::offset`].
    pub values: Vec<T>,
}

impl<T: Scalar> CacheWeights<T> for RelaxedWeights<T> {
    fn servers(&self) -> usize {
        self.servers
    }
    fn packets(&self) -> usize {
        self.packets
    }
    fn files(&self) -> usize {
        self.files
    }
    #[inline]
    fn weight(&self, k: usize, i: usize, j: usize) -> T {
        self.values[(j * self.packets + i) * self.servers + k]
    }
}

/// MOS at encoding rate `rate` (Mbps): `c1·r³ + c2·r² + c3·r + c4`.
#[inline]
pub fn quality_at_rate<T: Scalar>(file: &VideoFile<T>, rate: T) -> T {
    let [c1, c2, c3, c4] = file.coeffs;
    ((c1 * rate + c2) * rate + c3) * rate + c4
}

/// `d f / d r` of [`quality_at_rate`].
#[inline]
pub fn quality_slope<T: Scalar>(file: &VideoFile<T>, rate: T) -> T {
    let [c1, c2, c3, _] = file.coeffs;
    (T::lit(3.0) * c1 * rate + T::lit(2.0) * c2) * rate + c3
}

/// Encoding quality `f` for a file of total size `total_size` Mb played over
/// `duration` seconds. No range clamping is applied.
pub fn encoding_quality<T: Scalar>(file: &VideoFile<T>, total_size: T, duration: T) -> T {
    quality_at_rate(file, total_size / duration)
}

/// Latency penalty `g = v·[p·U / R_bk]^(2/3)` for `uncached` Mb sent over the
/// backhaul. Negative volume is clamped to zero first.
pub fn latency_penalty<T: Scalar>(file: &VideoFile<T>, uncached: T, backhaul_rate: T) -> T {
    let u = uncached.max(T::zero());
    let x = file.popularity * u / backhaul_rate;
    if x <= T::zero() {
        return T::zero();
    }
    file.v * x.powf(T::lit(2.0 / 3.0))
}

/// `Σ_i s[i,j] − Σ_i Σ_k m̃[k,i,j]·s[i,j]`, unclamped.
pub fn uncached_volume<T: Scalar, W: CacheWeights<T> + ?Sized>(
    weights: &W,
    plan: &EncodingPlan<T>,
    j: usize,
) -> T {
    let mut total = T::zero();
    for i in 0..plan.packets() {
        let mut cached = T::zero();
        for k in 0..weights.servers() {
            cached = cached + weights.weight(k, i, j);
        }
        total = total + plan.size(i, j) * (T::one() - cached);
    }
    total
}

/// Latency penalty of file `j` under the given caching and packet sizes.
pub fn file_latency_penalty<T: Scalar, W: CacheWeights<T> + ?Sized>(
    scenario: &Scenario<T>,
    weights: &W,
    plan: &EncodingPlan<T>,
    j: usize,
) -> T {
    latency_penalty(
        scenario.file(j),
        uncached_volume(weights, plan, j),
        scenario.backhaul_rate,
    )
}

/// Packets of file `j` fetched over the backhaul for all its requests:
/// `Ψ_j·(n − min(n, Σ_k m_kj))`.
pub fn backhaul_packets<T: Scalar>(scenario: &Scenario<T>, placement: &Placement, j: usize) -> T {
    let n = scenario.packets;
    let remaining = n - placement.file_count(j).min(n);
    scenario.file(j).requests * T::from_count(remaining)
}

/// Right-hand side of the secrecy bound: `n·(1 − 1/Ψ_j) + 1/Ψ_j`.
pub fn security_rhs<T: Scalar>(packets: usize, requests: T) -> T {
    let n = T::from_count(packets);
    let inv = T::one() / requests;
    n * (T::one() - inv) + inv
}

/// Smallest cached packet count of a file that keeps its backhaul traffic
/// below a decodable set, clamped to `[0, n]`.
pub fn min_secure_packets<T: Scalar>(packets: usize, requests: T) -> Result<usize> {
    if packets == 0 {
        return Err(Error::invalid("n", "must be a positive integer"));
    }
    if !requests.is_finite() || requests <= T::zero() {
        return Err(Error::invalid(
            "requests",
            format!("per-file request count must be positive, got {requests}"),
        ));
    }
    let rhs = (security_rhs(packets, requests) - T::lit(SECURITY_TOL)).ceil();
    if rhs <= T::zero() {
        return Ok(0);
    }
    Ok(rhs.to_usize().unwrap_or(packets).min(packets))
}

/// Per-constraint outcome of [`check_feasibility`]. Slack is positive when the
/// constraint holds with room to spare.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport<T> {
    pub capacity_ok: Vec<bool>,
    pub capacity_slack: Vec<T>,
    pub no_duplication_ok: bool,
    /// Per file: the smaller of `n − Σ m` and the tightest per-packet `1 − Σ_k m`.
    pub duplication_slack: Vec<T>,
    pub security_ok: Vec<bool>,
    pub security_slack: Vec<T>,
    pub rate_ok: Vec<bool>,
    /// Distance of each file's rate to the nearer bound, negative when outside.
    pub rate_slack: Vec<T>,
    pub binary_ok: bool,
}

impl<T: Scalar> FeasibilityReport<T> {
    pub fn is_feasible(&self) -> bool {
        self.is_feasible_relaxed() && self.binary_ok
    }

    /// Every constraint except integrality.
    pub fn is_feasible_relaxed(&self) -> bool {
        self.capacity_ok.iter().all(|&ok| ok)
            && self.no_duplication_ok
            && self.security_ok.iter().all(|&ok| ok)
            && self.rate_ok.iter().all(|&ok| ok)
    }

    /// Largest violation over all non-integrality constraints (0 if none).
    pub fn max_violation(&self) -> T {
        self.capacity_slack
            .iter()
            .chain(&self.duplication_slack)
            .chain(&self.security_slack)
            .chain(&self.rate_slack)
            .fold(T::zero(), |acc, &s| acc.max(-s))
    }
}

fn check_dims<T: Scalar, W: CacheWeights<T> + ?Sized>(
    scenario: &Scenario<T>,
    weights: &W,
    plan: &EncodingPlan<T>,
) -> Result<()> {
    let want = (
        scenario.num_servers(),
        scenario.packets,
        scenario.num_files(),
    );
    let got = (weights.servers(), weights.packets(), weights.files());
    if want != got {
        return Err(Error::DimensionMismatch(format!(
            "placement is {got:?} (K, n, F), scenario is {want:?}"
        )));
    }
    if !plan.matches(scenario) {
        return Err(Error::DimensionMismatch(format!(
            "plan is {}x{}, scenario is {}x{}",
            plan.packets(),
            plan.files(),
            scenario.packets,
            scenario.num_files()
        )));
    }
    Ok(())
}

/// Evaluates every constraint of the joint problem independently.
pub fn check_feasibility<T: Scalar, W: CacheWeights<T> + ?Sized>(
    scenario: &Scenario<T>,
    weights: &W,
    plan: &EncodingPlan<T>,
) -> Result<FeasibilityReport<T>> {
    check_dims(scenario, weights, plan)?;
    let tol = T::lit(FEASIBILITY_TOL);
    let (k_count, n, f_count) = (
        scenario.num_servers(),
        scenario.packets,
        scenario.num_files(),
    );

    let mut used = vec![T::zero(); k_count];
    let mut binary_ok = true;
    let mut file_weight = vec![T::zero(); f_count];
    let mut packet_slack = vec![T::infinity(); f_count];
    for j in 0..f_count {
        for i in 0..n {
            let s = plan.size(i, j);
            let mut packet = T::zero();
            for (k, u) in used.iter_mut().enumerate() {
                let m = weights.weight(k, i, j);
                if m != T::zero() && m != T::one() {
                    binary_ok = false;
                }
                *u = *u + m * s;
                packet = packet + m;
            }
            file_weight[j] = file_weight[j] + packet;
            packet_slack[j] = packet_slack[j].min(T::one() - packet);
        }
    }
    let capacity_slack: Vec<T> = scenario
        .capacities
        .iter()
        .zip(&used)
        .map(|(&cap, &u)| cap - u)
        .collect();
    let capacity_ok = capacity_slack.iter().map(|&s| s >= -tol).collect();

    let n_t = T::from_count(n);
    // a packet may sit on at most one server, which also bounds the file total by n
    let duplication_slack: Vec<T> = file_weight
        .iter()
        .zip(&packet_slack)
        .map(|(&w, &p)| (n_t - w).min(p))
        .collect();
    let no_duplication_ok = duplication_slack.iter().all(|&s| s >= -tol);

    let security_slack: Vec<T> = scenario
        .files
        .iter()
        .zip(&file_weight)
        .map(|(file, &w)| w - security_rhs(n, file.requests))
        .collect();
    let sec_tol = T::lit(SECURITY_TOL);
    let security_ok = security_slack.iter().map(|&s| s >= -sec_tol).collect();

    let mut rate_slack = Vec::with_capacity(f_count);
    let mut rate_ok = Vec::with_capacity(f_count);
    for (j, file) in scenario.files.iter().enumerate() {
        let rate = plan.rate(j, scenario.duration);
        let slack = (rate - file.r_min).min(file.r_max - rate);
        let nonneg = plan.file_sizes(j).iter().all(|&s| s >= T::zero());
        rate_slack.push(slack);
        rate_ok.push(slack >= -tol && nonneg && rate.is_finite());
    }

    Ok(FeasibilityReport {
        capacity_ok,
        capacity_slack,
        no_duplication_ok,
        duplication_slack,
        security_ok,
        security_slack,
        rate_ok,
        rate_slack,
        binary_ok,
    })
}

/// Per-file quality, penalty and QoE with their totals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown<T> {
    pub quality: Vec<T>,
    pub penalty: Vec<T>,
    pub qoe: Vec<T>,
    /// `Q = Σ_j (f_j − g_j)`.
    pub total: T,
    /// `Q / F`.
    pub mean_mos: T,
}

/// Joint QoE objective `Q = Σ_j [f_j − g_j]` (maximisation sense).
pub fn objective<T: Scalar, W: CacheWeights<T> + ?Sized>(
    scenario: &Scenario<T>,
    weights: &W,
    plan: &EncodingPlan<T>,
) -> Result<ObjectiveBreakdown<T>> {
    check_dims(scenario, weights, plan)?;
    let f_count = scenario.num_files();
    let mut quality = Vec::with_capacity(f_count);
    let mut penalty = Vec::with_capacity(f_count);
    let mut qoe = Vec::with_capacity(f_count);
    let mut total = T::zero();
    for j in 0..f_count {
        let f = encoding_quality(scenario.file(j), plan.file_total(j), scenario.duration);
        let g = file_latency_penalty(scenario, weights, plan, j);
        quality.push(f);
        penalty.push(g);
        qoe.push(f - g);
        total = total + (f - g);
    }
    Ok(ObjectiveBreakdown {
        quality,
        penalty,
        qoe,
        total,
        mean_mos: total / T::from_count(f_count),
    })
}

/// Popularity-weighted backhaul transfer time `Σ_j p_j·U_j / R_bk` in seconds.
pub fn transfer_latency<T: Scalar, W: CacheWeights<T> + ?Sized>(
    scenario: &Scenario<T>,
    weights: &W,
    plan: &EncodingPlan<T>,
) -> T {
    (0..scenario.num_files()).fold(T::zero(), |acc, j| {
        let u = uncached_volume(weights, plan, j).max(T::zero());
        acc + scenario.file(j).popularity * u / scenario.backhaul_rate
    })
}
