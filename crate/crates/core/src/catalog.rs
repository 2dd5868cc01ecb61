//! Problem instances: the video catalog, Zipf popularity, request counts and
//! server capacities, plus the two decision containers ([`Placement`] and
//! [`EncodingPlan`]) every solver produces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Popularity values must sum to one within this bound.
pub const POPULARITY_SUM_TOL: f64 = 1e-12;

/// Zipf request probabilities `p_j ∝ j^(-θ)` for `j = 1..=F`, normalised.
///
/// The result is strictly decreasing for `F ≥ 2`, so index 1 is the most
/// popular file.
pub fn zipf_popularity<T: Scalar>(num_files: usize, theta: T) -> Result<Vec<T>> {
    if num_files == 0 {
        return Err(Error::invalid("F", "at least one file is required"));
    }
    if !(theta > T::zero() && theta < T::one()) {
        return Err(Error::invalid(
            "theta",
            format!("must lie in (0, 1), got {theta}"),
        ));
    }
    let weights: Vec<T> = (1..=num_files)
        .map(|j| T::from_count(j).powf(-theta))
        .collect();
    let total = weights.iter().fold(T::zero(), |acc, &w| acc + w);
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// One encoded video: rate bounds, MOS polynomial and demand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoFile<T> {
    /// 1-based popularity rank.
    pub index: usize,
    /// 1-based index into the configured class list.
    pub class: usize,
    /// Minimum encoding rate (Mbps).
    pub r_min: T,
    /// Maximum encoding rate (Mbps).
    pub r_max: T,
    /// MOS polynomial coefficients `c1·r³ + c2·r² + c3·r + c4`.
    pub coeffs: [T; 4],
    /// Latency weighting coefficient.
    pub v: T,
    pub popularity: T,
    /// Expected request count `Ψ·p_j` (real valued).
    pub requests: T,
}

/// A complete problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario<T> {
    pub files: Vec<VideoFile<T>>,
    /// Packets per file (`n`).
    pub packets: usize,
    /// Per-server capacity (Mb); its length is the server count `K`.
    pub capacities: Vec<T>,
    /// File duration `T_d` (s).
    pub duration: T,
    /// Backhaul rate `R_bk` (Mbps).
    pub backhaul_rate: T,
    /// Total request count `Ψ`.
    pub total_requests: T,
    /// Zipf tilt `θ`.
    pub theta: T,
}

impl<T: Scalar> Scenario<T> {
    pub fn num_files(&self) -> usize {
        self.files.len()
    }

    pub fn num_servers(&self) -> usize {
        self.capacities.len()
    }

    /// `K·n·F`, the number of Boolean caching variables.
    pub fn placement_len(&self) -> usize {
        self.num_servers() * self.packets * self.num_files()
    }

    pub fn file(&self, j: usize) -> &VideoFile<T> {
        &self.files[j]
    }

    pub fn total_capacity(&self) -> T {
        self.capacities.iter().fold(T::zero(), |acc, &c| acc + c)
    }

    /// `Σ_j r_min_j·T_d`: the size of the whole catalog at minimum rates.
    pub fn min_catalog_volume(&self) -> T {
        self.files
            .iter()
            .fold(T::zero(), |acc, f| acc + f.r_min * self.duration)
    }

    /// `Σ_j r_max_j·T_d`.
    pub fn max_catalog_volume(&self) -> T {
        self.files
            .iter()
            .fold(T::zero(), |acc, f| acc + f.r_max * self.duration)
    }

    /// Same scenario with a different capacity vector.
    pub fn with_capacities(&self, capacities: Vec<T>) -> Result<Self> {
        let mut next = self.clone();
        next.capacities = capacities;
        next.validate()?;
        Ok(next)
    }

    /// Checks every structural invariant of the instance.
    pub fn validate(&self) -> Result<()> {
        if self.files.is_empty() {
            return Err(Error::invalid("F", "at least one file is required"));
        }
        if self.packets == 0 {
            return Err(Error::invalid("n", "must be a positive integer"));
        }
        if self.capacities.is_empty() {
            return Err(Error::invalid("K", "at least one server is required"));
        }
        for (k, &c) in self.capacities.iter().enumerate() {
            if !c.is_finite() || c < T::zero() {
                return Err(Error::invalid(
                    "capacities_mb",
                    format!(
                        "capacity of server {} must be finite and >= 0, got {c}",
                        k + 1
                    ),
                ));
            }
        }
        positive("T_d_s", self.duration)?;
        positive("R_bk_mbps", self.backhaul_rate)?;
        positive("total_requests", self.total_requests)?;
        let mut sum = T::zero();
        for (j, f) in self.files.iter().enumerate() {
            if f.index != j + 1 {
                return Err(Error::invalid(
                    "files",
                    "file indices must be 1..=F in order",
                ));
            }
            check_rates(f.r_min, f.r_max)?;
            if j > 0 && self.files[j - 1].popularity < f.popularity {
                return Err(Error::invalid(
                    "files",
                    "files must be sorted by non-increasing popularity",
                ));
            }
            sum = sum + f.popularity;
        }
        if (sum - T::one()).abs() > T::lit(1e-6).max(T::epsilon() * T::lit(64.0)) {
            return Err(Error::invalid(
                "files",
                format!("popularity sums to {sum}, not 1"),
            ));
        }
        Ok(())
    }
}

/// `Ψ_j = Ψ·p_j` for every file.
pub fn requests_per_file<T: Scalar>(scenario: &Scenario<T>) -> Vec<T> {
    scenario
        .files
        .iter()
        .map(|f| scenario.total_requests * f.popularity)
        .collect()
}

fn positive<T: Scalar>(field: &str, value: T) -> Result<()> {
    if value.is_finite() && value > T::zero() {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must be positive, got {value}"),
        ))
    }
}

fn check_rates<T: Scalar>(r_min: T, r_max: T) -> Result<()> {
    if !r_min.is_finite() || r_min <= T::zero() {
        return Err(Error::invalid(
            "r_min",
            format!("must be positive, got {r_min}"),
        ));
    }
    if !r_max.is_finite() || r_min > r_max {
        return Err(Error::invalid(
            "r_max",
            format!("r_min ({r_min}) must not exceed r_max ({r_max})"),
        ));
    }
    Ok(())
}

/// One encoding-rate class as written in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    /// Number of files in this class. Either all classes carry a count or none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    pub r_min: f64,
    pub r_max: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub v: f64,
}

/// Structured scenario description; see `configs/` for examples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "F")]
    pub num_files: usize,
    pub n: usize,
    #[serde(rename = "K")]
    pub num_servers: usize,
    /// One entry per server, or a single entry shared by all servers.
    pub capacities_mb: Vec<f64>,
    #[serde(rename = "T_d_s")]
    pub duration_s: f64,
    #[serde(rename = "R_bk_mbps")]
    pub backhaul_mbps: f64,
    pub total_requests: f64,
    pub theta: f64,
    pub classes: Vec<ClassConfig>,
    /// Optional explicit 1-based class per file, overriding class counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_classes: Option<Vec<usize>>,
}

impl ScenarioConfig {
    /// The reference catalog: 8 files split 4/2/2 over the three rate classes,
    /// `n = 20`, one server, `T_d = 2400 s`, `R_bk = 10 Gbps / F`, `θ = 0.8`.
    pub fn reference_catalog(capacity_mb: f64) -> Self {
        ScenarioConfig {
            num_files: 8,
            n: 20,
            num_servers: 1,
            capacities_mb: vec![capacity_mb],
            duration_s: 2400.0,
            backhaul_mbps: 10_000.0 / 8.0,
            total_requests: 100.0,
            theta: 0.8,
            classes: reference_classes(),
            file_classes: None,
        }
    }

    /// Per-file class indices (1-based) implied by this config.
    pub fn class_assignment(&self) -> Result<Vec<usize>> {
        let f = self.num_files;
        let nc = self.classes.len();
        if nc == 0 {
            return Err(Error::invalid("classes", "at least one class is required"));
        }
        if let Some(map) = &self.file_classes {
            if map.len() != f {
                return Err(Error::invalid(
                    "file_classes",
                    format!("expected {f} entries, got {}", map.len()),
                ));
            }
            if let Some(bad) = map.iter().find(|&&c| c == 0 || c > nc) {
                return Err(Error::invalid(
                    "file_classes",
                    format!("class {bad} outside 1..={nc}"),
                ));
            }
            return Ok(map.clone());
        }
        let counted = self.classes.iter().filter(|c| c.count.is_some()).count();
        let counts: Vec<usize> = if counted == nc {
            self.classes.iter().map(|c| c.count.unwrap_or(0)).collect()
        } else if counted == 0 && nc == 1 {
            vec![f]
        } else if counted == 0 && nc == 3 {
            if !f.is_multiple_of(4) {
                return Err(Error::invalid(
                    "F",
                    format!(
                        "default half/quarter/quarter class split needs F divisible by 4, got {f}"
                    ),
                ));
            }
            vec![f / 2, f / 4, f - f / 2 - f / 4]
        } else {
            return Err(Error::invalid(
                "classes.count",
                "give a count for every class, or for none (three-class default split)",
            ));
        };
        let total: usize = counts.iter().sum();
        if total != f {
            return Err(Error::invalid(
                "classes.count",
                format!("class counts sum to {total}, expected F = {f}"),
            ));
        }
        Ok(counts
            .iter()
            .enumerate()
            .flat_map(|(c, &cnt)| std::iter::repeat_n(c + 1, cnt))
            .collect())
    }

    /// Drops explicit class counts so the default split applies at a new `F`.
    pub fn with_num_files(&self, num_files: usize) -> Self {
        let mut next = self.clone();
        next.num_files = num_files;
        next.file_classes = None;
        for c in &mut next.classes {
            c.count = None;
        }
        next
    }

    /// Same config with `K` servers and the given capacity vector.
    pub fn with_capacities(&self, capacities_mb: Vec<f64>) -> Self {
        let mut next = self.clone();
        next.num_servers = capacities_mb.len().max(1);
        next.capacities_mb = capacities_mb;
        next
    }
}

/// Rate ranges and MOS coefficients of the three reference video classes, `V = 0.99`.
pub fn reference_classes() -> Vec<ClassConfig> {
    let class = |r_min, r_max, c1, c2, c3, c4| ClassConfig {
        count: None,
        r_min,
        r_max,
        c1,
        c2,
        c3,
        c4,
        v: 0.99,
    };
    vec![
        class(0.3, 0.7, 0.23, -1.5, 3.3, 2.5),
        class(1.0, 4.0, 0.0426, -0.4466, 1.6369, 1.8415),
        class(4.0, 8.0, 0.0027, -0.0669, 0.5842, 2.5248),
    ]
}

/// Builds and validates a [`Scenario`] from its config description.
pub fn build_scenario<T: Scalar>(config: &ScenarioConfig) -> Result<Scenario<T>> {
    if config.n == 0 {
        return Err(Error::invalid("n", "must be a positive integer"));
    }
    if config.num_servers == 0 {
        return Err(Error::invalid("K", "must be a positive integer"));
    }
    let capacities: Vec<f64> = match config.capacities_mb.len() {
        1 => vec![config.capacities_mb[0]; config.num_servers],
        len if len == config.num_servers => config.capacities_mb.clone(),
        len => {
            return Err(Error::invalid(
                "capacities_mb",
                format!(
                    "expected 1 or K = {} entries, got {len}",
                    config.num_servers
                ),
            ))
        }
    };
    for (name, value) in [
        ("T_d_s", config.duration_s),
        ("R_bk_mbps", config.backhaul_mbps),
        ("total_requests", config.total_requests),
    ] {
        positive(name, value)?;
    }
    for class in &config.classes {
        check_rates(class.r_min, class.r_max)?;
        if class.v.is_nan() || class.v < 0.0 {
            return Err(Error::invalid(
                "v",
                format!("must be >= 0, got {}", class.v),
            ));
        }
    }
    let assignment = config.class_assignment()?;
    let theta = T::lit(config.theta);
    let popularity = zipf_popularity(config.num_files, theta)?;
    let total_requests = T::lit(config.total_requests);
    let files = assignment
        .iter()
        .zip(&popularity)
        .enumerate()
        .map(|(j, (&class, &p))| {
            let c = &config.classes[class - 1];
            VideoFile {
                index: j + 1,
                class,
                r_min: T::lit(c.r_min),
                r_max: T::lit(c.r_max),
                coeffs: [T::lit(c.c1), T::lit(c.c2), T::lit(c.c3), T::lit(c.c4)],
                v: T::lit(c.v),
                popularity: p,
                requests: total_requests * p,
            }
        })
        .collect();
    let scenario = Scenario {
        files,
        packets: config.n,
        capacities: capacities.into_iter().map(T::lit).collect(),
        duration: T::lit(config.duration_s),
        backhaul_rate: T::lit(config.backhaul_mbps),
        total_requests,
        theta,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Boolean caching tensor `m̃[k,i,j]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Placement {
    servers: usize,
    packets: usize,
    files: usize,
    cached: Vec<bool>,
}

impl Placement {
    pub fn empty(servers: usize, packets: usize, files: usize) -> Self {
        Placement {
            servers,
            packets,
            files,
            cached: vec![false; servers * packets * files],
        }
    }

    pub fn empty_for<T: Scalar>(scenario: &Scenario<T>) -> Self {
        Self::empty(
            scenario.num_servers(),
            scenario.packets,
            scenario.num_files(),
        )
    }

    /// Every packet of every file on server 1.
    pub fn all_on_first_server<T: Scalar>(scenario: &Scenario<T>) -> Self {
        let mut p = Self::empty_for(scenario);
        for j in 0..p.files {
            for i in 0..p.packets {
                p.set(0, i, j, true);
            }
        }
        p
    }

    /// Flat layout shared with the relaxed solver: file-major, then packet, then server.
    #[inline]
    pub fn offset(&self, k: usize, i: usize, j: usize) -> usize {
        (j * self.packets + i) * self.servers + k
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> bool {
        self.cached[self.offset(k, i, j)]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, value: bool) {
        let o = self.offset(k, i, j);
        self.cached[o] = value;
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn packets(&self) -> usize {
        self.packets
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.cached
    }

    /// `m_kj = Σ_i m̃[k,i,j]`.
    pub fn server_count(&self, k: usize, j: usize) -> usize {
        (0..self.packets).filter(|&i| self.get(k, i, j)).count()
    }

    /// `Σ_k m_kj`.
    pub fn file_count(&self, j: usize) -> usize {
        let base = j * self.packets * self.servers;
        self.cached[base..base + self.packets * self.servers]
            .iter()
            .filter(|&&c| c)
            .count()
    }

    pub fn from_flags(
        servers: usize,
        packets: usize,
        files: usize,
        cached: Vec<bool>,
    ) -> Result<Self> {
        if cached.len() != servers * packets * files {
            return Err(Error::DimensionMismatch(format!(
                "placement has {} flags, expected {}",
                cached.len(),
                servers * packets * files
            )));
        }
        Ok(Placement {
            servers,
            packets,
            files,
            cached,
        })
    }

    pub fn matches<T: Scalar>(&self, scenario: &Scenario<T>) -> bool {
        self.servers == scenario.num_servers()
            && self.packets == scenario.packets
            && self.files == scenario.num_files()
    }
}

/// Packet-size matrix `s[i,j]` in Mb.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingPlan<T> {
    packets: usize,
    files: usize,
    sizes: Vec<T>,
}

impl<T: Scalar> EncodingPlan<T> {
    pub fn from_sizes(packets: usize, files: usize, sizes: Vec<T>) -> Result<Self> {
        if sizes.len() != packets * files {
            return Err(Error::DimensionMismatch(format!(
                "plan has {} sizes, expected {}",
                sizes.len(),
                packets * files
            )));
        }
        Ok(EncodingPlan {
            packets,
            files,
            sizes,
        })
    }

    /// Every file split into `n` equal packets at the given rates (Mbps).
    pub fn equal_split(scenario: &Scenario<T>, rates: &[T]) -> Result<Self> {
        if rates.len() != scenario.num_files() {
            return Err(Error::DimensionMismatch(format!(
                "{} rates for {} files",
                rates.len(),
                scenario.num_files()
            )));
        }
        let n = scenario.packets;
        let per = T::from_count(n);
        let sizes = rates
            .iter()
            .flat_map(|&r| std::iter::repeat_n(r * scenario.duration / per, n))
            .collect();
        Self::from_sizes(n, scenario.num_files(), sizes)
    }

    /// Equal split with every file at its minimum rate.
    pub fn at_min_rates(scenario: &Scenario<T>) -> Self {
        let rates: Vec<T> = scenario.files.iter().map(|f| f.r_min).collect();
        Self::equal_split(scenario, &rates).expect("rates sized to scenario")
    }

    /// Equal split with every file at its maximum rate.
    pub fn at_max_rates(scenario: &Scenario<T>) -> Self {
        let rates: Vec<T> = scenario.files.iter().map(|f| f.r_max).collect();
        Self::equal_split(scenario, &rates).expect("rates sized to scenario")
    }

    #[inline]
    pub fn size(&self, i: usize, j: usize) -> T {
        self.sizes[j * self.packets + i]
    }

    #[inline]
    pub fn set_size(&mut self, i: usize, j: usize, value: T) {
        self.sizes[j * self.packets + i] = value;
    }

    pub fn packets(&self) -> usize {
        self.packets
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn as_slice(&self) -> &[T] {
        &self.sizes
    }

    pub fn file_sizes(&self, j: usize) -> &[T] {
        &self.sizes[j * self.packets..(j + 1) * self.packets]
    }

    /// `Σ_i s[i,j]` (Mb).
    pub fn file_total(&self, j: usize) -> T {
        self.file_sizes(j).iter().fold(T::zero(), |acc, &s| acc + s)
    }

    /// Encoding rate of file `j` in Mbps.
    pub fn rate(&self, j: usize, duration: T) -> T {
        self.file_total(j) / duration
    }

    pub fn rates(&self, duration: T) -> Vec<T> {
        (0..self.files).map(|j| self.rate(j, duration)).collect()
    }

    pub fn matches(&self, scenario: &Scenario<T>) -> bool {
        self.packets == scenario.packets && self.files == scenario.num_files()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zipf_single_file_is_certain() {
        let p = zipf_popularity(1, 0.8_f64).unwrap();
        assert_eq!(p, vec![1.0]);
    }

    #[test]
    fn zipf_two_files() {
        // 1 / (1 + 2^-0.8) evaluated directly.
        let p = zipf_popularity(2, 0.8_f64).unwrap();
        assert_relative_eq!(p[0], 0.635183, epsilon = 1e-6);
        assert_relative_eq!(p[1], 0.364817, epsilon = 1e-6);
    }

    #[test]
    fn zipf_eight_files_simplex_and_decreasing() {
        let p = zipf_popularity(8, 0.8_f64).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < POPULARITY_SUM_TOL);
        assert!(p.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn zipf_rejects_bad_arguments() {
        assert!(zipf_popularity(0, 0.8_f64).is_err());
        assert!(zipf_popularity(4, 0.0_f64).is_err());
        assert!(zipf_popularity(4, 1.0_f64).is_err());
    }

    #[test]
    fn zipf_in_single_precision() {
        let p = zipf_popularity(2, 0.8_f32).unwrap();
        assert!((p[0] - 0.635183).abs() < 1e-5);
    }

    #[test]
    fn reference_catalog_minimum_catalog() {
        let s: Scenario<f64> = build_scenario(&ScenarioConfig::reference_catalog(26880.0)).unwrap();
        let classes: Vec<usize> = s.files.iter().map(|f| f.class).collect();
        assert_eq!(classes, vec![1, 1, 1, 1, 2, 2, 3, 3]);
        let sum_rmin: f64 = s.files.iter().map(|f| f.r_min).sum();
        assert_relative_eq!(sum_rmin, 11.2, epsilon = 1e-12);
        assert_relative_eq!(s.min_catalog_volume(), 26880.0, epsilon = 1e-9);
        assert_relative_eq!(s.max_catalog_volume(), 64320.0, epsilon = 1e-9);
    }

    #[test]
    fn requests_follow_popularity() {
        let mut cfg = ScenarioConfig::reference_catalog(1000.0);
        cfg.num_files = 1;
        cfg.classes.truncate(1);
        cfg.total_requests = 100.0;
        let s: Scenario<f64> = build_scenario(&cfg).unwrap();
        assert_eq!(requests_per_file(&s), vec![100.0]);

        cfg.num_files = 2;
        let s: Scenario<f64> = build_scenario(&cfg).unwrap();
        let r = requests_per_file(&s);
        assert_relative_eq!(r[0], 63.5183, epsilon = 1e-4);
        assert_relative_eq!(r[1], 36.4817, epsilon = 1e-4);

        let mut cfg = ScenarioConfig::reference_catalog(1000.0);
        cfg.total_requests = 50.0;
        let s: Scenario<f64> = build_scenario(&cfg).unwrap();
        assert!((requests_per_file(&s).iter().sum::<f64>() - 50.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_zero_packets() {
        let mut cfg = ScenarioConfig::reference_catalog(1000.0);
        cfg.n = 0;
        let err = build_scenario::<f64>(&cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument { ref field, .. } if field == "n"));
    }

    #[test]
    fn rejects_inverted_rates() {
        let mut cfg = ScenarioConfig::reference_catalog(1000.0);
        cfg.classes[0].r_min = 0.7;
        cfg.classes[0].r_max = 0.3;
        let err = build_scenario::<f64>(&cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument { ref field, .. } if field == "r_max"));
    }

    #[test]
    fn rejects_nonpositive_scalars() {
        for edit in [
            (|c: &mut ScenarioConfig| c.duration_s = 0.0) as fn(&mut ScenarioConfig),
            |c| c.backhaul_mbps = -1.0,
            |c| c.total_requests = 0.0,
        ] {
            let mut cfg = ScenarioConfig::reference_catalog(1000.0);
            edit(&mut cfg);
            assert!(build_scenario::<f64>(&cfg).is_err());
        }
    }

    #[test]
    fn explicit_class_map_and_counts() {
        let mut cfg = ScenarioConfig::reference_catalog(1000.0);
        cfg.file_classes = Some(vec![3, 3, 2, 2, 1, 1, 1, 1]);
        let s: Scenario<f64> = build_scenario(&cfg).unwrap();
        assert_eq!(s.files[0].r_min, 4.0);

        let mut cfg = ScenarioConfig::reference_catalog(1000.0);
        cfg.num_files = 6;
        for (c, n) in cfg.classes.iter_mut().zip([2, 2, 2]) {
            c.count = Some(n);
        }
        let s: Scenario<f64> = build_scenario(&cfg).unwrap();
        assert_eq!(s.files[2].class, 2);

        let mut cfg = ScenarioConfig::reference_catalog(1000.0);
        cfg.num_files = 6;
        assert!(build_scenario::<f64>(&cfg).is_err());
    }

    #[test]
    fn build_is_deterministic() {
        let cfg = ScenarioConfig::reference_catalog(21540.0);
        let a: Scenario<f64> = build_scenario(&cfg).unwrap();
        let b: Scenario<f64> = build_scenario(&cfg).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn placement_counts() {
        let mut p = Placement::empty(2, 3, 2);
        p.set(0, 0, 1, true);
        p.set(1, 2, 1, true);
        assert_eq!(p.file_count(1), 2);
        assert_eq!(p.file_count(0), 0);
        assert_eq!(p.server_count(1, 1), 1);
    }
}
