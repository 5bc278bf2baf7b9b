//! Instance generation, configuration and the plain-text instance format.
//!
//! Both file kinds are line-oriented: `#` starts a comment, `[name]` opens a
//! key-value section, `[matrix name rows cols]` opens a row-major numeric block.
//!
//! Instance files use SI units and appear in this fixed order:
//!
//! ```text
//! [dimensions]  sbs_count, user_count, file_count
//! [parameters]  bandwidth_hz, noise_power_w, pathloss_exponent, alpha,
//!               central_zone_radius_m, penalty_lambda
//! [sbs]         max_power_w, cache_capacity_bytes, backhaul_mean_s, load_coefficient
//! [files]       size_bytes, sinr_threshold
//! [users]       request_probability, requested_file
//! [matrix sbs_position_m B 2]
//! [matrix user_position_m U 2]
//! [matrix channel_gain U B]
//! [matrix preference U F]
//! ```
//!
//! List-valued keys hold whitespace-separated values. Floats are written in the
//! shortest exponent form that reads back to the same value, so equal instances
//! serialize to identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{dbm_to_watts, path_gain, DemandMatrix, Matrix, Point, Scenario, ScenarioParts};
use crate::popularity::{
    local_popularity, sample_demands, sample_preferences_with, PopularityTable, PreferenceMatrix,
};

const BYTES_PER_MB: f64 = 1e6;

/// Generation parameters in human units.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub sbs_count: usize,
    pub user_count: usize,
    pub file_count: usize,
    pub region_side_m: f64,
    pub cell_radius_m: f64,
    pub subchannel_count: usize,
    pub subchannel_bandwidth_khz: f64,
    pub max_power_dbm: f64,
    pub noise_density_dbm_per_hz: f64,
    pub file_size_min_mb: f64,
    pub file_size_max_mb: f64,
    pub sinr_min: f64,
    pub sinr_max: f64,
    pub pathloss_exponent: f64,
    pub min_distance_m: f64,
    pub central_zone_radius_m: f64,
    pub cache_capacity_mean_files: f64,
    pub cache_capacity_std_files: f64,
    pub backhaul_mean_min_s: f64,
    pub backhaul_mean_max_s: f64,
    pub preference_variance_min: f64,
    pub preference_variance_max: f64,
    pub alpha: f64,
    /// `None` derives `10 Pmax + sum_i tau_i + sum_j D_j` from the instance.
    pub penalty_lambda: Option<f64>,
}

impl Default for Config {
    fn default() -> Self {
        Self::full_scale()
    }
}

impl Config {
    /// 25 SBSs on a 250 m square, 600 files, 23 dBm, 200 kHz, -174 dBm/Hz.
    pub fn full_scale() -> Self {
        Self {
            sbs_count: 25,
            user_count: 150,
            file_count: 600,
            region_side_m: 250.0,
            cell_radius_m: 40.0,
            subchannel_count: 16,
            subchannel_bandwidth_khz: 200.0,
            max_power_dbm: 23.0,
            noise_density_dbm_per_hz: -174.0,
            file_size_min_mb: 0.5,
            file_size_max_mb: 50.0,
            sinr_min: 1.5,
            sinr_max: 5.0,
            pathloss_exponent: 3.0,
            min_distance_m: 1.0,
            central_zone_radius_m: 25.0,
            cache_capacity_mean_files: 15.0,
            cache_capacity_std_files: 3.0,
            backhaul_mean_min_s: 50.0,
            backhaul_mean_max_s: 150.0,
            preference_variance_min: 25.0,
            preference_variance_max: 2500.0,
            alpha: 0.5,
            penalty_lambda: None,
        }
    }

    /// Three SBSs and six users (729 associations), with noise raised so that
    /// energy and delay have comparable magnitudes.
    pub fn desk() -> Self {
        Self {
            sbs_count: 3,
            user_count: 6,
            file_count: 8,
            region_side_m: 100.0,
            noise_density_dbm_per_hz: -100.0,
            cache_capacity_mean_files: 2.0,
            cache_capacity_std_files: 1.0,
            backhaul_mean_min_s: 10.0,
            backhaul_mean_max_s: 30.0,
            preference_variance_min: 0.25,
            preference_variance_max: 4.0,
            ..Self::full_scale()
        }
    }

    /// Every violated constraint, or `Ok`.
    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                p.push(msg.to_string());
            }
        };
        need(self.sbs_count >= 1, "sbs_count must be at least 1");
        need(self.user_count >= 1, "user_count must be at least 1");
        need(self.file_count >= 1, "file_count must be at least 1");
        need(
            self.subchannel_count >= 1,
            "subchannel_count must be at least 1",
        );
        need(
            positive(self.region_side_m),
            "region_side_m must be positive",
        );
        need(
            positive(self.cell_radius_m),
            "cell_radius_m must be positive",
        );
        need(
            positive(self.subchannel_bandwidth_khz),
            "subchannel_bandwidth_khz must be positive",
        );
        need(
            self.max_power_dbm.is_finite(),
            "max_power_dbm must be finite",
        );
        need(
            self.noise_density_dbm_per_hz.is_finite(),
            "noise_density_dbm_per_hz must be finite",
        );
        need(
            positive(self.file_size_min_mb),
            "file_size_min_mb must be positive",
        );
        need(
            self.file_size_max_mb >= self.file_size_min_mb && self.file_size_max_mb.is_finite(),
            "file_size_max_mb must be finite and at least file_size_min_mb",
        );
        need(positive(self.sinr_min), "sinr_min must be positive");
        need(
            self.sinr_max >= self.sinr_min && self.sinr_max.is_finite(),
            "sinr_max must be finite and at least sinr_min",
        );
        need(
            (2.0..=5.0).contains(&self.pathloss_exponent),
            "pathloss_exponent must lie in [2, 5]",
        );
        need(
            positive(self.min_distance_m),
            "min_distance_m must be positive",
        );
        need(
            nonnegative(self.central_zone_radius_m),
            "central_zone_radius_m must be nonnegative",
        );
        need(
            nonnegative(self.cache_capacity_mean_files),
            "cache_capacity_mean_files must be nonnegative",
        );
        need(
            nonnegative(self.cache_capacity_std_files),
            "cache_capacity_std_files must be nonnegative",
        );
        need(
            nonnegative(self.backhaul_mean_min_s),
            "backhaul_mean_min_s must be nonnegative",
        );
        need(
            self.backhaul_mean_max_s >= self.backhaul_mean_min_s
                && self.backhaul_mean_max_s.is_finite(),
            "backhaul_mean_max_s must be finite and at least backhaul_mean_min_s",
        );
        need(
            positive(self.preference_variance_min),
            "preference_variance_min must be positive",
        );
        need(
            self.preference_variance_max >= self.preference_variance_min
                && self.preference_variance_max.is_finite(),
            "preference_variance_max must be finite and at least preference_variance_min",
        );
        need(
            (0.0..=1.0).contains(&self.alpha),
            "alpha must lie in [0, 1]",
        );
        need(
            self.penalty_lambda.is_none_or(positive),
            "penalty_lambda must be positive",
        );
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(p))
        }
    }

    pub fn mean_file_size_bytes(&self) -> f64 {
        0.5 * (self.file_size_min_mb + self.file_size_max_mb) * BYTES_PER_MB
    }

    /// Config text with every key, in declaration order.
    pub fn to_text(&self) -> String {
        let mut s = String::from("[config]\n");
        for (key, value) in self.entries() {
            let _ = writeln!(s, "{key} = {value}");
        }
        s
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("sbs_count", self.sbs_count.to_string()),
            ("user_count", self.user_count.to_string()),
            ("file_count", self.file_count.to_string()),
            ("region_side_m", fmt_f64(self.region_side_m)),
            ("cell_radius_m", fmt_f64(self.cell_radius_m)),
            ("subchannel_count", self.subchannel_count.to_string()),
            (
                "subchannel_bandwidth_khz",
                fmt_f64(self.subchannel_bandwidth_khz),
            ),
            ("max_power_dbm", fmt_f64(self.max_power_dbm)),
            (
                "noise_density_dbm_per_hz",
                fmt_f64(self.noise_density_dbm_per_hz),
            ),
            ("file_size_min_mb", fmt_f64(self.file_size_min_mb)),
            ("file_size_max_mb", fmt_f64(self.file_size_max_mb)),
            ("sinr_min", fmt_f64(self.sinr_min)),
            ("sinr_max", fmt_f64(self.sinr_max)),
            ("pathloss_exponent", fmt_f64(self.pathloss_exponent)),
            ("min_distance_m", fmt_f64(self.min_distance_m)),
            ("central_zone_radius_m", fmt_f64(self.central_zone_radius_m)),
            (
                "cache_capacity_mean_files",
                fmt_f64(self.cache_capacity_mean_files),
            ),
            (
                "cache_capacity_std_files",
                fmt_f64(self.cache_capacity_std_files),
            ),
            ("backhaul_mean_min_s", fmt_f64(self.backhaul_mean_min_s)),
            ("backhaul_mean_max_s", fmt_f64(self.backhaul_mean_max_s)),
            (
                "preference_variance_min",
                fmt_f64(self.preference_variance_min),
            ),
            (
                "preference_variance_max",
                fmt_f64(self.preference_variance_max),
            ),
            ("alpha", fmt_f64(self.alpha)),
            (
                "penalty_lambda",
                self.penalty_lambda.map_or("auto".into(), fmt_f64),
            ),
        ]
    }

    /// Parses a `[config]` section. An optional leading `preset = full|desk`
    /// selects the defaults; omitted keys keep them; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let sections = parse_sections(text)?;
        let section = sections.first().ok_or(Error::Parse {
            line: 1,
            message: "missing section [config]".into(),
        })?;
        if section.header() != "config" {
            return Err(Error::Parse {
                line: section.line,
                message: format!("expected [config], found [{}]", section.header()),
            });
        }
        if let Some(extra) = sections.get(1) {
            return Err(Error::Parse {
                line: extra.line,
                message: "config files hold a single [config] section".into(),
            });
        }
        let entries = section.entries()?;
        let mut config = Config::full_scale();
        let mut seen: Vec<&str> = Vec::new();
        for (idx, e) in entries.iter().enumerate() {
            if seen.contains(&e.key.as_str()) {
                return Err(e.error(format!("duplicate key {}", e.key)));
            }
            seen.push(&e.key);
            let c = &mut config;
            match e.key.as_str() {
                "preset" => {
                    if idx != 0 {
                        return Err(e.error("preset must be the first key".into()));
                    }
                    *c = match e.value.as_str() {
                        "full" => Config::full_scale(),
                        "desk" => Config::desk(),
                        other => return Err(e.error(format!("unknown preset {other}"))),
                    };
                }
                "sbs_count" => c.sbs_count = e.usize()?,
                "user_count" => c.user_count = e.usize()?,
                "file_count" => c.file_count = e.usize()?,
                "region_side_m" => c.region_side_m = e.f64()?,
                "cell_radius_m" => c.cell_radius_m = e.f64()?,
                "subchannel_count" => c.subchannel_count = e.usize()?,
                "subchannel_bandwidth_khz" => c.subchannel_bandwidth_khz = e.f64()?,
                "max_power_dbm" => c.max_power_dbm = e.f64()?,
                "noise_density_dbm_per_hz" => c.noise_density_dbm_per_hz = e.f64()?,
                "file_size_min_mb" => c.file_size_min_mb = e.f64()?,
                "file_size_max_mb" => c.file_size_max_mb = e.f64()?,
                "sinr_min" => c.sinr_min = e.f64()?,
                "sinr_max" => c.sinr_max = e.f64()?,
                "pathloss_exponent" => c.pathloss_exponent = e.f64()?,
                "min_distance_m" => c.min_distance_m = e.f64()?,
                "central_zone_radius_m" => c.central_zone_radius_m = e.f64()?,
                "cache_capacity_mean_files" => c.cache_capacity_mean_files = e.f64()?,
                "cache_capacity_std_files" => c.cache_capacity_std_files = e.f64()?,
                "backhaul_mean_min_s" => c.backhaul_mean_min_s = e.f64()?,
                "backhaul_mean_max_s" => c.backhaul_mean_max_s = e.f64()?,
                "preference_variance_min" => c.preference_variance_min = e.f64()?,
                "preference_variance_max" => c.preference_variance_max = e.f64()?,
                "alpha" => c.alpha = e.f64()?,
                "penalty_lambda" => {
                    c.penalty_lambda = if e.value == "auto" {
                        None
                    } else {
                        Some(e.f64()?)
                    }
                }
                other => return Err(e.error(format!("unknown key {other}"))),
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn nonnegative(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

/// A generated or loaded network instance with its users' preferences and requests.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub scenario: Scenario,
    pub preferences: PreferenceMatrix,
    pub demands: DemandMatrix,
}

impl Instance {
    pub fn popularity(&self) -> PopularityTable {
        local_popularity(&self.scenario, &self.preferences)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let s = &self.scenario;
        let mut out = String::from("# cachenet instance\n[dimensions]\n");
        let _ = writeln!(out, "sbs_count = {}", s.sbs_count());
        let _ = writeln!(out, "user_count = {}", s.user_count());
        let _ = writeln!(out, "file_count = {}", s.file_count());
        out.push_str("[parameters]\n");
        for (k, v) in [
            ("bandwidth_hz", s.bandwidth()),
            ("noise_power_w", s.noise_power()),
            ("pathloss_exponent", s.pathloss_exponent()),
            ("alpha", s.alpha()),
            ("central_zone_radius_m", s.central_zone_radius()),
            ("penalty_lambda", s.penalty_lambda()),
        ] {
            let _ = writeln!(out, "{k} = {}", fmt_f64(v));
        }
        out.push_str("[sbs]\n");
        write_list(&mut out, "max_power_w", s.max_power());
        write_list(&mut out, "cache_capacity_bytes", s.cache_capacity());
        write_list(&mut out, "backhaul_mean_s", s.backhaul_mean());
        write_list(&mut out, "load_coefficient", s.load_coefficients());
        out.push_str("[files]\n");
        write_list(&mut out, "size_bytes", s.file_sizes());
        write_list(&mut out, "sinr_threshold", s.sinr_thresholds());
        out.push_str("[users]\n");
        write_list(
            &mut out,
            "request_probability",
            &self.preferences.request_prob,
        );
        let requested: Vec<String> = self
            .demands
            .requests()
            .iter()
            .map(|k| k.to_string())
            .collect();
        let _ = writeln!(out, "requested_file = {}", requested.join(" "));
        let points = |ps: &[Point]| {
            Matrix::from_fn(ps.len(), 2, |i, c| if c == 0 { ps[i].x } else { ps[i].y })
        };
        write_matrix(&mut out, "sbs_position_m", &points(s.sbs_positions()));
        write_matrix(&mut out, "user_position_m", &points(s.user_positions()));
        write_matrix(&mut out, "channel_gain", s.gains());
        write_matrix(&mut out, "preference", &self.preferences.rho);
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let sections = parse_sections(text)?;
        let mut reader = SectionReader {
            sections: &sections,
            next: 0,
            last_line: text.lines().count(),
        };

        let dims = reader.keyed("dimensions", &["sbs_count", "user_count", "file_count"])?;
        let b = dims[0].usize()?;
        let u = dims[1].usize()?;
        let f = dims[2].usize()?;

        let params = reader.keyed(
            "parameters",
            &[
                "bandwidth_hz",
                "noise_power_w",
                "pathloss_exponent",
                "alpha",
                "central_zone_radius_m",
                "penalty_lambda",
            ],
        )?;
        let sbs = reader.keyed(
            "sbs",
            &[
                "max_power_w",
                "cache_capacity_bytes",
                "backhaul_mean_s",
                "load_coefficient",
            ],
        )?;
        let files = reader.keyed("files", &["size_bytes", "sinr_threshold"])?;
        let users = reader.keyed("users", &["request_probability", "requested_file"])?;
        let sbs_pos = reader.matrix("sbs_position_m", b, 2)?;
        let user_pos = reader.matrix("user_position_m", u, 2)?;
        let gains = reader.matrix("channel_gain", u, b)?;
        let rho = reader.matrix("preference", u, f)?;
        reader.finish()?;

        let to_points = |m: &Matrix| {
            m.iter_rows()
                .map(|r| Point::new(r[0], r[1]))
                .collect::<Vec<_>>()
        };
        let requested = users[1].usize_list(u)?;
        let parts = ScenarioParts {
            sbs_positions: to_points(&sbs_pos),
            user_positions: to_points(&user_pos),
            max_power: sbs[0].f64_list(b)?,
            cache_capacity: sbs[1].f64_list(b)?,
            backhaul_mean: sbs[2].f64_list(b)?,
            load_coefficients: sbs[3].f64_list(b)?,
            file_sizes: files[0].f64_list(f)?,
            sinr_thresholds: files[1].f64_list(f)?,
            bandwidth: params[0].f64()?,
            noise_power: params[1].f64()?,
            pathloss_exponent: params[2].f64()?,
            channel_gains: gains,
            alpha: params[3].f64()?,
            central_zone_radius: params[4].f64()?,
            penalty_lambda: params[5].f64()?,
        };
        let scenario = Scenario::new(parts)?;
        let preferences = PreferenceMatrix::new(rho, users[0].f64_list(u)?)?;
        let demands = DemandMatrix::new(requested, f)?;
        Ok(Instance {
            scenario,
            preferences,
            demands,
        })
    }
}

/// `10 max_j Pmax_j + sum_i tau_{k_i} + sum_j D_j`.
pub fn default_penalty_lambda(scenario: &Scenario, demands: &DemandMatrix) -> f64 {
    let pmax = scenario.max_power().iter().fold(0.0f64, |m, &p| m.max(p));
    let tau: f64 = demands
        .requests()
        .iter()
        .map(|&k| scenario.relaxed_tau(k))
        .sum();
    10.0 * pmax + tau + scenario.backhaul_mean().iter().sum::<f64>()
}

/// SBS centres of a `ceil(sqrt(B))`-column grid of equal cells over the square.
pub fn grid_positions(count: usize, side: f64) -> Vec<Point> {
    let cols = (count as f64).sqrt().ceil().max(1.0) as usize;
    let rows = count.div_ceil(cols).max(1);
    let (w, h) = (side / cols as f64, side / rows as f64);
    (0..count)
        .map(|j| Point::new(((j % cols) as f64 + 0.5) * w, ((j / cols) as f64 + 0.5) * h))
        .collect()
}

/// Draws a complete instance; the same `(config, seed)` always gives the same instance.
pub fn generate(config: &Config, seed: u64) -> Result<Instance> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (b, u, f) = (config.sbs_count, config.user_count, config.file_count);
    let side = config.region_side_m;
    let sbs_positions = grid_positions(b, side);
    let user_positions: Vec<Point> = (0..u)
        .map(|_| Point::new(rng.random_range(0.0..=side), rng.random_range(0.0..=side)))
        .collect();
    let channel_gains = Matrix::from_fn(u, b, |i, j| {
        let d = user_positions[i].distance(&sbs_positions[j]);
        path_gain(d.max(config.min_distance_m), config.pathloss_exponent)
    });
    let uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
        if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        }
    };
    let file_sizes: Vec<f64> = (0..f)
        .map(|_| uniform(&mut rng, config.file_size_min_mb, config.file_size_max_mb) * BYTES_PER_MB)
        .collect();
    let sinr_thresholds: Vec<f64> = (0..f)
        .map(|_| uniform(&mut rng, config.sinr_min, config.sinr_max))
        .collect();
    let capacity_files = Normal::new(
        config.cache_capacity_mean_files,
        config.cache_capacity_std_files,
    )
    .map_err(|e| Error::InvalidConfig(vec![format!("cache capacity distribution: {e}")]))?;
    let cache_capacity: Vec<f64> = (0..b)
        .map(|_| capacity_files.sample(&mut rng).max(0.0) * config.mean_file_size_bytes())
        .collect();
    let backhaul_mean: Vec<f64> = (0..b)
        .map(|_| {
            uniform(
                &mut rng,
                config.backhaul_mean_min_s,
                config.backhaul_mean_max_s,
            )
        })
        .collect();
    let preference_seed: u64 = rng.random();
    let demand_seed: u64 = rng.random();

    let bandwidth = config.subchannel_bandwidth_khz * 1e3;
    let parts = ScenarioParts {
        sbs_positions,
        user_positions,
        max_power: vec![dbm_to_watts(config.max_power_dbm); b],
        cache_capacity,
        backhaul_mean,
        load_coefficients: vec![1.0 / b as f64; b],
        file_sizes,
        sinr_thresholds,
        bandwidth,
        noise_power: dbm_to_watts(config.noise_density_dbm_per_hz) * bandwidth,
        pathloss_exponent: config.pathloss_exponent,
        channel_gains,
        alpha: config.alpha,
        central_zone_radius: config.central_zone_radius_m,
        penalty_lambda: config.penalty_lambda.unwrap_or(1.0),
    };
    let scenario = Scenario::new(parts)?;
    let preferences = sample_preferences_with(
        &scenario,
        (
            config.preference_variance_min,
            config.preference_variance_max,
        ),
        preference_seed,
    );
    let popularity = local_popularity(&scenario, &preferences);
    let demands = sample_demands(&scenario, &preferences, &popularity, demand_seed);
    let scenario = match config.penalty_lambda {
        Some(_) => scenario,
        None => {
            let lambda = default_penalty_lambda(&scenario, &demands);
            let mut parts = scenario.into_parts();
            parts.penalty_lambda = lambda;
            Scenario::new(parts)?
        }
    };
    Ok(Instance {
        scenario,
        preferences,
        demands,
    })
}

/// Shortest round-trip representation in exponent form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

fn write_list(out: &mut String, key: &str, values: &[f64]) {
    let joined: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
    let _ = writeln!(out, "{key} = {}", joined.join(" "));
}

fn write_matrix(out: &mut String, name: &str, m: &Matrix) {
    let _ = writeln!(out, "[matrix {name} {} {}]", m.rows(), m.cols());
    for row in m.iter_rows() {
        let joined: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(out, "{}", joined.join(" "));
    }
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

impl Entry {
    fn error(&self, message: String) -> Error {
        Error::Parse {
            line: self.line,
            message,
        }
    }

    fn f64(&self) -> Result<f64> {
        self.value
            .parse()
            .map_err(|_| self.error(format!("{}: '{}' is not a number", self.key, self.value)))
    }

    fn usize(&self) -> Result<usize> {
        self.value.parse().map_err(|_| {
            self.error(format!(
                "{}: '{}' is not a nonnegative integer",
                self.key, self.value
            ))
        })
    }

    fn tokens(&self, expected: usize) -> Result<Vec<&str>> {
        let t: Vec<&str> = self.value.split_whitespace().collect();
        if t.len() != expected {
            return Err(self.error(format!(
                "{}: expected {expected} values, found {}",
                self.key,
                t.len()
            )));
        }
        Ok(t)
    }

    fn f64_list(&self, expected: usize) -> Result<Vec<f64>> {
        self.tokens(expected)?
            .into_iter()
            .map(|t| {
                t.parse()
                    .map_err(|_| self.error(format!("{}: '{t}' is not a number", self.key)))
            })
            .collect()
    }

    fn usize_list(&self, expected: usize) -> Result<Vec<usize>> {
        self.tokens(expected)?
            .into_iter()
            .map(|t| {
                t.parse()
                    .map_err(|_| self.error(format!("{}: '{t}' is not an index", self.key)))
            })
            .collect()
    }
}

struct Section {
    line: usize,
    name: String,
    args: Vec<String>,
    body: Vec<(usize, String)>,
}

impl Section {
    fn header(&self) -> String {
        std::iter::once(self.name.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn entries(&self) -> Result<Vec<Entry>> {
        self.body
            .iter()
            .map(|(line, text)| match text.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => Ok(Entry {
                    line: *line,
                    key: k.trim().to_string(),
                    value: v.trim().to_string(),
                }),
                _ => Err(Error::Parse {
                    line: *line,
                    message: format!("expected 'key = value' in [{}]", self.header()),
                }),
            })
            .collect()
    }
}

fn parse_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(inner) = content.strip_prefix('[') {
            let inner = inner.strip_suffix(']').ok_or(Error::Parse {
                line,
                message: "unterminated section header".into(),
            })?;
            let mut words = inner.split_whitespace().map(str::to_string);
            let name = words.next().ok_or(Error::Parse {
                line,
                message: "empty section header".into(),
            })?;
            sections.push(Section {
                line,
                name,
                args: words.collect(),
                body: Vec::new(),
            });
        } else {
            match sections.last_mut() {
                Some(s) => s.body.push((line, content.to_string())),
                None => {
                    return Err(Error::Parse {
                        line,
                        message: "content before the first section".into(),
                    })
                }
            }
        }
    }
    Ok(sections)
}

struct SectionReader<'a> {
    sections: &'a [Section],
    next: usize,
    last_line: usize,
}

impl<'a> SectionReader<'a> {
    fn take(&mut self, header: &str) -> Result<&'a Section> {
        let s = self.sections.get(self.next).ok_or(Error::Parse {
            line: self.last_line,
            message: format!("missing section [{header}]"),
        })?;
        self.next += 1;
        Ok(s)
    }

    fn keyed(&mut self, name: &str, keys: &[&str]) -> Result<Vec<Entry>> {
        let s = self.take(name)?;
        if s.name != name || !s.args.is_empty() {
            return Err(Error::Parse {
                line: s.line,
                message: format!("expected section [{name}], found [{}]", s.header()),
            });
        }
        let entries = s.entries()?;
        for (pos, e) in entries.iter().enumerate() {
            if !keys.contains(&e.key.as_str()) {
                return Err(e.error(format!("unknown key {} in [{name}]", e.key)));
            }
            if keys.get(pos) != Some(&e.key.as_str()) {
                return Err(e.error(format!(
                    "key {} out of order in [{name}]; expected order: {}",
                    e.key,
                    keys.join(", ")
                )));
            }
        }
        if entries.len() < keys.len() {
            return Err(Error::Parse {
                line: s.line,
                message: format!("missing key {} in [{name}]", keys[entries.len()]),
            });
        }
        Ok(entries)
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<Matrix> {
        let header = format!("matrix {name} {rows} {cols}");
        let s = self.take(&header)?;
        if s.header() != header {
            return Err(Error::Parse {
                line: s.line,
                message: format!("expected section [{header}], found [{}]", s.header()),
            });
        }
        if s.body.len() != rows {
            return Err(Error::Parse {
                line: s.line,
                message: format!("[{header}] has {} rows, expected {rows}", s.body.len()),
            });
        }
        let mut data = Vec::with_capacity(rows);
        for (line, text) in &s.body {
            let row: Vec<f64> = text
                .split_whitespace()
                .map(|t| {
                    t.parse().map_err(|_| Error::Parse {
                        line: *line,
                        message: format!("'{t}' is not a number"),
                    })
                })
                .collect::<Result<_>>()?;
            if row.len() != cols {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("row has {} values, expected {cols}", row.len()),
                });
            }
            data.push(row);
        }
        if rows == 0 {
            return Ok(Matrix::zeros(0, cols));
        }
        Matrix::from_rows(&data)
    }

    fn finish(&self) -> Result<()> {
        match self.sections.get(self.next) {
            None => Ok(()),
            Some(s) => Err(Error::Parse {
                line: s.line,
                message: format!("unexpected section [{}]", s.header()),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        Config::full_scale().validate().unwrap();
        Config::desk().validate().unwrap();
    }

    #[test]
    fn validation_lists_every_problem() {
        let c = Config {
            file_size_min_mb: -1.0,
            pathloss_exponent: 6.0,
            alpha: 2.0,
            ..Config::desk()
        };
        match c.validate() {
            Err(Error::InvalidConfig(p)) => assert_eq!(p.len(), 3, "{p:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_layout() {
        let p = grid_positions(4, 100.0);
        assert_eq!(p[0], Point::new(25.0, 25.0));
        assert_eq!(p[3], Point::new(75.0, 75.0));
        let p = grid_positions(3, 100.0);
        assert_eq!(p[2], Point::new(25.0, 75.0));
        assert_eq!(grid_positions(1, 10.0)[0], Point::new(5.0, 5.0));
    }

    #[test]
    fn generation_is_deterministic_and_round_trips() {
        let a = generate(&Config::desk(), 7).unwrap();
        let b = generate(&Config::desk(), 7).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let back = Instance::parse(&a.to_text()).unwrap();
        assert_eq!(back, a);
        assert_ne!(generate(&Config::desk(), 8).unwrap().to_text(), a.to_text());
    }

    #[test]
    fn lambda_follows_formula() {
        let inst = generate(&Config::desk(), 3).unwrap();
        let expected = default_penalty_lambda(&inst.scenario, &inst.demands);
        assert_eq!(inst.scenario.penalty_lambda(), expected);
        let fixed = generate(
            &Config {
                penalty_lambda: Some(5.0),
                ..Config::desk()
            },
            3,
        )
        .unwrap();
        assert_eq!(fixed.scenario.penalty_lambda(), 5.0);
    }

    #[test]
    fn config_text_round_trips() {
        let c = Config::desk();
        assert_eq!(Config::parse(&c.to_text()).unwrap(), c);
        let p = Config::parse("[config]\npreset = desk\nuser_count = 4\n").unwrap();
        assert_eq!(p.user_count, 4);
        assert_eq!(p.sbs_count, 3);
        assert_eq!(Config::parse("[config]\n").unwrap(), Config::full_scale());
    }

    #[test]
    fn config_rejects_unknown_and_misplaced_keys() {
        assert!(matches!(
            Config::parse("[config]\nbogus = 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(Config::parse("[config]\nuser_count = 4\npreset = desk\n").is_err());
        assert!(matches!(
            Config::parse("[config]\nalpha = 3\n"),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn truncated_instance_names_missing_section() {
        let text = generate(&Config::desk(), 1).unwrap().to_text();
        let cut = text.split("[matrix channel_gain").next().unwrap();
        match Instance::parse(cut) {
            Err(Error::Parse { message, .. }) => {
                assert!(message.contains("channel_gain"), "{message}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_instance_key_is_rejected() {
        let text = generate(&Config::desk(), 1)
            .unwrap()
            .to_text()
            .replace("alpha = ", "beta = ");
        match Instance::parse(&text) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("unknown key beta")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn full_scale_preset_values() {
        let inst = generate(&Config::full_scale(), 1).unwrap();
        let s = &inst.scenario;
        assert_eq!(
            (s.sbs_count(), s.user_count(), s.file_count()),
            (25, 150, 600)
        );
        assert!((s.max_power()[0] - 0.19952623149688797).abs() < 1e-15);
        assert_eq!(s.bandwidth(), 2e5);
        let expected_noise = dbm_to_watts(-174.0) * 2e5;
        assert!((s.noise_power() - expected_noise).abs() < 1e-30);
        assert!(s.file_sizes().iter().all(|&v| (0.5e6..=50e6).contains(&v)));
        assert!(s
            .sinr_thresholds()
            .iter()
            .all(|&g| (1.5..=5.0).contains(&g)));
    }
}
