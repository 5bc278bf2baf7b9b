//! Network instance types and the physical-layer, delay and energy formulas.
//!
//! All quantities are linear-scale SI: watts, hertz, seconds, bytes. File sizes
//! are kept in bytes and converted to bits wherever they meet a rate.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

pub const BITS_PER_BYTE: f64 = 8.0;

/// Relative slack accepted by [`check_feasible`] on SINR and power bounds.
pub const FEASIBILITY_RTOL: f64 = 1e-6;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Distance-dependent path gain `d^-kappa`.
pub fn path_gain(distance: f64, kappa: f64) -> f64 {
    distance.powf(-kappa)
}

/// Minimum SINR that sustains `rate` bit/s on a channel of `bandwidth` Hz.
pub fn sinr_for_rate(rate: f64, bandwidth: f64) -> f64 {
    (rate / bandwidth).exp2() - 1.0
}

/// Raw inputs of a [`Scenario`]. Rate requirements are derived, never supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParts {
    pub sbs_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    pub max_power: Vec<f64>,
    pub cache_capacity: Vec<f64>,
    pub backhaul_mean: Vec<f64>,
    pub load_coefficients: Vec<f64>,
    pub file_sizes: Vec<f64>,
    pub sinr_thresholds: Vec<f64>,
    pub bandwidth: f64,
    pub noise_power: f64,
    pub pathloss_exponent: f64,
    /// `U x B`; usually `distance^-kappa`, but hand-built instances may set anything positive.
    pub channel_gains: Matrix,
    pub alpha: f64,
    pub central_zone_radius: f64,
    pub penalty_lambda: f64,
}

/// An immutable network instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    parts: ScenarioParts,
    rate_requirements: Vec<f64>,
}

impl Scenario {
    pub fn new(parts: ScenarioParts) -> Result<Self> {
        let problems = validate_parts(&parts);
        if !problems.is_empty() {
            return Err(Error::InvalidConfig(problems));
        }
        let rate_requirements = parts
            .sinr_thresholds
            .iter()
            .map(|&g| parts.bandwidth * (1.0 + g).log2())
            .collect();
        Ok(Self {
            parts,
            rate_requirements,
        })
    }

    pub fn parts(&self) -> &ScenarioParts {
        &self.parts
    }

    pub fn into_parts(self) -> ScenarioParts {
        self.parts
    }

    pub fn sbs_count(&self) -> usize {
        self.parts.sbs_positions.len()
    }

    pub fn user_count(&self) -> usize {
        self.parts.user_positions.len()
    }

    pub fn file_count(&self) -> usize {
        self.parts.file_sizes.len()
    }

    pub fn sbs_positions(&self) -> &[Point] {
        &self.parts.sbs_positions
    }

    pub fn user_positions(&self) -> &[Point] {
        &self.parts.user_positions
    }

    pub fn max_power(&self) -> &[f64] {
        &self.parts.max_power
    }

    pub fn cache_capacity(&self) -> &[f64] {
        &self.parts.cache_capacity
    }

    pub fn backhaul_mean(&self) -> &[f64] {
        &self.parts.backhaul_mean
    }

    pub fn load_coefficients(&self) -> &[f64] {
        &self.parts.load_coefficients
    }

    pub fn file_sizes(&self) -> &[f64] {
        &self.parts.file_sizes
    }

    pub fn sinr_thresholds(&self) -> &[f64] {
        &self.parts.sinr_thresholds
    }

    pub fn rate_requirements(&self) -> &[f64] {
        &self.rate_requirements
    }

    pub fn bandwidth(&self) -> f64 {
        self.parts.bandwidth
    }

    pub fn noise_power(&self) -> f64 {
        self.parts.noise_power
    }

    pub fn pathloss_exponent(&self) -> f64 {
        self.parts.pathloss_exponent
    }

    pub fn gains(&self) -> &Matrix {
        &self.parts.channel_gains
    }

    pub fn gain(&self, user: usize, sbs: usize) -> f64 {
        self.parts.channel_gains[(user, sbs)]
    }

    pub fn alpha(&self) -> f64 {
        self.parts.alpha
    }

    pub fn central_zone_radius(&self) -> f64 {
        self.parts.central_zone_radius
    }

    pub fn penalty_lambda(&self) -> f64 {
        self.parts.penalty_lambda
    }

    /// Relaxed wireless delay `s_k / R_k` in seconds.
    pub fn relaxed_tau(&self, file: usize) -> f64 {
        self.parts.file_sizes[file] * BITS_PER_BYTE / self.rate_requirements[file]
    }

    pub fn total_catalog_size(&self) -> f64 {
        self.parts.file_sizes.iter().sum()
    }

    pub fn distance(&self, user: usize, sbs: usize) -> f64 {
        self.parts.user_positions[user].distance(&self.parts.sbs_positions[sbs])
    }

    /// Returns a copy with every cache capacity replaced.
    pub fn with_cache_capacity(&self, capacity: Vec<f64>) -> Result<Self> {
        let mut parts = self.parts.clone();
        parts.cache_capacity = capacity;
        Self::new(parts)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let mut parts = self.parts.clone();
        parts.alpha = alpha;
        Self::new(parts)
    }

    pub(crate) fn check_user(&self, user: usize) -> Result<()> {
        check_index("user", user, self.user_count())
    }

    pub(crate) fn check_sbs(&self, sbs: usize) -> Result<()> {
        check_index("sbs", sbs, self.sbs_count())
    }

    pub(crate) fn check_file(&self, file: usize) -> Result<()> {
        check_index("file", file, self.file_count())
    }
}

fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { what, index, len })
    }
}

fn validate_parts(p: &ScenarioParts) -> Vec<String> {
    let mut out = Vec::new();
    let b = p.sbs_positions.len();
    let u = p.user_positions.len();
    let f = p.file_sizes.len();
    if b == 0 {
        out.push("sbs_count must be positive".to_string());
    }
    if u == 0 {
        out.push("user_count must be positive".to_string());
    }
    if f == 0 {
        out.push("file_count must be positive".to_string());
    }
    let per_sbs: [(&str, &Vec<f64>); 4] = [
        ("max_power", &p.max_power),
        ("cache_capacity", &p.cache_capacity),
        ("backhaul_mean", &p.backhaul_mean),
        ("load_coefficients", &p.load_coefficients),
    ];
    for (name, v) in per_sbs {
        if v.len() != b {
            out.push(format!("{name} has {} entries, expected {b}", v.len()));
        }
    }
    if p.sinr_thresholds.len() != f {
        out.push(format!(
            "sinr_thresholds has {} entries, expected {f}",
            p.sinr_thresholds.len()
        ));
    }
    let positive = |name: &str, v: &[f64], out: &mut Vec<String>| {
        if let Some((i, x)) = v
            .iter()
            .enumerate()
            .find(|(_, x)| !(x.is_finite() && **x > 0.0))
        {
            out.push(format!("{name}[{i}] = {x} must be finite and positive"));
        }
    };
    positive("max_power", &p.max_power, &mut out);
    positive("backhaul_mean", &p.backhaul_mean, &mut out);
    positive("load_coefficients", &p.load_coefficients, &mut out);
    positive("file_sizes", &p.file_sizes, &mut out);
    positive("sinr_thresholds", &p.sinr_thresholds, &mut out);
    if let Some((j, c)) = p
        .cache_capacity
        .iter()
        .enumerate()
        .find(|(_, c)| !(c.is_finite() && **c >= 0.0))
    {
        out.push(format!(
            "cache_capacity[{j}] = {c} must be finite and non-negative"
        ));
    }
    let beta_sum: f64 = p.load_coefficients.iter().sum();
    if (beta_sum - 1.0).abs() > 1e-9 {
        out.push(format!("load_coefficients sum to {beta_sum}, expected 1"));
    }
    for (name, x) in [
        ("bandwidth", p.bandwidth),
        ("noise_power", p.noise_power),
        ("penalty_lambda", p.penalty_lambda),
    ] {
        if !(x.is_finite() && x > 0.0) {
            out.push(format!("{name} = {x} must be finite and positive"));
        }
    }
    if !(2.0..=5.0).contains(&p.pathloss_exponent) {
        out.push(format!(
            "pathloss_exponent = {} outside [2, 5]",
            p.pathloss_exponent
        ));
    }
    if !(0.0..=1.0).contains(&p.alpha) {
        out.push(format!("alpha = {} outside [0, 1]", p.alpha));
    }
    if !(p.central_zone_radius.is_finite() && p.central_zone_radius >= 0.0) {
        out.push(format!(
            "central_zone_radius = {} must be non-negative",
            p.central_zone_radius
        ));
    }
    if p.channel_gains.rows() != u || p.channel_gains.cols() != b {
        out.push(format!(
            "channel_gains is {}x{}, expected {u}x{b}",
            p.channel_gains.rows(),
            p.channel_gains.cols()
        ));
    } else if let Some(g) = p
        .channel_gains
        .as_slice()
        .iter()
        .find(|g| !(g.is_finite() && **g > 0.0))
    {
        out.push(format!("channel gain {g} must be finite and positive"));
    }
    let coords = p.sbs_positions.iter().chain(&p.user_positions);
    if coords
        .clone()
        .any(|pt| !(pt.x.is_finite() && pt.y.is_finite()))
    {
        out.push("positions must be finite".to_string());
    }
    out
}

/// Which file each user requests; every user requests exactly one file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandMatrix {
    file_count: usize,
    requests: Vec<usize>,
}

impl DemandMatrix {
    pub fn new(requests: Vec<usize>, file_count: usize) -> Result<Self> {
        if let Some(&k) = requests.iter().find(|&&k| k >= file_count) {
            return Err(Error::IndexOutOfRange {
                what: "file",
                index: k,
                len: file_count,
            });
        }
        Ok(Self {
            file_count,
            requests,
        })
    }

    /// Builds from a binary `U x F` matrix whose rows each sum to one.
    pub fn from_matrix(theta: &Matrix) -> Result<Self> {
        let mut requests = Vec::with_capacity(theta.rows());
        for (i, row) in theta.iter_rows().enumerate() {
            if row.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::InvalidInput(format!("demand row {i} is not binary")));
            }
            let ones: Vec<usize> = (0..row.len()).filter(|&k| row[k] == 1.0).collect();
            if ones.len() != 1 {
                return Err(Error::InvalidInput(format!(
                    "demand row {i} sums to {}, expected 1",
                    ones.len()
                )));
            }
            requests.push(ones[0]);
        }
        Ok(Self {
            file_count: theta.cols(),
            requests,
        })
    }

    pub fn user_count(&self) -> usize {
        self.requests.len()
    }

    pub fn file_count(&self) -> usize {
        self.file_count
    }

    pub fn requested(&self, user: usize) -> usize {
        self.requests[user]
    }

    pub fn requests(&self) -> &[usize] {
        &self.requests
    }

    pub fn theta(&self, user: usize, file: usize) -> f64 {
        if self.requests[user] == file {
            1.0
        } else {
            0.0
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.requests.len(), self.file_count, |i, k| {
            self.theta(i, k)
        })
    }

    pub(crate) fn check_shape(&self, scenario: &Scenario) -> Result<()> {
        if self.user_count() != scenario.user_count() || self.file_count != scenario.file_count() {
            return Err(Error::InvalidInput(format!(
                "demand matrix is {}x{}, scenario has {} users and {} files",
                self.user_count(),
                self.file_count,
                scenario.user_count(),
                scenario.file_count()
            )));
        }
        Ok(())
    }
}

/// SINR threshold of the file user `i` requests.
pub fn requested_threshold(scenario: &Scenario, demands: &DemandMatrix, user: usize) -> f64 {
    scenario.sinr_thresholds()[demands.requested(user)]
}

/// Association of every user to exactly one SBS.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Association {
    sbs_count: usize,
    serving: Vec<usize>,
}

impl Association {
    pub fn new(serving: Vec<usize>, sbs_count: usize) -> Result<Self> {
        if let Some(&j) = serving.iter().find(|&&j| j >= sbs_count) {
            return Err(Error::IndexOutOfRange {
                what: "sbs",
                index: j,
                len: sbs_count,
            });
        }
        Ok(Self { sbs_count, serving })
    }

    /// Reads a binary `U x B` matrix with unit row sums (entries within 1e-6 of 0/1 are rounded).
    pub fn from_matrix(x: &Matrix) -> Result<Self> {
        let mut serving = Vec::with_capacity(x.rows());
        for (i, row) in x.iter_rows().enumerate() {
            let mut chosen = None;
            for (j, &v) in row.iter().enumerate() {
                if (v - 1.0).abs() <= 1e-6 {
                    if chosen.replace(j).is_some() {
                        return Err(Error::InvalidInput(format!("user {i} associated twice")));
                    }
                } else if v.abs() > 1e-6 {
                    return Err(Error::InvalidInput(format!(
                        "x[{i}][{j}] = {v} is not binary"
                    )));
                }
            }
            match chosen {
                Some(j) => serving.push(j),
                None => {
                    return Err(Error::InvalidInput(format!("user {i} is not associated")));
                }
            }
        }
        Ok(Self {
            sbs_count: x.cols(),
            serving,
        })
    }

    pub fn serving(&self, user: usize) -> usize {
        self.serving[user]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.serving
    }

    pub fn user_count(&self) -> usize {
        self.serving.len()
    }

    pub fn sbs_count(&self) -> usize {
        self.sbs_count
    }

    pub fn set(&mut self, user: usize, sbs: usize) {
        assert!(sbs < self.sbs_count);
        self.serving[user] = sbs;
    }

    pub fn users_of(&self, sbs: usize) -> impl Iterator<Item = usize> + '_ {
        self.serving
            .iter()
            .enumerate()
            .filter(move |(_, &j)| j == sbs)
            .map(|(i, _)| i)
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.serving.len(), self.sbs_count, |i, j| {
            if self.serving[i] == j {
                1.0
            } else {
                0.0
            }
        })
    }

    pub(crate) fn check_shape(&self, scenario: &Scenario) -> Result<()> {
        if self.user_count() != scenario.user_count() || self.sbs_count != scenario.sbs_count() {
            return Err(Error::InvalidInput(format!(
                "association is {}x{}, scenario has {} users and {} SBSs",
                self.user_count(),
                self.sbs_count,
                scenario.user_count(),
                scenario.sbs_count()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Association {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.serving.iter().map(|j| j.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// Transmit power per SBS in watts, within `[0, P_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerVector(Vec<f64>);

impl PowerVector {
    pub fn new(scenario: &Scenario, power: Vec<f64>) -> Result<Self> {
        if power.len() != scenario.sbs_count() {
            return Err(Error::InvalidInput(format!(
                "power vector has {} entries, expected {}",
                power.len(),
                scenario.sbs_count()
            )));
        }
        for (j, (&p, &pmax)) in power.iter().zip(scenario.max_power()).enumerate() {
            if !(p.is_finite() && (0.0..=pmax).contains(&p)) {
                return Err(Error::InvalidInput(format!(
                    "power[{j}] = {p} outside [0, {pmax}]"
                )));
            }
        }
        Ok(Self(power))
    }

    /// Clamps solver round-off into `[0, P_max]`.
    pub(crate) fn from_solver(scenario: &Scenario, power: Vec<f64>) -> Self {
        Self(
            power
                .into_iter()
                .zip(scenario.max_power())
                .map(|(p, &pmax)| p.clamp(0.0, pmax))
                .collect(),
        )
    }

    pub fn zeros(sbs_count: usize) -> Self {
        Self(vec![0.0; sbs_count])
    }

    /// Builds without range checks; [`check_feasible`] reports any violation.
    pub fn unchecked(power: Vec<f64>) -> Self {
        Self(power)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Binary `B x F` cache placement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CachePlacement {
    cached: Vec<Vec<bool>>,
}

/// Relative slack on cache capacity that absorbs summation-order rounding.
pub const CAPACITY_RTOL: f64 = 1e-12;

/// Whether `used` bytes fit in `capacity`, up to [`CAPACITY_RTOL`].
pub fn within_capacity(used: f64, capacity: f64) -> bool {
    used <= capacity + CAPACITY_RTOL * capacity.abs()
}

impl CachePlacement {
    pub fn empty(sbs_count: usize, file_count: usize) -> Self {
        Self {
            cached: vec![vec![false; file_count]; sbs_count],
        }
    }

    pub fn new(scenario: &Scenario, cached: Vec<Vec<bool>>) -> Result<Self> {
        if cached.len() != scenario.sbs_count()
            || cached.iter().any(|r| r.len() != scenario.file_count())
        {
            return Err(Error::InvalidInput("placement shape mismatch".into()));
        }
        let placement = Self { cached };
        for j in 0..scenario.sbs_count() {
            let used = placement.used_capacity(scenario, j);
            if !within_capacity(used, scenario.cache_capacity()[j]) {
                return Err(Error::InvalidInput(format!(
                    "sbs {j} caches {used} bytes, capacity {}",
                    scenario.cache_capacity()[j]
                )));
            }
        }
        Ok(placement)
    }

    pub fn is_cached(&self, sbs: usize, file: usize) -> bool {
        self.cached[sbs][file]
    }

    pub fn row(&self, sbs: usize) -> &[bool] {
        &self.cached[sbs]
    }

    pub fn sbs_count(&self) -> usize {
        self.cached.len()
    }

    pub fn used_capacity(&self, scenario: &Scenario, sbs: usize) -> f64 {
        self.cached[sbs]
            .iter()
            .zip(scenario.file_sizes())
            .filter(|(c, _)| **c)
            .map(|(_, s)| s)
            .sum()
    }

    pub(crate) fn from_rows_unchecked(cached: Vec<Vec<bool>>) -> Self {
        Self { cached }
    }

    pub(crate) fn check_shape(&self, scenario: &Scenario) -> Result<()> {
        if self.cached.len() != scenario.sbs_count()
            || self.cached.iter().any(|r| r.len() != scenario.file_count())
        {
            return Err(Error::InvalidInput("placement shape mismatch".into()));
        }
        Ok(())
    }
}

/// How the wireless part of the delivery delay is computed.
#[derive(Debug, Clone, Copy)]
pub enum DelayMode<'a> {
    /// `tau = s_k / r_ij` at the given transmit powers.
    Exact(&'a PowerVector),
    /// `tau = s_k / R_k`, independent of powers and association.
    Relaxed,
}

pub fn sinr(scenario: &Scenario, p: &PowerVector, user: usize, sbs: usize) -> Result<f64> {
    scenario.check_user(user)?;
    scenario.check_sbs(sbs)?;
    if p.as_slice().len() != scenario.sbs_count() {
        return Err(Error::InvalidInput("power vector length mismatch".into()));
    }
    Ok(sinr_raw(scenario, p.as_slice(), user, sbs))
}

pub(crate) fn sinr_raw(scenario: &Scenario, p: &[f64], user: usize, sbs: usize) -> f64 {
    let gains = scenario.gains().row(user);
    let interference: f64 = p
        .iter()
        .zip(gains)
        .enumerate()
        .filter(|(l, _)| *l != sbs)
        .map(|(_, (pl, gl))| pl * gl)
        .sum();
    p[sbs] * gains[sbs] / (interference + scenario.noise_power())
}

/// Shannon rate `W log2(1 + SINR)` in bit/s.
pub fn rate(scenario: &Scenario, p: &PowerVector, user: usize, sbs: usize) -> Result<f64> {
    let s = sinr(scenario, p, user, sbs)?;
    Ok(scenario.bandwidth() * s.ln_1p() / std::f64::consts::LN_2)
}

/// Wireless transmission delay of `file` to `user` from `sbs`.
pub fn wireless_delay(
    scenario: &Scenario,
    user: usize,
    sbs: usize,
    file: usize,
    mode: DelayMode<'_>,
) -> Result<f64> {
    scenario.check_file(file)?;
    let bits = scenario.file_sizes()[file] * BITS_PER_BYTE;
    match mode {
        DelayMode::Relaxed => {
            scenario.check_user(user)?;
            scenario.check_sbs(sbs)?;
            Ok(bits / scenario.rate_requirements()[file])
        }
        DelayMode::Exact(p) => {
            let r = rate(scenario, p, user, sbs)?;
            if r <= 0.0 {
                return Err(Error::ZeroRate { user, sbs });
            }
            Ok(bits / r)
        }
    }
}

/// End-to-end delivery delay: wireless delay plus the mean backhaul delay on a cache miss.
pub fn delivery_delay(
    scenario: &Scenario,
    placement: &CachePlacement,
    user: usize,
    sbs: usize,
    file: usize,
    mode: DelayMode<'_>,
) -> Result<f64> {
    let tau = wireless_delay(scenario, user, sbs, file, mode)?;
    let miss = if placement.is_cached(sbs, file) {
        0.0
    } else {
        1.0
    };
    Ok(tau + miss * scenario.backhaul_mean()[sbs])
}

/// Relaxed delay cost `sum_k theta_ik d_ij^k` of associating `user` with `sbs`.
pub fn relaxed_delay_cost(
    scenario: &Scenario,
    demands: &DemandMatrix,
    placement: &CachePlacement,
    user: usize,
    sbs: usize,
) -> f64 {
    let k = demands.requested(user);
    let miss = if placement.is_cached(sbs, k) {
        0.0
    } else {
        1.0
    };
    scenario.relaxed_tau(k) + miss * scenario.backhaul_mean()[sbs]
}

/// `U x B` matrix of relaxed delay costs.
pub fn relaxed_delay_costs(
    scenario: &Scenario,
    demands: &DemandMatrix,
    placement: &CachePlacement,
) -> Matrix {
    Matrix::from_fn(scenario.user_count(), scenario.sbs_count(), |i, j| {
        relaxed_delay_cost(scenario, demands, placement, i, j)
    })
}

/// Association-independent total relaxed transmission time `D`.
pub fn total_relaxed_time(scenario: &Scenario, demands: &DemandMatrix) -> f64 {
    demands
        .requests()
        .iter()
        .map(|&k| scenario.relaxed_tau(k))
        .sum()
}

/// Relaxed per-SBS load `T_j = beta_j D`.
pub fn relaxed_serving_times(scenario: &Scenario, demands: &DemandMatrix) -> Vec<f64> {
    let d = total_relaxed_time(scenario, demands);
    scenario.load_coefficients().iter().map(|b| b * d).collect()
}

pub fn serving_time(
    scenario: &Scenario,
    demands: &DemandMatrix,
    assoc: &Association,
    mode: DelayMode<'_>,
) -> Result<Vec<f64>> {
    demands.check_shape(scenario)?;
    assoc.check_shape(scenario)?;
    match mode {
        DelayMode::Relaxed => Ok(relaxed_serving_times(scenario, demands)),
        DelayMode::Exact(_) => {
            let mut t = vec![0.0; scenario.sbs_count()];
            for i in 0..scenario.user_count() {
                let j = assoc.serving(i);
                t[j] += wireless_delay(scenario, i, j, demands.requested(i), mode)?;
            }
            Ok(t)
        }
    }
}

/// Energy, delay and their weighted sum for one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveBreakdown {
    pub energy: f64,
    pub delay: f64,
    pub weighted: f64,
}

impl ObjectiveBreakdown {
    pub fn new(energy: f64, delay: f64, alpha: f64) -> Self {
        Self {
            energy,
            delay,
            weighted: weighted_sum(energy, delay, alpha),
        }
    }
}

pub fn weighted_sum(energy: f64, delay: f64, alpha: f64) -> f64 {
    alpha * energy + (1.0 - alpha) * delay
}

/// `alpha * sum_j p_j T_j + (1 - alpha) * sum_i d_i`.
pub fn objective(
    scenario: &Scenario,
    demands: &DemandMatrix,
    placement: &CachePlacement,
    assoc: &Association,
    p: &PowerVector,
    mode: DelayMode<'_>,
    alpha: f64,
) -> Result<ObjectiveBreakdown> {
    placement.check_shape(scenario)?;
    let t = serving_time(scenario, demands, assoc, mode)?;
    let energy: f64 = p.as_slice().iter().zip(&t).map(|(p, t)| p * t).sum();
    let mut delay = 0.0;
    for i in 0..scenario.user_count() {
        delay += delivery_delay(
            scenario,
            placement,
            i,
            assoc.serving(i),
            demands.requested(i),
            mode,
        )?;
    }
    Ok(ObjectiveBreakdown::new(energy, delay, alpha))
}

/// Total relaxed delay of an association.
pub fn relaxed_total_delay(
    scenario: &Scenario,
    demands: &DemandMatrix,
    placement: &CachePlacement,
    assoc: &Association,
) -> f64 {
    (0..scenario.user_count())
        .map(|i| relaxed_delay_cost(scenario, demands, placement, i, assoc.serving(i)))
        .sum()
}

/// First violated constraint of the delivery problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape(String),
    PowerBound {
        sbs: usize,
        power: f64,
        max: f64,
    },
    NotBinary {
        user: usize,
        sbs: usize,
        value: f64,
    },
    RowSum {
        user: usize,
        sum: f64,
    },
    Sinr {
        user: usize,
        sbs: usize,
        sinr: f64,
        required: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape(s) => write!(f, "shape: {s}"),
            Violation::PowerBound { sbs, power, max } => {
                write!(f, "power of sbs {sbs} is {power}, allowed [0, {max}]")
            }
            Violation::NotBinary { user, sbs, value } => {
                write!(f, "x[{user}][{sbs}] = {value} is not binary")
            }
            Violation::RowSum { user, sum } => {
                write!(f, "association row of user {user} sums to {sum}")
            }
            Violation::Sinr {
                user,
                sbs,
                sinr,
                required,
            } => write!(
                f,
                "user {user} at sbs {sbs} has SINR {sinr}, requires {required}"
            ),
        }
    }
}

/// Checks power bounds, binary unit-row association and the SINR requirement of every user.
pub fn check_feasible(
    scenario: &Scenario,
    demands: &DemandMatrix,
    x: &Matrix,
    p: &PowerVector,
) -> std::result::Result<(), Violation> {
    let (u, b) = (scenario.user_count(), scenario.sbs_count());
    if x.rows() != u || x.cols() != b || p.as_slice().len() != b || demands.user_count() != u {
        return Err(Violation::Shape(format!(
            "x is {}x{}, p has {} entries, scenario is {u}x{b}",
            x.rows(),
            x.cols(),
            p.as_slice().len()
        )));
    }
    for (j, (&pj, &max)) in p.as_slice().iter().zip(scenario.max_power()).enumerate() {
        if !(pj >= 0.0 && pj <= max * (1.0 + FEASIBILITY_RTOL)) {
            return Err(Violation::PowerBound {
                sbs: j,
                power: pj,
                max,
            });
        }
    }
    for i in 0..u {
        let row = x.row(i);
        if let Some(j) = row.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(Violation::NotBinary {
                user: i,
                sbs: j,
                value: row[j],
            });
        }
        let sum: f64 = row.iter().sum();
        if sum != 1.0 {
            return Err(Violation::RowSum { user: i, sum });
        }
    }
    for i in 0..u {
        let j = x.row(i).iter().position(|&v| v == 1.0).unwrap_or(0);
        let s = sinr_raw(scenario, p.as_slice(), i, j);
        let required = requested_threshold(scenario, demands, i);
        if s < required * (1.0 - FEASIBILITY_RTOL) {
            return Err(Violation::Sinr {
                user: i,
                sbs: j,
                sinr: s,
                required,
            });
        }
    }
    Ok(())
}
