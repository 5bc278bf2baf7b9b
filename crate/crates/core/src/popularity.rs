//! User preferences, per-cell local popularity and demand sampling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{DemandMatrix, Matrix, Scenario};

/// Default range of the preference-kernel variance, in squared file indices.
pub const DEFAULT_VARIANCE_RANGE: (f64, f64) = (25.0, 2500.0);

/// Per-user file preferences and relative request probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceMatrix {
    /// `U x F`, every row sums to one.
    pub rho: Matrix,
    /// Relative request weights; normalized inside each central zone.
    pub request_prob: Vec<f64>,
}

impl PreferenceMatrix {
    pub fn new(rho: Matrix, request_prob: Vec<f64>) -> Result<Self> {
        if request_prob.len() != rho.rows() {
            return Err(Error::InvalidInput(format!(
                "{} request probabilities for {} users",
                request_prob.len(),
                rho.rows()
            )));
        }
        for (i, row) in rho.iter_rows().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "preference row {i} must be nonnegative and sum to 1 (sum {sum})"
                )));
            }
        }
        if request_prob.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidInput(
                "request probabilities must be nonnegative".into(),
            ));
        }
        Ok(Self { rho, request_prob })
    }

    /// Equal request probability for every user.
    pub fn with_equal_requests(rho: Matrix) -> Result<Self> {
        let u = rho.rows();
        Self::new(rho, vec![1.0 / u as f64; u])
    }
}

/// Local popularity `psi` (B x F) and the central-zone members of every SBS.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityTable {
    pub psi: Matrix,
    pub zones: Vec<Vec<usize>>,
}

/// Discretized Gaussian kernel over file indices `1..=F`, normalized to one.
pub fn gaussian_kernel(file_count: usize, mean: f64, variance: f64) -> Vec<f64> {
    let mut row: Vec<f64> = (1..=file_count)
        .map(|k| {
            let d = k as f64 - mean;
            (-d * d / (2.0 * variance)).exp()
        })
        .collect();
    let sum: f64 = row.iter().sum();
    if sum > 0.0 {
        for v in &mut row {
            *v /= sum;
        }
    } else {
        let nearest = (mean.round().clamp(1.0, file_count as f64) as usize) - 1;
        row[nearest] = 1.0;
    }
    row
}

pub fn sample_preferences(scenario: &Scenario, seed: u64) -> PreferenceMatrix {
    sample_preferences_with(scenario, DEFAULT_VARIANCE_RANGE, seed)
}

/// Gaussian preference kernel per user with mean uniform in `[1, F]` and variance
/// uniform in `variance_range`.
pub fn sample_preferences_with(
    scenario: &Scenario,
    variance_range: (f64, f64),
    seed: u64,
) -> PreferenceMatrix {
    let f = scenario.file_count();
    let u = scenario.user_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (vlo, vhi) = variance_range;
    let mut data = Vec::with_capacity(u);
    for _ in 0..u {
        let mean = if f > 1 {
            rng.random_range(1.0..=f as f64)
        } else {
            1.0
        };
        let variance = if vhi > vlo {
            rng.random_range(vlo..=vhi)
        } else {
            vlo
        };
        data.push(gaussian_kernel(f, mean, variance));
    }
    PreferenceMatrix {
        rho: Matrix::from_rows(&data).expect("rows have equal length"),
        request_prob: vec![1.0 / u as f64; u],
    }
}

/// Users within the central-zone radius of every SBS.
pub fn central_zones(scenario: &Scenario) -> Vec<Vec<usize>> {
    let radius = scenario.central_zone_radius();
    (0..scenario.sbs_count())
        .map(|j| {
            (0..scenario.user_count())
                .filter(|&i| scenario.distance(i, j) <= radius)
                .collect()
        })
        .collect()
}

/// Request-weighted average of the central-zone preference rows; an empty zone
/// gets the uniform row.
pub fn local_popularity(scenario: &Scenario, prefs: &PreferenceMatrix) -> PopularityTable {
    let f = scenario.file_count();
    let zones = central_zones(scenario);
    let mut psi = Matrix::zeros(scenario.sbs_count(), f);
    for (j, zone) in zones.iter().enumerate() {
        let weight: f64 = zone.iter().map(|&i| prefs.request_prob[i]).sum();
        if zone.is_empty() || weight <= 0.0 {
            for k in 0..f {
                psi[(j, k)] = 1.0 / f as f64;
            }
            continue;
        }
        for &i in zone {
            let w = prefs.request_prob[i] / weight;
            for (k, &r) in prefs.rho.row(i).iter().enumerate() {
                psi[(j, k)] += w * r;
            }
        }
    }
    PopularityTable { psi, zones }
}

/// Largest-remainder apportionment of `slots` over `weights`; ties go to the lower index.
pub fn largest_remainder(weights: &[f64], slots: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    if slots == 0 || total <= 0.0 {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * slots as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(slots.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

/// Requests that reproduce each cell's local popularity as closely as integrality
/// allows. Central-zone users are dealt files by largest-remainder quotas in a
/// seeded order; every other user draws from their own preference row.
pub fn sample_demands(
    scenario: &Scenario,
    prefs: &PreferenceMatrix,
    popularity: &PopularityTable,
    seed: u64,
) -> DemandMatrix {
    let f = scenario.file_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut requests: Vec<Option<usize>> = vec![None; scenario.user_count()];
    for (j, zone) in popularity.zones.iter().enumerate() {
        if zone.is_empty() {
            continue;
        }
        let mut quota = largest_remainder(popularity.psi.row(j), zone.len());
        for &i in zone {
            if let Some(k) = requests[i] {
                quota[k] = quota[k].saturating_sub(1);
            }
        }
        let mut free: Vec<usize> = zone
            .iter()
            .copied()
            .filter(|&i| requests[i].is_none())
            .collect();
        free.shuffle(&mut rng);
        let slots = quota
            .iter()
            .enumerate()
            .flat_map(|(k, &n)| std::iter::repeat_n(k, n));
        for (i, k) in free.into_iter().zip(slots) {
            requests[i] = Some(k);
        }
    }
    let requests = requests
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.unwrap_or_else(|| match WeightedIndex::new(prefs.rho.row(i)) {
                Ok(dist) => dist.sample(&mut rng),
                Err(_) => rng.random_range(0..f),
            })
        })
        .collect();
    DemandMatrix::new(requests, f).expect("sampled files are in range")
}
