//! Cache placement policies and an exact knapsack reference.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{within_capacity, CachePlacement, Scenario};
use crate::popularity::PopularityTable;

/// Default grid for [`knapsack_exact_bytes`]: 0.1 MB.
pub const DEFAULT_GRID_BYTES: f64 = 1e5;
/// Largest dynamic-programming table accepted by [`knapsack_exact`].
pub const MAX_DP_CELLS: u128 = 50_000_000;
pub const DEFAULT_ZIPF_EXPONENT: f64 = 0.8;

/// Admits items in the given order, skipping any that no longer fit.
fn admit_in_order(order: &[usize], sizes: &[f64], capacity: f64) -> Vec<bool> {
    let mut chosen = vec![false; sizes.len()];
    let mut used = 0.0;
    for &k in order {
        if within_capacity(used + sizes[k], capacity) {
            used += sizes[k];
            chosen[k] = true;
        }
    }
    chosen
}

/// Density-ordered greedy for one knapsack: highest `value / size` first, ties to
/// the lower index, items that do not fit are skipped.
pub fn greedy_knapsack(sizes: &[f64], values: &[f64], capacity: f64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        (values[b] / sizes[b])
            .total_cmp(&(values[a] / sizes[a]))
            .then(a.cmp(&b))
    });
    admit_in_order(&order, sizes, capacity)
}

/// Local-popularity-first placement: greedy knapsack per SBS on `psi`. Also
/// returns each SBS's cached popularity mass.
pub fn lpf_greedy(scenario: &Scenario, popularity: &PopularityTable) -> (CachePlacement, Vec<f64>) {
    let sizes = scenario.file_sizes();
    let rows: Vec<Vec<bool>> = (0..scenario.sbs_count())
        .map(|j| greedy_knapsack(sizes, popularity.psi.row(j), scenario.cache_capacity()[j]))
        .collect();
    let placement = CachePlacement::from_rows_unchecked(rows);
    let (per_sbs, _) = hit_ratio(&placement, popularity);
    (placement, per_sbs)
}

/// Zipf weights `k^-s / H` for ranks `1..=F`.
pub fn zipf_weights(file_count: usize, exponent: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=file_count)
        .map(|k| (k as f64).powf(-exponent))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Global-popularity caching: every SBS fills its cache in the order of one Zipf
/// ranking over the catalog, where file index order is popularity rank order.
pub fn gpc_placement(scenario: &Scenario, zipf_exponent: f64) -> CachePlacement {
    let weights = zipf_weights(scenario.file_count(), zipf_exponent);
    let mut order: Vec<usize> = (0..scenario.file_count()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let rows = (0..scenario.sbs_count())
        .map(|j| admit_in_order(&order, scenario.file_sizes(), scenario.cache_capacity()[j]))
        .collect();
    CachePlacement::from_rows_unchecked(rows)
}

/// Random caching: an independent seeded shuffle of the catalog per SBS.
pub fn rc_placement(scenario: &Scenario, seed: u64) -> CachePlacement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..scenario.sbs_count())
        .map(|j| {
            let mut order: Vec<usize> = (0..scenario.file_count()).collect();
            order.shuffle(&mut rng);
            admit_in_order(&order, scenario.file_sizes(), scenario.cache_capacity()[j])
        })
        .collect();
    CachePlacement::from_rows_unchecked(rows)
}

/// Cached popularity mass per SBS and its mean over SBSs.
pub fn hit_ratio(placement: &CachePlacement, popularity: &PopularityTable) -> (Vec<f64>, f64) {
    let per_sbs: Vec<f64> = (0..placement.sbs_count())
        .map(|j| {
            placement
                .row(j)
                .iter()
                .zip(popularity.psi.row(j))
                .filter(|(c, _)| **c)
                .map(|(_, p)| p)
                .sum()
        })
        .collect();
    let mean = if per_sbs.is_empty() {
        0.0
    } else {
        per_sbs.iter().sum::<f64>() / per_sbs.len() as f64
    };
    (per_sbs, mean)
}

/// Exact 0/1 knapsack by dynamic programming over integer sizes.
pub fn knapsack_exact(sizes: &[u64], values: &[f64], capacity: u64) -> Result<(Vec<bool>, f64)> {
    if sizes.len() != values.len() {
        return Err(Error::InvalidInput(
            "sizes and values differ in length".into(),
        ));
    }
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidInput(
            "knapsack values must be nonnegative".into(),
        ));
    }
    let n = sizes.len();
    let cells = (n as u128) * (capacity as u128 + 1);
    if cells > MAX_DP_CELLS {
        return Err(Error::KnapsackGrid {
            cells,
            limit: MAX_DP_CELLS,
        });
    }
    let cap = capacity as usize;
    let mut best = vec![0.0f64; cap + 1];
    let mut take = vec![false; n * (cap + 1)];
    for (k, (&s, &v)) in sizes.iter().zip(values).enumerate() {
        let s = s as usize;
        if s > cap {
            continue;
        }
        for c in (s..=cap).rev() {
            let candidate = best[c - s] + v;
            if candidate > best[c] {
                best[c] = candidate;
                take[k * (cap + 1) + c] = true;
            }
        }
    }
    let mut chosen = vec![false; n];
    let mut c = cap;
    for k in (0..n).rev() {
        if take[k * (cap + 1) + c] {
            chosen[k] = true;
            c -= sizes[k] as usize;
        }
    }
    let value = chosen
        .iter()
        .zip(values)
        .filter(|(c, _)| **c)
        .map(|(_, v)| v)
        .sum();
    Ok((chosen, value))
}

/// [`knapsack_exact`] on byte sizes quantized to `grid` bytes: sizes rounded up,
/// capacity rounded down, so every returned set fits the true capacity.
pub fn knapsack_exact_bytes(
    sizes: &[f64],
    values: &[f64],
    capacity: f64,
    grid: f64,
) -> Result<(Vec<bool>, f64)> {
    if !(grid > 0.0) {
        return Err(Error::InvalidInput("grid must be positive".into()));
    }
    let cells = |x: f64| (x / grid * (1.0 + 1e-12)).floor();
    let q: Vec<u64> = sizes
        .iter()
        .map(|&s| (s / grid * (1.0 - 1e-12)).ceil().max(0.0) as u64)
        .collect();
    let cap = cells(capacity);
    if cap > MAX_DP_CELLS as f64 {
        return Err(Error::KnapsackGrid {
            cells: cap as u128,
            limit: MAX_DP_CELLS,
        });
    }
    knapsack_exact(&q, values, cap.max(0.0) as u64)
}
