//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use cachenet::lp::{LinearProgram, RowSense, Sense};
use cachenet::model::DemandMatrix;
use cachenet::model::{requested_threshold, CachePlacement, Matrix, Scenario};
use cachenet::placement::lpf_greedy;
use cachenet::scenario::{generate, Config, Instance};

/// Solves a square system by Gaussian elimination with partial pivoting.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        let scale = a[piv].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if a[piv][col].abs() <= 1e-12 * scale.max(1e-300) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Whether `x` satisfies every row and bound of `lp` within a relative tolerance.
pub fn is_feasible(lp: &LinearProgram, x: &[f64], rtol: f64) -> bool {
    for j in 0..lp.num_vars() {
        let tol = rtol * (1.0 + x[j].abs());
        if x[j] < lp.lower[j] - tol || x[j] > lp.upper[j] + tol {
            return false;
        }
    }
    for (r, row) in lp.rows.iter().enumerate() {
        let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
        let mag: f64 = row.iter().zip(x).map(|(a, v)| (a * v).abs()).sum::<f64>() + lp.rhs[r].abs();
        let tol = rtol * (1.0 + mag);
        let ok = match lp.row_senses[r] {
            RowSense::Le => lhs <= lp.rhs[r] + tol,
            RowSense::Ge => lhs >= lp.rhs[r] - tol,
            RowSense::Eq => (lhs - lp.rhs[r]).abs() <= tol,
        };
        if !ok {
            return false;
        }
    }
    true
}

fn objective_of(lp: &LinearProgram, x: &[f64]) -> f64 {
    lp.objective.iter().zip(x).map(|(c, v)| c * v).sum()
}

/// Advances `combo` (strictly increasing indices below `n`) to the next
/// combination in lexicographic order; `false` after the last one.
pub fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for t in i + 1..k {
                combo[t] = combo[t - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn better(sense: Sense, v: f64, best: &Option<(f64, Vec<f64>)>) -> bool {
    match best {
        None => true,
        Some((bv, _)) => match sense {
            Sense::Min => v < *bv,
            Sense::Max => v > *bv,
        },
    }
}

/// Best feasible basic solution, found by trying every set of `n` linearly
/// independent active constraints. Requires finite lower bounds so that a
/// nonempty feasible set has a vertex.
pub fn best_vertex(lp: &LinearProgram, rtol: f64) -> Option<(f64, Vec<f64>)> {
    let n = lp.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for (r, row) in lp.rows.iter().enumerate() {
        planes.push((row.clone(), lp.rhs[r]));
    }
    for j in 0..n {
        assert!(
            lp.lower[j].is_finite(),
            "vertex enumeration needs finite lower bounds"
        );
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.lower[j]));
        if lp.upper[j].is_finite() {
            planes.push((e, lp.upper[j]));
        }
    }
    let mut best = None;
    if n > planes.len() {
        return None;
    }
    let mut combo: Vec<usize> = (0..n).collect();
    loop {
        let a: Vec<Vec<f64>> = combo.iter().map(|&k| planes[k].0.clone()).collect();
        let b: Vec<f64> = combo.iter().map(|&k| planes[k].1).collect();
        if let Some(x) = solve_square(a, b) {
            if is_feasible(lp, &x, rtol) {
                let v = objective_of(lp, &x);
                if better(lp.sense, v, &best) {
                    best = Some((v, x));
                }
            }
        }
        if !next_combination(&mut combo, planes.len()) {
            return best;
        }
    }
}

/// The minimum-energy LP at association matrix `x`, with a SINR row for every
/// user-SBS pair relaxed by `(1 - x_ij) / varrho`.
pub fn full_primal(
    scenario: &Scenario,
    demands: &DemandMatrix,
    x: &Matrix,
    varrho: f64,
) -> LinearProgram {
    let b = scenario.sbs_count();
    let d: f64 = demands
        .requests()
        .iter()
        .map(|&k| scenario.relaxed_tau(k))
        .sum();
    let costs: Vec<f64> = scenario
        .load_coefficients()
        .iter()
        .map(|beta| beta * d)
        .collect();
    let mut lp = LinearProgram::new(Sense::Min, costs);
    for i in 0..scenario.user_count() {
        let gamma = requested_threshold(scenario, demands, i);
        for j in 0..b {
            let row: Vec<f64> = (0..b)
                .map(|l| {
                    if l == j {
                        scenario.gain(i, l)
                    } else {
                        -gamma * scenario.gain(i, l)
                    }
                })
                .collect();
            let rhs = gamma * scenario.noise_power() - (1.0 - x[(i, j)]) / varrho;
            lp.add_row(row, RowSense::Ge, rhs);
        }
    }
    for j in 0..b {
        lp.set_bounds(j, 0.0, scenario.max_power()[j]);
    }
    lp
}

/// A desk-scale instance with its local-popularity placement.
pub fn desk(seed: u64) -> (Instance, CachePlacement) {
    desk_with(&Config::desk(), seed)
}

pub fn desk_with(config: &Config, seed: u64) -> (Instance, CachePlacement) {
    let inst = generate(config, seed).expect("valid configuration");
    let (placement, _) = lpf_greedy(&inst.scenario, &inst.popularity());
    (inst, placement)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
