//! Reference association and power-control schemes.
//!
//! * [`min_power_for`]: minimum-energy powers for a fixed association.
//! * [`ema`]: each user joins its nearest SBS.
//! * [`doa`]: delay-oriented association restricted to SBSs that can meet the
//!   user's SINR requirement at full power without interference.

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpResult, RowSense, Sense};
use crate::model::{
    relaxed_delay_cost, relaxed_serving_times, requested_threshold, Association, CachePlacement,
    DemandMatrix, PowerVector, Scenario,
};

#[derive(Debug, Clone, PartialEq)]
pub enum PowerSolution {
    Feasible { power: PowerVector, energy: f64 },
    Infeasible,
}

impl PowerSolution {
    pub fn feasible(self) -> Option<(PowerVector, f64)> {
        match self {
            PowerSolution::Feasible { power, energy } => Some((power, energy)),
            PowerSolution::Infeasible => None,
        }
    }
}

enum PowerOutcome {
    Feasible(PowerVector, f64),
    /// Users whose SINR rows appear in the infeasibility certificate.
    Conflict(Vec<usize>),
}

fn power_lp(scenario: &Scenario, demands: &DemandMatrix, assoc: &Association) -> LinearProgram {
    let b = scenario.sbs_count();
    let mut lp = LinearProgram::new(Sense::Min, relaxed_serving_times(scenario, demands));
    for i in 0..scenario.user_count() {
        let j = assoc.serving(i);
        let gamma = requested_threshold(scenario, demands, i);
        let row: Vec<f64> = (0..b)
            .map(|l| {
                let g = scenario.gain(i, l);
                if l == j {
                    g
                } else {
                    -gamma * g
                }
            })
            .collect();
        lp.add_row(row, RowSense::Ge, gamma * scenario.noise_power());
    }
    for (j, &pmax) in scenario.max_power().iter().enumerate() {
        lp.set_bounds(j, 0.0, pmax);
    }
    lp
}

fn solve_power(
    scenario: &Scenario,
    demands: &DemandMatrix,
    assoc: &Association,
) -> Result<PowerOutcome> {
    demands.check_shape(scenario)?;
    assoc.check_shape(scenario)?;
    let lp = power_lp(scenario, demands, assoc);
    match lp::solve(&lp)? {
        LpResult::Optimal(sol) => {
            let power = PowerVector::from_solver(scenario, sol.x);
            let energy = power
                .as_slice()
                .iter()
                .zip(relaxed_serving_times(scenario, demands))
                .map(|(p, t)| p * t)
                .sum();
            Ok(PowerOutcome::Feasible(power, energy))
        }
        LpResult::Infeasible(cert) => Ok(PowerOutcome::Conflict(
            cert.row_multipliers
                .iter()
                .enumerate()
                .filter(|(_, y)| y.abs() > 1e-9)
                .map(|(i, _)| i)
                .collect(),
        )),
        LpResult::Unbounded { .. } => Err(Error::InvalidInput(
            "power allocation LP reported unbounded despite box bounds".into(),
        )),
    }
}

/// Minimum relaxed energy `sum_j T_j p_j` subject to every user's SINR
/// requirement at its serving SBS and `0 <= p <= Pmax`.
pub fn min_power_for(
    scenario: &Scenario,
    demands: &DemandMatrix,
    assoc: &Association,
) -> Result<PowerSolution> {
    Ok(match solve_power(scenario, demands, assoc)? {
        PowerOutcome::Feasible(power, energy) => PowerSolution::Feasible { power, energy },
        PowerOutcome::Conflict(_) => PowerSolution::Infeasible,
    })
}

/// A baseline's association with its minimum-energy powers.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub assoc: Association,
    pub power: PowerVector,
    pub energy: f64,
}

/// Whether SBS `j` alone can meet user `i`'s requirement at full power.
pub fn reachable(scenario: &Scenario, demands: &DemandMatrix, user: usize, sbs: usize) -> bool {
    scenario.max_power()[sbs] * scenario.gain(user, sbs) / scenario.noise_power()
        >= requested_threshold(scenario, demands, user)
}

/// Users ordered hardest first: largest `gamma_i / max_j g_ij`, ties by index.
fn hardness_order(scenario: &Scenario, demands: &DemandMatrix) -> Vec<usize> {
    let hardness: Vec<f64> = (0..scenario.user_count())
        .map(|i| {
            let g = scenario
                .gains()
                .row(i)
                .iter()
                .fold(0.0f64, |m, &v| m.max(v));
            requested_threshold(scenario, demands, i) / g
        })
        .collect();
    let mut order: Vec<usize> = (0..scenario.user_count()).collect();
    order.sort_by(|&a, &b| hardness[b].total_cmp(&hardness[a]).then(a.cmp(&b)));
    order
}

/// Starts every user at the head of its candidate list and, while the powers are
/// infeasible, moves the hardest user in the infeasibility certificate that still
/// has alternatives to its next candidate.
fn assign_with_repair(
    scenario: &Scenario,
    demands: &DemandMatrix,
    candidates: &[Vec<usize>],
) -> Result<BaselineResult> {
    let b = scenario.sbs_count();
    let mut cursor = vec![0usize; candidates.len()];
    let serving = candidates.iter().map(|c| c[0]).collect();
    let mut assoc = Association::new(serving, b)?;
    let order = hardness_order(scenario, demands);
    loop {
        match solve_power(scenario, demands, &assoc)? {
            PowerOutcome::Feasible(power, energy) => {
                return Ok(BaselineResult {
                    assoc,
                    power,
                    energy,
                })
            }
            PowerOutcome::Conflict(users) => {
                let movable = |i: &usize| cursor[*i] + 1 < candidates[*i].len();
                let pick = order
                    .iter()
                    .find(|i| users.contains(i) && movable(i))
                    .or_else(|| order.iter().find(|i| movable(i)));
                match pick {
                    Some(&i) => {
                        cursor[i] += 1;
                        assoc.set(i, candidates[i][cursor[i]]);
                    }
                    None => return Err(Error::NoFeasibleAssociation),
                }
            }
        }
    }
}

/// Energy-minimizing association: nearest SBS, then minimum-energy powers.
/// Infeasible power allocations are repaired by moving users to their next
/// nearest SBS.
pub fn ema(scenario: &Scenario, demands: &DemandMatrix) -> Result<BaselineResult> {
    demands.check_shape(scenario)?;
    let candidates: Vec<Vec<usize>> = (0..scenario.user_count())
        .map(|i| {
            let mut c: Vec<usize> = (0..scenario.sbs_count()).collect();
            c.sort_by(|&a, &b| {
                scenario
                    .distance(i, a)
                    .total_cmp(&scenario.distance(i, b))
                    .then(a.cmp(&b))
            });
            c
        })
        .collect();
    assign_with_repair(scenario, demands, &candidates)
}

/// Delay-oriented association.
///
/// Each user considers the SBSs it can reach alone at full power, preferring
/// those caching its file, then lower relaxed delay, stronger gain and lower
/// index. After repairing power infeasibility, a best-improvement local search
/// moves single users to lower relaxed delay while power stays feasible.
pub fn doa(
    scenario: &Scenario,
    demands: &DemandMatrix,
    placement: &CachePlacement,
) -> Result<BaselineResult> {
    demands.check_shape(scenario)?;
    placement.check_shape(scenario)?;
    let (u, b) = (scenario.user_count(), scenario.sbs_count());
    let cost = |i: usize, j: usize| relaxed_delay_cost(scenario, demands, placement, i, j);
    let mut candidates = Vec::with_capacity(u);
    for i in 0..u {
        let k = demands.requested(i);
        let mut c: Vec<usize> = (0..b)
            .filter(|&j| reachable(scenario, demands, i, j))
            .collect();
        if c.is_empty() {
            return Err(Error::Unreachable { user: i });
        }
        c.sort_by(|&a, &bb| {
            placement
                .is_cached(bb, k)
                .cmp(&placement.is_cached(a, k))
                .then(cost(i, a).total_cmp(&cost(i, bb)))
                .then(scenario.gain(i, bb).total_cmp(&scenario.gain(i, a)))
                .then(a.cmp(&bb))
        });
        candidates.push(c);
    }
    let mut best = assign_with_repair(scenario, demands, &candidates)?;
    for _ in 0..10 * u {
        let mut improvement: Option<(f64, usize, usize, BaselineResult)> = None;
        for i in 0..u {
            let here = cost(i, best.assoc.serving(i));
            for &j in &candidates[i] {
                let gain = here - cost(i, j);
                if gain <= 0.0 || improvement.as_ref().is_some_and(|m| gain <= m.0) {
                    continue;
                }
                let mut trial = best.assoc.clone();
                trial.set(i, j);
                if let PowerOutcome::Feasible(power, energy) =
                    solve_power(scenario, demands, &trial)?
                {
                    improvement = Some((
                        gain,
                        i,
                        j,
                        BaselineResult {
                            assoc: trial,
                            power,
                            energy,
                        },
                    ));
                }
            }
        }
        match improvement {
            Some((_, _, _, next)) => best = next,
            None => break,
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::check_feasible;
    use crate::model::tests::hand_scenario;

    #[test]
    fn single_link_power_is_closed_form() {
        let s = hand_scenario(vec![vec![0.5]], vec![20.0], 2.0, vec![1.0], vec![3.0]);
        let d = DemandMatrix::new(vec![0], 1).unwrap();
        let a = Association::new(vec![0], 1).unwrap();
        let (p, e) = min_power_for(&s, &d, &a).unwrap().feasible().unwrap();
        assert!((p.as_slice()[0] - 12.0).abs() < 1e-9);
        let t = relaxed_serving_times(&s, &d)[0];
        assert!((e - 12.0 * t).abs() < 1e-9 * t);
    }

    #[test]
    fn over_budget_is_infeasible() {
        let s = hand_scenario(vec![vec![0.1]], vec![1.0], 1.0, vec![1.0], vec![5.0]);
        let d = DemandMatrix::new(vec![0], 1).unwrap();
        let a = Association::new(vec![0], 1).unwrap();
        assert_eq!(
            min_power_for(&s, &d, &a).unwrap(),
            PowerSolution::Infeasible
        );
    }

    #[test]
    fn two_link_interference_solution() {
        // p0 g00 >= gamma (g01 p1 + 1), p1 g11 >= gamma (g10 p0 + 1)
        let s = hand_scenario(
            vec![vec![1.0, 0.1], vec![0.1, 1.0]],
            vec![10.0, 10.0],
            1.0,
            vec![1.0],
            vec![1.0],
        );
        let d = DemandMatrix::new(vec![0, 0], 1).unwrap();
        let a = Association::new(vec![0, 1], 2).unwrap();
        let (p, _) = min_power_for(&s, &d, &a).unwrap().feasible().unwrap();
        // symmetric fixed point p = 1 + 0.1 p -> p = 1/0.9
        for v in p.as_slice() {
            assert!((v - 1.0 / 0.9).abs() < 1e-9);
        }
        assert!(check_feasible(&s, &d, &a.to_matrix(), &p).is_ok());
    }

    #[test]
    fn ema_picks_nearest() {
        let s = hand_scenario(
            vec![vec![1.0, 0.5], vec![0.5, 1.0], vec![0.5, 1.0]],
            vec![10.0, 10.0],
            0.01,
            vec![1.0],
            vec![1.0],
        );
        // hand scenario: sbs at (0,0) and (10,0); users at (i,5)
        let d = DemandMatrix::new(vec![0, 0, 0], 1).unwrap();
        let r = ema(&s, &d).unwrap();
        assert_eq!(r.assoc.as_slice(), &[0, 0, 0]);
    }

    #[test]
    fn doa_reports_unreachable_users() {
        let s = hand_scenario(
            vec![vec![1e-9, 1e-9]],
            vec![1.0, 1.0],
            1.0,
            vec![1.0],
            vec![1.0],
        );
        let d = DemandMatrix::new(vec![0], 1).unwrap();
        let y = CachePlacement::empty(2, 1);
        assert!(matches!(
            doa(&s, &d, &y),
            Err(Error::Unreachable { user: 0 })
        ));
    }

    #[test]
    fn doa_prefers_caching_sbs() {
        let s = hand_scenario(
            vec![vec![1.0, 0.2]],
            vec![10.0, 10.0],
            0.01,
            vec![1.0],
            vec![1.0],
        );
        let d = DemandMatrix::new(vec![0], 1).unwrap();
        let y = CachePlacement::from_rows_unchecked(vec![vec![false], vec![true]]);
        let r = doa(&s, &d, &y).unwrap();
        assert_eq!(r.assoc.as_slice(), &[1]);
        assert!(check_feasible(&s, &d, &r.assoc.to_matrix(), &r.power).is_ok());
    }
}
