//! Exhaustive search over every association for small instances.

use crate::baselines::{min_power_for, PowerSolution};
use crate::error::{Error, Result};
use crate::model::{
    relaxed_total_delay, weighted_sum, Association, CachePlacement, DemandMatrix,
    ObjectiveBreakdown, PowerVector, Scenario,
};

/// Default limit on the number of enumerated associations.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// One power-feasible association with its minimum-energy powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub assoc: Association,
    pub power: PowerVector,
    pub energy: f64,
    pub delay: f64,
}

impl Candidate {
    pub fn objective(&self, alpha: f64) -> ObjectiveBreakdown {
        ObjectiveBreakdown::new(self.energy, self.delay, alpha)
    }
}

/// All `B^U` associations in mixed-radix order with user 0 most significant.
pub fn associations(user_count: usize, sbs_count: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut next = if sbs_count == 0 && user_count > 0 {
        None
    } else {
        Some(vec![0usize; user_count])
    };
    std::iter::from_fn(move || {
        let current = next.take()?;
        let mut succ = current.clone();
        let mut pos = user_count;
        while pos > 0 {
            pos -= 1;
            succ[pos] += 1;
            if succ[pos] < sbs_count {
                next = Some(succ);
                break;
            }
            succ[pos] = 0;
        }
        Some(current)
    })
}

/// Evaluates every association; infeasible ones are dropped. Fails when `B^U`
/// exceeds `cap`.
pub fn enumerate_candidates(
    scenario: &Scenario,
    demands: &DemandMatrix,
    placement: &CachePlacement,
    cap: u64,
) -> Result<Vec<Candidate>> {
    demands.check_shape(scenario)?;
    placement.check_shape(scenario)?;
    let count = (scenario.sbs_count() as f64).powi(scenario.user_count() as i32);
    if count > cap as f64 {
        return Err(Error::EnumerationCap { count, cap });
    }
    let mut out = Vec::new();
    for serving in associations(scenario.user_count(), scenario.sbs_count()) {
        let assoc = Association::new(serving, scenario.sbs_count())?;
        if let PowerSolution::Feasible { power, energy } = min_power_for(scenario, demands, &assoc)?
        {
            let delay = relaxed_total_delay(scenario, demands, placement, &assoc);
            out.push(Candidate {
                assoc,
                power,
                energy,
                delay,
            });
        }
    }
    Ok(out)
}

/// The first candidate with strictly smallest weighted objective.
pub fn best_for_alpha(candidates: &[Candidate], alpha: f64) -> Option<&Candidate> {
    let mut best: Option<(&Candidate, f64)> = None;
    for c in candidates {
        let v = weighted_sum(c.energy, c.delay, alpha);
        if best.is_none_or(|(_, bv)| v < bv) {
            best = Some((c, v));
        }
    }
    best.map(|(c, _)| c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best: Candidate,
    pub objective: ObjectiveBreakdown,
    pub feasible_count: usize,
}

pub fn brute_force_with_cap(
    scenario: &Scenario,
    demands: &DemandMatrix,
    placement: &CachePlacement,
    alpha: f64,
    cap: u64,
) -> Result<OracleResult> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!(
            "alpha = {alpha} outside [0, 1]"
        )));
    }
    let candidates = enumerate_candidates(scenario, demands, placement, cap)?;
    let best = best_for_alpha(&candidates, alpha)
        .ok_or(Error::NoFeasibleAssociation)?
        .clone();
    Ok(OracleResult {
        objective: best.objective(alpha),
        best,
        feasible_count: candidates.len(),
    })
}

/// Global optimum of the weighted objective by exhaustive enumeration.
pub fn brute_force(
    scenario: &Scenario,
    demands: &DemandMatrix,
    placement: &CachePlacement,
    alpha: f64,
) -> Result<OracleResult> {
    brute_force_with_cap(scenario, demands, placement, alpha, DEFAULT_ENUMERATION_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::hand_scenario;

    #[test]
    fn enumeration_order() {
        let all: Vec<Vec<usize>> = associations(2, 3).collect();
        assert_eq!(all.len(), 9);
        assert_eq!(all[0], vec![0, 0]);
        assert_eq!(all[1], vec![0, 1]);
        assert_eq!(all[3], vec![1, 0]);
        assert_eq!(all[8], vec![2, 2]);
        assert_eq!(associations(0, 3).count(), 1);
        assert_eq!(associations(2, 0).count(), 0);
    }

    #[test]
    fn cap_is_enforced() {
        let s = hand_scenario(
            vec![vec![1.0, 1.0]; 3],
            vec![1.0, 1.0],
            0.01,
            vec![1.0],
            vec![1.0],
        );
        let d = DemandMatrix::new(vec![0; 3], 1).unwrap();
        let y = CachePlacement::empty(2, 1);
        assert!(matches!(
            brute_force_with_cap(&s, &d, &y, 0.5, 7),
            Err(Error::EnumerationCap { .. })
        ));
        assert!(brute_force_with_cap(&s, &d, &y, 0.5, 8).is_ok());
    }

    #[test]
    fn infeasible_everywhere_is_an_error() {
        let s = hand_scenario(vec![vec![1e-9]], vec![1.0], 1.0, vec![1.0], vec![1.0]);
        let d = DemandMatrix::new(vec![0], 1).unwrap();
        let y = CachePlacement::empty(1, 1);
        assert!(matches!(
            brute_force(&s, &d, &y, 0.5),
            Err(Error::NoFeasibleAssociation)
        ));
    }

    #[test]
    fn ties_keep_first() {
        let s = hand_scenario(
            vec![vec![1.0, 1.0]],
            vec![1.0, 1.0],
            0.01,
            vec![1.0],
            vec![1.0],
        );
        let d = DemandMatrix::new(vec![0], 1).unwrap();
        let y = CachePlacement::empty(2, 1);
        let r = brute_force(&s, &d, &y, 0.5).unwrap();
        assert_eq!(r.best.assoc.as_slice(), &[0]);
        assert_eq!(r.feasible_count, 2);
    }
}
