mod common;

use cachenet::baselines::{min_power_for, PowerSolution};
use cachenet::benders::{
    build_subproblem_dual, delay_term, min_eta, satisfies_feasibility_cuts, solve_master,
    solve_subproblem, ucwt, varrho, Cut, CutKind, UcwtOptions,
};
use cachenet::lp::{solve, LpResult};
use cachenet::model::{
    relaxed_delay_costs, requested_threshold, Association, CachePlacement, DemandMatrix, Matrix,
    Point, Scenario, ScenarioParts,
};
use cachenet::oracle::{associations, brute_force, enumerate_candidates};
use cachenet::scenario::Config;
use common::{best_vertex, desk, desk_with, full_primal, rel_diff};

fn enumerate_master(
    inst: &cachenet::scenario::Instance,
    placement: &CachePlacement,
    cuts: &[Cut],
    alpha: f64,
) -> Option<(f64, Vec<usize>)> {
    let s = &inst.scenario;
    let costs = relaxed_delay_costs(s, &inst.demands, placement);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for serving in associations(s.user_count(), s.sbs_count()) {
        let x = Association::new(serving.clone(), s.sbs_count())
            .unwrap()
            .to_matrix();
        if !satisfies_feasibility_cuts(cuts, &x) {
            continue;
        }
        let v = alpha * min_eta(cuts, &x) + (1.0 - alpha) * delay_term(&costs, &x);
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, serving));
        }
    }
    best
}

#[test]
fn master_matches_enumeration() {
    for seed in 0..12u64 {
        let (inst, y) = desk(seed);
        let s = &inst.scenario;
        let rho = varrho(s, &inst.demands).unwrap();
        for alpha in [0.0, 0.3, 0.7, 1.0] {
            // Replays the decomposition, checking the master after every new cut.
            let mut cuts: Vec<Cut> = Vec::new();
            let mut x = Matrix::zeros(s.user_count(), s.sbs_count());
            for _ in 0..40 {
                let sub = solve_subproblem(s, &inst.demands, &x, rho).unwrap();
                let cut = Cut::from_dual(s, &inst.demands, rho, &sub.dual);
                if cuts.contains(&cut) {
                    break;
                }
                cuts.push(cut);
                let m = solve_master(s, &inst.demands, &y, &cuts, alpha).unwrap();
                let (v, serving) = enumerate_master(&inst, &y, &cuts, alpha).unwrap();
                assert_eq!(m.value, v, "seed {seed} alpha {alpha}");
                assert_eq!(m.assoc.as_slice(), serving.as_slice());
                x = m.assoc.to_matrix();
            }
        }
    }
}

#[test]
fn bounds_sandwich_the_oracle() {
    for seed in 0..15u64 {
        let (inst, y) = desk(seed);
        for alpha in [0.0, 0.5, 1.0] {
            let oracle = brute_force(&inst.scenario, &inst.demands, &y, alpha).unwrap();
            let opt = oracle.objective.weighted;
            let run = ucwt(
                &inst.scenario,
                &inst.demands,
                &y,
                alpha,
                &UcwtOptions::default(),
            )
            .unwrap();
            for r in &run.trace.records {
                let tol = 1e-9 * (1.0 + opt.abs());
                assert!(
                    r.psi_lower <= opt + tol,
                    "seed {seed}: lower {} > opt {opt}",
                    r.psi_lower
                );
                assert!(
                    r.psi_upper >= opt - tol,
                    "seed {seed}: upper {} < opt {opt}",
                    r.psi_upper
                );
            }
        }
    }
}

#[test]
fn every_generated_cut_is_valid() {
    for seed in 20..30u64 {
        let (inst, y) = desk(seed);
        let s = &inst.scenario;
        let cands = enumerate_candidates(s, &inst.demands, &y, 1_000_000).unwrap();
        let run = ucwt(s, &inst.demands, &y, 0.6, &UcwtOptions::default()).unwrap();
        for serving in associations(s.user_count(), s.sbs_count()) {
            let assoc = Association::new(serving, s.sbs_count()).unwrap();
            let x = assoc.to_matrix();
            let energy = cands.iter().find(|c| c.assoc == assoc).map(|c| c.energy);
            for cut in &run.trace.cuts {
                let h = cut.evaluate(&x);
                match (cut.kind, energy) {
                    (CutKind::Optimality, Some(e)) => assert!(h <= e + 1e-9 * (1.0 + e)),
                    (CutKind::Feasibility, Some(_)) => assert!(h <= 1e-9),
                    _ => {}
                }
            }
        }
    }
}

#[test]
fn dual_optimum_equals_primal_by_vertex_enumeration() {
    for seed in 40..60u64 {
        let (inst, _) = desk(seed);
        let s = &inst.scenario;
        let rho = varrho(s, &inst.demands).unwrap();
        for (t, serving) in associations(s.user_count(), s.sbs_count()).enumerate() {
            if t % 37 != 0 {
                continue;
            }
            let x = Association::new(serving, s.sbs_count())
                .unwrap()
                .to_matrix();
            let sub = solve_subproblem(s, &inst.demands, &x, rho).unwrap();
            let primal = best_vertex(&full_primal(s, &inst.demands, &x, rho), 1e-10);
            match (sub.value, primal) {
                (Some(m), Some((p, _))) => assert!(rel_diff(m, p) <= 1e-7, "{m} vs {p}"),
                (None, None) => {}
                (m, p) => panic!("seed {seed}: dual {m:?} primal {p:?}"),
            }
        }
    }
}

#[test]
fn full_dual_lp_agrees_with_reduced_solve() {
    for seed in 0..10u64 {
        let (inst, _) = desk(seed);
        let s = &inst.scenario;
        let rho = varrho(s, &inst.demands).unwrap();
        for serving in [vec![0; 6], vec![0, 1, 2, 0, 1, 2], vec![2; 6]] {
            let x = Association::new(serving, 3).unwrap().to_matrix();
            let sub = solve_subproblem(s, &inst.demands, &x, rho).unwrap();
            let full = solve(&build_subproblem_dual(s, &inst.demands, &x, rho).unwrap()).unwrap();
            match (sub.value, full) {
                (Some(m), LpResult::Optimal(sol)) => {
                    assert!(
                        rel_diff(m, sol.objective) <= 1e-6,
                        "{m} vs {}",
                        sol.objective
                    )
                }
                (None, LpResult::Unbounded { .. }) => {}
                (m, other) => panic!("reduced {m:?}, full {other:?}"),
            }
        }
    }
}

#[test]
fn varrho_keeps_unassigned_rows_slack() {
    for seed in 0..20u64 {
        let (inst, y) = desk(seed);
        let s = &inst.scenario;
        let rho = varrho(s, &inst.demands).unwrap();
        for c in enumerate_candidates(s, &inst.demands, &y, 1_000_000).unwrap() {
            let p = c.power.as_slice();
            for i in 0..s.user_count() {
                let gamma = requested_threshold(s, &inst.demands, i);
                for j in 0..s.sbs_count() {
                    if c.assoc.serving(i) == j {
                        continue;
                    }
                    let interference: f64 = (0..s.sbs_count())
                        .filter(|&l| l != j)
                        .map(|l| s.gain(i, l) * p[l])
                        .sum();
                    let lhs = s.gain(i, j) * p[j] - gamma * interference;
                    assert!(lhs >= gamma * s.noise_power() - 1.0 / rho);
                }
            }
        }
    }
}

fn line_scenario(gains: Vec<Vec<f64>>, thresholds: Vec<f64>) -> Scenario {
    let (u, b) = (gains.len(), gains[0].len());
    let f = thresholds.len();
    Scenario::new(ScenarioParts {
        sbs_positions: (0..b).map(|j| Point::new(10.0 * j as f64, 0.0)).collect(),
        user_positions: (0..u).map(|i| Point::new(i as f64, 3.0)).collect(),
        max_power: vec![1.0; b],
        cache_capacity: vec![1e6; b],
        backhaul_mean: (0..b).map(|j| 1.0 + j as f64).collect(),
        load_coefficients: vec![1.0 / b as f64; b],
        file_sizes: vec![1e6; f],
        sinr_thresholds: thresholds,
        bandwidth: 1e6,
        noise_power: 1e-3,
        pathloss_exponent: 3.0,
        channel_gains: Matrix::from_rows(&gains).unwrap(),
        alpha: 0.5,
        central_zone_radius: 25.0,
        penalty_lambda: 100.0,
    })
    .unwrap()
}

#[test]
fn single_sbs_is_solved_in_two_iterations() {
    let s = line_scenario(vec![vec![0.5], vec![0.2], vec![0.9]], vec![2.0, 3.0]);
    let d = DemandMatrix::new(vec![0, 1, 0], 2).unwrap();
    let y = CachePlacement::empty(1, 2);
    let run = ucwt(&s, &d, &y, 0.4, &UcwtOptions::default()).unwrap();
    assert!(run.converged());
    assert!(run.trace.iterations() <= 2);
    let PowerSolution::Feasible { power, .. } =
        min_power_for(&s, &d, &Association::new(vec![0; 3], 1).unwrap()).unwrap()
    else {
        panic!("feasible by construction")
    };
    assert_eq!(run.power, power);
}

#[test]
fn two_by_two_matches_oracle() {
    let s = line_scenario(vec![vec![0.8, 0.05], vec![0.1, 0.6]], vec![1.5, 2.5]);
    let d = DemandMatrix::new(vec![0, 1], 2).unwrap();
    let y = CachePlacement::new(&s, vec![vec![true, false], vec![false, true]]).unwrap();
    for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let run = ucwt(&s, &d, &y, alpha, &UcwtOptions::default()).unwrap();
        let oracle = brute_force(&s, &d, &y, alpha).unwrap();
        assert!(rel_diff(run.objective.weighted, oracle.objective.weighted) <= 1e-6);
    }
}

#[test]
fn gap_shrinks_monotonically_on_larger_instances() {
    let config = Config {
        user_count: 8,
        ..Config::desk()
    };
    for seed in 0..4u64 {
        let (inst, y) = desk_with(&config, seed);
        let run = ucwt(
            &inst.scenario,
            &inst.demands,
            &y,
            0.5,
            &UcwtOptions::default(),
        )
        .unwrap();
        assert!(run.converged());
        let gaps: Vec<f64> = run.trace.records.iter().map(|r| r.gap()).collect();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0]));
        assert!(*gaps.last().unwrap() <= run.trace.epsilon);
    }
}
