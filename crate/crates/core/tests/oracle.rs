mod common;

use cachenet::baselines::min_power_for;
use cachenet::model::{relaxed_delay_cost, Association, CachePlacement, DemandMatrix};
use cachenet::oracle::{best_for_alpha, brute_force, enumerate_candidates};
use cachenet::scenario::Config;
use common::{desk, desk_with};

#[test]
fn single_sbs_has_one_candidate() {
    let config = Config {
        sbs_count: 1,
        ..Config::desk()
    };
    for seed in 0..5u64 {
        let (inst, y) = desk_with(&config, seed);
        let assoc = Association::new(vec![0; inst.scenario.user_count()], 1).unwrap();
        match min_power_for(&inst.scenario, &inst.demands, &assoc)
            .unwrap()
            .feasible()
        {
            Some((p, e)) => {
                let r = brute_force(&inst.scenario, &inst.demands, &y, 0.5).unwrap();
                assert_eq!(r.best.power, p);
                assert_eq!(r.best.energy, e);
                assert_eq!(r.feasible_count, 1);
            }
            None => assert!(brute_force(&inst.scenario, &inst.demands, &y, 0.5).is_err()),
        }
    }
}

#[test]
fn delay_only_optimum_separates_per_user() {
    let mut checked = 0;
    for seed in 0..60u64 {
        let (inst, y) = desk(seed);
        let s = &inst.scenario;
        let cands = enumerate_candidates(s, &inst.demands, &y, 1_000_000).unwrap();
        let best = best_for_alpha(&cands, 0.0).unwrap();
        let separable: Vec<f64> = (0..s.user_count())
            .map(|i| {
                (0..s.sbs_count())
                    .map(|j| relaxed_delay_cost(s, &inst.demands, &y, i, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let lower: f64 = separable.iter().sum();
        assert!(best.delay >= lower - 1e-9);
        // When the per-user choices are jointly power-feasible they are optimal.
        let per_user: Vec<usize> = (0..s.user_count())
            .map(|i| {
                (0..s.sbs_count())
                    .min_by(|&a, &b| {
                        relaxed_delay_cost(s, &inst.demands, &y, i, a)
                            .total_cmp(&relaxed_delay_cost(s, &inst.demands, &y, i, b))
                    })
                    .unwrap()
            })
            .collect();
        let assoc = Association::new(per_user, s.sbs_count()).unwrap();
        if cands.iter().any(|c| c.assoc == assoc) {
            assert!((best.delay - lower).abs() <= 1e-9 * lower);
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn endpoint_monotonicity() {
    for seed in 0..30u64 {
        let (inst, y) = desk(seed);
        let cands = enumerate_candidates(&inst.scenario, &inst.demands, &y, 1_000_000).unwrap();
        let e = best_for_alpha(&cands, 1.0).unwrap();
        let d = best_for_alpha(&cands, 0.0).unwrap();
        assert!(e.energy <= d.energy);
        assert!(d.delay <= e.delay);
    }
}

#[test]
fn empty_placement_never_helps() {
    for seed in 0..20u64 {
        let (inst, y) = desk(seed);
        let empty = CachePlacement::empty(inst.scenario.sbs_count(), inst.scenario.file_count());
        let with = brute_force(&inst.scenario, &inst.demands, &y, 0.5).unwrap();
        let without = brute_force(&inst.scenario, &inst.demands, &empty, 0.5).unwrap();
        assert!(with.objective.weighted <= without.objective.weighted + 1e-9);
    }
}

#[test]
fn demand_shape_is_checked() {
    let (inst, y) = desk(0);
    let wrong = DemandMatrix::new(vec![0; 2], inst.scenario.file_count()).unwrap();
    assert!(brute_force(&inst.scenario, &wrong, &y, 0.5).is_err());
}
