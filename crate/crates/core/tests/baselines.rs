mod common;

use cachenet::baselines::{doa, ema, min_power_for, PowerSolution};
use cachenet::model::{
    check_feasible, path_gain, Association, CachePlacement, DemandMatrix, Matrix, Point, Scenario,
    ScenarioParts,
};
use cachenet::oracle::brute_force;
use common::desk;

/// Two SBSs 100 m apart with users on the segment between them.
fn two_cell_line(user_x: &[f64], thresholds: Vec<f64>, noise: f64) -> Scenario {
    let sbs = vec![Point::new(0.0, 0.0), Point::new(100.0, 0.0)];
    let users: Vec<Point> = user_x.iter().map(|&x| Point::new(x, 0.0)).collect();
    let gains = Matrix::from_fn(users.len(), 2, |i, j| {
        path_gain(users[i].distance(&sbs[j]), 3.0)
    });
    let f = thresholds.len();
    Scenario::new(ScenarioParts {
        sbs_positions: sbs,
        user_positions: users,
        max_power: vec![0.2; 2],
        cache_capacity: vec![1e6; 2],
        backhaul_mean: vec![20.0; 2],
        load_coefficients: vec![0.5; 2],
        file_sizes: vec![1e6; f],
        sinr_thresholds: thresholds,
        bandwidth: 2e5,
        noise_power: noise,
        pathloss_exponent: 3.0,
        channel_gains: gains,
        alpha: 0.5,
        central_zone_radius: 25.0,
        penalty_lambda: 100.0,
    })
    .unwrap()
}

fn fig1() -> (Scenario, DemandMatrix, CachePlacement) {
    let s = two_cell_line(&[10.0, 20.0, 45.0, 55.0, 80.0, 90.0], vec![0.5, 0.5], 1e-12);
    // u1, u2, u4 want f1 (cached at b1); u3, u5, u6 want f2 (cached at b2)
    let d = DemandMatrix::new(vec![0, 0, 1, 0, 1, 1], 2).unwrap();
    let y = CachePlacement::new(&s, vec![vec![true, false], vec![false, true]]).unwrap();
    (s, d, y)
}

#[test]
fn figure_one_nearest_association() {
    let (s, d, _) = fig1();
    let r = ema(&s, &d).unwrap();
    assert_eq!(r.assoc.as_slice(), &[0, 0, 0, 1, 1, 1]);
    assert!(check_feasible(&s, &d, &r.assoc.to_matrix(), &r.power).is_ok());
}

#[test]
fn figure_one_delay_oriented_association() {
    let (s, d, y) = fig1();
    let r = doa(&s, &d, &y).unwrap();
    assert_eq!(r.assoc.as_slice(), &[0, 0, 1, 0, 1, 1]);
    assert!(check_feasible(&s, &d, &r.assoc.to_matrix(), &r.power).is_ok());
}

#[test]
fn uncached_files_follow_backhaul_delay() {
    let (s, d, _) = fig1();
    let mut parts = s.into_parts();
    parts.backhaul_mean = vec![30.0, 10.0];
    let s = Scenario::new(parts).unwrap();
    let y = CachePlacement::empty(2, 2);
    let r = doa(&s, &d, &y).unwrap();
    assert!(r.assoc.as_slice().iter().all(|&j| j == 1));
}

#[test]
fn equidistant_user_takes_lowest_index() {
    let s = two_cell_line(&[50.0], vec![0.5], 1e-12);
    let d = DemandMatrix::new(vec![0], 1).unwrap();
    assert_eq!(ema(&s, &d).unwrap().assoc.as_slice(), &[0]);
}

#[test]
fn single_link_power_closed_form() {
    let s = two_cell_line(&[10.0], vec![2.0], 1e-9);
    let d = DemandMatrix::new(vec![0], 1).unwrap();
    let a = Association::new(vec![0], 2).unwrap();
    let PowerSolution::Feasible { power, .. } = min_power_for(&s, &d, &a).unwrap() else {
        panic!("reachable")
    };
    let expected = 2.0 * 1e-9 / s.gain(0, 0);
    assert!((power.as_slice()[0] - expected).abs() <= 1e-9 * expected);
    assert_eq!(power.as_slice()[1], 0.0);
}

/// The instance without its first user.
fn drop_first_user(s: &Scenario, d: &DemandMatrix) -> (Scenario, DemandMatrix) {
    let mut parts = s.parts().clone();
    parts.user_positions.remove(0);
    let g = &parts.channel_gains;
    parts.channel_gains = Matrix::from_fn(g.rows() - 1, g.cols(), |i, j| g[(i + 1, j)]);
    let reduced = Scenario::new(parts).unwrap();
    let demands = DemandMatrix::new(d.requests()[1..].to_vec(), d.file_count()).unwrap();
    (reduced, demands)
}

#[test]
fn adding_an_interfering_link_never_lowers_power() {
    let mut compared = 0;
    for seed in 0..60u64 {
        let (inst, _) = desk(seed);
        let s = &inst.scenario;
        let (small, small_d) = drop_first_user(s, &inst.demands);
        for serving in cachenet::oracle::associations(s.user_count(), s.sbs_count()) {
            let full = Association::new(serving.clone(), s.sbs_count()).unwrap();
            let Some((p1, _)) = min_power_for(s, &inst.demands, &full).unwrap().feasible() else {
                continue;
            };
            let rest = Association::new(serving[1..].to_vec(), s.sbs_count()).unwrap();
            let (p0, _) = min_power_for(&small, &small_d, &rest)
                .unwrap()
                .feasible()
                .expect("dropping a user keeps feasibility");
            for (a, b) in p1.as_slice().iter().zip(p0.as_slice()) {
                assert!(*a >= b * (1.0 - 1e-9), "seed {seed}: {a} < {b}");
            }
            compared += 1;
        }
    }
    assert!(compared > 100);
}

#[test]
fn baselines_never_beat_the_oracle() {
    for seed in 0..40u64 {
        let (inst, y) = desk(seed);
        let s = &inst.scenario;
        let d = &inst.demands;
        for alpha in [0.0, 0.5, 1.0] {
            let best = brute_force(s, d, &y, alpha).unwrap().objective.weighted;
            for r in [ema(s, d), doa(s, d, &y)].into_iter().flatten() {
                assert!(check_feasible(s, d, &r.assoc.to_matrix(), &r.power).is_ok());
                let delay = cachenet::model::relaxed_total_delay(s, d, &y, &r.assoc);
                let v = alpha * r.energy + (1.0 - alpha) * delay;
                assert!(
                    best <= v + 1e-9 * (1.0 + v.abs()),
                    "seed {seed}: oracle {best} > {v}"
                );
            }
        }
    }
}
