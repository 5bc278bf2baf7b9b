mod common;

use cachenet::lp::{solve, LinearProgram, LpResult, RowSense, Sense};
use common::{best_vertex, is_feasible};
use proptest::prelude::*;

fn build(
    sense: Sense,
    c: Vec<f64>,
    rows: Vec<(Vec<f64>, u8, f64)>,
    uppers: Vec<Option<f64>>,
) -> LinearProgram {
    let mut lp = LinearProgram::new(sense, c);
    for (coeffs, kind, rhs) in rows {
        let s = match kind % 3 {
            0 => RowSense::Le,
            1 => RowSense::Ge,
            _ => RowSense::Eq,
        };
        lp.add_row(coeffs, s, rhs);
    }
    for (j, u) in uppers.into_iter().enumerate() {
        if let Some(u) = u {
            lp.set_bounds(j, 0.0, u);
        }
    }
    lp
}

fn lp_strategy() -> impl Strategy<Value = LinearProgram> {
    (1usize..=4, 1usize..=4, any::<bool>()).prop_flat_map(|(n, m, max)| {
        let coef = (-5i32..=5).prop_map(f64::from);
        (
            prop::collection::vec(coef.clone(), n),
            prop::collection::vec(
                (
                    prop::collection::vec(coef.clone(), n),
                    0u8..6,
                    (-10i32..=10).prop_map(f64::from),
                ),
                m,
            ),
            prop::collection::vec(
                prop::option::weighted(0.3, (1i32..=6).prop_map(f64::from)),
                n,
            ),
        )
            .prop_map(move |(c, rows, ups)| {
                build(if max { Sense::Max } else { Sense::Min }, c, rows, ups)
            })
    })
}

fn check_certificates(lp: &LinearProgram, result: &LpResult) -> Result<(), TestCaseError> {
    match result {
        LpResult::Optimal(sol) => {
            prop_assert!(is_feasible(lp, &sol.x, 1e-9));
            let v: f64 = lp.objective.iter().zip(&sol.x).map(|(c, x)| c * x).sum();
            prop_assert!((v - sol.objective).abs() <= 1e-9 * (1.0 + v.abs()));
        }
        LpResult::Unbounded { point, ray } => {
            prop_assert!(is_feasible(lp, point, 1e-9));
            let gain: f64 = lp.objective.iter().zip(ray).map(|(c, r)| c * r).sum();
            match lp.sense {
                Sense::Max => prop_assert!(gain > 1e-9),
                Sense::Min => prop_assert!(gain < -1e-9),
            }
            for (j, r) in ray.iter().enumerate() {
                prop_assert!(*r >= -1e-9);
                if lp.upper[j].is_finite() {
                    prop_assert!(r.abs() <= 1e-9);
                }
            }
            for (row, sense) in lp.rows.iter().zip(&lp.row_senses) {
                let a: f64 = row.iter().zip(ray).map(|(a, r)| a * r).sum();
                match sense {
                    RowSense::Le => prop_assert!(a <= 1e-9),
                    RowSense::Ge => prop_assert!(a >= -1e-9),
                    RowSense::Eq => prop_assert!(a.abs() <= 1e-9),
                }
            }
        }
        LpResult::Infeasible(cert) => {
            let n = lp.num_vars();
            let mut v = vec![0.0; n];
            let mut bound = 0.0;
            for (r, (row, sense)) in lp.rows.iter().zip(&lp.row_senses).enumerate() {
                let y = cert.row_multipliers[r];
                match sense {
                    RowSense::Le => prop_assert!(y >= -1e-12),
                    RowSense::Ge => prop_assert!(y <= 1e-12),
                    RowSense::Eq => {}
                }
                for j in 0..n {
                    v[j] += row[j] * y;
                }
                bound += lp.rhs[r] * y;
            }
            for j in 0..n {
                let z = cert.upper_multipliers[j];
                prop_assert!(z >= -1e-12);
                if lp.upper[j].is_finite() {
                    v[j] += z;
                    bound += lp.upper[j] * z;
                }
            }
            for vj in &v {
                prop_assert!(*vj >= -1e-9);
            }
            prop_assert!(bound < -1e-9, "certificate bound {bound}");
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn simplex_agrees_with_vertex_enumeration(lp in lp_strategy()) {
        let result = solve(&lp).unwrap();
        check_certificates(&lp, &result)?;
        let vertex = best_vertex(&lp, 1e-9);
        match (&result, vertex) {
            (LpResult::Optimal(sol), Some((v, _))) => {
                prop_assert!((sol.objective - v).abs() <= 1e-8 * (1.0 + v.abs()),
                    "simplex {} vertices {}", sol.objective, v);
            }
            (LpResult::Optimal(_), None) => prop_assert!(false, "optimal but no feasible vertex"),
            (LpResult::Infeasible(_), Some(_)) => prop_assert!(false, "certified infeasible yet a vertex is feasible"),
            _ => {}
        }
    }

    #[test]
    fn objective_scaling_scales_optimum(lp in lp_strategy(), k in 1u32..100) {
        let mut scaled = lp.clone();
        for c in &mut scaled.objective {
            *c *= f64::from(k);
        }
        if let (LpResult::Optimal(a), LpResult::Optimal(b)) = (solve(&lp).unwrap(), solve(&scaled).unwrap()) {
            prop_assert!((a.objective * f64::from(k) - b.objective).abs() <= 1e-8 * (1.0 + b.objective.abs()));
        }
    }
}

#[test]
fn shadow_prices_match_finite_differences() {
    let mut lp = LinearProgram::new(Sense::Max, vec![3.0, 5.0]);
    lp.add_row(vec![1.0, 0.0], RowSense::Le, 4.0);
    lp.add_row(vec![0.0, 2.0], RowSense::Le, 12.0);
    lp.add_row(vec![3.0, 2.0], RowSense::Le, 18.0);
    let base = solve(&lp).unwrap().optimal().unwrap().clone();
    for r in 0..3 {
        let mut bumped = lp.clone();
        bumped.rhs[r] += 1e-3;
        let v = solve(&bumped).unwrap().optimal().unwrap().objective;
        let fd = (v - base.objective) / 1e-3;
        assert!(
            (fd - base.row_duals[r]).abs() < 1e-6,
            "row {r}: {fd} vs {}",
            base.row_duals[r]
        );
    }
}
