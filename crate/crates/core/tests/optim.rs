use proptest::prelude::*;
use safe_sse::blueprint::zero_sum_lp;
use safe_sse::efg::{GameBuilder, Player, SequenceForm};
use safe_sse::optim::{solve_lp, solve_milp, LinearProgram, MilpOptions, MilpProblem, Relation, SolveStatus};

fn lp_max(obj: &[f64], rows: &[(Vec<f64>, f64)]) -> LinearProgram {
    let mut lp = LinearProgram::new();
    let vars: Vec<usize> = obj
        .iter()
        .enumerate()
        .map(|(i, &c)| lp.add_var(format!("x{i}"), 0.0, 1.0, c))
        .collect();
    for (k, (coeffs, rhs)) in rows.iter().enumerate() {
        let row = vars.iter().zip(coeffs).map(|(&v, &a)| (v, a)).collect();
        lp.add_constraint(format!("r{k}"), row, Relation::Le, *rhs);
    }
    lp
}

/// Best LP value over every 0/1 assignment of the binaries.
fn enumerate(p: &MilpProblem) -> Option<f64> {
    let k = p.binaries.len();
    let mut best: Option<f64> = None;
    for mask in 0..(1u32 << k) {
        let mut lp = p.lp.clone();
        for (i, &b) in p.binaries.iter().enumerate() {
            let v = f64::from((mask >> i) & 1);
            lp.variables[b].lower = v;
            lp.variables[b].upper = v;
        }
        let s = solve_lp(&lp).unwrap();
        if s.status == SolveStatus::Optimal {
            best = Some(best.map_or(s.objective, |b: f64| b.max(s.objective)));
        }
    }
    best
}

fn random_milp() -> impl Strategy<Value = MilpProblem> {
    (2usize..=10, 0usize..=3, 1usize..=4).prop_flat_map(|(nb, nc, nr)| {
        let n = nb + nc;
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec((prop::collection::vec(-3.0f64..4.0, n), 0.5f64..4.0), nr),
        )
            .prop_map(move |(obj, rows)| {
                let obj: Vec<f64> = obj.iter().map(|c| (c * 8.0).round() / 8.0).collect();
                let rows: Vec<(Vec<f64>, f64)> = rows
                    .into_iter()
                    .map(|(r, b)| {
                        (
                            r.iter().map(|a| (a * 4.0).round() / 4.0).collect(),
                            (b * 4.0).round() / 4.0,
                        )
                    })
                    .collect();
                MilpProblem {
                    lp: lp_max(&obj, &rows),
                    binaries: (0..nb).collect(),
                }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn milp_matches_enumeration(p in random_milp()) {
        let s = solve_milp(&p, None, &MilpOptions::default()).unwrap();
        match enumerate(&p) {
            // All-zero is feasible for every row since rhs > 0.
            None => prop_assert!(false, "enumeration found nothing"),
            Some(v) => {
                prop_assert_eq!(s.status, SolveStatus::Optimal);
                prop_assert!((s.objective - v).abs() < 1e-6, "{} vs {}", s.objective, v);
                let x = s.values.unwrap();
                prop_assert!(p.is_feasible(&x));
            }
        }
    }

    #[test]
    fn incumbents_never_decrease(p in random_milp()) {
        let s = solve_milp(&p, None, &MilpOptions::default()).unwrap();
        prop_assert!(s.incumbents.windows(2).all(|w| w[1] >= w[0]));
        if let Some(last) = s.incumbents.last() {
            prop_assert_eq!(*last, s.objective);
        }
    }

    #[test]
    fn warm_start_not_worse(p in random_milp(), budget in 1usize..6) {
        let opts = MilpOptions { time_limit: None, node_limit: Some(budget) };
        let zero = vec![0.0; p.lp.num_vars()];
        let cold = solve_milp(&p, None, &opts).unwrap();
        let warm = solve_milp(&p, Some(&zero), &opts).unwrap();
        prop_assert!(warm.values.is_some());
        prop_assert!(warm.objective >= cold.objective - 1e-9);
        prop_assert!(warm.objective >= 0.0 - 1e-9);
    }
}

#[test]
fn trivial_lps() {
    let mut lp = LinearProgram::new();
    let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0);
    lp.add_constraint("c", vec![(x, 1.0)], Relation::Le, 3.0);
    assert!((solve_lp(&lp).unwrap().objective - 3.0).abs() < 1e-9);

    let lp = lp_max(&[1.0, 1.0], &[(vec![1.0, 1.0], 1.0)]);
    assert!((solve_lp(&lp).unwrap().objective - 1.0).abs() < 1e-9);
}

#[test]
fn infeasible_and_unbounded() {
    let mut lp = LinearProgram::new();
    let x = lp.add_var("x", 0.0, 1.0, 1.0);
    lp.add_constraint("c", vec![(x, 1.0)], Relation::Ge, 2.0);
    assert_eq!(solve_lp(&lp).unwrap().status, SolveStatus::Infeasible);

    let mut lp = LinearProgram::new();
    lp.add_var("x", 0.0, f64::INFINITY, 1.0);
    assert_eq!(solve_lp(&lp).unwrap().status, SolveStatus::Unbounded);
}

#[test]
fn matching_pennies_value_zero() {
    let mut b = GameBuilder::new("pennies");
    let root = b.decision(Player::Leader, "L", vec!["h", "t"]);
    for a in 0..2 {
        let f = b.decision(Player::Follower, "F", vec!["h", "t"]);
        b.attach(root, f);
        for c in 0..2 {
            let u = if a == c { 1.0 } else { -1.0 };
            let z = b.terminal(u, -u);
            b.attach(f, z);
        }
    }
    let g = b.build().unwrap();
    let sf = SequenceForm::new(&g).unwrap();
    let (value, plan) = zero_sum_lp(&sf).unwrap();
    assert!(value.abs() < 1e-9);
    assert!((plan[1] - 0.5).abs() < 1e-9 && (plan[2] - 0.5).abs() < 1e-9);
}

#[test]
fn lp_dump_lists_binaries() {
    let p = MilpProblem {
        lp: lp_max(&[3.0, 2.0], &[(vec![1.0, 1.0], 1.0)]),
        binaries: vec![0, 1],
    };
    let text = p.to_lp_string();
    assert!(text.starts_with("Maximize"));
    assert!(text.contains("Binaries\n x0\n x1\n"));
    assert!(text.trim_end().ends_with("End"));
}

#[test]
fn deterministic_solves() {
    let p = MilpProblem {
        lp: lp_max(
            &[3.0, 2.0, 4.0, 1.5, 2.5],
            &[
                (vec![2.0, 1.0, 3.0, 1.0, 2.0], 4.5),
                (vec![1.0, 2.0, 1.0, 3.0, 1.0], 3.5),
            ],
        ),
        binaries: vec![0, 1, 2, 3, 4],
    };
    let a = solve_milp(&p, None, &MilpOptions::default()).unwrap();
    let b = solve_milp(&p, None, &MilpOptions::default()).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(a.incumbents, b.incumbents);
    assert_eq!(a.nodes, b.nodes);
}
