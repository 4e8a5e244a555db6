use safe_sse::blueprint::{stage_sse_blueprint, uniform_blueprint, zero_sum_blueprint};
use safe_sse::efg::{expected_payoffs, SequenceForm, FLOW_TOL};
use safe_sse::io::gen::{goofspiel, goofspiel_surrogate, kuhn, two_stage, GoofspielSpec, TwoStageSpec};
use safe_sse::response::best_response;

#[test]
fn kuhn_value() {
    let g = kuhn();
    let bp = zero_sum_blueprint(&g, &g).unwrap();
    assert!((bp.value.unwrap() + 1.0 / 18.0).abs() < 1e-6, "{:?}", bp.value);
    let sf = SequenceForm::new(&g).unwrap();
    bp.plan.check(sf.leader(), FLOW_TOL).unwrap();
    let br = best_response(&sf, &bp.plan).unwrap();
    assert!((br.leader_value + 1.0 / 18.0).abs() < 1e-6);
}

#[test]
fn goofspiel4_blueprint() {
    let g = goofspiel(&GoofspielSpec { n: 4, seed: 0 }).unwrap();
    let s = goofspiel_surrogate(&g);
    let t = std::time::Instant::now();
    let bp = zero_sum_blueprint(&g, &s).unwrap();
    eprintln!("lp {:?} value {:?}", t.elapsed(), bp.value);
    let sf = SequenceForm::new(&g).unwrap();
    let br = best_response(&sf, &bp.plan).unwrap();
    eprintln!("general-sum ev {}", br.leader_value);
}

#[test]
fn uniform_and_stage() {
    let g = two_stage(&TwoStageSpec::new(2, 2, 2, 0.0, 7)).unwrap();
    let sf = SequenceForm::new(&g).unwrap();
    let u = uniform_blueprint(&g).unwrap();
    let s = stage_sse_blueprint(&g).unwrap();
    s.plan.check(sf.leader(), FLOW_TOL).unwrap();
    let br = best_response(&sf, &s.plan).unwrap();
    let ev = expected_payoffs(&sf, &s.plan, &br.plan).unwrap();
    assert!((ev.0 - br.leader_value).abs() < 1e-12);
    let again = stage_sse_blueprint(&g).unwrap();
    assert_eq!(again.plan, s.plan);
    assert!(u.plan.probs.iter().all(|&p| p == 1.0 || p == 0.5 || p == 0.25));
    assert!(stage_sse_blueprint(&kuhn()).is_err());
}
