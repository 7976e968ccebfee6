use spongelab::rational::{parse_q, q, to_f64};
use spongelab::report::Status;
use spongelab::suites::*;
use spongelab::SpongeSpec;

fn rational(v: &serde_json::Value) -> spongelab::Q {
    parse_q(v.as_str().unwrap()).unwrap()
}

#[test]
fn filling_delta_is_the_largest_dyadic_choice() {
    let delta = filling_delta(2, &q(1, 5)).unwrap();
    assert_eq!(delta, q(1, 4096));
    // 1 - (1 - delta)^2 < eps / (4^3 * 2 * pi), checked in floating point.
    let target = 0.2 / (64.0 * 2.0 * std::f64::consts::PI);
    let lhs = |d: f64| 1.0 - (1.0 - d).powi(2);
    assert!(lhs(to_f64(&delta)) < target);
    assert!(lhs(2.0 * to_f64(&delta)) >= target);
    assert!(filling_delta(2, &q(6, 5)).is_err());
}

#[test]
fn exact_product_formulas() {
    let cube = volume_check(&SpongeSpec::full(3, vec![3]).unwrap(), 1).unwrap();
    assert_eq!(cube.status, Status::Pass);
    assert_eq!(rational(&cube.values["mass"]), q(26, 27));
    let slice = half_slice_check(&SpongeSpec::full(2, vec![3, 3]).unwrap(), 2).unwrap();
    assert_eq!(rational(&slice.values["content"]), q(4, 9));
    let slice3 = half_slice_check(&SpongeSpec::full(3, vec![3]).unwrap(), 1).unwrap();
    assert_eq!(rational(&slice3.values["content"]), q(8, 9));
}

#[test]
fn separation_equality_case() {
    let recs = separation_suite(&[2], &[vec![3, 3]], &[2]).unwrap();
    assert_eq!(recs[0].status, Status::Pass);
    assert_eq!(recs[0].values["min_separation"], recs[0].values["bound"]);
}

#[test]
fn projection_counts() {
    let ex = projection_suite(&[2, 4], None, 0).unwrap();
    assert_eq!(ex.values["checks"], 256);
    assert_eq!(ex.status, Status::Pass);
    let rnd = projection_suite(&[4, 4, 4], Some(50), 3).unwrap();
    assert_eq!(rnd.values["checks"], 50);
    assert!(projection_suite(&[5, 5], None, 0).is_err());
}

#[test]
fn upgrade_suite_replays_the_threshold() {
    let g = level_graph(2, &[3, 9], 2, None).unwrap();
    let a = exponent_upgrade_suite(&g, 4.0, &q(1, 4), 120, 20, 11).unwrap();
    let b = exponent_upgrade_suite(&g, 4.0, &q(1, 4), 120, 20, 11).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let expected = if a.big_delta == 0.0 { 1.0 } else { (0.25 / (2.0 * a.big_delta)).powi(2).min(1.0) };
    assert!((a.tau0 - expected).abs() <= 1e-12 * expected);
    assert!(a.probes.iter().all(|p| p.tau < a.tau0));
    // Every selected feasible probe obeys penalty <= Delta tau d, hence the q = 2 bound.
    for p in a.probes.iter().filter(|p| p.metrics.is_some()) {
        let pen = p.metrics.as_ref().unwrap().penalty();
        assert!(pen <= a.big_delta * p.tau * p.distance * (1.0 + 1e-9) + 1e-9);
    }
    assert!(a.pass, "{:?}", a.check());
}

#[test]
fn weak_type_small_run() {
    let g = level_graph(2, &[3], 1, None).unwrap();
    let c = weak_type_suite(&g, 9, 4, 2).unwrap();
    assert_eq!(c.status, Status::Pass);
    assert_eq!(c.values["checks"], 36);
}

#[test]
fn heisenberg_identities_small_run() {
    let c = heis_identities(3000, 1).unwrap();
    assert_eq!(c.status, Status::Pass);
    assert_eq!(c.values["instances"], 3000);
}

#[test]
fn turning_suite_records() {
    let recs = turning_suite().unwrap();
    assert_eq!(recs.len(), 3);
    assert!(recs.iter().all(|r| r.status == Status::Pass));
}

#[test]
fn odd_sequence_values() {
    assert_eq!(odd_sequence(4), vec![3, 5, 7, 9]);
}
