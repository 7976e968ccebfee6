use spongelab_py::api;

#[test]
fn spec_queries() {
    let s = api::spec(2, vec![3, 5], None).unwrap();
    assert_eq!(api::scale(&s, 2).unwrap(), "1/15");
    assert_eq!(api::live_tile_count(&s, 2).unwrap(), "192");
    assert!(api::contains(&s, &["0".into(), "0".into()], None).unwrap());
    assert!(!api::contains(&s, &["1/2".into(), "1/2".into()], None).unwrap());
    let sep = api::min_separation(&api::spec(2, vec![3, 3], None).unwrap(), 2).unwrap();
    assert_eq!(sep["distance"], "1/9");
    assert!(api::spec(2, vec![4], None).is_err());
    let round = api::spec_from_json(r#"{"d": 3, "n": [3], "K": 1}"#).unwrap();
    assert_eq!(round.dim(), 3);
}

#[test]
fn heisenberg_and_constants() {
    let p = (0.3, -0.2, 0.7);
    assert_eq!(api::heis_mul(p, (0.0, 0.0, 0.0)), p);
    let d = api::heis_dilation(2.0, p).unwrap();
    assert!((api::heis_norm(d) - 2.0 * api::heis_norm(p)).abs() < 1e-12);
    assert!(api::heis_dist(p, p).abs() < 1e-15);
    assert_eq!(api::tau("1", "2", "1/2", "1").unwrap()["lo"], "1/16");
    assert_eq!(api::isoperimetric("2", "1", "1").unwrap()["Lambda"], "2/1");
    let f = api::filling(r#"{"c0": "7/1"}"#).unwrap();
    assert!(f["round_trip"].as_array().unwrap().iter().all(|t| t["holds"] == true));
    assert!(api::filling("[").is_err());
}

#[test]
fn suites_return_records() {
    let recs = api::projection_suite(&[2, 2], None, 1).unwrap();
    assert_eq!(recs[0]["values"]["checks"], 16);
    assert_eq!(recs[0]["status"], "pass");
    let turning = api::turning(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
    assert!(turning["c"].as_f64().unwrap() >= 1.0);
}
