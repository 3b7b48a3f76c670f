use cvtree_demo::{grow_planted_json, ks_test_json, parse_values, rescale_curve_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

fn scores(v: &Value) -> Vec<f64> {
    v["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p[1].as_f64().unwrap())
        .collect()
}

#[test]
fn value_parsing() {
    assert_eq!(parse_values("1, 2;3\n4 5").unwrap(), [1.0, 2.0, 3.0, 4.0, 5.0]);
    assert!(parse_values("  ").is_err());
    assert!(parse_values("1, x").is_err());
    assert!(parse_values("1, inf").is_err());
}

#[test]
fn quartile_and_threshold_curves() {
    let v = parse(rescale_curve_json("0 1 2 3 4", "increasing", None).unwrap());
    assert_eq!(scores(&v), [1.0, 2.0, 3.0, 4.0, 5.0]);
    assert_eq!(v["knots"].as_array().unwrap().len(), 5);
    assert_eq!(v["curve"].as_array().unwrap().len(), 201);

    let v = parse(rescale_curve_json("0.02, 0.06, 0.10", "decreasing", Some(0.06)).unwrap());
    assert_eq!(scores(&v), [5.0, 2.0, 1.0]);
    // a NaN cutoff from an empty input box falls back to quartiles
    let v = parse(rescale_curve_json("0.02, 0.06, 0.10", "decreasing", Some(f64::NAN)).unwrap());
    assert_eq!(scores(&v), [5.0, 3.0, 1.0]);
    assert!(rescale_curve_json("1 2", "sideways", None).is_err());
}

#[test]
fn planted_tree_is_recovered_and_repeatable() {
    let a = grow_planted_json(500, 0.05, 3, 30, "one-se").unwrap();
    assert_eq!(a, grow_planted_json(500, 0.05, 3, 30, "one-se").unwrap());
    let v = parse(a);
    assert_eq!(v["leaves"], 4);
    assert!((v["qmin"]["mean"].as_f64().unwrap()).abs() < 0.05);
    assert!((v["qmax"]["mean"].as_f64().unwrap() - 3.0).abs() < 0.05);
    assert_eq!(v["qmin"]["path"], "C<3.125, A<2.375");
    assert_eq!(v["outline"][0], "C < 3.125");
    assert!(v["dot"].as_str().unwrap().starts_with("digraph tree {"));
    // the low-score side carries the low mean everywhere, so nothing aligns
    let row: Vec<&str> = v["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p[1].as_str().unwrap())
        .collect();
    assert_eq!(row, ["No", "No", "No", "–", "–"]);
    let p = &v["pruning"];
    assert_eq!(
        p["alphas"].as_array().unwrap().len(),
        p["cv_mean"].as_array().unwrap().len()
    );
}

#[test]
fn grow_rejects_bad_input() {
    assert!(grow_planted_json(5, 0.1, 1, 5, "one-se").is_err());
    assert!(grow_planted_json(500, -1.0, 1, 5, "one-se").is_err());
    assert!(grow_planted_json(500, 0.1, 1, 5, "best").is_err());
}

#[test]
fn ks_with_ecdf_steps() {
    let v = parse(ks_test_json("1 2 3", "1 2 3").unwrap());
    assert_eq!(v["d"], 0.0);
    assert_eq!(v["p"], 1.0);
    assert_eq!(v["stars"], "");

    let v = parse(ks_test_json("1 1 2", "5 6").unwrap());
    assert_eq!(v["d"], 1.0);
    let steps = v["ecdf_a"].as_array().unwrap();
    assert_eq!(steps.len(), 2);
    assert!((steps[0][1].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(steps[1][1], 1.0);
}
