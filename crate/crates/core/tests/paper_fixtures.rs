//! Published Eurozone figures run through the public API.

use cvtree::analysis::{
    alignment_verdicts, extreme_leaves, group_comparison, verdict_row, ComparisonVariable, LowerRisk, Verdict,
    VerdictScope,
};
use cvtree::forest::ImportanceReport;
use cvtree::rescale::default_catalog;
use cvtree::select::{select_proxies, spec_fragment_toml, GroupCatalog};
use cvtree::tree::{import_json, RegressionTree};

const FACTORS: [&str; 6] = ["C", "A", "M", "E", "L", "S"];

fn eurozone_tree() -> RegressionTree {
    let text =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/figure2_tree.json")).unwrap();
    import_json(&text).unwrap()
}

#[test]
fn eurozone_tree_fixture_is_consistent() {
    let t = eurozone_tree();
    t.validate().unwrap();
    assert_eq!(t.total_n, 900);
    assert_eq!(t.n_leaves(), 6);
    // 24.44% of rows take the low-capital-risk branch
    let (l, r) = t.root.children().unwrap();
    let share_l = l.stats().n as f64 / t.total_n as f64;
    let share_r = r.stats().n as f64 / t.total_n as f64;
    assert_eq!(format!("{:.2}", 100.0 * share_l), "24.44");
    assert_eq!(format!("{:.2}", 100.0 * share_r), "75.56");
}

#[test]
fn eurozone_extreme_leaves_and_verdicts() {
    let t = eurozone_tree();
    let p = extreme_leaves(&t);
    assert_eq!(p.min.leaf.mean, 0.887);
    assert_eq!(p.max.leaf.mean, 1.079);
    assert_eq!(p.min.steps.len(), 4);
    assert_eq!(p.max.steps.len(), 2);
    let v = alignment_verdicts(&t, &p, VerdictScope::Paths);
    assert_eq!(verdict_row(&v, &FACTORS), ["No", "–", "–", "Yes", "Yes", "No"]);
    // capital is split twice on the Q^Min path, both times against alignment
    let c = v.iter().find(|f| f.factor == "C").unwrap();
    assert_eq!(c.verdict, Verdict::Misaligned);
    assert_eq!(c.nodes.len(), 2);
}

#[test]
fn all_nodes_scope_sees_the_same_factors_here() {
    // every split of this tree lies on one of the two extreme paths
    let t = eurozone_tree();
    let p = extreme_leaves(&t);
    let wide = alignment_verdicts(&t, &p, VerdictScope::AllNodes);
    assert_eq!(verdict_row(&wide, &FACTORS), ["No", "–", "–", "Yes", "Yes", "No"]);
}

#[test]
fn eurozone_selection_and_renaming() {
    let values = [
        ("Capt", 46.6),
        ("Capt_x", 30.0),
        ("Asts", 24.5),
        ("Asts_x", 23.4),
        ("Asts'_x", 22.7),
        ("Asts'", 20.1),
        ("Mang", 21.6),
        ("Mang'", 15.0),
        ("Mang''", 14.0),
        ("Mang'_x", 13.0),
        ("Ergs", 35.0),
        ("Ergs_x", 42.6),
        ("Ergs'", 30.0),
        ("Ergs'_x", 25.0),
        ("Liqt", 18.0),
        ("Liqt_x", 22.1),
        ("Liqt'", 17.0),
        ("Syst", 10.0),
    ];
    let r = select_proxies(
        &ImportanceReport::from_percentages(&values),
        &GroupCatalog::default_catalog(),
    )
    .unwrap();
    let specs = r.spec_fragment(&default_catalog()).unwrap();
    let names: Vec<&str> = specs.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, FACTORS);
    let toml = spec_fragment_toml(&specs);
    assert_eq!(toml.matches("[[proxies]]").count(), 6);
}

/// Two-point samples centred on the published group means.
fn around(mean: f64) -> Vec<f64> {
    vec![mean - 0.001, mean + 0.001]
}

#[test]
fn eurozone_lower_risk_flags_follow_raw_directions() {
    let catalog = default_catalog();
    let selected = ["Capt", "Asts", "Mang", "Ergs_x", "Liqt_x", "Syst"];
    // Q^Min and Q^Max group means of C, A, M, E, L, S
    let means = [
        (0.130, 0.061),
        (0.030, 0.029),
        (0.450, 0.661),
        (0.644, 1.329),
        (1.021, 0.927),
        (0.200, 0.670),
    ];
    let vars: Vec<ComparisonVariable> = selected
        .iter()
        .zip(FACTORS)
        .map(|(name, short)| {
            let spec = catalog.iter().find(|s| s.name == *name).unwrap();
            ComparisonVariable {
                name: short.into(),
                field: Some(spec.raw_field),
                direction: Some(spec.direction),
            }
        })
        .collect();
    let qmin: Vec<Vec<f64>> = means.iter().map(|m| around(m.0)).collect();
    let qmax: Vec<Vec<f64>> = means.iter().map(|m| around(m.1)).collect();
    let g = group_comparison(&qmin, &qmax, &vars).unwrap();
    use LowerRisk::*;
    let flags: Vec<LowerRisk> = g.rows.iter().map(|r| r.lower_risk.unwrap()).collect();
    assert_eq!(flags, [QMin, QMax, QMax, QMax, QMax, QMin]);
    for (row, m) in g.rows.iter().zip(means) {
        assert!((row.mean_qmin - m.0).abs() < 1e-12 && (row.mean_qmax - m.1).abs() < 1e-12);
    }
}
