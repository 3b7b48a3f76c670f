//! Graphviz DOT and JSON renderings of a tree.
//!
//! JSON schema: `{"feature_names": [..], "params": {"min_leaf", "max_depth"},
//! "total_n", "root": node}` where a node is either
//! `{"kind": "leaf", "n", "mean", "sse"}` or
//! `{"kind": "split", "feature", "threshold", "n", "mean", "sse", "left", "right"}`.
//! Floats are written in shortest round-trip form.

use std::fmt::Write;

use crate::error::Result;

use super::{RegressionTree, TreeNode};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Leaf indices (left-to-right) of the minimum and maximum leaf mean. Ties
/// go to the larger leaf, then the leftmost.
pub(crate) fn extreme_leaf_indices(tree: &RegressionTree) -> (usize, usize) {
    let leaves: Vec<_> = tree.leaf_paths().into_iter().map(|(_, s)| s).collect();
    let mut lo = 0;
    let mut hi = 0;
    for (i, s) in leaves.iter().enumerate() {
        let (l, h) = (&leaves[lo], &leaves[hi]);
        if s.mean < l.mean || (s.mean == l.mean && s.n > l.n) {
            lo = i;
        }
        if s.mean > h.mean || (s.mean == h.mean && s.n > h.n) {
            hi = i;
        }
    }
    (lo, hi)
}

/// DOT digraph. Internal nodes read `name < threshold`; the left edge is the
/// branch where that holds. Leaves show n and the mean response, and the
/// extreme leaves are tagged `Q^Min` / `Q^Max`. `labels` overrides the
/// tree's feature names.
pub fn export_dot(tree: &RegressionTree, labels: Option<&[String]>) -> String {
    let names = labels.unwrap_or(&tree.feature_names);
    let (lo, hi) = extreme_leaf_indices(tree);
    let mut out = String::from("digraph tree {\n  node [shape=box, fontname=\"Helvetica\"];\n");
    let mut next_id = 0usize;
    let mut leaf_no = 0usize;

    fn walk(
        node: &TreeNode,
        names: &[String],
        extremes: (usize, usize),
        next_id: &mut usize,
        leaf_no: &mut usize,
        out: &mut String,
    ) -> usize {
        let id = *next_id;
        *next_id += 1;
        let s = node.stats();
        match node {
            TreeNode::Leaf { .. } => {
                let mut label = format!("n = {}\\nQ = {:.3}", s.n, s.mean);
                let mut style = "";
                if *leaf_no == extremes.0 {
                    label.push_str("\\nQ^Min");
                    style = ", style=filled, fillcolor=\"#f4cccc\"";
                }
                if *leaf_no == extremes.1 {
                    label.push_str("\\nQ^Max");
                    style = ", style=filled, fillcolor=\"#d9ead3\"";
                }
                *leaf_no += 1;
                let _ = writeln!(out, "  n{id} [label=\"{label}\"{style}];");
            }
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                let name = names
                    .get(*feature)
                    .map(|n| escape(n))
                    .unwrap_or_else(|| format!("x{feature}"));
                let _ = writeln!(out, "  n{id} [label=\"{name} < {threshold:.3}\\nn = {}\"];", s.n);
                let l = walk(left, names, extremes, next_id, leaf_no, out);
                let r = walk(right, names, extremes, next_id, leaf_no, out);
                let _ = writeln!(out, "  n{id} -> n{l} [label=\"yes\"];");
                let _ = writeln!(out, "  n{id} -> n{r} [label=\"no\"];");
            }
        }
        id
    }

    walk(&tree.root, names, (lo, hi), &mut next_id, &mut leaf_no, &mut out);
    out.push_str("}\n");
    out
}

pub fn export_json(tree: &RegressionTree) -> String {
    serde_json::to_string_pretty(tree).expect("tree serializes")
}

pub fn import_json(text: &str) -> Result<RegressionTree> {
    let tree: RegressionTree = serde_json::from_str(text)?;
    tree.validate()?;
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::rescale::ScoredMatrix;
    use crate::tree::tests::four_rows;
    use crate::tree::{grow, NodeStats, SplitRule, TreeParams};
    use proptest::prelude::*;

    /// (node id, label) pairs and (from, to, label) edges.
    type Dot = (Vec<(String, String)>, Vec<(String, String, String)>);

    /// Minimal DOT reader for the subset `export_dot` writes: returns node
    /// labels by id and edges with their labels.
    fn parse_dot(text: &str) -> Dot {
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let body = text
            .trim()
            .strip_prefix("digraph tree {")
            .and_then(|s| s.strip_suffix('}'))
            .expect("digraph wrapper");
        for stmt in body.split(";\n").map(str::trim).filter(|s| !s.is_empty()) {
            let stmt = stmt.trim_end_matches(';');
            if stmt.starts_with("node ") {
                continue;
            }
            let (head, attrs) = stmt.split_once(" [").expect("attributes");
            let rest = attrs.split_once("label=\"").expect("label").1;
            let mut label = String::new();
            let mut chars = rest.chars();
            while let Some(c) = chars.next() {
                match c {
                    '\\' => {
                        label.push(c);
                        label.push(chars.next().expect("escaped char"));
                    }
                    '"' => break,
                    _ => label.push(c),
                }
            }
            if let Some((a, b)) = head.split_once(" -> ") {
                edges.push((a.to_string(), b.to_string(), label));
            } else {
                nodes.push((head.to_string(), label));
            }
        }
        (nodes, edges)
    }

    fn rebuild(id: &str, nodes: &[(String, String)], edges: &[(String, String, String)]) -> String {
        let label = &nodes.iter().find(|(n, _)| n == id).unwrap().1;
        let kids: Vec<&(String, String, String)> = edges.iter().filter(|e| e.0 == id).collect();
        match kids.as_slice() {
            [] => format!("leaf[{label}]"),
            [yes, no] => {
                assert_eq!((yes.2.as_str(), no.2.as_str()), ("yes", "no"));
                format!(
                    "({label} {} {})",
                    rebuild(&yes.1, nodes, edges),
                    rebuild(&no.1, nodes, edges)
                )
            }
            _ => panic!("node {id} has {} children", kids.len()),
        }
    }

    fn describe(node: &TreeNode, names: &[String]) -> String {
        match node.children() {
            None => format!("leaf[n = {}\\nQ = {:.3}", node.stats().n, node.stats().mean),
            Some((l, r)) => {
                let rule = node.rule().unwrap();
                format!(
                    "({} < {:.3}\\nn = {} {} {})",
                    names[rule.feature],
                    rule.threshold,
                    node.stats().n,
                    describe(l, names),
                    describe(r, names)
                )
            }
        }
    }

    #[test]
    fn single_leaf_and_stump() {
        let x = four_rows();
        let leaf = grow(
            &x,
            &TreeParams {
                min_leaf: 3,
                max_depth: None,
            },
        )
        .unwrap();
        let (nodes, edges) = parse_dot(&export_dot(&leaf, None));
        assert_eq!((nodes.len(), edges.len()), (1, 0));
        assert!(nodes[0].1.contains("Q^Min") && nodes[0].1.contains("Q^Max"));

        let stump = grow(
            &x,
            &TreeParams {
                min_leaf: 1,
                max_depth: None,
            },
        )
        .unwrap();
        let dot = export_dot(&stump, Some(&["C".to_string()]));
        let (nodes, edges) = parse_dot(&dot);
        assert_eq!((nodes.len(), edges.len()), (3, 2));
        assert_eq!(nodes[0].1, "C < 2.500\\nn = 4");
        assert!(dot.contains("n = 2\\nQ = 0.000\\nQ^Min"));
        assert!(dot.contains("n = 2\\nQ = 10.000\\nQ^Max"));
    }

    #[test]
    fn dot_round_trip_on_grown_tree() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 7) as f64, (i % 5) as f64]).collect();
        let y: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64).collect();
        let x = ScoredMatrix::from_rows(vec!["a".into(), "b\"q".into()], &rows, y).unwrap();
        let t = grow(
            &x,
            &TreeParams {
                min_leaf: 3,
                max_depth: None,
            },
        )
        .unwrap();
        let (nodes, edges) = parse_dot(&export_dot(&t, None));
        assert_eq!(nodes.len(), t.root.n_leaves() + t.root.n_internal());
        assert_eq!(edges.len(), nodes.len() - 1);
        let names: Vec<String> = t.feature_names.iter().map(|n| escape(n)).collect();
        let rebuilt = rebuild("n0", &nodes, &edges);
        let expected = describe(&t.root, &names);
        // leaf labels may carry extreme tags after the mean
        let strip = |s: &str| s.replace("\\nQ^Min", "").replace("\\nQ^Max", "").replace(']', "");
        assert_eq!(strip(&rebuilt), strip(&expected));
    }

    #[test]
    fn json_round_trip_and_errors() {
        let t = grow(
            &four_rows(),
            &TreeParams {
                min_leaf: 1,
                max_depth: Some(3),
            },
        )
        .unwrap();
        let text = export_json(&t);
        assert_eq!(import_json(&text).unwrap(), t);
        assert!(text.contains("\"kind\": \"split\""));
        let truncated = &text[..text.len() / 2];
        assert!(matches!(import_json(truncated), Err(Error::TreeJson(_))));
    }

    #[test]
    fn import_rejects_inconsistent_counts() {
        let bad = RegressionTree {
            feature_names: vec!["a".into()],
            params: TreeParams::default(),
            total_n: 10,
            root: TreeNode::split(
                SplitRule {
                    feature: 0,
                    threshold: 1.0,
                },
                NodeStats {
                    n: 10,
                    mean: 1.0,
                    sse: 1.0,
                },
                TreeNode::leaf(NodeStats {
                    n: 3,
                    mean: 1.0,
                    sse: 0.0,
                }),
                TreeNode::leaf(NodeStats {
                    n: 3,
                    mean: 1.0,
                    sse: 0.0,
                }),
            ),
        };
        let text = export_json(&bad);
        assert!(matches!(import_json(&text), Err(Error::InvalidTree(_))));
    }

    fn arb_node(depth: u32) -> impl Strategy<Value = TreeNode> {
        let leaf = (
            1usize..100,
            any::<f64>().prop_filter("finite", |v| v.is_finite()),
            0.0..1e6f64,
        )
            .prop_map(|(n, mean, sse)| TreeNode::leaf(NodeStats { n, mean, sse }));
        leaf.prop_recursive(depth, 32, 2, |inner| {
            (
                0usize..4,
                any::<f64>().prop_filter("finite", |v| v.is_finite()),
                -10.0..10.0f64,
                0.0..1e6f64,
                inner.clone(),
                inner,
            )
                .prop_map(|(feature, threshold, mean, sse, l, r)| {
                    let n = l.stats().n + r.stats().n;
                    TreeNode::split(SplitRule { feature, threshold }, NodeStats { n, mean, sse }, l, r)
                })
        })
    }

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(root in arb_node(5)) {
            let t = RegressionTree {
                feature_names: (0..4).map(|i| format!("f{i}")).collect(),
                params: TreeParams { min_leaf: 1, max_depth: None },
                total_n: root.stats().n,
                root,
            };
            let back = import_json(&export_json(&t)).unwrap();
            fn bits(a: &TreeNode, b: &TreeNode) -> bool {
                let (sa, sb) = (a.stats(), b.stats());
                let same = sa.n == sb.n && sa.mean.to_bits() == sb.mean.to_bits() && sa.sse.to_bits() == sb.sse.to_bits()
                    && a.rule().map(|r| (r.feature, r.threshold.to_bits())) == b.rule().map(|r| (r.feature, r.threshold.to_bits()));
                same && match (a.children(), b.children()) {
                    (None, None) => true,
                    (Some((al, ar)), Some((bl, br))) => bits(al, bl) && bits(ar, br),
                    _ => false,
                }
            }
            prop_assert!(bits(&t.root, &back.root));
        }
    }
}
