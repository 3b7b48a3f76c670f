//! The full segmentation study over configured subsamples, and its on-disk
//! bundle.
//!
//! Bundle layout (all CSV floats in shortest round-trip form):
//!
//! - `report.md`
//! - `exclusions.csv`: row_id, bank_id, year, reason
//! - `tables/subsamples.csv`: subsample, status, n_rows, min_leaf, leaves,
//!   chosen_alpha, qmin, qmin_n, qmin_share, qmin_path, qmax, qmax_n,
//!   qmax_share, qmax_path, reason
//! - `tables/summary.csv`: subsample, variable, n, mean, std_dev, min, max
//! - `tables/correlations.csv`: subsample, variable, n, r, p_value, stars
//! - `tables/selection.csv`: scope, group, proxy, pct_inc_mse
//! - `tables/importance.csv`: scope, feature, pct_inc_mse, raw_delta, std_err
//! - `tables/comparison.csv`: subsample, variable, n_qmin, n_qmax,
//!   mean_qmin, mean_qmax, ks_d, p_value, stars, lower_risk
//! - `tables/verdicts.csv`: subsample, factor, verdict, label, n_nodes,
//!   evidence
//! - `tables/pruning.csv`: subsample, alpha, cv_mean, cv_se, chosen
//! - `trees/<subsample>.dot`, `trees/<subsample>.json`

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SelectionMode, SelectionSample, SelectionScope, SubsampleSpec};
use crate::dataset::{
    attach_betas, compute_raw_proxies, filter_all, load_panel, summary_stats, ExclusionLog, Panel, PriceTable,
    RawField, Summary,
};
use crate::error::{Error, Result};
use crate::forest::{grow_forest, permutation_importance, FeatureImportance, ForestParams, ImportanceReport};
use crate::rescale::{build_scored_matrix, specs_by_name, ProxySpec, RescaleScope};
use crate::seed::{self, stream};
use crate::select::{select_proxies, GroupCatalog, SelectionResult};
use crate::tree::{cv_prune, export_dot, export_json, CvParams, PruneTrace, RegressionTree, TreeParams};

use super::compare::lower_risk_label;
use super::stats::{pearson, stars, PearsonResult};
use super::{
    alignment_verdicts, extreme_leaves, group_comparison, verdict_row, ComparisonVariable, ExtremePaths, FactorVerdict,
    GroupComparison, LeafPath,
};

const FACTORS: [&str; 6] = ["C", "A", "M", "E", "L", "S"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeOutcome {
    /// Specs used, renamed to their group letters.
    pub specs: Vec<ProxySpec>,
    /// Selection made inside this subsample, if any.
    pub selection: Option<SelectionResult>,
    pub tree: RegressionTree,
    pub trace: PruneTrace,
    pub paths: ExtremePaths,
    pub verdicts: Vec<FactorVerdict>,
    pub correlations: Vec<(String, Option<PearsonResult>)>,
    pub comparison: GroupComparison,
    pub summary: Vec<(String, Summary)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SubsampleStatus {
    Tree(Box<TreeOutcome>),
    NoTree { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleOutcome {
    pub name: String,
    /// Panel rows matching the criteria.
    pub n_rows: usize,
    pub min_leaf: usize,
    pub status: SubsampleStatus,
}

impl SubsampleOutcome {
    pub fn tree(&self) -> Option<&TreeOutcome> {
        match &self.status {
            SubsampleStatus::Tree(t) => Some(t),
            SubsampleStatus::NoTree { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub seed: u64,
    pub provenance: String,
    pub n_panel: usize,
    pub exclusions: ExclusionLog,
    pub rescale_scope: RescaleScope,
    /// Selection made once on the whole panel.
    pub selection: Option<SelectionResult>,
    pub subsamples: Vec<SubsampleOutcome>,
}

/// Loads the configured panel, attaching betas when a price file is set.
pub fn load_configured_panel(config: &RunConfig) -> Result<(Panel, ExclusionLog)> {
    let ingest = load_panel(&config.data.path, &config.data.columns, config.data.window)?;
    let mut panel = ingest.panel;
    if let Some(p) = &config.data.prices {
        attach_betas(&mut panel, &PriceTable::load(p)?);
    }
    Ok((panel, ingest.exclusions))
}

/// Loads the configured panel and runs [`study_panel`] on it.
pub fn run_study(config: &RunConfig) -> Result<StudyReport> {
    let (panel, exclusions) = load_configured_panel(config)?;
    study_panel(&panel, exclusions, config)
}

fn rename_to_letters(specs: Vec<ProxySpec>) -> Vec<ProxySpec> {
    specs
        .into_iter()
        .map(|mut s| {
            s.name = s.group.letter().to_string();
            s
        })
        .collect()
}

fn forest_params(config: &RunConfig, seed: u64) -> ForestParams {
    ForestParams {
        n_trees: config.forest.n_trees,
        mtry: config.forest.mtry,
        min_leaf: config.forest.min_leaf,
        seed,
        ..ForestParams::default()
    }
}

fn importance_for(
    panel: &Panel,
    specs: &[ProxySpec],
    reference: Option<&Panel>,
    params: &ForestParams,
) -> Result<ImportanceReport> {
    let x = build_scored_matrix(panel, specs, reference)?.matrix;
    let mut p = *params;
    if let Some(m) = p.mtry {
        p.mtry = Some(m.min(x.n_features()));
    }
    let forest = grow_forest(&x, &p)?;
    permutation_importance(&forest, &x, seed::sub_seed(params.seed, stream::PERMUTATION, 0))
}

/// Forest-based proxy choice on `panel` (joint or one forest per group).
pub fn rf_selection(
    panel: &Panel,
    config: &RunConfig,
    reference: Option<&Panel>,
    seed: u64,
) -> Result<SelectionResult> {
    let catalog = GroupCatalog::from_specs(&config.proxies)?;
    let params = forest_params(config, seed);
    let importance = match config.selection.scope {
        SelectionScope::Joint => importance_for(panel, &config.proxies, reference, &params)?,
        SelectionScope::PerGroup => {
            let mut features: Vec<FeatureImportance> = Vec::new();
            let mut trees_used = 0;
            for (i, (_, names)) in catalog.0.iter().enumerate() {
                let specs = specs_by_name(&config.proxies, names)?;
                let p = ForestParams {
                    seed: seed::sub_seed(seed, stream::STUDY, i as u64),
                    ..params
                };
                let r = importance_for(panel, &specs, reference, &p)?;
                trees_used += r.trees_used;
                features.extend(r.features);
            }
            ImportanceReport {
                features,
                oob_mse: f64::NAN,
                trees_used,
            }
        }
    };
    select_proxies(&importance, &catalog)
}

/// The whole-panel forest selection that [`study_panel`] makes when
/// selection runs on the full sample.
pub fn panel_selection(panel: &Panel, config: &RunConfig) -> Result<SelectionResult> {
    let reference = match config.rescale_scope {
        RescaleScope::Full => Some(panel),
        RescaleScope::Subsample => None,
    };
    rf_selection(
        panel,
        config,
        reference,
        seed::sub_seed(config.seed, stream::FOREST_TREE, u64::MAX),
    )
}

fn fixed_specs(config: &RunConfig) -> Result<Vec<ProxySpec>> {
    specs_by_name(&config.proxies, &config.selection.proxies)
}

fn is_degenerate(e: &Error) -> bool {
    matches!(e, Error::EmptySubsample(_) | Error::EmptyModel(_))
}

struct Context<'a> {
    config: &'a RunConfig,
    panel: &'a Panel,
    global_specs: Option<Vec<ProxySpec>>,
}

fn column_for(x: &crate::rescale::ScoredBuild, rows: &[usize], field: Option<RawField>) -> Vec<f64> {
    rows.iter()
        .map(|&i| {
            let r = &x.raw.rows[i];
            match field {
                None => r.q,
                Some(f) => r.get(f).expect("active field present"),
            }
        })
        .collect()
}

fn run_subsample(ctx: &Context, spec: &SubsampleSpec, index: usize) -> Result<SubsampleOutcome> {
    let config = ctx.config;
    let min_leaf = config.min_leaf_for(spec);
    let sub_seed = seed::sub_seed(config.seed, stream::STUDY, index as u64);
    let no_tree = |n_rows, reason: String| {
        Ok(SubsampleOutcome {
            name: spec.name.clone(),
            n_rows,
            min_leaf,
            status: SubsampleStatus::NoTree { reason },
        })
    };
    let sub = match filter_all(ctx.panel, &spec.criteria) {
        Ok(p) => p,
        Err(e) if is_degenerate(&e) => return no_tree(0, e.to_string()),
        Err(e) => return Err(e),
    };
    let n_rows = sub.len();
    let reference = match config.rescale_scope {
        RescaleScope::Full => Some(ctx.panel),
        RescaleScope::Subsample => None,
    };

    let mut selection = None;
    let specs = match &ctx.global_specs {
        Some(s) => s.clone(),
        None => {
            if n_rows < 2 * config.forest.min_leaf {
                return no_tree(n_rows, format!("{n_rows} rows are too few for forest selection"));
            }
            match rf_selection(
                &sub,
                config,
                reference,
                seed::sub_seed(sub_seed, stream::FOREST_TREE, 0),
            ) {
                Ok(r) => {
                    let s = rename_to_letters(r.spec_fragment(&config.proxies)?);
                    selection = Some(r);
                    s
                }
                Err(e) if is_degenerate(&e) => return no_tree(n_rows, e.to_string()),
                Err(e) => return Err(e),
            }
        }
    };

    let build = match build_scored_matrix(&sub, &specs, reference) {
        Ok(b) => b,
        Err(e) if is_degenerate(&e) => return no_tree(n_rows, e.to_string()),
        Err(e) => return Err(e),
    };
    let x = &build.matrix;
    let n = x.n_rows();
    if n < 2 * min_leaf {
        return no_tree(
            n_rows,
            format!("{n} usable rows, fewer than 2 x min_leaf = {}", 2 * min_leaf),
        );
    }
    if n < config.tree.k {
        return no_tree(n_rows, format!("{n} usable rows, fewer than k = {}", config.tree.k));
    }
    let params = TreeParams {
        min_leaf,
        max_depth: config.tree.max_depth,
    };
    let cv = CvParams {
        k: config.tree.k,
        rule: config.tree.prune_rule,
        seed: seed::sub_seed(sub_seed, stream::CV_FOLDS, 0),
    };
    let (tree, trace) = cv_prune(x, &params, &cv)?;
    let paths = extreme_leaves(&tree);
    let verdicts = alignment_verdicts(&tree, &paths, config.analysis.verdict_scope);

    let correlations = (0..x.n_features())
        .map(|j| (x.feature_names[j].clone(), pearson(&x.response, &x.column(j)).ok()))
        .collect();

    let rows_of = |p: &LeafPath| -> Vec<usize> { (0..n).filter(|&i| p.admits(x.row(i))).collect() };
    let (min_rows, max_rows) = (rows_of(&paths.min), rows_of(&paths.max));
    let mut variables = vec![ComparisonVariable {
        name: "Q".into(),
        field: None,
        direction: None,
    }];
    variables.extend(specs.iter().map(|s| ComparisonVariable {
        name: s.name.clone(),
        field: Some(s.raw_field),
        direction: Some(s.direction),
    }));
    let cols =
        |rows: &[usize]| -> Vec<Vec<f64>> { variables.iter().map(|v| column_for(&build, rows, v.field)).collect() };
    let comparison = group_comparison(&cols(&min_rows), &cols(&max_rows), &variables)?;

    let all_rows: Vec<usize> = (0..n).collect();
    let summary = variables
        .iter()
        .map(|v| Ok((v.name.clone(), summary_stats(&column_for(&build, &all_rows, v.field))?)))
        .collect::<Result<Vec<_>>>()?;

    Ok(SubsampleOutcome {
        name: spec.name.clone(),
        n_rows,
        min_leaf,
        status: SubsampleStatus::Tree(Box::new(TreeOutcome {
            specs,
            selection,
            tree,
            trace,
            paths,
            verdicts,
            correlations,
            comparison,
            summary,
        })),
    })
}

/// Runs every configured subsample on an already loaded panel. Subsamples
/// run in parallel on the current rayon pool; output does not depend on the
/// pool size.
pub fn study_panel(panel: &Panel, exclusions: ExclusionLog, config: &RunConfig) -> Result<StudyReport> {
    let all: Vec<usize> = (0..config.subsamples.len()).collect();
    study_subsamples(panel, exclusions, config, &all)
}

/// [`study_panel`] restricted to the configured subsamples at `indices`.
/// Each keeps the seed it gets in the full study.
pub fn study_subsamples(
    panel: &Panel,
    exclusions: ExclusionLog,
    config: &RunConfig,
    indices: &[usize],
) -> Result<StudyReport> {
    config.validate()?;
    if let Some(i) = indices.iter().find(|&&i| i >= config.subsamples.len()) {
        return Err(Error::Config(format!("no subsample at index {i}")));
    }
    if panel.is_empty() {
        return Err(Error::EmptySubsample("panel has no rows".into()));
    }
    let (selection, global_specs) = match (config.selection.mode, config.selection.sample) {
        (SelectionMode::Fixed, _) => (None, Some(rename_to_letters(fixed_specs(config)?))),
        (SelectionMode::Rf, SelectionSample::Full) => {
            let s = panel_selection(panel, config)?;
            let specs = rename_to_letters(s.spec_fragment(&config.proxies)?);
            (Some(s), Some(specs))
        }
        (SelectionMode::Rf, SelectionSample::Subsample) => (None, None),
    };
    let ctx = Context {
        config,
        panel,
        global_specs,
    };
    let subsamples = indices
        .par_iter()
        .map(|&i| run_subsample(&ctx, &config.subsamples[i], i))
        .collect::<Result<Vec<_>>>()?;
    Ok(StudyReport {
        seed: config.seed,
        provenance: panel.provenance.clone(),
        n_panel: panel.len(),
        exclusions,
        rescale_scope: config.rescale_scope,
        selection,
        subsamples,
    })
}

/// Q and every raw proxy over the rows where each is available.
pub fn describe_panel(panel: &Panel) -> Result<Vec<(String, Summary)>> {
    let raw = compute_raw_proxies(panel, &[]);
    let mut out = Vec::new();
    if raw.rows.is_empty() {
        return Ok(out);
    }
    let q: Vec<f64> = raw.rows.iter().map(|r| r.q).collect();
    out.push(("q".to_string(), summary_stats(&q)?));
    for f in RawField::ALL {
        let v: Vec<f64> = raw.rows.iter().filter_map(|r| r.get(f)).collect();
        if !v.is_empty() {
            out.push((f.name().to_string(), summary_stats(&v)?));
        }
    }
    Ok(out)
}

/// CSV columns: variable, n, mean, std_dev, min, max.
pub fn write_summary_csv<W: std::io::Write>(rows: &[(String, Summary)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variable", "n", "mean", "std_dev", "min", "max"])?;
    for (name, s) in rows {
        w.write_record([
            name.clone(),
            s.n.to_string(),
            s.mean.to_string(),
            s.std_dev.to_string(),
            s.min.to_string(),
            s.max.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<summary>", e))?;
    Ok(())
}

/// File name, header and rows.
type CsvTable<'a> = (&'a str, &'a [&'a str], Vec<Vec<String>>);

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner()
        .map_err(|e| Error::io("<csv>", std::io::Error::other(e.to_string())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

impl StudyReport {
    /// True when some subsample produced no tree.
    pub fn is_degraded(&self) -> bool {
        self.subsamples.iter().any(|s| s.tree().is_none())
    }

    fn selection_rows(&self) -> Vec<(String, &SelectionResult)> {
        let mut v = Vec::new();
        if let Some(s) = &self.selection {
            v.push(("full".to_string(), s));
        }
        for o in &self.subsamples {
            if let Some(s) = o.tree().and_then(|t| t.selection.as_ref()) {
                v.push((o.name.clone(), s));
            }
        }
        v
    }

    /// Plain-text table with one line per subsample and the verdict columns.
    pub fn summary_table(&self) -> String {
        let mut out = format!(
            "{:<16} {:>6} {:>6} {:>8} {:>8}  {}\n",
            "subsample",
            "n",
            "leaves",
            "Q^Min",
            "Q^Max",
            FACTORS.map(|f| format!("{f:<5}")).join(" ")
        );
        for s in &self.subsamples {
            match s.tree() {
                Some(t) => {
                    let row = verdict_row(&t.verdicts, &FACTORS);
                    let _ = writeln!(
                        out,
                        "{:<16} {:>6} {:>6} {:>8.3} {:>8.3}  {}",
                        s.name,
                        t.tree.total_n,
                        t.tree.n_leaves(),
                        t.paths.min.leaf.mean,
                        t.paths.max.leaf.mean,
                        row.iter().map(|l| format!("{l:<5}")).collect::<Vec<_>>().join(" ")
                    );
                }
                None => {
                    let _ = writeln!(out, "{:<16} {:>6}  no tree", s.name, s.n_rows);
                }
            }
        }
        out
    }

    pub fn markdown(&self) -> String {
        let mut md = String::from("# Charter value segmentation report\n\n");
        let _ = writeln!(md, "- master seed: {}", self.seed);
        let _ = writeln!(md, "- data: {}", self.provenance);
        let _ = writeln!(
            md,
            "- panel rows: {} (excluded at load: {})",
            self.n_panel,
            self.exclusions.len()
        );
        let _ = writeln!(
            md,
            "- rescaling fitted on: {}",
            match self.rescale_scope {
                RescaleScope::Full => "full panel",
                RescaleScope::Subsample => "each subsample",
            }
        );
        if let Some(s) = &self.selection {
            let _ = writeln!(md, "- selected proxies: {}", s.proxies().join(", "));
        }
        md.push_str("\n## Alignment\n\n| subsample | n | leaves | Q^Min | Q^Max |");
        for f in FACTORS {
            let _ = write!(md, " {f} |");
        }
        md.push_str("\n|---|---:|---:|---:|---:|");
        md.push_str(&"---|".repeat(FACTORS.len()));
        md.push('\n');
        for s in &self.subsamples {
            match s.tree() {
                Some(t) => {
                    let _ = write!(
                        md,
                        "| {} | {} | {} | {:.3} | {:.3} |",
                        s.name,
                        t.tree.total_n,
                        t.tree.n_leaves(),
                        t.paths.min.leaf.mean,
                        t.paths.max.leaf.mean
                    );
                    for l in verdict_row(&t.verdicts, &FACTORS) {
                        let _ = write!(md, " {l} |");
                    }
                    md.push('\n');
                }
                None => {
                    let _ = writeln!(
                        md,
                        "| {} | {} | no tree | | |{}",
                        s.name,
                        s.n_rows,
                        " |".repeat(FACTORS.len())
                    );
                }
            }
        }
        for s in &self.subsamples {
            let _ = writeln!(md, "\n## {}\n", s.name);
            let t = match &s.status {
                SubsampleStatus::NoTree { reason } => {
                    let _ = writeln!(md, "No tree: {reason}.");
                    continue;
                }
                SubsampleStatus::Tree(t) => t,
            };
            let names = &t.tree.feature_names;
            let proxies: Vec<String> = t.specs.iter().map(|p| p.name.clone()).collect();
            let _ = writeln!(md, "- factors: {}", proxies.join(", "));
            if let Some(sel) = &t.selection {
                let _ = writeln!(md, "- selected proxies: {}", sel.proxies().join(", "));
            }
            let _ = writeln!(
                md,
                "- rows: {} (min_leaf {}), leaves: {}, chosen alpha: {}",
                t.tree.total_n,
                s.min_leaf,
                t.tree.n_leaves(),
                t.trace.chosen_alpha
            );
            for (label, p) in [("Q^Min", &t.paths.min), ("Q^Max", &t.paths.max)] {
                let _ = writeln!(
                    md,
                    "- {label} = {:.3} (n = {}, {:.2}% of rows): {}",
                    p.leaf.mean,
                    p.leaf.n,
                    100.0 * p.share,
                    p.describe(names)
                );
            }
            md.push_str(
                "\n| variable | Q^Min mean | Q^Max mean | KS D | p | lower risk |\n|---|---:|---:|---:|---:|---|\n",
            );
            for r in &t.comparison.rows {
                let _ = writeln!(
                    md,
                    "| {} | {:.3} | {:.3}{} | {:.3} | {:.4} | {} |",
                    r.variable,
                    r.mean_qmin,
                    r.mean_qmax,
                    r.stars,
                    r.ks_d,
                    r.p_value,
                    lower_risk_label(r.lower_risk)
                );
            }
            md.push_str("\n| factor | r with Q | p |\n|---|---:|---:|\n");
            for (name, c) in &t.correlations {
                match c {
                    Some(c) => {
                        let _ = writeln!(md, "| {name} | {:.3}{} | {:.4} |", c.r, stars(c.p), c.p);
                    }
                    None => {
                        let _ = writeln!(md, "| {name} | n/a | |");
                    }
                }
            }
        }
        md
    }

    /// Writes the bundle under `dir`, creating it as needed.
    pub fn write_bundle(&self, dir: &Path) -> Result<()> {
        let tables = dir.join("tables");
        let trees = dir.join("trees");
        for d in [dir, &tables, &trees] {
            fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        write_file(&dir.join("report.md"), self.markdown().as_bytes())?;
        let mut ex = Vec::new();
        self.exclusions.write_csv(&mut ex)?;
        write_file(&dir.join("exclusions.csv"), &ex)?;

        let mut subs = Vec::new();
        let mut summary = Vec::new();
        let mut corr = Vec::new();
        let mut comp = Vec::new();
        let mut verd = Vec::new();
        let mut prune = Vec::new();
        for s in &self.subsamples {
            let t = match &s.status {
                SubsampleStatus::NoTree { reason } => {
                    let mut row = vec![
                        s.name.clone(),
                        "no_tree".into(),
                        s.n_rows.to_string(),
                        s.min_leaf.to_string(),
                    ];
                    row.extend(std::iter::repeat_n(String::new(), 10));
                    row.push(reason.clone());
                    subs.push(row);
                    continue;
                }
                SubsampleStatus::Tree(t) => t,
            };
            let names = &t.tree.feature_names;
            let (mn, mx) = (&t.paths.min, &t.paths.max);
            subs.push(vec![
                s.name.clone(),
                "tree".into(),
                s.n_rows.to_string(),
                s.min_leaf.to_string(),
                t.tree.n_leaves().to_string(),
                t.trace.chosen_alpha.to_string(),
                mn.leaf.mean.to_string(),
                mn.leaf.n.to_string(),
                mn.share.to_string(),
                mn.describe(names),
                mx.leaf.mean.to_string(),
                mx.leaf.n.to_string(),
                mx.share.to_string(),
                mx.describe(names),
                String::new(),
            ]);
            for (name, st) in &t.summary {
                summary.push(vec![
                    s.name.clone(),
                    name.clone(),
                    st.n.to_string(),
                    st.mean.to_string(),
                    st.std_dev.to_string(),
                    st.min.to_string(),
                    st.max.to_string(),
                ]);
            }
            for (name, c) in &t.correlations {
                corr.push(vec![
                    s.name.clone(),
                    name.clone(),
                    t.tree.total_n.to_string(),
                    opt(c.map(|c| c.r)),
                    opt(c.map(|c| c.p)),
                    c.map(|c| stars(c.p)).unwrap_or("").into(),
                ]);
            }
            for r in &t.comparison.rows {
                comp.push(vec![
                    s.name.clone(),
                    r.variable.clone(),
                    t.comparison.n_qmin.to_string(),
                    t.comparison.n_qmax.to_string(),
                    r.mean_qmin.to_string(),
                    r.mean_qmax.to_string(),
                    r.ks_d.to_string(),
                    r.p_value.to_string(),
                    r.stars.clone(),
                    lower_risk_label(r.lower_risk).into(),
                ]);
            }
            for v in &t.verdicts {
                let evidence = v
                    .nodes
                    .iter()
                    .map(|e| format!("{}<{}:{}|{}", v.factor, e.threshold, e.low_risk_mean, e.high_risk_mean))
                    .collect::<Vec<_>>()
                    .join(";");
                verd.push(vec![
                    s.name.clone(),
                    v.factor.clone(),
                    serde_json::to_value(v.verdict)?
                        .as_str()
                        .unwrap_or_default()
                        .to_string(),
                    v.verdict.label().into(),
                    v.nodes.len().to_string(),
                    evidence,
                ]);
            }
            for (c, alpha) in t.trace.candidates.iter().enumerate() {
                prune.push(vec![
                    s.name.clone(),
                    alpha.to_string(),
                    t.trace.cv_mean[c].to_string(),
                    t.trace.cv_se[c].to_string(),
                    (*alpha == t.trace.chosen_alpha).to_string(),
                ]);
            }
            write_file(
                &trees.join(format!("{}.dot", s.name)),
                export_dot(&t.tree, None).as_bytes(),
            )?;
            write_file(&trees.join(format!("{}.json", s.name)), export_json(&t.tree).as_bytes())?;
        }

        let mut sel = Vec::new();
        let mut imp = Vec::new();
        for (scope, s) in self.selection_rows() {
            for c in &s.chosen {
                sel.push(vec![
                    scope.clone(),
                    c.group.letter().into(),
                    c.proxy.clone(),
                    opt(c.pct_inc_mse),
                ]);
            }
            for f in &s.importance.features {
                imp.push(vec![
                    scope.clone(),
                    f.feature.clone(),
                    f.pct_inc_mse.to_string(),
                    f.raw_delta.to_string(),
                    f.std_err.to_string(),
                ]);
            }
        }

        let files: [CsvTable; 7] = [
            (
                "subsamples.csv",
                &[
                    "subsample",
                    "status",
                    "n_rows",
                    "min_leaf",
                    "leaves",
                    "chosen_alpha",
                    "qmin",
                    "qmin_n",
                    "qmin_share",
                    "qmin_path",
                    "qmax",
                    "qmax_n",
                    "qmax_share",
                    "qmax_path",
                    "reason",
                ],
                subs,
            ),
            (
                "summary.csv",
                &["subsample", "variable", "n", "mean", "std_dev", "min", "max"],
                summary,
            ),
            (
                "correlations.csv",
                &["subsample", "variable", "n", "r", "p_value", "stars"],
                corr,
            ),
            ("selection.csv", &["scope", "group", "proxy", "pct_inc_mse"], sel),
            (
                "importance.csv",
                &["scope", "feature", "pct_inc_mse", "raw_delta", "std_err"],
                imp,
            ),
            (
                "comparison.csv",
                &[
                    "subsample",
                    "variable",
                    "n_qmin",
                    "n_qmax",
                    "mean_qmin",
                    "mean_qmax",
                    "ks_d",
                    "p_value",
                    "stars",
                    "lower_risk",
                ],
                comp,
            ),
            (
                "verdicts.csv",
                &["subsample", "factor", "verdict", "label", "n_nodes", "evidence"],
                verd,
            ),
        ];
        for (name, header, rows) in files {
            write_file(&tables.join(name), &csv_bytes(header, rows)?)?;
        }
        write_file(
            &tables.join("pruning.csv"),
            &csv_bytes(&["subsample", "alpha", "cv_mean", "cv_se", "chosen"], prune)?,
        )?;
        Ok(())
    }
}
