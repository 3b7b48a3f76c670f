//! Run configuration, read from a TOML file.
//!
//! ```toml
//! seed = 42
//! out = "out"
//! rescale_scope = "subsample"   # or "full"
//!
//! [data]
//! path = "panel.csv"            # relative to the config file
//! prices = "prices.csv"         # optional, for computed betas
//! window = { start = 2005, end = 2016 }
//! [data.columns]                # field = header, for renamed columns
//! bank_id = "id"
//!
//! [selection]
//! mode = "rf"                   # or "fixed"
//! proxies = ["Capt", "Asts", "Mang", "Ergs_x", "Liqt_x", "Syst"]
//! scope = "joint"               # or "per_group"
//! sample = "full"               # or "subsample"
//!
//! [tree]
//! min_leaf = 30
//! k = 10
//! prune_rule = "min-cv"         # or "one-se"
//!
//! [forest]
//! n_trees = 2000
//! min_leaf = 5
//!
//! [[subsamples]]
//! name = "pigs_2008_2009"
//! criteria = [{ countries = "pigs" }, { years = { start = 2008, end = 2009 } }]
//! min_leaf = 10
//! ```
//!
//! `[[proxies]]` tables replace the built-in catalog; omitted sections take
//! their defaults.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::VerdictScope;
use crate::dataset::{ColumnMap, CountryGroup, Criterion, SizeHalf, Window};
use crate::error::{Error, Result};
use crate::rescale::{default_catalog, specs_by_name, ProxySpec, RescaleScope, DEFAULT_SELECTION};
use crate::tree::{PruneRule, DEFAULT_MIN_LEAF};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub columns: ColumnMap,
    #[serde(default)]
    pub prices: Option<PathBuf>,
    #[serde(default)]
    pub window: Window,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    #[default]
    Rf,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionScope {
    /// One forest over every candidate.
    #[default]
    Joint,
    /// One forest per group over that group's candidates.
    PerGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionSample {
    /// Select once on the whole windowed panel.
    #[default]
    Full,
    /// Select again inside each subsample.
    Subsample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub mode: SelectionMode,
    /// Used when `mode = "fixed"`.
    pub proxies: Vec<String>,
    pub scope: SelectionScope,
    pub sample: SelectionSample,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            mode: SelectionMode::Rf,
            proxies: DEFAULT_SELECTION.map(String::from).to_vec(),
            scope: SelectionScope::Joint,
            sample: SelectionSample::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub k: usize,
    pub prune_rule: PruneRule,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            min_leaf: DEFAULT_MIN_LEAF,
            max_depth: None,
            k: 10,
            prune_rule: PruneRule::MinCv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub mtry: Option<usize>,
    pub min_leaf: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 2000,
            mtry: None,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsampleSpec {
    /// Used in file names: ASCII letters, digits, `_` and `-`.
    pub name: String,
    pub criteria: Vec<Criterion>,
    /// Overrides `tree.min_leaf` for this subsample.
    #[serde(default)]
    pub min_leaf: Option<usize>,
}

impl SubsampleSpec {
    fn new(name: &str, criteria: Vec<Criterion>) -> Self {
        SubsampleSpec {
            name: name.into(),
            criteria,
            min_leaf: None,
        }
    }
}

/// Whole sample, the four periods, PIGS / non-PIGS and the two size halves.
pub fn default_subsamples() -> Vec<SubsampleSpec> {
    let years = |a, b| vec![Criterion::Years { start: a, end: b }];
    vec![
        SubsampleSpec::new("all", vec![Criterion::All]),
        SubsampleSpec::new("2005_2007", years(2005, 2007)),
        SubsampleSpec::new("2008_2009", years(2008, 2009)),
        SubsampleSpec::new("2010_2013", years(2010, 2013)),
        SubsampleSpec::new("2014_2016", years(2014, 2016)),
        SubsampleSpec::new("pigs", vec![Criterion::Countries(CountryGroup::Pigs)]),
        SubsampleSpec::new("non_pigs", vec![Criterion::Countries(CountryGroup::NonPigs)]),
        SubsampleSpec::new("small", vec![Criterion::Size(SizeHalf::Small)]),
        SubsampleSpec::new("large", vec![Criterion::Size(SizeHalf::Large)]),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub verdict_scope: VerdictScope,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub data: DataConfig,
    #[serde(default)]
    pub rescale_scope: RescaleScope,
    #[serde(default = "default_catalog")]
    pub proxies: Vec<ProxySpec>,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub tree: TreeConfig,
    #[serde(default)]
    pub forest: ForestConfig,
    #[serde(default = "default_subsamples")]
    pub subsamples: Vec<SubsampleSpec>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

impl RunConfig {
    /// Config with every default and the given data file.
    pub fn with_data(path: impl Into<PathBuf>) -> Self {
        RunConfig {
            seed: 0,
            out: default_out(),
            data: DataConfig {
                path: path.into(),
                columns: ColumnMap::default(),
                prices: None,
                window: Window::default(),
            },
            rescale_scope: RescaleScope::default(),
            proxies: default_catalog(),
            selection: SelectionConfig::default(),
            tree: TreeConfig::default(),
            forest: ForestConfig::default(),
            subsamples: default_subsamples(),
            analysis: AnalysisConfig::default(),
        }
    }

    /// Parses `text`; relative paths are taken relative to `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        rebase(&mut cfg.data.path);
        if let Some(p) = cfg.data.prices.as_mut() {
            rebase(p);
        }
        rebase(&mut cfg.out);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.proxies.is_empty() {
            return Err(Error::Config("proxy table is empty".into()));
        }
        let mut names = HashSet::new();
        for p in &self.proxies {
            p.validate()?;
            if !names.insert(p.name.as_str()) {
                return Err(Error::Config(format!("proxy {} defined twice", p.name)));
            }
        }
        if self.selection.mode == SelectionMode::Fixed {
            let specs = specs_by_name(&self.proxies, &self.selection.proxies)?;
            let mut groups = HashSet::new();
            for s in &specs {
                if !groups.insert(s.group) {
                    return Err(Error::Config(format!(
                        "fixed selection has two proxies in group {}",
                        s.group
                    )));
                }
            }
        }
        if self.tree.min_leaf == 0 || self.forest.min_leaf == 0 {
            return Err(Error::Config("min_leaf must be at least 1".into()));
        }
        if self.tree.k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {}", self.tree.k)));
        }
        if self.forest.n_trees == 0 {
            return Err(Error::Config("forest.n_trees must be at least 1".into()));
        }
        if self.forest.mtry == Some(0) {
            return Err(Error::Config("forest.mtry must be at least 1".into()));
        }
        if self.data.window.end < self.data.window.start {
            return Err(Error::Config("data.window ends before it starts".into()));
        }
        if self.subsamples.is_empty() {
            return Err(Error::Config("no subsamples configured".into()));
        }
        let mut seen = HashSet::new();
        for s in &self.subsamples {
            let safe = !s.name.is_empty()
                && s.name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !safe {
                return Err(Error::Config(format!(
                    "subsample name {:?} is not file-name safe",
                    s.name
                )));
            }
            if !seen.insert(s.name.as_str()) {
                return Err(Error::Config(format!("subsample {} defined twice", s.name)));
            }
            if s.min_leaf == Some(0) {
                return Err(Error::Config(format!(
                    "subsample {}: min_leaf must be at least 1",
                    s.name
                )));
            }
        }
        Ok(())
    }

    pub fn min_leaf_for(&self, s: &SubsampleSpec) -> usize {
        s.min_leaf.unwrap_or(self.tree.min_leaf)
    }
}
