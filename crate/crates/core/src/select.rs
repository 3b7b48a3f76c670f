//! One proxy per CAMELS group, chosen by forest importance.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::ImportanceReport;
use crate::rescale::{default_catalog, Group, ProxySpec};

/// Candidate proxy names per group, in tie-break order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCatalog(pub Vec<(Group, Vec<String>)>);

impl GroupCatalog {
    /// Groups candidates of a spec table in first-seen order.
    pub fn from_specs(specs: &[ProxySpec]) -> Result<Self> {
        let mut groups: Vec<(Group, Vec<String>)> = Vec::new();
        for s in specs {
            if groups.iter().any(|(_, names)| names.contains(&s.name)) {
                return Err(Error::Config(format!("proxy {} listed twice", s.name)));
            }
            match groups.iter_mut().find(|(g, _)| *g == s.group) {
                Some((_, names)) => names.push(s.name.clone()),
                None => groups.push((s.group, vec![s.name.clone()])),
            }
        }
        Ok(GroupCatalog(groups))
    }

    pub fn default_catalog() -> Self {
        Self::from_specs(&default_catalog()).expect("default catalog is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (g, names) in &self.0 {
            if names.is_empty() {
                return Err(Error::Config(format!("group {g} has no candidates")));
            }
            for n in names {
                if !seen.insert(n.as_str()) {
                    return Err(Error::Config(format!("proxy {n} belongs to two groups")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub group: Group,
    pub proxy: String,
    /// `None` for singleton groups picked without looking at scores.
    pub pct_inc_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen: Vec<Choice>,
    pub importance: ImportanceReport,
}

impl SelectionResult {
    pub fn proxies(&self) -> Vec<&str> {
        self.chosen.iter().map(|c| c.proxy.as_str()).collect()
    }

    /// (proxy name, canonical group letter) pairs.
    pub fn renaming(&self) -> Vec<(String, String)> {
        self.chosen
            .iter()
            .map(|c| (c.proxy.clone(), c.group.letter().to_string()))
            .collect()
    }

    /// The chosen specs renamed to their group letters, ready for rescaling.
    pub fn spec_fragment(&self, catalog: &[ProxySpec]) -> Result<Vec<ProxySpec>> {
        self.chosen
            .iter()
            .map(|c| {
                let mut s = catalog
                    .iter()
                    .find(|s| s.name == c.proxy)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("proxy {} not in spec table", c.proxy)))?;
                s.name = c.group.letter().to_string();
                Ok(s)
            })
            .collect()
    }

    /// CSV columns: group, proxy, pct_inc_mse.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group", "proxy", "pct_inc_mse"])?;
        for c in &self.chosen {
            w.write_record([
                c.group.letter().to_string(),
                c.proxy.clone(),
                c.pct_inc_mse.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<selection>", e))?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Fragment<'a> {
    proxies: &'a [ProxySpec],
}

/// TOML `[[proxies]]` table for the run configuration.
pub fn spec_fragment_toml(specs: &[ProxySpec]) -> String {
    toml::to_string(&Fragment { proxies: specs }).expect("specs serialize")
}

/// Per group, the candidate with the largest %IncMSE (ties: catalog order).
/// Singleton groups are taken without consulting the table.
pub fn select_proxies(importance: &ImportanceReport, catalog: &GroupCatalog) -> Result<SelectionResult> {
    catalog.validate()?;
    let mut chosen = Vec::with_capacity(catalog.0.len());
    for (group, names) in &catalog.0 {
        if let [only] = names.as_slice() {
            chosen.push(Choice {
                group: *group,
                proxy: only.clone(),
                pct_inc_mse: importance.get(only).map(|f| f.pct_inc_mse),
            });
            continue;
        }
        let mut best: Option<(&String, f64)> = None;
        for name in names {
            let score = importance
                .get(name)
                .ok_or_else(|| Error::Config(format!("proxy {name} missing from importance table")))?
                .pct_inc_mse;
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((name, score));
            }
        }
        let (name, score) = best.expect("non-empty group");
        chosen.push(Choice {
            group: *group,
            proxy: name.clone(),
            pct_inc_mse: Some(score),
        });
    }
    Ok(SelectionResult {
        chosen,
        importance: importance.clone(),
    })
}
