//! Run manifests: which model, automaton, propositions and configuration a
//! command works on, and where it writes.
//!
//! A manifest is a TOML (or JSON) file; relative paths in it are resolved
//! against the file's directory. Command-line flags override its fields.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use iltl_pomdp::ldba::{template_automaton, template_for_formula, Ldba, TemplateKind};
use iltl_pomdp::logic::{parse_formula, ApTable, Formula};
use iltl_pomdp::pomdp::{Pomdp, Violation};
use iltl_pomdp::product::Product;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    pub model: Option<PathBuf>,
    /// Automaton file; takes precedence over `template`.
    pub automaton: Option<PathBuf>,
    /// `universal`, `gf`, `fg` or `fg-or-fg`.
    pub template: Option<String>,
    /// Propositions the template is instantiated with.
    pub aps: Vec<String>,
    pub ap_table: Option<PathBuf>,
    pub formula: Option<String>,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path.display(), e))?;
        let mut m: RunManifest = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| CliError::input(path.display(), e))?
        } else {
            toml::from_str(&text).map_err(|e| CliError::input(path.display(), e))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut m.model,
            &mut m.automaton,
            &mut m.ap_table,
            &mut m.config,
            &mut m.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(m)
    }

    /// Fields set in `other` replace ours. An automaton file and a template
    /// exclude each other, so setting one clears the other.
    pub fn overridden_by(mut self, other: RunManifest) -> Self {
        if other.automaton.is_some() {
            self.template = None;
            self.aps.clear();
        }
        if other.template.is_some() {
            self.automaton = None;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(model, automaton, template, ap_table, formula, config, out, seed);
        if !other.aps.is_empty() {
            self.aps = other.aps;
        }
        self
    }

    pub fn model_path(&self) -> Result<&Path> {
        self.model
            .as_deref()
            .ok_or_else(|| CliError::Input("no model given (use --model or a manifest)".into()))
    }

    /// The AP table named explicitly, else `aps.json` beside the model.
    pub fn ap_table_path(&self) -> Option<PathBuf> {
        if let Some(p) = &self.ap_table {
            return Some(p.clone());
        }
        let sibling = self.model.as_ref()?.parent()?.join("aps.json");
        sibling.exists().then_some(sibling)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.learn.seed = seed;
        }
        Ok(config)
    }

    pub fn seed(&self, config: &RunConfig) -> u64 {
        self.seed.unwrap_or(config.learn.seed)
    }
}

/// Everything loaded from a manifest, before it is checked.
pub struct Inputs {
    pub model: Pomdp,
    pub violations: Vec<Violation>,
    pub table: ApTable,
    pub automaton: Ldba,
    pub formula: Option<Formula>,
}

impl Inputs {
    pub fn load(m: &RunManifest) -> Result<Self> {
        let path = m.model_path()?;
        let model = Pomdp::load(path).map_err(|e| CliError::input(path.display(), e))?;
        let violations = model.validate();
        let table = match m.ap_table_path() {
            Some(p) => ApTable::load(&p, &model).map_err(|e| match CliError::from(e) {
                CliError::Input(msg) => CliError::input(p.display(), msg),
                other => other,
            })?,
            None => ApTable::default(),
        };
        let formula = match &m.formula {
            Some(text) => Some(parse_formula(text, &table)?),
            None => None,
        };
        let automaton = if let Some(p) = &m.automaton {
            Ldba::load(p).map_err(|e| match CliError::from(e) {
                CliError::Input(msg) => CliError::input(p.display(), msg),
                other => other,
            })?
        } else if let Some(t) = &m.template {
            let kind: TemplateKind = t.parse()?;
            let names: Vec<&str> = m.aps.iter().map(String::as_str).collect();
            template_automaton(kind, &names)?
        } else if let Some(f) = &formula {
            let (kind, names) = template_for_formula(f)?;
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            template_automaton(kind, &names)?
        } else {
            template_automaton(TemplateKind::Universal, &[])?
        };
        Ok(Inputs {
            model,
            violations,
            table,
            automaton,
            formula,
        })
    }

    /// The product, refusing models that break an invariant.
    pub fn product(self) -> Result<Product> {
        if let Some(v) = self.violations.first() {
            return Err(CliError::Invalid(format!(
                "model has {} violation(s), first: {v}",
                self.violations.len()
            )));
        }
        Ok(Product::from_table(
            self.model,
            self.automaton,
            &self.table,
        )?)
    }
}
