//! Prompt templates loaded from text files with `{{name}}` placeholders.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use regex::Regex;
use sdp_core::AttemptRecord;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("no template named `{0}`")]
    UnknownTemplate(String),
    #[error("template `{template}` needs variable `{var}`")]
    MissingVariable { template: String, var: String },
    #[error("could not read template directory: {0}")]
    Io(#[from] std::io::Error),
}

impl From<PromptError> for sdp_core::OperatorError {
    fn from(e: PromptError) -> Self {
        sdp_core::OperatorError::Adapter(e.to_string())
    }
}

#[derive(Debug, Clone, Default)]
pub struct PromptTemplates {
    templates: BTreeMap<String, String>,
}

impl PromptTemplates {
    /// Templates for the generic operator set, bundled from `prompts/`.
    pub fn operator_defaults() -> Self {
        let mut t = Self::default();
        t.insert("propose", include_str!("../prompts/propose.txt"));
        t.insert("realize", include_str!("../prompts/realize.txt"));
        t.insert("validate", include_str!("../prompts/validate.txt"));
        t.insert("replan", include_str!("../prompts/replan.txt"));
        t
    }

    pub fn insert(&mut self, name: impl Into<String>, text: impl Into<String>) {
        self.templates.insert(name.into(), text.into());
    }

    /// Overrides templates with every `<name>.txt` file in `dir`.
    pub fn load_overrides(&mut self, dir: &Path) -> Result<(), PromptError> {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                let text = fs::read_to_string(&path)?;
                self.insert(stem, text);
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.templates.get(name).map(String::as_str)
    }

    pub fn render(&self, name: &str, vars: &[(&str, &str)]) -> Result<String, PromptError> {
        let text = self
            .get(name)
            .ok_or_else(|| PromptError::UnknownTemplate(name.to_string()))?;
        let re = Regex::new(r"\{\{\s*(\w+)\s*\}\}").expect("placeholder pattern compiles");
        let mut missing = None;
        let out = re.replace_all(text, |c: &regex::Captures<'_>| {
            let key = &c[1];
            match vars.iter().find(|(k, _)| *k == key) {
                Some((_, v)) => v.to_string(),
                None => {
                    missing.get_or_insert_with(|| key.to_string());
                    String::new()
                }
            }
        });
        match missing {
            Some(var) => Err(PromptError::MissingVariable {
                template: name.to_string(),
                var,
            }),
            None => Ok(out.into_owned()),
        }
    }
}

/// Renders failed attempts as a numbered block, or an empty string when
/// there are none.
pub fn render_attempt_history(attempts: &[AttemptRecord]) -> String {
    let failed: Vec<&AttemptRecord> = attempts.iter().filter(|a| a.failed()).collect();
    if failed.is_empty() {
        return String::new();
    }
    let mut out = String::from("\nPrevious failed attempts at this target:\n");
    for (i, a) in failed.iter().enumerate() {
        out.push_str(&format!(
            "{}. action: {}\n   rejected: {}\n",
            i + 1,
            a.action.rendered,
            a.reason
        ));
    }
    out
}
