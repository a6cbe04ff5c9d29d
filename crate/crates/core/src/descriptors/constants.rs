//! Versioned key-value constant tables.
//!
//! File format, one entry per line:
//!
//! ```text
//! # comment
//! version = 1
//! [section]
//! key = value
//! ```
//!
//! The built-in tables live in `data/*.kv` and are compiled in. An override
//! file uses the same format; any key it sets replaces the built-in value and
//! new keys are added.

use std::collections::BTreeMap;
use std::path::Path;

use super::DescriptorError;

pub const FORMAT_VERSION: u32 = 1;

const TPSA_KV: &str = include_str!("../../data/tpsa.kv");
const LOGP_KV: &str = include_str!("../../data/logp.kv");
const ADMET_KV: &str = include_str!("../../data/admet.kv");

/// All descriptor constants: fragment contributions and flag thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct Constants {
    tables: BTreeMap<String, BTreeMap<String, f64>>,
}

impl Default for Constants {
    fn default() -> Self {
        let mut c = Constants {
            tables: BTreeMap::new(),
        };
        for (name, text) in [
            ("tpsa.kv", TPSA_KV),
            ("logp.kv", LOGP_KV),
            ("admet.kv", ADMET_KV),
        ] {
            c.merge_text(name, text)
                .expect("built-in constants are well-formed");
        }
        c
    }
}

impl Constants {
    /// Built-in tables with the entries of `path` layered on top.
    pub fn with_override(path: &Path) -> Result<Self, DescriptorError> {
        let text = std::fs::read_to_string(path).map_err(|e| DescriptorError::Constants {
            source_name: path.display().to_string(),
            line: 0,
            msg: e.to_string(),
        })?;
        let mut c = Constants::default();
        c.merge_text(&path.display().to_string(), &text)?;
        Ok(c)
    }

    /// Parse `text` and overwrite matching entries.
    pub fn merge_text(&mut self, source_name: &str, text: &str) -> Result<(), DescriptorError> {
        let err = |line: usize, msg: String| DescriptorError::Constants {
            source_name: source_name.to_string(),
            line,
            msg,
        };
        let mut section: Option<String> = None;
        let mut version_seen = false;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(lineno, "unterminated section header".into()))?
                    .trim();
                if name.is_empty() {
                    return Err(err(lineno, "empty section name".into()));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(lineno, format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(err(lineno, "empty key".into()));
            }
            let Some(sec) = &section else {
                if key == "version" {
                    let v: u32 = value
                        .parse()
                        .map_err(|_| err(lineno, format!("bad version `{value}`")))?;
                    if v != FORMAT_VERSION {
                        return Err(err(
                            lineno,
                            format!("unsupported version {v}, expected {FORMAT_VERSION}"),
                        ));
                    }
                    version_seen = true;
                    continue;
                }
                return Err(err(lineno, format!("key `{key}` outside any section")));
            };
            let v: f64 = value.parse().map_err(|_| {
                err(
                    lineno,
                    format!("value of `{key}` is not a number: `{value}`"),
                )
            })?;
            if !v.is_finite() {
                return Err(err(lineno, format!("value of `{key}` is not finite")));
            }
            self.tables
                .entry(sec.clone())
                .or_default()
                .insert(key.to_string(), v);
        }
        if !version_seen {
            return Err(err(0, "missing `version` line".into()));
        }
        Ok(())
    }

    pub fn table(&self, section: &str) -> Option<&BTreeMap<String, f64>> {
        self.tables.get(section)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<f64> {
        self.tables.get(section)?.get(key).copied()
    }

    /// Threshold lookup for keys that the code relies on being present.
    pub(crate) fn admet(&self, key: &str) -> f64 {
        self.get("admet", key)
            .unwrap_or_else(|| panic!("admet constant `{key}` missing from tables"))
    }

    pub(crate) fn admet_flag(&self, key: &str) -> bool {
        self.admet(key) != 0.0
    }
}
