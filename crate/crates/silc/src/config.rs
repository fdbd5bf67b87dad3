//! Analysis configuration: enabled bug kinds, per-kind error protocols,
//! error-return constants for stop-style wrappers, and the executor's
//! exploration knobs. Loaded from a JSON config file; every field has a
//! default so an empty config works.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::isl::{BugRef, Template};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// Enabled bug kinds: "NPD", "MemLeak", "UAF".
    pub bugs: Vec<String>,
    /// Per-kind sanitizer template: "stop" or "noLeak".
    pub protocols: BTreeMap<String, String>,
    /// Error value returned by stop-style wrappers, per return type.
    pub error_returns: BTreeMap<String, String>,
    /// Loop unrolling bound.
    pub unroll_bound: usize,
    /// Cap on disjuncts per program point.
    pub max_disjuncts: usize,
    /// Seed for fresh-variable sequencing (env `SILC_SEED` overrides).
    pub seed: u64,
    /// Collect per-step receipts and blame-shift events.
    #[serde(skip)]
    pub trace: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            bugs: vec!["NPD".into(), "MemLeak".into(), "UAF".into()],
            protocols: BTreeMap::from([
                ("NPD".into(), "stop".into()),
                ("MemLeak".into(), "noLeak".into()),
                ("UAF".into(), "stop".into()),
            ]),
            error_returns: BTreeMap::from([
                ("int".into(), "0".into()),
                ("ptr".into(), "NULL".into()),
            ]),
            unroll_bound: 2,
            max_disjuncts: 64,
            seed: 0,
            trace: false,
        }
    }
}

impl AnalysisConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {}", path.display(), e))?;
        let mut cfg: AnalysisConfig = serde_json::from_str(&text)
            .map_err(|e| format!("invalid config {}: {}", path.display(), e))?;
        cfg.validate()?;
        if let Some(seed) = seed_from_env() {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    pub fn with_env_seed(mut self) -> Self {
        if let Some(seed) = seed_from_env() {
            self.seed = seed;
        }
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        for name in &self.bugs {
            if BugRef::parse(name).is_none() {
                return Err(format!("unknown bug kind `{}`", name));
            }
        }
        for (kind, tpl) in &self.protocols {
            if BugRef::parse(kind).is_none() {
                return Err(format!("unknown bug kind `{}` in protocols", kind));
            }
            if Template::parse(tpl).is_none() {
                return Err(format!("unknown template `{}` for `{}`", tpl, kind));
            }
        }
        Ok(())
    }

    pub fn enabled_bugs(&self) -> BTreeSet<BugRef> {
        self.bugs
            .iter()
            .filter_map(|n| BugRef::parse(n))
            .collect()
    }

    pub fn template_for(&self, bug: BugRef) -> Template {
        self.protocols
            .get(bug.name())
            .and_then(|t| Template::parse(t))
            .unwrap_or(match bug {
                BugRef::MemLeak => Template::NoLeak,
                _ => Template::Stop,
            })
    }

    pub fn error_return_for(&self, ty: &str) -> Option<String> {
        self.error_returns.get(ty).cloned()
    }
}

pub fn seed_from_env() -> Option<u64> {
    std::env::var("SILC_SEED").ok()?.trim().parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_enable_all_kinds() {
        let cfg = AnalysisConfig::default();
        assert_eq!(cfg.enabled_bugs().len(), 3);
        assert_eq!(cfg.unroll_bound, 2);
        assert_eq!(cfg.max_disjuncts, 64);
        assert_eq!(cfg.template_for(BugRef::MemLeak), Template::NoLeak);
        assert_eq!(cfg.template_for(BugRef::Npd), Template::Stop);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: AnalysisConfig = serde_json::from_str(r#"{"bugs": ["NPD"]}"#).unwrap();
        assert_eq!(cfg.enabled_bugs().len(), 1);
        assert_eq!(cfg.unroll_bound, 2);
    }

    #[test]
    fn bad_kind_rejected() {
        let cfg: AnalysisConfig =
            serde_json::from_str(r#"{"bugs": ["BadKind"]}"#).unwrap();
        assert!(cfg.validate().is_err());
    }
}
