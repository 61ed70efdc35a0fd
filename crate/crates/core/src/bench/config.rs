//! Benchmark configuration, read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{BenchError, Result};
use crate::optimize::OptimizerConfig;
use crate::strategies::NvBinding;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Random,
    Pretrained,
    Nv,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [StrategyKind::Random, StrategyKind::Pretrained, StrategyKind::Nv];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::Pretrained => "pretrained",
            StrategyKind::Nv => "nv",
        }
    }

    pub(crate) fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown strategy {s:?} (expected random|pretrained|nv)"))
    }
}

/// Random graph family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphClass {
    Er { p_edge: f64 },
    Regular { degree: usize },
}

impl GraphClass {
    /// Short label used in ids, CSV rows and file names.
    pub fn label(&self) -> &'static str {
        match self {
            GraphClass::Er { .. } => "er",
            GraphClass::Regular { .. } => "regular",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub classes: Vec<GraphClass>,
    pub n: usize,
    pub instances: usize,
    pub depth: usize,
    pub strategies: Vec<StrategyKind>,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub nv_binding: NvBinding,
    /// Pretrain bundle location; defaults to `pretrain_n{n}_p{depth}.json` in `out_dir`.
    pub bundle: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl BenchConfig {
    /// n = 10, p = 64, 20 graphs per class.
    pub fn desk() -> Self {
        BenchConfig {
            classes: vec![GraphClass::Regular { degree: 3 }, GraphClass::Er { p_edge: 0.3 }],
            n: 10,
            instances: 20,
            depth: 64,
            strategies: StrategyKind::ALL.to_vec(),
            optimizer: OptimizerConfig { max_iters: 500, ..OptimizerConfig::default() },
            seed: 2025,
            out_dir: PathBuf::from("results/desk"),
            workers: 1,
            nv_binding: NvBinding::Named,
            bundle: None,
        }
    }

    /// n = 16, p = 256, 200 graphs per class.
    pub fn full() -> Self {
        BenchConfig { n: 16, instances: 200, depth: 256, out_dir: PathBuf::from("results/full"), ..Self::desk() }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: BenchConfig = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.instances == 0 {
            return bad("instances must be at least 1".into());
        }
        if self.strategies.is_empty() {
            return bad("strategies must be nonempty".into());
        }
        if self.classes.is_empty() {
            return bad("classes must be nonempty".into());
        }
        if self.n < 2 || self.n > crate::DEFAULT_MAX_QUBITS {
            return bad(format!("n = {} outside [2, {}]", self.n, crate::DEFAULT_MAX_QUBITS));
        }
        if self.depth < 2 {
            return bad("depth must be at least 2".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.optimizer.bounds.is_some() {
            return bad("optimizer bounds are fixed per strategy and cannot be configured".into());
        }
        for (i, c) in self.classes.iter().enumerate() {
            if self.classes[..i].iter().any(|o| o.label() == c.label()) {
                return bad(format!("duplicate graph class {:?}", c.label()));
            }
            match *c {
                GraphClass::Er { p_edge } if !(0.0..=1.0).contains(&p_edge) => return bad(format!("p_edge = {p_edge}")),
                GraphClass::Regular { degree } if degree >= self.n || (self.n * degree) % 2 == 1 => {
                    return bad(format!("no {degree}-regular graph on {} vertices", self.n))
                }
                _ => {}
            }
        }
        let mut s = self.strategies.clone();
        s.sort();
        s.dedup();
        if s.len() != self.strategies.len() {
            return bad("duplicate strategy".into());
        }
        Ok(())
    }

    pub fn bundle_path(&self) -> PathBuf {
        self.bundle.clone().unwrap_or_else(|| self.out_dir.join(format!("pretrain_n{}_p{}.json", self.n, self.depth)))
    }
}
