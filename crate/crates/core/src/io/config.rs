use super::{read_json, DEFAULT_MISSING_TOKEN};
use crate::error::{Error, Result};
use crate::estimation::{EmConfig, QuadratureSpec};
use crate::model::ModelVariant;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// JSON project configuration. Relative paths resolve against the config
/// file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub q_files: Vec<PathBuf>,
    pub anchor_file: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub quadrature: QuadratureSpec,
    pub em: EmConfig,
    /// Overrides `em.variant`.
    pub variant: ModelVariant,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub missing_token: String,
    /// Minimum observed responses per person and occasion.
    pub min_observed: usize,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig {
            q_files: Vec::new(),
            anchor_file: None,
            data: None,
            quadrature: QuadratureSpec::default(),
            em: EmConfig::default(),
            variant: ModelVariant::Complete,
            output_dir: PathBuf::from("out"),
            seed: 0,
            missing_token: DEFAULT_MISSING_TOKEN.to_string(),
            min_observed: 1,
        }
    }
}

impl ProjectConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: ProjectConfig = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.q_files.iter_mut().for_each(resolve);
        cfg.anchor_file.iter_mut().for_each(resolve);
        cfg.data.iter_mut().for_each(resolve);
        resolve(&mut cfg.output_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    /// EM settings with the project-level variant applied.
    pub fn em_config(&self) -> EmConfig {
        EmConfig {
            variant: self.variant,
            ..self.em.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_files.is_empty() {
            return Err(Error::Argument("config lists no Q-matrix files".into()));
        }
        let files = self.q_files.iter().chain(&self.anchor_file).chain(&self.data);
        for f in files {
            if !f.is_file() {
                return Err(Error::Argument(format!("{} does not exist", f.display())));
            }
        }
        if self.missing_token.is_empty() || self.missing_token == "0" || self.missing_token == "1" {
            return Err(Error::Argument(format!("unusable missing token {:?}", self.missing_token)));
        }
        self.quadrature.validate()?;
        self.em_config().validate()
    }
}
