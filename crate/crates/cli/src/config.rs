//! JSON run configuration. Paths inside it are relative to the file; command
//! line flags take precedence over everything it sets.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thzkit::pcnn::TrainConfig;

use crate::failure::{Failure, Outcome};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticsConfig {
    pub band_min_thz: Option<f64>,
    pub band_max_thz: Option<f64>,
    pub floor: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub optics: OpticsConfig,
    /// Preset name or path of a phantom spec.
    pub phantom: Option<String>,
    /// Training settings; omitted keys keep their defaults.
    pub train: Option<TrainConfig>,
    pub thickness_mm: Option<f64>,
    pub seed: Option<u64>,
    pub reference: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    #[serde(skip)]
    base: PathBuf,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Outcome<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Failure { code: crate::failure::FORMAT, message: format!("{}: {e}", path.display()) })?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// A path named in the file, resolved against the file's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn reference(&self) -> Option<PathBuf> {
        self.reference.as_deref().map(|p| self.resolve(p))
    }

    pub fn model(&self) -> Option<PathBuf> {
        self.model.as_deref().map(|p| self.resolve(p))
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        match (flag, &self.output_dir) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(p)) => self.resolve(p),
            (None, None) => PathBuf::from("."),
        }
    }

    /// Phantom source: a preset name, otherwise a spec path.
    pub fn phantom(&self) -> Option<PhantomSource> {
        let p = self.phantom.as_ref()?;
        if thzkit::phantom::PRESET_NAMES.contains(&p.as_str()) {
            Some(PhantomSource::Preset(p.clone()))
        } else {
            Some(PhantomSource::Spec(self.resolve(Path::new(p))))
        }
    }
}

pub enum PhantomSource {
    Preset(String),
    Spec(PathBuf),
}
