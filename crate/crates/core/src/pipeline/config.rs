use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acoustics::AcousticConfig;
use crate::corpus_io::WavFormat;
use crate::error::{Error, Result};
use crate::turntaking::{boost_overlap, Recipe, TurnTakingParams};

/// Where the turn-taking parameters come from. Exactly one field is set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TurnTakingSource {
    /// One of the built-in recipes: flat, nsf1, callhome, callhome-ov.
    pub recipe: Option<String>,
    /// A parameter file written by `fit`.
    pub file: Option<PathBuf>,
    pub params: Option<TurnTakingParams>,
}

impl TurnTakingSource {
    pub fn recipe(recipe: Recipe) -> Self {
        TurnTakingSource {
            recipe: Some(recipe.name().to_string()),
            ..Default::default()
        }
    }

    pub fn inline(params: TurnTakingParams) -> Self {
        TurnTakingSource {
            params: Some(params),
            ..Default::default()
        }
    }

    pub fn resolve(&self) -> Result<TurnTakingParams> {
        match (&self.recipe, &self.file, &self.params) {
            (Some(name), None, None) => Ok(name.parse::<Recipe>().map_err(Error::Config)?.params()),
            (None, Some(path), None) => TurnTakingParams::load(path),
            (None, None, Some(params)) => {
                params.validate()?;
                Ok(params.clone())
            }
            _ => Err(Error::Config(
                "[turntaking] needs exactly one of `recipe`, `file` or `params`".into(),
            )),
        }
    }
}

/// Everything needed to generate a dataset. Relative paths in a config
/// file are resolved against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub seed: u64,
    pub num_conversations: usize,
    /// Seconds of conversation per session before the final utterance.
    pub target_duration: f64,
    #[serde(default = "one")]
    pub num_workers: usize,
    pub source_manifest: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: u32,
    /// Split seed utterances at word gaps of at least this many seconds.
    #[serde(default)]
    pub split_min_pause: Option<f64>,
    /// `(count, weight)` pairs for the number of speakers per session.
    #[serde(default = "default_speakers")]
    pub num_speakers: Vec<(usize, f64)>,
    #[serde(default = "default_turntaking")]
    pub turntaking: TurnTakingSource,
    /// Multiplies IR and BC probabilities before renormalizing.
    #[serde(default)]
    pub boost_overlap: Option<f64>,
    #[serde(default)]
    pub acoustic: AcousticConfig,
    /// With `false` only manifests and RTTM are produced.
    #[serde(default = "yes")]
    pub write_audio: bool,
    #[serde(default)]
    pub audio_format: WavFormat,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_sample_rate() -> u32 {
    16000
}

fn default_speakers() -> Vec<(usize, f64)> {
    vec![(2, 1.0)]
}

fn default_turntaking() -> TurnTakingSource {
    TurnTakingSource::recipe(Recipe::Callhome)
}

fn rebase(base: &Path, path: &mut PathBuf) {
    if path.is_relative() {
        *path = base.join(&*path);
    }
}

impl SimulationConfig {
    /// Defaults for everything but the required fields.
    pub fn new(source_manifest: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        SimulationConfig {
            seed: 0,
            num_conversations: 1,
            target_duration: 120.0,
            num_workers: 1,
            source_manifest: source_manifest.into(),
            output_dir: output_dir.into(),
            sample_rate: default_sample_rate(),
            split_min_pause: None,
            num_speakers: default_speakers(),
            turntaking: default_turntaking(),
            boost_overlap: None,
            acoustic: AcousticConfig::default(),
            write_audio: true,
            audio_format: WavFormat::default(),
        }
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: SimulationConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        rebase(base_dir, &mut config.source_manifest);
        rebase(base_dir, &mut config.output_dir);
        if let Some(file) = &mut config.turntaking.file {
            rebase(base_dir, file);
        }
        if let Some(noise) = &mut config.acoustic.noise_manifest {
            rebase(base_dir, noise);
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        SimulationConfig::from_toml_str(&text, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_workers == 0 {
            return Err(Error::Config("num_workers must be at least 1".into()));
        }
        if !(self.target_duration.is_finite() && self.target_duration > 0.0) {
            return Err(Error::Config(format!("target_duration must be > 0, got {}", self.target_duration)));
        }
        if self.sample_rate == 0 {
            return Err(Error::Config("sample_rate must be > 0".into()));
        }
        if self.num_speakers.is_empty() {
            return Err(Error::Config("num_speakers needs at least one (count, weight) entry".into()));
        }
        for &(count, weight) in &self.num_speakers {
            if count == 0 || !(weight.is_finite() && weight > 0.0) {
                return Err(Error::Config(format!(
                    "num_speakers entry ({count}, {weight}) needs count >= 1 and weight > 0"
                )));
            }
        }
        if let Some(pause) = self.split_min_pause {
            if !(pause.is_finite() && pause > 0.0) {
                return Err(Error::Config(format!("split_min_pause must be > 0, got {pause}")));
            }
        }
        if let Some(factor) = self.boost_overlap {
            if !(factor.is_finite() && factor > 0.0) {
                return Err(Error::Config(format!("boost_overlap must be > 0, got {factor}")));
            }
        }
        self.acoustic.validate()
    }

    /// Turn-taking parameters with any overlap boost applied.
    pub fn turntaking_params(&self) -> Result<TurnTakingParams> {
        let params = self.turntaking.resolve()?;
        Ok(match self.boost_overlap {
            Some(factor) => boost_overlap(&params, factor),
            None => params,
        })
    }
}
