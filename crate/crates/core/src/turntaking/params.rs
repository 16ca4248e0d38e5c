use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TransitionType;
use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionMode {
    #[default]
    Categorical,
    Markov,
}

impl FromStr for TransitionMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "categorical" => Ok(TransitionMode::Categorical),
            "markov" => Ok(TransitionMode::Markov),
            other => Err(format!("unknown transition mode '{other}'")),
        }
    }
}

/// Complete parameter set of the turn-taking model.
///
/// Probability vectors are ordered (TH, TS, IR, BC). `transition_matrix[i][j]`
/// is the probability of type `j` following type `i`; it is only consulted in
/// Markov mode. Rates are in 1/s except `beta_ir`, which is dimensionless.
///
/// Serialized as a flat TOML table; `transition_matrix` may be omitted, in
/// which case every row equals `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct TurnTakingParams {
    pub mode: TransitionMode,
    pub p: [f64; 4],
    pub transition_matrix: [[f64; 4]; 4],
    pub beta_th: f64,
    pub beta_ts: f64,
    pub beta_ir: f64,
    pub bc_max_duration: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(default)]
    mode: TransitionMode,
    p: [f64; 4],
    transition_matrix: Option<[[f64; 4]; 4]>,
    beta_th: f64,
    beta_ts: f64,
    beta_ir: f64,
    #[serde(default = "default_bc_max")]
    bc_max_duration: f64,
}

fn default_bc_max() -> f64 {
    TurnTakingParams::DEFAULT_BC_MAX_DURATION
}

impl TryFrom<RawParams> for TurnTakingParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        let params = TurnTakingParams {
            mode: raw.mode,
            p: raw.p,
            transition_matrix: raw.transition_matrix.unwrap_or([raw.p; 4]),
            beta_th: raw.beta_th,
            beta_ts: raw.beta_ts,
            beta_ir: raw.beta_ir,
            bc_max_duration: raw.bc_max_duration,
        };
        params.validate()?;
        Ok(params)
    }
}

fn check_distribution(name: &str, probs: &[f64; 4]) -> Result<()> {
    if probs.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
        return Err(Error::InvalidParams(format!("{name} has a negative or non-finite entry: {probs:?}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidParams(format!("{name} sums to {total}, not 1")));
    }
    Ok(())
}

impl TurnTakingParams {
    pub const DEFAULT_BC_MAX_DURATION: f64 = 1.0;
    pub const DEFAULT_BETA_TH: f64 = 2.0;
    pub const DEFAULT_BETA_TS: f64 = 3.0;
    pub const DEFAULT_BETA_IR: f64 = 3.0;

    /// Categorical parameters; the Markov matrix is set to repeat `p`.
    pub fn categorical(p: [f64; 4], beta_th: f64, beta_ts: f64, beta_ir: f64, bc_max_duration: f64) -> Result<Self> {
        let params = TurnTakingParams {
            mode: TransitionMode::Categorical,
            p,
            transition_matrix: [p; 4],
            beta_th,
            beta_ts,
            beta_ir,
            bc_max_duration,
        };
        params.validate()?;
        Ok(params)
    }

    /// Categorical parameters with the default rates.
    pub fn with_prior(p: [f64; 4]) -> Result<Self> {
        Self::categorical(
            p,
            Self::DEFAULT_BETA_TH,
            Self::DEFAULT_BETA_TS,
            Self::DEFAULT_BETA_IR,
            Self::DEFAULT_BC_MAX_DURATION,
        )
    }

    pub fn validate(&self) -> Result<()> {
        check_distribution("p", &self.p)?;
        for (i, row) in self.transition_matrix.iter().enumerate() {
            check_distribution(&format!("transition_matrix row {}", TransitionType::ALL[i]), row)?;
        }
        for (name, v) in [
            ("beta_th", self.beta_th),
            ("beta_ts", self.beta_ts),
            ("beta_ir", self.beta_ir),
            ("bc_max_duration", self.bc_max_duration),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// The distribution the next type is drawn from.
    pub fn transition_probs(&self, prev: Option<TransitionType>) -> &[f64; 4] {
        match (self.mode, prev) {
            (TransitionMode::Markov, Some(t)) => &self.transition_matrix[t.index()],
            _ => &self.p,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidParams(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("params serialize to TOML")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()).map_err(|e| Error::io(path, e))
    }
}

/// Named transition priors: a flat prior, priors fitted on NOTSOFAR-1 and
/// CALLHOME, and CALLHOME with boosted overlap. All use the default rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recipe {
    Flat,
    Nsf1,
    Callhome,
    CallhomeOv,
}

impl Recipe {
    pub const ALL: [Recipe; 4] = [Recipe::Flat, Recipe::Nsf1, Recipe::Callhome, Recipe::CallhomeOv];

    pub fn name(self) -> &'static str {
        match self {
            Recipe::Flat => "flat",
            Recipe::Nsf1 => "nsf1",
            Recipe::Callhome => "callhome",
            Recipe::CallhomeOv => "callhome-ov",
        }
    }

    pub fn prior(self) -> [f64; 4] {
        match self {
            Recipe::Flat => [0.25, 0.25, 0.25, 0.25],
            Recipe::Nsf1 => [0.18, 0.22, 0.30, 0.30],
            Recipe::Callhome => [0.15, 0.21, 0.44, 0.20],
            Recipe::CallhomeOv => [0.09, 0.13, 0.54, 0.24],
        }
    }

    pub fn params(self) -> TurnTakingParams {
        TurnTakingParams::with_prior(self.prior()).expect("built-in recipes are valid")
    }
}

impl FromStr for Recipe {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let norm = s.to_ascii_lowercase().replace(['_', '(', ')'], "-");
        let norm = norm.trim_end_matches('-');
        match norm {
            "flat" => Ok(Recipe::Flat),
            "nsf1" | "nsf-1" => Ok(Recipe::Nsf1),
            "callhome" => Ok(Recipe::Callhome),
            "callhome-ov" | "callhomeov" | "callhome-ov-boost" => Ok(Recipe::CallhomeOv),
            _ => Err(format!("unknown recipe '{s}'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut params = Recipe::Callhome.params();
        params.mode = TransitionMode::Markov;
        params.transition_matrix[1] = [0.1, 0.2, 0.3, 0.4];
        let text = params.to_toml_string();
        assert_eq!(TurnTakingParams::from_toml_str(&text).unwrap(), params);
    }

    #[test]
    fn matrix_defaults_to_prior_rows() {
        let text = "p = [0.25, 0.25, 0.25, 0.25]\nbeta_th = 1.0\nbeta_ts = 1.0\nbeta_ir = 1.0\n";
        let params = TurnTakingParams::from_toml_str(text).unwrap();
        assert_eq!(params.mode, TransitionMode::Categorical);
        assert_eq!(params.transition_matrix, [[0.25; 4]; 4]);
        assert_eq!(params.bc_max_duration, 1.0);
    }

    #[test]
    fn rejects_invalid() {
        let bad_sum = "p = [0.5, 0.25, 0.25, 0.25]\nbeta_th = 1.0\nbeta_ts = 1.0\nbeta_ir = 1.0\n";
        assert!(TurnTakingParams::from_toml_str(bad_sum).is_err());
        let bad_rate = "p = [0.25, 0.25, 0.25, 0.25]\nbeta_th = 0.0\nbeta_ts = 1.0\nbeta_ir = 1.0\n";
        assert!(TurnTakingParams::from_toml_str(bad_rate).is_err());
        let unknown = "p = [0.25, 0.25, 0.25, 0.25]\nbeta_th = 1.0\nbeta_ts = 1.0\nbeta_ir = 1.0\nfoo = 1\n";
        assert!(TurnTakingParams::from_toml_str(unknown).is_err());
    }

    #[test]
    fn recipe_names_parse() {
        for r in Recipe::ALL {
            assert_eq!(r.name().parse::<Recipe>().unwrap(), r);
            r.params().validate().unwrap();
        }
        assert_eq!("CALLHOME(OV)".parse::<Recipe>().unwrap(), Recipe::CallhomeOv);
        assert_eq!("NSF-1".parse::<Recipe>().unwrap(), Recipe::Nsf1);
    }
}
