use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ternary_ok::energy::{ModelParams, Tensions};
use ternary_ok::interaction::{build_general, GammaMatrix, ReducedMatrix, VolumeFractions};
use ternary_ok::optimizer::OptimizerOptions;
use ternary_ok::phasediag::MatrixFamily;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ren,
    Ohta,
    Blend,
    General,
}

impl Family {
    pub fn named(self) -> Option<MatrixFamily> {
        match self {
            Family::Ren => Some(MatrixFamily::Ren),
            Family::Ohta => Some(MatrixFamily::Ohta),
            Family::Blend => Some(MatrixFamily::Blend),
            Family::General => None,
        }
    }
}

impl std::str::FromStr for Family {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "ren" => Ok(Family::Ren),
            "ohta" => Ok(Family::Ohta),
            "blend" => Ok(Family::Blend),
            "general" => Ok(Family::General),
            _ => Err(CliError::Validation(format!("unknown matrix family {s:?} (expected ren, ohta, blend or general)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    pub family: Family,
    /// Overall strength; multiplies `gamma_tilde` for the general family.
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_tilde: Option<[[f64; 2]; 2]>,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        MatrixConfig { family: Family::Ren, gamma: 1.0, gamma_tilde: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json_path: Option<PathBuf>,
}

/// Full input record of a run; echoed into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub omega: [f64; 3],
    pub tensions: Tensions,
    pub matrix: MatrixConfig,
    pub tolerances: OptimizerOptions,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            omega: [1.0 / 3.0; 3],
            tensions: Tensions::equal(1.0),
            matrix: MatrixConfig::default(),
            tolerances: OptimizerOptions::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Values given on the command line; each one overrides the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub omega: Option<[f64; 3]>,
    pub tensions: Option<[f64; 3]>,
    pub family: Option<Family>,
    pub gamma: Option<f64>,
    pub csv_path: Option<PathBuf>,
    pub svg_path: Option<PathBuf>,
    pub json_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                Self::from_json(&text)
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(w) = o.omega {
            self.omega = w;
        }
        if let Some([c12, c13, c23]) = o.tensions {
            self.tensions = Tensions::new(c12, c13, c23);
        }
        if let Some(f) = o.family {
            self.matrix.family = f;
        }
        if let Some(g) = o.gamma {
            self.matrix.gamma = g;
        }
        for (dst, src) in [
            (&mut self.output.csv_path, &o.csv_path),
            (&mut self.output.svg_path, &o.svg_path),
            (&mut self.output.json_path, &o.json_path),
        ] {
            if src.is_some() {
                dst.clone_from(src);
            }
        }
    }

    pub fn fractions(&self) -> Result<VolumeFractions, CliError> {
        Ok(VolumeFractions::try_from(self.omega)?)
    }

    pub fn gamma_matrix(&self) -> Result<GammaMatrix, CliError> {
        let omega = self.fractions()?;
        let g = self.matrix.gamma;
        match (self.matrix.family.named(), self.matrix.gamma_tilde) {
            (Some(_), Some(_)) => Err(CliError::Validation("gamma_tilde is only used by the general family".into())),
            (Some(f), None) => Ok(f.build(&omega, g)?),
            (None, None) => Err(CliError::Validation("the general family requires gamma_tilde".into())),
            (None, Some(t)) => {
                if !(g > 0.0 && g.is_finite()) {
                    return Err(CliError::Validation(format!("long-range strength must be positive, got {g}")));
                }
                let scaled = ReducedMatrix([[g * t[0][0], g * t[0][1]], [g * t[1][0], g * t[1][1]]]);
                Ok(build_general(&scaled, omega.a(), omega.b())?)
            }
        }
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        self.tolerances.validate()?;
        Ok(ModelParams::new(self.fractions()?, self.tensions, self.gamma_matrix()?)?)
    }
}
