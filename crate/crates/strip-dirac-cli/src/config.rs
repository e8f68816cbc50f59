use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use strip_dirac::curve::CurvatureProfile;

use crate::CliError;

fn zero_profile() -> CurvatureProfile {
    CurvatureProfile::Zero
}

/// Experiment description read from `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Half-width of the strip.
    pub delta: f64,
    /// Semiclassical parameters, strictly decreasing.
    pub h: Vec<f64>,
    #[serde(default = "zero_profile")]
    pub curvature: CurvatureProfile,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Output directory, overridden by `--out`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub dispersion: DispersionConfig,
    #[serde(default)]
    pub effective: EffectiveConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Nodes along the strip for the potential and the conformal map.
    pub n_s: Option<usize>,
    /// Nodes across the strip.
    pub n_t: Option<usize>,
    /// Collocation size per fiber; chosen from `h` and `ξ` when absent.
    pub n_fiber: Option<usize>,
    /// Hardy basis size `M`.
    pub m_hardy: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    /// Half-length `L` of the 2D grids.
    pub l: Option<f64>,
    /// Half-line truncation for `a₀`.
    pub t_halfline: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
// missing fields take their defaults
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub curve: f64,
    pub poisson_residual: f64,
    /// Warn when `φ_min` moves more than this on doubling `L`.
    pub truncation_sensitivity: f64,
    /// Warn when `ln λ_k^eff` moves more than this between `M` and `M + 4`.
    pub basis_truncation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            curve: 1e-12,
            poisson_residual: 1e-3,
            truncation_sensitivity: 1e-6,
            basis_truncation: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
// missing fields take their defaults
#[serde(default, deny_unknown_fields)]
pub struct DispersionConfig {
    /// Branches per sign.
    pub branches: usize,
    /// Number of `ξ` samples (rounded up to odd).
    pub points: usize,
    /// Half-width of the `ξ` window.
    pub window: Option<f64>,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        DispersionConfig {
            branches: 4,
            points: 201,
            window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
// missing fields take their defaults
#[serde(default, deny_unknown_fields)]
pub struct EffectiveConfig {
    pub k_max: usize,
    /// Compute `λ_ess⁺` at each `h` and report the in-gap count.
    pub gap: bool,
}

impl Default for EffectiveConfig {
    fn default() -> Self {
        EffectiveConfig {
            k_max: 2,
            gap: true,
        }
    }
}

pub const HALFLINE_BASIS: usize = 64;
pub const DEFAULT_T_HALFLINE: f64 = 16.0;
pub const DEFAULT_M_HARDY: usize = 12;

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if self.h.is_empty() {
            return bad("h list is empty".into());
        }
        if self.h.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return bad("every h must be positive".into());
        }
        if self.h.windows(2).any(|w| w[1] >= w[0]) {
            return bad("h list must be strictly decreasing".into());
        }
        let g = &self.grid;
        for (name, v) in [
            ("n_s", g.n_s),
            ("n_t", g.n_t),
            ("n_fiber", g.n_fiber),
            ("m_hardy", g.m_hardy),
        ] {
            if v == Some(0) {
                return bad(format!("grid.{name} must be positive"));
            }
        }
        if let Some(l) = self.truncation.l {
            if !(l > 0.0) {
                return bad("truncation.l must be positive".into());
            }
        }
        if let Some(t) = self.truncation.t_halfline {
            if !(t > 0.0) {
                return bad("truncation.t_halfline must be positive".into());
            }
        }
        let t = &self.tolerances;
        if [
            t.curve,
            t.poisson_residual,
            t.truncation_sensitivity,
            t.basis_truncation,
        ]
        .iter()
        .any(|x| !(*x > 0.0))
        {
            return bad("tolerances must be positive".into());
        }
        if self.dispersion.branches == 0 {
            return bad("dispersion.branches must be at least 1".into());
        }
        if self.dispersion.points < 3 {
            return bad("dispersion.points must be at least 3".into());
        }
        if self.effective.k_max == 0 {
            return bad("effective.k_max must be at least 1".into());
        }
        self.curvature
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, so formatting changes do not alter it.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn m_hardy(&self) -> usize {
        self.grid.m_hardy.unwrap_or(DEFAULT_M_HARDY)
    }

    pub fn t_halfline(&self) -> f64 {
        self.truncation.t_halfline.unwrap_or(DEFAULT_T_HALFLINE)
    }
}
