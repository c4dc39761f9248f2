use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Settings read from `--config`; command-line flags override them.
/// Unset tolerances fall back to the per-field defaults.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tol_level: Option<f64>,
    pub tol_mono: Option<f64>,
    pub tol_iso: Option<f64>,
    pub tol_rect: Option<f64>,
    pub tol_conj: Option<f64>,
    pub eps_cap: Option<f64>,
    pub g_min: Option<f64>,
    pub levels: Option<usize>,
    pub samples: Option<usize>,
    pub boundary_samples: Option<usize>,
    pub count: Option<usize>,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Values set in `other` win.
    pub fn merge(self, other: RunConfig) -> Self {
        Self {
            tol_level: other.tol_level.or(self.tol_level),
            tol_mono: other.tol_mono.or(self.tol_mono),
            tol_iso: other.tol_iso.or(self.tol_iso),
            tol_rect: other.tol_rect.or(self.tol_rect),
            tol_conj: other.tol_conj.or(self.tol_conj),
            eps_cap: other.eps_cap.or(self.eps_cap),
            g_min: other.g_min.or(self.g_min),
            levels: other.levels.or(self.levels),
            samples: other.samples.or(self.samples),
            boundary_samples: other.boundary_samples.or(self.boundary_samples),
            count: other.count.or(self.count),
            out: other.out.or(self.out),
            svg: other.svg.or(self.svg),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("tol_level", self.tol_level),
            ("tol_iso", self.tol_iso),
            ("tol_rect", self.tol_rect),
            ("tol_conj", self.tol_conj),
            ("eps_cap", self.eps_cap),
            ("g_min", self.g_min),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if let Some(v) = self.tol_mono {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("tol_mono must be non-negative, got {v}"));
            }
        }
        for (name, v, min) in [
            ("levels", self.levels, 2),
            ("samples", self.samples, 2),
            ("boundary_samples", self.boundary_samples, 8),
            ("count", self.count, 3),
        ] {
            if let Some(v) = v {
                if v < min {
                    return Err(format!("{name} must be at least {min}, got {v}"));
                }
            }
        }
        Ok(())
    }
}
