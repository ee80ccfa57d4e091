//! TOML run configuration. Unknown keys are rejected; physical parameters
//! are re-validated on load.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::DetectOptions;
use crate::classical::{BenettinOptions, CloudOptions, SectionOptions};
use crate::coherent::ContourOptions;
use crate::error::{Error, Result};
use crate::maps::MapGrid;
use crate::model::ModelParams;
use crate::spectrum::{ConvergenceTolerances, EnergyWindow, SpacingOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub omega: f64,
    pub omega0: f64,
    pub gamma: f64,
    pub j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    pub n_max: u32,
    #[serde(default = "positive")]
    pub parity: String,
}

fn positive() -> String {
    "positive".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    /// `[lo, hi]` in units of J; eigenvectors are kept only inside it.
    pub window: Option<[f64; 2]>,
    /// Larger truncation for the convergence check; 0 disables it.
    pub check_n_max: Option<u32>,
    /// Levels checked for convergence, in units of J.
    pub check_window: Option<[f64; 2]>,
    pub tolerances: Option<ConvergenceTolerances>,
    /// Level-spacing statistics over this window (units of J).
    pub spacing_window: Option<[f64; 2]>,
    pub spacing: Option<SpacingOptions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    /// Surface energies in units of J.
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasePointSection {
    /// Energy in units of J; the point sits on the surface p = 0, q = q₊.
    pub energy: f64,
    pub phi: f64,
    pub jz_tilde: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub t_max: f64,
    pub n_points: usize,
    pub decay_multiple: f64,
    pub window_start: Option<f64>,
    pub allow_degenerate: bool,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            t_max: crate::dynamics::DEFAULT_T_MAX,
            n_points: crate::dynamics::DEFAULT_N_TIMES,
            decay_multiple: 10.0,
            window_start: None,
            allow_degenerate: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovMethodChoice {
    #[default]
    Benettin,
    Cloud,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub n_phi: usize,
    pub n_jz: usize,
    pub seed: u64,
    pub method: LyapunovMethodChoice,
    pub benettin: BenettinOptions,
    pub cloud: CloudOptions,
    pub n_crossings: usize,
    pub sections: SectionOptions,
}

pub const DEFAULT_GRID: usize = 100;
pub const COARSE_GRID: usize = 40;

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            n_phi: DEFAULT_GRID,
            n_jz: DEFAULT_GRID,
            seed: 0,
            method: LyapunovMethodChoice::Benettin,
            benettin: BenettinOptions::default(),
            cloud: CloudOptions::default(),
            n_crossings: 200,
            sections: SectionOptions {
                t_max: 2e4,
                ..Default::default()
            },
        }
    }
}

impl ScanSection {
    pub fn grid(&self) -> MapGrid {
        MapGrid::new(self.n_phi, self.n_jz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoSection {
    pub output: PathBuf,
    pub cache_dir: PathBuf,
    pub plot: bool,
}

impl Default for IoSection {
    fn default() -> Self {
        Self {
            output: "out".into(),
            cache_dir: "cache".into(),
            plot: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub basis: BasisSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    pub surface: Option<SurfaceSection>,
    pub phase_point: Option<PhasePointSection>,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub contour: ContourOptions,
    #[serde(default)]
    pub fit: DetectOptions,
    #[serde(default)]
    pub io: IoSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        if self.basis.parity != "positive" {
            return Err(Error::Config(format!(
                "basis.parity = \"{}\" is not supported; only \"positive\" is implemented",
                self.basis.parity
            )));
        }
        for (name, w) in [
            ("spectrum.window", self.spectrum.window),
            ("spectrum.check_window", self.spectrum.check_window),
            ("spectrum.spacing_window", self.spectrum.spacing_window),
        ] {
            if let Some([lo, hi]) = w {
                if !(lo < hi) {
                    return Err(Error::Config(format!(
                        "{name} must satisfy lo < hi, got [{lo}, {hi}]"
                    )));
                }
            }
        }
        if let (Some([lo, hi]), Some([clo, chi])) =
            (self.spectrum.window, self.spectrum.check_window)
        {
            if clo < lo || chi > hi {
                return Err(Error::Config(
                    "spectrum.check_window must lie inside spectrum.window".into(),
                ));
            }
        }
        if self.time.t_max <= 0.0 || self.time.n_points < 20 {
            return Err(Error::Config(
                "time.t_max must be positive and time.n_points at least 20".into(),
            ));
        }
        self.scan
            .grid()
            .validate()
            .map_err(|e| Error::Config(format!("scan grid: {e}")))?;
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        let m = &self.model;
        ModelParams::new(m.omega, m.omega0, m.gamma, m.j)
            .map_err(|e| Error::Config(format!("model: {e}")))
    }

    pub fn window(&self) -> Result<Option<EnergyWindow>> {
        let p = self.params()?;
        self.spectrum
            .window
            .map(|[lo, hi]| EnergyWindow::scaled(lo, hi, &p))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        "[model]\nomega = 1.0\nomega0 = 1.0\ngamma = 0.0\nj = 5\n\n[basis]\nn_max = 20\n";

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.basis.n_max, 20);
        assert_eq!(c.scan.n_phi, DEFAULT_GRID);
        assert_eq!(c.time.n_points, 20_000);
        assert!(c.window().unwrap().is_none());
    }

    #[test]
    fn missing_key_is_named() {
        let err = RunConfig::parse(
            "[model]\nomega = 1.0\nomega0 = 1.0\ngamma = 0.5\n[basis]\nn_max = 4\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("`j`"), "{err}");
    }

    #[test]
    fn unknown_keys_and_negative_parity_rejected() {
        let extra = format!("{MINIMAL}colour = 3\n");
        assert!(RunConfig::parse(&extra).is_err());
        let neg = MINIMAL.replace("n_max = 20", "n_max = 20\nparity = \"negative\"");
        let err = RunConfig::parse(&neg).unwrap_err();
        assert!(err.to_string().contains("parity"));
        let bad_j = MINIMAL.replace("j = 5", "j = 2.25");
        assert!(RunConfig::parse(&bad_j).is_err());
    }
}
