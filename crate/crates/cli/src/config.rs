//! Run configuration, read from a TOML file with sections `model`,
//! `hilbert`, `grid`, `sweep` and `output`. Every key is optional and
//! unknown keys are rejected.

use std::path::{Path, PathBuf};

use quadmech::dynamics::{FloquetSweep, MasterOptions, SectorMode, TimeGrid};
use quadmech::{HilbertSpec, ModelParams, C64};
use serde::{Deserialize, Serialize};

/// Environment variable overriding the configured output directory.
pub const OUT_DIR_ENV: &str = "QUADMECH_OUT_DIR";
/// Output directory when neither flag, environment nor config names one.
pub const DEFAULT_OUT_DIR: &str = "quadmech-out";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub hilbert: HilbertSection,
    pub grid: GridSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

/// Model parameters in mechanical units, plus the initial coherent
/// amplitude `alpha = |alpha| e^{i alpha_phase}` of the cavity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// Default 2.
    pub omega0: f64,
    /// Default 0.003.
    pub g: f64,
    /// Drive amplitude, default 0. Used by `floquet` only.
    pub drive: f64,
    /// Default 0.5.
    pub omega_d: f64,
    /// Default 0.1.
    pub gamma_o: f64,
    /// Default 1e-7.
    pub gamma_m: f64,
    /// Default 1000. Wins over `temperature`.
    pub nbar_m: Option<f64>,
    /// Kelvin; needs `omega_m_hz`. Default unset.
    pub temperature: Option<f64>,
    pub omega_m_hz: Option<f64>,
    pub p_in: Option<f64>,
    /// Default 1.
    pub alpha: f64,
    /// Radians, default 0.
    pub alpha_phase: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::default();
        Self {
            omega0: p.omega0,
            g: p.g,
            drive: p.drive,
            omega_d: p.omega_d,
            gamma_o: p.gamma_o,
            gamma_m: p.gamma_m,
            nbar_m: p.nbar_m,
            temperature: p.temperature,
            omega_m_hz: p.omega_m_hz,
            p_in: p.p_in,
            alpha: 1.0,
            alpha_phase: 0.0,
        }
    }
}

impl ModelSection {
    pub fn params(&self) -> quadmech::Result<ModelParams> {
        let p = ModelParams {
            omega0: self.omega0,
            g: self.g,
            drive: self.drive,
            omega_d: self.omega_d,
            gamma_o: self.gamma_o,
            gamma_m: self.gamma_m,
            nbar_m: self.nbar_m,
            temperature: self.temperature,
            omega_m_hz: self.omega_m_hz,
            p_in: self.p_in,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same coupling and cavity frequency, no drive, no dissipation.
    pub fn closed_params(&self) -> quadmech::Result<ModelParams> {
        let p = self.params()?;
        Ok(ModelParams {
            omega0: p.omega0,
            ..ModelParams::closed(p.g)
        })
    }

    pub fn alpha(&self) -> quadmech::Result<C64> {
        if !(self.alpha.is_finite() && self.alpha_phase.is_finite()) {
            return Err(quadmech::Error::NonFinite("alpha".into()));
        }
        Ok(C64::from_polar(self.alpha, self.alpha_phase))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HilbertSection {
    /// Default 16.
    pub n_cav: usize,
    /// Default 40.
    pub n_mech: usize,
}

impl Default for HilbertSection {
    fn default() -> Self {
        Self {
            n_cav: 16,
            n_mech: 40,
        }
    }
}

impl HilbertSection {
    pub fn spec(&self) -> quadmech::Result<HilbertSpec> {
        HilbertSpec::new(self.n_cav, self.n_mech)
    }
}

/// Uniform time grid, `n_steps + 1` samples with both ends included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Default 0.
    pub t_start: f64,
    /// Default 20.
    pub t_end: f64,
    /// Default 200.
    pub n_steps: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            t_start: 0.0,
            t_end: 20.0,
            n_steps: 200,
        }
    }
}

impl GridSection {
    pub fn grid(&self) -> quadmech::Result<TimeGrid> {
        TimeGrid::new(self.t_start, self.t_end, self.n_steps)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// `squeezeparam` rows `n = 0..=n_max`. Default 500.
    pub n_max: usize,
    /// Coupling grid of `spectrum`: default 0 to 1 in 101 points.
    pub g_min: f64,
    pub g_max: f64,
    pub g_points: usize,
    /// Coupling grid of `floquet`, same range as `spectrum`. Default 11.
    pub floquet_g_points: usize,
    /// Largest phonon label of `spectrum`, `floquet`, `dressed`, `mandel`. Default 5.
    pub k_max: usize,
    /// Largest photon label of the same. Default 3.
    pub label_n_max: usize,
    /// Floquet method (b) composition steps per period. Default 2048.
    pub steps_per_period: usize,
    /// Half-width in `g` of each gap search. Default 0.1.
    pub gap_window: f64,
    /// Samples per gap search before refinement. Default 41.
    pub gap_points: usize,
    /// Photon numbers of `condition`. Default [0, 1, 2].
    pub photon_numbers: Vec<usize>,
    /// Times of `condition`. Default [0.5].
    pub condition_times: Vec<f64>,
    /// Also condition each photon number at its optimal squeezing time. Default true.
    pub condition_optimal: bool,
    /// Entries evolved by `lindblad`: "full", "reachable" or "photon-diagonal".
    pub sectors: SectorMode,
    /// Explicit `lindblad` step; default chosen from the fastest rate.
    pub step: Option<f64>,
    /// Spectral positivity check on every `lindblad` sample. Default true.
    pub check_positivity: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        let f = FloquetSweep::default();
        Self {
            n_max: 500,
            g_min: 0.0,
            g_max: 1.0,
            g_points: 101,
            floquet_g_points: f.g_values.len(),
            k_max: f.k_max,
            label_n_max: f.n_max,
            steps_per_period: f.steps_per_period,
            gap_window: f.gap_window,
            gap_points: f.gap_points,
            photon_numbers: vec![0, 1, 2],
            condition_times: vec![0.5],
            condition_optimal: true,
            sectors: SectorMode::default(),
            step: None,
            check_positivity: true,
        }
    }
}

impl SweepSection {
    pub fn g_values(&self, points: usize) -> quadmech::Result<Vec<f64>> {
        if !(self.g_min.is_finite() && self.g_max.is_finite()) {
            return Err(quadmech::Error::NonFinite("g range".into()));
        }
        if points == 0 || self.g_max < self.g_min {
            return Err(quadmech::Error::InvalidParameter(format!(
                "g range [{}, {}] with {points} points",
                self.g_min, self.g_max
            )));
        }
        Ok(quadmech::dynamics::spectrum::linspace(self.g_min, self.g_max, points))
    }

    pub fn floquet(&self) -> quadmech::Result<FloquetSweep> {
        Ok(FloquetSweep {
            g_values: self.g_values(self.floquet_g_points)?,
            k_max: self.k_max,
            n_max: self.label_n_max,
            steps_per_period: self.steps_per_period,
            gap_window: self.gap_window,
            gap_points: self.gap_points,
        })
    }

    pub fn master(&self) -> MasterOptions {
        MasterOptions {
            sectors: self.sectors,
            step: self.step,
            check_positivity: self.check_positivity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Output directory; `--out` and the environment override it.
    pub dir: Option<PathBuf>,
    /// Times at which `evolve` and `lindblad` write Wigner grids. Default none.
    pub wigner_times: Vec<f64>,
    /// Grid points per axis. Default 101.
    pub wigner_points: usize,
    /// Grid half-width in `q` and `p`. Default 5.
    pub wigner_extent: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            wigner_times: Vec::new(),
            wigner_points: 101,
            wigner_extent: 5.0,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Resolved configuration recorded in a run manifest.
    pub fn from_manifest(text: &str) -> Result<Self, String> {
        let mut doc: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let cfg = doc
            .get_mut("config")
            .map(serde_json::Value::take)
            .ok_or("manifest has no `config` entry")?;
        serde_json::from_value(cfg).map_err(|e| e.to_string())
    }

    /// TOML, or a `.json` run manifest to repeat a recorded run.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::from_manifest(&text)
        } else {
            Self::parse(&text)
        };
        parsed.map_err(|e| format!("{}: {e}", path.display()))
    }

    /// `--out`, then the environment, then the config, then the default.
    pub fn out_dir(&self, flag: Option<&Path>, env: Option<&str>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(e) = env.filter(|e| !e.is_empty()) {
            return PathBuf::from(e);
        }
        self.output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}
