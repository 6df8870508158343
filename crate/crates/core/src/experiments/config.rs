use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::DecouplingInput;
use crate::error::{invalid, Result, WptError};
use crate::optimizer::{PowerBudgets, SolverConfig};
use crate::rectenna::RectennaParams;
use crate::signal::{dbv_to_volts, dbw_to_watts, ToneGrid};
use crate::sspa::SspaParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Joint SSPA/rectenna SCP.
    Opt,
    /// Rectenna-only optimum passed through the SSPA.
    Decoupling,
    /// Rectenna-only optimum through a transparent amplifier.
    Ideal,
    /// Scaled matched filter through a transparent amplifier.
    Smf,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Self::Opt, Self::Decoupling, Self::Ideal, Self::Smf];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Opt => "opt",
            Self::Decoupling => "decoupling",
            Self::Ideal => "ideal",
            Self::Smf => "smf",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = WptError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "opt" => Ok(Self::Opt),
            "decoupling" => Ok(Self::Decoupling),
            "ideal" => Ok(Self::Ideal),
            "smf" => Ok(Self::Smf),
            other => Err(WptError::Config(format!(
                "unknown strategy `{other}` (expected opt, decoupling, ideal or smf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TonesConfig {
    /// Sub-carrier counts to sweep.
    pub n: Vec<usize>,
    pub m: usize,
    /// Hz.
    pub f0: f64,
    /// Hz.
    pub delta_f: f64,
}

impl Default for TonesConfig {
    fn default() -> Self {
        Self {
            n: vec![8],
            m: 1,
            f0: 5.18e9,
            delta_f: 312.5e3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SspaConfig {
    pub gain: f64,
    pub as_dbv: f64,
    pub beta: f64,
}

impl Default for SspaConfig {
    fn default() -> Self {
        Self {
            gain: 1.0,
            as_dbv: -35.0,
            beta: 1.0,
        }
    }
}

impl SspaConfig {
    pub fn params(&self) -> Result<SspaParams<f64>> {
        SspaParams::new(self.gain, dbv_to_volts(self.as_dbv), self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RectennaConfig {
    /// Diode saturation current, A.
    pub i_s: f64,
    pub eta0: f64,
    /// Thermal voltage, V.
    pub v0: f64,
    /// Ohm.
    pub r_ant: f64,
}

impl Default for RectennaConfig {
    fn default() -> Self {
        let r = RectennaParams::<f64>::reference();
        Self {
            i_s: r.saturation_current,
            eta0: r.ideality,
            v0: r.thermal_voltage,
            r_ant: r.antenna_resistance,
        }
    }
}

impl RectennaConfig {
    pub fn params(&self) -> Result<RectennaParams<f64>> {
        RectennaParams::new(self.i_s, self.eta0, self.v0, self.r_ant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    pub p_in_max_dbw: f64,
    pub p_tr_max_dbw: Vec<f64>,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            p_in_max_dbw: -20.0,
            p_tr_max_dbw: vec![-45.0, -42.5, -40.0, -37.5, -35.0, -32.5, -30.0],
        }
    }
}

impl BudgetConfig {
    pub fn budgets(&self, p_tr_dbw: f64) -> Result<PowerBudgets<f64>> {
        PowerBudgets::new(dbw_to_watts(self.p_in_max_dbw), dbw_to_watts(p_tr_dbw))
    }
}

/// Everything a sweep depends on. Missing keys take the defaults below;
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub tones: TonesConfig,
    pub sspa: SspaConfig,
    pub rectenna: RectennaConfig,
    pub budgets: BudgetConfig,
    pub strategies: Vec<Strategy>,
    pub num_channels: usize,
    pub seed: u64,
    pub solver: SolverConfig<f64>,
    pub decoupling: DecouplingInput,
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            tones: TonesConfig::default(),
            sspa: SspaConfig::default(),
            rectenna: RectennaConfig::default(),
            budgets: BudgetConfig::default(),
            strategies: Strategy::ALL.to_vec(),
            num_channels: 50,
            seed: 0,
            solver: SolverConfig::default(),
            decoupling: DecouplingInput::default(),
            output_path: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| WptError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| WptError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tones.n.is_empty() {
            return Err(invalid("tones.n", "must not be empty"));
        }
        if self.budgets.p_tr_max_dbw.is_empty() {
            return Err(invalid("budgets.p_tr_max_dbw", "must not be empty"));
        }
        if self.strategies.is_empty() {
            return Err(invalid("strategies", "must not be empty"));
        }
        if self.num_channels == 0 {
            return Err(invalid("num_channels", "must be at least 1"));
        }
        for &n in &self.tones.n {
            self.tone_grid(n)?;
        }
        for &p in &self.budgets.p_tr_max_dbw {
            self.budgets.budgets(p)?;
        }
        self.sspa.params()?;
        self.rectenna.params()?;
        self.solver.validate()
    }

    pub fn tone_grid(&self, n: usize) -> Result<ToneGrid> {
        ToneGrid::new(n, self.tones.m, self.tones.f0, self.tones.delta_f)
    }
}
