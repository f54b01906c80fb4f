//! Scenario configuration file.
//!
//! A TOML document with degrees and dB at the boundary; [`PointConfig::scenario`]
//! is the only place they are converted to radians and noise variance.
//!
//! ```toml
//! [array]
//! elements = 16        # M
//! spacing = 0.5        # d / lambda
//!
//! [link]
//! theta_u_deg = 10.0
//! snr_db = 5.0
//! snapshots = 20       # K
//! alpha = 0.001
//!
//! [spoofer]            # omit for a legitimate-only scenario
//! offset_deg = 0.25    # co-located antennas at theta_u + offset
//! antennas = 1         # L, equal gains 1/L
//! phi_max_deg = 0.0
//! phase_redraw = "per-trial"   # or "fixed"
//!
//! [monte_carlo]
//! trials = 100000
//! seed = 42
//! confidence = 0.99
//! phase_draws = 1024
//!
//! [sweep]              # used by `sweep`
//! axis = "snr_db"      # snr_db | M | K | L | angular_offset_deg | phi_max_deg
//! values = [0, 5, 10]  # or start / stop / step
//! ```

use std::path::Path;

use aoa_pla_core::montecarlo::{
    sigma2_from_snr_db, PhaseRedraw, PhaseSpreadModel, Scenario, DEFAULT_CONFIDENCE, DEFAULT_SEED,
    DEFAULT_TRIALS,
};
use aoa_pla_core::signal_model::{SpooferConfig, UlaGeometry};
use aoa_pla_core::{deg, Geometry};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::sweep::SweepSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrayConfig {
    pub elements: usize,
    pub spacing: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            elements: 16,
            spacing: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    pub theta_u_deg: f64,
    pub snr_db: f64,
    pub snapshots: usize,
    pub alpha: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            theta_u_deg: 10.0,
            snr_db: 5.0,
            snapshots: 20,
            alpha: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RedrawConfig {
    PerTrial,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpooferSection {
    pub offset_deg: f64,
    pub antennas: usize,
    pub phi_max_deg: f64,
    pub phase_redraw: RedrawConfig,
}

impl Default for SpooferSection {
    fn default() -> Self {
        Self {
            offset_deg: 0.25,
            antennas: 1,
            phi_max_deg: 0.0,
            phase_redraw: RedrawConfig::PerTrial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub trials: u64,
    pub seed: u64,
    pub confidence: f64,
    /// Phase draws averaged by the analytic curve of a phase-variant spoofer.
    pub phase_draws: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            confidence: DEFAULT_CONFIDENCE,
            phase_draws: 1024,
        }
    }
}

/// Whole configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub array: ArrayConfig,
    pub link: LinkConfig,
    pub spoofer: Option<SpooferSection>,
    pub monte_carlo: MonteCarloConfig,
    pub sweep: Option<SweepSpec>,
}

impl Config {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.point().validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn point(&self) -> PointConfig {
        PointConfig {
            elements: self.array.elements,
            spacing: self.array.spacing,
            theta_u_deg: self.link.theta_u_deg,
            snr_db: self.link.snr_db,
            snapshots: self.link.snapshots,
            alpha: self.link.alpha,
            spoofer: self.spoofer.clone(),
        }
    }
}

/// One operating point in boundary units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfig {
    pub elements: usize,
    pub spacing: f64,
    pub theta_u_deg: f64,
    pub snr_db: f64,
    pub snapshots: usize,
    pub alpha: f64,
    pub spoofer: Option<SpooferSection>,
}

fn field(path: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {err}"))
}

impl PointConfig {
    pub fn geometry(&self) -> CliResult<Geometry> {
        UlaGeometry::new(self.elements, self.spacing).map_err(|e| {
            let path = if self.elements < 2 { "array.elements" } else { "array.spacing" };
            field(path, e)
        })
    }

    pub fn validate(&self) -> CliResult<()> {
        self.geometry()?;
        if !(self.theta_u_deg.is_finite() && self.theta_u_deg.abs() < 90.0) {
            return Err(field("link.theta_u_deg", "must lie strictly between -90 and 90"));
        }
        if !self.snr_db.is_finite() {
            return Err(field("link.snr_db", "must be finite"));
        }
        if self.snapshots == 0 {
            return Err(field("link.snapshots", "K must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(field("link.alpha", "must lie in (0, 1)"));
        }
        if let Some(sp) = &self.spoofer {
            if sp.antennas == 0 {
                return Err(field("spoofer.antennas", "L must be at least 1"));
            }
            let theta_a = self.theta_u_deg + sp.offset_deg;
            if !(theta_a.is_finite() && theta_a.abs() < 90.0) {
                return Err(field("spoofer.offset_deg", "theta_u + offset must lie in (-90, 90)"));
            }
            if !(sp.phi_max_deg.is_finite() && sp.phi_max_deg >= 0.0) {
                return Err(field("spoofer.phi_max_deg", "must be finite and non-negative"));
            }
        }
        Ok(())
    }

    /// Core scenario: radians, `σ² = 10^(-SNR/10)`.
    pub fn scenario(&self, trials: u64, seed: u64, confidence: f64) -> CliResult<Scenario<f64>> {
        self.validate()?;
        let mut sc = Scenario::new(
            self.geometry()?,
            deg(self.theta_u_deg),
            sigma2_from_snr_db(self.snr_db),
            self.snapshots,
        )
        .with_alpha(self.alpha)
        .with_trials(trials)
        .with_seed(seed)
        .with_confidence(confidence);
        if let Some(sp) = &self.spoofer {
            let spoofer = SpooferConfig::colinear_equal_gain(deg(self.theta_u_deg + sp.offset_deg), sp.antennas)
                .map_err(|e| field("spoofer", e))?;
            sc = sc.with_spoofer(spoofer);
            if sp.phi_max_deg > 0.0 {
                let redraw = match sp.phase_redraw {
                    RedrawConfig::PerTrial => PhaseRedraw::PerTrial,
                    RedrawConfig::Fixed => PhaseRedraw::Fixed,
                };
                let model =
                    PhaseSpreadModel::new(deg(sp.phi_max_deg), redraw).map_err(|e| field("spoofer.phi_max_deg", e))?;
                sc = sc.with_phase_spread(model);
            }
        }
        sc.validate().map_err(|e| field("scenario", e))?;
        Ok(sc)
    }

    /// Spoofer section, inserting the default one if absent.
    pub fn spoofer_mut(&mut self) -> &mut SpooferSection {
        self.spoofer.get_or_insert_with(SpooferSection::default)
    }
}
