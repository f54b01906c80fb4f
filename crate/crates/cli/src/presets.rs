//! Figure presets: the parameter sets of the published experiments.
//!
//! All use `θ_u = 10°`, `d = λ/2`, `α = 1e-3` and co-located spoofer antennas
//! at `θ_u + Δ`.

use std::str::FromStr;

use crate::config::{PointConfig, RedrawConfig, SpooferSection};
use crate::error::CliError;
use crate::svg::{Plot, PlotSeries};
use crate::sweep::{ResultRow, Series, SweepAxis, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `P_SD`, `P_FA` vs SNR for several offsets; M=16, L=1, K=20.
    Fig1,
    /// `P_SD` vs offset for several M; K=10, SNR=0 dB.
    Fig2a,
    /// `P_SD` vs offset for several K; M=32, SNR=0 dB.
    Fig2b,
    /// `P_SD` vs L for equal-gain and phase-variant spoofers; M=8, K=2, SNR=5 dB.
    Fig3,
}

pub const FIG1_OFFSETS_DEG: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
pub const FIG2A_ELEMENTS: [usize; 5] = [4, 16, 32, 64, 128];
pub const FIG2B_SNAPSHOTS: [usize; 5] = [2, 5, 10, 20, 50];
pub const FIG3_OFFSETS_DEG: [f64; 3] = [1.0, 2.0, 4.0];
pub const FIG3_PHI_MAX_DEG: [f64; 2] = [0.0, 10.0];
pub const FIG3_ANTENNAS: [usize; 11] = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024];

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Fig1, Preset::Fig2a, Preset::Fig2b, Preset::Fig3];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::Fig3 => "fig3",
        }
    }

    pub fn series(self) -> Vec<Series> {
        match self {
            Preset::Fig1 => FIG1_OFFSETS_DEG
                .iter()
                .map(|&d| Series {
                    label: format!("delta={d}deg"),
                    base: point(16, 20, 0.0, d, 1, 0.0),
                    sweep: SweepSpec::range(SweepAxis::SnrDb, -15.0, 50.0, 1.0),
                })
                .collect(),
            Preset::Fig2a => FIG2A_ELEMENTS
                .iter()
                .map(|&m| Series {
                    label: format!("M={m}"),
                    base: point(m, 10, 0.0, 0.0, 1, 0.0),
                    sweep: SweepSpec::range(SweepAxis::OffsetDeg, 0.0, 8.0, 0.5),
                })
                .collect(),
            Preset::Fig2b => FIG2B_SNAPSHOTS
                .iter()
                .map(|&k| Series {
                    label: format!("K={k}"),
                    base: point(32, k, 0.0, 0.0, 1, 0.0),
                    sweep: SweepSpec::range(SweepAxis::OffsetDeg, 0.0, 8.0, 0.5),
                })
                .collect(),
            Preset::Fig3 => FIG3_PHI_MAX_DEG
                .iter()
                .flat_map(|&phi| {
                    FIG3_OFFSETS_DEG.iter().map(move |&d| Series {
                        label: format!("phi_max={phi}deg delta={d}deg"),
                        base: point(8, 2, 5.0, d, 1, phi),
                        sweep: SweepSpec::list(SweepAxis::Antennas, FIG3_ANTENNAS.iter().map(|&l| l as f64).collect()),
                    })
                })
                .collect(),
        }
    }

    /// `P_SD` plot of the preset's rows.
    pub fn plot(self, rows: &[ResultRow]) -> Plot {
        let (title, x_label, log_x) = match self {
            Preset::Fig1 => ("P_SD vs SNR (M=16, L=1, K=20)", "SNR [dB]", false),
            Preset::Fig2a => ("P_SD vs offset (K=10, SNR=0 dB)", "angular offset [deg]", false),
            Preset::Fig2b => ("P_SD vs offset (M=32, SNR=0 dB)", "angular offset [deg]", false),
            Preset::Fig3 => ("P_SD vs L (M=8, K=2, SNR=5 dB)", "L", true),
        };
        let mut series: Vec<PlotSeries> = Vec::new();
        for row in rows {
            if series.last().map(|s| s.label != row.series).unwrap_or(true) {
                series.push(PlotSeries {
                    label: row.series.clone(),
                    dashed: row.phi_max_deg.is_some_and(|p| p > 0.0),
                    ..PlotSeries::default()
                });
            }
            let s = series.last_mut().expect("pushed above");
            if let Some(p) = row.p_sd {
                s.line.push((row.value, p));
            }
            if let (Some(p), Some(lo), Some(hi)) = (row.p_sd_hat, row.ci_low, row.ci_high) {
                s.points.push((row.value, p, lo, hi));
            }
        }
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: "probability of spoofing detection".into(),
            log_x,
            y_range: (0.0, 1.0),
            series,
        }
    }
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown preset {s:?}; expected fig1, fig2a, fig2b or fig3")))
    }
}

fn point(elements: usize, snapshots: usize, snr_db: f64, offset_deg: f64, antennas: usize, phi_max_deg: f64) -> PointConfig {
    PointConfig {
        elements,
        spacing: 0.5,
        theta_u_deg: 10.0,
        snr_db,
        snapshots,
        alpha: 1e-3,
        spoofer: Some(SpooferSection {
            offset_deg,
            antennas,
            phi_max_deg,
            phase_redraw: RedrawConfig::PerTrial,
        }),
    }
}
