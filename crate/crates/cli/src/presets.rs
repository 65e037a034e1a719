//! Named sweep presets `fig1` to `fig7`.
//!
//! Shared parameters: `rho_f = 1` (0 dB), unequal gains spread over
//! `[0.1, 1]` (eta 0.5, which does not affect the gains), roughly log-spaced
//! sweeps and `alpha = 10` wherever the ratio is held fixed. Every output row
//! echoes them.

use clap::ValueEnum;
use mimo_converge::channel::CorrelationSpec;
use mimo_converge::montecarlo::{Scenario, StatSelection, Sweep};
use mimo_converge::power::PowerProfile;
use serde::{Deserialize, Serialize};

pub const PRESET_RHO_F: f64 = 1.0;
pub const PRESET_ALPHA: f64 = 10.0;
pub const PRESET_BETA_MIN: f64 = 0.1;
pub const PRESET_BETA_MAX: f64 = 1.0;
pub const PRESET_ETA: f64 = 0.5;

const PRECODER_K: [usize; 7] = [10, 15, 20, 30, 50, 70, 100];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Lambda ratio vs M, iid channel, K in {10, 50}.
    Fig1,
    /// MAD vs K, iid channel, alpha = 10.
    Fig2,
    /// Diagonal dominance, fixed K = 10 and fixed alpha = 10.
    Fig3,
    /// ZF SNR and MF SINR, iid, equal powers, alpha = 10.
    Fig4,
    /// ZF SNR and MF SINR, iid, unequal powers, alpha = 10.
    Fig5,
    /// ZF SNR and MF SINR, correlated (rho 0.5 and 0.9), equal powers.
    Fig6,
    /// ZF SNR and MF SINR, correlated (rho 0.5 and 0.9), unequal powers.
    Fig7,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Fig1,
        Preset::Fig2,
        Preset::Fig3,
        Preset::Fig4,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Fig7,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
        }
    }

    /// Scenarios with the given trial budget and seed.
    pub fn scenarios(&self, trials: u64, seed: u64) -> Vec<Scenario> {
        let base = |sweep: Sweep, stats: StatSelection| Scenario {
            rho_f: PRESET_RHO_F,
            trials,
            seed,
            stats,
            ..Scenario::new(sweep)
        };
        let metrics = |sweep| base(sweep, StatSelection::METRICS);
        let precoders = |sweep| base(sweep, StatSelection::PRECODERS);
        let fixed_alpha = |k_values: &[usize]| Sweep::FixedAlpha {
            alpha: PRESET_ALPHA,
            k_values: k_values.to_vec(),
        };
        let unequal =
            || Some(PowerProfile::new(PRESET_BETA_MIN, PRESET_BETA_MAX, PRESET_ETA).expect("valid preset profile"));
        let correlated = |rho: f64| Some(CorrelationSpec::with_rho(rho).expect("valid preset correlation"));

        match self {
            Preset::Fig1 => vec![
                metrics(Sweep::FixedK {
                    k: 10,
                    m_values: vec![20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000],
                }),
                metrics(Sweep::FixedK {
                    k: 50,
                    m_values: vec![100, 200, 500, 1000, 2000, 5000, 10_000],
                }),
            ],
            Preset::Fig2 => vec![metrics(fixed_alpha(&[10, 20, 50, 100, 200]))],
            Preset::Fig3 => vec![
                metrics(Sweep::FixedK {
                    k: 10,
                    m_values: vec![64, 128, 256, 512, 1024, 2048, 4096],
                }),
                metrics(fixed_alpha(&[8, 16, 32, 64, 128])),
            ],
            Preset::Fig4 => vec![precoders(fixed_alpha(&PRECODER_K))],
            Preset::Fig5 => vec![Scenario {
                profile: unequal(),
                ..precoders(fixed_alpha(&PRECODER_K))
            }],
            Preset::Fig6 => [0.5, 0.9]
                .iter()
                .map(|&rho| Scenario {
                    correlation: correlated(rho),
                    ..precoders(fixed_alpha(&PRECODER_K))
                })
                .collect(),
            Preset::Fig7 => [0.5, 0.9]
                .iter()
                .map(|&rho| Scenario {
                    correlation: correlated(rho),
                    profile: unequal(),
                    ..precoders(fixed_alpha(&PRECODER_K))
                })
                .collect(),
        }
    }
}
