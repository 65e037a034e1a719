//! Zero-forcing and matched-filter downlink precoders.
//!
//! Both precoders are normalized so the transmit vector has unit average
//! power. Per trial only the (unnormalized) column Gram `G^H G` is needed:
//!
//! * ZF: `gamma = tr((G^H G)^{-1}) / K` and every user sees
//!   `SNR = rho_f / tr((G^H G)^{-1})`.
//! * MF: `gamma = tr(G^H G) / K` and user `i` sees
//!   `SINR_i = c |g_i|^4 / (1 + c sum_{k != i} |<g_i, g_k>|^2)` with
//!   `c = rho_f / (K gamma)`.
//!
//! Unequal link gains enter only through `G = H D^{1/2}`, so the same
//! expressions cover both power models.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{gram_normalized, inverse_trace, ComplexMatrix, HermitianMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    rho_f: f64,
    alpha: f64,
}

impl SystemParams {
    /// `rho_f` is the linear transmit SNR and `alpha = M / K`.
    pub fn new(rho_f: f64, alpha: f64) -> Result<Self> {
        if !(rho_f > 0.0 && rho_f.is_finite()) {
            return Err(invalid(format!(
                "transmit SNR must be positive and finite, got {rho_f}"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!(
                "antenna ratio must be positive and finite, got {alpha}"
            )));
        }
        Ok(Self { rho_f, alpha })
    }

    pub fn for_dims(rho_f: f64, m: usize, k: usize) -> Result<Self> {
        Self::new(rho_f, m as f64 / k as f64)
    }

    pub fn rho_f(&self) -> f64 {
        self.rho_f
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecoderResult {
    pub zf_snr: f64,
    pub zf_gamma: f64,
    pub mf_sinr: Vec<f64>,
    pub mf_gamma: f64,
}

impl PrecoderResult {
    pub fn mf_sinr_mean(&self) -> f64 {
        self.mf_sinr.iter().sum::<f64>() / self.mf_sinr.len() as f64
    }
}

fn column_gram(g: &ComplexMatrix) -> Result<HermitianMatrix> {
    gram_normalized(g, 1.0)
}

pub fn zf_gamma(g: &ComplexMatrix) -> Result<f64> {
    zf_gamma_from_gram(&column_gram(g)?)
}

pub fn zf_gamma_from_gram(gram: &HermitianMatrix) -> Result<f64> {
    Ok(inverse_trace(gram)? / gram.dim() as f64)
}

pub fn zf_snr(g: &ComplexMatrix, params: &SystemParams) -> Result<f64> {
    zf_snr_from_gram(&column_gram(g)?, params.rho_f)
}

pub fn zf_snr_from_gram(gram: &HermitianMatrix, rho_f: f64) -> Result<f64> {
    Ok(rho_f / inverse_trace(gram)?)
}

/// `rho_f (alpha - 1) / mean_inv_beta`; pass `mean_inv_beta = 1` for equal powers.
pub fn zf_snr_limit(params: &SystemParams, mean_inv_beta: f64) -> Result<f64> {
    if params.alpha <= 1.0 {
        return Err(invalid(format!("ZF limit needs alpha > 1, got {}", params.alpha)));
    }
    if !(mean_inv_beta > 0.0 && mean_inv_beta.is_finite()) {
        return Err(invalid(format!(
            "mean inverse gain must be positive, got {mean_inv_beta}"
        )));
    }
    Ok(params.rho_f * (params.alpha - 1.0) / mean_inv_beta)
}

pub fn mf_gamma(g: &ComplexMatrix) -> Result<f64> {
    let total = g.frobenius_norm_sq();
    if total == 0.0 {
        return Err(invalid("matched filter needs a nonzero channel"));
    }
    Ok(total / g.cols() as f64)
}

pub fn mf_sinr(g: &ComplexMatrix, params: &SystemParams) -> Result<Vec<f64>> {
    mf_sinr_from_gram(&column_gram(g)?, params.rho_f)
}

pub fn mf_sinr_from_gram(gram: &HermitianMatrix, rho_f: f64) -> Result<Vec<f64>> {
    let k = gram.dim();
    let trace = gram.trace();
    if trace.is_nan() || trace <= 0.0 {
        return Err(invalid("matched filter needs a nonzero channel"));
    }
    // K gamma = tr(G^H G)
    let c = rho_f / trace;
    Ok((0..k)
        .map(|i| {
            let signal = gram[(i, i)].re * gram[(i, i)].re;
            let interference: f64 = (0..k).filter(|&j| j != i).map(|j| gram[(i, j)].norm_sqr()).sum();
            c * signal / (1.0 + c * interference)
        })
        .collect())
}

/// `rho_f alpha beta_i^2 / (mean_beta + rho_f beta_i mean_beta)`; equal
/// powers (`beta_i = mean_beta = 1`) give `rho_f alpha / (rho_f + 1)`.
pub fn mf_sinr_limit(params: &SystemParams, beta_i: f64, mean_beta: f64) -> Result<f64> {
    if !(beta_i > 0.0 && mean_beta > 0.0 && beta_i.is_finite() && mean_beta.is_finite()) {
        return Err(invalid("link gains must be positive and finite"));
    }
    let rho = params.rho_f;
    Ok(rho * params.alpha * beta_i * beta_i / (mean_beta + rho * beta_i * mean_beta))
}

/// ZF and MF figures for one channel, from its column Gram `G^H G`.
pub fn evaluate_precoders(gram: &HermitianMatrix, rho_f: f64) -> Result<PrecoderResult> {
    let k = gram.dim() as f64;
    let inv_trace = inverse_trace(gram)?;
    Ok(PrecoderResult {
        zf_snr: rho_f / inv_trace,
        zf_gamma: inv_trace / k,
        mf_sinr: mf_sinr_from_gram(gram, rho_f)?,
        mf_gamma: gram.trace() / k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_iid, ChannelModel, RngStream};
    use crate::numerics::test_support::random_complex;
    use crate::numerics::C64;
    use crate::power::{limiting_moments, link_gains, LinkGains, PowerProfile};
    use proptest::prelude::*;

    fn unit() -> SystemParams {
        SystemParams::new(1.0, 10.0).unwrap()
    }

    fn orthonormal_columns(m: usize, k: usize, seed: u64) -> ComplexMatrix {
        let a = random_complex(m, k, seed).into_nalgebra();
        ComplexMatrix::from_nalgebra(a.qr().q()).unwrap()
    }

    fn random_unitary(m: usize, seed: u64) -> ComplexMatrix {
        orthonormal_columns(m, m, seed)
    }

    fn mean(xs: impl Iterator<Item = f64>) -> f64 {
        let v: Vec<f64> = xs.collect();
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn zf_gamma_trivial() {
        assert!((zf_gamma(&ComplexMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-14);
        let q = orthonormal_columns(9, 3, 1).scaled(2.0);
        assert!((zf_gamma(&q).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn zf_gamma_inverse_wishart_mean() {
        // E tr((H^H H)^{-1}) = K / (M - K) for complex Wishart.
        let trials = 20_000u64;
        let m = mean((0..trials).map(|t| 10.0 * zf_gamma(&sample_iid(40, 10, RngStream::new(8, t)).unwrap()).unwrap()));
        assert!((m - 1.0 / 3.0).abs() / (1.0 / 3.0) < 0.02, "mean {m}");
    }

    #[test]
    fn zf_rejects_rank_deficient() {
        assert!(zf_snr(&random_complex(3, 5, 2), &unit()).is_err());
    }

    #[test]
    fn zf_single_user() {
        let g = random_complex(6, 1, 3);
        let p = SystemParams::new(2.5, 6.0).unwrap();
        let expected = 2.5 * g.frobenius_norm_sq();
        assert!((zf_snr(&g, &p).unwrap() - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn zf_equal_power_monte_carlo() {
        let m = mean((0..1000).map(|t| zf_snr(&sample_iid(100, 10, RngStream::new(1, t)).unwrap(), &unit()).unwrap()));
        assert!((m - 9.0).abs() / 9.0 < 0.05, "mean {m}");
    }

    #[test]
    fn zf_unequal_power_monte_carlo() {
        let profile = PowerProfile::new(0.1, 1.0, 0.5).unwrap();
        let model = ChannelModel::new(500, 50, None, link_gains(50, &profile).unwrap()).unwrap();
        let m = mean((0..300).map(|t| zf_snr(&model.sample(RngStream::new(2, t)).unwrap().g, &unit()).unwrap()));
        let limit = zf_snr_limit(&unit(), limiting_moments(&profile).mean_inv_beta).unwrap();
        // mean_inv_beta is 9 / ln 10 for this profile
        assert!((limit - std::f64::consts::LN_10).abs() < 1e-12, "{limit}");
        assert!((m - limit).abs() / limit < 0.05, "mean {m}, limit {limit}");
    }

    #[test]
    fn zf_limit_values() {
        assert_eq!(zf_snr_limit(&unit(), 1.0).unwrap(), 9.0);
        assert_eq!(zf_snr_limit(&SystemParams::new(1.0, 2.0).unwrap(), 1.0).unwrap(), 1.0);
        assert!((zf_snr_limit(&unit(), 3.9087).unwrap() - 9.0 / 3.9087).abs() < 1e-15);
        assert!(zf_snr_limit(&SystemParams::new(1.0, 1.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn mf_gamma_cases() {
        assert!((mf_gamma(&orthonormal_columns(7, 3, 4)).unwrap() - 1.0).abs() < 1e-12);
        assert!(mf_gamma(&ComplexMatrix::zeros(3, 2)).is_err());
        let ratio =
            mean((0..200).map(|t| mf_gamma(&sample_iid(2000, 4, RngStream::new(3, t)).unwrap()).unwrap() / 2000.0));
        assert!((ratio - 1.0).abs() < 0.01);
    }

    #[test]
    fn mf_gamma_tracks_mean_gain() {
        let profile = PowerProfile::new(0.1, 1.0, 0.5).unwrap();
        let gains = link_gains(8, &profile).unwrap();
        let model = ChannelModel::new(32, 8, None, gains.clone()).unwrap();
        let ratio = mean((0..4000).map(|t| mf_gamma(&model.sample(RngStream::new(4, t)).unwrap().g).unwrap() / 32.0));
        assert!(
            (ratio - gains.mean()).abs() / gains.mean() < 0.01,
            "{ratio} vs {}",
            gains.mean()
        );
    }

    #[test]
    fn mf_single_user() {
        let g = random_complex(5, 1, 9);
        let p = SystemParams::new(3.0, 5.0).unwrap();
        let s = mf_sinr(&g, &p).unwrap();
        assert!((s[0] - 3.0 * g.frobenius_norm_sq()).abs() < 1e-12 * s[0]);
    }

    #[test]
    fn mf_equal_power_monte_carlo() {
        let m = mean((0..300).map(|t| {
            let s = mf_sinr(&sample_iid(500, 50, RngStream::new(5, t)).unwrap(), &unit()).unwrap();
            s.iter().sum::<f64>() / 50.0
        }));
        assert!((m - 5.0).abs() / 5.0 < 0.1, "mean {m}");
    }

    #[test]
    fn mf_unequal_power_strong_user() {
        // User 3 of K = 50 sits at beta = 10^-0.05, the same gain as user 1 of K = 10.
        let profile = PowerProfile::new(0.1, 1.0, 0.5).unwrap();
        let gains = link_gains(50, &profile).unwrap();
        assert!((gains.values()[2] - 10f64.powf(-0.05)).abs() < 1e-15);
        let lim = limiting_moments(&profile);
        let limit = mf_sinr_limit(&unit(), gains.values()[2], lim.mean_beta).unwrap();
        assert!((limit - 10.75).abs() < 0.01, "limit {limit}");
        let model = ChannelModel::new(500, 50, None, gains).unwrap();
        let m = mean((0..300).map(|t| mf_sinr(&model.sample(RngStream::new(6, t)).unwrap().g, &unit()).unwrap()[2]));
        assert!((m - limit).abs() / limit < 0.1, "mean {m}, limit {limit}");
    }

    #[test]
    fn mf_limit_values() {
        assert_eq!(mf_sinr_limit(&unit(), 1.0, 1.0).unwrap(), 5.0);
        let huge = SystemParams::new(1e12, 10.0).unwrap();
        assert!((mf_sinr_limit(&huge, 1.0, 1.0).unwrap() - 10.0).abs() < 1e-9);
        assert!((mf_sinr_limit(&unit(), 0.8913, 0.39087).unwrap() - 10.75).abs() < 0.01);
        assert!(mf_sinr_limit(&unit(), 0.0, 1.0).is_err());
    }

    #[test]
    fn zf_limit_exceeds_mf_limit() {
        for rho in [0.1, 1.0, 10.0] {
            for alpha in [2.0, 5.0, 10.0, 100.0] {
                let p = SystemParams::new(rho, alpha).unwrap();
                let zf = zf_snr_limit(&p, 1.0).unwrap();
                let mf = mf_sinr_limit(&p, 1.0, 1.0).unwrap();
                assert_eq!(zf > mf, rho * (alpha - 1.0) * (rho + 1.0) > rho * alpha);
            }
        }
    }

    #[test]
    fn unit_gains_match_equal_power_path_bitwise() {
        let h = sample_iid(30, 5, RngStream::new(12, 0)).unwrap();
        let ones = crate::channel::assemble_g(&h, &LinkGains::equal(5)).unwrap();
        assert_eq!(zf_snr(&ones, &unit()).unwrap(), zf_snr(&h, &unit()).unwrap());
        assert_eq!(mf_sinr(&ones, &unit()).unwrap(), mf_sinr(&h, &unit()).unwrap());
        let gram = gram_normalized(&h, 1.0).unwrap();
        let scaled = gram.diagonal_congruence(&[1.0; 5]).unwrap();
        assert_eq!(
            evaluate_precoders(&scaled, 1.0).unwrap(),
            evaluate_precoders(&gram, 1.0).unwrap()
        );
    }

    #[test]
    fn gram_route_matches_channel_route() {
        let gains = LinkGains::from_values(vec![1.0, 0.5, 0.2, 0.1]).unwrap();
        let h = sample_iid(20, 4, RngStream::new(13, 0)).unwrap();
        let g = crate::channel::assemble_g(&h, &gains).unwrap();
        let via_h = gram_normalized(&h, 1.0)
            .unwrap()
            .diagonal_congruence(&gains.sqrt())
            .unwrap();
        let r = evaluate_precoders(&via_h, 1.0).unwrap();
        let zf = zf_snr(&g, &unit()).unwrap();
        assert!((r.zf_snr - zf).abs() < 1e-12 * zf);
        for (a, b) in r.mf_sinr.iter().zip(mf_sinr(&g, &unit()).unwrap()) {
            assert!((a - b).abs() < 1e-12 * b);
        }
        assert!((r.mf_gamma - mf_gamma(&g).unwrap()).abs() < 1e-12 * r.mf_gamma);
        assert!((r.zf_gamma - zf_gamma(&g).unwrap()).abs() < 1e-12 * r.zf_gamma);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn zf_invariant_under_row_unitary(k in 1usize..5, extra in 1usize..6, seed in any::<u64>()) {
            let m = k + extra;
            let g = random_complex(m, k, seed);
            let u = random_unitary(m, seed ^ 0xABCD);
            let a = zf_snr(&g, &unit()).unwrap();
            let b = zf_snr(&u.matmul(&g).unwrap(), &unit()).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a);
        }

        #[test]
        fn mf_sinr_bounded_by_interference_free_value(k in 1usize..8, seed in any::<u64>(), rho in 0.01f64..100.0) {
            let g = random_complex(3 * k, k, seed);
            let p = SystemParams::new(rho, 3.0).unwrap();
            let s = mf_sinr(&g, &p).unwrap();
            let kg = g.frobenius_norm_sq();
            for (i, v) in s.iter().enumerate() {
                let col: f64 = g.column(i).iter().map(|z: &C64| z.norm_sqr()).sum();
                prop_assert!(*v > 0.0 && *v <= rho * col * col / kg * (1.0 + 1e-12));
            }
        }
    }
}
