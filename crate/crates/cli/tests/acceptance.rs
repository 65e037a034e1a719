//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the verdict lines are always printed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use mimo_converge::channel::{assemble_g, sample_iid, CorrelationSpec, RngStream};
use mimo_converge::montecarlo::{loglog_slope, run_scenario, PointResult, Scenario, StatSelection, Statistic, Sweep};
use mimo_converge::numerics::{gram_normalized, inverse_trace};
use mimo_converge::power::{limiting_moments, link_gains, LinkGains, PowerProfile};
use mimo_converge::C64;
use mimo_converge_cli::{emit, parse_config, run, Preset};

const ZF: StatSelection = StatSelection {
    zf: true,
    ..StatSelection::NONE
};
const MF: StatSelection = StatSelection {
    mf: true,
    ..StatSelection::NONE
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(x: f64, target: f64) -> f64 {
    (x - target).abs() / target.abs()
}

fn unequal() -> PowerProfile {
    PowerProfile::new(0.1, 1.0, 0.5).unwrap()
}

fn single_point(sweep: Sweep, stats: StatSelection, trials: u64, seed: u64) -> Scenario {
    Scenario {
        trials,
        seed,
        stats,
        ..Scenario::new(sweep)
    }
}

fn fixed_k(k: usize, m: &[usize]) -> Sweep {
    Sweep::FixedK {
        k,
        m_values: m.to_vec(),
    }
}

fn only_point(s: &Scenario) -> PointResult {
    let mut r = run_scenario(s).unwrap();
    assert_eq!(r.points.len(), 1);
    r.points.remove(0)
}

/// Midpoint sums of `beta` and `1/beta` over `k` equally spaced users.
fn midpoint_moments(lo: f64, hi: f64, k: usize) -> (f64, f64) {
    let (mut sum, mut sum_inv) = (0.0, 0.0);
    for j in 0..k {
        let x = (j as f64 + 0.5) / k as f64;
        let b = hi * (lo / hi).powf(x);
        sum += b;
        sum_inv += 1.0 / b;
    }
    (sum / k as f64, sum_inv / k as f64)
}

fn zf_equal_power() -> Outcome {
    let t0 = Instant::now();
    let p = only_point(&single_point(fixed_k(10, &[100]), ZF, 1000, 101));
    let elapsed = t0.elapsed();
    let mean = p.mean(Statistic::ZfSnr).unwrap();
    let gap = rel(mean, 9.0);
    check(
        gap < 0.05 && elapsed < Duration::from_secs(10),
        format!(
            "mean ZF SNR {mean:.4} vs 9.0 (gap {:.2}%), {:.2} s",
            100.0 * gap,
            elapsed.as_secs_f64()
        ),
    )
}

fn mf_equal_power() -> Outcome {
    let t0 = Instant::now();
    let s = single_point(
        Sweep::FixedAlpha {
            alpha: 10.0,
            k_values: vec![10, 50],
        },
        MF,
        1000,
        102,
    );
    let r = run_scenario(&s).unwrap();
    let elapsed = t0.elapsed();
    let target = 1.0 * 10.0 / (1.0 + 1.0);
    let gap_at = |k: usize| {
        let p = r.point(10 * k, k).unwrap();
        let mean = p.mean(Statistic::MfSinrMean).unwrap();
        (mean, rel(mean, target))
    };
    let (m10, g10) = gap_at(10);
    let (m50, g50) = gap_at(50);
    let limit = r
        .point(500, 50)
        .unwrap()
        .get(Statistic::MfSinrMean)
        .unwrap()
        .limit
        .unwrap();
    check(
        g50 < 0.10 && g10 > g50 && (limit - target).abs() < 1e-12 && elapsed < Duration::from_secs(60),
        format!(
            "mean MF SINR {m50:.4} at K=50 vs {target} (gap {:.2}%); K=10 mean {m10:.4} (gap {:.2}%); {:.2} s",
            100.0 * g50,
            100.0 * g10,
            elapsed.as_secs_f64()
        ),
    )
}

fn zf_unequal_power() -> Outcome {
    let (_, oracle_inv) = midpoint_moments(0.1, 1.0, 1_000_000);
    let moments = limiting_moments(&unequal());
    let target = 9.0 / oracle_inv;
    let s = Scenario {
        profile: Some(unequal()),
        ..single_point(fixed_k(50, &[500]), ZF, 1000, 103)
    };
    let p = only_point(&s);
    let mean = p.mean(Statistic::ZfSnr).unwrap();
    let limit = p.get(Statistic::ZfSnr).unwrap().limit.unwrap();
    let gap = rel(mean, target);
    check(
        rel(moments.mean_inv_beta, oracle_inv) < 1e-9
            && (oracle_inv - 3.9087).abs() < 1e-4
            && rel(limit, target) < 1e-9
            && gap < 0.05,
        format!(
            "mean_inv_beta {:.6} (oracle {oracle_inv:.6}); mean ZF SNR {mean:.4} vs {target:.4} (gap {:.2}%)",
            moments.mean_inv_beta,
            100.0 * gap
        ),
    )
}

fn mf_unequal_power() -> Outcome {
    let (oracle_mean, _) = midpoint_moments(0.1, 1.0, 1_000_000);
    let k = 50;
    let s = Scenario {
        profile: Some(unequal()),
        ..single_point(fixed_k(k, &[500]), MF, 1000, 104)
    };
    let p = only_point(&s);
    let gains = link_gains(k, &unequal()).unwrap();
    let (rho_f, alpha) = (1.0, 10.0);
    let mut worst = (0, 0.0);
    let mut limits_agree = true;
    for (i, &b) in gains.values().iter().enumerate() {
        let target = rho_f * alpha * b * b / (oracle_mean + rho_f * b * oracle_mean);
        let summary = p.get(Statistic::MfSinrUser(i)).unwrap();
        limits_agree &= rel(summary.limit.unwrap(), target) < 1e-9;
        let gap = rel(summary.mean, target);
        if gap > worst.1 {
            worst = (i, gap);
        }
    }
    check(
        limits_agree && worst.1 < 0.10,
        format!(
            "worst per-user gap {:.2}% (user {} of {k})",
            100.0 * worst.1,
            worst.0 + 1
        ),
    )
}

fn inverse_wishart() -> Outcome {
    let (k, m, trials) = (10, 40, 10_000u64);
    let mut lines = Vec::new();
    let mut ok = true;
    for (label, gains) in [
        ("equal", LinkGains::equal(k)),
        ("unequal", link_gains(k, &unequal()).unwrap()),
    ] {
        let mut sum = 0.0;
        for t in 0..trials {
            let h = sample_iid(m, k, RngStream::new(105, t)).unwrap();
            let g = assemble_g(&h, &gains).unwrap();
            sum += inverse_trace(&gram_normalized(&g, 1.0).unwrap()).unwrap();
        }
        let mean = sum / trials as f64;
        let target = gains.values().iter().map(|b| 1.0 / b).sum::<f64>() / (m - k) as f64;
        let gap = rel(mean, target);
        ok &= gap < 0.02;
        lines.push(format!("{label}: {mean:.5} vs {target:.5} (gap {:.2}%)", 100.0 * gap));
    }
    check(ok, lines.join("; "))
}

fn variance_law() -> Outcome {
    let (m, trials) = (64, 100_000u64);
    let (mut diag, mut off) = (Vec::new(), Vec::new());
    for t in 0..trials {
        let h = sample_iid(m, 2, RngStream::new(106, t)).unwrap();
        let w = gram_normalized(&h, m as f64).unwrap();
        let w = w.as_nalgebra();
        diag.push(w[(0, 0)].re);
        diag.push(w[(1, 1)].re);
        off.push(w[(0, 1)]);
    }
    let n = diag.len() as f64;
    let mu = diag.iter().sum::<f64>() / n;
    let var_diag = diag.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0);
    let n = off.len() as f64;
    let mu = off.iter().sum::<C64>() / n;
    let var_off = off.iter().map(|z| (z - mu).norm_sqr()).sum::<f64>() / (n - 1.0);
    let target = 1.0 / m as f64;
    check(
        rel(var_diag, target) < 0.10 && rel(var_off, target) < 0.10,
        format!("diagonal {var_diag:.6}, off-diagonal {var_off:.6} vs {target:.6}"),
    )
}

fn convergence_anchors() -> Outcome {
    let metrics = StatSelection {
        mad: true,
        lambda_ratio: true,
        ..StatSelection::NONE
    };
    let k50 = run_scenario(&single_point(fixed_k(50, &[100, 500]), metrics, 1000, 107)).unwrap();
    let k10 = run_scenario(&single_point(fixed_k(10, &[100]), metrics, 1000, 108)).unwrap();
    let at500 = k50.point(500, 50).unwrap();
    let mad = at500.mean(Statistic::Mad).unwrap();
    let lam = at500.mean(Statistic::LambdaRatio).unwrap();
    let lam50 = k50.point(100, 50).unwrap().mean(Statistic::LambdaRatio).unwrap();
    let lam10 = k10.point(100, 10).unwrap().mean(Statistic::LambdaRatio).unwrap();
    check(
        mad < 0.05 && (3.0..=5.0).contains(&lam) && lam50 > 8.0 * lam10,
        format!(
            "K=50 M=500: MAD {mad:.4}, lambda ratio {lam:.3}; M=100: K=50/K=10 lambda ratio {:.2}",
            lam50 / lam10
        ),
    )
}

fn dominance_scaling() -> Outcome {
    let mut slopes = Vec::new();
    for s in Preset::Fig3.scenarios(200, 109) {
        let r = run_scenario(&s).unwrap();
        let ys: Vec<f64> = r
            .points
            .iter()
            .map(|p| p.mean(Statistic::DiagonalDominance).unwrap())
            .collect();
        let xs: Vec<f64> = match s.sweep {
            Sweep::FixedK { .. } => r.points.iter().map(|p| p.m as f64).collect(),
            Sweep::FixedAlpha { .. } => r.points.iter().map(|p| p.k as f64).collect(),
        };
        slopes.push(loglog_slope(&xs, &ys));
    }
    check(
        slopes.len() == 2 && (slopes[0] - 0.5).abs() <= 0.1 && (slopes[1] + 0.5).abs() <= 0.1,
        format!(
            "slope vs M at K=10 {:+.3}; slope vs K at alpha=10 {:+.3}",
            slopes[0], slopes[1]
        ),
    )
}

fn correlation_penalty() -> Outcome {
    let stats = StatSelection::PRECODERS;
    let means: Vec<(f64, f64)> = [None, Some(0.5), Some(0.9)]
        .into_iter()
        .map(|rho| {
            let s = Scenario {
                correlation: rho.map(|r| CorrelationSpec::with_rho(r).unwrap()),
                ..single_point(fixed_k(10, &[100]), stats, 1000, 110)
            };
            let p = only_point(&s);
            (
                p.mean(Statistic::ZfSnr).unwrap(),
                p.mean(Statistic::MfSinrMean).unwrap(),
            )
        })
        .collect();
    let ordered = |f: fn(&(f64, f64)) -> f64| f(&means[0]) > f(&means[1]) && f(&means[1]) > f(&means[2]);
    let drop = |f: fn(&(f64, f64)) -> f64| (f(&means[0]) - f(&means[1])) / f(&means[0]);
    let zf = |x: &(f64, f64)| x.0;
    let mf = |x: &(f64, f64)| x.1;
    check(
        ordered(zf) && ordered(mf) && drop(zf) <= 0.15 && drop(mf) <= 0.15,
        format!(
            "ZF iid/0.5/0.9 = {:.3}/{:.3}/{:.3} (0.5 drop {:.1}%); MF = {:.3}/{:.3}/{:.3} (0.5 drop {:.1}%)",
            means[0].0,
            means[1].0,
            means[2].0,
            100.0 * drop(zf),
            means[0].1,
            means[1].1,
            means[2].1,
            100.0 * drop(mf)
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let n_workers = std::thread::available_parallelism().map_or(4, |n| n.get().max(4));
    let mut mismatched = Vec::new();
    for preset in Preset::ALL {
        let mut outputs = Vec::new();
        for workers in [1, n_workers] {
            for rep in 0..2 {
                let path = dir.path().join(format!("{}-{workers}-{rep}.csv", preset.name()));
                let argv = [
                    "mimo-converge".to_string(),
                    format!("--preset={}", preset.name()),
                    "--trials=3".into(),
                    "--seed=2024".into(),
                    format!("--workers={workers}"),
                    format!("--output={}", path.display()),
                ];
                let cfg = parse_config(argv).unwrap();
                emit(&run(&cfg).unwrap(), &cfg).unwrap();
                outputs.push(std::fs::read(&path).unwrap());
            }
        }
        if outputs.iter().any(|o| o != &outputs[0]) || outputs[0].is_empty() {
            mismatched.push(preset.name());
        }
    }
    check(
        mismatched.is_empty(),
        format!("7 presets x {{1, {n_workers}}} workers x 2 runs; differing: {mismatched:?}"),
    )
}

fn eta_invariance() -> Outcome {
    let mut ok = true;
    for k in [1, 2, 10, 50, 100, 1000] {
        let closed_form: Vec<u64> = (1..=k)
            .map(|j| (1.0 * (0.1f64 / 1.0).powf((2 * j - 1) as f64 / (2 * k) as f64)).to_bits())
            .collect();
        for eta in [0.3, 0.5, 0.9] {
            let bits: Vec<u64> = link_gains(k, &PowerProfile::new(0.1, 1.0, eta).unwrap())
                .unwrap()
                .values()
                .iter()
                .map(|b| b.to_bits())
                .collect();
            ok &= bits == closed_form;
        }
    }
    check(ok, "K in {1, 2, 10, 50, 100, 1000}, eta in {0.3, 0.5, 0.9}".into())
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("ZF equal-power limit", zf_equal_power),
        ("MF equal-power limit", mf_equal_power),
        ("ZF unequal-power limit", zf_unequal_power),
        ("MF unequal-power limit", mf_unequal_power),
        ("inverse-Wishart trace", inverse_wishart),
        ("Gram variance law", variance_law),
        ("convergence anchors", convergence_anchors),
        ("diagonal-dominance scaling", dominance_scaling),
        ("correlation penalty ordering", correlation_penalty),
        ("determinism", determinism),
        ("eta invariance", eta_invariance),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name}: {detail}", i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
