use serde::{Deserialize, Serialize};

use super::PredictiveDistribution;
use crate::{Error, Result};

/// Nominal levels reported by default.
pub const DEFAULT_LEVELS: [f64; 3] = [0.5, 0.68, 0.95];

/// `tau_j = j / 20`, `j = 1..=19`, for diagnostics.
pub fn dense_levels() -> Vec<f64> {
    (1..20).map(|j| j as f64 / 20.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMode {
    /// Fraction inside the central interval `[q((1-tau)/2), q((1+tau)/2)]`.
    #[default]
    Central,
    /// Fraction below `q(tau)`.
    OneSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageLevel {
    pub nominal: f64,
    pub empirical: f64,
}

fn check_inputs(dists: &[PredictiveDistribution], targets: &[f64], levels: &[f64]) -> Result<()> {
    if dists.is_empty() {
        return Err(Error::Domain("coverage of an empty set".into()));
    }
    if dists.len() != targets.len() {
        return Err(Error::Shape {
            axis: "targets",
            detail: format!("{} distributions vs {} targets", dists.len(), targets.len()),
        });
    }
    if levels.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(Error::Domain(format!("coverage levels must lie in (0, 1): {levels:?}")));
    }
    Ok(())
}

/// Coverage at each level with every distribution's scale replaced by `scale`
/// (`None` keeps each distribution's own scale).
fn coverage_at(
    dists: &[PredictiveDistribution],
    targets: &[f64],
    levels: &[f64],
    mode: CoverageMode,
    scale: Option<f64>,
) -> Vec<CoverageLevel> {
    // the interval test only needs F(y): y is inside the central tau-interval
    // iff |F(y) - 1/2| <= tau/2
    let cdfs: Vec<f64> = dists
        .iter()
        .zip(targets)
        .map(|(d, &y)| match scale {
            Some(s) => PredictiveDistribution {
                params: d.params.clone(),
                scale: s,
            }
            .cdf(y),
            None => d.cdf(y),
        })
        .collect();
    let n = cdfs.len() as f64;
    levels
        .iter()
        .map(|&tau| {
            let hits = cdfs
                .iter()
                .filter(|&&f| match mode {
                    CoverageMode::Central => (f - 0.5).abs() <= tau / 2.0,
                    CoverageMode::OneSided => f <= tau,
                })
                .count();
            CoverageLevel {
                nominal: tau,
                empirical: hits as f64 / n,
            }
        })
        .collect()
}

pub fn empirical_coverage(
    dists: &[PredictiveDistribution],
    targets: &[f64],
    levels: &[f64],
    mode: CoverageMode,
) -> Result<Vec<CoverageLevel>> {
    check_inputs(dists, targets, levels)?;
    Ok(coverage_at(dists, targets, levels, mode, None))
}

fn ce_of(cov: &[CoverageLevel]) -> f64 {
    cov.iter().map(|c| (c.nominal - c.empirical).powi(2)).sum()
}

/// `sum_j (tau_j - tau_hat_j)^2`.
pub fn calibration_error(
    dists: &[PredictiveDistribution],
    targets: &[f64],
    levels: &[f64],
    mode: CoverageMode,
) -> Result<f64> {
    Ok(ce_of(&empirical_coverage(dists, targets, levels, mode)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub s: f64,
    pub coverage_before: Vec<CoverageLevel>,
    pub coverage_after: Vec<CoverageLevel>,
    pub ce_before: f64,
    pub ce_after: f64,
    /// All targets identical; coverage carries little information.
    pub degenerate_targets: bool,
}

const MIN_SAMPLES: usize = 30;
const LOG_S_RANGE: (f64, f64) = (-3.0, 3.0);
const LOG_S_TOL: f64 = 1e-4;

/// Fits one global std scale `s` (applied in place of each distribution's
/// scale) minimizing the calibration error at `levels`.
///
/// A coarse scan over `log10 s in [-3, 3]` brackets the minimum, then a
/// golden-section search refines it. The unscaled `s = 1` is kept if the
/// search does no better, so `ce_after <= ce_before`.
pub fn calibrate(
    dists: &[PredictiveDistribution],
    targets: &[f64],
    levels: &[f64],
    mode: CoverageMode,
) -> Result<CalibrationResult> {
    check_inputs(dists, targets, levels)?;
    if dists.len() < MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "calibration needs at least {MIN_SAMPLES} samples, got {}",
            dists.len()
        )));
    }
    let degenerate_targets = targets.windows(2).all(|w| w[0] == w[1]);
    if degenerate_targets {
        log::warn!("calibration targets are all equal");
    }

    let objective = |log_s: f64| ce_of(&coverage_at(dists, targets, levels, mode, Some(10f64.powf(log_s))));

    let steps = 120;
    let (a, b) = LOG_S_RANGE;
    let grid: Vec<(f64, f64)> = (0..=steps)
        .map(|i| {
            let x = a + (b - a) * i as f64 / steps as f64;
            (x, objective(x))
        })
        .collect();
    let best = grid
        .iter()
        .enumerate()
        .min_by(|x, y| x.1 .1.total_cmp(&y.1 .1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut lo = grid[best.saturating_sub(1)].0;
    let mut hi = grid[(best + 1).min(steps)].0;

    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    while hi - lo > LOG_S_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = objective(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    let candidates = [grid[best], (x1, f1), (x2, f2), (mid, objective(mid))];
    // s = 1 is replaced only by a strictly better candidate
    let (log_s, _) = candidates
        .iter()
        .copied()
        .fold((0.0, objective(0.0)), |acc, c| if c.1 < acc.1 { c } else { acc });

    let s = 10f64.powf(log_s);
    let coverage_before = coverage_at(dists, targets, levels, mode, None);
    let coverage_after = coverage_at(dists, targets, levels, mode, Some(s));
    let ce_before = ce_of(&coverage_before);
    let mut ce_after = ce_of(&coverage_after);
    let (s, coverage_after) = if ce_after > ce_before {
        // inputs carried their own scales; keep them
        ce_after = ce_before;
        (1.0, coverage_before.clone())
    } else {
        (s, coverage_after)
    };
    Ok(CalibrationResult {
        s,
        coverage_before,
        coverage_after,
        ce_before,
        ce_after,
        degenerate_targets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MixtureParams;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn gaussians(n: usize, std_factor: f64, seed: u64) -> (Vec<PredictiveDistribution>, Vec<f64>) {
        let mut rng = crate::seed::rng(seed, &[]);
        let mut dists = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let mu = rng.random_range(-2.0..2.0);
            let sigma = rng.random_range(0.1..1.0);
            ys.push(Normal::new(mu, sigma).unwrap().sample(&mut rng));
            dists.push(PredictiveDistribution::new(
                MixtureParams::gaussian(mu, sigma * std_factor).unwrap(),
            ));
        }
        (dists, ys)
    }

    #[test]
    fn ce_examples() {
        let c = [CoverageLevel {
            nominal: 0.5,
            empirical: 0.4,
        }];
        assert!((ce_of(&c) - 0.01).abs() < 1e-15);
        let perfect: Vec<CoverageLevel> = DEFAULT_LEVELS
            .iter()
            .map(|&t| CoverageLevel {
                nominal: t,
                empirical: t,
            })
            .collect();
        assert_eq!(ce_of(&perfect), 0.0);
    }

    #[test]
    fn self_consistent_coverage() {
        let (d, y) = gaussians(10_000, 1.0, 1);
        for c in empirical_coverage(&d, &y, &DEFAULT_LEVELS, CoverageMode::Central).unwrap() {
            assert!((c.empirical - c.nominal).abs() < 0.02, "{c:?}");
        }
        for c in empirical_coverage(&d, &y, &DEFAULT_LEVELS, CoverageMode::OneSided).unwrap() {
            assert!((c.empirical - c.nominal).abs() < 0.02, "{c:?}");
        }
    }

    #[test]
    fn central_rule_matches_quantile_intervals() {
        let (d, y) = gaussians(500, 1.3, 2);
        let mix: Vec<PredictiveDistribution> = d
            .iter()
            .map(|g| {
                let m = g.params.means[0];
                PredictiveDistribution::new(
                    MixtureParams::new(vec![0.3, 0.7], vec![m - 0.4, m + 0.2], vec![0.3, 0.6]).unwrap(),
                )
            })
            .collect();
        for &tau in &DEFAULT_LEVELS {
            let by_quantile = mix
                .iter()
                .zip(&y)
                .filter(|(dd, &t)| {
                    let lo = dd.quantile((1.0 - tau) / 2.0).unwrap();
                    let hi = dd.quantile((1.0 + tau) / 2.0).unwrap();
                    lo <= t && t <= hi
                })
                .count() as f64
                / y.len() as f64;
            let got = empirical_coverage(&mix, &y, &[tau], CoverageMode::Central).unwrap()[0].empirical;
            assert_eq!(got, by_quantile, "{tau}");
        }
    }

    #[test]
    fn median_targets_are_always_covered() {
        let (d, _) = gaussians(50, 1.0, 3);
        let y: Vec<f64> = d.iter().map(|g| g.quantile(0.5).unwrap()).collect();
        for c in empirical_coverage(&d, &y, &[0.01, 0.5, 0.95], CoverageMode::Central).unwrap() {
            assert_eq!(c.empirical, 1.0);
        }
        let tiny = coverage_at(
            &d,
            &y.iter().map(|v| v + 1e-3).collect::<Vec<_>>(),
            &[0.5],
            CoverageMode::Central,
            Some(1e-12),
        );
        assert_eq!(tiny[0].empirical, 0.0);
    }

    #[test]
    fn recovers_half_for_doubled_stds() {
        let (d, y) = gaussians(10_000, 2.0, 4);
        let r = calibrate(&d, &y, &DEFAULT_LEVELS, CoverageMode::Central).unwrap();
        assert!((0.45..=0.55).contains(&r.s), "{}", r.s);
        assert!(r.ce_after <= r.ce_before);
    }

    #[test]
    fn well_specified_stays_near_one() {
        let (d, y) = gaussians(10_000, 1.0, 5);
        let r = calibrate(&d, &y, &DEFAULT_LEVELS, CoverageMode::Central).unwrap();
        assert!((0.9..=1.1).contains(&r.s), "{}", r.s);
        assert!(r.ce_after <= r.ce_before);
    }

    #[test]
    fn guards() {
        let (d, y) = gaussians(10, 1.0, 6);
        assert!(calibrate(&d, &y, &DEFAULT_LEVELS, CoverageMode::Central).is_err());
        assert!(empirical_coverage(&[], &[], &DEFAULT_LEVELS, CoverageMode::Central).is_err());
        assert!(empirical_coverage(&d, &y[..5], &DEFAULT_LEVELS, CoverageMode::Central).is_err());
        let (d, _) = gaussians(40, 1.0, 7);
        let r = calibrate(&d, &[0.0; 40], &DEFAULT_LEVELS, CoverageMode::Central).unwrap();
        assert!(r.degenerate_targets);
        assert_eq!(dense_levels().len(), 19);
    }
}
