//! Throughput modeling on profiled hardware: the fitted τ(N) = c·N^(−β)
//! law, log-log interpolation between measured points, and the bridge from
//! wall-clock budget to tokens, epochs, and FLOPs.

use crate::domain::ModelConfig;
use crate::powerlaw;
use serde::ser::SerializeStruct;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HardwareError {
    #[error("hardware profile needs at least 2 points, found {found}")]
    InsufficientPoints { found: usize },
    #[error("profile point ({params_m}, {tokens_per_sec}) must be positive")]
    NonPositivePoint { params_m: f64, tokens_per_sec: f64 },
    #[error("tokens_per_sec must strictly decrease as params_m grows")]
    NotMonotone,
    #[error("duplicate params_m {0} in profile points")]
    DuplicateParams(f64),
    #[error("params_m must be positive, got {0}")]
    NonPositiveParams(f64),
    #[error("budget must be non-negative, got {0}")]
    NegativeBudget(f64),
    #[error("{params_m}M is outside the measured range and the profile is unfitted")]
    Unfitted { params_m: f64 },
    #[error("profile has no fitted throughput law")]
    NoLaw,
    #[error("dataset_tokens must be positive")]
    ZeroDataset,
}

/// Fitted throughput power law τ(N) = c·N^(−beta), with log-space fit
/// quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThroughputLaw {
    pub c: f64,
    pub beta: f64,
    pub r2: f64,
    pub stderr_beta: f64,
}

/// A named set of measured (params_m, tokens_per_sec) points, optionally
/// with a fitted law. Immutable once constructed; fitting returns a copy.
#[derive(Debug, Clone, PartialEq)]
pub struct HardwareProfile {
    pub name: String,
    pub vram_gb: Option<f64>,
    points: Vec<(f64, f64)>,
    pub law: Option<ThroughputLaw>,
}

impl HardwareProfile {
    /// Build a profile from raw points (sorted internally by params_m).
    pub fn new(
        name: &str,
        mut points: Vec<(f64, f64)>,
        vram_gb: Option<f64>,
    ) -> Result<Self, HardwareError> {
        if points.len() < 2 {
            return Err(HardwareError::InsufficientPoints {
                found: points.len(),
            });
        }
        for &(n, t) in &points {
            if !(n > 0.0 && t > 0.0 && n.is_finite() && t.is_finite()) {
                return Err(HardwareError::NonPositivePoint {
                    params_m: n,
                    tokens_per_sec: t,
                });
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in points.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(HardwareError::DuplicateParams(pair[0].0));
            }
            if pair[1].1 >= pair[0].1 {
                return Err(HardwareError::NotMonotone);
            }
        }
        Ok(HardwareProfile {
            name: name.to_owned(),
            vram_gb,
            points,
            law: None,
        })
    }

    /// Build from a config table, taking rows with measured throughput.
    /// Rows whose parameter count is only approximate are skipped unless
    /// `include_inexact` is set; they remain usable for interpolation
    /// queries but would distort the fitted law.
    pub fn from_configs(
        name: &str,
        configs: &[ModelConfig],
        include_inexact: bool,
        vram_gb: Option<f64>,
    ) -> Result<Self, HardwareError> {
        let points: Vec<(f64, f64)> = configs
            .iter()
            .filter(|c| c.params_exact || include_inexact)
            .filter_map(|c| c.tokens_per_sec.map(|t| (c.params_m, t)))
            .collect();
        HardwareProfile::new(name, points, vram_gb)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn min_params_m(&self) -> f64 {
        self.points[0].0
    }

    pub fn max_params_m(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }
}

impl Serialize for HardwareProfile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let n = 2 + usize::from(self.vram_gb.is_some());
        let mut st = s.serialize_struct("HardwareProfile", n)?;
        st.serialize_field("name", &self.name)?;
        if let Some(v) = self.vram_gb {
            st.serialize_field("vram_gb", &v)?;
        }
        st.serialize_field("points", &self.points)?;
        st.end()
    }
}

/// The built-in single-GPU profile: the seven exactly measured
/// (params, throughput) rows of the reference config table.
pub fn rtx4090() -> HardwareProfile {
    let points = vec![
        (50.3, 428_000.0),
        (85.9, 252_000.0),
        (135.3, 160_000.0),
        (200.9, 110_000.0),
        (285.2, 78_000.0),
        (519.0, 36_000.0),
        (855.6, 20_000.0),
    ];
    HardwareProfile::new("rtx4090", points, Some(24.0)).expect("builtin profile is valid")
}

/// Fit τ(N) = c·N^(−beta) by log-log least squares over the profile's
/// points and return a copy carrying the law.
pub fn fit_throughput(profile: &HardwareProfile) -> Result<HardwareProfile, HardwareError> {
    let fit = powerlaw::fit_power_law(profile.points())
        .map_err(|_| HardwareError::InsufficientPoints {
            found: profile.points().len(),
        })?;
    let mut fitted = profile.clone();
    fitted.law = Some(ThroughputLaw {
        c: fit.coeff_a,
        beta: -fit.exponent_alpha,
        r2: fit.r2,
        stderr_beta: fit.stderr_alpha,
    });
    Ok(fitted)
}

/// A throughput estimate, flagged when it comes from the fitted law rather
/// than interpolation between measured points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThroughputEstimate {
    pub tokens_per_sec: f64,
    pub extrapolated: bool,
}

/// Tokens/second at an arbitrary size. Inside the measured range this
/// interpolates log-log between bracketing points (exact at measured
/// points); outside it falls back to the fitted law, flagged as
/// extrapolated. Unfitted profiles cannot answer out-of-range queries.
pub fn throughput_at(
    profile: &HardwareProfile,
    params_m: f64,
) -> Result<ThroughputEstimate, HardwareError> {
    if !(params_m > 0.0) || !params_m.is_finite() {
        return Err(HardwareError::NonPositiveParams(params_m));
    }
    let points = profile.points();
    if params_m >= profile.min_params_m() && params_m <= profile.max_params_m() {
        if let Some(&(_, t)) = points.iter().find(|(n, _)| *n == params_m) {
            return Ok(ThroughputEstimate {
                tokens_per_sec: t,
                extrapolated: false,
            });
        }
        let (left, right) = points
            .windows(2)
            .map(|w| (w[0], w[1]))
            .find(|((n0, _), (n1, _))| *n0 < params_m && params_m < *n1)
            .expect("in-range query brackets a point pair");
        let w = (params_m.ln() - left.0.ln()) / (right.0.ln() - left.0.ln());
        let tau = ((1.0 - w) * left.1.ln() + w * right.1.ln()).exp();
        return Ok(ThroughputEstimate {
            tokens_per_sec: tau,
            extrapolated: false,
        });
    }
    match &profile.law {
        Some(law) => Ok(ThroughputEstimate {
            tokens_per_sec: law.c * params_m.powf(-law.beta),
            extrapolated: true,
        }),
        None => Err(HardwareError::Unfitted { params_m }),
    }
}

/// Tokens processed by an N-million-parameter model in `budget_min`
/// minutes: τ(N) · budget_min · 60.
pub fn tokens_processed(
    profile: &HardwareProfile,
    params_m: f64,
    budget_min: f64,
) -> Result<f64, HardwareError> {
    if budget_min < 0.0 || !budget_min.is_finite() {
        return Err(HardwareError::NegativeBudget(budget_min));
    }
    let tau = throughput_at(profile, params_m)?;
    Ok(tau.tokens_per_sec * budget_min * 60.0)
}

/// Passes over the unique dataset: tokens_processed / dataset_tokens.
pub fn epochs(
    profile: &HardwareProfile,
    params_m: f64,
    budget_min: f64,
    dataset_tokens: u64,
) -> Result<f64, HardwareError> {
    if dataset_tokens == 0 {
        return Err(HardwareError::ZeroDataset);
    }
    Ok(tokens_processed(profile, params_m, budget_min)? / dataset_tokens as f64)
}

/// Training compute estimate: 6 · N · tokens, with N in raw parameters.
/// The factor 6 is the fixed forward+backward convention.
pub fn flops(
    profile: &HardwareProfile,
    params_m: f64,
    budget_min: f64,
) -> Result<f64, HardwareError> {
    Ok(6.0 * params_m * 1.0e6 * tokens_processed(profile, params_m, budget_min)?)
}

/// How compute scales with size at fixed wall-clock: C ∝ N^(1−beta).
pub fn compute_scaling_exponent(profile: &HardwareProfile) -> Result<f64, HardwareError> {
    profile
        .law
        .as_ref()
        .map(|law| 1.0 - law.beta)
        .ok_or(HardwareError::NoLaw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn builtin_profile_shape() {
        let p = rtx4090();
        assert_eq!(p.points().len(), 7);
        assert_eq!(p.vram_gb, Some(24.0));
        assert_eq!(p.min_params_m(), 50.3);
        assert_eq!(p.max_params_m(), 855.6);
    }

    #[test]
    fn fit_on_builtin_is_steeper_than_reference_claim() {
        let p = fit_throughput(&rtx4090()).unwrap();
        let law = p.law.unwrap();
        assert!(law.beta > 1.05 && law.beta < 1.11, "beta = {}", law.beta);
        assert!(law.r2 > 0.99);
    }

    #[test]
    fn synthetic_law_recovers_exactly() {
        let points: Vec<(f64, f64)> = [50.0, 100.0, 200.0, 400.0, 800.0]
            .iter()
            .map(|&n: &f64| (n, 1.0e6 * n.powf(-0.8)))
            .collect();
        let p = fit_throughput(&HardwareProfile::new("synth", points, None).unwrap()).unwrap();
        let law = p.law.unwrap();
        assert_relative_eq!(law.beta, 0.8, epsilon = 1e-9);
        assert_relative_eq!(law.c, 1.0e6, max_relative = 1e-9);
        assert_relative_eq!(compute_scaling_exponent(&p).unwrap(), 0.2, epsilon = 1e-9);
    }

    #[test]
    fn two_point_slope_is_closed_form() {
        let profile =
            HardwareProfile::new("pair", vec![(50.3, 428_000.0), (519.0, 36_000.0)], None)
                .unwrap();
        let law = fit_throughput(&profile).unwrap().law.unwrap();
        let expected = (428_000.0f64 / 36_000.0).ln() / (519.0f64 / 50.3).ln();
        assert_relative_eq!(law.beta, expected, epsilon = 1e-12);
        assert!((law.beta - 1.06).abs() < 0.01);
    }

    #[test]
    fn measured_points_are_returned_exactly() {
        let p = rtx4090();
        for &(n, t) in p.points() {
            let est = throughput_at(&p, n).unwrap();
            assert_eq!(est.tokens_per_sec, t);
            assert!(!est.extrapolated);
        }
    }

    #[test]
    fn interpolation_is_monotone_within_range() {
        let p = rtx4090();
        let mut last = f64::INFINITY;
        let mut n = 50.3;
        while n <= 855.6 {
            let est = throughput_at(&p, n).unwrap();
            assert!(est.tokens_per_sec < last);
            last = est.tokens_per_sec;
            n += 7.13;
        }
    }

    #[test]
    fn extrapolation_uses_law_and_is_flagged() {
        let unfitted = rtx4090();
        assert!(matches!(
            throughput_at(&unfitted, 1200.0),
            Err(HardwareError::Unfitted { .. })
        ));
        let fitted = fit_throughput(&unfitted).unwrap();
        let law = fitted.law.unwrap();
        let est = throughput_at(&fitted, 1200.0).unwrap();
        assert!(est.extrapolated);
        assert_eq!(est.tokens_per_sec, law.c * 1200.0f64.powf(-law.beta));
    }

    #[test]
    fn token_and_epoch_arithmetic() {
        let p = rtx4090();
        assert_eq!(tokens_processed(&p, 855.6, 5.0).unwrap(), 6.0e6);
        assert_eq!(tokens_processed(&p, 50.3, 5.0).unwrap(), 128.4e6);
        assert_eq!(tokens_processed(&p, 285.2, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            epochs(&p, 50.3, 720.0, 48_000_000).unwrap(),
            385.2,
            epsilon = 1e-9
        );
        assert!(matches!(
            epochs(&p, 50.3, 720.0, 0),
            Err(HardwareError::ZeroDataset)
        ));
    }

    #[test]
    fn flops_identity() {
        let p = rtx4090();
        for &(n, t) in [(50.3, 60.0), (200.9, 5.0), (855.6, 1440.0)].iter() {
            let f = flops(&p, n, t).unwrap();
            let tokens = tokens_processed(&p, n, t).unwrap();
            assert_eq!(f, 6.0 * n * 1.0e6 * tokens);
        }
        let f = flops(&p, 50.3, 60.0).unwrap();
        assert_relative_eq!(f, 4.65e17, max_relative = 0.01);
    }

    #[test]
    fn from_configs_respects_exactness_flag() {
        let ds = crate::dataset::load_reference_dataset();
        let exact = HardwareProfile::from_configs("x", &ds.configs, false, None).unwrap();
        assert_eq!(exact.points().len(), 7);
        let all = HardwareProfile::from_configs("x", &ds.configs, true, None).unwrap();
        assert_eq!(all.points().len(), 10);
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        assert!(matches!(
            HardwareProfile::new("p", vec![(50.0, 1.0e5)], None),
            Err(HardwareError::InsufficientPoints { found: 1 })
        ));
        assert!(matches!(
            HardwareProfile::new("p", vec![(50.0, 1.0e5), (100.0, 2.0e5)], None),
            Err(HardwareError::NotMonotone)
        ));
        assert!(matches!(
            HardwareProfile::new("p", vec![(50.0, 1.0e5), (50.0, 9.0e4)], None),
            Err(HardwareError::DuplicateParams(_))
        ));
    }
}
