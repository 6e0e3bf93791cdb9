//! Turn fitted laws plus a hardware profile into actionable
//! recommendations: continuous optimum size, snap to a real config,
//! expected loss, token/epoch/compute estimates, and the comparison
//! against compute-optimal (square-root) scaling.

use crate::budget::optimum_at_budget;
use crate::domain::{ModelConfig, PowerLawFit, RunGrid};
use crate::hardware::{self, HardwareError, HardwareProfile};
use crate::powerlaw::{evaluate, FitError, TiePolicy};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("config table is empty")]
    EmptyConfigTable,
    #[error("budget must be positive and finite, got {0}")]
    NonPositiveBudget(f64),
    #[error("fitted budget range is invalid: [{0}, {1}]")]
    BadRange(f64, f64),
    #[error("scaling multiplier must be positive, got {0}")]
    NonPositiveMultiplier(f64),
    #[error(transparent)]
    Hardware(#[from] HardwareError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// A size/loss/compute recommendation for one wall-clock budget.
#[derive(Debug, Clone, Serialize)]
pub struct PlanRecommendation {
    pub budget_min: f64,
    /// Law-predicted optimum size in millions, before snapping.
    pub n_star_continuous_m: f64,
    pub snapped_depth: u32,
    pub snapped_params_m: f64,
    /// Law-predicted best BPB at this budget.
    pub expected_bpb: f64,
    /// Tokens the snapped config processes in the budget.
    pub tokens: f64,
    /// Passes over the dataset, when its size is known.
    pub epochs: Option<f64>,
    pub flops: f64,
    /// Optimum size under square-root (compute-optimal) scaling, anchored
    /// so both curves agree at the smallest fitted budget.
    pub chinchilla_n_m: f64,
    pub notes: Vec<String>,
}

/// Snap a continuous size to the nearest config in log space. Sizes are
/// geometrically spaced, so nearest-ln beats nearest-linear (which would
/// bias large).
fn snap(configs: &[ModelConfig], n_star_m: f64) -> &ModelConfig {
    configs
        .iter()
        .min_by(|a, b| {
            let da = (a.params_m.ln() - n_star_m.ln()).abs();
            let db = (b.params_m.ln() - n_star_m.ln()).abs();
            da.total_cmp(&db)
        })
        .expect("non-empty config table")
}

/// Recommend a model size for `budget_min` minutes using the fitted size
/// and loss laws. `fitted_range` is the (smallest, largest) budget the
/// laws were fitted on; budgets outside 0.5×–2× of it get an
/// extrapolation note rather than an error.
pub fn recommend(
    budget_min: f64,
    size_law: &PowerLawFit,
    loss_law: &PowerLawFit,
    configs: &[ModelConfig],
    profile: &HardwareProfile,
    dataset_tokens: Option<u64>,
    fitted_range: (f64, f64),
) -> Result<PlanRecommendation, PlanError> {
    if configs.is_empty() {
        return Err(PlanError::EmptyConfigTable);
    }
    if !(budget_min > 0.0) || !budget_min.is_finite() {
        return Err(PlanError::NonPositiveBudget(budget_min));
    }
    let (lo, hi) = fitted_range;
    if !(lo > 0.0 && hi >= lo) {
        return Err(PlanError::BadRange(lo, hi));
    }
    let mut notes = Vec::new();
    let n_star = evaluate(size_law, budget_min)?;
    let chosen = snap(configs, n_star);
    let expected_bpb = evaluate(loss_law, budget_min)?;

    let estimate = hardware::throughput_at(profile, chosen.params_m)?;
    let tokens = estimate.tokens_per_sec * budget_min * 60.0;
    let epochs = match dataset_tokens {
        Some(d) if d > 0 => Some(tokens / d as f64),
        _ => None,
    };
    let flops = 6.0 * chosen.params_m * 1.0e6 * tokens;
    let chinchilla_n_m = evaluate(size_law, lo)? * (budget_min / lo).sqrt();

    if !(budget_min >= 0.5 * lo && budget_min < 2.0 * hi) {
        notes.push(format!(
            "budget {budget_min} min lies outside 0.5-2x of the fitted range [{lo}, {hi}] min; \
             size and loss predictions are extrapolated"
        ));
    }
    if estimate.extrapolated {
        notes.push(format!(
            "throughput for {} M params is extrapolated beyond the profiled size range",
            chosen.params_m
        ));
    }
    let largest = configs
        .iter()
        .map(|c| c.params_m)
        .fold(f64::NEG_INFINITY, f64::max);
    if chosen.params_m == largest {
        let vram = profile
            .vram_gb
            .map(|v| format!(" on this {v} GB card"))
            .unwrap_or_default();
        notes.push(format!(
            "snapped to the largest available config (D{}); the continuous optimum may exceed \
             what fits{vram}",
            chosen.depth
        ));
    }
    Ok(PlanRecommendation {
        budget_min,
        n_star_continuous_m: n_star,
        snapped_depth: chosen.depth,
        snapped_params_m: chosen.params_m,
        expected_bpb,
        tokens,
        epochs,
        flops,
        chinchilla_n_m,
        notes,
    })
}

/// How much larger the optimal model gets when the budget grows by
/// `multiplier`: multiplier^alpha.
pub fn scaling_ratio(multiplier: f64, alpha: f64) -> Result<f64, PlanError> {
    if !(multiplier > 0.0) || !multiplier.is_finite() {
        return Err(PlanError::NonPositiveMultiplier(multiplier));
    }
    Ok(multiplier.powf(alpha))
}

/// One row of the time-optimal versus compute-optimal growth table.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub multiplier: f64,
    /// Growth under the fitted time exponent.
    pub time_optimal_ratio: f64,
    /// Growth under square-root (compute-optimal) scaling.
    pub chinchilla_ratio: f64,
}

/// Budget multipliers used in the standard comparison table.
pub const COMPARISON_MULTIPLIERS: [f64; 4] = [2.0, 4.0, 10.0, 24.0];

/// Tabulate model-growth factors for several budget multipliers under the
/// fitted exponent versus square-root scaling.
pub fn comparison_table(alpha: f64, multipliers: &[f64]) -> Result<Vec<ComparisonRow>, PlanError> {
    multipliers
        .iter()
        .map(|&m| {
            Ok(ComparisonRow {
                multiplier: m,
                time_optimal_ratio: scaling_ratio(m, alpha)?,
                chinchilla_ratio: scaling_ratio(m, 0.5)?,
            })
        })
        .collect()
}

/// A guideline row: the law-based recommendation plus, when a run grid is
/// available, the measured optimum at that budget for side-by-side
/// comparison.
#[derive(Debug, Clone, Serialize)]
pub struct GuidelineRow {
    pub plan: PlanRecommendation,
    pub measured_bpb: Option<f64>,
    pub measured_models: Option<Vec<String>>,
}

/// One recommendation per requested budget. When `grid` is given, budgets
/// present in it also carry the measured optimum (models and BPB), which
/// overrides the law prediction as the headline number in reports: the law
/// is a smooth, the measurements are truth.
#[allow(clippy::too_many_arguments)]
pub fn guidelines_table(
    size_law: &PowerLawFit,
    loss_law: &PowerLawFit,
    configs: &[ModelConfig],
    profile: &HardwareProfile,
    budgets: &[f64],
    grid: Option<&RunGrid>,
    dataset_tokens: Option<u64>,
    fitted_range: (f64, f64),
) -> Result<Vec<GuidelineRow>, PlanError> {
    budgets
        .iter()
        .map(|&b| {
            let plan = recommend(
                b,
                size_law,
                loss_law,
                configs,
                profile,
                dataset_tokens,
                fitted_range,
            )?;
            let measured = grid.and_then(|g| optimum_at_budget(g, b, TiePolicy::default()).ok());
            Ok(GuidelineRow {
                plan,
                measured_bpb: measured.as_ref().map(|o| o.bpb),
                measured_models: measured.map(|o| o.models),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::load_reference_dataset;
    use crate::hardware::{fit_throughput, rtx4090};
    use crate::powerlaw::{fit_optimal_size_law, fit_loss_law};
    use proptest::prelude::*;

    fn law(a: f64, alpha: f64, x_unit: &str, y_unit: &str) -> PowerLawFit {
        PowerLawFit {
            coeff_a: a,
            exponent_alpha: alpha,
            r2: 1.0,
            stderr_alpha: 0.0,
            ci95_low: alpha,
            ci95_high: alpha,
            n_points: 8,
            x_unit: x_unit.into(),
            y_unit: y_unit.into(),
        }
    }

    fn reference_setup() -> (PowerLawFit, PowerLawFit, Vec<ModelConfig>, HardwareProfile) {
        let ds = load_reference_dataset();
        let size = law(14.20, 0.595, "minutes", "params_m");
        let loss = law(1.223, -0.061, "minutes", "bpb");
        let profile = fit_throughput(&rtx4090()).unwrap();
        (size, loss, ds.configs, profile)
    }

    #[test]
    fn eight_hour_reference_recommendation() {
        let (size, loss, configs, profile) = reference_setup();
        let rec = recommend(
            480.0,
            &size,
            &loss,
            &configs,
            &profile,
            Some(48_000_000),
            (5.0, 1440.0),
        )
        .unwrap();
        assert_eq!(rec.snapped_depth, 20);
        assert_eq!(rec.snapped_params_m, 519.0);
        assert!((rec.expected_bpb - 0.838).abs() < 0.002);
        assert!((rec.expected_bpb - 0.836).abs() < 0.01);
        // 36k tok/s for 8h.
        assert!((rec.tokens - 36_000.0 * 480.0 * 60.0).abs() < 1e-6);
        let epochs = rec.epochs.unwrap();
        assert!((epochs - rec.tokens / 48.0e6).abs() < 1e-12);
        assert!(rec.notes.is_empty());
        assert!(rec.flops > 0.0);
    }

    #[test]
    fn extrapolated_budget_carries_note() {
        let (size, loss, configs, profile) = reference_setup();
        let rec = recommend(
            2880.0,
            &size,
            &loss,
            &configs,
            &profile,
            None,
            (5.0, 1440.0),
        )
        .unwrap();
        assert!(rec
            .notes
            .iter()
            .any(|n| n.contains("extrapolated") && n.contains("fitted range")));
        // Just inside the half-open window: no range note.
        let inside = recommend(2879.0, &size, &loss, &configs, &profile, None, (5.0, 1440.0))
            .unwrap();
        assert!(!inside
            .notes
            .iter()
            .any(|n| n.contains("fitted range")));
        assert!(rec.epochs.is_none());
    }

    #[test]
    fn largest_config_snap_carries_vram_note() {
        let (size, loss, configs, profile) = reference_setup();
        let rec = recommend(
            1440.0,
            &size,
            &loss,
            &configs,
            &profile,
            None,
            (5.0, 1440.0),
        )
        .unwrap();
        assert_eq!(rec.snapped_depth, 26);
        assert!(rec.notes.iter().any(|n| n.contains("largest available")));
        // D26 sits beyond the profiled range, so throughput is flagged too.
        assert!(rec.notes.iter().any(|n| n.contains("throughput")));
        let tau = rec.tokens / (1440.0 * 60.0);
        assert!((tau - 17648.846022235408).abs() < 1e-6);
    }

    #[test]
    fn snapping_is_idempotent_and_log_spaced() {
        let (_, loss, configs, profile) = reference_setup();
        // Flat law pinned exactly at a config size.
        let size = law(85.9, 0.0, "minutes", "params_m");
        let rec = recommend(60.0, &size, &loss, &configs, &profile, None, (5.0, 1440.0))
            .unwrap();
        assert_eq!(rec.snapped_depth, 10);
        assert_eq!(rec.snapped_params_m, 85.9);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let (size, loss, configs, profile) = reference_setup();
        assert!(matches!(
            recommend(480.0, &size, &loss, &[], &profile, None, (5.0, 1440.0)),
            Err(PlanError::EmptyConfigTable)
        ));
        assert!(matches!(
            recommend(0.0, &size, &loss, &configs, &profile, None, (5.0, 1440.0)),
            Err(PlanError::NonPositiveBudget(_))
        ));
        assert!(matches!(
            recommend(60.0, &size, &loss, &configs, &profile, None, (0.0, 1440.0)),
            Err(PlanError::BadRange(..))
        ));
        assert!(matches!(
            scaling_ratio(-2.0, 0.6),
            Err(PlanError::NonPositiveMultiplier(_))
        ));
    }

    #[test]
    fn scaling_ratios_match_reference_arithmetic() {
        let cases = [
            (2.0, 0.60, 1.52),
            (2.0, 0.50, 1.41),
            (4.0, 0.60, 2.30),
            (4.0, 0.50, 2.00),
            (10.0, 0.60, 3.98),
            (10.0, 0.50, 3.16),
            (24.0, 0.60, 6.73),
            (24.0, 0.50, 4.90),
        ];
        for (m, alpha, expect) in cases {
            let r = scaling_ratio(m, alpha).unwrap();
            assert!((r - expect).abs() < 0.01, "{m}^{alpha} = {r}");
        }
        let table = comparison_table(0.60, &COMPARISON_MULTIPLIERS).unwrap();
        assert_eq!(table.len(), 4);
        assert!((table[3].time_optimal_ratio - 6.7317308726772).abs() < 1e-9);
        assert!((table[3].chinchilla_ratio - 4.89897948556636).abs() < 1e-9);
    }

    #[test]
    fn guidelines_snap_sequence_on_fitted_laws() {
        let ds = load_reference_dataset();
        let (size, _) = fit_optimal_size_law(&ds.grid, TiePolicy::default()).unwrap();
        let (loss, _) = fit_loss_law(&ds.grid).unwrap();
        let profile = fit_throughput(&rtx4090()).unwrap();
        let budgets = ds.grid.budgets();
        let rows = guidelines_table(
            &size,
            &loss,
            &ds.configs,
            &profile,
            &budgets,
            Some(&ds.grid),
            Some(ds.dataset_tokens),
            (5.0, 1440.0),
        )
        .unwrap();
        assert_eq!(rows.len(), 8);
        // Law snaps on the embedded fit: nearest-config drift puts three
        // rows one step off the measured optimum.
        let snapped: Vec<u32> = rows.iter().map(|r| r.plan.snapped_depth).collect();
        assert_eq!(snapped, vec![8, 12, 14, 16, 18, 20, 22, 26]);
        // Measured optima stay authoritative in the side-by-side column.
        let measured: Vec<&str> = rows
            .iter()
            .map(|r| r.measured_models.as_ref().unwrap()[0].as_str())
            .collect();
        assert_eq!(measured, vec!["D8", "D10", "D14", "D14", "D16", "D20", "D24", "D26"]);
        assert_eq!(rows[3].measured_models.as_ref().unwrap().len(), 2);
        assert_eq!(rows[7].measured_bpb, Some(0.814));
        // Empty budget list → empty table.
        let empty = guidelines_table(
            &size,
            &loss,
            &ds.configs,
            &profile,
            &[],
            None,
            None,
            (5.0, 1440.0),
        )
        .unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn chinchilla_curve_shares_the_first_anchor() {
        let (size, loss, configs, profile) = reference_setup();
        let at_lo = recommend(5.0, &size, &loss, &configs, &profile, None, (5.0, 1440.0))
            .unwrap();
        assert!((at_lo.chinchilla_n_m - at_lo.n_star_continuous_m).abs() < 1e-9);
        let at_8h = recommend(480.0, &size, &loss, &configs, &profile, None, (5.0, 1440.0))
            .unwrap();
        let expect = at_lo.n_star_continuous_m * (480.0f64 / 5.0).sqrt();
        assert!((at_8h.chinchilla_n_m - expect).abs() < 1e-9);
        // Square-root growth trails the fitted exponent's growth.
        assert!(at_8h.chinchilla_n_m < at_8h.n_star_continuous_m);
    }

    proptest! {
        #[test]
        fn recommend_is_monotone_in_budget(
            a in 1.0f64..50.0,
            alpha in 0.05f64..0.9,
            t1 in 5.0f64..1000.0,
            factor in 1.01f64..4.0,
        ) {
            let (_, loss, configs, profile) = reference_setup();
            let size = law(a, alpha, "minutes", "params_m");
            let r1 = recommend(t1, &size, &loss, &configs, &profile, None, (5.0, 1440.0)).unwrap();
            let r2 = recommend(t1 * factor, &size, &loss, &configs, &profile, None, (5.0, 1440.0)).unwrap();
            prop_assert!(r2.n_star_continuous_m >= r1.n_star_continuous_m);
            prop_assert!(r2.snapped_params_m >= r1.snapped_params_m);
        }

        #[test]
        fn exponent_additivity(m in 1.01f64..50.0) {
            let lhs = scaling_ratio(m, 0.5).unwrap() * scaling_ratio(m, 0.1).unwrap();
            let rhs = scaling_ratio(m, 0.6).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
        }
    }
}
