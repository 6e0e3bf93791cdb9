//! Log-log least-squares fitting of y = a·x^α relations with uncertainty,
//! plus the fitting pipelines over run grids: the optimal-size law, the
//! best-loss law, the optimal-depth law, prefix (budget-truncated) fits,
//! and the sensitivity variants.
//!
//! Fitted values on the embedded dataset are not required to match the
//! reference constants shipped alongside it; report generation surfaces
//! any gaps as discrepancy notes rather than failures.

use crate::budget::{optimum_at_budget, BudgetError};
use crate::domain::{PowerLawFit, RunGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("power-law fit requires positive values, got ({x}, {y})")]
    NonPositiveValue { x: f64, y: f64 },
    #[error("all x values identical; slope is undefined")]
    SingularFit,
    #[error("x must be positive, got {0}")]
    NonPositiveX(f64),
    #[error("bootstrap needs at least 100 resamples, got {0}")]
    TooFewResamples(usize),
    #[error("tie epsilon must lie in [0, 0.01), got {0}")]
    InvalidEpsilon(f64),
    #[error("fewer than 2 usable anchors after tie handling")]
    InsufficientData,
    #[error("{0}")]
    Budget(#[from] BudgetError),
}

/// How a within-epsilon tie for the per-budget optimum is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieMode {
    /// Average the tied models' params (or depths).
    ArithmeticMean,
    PickLarger,
    PickSmaller,
    /// Drop the tied budget's anchor from the fit.
    ExcludeBudget,
}

/// Tie handling policy: resolution mode plus the BPB closeness threshold
/// under which two models count as tied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiePolicy {
    pub mode: TieMode,
    pub epsilon_bpb: f64,
}

/// Half of the observation tables' last printed digit.
pub const DEFAULT_EPSILON_BPB: f64 = 0.0005;

impl TiePolicy {
    pub fn new(mode: TieMode, epsilon_bpb: f64) -> Result<Self, FitError> {
        if !(0.0..0.01).contains(&epsilon_bpb) {
            return Err(FitError::InvalidEpsilon(epsilon_bpb));
        }
        Ok(TiePolicy { mode, epsilon_bpb })
    }

    pub fn with_mode(mode: TieMode) -> Self {
        TiePolicy {
            mode,
            epsilon_bpb: DEFAULT_EPSILON_BPB,
        }
    }
}

impl Default for TiePolicy {
    fn default() -> Self {
        TiePolicy::with_mode(TieMode::ArithmeticMean)
    }
}

/// Two-sided 97.5% Student-t quantile with `df` degrees of freedom.
fn t_quantile_975(df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("valid t distribution")
        .inverse_cdf(0.975)
}

/// Ordinary least squares on (ln x, ln y). The exponent is the slope, the
/// coefficient exp(intercept); R² is computed in log space. The 95% CI uses
/// the Student-t quantile with n−2 degrees of freedom; a two-point fit has
/// no residual degrees of freedom, so its standard error and interval are
/// reported as infinite (flagged via [`PowerLawFit::degenerate_ci`]).
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit, FitError> {
    fit_power_law_units(points, "", "")
}

/// [`fit_power_law`] with unit labels attached to the result.
pub fn fit_power_law_units(
    points: &[(f64, f64)],
    x_unit: &str,
    y_unit: &str,
) -> Result<PowerLawFit, FitError> {
    let n = points.len();
    if n < 2 {
        return Err(FitError::TooFewPoints { needed: 2, found: n });
    }
    for &(x, y) in points {
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            return Err(FitError::NonPositiveValue { x, y });
        }
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let nf = n as f64;
    let mx = lx.iter().sum::<f64>() / nf;
    let my = ly.iter().sum::<f64>() / nf;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(FitError::SingularFit);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let resid = y - (intercept + slope * x);
            resid * resid
        })
        .sum();
    let r2 = if syy == 0.0 { f64::NAN } else { 1.0 - ss_res / syy };
    let (stderr, ci_low, ci_high) = if n > 2 {
        let se = (ss_res / ((nf - 2.0) * sxx)).sqrt();
        let t = t_quantile_975(nf - 2.0);
        (se, slope - t * se, slope + t * se)
    } else {
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY)
    };
    Ok(PowerLawFit {
        coeff_a: intercept.exp(),
        exponent_alpha: slope,
        r2,
        stderr_alpha: stderr,
        ci95_low: ci_low,
        ci95_high: ci_high,
        n_points: n,
        x_unit: x_unit.to_owned(),
        y_unit: y_unit.to_owned(),
    })
}

/// Evaluate the fitted law at x: coeff_a · x^exponent_alpha.
pub fn evaluate(fit: &PowerLawFit, x: f64) -> Result<f64, FitError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(FitError::NonPositiveX(x));
    }
    Ok(fit.coeff_a * x.powf(fit.exponent_alpha))
}

/// Percentile bootstrap (2.5%, 97.5%) over the exponent of
/// resampled-with-replacement refits.
///
/// Deterministic given `seed`: resample `i` draws from its own seeded
/// substream, so results do not depend on evaluation order. Resamples with
/// fewer than 2 distinct x are redrawn within their substream.
pub fn bootstrap_ci(
    points: &[(f64, f64)],
    resamples: usize,
    seed: u64,
) -> Result<(f64, f64), FitError> {
    if resamples < 100 {
        return Err(FitError::TooFewResamples(resamples));
    }
    let n = points.len();
    if n < 3 {
        return Err(FitError::TooFewPoints { needed: 3, found: n });
    }
    for &(x, y) in points {
        if !(x > 0.0 && y > 0.0) {
            return Err(FitError::NonPositiveValue { x, y });
        }
    }
    let mut alphas = Vec::with_capacity(resamples);
    let mut sample = Vec::with_capacity(n);
    for i in 0..resamples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        loop {
            sample.clear();
            for _ in 0..n {
                sample.push(points[rng.gen_range(0..n)]);
            }
            let first_x = sample[0].0;
            if sample.iter().any(|p| p.0 != first_x) {
                break;
            }
        }
        let fit = fit_power_law(&sample)?;
        alphas.push(fit.exponent_alpha);
    }
    alphas.sort_by(f64::total_cmp);
    Ok((percentile(&alphas, 0.025), percentile(&alphas, 0.975)))
}

/// Linear-interpolated percentile over a sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Per budget, the optimum anchor values under a tie policy. Budgets whose
/// tie resolves to exclusion are skipped.
fn anchors(
    grid: &RunGrid,
    tie: TiePolicy,
    pick: impl Fn(&crate::budget::BudgetOptimum) -> Option<f64>,
) -> Result<Vec<(f64, f64)>, FitError> {
    let mut out = Vec::new();
    for budget in grid.budgets() {
        let opt = optimum_at_budget(grid, budget, tie)?;
        if let Some(y) = pick(&opt) {
            out.push((budget, y));
        }
    }
    if out.len() < 2 {
        return Err(FitError::InsufficientData);
    }
    Ok(out)
}

/// Fit optimal params (millions) versus budget (minutes): N*(t) = a·t^α.
/// Returns the fit plus the (budget, optimum) anchors behind it.
pub fn fit_optimal_size_law(
    grid: &RunGrid,
    tie: TiePolicy,
) -> Result<(PowerLawFit, Vec<(f64, f64)>), FitError> {
    let pts = anchors(grid, tie, |o| o.params_m)?;
    let fit = fit_power_law_units(&pts, "minutes", "params_m")?;
    Ok((fit, pts))
}

/// Fit best BPB versus budget: L*(t) = a·t^α (ties don't change the
/// minimum, so no policy applies).
pub fn fit_loss_law(grid: &RunGrid) -> Result<(PowerLawFit, Vec<(f64, f64)>), FitError> {
    let pts = anchors(grid, TiePolicy::default(), |o| Some(o.bpb))?;
    let fit = fit_power_law_units(&pts, "minutes", "bpb")?;
    Ok((fit, pts))
}

/// Fit optimal depth versus budget: D*(t) = a·t^α. Ties resolve on depth
/// (arithmetic-mean ties average the tied depths).
pub fn fit_depth_law(
    grid: &RunGrid,
    tie: TiePolicy,
) -> Result<(PowerLawFit, Vec<(f64, f64)>), FitError> {
    let pts = anchors(grid, tie, |o| o.depth)?;
    let fit = fit_power_law_units(&pts, "minutes", "depth")?;
    Ok((fit, pts))
}

/// Size-law fits on the first k budgets, for k = 3..=K in ascending budget
/// order, tracking how the exponent evolves as later budgets arrive.
pub fn prefix_fits(
    grid: &RunGrid,
    tie: TiePolicy,
) -> Result<Vec<(usize, PowerLawFit)>, FitError> {
    let pts = anchors(grid, tie, |o| o.params_m)?;
    if pts.len() < 3 {
        return Err(FitError::TooFewPoints {
            needed: 3,
            found: pts.len(),
        });
    }
    let mut out = Vec::new();
    for k in 3..=pts.len() {
        let fit = fit_power_law_units(&pts[..k], "minutes", "params_m")?;
        out.push((k, fit));
    }
    Ok(out)
}

/// One sensitivity variant: a name and its size-law fit.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityFit {
    pub variant: String,
    pub fit: PowerLawFit,
}

/// The sensitivity suite output; skipped variants are explained in
/// `notices`.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivitySuite {
    pub variants: Vec<SensitivityFit>,
    pub notices: Vec<String>,
}

fn without_budget(grid: &RunGrid, budget: f64) -> RunGrid {
    let records = grid
        .records()
        .iter()
        .filter(|r| r.budget_min != budget)
        .cloned()
        .collect();
    RunGrid::new(records, grid.dataset_tokens).expect("filtered grid stays valid")
}

/// The four standard size-law robustness variants: the full baseline with
/// mean ties, the same without the largest budget, the same with the tied
/// budget resolved to the larger model, and with the tied budget excluded
/// entirely.
pub fn sensitivity_suite(grid: &RunGrid) -> Result<SensitivitySuite, FitError> {
    let mut variants = Vec::new();
    let mut notices = Vec::new();
    let budgets = grid.budgets();
    let last = *budgets.last().expect("non-empty grid has budgets");
    let mean = TiePolicy::default();

    let (baseline, _) = fit_optimal_size_law(grid, mean)?;
    let n_baseline = baseline.n_points;
    variants.push(SensitivityFit {
        variant: format!("baseline_{n_baseline}pt_mean_ties"),
        fit: baseline,
    });

    if budgets.len() < 2 {
        notices.push("single-budget grid: truncated variants skipped".to_owned());
        return Ok(SensitivitySuite { variants, notices });
    }
    let truncated = without_budget(grid, last);
    match fit_optimal_size_law(&truncated, mean) {
        Ok((fit, _)) => variants.push(SensitivityFit {
            variant: format!("exclude_last_budget_{}pt_mean_ties", fit.n_points),
            fit,
        }),
        Err(e) => notices.push(format!("exclude-last-budget variant skipped: {e}")),
    }
    match fit_optimal_size_law(&truncated, TiePolicy::with_mode(TieMode::PickLarger)) {
        Ok((fit, _)) => variants.push(SensitivityFit {
            variant: format!("exclude_last_budget_{}pt_larger_ties", fit.n_points),
            fit,
        }),
        Err(e) => notices.push(format!("larger-tie variant skipped: {e}")),
    }
    match fit_optimal_size_law(&truncated, TiePolicy::with_mode(TieMode::ExcludeBudget)) {
        Ok((fit, _)) => {
            if fit.n_points == n_baseline - 1 {
                notices.push(
                    "exclude-ties variant dropped no further budget (no tie present)".to_owned(),
                );
            }
            variants.push(SensitivityFit {
                variant: format!("exclude_last_budget_and_ties_{}pt", fit.n_points),
                fit,
            });
        }
        Err(e) => notices.push(format!("exclude-ties variant skipped: {e}")),
    }
    Ok(SensitivitySuite { variants, notices })
}
