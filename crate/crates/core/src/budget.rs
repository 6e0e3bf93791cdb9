//! Per-budget analysis of a run grid: the optimum model (with tie
//! handling), overfitting flags, regime classification, marginal returns
//! from doubling the budget, and seed-variance statistics.

use crate::domain::RunGrid;
use crate::powerlaw::{TieMode, TiePolicy};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BudgetError {
    #[error("budget {0} min is not present in the grid")]
    UnknownBudget(f64),
    #[error("budget {budget} min has only {found} model(s); need at least 3 to classify")]
    InsufficientModels { budget: f64, found: usize },
}

/// Training regime at a given budget, judged from the shape of the
/// loss-versus-size row and the overfitting flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeLabel {
    /// The U-curve's left side dominates: bigger models still win.
    ComputeBounded,
    /// The best model is the largest one observed; the optimum may lie
    /// beyond the model range.
    Transitional,
    /// Mid-sized models have started losing to the data term: the optimum
    /// is pinned by repetition, not compute.
    DataBounded,
}

/// The winning model(s) at one budget after tie handling.
#[derive(Debug, Clone, Serialize)]
pub struct BudgetOptimum {
    pub budget_min: f64,
    /// Tie set, ascending params.
    pub models: Vec<String>,
    pub depths: Vec<u32>,
    pub params_list: Vec<f64>,
    /// Best BPB at this budget.
    pub bpb: f64,
    /// Tie-resolved params in millions; `None` when the policy excludes a
    /// tied budget.
    pub params_m: Option<f64>,
    /// Tie-resolved depth (mean ties can land between integer depths).
    pub depth: Option<f64>,
}

/// A model's per-budget value: the mean BPB over its runs (seeds) there.
fn model_values_at(grid: &RunGrid, budget: f64) -> Vec<(u32, f64, f64)> {
    let mut acc: BTreeMap<u32, (f64, f64, usize)> = BTreeMap::new();
    for r in grid.records().iter().filter(|r| r.budget_min == budget) {
        let e = acc.entry(r.depth).or_insert((r.params_m, 0.0, 0));
        e.1 += r.val_bpb;
        e.2 += 1;
    }
    acc.into_iter()
        .map(|(depth, (params, sum, n))| (depth, params, sum / n as f64))
        .collect()
}

/// Find the optimum model at `budget`, resolving within-epsilon ties per
/// the policy. Multi-seed cells enter as their seed-mean BPB.
pub fn optimum_at_budget(
    grid: &RunGrid,
    budget: f64,
    tie: TiePolicy,
) -> Result<BudgetOptimum, BudgetError> {
    let mut rows = model_values_at(grid, budget);
    if rows.is_empty() {
        return Err(BudgetError::UnknownBudget(budget));
    }
    rows.sort_by(|a, b| a.1.total_cmp(&b.1));
    let best = rows
        .iter()
        .map(|r| r.2)
        .fold(f64::INFINITY, f64::min);
    let tied: Vec<&(u32, f64, f64)> = rows
        .iter()
        .filter(|r| r.2 <= best + tie.epsilon_bpb)
        .collect();
    let depths: Vec<u32> = tied.iter().map(|r| r.0).collect();
    let params_list: Vec<f64> = tied.iter().map(|r| r.1).collect();
    let models: Vec<String> = depths.iter().map(|d| format!("D{d}")).collect();
    let (params_m, depth) = match tie.mode {
        _ if tied.len() == 1 => (Some(params_list[0]), Some(depths[0] as f64)),
        TieMode::ArithmeticMean => {
            let n = tied.len() as f64;
            (
                Some(params_list.iter().sum::<f64>() / n),
                Some(depths.iter().map(|&d| d as f64).sum::<f64>() / n),
            )
        }
        TieMode::PickLarger => (
            Some(*params_list.last().unwrap()),
            Some(*depths.last().unwrap() as f64),
        ),
        TieMode::PickSmaller => (Some(params_list[0]), Some(depths[0] as f64)),
        TieMode::ExcludeBudget => (None, None),
    };
    Ok(BudgetOptimum {
        budget_min: budget,
        models,
        depths,
        params_list,
        bpb: best,
        params_m,
        depth,
    })
}

/// One non-monotone loss observation: a model that got worse when given
/// more time than some earlier budget.
#[derive(Debug, Clone, Serialize)]
pub struct OverfitFlag {
    pub model_id: String,
    pub depth: u32,
    pub budget_min: f64,
    pub val_bpb: f64,
    /// Best (lowest) BPB this model reached at any earlier budget.
    pub best_earlier_bpb: f64,
    /// BPB change versus the immediately preceding observed budget.
    pub delta_bpb: f64,
    pub prev_budget_min: f64,
}

/// Flag every (model, budget) cell whose BPB exceeds the model's best
/// earlier value by more than `epsilon_bpb`. A model's first observed
/// budget is never flagged. Output is sorted by (budget, depth).
pub fn overfit_flags(grid: &RunGrid, epsilon_bpb: f64) -> Vec<OverfitFlag> {
    let mut series: BTreeMap<u32, (f64, Vec<(f64, f64)>)> = BTreeMap::new();
    for budget in grid.budgets() {
        for (depth, params, value) in model_values_at(grid, budget) {
            series
                .entry(depth)
                .or_insert((params, Vec::new()))
                .1
                .push((budget, value));
        }
    }
    let mut flags = Vec::new();
    for (depth, (_params, points)) in &series {
        let mut best_so_far = f64::INFINITY;
        let mut prev: Option<(f64, f64)> = None;
        for &(budget, value) in points {
            if let Some((prev_budget, prev_value)) = prev {
                if value > best_so_far + epsilon_bpb {
                    flags.push(OverfitFlag {
                        model_id: format!("D{depth}"),
                        depth: *depth,
                        budget_min: budget,
                        val_bpb: value,
                        best_earlier_bpb: best_so_far,
                        delta_bpb: value - prev_value,
                        prev_budget_min: prev_budget,
                    });
                }
            }
            best_so_far = best_so_far.min(value);
            prev = Some((budget, value));
        }
    }
    flags.sort_by(|a, b| {
        a.budget_min
            .total_cmp(&b.budget_min)
            .then(a.depth.cmp(&b.depth))
    });
    flags
}

/// Classify the regime at `budget`. Decision order: overfitting evidence
/// first, then row shape.
///
/// 1. Fewer than 3 models at the budget: not classifiable.
/// 2. `data_bounded` if any model flagged as overfitting at this budget
///    sits strictly between the smallest observed model and the optimum —
///    the mid-curve is already data-limited.
/// 3. `transitional` if the loss row is non-increasing in size (within
///    epsilon) and the largest observed model is in the tie set.
/// 4. Otherwise `compute_bounded`.
pub fn classify_regime(
    grid: &RunGrid,
    budget: f64,
    epsilon_bpb: f64,
) -> Result<RegimeLabel, BudgetError> {
    let rows = model_values_at(grid, budget);
    if rows.is_empty() {
        return Err(BudgetError::UnknownBudget(budget));
    }
    if rows.len() < 3 {
        return Err(BudgetError::InsufficientModels {
            budget,
            found: rows.len(),
        });
    }
    let mut rows = rows;
    rows.sort_by(|a, b| a.1.total_cmp(&b.1));
    let best = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let tie_params: Vec<f64> = rows
        .iter()
        .filter(|r| r.2 <= best + epsilon_bpb)
        .map(|r| r.1)
        .collect();
    let opt_params = tie_params[0];
    let smallest = rows[0].1;
    let largest = *tie_params.last().unwrap() == rows.last().unwrap().1;

    let flagged_between = overfit_flags(grid, epsilon_bpb)
        .iter()
        .filter(|f| f.budget_min == budget)
        .any(|f| {
            let p = rows
                .iter()
                .find(|r| r.0 == f.depth)
                .map(|r| r.1)
                .unwrap_or(f64::NAN);
            p > smallest && p < opt_params
        });
    if flagged_between {
        return Ok(RegimeLabel::DataBounded);
    }
    let non_increasing = rows
        .windows(2)
        .all(|w| w[1].2 <= w[0].2 + epsilon_bpb);
    if non_increasing && largest {
        return Ok(RegimeLabel::Transitional);
    }
    Ok(RegimeLabel::ComputeBounded)
}

/// Everything the report needs about one budget.
#[derive(Debug, Clone, Serialize)]
pub struct BudgetReport {
    pub budget_min: f64,
    pub optimum: BudgetOptimum,
    /// `None` when fewer than 3 models were observed at the budget.
    pub regime: Option<RegimeLabel>,
    pub overfit: Vec<OverfitFlag>,
}

/// Build a [`BudgetReport`] for every budget in the grid, ascending.
pub fn budget_reports(grid: &RunGrid, tie: TiePolicy) -> Vec<BudgetReport> {
    let all_flags = overfit_flags(grid, tie.epsilon_bpb);
    grid.budgets()
        .into_iter()
        .map(|budget| {
            let optimum = optimum_at_budget(grid, budget, tie)
                .expect("budget taken from the grid itself");
            let regime = classify_regime(grid, budget, tie.epsilon_bpb).ok();
            let overfit = all_flags
                .iter()
                .filter(|f| f.budget_min == budget)
                .cloned()
                .collect();
            BudgetReport {
                budget_min: budget,
                optimum,
                regime,
                overfit,
            }
        })
        .collect()
}

/// The gain from moving between consecutive budgets: change in best BPB
/// and that change per additional hour.
#[derive(Debug, Clone, Serialize)]
pub struct MarginalStep {
    pub from_min: f64,
    pub to_min: f64,
    pub delta_bpb: f64,
    pub rate_per_hour: f64,
}

/// Consecutive-budget improvements of the best observed BPB.
pub fn marginal_returns(grid: &RunGrid) -> Vec<MarginalStep> {
    let best: Vec<(f64, f64)> = grid
        .budgets()
        .into_iter()
        .map(|b| {
            let best = model_values_at(grid, b)
                .iter()
                .map(|r| r.2)
                .fold(f64::INFINITY, f64::min);
            (b, best)
        })
        .collect();
    best.windows(2)
        .map(|w| {
            let (from_min, from_bpb) = w[0];
            let (to_min, to_bpb) = w[1];
            let delta = to_bpb - from_bpb;
            MarginalStep {
                from_min,
                to_min,
                delta_bpb: delta,
                rate_per_hour: delta / ((to_min - from_min) / 60.0),
            }
        })
        .collect()
}

/// Seed-variance summary for one (model, budget) cell.
#[derive(Debug, Clone, Serialize)]
pub struct SeedStats {
    pub model_id: String,
    pub depth: u32,
    pub budget_min: f64,
    pub n_seeds: usize,
    pub mean_bpb: f64,
    /// Sample standard deviation (n−1 divisor).
    pub std_bpb: f64,
    /// Population standard deviation (n divisor).
    pub std_bpb_population: f64,
    /// Coefficient of variation in percent, population convention.
    pub cv_pct: f64,
    pub values: Vec<f64>,
}

/// Cross-seed win counts between two models at the same budget.
/// `a` is the smaller model; a "win" for a side is a strictly lower BPB
/// in the cross product of seed values (ties score for neither).
#[derive(Debug, Clone, Serialize)]
pub struct DominancePair {
    pub budget_min: f64,
    pub model_a: String,
    pub model_b: String,
    pub a_wins: usize,
    pub b_wins: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiseedReport {
    pub stats: Vec<SeedStats>,
    pub dominance: Vec<DominancePair>,
    pub notices: Vec<String>,
}

/// Summarize every (model, budget) cell with ≥ 2 seeds, plus pairwise
/// dominance between the summarized models at each budget.
pub fn multiseed_stats(grid: &RunGrid) -> MultiseedReport {
    let mut cells: BTreeMap<(u32, u64), (f64, Vec<f64>)> = BTreeMap::new();
    let mut budgets_by_bits: BTreeMap<u64, f64> = BTreeMap::new();
    for r in grid.records() {
        let key = (r.depth, r.budget_min.to_bits());
        budgets_by_bits.insert(r.budget_min.to_bits(), r.budget_min);
        cells.entry(key).or_insert((r.params_m, Vec::new())).1.push(r.val_bpb);
    }
    let mut stats = Vec::new();
    for ((depth, bbits), (_params, values)) in &cells {
        if values.len() < 2 {
            continue;
        }
        let budget = budgets_by_bits[bbits];
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let std_sample = (ss / (n - 1.0)).sqrt();
        let std_pop = (ss / n).sqrt();
        stats.push(SeedStats {
            model_id: format!("D{depth}"),
            depth: *depth,
            budget_min: budget,
            n_seeds: values.len(),
            mean_bpb: mean,
            std_bpb: std_sample,
            std_bpb_population: std_pop,
            cv_pct: 100.0 * std_pop / mean,
            values: values.clone(),
        });
    }
    stats.sort_by(|a, b| {
        a.budget_min
            .total_cmp(&b.budget_min)
            .then(a.depth.cmp(&b.depth))
    });
    let mut dominance = Vec::new();
    for i in 0..stats.len() {
        for j in (i + 1)..stats.len() {
            let (a, b) = (&stats[i], &stats[j]);
            if a.budget_min != b.budget_min {
                continue;
            }
            let mut a_wins = 0;
            let mut b_wins = 0;
            for va in &a.values {
                for vb in &b.values {
                    if va < vb {
                        a_wins += 1;
                    } else if vb < va {
                        b_wins += 1;
                    }
                }
            }
            dominance.push(DominancePair {
                budget_min: a.budget_min,
                model_a: a.model_id.clone(),
                model_b: b.model_id.clone(),
                a_wins,
                b_wins,
                total: a.values.len() * b.values.len(),
            });
        }
    }
    let notices = if stats.is_empty() {
        vec!["no cell has 2 or more seeds; seed-variance summary is empty".to_owned()]
    } else {
        Vec::new()
    };
    MultiseedReport {
        stats,
        dominance,
        notices,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::load_reference_dataset;
    use crate::domain::RunRecord;
    use proptest::prelude::*;

    fn embedded() -> RunGrid {
        load_reference_dataset().grid
    }

    #[test]
    fn optimum_sequence_matches_reference() {
        let grid = embedded();
        let expected: [(f64, &[&str]); 8] = [
            (5.0, &["D8"]),
            (30.0, &["D10"]),
            (60.0, &["D14"]),
            (120.0, &["D14", "D16"]),
            (240.0, &["D16"]),
            (480.0, &["D20"]),
            (720.0, &["D24"]),
            (1440.0, &["D26"]),
        ];
        for (budget, models) in expected {
            let opt = optimum_at_budget(&grid, budget, TiePolicy::default()).unwrap();
            assert_eq!(opt.models, models, "budget {budget}");
        }
        let tie = optimum_at_budget(&grid, 120.0, TiePolicy::default()).unwrap();
        assert!((tie.params_m.unwrap() - 243.05).abs() < 1e-9);
        assert_eq!(tie.depth.unwrap(), 15.0);
        assert_eq!(tie.bpb, 0.901);
    }

    #[test]
    fn unknown_budget_is_an_error() {
        assert_eq!(
            optimum_at_budget(&embedded(), 77.0, TiePolicy::default()).unwrap_err(),
            BudgetError::UnknownBudget(77.0)
        );
    }

    #[test]
    fn overfit_flags_at_24h_match_reference() {
        let grid = embedded();
        let flags = overfit_flags(&grid, 0.0005);
        let at_24h: Vec<&OverfitFlag> =
            flags.iter().filter(|f| f.budget_min == 1440.0).collect();
        let ids: Vec<&str> = at_24h.iter().map(|f| f.model_id.as_str()).collect();
        assert_eq!(ids, vec!["D14", "D16", "D18", "D20", "D22"]);
        let deltas = [0.005, 0.010, 0.012, 0.010, 0.003];
        for (f, d) in at_24h.iter().zip(deltas) {
            assert!((f.delta_bpb - d).abs() < 1e-9, "{}: {}", f.model_id, f.delta_bpb);
        }
        // D24 keeps improving into 24h.
        assert!(!at_24h.iter().any(|f| f.model_id == "D24"));
        // Small-model flags at earlier budgets.
        let early: Vec<(&str, f64)> = flags
            .iter()
            .filter(|f| f.budget_min < 1440.0)
            .map(|f| (f.model_id.as_str(), f.budget_min))
            .collect();
        assert_eq!(
            early,
            vec![("D8", 60.0), ("D10", 60.0), ("D8", 240.0), ("D8", 720.0)]
        );
    }

    #[test]
    fn regime_sequence_matches_reference() {
        use RegimeLabel::*;
        let grid = embedded();
        let expected = [
            (5.0, ComputeBounded),
            (30.0, ComputeBounded),
            (60.0, DataBounded),
            (120.0, Transitional),
            (240.0, ComputeBounded),
            (480.0, ComputeBounded),
            (720.0, Transitional),
            (1440.0, DataBounded),
        ];
        for (budget, label) in expected {
            assert_eq!(
                classify_regime(&grid, budget, 0.0005).unwrap(),
                label,
                "budget {budget}"
            );
        }
    }

    #[test]
    fn too_few_models_cannot_be_classified() {
        let records = vec![
            RunRecord::new(8, 50.3, 60.0, 0.95),
            RunRecord::new(10, 85.9, 60.0, 0.96),
        ];
        let grid = RunGrid::new(records, None).unwrap();
        assert_eq!(
            classify_regime(&grid, 60.0, 0.0005).unwrap_err(),
            BudgetError::InsufficientModels {
                budget: 60.0,
                found: 2
            }
        );
        let reports = budget_reports(&grid, TiePolicy::default());
        assert!(reports[0].regime.is_none());
    }

    #[test]
    fn marginal_returns_match_reference() {
        let steps = marginal_returns(&embedded());
        assert_eq!(steps.len(), 7);
        let deltas = [-0.160, -0.028, -0.044, -0.039, -0.026, -0.012, -0.010];
        let rates = [-0.384, -0.056, -0.044, -0.0195, -0.0065, -0.003, -0.000833];
        for ((s, d), r) in steps.iter().zip(deltas).zip(rates) {
            assert!((s.delta_bpb - d).abs() < 1e-9, "{}→{}", s.from_min, s.to_min);
            assert!((s.rate_per_hour - r).abs() < 0.0005);
        }
    }

    #[test]
    fn multiseed_stats_match_reference() {
        let ds = load_reference_dataset();
        let report = multiseed_stats(&ds.multiseed);
        assert_eq!(report.stats.len(), 4);
        let by_depth: BTreeMap<u32, &SeedStats> =
            report.stats.iter().map(|s| (s.depth, s)).collect();
        let expect = [
            (8, 0.975666666666667, 0.00115470053837925),
            (10, 0.973333333333333, 0.000577350269189626),
            (14, 1.01833333333333, 0.00321455025366434),
            (16, 1.029, 0.003),
        ];
        for (d, mean, std) in expect {
            let s = by_depth[&d];
            assert_eq!(s.n_seeds, 3);
            assert!((s.mean_bpb - mean).abs() < 1e-12, "mean D{d}");
            assert!((s.std_bpb - std).abs() < 1e-12, "std D{d}");
            assert!(s.std_bpb_population < s.std_bpb);
        }
        let d8_d10 = report
            .dominance
            .iter()
            .find(|p| p.model_a == "D8" && p.model_b == "D10")
            .unwrap();
        assert_eq!(d8_d10.total, 9);
        assert_eq!(d8_d10.b_wins, 9);
        assert_eq!(d8_d10.a_wins, 0);
        assert_eq!(report.dominance.len(), 6);
    }

    #[test]
    fn budget_reports_cover_all_budgets() {
        let grid = embedded();
        let reports = budget_reports(&grid, TiePolicy::default());
        assert_eq!(reports.len(), 8);
        assert!(reports.iter().all(|r| r.regime.is_some()));
        let flags_24h = &reports[7].overfit;
        assert_eq!(flags_24h.len(), 5);
    }

    prop_compose! {
        fn arb_grid()(
            cells in proptest::collection::btree_set(
                (1u32..12, 0usize..5),
                3..30,
            ),
            values in proptest::collection::vec(0.5f64..3.0, 30),
        ) -> RunGrid {
            let budgets = [5.0, 15.0, 60.0, 240.0, 960.0];
            let records: Vec<RunRecord> = cells
                .iter()
                .enumerate()
                .map(|(i, &(depth, b))| {
                    RunRecord::new(depth, depth as f64 * 10.0, budgets[b], values[i])
                })
                .collect();
            RunGrid::new(records, None).unwrap()
        }
    }

    proptest! {
        #[test]
        fn optimum_never_exceeds_any_observed_value(grid in arb_grid()) {
            for budget in grid.budgets() {
                let opt = optimum_at_budget(&grid, budget, TiePolicy::default()).unwrap();
                for r in grid.records().iter().filter(|r| r.budget_min == budget) {
                    prop_assert!(opt.bpb <= r.val_bpb + 1e-12);
                }
            }
        }

        #[test]
        fn flags_shrink_as_epsilon_grows(grid in arb_grid()) {
            let tight = overfit_flags(&grid, 0.0005);
            let loose = overfit_flags(&grid, 0.005);
            prop_assert!(loose.len() <= tight.len());
            for f in &loose {
                prop_assert!(tight
                    .iter()
                    .any(|g| g.depth == f.depth && g.budget_min == f.budget_min));
            }
        }

        #[test]
        fn analysis_is_invariant_under_constant_shift(grid in arb_grid(), shift in 0.1f64..2.0) {
            let shifted = RunGrid::new(
                grid.records()
                    .iter()
                    .map(|r| {
                        let mut r = r.clone();
                        r.val_bpb += shift;
                        r
                    })
                    .collect(),
                None,
            ).unwrap();
            let a = overfit_flags(&grid, 0.0005);
            let b = overfit_flags(&shifted, 0.0005);
            prop_assert_eq!(a.len(), b.len());
            for budget in grid.budgets() {
                let oa = optimum_at_budget(&grid, budget, TiePolicy::default()).unwrap();
                let ob = optimum_at_budget(&shifted, budget, TiePolicy::default()).unwrap();
                prop_assert_eq!(oa.models, ob.models);
                if grid.records().iter().filter(|r| r.budget_min == budget).count() >= 3 {
                    prop_assert_eq!(
                        classify_regime(&grid, budget, 0.0005).unwrap(),
                        classify_regime(&shifted, budget, 0.0005).unwrap()
                    );
                }
            }
        }
    }
}
