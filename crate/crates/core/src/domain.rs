//! Core value types shared by every analysis stage: model configurations in
//! the DEPTH parameterization, run observations, observation grids, and
//! power-law fit results.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("depth must be a positive integer, got {0}")]
    InvalidDepth(i64),
    #[error("run grid must contain at least one record")]
    EmptyGrid,
    #[error("record {index}: {field} must be positive, got {value}")]
    NonPositiveField {
        index: usize,
        field: &'static str,
        value: f64,
    },
    #[error("depth {depth} maps to conflicting parameter counts {a} and {b}")]
    ConflictingParams { depth: u32, a: f64, b: f64 },
    #[error("duplicate record for ({model_id}, {budget_min}min, seed {seed:?})")]
    DuplicateRecord {
        model_id: String,
        budget_min: f64,
        seed: Option<i64>,
    },
    #[error("config table: params_m must be strictly increasing in depth")]
    ParamsNotIncreasing,
    #[error("config table: tokens_per_sec must be strictly decreasing in depth")]
    ThroughputNotDecreasing,
}

/// Derive the full architecture shape from the single DEPTH parameter:
/// `(layers, dim, heads, head_dim)` with layers = heads = depth, dim = 64·depth.
pub fn derive_dims(depth: u32) -> Result<(u32, u32, u32, u32), DomainError> {
    if depth == 0 {
        return Err(DomainError::InvalidDepth(0));
    }
    Ok((depth, 64 * depth, depth, 64))
}

/// One architecture row: DEPTH-derived dimensions plus measured metadata.
///
/// `params_m` is always a measured value, never derived from `depth` — the
/// parameterization fixes shapes, not parameter counts (embedding and head
/// terms are configuration-dependent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub depth: u32,
    pub layers: u32,
    pub dim: u32,
    pub heads: u32,
    pub head_dim: u32,
    /// Parameters in millions, measured.
    pub params_m: f64,
    /// False when the source reports the count only approximately.
    pub params_exact: bool,
    pub tokens_per_sec: Option<f64>,
    pub mfu_pct: Option<f64>,
}

impl ModelConfig {
    pub fn from_depth(
        depth: u32,
        params_m: f64,
        params_exact: bool,
        tokens_per_sec: Option<f64>,
        mfu_pct: Option<f64>,
    ) -> Result<Self, DomainError> {
        let (layers, dim, heads, head_dim) = derive_dims(depth)?;
        if !(params_m > 0.0) {
            return Err(DomainError::NonPositiveField {
                index: 0,
                field: "params_m",
                value: params_m,
            });
        }
        Ok(ModelConfig {
            depth,
            layers,
            dim,
            heads,
            head_dim,
            params_m,
            params_exact,
            tokens_per_sec,
            mfu_pct,
        })
    }

    pub fn model_id(&self) -> String {
        format!("D{}", self.depth)
    }
}

/// Width divided by depth; 64 for every DEPTH-parameterized configuration.
pub fn aspect_ratio(config: &ModelConfig) -> f64 {
    config.dim as f64 / config.layers as f64
}

/// Validate a config table: params strictly increasing in depth and
/// throughput strictly decreasing where present.
pub fn validate_config_table(configs: &[ModelConfig]) -> Result<(), DomainError> {
    for pair in configs.windows(2) {
        if pair[1].depth > pair[0].depth && pair[1].params_m <= pair[0].params_m {
            return Err(DomainError::ParamsNotIncreasing);
        }
        if let (Some(a), Some(b)) = (pair[0].tokens_per_sec, pair[1].tokens_per_sec) {
            if pair[1].depth > pair[0].depth && b >= a {
                return Err(DomainError::ThroughputNotDecreasing);
            }
        }
    }
    Ok(())
}

/// One observation: a model trained for a wall-clock budget, with its
/// validation loss in bits per byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model_id: String,
    pub depth: u32,
    /// Parameters in millions.
    pub params_m: f64,
    /// Wall-clock budget in minutes.
    pub budget_min: f64,
    pub val_bpb: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<i64>,
    #[serde(default = "default_architecture")]
    pub architecture: String,
}

fn default_architecture() -> String {
    "dense".to_owned()
}

impl RunRecord {
    pub fn new(depth: u32, params_m: f64, budget_min: f64, val_bpb: f64) -> Self {
        RunRecord {
            model_id: format!("D{depth}"),
            depth,
            params_m,
            budget_min,
            val_bpb,
            seed: None,
            architecture: default_architecture(),
        }
    }

    pub fn with_seed(mut self, seed: i64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// A collection of run observations plus optional dataset metadata.
///
/// Construction validates the invariants: non-empty, positive budget/BPB,
/// at most one `params_m` per depth, and uniqueness of
/// `(model_id, budget_min, seed)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunGrid {
    records: Vec<RunRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_tokens: Option<u64>,
}

impl RunGrid {
    pub fn new(
        mut records: Vec<RunRecord>,
        dataset_tokens: Option<u64>,
    ) -> Result<Self, DomainError> {
        if records.is_empty() {
            return Err(DomainError::EmptyGrid);
        }
        for (i, r) in records.iter().enumerate() {
            if !(r.val_bpb > 0.0) {
                return Err(DomainError::NonPositiveField {
                    index: i,
                    field: "val_bpb",
                    value: r.val_bpb,
                });
            }
            if !(r.budget_min > 0.0) {
                return Err(DomainError::NonPositiveField {
                    index: i,
                    field: "budget_min",
                    value: r.budget_min,
                });
            }
            if !(r.params_m > 0.0) {
                return Err(DomainError::NonPositiveField {
                    index: i,
                    field: "params_m",
                    value: r.params_m,
                });
            }
        }
        records.sort_by(|a, b| {
            a.depth
                .cmp(&b.depth)
                .then(a.budget_min.total_cmp(&b.budget_min))
                .then(a.seed.cmp(&b.seed))
        });
        let mut params_of: Vec<(u32, f64)> = Vec::new();
        for r in &records {
            match params_of.iter().find(|(d, _)| *d == r.depth) {
                Some((_, p)) if *p != r.params_m => {
                    return Err(DomainError::ConflictingParams {
                        depth: r.depth,
                        a: *p,
                        b: r.params_m,
                    })
                }
                None => params_of.push((r.depth, r.params_m)),
                _ => {}
            }
        }
        for pair in records.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.model_id == b.model_id && a.budget_min == b.budget_min && a.seed == b.seed {
                return Err(DomainError::DuplicateRecord {
                    model_id: a.model_id.clone(),
                    budget_min: a.budget_min,
                    seed: a.seed,
                });
            }
        }
        Ok(RunGrid {
            records,
            dataset_tokens,
        })
    }

    pub fn records(&self) -> &[RunRecord] {
        &self.records
    }

    /// Distinct budgets, ascending.
    pub fn budgets(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.budget_min) {
                out.push(r.budget_min);
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// Distinct depths, ascending.
    pub fn depths(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self.records.iter().map(|r| r.depth).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn params_of(&self, depth: u32) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.depth == depth)
            .map(|r| r.params_m)
    }

    /// All records at a budget (every seed).
    pub fn at_budget(&self, budget_min: f64) -> Vec<&RunRecord> {
        self.records
            .iter()
            .filter(|r| r.budget_min == budget_min)
            .collect()
    }

    /// Single-seed lookup of the observation for (depth, budget); with
    /// multiple seeds present the lowest-seed record wins.
    pub fn bpb(&self, depth: u32, budget_min: f64) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.depth == depth && r.budget_min == budget_min)
            .map(|r| r.val_bpb)
    }
}

/// A fitted y = a·x^α relation with log-space goodness of fit and a 95%
/// confidence interval on the exponent.
///
/// For two-point fits the residual degrees of freedom are zero: the standard
/// error is reported as +∞ and the interval degenerates to (−∞, +∞). A
/// zero-variance response leaves R² undefined (NaN), serialized as null.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    pub coeff_a: f64,
    pub exponent_alpha: f64,
    pub r2: f64,
    pub stderr_alpha: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub n_points: usize,
    pub x_unit: String,
    pub y_unit: String,
}

impl PowerLawFit {
    /// True when the interval carries no information (two-point fit).
    pub fn degenerate_ci(&self) -> bool {
        self.ci95_low.is_infinite() || self.ci95_high.is_infinite()
    }
}

impl Serialize for PowerLawFit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        fn finite_or_none(v: f64) -> Option<f64> {
            v.is_finite().then_some(v)
        }
        let mut st = s.serialize_struct("PowerLawFit", 8)?;
        st.serialize_field("coeff_a", &self.coeff_a)?;
        st.serialize_field("exponent_alpha", &self.exponent_alpha)?;
        st.serialize_field("r2", &finite_or_none(self.r2))?;
        st.serialize_field("stderr_alpha", &finite_or_none(self.stderr_alpha))?;
        st.serialize_field(
            "ci95",
            &[finite_or_none(self.ci95_low), finite_or_none(self.ci95_high)],
        )?;
        st.serialize_field("n_points", &self.n_points)?;
        st.serialize_field("x_unit", &self.x_unit)?;
        st.serialize_field("y_unit", &self.y_unit)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_dims_matches_parameterization() {
        assert_eq!(derive_dims(8).unwrap(), (8, 512, 8, 64));
        assert_eq!(derive_dims(1).unwrap(), (1, 64, 1, 64));
        assert_eq!(derive_dims(26).unwrap(), (26, 1664, 26, 64));
    }

    #[test]
    fn derive_dims_rejects_zero() {
        assert_eq!(derive_dims(0), Err(DomainError::InvalidDepth(0)));
    }

    #[test]
    fn aspect_ratio_is_always_64_for_derived_configs() {
        for depth in [8u32, 12, 26, 1, 100] {
            let c = ModelConfig::from_depth(depth, 1.0, true, None, None).unwrap();
            assert_eq!(aspect_ratio(&c), 64.0);
        }
    }

    #[test]
    fn aspect_ratio_hand_built() {
        let mut c = ModelConfig::from_depth(4, 1.0, true, None, None).unwrap();
        c.dim = 128;
        assert_eq!(aspect_ratio(&c), 32.0);
    }

    #[test]
    fn grid_rejects_empty() {
        assert_eq!(RunGrid::new(vec![], None), Err(DomainError::EmptyGrid));
    }

    #[test]
    fn grid_rejects_duplicates() {
        let r = RunRecord::new(8, 50.3, 5.0, 1.133).with_seed(42);
        let err = RunGrid::new(vec![r.clone(), r], None).unwrap_err();
        assert!(matches!(err, DomainError::DuplicateRecord { .. }));
    }

    #[test]
    fn grid_rejects_conflicting_params() {
        let a = RunRecord::new(8, 50.3, 5.0, 1.1);
        let b = RunRecord::new(8, 51.0, 30.0, 1.0);
        let err = RunGrid::new(vec![a, b], None).unwrap_err();
        assert!(matches!(err, DomainError::ConflictingParams { .. }));
    }

    #[test]
    fn budgets_sorted_and_distinct() {
        let grid = RunGrid::new(
            vec![
                RunRecord::new(8, 50.3, 30.0, 1.0),
                RunRecord::new(8, 50.3, 5.0, 1.1),
                RunRecord::new(10, 85.9, 30.0, 0.98),
            ],
            None,
        )
        .unwrap();
        assert_eq!(grid.budgets(), vec![5.0, 30.0]);
        assert_eq!(grid.depths(), vec![8, 10]);
    }

    #[test]
    fn fit_serializes_ci_as_array_and_nan_as_null() {
        let fit = PowerLawFit {
            coeff_a: 2.0,
            exponent_alpha: 0.5,
            r2: f64::NAN,
            stderr_alpha: f64::INFINITY,
            ci95_low: f64::NEG_INFINITY,
            ci95_high: f64::INFINITY,
            n_points: 2,
            x_unit: "min".into(),
            y_unit: "params_m".into(),
        };
        let json = serde_json::to_string(&fit).unwrap();
        assert!(json.contains("\"ci95\":[null,null]"));
        assert!(json.contains("\"r2\":null"));
        assert!(json.contains("\"stderr_alpha\":null"));
    }
}
