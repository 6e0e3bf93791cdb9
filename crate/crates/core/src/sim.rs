//! Mechanistic simulator of the dual U-shape: an irreducible floor plus a
//! capacity term A/N^a and a data term B/D_eff^b, where effective data
//! saturates under repetition, plus an explicit overfitting penalty
//! γ·max(0, R−R0)^p on the repetition overage R.
//!
//! The penalty term is a design decision of this module: floor plus
//! capacity plus saturating data alone is monotone non-increasing in
//! training time and can never reproduce the observed late-budget
//! degradation of mid-sized models. Simulated outputs are "bpb-like"; no
//! unit-exact BPB semantics are claimed.

use crate::domain::{DomainError, ModelConfig, RunGrid, RunRecord};
use crate::hardware::{self, HardwareError, HardwareProfile};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulator parameter {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("u_tokens must be a positive token count")]
    ZeroUniqueData,
    #[error("sweep needs non-empty budgets and configs")]
    EmptySweep,
    #[error(transparent)]
    Hardware(#[from] HardwareError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Sentinel for "unlimited unique data": repetition never kicks in.
pub const UNLIMITED_DATA: u64 = u64::MAX;

/// Mechanism parameters. `u_tokens` and `r_star` describe the dataset
/// (unique size and repetition decay); the rest shape the loss surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Irreducible loss floor E.
    pub e_floor: f64,
    /// Capacity term numerator A in A/N^a (N in raw parameters).
    pub a_n: f64,
    /// Capacity exponent a.
    pub exp_n: f64,
    /// Data term numerator B in B/D_eff^b (D_eff in tokens).
    pub b_d: f64,
    /// Data exponent b.
    pub exp_d: f64,
    /// Unique data size U in tokens ([`UNLIMITED_DATA`] disables
    /// repetition effects).
    pub u_tokens: u64,
    /// Repetition decay constant R*.
    pub r_star: f64,
    /// Overfitting penalty scale γ (0 disables the penalty).
    pub gamma: f64,
    /// Penalty onset R0 in repetition overage units.
    pub r0: f64,
    /// Penalty exponent p ≥ 1.
    pub p_exp: f64,
}

/// Calibrated parameter vector order (u_tokens is not part of it).
const NAMES: [&str; 9] = [
    "e_floor", "a_n", "exp_n", "b_d", "exp_d", "r_star", "gamma", "r0", "p_exp",
];
const P_EXP: usize = 8;
/// Coordinates moved by `calibrate`: everything except r_star (index 5),
/// which is pinned as a dataset constant alongside u_tokens.
const CALIBRATED: [usize; 8] = [0, 1, 2, 3, 4, 6, 7, 8];

impl SimParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let positives = [
            ("e_floor", self.e_floor),
            ("a_n", self.a_n),
            ("exp_n", self.exp_n),
            ("b_d", self.b_d),
            ("exp_d", self.exp_d),
            ("r_star", self.r_star),
        ];
        for (name, value) in positives {
            if !(value > 0.0) || !value.is_finite() {
                return Err(SimError::InvalidParam { name, value });
            }
        }
        if self.u_tokens == 0 {
            return Err(SimError::ZeroUniqueData);
        }
        for (name, value) in [("gamma", self.gamma), ("r0", self.r0)] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(SimError::InvalidParam { name, value });
            }
        }
        if !(self.p_exp >= 1.0) || !self.p_exp.is_finite() {
            return Err(SimError::InvalidParam {
                name: "p_exp",
                value: self.p_exp,
            });
        }
        Ok(())
    }

    fn to_vec(&self) -> [f64; 9] {
        [
            self.e_floor, self.a_n, self.exp_n, self.b_d, self.exp_d, self.r_star, self.gamma,
            self.r0, self.p_exp,
        ]
    }

    fn with_vec(&self, v: &[f64; 9]) -> SimParams {
        SimParams {
            e_floor: v[0],
            a_n: v[1],
            exp_n: v[2],
            b_d: v[3],
            exp_d: v[4],
            u_tokens: self.u_tokens,
            r_star: v[5],
            gamma: v[6],
            r0: v[7],
            p_exp: v[8],
        }
    }

    /// A mild, hand-chosen starting point for calibration against the
    /// embedded grid: floor near the observed late-budget losses, capacity
    /// and data terms sized to contribute ~0.2 at mid-range scales, a weak
    /// penalty switched on past 250 repetition overage units.
    pub fn initial_guess() -> SimParams {
        SimParams {
            e_floor: 0.55,
            a_n: 0.18 * 150.0e6f64.powf(0.45),
            exp_n: 0.45,
            b_d: 0.25 * 300.0e6f64.powf(0.30),
            exp_d: 0.30,
            u_tokens: 48_000_000,
            r_star: 4.5,
            gamma: 2.2e-4,
            r0: 250.0,
            p_exp: 1.0,
        }
    }

    /// Parameters produced by `calibrate(initial_guess(), embedded grid,
    /// fitted built-in profile, max_iters = 4000, seed = 7)` and committed
    /// as literals; regression-checked against [`SHIPPED_RMSE`].
    pub fn shipped_defaults() -> SimParams {
        SimParams {
            e_floor: 2.301_249_649_872_232e-15,
            a_n: 1.295_913_848_047_565_6e2,
            exp_n: 3.724_310_217_703_301e-1,
            b_d: 8.832_477_055_346_861e1,
            exp_d: 2.443_558_398_300_895e-1,
            u_tokens: 48_000_000,
            r_star: 4.5,
            gamma: 3.356_933_593_75e-5,
            r0: 400.0,
            p_exp: 1.0,
        }
    }
}

/// Root-mean-square error of [`SimParams::shipped_defaults`] against the
/// embedded grid, frozen from the calibration run that produced them
/// (initial RMSE 0.14926..., 3021 sweeps, converged).
pub const SHIPPED_RMSE: f64 = 4.395_777_108_152_89e-2;

fn u_as_f64(u_tokens: u64) -> f64 {
    if u_tokens == UNLIMITED_DATA {
        f64::INFINITY
    } else {
        u_tokens as f64
    }
}

/// Effective data after repetition discounting. Up to one epoch every
/// token counts; beyond it, value saturates exponentially toward the
/// ceiling u·(1 + r_star). Continuous and non-decreasing in `tokens`.
pub fn effective_data(tokens: f64, u_tokens: u64, r_star: f64) -> f64 {
    let u = u_as_f64(u_tokens);
    if tokens <= u {
        return tokens;
    }
    let r = tokens / u - 1.0;
    u * (1.0 + r_star * (1.0 - (-r / r_star).exp()))
}

/// The mechanism's loss at a size and a raw token count, independent of
/// any throughput model. This is the ceteris-paribus object for
/// monotonicity claims: with gamma = 0 and unlimited data it is strictly
/// decreasing in both `params_m` (at fixed tokens) and `tokens` (at fixed
/// size). Under a real throughput profile, larger models process fewer
/// tokens per minute, so wall-clock comparisons must go through
/// [`simulated_loss`] instead.
pub fn loss_at_tokens(params_m: f64, tokens: f64, sim: &SimParams) -> f64 {
    let u = u_as_f64(sim.u_tokens);
    let de = effective_data(tokens, sim.u_tokens, sim.r_star);
    let r = (tokens / u - 1.0).max(0.0);
    let penalty = sim.gamma * (r - sim.r0).max(0.0).powf(sim.p_exp);
    sim.e_floor
        + sim.a_n / (params_m * 1.0e6).powf(sim.exp_n)
        + sim.b_d / de.powf(sim.exp_d)
        + penalty
}

/// Simulated BPB-like loss for an N-million-parameter model trained for
/// `budget_min` minutes on `profile`'s hardware.
pub fn simulated_loss(
    params_m: f64,
    budget_min: f64,
    sim: &SimParams,
    profile: &HardwareProfile,
) -> Result<f64, SimError> {
    let tokens = hardware::tokens_processed(profile, params_m, budget_min)?;
    Ok(loss_at_tokens(params_m, tokens, sim))
}

/// A simulated run grid plus the inputs that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    pub grid: RunGrid,
    pub params_used: SimParams,
    pub profile_used: HardwareProfile,
}

/// Simulate every (config, budget) cell. The result's grid carries the
/// simulator's unique-data size (when finite) so downstream analyses see
/// the same schema as measured grids.
pub fn sweep(
    sim: &SimParams,
    profile: &HardwareProfile,
    budgets: &[f64],
    configs: &[ModelConfig],
) -> Result<SimResult, SimError> {
    if budgets.is_empty() || configs.is_empty() {
        return Err(SimError::EmptySweep);
    }
    sim.validate()?;
    let mut records = Vec::with_capacity(budgets.len() * configs.len());
    for config in configs {
        for &budget in budgets {
            let bpb = simulated_loss(config.params_m, budget, sim, profile)?;
            records.push(RunRecord::new(config.depth, config.params_m, budget, bpb));
        }
    }
    let dataset_tokens = (sim.u_tokens != UNLIMITED_DATA).then_some(sim.u_tokens);
    Ok(SimResult {
        grid: RunGrid::new(records, dataset_tokens)?,
        params_used: sim.clone(),
        profile_used: profile.clone(),
    })
}

/// Calibration outcome: best parameters found, their RMSE against the
/// reference cells, and how the search ended.
#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub params: SimParams,
    pub rmse: f64,
    pub initial_rmse: f64,
    pub sweeps: usize,
    /// False when `max_iters` ran out before the step factor shrank away.
    pub converged: bool,
}

/// Fit the mechanism to a reference grid by derivative-free coordinate
/// descent in multiplicative steps, with a pattern (net-direction)
/// acceleration after each improving sweep and step shrinking after each
/// failed one. Deterministic given `seed`. u_tokens and r_star are pinned
/// dataset constants; the remaining 8 coordinates move. Candidates with
/// non-finite error are rejected and the search continues; the returned
/// parameters always satisfy [`SimParams::validate`].
pub fn calibrate(
    initial: &SimParams,
    reference: &RunGrid,
    profile: &HardwareProfile,
    max_iters: usize,
    seed: u64,
) -> Result<Calibration, SimError> {
    initial.validate()?;
    // Throughput does not depend on SimParams, so token counts per cell
    // are precomputed once.
    let cells: Vec<(f64, f64, f64)> = reference
        .records()
        .iter()
        .map(|r| {
            hardware::tokens_processed(profile, r.params_m, r.budget_min)
                .map(|tokens| (r.params_m, tokens, r.val_bpb))
        })
        .collect::<Result<_, _>>()?;
    let n_cells = cells.len() as f64;
    let rmse_of = |v: &[f64; 9]| -> f64 {
        let p = initial.with_vec(v);
        let mut sum = 0.0;
        for &(params_m, tokens, target) in &cells {
            let d = loss_at_tokens(params_m, tokens, &p) - target;
            sum += d * d;
        }
        (sum / n_cells).sqrt()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = initial.to_vec();
    let mut best_r = rmse_of(&best);
    let initial_rmse = best_r;
    let mut factor: f64 = 1.6;
    let mut it = 0usize;
    const C: f64 = 1e-3;
    while it < max_iters && factor - 1.0 > 1e-12 {
        it += 1;
        let mut accepted = false;
        let prev = best;
        let mut order = CALIBRATED;
        order.shuffle(&mut rng);
        // Require improvements proportional to the squared step size so
        // late, tiny steps cannot churn on float noise.
        let thresh = C * (factor - 1.0) * (factor - 1.0);
        for &i in &order {
            for mult in [factor, 1.0 / factor] {
                loop {
                    let mut cand = best;
                    cand[i] = best[i] * mult;
                    if NAMES[i] == "p_exp" {
                        cand[i] = cand[i].max(1.0);
                    }
                    let r = rmse_of(&cand);
                    if r.is_finite() && r < best_r - thresh * best_r {
                        let clamped = NAMES[i] == "p_exp" && cand[i] == 1.0;
                        best = cand;
                        best_r = r;
                        accepted = true;
                        if clamped {
                            break;
                        }
                    } else {
                        break;
                    }
                }
            }
        }
        if accepted {
            // Pattern move: ride the sweep's net multiplicative direction
            // while it keeps paying.
            let mut ratio = [1.0f64; 9];
            for i in 0..9 {
                if prev[i] != 0.0 {
                    ratio[i] = best[i] / prev[i];
                }
            }
            if ratio.iter().any(|x| (x - 1.0).abs() > 1e-15) {
                loop {
                    let mut cand = [0.0f64; 9];
                    for i in 0..9 {
                        cand[i] = best[i] * ratio[i];
                    }
                    if cand[P_EXP] < 1.0 {
                        cand[P_EXP] = 1.0;
                    }
                    let r = rmse_of(&cand);
                    if r.is_finite() && r < best_r - thresh * best_r {
                        best = cand;
                        best_r = r;
                    } else {
                        break;
                    }
                }
            }
        } else {
            factor = factor.sqrt();
        }
    }
    let params = initial.with_vec(&best);
    params.validate()?;
    Ok(Calibration {
        params,
        rmse: best_r,
        initial_rmse,
        sweeps: it,
        converged: factor - 1.0 <= 1e-12,
    })
}
