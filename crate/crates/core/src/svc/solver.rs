//! Two-multiplier ascent on the weighted SVC dual
//!
//! ```text
//! max  D(a) = sum_i a_i - 1/2 sum_ij a_i y_i a_j y_j K_ij
//! s.t. 0 <= a_i <= C w_i,   sum_i a_i y_i = 0
//! ```
//!
//! A step moves a pair along `(da_i, da_j) = (nu y_i, -nu y_j)`, which keeps
//! `sum a y` fixed because `y^2 = 1`. Along that line
//!
//! ```text
//! dD(nu) = nu [(y_i - g_i) - (y_j - g_j)] - nu^2 eta / 2,   eta = K_ii - 2 K_ij + K_jj
//! ```
//!
//! with `g_p = sum_q a_q y_q K_pq`, so the unconstrained maximizer is
//! `nu* = [(y_i - g_i) - (y_j - g_j)] / eta`. Clipping `nu*` to the feasible
//! interval (which always contains 0) gives the constrained maximizer of a
//! concave parabola, so an accepted step never lowers `D`.

use rand::Rng;

use crate::error::{Result, WlossError};
use crate::kernel::GramCache;
use crate::rng::seeded_rng;

use super::{PairSelection, SvcParams};

/// Pairs with `eta` below this are skipped.
pub const ETA_MIN: f64 = 1e-12;
/// Clipped steps smaller than this are not applied.
pub const MIN_STEP: f64 = 1e-12;
/// Relative slack used to decide whether a multiplier sits strictly inside its box.
pub const MARGIN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    /// The pair moved by `nu`; `gain` is the increase of the dual objective.
    Accepted { nu: f64, gain: f64 },
    /// Clipped step below [`MIN_STEP`]; nothing changed.
    Stationary,
    /// `i == j` or `eta < ETA_MIN`; nothing changed.
    Degenerate,
}

impl StepOutcome {
    pub fn accepted(&self) -> bool {
        matches!(self, StepOutcome::Accepted { .. })
    }
}

/// Mutable solver state over one training problem.
#[derive(Debug, Clone)]
pub struct DualState<'a> {
    gram: &'a GramCache,
    y: &'a [f64],
    alpha: Vec<f64>,
    upper: Vec<f64>,
    g: Vec<f64>,
    objective: f64,
}

impl<'a> DualState<'a> {
    /// State at `alpha = 0`.
    pub fn new(gram: &'a GramCache, y: &'a [f64], upper: Vec<f64>) -> Result<Self> {
        let l = y.len();
        Self::with_alpha(gram, y, upper, vec![0.0; l])
    }

    /// State at a given feasible `alpha`; `g` and the objective are computed from scratch.
    pub fn with_alpha(
        gram: &'a GramCache,
        y: &'a [f64],
        upper: Vec<f64>,
        alpha: Vec<f64>,
    ) -> Result<Self> {
        let l = y.len();
        for (what, len) in [
            ("gram", gram.n()),
            ("upper bounds", upper.len()),
            ("alpha", alpha.len()),
        ] {
            if len != l {
                return Err(WlossError::LengthMismatch {
                    what,
                    expected: l,
                    found: len,
                });
            }
        }
        if let Some(v) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(WlossError::InvalidParameter(format!(
                "label {v} is not -1 or +1"
            )));
        }
        if let Some(u) = upper.iter().find(|&&u| !(u > 0.0 && u.is_finite())) {
            return Err(WlossError::InvalidParameter(format!(
                "box bound {u} is not positive"
            )));
        }
        for (a, u) in alpha.iter().zip(&upper) {
            if !(0.0..=*u).contains(a) {
                return Err(WlossError::InvalidParameter(format!(
                    "alpha {a} outside [0, {u}]"
                )));
            }
        }
        let mut state = DualState {
            gram,
            y,
            alpha,
            upper,
            g: vec![0.0; l],
            objective: 0.0,
        };
        state.refresh();
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn labels(&self) -> &[f64] {
        self.y
    }

    /// `g_i = sum_p a_p y_p K(x_i, x_p)`, maintained incrementally.
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    /// Incrementally maintained dual objective.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn into_alpha(self) -> Vec<f64> {
        self.alpha
    }

    /// Dual objective evaluated directly from `alpha` and the Gram matrix, O(l^2).
    pub fn dual_objective(&self) -> f64 {
        let l = self.len();
        let mut quad = 0.0;
        for i in 0..l {
            if self.alpha[i] == 0.0 {
                continue;
            }
            let row = self.gram.row(i);
            let ui = self.alpha[i] * self.y[i];
            for j in 0..l {
                quad += ui * self.alpha[j] * self.y[j] * row[j];
            }
        }
        self.alpha.iter().sum::<f64>() - 0.5 * quad
    }

    fn g_from_scratch(&self) -> Vec<f64> {
        let l = self.len();
        let mut g = vec![0.0; l];
        for p in 0..l {
            let up = self.alpha[p] * self.y[p];
            if up == 0.0 {
                continue;
            }
            for (gi, k) in g.iter_mut().zip(self.gram.row(p)) {
                *gi += up * k;
            }
        }
        g
    }

    /// Recomputes `g` and the objective from `alpha`. Returns the largest
    /// drift found in `g`.
    pub fn refresh(&mut self) -> f64 {
        let fresh = self.g_from_scratch();
        let drift = fresh
            .iter()
            .zip(&self.g)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        self.g = fresh;
        self.objective = self.alpha.iter().sum::<f64>()
            - 0.5
                * self
                    .alpha
                    .iter()
                    .zip(self.y)
                    .zip(&self.g)
                    .map(|((a, y), g)| a * y * g)
                    .sum::<f64>();
        drift
    }

    /// `sum_i a_i y_i`.
    pub fn equality_residual(&self) -> f64 {
        self.alpha.iter().zip(self.y).map(|(a, y)| a * y).sum()
    }

    /// `y_i - g_i`; equals the bias for a multiplier strictly inside its box at the optimum.
    #[inline]
    fn e(&self, i: usize) -> f64 {
        self.y[i] - self.g[i]
    }

    fn eta(&self, i: usize, j: usize) -> f64 {
        self.gram.get(i, i) - 2.0 * self.gram.get(i, j) + self.gram.get(j, j)
    }

    /// Unconstrained maximizer of the dual along the pair direction, or
    /// `None` when the pair is degenerate.
    pub fn nu_direction(&self, i: usize, j: usize) -> Option<f64> {
        if i == j {
            return None;
        }
        let eta = self.eta(i, j);
        if eta < ETA_MIN {
            return None;
        }
        Some((self.e(i) - self.e(j)) / eta)
    }

    /// Feasible interval of `nu` for the pair; always contains 0.
    pub fn nu_bounds(&self, i: usize, j: usize) -> (f64, f64) {
        let (ai, aj) = (self.alpha[i], self.alpha[j]);
        let (ui, uj) = (self.upper[i], self.upper[j]);
        // 0 <= a_i + nu y_i <= U_i
        let (lo_i, hi_i) = if self.y[i] > 0.0 {
            (-ai, ui - ai)
        } else {
            (ai - ui, ai)
        };
        // 0 <= a_j - nu y_j <= U_j
        let (lo_j, hi_j) = if self.y[j] > 0.0 {
            (aj - uj, aj)
        } else {
            (-aj, uj - aj)
        };
        (lo_i.max(lo_j), hi_i.min(hi_j))
    }

    /// Projects `nu` onto the feasible interval of the pair.
    pub fn clip_nu(&self, i: usize, j: usize, nu: f64) -> f64 {
        let (lo, hi) = self.nu_bounds(i, j);
        nu.clamp(lo.min(0.0), hi.max(0.0))
    }

    /// One clipped pair update.
    pub fn step(&mut self, i: usize, j: usize) -> StepOutcome {
        let Some(nu) = self.nu_direction(i, j) else {
            return StepOutcome::Degenerate;
        };
        let nu = self.clip_nu(i, j, nu);
        if nu.abs() < MIN_STEP {
            return StepOutcome::Stationary;
        }
        let gain = nu * (self.e(i) - self.e(j)) - 0.5 * nu * nu * self.eta(i, j);

        let old_i = self.alpha[i];
        let old_j = self.alpha[j];
        self.alpha[i] = (old_i + nu * self.y[i]).clamp(0.0, self.upper[i]);
        self.alpha[j] = (old_j - nu * self.y[j]).clamp(0.0, self.upper[j]);
        let du_i = (self.alpha[i] - old_i) * self.y[i];
        let du_j = (self.alpha[j] - old_j) * self.y[j];
        let (row_i, row_j) = (self.gram.row(i), self.gram.row(j));
        for ((g, ki), kj) in self.g.iter_mut().zip(row_i).zip(row_j) {
            *g += du_i * ki + du_j * kj;
        }
        self.objective += gain;

        if cfg!(debug_assertions) {
            debug_assert!(
                gain >= -1e-12 * (1.0 + self.objective.abs()),
                "dual objective decreased by {gain}"
            );
            for k in [i, j] {
                debug_assert!(
                    (0.0..=self.upper[k]).contains(&self.alpha[k]),
                    "alpha[{k}] = {} outside [0, {}]",
                    self.alpha[k],
                    self.upper[k]
                );
            }
        }
        StepOutcome::Accepted { nu, gain }
    }

    /// Largest KKT violation `max_{up} (y - g) - min_{low} (y - g)` together
    /// with the pair attaining it, where `up` holds the multipliers that can
    /// move along `+y` and `low` those that can move along `-y`.
    pub fn most_violating_pair(&self) -> Option<(usize, usize, f64)> {
        let mut best_up: Option<(usize, f64)> = None;
        let mut best_low: Option<(usize, f64)> = None;
        for i in 0..self.len() {
            let e = self.e(i);
            let (a, u, y) = (self.alpha[i], self.upper[i], self.y[i]);
            let in_up = (y > 0.0 && a < u) || (y < 0.0 && a > 0.0);
            let in_low = (y > 0.0 && a > 0.0) || (y < 0.0 && a < u);
            if in_up && best_up.is_none_or(|(_, v)| e > v) {
                best_up = Some((i, e));
            }
            if in_low && best_low.is_none_or(|(_, v)| e < v) {
                best_low = Some((i, e));
            }
        }
        match (best_up, best_low) {
            (Some((i, hi)), Some((j, lo))) => Some((i, j, hi - lo)),
            _ => None,
        }
    }

    /// Current KKT violation; non-positive at an exact optimum.
    pub fn max_violation(&self) -> f64 {
        self.most_violating_pair().map_or(0.0, |(_, _, v)| v)
    }

    /// Interval `[max_{up} (y - g), min_{low} (y - g)]` of bias values
    /// consistent with the KKT conditions.
    pub fn bias_interval(&self) -> (Option<f64>, Option<f64>) {
        let mut lower: Option<f64> = None;
        let mut upper: Option<f64> = None;
        for i in 0..self.len() {
            let e = self.e(i);
            let (a, u, y) = (self.alpha[i], self.upper[i], self.y[i]);
            if (y > 0.0 && a < u) || (y < 0.0 && a > 0.0) {
                lower = Some(lower.map_or(e, |v: f64| v.max(e)));
            }
            if (y > 0.0 && a > 0.0) || (y < 0.0 && a < u) {
                upper = Some(upper.map_or(e, |v: f64| v.min(e)));
            }
        }
        (lower, upper)
    }

    /// Bias from the margin support vectors (`0 < a_i < C w_i`), or the
    /// midpoint of the KKT interval when there are none.
    pub fn compute_bias(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..self.len() {
            let tol = MARGIN_TOL * self.upper[i];
            if self.alpha[i] > tol && self.alpha[i] < self.upper[i] - tol {
                sum += self.e(i);
                count += 1;
            }
        }
        if count > 0 {
            return sum / count as f64;
        }
        match self.bias_interval() {
            (Some(lo), Some(hi)) => 0.5 * (lo + hi),
            (Some(v), None) | (None, Some(v)) => v,
            (None, None) => 0.0,
        }
    }

    fn assert_equality(&self) {
        let scale = self.alpha.iter().sum::<f64>().max(1.0);
        let r = self.equality_residual();
        debug_assert!(
            r.abs() <= 1e-10 * scale,
            "equality constraint drifted to {r} (scale {scale})"
        );
    }
}

/// Result of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub alpha: Vec<f64>,
    pub g: Vec<f64>,
    pub b: f64,
    pub objective: f64,
    /// Attempted pair iterations.
    pub iterations: u64,
    pub accepted_steps: u64,
    /// True when the run stopped because the KKT violation fell below tolerance.
    pub converged: bool,
    pub max_violation: f64,
}

fn random_pair<R: Rng>(rng: &mut R, l: usize) -> (usize, usize) {
    let i = rng.gen_range(0..l);
    let mut j = rng.gen_range(0..l - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

/// Runs the pair iterations from `alpha = 0` and recovers the bias.
pub fn solve(gram: &GramCache, y: &[f64], upper: Vec<f64>, params: &SvcParams) -> Result<Solution> {
    let l = y.len();
    if l < 2 {
        return Err(WlossError::InvalidParameter(format!(
            "need at least 2 samples, got {l}"
        )));
    }
    let mut state = DualState::new(gram, y, upper)?;
    let budget = params.budget(l);
    let refresh_every = (l * l) as u64;
    let check_every = l as u64;
    let mut rng = seeded_rng(params.seed);
    let mut iterations = 0u64;
    let mut accepted_steps = 0u64;
    let mut converged = false;

    while iterations < budget {
        let outcome = match params.pair_selection {
            PairSelection::Random => {
                if params.early_stop
                    && iterations.is_multiple_of(check_every)
                    && state.max_violation() < params.kkt_tolerance
                {
                    converged = true;
                    break;
                }
                let (i, j) = random_pair(&mut rng, l);
                state.step(i, j)
            }
            PairSelection::MaxViolating => {
                let Some((i, j, violation)) = state.most_violating_pair() else {
                    converged = true;
                    break;
                };
                if params.early_stop && violation < params.kkt_tolerance {
                    converged = true;
                    break;
                }
                let outcome = state.step(i, j);
                if !outcome.accepted() {
                    // the greedy pair cannot move, and the selection is deterministic
                    iterations += 1;
                    break;
                }
                outcome
            }
        };
        iterations += 1;
        if outcome.accepted() {
            accepted_steps += 1;
            if cfg!(debug_assertions) && iterations.is_multiple_of(check_every) {
                state.assert_equality();
            }
        }
        if iterations.is_multiple_of(refresh_every) {
            let drift = state.refresh();
            let scale = state.g().iter().fold(1.0f64, |m, v| m.max(v.abs()));
            debug_assert!(drift <= 1e-8 * scale, "g drifted by {drift}");
        }
    }
    if cfg!(debug_assertions) {
        state.assert_equality();
    }
    state.refresh();
    let b = state.compute_bias();
    let max_violation = state.max_violation();
    let objective = state.objective();
    let g = state.g().to_vec();
    Ok(Solution {
        alpha: state.into_alpha(),
        g,
        b,
        objective,
        iterations,
        accepted_steps,
        converged,
        max_violation,
    })
}
