//! Weighted kernel SVC.
//!
//! Every sample gets its own box `0 <= a_i <= C w_i`; with all weights equal
//! to one this is the ordinary C-SVM. Training builds the RBF Gram matrix,
//! runs the pair solver in [`solver`] and keeps the samples with `a_i > 0`.

mod model;
pub mod solver;

pub use model::{SupportVector, SvcModel, TrainingMeta};
pub use solver::{solve, DualState, Solution, StepOutcome};

use crate::dataset::has_both_classes;
use crate::error::{Result, WlossError};
use crate::kernel::{check_gamma, gram, GramCache};
use crate::rng::DEFAULT_SOLVER_SEED;
use crate::weighting::SampleWeights;

/// How the next pair of multipliers is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSelection {
    /// Uniformly random distinct pair from the seeded generator.
    Random,
    /// The pair with the largest KKT violation.
    MaxViolating,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvcParams {
    pub c: f64,
    pub gamma_k: f64,
    /// The iteration budget is `ceil(iter_multiplier * l^2)` unless
    /// `max_iterations` is set.
    pub iter_multiplier: f64,
    pub max_iterations: Option<u64>,
    pub early_stop: bool,
    pub kkt_tolerance: f64,
    pub pair_selection: PairSelection,
    pub seed: u64,
}

impl SvcParams {
    pub fn new(c: f64, gamma_k: f64) -> Self {
        SvcParams {
            c,
            gamma_k,
            iter_multiplier: 50.0,
            max_iterations: None,
            early_stop: false,
            kkt_tolerance: 1e-3,
            pair_selection: PairSelection::Random,
            seed: DEFAULT_SOLVER_SEED,
        }
    }

    pub fn with_early_stop(mut self, tolerance: f64) -> Self {
        self.early_stop = true;
        self.kkt_tolerance = tolerance;
        self
    }

    pub fn with_pair_selection(mut self, selection: PairSelection) -> Self {
        self.pair_selection = selection;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_iter_multiplier(mut self, m: f64) -> Self {
        self.iter_multiplier = m;
        self
    }

    pub fn with_max_iterations(mut self, n: u64) -> Self {
        self.max_iterations = Some(n);
        self
    }

    pub fn budget(&self, l: usize) -> u64 {
        self.max_iterations
            .unwrap_or_else(|| (self.iter_multiplier * (l * l) as f64).ceil() as u64)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(WlossError::InvalidParameter(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        check_gamma(self.gamma_k, "gamma_k")?;
        if !(self.iter_multiplier > 0.0 && self.iter_multiplier.is_finite()) {
            return Err(WlossError::InvalidParameter(format!(
                "iteration multiplier must be positive, got {}",
                self.iter_multiplier
            )));
        }
        if self.kkt_tolerance.is_nan() || self.kkt_tolerance < 0.0 {
            return Err(WlossError::InvalidParameter(format!(
                "KKT tolerance must be non-negative, got {}",
                self.kkt_tolerance
            )));
        }
        Ok(())
    }
}

/// Fits a weighted SVC on `x`, `y` (labels `±1`).
pub fn train<S: AsRef<[f64]>>(
    x: &[S],
    y: &[f64],
    params: &SvcParams,
    weights: &SampleWeights,
) -> Result<SvcModel> {
    params.validate()?;
    check_problem(x.len(), y, weights)?;
    let gram = gram(x, params.gamma_k)?;
    train_with_gram(&gram, x, y, params, weights)
}

fn check_problem(l: usize, y: &[f64], weights: &SampleWeights) -> Result<()> {
    if y.len() != l {
        return Err(WlossError::LengthMismatch {
            what: "labels",
            expected: l,
            found: y.len(),
        });
    }
    if weights.len() != l {
        return Err(WlossError::LengthMismatch {
            what: "weights",
            expected: l,
            found: weights.len(),
        });
    }
    if l < 2 {
        return Err(WlossError::InvalidParameter(format!(
            "need at least 2 samples, got {l}"
        )));
    }
    if let Some(v) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(WlossError::InvalidParameter(format!(
            "label {v} is not -1 or +1"
        )));
    }
    if !has_both_classes(y.iter().copied()) {
        return Err(WlossError::SingleClass);
    }
    if let Some(w) = weights
        .values
        .iter()
        .find(|&&w| !(w > 0.0 && w.is_finite()))
    {
        return Err(WlossError::InvalidParameter(format!(
            "weight {w} is not positive"
        )));
    }
    Ok(())
}

/// Same as [`train`] with a precomputed Gram matrix of `x` at `params.gamma_k`.
pub fn train_with_gram<S: AsRef<[f64]>>(
    gram: &GramCache,
    x: &[S],
    y: &[f64],
    params: &SvcParams,
    weights: &SampleWeights,
) -> Result<SvcModel> {
    params.validate()?;
    check_problem(x.len(), y, weights)?;
    if gram.n() != x.len() {
        return Err(WlossError::LengthMismatch {
            what: "gram",
            expected: x.len(),
            found: gram.n(),
        });
    }
    if gram.gamma() != params.gamma_k {
        return Err(WlossError::InvalidParameter(format!(
            "gram computed with gamma {} but gamma_k is {}",
            gram.gamma(),
            params.gamma_k
        )));
    }
    let upper: Vec<f64> = weights.values.iter().map(|w| params.c * w).collect();
    let sol = solve(gram, y, upper, params)?;

    let support = x
        .iter()
        .zip(y)
        .zip(&sol.alpha)
        .filter(|(_, &a)| a > 0.0)
        .map(|((xi, &yi), &a)| SupportVector {
            features: xi.as_ref().to_vec(),
            y: yi,
            alpha: a,
        })
        .collect();
    let dim = x[0].as_ref().len();
    Ok(SvcModel {
        support,
        b: sol.b,
        gamma_k: params.gamma_k,
        dim,
        meta: TrainingMeta {
            c: params.c,
            scheme: weights.scheme,
            gamma_s: weights.gamma_s,
            solver_seed: params.seed,
            weight_seed: weights.seed,
            iterations: sol.iterations,
            objective: sol.objective,
            converged: sol.converged,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weighting::{make_weights, Scheme};

    fn four_points() -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            vec![
                vec![0.0, 0.0],
                vec![0.3, 0.1],
                vec![2.0, 2.0],
                vec![2.2, 1.7],
            ],
            vec![-1.0, -1.0, 1.0, 1.0],
        )
    }

    #[test]
    fn two_point_problem_is_classified() {
        let r = (2.0f64.ln()).sqrt();
        let x = vec![vec![0.0], vec![r]];
        let y = vec![1.0, -1.0];
        let params = SvcParams::new(10.0, 1.0).with_early_stop(1e-9);
        let m = train(&x, &y, &params, &SampleWeights::uniform(2)).unwrap();
        assert_eq!(m.support.len(), 2);
        for sv in &m.support {
            assert!((sv.alpha - 2.0).abs() < 1e-9);
        }
        assert!(m.b.abs() < 1e-9);
        assert_eq!(m.predict(&x[0]).unwrap(), 1.0);
        assert_eq!(m.predict(&x[1]).unwrap(), -1.0);
        // on the margin: y f(x) = 1
        assert!((m.decision_function(&x[0]).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_single_class() {
        let x = vec![vec![0.0], vec![1.0]];
        let err = train(
            &x,
            &[1.0, 1.0],
            &SvcParams::new(1.0, 1.0),
            &SampleWeights::uniform(2),
        );
        assert!(matches!(err, Err(WlossError::SingleClass)));
    }

    #[test]
    fn rejects_wrong_weight_length() {
        let (x, y) = four_points();
        let err = train(
            &x,
            &y,
            &SvcParams::new(1.0, 1.0),
            &SampleWeights::uniform(3),
        );
        assert!(matches!(
            err,
            Err(WlossError::LengthMismatch {
                what: "weights",
                ..
            })
        ));
    }

    #[test]
    fn rejects_bad_params() {
        let (x, y) = four_points();
        let w = SampleWeights::uniform(4);
        assert!(train(&x, &y, &SvcParams::new(0.0, 1.0), &w).is_err());
        assert!(train(&x, &y, &SvcParams::new(1.0, -1.0), &w).is_err());
    }

    #[test]
    fn vanishing_capacity_gives_constant_decision() {
        let (x, y) = four_points();
        let params = SvcParams::new(1e-9, 1.0).with_early_stop(1e-12);
        let m = train(&x, &y, &params, &SampleWeights::uniform(4)).unwrap();
        let vals: Vec<f64> = x.iter().map(|p| m.decision_function(p).unwrap()).collect();
        for v in &vals {
            assert!((v - m.b).abs() < 1e-8);
        }
        assert!(m.support.iter().all(|sv| sv.alpha <= 1e-9));
    }

    #[test]
    fn weighted_training_records_metadata() {
        let (x, y) = four_points();
        let dv = crate::weighting::density(&x, 0.5).unwrap();
        let w = make_weights(4, Some(&dv), Scheme::Inv, 0).unwrap();
        let params = SvcParams::new(3.0, 1.0)
            .with_seed(5)
            .with_iter_multiplier(10.0);
        let m = train(&x, &y, &params, &w).unwrap();
        assert_eq!(m.meta.scheme, Scheme::Inv);
        assert_eq!(m.meta.gamma_s, Some(0.5));
        assert_eq!(m.meta.solver_seed, 5);
        assert_eq!(m.meta.iterations, 160);

        let upper: Vec<f64> = w.values.iter().map(|wi| 3.0 * wi).collect();
        let sol = solve(&gram(&x, 1.0).unwrap(), &y, upper.clone(), &params).unwrap();
        for (a, u) in sol.alpha.iter().zip(&upper) {
            assert!((0.0..=*u).contains(a));
        }
        assert_eq!(sol.objective, m.meta.objective);
    }

    #[test]
    fn gram_gamma_must_match() {
        let (x, y) = four_points();
        let g = gram(&x, 2.0).unwrap();
        let err = train_with_gram(
            &g,
            &x,
            &y,
            &SvcParams::new(1.0, 1.0),
            &SampleWeights::uniform(4),
        );
        assert!(err.is_err());
    }
}
