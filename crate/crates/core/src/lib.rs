//! Kernel SVC with per-sample slack penalties derived from a training-set
//! density, and MLP regression with the same per-sample loss weights.
//!
//! The classifier is a C-SVM with an RBF kernel in which every training
//! sample carries its own slack penalty `C * w_i`. The weights are derived
//! from a kernel density of the training set (see [`weighting`]), and the
//! resulting box-constrained dual is solved with a two-multiplier ascent
//! (see [`svc`]). A small dense regressor trained with the same kind of
//! per-sample weights lives in [`mlp`], and [`experiments`] wires both into
//! k-fold cross-validation and grid search.
//!
//! ```
//! use wloss::{kernel, svc, weighting};
//!
//! let x = vec![vec![0.0], vec![0.2], vec![1.0], vec![1.2]];
//! let y = vec![-1.0, -1.0, 1.0, 1.0];
//! let dv = weighting::density(&x, 1.0).unwrap();
//! let w = weighting::make_weights(x.len(), Some(&dv), weighting::Scheme::Inv, 0).unwrap();
//! let params = svc::SvcParams::new(10.0, 1.0).with_early_stop(1e-6);
//! let model = svc::train(&x, &y, &params, &w).unwrap();
//! assert_eq!(model.predict(&[1.1]).unwrap(), 1.0);
//! # let _ = kernel::rbf(&[0.0], &[1.0], 1.0);
//! ```

pub mod cli;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod mlp;
pub mod oracle;
pub mod rng;
pub mod svc;
pub mod weighting;

pub use error::{Result, WlossError};
