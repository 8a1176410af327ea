use std::fs;
use std::path::Path;

use crate::error::{Result, WlossError};
use crate::kernel::rbf_unchecked;
use crate::weighting::Scheme;

const MAGIC: &str = "wloss-svc 1";

#[derive(Debug, Clone, PartialEq)]
pub struct SupportVector {
    pub features: Vec<f64>,
    pub y: f64,
    pub alpha: f64,
}

/// How a model was trained.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub c: f64,
    pub scheme: Scheme,
    pub gamma_s: Option<f64>,
    pub solver_seed: u64,
    pub weight_seed: Option<u64>,
    pub iterations: u64,
    pub objective: f64,
    pub converged: bool,
}

/// A trained classifier: `f(x) = sum_sv a_i y_i K(x_i, x) + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvcModel {
    pub support: Vec<SupportVector>,
    pub b: f64,
    pub gamma_k: f64,
    pub dim: usize,
    pub meta: TrainingMeta,
}

impl SvcModel {
    pub fn decision_function(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(WlossError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self
            .support
            .iter()
            .map(|sv| sv.alpha * sv.y * rbf_unchecked(&sv.features, x, self.gamma_k))
            .sum::<f64>()
            + self.b)
    }

    /// `+1.0` when the decision value is non-negative, `-1.0` otherwise.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(sign(self.decision_function(x)?))
    }

    pub fn predict_all<S: AsRef<[f64]>>(&self, xs: &[S]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.predict(x.as_ref())).collect()
    }

    /// Text form: a version line, one `key value` line per parameter, then
    /// one support vector per line as `alpha y x_1 ... x_d`.
    pub fn to_text(&self) -> String {
        let opt_f = |v: Option<f64>| v.map_or("-".to_string(), |v| v.to_string());
        let opt_u = |v: Option<u64>| v.map_or("-".to_string(), |v| v.to_string());
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        out.push_str(&format!("dim {}\n", self.dim));
        out.push_str(&format!("gamma_k {}\n", self.gamma_k));
        out.push_str(&format!("b {}\n", self.b));
        out.push_str(&format!("c {}\n", self.meta.c));
        out.push_str(&format!("scheme {}\n", self.meta.scheme));
        out.push_str(&format!("gamma_s {}\n", opt_f(self.meta.gamma_s)));
        out.push_str(&format!("solver_seed {}\n", self.meta.solver_seed));
        out.push_str(&format!("weight_seed {}\n", opt_u(self.meta.weight_seed)));
        out.push_str(&format!("iterations {}\n", self.meta.iterations));
        out.push_str(&format!("objective {}\n", self.meta.objective));
        out.push_str(&format!("converged {}\n", self.meta.converged));
        out.push_str(&format!("support {}\n", self.support.len()));
        for sv in &self.support {
            out.push_str(&format!("{} {}", sv.alpha, sv.y));
            for v in &sv.features {
                out.push_str(&format!(" {v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(WlossError::ModelFormat(format!("missing {MAGIC:?} header")));
        }
        let mut field = |name: &str| -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| WlossError::ModelFormat(format!("missing field {name}")))?;
            match line.split_once(' ') {
                Some((k, v)) if k == name => Ok(v.trim().to_string()),
                _ => Err(WlossError::ModelFormat(format!(
                    "expected field {name}, found {line:?}"
                ))),
            }
        };
        let dim: usize = parse_field("dim", &field("dim")?)?;
        let gamma_k: f64 = parse_field("gamma_k", &field("gamma_k")?)?;
        let b: f64 = parse_field("b", &field("b")?)?;
        let c: f64 = parse_field("c", &field("c")?)?;
        let scheme: Scheme = field("scheme")?.parse()?;
        let gamma_s = parse_opt("gamma_s", &field("gamma_s")?)?;
        let solver_seed: u64 = parse_field("solver_seed", &field("solver_seed")?)?;
        let weight_seed = parse_opt("weight_seed", &field("weight_seed")?)?;
        let iterations: u64 = parse_field("iterations", &field("iterations")?)?;
        let objective: f64 = parse_field("objective", &field("objective")?)?;
        let converged: bool = parse_field("converged", &field("converged")?)?;
        let n: usize = parse_field("support", &field("support")?)?;

        let mut support = Vec::with_capacity(n);
        for k in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| WlossError::ModelFormat(format!("missing support vector {k}")))?;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|t| parse_field("support vector", t))
                .collect::<Result<_>>()?;
            if values.len() != dim + 2 {
                return Err(WlossError::ModelFormat(format!(
                    "support vector {k} has {} values, expected {}",
                    values.len(),
                    dim + 2
                )));
            }
            support.push(SupportVector {
                alpha: values[0],
                y: values[1],
                features: values[2..].to_vec(),
            });
        }
        Ok(SvcModel {
            support,
            b,
            gamma_k,
            dim,
            meta: TrainingMeta {
                c,
                scheme,
                gamma_s,
                solver_seed,
                weight_seed,
                iterations,
                objective,
                converged,
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| WlossError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| WlossError::io(path, e))?;
        Self::from_text(&text)
    }
}

pub(crate) fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn parse_field<T: std::str::FromStr>(name: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| WlossError::ModelFormat(format!("bad value {raw:?} for {name}")))
}

fn parse_opt<T: std::str::FromStr>(name: &str, raw: &str) -> Result<Option<T>> {
    if raw == "-" {
        Ok(None)
    } else {
        parse_field(name, raw).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model(support: Vec<SupportVector>, b: f64) -> SvcModel {
        SvcModel {
            dim: support.first().map_or(1, |s| s.features.len()),
            support,
            b,
            gamma_k: 0.7,
            meta: TrainingMeta {
                c: 1.0,
                scheme: Scheme::None,
                gamma_s: None,
                solver_seed: 3,
                weight_seed: None,
                iterations: 0,
                objective: 0.0,
                converged: false,
            },
        }
    }

    #[test]
    fn bias_only_model() {
        let m = model(vec![], 0.5);
        assert_eq!(m.decision_function(&[3.0]).unwrap(), 0.5);
    }

    #[test]
    fn lone_support_vector_at_itself() {
        let m = model(
            vec![SupportVector {
                features: vec![1.0, -2.0],
                y: 1.0,
                alpha: 1.0,
            }],
            0.0,
        );
        assert_eq!(m.decision_function(&[1.0, -2.0]).unwrap(), 1.0);
        assert!(m.decision_function(&[1.0]).is_err());
    }

    #[test]
    fn sign_tie_break() {
        assert_eq!(sign(0.7), 1.0);
        assert_eq!(sign(-0.7), -1.0);
        assert_eq!(sign(0.0), 1.0);
        assert_eq!(model(vec![], 0.0).predict(&[1.0]).unwrap(), 1.0);
        assert_eq!(model(vec![], -0.7).predict(&[1.0]).unwrap(), -1.0);
    }

    #[test]
    fn rejects_malformed_text() {
        assert!(SvcModel::from_text("nope").is_err());
        let text = model(vec![], 0.1).to_text().replace("b 0.1", "b zero");
        assert!(SvcModel::from_text(&text).is_err());
        let mut text = model(
            vec![SupportVector {
                features: vec![1.0],
                y: 1.0,
                alpha: 0.5,
            }],
            0.0,
        )
        .to_text();
        text.truncate(text.len() - 4);
        assert!(SvcModel::from_text(&text).is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip_is_exact(
            svs in prop::collection::vec((prop::collection::vec(-1e3f64..1e3, 3), any::<bool>(), 1e-9f64..1e3), 0..6),
            b in -10.0f64..10.0,
            probe in prop::collection::vec(-5.0f64..5.0, 3),
            gs in prop::option::of(0.01f64..100.0),
        ) {
            let mut m = model(
                svs.into_iter()
                    .map(|(features, pos, alpha)| SupportVector { features, y: if pos { 1.0 } else { -1.0 }, alpha })
                    .collect(),
                b,
            );
            m.dim = 3;
            m.meta.gamma_s = gs;
            m.meta.weight_seed = gs.map(|_| 11);
            let back = SvcModel::from_text(&m.to_text()).unwrap();
            prop_assert_eq!(&back, &m);
            let d0 = m.decision_function(&probe).unwrap();
            let d1 = back.decision_function(&probe).unwrap();
            prop_assert!((d0 - d1).abs() <= 1e-12);
        }
    }
}
