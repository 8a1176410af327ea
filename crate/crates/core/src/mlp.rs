//! Dense feed-forward regressor trained on a per-sample weighted loss.
//!
//! Hidden layers apply the configured activation; the output layer is a
//! single linear unit. The training loss is
//! `L = (1/n) sum_i w_i l(pred_i, target_i)` with `l` squared or absolute
//! error, minimized by plain mini-batch SGD.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::{Dataset, Task};
use crate::error::{Result, WlossError};
use crate::rng::seeded_rng;
use crate::weighting::SampleWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        })
    }
}

impl FromStr for Activation {
    type Err = WlossError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(WlossError::InvalidParameter(format!(
                "unknown activation {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseLoss {
    Mse,
    Mae,
}

impl FromStr for BaseLoss {
    type Err = WlossError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mse" => Ok(BaseLoss::Mse),
            "mae" => Ok(BaseLoss::Mae),
            other => Err(WlossError::InvalidParameter(format!(
                "unknown loss {other:?}"
            ))),
        }
    }
}

/// Layer sizes from input to output, e.g. `[11, 100, 50, 20, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpArch {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
}

impl MlpArch {
    pub fn new(layer_sizes: Vec<usize>, activation: Activation, seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(WlossError::InvalidParameter(format!(
                "layer sizes {layer_sizes:?} need at least an input and an output, all positive"
            )));
        }
        if *layer_sizes.last().unwrap() != 1 {
            return Err(WlossError::InvalidParameter(
                "the output layer must have exactly one unit".into(),
            ));
        }
        Ok(MlpArch {
            layer_sizes,
            activation,
            seed,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }
}

/// One affine layer; `weights` is row-major `(outputs, inputs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.biases[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub arch: MlpArch,
    pub layers: Vec<Layer>,
}

/// Gradients with the same shapes as the model's layers.
pub type Gradients = Vec<Layer>;

impl MlpModel {
    /// Uniform initialization in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` from `arch.seed`.
    pub fn init(arch: &MlpArch) -> Self {
        let mut rng = seeded_rng(arch.seed);
        let layers = arch
            .layer_sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let mut layer = Layer::zeros(w[0], w[1]);
                layer
                    .weights
                    .iter_mut()
                    .chain(layer.biases.iter_mut())
                    .for_each(|p| *p = rng.gen_range(-bound..=bound));
                layer
            })
            .collect();
        MlpModel {
            arch: arch.clone(),
            layers,
        }
    }

    pub fn zeros(arch: &MlpArch) -> Self {
        MlpModel {
            arch: arch.clone(),
            layers: arch
                .layer_sizes
                .windows(2)
                .map(|w| Layer::zeros(w[0], w[1]))
                .collect(),
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arch.input_dim() {
            return Err(WlossError::DimensionMismatch {
                expected: self.arch.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            layer.affine(&a, &mut z);
            if k < last {
                a = z.iter().map(|&v| self.arch.activation.apply(v)).collect();
            } else {
                a.clone_from(&z);
            }
        }
        Ok(a[0])
    }

    pub fn predict_all<S: AsRef<[f64]>>(&self, xs: &[S]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.forward(x.as_ref())).collect()
    }

    /// Exact gradients of the weighted loss over `xs` with respect to every
    /// parameter. `weights` of `None` means all ones.
    pub fn gradients<S: AsRef<[f64]>>(
        &self,
        xs: &[S],
        targets: &[f64],
        weights: Option<&[f64]>,
        base: BaseLoss,
    ) -> Result<Gradients> {
        check_lengths(xs.len(), targets.len(), weights)?;
        let mut grads: Gradients = self
            .layers
            .iter()
            .map(|l| Layer::zeros(l.inputs, l.outputs))
            .collect();
        let n = xs.len().max(1) as f64;
        let last = self.layers.len() - 1;
        let act = self.arch.activation;
        let mut zs: Vec<Vec<f64>> = vec![Vec::new(); self.layers.len()];
        let mut acts: Vec<Vec<f64>> = vec![Vec::new(); self.layers.len() + 1];

        for (idx, x) in xs.iter().enumerate() {
            let x = x.as_ref();
            self.check_input(x)?;
            acts[0].clear();
            acts[0].extend_from_slice(x);
            for (k, layer) in self.layers.iter().enumerate() {
                layer.affine(&acts[k], &mut zs[k]);
                let next: Vec<f64> = if k < last {
                    zs[k].iter().map(|&v| act.apply(v)).collect()
                } else {
                    zs[k].clone()
                };
                acts[k + 1] = next;
            }
            let pred = acts[self.layers.len()][0];
            let w = weights.map_or(1.0, |w| w[idx]);
            let err = pred - targets[idx];
            let dloss = match base {
                BaseLoss::Mse => 2.0 * err,
                BaseLoss::Mae => {
                    if err > 0.0 {
                        1.0
                    } else if err < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
            };
            let mut delta = vec![w * dloss / n];
            for k in (0..self.layers.len()).rev() {
                let layer = &self.layers[k];
                let g = &mut grads[k];
                for o in 0..layer.outputs {
                    g.biases[o] += delta[o];
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, a) in row.iter_mut().zip(&acts[k]) {
                        *gw += delta[o] * a;
                    }
                }
                if k > 0 {
                    let mut prev = vec![0.0; layer.inputs];
                    for o in 0..layer.outputs {
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (p, w) in prev.iter_mut().zip(row) {
                            *p += delta[o] * w;
                        }
                    }
                    for (i, p) in prev.iter_mut().enumerate() {
                        *p *= act.derivative(zs[k - 1][i], acts[k][i]);
                    }
                    delta = prev;
                }
            }
        }
        Ok(grads)
    }

    /// `params -= rate * grads`.
    fn apply_step(&mut self, grads: &Gradients, rate: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            for (p, d) in layer.weights.iter_mut().zip(&g.weights) {
                *p -= rate * d;
            }
            for (p, d) in layer.biases.iter_mut().zip(&g.biases) {
                *p -= rate * d;
            }
        }
    }

    /// Text form: `wloss-mlp 1`, the activation, the layer sizes, then for each
    /// layer one line of row-major weights followed by one line of biases.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::from("wloss-mlp 1\n");
        out.push_str(&format!("activation {}\n", self.arch.activation));
        out.push_str(&format!("seed {}\n", self.arch.seed));
        out.push_str(&format!(
            "layers {}\n",
            self.arch
                .layer_sizes
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ));
        for layer in &self.layers {
            out.push_str(&join(&layer.weights));
            out.push('\n');
            out.push_str(&join(&layer.biases));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: String| WlossError::ModelFormat(m);
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("wloss-mlp 1") {
            return Err(bad("missing \"wloss-mlp 1\" header".into()));
        }
        let mut field = |name: &str| -> Result<String> {
            lines
                .next()
                .and_then(|l| l.strip_prefix(name))
                .map(|v| v.trim().to_string())
                .ok_or_else(|| bad(format!("missing field {name}")))
        };
        let activation: Activation = field("activation")?.parse()?;
        let seed: u64 = field("seed")?.parse().map_err(|_| bad("bad seed".into()))?;
        let sizes: Vec<usize> = field("layers")?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| bad(format!("bad layer size {s:?}")))
            })
            .collect::<Result<_>>()?;
        let arch = MlpArch::new(sizes, activation, seed)?;
        let mut model = MlpModel::zeros(&arch);
        for (k, layer) in model.layers.iter_mut().enumerate() {
            for (what, target) in [
                ("weights", &mut layer.weights),
                ("biases", &mut layer.biases),
            ] {
                let line = lines
                    .next()
                    .ok_or_else(|| bad(format!("missing {what} of layer {k}")))?;
                let values: Vec<f64> = line
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| bad(format!("bad number {t:?}"))))
                    .collect::<Result<_>>()?;
                if values.len() != target.len() {
                    return Err(bad(format!(
                        "layer {k} {what}: expected {} values, found {}",
                        target.len(),
                        values.len()
                    )));
                }
                *target = values;
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| WlossError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| WlossError::io(path, e))?;
        Self::from_text(&text)
    }
}

fn check_lengths(n: usize, targets: usize, weights: Option<&[f64]>) -> Result<()> {
    if targets != n {
        return Err(WlossError::LengthMismatch {
            what: "targets",
            expected: n,
            found: targets,
        });
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(WlossError::LengthMismatch {
                what: "weights",
                expected: n,
                found: w.len(),
            });
        }
    }
    Ok(())
}

/// `(1/n) sum_i w_i l(pred_i, target_i)`.
pub fn weighted_loss(
    preds: &[f64],
    targets: &[f64],
    weights: Option<&[f64]>,
    base: BaseLoss,
) -> Result<f64> {
    check_lengths(preds.len(), targets.len(), weights)?;
    let n = preds.len().max(1) as f64;
    Ok(preds
        .iter()
        .zip(targets)
        .enumerate()
        .map(|(i, (p, t))| {
            let e = p - t;
            let l = match base {
                BaseLoss::Mse => e * e,
                BaseLoss::Mae => e.abs(),
            };
            weights.map_or(1.0, |w| w[i]) * l
        })
        .sum::<f64>()
        / n)
}

/// Unweighted mean absolute error.
pub fn mae(preds: &[f64], targets: &[f64]) -> Result<f64> {
    weighted_loss(preds, targets, None, BaseLoss::Mae)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub loss: BaseLoss,
    /// Per-sample weights aligned with the training data; `None` for all ones.
    pub weights: Option<SampleWeights>,
    /// Seed of the mini-batch shuffling.
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(WlossError::InvalidParameter(
                "epochs and batch size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(WlossError::InvalidParameter(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Mini-batch SGD from a seeded initialization.
pub fn train_mlp(data: &Dataset, arch: &MlpArch, cfg: &TrainConfig) -> Result<MlpModel> {
    let mut per_epoch = |_: usize, _: &MlpModel| {};
    train_mlp_with(data, arch, cfg, &mut per_epoch)
}

/// As [`train_mlp`], calling `on_epoch(epoch, model)` after every epoch.
pub fn train_mlp_with(
    data: &Dataset,
    arch: &MlpArch,
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(usize, &MlpModel),
) -> Result<MlpModel> {
    cfg.validate()?;
    if data.task() != Task::Regression {
        return Err(WlossError::InvalidParameter(
            "the MLP regressor needs a regression dataset".into(),
        ));
    }
    if data.dim() != arch.input_dim() {
        return Err(WlossError::DimensionMismatch {
            expected: arch.input_dim(),
            found: data.dim(),
        });
    }
    if let Some(w) = &cfg.weights {
        if w.len() != data.len() {
            return Err(WlossError::LengthMismatch {
                what: "weights",
                expected: data.len(),
                found: w.len(),
            });
        }
    }
    let x = data.features();
    let y = data.targets();
    let mut model = MlpModel::init(arch);
    let mut rng = seeded_rng(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let bx: Vec<&[f64]> = batch.iter().map(|&i| x[i].as_slice()).collect();
            let by: Vec<f64> = batch.iter().map(|&i| y[i]).collect();
            let bw: Option<Vec<f64>> = cfg
                .weights
                .as_ref()
                .map(|w| batch.iter().map(|&i| w.values[i]).collect());
            let grads = model.gradients(&bx, &by, bw.as_deref(), cfg.loss)?;
            model.apply_step(&grads, cfg.learning_rate);
        }
        on_epoch(epoch, &model);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arch(sizes: &[usize], seed: u64) -> MlpArch {
        MlpArch::new(sizes.to_vec(), Activation::Relu, seed).unwrap()
    }

    /// Independent evaluation with explicit loops over a column-major copy.
    fn reference_forward(m: &MlpModel, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        for (k, layer) in m.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.outputs];
            for i in 0..layer.inputs {
                for (o, nx) in next.iter_mut().enumerate() {
                    *nx += layer.weights[o * layer.inputs + i] * a[i];
                }
            }
            for (o, nx) in next.iter_mut().enumerate() {
                *nx += layer.biases[o];
                if k + 1 < m.layers.len() {
                    *nx = if *nx > 0.0 { *nx } else { 0.0 };
                }
            }
            a = next;
        }
        a[0]
    }

    #[test]
    fn zero_network_outputs_zero() {
        let m = MlpModel::zeros(&arch(&[3, 4, 1], 0));
        assert_eq!(m.forward(&[1.0, -2.0, 5.0]).unwrap(), 0.0);
    }

    #[test]
    fn relu_clamps_negative_hidden_unit() {
        let mut m = MlpModel::zeros(&arch(&[1, 1, 1], 0));
        m.layers[0].weights[0] = 1.0;
        m.layers[1].weights[0] = 1.0;
        assert_eq!(m.forward(&[-5.0]).unwrap(), 0.0);
        assert_eq!(m.forward(&[2.0]).unwrap(), 2.0);
    }

    #[test]
    fn forward_matches_reference_evaluation() {
        let m = MlpModel::init(&arch(&[4, 6, 3, 1], 8));
        for x in [[0.1, -0.4, 2.0, 0.0], [1.0, 1.0, -1.0, 0.3]] {
            let got = m.forward(&x).unwrap();
            assert!((got - reference_forward(&m, &x)).abs() < 1e-12);
        }
        assert!(m.forward(&[1.0]).is_err());
    }

    #[test]
    fn arch_validation() {
        assert!(MlpArch::new(vec![3], Activation::Relu, 0).is_err());
        assert!(MlpArch::new(vec![3, 2], Activation::Relu, 0).is_err());
        assert!(MlpArch::new(vec![3, 0, 1], Activation::Relu, 0).is_err());
    }

    #[test]
    fn loss_arithmetic() {
        let t = [1.0, 4.0];
        assert_eq!(
            weighted_loss(&t, &t, Some(&[3.0, 2.0]), BaseLoss::Mse).unwrap(),
            0.0
        );
        assert_eq!(
            weighted_loss(&[1.0, 2.0], &t, Some(&[1.0, 1.0]), BaseLoss::Mae).unwrap(),
            1.0
        );
        let plain = weighted_loss(&[1.5, 2.0], &t, None, BaseLoss::Mse).unwrap();
        let scaled = weighted_loss(&[1.5, 2.0], &t, Some(&[3.0, 3.0]), BaseLoss::Mse).unwrap();
        assert!((scaled - 3.0 * plain).abs() < 1e-12);
        let ones = weighted_loss(&[1.5, 2.0], &t, Some(&[1.0, 1.0]), BaseLoss::Mse).unwrap();
        assert_eq!(ones, plain);
        assert!(weighted_loss(&[1.0], &t, None, BaseLoss::Mse).is_err());
        assert!(weighted_loss(&t, &t, Some(&[1.0]), BaseLoss::Mse).is_err());
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 4.0]).unwrap(), 1.0);
        assert!(mae(&[1.0], &[]).is_err());
    }

    #[test]
    fn gradients_vanish_at_a_perfect_fit() {
        let m = MlpModel::init(&arch(&[2, 5, 1], 3));
        let xs = [[0.2, 0.4], [-1.0, 0.5]];
        let targets: Vec<f64> = xs.iter().map(|x| m.forward(x).unwrap()).collect();
        let g = m
            .gradients(&xs, &targets, Some(&[2.0, 0.5]), BaseLoss::Mse)
            .unwrap();
        for layer in g {
            assert!(layer.weights.iter().chain(&layer.biases).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn doubling_weights_doubles_gradients() {
        let m = MlpModel::init(&arch(&[2, 5, 3, 1], 4));
        let xs = [[0.2, 0.4], [-1.0, 0.5], [0.7, -0.1]];
        let t = [0.3, -0.2, 1.0];
        let w = [0.5, 1.5, 2.0];
        let w2: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
        let g1 = m.gradients(&xs, &t, Some(&w), BaseLoss::Mse).unwrap();
        let g2 = m.gradients(&xs, &t, Some(&w2), BaseLoss::Mse).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            for (u, v) in a
                .weights
                .iter()
                .chain(&a.biases)
                .zip(b.weights.iter().chain(&b.biases))
            {
                assert!((2.0 * u - v).abs() <= 1e-14 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences_small_net() {
        let mut m = MlpModel::init(&MlpArch::new(vec![3, 4, 1], Activation::Tanh, 2).unwrap());
        let xs = [[0.1, 0.2, -0.3], [0.5, -0.5, 0.9]];
        let t = [0.4, -0.1];
        let w = [1.5, 2.5];
        let g = m.gradients(&xs, &t, Some(&w), BaseLoss::Mse).unwrap();
        let h = 1e-5;
        for k in 0..m.layers.len() {
            for p in 0..m.layers[k].weights.len() {
                let orig = m.layers[k].weights[p];
                m.layers[k].weights[p] = orig + h;
                let up = weighted_loss(&m.predict_all(&xs).unwrap(), &t, Some(&w), BaseLoss::Mse)
                    .unwrap();
                m.layers[k].weights[p] = orig - h;
                let dn = weighted_loss(&m.predict_all(&xs).unwrap(), &t, Some(&w), BaseLoss::Mse)
                    .unwrap();
                m.layers[k].weights[p] = orig;
                let fd = (up - dn) / (2.0 * h);
                assert!((fd - g[k].weights[p]).abs() < 1e-7);
            }
        }
    }

    fn linear_data(n: usize) -> Dataset {
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
        let y = x.iter().map(|v| 2.0 * v[0] - 0.5).collect();
        Dataset::from_xy(x, y, Task::Regression).unwrap()
    }

    fn cfg(epochs: usize, weights: Option<SampleWeights>) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 4,
            learning_rate: 0.01,
            loss: BaseLoss::Mse,
            weights,
            seed: 7,
        }
    }

    #[test]
    fn training_error_decreases_on_linear_data() {
        let ds = linear_data(32);
        let a = arch(&[1, 8, 1], 1);
        let x = ds.features();
        let y = ds.targets();
        let mut maes = Vec::new();
        let mut record =
            |_: usize, m: &MlpModel| maes.push(mae(&m.predict_all(&x).unwrap(), &y).unwrap());
        train_mlp_with(&ds, &a, &cfg(8, None), &mut record).unwrap();
        assert!(maes.windows(2).all(|w| w[1] < w[0]), "{maes:?}");
    }

    #[test]
    fn training_is_deterministic() {
        let ds = linear_data(20);
        let a = arch(&[1, 5, 1], 3);
        let m1 = train_mlp(&ds, &a, &cfg(3, None)).unwrap();
        let m2 = train_mlp(&ds, &a, &cfg(3, None)).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn weighting_changes_the_fit() {
        let ds = linear_data(20);
        let a = arch(&[1, 5, 1], 3);
        let mut w = SampleWeights::uniform(20);
        w.values[0] = 5.0;
        w.values[19] = 0.2;
        let plain = train_mlp(&ds, &a, &cfg(3, None)).unwrap();
        let weighted = train_mlp(&ds, &a, &cfg(3, Some(w))).unwrap();
        assert_ne!(plain, weighted);
    }

    #[test]
    fn training_rejects_classification_and_bad_config() {
        let ds = Dataset::from_xy(
            vec![vec![0.0], vec![1.0]],
            vec![1.0, -1.0],
            Task::Classification,
        )
        .unwrap();
        assert!(train_mlp(&ds, &arch(&[1, 2, 1], 0), &cfg(1, None)).is_err());
        let ds = linear_data(4);
        let mut c = cfg(1, None);
        c.learning_rate = 0.0;
        assert!(train_mlp(&ds, &arch(&[1, 2, 1], 0), &c).is_err());
        assert!(train_mlp(&ds, &arch(&[2, 2, 1], 0), &cfg(1, None)).is_err());
        assert!(train_mlp(
            &ds,
            &arch(&[1, 2, 1], 0),
            &cfg(1, Some(SampleWeights::uniform(3)))
        )
        .is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = MlpModel::init(&MlpArch::new(vec![3, 4, 2, 1], Activation::Tanh, 9).unwrap());
        let back = MlpModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(MlpModel::from_text("wloss-mlp 1\nactivation relu\n").is_err());
    }
}
