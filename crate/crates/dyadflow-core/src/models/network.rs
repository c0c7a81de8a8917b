//! Fully connected ReLU networks trained with Adam on softmax cross-entropy.
//!
//! One code path serves all four network kinds; they differ only in the
//! number of hidden layers. Training holds out a validation slice and keeps
//! the weights from the epoch with the lowest validation loss.

use super::linear::softmax_rows;
use ndarray::{Array1, Array2, Axis};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkParams {
    pub hidden_layers: usize,
    pub width: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Fraction of the training rows held out for early stopping.
    /// Zero disables the holdout and runs every epoch.
    pub val_fraction: f64,
    /// Epochs without a new best validation loss before stopping.
    pub patience: usize,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            hidden_layers: 1,
            width: 128,
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 32,
            val_fraction: 0.1,
            patience: 10,
        }
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// out x in.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    pub fn n_features(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.layers.last().expect("at least one layer").w.nrows()
    }

    pub fn hidden_layers(&self) -> usize {
        self.layers.len() - 1
    }

    /// Pre-softmax outputs, one row per sample.
    pub fn logits(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut a = x.dot(&self.layers[0].w.t()) + &self.layers[0].b;
        for layer in self.layers.iter().skip(1) {
            a.mapv_inplace(|v| v.max(0.0));
            a = a.dot(&layer.w.t()) + &layer.b;
        }
        a
    }

    pub fn predict(&self, x: &Array2<f64>) -> Vec<usize> {
        self.logits(x)
            .rows()
            .into_iter()
            .map(|row| super::argmax(row.iter().copied()))
            .collect()
    }

    /// Activations per stage: `acts[0]` is the input, `acts[k]` the output
    /// of layer k-1 (post-ReLU except for the last, which stays linear).
    fn forward_cached(&self, x: &Array2<f64>) -> Vec<Array2<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = acts[k].dot(&layer.w.t()) + &layer.b;
            if k + 1 < self.layers.len() {
                z.mapv_inplace(|v| v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    /// Mean cross-entropy of the true classes.
    pub fn loss(&self, x: &Array2<f64>, y: &[usize]) -> f64 {
        let z = self.logits(x);
        let mut total = 0.0;
        for (row, &c) in z.rows().into_iter().zip(y) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            total += lse - row[c];
        }
        total / y.len() as f64
    }

    /// Gradients of `loss` for every layer, via backprop.
    fn gradients(&self, x: &Array2<f64>, y: &[usize]) -> Vec<Dense> {
        let acts = self.forward_cached(x);
        let n = x.nrows() as f64;
        let mut delta = acts.last().expect("logits").clone();
        softmax_rows(&mut delta);
        for (i, &c) in y.iter().enumerate() {
            delta[(i, c)] -= 1.0;
        }
        delta /= n;

        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for k in (0..self.layers.len()).rev() {
            let gw = delta.t().dot(&acts[k]);
            let gb = delta.sum_axis(Axis(0));
            if k > 0 {
                delta = delta.dot(&self.layers[k].w);
                // ReLU gate: units that were clipped pass no gradient.
                delta.zip_mut_with(&acts[k], |d, a| {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            grads.push(Dense { w: gw, b: gb });
        }
        grads.reverse();
        grads
    }
}

struct Adam {
    t: i32,
    m: Vec<Dense>,
    v: Vec<Dense>,
}

impl Adam {
    fn new(layers: &[Dense]) -> Adam {
        let zero = |l: &Dense| Dense {
            w: Array2::zeros(l.w.raw_dim()),
            b: Array1::zeros(l.b.raw_dim()),
        };
        Adam { t: 0, m: layers.iter().map(zero).collect(), v: layers.iter().map(zero).collect() }
    }

    fn step(&mut self, layers: &mut [Dense], grads: &[Dense], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t);
        let bc2 = 1.0 - BETA2.powi(self.t);
        for (k, layer) in layers.iter_mut().enumerate() {
            let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
                *m = BETA1 * *m + (1.0 - BETA1) * g;
                *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                let mhat = *m / bc1;
                let vhat = *v / bc2;
                *p -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
            };
            for ((p, m), (v, g)) in layer
                .w
                .iter_mut()
                .zip(self.m[k].w.iter_mut())
                .zip(self.v[k].w.iter_mut().zip(grads[k].w.iter()))
            {
                update(p, m, v, *g);
            }
            for ((p, m), (v, g)) in layer
                .b
                .iter_mut()
                .zip(self.m[k].b.iter_mut())
                .zip(self.v[k].b.iter_mut().zip(grads[k].b.iter()))
            {
                update(p, m, v, *g);
            }
        }
    }
}

/// How a training run went; sizes are in epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkTrainInfo {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: Option<f64>,
    pub stopped_early: bool,
}

fn he_layers(dims: &[usize], rng: &mut ChaCha8Rng) -> Vec<Dense> {
    dims.windows(2)
        .map(|io| {
            let (fan_in, fan_out) = (io[0], io[1]);
            let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive sd");
            let w = Array2::from_shape_fn((fan_out, fan_in), |_| rng.sample(dist));
            Dense { w, b: Array1::zeros(fan_out) }
        })
        .collect()
}

/// Train and return the network plus a summary of the run.
pub fn train_network_with_info(
    params: &NetworkParams,
    x: &Array2<f64>,
    y: &[usize],
    n_classes: usize,
    seed: u64,
) -> (Mlp, NetworkTrainInfo) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dims = Vec::with_capacity(params.hidden_layers + 2);
    dims.push(x.ncols());
    dims.extend(std::iter::repeat(params.width).take(params.hidden_layers));
    dims.push(n_classes);
    let mut net = Mlp { layers: he_layers(&dims, &mut rng) };

    let n = x.nrows();
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let n_val = ((n as f64 * params.val_fraction).floor() as usize).min(n.saturating_sub(1));
    let (val_idx, train_idx) = indices.split_at(n_val);
    let xt = x.select(Axis(0), train_idx);
    let yt: Vec<usize> = train_idx.iter().map(|&i| y[i]).collect();
    let (xv, yv) = if n_val > 0 {
        (Some(x.select(Axis(0), val_idx)), val_idx.iter().map(|&i| y[i]).collect::<Vec<_>>())
    } else {
        (None, Vec::new())
    };

    let mut adam = Adam::new(&net.layers);
    let mut best: Option<(f64, Vec<Dense>)> = None;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut epochs_run = 0;
    let mut stopped_early = false;
    let mut order: Vec<usize> = (0..xt.nrows()).collect();

    for epoch in 0..params.epochs {
        epochs_run = epoch + 1;
        order.shuffle(&mut rng);
        for chunk in order.chunks(params.batch_size.max(1)) {
            let xb = xt.select(Axis(0), chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| yt[i]).collect();
            let grads = net.gradients(&xb, &yb);
            adam.step(&mut net.layers, &grads, params.learning_rate);
        }
        if let Some(xv) = &xv {
            let vl = net.loss(xv, &yv);
            if best.as_ref().map_or(true, |(b, _)| vl < *b) {
                best = Some((vl, net.layers.clone()));
                best_epoch = epoch;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= params.patience {
                    stopped_early = true;
                    break;
                }
            }
        }
    }

    let best_val_loss = best.as_ref().map(|(b, _)| *b);
    if let Some((_, layers)) = best {
        net.layers = layers;
    } else {
        best_epoch = epochs_run.saturating_sub(1);
    }
    (
        net,
        NetworkTrainInfo { epochs_run, best_epoch, best_val_loss, stopped_early },
    )
}

pub fn train_network(
    params: &NetworkParams,
    x: &Array2<f64>,
    y: &[usize],
    n_classes: usize,
    seed: u64,
) -> Mlp {
    train_network_with_info(params, x, y, n_classes, seed).0
}

/// Compare backprop against central differences with step `h` over every
/// parameter; returns the worst relative error.
pub fn gradient_check(net: &Mlp, x: &Array2<f64>, y: &[usize], h: f64) -> f64 {
    let analytic = net.gradients(x, y);
    let mut probe = net.clone();
    let mut worst = 0.0_f64;
    let mut check = |probe: &mut Mlp, k: usize, idx: (usize, Option<usize>)| {
        let read = |net: &Mlp| match idx {
            (r, Some(c)) => net.layers[k].w[(r, c)],
            (r, None) => net.layers[k].b[r],
        };
        let write = |net: &mut Mlp, v: f64| match idx {
            (r, Some(c)) => net.layers[k].w[(r, c)] = v,
            (r, None) => net.layers[k].b[r] = v,
        };
        let orig = read(probe);
        write(probe, orig + h);
        let up = probe.loss(x, y);
        write(probe, orig - h);
        let down = probe.loss(x, y);
        write(probe, orig);
        let numeric = (up - down) / (2.0 * h);
        let exact = match idx {
            (r, Some(c)) => analytic[k].w[(r, c)],
            (r, None) => analytic[k].b[r],
        };
        let rel = (numeric - exact).abs() / (numeric.abs() + exact.abs()).max(1e-8);
        worst = worst.max(rel);
    };
    for k in 0..net.layers.len() {
        let (rows, cols) = (net.layers[k].w.nrows(), net.layers[k].w.ncols());
        for r in 0..rows {
            for c in 0..cols {
                check(&mut probe, k, (r, Some(c)));
            }
            check(&mut probe, k, (r, None));
        }
    }
    worst
}
