//! Minibatch SGD classifier training for the compression comparison:
//! softmax cross-entropy, classical momentum, inverted dropout on hidden
//! activations, and bucket-shared weights for hashed layers.

use std::time::Instant;

use super::arch::ArchitectureSpec;
use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::hashing::{default_degree, KWiseHash};
use crate::linalg::DenseMatrix;
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Keep probability of inverted dropout on hidden activations; 1 disables.
    pub dropout_keep: f64,
    pub seed: u64,
    /// Scale the learning rate by 1/sqrt(epoch+1).
    pub lr_decay: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 50,
            learning_rate: 0.05,
            momentum: 0.9,
            dropout_keep: 0.9,
            seed: 1,
            lr_decay: true,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0 < self.dropout_keep && self.dropout_keep <= 1.0) {
            return Err(Error::InvalidConfig("dropout keep must be in (0,1]".into()));
        }
        if self.batch_size < 1 || self.epochs < 1 {
            return Err(Error::InvalidConfig("batch size and epochs must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EpochStats {
    pub train_error: f64,
    pub test_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub variant: String,
    pub per_epoch: Vec<EpochStats>,
    pub final_train_error: f64,
    pub final_test_error: Option<f64>,
    pub wall_seconds: f64,
    pub config: TrainConfig,
}

/// Weights stored row-major: row o holds the fan-in weights of output unit o.
enum LayerParams {
    Dense {
        w: Vec<f64>,
        vel: Vec<f64>,
    },
    Hashed {
        idx: Vec<u32>,
        buckets: Vec<f64>,
        vel: Vec<f64>,
        /// Dense gather of the buckets, refreshed after each update.
        w: Vec<f64>,
    },
}

struct TrainLayer {
    n_in: usize,
    n_out: usize,
    params: LayerParams,
    bias: Vec<f64>,
    bias_vel: Vec<f64>,
}

impl TrainLayer {
    fn weights(&self) -> &[f64] {
        match &self.params {
            LayerParams::Dense { w, .. } => w,
            LayerParams::Hashed { w, .. } => w,
        }
    }
}

/// A trained classifier; kept so the harness can inspect learned weights.
pub struct Model {
    layers: Vec<TrainLayer>,
}

impl Model {
    /// The (virtual) weight matrix of a layer as n_out x n_in.
    pub fn weight_matrix(&self, layer: usize) -> DenseMatrix {
        let l = &self.layers[layer];
        let w = l.weights();
        DenseMatrix::from_fn(l.n_out, l.n_in, |o, i| w[o * l.n_in + i])
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Classification error on a dataset slice.
    pub fn error_on(&self, ds: &Dataset, range: std::ops::Range<usize>) -> f64 {
        if range.is_empty() {
            return 0.0;
        }
        let mut wrong = 0usize;
        let mut h = Vec::new();
        let mut next = Vec::new();
        for i in range.clone() {
            h.clear();
            h.extend_from_slice(ds.x(i));
            for (li, layer) in self.layers.iter().enumerate() {
                next.clear();
                next.resize(layer.n_out, 0.0);
                let w = layer.weights();
                for o in 0..layer.n_out {
                    let row = &w[o * layer.n_in..(o + 1) * layer.n_in];
                    let z: f64 = row.iter().zip(&h).map(|(a, b)| a * b).sum();
                    next[o] = z + layer.bias[o];
                }
                if li + 1 < self.layers.len() {
                    for v in next.iter_mut() {
                        if *v < 0.0 {
                            *v = 0.0;
                        }
                    }
                }
                std::mem::swap(&mut h, &mut next);
            }
            let pred = h
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(c, _)| c)
                .unwrap_or(0);
            if pred != ds.labels[i] as usize {
                wrong += 1;
            }
        }
        wrong as f64 / range.len() as f64
    }
}

fn init_layer(arch: &ArchitectureSpec, layer: usize, dims: &[usize], rng: &mut Rng) -> TrainLayer {
    let (n_in, n_out) = (dims[layer], dims[layer + 1]);
    let bound = (6.0 / (n_in + n_out) as f64).sqrt();
    let params = match arch.buckets.get(layer) {
        Some(&b) => {
            let idx: Vec<u32> = if b == n_in * n_out {
                // ratio 1: the bucket map degenerates to the identity
                (0..(n_in * n_out) as u32).collect()
            } else {
                let t = default_degree((n_in * n_out) as u64);
                KWiseHash::new(t, (n_in * n_out) as u64, b as u64, rng)
                    .expect("desk-scale hash parameters")
                    .table()
            };
            // buckets drawn with the virtual layer's fan bound
            let buckets: Vec<f64> = (0..b).map(|_| rng.uniform_in(-bound, bound)).collect();
            let w = idx.iter().map(|&p| buckets[p as usize]).collect();
            LayerParams::Hashed {
                idx,
                vel: vec![0.0; b],
                buckets,
                w,
            }
        }
        None => LayerParams::Dense {
            w: (0..n_in * n_out).map(|_| rng.uniform_in(-bound, bound)).collect(),
            vel: vec![0.0; n_in * n_out],
        },
    };
    TrainLayer {
        n_in,
        n_out,
        params,
        bias: vec![0.0; n_out],
        bias_vel: vec![0.0; n_out],
    }
}

/// Runs minibatch SGD on the dataset's train split and scores both splits
/// each epoch. Deterministic for a fixed config.
pub fn train_classifier(
    ds: &Dataset,
    arch: &ArchitectureSpec,
    config: &TrainConfig,
) -> Result<(ExperimentReport, Model)> {
    config.validate()?;
    let dims = arch.dims();
    if dims[0] != ds.n_features {
        return Err(Error::InvalidConfig(format!(
            "architecture expects {} inputs, dataset provides {}",
            dims[0], ds.n_features
        )));
    }
    if ds.n_classes > arch.n_out {
        return Err(Error::InvalidConfig(format!(
            "dataset has {} classes but the architecture outputs {}",
            ds.n_classes, arch.n_out
        )));
    }
    let (train_range, test_range) = ds.split_ranges();
    if train_range.is_empty() {
        return Err(Error::InvalidConfig("empty training split".into()));
    }

    let root = Rng::new(config.seed);
    let mut init_rng = root.derive(0);
    let mut shuffle_rng = root.derive(1);
    let mut dropout_rng = root.derive(2);

    let mut layers: Vec<TrainLayer> = (0..dims.len() - 1)
        .map(|l| init_layer(arch, l, &dims, &mut init_rng))
        .collect();

    let start = Instant::now();
    let bs = config.batch_size;
    let mut order: Vec<usize> = train_range.clone().collect();
    let mut per_epoch = Vec::with_capacity(config.epochs);

    // per-batch scratch: activations per layer, gradients, masks
    let depth = layers.len();
    let mut acts: Vec<Vec<f64>> = Vec::new();
    let mut masks: Vec<Vec<f64>> = vec![Vec::new(); depth.saturating_sub(1)];

    for epoch in 0..config.epochs {
        let lr = if config.lr_decay {
            config.learning_rate / ((epoch + 1) as f64).sqrt()
        } else {
            config.learning_rate
        };
        shuffle_rng.shuffle(&mut order);

        for batch in order.chunks(bs) {
            let nb = batch.len();
            // forward
            acts.clear();
            let mut input = Vec::with_capacity(nb * dims[0]);
            for &i in batch {
                input.extend_from_slice(ds.x(i));
            }
            acts.push(input);
            for (li, layer) in layers.iter().enumerate() {
                let prev = acts.last().unwrap();
                let mut z = vec![0.0; nb * layer.n_out];
                let w = layer.weights();
                for b in 0..nb {
                    let x = &prev[b * layer.n_in..(b + 1) * layer.n_in];
                    let zrow = &mut z[b * layer.n_out..(b + 1) * layer.n_out];
                    for o in 0..layer.n_out {
                        let row = &w[o * layer.n_in..(o + 1) * layer.n_in];
                        let s: f64 = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
                        zrow[o] = s + layer.bias[o];
                    }
                }
                if li + 1 < depth {
                    // ReLU then inverted dropout
                    let mask = &mut masks[li];
                    mask.clear();
                    mask.resize(z.len(), 1.0);
                    let inv_keep = 1.0 / config.dropout_keep;
                    for (zi, mi) in z.iter_mut().zip(mask.iter_mut()) {
                        if *zi < 0.0 {
                            *zi = 0.0;
                        }
                        if config.dropout_keep < 1.0 {
                            *mi = if dropout_rng.uniform() < config.dropout_keep {
                                inv_keep
                            } else {
                                0.0
                            };
                            *zi *= *mi;
                        }
                    }
                }
                acts.push(z);
            }

            // softmax cross-entropy gradient at the logits
            let n_out = dims[depth];
            let logits = acts.last_mut().unwrap();
            let mut g = vec![0.0; nb * n_out];
            for b in 0..nb {
                let row = &mut logits[b * n_out..(b + 1) * n_out];
                let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                if !max.is_finite() {
                    return Err(Error::NoConvergence(format!(
                        "non-finite logits at epoch {epoch}"
                    )));
                }
                let mut sum = 0.0;
                for v in row.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                let label = ds.labels[batch[b]] as usize;
                for (c, v) in row.iter().enumerate() {
                    let p = v / sum;
                    g[b * n_out + c] = (p - if c == label { 1.0 } else { 0.0 }) / nb as f64;
                }
            }

            // backward + update, layer by layer from the top
            let mut grad_out = g;
            for li in (0..depth).rev() {
                let (n_in, n_out) = (layers[li].n_in, layers[li].n_out);
                let prev = &acts[li];
                // gradient wrt weights and bias
                let mut gw = vec![0.0; n_in * n_out];
                let mut gb = vec![0.0; n_out];
                for b in 0..nb {
                    let x = &prev[b * n_in..(b + 1) * n_in];
                    let grow = &grad_out[b * n_out..(b + 1) * n_out];
                    for (o, &go) in grow.iter().enumerate() {
                        if go == 0.0 {
                            continue;
                        }
                        gb[o] += go;
                        let wrow = &mut gw[o * n_in..(o + 1) * n_in];
                        for (wi, &xi) in wrow.iter_mut().zip(x.iter()) {
                            *wi += go * xi;
                        }
                    }
                }
                // gradient wrt the layer input, before this layer's update
                if li > 0 {
                    let w = layers[li].weights();
                    let mut gx = vec![0.0; nb * n_in];
                    for b in 0..nb {
                        let grow = &grad_out[b * n_out..(b + 1) * n_out];
                        let xrow = &mut gx[b * n_in..(b + 1) * n_in];
                        for (o, &go) in grow.iter().enumerate() {
                            if go == 0.0 {
                                continue;
                            }
                            let wrow = &w[o * n_in..(o + 1) * n_in];
                            for (xi, &wi) in xrow.iter_mut().zip(wrow.iter()) {
                                *xi += go * wi;
                            }
                        }
                    }
                    // through dropout mask and ReLU of the layer below
                    let mask = &masks[li - 1];
                    let below = &acts[li];
                    for (i, xi) in gx.iter_mut().enumerate() {
                        if config.dropout_keep < 1.0 {
                            *xi *= mask[i];
                        }
                        // below holds post-activation values: zero where inactive
                        if below[i] <= 0.0 {
                            *xi = 0.0;
                        }
                    }
                    grad_out = gx;
                }

                let layer = &mut layers[li];
                let mu = config.momentum;
                for ((bv, b), &g) in layer.bias_vel.iter_mut().zip(&mut layer.bias).zip(&gb) {
                    *bv = mu * *bv - lr * g;
                    *b += *bv;
                }
                match &mut layer.params {
                    LayerParams::Dense { w, vel } => {
                        for ((wi, vi), &gi) in w.iter_mut().zip(vel.iter_mut()).zip(&gw) {
                            *vi = mu * *vi - lr * gi;
                            *wi += *vi;
                        }
                    }
                    LayerParams::Hashed {
                        idx,
                        buckets,
                        vel,
                        w,
                    } => {
                        // shared buckets accumulate the sum over tied slots
                        let mut gbucket = vec![0.0; buckets.len()];
                        for (&p, &gi) in idx.iter().zip(&gw) {
                            gbucket[p as usize] += gi;
                        }
                        for ((bi, vi), &gi) in
                            buckets.iter_mut().zip(vel.iter_mut()).zip(&gbucket)
                        {
                            *vi = mu * *vi - lr * gi;
                            *bi += *vi;
                        }
                        for (wi, &p) in w.iter_mut().zip(idx.iter()) {
                            *wi = buckets[p as usize];
                        }
                    }
                }
            }
        }

        let model_view = Model { layers };
        let train_error = model_view.error_on(ds, train_range.clone());
        let test_error = if test_range.is_empty() {
            None
        } else {
            Some(model_view.error_on(ds, test_range.clone()))
        };
        layers = model_view.layers;
        per_epoch.push(EpochStats {
            train_error,
            test_error,
        });
    }

    let model = Model { layers };
    let last = per_epoch.last().copied().unwrap();
    Ok((
        ExperimentReport {
            variant: arch.variant.to_string(),
            per_epoch,
            final_train_error: last.train_error,
            final_test_error: last.test_error,
            wall_seconds: start.elapsed().as_secs_f64(),
            config: config.clone(),
        },
        model,
    ))
}
