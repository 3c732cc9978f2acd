//! Exact and sketched feed-forward evaluation, output-gap measurement on
//! subspace inputs, and the closed-form gap bound.
//!
//! A depth-q net maps x through q activation layers and a final inner
//! product with the output weights v. The sketched variant replaces each
//! layer input u by S_j^T S_j u, and optionally sketches both sides of the
//! final inner product.

use rayon::prelude::*;

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, pairwise_sum, DenseMatrix};
use crate::rng::Rng;
use crate::sketch::{SketchMatrix, SubspaceBasis};

/// One layer: weight columns (one per output unit, each of input length) and
/// the activation, optionally normalized by 1/sqrt(fan_out).
#[derive(Debug, Clone)]
pub struct Layer {
    /// n_j x n_{j+1}; column i is the weight vector of unit i.
    pub weights: DenseMatrix,
    pub activation: Activation,
    /// Scale activations by 1/sqrt(n_{j+1}), the normalized-activation
    /// hypothesis of the multi-layer bound.
    pub normalized: bool,
}

impl Layer {
    fn fan_in(&self) -> usize {
        self.weights.rows()
    }

    fn fan_out(&self) -> usize {
        self.weights.cols()
    }

    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.weights.matvec_t(input)?;
        let scale = if self.normalized {
            1.0 / (self.fan_out() as f64).sqrt()
        } else {
            1.0
        };
        for v in z.iter_mut() {
            *v = self.activation.eval(*v) * scale;
        }
        Ok(z)
    }
}

/// Feed-forward net with per-layer norm bound `b_norm` on weight columns and
/// output weights, evaluated on inputs of norm at most `input_radius`.
#[derive(Debug, Clone)]
pub struct FeedForwardNet {
    layers: Vec<Layer>,
    output_weights: Vec<f64>,
    b_norm: f64,
    input_radius: f64,
}

/// Hidden activations and final output of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub hidden: Vec<Vec<f64>>,
    pub output: f64,
}

impl FeedForwardNet {
    pub fn new(
        layers: Vec<Layer>,
        output_weights: Vec<f64>,
        b_norm: f64,
        input_radius: f64,
    ) -> Result<FeedForwardNet> {
        if layers.is_empty() {
            return Err(Error::invalid("net needs at least one layer"));
        }
        for w in layers.windows(2) {
            if w[0].fan_out() != w[1].fan_in() {
                return Err(Error::invalid("layer dimensions do not chain"));
            }
        }
        let last = layers.last().unwrap();
        if output_weights.len() != last.fan_out() {
            return Err(Error::invalid("output weight length mismatch"));
        }
        let slack = 1.0 + 1e-9;
        for (j, layer) in layers.iter().enumerate() {
            if !layer.weights.is_finite() {
                return Err(Error::invalid(format!("layer {j} has non-finite weights")));
            }
            for i in 0..layer.fan_out() {
                if norm(layer.weights.col(i)) > b_norm * slack {
                    return Err(Error::invalid(format!(
                        "layer {j} unit {i} exceeds the column norm bound {b_norm}"
                    )));
                }
            }
        }
        if norm(&output_weights) > b_norm * slack {
            return Err(Error::invalid("output weights exceed the norm bound"));
        }
        Ok(FeedForwardNet {
            layers,
            output_weights,
            b_norm,
            input_radius,
        })
    }

    /// Random net with unit-ball columns scaled to exactly `b_norm`, matching
    /// the norm hypotheses of the gap bound.
    pub fn random(
        dims: &[usize],
        activation: Activation,
        normalized: bool,
        b_norm: f64,
        input_radius: f64,
        rng: &mut Rng,
    ) -> Result<FeedForwardNet> {
        if dims.len() < 2 {
            return Err(Error::invalid("need input and at least one layer dim"));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let mut weights = DenseMatrix::gaussian(n_in, n_out, rng);
            for i in 0..n_out {
                let nrm = norm(weights.col(i));
                let scale = if nrm > 0.0 { b_norm / nrm } else { 0.0 };
                for v in weights.col_mut(i) {
                    *v *= scale;
                }
            }
            layers.push(Layer {
                weights,
                activation,
                normalized,
            });
        }
        let mut v = rng.gaussian_vec(*dims.last().unwrap());
        let nrm = norm(&v);
        if nrm > 0.0 {
            for x in v.iter_mut() {
                *x *= b_norm / nrm;
            }
        }
        FeedForwardNet::new(layers, v, b_norm, input_radius)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.layers.iter().map(|l| l.fan_in()).collect();
        d.push(self.layers.last().unwrap().fan_out());
        d
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.output_weights
    }

    pub fn b_norm(&self) -> f64 {
        self.b_norm
    }

    pub fn input_radius(&self) -> f64 {
        self.input_radius
    }

    pub fn lipschitz(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.activation.lipschitz())
            .fold(1.0f64, f64::max)
    }

    /// Exact evaluation; returns every hidden activation and the output.
    pub fn forward_exact(&self, x: &[f64]) -> Result<ForwardPass> {
        let mut hidden = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for layer in &self.layers {
            h = layer.forward(&h)?;
            hidden.push(h.clone());
        }
        let output = dot(&self.output_weights, &h);
        Ok(ForwardPass { hidden, output })
    }

    /// Sketched evaluation: each layer input passes through S_j^T S_j first;
    /// the output inner product is sketched when the stack carries S_{q+1}.
    pub fn forward_sketched(&self, stack: &SketchStack, x: &[f64]) -> Result<ForwardPass> {
        stack.check_shapes(self)?;
        let mut hidden = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for (layer, s) in self.layers.iter().zip(&stack.layer_sketches) {
            let projected = s.sts_apply(&h)?;
            h = layer.forward(&projected)?;
            hidden.push(h.clone());
        }
        let output = match &stack.output_sketch {
            Some(s) => {
                let sv = s.apply(&self.output_weights)?;
                let sh = s.apply(&h)?;
                dot(&sv, &sh)
            }
            None => dot(&self.output_weights, &h),
        };
        Ok(ForwardPass { hidden, output })
    }
}

/// Sketches S_1..S_q for the layer inputs plus the optional output sketch
/// S_{q+1}, with their target distortions.
#[derive(Debug, Clone)]
pub struct SketchStack {
    pub layer_sketches: Vec<SketchMatrix>,
    pub output_sketch: Option<SketchMatrix>,
    pub eps: Vec<f64>,
}

impl SketchStack {
    pub fn new(
        layer_sketches: Vec<SketchMatrix>,
        output_sketch: Option<SketchMatrix>,
        eps: Vec<f64>,
    ) -> SketchStack {
        SketchStack {
            layer_sketches,
            output_sketch,
            eps,
        }
    }

    /// Identity stack for `net`: makes sketched and exact passes coincide.
    pub fn identity(net: &FeedForwardNet) -> SketchStack {
        let dims = net.dims();
        let layer_sketches = dims[..dims.len() - 1]
            .iter()
            .map(|&n| SketchMatrix::identity(n))
            .collect();
        let output_sketch = Some(SketchMatrix::identity(*dims.last().unwrap()));
        let eps = vec![0.0; dims.len()];
        SketchStack {
            layer_sketches,
            output_sketch,
            eps,
        }
    }

    fn check_shapes(&self, net: &FeedForwardNet) -> Result<()> {
        if self.layer_sketches.len() != net.depth() {
            return Err(Error::invalid(format!(
                "stack has {} layer sketches for a depth-{} net",
                self.layer_sketches.len(),
                net.depth()
            )));
        }
        for (j, (s, layer)) in self.layer_sketches.iter().zip(net.layers()).enumerate() {
            if s.cols() != layer.fan_in() {
                return Err(Error::invalid(format!(
                    "sketch {j} has {} columns, layer input is {}",
                    s.cols(),
                    layer.fan_in()
                )));
            }
        }
        if let Some(s) = &self.output_sketch {
            let out_dim = net.layers().last().map_or(0, Layer::fan_out);
            if s.cols() != out_dim {
                return Err(Error::invalid("output sketch dimension mismatch"));
            }
        }
        Ok(())
    }

    /// Equal split of a total gap budget across the q+1 sketching sites.
    pub fn split_eps(total: f64, sites: usize) -> Vec<f64> {
        vec![total / sites as f64; sites]
    }
}

/// Draws x = U z with direction uniform on the subspace sphere and norm
/// uniform on [0, radius], stressing the whole ball.
pub fn sample_subspace_point(basis: &SubspaceBasis, radius: f64, rng: &mut Rng) -> Vec<f64> {
    let mut x = basis.unit_vector(rng);
    let r = radius * rng.uniform();
    for v in x.iter_mut() {
        *v *= r;
    }
    x
}

/// Max and mean absolute output gap between exact and sketched passes over
/// Monte Carlo samples from the subspace ball.
#[derive(Debug, Clone, Copy)]
pub struct GapStats {
    pub max_gap: f64,
    pub mean_gap: f64,
}

/// Samples points from colspan(U) with norm at most `radius` and measures
/// |exact - sketched| output. Per-sample rng streams keep the result
/// independent of thread schedule.
pub fn output_gap(
    net: &FeedForwardNet,
    stack: &SketchStack,
    basis: &SubspaceBasis,
    radius: f64,
    samples: usize,
    rng: &Rng,
) -> Result<GapStats> {
    if basis.ambient_dim() != net.dims()[0] {
        return Err(Error::invalid("basis does not match net input dimension"));
    }
    let gaps: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut local = rng.derive(i as u64);
            let x = sample_subspace_point(basis, radius, &mut local);
            let exact = net.forward_exact(&x).expect("dims checked");
            let sketched = net.forward_sketched(stack, &x).expect("dims checked");
            (exact.output - sketched.output).abs()
        })
        .collect();
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    let mean_gap = if gaps.is_empty() {
        0.0
    } else {
        pairwise_sum(&gaps) / gaps.len() as f64
    };
    Ok(GapStats { max_gap, mean_gap })
}

/// Analytic output-gap bound. The two-hidden-layer analysis gives
/// `2 (sum eps) L^2 B^3 A`; general depth gives `4 (sum eps) L^q B^{q+1} A^q`.
/// The q = 2 constants do not reconcile with the general ones; both are kept
/// as stated.
pub fn gap_bound(q: usize, l: f64, b_norm: f64, radius: f64, eps: &[f64]) -> Result<f64> {
    if q == 0 {
        return Err(Error::invalid("gap bound needs depth q >= 1"));
    }
    if eps.len() != q && eps.len() != q + 1 {
        return Err(Error::invalid(format!(
            "eps list must have length q or q+1, got {} for q={q}",
            eps.len()
        )));
    }
    let total: f64 = eps.iter().sum();
    Ok(if q == 2 {
        2.0 * total * l * l * b_norm.powi(3) * radius
    } else {
        4.0 * total * l.powi(q as i32) * b_norm.powi(q as i32 + 1) * radius.powi(q as i32)
    })
}

/// Measured per-site inner-product distortions of a stack on the vector
/// families the gap proof telescopes over: layer-j weight columns against
/// sampled layer-j inputs, and v against the final hidden vectors.
pub fn measured_layer_distortions(
    net: &FeedForwardNet,
    stack: &SketchStack,
    basis: &SubspaceBasis,
    samples: usize,
    rng: &Rng,
) -> Result<Vec<f64>> {
    stack.check_shapes(net)?;
    let sites = stack.layer_sketches.len() + usize::from(stack.output_sketch.is_some());
    let mut eps_hat = vec![0.0f64; sites];
    for i in 0..samples {
        let mut local = rng.derive(i as u64);
        let x = sample_subspace_point(basis, net.input_radius(), &mut local);
        // Walk the sketched trajectory, measuring each site on its input.
        let mut h = x;
        for (j, (layer, s)) in net.layers().iter().zip(&stack.layer_sketches).enumerate() {
            let hn = norm(&h);
            if hn > 1e-14 {
                let sh = s.apply(&h)?;
                for i_col in 0..layer.weights.cols() {
                    let w = layer.weights.col(i_col);
                    let wn = norm(w);
                    if wn <= 1e-14 {
                        continue;
                    }
                    let sw = s.apply(w)?;
                    let err = (dot(&sw, &sh) - dot(w, &h)).abs() / (wn * hn);
                    if err > eps_hat[j] {
                        eps_hat[j] = err;
                    }
                }
            }
            let projected = s.sts_apply(&h)?;
            h = layer.forward(&projected)?;
        }
        if let Some(s) = &stack.output_sketch {
            let v = net.output_weights();
            let vn = norm(v);
            let hn = norm(&h);
            if vn > 1e-14 && hn > 1e-14 {
                let sv = s.apply(v)?;
                let sh = s.apply(&h)?;
                let err = (dot(&sv, &sh) - dot(v, &h)).abs() / (vn * hn);
                let last = eps_hat.len() - 1;
                if err > eps_hat[last] {
                    eps_hat[last] = err;
                }
            }
        }
    }
    Ok(eps_hat)
}
