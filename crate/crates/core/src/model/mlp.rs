use rand::Rng;

use crate::error::{Error, Result};
use crate::loss::DEFAULT_EPSILON;
use crate::tensor::{matmul, matmul_nt, matmul_tn, sigmoid_scalar, Matrix, StreamRng};

/// `d → h1 → h2 → C` network. Weights are stored `fan_in × fan_out` so a
/// layer computes `x · W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub(crate) dims: [usize; 4],
    pub(crate) weights: Vec<Matrix>,
    pub(crate) biases: Vec<Vec<f64>>,
}

/// Activations saved by [`forward`] for [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Matrix,
    hidden: [Matrix; 2],
}

/// Parameter gradients, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpModel {
    pub fn zeros(dims: [usize; 4]) -> Self {
        MlpModel {
            dims,
            weights: dims.windows(2).map(|w| Matrix::zeros(w[0], w[1])).collect(),
            biases: dims[1..].iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Assembles a model from explicit parameters, checking that shapes chain.
    pub fn from_parameters(weights: Vec<Matrix>, biases: Vec<Vec<f64>>) -> Result<Self> {
        if weights.len() != 3 || biases.len() != 3 {
            return Err(Error::shape("expected three layers"));
        }
        let dims = [
            weights[0].rows(),
            weights[0].cols(),
            weights[1].cols(),
            weights[2].cols(),
        ];
        for l in 0..3 {
            if weights[l].shape() != (dims[l], dims[l + 1]) || biases[l].len() != dims[l + 1] {
                return Err(Error::shape(format!(
                    "layer {l} does not chain with its neighbours"
                )));
            }
            if !weights[l].is_finite() || biases[l].iter().any(|b| !b.is_finite()) {
                return Err(Error::NonFinite(format!("layer {l} parameters")));
            }
        }
        Ok(MlpModel {
            dims,
            weights,
            biases,
        })
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn num_parameters(&self) -> usize {
        self.dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Parameter tensors in a fixed order: W1, b1, W2, b2, W3, b3.
    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(6);
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w.as_mut_slice());
            out.push(b.as_mut_slice());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(Matrix::is_finite)
            && self.biases.iter().flatten().all(|b| b.is_finite())
    }
}

impl Gradients {
    /// Same order as [`MlpModel::parameters_mut`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(6);
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.as_slice());
            out.push(b.as_slice());
        }
        out
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_model(dims: [usize; 4], seed: u64) -> Result<MlpModel> {
    if dims.contains(&0) {
        return Err(Error::invalid(format!(
            "layer dims must be positive, got {dims:?}"
        )));
    }
    let mut rng = StreamRng::new(seed);
    let mut model = MlpModel::zeros(dims);
    for (l, w) in model.weights.iter_mut().enumerate() {
        let bound = (6.0 / (dims[l] + dims[l + 1]) as f64).sqrt();
        for v in w.as_mut_slice() {
            *v = rng.random_range(-bound..bound);
        }
    }
    Ok(model)
}

fn affine(x: &Matrix, w: &Matrix, b: &[f64]) -> Result<Matrix> {
    let mut out = matmul(x, w)?;
    out.add_row_vector(b);
    Ok(out)
}

fn relu_in_place(m: &mut Matrix) {
    for v in m.as_mut_slice() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

pub fn forward(model: &MlpModel, x: &Matrix) -> Result<(Matrix, ForwardCache)> {
    if x.cols() != model.dims[0] {
        return Err(Error::shape(format!(
            "input has {} features, model expects {}",
            x.cols(),
            model.dims[0]
        )));
    }
    let mut h1 = affine(x, &model.weights[0], &model.biases[0])?;
    relu_in_place(&mut h1);
    let mut h2 = affine(&h1, &model.weights[1], &model.biases[1])?;
    relu_in_place(&mut h2);
    let logits = affine(&h2, &model.weights[2], &model.biases[2])?;
    Ok((
        logits,
        ForwardCache {
            input: x.clone(),
            hidden: [h1, h2],
        },
    ))
}

fn column_sums(m: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for r in 0..m.rows() {
        for (o, v) in out.iter_mut().zip(m.row(r)) {
            *o += v;
        }
    }
    out
}

/// Zeroes entries of `grad` where the ReLU output was zero.
fn relu_backward(grad: &mut Matrix, activation: &Matrix) {
    for (g, &a) in grad.as_mut_slice().iter_mut().zip(activation.as_slice()) {
        if a <= 0.0 {
            *g = 0.0;
        }
    }
}

pub fn backward(model: &MlpModel, cache: &ForwardCache, grad_logits: &Matrix) -> Result<Gradients> {
    let [h1, h2] = &cache.hidden;
    let n = cache.input.rows();
    if grad_logits.shape() != (n, model.dims[3])
        || h1.shape() != (n, model.dims[1])
        || h2.shape() != (n, model.dims[2])
        || cache.input.cols() != model.dims[0]
    {
        return Err(Error::shape(
            "forward cache does not match model or gradient",
        ));
    }

    let dw3 = matmul_tn(h2, grad_logits)?;
    let db3 = column_sums(grad_logits);
    let mut d2 = matmul_nt(grad_logits, &model.weights[2])?;
    relu_backward(&mut d2, h2);

    let dw2 = matmul_tn(h1, &d2)?;
    let db2 = column_sums(&d2);
    let mut d1 = matmul_nt(&d2, &model.weights[1])?;
    relu_backward(&mut d1, h1);

    let dw1 = matmul_tn(&cache.input, &d1)?;
    let db1 = column_sums(&d1);

    Ok(Gradients {
        weights: vec![dw1, dw2, dw3],
        biases: vec![db1, db2, db3],
    })
}

/// `clamp(sigmoid(logits), ε, 1-ε)` with the default loss clamp.
pub fn predict_proba(model: &MlpModel, x: &Matrix) -> Result<Matrix> {
    let (logits, _) = forward(model, x)?;
    Ok(logits.map(|z| sigmoid_scalar(z).clamp(DEFAULT_EPSILON, 1.0 - DEFAULT_EPSILON)))
}
