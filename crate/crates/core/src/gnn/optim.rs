use ndarray::{Array1, Array2};

use super::grad::Gradients;
use super::model::GcnModel;
use crate::error::{Error, Result};

/// Adam state over the parameters of one model.
#[derive(Debug, Clone)]
pub struct OptimState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
}

impl OptimState {
    pub fn adam(lr: f64) -> Self {
        OptimState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m_w: Vec::new(),
            v_w: Vec::new(),
            m_b: Vec::new(),
            v_b: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    fn ensure_shapes(&mut self, model: &GcnModel) {
        if self.m_w.len() == model.num_layers()
            && self.m_w.iter().zip(&model.weights).all(|(m, w)| m.dim() == w.dim())
        {
            return;
        }
        self.m_w = model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
        self.v_w = self.m_w.clone();
        self.m_b = model.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect();
        self.v_b = self.m_b.clone();
    }

    /// One Adam update of layers `first_trainable..`. Earlier layers are not
    /// touched at all.
    pub fn step(&mut self, model: &mut GcnModel, grads: &Gradients, first_trainable: usize) -> Result<()> {
        if grads.weights.len() != model.num_layers() {
            return Err(Error::Shape("gradient layer count does not match model".into()));
        }
        self.ensure_shapes(model);
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let lr_t = self.lr * (1.0 - b2.powi(t)).sqrt() / (1.0 - b1.powi(t));
        for l in first_trainable..model.num_layers() {
            adam_update(
                model.weights[l].as_slice_mut().expect("contiguous weights"),
                grads.weights[l].as_slice().expect("contiguous gradients"),
                self.m_w[l].as_slice_mut().expect("contiguous moments"),
                self.v_w[l].as_slice_mut().expect("contiguous moments"),
                (b1, b2, eps, lr_t),
            );
            adam_update(
                model.biases[l].as_slice_mut().expect("contiguous biases"),
                grads.biases[l].as_slice().expect("contiguous gradients"),
                self.m_b[l].as_slice_mut().expect("contiguous moments"),
                self.v_b[l].as_slice_mut().expect("contiguous moments"),
                (b1, b2, eps, lr_t),
            );
        }
        Ok(())
    }
}

fn adam_update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], (b1, b2, eps, lr_t): (f64, f64, f64, f64)) {
    for i in 0..p.len() {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        p[i] -= lr_t * m[i] / (v[i].sqrt() + eps);
    }
}
