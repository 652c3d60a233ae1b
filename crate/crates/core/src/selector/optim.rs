use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

/// Parameter update state for one flat parameter vector.
pub(crate) struct Stepper {
    kind: Optimizer,
    lr: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl Stepper {
    pub(crate) fn new(kind: Optimizer, lr: f64, len: usize) -> Self {
        let (m, v) = match kind {
            Optimizer::Sgd => (Vec::new(), Vec::new()),
            Optimizer::Adam => (alloc::vec![0.0; len], alloc::vec![0.0; len]),
        };
        Self { kind, lr, t: 0, m, v }
    }

    pub(crate) fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self.kind {
            Optimizer::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            Optimizer::Adam => {
                self.t += 1;
                let c1 = 1.0 - libm::pow(BETA1, f64::from(self.t));
                let c2 = 1.0 - libm::pow(BETA2, f64::from(self.t));
                for i in 0..params.len() {
                    let g = grad[i];
                    self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
                    self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * g * g;
                    let m_hat = self.m[i] / c1;
                    let v_hat = self.v[i] / c2;
                    params[i] -= self.lr * m_hat / (libm::sqrt(v_hat) + EPS);
                }
            }
        }
    }
}
