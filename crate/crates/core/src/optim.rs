use crate::error::{Error, Result};
use crate::model::ParamSet;
use crate::tensor::Tensor;

/// Adam with bias correction and L2-coupled weight decay (the decay term is
/// added to the gradient of weight matrices before the moment updates).
#[derive(Clone, Debug)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
}

impl AdamState {
    pub fn new<P: ParamSet>(params: &P) -> Self {
        let zeros: Vec<Tensor> = params.tensors().iter().map(|(_, t)| Tensor::zeros(t.rows(), t.cols())).collect();
        AdamState {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update. `grads` follows [`ParamSet::tensors`] order.
    pub fn step<P: ParamSet>(&mut self, params: &mut P, grads: &[Tensor], lr: f64, weight_decay: f64) -> Result<()> {
        let mut tensors = params.tensors_mut();
        if tensors.len() != grads.len() || tensors.len() != self.first.len() {
            return Err(Error::shape("adam_step", (tensors.len(), 0), (grads.len(), 0)));
        }
        for (((_, p), g), m) in tensors.iter().zip(grads).zip(&self.first) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(Error::shape("adam_step", p.shape(), g.shape()));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (k, (name, p)) in tensors.iter_mut().enumerate() {
            let decay = if P::decays(name) { weight_decay } else { 0.0 };
            let m = self.first[k].data_mut();
            let v = self.second[k].data_mut();
            for (i, (pv, &gv)) in p.data_mut().iter_mut().zip(grads[k].data()).enumerate() {
                let g = gv + decay * *pv;
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let mhat = m[i] / c1;
                let vhat = v[i] / c2;
                *pv -= lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone)]
    struct One {
        w: Tensor,
        b: Tensor,
    }

    impl ParamSet for One {
        fn tensors(&self) -> Vec<(&'static str, &Tensor)> {
            vec![("w", &self.w), ("b", &self.b)]
        }
        fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
            vec![("w", &mut self.w), ("b", &mut self.b)]
        }
    }

    fn one(w: f64, b: f64) -> One {
        One {
            w: Tensor::scalar(w),
            b: Tensor::scalar(b),
        }
    }

    #[test]
    fn zero_gradient_no_decay_is_noop() {
        let mut p = one(0.3, -2.0);
        let mut s = AdamState::new(&p);
        for _ in 0..5 {
            s.step(&mut p, &[Tensor::scalar(0.0), Tensor::scalar(0.0)], 0.01, 0.0).unwrap();
        }
        assert_eq!(p.w.get(0, 0), 0.3);
        assert_eq!(p.b.get(0, 0), -2.0);
        assert_eq!(s.steps(), 5);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m_hat = g, v_hat = g^2 → p -= lr * g / (|g| + eps)
        let mut p = one(1.0, 1.0);
        let mut s = AdamState::new(&p);
        s.step(&mut p, &[Tensor::scalar(1.0), Tensor::scalar(1.0)], 0.01, 0.0).unwrap();
        let expected = 1.0 - 0.01 / (1.0 + 1e-8);
        assert!((p.w.get(0, 0) - expected).abs() < 1e-15);
        assert!((p.w.get(0, 0) - 0.99).abs() < 1e-9);
    }

    #[test]
    fn decay_skips_biases() {
        let mut p = one(1.0, 1.0);
        let mut s = AdamState::new(&p);
        s.step(&mut p, &[Tensor::scalar(0.0), Tensor::scalar(0.0)], 0.01, 0.5).unwrap();
        assert!(p.w.get(0, 0) < 1.0);
        assert_eq!(p.b.get(0, 0), 1.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = one(1.0, 1.0);
        let mut s = AdamState::new(&p);
        assert!(s.step(&mut p, &[Tensor::zeros(2, 1), Tensor::scalar(0.0)], 0.01, 0.0).is_err());
        assert!(s.step(&mut p, &[Tensor::scalar(0.0)], 0.01, 0.0).is_err());
    }
}
