use ndarray::Array2;

/// Adaptive moment estimation with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(shapes: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let (m, v) = shapes.into_iter().map(|s| (Array2::zeros(s), Array2::zeros(s))).unzip();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m,
            v,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, params: &mut [Array2<f64>], grads: &[Array2<f64>], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            ndarray::Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            });
        }
    }
}

/// Scales `grads` so their joint L2 norm is at most `max_norm`; returns the pre-clip norm.
pub fn clip_grad_norm(grads: &mut [Array2<f64>], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g.iter().map(|x| x * x).sum::<f64>()).sum::<f64>().sqrt();
    if norm > max_norm {
        let scale = max_norm / (norm + 1e-6);
        grads.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn first_step_moves_by_lr_in_sign_direction() {
        let mut p = vec![array![[1.0, -2.0]]];
        let mut adam = Adam::new([(1, 2)]);
        adam.update(&mut p, &[array![[0.5, -3.0]]], 0.1);
        assert!((p[0][[0, 0]] - 0.9).abs() < 1e-6);
        assert!((p[0][[0, 1]] + 1.9).abs() < 1e-6);
    }

    #[test]
    fn zero_lr_is_identity() {
        let mut p = vec![array![[1.0, -2.0]]];
        let before = p.clone();
        let mut adam = Adam::new([(1, 2)]);
        adam.update(&mut p, &[array![[0.5, -3.0]]], 0.0);
        assert_eq!(p, before);
    }

    #[test]
    fn clipping_caps_norm() {
        let mut g = vec![array![[3.0]], array![[4.0]]];
        assert_eq!(clip_grad_norm(&mut g, 0.5), 5.0);
        let n = (g[0][[0, 0]].powi(2) + g[1][[0, 0]].powi(2)).sqrt();
        assert!((n - 0.5).abs() < 1e-6);
        let mut small = vec![array![[0.1]]];
        clip_grad_norm(&mut small, 0.5);
        assert_eq!(small[0][[0, 0]], 0.1);
    }
}
