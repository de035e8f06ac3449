use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distribution::{ActionDistribution, ACTION_DIM};
use super::init::orthogonal;
use super::tape::{Graph, Var};
use super::PolicyError;
use crate::mdpcore::OBS_DIM;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
pub const LOG_STD_INIT: f64 = -0.5;
pub const HIDDEN_GAIN: f64 = std::f64::consts::SQRT_2;
pub const HEAD_GAIN: f64 = 0.01;

/// Layer widths. The extractor is shared; actor and critic trunks are separate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyShape {
    pub obs_dim: usize,
    pub extractor: usize,
    pub actor: Vec<usize>,
    pub critic: Vec<usize>,
}

impl Default for PolicyShape {
    fn default() -> Self {
        Self {
            obs_dim: OBS_DIM,
            extractor: 256,
            actor: vec![500, 300],
            critic: vec![500, 300],
        }
    }
}

impl PolicyShape {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let widths = [self.obs_dim, self.extractor].into_iter().chain(self.actor.iter().copied()).chain(self.critic.iter().copied());
        if widths.clone().any(|w| w == 0) {
            return Err(PolicyError::InvalidShape("layer widths must be positive".into()));
        }
        Ok(())
    }

    /// (name, rows, cols, gain) of every tensor in storage order; gain `None`
    /// marks biases and the log-std vector.
    fn layout(&self) -> Vec<(String, usize, usize, Option<f64>)> {
        let mut out = Vec::new();
        let dense = |out: &mut Vec<_>, name: String, i: usize, o: usize, gain: f64| {
            out.push((format!("{name}.weight"), i, o, Some(gain)));
            out.push((format!("{name}.bias"), 1, o, None));
        };
        dense(&mut out, "extractor".into(), self.obs_dim, self.extractor, HIDDEN_GAIN);
        let mut prev = self.extractor;
        for (k, &w) in self.actor.iter().enumerate() {
            dense(&mut out, format!("actor.{k}"), prev, w, HIDDEN_GAIN);
            prev = w;
        }
        dense(&mut out, "actor.mean".into(), prev, ACTION_DIM, HEAD_GAIN);
        prev = self.extractor;
        for (k, &w) in self.critic.iter().enumerate() {
            dense(&mut out, format!("critic.{k}"), prev, w, HIDDEN_GAIN);
            prev = w;
        }
        dense(&mut out, "critic.value".into(), prev, 1, HEAD_GAIN);
        out.push(("log_std".into(), 1, ACTION_DIM, None));
        out
    }

    fn actor_start(&self) -> usize {
        2
    }

    fn critic_start(&self) -> usize {
        2 + 2 * (self.actor.len() + 1)
    }

    pub fn tensor_count(&self) -> usize {
        self.critic_start() + 2 * (self.critic.len() + 1) + 1
    }

    pub fn parameter_count(&self) -> usize {
        self.layout().iter().map(|(_, r, c, _)| r * c).sum()
    }
}

/// Network weights. Tensor `k` is `names[k]`; the last tensor is the log-std row.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    shape: PolicyShape,
    names: Vec<String>,
    tensors: Vec<Array2<f64>>,
}

/// Graph handles produced by [`PolicyParams::forward_graph`].
#[derive(Debug, Clone, Copy)]
pub struct PolicyVars {
    /// (n, 2), tanh-squashed.
    pub mean: Var,
    /// (n, 1)
    pub value: Var,
    /// (1, 2), clamped.
    pub log_std: Var,
}

impl PolicyParams {
    /// Orthogonal weights, zero biases, log-std at its initial value.
    pub fn init(shape: PolicyShape, seed: u64) -> Result<Self, PolicyError> {
        shape.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = shape.layout();
        let names = layout.iter().map(|(n, ..)| n.clone()).collect();
        let tensors = layout
            .iter()
            .map(|(name, r, c, gain)| match gain {
                Some(g) => orthogonal(*r, *c, *g, &mut rng),
                None if name == "log_std" => Array2::from_elem((*r, *c), LOG_STD_INIT),
                None => Array2::zeros((*r, *c)),
            })
            .collect();
        Ok(Self { shape, names, tensors })
    }

    pub fn zeros(shape: PolicyShape) -> Result<Self, PolicyError> {
        let mut p = Self::init(shape, 0)?;
        p.tensors.iter_mut().for_each(|t| t.fill(0.0));
        Ok(p)
    }

    /// Rebuilds parameters from named tensors in storage order.
    pub fn from_tensors(shape: PolicyShape, tensors: Vec<(String, Array2<f64>)>) -> Result<Self, PolicyError> {
        shape.validate()?;
        let layout = shape.layout();
        if layout.len() != tensors.len() {
            return Err(PolicyError::InvalidShape(format!(
                "expected {} tensors, found {}",
                layout.len(),
                tensors.len()
            )));
        }
        for ((name, r, c, _), (found, t)) in layout.iter().zip(&tensors) {
            if name != found || t.dim() != (*r, *c) {
                return Err(PolicyError::InvalidShape(format!(
                    "tensor {found} {:?} does not match {name} ({r}, {c})",
                    t.dim()
                )));
            }
            if t.iter().any(|x| !x.is_finite()) {
                return Err(PolicyError::NonFinite("weights"));
            }
        }
        let (names, tensors) = tensors.into_iter().unzip();
        Ok(Self { shape, names, tensors })
    }

    pub fn shape(&self) -> &PolicyShape {
        &self.shape
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Array2<f64>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.tensors
    }

    pub fn tensor(&self, name: &str) -> Option<&Array2<f64>> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn log_std(&self) -> [f64; ACTION_DIM] {
        let t = &self.tensors[self.tensors.len() - 1];
        std::array::from_fn(|i| t[[0, i]].clamp(LOG_STD_MIN, LOG_STD_MAX))
    }

    /// Keeps the stored log-std inside its clamp range.
    pub fn clamp_log_std(&mut self) {
        let last = self.tensors.len() - 1;
        self.tensors[last].mapv_inplace(|x| x.clamp(LOG_STD_MIN, LOG_STD_MAX));
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    fn check_obs(&self, cols: usize) -> Result<(), PolicyError> {
        if cols != self.shape.obs_dim {
            return Err(PolicyError::ObservationLength {
                expected: self.shape.obs_dim,
                found: cols,
            });
        }
        Ok(())
    }

    /// Records the forward pass for `obs` (n × obs_dim) on `g`.
    pub fn forward_graph<'a>(&'a self, g: &mut Graph<'a>, obs: Var) -> Result<PolicyVars, PolicyError> {
        self.check_obs(g.value(obs).ncols())?;
        let p: Vec<Var> = self.tensors.iter().enumerate().map(|(i, t)| g.param(i, t)).collect();
        let dense = |g: &mut Graph<'a>, x: Var, k: usize| -> Result<Var, PolicyError> {
            let h = g.matmul(x, p[k])?;
            g.add(h, p[k + 1])
        };
        let h = dense(g, obs, 0)?;
        let features = g.relu(h);

        let mut x = features;
        let mut k = self.shape.actor_start();
        for _ in &self.shape.actor {
            let h = dense(g, x, k)?;
            x = g.relu(h);
            k += 2;
        }
        let pre = dense(g, x, k)?;
        let mean = g.tanh(pre);

        let mut x = features;
        let mut k = self.shape.critic_start();
        for _ in &self.shape.critic {
            let h = dense(g, x, k)?;
            x = g.relu(h);
            k += 2;
        }
        let value = dense(g, x, k)?;
        let log_std = g.clamp(p[p.len() - 1], LOG_STD_MIN, LOG_STD_MAX);
        Ok(PolicyVars { mean, value, log_std })
    }

    fn dense_plain(&self, x: &Array2<f64>, k: usize, relu: bool) -> Array2<f64> {
        let mut h = x.dot(&self.tensors[k]) + &self.tensors[k + 1];
        if relu {
            h.mapv_inplace(|v| v.max(0.0));
        }
        h
    }

    /// Inference without a graph: (means n×2, values n).
    pub fn forward_batch(&self, obs: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Vec<f64>), PolicyError> {
        self.check_obs(obs.ncols())?;
        let features = self.dense_plain(&obs.to_owned(), 0, true);
        let mut x = features.clone();
        let mut k = self.shape.actor_start();
        for _ in &self.shape.actor {
            x = self.dense_plain(&x, k, true);
            k += 2;
        }
        let mut mean = self.dense_plain(&x, k, false);
        mean.mapv_inplace(f64::tanh);
        let mut x = features;
        let mut k = self.shape.critic_start();
        for _ in &self.shape.critic {
            x = self.dense_plain(&x, k, true);
            k += 2;
        }
        let value = self.dense_plain(&x, k, false);
        Ok((mean, value.index_axis(Axis(1), 0).to_vec()))
    }

    pub fn forward(&self, obs: &[f64]) -> Result<(ActionDistribution, f64), PolicyError> {
        let view = ArrayView2::from_shape((1, obs.len()), obs).expect("row vector");
        let (mean, value) = self.forward_batch(view)?;
        let dist = ActionDistribution {
            mean: std::array::from_fn(|i| mean[[0, i]]),
            log_std: self.log_std(),
        };
        Ok((dist, value[0]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn tiny() -> PolicyShape {
        PolicyShape {
            obs_dim: 2,
            extractor: 1,
            actor: vec![1],
            critic: vec![1],
        }
    }

    #[test]
    fn default_shape_sizes() {
        let s = PolicyShape::default();
        assert_eq!(s.obs_dim, 18);
        let expected = (18 * 256 + 256) + (256 * 500 + 500) + (500 * 300 + 300) + (300 * 2 + 2) + (256 * 500 + 500)
            + (500 * 300 + 300)
            + (300 + 1)
            + 2;
        assert_eq!(s.parameter_count(), expected);
        assert_eq!(s.tensor_count(), s.layout().len());
    }

    #[test]
    fn init_is_seeded() {
        let s = tiny();
        assert_eq!(PolicyParams::init(s.clone(), 1).unwrap(), PolicyParams::init(s.clone(), 1).unwrap());
        assert_ne!(PolicyParams::init(s.clone(), 1).unwrap(), PolicyParams::init(s, 2).unwrap());
    }

    #[test]
    fn head_weights_small_over_many_seeds() {
        let s = PolicyShape {
            obs_dim: 18,
            extractor: 32,
            actor: vec![24, 16],
            critic: vec![24, 16],
        };
        for seed in 0..100 {
            let p = PolicyParams::init(s.clone(), seed).unwrap();
            for name in ["actor.mean.weight", "critic.value.weight"] {
                let m = p.tensor(name).unwrap().iter().fold(0.0f64, |m, x| m.max(x.abs()));
                assert!(m <= 0.1, "{name} seed {seed}: {m}");
            }
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let p = PolicyParams::zeros(PolicyShape::default()).unwrap();
        let (d, v) = p.forward(&[0.3; 18]).unwrap();
        assert_eq!(d.mean, [0.0, 0.0]);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn hand_computed_single_unit_network() {
        let s = tiny();
        let tensors = vec![
            ("extractor.weight".to_string(), array![[0.5], [-1.0]]),
            ("extractor.bias".to_string(), array![[0.1]]),
            ("actor.0.weight".to_string(), array![[2.0]]),
            ("actor.0.bias".to_string(), array![[-0.3]]),
            ("actor.mean.weight".to_string(), array![[0.7, -0.4]]),
            ("actor.mean.bias".to_string(), array![[0.05, 0.0]]),
            ("critic.0.weight".to_string(), array![[-1.5]]),
            ("critic.0.bias".to_string(), array![[1.0]]),
            ("critic.value.weight".to_string(), array![[3.0]]),
            ("critic.value.bias".to_string(), array![[0.25]]),
            ("log_std".to_string(), array![[-0.5, -0.5]]),
        ];
        let p = PolicyParams::from_tensors(s, tensors).unwrap();
        let (d, v) = p.forward(&[1.0, 0.2]).unwrap();
        // extractor: relu(0.5 - 0.2 + 0.1) = 0.4
        // actor: relu(0.8 - 0.3) = 0.5 → tanh(0.35 + 0.05), tanh(-0.2)
        // critic: relu(-0.6 + 1.0) = 0.4 → 1.2 + 0.25
        assert_relative_eq!(d.mean[0], 0.4f64.tanh(), epsilon = 1e-12);
        assert_relative_eq!(d.mean[1], (-0.2f64).tanh(), epsilon = 1e-12);
        assert_relative_eq!(v, 1.45, epsilon = 1e-12);
    }

    #[test]
    fn graph_and_plain_forward_agree() {
        let s = PolicyShape {
            obs_dim: 18,
            extractor: 8,
            actor: vec![6, 5],
            critic: vec![7],
        };
        let p = PolicyParams::init(s, 9).unwrap();
        let obs = Array2::from_shape_fn((3, 18), |(i, j)| ((i * 18 + j) as f64 * 0.37).sin());
        let (mean, value) = p.forward_batch(obs.view()).unwrap();
        let mut g = Graph::new();
        let o = g.constant(obs);
        let vars = p.forward_graph(&mut g, o).unwrap();
        assert_eq!(g.value(vars.mean), &mean);
        assert_eq!(g.value(vars.value).column(0).to_vec(), value);
    }

    #[test]
    fn wrong_observation_length() {
        let p = PolicyParams::init(tiny(), 0).unwrap();
        assert!(matches!(
            p.forward(&[1.0; 3]),
            Err(PolicyError::ObservationLength { expected: 2, found: 3 })
        ));
    }
}
