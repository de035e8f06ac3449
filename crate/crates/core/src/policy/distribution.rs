use rand::Rng;
use rand_distr::StandardNormal;

pub const ACTION_DIM: usize = 2;

/// ln(2π)
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Diagonal Gaussian over the pre-squash action space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionDistribution {
    pub mean: [f64; ACTION_DIM],
    pub log_std: [f64; ACTION_DIM],
}

impl ActionDistribution {
    pub fn std(&self) -> [f64; ACTION_DIM] {
        self.log_std.map(f64::exp)
    }

    pub fn log_prob(&self, action: [f64; ACTION_DIM]) -> f64 {
        (0..ACTION_DIM)
            .map(|i| {
                let z = (action[i] - self.mean[i]) * (-self.log_std[i]).exp();
                -0.5 * z * z - self.log_std[i] - 0.5 * LN_2PI
            })
            .sum()
    }

    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|l| l + 0.5 * (LN_2PI + 1.0)).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; ACTION_DIM] {
        let std = self.std();
        std::array::from_fn(|i| {
            let eps: f64 = rng.sample(StandardNormal);
            self.mean[i] + std[i] * eps
        })
    }
}

/// Per-dimension entropy term shared with the differentiable loss.
pub fn entropy_offset() -> f64 {
    0.5 * (LN_2PI + 1.0)
}

pub fn ln_2pi() -> f64 {
    LN_2PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit(mean: [f64; 2]) -> ActionDistribution {
        ActionDistribution { mean, log_std: [0.0; 2] }
    }

    #[test]
    fn log_prob_at_mean_with_unit_std() {
        let d = unit([0.3, -0.2]);
        assert_relative_eq!(d.log_prob(d.mean), -(2.0 * std::f64::consts::PI).ln(), epsilon = 1e-12);
        assert_relative_eq!(d.log_prob(d.mean), -1.837877, epsilon = 1e-6);
    }

    #[test]
    fn unit_entropy() {
        let e = unit([0.0; 2]).entropy();
        assert_relative_eq!(e, (2.0 * std::f64::consts::PI * std::f64::consts::E).ln(), epsilon = 1e-12);
        assert_relative_eq!(e, 2.837877, epsilon = 1e-6);
    }

    #[test]
    fn entropy_increases_with_std() {
        let mut prev = f64::NEG_INFINITY;
        for k in 0..50 {
            let l = -5.0 + 0.14 * k as f64;
            let e = ActionDistribution { mean: [0.0; 2], log_std: [l, 0.0] }.entropy();
            assert!(e > prev);
            prev = e;
        }
    }

    #[test]
    fn sample_mean_converges() {
        let d = unit([0.4, -0.7]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut acc = [0.0; 2];
        for _ in 0..n {
            let s = d.sample(&mut rng);
            acc[0] += s[0];
            acc[1] += s[1];
        }
        assert!((acc[0] / n as f64 - 0.4).abs() < 0.02);
        assert!((acc[1] / n as f64 + 0.7).abs() < 0.02);
    }

    #[test]
    fn log_prob_matches_density_formula() {
        let d = ActionDistribution { mean: [0.1, 0.5], log_std: [-0.5, 0.3] };
        let a = [0.7, -0.4];
        let s = d.std();
        let pdf: f64 = (0..2)
            .map(|i| {
                (-(a[i] - d.mean[i]).powi(2) / (2.0 * s[i] * s[i])).exp() / (s[i] * (2.0 * std::f64::consts::PI).sqrt())
            })
            .product();
        assert_relative_eq!(d.log_prob(a), pdf.ln(), epsilon = 1e-12);
    }
}
