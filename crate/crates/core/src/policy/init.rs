use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

/// Random matrix with orthonormal rows or columns (whichever is shorter), scaled by `gain`.
pub fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Array2<f64> {
    let (long, short) = (rows.max(cols), rows.min(cols));
    let mut q = Array2::<f64>::zeros((long, short));
    for j in 0..short {
        loop {
            let mut v: Vec<f64> = (0..long).map(|_| rng.sample(StandardNormal)).collect();
            // Two Gram-Schmidt passes keep the columns orthogonal to rounding.
            for _ in 0..2 {
                for k in 0..j {
                    let dot: f64 = (0..long).map(|i| v[i] * q[[i, k]]).sum();
                    for (i, vi) in v.iter_mut().enumerate() {
                        *vi -= dot * q[[i, k]];
                    }
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for (i, vi) in v.iter().enumerate() {
                    q[[i, j]] = vi / norm;
                }
                break;
            }
        }
    }
    let q = if rows >= cols { q } else { q.reversed_axes() };
    q.as_standard_layout().to_owned() * gain
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn columns_orthonormal_tall_and_rows_orthonormal_wide() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tall = orthogonal(7, 3, 1.0, &mut rng);
        let gram = tall.t().dot(&tall);
        assert!((gram - Array2::<f64>::eye(3)).iter().all(|d| d.abs() < 1e-12));
        let wide = orthogonal(3, 7, 2.0, &mut rng);
        assert_eq!(wide.dim(), (3, 7));
        let gram = wide.dot(&wide.t());
        assert!((gram - Array2::<f64>::eye(3) * 4.0).iter().all(|d| d.abs() < 1e-12));
    }
}
