//! Return-regression objectives on per-step values `x_t` (the proxy reward
//! of step `t`, summed over agents) of a single episode with return `R`.

use lare_core::SeededRng;

use crate::error::{DecompError, Result};

/// `(R − Σ_t x_t)²` and its gradient with respect to `x`.
pub fn rd_objective(x: &[f64], ret: f64) -> (f64, Vec<f64>) {
    let s: f64 = x.iter().sum();
    let e = ret - s;
    (e * e, vec![-2.0 * e; x.len()])
}

/// Loss on the sorted index subset `subset` of size `K` out of `T = x.len()`.
///
/// With `Ŝ = (T/K)·Σ_{t∈I} x_t` the biased loss is `(R − Ŝ)²`. The unbiased
/// variant subtracts `T(T−K)/K · s²`, where `s²` is the sample variance
/// (denominator `K−1`) of the selected values; over uniformly drawn subsets
/// its mean equals `(R − Σ_t x_t)²`. It needs `K ≥ 2` unless `K = T`.
pub fn subset_objective(x: &[f64], ret: f64, subset: &[usize], unbiased: bool) -> Result<(f64, Vec<f64>)> {
    let t = x.len();
    let k = subset.len();
    if k == 0 || k > t {
        return Err(DecompError::InvalidInput(format!(
            "subsequence length {k} outside 1..={t}"
        )));
    }
    if subset.windows(2).any(|w| w[0] >= w[1]) || subset[k - 1] >= t {
        return Err(DecompError::InvalidInput(
            "subset must be strictly increasing indices below T".into(),
        ));
    }
    let scale = t as f64 / k as f64;
    let s = scale * subset.iter().map(|&i| x[i]).sum::<f64>();
    let e = ret - s;
    let mut loss = e * e;
    let mut grad = vec![0.0; t];
    for &i in subset {
        grad[i] = -2.0 * scale * e;
    }
    // at K = T the correction factor is zero
    if unbiased && k < t {
        if k < 2 {
            return Err(DecompError::InvalidInput(
                "the unbiased estimator needs a subsequence length of at least 2".into(),
            ));
        }
        let mean = subset.iter().map(|&i| x[i]).sum::<f64>() / k as f64;
        let var = subset.iter().map(|&i| (x[i] - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        let c = (t * (t - k)) as f64 / k as f64;
        loss -= c * var;
        for &i in subset {
            grad[i] -= c * 2.0 * (x[i] - mean) / (k - 1) as f64;
        }
    }
    Ok((loss, grad))
}

/// Uniform size-`k` subset of `0..t`, sorted.
pub fn sample_subset(t: usize, k: usize, rng: &mut SeededRng) -> Result<Vec<usize>> {
    if k == 0 || k > t {
        return Err(DecompError::InvalidInput(format!(
            "subsequence length {k} outside 1..={t}"
        )));
    }
    let mut s = rng.sample_without_replacement(t, k);
    s.sort_unstable();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_has_zero_loss() {
        let (l, g) = rd_objective(&[2.0, 2.0, 2.0], 6.0);
        assert_eq!(l, 0.0);
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn single_step() {
        let (l, _) = subset_objective(&[0.25], 1.0, &[0], false).unwrap();
        assert_eq!(l, 0.5625);
        let (l, _) = subset_objective(&[0.25], 1.0, &[0], true).unwrap();
        assert_eq!(l, 0.5625);
    }

    #[test]
    fn full_subset_is_rd() {
        let x = [0.3, -1.2, 0.7, 2.5];
        let rd = rd_objective(&x, 1.1);
        for unbiased in [false, true] {
            assert_eq!(subset_objective(&x, 1.1, &[0, 1, 2, 3], unbiased).unwrap(), rd);
        }
    }

    #[test]
    fn rejects_bad_subsets() {
        let x = [1.0, 2.0, 3.0];
        assert!(subset_objective(&x, 0.0, &[], false).is_err());
        assert!(subset_objective(&x, 0.0, &[1, 0], false).is_err());
        assert!(subset_objective(&x, 0.0, &[3], false).is_err());
        assert!(subset_objective(&x, 0.0, &[1], true).is_err());
        assert!(sample_subset(3, 4, &mut SeededRng::new(0)).is_err());
    }

    #[test]
    fn gradient_matches_differences() {
        let x = vec![0.4, -0.3, 1.2, 0.8, -0.5];
        let subset = [0, 2, 3];
        for unbiased in [false, true] {
            let (_, g) = subset_objective(&x, 0.9, &subset, unbiased).unwrap();
            for i in 0..x.len() {
                let h = 1e-6;
                let mut p = x.clone();
                p[i] += h;
                let mut m = x.clone();
                m[i] -= h;
                let fd = (subset_objective(&p, 0.9, &subset, unbiased).unwrap().0
                    - subset_objective(&m, 0.9, &subset, unbiased).unwrap().0)
                    / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-6, "{unbiased} {i}: {fd} vs {}", g[i]);
            }
        }
    }
}
