use nalgebra::{DMatrix, SymmetricEigen};

use super::{encode_labels, ClassifierKind, LinearModel, Standardizer};
use crate::error::{Error, Result};
use crate::transform::FeatureMatrix;

/// Ten log-spaced regularization strengths from 1e-3 to 1e3.
pub fn default_alphas() -> Vec<f64> {
    (0..10).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 9.0)).collect()
}

#[derive(Debug, Clone)]
pub struct RidgeFit {
    pub model: LinearModel,
    pub alpha: f64,
    /// Mean squared leave-one-out residual for each candidate alpha.
    pub loo_errors: Vec<f64>,
}

/// One-vs-all ridge regression on +/-1 targets over standardized features.
///
/// The regularization strength is picked by exact leave-one-out error from a
/// single eigendecomposition of the smaller Gram matrix. The intercept is
/// not penalized.
pub fn ridge_fit(features: &FeatureMatrix, labels: &[String], alphas: &[f64]) -> Result<RidgeFit> {
    let (n, p) = (features.rows(), features.cols());
    if labels.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{n} feature rows but {} labels",
            labels.len()
        )));
    }
    if alphas.is_empty() || alphas.iter().any(|&a| a <= 0.0 || !a.is_finite()) {
        return Err(Error::InvalidArgument("alphas must be positive and finite".into()));
    }
    let (classes, y_index) = encode_labels(labels)?;
    let k = classes.len();
    let standardizer = Standardizer::fit(features)?;
    let z = DMatrix::from_row_slice(n, p, &standardizer.apply(features));

    let mut y = DMatrix::from_element(n, k, -1.0);
    for (i, &c) in y_index.iter().enumerate() {
        y[(i, c)] = 1.0;
    }
    let y_mean: Vec<f64> = (0..k).map(|c| y.column(c).mean()).collect();
    let mut yc = y;
    for (c, &mean) in y_mean.iter().enumerate() {
        yc.column_mut(c).add_scalar_mut(-mean);
    }

    let basis = SpectralBasis::new(&z);
    // Projection of the centered targets onto the basis, shared by all alphas.
    let projected = basis.vectors.transpose() * &yc;

    let mut loo_errors = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let factors = basis.hat_factors(alpha);
        let fitted = &basis.vectors * DMatrix::from_diagonal(&factors) * &projected;
        let mut sse = 0.0;
        for i in 0..n {
            let leverage = 1.0 / n as f64
                + basis
                    .vectors
                    .row(i)
                    .iter()
                    .zip(factors.iter())
                    .map(|(u, f)| u * u * f)
                    .sum::<f64>();
            let denom = 1.0 - leverage;
            if denom <= 1e-12 {
                sse = f64::INFINITY;
                break;
            }
            for c in 0..k {
                let r = (yc[(i, c)] - fitted[(i, c)]) / denom;
                sse += r * r;
            }
        }
        loo_errors.push(sse / (n * k) as f64);
    }
    let best = loo_errors
        .iter()
        .enumerate()
        .fold(0, |best, (i, &e)| if e < loo_errors[best] { i } else { best });
    let alpha = alphas[best];

    let weights = basis.weights(&z, &projected, alpha);
    let mut flat = Vec::with_capacity(p * k);
    for j in 0..p {
        for c in 0..k {
            flat.push(weights[(j, c)]);
        }
    }
    Ok(RidgeFit {
        model: LinearModel {
            kind: ClassifierKind::Ridge,
            class_labels: classes,
            feature_means: standardizer.means,
            feature_scales: standardizer.scales,
            weights: flat,
            intercepts: y_mean,
        },
        alpha,
        loo_errors,
    })
}

/// Orthonormal-ish basis for the column space of the standardized design.
///
/// With `n <= p`, eigendecompose `Z Z^T = U S U^T`; fitted values are
/// `U diag(s / (s + a)) U^T y`. With `n > p`, eigendecompose `Z^T Z = V S V^T`
/// and use `M = Z V`; fitted values are `M diag(1 / (s + a)) M^T y`. Both are
/// expressed as `vectors * diag(hat_factors) * vectors^T`.
struct SpectralBasis {
    dual: bool,
    vectors: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    /// Only in the primal case.
    right: Option<DMatrix<f64>>,
}

impl SpectralBasis {
    fn new(z: &DMatrix<f64>) -> Self {
        let (n, p) = z.shape();
        if n <= p {
            let gram = z * z.transpose();
            let eig = SymmetricEigen::new(gram);
            Self {
                dual: true,
                eigenvalues: eig.eigenvalues.iter().map(|&s| s.max(0.0)).collect(),
                vectors: eig.eigenvectors,
                right: None,
            }
        } else {
            let gram = z.transpose() * z;
            let eig = SymmetricEigen::new(gram);
            Self {
                dual: false,
                eigenvalues: eig.eigenvalues.iter().map(|&s| s.max(0.0)).collect(),
                vectors: z * &eig.eigenvectors,
                right: Some(eig.eigenvectors),
            }
        }
    }

    fn hat_factors(&self, alpha: f64) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues
                .iter()
                .map(|&s| if self.dual { s / (s + alpha) } else { 1.0 / (s + alpha) }),
        )
    }

    /// Ridge weights (features x classes) given `vectors^T * y`.
    fn weights(&self, z: &DMatrix<f64>, projected: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
        let inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&s| 1.0 / (s + alpha)),
        ));
        match &self.right {
            // w = Z^T U diag(1/(s+a)) U^T y
            None => z.transpose() * (&self.vectors * (inv * projected)),
            // w = V diag(1/(s+a)) (ZV)^T y
            Some(v) => v * (inv * projected),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(n: usize, p: usize, k: usize, seed: u64) -> (FeatureMatrix, Vec<String>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<String> = (0..n)
            .map(|i| ((i % k) as u8 + b'a') as char)
            .map(String::from)
            .collect();
        let values = (0..n * p)
            .map(|idx| {
                let class = idx / p % k;
                rng.random_range(0.0..1.0) * 0.5 + if idx % p == class { 1.0 } else { 0.0 }
            })
            .collect();
        (FeatureMatrix::new(n, p, values).unwrap(), labels)
    }

    // Brute force: refit without row i (intercept re-estimated, standardization
    // held fixed) and predict row i.
    fn brute_loo(features: &FeatureMatrix, labels: &[String], alpha: f64) -> f64 {
        let (classes, idx) = encode_labels(labels).unwrap();
        let k = classes.len();
        let st = Standardizer::fit(features).unwrap();
        let (n, p) = (features.rows(), features.cols());
        let z = DMatrix::from_row_slice(n, p, &st.apply(features));
        let mut sse = 0.0;
        for hold in 0..n {
            let keep: Vec<usize> = (0..n).filter(|&i| i != hold).collect();
            let zk = z.select_rows(&keep);
            let zmean = zk.row_mean();
            let mut zc = zk.clone();
            for mut r in zc.row_iter_mut() {
                r -= &zmean;
            }
            let gram = zc.transpose() * &zc + DMatrix::identity(p, p) * alpha;
            let chol = gram.cholesky().unwrap();
            for c in 0..k {
                let y: Vec<f64> = keep.iter().map(|&i| if idx[i] == c { 1.0 } else { -1.0 }).collect();
                let ymean = y.iter().sum::<f64>() / y.len() as f64;
                let yc = nalgebra::DVector::from_iterator(y.len(), y.iter().map(|v| v - ymean));
                let w = chol.solve(&(zc.transpose() * yc));
                let pred = ymean + ((z.row(hold) - &zmean) * &w)[0];
                let truth = if idx[hold] == c { 1.0 } else { -1.0 };
                sse += (truth - pred).powi(2);
            }
        }
        sse / (n * k) as f64
    }

    #[test]
    fn loo_identity_matches_refitting() {
        // Both the dual (n <= p) and primal (n > p) routes.
        for (n, p) in [(12, 30), (25, 6)] {
            let (x, y) = random_problem(n, p, 3, n as u64);
            let alphas = [0.01, 1.0, 50.0];
            let fit = ridge_fit(&x, &y, &alphas).unwrap();
            for (&a, &e) in alphas.iter().zip(&fit.loo_errors) {
                let brute = brute_loo(&x, &y, a);
                assert!(
                    (e - brute).abs() < 1e-8 * (1.0 + brute),
                    "n={n} alpha={a}: {e} vs {brute}"
                );
            }
        }
    }

    #[test]
    fn dual_and_primal_weights_agree() {
        let (x, y) = random_problem(20, 20, 2, 1);
        // n == p takes the dual route; dropping one row takes the primal one
        // on a different problem, so compare against the normal equations.
        let fit = ridge_fit(&x, &y, &[0.5]).unwrap();
        let st = Standardizer::fit(&x).unwrap();
        let z = DMatrix::from_row_slice(20, 20, &st.apply(&x));
        let (_, idx) = encode_labels(&y).unwrap();
        let t: Vec<f64> = idx.iter().map(|&c| if c == 0 { 1.0 } else { -1.0 }).collect();
        let mean = t.iter().sum::<f64>() / 20.0;
        let tc = nalgebra::DVector::from_iterator(20, t.iter().map(|v| v - mean));
        let w = (z.transpose() * &z + DMatrix::identity(20, 20) * 0.5)
            .cholesky()
            .unwrap()
            .solve(&(z.transpose() * tc));
        for j in 0..20 {
            assert!((fit.model.weights[j * 2] - w[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn separable_training_accuracy() {
        let (x, y) = random_problem(40, 15, 2, 3);
        let fit = ridge_fit(&x, &y, &default_alphas()).unwrap();
        let pred = fit.model.predict(&x).unwrap();
        assert_eq!(super::super::accuracy(&pred, &y), 1.0);
        assert_eq!(fit.loo_errors.len(), 10);
        assert!(default_alphas().contains(&fit.alpha));
    }

    #[test]
    fn duplicated_columns_keep_predictions() {
        let (x, y) = random_problem(40, 10, 2, 4);
        let mut wide = Vec::new();
        for row in x.iter_rows() {
            wide.extend_from_slice(row);
            wide.extend_from_slice(row);
        }
        let x2 = FeatureMatrix::new(40, 20, wide).unwrap();
        let a = ridge_fit(&x, &y, &default_alphas()).unwrap().model.predict(&x).unwrap();
        let b = ridge_fit(&x2, &y, &default_alphas())
            .unwrap()
            .model
            .predict(&x2)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn heavy_regularization_predicts_majority() {
        let (x, mut y) = random_problem(30, 8, 2, 5);
        for l in y.iter_mut().take(8) {
            *l = "b".into();
        }
        let majority = if y.iter().filter(|l| *l == "b").count() > 15 {
            "b"
        } else {
            "a"
        };
        let fit = ridge_fit(&x, &y, &[1e12]).unwrap();
        assert!(fit.model.predict(&x).unwrap().iter().all(|l| l == majority));
    }

    #[test]
    fn standardized_training_columns() {
        let (x, y) = random_problem(16, 5, 2, 6);
        let model = ridge_fit(&x, &y, &[1.0]).unwrap().model;
        for j in 0..5 {
            let col: Vec<f64> = (0..16)
                .map(|i| (x.get(i, j) - model.feature_means[j]) / model.feature_scales[j])
                .collect();
            let mean = col.iter().sum::<f64>() / 16.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 16.0;
            assert!(mean.abs() < 1e-8);
            assert!((var - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn errors() {
        let (x, y) = random_problem(6, 4, 2, 7);
        let one_class = vec!["a".to_string(); 6];
        assert!(matches!(
            ridge_fit(&x, &one_class, &[1.0]),
            Err(Error::TooFewClasses(1))
        ));
        assert!(ridge_fit(&x, &y[..5], &[1.0]).is_err());
        let mut vals = x.as_slice().to_vec();
        vals[3] = f64::NAN;
        let bad = FeatureMatrix::new(6, 4, vals).unwrap();
        assert!(matches!(ridge_fit(&bad, &y, &[1.0]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn single_example_per_class_predicts_itself() {
        let x = FeatureMatrix::new(2, 3, vec![0.1, 0.9, 0.4, 0.8, 0.2, 0.4]).unwrap();
        let y = vec!["x".to_string(), "y".to_string()];
        let model = ridge_fit(&x, &y, &default_alphas()).unwrap().model;
        assert_eq!(model.predict(&x).unwrap(), y);
    }
}
