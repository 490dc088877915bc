//! Closed-form gradient-descent fine-tuning.
//!
//! Running `k` steps of batch gradient descent with step `α` on the target
//! least-squares loss, started from the source estimate, lands exactly on
//! `β̂_k = Aᵏ β̂_S + (I − Aᵏ) β̂_T` with `A = I − αΣ_T`. Everything here works
//! in the eigenbasis of `Σ_T`, where `Aᵏ` is diagonal with entries
//! `(1 − αλ_i)ᵏ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, powu, reconstruct};

/// Orthonormal eigenbasis of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub vectors: DMatrix<f64>,
    pub values: DVector<f64>,
}

impl EigenDecomposition {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let (values, vectors) = linalg::sym_eigen(m);
        Self { vectors, values }
    }

    /// Decomposition of an SPD matrix; errors if any eigenvalue is not positive.
    pub fn new_spd(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 || !m.iter().all(|v| v.is_finite()) {
            return Err(Error::NonSpdGram);
        }
        let eig = Self::new(m);
        if !(eig.lambda_min() > 0.0) {
            return Err(Error::NonSpdGram);
        }
        Ok(eig)
    }

    pub fn lambda_max(&self) -> f64 {
        self.values[0]
    }

    pub fn lambda_min(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `P f(Λ) Pᵀ`.
    pub fn apply_spectral(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        reconstruct(&self.vectors, &self.values.map(f))
    }
}

/// The matrices `A = I − αΣ_T` and `Aᵏ` for a given step size and iteration count.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOperator {
    pub alpha: f64,
    pub k: u64,
    pub a: DMatrix<f64>,
    pub a_pow_k: DMatrix<f64>,
    /// Eigenbasis of `Σ_T`, shared by every derived quantity.
    pub eigen: EigenDecomposition,
    /// Set when `α ≥ 2/λ_max(Σ_T)`: plain gradient descent would diverge.
    pub divergent: bool,
}

impl TransferOperator {
    /// Per-eigendirection source weights `(1 − αλ_i)ᵏ`, in descending-λ order.
    pub fn source_weights(&self) -> DVector<f64> {
        self.eigen.values.map(|l| powu(1.0 - self.alpha * l, self.k))
    }

    /// Same step size and eigenbasis, different iteration count.
    pub fn with_k(&self, k: u64) -> Self {
        let alpha = self.alpha;
        let a_pow_k = self.eigen.apply_spectral(|l| powu(1.0 - alpha * l, k));
        Self {
            k,
            a_pow_k,
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// `Σ_T⁻¹ − α² Ω_k Σ_T Ω_k`, evaluated in the eigenbasis as
    /// `P diag(w(2 − w)/λ) Pᵀ` with `w = (1 − αλ)ᵏ`.
    ///
    /// This is the target-variance reduction term of the gain; the spectral
    /// form stays accurate when `Aᵏ` is close to zero.
    pub fn target_precision_gain(&self) -> DMatrix<f64> {
        let (alpha, k) = (self.alpha, self.k);
        self.eigen.apply_spectral(|l| {
            let w = powu(1.0 - alpha * l, k);
            w * (2.0 - w) / l
        })
    }

    /// `α² Ω_k Σ_T Ω_k = (I − Aᵏ) Σ_T⁻¹ (I − Aᵏ)`, spectral form `(1 − w)²/λ`.
    pub fn target_variance_factor(&self) -> DMatrix<f64> {
        let (alpha, k) = (self.alpha, self.k);
        self.eigen.apply_spectral(|l| {
            let w = powu(1.0 - alpha * l, k);
            (1.0 - w) * (1.0 - w) / l
        })
    }
}

/// Build `A` and `Aᵏ` from the target Gram matrix.
pub fn make_transfer_operator(gram_t: &DMatrix<f64>, alpha: f64, k: u64) -> Result<TransferOperator> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("step size must be positive, got {alpha}")));
    }
    let eigen = EigenDecomposition::new_spd(gram_t)?;
    let d = eigen.dim();
    let a = linalg::symmetrize(&(DMatrix::identity(d, d) - gram_t * alpha));
    let a_pow_k = eigen.apply_spectral(|l| powu(1.0 - alpha * l, k));
    let divergent = alpha >= 2.0 / eigen.lambda_max();
    Ok(TransferOperator {
        alpha,
        k,
        a,
        a_pow_k,
        eigen,
        divergent,
    })
}

/// `W β̂_S + (I − W) β̂_T`.
pub fn combine_with_weight(
    w: &DMatrix<f64>,
    beta_s: &DVector<f64>,
    beta_t: &DVector<f64>,
) -> Result<DVector<f64>> {
    let d = beta_t.len();
    check_dim(d, beta_s.len())?;
    check_dim(d, w.nrows())?;
    check_dim(d, w.ncols())?;
    Ok(w * beta_s + (DMatrix::identity(d, d) - w) * beta_t)
}

/// Constant convex combination `ω β̂_S + (1 − ω) β̂_T`.
pub fn convex_combination(omega: f64, beta_s: &DVector<f64>, beta_t: &DVector<f64>) -> Result<DVector<f64>> {
    let d = beta_t.len();
    combine_with_weight(&(DMatrix::identity(d, d) * omega), beta_s, beta_t)
}

/// Fine-tuned estimator `Aᵏ β̂_S + (I − Aᵏ) β̂_T`.
pub fn fine_tune(beta_s: &DVector<f64>, beta_t: &DVector<f64>, op: &TransferOperator) -> Result<DVector<f64>> {
    combine_with_weight(&op.a_pow_k, beta_s, beta_t)
}

/// Coordinates `Pᵀβ` in the eigenbasis.
pub fn eigen_coordinates(beta: &DVector<f64>, eig: &EigenDecomposition) -> Result<DVector<f64>> {
    check_dim(eig.dim(), beta.len())?;
    Ok(eig.vectors.tr_mul(beta))
}

/// Fine-tuned estimator assembled coordinate by coordinate in the eigenbasis,
/// returned in eigen coordinates.
pub fn fine_tune_eigen_coordinates(
    beta_s: &DVector<f64>,
    beta_t: &DVector<f64>,
    op: &TransferOperator,
) -> Result<DVector<f64>> {
    let s = eigen_coordinates(beta_s, &op.eigen)?;
    let t = eigen_coordinates(beta_t, &op.eigen)?;
    let w = op.source_weights();
    Ok(DVector::from_fn(s.len(), |i, _| w[i] * s[i] + (1.0 - w[i]) * t[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_spd;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn scalar_identity_gram() {
        let op = make_transfer_operator(&DMatrix::identity(3, 3), 0.1, 4).unwrap();
        assert!((&op.a - DMatrix::identity(3, 3) * 0.9).amax() < 1e-15);
        assert!((&op.a_pow_k - DMatrix::identity(3, 3) * 0.9f64.powi(4)).amax() < 1e-15);
    }

    #[test]
    fn zeroth_power_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_spd(4, &mut rng);
        let op = make_transfer_operator(&g, 0.01, 0).unwrap();
        assert!((op.a_pow_k - DMatrix::identity(4, 4)).amax() < 1e-12);
    }

    #[test]
    fn power_matches_repeated_multiplication() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_spd(5, &mut rng);
        let eig = EigenDecomposition::new(&g);
        let alpha = 1.0 / eig.lambda_max();
        let op = make_transfer_operator(&g, alpha, 37).unwrap();
        let mut prod = DMatrix::identity(5, 5);
        for _ in 0..37 {
            prod = &prod * &op.a;
        }
        let scale = prod.amax().max(1e-300);
        assert!((&op.a_pow_k - &prod).amax() / scale < 1e-9);
    }

    #[test]
    fn rejects_non_spd_and_bad_alpha() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(make_transfer_operator(&g, 0.1, 1).unwrap_err(), Error::NonSpdGram);
        assert!(matches!(
            make_transfer_operator(&DMatrix::identity(2, 2), 0.0, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn divergent_step_is_flagged() {
        let op = make_transfer_operator(&DMatrix::identity(2, 2), 2.5, 3).unwrap();
        assert!(op.divergent);
        assert!((op.a_pow_k[(0, 0)] + 3.375).abs() < 1e-12);
    }

    #[test]
    fn k_zero_returns_source() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_spd(3, &mut rng);
        let op = make_transfer_operator(&g, 0.05, 0).unwrap();
        let bs = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let bt = DVector::from_vec(vec![-1.0, 0.5, 0.0]);
        let out = fine_tune(&bs, &bt, &op).unwrap();
        assert!((out - bs).amax() < 1e-12);
    }

    #[test]
    fn common_estimate_is_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_spd(4, &mut rng);
        let b = DVector::from_fn(4, |_, _| rng.sample(StandardNormal));
        for k in [0, 1, 7, 100] {
            let op = make_transfer_operator(&g, 0.01, k).unwrap();
            assert!((fine_tune(&b, &b, &op).unwrap() - &b).amax() < 1e-12);
        }
    }

    #[test]
    fn diagonal_gram_coordinates_are_a_permutation() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0, 2.0]));
        let eig = EigenDecomposition::new(&g);
        let b = DVector::from_vec(vec![10.0, 20.0, 30.0]);
        let c = eigen_coordinates(&b, &eig).unwrap();
        assert_eq!(c.as_slice(), &[20.0, 30.0, 10.0]);
        assert!((c.norm() - b.norm()).abs() < 1e-12);
    }

    #[test]
    fn combine_edge_weights() {
        let bs = DVector::from_vec(vec![1.0, 2.0]);
        let bt = DVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(combine_with_weight(&DMatrix::zeros(2, 2), &bs, &bt).unwrap(), bt);
        assert_eq!(combine_with_weight(&DMatrix::identity(2, 2), &bs, &bt).unwrap(), bs);
        let half = convex_combination(0.5, &bs, &bt).unwrap();
        assert_eq!(half.as_slice(), &[2.0, 3.0]);
        assert!(matches!(
            combine_with_weight(&DMatrix::zeros(3, 3), &bs, &bt),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn weights_are_convex_and_favour_small_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_spd(6, &mut rng);
        let eig = EigenDecomposition::new(&g);
        let alpha = 0.9 / eig.lambda_max();
        let op = make_transfer_operator(&g, alpha, 0).unwrap();
        let mut prev = op.source_weights();
        for k in 1..50 {
            let w = op.with_k(k).source_weights();
            for i in 0..6 {
                assert!((0.0..=1.0).contains(&w[i]));
                assert!(w[i] <= prev[i]);
            }
            // eigenvalues descending, so weights ascending
            for i in 1..6 {
                assert!(w[i] >= w[i - 1]);
            }
            prev = w;
        }
    }

    #[test]
    fn converges_to_target_for_large_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        // condition number ≤ 10
        let q = crate::testutil::random_orthogonal(4, &mut rng);
        let lambdas = DVector::from_vec(vec![10.0, 6.0, 3.0, 1.0]);
        let g = reconstruct(&q, &lambdas);
        let eig = EigenDecomposition::new(&g);
        let alpha = 2.0 / (eig.lambda_max() + eig.lambda_min()) / 5.0;
        let op = make_transfer_operator(&g, alpha, 10_000).unwrap();
        let bs = DVector::from_vec(vec![1.0, -1.0, 2.0, 0.0]);
        let bt = DVector::from_vec(vec![0.0, 1.0, 1.0, 3.0]);
        let out = fine_tune(&bs, &bt, &op).unwrap();
        assert!((out - &bt).norm() < 1e-6 * (&bs - &bt).norm());
    }
}
