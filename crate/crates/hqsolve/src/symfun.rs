//! Elementary symmetric functions, Hessian quotients, and Garding cones.
//!
//! For eigenvalues λ = (λ₁, …, λₙ) the k-th elementary symmetric function is
//!
//! ```text
//! σ_k(λ) = Σ_{i₁ < … < i_k} λ_{i₁} ⋯ λ_{i_k},     σ₀ ≡ 1.
//! ```
//!
//! The Garding cone Γ_k = { λ : σ_j(λ) > 0 for j = 1..k } is the natural
//! domain of the quotient operator σ_k/σ_l and of its (k−l)-th root, which is
//! what the curvature solver drives to a prescribed right-hand side. This
//! module keeps the dimension generic (the solver itself only runs n = 2).
//!
//! Everything here is a pure function of its inputs and safe to call from any
//! number of threads.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

/// Binomial coefficient C(n, k) as a float; 0 when k > n.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// An ordered tuple of principal curvatures.
///
/// Construction checks finiteness; cone membership is queried per `k` since
/// the same tuple may be probed against several cones.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTuple {
    values: Vec<f64>,
}

impl EigenTuple {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidEigenTuple);
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True iff σ_j > 0 for all j ≤ k.
    pub fn is_admissible(&self, k: usize) -> bool {
        in_gamma_cone(&self.values, k)
    }

    /// min_{j ≤ k} σ_j; positive exactly on Γ_k.
    pub fn cone_margin(&self, k: usize) -> f64 {
        cone_margin(&self.values, k)
    }
}

impl std::ops::Deref for EigenTuple {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// σ_k by the prefix recurrence e_k(λ₁..λ_m) = e_k(λ₁..λ_{m−1}) + λ_m e_{k−1}(λ₁..λ_{m−1}).
///
/// O(nk), no subset enumeration; the enumeration lives in tests as the oracle.
fn sigma_unchecked(lam: &[f64], k: usize) -> f64 {
    debug_assert!(k <= lam.len());
    let mut e = vec![0.0f64; k + 1];
    e[0] = 1.0;
    for (m, &v) in lam.iter().enumerate() {
        let top = k.min(m + 1);
        for j in (1..=top).rev() {
            e[j] += v * e[j - 1];
        }
    }
    e[k]
}

/// σ_m extended by the convention σ_m ≡ 0 for m < 0 or m > n.
fn sigma_ext(lam: &[f64], m: i64) -> f64 {
    if m < 0 || m as usize > lam.len() {
        0.0
    } else {
        sigma_unchecked(lam, m as usize)
    }
}

/// k-th elementary symmetric function of the tuple; σ₀ ≡ 1.
pub fn elementary_symmetric(lam: &[f64], k: usize) -> Result<f64> {
    if k > lam.len() {
        return Err(Error::OrderOutOfRange { k, n: lam.len() });
    }
    Ok(sigma_unchecked(lam, k))
}

/// σ_k(λ|i): the symmetric function of the tuple with entry `i` removed.
pub fn sigma_excluding(lam: &[f64], k: usize, i: usize) -> Result<f64> {
    let n = lam.len();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    if k > n - 1 {
        return Err(Error::OrderOutOfRange { k, n: n - 1 });
    }
    let reduced: Vec<f64> = lam
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .collect();
    Ok(sigma_ext(&reduced, k as i64))
}

fn check_orders(lam: &[f64], k: usize, l: usize) -> Result<()> {
    let n = lam.len();
    if l >= k || k > n {
        return Err(Error::InvalidQuotientOrders { k, l, n });
    }
    Ok(())
}

/// The Hessian quotient σ_k/σ_l. Requires l < k ≤ n and σ_l ≠ 0.
pub fn hessian_quotient(lam: &[f64], k: usize, l: usize) -> Result<f64> {
    check_orders(lam, k, l)?;
    let denom = sigma_unchecked(lam, l);
    if denom == 0.0 {
        return Err(Error::SingularQuotient { l, value: denom });
    }
    Ok(sigma_unchecked(lam, k) / denom)
}

/// Gradient of σ_k/σ_l in λ:
///
/// ```text
/// ∂(σ_k/σ_l)/∂λ_i = (σ_{k−1}(λ|i) σ_l − σ_k σ_{l−1}(λ|i)) / σ_l²
/// ```
///
/// For l = 0 this reduces to σ_{k−1}(λ|i). Strictly positive on Γ_k, which is
/// the ellipticity of the quotient operator.
pub fn quotient_gradient(lam: &[f64], k: usize, l: usize) -> Result<Vec<f64>> {
    check_orders(lam, k, l)?;
    let n = lam.len();
    let sig_l = sigma_unchecked(lam, l);
    if sig_l == 0.0 {
        return Err(Error::SingularQuotient { l, value: sig_l });
    }
    let sig_k = sigma_unchecked(lam, k);
    let denom = sig_l * sig_l;
    let mut grad = Vec::with_capacity(n);
    for i in 0..n {
        let reduced: Vec<f64> = lam
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| v)
            .collect();
        let sk1 = sigma_ext(&reduced, k as i64 - 1);
        let sl1 = sigma_ext(&reduced, l as i64 - 1);
        grad.push((sk1 * sig_l - sig_k * sl1) / denom);
    }
    Ok(grad)
}

/// Membership in the open cone Γ_k = { σ_j > 0, j = 1..k }, strict, no tolerance.
pub fn in_gamma_cone(lam: &[f64], k: usize) -> bool {
    if k == 0 || k > lam.len() {
        return false;
    }
    (1..=k).all(|j| sigma_unchecked(lam, j) > 0.0)
}

/// min_{j ≤ k} σ_j(λ); tolerance policy is the caller's business.
pub fn cone_margin(lam: &[f64], k: usize) -> f64 {
    (1..=k.min(lam.len()))
        .map(|j| sigma_unchecked(lam, j))
        .fold(f64::INFINITY, f64::min)
}

/// (σ_k/σ_l)^{1/(k−l)}, the degree-one normalization of the quotient.
/// Requires λ ∈ Γ_k, where the value is strictly positive.
pub fn quotient_power(lam: &[f64], k: usize, l: usize) -> Result<f64> {
    check_orders(lam, k, l)?;
    if !in_gamma_cone(lam, k) {
        return Err(Error::NotAdmissible {
            k,
            margin: cone_margin(lam, k),
        });
    }
    let q = hessian_quotient(lam, k, l)?;
    Ok(q.powf(1.0 / (k - l) as f64))
}

/// Raw margin of the generalized Newton–Maclaurin inequality,
///
/// ```text
/// σ_{k−1}/C(n,k−1) · σ_l/C(n,l) − σ_k/C(n,k) · σ_{l−1}/C(n,l−1),
/// ```
///
/// non-negative on Γ_k for 1 ≤ l < k ≤ n with equality at umbilic tuples.
/// Reports the raw number; callers assert the sign.
pub fn newton_maclaurin_margin(lam: &[f64], k: usize, l: usize) -> f64 {
    let n = lam.len();
    let norm = |m: usize| sigma_unchecked(lam, m) / binomial(n, m);
    norm(k - 1) * norm(l) - norm(k) * norm(l - 1)
}

/// Midpoint concavity probe of F = (σ_k/σ_l)^{1/(k−l)}:
/// F((a+b)/2) − (F(a)+F(b))/2, expected ≥ 0 on the convex cone Γ_k.
pub fn concavity_probe(a: &[f64], b: &[f64], k: usize, l: usize) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidEigenTuple);
    }
    let fa = quotient_power(a, k, l)?;
    let fb = quotient_power(b, k, l)?;
    let mid: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| 0.5 * (x + y)).collect();
    // Γ_k is convex, so the midpoint of two admissible tuples stays inside.
    let fm = quotient_power(&mid, k, l)?;
    Ok(fm - 0.5 * (fa + fb))
}

/// F_k/F_l of the eigenvalues of a plain symmetric matrix.
pub fn symmetric_matrix_quotient(q: &DMatrix<f64>, k: usize, l: usize) -> Result<f64> {
    let eig = q.clone().symmetric_eigen();
    let lam: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    check_orders(&lam, k, l)?;
    let denom = sigma_unchecked(&lam, l);
    if denom == 0.0 {
        return Err(Error::SingularQuotient { l, value: denom });
    }
    Ok(sigma_unchecked(&lam, k) / denom)
}

/// F_k/F_l of the eigenvalues of g^{ij}(Dp)·q with
///
/// ```text
/// g^{ij}(Dp) = (1/p²) (δ^{ij} + p^i p^j / (p² − |Dp|²)),
/// ```
///
/// evaluated through the symmetric similarity Lᵀ q L (g = LLᵀ) so the
/// eigenvalues come out real. Requires |Dp| < p.
pub fn matrix_quotient(p: f64, dp: &[f64], q: &DMatrix<f64>, k: usize, l: usize) -> Result<f64> {
    let n = dp.len();
    assert_eq!(q.nrows(), n);
    assert_eq!(q.ncols(), n);
    let dp_sq: f64 = dp.iter().map(|v| v * v).sum();
    let p_sq = p * p;
    if dp_sq >= p_sq {
        return Err(Error::NonSpacelike {
            grad_sq: dp_sq,
            u_sq: p_sq,
        });
    }
    let mut g = DMatrix::<f64>::identity(n, n);
    let denom = p_sq - dp_sq;
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = (g[(i, j)] + dp[i] * dp[j] / denom) / p_sq;
        }
    }
    let chol = g.cholesky().ok_or(Error::NotPositiveDefinite)?;
    // L^T q L is symmetric and similar to g·q.
    let m = chol.l().transpose() * q * chol.l();
    symmetric_matrix_quotient(&m, k, l)
}

/// Draws λ uniformly from [−1, 3]^n until it lands in Γ_k.
///
/// Simple rejection keeps samples near the cone boundary represented, which is
/// where the inequality suites need coverage.
pub fn sample_gamma_k<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let lam: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..3.0)).collect();
        if in_gamma_cone(&lam, k) {
            return lam;
        }
    }
}

/// Outcome of the empirical estimation of the cone constant in
/// `(σ_k/σ_l)_{λ_i} λ_i² ≤ λ_i (σ_k/σ_l) + B₀ Σ_{j≠i} (σ_k/σ_l)_{λ_j} λ_j²`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct B0Estimate {
    pub value: f64,
    pub samples_used: usize,
    pub samples_skipped: usize,
}

/// Empirical supremum over sampled λ ∈ Γ_k and components i of
/// `((σ_k/σ_l)_{λ_i} λ_i² − λ_i σ_k/σ_l) / Σ_{j≠i} (σ_k/σ_l)_{λ_j} λ_j²`,
/// clamped below by zero. Degenerate denominators are skipped and counted.
pub fn estimate_b0(samples: usize, n: usize, k: usize, l: usize, seed: u64) -> B0Estimate {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut sup = 0.0f64;
    let mut used = 0;
    let mut skipped = 0;
    for _ in 0..samples {
        let lam = sample_gamma_k(n, k, &mut rng);
        let grad = match quotient_gradient(&lam, k, l) {
            Ok(g) => g,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let quot = match hessian_quotient(&lam, k, l) {
            Ok(q) => q,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let total: f64 = grad
            .iter()
            .zip(&lam)
            .map(|(&gi, &li)| gi * li * li)
            .sum();
        let mut any = false;
        for i in 0..n {
            let own = grad[i] * lam[i] * lam[i];
            let denom = total - own;
            if denom.abs() < 1e-12 {
                continue;
            }
            any = true;
            let ratio = (own - lam[i] * quot) / denom;
            if ratio > sup {
                sup = ratio;
            }
        }
        if any {
            used += 1;
        } else {
            skipped += 1;
        }
    }
    B0Estimate {
        value: sup,
        samples_used: used,
        samples_skipped: skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;

    /// Subset-enumeration oracle, deliberately independent of the recurrence.
    fn sigma_enumerated(lam: &[f64], k: usize) -> f64 {
        let n = lam.len();
        if k == 0 {
            return 1.0;
        }
        let mut total = 0.0;
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            total += idx.iter().map(|&i| lam[i]).product::<f64>();
            let mut pos = k;
            while pos > 0 {
                pos -= 1;
                if idx[pos] != pos + n - k {
                    idx[pos] += 1;
                    for j in pos + 1..k {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
                if pos == 0 {
                    return total;
                }
            }
        }
    }

    #[test]
    fn sigma_matches_examples() {
        assert_eq!(elementary_symmetric(&[1.0, 1.0, 1.0], 2).unwrap(), 3.0);
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0], 2).unwrap(), 11.0);
        assert_eq!(elementary_symmetric(&[4.0, -7.0], 0).unwrap(), 1.0);
        assert!(elementary_symmetric(&[1.0, 2.0], 3).is_err());
    }

    #[test]
    fn sigma_matches_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in 1..=6 {
            for _ in 0..200 {
                let lam: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
                for k in 0..=n {
                    let fast = elementary_symmetric(&lam, k).unwrap();
                    let slow = sigma_enumerated(&lam, k);
                    assert!(
                        (fast - slow).abs() <= 1e-12 * slow.abs().max(1.0),
                        "n={n} k={k}: {fast} vs {slow}"
                    );
                }
            }
        }
    }

    #[test]
    fn sigma_excluding_examples() {
        assert_eq!(sigma_excluding(&[1.0, 2.0, 3.0], 1, 0).unwrap(), 5.0);
        assert_eq!(sigma_excluding(&[1.0, 2.0, 3.0], 0, 2).unwrap(), 1.0);
        assert_eq!(sigma_excluding(&[4.0], 0, 0).unwrap(), 1.0);
        assert!(sigma_excluding(&[1.0, 2.0], 1, 5).is_err());
    }

    #[test]
    fn quotient_examples() {
        assert_relative_eq!(
            hessian_quotient(&[1.0, 2.0, 3.0], 2, 0).unwrap(),
            11.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(hessian_quotient(&[1.0, 1.0], 2, 0).unwrap(), 1.0);
        // umbilic: sigma_k/sigma_l = C(n,k)/C(n,l) c^{k-l}
        let c = 0.7;
        let lam = vec![c; 4];
        assert_relative_eq!(
            hessian_quotient(&lam, 3, 1).unwrap(),
            binomial(4, 3) / binomial(4, 1) * c * c,
            max_relative = 1e-13
        );
    }

    #[test]
    fn quotient_rejects_singular_denominator() {
        // sigma_1 = 0 but the tuple still has sigma_2 defined
        let lam = [1.0, -1.0, 0.0];
        assert!(matches!(
            hessian_quotient(&lam, 2, 1),
            Err(Error::SingularQuotient { .. })
        ));
    }

    #[test]
    fn gradient_examples() {
        let g = quotient_gradient(&[1.0, 2.0, 3.0], 2, 0).unwrap();
        assert_eq!(g, vec![5.0, 4.0, 3.0]);
        let g1 = quotient_gradient(&[1.0, 1.0, 1.0], 2, 0).unwrap();
        assert_eq!(g1, vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let cases = [(2usize, 2usize, 0usize), (3, 2, 0), (3, 3, 1), (4, 3, 1)];
        for &(n, k, l) in &cases {
            for _ in 0..250 {
                let lam = sample_gamma_k(n, k, &mut rng);
                let grad = quotient_gradient(&lam, k, l).unwrap();
                for i in 0..n {
                    let h = 1e-6 * lam[i].abs().max(1.0);
                    let mut up = lam.clone();
                    up[i] += h;
                    let mut dn = lam.clone();
                    dn[i] -= h;
                    let (fu, fd) = (
                        hessian_quotient(&up, k, l).unwrap(),
                        hessian_quotient(&dn, k, l).unwrap(),
                    );
                    let fd_grad = (fu - fd) / (2.0 * h);
                    assert!(
                        (grad[i] - fd_grad).abs() <= 1e-6 * grad[i].abs().max(1.0),
                        "(n,k,l)=({n},{k},{l}) i={i}: {} vs {}",
                        grad[i],
                        fd_grad
                    );
                }
            }
        }
    }

    #[test]
    fn cone_membership_examples() {
        assert!(in_gamma_cone(&[1.0, 2.0, 3.0], 3));
        assert!(in_gamma_cone(&[-1.0, 5.0, 5.0], 2));
        assert!(!in_gamma_cone(&[-1.0, 5.0, 5.0], 3));
        assert!(!in_gamma_cone(&[0.0, 0.0, 0.0], 1));
    }

    #[test]
    fn quotient_power_examples() {
        assert_relative_eq!(
            quotient_power(&[1.0, 2.0, 3.0], 2, 0).unwrap(),
            11.0f64.sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(quotient_power(&[1.0, 1.0], 2, 0).unwrap(), 1.0);
        let c = 1.3;
        let lam = vec![c; 5];
        assert_relative_eq!(
            quotient_power(&lam, 3, 1).unwrap(),
            (binomial(5, 3) / binomial(5, 1)).powf(0.5) * c,
            max_relative = 1e-13
        );
        assert!(matches!(
            quotient_power(&[-1.0, 0.1], 2, 0),
            Err(Error::NotAdmissible { .. })
        ));
    }

    #[test]
    fn newton_maclaurin_on_cone_samples() {
        assert_relative_eq!(newton_maclaurin_margin(&[1.0, 1.0, 1.0], 2, 1), 0.0);
        assert!(newton_maclaurin_margin(&[1.0, 2.0, 3.0], 2, 1) > 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for &(n, k, l) in &[(3usize, 2usize, 1usize), (4, 3, 1), (4, 3, 2), (5, 4, 2)] {
            for _ in 0..2500 {
                let lam = sample_gamma_k(n, k, &mut rng);
                let m = newton_maclaurin_margin(&lam, k, l);
                assert!(m >= -1e-12, "(n,k,l)=({n},{k},{l}) margin {m}");
            }
        }
    }

    #[test]
    fn concavity_probe_examples() {
        let a = [1.0, 2.0, 3.0];
        assert_relative_eq!(concavity_probe(&a, &a, 2, 0).unwrap(), 0.0);
        let b = [3.0, 2.0, 1.0];
        assert_relative_eq!(
            concavity_probe(&a, &b, 2, 0).unwrap(),
            quotient_power(&[2.0, 2.0, 2.0], 2, 0).unwrap()
                - quotient_power(&a, 2, 0).unwrap(),
            epsilon = 1e-14
        );
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for n in 2..=5 {
            for _ in 0..2500 {
                let a = sample_gamma_k(n, 2, &mut rng);
                let b = sample_gamma_k(n, 2, &mut rng);
                let probe = concavity_probe(&a, &b, 2, 0).unwrap();
                assert!(probe >= -1e-10, "n={n}: probe {probe}");
            }
        }
    }

    #[test]
    fn matrix_quotient_identity_case() {
        let q = DMatrix::<f64>::identity(3, 3);
        assert_relative_eq!(
            matrix_quotient(1.0, &[0.0, 0.0, 0.0], &q, 2, 0).unwrap(),
            3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn matrix_quotient_scaling_at_zero_gradient() {
        // Dp = 0 scales every eigenvalue by 1/p^2, so the quotient picks up
        // p^{-2(k-l)}.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = 3;
            let b = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let q = &b * b.transpose();
            let p: f64 = rng.random_range(0.5..2.0);
            let direct = matrix_quotient(p, &[0.0, 0.0, 0.0], &q, 2, 0).unwrap();
            let plain = symmetric_matrix_quotient(&q, 2, 0).unwrap();
            assert_relative_eq!(direct, plain / p.powi(4), max_relative = 1e-10);
        }
    }

    #[test]
    fn matrix_quotient_respects_spacelike_bound() {
        let q = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(
            matrix_quotient(1.0, &[1.0, 0.0], &q, 2, 0),
            Err(Error::NonSpacelike { .. })
        ));
    }

    #[test]
    fn lower_bound_against_plain_quotient() {
        // F_k/F_l(g(Dp) q) >= (1 - rho^2) p^{-2(k-l)} F_k/F_l(q) for q >= 0,
        // with rho the actual |Dp|/p of the sample.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for &(n, k, l) in &[(2usize, 2usize, 0usize), (3, 2, 0), (3, 3, 1), (4, 3, 1)] {
            for _ in 0..2500 {
                let b = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                let q = &b * b.transpose();
                let p: f64 = rng.random_range(0.5..2.0);
                let rho: f64 = rng.random_range(0.0..0.9);
                let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                let dp: Vec<f64> = dir.iter().map(|v| v / norm * rho * p).collect();
                let lhs = matrix_quotient(p, &dp, &q, k, l).unwrap();
                let plain = symmetric_matrix_quotient(&q, k, l).unwrap();
                let rhs = (1.0 - rho * rho) * p.powi(-2 * (k as i32 - l as i32)) * plain;
                assert!(
                    lhs - rhs >= -1e-10,
                    "(n,k,l)=({n},{k},{l}): lhs {lhs} rhs {rhs}"
                );
            }
        }
    }

    #[test]
    fn b0_estimate_is_deterministic_and_finite() {
        let one = estimate_b0(1, 3, 2, 0, 7);
        let again = estimate_b0(1, 3, 2, 0, 7);
        assert_eq!(one.value, again.value);

        let a = estimate_b0(20_000, 3, 2, 0, 7);
        let b = estimate_b0(20_000, 3, 2, 0, 8);
        assert!(a.value.is_finite() && a.value >= 0.0);
        let spread = (a.value - b.value).abs() / a.value.max(b.value).max(1e-30);
        assert!(spread <= 0.10, "seed spread {spread}: {} vs {}", a.value, b.value);
    }

    #[test]
    fn b0_umbilic_contributes_zero() {
        // at umbilic tuples the candidate ratio is <= 0, so it clamps to zero
        let lam = vec![0.8; 3];
        let grad = quotient_gradient(&lam, 2, 0).unwrap();
        let quot = hessian_quotient(&lam, 2, 0).unwrap();
        let total: f64 = grad.iter().zip(&lam).map(|(g, l)| g * l * l).sum();
        for i in 0..3 {
            let own = grad[i] * lam[i] * lam[i];
            let ratio = (own - lam[i] * quot) / (total - own);
            assert!(ratio <= 1e-14);
        }
    }

    proptest! {
        #[test]
        fn permutation_invariance(mut lam in proptest::collection::vec(-2.0f64..2.0, 2..7), k in 0usize..7) {
            let k = k % (lam.len() + 1);
            let before = elementary_symmetric(&lam, k).unwrap();
            lam.reverse();
            let after = elementary_symmetric(&lam, k).unwrap();
            prop_assert!((before - after).abs() <= 1e-12 * before.abs().max(1.0));
        }

        #[test]
        fn quotient_power_is_homogeneous(seed in 0u64..1000, t in 0.1f64..10.0) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let lam = sample_gamma_k(3, 2, &mut rng);
            let scaled: Vec<f64> = lam.iter().map(|v| v * t).collect();
            let f = quotient_power(&lam, 2, 0).unwrap();
            let ft = quotient_power(&scaled, 2, 0).unwrap();
            prop_assert!((ft - t * f).abs() <= 1e-12 * (t * f).abs().max(1.0));
        }

        #[test]
        fn ellipticity_on_cone(seed in 0u64..2000) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for &(n, k, l) in &[(2usize, 2usize, 0usize), (3, 2, 0), (3, 3, 1), (4, 3, 0)] {
                let lam = sample_gamma_k(n, k, &mut rng);
                let grad = quotient_gradient(&lam, k, l).unwrap();
                prop_assert!(grad.iter().all(|&g| g > 0.0), "(n,k,l)=({n},{k},{l}) grad {grad:?}");
            }
        }
    }
}
