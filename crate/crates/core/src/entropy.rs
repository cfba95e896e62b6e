//! Entropies in bits: base-2 logarithms throughout.

use crate::error::{Error, Result};
use crate::hermitian::EIG_NEGATIVE_TOL;
use crate::state::SubnormalizedDensity;

/// -sum lambda_i log2 lambda_i over the spectrum, with 0 log 0 := 0.
/// Errors when the spectrum is significantly negative.
pub fn von_neumann_entropy(rho: &SubnormalizedDensity) -> Result<f64> {
    let vals = rho.operator().eigenvalues()?;
    if let Some(&min) = vals.last() {
        if min < -EIG_NEGATIVE_TOL {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
    }
    Ok(entropy_of_spectrum(&vals))
}

/// Entropy of an eigenvalue list. Negative eigenvalues from roundoff are
/// treated as exact zeros; positive eigenvalues contribute at any size.
pub fn entropy_of_spectrum(vals: &[f64]) -> f64 {
    vals.iter().map(|&l| term(l)).sum()
}

/// Shannon entropy of a probability distribution, in bits.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for &x in p {
        if x < -1e-12 {
            return Err(Error::Domain(format!("negative probability {x:.3e}")));
        }
        sum += x;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "probabilities sum to {sum}, expected 1 within 1e-9"
        )));
    }
    Ok(p.iter().map(|&x| term(x)).sum())
}

/// Binary entropy h(x) = -x log2 x - (1-x) log2 (1-x); h(0) = h(1) = 0.
pub fn binary_entropy(x: f64) -> f64 {
    term(x) + term(1.0 - x)
}

fn term(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::HermitianOperator;
    use crate::state::DensityOperator;

    #[test]
    fn maximally_mixed_qubit_has_one_bit() {
        let rho = SubnormalizedDensity::new(
            HermitianOperator::from_real_diag(&[0.5, 0.5]),
        )
        .unwrap();
        assert!((von_neumann_entropy(&rho).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pure_state_has_zero_entropy() {
        let rho = DensityOperator::pure(&[
            num_complex::Complex64::new(0.6, 0.0),
            num_complex::Complex64::new(0.0, 0.8),
        ])
        .unwrap();
        assert!(von_neumann_entropy(&rho.into()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn entropy_of_diagonal_spectrum() {
        // Direct scalar evaluation of -sum lambda log2 lambda.
        let lambdas = [0.7f64, 0.19, 0.11];
        let expected: f64 = lambdas.iter().map(|&l| -l * l.log2()).sum();
        let rho = SubnormalizedDensity::new(
            HermitianOperator::from_real_diag(&lambdas),
        )
        .unwrap();
        assert!((von_neumann_entropy(&rho).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn binary_entropy_endpoints() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shannon_of_dyadic_distribution() {
        assert!((shannon_entropy(&[0.5, 0.25, 0.25]).unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn shannon_rejects_bad_input() {
        assert!(shannon_entropy(&[0.5, -0.1, 0.6]).is_err());
        assert!(shannon_entropy(&[0.5, 0.4]).is_err());
    }

    #[test]
    fn entropy_additive_on_products() {
        use crate::matrix::tensor_product;
        let a = HermitianOperator::from_real_diag(&[0.7, 0.3]);
        let b = HermitianOperator::from_real_diag(&[0.6, 0.25, 0.15]);
        let prod = HermitianOperator::new(tensor_product(a.matrix(), b.matrix())).unwrap();
        let sa = von_neumann_entropy(&SubnormalizedDensity::new(a).unwrap()).unwrap();
        let sb = von_neumann_entropy(&SubnormalizedDensity::new(b).unwrap()).unwrap();
        let sab = von_neumann_entropy(&SubnormalizedDensity::new(prod).unwrap()).unwrap();
        assert!((sab - sa - sb).abs() < 1e-9);
    }

    #[test]
    fn entropy_unitarily_invariant() {
        use crate::matrix::pauli;
        let rho = HermitianOperator::from_real_diag(&[0.8, 0.2]);
        // Conjugate by the Hadamard-like unitary built from sigma_x eigenvectors.
        let (_, u) = HermitianOperator::new(pauli::sigma_x()).unwrap().eig().unwrap();
        let rotated = HermitianOperator::new(
            u.matmul(rho.matrix()).matmul(&u.dagger()),
        )
        .unwrap();
        let s0 = von_neumann_entropy(&SubnormalizedDensity::new(rho).unwrap()).unwrap();
        let s1 = von_neumann_entropy(&SubnormalizedDensity::new(rotated).unwrap()).unwrap();
        assert!((s0 - s1).abs() < 1e-10);
    }
}
