//! Hermitian operators: eigendecomposition, functional calculus, projectors.
//!
//! Eigenvalues are computed with a cyclic complex Jacobi iteration. For the
//! matrix sizes this crate works with (dim up to a few dozen) Jacobi is
//! accurate to machine precision and has no convergence pathologies.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, ZERO};

/// Eigenvalues in [-EIG_CLIP_TOL, 0) are treated as exact zeros by the
/// functional calculus; anything below -EIG_NEGATIVE_TOL is a genuine
/// negativity and raises an error.
pub const EIG_CLIP_TOL: f64 = 1e-10;
pub const EIG_NEGATIVE_TOL: f64 = 1e-8;

/// Square matrix with M = M^dag enforced by construction-time symmetrization.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    /// Symmetrizes (M + M^dag)/2. Errors on non-square input.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian operator must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let sym = (&matrix + &matrix.dagger()).scale_re(0.5);
        Ok(Self { matrix: sym })
    }

    /// Like `new` but rejects input whose anti-Hermitian part exceeds `tol`.
    pub fn try_new(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        let defect = matrix.hermiticity_defect();
        if defect > tol {
            return Err(Error::Domain(format!(
                "matrix is not Hermitian: defect {defect:.3e} exceeds {tol:.3e}"
            )));
        }
        Self::new(matrix)
    }

    pub fn from_real_diag(values: &[f64]) -> Self {
        Self { matrix: ComplexMatrix::diag(values) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim) }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn trace_re(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Eigenvalues in descending order together with a unitary whose columns
    /// are the corresponding eigenvectors: M = V diag(lambda) V^dag.
    pub fn eig(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        jacobi_eig(&self.matrix, true).map(|(vals, vecs)| (vals, vecs.unwrap()))
    }

    /// Eigenvalues only (descending); skips eigenvector accumulation.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        jacobi_eig(&self.matrix, false).map(|(vals, _)| vals)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(*self.eigenvalues()?.last().expect("nonempty spectrum"))
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    /// Applies `f` to the spectrum: V diag(f(lambda)) V^dag.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let (vals, vecs) = self.eig()?;
        let dim = self.dim();
        let mut out = ComplexMatrix::zeros(dim, dim);
        for (k, &lambda) in vals.iter().enumerate() {
            let flambda = f(lambda);
            if flambda == 0.0 {
                continue;
            }
            for i in 0..dim {
                for j in 0..dim {
                    out[(i, j)] += Complex64::new(flambda, 0.0) * vecs[(i, k)] * vecs[(j, k)].conj();
                }
            }
        }
        HermitianOperator::new(out)
    }

    /// PSD square root; eigenvalues in [-1e-10, 0) are clipped to zero.
    pub fn psd_sqrt(&self) -> Result<Self> {
        self.check_psd()?;
        self.map_spectrum(|l| if l > 0.0 { l.sqrt() } else { 0.0 })
    }

    /// Moore-Penrose inverse of a PSD operator: eigenvalues at or below
    /// `cutoff` map to zero, others to their reciprocal.
    pub fn pinv_psd(&self, cutoff: f64) -> Result<Self> {
        self.check_psd()?;
        self.map_spectrum(|l| if l > cutoff { 1.0 / l } else { 0.0 })
    }

    /// Moore-Penrose inverse square root (lambda -> lambda^{-1/2} on the support).
    pub fn pinv_sqrt_psd(&self, cutoff: f64) -> Result<Self> {
        self.check_psd()?;
        self.map_spectrum(|l| if l > cutoff { 1.0 / l.sqrt() } else { 0.0 })
    }

    /// Default relative Moore-Penrose cutoff: 1e-10 times the largest eigenvalue.
    pub fn default_cutoff(&self) -> Result<f64> {
        Ok(1e-10 * self.max_eigenvalue()?.max(0.0))
    }

    /// Projectors onto the support and the kernel: Pi_plus + Pi_zero = I.
    pub fn support_and_kernel_projectors(&self, cutoff: f64) -> Result<(Self, Self)> {
        self.check_psd()?;
        let plus = self.map_spectrum(|l| if l > cutoff { 1.0 } else { 0.0 })?;
        let zero = HermitianOperator::new(
            &ComplexMatrix::identity(self.dim()) - plus.matrix(),
        )?;
        Ok((plus, zero))
    }

    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= -tol)
    }

    fn check_psd(&self) -> Result<()> {
        let min = self.min_eigenvalue()?;
        if min < -EIG_NEGATIVE_TOL {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        Ok(())
    }
}

/// Cyclic complex Jacobi iteration. Returns eigenvalues sorted descending and,
/// when requested, the accumulated unitary.
fn jacobi_eig(
    m: &ComplexMatrix,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<ComplexMatrix>)> {
    let n = m.rows();
    let mut a = m.clone();
    let mut v = if want_vectors { Some(ComplexMatrix::identity(n)) } else { None };

    if n <= 1 {
        let vals = if n == 1 { vec![a[(0, 0)].re] } else { vec![] };
        return Ok((vals, v));
    }

    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;
    let max_sweeps = 100;

    for _sweep in 0..max_sweeps {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            let mut vals: Vec<(f64, usize)> =
                (0..n).map(|i| (a[(i, i)].re, i)).collect();
            vals.sort_by(|x, y| y.0.partial_cmp(&x.0).expect("finite eigenvalues"));
            let sorted_vals: Vec<f64> = vals.iter().map(|&(l, _)| l).collect();
            let sorted_vecs = v.map(|vm| {
                ComplexMatrix::from_fn(n, n, |i, k| vm[(i, vals[k].1)])
            });
            return Ok((sorted_vals, sorted_vecs));
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let gamma = a[(p, q)];
                let g = gamma.norm();
                if g <= 1e-300 {
                    continue;
                }
                let phase = gamma / g; // e^{i phi}
                let alpha = a[(p, p)].re;
                let beta = a[(q, q)].re;
                let tau = (beta - alpha) / (2.0 * g);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // Unitary on the (p,q) plane:
                //   U = [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
                let upp = Complex64::new(c, 0.0);
                let upq = Complex64::new(s, 0.0);
                let uqp = -s * phase.conj();
                let uqq = c * phase.conj();

                // Columns: A <- A U
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * upp + akq * uqp;
                    a[(k, q)] = akp * upq + akq * uqq;
                }
                // Rows: A <- U^dag A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
                    a[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
                }
                // Clean the rotated pair to keep the matrix exactly Hermitian.
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

                if let Some(vm) = v.as_mut() {
                    for k in 0..n {
                        let vkp = vm[(k, p)];
                        let vkq = vm[(k, q)];
                        vm[(k, p)] = vkp * upp + vkq * uqp;
                        vm[(k, q)] = vkp * upq + vkq * uqq;
                    }
                }
            }
        }
    }

    Err(Error::NumericalFailure(format!(
        "Jacobi eigendecomposition did not converge for a {n}x{n} matrix"
    )))
}

/// Lower-triangular Cholesky-like factor of a PSD matrix, with rank
/// deficiency handled by zeroing the affected columns: returns L with
/// L L^dag ~= m.
pub fn cholesky_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("Cholesky needs a square matrix".into()));
    }
    let n = m.rows();
    let scale = m.max_abs().max(1.0);
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d < -1e-8 * scale {
            return Err(Error::NotPsd { min_eigenvalue: d });
        }
        let d = d.max(0.0).sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        if d < 1e-14 * scale {
            continue;
        }
        for i in (j + 1)..n {
            let mut x = m[(i, j)];
            for k in 0..j {
                x -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = x / d;
        }
    }
    Ok(l)
}

/// Inverse of a general square complex matrix by Gauss-Jordan elimination
/// with partial pivoting.
pub fn invert(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("inverse needs a square matrix".into()));
    }
    let n = m.rows();
    let mut a = m.clone();
    let mut inv = ComplexMatrix::identity(n);
    for col in 0..n {
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, a[(r, col)].norm()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).expect("finite pivots"))
            .expect("nonempty column");
        if pivot_mag < 1e-14 * m.max_abs().max(1.0) {
            return Err(Error::NumericalFailure("matrix is singular".into()));
        }
        if pivot_row != col {
            for j in 0..n {
                let (x, y) = (a[(col, j)], a[(pivot_row, j)]);
                a[(col, j)] = y;
                a[(pivot_row, j)] = x;
                let (x, y) = (inv[(col, j)], inv[(pivot_row, j)]);
                inv[(col, j)] = y;
                inv[(pivot_row, j)] = x;
            }
        }
        let pivot = a[(col, col)];
        for j in 0..n {
            a[(col, j)] /= pivot;
            inv[(col, j)] /= pivot;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[(r, col)];
            if factor == ZERO {
                continue;
            }
            for j in 0..n {
                let acj = a[(col, j)];
                let icj = inv[(col, j)];
                a[(r, j)] -= factor * acj;
                inv[(r, j)] -= factor * icj;
            }
        }
    }
    Ok(inv)
}
