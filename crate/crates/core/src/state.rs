//! Density operators, subnormalized density operators, and ensembles.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermitian::{HermitianOperator, EIG_CLIP_TOL};
use crate::matrix::{tensor_product, ComplexMatrix};

/// Unit-trace positive operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    /// Validates positivity (eigenvalues >= -1e-10) and unit trace (within 1e-10).
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let min = op.min_eigenvalue()?;
        if min < -EIG_CLIP_TOL {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        let tr = op.trace_re();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!(
                "density operator trace {tr} differs from 1 by more than 1e-10"
            )));
        }
        Ok(Self { op })
    }

    /// Skips the spectral check; for internal construction paths that are
    /// positive by construction (parametrizations, channel outputs).
    pub(crate) fn from_hermitian_unchecked(op: HermitianOperator) -> Self {
        Self { op }
    }

    /// Pure state |psi><psi| from a state vector (normalized internally).
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        let normalized: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        let m = ComplexMatrix::outer(&normalized, &normalized);
        Ok(Self { op: HermitianOperator::new(m)? })
    }

    /// Computational basis state |i><i|.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self { op: HermitianOperator::from_real_diag(&v) }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: HermitianOperator::from_real_diag(&vec![1.0 / dim as f64; dim]),
        }
    }

    /// Qubit state (I + r . sigma)/2; the Bloch vector is clipped to the unit ball.
    pub fn from_bloch(r: [f64; 3]) -> Self {
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        let f = if norm > 1.0 { 1.0 / norm } else { 1.0 };
        let (x, y, z) = (r[0] * f, r[1] * f, r[2] * f);
        let m = ComplexMatrix::new(
            2,
            2,
            vec![
                Complex64::new(0.5 * (1.0 + z), 0.0),
                Complex64::new(0.5 * x, -0.5 * y),
                Complex64::new(0.5 * x, 0.5 * y),
                Complex64::new(0.5 * (1.0 - z), 0.0),
            ],
        )
        .expect("2x2 entries");
        Self { op: HermitianOperator::new(m).expect("square") }
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        let m = tensor_product(self.matrix(), other.matrix());
        DensityOperator::from_hermitian_unchecked(
            HermitianOperator::new(m).expect("square"),
        )
    }
}

/// Positive operator with trace at most one; the trace is the detection
/// probability of the carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct SubnormalizedDensity {
    op: HermitianOperator,
}

impl SubnormalizedDensity {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let min = op.min_eigenvalue()?;
        if min < -EIG_CLIP_TOL {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        let tr = op.trace_re();
        if tr > 1.0 + 1e-10 {
            return Err(Error::Domain(format!(
                "subnormalized density trace {tr} exceeds 1 by more than 1e-10"
            )));
        }
        Ok(Self { op })
    }

    pub(crate) fn from_hermitian_unchecked(op: HermitianOperator) -> Self {
        Self { op }
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace(&self) -> f64 {
        self.op.trace_re()
    }

    /// Normalizes to a density operator; errors when the trace is below `tol`.
    pub fn normalize(&self, tol: f64) -> Result<DensityOperator> {
        let tr = self.trace();
        if tr <= tol {
            return Err(Error::UndefinedConditionalState { prob: tr });
        }
        Ok(DensityOperator::from_hermitian_unchecked(
            HermitianOperator::new(self.op.matrix().scale_re(1.0 / tr))?,
        ))
    }
}

impl From<DensityOperator> for SubnormalizedDensity {
    fn from(rho: DensityOperator) -> Self {
        Self { op: rho.op }
    }
}

/// Probability-weighted list of density operators of a common dimension.
#[derive(Debug, Clone)]
pub struct Ensemble {
    items: Vec<(f64, DensityOperator)>,
}

impl Ensemble {
    pub fn new(items: Vec<(f64, DensityOperator)>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Domain("ensemble must be nonempty".into()));
        }
        let dim = items[0].1.dim();
        let mut total = 0.0;
        for (w, rho) in &items {
            if *w < -1e-12 {
                return Err(Error::Domain(format!("negative ensemble weight {w}")));
            }
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch(
                    "ensemble states must share one dimension".into(),
                ));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "ensemble weights sum to {total}, expected 1 within 1e-9"
            )));
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[(f64, DensityOperator)] {
        &self.items
    }

    pub fn dim(&self) -> usize {
        self.items[0].1.dim()
    }

    /// Barycenter sum_i pi_i rho_i.
    pub fn average_state(&self) -> DensityOperator {
        let dim = self.dim();
        let mut avg = ComplexMatrix::zeros(dim, dim);
        for (w, rho) in &self.items {
            avg = &avg + &rho.matrix().scale_re(*w);
        }
        DensityOperator::from_hermitian_unchecked(
            HermitianOperator::new(avg).expect("square"),
        )
    }
}
