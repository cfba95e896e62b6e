//! Quantum operations as Kraus maps.
//!
//! A completely positive map rho -> sum_k A_k rho A_k^dag between spaces of
//! possibly different dimension. Trace-nonincreasing maps model probabilistic
//! transmission; trace-preserving ones are channels.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{HermitianOperator, EIG_CLIP_TOL};
use crate::matrix::{pauli, tensor_product, ComplexMatrix};
use crate::state::{DensityOperator, SubnormalizedDensity};

/// Tolerance for trace preservation / nonincrease checks.
pub const MAP_TOL: f64 = 1e-9;

/// Completely positive map given by its Kraus operators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KrausMap {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

/// Classification of a Kraus map per its dual action on the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperationClass {
    Channel,
    UnbiasedOperation,
    BiasedOperation,
    Invalid,
}

impl std::fmt::Display for OperationClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            OperationClass::Channel => "channel",
            OperationClass::UnbiasedOperation => "unbiased-operation",
            OperationClass::BiasedOperation => "biased-operation",
            OperationClass::Invalid => "invalid",
        };
        f.write_str(s)
    }
}

impl KrausMap {
    /// Builds a map from Kraus operators; checks only that all operators
    /// share the dim_out x dim_in shape. Use [`KrausMap::validate`] to
    /// classify the map as channel / operation / invalid.
    pub fn new(kraus: Vec<ComplexMatrix>, dim_in: usize, dim_out: usize) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidOperation("empty Kraus operator list".into()));
        }
        for a in &kraus {
            if a.rows() != dim_out || a.cols() != dim_in {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, expected {}x{}",
                    a.rows(),
                    a.cols(),
                    dim_out,
                    dim_in
                )));
            }
        }
        Ok(Self { dim_in, dim_out, kraus })
    }

    /// Map with a single Kraus operator.
    pub fn from_single(a: ComplexMatrix) -> Self {
        let (dim_out, dim_in) = (a.rows(), a.cols());
        Self { dim_in, dim_out, kraus: vec![a] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_single(ComplexMatrix::identity(dim))
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_single(ComplexMatrix::zeros(dim, dim))
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus_operators(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Number of Kraus operators with norm above the discard threshold.
    pub fn effective_kraus_rank(&self) -> usize {
        self.kraus.iter().filter(|a| a.max_abs() >= 1e-12).count()
    }

    /// Raw action sum_k A_k m A_k^dag on an arbitrary matrix.
    pub fn apply_matrix(&self, m: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            m.rows(),
            self.dim_in,
            "input matrix dimension {} does not match map input dimension {}",
            m.rows(),
            self.dim_in
        );
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for a in &self.kraus {
            out = &out + &a.matmul(m).matmul(&a.dagger());
        }
        out
    }

    /// Applies the operation to a subnormalized state.
    pub fn apply(&self, rho: &SubnormalizedDensity) -> Result<SubnormalizedDensity> {
        if rho.dim() != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "state dimension {} does not match map input dimension {}",
                rho.dim(),
                self.dim_in
            )));
        }
        let out = self.apply_matrix(rho.matrix());
        Ok(SubnormalizedDensity::from_hermitian_unchecked(
            HermitianOperator::new(out)?,
        ))
    }

    /// Conditional output state Lambda[rho] / tr Lambda[rho].
    pub fn normalized_apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let out = self.apply(&rho.clone().into())?;
        out.normalize(1e-12)
    }

    /// Dual map on the identity: Lambda^dag[I] = sum_k A_k^dag A_k.
    pub fn dual_on_identity(&self) -> HermitianOperator {
        let mut sum = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for a in &self.kraus {
            sum = &sum + &a.dagger().matmul(a);
        }
        HermitianOperator::new(sum).expect("square by construction")
    }

    /// Dual action Lambda^dag[Y] = sum_k A_k^dag Y A_k.
    pub fn dual_apply(&self, y: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(y.rows(), self.dim_out);
        let mut sum = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for a in &self.kraus {
            sum = &sum + &a.dagger().matmul(y).matmul(a);
        }
        sum
    }

    /// Choi matrix of the map; positive semidefinite iff completely positive.
    pub fn choi(&self) -> ChoiMatrix {
        let d = self.dim_in * self.dim_out;
        let mut c = ComplexMatrix::zeros(d, d);
        for a in &self.kraus {
            for r in 0..self.dim_out {
                for i in 0..self.dim_in {
                    let x = a[(r, i)];
                    if x == crate::matrix::ZERO {
                        continue;
                    }
                    for s in 0..self.dim_out {
                        for j in 0..self.dim_in {
                            c[(r * self.dim_in + i, s * self.dim_in + j)] +=
                                x * a[(s, j)].conj();
                        }
                    }
                }
            }
        }
        ChoiMatrix {
            matrix: HermitianOperator::new(c).expect("square"),
            dim_in: self.dim_in,
            dim_out: self.dim_out,
        }
    }

    /// Classifies the map: channel, unbiased/biased trace-decreasing
    /// operation, or invalid (Choi not PSD or dual exceeding the identity).
    pub fn validate(&self) -> OperationClass {
        self.validate_with_tol(MAP_TOL)
    }

    /// Like [`KrausMap::validate`] with an explicit classification tolerance.
    pub fn validate_with_tol(&self, tol: f64) -> OperationClass {
        let choi_min = match self.choi().matrix.min_eigenvalue() {
            Ok(v) => v,
            Err(_) => return OperationClass::Invalid,
        };
        if choi_min < -tol {
            return OperationClass::Invalid;
        }
        let dual = self.dual_on_identity();
        let vals = match dual.eigenvalues() {
            Ok(v) => v,
            Err(_) => return OperationClass::Invalid,
        };
        let (p_max, p_min) = (vals[0], *vals.last().expect("nonempty"));
        if p_max > 1.0 + tol {
            return OperationClass::Invalid;
        }
        if (p_max - 1.0).abs() <= tol && (p_min - 1.0).abs() <= tol {
            return OperationClass::Channel;
        }
        if p_max - p_min < tol {
            OperationClass::UnbiasedOperation
        } else {
            OperationClass::BiasedOperation
        }
    }

    pub fn is_channel(&self) -> bool {
        self.validate() == OperationClass::Channel
    }

    /// Bias b(Lambda) = max Spec(Lambda^dag[I]) - min Spec(Lambda^dag[I]).
    pub fn bias(&self) -> Result<f64> {
        let vals = self.dual_on_identity().eigenvalues()?;
        Ok(vals[0] - vals.last().expect("nonempty"))
    }

    /// Extremes of the detection-probability spectrum (p_min, p_max).
    pub fn detection_spectrum_range(&self) -> Result<(f64, f64)> {
        let vals = self.dual_on_identity().eigenvalues()?;
        Ok((*vals.last().expect("nonempty"), vals[0]))
    }

    /// Minimal extension: the rank-1 operation with Kraus sqrt(I - Lambda^dag[I])
    /// that completes this operation to a trace-preserving sum.
    pub fn minimal_extension(&self) -> Result<KrausMap> {
        if self.dim_in != self.dim_out {
            return Err(Error::InvalidOperation(
                "minimal extension needs equal input and output dimensions".into(),
            ));
        }
        let remainder = HermitianOperator::new(
            &ComplexMatrix::identity(self.dim_in) - self.dual_on_identity().matrix(),
        )?;
        let min = remainder.min_eigenvalue()?;
        if min < -crate::hermitian::EIG_NEGATIVE_TOL {
            return Err(Error::InvalidOperation(format!(
                "I - Lambda^dag[I] has negative eigenvalue {min:.3e}; not a valid operation"
            )));
        }
        Ok(KrausMap::from_single(remainder.psd_sqrt()?.into_matrix()))
    }
}

/// Choi matrix of a map, of dimension dim_in * dim_out.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    pub matrix: HermitianOperator,
    pub dim_in: usize,
    pub dim_out: usize,
}

impl ChoiMatrix {
    /// Extracts Kraus operators by eigendecomposition; eigenvalues below the
    /// relative cutoff are dropped, significant negatives are an error.
    pub fn kraus_operators(&self) -> Result<Vec<ComplexMatrix>> {
        let (vals, vecs) = self.matrix.eig()?;
        let scale = vals[0].max(0.0);
        let min = *vals.last().expect("nonempty");
        if min < -crate::hermitian::EIG_NEGATIVE_TOL * scale.max(1.0) {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        let cutoff = EIG_CLIP_TOL * scale.max(1.0);
        let mut kraus = Vec::new();
        for (k, &l) in vals.iter().enumerate() {
            if l <= cutoff {
                continue;
            }
            let w = l.sqrt();
            kraus.push(ComplexMatrix::from_fn(self.dim_out, self.dim_in, |r, i| {
                vecs[(r * self.dim_in + i, k)] * w
            }));
        }
        if kraus.is_empty() {
            kraus.push(ComplexMatrix::zeros(self.dim_out, self.dim_in));
        }
        Ok(kraus)
    }
}

/// Builds a Kraus map from the action of a linear map on matrix units.
/// Fails if the action is not completely positive.
pub fn kraus_map_from_action(
    dim_in: usize,
    dim_out: usize,
    action: impl Fn(&ComplexMatrix) -> ComplexMatrix,
) -> Result<KrausMap> {
    let d = dim_in * dim_out;
    let mut c = ComplexMatrix::zeros(d, d);
    for i in 0..dim_in {
        for j in 0..dim_in {
            let out = action(&ComplexMatrix::matrix_unit(dim_in, i, j));
            assert_eq!(out.rows(), dim_out);
            for r in 0..dim_out {
                for s in 0..dim_out {
                    c[(r * dim_in + i, s * dim_in + j)] = out[(r, s)];
                }
            }
        }
    }
    let choi = ChoiMatrix {
        matrix: HermitianOperator::try_new(c, 1e-9)?,
        dim_in,
        dim_out,
    };
    let kraus = choi.kraus_operators()?;
    KrausMap::new(kraus, dim_in, dim_out)
}

/// Channel factor recovery: given an extension Lambda' of `map`, returns the
/// channel Phi with Phi o Lambda'_min = Lambda'.
pub fn recover_channel_factor(extension: &KrausMap, map: &KrausMap) -> Result<KrausMap> {
    if extension.dim_in() != map.dim_in() || map.dim_in() != map.dim_out() {
        return Err(Error::DimensionMismatch(
            "extension and operation must act on the same space".into(),
        ));
    }
    let d = map.dim_in();
    let sum = &map.dual_on_identity().matrix().clone()
        + extension.dual_on_identity().matrix();
    if (&sum - &ComplexMatrix::identity(d)).max_abs() > MAP_TOL {
        return Err(Error::NotAnExtension(format!(
            "dual sums deviate from the identity by {:.3e}",
            (&sum - &ComplexMatrix::identity(d)).max_abs()
        )));
    }

    let remainder = HermitianOperator::new(
        &ComplexMatrix::identity(d) - map.dual_on_identity().matrix(),
    )?;
    let cutoff = remainder.default_cutoff()?;
    let inv_sqrt = remainder.pinv_sqrt_psd(cutoff)?;
    let (_, kernel_proj) = remainder.support_and_kernel_projectors(cutoff)?;

    let mut kraus = Vec::new();
    if kernel_proj.matrix().max_abs() >= 1e-12 {
        kraus.push(kernel_proj.matrix().clone());
    }
    for b in extension.kraus_operators() {
        let k = b.matmul(inv_sqrt.matrix());
        if k.max_abs() >= 1e-12 {
            kraus.push(k);
        }
    }
    if kraus.is_empty() {
        kraus.push(ComplexMatrix::zeros(d, d));
    }
    let phi = KrausMap::new(kraus, d, d)?;

    // Both proof obligations are cheap; check them rather than trusting the
    // conditioning of the pseudo-inverse.
    let dual_defect =
        (phi.dual_on_identity().matrix() - &ComplexMatrix::identity(d)).max_abs();
    if dual_defect > MAP_TOL {
        return Err(Error::NumericalFailure(format!(
            "recovered factor is not trace preserving (defect {dual_defect:.3e})"
        )));
    }
    let composed = compose(&phi, &map.minimal_extension()?)?;
    if !maps_equal_on_basis(&composed, extension, MAP_TOL)? {
        return Err(Error::NumericalFailure(
            "recovered factor does not reproduce the extension".into(),
        ));
    }
    Ok(phi)
}

/// Normalized-image channel Phi_Lambda of a quantum operation.
///
/// On the support of Lambda^dag[I] it acts as
/// Lambda[(Lambda^dag[I])^{-1/2} rho (Lambda^dag[I])^{-1/2}]; inputs in the
/// kernel are trashed into `xi` (default: the normalized image of the
/// maximally mixed state on the support).
pub fn phi_lambda(map: &KrausMap, xi: Option<&DensityOperator>) -> Result<KrausMap> {
    if map.dim_in() != map.dim_out() {
        return Err(Error::InvalidOperation(
            "normalized-image channel needs equal input and output dimensions".into(),
        ));
    }
    let d = map.dim_in();
    let dual = map.dual_on_identity();
    if dual.matrix().max_abs() < 1e-12 {
        return Err(Error::InvalidOperation(
            "Phi_Lambda is undefined for the zero map".into(),
        ));
    }
    let cutoff = dual.default_cutoff()?;
    let inv_sqrt = dual.pinv_sqrt_psd(cutoff)?;
    let (support_proj, kernel_proj) = dual.support_and_kernel_projectors(cutoff)?;

    let mut kraus: Vec<ComplexMatrix> = map
        .kraus_operators()
        .iter()
        .map(|a| a.matmul(inv_sqrt.matrix()))
        .filter(|k| k.max_abs() >= 1e-12)
        .collect();

    if kernel_proj.matrix().max_abs() >= 1e-12 {
        let xi_state = match xi {
            Some(x) => x.clone(),
            None => {
                let tr = support_proj.trace_re();
                let mixed = DensityOperator::new(HermitianOperator::new(
                    support_proj.matrix().scale_re(1.0 / tr),
                )?)?;
                map.normalized_apply(&mixed)?
            }
        };
        // Trash branch tr[Pi_0 rho] xi as explicit Kraus operators
        // sqrt(mu_j) |e_j><k| over eigenpairs of xi and a kernel basis.
        let (xi_vals, xi_vecs) = xi_state.operator().eig()?;
        let (proj_vals, proj_vecs) = kernel_proj.eig()?;
        for (kc, &pv) in proj_vals.iter().enumerate() {
            if pv < 0.5 {
                continue;
            }
            for (jc, &mu) in xi_vals.iter().enumerate() {
                if mu <= EIG_CLIP_TOL {
                    continue;
                }
                let w = mu.sqrt();
                kraus.push(ComplexMatrix::from_fn(d, d, |r, c| {
                    xi_vecs[(r, jc)] * proj_vecs[(c, kc)].conj() * w
                }));
            }
        }
    }

    KrausMap::new(kraus, d, d)
}

/// Polarization-dependent-loss parameters: transmission probabilities for
/// the two polarization axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdlParams {
    pub p_h: f64,
    pub p_v: f64,
}

impl PdlParams {
    pub fn new(p_h: f64, p_v: f64) -> Result<Self> {
        for (name, p) in [("p_h", p_h), ("p_v", p_v)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameters(format!(
                    "{name} = {p} outside [0, 1]"
                )));
            }
        }
        Ok(Self { p_h, p_v })
    }
}

/// Rank-1 qubit operation with Kraus sqrt(p_H)|H><H| + sqrt(p_V)|V><V|.
pub fn pdl_operation(params: PdlParams) -> KrausMap {
    KrausMap::from_single(ComplexMatrix::diag(&[params.p_h.sqrt(), params.p_v.sqrt()]))
}

/// Qubit operation
///   rho -> (a tr[rho] I + b tr[rho sx] sx + b tr[rho sy] sy
///           + tr[rho sz](c sz + d I)) / 2,
/// valid when a >= |c|+|d|, (a+c)^2 >= 4b^2 + d^2, and a + |d| <= 1.
pub fn phase_covariant_operation(a: f64, b: f64, c: f64, d: f64) -> Result<KrausMap> {
    if a < c.abs() + d.abs()
        || (a + c).powi(2) < 4.0 * b * b + d * d
        || a + d.abs() > 1.0
    {
        return Err(Error::InvalidParameters(format!(
            "(a, b, c, d) = ({a}, {b}, {c}, {d}) violate the positivity constraints"
        )));
    }
    kraus_map_from_action(2, 2, |rho| phase_covariant_action(rho, a, b, c, d))
}

fn phase_covariant_action(rho: &ComplexMatrix, a: f64, b: f64, c: f64, d: f64) -> ComplexMatrix {
    let (sx, sy, sz) = (pauli::sigma_x(), pauli::sigma_y(), pauli::sigma_z());
    let tr = rho.trace();
    let tx = sx.matmul(rho).trace();
    let ty = sy.matmul(rho).trace();
    let tz = sz.matmul(rho).trace();
    let mut out = ComplexMatrix::identity(2).scale(tr * Complex64::new(a, 0.0));
    out = &out + &sx.scale(tx * Complex64::new(b, 0.0));
    out = &out + &sy.scale(ty * Complex64::new(b, 0.0));
    out = &out + &sz.scale(tz * Complex64::new(c, 0.0));
    out = &out + &ComplexMatrix::identity(2).scale(tz * Complex64::new(d, 0.0));
    out.scale_re(0.5)
}

/// Closed-form parameters (lambda, lambda_z, t_z) of the normalized-image
/// channel of the phase-covariant operation.
pub fn phase_covariant_image_params(a: f64, _b: f64, c: f64, d: f64) -> (f64, f64, f64) {
    if (a - d.abs()).abs() < 1e-15 {
        return (0.0, 0.0, 0.0);
    }
    let denom = a * a - d * d;
    (_b / denom.sqrt(), a * c / denom, -c * d / denom)
}

/// Phase-covariant channel rho -> (tr[rho](I + t_z sz) + lambda tr[rho sx] sx
/// + lambda tr[rho sy] sy + lambda_z tr[rho sz] sz) / 2.
pub fn phase_covariant_channel(lambda: f64, lambda_z: f64, t_z: f64) -> Result<KrausMap> {
    kraus_map_from_action(2, 2, |rho| {
        let (sx, sy, sz) = (pauli::sigma_x(), pauli::sigma_y(), pauli::sigma_z());
        let tr = rho.trace();
        let tx = sx.matmul(rho).trace();
        let ty = sy.matmul(rho).trace();
        let tz = sz.matmul(rho).trace();
        let mut out = ComplexMatrix::identity(2).scale(tr);
        out = &out + &sz.scale(tr * Complex64::new(t_z, 0.0));
        out = &out + &sx.scale(tx * Complex64::new(lambda, 0.0));
        out = &out + &sy.scale(ty * Complex64::new(lambda, 0.0));
        out = &out + &sz.scale(tz * Complex64::new(lambda_z, 0.0));
        out.scale_re(0.5)
    })
}

/// Concatenation f after g, with Kraus set {F_i G_j}.
pub fn compose(f: &KrausMap, g: &KrausMap) -> Result<KrausMap> {
    if f.dim_in() != g.dim_out() {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose: inner dimensions {} and {} differ",
            f.dim_in(),
            g.dim_out()
        )));
    }
    let mut kraus = Vec::with_capacity(f.kraus.len() * g.kraus.len());
    for fi in &f.kraus {
        for gj in &g.kraus {
            kraus.push(fi.matmul(gj));
        }
    }
    KrausMap::new(kraus, g.dim_in(), f.dim_out())
}

/// Tensor product of maps, with Kraus set {F_i (x) G_j}.
pub fn tensor(f: &KrausMap, g: &KrausMap) -> KrausMap {
    let mut kraus = Vec::with_capacity(f.kraus.len() * g.kraus.len());
    for fi in &f.kraus {
        for gj in &g.kraus {
            kraus.push(tensor_product(fi, gj));
        }
    }
    KrausMap::new(kraus, f.dim_in() * g.dim_in(), f.dim_out() * g.dim_out())
        .expect("shapes consistent by construction")
}

/// Representation-independent map equality: equal action on all matrix units
/// of the input space, in max norm.
pub fn maps_equal_on_basis(f: &KrausMap, g: &KrausMap, tol: f64) -> Result<bool> {
    if f.dim_in() != g.dim_in() || f.dim_out() != g.dim_out() {
        return Err(Error::DimensionMismatch(
            "maps of different dimensions cannot be compared".into(),
        ));
    }
    let d = f.dim_in();
    for i in 0..d {
        for j in 0..d {
            let unit = ComplexMatrix::matrix_unit(d, i, j);
            let diff = (&f.apply_matrix(&unit) - &g.apply_matrix(&unit)).max_abs();
            if diff > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Deserialize)]
struct KrausWire {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl<'de> Deserialize<'de> for KrausMap {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let wire = KrausWire::deserialize(deserializer)?;
        KrausMap::new(wire.kraus, wire.dim_in, wire.dim_out)
            .map_err(serde::de::Error::custom)
    }
}

/// Partial isometry embedding A (d_out x d_in) into a taller output space by
/// appending zero rows.
pub fn embed_rows(a: &ComplexMatrix, new_rows: usize) -> ComplexMatrix {
    assert!(new_rows >= a.rows());
    ComplexMatrix::from_fn(new_rows, a.cols(), |r, c| {
        if r < a.rows() {
            a[(r, c)]
        } else {
            crate::matrix::ZERO
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn pdl(p_h: f64, p_v: f64) -> KrausMap {
        pdl_operation(PdlParams::new(p_h, p_v).unwrap())
    }

    #[test]
    fn apply_identity_pdl() {
        let map = pdl(1.0, 1.0);
        let rho = DensityOperator::from_bloch([0.3, -0.2, 0.4]);
        let out = map.apply(&rho.clone().into()).unwrap();
        assert!((out.matrix() - rho.matrix()).max_abs() < 1e-14);
    }

    #[test]
    fn apply_pdl_on_h_state() {
        let map = pdl(0.7, 0.19);
        let h = DensityOperator::basis(2, 0);
        let out = map.apply(&h.into()).unwrap();
        let expected = ComplexMatrix::diag(&[0.7, 0.0]);
        assert!((out.matrix() - &expected).max_abs() < 1e-14);
    }

    #[test]
    fn apply_pdl_on_maximally_mixed() {
        let map = pdl(0.7, 0.19);
        let out = map.apply(&DensityOperator::maximally_mixed(2).into()).unwrap();
        let expected = ComplexMatrix::diag(&[0.35, 0.095]);
        assert!((out.matrix() - &expected).max_abs() < 1e-14);
    }

    #[test]
    fn dual_on_identity_of_pdl() {
        let map = pdl(0.7, 0.19);
        let expected = ComplexMatrix::diag(&[0.7, 0.19]);
        assert!((map.dual_on_identity().matrix() - &expected).max_abs() < 1e-14);
    }

    #[test]
    fn dual_on_identity_of_channel_and_zero() {
        let mut rng = StdRng::seed_from_u64(3);
        let channel = random::random_channel(2, 2, &mut rng);
        let defect =
            (channel.dual_on_identity().matrix() - &ComplexMatrix::identity(2)).max_abs();
        assert!(defect < 1e-10);
        assert!(KrausMap::zero(2).dual_on_identity().matrix().max_abs() < 1e-15);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(pdl(0.5, 0.5).validate(), OperationClass::UnbiasedOperation);
        assert_eq!(pdl(0.7, 0.19).validate(), OperationClass::BiasedOperation);
        assert_eq!(pdl(1.0, 1.0).validate(), OperationClass::Channel);
        // Trace-increasing map is invalid.
        let bad = KrausMap::from_single(ComplexMatrix::diag(&[1.2f64.sqrt(), 1.2f64.sqrt()]));
        assert_eq!(bad.validate(), OperationClass::Invalid);
    }

    #[test]
    fn bias_examples() {
        assert!((pdl(0.7, 0.19).bias().unwrap() - 0.51).abs() < 1e-12);
        assert!(pdl(1.0, 1.0).bias().unwrap().abs() < 1e-12);
        assert!((pdl(1.0, 0.0).bias().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn minimal_extension_of_pdl() {
        let ext = pdl(0.7, 0.19).minimal_extension().unwrap();
        let expected = ComplexMatrix::diag(&[(0.3f64).sqrt(), (0.81f64).sqrt()]);
        assert_eq!(ext.kraus_operators().len(), 1);
        assert!((&ext.kraus_operators()[0] - &expected).max_abs() < 1e-12);
    }

    #[test]
    fn minimal_extension_of_channel_is_zero() {
        let ext = pdl(1.0, 1.0).minimal_extension().unwrap();
        assert!(ext.kraus_operators()[0].max_abs() < 1e-12);
    }

    #[test]
    fn minimal_extension_of_zero_map_is_identity() {
        let ext = KrausMap::zero(2).minimal_extension().unwrap();
        assert!((&ext.kraus_operators()[0] - &ComplexMatrix::identity(2)).max_abs() < 1e-14);
    }

    #[test]
    fn minimal_extension_makes_trace_sum_one() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..20 {
            let map = random::random_operation(3, 2, &mut rng);
            let ext = map.minimal_extension().unwrap();
            let rho = random::random_density(3, &mut rng);
            let t1 = map.apply(&rho.clone().into()).unwrap().trace();
            let t2 = ext.apply(&rho.into()).unwrap().trace();
            assert!((t1 + t2 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn recover_factor_from_minimal_extension_itself() {
        let map = pdl(0.7, 0.19);
        let ext = map.minimal_extension().unwrap();
        let phi = recover_channel_factor(&ext, &map).unwrap();
        let composed = compose(&phi, &ext).unwrap();
        assert!(maps_equal_on_basis(&composed, &ext, 1e-9).unwrap());
    }

    #[test]
    fn recover_factor_from_unitary_conjugate() {
        let mut rng = StdRng::seed_from_u64(7);
        let map = pdl(0.7, 0.19);
        let min_ext = map.minimal_extension().unwrap();
        let u = random::random_unitary(2, &mut rng);
        let ext = KrausMap::from_single(u.matmul(&min_ext.kraus_operators()[0]));
        let phi = recover_channel_factor(&ext, &map).unwrap();
        let composed = compose(&phi, &min_ext).unwrap();
        assert!(maps_equal_on_basis(&composed, &ext, 1e-9).unwrap());
    }

    #[test]
    fn recover_factor_from_random_channel_extension() {
        let mut rng = StdRng::seed_from_u64(9);
        let map = pdl(0.7, 0.19);
        let min_ext = map.minimal_extension().unwrap();
        let channel = random::random_channel(2, 3, &mut rng);
        let ext = compose(&channel, &min_ext).unwrap();
        let phi = recover_channel_factor(&ext, &map).unwrap();
        let composed = compose(&phi, &min_ext).unwrap();
        assert!(maps_equal_on_basis(&composed, &ext, 1e-9).unwrap());
    }

    #[test]
    fn recover_factor_rejects_non_extension() {
        let map = pdl(0.7, 0.19);
        let not_ext = pdl(0.1, 0.1);
        assert!(matches!(
            recover_channel_factor(&not_ext, &map),
            Err(Error::NotAnExtension(_))
        ));
    }

    #[test]
    fn normalized_apply_examples() {
        let map = pdl(0.7, 0.19);
        let h = DensityOperator::basis(2, 0);
        let out = map.normalized_apply(&h).unwrap();
        assert!((out.matrix() - DensityOperator::basis(2, 0).matrix()).max_abs() < 1e-12);

        let out = map.normalized_apply(&DensityOperator::maximally_mixed(2)).unwrap();
        let expected = ComplexMatrix::diag(&[0.7 / 0.89, 0.19 / 0.89]);
        assert!((out.matrix() - &expected).max_abs() < 1e-12);
    }

    #[test]
    fn normalized_apply_scale_invariance_and_failure() {
        let map = pdl(0.7, 0.0);
        // |V><V| is annihilated -> undefined conditional state.
        let v = DensityOperator::basis(2, 1);
        assert!(matches!(
            map.normalized_apply(&v),
            Err(Error::UndefinedConditionalState { .. })
        ));
    }

    #[test]
    fn phi_lambda_of_full_rank_pdl_is_identity() {
        let map = pdl(0.7, 0.19);
        let phi = phi_lambda(&map, None).unwrap();
        assert!(maps_equal_on_basis(&phi, &KrausMap::identity(2), 1e-10).unwrap());
    }

    #[test]
    fn phi_lambda_of_unbiased_operation_is_the_channel() {
        let mut rng = StdRng::seed_from_u64(11);
        let channel = random::random_channel(2, 2, &mut rng);
        let p: f64 = 0.37;
        let attenuated = KrausMap::new(
            channel
                .kraus_operators()
                .iter()
                .map(|a| a.scale_re(p.sqrt()))
                .collect(),
            2,
            2,
        )
        .unwrap();
        let phi = phi_lambda(&attenuated, None).unwrap();
        assert!(maps_equal_on_basis(&phi, &channel, 1e-10).unwrap());
    }

    #[test]
    fn phi_lambda_with_kernel_is_a_channel() {
        // Brewster case p_V = 0: the dual has a kernel, the trash branch fills it.
        let map = pdl(0.6, 0.0);
        let phi = phi_lambda(&map, None).unwrap();
        let defect =
            (phi.dual_on_identity().matrix() - &ComplexMatrix::identity(2)).max_abs();
        assert!(defect < 1e-10, "defect {defect:.3e}");
        let choi_min = phi.choi().matrix.min_eigenvalue().unwrap();
        assert!(choi_min > -1e-10);
    }

    #[test]
    fn phi_lambda_example_map_matches_closed_form() {
        let (a, b, c, d) = (0.5, 0.2, 0.1, 0.1);
        let map = phase_covariant_operation(a, b, c, d).unwrap();
        let phi = phi_lambda(&map, None).unwrap();
        let (lambda, lambda_z, t_z) = phase_covariant_image_params(a, b, c, d);
        assert!((lambda - 0.2 / 0.24f64.sqrt()).abs() < 1e-12);
        assert!((lambda_z - 0.05 / 0.24).abs() < 1e-12);
        assert!((t_z + 0.01 / 0.24).abs() < 1e-12);
        let closed = phase_covariant_channel(lambda, lambda_z, t_z).unwrap();
        assert!(maps_equal_on_basis(&phi, &closed, 1e-10).unwrap());
    }

    #[test]
    fn phase_covariant_examples() {
        let map = phase_covariant_operation(0.5, 0.2, 0.1, 0.1).unwrap();
        assert_eq!(map.validate(), OperationClass::BiasedOperation);
        assert!((map.bias().unwrap() - 0.2).abs() < 1e-10);
        assert!(phase_covariant_operation(0.1, 0.5, 0.1, 0.1).is_err());
    }

    #[test]
    fn compose_with_identity() {
        let map = pdl(0.7, 0.19);
        let composed = compose(&KrausMap::identity(2), &map).unwrap();
        assert!(maps_equal_on_basis(&composed, &map, 1e-12).unwrap());
    }

    #[test]
    fn tensor_of_pdl_is_diagonal() {
        let map = pdl(0.7, 0.19);
        let t = tensor(&map, &map);
        assert_eq!(t.kraus_operators().len(), 1);
        let expected = ComplexMatrix::diag(&[
            0.7,
            (0.7 * 0.19f64).sqrt(),
            (0.19 * 0.7f64).sqrt(),
            0.19,
        ]);
        assert!((&t.kraus_operators()[0] - &expected).max_abs() < 1e-12);
    }

    #[test]
    fn dual_of_composition_identity() {
        let mut rng = StdRng::seed_from_u64(13);
        let f = random::random_operation(2, 2, &mut rng);
        let g = random::random_operation(2, 2, &mut rng);
        let lhs = compose(&f, &g).unwrap().dual_on_identity();
        let rhs = g.dual_apply(&f.dual_on_identity().matrix().clone());
        assert!((lhs.matrix() - &rhs).max_abs() < 1e-10);
    }

    #[test]
    fn choi_psd_and_dual_bounded_for_valid_maps() {
        let mut rng = StdRng::seed_from_u64(15);
        for _ in 0..10 {
            let map = random::random_operation(2, 3, &mut rng);
            assert!(map.choi().matrix.min_eigenvalue().unwrap() > -1e-9);
            let dual = map.dual_on_identity();
            let gap = HermitianOperator::new(
                &ComplexMatrix::identity(2) - dual.matrix(),
            )
            .unwrap();
            assert!(gap.min_eigenvalue().unwrap() > -1e-9);
        }
    }

    #[test]
    fn quasi_linearity_holds_only_for_unbiased() {
        // Unbiased case: normalized image is affine on ensembles.
        let mut rng = StdRng::seed_from_u64(17);
        let channel = random::random_channel(2, 2, &mut rng);
        let p: f64 = 0.4;
        let unbiased = KrausMap::new(
            channel
                .kraus_operators()
                .iter()
                .map(|a| a.scale_re(p.sqrt()))
                .collect(),
            2,
            2,
        )
        .unwrap();
        let rho1 = random::random_density(2, &mut rng);
        let rho2 = random::random_density(2, &mut rng);
        let mix = DensityOperator::new(
            HermitianOperator::new(
                &rho1.matrix().scale_re(0.5) + &rho2.matrix().scale_re(0.5),
            )
            .unwrap(),
        )
        .unwrap();
        let lhs = unbiased.normalized_apply(&mix).unwrap();
        let rhs = &unbiased.normalized_apply(&rho1).unwrap().matrix().scale_re(0.5)
            + &unbiased.normalized_apply(&rho2).unwrap().matrix().scale_re(0.5);
        assert!((lhs.matrix() - &rhs).max_abs() < 1e-9);

        // Biased case: the computational-basis ensemble violates it badly.
        let map = pdl(0.7, 0.19);
        let lhs = map.normalized_apply(&DensityOperator::maximally_mixed(2)).unwrap();
        let rhs = &map
            .normalized_apply(&DensityOperator::basis(2, 0))
            .unwrap()
            .matrix()
            .scale_re(0.5)
            + &map
                .normalized_apply(&DensityOperator::basis(2, 1))
                .unwrap()
                .matrix()
                .scale_re(0.5);
        assert!((lhs.matrix() - &rhs).max_abs() > 1e-3);
    }

    #[test]
    fn phi_lambda_minus_lambda_is_not_an_operation() {
        // For biased PDL the difference map fails positivity on |+><+|.
        let map = pdl(0.7, 0.19);
        let phi = phi_lambda(&map, None).unwrap();
        let one = crate::matrix::ONE;
        let plus = DensityOperator::pure(&[one, one]).unwrap();
        let diff = &phi.apply_matrix(plus.matrix()) - &map.apply_matrix(plus.matrix());
        let min = HermitianOperator::new(diff).unwrap().min_eigenvalue().unwrap();
        assert!(min < -1e-3, "min eigenvalue {min}");
    }

    #[test]
    fn image_coincidence_both_directions() {
        let mut rng = StdRng::seed_from_u64(19);
        for _ in 0..10 {
            let map = random::random_operation_positive_dual(2, 2, &mut rng);
            let phi = phi_lambda(&map, None).unwrap();
            let dual = map.dual_on_identity();
            let cutoff = dual.default_cutoff().unwrap();
            let sqrt = dual.psd_sqrt().unwrap();
            let inv_sqrt = dual.pinv_sqrt_psd(cutoff).unwrap();
            let inv = dual.pinv_psd(cutoff).unwrap();

            // Phi_Lambda[rho] = Lambda_D[rho'] with
            // rho' = K^{-1/2} rho K^{-1/2} / tr[K^{-1} rho].
            let rho = random::random_density(2, &mut rng);
            let denom = inv.matrix().matmul(rho.matrix()).trace().re;
            let rho_prime = DensityOperator::new(
                HermitianOperator::new(
                    inv_sqrt
                        .matrix()
                        .matmul(rho.matrix())
                        .matmul(inv_sqrt.matrix())
                        .scale_re(1.0 / denom),
                )
                .unwrap(),
            )
            .unwrap();
            let lhs = phi.apply_matrix(rho.matrix());
            let rhs = map.normalized_apply(&rho_prime).unwrap();
            assert!((&lhs - rhs.matrix()).max_abs() < 1e-9);

            // Lambda_D[rho'] = Phi_Lambda[rho] with
            // rho = K^{1/2} rho' K^{1/2} / tr[Lambda[rho']].
            let rho_prime = random::random_density(2, &mut rng);
            let denom = map.apply(&rho_prime.clone().into()).unwrap().trace();
            let rho_back = DensityOperator::new(
                HermitianOperator::new(
                    sqrt.matrix()
                        .matmul(rho_prime.matrix())
                        .matmul(sqrt.matrix())
                        .scale_re(1.0 / denom),
                )
                .unwrap(),
            )
            .unwrap();
            let lhs = map.normalized_apply(&rho_prime).unwrap();
            let rhs = phi.apply_matrix(rho_back.matrix());
            assert!((lhs.matrix() - &rhs).max_abs() < 1e-9);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn prop_normalized_apply_is_scale_invariant(seed in 0u64..500, c in 0.05f64..1.0) {
            // Lambda_D[c rho] = Lambda_D[rho] for 0 < c <= 1.
            let mut rng = StdRng::seed_from_u64(seed);
            let map = random::random_operation(2, 2, &mut rng);
            let rho = random::random_density(2, &mut rng);
            let scaled = SubnormalizedDensity::new(
                HermitianOperator::new(rho.matrix().scale_re(c)).unwrap(),
            )
            .unwrap();
            let direct = map.normalized_apply(&rho).unwrap();
            let via_scaled = map.apply(&scaled).unwrap().normalize(1e-12).unwrap();
            proptest::prop_assert!((direct.matrix() - via_scaled.matrix()).max_abs() < 1e-10);
        }

        #[test]
        fn prop_valid_maps_have_psd_choi_and_bounded_dual(seed in 0u64..500) {
            let mut rng = StdRng::seed_from_u64(seed);
            let map = random::random_operation(2, 1 + (seed as usize) % 3, &mut rng);
            proptest::prop_assert!(map.choi().matrix.min_eigenvalue().unwrap() > -1e-9);
            let gap = HermitianOperator::new(
                &ComplexMatrix::identity(2) - map.dual_on_identity().matrix(),
            )
            .unwrap();
            proptest::prop_assert!(gap.min_eigenvalue().unwrap() > -1e-9);
        }
    }

    #[test]
    fn kraus_json_round_trip() {
        let map = pdl(0.7, 0.19);
        let json = serde_json::to_string(&map).unwrap();
        assert!(json.contains("\"dim_in\""));
        assert!(json.contains("\"kraus\""));
        let back: KrausMap = serde_json::from_str(&json).unwrap();
        assert!(maps_equal_on_basis(&map, &back, 1e-15).unwrap());
    }
}
