//! Generalized erasure channel and its complementary-channel machinery.
//!
//! For a trace-decreasing operation Lambda on H_d, the generalized erasure
//! channel sends rho to Lambda[rho] on the first d output coordinates and
//! puts the loss probability tr[rho - Lambda[rho]] on an orthogonal erasure
//! flag. The flag is always the last basis vector of the output space.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::entropy::von_neumann_entropy;
use crate::error::{Error, Result};
use crate::hermitian::{invert, HermitianOperator};
use crate::kraus::{compose, embed_rows, KrausMap, OperationClass, MAP_TOL};
use crate::matrix::ComplexMatrix;
use crate::random;
use crate::state::SubnormalizedDensity;

/// Generalized erasure channel Gamma_Lambda: d -> d+1 with the erasure flag
/// on the last output coordinate.
#[derive(Debug, Clone)]
pub struct ErasureChannel {
    base: KrausMap,
    channel: KrausMap,
    erasure_flag_index: usize,
}

impl ErasureChannel {
    /// The underlying trace-decreasing operation Lambda.
    pub fn base(&self) -> &KrausMap {
        &self.base
    }

    /// The channel Gamma_Lambda itself.
    pub fn channel(&self) -> &KrausMap {
        &self.channel
    }

    pub fn erasure_flag_index(&self) -> usize {
        self.erasure_flag_index
    }

    pub fn complementary(&self) -> Result<KrausMap> {
        complementary(&self.channel)
    }
}

/// Builds Gamma_Lambda = Lambda (+) (Tr o Lambda'_min) from a valid operation
/// with equal input and output dimensions.
pub fn generalized_erasure(map: &KrausMap) -> Result<ErasureChannel> {
    if map.dim_in() != map.dim_out() {
        return Err(Error::InvalidOperation(
            "generalized erasure needs equal input and output dimensions".into(),
        ));
    }
    if map.validate() == OperationClass::Invalid {
        return Err(Error::InvalidOperation(
            "generalized erasure needs a valid (trace-nonincreasing) operation".into(),
        ));
    }
    let d = map.dim_in();
    let sqrt_remainder = map.minimal_extension()?;
    let sqrt_b = &sqrt_remainder.kraus_operators()[0];

    let mut kraus: Vec<ComplexMatrix> = map
        .kraus_operators()
        .iter()
        .map(|a| embed_rows(a, d + 1))
        .collect();
    // Loss branches |e><i| sqrt(I - Lambda^dag[I]), one per input coordinate.
    for i in 0..d {
        let mut op = ComplexMatrix::zeros(d + 1, d);
        for c in 0..d {
            op[(d, c)] = sqrt_b[(i, c)];
        }
        if op.max_abs() >= 1e-12 {
            kraus.push(op);
        }
    }
    let channel = KrausMap::new(kraus, d, d + 1)?;
    Ok(ErasureChannel { base: map.clone(), channel, erasure_flag_index: d })
}

/// Complementary channel: Kraus operators Vtilde_j = sum_alpha |alpha><j| V_alpha.
/// The environment dimension is the number of stored Kraus operators after
/// discarding those with norm below 1e-12.
pub fn complementary(channel: &KrausMap) -> Result<KrausMap> {
    let dual_defect = (channel.dual_on_identity().matrix()
        - &ComplexMatrix::identity(channel.dim_in()))
        .max_abs();
    if dual_defect > MAP_TOL {
        return Err(Error::InvalidOperation(format!(
            "complementary channel needs a trace-preserving map (defect {dual_defect:.3e})"
        )));
    }
    let kept: Vec<&ComplexMatrix> = channel
        .kraus_operators()
        .iter()
        .filter(|a| a.max_abs() >= 1e-12)
        .collect();
    let k = kept.len();
    let (d_in, d_out) = (channel.dim_in(), channel.dim_out());
    let kraus: Vec<ComplexMatrix> = (0..d_out)
        .map(|j| ComplexMatrix::from_fn(k, d_in, |alpha, m| kept[alpha][(j, m)]))
        .collect();
    KrausMap::new(kraus, d_in, k)
}

/// The channel Xi on H_{d+1} with Xi o Gamma_{Lambda_2} = Gamma_{Theta o Lambda_2}
/// for every operation Lambda_2: block inputs pass through Theta, the lost
/// weight tr[rho (I - Theta^dag[I])] joins the flag.
pub fn xi_degrading_map(theta: &KrausMap) -> Result<KrausMap> {
    if theta.dim_in() != theta.dim_out() {
        return Err(Error::InvalidOperation(
            "Xi construction needs a square operation".into(),
        ));
    }
    if theta.validate() == OperationClass::Invalid {
        return Err(Error::InvalidOperation("Xi construction needs a valid operation".into()));
    }
    let d = theta.dim_in();
    let sqrt_b = theta.minimal_extension()?;
    let sqrt_b = &sqrt_b.kraus_operators()[0];

    let mut kraus = Vec::new();
    // First Kraus operator carries the flag amplitude so that Theta = Id
    // yields exactly the identity on H_{d+1}.
    for (idx, t) in theta.kraus_operators().iter().enumerate() {
        let mut op = ComplexMatrix::zeros(d + 1, d + 1);
        for r in 0..d {
            for c in 0..d {
                op[(r, c)] = t[(r, c)];
            }
        }
        if idx == 0 {
            op[(d, d)] = crate::matrix::ONE;
        }
        kraus.push(op);
    }
    for i in 0..d {
        let mut op = ComplexMatrix::zeros(d + 1, d + 1);
        for c in 0..d {
            op[(d, c)] = sqrt_b[(i, c)];
        }
        if op.max_abs() >= 1e-12 {
            kraus.push(op);
        }
    }
    KrausMap::new(kraus, d + 1, d + 1)
}

/// Outcome of the rank-1 degradability decision.
#[derive(Debug, Clone)]
pub struct DegradabilityDecision {
    pub degradable: bool,
    /// A A^dag >= I/2 held.
    pub via_half_bound: bool,
    /// I - A^dag A is a rank-1 operator.
    pub via_rank_one: bool,
    /// Explicit degrading channel with Xi o Gamma_Lambda = complementary(Gamma_Lambda).
    pub degrading_map: Option<KrausMap>,
    /// Largest deviation observed while verifying the degrading map.
    pub verification_residual: Option<f64>,
}

fn single_kraus(map: &KrausMap) -> Result<ComplexMatrix> {
    let kept: Vec<&ComplexMatrix> = map
        .kraus_operators()
        .iter()
        .filter(|a| a.max_abs() >= 1e-12)
        .collect();
    match kept.len() {
        0 => Ok(ComplexMatrix::zeros(map.dim_out(), map.dim_in())),
        1 => Ok(kept[0].clone()),
        n => Err(Error::UnsupportedKrausRank(n)),
    }
}

/// Degradability of Gamma_Lambda for a rank-1 operation Lambda[rho] = A rho A^dag:
/// degradable iff A A^dag >= I/2 or I - A^dag A has rank 1. In the positive
/// case the explicit degrading channel is constructed and verified.
pub fn is_degradable_rank1(map: &KrausMap) -> Result<DegradabilityDecision> {
    let a = single_kraus(map)?;
    let d = map.dim_in();
    if map.dim_out() != d {
        return Err(Error::InvalidOperation("degradability test needs a square map".into()));
    }
    let aa_dag = HermitianOperator::new(a.matmul(&a.dagger()))?;
    let a_dag_a = HermitianOperator::new(a.dagger().matmul(&a))?;
    let remainder = HermitianOperator::new(
        &ComplexMatrix::identity(d) - a_dag_a.matrix(),
    )?;

    let via_half_bound = aa_dag.min_eigenvalue()? >= 0.5 - MAP_TOL;
    let remainder_rank = remainder
        .eigenvalues()?
        .iter()
        .filter(|&&l| l > MAP_TOL)
        .count();
    let via_rank_one = remainder_rank == 1;
    let degradable = via_half_bound || via_rank_one;

    if !degradable {
        return Ok(DegradabilityDecision {
            degradable,
            via_half_bound,
            via_rank_one,
            degrading_map: None,
            verification_residual: None,
        });
    }

    let xi = if via_half_bound {
        degrading_map_half_bound(&a, &aa_dag, &remainder)?
    } else {
        degrading_map_rank_one(&remainder, d)?
    };
    let residual = verify_degrading(map, &xi)?;
    if residual > MAP_TOL {
        return Err(Error::NumericalFailure(format!(
            "degrading map verification failed with residual {residual:.3e}"
        )));
    }
    Ok(DegradabilityDecision {
        degradable,
        via_half_bound,
        via_rank_one,
        degrading_map: Some(xi),
        verification_residual: Some(residual),
    })
}

/// Case A A^dag >= I/2: Xi maps (rho (+) c) to
/// (c + tr{rho [2I - (AA^dag)^{-1}]}) (+) sqrt(I-A^dag A) A^{-1} rho A^{-dag} sqrt(I-A^dag A),
/// with the scalar landing on the first output coordinate.
fn degrading_map_half_bound(
    a: &ComplexMatrix,
    aa_dag: &HermitianOperator,
    remainder: &HermitianOperator,
) -> Result<KrausMap> {
    let d = a.rows();
    let aa_dag_inv = aa_dag.pinv_psd(aa_dag.default_cutoff()?)?;
    let m = HermitianOperator::new(
        &ComplexMatrix::identity(d).scale_re(2.0) - aa_dag_inv.matrix(),
    )?;
    if m.min_eigenvalue()? < -1e-9 {
        return Err(Error::NumericalFailure(
            "2I - (AA^dag)^{-1} lost positivity".into(),
        ));
    }
    let sqrt_m = m.map_spectrum(|l| l.max(0.0).sqrt())?;
    let a_inv = invert(a)?;
    let block = remainder.psd_sqrt()?.into_matrix().matmul(&a_inv);

    let mut kraus = Vec::new();
    // Flag amplitude to the scalar slot.
    let mut flag = ComplexMatrix::zeros(d + 1, d + 1);
    flag[(0, d)] = crate::matrix::ONE;
    kraus.push(flag);
    // tr[rho M] to the scalar slot, one operator per row of sqrt(M).
    for i in 0..d {
        let mut op = ComplexMatrix::zeros(d + 1, d + 1);
        for c in 0..d {
            op[(0, c)] = sqrt_m.matrix()[(i, c)];
        }
        if op.max_abs() >= 1e-12 {
            kraus.push(op);
        }
    }
    // Block action into output coordinates 1..=d.
    let mut op = ComplexMatrix::zeros(d + 1, d + 1);
    for r in 0..d {
        for c in 0..d {
            op[(r + 1, c)] = block[(r, c)];
        }
    }
    if op.max_abs() >= 1e-12 {
        kraus.push(op);
    }
    KrausMap::new(kraus, d + 1, d + 1)
}

/// Case I - A^dag A = p |psi><psi|: Xi maps (rho (+) c) to tr[rho] (+) c |psi><psi|.
fn degrading_map_rank_one(remainder: &HermitianOperator, d: usize) -> Result<KrausMap> {
    let (vals, vecs) = remainder.eig()?;
    if vals[0] <= MAP_TOL {
        return Err(Error::NumericalFailure("remainder is not rank 1".into()));
    }
    let psi: Vec<Complex64> = (0..d).map(|r| vecs[(r, 0)]).collect();

    let mut kraus = Vec::new();
    for i in 0..d {
        let mut op = ComplexMatrix::zeros(d + 1, d + 1);
        op[(0, i)] = crate::matrix::ONE;
        kraus.push(op);
    }
    let mut op = ComplexMatrix::zeros(d + 1, d + 1);
    for r in 0..d {
        op[(r + 1, d)] = psi[r];
    }
    kraus.push(op);
    KrausMap::new(kraus, d + 1, d + 1)
}

/// Residual of Xi o Gamma_Lambda = complementary(Gamma_Lambda). Exact map
/// comparison when the environment dimensions match; entropy agreement on a
/// deterministic set of random states otherwise.
fn verify_degrading(map: &KrausMap, xi: &KrausMap) -> Result<f64> {
    let gamma = generalized_erasure(map)?;
    let comp = gamma.complementary()?;
    let composed = compose(xi, gamma.channel())?;
    let d = map.dim_in();
    if comp.dim_out() == d + 1 {
        let mut residual = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let unit = ComplexMatrix::matrix_unit(d, i, j);
                residual = residual
                    .max((&composed.apply_matrix(&unit) - &comp.apply_matrix(&unit)).max_abs());
            }
        }
        Ok(residual)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0xDE6);
        let mut residual = 0.0f64;
        for _ in 0..10 {
            let rho = random::random_density(d, &mut rng);
            let s1 = von_neumann_entropy(&composed.apply(&rho.clone().into())?)?;
            let s2 = von_neumann_entropy(&comp.apply(&rho.into())?)?;
            residual = residual.max((s1 - s2).abs());
        }
        Ok(residual)
    }
}

/// Antidegradability of Gamma_Lambda for a rank-1 operation: holds iff
/// A^dag A <= I/2 or A^dag A has rank 1.
pub fn is_antidegradable_rank1(map: &KrausMap) -> Result<bool> {
    let a = single_kraus(map)?;
    let a_dag_a = HermitianOperator::new(a.dagger().matmul(&a))?;
    if a_dag_a.max_eigenvalue()? <= 0.5 + MAP_TOL {
        return Ok(true);
    }
    let rank = a_dag_a.eigenvalues()?.iter().filter(|&&l| l > MAP_TOL).count();
    Ok(rank == 1)
}

/// Report of the two-letter factorization check
/// Gamma_{Lambda (x) Lambda} = (Id^(x)2 (+) Tr_rest) o Gamma_Lambda^(x)2.
#[derive(Debug, Clone)]
pub struct TensorStructureReport {
    pub holds: bool,
    pub max_deviation: f64,
    /// Dimension of the coarse-grained complement of H_d^(x)2 in H_{d+1}^(x)2.
    pub complement_dim: usize,
}

/// Verifies the two-letter structure on the full matrix-unit basis of the
/// input space.
pub fn gamma_tensor_structure_check(map: &KrausMap) -> Result<TensorStructureReport> {
    let d = map.dim_in();
    let gamma = generalized_erasure(map)?;
    let gamma_sq = crate::kraus::tensor(gamma.channel(), gamma.channel());
    let two_letter = crate::kraus::tensor(map, map);
    let gamma_two = generalized_erasure(&two_letter)?;

    let coarse = coarse_graining_channel(d)?;
    let lhs = compose(&coarse, &gamma_sq)?;

    let dd = d * d;
    let mut max_dev = 0.0f64;
    for i in 0..dd {
        for j in 0..dd {
            let unit = ComplexMatrix::matrix_unit(dd, i, j);
            let dev = (&lhs.apply_matrix(&unit) - &gamma_two.channel().apply_matrix(&unit))
                .max_abs();
            max_dev = max_dev.max(dev);
        }
    }
    Ok(TensorStructureReport {
        holds: max_dev <= MAP_TOL,
        max_deviation: max_dev,
        complement_dim: (d + 1) * (d + 1) - d * d,
    })
}

/// Channel (Id^(x)2 (+) Tr_rest): keeps the H_d (x) H_d block of
/// H_{d+1} (x) H_{d+1} and trashes the complement into the erasure flag.
fn coarse_graining_channel(d: usize) -> Result<KrausMap> {
    let in_dim = (d + 1) * (d + 1);
    let out_dim = d * d + 1;
    let block_of = |i: usize, j: usize| i * d + j;
    let embedded_of = |i: usize, j: usize| i * (d + 1) + j;

    let mut kraus = Vec::new();
    let mut p = ComplexMatrix::zeros(out_dim, in_dim);
    for i in 0..d {
        for j in 0..d {
            p[(block_of(i, j), embedded_of(i, j))] = crate::matrix::ONE;
        }
    }
    kraus.push(p);
    for k in 0..in_dim {
        let (i, j) = (k / (d + 1), k % (d + 1));
        if i < d && j < d {
            continue;
        }
        let mut op = ComplexMatrix::zeros(out_dim, in_dim);
        op[(d * d, k)] = crate::matrix::ONE;
        kraus.push(op);
    }
    KrausMap::new(kraus, in_dim, out_dim)
}

/// Erasure-flag probability of the channel output for a unit-trace input.
pub fn flag_probability(gamma: &ErasureChannel, rho: &SubnormalizedDensity) -> Result<f64> {
    let out = gamma.channel().apply(rho)?;
    let e = gamma.erasure_flag_index();
    Ok(out.matrix()[(e, e)].re)
}
