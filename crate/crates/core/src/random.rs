//! Seeded random states, unitaries, channels and operations.
//!
//! Channels are drawn by orthonormalizing Ginibre blocks into a Stinespring
//! isometry; operations attenuate a random channel through a random positive
//! contraction so that the dual on the identity stays strictly inside (0, I).

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::hermitian::HermitianOperator;
use crate::kraus::KrausMap;
use crate::matrix::ComplexMatrix;
use crate::state::DensityOperator;

fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Random full-rank density operator (normalized Ginibre square).
pub fn random_density(dim: usize, rng: &mut impl Rng) -> DensityOperator {
    let g = ginibre(dim, dim, rng);
    let m = g.matmul(&g.dagger());
    let tr = m.trace().re;
    DensityOperator::new(HermitianOperator::new(m.scale_re(1.0 / tr)).expect("square"))
        .expect("positive by construction")
}

/// Random pure state vector.
pub fn random_pure_vector(dim: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.iter().map(|z| z / norm).collect();
        }
    }
}

/// Orthonormalizes the columns of `m` by modified Gram-Schmidt with one
/// reorthogonalization pass. Requires cols <= rows.
fn orthonormalize_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let (rows, cols) = (m.rows(), m.cols());
    assert!(cols <= rows);
    let mut q: Vec<Vec<Complex64>> = (0..cols)
        .map(|j| (0..rows).map(|i| m[(i, j)]).collect())
        .collect();
    for j in 0..cols {
        for _pass in 0..2 {
            for k in 0..j {
                let proj: Complex64 = (0..rows).map(|i| q[k][i].conj() * q[j][i]).sum();
                let reference: Vec<Complex64> = q[k].clone();
                for (x, r) in q[j].iter_mut().zip(&reference) {
                    *x -= proj * r;
                }
            }
        }
        let norm: f64 = q[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm > 1e-12, "rank-deficient Ginibre sample");
        for z in q[j].iter_mut() {
            *z /= norm;
        }
    }
    ComplexMatrix::from_fn(rows, cols, |i, j| q[j][i])
}

/// Haar-like random unitary from QR of a Ginibre matrix.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    orthonormalize_columns(&ginibre(dim, dim, rng))
}

/// Random channel on `dim` with the given Kraus rank.
pub fn random_channel(dim: usize, kraus_rank: usize, rng: &mut impl Rng) -> KrausMap {
    let iso = orthonormalize_columns(&ginibre(kraus_rank * dim, dim, rng));
    let kraus: Vec<ComplexMatrix> = (0..kraus_rank)
        .map(|k| ComplexMatrix::from_fn(dim, dim, |r, c| iso[(k * dim + r, c)]))
        .collect();
    KrausMap::new(kraus, dim, dim).expect("consistent shapes")
}

/// Random trace-decreasing operation: a random channel attenuated through a
/// random positive contraction M, so Lambda^dag[I] = M with spectrum inside
/// [0.05, 0.95].
pub fn random_operation(dim: usize, kraus_rank: usize, rng: &mut impl Rng) -> KrausMap {
    random_operation_with_spectrum(dim, kraus_rank, 0.05, 0.95, rng)
}

/// Random operation whose dual on the identity is strictly positive, bounded
/// away from both 0 and 1.
pub fn random_operation_positive_dual(
    dim: usize,
    kraus_rank: usize,
    rng: &mut impl Rng,
) -> KrausMap {
    random_operation_with_spectrum(dim, kraus_rank, 0.1, 0.9, rng)
}

fn random_operation_with_spectrum(
    dim: usize,
    kraus_rank: usize,
    lo: f64,
    hi: f64,
    rng: &mut impl Rng,
) -> KrausMap {
    let channel = random_channel(dim, kraus_rank, rng);
    let u = random_unitary(dim, rng);
    let sqrt_p = ComplexMatrix::diag(
        &(0..dim)
            .map(|_| rng.gen_range(lo..hi).sqrt())
            .collect::<Vec<_>>(),
    );
    let contraction = u.matmul(&sqrt_p).matmul(&u.dagger());
    let kraus = channel
        .kraus_operators()
        .iter()
        .map(|a| a.matmul(&contraction))
        .collect();
    KrausMap::new(kraus, dim, dim).expect("consistent shapes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kraus::OperationClass;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = StdRng::seed_from_u64(1);
        for dim in [2, 3, 5] {
            let u = random_unitary(dim, &mut rng);
            let defect = (&u.dagger().matmul(&u) - &ComplexMatrix::identity(dim)).max_abs();
            assert!(defect < 1e-12, "dim {dim}: defect {defect:.3e}");
        }
    }

    #[test]
    fn random_channel_is_trace_preserving() {
        let mut rng = StdRng::seed_from_u64(2);
        let ch = random_channel(3, 2, &mut rng);
        assert_eq!(ch.validate(), OperationClass::Channel);
    }

    #[test]
    fn random_operation_is_valid_and_strictly_decreasing() {
        let mut rng = StdRng::seed_from_u64(3);
        let op = random_operation(2, 2, &mut rng);
        let class = op.validate();
        assert!(
            class == OperationClass::BiasedOperation
                || class == OperationClass::UnbiasedOperation
        );
        let (p_min, p_max) = op.detection_spectrum_range().unwrap();
        assert!(p_min > 0.0 && p_max < 1.0);
    }
}
