//! Capacity functionals and bounds: Holevo quantity and capacity, coherent
//! information, the single-letter quantum capacity estimate, and the
//! closed-form capacity bounds for generalized erasure channels.
//!
//! Optimizer-backed quantities are certified lower estimates: multi-start
//! Nelder-Mead over smooth parametrizations of the state space, with seeds
//! fixed per restart index.

use serde::Serialize;

use crate::entropy::{binary_entropy, von_neumann_entropy};
use crate::erasure::{complementary, is_antidegradable_rank1};
use crate::error::{Error, Result};
use crate::hermitian::{cholesky_psd, HermitianOperator};
use crate::kraus::{phi_lambda, KrausMap, MAP_TOL};
use crate::matrix::ComplexMatrix;
use crate::optim::{gaussian_start, multistart_max, NelderMead};
use crate::state::{DensityOperator, Ensemble};
use num_complex::Complex64;

/// Budget for the multi-start optimizers.
#[derive(Debug, Clone)]
pub struct OptimOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_evals: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self { restarts: 32, seed: 42, max_evals: 4000 }
    }
}

impl OptimOptions {
    pub fn with_restarts(restarts: usize) -> Self {
        Self { restarts, ..Self::default() }
    }

    pub fn nelder_mead(&self) -> NelderMead {
        NelderMead { max_evals: self.max_evals, ..NelderMead::default() }
    }
}

/// Lower/upper bound pair in bits, with labels for the active methods.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub lower: f64,
    pub upper: f64,
    pub lower_method: String,
    pub upper_method: String,
    /// Non-fatal consistency warnings (e.g. optimizer slack inverting bounds).
    pub diagnostics: Vec<String>,
}

impl BoundsReport {
    fn new(lower: f64, upper: f64, lower_method: &str, upper_method: &str) -> Self {
        let mut diagnostics = Vec::new();
        if lower > upper + MAP_TOL {
            diagnostics.push(format!(
                "lower bound {lower} exceeds upper bound {upper} beyond tolerance"
            ));
        }
        Self {
            lower,
            upper,
            lower_method: lower_method.into(),
            upper_method: upper_method.into(),
            diagnostics,
        }
    }
}

/// Holevo quantity chi = S(Psi[rho_avg]) - sum_i pi_i S(Psi[rho_i]) in bits.
pub fn holevo_quantity(channel: &KrausMap, ens: &Ensemble) -> Result<f64> {
    ensure_channel(channel)?;
    holevo_quantity_unchecked(channel, ens)
}

fn holevo_quantity_unchecked(channel: &KrausMap, ens: &Ensemble) -> Result<f64> {
    if ens.dim() != channel.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "ensemble dimension {} does not match channel input {}",
            ens.dim(),
            channel.dim_in()
        )));
    }
    let avg_out = channel.apply(&ens.average_state().into())?;
    let mut chi = von_neumann_entropy(&avg_out)?;
    for (w, rho) in ens.items() {
        if *w <= 0.0 {
            continue;
        }
        chi -= w * von_neumann_entropy(&channel.apply(&rho.clone().into())?)?;
    }
    Ok(chi)
}

fn ensure_channel(channel: &KrausMap) -> Result<()> {
    let defect = (channel.dual_on_identity().matrix()
        - &ComplexMatrix::identity(channel.dim_in()))
        .max_abs();
    if defect > MAP_TOL {
        return Err(Error::InvalidOperation(format!(
            "expected a trace-preserving channel (defect {defect:.3e})"
        )));
    }
    Ok(())
}

/// Ensemble parametrization for the Holevo-capacity search: softmax weights
/// over `n` pure states, each state a normalized complex vector.
struct EnsembleParams {
    dim: usize,
    n: usize,
}

impl EnsembleParams {
    fn param_len(&self) -> usize {
        self.n + 2 * self.dim * self.n
    }

    fn build(&self, theta: &[f64]) -> Ensemble {
        let (dim, n) = (self.dim, self.n);
        let logits = &theta[..n];
        let max_logit = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|&t| (t - max_logit).exp()).collect();
        let norm: f64 = exp.iter().sum();
        let mut items = Vec::with_capacity(n);
        for i in 0..n {
            let raw = &theta[n + 2 * dim * i..n + 2 * dim * (i + 1)];
            let mut psi: Vec<Complex64> = (0..dim)
                .map(|k| Complex64::new(raw[2 * k], raw[2 * k + 1]))
                .collect();
            let vnorm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if vnorm < 1e-9 {
                psi = (0..dim)
                    .map(|k| if k == i % dim { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
                    .collect();
            }
            let state = DensityOperator::pure(&psi).expect("nonzero vector");
            items.push((exp[i] / norm, state));
        }
        Ensemble::new(items).expect("softmax weights sum to one")
    }

    /// Equal weights; the first `dim` states are the computational basis, the
    /// rest neighbouring superpositions.
    fn warm_start(&self) -> Vec<f64> {
        let (dim, n) = (self.dim, self.n);
        let mut theta = vec![0.0; self.param_len()];
        for i in 0..n {
            let base = n + 2 * dim * i;
            if i < dim {
                theta[base + 2 * i] = 1.0;
            } else {
                let a = i % dim;
                let b = (i + 1) % dim;
                theta[base + 2 * a] = std::f64::consts::FRAC_1_SQRT_2;
                theta[base + 2 * b] = std::f64::consts::FRAC_1_SQRT_2;
            }
        }
        theta
    }
}

/// Multi-start lower estimate of the Holevo capacity over ensembles of
/// `ensemble_size` pure states (default: dim_in^2).
pub fn holevo_capacity(
    channel: &KrausMap,
    ensemble_size: Option<usize>,
    opts: &OptimOptions,
) -> Result<f64> {
    ensure_channel(channel)?;
    let dim = channel.dim_in();
    let n = ensemble_size.unwrap_or(dim * dim).max(1);
    let params = EnsembleParams { dim, n };
    let objective = |theta: &[f64]| -> f64 {
        let ens = params.build(theta);
        holevo_quantity_unchecked(channel, &ens).unwrap_or(f64::NEG_INFINITY)
    };
    let warm = vec![params.warm_start()];
    let (_, best) = multistart_max(
        objective,
        gaussian_start(params.param_len()),
        &warm,
        opts.restarts,
        opts.seed,
        &opts.nelder_mead(),
    );
    Ok(best.max(0.0))
}

/// Coherent information S(Psi[rho]) - S(Psi~[rho]) in bits.
pub fn coherent_information(channel: &KrausMap, rho: &DensityOperator) -> Result<f64> {
    let comp = complementary(channel)?;
    coherent_information_with(channel, &comp, rho)
}

/// Same, with the complementary channel precomputed by the caller.
pub fn coherent_information_with(
    channel: &KrausMap,
    comp: &KrausMap,
    rho: &DensityOperator,
) -> Result<f64> {
    let s_out = von_neumann_entropy(&channel.apply(&rho.clone().into())?)?;
    let s_env = von_neumann_entropy(&comp.apply(&rho.clone().into())?)?;
    Ok(s_out - s_env)
}

/// Lower estimate of the single-letter quantum capacity
/// Q1 = max(0, sup_rho coherent information).
pub fn q1(channel: &KrausMap, opts: &OptimOptions) -> Result<f64> {
    ensure_channel(channel)?;
    let comp = complementary(channel)?;
    let dim = channel.dim_in();
    let nm = opts.nelder_mead();

    let factor_objective = |theta: &[f64]| -> f64 {
        let rho = density_parametrize(theta).expect("valid factor parametrization");
        coherent_information_with(channel, &comp, &rho).unwrap_or(f64::NEG_INFINITY)
    };
    let factor_warm = vec![density_unparametrize(&DensityOperator::maximally_mixed(dim))?];

    let mut best = if dim == 2 {
        // Bloch parametrization carries half the budget on qubit inputs.
        let bloch_objective = |theta: &[f64]| -> f64 {
            let rho = DensityOperator::from_bloch([theta[0], theta[1], theta[2]]);
            coherent_information_with(channel, &comp, &rho).unwrap_or(f64::NEG_INFINITY)
        };
        let (_, v1) = multistart_max(
            bloch_objective,
            gaussian_start(3),
            &[vec![0.0, 0.0, 0.0]],
            opts.restarts / 2,
            opts.seed,
            &nm,
        );
        let (_, v2) = multistart_max(
            factor_objective,
            gaussian_start(dim * dim),
            &factor_warm,
            opts.restarts - opts.restarts / 2,
            opts.seed.wrapping_add(1),
            &nm,
        );
        v1.max(v2)
    } else {
        let (_, v) = multistart_max(
            factor_objective,
            gaussian_start(dim * dim),
            &factor_warm,
            opts.restarts,
            opts.seed,
            &nm,
        );
        v
    };
    if !best.is_finite() {
        best = 0.0;
    }
    Ok(best.max(0.0))
}

/// The two-branch lower-bound function F(p_min, p_max) for the classical
/// capacity of a generalized erasure channel, in bits.
pub fn f_lower_bound(p_min: f64, p_max: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_min) || !(0.0..=1.0).contains(&p_max) || p_min > p_max {
        return Err(Error::Domain(format!(
            "need 0 <= p_min <= p_max <= 1, got ({p_min}, {p_max})"
        )));
    }
    if p_max - p_min < 1e-15 {
        return Ok(0.0);
    }
    let gap = p_max - p_min;
    let slope = (binary_entropy(p_max) - binary_entropy(p_min)) / gap;
    let first = (1.0 + 2f64.powf(-slope)).log2();
    let second = (p_max * binary_entropy(p_min) - p_min * binary_entropy(p_max)) / gap;
    Ok(first - second)
}

/// Classical-capacity bounds from the detection-probability spectrum alone:
/// max(F, 1 - h((1+b)/2)) <= C(Gamma_Lambda) <= p_max log2 d.
pub fn classical_bounds(map: &KrausMap) -> Result<BoundsReport> {
    let (p_min, p_max) = map.detection_spectrum_range()?;
    let p_min = p_min.clamp(0.0, 1.0);
    let p_max = p_max.clamp(0.0, 1.0);
    let d = map.dim_in() as f64;
    let f = f_lower_bound(p_min, p_max)?;
    let bias_bound = 1.0 - binary_entropy(0.5 * (1.0 + (p_max - p_min)));
    let (lower, lower_method) = if f >= bias_bound {
        (f, "F(p_min, p_max) spectral lower bound")
    } else {
        (bias_bound, "1 - h((1+b)/2) bias lower bound")
    };
    Ok(BoundsReport::new(
        lower,
        p_max * d.log2(),
        lower_method,
        "p_max log2(d) concatenation upper bound",
    ))
}

/// Holevo-capacity bracket through the normalized-image channel:
/// p_min C_chi(Phi_Lambda) <= C_chi(Gamma_Lambda) <= p_max C_chi(Phi_Lambda) + F.
pub fn holevo_capacity_bracket(map: &KrausMap, opts: &OptimOptions) -> Result<BoundsReport> {
    let (p_min, p_max) = map.detection_spectrum_range()?;
    let phi = phi_lambda(map, None)?;
    let c_chi_phi = holevo_capacity(&phi, None, opts)?;
    let f = f_lower_bound(p_min.clamp(0.0, 1.0), p_max.clamp(0.0, 1.0))?;
    Ok(BoundsReport::new(
        p_min * c_chi_phi,
        p_max * c_chi_phi + f,
        "p_min C_chi(Phi_Lambda)",
        "p_max C_chi(Phi_Lambda) + F(p_min, p_max)",
    ))
}

/// Quantum-capacity bounds. The upper bound combines max(0, 2 p_max - 1) log2 d
/// with the sandwich p_max Q1(Phi_Lambda); rank-1 antidegradable inputs
/// short-circuit to zero.
pub fn quantum_bounds(map: &KrausMap, opts: &OptimOptions) -> Result<BoundsReport> {
    let (p_min, p_max) = map.detection_spectrum_range()?;
    let d = map.dim_in() as f64;
    let log_d = d.log2();

    if map.effective_kraus_rank() == 1 && is_antidegradable_rank1(map)? {
        return Ok(BoundsReport::new(
            0.0,
            0.0,
            "antidegradable: Q = 0",
            "antidegradable: Q = 0",
        ));
    }

    let prop_upper = (2.0 * p_max - 1.0).max(0.0) * log_d;
    if p_min <= MAP_TOL {
        // The Q1 sandwich needs Lambda^dag[I] > 0; fall back to the spectral bound.
        return Ok(BoundsReport::new(
            0.0,
            prop_upper,
            "trivial lower bound 0",
            "max(0, 2 p_max - 1) log2(d)",
        ));
    }

    let phi = phi_lambda(map, None)?;
    let q1_phi = q1(&phi, opts)?;
    let lower = (p_min * q1_phi - (1.0 - p_min) * log_d).max(0.0);
    let sandwich_upper = p_max * q1_phi;
    let (upper, upper_method) = if prop_upper <= sandwich_upper {
        (prop_upper, "max(0, 2 p_max - 1) log2(d)")
    } else {
        (sandwich_upper, "p_max Q1(Phi_Lambda), optimizer lower estimate of Q1")
    };
    Ok(BoundsReport::new(
        lower,
        upper,
        "max(0, p_min Q1(Phi_Lambda) - (1 - p_min) log2(d))",
        upper_method,
    ))
}

/// Maps a parameter vector onto a density operator.
///
/// Length 3 is the qubit Bloch ball (clipped to unit norm); length d*d is the
/// factor parametrization rho = L L^dag / tr(L L^dag) with L complex lower
/// triangular, surjective onto the interior of the state space.
pub fn density_parametrize(theta: &[f64]) -> Result<DensityOperator> {
    if theta.len() == 3 {
        return Ok(DensityOperator::from_bloch([theta[0], theta[1], theta[2]]));
    }
    let d = (theta.len() as f64).sqrt().round() as usize;
    if d * d != theta.len() || d == 0 {
        return Err(Error::Domain(format!(
            "parameter length {} is neither 3 nor a perfect square",
            theta.len()
        )));
    }
    let l = factor_from_params(theta, d);
    let mut rho = l.matmul(&l.dagger());
    let tr = rho.trace().re;
    if tr < 1e-12 {
        return Ok(DensityOperator::maximally_mixed(d));
    }
    rho = rho.scale_re(1.0 / tr);
    Ok(DensityOperator::from_hermitian_unchecked(
        HermitianOperator::new(rho)?,
    ))
}

fn factor_from_params(theta: &[f64], d: usize) -> ComplexMatrix {
    let mut l = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        l[(i, i)] = Complex64::new(theta[i], 0.0);
    }
    let mut k = d;
    for i in 1..d {
        for j in 0..i {
            l[(i, j)] = Complex64::new(theta[k], theta[k + 1]);
            k += 2;
        }
    }
    l
}

/// Inverse of the factor parametrization up to gauge (Cholesky with
/// non-negative diagonal). Boundary states lose the rank-deficient columns.
pub fn density_unparametrize(rho: &DensityOperator) -> Result<Vec<f64>> {
    let d = rho.dim();
    let l = cholesky_psd(rho.matrix())?;
    let mut theta = vec![0.0; d * d];
    for i in 0..d {
        theta[i] = l[(i, i)].re;
    }
    let mut k = d;
    for i in 1..d {
        for j in 0..i {
            theta[k] = l[(i, j)].re;
            theta[k + 1] = l[(i, j)].im;
            k += 2;
        }
    }
    Ok(theta)
}
