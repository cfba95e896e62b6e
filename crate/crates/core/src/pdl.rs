//! Polarization-dependent-loss analysis: exact single-letter quantum capacity
//! through a transcendental equation, the two-letter superadditivity witness,
//! entropy-decrement identities, and heat-map grid scans.

use num_complex::Complex64;
use serde::Serialize;

use crate::capacity::{
    coherent_information_with, density_parametrize, density_unparametrize, OptimOptions,
};
use crate::entropy::entropy_of_spectrum;
use crate::erasure::generalized_erasure;
use crate::error::{Error, Result};
use crate::exec;
use crate::hermitian::HermitianOperator;
use crate::kraus::{pdl_operation, tensor, KrausMap, PdlParams};
use crate::matrix::ComplexMatrix;
use crate::optim::{gaussian_start, multistart_max};
use crate::state::DensityOperator;

fn check_unit_interval(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameters(format!("{name} = {p} outside [0, 1]")));
    }
    Ok(())
}

fn entropy_term(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// -w log2(num/den) with the 0 log 0 convention.
fn log_ratio_term(w: f64, num: f64, den: f64) -> f64 {
    if w == 0.0 || num <= 0.0 || den <= 0.0 {
        0.0
    } else {
        -w * (num / den).log2()
    }
}

/// The function G(p1, p2, z) whose symmetric equation
/// G(p_H, p_V, z) = G(p_V, p_H, -z) locates the optimal Bloch-z of the
/// coherent information. Base-2 logs; z is clamped away from the endpoints.
pub fn g_function(p1: f64, p2: f64, z: f64) -> Result<f64> {
    check_unit_interval("p1", p1)?;
    check_unit_interval("p2", p2)?;
    let z = z.clamp(-(1.0 - 1e-12), 1.0 - 1e-12);
    let (zp, zm) = (1.0 + z, 1.0 - z);
    let first = log_ratio_term(p1, p1 * zp, p1 * zp + p2 * zm);
    let second = -log_ratio_term(1.0 - p1, (1.0 - p1) * zp, (1.0 - p1) * zp + (1.0 - p2) * zm);
    Ok(first + second)
}

/// Coherent information of Gamma_pdl at the diagonal input (I + z sigma_z)/2,
/// as a difference of two three-outcome Shannon entropies.
pub fn q_of_z(p_h: f64, p_v: f64, z: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p_h) && (0.0..=1.0).contains(&p_v));
    let z = z.clamp(-1.0, 1.0);
    let a = 0.5 * p_h * (1.0 + z);
    let b = 0.5 * p_v * (1.0 - z);
    let direct = entropy_term(a) + entropy_term(b) + entropy_term(1.0 - a - b);
    let env = entropy_term(a + b)
        + entropy_term(0.5 * (1.0 - p_h) * (1.0 + z))
        + entropy_term(0.5 * (1.0 - p_v) * (1.0 - z));
    direct - env
}

/// Exact single-letter quantum capacity of Gamma_pdl and the approximate
/// closed-form optimum z'.
#[derive(Debug, Clone, Serialize)]
pub struct PdlQ1Result {
    pub p_h: f64,
    pub p_v: f64,
    /// Root of the symmetric equation, with sgn(z_star) = sgn(p_v - p_h).
    /// Unset when Q1 = 0.
    pub z_star: Option<f64>,
    /// Q1(Gamma_Lambda) in bits.
    pub q1: f64,
    /// Closed-form approximation to z_star.
    pub z_prime: Option<f64>,
    /// Coherent information at z'; a lower bound on q1.
    pub q_at_z_prime: Option<f64>,
}

/// Solves G(p_H, p_V, z) = G(p_V, p_H, -z) for the proper-sign root and
/// returns Q1 together with the closed-form approximation z'.
///
/// Q1 = 0 exactly when max(p_H, p_V) <= 1/2 or p_H p_V = 0.
pub fn solve_q1_pdl(p_h: f64, p_v: f64) -> Result<PdlQ1Result> {
    check_unit_interval("p_h", p_h)?;
    check_unit_interval("p_v", p_v)?;
    if p_h.max(p_v) <= 0.5 || p_h * p_v == 0.0 {
        return Ok(PdlQ1Result {
            p_h,
            p_v,
            z_star: None,
            q1: 0.0,
            z_prime: None,
            q_at_z_prime: None,
        });
    }
    if p_h == p_v {
        let q1 = q_of_z(p_h, p_v, 0.0);
        return Ok(PdlQ1Result {
            p_h,
            p_v,
            z_star: Some(0.0),
            q1,
            z_prime: Some(0.0),
            q_at_z_prime: Some(q1),
        });
    }
    if p_h > p_v {
        // Mirror relabeling H <-> V is a unitary; solve the canonical order
        // and flip the sign of z.
        let mirrored = solve_q1_pdl(p_v, p_h)?;
        return Ok(PdlQ1Result {
            p_h,
            p_v,
            z_star: mirrored.z_star.map(|z| -z),
            q1: mirrored.q1,
            z_prime: mirrored.z_prime.map(|z| -z),
            q_at_z_prime: mirrored.q_at_z_prime,
        });
    }

    // Canonical order p_v > p_h: the root lies in [0, 1).
    let residual = |z: f64| -> f64 {
        g_function(p_h, p_v, z).expect("params validated")
            - g_function(p_v, p_h, -z).expect("params validated")
    };
    let Some(z_star) = bisect_proper_sign_root(&residual)? else {
        // The root sits closer to z = 1 than the log-clamp boundary, which
        // happens when q1 underflows the entropy arithmetic (below ~4e-11
        // bits); report it as numerically zero.
        return Ok(PdlQ1Result {
            p_h,
            p_v,
            z_star: None,
            q1: 0.0,
            z_prime: None,
            q_at_z_prime: None,
        });
    };
    let q1 = q_of_z(p_h, p_v, z_star);

    let z_prime = z_prime_canonical(p_h, p_v);
    let q_at_z_prime = q_of_z(p_h, p_v, z_prime);
    Ok(PdlQ1Result {
        p_h,
        p_v,
        z_star: Some(z_star),
        q1,
        z_prime: Some(z_prime),
        q_at_z_prime: Some(q_at_z_prime),
    })
}

/// Locates a sign change of `f` on [0, 1) by a 1024-point pre-scan up to the
/// log-clamp boundary 1 - 1e-12 and refines it with 100 bisection steps.
/// Returns `None` when no sign change exists on the scanned interval (the
/// root lies beyond the resolvable range).
fn bisect_proper_sign_root(f: &dyn Fn(f64) -> f64) -> Result<Option<f64>> {
    let hi = 1.0 - 1e-12;
    let n = 1024;
    let mut prev_z = 0.0;
    let mut prev_f = f(prev_z);
    if prev_f.abs() < 1e-14 {
        return Ok(Some(0.0));
    }
    let mut bracket = None;
    for k in 1..=n {
        let z = hi * k as f64 / n as f64;
        let fz = f(z);
        if fz == 0.0 {
            return Ok(Some(z));
        }
        if fz.signum() != prev_f.signum() {
            bracket = Some((prev_z, z, prev_f));
            break;
        }
        prev_z = z;
        prev_f = fz;
    }
    let Some((mut lo, mut hi, flo)) = bracket else {
        return Ok(None);
    };
    let flo_sign = flo.signum();
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(Some(mid));
        }
        if fm.signum() == flo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    // Near-pure optima can leave |f| above any fixed threshold at the
    // closest representable z; a collapsed bracket is equally converged.
    if f(root).abs() > 1e-12 && hi - lo > 4.0 * f64::EPSILON {
        return Err(Error::NumericalFailure(format!(
            "bisection stalled with residual {:.3e}",
            f(root)
        )));
    }
    Ok(Some(root))
}

/// Closed-form z' for the canonical order p_v > p_h (z' >= 0 side is the
/// mirrored branch of the displayed formulas).
fn z_prime_canonical(p_h: f64, p_v: f64) -> f64 {
    let power = ((1.0 - p_h) / (1.0 - p_v)).powf((1.0 - p_v) / (2.0 * p_v - 1.0))
        * (p_v / p_h).powf(p_v / (2.0 * p_v - 1.0));
    let correction = (p_v - p_h) * (p_h + p_v - 2.0 * p_h * p_v)
        / ((2.0 * p_v - 1.0) * (1.0 - p_h) * p_h);
    let r = power - correction;
    if !r.is_finite() {
        return 1.0 - 1e-12;
    }
    // (1 + z')/(1 - z') = r
    ((r - 1.0) / (r + 1.0)).clamp(-(1.0 - 1e-12), 1.0 - 1e-12)
}

/// The two-letter witness state
/// rho_2 = rho_HH^2 |HH><HH| + 2 rho_HH rho_VV |phi-><phi-| + rho_VV^2 |VV><VV|
/// built from the optimal single-letter diagonal input.
pub fn rho2_witness(p_h: f64, p_v: f64) -> Result<DensityOperator> {
    let sol = solve_q1_pdl(p_h, p_v)?;
    let z = sol.z_star.ok_or_else(|| {
        Error::Domain(format!(
            "rho_2 witness undefined: Q1 = 0 at (p_H, p_V) = ({p_h}, {p_v})"
        ))
    })?;
    Ok(rho2_from_z(z))
}

fn rho2_from_z(z: f64) -> DensityOperator {
    let rho_hh = 0.5 * (1.0 + z);
    let rho_vv = 0.5 * (1.0 - z);
    let mut m = ComplexMatrix::zeros(4, 4);
    m[(0, 0)] = Complex64::new(rho_hh * rho_hh, 0.0);
    m[(3, 3)] = Complex64::new(rho_vv * rho_vv, 0.0);
    // 2 rho_HH rho_VV |phi-><phi-| on the {HV, VH} block.
    let w = rho_hh * rho_vv;
    m[(1, 1)] = Complex64::new(w, 0.0);
    m[(2, 2)] = Complex64::new(w, 0.0);
    m[(1, 2)] = Complex64::new(-w, 0.0);
    m[(2, 1)] = Complex64::new(-w, 0.0);
    DensityOperator::from_hermitian_unchecked(HermitianOperator::new(m).expect("square"))
}

fn rho1_from_z(z: f64) -> DensityOperator {
    DensityOperator::from_hermitian_unchecked(HermitianOperator::from_real_diag(&[
        0.5 * (1.0 + z),
        0.5 * (1.0 - z),
    ]))
}

/// Residuals of the entropy-decrement identities relating rho_2 to the
/// product input rho_1 (x) rho_1, in bits.
#[derive(Debug, Clone, Serialize)]
pub struct EntropyDecrementReport {
    pub p_h: f64,
    pub p_v: f64,
    pub z_star: f64,
    pub rho_hh: f64,
    pub rho_vv: f64,
    /// S(Gamma^(x)2[rho_2]) - S(Gamma^(x)2[rho_1^(x)2]).
    pub direct_decrement: f64,
    /// Expected value -2 p_H p_V rho_HH rho_VV.
    pub direct_expected: f64,
    pub direct_residual: f64,
    /// Complementary-channel counterpart.
    pub complementary_decrement: f64,
    /// Expected value -2 (1-p_H)(1-p_V) rho_HH rho_VV.
    pub complementary_expected: f64,
    pub complementary_residual: f64,
}

/// Evaluates both entropy-decrement identities by direct entropy computation
/// on the two-letter channel and its complementary.
pub fn entropy_decrement_check(p_h: f64, p_v: f64) -> Result<EntropyDecrementReport> {
    let sol = solve_q1_pdl(p_h, p_v)?;
    let z = sol.z_star.ok_or_else(|| {
        Error::Domain(format!(
            "entropy decrement check needs Q1 > 0, got Q1 = 0 at ({p_h}, {p_v})"
        ))
    })?;
    let (rho_hh, rho_vv) = (0.5 * (1.0 + z), 0.5 * (1.0 - z));

    let gamma = generalized_erasure(&pdl_operation(PdlParams::new(p_h, p_v)?))?;
    let direct2 = tensor(gamma.channel(), gamma.channel());
    let comp = gamma.complementary()?;
    let comp2 = tensor(&comp, &comp);

    let rho1 = rho1_from_z(z);
    let rho11 = rho1.tensor(&rho1);
    let rho2 = rho2_from_z(z);

    let s = |ch: &KrausMap, rho: &DensityOperator| -> Result<f64> {
        let out = ch.apply(&rho.clone().into())?;
        Ok(entropy_of_spectrum(&out.operator().eigenvalues()?))
    };

    let direct_decrement = s(&direct2, &rho2)? - s(&direct2, &rho11)?;
    let complementary_decrement = s(&comp2, &rho2)? - s(&comp2, &rho11)?;
    let direct_expected = -2.0 * p_h * p_v * rho_hh * rho_vv;
    let complementary_expected = -2.0 * (1.0 - p_h) * (1.0 - p_v) * rho_hh * rho_vv;

    Ok(EntropyDecrementReport {
        p_h,
        p_v,
        z_star: z,
        rho_hh,
        rho_vv,
        direct_decrement,
        direct_expected,
        direct_residual: (direct_decrement - direct_expected).abs(),
        complementary_decrement,
        complementary_expected,
        complementary_residual: (complementary_decrement - complementary_expected).abs(),
    })
}

/// Superadditivity lower bound (1 - p_H - p_V) rho_HH rho_VV in bits.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SuperadditivityLowerBound {
    pub value: f64,
    /// True when (p_H, p_V) lies in the proven superadditivity region
    /// 1/2 < p_H < 1, 0 < p_V < 1 - p_H (or mirrored).
    pub in_region: bool,
}

pub fn superadditivity_lower_bound(p_h: f64, p_v: f64) -> Result<SuperadditivityLowerBound> {
    check_unit_interval("p_h", p_h)?;
    check_unit_interval("p_v", p_v)?;
    // The p_H + p_V < 1 edge is tested with a 1e-12 guard so that parameter
    // pairs summing to 1 up to roundoff count as the boundary (bound 0).
    let in_region = p_h.max(p_v) > 0.5
        && p_h.min(p_v) > 0.0
        && p_h.max(p_v) < 1.0
        && p_h + p_v < 1.0 - 1e-12;
    if !in_region {
        return Ok(SuperadditivityLowerBound { value: 0.0, in_region });
    }
    let sol = solve_q1_pdl(p_h, p_v)?;
    let Some(z) = sol.z_star else {
        // Q1 underflowed to numerical zero; rho_HH rho_VV underflows with it.
        return Ok(SuperadditivityLowerBound { value: 0.0, in_region });
    };
    let (rho_hh, rho_vv) = (0.5 * (1.0 + z), 0.5 * (1.0 - z));
    Ok(SuperadditivityLowerBound {
        value: (1.0 - p_h - p_v) * rho_hh * rho_vv,
        in_region,
    })
}

/// Half the best coherent information of Gamma_pdl^(x)2 found by multi-start
/// optimization over four-dimensional density inputs.
///
/// The witness rho_2, the product rho_1^(x)2 and their midpoint are always
/// included as warm starts, so the result is guaranteed to be at least
/// (S(Gamma^(x)2[rho_2]) - S(Gamma~^(x)2[rho_2])) / 2 up to roundoff.
pub fn two_letter_q1(p_h: f64, p_v: f64, opts: &OptimOptions) -> Result<f64> {
    check_unit_interval("p_h", p_h)?;
    check_unit_interval("p_v", p_v)?;
    let gamma = generalized_erasure(&pdl_operation(PdlParams::new(p_h, p_v)?))?;
    let direct2 = tensor(gamma.channel(), gamma.channel());
    let comp = gamma.complementary()?;
    let comp2 = tensor(&comp, &comp);

    let mut exact_candidates: Vec<DensityOperator> = vec![DensityOperator::maximally_mixed(4)];
    if let Some(z) = solve_q1_pdl(p_h, p_v)?.z_star {
        let rho1 = rho1_from_z(z);
        let rho11 = rho1.tensor(&rho1);
        let rho2 = rho2_from_z(z);
        let mid = DensityOperator::from_hermitian_unchecked(
            HermitianOperator::new(
                &rho2.matrix().scale_re(0.5) + &rho11.matrix().scale_re(0.5),
            )
            .expect("square"),
        );
        exact_candidates.extend([rho2, rho11, mid]);
    }

    let objective = |theta: &[f64]| -> f64 {
        let rho = density_parametrize(theta).expect("factor parametrization");
        coherent_information_with(&direct2, &comp2, &rho).unwrap_or(f64::NEG_INFINITY)
    };

    // Warm starts pass through the parametrization; the exact candidate values
    // are folded into the final max separately so boundary states (rho_2 is
    // rank-deficient) are not lost to the Cholesky clipping.
    let mut warm = Vec::new();
    for cand in &exact_candidates {
        let interior = DensityOperator::from_hermitian_unchecked(
            HermitianOperator::new(
                &cand.matrix().scale_re(1.0 - 1e-6)
                    + &DensityOperator::maximally_mixed(4).matrix().scale_re(1e-6),
            )
            .expect("square"),
        );
        warm.push(density_unparametrize(&interior)?);
    }

    let (_, best_opt) = multistart_max(
        objective,
        gaussian_start(16),
        &warm,
        opts.restarts,
        opts.seed,
        &opts.nelder_mead(),
    );

    let mut best = best_opt;
    for cand in &exact_candidates {
        best = best.max(coherent_information_with(&direct2, &comp2, cand)?);
    }
    Ok(best.max(0.0) / 2.0)
}

/// Single- vs two-letter comparison at one parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct SuperadditivityReport {
    pub p_h: f64,
    pub p_v: f64,
    pub q1_single: f64,
    pub q1_two_letter_half: f64,
    /// Proven lower bound on the gap (zero outside the proven region).
    pub lower_bound: f64,
    pub in_region: bool,
    /// q1_two_letter_half - q1_single.
    pub gap: f64,
}

pub fn superadditivity_report(
    p_h: f64,
    p_v: f64,
    opts: &OptimOptions,
) -> Result<SuperadditivityReport> {
    let single = solve_q1_pdl(p_h, p_v)?;
    let two = two_letter_q1(p_h, p_v, opts)?;
    let bound = superadditivity_lower_bound(p_h, p_v)?;
    Ok(SuperadditivityReport {
        p_h,
        p_v,
        q1_single: single.q1,
        q1_two_letter_half: two,
        lower_bound: bound.value,
        in_region: bound.in_region,
        gap: two - single.q1,
    })
}

/// What a grid scan evaluates per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanKind {
    /// Exact Q1(Gamma_pdl).
    Q1Heatmap,
    /// The proven superadditivity lower bound.
    SuperaddLowerBound,
    /// Optimized two-letter gap q1_two_letter_half - q1_single.
    SuperaddGap,
}

impl ScanKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "q1-heatmap" => Ok(ScanKind::Q1Heatmap),
            "superadd-lower-bound" => Ok(ScanKind::SuperaddLowerBound),
            "superadd-gap" => Ok(ScanKind::SuperaddGap),
            other => Err(Error::InvalidParameters(format!("unknown scan kind '{other}'"))),
        }
    }

    /// Default scan rectangle: the full unit square for Q1, the proven
    /// superadditivity quadrant for the superadd kinds.
    pub fn default_region(&self) -> Region {
        match self {
            ScanKind::Q1Heatmap => Region {
                p_h_min: 0.0,
                p_h_max: 1.0,
                p_v_min: 0.0,
                p_v_max: 1.0,
            },
            _ => Region {
                p_h_min: 0.5,
                p_h_max: 1.0,
                p_v_min: 0.0,
                p_v_max: 0.5,
            },
        }
    }
}

/// Rectangle in the (p_H, p_V) parameter plane.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Region {
    pub p_h_min: f64,
    pub p_h_max: f64,
    pub p_v_min: f64,
    pub p_v_max: f64,
}

/// Row-major grid of (p_H, p_V, value) samples.
#[derive(Debug, Clone)]
pub struct GridScanResult {
    pub kind: ScanKind,
    pub resolution: usize,
    pub region: Region,
    pub rows: Vec<(f64, f64, f64)>,
}

impl GridScanResult {
    /// CSV with header `p_h,p_v,value`; 12 significant digits per value.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> Result<()> {
        writeln!(w, "p_h,p_v,value")?;
        for &(p_h, p_v, value) in &self.rows {
            writeln!(w, "{:.11e},{:.11e},{:.11e}", p_h, p_v, value)?;
        }
        Ok(())
    }

    pub fn argmax(&self) -> (f64, f64, f64) {
        self.rows
            .iter()
            .copied()
            .max_by(|a, b| a.2.partial_cmp(&b.2).expect("finite values"))
            .expect("nonempty grid")
    }
}

/// Uniform grid scan; cells are evaluated independently (in parallel under
/// the `parallel` feature) and emitted in row-major order.
pub fn scan_grid(
    kind: ScanKind,
    resolution: usize,
    region: Option<Region>,
    opts: &OptimOptions,
) -> Result<GridScanResult> {
    if resolution < 2 {
        return Err(Error::InvalidParameters(format!(
            "resolution {resolution} below minimum 2"
        )));
    }
    let region = region.unwrap_or_else(|| kind.default_region());
    let n = resolution;
    let lerp = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (n - 1) as f64;

    let cells: Vec<std::result::Result<(f64, f64, f64), Error>> =
        exec::map_indexed(n * n, |idx| {
            let (i, j) = (idx / n, idx % n);
            let p_h = lerp(region.p_h_min, region.p_h_max, i);
            let p_v = lerp(region.p_v_min, region.p_v_max, j);
            let value = match kind {
                ScanKind::Q1Heatmap => solve_q1_pdl(p_h, p_v)?.q1,
                ScanKind::SuperaddLowerBound => superadditivity_lower_bound(p_h, p_v)?.value,
                ScanKind::SuperaddGap => {
                    let cell_opts = OptimOptions {
                        seed: opts
                            .seed
                            .wrapping_add((idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                        ..opts.clone()
                    };
                    superadditivity_report(p_h, p_v, &cell_opts)?.gap
                }
            };
            Ok((p_h, p_v, value))
        });

    let mut rows = Vec::with_capacity(n * n);
    for cell in cells {
        rows.push(cell?);
    }
    Ok(GridScanResult { kind, resolution, region, rows })
}
