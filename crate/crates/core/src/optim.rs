//! Derivative-free local optimization: Nelder-Mead simplex search, a 1-D
//! golden-section maximizer, and a seeded multi-start driver.
//!
//! Restarts are independent and reduce by max over the complete restart set,
//! so the result does not depend on scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exec;

/// Nelder-Mead settings. Coefficients are the standard (1, 2, 0.5, 0.5).
#[derive(Debug, Clone)]
pub struct NelderMead {
    pub max_evals: usize,
    pub f_tol: f64,
    pub x_tol: f64,
    pub init_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_evals: 4000, f_tol: 1e-12, x_tol: 1e-9, init_step: 0.25 }
    }
}

impl NelderMead {
    /// Minimizes `f` from `x0`; returns the best point and value seen.
    pub fn minimize(&self, f: impl Fn(&[f64]) -> f64, x0: &[f64]) -> (Vec<f64>, f64) {
        let n = x0.len();
        assert!(n > 0);
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(x0.to_vec());
        for i in 0..n {
            let mut v = x0.to_vec();
            v[i] += self.init_step * (1.0 + v[i].abs());
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
        let mut evals = n + 1;

        while evals < self.max_evals {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite"));
            let best = order[0];
            let worst = order[n];
            let second_worst = order[n - 1];

            let f_spread = values[worst] - values[best];
            let x_spread = simplex
                .iter()
                .map(|x| {
                    x.iter()
                        .zip(&simplex[best])
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max)
                })
                .fold(0.0f64, f64::max);
            if f_spread < self.f_tol && x_spread < self.x_tol {
                break;
            }

            // Centroid of all points but the worst.
            let mut centroid = vec![0.0; n];
            for (idx, x) in simplex.iter().enumerate() {
                if idx == worst {
                    continue;
                }
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / n as f64;
                }
            }

            let reflect: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + (c - w))
                .collect();
            let f_reflect = f(&reflect);
            evals += 1;

            if f_reflect < values[best] {
                let expand: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[worst])
                    .map(|(c, w)| c + 2.0 * (c - w))
                    .collect();
                let f_expand = f(&expand);
                evals += 1;
                if f_expand < f_reflect {
                    simplex[worst] = expand;
                    values[worst] = f_expand;
                } else {
                    simplex[worst] = reflect;
                    values[worst] = f_reflect;
                }
            } else if f_reflect < values[second_worst] {
                simplex[worst] = reflect;
                values[worst] = f_reflect;
            } else {
                let contract: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[worst])
                    .map(|(c, w)| c + 0.5 * (w - c))
                    .collect();
                let f_contract = f(&contract);
                evals += 1;
                if f_contract < values[worst] {
                    simplex[worst] = contract;
                    values[worst] = f_contract;
                } else {
                    // Shrink towards the best vertex.
                    let best_point = simplex[best].clone();
                    for idx in 0..=n {
                        if idx == best {
                            continue;
                        }
                        for (xi, bi) in simplex[idx].iter_mut().zip(&best_point) {
                            *xi = bi + 0.5 * (*xi - bi);
                        }
                        values[idx] = f(&simplex[idx]);
                        evals += 1;
                    }
                }
            }
        }

        let best = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
            .map(|(i, _)| i)
            .expect("nonempty simplex");
        (simplex[best].clone(), values[best])
    }

    /// Maximizes `f` from `x0`.
    pub fn maximize(&self, f: impl Fn(&[f64]) -> f64, x0: &[f64]) -> (Vec<f64>, f64) {
        let (x, neg) = self.minimize(|x| -f(x), x0);
        (x, -neg)
    }
}

/// Golden-section maximization of a unimodal function on [lo, hi].
pub fn golden_section_max(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    iters: usize,
) -> (f64, f64) {
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Multi-start maximization: `warm_starts` are always evaluated, then
/// `restarts` random starting points are drawn with per-index seeds derived
/// from `seed`. Restarts run in parallel; the reduction is an order-free max.
pub fn multistart_max<F, S>(
    f: F,
    sample_start: S,
    warm_starts: &[Vec<f64>],
    restarts: usize,
    seed: u64,
    nm: &NelderMead,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
    S: Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync + Send,
{
    let total = warm_starts.len() + restarts;
    assert!(total > 0, "need at least one start");
    let results = exec::map_indexed(total, |idx| {
        let x0 = if idx < warm_starts.len() {
            warm_starts[idx].clone()
        } else {
            let k = (idx - warm_starts.len()) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            sample_start(&mut rng)
        };
        nm.maximize(&f, &x0)
    });
    results
        .into_iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite objective"))
        .expect("at least one restart")
}

/// Standard-normal start vector of the given dimension.
pub fn gaussian_start(dim: usize) -> impl Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync + Send {
    move |rng| {
        (0..dim)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect()
    }
}
