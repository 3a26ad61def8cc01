//! Smallest mass of a product distribution dominating a nonnegative matrix.
//!
//! For a matrix `M` over `A × B`, find `u` on the `A`-simplex minimizing
//!
//! ```text
//! g(u) = Σ_b max_a M[a][b] / u[a]
//! ```
//!
//! `g(u)` is the least total mass of a `B`-vector `v` with `u[a] v[b] ≥ M[a][b]`
//! everywhere, so a dominating product distribution exists iff `min g ≤ 1`.
//! `g` is convex. Writing each max as a maximum over column weights `λ[·][b]`
//! and minimizing over `u` first gives the dual
//!
//! ```text
//! min_u g(u) = max_λ (Σ_a √s_a)²,   s_a = Σ_b λ[a][b] M[a][b],
//! ```
//!
//! whose gradient step selects, column by column, the row attaining the
//! primal max at `u_a ∝ √s_a`. Frank–Wolfe on the dual therefore produces a
//! primal point and a certified lower bound at every iteration; the gap
//! between them is exactly the Frank–Wolfe duality gap.

use crate::error::{Error, Result};

/// Lower clamp on simplex coordinates for rows carrying mass.
pub const MIN_WEIGHT: f64 = 1e-12;
const GAP_TOLERANCE: f64 = 1e-10;
const MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ProductFit {
    /// `g` at the returned point: an upper bound on the minimum.
    pub value: f64,
    /// Certified lower bound on the minimum.
    pub lower: f64,
    /// Minimizing distribution over `A` (zero on rows without mass).
    pub weights: Vec<f64>,
    pub iterations: usize,
}

/// Evaluates `g(u)`; rows with mass and `u[a] = 0` give infinity.
pub fn dominating_mass(m: &[f64], n_a: usize, n_b: usize, u: &[f64]) -> f64 {
    (0..n_b)
        .map(|b| {
            (0..n_a)
                .map(|a| {
                    let x = m[a * n_b + b];
                    if x == 0.0 {
                        0.0
                    } else if u[a] <= 0.0 {
                        f64::INFINITY
                    } else {
                        x / u[a]
                    }
                })
                .fold(0.0, f64::max)
        })
        .sum()
}

/// Minimizes `g` over the simplex. `m` is row-major `n_a × n_b`, nonnegative.
pub fn min_dominating_mass(m: &[f64], n_a: usize, n_b: usize) -> Result<ProductFit> {
    debug_assert_eq!(m.len(), n_a * n_b);
    let active: Vec<usize> = (0..n_a).filter(|&a| m[a * n_b..(a + 1) * n_b].iter().any(|&x| x > 0.0)).collect();
    let cols: Vec<usize> = (0..n_b).filter(|&b| active.iter().any(|&a| m[a * n_b + b] > 0.0)).collect();
    // Reduced matrix on rows and columns that carry mass.
    let (k, nb) = (active.len(), cols.len());
    let sub: Vec<f64> = active.iter().flat_map(|&a| cols.iter().map(move |&b| m[a * n_b + b])).collect();

    let expand = |w: &[f64]| {
        let mut full = vec![0.0; n_a];
        for (i, &a) in active.iter().enumerate() {
            full[a] = w[i];
        }
        full
    };

    match k {
        0 => Ok(ProductFit { value: 0.0, lower: 0.0, weights: vec![1.0 / n_a.max(1) as f64; n_a], iterations: 0 }),
        1 => {
            let value: f64 = sub.iter().sum();
            Ok(ProductFit { value, lower: value, weights: expand(&[1.0]), iterations: 0 })
        }
        2 => {
            let (t, value, iterations) = golden_section(&sub, nb);
            Ok(ProductFit { value, lower: value, weights: expand(&[t, 1.0 - t]), iterations })
        }
        _ => {
            let fit = frank_wolfe(&sub, k, nb)?;
            Ok(ProductFit { weights: expand(&fit.weights), ..fit })
        }
    }
}

/// Two rows: minimize the convex function t ↦ g(t, 1 − t) on (0, 1).
fn golden_section(m: &[f64], nb: usize) -> (f64, f64, usize) {
    let g = |t: f64| {
        let t = t.clamp(MIN_WEIGHT, 1.0 - MIN_WEIGHT);
        dominating_mass(m, 2, nb, &[t, 1.0 - t])
    };
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (MIN_WEIGHT, 1.0 - MIN_WEIGHT);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    let mut iterations = 0;
    while hi - lo > 1e-15 && iterations < 200 {
        iterations += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = g(x2);
        }
    }
    let (t, v) = [(lo, g(lo)), (hi, g(hi)), (x1, f1), (x2, f2)].into_iter().fold((0.5, f64::INFINITY), |best, cand| {
        if cand.1 < best.1 {
            cand
        } else {
            best
        }
    });
    (t.clamp(MIN_WEIGHT, 1.0 - MIN_WEIGHT), v, iterations)
}

/// Three or more rows: Frank–Wolfe with exact line search on the dual.
fn frank_wolfe(m: &[f64], k: usize, nb: usize) -> Result<ProductFit> {
    // λ[b][a], initially uniform over the positive entries of each column.
    let mut lambda = vec![0.0; nb * k];
    for b in 0..nb {
        let support: Vec<usize> = (0..k).filter(|&a| m[a * nb + b] > 0.0).collect();
        for &a in &support {
            lambda[b * k + a] = 1.0 / support.len() as f64;
        }
    }
    let mut s: Vec<f64> = (0..k).map(|a| (0..nb).map(|b| lambda[b * k + a] * m[a * nb + b]).sum()).collect();

    let mut best_value = f64::INFINITY;
    let mut best_weights = vec![1.0 / k as f64; k];
    let mut best_lower = 0.0f64;
    let mut target = vec![0.0; k];
    let mut choice = vec![0usize; nb];
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let root: f64 = s.iter().map(|x| x.sqrt()).sum();
        let u: Vec<f64> = s.iter().map(|x| (x.sqrt() / root).max(MIN_WEIGHT)).collect();
        best_lower = best_lower.max(root * root);

        target.iter_mut().for_each(|t| *t = 0.0);
        let mut value = 0.0;
        for b in 0..nb {
            let (arg, best) = (0..k).map(|a| (a, m[a * nb + b] / u[a])).fold((0, f64::NEG_INFINITY), |acc, c| {
                if c.1 > acc.1 {
                    c
                } else {
                    acc
                }
            });
            choice[b] = arg;
            target[arg] += m[arg * nb + b];
            value += best;
        }
        if value < best_value {
            best_value = value;
            best_weights = u.clone();
        }
        if best_value - best_lower <= GAP_TOLERANCE * best_value.max(1.0) {
            break;
        }

        let gamma = line_search(&s, &target);
        if gamma <= 0.0 {
            break;
        }
        for b in 0..nb {
            for a in 0..k {
                lambda[b * k + a] *= 1.0 - gamma;
            }
            lambda[b * k + choice[b]] += gamma;
        }
        for a in 0..k {
            s[a] = (1.0 - gamma) * s[a] + gamma * target[a];
        }
        pairwise_sweep(m, k, nb, &mut lambda, &mut s);
    }

    let total: f64 = best_weights.iter().sum();
    let weights: Vec<f64> = best_weights.iter().map(|w| w / total).collect();
    let value = dominating_mass(m, k, nb, &weights).min(best_value.max(best_lower));
    let gap = value - best_lower;
    if gap > 1e-7 && best_lower <= 1.0 + 1e-7 && value > 1.0 + 1e-7 {
        return Err(Error::SolverFailure(format!(
            "bracket [{best_lower}, {value}] straddles the feasibility threshold after {iterations} iterations"
        )));
    }
    Ok(ProductFit { value, lower: best_lower.min(value), weights, iterations })
}

/// In each column, moves weight from the worst row in use to the best row,
/// by the exact maximizer of Σ_a √s_a along that exchange. Plain Frank–Wolfe
/// steps stall near the optimum; these exchanges do not.
fn pairwise_sweep(m: &[f64], k: usize, nb: usize, lambda: &mut [f64], s: &mut [f64]) {
    for b in 0..nb {
        let score = |a: usize, s: &[f64]| {
            let x = m[a * nb + b];
            if x == 0.0 {
                0.0
            } else if s[a] <= 0.0 {
                f64::INFINITY
            } else {
                x / s[a].sqrt()
            }
        };
        let toward = (0..k).fold(0, |best, a| if score(a, s) > score(best, s) { a } else { best });
        let away =
            (0..k).filter(|&a| lambda[b * k + a] > 0.0 && a != toward).fold(
                None,
                |best: Option<usize>, a| match best {
                    Some(o) if score(o, s) <= score(a, s) => Some(o),
                    _ => Some(a),
                },
            );
        let Some(away) = away else { continue };
        let (m1, m2) = (m[away * nb + b], m[toward * nb + b]);
        let available = lambda[b * k + away];
        let delta = if m1 == 0.0 {
            available
        } else {
            // Stationary point of √(s1 − δ m1) + √(s2 + δ m2).
            ((m2 * m2 * s[away] - m1 * m1 * s[toward]) / (m1 * m2 * (m1 + m2))).clamp(0.0, available)
        };
        if delta <= 0.0 {
            continue;
        }
        lambda[b * k + away] -= delta;
        lambda[b * k + toward] += delta;
        s[away] = (s[away] - delta * m1).max(0.0);
        s[toward] += delta * m2;
    }
}

/// Maximizes the concave φ(γ) = Σ_a √((1 − γ) s_a + γ t_a) over [0, 1].
fn line_search(s: &[f64], t: &[f64]) -> f64 {
    let slope = |g: f64| -> f64 {
        s.iter()
            .zip(t)
            .map(|(&sa, &ta)| {
                let x = (1.0 - g) * sa + g * ta;
                if x <= 0.0 {
                    if ta < sa {
                        f64::NEG_INFINITY
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (ta - sa) / (2.0 * x.sqrt())
                }
            })
            .sum()
    };
    if slope(0.0) <= 0.0 {
        return 0.0;
    }
    if slope(1.0) >= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
