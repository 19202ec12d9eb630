//! Digital precoding by weighted-MMSE alternating minimization.
//!
//! For a fixed analog front end and fixed reflection phases, sum-rate
//! maximization over the per-subcarrier digital precoders is equivalent to
//! minimizing a weighted mean-square error: alternately updating scalar
//! receive filters, MSE weights, and precoders each exactly minimizes one
//! block, so the objective never increases and the implied sum rate never
//! decreases.
//!
//! Inputs are the *projected* channel rows (channel row times analog matrix,
//! length = RF chains) and the per-subcarrier Gram matrices `F^H F` of the
//! analog front end, which carry the transmit-power coupling.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::ChannelRows;
use crate::error::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;

/// Per-subcarrier per-user digital precoding vectors over the RF chains.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalBeamformer {
    /// `vectors[m][k]`: precoder for user k on subcarrier m.
    pub vectors: Vec<Vec<DVector<Complex64>>>,
}

impl DigitalBeamformer {
    pub fn zeros(subcarriers: usize, users: usize, rf_chains: usize) -> Self {
        DigitalBeamformer {
            vectors: vec![vec![DVector::zeros(rf_chains); users]; subcarriers],
        }
    }

    /// Total transmit power Σ_{m,k} d^H (F_m^H F_m) d.
    pub fn transmit_power(&self, grams: &[DMatrix<Complex64>]) -> f64 {
        self.vectors
            .iter()
            .zip(grams)
            .map(|(per_k, g)| {
                per_k
                    .iter()
                    .map(|d| (d.adjoint() * g * d)[(0, 0)].re)
                    .sum::<f64>()
            })
            .sum()
    }

    /// Scales every vector by a common factor.
    pub fn scale(&mut self, factor: f64) {
        for per_k in &mut self.vectors {
            for d in per_k {
                *d *= Complex64::new(factor, 0.0);
            }
        }
    }
}

/// Scalar receive filters, MSE values, weights, and the power multiplier of
/// the current alternating-minimization state.
#[derive(Debug, Clone)]
pub struct WmmseState {
    pub chi: Vec<Vec<Complex64>>,
    pub xi: Vec<Vec<f64>>,
    pub omega: Vec<Vec<f64>>,
    pub mu: f64,
}

/// Matched-filter start: d_{m,k} proportional to the projected channel's
/// conjugate, globally scaled to spend the power budget exactly.
pub fn matched_filter_init(
    rows: &ChannelRows,
    grams: &[DMatrix<Complex64>],
    p_max: f64,
) -> DigitalBeamformer {
    let mut d = DigitalBeamformer {
        vectors: rows
            .iter()
            .map(|per_k| per_k.iter().map(|h| h.adjoint()).collect())
            .collect(),
    };
    let power = d.transmit_power(grams);
    if power > 0.0 {
        d.scale((p_max / power).sqrt());
    }
    d
}

/// MMSE receive filters χ_{m,k} = ĥ_{m,k}d_{m,k} / (Σ_j |ĥ_{m,k}d_{m,j}|² + σ²).
pub fn update_combiners(
    rows: &ChannelRows,
    d: &DigitalBeamformer,
    sigma2: f64,
) -> Vec<Vec<Complex64>> {
    rows.iter()
        .zip(&d.vectors)
        .map(|(per_k, d_m)| {
            (0..per_k.len())
                .map(|k| {
                    let h = &per_k[k];
                    let own = (h * &d_m[k])[(0, 0)];
                    let denom: f64 =
                        d_m.iter().map(|dj| (h * dj)[(0, 0)].norm_sqr()).sum::<f64>() + sigma2;
                    own / denom
                })
                .collect()
        })
        .collect()
}

/// Mean-square error of user k on subcarrier m for an arbitrary filter χ
/// (applied conjugated): 1 − 2Re(χ* ĥd_k) + |χ|²(Σ_j |ĥd_j|² + σ²).
fn mse(
    rows: &ChannelRows,
    d: &DigitalBeamformer,
    chi: &[Vec<Complex64>],
    sigma2: f64,
    m: usize,
    k: usize,
) -> f64 {
    let h = &rows[m][k];
    let c = chi[m][k];
    let own = (h * &d.vectors[m][k])[(0, 0)];
    let total: f64 = d.vectors[m]
        .iter()
        .map(|dj| (h * dj)[(0, 0)].norm_sqr())
        .sum::<f64>()
        + sigma2;
    1.0 - 2.0 * (c.conj() * own).re + c.norm_sqr() * total
}

/// MSE values for the current filters and their exact minimizing weights
/// ω = 1/ξ. With filters fresh from [`update_combiners`] the MSE reduces to
/// ξ = 1 − |ĥd_k|²/(Σ_j|ĥd_j|² + σ²) = 1/(1 + SINR).
pub fn update_weights(
    rows: &ChannelRows,
    d: &DigitalBeamformer,
    chi: &[Vec<Complex64>],
    sigma2: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let xi: Vec<Vec<f64>> = rows
        .iter()
        .enumerate()
        .map(|(m, per_k)| (0..per_k.len()).map(|k| mse(rows, d, chi, sigma2, m, k)).collect())
        .collect();
    let omega = xi.iter().map(|per_k| per_k.iter().map(|&x| 1.0 / x).collect()).collect();
    (xi, omega)
}

/// The weighted-MSE surrogate objective Σ_{m,k} (ω ξ(χ,d)/ln2 − log₂ ω).
/// Every alternating update lowers it; at aligned (χ, ω) it equals
/// Σ 1/ln2 − R_sum.
pub fn wmmse_objective(
    rows: &ChannelRows,
    d: &DigitalBeamformer,
    chi: &[Vec<Complex64>],
    omega: &[Vec<f64>],
    sigma2: f64,
) -> f64 {
    let mut acc = 0.0;
    for m in 0..rows.len() {
        for k in 0..rows[m].len() {
            acc += omega[m][k] * mse(rows, d, chi, sigma2, m, k) / LN_2
                - omega[m][k].log2();
        }
    }
    acc
}

/// Exact minimizer of the weighted MSE over all precoders subject to the
/// total-power constraint: d_{m,k} = (A_m + μ F_m^H F_m)^{-1} ω χ ĥ^H with
/// A_m = Σ_j ω|χ|² ĥ^H ĥ and a single global μ ≥ 0 chosen by bisection so
/// the power constraint is tight (or μ = 0 when the unconstrained minimizer
/// is feasible). Returns the precoders and μ.
///
/// The linear term carries χ unconjugated: the estimate is χ*·(received
/// signal), so the error's cross term is −2Re(χ*ĥd) and the stationarity
/// condition reads (A + μG)d = ωχĥ^H. Conjugating χ here misaligns the
/// multi-user phases and breaks the otherwise guaranteed objective descent.
pub fn update_precoders(
    rows: &ChannelRows,
    chi: &[Vec<Complex64>],
    omega: &[Vec<f64>],
    grams: &[DMatrix<Complex64>],
    p_max: f64,
) -> Result<(DigitalBeamformer, f64)> {
    let m_total = rows.len();
    let n_rf = grams.first().map_or(0, DMatrix::nrows);

    // Per-subcarrier quadratic term and per-user linear terms.
    let mut a_mats = Vec::with_capacity(m_total);
    let mut b_vecs: Vec<Vec<DVector<Complex64>>> = Vec::with_capacity(m_total);
    for m in 0..m_total {
        let mut a = DMatrix::<Complex64>::zeros(n_rf, n_rf);
        let mut bs = Vec::with_capacity(rows[m].len());
        for k in 0..rows[m].len() {
            let h = &rows[m][k];
            let w = omega[m][k] * chi[m][k].norm_sqr();
            a += h.adjoint() * h * Complex64::new(w, 0.0);
            bs.push(h.adjoint() * (chi[m][k] * Complex64::new(omega[m][k], 0.0)));
        }
        a_mats.push(a);
        b_vecs.push(bs);
    }

    let chols: Option<Vec<_>> =
        grams.iter().map(|g| nalgebra::Cholesky::new(g.clone())).collect();

    if let Some(chols) = chols {
        // Whitened eigen route: with G = LL^H and à = L⁻¹AL⁻ᴴ = VΛVᴴ the
        // whitened solution is y(μ) = V diag(1/(λ+μ)) Vᴴ L⁻¹ b, whose squared
        // norm is the transmit power. Power as a function of μ is then a sum
        // of |c_i|²/(λ_i+μ)² terms, evaluable in closed form per candidate μ.
        let mut spectra: Vec<(f64, f64)> = Vec::new();
        let mut factors = Vec::with_capacity(m_total);
        for m in 0..m_total {
            let l = chols[m].l();
            let a_t = solve_lower(&l, &a_mats[m]);
            let a_t = solve_lower(&l, &a_t.adjoint()).adjoint().into_owned();
            // Symmetrize against roundoff before the Hermitian eigensolver.
            let a_t = (&a_t + a_t.adjoint()) * Complex64::new(0.5, 0.0);
            let eig = nalgebra::SymmetricEigen::new(a_t);
            let mut cs = Vec::with_capacity(rows[m].len());
            for b in &b_vecs[m] {
                let bt = solve_lower_vec(&l, b);
                let c = eig.eigenvectors.adjoint() * bt;
                for (i, ci) in c.iter().enumerate() {
                    spectra.push((eig.eigenvalues[i].max(0.0), ci.norm_sqr()));
                }
                cs.push(c);
            }
            factors.push((chols[m].l().adjoint().into_owned(), eig, cs));
        }

        let power_at = |mu: f64| -> f64 {
            spectra
                .iter()
                .map(|&(lam, c2)| if c2 == 0.0 { 0.0 } else { c2 / ((lam + mu) * (lam + mu)) })
                .sum()
        };
        let mu = if power_at(0.0) <= p_max {
            0.0
        } else {
            let total_c2: f64 = spectra.iter().map(|&(_, c2)| c2).sum();
            let mut hi = (total_c2 / p_max).sqrt();
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if power_at(mid) > p_max {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-10 * hi {
                    break;
                }
            }
            hi
        };

        let mut d = DigitalBeamformer::zeros(m_total, 0, n_rf);
        for m in 0..m_total {
            let (l_h, eig, cs) = &factors[m];
            let per_k = cs
                .iter()
                .map(|c| {
                    let scaled = DVector::from_fn(c.len(), |i, _| {
                        c[i] / Complex64::new(eig.eigenvalues[i].max(0.0) + mu, 0.0)
                    });
                    let y = &eig.eigenvectors * scaled;
                    solve_upper_vec(l_h, &y)
                })
                .collect();
            d.vectors[m] = per_k;
        }
        return Ok((d, mu));
    }

    // Degenerate Gram matrices (linearly dependent analog columns): solve
    // each candidate μ numerically through the pseudo-inverse; μ = 0 then
    // yields the minimum-norm precoders.
    let solve_at = |mu: f64| -> Result<DigitalBeamformer> {
        let mut d = DigitalBeamformer::zeros(m_total, 0, n_rf);
        for m in 0..m_total {
            let lhs = &a_mats[m] + &grams[m] * Complex64::new(mu, 0.0);
            let svd = nalgebra::SVD::new(lhs, true, true);
            let eps = 1e-13 * svd.singular_values.max().max(1e-300);
            let per_k = b_vecs[m]
                .iter()
                .map(|b| {
                    svd.solve(b, eps)
                        .map_err(|e| Error::Numerical(format!("precoder solve failed: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            d.vectors[m] = per_k;
        }
        Ok(d)
    };
    let d0 = solve_at(0.0)?;
    if d0.transmit_power(grams) <= p_max {
        return Ok((d0, 0.0));
    }
    let mut hi = 1.0;
    let mut grew = 0;
    while solve_at(hi)?.transmit_power(grams) > p_max {
        hi *= 2.0;
        grew += 1;
        if grew > 300 {
            return Err(Error::Numerical(
                "power constraint unreachable by multiplier search".into(),
            ));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if solve_at(mid)?.transmit_power(grams) > p_max {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi {
            break;
        }
    }
    Ok((solve_at(hi)?, hi))
}

fn solve_lower(l: &DMatrix<Complex64>, rhs: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    l.solve_lower_triangular(rhs).expect("Cholesky factor is invertible")
}

fn solve_lower_vec(l: &DMatrix<Complex64>, rhs: &DVector<Complex64>) -> DVector<Complex64> {
    l.solve_lower_triangular(rhs).expect("Cholesky factor is invertible")
}

fn solve_upper_vec(l_h: &DMatrix<Complex64>, rhs: &DVector<Complex64>) -> DVector<Complex64> {
    l_h.solve_upper_triangular(rhs).expect("Cholesky factor is invertible")
}

/// Alternates filter, weight, and precoder updates from `d_init` (scaled
/// into the power ball if necessary). Returns the final precoders, the final
/// state, and the sum-rate trace `[initial, after iter 1, …]`; stops after
/// `max_iter` iterations or when the relative rate change drops below `tol`.
pub fn wmmse_solve(
    rows: &ChannelRows,
    grams: &[DMatrix<Complex64>],
    sigma2: f64,
    p_max: f64,
    d_init: DigitalBeamformer,
    max_iter: usize,
    tol: f64,
) -> Result<(DigitalBeamformer, WmmseState, Vec<f64>)> {
    let mut d = d_init;
    let power = d.transmit_power(grams);
    if power > p_max {
        d.scale((p_max / power).sqrt());
    }
    let mut state = WmmseState {
        chi: update_combiners(rows, &d, sigma2),
        xi: Vec::new(),
        omega: Vec::new(),
        mu: 0.0,
    };
    let (xi, omega) = update_weights(rows, &d, &state.chi, sigma2);
    state.xi = xi;
    state.omega = omega;

    let mut trace = vec![crate::solver::evaluate_rate(rows, &d, sigma2)];
    for _ in 0..max_iter {
        state.chi = update_combiners(rows, &d, sigma2);
        let (xi, omega) = update_weights(rows, &d, &state.chi, sigma2);
        state.xi = xi;
        state.omega = omega;
        let (d_new, mu) = update_precoders(rows, &state.chi, &state.omega, grams, p_max)?;
        d = d_new;
        state.mu = mu;
        let rate = crate::solver::evaluate_rate(rows, &d, sigma2);
        let prev = *trace.last().unwrap();
        trace.push(rate);
        if (rate - prev).abs() <= tol * prev.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok((d, state, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::standard_complex;
    use crate::solver::{evaluate_rate, sinr};
    use approx::assert_relative_eq;
    use nalgebra::RowDVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_rows(
        rng: &mut ChaCha8Rng,
        m: usize,
        k: usize,
        n_rf: usize,
    ) -> ChannelRows {
        (0..m)
            .map(|_| {
                (0..k)
                    .map(|_| RowDVector::from_fn(n_rf, |_, _| standard_complex(rng)))
                    .collect()
            })
            .collect()
    }

    fn random_grams(rng: &mut ChaCha8Rng, m: usize, n_rf: usize) -> Vec<DMatrix<Complex64>> {
        (0..m)
            .map(|_| {
                // B^H B + I: Hermitian positive definite by construction.
                let b = DMatrix::from_fn(n_rf + 1, n_rf, |_, _| standard_complex(rng));
                b.adjoint() * b + DMatrix::identity(n_rf, n_rf)
            })
            .collect()
    }

    fn random_precoder(
        rng: &mut ChaCha8Rng,
        grams: &[DMatrix<Complex64>],
        k: usize,
        p_max: f64,
    ) -> DigitalBeamformer {
        let n_rf = grams[0].nrows();
        let mut d = DigitalBeamformer {
            vectors: (0..grams.len())
                .map(|_| {
                    (0..k)
                        .map(|_| DVector::from_fn(n_rf, |_, _| standard_complex(rng)))
                        .collect()
                })
                .collect(),
        };
        let p = d.transmit_power(grams);
        d.scale((p_max / p).sqrt());
        d
    }

    #[test]
    fn mse_weight_identity_matches_sinr() {
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows = random_rows(&mut rng, 2, 2, 3);
            let grams = random_grams(&mut rng, 2, 3);
            let d = random_precoder(&mut rng, &grams, 2, 1.0);
            let sigma2 = 0.05;
            let chi = update_combiners(&rows, &d, sigma2);
            let (xi, omega) = update_weights(&rows, &d, &chi, sigma2);
            let gammas = sinr(&rows, &d, sigma2);
            for m in 0..2 {
                for k in 0..2 {
                    assert_relative_eq!(
                        xi[m][k],
                        1.0 / (1.0 + gammas[m][k]),
                        max_relative = 1e-12
                    );
                    assert_relative_eq!(omega[m][k], 1.0 + gammas[m][k], max_relative = 1e-12);
                    assert!(xi[m][k] > 0.0 && xi[m][k] <= 1.0 + 1e-15);
                    // Rate identity: log2(1+γ) = −log2(ξ).
                    assert_relative_eq!(
                        (1.0 + gammas[m][k]).log2(),
                        -xi[m][k].log2(),
                        max_relative = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn combiner_formula_matches_hand_arithmetic() {
        let h1 = RowDVector::from_vec(vec![Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.2)]);
        let h2 = RowDVector::from_vec(vec![Complex64::new(0.4, -1.0), Complex64::new(0.8, 0.1)]);
        let rows = vec![vec![h1, h2]];
        let d1 = DVector::from_vec(vec![Complex64::new(0.6, 0.0), Complex64::new(0.1, -0.4)]);
        let d2 = DVector::from_vec(vec![Complex64::new(-0.2, 0.3), Complex64::new(0.9, 0.2)]);
        let d = DigitalBeamformer { vectors: vec![vec![d1.clone(), d2.clone()]] };
        let sigma2 = 0.3;
        let chi = update_combiners(&rows, &d, sigma2);

        // Scalar arithmetic with explicitly expanded products.
        let h = &rows[0][0];
        let own = h[0] * d1[0] + h[1] * d1[1];
        let x1 = h[0] * d2[0] + h[1] * d2[1];
        let denom = own.norm_sqr() + x1.norm_sqr() + sigma2;
        let expect = own / denom;
        assert!((chi[0][0] - expect).norm() < 1e-14);
    }

    #[test]
    fn zero_precoder_gives_zero_filter_and_unit_mse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows = random_rows(&mut rng, 1, 2, 2);
        let d = DigitalBeamformer::zeros(1, 2, 2);
        let chi = update_combiners(&rows, &d, 0.1);
        assert_eq!(chi[0][0], Complex64::new(0.0, 0.0));
        let (xi, omega) = update_weights(&rows, &d, &chi, 0.1);
        assert_eq!(xi[0][0], 1.0);
        assert_eq!(omega[0][0], 1.0);
    }

    #[test]
    fn unit_snr_gives_half_mse() {
        // Single user, |ĥd|² = σ² → ξ = 1/2, ω = 2.
        let rows = vec![vec![RowDVector::from_vec(vec![Complex64::new(1.0, 0.0)])]];
        let d = DigitalBeamformer {
            vectors: vec![vec![DVector::from_vec(vec![Complex64::new(0.5, 0.0)])]],
        };
        let sigma2 = 0.25;
        let chi = update_combiners(&rows, &d, sigma2);
        let (xi, omega) = update_weights(&rows, &d, &chi, sigma2);
        assert_relative_eq!(xi[0][0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(omega[0][0], 2.0, max_relative = 1e-14);
    }

    #[test]
    fn objective_never_increases_across_individual_steps() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let rows = random_rows(&mut rng, 2, 3, 3);
            let grams = random_grams(&mut rng, 2, 3);
            let p_max = 2.0;
            let sigma2 = 0.1;
            let mut d = random_precoder(&mut rng, &grams, 3, p_max);
            let mut chi = update_combiners(&rows, &d, sigma2);
            let (_, mut omega) = update_weights(&rows, &d, &chi, sigma2);
            let mut obj = wmmse_objective(&rows, &d, &chi, &omega, sigma2);
            for _ in 0..6 {
                chi = update_combiners(&rows, &d, sigma2);
                let after_chi = wmmse_objective(&rows, &d, &chi, &omega, sigma2);
                assert!(after_chi <= obj + 1e-9 * obj.abs().max(1.0));

                let (_, w) = update_weights(&rows, &d, &chi, sigma2);
                omega = w;
                let after_w = wmmse_objective(&rows, &d, &chi, &omega, sigma2);
                assert!(after_w <= after_chi + 1e-9 * after_chi.abs().max(1.0));

                let (d_new, mu) = update_precoders(&rows, &chi, &omega, &grams, p_max).unwrap();
                d = d_new;
                let after_d = wmmse_objective(&rows, &d, &chi, &omega, sigma2);
                assert!(
                    after_d <= after_w + 1e-9 * after_w.abs().max(1.0),
                    "seed {seed}: {after_w} -> {after_d} (mu {mu}, power {})",
                    d.transmit_power(&grams)
                );
                obj = after_d;
            }
        }
    }

    #[test]
    fn precoder_update_respects_and_spends_the_power_budget() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
            let rows = random_rows(&mut rng, 2, 2, 3);
            let grams = random_grams(&mut rng, 2, 3);
            let p_max = 1.5;
            let sigma2 = 0.01;
            let d0 = random_precoder(&mut rng, &grams, 2, p_max);
            let chi = update_combiners(&rows, &d0, sigma2);
            let (_, omega) = update_weights(&rows, &d0, &chi, sigma2);
            let (d, mu) = update_precoders(&rows, &chi, &omega, &grams, p_max).unwrap();
            let p = d.transmit_power(&grams);
            assert!(p <= p_max * (1.0 + 1e-9), "power {p} over budget");
            if mu > 0.0 {
                // Active constraint binds to within the bisection tolerance.
                assert_relative_eq!(p, p_max, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn matched_filter_start_spends_exactly_the_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows = random_rows(&mut rng, 3, 2, 4);
        let grams = random_grams(&mut rng, 3, 4);
        let d = matched_filter_init(&rows, &grams, 0.7);
        assert_relative_eq!(d.transmit_power(&grams), 0.7, max_relative = 1e-12);
    }

    #[test]
    fn precoder_matches_projected_gradient_oracle() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
            let rows = random_rows(&mut rng, 1, 2, 2);
            let grams = random_grams(&mut rng, 1, 2);
            let p_max = 1.0;
            let sigma2 = 0.05;
            let d0 = random_precoder(&mut rng, &grams, 2, p_max);
            let chi = update_combiners(&rows, &d0, sigma2);
            let (_, omega) = update_weights(&rows, &d0, &chi, sigma2);
            let (d, _) = update_precoders(&rows, &chi, &omega, &grams, p_max).unwrap();

            // Independent first-order solver in whitened coordinates, where
            // the power ball is Euclidean and projection is radial scaling.
            let g = &grams[0];
            let chol = nalgebra::Cholesky::new(g.clone()).unwrap();
            let l = chol.l();
            let mut a = DMatrix::<Complex64>::zeros(2, 2);
            let mut bs = Vec::new();
            for k in 0..2 {
                let h = &rows[0][k];
                let w = omega[0][k] * chi[0][k].norm_sqr();
                a += h.adjoint() * h * Complex64::new(w, 0.0);
                bs.push(h.adjoint() * (chi[0][k] * Complex64::new(omega[0][k], 0.0)));
            }
            let a_t = l.solve_lower_triangular(&a).unwrap();
            let a_t = l
                .solve_lower_triangular(&a_t.adjoint())
                .unwrap()
                .adjoint()
                .into_owned();
            let b_t: Vec<DVector<Complex64>> =
                bs.iter().map(|b| l.solve_lower_triangular(b).unwrap()).collect();
            let lip = 2.0 * a_t.norm() + 1e-9;
            let mut ys: Vec<DVector<Complex64>> = vec![DVector::zeros(2); 2];
            for _ in 0..200_000 {
                for (k, y) in ys.iter_mut().enumerate() {
                    let grad = (&a_t * &*y - &b_t[k]) * Complex64::new(2.0, 0.0);
                    *y -= grad * Complex64::new(1.0 / lip, 0.0);
                }
                let p: f64 = ys.iter().map(|y| y.norm_squared()).sum();
                if p > p_max {
                    let s = Complex64::new((p_max / p).sqrt(), 0.0);
                    for y in &mut ys {
                        *y *= s;
                    }
                }
            }
            let quad = |vecs: &[DVector<Complex64>], whitened: bool| -> f64 {
                vecs.iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let (aa, bb): (&DMatrix<Complex64>, &DVector<Complex64>) =
                            if whitened { (&a_t, &b_t[k]) } else { (&a, &bs[k]) };
                        ((v.adjoint() * aa * v)[(0, 0)] - (bb.adjoint() * v)[(0, 0)]
                            - (v.adjoint() * bb)[(0, 0)])
                        .re
                    })
                    .sum()
            };
            let f_solver = quad(&d.vectors[0], false);
            let f_oracle = quad(&ys, true);
            assert!(
                (f_solver - f_oracle).abs() <= 1e-6 * f_solver.abs().max(1.0),
                "objective {f_solver} vs oracle {f_oracle}"
            );
        }
    }

    #[test]
    fn singular_grams_fall_back_to_minimum_norm() {
        // Two identical analog columns: Gram matrix of rank 1.
        let g = DMatrix::from_fn(2, 2, |_, _| Complex64::new(1.0, 0.0));
        let grams = vec![g];
        let rows = vec![vec![RowDVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ])]];
        let d0 = DigitalBeamformer {
            vectors: vec![vec![DVector::from_vec(vec![
                Complex64::new(0.1, 0.0),
                Complex64::new(0.1, 0.0),
            ])]],
        };
        let sigma2 = 0.1;
        let chi = update_combiners(&rows, &d0, sigma2);
        let (_, omega) = update_weights(&rows, &d0, &chi, sigma2);
        let (d, _) = update_precoders(&rows, &chi, &omega, &grams, 4.0).unwrap();
        let p = d.transmit_power(&grams);
        assert!(p <= 4.0 * (1.0 + 1e-9));
        // Minimum-norm solutions put equal weight on the two chains.
        assert!((d.vectors[0][0][0] - d.vectors[0][0][1]).norm() < 1e-10);
    }

    #[test]
    fn solve_trace_is_monotone_and_converges() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
            let rows = random_rows(&mut rng, 2, 3, 3);
            let grams = random_grams(&mut rng, 2, 3);
            let d0 = matched_filter_init(&rows, &grams, 1.0);
            let (_, _, trace) =
                wmmse_solve(&rows, &grams, 0.05, 1.0, d0, 30, 0.0).unwrap();
            for w in trace.windows(2) {
                assert!(
                    w[1] >= w[0] * (1.0 - 1e-9) - 1e-12,
                    "trace decreased: {} -> {}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn zero_iterations_returns_initial_precoder() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows = random_rows(&mut rng, 1, 2, 2);
        let grams = random_grams(&mut rng, 1, 2);
        let d0 = matched_filter_init(&rows, &grams, 1.0);
        let (d, _, trace) = wmmse_solve(&rows, &grams, 0.1, 1.0, d0.clone(), 0, 1e-4).unwrap();
        assert_eq!(d, d0);
        assert_eq!(trace.len(), 1);
        assert_relative_eq!(trace[0], evaluate_rate(&rows, &d0, 0.1), max_relative = 1e-15);
    }

    #[test]
    fn single_user_single_chain_reaches_scalar_capacity() {
        // One user, one RF chain: the optimum spends all power on the only
        // direction, giving rate log2(1 + P·|ĥ|²/(g·σ²)) where g is the
        // analog column energy.
        let h = Complex64::new(0.8, -0.6);
        let rows = vec![vec![RowDVector::from_vec(vec![h])]];
        let g = 32.0;
        let grams = vec![DMatrix::from_vec(1, 1, vec![Complex64::new(g, 0.0)])];
        let p_max = 2.0;
        let sigma2 = 0.01;
        let d0 = matched_filter_init(&rows, &grams, p_max);
        let (_, _, trace) = wmmse_solve(&rows, &grams, sigma2, p_max, d0, 25, 0.0).unwrap();
        let expect = (p_max * h.norm_sqr() / (g * sigma2)).ln_1p() / LN_2;
        assert_relative_eq!(*trace.last().unwrap(), expect, max_relative = 1e-9);
    }

    #[test]
    fn rates_are_invariant_to_channel_and_noise_rescaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows = random_rows(&mut rng, 2, 2, 2);
        let grams = random_grams(&mut rng, 2, 2);
        let beta = 10.0;
        let scaled: ChannelRows = rows
            .iter()
            .map(|per_k| per_k.iter().map(|h| h * Complex64::new(beta, 0.0)).collect())
            .collect();
        let d0 = matched_filter_init(&rows, &grams, 1.0);
        let d0s = matched_filter_init(&scaled, &grams, 1.0);
        let (_, _, t1) = wmmse_solve(&rows, &grams, 0.05, 1.0, d0, 10, 0.0).unwrap();
        let (_, _, t2) =
            wmmse_solve(&scaled, &grams, 0.05 * beta * beta, 1.0, d0s, 10, 0.0).unwrap();
        for (a, b) in t1.iter().zip(&t2) {
            assert_relative_eq!(a, b, max_relative = 1e-9);
        }
    }
}
