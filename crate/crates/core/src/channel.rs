//! Frequency-domain channel construction for the two-hop downlink.
//!
//! Each surface r sees the base station through a rank-one line-of-sight
//! matrix G_{r,m} (elements × antennas) per subcarrier, and each user k sees
//! surface r through a line-of-sight row f_{r,m,k}. With a diagonal phase
//! configuration Φ_r per surface the end-to-end row toward user k is
//! h_{m,k} = Σ_r f_{r,m,k} Φ_r G_{r,m}.

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::SystemConfig;
use crate::error::Result;
use crate::ris::ReflectionConfig;
use crate::scenario::{GainModel, Scenario};

/// Rows of effective channel per subcarrier per user: `rows[m][k]` is the
/// 1×N (or 1×N_RF once projected through the analog network) channel row.
pub type ChannelRows = Vec<Vec<RowDVector<Complex64>>>;

/// Steering vector of a uniform linear array along its axis: entry n carries
/// phase 2π·(f/c)·d·(n−1)·sin θ and the vector has unit norm.
pub fn ula_response(n: usize, theta: f64, f_hz: f64, spacing_m: f64) -> DVector<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    let step = 2.0 * std::f64::consts::PI * f_hz * spacing_m / crate::config::SPEED_OF_LIGHT
        * theta.sin();
    DVector::from_fn(n, |i, _| Complex64::from_polar(scale, step * i as f64))
}

/// Steering vector of a uniform planar grid, flattened row-major: element
/// (i1, i2) sits at index i1·cols + i2 and carries phase
/// 2π·(f/c)·d·(i1·cos u·sin v + i2·cos v). Unit norm.
pub fn upa_response(
    rows: usize,
    cols: usize,
    u: f64,
    v: f64,
    f_hz: f64,
    spacing_m: f64,
) -> DVector<Complex64> {
    let scale = 1.0 / ((rows * cols) as f64).sqrt();
    let k = 2.0 * std::f64::consts::PI * f_hz * spacing_m / crate::config::SPEED_OF_LIGHT;
    let g1 = k * u.cos() * v.sin();
    let g2 = k * v.cos();
    DVector::from_fn(rows * cols, |i, _| {
        let i1 = (i / cols) as f64;
        let i2 = (i % cols) as f64;
        Complex64::from_polar(scale, g1 * i1 + g2 * i2)
    })
}

/// Per-subcarrier channels of both hops.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `bs_ris[r][m]`: elements × antennas matrix of the base-station →
    /// surface hop.
    pub bs_ris: Vec<Vec<DMatrix<Complex64>>>,
    /// `ris_user[r][m][k]`: 1 × elements row of the surface → user hop.
    pub ris_user: Vec<Vec<Vec<RowDVector<Complex64>>>>,
}

/// Builds the two-hop channels for every subcarrier from the scenario
/// geometry. The random gain model consumes draws in a fixed order (first the
/// base-station hops by surface index, then the user hops by surface-major
/// order), so equal seeds give bit-identical channels.
pub fn generate_channels(
    scenario: &Scenario,
    cfg: &SystemConfig,
    model: &GainModel,
) -> Result<ChannelSet> {
    scenario.validate(cfg)?;
    let freqs = cfg.subcarrier_frequencies();
    let spacing = cfg.antenna_spacing_m;
    let mut rng = model_rng(model);

    // One amplitude draw per hop, independent of the subcarrier.
    let bs_ris_draws: Vec<Complex64> =
        (0..cfg.ris_count).map(|_| standard_complex(&mut rng)).collect();
    let ris_user_draws: Vec<Vec<Complex64>> = (0..cfg.ris_count)
        .map(|_| (0..cfg.users).map(|_| standard_complex(&mut rng)).collect())
        .collect();

    let mut bs_ris = Vec::with_capacity(cfg.ris_count);
    let mut ris_user = Vec::with_capacity(cfg.ris_count);
    for r in 0..cfg.ris_count {
        let theta = scenario.bs_ris_angle(r)?;
        let (u, v) = scenario.ris_arrival(r)?;
        let dist = scenario.bs_ris_distance(r);
        let alpha = model.amplitude(dist, cfg, bs_ris_draws[r]);
        let tau = model.delay(dist);

        let mut per_m = Vec::with_capacity(freqs.len());
        let mut per_m_users = Vec::with_capacity(freqs.len());
        for &f in &freqs {
            let a = ula_response(cfg.bs_antennas, theta, f, spacing);
            let b = upa_response(cfg.ris_rows, cfg.ris_cols, u, v, f, spacing);
            let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * tau * f);
            per_m.push(b * a.adjoint() * (alpha * phase));

            let mut rows_k = Vec::with_capacity(cfg.users);
            for k in 0..cfg.users {
                let (u2, v2) = scenario.ris_user_angles(r, k)?;
                let dist2 = scenario.ris_user_distance(r, k);
                let alpha2 = model.amplitude(dist2, cfg, ris_user_draws[r][k]);
                let tau2 = model.delay(dist2);
                let b2 = upa_response(cfg.ris_rows, cfg.ris_cols, u2, v2, f, spacing);
                let phase2 = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * tau2 * f);
                rows_k.push(b2.transpose() * (alpha2 * phase2));
            }
            per_m_users.push(rows_k);
        }
        bs_ris.push(per_m);
        ris_user.push(per_m_users);
    }
    Ok(ChannelSet { bs_ris, ris_user })
}

/// Direct base-station → user line-of-sight rows (no surface in the path),
/// indexed `[m][k]`, each 1 × antennas. Used by the surface-free baseline.
pub fn los_bs_user(
    scenario: &Scenario,
    cfg: &SystemConfig,
    model: &GainModel,
) -> Result<ChannelRows> {
    let freqs = cfg.subcarrier_frequencies();
    let mut rng = model_rng(model);
    let draws: Vec<Complex64> = (0..cfg.users).map(|_| standard_complex(&mut rng)).collect();

    let mut rows = Vec::with_capacity(freqs.len());
    for &f in &freqs {
        let mut per_k = Vec::with_capacity(cfg.users);
        for k in 0..cfg.users {
            let theta = scenario.bs_user_angle(k)?;
            let dist = scenario.bs_user_distance(k);
            let alpha = model.amplitude(dist, cfg, draws[k]);
            let tau = model.delay(dist);
            let a = ula_response(cfg.bs_antennas, theta, f, cfg.antenna_spacing_m);
            let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * tau * f);
            per_k.push(a.adjoint() * (alpha * phase));
        }
        rows.push(per_k);
    }
    Ok(rows)
}

impl ChannelSet {
    pub fn num_surfaces(&self) -> usize {
        self.bs_ris.len()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.bs_ris.first().map_or(0, Vec::len)
    }

    pub fn num_users(&self) -> usize {
        self.ris_user.first().and_then(|per_m| per_m.first()).map_or(0, Vec::len)
    }

    pub fn elements_per_surface(&self) -> usize {
        self.bs_ris.first().and_then(|per_m| per_m.first()).map_or(0, DMatrix::nrows)
    }

    /// End-to-end rows h_{m,k} = Σ_r f_{r,m,k} Φ_r G_{r,m} for a given phase
    /// configuration. Surfaces are accumulated in ascending index order, so
    /// the result is a deterministic function of the inputs.
    pub fn effective_channel(&self, reflection: &ReflectionConfig) -> ChannelRows {
        let n_ris = self.elements_per_surface();
        let phases = reflection.phases();
        let m_total = self.num_subcarriers();
        let k_total = self.num_users();
        let n = self.bs_ris.first().and_then(|per_m| per_m.first()).map_or(0, DMatrix::ncols);

        let mut rows = Vec::with_capacity(m_total);
        for m in 0..m_total {
            let mut per_k = Vec::with_capacity(k_total);
            for k in 0..k_total {
                let mut h = RowDVector::<Complex64>::zeros(n);
                for r in 0..self.num_surfaces() {
                    let f_row = &self.ris_user[r][m][k];
                    let g = &self.bs_ris[r][m];
                    let mut scaled = f_row.clone();
                    for i in 0..n_ris {
                        scaled[i] *= phases[r * n_ris + i];
                    }
                    h += scaled * g;
                }
                per_k.push(h);
            }
            rows.push(per_k);
        }
        rows
    }

    /// Returns a perturbed copy modelling imperfect channel knowledge: every
    /// entry x of both hops becomes x + e with e complex normal of variance
    /// `delta·|x|²`. `delta = 0` returns the channels unchanged. Entries are
    /// perturbed in a fixed traversal order so equal seeds give identical
    /// results.
    pub fn apply_csi_error(&self, delta: f64, seed: u64) -> ChannelSet {
        if delta == 0.0 {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = delta.sqrt();
        let mut out = self.clone();
        for per_m in &mut out.bs_ris {
            for g in per_m {
                for x in g.iter_mut() {
                    let e = standard_complex(&mut rng);
                    *x += e * (scale * x.norm());
                }
            }
        }
        for per_m in &mut out.ris_user {
            for per_k in per_m {
                for row in per_k {
                    for x in row.iter_mut() {
                        let e = standard_complex(&mut rng);
                        *x += e * (scale * x.norm());
                    }
                }
            }
        }
        out
    }
}

fn model_rng(model: &GainModel) -> ChaCha8Rng {
    match model {
        GainModel::ComplexGaussian { seed } => ChaCha8Rng::seed_from_u64(*seed),
        _ => ChaCha8Rng::seed_from_u64(0),
    }
}

/// Standard complex normal: independent real and imaginary parts of
/// variance 1/2.
pub(crate) fn standard_complex<R: rand::Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) / 2f64.sqrt()
}
