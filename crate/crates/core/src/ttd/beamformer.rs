//! Multi-chain analog front end.
//!
//! Each RF chain drives the *full* antenna array through its own delay
//! network and per-antenna phase shifters; the chain outputs sum at each
//! antenna. Composing the hardware at a frequency yields the mixing matrix
//! `F` (antennas × chains) applied between the digital precoder and the
//! array. Phase-shifter entries are frequency-flat; only the delay-line
//! phasors rotate with frequency, so column energies are identical at every
//! subcarrier.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::ttd::steering::quantized_delays;
use crate::ttd::{ps_phase, quantize_phase, AnalogArchitecture, ChainDelays, SchemeKind};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// One RF chain's hardware settings.
#[derive(Debug, Clone)]
struct Chain {
    /// Per-antenna phase-shifter values, modulus 1/sqrt(subarray size).
    ps: Vec<Complex64>,
    delays: ChainDelays,
}

/// Immutable analog beamformer for all RF chains. Built once per steering
/// direction set; [`AnalogBeamformer::compose`] is a pure function of the
/// frequency and safe to call concurrently.
#[derive(Debug, Clone)]
pub struct AnalogBeamformer {
    arch: AnalogArchitecture,
    antennas: usize,
    subarray: usize,
    first_per_second: usize,
    chains: Vec<Chain>,
}

/// Builds the analog front end steering each RF chain toward its own
/// direction (one angle per chain, radians).
pub fn build_analog_beamformer(
    arch: &AnalogArchitecture,
    cfg: &SystemConfig,
    angles: &[f64],
) -> Result<AnalogBeamformer> {
    arch.validate(cfg.bs_antennas)?;
    if angles.len() != cfg.rf_chains {
        return Err(Error::Dimension(format!(
            "need one steering angle per RF chain ({}), got {}",
            cfg.rf_chains,
            angles.len()
        )));
    }
    let n = cfg.bs_antennas;
    let sub = arch.ps_subarray_size(n);
    let amp = 1.0 / (sub as f64).sqrt();
    let chains = angles
        .iter()
        .map(|&theta| {
            let delays = quantized_delays(arch, cfg, theta);
            let ps = (0..n)
                .map(|i| {
                    let mut psi = ps_phase(cfg, theta, i % sub);
                    if arch.ps_bits > 0 {
                        psi = quantize_phase(psi, arch.ps_bits);
                    }
                    Complex64::from_polar(amp, psi)
                })
                .collect();
            Chain { ps, delays }
        })
        .collect();
    Ok(AnalogBeamformer {
        arch: arch.clone(),
        antennas: n,
        subarray: sub,
        first_per_second: match arch.kind {
            SchemeKind::DoubleLayer { first_per_second, .. } => first_per_second,
            _ => 1,
        },
        chains,
    })
}

impl AnalogBeamformer {
    pub fn architecture(&self) -> &AnalogArchitecture {
        &self.arch
    }

    pub fn rf_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// Phase-shifter values of one chain, one per antenna.
    pub fn ps_entries(&self, chain: usize) -> &[Complex64] {
        &self.chains[chain].ps
    }

    /// Delay-line settings of one chain.
    pub fn chain_delays(&self, chain: usize) -> &ChainDelays {
        &self.chains[chain].delays
    }

    /// The mixing matrix at frequency `f_hz`: column `r` is chain `r`'s
    /// per-antenna weight.
    pub fn compose(&self, f_hz: f64) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.antennas, self.chains.len(), |i, r| {
            let chain = &self.chains[r];
            let tau = chain
                .delays
                .delay_at(i, self.subarray, self.first_per_second);
            chain.ps[i] * Complex64::from_polar(1.0, TWO_PI * f_hz * tau)
        })
    }

    /// One column of [`AnalogBeamformer::compose`] without forming the whole
    /// matrix.
    pub fn chain_weights(&self, chain: usize, f_hz: f64) -> DVector<Complex64> {
        let c = &self.chains[chain];
        DVector::from_fn(self.antennas, |i, _| {
            let tau = c.delays.delay_at(i, self.subarray, self.first_per_second);
            c.ps[i] * Complex64::from_polar(1.0, TWO_PI * f_hz * tau)
        })
    }

    /// Splits the front end into its physical stages at `f_hz`: the sparse
    /// phase-shifter matrix (antennas × first-stage lines·chains), the
    /// first-layer delay phasors, and the second-layer delay phasors, whose
    /// ordinary matrix product equals [`AnalogBeamformer::compose`]. Schemes
    /// without a given stage contribute an identity factor.
    pub fn stage_matrices(
        &self,
        f_hz: f64,
    ) -> (
        DMatrix<Complex64>,
        DMatrix<Complex64>,
        DMatrix<Complex64>,
    ) {
        let r_count = self.chains.len();
        let lines = (self.antennas / self.subarray).max(1);
        let second = match self.arch.kind {
            SchemeKind::DoubleLayer { second_count, .. } => second_count,
            _ => 1,
        };
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);

        let mut ps = DMatrix::from_element(self.antennas, lines * r_count, zero);
        for (r, chain) in self.chains.iter().enumerate() {
            for i in 0..self.antennas {
                ps[(i, r * lines + i / self.subarray)] = chain.ps[i];
            }
        }

        let mut first = DMatrix::from_element(lines * r_count, second * r_count, zero);
        let mut second_m = DMatrix::from_element(second * r_count, r_count, zero);
        for (r, chain) in self.chains.iter().enumerate() {
            match &chain.delays {
                ChainDelays::None => {
                    first[(r, r)] = one;
                    second_m[(r, r)] = one;
                }
                ChainDelays::Single(v) => {
                    for (u, &tau) in v.iter().enumerate() {
                        first[(r * lines + u, r)] = Complex64::from_polar(1.0, TWO_PI * f_hz * tau);
                    }
                    second_m[(r, r)] = one;
                }
                ChainDelays::Double {
                    first: f_vals,
                    second: s_vals,
                } => {
                    for (idx, &tau) in f_vals.iter().enumerate() {
                        let kh = idx / self.first_per_second;
                        first[(r * lines + idx, r * second + kh)] =
                            Complex64::from_polar(1.0, TWO_PI * f_hz * tau);
                    }
                    for (kh, &tau) in s_vals.iter().enumerate() {
                        second_m[(r * second + kh, r)] = Complex64::from_polar(1.0, TWO_PI * f_hz * tau);
                    }
                }
            }
        }
        (ps, first, second_m)
    }
}
