//! True-time-delay analog front ends.
//!
//! Three architectures are modelled. A plain phase-shifter array drives every
//! antenna from one RF chain through a frequency-flat phase. A single-layer
//! delay network splits the array into `subarrays` groups, each fed through
//! one delay line. A double-layer network inserts a short tree of delay
//! lines: the *second* layer (next to the RF chain) has `second_count` lines
//! spanning the large delay range, each feeding `first_per_second` short
//! *first*-layer lines, each of which drives one phase-shifter subarray.
//!
//! Delay lines may be ideal (continuous) or restricted to a uniform grid
//! {0, D, 2D, …, (2^bits − 1)·D}; phase shifters may be ideal or restricted
//! to 2^bits uniformly spaced phases.

mod beamformer;
mod bits;
mod gain;
mod steering;

pub use beamformer::{build_analog_beamformer, AnalogBeamformer};
pub use bits::{bit_ratio, max_ps_subarray, required_bits, BitRequirement};
pub use gain::{dirichlet_sinc, gain_brute_force, gain_closed_form, gain_toward};
pub use steering::{
    ideal_delays, phase_error, ps_phase, split_direction, steering_weights, wrap_phase,
};

use crate::error::{Error, Result};

/// Resolution of the delay lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayStep {
    /// Ideal delay lines taking any non-negative value.
    Continuous,
    /// Delays snap to multiples of this step (in seconds).
    Step(f64),
}

/// Which analog network feeds the array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    /// One phase shifter per antenna, no delay lines.
    PsOnly,
    /// One delay line per subarray of N/`subarrays` antennas; `delay_bits`
    /// addresses the delay grid when a step is configured.
    SingleLayer { subarrays: usize, delay_bits: u32 },
    /// Two-layer delay tree: `second_count` large-range lines per chain, each
    /// feeding `first_per_second` short-range lines, one per subarray.
    DoubleLayer {
        second_count: usize,
        first_per_second: usize,
        second_bits: u32,
        first_bits: u32,
    },
}

impl SchemeKind {
    /// Antennas per phase-shifter subarray for an `n`-antenna array.
    pub fn ps_subarray_size(&self, n: usize) -> usize {
        match *self {
            SchemeKind::PsOnly => n,
            SchemeKind::SingleLayer { subarrays, .. } => n / subarrays,
            SchemeKind::DoubleLayer { second_count, first_per_second, .. } => {
                n / (second_count * first_per_second)
            }
        }
    }
}

/// Full description of the analog front end of one transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogArchitecture {
    pub kind: SchemeKind,
    pub delay_step: DelayStep,
    /// Phase-shifter resolution in bits; 0 means ideal (continuous) phase.
    pub ps_bits: u32,
}

impl AnalogArchitecture {
    pub fn ps_only() -> Self {
        AnalogArchitecture {
            kind: SchemeKind::PsOnly,
            delay_step: DelayStep::Continuous,
            ps_bits: 0,
        }
    }

    pub fn single_layer(subarrays: usize, delay_bits: u32) -> Self {
        AnalogArchitecture {
            kind: SchemeKind::SingleLayer { subarrays, delay_bits },
            delay_step: DelayStep::Continuous,
            ps_bits: 0,
        }
    }

    pub fn double_layer(
        second_count: usize,
        first_per_second: usize,
        second_bits: u32,
        first_bits: u32,
    ) -> Self {
        AnalogArchitecture {
            kind: SchemeKind::DoubleLayer {
                second_count,
                first_per_second,
                second_bits,
                first_bits,
            },
            delay_step: DelayStep::Continuous,
            ps_bits: 0,
        }
    }

    pub fn with_delay_step(mut self, step: DelayStep) -> Self {
        self.delay_step = step;
        self
    }

    pub fn with_ps_bits(mut self, bits: u32) -> Self {
        self.ps_bits = bits;
        self
    }

    /// Checks that the scheme divides an `n`-antenna array evenly and that
    /// all resolutions are usable.
    pub fn validate(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::Config("array must have at least one antenna".into()));
        }
        match self.kind {
            SchemeKind::PsOnly => {}
            SchemeKind::SingleLayer { subarrays, delay_bits } => {
                if subarrays == 0 || n % subarrays != 0 {
                    return Err(Error::Config(format!(
                        "{subarrays} subarrays do not divide {n} antennas"
                    )));
                }
                if delay_bits > 32 {
                    return Err(Error::Config("delay grids beyond 32 bits are not supported".into()));
                }
            }
            SchemeKind::DoubleLayer { second_count, first_per_second, second_bits, first_bits } => {
                let lines = second_count.checked_mul(first_per_second).unwrap_or(0);
                if lines == 0 || n % lines != 0 {
                    return Err(Error::Config(format!(
                        "{second_count}×{first_per_second} delay lines do not divide {n} antennas"
                    )));
                }
                if second_bits > 32 || first_bits > 32 {
                    return Err(Error::Config("delay grids beyond 32 bits are not supported".into()));
                }
            }
        }
        if let DelayStep::Step(d) = self.delay_step {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Config("delay step must be positive".into()));
            }
        }
        if self.ps_bits > 16 {
            return Err(Error::Config("phase grids beyond 16 bits are not supported".into()));
        }
        Ok(())
    }

    /// Antennas sharing one phase-shifter pattern period: the whole array
    /// for the pure phase-shifter scheme, otherwise one delay-line subarray.
    pub fn ps_subarray_size(&self, n: usize) -> usize {
        self.kind.ps_subarray_size(n)
    }

    /// Delay lines in the layer adjacent to the subarrays, per RF chain.
    pub fn first_layer_lines(&self) -> usize {
        match self.kind {
            SchemeKind::PsOnly => 0,
            SchemeKind::SingleLayer { subarrays, .. } => subarrays,
            SchemeKind::DoubleLayer { second_count, first_per_second, .. } => {
                second_count * first_per_second
            }
        }
    }

    /// Delay lines in the layer adjacent to the RF chain, per chain (zero
    /// unless the scheme is double-layer).
    pub fn second_layer_lines(&self) -> usize {
        match self.kind {
            SchemeKind::DoubleLayer { second_count, .. } => second_count,
            _ => 0,
        }
    }
}

/// Snaps a delay to the grid {0, D, …, (2^bits − 1)·D}. Values outside the
/// grid saturate at the ends; a value half way between two grid points takes
/// the smaller one.
pub fn quantize_delay(tau: f64, step: f64, bits: u32) -> f64 {
    let max_index = (1u64 << bits) - 1;
    if tau <= 0.0 {
        return 0.0;
    }
    let idx = tau / step;
    let lo = (idx.floor() as u64).min(max_index);
    let hi = (lo + 1).min(max_index);
    let d_lo = (tau - lo as f64 * step).abs();
    let d_hi = (tau - hi as f64 * step).abs();
    let q = if d_hi < d_lo { hi } else { lo };
    q as f64 * step
}

/// Snaps a phase to the 2^bits uniformly spaced values {2πq/2^bits}. Returns
/// the grid phase in [0, 2π). A phase half way between two grid points takes
/// the smaller *index*, so a tie across the 2π wrap resolves to index 0.
pub fn quantize_phase(phase: f64, bits: u32) -> f64 {
    let levels = 1u64 << bits;
    let step = 2.0 * std::f64::consts::PI / levels as f64;
    let wrapped = wrap_phase(phase);
    let idx = wrapped / step;
    let lo = (idx.floor() as u64).min(levels - 1);
    let frac = idx - lo as f64;
    let q = if frac > 0.5 {
        (lo + 1) % levels
    } else if frac < 0.5 {
        lo
    } else {
        // Tie: the two candidates are lo and (lo+1) mod levels; take the
        // smaller index.
        if lo + 1 == levels {
            0
        } else {
            lo
        }
    };
    q as f64 * step
}

/// Per-chain delay-line settings, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainDelays {
    /// No delay lines (pure phase-shifter scheme).
    None,
    /// One delay per subarray.
    Single(Vec<f64>),
    /// `first[kh·K_L + kl]` is the short-range line feeding subarray
    /// (kh, kl); `second[kh]` is the large-range line feeding that group.
    Double { first: Vec<f64>, second: Vec<f64> },
}

impl ChainDelays {
    /// Total delay applied to antenna `n` given the subarray size and, for
    /// the double layer, the number of first-layer lines per second-layer
    /// line.
    pub fn delay_at(&self, n: usize, subarray: usize, first_per_second: usize) -> f64 {
        match self {
            ChainDelays::None => 0.0,
            ChainDelays::Single(v) => v[n / subarray],
            ChainDelays::Double { first, second } => {
                let sub_idx = n / subarray;
                let kh = sub_idx / first_per_second;
                let kl = sub_idx % first_per_second;
                first[kh * first_per_second + kl] + second[kh]
            }
        }
    }

    /// All configured delay values, flattened (first layer then second).
    pub fn values(&self) -> Vec<f64> {
        match self {
            ChainDelays::None => Vec::new(),
            ChainDelays::Single(v) => v.clone(),
            ChainDelays::Double { first, second } => {
                first.iter().chain(second.iter()).copied().collect()
            }
        }
    }
}
