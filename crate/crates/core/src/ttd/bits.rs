//! Delay-line resolution budgeting.
//!
//! Given a steering direction, these helpers compute how many bits a stepped
//! delay line needs so that its grid (step = one carrier period) covers the
//! full delay range of each layer, plus the largest group of antennas that
//! can share a single phase shifter before the intra-group true delay spread
//! exceeds one grid step.
//!
//! The results are analysis tools, not constraints: architectures may be
//! configured with fewer bits or larger shared-phase groups than the bounds
//! suggest, trading beam flatness across the band for cheaper hardware.

use crate::config::SystemConfig;
use crate::ttd::SchemeKind;

/// Resolution demanded from each delay layer of a scheme at a given steering
/// direction, with the delay grid stepped at one carrier period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitRequirement {
    /// The scheme has no delay lines, or the direction is broadside so every
    /// ideal delay is zero.
    NoDelayNeeded,
    /// Single-layer scheme: advisory bound on antennas per line and the bits
    /// needed per line.
    Single {
        subarray_bound: usize,
        delay_bits: u32,
    },
    /// Double-layer scheme: advisory bound on antennas per first-layer line,
    /// bits per first-layer (short-range) line, and bits per second-layer
    /// (long-range) line.
    Double {
        subarray_bound: usize,
        first_bits: u32,
        second_bits: u32,
    },
}

/// Largest number of adjacent antennas that can share one phase shifter
/// before their true-delay spread per element, `Td*|sin(theta0)|`, exceeds
/// one delay-grid step. Saturates to `usize::MAX` at broadside.
pub fn max_ps_subarray(cfg: &SystemConfig, theta0: f64, step: f64) -> usize {
    let increment = cfg.antenna_delay() * theta0.sin().abs();
    if increment <= 0.0 {
        return usize::MAX;
    }
    let bound = (step / increment).floor();
    if bound >= usize::MAX as f64 {
        usize::MAX
    } else {
        bound as usize
    }
}

fn ceil_log2_bits(levels: f64) -> u32 {
    if levels <= 1.0 {
        0
    } else {
        levels.log2().ceil().max(0.0) as u32
    }
}

/// Bits needed per delay line so that a grid stepped at one carrier period
/// spans each layer's ideal delay range at steering direction `theta0`.
pub fn required_bits(kind: SchemeKind, cfg: &SystemConfig, theta0: f64) -> BitRequirement {
    let s = theta0.sin().abs();
    if s == 0.0 {
        return BitRequirement::NoDelayNeeded;
    }
    // Delay range is measured in grid steps of one carrier period.
    let per_antenna = (cfg.antenna_delay() / cfg.carrier_period()) * s;
    let bound = max_ps_subarray(cfg, theta0, cfg.carrier_period());
    let n = cfg.bs_antennas;
    match kind {
        SchemeKind::PsOnly => BitRequirement::NoDelayNeeded,
        SchemeKind::SingleLayer { subarrays, .. } => {
            let sub = n / subarrays;
            let span = (subarrays as f64 - 1.0) * sub as f64 * per_antenna;
            BitRequirement::Single {
                subarray_bound: bound,
                delay_bits: ceil_log2_bits(span),
            }
        }
        SchemeKind::DoubleLayer {
            second_count,
            first_per_second,
            ..
        } => {
            let sub = n / (second_count * first_per_second);
            let first_span = (first_per_second as f64 - 1.0) * sub as f64 * per_antenna;
            let second_span = (n - sub * first_per_second) as f64 * per_antenna;
            BitRequirement::Double {
                subarray_bound: bound,
                first_bits: ceil_log2_bits(first_span),
                second_bits: ceil_log2_bits(second_span),
            }
        }
    }
}

/// Ratio of total delay-line control bits of a double-layer scheme
/// (`second_count` long lines at `second_bits` each plus
/// `second_count*first_per_second` short lines at `first_bits` each) to a
/// single-layer scheme (`single_lines` lines at `single_bits` each).
pub fn bit_ratio(
    second_count: usize,
    second_bits: u32,
    first_per_second: usize,
    first_bits: u32,
    single_lines: usize,
    single_bits: u32,
) -> f64 {
    let double_total = second_count as f64 * second_bits as f64
        + (second_count * first_per_second) as f64 * first_bits as f64;
    let single_total = single_lines as f64 * single_bits as f64;
    double_total / single_total
}
