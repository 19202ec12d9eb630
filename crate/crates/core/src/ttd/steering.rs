//! Single-chain steering analysis: phase profiles, residual errors and the
//! delay settings that remove them.
//!
//! An ideal wideband steering toward θ₀ needs the antenna-n phase
//! 2π·f·(n−1)·T_d·sinθ₀ at every frequency f. Phase shifters realize this
//! only at the carrier; delay lines realize it across the band but only at
//! subarray granularity. The functions here quantify the residual.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::ttd::{
    quantize_delay, quantize_phase, AnalogArchitecture, ChainDelays, DelayStep, SchemeKind,
};


/// Carrier phase applied by the phase shifter of the antenna at zero-based
/// `index` when steering toward θ₀: 2π·f_c·T_d·index·sinθ₀.
pub fn ps_phase(cfg: &SystemConfig, theta0: f64, index: usize) -> f64 {
    2.0 * std::f64::consts::PI * cfg.carrier_hz * cfg.antenna_delay() * index as f64 * theta0.sin()
}

/// Wraps a phase into [0, 2π).
pub fn wrap_phase(phi: f64) -> f64 {
    phi.rem_euclid(2.0 * std::f64::consts::PI)
}

/// Residual phase error at antenna `index` (zero-based) and frequency `f_hz`
/// once the scheme's delay lines have absorbed the subarray-level part:
/// 2π·(f − f_c)·i·T_d·sinθ₀ with i the offset inside the phase-shifter
/// subarray. Vanishes at the carrier and at subarray leaders.
pub fn phase_error(
    kind: &SchemeKind,
    cfg: &SystemConfig,
    theta0: f64,
    f_hz: f64,
    index: usize,
) -> f64 {
    let sub = kind.ps_subarray_size(cfg.bs_antennas);
    let i = (index % sub) as f64;
    2.0 * std::f64::consts::PI * (f_hz - cfg.carrier_hz) * i * cfg.antenna_delay() * theta0.sin()
}

/// Direction in which a carrier-designed phase-shifter beam actually points
/// at frequency `f_hz`: arcsin((f_c/f)·sinθ₀). Fails when the argument
/// leaves [−1, 1] (the beam leaves visible space).
pub fn split_direction(cfg: &SystemConfig, theta0: f64, f_hz: f64) -> Result<f64> {
    let arg = cfg.carrier_hz / f_hz * theta0.sin();
    if !(-1.0..=1.0).contains(&arg) {
        return Err(Error::Domain(format!(
            "no real split direction: (f_c/f)·sinθ₀ = {arg}"
        )));
    }
    Ok(arg.asin())
}

/// Continuous delay settings that align every subarray with θ₀ across the
/// whole band. Slopes follow the subarray pitch: one subarray step of S (or
/// P) antennas corresponds to S·T_d·sinθ₀ of delay. For sinθ₀ < 0 each layer
/// is shifted by a constant so all delays are non-negative; the shift is
/// common to the layer and therefore only contributes a global phase.
pub fn ideal_delays(arch: &AnalogArchitecture, cfg: &SystemConfig, theta0: f64) -> ChainDelays {
    delay_assignment(arch, cfg, theta0, false)
}

/// Like [`ideal_delays`] but snapped to the configured grid: the
/// non-negativity shift is rounded up to a grid point and every value is
/// quantized with the layer's resolution. Identical to [`ideal_delays`] when
/// the step is continuous.
pub(crate) fn quantized_delays(
    arch: &AnalogArchitecture,
    cfg: &SystemConfig,
    theta0: f64,
) -> ChainDelays {
    delay_assignment(arch, cfg, theta0, true)
}

fn delay_assignment(
    arch: &AnalogArchitecture,
    cfg: &SystemConfig,
    theta0: f64,
    quantized: bool,
) -> ChainDelays {
    let t_d = cfg.antenna_delay();
    let s = theta0.sin();
    let grid = match (quantized, arch.delay_step) {
        (true, DelayStep::Step(d)) => Some(d),
        _ => None,
    };
    match arch.kind {
        SchemeKind::PsOnly => ChainDelays::None,
        SchemeKind::SingleLayer { subarrays, delay_bits } => {
            let sub = cfg.bs_antennas / subarrays;
            let slope = sub as f64 * t_d * s;
            ChainDelays::Single(layer_values(subarrays, slope, grid, delay_bits))
        }
        SchemeKind::DoubleLayer { second_count, first_per_second, second_bits, first_bits } => {
            let sub = cfg.bs_antennas / (second_count * first_per_second);
            let first_slope = sub as f64 * t_d * s;
            let second_slope = (first_per_second * sub) as f64 * t_d * s;
            let first_one = layer_values(first_per_second, first_slope, grid, first_bits);
            let mut first = Vec::with_capacity(second_count * first_per_second);
            for _ in 0..second_count {
                first.extend_from_slice(&first_one);
            }
            let second = layer_values(second_count, second_slope, grid, second_bits);
            ChainDelays::Double { first, second }
        }
    }
}

/// One layer's delay ramp i·slope for i = 0..count, shifted to be
/// non-negative and optionally snapped to the grid.
fn layer_values(count: usize, slope: f64, grid: Option<f64>, bits: u32) -> Vec<f64> {
    let raw_offset = if slope < 0.0 { -((count - 1) as f64) * slope } else { 0.0 };
    let offset = match grid {
        Some(d) if raw_offset > 0.0 => (raw_offset / d).ceil() * d,
        _ => raw_offset,
    };
    (0..count)
        .map(|i| {
            let tau = i as f64 * slope + offset;
            match grid {
                Some(d) => quantize_delay(tau, d, bits),
                None => tau,
            }
        })
        .collect()
}

/// Unit-norm array weights steering toward θ₀ at frequency `f_hz`, honoring
/// the architecture's delay and phase resolutions. The architecture must
/// divide the array evenly (see [`AnalogArchitecture::validate`]).
pub fn steering_weights(
    arch: &AnalogArchitecture,
    cfg: &SystemConfig,
    theta0: f64,
    f_hz: f64,
) -> DVector<Complex64> {
    let n = cfg.bs_antennas;
    debug_assert!(arch.validate(n).is_ok());
    let sub = arch.ps_subarray_size(n);
    let per_second = match arch.kind {
        SchemeKind::DoubleLayer { first_per_second, .. } => first_per_second,
        _ => 1,
    };
    let delays = quantized_delays(arch, cfg, theta0);
    let scale = 1.0 / (n as f64).sqrt();
    DVector::from_fn(n, |i, _| {
        let mut psi = ps_phase(cfg, theta0, i % sub);
        if arch.ps_bits > 0 {
            psi = quantize_phase(psi, arch.ps_bits);
        }
        let tau = delays.delay_at(i, sub, per_second);
        Complex64::from_polar(scale, psi + 2.0 * std::f64::consts::PI * f_hz * tau)
    })
}
