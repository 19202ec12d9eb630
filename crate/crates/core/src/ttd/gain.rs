//! Array-gain evaluation for the analog front end.
//!
//! Two independent routes are provided:
//!
//! * [`gain_closed_form`] evaluates the analytic expression for the ideal
//!   (continuous-delay, unquantized-phase) front end, which reduces to a
//!   Dirichlet kernel over the antennas that share a delay line.
//! * [`gain_brute_force`] forms the actual weight vector and takes the inner
//!   product with the array response, so it also covers quantized hardware.
//!
//! Agreement between the two on ideal hardware is a strong correctness check
//! and is enforced by the tests in this module.

use crate::channel::ula_response;
use crate::config::SystemConfig;
use crate::ttd::{steering_weights, AnalogArchitecture, SchemeKind};

/// Dirichlet kernel `sin(pi*n*x/2) / sin(pi*x/2)`.
///
/// At the removable singularities (`x` an even integer) the limit
/// `n * cos(pi*n*x/2) / cos(pi*x/2)` is returned, which has magnitude `n`.
pub fn dirichlet_sinc(n: usize, x: f64) -> f64 {
    let u = std::f64::consts::PI * x / 2.0;
    let denom = u.sin();
    if denom.abs() < 1e-12 {
        n as f64 * (n as f64 * u).cos() / u.cos()
    } else {
        (n as f64 * u).sin() / denom
    }
}

/// Analytic array gain of the ideal front end toward its own design
/// direction `theta0` at frequency `f_hz`.
///
/// With ideal delay lines every group of `sub` adjacent antennas that share a
/// line is phase-aligned exactly at all frequencies, leaving only the
/// intra-group error accumulated by the frequency-flat phase shifters. The
/// gain is `(cnt/n) * |dirichlet_sinc(sub, x)|` with `cnt` aligned groups of
/// size `sub` and `x = 2 (f/fc - 1) (Td/Tc) sin(theta0)`.
///
/// Quantization settings are deliberately not consulted here; this is the
/// continuous-hardware reference curve.
pub fn gain_closed_form(kind: SchemeKind, cfg: &SystemConfig, theta0: f64, f_hz: f64) -> f64 {
    let n = cfg.bs_antennas;
    let (cnt, sub) = match kind {
        SchemeKind::PsOnly => (1, n),
        SchemeKind::SingleLayer { subarrays, .. } => (subarrays, n / subarrays),
        SchemeKind::DoubleLayer {
            second_count,
            first_per_second,
            ..
        } => {
            let lines = second_count * first_per_second;
            (lines, n / lines)
        }
    };
    let zeta = f_hz / cfg.carrier_hz;
    let x = 2.0
        * (zeta - 1.0)
        * (cfg.antenna_delay() / cfg.carrier_period())
        * theta0.sin();
    (cnt as f64 / n as f64) * dirichlet_sinc(sub, x).abs()
}

/// Array gain of a concrete front end (including any quantization configured
/// on it) toward its own design direction: `|a(theta0, f)^H w(theta0, f)|`.
pub fn gain_brute_force(
    arch: &AnalogArchitecture,
    cfg: &SystemConfig,
    theta0: f64,
    f_hz: f64,
) -> crate::error::Result<f64> {
    gain_toward(arch, cfg, theta0, theta0, f_hz)
}

/// Array gain of a front end designed for `theta0`, evaluated toward an
/// arbitrary probe direction `eval_theta` at frequency `f_hz`.
///
/// Useful for locating where a beam actually points when the hardware cannot
/// hold it on target across the band.
pub fn gain_toward(
    arch: &AnalogArchitecture,
    cfg: &SystemConfig,
    theta0: f64,
    eval_theta: f64,
    f_hz: f64,
) -> crate::error::Result<f64> {
    arch.validate(cfg.bs_antennas)?;
    let w = steering_weights(arch, cfg, theta0, f_hz);
    let a = ula_response(cfg.bs_antennas, eval_theta, f_hz, cfg.antenna_spacing_m);
    Ok(a.dotc(&w).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ttd::{split_direction, DelayStep};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn cfg() -> SystemConfig {
        SystemConfig::reference()
    }

    fn ideal_schemes() -> Vec<AnalogArchitecture> {
        vec![
            AnalogArchitecture::ps_only(),
            AnalogArchitecture::single_layer(32, 0),
            AnalogArchitecture::double_layer(8, 4, 0, 0),
            AnalogArchitecture::double_layer(8, 2, 0, 0),
        ]
    }

    #[test]
    fn dirichlet_limit_at_even_integers() {
        assert_relative_eq!(dirichlet_sinc(4, 0.0), 4.0);
        assert_relative_eq!(dirichlet_sinc(4, 2.0), -4.0, max_relative = 1e-12);
        assert_relative_eq!(dirichlet_sinc(1, 0.7), 1.0, max_relative = 1e-12);
        // Regular point: hand value sin(2*pi*x)/sin(pi*x/2) at x = 0.5.
        let x = 0.5;
        let expect = (std::f64::consts::PI * 2.0 * x).sin()
            / (std::f64::consts::PI * x / 2.0).sin();
        assert_relative_eq!(dirichlet_sinc(4, x), expect);
    }

    #[test]
    fn phase_shifter_gain_matches_frozen_value_five_percent_offset() {
        let cfg = cfg();
        let f = 1.05 * cfg.carrier_hz;
        let g = gain_closed_form(SchemeKind::PsOnly, &cfg, FRAC_PI_4, f);
        assert_relative_eq!(g, 0.1034260312808754, max_relative = 1e-12);
    }

    #[test]
    fn band_edge_gains_match_frozen_values() {
        let cfg = cfg();
        let f_edge = cfg.subcarrier_frequencies()[cfg.num_subcarriers - 1];
        assert_relative_eq!(f_edge, 313.125e9, max_relative = 1e-12);

        let ps = gain_closed_form(SchemeKind::PsOnly, &cfg, FRAC_PI_4, f_edge);
        assert_relative_eq!(ps, 0.010149792257413193, max_relative = 1e-12);

        let d84 = gain_closed_form(
            SchemeKind::DoubleLayer {
                second_count: 8,
                first_per_second: 4,
                second_bits: 0,
                first_bits: 0,
            },
            &cfg,
            FRAC_PI_4,
            f_edge,
        );
        assert_relative_eq!(d84, 0.9941060692929716, max_relative = 1e-12);

        let d82 = gain_closed_form(
            SchemeKind::DoubleLayer {
                second_count: 8,
                first_per_second: 2,
                second_bits: 0,
                first_bits: 0,
            },
            &cfg,
            FRAC_PI_4,
            f_edge,
        );
        assert_relative_eq!(d82, 0.975385425682889, max_relative = 1e-12);

        // More delay lines leave a smaller residual subarray, hence more gain.
        assert!(d84 > d82 && d82 > ps);
    }

    #[test]
    fn carrier_gain_is_unity_for_every_scheme() {
        let cfg = cfg();
        for theta0 in [FRAC_PI_4, -0.56, 1.2] {
            for arch in ideal_schemes() {
                let g = gain_brute_force(&arch, &cfg, theta0, cfg.carrier_hz).unwrap();
                assert!((g - 1.0).abs() < 1e-12, "{arch:?}: gain {g}");
                let c = gain_closed_form(arch.kind, &cfg, theta0, cfg.carrier_hz);
                assert!((c - 1.0).abs() < 1e-12, "{arch:?}: closed form {c}");
            }
        }
    }

    #[test]
    fn closed_form_matches_brute_force_on_ideal_hardware() {
        let cfg = cfg();
        let freqs = cfg.subcarrier_frequencies();
        for theta0 in [-1.2, -0.7, -FRAC_PI_4, -0.2, 0.3, FRAC_PI_4, 0.9, 1.3] {
            for arch in ideal_schemes() {
                for &f in &freqs {
                    let brute = gain_brute_force(&arch, &cfg, theta0, f).unwrap();
                    let closed = gain_closed_form(arch.kind, &cfg, theta0, f);
                    assert!(
                        (brute - closed).abs() < 1e-10,
                        "{arch:?} theta0={theta0} f={f}: {brute} vs {closed}"
                    );
                }
            }
        }
    }

    #[test]
    fn matched_layer_split_gains_coincide_with_single_layer() {
        // 32 single-layer lines and an 8x4 double layer both leave groups of
        // four antennas on shared phase shifters, so their ideal gains agree.
        let cfg = cfg();
        let single = AnalogArchitecture::single_layer(32, 0);
        let double = AnalogArchitecture::double_layer(8, 4, 0, 0);
        for &f in &cfg.subcarrier_frequencies() {
            for theta0 in [FRAC_PI_4, -0.53] {
                let gs = gain_brute_force(&single, &cfg, theta0, f).unwrap();
                let gd = gain_brute_force(&double, &cfg, theta0, f).unwrap();
                assert_relative_eq!(gs, gd, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn detuned_phase_shifter_beam_peaks_at_predicted_split_direction() {
        let cfg = cfg();
        let f = 315e9;
        let split = split_direction(&cfg, FRAC_PI_4, f).unwrap();
        assert_relative_eq!(split, 0.7388456747780924, max_relative = 1e-12);

        let arch = AnalogArchitecture::ps_only();
        let lo = 0.6;
        let hi = 0.9;
        let steps = 2000;
        let mut best = (f64::NEG_INFINITY, lo);
        for i in 0..=steps {
            let phi = lo + (hi - lo) * i as f64 / steps as f64;
            let g = gain_toward(&arch, &cfg, FRAC_PI_4, phi, f).unwrap();
            if g > best.0 {
                best = (g, phi);
            }
        }
        let grid_width = (hi - lo) / steps as f64;
        assert!(
            (best.1 - split).abs() < 2.0 * grid_width,
            "argmax {} vs predicted {}",
            best.1,
            split
        );
        // At the split the full array realigns, so the gain recovers there.
        assert!(best.0 > 0.99, "peak gain {}", best.0);
    }

    proptest! {
        #[test]
        fn gain_never_exceeds_unity(
            theta0 in -1.5f64..1.5,
            frac in 0f64..1.0,
            quantized in proptest::bool::ANY,
        ) {
            let cfg = cfg();
            let f = cfg.carrier_hz - cfg.bandwidth_hz / 2.0 + frac * cfg.bandwidth_hz;
            let arch = if quantized {
                AnalogArchitecture::double_layer(8, 4, 6, 3)
                    .with_delay_step(DelayStep::Step(cfg.carrier_period()))
                    .with_ps_bits(4)
            } else {
                AnalogArchitecture::double_layer(8, 4, 0, 0)
            };
            let g = gain_brute_force(&arch, &cfg, theta0, f).unwrap();
            prop_assert!(g <= 1.0 + 1e-12);
            let c = gain_closed_form(arch.kind, &cfg, theta0, f);
            prop_assert!(c <= 1.0 + 1e-12);
        }
    }
}
