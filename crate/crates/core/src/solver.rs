//! End-to-end solver: analog construction, alternating digital/reflection
//! optimization, rate metrics, and hardware/complexity accounting.
//!
//! The alternating loop fixes the analog stage (built once from the
//! infrastructure geometry), then repeats digital-precoder updates followed
//! by reflection coordinate sweeps. Every quantity is evaluated in a fixed
//! order, so a given input always produces bit-identical output.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::{generate_channels, ChannelRows, ChannelSet};
use crate::config::SystemConfig;
use crate::error::Result;
use crate::ris::{optimize_reflection, ReflectionConfig};
use crate::scenario::{GainModel, Scenario};
use crate::ttd::{build_analog_beamformer, AnalogArchitecture, AnalogBeamformer, SchemeKind};
use crate::wmmse::{matched_filter_init, wmmse_solve, DigitalBeamformer};

const LN_2: f64 = std::f64::consts::LN_2;

/// Projects antenna-domain channel rows through the per-subcarrier analog
/// matrices, yielding the reduced rows seen by the digital precoders.
pub fn project_rows(rows: &ChannelRows, analog: &[DMatrix<Complex64>]) -> ChannelRows {
    rows.iter()
        .zip(analog)
        .map(|(per_k, f)| per_k.iter().map(|h| h * f).collect())
        .collect()
}

/// Per-(subcarrier, user) signal-to-interference-plus-noise ratio
/// |ĥ_{m,k} d_{m,k}|² / (Σ_{j≠k} |ĥ_{m,k} d_{m,j}|² + σ²).
pub fn sinr(rows: &ChannelRows, d: &DigitalBeamformer, sigma2: f64) -> Vec<Vec<f64>> {
    rows.iter()
        .zip(&d.vectors)
        .map(|(per_k, d_m)| {
            (0..per_k.len())
                .map(|k| {
                    let mut own = 0.0;
                    let mut interference = 0.0;
                    for (j, dv) in d_m.iter().enumerate() {
                        let p = (&per_k[k] * dv)[0].norm_sqr();
                        if j == k {
                            own = p;
                        } else {
                            interference += p;
                        }
                    }
                    own / (interference + sigma2)
                })
                .collect()
        })
        .collect()
}

/// Aggregate rate Σ_m Σ_k log₂(1 + γ_{m,k}) in bit/s/Hz.
pub fn sum_rate(sinrs: &[Vec<f64>]) -> f64 {
    sinrs
        .iter()
        .map(|per_k| per_k.iter().map(|g| g.ln_1p() / LN_2).sum::<f64>())
        .sum()
}

/// Sum rate divided by the number of subcarriers.
pub fn average_rate(sinrs: &[Vec<f64>]) -> f64 {
    if sinrs.is_empty() {
        0.0
    } else {
        sum_rate(sinrs) / sinrs.len() as f64
    }
}

/// Sum rate of a precoder set on reduced channel rows.
pub fn evaluate_rate(rows: &ChannelRows, d: &DigitalBeamformer, sigma2: f64) -> f64 {
    sum_rate(&sinr(rows, d, sigma2))
}

/// Iteration budgets and tolerances of the alternating solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Outer alternating rounds.
    pub max_outer: usize,
    /// Digital-precoder iterations per round.
    pub wmmse_iters: usize,
    /// Reflection sweeps per round.
    pub ris_passes: usize,
    /// Relative-change early exit for the digital iterations.
    pub wmmse_tol: f64,
    /// Relative-change early exit for the outer rounds.
    pub outer_tol: f64,
    /// Reflection alphabet resolution in bits.
    pub ris_bits: u32,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_outer: 10,
            wmmse_iters: 5,
            ris_passes: 4,
            wmmse_tol: 1e-4,
            outer_tol: 1e-4,
            ris_bits: 1,
        }
    }
}

/// Delay-line counts, control bits, and worst-case delay spans of an analog
/// scheme. Spans are upper bounds of the ideal assignment at |sinθ₀| = 1,
/// in carrier periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardwareReport {
    /// Large-range delay lines across all RF chains.
    pub large_ttds: usize,
    /// All delay lines across all RF chains.
    pub total_ttds: usize,
    /// Total delay control bits across all RF chains.
    pub total_delay_bits: usize,
    /// Span of the large-range layer, in carrier periods.
    pub large_range_tc: f64,
    /// Span of the short-range layer, in carrier periods (two-layer only).
    pub small_range_tc: Option<f64>,
}

/// Closed-form hardware budget of an analog scheme.
pub fn hardware_report(kind: SchemeKind, cfg: &SystemConfig) -> HardwareReport {
    let n = cfg.bs_antennas;
    let chains = cfg.rf_chains;
    let ratio = cfg.antenna_delay() / cfg.carrier_period();
    match kind {
        SchemeKind::PsOnly => HardwareReport {
            large_ttds: 0,
            total_ttds: 0,
            total_delay_bits: 0,
            large_range_tc: 0.0,
            small_range_tc: None,
        },
        SchemeKind::SingleLayer { subarrays, delay_bits } => {
            let sub = n / subarrays;
            HardwareReport {
                large_ttds: chains * subarrays,
                total_ttds: chains * subarrays,
                total_delay_bits: chains * subarrays * delay_bits as usize,
                large_range_tc: (subarrays - 1) as f64 * sub as f64 * ratio,
                small_range_tc: None,
            }
        }
        SchemeKind::DoubleLayer { second_count, first_per_second, second_bits, first_bits } => {
            let sub = n / (second_count * first_per_second);
            let first_total = second_count * first_per_second;
            HardwareReport {
                large_ttds: chains * second_count,
                total_ttds: chains * (second_count + first_total),
                total_delay_bits: chains
                    * (second_count * second_bits as usize
                        + first_total * first_bits as usize),
                large_range_tc: (n - sub * first_per_second) as f64 * ratio,
                small_range_tc: Some((first_per_second - 1) as f64 * sub as f64 * ratio),
            }
        }
    }
}

/// Leading-order operation counts of one solve, with the hardware budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityReport {
    /// Digital-precoder work: I_max · I_d · M · N².
    pub wmmse_ops: u64,
    /// Reflection-search work: I_max · I_o · 2^Q · K · N · R · N_RIS.
    pub ris_ops: u64,
    pub total_ops: u64,
    pub hardware: HardwareReport,
}

pub fn complexity_report(
    cfg: &SystemConfig,
    kind: SchemeKind,
    options: &SolveOptions,
) -> ComplexityReport {
    let n = cfg.bs_antennas as u64;
    let wmmse_ops = (options.max_outer * options.wmmse_iters * cfg.num_subcarriers) as u64
        * n
        * n;
    let ris_ops = (options.max_outer * options.ris_passes) as u64
        * (1u64 << options.ris_bits)
        * cfg.users as u64
        * n
        * (cfg.ris_count * cfg.ris_elements()) as u64;
    ComplexityReport {
        wmmse_ops,
        ris_ops,
        total_ops: wmmse_ops + ris_ops,
        hardware: hardware_report(kind, cfg),
    }
}

/// Outcome of the alternating loop from explicit starting points.
#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub d: DigitalBeamformer,
    pub reflection: ReflectionConfig,
    /// Sum rate at the start and after each outer round.
    pub rate_trace: Vec<f64>,
    pub wmmse_iterations: usize,
    pub ris_evaluations: u64,
}

/// Alternates digital-precoder updates and reflection sweeps from the given
/// starting points, with the analog stage fixed.
pub fn refine_joint(
    channels: &ChannelSet,
    analog: &[DMatrix<Complex64>],
    d_init: DigitalBeamformer,
    refl_init: ReflectionConfig,
    sigma2: f64,
    p_max: f64,
    options: &SolveOptions,
) -> Result<RefineOutcome> {
    let grams: Vec<DMatrix<Complex64>> = analog.iter().map(|f| f.adjoint() * f).collect();
    let mut d = d_init;
    let mut refl = refl_init;
    let mut rate = crate::ris::reflection_rate(channels, &refl, analog, &d, sigma2);
    let mut trace = vec![rate];
    let mut wmmse_iterations = 0usize;
    let mut ris_evaluations = 0u64;
    for _ in 0..options.max_outer {
        let rows = project_rows(&channels.effective_channel(&refl), analog);
        let (d_next, _, inner) =
            wmmse_solve(&rows, &grams, sigma2, p_max, d, options.wmmse_iters, options.wmmse_tol)?;
        d = d_next;
        wmmse_iterations += inner.len().saturating_sub(1);
        let search =
            optimize_reflection(&refl, channels, analog, &d, sigma2, options.ris_passes)?;
        refl = search.config;
        ris_evaluations += search.evaluations;
        let next = search.rate;
        trace.push(next);
        let change = (next - rate).abs() / rate.abs().max(f64::MIN_POSITIVE);
        rate = next;
        if change < options.outer_tol {
            break;
        }
    }
    Ok(RefineOutcome { d, reflection: refl, rate_trace: trace, wmmse_iterations, ris_evaluations })
}

/// Full solver output.
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Analog matrix per subcarrier.
    pub analog: Vec<DMatrix<Complex64>>,
    pub d: DigitalBeamformer,
    pub reflection: ReflectionConfig,
    /// Sum rate at initialization and after each outer round.
    pub rate_trace: Vec<f64>,
    pub wmmse_iterations: usize,
    pub ris_evaluations: u64,
    /// Final aggregate rate over all subcarriers.
    pub sum_rate: f64,
    /// Final rate divided by the subcarrier count.
    pub per_subcarrier_rate: f64,
    pub hardware: HardwareReport,
}

/// Builds the analog stage from the infrastructure geometry, generates
/// channels with the given gain model, and runs the alternating loop.
pub fn joint_optimize(
    scenario: &Scenario,
    cfg: &SystemConfig,
    arch: &AnalogArchitecture,
    model: &GainModel,
    options: &SolveOptions,
) -> Result<SolveResult> {
    let channels = generate_channels(scenario, cfg, model)?;
    joint_optimize_with_channels(scenario, cfg, arch, &channels, options)
}

/// As [`joint_optimize`], but reusing an existing channel realization.
pub fn joint_optimize_with_channels(
    scenario: &Scenario,
    cfg: &SystemConfig,
    arch: &AnalogArchitecture,
    channels: &ChannelSet,
    options: &SolveOptions,
) -> Result<SolveResult> {
    let beamformer = build_steered_beamformer(scenario, cfg, arch)?;
    let analog: Vec<DMatrix<Complex64>> =
        cfg.subcarrier_frequencies().iter().map(|&f| beamformer.compose(f)).collect();
    let grams: Vec<DMatrix<Complex64>> = analog.iter().map(|f| f.adjoint() * f).collect();
    let refl = ReflectionConfig::all_ones(cfg.total_ris_elements(), options.ris_bits)?;
    let rows = project_rows(&channels.effective_channel(&refl), &analog);
    let d = matched_filter_init(&rows, &grams, cfg.max_power_w);
    let outcome =
        refine_joint(channels, &analog, d, refl, cfg.noise_w, cfg.max_power_w, options)?;
    let rows = project_rows(&channels.effective_channel(&outcome.reflection), &analog);
    let gammas = sinr(&rows, &outcome.d, cfg.noise_w);
    let total = sum_rate(&gammas);
    Ok(SolveResult {
        analog,
        d: outcome.d,
        reflection: outcome.reflection,
        rate_trace: outcome.rate_trace,
        wmmse_iterations: outcome.wmmse_iterations,
        ris_evaluations: outcome.ris_evaluations,
        sum_rate: total,
        per_subcarrier_rate: average_rate(&gammas),
        hardware: hardware_report(arch.kind, cfg),
    })
}

/// Analog beamformer steered at the surfaces' departure angles, one chain
/// per surface.
pub fn build_steered_beamformer(
    scenario: &Scenario,
    cfg: &SystemConfig,
    arch: &AnalogArchitecture,
) -> Result<AnalogBeamformer> {
    scenario.validate(cfg)?;
    let angles = scenario.chain_steering_angles()?;
    build_analog_beamformer(arch, cfg, &angles)
}
