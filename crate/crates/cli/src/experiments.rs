//! The experiment runners: parameter sweeps over the core toolkit with
//! seeded Monte-Carlo trials, emitting CSV series and a JSON manifest.
//!
//! Determinism contract: given the same spec and master seed, output files
//! are byte-identical regardless of thread count. Trials run concurrently,
//! but each draws from its own derived seed and results are reduced in
//! trial order.

use std::f64::consts::{FRAC_PI_4, TAU};
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use thzbeam::channel::{generate_channels, los_bs_user, ChannelRows};
use thzbeam::ris::reflection_rate;
use thzbeam::scenario::{GainModel, Scenario};
use thzbeam::solver::{
    self, build_steered_beamformer, hardware_report, joint_optimize_with_channels, project_rows,
    SolveOptions,
};
use thzbeam::ttd::{
    bit_ratio, gain_brute_force, gain_closed_form, phase_error, required_bits, steering_weights,
    wrap_phase, AnalogArchitecture, BitRequirement,
};
use thzbeam::wmmse::{matched_filter_init, wmmse_solve};
use thzbeam::{SchemeKind, SystemConfig};

use crate::config::{self, scheme_double, scheme_ps, scheme_single, ExperimentFile, SchemeSection};
use crate::error::{CliError, Result};
use crate::output::{version_string, write_atomic, Csv, Manifest};
use crate::seed::derive_seed;

/// Command-line overrides applied on top of the spec file.
#[derive(Debug, Default, Clone)]
pub struct RunSettings {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub trials: Option<usize>,
    pub threads: Option<usize>,
}

struct Ctx<'a> {
    file: &'a ExperimentFile,
    cfg: SystemConfig,
    tag: u64,
    seed: u64,
    trials: usize,
}

/// Runs the experiment named by the spec file and returns the written paths
/// (CSV files first, manifest last).
pub fn run_experiment(file: &ExperimentFile, overrides: &RunSettings) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let tag = config::experiment_tag(&file.experiment.id)?;
    let cfg = file.system.resolve()?;
    let seed = overrides.seed.or(file.experiment.seed).unwrap_or(42);
    let trials = overrides.trials.or(file.experiment.trials).unwrap_or(100);
    let out_dir = overrides
        .out
        .clone()
        .or_else(|| file.experiment.out.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let ctx = Ctx { file, cfg, tag, seed, trials };

    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(overrides.threads.unwrap_or(0)).build()?;
    let tables = pool.install(|| dispatch(&ctx))?;

    let mut written = Vec::new();
    for (name, csv) in &tables {
        let path = out_dir.join(format!("{name}.csv"));
        write_atomic(&path, &csv.render())?;
        written.push(path);
    }
    let manifest = Manifest {
        experiment: file.experiment.id.clone(),
        version: version_string(),
        master_seed: seed,
        trials,
        threads: overrides.threads,
        wall_time_ms: start.elapsed().as_millis(),
        outputs: written.iter().map(|p| p.display().to_string()).collect(),
        config: serde_json::to_value(file)?,
    };
    let manifest_path = out_dir.join(format!("{}_manifest.json", file.experiment.id));
    manifest.write(&manifest_path)?;
    written.push(manifest_path);
    Ok(written)
}

fn dispatch(ctx: &Ctx) -> Result<Vec<(String, Csv)>> {
    match ctx.file.experiment.id.as_str() {
        "phase_compensation" => phase_compensation(ctx),
        "phase_error" => phase_error_table(ctx),
        "gain_vs_subcarrier" => gain_vs_subcarrier(ctx),
        "rate_vs_power" => rate_vs_power(ctx),
        "inner_convergence" => inner_convergence(ctx),
        "outer_convergence" => outer_convergence(ctx),
        "hardware_table" => hardware_table(ctx),
        "rate_vs_ris_elements" => rate_vs_ris_elements(ctx),
        "rate_vs_csi_error" => rate_vs_csi_error(ctx),
        other => Err(CliError::Config(format!("experiment.id: unknown experiment {other:?}"))),
    }
}

impl Ctx<'_> {
    fn theta(&self) -> f64 {
        self.file.sweep.theta.unwrap_or(FRAC_PI_4)
    }

    fn options(&self) -> SolveOptions {
        let sweep = &self.file.sweep;
        let mut o = SolveOptions::default();
        if let Some(v) = sweep.max_outer {
            o.max_outer = v;
        }
        if let Some(v) = sweep.wmmse_iters {
            o.wmmse_iters = v;
        }
        if let Some(v) = sweep.ris_passes {
            o.ris_passes = v;
        }
        if let Some(v) = sweep.ris_bits {
            o.ris_bits = v;
        }
        o
    }

    fn schemes(&self, defaults: &[SchemeSection]) -> Result<Vec<(String, AnalogArchitecture)>> {
        let list = self.file.resolve_schemes(&self.cfg, defaults)?;
        for (i, (a, _)) in list.iter().enumerate() {
            if list[..i].iter().any(|(b, _)| a == b) {
                return Err(CliError::Config(format!(
                    "schemes: duplicate label {a:?}; set distinct `label` fields"
                )));
            }
        }
        Ok(list)
    }

    fn require_trials(&self) -> Result<usize> {
        if self.trials == 0 {
            return Err(CliError::Config("experiment.trials: at least one trial required".into()));
        }
        Ok(self.trials)
    }

    /// Scenario with per-trial user positions, drawn uniformly over the
    /// configured disk.
    fn scenario_for_trial(&self, trial: usize) -> Result<Scenario> {
        self.scenario_for_trial_with(&self.cfg, trial)
    }

    fn scenario_for_trial_with(&self, cfg: &SystemConfig, trial: usize) -> Result<Scenario> {
        let section = &self.file.scenario;
        let center = section.user_center();
        let radius = section.user_radius();
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[self.tag, trial as u64, 1]));
        let user_positions = (0..cfg.users)
            .map(|_| {
                let u: f64 = rng.gen();
                let v: f64 = rng.gen();
                let r = radius * u.sqrt();
                let a = TAU * v;
                [center[0] + r * a.cos(), center[1] + r * a.sin(), center[2]]
            })
            .collect();
        Ok(Scenario {
            bs_position: section.bs_position(),
            ris_positions: section.ris_positions(cfg)?,
            user_positions,
        })
    }

    fn model_for_trial(&self, trial: usize) -> Result<GainModel> {
        self.file.scenario.gain_model(derive_seed(self.seed, &[self.tag, trial as u64, 2]))
    }

    fn stamp(&self, csv: &mut Csv) {
        csv.meta("experiment", &self.file.experiment.id)
            .meta("version", version_string())
            .meta("seed", self.seed);
    }
}

fn trio_ideal() -> Vec<SchemeSection> {
    vec![scheme_ps(), scheme_single(32, 0), scheme_double(8, 4, 0, 0)]
}

/// Signed wrap of a phase difference into (−π, π].
fn signed_phase(diff: f64) -> f64 {
    let w = wrap_phase(diff);
    if w > std::f64::consts::PI {
        w - TAU
    } else {
        w
    }
}

/// Per-antenna target vs applied phase of each front end across the band.
fn phase_compensation(ctx: &Ctx) -> Result<Vec<(String, Csv)>> {
    let theta = ctx.theta();
    let cfg = &ctx.cfg;
    let schemes = ctx.schemes(&trio_ideal())?;
    let mut csv = Csv::new(&["scheme", "antenna", "f_hz", "ideal_phase", "applied_phase", "error"]);
    ctx.stamp(&mut csv);
    csv.meta("theta", theta);
    for (label, arch) in &schemes {
        for &f in &cfg.subcarrier_frequencies() {
            let w = steering_weights(arch, cfg, theta, f);
            for n in 0..cfg.bs_antennas {
                let ideal =
                    wrap_phase(TAU * f * n as f64 * cfg.antenna_delay() * theta.sin());
                let applied = wrap_phase(w[n].arg());
                let err = signed_phase(applied - ideal);
                csv.row(&[label, &n, &f, &ideal, &applied, &err]);
            }
        }
    }
    Ok(vec![(ctx.file.experiment.id.clone(), csv)])
}

/// Closed-form residual phase error of each front end (ideal delays).
fn phase_error_table(ctx: &Ctx) -> Result<Vec<(String, Csv)>> {
    let theta = ctx.theta();
    let cfg = &ctx.cfg;
    let schemes = ctx.schemes(&trio_ideal())?;
    let mut csv = Csv::new(&["scheme", "antenna", "f_hz", "error"]);
    ctx.stamp(&mut csv);
    csv.meta("theta", theta);
    for (label, arch) in &schemes {
        for &f in &cfg.subcarrier_frequencies() {
            for n in 0..cfg.bs_antennas {
                let err = phase_error(&arch.kind, cfg, theta, f, n);
                csv.row(&[label, &n, &f, &err]);
            }
        }
    }
    Ok(vec![(ctx.file.experiment.id.clone(), csv)])
}

/// Normalized array gain per scheme and subcarrier, closed form and brute
/// force.
fn gain_vs_subcarrier(ctx: &Ctx) -> Result<Vec<(String, Csv)>> {
    let theta = ctx.theta();
    let cfg = &ctx.cfg;
    let schemes = ctx.schemes(&trio_ideal())?;
    let mut csv = Csv::new(&["scheme", "f_hz", "zeta", "gain_closed", "gain_brute"]);
    ctx.stamp(&mut csv);
    csv.meta("theta", theta);
    for (label, arch) in &schemes {
        for &f in &cfg.subcarrier_frequencies() {
            let zeta = cfg.relative_frequency(f);
            let closed = gain_closed_form(arch.kind, cfg, theta, f);
            let brute = gain_brute_force(arch, cfg, theta, f)?;
            csv.row(&[label, &f, &zeta, &closed, &brute]);
        }
    }
    Ok(vec![(ctx.file.experiment.id.clone(), csv)])
}

/// Average achievable rate versus transmit power, over the two-hop link or
/// the direct base-station→user link.
fn rate_vs_power(ctx: &Ctx) -> Result<Vec<(String, Csv)>> {
    let trials = ctx.require_trials()?;
    let powers = ctx
        .file
        .sweep
        .power_dbm
        .clone()
        .unwrap_or_else(|| vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]);
    let link = ctx.file.sweep.link.clone().unwrap_or_else(|| "ris".into());
    if link != "ris" && link != "direct" {
        return Err(CliError::Config(format!(
            "sweep.link: expected \"ris\" or \"direct\", got {link:?}"
        )));
    }
    let defaults = vec![
        SchemeSection {
            label: Some("double_8x4_ideal".into()),
            ..scheme_double(8, 4, 0, 0)
        },
        SchemeSection {
            label: Some("double_8x4_step1tc".into()),
            second_bits: Some(8),
            first_bits: Some(4),
            d_over_tc: Some(config::DelaySpec::Step(1.0)),
            ..scheme_double(8, 4, 8, 4)
        },
    ];
    let schemes = ctx.schemes(&defaults)?;
    let options = ctx.options();
    if link == "direct" && ctx.cfg.users != ctx.cfg.rf_chains {
        return Err(CliError::Config(
            "sweep.link: the direct link steers one chain per user and needs users == rf_chains"
                .into(),
        ));
    }

    // per trial → per power → per scheme: (sum rate, per-subcarrier rate)
    let per_trial: Vec<Vec<Vec<(f64, f64)>>> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<Vec<(f64, f64)>>> {
            let scenario = ctx.scenario_for_trial(t)?;
            let model = ctx.model_for_trial(t)?;
            let channels = if link == "ris" {
                Some(generate_channels(&scenario, &ctx.cfg, &model)?)
            } else {
                None
            };
            let direct_rows =
                if link == "direct" { Some(los_bs_user(&scenario, &ctx.cfg, &model)?) } else { None };
            let mut per_power = Vec::with_capacity(powers.len());
            for &p in &powers {
                let mut cfg_p = ctx.cfg.clone();
                cfg_p.max_power_w = thzbeam::dbm_to_watt(p);
                let mut per_scheme = Vec::with_capacity(schemes.len());
                for (_, arch) in &schemes {
                    let pair = match (&channels, &direct_rows) {
                        (Some(ch), _) => {
                            let res =
                                joint_optimize_with_channels(&scenario, &cfg_p, arch, ch, &options)?;
                            (res.sum_rate, res.per_subcarrier_rate)
                        }
                        (_, Some(rows)) => direct_rate(&scenario, &cfg_p, arch, rows, &options)?,
                        _ => unreachable!(),
                    };
                    per_scheme.push(pair);
                }
                per_power.push(per_scheme);
            }
            Ok(per_power)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = Csv::new(&["link", "scheme", "power_dbm", "mean_sum_rate", "mean_rate_per_subcarrier"]);
    ctx.stamp(&mut csv);
    csv.meta("trials", trials);
    for (pi, &p) in powers.iter().enumerate() {
        for (si, (label, _)) in schemes.iter().enumerate() {
            let mut sum = 0.0;
            let mut avg = 0.0;
            for trial in &per_trial {
                sum += trial[pi][si].0;
                avg += trial[pi][si].1;
            }
            sum /= trials as f64;
            avg /= trials as f64;
            csv.row(&[&link, label, &p, &sum, &avg]);
        }
    }
    Ok(vec![(ctx.file.experiment.id.clone(), csv)])
}

/// WMMSE rate trace across inner iterations with the analog stage and
/// reflections fixed at their initial values.
fn inner_convergence(ctx: &Ctx) -> Result<Vec<(String, Csv)>> {
    let trials = ctx.require_trials()?;
    let iterations = ctx.file.sweep.iterations.unwrap_or(20);
    let schemes = ctx.schemes(&[scheme_double(8, 4, 0, 0)])?;
    let options = ctx.options();

    let per_trial: Vec<Vec<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<Vec<f64>>> {
            let scenario = ctx.scenario_for_trial(t)?;
            let model = ctx.model_for_trial(t)?;
            let channels = generate_channels(&scenario, &ctx.cfg, &model)?;
            let mut per_scheme = Vec::with_capacity(schemes.len());
            for (_, arch) in &schemes {
                let bf = build_steered_beamformer(&scenario, &ctx.cfg, arch)?;
                let analog: Vec<_> =
                    ctx.cfg.subcarrier_frequencies().iter().map(|&f| bf.compose(f)).collect();
                let grams: Vec<_> = analog.iter().map(|f| f.adjoint() * f).collect();
                let refl = thzbeam::ReflectionConfig::all_ones(
                    ctx.cfg.total_ris_elements(),
                    options.ris_bits,
                )?;
                let rows = project_rows(&channels.effective_channel(&refl), &analog);
                let d = matched_filter_init(&rows, &grams, ctx.cfg.max_power_w);
                let (_, _, mut trace) = wmmse_solve(
                    &rows,
                    &grams,
                    ctx.cfg.noise_w,
                    ctx.cfg.max_power_w,
                    d,
                    iterations,
                    0.0,
                )?;
                let last = *trace.last().unwrap_or(&0.0);
                trace.resize(iterations + 1, last);
                per_scheme.push(trace);
            }
            Ok(per_scheme)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = Csv::new(&["scheme", "iteration", "mean_sum_rate"]);
    ctx.stamp(&mut csv);
    csv.meta("trials", trials);
    for (si, (label, _)) in schemes.iter().enumerate() {
        for i in 0..=iterations {
            let mean =
                per_trial.iter().map(|t| t[si][i]).sum::<f64>() / trials as f64;
            csv.row(&[label, &i, &mean]);
        }
    }
    Ok(vec![(ctx.file.experiment.id.clone(), csv)])
}

/// Rate trace across outer alternating rounds (no early exit).
fn outer_convergence(ctx: &Ctx) -> Result<Vec<(String, Csv)>> {
    let trials = ctx.require_trials()?;
    let rounds = ctx.file.sweep.iterations.unwrap_or(8);
    let schemes = ctx.schemes(&[scheme_double(8, 4, 0, 0)])?;
    let options = SolveOptions { max_outer: rounds, outer_tol: 0.0, ..ctx.options() };

    let per_trial: Vec<Vec<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<Vec<f64>>> {
            let scenario = ctx.scenario_for_trial(t)?;
            let model = ctx.model_for_trial(t)?;
            let channels = generate_channels(&scenario, &ctx.cfg, &model)?;
            let mut per_scheme = Vec::with_capacity(schemes.len());
            for (_, arch) in &schemes {
                let res =
                    joint_optimize_with_channels(&scenario, &ctx.cfg, arch, &channels, &options)?;
                per_scheme.push(res.rate_trace);
            }
            Ok(per_scheme)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = Csv::new(&["scheme", "round", "mean_sum_rate"]);
    ctx.stamp(&mut csv);
    csv.meta("trials", trials);
    for (si, (label, _)) in schemes.iter().enumerate() {
        for r in 0..=rounds {
            let mean = per_trial.iter().map(|t| t[si][r]).sum::<f64>() / trials as f64;
            csv.row(&[label, &r, &mean]);
        }
    }
    Ok(vec![(ctx.file.experiment.id.clone(), csv)])
}

/// Hardware budget rows plus measured rates for the standard three schemes.
fn hardware_table(ctx: &Ctx) -> Result<Vec<(String, Csv)>> {
    let trials = ctx.require_trials()?;
    let defaults = table_schemes();
    let schemes = ctx.schemes(&defaults)?;
    let options = ctx.options();

    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<f64>> {
            let scenario = ctx.scenario_for_trial(t)?;
            let model = ctx.model_for_trial(t)?;
            let channels = generate_channels(&scenario, &ctx.cfg, &model)?;
            schemes
                .iter()
                .map(|(_, arch)| {
                    joint_optimize_with_channels(&scenario, &ctx.cfg, arch, &channels, &options)
                        .map(|r| r.per_subcarrier_rate)
                        .map_err(CliError::from)
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = Csv::new(&[
        "scheme",
        "large_ttds",
        "total_ttds",
        "total_delay_bits",
        "large_range_tc",
        "small_range_tc",
        "mean_rate_per_subcarrier",
    ]);
    ctx.stamp(&mut csv);
    csv.meta("trials", trials);
    for (si, (label, arch)) in schemes.iter().enumerate() {
        let hw = hardware_report(arch.kind, &ctx.cfg);
        let mean = per_trial.iter().map(|t| t[si]).sum::<f64>() / trials as f64;
        let small = hw.small_range_tc.map_or(String::new(), |v| v.to_string());
        csv.row(&[
            label,
            &hw.large_ttds,
            &hw.total_ttds,
            &hw.total_delay_bits,
            &hw.large_range_tc,
            &small,
            &mean,
        ]);
    }
    Ok(vec![(ctx.file.experiment.id.clone(), csv)])
}

/// The standard hardware-comparison rows: one single-layer and two
/// double-layer front ends with their production bit widths on a
/// one-carrier-period delay grid.
pub fn table_schemes() -> Vec<SchemeSection> {
    vec![
        SchemeSection {
            d_over_tc: Some(config::DelaySpec::Step(1.0)),
            ..scheme_single(32, 8)
        },
        SchemeSection {
            d_over_tc: Some(config::DelaySpec::Step(1.0)),
            ..scheme_double(8, 4, 8, 4)
        },
        SchemeSection {
            d_over_tc: Some(config::DelaySpec::Step(1.0)),
            ..scheme_double(8, 2, 8, 4)
        },
    ]
}

/// Rate versus surface size (rows × cols per surface).
fn rate_vs_ris_elements(ctx: &Ctx) -> Result<Vec<(String, Csv)>> {
    let trials = ctx.require_trials()?;
    let sizes = ctx
        .file
        .sweep
        .ris_sizes
        .clone()
        .unwrap_or_else(|| vec![[2, 2], [4, 4], [6, 6], [8, 8]]);
    let schemes = ctx.schemes(&[scheme_double(8, 4, 0, 0)])?;
    let options = ctx.options();

    let per_trial: Vec<Vec<Vec<(f64, f64)>>> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<Vec<(f64, f64)>>> {
            let mut per_size = Vec::with_capacity(sizes.len());
            for &[rows, cols] in &sizes {
                let mut cfg_s = ctx.cfg.clone();
                cfg_s.ris_rows = rows;
                cfg_s.ris_cols = cols;
                cfg_s.validate().map_err(CliError::from)?;
                let scenario = ctx.scenario_for_trial_with(&cfg_s, t)?;
                let model = ctx.model_for_trial(t)?;
                let channels = generate_channels(&scenario, &cfg_s, &model)?;
                let mut per_scheme = Vec::with_capacity(schemes.len());
                for (_, arch) in &schemes {
                    let res =
                        joint_optimize_with_channels(&scenario, &cfg_s, arch, &channels, &options)?;
                    per_scheme.push((res.sum_rate, res.per_subcarrier_rate));
                }
                per_size.push(per_scheme);
            }
            Ok(per_size)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = Csv::new(&[
        "scheme",
        "rows",
        "cols",
        "elements",
        "mean_sum_rate",
        "mean_rate_per_subcarrier",
    ]);
    ctx.stamp(&mut csv);
    csv.meta("trials", trials);
    for (zi, &[rows, cols]) in sizes.iter().enumerate() {
        for (si, (label, _)) in schemes.iter().enumerate() {
            let mut sum = 0.0;
            let mut avg = 0.0;
            for t in &per_trial {
                sum += t[zi][si].0;
                avg += t[zi][si].1;
            }
            sum /= trials as f64;
            avg /= trials as f64;
            csv.row(&[label, &rows, &cols, &(rows * cols), &sum, &avg]);
        }
    }
    Ok(vec![(ctx.file.experiment.id.clone(), csv)])
}

/// Rate under imperfect channel knowledge: beamformers are optimized on a
/// perturbed channel set and evaluated on the true one.
fn rate_vs_csi_error(ctx: &Ctx) -> Result<Vec<(String, Csv)>> {
    let trials = ctx.require_trials()?;
    let deltas = ctx.file.sweep.deltas.clone().unwrap_or_else(|| vec![0.0, 0.1, 0.2, 0.3]);
    if let Some(&bad) = deltas.iter().find(|&&d| !(d.is_finite() && d >= 0.0)) {
        return Err(CliError::Config(format!(
            "sweep.deltas: error power must be non-negative, got {bad}"
        )));
    }
    let draws = ctx.file.sweep.draws_per_trial.unwrap_or(5).max(1);
    let schemes = ctx.schemes(&[scheme_double(8, 4, 0, 0)])?;
    let options = ctx.options();

    // per trial → per scheme → per delta: (mean rate, mean loss) over draws
    let per_trial: Vec<Vec<Vec<(f64, f64)>>> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<Vec<(f64, f64)>>> {
            let scenario = ctx.scenario_for_trial(t)?;
            let model = ctx.model_for_trial(t)?;
            let truth = generate_channels(&scenario, &ctx.cfg, &model)?;
            let mut per_scheme = Vec::with_capacity(schemes.len());
            for (_, arch) in &schemes {
                let perfect =
                    joint_optimize_with_channels(&scenario, &ctx.cfg, arch, &truth, &options)?;
                let perfect_rate = reflection_rate(
                    &truth,
                    &perfect.reflection,
                    &perfect.analog,
                    &perfect.d,
                    ctx.cfg.noise_w,
                );
                let mut per_delta = Vec::with_capacity(deltas.len());
                for (di, &delta) in deltas.iter().enumerate() {
                    let mut acc_rate = 0.0;
                    let mut acc_loss = 0.0;
                    for draw in 0..draws {
                        let err_seed = derive_seed(
                            ctx.seed,
                            &[ctx.tag, t as u64, 3 + di as u64, draw as u64],
                        );
                        let observed = truth.apply_csi_error(delta, err_seed);
                        let solved = joint_optimize_with_channels(
                            &scenario, &ctx.cfg, arch, &observed, &options,
                        )?;
                        let actual = reflection_rate(
                            &truth,
                            &solved.reflection,
                            &solved.analog,
                            &solved.d,
                            ctx.cfg.noise_w,
                        );
                        acc_rate += actual;
                        // Per-draw loss so a draw identical to the perfect
                        // solve contributes exactly 0.
                        acc_loss += (perfect_rate - actual) / perfect_rate;
                    }
                    per_delta.push((acc_rate / draws as f64, acc_loss / draws as f64));
                }
                per_scheme.push(per_delta);
            }
            Ok(per_scheme)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = Csv::new(&["scheme", "delta", "mean_sum_rate", "mean_loss"]);
    ctx.stamp(&mut csv);
    csv.meta("trials", trials);
    csv.meta("draws_per_trial", draws);
    for (si, (label, _)) in schemes.iter().enumerate() {
        for (di, &delta) in deltas.iter().enumerate() {
            let mut rate = 0.0;
            let mut loss = 0.0;
            for t in &per_trial {
                rate += t[si][di].0;
                loss += t[si][di].1;
            }
            rate /= trials as f64;
            loss /= trials as f64;
            csv.row(&[label, &delta, &rate, &loss]);
        }
    }
    Ok(vec![(ctx.file.experiment.id.clone(), csv)])
}

/// Digital-only solve over the direct base-station→user link (no surfaces):
/// the analog stage steers one chain at each user.
fn direct_rate(
    scenario: &Scenario,
    cfg: &SystemConfig,
    arch: &AnalogArchitecture,
    rows_antenna: &ChannelRows,
    options: &SolveOptions,
) -> Result<(f64, f64)> {
    let angles = (0..cfg.users)
        .map(|k| scenario.bs_user_angle(k))
        .collect::<thzbeam::Result<Vec<f64>>>()?;
    let bf = thzbeam::build_analog_beamformer(arch, cfg, &angles)?;
    let analog: Vec<_> = cfg.subcarrier_frequencies().iter().map(|&f| bf.compose(f)).collect();
    let grams: Vec<_> = analog.iter().map(|f| f.adjoint() * f).collect();
    let rows = project_rows(rows_antenna, &analog);
    let d = matched_filter_init(&rows, &grams, cfg.max_power_w);
    let budget = options.max_outer.max(1) * options.wmmse_iters;
    let (d, _, _) = wmmse_solve(
        &rows,
        &grams,
        cfg.noise_w,
        cfg.max_power_w,
        d,
        budget,
        options.wmmse_tol,
    )?;
    let gammas = solver::sinr(&rows, &d, cfg.noise_w);
    Ok((solver::sum_rate(&gammas), solver::average_rate(&gammas)))
}

/// One-shot gain query for the `gain` subcommand. Returns (closed form,
/// brute force).
pub fn gain_query(
    scheme: &str,
    theta: f64,
    f_hz: f64,
    subarrays: usize,
    second_count: usize,
    first_per_second: usize,
) -> Result<(f64, f64)> {
    let cfg = SystemConfig::reference();
    let arch = match scheme {
        "ps" => AnalogArchitecture::ps_only(),
        "single" => AnalogArchitecture::single_layer(subarrays, 0),
        "double" => AnalogArchitecture::double_layer(second_count, first_per_second, 0, 0),
        other => {
            return Err(CliError::Config(format!(
                "--scheme: unknown scheme {other:?}; expected ps, single, or double"
            )))
        }
    };
    let closed = gain_closed_form(arch.kind, &cfg, theta, f_hz);
    let brute = gain_brute_force(&arch, &cfg, theta, f_hz)?;
    Ok((closed, brute))
}

/// Text summary for the `bits` subcommand: minimum delay-control bits for a
/// single-layer and a double-layer front end, with the bit ratio.
pub fn bits_summary(
    cfg: &SystemConfig,
    theta: f64,
    subarrays: usize,
    second_count: usize,
    first_per_second: usize,
) -> Result<String> {
    let single = required_bits(
        SchemeKind::SingleLayer { subarrays, delay_bits: 0 },
        cfg,
        theta,
    );
    let double = required_bits(
        SchemeKind::DoubleLayer {
            second_count,
            first_per_second,
            second_bits: 0,
            first_bits: 0,
        },
        cfg,
        theta,
    );
    let mut out = String::new();
    out.push_str(&format!(
        "theta0 = {theta} rad (sin = {})\nantennas N = {}, delay grid D = T_c\n",
        theta.sin(),
        cfg.bs_antennas
    ));
    match (single, double) {
        (
            BitRequirement::Single { subarray_bound, delay_bits },
            BitRequirement::Double { first_bits, second_bits, .. },
        ) => {
            let single_total = subarrays as u32 * delay_bits;
            let double_total = second_count as u32 * second_bits
                + (second_count * first_per_second) as u32 * first_bits;
            let eta = bit_ratio(
                second_count,
                second_bits,
                first_per_second,
                first_bits,
                subarrays,
                delay_bits,
            );
            out.push_str(&format!(
                "single-layer U={subarrays}: P_s = {delay_bits} bits, per-chain total = {single_total} bits\n"
            ));
            out.push_str(&format!(
                "double-layer K_H={second_count}, K_L={first_per_second}: P_H = {second_bits} bits, P_L = {first_bits} bits, per-chain total = {double_total} bits\n"
            ));
            out.push_str(&format!(
                "delay-free subarray bound: {subarray_bound} antennas\n"
            ));
            out.push_str(&format!("bit ratio eta = {}%\n", eta * 100.0));
        }
        _ => {
            out.push_str("no delay lines needed: phase shifters alone hold the beam (broadside or degenerate geometry)\n");
        }
    }
    Ok(out)
}

/// Text table for the `table2` subcommand.
pub fn hardware_text(cfg: &SystemConfig) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>10} {:>10} {:>10} {:>14} {:>14}\n",
        "scheme", "large_ttds", "total_ttds", "total_bits", "large_range", "small_range"
    ));
    for section in table_schemes() {
        let (label, arch) = section.resolve(cfg)?;
        let hw = hardware_report(arch.kind, cfg);
        let small = hw
            .small_range_tc
            .map_or_else(|| "-".to_string(), |v| format!("[0, {v} Tc]"));
        out.push_str(&format!(
            "{:<12} {:>10} {:>10} {:>10} {:>14} {:>14}\n",
            label,
            hw.large_ttds,
            hw.total_ttds,
            hw.total_delay_bits,
            format!("[0, {} Tc]", hw.large_range_tc),
            small
        ));
    }
    Ok(out)
}
