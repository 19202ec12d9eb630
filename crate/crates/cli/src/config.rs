//! Experiment spec files: a TOML schema with sections `[experiment]`,
//! `[system]`, `[scheme]` (or repeated `[[schemes]]`), `[scenario]`, and
//! `[sweep]`. Everything except the experiment id has defaults matching the
//! reference configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thzbeam::scenario::GainModel;
use thzbeam::ttd::{AnalogArchitecture, DelayStep};
use thzbeam::{dbm_to_watt, SystemConfig};

use crate::error::{CliError, Result};

/// Experiment identifiers, in stable tag order (the tag feeds seed
/// derivation, so renumbering would change all random draws).
pub const EXPERIMENT_IDS: [&str; 9] = [
    "phase_compensation",
    "phase_error",
    "gain_vs_subcarrier",
    "rate_vs_power",
    "inner_convergence",
    "outer_convergence",
    "hardware_table",
    "rate_vs_ris_elements",
    "rate_vs_csi_error",
];

/// Stable numeric tag of an experiment id (position in [`EXPERIMENT_IDS`]).
pub fn experiment_tag(id: &str) -> Result<u64> {
    EXPERIMENT_IDS
        .iter()
        .position(|&x| x == id)
        .map(|p| p as u64)
        .ok_or_else(|| {
            CliError::Config(format!(
                "experiment.id: unknown experiment {id:?}; expected one of {}",
                EXPERIMENT_IDS.join(", ")
            ))
        })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub scheme: Option<SchemeSection>,
    #[serde(default)]
    pub schemes: Option<Vec<SchemeSection>>,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub id: String,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Overrides of the reference system parameters.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub carrier_hz: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub subcarriers: Option<usize>,
    pub antennas: Option<usize>,
    pub rf_chains: Option<usize>,
    pub users: Option<usize>,
    pub ris_count: Option<usize>,
    pub ris_rows: Option<usize>,
    pub ris_cols: Option<usize>,
    pub power_dbm: Option<f64>,
    pub noise_dbm: Option<f64>,
    pub antenna_spacing_m: Option<f64>,
}

impl SystemSection {
    pub fn resolve(&self) -> Result<SystemConfig> {
        let mut cfg = SystemConfig::reference();
        if let Some(v) = self.carrier_hz {
            cfg.carrier_hz = v;
        }
        if let Some(v) = self.bandwidth_hz {
            cfg.bandwidth_hz = v;
        }
        if let Some(v) = self.subcarriers {
            cfg.num_subcarriers = v;
        }
        if let Some(v) = self.antennas {
            cfg.bs_antennas = v;
        }
        if let Some(v) = self.rf_chains {
            cfg.rf_chains = v;
        }
        if let Some(v) = self.users {
            cfg.users = v;
        }
        if let Some(v) = self.ris_count {
            cfg.ris_count = v;
        }
        if let Some(v) = self.ris_rows {
            cfg.ris_rows = v;
        }
        if let Some(v) = self.ris_cols {
            cfg.ris_cols = v;
        }
        if let Some(v) = self.power_dbm {
            cfg.max_power_w = dbm_to_watt(v);
        }
        if let Some(v) = self.noise_dbm {
            cfg.noise_w = dbm_to_watt(v);
        }
        if let Some(v) = self.antenna_spacing_m {
            cfg.antenna_spacing_m = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Analog front-end description. `kind` is one of `ps`, `single`, `double`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub kind: String,
    pub label: Option<String>,
    /// Single-layer: delay lines per chain.
    pub subarrays: Option<usize>,
    /// Single-layer: bits per delay line.
    pub delay_bits: Option<u32>,
    /// Double-layer: large-range lines per chain.
    pub second_count: Option<usize>,
    /// Double-layer: short-range lines per large-range line.
    pub first_per_second: Option<usize>,
    pub second_bits: Option<u32>,
    pub first_bits: Option<u32>,
    /// Phase-shifter bits; 0 or absent = ideal phases.
    pub ps_bits: Option<u32>,
    /// Delay grid step in carrier periods, or the word "continuous".
    pub d_over_tc: Option<DelaySpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DelaySpec {
    Step(f64),
    Word(String),
}

impl SchemeSection {
    pub fn resolve(&self, cfg: &SystemConfig) -> Result<(String, AnalogArchitecture)> {
        let mut arch = match self.kind.as_str() {
            "ps" => AnalogArchitecture::ps_only(),
            "single" => AnalogArchitecture::single_layer(
                self.subarrays.unwrap_or(32),
                self.delay_bits.unwrap_or(0),
            ),
            "double" => AnalogArchitecture::double_layer(
                self.second_count.unwrap_or(8),
                self.first_per_second.unwrap_or(4),
                self.second_bits.unwrap_or(0),
                self.first_bits.unwrap_or(0),
            ),
            other => {
                return Err(CliError::Config(format!(
                    "scheme.kind: unknown scheme {other:?}; expected ps, single, or double"
                )))
            }
        };
        if let Some(bits) = self.ps_bits {
            arch = arch.with_ps_bits(bits);
        }
        match &self.d_over_tc {
            None => {}
            Some(DelaySpec::Step(step)) => {
                if *step <= 0.0 {
                    return Err(CliError::Config(format!(
                        "scheme.d_over_tc: step must be positive, got {step}"
                    )));
                }
                arch = arch.with_delay_step(DelayStep::Step(step * cfg.carrier_period()));
            }
            Some(DelaySpec::Word(w)) if w == "continuous" => {
                arch = arch.with_delay_step(DelayStep::Continuous);
            }
            Some(DelaySpec::Word(w)) => {
                return Err(CliError::Config(format!(
                    "scheme.d_over_tc: expected a number or \"continuous\", got {w:?}"
                )))
            }
        }
        arch.validate(cfg.bs_antennas)?;
        let label = self.label.clone().unwrap_or_else(|| default_label(&arch));
        Ok((label, arch))
    }
}

pub fn default_label(arch: &AnalogArchitecture) -> String {
    match arch.kind {
        thzbeam::SchemeKind::PsOnly => "ps".into(),
        thzbeam::SchemeKind::SingleLayer { subarrays, .. } => format!("single_{subarrays}"),
        thzbeam::SchemeKind::DoubleLayer { second_count, first_per_second, .. } => {
            format!("double_{second_count}x{first_per_second}")
        }
    }
}

/// Node placement and link-gain model. Users are drawn per trial, uniformly
/// over a disk in the horizontal plane.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub bs: Option<[f64; 3]>,
    pub ris: Option<Vec<[f64; 3]>>,
    pub user_center: Option<[f64; 3]>,
    pub user_radius: Option<f64>,
    /// One of `free_space`, `unit`, `gaussian`.
    pub gain_model: Option<String>,
}

impl ScenarioSection {
    pub fn bs_position(&self) -> [f64; 3] {
        self.bs.unwrap_or([50.0, 0.0, 3.0])
    }

    pub fn ris_positions(&self, cfg: &SystemConfig) -> Result<Vec<[f64; 3]>> {
        let positions = self.ris.clone().unwrap_or_else(|| {
            vec![
                [0.0, 80.0, 6.0],
                [0.0, 80.0, 8.0],
                [0.0, 85.0, 6.0],
                [0.0, 85.0, 8.0],
            ]
        });
        if positions.len() != cfg.ris_count {
            return Err(CliError::Config(format!(
                "scenario.ris: {} positions for {} surfaces",
                positions.len(),
                cfg.ris_count
            )));
        }
        Ok(positions)
    }

    pub fn user_center(&self) -> [f64; 3] {
        self.user_center.unwrap_or([0.0, 85.0, 0.0])
    }

    pub fn user_radius(&self) -> f64 {
        self.user_radius.unwrap_or(1.0)
    }

    /// The gain model; stochastic models take the given seed.
    pub fn gain_model(&self, seed: u64) -> Result<GainModel> {
        match self.gain_model.as_deref().unwrap_or("free_space") {
            "free_space" => Ok(GainModel::FreeSpace),
            "unit" => Ok(GainModel::UnitGain),
            "gaussian" => Ok(GainModel::ComplexGaussian { seed }),
            other => Err(CliError::Config(format!(
                "scenario.gain_model: unknown model {other:?}; expected free_space, unit, or gaussian"
            ))),
        }
    }
}

/// Experiment-specific sweep parameters; unused fields are ignored by
/// experiments that do not read them.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Transmit powers in dBm (rate_vs_power).
    pub power_dbm: Option<Vec<f64>>,
    /// `ris` (two-hop) or `direct` (base station to users, no surfaces).
    pub link: Option<String>,
    /// Channel-error powers (rate_vs_csi_error).
    pub deltas: Option<Vec<f64>>,
    /// Perturbation draws per trial (rate_vs_csi_error).
    pub draws_per_trial: Option<usize>,
    /// Surface grid sizes as [rows, cols] pairs (rate_vs_ris_elements).
    pub ris_sizes: Option<Vec<[usize; 2]>>,
    /// Design direction in radians (phase/gain experiments).
    pub theta: Option<f64>,
    /// Iteration budget (convergence experiments).
    pub iterations: Option<usize>,
    /// Outer-round override for solver-based experiments.
    pub max_outer: Option<usize>,
    /// Inner digital iterations per round.
    pub wmmse_iters: Option<usize>,
    /// Reflection sweeps per round.
    pub ris_passes: Option<usize>,
    /// Reflection alphabet bits.
    pub ris_bits: Option<u32>,
}

impl ExperimentFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read spec file {}: {e}", path.display()))
        })?;
        let file: ExperimentFile = toml::from_str(&text)?;
        experiment_tag(&file.experiment.id)?;
        if file.scheme.is_some() && file.schemes.is_some() {
            return Err(CliError::Config(
                "spec file sets both [scheme] and [[schemes]]; use one".into(),
            ));
        }
        Ok(file)
    }

    /// Scheme list: explicit `[[schemes]]`, else single `[scheme]`, else the
    /// per-experiment default.
    pub fn resolve_schemes(
        &self,
        cfg: &SystemConfig,
        defaults: &[SchemeSection],
    ) -> Result<Vec<(String, AnalogArchitecture)>> {
        let sections: Vec<SchemeSection> = if let Some(list) = &self.schemes {
            list.clone()
        } else if let Some(one) = &self.scheme {
            vec![one.clone()]
        } else {
            defaults.to_vec()
        };
        if sections.is_empty() {
            return Err(CliError::Config("no analog scheme configured".into()));
        }
        let mut out = Vec::with_capacity(sections.len());
        for s in &sections {
            out.push(s.resolve(cfg)?);
        }
        Ok(out)
    }
}

/// Convenience constructors for the built-in scheme defaults.
pub fn scheme_ps() -> SchemeSection {
    SchemeSection {
        kind: "ps".into(),
        label: None,
        subarrays: None,
        delay_bits: None,
        second_count: None,
        first_per_second: None,
        second_bits: None,
        first_bits: None,
        ps_bits: None,
        d_over_tc: None,
    }
}

pub fn scheme_single(subarrays: usize, delay_bits: u32) -> SchemeSection {
    SchemeSection {
        subarrays: Some(subarrays),
        delay_bits: Some(delay_bits),
        ..scheme_with_kind("single")
    }
}

pub fn scheme_double(
    second_count: usize,
    first_per_second: usize,
    second_bits: u32,
    first_bits: u32,
) -> SchemeSection {
    SchemeSection {
        second_count: Some(second_count),
        first_per_second: Some(first_per_second),
        second_bits: Some(second_bits),
        first_bits: Some(first_bits),
        ..scheme_with_kind("double")
    }
}

fn scheme_with_kind(kind: &str) -> SchemeSection {
    SchemeSection { kind: kind.into(), ..scheme_ps() }
}
