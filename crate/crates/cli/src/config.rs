//! Scenario configuration (TOML). Every table rejects unknown keys.

use std::f64::consts::PI;
use std::path::PathBuf;

use diracsea::checks::{CheckSettings, MacroOracleSpec};
use diracsea::dynamics::{EnsembleMode, InitialDistribution, IntegratorSpec, MeasurementSpec};
use diracsea::fluct::{CaseOverride, FluctRegion};
use diracsea::fock::{InteractionKernel, Region};
use diracsea::modes::{Species, SpeciesTable};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Fluct,
    FluctSweep,
    Evolve,
    Ensemble,
    Measure,
    Check,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Fluct => "fluct",
            ScenarioKind::FluctSweep => "fluct-sweep",
            ScenarioKind::Evolve => "evolve",
            ScenarioKind::Ensemble => "ensemble",
            ScenarioKind::Measure => "measure",
            ScenarioKind::Check => "check",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Must match the subcommand when present.
    pub scenario: Option<ScenarioKind>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputConfig,
    pub lattice: Option<LatticeConfig>,
    pub species: Option<Vec<Species>>,
    pub sector: Option<SectorConfig>,
    pub kernel: Option<InteractionKernel>,
    pub integrator: Option<IntegratorSpec>,
    pub evolve: Option<EvolveConfig>,
    pub ensemble: Option<EnsembleConfig>,
    pub fluct: Option<FluctConfig>,
    pub sweep: Option<SweepConfig>,
    pub measure: Option<MeasurementSpec>,
    pub check: Option<CheckConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(default = "one")]
    pub dim: usize,
    pub box_len: f64,
    /// Largest integer wave number; sets the cut-off to `2 pi (K + 1/2) / L`.
    pub max_mode: Option<i64>,
    pub cutoff: Option<f64>,
}

impl LatticeConfig {
    pub fn resolved_cutoff(&self) -> Result<f64, String> {
        match (self.max_mode, self.cutoff) {
            (Some(k), None) => Ok(2.0 * PI * (k as f64 + 0.5) / self.box_len),
            (None, Some(c)) => Ok(c),
            _ => Err("[lattice]: give exactly one of `max_mode` and `cutoff`".into()),
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorConfig {
    #[serde(default = "one")]
    pub fermions: usize,
    #[serde(default = "one")]
    pub boson_dim: usize,
    #[serde(default = "unit")]
    pub omega: f64,
    pub state: StateConfig,
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateConfig {
    /// Every negative-energy mode filled.
    Sea,
    /// Positive-energy packet `exp(-w^2 (p - k0)^2 - i p c)` (one fermion).
    Packet { center: Vec<f64>, width: f64, momentum: Vec<f64> },
    /// One fermion in a superposition of modes; `[mode, re, im]` triples.
    Modes { amplitudes: Vec<(usize, f64, f64)> },
    /// A single occupation basis state.
    Occupation { modes: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    #[serde(default = "one")]
    pub slices: usize,
    /// Grid points per axis for field exports (one fermion only).
    pub grid_points: Option<usize>,
    /// Region for the `F_d(B)` expectation.
    pub region: Option<Region>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub trajectories: usize,
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    #[serde(default = "one")]
    pub slices: usize,
    #[serde(default = "fifty")]
    pub bins: usize,
    #[serde(default)]
    pub mode: EnsembleMode,
    pub jump_grid: Option<usize>,
    #[serde(default)]
    pub initial: InitialDistribution,
}

fn fifty() -> usize {
    50
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Graphite: fermion density 4.2e30 / m^3 at the cut-off 1e35 / m.
    Graphite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluctConfig {
    pub preset: Option<Preset>,
    /// 1/m.
    pub cutoff: Option<f64>,
    /// Defaults to the distinguishability ball when a density is given.
    pub region: Option<FluctRegion>,
    #[serde(default = "neutrino_mass")]
    pub neutrino_mass_ev: f64,
    #[serde(default = "tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub case: CaseOverride,
    /// Fermion density of a macroscopic body, 1/m^3.
    pub density: Option<f64>,
    /// Particles `m` of a macroscopic state for the mean and spread of `F_d(B)`.
    pub particles: Option<f64>,
    #[serde(default = "yes")]
    pub inside: bool,
}

fn neutrino_mass() -> f64 {
    0.1
}

fn tolerance() -> f64 {
    1e-6
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Ball radii in m.
    pub radii: Vec<f64>,
    /// Cut-offs in 1/m.
    pub cutoffs: Vec<f64>,
    #[serde(default = "neutrino_mass")]
    pub neutrino_mass_ev: f64,
    #[serde(default = "tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub case: CaseOverride,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default)]
    pub settings: CheckSettings,
    #[serde(default)]
    pub macro_state: MacroOracleSpec,
}

impl ScenarioConfig {
    pub fn species_table(&self) -> Result<SpeciesTable, String> {
        match &self.species {
            Some(v) => SpeciesTable::new(v.clone()).map_err(|e| format!("[[species]]: {e}")),
            None => Ok(SpeciesTable::single(1.0)),
        }
    }
}
