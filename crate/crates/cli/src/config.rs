//! Run configuration: flat TOML sections, every field optional with a default.

use std::path::{Path, PathBuf};

use pscat_core::budget::PresetParameters;
use pscat_core::formfactor::InteractionModel;
use pscat_core::model::{AtomModel, ProjectileModel, DEFAULT_THRESHOLD};
use pscat_core::scattering::{BornConfig, ImpactSampling, RegimePolicy, SemiclassicalConfig};
use pscat_core::state::{default_grid, RadialBoundState, DEFAULT_NORM_TOLERANCE};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub atom: AtomSection,
    pub projectile: ProjectileSection,
    pub born: BornSection,
    pub semiclassical: SemiclassicalSection,
    pub impulsive: ImpulsiveSection,
    pub reconstruct: ReconstructSection,
    pub pointer: PointerSection,
    pub budget: BudgetSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub custom: Option<PresetParameters>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub format: OutputFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Also write gnuplot scripts next to the plot-data files.
    pub plot: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    #[default]
    Hydrogen,
    Gaussian,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomSection {
    pub electron_mass: f64,
    pub size: f64,
    pub binding_charge: f64,
    pub electron_charge: f64,
    /// Excitation gap in hartree; absent selects ħ²/(2m a₀²).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    pub state: StateKind,
    /// Width of the Gaussian state, a₀.
    pub state_width: f64,
    /// Two-column `r ψ` text file for `state = "file"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_file: Option<PathBuf>,
}

impl Default for AtomSection {
    fn default() -> Self {
        let h = AtomModel::hydrogen();
        Self {
            electron_mass: h.electron_mass,
            size: h.size,
            binding_charge: h.binding_charge,
            electron_charge: h.electron_charge,
            gap: h.gap,
            state: StateKind::Hydrogen,
            state_width: 1.0,
            state_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectileSection {
    /// f = M/m.
    pub mass_ratio: f64,
    /// Speed in atomic units.
    pub speed: f64,
    pub charge: f64,
}

impl Default for ProjectileSection {
    fn default() -> Self {
        Self {
            mass_ratio: 1e4,
            speed: 0.005,
            charge: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    #[default]
    Contact,
    Coulomb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BornSection {
    pub interaction: InteractionKind,
    /// Contact strength; the Coulomb coupling is the product of the charges.
    pub strength: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub events: u64,
    pub threshold: f64,
}

impl Default for BornSection {
    fn default() -> Self {
        Self {
            interaction: InteractionKind::Contact,
            strength: 1.0,
            q_min: 0.1,
            q_max: 12.0,
            events: 100_000,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingKind {
    #[default]
    LogUniform,
    Area,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    #[default]
    Warn,
    Strict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemiclassicalSection {
    /// Projectile charge in this mode; replaces `projectile.charge`.
    pub probe_charge: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub sampling: SamplingKind,
    pub policy: PolicyKind,
    pub events: u64,
    pub threshold: f64,
}

impl Default for SemiclassicalSection {
    fn default() -> Self {
        Self {
            probe_charge: 0.1,
            b_min: 0.1,
            b_max: 10.0,
            sampling: SamplingKind::LogUniform,
            policy: PolicyKind::Warn,
            events: 1_000,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpulsiveSection {
    pub runs: u64,
    pub collisions: usize,
    pub fit_collisions: usize,
    /// Fixed |Δp| per collision; absent draws transfers from the Born sampler.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transfer: Option<f64>,
}

impl Default for ImpulsiveSection {
    fn default() -> Self {
        Self {
            runs: 10_000,
            collisions: 20,
            fit_collisions: 20,
            transfer: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<PathBuf>,
    /// Number of q-bins between `born.q_min` and `born.q_max`.
    pub bins: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub r_points: usize,
    pub inversion_r_min: f64,
    pub inversion_r_max: f64,
    pub inversion_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Range of the comparison with the configured state.
    pub truth_min: f64,
    pub truth_max: f64,
}

impl Default for ReconstructSection {
    fn default() -> Self {
        Self {
            events: None,
            bins: 64,
            r_min: 1e-3,
            r_max: 20.0,
            r_points: 600,
            inversion_r_min: 0.05,
            inversion_r_max: 15.0,
            inversion_points: 120,
            lambda: None,
            truth_min: 0.1,
            truth_max: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointerSection {
    pub dimension: usize,
    pub gap: f64,
    pub trials: u64,
    pub pointer_center: f64,
    pub pointer_width: f64,
    pub duration: f64,
}

impl Default for PointerSection {
    fn default() -> Self {
        Self {
            dimension: 4,
            gap: 1.0,
            trials: 100_000,
            pointer_center: 0.0,
            pointer_width: 0.1,
            duration: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub mass_ratio: f64,
    pub weakness: f64,
    pub density_fraction: f64,
    pub samples: f64,
    /// Seconds.
    pub atomic_time: f64,
}

impl Default for BudgetSection {
    fn default() -> Self {
        Self {
            preset: None,
            mass_ratio: 1e4,
            weakness: 1e-3,
            density_fraction: 1e-6,
            samples: 1e3,
            atomic_time: 1e-16,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::config(e.to_string()))
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> Result<String, CliError> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    pub fn atom(&self) -> Result<AtomModel, CliError> {
        let a = &self.atom;
        Ok(AtomModel::new(
            a.electron_mass,
            a.size,
            a.binding_charge,
            a.electron_charge,
            a.gap,
        )?)
    }

    pub fn projectile(&self, charge: f64) -> Result<ProjectileModel, CliError> {
        let p = &self.projectile;
        Ok(ProjectileModel::with_mass_ratio(
            &self.atom()?,
            p.mass_ratio,
            p.speed,
            charge,
        )?)
    }

    pub fn state(&self) -> Result<RadialBoundState, CliError> {
        let grid: Vec<f64> = default_grid().iter().map(|r| r * self.atom.size).collect();
        match self.atom.state {
            StateKind::Hydrogen => {
                let a = self.atom.size;
                let raw: Vec<f64> = grid.iter().map(|r| (-r / a).exp()).collect();
                Ok(pscat_core::state::normalize_radial(&raw, grid)?)
            }
            StateKind::Gaussian => Ok(RadialBoundState::gaussian(grid, self.atom.state_width)?),
            StateKind::File => {
                let path =
                    self.atom.state_file.as_ref().ok_or_else(|| {
                        CliError::config("state = \"file\" needs atom.state_file")
                    })?;
                let f = std::fs::File::open(path)
                    .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
                Ok(RadialBoundState::read_text(
                    std::io::BufReader::new(f),
                    DEFAULT_NORM_TOLERANCE,
                )?)
            }
        }
    }

    pub fn interaction(&self) -> InteractionModel {
        match self.born.interaction {
            InteractionKind::Contact => InteractionModel::Contact {
                strength: self.born.strength,
            },
            InteractionKind::Coulomb => InteractionModel::Coulomb {
                coupling: self.atom.electron_charge * self.projectile.charge,
            },
        }
    }

    pub fn born(&self) -> Result<BornConfig, CliError> {
        let b = &self.born;
        Ok(BornConfig {
            interaction: self.interaction(),
            q_min: b.q_min,
            q_max: b.q_max,
            events: b.events,
            seed: self.run.seed,
            threshold_factor: b.threshold,
            ..BornConfig::new(
                self.atom()?,
                self.projectile(self.projectile.charge)?,
                self.state()?,
            )
        })
    }

    pub fn semiclassical(&self) -> Result<SemiclassicalConfig, CliError> {
        let s = &self.semiclassical;
        Ok(SemiclassicalConfig {
            b_min: s.b_min,
            b_max: s.b_max,
            sampling: match s.sampling {
                SamplingKind::LogUniform => ImpactSampling::LogUniform,
                SamplingKind::Area => ImpactSampling::Area,
            },
            events: s.events,
            seed: self.run.seed,
            threshold_factor: s.threshold,
            policy: match s.policy {
                PolicyKind::Warn => RegimePolicy::Warn,
                PolicyKind::Strict => RegimePolicy::Strict,
            },
            ..SemiclassicalConfig::new(
                self.atom()?,
                self.projectile(s.probe_charge)?,
                self.state()?,
            )
        })
    }
}
