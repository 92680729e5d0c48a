//! Feasibility arithmetic: how long a protective scattering run takes, and which
//! real projectiles satisfy the regime conditions.
//!
//! Laboratory units throughout (seconds, eV, MeV, fm).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;

/// Propagation length below which a beam is considered impractical, metres.
pub const MIN_PROPAGATION_M: f64 = 1.0;

/// Inputs of the duration estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetInput {
    /// f = M/m.
    pub mass_ratio: f64,
    /// ε, with σ_el ≈ ε·a₀².
    pub weakness: f64,
    /// η_d, with beam density n = η_d·a₀⁻³.
    pub density_fraction: f64,
    /// Number of scattering events N.
    pub samples: f64,
    /// Atomic period in seconds.
    pub atomic_time: f64,
}

impl BudgetInput {
    pub fn new(
        mass_ratio: f64,
        weakness: f64,
        density_fraction: f64,
        samples: f64,
        atomic_time: f64,
    ) -> Result<Self> {
        let input = Self {
            mass_ratio,
            weakness,
            density_fraction,
            samples,
            atomic_time,
        };
        input.validate()?;
        Ok(input)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass_ratio", self.mass_ratio),
            ("weakness", self.weakness),
            ("density_fraction", self.density_fraction),
            ("samples", self.samples),
            ("atomic_time", self.atomic_time),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.weakness > 1.0 {
            return Err(Error::InvalidInput("weakness ε must not exceed 1".into()));
        }
        if self.density_fraction > 1.0 {
            return Err(Error::InvalidInput(
                "density fraction η_d must not exceed 1 (n ≤ a₀⁻³)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDuration {
    /// Lower bound on the run time, seconds. Reported as the duration itself.
    pub seconds: f64,
    /// Largest admissible V/v, equal to 1/√f.
    pub max_speed_ratio: f64,
}

/// τ = N·√f·t_atom/(η_d·ε).
pub fn experiment_duration(input: &BudgetInput) -> Result<ExperimentDuration> {
    input.validate()?;
    let root_f = input.mass_ratio.sqrt();
    Ok(ExperimentDuration {
        seconds: input.samples * root_f * input.atomic_time
            / (input.density_fraction * input.weakness),
        max_speed_ratio: 1.0 / root_f,
    })
}

/// A projectile scattering off a target whose structure is probed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetParameters {
    pub name: String,
    pub projectile_mass_mev: f64,
    pub kinetic_energy_ev: f64,
    /// Excitation gap of the target, eV.
    pub gap_ev: f64,
    /// Mass of the recoiling target, MeV.
    pub target_mass_mev: f64,
    /// Size of the probed structure, fm.
    pub target_radius_fm: f64,
    /// Mean lifetime at rest; `None` for stable projectiles.
    pub lifetime_s: Option<f64>,
    /// Ratio that stands for "Δp·R ≫ 1".
    pub threshold: f64,
    #[serde(default)]
    pub caveats: Vec<String>,
}

impl PresetParameters {
    pub fn muon() -> Self {
        let gap_ev = units::hartree_to_ev(units::HYDROGEN_GAP_HARTREE);
        Self {
            name: "muon".into(),
            projectile_mass_mev: units::MUON_MASS_MEV,
            kinetic_energy_ev: gap_ev,
            gap_ev,
            target_mass_mev: units::HYDROGEN_ATOM_MASS_MEV,
            target_radius_fm: units::BOHR_M * 1e15,
            lifetime_s: Some(units::MUON_LIFETIME_S),
            threshold: crate::model::DEFAULT_THRESHOLD,
            caveats: vec![
                "slow muons decay within their propagation length; intense monochromatic \
                 collimated beams at this energy are not available"
                    .into(),
            ],
        }
    }

    pub fn neutron() -> Self {
        let gap_ev = units::hartree_to_ev(units::HYDROGEN_GAP_HARTREE);
        Self {
            name: "neutron".into(),
            projectile_mass_mev: units::NEUTRON_MASS_MEV,
            kinetic_energy_ev: gap_ev,
            gap_ev,
            target_mass_mev: units::HYDROGEN_ATOM_MASS_MEV,
            target_radius_fm: units::BOHR_M * 1e15,
            lifetime_s: Some(units::NEUTRON_LIFETIME_S),
            threshold: crate::model::DEFAULT_THRESHOLD,
            caveats: vec![
                "low-energy neutrons interact strongly with nuclei; nuclear scattering can mask \
                 the electron-neutron signal"
                    .into(),
            ],
        }
    }

    /// 200 GeV WIMP at 10⁻³c on a nucleus with A = 200.
    pub fn wimp() -> Self {
        let mass = 200e3;
        let beta: f64 = 1e-3;
        let a = 200.0;
        Self {
            name: "wimp".into(),
            projectile_mass_mev: mass,
            kinetic_energy_ev: 0.5 * mass * beta * beta * 1e6,
            gap_ev: units::NUCLEAR_EXCITATION_MEV * 1e6,
            target_mass_mev: a * units::AMU_MEV,
            target_radius_fm: units::nuclear_radius_fm(a),
            lifetime_s: None,
            threshold: 5.0,
            caveats: vec![
                "kinetic energy compared with a representative nuclear excitation of 1 MeV".into(),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("projectile_mass_mev", self.projectile_mass_mev),
            ("kinetic_energy_ev", self.kinetic_energy_ev),
            ("gap_ev", self.gap_ev),
            ("target_mass_mev", self.target_mass_mev),
            ("target_radius_fm", self.target_radius_fm),
            ("threshold", self.threshold),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if let Some(t) = self.lifetime_s {
            if !(t > 0.0) {
                return Err(Error::InvalidInput("lifetime must be positive".into()));
            }
        }
        Ok(())
    }
}

/// One inequality `lhs relation rhs` with its verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub name: String,
    pub lhs: f64,
    pub relation: String,
    pub rhs: f64,
    pub pass: bool,
}

impl Inequality {
    fn at_most(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            relation: "<=".into(),
            rhs,
            pass: lhs <= rhs,
        }
    }

    fn at_least(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            relation: ">=".into(),
            rhs,
            pass: lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub preset: String,
    pub parameters: PresetParameters,
    /// V/c.
    pub beta: f64,
    pub kinetic_energy_ev: f64,
    /// 2μV with μ the projectile-target reduced mass, MeV/c.
    pub max_transfer_mev: f64,
    /// Δp_max·R/ħ.
    pub probe_product: f64,
    /// βγcτ in metres, for unstable projectiles.
    pub propagation_length_m: Option<f64>,
    pub protective: bool,
    pub probe_capable: bool,
    pub practical: bool,
    pub inequalities: Vec<Inequality>,
    pub caveats: Vec<String>,
}

/// Report for a named preset (`muon`, `neutron`, `wimp`).
pub fn feasibility_report(preset: &str) -> Result<FeasibilityReport> {
    let params = match preset.to_ascii_lowercase().as_str() {
        "muon" => PresetParameters::muon(),
        "neutron" => PresetParameters::neutron(),
        "wimp" => PresetParameters::wimp(),
        "custom" => {
            return Err(Error::InvalidInput(
                "the custom preset needs explicit parameters".into(),
            ))
        }
        _ => return Err(Error::UnknownPreset(preset.into())),
    };
    evaluate_preset(&params)
}

/// Evaluates the protective, probe and lifetime conditions for `params`.
pub fn evaluate_preset(params: &PresetParameters) -> Result<FeasibilityReport> {
    params.validate()?;
    let m = params.projectile_mass_mev;
    let beta = (2.0 * params.kinetic_energy_ev * 1e-6 / m).sqrt();
    let reduced = m * params.target_mass_mev / (m + params.target_mass_mev);
    let max_transfer = 2.0 * reduced * beta;
    let probe_product = max_transfer * params.target_radius_fm / units::HBAR_C_MEV_FM;
    let propagation = params.lifetime_s.map(|tau| {
        let gamma = 1.0 / (1.0 - beta * beta).sqrt();
        beta * gamma * units::C_M_PER_S * tau
    });

    let mut inequalities = vec![
        Inequality::at_most(
            "protective: KE <= gap [eV]",
            params.kinetic_energy_ev,
            params.gap_ev,
        ),
        Inequality::at_least(
            "probe: dp_max*R/hbar >= threshold",
            probe_product,
            params.threshold,
        ),
    ];
    if let Some(len) = propagation {
        inequalities.push(Inequality::at_least(
            "propagation: beta*gamma*c*tau >= 1 m",
            len,
            MIN_PROPAGATION_M,
        ));
    }
    let protective = inequalities[0].pass;
    let probe_capable = inequalities[1].pass;
    let practical = inequalities.get(2).is_none_or(|i| i.pass);

    let mut caveats = params.caveats.clone();
    if !protective {
        caveats.push("kinetic energy exceeds the gap: excitation is possible".into());
    }
    if !practical {
        caveats.push(format!(
            "impractical: the projectile travels only {:.3} m before decaying",
            propagation.unwrap_or(0.0)
        ));
    }

    Ok(FeasibilityReport {
        preset: params.name.clone(),
        parameters: params.clone(),
        beta,
        kinetic_energy_ev: params.kinetic_energy_ev,
        max_transfer_mev: max_transfer,
        probe_product,
        propagation_length_m: propagation,
        protective,
        probe_capable,
        practical,
        inequalities,
        caveats,
    })
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "preset: {}", self.preset)?;
        writeln!(
            f,
            "projectile mass: {:.6e} MeV",
            self.parameters.projectile_mass_mev
        )?;
        writeln!(f, "beta: {:.6e}", self.beta)?;
        writeln!(f, "kinetic energy: {:.6e} eV", self.kinetic_energy_ev)?;
        writeln!(
            f,
            "max momentum transfer: {:.6e} MeV/c",
            self.max_transfer_mev
        )?;
        writeln!(
            f,
            "target radius: {:.6e} fm",
            self.parameters.target_radius_fm
        )?;
        if let Some(len) = self.propagation_length_m {
            writeln!(f, "propagation length: {len:.6e} m")?;
        }
        for i in &self.inequalities {
            writeln!(
                f,
                "[{}] {}: {:.6e} {} {:.6e}",
                if i.pass { "pass" } else { "FAIL" },
                i.name,
                i.lhs,
                i.relation,
                i.rhs
            )?;
        }
        writeln!(
            f,
            "protective: {}, probe: {}, practical: {}",
            self.protective, self.probe_capable, self.practical
        )?;
        for c in &self.caveats {
            writeln!(f, "caveat: {c}")?;
        }
        Ok(())
    }
}
