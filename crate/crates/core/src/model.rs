//! Target and projectile parameters, natural atomic scales, and regime classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;

/// Default ratio that operationalizes "≫".
pub const DEFAULT_THRESHOLD: f64 = 10.0;

/// Bound target: one light particle of mass `m` and charge `q` held at size `a₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomModel {
    pub electron_mass: f64,
    pub size: f64,
    pub binding_charge: f64,
    pub electron_charge: f64,
    /// Gap to the first excited level. `None` selects the estimate ħ²/(2m a₀²).
    pub gap: Option<f64>,
}

impl AtomModel {
    pub fn new(
        electron_mass: f64,
        size: f64,
        binding_charge: f64,
        electron_charge: f64,
        gap: Option<f64>,
    ) -> Result<Self> {
        let atom = Self {
            electron_mass,
            size,
            binding_charge,
            electron_charge,
            gap,
        };
        atom.validate()?;
        Ok(atom)
    }

    /// Hydrogen in atomic units with the 1s→2p gap of 3/8 hartree.
    pub fn hydrogen() -> Self {
        Self {
            electron_mass: 1.0,
            size: 1.0,
            binding_charge: 1.0,
            electron_charge: 1.0,
            gap: Some(units::HYDROGEN_GAP_HARTREE),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.electron_mass > 0.0) || !(self.size > 0.0) {
            return Err(Error::InvalidInput(
                "electron mass and size must be positive".into(),
            ));
        }
        if let Some(gap) = self.gap {
            if !(gap > 0.0) {
                return Err(Error::InvalidInput("gap must be positive".into()));
            }
            let estimate = self.gap_estimate();
            let ratio = gap / estimate;
            if !(0.1..=10.0).contains(&ratio) {
                return Err(Error::InvalidInput(format!(
                    "gap {gap} is not within a factor 10 of the estimate {estimate}"
                )));
            }
        }
        Ok(())
    }

    /// ħ²/(2m a₀²).
    pub fn gap_estimate(&self) -> f64 {
        1.0 / (2.0 * self.electron_mass * self.size * self.size)
    }

    pub fn gap(&self) -> f64 {
        self.gap.unwrap_or_else(|| self.gap_estimate())
    }

    /// Characteristic velocity v = ħ/(m a₀).
    pub fn velocity(&self) -> f64 {
        1.0 / (self.electron_mass * self.size)
    }
}

/// Heavy projectile moving at fixed speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectileModel {
    pub mass: f64,
    pub speed: f64,
    pub charge: f64,
}

impl ProjectileModel {
    pub fn new(mass: f64, speed: f64, charge: f64) -> Result<Self> {
        let p = Self {
            mass,
            speed,
            charge,
        };
        p.validate()?;
        Ok(p)
    }

    /// Projectile of mass `f·m` moving at `speed`.
    pub fn with_mass_ratio(
        atom: &AtomModel,
        mass_ratio: f64,
        speed: f64,
        charge: f64,
    ) -> Result<Self> {
        Self::new(mass_ratio * atom.electron_mass, speed, charge)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !(self.speed > 0.0) {
            return Err(Error::InvalidInput(
                "projectile mass and speed must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn mass_ratio(&self, atom: &AtomModel) -> f64 {
        self.mass / atom.electron_mass
    }

    pub fn momentum(&self) -> f64 {
        self.mass * self.speed
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.mass * self.speed * self.speed
    }

    /// Largest elastic momentum transfer off an infinitely heavy target, 2MV.
    pub fn max_transfer(&self) -> f64 {
        2.0 * self.momentum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomScales {
    pub velocity: f64,
    pub gap: f64,
    pub atomic_time: f64,
}

pub fn atom_scales(atom: &AtomModel) -> AtomScales {
    let gap = atom.gap();
    AtomScales {
        velocity: atom.velocity(),
        gap,
        atomic_time: 1.0 / gap,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeValues {
    pub electron_velocity: f64,
    pub projectile_speed: f64,
    pub electron_momentum: f64,
    pub projectile_momentum: f64,
    pub kinetic_energy: f64,
    pub gap: f64,
    /// Coulomb strength η = qq'/(ħV).
    pub coulomb_strength: f64,
    /// Angular momentum L = MV a₀/ħ at an impact parameter of one atomic size.
    pub angular_momentum: f64,
    /// Estimated deflection angle θ = η m v/(M V).
    pub deflection_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub sudden: bool,
    pub adiabatic: bool,
    pub probe_capable: bool,
    pub protective: bool,
    pub semiclassical: bool,
    pub values: RegimeValues,
    pub threshold_factor: f64,
}

/// Evaluates the regime inequalities for a projectile hitting `atom`.
///
/// A strong inequality `x ≫ y` holds when `x > threshold_factor · y`.
pub fn classify_regime(
    atom: &AtomModel,
    proj: &ProjectileModel,
    threshold_factor: f64,
) -> Result<RegimeReport> {
    if !(threshold_factor >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "threshold factor {threshold_factor} must be at least 1"
        )));
    }
    let v = atom.velocity();
    let big_v = proj.speed;
    let mv = atom.electron_mass * v;
    let big_mv = proj.momentum();
    let ke = proj.kinetic_energy();
    let gap = atom.gap();
    let eta = (atom.electron_charge * proj.charge).abs() / big_v;
    let l = big_mv * atom.size;
    let theta = eta * mv / big_mv;

    let sudden = big_v > threshold_factor * v;
    let adiabatic = v > threshold_factor * big_v;
    let probe_capable = big_mv > threshold_factor * mv;
    let protective = ke <= gap && probe_capable;
    let semiclassical = eta > threshold_factor && l > threshold_factor && theta < 1.0;

    Ok(RegimeReport {
        sudden,
        adiabatic,
        probe_capable,
        protective,
        semiclassical,
        values: RegimeValues {
            electron_velocity: v,
            projectile_speed: big_v,
            electron_momentum: mv,
            projectile_momentum: big_mv,
            kinetic_energy: ke,
            gap,
            coulomb_strength: eta,
            angular_momentum: l,
            deflection_estimate: theta,
        },
        threshold_factor,
    })
}
