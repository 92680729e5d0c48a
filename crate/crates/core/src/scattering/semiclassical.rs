//! Deterministic deflection of a heavy projectile on a straight-line trajectory.
//!
//! Along the path z at impact parameter b the transverse force is Q(R)q'/R² · b/R with
//! R = √(z² + b²). Substituting z = b·sinh t gives
//!
//! ```text
//! Δp(b) = (q'b/V) ∫ Q(R) R⁻³ dz = (2q'/(V b)) ∫₀^∞ Q(b cosh t) sech²t dt,
//! ```
//!
//! which reduces to 2Qq'/(Vb) for a constant enclosed charge.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{classify_regime, AtomModel, ProjectileModel, RegimeReport, DEFAULT_THRESHOLD};
use crate::numeric::GaussLegendre;
use crate::rng::{stream, Domain};
use crate::state::RadialBoundState;

use super::event::{Regime, ScatteringEvent};

/// t beyond which sech²t < 1e-12.
const T_TRUNCATION: f64 = 14.508_657_738_524_219;
const PANELS: usize = 64;

/// Transverse momentum transfer for an enclosed-charge profile `enclosed(R)` that
/// is constant for R ≥ `extent`. Positive values point away from the target.
pub fn deflection_from_charge(
    enclosed: impl Fn(f64) -> f64,
    extent: f64,
    probe_charge: f64,
    speed: f64,
    b: f64,
) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::NonPositiveImpactParameter(b));
    }
    if !(speed > 0.0) {
        return Err(Error::InvalidInput("speed must be positive".into()));
    }
    let t_const = if extent > b {
        (extent / b).acosh()
    } else {
        0.0
    };
    let t_hi = t_const.min(T_TRUNCATION);
    let mut integral = 0.0;
    if t_hi > 0.0 {
        let gl = GaussLegendre::new(8);
        let h = t_hi / PANELS as f64;
        for k in 0..PANELS {
            let a = h * k as f64;
            integral += gl.integrate(a, a + h, |t| {
                let s = 1.0 / t.cosh();
                enclosed(b * t.cosh()) * s * s
            });
        }
    }
    if t_const < T_TRUNCATION {
        integral += enclosed(extent.max(b)) * (1.0 - t_hi.tanh());
    }
    Ok(2.0 * probe_charge * integral / (speed * b))
}

/// What to do when the semi-classical inequalities fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegimePolicy {
    #[default]
    Warn,
    Strict,
}

/// Deflection function of a given target state and projectile.
#[derive(Debug, Clone)]
pub struct Deflector<'a> {
    state: &'a RadialBoundState,
    atom: AtomModel,
    projectile: ProjectileModel,
    report: RegimeReport,
    warning: Option<String>,
}

impl<'a> Deflector<'a> {
    pub fn new(
        state: &'a RadialBoundState,
        atom: &AtomModel,
        projectile: &ProjectileModel,
        threshold_factor: f64,
        policy: RegimePolicy,
    ) -> Result<Self> {
        let report = classify_regime(atom, projectile, threshold_factor)?;
        let warning = (!report.semiclassical).then(|| {
            format!(
                "not semi-classical: eta = {:.3e}, L = {:.3e}, theta = {:.3e} (threshold {threshold_factor})",
                report.values.coulomb_strength,
                report.values.angular_momentum,
                report.values.deflection_estimate
            )
        });
        if let (Some(w), RegimePolicy::Strict) = (&warning, policy) {
            return Err(Error::RegimeViolation(w.clone()));
        }
        Ok(Self {
            state,
            atom: *atom,
            projectile: *projectile,
            report,
            warning,
        })
    }

    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    pub fn report(&self) -> &RegimeReport {
        &self.report
    }

    /// Q(R): charge of the bound particle inside radius R.
    pub fn enclosed_charge(&self, r: f64) -> f64 {
        self.atom.electron_charge * self.state.enclosed_fraction(r)
    }

    pub fn deflection(&self, b: f64) -> Result<f64> {
        deflection_from_charge(
            |r| self.enclosed_charge(r),
            self.state.r_max(),
            self.projectile.charge,
            self.projectile.speed,
            b,
        )
    }
}

/// Δp(b) for `state`, warning (not failing) outside the semi-classical regime.
pub fn semiclassical_deflection(
    state: &RadialBoundState,
    atom: &AtomModel,
    projectile: &ProjectileModel,
    b: f64,
) -> Result<f64> {
    Deflector::new(
        state,
        atom,
        projectile,
        DEFAULT_THRESHOLD,
        RegimePolicy::Warn,
    )?
    .deflection(b)
}

/// η = qq'/(ħV).
pub fn coulomb_strength(charge: f64, probe_charge: f64, speed: f64) -> f64 {
    charge * probe_charge / speed
}

/// Cutoff length Λ ≈ ħ/q_min paired with a minimum momentum transfer.
pub fn cutoff_from_q_min(q_min: f64) -> f64 {
    1.0 / q_min
}

/// Eikonal phase η·ln(Λ/b).
pub fn coulomb_phase(eta: f64, cutoff: f64, b: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::NonPositiveImpactParameter(b));
    }
    if b > cutoff {
        return Err(Error::CutoffViolation { b, cutoff });
    }
    Ok(eta * (cutoff / b).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImpactSampling {
    /// ln b uniform on [b_min, b_max].
    #[default]
    LogUniform,
    /// b² uniform, i.e. uniform flux through the annulus.
    Area,
}

#[derive(Debug, Clone)]
pub struct SemiclassicalConfig {
    pub atom: AtomModel,
    pub projectile: ProjectileModel,
    pub state: RadialBoundState,
    pub b_min: f64,
    pub b_max: f64,
    pub sampling: ImpactSampling,
    pub events: u64,
    pub seed: u64,
    pub threshold_factor: f64,
    pub policy: RegimePolicy,
}

impl SemiclassicalConfig {
    pub fn new(atom: AtomModel, projectile: ProjectileModel, state: RadialBoundState) -> Self {
        Self {
            b_min: 0.1 * atom.size,
            b_max: 10.0 * atom.size,
            atom,
            projectile,
            state,
            sampling: ImpactSampling::default(),
            events: 10_000,
            seed: 0,
            threshold_factor: DEFAULT_THRESHOLD,
            policy: RegimePolicy::default(),
        }
    }
}

/// Semi-classical events and the regime warning, if any.
pub fn sample_semiclassical_events(
    cfg: &SemiclassicalConfig,
) -> Result<(Vec<ScatteringEvent>, Option<String>)> {
    if !(cfg.b_min > 0.0) {
        return Err(Error::NonPositiveImpactParameter(cfg.b_min));
    }
    if !(cfg.b_max > cfg.b_min) {
        return Err(Error::InvalidInput("need b_min < b_max".into()));
    }
    let deflector = Deflector::new(
        &cfg.state,
        &cfg.atom,
        &cfg.projectile,
        cfg.threshold_factor,
        cfg.policy,
    )?;
    let p = cfg.projectile.momentum();
    let bound = cfg.projectile.max_transfer();
    let events = (0..cfg.events)
        .into_par_iter()
        .map(|id| {
            let mut rng = stream(cfg.seed, Domain::SemiclassicalEvent, id);
            let u: f64 = rng.random();
            let b = match cfg.sampling {
                ImpactSampling::LogUniform => cfg.b_min * (cfg.b_max / cfg.b_min).powf(u),
                ImpactSampling::Area => (cfg.b_min * cfg.b_min
                    + u * (cfg.b_max * cfg.b_max - cfg.b_min * cfg.b_min))
                    .sqrt(),
            };
            let phi = 2.0 * PI * rng.random::<f64>();
            let angular_momentum = p * b;
            if angular_momentum <= 1.0 {
                return Err(Error::RegimeViolation(format!(
                    "angular momentum {angular_momentum} ≤ ħ at b = {b}"
                )));
            }
            let dp = deflector.deflection(b)?;
            if dp.abs() > bound {
                return Err(Error::RegimeViolation(format!(
                    "transfer {dp} exceeds 2MV = {bound}"
                )));
            }
            Ok(ScatteringEvent {
                event_id: id,
                regime: Regime::Semiclassical,
                impact_parameter: Some(b),
                theta: Some((dp.abs() / p).min(PI)),
                phi: Some(phi),
                transfer: dp.abs(),
                dp: Some([dp * phi.cos(), dp * phi.sin(), 0.0]),
                survived: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((events, deflector.warning().map(str::to_owned)))
}
