//! Born-regime event generation.
//!
//! For elastic scattering off a heavy target the transfer q = 2P sin(θ/2) fixes the
//! polar angle, so dq = P cos(θ/2) dθ and
//!
//! ```text
//! dΩ = 2π sinθ dθ = 4π sin(θ/2) cos(θ/2) dθ = 2π q dq / P².
//! ```
//!
//! A cross section |F(q)|²G(q)² per unit solid angle is therefore a density
//! ∝ |F(q)|²G(q)²·q per unit q.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formfactor::{FormFactorEvaluator, InteractionModel};
use crate::model::{classify_regime, AtomModel, ProjectileModel, RegimeReport, DEFAULT_THRESHOLD};
use crate::numeric::{geometric_grid, linear_grid, GaussLegendre};
use crate::rng::{stream, Domain};
use crate::state::RadialBoundState;

use super::event::{Regime, ScatteringEvent};

/// Number of grid points of the tabulated inverse CDF.
pub const SAMPLER_GRID_POINTS: usize = 4096;

/// Inverse-CDF sampler of q on [q_min, q_max] with density ∝ |F(q)|²G(q)²q.
#[derive(Debug, Clone)]
pub struct QSampler {
    grid: Vec<f64>,
    cdf: Vec<f64>,
    total: f64,
}

impl QSampler {
    pub fn new(
        state: &RadialBoundState,
        interaction: &InteractionModel,
        q_min: f64,
        q_max: f64,
    ) -> Result<Self> {
        if !(q_min > 0.0) || !(q_max > q_min) || !q_max.is_finite() {
            return Err(Error::InvalidInput(format!(
                "transfer range must satisfy 0 < q_min < q_max, got [{q_min}, {q_max}]"
            )));
        }
        interaction.fourier(q_min)?;
        let grid = if q_max / q_min > 2.0 {
            geometric_grid(q_min, q_max, SAMPLER_GRID_POINTS)
        } else {
            linear_grid(q_min, q_max, SAMPLER_GRID_POINTS)
        };
        let eval = FormFactorEvaluator::new(state, q_max);
        let gl = GaussLegendre::new(4);
        let masses: Vec<f64> = grid
            .par_windows(2)
            .map(|w| {
                gl.integrate(w[0], w[1], |q| {
                    let f = eval.eval(q).unwrap_or(0.0);
                    let g = interaction.fourier(q).unwrap_or(0.0);
                    f * f * g * g * q
                })
            })
            .collect();
        let mut cdf = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for m in &masses {
            acc += m;
            cdf.push(acc);
        }
        if !(acc > 0.0) || !acc.is_finite() {
            return Err(Error::EmptySupport { q_min, q_max });
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Ok(Self {
            grid,
            cdf,
            total: acc,
        })
    }

    pub fn q_min(&self) -> f64 {
        self.grid[0]
    }

    pub fn q_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// ∫|F|²G²q dq over the support.
    pub fn total_weight(&self) -> f64 {
        self.total
    }

    /// Tabulated CDF at `q`, linear inside grid cells.
    pub fn cdf(&self, q: f64) -> f64 {
        if q <= self.q_min() {
            return 0.0;
        }
        if q >= self.q_max() {
            return 1.0;
        }
        let i = self.grid.partition_point(|&g| g <= q) - 1;
        let t = (q - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        self.cdf[i] + t * (self.cdf[i + 1] - self.cdf[i])
    }

    /// Inverse CDF at `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let i = (self.cdf.partition_point(|&c| c <= u)).clamp(1, self.cdf.len() - 1) - 1;
        let span = self.cdf[i + 1] - self.cdf[i];
        let t = if span > 0.0 {
            (u - self.cdf[i]) / span
        } else {
            0.0
        };
        self.grid[i] + t.clamp(0.0, 1.0) * (self.grid[i + 1] - self.grid[i])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// Born-regime configuration.
#[derive(Debug, Clone)]
pub struct BornConfig {
    pub atom: AtomModel,
    pub projectile: ProjectileModel,
    pub state: RadialBoundState,
    pub interaction: InteractionModel,
    pub q_min: f64,
    pub q_max: f64,
    pub events: u64,
    pub seed: u64,
    pub threshold_factor: f64,
}

impl BornConfig {
    /// Coulomb interaction between the projectile and the bound particle, with
    /// q ∈ [0.1, 20]/a₀ capped at 2MV.
    pub fn new(atom: AtomModel, projectile: ProjectileModel, state: RadialBoundState) -> Self {
        let q_max = (20.0 / atom.size).min(projectile.max_transfer());
        Self {
            atom,
            projectile,
            state,
            interaction: InteractionModel::Coulomb {
                coupling: atom.electron_charge * projectile.charge,
            },
            q_min: 0.1 / atom.size,
            q_max,
            events: 100_000,
            seed: 0,
            threshold_factor: DEFAULT_THRESHOLD,
        }
    }

    /// Checks the transfer range and that the projectile is protective.
    pub fn validate(&self) -> Result<RegimeReport> {
        self.atom.validate()?;
        self.projectile.validate()?;
        let report = classify_regime(&self.atom, &self.projectile, self.threshold_factor)?;
        if report.values.kinetic_energy > report.values.gap {
            return Err(Error::ProtectiveViolation {
                kinetic: report.values.kinetic_energy,
                gap: report.values.gap,
            });
        }
        if !report.protective {
            return Err(Error::RegimeViolation(format!(
                "projectile momentum {} is not ≫ {} (threshold {})",
                report.values.projectile_momentum,
                report.values.electron_momentum,
                self.threshold_factor
            )));
        }
        let bound = self.projectile.max_transfer();
        if !(self.q_min > 0.0 && self.q_min < self.q_max && self.q_max <= bound) {
            return Err(Error::InvalidInput(format!(
                "need 0 < q_min < q_max ≤ 2MV = {bound}, got [{}, {}]",
                self.q_min, self.q_max
            )));
        }
        Ok(report)
    }
}

/// Validated Born generator; reusable across seeds.
#[derive(Debug, Clone)]
pub struct BornGenerator {
    sampler: QSampler,
    momentum: f64,
}

impl BornGenerator {
    pub fn new(cfg: &BornConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            sampler: QSampler::new(&cfg.state, &cfg.interaction, cfg.q_min, cfg.q_max)?,
            momentum: cfg.projectile.momentum(),
        })
    }

    pub fn sampler(&self) -> &QSampler {
        &self.sampler
    }

    pub fn event(&self, seed: u64, event_id: u64) -> ScatteringEvent {
        let mut rng = stream(seed, Domain::BornEvent, event_id);
        let q = self.sampler.sample(&mut rng);
        let phi = 2.0 * PI * rng.random::<f64>();
        let p = self.momentum;
        let theta = 2.0 * (q / (2.0 * p)).min(1.0).asin();
        let (st, ct) = theta.sin_cos();
        ScatteringEvent {
            event_id,
            regime: Regime::Born,
            impact_parameter: None,
            theta: Some(theta),
            phi: Some(phi),
            transfer: q,
            dp: Some([p * st * phi.cos(), p * st * phi.sin(), p * (ct - 1.0)]),
            survived: None,
        }
    }

    /// Events `0..count`, generated in parallel and returned in id order.
    pub fn generate(&self, count: u64, seed: u64) -> Vec<ScatteringEvent> {
        (0..count)
            .into_par_iter()
            .map(|id| self.event(seed, id))
            .collect()
    }
}

pub fn sample_born_events(cfg: &BornConfig) -> Result<Vec<ScatteringEvent>> {
    Ok(BornGenerator::new(cfg)?.generate(cfg.events, cfg.seed))
}
