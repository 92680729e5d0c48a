//! Recovering the bound density from simulated data, through the form factor or
//! through the deflection curve.

pub mod deflection;
pub mod fourier;
pub mod wavefunction;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProjectileModel;
use crate::numeric::trapezoid;

pub use deflection::{invert_deflection_curve, ChargeProfile, InversionOptions};
pub use fourier::{estimate_form_factor, reconstruct_density_fourier, FormFactorEstimate};
pub use wavefunction::{monotone_envelope, wavefunction_from_charge, WavefunctionEstimate};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub clipped_mass: Option<f64>,
    pub condition_number: Option<f64>,
    pub residual_norm: Option<f64>,
    pub l2_rel_error: Option<f64>,
    pub sup_error: Option<f64>,
    /// 4π∫r²ρ̂ dr on the output grid before any renormalization.
    pub charge_before_normalization: Option<f64>,
    /// Largest change of Q/q made by the monotone projection.
    pub monotone_adjustment: Option<f64>,
}

/// Reconstructed profile on `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub r: Vec<f64>,
    pub rho_hat: Vec<f64>,
    pub rho_sigma: Option<Vec<f64>>,
    pub psi_hat: Vec<f64>,
    pub q_hat: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl ReconstructionResult {
    /// Fills the truth comparison over `range` with the r²-weighted L2 norm.
    pub fn compare_with_truth(&mut self, truth: impl Fn(f64) -> f64, range: (f64, f64)) {
        let t: Vec<f64> = self.r.iter().map(|&r| truth(r)).collect();
        self.diagnostics.l2_rel_error = Some(l2_relative_error(&self.r, &self.rho_hat, &t, range));
        self.diagnostics.sup_error = Some(sup_relative_error(&self.r, &self.rho_hat, &t, range));
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r_au,rho_hat,rho_sigma,psi_hat,Q_hat")?;
        let opt = |v: Option<&Vec<f64>>, i: usize| {
            v.map(|v| format!("{:.16e}", v[i])).unwrap_or_default()
        };
        for i in 0..self.r.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{},{:.16e},{}",
                self.r[i],
                self.rho_hat[i],
                opt(self.rho_sigma.as_ref(), i),
                self.psi_hat[i],
                opt(self.q_hat.as_ref(), i)
            )?;
        }
        Ok(())
    }

    pub fn write_diagnostics<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.diagnostics).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Q̂ from the deflection curve, then ψ̂ and ρ̂ = ψ̂² on the inversion grid.
pub fn reconstruct_semiclassical(
    samples: &[(f64, f64)],
    projectile: &ProjectileModel,
    r_grid: &[f64],
    options: &InversionOptions,
) -> Result<ReconstructionResult> {
    let profile = invert_deflection_curve(samples, projectile, r_grid, options)?;
    let wf = wavefunction_from_charge(&profile.r, &profile.q, options.total_charge)?;
    let rho: Vec<f64> = wf.psi.iter().map(|p| p * p).collect();
    let integrand: Vec<f64> =
        wf.r.iter()
            .zip(&rho)
            .map(|(r, v)| 4.0 * std::f64::consts::PI * r * r * v)
            .collect();
    Ok(ReconstructionResult {
        psi_hat: rho.iter().map(|v| v.sqrt()).collect(),
        rho_hat: rho,
        rho_sigma: None,
        q_hat: Some(wf.q_monotone),
        diagnostics: Diagnostics {
            condition_number: Some(profile.condition_number),
            residual_norm: Some(profile.residual_norm),
            charge_before_normalization: Some(trapezoid(&wf.r, &integrand)),
            monotone_adjustment: Some(wf.adjustment),
            ..Diagnostics::default()
        },
        r: wf.r,
    })
}

/// √(∫r²(a−b)² dr / ∫r²b² dr) over grid points inside `range` (trapezoid).
pub fn l2_relative_error(r: &[f64], estimate: &[f64], truth: &[f64], range: (f64, f64)) -> f64 {
    let idx: Vec<usize> = (0..r.len())
        .filter(|&i| r[i] >= range.0 && r[i] <= range.1)
        .collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for w in idx.windows(2) {
        let (i, j) = (w[0], w[1]);
        let h = r[j] - r[i];
        let e = |k: usize| r[k] * r[k] * (estimate[k] - truth[k]).powi(2);
        let t = |k: usize| r[k] * r[k] * truth[k] * truth[k];
        num += 0.5 * h * (e(i) + e(j));
        den += 0.5 * h * (t(i) + t(j));
    }
    (num / den).sqrt()
}

/// max|a−b| / max|b| over grid points inside `range`.
pub fn sup_relative_error(r: &[f64], estimate: &[f64], truth: &[f64], range: (f64, f64)) -> f64 {
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..r.len() {
        if r[i] >= range.0 && r[i] <= range.1 {
            err = err.max((estimate[i] - truth[i]).abs());
            scale = scale.max(truth[i].abs());
        }
    }
    err / scale
}
