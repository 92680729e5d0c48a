//! Density from binned Born events through the estimated form factor.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::formfactor::{inverse_density, FormFactorTable, InteractionModel};
use crate::numeric::trapezoid;
use crate::scattering::{Regime, ScatteringEvent};
use crate::state::sinc;

use super::{Diagnostics, ReconstructionResult};

/// Minimum number of events accepted by [`estimate_form_factor`].
pub const MIN_EVENTS: usize = 100;
/// Fraction of bins that must hold at least one event.
pub const MIN_POPULATED_FRACTION: f64 = 0.8;
/// Bins used for the low-q extrapolation to F(0) = 1.
pub const NORMALIZATION_BINS: usize = 5;

/// Grid charge of ρ̂ accepted without rescaling; F̂(0) = 1 already fixes the charge.
pub const CHARGE_WINDOW: std::ops::RangeInclusive<f64> = 0.9..=1.1;

/// Binned estimate of |F(q)|².
#[derive(Debug, Clone, PartialEq)]
pub struct FormFactorEstimate {
    /// Populated bins only: weight centroids, |F̂|² and its variance from the
    /// Poisson counts of the bin and of the normalization fit.
    pub table: FormFactorTable,
    pub counts: Vec<u64>,
    /// Bins without events; they are absent from `table`.
    pub empty_bins: Vec<usize>,
    /// Extrapolated counts per unit weight at q = 0.
    pub normalization: f64,
}

/// Estimates |F(q)|² from Born events binned on `edges`.
///
/// Counts are divided by the bin integral of q·G(q)², then scaled so that a fit
/// a + b q² + c q⁴ through the lowest populated bins gives 1 at q = 0.
pub fn estimate_form_factor(
    events: &[ScatteringEvent],
    edges: &[f64],
    interaction: &InteractionModel,
    momentum: f64,
) -> Result<FormFactorEstimate> {
    if events.len() < MIN_EVENTS {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_EVENTS} events, got {}",
            events.len()
        )));
    }
    if let Some(e) = events.iter().find(|e| e.regime != Regime::Born) {
        return Err(Error::InvalidInput(format!(
            "event {} is not a Born event",
            e.event_id
        )));
    }
    if edges.len() < NORMALIZATION_BINS + 1 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(format!(
            "need at least {NORMALIZATION_BINS} increasing bins"
        )));
    }
    if edges[0] < 0.0 {
        return Err(Error::NegativeMomentum(edges[0]));
    }
    let last = *edges.last().unwrap();
    if last > 2.0 * momentum {
        return Err(Error::InvalidInput(format!(
            "bins reach {last}, beyond the kinematic limit 2P = {}",
            2.0 * momentum
        )));
    }

    let bins = edges.len() - 1;
    let mut counts = vec![0u64; bins];
    for e in events {
        let q = e.transfer;
        if q < edges[0] || q >= last {
            continue;
        }
        let i = edges.partition_point(|&x| x <= q) - 1;
        counts[i] += 1;
    }
    let populated = counts.iter().filter(|&&c| c > 0).count();
    if (populated as f64) < MIN_POPULATED_FRACTION * bins as f64 {
        return Err(Error::EmptyBins {
            populated,
            total: bins,
        });
    }

    let weights = (0..bins)
        .map(|i| interaction.bin_weight(edges[i], edges[i + 1]))
        .collect::<Result<Vec<f64>>>()?;
    let full: Vec<usize> = (0..bins).filter(|&i| counts[i] > 0).collect();
    let centers = full
        .iter()
        .map(|&i| interaction.bin_centroid(edges[i], edges[i + 1]))
        .collect::<Result<Vec<f64>>>()?;

    let fit = NORMALIZATION_BINS.min(full.len());
    let x: Vec<f64> = centers[..fit].iter().map(|q| q * q).collect();
    let y: Vec<f64> = full[..fit]
        .iter()
        .map(|&i| counts[i] as f64 / weights[i])
        .collect();
    let coefficients = intercept_coefficients(&x)?;
    let normalization: f64 = coefficients.iter().zip(&y).map(|(c, y)| c * y).sum();
    if !(normalization > 0.0) {
        return Err(Error::InvalidInput(format!(
            "low-q extrapolation gave a non-positive normalization {normalization}"
        )));
    }
    // Var(a) from the Poisson variance of the fitted points.
    let norm_rel_var = coefficients
        .iter()
        .zip(&full[..fit])
        .map(|(c, &i)| c * c * counts[i] as f64 / (weights[i] * weights[i]))
        .sum::<f64>()
        / (normalization * normalization);

    let values: Vec<f64> = full
        .iter()
        .map(|&i| counts[i] as f64 / (weights[i] * normalization))
        .collect();
    let variance = full
        .iter()
        .zip(&values)
        .map(|(&i, v)| v * v * (1.0 / counts[i] as f64 + norm_rel_var))
        .collect();
    let empty_bins = (0..bins).filter(|&i| counts[i] == 0).collect();
    Ok(FormFactorEstimate {
        table: FormFactorTable::estimated(centers, values, variance)?,
        counts,
        empty_bins,
        normalization,
    })
}

/// Coefficients c with a = Σ cᵢ yᵢ, the intercept of the least-squares fit
/// y = a + b x + c x² (a line for fewer than four points).
fn intercept_coefficients(x: &[f64]) -> Result<Vec<f64>> {
    let degree = if x.len() >= 4 { 2 } else { 1 };
    if x.len() < degree + 1 {
        return Err(Error::InvalidInput(
            "too few populated bins for the low-q fit".into(),
        ));
    }
    let a = DMatrix::from_fn(x.len(), degree + 1, |i, j| x[i].powi(j as i32));
    let pinv = a
        .pseudo_inverse(1e-14)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(pinv.row(0).iter().copied().collect())
}

/// ρ̂(r) on `r_grid` from a form-factor table.
///
/// Estimated tables hold |F̂|²: bins above twice their noise σ give F̂ = +√|F̂|²,
/// the rest F̂ = 0. Exact tables are inverted as they are. A grid charge outside
/// [`CHARGE_WINDOW`] is scaled onto the nearest edge of the window.
pub fn reconstruct_density_fourier(
    table: &FormFactorTable,
    r_grid: &[f64],
) -> Result<ReconstructionResult> {
    let (f_table, f_variance) = match table.variance() {
        None => (table.clone(), vec![0.0; table.q().len()]),
        Some(var) => {
            let mut f = Vec::with_capacity(var.len());
            let mut fv = Vec::with_capacity(var.len());
            for (&v, &s2) in table.values().iter().zip(var) {
                if v > 2.0 * s2.sqrt() {
                    f.push(v.sqrt());
                    fv.push(s2 / (4.0 * v));
                } else {
                    f.push(0.0);
                    fv.push(0.0);
                }
            }
            (
                FormFactorTable::estimated(table.q().to_vec(), f, fv.clone())?,
                fv,
            )
        }
    };
    let profile = inverse_density(&f_table, r_grid)?;

    let q = f_table.q();
    let n = q.len();
    let dq: Vec<f64> = (0..n)
        .map(|k| {
            let lo = if k == 0 {
                q[0]
            } else {
                0.5 * (q[k] - q[k - 1])
            };
            let hi = if k + 1 == n {
                0.0
            } else {
                0.5 * (q[k + 1] - q[k])
            };
            lo + hi
        })
        .collect();
    let mut sigma: Vec<f64> = r_grid
        .iter()
        .map(|&r| {
            (0..n)
                .map(|k| {
                    let c = q[k] * q[k] * sinc(q[k] * r) * dq[k] / (2.0 * PI * PI);
                    c * c * f_variance[k]
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();

    let mut rho = profile.rho.clone();
    let integrand: Vec<f64> = r_grid
        .iter()
        .zip(&rho)
        .map(|(r, v)| 4.0 * PI * r * r * v)
        .collect();
    let charge = if r_grid.len() > 1 {
        trapezoid(r_grid, &integrand)
    } else {
        1.0
    };
    if charge > 0.0 && !CHARGE_WINDOW.contains(&charge) {
        let scale = charge.clamp(*CHARGE_WINDOW.start(), *CHARGE_WINDOW.end()) / charge;
        rho.iter_mut().for_each(|v| *v *= scale);
        sigma.iter_mut().for_each(|v| *v *= scale);
    }
    let psi = rho.iter().map(|v| v.sqrt()).collect();
    Ok(ReconstructionResult {
        r: r_grid.to_vec(),
        rho_hat: rho,
        rho_sigma: Some(sigma),
        psi_hat: psi,
        q_hat: None,
        diagnostics: Diagnostics {
            clipped_mass: Some(profile.clipped_mass),
            charge_before_normalization: Some(charge),
            ..Diagnostics::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AtomModel, ProjectileModel};
    use crate::numeric::{geometric_grid, linear_grid};
    use crate::scattering::{BornConfig, BornGenerator};
    use crate::state::{default_grid, RadialBoundState};

    fn contact_config(q_max: f64) -> BornConfig {
        let atom = AtomModel::hydrogen();
        let f = 1e4;
        let proj = ProjectileModel::with_mass_ratio(&atom, f, 0.5 / f.sqrt(), 1.0).unwrap();
        let state = RadialBoundState::hydrogen_1s(default_grid()).unwrap();
        BornConfig {
            interaction: InteractionModel::Contact { strength: 1.0 },
            q_min: 0.1,
            q_max,
            ..BornConfig::new(atom, proj, state)
        }
    }

    fn hydrogen_f2(q: f64) -> f64 {
        (1.0 + q * q / 4.0).powi(-4)
    }

    #[test]
    fn exact_table_round_trip() {
        let s = RadialBoundState::hydrogen_1s(default_grid()).unwrap();
        let table = FormFactorTable::tabulate(&s, linear_grid(0.0, 40.0, 801)).unwrap();
        let r = linear_grid(0.0, 25.0, 2501);
        let res = reconstruct_density_fourier(&table, &r).unwrap();
        for (x, v) in r.iter().zip(&res.rho_hat) {
            if (0.2..=4.0).contains(x) {
                let truth = (-2.0 * x).exp() / PI;
                assert!((v / truth - 1.0).abs() < 1e-3, "r={x}");
            }
        }
        assert!(res.rho_hat.iter().all(|v| *v >= 0.0));
        for (p, v) in res.psi_hat.iter().zip(&res.rho_hat) {
            assert_eq!(*p, v.sqrt());
        }
    }

    #[test]
    fn short_grid_is_scaled_onto_the_window_edge() {
        let s = RadialBoundState::hydrogen_1s(default_grid()).unwrap();
        let table = FormFactorTable::tabulate(&s, linear_grid(0.0, 40.0, 801)).unwrap();
        let r = linear_grid(0.0, 1.5, 301);
        let res = reconstruct_density_fourier(&table, &r).unwrap();
        let before = res.diagnostics.charge_before_normalization.unwrap();
        assert!((before - 0.5768).abs() < 1e-3, "{before}");
        let shell: Vec<f64> = r
            .iter()
            .zip(&res.rho_hat)
            .map(|(x, v)| 4.0 * PI * x * x * v)
            .collect();
        assert!((trapezoid(&r, &shell) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn band_limited_table_reports_clipping() {
        let q = linear_grid(0.1, 3.0, 30);
        let mut values: Vec<f64> = q.iter().map(|&x| if x < 0.5 { 1.0 } else { 0.0 }).collect();
        values[0] = 1.0;
        let var = vec![1e-6; q.len()];
        let table = FormFactorTable::estimated(q, values, var).unwrap();
        let r = linear_grid(0.0, 40.0, 4001);
        let res = reconstruct_density_fourier(&table, &r).unwrap();
        assert!(res.diagnostics.clipped_mass.unwrap() > 0.0);
    }

    #[test]
    fn estimate_within_three_sigma() {
        let cfg = contact_config(12.0);
        let gen = BornGenerator::new(&cfg).unwrap();
        let events = gen.generate(1_000_000, 17);
        let edges = linear_grid(0.1, 8.0, 65);
        let est =
            estimate_form_factor(&events, &edges, &cfg.interaction, cfg.projectile.momentum())
                .unwrap();
        let t = &est.table;
        assert!(est.empty_bins.is_empty());
        let var = t.variance().unwrap();
        let worst = t
            .q()
            .iter()
            .zip(t.values())
            .zip(var)
            .map(|((&q, &v), s2)| ((v - hydrogen_f2(q)) / s2.sqrt()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 3.0, "worst pull {worst}");
    }

    #[test]
    fn sigma_scales_with_event_count() {
        let cfg = contact_config(12.0);
        let gen = BornGenerator::new(&cfg).unwrap();
        let edges = linear_grid(0.1, 8.0, 33);
        let est = |n: u64| {
            let ev = gen.generate(n, 2);
            estimate_form_factor(&ev, &edges, &cfg.interaction, cfg.projectile.momentum()).unwrap()
        };
        let (a, b, c) = (est(100_000), est(200_000), est(400_000));
        let sig = |e: &FormFactorEstimate, k: usize| e.table.variance().unwrap()[k].sqrt();
        for k in [3, 8, 14] {
            let r2 = sig(&a, k) / sig(&b, k);
            let r4 = sig(&a, k) / sig(&c, k);
            assert!((r2 / 2f64.sqrt() - 1.0).abs() < 0.2, "bin {k}: {r2}");
            assert!((r4 / 2.0 - 1.0).abs() < 0.1, "bin {k}: {r4}");
        }
    }

    #[test]
    fn single_bin_is_a_hard_error() {
        let cfg = contact_config(12.0);
        let gen = BornGenerator::new(&cfg).unwrap();
        let mut events = gen.generate(200, 1);
        for e in &mut events {
            e.transfer = 1.05;
        }
        let edges = linear_grid(0.1, 8.0, 65);
        assert!(matches!(
            estimate_form_factor(&events, &edges, &cfg.interaction, cfg.projectile.momentum()),
            Err(Error::EmptyBins { populated: 1, .. })
        ));
        assert!(estimate_form_factor(&events[..50], &edges, &cfg.interaction, 50.0).is_err());
    }

    #[test]
    fn end_to_end_density() {
        let cfg = contact_config(12.0);
        let gen = BornGenerator::new(&cfg).unwrap();
        let events = gen.generate(1_000_000, 23);
        let edges = linear_grid(0.1, 12.0, 65);
        let est =
            estimate_form_factor(&events, &edges, &cfg.interaction, cfg.projectile.momentum())
                .unwrap();
        let mut r = vec![0.0];
        r.extend(geometric_grid(1e-3, 20.0, 600));
        let mut res = reconstruct_density_fourier(&est.table, &r).unwrap();
        res.compare_with_truth(|x| (-2.0 * x).exp() / PI, (0.1, 5.0));
        let l2 = res.diagnostics.l2_rel_error.unwrap();
        assert!(l2 < 0.05, "L2 {l2}");
        let charge = res.diagnostics.charge_before_normalization.unwrap();
        assert!((0.9..=1.1).contains(&charge), "{charge}");
    }
}
