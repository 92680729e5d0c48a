//! Enclosed charge Q(r) from a measured deflection curve Δp(b).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProjectileModel;
use crate::numeric::GaussLegendre;

/// Largest condition number of the regularized system that is accepted.
pub const MAX_CONDITION: f64 = 1e12;
pub const MIN_SAMPLES: usize = 8;
/// Required ratio b_max / b_min.
pub const MIN_SPAN: f64 = 10.0;
/// Default λ as a fraction of trace(KᵀK)/n.
pub const DEFAULT_LAMBDA_SCALE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionOptions {
    /// Total charge q of the bound particle; Q(∞) ≤ q is enforced.
    pub total_charge: f64,
    /// Regularization weight; `None` selects 1e-6·trace(KᵀK)/n.
    pub lambda: Option<f64>,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            total_charge: 1.0,
            lambda: None,
        }
    }
}

/// Piecewise-linear Q̂ on `r` (which starts at 0) with fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeProfile {
    pub r: Vec<f64>,
    pub q: Vec<f64>,
    /// ‖(KQ̂ − Δp)/Δp‖₂.
    pub residual_norm: f64,
    pub condition_number: f64,
    pub lambda: f64,
}

/// Solves Δp(bᵢ) = Σⱼ Kᵢⱼ Qⱼ for a non-decreasing Q with Q(0) = 0.
///
/// Q is piecewise linear on `r_grid` (a node at r = 0 is added when missing) and
/// constant beyond the last node. The least-squares problem carries a
/// second-difference penalty of weight λ; rows are scaled by 1/Δp so that every
/// sample counts with its relative error.
pub fn invert_deflection_curve(
    samples: &[(f64, f64)],
    projectile: &ProjectileModel,
    r_grid: &[f64],
    options: &InversionOptions,
) -> Result<ChargeProfile> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSpan(format!(
            "{} samples, need at least {MIN_SAMPLES}",
            samples.len()
        )));
    }
    let (b_lo, b_hi) = samples
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(b, _)| {
            (lo.min(b), hi.max(b))
        });
    if let Some(&(b, _)) = samples.iter().find(|(b, _)| !(*b > 0.0)) {
        return Err(Error::NonPositiveImpactParameter(b));
    }
    if b_hi / b_lo < MIN_SPAN {
        return Err(Error::InsufficientSpan(format!(
            "b spans [{b_lo}, {b_hi}], need a factor {MIN_SPAN}"
        )));
    }
    if let Some(&(_, dp)) = samples.iter().find(|(_, dp)| !(*dp > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "momentum transfers must be positive, got {dp}"
        )));
    }
    if !(options.total_charge > 0.0) {
        return Err(Error::InvalidInput("total charge must be positive".into()));
    }
    let mut r = r_grid.to_vec();
    if r.first() != Some(&0.0) {
        r.insert(0, 0.0);
    }
    if r.len() < 4 || r.windows(2).any(|w| !(w[1] > w[0])) || r[0] < 0.0 {
        return Err(Error::DegenerateGrid(
            "radial grid must be non-negative, increasing, with at least three nodes".into(),
        ));
    }
    let n = r.len() - 1;
    let m = samples.len();

    // K in Q variables (node 0 is pinned to Q = 0), rows divided by Δp.
    let gl = GaussLegendre::new(8);
    let mut k = DMatrix::<f64>::zeros(m, n);
    for (i, &(b, dp)) in samples.iter().enumerate() {
        let row = kernel_row(&r, b, projectile, &gl);
        for j in 0..n {
            k[(i, j)] = row[j + 1] / dp;
        }
    }
    let y = DVector::from_element(m, 1.0);

    let d = second_difference(n);
    let lambda = options
        .lambda
        .unwrap_or_else(|| DEFAULT_LAMBDA_SCALE * (k.transpose() * &k).trace() / n as f64);
    if !(lambda >= 0.0) {
        return Err(Error::InvalidInput("lambda must be non-negative".into()));
    }
    let sl = lambda.sqrt();

    let stacked = vstack(&k, &(&d * sl));
    let sv = stacked.clone().svd(false, false).singular_values;
    let (smax, smin) = sv
        .iter()
        .fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
    let condition_number = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if !(condition_number <= MAX_CONDITION) {
        return Err(Error::IllConditioned(condition_number));
    }

    // Q = L·δ with increments δ ≥ 0.
    let l = DMatrix::<f64>::from_fn(n, n, |i, j| if j <= i { 1.0 } else { 0.0 });
    let a = &stacked * &l;
    let mut rhs = DVector::<f64>::zeros(a.nrows());
    rhs.rows_mut(0, m).copy_from(&y);
    let tol = nnls_tolerance(&a);
    let mut delta = nnls(&a, &rhs, tol)?;

    let q_total = options.total_charge;
    if delta.sum() > q_total * (1.0 + 1e-6) {
        // Enforce Q(∞) = q through a stiff penalty row.
        let weight = 10.0 * a.norm() / q_total;
        let mut a2 = a.clone().insert_row(a.nrows(), 0.0);
        a2.row_mut(a.nrows()).fill(weight);
        let mut rhs2 = rhs.clone().insert_row(rhs.len(), 0.0);
        rhs2[rhs.len()] = weight * q_total;
        delta = nnls(&a2, &rhs2, tol)?;
    }
    let q_nodes = &l * &delta;
    let residual_norm = (&k * &q_nodes - &y).norm();

    let mut q = vec![0.0];
    q.extend(q_nodes.iter().copied());
    Ok(ChargeProfile {
        r,
        q,
        residual_norm,
        condition_number,
        lambda,
    })
}

/// Deflection at `b` produced by each hat function of the piecewise-linear Q on `r`
/// (the last one continues as a constant).
fn kernel_row(r: &[f64], b: f64, projectile: &ProjectileModel, gl: &GaussLegendre) -> Vec<f64> {
    let n = r.len();
    let mut row = vec![0.0; n];
    let t_of = |radius: f64| {
        if radius <= b {
            0.0
        } else {
            (radius / b).acosh()
        }
    };
    for s in 0..n - 1 {
        let (r0, r1) = (r[s], r[s + 1]);
        if r1 <= b {
            continue;
        }
        let (t0, t1) = (t_of(r0.max(b)), t_of(r1));
        let pieces = (((t1 - t0) / 0.25).ceil() as usize).max(1);
        let h = (t1 - t0) / pieces as f64;
        let (mut w0, mut w1) = (0.0, 0.0);
        for p in 0..pieces {
            let a = t0 + h * p as f64;
            w0 += gl.integrate(a, a + h, |t| {
                let sech = 1.0 / t.cosh();
                (r1 - b * t.cosh()) / (r1 - r0) * sech * sech
            });
            w1 += gl.integrate(a, a + h, |t| {
                let sech = 1.0 / t.cosh();
                (b * t.cosh() - r0) / (r1 - r0) * sech * sech
            });
        }
        row[s] += w0;
        row[s + 1] += w1;
    }
    let t_last = t_of(r[n - 1].max(b));
    row[n - 1] += 1.0 - t_last.tanh();
    let scale = 2.0 * projectile.charge / (projectile.speed * b);
    row.iter_mut().for_each(|v| *v *= scale);
    row
}

fn second_difference(n: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n.saturating_sub(2), n);
    for i in 0..n.saturating_sub(2) {
        d[(i, i)] = 1.0;
        d[(i, i + 1)] = -2.0;
        d[(i, i + 2)] = 1.0;
    }
    d
}

fn vstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}

/// Default optimality tolerance of [`nnls`] for matrix `a`.
pub fn nnls_tolerance(a: &DMatrix<f64>) -> f64 {
    10.0 * f64::EPSILON * a.norm() * (a.nrows().max(a.ncols()) as f64)
}

/// Lawson–Hanson non-negative least squares: min ‖Ax − b‖ subject to x ≥ 0.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
    let n = a.ncols();
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let max_iter = 30 * n + 30;

    let solve_passive = |passive: &[bool]| -> Result<DVector<f64>> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = a.select_columns(idx.iter());
        let sol = sub
            .svd(true, true)
            .solve(b, 1e-15)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut z = DVector::zeros(n);
        for (k, &j) in idx.iter().enumerate() {
            z[j] = sol[k];
        }
        Ok(z)
    };

    for _ in 0..max_iter {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate.filter(|&j| w[j] > tol) else {
            return Ok(x);
        };
        passive[j] = true;
        loop {
            let z = solve_passive(&passive)?;
            if (0..n).filter(|&i| passive[i]).all(|i| z[i] > 0.0) {
                x = z;
                break;
            }
            let alpha = (0..n)
                .filter(|&i| passive[i] && z[i] <= 0.0)
                .map(|i| x[i] / (x[i] - z[i]))
                .fold(f64::INFINITY, f64::min);
            x += (z - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i] <= tol {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AtomModel;
    use crate::numeric::geometric_grid;
    use crate::scattering::semiclassical_deflection;
    use crate::state::{default_grid, RadialBoundState};

    fn projectile() -> ProjectileModel {
        ProjectileModel::new(1e4, 0.005, 0.1).unwrap()
    }

    fn hydrogen_q(r: f64) -> f64 {
        1.0 - (-2.0 * r).exp() * (1.0 + 2.0 * r + 2.0 * r * r)
    }

    fn r_grid() -> Vec<f64> {
        let mut r = vec![0.0];
        r.extend(geometric_grid(0.05, 15.0, 120));
        r
    }

    #[test]
    fn nnls_matches_unconstrained_when_interior() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = nnls(&a, &b, nnls_tolerance(&a)).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
        let b = DVector::from_vec(vec![-1.0, 2.0, 1.0]);
        let x = nnls(&a, &b, nnls_tolerance(&a)).unwrap();
        assert_eq!(x[0], 0.0);
        assert!((x[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn kernel_reproduces_constant_charge() {
        let p = projectile();
        let r = r_grid();
        let gl = GaussLegendre::new(8);
        for b in [0.1, 1.0, 7.0, 30.0] {
            let row = kernel_row(&r, b, &p, &gl);
            let total: f64 = row.iter().sum();
            let point = 2.0 * p.charge / (p.speed * b);
            assert!((total / point - 1.0).abs() < 1e-12, "b={b}");
        }
    }

    #[test]
    fn hydrogen_round_trip() {
        let s = RadialBoundState::hydrogen_1s(default_grid()).unwrap();
        let atom = AtomModel::hydrogen();
        let p = projectile();
        let samples: Vec<(f64, f64)> = geometric_grid(0.1, 10.0, 32)
            .into_iter()
            .map(|b| (b, semiclassical_deflection(&s, &atom, &p, b).unwrap()))
            .collect();
        let prof =
            invert_deflection_curve(&samples, &p, &r_grid(), &InversionOptions::default()).unwrap();
        assert!(prof.condition_number < MAX_CONDITION);
        assert!(prof.q.windows(2).all(|w| w[1] >= w[0]));
        for (r, q) in prof.r.iter().zip(&prof.q) {
            if (0.3..=5.0).contains(r) {
                let truth = hydrogen_q(*r);
                assert!((q / truth - 1.0).abs() < 0.02, "r={r}: {q} vs {truth}");
            }
        }
    }

    #[test]
    fn point_charge_data_gives_constant_q() {
        let p = projectile();
        let samples: Vec<(f64, f64)> = geometric_grid(0.5, 10.0, 16)
            .into_iter()
            .map(|b| (b, 2.0 * p.charge / (p.speed * b)))
            .collect();
        let prof =
            invert_deflection_curve(&samples, &p, &r_grid(), &InversionOptions::default()).unwrap();
        for (r, q) in prof.r.iter().zip(&prof.q) {
            if (0.5..=10.0).contains(r) {
                assert!((q - 1.0).abs() < 0.02, "r={r}: {q}");
            }
        }
    }

    #[test]
    fn excess_charge_is_capped() {
        let p = projectile();
        let samples: Vec<(f64, f64)> = geometric_grid(0.5, 10.0, 16)
            .into_iter()
            .map(|b| (b, 1.2 * 2.0 * p.charge / (p.speed * b)))
            .collect();
        let prof =
            invert_deflection_curve(&samples, &p, &r_grid(), &InversionOptions::default()).unwrap();
        assert!(*prof.q.last().unwrap() <= 1.0 + 1e-3);
        assert!(prof.q.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn preconditions() {
        let p = projectile();
        let three = [(0.1, 1.0), (1.0, 1.0), (10.0, 1.0)];
        assert!(matches!(
            invert_deflection_curve(&three, &p, &r_grid(), &InversionOptions::default()),
            Err(Error::InsufficientSpan(_))
        ));
        let narrow: Vec<(f64, f64)> = (0..10).map(|i| (1.0 + 0.1 * i as f64, 1.0)).collect();
        assert!(matches!(
            invert_deflection_curve(&narrow, &p, &r_grid(), &InversionOptions::default()),
            Err(Error::InsufficientSpan(_))
        ));
    }
}
