//! Form factors, interaction transforms and survival probabilities.
//!
//! Fourier convention: F(q) = ∫ e^{iq·r} ρ(r) d³r with inverse
//! ρ(r) = (2π)⁻³ ∫ e^{-iq·r} F(q) d³q. For a spherical density these reduce to
//!
//! ```text
//! F(q)  = 4π ∫ r² sinc(qr) ρ(r) dr
//! ρ(r)  = (1/2π²) ∫ q² sinc(qr) F(q) dq
//! ```
//!
//! so that F(0) is exactly the total (unit) charge.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{sine_integral, trapezoid, CubicSpline, GaussLegendre, SplineStart};
use crate::state::{sinc, RadialBoundState, RadialRule};

/// |F(q_max)| must fall below this before a table is inverted.
pub const SUPPORT_LIMIT: f64 = 1e-4;
/// Tolerance on F(0) = 1 for exact tables.
pub const EXACT_ORIGIN_TOLERANCE: f64 = 1e-10;

/// Form factor F(q) of `state` (unit charge).
pub fn form_factor(state: &RadialBoundState, q: f64) -> Result<f64> {
    check_momentum(q)?;
    Ok(state.radial_rule(q).sinc_transform(q))
}

fn check_momentum(q: f64) -> Result<()> {
    if q < 0.0 || q.is_nan() {
        Err(Error::NegativeMomentum(q))
    } else {
        Ok(())
    }
}

/// Reusable evaluator of F(q) for every q up to a fixed maximum.
#[derive(Debug, Clone)]
pub struct FormFactorEvaluator {
    rule: RadialRule,
    q_max: f64,
}

impl FormFactorEvaluator {
    pub fn new(state: &RadialBoundState, q_max: f64) -> Self {
        Self {
            rule: state.radial_rule(q_max),
            q_max,
        }
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn eval(&self, q: f64) -> Result<f64> {
        check_momentum(q)?;
        if q > self.q_max * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "q = {q} beyond evaluator range {}",
                self.q_max
            )));
        }
        Ok(self.rule.sinc_transform(q))
    }
}

/// Tabulated F(q), exact or estimated from counts (with per-bin variance of F²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormFactorTable {
    q: Vec<f64>,
    values: Vec<f64>,
    variance: Option<Vec<f64>>,
}

impl FormFactorTable {
    /// Exact table: starts at q = 0 with F(0) = 1 and |F| ≤ 1 throughout.
    pub fn exact(q: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_grid(&q, values.len())?;
        if q[0] != 0.0 {
            return Err(Error::InvalidInput(
                "exact table must start at q = 0".into(),
            ));
        }
        if (values[0] - 1.0).abs() > EXACT_ORIGIN_TOLERANCE {
            return Err(Error::InvalidInput(format!("F(0) = {} ≠ 1", values[0])));
        }
        if let Some(v) = values
            .iter()
            .find(|v| v.abs() > 1.0 + EXACT_ORIGIN_TOLERANCE)
        {
            return Err(Error::InvalidInput(format!("|F| = {v} exceeds 1")));
        }
        Ok(Self {
            q,
            values,
            variance: None,
        })
    }

    /// Estimated table: `values` hold |F̂|², `variance` their per-bin variance.
    pub fn estimated(q: Vec<f64>, values: Vec<f64>, variance: Vec<f64>) -> Result<Self> {
        check_grid(&q, values.len())?;
        if variance.len() != q.len() {
            return Err(Error::InvalidInput("variance length mismatch".into()));
        }
        if variance.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidInput("variance must be non-negative".into()));
        }
        Ok(Self {
            q,
            values,
            variance: Some(variance),
        })
    }

    /// Exact table of `state` on `q_grid`, evaluated in parallel.
    pub fn tabulate(state: &RadialBoundState, q_grid: Vec<f64>) -> Result<Self> {
        check_grid(&q_grid, q_grid.len())?;
        let q_max = *q_grid.last().unwrap();
        let eval = FormFactorEvaluator::new(state, q_max);
        let values: Vec<f64> = q_grid
            .par_iter()
            .map(|&q| eval.rule.sinc_transform(q))
            .collect();
        Self::exact(q_grid, values)
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn variance(&self) -> Option<&[f64]> {
        self.variance.as_deref()
    }

    pub fn is_estimated(&self) -> bool {
        self.variance.is_some()
    }

    pub fn q_max(&self) -> f64 {
        *self.q.last().unwrap()
    }

    /// True when the table reaches twice the momentum scale `m v` of the target.
    pub fn covers(&self, momentum_scale: f64) -> bool {
        self.q_max() >= 2.0 * momentum_scale
    }

    /// Text form `# q_au F variance`; exact tables omit the variance column.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        match &self.variance {
            None => {
                writeln!(w, "# q_au F")?;
                for (q, f) in self.q.iter().zip(&self.values) {
                    writeln!(w, "{q:.16e} {f:.16e}")?;
                }
            }
            Some(var) => {
                writeln!(w, "# q_au F variance")?;
                for ((q, f), v) in self.q.iter().zip(&self.values).zip(var) {
                    writeln!(w, "{q:.16e} {f:.16e} {v:.16e}")?;
                }
            }
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|e| Error::Parse {
                        line: n + 1,
                        message: e.to_string(),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if !(2..=3).contains(&row.len()) || rows.first().is_some_and(|r| r.len() != row.len()) {
                return Err(Error::Parse {
                    line: n + 1,
                    message: "expected a consistent 2 or 3 columns".into(),
                });
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 0,
                message: "empty table".into(),
            });
        }
        let q = rows.iter().map(|r| r[0]).collect();
        let f = rows.iter().map(|r| r[1]).collect();
        if rows[0].len() == 3 {
            Self::estimated(q, f, rows.iter().map(|r| r[2]).collect())
        } else {
            Self::exact(q, f)
        }
    }
}

fn check_grid(q: &[f64], n_values: usize) -> Result<()> {
    if q.len() < 2 || n_values != q.len() {
        return Err(Error::InvalidInput(
            "table needs at least two points and matching columns".into(),
        ));
    }
    if q[0] < 0.0 || q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NegativeMomentum(q[0]));
    }
    if q.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "q grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Smooth interpolant of an exact table, used where F is needed at many points.
#[derive(Debug, Clone)]
pub struct FormFactorCurve {
    spline: CubicSpline,
    q_max: f64,
}

impl FormFactorCurve {
    pub fn from_table(table: &FormFactorTable) -> Self {
        Self {
            spline: CubicSpline::new(table.q(), table.values(), SplineStart::Slope(0.0)),
            q_max: table.q_max(),
        }
    }

    /// Dense exact table of `state` on [0, q_max] and its interpolant.
    pub fn for_state(state: &RadialBoundState, q_max: f64, points: usize) -> Result<Self> {
        let grid = crate::numeric::linear_grid(0.0, q_max, points.max(2));
        Ok(Self::from_table(&FormFactorTable::tabulate(state, grid)?))
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn eval(&self, q: f64) -> f64 {
        debug_assert!(q <= self.q_max * (1.0 + 1e-9));
        self.spline.eval(q)
    }
}

/// Radial density recovered by inverse transform.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub r: Vec<f64>,
    /// Density after clipping negative lobes to zero.
    pub rho: Vec<f64>,
    /// Density before clipping.
    pub raw_rho: Vec<f64>,
    /// 4π∫r²·max(−ρ, 0) dr over the output grid.
    pub clipped_mass: f64,
}

/// Inverse transform ρ(r) = (1/2π²)∫q² sinc(qr) F(q) dq on `r_grid`.
///
/// Exact tables are interpolated by a cubic spline with F'(0) = 0, estimated tables
/// piecewise-linearly; a missing q = 0 point is filled with F(0) = 1. Beyond q_max
/// the table is continued by the asymptotic tail F(q_max)·(q_max/q)⁴ and that part
/// of the integral is added in closed form.
pub fn inverse_density(table: &FormFactorTable, r_grid: &[f64]) -> Result<DensityProfile> {
    let f_end = *table.values().last().unwrap();
    if f_end.abs() >= SUPPORT_LIMIT {
        return Err(Error::InsufficientSupport {
            value: f_end,
            limit: SUPPORT_LIMIT,
        });
    }
    if let Some(r) = r_grid.iter().find(|r| !(**r >= 0.0)) {
        return Err(Error::NegativeRadius(*r));
    }
    let (q, f) = with_origin(table);
    let spline = (!table.is_estimated()).then(|| CubicSpline::new(&q, &f, SplineStart::Slope(0.0)));
    let gl = GaussLegendre::new(8);
    let q_max = *q.last().unwrap();
    let tail = f_end * q_max.powi(4);

    let raw_rho: Vec<f64> = r_grid
        .par_iter()
        .map(|&r| {
            let mut acc = 0.0;
            for i in 0..q.len() - 1 {
                let (a, b) = (q[i], q[i + 1]);
                let k = ((r * (b - a)).ceil() as usize).max(1);
                let h = (b - a) / k as f64;
                for j in 0..k {
                    let lo = a + h * j as f64;
                    acc += gl.integrate(lo, lo + h, |x| {
                        let fx = match &spline {
                            Some(s) => s.eval_piece(i, x),
                            None => f[i] + (f[i + 1] - f[i]) * (x - a) / (b - a),
                        };
                        x * x * sinc(x * r) * fx
                    });
                }
            }
            acc += tail * tail_integral(q_max, r);
            acc / (2.0 * PI * PI)
        })
        .collect();

    let rho: Vec<f64> = raw_rho.iter().map(|v| v.max(0.0)).collect();
    let negative: Vec<f64> = r_grid
        .iter()
        .zip(&raw_rho)
        .map(|(r, v)| 4.0 * PI * r * r * (-v).max(0.0))
        .collect();
    let clipped_mass = if r_grid.len() > 1 {
        trapezoid(r_grid, &negative)
    } else {
        0.0
    };
    Ok(DensityProfile {
        r: r_grid.to_vec(),
        rho,
        raw_rho,
        clipped_mass,
    })
}

/// ∫_{q_max}^∞ q² sinc(qr) q⁻⁴ dq.
fn tail_integral(q_max: f64, r: f64) -> f64 {
    let x = q_max * r;
    if x < 1e-3 {
        // 1/q_max · (1 − x²/18 + …) from the small-r expansion of sinc.
        return (1.0 - x * x / 18.0) / q_max;
    }
    let j = x.sin() / (2.0 * x * x) + x.cos() / (2.0 * x)
        - 0.5 * (std::f64::consts::FRAC_PI_2 - sine_integral(x));
    r * j
}

/// The table's grid and F values, with F(0) = 1 prepended when absent.
/// Estimated tables store |F̂|²; callers choose a sign before inverting.
fn with_origin(table: &FormFactorTable) -> (Vec<f64>, Vec<f64>) {
    let mut q = table.q().to_vec();
    let mut f = table.values().to_vec();
    if q[0] > 0.0 {
        q.insert(0, 0.0);
        f.insert(0, 1.0);
    }
    (q, f)
}

/// Interaction between projectile and bound particle, through its Fourier transform G(q).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InteractionModel {
    /// V(r) = coupling/r, G(q) = 4π·coupling/q².
    Coulomb { coupling: f64 },
    /// Zero-range V(r) = strength·δ³(r), G(q) = strength.
    Contact { strength: f64 },
}

impl InteractionModel {
    pub fn fourier(&self, q: f64) -> Result<f64> {
        match *self {
            InteractionModel::Coulomb { coupling } => interaction_fourier(coupling, q),
            InteractionModel::Contact { strength } => {
                check_momentum(q)?;
                Ok(strength)
            }
        }
    }

    /// Mean of q over [a, b] under the weight q·G(q)².
    pub fn bin_centroid(&self, a: f64, b: f64) -> Result<f64> {
        match *self {
            InteractionModel::Coulomb { .. } => {
                if a <= 0.0 {
                    return Err(Error::ZeroMomentum);
                }
                Ok(2.0 * a * b / (a + b))
            }
            InteractionModel::Contact { .. } => Ok(2.0 * (a * a + a * b + b * b) / (3.0 * (a + b))),
        }
    }

    /// ∫_a^b q·G(q)² dq, the cross-section weight of a q-bin at F ≡ 1.
    pub fn bin_weight(&self, a: f64, b: f64) -> Result<f64> {
        match *self {
            InteractionModel::Coulomb { coupling } => {
                if a <= 0.0 {
                    return Err(Error::ZeroMomentum);
                }
                let c = 4.0 * PI * coupling;
                Ok(c * c * 0.5 * (1.0 / (a * a) - 1.0 / (b * b)))
            }
            InteractionModel::Contact { strength } => {
                Ok(strength * strength * 0.5 * (b * b - a * a))
            }
        }
    }
}

/// Coulomb interaction in momentum space, G(q) = 4π·qq'/q².
pub fn interaction_fourier(coupling: f64, q: f64) -> Result<f64> {
    check_momentum(q)?;
    if q == 0.0 {
        return Err(Error::ZeroMomentum);
    }
    Ok(4.0 * PI * coupling / (q * q))
}

/// Probability |F(Δp)|² that the state survives a sudden momentum transfer Δp.
pub fn survival_probability(state: &RadialBoundState, dp: f64) -> Result<f64> {
    let f = form_factor(state, dp)?;
    Ok((f * f).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiCollisionSurvival {
    /// ∏|F(Δpᵢ)|².
    pub probability: f64,
    /// [(1/N)Σ|F(Δpᵢ)|²]^N.
    pub mean_bound: f64,
    pub collisions: usize,
}

/// Survival after a sequence of sudden transfers, with its arithmetic-mean bound.
pub fn multi_collision_survival(
    state: &RadialBoundState,
    transfers: &[f64],
) -> Result<MultiCollisionSurvival> {
    for &dp in transfers {
        check_momentum(dp)?;
    }
    let q_max = transfers.iter().copied().fold(0.0, f64::max);
    let eval = FormFactorEvaluator::new(state, q_max);
    let squares = transfers
        .iter()
        .map(|&dp| eval.eval(dp).map(|f| (f * f).clamp(0.0, 1.0)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(survival_from_squares(&squares))
}

pub(crate) fn survival_from_squares(squares: &[f64]) -> MultiCollisionSurvival {
    let n = squares.len();
    if n == 0 {
        return MultiCollisionSurvival {
            probability: 1.0,
            mean_bound: 1.0,
            collisions: 0,
        };
    }
    let probability: f64 = squares.iter().product();
    let mean = squares.iter().sum::<f64>() / n as f64;
    let mean_bound = mean.powi(n as i32);
    debug_assert!(probability <= mean_bound * (1.0 + 1e-12) + f64::MIN_POSITIVE);
    MultiCollisionSurvival {
        probability,
        mean_bound,
        collisions: n,
    }
}
