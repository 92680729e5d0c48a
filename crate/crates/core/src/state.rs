//! The bound state being measured: a real, nodeless radial wave function on a grid.
//!
//! Radial integrals are computed on a smooth interpolant of the density ρ = ψ².
//! When every sample is positive the interpolant is a natural cubic spline of ln ρ,
//! which is exact for exponential tails; otherwise a spline of ρ itself is used and
//! clipped at zero. Integrals over the interpolant use Gauss–Legendre panels that
//! never straddle a grid point, so normalization, the form factor at q = 0 and the
//! enclosed charge at R = ∞ all come from one quadrature and agree to rounding.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::numeric::{geometric_grid, CubicSpline, GaussLegendre, SplineStart};

/// Minimum number of grid points.
pub const MIN_GRID_POINTS: usize = 16;
/// The grid must extend at least this far out (Bohr radii).
pub const MIN_GRID_EXTENT: f64 = 10.0;
/// The first grid point may not lie further out than this (Bohr radii).
pub const MAX_GRID_START: f64 = 0.1;
pub const DEFAULT_NORM_TOLERANCE: f64 = 1e-8;

const PANEL_ORDER: usize = 8;
/// Largest phase q·h accumulated across one quadrature panel.
const MAX_PANEL_PHASE: f64 = 1.0;

/// Default radial grid: 512 points, geometric from 10⁻³ to 20 Bohr radii.
pub fn default_grid() -> Vec<f64> {
    geometric_grid(1e-3, 20.0, 512)
}

#[derive(Debug, Clone)]
enum DensityModel {
    Log(CubicSpline),
    Linear(CubicSpline),
}

impl DensityModel {
    fn build(grid: &[f64], values: &[f64]) -> Self {
        if values.iter().all(|&v| v > 0.0) {
            let logs: Vec<f64> = values.iter().map(|v| 2.0 * v.ln()).collect();
            DensityModel::Log(CubicSpline::new(grid, &logs, SplineStart::Natural))
        } else {
            let rho: Vec<f64> = values.iter().map(|v| v * v).collect();
            DensityModel::Linear(CubicSpline::new(grid, &rho, SplineStart::Natural))
        }
    }

    fn eval_piece(&self, i: usize, r: f64) -> f64 {
        match self {
            DensityModel::Log(s) => s.eval_piece(i, r).exp(),
            DensityModel::Linear(s) => s.eval_piece(i, r).max(0.0),
        }
    }
}

/// Normalized, non-negative radial wave function ψ₀(r) on a strictly increasing grid.
#[derive(Debug, Clone)]
pub struct RadialBoundState {
    grid: Vec<f64>,
    values: Vec<f64>,
    norm_tolerance: f64,
    density: DensityModel,
    /// 4π∫₀^{r_i} r²ρ dr at each grid point.
    cumulative: Vec<f64>,
}

impl RadialBoundState {
    /// Builds a state from samples that are already normalized.
    pub fn new(grid: Vec<f64>, values: Vec<f64>, norm_tolerance: f64) -> Result<Self> {
        let state = Self::unchecked(grid, values, norm_tolerance)?;
        let norm = state.norm();
        if (norm - 1.0).abs() > norm_tolerance {
            return Err(Error::NotNormalized {
                norm,
                tolerance: norm_tolerance,
            });
        }
        Ok(state)
    }

    fn unchecked(grid: Vec<f64>, values: Vec<f64>, norm_tolerance: f64) -> Result<Self> {
        validate_grid(&grid)?;
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0) || !v.is_finite())
        {
            return Err(Error::NonPositiveInput { index, value });
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroState);
        }
        if !(norm_tolerance > 0.0) {
            return Err(Error::InvalidInput(
                "norm tolerance must be positive".into(),
            ));
        }
        let density = DensityModel::build(&grid, &values);
        let mut state = Self {
            grid,
            values,
            norm_tolerance,
            density,
            cumulative: Vec::new(),
        };
        state.cumulative = state.cumulative_charge();
        Ok(state)
    }

    /// Hydrogen 1s, ψ₀ = π^{-1/2} e^{-r}, normalized on `grid`.
    pub fn hydrogen_1s(grid: Vec<f64>) -> Result<Self> {
        let raw: Vec<f64> = grid.iter().map(|r| (-r).exp()).collect();
        normalize_radial(&raw, grid)
    }

    /// Gaussian state ψ₀ ∝ exp(-r²/(2s²)) with density width `width`, normalized on `grid`.
    pub fn gaussian(grid: Vec<f64>, width: f64) -> Result<Self> {
        let raw: Vec<f64> = grid
            .iter()
            .map(|r| (-r * r / (2.0 * width * width)).exp())
            .collect();
        normalize_radial(&raw, grid)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm_tolerance(&self) -> f64 {
        self.norm_tolerance
    }

    pub fn r_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// 4π∫r²ψ² dr over the interpolant.
    pub fn norm(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Interpolated density ρ(r) = ψ₀(r)², zero beyond the grid.
    pub fn density(&self, r: f64) -> f64 {
        if r < 0.0 || r > self.r_max() {
            return 0.0;
        }
        self.density.eval_piece(self.piece(r), r)
    }

    pub fn psi(&self, r: f64) -> f64 {
        self.density(r).sqrt()
    }

    fn piece(&self, r: f64) -> usize {
        let n = self.grid.len();
        match self.grid.partition_point(|&v| v <= r) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    /// Quadrature panels covering [0, r_max], each tagged with its spline piece.
    fn panels(&self, max_phase_rate: f64) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::with_capacity(self.grid.len() + 1);
        let mut push = |piece: usize, a: f64, b: f64| {
            let k = ((max_phase_rate * (b - a) / MAX_PANEL_PHASE).ceil() as usize).max(1);
            let h = (b - a) / k as f64;
            for j in 0..k {
                let lo = a + h * j as f64;
                let hi = if j + 1 == k { b } else { lo + h };
                out.push((piece, lo, hi));
            }
        };
        if self.grid[0] > 0.0 {
            push(0, 0.0, self.grid[0]);
        }
        for i in 0..self.grid.len() - 1 {
            push(i, self.grid[i], self.grid[i + 1]);
        }
        out
    }

    fn cumulative_charge(&self) -> Vec<f64> {
        let gl = GaussLegendre::new(PANEL_ORDER);
        let mut cum = Vec::with_capacity(self.grid.len());
        let mut acc = 0.0;
        if self.grid[0] > 0.0 {
            acc += gl.integrate(0.0, self.grid[0], |r| r * r * self.density.eval_piece(0, r));
        }
        cum.push(4.0 * PI * acc);
        for i in 0..self.grid.len() - 1 {
            acc += gl.integrate(self.grid[i], self.grid[i + 1], |r| {
                r * r * self.density.eval_piece(i, r)
            });
            cum.push(4.0 * PI * acc);
        }
        cum
    }

    /// Quadrature rule for 4π∫r²ρ(r)·g(r) dr, resolved for oscillations up to `q_max`.
    pub fn radial_rule(&self, q_max: f64) -> RadialRule {
        let gl = GaussLegendre::new(PANEL_ORDER);
        let panels = self.panels(q_max.max(0.0));
        let mut nodes = Vec::with_capacity(panels.len() * PANEL_ORDER);
        let mut weights = Vec::with_capacity(panels.len() * PANEL_ORDER);
        let mut scratch_n = Vec::with_capacity(PANEL_ORDER);
        let mut scratch_w = Vec::with_capacity(PANEL_ORDER);
        for (piece, a, b) in panels {
            scratch_n.clear();
            scratch_w.clear();
            gl.push_mapped(a, b, &mut scratch_n, &mut scratch_w);
            for (&r, &w) in scratch_n.iter().zip(&scratch_w) {
                nodes.push(r);
                weights.push(4.0 * PI * w * r * r * self.density.eval_piece(piece, r));
            }
        }
        RadialRule::new(nodes, weights)
    }

    /// Enclosed fraction 4π∫₀^R r²ψ² dr (unit charge).
    pub(crate) fn enclosed_fraction(&self, radius: f64) -> f64 {
        if radius <= 0.0 {
            return 0.0;
        }
        if radius >= self.r_max() {
            return self.norm();
        }
        let gl = GaussLegendre::new(PANEL_ORDER);
        if radius < self.grid[0] {
            return 4.0 * PI * gl.integrate(0.0, radius, |r| r * r * self.density.eval_piece(0, r));
        }
        let i = self.piece(radius);
        self.cumulative[i]
            + 4.0
                * PI
                * gl.integrate(self.grid[i], radius, |r| {
                    r * r * self.density.eval_piece(i, r)
                })
    }

    /// Writes the two-column text format `# radius_au psi_au`.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# radius_au psi_au")?;
        for (r, v) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{r:.16e} {v:.16e}")?;
        }
        Ok(())
    }

    /// Reads the two-column text format. The stored values must already be normalized.
    pub fn read_text<R: BufRead>(reader: R, norm_tolerance: f64) -> Result<Self> {
        let (grid, values) = read_columns(reader)?;
        Self::new(grid, values, norm_tolerance)
    }
}

/// Precomputed nodes r_k and weights 4π w_k r_k² ρ(r_k) of a radial quadrature.
#[derive(Debug, Clone)]
pub struct RadialRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    charge: f64,
}

impl RadialRule {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        let charge = weights.iter().sum();
        Self {
            nodes,
            weights,
            charge,
        }
    }

    /// Σ_k w_k sinc(q r_k) / Σ_k w_k, i.e. 4π∫r² sinc(qr) ρ dr relative to the
    /// rule's own charge, so the value at q = 0 is exactly 1 and never exceeds it.
    pub fn sinc_transform(&self, q: f64) -> f64 {
        let sum: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| w * sinc(q * r))
            .sum();
        sum / self.charge
    }
}

/// sin(x)/x with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < MIN_GRID_POINTS {
        return Err(Error::DegenerateGrid(format!(
            "{} points, need at least {MIN_GRID_POINTS}",
            grid.len()
        )));
    }
    if grid.iter().any(|r| !r.is_finite()) {
        return Err(Error::DegenerateGrid("non-finite radius".into()));
    }
    if grid[0] < 0.0 {
        return Err(Error::DegenerateGrid(format!(
            "negative radius {}",
            grid[0]
        )));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateGrid(format!(
            "radii not strictly increasing at index {}",
            i + 1
        )));
    }
    if grid[0] > MAX_GRID_START {
        return Err(Error::DegenerateGrid(format!(
            "grid starts at {} > {MAX_GRID_START}",
            grid[0]
        )));
    }
    if *grid.last().unwrap() < MIN_GRID_EXTENT {
        return Err(Error::DegenerateGrid(format!(
            "grid ends at {} < {MIN_GRID_EXTENT}",
            grid.last().unwrap()
        )));
    }
    Ok(())
}

/// Scales non-negative samples so that 4π∫r²ψ² dr = 1.
pub fn normalize_radial(raw_values: &[f64], grid: Vec<f64>) -> Result<RadialBoundState> {
    let state = RadialBoundState::unchecked(grid, raw_values.to_vec(), DEFAULT_NORM_TOLERANCE)?;
    let norm = state.norm();
    if !(norm > 0.0) {
        return Err(Error::ZeroState);
    }
    let scale = norm.sqrt().recip();
    let values = raw_values.iter().map(|v| v * scale).collect();
    RadialBoundState::new(state.grid, values, DEFAULT_NORM_TOLERANCE)
}

/// Charge inside a sphere of radius R, Q(R) = 4πq∫₀^R r²ψ₀² dr.
pub fn enclosed_charge(state: &RadialBoundState, charge: f64, radius: f64) -> Result<f64> {
    if radius < 0.0 || radius.is_nan() {
        return Err(Error::NegativeRadius(radius));
    }
    Ok(charge * state.enclosed_fraction(radius))
}

pub(crate) fn read_columns<R: BufRead>(reader: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace().map(|t| {
            t.parse::<f64>().map_err(|e| Error::Parse {
                line: n + 1,
                message: e.to_string(),
            })
        });
        match (cols.next(), cols.next()) {
            (Some(x), Some(y)) => {
                a.push(x?);
                b.push(y?);
            }
            _ => {
                return Err(Error::Parse {
                    line: n + 1,
                    message: "expected two columns".into(),
                })
            }
        }
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hydrogen() -> RadialBoundState {
        RadialBoundState::hydrogen_1s(geometric_grid(1e-3, 20.0, 512)).unwrap()
    }

    /// Closed-form hydrogen enclosed fraction 1 − e^{−2R}(1 + 2R + 2R²).
    fn hydrogen_q(r: f64) -> f64 {
        1.0 - (-2.0 * r).exp() * (1.0 + 2.0 * r + 2.0 * r * r)
    }

    #[test]
    fn hydrogen_normalizes_to_analytic_constant() {
        let s = RadialBoundState::hydrogen_1s(geometric_grid(1e-3, 20.0, 512)).unwrap();
        let c = PI.sqrt().recip();
        for (r, v) in s.grid().iter().zip(s.values()) {
            let expect = c * (-r).exp();
            assert!((v / expect - 1.0).abs() < 1e-6, "r={r}");
        }
    }

    #[test]
    fn grid_starting_at_origin_is_accepted() {
        let mut grid = vec![0.0];
        grid.extend(geometric_grid(1e-3, 20.0, 300));
        let s = RadialBoundState::hydrogen_1s(grid).unwrap();
        assert!((enclosed_charge(&s, 1.0, 1.0).unwrap() - hydrogen_q(1.0)).abs() < 1e-10);
    }

    #[test]
    fn normalizing_twice_is_idempotent() {
        let s = hydrogen();
        let again = normalize_radial(s.values(), s.grid().to_vec()).unwrap();
        for (a, b) in s.values().iter().zip(again.values()) {
            assert!((a - b).abs() <= s.norm_tolerance() * a.abs());
        }
    }

    #[test]
    fn zero_state_rejected() {
        let grid = default_grid();
        let zeros = vec![0.0; grid.len()];
        assert_eq!(
            normalize_radial(&zeros, grid).unwrap_err(),
            Error::ZeroState
        );
    }

    #[test]
    fn negative_sample_rejected() {
        let grid = default_grid();
        let mut v: Vec<f64> = grid.iter().map(|r| (-r).exp()).collect();
        v[10] = -1e-3;
        assert!(matches!(
            normalize_radial(&v, grid),
            Err(Error::NonPositiveInput { index: 10, .. })
        ));
    }

    #[test]
    fn duplicate_radii_rejected() {
        let mut grid = default_grid();
        grid[5] = grid[4];
        let v = vec![1.0; grid.len()];
        assert!(matches!(
            normalize_radial(&v, grid),
            Err(Error::DegenerateGrid(_))
        ));
    }

    #[test]
    fn short_or_narrow_grids_rejected() {
        let g = geometric_grid(1e-3, 20.0, 8);
        assert!(matches!(
            normalize_radial(&[1.0; 8], g),
            Err(Error::DegenerateGrid(_))
        ));
        let g = geometric_grid(1e-3, 5.0, 64);
        assert!(matches!(
            normalize_radial(&[1.0; 64], g),
            Err(Error::DegenerateGrid(_))
        ));
    }

    #[test]
    fn unnormalized_input_to_new_rejected() {
        let grid = default_grid();
        let v: Vec<f64> = grid.iter().map(|r| 2.0 * (-r).exp()).collect();
        assert!(matches!(
            RadialBoundState::new(grid, v, 1e-8),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn enclosed_charge_matches_closed_form() {
        let s = hydrogen();
        let q1 = enclosed_charge(&s, 1.0, 1.0).unwrap();
        assert!((q1 - 0.323_323_583_816_936_5).abs() < 1e-9);
        for r in [0.0005, 0.01, 0.3, 2.0, 5.5, 12.0] {
            let q = enclosed_charge(&s, 1.0, r).unwrap();
            assert!((q - hydrogen_q(r)).abs() < 1e-10, "R={r}: {q}");
        }
        assert_eq!(enclosed_charge(&s, 1.0, 0.0).unwrap(), 0.0);
        assert!((enclosed_charge(&s, 1.0, 1e6).unwrap() - 1.0).abs() < 1e-12);
        assert!((enclosed_charge(&s, -2.0, 1e6).unwrap() + 2.0).abs() < 1e-11);
        assert_eq!(
            enclosed_charge(&s, 1.0, -1.0).unwrap_err(),
            Error::NegativeRadius(-1.0)
        );
    }

    #[test]
    fn zero_samples_use_linear_density() {
        let grid = default_grid();
        let raw: Vec<f64> = grid
            .iter()
            .map(|&r| if r < 6.0 { (-r).exp() } else { 0.0 })
            .collect();
        let s = normalize_radial(&raw, grid).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
        let beyond = s.density(7.0);
        assert!((0.0..1e-9).contains(&beyond));
        assert!(s.density(1.0) > 0.0);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let s = hydrogen();
        let mut buf = Vec::new();
        s.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# radius_au psi_au\n"));
        let back = RadialBoundState::read_text(&buf[..], 1e-8).unwrap();
        assert_eq!(back.grid(), s.grid());
        assert_eq!(back.values(), s.values());
    }
}
