//! Radial wave function from an enclosed-charge profile.
//!
//! dQ/dr = 4πq r²ψ², so ψ(r) = (1/r)·√(Q'(r)/(4πq)).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest monotone correction, as a fraction of the total charge, that is tolerated.
pub const MAX_MONOTONE_ADJUSTMENT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavefunctionEstimate {
    pub r: Vec<f64>,
    pub psi: Vec<f64>,
    /// Q after the monotone projection.
    pub q_monotone: Vec<f64>,
    /// max |ΔQ|/|q| introduced by the projection.
    pub adjustment: f64,
}

/// Least-squares non-decreasing fit (pool adjacent violators).
pub fn monotone_envelope(y: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (v2, n2) = blocks[blocks.len() - 1];
            let (v1, n1) = blocks[blocks.len() - 2];
            if v1 <= v2 {
                break;
            }
            blocks.pop();
            let n = n1 + n2;
            *blocks.last_mut().unwrap() = ((v1 * n1 as f64 + v2 * n2 as f64) / n as f64, n);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(v, n)| std::iter::repeat_n(v, n))
        .collect()
}

/// Second-order finite-difference derivative on a non-uniform grid.
fn derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let three_point = |i: usize, j: usize, k: usize, at: usize| {
        // Derivative at x[at] of the parabola through points i, j, k.
        // Weights sum to zero, so differences against y[j] keep constants exact.
        let (x0, x1, x2) = (x[i], x[j], x[k]);
        let t = x[at];
        (y[i] - y[j]) * ((t - x1) + (t - x2)) / ((x0 - x1) * (x0 - x2))
            + (y[k] - y[j]) * ((t - x0) + (t - x1)) / ((x2 - x0) * (x2 - x1))
    };
    (0..n)
        .map(|i| {
            if i == 0 {
                three_point(0, 1, 2, 0)
            } else if i == n - 1 {
                three_point(n - 3, n - 2, n - 1, n - 1)
            } else {
                three_point(i - 1, i, i + 1, i)
            }
        })
        .collect()
}

/// ψ̂ from Q̂(r) on grid `r` for a bound particle of charge `charge`.
pub fn wavefunction_from_charge(
    r: &[f64],
    q_hat: &[f64],
    charge: f64,
) -> Result<WavefunctionEstimate> {
    if r.len() != q_hat.len() || r.len() < 3 {
        return Err(Error::InvalidInput(
            "need at least three matching (r, Q) points".into(),
        ));
    }
    if r[0] < 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::DegenerateGrid(
            "radii must be non-negative and increasing".into(),
        ));
    }
    if charge == 0.0 || !charge.is_finite() {
        return Err(Error::InvalidInput("charge must be non-zero".into()));
    }
    let fraction: Vec<f64> = q_hat.iter().map(|q| q / charge).collect();
    let envelope = monotone_envelope(&fraction);
    let adjustment = fraction
        .iter()
        .zip(&envelope)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if adjustment > MAX_MONOTONE_ADJUSTMENT {
        return Err(Error::NonMonotoneBeyondTolerance {
            moved: adjustment,
            total: 1.0,
        });
    }
    let slope = derivative(r, &envelope);
    let mut psi: Vec<f64> = r
        .iter()
        .zip(&slope)
        .map(|(&x, &d)| {
            if x > 0.0 {
                (d.max(0.0) / (4.0 * PI)).sqrt() / x
            } else {
                0.0
            }
        })
        .collect();
    if r[0] == 0.0 {
        psi[0] = if r.len() > 2 {
            // Linear extrapolation from the first two positive radii.
            let (x1, x2) = (r[1], r[2]);
            (psi[1] + (psi[1] - psi[2]) * x1 / (x2 - x1)).max(0.0)
        } else {
            psi[1]
        };
    }
    Ok(WavefunctionEstimate {
        r: r.to_vec(),
        psi,
        q_monotone: envelope.iter().map(|f| f * charge).collect(),
        adjustment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{geometric_grid, linear_grid};
    use proptest::prelude::*;

    fn hydrogen_q(r: f64) -> f64 {
        1.0 - (-2.0 * r).exp() * (1.0 + 2.0 * r + 2.0 * r * r)
    }

    #[test]
    fn hydrogen_charge_gives_hydrogen_psi() {
        let r = geometric_grid(0.05, 15.0, 120);
        let q: Vec<f64> = r.iter().map(|&x| hydrogen_q(x)).collect();
        let est = wavefunction_from_charge(&r, &q, 1.0).unwrap();
        for (x, p) in r.iter().zip(&est.psi) {
            if (0.3..=4.0).contains(x) {
                let truth = (-x).exp() / PI.sqrt();
                assert!((p / truth - 1.0).abs() < 0.01, "r={x}");
            }
        }
        assert_eq!(est.adjustment, 0.0);
    }

    #[test]
    fn constant_charge_gives_zero() {
        let r = linear_grid(0.0, 5.0, 20);
        let est = wavefunction_from_charge(&r, &[0.7; 20], 1.0).unwrap();
        assert!(est.psi.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn small_dips_are_clipped() {
        let r = linear_grid(0.1, 5.0, 50);
        let mut q: Vec<f64> = r.iter().map(|&x| hydrogen_q(x)).collect();
        q[20] -= 0.01;
        q[35] += 0.02;
        let est = wavefunction_from_charge(&r, &q, 1.0).unwrap();
        assert!(est.adjustment > 0.0 && est.adjustment < 0.05);
        assert!(est.psi.iter().all(|&p| p >= 0.0));
        assert!(est.q_monotone.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn large_dips_are_rejected() {
        let r = linear_grid(0.1, 5.0, 50);
        let mut q: Vec<f64> = r.iter().map(|&x| hydrogen_q(x)).collect();
        q[30] -= 0.5;
        assert!(matches!(
            wavefunction_from_charge(&r, &q, 1.0),
            Err(Error::NonMonotoneBeyondTolerance { .. })
        ));
    }

    #[test]
    fn derivative_is_exact_for_parabolas() {
        let x = geometric_grid(0.1, 3.0, 15);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v * v - v + 3.0).collect();
        for (v, d) in x.iter().zip(derivative(&x, &y)) {
            assert!((d - (4.0 * v - 1.0)).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn envelope_is_monotone_and_mean_preserving(y in proptest::collection::vec(-10.0f64..10.0, 1..60)) {
            let e = monotone_envelope(&y);
            prop_assert_eq!(e.len(), y.len());
            prop_assert!(e.windows(2).all(|w| w[1] >= w[0]));
            let (s1, s2): (f64, f64) = (y.iter().sum(), e.iter().sum());
            prop_assert!((s1 - s2).abs() < 1e-9);
        }
    }
}
