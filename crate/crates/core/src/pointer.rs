//! Finite-dimensional von Neumann measurement: impulsive collapse versus
//! protective pointer shift.

use std::io::Write;

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

pub type C64 = Complex<f64>;

const STRUCTURE_TOLERANCE: f64 = 1e-12;
const EIGEN_TOLERANCE: f64 = 1e-9;
/// Eigenvalues closer than this (relative to ‖A‖) share an eigenspace.
const DEGENERACY_TOLERANCE: f64 = 1e-10;

/// System state ψ₀, observable A and gap ΔE to the nearest excited level.
#[derive(Debug, Clone, PartialEq)]
pub struct ToySystem {
    state: DVector<C64>,
    operator: DMatrix<C64>,
    gap: f64,
}

impl ToySystem {
    pub fn new(state: DVector<C64>, operator: DMatrix<C64>, gap: f64) -> Result<Self> {
        let d = state.len();
        if d == 0 || operator.nrows() != d || operator.ncols() != d {
            return Err(Error::InvalidInput(format!(
                "state of dimension {d} does not match a {}x{} operator",
                operator.nrows(),
                operator.ncols()
            )));
        }
        let norm = state.norm();
        if (norm - 1.0).abs() > STRUCTURE_TOLERANCE {
            return Err(Error::NotNormalized {
                norm,
                tolerance: STRUCTURE_TOLERANCE,
            });
        }
        let asym = (&operator - operator.adjoint()).norm();
        if asym > STRUCTURE_TOLERANCE * operator.norm().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "operator is not Hermitian (‖A − A†‖ = {asym:e})"
            )));
        }
        if !(gap > 0.0) {
            return Err(Error::InvalidInput("level gap must be positive".into()));
        }
        Ok(Self {
            state,
            operator,
            gap,
        })
    }

    /// Real state and real diagonal observable.
    pub fn diagonal(state: &[f64], eigenvalues: &[f64], gap: f64) -> Result<Self> {
        let psi = DVector::from_iterator(state.len(), state.iter().map(|&x| C64::new(x, 0.0)));
        let a = DMatrix::from_diagonal(&DVector::from_iterator(
            eigenvalues.len(),
            eigenvalues.iter().map(|&x| C64::new(x, 0.0)),
        ));
        Self::new(psi, a, gap)
    }

    /// Random Hermitian observable and random state, entries uniform in [-1, 1].
    pub fn random<R: Rng>(dimension: usize, gap: f64, rng: &mut R) -> Result<Self> {
        let mut draw = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let m = DMatrix::from_fn(dimension, dimension, |_, _| draw());
        let a = (&m + m.adjoint()).scale(0.5);
        let mut psi = DVector::from_fn(dimension, |_, _| draw());
        psi.normalize_mut();
        Self::new(psi, a, gap)
    }

    pub fn dimension(&self) -> usize {
        self.state.len()
    }

    pub fn state(&self) -> &DVector<C64> {
        &self.state
    }

    pub fn operator(&self) -> &DMatrix<C64> {
        &self.operator
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// ⟨ψ₀|A|ψ₀⟩.
    pub fn expectation(&self) -> f64 {
        self.state.dotc(&(&self.operator * &self.state)).re
    }

    /// ⟨ψ₀|A²|ψ₀⟩ = ‖Aψ₀‖².
    pub fn expectation_square(&self) -> f64 {
        (&self.operator * &self.state).norm_squared()
    }

    pub fn eigenspaces(&self) -> Result<Eigenspaces> {
        Eigenspaces::new(&self.operator)
    }
}

/// Gaussian pointer packet of width ΔQ centred at Q₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerState {
    pub center: f64,
    pub width: f64,
}

impl PointerState {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidInput("pointer width must be positive".into()));
        }
        Ok(Self { center, width })
    }

    /// ΔP = ħ/(2ΔQ).
    pub fn conjugate_spread(&self) -> f64 {
        0.5 / self.width
    }
}

/// Spectral decomposition of A grouped into distinct eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigenspaces {
    /// Distinct eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal basis of each eigenspace, one column per vector.
    pub bases: Vec<DMatrix<C64>>,
}

impl Eigenspaces {
    pub fn new(operator: &DMatrix<C64>) -> Result<Self> {
        let eig = operator.clone().symmetric_eigen();
        let scale = operator.norm().max(1.0);
        let lambda = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| C64::new(x, 0.0)));
        let residual = (operator * &eig.eigenvectors - &eig.eigenvectors * lambda).norm() / scale;
        if !(residual <= EIGEN_TOLERANCE) {
            return Err(Error::DegenerateEigenproblem { residual });
        }
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for i in order {
            let v = eig.eigenvalues[i];
            match groups.last_mut() {
                Some((first, members)) if (v - *first).abs() <= DEGENERACY_TOLERANCE * scale => {
                    members.push(i)
                }
                _ => groups.push((v, vec![i])),
            }
        }
        let values = groups
            .iter()
            .map(|(_, m)| m.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / m.len() as f64)
            .collect();
        let bases = groups
            .iter()
            .map(|(_, m)| eig.eigenvectors.select_columns(m.iter()))
            .collect();
        Ok(Self { values, bases })
    }

    /// Projection Pₖψ onto eigenspace `k`.
    pub fn project(&self, k: usize, psi: &DVector<C64>) -> DVector<C64> {
        let b = &self.bases[k];
        b * (b.adjoint() * psi)
    }

    /// Born probabilities ‖Pₖψ‖² of each eigenspace.
    pub fn probabilities(&self, psi: &DVector<C64>) -> Vec<f64> {
        self.bases
            .iter()
            .map(|b| (b.adjoint() * psi).norm_squared())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulsiveOutcome {
    pub outcome: f64,
    /// Index of the eigenspace in ascending eigenvalue order.
    pub collapsed_index: usize,
    /// Normalized projection of ψ₀ onto that eigenspace.
    pub collapsed: DVector<C64>,
}

/// Single impulsive measurement of A drawn with the stream of `seed`.
pub fn impulsive_measure(sys: &ToySystem, seed: u64) -> Result<ImpulsiveOutcome> {
    let spaces = sys.eigenspaces()?;
    let probs = spaces.probabilities(&sys.state);
    Ok(collapse(sys, &spaces, &probs, seed, 0))
}

fn collapse(
    sys: &ToySystem,
    spaces: &Eigenspaces,
    probs: &[f64],
    seed: u64,
    trial: u64,
) -> ImpulsiveOutcome {
    let mut rng = stream(seed, Domain::PointerTrial, trial);
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut k = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if p > 0.0 && u < acc {
            k = i;
            break;
        }
    }
    let mut collapsed = spaces.project(k, &sys.state);
    collapsed.normalize_mut();
    ImpulsiveOutcome {
        outcome: spaces.values[k],
        collapsed_index: k,
        collapsed,
    }
}

/// One line of a trial log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub outcome: f64,
    pub collapsed_index: usize,
}

/// `trials` independent impulsive measurements; trial `i` uses its own stream.
pub fn impulsive_trials(sys: &ToySystem, seed: u64, trials: u64) -> Result<Vec<TrialRecord>> {
    let spaces = sys.eigenspaces()?;
    let probs = spaces.probabilities(&sys.state);
    Ok((0..trials)
        .into_par_iter()
        .map(|trial| {
            let o = collapse(sys, &spaces, &probs, seed, trial);
            TrialRecord {
                trial,
                outcome: o.outcome,
                collapsed_index: o.collapsed_index,
            }
        })
        .collect())
}

pub fn write_trials_jsonl<W: Write>(records: &[TrialRecord], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(w)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtectiveOutcome {
    /// Pointer displacement Ā = ⟨ψ₀|A|ψ₀⟩.
    pub shift: f64,
    pub final_center: f64,
    /// |Ā| ≥ ΔQ.
    pub discernible: bool,
    /// Prefactor C = Σₙ|⟨ψₙ|A|ψ₀⟩|² = ⟨ψ₀|A²|ψ₀⟩.
    pub prefactor: f64,
    /// min(1, C·e^{−ΔE·T}).
    pub excitation_bound: f64,
}

/// Adiabatic coupling over duration `t`: first-order pointer shift and the
/// exponential bound on leaving ψ₀. The system state is not touched.
pub fn protective_measure(
    sys: &ToySystem,
    pointer: &PointerState,
    t: f64,
) -> Result<ProtectiveOutcome> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput("duration must be positive".into()));
    }
    let shift = sys.expectation();
    let prefactor = sys.expectation_square();
    Ok(ProtectiveOutcome {
        shift,
        final_center: pointer.center + shift,
        discernible: shift.abs() >= pointer.width,
        prefactor,
        excitation_bound: (prefactor * (-sys.gap * t).exp()).min(1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletenessCheck {
    /// Σₙ |⟨ψₙ|A|ψ₀⟩|² over an orthonormal basis containing ψ₀.
    pub sum: f64,
    /// ⟨ψ₀|A²|ψ₀⟩.
    pub expectation_square: f64,
}

pub fn completeness_sum(sys: &ToySystem) -> CompletenessCheck {
    let basis = basis_with_first(&sys.state);
    let a_psi = &sys.operator * &sys.state;
    let sum = basis
        .column_iter()
        .map(|col| col.dotc(&a_psi).norm_sqr())
        .sum();
    CompletenessCheck {
        sum,
        expectation_square: sys.expectation_square(),
    }
}

/// Unitary matrix whose first column is `first` (unit norm), by Gram–Schmidt
/// against the standard basis.
fn basis_with_first(first: &DVector<C64>) -> DMatrix<C64> {
    let d = first.len();
    let mut cols: Vec<DVector<C64>> = vec![first.clone()];
    for e in 0..d {
        if cols.len() == d {
            break;
        }
        let mut v = DVector::<C64>::zeros(d);
        v[e] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for c in &cols {
                let overlap = c.dotc(&v);
                v -= c * overlap;
            }
        }
        let n = v.norm();
        if n > 1e-6 {
            cols.push(v / C64::new(n, 0.0));
        }
    }
    DMatrix::from_columns(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn rejects_bad_systems() {
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0), C64::new(0.0, 1.0), c(0.0), c(1.0)]);
        let psi = DVector::from_vec(vec![c(1.0), c(0.0)]);
        assert!(ToySystem::new(psi.clone(), a, 1.0).is_err());
        assert!(ToySystem::diagonal(&[1.0, 1.0], &[0.0, 1.0], 1.0).is_err());
        assert!(ToySystem::diagonal(&[1.0, 0.0], &[0.0, 1.0], 0.0).is_err());
        assert!(PointerState::new(0.0, 0.0).is_err());
    }

    #[test]
    fn eigenstate_input_is_certain() {
        let sys = ToySystem::diagonal(&[0.0, 1.0, 0.0], &[2.0, -1.0, 5.0], 1.0).unwrap();
        for seed in 0..20 {
            let o = impulsive_measure(&sys, seed).unwrap();
            assert_eq!(o.outcome, -1.0);
            assert!((o.collapsed[1].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_eigenspace_keeps_coherent_projection() {
        let s = 1.0 / 3f64.sqrt();
        let sys = ToySystem::diagonal(&[s, s, s], &[1.0, 1.0, 2.0], 1.0).unwrap();
        let spaces = sys.eigenspaces().unwrap();
        assert_eq!(spaces.values.len(), 2);
        let p = spaces.probabilities(sys.state());
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12);
        let mut proj = spaces.project(0, sys.state());
        proj.normalize_mut();
        let h = 1.0 / 2f64.sqrt();
        assert!((proj[0].norm() - h).abs() < 1e-12 && (proj[1].norm() - h).abs() < 1e-12);
    }

    #[test]
    fn measurement_is_reproducible() {
        let mut rng = stream(9, Domain::PointerTrial, 1000);
        let sys = ToySystem::random(5, 1.0, &mut rng).unwrap();
        assert_eq!(
            impulsive_measure(&sys, 4).unwrap(),
            impulsive_measure(&sys, 4).unwrap()
        );
    }

    #[test]
    fn protective_examples() {
        let sys = ToySystem::diagonal(&[1.0, 0.0], &[0.3, -0.1], 1.0).unwrap();
        let before = sys.clone();
        let p = PointerState::new(0.0, 0.1).unwrap();
        let out = protective_measure(&sys, &p, 5.0).unwrap();
        assert!((out.shift - 0.3).abs() < 1e-15);
        assert!(out.discernible);
        assert_eq!(sys, before);

        let h = 1.0 / 2f64.sqrt();
        let sym = ToySystem::diagonal(&[h, h], &[1.0, -1.0], 1.0).unwrap();
        let out = protective_measure(&sym, &PointerState::new(0.0, 1e-9).unwrap(), 1.0).unwrap();
        assert!(out.shift.abs() < 1e-15 && !out.discernible);
        assert!(protective_measure(&sym, &p, 0.0).is_err());
    }

    #[test]
    fn exponential_bound_at_twenty() {
        let sys = ToySystem::diagonal(&[0.6, 0.8], &[0.5, 0.25], 2.0).unwrap();
        let out = protective_measure(&sys, &PointerState::new(0.0, 1.0).unwrap(), 10.0).unwrap();
        let c_expected = 0.36 * 0.25 + 0.64 * 0.0625;
        assert!((out.prefactor - c_expected).abs() < 1e-15);
        assert!((out.excitation_bound / c_expected - 2.061_153_622_438_558e-9).abs() < 1e-20);
    }

    #[test]
    fn completeness_on_diagonal_case() {
        let sys = ToySystem::diagonal(&[0.6, 0.8, 0.0], &[1.0, 2.0, 3.0], 1.0).unwrap();
        let c = completeness_sum(&sys);
        assert!((c.sum - (0.36 + 0.64 * 4.0)).abs() < 1e-14);
    }

    #[test]
    fn jsonl_records() {
        let sys = ToySystem::diagonal(&[0.6, 0.8], &[1.0, 2.0], 1.0).unwrap();
        let recs = impulsive_trials(&sys, 1, 3).unwrap();
        let mut buf = Vec::new();
        write_trials_jsonl(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        let first: TrialRecord = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first, recs[0]);
        assert!(text.starts_with("{\"trial\":0,\"outcome\":"));
    }

    proptest! {
        #[test]
        fn completeness_sum_rule(seed in 0u64..10_000, d in 1usize..10) {
            let mut rng = stream(seed, Domain::PointerTrial, u64::MAX);
            let sys = ToySystem::random(d, 1.0, &mut rng).unwrap();
            let c = completeness_sum(&sys);
            prop_assert!((c.sum - c.expectation_square).abs() < 1e-10);
        }

        #[test]
        fn bound_decreases_with_duration(seed in 0u64..1000, t in 0.1f64..50.0, dt in 1e-3f64..10.0) {
            let mut rng = stream(seed, Domain::PointerTrial, u64::MAX);
            let sys = ToySystem::random(4, 0.7, &mut rng).unwrap();
            let p = PointerState::new(0.0, 1.0).unwrap();
            let a = protective_measure(&sys, &p, t).unwrap();
            let b = protective_measure(&sys, &p, t + dt).unwrap();
            prop_assert!(b.excitation_bound <= a.excitation_bound);
            if a.excitation_bound < 1.0 {
                prop_assert!(b.excitation_bound < a.excitation_bound);
            }
        }

        #[test]
        fn probabilities_sum_to_one(seed in 0u64..1000, d in 1usize..9) {
            let mut rng = stream(seed, Domain::PointerTrial, u64::MAX);
            let sys = ToySystem::random(d, 1.0, &mut rng).unwrap();
            let p = sys.eigenspaces().unwrap().probabilities(sys.state());
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
