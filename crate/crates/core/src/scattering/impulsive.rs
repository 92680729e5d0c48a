//! Sudden collisions that may destroy the bound state.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formfactor::{survival_from_squares, FormFactorCurve, MultiCollisionSurvival};
use crate::numeric::linear_fit;
use crate::rng::{stream, Domain};
use crate::state::RadialBoundState;

use super::born::QSampler;
use super::event::{Regime, ScatteringEvent};

/// Table resolution of F used to score transfers.
const CURVE_POINTS: usize = 4097;

/// Source of momentum transfers |Δp| for successive collisions.
pub trait TransferSampler: Sync {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64;
    /// Upper bound of every transfer this sampler can return.
    fn max_transfer(&self) -> f64;
}

impl TransferSampler for QSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    fn max_transfer(&self) -> f64 {
        self.q_max()
    }
}

/// Every collision transfers the same |Δp|.
#[derive(Debug, Clone, Copy)]
pub struct FixedTransfer(pub f64);

impl TransferSampler for FixedTransfer {
    fn sample(&self, _rng: &mut ChaCha8Rng) -> f64 {
        self.0
    }

    fn max_transfer(&self) -> f64 {
        self.0
    }
}

/// History of one run of successive collisions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalTrace {
    pub run: u64,
    /// Transfers of the collisions that happened, the last possibly fatal.
    pub transfers: Vec<f64>,
    /// |F(Δpᵢ)|² per collision.
    pub survival_factors: Vec<f64>,
    /// ∏_{i≤k}|F(Δpᵢ)|² after each collision.
    pub cumulative: Vec<f64>,
    /// Index of the destroying collision, if any.
    pub destroyed_at: Option<usize>,
    pub bound: MultiCollisionSurvival,
}

impl SurvivalTrace {
    /// Collisions survived.
    pub fn survived(&self) -> usize {
        self.destroyed_at.unwrap_or(self.transfers.len())
    }

    pub fn respects_bound(&self) -> bool {
        self.bound.probability <= self.bound.mean_bound * (1.0 + 1e-12) + f64::MIN_POSITIVE
    }
}

/// Survival fraction versus collision index over an ensemble of runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSurvival {
    pub runs: u64,
    /// Runs intact after k collisions, k = 0..=N.
    pub survivors: Vec<u64>,
    pub fractions: Vec<f64>,
    /// Fit of −ln S(k) = slope·k + intercept over k = 0..=fit_last.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub fit_last: usize,
    /// True when every run's product survival is below its mean bound.
    pub bound_respected: bool,
}

/// Scores transfers through a tabulated F of the target state.
pub struct ImpulsiveSimulator<'a, S: TransferSampler> {
    curve: FormFactorCurve,
    sampler: &'a S,
}

impl<'a, S: TransferSampler> ImpulsiveSimulator<'a, S> {
    pub fn new(state: &RadialBoundState, sampler: &'a S) -> Result<Self> {
        let q_max = sampler.max_transfer();
        if !(q_max >= 0.0) || !q_max.is_finite() {
            return Err(Error::NegativeMomentum(q_max));
        }
        let curve = FormFactorCurve::for_state(state, q_max.max(1e-6), CURVE_POINTS)?;
        Ok(Self { curve, sampler })
    }

    fn survival_factor(&self, dp: f64) -> f64 {
        let f = self.curve.eval(dp);
        (f * f).clamp(0.0, 1.0)
    }

    /// Up to `collisions` collisions, stopping at the first destruction.
    pub fn run(&self, collisions: usize, seed: u64, run: u64) -> Result<SurvivalTrace> {
        if collisions == 0 {
            return Err(Error::InvalidInput("need at least one collision".into()));
        }
        let mut rng = stream(seed, Domain::ImpulsiveRun, run);
        let mut transfers = Vec::new();
        let mut factors = Vec::new();
        let mut cumulative = Vec::new();
        let mut destroyed_at = None;
        let mut product = 1.0;
        for k in 0..collisions {
            let dp = self.sampler.sample(&mut rng);
            if !(dp >= 0.0) {
                return Err(Error::NegativeMomentum(dp));
            }
            let s = self.survival_factor(dp);
            product *= s;
            transfers.push(dp);
            factors.push(s);
            cumulative.push(product);
            if rng.random::<f64>() >= s {
                destroyed_at = Some(k);
                break;
            }
        }
        let bound = survival_from_squares(&factors);
        Ok(SurvivalTrace {
            run,
            transfers,
            survival_factors: factors,
            cumulative,
            destroyed_at,
            bound,
        })
    }

    /// `runs` independent runs, returned in run order.
    pub fn runs(&self, collisions: usize, runs: u64, seed: u64) -> Result<Vec<SurvivalTrace>> {
        (0..runs)
            .into_par_iter()
            .map(|r| self.run(collisions, seed, r))
            .collect()
    }
}

/// Survival fractions of `traces` and a linear fit of −ln S(k) over the first
/// `fit_collisions` collisions (stopping early once no run survives).
pub fn ensemble_survival(
    traces: &[SurvivalTrace],
    collisions: usize,
    fit_collisions: usize,
) -> EnsembleSurvival {
    let mut survivors = vec![0u64; collisions + 1];
    for t in traces {
        for s in survivors.iter_mut().take(t.survived() + 1) {
            *s += 1;
        }
    }
    let runs = traces.len() as u64;
    let fractions: Vec<f64> = survivors
        .iter()
        .map(|&s| s as f64 / runs.max(1) as f64)
        .collect();
    let limit = fit_collisions.min(collisions);
    let fit_last = (0..=limit)
        .take_while(|&k| survivors[k] > 0)
        .last()
        .unwrap_or(0);
    let ks: Vec<f64> = (0..=fit_last).map(|k| k as f64).collect();
    let ys: Vec<f64> = (0..=fit_last).map(|k| -fractions[k].ln()).collect();
    let (slope, intercept, r_squared) = if ks.len() >= 3 {
        linear_fit(&ks, &ys)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    EnsembleSurvival {
        runs,
        survivors,
        fractions,
        slope,
        intercept,
        r_squared,
        fit_last,
        bound_respected: traces.iter().all(SurvivalTrace::respects_bound),
    }
}

/// One run of up to `collisions` collisions with transfers from `sampler`.
pub fn simulate_impulsive_run<S: TransferSampler>(
    state: &RadialBoundState,
    sampler: &S,
    collisions: usize,
    seed: u64,
) -> Result<SurvivalTrace> {
    ImpulsiveSimulator::new(state, sampler)?.run(collisions, seed, 0)
}

/// One event per collision; ids count collisions across runs in run order.
pub fn trace_events(traces: &[SurvivalTrace]) -> Vec<ScatteringEvent> {
    let mut id = 0;
    let mut out = Vec::new();
    for t in traces {
        for (k, &dp) in t.transfers.iter().enumerate() {
            out.push(ScatteringEvent {
                event_id: id,
                regime: Regime::Impulsive,
                impact_parameter: None,
                theta: None,
                phi: None,
                transfer: dp,
                dp: None,
                survived: Some(t.destroyed_at != Some(k)),
            });
            id += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::default_grid;

    fn hydrogen() -> RadialBoundState {
        RadialBoundState::hydrogen_1s(default_grid()).unwrap()
    }

    #[test]
    fn zero_transfer_never_destroys() {
        let s = hydrogen();
        let sampler = FixedTransfer(0.0);
        let sim = ImpulsiveSimulator::new(&s, &sampler).unwrap();
        let traces = sim.runs(50, 200, 1).unwrap();
        assert!(traces
            .iter()
            .all(|t| t.destroyed_at.is_none() && t.transfers.len() == 50));
        let e = ensemble_survival(&traces, 50, 20);
        assert!(e.fractions.iter().all(|&f| f == 1.0));
    }

    #[test]
    fn fixed_transfer_matches_bernoulli_product() {
        let s = hydrogen();
        let dp = 2.0 * (0.9f64.powf(-0.25) - 1.0).sqrt();
        let sampler = FixedTransfer(dp);
        let sim = ImpulsiveSimulator::new(&s, &sampler).unwrap();
        let runs = 10_000;
        let traces = sim.runs(10, runs, 7).unwrap();
        let e = ensemble_survival(&traces, 10, 10);
        let p = 0.9f64.powi(10);
        let sigma = (p * (1.0 - p) / runs as f64).sqrt();
        assert!(
            (e.fractions[10] - p).abs() < 3.0 * sigma,
            "{}",
            e.fractions[10]
        );
        assert!((e.slope + 0.9f64.ln()).abs() < 0.01);
        assert!(e.bound_respected);
    }

    #[test]
    fn traces_are_reproducible() {
        let s = hydrogen();
        let sampler = FixedTransfer(1.0);
        let sim = ImpulsiveSimulator::new(&s, &sampler).unwrap();
        assert_eq!(sim.run(30, 3, 4).unwrap(), sim.run(30, 3, 4).unwrap());
        assert!(sim.run(0, 3, 4).is_err());
    }

    #[test]
    fn events_flag_the_fatal_collision() {
        let s = hydrogen();
        let sampler = FixedTransfer(3.0);
        let sim = ImpulsiveSimulator::new(&s, &sampler).unwrap();
        let traces = sim.runs(5, 20, 2).unwrap();
        let events = trace_events(&traces);
        let fatal = events.iter().filter(|e| e.survived == Some(false)).count();
        assert_eq!(
            fatal,
            traces.iter().filter(|t| t.destroyed_at.is_some()).count()
        );
        assert!(events
            .windows(2)
            .all(|w| w[1].event_id == w[0].event_id + 1));
    }
}
