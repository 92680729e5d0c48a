//! Simulated scattering data in the Born, impulsive and semi-classical regimes.

pub mod born;
pub mod event;
pub mod impulsive;
pub mod semiclassical;

pub use born::{sample_born_events, BornConfig, BornGenerator, QSampler};
pub use event::{read_events, write_events, EventFormat, Regime, ScatteringEvent};
pub use impulsive::{
    ensemble_survival, simulate_impulsive_run, trace_events, EnsembleSurvival, FixedTransfer,
    ImpulsiveSimulator, SurvivalTrace, TransferSampler,
};
pub use semiclassical::{
    coulomb_phase, coulomb_strength, deflection_from_charge, sample_semiclassical_events,
    semiclassical_deflection, Deflector, ImpactSampling, RegimePolicy, SemiclassicalConfig,
};
