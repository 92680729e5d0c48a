//! End-to-end runs through the public API.

use std::f64::consts::PI;
use std::io::BufReader;

use pscat_core::budget::{feasibility_report, FeasibilityReport};
use pscat_core::formfactor::InteractionModel;
use pscat_core::model::{AtomModel, ProjectileModel};
use pscat_core::numeric::{geometric_grid, linear_grid};
use pscat_core::reconstruction::{
    estimate_form_factor, reconstruct_density_fourier, reconstruct_semiclassical, InversionOptions,
};
use pscat_core::scattering::{
    read_events, sample_semiclassical_events, write_events, BornConfig, BornGenerator, EventFormat,
    SemiclassicalConfig,
};
use pscat_core::state::{default_grid, RadialBoundState};
use pscat_core::Error;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn hydrogen() -> RadialBoundState {
    RadialBoundState::hydrogen_1s(default_grid()).unwrap()
}

fn slow_heavy(charge: f64) -> ProjectileModel {
    ProjectileModel::with_mass_ratio(&AtomModel::hydrogen(), 1e4, 0.005, charge).unwrap()
}

fn contact_config() -> BornConfig {
    BornConfig {
        interaction: InteractionModel::Contact { strength: 1.0 },
        q_min: 0.1,
        q_max: 12.0,
        ..BornConfig::new(AtomModel::hydrogen(), slow_heavy(1.0), hydrogen())
    }
}

#[test]
fn born_events_survive_both_file_formats() {
    let events = BornGenerator::new(&contact_config())
        .unwrap()
        .generate(500, 3);
    for format in [EventFormat::Csv, EventFormat::Jsonl] {
        let mut buf = Vec::new();
        write_events(&events, format, &mut buf).unwrap();
        let back = read_events(BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(back, events, "{format:?}");
    }
}

#[test]
fn fourier_route_from_file_recovers_hydrogen() {
    let cfg = contact_config();
    let events = BornGenerator::new(&cfg).unwrap().generate(300_000, 11);
    let mut buf = Vec::new();
    write_events(&events, EventFormat::Csv, &mut buf).unwrap();
    let events = read_events(BufReader::new(buf.as_slice())).unwrap();

    let edges = linear_grid(cfg.q_min, cfg.q_max, 49);
    let est =
        estimate_form_factor(&events, &edges, &cfg.interaction, cfg.projectile.momentum()).unwrap();
    let mut r = vec![0.0];
    r.extend(geometric_grid(1e-3, 20.0, 400));
    let mut res = reconstruct_density_fourier(&est.table, &r).unwrap();
    res.compare_with_truth(|x| (-2.0 * x).exp() / PI, (0.1, 5.0));
    let l2 = res.diagnostics.l2_rel_error.unwrap();
    assert!(l2 < 0.06, "L2 {l2}");
}

#[test]
fn contact_sampler_matches_closed_form() {
    let cfg = contact_config();
    let n = 200_000;
    let events = BornGenerator::new(&cfg).unwrap().generate(n, 5);
    let edges = linear_grid(cfg.q_min, cfg.q_max, 41);
    let mut counts = vec![0.0; 40];
    for e in &events {
        let k = edges.partition_point(|&x| x <= e.transfer).clamp(1, 40) - 1;
        counts[k] += 1.0;
    }
    // ∫ q (1 + q²/4)^-4 dq = -(2/3)(1 + q²/4)^-3.
    let antiderivative = |q: f64| -(2.0 / 3.0) * (1.0 + q * q / 4.0).powi(-3);
    let total = antiderivative(cfg.q_max) - antiderivative(cfg.q_min);
    let mut stat = 0.0;
    let mut dof = 0;
    let (mut o, mut e) = (0.0, 0.0);
    for (k, w) in edges.windows(2).enumerate() {
        o += counts[k];
        e += (antiderivative(w[1]) - antiderivative(w[0])) / total * n as f64;
        if e >= 5.0 {
            stat += (o - e) * (o - e) / e;
            dof += 1;
            o = 0.0;
            e = 0.0;
        }
    }
    let p = ChiSquared::new((dof - 1) as f64).unwrap().sf(stat);
    assert!(p > 1e-3, "chi-square {stat} with {} dof, p = {p}", dof - 1);
}

#[test]
fn semiclassical_events_invert_to_the_enclosed_charge() {
    let mut cfg = SemiclassicalConfig::new(AtomModel::hydrogen(), slow_heavy(0.1), hydrogen());
    cfg.events = 64;
    let (events, warning) = sample_semiclassical_events(&cfg).unwrap();
    assert!(warning.is_none(), "{warning:?}");
    let samples: Vec<(f64, f64)> = events
        .iter()
        .map(|e| (e.impact_parameter.unwrap(), e.transfer))
        .collect();
    let mut r = vec![0.0];
    r.extend(geometric_grid(0.05, 15.0, 120));
    let res =
        reconstruct_semiclassical(&samples, &cfg.projectile, &r, &InversionOptions::default())
            .unwrap();
    let q_hat = res.q_hat.unwrap();
    for (&x, &q) in res.r.iter().zip(&q_hat) {
        if (0.5..=4.0).contains(&x) {
            let exact = 1.0 - (-2.0 * x).exp() * (1.0 + 2.0 * x + 2.0 * x * x);
            assert!(
                (q / exact - 1.0).abs() < 0.03,
                "Q({x}) = {q}, exact {exact}"
            );
        }
    }
}

#[test]
fn fast_projectile_is_rejected_as_non_protective() {
    let atom = AtomModel::hydrogen();
    let fast = ProjectileModel::with_mass_ratio(&atom, 1e4, 1.0, 1.0).unwrap();
    let cfg = BornConfig::new(atom, fast, hydrogen());
    assert!(matches!(
        cfg.validate(),
        Err(Error::ProtectiveViolation { .. })
    ));
}

#[test]
fn preset_reports_round_trip_through_json() {
    for name in ["muon", "neutron", "wimp"] {
        let report = feasibility_report(name).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: FeasibilityReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.preset, report.preset);
        assert_eq!(back.inequalities.len(), report.inequalities.len());
        assert!(!report.to_string().is_empty());
    }
    assert!(matches!(
        feasibility_report("proton"),
        Err(Error::UnknownPreset(_))
    ));
}
