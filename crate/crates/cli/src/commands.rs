//! One function per subcommand. Each writes its data files and returns their
//! paths plus any warnings for the manifest.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use pscat_core::budget::{evaluate_preset, experiment_duration, feasibility_report, BudgetInput};
use pscat_core::formfactor::form_factor;
use pscat_core::numeric::{geometric_grid, linear_grid};
use pscat_core::pointer::{
    completeness_sum, impulsive_trials, protective_measure, write_trials_jsonl, PointerState,
    ToySystem,
};
use pscat_core::reconstruction::{
    estimate_form_factor, reconstruct_density_fourier, reconstruct_semiclassical, InversionOptions,
    ReconstructionResult,
};
use pscat_core::rng::{stream, Domain};
use pscat_core::scattering::{
    ensemble_survival, read_events, sample_semiclassical_events, trace_events, write_events,
    BornGenerator, EventFormat, FixedTransfer, ImpulsiveSimulator, QSampler, Regime,
    ScatteringEvent, TransferSampler,
};
use pscat_core::state::{enclosed_charge, RadialBoundState};
use serde_json::json;

use crate::config::{OutputFormat, RunConfig};
use crate::error::CliError;
use crate::output::{file_name, write_gnuplot, write_table, OutputPaths, PlotSpec};

#[derive(Debug, Default)]
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn wrote(&mut self, paths: &OutputPaths, suffix: &str) {
        self.outputs.push(paths.sibling(suffix));
    }
}

fn event_format(f: OutputFormat) -> EventFormat {
    match f {
        OutputFormat::Csv => EventFormat::Csv,
        OutputFormat::Jsonl => EventFormat::Jsonl,
    }
}

fn write_event_file(
    events: &[ScatteringEvent],
    cfg: &RunConfig,
    paths: &OutputPaths,
    out: &mut Outcome,
) -> Result<(), CliError> {
    let mut w = paths.create("")?;
    write_events(events, event_format(cfg.run.format), &mut w)?;
    w.flush()?;
    out.wrote(paths, "");
    Ok(())
}

fn write_plot(
    cfg: &RunConfig,
    paths: &OutputPaths,
    out: &mut Outcome,
    plot: PlotSpec,
) -> Result<(), CliError> {
    if cfg.run.plot {
        write_gnuplot(paths.create(".gp")?, &plot)?;
        out.wrote(paths, ".gp");
    }
    Ok(())
}

fn load_events(path: &Path) -> Result<Vec<ScatteringEvent>, CliError> {
    let f = File::open(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok(read_events(BufReader::new(f))?)
}

fn at_least(name: &str, value: usize, min: usize) -> Result<(), CliError> {
    if value < min {
        return Err(CliError::config(format!(
            "{name} must be at least {min}, got {value}"
        )));
    }
    Ok(())
}

pub fn simulate_born(cfg: &RunConfig, paths: &OutputPaths) -> Result<Outcome, CliError> {
    at_least("reconstruct.bins", cfg.reconstruct.bins, 1)?;
    let born = cfg.born()?;
    let generator = BornGenerator::new(&born)?;
    let events = generator.generate(born.events, born.seed);
    let mut out = Outcome::default();
    write_event_file(&events, cfg, paths, &mut out)?;

    let edges = linear_grid(born.q_min, born.q_max, cfg.reconstruct.bins + 1);
    let mut counts = vec![0u64; cfg.reconstruct.bins];
    for e in &events {
        let k = edges
            .partition_point(|&x| x <= e.transfer)
            .clamp(1, counts.len())
            - 1;
        counts[k] += 1;
    }
    let n = events.len().max(1) as f64;
    let sampler = generator.sampler();
    let rows: Vec<Vec<f64>> = edges
        .windows(2)
        .zip(&counts)
        .map(|(w, &c)| {
            let width = w[1] - w[0];
            let expected = (sampler.cdf(w[1]) - sampler.cdf(w[0])) / width;
            vec![
                0.5 * (w[0] + w[1]),
                c as f64 / (n * width),
                (c as f64).sqrt() / (n * width),
                expected,
            ]
        })
        .collect();
    write_table(
        paths.create(".hist.dat")?,
        &["q_au", "density", "sigma", "target"],
        &rows,
    )?;
    out.wrote(paths, ".hist.dat");
    let data = file_name(&paths.sibling(".hist.dat"));
    write_plot(
        cfg,
        paths,
        &mut out,
        PlotSpec {
            title: "Born momentum-transfer distribution",
            xlabel: "q [1/a0]",
            ylabel: "dP/dq",
            logscale: "y",
            series: vec![
                (data.clone(), "1:2:3", "yerrorbars", "sampled"),
                (data, "1:4", "lines", "target"),
            ],
        },
    )?;
    Ok(out)
}

pub fn simulate_semiclassical(cfg: &RunConfig, paths: &OutputPaths) -> Result<Outcome, CliError> {
    let sc = cfg.semiclassical()?;
    let (events, warning) = sample_semiclassical_events(&sc)?;
    let mut out = Outcome::default();
    out.warnings.extend(warning);
    write_event_file(&events, cfg, paths, &mut out)?;

    let coupling = sc.projectile.charge * sc.atom.electron_charge;
    let mut rows: Vec<Vec<f64>> = events
        .iter()
        .filter_map(|e| e.impact_parameter.map(|b| (b, e.transfer)))
        .map(|(b, dp)| vec![b, dp, 2.0 * coupling / (sc.projectile.speed * b)])
        .collect();
    rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
    write_table(
        paths.create(".deflection.dat")?,
        &["b_au", "dp_au", "point_charge_dp"],
        &rows,
    )?;
    out.wrote(paths, ".deflection.dat");
    let data = file_name(&paths.sibling(".deflection.dat"));
    write_plot(
        cfg,
        paths,
        &mut out,
        PlotSpec {
            title: "Semi-classical deflection",
            xlabel: "b [a0]",
            ylabel: "dp [a.u.]",
            logscale: "xy",
            series: vec![
                (data.clone(), "1:2", "points", "bound state"),
                (data, "1:3", "lines", "point charge"),
            ],
        },
    )?;
    Ok(out)
}

pub fn simulate_impulsive(cfg: &RunConfig, paths: &OutputPaths) -> Result<Outcome, CliError> {
    let state = cfg.state()?;
    match cfg.impulsive.transfer {
        Some(dp) => run_impulsive(cfg, paths, &state, &FixedTransfer(dp)),
        None => {
            let sampler =
                QSampler::new(&state, &cfg.interaction(), cfg.born.q_min, cfg.born.q_max)?;
            run_impulsive(cfg, paths, &state, &sampler)
        }
    }
}

fn run_impulsive<S: TransferSampler + Sync>(
    cfg: &RunConfig,
    paths: &OutputPaths,
    state: &RadialBoundState,
    sampler: &S,
) -> Result<Outcome, CliError> {
    let imp = &cfg.impulsive;
    at_least("impulsive.collisions", imp.collisions, 1)?;
    let sim = ImpulsiveSimulator::new(state, sampler)?;
    let traces = sim.runs(imp.collisions, imp.runs, cfg.run.seed)?;
    let ens = ensemble_survival(&traces, imp.collisions, imp.fit_collisions);
    let mut out = Outcome::default();
    write_event_file(&trace_events(&traces), cfg, paths, &mut out)?;

    let runs = ens.runs.max(1) as f64;
    let rows: Vec<Vec<f64>> = ens
        .fractions
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            let fit = ens.slope * k as f64 + ens.intercept;
            vec![k as f64, f, (f * (1.0 - f) / runs).sqrt(), -f.ln(), fit]
        })
        .collect();
    write_table(
        paths.create(".survival.dat")?,
        &["k", "fraction", "sigma", "minus_ln_s", "fit"],
        &rows,
    )?;
    out.wrote(paths, ".survival.dat");
    if !ens.bound_respected {
        out.warnings
            .push("a run exceeded its geometric-mean survival bound".into());
    }
    let mut w = paths.create(".summary.json")?;
    serde_json::to_writer_pretty(&mut w, &ens).map_err(|e| CliError::io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    out.wrote(paths, ".summary.json");
    let data = file_name(&paths.sibling(".survival.dat"));
    write_plot(
        cfg,
        paths,
        &mut out,
        PlotSpec {
            title: "Survival under impulsive collisions",
            xlabel: "collisions k",
            ylabel: "-ln S(k)",
            logscale: "",
            series: vec![
                (data.clone(), "1:4", "points", "simulated"),
                (data, "1:5", "lines", "linear fit"),
            ],
        },
    )?;
    Ok(out)
}

fn input_events(cfg: &RunConfig) -> Result<Vec<ScatteringEvent>, CliError> {
    let path = cfg.reconstruct.events.as_ref().ok_or_else(|| {
        CliError::config("an events file is required (--events or reconstruct.events)")
    })?;
    load_events(path)
}

fn write_reconstruction(
    result: &ReconstructionResult,
    paths: &OutputPaths,
    out: &mut Outcome,
) -> Result<(), CliError> {
    let mut w = paths.create("")?;
    result.write_csv(&mut w)?;
    w.flush()?;
    out.wrote(paths, "");
    let mut w = paths.create(".diagnostics.json")?;
    result.write_diagnostics(&mut w)?;
    writeln!(w)?;
    w.flush()?;
    out.wrote(paths, ".diagnostics.json");
    Ok(())
}

pub fn reconstruct_fourier(cfg: &RunConfig, paths: &OutputPaths) -> Result<Outcome, CliError> {
    let rc = &cfg.reconstruct;
    at_least("reconstruct.r_points", rc.r_points, 2)?;
    at_least("reconstruct.bins", rc.bins, 1)?;
    let events = input_events(cfg)?;
    let state = cfg.state()?;
    let momentum = cfg.projectile(cfg.projectile.charge)?.momentum();
    let edges = linear_grid(cfg.born.q_min, cfg.born.q_max, rc.bins + 1);
    let estimate = estimate_form_factor(&events, &edges, &cfg.interaction(), momentum)?;
    let mut r = vec![0.0];
    r.extend(geometric_grid(rc.r_min, rc.r_max, rc.r_points));
    let mut result = reconstruct_density_fourier(&estimate.table, &r)?;
    result.compare_with_truth(|x| state.density(x), (rc.truth_min, rc.truth_max));

    let mut out = Outcome::default();
    if !estimate.empty_bins.is_empty() {
        out.warnings
            .push(format!("empty q-bins omitted: {:?}", estimate.empty_bins));
    }
    write_reconstruction(&result, paths, &mut out)?;
    let t = &estimate.table;
    let var = t.variance().unwrap_or(&[]);
    let rows = t
        .q()
        .iter()
        .zip(t.values())
        .enumerate()
        .map(|(i, (&q, &v))| {
            let exact = form_factor(&state, q)?;
            Ok(vec![
                q,
                v,
                var.get(i).map_or(0.0, |s| s.sqrt()),
                exact * exact,
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    write_table(
        paths.create(".formfactor.dat")?,
        &["q_au", "f2_hat", "sigma", "f2_exact"],
        &rows,
    )?;
    out.wrote(paths, ".formfactor.dat");
    let data = file_name(&paths.sibling(".formfactor.dat"));
    write_plot(
        cfg,
        paths,
        &mut out,
        PlotSpec {
            title: "Form factor estimate",
            xlabel: "q [1/a0]",
            ylabel: "|F(q)|^2",
            logscale: "y",
            series: vec![
                (data.clone(), "1:2:3", "yerrorbars", "estimate"),
                (data, "1:4", "lines", "configured state"),
            ],
        },
    )?;
    Ok(out)
}

pub fn reconstruct_semiclassical_cmd(
    cfg: &RunConfig,
    paths: &OutputPaths,
) -> Result<Outcome, CliError> {
    let rc = &cfg.reconstruct;
    at_least("reconstruct.inversion_points", rc.inversion_points, 2)?;
    let events = input_events(cfg)?;
    let samples: Vec<(f64, f64)> = events
        .iter()
        .filter(|e| e.regime == Regime::Semiclassical)
        .filter_map(|e| e.impact_parameter.map(|b| (b, e.transfer)))
        .collect();
    let state = cfg.state()?;
    let projectile = cfg.projectile(cfg.semiclassical.probe_charge)?;
    let charge = cfg.atom.electron_charge;
    let mut r = vec![0.0];
    r.extend(geometric_grid(
        rc.inversion_r_min,
        rc.inversion_r_max,
        rc.inversion_points,
    ));
    let options = InversionOptions {
        total_charge: charge,
        lambda: rc.lambda,
    };
    let mut result = reconstruct_semiclassical(&samples, &projectile, &r, &options)?;
    result.compare_with_truth(|x| state.density(x), (rc.truth_min, rc.truth_max));

    let mut out = Outcome::default();
    write_reconstruction(&result, paths, &mut out)?;
    let q_hat = result.q_hat.as_deref().unwrap_or(&[]);
    let rows = result
        .r
        .iter()
        .zip(q_hat)
        .map(|(&x, &q)| Ok(vec![x, q, enclosed_charge(&state, charge, x)?]))
        .collect::<Result<Vec<_>, CliError>>()?;
    write_table(
        paths.create(".profile.dat")?,
        &["r_au", "q_hat", "q_exact"],
        &rows,
    )?;
    out.wrote(paths, ".profile.dat");
    let data = file_name(&paths.sibling(".profile.dat"));
    write_plot(
        cfg,
        paths,
        &mut out,
        PlotSpec {
            title: "Enclosed charge from the deflection curve",
            xlabel: "r [a0]",
            ylabel: "Q(r)",
            logscale: "x",
            series: vec![
                (data.clone(), "1:2", "points", "inverted"),
                (data, "1:3", "lines", "configured state"),
            ],
        },
    )?;
    Ok(out)
}

pub fn pointer_demo(cfg: &RunConfig, paths: &OutputPaths) -> Result<Outcome, CliError> {
    let pc = &cfg.pointer;
    at_least("pointer.dimension", pc.dimension, 1)?;
    let seed = cfg.run.seed;
    let mut rng = stream(seed, Domain::PointerSystem, 0);
    let sys = ToySystem::random(pc.dimension, pc.gap, &mut rng)?;
    let trials = impulsive_trials(&sys, seed, pc.trials)?;
    let mut out = Outcome::default();

    let mut w = paths.create("")?;
    match cfg.run.format {
        OutputFormat::Jsonl => write_trials_jsonl(&trials, &mut w)?,
        OutputFormat::Csv => {
            writeln!(w, "trial,outcome,collapsed_index")?;
            for t in &trials {
                writeln!(w, "{},{:.16e},{}", t.trial, t.outcome, t.collapsed_index)?;
            }
        }
    }
    w.flush()?;
    out.wrote(paths, "");

    let spaces = sys.eigenspaces()?;
    let probs = spaces.probabilities(sys.state());
    let mut counts = vec![0u64; probs.len()];
    for t in &trials {
        counts[t.collapsed_index] += 1;
    }
    let n = trials.len().max(1) as f64;
    let mut chi2 = 0.0;
    let mut dof = 0usize;
    let rows: Vec<Vec<f64>> = probs
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let f = counts[k] as f64 / n;
            if p > 0.0 {
                chi2 += (counts[k] as f64 - n * p).powi(2) / (n * p);
                dof += 1;
            }
            vec![k as f64, spaces.values[k], f, (p * (1.0 - p) / n).sqrt(), p]
        })
        .collect();
    write_table(
        paths.create(".frequencies.dat")?,
        &["index", "eigenvalue", "frequency", "sigma", "born"],
        &rows,
    )?;
    out.wrote(paths, ".frequencies.dat");

    let pointer = PointerState::new(pc.pointer_center, pc.pointer_width)?;
    let protective = protective_measure(&sys, &pointer, pc.duration)?;
    let summary = json!({
        "dimension": pc.dimension,
        "trials": pc.trials,
        "expectation": sys.expectation(),
        "protective": protective,
        "completeness": completeness_sum(&sys),
        "chi_square": chi2,
        "degrees_of_freedom": dof.saturating_sub(1),
    });
    let mut w = paths.create(".summary.json")?;
    serde_json::to_writer_pretty(&mut w, &summary).map_err(|e| CliError::io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    out.wrote(paths, ".summary.json");
    let data = file_name(&paths.sibling(".frequencies.dat"));
    write_plot(
        cfg,
        paths,
        &mut out,
        PlotSpec {
            title: "Impulsive outcomes against the Born rule",
            xlabel: "eigenvalue",
            ylabel: "probability",
            logscale: "",
            series: vec![
                (data.clone(), "2:3:4", "yerrorbars", "observed"),
                (data, "2:5", "impulses", "Born rule"),
            ],
        },
    )?;
    Ok(out)
}

/// Returns the outcome and the human-readable report for stdout.
pub fn budget(cfg: &RunConfig, paths: &OutputPaths) -> Result<(Outcome, String), CliError> {
    let b = &cfg.budget;
    let input = BudgetInput::new(
        b.mass_ratio,
        b.weakness,
        b.density_fraction,
        b.samples,
        b.atomic_time,
    )?;
    let duration = experiment_duration(&input)?;
    let report = match b.preset.as_deref() {
        None => None,
        Some("custom") => {
            let params = cfg
                .custom
                .as_ref()
                .ok_or_else(|| CliError::config("preset custom needs a [custom] section"))?;
            Some(evaluate_preset(params)?)
        }
        Some(name) => Some(feasibility_report(name)?),
    };
    let mut text = format!(
        "duration: {:.6e} s (N = {}, f = {}, eps = {}, eta_d = {}, t_atom = {} s)\nmax V/v: {:.6e}\n",
        duration.seconds, b.samples, b.mass_ratio, b.weakness, b.density_fraction, b.atomic_time,
        duration.max_speed_ratio
    );
    if let Some(r) = &report {
        text.push_str(&r.to_string());
    }
    let doc = json!({
        "input": input,
        "duration": duration,
        "report": report,
    });
    let mut out = Outcome::default();
    let mut w = paths.create("")?;
    serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| CliError::io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    out.wrote(paths, "");
    Ok((out, text))
}
