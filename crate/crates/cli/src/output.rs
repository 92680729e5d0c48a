//! Output files: naming, plot-data tables, gnuplot scripts and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::OutputFormat;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    SimulateBorn,
    SimulateSemiclassical,
    SimulateImpulsive,
    ReconstructFourier,
    ReconstructSemiclassical,
    PointerDemo,
    Budget,
}

/// One file a mode writes. An empty suffix is the primary output itself.
#[derive(Debug, Clone, Copy)]
pub struct OutputSpec {
    pub suffix: &'static str,
    pub description: &'static str,
}

const MANIFEST: OutputSpec = OutputSpec {
    suffix: ".manifest.json",
    description: "config hash, seed, version, wall time, outputs",
};

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::SimulateBorn => "simulate born",
            Mode::SimulateSemiclassical => "simulate semiclassical",
            Mode::SimulateImpulsive => "simulate impulsive",
            Mode::ReconstructFourier => "reconstruct fourier",
            Mode::ReconstructSemiclassical => "reconstruct semiclassical",
            Mode::PointerDemo => "pointer demo",
            Mode::Budget => "budget",
        }
    }

    fn default_stem(self) -> &'static str {
        match self {
            Mode::SimulateBorn => "born_events",
            Mode::SimulateSemiclassical => "semiclassical_events",
            Mode::SimulateImpulsive => "impulsive_events",
            Mode::ReconstructFourier => "recon_fourier",
            Mode::ReconstructSemiclassical => "recon_semiclassical",
            Mode::PointerDemo => "pointer_trials",
            Mode::Budget => "budget",
        }
    }

    pub fn default_file(self, format: OutputFormat) -> String {
        let ext = match self {
            Mode::SimulateBorn
            | Mode::SimulateSemiclassical
            | Mode::SimulateImpulsive
            | Mode::PointerDemo => format.extension(),
            Mode::ReconstructFourier | Mode::ReconstructSemiclassical => "csv",
            Mode::Budget => "json",
        };
        format!("{}.{ext}", self.default_stem())
    }

    pub fn outputs(self) -> &'static [OutputSpec] {
        match self {
            Mode::SimulateBorn => &[
                OutputSpec {
                    suffix: "",
                    description: "events (csv or jsonl), one per collision",
                },
                OutputSpec {
                    suffix: ".hist.dat",
                    description:
                        "q-histogram: q, observed density, sigma, target |F|^2 G^2 q density",
                },
                OutputSpec {
                    suffix: ".gp",
                    description: "gnuplot script (with --plot)",
                },
                MANIFEST,
            ],
            Mode::SimulateSemiclassical => &[
                OutputSpec {
                    suffix: "",
                    description: "events (csv or jsonl) with impact parameter and transverse kick",
                },
                OutputSpec {
                    suffix: ".deflection.dat",
                    description: "deflection curve: b, dp, point-charge dp",
                },
                OutputSpec {
                    suffix: ".gp",
                    description: "gnuplot script (with --plot)",
                },
                MANIFEST,
            ],
            Mode::SimulateImpulsive => &[
                OutputSpec {
                    suffix: "",
                    description: "events (csv or jsonl), one per collision, with survival flag",
                },
                OutputSpec {
                    suffix: ".survival.dat",
                    description: "k, survival fraction, sigma, -ln S, fitted -ln S",
                },
                OutputSpec {
                    suffix: ".summary.json",
                    description: "decay fit and geometric-mean bound check",
                },
                OutputSpec {
                    suffix: ".gp",
                    description: "gnuplot script (with --plot)",
                },
                MANIFEST,
            ],
            Mode::ReconstructFourier => &[
                OutputSpec {
                    suffix: "",
                    description: "r_au, rho_hat, rho_sigma, psi_hat, Q_hat",
                },
                OutputSpec {
                    suffix: ".diagnostics.json",
                    description: "clipped mass, charge, errors against the configured state",
                },
                OutputSpec {
                    suffix: ".formfactor.dat",
                    description: "q, |F|^2 estimate, sigma, exact |F|^2 of the configured state",
                },
                OutputSpec {
                    suffix: ".gp",
                    description: "gnuplot script (with --plot)",
                },
                MANIFEST,
            ],
            Mode::ReconstructSemiclassical => &[
                OutputSpec {
                    suffix: "",
                    description: "r_au, rho_hat, rho_sigma, psi_hat, Q_hat",
                },
                OutputSpec {
                    suffix: ".diagnostics.json",
                    description: "condition number, residual, errors against the configured state",
                },
                OutputSpec {
                    suffix: ".profile.dat",
                    description: "r, Q_hat, exact Q of the configured state",
                },
                OutputSpec {
                    suffix: ".gp",
                    description: "gnuplot script (with --plot)",
                },
                MANIFEST,
            ],
            Mode::PointerDemo => &[
                OutputSpec {
                    suffix: "",
                    description: "impulsive trials (csv or jsonl): trial, outcome, collapsed_index",
                },
                OutputSpec {
                    suffix: ".frequencies.dat",
                    description: "index, eigenvalue, observed frequency, sigma, Born probability",
                },
                OutputSpec {
                    suffix: ".summary.json",
                    description: "protective shift, excitation bound, completeness sum, chi-square",
                },
                OutputSpec {
                    suffix: ".gp",
                    description: "gnuplot script (with --plot)",
                },
                MANIFEST,
            ],
            Mode::Budget => &[
                OutputSpec {
                    suffix: "",
                    description: "JSON report: duration bound and preset inequalities",
                },
                MANIFEST,
            ],
        }
    }

    /// `--help` footer listing the files of this mode.
    pub fn help(self) -> String {
        let mut s = String::from("Outputs (OUT defaults to $PSCAT_DATA_DIR/");
        s.push_str(&self.default_file(OutputFormat::Csv));
        s.push_str("):\n");
        for o in self.outputs() {
            let name = if o.suffix.is_empty() {
                "OUT".to_string()
            } else {
                format!("OUT stem + {}", o.suffix)
            };
            s.push_str(&format!("  {name:<28} {}\n", o.description));
        }
        s
    }
}

/// Primary output path and the names derived from it.
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub primary: PathBuf,
}

impl OutputPaths {
    pub fn resolve(mode: Mode, out: Option<&Path>, format: OutputFormat) -> Self {
        let primary = match out {
            Some(p) => p.to_path_buf(),
            None => {
                let root = std::env::var_os("PSCAT_DATA_DIR")
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("."));
                root.join(mode.default_file(format))
            }
        };
        Self { primary }
    }

    pub fn sibling(&self, suffix: &str) -> PathBuf {
        if suffix.is_empty() {
            return self.primary.clone();
        }
        let stem = self
            .primary
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        self.primary.with_file_name(format!("{stem}{suffix}"))
    }

    pub fn create(&self, suffix: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.sibling(suffix);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
        }
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::io(format!("{}: {e}", path.display())))
    }
}

/// Whitespace-separated table with a `#` header line.
pub fn write_table<W: Write>(
    mut w: W,
    columns: &[&str],
    rows: &[Vec<f64>],
) -> Result<(), CliError> {
    writeln!(w, "# {}", columns.join(" "))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.10e}")).collect();
        writeln!(w, "{}", cells.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub struct PlotSpec<'a> {
    pub title: &'a str,
    pub xlabel: &'a str,
    pub ylabel: &'a str,
    pub logscale: &'a str,
    /// `(data file name, using clause, style, label)`.
    pub series: Vec<(String, &'a str, &'a str, &'a str)>,
}

pub fn write_gnuplot<W: Write>(mut w: W, plot: &PlotSpec) -> Result<(), CliError> {
    writeln!(w, "set title '{}'", plot.title)?;
    writeln!(w, "set xlabel '{}'", plot.xlabel)?;
    writeln!(w, "set ylabel '{}'", plot.ylabel)?;
    if !plot.logscale.is_empty() {
        writeln!(w, "set logscale {}", plot.logscale)?;
    }
    let parts: Vec<String> = plot
        .series
        .iter()
        .map(|(file, using, style, label)| {
            format!("'{file}' using {using} with {style} title '{label}'")
        })
        .collect();
    writeln!(w, "plot {}", parts.join(", \\\n     "))?;
    w.flush()?;
    Ok(())
}

pub fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub mode: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub config: String,
}

impl Manifest {
    pub fn write(&self, paths: &OutputPaths) -> Result<(), CliError> {
        let mut w = paths.create(MANIFEST.suffix)?;
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| CliError::io(e.to_string()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}
