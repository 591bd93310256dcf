//! The `iontrap` command line: thin wrappers that read JSON inputs, call the
//! library and emit text, JSON or CSV with a run manifest.
//!
//! Exit codes: 0 success, 2 input error, 3 instability, 4 model assumption
//! violated, 5 Fock truncation, 6 continuation failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::chain::{find_equilibrium, normal_modes, scan_field};
use crate::cooling::cooling_report;
use crate::error::{Error, Result};
use crate::io::{
    read_json, resolve_all, trajectory_csv, ChainConfig, LaserSpec, ModeTable, OutputDoc, Protocol, ProtocolFile,
    ReorderFile, ReorderSpec, RunManifest, ScanTable, StartOrders,
};
use crate::qls::{
    apply_pulse, comb_raman_frequencies, dicke_mean_fidelity, pumping_ladder_monte_carlo, qnd_monte_carlo,
    schmidt_monte_carlo, JointState, QndSummary, ReadoutRecord, SchmidtSummary,
};
use crate::reorder::{
    critical_radial_field, linear_start, ramp_all_orders, ramp_and_relax, run_asymmetric_reorder, ConfigurationClass,
    RampSchedule,
};
use crate::trap::Axis;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INSTABILITY: i32 = 3;
pub const EXIT_ASSUMPTION: i32 = 4;
pub const EXIT_TRUNCATION: i32 = 5;
pub const EXIT_CONTINUATION: i32 = 6;

/// Trajectories for Monte Carlo protocols when neither the file nor the
/// command line sets a count.
pub const DEFAULT_TRAJECTORIES: usize = 1000;
/// Largest run for which every readout record is embedded in the output.
pub const MAX_EMBEDDED_RECORDS: usize = 10;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_)
        | Error::DegenerateReference(_)
        | Error::InconsistentReference { .. }
        | Error::ZeroLikelihood(_)
        | Error::Json(_)
        | Error::Io(_) => EXIT_INPUT,
        Error::UnstableTrap { .. }
        | Error::UnstableMode(_)
        | Error::NoConvergence { .. }
        | Error::IonEscape { .. }
        | Error::NoMinimum(_) => EXIT_INSTABILITY,
        Error::ScanAborted { source, .. } => exit_code(source),
        Error::AssumptionViolated(_) => EXIT_ASSUMPTION,
        Error::Truncation { .. } => EXIT_TRUNCATION,
        Error::Continuation { .. } | Error::NoTransition(_) => EXIT_CONTINUATION,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "iontrap",
    version,
    about = "Mixed-species ion chains: modes, scans, cooling, quantum-logic readout and reordering"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Emit a JSON document.
    #[arg(long, conflicts_with = "csv")]
    pub json: bool,
    /// Emit CSV.
    #[arg(long)]
    pub csv: bool,
    /// Record wall time in the manifest (breaks byte-identical reruns).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium positions and normal modes of a chain.
    Modes {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Mode frequencies against a static field.
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: Axis,
        /// V/m.
        #[arg(long, allow_hyphen_values = true)]
        min: f64,
        /// V/m.
        #[arg(long, allow_hyphen_values = true)]
        max: f64,
        #[arg(long)]
        points: usize,
        /// Add shifts relative to the zero-field point (kHz).
        #[arg(long)]
        relative: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Doppler cooling and recoil heating rates per mode.
    Cooling {
        #[arg(long)]
        config: PathBuf,
        /// Laser JSON; overrides the config's `laser` entry.
        #[arg(long)]
        laser: Option<PathBuf>,
        /// Report even when the linewidth is below a mode frequency.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Quantum-logic readout and state-preparation protocols.
    Qls {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trajectories: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Reordering ramps, asymmetric reordering and critical fields.
    Reorder {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// What a command produced, before formatting.
struct Report {
    json: String,
    text: String,
    csv: Option<String>,
}

fn finish<T: Serialize>(
    mut manifest: RunManifest,
    result: T,
    start: Instant,
    out: &OutputArgs,
    text: String,
    csv: Option<String>,
) -> Result<Report> {
    if out.timing {
        manifest.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    Ok(Report {
        json: OutputDoc::new(manifest, result).to_json()?,
        text,
        csv,
    })
}

/// Parses `args` (including the program name) and runs the command,
/// writing results to `stdout` and diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    let output = match &cli.command {
        Command::Modes { output, .. }
        | Command::Scan { output, .. }
        | Command::Cooling { output, .. }
        | Command::Qls { output, .. }
        | Command::Reorder { output, .. } => output,
    };
    match execute(&cli.command) {
        Ok(report) => {
            let body = if output.json {
                report.json
            } else if output.csv {
                match report.csv {
                    Some(c) => c,
                    None => {
                        let _ = writeln!(stderr, "error: this command has no CSV output");
                        return EXIT_INPUT;
                    }
                }
            } else {
                report.text
            };
            if stdout.write_all(body.as_bytes()).is_err() {
                return EXIT_INPUT;
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: &Command) -> Result<Report> {
    let start = Instant::now();
    match command {
        Command::Modes { config, output } => cmd_modes(config, output, start),
        Command::Scan {
            config,
            axis,
            min,
            max,
            points,
            relative,
            output,
        } => cmd_scan(config, *axis, *min, *max, *points, *relative, output, start),
        Command::Cooling {
            config,
            laser,
            force,
            output,
        } => cmd_cooling(config, laser.as_deref(), *force, output, start),
        Command::Qls {
            config,
            seed,
            trajectories,
            output,
        } => cmd_qls(config, *seed, *trajectories, output, start),
        Command::Reorder { config, output } => cmd_reorder(config, output, start),
    }
}

fn chain_modes(path: &Path) -> Result<(ChainConfig, String, crate::chain::NormalModeSet)> {
    let (config, digest): (ChainConfig, String) = read_json(path)?;
    let (trap, species) = config.build()?;
    let chain = find_equilibrium(&trap, &species, None)?;
    let modes = normal_modes(&trap, &chain)?;
    if let Some(a) = modes.stable.iter().position(|s| !s) {
        return Err(Error::UnstableMode(a));
    }
    Ok((config, digest, modes))
}

fn cmd_modes(config: &Path, output: &OutputArgs, start: Instant) -> Result<Report> {
    let (_, digest, modes) = chain_modes(config)?;
    let table = ModeTable::from_modes(&modes);
    let text = table.to_text();
    let csv = table.to_csv();
    finish(
        RunManifest::new("modes", &[digest], None),
        table,
        start,
        output,
        text,
        Some(csv),
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_scan(
    config: &Path,
    axis: Axis,
    min: f64,
    max: f64,
    points: usize,
    relative: bool,
    output: &OutputArgs,
    start: Instant,
) -> Result<Report> {
    if points < 2 || !(min < max) || !min.is_finite() || !max.is_finite() {
        return Err(Error::InvalidInput(
            "scan needs min < max and at least two points".into(),
        ));
    }
    let (cfg, digest): (ChainConfig, String) = read_json(config)?;
    let (trap, species) = cfg.build()?;
    let fields: Vec<f64> = (0..points)
        .map(|i| {
            let v = min + (max - min) * i as f64 / (points - 1) as f64;
            // land exactly on zero for symmetric grids
            if v.abs() < 1e-12 * (max - min) {
                0.0
            } else {
                v
            }
        })
        .collect();
    let scan = scan_field(&trap, &species, axis, &fields)?;
    let table = ScanTable::from_scan(&scan, relative)?;
    let csv = table.to_csv();
    finish(
        RunManifest::new("scan", &[digest], None),
        table,
        start,
        output,
        csv.clone(),
        Some(csv),
    )
}

#[derive(Serialize)]
struct CoolingRow {
    mode: usize,
    frequency_mhz: f64,
    axis: Axis,
    lamb_dicke: f64,
    /// quanta/s; negative cools.
    cooling_rate: f64,
    /// quanta/s.
    heating_rate: f64,
    steady_state_occupation: Option<f64>,
}

#[derive(Serialize)]
struct CoolingDoc {
    ion: usize,
    species: String,
    saturation: f64,
    detuning_linewidths: f64,
    excited_population: f64,
    modes: Vec<CoolingRow>,
    assumptions: Vec<String>,
}

fn cmd_cooling(
    config: &Path,
    laser_path: Option<&Path>,
    force: bool,
    output: &OutputArgs,
    start: Instant,
) -> Result<Report> {
    let (cfg, digest, modes) = chain_modes(config)?;
    let mut digests = vec![digest];
    let spec: LaserSpec = match laser_path {
        Some(p) => {
            let (l, d) = read_json(p)?;
            digests.push(d);
            l
        }
        None => cfg
            .laser
            .clone()
            .ok_or_else(|| Error::InvalidInput("no laser given (use --laser or a `laser` entry)".into()))?,
    };
    let laser = spec.build()?;
    if spec.ion >= modes.config.n_ions() {
        return Err(Error::InvalidInput(format!(
            "laser addresses ion {} of {}",
            spec.ion,
            modes.config.n_ions()
        )));
    }
    let fastest = modes.frequencies.iter().fold(0.0f64, |m, w| m.max(*w));
    let resolved = laser.linewidth < fastest;
    if resolved && !force {
        return Err(Error::AssumptionViolated(format!(
            "linewidth Γ/2π = {:.3} MHz is below the highest mode frequency {:.3} MHz; Doppler rates need Γ ≫ ω (use --force)",
            spec.linewidth_mhz,
            fastest / std::f64::consts::TAU * 1e-6
        )));
    }
    let report = cooling_report(&modes, &laser, spec.ion, spec.occupation)?;
    let mut assumptions = report.assumptions.clone();
    if resolved {
        assumptions.push("forced: linewidth below some mode frequencies".to_string());
    }
    let rows: Vec<CoolingRow> = report
        .modes
        .iter()
        .map(|m| CoolingRow {
            mode: m.mode,
            frequency_mhz: m.frequency_hz * 1e-6,
            axis: modes.dominant_axis(m.mode),
            lamb_dicke: m.lamb_dicke,
            cooling_rate: m.doppler_rate + 0.0,
            heating_rate: m.recoil_heating_rate,
            steady_state_occupation: m.equilibrium_occupation,
        })
        .collect();
    let mut text = format!(
        "cooling ion {} ({}), s = {:.3}, Δ/Γ = {:.3}\n{:>5} {:>10} {:>4} {:>10} {:>13} {:>13} {:>10}\n",
        spec.ion,
        modes.config.species[spec.ion].name,
        report.saturation,
        report.detuning_over_linewidth,
        "mode",
        "f (MHz)",
        "axis",
        "eta",
        "cool (1/s)",
        "heat (1/s)",
        "n_ss"
    );
    let mut csv =
        String::from("mode,frequency_mhz,axis,lamb_dicke,cooling_rate,heating_rate,steady_state_occupation\n");
    for r in &rows {
        let nss = r
            .steady_state_occupation
            .map(|n| format!("{n:.3}"))
            .unwrap_or_else(|| "-".into());
        text += &format!(
            "{:>5} {:>10.4} {:>4} {:>10.4} {:>13.4e} {:>13.4e} {:>10}\n",
            r.mode, r.frequency_mhz, r.axis, r.lamb_dicke, r.cooling_rate, r.heating_rate, nss
        );
        csv += &format!(
            "{},{},{},{},{},{},{}\n",
            r.mode,
            r.frequency_mhz,
            r.axis,
            r.lamb_dicke,
            r.cooling_rate,
            r.heating_rate,
            r.steady_state_occupation.map(|n| n.to_string()).unwrap_or_default()
        );
    }
    let doc = CoolingDoc {
        ion: spec.ion,
        species: modes.config.species[spec.ion].name.clone(),
        saturation: report.saturation,
        detuning_linewidths: report.detuning_over_linewidth,
        excited_population: report.excited_population,
        modes: rows,
        assumptions,
    };
    finish(
        RunManifest::new("cooling", &digests, None),
        doc,
        start,
        output,
        text,
        Some(csv),
    )
}

#[derive(Serialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
enum QlsResult {
    Qnd {
        summary: QndSummary,
        /// Mean posterior of the true state after each round, over the
        /// trajectories still running.
        mean_true_posterior: Vec<f64>,
        #[serde(skip_serializing_if = "Vec::is_empty")]
        records: Vec<ReadoutRecord>,
    },
    Schmidt {
        summary: SchmidtSummary,
    },
    Dicke {
        trajectories: usize,
        mean_fidelity: f64,
    },
    PumpingLadder {
        trajectories: usize,
        populations: Vec<f64>,
    },
    Pulses {
        level_populations: Vec<Vec<f64>>,
        fock_populations: Vec<f64>,
        /// [re, im] per basis state.
        amplitudes: Vec<[f64; 2]>,
    },
    Comb {
        frequencies_mhz: Vec<f64>,
    },
}

fn cmd_qls(
    config: &Path,
    seed: Option<u64>,
    trajectories: Option<usize>,
    output: &OutputArgs,
    start: Instant,
) -> Result<Report> {
    let (file, digest): (ProtocolFile, String) = read_json(config)?;
    if file.schema_version != crate::io::SCHEMA_VERSION {
        return Err(Error::InvalidInput(format!(
            "unsupported schema version {}",
            file.schema_version
        )));
    }
    let seed = seed.or(file.seed).unwrap_or(0);
    let n = trajectories.or(file.trajectories).unwrap_or(DEFAULT_TRAJECTORIES);
    if n == 0 {
        return Err(Error::InvalidInput("trajectories must be ≥ 1".into()));
    }
    let (result, text) = match &file.protocol {
        Protocol::Qnd(cfg) => {
            let (summary, records) = qnd_monte_carlo(cfg, n, seed)?;
            let rounds = records.iter().map(|r| r.rounds).max().unwrap_or(0);
            let mean_true_posterior = (0..rounds)
                .map(|k| {
                    let live: Vec<f64> = records
                        .iter()
                        .filter(|r| r.rounds > k)
                        .map(|r| r.posteriors[k][(r.true_label == "P0") as usize])
                        .collect();
                    live.iter().sum::<f64>() / live.len() as f64
                })
                .collect();
            let text = format!(
                "qnd readout: {} trajectories, error rate {:.5}, single-round error rate {:.5}, mean rounds {:.3}, timeouts {}\n",
                summary.trajectories, summary.error_rate, summary.single_round_error_rate, summary.mean_rounds, summary.timeouts
            );
            let records = if n <= MAX_EMBEDDED_RECORDS { records } else { Vec::new() };
            (
                QlsResult::Qnd {
                    summary,
                    mean_true_posterior,
                    records,
                },
                text,
            )
        }
        Protocol::Schmidt(cfg) => {
            let summary = schmidt_monte_carlo(cfg, n.max(2), seed)?;
            let text = format!(
                "single-shot readout: {} trajectories, accuracy {:.5} (g {:.5}, e {:.5})\n",
                summary.trajectories, summary.accuracy, summary.accuracy_ground, summary.accuracy_excited
            );
            (QlsResult::Schmidt { summary }, text)
        }
        Protocol::Dicke(cfg) => {
            let f = dicke_mean_fidelity(cfg, n, seed)?;
            (
                QlsResult::Dicke {
                    trajectories: n,
                    mean_fidelity: f,
                },
                format!("dicke preparation: {n} trajectories, mean fidelity {f:.6}\n"),
            )
        }
        Protocol::PumpingLadder(cfg) => {
            let p = pumping_ladder_monte_carlo(cfg, n, seed)?;
            let text = format!(
                "pumping ladder: {n} trajectories, end-state population {:.6}\n",
                p[cfg.steps]
            );
            (
                QlsResult::PumpingLadder {
                    trajectories: n,
                    populations: p,
                },
                text,
            )
        }
        Protocol::Pulses(seq) => {
            let mut s = JointState::basis(
                seq.ions.clone(),
                seq.n_max,
                seq.initial_levels.as_deref(),
                seq.initial_n,
            )?;
            for p in &seq.pulses {
                apply_pulse(&mut s, p)?;
            }
            let level_populations: Vec<Vec<f64>> = (0..s.n_ions()).map(|i| s.level_populations(i)).collect();
            let mut text = String::from("final level populations:\n");
            for (ion, p) in seq.ions.iter().zip(&level_populations) {
                text += &format!("  {}:", ion.ion);
                for (l, x) in ion.levels.iter().zip(p) {
                    text += &format!(" {l}={x:.6}");
                }
                text.push('\n');
            }
            (
                QlsResult::Pulses {
                    level_populations,
                    fock_populations: s.fock_populations(),
                    amplitudes: s.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
                },
                text,
            )
        }
        Protocol::Comb(c) => {
            let f = comb_raman_frequencies(c.rep_rate_mhz, c.shift_mhz, c.max_order)?;
            let text = f.iter().map(|x| format!("{x}\n")).collect();
            (QlsResult::Comb { frequencies_mhz: f }, text)
        }
    };
    finish(
        RunManifest::new("qls", &[digest], Some(seed)),
        result,
        start,
        output,
        text,
        None,
    )
}

#[derive(Serialize)]
struct RampRun {
    start_order: String,
    final_class: ConfigurationClass,
    /// Per step, per ion [x, y, z] in μm.
    trajectory_um: Vec<Vec<[f64; 3]>>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ReorderResult {
    Ramp {
        runs: Vec<RampRun>,
    },
    Asymmetric {
        initial_order: String,
        final_order: String,
        subcritical: bool,
        reached_target: bool,
        trajectory_um: Vec<Vec<[f64; 3]>>,
    },
    CriticalField {
        axis: Axis,
        field_v_per_m: f64,
    },
}

fn to_um(positions: &[f64]) -> Vec<[f64; 3]> {
    positions
        .chunks(3)
        .map(|c| [c[0] * 1e6, c[1] * 1e6, c[2] * 1e6])
        .collect()
}

fn cmd_reorder(config: &Path, output: &OutputArgs, start: Instant) -> Result<Report> {
    let (file, digest): (ReorderFile, String) = read_json(config)?;
    if file.schema_version != crate::io::SCHEMA_VERSION {
        return Err(Error::InvalidInput(format!(
            "unsupported schema version {}",
            file.schema_version
        )));
    }
    let (result, text, csv) = match &file.spec {
        ReorderSpec::Ramp {
            ions,
            start_orders,
            snapshots,
        } => {
            let traps = snapshots
                .iter()
                .map(|s| Ok((s.perturbations.apply(s.trap.build()?), s.steps)))
                .collect::<Result<Vec<_>>>()?;
            let schedule = RampSchedule { snapshots: traps };
            schedule.validate()?;
            let species = resolve_all(ions)?;
            let results = match start_orders {
                StartOrders::All(_) => ramp_all_orders(&schedule, &species)?,
                StartOrders::Listed(list) => list
                    .iter()
                    .map(|order| {
                        let order = resolve_all(order)?;
                        let c = linear_start(&schedule.snapshots[0].0, &order)?;
                        Ok((c.order_label(), ramp_and_relax(&schedule, &c)?))
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            let mut text = String::new();
            let mut csv_runs = Vec::new();
            let mut runs = Vec::new();
            for (label, r) in results {
                let start_order = label.join(",");
                let end = r.final_class.order_string().unwrap_or_else(|| {
                    format!(
                        "off-axis ({})",
                        r.final_class.geometry.clone().unwrap_or_else(|| "unclassified".into())
                    )
                });
                text += &format!("{start_order} -> {end}\n");
                csv_runs.push((
                    start_order.replace(',', "-"),
                    r.trajectory.iter().map(|c| c.positions.clone()).collect(),
                ));
                runs.push(RampRun {
                    start_order,
                    final_class: r.final_class,
                    trajectory_um: r.trajectory.iter().map(|c| to_um(&c.positions)).collect(),
                });
            }
            (ReorderResult::Ramp { runs }, text, trajectory_csv(&csv_runs))
        }
        ReorderSpec::Asymmetric {
            trap,
            ions,
            field_v_per_m,
            twist_v_per_m2,
            target,
            steps,
        } => {
            let r = run_asymmetric_reorder(
                &trap.build()?,
                &resolve_all(ions)?,
                *field_v_per_m,
                *twist_v_per_m2,
                target.as_deref(),
                *steps,
            )?;
            let mut text = format!("{} -> {}\n", r.initial_order.join(","), r.final_order.join(","));
            if r.subcritical {
                text += "warning: field below the radial alignment threshold; order not controlled\n";
            }
            let csv = trajectory_csv(&[(
                r.initial_order.join("-"),
                r.trajectory.iter().map(|c| c.positions.clone()).collect(),
            )]);
            (
                ReorderResult::Asymmetric {
                    initial_order: r.initial_order.join(","),
                    final_order: r.final_order.join(","),
                    subcritical: r.subcritical,
                    reached_target: r.reached_target,
                    trajectory_um: r.trajectory.iter().map(|c| to_um(&c.positions)).collect(),
                },
                text,
                csv,
            )
        }
        ReorderSpec::CriticalField { trap, ions, axis } => {
            let f = critical_radial_field(&trap.build()?, &resolve_all(ions)?, *axis)?;
            (
                ReorderResult::CriticalField {
                    axis: *axis,
                    field_v_per_m: f,
                },
                format!("critical field along {axis}: {f:.1} V/m\n"),
                format!("axis,field_v_per_m\n{axis},{f}\n"),
            )
        }
    };
    finish(
        RunManifest::new("reorder", &[digest], None),
        result,
        start,
        output,
        text,
        Some(csv),
    )
}
