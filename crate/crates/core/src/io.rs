//! JSON documents at the command-line boundary (frequencies in MHz, lengths
//! in μm), run manifests, and text/CSV emitters.

use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::{ModeScanResult, NormalModeSet};
use crate::cooling::LaserField;
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::qls::{DickeConfig, PumpingConfig, QndConfig, SchmidtConfig};
use crate::qls::{InternalLevelSet, Pulse};
use crate::trap::{Axis, IonSpecies, TrapModel};

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

const MHZ: f64 = 1e6 * std::f64::consts::TAU;

/// Reads and parses a JSON file, returning the value and the SHA-256 of the
/// raw bytes.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<(T, String)> {
    let bytes = std::fs::read(path)?;
    let value = serde_json::from_slice(&bytes)?;
    Ok((value, hex::encode(Sha256::digest(&bytes))))
}

pub fn species_by_name(name: &str) -> Result<IonSpecies> {
    Ok(match name {
        "Be" | "Be9" => IonSpecies::beryllium9(),
        "Mg" | "Mg24" => IonSpecies::magnesium24(),
        "Mg25" => IonSpecies::magnesium25(),
        "Al" | "Al27" => IonSpecies::aluminium27(),
        "Ca" | "Ca40" => IonSpecies::calcium40(),
        other => return Err(Error::InvalidInput(format!("unknown species '{other}'"))),
    })
}

/// A species given by name ("Be", "Mg24", …) or in full.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpeciesSpec {
    Named(String),
    Custom(IonSpecies),
}

impl SpeciesSpec {
    pub fn resolve(&self) -> Result<IonSpecies> {
        match self {
            SpeciesSpec::Named(n) => species_by_name(n),
            SpeciesSpec::Custom(s) => {
                s.validate()?;
                Ok(s.clone())
            }
        }
    }
}

pub fn resolve_all(specs: &[SpeciesSpec]) -> Result<Vec<IonSpecies>> {
    specs.iter().map(SpeciesSpec::resolve).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrapSpec {
    /// Fitted from the secular frequencies of two species.
    Reference {
        species_a: SpeciesSpec,
        freqs_a_mhz: [f64; 3],
        species_b: SpeciesSpec,
        freqs_b_mhz: [f64; 3],
        #[serde(default)]
        rf_drive_mhz: Option<f64>,
    },
    /// Ideal linear trap from one species' secular frequencies.
    Linear {
        species: SpeciesSpec,
        freqs_mhz: [f64; 3],
        #[serde(default)]
        rf_drive_mhz: Option<f64>,
    },
    /// Raw coefficients.
    Coefficients { trap: TrapModel },
}

impl TrapSpec {
    pub fn build(&self) -> Result<TrapModel> {
        let hz = |f: [f64; 3]| f.map(|x| x * 1e6);
        let (trap, drive) = match self {
            TrapSpec::Reference {
                species_a,
                freqs_a_mhz,
                species_b,
                freqs_b_mhz,
                rf_drive_mhz,
            } => (
                TrapModel::fit_from_reference(
                    &species_a.resolve()?,
                    hz(*freqs_a_mhz),
                    &species_b.resolve()?,
                    hz(*freqs_b_mhz),
                )?,
                *rf_drive_mhz,
            ),
            TrapSpec::Linear {
                species,
                freqs_mhz,
                rf_drive_mhz,
            } => (
                TrapModel::linear_from_single_species(&species.resolve()?, hz(*freqs_mhz))?,
                *rf_drive_mhz,
            ),
            TrapSpec::Coefficients { trap } => (trap.clone(), None),
        };
        let trap = match drive {
            Some(f) => trap.with_rf_drive(f * MHZ),
            None => trap,
        };
        trap.validate()?;
        Ok(trap)
    }
}

/// Optional perturbations layered on a [`TrapSpec`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Perturbations {
    #[serde(default)]
    pub uniform_field_v_per_m: Option<Vec3>,
    #[serde(default)]
    pub axial_gradient_ev_per_m: Option<f64>,
    #[serde(default)]
    pub cubic_scale_um: Option<f64>,
    #[serde(default)]
    pub twist_v_per_m2: Option<f64>,
}

impl Perturbations {
    pub fn apply(&self, mut trap: TrapModel) -> TrapModel {
        if let Some(e) = self.uniform_field_v_per_m {
            trap = trap.with_uniform_field(e);
        }
        if let Some(g) = self.axial_gradient_ev_per_m {
            let m_ref = trap.reference_mass;
            trap = trap.with_axial_gradient(g * crate::constants::ELECTRON_VOLT, m_ref);
        }
        if let Some(l) = self.cubic_scale_um {
            trap = trap.with_cubic_scale(Some(l * 1e-6));
        }
        if let Some(c) = self.twist_v_per_m2 {
            trap = trap.with_twist(c);
        }
        trap
    }
}

/// Trap plus chain, as read by the `modes`, `scan` and `cooling` commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub trap: TrapSpec,
    #[serde(default, flatten)]
    pub perturbations: Perturbations,
    /// Species left to right along z.
    pub ions: Vec<SpeciesSpec>,
    #[serde(default)]
    pub laser: Option<LaserSpec>,
}

impl ChainConfig {
    pub fn build(&self) -> Result<(TrapModel, Vec<IonSpecies>)> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported schema version {}",
                self.schema_version
            )));
        }
        if self.ions.is_empty() {
            return Err(Error::InvalidInput("config lists no ions".into()));
        }
        Ok((self.perturbations.apply(self.trap.build()?), resolve_all(&self.ions)?))
    }
}

/// Cooling laser in lab units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserSpec {
    /// Index of the addressed ion in the chain.
    pub ion: usize,
    pub wavelength_nm: f64,
    /// Propagation direction (normalised on use).
    pub direction: Vec3,
    /// Γ/2π.
    pub linewidth_mhz: f64,
    pub saturation: f64,
    /// Δ/Γ.
    pub detuning_linewidths: f64,
    /// Occupation at which cooling rates are reported.
    #[serde(default)]
    pub occupation: f64,
}

impl LaserSpec {
    pub fn build(&self) -> Result<LaserField> {
        let norm = crate::linalg::norm3(&self.direction);
        if !(self.wavelength_nm > 0.0) || !(norm > 0.0) || !(self.linewidth_mhz > 0.0) {
            return Err(Error::InvalidInput(
                "laser needs a positive wavelength, linewidth and a non-zero direction".into(),
            ));
        }
        let k = std::f64::consts::TAU / (self.wavelength_nm * 1e-9);
        let gamma = self.linewidth_mhz * MHZ;
        LaserField::with_saturation(
            self.direction.map(|d| d / norm * k),
            self.saturation,
            self.detuning_linewidths * gamma,
            gamma,
        )
    }
}

// ---------------------------------------------------------------------------
// protocol and schedule files

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSequence {
    pub ions: Vec<InternalLevelSet>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Initial level per ion (default all 0).
    #[serde(default)]
    pub initial_levels: Option<Vec<usize>>,
    #[serde(default)]
    pub initial_n: usize,
    pub pulses: Vec<Pulse>,
}

fn default_n_max() -> usize {
    crate::qls::DEFAULT_N_MAX
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombSpec {
    pub rep_rate_mhz: f64,
    pub shift_mhz: f64,
    pub max_order: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", content = "parameters", rename_all = "snake_case")]
pub enum Protocol {
    Qnd(QndConfig),
    Schmidt(SchmidtConfig),
    Dicke(DickeConfig),
    PumpingLadder(PumpingConfig),
    Pulses(PulseSequence),
    Comb(CombSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolFile {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(flatten)]
    pub protocol: Protocol,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub trajectories: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampSnapshotSpec {
    pub trap: TrapSpec,
    #[serde(default, flatten)]
    pub perturbations: Perturbations,
    /// Steps from the previous snapshot (ignored for the first).
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_steps() -> usize {
    crate::reorder::DEFAULT_RAMP_STEPS
}

/// Starting orders: every distinct order of `ions`, or explicit lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartOrders {
    All(AllOrders),
    Listed(Vec<Vec<SpeciesSpec>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllOrders {
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReorderSpec {
    /// Follow the chain through trap snapshots.
    Ramp {
        ions: Vec<SpeciesSpec>,
        #[serde(default = "all_orders")]
        start_orders: StartOrders,
        snapshots: Vec<RampSnapshotSpec>,
    },
    /// Field → twist → remove field → remove twist on a two-ion crystal.
    Asymmetric {
        trap: TrapSpec,
        /// Starting order, left to right.
        ions: Vec<SpeciesSpec>,
        field_v_per_m: f64,
        twist_v_per_m2: f64,
        #[serde(default)]
        target: Option<Vec<String>>,
        #[serde(default = "default_steps")]
        steps: usize,
    },
    /// Radial field at which a two-ion crystal aligns.
    CriticalField {
        trap: TrapSpec,
        ions: Vec<SpeciesSpec>,
        axis: Axis,
    },
}

fn all_orders() -> StartOrders {
    StartOrders::All(AllOrders::All)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReorderFile {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(flatten)]
    pub spec: ReorderSpec,
}

// ---------------------------------------------------------------------------
// outputs

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the input file(s), hex.
    pub input_digest: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Only recorded on request, so that reruns are byte-identical.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &str, digests: &[String], seed: Option<u64>) -> Self {
        let input_digest = if digests.len() == 1 {
            digests[0].clone()
        } else {
            hex::encode(Sha256::digest(digests.join("\n").as_bytes()))
        };
        RunManifest {
            command: command.to_string(),
            input_digest,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputDoc<T> {
    pub schema_version: u32,
    pub manifest: RunManifest,
    pub result: T,
}

impl<T: Serialize> OutputDoc<T> {
    pub fn new(manifest: RunManifest, result: T) -> Self {
        OutputDoc {
            schema_version: SCHEMA_VERSION,
            manifest,
            result,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub frequency_mhz: f64,
    pub axis: Axis,
    pub stable: bool,
    /// One [x, y, z] triple per ion, chain order.
    pub eigenvector: Vec<Vec3>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeTable {
    pub species: Vec<String>,
    pub positions_um: Vec<Vec3>,
    /// Highest frequency first.
    pub modes: Vec<ModeRow>,
}

impl ModeTable {
    pub fn from_modes(modes: &NormalModeSet) -> Self {
        let n = modes.config.n_ions();
        let mut rows: Vec<ModeRow> = (0..modes.n_modes())
            .map(|a| ModeRow {
                frequency_mhz: modes.frequency_hz(a) * 1e-6,
                axis: modes.dominant_axis(a),
                stable: modes.stable[a],
                eigenvector: (0..n).map(|j| modes.mode_vector(j, a)).collect(),
            })
            .collect();
        rows.reverse();
        ModeTable {
            species: modes.config.species.iter().map(|s| s.name.clone()).collect(),
            positions_um: (0..n).map(|j| modes.config.position(j).map(|x| x * 1e6)).collect(),
            modes: rows,
        }
    }

    /// Frequency column followed by x/y/z eigenvector components per ion.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:>10}", "f (MHz)");
        for name in &self.species {
            let _ = write!(s, " | {:^26}", name);
        }
        s.push('\n');
        let _ = write!(s, "{:>10}", "");
        for _ in &self.species {
            let _ = write!(s, " | {:>8}{:>9}{:>9}", "x", "y", "z");
        }
        s.push('\n');
        for row in &self.modes {
            let _ = write!(s, "{:>10.2}", row.frequency_mhz);
            for v in &row.eigenvector {
                let _ = write!(s, " | {:>8.3}{:>9.3}{:>9.3}", clean(v[0]), clean(v[1]), clean(v[2]));
            }
            if !row.stable {
                s.push_str("  (unstable)");
            }
            s.push('\n');
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("frequency_mhz,axis");
        for (j, name) in self.species.iter().enumerate() {
            for c in ["x", "y", "z"] {
                let _ = write!(s, ",{name}{j}_{c}");
            }
        }
        s.push('\n');
        for row in &self.modes {
            let _ = write!(s, "{},{}", row.frequency_mhz, row.axis);
            for v in &row.eigenvector {
                let _ = write!(s, ",{},{},{}", v[0], v[1], v[2]);
            }
            s.push('\n');
        }
        s
    }
}

/// Avoids printing "-0.000".
fn clean(x: f64) -> f64 {
    if x.abs() < 5e-4 {
        0.0
    } else {
        x
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub axis: Axis,
    pub field_v_per_m: Vec<f64>,
    /// One column per tracked mode, MHz; `None` where unstable.
    pub frequencies_mhz: Vec<Vec<Option<f64>>>,
    /// Dominant axis of each tracked mode at the first field value.
    pub mode_axes: Vec<Axis>,
    /// Shift from the zero-field value, kHz (with `--relative`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift_khz: Option<Vec<Vec<Option<f64>>>>,
}

impl ScanTable {
    pub fn from_scan(scan: &ModeScanResult, relative: bool) -> Result<Self> {
        let n_modes = scan.n_modes();
        let mut columns = Vec::with_capacity(n_modes);
        let mut axes = Vec::with_capacity(n_modes);
        for label in 0..n_modes {
            let freqs = scan.tracked_frequencies_hz(label);
            let col: Vec<Option<f64>> = scan
                .points
                .iter()
                .enumerate()
                .map(|(p, pt)| pt.stable[scan.tracking[p][label]].then(|| freqs[p] * 1e-6))
                .collect();
            columns.push(col);
            axes.push(dominant_axis(
                &scan.points[0].eigenvectors.column(scan.tracking[0][label]),
            ));
        }
        let shift_khz = if relative {
            let zero = scan
                .field_values
                .iter()
                .position(|&f| f == 0.0)
                .ok_or_else(|| Error::InvalidInput("relative shifts need 0 V/m on the scan grid".into()))?;
            Some(
                columns
                    .iter()
                    .map(|col| {
                        col.iter()
                            .map(|f| match (f, col[zero]) {
                                (Some(a), Some(b)) => Some((a - b) * 1e3),
                                _ => None,
                            })
                            .collect()
                    })
                    .collect(),
            )
        } else {
            None
        };
        Ok(ScanTable {
            axis: scan.axis,
            field_v_per_m: scan.field_values.clone(),
            frequencies_mhz: columns,
            mode_axes: axes,
            shift_khz,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("field_v_per_m");
        for (k, a) in self.mode_axes.iter().enumerate() {
            let _ = write!(s, ",mode{k}_{a}_mhz");
        }
        if self.shift_khz.is_some() {
            for (k, a) in self.mode_axes.iter().enumerate() {
                let _ = write!(s, ",mode{k}_{a}_shift_khz");
            }
        }
        s.push('\n');
        let cell = |x: &Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for (p, f) in self.field_v_per_m.iter().enumerate() {
            let _ = write!(s, "{f}");
            for col in &self.frequencies_mhz {
                let _ = write!(s, ",{}", cell(&col[p]));
            }
            if let Some(shift) = &self.shift_khz {
                for col in shift {
                    let _ = write!(s, ",{}", cell(&col[p]));
                }
            }
            s.push('\n');
        }
        s
    }
}

fn dominant_axis(v: &[f64]) -> Axis {
    let mut w = [0.0; 3];
    for (i, x) in v.iter().enumerate() {
        w[i % 3] += x * x;
    }
    let k = (0..3).max_by(|&a, &b| w[a].total_cmp(&w[b])).expect("three axes");
    Axis::ALL[k]
}

/// Positions in μm, one row per (run, step, ion).
pub fn trajectory_csv(runs: &[(String, Vec<Vec<f64>>)]) -> String {
    let mut s = String::from("start_order,step,ion,x_um,y_um,z_um\n");
    for (label, steps) in runs {
        for (k, pos) in steps.iter().enumerate() {
            for j in 0..pos.len() / 3 {
                let _ = writeln!(
                    s,
                    "{label},{k},{j},{},{},{}",
                    pos[3 * j] * 1e6,
                    pos[3 * j + 1] * 1e6,
                    pos[3 * j + 2] * 1e6
                );
            }
        }
    }
    s
}
