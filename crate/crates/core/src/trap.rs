//! Mass-dependent trapping potential for single ions.
//!
//! Each axis carries a ponderomotive coefficient `a` and a static coefficient
//! `b` so that a singly charged ion of mass `m` sees
//! `omega^2(m) = a / m^2 + b / m`. For charge `Z` the ponderomotive part scales
//! with `Z^2` and the static part with `Z`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constants::{ATOMIC_MASS_UNIT, ELEMENTARY_CHARGE};
use crate::error::{Error, Result};
use crate::linalg::Vec3;

/// Default RF drive when none is specified: 2 pi x 100 MHz.
pub const DEFAULT_RF_DRIVE: f64 = TAU * 100e6;

/// Largest relative size of a negative fitted RF coefficient that is clamped
/// to zero instead of rejected.
pub const NEGATIVE_RF_CLAMP: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> Vec3 {
        let mut u = [0.0; 3];
        u[self.index()] = 1.0;
        u
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Axis> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::InvalidInput(format!("unknown axis '{other}'"))),
        }
    }
}

/// One ion type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IonSpecies {
    pub name: String,
    /// Mass in atomic mass units.
    pub mass_u: f64,
    /// Charge in units of the elementary charge.
    pub charge: u32,
}

impl IonSpecies {
    pub fn new(name: impl Into<String>, mass_u: f64, charge: u32) -> Result<Self> {
        let s = IonSpecies {
            name: name.into(),
            mass_u,
            charge,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass_u.is_finite() && self.mass_u > 0.0) {
            return Err(Error::InvalidInput(format!(
                "species '{}' must have positive mass, got {}",
                self.name, self.mass_u
            )));
        }
        if self.charge < 1 {
            return Err(Error::InvalidInput(format!(
                "species '{}' must have charge >= 1",
                self.name
            )));
        }
        Ok(())
    }

    fn known(name: &str, mass_u: f64) -> Self {
        IonSpecies {
            name: name.to_string(),
            mass_u,
            charge: 1,
        }
    }

    pub fn beryllium9() -> Self {
        Self::known("Be", 9.0)
    }

    pub fn magnesium24() -> Self {
        Self::known("Mg", 24.0)
    }

    pub fn magnesium25() -> Self {
        Self::known("Mg25", 25.0)
    }

    pub fn aluminium27() -> Self {
        Self::known("Al", 27.0)
    }

    pub fn calcium40() -> Self {
        Self::known("Ca", 40.0)
    }

    pub fn mass_kg(&self) -> f64 {
        self.mass_u * ATOMIC_MASS_UNIT
    }

    pub fn charge_c(&self) -> f64 {
        f64::from(self.charge) * ELEMENTARY_CHARGE
    }

    fn z(&self) -> f64 {
        f64::from(self.charge)
    }
}

/// Harmonic trap with perturbations.
#[derive(Clone, Debug, PartialEq)]
pub struct TrapModel {
    /// Ponderomotive coefficients a_i, (rad/s)^2 kg^2.
    pub rf_coeff: [f64; 3],
    /// Static coefficients b_i, (rad/s)^2 kg.
    pub static_coeff: [f64; 3],
    /// RF drive angular frequency, rad/s.
    pub rf_drive: f64,
    /// Uniform static field, V/m.
    pub uniform_field: Vec3,
    /// Pseudopotential energy gradient along z for `reference_mass`, J/m.
    pub axial_gradient: f64,
    /// Reference mass for the gradient and cubic terms, kg.
    pub reference_mass: f64,
    /// Length scale of the axial cubic term, m.
    pub cubic_scale: Option<f64>,
    /// Static cross term q c_t y z, V/m^2.
    pub twist_coeff: f64,
}

/// Per-axis stability verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisStability {
    pub axis: Axis,
    /// Total omega^2, rad^2/s^2.
    pub omega_sq: f64,
    /// Secular frequency in Hz; zero when omega^2 <= 0.
    pub frequency_hz: f64,
    /// Upper bound Omega_RF / (2 sqrt 2) in Hz.
    pub bound_hz: f64,
    /// bound - frequency, Hz. Negative when the bound is exceeded.
    pub margin_hz: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub species: String,
    pub axes: Vec<AxisStability>,
}

impl StabilityReport {
    pub fn pass(&self) -> bool {
        self.axes.iter().all(|a| a.pass)
    }
}

impl TrapModel {
    /// Unperturbed trap from explicit coefficients.
    pub fn new(rf_coeff: [f64; 3], static_coeff: [f64; 3], rf_drive: f64) -> Result<Self> {
        let t = TrapModel {
            rf_coeff,
            static_coeff,
            rf_drive,
            uniform_field: [0.0; 3],
            axial_gradient: 0.0,
            reference_mass: IonSpecies::beryllium9().mass_kg(),
            cubic_scale: None,
            twist_coeff: 0.0,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rf_coeff.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidInput(
                "rf coefficients must be finite and non-negative".into(),
            ));
        }
        if self.static_coeff.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("static coefficients must be finite".into()));
        }
        if !(self.rf_drive.is_finite() && self.rf_drive > 0.0) {
            return Err(Error::InvalidInput("rf drive must be positive".into()));
        }
        if !(self.reference_mass.is_finite() && self.reference_mass > 0.0) {
            return Err(Error::InvalidInput("reference mass must be positive".into()));
        }
        if let Some(l) = self.cubic_scale {
            if !l.is_finite() || l == 0.0 {
                return Err(Error::InvalidInput("cubic scale must be finite and non-zero".into()));
            }
        }
        if self.uniform_field.iter().any(|e| !e.is_finite())
            || !self.axial_gradient.is_finite()
            || !self.twist_coeff.is_finite()
        {
            return Err(Error::InvalidInput("trap perturbations must be finite".into()));
        }
        Ok(())
    }

    /// Fits per-axis (a, b) so that both reference species reproduce their
    /// measured secular frequencies (Hz).
    pub fn fit_from_reference(
        species_a: &IonSpecies,
        freqs_a_hz: [f64; 3],
        species_b: &IonSpecies,
        freqs_b_hz: [f64; 3],
    ) -> Result<Self> {
        species_a.validate()?;
        species_b.validate()?;
        if freqs_a_hz
            .iter()
            .chain(&freqs_b_hz)
            .any(|f| !(f.is_finite() && *f > 0.0))
        {
            return Err(Error::InvalidInput("reference frequencies must be positive".into()));
        }
        let (ma, mb) = (species_a.mass_kg(), species_b.mass_kg());
        let (za, zb) = (species_a.z(), species_b.z());
        // [za^2/ma^2, za/ma; zb^2/mb^2, zb/mb] [a; b] = [wa^2; wb^2]
        let (m11, m12) = (za * za / (ma * ma), za / ma);
        let (m21, m22) = (zb * zb / (mb * mb), zb / mb);
        let det = m11 * m22 - m12 * m21;
        if det.abs() <= 1e-9 * (m11 * m22).abs() {
            return Err(Error::DegenerateReference(format!(
                "species '{}' and '{}' have the same charge-to-mass ratio",
                species_a.name, species_b.name
            )));
        }
        let mut rf = [0.0; 3];
        let mut st = [0.0; 3];
        for axis in Axis::ALL {
            let i = axis.index();
            let wa2 = (TAU * freqs_a_hz[i]).powi(2);
            let wb2 = (TAU * freqs_b_hz[i]).powi(2);
            let mut a = (wa2 * m22 - m12 * wb2) / det;
            let b = (m11 * wb2 - m21 * wa2) / det;
            if a < 0.0 {
                let relative = (a * m11 / wa2).abs().max((a * m21 / wb2).abs());
                if relative < NEGATIVE_RF_CLAMP {
                    log::warn!(
                        "fitted rf coefficient on {axis} axis is negative ({relative:.2e} of omega^2); clamping to zero"
                    );
                    a = 0.0;
                } else {
                    return Err(Error::InconsistentReference { axis, relative });
                }
            }
            rf[i] = a;
            st[i] = b;
        }
        let lighter = if ma <= mb { ma } else { mb };
        let mut t = TrapModel::new(rf, st, DEFAULT_RF_DRIVE)?;
        t.reference_mass = lighter;
        Ok(t)
    }

    /// Linear trap with a ponderomotive null along z (`a_x = a_y`, `a_z = 0`)
    /// and a Laplace-constrained static part (`b_x + b_y + b_z = 0`), built
    /// from the three secular frequencies (Hz) of one reference species.
    pub fn linear_from_single_species(species: &IonSpecies, freqs_hz: [f64; 3]) -> Result<Self> {
        species.validate()?;
        if freqs_hz.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::InvalidInput("reference frequencies must be positive".into()));
        }
        let m = species.mass_kg();
        let z = species.z();
        let w2 = freqs_hz.map(|f| (TAU * f).powi(2));
        // per unit charge: z^2 a / m^2 + z b_i / m = w_i^2
        let bz = w2[2] * m / z;
        // b_x - b_y = m (w_x^2 - w_y^2) / z ; b_x + b_y = -b_z
        let diff = m * (w2[0] - w2[1]) / z;
        let bx = 0.5 * (diff - bz);
        let by = 0.5 * (-diff - bz);
        let a = (w2[0] - z * bx / m) * m * m / (z * z);
        if a < 0.0 {
            return Err(Error::InconsistentReference {
                axis: Axis::X,
                relative: (a * z * z / (m * m * w2[0])).abs(),
            });
        }
        let mut t = TrapModel::new([a, a, 0.0], [bx, by, bz], DEFAULT_RF_DRIVE)?;
        t.reference_mass = m;
        Ok(t)
    }

    pub fn with_rf_drive(mut self, rf_drive: f64) -> Self {
        self.rf_drive = rf_drive;
        self
    }

    pub fn with_uniform_field(mut self, field: Vec3) -> Self {
        self.uniform_field = field;
        self
    }

    pub fn with_axial_gradient(mut self, gradient_j_per_m: f64, reference_mass_kg: f64) -> Self {
        self.axial_gradient = gradient_j_per_m;
        self.reference_mass = reference_mass_kg;
        self
    }

    pub fn with_cubic_scale(mut self, lambda3: Option<f64>) -> Self {
        self.cubic_scale = lambda3;
        self
    }

    pub fn with_twist(mut self, twist: f64) -> Self {
        self.twist_coeff = twist;
        self
    }

    /// Total omega^2 per axis for `species`, rad^2/s^2 (may be negative).
    pub fn omega_sq(&self, species: &IonSpecies) -> [f64; 3] {
        let m = species.mass_kg();
        let z = species.z();
        [0, 1, 2].map(|i| z * z * self.rf_coeff[i] / (m * m) + z * self.static_coeff[i] / m)
    }

    /// Harmonic spring constants m omega_i^2 per axis, N/m.
    pub fn spring_constants(&self, species: &IonSpecies) -> [f64; 3] {
        let m = species.mass_kg();
        self.omega_sq(species).map(|w2| m * w2)
    }

    /// Secular frequencies in Hz.
    pub fn secular_frequencies(&self, species: &IonSpecies) -> Result<[f64; 3]> {
        let w2 = self.omega_sq(species);
        for axis in Axis::ALL {
            let v = w2[axis.index()];
            if v <= 0.0 {
                return Err(Error::UnstableTrap {
                    species: species.name.clone(),
                    axis,
                    omega_sq: v,
                });
            }
        }
        Ok(w2.map(|v| v.sqrt() / TAU))
    }

    /// Axial omega of the reference mass, used for the cubic term scale.
    pub fn reference_axial_omega_sq(&self) -> f64 {
        self.rf_coeff[2] / self.reference_mass.powi(2) + self.static_coeff[2] / self.reference_mass
    }

    /// Coefficient K of the static cubic energy K z^3 per unit charge, J/m^3.
    pub fn cubic_coeff(&self) -> f64 {
        match self.cubic_scale {
            Some(l) => self.reference_mass * self.reference_axial_omega_sq() / (2.0 * l),
            None => 0.0,
        }
    }

    pub fn stability_check(&self, species: &IonSpecies) -> StabilityReport {
        let bound_hz = self.rf_drive / (2.0 * 2f64.sqrt()) / TAU;
        let w2 = self.omega_sq(species);
        let axes = Axis::ALL
            .iter()
            .map(|&axis| {
                let v = w2[axis.index()];
                let frequency_hz = if v > 0.0 { v.sqrt() / TAU } else { 0.0 };
                let margin_hz = bound_hz - frequency_hz;
                AxisStability {
                    axis,
                    omega_sq: v,
                    frequency_hz,
                    bound_hz,
                    margin_hz,
                    pass: v > 0.0 && frequency_hz <= bound_hz,
                }
            })
            .collect();
        StabilityReport {
            species: species.name.clone(),
            axes,
        }
    }

    /// Errors unless every listed species is confined on all axes.
    pub fn require_confining(&self, species: &[IonSpecies]) -> Result<()> {
        for s in species {
            self.secular_frequencies(s)?;
        }
        Ok(())
    }

    /// Linear interpolation of every coefficient, `t` in [0, 1].
    pub fn lerp(&self, other: &TrapModel, t: f64) -> TrapModel {
        let l = |a: f64, b: f64| a + (b - a) * t;
        let l3 = |a: [f64; 3], b: [f64; 3]| [l(a[0], b[0]), l(a[1], b[1]), l(a[2], b[2])];
        let cubic_scale = match (self.cubic_scale, other.cubic_scale) {
            // interpolate the inverse scale so that "absent" is the zero end
            (None, None) => None,
            (a, b) => {
                let inv = l(a.map_or(0.0, |x| 1.0 / x), b.map_or(0.0, |x| 1.0 / x));
                (inv != 0.0).then(|| 1.0 / inv)
            }
        };
        TrapModel {
            rf_coeff: l3(self.rf_coeff, other.rf_coeff),
            static_coeff: l3(self.static_coeff, other.static_coeff),
            rf_drive: l(self.rf_drive, other.rf_drive),
            uniform_field: l3(self.uniform_field, other.uniform_field),
            axial_gradient: l(self.axial_gradient, other.axial_gradient),
            reference_mass: l(self.reference_mass, other.reference_mass),
            cubic_scale,
            twist_coeff: l(self.twist_coeff, other.twist_coeff),
        }
    }
}

/// Serialized trap document. Keys carry their units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct TrapModelDoc {
    pub schema_version: u32,
    #[serde(rename = "rf_coeff_x_SI")]
    pub rf_coeff_x: f64,
    #[serde(rename = "rf_coeff_y_SI")]
    pub rf_coeff_y: f64,
    #[serde(rename = "rf_coeff_z_SI")]
    pub rf_coeff_z: f64,
    #[serde(rename = "static_coeff_x_SI")]
    pub static_coeff_x: f64,
    #[serde(rename = "static_coeff_y_SI")]
    pub static_coeff_y: f64,
    #[serde(rename = "static_coeff_z_SI")]
    pub static_coeff_z: f64,
    pub rf_drive_MHz: f64,
    #[serde(default)]
    pub uniform_field_V_per_m: Vec3,
    #[serde(default)]
    pub axial_gradient_J_per_m: f64,
    pub reference_mass_u: f64,
    #[serde(default)]
    pub cubic_scale_m: Option<f64>,
    #[serde(default)]
    pub twist_coeff_V_per_m2: f64,
}

pub const TRAP_SCHEMA_VERSION: u32 = 1;

impl From<&TrapModel> for TrapModelDoc {
    fn from(t: &TrapModel) -> Self {
        TrapModelDoc {
            schema_version: TRAP_SCHEMA_VERSION,
            rf_coeff_x: t.rf_coeff[0],
            rf_coeff_y: t.rf_coeff[1],
            rf_coeff_z: t.rf_coeff[2],
            static_coeff_x: t.static_coeff[0],
            static_coeff_y: t.static_coeff[1],
            static_coeff_z: t.static_coeff[2],
            rf_drive_MHz: t.rf_drive / (2.0 * PI) * 1e-6,
            uniform_field_V_per_m: t.uniform_field,
            axial_gradient_J_per_m: t.axial_gradient,
            reference_mass_u: t.reference_mass / ATOMIC_MASS_UNIT,
            cubic_scale_m: t.cubic_scale,
            twist_coeff_V_per_m2: t.twist_coeff,
        }
    }
}

impl TryFrom<TrapModelDoc> for TrapModel {
    type Error = Error;
    fn try_from(d: TrapModelDoc) -> Result<Self> {
        if d.schema_version != TRAP_SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported trap schema version {}",
                d.schema_version
            )));
        }
        let t = TrapModel {
            rf_coeff: [d.rf_coeff_x, d.rf_coeff_y, d.rf_coeff_z],
            static_coeff: [d.static_coeff_x, d.static_coeff_y, d.static_coeff_z],
            rf_drive: d.rf_drive_MHz * 1e6 * TAU,
            uniform_field: d.uniform_field_V_per_m,
            axial_gradient: d.axial_gradient_J_per_m,
            reference_mass: d.reference_mass_u * ATOMIC_MASS_UNIT,
            cubic_scale: d.cubic_scale_m,
            twist_coeff: d.twist_coeff_V_per_m2,
        };
        t.validate()?;
        Ok(t)
    }
}

impl Serialize for TrapModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TrapModelDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for TrapModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = TrapModelDoc::deserialize(d)?;
        TrapModel::try_from(doc).map_err(serde::de::Error::custom)
    }
}

/// Be+/Mg+ reference frequencies (MHz) of the standard two-species trap.
pub const BE_REFERENCE_MHZ: [f64; 3] = [12.26, 11.19, 2.69];
/// Mg x and y are ordered so that y is the weak Mg axis, matching the Be
/// ordering (x stiffer than y) and the mode structure of the pair. The
/// literal, unswapped listing is kept in [`MG_REFERENCE_MHZ_XY_SWAPPED`].
pub const MG_REFERENCE_MHZ: [f64; 3] = [4.82, 3.72, 1.65];
pub const MG_REFERENCE_MHZ_XY_SWAPPED: [f64; 3] = [3.72, 4.82, 1.65];

/// The Be/Mg trap fitted from [`BE_REFERENCE_MHZ`] and [`MG_REFERENCE_MHZ`].
pub fn be_mg_reference_trap() -> TrapModel {
    TrapModel::fit_from_reference(
        &IonSpecies::beryllium9(),
        BE_REFERENCE_MHZ.map(|f| f * 1e6),
        &IonSpecies::magnesium24(),
        MG_REFERENCE_MHZ.map(|f| f * 1e6),
    )
    .expect("reference frequencies are consistent")
}
