//! Laser-cooling and heating rates of chain modes, radiation pressure, and
//! motional figures of merit for gates and carrier transitions.

use serde::{Deserialize, Serialize};

use crate::chain::{lamb_dicke, NormalModeSet};
use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::linalg::{self, Vec3};

/// A driving light field. For Raman beams `wavevector` is the difference
/// wavevector and `detuning` the difference-frequency detuning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserField {
    /// rad/m.
    pub wavevector: Vec3,
    /// rad/s.
    pub rabi_frequency: f64,
    /// rad/s.
    pub detuning: f64,
    /// rad/s.
    pub linewidth: f64,
}

impl LaserField {
    pub fn new(wavevector: Vec3, rabi_frequency: f64, detuning: f64, linewidth: f64) -> Result<Self> {
        let l = LaserField {
            wavevector,
            rabi_frequency,
            detuning,
            linewidth,
        };
        l.validate()?;
        Ok(l)
    }

    /// Field with saturation parameter `s` instead of a Rabi frequency.
    pub fn with_saturation(wavevector: Vec3, saturation: f64, detuning: f64, linewidth: f64) -> Result<Self> {
        if !(saturation >= 0.0) {
            return Err(Error::InvalidInput(format!("saturation must be ≥ 0, got {saturation}")));
        }
        Self::new(wavevector, linewidth * (saturation / 2.0).sqrt(), detuning, linewidth)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth > 0.0 && self.linewidth.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "linewidth must be > 0, got {}",
                self.linewidth
            )));
        }
        if !(self.rabi_frequency.is_finite() && self.detuning.is_finite())
            || self.wavevector.iter().any(|k| !k.is_finite())
        {
            return Err(Error::InvalidInput("laser parameters must be finite".into()));
        }
        Ok(())
    }

    /// s = 2|Ω|²/Γ².
    pub fn saturation(&self) -> f64 {
        2.0 * self.rabi_frequency * self.rabi_frequency / (self.linewidth * self.linewidth)
    }
}

/// Electric-field noise spectral density, (V/m)²/Hz, as a function of
/// angular frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralDensity {
    Constant {
        value: f64,
    },
    /// value·(ω/reference)^exponent.
    PowerLaw {
        value: f64,
        reference: f64,
        exponent: f64,
    },
    /// (ω, S) pairs with ascending ω; linear interpolation, undefined outside.
    Tabulated {
        points: Vec<(f64, f64)>,
    },
}

impl SpectralDensity {
    pub fn at(&self, omega: f64) -> Result<f64> {
        let s = match self {
            SpectralDensity::Constant { value } => *value,
            SpectralDensity::PowerLaw {
                value,
                reference,
                exponent,
            } => value * (omega / reference).powf(*exponent),
            SpectralDensity::Tabulated { points } => {
                let i = points.partition_point(|p| p.0 < omega);
                if points.is_empty() || omega > points[points.len() - 1].0 || omega < points[0].0 {
                    return Err(Error::InvalidInput(format!(
                        "noise spectrum undefined at ω = {omega:e} rad/s"
                    )));
                }
                if points[i].0 == omega {
                    points[i].1
                } else {
                    let (w0, s0) = points[i - 1];
                    let (w1, s1) = points[i];
                    s0 + (s1 - s0) * (omega - w0) / (w1 - w0)
                }
            }
        };
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "noise spectrum invalid at ω = {omega:e} rad/s: {s}"
            )));
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldNoiseSpec {
    /// Unit vector along the noisy field.
    pub direction: Vec3,
    pub spectral_density: SpectralDensity,
}

/// ρ_ee = (s/2)/(1 + s + (2Δ/Γ)²).
pub fn excited_population(laser: &LaserField) -> f64 {
    let s = laser.saturation();
    let x = 2.0 * laser.detuning / laser.linewidth;
    0.5 * s / (1.0 + s + x * x)
}

/// dρ_ee/dΔ, s/rad.
pub fn excited_population_slope(laser: &LaserField) -> f64 {
    let s = laser.saturation();
    let g = laser.linewidth;
    let x = 2.0 * laser.detuning / g;
    let d = 1.0 + s + x * x;
    -0.5 * s * 8.0 * laser.detuning / (g * g * d * d)
}

fn warn_if_not_resolved(modes: &NormalModeSet, laser: &LaserField, mode: usize) {
    if laser.linewidth < 5.0 * modes.frequencies[mode] {
        log::warn!(
            "linewidth {:.3e} rad/s is not ≫ mode frequency {:.3e} rad/s",
            laser.linewidth,
            modes.frequencies[mode]
        );
    }
}

/// dn/dt from scattering on ion `ion`: 2ωη²(n+½)Γ|dρ_ee/dΔ|, negative (cooling)
/// for red detuning.
pub fn doppler_rate(modes: &NormalModeSet, laser: &LaserField, ion: usize, mode: usize, n: f64) -> Result<f64> {
    laser.validate()?;
    let eta = lamb_dicke(modes, laser.wavevector, ion, mode)?;
    warn_if_not_resolved(modes, laser, mode);
    let magnitude =
        2.0 * modes.frequencies[mode] * eta * eta * (n + 0.5) * laser.linewidth * excited_population_slope(laser).abs();
    Ok(if laser.detuning < 0.0 {
        -magnitude
    } else if laser.detuning > 0.0 {
        magnitude
    } else {
        0.0
    })
}

/// Heating from photon recoil: absorption along k plus dipole-pattern
/// spontaneous emission, [η² + (2/5)·ħ|k|²|e'|²/(2mω)]·Γρ_ee. Assumes s ≪ 1.
pub fn recoil_heating_rate(modes: &NormalModeSet, laser: &LaserField, ion: usize, mode: usize) -> Result<f64> {
    laser.validate()?;
    let eta = lamb_dicke(modes, laser.wavevector, ion, mode)?;
    let m = modes.config.species[ion].mass_kg();
    let k2 = linalg::dot3(&laser.wavevector, &laser.wavevector);
    let e = modes.mode_vector(ion, mode);
    let emission = 0.4 * HBAR * k2 * linalg::dot3(&e, &e) / (2.0 * m * modes.frequencies[mode]);
    Ok((eta * eta + emission) * laser.linewidth * excited_population(laser))
}

/// Steady-state occupation where Doppler cooling balances recoil heating.
pub fn doppler_equilibrium(modes: &NormalModeSet, laser: &LaserField, ion: usize, mode: usize) -> Result<f64> {
    if !(laser.detuning < 0.0) {
        return Err(Error::AssumptionViolated("Doppler cooling needs red detuning".into()));
    }
    // cooling is affine in n: rate = -A(n + 1/2) + B
    let a = -doppler_rate(modes, laser, ion, mode, 0.5)?;
    let b = recoil_heating_rate(modes, laser, ion, mode)?;
    if !(a > 0.0) {
        return Err(Error::AssumptionViolated(format!(
            "mode {mode} is not cooled by this laser on ion {ion}"
        )));
    }
    let n = b / a - 0.5;
    if n < 0.0 {
        return Err(Error::AssumptionViolated(format!(
            "no equilibrium with n ≥ 0 (got {n})"
        )));
    }
    Ok(n)
}

/// Ground-state heating rate (quanta/s) of `mode` from uniform field noise.
pub fn anomalous_heating_rate(modes: &NormalModeSet, mode: usize, noise: &FieldNoiseSpec) -> Result<f64> {
    modes.require_stable(mode)?;
    let u = noise.direction;
    if (linalg::norm3(&u) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("noise direction must be a unit vector".into()));
    }
    let omega = modes.frequencies[mode];
    let s = noise.spectral_density.at(omega)?;
    let mut sum = 0.0;
    let mut scale = 0.0;
    for (j, sp) in modes.config.species.iter().enumerate() {
        let term = sp.charge_c() * linalg::dot3(&u, &modes.mode_vector(j, mode)) / sp.mass_kg().sqrt();
        sum += term;
        scale += term.abs();
    }
    // a cancellation at roundoff level is a symmetric mode that does not couple
    if sum.abs() <= 1e-12 * scale {
        sum = 0.0;
    }
    Ok(s * sum * sum / (4.0 * HBAR * omega))
}

/// Time-averaged scattering force ħkΓρ_ee, N.
pub fn radiation_pressure_force(laser: &LaserField) -> Vec3 {
    linalg::scale3(&laser.wavevector, HBAR * laser.linewidth * excited_population(laser))
}

/// Two-ion gate error from thermal motion, 0.3π²η⁴n̄(n̄+1).
pub fn gate_infidelity(eta: f64, nbar: f64) -> f64 {
    0.3 * std::f64::consts::PI.powi(2) * eta.powi(4) * nbar * (nbar + 1.0)
}

/// Largest n̄ keeping [`gate_infidelity`] at or below `target`.
pub fn max_occupation_for_infidelity(eta: f64, target: f64) -> Result<f64> {
    if !(eta > 0.0) || !(target >= 0.0) {
        return Err(Error::InvalidInput("need η > 0 and target ≥ 0".into()));
    }
    let c = target / (0.3 * std::f64::consts::PI.powi(2) * eta.powi(4));
    Ok(0.5 * ((1.0 + 4.0 * c).sqrt() - 1.0))
}

/// Carrier Rabi frequency relative to its motion-free value,
/// 1 − ½Σ η²(2n + 1).
pub fn carrier_rabi_factor(etas: &[f64], occupations: &[f64]) -> Result<f64> {
    if etas.len() != occupations.len() {
        return Err(Error::InvalidInput("one occupation per Lamb-Dicke parameter".into()));
    }
    let mut sum = 0.0;
    for (&eta, &n) in etas.iter().zip(occupations) {
        let x = eta * eta * (2.0 * n + 1.0);
        if x >= 1.0 {
            log::warn!("outside the Lamb-Dicke regime: η²(2n+1) = {x:.3}");
        }
        sum += x;
    }
    Ok(1.0 - 0.5 * sum)
}

/// Rates for every stable mode for one laser on one ion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoolingReport {
    pub ion: usize,
    pub saturation: f64,
    pub detuning_over_linewidth: f64,
    pub excited_population: f64,
    pub modes: Vec<ModeCooling>,
    pub assumptions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeCooling {
    pub mode: usize,
    pub frequency_hz: f64,
    pub lamb_dicke: f64,
    /// quanta/s at the given occupation.
    pub doppler_rate: f64,
    /// quanta/s.
    pub recoil_heating_rate: f64,
    /// `None` when the mode is not cooled.
    pub equilibrium_occupation: Option<f64>,
}

pub fn cooling_report(modes: &NormalModeSet, laser: &LaserField, ion: usize, n: f64) -> Result<CoolingReport> {
    laser.validate()?;
    let mut out = Vec::new();
    for a in 0..modes.n_modes() {
        if !modes.stable[a] {
            continue;
        }
        out.push(ModeCooling {
            mode: a,
            frequency_hz: modes.frequency_hz(a),
            lamb_dicke: lamb_dicke(modes, laser.wavevector, ion, a)?,
            doppler_rate: doppler_rate(modes, laser, ion, a, n)?,
            recoil_heating_rate: recoil_heating_rate(modes, laser, ion, a)?,
            equilibrium_occupation: doppler_equilibrium(modes, laser, ion, a).ok(),
        });
    }
    let mut assumptions = vec!["recoil heating assumes s ≪ 1".to_string()];
    if laser.saturation() > 0.1 {
        assumptions.push(format!("s = {:.3} is not small", laser.saturation()));
    }
    Ok(CoolingReport {
        ion,
        saturation: laser.saturation(),
        detuning_over_linewidth: laser.detuning / laser.linewidth,
        excited_population: excited_population(laser),
        modes: out,
        assumptions,
    })
}
