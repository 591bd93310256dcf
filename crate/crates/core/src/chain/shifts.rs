//! Mode-frequency differences between the two orderings of an ion pair, and
//! the response of a pair to a constant force (radiation pressure).

use serde::{Deserialize, Serialize};

use super::equilibrium::{find_equilibrium, find_equilibrium_with, ChainConfiguration, SolverOptions};
use super::modes::{normal_modes, NormalModeSet};
use super::potential::ChainPotential;
use crate::error::{Error, Result};
use crate::linalg::{self, Vec3};
use crate::trap::{Axis, IonSpecies, TrapModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderShift {
    /// Species left to right for the first ordering.
    pub order: [String; 2],
    /// Mode frequencies (Hz, ascending) for (A, B) and (B, A).
    pub frequencies_ab_hz: Vec<f64>,
    pub frequencies_ba_hz: Vec<f64>,
    /// f(A,B) − f(B,A) per ascending mode index, Hz.
    pub delta_hz: Vec<f64>,
    /// Index of the axial out-of-phase mode, if there is one.
    pub axial_out_of_phase: Option<usize>,
}

impl OrderShift {
    pub fn axial_out_of_phase_shift_hz(&self) -> Option<f64> {
        self.axial_out_of_phase.map(|a| self.delta_hz[a])
    }
}

/// Whether the mode's components along `axis` take both signs (ignoring
/// components below 1e-3).
pub fn is_out_of_phase(modes: &NormalModeSet, mode: usize, axis: Axis) -> bool {
    let comps: Vec<f64> = (0..modes.config.n_ions())
        .map(|j| modes.mode_vector(j, mode)[axis.index()])
        .filter(|c| c.abs() > 1e-3)
        .collect();
    comps.iter().any(|&c| c > 0.0) && comps.iter().any(|&c| c < 0.0)
}

/// Highest-frequency mode dominated by motion along `axis` whose components
/// along that axis take both signs.
pub fn out_of_phase_mode(modes: &NormalModeSet, axis: Axis) -> Option<usize> {
    modes
        .modes_along(axis)
        .into_iter()
        .rev()
        .find(|&a| is_out_of_phase(modes, a, axis))
}

/// Mode frequencies for both orderings of a two-ion chain in `trap` (which
/// carries the perturbation), matched by ascending frequency.
pub fn order_dependent_shift(trap: &TrapModel, pair: [&IonSpecies; 2]) -> Result<OrderShift> {
    let ab = [pair[0].clone(), pair[1].clone()];
    let ba = [pair[1].clone(), pair[0].clone()];
    let m_ab = normal_modes(trap, &find_equilibrium(trap, &ab, None)?)?;
    let m_ba = normal_modes(trap, &find_equilibrium(trap, &ba, None)?)?;
    for m in [&m_ab, &m_ba] {
        if let Some(a) = m.stable.iter().position(|s| !s) {
            return Err(Error::UnstableMode(a));
        }
    }
    let f_ab = m_ab.frequencies_hz();
    let f_ba = m_ba.frequencies_hz();
    let delta_hz = f_ab.iter().zip(&f_ba).map(|(a, b)| a - b).collect();
    Ok(OrderShift {
        order: [pair[0].name.clone(), pair[1].name.clone()],
        frequencies_ab_hz: f_ab,
        frequencies_ba_hz: f_ba,
        delta_hz,
        axial_out_of_phase: out_of_phase_mode(&m_ab, Axis::Z),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiationPressureShift {
    /// |F|/(m ω²) with ω the pushed ion's single-ion frequency along F, m.
    pub epsilon: f64,
    /// Ion separation without the force, m.
    pub separation: f64,
    /// 1 ± ε/(2d) for equal masses (sign + when the force pushes the ions
    /// together); `None` for unequal masses.
    pub analytic_factor: Option<f64>,
    /// Ratio of axial out-of-phase frequencies with and without the force,
    /// from re-solving the equilibrium.
    pub numeric_factor: f64,
}

/// Effect of a constant force on ion `ion` of a converged two-ion
/// configuration.
pub fn radiation_pressure_displacement(
    trap: &TrapModel,
    config: &ChainConfiguration,
    force: Vec3,
    ion: usize,
) -> Result<RadiationPressureShift> {
    if config.n_ions() != 2 {
        return Err(Error::InvalidInput(
            "radiation-pressure shift needs a two-ion chain".into(),
        ));
    }
    if ion >= 2 {
        return Err(Error::InvalidInput(format!("ion index {ion} out of range")));
    }
    let species = &config.species;
    let fmag = linalg::norm3(&force);
    let k = trap.spring_constants(&species[ion]);
    // spring constant along the force direction
    let k_eff = if fmag > 0.0 {
        (0..3).map(|a| k[a] * (force[a] / fmag).powi(2)).sum::<f64>()
    } else {
        k[2]
    };
    let epsilon = fmag / k_eff;
    let d = linalg::norm3(&[
        config.positions[3] - config.positions[0],
        config.positions[4] - config.positions[1],
        config.positions[5] - config.positions[2],
    ]);
    let base = normal_modes(trap, config)?;
    let Some(oop) = out_of_phase_mode(&base, Axis::Z) else {
        return Err(Error::InvalidInput("no axial out-of-phase mode".into()));
    };
    let analytic_factor =
        (species[0].mass_u == species[1].mass_u && species[0].charge == species[1].charge).then(|| {
            if fmag == 0.0 {
                return 1.0;
            }
            // pushing the ion towards its partner compresses the pair
            let other = 1 - ion;
            let towards = (0..3)
                .map(|a| force[a] * (config.positions[3 * other + a] - config.positions[3 * ion + a]))
                .sum::<f64>();
            if towards > 0.0 {
                1.0 + epsilon / (2.0 * d)
            } else {
                1.0 - epsilon / (2.0 * d)
            }
        });
    let numeric_factor = if fmag == 0.0 {
        1.0
    } else {
        let pot = ChainPotential::new(trap, species).with_force(ion, force);
        let pushed = find_equilibrium_with(&pot, Some(&config.positions), &SolverOptions::default())?;
        let modes = normal_modes(trap, &pushed)?;
        let best = (0..modes.n_modes())
            .max_by(|&a, &b| {
                let oa = linalg::dot(&modes.mode_column(a), &base.mode_column(oop)).abs();
                let ob = linalg::dot(&modes.mode_column(b), &base.mode_column(oop)).abs();
                oa.total_cmp(&ob)
            })
            .expect("modes exist");
        modes.frequencies[best] / base.frequencies[oop]
    };
    Ok(RadiationPressureShift {
        epsilon,
        separation: d,
        analytic_factor,
        numeric_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ELEMENTARY_CHARGE;
    use crate::trap::{be_mg_reference_trap, DEFAULT_RF_DRIVE};
    use std::f64::consts::TAU;

    #[test]
    fn unperturbed_orders_are_mirror_images() {
        let trap = be_mg_reference_trap();
        let s = order_dependent_shift(&trap, [&IonSpecies::beryllium9(), &IonSpecies::magnesium24()]).unwrap();
        for (d, f) in s.delta_hz.iter().zip(&s.frequencies_ab_hz) {
            assert!(d.abs() <= 1e-6 * f);
        }
        assert!(s.axial_out_of_phase.is_some());
    }

    #[test]
    fn gradient_separates_orders() {
        let trap =
            be_mg_reference_trap().with_axial_gradient(0.2 * ELEMENTARY_CHARGE, IonSpecies::beryllium9().mass_kg());
        let s = order_dependent_shift(&trap, [&IonSpecies::beryllium9(), &IonSpecies::magnesium24()]).unwrap();
        assert!(s.axial_out_of_phase_shift_hz().unwrap().abs() > 100.0);
    }

    #[test]
    fn zero_force_gives_unit_factor() {
        let ca = IonSpecies::calcium40();
        let m = ca.mass_kg();
        let trap = TrapModel::new(
            [0.0; 3],
            [
                m * (TAU * 4e6).powi(2),
                m * (TAU * 3.5e6).powi(2),
                m * (TAU * 1e6).powi(2),
            ],
            DEFAULT_RF_DRIVE,
        )
        .unwrap();
        let c = find_equilibrium(&trap, &[ca.clone(), ca], None).unwrap();
        let r = radiation_pressure_displacement(&trap, &c, [0.0; 3], 0).unwrap();
        assert_eq!(r.analytic_factor, Some(1.0));
        assert_eq!(r.numeric_factor, 1.0);
        assert_eq!(r.epsilon, 0.0);
    }
}
