//! Normal modes from the mass-weighted Hessian.

use serde::{Deserialize, Serialize};

use super::equilibrium::ChainConfiguration;
use super::potential::ChainPotential;
use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::linalg::{self, symmetric_eigen, Matrix, Vec3};
use crate::trap::{Axis, TrapModel};

/// Relative eigenvalue gap below which two modes are flagged degenerate.
const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalModeSet {
    pub config: ChainConfiguration,
    /// Eigenvalues of the mass-weighted Hessian, (rad/s)^2, ascending.
    pub omega_sq: Vec<f64>,
    /// sign(ω²)·√|ω²| in rad/s, ascending; negative entries are unstable.
    pub frequencies: Vec<f64>,
    /// Column α holds the mass-weighted eigenvector e'_α; row 3j+i is the
    /// component of ion j along axis i.
    pub eigenvectors: Matrix,
    pub stable: Vec<bool>,
    /// True when the mode shares its eigenvalue with a neighbour, in which
    /// case the eigenvector is only defined within the degenerate subspace.
    pub degenerate: Vec<bool>,
}

impl NormalModeSet {
    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    pub fn frequency_hz(&self, mode: usize) -> f64 {
        self.frequencies[mode] / std::f64::consts::TAU
    }

    pub fn frequencies_hz(&self) -> Vec<f64> {
        (0..self.n_modes()).map(|a| self.frequency_hz(a)).collect()
    }

    pub fn mode_vector(&self, ion: usize, mode: usize) -> Vec3 {
        [
            self.eigenvectors[(3 * ion, mode)],
            self.eigenvectors[(3 * ion + 1, mode)],
            self.eigenvectors[(3 * ion + 2, mode)],
        ]
    }

    pub fn mode_column(&self, mode: usize) -> Vec<f64> {
        self.eigenvectors.column(mode)
    }

    /// Axis carrying most of the mode's weight.
    pub fn dominant_axis(&self, mode: usize) -> Axis {
        let mut w = [0.0; 3];
        for j in 0..self.config.n_ions() {
            for (a, wa) in w.iter_mut().enumerate() {
                *wa += self.eigenvectors[(3 * j + a, mode)].powi(2);
            }
        }
        let best = (0..3).max_by(|&a, &b| w[a].total_cmp(&w[b])).expect("three axes");
        Axis::ALL[best]
    }

    /// Modes whose weight lies mostly along `axis`, ascending in frequency.
    pub fn modes_along(&self, axis: Axis) -> Vec<usize> {
        (0..self.n_modes()).filter(|&a| self.dominant_axis(a) == axis).collect()
    }

    pub fn require_stable(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(Error::InvalidInput(format!("mode index {mode} out of range")));
        }
        if self.stable[mode] {
            Ok(())
        } else {
            Err(Error::UnstableMode(mode))
        }
    }

    fn require_ion(&self, ion: usize) -> Result<()> {
        if ion >= self.config.n_ions() {
            return Err(Error::InvalidInput(format!("ion index {ion} out of range")));
        }
        Ok(())
    }
}

/// Normal modes of a converged configuration.
pub fn normal_modes(trap: &TrapModel, config: &ChainConfiguration) -> Result<NormalModeSet> {
    if !config.converged {
        return Err(Error::InvalidInput(
            "normal modes need a converged configuration".into(),
        ));
    }
    let pot = ChainPotential::new(trap, &config.species);
    Ok(modes_from_hessian(config, &pot.hessian(&config.positions)))
}

/// Diagonalises a (non-mass-weighted) Hessian for `config`.
pub fn modes_from_hessian(config: &ChainConfiguration, hessian: &Matrix) -> NormalModeSet {
    let dim = hessian.rows();
    let inv_sqrt_m: Vec<f64> = (0..dim).map(|i| 1.0 / config.species[i / 3].mass_kg().sqrt()).collect();
    let mut weighted = hessian.clone();
    for i in 0..dim {
        for k in 0..dim {
            weighted[(i, k)] *= inv_sqrt_m[i] * inv_sqrt_m[k];
        }
    }
    let eig = symmetric_eigen(&weighted);
    let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let frequencies = eig.values.iter().map(|&l| l.signum() * l.abs().sqrt()).collect();
    let stable = eig.values.iter().map(|&l| l > 0.0).collect();
    let degenerate = (0..dim)
        .map(|a| {
            let close = |b: usize| (eig.values[a] - eig.values[b]).abs() <= DEGENERACY_TOL * scale;
            (a > 0 && close(a - 1)) || (a + 1 < dim && close(a + 1))
        })
        .collect();
    NormalModeSet {
        config: config.clone(),
        omega_sq: eig.values,
        frequencies,
        eigenvectors: eig.vectors,
        stable,
        degenerate,
    }
}

/// RMS ground-state position spread of ion `ion` in mode `mode`: per-axis
/// components and their vector norm, m.
pub fn ground_state_extent(modes: &NormalModeSet, ion: usize, mode: usize) -> Result<(Vec3, f64)> {
    modes.require_ion(ion)?;
    modes.require_stable(mode)?;
    let m = modes.config.species[ion].mass_kg();
    let sigma = (HBAR / (2.0 * m * modes.frequencies[mode])).sqrt();
    let e = modes.mode_vector(ion, mode);
    let comp = [sigma * e[0].abs(), sigma * e[1].abs(), sigma * e[2].abs()];
    Ok((comp, sigma * linalg::norm3(&e)))
}

/// Lamb-Dicke parameter of ion `ion` in mode `mode` for wavevector `k` (rad/m).
pub fn lamb_dicke(modes: &NormalModeSet, k: Vec3, ion: usize, mode: usize) -> Result<f64> {
    modes.require_ion(ion)?;
    modes.require_stable(mode)?;
    let m = modes.config.species[ion].mass_kg();
    let sigma = (HBAR / (2.0 * m * modes.frequencies[mode])).sqrt();
    Ok(sigma * linalg::dot3(&k, &modes.mode_vector(ion, mode)))
}

/// Mode frequency from the red and blue sideband resonance positions
/// (any common offset cancels).
pub fn extract_mode_frequency(red: f64, blue: f64) -> Result<f64> {
    if !(red.is_finite() && blue.is_finite()) || blue <= red {
        return Err(Error::InvalidInput(format!(
            "blue sideband ({blue}) must lie above red sideband ({red})"
        )));
    }
    Ok(0.5 * (blue - red))
}
