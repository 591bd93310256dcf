//! Equilibrium search: damped, eigenvalue-regularised Newton iteration with
//! backtracking, plus restarts along negative-curvature directions so that
//! saddle points (e.g. a linear chain beyond its zig-zag threshold) are
//! escaped.

use serde::{Deserialize, Serialize};

use super::potential::ChainPotential;
use crate::constants::{COULOMB_K, ELEMENTARY_CHARGE};
use crate::error::{Error, Result};
use crate::linalg::{self, symmetric_eigen, Vec3};
use crate::trap::{IonSpecies, TrapModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfiguration {
    /// Species in the order they were seeded.
    pub species: Vec<IonSpecies>,
    /// 3N coordinates (x1, y1, z1, x2, ...), m.
    pub positions: Vec<f64>,
    /// J.
    pub potential_energy: f64,
    /// N.
    pub gradient_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl ChainConfiguration {
    pub fn n_ions(&self) -> usize {
        self.species.len()
    }

    pub fn position(&self, j: usize) -> Vec3 {
        [
            self.positions[3 * j],
            self.positions[3 * j + 1],
            self.positions[3 * j + 2],
        ]
    }

    /// Ion indices sorted by z (left to right).
    pub fn z_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n_ions()).collect();
        idx.sort_by(|&a, &b| self.positions[3 * a + 2].total_cmp(&self.positions[3 * b + 2]));
        idx
    }

    /// Species names read left to right along +z.
    pub fn order_label(&self) -> Vec<String> {
        self.z_order()
            .into_iter()
            .map(|j| self.species[j].name.clone())
            .collect()
    }

    /// Largest radial distance of any ion from the z axis, m.
    pub fn max_radial(&self) -> f64 {
        (0..self.n_ions())
            .map(|j| {
                let r = self.position(j);
                (r[0] * r[0] + r[1] * r[1]).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Largest accepted final position update, m.
    pub step_tolerance: f64,
    /// Gradient-norm tolerance per ion, N.
    pub gradient_tolerance_per_ion: f64,
    /// Ions further than this from the origin count as escaped, m.
    pub escape_radius: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 100_000,
            step_tolerance: 1e-15,
            gradient_tolerance_per_ion: 1e-22,
            escape_radius: 1e-3,
        }
    }
}

impl SolverOptions {
    fn gradient_tolerance(&self, n_ions: usize) -> f64 {
        self.gradient_tolerance_per_ion * n_ions as f64
    }
}

/// Two-ion equal-charge separation scale for the given axial spring constant.
pub(crate) fn coulomb_length(spring_constant: f64) -> f64 {
    (2.0 * COULOMB_K * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / spring_constant).cbrt()
}

/// Ions equally spaced along z, spacing from the lightest ion's axial
/// confinement.
pub fn default_seed(trap: &TrapModel, species: &[IonSpecies]) -> Result<Vec<f64>> {
    if species.is_empty() {
        return Err(Error::InvalidInput("chain needs at least one ion".into()));
    }
    trap.require_confining(species)?;
    let lightest = species
        .iter()
        .min_by(|a, b| a.mass_kg().total_cmp(&b.mass_kg()))
        .expect("non-empty");
    let k = trap.spring_constants(lightest)[2];
    let n = species.len();
    let spacing = coulomb_length(k) * (1.0 + 0.1 * (n as f64 - 2.0).max(0.0));
    let mut pos = vec![0.0; 3 * n];
    for j in 0..n {
        pos[3 * j + 2] = (j as f64 - (n as f64 - 1.0) / 2.0) * spacing;
    }
    Ok(pos)
}

/// Local equilibrium reachable from `seed` (default: the equally spaced
/// axial seed), escaping saddles along negative-curvature directions.
pub fn find_equilibrium(trap: &TrapModel, species: &[IonSpecies], seed: Option<&[f64]>) -> Result<ChainConfiguration> {
    find_equilibrium_with(&ChainPotential::new(trap, species), seed, &SolverOptions::default())
}

pub fn find_equilibrium_with(
    pot: &ChainPotential<'_>,
    seed: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<ChainConfiguration> {
    let species = pot.species();
    if species.is_empty() {
        return Err(Error::InvalidInput("chain needs at least one ion".into()));
    }
    for s in species {
        s.validate()?;
    }
    pot.trap().validate()?;
    pot.trap().require_confining(species)?;
    let seed = match seed {
        Some(s) => {
            if s.len() != 3 * species.len() || s.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "seed must hold {} finite coordinates",
                    3 * species.len()
                )));
            }
            s.to_vec()
        }
        None => default_seed(pot.trap(), species)?,
    };
    let mut best = newton_minimize(pot, &seed, opts)?;
    // restart along negative curvature until the result is a true minimum
    for _ in 0..(3 * species.len()) {
        let Some(direction) = most_negative_direction(pot, &best.positions) else {
            break;
        };
        let delta = escape_step(pot, &best.positions);
        let mut candidates = Vec::with_capacity(2);
        for sign in [1.0, -1.0] {
            let start: Vec<f64> = best
                .positions
                .iter()
                .zip(&direction)
                .map(|(x, v)| x + sign * delta * v)
                .collect();
            candidates.push(newton_minimize(pot, &start, opts)?);
        }
        let next = candidates
            .into_iter()
            .min_by(|a, b| a.potential_energy.total_cmp(&b.potential_energy))
            .expect("two candidates");
        if next.potential_energy >= best.potential_energy {
            break;
        }
        best = next;
    }
    Ok(best)
}

fn most_negative_direction(pot: &ChainPotential<'_>, x: &[f64]) -> Option<Vec<f64>> {
    let h = pot.hessian(x);
    let eig = symmetric_eigen(&h);
    let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (eig.values[0] < -1e-9 * scale).then(|| eig.vectors.column(0))
}

fn escape_step(pot: &ChainPotential<'_>, x: &[f64]) -> f64 {
    let n = pot.n_ions();
    if n < 2 {
        return 1e-6;
    }
    0.2 * min_separation(x, n)
}

fn min_separation(x: &[f64], n: usize) -> f64 {
    let mut d = f64::INFINITY;
    for j in 0..n {
        for l in (j + 1)..n {
            let s: f64 = (0..3).map(|a| (x[3 * l + a] - x[3 * j + a]).powi(2)).sum();
            d = d.min(s.sqrt());
        }
    }
    d
}

/// Damped Newton from `seed` to the nearest stationary point; negative
/// curvature is reflected so every step is a descent direction.
pub fn newton_minimize(pot: &ChainPotential<'_>, seed: &[f64], opts: &SolverOptions) -> Result<ChainConfiguration> {
    let n = pot.n_ions();
    let gtol = opts.gradient_tolerance(n);
    let mut x = seed.to_vec();
    let mut e = pot.energy(&x);
    let mut g = pot.gradient(&x);
    let mut gn = linalg::norm(&g);
    let mut last_step = f64::INFINITY;
    for it in 0..opts.max_iterations {
        if gn < gtol && last_step < opts.step_tolerance {
            return Ok(config(pot, x, e, gn, true, it));
        }
        let h = pot.hessian(&x);
        let eig = symmetric_eigen(&h);
        let lam_scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = 1e-8 * lam_scale;
        let mut step = vec![0.0; x.len()];
        for k in 0..x.len() {
            let v = eig.vectors.column(k);
            let c = linalg::dot(&v, &g) / eig.values[k].abs().max(floor);
            for (s, vi) in step.iter_mut().zip(&v) {
                *s -= c * vi;
            }
        }
        // keep ions from jumping past each other in a single step
        let cap = if n > 1 {
            0.25 * min_separation(&x, n)
        } else {
            f64::INFINITY
        };
        let len = linalg::max_abs(&step);
        if len > cap {
            step.iter_mut().for_each(|s| *s *= cap / len);
        }
        let slack = 1e-14 * e.abs();
        let mut alpha = 1.0;
        let (x_new, e_new, g_new) = loop {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + alpha * s).collect();
            let et = pot.energy(&trial);
            if et <= e + slack {
                let gt = pot.gradient(&trial);
                break (trial, et, gt);
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                // roundoff floor: accept only if it shrinks the gradient
                let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + s).collect();
                let gt = pot.gradient(&trial);
                if linalg::norm(&gt) < gn {
                    let et = pot.energy(&trial);
                    alpha = 1.0;
                    break (trial, et, gt);
                }
                return Ok(config(pot, x, e, gn, gn < gtol, it));
            }
        };
        last_step = alpha * linalg::max_abs(&step);
        x = x_new;
        e = e_new;
        g = g_new;
        gn = linalg::norm(&g);
        for j in 0..n {
            let r: f64 = (0..3).map(|a| x[3 * j + a].powi(2)).sum::<f64>().sqrt();
            if r > opts.escape_radius || !r.is_finite() {
                return Err(Error::IonEscape { ion: j, distance: r });
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        gradient_norm: gn,
        last: Box::new(config(pot, x, e, gn, false, opts.max_iterations)),
    })
}

fn config(
    pot: &ChainPotential<'_>,
    positions: Vec<f64>,
    energy: f64,
    gradient_norm: f64,
    converged: bool,
    iterations: usize,
) -> ChainConfiguration {
    ChainConfiguration {
        species: pot.species().to_vec(),
        positions,
        potential_energy: energy,
        gradient_norm,
        converged,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trap::{be_mg_reference_trap, DEFAULT_RF_DRIVE};
    use std::f64::consts::TAU;

    #[test]
    fn equal_mass_pair_matches_analytic_separation() {
        let ca = IonSpecies::calcium40();
        let m = ca.mass_kg();
        let wz = TAU * 1e6;
        let trap = TrapModel::new(
            [0.0; 3],
            [
                m * (TAU * 4e6).powi(2) * 0.5,
                m * (TAU * 4e6).powi(2) * 0.5,
                m * wz * wz,
            ],
            DEFAULT_RF_DRIVE,
        )
        .unwrap();
        let c = find_equilibrium(&trap, &[ca.clone(), ca.clone()], None).unwrap();
        assert!(c.converged);
        let d = c.positions[5] - c.positions[2];
        let expected = (ELEMENTARY_CHARGE.powi(2) / (TAU * crate::constants::EPSILON_0 * m * wz * wz)).cbrt();
        assert!(((d - expected) / expected).abs() < 1e-12, "{d} vs {expected}");
        assert!((c.positions[5] + c.positions[2]).abs() < 1e-15);
        assert!(c.gradient_norm < 2e-22);
    }

    #[test]
    fn be_mg_pair_sits_on_axis() {
        let trap = be_mg_reference_trap();
        let c = find_equilibrium(&trap, &[IonSpecies::beryllium9(), IonSpecies::magnesium24()], None).unwrap();
        assert!(c.converged);
        assert!(c.max_radial() < 1e-12);
        assert_eq!(c.order_label(), vec!["Be", "Mg"]);
    }

    #[test]
    fn single_ion_sits_at_field_displacement() {
        let ca = IonSpecies::calcium40();
        let trap = be_mg_reference_trap().with_uniform_field([0.0, 100.0, 0.0]);
        let c = find_equilibrium(&trap, std::slice::from_ref(&ca), None).unwrap();
        let k = trap.spring_constants(&ca)[1];
        let y = ELEMENTARY_CHARGE * 100.0 / k;
        assert!(((c.positions[1] - y) / y).abs() < 1e-10);
    }

    #[test]
    fn unstable_trap_is_rejected() {
        let trap = TrapModel::new([0.0; 3], [1e-13, -1e-13, 1e-13], DEFAULT_RF_DRIVE).unwrap();
        assert!(matches!(
            find_equilibrium(&trap, &[IonSpecies::calcium40()], None),
            Err(Error::UnstableTrap { .. })
        ));
    }

    #[test]
    fn empty_chain_is_rejected() {
        assert!(find_equilibrium(&be_mg_reference_trap(), &[], None).is_err());
    }

    #[test]
    fn iteration_cap_reports_last_iterate() {
        let trap = be_mg_reference_trap();
        let species = [IonSpecies::beryllium9(), IonSpecies::magnesium24()];
        let pot = ChainPotential::new(&trap, &species);
        let opts = SolverOptions {
            max_iterations: 1,
            ..Default::default()
        };
        match find_equilibrium_with(&pot, None, &opts) {
            Err(Error::NoConvergence { last, .. }) => assert_eq!(last.positions.len(), 6),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
