//! Total potential energy of an ion chain with analytic derivatives.

use crate::constants::{COULOMB_K, ELEMENTARY_CHARGE};
use crate::linalg::{Matrix, Vec3};
use crate::trap::{IonSpecies, TrapModel};

/// Trap plus Coulomb energy of a set of ions, optionally with constant extra
/// forces on individual ions (e.g. radiation pressure).
#[derive(Clone, Debug)]
pub struct ChainPotential<'a> {
    trap: &'a TrapModel,
    species: &'a [IonSpecies],
    springs: Vec<[f64; 3]>,
    forces: Vec<Vec3>,
}

impl<'a> ChainPotential<'a> {
    pub fn new(trap: &'a TrapModel, species: &'a [IonSpecies]) -> Self {
        let springs = species.iter().map(|s| trap.spring_constants(s)).collect();
        ChainPotential {
            trap,
            species,
            springs,
            forces: vec![[0.0; 3]; species.len()],
        }
    }

    /// Adds a constant force on ion `ion`.
    pub fn with_force(mut self, ion: usize, force: Vec3) -> Self {
        for (f, add) in self.forces[ion].iter_mut().zip(force) {
            *f += add;
        }
        self
    }

    pub fn trap(&self) -> &TrapModel {
        self.trap
    }

    pub fn species(&self) -> &[IonSpecies] {
        self.species
    }

    pub fn n_ions(&self) -> usize {
        self.species.len()
    }

    fn charge_number(&self, j: usize) -> f64 {
        f64::from(self.species[j].charge)
    }

    /// Linear z-force coefficient from the pseudopotential gradient, J/m.
    fn gradient_term(&self, j: usize) -> f64 {
        let z = self.charge_number(j);
        z * z * self.trap.reference_mass / self.species[j].mass_kg() * self.trap.axial_gradient
    }

    pub fn energy(&self, pos: &[f64]) -> f64 {
        let n = self.n_ions();
        let t = self.trap;
        let cubic = t.cubic_coeff();
        let mut e = 0.0;
        for j in 0..n {
            let r = &pos[3 * j..3 * j + 3];
            let z = self.charge_number(j);
            let q = z * ELEMENTARY_CHARGE;
            let k = &self.springs[j];
            e += 0.5 * (k[0] * r[0] * r[0] + k[1] * r[1] * r[1] + k[2] * r[2] * r[2]);
            e -= q * (t.uniform_field[0] * r[0] + t.uniform_field[1] * r[1] + t.uniform_field[2] * r[2]);
            e += self.gradient_term(j) * r[2];
            e += z * cubic * r[2] * r[2] * r[2];
            e += q * t.twist_coeff * r[1] * r[2];
            let f = &self.forces[j];
            e -= f[0] * r[0] + f[1] * r[1] + f[2] * r[2];
        }
        for j in 0..n {
            for l in (j + 1)..n {
                let d = sub(pos, l, j);
                let qq = self.charge_number(j) * self.charge_number(l) * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE;
                e += COULOMB_K * qq / norm(&d);
            }
        }
        e
    }

    pub fn gradient(&self, pos: &[f64]) -> Vec<f64> {
        let n = self.n_ions();
        let t = self.trap;
        let cubic = t.cubic_coeff();
        let mut g = vec![0.0; 3 * n];
        for j in 0..n {
            let r = &pos[3 * j..3 * j + 3];
            let z = self.charge_number(j);
            let q = z * ELEMENTARY_CHARGE;
            let k = &self.springs[j];
            let f = &self.forces[j];
            for a in 0..3 {
                g[3 * j + a] = k[a] * r[a] - q * t.uniform_field[a] - f[a];
            }
            g[3 * j + 2] += self.gradient_term(j) + 3.0 * z * cubic * r[2] * r[2];
            g[3 * j + 1] += q * t.twist_coeff * r[2];
            g[3 * j + 2] += q * t.twist_coeff * r[1];
        }
        for j in 0..n {
            for l in (j + 1)..n {
                let d = sub(pos, l, j);
                let dn = norm(&d);
                let qq = self.charge_number(j) * self.charge_number(l) * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE;
                let c = COULOMB_K * qq / (dn * dn * dn);
                for a in 0..3 {
                    // d/dr_l (1/|r_l - r_j|) = -(r_l - r_j)/|.|^3
                    g[3 * l + a] -= c * d[a];
                    g[3 * j + a] += c * d[a];
                }
            }
        }
        g
    }

    /// Analytic Hessian of the energy, J/m^2.
    pub fn hessian(&self, pos: &[f64]) -> Matrix {
        let n = self.n_ions();
        let t = self.trap;
        let cubic = t.cubic_coeff();
        let mut h = Matrix::zeros(3 * n, 3 * n);
        for j in 0..n {
            let z = self.charge_number(j);
            let q = z * ELEMENTARY_CHARGE;
            for a in 0..3 {
                h[(3 * j + a, 3 * j + a)] += self.springs[j][a];
            }
            h[(3 * j + 2, 3 * j + 2)] += 6.0 * z * cubic * pos[3 * j + 2];
            h[(3 * j + 1, 3 * j + 2)] += q * t.twist_coeff;
            h[(3 * j + 2, 3 * j + 1)] += q * t.twist_coeff;
        }
        for j in 0..n {
            for l in (j + 1)..n {
                let d = sub(pos, l, j);
                let dn = norm(&d);
                let qq = self.charge_number(j) * self.charge_number(l) * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE;
                let c3 = COULOMB_K * qq / dn.powi(3);
                let c5 = COULOMB_K * qq / dn.powi(5);
                for a in 0..3 {
                    for b in 0..3 {
                        let delta = if a == b { 1.0 } else { 0.0 };
                        let block = 3.0 * c5 * d[a] * d[b] - c3 * delta;
                        h[(3 * j + a, 3 * j + b)] += block;
                        h[(3 * l + a, 3 * l + b)] += block;
                        h[(3 * j + a, 3 * l + b)] -= block;
                        h[(3 * l + a, 3 * j + b)] -= block;
                    }
                }
            }
        }
        h
    }

    /// Hessian by central finite differences of the analytic gradient.
    pub fn hessian_finite_difference(&self, pos: &[f64], step: f64) -> Matrix {
        let dim = pos.len();
        let mut h = Matrix::zeros(dim, dim);
        let mut p = pos.to_vec();
        for k in 0..dim {
            p[k] = pos[k] + step;
            let gp = self.gradient(&p);
            p[k] = pos[k] - step;
            let gm = self.gradient(&p);
            p[k] = pos[k];
            for i in 0..dim {
                h[(i, k)] = (gp[i] - gm[i]) / (2.0 * step);
            }
        }
        for i in 0..dim {
            for k in 0..i {
                let s = 0.5 * (h[(i, k)] + h[(k, i)]);
                h[(i, k)] = s;
                h[(k, i)] = s;
            }
        }
        h
    }
}

fn sub(pos: &[f64], l: usize, j: usize) -> Vec3 {
    [
        pos[3 * l] - pos[3 * j],
        pos[3 * l + 1] - pos[3 * j + 1],
        pos[3 * l + 2] - pos[3 * j + 2],
    ]
}

fn norm(d: &Vec3) -> f64 {
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trap::be_mg_reference_trap;

    fn perturbed_trap() -> TrapModel {
        be_mg_reference_trap()
            .with_uniform_field([30.0, -50.0, 10.0])
            .with_axial_gradient(0.2 * ELEMENTARY_CHARGE, IonSpecies::beryllium9().mass_kg())
            .with_cubic_scale(Some(230e-6))
            .with_twist(2e6)
    }

    #[test]
    fn gradient_matches_energy_differences() {
        let trap = perturbed_trap();
        let species = vec![
            IonSpecies::beryllium9(),
            IonSpecies::magnesium24(),
            IonSpecies::calcium40(),
        ];
        let pot = ChainPotential::new(&trap, &species).with_force(1, [1e-20, 0.0, 3e-20]);
        let pos = vec![0.3e-6, -0.2e-6, -5e-6, 0.1e-6, 0.4e-6, 0.5e-6, -0.2e-6, 0.1e-6, 6e-6];
        let g = pot.gradient(&pos);
        let h = 1e-12;
        for k in 0..pos.len() {
            let mut p = pos.clone();
            p[k] += h;
            let ep = pot.energy(&p);
            p[k] -= 2.0 * h;
            let em = pot.energy(&p);
            let fd = (ep - em) / (2.0 * h);
            let scale = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!((fd - g[k]).abs() < 1e-5 * scale, "component {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let trap = perturbed_trap();
        let species = vec![IonSpecies::beryllium9(), IonSpecies::magnesium24()];
        let pot = ChainPotential::new(&trap, &species);
        let pos = vec![0.1e-6, 0.2e-6, -2e-6, -0.3e-6, 0.5e-6, 2.5e-6];
        let a = pot.hessian(&pos);
        let f = pot.hessian_finite_difference(&pos, 1e-10);
        let scale = a.max_norm();
        for i in 0..6 {
            for k in 0..6 {
                assert!((a[(i, k)] - f[(i, k)]).abs() < 1e-6 * scale);
            }
        }
        assert!(a.is_symmetric(1e-14));
    }
}
