//! Deterministic ion reordering: enumerate orders, relax far-from-minimum
//! configurations, follow local minima through slow trap ramps, and locate
//! the field at which a two-ion crystal aligns radially.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{find_equilibrium, find_equilibrium_with, ChainConfiguration, ChainPotential, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg;
use crate::trap::{Axis, IonSpecies, TrapModel};

/// Radial distance below which an ion counts as on the axis, m.
pub const LINEAR_THRESHOLD: f64 = 1e-9;
/// Default interpolation steps per ramp segment.
pub const DEFAULT_RAMP_STEPS: usize = 200;
/// Search range for radial alignment fields, V/m.
pub const MAX_ALIGNMENT_FIELD: f64 = 5000.0;

/// Distinct orderings of a species multiset (by name), in lexicographic
/// order of first appearance.
pub fn enumerate_orders(species: &[IonSpecies]) -> Result<Vec<Vec<IonSpecies>>> {
    if species.is_empty() {
        return Err(Error::InvalidInput("need at least one ion".into()));
    }
    let mut kinds: Vec<IonSpecies> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for s in species {
        match kinds.iter().position(|k| k.name == s.name) {
            Some(i) => counts[i] += 1,
            None => {
                kinds.push(s.clone());
                counts.push(1);
            }
        }
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(species.len());
    fn recurse(
        kinds: &[IonSpecies],
        counts: &mut [usize],
        current: &mut Vec<IonSpecies>,
        out: &mut Vec<Vec<IonSpecies>>,
        n: usize,
    ) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        for k in 0..kinds.len() {
            if counts[k] > 0 {
                counts[k] -= 1;
                current.push(kinds[k].clone());
                recurse(kinds, counts, current, out, n);
                current.pop();
                counts[k] += 1;
            }
        }
    }
    recurse(&kinds, &mut counts, &mut current, &mut out, species.len());
    Ok(out)
}

/// Damped steepest descent into the basin of `start`, then Newton polish
/// (with saddle escape). Every accepted iteration lowers the energy.
pub fn relax(trap: &TrapModel, species: &[IonSpecies], start: &[f64]) -> Result<ChainConfiguration> {
    relax_traced(trap, species, start).map(|(c, _)| c)
}

/// As [`relax`], also returning the energy after every accepted descent
/// step and after the Newton polish.
pub fn relax_traced(trap: &TrapModel, species: &[IonSpecies], start: &[f64]) -> Result<(ChainConfiguration, Vec<f64>)> {
    let n = species.len();
    if n == 0 || start.len() != 3 * n || start.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "start must hold {} finite coordinates",
            3 * n
        )));
    }
    let opts = SolverOptions::default();
    let pot = ChainPotential::new(trap, species);
    let mut x = start.to_vec();
    let mut e = pot.energy(&x);
    let mut trace = vec![e];
    let g0 = linalg::norm(&pot.gradient(&x));
    let scale = if n > 1 { min_separation(&x) } else { 1e-6 };
    let mut step = 0.1 * scale;
    for _ in 0..2000 {
        let g = pot.gradient(&x);
        let gn = linalg::norm(&g);
        if gn <= 1e-6 * g0 || step < 1e-3 * scale {
            break;
        }
        let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b / gn).collect();
        let et = pot.energy(&trial);
        if et < e {
            x = trial;
            e = et;
            trace.push(e);
            step *= 1.2;
            escape_check(&x, opts.escape_radius)?;
        } else {
            step *= 0.5;
        }
    }
    let c = find_equilibrium_with(&pot, Some(&x), &opts)?;
    if !c.converged {
        return Err(Error::NoConvergence {
            iterations: c.iterations,
            gradient_norm: c.gradient_norm,
            last: Box::new(c),
        });
    }
    // Newton may only ever tie the descent result up to roundoff
    trace.push(c.potential_energy.min(e));
    Ok((c, trace))
}

fn escape_check(x: &[f64], radius: f64) -> Result<()> {
    for j in 0..x.len() / 3 {
        let d = linalg::norm3(&[x[3 * j], x[3 * j + 1], x[3 * j + 2]]);
        if d > radius {
            return Err(Error::IonEscape { ion: j, distance: d });
        }
    }
    Ok(())
}

fn min_separation(x: &[f64]) -> f64 {
    let n = x.len() / 3;
    let mut d = f64::INFINITY;
    for j in 0..n {
        for l in (j + 1)..n {
            let s: f64 = (0..3).map(|a| (x[3 * l + a] - x[3 * j + a]).powi(2)).sum();
            d = d.min(s.sqrt());
        }
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigurationKind {
    Linear,
    OffAxis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationClass {
    pub kind: ConfigurationKind,
    /// Species left to right along z; only for linear chains.
    pub order: Option<Vec<String>>,
    /// "diamond" when exactly two like ions sit mirror-symmetrically off
    /// the axis.
    pub geometry: Option<String>,
}

impl ConfigurationClass {
    pub fn order_string(&self) -> Option<String> {
        self.order.as_ref().map(|o| o.join(","))
    }
}

pub fn classify(config: &ChainConfiguration) -> ConfigurationClass {
    let radial: Vec<[f64; 2]> = (0..config.n_ions())
        .map(|j| {
            let r = config.position(j);
            [r[0], r[1]]
        })
        .collect();
    let off: Vec<usize> = (0..radial.len())
        .filter(|&j| radial[j][0].hypot(radial[j][1]) >= LINEAR_THRESHOLD)
        .collect();
    if off.is_empty() {
        return ConfigurationClass {
            kind: ConfigurationKind::Linear,
            order: Some(config.order_label()),
            geometry: None,
        };
    }
    let mut geometry = None;
    if let [a, b] = off[..] {
        let (ra, rb) = (radial[a], radial[b]);
        let mirror = (ra[0] + rb[0]).hypot(ra[1] + rb[1]);
        if config.species[a].name == config.species[b].name && mirror < 0.05 * ra[0].hypot(ra[1]) {
            geometry = Some("diamond".to_string());
        }
    }
    ConfigurationClass {
        kind: ConfigurationKind::OffAxis,
        order: None,
        geometry,
    }
}

/// Trap snapshots with the number of interpolation steps used to reach
/// each one from its predecessor (ignored for the first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampSchedule {
    pub snapshots: Vec<(TrapModel, usize)>,
}

impl RampSchedule {
    pub fn new(first: TrapModel) -> Self {
        RampSchedule {
            snapshots: vec![(first, 1)],
        }
    }

    pub fn then(mut self, trap: TrapModel, steps: usize) -> Self {
        self.snapshots.push((trap, steps));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.snapshots.len() < 2 {
            return Err(Error::InvalidInput("a ramp needs at least two snapshots".into()));
        }
        if self.snapshots.iter().any(|(_, s)| *s == 0) {
            return Err(Error::InvalidInput("ramp step counts must be ≥ 1".into()));
        }
        for (t, _) in &self.snapshots {
            t.validate()?;
        }
        Ok(())
    }

    /// Same snapshots with every step count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        RampSchedule {
            snapshots: self.snapshots.iter().map(|(t, s)| (t.clone(), s * factor)).collect(),
        }
    }

    /// Traps visited in order, starting with the first snapshot.
    pub fn traps(&self) -> Vec<TrapModel> {
        let mut out = vec![self.snapshots[0].0.clone()];
        for w in self.snapshots.windows(2) {
            let (a, (b, steps)) = (&w[0].0, &w[1]);
            for i in 1..=*steps {
                out.push(a.lerp(b, i as f64 / *steps as f64));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampResult {
    /// Configuration after each step; entry 0 is the initial configuration.
    pub trajectory: Vec<ChainConfiguration>,
    pub final_class: ConfigurationClass,
}

/// Quasi-static continuation: at every interpolated trap the chain relaxes
/// from the previous positions.
pub fn ramp_and_relax(schedule: &RampSchedule, initial: &ChainConfiguration) -> Result<RampResult> {
    schedule.validate()?;
    if !initial.converged {
        return Err(Error::InvalidInput("initial configuration is not converged".into()));
    }
    let traps = schedule.traps();
    let mut trajectory = Vec::with_capacity(traps.len());
    trajectory.push(initial.clone());
    for (step, trap) in traps.iter().enumerate().skip(1) {
        let prev = &trajectory[step - 1];
        let next = relax(trap, &initial.species, &prev.positions).map_err(|e| Error::Continuation {
            step,
            source: Box::new(e),
        })?;
        trajectory.push(next);
    }
    let final_class = classify(trajectory.last().expect("non-empty"));
    Ok(RampResult {
        trajectory,
        final_class,
    })
}

/// Equilibrium of `order` (left to right) seeded as an axial chain.
pub fn linear_start(trap: &TrapModel, order: &[IonSpecies]) -> Result<ChainConfiguration> {
    find_equilibrium(trap, order, None)
}

/// Be-referenced snapshots of the symmetric four-ion reordering ramp:
/// the starting well and the strong-axial well (Hz, x/y/z).
pub const SYMMETRIC_RAMP_START_MHZ: [f64; 3] = [12.2, 11.2, 2.7];
pub const SYMMETRIC_RAMP_TURN_MHZ: [f64; 3] = [9.7, 12.9, 4.6];

/// Start well → strong-axial well → start well, `steps` per segment.
pub fn symmetric_reorder_schedule(reference: &IonSpecies, steps: usize) -> Result<RampSchedule> {
    let a = TrapModel::linear_from_single_species(reference, SYMMETRIC_RAMP_START_MHZ.map(|f| f * 1e6))?;
    let b = TrapModel::linear_from_single_species(reference, SYMMETRIC_RAMP_TURN_MHZ.map(|f| f * 1e6))?;
    Ok(RampSchedule::new(a.clone()).then(b, steps).then(a, steps))
}

/// Runs `schedule` from the linear equilibrium of every distinct order of
/// `species` (in parallel); results follow [`enumerate_orders`].
pub fn ramp_all_orders(schedule: &RampSchedule, species: &[IonSpecies]) -> Result<Vec<(Vec<String>, RampResult)>> {
    schedule.validate()?;
    let first = &schedule.snapshots[0].0;
    enumerate_orders(species)?
        .into_par_iter()
        .map(|order| {
            let start = linear_start(first, &order)?;
            let label = start.order_label();
            Ok((label, ramp_and_relax(schedule, &start)?))
        })
        .collect()
}

fn pair_alignment(config: &ChainConfiguration) -> f64 {
    (config.positions[2] - config.positions[5]).abs()
}

/// True when the pair's axial separation has collapsed below the linear
/// threshold, i.e. the crystal lies in the radial plane.
pub fn is_radially_aligned(config: &ChainConfiguration) -> bool {
    config.n_ions() == 2 && pair_alignment(config) < LINEAR_THRESHOLD
}

fn relaxed_in_field(
    trap: &TrapModel,
    pair: &[IonSpecies],
    axis: Axis,
    field: f64,
    steps: usize,
) -> Result<ChainConfiguration> {
    let mut c = linear_start(trap, pair)?;
    for i in 1..=steps {
        let t = trap
            .clone()
            .with_uniform_field(scaled_unit(axis, field * i as f64 / steps as f64));
        c = relax(&t, pair, &c.positions)?;
    }
    Ok(c)
}

fn scaled_unit(axis: Axis, value: f64) -> [f64; 3] {
    let mut v = [0.0; 3];
    v[axis.index()] = value;
    v
}

/// Smallest static field along `axis` at which a two-ion crystal, followed
/// from zero field, aligns radially. Bisection to 1 V/m on [0, 5000] V/m.
pub fn critical_radial_field(trap: &TrapModel, pair: &[IonSpecies], axis: Axis) -> Result<f64> {
    if pair.len() != 2 {
        return Err(Error::InvalidInput("critical field needs a two-ion crystal".into()));
    }
    if axis == Axis::Z {
        return Err(Error::InvalidInput("alignment field must be radial".into()));
    }
    let aligned =
        |field: f64| -> Result<bool> { Ok(is_radially_aligned(&relaxed_in_field(trap, pair, axis, field, 20)?)) };
    let (mut lo, mut hi) = (0.0, MAX_ALIGNMENT_FIELD);
    if aligned(lo)? {
        return Err(Error::NoTransition(
            "crystal is already radially aligned at zero field".into(),
        ));
    }
    if !aligned(hi)? {
        return Err(Error::NoTransition(format!(
            "no radial alignment up to {MAX_ALIGNMENT_FIELD} V/m along {axis}"
        )));
    }
    while hi - lo > 1.0 {
        let mid = 0.5 * (lo + hi);
        if aligned(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymmetricReorderResult {
    pub initial_order: Vec<String>,
    pub final_order: Vec<String>,
    /// The field never aligned the pair radially, so no reordering
    /// was possible.
    pub subcritical: bool,
    pub reached_target: bool,
    pub trajectory: Vec<ChainConfiguration>,
}

/// Four-step two-ion reordering: ramp on a radial field along y, add the
/// twist y·z coupling, remove the field, remove the twist. The twist sign
/// selects which ion ends up on the left.
pub fn run_asymmetric_reorder(
    trap: &TrapModel,
    start_order: &[IonSpecies],
    field: f64,
    twist: f64,
    target: Option<&[String]>,
    steps: usize,
) -> Result<AsymmetricReorderResult> {
    if start_order.len() != 2 {
        return Err(Error::InvalidInput(
            "asymmetric reordering needs a two-ion crystal".into(),
        ));
    }
    if !(field >= 0.0 && field.is_finite()) || !twist.is_finite() || twist == 0.0 {
        return Err(Error::InvalidInput(
            "need a finite field ≥ 0 and a non-zero twist".into(),
        ));
    }
    for s in start_order {
        let k = trap.spring_constants(s);
        let qc = s.charge_c() * twist;
        if qc * qc >= k[1] * k[2] {
            return Err(Error::InvalidInput(format!(
                "twist {twist:.3e} V/m² deconfines {} in the y-z plane",
                s.name
            )));
        }
    }
    let base = trap.clone().with_twist(0.0).with_uniform_field([0.0; 3]);
    let with_field = base.clone().with_uniform_field([0.0, field, 0.0]);
    let schedule = RampSchedule::new(base.clone())
        .then(with_field.clone(), steps)
        .then(with_field.with_twist(twist), steps)
        .then(base.clone().with_twist(twist), steps)
        .then(base.clone(), steps);
    let start = linear_start(&base, start_order)?;
    let ramp = ramp_and_relax(&schedule, &start)?;
    let subcritical = !is_radially_aligned(&ramp.trajectory[steps]);
    let final_order = ramp.trajectory.last().expect("non-empty").order_label();
    if subcritical {
        log::warn!("field {field} V/m did not align the pair radially; order not controlled");
    }
    Ok(AsymmetricReorderResult {
        initial_order: start.order_label(),
        reached_target: target.is_none_or(|t| t == final_order.as_slice()),
        final_order,
        subcritical,
        trajectory: ramp.trajectory,
    })
}
