//! Mode frequencies versus an applied uniform field, with mode identity
//! tracked by eigenvector overlap, and stray-field compensation by locating
//! the extremum of a radial out-of-phase mode frequency.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::equilibrium::find_equilibrium;
use super::modes::{normal_modes, NormalModeSet};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::trap::{Axis, IonSpecies, TrapModel};

/// Modes of one scan point in their native (ascending) order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeScanPoint {
    /// Applied field along the scan axis, V/m.
    pub field: f64,
    /// rad/s, ascending.
    pub frequencies: Vec<f64>,
    pub eigenvectors: Matrix,
    pub stable: Vec<bool>,
    /// m.
    pub positions: Vec<f64>,
}

impl ModeScanPoint {
    fn from_modes(field: f64, m: &NormalModeSet) -> Self {
        ModeScanPoint {
            field,
            frequencies: m.frequencies.clone(),
            eigenvectors: m.eigenvectors.clone(),
            stable: m.stable.clone(),
            positions: m.config.positions.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeScanResult {
    pub axis: Axis,
    pub species: Vec<IonSpecies>,
    /// Strictly monotone.
    pub field_values: Vec<f64>,
    pub points: Vec<ModeScanPoint>,
    /// `tracking[i][label]` is the native index at point `i` of the mode
    /// that has native index `label` at the first point.
    pub tracking: Vec<Vec<usize>>,
}

impl ModeScanResult {
    /// Frequency (Hz) of tracked mode `label` across the scan.
    pub fn tracked_frequencies_hz(&self, label: usize) -> Vec<f64> {
        self.points
            .iter()
            .zip(&self.tracking)
            .map(|(p, t)| p.frequencies[t[label]] / std::f64::consts::TAU)
            .collect()
    }

    pub fn n_modes(&self) -> usize {
        self.points.first().map_or(0, |p| p.frequencies.len())
    }
}

fn with_extra_field(trap: &TrapModel, axis: Axis, field: f64) -> TrapModel {
    let mut e = trap.uniform_field;
    e[axis.index()] += field;
    trap.clone().with_uniform_field(e)
}

fn modes_at(trap: &TrapModel, species: &[IonSpecies], axis: Axis, field: f64) -> Result<NormalModeSet> {
    let t = with_extra_field(trap, axis, field);
    let c = find_equilibrium(&t, species, None)?;
    normal_modes(&t, &c)
}

/// Greedy assignment: repeatedly pair the (previous, current) modes with the
/// largest remaining |overlap|.
fn match_modes(prev: &Matrix, prev_order: &[usize], cur: &Matrix) -> Vec<usize> {
    let n = prev.cols();
    let mut pairs = Vec::with_capacity(n * n);
    for (label, &pi) in prev_order.iter().enumerate() {
        let pv = prev.column(pi);
        for c in 0..n {
            pairs.push((linalg::dot(&pv, &cur.column(c)).abs(), label, c));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for (_, label, c) in pairs {
        if out[label] == usize::MAX && !used[c] {
            out[label] = c;
            used[c] = true;
        }
    }
    out
}

fn track(points: &[ModeScanPoint]) -> Vec<Vec<usize>> {
    let mut tracking: Vec<Vec<usize>> = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if i == 0 {
            tracking.push((0..p.frequencies.len()).collect());
        } else {
            let t = match_modes(&points[i - 1].eigenvectors, &tracking[i - 1], &p.eigenvectors);
            tracking.push(t);
        }
    }
    tracking
}

/// Normal modes at each applied field value (added to the trap's own field
/// along `axis`). Points are solved independently in parallel; tracking is a
/// sequential pass afterwards, so results match a sequential evaluation.
pub fn scan_field(trap: &TrapModel, species: &[IonSpecies], axis: Axis, fields: &[f64]) -> Result<ModeScanResult> {
    if fields.is_empty() {
        return Err(Error::InvalidInput("field grid is empty".into()));
    }
    let increasing = fields.windows(2).all(|w| w[1] > w[0]);
    let decreasing = fields.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) || fields.iter().any(|f| !f.is_finite()) {
        return Err(Error::InvalidInput("field grid must be strictly monotone".into()));
    }
    let results: Vec<Result<NormalModeSet>> = fields.par_iter().map(|&f| modes_at(trap, species, axis, f)).collect();
    let mut points = Vec::with_capacity(fields.len());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(m) => points.push(ModeScanPoint::from_modes(fields[i], &m)),
            Err(e) => {
                let tracking = track(&points);
                let partial = ModeScanResult {
                    axis,
                    species: species.to_vec(),
                    field_values: fields[..i].to_vec(),
                    points,
                    tracking,
                };
                return Err(Error::ScanAborted {
                    index: i,
                    partial: Box::new(partial),
                    source: Box::new(e),
                });
            }
        }
    }
    let tracking = track(&points);
    Ok(ModeScanResult {
        axis,
        species: species.to_vec(),
        field_values: fields.to_vec(),
        points,
        tracking,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompensationResult {
    /// Applied field at the frequency extremum, V/m; cancels the stray field.
    pub field: f64,
    /// Tracked mode frequency there, Hz.
    pub frequency_hz: f64,
    /// True when the extremum is a maximum of the frequency.
    pub is_maximum: bool,
    pub coarse: ModeScanResult,
}

/// Frequency (rad/s) of the mode at `field` best overlapping `reference`.
fn overlapping_frequency(
    trap: &TrapModel,
    species: &[IonSpecies],
    axis: Axis,
    field: f64,
    reference: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let m = modes_at(trap, species, axis, field)?;
    let best = (0..m.n_modes())
        .max_by(|&a, &b| {
            let oa = linalg::dot(&m.mode_column(a), reference).abs();
            let ob = linalg::dot(&m.mode_column(b), reference).abs();
            oa.total_cmp(&ob)
        })
        .expect("modes exist");
    Ok((m.frequencies[best], m.mode_column(best)))
}

/// Applied field along `axis` at which the radial out-of-phase mode along
/// `axis` is stationary. The mode frequency depends only on the net field, so
/// the result is minus the trap's stray field component. A coarse scan over
/// `±range` (`points` samples) brackets the extremum, golden-section search
/// refines it to `tol` V/m.
pub fn compensate_stray_field(
    trap: &TrapModel,
    species: &[IonSpecies],
    axis: Axis,
    range: f64,
    points: usize,
    tol: f64,
) -> Result<CompensationResult> {
    if !(range > 0.0) || points < 5 || !(tol > 0.0) {
        return Err(Error::InvalidInput(
            "compensation needs range > 0, ≥ 5 points and tol > 0".into(),
        ));
    }
    if axis == Axis::Z {
        return Err(Error::InvalidInput("compensation acts on a radial axis".into()));
    }
    let fields: Vec<f64> = (0..points)
        .map(|i| -range + 2.0 * range * i as f64 / (points - 1) as f64)
        .collect();
    let coarse = scan_field(trap, species, axis, &fields)?;
    // identify the mode at the scan centre, then follow its label
    let centre = points / 2;
    let centre_modes = modes_at(trap, species, axis, fields[centre])?;
    let oop = super::shifts::out_of_phase_mode(&centre_modes, axis)
        .ok_or_else(|| Error::NoMinimum(format!("no out-of-phase mode along {axis}")))?;
    let native = (0..coarse.n_modes())
        .max_by(|&a, &b| {
            let pa = &coarse.points[centre].eigenvectors;
            let oa = linalg::dot(&pa.column(a), &centre_modes.mode_column(oop)).abs();
            let ob = linalg::dot(&pa.column(b), &centre_modes.mode_column(oop)).abs();
            oa.total_cmp(&ob)
        })
        .expect("modes exist");
    let label = coarse.tracking[centre]
        .iter()
        .position(|&n| n == native)
        .expect("tracking is a permutation");
    let f = coarse.tracked_frequencies_hz(label);
    let is_maximum = f[0] + f[points - 1] < 2.0 * f[centre];
    let sign = if is_maximum { -1.0 } else { 1.0 };
    let k = (0..points)
        .min_by(|&a, &b| (sign * f[a]).total_cmp(&(sign * f[b])))
        .expect("non-empty");
    if k == 0 || k == points - 1 {
        return Err(Error::NoMinimum(format!(
            "mode frequency extremum lies outside ±{range} V/m"
        )));
    }
    let p = &coarse.points[k];
    let mut reference = p.eigenvectors.column(coarse.tracking[k][label]);
    let mut objective = |e: f64| -> Result<f64> {
        let (w, v) = overlapping_frequency(trap, species, axis, e, &reference)?;
        reference = v;
        Ok(sign * w)
    };
    let (mut a, mut b) = (fields[k - 1], fields[k + 1]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = objective(c)?;
    let mut fd = objective(d)?;
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = objective(d)?;
        }
    }
    let field = 0.5 * (a + b);
    let (w, _) = overlapping_frequency(trap, species, axis, field, &reference)?;
    Ok(CompensationResult {
        field,
        frequency_hz: w / std::f64::consts::TAU,
        is_maximum,
        coarse,
    })
}

/// Smallest field magnitude along `axis` (searched in (0, max_field]) that
/// shifts the radial out-of-phase mode by `shift_hz` from its zero-field
/// value; bisection to 1e-3 V/m.
pub fn field_for_frequency_shift(
    trap: &TrapModel,
    species: &[IonSpecies],
    axis: Axis,
    shift_hz: f64,
    max_field: f64,
) -> Result<f64> {
    let base = modes_at(trap, species, axis, 0.0)?;
    let oop = super::shifts::out_of_phase_mode(&base, axis)
        .ok_or_else(|| Error::NoMinimum(format!("no out-of-phase mode along {axis}")))?;
    let f0 = base.frequencies[oop];
    let reference = base.mode_column(oop);
    let shift = |e: f64| -> Result<f64> {
        let (w, _) = overlapping_frequency(trap, species, axis, e, &reference)?;
        Ok(((w - f0) / std::f64::consts::TAU).abs())
    };
    if shift(max_field)? < shift_hz {
        return Err(Error::NoTransition(format!(
            "shift stays below {shift_hz} Hz up to {max_field} V/m"
        )));
    }
    let (mut lo, mut hi) = (0.0, max_field);
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if shift(mid)? < shift_hz {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
