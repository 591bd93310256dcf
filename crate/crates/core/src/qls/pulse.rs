//! Laser pulses on the joint state, integrated exactly.
//!
//! Each pulse Hamiltonian couples basis states in small connected blocks
//! (a Jaynes/Tavis-Cummings ladder rung, or a carrier pair). Every block is
//! diagonalised once and the block propagator exp(−iH) is applied directly.
//! Sideband couplings carry a factor i; the gauge D = i^(number of targets in
//! their upper level) makes the sideband blocks real symmetric so the Jacobi
//! solver applies.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::state::JointState;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};

/// Population allowed in truncated ladder states.
pub const LEAKAGE_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    Carrier,
    RedSideband,
    BlueSideband,
    Displacement,
}

fn default_upper() -> usize {
    1
}

fn default_eta() -> f64 {
    1.0
}

/// One addressed ion and the two levels the pulse couples. The blue sideband
/// adds a quantum when going lower → upper; the red sideband removes one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseTarget {
    pub ion: usize,
    #[serde(default)]
    pub lower: usize,
    #[serde(default = "default_upper")]
    pub upper: usize,
    /// Lamb-Dicke parameter; on multi-ion pulses the couplings scale as
    /// η_j / mean(η).
    #[serde(default = "default_eta")]
    pub eta: f64,
}

impl PulseTarget {
    pub fn new(ion: usize, lower: usize, upper: usize) -> Self {
        PulseTarget {
            ion,
            lower,
            upper,
            eta: 1.0,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub kind: PulseKind,
    #[serde(default)]
    pub targets: Vec<PulseTarget>,
    /// Rotation angle: the carrier flips (l,n)↔(u,n) by θ, the blue
    /// sideband (l,n)↔(u,n+1) by θ√(n+1), the red sideband (l,n)↔(u,n−1)
    /// by θ√n. A π rotation is complete transfer.
    #[serde(default)]
    pub angle: f64,
    /// Accumulated detuning phase δ·t of the drive from its resonance.
    #[serde(default)]
    pub detuning_angle: f64,
    /// Coherent amplitude for [`PulseKind::Displacement`].
    #[serde(default)]
    pub alpha: Complex64,
}

impl Pulse {
    fn rotation(kind: PulseKind, targets: Vec<PulseTarget>, angle: f64) -> Self {
        Pulse {
            kind,
            targets,
            angle,
            detuning_angle: 0.0,
            alpha: Complex64::new(0.0, 0.0),
        }
    }

    pub fn carrier(targets: Vec<PulseTarget>, angle: f64) -> Self {
        Self::rotation(PulseKind::Carrier, targets, angle)
    }

    pub fn blue(targets: Vec<PulseTarget>, angle: f64) -> Self {
        Self::rotation(PulseKind::BlueSideband, targets, angle)
    }

    pub fn red(targets: Vec<PulseTarget>, angle: f64) -> Self {
        Self::rotation(PulseKind::RedSideband, targets, angle)
    }

    pub fn displacement(alpha: Complex64) -> Self {
        Pulse {
            kind: PulseKind::Displacement,
            targets: Vec::new(),
            angle: 0.0,
            detuning_angle: 0.0,
            alpha,
        }
    }

    pub fn with_detuning_angle(mut self, phase: f64) -> Self {
        self.detuning_angle = phase;
        self
    }

    /// Same pulse run backwards.
    pub fn inverse(&self) -> Self {
        let mut p = self.clone();
        p.angle = -p.angle;
        p.detuning_angle = -p.detuning_angle;
        p.alpha = -p.alpha;
        p
    }

    pub fn validate(&self, state: &JointState) -> Result<()> {
        if !(self.angle.is_finite()
            && self.detuning_angle.is_finite()
            && self.alpha.re.is_finite()
            && self.alpha.im.is_finite())
        {
            return Err(Error::InvalidInput("pulse parameters must be finite".into()));
        }
        if self.kind == PulseKind::Displacement {
            return Ok(());
        }
        if self.targets.is_empty() {
            return Err(Error::InvalidInput("pulse needs at least one target".into()));
        }
        let counts = state.level_counts();
        for (k, t) in self.targets.iter().enumerate() {
            if t.ion >= counts.len() {
                return Err(Error::InvalidInput(format!("target ion {} out of range", t.ion)));
            }
            if self.targets[..k].iter().any(|o| o.ion == t.ion) {
                return Err(Error::InvalidInput(format!("ion {} targeted twice", t.ion)));
            }
            if t.lower >= counts[t.ion] || t.upper >= counts[t.ion] || t.lower == t.upper {
                return Err(Error::InvalidInput(format!("bad transition on ion {}", t.ion)));
            }
            let sideband = matches!(self.kind, PulseKind::RedSideband | PulseKind::BlueSideband);
            if sideband && !(t.eta > 0.0 && t.eta.is_finite()) {
                return Err(Error::InvalidInput("sideband pulses need η > 0".into()));
            }
        }
        Ok(())
    }

    fn weights(&self) -> Vec<f64> {
        if self.kind == PulseKind::Carrier || self.targets.len() == 1 {
            return vec![1.0; self.targets.len()];
        }
        let mean = self.targets.iter().map(|t| t.eta).sum::<f64>() / self.targets.len() as f64;
        self.targets.iter().map(|t| t.eta / mean).collect()
    }
}

/// Pulse Hamiltonian (dimensionless, U = exp(−iH)) as Hermitian entries
/// (row, col, value) with row ≤ col, for the layout of `state`.
pub fn hamiltonian_entries(state: &JointState, pulse: &Pulse) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::new();
    let w = pulse.weights();
    let half = 0.5 * pulse.angle;
    for idx in 0..state.dim() {
        let (levels, n) = state.label(idx);
        let mut diag = 0.0;
        for (t, wt) in pulse.targets.iter().zip(&w) {
            let l = levels[t.ion];
            if l == t.upper {
                diag -= 0.5 * pulse.detuning_angle;
            } else if l == t.lower {
                diag += 0.5 * pulse.detuning_angle;
            } else {
                continue;
            }
            if l != t.lower {
                continue;
            }
            // coupling from (lower, n) to its partner
            let (n2, amp) = match pulse.kind {
                PulseKind::Carrier => (n, Complex64::new(half * wt, 0.0)),
                PulseKind::BlueSideband if n < state.n_max => {
                    (n + 1, Complex64::new(0.0, half * wt * ((n + 1) as f64).sqrt()))
                }
                PulseKind::RedSideband if n > 0 => (n - 1, Complex64::new(0.0, half * wt * (n as f64).sqrt())),
                _ => continue,
            };
            let partner = state.index_with(idx, t.ion, t.upper, n2);
            // stored as ⟨partner|H|idx⟩ = amp, so ⟨idx|H|partner⟩ = conj(amp)
            if idx < partner {
                out.push((idx, partner, amp.conj()));
            } else {
                out.push((partner, idx, amp));
            }
        }
        if diag != 0.0 {
            out.push((idx, idx, Complex64::new(diag, 0.0)));
        }
    }
    out
}

#[derive(Clone, Debug)]
struct Block {
    indices: Vec<usize>,
    /// Row-major block propagator.
    unitary: Vec<Complex64>,
    /// Contains a state at the Fock cutoff whose ladder is cut off.
    truncated: bool,
}

/// Precomputed propagator of one pulse for one state layout.
#[derive(Clone, Debug)]
pub struct CompiledPulse {
    kind: PulseKind,
    level_counts: Vec<usize>,
    n_max: usize,
    blocks: Vec<Block>,
    alpha: Complex64,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl CompiledPulse {
    pub fn new(layout: &JointState, pulse: &Pulse) -> Result<Self> {
        pulse.validate(layout)?;
        let mut compiled = CompiledPulse {
            kind: pulse.kind,
            level_counts: layout.level_counts(),
            n_max: layout.n_max,
            blocks: Vec::new(),
            alpha: pulse.alpha,
        };
        if pulse.kind == PulseKind::Displacement {
            return Ok(compiled);
        }
        let entries = hamiltonian_entries(layout, pulse);
        let dim = layout.dim();
        let mut parent: Vec<usize> = (0..dim).collect();
        let mut touched = vec![false; dim];
        for &(i, j, _) in &entries {
            touched[i] = true;
            touched[j] = true;
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); dim];
        for i in (0..dim).filter(|&i| touched[i]) {
            let r = find(&mut parent, i);
            members[r].push(i);
        }
        let sideband = matches!(pulse.kind, PulseKind::RedSideband | PulseKind::BlueSideband);
        // gauge phase exponent per basis state
        let upper_count = |idx: usize| -> usize {
            let (levels, _) = layout.label(idx);
            pulse.targets.iter().filter(|t| levels[t.ion] == t.upper).count()
        };
        let mut local = vec![usize::MAX; dim];
        for indices in members.into_iter().filter(|m| !m.is_empty()) {
            let k = indices.len();
            for (p, &i) in indices.iter().enumerate() {
                local[i] = p;
            }
            let gauge: Vec<Complex64> = indices
                .iter()
                .map(|&i| {
                    if sideband {
                        Complex64::i().powu(upper_count(i) as u32)
                    } else {
                        Complex64::new(1.0, 0.0)
                    }
                })
                .collect();
            let mut h = Matrix::zeros(k, k);
            for &(i, j, v) in &entries {
                if local[i] < k && indices.get(local[i]) == Some(&i) && indices.get(local[j]) == Some(&j) {
                    let (p, q) = (local[i], local[j]);
                    // D† H D must be real
                    let g = gauge[p].conj() * v * gauge[q];
                    debug_assert!(g.im.abs() <= 1e-12 * (1.0 + g.re.abs()));
                    h[(p, q)] = g.re;
                    h[(q, p)] = g.re;
                }
            }
            let eig = symmetric_eigen(&h);
            let phases: Vec<Complex64> = eig.values.iter().map(|&l| Complex64::from_polar(1.0, -l)).collect();
            let mut unitary = vec![Complex64::new(0.0, 0.0); k * k];
            for p in 0..k {
                for q in 0..k {
                    let mut s = Complex64::new(0.0, 0.0);
                    for (m, ph) in phases.iter().enumerate() {
                        s += ph * (eig.vectors[(p, m)] * eig.vectors[(q, m)]);
                    }
                    unitary[p * k + q] = gauge[p] * s * gauge[q].conj();
                }
            }
            let truncated = sideband && indices.iter().any(|&i| i % (layout.n_max + 1) == layout.n_max);
            for &i in &indices {
                local[i] = usize::MAX;
            }
            compiled.blocks.push(Block {
                indices,
                unitary,
                truncated,
            });
        }
        Ok(compiled)
    }

    fn check_layout(&self, state: &JointState) -> Result<()> {
        if state.level_counts() != self.level_counts || state.n_max != self.n_max {
            return Err(Error::InvalidInput(
                "pulse was compiled for a different state layout".into(),
            ));
        }
        Ok(())
    }

    pub fn apply(&self, state: &mut JointState) -> Result<()> {
        self.check_layout(state)?;
        if self.kind == PulseKind::Displacement {
            return apply_displacement_per_level(state, |_| self.alpha);
        }
        let mut leak = 0.0;
        let mut buf = Vec::new();
        for b in &self.blocks {
            if b.truncated {
                leak += b.indices.iter().map(|&i| state.amplitudes[i].norm_sqr()).sum::<f64>();
            }
            let k = b.indices.len();
            buf.clear();
            buf.extend(b.indices.iter().map(|&i| state.amplitudes[i]));
            for (p, &i) in b.indices.iter().enumerate() {
                let row = &b.unitary[p * k..(p + 1) * k];
                state.amplitudes[i] = row.iter().zip(&buf).map(|(u, a)| u * a).sum();
            }
        }
        let top = state.fock_populations()[state.n_max];
        if leak > LEAKAGE_LIMIT || top > LEAKAGE_LIMIT {
            return Err(Error::Truncation {
                population: leak.max(top),
                n_max: state.n_max,
            });
        }
        Ok(())
    }
}

/// Applies `pulse` to `state` (compiling it first).
pub fn apply_pulse(state: &mut JointState, pulse: &Pulse) -> Result<()> {
    CompiledPulse::new(state, pulse)?.apply(state)
}

/// ⟨m|D(α)|n⟩ for the untruncated oscillator.
pub fn displacement_element(m: usize, n: usize, alpha: Complex64) -> Complex64 {
    let x = alpha.norm_sqr();
    let (lo, hi) = (m.min(n), m.max(n));
    let k = hi - lo;
    // √(lo!/hi!) computed as a product
    let mut ratio = 1.0;
    for j in (lo + 1)..=hi {
        ratio /= (j as f64).sqrt();
    }
    let lag = generalized_laguerre(lo, k as f64, x);
    let base = if m >= n { alpha } else { -alpha.conj() };
    base.powu(k as u32) * (ratio * (-0.5 * x).exp() * lag)
}

/// L_n^(a)(x) by the three-term recurrence.
pub fn generalized_laguerre(n: usize, a: f64, x: f64) -> f64 {
    let mut l0 = 1.0;
    if n == 0 {
        return l0;
    }
    let mut l1 = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 + a - x) * l1 - (kf + a) * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// Smallest cutoff for which a displacement by |α| is represented safely.
pub fn required_n_max(alpha: Complex64) -> usize {
    let x = alpha.norm_sqr();
    (x + 6.0 * (x + 1.0).sqrt()).ceil() as usize
}

/// Population above `n_max` of a coherent state with mean occupation `x`.
fn coherent_tail(x: f64, n_max: usize) -> f64 {
    let mut term = (-x).exp();
    let mut below = term;
    for n in 1..=n_max {
        term *= x / n as f64;
        below += term;
    }
    (1.0 - below).max(0.0)
}

/// Displaces the motion by `alpha(internal index)`, conditioned on each
/// internal basis state.
pub(crate) fn apply_displacement_per_level(state: &mut JointState, alpha: impl Fn(usize) -> Complex64) -> Result<()> {
    let nf = state.n_fock();
    let mut out = vec![Complex64::new(0.0, 0.0); state.dim()];
    for internal in 0..state.internal_dim() {
        let a = alpha(internal);
        let block = &state.amplitudes[internal * nf..(internal + 1) * nf];
        if block.iter().all(|c| c.norm_sqr() == 0.0) {
            continue;
        }
        if a.norm_sqr() == 0.0 {
            out[internal * nf..(internal + 1) * nf].copy_from_slice(block);
            continue;
        }
        if required_n_max(a) > state.n_max {
            return Err(Error::Truncation {
                population: coherent_tail(a.norm_sqr(), state.n_max),
                n_max: state.n_max,
            });
        }
        for m in 0..nf {
            out[internal * nf + m] = (0..nf).map(|n| displacement_element(m, n, a) * block[n]).sum();
        }
    }
    let lost = 1.0 - out.iter().map(|c| c.norm_sqr()).sum::<f64>() / state.norm_sqr();
    let top = out[..].chunks(nf).map(|c| c[nf - 1].norm_sqr()).sum::<f64>();
    if lost > LEAKAGE_LIMIT || top > LEAKAGE_LIMIT {
        return Err(Error::Truncation {
            population: lost.max(top),
            n_max: state.n_max,
        });
    }
    state.amplitudes = out;
    state.normalize()
}
