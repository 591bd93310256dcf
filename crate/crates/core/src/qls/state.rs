//! Pure joint state of several ions' internal levels and one shared motional
//! mode truncated at `n_max` quanta.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spontaneous decay from `upper` to `lower` with lifetime `lifetime` (s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayChannel {
    pub upper: usize,
    pub lower: usize,
    pub lifetime: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InternalLevelSet {
    pub ion: String,
    pub levels: Vec<String>,
    #[serde(default)]
    pub decays: Vec<DecayChannel>,
}

impl InternalLevelSet {
    pub fn new(ion: &str, levels: &[&str]) -> Self {
        InternalLevelSet {
            ion: ion.to_string(),
            levels: levels.iter().map(|s| s.to_string()).collect(),
            decays: Vec::new(),
        }
    }

    pub fn with_decay(mut self, upper: usize, lower: usize, lifetime: f64) -> Self {
        self.decays.push(DecayChannel { upper, lower, lifetime });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "ion {} needs at least two levels",
                self.ion
            )));
        }
        for (i, l) in self.levels.iter().enumerate() {
            if self.levels[..i].contains(l) {
                return Err(Error::InvalidInput(format!("duplicate level {l} on ion {}", self.ion)));
            }
        }
        for d in &self.decays {
            if d.upper >= self.levels.len() || d.lower >= self.levels.len() || d.upper == d.lower {
                return Err(Error::InvalidInput(format!("bad decay channel on ion {}", self.ion)));
            }
            if !(d.lifetime > 0.0) {
                return Err(Error::InvalidInput("decay lifetime must be > 0".into()));
            }
        }
        Ok(())
    }

    pub fn level(&self, name: &str) -> Result<usize> {
        self.levels
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| Error::InvalidInput(format!("ion {} has no level {name}", self.ion)))
    }
}

/// Amplitudes are stored with the Fock index fastest and the first ion's
/// level slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub ions: Vec<InternalLevelSet>,
    pub n_max: usize,
    pub amplitudes: Vec<Complex64>,
}

pub const DEFAULT_N_MAX: usize = 10;

impl JointState {
    /// All ions in level 0, motion in |0⟩.
    pub fn ground(ions: Vec<InternalLevelSet>, n_max: usize) -> Result<Self> {
        Self::basis(ions, n_max, None, 0)
    }

    /// Basis state with the given levels (default all 0) and `n` quanta.
    pub fn basis(ions: Vec<InternalLevelSet>, n_max: usize, levels: Option<&[usize]>, n: usize) -> Result<Self> {
        if ions.is_empty() {
            return Err(Error::InvalidInput("joint state needs at least one ion".into()));
        }
        for i in &ions {
            i.validate()?;
        }
        if n > n_max {
            return Err(Error::InvalidInput(format!("Fock level {n} above n_max {n_max}")));
        }
        let mut s = JointState {
            amplitudes: Vec::new(),
            ions,
            n_max,
        };
        s.amplitudes = vec![Complex64::new(0.0, 0.0); s.dim()];
        let zeros = vec![0; s.n_ions()];
        let levels = levels.unwrap_or(&zeros);
        let idx = s.index(levels, n)?;
        s.amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn n_ions(&self) -> usize {
        self.ions.len()
    }

    pub fn n_fock(&self) -> usize {
        self.n_max + 1
    }

    pub fn level_counts(&self) -> Vec<usize> {
        self.ions.iter().map(|i| i.levels.len()).collect()
    }

    pub fn internal_dim(&self) -> usize {
        self.level_counts().iter().product()
    }

    pub fn dim(&self) -> usize {
        self.internal_dim() * self.n_fock()
    }

    pub fn index(&self, levels: &[usize], n: usize) -> Result<usize> {
        if levels.len() != self.n_ions() || n > self.n_max {
            return Err(Error::InvalidInput("basis label does not fit the state".into()));
        }
        let mut internal = 0;
        for (l, c) in levels.iter().zip(self.level_counts()) {
            if *l >= c {
                return Err(Error::InvalidInput(format!("level {l} out of range")));
            }
            internal = internal * c + l;
        }
        Ok(internal * self.n_fock() + n)
    }

    /// (levels, n) of basis index `idx`.
    pub fn label(&self, idx: usize) -> (Vec<usize>, usize) {
        let n = idx % self.n_fock();
        let mut internal = idx / self.n_fock();
        let counts = self.level_counts();
        let mut levels = vec![0; counts.len()];
        for k in (0..counts.len()).rev() {
            levels[k] = internal % counts[k];
            internal /= counts[k];
        }
        (levels, n)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr().sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidInput("cannot normalise a null state".into()));
        }
        self.amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(())
    }

    /// Index step between consecutive levels of ion `ion`.
    fn stride(&self, ion: usize) -> usize {
        self.ions[ion + 1..].iter().map(|i| i.levels.len()).product::<usize>() * self.n_fock()
    }

    /// Level of ion `ion` in basis state `idx`.
    pub fn level_of(&self, idx: usize, ion: usize) -> usize {
        (idx / self.stride(ion)) % self.ions[ion].levels.len()
    }

    /// Population of `level` on ion `ion`.
    pub fn level_population(&self, ion: usize, level: usize) -> f64 {
        self.level_populations(ion)[level]
    }

    pub fn level_populations(&self, ion: usize) -> Vec<f64> {
        let count = self.ions[ion].levels.len();
        let stride = self.stride(ion);
        let mut p = vec![0.0; count];
        for (i, a) in self.amplitudes.iter().enumerate() {
            p[(i / stride) % count] += a.norm_sqr();
        }
        p
    }

    pub fn fock_populations(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.n_fock()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            p[i % self.n_fock()] += a.norm_sqr();
        }
        p
    }

    pub fn mean_occupation(&self) -> f64 {
        self.fock_populations()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &JointState) -> Result<Complex64> {
        if self.level_counts() != other.level_counts() || self.n_max != other.n_max {
            return Err(Error::InvalidInput("states live in different spaces".into()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &JointState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Projects ion `ion` onto `level` (unnormalised) and returns the
    /// probability of that outcome.
    pub fn project_level(&mut self, ion: usize, level: usize) -> f64 {
        let mut p = 0.0;
        for i in 0..self.dim() {
            if self.level_of(i, ion) == level {
                p += self.amplitudes[i].norm_sqr();
            } else {
                self.amplitudes[i] = Complex64::new(0.0, 0.0);
            }
        }
        p
    }

    /// Same internal state with the motion replaced by |n⟩ and ion `ion`
    /// moved to `level`; the input must already be projected so that its
    /// internal part is a product with respect to `ion`.
    pub(crate) fn index_with(&self, idx: usize, ion: usize, level: usize, n: usize) -> usize {
        let stride = self.stride(ion);
        let old = (idx / stride) % self.ions[ion].levels.len();
        let moved = idx - old * stride + level * stride;
        moved - moved % self.n_fock() + n
    }
}
