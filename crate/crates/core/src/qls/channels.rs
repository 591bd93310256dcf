//! Stochastic, trajectory-level operations: spontaneous decay, sympathetic
//! cooling, fluorescence detection, and Bayesian updates on photon counts.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::state::{DecayChannel, JointState};
use crate::error::{Error, Result};

/// Quantum-jump step for `channel` on ion `ion` over `elapsed` seconds.
///
/// With probability (1 − e^{−t/τ})·P(upper) the ion jumps: the upper-level
/// branch is moved to the lower level with the motion unchanged. Otherwise
/// the upper-level amplitude is damped by e^{−t/2τ} and the state
/// renormalised. For an ion sitting in the upper level this is a Bernoulli
/// decay with p = 1 − e^{−t/τ}.
pub fn spontaneous_decay<R: Rng + ?Sized>(
    state: &mut JointState,
    ion: usize,
    channel: &DecayChannel,
    elapsed: f64,
    rng: &mut R,
) -> Result<bool> {
    if !(elapsed >= 0.0) || !(channel.lifetime > 0.0) {
        return Err(Error::InvalidInput("decay needs elapsed ≥ 0 and lifetime > 0".into()));
    }
    if elapsed == 0.0 {
        return Ok(false);
    }
    let p_decay = -(-elapsed / channel.lifetime).exp_m1();
    let p_upper = state.level_population(ion, channel.upper);
    if p_upper == 0.0 {
        return Ok(false);
    }
    let jump = rng.random::<f64>() < p_decay * p_upper;
    if jump {
        let mut out = vec![Complex64::new(0.0, 0.0); state.dim()];
        for i in 0..state.dim() {
            if state.level_of(i, ion) == channel.upper {
                out[state.index_with(i, ion, channel.lower, i % state.n_fock())] = state.amplitudes[i];
            }
        }
        state.amplitudes = out;
    } else {
        let damp = (-0.5 * elapsed / channel.lifetime).exp();
        for i in 0..state.dim() {
            if state.level_of(i, ion) == channel.upper {
                state.amplitudes[i] *= damp;
            }
        }
    }
    state.normalize()?;
    Ok(jump)
}

/// Thermal mean occupation with the given ground-state probability.
pub fn nbar_from_ground_probability(p0: f64) -> Result<f64> {
    if !(p0 > 0.0 && p0 <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "ground-state probability must be in (0, 1], got {p0}"
        )));
    }
    Ok((1.0 - p0) / p0)
}

/// Thermal Fock distribution over 0..=n_max, renormalised on the cutoff.
pub fn thermal_distribution(nbar: f64, n_max: usize) -> Vec<f64> {
    if nbar == 0.0 {
        let mut p = vec![0.0; n_max + 1];
        p[0] = 1.0;
        return p;
    }
    let r = nbar / (nbar + 1.0);
    let mut p: Vec<f64> = (0..=n_max).map(|n| r.powi(n as i32) / (nbar + 1.0)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Sympathetic cooling through the logic ion, unravelled per trajectory: the
/// motion and the logic ion are measured (discarding their state), the
/// logic ion is reset to `logic_level` and the motion to a Fock state drawn
/// from a thermal distribution with mean `nbar`. Other ions keep their
/// conditional internal state.
pub fn cool_to_ground<R: Rng + ?Sized>(
    state: &mut JointState,
    logic_ion: usize,
    logic_level: usize,
    nbar: f64,
    rng: &mut R,
) -> Result<usize> {
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidInput(format!("n̄ must be ≥ 0, got {nbar}")));
    }
    if logic_ion >= state.n_ions() || logic_level >= state.ions[logic_ion].levels.len() {
        return Err(Error::InvalidInput("logic ion/level out of range".into()));
    }
    // measure (logic level, n) jointly
    let nf = state.n_fock();
    let n_levels = state.ions[logic_ion].levels.len();
    let mut weights = vec![0.0; n_levels * nf];
    for i in 0..state.dim() {
        weights[state.level_of(i, logic_ion) * nf + i % nf] += state.amplitudes[i].norm_sqr();
    }
    let outcome = sample_index(&weights, rng);
    let (measured_level, measured_n) = (outcome / nf, outcome % nf);
    let new_n = sample_index(&thermal_distribution(nbar, state.n_max), rng);
    let mut out = vec![Complex64::new(0.0, 0.0); state.dim()];
    for i in 0..state.dim() {
        if state.level_of(i, logic_ion) == measured_level && i % nf == measured_n {
            out[state.index_with(i, logic_ion, logic_level, new_n)] = state.amplitudes[i];
        }
    }
    state.amplitudes = out;
    state.normalize()?;
    Ok(new_n)
}

/// Photon-count model for the logic ion: `bright_level` fluoresces with
/// mean `lambda_bright` counts per window, every other level with
/// `lambda_dark`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    pub logic_ion: usize,
    pub bright_level: usize,
    pub lambda_bright: f64,
    pub lambda_dark: f64,
    /// s.
    pub window: f64,
}

impl DetectionModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_dark >= 0.0) || !(self.lambda_bright > self.lambda_dark) || !(self.window > 0.0) {
            return Err(Error::InvalidInput(
                "detection needs 0 ≤ λ_dark < λ_bright and a positive window".into(),
            ));
        }
        Ok(())
    }

    pub fn mean_counts(&self, level: usize) -> f64 {
        if level == self.bright_level {
            self.lambda_bright
        } else {
            self.lambda_dark
        }
    }

    /// Smallest count for which "bright" is the more likely explanation.
    pub fn threshold(&self) -> u64 {
        (0..)
            .find(|&k| poisson_pmf(k, self.lambda_bright) > poisson_pmf(k, self.lambda_dark))
            .expect("λ_bright > λ_dark guarantees a crossing")
    }
}

pub fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let ln_fact: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
    (k as f64 * lambda.ln() - lambda - ln_fact).exp()
}

pub fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive rate").sample(rng) as u64
}

/// Projectively measures the logic ion, then draws a photon count for the
/// observed level. Returns (count, observed level).
pub fn detect<R: Rng + ?Sized>(state: &mut JointState, model: &DetectionModel, rng: &mut R) -> Result<(u64, usize)> {
    model.validate()?;
    if model.logic_ion >= state.n_ions() {
        return Err(Error::InvalidInput("logic ion out of range".into()));
    }
    let pops = state.level_populations(model.logic_ion);
    let level = sample_index(&pops, rng);
    state.project_level(model.logic_ion, level);
    state.normalize()?;
    Ok((sample_poisson(model.mean_counts(level), rng), level))
}

/// posterior_i ∝ prior_i · likelihood_i.
pub fn bayes_update(prior: &[f64], likelihoods: &[f64]) -> Result<Vec<f64>> {
    if prior.len() != likelihoods.len() || prior.is_empty() {
        return Err(Error::InvalidInput("prior and likelihoods must match".into()));
    }
    let total: f64 = prior.iter().sum();
    if (total - 1.0).abs() > 1e-9 || prior.iter().any(|p| *p < 0.0) {
        return Err(Error::InvalidInput("prior must be a probability vector".into()));
    }
    let mut post: Vec<f64> = prior.iter().zip(likelihoods).map(|(p, l)| p * l).collect();
    let z: f64 = post.iter().sum();
    if !(z > 0.0) {
        return Err(Error::ZeroLikelihood(0));
    }
    post.iter_mut().for_each(|p| *p /= z);
    Ok(post)
}

/// Sequential Poisson updates over `counts`, one mean count per hypothesis.
pub fn bayes_update_counts(prior: &[f64], counts: &[u64], means: &[f64]) -> Result<Vec<f64>> {
    let mut post = prior.to_vec();
    for &k in counts {
        let l: Vec<f64> = means.iter().map(|&m| poisson_pmf(k, m)).collect();
        post = bayes_update(&post, &l).map_err(|e| match e {
            Error::ZeroLikelihood(_) => Error::ZeroLikelihood(k),
            e => e,
        })?;
    }
    Ok(post)
}
