//! Monte-Carlo simulation of iid random orbits.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::function_space::DensityFunction;
use crate::maps::{Domain, MapFamily};
use crate::math::{floor, frac, sqrt};
use crate::quadrature::composite_gl;
use crate::response::Observable;
use crate::system::RandomSystem;

/// Streams of the counter-based generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Family = 1,
    Parameter = 2,
    Dither = 3,
    Start = 4,
    Bootstrap = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform variate in `[0, 1)` determined by `(seed, replica, step, purpose)`.
pub fn uniform(seed: u64, replica: u64, step: u64, purpose: Purpose) -> f64 {
    let k = splitmix64(seed ^ splitmix64(replica ^ splitmix64(step ^ splitmix64(purpose as u64))));
    (k >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Amplitude of the additive noise that keeps floating-point orbits of
/// expanding maps from collapsing onto dyadic rationals.
pub const DITHER: f64 = 1.0 / (1u64 << 45) as f64;

pub const MIN_LENGTH: usize = 10_000;
pub const MIN_BURN_IN: usize = 1_000;
pub const BATCHES: usize = 50;

#[derive(Debug, Clone)]
pub struct OrbitSpec {
    pub system: RandomSystem,
    pub epsilon: f64,
    pub seed: u64,
    pub replica: u64,
    pub burn_in: usize,
    pub length: usize,
    pub bins: usize,
    pub observables: Vec<Observable>,
}

impl OrbitSpec {
    fn validate(&self) -> Result<()> {
        if self.length < MIN_LENGTH || self.burn_in < MIN_BURN_IN {
            return Err(Error::Config(format!(
                "orbits need length >= {MIN_LENGTH} and burn-in >= {MIN_BURN_IN}, got {} and {}",
                self.length, self.burn_in
            )));
        }
        if self.bins == 0 {
            return Err(Error::Config("histogram needs at least one bin".into()));
        }
        if !self.system.is_probability(self.epsilon) {
            return Err(Error::Config(format!("the system is not a probability mixture at epsilon {}", self.epsilon)));
        }
        self.system.check_epsilon(self.epsilon)
    }
}

/// Statistics of one or more merged orbits.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitStats {
    pub counts: Vec<u64>,
    pub samples: u64,
    pub means: Vec<f64>,
    /// Batch-means standard errors.
    pub std_errors: Vec<f64>,
    /// Batch means per observable, kept for merging.
    pub batch_means: Vec<Vec<f64>>,
}

impl OrbitStats {
    /// Histogram as a density on `[0,1]`.
    pub fn histogram(&self) -> Vec<f64> {
        let k = self.counts.len() as f64;
        self.counts.iter().map(|&c| c as f64 * k / self.samples as f64).collect()
    }
}

/// Mixture of the step map: chooses a family and a parameter from the two
/// uniforms and applies it with dithering.
struct Stepper<'a> {
    system: &'a RandomSystem,
    eps: f64,
    weights: Vec<f64>,
    circle: bool,
}

impl<'a> Stepper<'a> {
    fn new(system: &'a RandomSystem, eps: f64) -> Self {
        Stepper { system, eps, weights: system.weights(eps), circle: system.domain() == Domain::Circle }
    }

    fn pick(&self, u_family: f64, u_param: f64) -> Result<MapFamily> {
        let comps = self.system.components();
        let mut acc = 0.0;
        let mut k = comps.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u_family < acc {
                k = i;
                break;
            }
        }
        let c = &comps[k];
        c.template.at(c.distribution.sample(self.eps, u_param)?)
    }

    fn step(&self, x: f64, seed: u64, replica: u64, n: u64) -> Result<f64> {
        let f = self.pick(uniform(seed, replica, n, Purpose::Family), uniform(seed, replica, n, Purpose::Parameter))?;
        let y = f.forward(x)? + DITHER * uniform(seed, replica, n, Purpose::Dither);
        Ok(if self.circle {
            frac(y)
        } else if y > 1.0 {
            2.0 - y
        } else if y <= 0.0 {
            -y + DITHER
        } else {
            y
        })
    }
}

fn batch_stats(batches: &[f64]) -> (f64, f64) {
    let b = batches.len() as f64;
    let mean = batches.iter().sum::<f64>() / b;
    let var = batches.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (b - 1.0);
    (mean, sqrt(var / b))
}

/// Simulates one orbit and bins it.
pub fn sample_orbit(spec: &OrbitSpec) -> Result<OrbitStats> {
    spec.validate()?;
    let st = Stepper::new(&spec.system, spec.epsilon);
    let (seed, rep) = (spec.seed, spec.replica);
    let mut x = uniform(seed, rep, 0, Purpose::Start);
    let total = (spec.burn_in + spec.length) as u64;
    let batch_len = spec.length / BATCHES;
    let mut counts = vec![0u64; spec.bins];
    let nobs = spec.observables.len();
    let mut batch_sums = vec![vec![0.0; BATCHES]; nobs];
    let k = spec.bins as f64;
    for n in 1..=total {
        x = st.step(x, seed, rep, n)?;
        let i = n as usize;
        if i <= spec.burn_in {
            continue;
        }
        let j = i - spec.burn_in - 1;
        let bin = (floor(x * k) as usize).min(spec.bins - 1);
        counts[bin] += 1;
        let b = (j / batch_len).min(BATCHES - 1);
        for (o, s) in spec.observables.iter().zip(batch_sums.iter_mut()) {
            s[b] += (o.func)(x);
        }
    }
    let sizes: Vec<f64> = (0..BATCHES)
        .map(|b| if b + 1 < BATCHES { batch_len as f64 } else { (spec.length - batch_len * (BATCHES - 1)) as f64 })
        .collect();
    let batch_means: Vec<Vec<f64>> = batch_sums.iter().map(|s| s.iter().zip(&sizes).map(|(a, n)| a / n).collect()).collect();
    let (means, std_errors) = batch_means.iter().map(|b| batch_stats(b)).unzip();
    Ok(OrbitStats { counts, samples: spec.length as u64, means, std_errors, batch_means })
}

/// Pools replicas in index order.
pub fn merge(stats: &[OrbitStats]) -> Result<OrbitStats> {
    let first = stats.first().ok_or_else(|| Error::Config("nothing to merge".into()))?;
    let mut counts = vec![0u64; first.counts.len()];
    let mut samples = 0;
    let nobs = first.means.len();
    let mut batch_means = vec![Vec::new(); nobs];
    for s in stats {
        if s.counts.len() != counts.len() || s.means.len() != nobs {
            return Err(Error::Config("replicas have different shapes".into()));
        }
        counts.iter_mut().zip(&s.counts).for_each(|(a, b)| *a += b);
        samples += s.samples;
        for (acc, b) in batch_means.iter_mut().zip(&s.batch_means) {
            acc.extend_from_slice(b);
        }
    }
    let (means, std_errors) = batch_means.iter().map(|b| batch_stats(b)).unzip();
    Ok(OrbitStats { counts, samples, means, std_errors, batch_means })
}

/// Average of a density over `K` equal bins of `[0,1]`.
pub fn bin_averages(h: &DensityFunction, bins: usize) -> Vec<f64> {
    let k = bins as f64;
    (0..bins).map(|i| k * composite_gl(i as f64 / k, (i + 1) as f64 / k, 1, 8, |x| h.eval(x))).collect()
}

/// `Σ |a_i - b_i| / K`: L¹ distance of two histograms on `[0,1]`.
pub fn histogram_l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Comparison of pooled replicas with a reference histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapComparison {
    pub distance: f64,
    /// 95th percentile of the bootstrap distances to the pooled histogram.
    pub ci95: f64,
    pub resamples: usize,
}

impl BootstrapComparison {
    /// Whether the distance lies within `factor` times the bootstrap scale.
    pub fn within(&self, factor: f64) -> bool {
        self.distance <= factor * self.ci95
    }
}

/// L¹ distance from the pooled histogram to `reference`, with a bootstrap
/// over replicas for its sampling scale.
pub fn bootstrap_l1(replicas: &[OrbitStats], reference: &[f64], resamples: usize, seed: u64) -> Result<BootstrapComparison> {
    let pooled = merge(replicas)?.histogram();
    let r = replicas.len();
    let mut d = Vec::with_capacity(resamples);
    for b in 0..resamples {
        let pick: Vec<OrbitStats> = (0..r)
            .map(|i| {
                let j = (uniform(seed, b as u64, i as u64, Purpose::Bootstrap) * r as f64) as usize;
                replicas[j.min(r - 1)].clone()
            })
            .collect();
        d.push(histogram_l1(&merge(&pick)?.histogram(), &pooled));
    }
    d.sort_by(f64::total_cmp);
    let idx = ((0.95 * resamples as f64) as usize).min(resamples.saturating_sub(1));
    Ok(BootstrapComparison { distance: histogram_l1(&pooled, reference), ci95: d.get(idx).copied().unwrap_or(0.0), resamples })
}

/// Batch means of `φ(x⁺) - φ(x⁻)` along two orbits driven by the same
/// random numbers at parameters `eps_plus` and `eps_minus`.
pub fn coupled_difference(
    system: &RandomSystem,
    phi: &Observable,
    eps_plus: f64,
    eps_minus: f64,
    seed: u64,
    replica: u64,
    burn_in: usize,
    length: usize,
) -> Result<(f64, f64)> {
    for e in [eps_plus, eps_minus] {
        OrbitSpec {
            system: system.clone(),
            epsilon: e,
            seed,
            replica,
            burn_in,
            length,
            bins: 1,
            observables: Vec::new(),
        }
        .validate()?;
    }
    let (sp, sm) = (Stepper::new(system, eps_plus), Stepper::new(system, eps_minus));
    let mut xp = uniform(seed, replica, 0, Purpose::Start);
    let mut xm = xp;
    let batch_len = length / BATCHES;
    let mut sums = vec![0.0; BATCHES];
    for n in 1..=(burn_in + length) as u64 {
        xp = sp.step(xp, seed, replica, n)?;
        xm = sm.step(xm, seed, replica, n)?;
        let i = n as usize;
        if i > burn_in {
            let b = ((i - burn_in - 1) / batch_len).min(BATCHES - 1);
            sums[b] += (phi.func)(xp) - (phi.func)(xm);
        }
    }
    let sizes = (0..BATCHES).map(|b| if b + 1 < BATCHES { batch_len } else { length - batch_len * (BATCHES - 1) });
    let means: Vec<f64> = sums.iter().zip(sizes).map(|(s, n)| s / n as f64).collect();
    Ok(batch_stats(&means))
}

/// Monte-Carlo finite difference of `∫φ h_ε` against the operator
/// prediction `∫φ h*_normalized`.
#[derive(Debug, Clone, PartialEq)]
pub struct McResponseCheck {
    pub epsilon: f64,
    pub central: bool,
    pub fd_estimate: f64,
    pub std_error: f64,
    pub prediction: f64,
    /// Deterministic difference-quotient bias, from spectral solves at the same ε.
    pub bias: f64,
    pub z_score: f64,
}

/// Combines per-replica coupled differences into the check.
///
/// `spectral_fd` is the same difference quotient computed from spectral
/// stationary densities; its distance to `prediction` is the bias budget.
pub fn combine_response_check(
    epsilon: f64,
    central: bool,
    replicas: &[(f64, f64)],
    prediction: f64,
    spectral_fd: f64,
) -> McResponseCheck {
    let width = if central { 2.0 * epsilon } else { epsilon };
    let r = replicas.len() as f64;
    let mean = replicas.iter().map(|p| p.0).sum::<f64>() / r;
    let se = sqrt(replicas.iter().map(|p| p.1 * p.1).sum::<f64>()) / r;
    let fd_estimate = mean / width;
    let std_error = se / width;
    let bias = spectral_fd - prediction;
    let scale = sqrt(std_error * std_error + bias * bias);
    let z_score = if scale > 0.0 { (fd_estimate - prediction) / scale } else { 0.0 };
    McResponseCheck { epsilon, central, fd_estimate, std_error, prediction, bias, z_score }
}
