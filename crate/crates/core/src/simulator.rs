//! Seeded synthetic Monte-Carlo sample sets with known labels.
//!
//! Streams come from ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`), which
//! is portable across platforms. For each item, in order, the generator draws:
//!
//! 1. the true class, uniform over the classes;
//! 2. a uniform `[0,1)` value; the item is ambiguous when it is below `difficulty_mix`;
//! 3. a uniform `[0,1)` signal strength `u`;
//! 4. one standard normal jitter per class for the item's base logits;
//! 5. for ambiguous items only, a competing class, uniform over the other classes;
//! 6. `n_passes × n_classes` standard normals, pass-major, scaled by `noise_scale`.
//!
//! The true class logit is raised by `concentration * u`, and so is the
//! competitor's for ambiguous items. Each pass emits the softmax of the perturbed logits rounded
//! to `f32`, so a set survives the binary file format unchanged.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::metrics::compute_all;
use crate::tensor::{LabelSet, McSampleSet};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_items: usize,
    pub n_classes: usize,
    pub n_passes: usize,
    /// Largest logit advantage of the true class; each item draws a uniform share of it.
    pub concentration: f64,
    /// Standard deviation of the per-pass logit perturbation.
    pub noise_scale: f64,
    /// Probability that an item gets a competing second logit.
    pub difficulty_mix: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_items: 5000,
            n_classes: 4,
            n_passes: 50,
            concentration: 6.0,
            noise_scale: 0.5,
            difficulty_mix: 0.3,
            seed: 20_210_901,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        if self.n_items == 0 {
            return bad("n_items must be >= 1");
        }
        if self.n_classes < 2 {
            return bad("n_classes must be >= 2");
        }
        if self.n_passes == 0 {
            return bad("n_passes must be >= 1");
        }
        if !(self.concentration.is_finite() && self.concentration > 0.0) {
            return bad("concentration must be finite and > 0");
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return bad("noise_scale must be finite and >= 0");
        }
        if !(0.0..=1.0).contains(&self.difficulty_mix) {
            return bad("difficulty_mix must lie in [0,1]");
        }
        Ok(())
    }
}

/// Output of [`simulate`]: samples, labels, and which items were built ambiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub samples: McSampleSet,
    pub labels: LabelSet,
    pub ambiguous: Vec<bool>,
}

fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = libm::exp(z - max);
        total += *o;
    }
    for o in out.iter_mut() {
        *o = (*o / total) as f32 as f64;
    }
}

pub fn simulate(config: &SimConfig) -> Result<Simulation> {
    config.validate()?;
    let (n, c, t) = (config.n_items, config.n_classes, config.n_passes);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut labels = Vec::with_capacity(n);
    let mut ambiguous = Vec::with_capacity(n);
    // item-major while generating, transposed to pass-major below
    let mut by_item = alloc::vec![0.0; n * t * c];
    let mut base = alloc::vec![0.0; c];
    let mut logits = alloc::vec![0.0; c];

    for item in 0..n {
        let label = rng.random_range(0..c);
        let is_ambiguous = rng.random::<f64>() < config.difficulty_mix;
        let advantage = config.concentration * rng.random::<f64>();
        for z in base.iter_mut() {
            *z = rng.sample::<f64, _>(StandardNormal);
        }
        base[label] += advantage;
        if is_ambiguous {
            let mut rival = rng.random_range(0..c - 1);
            if rival >= label {
                rival += 1;
            }
            base[rival] += advantage;
        }
        for pass in 0..t {
            for (z, &b) in logits.iter_mut().zip(&base) {
                let noise: f64 = rng.sample(StandardNormal);
                *z = b + config.noise_scale * noise;
            }
            let start = (item * t + pass) * c;
            softmax_into(&logits, &mut by_item[start..start + c]);
        }
        labels.push(label);
        ambiguous.push(is_ambiguous);
    }

    let mut probs = alloc::vec![0.0; n * t * c];
    for item in 0..n {
        for pass in 0..t {
            let src = (item * t + pass) * c;
            let dst = (pass * n + item) * c;
            probs[dst..dst + c].copy_from_slice(&by_item[src..src + c]);
        }
    }
    Ok(Simulation {
        samples: McSampleSet::new(t, n, c, probs)?,
        labels: LabelSet::new(labels, c)?,
        ambiguous,
    })
}

/// Error rate and mean uncertainties over one group of simulated items.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupStats {
    pub count: usize,
    pub error_rate: f64,
    pub mean_sigma: f64,
    pub mean_entropy: f64,
    pub mean_mutual_information: f64,
    pub mean_kwon_epistemic: f64,
}

/// Per-group summary; a group with no items is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSummary {
    pub clean: Option<GroupStats>,
    pub ambiguous: Option<GroupStats>,
}

pub fn describe(config: &SimConfig, sim: &Simulation) -> Result<SimSummary> {
    let s = &sim.samples;
    if (s.items(), s.classes(), s.passes()) != (config.n_items, config.n_classes, config.n_passes) {
        return Err(Error::InvalidParameter(
            "simulation does not match its config".into(),
        ));
    }
    if sim.ambiguous.len() != s.items() {
        return Err(Error::LengthMismatch {
            left: s.items(),
            right: sim.ambiguous.len(),
        });
    }
    sim.labels.check_against(s)?;
    let items = compute_all(s);
    let group = |flag: bool| {
        let members: Vec<usize> = (0..items.len())
            .filter(|&i| sim.ambiguous[i] == flag)
            .collect();
        if members.is_empty() {
            return None;
        }
        let count = members.len();
        let mean =
            |f: &dyn Fn(usize) -> f64| members.iter().map(|&i| f(i)).sum::<f64>() / count as f64;
        let labels = sim.labels.as_slice();
        Some(GroupStats {
            count,
            error_rate: mean(&|i| f64::from(u8::from(items[i].predicted_class != labels[i]))),
            mean_sigma: mean(&|i| items[i].sigma_uncertainty),
            mean_entropy: mean(&|i| items[i].entropy),
            mean_mutual_information: mean(&|i| items[i].mutual_information),
            mean_kwon_epistemic: mean(&|i| items[i].kwon_epistemic),
        })
    };
    Ok(SimSummary {
        clean: group(false),
        ambiguous: group(true),
    })
}
