//! Seeded random instances: atomic filtrations with controlled depth,
//! branching, and regularity, plus terminal functions over several value
//! profiles. All draws are integer draws mapped through exact ratios, so a
//! seed reproduces the same instance in both arithmetic modes.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::filtration::{AtomSpec, Filtration, TerminalFunction};
use crate::scalar::Scalar;

/// How a parent's probability is divided among its children.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbabilityScheme<S> {
    /// Exact `1/b` shares.
    UniformSplit,
    /// Random shares, each at least `min_ratio` of the parent, so the tree
    /// is `min_ratio`-regular by construction.
    RandomSplit { min_ratio: S },
}

/// Leaf value profile for the generated terminal function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueScheme {
    /// Sixteenths in `[0, 2]`.
    NonnegativeUniform,
    /// Sixteenths in `[-1, 1]`.
    SignedUniform,
    /// Mostly zero, with occasional halves in `[1/2, 16]`.
    SparseSpike,
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig<S> {
    pub seed: u64,
    pub depth: RangeInclusive<usize>,
    pub branching: RangeInclusive<usize>,
    pub probabilities: ProbabilityScheme<S>,
    pub values: ValueScheme,
}

impl<S: Scalar> GeneratorConfig<S> {
    /// Depth 1..=6, branching 1..=4, uniform splits, nonnegative values.
    pub fn new(seed: u64) -> Self {
        GeneratorConfig {
            seed,
            depth: 1..=6,
            branching: 1..=4,
            probabilities: ProbabilityScheme::UniformSplit,
            values: ValueScheme::NonnegativeUniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneratorError {
    #[error("empty {what} range")]
    EmptyRange { what: &'static str },
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("branching must be at least 1")]
    ZeroBranching,
    #[error("min ratio must be positive, got {min_ratio}")]
    NonpositiveRatio { min_ratio: String },
    #[error("min ratio {min_ratio} cannot split a parent {branching} ways")]
    InfeasibleRatio { min_ratio: String, branching: usize },
}

/// Draws a validated filtration and a not-identically-zero terminal
/// function. Deterministic in the seed: the draw order is depth, then per
/// level and parent the branching factor and shares, then leaf values
/// (resampled wholesale in the rare all-zero case).
pub fn generate<S: Scalar>(
    config: &GeneratorConfig<S>,
) -> Result<(Filtration<S>, TerminalFunction<S>), GeneratorError> {
    validate(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let depth = rng.gen_range(config.depth.clone());

    let mut specs: Vec<Vec<AtomSpec<S>>> = Vec::with_capacity(depth);
    let mut parent_layer: Vec<(Option<String>, S)> = vec![(None, S::one())];
    for level in 1..=depth {
        let mut layer: Vec<AtomSpec<S>> = Vec::new();
        let mut next_parents = Vec::new();
        for (parent_id, parent_prob) in &parent_layer {
            let branching = rng.gen_range(config.branching.clone());
            for share in split(&mut rng, &config.probabilities, parent_prob, branching) {
                let id = format!("n{}_{}", level, layer.len());
                layer.push(match parent_id {
                    None => AtomSpec::root(id.clone(), share.clone()),
                    Some(parent) => AtomSpec::child(id.clone(), parent.clone(), share.clone()),
                });
                next_parents.push((Some(id), share));
            }
        }
        specs.push(layer);
        parent_layer = next_parents;
    }
    let filt = Filtration::new(specs).expect("generated trees always validate");

    let values = loop {
        let draw: Vec<S> = (0..filt.leaf_count())
            .map(|_| draw_value(&mut rng, config.values))
            .collect();
        if draw.iter().any(|v| !v.is_zero()) {
            break draw;
        }
    };
    let f = TerminalFunction::new(&filt, values).expect("one value per leaf");
    Ok((filt, f))
}

fn validate<S: Scalar>(config: &GeneratorConfig<S>) -> Result<(), GeneratorError> {
    if config.depth.is_empty() {
        return Err(GeneratorError::EmptyRange { what: "depth" });
    }
    if config.branching.is_empty() {
        return Err(GeneratorError::EmptyRange { what: "branching" });
    }
    if *config.depth.start() == 0 {
        return Err(GeneratorError::ZeroDepth);
    }
    if *config.branching.start() == 0 {
        return Err(GeneratorError::ZeroBranching);
    }
    if let ProbabilityScheme::RandomSplit { min_ratio } = &config.probabilities {
        if !(S::zero() < *min_ratio) {
            return Err(GeneratorError::NonpositiveRatio { min_ratio: min_ratio.to_string() });
        }
        let widest = *config.branching.end();
        if S::one() < S::from_int(widest as i64) * min_ratio.clone() {
            return Err(GeneratorError::InfeasibleRatio {
                min_ratio: min_ratio.to_string(),
                branching: widest,
            });
        }
    }
    Ok(())
}

// shares sum exactly to the parent: the slack 1 - b*r is distributed in
// proportion to integer weights, so no rounding residue exists
fn split<S: Scalar>(
    rng: &mut ChaCha8Rng,
    scheme: &ProbabilityScheme<S>,
    parent_prob: &S,
    branching: usize,
) -> Vec<S> {
    match scheme {
        ProbabilityScheme::UniformSplit => {
            let share = parent_prob.clone() / S::from_int(branching as i64);
            vec![share; branching]
        }
        ProbabilityScheme::RandomSplit { min_ratio } => {
            let weights: Vec<i64> = (0..branching).map(|_| rng.gen_range(1..=8i64)).collect();
            let total: i64 = weights.iter().sum();
            let slack =
                S::one() - S::from_int(branching as i64) * min_ratio.clone();
            weights
                .into_iter()
                .map(|w| {
                    let ratio = min_ratio.clone()
                        + S::from_int(w) * slack.clone() / S::from_int(total);
                    ratio * parent_prob.clone()
                })
                .collect()
        }
    }
}

fn draw_value<S: Scalar>(rng: &mut ChaCha8Rng, scheme: ValueScheme) -> S {
    match scheme {
        ValueScheme::NonnegativeUniform => S::ratio(rng.gen_range(0..=32i64), 16),
        ValueScheme::SignedUniform => S::ratio(rng.gen_range(-16..=16i64), 16),
        ValueScheme::SparseSpike => {
            if rng.gen_range(0..8u32) == 0 {
                S::ratio(rng.gen_range(1..=32i64), 2)
            } else {
                S::zero()
            }
        }
    }
}
