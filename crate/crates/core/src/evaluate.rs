//! Numerical success probabilities and Monte Carlo plays.
//!
//! The channel acts on the shared state first; the players' unitaries are then
//! applied and the winning projector measured.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{apply_channel, ChannelKind, ChannelSpec, MemoryModel};
use crate::error::{Error, Result};
use crate::game::{
    initial_state, outcome_bits, player_unitaries, success_projector, wins, GameInput, DIM,
};
use crate::qcore::{expectation, DensityMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub mu: f64,
    /// Success probabilities in input order (1,1), (1,2), …, (3,3).
    pub probs: [f64; 9],
    pub mean: f64,
}

impl SweepPoint {
    pub fn new(alpha: f64, mu: f64, probs: [f64; 9]) -> Self {
        Self {
            alpha,
            mu,
            probs,
            mean: probs.iter().sum::<f64>() / 9.0,
        }
    }
}

/// Φ(|Ψ⟩⟨Ψ|), before the players act.
pub fn channel_output(spec: &ChannelSpec) -> Result<DensityMatrix> {
    let rho = DensityMatrix::from_pure(&initial_state())?;
    apply_channel(spec, &rho)
}

/// `(A_i ⊗ B_j) Φ(|Ψ⟩⟨Ψ|) (A_i ⊗ B_j)†`.
pub fn final_state(spec: &ChannelSpec, input: GameInput) -> Result<DensityMatrix> {
    let noisy = channel_output(spec)?;
    noisy.conjugate(&player_unitaries().joint(input))
}

pub fn success_probability(spec: &ChannelSpec, input: GameInput) -> Result<f64> {
    expectation(&success_projector(input), &final_state(spec, input)?)
}

/// All nine success probabilities, sharing one channel application.
pub fn success_probabilities(spec: &ChannelSpec) -> Result<[f64; 9]> {
    let noisy = channel_output(spec)?;
    let ops = player_unitaries();
    let mut out = [0.0; 9];
    for input in GameInput::all() {
        let rho = noisy.conjugate(&ops.joint(input))?;
        out[input.index()] = expectation(&success_projector(input), &rho)?;
    }
    Ok(out)
}

/// Average success probability over the nine equally likely inputs.
pub fn mean_success(spec: &ChannelSpec) -> Result<f64> {
    Ok(success_probabilities(spec)?.iter().sum::<f64>() / 9.0)
}

/// Evaluates every (α, μ) pair, α outer, μ inner. Points are computed in
/// parallel; the output order does not depend on scheduling.
pub fn sweep(
    kind: ChannelKind,
    alphas: &[f64],
    mus: &[f64],
    model: MemoryModel,
) -> Result<Vec<SweepPoint>> {
    let grid: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| mus.iter().map(move |&m| (a, m)))
        .collect();
    grid.par_iter()
        .map(|&(a, m)| {
            let spec = ChannelSpec::with_model(kind, a, m, model)?;
            Ok(SweepPoint::new(a, m, success_probabilities(&spec)?))
        })
        .collect()
}

/// Measurement outcome distribution of ρ in the computational basis.
/// Entries down to −1e-9 are clamped to zero and the rest renormalized.
pub fn outcome_distribution(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let diag = rho.diagonal();
    let total: f64 = diag.iter().sum();
    if (total - 1.0).abs() > 1e-9 || diag.iter().any(|&p| p < -1e-9) {
        return Err(Error::BadDistribution(total));
    }
    let clamped: Vec<f64> = diag.iter().map(|&p| p.max(0.0)).collect();
    let norm: f64 = clamped.iter().sum();
    Ok(clamped.into_iter().map(|p| p / norm).collect())
}

/// Plays the game `n` times on a fixed input and counts wins.
///
/// Outcomes are drawn by inverse CDF from the diagonal of the final state
/// using a ChaCha8 generator seeded with `seed`, so identical arguments give
/// identical counts.
pub fn sample_plays(spec: &ChannelSpec, input: GameInput, n: u64, seed: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::NoPlays);
    }
    let dist = outcome_distribution(&final_state(spec, input)?)?;
    let mut cdf = Vec::with_capacity(DIM);
    let mut acc = 0.0;
    for p in &dist {
        acc += p;
        cdf.push(acc);
    }
    let winning: Vec<bool> = (0..DIM)
        .map(|k| {
            let (a1, a2, b1, b2) = outcome_bits(k);
            wins(input, a1, a2, b1, b2)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut count = 0;
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let k = cdf.partition_point(|&c| c <= u).min(DIM - 1);
        if winning[k] {
            count += 1;
        }
    }
    Ok(count)
}
