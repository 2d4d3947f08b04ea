//! Noise channels with memory.
//!
//! Six single-qubit families are supported. Pauli families (depolarizing and
//! the three flips) gain memory through a Markov chain over consecutive
//! qubits: each qubit repeats its neighbour's Pauli error with probability μ
//! and draws a fresh one with probability 1 − μ. The two damping families use
//! a two-qubit correlated operator pair mixed with the uncorrelated product
//! channel.
//!
//! Two topologies are available for the four-qubit register (see
//! [`MemoryModel`]). [`MemoryModel::GlobalStream`] is the default and the one
//! that reproduces the closed-form success probabilities.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{apply_kraus, pauli, ComplexMatrix, DensityMatrix, KrausSet};

/// Kraus operators with squared Frobenius norm below this are dropped.
pub const PRUNE_WEIGHT: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    Depolarizing,
    AmplitudeDamping,
    PhaseDamping,
    PhaseFlip,
    BitFlip,
    BitPhaseFlip,
}

impl ChannelKind {
    /// Fixed order, also used for tie-breaking in classification.
    pub const ALL: [ChannelKind; 6] = [
        ChannelKind::Depolarizing,
        ChannelKind::AmplitudeDamping,
        ChannelKind::PhaseDamping,
        ChannelKind::PhaseFlip,
        ChannelKind::BitFlip,
        ChannelKind::BitPhaseFlip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Depolarizing => "depolarizing",
            ChannelKind::AmplitudeDamping => "amplitude-damping",
            ChannelKind::PhaseDamping => "phase-damping",
            ChannelKind::PhaseFlip => "phase-flip",
            ChannelKind::BitFlip => "bit-flip",
            ChannelKind::BitPhaseFlip => "bit-phase-flip",
        }
    }

    pub fn is_pauli(self) -> bool {
        !self.is_damping()
    }

    pub fn is_damping(self) -> bool {
        matches!(
            self,
            ChannelKind::AmplitudeDamping | ChannelKind::PhaseDamping
        )
    }

    pub fn is_flip(self) -> bool {
        matches!(
            self,
            ChannelKind::PhaseFlip | ChannelKind::BitFlip | ChannelKind::BitPhaseFlip
        )
    }

    pub fn order(self) -> usize {
        Self::ALL.iter().position(|&k| k == self).unwrap()
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownKind(pub String);

impl fmt::Display for UnknownKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown channel kind '{}' (expected one of: {})",
            self.0,
            ChannelKind::ALL.map(|k| k.name()).join(", ")
        )
    }
}

impl std::error::Error for UnknownKind {}

impl FromStr for ChannelKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ChannelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownKind(s.to_string()))
    }
}

/// How the four game qubits share channel memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemoryModel {
    /// All four qubits are streamed through one channel in order a1, a2, b1, b2.
    /// Pauli kinds: four-qubit memory chain. Damping kinds: one memory switch
    /// shared by the whole register; with probability 1 − μ every qubit is
    /// damped independently, with probability μ Alice's pair and Bob's pair
    /// each undergo the correlated two-qubit operators.
    #[default]
    GlobalStream,
    /// Alice's pair and Bob's pair each traverse their own two-qubit memory
    /// channel, with no correlation between the players.
    PairwiseLocal,
}

impl MemoryModel {
    pub fn name(self) -> &'static str {
        match self {
            MemoryModel::GlobalStream => "global-stream",
            MemoryModel::PairwiseLocal => "pairwise-local",
        }
    }
}

impl fmt::Display for MemoryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MemoryModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "global-stream" => Ok(MemoryModel::GlobalStream),
            "pairwise-local" => Ok(MemoryModel::PairwiseLocal),
            other => Err(format!(
                "unknown memory model '{other}' (expected global-stream or pairwise-local)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub alpha: f64,
    pub mu: f64,
    pub model: MemoryModel,
}

impl ChannelSpec {
    pub fn new(kind: ChannelKind, alpha: f64, mu: f64) -> Result<Self> {
        Self::with_model(kind, alpha, mu, MemoryModel::default())
    }

    pub fn with_model(kind: ChannelKind, alpha: f64, mu: f64, model: MemoryModel) -> Result<Self> {
        check_unit("alpha", alpha)?;
        check_unit("mu", mu)?;
        Ok(Self {
            kind,
            alpha,
            mu,
            model,
        })
    }
}

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::ParameterOutOfRange { name, value });
    }
    Ok(())
}

fn real2(a: f64, b: f64, c: f64, d: f64) -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[a, b, c, d]).expect("2x2 literal")
}

/// The single-qubit Kraus operators of each family.
pub fn single_qubit_kraus(kind: ChannelKind, alpha: f64) -> Result<KrausSet> {
    check_unit("alpha", alpha)?;
    let ops = match kind {
        ChannelKind::AmplitudeDamping => vec![
            real2(1.0, 0.0, 0.0, (1.0 - alpha).sqrt()),
            real2(0.0, alpha.sqrt(), 0.0, 0.0),
        ],
        ChannelKind::PhaseDamping => vec![
            real2(1.0, 0.0, 0.0, (1.0 - alpha).sqrt()),
            real2(0.0, 0.0, 0.0, alpha.sqrt()),
        ],
        ChannelKind::Depolarizing => {
            let p = pauli_probabilities(kind, alpha)?;
            (0..4).map(|k| pauli(k).scale_real(p[k].sqrt())).collect()
        }
        // Flip channels: identity and the one Pauli they apply.
        _ => vec![
            pauli(0).scale_real((1.0 - alpha).sqrt()),
            pauli(flip_axis(kind)).scale_real(alpha.sqrt()),
        ],
    };
    KrausSet::new(ops)
}

fn flip_axis(kind: ChannelKind) -> usize {
    match kind {
        ChannelKind::BitFlip => 1,
        ChannelKind::BitPhaseFlip => 2,
        ChannelKind::PhaseFlip => 3,
        _ => unreachable!("not a flip channel"),
    }
}

/// Probabilities of (I, σx, σy, σz) for a Pauli family.
pub fn pauli_probabilities(kind: ChannelKind, alpha: f64) -> Result<[f64; 4]> {
    check_unit("alpha", alpha)?;
    Ok(match kind {
        ChannelKind::Depolarizing => {
            let q = alpha / 4.0;
            [1.0 - 3.0 * q, q, q, q]
        }
        ChannelKind::BitFlip => [1.0 - alpha, alpha, 0.0, 0.0],
        ChannelKind::BitPhaseFlip => [1.0 - alpha, 0.0, alpha, 0.0],
        ChannelKind::PhaseFlip => [1.0 - alpha, 0.0, 0.0, alpha],
        ChannelKind::AmplitudeDamping | ChannelKind::PhaseDamping => {
            return Err(Error::NotPauli(kind.name()))
        }
    })
}

/// Pauli memory chain over `n` consecutive qubits.
///
/// The operator `σ_{i1} ⊗ … ⊗ σ_{in}` carries weight
/// `p(i_n) · Π_{m<n} [(1−μ) p(i_m) + μ δ(i_m, i_{m+1})]`.
pub fn pauli_stream_kraus(kind: ChannelKind, alpha: f64, mu: f64, n: usize) -> Result<KrausSet> {
    check_unit("mu", mu)?;
    let p = pauli_probabilities(kind, alpha)?;
    let paulis: Vec<ComplexMatrix> = (0..4).map(pauli).collect();
    let mut ops = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let mut w = p[idx[n - 1]];
        for m in 0..n - 1 {
            let same = if idx[m] == idx[m + 1] { 1.0 } else { 0.0 };
            w *= (1.0 - mu) * p[idx[m]] + mu * same;
        }
        if w >= PRUNE_WEIGHT {
            let op = idx[1..]
                .iter()
                .fold(paulis[idx[0]].clone(), |acc, &k| acc.kron(&paulis[k]));
            ops.push(op.scale_real(w.sqrt()));
        }
        // odometer over {0..3}^n, last qubit fastest
        let mut pos = n;
        loop {
            if pos == 0 {
                return KrausSet::new(ops);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < 4 {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Correlated two-qubit operators for the damping families.
///
/// Amplitude damping: `diag(cos χ, 1, 1, 1)` and `sin χ |11⟩⟨00|` with
/// `sin χ = √α`. Phase damping: `diag(1, 1, 1, √(1−α))` and
/// `diag(0, 0, 0, √α)`, dephasing only the doubly-excited component.
pub fn correlated_damping_pair(kind: ChannelKind, alpha: f64) -> Result<[ComplexMatrix; 2]> {
    check_unit("alpha", alpha)?;
    let c = (1.0 - alpha).sqrt();
    let s = alpha.sqrt();
    let z = Complex64::new(0.0, 0.0);
    let r = |x: f64| Complex64::new(x, 0.0);
    match kind {
        ChannelKind::AmplitudeDamping => {
            let k0 = ComplexMatrix::diagonal(&[r(c), r(1.0), r(1.0), r(1.0)]);
            let mut e = vec![z; 16];
            e[3 * 4] = r(s);
            Ok([k0, ComplexMatrix::new(4, 4, e)?])
        }
        ChannelKind::PhaseDamping => Ok([
            ComplexMatrix::diagonal(&[r(1.0), r(1.0), r(1.0), r(c)]),
            ComplexMatrix::diagonal(&[z, z, z, r(s)]),
        ]),
        other => Err(Error::NotDamping(other.name())),
    }
}

/// Two-qubit channel with memory.
///
/// Pauli kinds: `A_ij = √(α_i[(1−μ)α_j + μδ_ij]) σ_i ⊗ σ_j`. Damping kinds:
/// `√(1−μ) E_i ⊗ E_j` together with `√μ` times the correlated pair.
pub fn two_qubit_memory_kraus(kind: ChannelKind, alpha: f64, mu: f64) -> Result<KrausSet> {
    check_unit("alpha", alpha)?;
    check_unit("mu", mu)?;
    if kind.is_pauli() {
        return pauli_stream_kraus(kind, alpha, mu, 2);
    }
    let single = single_qubit_kraus(kind, alpha)?;
    let mut ops: Vec<ComplexMatrix> = single
        .tensor(&single)?
        .ops()
        .iter()
        .map(|k| k.scale_real((1.0 - mu).sqrt()))
        .collect();
    ops.extend(
        correlated_damping_pair(kind, alpha)?
            .iter()
            .map(|k| k.scale_real(mu.sqrt())),
    );
    KrausSet::new(ops)?.pruned(PRUNE_WEIGHT)
}

/// Kraus set for the uncorrelated (μ = 0) branch on `n` qubits.
fn independent_kraus(kind: ChannelKind, alpha: f64, n: usize) -> Result<KrausSet> {
    let single = single_qubit_kraus(kind, alpha)?;
    let mut acc = single.clone();
    for _ in 1..n {
        acc = acc.tensor(&single)?;
    }
    acc.pruned(PRUNE_WEIGHT)
}

/// Kraus set acting on the full 16-dimensional game register.
pub fn four_qubit_kraus(spec: &ChannelSpec) -> Result<KrausSet> {
    check_unit("alpha", spec.alpha)?;
    check_unit("mu", spec.mu)?;
    let (kind, alpha, mu) = (spec.kind, spec.alpha, spec.mu);
    match spec.model {
        MemoryModel::PairwiseLocal => {
            let pair = two_qubit_memory_kraus(kind, alpha, mu)?;
            pair.tensor(&pair)?.pruned(PRUNE_WEIGHT)
        }
        MemoryModel::GlobalStream if kind.is_pauli() => pauli_stream_kraus(kind, alpha, mu, 4),
        MemoryModel::GlobalStream => {
            let mut ops: Vec<ComplexMatrix> = independent_kraus(kind, alpha, 4)?
                .ops()
                .iter()
                .map(|k| k.scale_real((1.0 - mu).sqrt()))
                .collect();
            let pair = correlated_damping_pair(kind, alpha)?;
            for a in &pair {
                for b in &pair {
                    ops.push(a.kron(b).scale_real(mu.sqrt()));
                }
            }
            KrausSet::new(ops)?.pruned(PRUNE_WEIGHT)
        }
    }
}

/// `ρ ↦ Φ_{α,μ}(ρ)` on the game register.
pub fn apply_channel(spec: &ChannelSpec, rho: &DensityMatrix) -> Result<DensityMatrix> {
    apply_kraus(&four_qubit_kraus(spec)?, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::initial_state;

    #[test]
    fn kind_names_round_trip() {
        for k in ChannelKind::ALL {
            assert_eq!(k.name().parse::<ChannelKind>().unwrap(), k);
        }
        assert!("nonsense".parse::<ChannelKind>().is_err());
        assert_eq!(
            "pairwise-local".parse::<MemoryModel>().unwrap(),
            MemoryModel::PairwiseLocal
        );
        assert_eq!(MemoryModel::default(), MemoryModel::GlobalStream);
    }

    #[test]
    fn zero_noise_is_identity() {
        for k in ChannelKind::ALL {
            let ks = single_qubit_kraus(k, 0.0)
                .unwrap()
                .pruned(PRUNE_WEIGHT)
                .unwrap();
            assert_eq!(ks.len(), 1, "{k}");
            assert!(ks.ops()[0].max_diff(&ComplexMatrix::identity(2)).unwrap() < 1e-15);
        }
    }

    #[test]
    fn phase_flip_operators() {
        let a = 0.3;
        let ks = single_qubit_kraus(ChannelKind::PhaseFlip, a).unwrap();
        assert_eq!(ks.len(), 2);
        assert!(
            ks.ops()[0]
                .max_diff(&pauli(0).scale_real((1.0 - a).sqrt()))
                .unwrap()
                < 1e-15
        );
        assert!(
            ks.ops()[1]
                .max_diff(&pauli(3).scale_real(a.sqrt()))
                .unwrap()
                < 1e-15
        );
    }

    #[test]
    fn full_amplitude_damping() {
        let ks = single_qubit_kraus(ChannelKind::AmplitudeDamping, 1.0).unwrap();
        assert_eq!(ks.ops()[0], real2(1.0, 0.0, 0.0, 0.0));
        assert_eq!(ks.ops()[1], real2(0.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn out_of_range_parameters() {
        assert!(single_qubit_kraus(ChannelKind::BitFlip, 1.5).is_err());
        assert!(two_qubit_memory_kraus(ChannelKind::BitFlip, 0.5, -0.1).is_err());
        assert!(ChannelSpec::new(ChannelKind::BitFlip, f64::NAN, 0.0).is_err());
        assert!(ChannelSpec::new(ChannelKind::BitFlip, 0.2, 1.01).is_err());
    }

    #[test]
    fn pauli_probability_vectors() {
        assert_eq!(
            pauli_probabilities(ChannelKind::Depolarizing, 0.0).unwrap(),
            [1.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            pauli_probabilities(ChannelKind::Depolarizing, 0.4).unwrap(),
            [0.7, 0.1, 0.1, 0.1]
        );
        assert_eq!(
            pauli_probabilities(ChannelKind::PhaseFlip, 1.0).unwrap(),
            [0.0, 0.0, 0.0, 1.0]
        );
        assert!(matches!(
            pauli_probabilities(ChannelKind::PhaseDamping, 0.5),
            Err(Error::NotPauli(_))
        ));
    }

    #[test]
    fn fully_correlated_pauli_pair() {
        let (a, kind) = (0.6, ChannelKind::Depolarizing);
        let ks = two_qubit_memory_kraus(kind, a, 1.0).unwrap();
        let p = pauli_probabilities(kind, a).unwrap();
        assert_eq!(ks.len(), 4);
        for (k, op) in ks.ops().iter().enumerate() {
            let expect = pauli(k).kron(&pauli(k)).scale_real(p[k].sqrt());
            assert!(op.max_diff(&expect).unwrap() < 1e-15);
        }
    }

    #[test]
    fn four_qubit_set_sizes() {
        let spec = ChannelSpec::with_model(
            ChannelKind::Depolarizing,
            0.3,
            0.4,
            MemoryModel::PairwiseLocal,
        )
        .unwrap();
        assert_eq!(four_qubit_kraus(&spec).unwrap().len(), 256);
        let spec = ChannelSpec::new(ChannelKind::Depolarizing, 0.3, 0.4).unwrap();
        assert_eq!(four_qubit_kraus(&spec).unwrap().len(), 256);
        let spec = ChannelSpec::new(ChannelKind::AmplitudeDamping, 0.3, 0.4).unwrap();
        assert_eq!(four_qubit_kraus(&spec).unwrap().len(), 16 + 4);
        for kind in ChannelKind::ALL {
            let spec = ChannelSpec::new(kind, 0.0, 0.7).unwrap();
            let ks = four_qubit_kraus(&spec).unwrap();
            // α = 0 leaves only multiples of the identity.
            assert!(ks.completeness_residual() < 1e-12);
            for op in ks.ops() {
                let id = ComplexMatrix::identity(16).scale(op.get(0, 0));
                assert!(op.max_diff(&id).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn full_phase_flip_fixes_game_state() {
        let rho = DensityMatrix::from_pure(&initial_state()).unwrap();
        let spec = ChannelSpec::new(ChannelKind::PhaseFlip, 1.0, 0.0).unwrap();
        let out = apply_channel(&spec, &rho).unwrap();
        assert!(out.matrix().max_diff(rho.matrix()).unwrap() < 1e-12);
    }
}
