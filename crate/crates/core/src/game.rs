//! The Mermin–Peres magic squares game.
//!
//! Alice receives a row index, Bob a column index. Each measures two qubits of
//! the shared state and completes a line of the square by parity: Alice's row
//! must have even parity, Bob's column odd parity, and the shared cell must
//! agree.
//!
//! With the player unitaries used here, the measured bits only decode to a
//! winning square if Alice first complements her bits with a row-dependent
//! mask (both bits for row 1, the first for row 2, the second for row 3).
//! Bob uses his bits verbatim. Under that decoding the winning set for each
//! input is exactly the support of `(A_i ⊗ B_j)|Ψ⟩`, so the noiseless game is
//! won with certainty.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{projector, ComplexMatrix, StateVector, ONE, ZERO};

/// Dimension of the four-qubit game register.
pub const DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GameInput {
    row: u8,
    col: u8,
}

impl GameInput {
    pub fn new(row: u8, col: u8) -> Result<Self> {
        if !(1..=3).contains(&row) || !(1..=3).contains(&col) {
            return Err(Error::InvalidInput { row, col });
        }
        Ok(Self { row, col })
    }

    pub fn row(self) -> u8 {
        self.row
    }

    pub fn col(self) -> u8 {
        self.col
    }

    /// Position in the lexicographic order (1,1), (1,2), …, (3,3).
    pub fn index(self) -> usize {
        3 * (self.row as usize - 1) + (self.col as usize - 1)
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < 9, "input index {index} out of range");
        Self {
            row: (index / 3) as u8 + 1,
            col: (index % 3) as u8 + 1,
        }
    }

    /// All nine inputs in lexicographic order.
    pub fn all() -> impl Iterator<Item = GameInput> {
        (0..9).map(Self::from_index)
    }
}

impl fmt::Display for GameInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Player unitaries: `alice[i-1]` acts on qubits 1–2, `bob[j-1]` on qubits 3–4.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerOps {
    pub alice: [ComplexMatrix; 3],
    pub bob: [ComplexMatrix; 3],
}

impl PlayerOps {
    /// `A_i ⊗ B_j` for the given input.
    pub fn joint(&self, input: GameInput) -> ComplexMatrix {
        self.alice[input.row as usize - 1].kron(&self.bob[input.col as usize - 1])
    }
}

/// ½(|0011⟩ − |1100⟩ − |0110⟩ + |1001⟩), Alice holding the first two qubits.
pub fn initial_state() -> StateVector {
    let mut amps = vec![ZERO; DIM];
    amps[0b0011] = Complex64::new(0.5, 0.0);
    amps[0b1100] = Complex64::new(-0.5, 0.0);
    amps[0b0110] = Complex64::new(-0.5, 0.0);
    amps[0b1001] = Complex64::new(0.5, 0.0);
    StateVector::new(amps).expect("finite amplitudes")
}

fn matrix4(scale: f64, entries: [[Complex64; 4]; 4]) -> ComplexMatrix {
    let flat = entries
        .iter()
        .flatten()
        .map(|z| z * scale)
        .collect::<Vec<_>>();
    ComplexMatrix::new(4, 4, flat).expect("4x4 literal")
}

pub fn player_unitaries() -> PlayerOps {
    const O: Complex64 = ONE;
    const N: Complex64 = Complex64::new(-1.0, 0.0);
    const Z: Complex64 = ZERO;
    const P: Complex64 = Complex64::new(0.0, 1.0);
    const M: Complex64 = Complex64::new(0.0, -1.0);
    let r = FRAC_1_SQRT_2;

    let a1 = matrix4(r, [[P, Z, Z, O], [Z, M, O, Z], [Z, P, O, Z], [O, Z, Z, P]]);
    let a2 = matrix4(
        0.5,
        [[P, O, O, P], [M, O, N, P], [P, O, N, M], [M, O, O, M]],
    );
    let a3 = matrix4(
        0.5,
        [[N, N, N, O], [O, O, N, O], [O, N, O, O], [O, N, N, N]],
    );
    let b1 = matrix4(
        0.5,
        [[P, M, O, O], [M, M, O, N], [O, O, M, P], [M, P, O, O]],
    );
    let b2 = matrix4(
        0.5,
        [[N, P, O, P], [O, P, O, M], [O, M, O, P], [N, M, O, M]],
    );
    let b3 = matrix4(r, [[O, Z, Z, O], [N, Z, Z, O], [Z, O, O, Z], [Z, O, N, Z]]);

    PlayerOps {
        alice: [a1, a2, a3],
        bob: [b1, b2, b3],
    }
}

/// Complement mask applied to Alice's measured bits, per row input.
const ALICE_MASK: [(u8, u8); 3] = [(1, 1), (1, 0), (0, 1)];

/// Alice's even-parity row for the given row input and measured bits.
pub fn alice_row(row: u8, a1: u8, a2: u8) -> [u8; 3] {
    let (x, y) = ALICE_MASK[row as usize - 1];
    let (r1, r2) = (a1 ^ x, a2 ^ y);
    [r1, r2, r1 ^ r2]
}

/// Bob's odd-parity column from his measured bits.
pub fn bob_col(b1: u8, b2: u8) -> [u8; 3] {
    [b1, b2, 1 ^ b1 ^ b2]
}

/// True iff Alice's entry in column `j` equals Bob's entry in row `i`.
pub fn wins(input: GameInput, a1: u8, a2: u8, b1: u8, b2: u8) -> bool {
    let row = alice_row(input.row, a1 & 1, a2 & 1);
    let col = bob_col(b1 & 1, b2 & 1);
    row[input.col as usize - 1] == col[input.row as usize - 1]
}

/// Splits a basis index into (a1, a2, b1, b2).
pub fn outcome_bits(index: usize) -> (u8, u8, u8, u8) {
    (
        ((index >> 3) & 1) as u8,
        ((index >> 2) & 1) as u8,
        ((index >> 1) & 1) as u8,
        (index & 1) as u8,
    )
}

pub fn winning_outcomes(input: GameInput) -> Vec<usize> {
    (0..DIM)
        .filter(|&k| {
            let (a1, a2, b1, b2) = outcome_bits(k);
            wins(input, a1, a2, b1, b2)
        })
        .collect()
}

/// Σ_m |ξ_m⟩⟨ξ_m| over winning computational basis states.
pub fn success_projector(input: GameInput) -> ComplexMatrix {
    static CACHE: OnceLock<Vec<ComplexMatrix>> = OnceLock::new();
    CACHE.get_or_init(|| {
        GameInput::all()
            .map(|inp| projector(&winning_outcomes(inp), DIM).expect("indices < 16"))
            .collect()
    })[input.index()]
    .clone()
}

/// Best average win rate of any deterministic classical strategy pair.
pub fn classical_best() -> Ratio<u32> {
    let (best, _) = classical_search();
    best
}

/// Exhaustive search over all 4³ × 4³ strategy pairs. Returns the best rate and
/// the number of pairs attaining it.
pub fn classical_search() -> (Ratio<u32>, usize) {
    let mut best = 0u32;
    let mut count = 0usize;
    for_each_classical_pair(|wins| match wins.cmp(&best) {
        std::cmp::Ordering::Greater => {
            best = wins;
            count = 1;
        }
        std::cmp::Ordering::Equal => count += 1,
        std::cmp::Ordering::Less => {}
    });
    (Ratio::new(best, 9), count)
}

/// Calls `f` with the number of inputs (out of 9) each strategy pair wins.
pub fn for_each_classical_pair(mut f: impl FnMut(u32)) {
    let even_rows: Vec<[u8; 3]> = (0..4u8)
        .map(|k| [k >> 1, k & 1, (k >> 1) ^ (k & 1)])
        .collect();
    let odd_cols: Vec<[u8; 3]> = (0..4u8)
        .map(|k| [k >> 1, k & 1, 1 ^ (k >> 1) ^ (k & 1)])
        .collect();
    for alice in 0..64usize {
        let rows = [
            even_rows[alice & 3],
            even_rows[(alice >> 2) & 3],
            even_rows[alice >> 4],
        ];
        for bob in 0..64usize {
            let cols = [
                odd_cols[bob & 3],
                odd_cols[(bob >> 2) & 3],
                odd_cols[bob >> 4],
            ];
            let mut won = 0;
            for i in 0..3 {
                for j in 0..3 {
                    if rows[i][j] == cols[j][i] {
                        won += 1;
                    }
                }
            }
            f(won);
        }
    }
}
