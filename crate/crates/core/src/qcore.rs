//! Dense complex linear algebra sized for the four-qubit game register.
//!
//! Everything here is small (at most 16x16 for states, 256 Kraus operators per
//! channel), so matrices are plain row-major `Vec<Complex64>` and products are
//! straightforward triple loops.
//!
//! Basis convention for the game register: index = 8·a1 + 4·a2 + 2·b1 + b2,
//! where (a1, a2) are Alice's qubits and (b1, b2) Bob's. [`ComplexMatrix::kron`]
//! follows the usual convention that the left factor owns the high-order bits.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Numerical tolerances used when validating states and channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Maximum entry of `Σ K†K − I` accepted by [`apply_kraus`].
    pub completeness: f64,
    pub hermitian: f64,
    pub trace: f64,
    /// Smallest eigenvalue accepted is `-psd_floor`.
    pub psd_floor: f64,
    /// Largest imaginary part tolerated in a trace that should be real.
    pub imaginary: f64,
    pub normalization: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            completeness: 1e-9,
            hermitian: 1e-10,
            trace: 1e-10,
            psd_floor: 1e-9,
            imaginary: 1e-10,
            normalization: 1e-12,
        }
    }
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::BadShape {
                rows,
                cols,
                len: entries.len(),
            });
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// Builds a matrix from real entries given row by row.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for k in 0..dim {
            m.entries[k * dim + k] = ONE;
        }
        m
    }

    pub fn diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (k, &d) in diag.iter().enumerate() {
            m.entries[k * n + k] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.cols + col]
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Kronecker product; the result has `self` on the high-order index.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut entries = vec![ZERO; rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    let row = i * other.rows + k;
                    for l in 0..other.cols {
                        entries[row * cols + j * other.cols + l] = a * other.get(k, l);
                    }
                }
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).conj());
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows", self.cols),
                found: format!("{} rows", other.rows),
            });
        }
        let mut entries = vec![ZERO; self.rows * other.cols];
        for i in 0..self.rows {
            let out = &mut entries[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.entries[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.entries[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: other.cols,
            entries,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale_real(-1.0))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|k| self.get(k, k)).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Squared Frobenius norm.
    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entrywise distance to `other`.
    pub fn max_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Largest entry of `A − A†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Largest entry of `A·A† − I`.
    pub fn unitarity_defect(&self) -> f64 {
        match self.matmul(&self.adjoint()) {
            Ok(p) => p
                .max_diff(&Self::identity(self.rows))
                .unwrap_or(f64::INFINITY),
            Err(_) => f64::INFINITY,
        }
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if self.cols != v.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("vector of dimension {}", self.cols),
                found: format!("dimension {}", v.dim()),
            });
        }
        let amps = (0..self.rows)
            .map(|i| {
                self.entries[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v.amps())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Ok(StateVector { amps })
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.rows, self.cols),
                found: format!("{}x{}", other.rows, other.cols),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        Ok(Self { amps })
    }

    pub fn basis(index: usize, dim: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// The outer product |ψ⟩⟨ψ|.
    pub fn outer(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut entries = Vec::with_capacity(n * n);
        for a in &self.amps {
            for b in &self.amps {
                entries.push(a * b.conj());
            }
        }
        ComplexMatrix {
            rows: n,
            cols: n,
            entries,
        }
    }
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite
/// (all within [`Tolerances`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(mat, &Tolerances::default())
    }

    pub fn with_tolerances(mat: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::InvalidDensity(format!(
                "not square: {}x{}",
                mat.rows, mat.cols
            )));
        }
        let herm = mat.hermiticity_defect();
        if herm > tol.hermitian {
            return Err(Error::InvalidDensity(format!(
                "Hermiticity defect {herm:e}"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let min_eig = min_eigenvalue(&mat);
        if min_eig < -tol.psd_floor {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { mat })
    }

    pub fn from_pure(state: &StateVector) -> Result<Self> {
        Self::new(state.outer())
    }

    pub fn dim(&self) -> usize {
        self.mat.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    /// Tr(ρ²).
    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ.
        self.mat.norm_sqr()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.mat.get(k, k).re).collect()
    }

    /// Conjugation `U ρ U†`, validated again on the way out.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Result<Self> {
        let out = u.matmul(&self.mat)?.matmul(&u.adjoint())?;
        Self::new(out)
    }
}

fn min_eigenvalue(mat: &ComplexMatrix) -> f64 {
    let n = mat.rows;
    // Symmetrize so the Hermitian solver sees exactly Hermitian input.
    let m = DMatrix::from_fn(n, n, |i, j| (mat.get(i, j) + mat.get(j, i).conj()) * 0.5);
    m.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// A set of equal-dimension Kraus operators.
///
/// The completeness residual `max |Σ K†K − I|` is computed once at
/// construction; [`apply_kraus`] rejects sets whose residual exceeds the
/// configured tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausSet {
    dim: usize,
    ops: Vec<ComplexMatrix>,
    residual: f64,
}

impl KrausSet {
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let first = ops.first().ok_or(Error::EmptyKrausSet)?;
        let dim = first.rows;
        for op in &ops {
            if op.rows != dim || op.cols != dim {
                return Err(Error::DimensionMismatch {
                    expected: format!("{dim}x{dim}"),
                    found: format!("{}x{}", op.rows, op.cols),
                });
            }
        }
        let residual = completeness_residual(&ops, dim);
        Ok(Self { dim, ops, residual })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// `max |Σ K†K − I|` over all entries.
    pub fn completeness_residual(&self) -> f64 {
        self.residual
    }

    /// Drops operators whose squared Frobenius norm is below `weight`.
    pub fn pruned(self, weight: f64) -> Result<Self> {
        let ops: Vec<_> = self
            .ops
            .into_iter()
            .filter(|k| k.norm_sqr() >= weight)
            .collect();
        Self::new(ops)
    }

    /// All products `A ⊗ B` with A from `self` and B from `other`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let ops = self
            .ops
            .iter()
            .flat_map(|a| other.ops.iter().map(move |b| a.kron(b)))
            .collect();
        Self::new(ops)
    }
}

fn completeness_residual(ops: &[ComplexMatrix], dim: usize) -> f64 {
    let mut sum = vec![ZERO; dim * dim];
    for k in ops {
        // (K†K)_ij = Σ_r conj(K_ri) K_rj
        for r in 0..dim {
            let row = &k.entries[r * dim..(r + 1) * dim];
            for (i, a) in row.iter().enumerate() {
                if *a == ZERO {
                    continue;
                }
                let a = a.conj();
                for (j, b) in row.iter().enumerate() {
                    sum[i * dim + j] += a * b;
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((sum[i * dim + j] - target).norm());
        }
    }
    worst
}

/// Operator-sum evolution `Σ_k K_k ρ K_k†`.
pub fn apply_kraus(ks: &KrausSet, rho: &DensityMatrix) -> Result<DensityMatrix> {
    apply_kraus_with(ks, rho, &Tolerances::default())
}

pub fn apply_kraus_with(
    ks: &KrausSet,
    rho: &DensityMatrix,
    tol: &Tolerances,
) -> Result<DensityMatrix> {
    let n = rho.dim();
    if ks.dim != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n}x{n} Kraus operators"),
            found: format!("{0}x{0}", ks.dim),
        });
    }
    if ks.residual > tol.completeness {
        return Err(Error::Incomplete {
            residual: ks.residual,
            tol: tol.completeness,
        });
    }
    let r = &rho.mat.entries;
    let mut out = vec![ZERO; n * n];
    let mut tmp = vec![ZERO; n * n];
    for k in &ks.ops {
        let k = &k.entries;
        // tmp = K ρ
        tmp.iter_mut().for_each(|z| *z = ZERO);
        for i in 0..n {
            for m in 0..n {
                let a = k[i * n + m];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    tmp[i * n + j] += a * r[m * n + j];
                }
            }
        }
        // out += tmp K†, i.e. out_ij += Σ_m tmp_im conj(K_jm)
        for j in 0..n {
            for m in 0..n {
                let b = k[j * n + m];
                if b == ZERO {
                    continue;
                }
                let b = b.conj();
                for i in 0..n {
                    out[i * n + j] += tmp[i * n + m] * b;
                }
            }
        }
    }
    DensityMatrix::with_tolerances(
        ComplexMatrix {
            rows: n,
            cols: n,
            entries: out,
        },
        tol,
    )
}

/// Diagonal projector onto the listed computational basis states.
pub fn projector(states: &[usize], dim: usize) -> Result<ComplexMatrix> {
    let mut p = ComplexMatrix::zeros(dim, dim);
    for &s in states {
        if s >= dim {
            return Err(Error::IndexOutOfRange { index: s, dim });
        }
        p.entries[s * dim + s] = ONE;
    }
    Ok(p)
}

/// `Re Tr(ρ P)`. Diagonal 0/1 matrices (as built by [`projector`]) have the
/// result clamped to [0, 1].
pub fn expectation(p: &ComplexMatrix, rho: &DensityMatrix) -> Result<f64> {
    expectation_with(p, rho, &Tolerances::default())
}

pub fn expectation_with(p: &ComplexMatrix, rho: &DensityMatrix, tol: &Tolerances) -> Result<f64> {
    let n = rho.dim();
    if p.rows != n || p.cols != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n}x{n}"),
            found: format!("{}x{}", p.rows, p.cols),
        });
    }
    let mut tr = ZERO;
    for i in 0..n {
        for j in 0..n {
            tr += rho.mat.get(i, j) * p.get(j, i);
        }
    }
    if tr.im.abs() > tol.imaginary {
        return Err(Error::ComplexTrace(tr.im));
    }
    if is_basis_projector(p) {
        Ok(tr.re.clamp(0.0, 1.0))
    } else {
        Ok(tr.re)
    }
}

fn is_basis_projector(p: &ComplexMatrix) -> bool {
    let n = p.rows;
    p.is_square()
        && p.entries.iter().enumerate().all(|(idx, &z)| {
            if idx / n == idx % n {
                z == ZERO || z == ONE
            } else {
                z == ZERO
            }
        })
}

/// The Pauli matrices σ0 = I, σ1 = X, σ2 = Y, σ3 = Z.
pub fn pauli(index: usize) -> ComplexMatrix {
    let e = match index {
        0 => [ONE, ZERO, ZERO, ONE],
        1 => [ZERO, ONE, ONE, ZERO],
        2 => [ZERO, -I, I, ZERO],
        3 => [ONE, ZERO, ZERO, -ONE],
        _ => panic!("Pauli index {index} out of range"),
    };
    ComplexMatrix {
        rows: 2,
        cols: 2,
        entries: e.to_vec(),
    }
}
