//! Closed-form success probabilities, per input and averaged over inputs.
//!
//! These polynomials are an independent route to the same numbers the
//! density-matrix simulation produces, and serve as its oracle. Each channel
//! family sorts the nine inputs into at most three classes that share a
//! success function.

use serde::{Deserialize, Serialize};

use crate::channels::{ChannelKind, ChannelSpec, MemoryModel};
use crate::error::Result;
use crate::evaluate::success_probabilities;
use crate::game::GameInput;

/// Values may spill this far outside [0, 1] before clamping.
pub const CLAMP_WINDOW: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InputClass {
    pub kind: ChannelKind,
    /// 0, 1 or 2 in the order the classes are listed for the family.
    pub id: u8,
}

type Members = &'static [(u8, u8)];

const ALL_INPUTS: Members = &[
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 1),
    (2, 2),
    (2, 3),
    (3, 1),
    (3, 2),
    (3, 3),
];
const Z_CLASSES: [Members; 3] = [
    &[(1, 1), (1, 2), (2, 3), (3, 3)],
    &[(1, 3)],
    &[(2, 1), (2, 2), (3, 1), (3, 2)],
];
const X_CLASSES: [Members; 3] = [
    &[(1, 1), (1, 2), (3, 1), (3, 2)],
    &[(2, 3)],
    &[(1, 3), (2, 1), (2, 2), (3, 3)],
];
const Y_CLASSES: [Members; 3] = [
    &[(1, 1), (1, 2), (2, 1), (2, 2)],
    &[(3, 3)],
    &[(1, 3), (2, 3), (3, 1), (3, 2)],
];

/// Class memberships; the second entry is always the single input on which
/// the channel (where applicable) has no effect.
fn class_table(kind: ChannelKind) -> [Members; 3] {
    match kind {
        ChannelKind::Depolarizing => [ALL_INPUTS, &[], &[]],
        ChannelKind::AmplitudeDamping | ChannelKind::PhaseDamping | ChannelKind::PhaseFlip => {
            Z_CLASSES
        }
        ChannelKind::BitFlip => X_CLASSES,
        ChannelKind::BitPhaseFlip => Y_CLASSES,
    }
}

pub fn input_class(kind: ChannelKind, input: GameInput) -> InputClass {
    let key = (input.row(), input.col());
    let id = class_table(kind)
        .iter()
        .position(|members| members.contains(&key))
        .expect("every input belongs to a class") as u8;
    InputClass { kind, id }
}

pub fn class_members(class: InputClass) -> Vec<GameInput> {
    class_table(class.kind)[class.id as usize]
        .iter()
        .map(|&(r, c)| GameInput::new(r, c).expect("static table"))
        .collect()
}

// --- per-input success functions ---------------------------------------

fn depolarizing(a: f64, m: f64) -> f64 {
    let (a2, a3, a4) = (a * a, a * a * a, a * a * a * a);
    let (m2, m3) = (m * m, m * m * m);
    0.5 * (2.0 - 4.0 * a + 3.0 * m * a + m3 * a + 6.0 * a2 - 9.0 * m * a2 + 3.0 * m2 * a2
        - 4.0 * a3
        + 9.0 * m * a3
        - 6.0 * m2 * a3
        + m3 * a3
        + a4
        - 3.0 * m * a4
        + 3.0 * m2 * a4
        - m3 * a4)
}

/// Shared by both damping families on their four-input first class.
fn damping_first(a: f64, m: f64) -> f64 {
    0.25 * (4.0 - 4.0 * a + 3.0 * m * a + 2.0 * a * a - 2.0 * m * a * a)
}

fn amplitude_damping_single(a: f64, m: f64) -> f64 {
    1.0 - 2.0 * a + 2.0 * m * a + 2.0 * a * a - 2.0 * m * a * a
}

fn amplitude_damping_last(a: f64, m: f64) -> f64 {
    0.5 * (2.0 - m + m * (1.0 - a).sqrt() - 3.0 * a + 3.0 * m * a + 2.0 * a * a - 2.0 * m * a * a)
}

fn phase_damping_last(a: f64, m: f64) -> f64 {
    0.5 * (2.0 - m + m * (1.0 - a).sqrt() - a + m * a)
}

/// Flip channels, inputs whose failure depends on the parity of all four qubits.
fn flip_four(a: f64, m: f64) -> f64 {
    let (a2, a3, a4) = (a * a, a * a * a, a * a * a * a);
    let (m2, m3) = (m * m, m * m * m);
    1.0 - 4.0 * a + 6.0 * m * a - 4.0 * m2 * a + 2.0 * m3 * a + 12.0 * a2 + 24.0 * m2 * a4
        - 30.0 * m * a2
        + 28.0 * m2 * a2
        - 10.0 * m3 * a2
        - 16.0 * a3
        + 48.0 * m * a3
        - 48.0 * m2 * a3
        + 16.0 * m3 * a3
        + 8.0 * a4
        - 24.0 * m * a4
        - 8.0 * m3 * a4
}

/// Flip channels, inputs whose failure depends on two qubits.
fn flip_two(a: f64, m: f64) -> f64 {
    1.0 - 2.0 * a + 2.0 * m * m * a + 2.0 * a * a - 2.0 * m * m * a * a
}

fn clamp(p: f64) -> f64 {
    debug_assert!(
        (-CLAMP_WINDOW..=1.0 + CLAMP_WINDOW).contains(&p),
        "closed form left [0,1]: {p}"
    );
    p.clamp(0.0, 1.0)
}

/// Unclamped value of the closed form; exposed for range checks.
pub fn cf_success_raw(kind: ChannelKind, input: GameInput, alpha: f64, mu: f64) -> f64 {
    let class = input_class(kind, input).id;
    match (kind, class) {
        (ChannelKind::Depolarizing, _) => depolarizing(alpha, mu),
        (ChannelKind::AmplitudeDamping | ChannelKind::PhaseDamping, 0) => damping_first(alpha, mu),
        (ChannelKind::AmplitudeDamping, 1) => amplitude_damping_single(alpha, mu),
        (ChannelKind::AmplitudeDamping, _) => amplitude_damping_last(alpha, mu),
        (ChannelKind::PhaseDamping, 1) => 1.0,
        (ChannelKind::PhaseDamping, _) => phase_damping_last(alpha, mu),
        // Phase flip lists the four-qubit class first; bit and bit-phase flip last.
        (ChannelKind::PhaseFlip, 0) => flip_four(alpha, mu),
        (ChannelKind::PhaseFlip, 2) => flip_two(alpha, mu),
        (_, 0) => flip_two(alpha, mu),
        (_, 2) => flip_four(alpha, mu),
        (_, _) => 1.0,
    }
}

pub fn cf_success(kind: ChannelKind, input: GameInput, alpha: f64, mu: f64) -> f64 {
    clamp(cf_success_raw(kind, input, alpha, mu))
}

/// All nine closed-form success probabilities in input order.
pub fn cf_fingerprint(kind: ChannelKind, alpha: f64, mu: f64) -> [f64; 9] {
    std::array::from_fn(|k| cf_success(kind, GameInput::from_index(k), alpha, mu))
}

/// Mean success probability, transcribed independently of the per-input forms.
pub fn cf_mean(kind: ChannelKind, alpha: f64, mu: f64) -> f64 {
    let (a, m) = (alpha, mu);
    let (a2, a3, a4) = (a * a, a * a * a, a * a * a * a);
    let (m2, m3) = (m * m, m * m * m);
    let root = (1.0 - a).sqrt();
    let v = match kind {
        ChannelKind::Depolarizing => depolarizing(a, m),
        ChannelKind::AmplitudeDamping => {
            (9.0 - 2.0 * m + 2.0 * m * root - 12.0 * a + 11.0 * m * a + 8.0 * a2 - 8.0 * m * a2)
                / 9.0
        }
        ChannelKind::PhaseDamping => {
            (9.0 - 2.0 * m + 2.0 * m * root - 6.0 * a + 5.0 * m * a + 2.0 * a2 - 2.0 * m * a2) / 9.0
        }
        ChannelKind::PhaseFlip | ChannelKind::BitFlip | ChannelKind::BitPhaseFlip => {
            (9.0 - 24.0 * a + 24.0 * m * a - 8.0 * m2 * a + 8.0 * m3 * a + 56.0 * a2
                - 120.0 * m * a2
                + 104.0 * m2 * a2
                - 40.0 * m3 * a2
                - 64.0 * a3
                + 192.0 * m * a3
                - 192.0 * m2 * a3
                + 64.0 * m3 * a3
                + 32.0 * a4
                - 96.0 * m * a4
                + 96.0 * m2 * a4
                - 32.0 * m3 * a4)
                / 9.0
        }
    };
    clamp(v)
}

/// One numeric-vs-closed-form comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub alpha: f64,
    pub mu: f64,
    pub input: GameInput,
    pub numeric: f64,
    pub closed_form: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub kind: ChannelKind,
    pub model: MemoryModel,
    pub tol: f64,
    pub points: usize,
    pub max_deviation: f64,
    /// The comparison attaining `max_deviation`.
    pub worst: Option<Deviation>,
    /// Every comparison exceeding `tol`, in grid order.
    pub failures: Vec<Deviation>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Inputs that fail at least once, sorted.
    pub fn failing_inputs(&self) -> Vec<GameInput> {
        let mut v: Vec<_> = self.failures.iter().map(|d| d.input).collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Compares the simulated success probabilities with the closed forms on
/// every grid point and input.
pub fn verify(
    kind: ChannelKind,
    grid: &[(f64, f64)],
    tol: f64,
    model: MemoryModel,
) -> Result<VerifyReport> {
    use rayon::prelude::*;

    let numeric: Vec<[f64; 9]> = grid
        .par_iter()
        .map(|&(a, m)| success_probabilities(&ChannelSpec::with_model(kind, a, m, model)?))
        .collect::<Result<_>>()?;

    let mut report = VerifyReport {
        kind,
        model,
        tol,
        points: grid.len(),
        max_deviation: 0.0,
        worst: None,
        failures: Vec::new(),
    };
    for (&(alpha, mu), probs) in grid.iter().zip(&numeric) {
        for input in GameInput::all() {
            let numeric = probs[input.index()];
            let closed_form = cf_success(kind, input, alpha, mu);
            let d = Deviation {
                alpha,
                mu,
                input,
                numeric,
                closed_form,
                deviation: (numeric - closed_form).abs(),
            };
            if report.worst.is_none() || d.deviation > report.max_deviation {
                report.max_deviation = d.deviation;
                report.worst = Some(d);
            }
            if d.deviation > tol {
                report.failures.push(d);
            }
        }
    }
    Ok(report)
}

/// `n`-point uniform grid on [0, 1], computed as `k / (n − 1)`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
    }
}

/// Cartesian product, α outer.
pub fn product_grid(alphas: &[f64], mus: &[f64]) -> Vec<(f64, f64)> {
    alphas
        .iter()
        .flat_map(|&a| mus.iter().map(move |&m| (a, m)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(r: u8, c: u8) -> GameInput {
        GameInput::new(r, c).unwrap()
    }

    #[test]
    fn classes_partition_inputs() {
        for kind in ChannelKind::ALL {
            let mut seen = [0; 9];
            for id in 0..3 {
                for m in class_members(InputClass { kind, id }) {
                    seen[m.index()] += 1;
                    assert_eq!(input_class(kind, m).id, id);
                }
            }
            assert!(seen.iter().all(|&c| c == 1), "{kind}");
        }
        let pd = |id| {
            class_members(InputClass {
                kind: ChannelKind::PhaseDamping,
                id,
            })
        };
        assert_eq!(pd(1), vec![g(1, 3)]);
        assert_eq!(pd(0), vec![g(1, 1), g(1, 2), g(2, 3), g(3, 3)]);
    }

    #[test]
    fn success_examples() {
        for (a, m) in [(0.2, 0.9), (0.7, 0.1)] {
            assert_eq!(cf_success(ChannelKind::BitFlip, g(2, 3), a, m), 1.0);
            assert_eq!(cf_success(ChannelKind::PhaseDamping, g(1, 3), a, m), 1.0);
        }
        for inp in GameInput::all() {
            let v = cf_success(ChannelKind::Depolarizing, inp, 1.0, 1.0);
            assert!((v - 1.0).abs() < 1e-12);
        }
        let v = cf_success(ChannelKind::AmplitudeDamping, g(1, 3), 1.0, 0.0);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_examples() {
        let close = |x: f64, y: f64| (x - y).abs() < 1e-12;
        assert!(close(
            cf_mean(ChannelKind::PhaseDamping, 1.0, 0.0),
            5.0 / 9.0
        ));
        assert!(close(cf_mean(ChannelKind::BitFlip, 0.5, 0.0), 5.0 / 9.0));
        assert!(close(
            cf_mean(ChannelKind::AmplitudeDamping, 1.0, 1.0),
            2.0 / 3.0
        ));
        assert!(close(
            cf_mean(ChannelKind::AmplitudeDamping, 1.0, 0.0),
            5.0 / 9.0
        ));
        assert!(close(
            cf_mean(ChannelKind::PhaseDamping, 1.0, 0.5),
            5.5 / 9.0
        ));
        assert!(close(cf_mean(ChannelKind::Depolarizing, 1.0, 0.0), 0.5));
    }

    #[test]
    fn mean_is_average_of_classes() {
        let grid = unit_grid(11);
        for kind in ChannelKind::ALL {
            for &a in &grid {
                for &m in &grid {
                    let avg = cf_fingerprint(kind, a, m).iter().sum::<f64>() / 9.0;
                    assert!((avg - cf_mean(kind, a, m)).abs() <= 1e-12, "{kind} {a} {m}");
                }
            }
        }
    }

    #[test]
    fn damping_mean_is_affine_in_mu() {
        for kind in [ChannelKind::AmplitudeDamping, ChannelKind::PhaseDamping] {
            for a in unit_grid(11) {
                let second =
                    cf_mean(kind, a, 0.0) - 2.0 * cf_mean(kind, a, 0.5) + cf_mean(kind, a, 1.0);
                assert!(second.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn flip_kinds_share_polynomials_up_to_class_permutation() {
        let grid = unit_grid(6);
        for &a in &grid {
            for &m in &grid {
                let pf = cf_fingerprint(ChannelKind::PhaseFlip, a, m);
                for kind in [ChannelKind::BitFlip, ChannelKind::BitPhaseFlip] {
                    let other = cf_fingerprint(kind, a, m);
                    let mut x = pf.to_vec();
                    let mut y = other.to_vec();
                    x.sort_by(f64::total_cmp);
                    y.sort_by(f64::total_cmp);
                    assert_eq!(x, y);
                }
                assert!((cf_mean(ChannelKind::PhaseFlip, 1.0, m) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn raw_values_stay_in_window() {
        let grid = unit_grid(21);
        for kind in ChannelKind::ALL {
            for &a in &grid {
                for &m in &grid {
                    for inp in GameInput::all() {
                        let v = cf_success_raw(kind, inp, a, m);
                        assert!((-CLAMP_WINDOW..=1.0 + CLAMP_WINDOW).contains(&v));
                    }
                }
            }
        }
    }

    #[test]
    fn unit_grid_is_exact_at_tenths() {
        let g = unit_grid(11);
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[10], 1.0);
        assert_eq!(product_grid(&g, &g).len(), 121);
    }
}
