//! Identifying a channel family and its parameters from game statistics.
//!
//! A [`Fingerprint`] is the vector of nine per-input success probabilities.
//! [`classify`] fits (α, μ) for every family against the closed forms by a
//! coarse grid search followed by coordinate descent, and ranks the families
//! by fit quality.
//!
//! Fingerprints do not always pin the parameters down. The flip families are
//! symmetric under α ↔ 1 − α, the depolarizing family collapses to one number
//! per input so (α, μ) only lie on a curve, and at α = 0 every family gives
//! the all-ones vector. Such cases are reported as degenerate: either another
//! family fits equally well (`kind_tie`) or a distinct (α, μ) fits equally
//! well (`alternatives`).

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::channels::{ChannelKind, ChannelSpec};
use crate::closedform::cf_fingerprint;
use crate::error::{Error, Result};
use crate::evaluate::success_probabilities;
use crate::game::GameInput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    ClosedForm,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    values: [f64; 9],
    std_errors: Option<[f64; 9]>,
}

impl Fingerprint {
    pub fn new(values: [f64; 9]) -> Result<Self> {
        for (k, v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::InvalidFingerprint(format!(
                    "entry {} = {v} outside [0, 1]",
                    GameInput::from_index(k)
                )));
            }
        }
        Ok(Self {
            values,
            std_errors: None,
        })
    }

    pub fn with_errors(values: [f64; 9], std_errors: [f64; 9]) -> Result<Self> {
        let mut fp = Self::new(values)?;
        if let Some(e) = std_errors.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(Error::InvalidFingerprint(format!(
                "standard error {e} must be finite and nonnegative"
            )));
        }
        fp.std_errors = Some(std_errors);
        Ok(fp)
    }

    /// Empirical fingerprint from win counts out of `n` plays per input.
    ///
    /// Standard errors are `√(max(p̂(1−p̂), 1/(4n)) / n)`; the floor keeps
    /// p̂ ∈ {0, 1} from claiming zero uncertainty.
    pub fn from_counts(counts: &[u64; 9], n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::NoPlays);
        }
        if let Some(&count) = counts.iter().find(|&&c| c > n) {
            return Err(Error::CountExceedsPlays { count, n });
        }
        let nf = n as f64;
        let values = counts.map(|c| c as f64 / nf);
        let errors = values.map(|p| ((p * (1.0 - p)).max(0.25 / nf) / nf).sqrt());
        Self::with_errors(values, errors)
    }

    pub fn values(&self) -> &[f64; 9] {
        &self.values
    }

    pub fn std_errors(&self) -> Option<&[f64; 9]> {
        self.std_errors.as_ref()
    }

    pub fn get(&self, input: GameInput) -> f64 {
        self.values[input.index()]
    }

    fn weights(&self) -> [f64; 9] {
        match &self.std_errors {
            None => [1.0; 9],
            Some(e) => e.map(|s| 1.0 / (s * s).max(1e-18)),
        }
    }
}

pub fn fingerprint(spec: &ChannelSpec, source: Source) -> Result<Fingerprint> {
    let values = match source {
        Source::ClosedForm => cf_fingerprint(spec.kind, spec.alpha, spec.mu),
        Source::Numeric => success_probabilities(spec)?,
    };
    Fingerprint::new(values)
}

/// The input whose success probability the family never changes, if any.
pub fn invariant_input(kind: ChannelKind) -> Option<GameInput> {
    let (r, c) = match kind {
        ChannelKind::PhaseFlip | ChannelKind::PhaseDamping => (1, 3),
        ChannelKind::BitFlip => (2, 3),
        ChannelKind::BitPhaseFlip => (3, 3),
        ChannelKind::Depolarizing | ChannelKind::AmplitudeDamping => return None,
    };
    Some(GameInput::new(r, c).expect("static input"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub kind: ChannelKind,
    pub alpha: f64,
    pub mu: f64,
    /// Sum of squared deviations from the closed forms at (alpha, mu).
    pub residual: f64,
    /// The minimised objective; equals `residual` unless standard errors
    /// were supplied, in which case deviations are inverse-variance weighted.
    pub objective: f64,
    /// 1-based position in the ranked list.
    pub rank: usize,
    /// Another family fits within the tie threshold.
    pub kind_tie: bool,
    /// Other (alpha, mu) pairs fitting within the tie threshold.
    pub alternatives: Vec<(f64, f64)>,
}

impl Estimate {
    pub fn degenerate(&self) -> bool {
        self.kind_tie || !self.alternatives.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Coarse grid has `coarse_steps + 1` points per axis.
    pub coarse_steps: usize,
    /// Coordinate descent stops once its step falls below this.
    pub min_step: f64,
    /// Objectives closer than this are ties.
    pub tie: f64,
    /// Parameter points closer than this are the same solution.
    pub distinct: f64,
    /// Most coarse-grid local minima refined per family.
    pub max_seeds: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            coarse_steps: 100,
            min_step: 1e-9,
            tie: 1e-12,
            distinct: 1e-3,
            max_seeds: 12,
        }
    }
}

pub fn classify(fp: &Fingerprint) -> Vec<Estimate> {
    classify_with(fp, &ClassifyOptions::default())
}

pub fn classify_with(fp: &Fingerprint, opts: &ClassifyOptions) -> Vec<Estimate> {
    use rayon::prelude::*;

    let mut fits: Vec<Estimate> = ChannelKind::ALL
        .par_iter()
        .map(|&kind| fit_kind(kind, fp, opts))
        .collect();

    // Sort by objective, then group near-equal objectives and order each group
    // by the fixed family order.
    fits.sort_by(|a, b| {
        a.objective
            .total_cmp(&b.objective)
            .then(a.kind.cmp(&b.kind))
    });
    let mut ranked = Vec::with_capacity(fits.len());
    let mut rest = fits.as_slice();
    while let Some(head) = rest.first() {
        let len = rest
            .iter()
            .take_while(|e| e.objective - head.objective < opts.tie)
            .count();
        let mut group = rest[..len].to_vec();
        group.sort_by_key(|e| e.kind.order());
        let tied = group.len() > 1;
        for mut e in group {
            e.kind_tie = tied;
            ranked.push(e);
        }
        rest = &rest[len..];
    }
    for (k, e) in ranked.iter_mut().enumerate() {
        e.rank = k + 1;
    }
    ranked
}

/// Classifies an empirical fingerprint from `counts[k]` wins out of `n` plays
/// on input `k`.
pub fn estimate_from_samples(counts: &[u64; 9], n: u64) -> Result<Vec<Estimate>> {
    Ok(classify(&Fingerprint::from_counts(counts, n)?))
}

struct Objective<'a> {
    kind: ChannelKind,
    target: &'a [f64; 9],
    weights: [f64; 9],
}

impl Objective<'_> {
    fn at_model(&self, model: &[f64; 9]) -> f64 {
        model
            .iter()
            .zip(self.target)
            .zip(&self.weights)
            .map(|((m, t), w)| w * (m - t) * (m - t))
            .sum()
    }

    fn eval(&self, alpha: f64, mu: f64) -> f64 {
        self.at_model(&cf_fingerprint(self.kind, alpha, mu))
    }

    fn unweighted(&self, alpha: f64, mu: f64) -> f64 {
        cf_fingerprint(self.kind, alpha, mu)
            .iter()
            .zip(self.target)
            .map(|(m, t)| (m - t) * (m - t))
            .sum()
    }
}

/// Closed-form fingerprints on the default coarse grid, one table per family.
fn atlas(steps: usize) -> Option<&'static [Vec<[f64; 9]>]> {
    static ATLAS: OnceLock<Vec<Vec<[f64; 9]>>> = OnceLock::new();
    if steps != ClassifyOptions::default().coarse_steps {
        return None;
    }
    Some(ATLAS.get_or_init(|| {
        ChannelKind::ALL
            .iter()
            .map(|&kind| coarse_table(kind, steps))
            .collect()
    }))
}

fn coarse_table(kind: ChannelKind, steps: usize) -> Vec<[f64; 9]> {
    let s = steps as f64;
    let mut out = Vec::with_capacity((steps + 1) * (steps + 1));
    for i in 0..=steps {
        for j in 0..=steps {
            out.push(cf_fingerprint(kind, i as f64 / s, j as f64 / s));
        }
    }
    out
}

fn fit_kind(kind: ChannelKind, fp: &Fingerprint, opts: &ClassifyOptions) -> Estimate {
    let obj = Objective {
        kind,
        target: fp.values(),
        weights: fp.weights(),
    };
    let steps = opts.coarse_steps.max(1);
    let side = steps + 1;
    let h = 1.0 / steps as f64;

    let owned;
    let table: &[[f64; 9]] = match atlas(steps) {
        Some(all) => &all[kind.order()],
        None => {
            owned = coarse_table(kind, steps);
            &owned
        }
    };
    let coarse: Vec<f64> = table.iter().map(|m| obj.at_model(m)).collect();

    // Local minima over the 8-neighbourhood, best first.
    let mut minima: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..side {
        for j in 0..side {
            let v = coarse[i * side + j];
            let mut is_min = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0)
                        || ni < 0
                        || nj < 0
                        || ni >= side as i64
                        || nj >= side as i64
                    {
                        continue;
                    }
                    if coarse[ni as usize * side + nj as usize] < v {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                minima.push((v, i, j));
            }
        }
    }
    minima.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut seeds: Vec<(usize, usize)> = Vec::new();
    for &(_, i, j) in &minima {
        if seeds.len() >= opts.max_seeds {
            break;
        }
        // Skip plateau neighbours of an accepted seed.
        if seeds
            .iter()
            .all(|&(si, sj)| si.abs_diff(i).max(sj.abs_diff(j)) > 2)
        {
            seeds.push((i, j));
        }
    }

    let mut solutions: Vec<(f64, f64, f64)> = seeds
        .iter()
        .map(|&(i, j)| refine(&obj, i as f64 * h, j as f64 * h, h, opts.min_step))
        .collect();
    sort_solutions(&mut solutions);
    let (alpha, mu, objective) = solutions[0];

    // Where the fit is locally flat, walk along the flat direction and
    // re-minimise to expose other equally good parameter points.
    for dir in flat_directions(&obj, alpha, mu) {
        for t in [0.05, -0.05] {
            let a0 = (alpha + t * dir.0).clamp(0.0, 1.0);
            let m0 = (mu + t * dir.1).clamp(0.0, 1.0);
            solutions.push(refine(&obj, a0, m0, h, opts.min_step));
        }
    }

    let mut alternatives: Vec<(f64, f64)> = Vec::new();
    for &(a, m, f) in &solutions[1..] {
        if f - objective >= opts.tie {
            continue;
        }
        let far = |p: &(f64, f64)| (p.0 - a).abs().max((p.1 - m).abs()) > opts.distinct;
        if far(&(alpha, mu)) && alternatives.iter().all(far) {
            alternatives.push((a, m));
        }
    }
    alternatives.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));

    Estimate {
        kind,
        alpha,
        mu,
        residual: obj.unweighted(alpha, mu),
        objective,
        rank: 0,
        kind_tie: false,
        alternatives,
    }
}

fn sort_solutions(s: &mut [(f64, f64, f64)]) {
    s.sort_by(|x, y| {
        x.2.total_cmp(&y.2)
            .then(x.0.total_cmp(&y.0))
            .then(x.1.total_cmp(&y.1))
    });
}

/// Coordinate descent with a halving step, accelerated by pattern moves
/// (Hooke-Jeeves) so that curved valleys are followed quickly.
fn refine(obj: &Objective, alpha: f64, mu: f64, step: f64, min_step: f64) -> (f64, f64, f64) {
    let mut base = (alpha, mu, obj.eval(alpha, mu));
    let mut step = step;
    let mut budget = 100_000usize;
    while step >= min_step && budget > 0 {
        let next = explore(obj, base, step, &mut budget);
        if next.2 < base.2 {
            let mut prev = base;
            let mut cur = next;
            while budget > 0 {
                let pa = (2.0 * cur.0 - prev.0).clamp(0.0, 1.0);
                let pm = (2.0 * cur.1 - prev.1).clamp(0.0, 1.0);
                budget = budget.saturating_sub(1);
                let trial = explore(obj, (pa, pm, obj.eval(pa, pm)), step, &mut budget);
                if trial.2 < cur.2 {
                    prev = cur;
                    cur = trial;
                } else {
                    break;
                }
            }
            base = cur;
        } else {
            step *= 0.5;
        }
    }
    polish(obj, base)
}

/// Damped Gauss-Newton iterations on the residual vector. Pattern search
/// crawls where the objective is flatter than quadratic; this finishes the
/// descent there.
fn polish(obj: &Objective, start: (f64, f64, f64)) -> (f64, f64, f64) {
    let sw = obj.weights.map(f64::sqrt);
    let resid = |a: f64, m: f64| -> [f64; 9] {
        let model = cf_fingerprint(obj.kind, a, m);
        std::array::from_fn(|k| sw[k] * (model[k] - obj.target[k]))
    };
    let (mut a, mut m, mut f) = start;
    let mut lambda = 1e-3;
    for _ in 0..100 {
        if f == 0.0 {
            break;
        }
        let r = resid(a, m);
        let (ja, jm) = (
            jacobian_column(&resid, a, m, true),
            jacobian_column(&resid, a, m, false),
        );
        let (mut saa, mut sam, mut smm, mut ga, mut gm) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for k in 0..9 {
            saa += ja[k] * ja[k];
            sam += ja[k] * jm[k];
            smm += jm[k] * jm[k];
            ga += ja[k] * r[k];
            gm += jm[k] * r[k];
        }
        if !(saa + smm).is_finite() {
            break;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let (daa, dmm) = (saa * (1.0 + lambda) + 1e-30, smm * (1.0 + lambda) + 1e-30);
            let det = daa * dmm - sam * sam;
            let da = -(dmm * ga - sam * gm) / det;
            let dm = -(daa * gm - sam * ga) / det;
            let (na, nm) = ((a + da).clamp(0.0, 1.0), (m + dm).clamp(0.0, 1.0));
            let nf = obj.eval(na, nm);
            if nf < f {
                (a, m, f) = (na, nm, nf);
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (a, m, f)
}

fn jacobian_column(
    resid: &impl Fn(f64, f64) -> [f64; 9],
    a: f64,
    m: f64,
    along_alpha: bool,
) -> [f64; 9] {
    let h = 1e-7;
    let x = if along_alpha { a } else { m };
    let (lo, hi) = ((x - h).max(0.0), (x + h).min(1.0));
    let (rl, rh) = if along_alpha {
        (resid(lo, m), resid(hi, m))
    } else {
        (resid(a, lo), resid(a, hi))
    };
    std::array::from_fn(|k| (rh[k] - rl[k]) / (hi - lo))
}

/// One sweep over both coordinates, keeping each improving move.
fn explore(
    obj: &Objective,
    start: (f64, f64, f64),
    step: f64,
    budget: &mut usize,
) -> (f64, f64, f64) {
    let (mut a, mut m, mut f) = start;
    for axis in 0..2 {
        for sign in [1.0, -1.0] {
            let (na, nm) = if axis == 0 {
                ((a + sign * step).clamp(0.0, 1.0), m)
            } else {
                (a, (m + sign * step).clamp(0.0, 1.0))
            };
            if na == a && nm == m {
                continue;
            }
            *budget = budget.saturating_sub(1);
            let nf = obj.eval(na, nm);
            if nf < f {
                (a, m, f) = (na, nm, nf);
                break;
            }
        }
    }
    (a, m, f)
}

/// Unit directions in which the fitted fingerprint is (nearly) insensitive
/// to the parameters, from the eigen-decomposition of JᵀWJ.
fn flat_directions(obj: &Objective, alpha: f64, mu: f64) -> Vec<(f64, f64)> {
    let h = 1e-6;
    let partial = |da: f64, dm: f64| -> [f64; 9] {
        let (a0, a1) = ((alpha - da).max(0.0), (alpha + da).min(1.0));
        let (m0, m1) = ((mu - dm).max(0.0), (mu + dm).min(1.0));
        let lo = cf_fingerprint(obj.kind, a0, m0);
        let hi = cf_fingerprint(obj.kind, a1, m1);
        let span = (a1 - a0) + (m1 - m0);
        std::array::from_fn(|k| (hi[k] - lo[k]) / span)
    };
    let ja = partial(h, 0.0);
    let jm = partial(0.0, h);
    let (mut saa, mut sam, mut smm) = (0.0, 0.0, 0.0);
    for k in 0..9 {
        let w = obj.weights[k];
        saa += w * ja[k] * ja[k];
        sam += w * ja[k] * jm[k];
        smm += w * jm[k] * jm[k];
    }
    if !(saa.is_finite() && sam.is_finite() && smm.is_finite()) {
        return Vec::new();
    }
    let tr = saa + smm;
    let det = saa * smm - sam * sam;
    let disc = ((tr * tr / 4.0) - det).max(0.0).sqrt();
    let (big, small) = (tr / 2.0 + disc, tr / 2.0 - disc);
    if big <= 0.0 {
        return vec![(1.0, 0.0), (0.0, 1.0)];
    }
    if small > 1e-6 * big {
        return Vec::new();
    }
    // Eigenvector for the small eigenvalue.
    let v = if sam.abs() > 1e-300 {
        (small - smm, sam)
    } else if saa <= smm {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let n = (v.0 * v.0 + v.1 * v.1).sqrt();
    vec![(v.0 / n, v.1 / n)]
}
