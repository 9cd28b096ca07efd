//! Choosing the measurement settings and weight for a given budget.
//!
//! Every candidate `(S, C)` gets its bound `α_S^u` and two white-noise
//! thresholds; the search keeps the candidate that tolerates the most noise.
//! Setting sets related by a z-axis rotation give the same witness up to a
//! local unitary, so only one representative per class needs a bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bound::{alpha_upper_many, GridSpec, GRID_SLACK};
use crate::error::{Error, Result};
use crate::settings::SettingSet;

/// `1 − α/(1 + |S|/C)`, the large-`N` noise threshold, clamped at 0.
///
/// A result of exactly 0 means the witness detects nothing.
pub fn noise_threshold_asymptotic(alpha_u: f64, size: usize, c: f64) -> f64 {
    debug_assert!(c > 0.0);
    let ghz_value = 1.0 + size as f64 / c;
    (1.0 - alpha_u / ghz_value).max(0.0)
}

/// Zero crossing in `p` of `α − (1−p)(1 + |S|/C) − p·2^{1−N}`, clamped at 0.
pub fn noise_threshold_exact(alpha_u: f64, size: usize, c: f64, n_parties: usize) -> f64 {
    debug_assert!(c > 0.0 && n_parties >= 2);
    let ghz_value = 1.0 + size as f64 / c;
    let mixed_value = 2f64.powi(1 - n_parties as i32);
    ((ghz_value - alpha_u) / (ghz_value - mixed_value)).max(0.0)
}

/// Index shifts `j → j + t (mod N)` realized by z-rotations.
///
/// Rotating every party by `πt/N` maps `M_{θ_j}` to `M_{θ_{j+t}}`, with a
/// factor `−1` per factor for each wrap past `π`. The `(−1)^j` weights of the
/// operator are preserved exactly when `t` is even, so the admissible shifts
/// are `{2m mod N}`: all shifts for odd `N`, the even ones for even `N`.
pub fn rotation_shifts(n_parties: usize) -> Vec<usize> {
    let mut shifts: Vec<usize> = (0..n_parties).map(|m| (2 * m) % n_parties).collect();
    shifts.sort_unstable();
    shifts.dedup();
    shifts
}

/// Applies the index shift `j → j + shift (mod N)`.
pub fn shift_settings(settings: &SettingSet, shift: usize) -> SettingSet {
    let n = settings.n_parties();
    SettingSet::new(n, settings.indices().iter().map(|j| (j + shift) % n))
        .expect("a shifted valid set stays valid")
}

/// All distinct members of the rotation class of `settings`, sorted.
pub fn orbit(settings: &SettingSet) -> Vec<SettingSet> {
    let mut members: Vec<SettingSet> = rotation_shifts(settings.n_parties())
        .into_iter()
        .map(|t| shift_settings(settings, t))
        .collect();
    members.sort();
    members.dedup();
    members
}

/// Lexicographically smallest member of the rotation class.
pub fn canonical_form(settings: &SettingSet) -> SettingSet {
    orbit(settings)
        .into_iter()
        .next()
        .expect("orbit contains the set itself")
}

/// How the weight `C` is chosen for each setting set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CMode {
    /// `C = |S|`
    FixedAtSize,
    /// `C ∈ {|S|, |S|+1, …, 2|S|}`
    IntegerScan,
    /// `C = |S|, |S|+step, …` up to and including `2|S|`
    FineScan { step: f64 },
}

impl CMode {
    pub fn weights(&self, size: usize) -> Result<Vec<f64>> {
        let lo = size as f64;
        let hi = 2.0 * lo;
        Ok(match *self {
            CMode::FixedAtSize => vec![lo],
            CMode::IntegerScan => (size..=2 * size).map(|c| c as f64).collect(),
            CMode::FineScan { step } => {
                if !(step.is_finite() && step > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "fine scan step must be positive, got {step}"
                    )));
                }
                let mut out: Vec<f64> = (0..)
                    .map(|i| lo + i as f64 * step)
                    .take_while(|c| *c < hi - 1e-9)
                    .collect();
                out.push(hi);
                out
            }
        })
    }
}

/// Which noise threshold ranks candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    #[default]
    Asymptotic,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub c_mode: CMode,
    pub grid: GridSpec,
    /// Bound only one representative per rotation class.
    pub dedup: bool,
    pub threshold: ThresholdKind,
    /// Candidates within this distance of the best threshold are reported as
    /// ties.
    pub tie_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            c_mode: CMode::IntegerScan,
            grid: GridSpec::default(),
            dedup: true,
            threshold: ThresholdKind::Asymptotic,
            tie_tol: GRID_SLACK,
        }
    }
}

/// One witness `W_S = α_S^u·I − M_S` of the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessCandidate {
    pub n_parties: usize,
    pub settings: SettingSet,
    pub c: f64,
    pub alpha_upper: f64,
    pub p_asymptotic: f64,
    pub p_exact: f64,
    /// False when the bound leaves no room below the GHZ value.
    pub detecting: bool,
}

impl WitnessCandidate {
    pub fn new(settings: SettingSet, c: f64, alpha_upper: f64) -> Self {
        let n = settings.n_parties();
        let size = settings.len();
        let p_asymptotic = noise_threshold_asymptotic(alpha_upper, size, c);
        let p_exact = noise_threshold_exact(alpha_upper, size, c, n);
        Self {
            n_parties: n,
            settings,
            c,
            alpha_upper,
            p_asymptotic,
            p_exact,
            detecting: p_asymptotic > 0.0,
        }
    }

    pub fn threshold(&self, kind: ThresholdKind) -> f64 {
        match kind {
            ThresholdKind::Asymptotic => self.p_asymptotic,
            ThresholdKind::Exact => self.p_exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub budget: usize,
    pub best: WitnessCandidate,
    /// Every candidate within `tie_tol` of the best, in search order.
    pub ties: Vec<WitnessCandidate>,
    /// Setting sets whose bound was computed.
    pub scanned: usize,
    /// Setting sets skipped as rotations of a scanned one.
    pub pruned: usize,
    /// Total `λ^u` evaluations across all candidates.
    pub evaluations: u64,
}

/// All `budget`-element subsets of `{0, …, n−1}` in lexicographic order.
pub fn subsets(n: usize, budget: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if budget == 0 || budget > n {
        return out;
    }
    let mut current: Vec<usize> = (0..budget).collect();
    loop {
        out.push(current.clone());
        // rightmost position that can still advance
        let Some(i) = (0..budget).rev().find(|&i| current[i] < n - budget + i) else {
            break;
        };
        current[i] += 1;
        for j in i + 1..budget {
            current[j] = current[j - 1] + 1;
        }
    }
    out
}

/// Thresholds closer than this are treated as equal when picking the best.
const ROUNDING_TIE: f64 = 1e-12;

/// Every candidate of one budget, before selection.
#[derive(Debug, Clone)]
pub struct BudgetEvaluation {
    /// In search order: `S` lexicographic, then `C` ascending.
    pub candidates: Vec<WitnessCandidate>,
    pub scanned: usize,
    pub pruned: usize,
    pub evaluations: u64,
}

/// Bounds every setting set of size `budget` (one per rotation class when
/// deduplicating) at every weight of the configured mode.
pub fn evaluate_budget(n: usize, budget: usize, config: &SearchConfig) -> Result<BudgetEvaluation> {
    if n < 2 {
        return Err(Error::TooFewParties { n, min: 2 });
    }
    if budget == 0 || budget > n {
        return Err(Error::InvalidArgument(format!(
            "budget must lie in 1..={n}, got {budget}"
        )));
    }
    config.grid.validate()?;
    let weights = config.c_mode.weights(budget)?;

    let all: Vec<SettingSet> = subsets(n, budget)
        .into_iter()
        .map(|idx| SettingSet::new(n, idx))
        .collect::<Result<_>>()?;
    let total = all.len();
    let scanned: Vec<SettingSet> = if config.dedup {
        all.into_iter()
            .filter(|s| canonical_form(s) == *s)
            .collect()
    } else {
        all
    };

    let per_subset: Vec<(Vec<WitnessCandidate>, u64)> = scanned
        .par_iter()
        .map(|s| {
            let bounds = alpha_upper_many(s, &weights, &config.grid)?;
            let evaluations = bounds.iter().map(|b| b.evaluations).sum();
            let candidates = weights
                .iter()
                .zip(bounds)
                .map(|(c, b)| WitnessCandidate::new(s.clone(), *c, b.alpha_upper))
                .collect();
            Ok((candidates, evaluations))
        })
        .collect::<Result<_>>()?;

    Ok(BudgetEvaluation {
        evaluations: per_subset.iter().map(|(_, e)| e).sum(),
        candidates: per_subset.into_iter().flat_map(|(c, _)| c).collect(),
        scanned: scanned.len(),
        pruned: total - scanned.len(),
    })
}

/// Best `(S, C)` with `|S| = budget`.
pub fn search_optimal(n: usize, budget: usize, config: &SearchConfig) -> Result<SearchReport> {
    let eval = evaluate_budget(n, budget, config)?;
    let candidates = eval.candidates;

    // First candidate in search order that reaches the maximum, so values
    // equal up to rounding resolve the same way on every run.
    let kind = config.threshold;
    let top = candidates
        .iter()
        .map(|c| c.threshold(kind))
        .fold(f64::NEG_INFINITY, f64::max);
    let best = candidates
        .iter()
        .find(|c| c.threshold(kind) >= top - ROUNDING_TIE)
        .expect("at least one candidate")
        .clone();
    let cutoff = best.threshold(kind) - config.tie_tol;
    let ties = candidates
        .iter()
        .filter(|c| c.threshold(kind) >= cutoff)
        .cloned()
        .collect();

    Ok(SearchReport {
        budget,
        best,
        ties,
        scanned: eval.scanned,
        pruned: eval.pruned,
        evaluations: eval.evaluations,
    })
}

/// One [`SearchReport`] per budget `1..=n`.
pub fn tradeoff_curve(n: usize, config: &SearchConfig) -> Result<Vec<SearchReport>> {
    if n < 2 {
        return Err(Error::TooFewParties { n, min: 2 });
    }
    (1..=n)
        .map(|budget| search_optimal(n, budget, config))
        .collect()
}
