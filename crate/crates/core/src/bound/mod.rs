//! Upper bound `α_S^u` on the biseparable value of `M_S`.
//!
//! For each partition size `k`, the largest eigenvalue of the operator left
//! after projecting `k` parties is bounded by
//! `λ^u = (x+y)/2 + √((F^u)² + (x−y)²/4)`, which depends only on the moduli
//! of the first and last amplitudes `a_1`, `a_n` of the projected state and
//! their relative phase. The bound is the maximum of `λ^u` over a regular
//! grid in `(k, α, β, φ)` with `|a_1| = cos α`, `|a_n| = sin α cos β`,
//! followed by optional local refinement around the per-`k` maxima.
//!
//! Cost per grid point is `O(|S|)`: the sign vectors worth checking in `F^u`
//! are fixed for each `k` (see [`signs`]).

pub mod signs;

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::settings::SettingSet;
pub use signs::{max_sign_sum, SignPatterns, MAX_SIGN_TERMS};

/// Slack used when comparing bounds computed on different grids.
pub const GRID_SLACK: f64 = 1e-3;

/// Discretization of the `(α, β, φ)` box plus local refinement policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Grid step in radians for all three angles.
    pub step: f64,
    pub refine_rounds: u32,
    /// Factor applied to window and step in each refinement round.
    pub refine_shrink: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            step: 0.01,
            refine_rounds: 2,
            refine_shrink: 0.1,
        }
    }
}

impl GridSpec {
    /// Plain grid, no refinement.
    pub fn coarse(step: f64) -> Self {
        Self {
            step,
            refine_rounds: 0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0 && self.step <= FRAC_PI_2) {
            return Err(Error::InvalidGrid(format!(
                "step must lie in (0, π/2], got {}",
                self.step
            )));
        }
        if !(self.refine_shrink > 0.0 && self.refine_shrink < 1.0) {
            return Err(Error::InvalidGrid(format!(
                "refine_shrink must lie in (0, 1), got {}",
                self.refine_shrink
            )));
        }
        Ok(())
    }
}

/// A point of the reduced search space: moduli of the first and last
/// amplitudes of the projected `k`-party state and their relative phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub a1_abs: f64,
    pub an_abs: f64,
    /// Phase of `conj(a_1)·a_n`, in `[0, π]`.
    pub phase: f64,
    pub k: usize,
    pub x: f64,
    pub y: f64,
}

impl BoundaryPoint {
    pub fn new(a1_abs: f64, an_abs: f64, phase: f64, k: usize) -> Result<Self> {
        let x = a1_abs * a1_abs;
        let y = an_abs * an_abs;
        if !(0.0..=1.0).contains(&a1_abs) || !(0.0..=1.0).contains(&an_abs) || x + y > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "|a_1| = {a1_abs}, |a_n| = {an_abs} violate |a_1|² + |a_n|² ≤ 1"
            )));
        }
        Ok(Self {
            a1_abs,
            an_abs,
            phase,
            k,
            x,
            y,
        })
    }

    /// `|a_1| = cos α`, `|a_n| = sin α cos β`.
    pub fn from_angles(alpha: f64, beta: f64, phase: f64, k: usize) -> Self {
        let a1_abs = alpha.cos();
        let an_abs = alpha.sin() * beta.cos();
        Self {
            a1_abs,
            an_abs,
            phase: phase.rem_euclid(PI),
            k,
            x: a1_abs * a1_abs,
            y: an_abs * an_abs,
        }
    }

    /// Weight left for the middle amplitudes, `1 − x − y`.
    pub fn middle_weight(&self) -> f64 {
        (1.0 - self.x - self.y).max(0.0)
    }
}

/// Outcome of [`alpha_upper`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub alpha_upper: f64,
    pub arg_best: BoundaryPoint,
    pub grid_used: GridSpec,
    /// Number of `λ^u` evaluations, refinement included.
    pub evaluations: u64,
}

/// Envelope `z_j^u ≥ |z_j|` for `z_j = ⟨φ_A|M_{θ_j}^{⊗k}|φ_A⟩`:
/// `2|a_1||a_n|·|cos(φ − kθ_j)| + (1 − |a_1|² − |a_n|²)`.
pub fn z_upper(point: &BoundaryPoint, theta_j: f64) -> f64 {
    let cross =
        2.0 * point.a1_abs * point.an_abs * (point.phase - point.k as f64 * theta_j).cos().abs();
    cross + point.middle_weight()
}

/// `F^u = max_s |Σ_{j∈S} s_j z_j^u e^{i(N−k)θ_j}| / C`.
///
/// The `(−1)^j` factors of the operator are absorbed by the maximization over
/// signs.
pub fn f_upper(z_uppers: &[f64], k: usize, settings: &SettingSet, c: f64) -> Result<f64> {
    if z_uppers.len() != settings.len() {
        return Err(Error::DimensionMismatch {
            expected: settings.len(),
            got: z_uppers.len(),
        });
    }
    if c <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "C must be positive, got {c}"
        )));
    }
    let rest = settings.n_parties().saturating_sub(k) as f64;
    let values: Vec<Complex64> = settings
        .thetas()
        .iter()
        .zip(z_uppers)
        .map(|(theta, z)| Complex64::from_polar(*z, rest * theta))
        .collect();
    Ok(max_sign_sum(&values)? / c)
}

/// `λ^u = (x+y)/2 + √(F² + (x−y)²/4)`.
pub fn lambda_upper(point: &BoundaryPoint, f_u: f64) -> f64 {
    let half_gap = 0.5 * (point.x - point.y);
    0.5 * (point.x + point.y) + (f_u * f_u + half_gap * half_gap).sqrt()
}

/// Upper bound on `α_S` for weight `C`.
pub fn alpha_upper(settings: &SettingSet, c: f64, grid: &GridSpec) -> Result<BoundResult> {
    Ok(alpha_upper_many(settings, &[c], grid)?.remove(0))
}

/// [`alpha_upper`] for several weights at once. The grid pass is shared, since
/// only the final `1/C` scaling of `F^u` depends on `C`.
pub fn alpha_upper_many(
    settings: &SettingSet,
    weights: &[f64],
    grid: &GridSpec,
) -> Result<Vec<BoundResult>> {
    search_bound(settings, weights, grid, PI)
}

fn check_inputs(settings: &SettingSet, weights: &[f64], grid: &GridSpec) -> Result<()> {
    grid.validate()?;
    if settings.len() > MAX_SIGN_TERMS {
        return Err(Error::SizeGuard {
            what: "|S|",
            got: settings.len(),
            max: MAX_SIGN_TERMS,
        });
    }
    if weights.is_empty() {
        return Err(Error::InvalidArgument("no weights C given".into()));
    }
    for &c in weights {
        settings.check_weight(c)?;
    }
    Ok(())
}

/// Grid values from `lo` to `hi` inclusive with spacing `step` (the last
/// interval may be shorter).
fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut i = 0u64;
    loop {
        let v = lo + i as f64 * step;
        if v >= hi - 1e-12 * step.max(1.0) {
            break;
        }
        out.push(v);
        i += 1;
    }
    out.push(hi);
    out
}

/// Per-`k` precomputation shared by every grid point.
struct PartitionKernel {
    k: usize,
    // k·θ_j, for the |cos(φ − kθ_j)| envelope
    k_thetas: Vec<f64>,
    // e^{i(N−k)θ_j}
    dirs: Vec<Complex64>,
    patterns: SignPatterns,
    // Σ_j s_j e^{i(N−k)θ_j} per pattern
    flat_sums: Vec<Complex64>,
}

impl PartitionKernel {
    fn new(settings: &SettingSet, k: usize) -> Self {
        let thetas = settings.thetas();
        let rest = (settings.n_parties() - k) as f64;
        let dirs: Vec<Complex64> = thetas
            .iter()
            .map(|t| Complex64::from_polar(1.0, rest * t))
            .collect();
        let patterns = SignPatterns::from_directions(&dirs);
        let flat_sums = patterns.sums(&dirs);
        Self {
            k,
            k_thetas: thetas.iter().map(|t| k as f64 * t).collect(),
            dirs,
            patterns,
            flat_sums,
        }
    }

    /// `Σ_j s_j |cos(φ − kθ_j)| e^{i(N−k)θ_j}` per pattern.
    fn cos_sums(&self, phi: f64, out: &mut Vec<Complex64>) {
        let weighted: Vec<Complex64> = self
            .dirs
            .iter()
            .zip(&self.k_thetas)
            .map(|(d, kt)| d * (phi - kt).cos().abs())
            .collect();
        out.clear();
        out.extend(self.patterns.sums(&weighted));
    }

    /// `(C·F^u)²` at a point, given the per-pattern cosine sums for its phase.
    #[inline]
    fn sign_max_sq(&self, cross: f64, middle: f64, cos_sums: &[Complex64]) -> f64 {
        let mut best = 0.0f64;
        for (p, q) in cos_sums.iter().zip(&self.flat_sums) {
            let re = cross * p.re + middle * q.re;
            let im = cross * p.im + middle * q.im;
            best = best.max(re * re + im * im);
        }
        best
    }
}

#[derive(Debug, Clone, Copy)]
struct Best {
    value: f64,
    alpha: f64,
    beta: f64,
    phi: f64,
    // loop position, for first-encountered tie-breaking across workers
    order: (usize, usize, usize),
}

impl Best {
    const NONE: Best = Best {
        value: f64::NEG_INFINITY,
        alpha: 0.0,
        beta: 0.0,
        phi: 0.0,
        order: (usize::MAX, usize::MAX, usize::MAX),
    };

    fn better(self, other: Best) -> Best {
        if other.value > self.value || (other.value == self.value && other.order < self.order) {
            other
        } else {
            self
        }
    }
}

/// Evaluates `λ^u` for every weight over the product of the given axes.
/// Returns per-weight maxima and the number of points visited.
fn scan_box(
    kernel: &PartitionKernel,
    alphas: &[f64],
    betas: &[f64],
    phis: &[f64],
    inv_c_sq: &[f64],
    parallel: bool,
) -> (Vec<Best>, u64) {
    let np = kernel.patterns.len();
    let mut table = Vec::with_capacity(phis.len() * np);
    let mut buf = Vec::with_capacity(np);
    for &phi in phis {
        kernel.cos_sums(phi, &mut buf);
        table.extend_from_slice(&buf);
    }
    let cos_betas: Vec<f64> = betas.iter().map(|b| b.cos()).collect();

    let row = |ia: usize| -> Vec<Best> {
        let alpha = alphas[ia];
        let (sin_a, a1) = alpha.sin_cos();
        let mut best = vec![Best::NONE; inv_c_sq.len()];
        for (ib, cb) in cos_betas.iter().enumerate() {
            let an = sin_a * cb;
            let x = a1 * a1;
            let y = an * an;
            let cross = 2.0 * a1 * an;
            let middle = (1.0 - x - y).max(0.0);
            let mean = 0.5 * (x + y);
            let half_gap_sq = 0.25 * (x - y) * (x - y);
            for (iphi, sums) in table.chunks_exact(np).enumerate() {
                let fsq = kernel.sign_max_sq(cross, middle, sums);
                for (slot, inv) in best.iter_mut().zip(inv_c_sq) {
                    let lambda = mean + (fsq * inv + half_gap_sq).sqrt();
                    if lambda > slot.value {
                        *slot = Best {
                            value: lambda,
                            alpha,
                            beta: betas[ib],
                            phi: phis[iphi],
                            order: (ia, ib, iphi),
                        };
                    }
                }
            }
        }
        best
    };

    let merge = |a: Vec<Best>, b: Vec<Best>| -> Vec<Best> {
        a.into_iter().zip(b).map(|(x, y)| x.better(y)).collect()
    };
    let init = vec![Best::NONE; inv_c_sq.len()];
    let best = if parallel {
        (0..alphas.len())
            .into_par_iter()
            .map(row)
            .reduce(|| init.clone(), merge)
    } else {
        (0..alphas.len()).map(row).fold(init.clone(), merge)
    };
    let count = (alphas.len() * betas.len() * phis.len()) as u64;
    (best, count)
}

/// Shrinking local grids around `start`. Only strict improvements move the
/// incumbent, so refinement never lowers the value.
fn refine(kernel: &PartitionKernel, start: Best, inv_c_sq: f64, grid: &GridSpec) -> (Best, u64) {
    let mut best = start;
    let mut evaluations = 0;
    let mut half_width = grid.step;
    for _ in 0..grid.refine_rounds {
        let step = half_width * grid.refine_shrink;
        let alphas = axis(
            (best.alpha - half_width).max(0.0),
            (best.alpha + half_width).min(FRAC_PI_2),
            step,
        );
        let betas = axis(
            (best.beta - half_width).max(0.0),
            (best.beta + half_width).min(FRAC_PI_2),
            step,
        );
        // λ^u is π-periodic in φ, so the window may cross the ends of [0, π].
        let phis = axis(best.phi - half_width, best.phi + half_width, step);
        let (found, n) = scan_box(kernel, &alphas, &betas, &phis, &[inv_c_sq], false);
        evaluations += n;
        if found[0].value > best.value {
            best = Best {
                order: best.order,
                ..found[0]
            };
        }
        half_width = step;
    }
    (best, evaluations)
}

fn search_bound(
    settings: &SettingSet,
    weights: &[f64],
    grid: &GridSpec,
    phi_span: f64,
) -> Result<Vec<BoundResult>> {
    check_inputs(settings, weights, grid)?;
    let n = settings.n_parties();
    let alphas = axis(0.0, FRAC_PI_2, grid.step);
    let betas = axis(0.0, FRAC_PI_2, grid.step);
    let phis = axis(0.0, phi_span, grid.step);
    let inv_c_sq: Vec<f64> = weights.iter().map(|c| 1.0 / (c * c)).collect();

    // (value, k, point) per weight; k ascending so earlier k wins ties.
    let mut overall: Vec<(Best, usize)> = vec![(Best::NONE, 0); weights.len()];
    let mut evaluations = vec![0u64; weights.len()];
    for k in 1..n {
        let kernel = PartitionKernel::new(settings, k);
        let (per_weight, count) = scan_box(&kernel, &alphas, &betas, &phis, &inv_c_sq, true);
        for (w, start) in per_weight.into_iter().enumerate() {
            evaluations[w] += count;
            let (refined, extra) = refine(&kernel, start, inv_c_sq[w], grid);
            evaluations[w] += extra;
            if refined.value > overall[w].0.value {
                overall[w] = (refined, kernel.k);
            }
        }
    }

    Ok(overall
        .into_iter()
        .zip(evaluations)
        .map(|((best, k), evaluations)| BoundResult {
            alpha_upper: best.value,
            arg_best: BoundaryPoint::from_angles(best.alpha, best.beta, best.phi, k),
            grid_used: *grid,
            evaluations,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(n: usize, idx: &[usize]) -> SettingSet {
        SettingSet::new(n, idx.iter().copied()).unwrap()
    }

    #[test]
    fn z_upper_cases() {
        let p = BoundaryPoint::new(1.0, 0.0, 0.3, 2).unwrap();
        assert_eq!(z_upper(&p, 0.7), 0.0);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let theta = 0.4;
        let p = BoundaryPoint::new(h, h, 2.0 * theta, 2).unwrap();
        assert!((z_upper(&p, theta) - 1.0).abs() < 1e-15);

        let p = BoundaryPoint::new(0.0, 0.0, 1.1, 3).unwrap();
        assert_eq!(z_upper(&p, 0.2), 1.0);
    }

    #[test]
    fn closed_form_envelope_matches_branch_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let alpha = rng.random_range(0.0..FRAC_PI_2);
            let beta = rng.random_range(0.0..FRAC_PI_2);
            let phase = rng.random_range(0.0..PI);
            let k = rng.random_range(1..8);
            let theta = rng.random_range(0.0..PI);
            let p = BoundaryPoint::from_angles(alpha, beta, phase, k);
            let cross = 2.0 * p.a1_abs * p.an_abs * (phase - k as f64 * theta).cos();
            let mid = 1.0 - p.x - p.y;
            let branches = (cross + mid).abs().max((cross - mid).abs());
            let z = z_upper(&p, theta);
            assert!((z - branches).abs() < 1e-12);
            assert!((0.0..=1.0 + 1e-12).contains(&z));
        }
    }

    #[test]
    fn f_upper_cases() {
        let s = set(5, &[3]);
        assert!((f_upper(&[0.6], 2, &s, 1.5).unwrap() - 0.4).abs() < 1e-15);

        // k = N makes every phasor real and positive.
        let s = set(4, &[0, 1, 3]);
        let z = [0.2, 0.5, 0.9];
        assert!((f_upper(&z, 4, &s, 4.0).unwrap() - 1.6 / 4.0).abs() < 1e-15);

        assert!(f_upper(&[0.1, 0.2], 1, &set(4, &[0]), 1.0).is_err());
    }

    #[test]
    fn f_upper_against_exhaustive_signs() {
        let s = set(5, &[0, 1, 2]);
        let thetas = s.thetas();
        let mut best: f64 = 0.0;
        for mask in 0..8u32 {
            let h: Complex64 = thetas
                .iter()
                .enumerate()
                .map(|(j, t)| {
                    let sgn = if mask >> j & 1 == 1 { -1.0 } else { 1.0 };
                    Complex64::from_polar(sgn, 3.0 * t)
                })
                .sum();
            best = best.max(h.norm());
        }
        let got = f_upper(&[1.0, 1.0, 1.0], 2, &s, 4.0).unwrap();
        assert!((got - best / 4.0).abs() < 1e-14);
    }

    #[test]
    fn lambda_upper_cases() {
        let p = BoundaryPoint::new(1.0, 0.0, 0.0, 1).unwrap();
        assert_eq!(lambda_upper(&p, 0.0), 1.0);
        let p = BoundaryPoint::new(0.0, 0.0, 0.0, 1).unwrap();
        assert_eq!(lambda_upper(&p, 1.0), 1.0);
        let h = 0.5f64.sqrt();
        let p = BoundaryPoint::new(h, h, 0.0, 1).unwrap();
        assert!((lambda_upper(&p, 0.5) - 1.0).abs() < 1e-15);
        assert!(lambda_upper(&p, 0.6) > lambda_upper(&p, 0.5));
    }

    #[test]
    fn axis_covers_endpoints() {
        let a = axis(0.0, FRAC_PI_2, 0.01);
        assert_eq!(a[0], 0.0);
        assert_eq!(*a.last().unwrap(), FRAC_PI_2);
        assert_eq!(a.len(), 159);
        assert!(a
            .windows(2)
            .all(|w| w[1] > w[0] && w[1] - w[0] <= 0.01 + 1e-15));
        assert_eq!(axis(0.2, 0.2, 0.1), vec![0.2]);
    }

    #[test]
    fn known_two_setting_value() {
        let r = alpha_upper(&set(5, &[0]), 2.0, &GridSpec::default()).unwrap();
        assert!((r.alpha_upper - 1.0).abs() < 0.005, "{r:?}");
        assert!(r.alpha_upper >= 1.0 - 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = set(5, &[0]);
        assert!(matches!(
            alpha_upper(&s, 0.5, &GridSpec::default()),
            Err(Error::WeightBelowSize { .. })
        ));
        assert!(alpha_upper(&s, 2.0, &GridSpec::coarse(0.0)).is_err());
        let g = GridSpec {
            refine_shrink: 1.0,
            ..GridSpec::default()
        };
        assert!(alpha_upper(&s, 2.0, &g).is_err());
    }

    #[test]
    fn many_weights_match_single_runs() {
        let s = set(5, &[1, 4]);
        let grid = GridSpec {
            step: 0.05,
            ..GridSpec::default()
        };
        let weights = [2.0, 3.0, 4.0];
        let many = alpha_upper_many(&s, &weights, &grid).unwrap();
        for (c, r) in weights.iter().zip(&many) {
            let single = alpha_upper(&s, *c, &grid).unwrap();
            assert_eq!(single.alpha_upper, r.alpha_upper);
            assert_eq!(single.evaluations, r.evaluations);
        }
    }

    #[test]
    fn half_turn_of_phase_suffices() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..6 {
            let n = rng.random_range(3..7);
            let idx: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
            let s = if idx.is_empty() {
                set(n, &[0])
            } else {
                set(n, &idx)
            };
            let c = s.len() as f64 * rng.random_range(1.0..2.0);
            let grid = GridSpec::coarse(0.05);
            let half = search_bound(&s, &[c], &grid, PI).unwrap()[0].alpha_upper;
            let full = search_bound(&s, &[c], &grid, 2.0 * PI).unwrap()[0].alpha_upper;
            assert!(
                (half - full).abs() < GRID_SLACK,
                "{s} C={c}: {half} vs {full}"
            );
        }
    }

    #[test]
    fn refinement_never_lowers() {
        for (idx, c) in [
            (&[1usize, 4][..], 3.0),
            (&[1, 2, 3][..], 4.0),
            (&[0, 2][..], 2.5),
        ] {
            let s = set(5, idx);
            let base = alpha_upper(&s, c, &GridSpec::coarse(0.03)).unwrap();
            let refined = alpha_upper(
                &s,
                c,
                &GridSpec {
                    step: 0.03,
                    ..GridSpec::default()
                },
            )
            .unwrap();
            assert!(refined.alpha_upper >= base.alpha_upper);
            assert!(refined.evaluations > base.evaluations);
        }
    }
}
