//! Maximizing `|Σ_j s_j v_j|` over sign vectors `s ∈ {±1}^m`.
//!
//! For any unit direction `u`, the best signs against `u` are
//! `s_j = sign⟨v_j, u⟩`, and the optimum over all `s` equals
//! `max_u Σ_j |⟨v_j, u⟩|`. As `u` sweeps half a turn the induced sign vector
//! only changes where `u ⟂ v_j`, so at most `m` patterns need checking instead
//! of `2^m`. The patterns depend only on the directions of the `v_j`, which
//! lets the bound kernel reuse them across grid points where only
//! nonnegative magnitudes change.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Longest vector accepted by [`max_sign_sum`].
pub const MAX_SIGN_TERMS: usize = 24;

/// Critical angles closer than this are treated as one.
const ANGLE_MERGE_TOL: f64 = 1e-12;

/// The candidate sign vectors for a fixed set of directions.
#[derive(Debug, Clone)]
pub struct SignPatterns {
    width: usize,
    // row-major, one row of ±1.0 per pattern
    signs: Vec<f64>,
}

impl SignPatterns {
    /// Patterns for `Σ_j s_j r_j d_j` with fixed `d_j` and any `r_j ≥ 0`.
    /// Zero directions get `+1`.
    pub fn from_directions(directions: &[Complex64]) -> Self {
        let width = directions.len();
        let args: Vec<Option<f64>> = directions
            .iter()
            .map(|d| (d.norm_sqr() > 0.0).then(|| d.arg()))
            .collect();

        let mut critical: Vec<f64> = args
            .iter()
            .flatten()
            .map(|a| (a + FRAC_PI_2).rem_euclid(PI))
            .collect();
        critical.sort_by(|a, b| a.total_cmp(b));
        critical.dedup_by(|a, b| (*a - *b).abs() <= ANGLE_MERGE_TOL);
        if critical.len() > 1
            && (critical[0] + PI - critical[critical.len() - 1]) <= ANGLE_MERGE_TOL
        {
            critical.pop();
        }

        let probes: Vec<f64> = match critical.len() {
            0 => vec![0.0],
            1 => vec![critical[0] + FRAC_PI_2],
            q => (0..q)
                .map(|i| {
                    let next = if i + 1 < q {
                        critical[i + 1]
                    } else {
                        critical[0] + PI
                    };
                    0.5 * (critical[i] + next)
                })
                .collect(),
        };

        let mut signs = Vec::with_capacity(probes.len() * width);
        for psi in probes {
            for arg in &args {
                let s = match arg {
                    Some(a) if (a - psi).cos() < 0.0 => -1.0,
                    _ => 1.0,
                };
                signs.push(s);
            }
        }
        Self { width, signs }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.signs.len().checked_div(self.width).unwrap_or(1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.signs.chunks(self.width.max(1))
    }

    /// `Σ_j s_j v_j` for every pattern.
    pub fn sums(&self, values: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.width);
        if self.width == 0 {
            return vec![Complex64::new(0.0, 0.0)];
        }
        self.iter()
            .map(|row| row.iter().zip(values).map(|(s, v)| v * *s).sum())
            .collect()
    }

    /// `max_s |Σ_j s_j v_j|`, valid when every `v_j` is a nonnegative
    /// multiple of the direction the patterns were built from.
    pub fn max_modulus(&self, values: &[Complex64]) -> f64 {
        self.sums(values)
            .into_iter()
            .map(|h| h.norm_sqr())
            .fold(0.0, f64::max)
            .sqrt()
    }
}

/// `max_{s ∈ {±1}^m} |Σ_j s_j v_j|`.
pub fn max_sign_sum(values: &[Complex64]) -> Result<f64> {
    if values.len() > MAX_SIGN_TERMS {
        return Err(Error::SizeGuard {
            what: "sign vector length",
            got: values.len(),
            max: MAX_SIGN_TERMS,
        });
    }
    Ok(SignPatterns::from_directions(values).max_modulus(values))
}
