//! Dense ground truth for small systems.
//!
//! The biseparable value of `M_S` across a cut `{k}{N−k}` is
//! `max ⟨φ_A φ_B|M_S|φ_A φ_B⟩`. Fixing one side turns this into a top
//! eigenvalue problem on the other, so alternating the two ("see-saw")
//! climbs monotonically to a local optimum. With random restarts the result
//! is a lower estimate of `α_S`, which must never exceed the grid bound.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    family_operator, noisy_ghz_dense, rotated_observable, top_eigenpair, DenseOperator, NoisyState,
    StateVector,
};
use crate::settings::{parity_sign, SettingSet};

/// Largest system the see-saw oracle accepts.
pub const MAX_ORACLE_PARTIES: usize = 8;
/// Largest system for which `M_rest` and witness values are built densely.
pub const MAX_DENSE_WITNESS_PARTIES: usize = 12;
// above this, ρ is not materialized for the witness value
const MAX_MATERIALIZED_RHO: usize = 10;

fn guard(what: &'static str, got: usize, max: usize) -> Result<()> {
    if got > max {
        return Err(Error::SizeGuard { what, got, max });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeesawConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub convergence_tol: f64,
    pub rng_seed: u64,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iters: 500,
            convergence_tol: 1e-10,
            rng_seed: 0,
        }
    }
}

impl SeesawConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "see-saw needs at least one restart and one iteration".into(),
            ));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "convergence tolerance must be positive, got {}",
                self.convergence_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionValue {
    pub k: usize,
    pub f_value: f64,
    /// Whether the restart that produced `f_value` met the tolerance.
    pub converged: bool,
    pub restarts_used: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub alpha_best: f64,
    pub per_k: Vec<PartitionValue>,
    pub iterations_total: usize,
}

/// One see-saw run.
#[derive(Debug, Clone)]
pub struct SeesawTrace {
    pub value: f64,
    /// Objective after every half-step.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub phi_a: StateVector,
    pub phi_b: StateVector,
}

/// `(⟨φ_A| ⊗ I) M (|φ_A⟩ ⊗ I)` with `φ_A` on the first `k` qubits.
pub fn contract_leading(m: &DenseOperator, phi_a: &StateVector) -> Result<DenseOperator> {
    let n = m.n_qubits();
    let k = phi_a.n_qubits();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "cannot project {k} of {n} qubits"
        )));
    }
    let rest = 1usize << (n - k);
    let amps = phi_a.amplitudes();
    let mat = m.matrix();
    let mut out = DMatrix::<Complex64>::zeros(rest, rest);
    for a in 0..amps.len() {
        let ca = amps[a].conj();
        if ca == Complex64::new(0.0, 0.0) {
            continue;
        }
        for ap in 0..amps.len() {
            let w = ca * amps[ap];
            if w == Complex64::new(0.0, 0.0) {
                continue;
            }
            let block = mat.view((a * rest, ap * rest), (rest, rest));
            out += block * w;
        }
    }
    DenseOperator::from_matrix(out)
}

/// `(I ⊗ ⟨φ_B|) M (I ⊗ |φ_B⟩)` with `φ_B` on the last qubits.
pub fn contract_trailing(m: &DenseOperator, phi_b: &StateVector) -> Result<DenseOperator> {
    let n = m.n_qubits();
    let r = phi_b.n_qubits();
    if r == 0 || r >= n {
        return Err(Error::InvalidArgument(format!(
            "cannot project {r} of {n} qubits"
        )));
    }
    let rest = 1usize << r;
    let lead = 1usize << (n - r);
    let amps = phi_b.amplitudes();
    let mat = m.matrix();
    let out = DMatrix::from_fn(lead, lead, |a, ap| {
        let mut acc = Complex64::new(0.0, 0.0);
        for b in 0..rest {
            let cb = amps[b].conj();
            for bp in 0..rest {
                acc += cb * mat[(a * rest + b, ap * rest + bp)] * amps[bp];
            }
        }
        acc
    });
    DenseOperator::from_matrix(out)
}

/// `x`, `y` and `z_j = ⟨φ_A|M_{θ_j}^{⊗k}|φ_A⟩` for a projected state.
#[derive(Debug, Clone, PartialEq)]
pub struct RestParameters {
    pub x: f64,
    pub y: f64,
    pub z: Vec<f64>,
}

pub fn rest_parameters(settings: &SettingSet, phi_a: &StateVector) -> Result<RestParameters> {
    let k = phi_a.n_qubits();
    let amps = phi_a.amplitudes();
    let x = amps[0].norm_sqr();
    let y = amps[amps.len() - 1].norm_sqr();
    let z = settings
        .angles()
        .map(|a| {
            let op = rotated_observable(a).tensor_power(k)?;
            Ok(op.expectation(phi_a)?.re)
        })
        .collect::<Result<_>>()?;
    Ok(RestParameters { x, y, z })
}

/// Anti-diagonal coefficients `F_{z,t} = (1/C)Σ_j (−1)^j z_j e^{itθ_j}` for
/// `t = −n_rest, −n_rest+2, …, n_rest`; entry `i` holds `t = 2i − n_rest`.
pub fn anti_diagonal_coefficients(
    settings: &SettingSet,
    c: f64,
    z: &[f64],
    n_rest: usize,
) -> Vec<Complex64> {
    let thetas = settings.thetas();
    (0..=n_rest)
        .map(|i| {
            let t = 2.0 * i as f64 - n_rest as f64;
            settings
                .indices()
                .iter()
                .zip(&thetas)
                .zip(z)
                .map(|((&j, theta), zj)| Complex64::from_polar(parity_sign(j) * zj / c, t * theta))
                .sum()
        })
        .collect()
}

/// The operator left on `n_rest` qubits, assembled from `x`, `y` and the
/// anti-diagonal coefficients: row `b` carries `F_{z,t}` at column `¬b` with
/// `t = 2·popcount(b) − n_rest`.
pub fn m_rest_structural(n_rest: usize, x: f64, y: f64, f: &[Complex64]) -> Result<DenseOperator> {
    if f.len() != n_rest + 1 {
        return Err(Error::DimensionMismatch {
            expected: n_rest + 1,
            got: f.len(),
        });
    }
    let mut op = DenseOperator::zeros(n_rest)?.into_matrix();
    let dim = 1usize << n_rest;
    for b in 0..dim {
        op[(b, (dim - 1) ^ b)] += f[b.count_ones() as usize];
    }
    op[(0, 0)] += Complex64::new(x, 0.0);
    op[(dim - 1, dim - 1)] += Complex64::new(y, 0.0);
    DenseOperator::from_matrix(op)
}

/// `Tr_{first k}(M_S · (|φ_A⟩⟨φ_A| ⊗ I))`, by contracting the dense family
/// operator.
pub fn m_rest_dense(settings: &SettingSet, c: f64, phi_a: &StateVector) -> Result<DenseOperator> {
    let n = settings.n_parties();
    guard("M_rest party count", n, MAX_DENSE_WITNESS_PARTIES)?;
    let m = family_operator(n, settings, c)?;
    contract_leading(&m, phi_a)
}

/// Largest eigenvalue of `M_rest` from its 2×2 block structure:
/// `max(λ_{N−k}, max_t |F_{z,t}|)` with
/// `λ_{N−k} = (x+y)/2 + √(|F_{z,N−k}|² + (x−y)²/4)`.
pub fn rest_max_eigenvalue(x: f64, y: f64, f: &[Complex64]) -> f64 {
    let Some(corner) = f.last() else {
        return x.max(y);
    };
    let half_gap = 0.5 * (x - y);
    let outer = 0.5 * (x + y) + (corner.norm_sqr() + half_gap * half_gap).sqrt();
    let inner = if f.len() > 2 {
        f[1..f.len() - 1]
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    outer.max(inner)
}

/// Full spectrum implied by the block structure, ascending.
pub fn rest_block_spectrum(n_rest: usize, x: f64, y: f64, f: &[Complex64]) -> Vec<f64> {
    let dim = 1usize << n_rest;
    let mut out = Vec::with_capacity(dim);
    for b in 0..dim {
        let partner = (dim - 1) ^ b;
        if b > partner {
            continue;
        }
        if b == 0 {
            let half_gap = 0.5 * (x - y);
            let root = (f[n_rest].norm_sqr() + half_gap * half_gap).sqrt();
            out.push(0.5 * (x + y) + root);
            out.push(0.5 * (x + y) - root);
        } else {
            let m = f[b.count_ones() as usize].norm();
            out.push(m);
            out.push(-m);
        }
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// Alternating maximization of `⟨φ_A φ_B|M|φ_A φ_B⟩` from a given `φ_A`.
pub fn seesaw(m: &DenseOperator, start: StateVector, config: &SeesawConfig) -> Result<SeesawTrace> {
    config.validate()?;
    let k = start.n_qubits();
    let n = m.n_qubits();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("cut at {k} of {n} parties")));
    }
    let mut phi_a = start;
    let mut phi_b = StateVector::basis(n - k, 0)?;
    let mut history = Vec::new();
    let mut value = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iters {
        iterations += 1;
        let (v_b, vec_b) = top_eigenpair(contract_leading(m, &phi_a)?.matrix());
        phi_b = StateVector::normalized(vec_b)?;
        history.push(v_b);
        let (v_a, vec_a) = top_eigenpair(contract_trailing(m, &phi_b)?.matrix());
        phi_a = StateVector::normalized(vec_a)?;
        history.push(v_a);
        let gain = v_a - value;
        value = value.max(v_a);
        if gain < config.convergence_tol {
            converged = true;
            break;
        }
    }
    Ok(SeesawTrace {
        value,
        history,
        iterations,
        converged,
        phi_a,
        phi_b,
    })
}

fn restart_rng(seed: u64, k: usize, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((k as u64) << 32) | restart as u64);
    rng
}

/// Best biseparable value of `M_S` found by see-saw over every cut
/// `{k}{N−k}`, `k = 1 … N−1`.
///
/// Restart 0 of every cut starts from `|0…0⟩`, which already attains 1; the
/// rest start from Haar-random states with a stream per `(seed, k, restart)`.
pub fn alpha_oracle(settings: &SettingSet, c: f64, config: &SeesawConfig) -> Result<OracleReport> {
    let n = settings.n_parties();
    guard("oracle party count", n, MAX_ORACLE_PARTIES)?;
    config.validate()?;
    let m = family_operator(n, settings, c)?;

    let jobs: Vec<(usize, usize)> = (1..n)
        .flat_map(|k| (0..config.restarts).map(move |r| (k, r)))
        .collect();
    let traces: Vec<(usize, SeesawTrace)> = jobs
        .par_iter()
        .map(|&(k, r)| {
            let start = if r == 0 {
                StateVector::basis(k, 0)?
            } else {
                StateVector::random(k, &mut restart_rng(config.rng_seed, k, r))?
            };
            Ok((k, seesaw(&m, start, config)?))
        })
        .collect::<Result<_>>()?;

    let mut per_k: Vec<PartitionValue> = (1..n)
        .map(|k| PartitionValue {
            k,
            f_value: f64::NEG_INFINITY,
            converged: false,
            restarts_used: config.restarts,
            iterations: 0,
        })
        .collect();
    let mut iterations_total = 0;
    for (k, trace) in traces {
        iterations_total += trace.iterations;
        let slot = &mut per_k[k - 1];
        slot.iterations += trace.iterations;
        if trace.value > slot.f_value {
            slot.f_value = trace.value;
            slot.converged = trace.converged;
        }
    }
    let alpha_best = per_k
        .iter()
        .map(|p| p.f_value)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(OracleReport {
        alpha_best,
        per_k,
        iterations_total,
    })
}

/// `α − (1−p)(1 + |S|/C) − p·2^{1−N}`.
pub fn witness_value_closed_form(n: usize, size: usize, c: f64, alpha: f64, p: f64) -> f64 {
    alpha - (1.0 - p) * (1.0 + size as f64 / c) - p * 2f64.powi(1 - n as i32)
}

/// `Tr((α·I − M_S)ρ)` on the noisy GHZ state, evaluated densely and checked
/// against the closed form.
pub fn witness_value_dense(settings: &SettingSet, c: f64, alpha: f64, p: f64) -> Result<f64> {
    let n = settings.n_parties();
    guard("dense witness party count", n, MAX_DENSE_WITNESS_PARTIES)?;
    let state = NoisyState::new(n, p)?;
    let m = family_operator(n, settings, c)?;
    let m_rho = if n <= MAX_MATERIALIZED_RHO {
        m.trace_product(&noisy_ghz_dense(state)?)?.re
    } else {
        // same contraction, with ρ kept in its two-term form
        let ghz = crate::operators::ghz_state(n)?;
        (1.0 - p) * m.expectation(&ghz)?.re + p * m.trace().re / (1u64 << n) as f64
    };
    let dense = alpha - m_rho;
    let closed_form = witness_value_closed_form(n, settings.len(), c, alpha, p);
    if (dense - closed_form).abs() > 1e-10 {
        return Err(Error::ClosedFormMismatch { dense, closed_form });
    }
    Ok(dense)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{ghz_state, partial_trace_first_k};
    use rand::Rng;

    fn set(n: usize, idx: &[usize]) -> SettingSet {
        SettingSet::new(n, idx.iter().copied()).unwrap()
    }

    #[test]
    fn m_rest_from_all_zeros_is_corner_projector() {
        let s = set(4, &[0, 1, 3]);
        let phi = StateVector::basis(2, 0).unwrap();
        let rest = m_rest_dense(&s, 4.0, &phi).unwrap();
        let want = DenseOperator::uniform_projector(2, false).unwrap();
        assert!(rest.max_abs_diff(&want) < 1e-15);
        let params = rest_parameters(&s, &phi).unwrap();
        assert_eq!((params.x, params.y), (1.0, 0.0));
        assert!(params.z.iter().all(|z| z.abs() < 1e-15));
    }

    #[test]
    fn m_rest_from_ghz_projection() {
        let s = set(4, &[0]);
        let phi = ghz_state(2).unwrap();
        let p = rest_parameters(&s, &phi).unwrap();
        assert!((p.x - 0.5).abs() < 1e-15 && (p.y - 0.5).abs() < 1e-15);
        assert!((p.z[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn m_rest_dense_equals_structural_and_partial_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = set(4, &[0, 1, 3]);
        let c = 4.5;
        let m = family_operator(4, &s, c).unwrap();
        for _ in 0..20 {
            let phi = StateVector::random(2, &mut rng).unwrap();
            let dense = m_rest_dense(&s, c, &phi).unwrap();

            let p = rest_parameters(&s, &phi).unwrap();
            let f = anti_diagonal_coefficients(&s, c, &p.z, 2);
            let structural = m_rest_structural(2, p.x, p.y, &f).unwrap();
            assert!(dense.max_abs_diff(&structural) < 1e-12);

            // partial trace of M·(|φ⟩⟨φ| ⊗ I)
            let proj = DenseOperator::projector(&phi)
                .kron(&DenseOperator::identity(2).unwrap())
                .unwrap();
            let traced = partial_trace_first_k(&m.mul(&proj).unwrap(), 2).unwrap();
            assert!(dense.max_abs_diff(&traced) < 1e-12);
        }
    }

    #[test]
    fn rest_max_eigenvalue_cases() {
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(rest_max_eigenvalue(1.0, 0.0, &[zero, zero]), 1.0);
        let f = [zero, Complex64::from_polar(0.7, 0.3), zero];
        assert!((rest_max_eigenvalue(0.0, 0.0, &f) - 0.7).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let n_rest = rng.random_range(1..5);
            let x: f64 = rng.random_range(0.0..0.5);
            let y: f64 = rng.random_range(0.0..0.5);
            let f: Vec<Complex64> = (0..=n_rest)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            // Hermitian requires F_{−t} = conj(F_t)
            let f: Vec<Complex64> = (0..=n_rest)
                .map(|i| {
                    if 2 * i < n_rest {
                        f[n_rest - i].conj()
                    } else {
                        f[i]
                    }
                })
                .collect();
            let f = if n_rest % 2 == 0 {
                let mut g = f.clone();
                g[n_rest / 2] = Complex64::new(g[n_rest / 2].re, 0.0);
                g
            } else {
                f
            };
            let op = m_rest_structural(n_rest, x, y, &f).unwrap();
            assert!(op.is_hermitian(1e-15));
            assert!((op.max_eigenvalue() - rest_max_eigenvalue(x, y, &f)).abs() < 1e-9);
        }
    }

    #[test]
    fn seesaw_from_product_state_converges_fast() {
        let s = set(3, &[0]);
        let m = family_operator(3, &s, 2.0).unwrap();
        let trace = seesaw(
            &m,
            StateVector::basis(1, 0).unwrap(),
            &SeesawConfig::default(),
        )
        .unwrap();
        assert!(trace.converged);
        assert!(trace.iterations <= 2);
        assert!(trace.value >= 1.0 - 1e-12);
    }

    #[test]
    fn seesaw_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = set(4, &[1, 2]);
        let m = family_operator(4, &s, 3.0).unwrap();
        for k in 1..4 {
            let start = StateVector::random(k, &mut rng).unwrap();
            let t = seesaw(&m, start, &SeesawConfig::default()).unwrap();
            assert!(
                t.history.windows(2).all(|w| w[1] >= w[0] - 1e-12),
                "{:?}",
                t.history
            );
        }
    }

    #[test]
    fn oracle_two_setting_witness() {
        let r = alpha_oracle(&set(3, &[0]), 2.0, &SeesawConfig::default()).unwrap();
        assert!((r.alpha_best - 1.0).abs() < 1e-6, "{r:?}");
        assert!(r.per_k.iter().all(|p| p.f_value >= 1.0 - 1e-9));
    }

    #[test]
    fn oracle_size_guard() {
        let s = set(9, &[0]);
        assert!(alpha_oracle(&s, 2.0, &SeesawConfig::default())
            .unwrap_err()
            .is_guard());
    }

    #[test]
    fn oracle_is_seed_deterministic() {
        let s = set(4, &[0, 1]);
        let cfg = SeesawConfig {
            restarts: 4,
            ..SeesawConfig::default()
        };
        let a = alpha_oracle(&s, 3.0, &cfg).unwrap();
        let b = alpha_oracle(&s, 3.0, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn witness_values() {
        let s = set(4, &[0]);
        let v = witness_value_dense(&s, 2.0, 1.3, 1.0).unwrap();
        assert!((v - (1.3 - 2f64.powi(-3))).abs() < 1e-12);
        let v = witness_value_dense(&s, 2.0, 1.0, 0.0).unwrap();
        assert!((v + 0.5).abs() < 1e-12);

        let p = crate::search::noise_threshold_exact(1.0, 1, 2.0, 4);
        assert!(witness_value_dense(&s, 2.0, 1.0, p).unwrap().abs() < 1e-10);
        assert!(witness_value_dense(&set(13, &[0]), 2.0, 1.0, 0.1)
            .unwrap_err()
            .is_guard());
    }
}
