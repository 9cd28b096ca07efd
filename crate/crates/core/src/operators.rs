//! Dense qubit operators and states.
//!
//! Everything here materializes full `2^n`-dimensional matrices, so it is only
//! meant for small systems: oracle runs, property tests and cross-checks of the
//! closed-form bound. Tensor indices are big-endian: party 0 is the most
//! significant bit, which puts `|0…0⟩⟨0…0|` at `(0, 0)` and `|1…1⟩⟨1…1|` at
//! `(2^n−1, 2^n−1)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::settings::{parity_sign, LocalAngle, SettingSet};

/// Largest number of qubits a dense object may have.
pub const MAX_DENSE_QUBITS: usize = 16;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_qubits(n: usize) -> Result<()> {
    if n > MAX_DENSE_QUBITS {
        return Err(Error::SizeGuard {
            what: "dense qubit count",
            got: n,
            max: MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// A square complex matrix acting on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    n_qubits: usize,
    matrix: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let n_qubits = qubits_for_dim(matrix.nrows())?;
        check_qubits(n_qubits)?;
        Ok(Self { n_qubits, matrix })
    }

    pub fn zeros(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        Ok(Self {
            n_qubits,
            matrix: DMatrix::zeros(dim, dim),
        })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        Ok(Self {
            n_qubits,
            matrix: DMatrix::identity(dim, dim),
        })
    }

    /// `|ψ⟩⟨ψ|`
    pub fn projector(state: &StateVector) -> Self {
        Self {
            n_qubits: state.n_qubits,
            matrix: &state.amplitudes * state.amplitudes.adjoint(),
        }
    }

    /// `|b⟩⟨b|^{⊗n}` for a single bit value `b`.
    pub fn uniform_projector(n_qubits: usize, bit: bool) -> Result<Self> {
        let mut op = Self::zeros(n_qubits)?;
        let idx = if bit { op.dim() - 1 } else { 0 };
        op.matrix[(idx, idx)] = ONE;
        Ok(op)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn kron(&self, other: &DenseOperator) -> Result<Self> {
        check_qubits(self.n_qubits + other.n_qubits)?;
        Ok(Self {
            n_qubits: self.n_qubits + other.n_qubits,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    /// `op^{⊗n}` for `n ≥ 1`.
    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("tensor power of zero".into()));
        }
        check_qubits(self.n_qubits * n)?;
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.kron(self)?;
        }
        Ok(acc)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            matrix: &self.matrix * Complex64::new(factor, 0.0),
        }
    }

    pub fn add(&self, other: &DenseOperator) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            n_qubits: self.n_qubits,
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &DenseOperator) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            n_qubits: self.n_qubits,
            matrix: &self.matrix - &other.matrix,
        })
    }

    pub fn mul(&self, other: &DenseOperator) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            n_qubits: self.n_qubits,
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            matrix: self.matrix.adjoint(),
        }
    }

    fn same_shape(&self, other: &DenseOperator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Largest elementwise deviation `|A_ij − conj(A_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                let diff = (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm();
                worst = worst.max(diff);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Largest elementwise distance to `other`.
    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `⟨ψ|A|ψ⟩`
    pub fn expectation(&self, state: &StateVector) -> Result<Complex64> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: state.dim(),
            });
        }
        Ok(state.amplitudes.dotc(&(&self.matrix * &state.amplitudes)))
    }

    /// `Tr(A·B)` without forming the product.
    pub fn trace_product(&self, other: &DenseOperator) -> Result<Complex64> {
        self.same_shape(other)?;
        let d = self.dim();
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += self.matrix[(i, j)] * other.matrix[(j, i)];
            }
        }
        Ok(acc)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues_hermitian(&self) -> Vec<f64> {
        let mut values: Vec<f64> = hermitian_part(&self.matrix)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        values.sort_by(|a, b| a.total_cmp(b));
        values
    }

    pub fn max_eigenvalue(&self) -> f64 {
        top_eigenpair(&self.matrix).0
    }
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Largest eigenvalue and a unit eigenvector of the Hermitian part of `m`.
pub fn top_eigenpair(m: &DMatrix<Complex64>) -> (f64, DVector<Complex64>) {
    let eig = hermitian_part(m).symmetric_eigen();
    let (best, value) = eig.eigenvalues.iter().enumerate().fold(
        (0usize, f64::NEG_INFINITY),
        |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        },
    );
    let mut vector: DVector<Complex64> = eig.eigenvectors.column(best).into_owned();
    let norm = vector.norm();
    if norm > 0.0 {
        vector /= Complex64::new(norm, 0.0);
    }
    (value, vector)
}

/// A normalized pure state on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    pub const NORM_TOL: f64 = 1e-12;

    /// Wraps amplitudes that are already normalized.
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        check_qubits(n_qubits)?;
        let norm = amplitudes.norm();
        if (norm * norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(mut amplitudes: DVector<Complex64>) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        check_qubits(n_qubits)?;
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        amplitudes /= Complex64::new(norm, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amplitudes = DVector::from_element(dim, ZERO);
        amplitudes[index] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Haar-random state: i.i.d. complex normal amplitudes, normalized.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        let amplitudes = DVector::from_fn(dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        Self::normalized(amplitudes)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    /// `|self⟩ ⊗ |other⟩`
    pub fn kron(&self, other: &StateVector) -> Result<Self> {
        check_qubits(self.n_qubits + other.n_qubits)?;
        Ok(Self {
            n_qubits: self.n_qubits + other.n_qubits,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        })
    }
}

/// GHZ state mixed with white noise: `(1−p)|GHZ⟩⟨GHZ| + p·I/2^N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyState {
    pub n_parties: usize,
    pub p: f64,
}

impl NoisyState {
    pub fn new(n_parties: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "noise fraction p = {p} outside [0, 1]"
            )));
        }
        if n_parties < 2 {
            return Err(Error::TooFewParties {
                n: n_parties,
                min: 2,
            });
        }
        Ok(Self { n_parties, p })
    }
}

pub fn pauli_x() -> DenseOperator {
    DenseOperator {
        n_qubits: 1,
        matrix: DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
    }
}

pub fn pauli_y() -> DenseOperator {
    let i = Complex64::new(0.0, 1.0);
    DenseOperator {
        n_qubits: 1,
        matrix: DMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
    }
}

pub fn pauli_z() -> DenseOperator {
    DenseOperator {
        n_qubits: 1,
        matrix: DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    }
}

/// `cos θ·σ_x + sin θ·σ_y`
pub fn rotated_observable(angle: LocalAngle) -> DenseOperator {
    let (s, c) = angle.theta.sin_cos();
    pauli_x()
        .scaled(c)
        .add(&pauli_y().scaled(s))
        .expect("2x2 operands")
}

/// Single-qubit rotation about z by `delta`; conjugation maps
/// `M_θ` to `M_{θ+δ}`.
pub fn z_rotation(delta: f64) -> DenseOperator {
    let half = 0.5 * delta;
    DenseOperator {
        n_qubits: 1,
        matrix: DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::from_polar(1.0, -half),
                ZERO,
                ZERO,
                Complex64::from_polar(1.0, half),
            ],
        ),
    }
}

/// `(|0…0⟩ + |1…1⟩)/√2` on `n ≥ 2` qubits.
pub fn ghz_state(n: usize) -> Result<StateVector> {
    if n < 2 {
        return Err(Error::TooFewParties { n, min: 2 });
    }
    check_qubits(n)?;
    let dim = 1usize << n;
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut amplitudes = DVector::from_element(dim, ZERO);
    amplitudes[0] = amp;
    amplitudes[dim - 1] = amp;
    Ok(StateVector {
        n_qubits: n,
        amplitudes,
    })
}

/// `M_S = |0⟩⟨0|^{⊗n} + |1⟩⟨1|^{⊗n} + (1/C)·Σ_{j∈S} (−1)^j M_{θ_j}^{⊗n}`.
///
/// The x-y terms are built as genuine tensor powers of
/// [`rotated_observable`], independent of the anti-diagonal closed form the
/// bound relies on.
pub fn family_operator(n: usize, settings: &SettingSet, c: f64) -> Result<DenseOperator> {
    if settings.n_parties() != n {
        return Err(Error::InvalidArgument(format!(
            "setting set is for {} parties, operator requested for {n}",
            settings.n_parties()
        )));
    }
    settings.check_weight(c)?;
    check_qubits(n)?;
    let mut op = DenseOperator::uniform_projector(n, false)?
        .add(&DenseOperator::uniform_projector(n, true)?)?;
    for angle in settings.angles() {
        let term = rotated_observable(angle).tensor_power(n)?;
        op = op.add(&term.scaled(parity_sign(angle.j) / c))?;
    }
    Ok(op)
}

/// Density matrix of a [`NoisyState`].
pub fn noisy_ghz_dense(state: NoisyState) -> Result<DenseOperator> {
    let n = state.n_parties;
    let ghz = DenseOperator::projector(&ghz_state(n)?);
    let mixed = DenseOperator::identity(n)?.scaled(1.0 / (1u64 << n) as f64);
    ghz.scaled(1.0 - state.p).add(&mixed.scaled(state.p))
}

/// Traces out the first `k` tensor factors.
pub fn partial_trace_first_k(op: &DenseOperator, k: usize) -> Result<DenseOperator> {
    let n = op.n_qubits();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "partial trace over {k} of {n} qubits; need 1 ≤ k ≤ n−1"
        )));
    }
    let rest = 1usize << (n - k);
    let traced = 1usize << k;
    let m = op.matrix();
    let reduced = DMatrix::from_fn(rest, rest, |b, bp| {
        (0..traced).map(|a| m[(a * rest + b, a * rest + bp)]).sum()
    });
    Ok(DenseOperator {
        n_qubits: n - k,
        matrix: reduced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn approx_op(a: &DenseOperator, b: &DenseOperator, tol: f64) -> bool {
        a.dim() == b.dim() && a.max_abs_diff(b) <= tol
    }

    #[test]
    fn rotated_observable_special_angles() {
        let x = rotated_observable(LocalAngle::from_radians(0.0));
        assert!(approx_op(&x, &pauli_x(), 0.0));
        let y = rotated_observable(LocalAngle::from_radians(PI / 2.0));
        assert!(approx_op(&y, &pauli_y(), 1e-16));

        let d = rotated_observable(LocalAngle::from_radians(PI / 4.0));
        let expect = pauli_x().add(&pauli_y()).unwrap().scaled(FRAC_1_SQRT_2);
        assert!(approx_op(&d, &expect, 1e-15));
        let eig = d.eigenvalues_hermitian();
        assert!((eig[0] + 1.0).abs() < 1e-12 && (eig[1] - 1.0).abs() < 1e-12);
        assert!(d.trace().norm() < 1e-15);
        assert!(d.is_hermitian(1e-15));
    }

    #[test]
    fn ghz_amplitudes() {
        let g2 = ghz_state(2).unwrap();
        let a = g2.amplitudes();
        assert!((a[0].re - FRAC_1_SQRT_2).abs() < 1e-16);
        assert!((a[3].re - FRAC_1_SQRT_2).abs() < 1e-16);
        assert_eq!(a[1], ZERO);
        assert_eq!(a[2], ZERO);

        let g3 = ghz_state(3).unwrap();
        let nonzero: Vec<usize> = (0..8).filter(|&i| g3.amplitudes()[i] != ZERO).collect();
        assert_eq!(nonzero, vec![0, 7]);

        let xxx = pauli_x().tensor_power(3).unwrap();
        assert!((xxx.expectation(&g3).unwrap() - ONE).norm() < 1e-12);

        assert!(matches!(ghz_state(1), Err(Error::TooFewParties { .. })));
    }

    #[test]
    fn family_operator_ghz_expectation_and_trace() {
        let s = SettingSet::new(3, [0]).unwrap();
        let m = family_operator(3, &s, 2.0).unwrap();
        let e = m.expectation(&ghz_state(3).unwrap()).unwrap();
        assert!((e.re - 1.5).abs() < 1e-12 && e.im.abs() < 1e-12);

        for n in 2..=5 {
            for mask in 1u32..(1 << n) {
                let s = SettingSet::new(n, (0..n).filter(|j| mask >> j & 1 == 1)).unwrap();
                let c = 1.5 * s.len() as f64;
                let m = family_operator(n, &s, c).unwrap();
                assert!((m.trace() - Complex64::new(2.0, 0.0)).norm() < 1e-12);
                assert!(m.is_hermitian(1e-12));
                for i in 0..m.dim() {
                    let want = if i == 0 || i == m.dim() - 1 { 1.0 } else { 0.0 };
                    assert!((m.matrix()[(i, i)].re - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn family_operator_hand_expanded_two_qubits() {
        // S = {0, 1}, C = 2: σx⊗σx − M_{π/2}⊗M_{π/2} = σx⊗σx − σy⊗σy.
        // σx⊗σx has ones on the anti-diagonal; σy⊗σy = [[0,0,0,−1],[0,0,1,0],[0,1,0,0],[−1,0,0,0]].
        let s = SettingSet::new(2, [0, 1]).unwrap();
        let m = family_operator(2, &s, 2.0).unwrap();
        let r = |v: f64| Complex64::new(v, 0.0);
        #[rustfmt::skip]
        let expect = DMatrix::from_row_slice(4, 4, &[
            r(1.0), r(0.0), r(0.0), r(1.0),
            r(0.0), r(0.0), r(0.0), r(0.0),
            r(0.0), r(0.0), r(0.0), r(0.0),
            r(1.0), r(0.0), r(0.0), r(1.0),
        ]);
        let expect = DenseOperator::from_matrix(expect).unwrap();
        assert!(approx_op(&m, &expect, 1e-15), "{}", m.matrix());
    }

    #[test]
    fn family_operator_rejects_bad_weight() {
        let s = SettingSet::new(3, [0]).unwrap();
        assert!(matches!(
            family_operator(3, &s, 0.5),
            Err(Error::WeightBelowSize { .. })
        ));
        assert!(matches!(
            family_operator(3, &s, 3.0),
            Err(Error::WeightAboveDouble { .. })
        ));
    }

    /// `2·(½I − W)` for the known two-setting and N+1-setting witnesses.
    #[test]
    fn recovers_known_witnesses() {
        for n in 2..=5 {
            let half_id = DenseOperator::identity(n).unwrap().scaled(0.5);
            let mz = DenseOperator::uniform_projector(n, false)
                .unwrap()
                .add(&DenseOperator::uniform_projector(n, true).unwrap())
                .unwrap();

            let mx = pauli_x().tensor_power(n).unwrap();
            let w2 = half_id
                .sub(&mz.scaled(0.5))
                .unwrap()
                .sub(&mx.scaled(0.25))
                .unwrap();
            let target = half_id.sub(&w2).unwrap().scaled(2.0);
            let got = family_operator(n, &SettingSet::new(n, [0]).unwrap(), 2.0).unwrap();
            assert!(approx_op(&got, &target, 1e-12));

            let mut wn1 = half_id.sub(&mz.scaled(0.5)).unwrap();
            for j in 0..n {
                let a = LocalAngle::new(j, n).unwrap();
                let term = rotated_observable(a).tensor_power(n).unwrap();
                wn1 = wn1
                    .sub(&term.scaled(parity_sign(j) / (2.0 * n as f64)))
                    .unwrap();
            }
            let target = half_id.sub(&wn1).unwrap().scaled(2.0);
            let got = family_operator(n, &SettingSet::full(n).unwrap(), n as f64).unwrap();
            assert!(approx_op(&got, &target, 1e-12));
        }
    }

    #[test]
    fn ghz_expectation_of_rotated_power_is_cos_n_theta() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let theta: f64 = rng.random_range(0.0..2.0 * PI);
            for n in 2..=6 {
                let op = rotated_observable(LocalAngle::from_radians(theta))
                    .tensor_power(n)
                    .unwrap();
                let e = op.expectation(&ghz_state(n).unwrap()).unwrap();
                assert!((e.re - (n as f64 * theta).cos()).abs() < 1e-10);
                assert!(e.im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn noisy_ghz_limits_and_spectrum() {
        let pure = noisy_ghz_dense(NoisyState::new(3, 0.0).unwrap()).unwrap();
        let proj = DenseOperator::projector(&ghz_state(3).unwrap());
        assert!(approx_op(&pure, &proj, 1e-15));

        let mixed = noisy_ghz_dense(NoisyState::new(3, 1.0).unwrap()).unwrap();
        let id = DenseOperator::identity(3).unwrap().scaled(1.0 / 8.0);
        assert!(approx_op(&mixed, &id, 1e-15));

        let half = noisy_ghz_dense(NoisyState::new(3, 0.5).unwrap()).unwrap();
        let eig = half.eigenvalues_hermitian();
        assert!((eig[7] - (0.5 + 0.5 / 8.0)).abs() < 1e-12);
        for &v in &eig[..7] {
            assert!((v - 0.5 / 8.0).abs() < 1e-12);
        }
        assert!((half.trace().re - 1.0).abs() < 1e-12);
        assert!(NoisyState::new(3, 1.5).is_err());
    }

    #[test]
    fn partial_trace_cases() {
        let id = DenseOperator::identity(4).unwrap().scaled(1.0 / 16.0);
        let r = partial_trace_first_k(&id, 3).unwrap();
        let want = DenseOperator::identity(1).unwrap().scaled(0.5);
        assert!(approx_op(&r, &want, 1e-15));

        let ghz = DenseOperator::projector(&ghz_state(2).unwrap());
        let r = partial_trace_first_k(&ghz, 1).unwrap();
        assert!(approx_op(&r, &want, 1e-15));

        // Trace preservation on a random Hermitian operator, against a direct
        // diagonal sum.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let raw = DMatrix::from_fn(8, 8, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let h = DenseOperator::from_matrix(hermitian_part(&raw)).unwrap();
        let direct: f64 = (0..8).map(|i| h.matrix()[(i, i)].re).sum();
        for k in 1..3 {
            let r = partial_trace_first_k(&h, k).unwrap();
            assert!((r.trace().re - direct).abs() < 1e-12);
            assert!(r.is_hermitian(1e-12));
        }
        assert!(partial_trace_first_k(&h, 0).is_err());
        assert!(partial_trace_first_k(&h, 3).is_err());
    }

    #[test]
    fn z_rotation_rotates_observables() {
        let delta = 0.37;
        let u = z_rotation(delta);
        let m = rotated_observable(LocalAngle::from_radians(0.2));
        let conj = u.mul(&m).unwrap().mul(&u.adjoint()).unwrap();
        let want = rotated_observable(LocalAngle::from_radians(0.2 + delta));
        assert!(approx_op(&conj, &want, 1e-15));
    }

    #[test]
    fn size_guard() {
        assert!(matches!(
            DenseOperator::identity(17),
            Err(Error::SizeGuard { .. })
        ));
        assert!(StateVector::basis(17, 0).unwrap_err().is_guard());
    }
}
