//! Minimal dense quantum-state engine for up to four polarization qubits.
//!
//! States are complex amplitude vectors indexed so that bit `k` of the
//! index, counted from the most significant end, is the outcome of qubit
//! `k` (`0` = H, `1` = V). That makes the integer index read like the ket:
//! `|HVH⟩` is index `0b010`. Everything here is value-semantic: operations
//! return fresh states and never mutate their inputs.

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

/// Complex amplitude of a basis component.
pub type Amplitude = Complex64;

/// Largest register this engine supports.
pub const MAX_QUBITS: usize = 4;

/// Tolerance for algebraic identities (normalization, unitarity, traces).
pub const ALGEBRAIC_TOL: f64 = 1e-12;

/// Tolerance below which eigenvalues of a density operator count as negative.
pub const EIGENVALUE_TOL: f64 = 1e-10;

/// Squared-norm threshold under which a postselection is impossible.
pub const SURVIVAL_TOL: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum QsimError {
    #[error("state of {requested} qubits exceeds the {MAX_QUBITS}-qubit limit")]
    TooManyQubits { requested: usize },
    #[error("qubit index {qubit} out of range for a {num_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("operand sizes differ: {left} vs {right} qubits")]
    SizeMismatch { left: usize, right: usize },
    #[error("postselection leaves zero surviving amplitude")]
    ImpossiblePostselection,
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
}

/// Bit of `index` that belongs to `qubit` under the MSB-first convention.
#[inline]
fn index_bit(index: usize, qubit: usize, num_qubits: usize) -> usize {
    (index >> (num_qubits - 1 - qubit)) & 1
}

/// Normalized pure state of 1..=4 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: Vec<Amplitude>,
}

impl PureState {
    /// Builds a state from raw amplitudes. The length fixes the qubit count
    /// (it must be a power of two between 2 and 16) and the vector must be
    /// normalized to within [`ALGEBRAIC_TOL`]. NaN or infinite entries are
    /// rejected.
    pub fn new(amplitudes: Vec<Amplitude>) -> Result<Self, QsimError> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(QsimError::InvalidState(format!(
                "amplitude vector length {dim} is not a power of two >= 2"
            )));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(QsimError::TooManyQubits {
                requested: num_qubits,
            });
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QsimError::InvalidState(
                "non-finite amplitude".to_string(),
            ));
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(QsimError::InvalidState(format!(
                "squared norm {norm_sq} differs from 1 beyond tolerance"
            )));
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Like [`PureState::new`] but rescales the vector to unit norm first.
    pub fn normalized(mut amplitudes: Vec<Amplitude>) -> Result<Self, QsimError> {
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sq.is_finite() || norm_sq < SURVIVAL_TOL {
            return Err(QsimError::InvalidState(
                "cannot normalize a (near-)zero vector".to_string(),
            ));
        }
        let inv = 1.0 / norm_sq.sqrt();
        for a in &mut amplitudes {
            *a *= inv;
        }
        Self::new(amplitudes)
    }

    /// Computational basis state `|index⟩` of `num_qubits` qubits.
    pub fn basis_state(num_qubits: usize, index: usize) -> Result<Self, QsimError> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(QsimError::TooManyQubits {
                requested: num_qubits,
            });
        }
        let dim = 1 << num_qubits;
        if index >= dim {
            return Err(QsimError::InvalidState(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![Amplitude::ZERO; dim];
        amplitudes[index] = Amplitude::ONE;
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Single-qubit `|H⟩`.
    pub fn ket_h() -> Self {
        Self::basis_state(1, 0).expect("1-qubit basis state")
    }

    /// Single-qubit `|V⟩`.
    pub fn ket_v() -> Self {
        Self::basis_state(1, 1).expect("1-qubit basis state")
    }

    /// Single-qubit `|+⟩ = (|H⟩+|V⟩)/√2`.
    pub fn ket_plus() -> Self {
        let a = Amplitude::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(vec![a, a]).expect("normalized by construction")
    }

    /// Single-qubit `|−⟩ = (|H⟩−|V⟩)/√2`.
    pub fn ket_minus() -> Self {
        let a = Amplitude::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(vec![a, -a]).expect("normalized by construction")
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amplitudes
    }

    /// Kronecker product with `self`'s qubits as the more significant index
    /// bits, so `a.tensor(b)` reads `|a b⟩`.
    pub fn tensor(&self, other: &PureState) -> Result<PureState, QsimError> {
        let total = self.num_qubits + other.num_qubits;
        if total > MAX_QUBITS {
            return Err(QsimError::TooManyQubits { requested: total });
        }
        let mut amplitudes = Vec::with_capacity(1 << total);
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        PureState::normalized(amplitudes)
    }

    /// Applies a single-qubit unitary to the designated tensor factor.
    pub fn apply_single_qubit(
        &self,
        gate: &Unitary2,
        qubit: usize,
    ) -> Result<PureState, QsimError> {
        if qubit >= self.num_qubits {
            return Err(QsimError::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        let stride = 1 << (self.num_qubits - 1 - qubit);
        let m = gate.matrix();
        let mut out = self.amplitudes.clone();
        for base in 0..self.dim() {
            if base & stride == 0 {
                let hi = base | stride;
                let a = self.amplitudes[base];
                let b = self.amplitudes[hi];
                out[base] = m[0][0] * a + m[0][1] * b;
                out[hi] = m[1][0] * a + m[1][1] * b;
            }
        }
        Ok(PureState {
            num_qubits: self.num_qubits,
            amplitudes: out,
        })
    }

    /// Zeroes every amplitude whose bits on `qubits` match none of the kept
    /// patterns, then renormalizes. Pattern bit `i` (MSB-first across the
    /// `qubits` slice) is the required outcome of `qubits[i]`. Returns the
    /// renormalized state together with the pre-renormalization squared norm.
    /// The postselected qubits remain part of the state.
    pub fn postselect(
        &self,
        qubits: &[usize],
        kept_outcomes: &[usize],
    ) -> Result<(PureState, f64), QsimError> {
        if kept_outcomes.is_empty() {
            return Err(QsimError::InvalidState(
                "no kept outcomes given".to_string(),
            ));
        }
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.num_qubits {
                return Err(QsimError::QubitOutOfRange {
                    qubit: q,
                    num_qubits: self.num_qubits,
                });
            }
            if qubits[..i].contains(&q) {
                return Err(QsimError::InvalidState(format!(
                    "duplicate qubit {q} in postselection"
                )));
            }
        }
        let mut kept = self.amplitudes.clone();
        let mut survived = 0.0;
        for (index, amp) in kept.iter_mut().enumerate() {
            let mut pattern = 0usize;
            for &q in qubits {
                pattern = (pattern << 1) | index_bit(index, q, self.num_qubits);
            }
            if kept_outcomes.contains(&pattern) {
                survived += amp.norm_sqr();
            } else {
                *amp = Amplitude::ZERO;
            }
        }
        if survived < SURVIVAL_TOL {
            return Err(QsimError::ImpossiblePostselection);
        }
        Ok((PureState::normalized(kept)?, survived))
    }

    /// Projects one qubit onto `|+⟩` or `|−⟩` and removes it from the state.
    /// Returns the shrunken, renormalized state and the projection
    /// probability. Not defined on single-qubit states, which would shrink
    /// to nothing.
    pub fn project_diagonal(
        &self,
        qubit: usize,
        sign: DiagonalSign,
    ) -> Result<(PureState, f64), QsimError> {
        if qubit >= self.num_qubits {
            return Err(QsimError::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        if self.num_qubits == 1 {
            return Err(QsimError::InvalidState(
                "projecting the only qubit would leave an empty state".to_string(),
            ));
        }
        let sign_factor = match sign {
            DiagonalSign::Plus => 1.0,
            DiagonalSign::Minus => -1.0,
        };
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let stride = 1 << (self.num_qubits - 1 - qubit);
        let mut reduced = vec![Amplitude::ZERO; self.dim() / 2];
        for index in 0..self.dim() {
            let weight = if index & stride == 0 { 1.0 } else { sign_factor };
            // Drop the projected qubit's bit from the index.
            let high = (index >> (self.num_qubits - qubit)) << (self.num_qubits - 1 - qubit);
            let low = index & (stride - 1);
            reduced[high | low] += self.amplitudes[index] * (weight * inv_sqrt2);
        }
        let survived: f64 = reduced.iter().map(|a| a.norm_sqr()).sum();
        if survived < SURVIVAL_TOL {
            return Err(QsimError::ImpossiblePostselection);
        }
        Ok((PureState::normalized(reduced)?, survived))
    }

    /// Measurement distribution over all `2^n` outcomes. Outcome index bit
    /// `k` (MSB-first) is qubit `k`'s result: `0` = H or +, `1` = V or −.
    pub fn outcome_distribution(&self, basis: &MeasurementBasis) -> Result<Vec<f64>, QsimError> {
        if basis.len() != self.num_qubits {
            return Err(QsimError::SizeMismatch {
                left: self.num_qubits,
                right: basis.len(),
            });
        }
        let mut rotated = self.clone();
        let hadamard = Unitary2::hadamard();
        for (qubit, tag) in basis.tags().iter().enumerate() {
            if *tag == BasisTag::Diagonal {
                rotated = rotated.apply_single_qubit(&hadamard, qubit)?;
            }
        }
        Ok(rotated.amplitudes.iter().map(|a| a.norm_sqr()).collect())
    }

    /// Samples one outcome by inverse-CDF over ascending outcome index, so a
    /// fixed uniform stream always reproduces the same trace.
    pub fn sample_outcome(
        &self,
        basis: &MeasurementBasis,
        rng: &mut impl Rng,
    ) -> Result<usize, QsimError> {
        let distribution = self.outcome_distribution(basis)?;
        let u: f64 = rng.gen();
        let mut cumulative = 0.0;
        let mut last_support = 0;
        for (outcome, p) in distribution.iter().enumerate() {
            if *p > 0.0 {
                last_support = outcome;
            }
            cumulative += p;
            if u < cumulative {
                return Ok(outcome);
            }
        }
        // Rounding left the CDF a hair short of 1; land on the last outcome
        // that has support.
        Ok(last_support)
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &PureState) -> Result<Amplitude, QsimError> {
        if self.num_qubits != other.num_qubits {
            return Err(QsimError::SizeMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &PureState) -> Result<f64, QsimError> {
        Ok(self.inner_product(other)?.norm_sqr())
    }

    /// Checks ray equality: some unit-modulus scalar `c` makes
    /// `‖self − c·other‖ < tol`. `c` is read off the largest amplitude.
    pub fn equals_up_to_phase(&self, other: &PureState, tol: f64) -> bool {
        if self.num_qubits != other.num_qubits {
            return false;
        }
        let (k, largest) = self
            .amplitudes
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .expect("states are non-empty");
        if other.amplitudes[k].norm_sqr() < SURVIVAL_TOL {
            return false;
        }
        let c = largest / other.amplitudes[k];
        if (c.norm() - 1.0).abs() > tol {
            return false;
        }
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - c * b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            < tol
    }
}

/// Which single-qubit projector [`PureState::project_diagonal`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalSign {
    Plus,
    Minus,
}

/// Measurement basis tag for one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisTag {
    /// `{|H⟩, |V⟩}`
    Computational,
    /// `{|+⟩, |−⟩}`
    Diagonal,
}

/// Per-qubit choice of measurement basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementBasis(Vec<BasisTag>);

impl MeasurementBasis {
    pub fn new(tags: Vec<BasisTag>) -> Self {
        Self(tags)
    }

    pub fn all_computational(num_qubits: usize) -> Self {
        Self(vec![BasisTag::Computational; num_qubits])
    }

    pub fn all_diagonal(num_qubits: usize) -> Self {
        Self(vec![BasisTag::Diagonal; num_qubits])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tags(&self) -> &[BasisTag] {
        &self.0
    }
}

/// 2×2 unitary acting on one polarization qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary2 {
    matrix: [[Amplitude; 2]; 2],
}

impl Unitary2 {
    /// Validates `U†U = I` to within [`ALGEBRAIC_TOL`].
    pub fn new(matrix: [[Amplitude; 2]; 2]) -> Result<Self, QsimError> {
        for row in &matrix {
            for entry in row {
                if !entry.re.is_finite() || !entry.im.is_finite() {
                    return Err(QsimError::InvalidOperator(
                        "non-finite matrix entry".to_string(),
                    ));
                }
            }
        }
        let candidate = Self { matrix };
        let product = candidate.dagger().compose(&candidate);
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { Amplitude::ONE } else { Amplitude::ZERO };
                if (product.matrix[i][j] - expected).norm() > ALGEBRAIC_TOL {
                    return Err(QsimError::InvalidOperator(
                        "matrix is not unitary".to_string(),
                    ));
                }
            }
        }
        Ok(candidate)
    }

    pub fn identity() -> Self {
        Self {
            matrix: [
                [Amplitude::ONE, Amplitude::ZERO],
                [Amplitude::ZERO, Amplitude::ONE],
            ],
        }
    }

    /// `diag(top, bottom)`; both entries must have unit modulus.
    pub fn phase_diagonal(top: Amplitude, bottom: Amplitude) -> Result<Self, QsimError> {
        Self::new([
            [top, Amplitude::ZERO],
            [Amplitude::ZERO, bottom],
        ])
    }

    pub fn hadamard() -> Self {
        let h = Amplitude::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            matrix: [[h, h], [h, -h]],
        }
    }

    pub fn matrix(&self) -> &[[Amplitude; 2]; 2] {
        &self.matrix
    }

    /// Matrix product `self · other` (so `other` acts first on a ket).
    pub fn compose(&self, other: &Unitary2) -> Unitary2 {
        let a = &self.matrix;
        let b = &other.matrix;
        let mut out = [[Amplitude::ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Unitary2 { matrix: out }
    }

    pub fn dagger(&self) -> Unitary2 {
        let m = &self.matrix;
        Unitary2 {
            matrix: [
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ],
        }
    }

    /// True when `self = c · other` for some unit-modulus scalar `c`.
    pub fn equals_up_to_phase(&self, other: &Unitary2, tol: f64) -> bool {
        let (mut c, mut best) = (Amplitude::ONE, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                let mag = other.matrix[i][j].norm_sqr();
                if mag > best {
                    best = mag;
                    c = self.matrix[i][j] / other.matrix[i][j];
                }
            }
        }
        if (c.norm() - 1.0).abs() > tol {
            return false;
        }
        let mut err = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                err += (self.matrix[i][j] - c * other.matrix[i][j]).norm_sqr();
            }
        }
        err.sqrt() < tol
    }
}

/// Mixed state of up to four qubits, stored as a dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    num_qubits: usize,
    matrix: Vec<Amplitude>,
}

impl DensityOperator {
    /// Validates hermiticity and unit trace to within [`ALGEBRAIC_TOL`] and
    /// eigenvalue positivity down to `-`[`EIGENVALUE_TOL`].
    pub fn new(num_qubits: usize, matrix: Vec<Amplitude>) -> Result<Self, QsimError> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(QsimError::TooManyQubits {
                requested: num_qubits,
            });
        }
        let dim = 1 << num_qubits;
        if matrix.len() != dim * dim {
            return Err(QsimError::InvalidOperator(format!(
                "matrix has {} entries, expected {}",
                matrix.len(),
                dim * dim
            )));
        }
        if matrix.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QsimError::InvalidOperator(
                "non-finite matrix entry".to_string(),
            ));
        }
        let mut trace = Amplitude::ZERO;
        for i in 0..dim {
            trace += matrix[i * dim + i];
            for j in 0..dim {
                let delta = (matrix[i * dim + j] - matrix[j * dim + i].conj()).norm();
                if delta > ALGEBRAIC_TOL {
                    return Err(QsimError::InvalidOperator(
                        "matrix is not Hermitian".to_string(),
                    ));
                }
            }
        }
        if (trace - Amplitude::ONE).norm() > ALGEBRAIC_TOL {
            return Err(QsimError::InvalidOperator(format!(
                "trace {trace} differs from 1"
            )));
        }
        let eigen = nalgebra::DMatrix::from_row_slice(dim, dim, &matrix).symmetric_eigen();
        if let Some(min) = eigen
            .eigenvalues
            .iter()
            .copied()
            .min_by(f64::total_cmp)
        {
            if min < -EIGENVALUE_TOL {
                return Err(QsimError::InvalidOperator(format!(
                    "negative eigenvalue {min}"
                )));
            }
        }
        Ok(Self { num_qubits, matrix })
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(state: &PureState) -> Self {
        let dim = state.dim();
        let mut matrix = Vec::with_capacity(dim * dim);
        for a in state.amplitudes() {
            for b in state.amplitudes() {
                matrix.push(a * b.conj());
            }
        }
        Self {
            num_qubits: state.num_qubits(),
            matrix,
        }
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(num_qubits: usize) -> Result<Self, QsimError> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(QsimError::TooManyQubits {
                requested: num_qubits,
            });
        }
        let dim = 1 << num_qubits;
        let mut matrix = vec![Amplitude::ZERO; dim * dim];
        let weight = Amplitude::new(1.0 / dim as f64, 0.0);
        for i in 0..dim {
            matrix[i * dim + i] = weight;
        }
        Ok(Self { num_qubits, matrix })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn entry(&self, row: usize, col: usize) -> Amplitude {
        self.matrix[row * self.dim() + col]
    }

    pub fn matrix(&self) -> &[Amplitude] {
        &self.matrix
    }

    /// Convex combination `w·self + (1−w)·other`, revalidated on exit.
    pub fn mix(&self, other: &DensityOperator, weight_self: f64) -> Result<Self, QsimError> {
        if self.num_qubits != other.num_qubits {
            return Err(QsimError::SizeMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        if !(0.0..=1.0).contains(&weight_self) {
            return Err(QsimError::InvalidOperator(format!(
                "mixing weight {weight_self} outside [0,1]"
            )));
        }
        let matrix = self
            .matrix
            .iter()
            .zip(&other.matrix)
            .map(|(a, b)| a * weight_self + b * (1.0 - weight_self))
            .collect();
        Self::new(self.num_qubits, matrix)
    }

    /// `U ρ U†` for a single-qubit unitary on `qubit`.
    pub fn apply_single_qubit(
        &self,
        gate: &Unitary2,
        qubit: usize,
    ) -> Result<DensityOperator, QsimError> {
        if qubit >= self.num_qubits {
            return Err(QsimError::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        let dim = self.dim();
        let stride = 1 << (self.num_qubits - 1 - qubit);
        let m = gate.matrix();
        // Left-multiply by U (acts on the row index) ...
        let mut half = self.matrix.clone();
        for row in 0..dim {
            if row & stride == 0 {
                let hi = row | stride;
                for col in 0..dim {
                    let a = self.matrix[row * dim + col];
                    let b = self.matrix[hi * dim + col];
                    half[row * dim + col] = m[0][0] * a + m[0][1] * b;
                    half[hi * dim + col] = m[1][0] * a + m[1][1] * b;
                }
            }
        }
        // ... then right-multiply by U† (acts on the column index).
        let mut out = half.clone();
        for col in 0..dim {
            if col & stride == 0 {
                let hi = col | stride;
                for row in 0..dim {
                    let a = half[row * dim + col];
                    let b = half[row * dim + hi];
                    out[row * dim + col] = a * m[0][0].conj() + b * m[0][1].conj();
                    out[row * dim + hi] = a * m[1][0].conj() + b * m[1][1].conj();
                }
            }
        }
        Ok(DensityOperator {
            num_qubits: self.num_qubits,
            matrix: out,
        })
    }

    /// Measurement distribution in the given per-qubit basis; same outcome
    /// indexing as [`PureState::outcome_distribution`].
    pub fn outcome_distribution(&self, basis: &MeasurementBasis) -> Result<Vec<f64>, QsimError> {
        if basis.len() != self.num_qubits {
            return Err(QsimError::SizeMismatch {
                left: self.num_qubits,
                right: basis.len(),
            });
        }
        let mut rotated = self.clone();
        let hadamard = Unitary2::hadamard();
        for (qubit, tag) in basis.tags().iter().enumerate() {
            if *tag == BasisTag::Diagonal {
                rotated = rotated.apply_single_qubit(&hadamard, qubit)?;
            }
        }
        let dim = rotated.dim();
        Ok((0..dim).map(|i| rotated.matrix[i * dim + i].re).collect())
    }
}
