//! The "Guess my Number" game domain: apple variations and their parity,
//! the per-party phase rotations with their waveplate realizations, GHZ
//! preparation (direct and through the photonic parity-check pipeline), and
//! one quantum round of play.

use rand::Rng;
use thiserror::Error;

use crate::qsim::{
    Amplitude, DensityOperator, DiagonalSign, MeasurementBasis, PureState, QsimError, Unitary2,
};

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("apple count must be 0..=3 half-units, got {0}")]
    InvalidHalfUnits(u8),
    #[error("apple counts ({0},{1},{2}) half-units do not sum to a whole number of apples")]
    NonIntegerTotal(u8, u8, u8),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

/// Number of apples a contestant received, stored in half-apple units:
/// `0 ↔ 0`, `1 ↔ 1/2`, `2 ↔ 1`, `3 ↔ 3/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AppleCount(u8);

impl AppleCount {
    pub const ZERO: AppleCount = AppleCount(0);
    pub const HALF: AppleCount = AppleCount(1);
    pub const ONE: AppleCount = AppleCount(2);
    pub const THREE_HALVES: AppleCount = AppleCount(3);

    pub fn new(half_units: u8) -> Result<Self, ProtocolError> {
        if half_units > 3 {
            return Err(ProtocolError::InvalidHalfUnits(half_units));
        }
        Ok(AppleCount(half_units))
    }

    pub fn half_units(self) -> u8 {
        self.0
    }

    /// All four values in ascending order.
    pub fn all() -> [AppleCount; 4] {
        [Self::ZERO, Self::HALF, Self::ONE, Self::THREE_HALVES]
    }
}

impl std::fmt::Display for AppleCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            0 => write!(f, "0"),
            1 => write!(f, "1/2"),
            2 => write!(f, "1"),
            _ => write!(f, "3/2"),
        }
    }
}

/// A valid distribution of apples: the three counts sum to a whole number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AppleVariation {
    n_a: AppleCount,
    n_b: AppleCount,
    n_c: AppleCount,
}

impl AppleVariation {
    pub fn new(
        n_a: AppleCount,
        n_b: AppleCount,
        n_c: AppleCount,
    ) -> Result<Self, ProtocolError> {
        let total = n_a.half_units() + n_b.half_units() + n_c.half_units();
        if !total.is_multiple_of(2) {
            return Err(ProtocolError::NonIntegerTotal(
                n_a.half_units(),
                n_b.half_units(),
                n_c.half_units(),
            ));
        }
        Ok(Self { n_a, n_b, n_c })
    }

    pub fn counts(&self) -> [AppleCount; 3] {
        [self.n_a, self.n_b, self.n_c]
    }

    pub fn alice(&self) -> AppleCount {
        self.n_a
    }

    pub fn bob(&self) -> AppleCount {
        self.n_b
    }

    pub fn charlie(&self) -> AppleCount {
        self.n_c
    }

    /// Parity of the total number of apples.
    pub fn parity(&self) -> Parity {
        let total_half_units =
            self.n_a.half_units() + self.n_b.half_units() + self.n_c.half_units();
        if (total_half_units / 2).is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Whether the apple total is even or odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// The game's encoding: 0 means even, 1 means odd.
    pub fn bit(self) -> u8 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Parity {
        if bit.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Parity::Even => write!(f, "even"),
            Parity::Odd => write!(f, "odd"),
        }
    }
}

/// The three bits handed to the host after a quantum round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnswerBits {
    pub alice: u8,
    pub bob: u8,
    pub charlie: u8,
}

impl AnswerBits {
    /// Team answer: sum of the three bits modulo two.
    pub fn team_parity(&self) -> Parity {
        Parity::from_bit(self.alice ^ self.bob ^ self.charlie)
    }

    /// Packs the bits as a diagonal-basis outcome index (Alice most
    /// significant), matching the qsim outcome convention.
    pub fn outcome_index(&self) -> usize {
        ((self.alice as usize) << 2) | ((self.bob as usize) << 1) | self.charlie as usize
    }

    pub fn from_outcome_index(outcome: usize) -> Self {
        AnswerBits {
            alice: ((outcome >> 2) & 1) as u8,
            bob: ((outcome >> 1) & 1) as u8,
            charlie: (outcome & 1) as u8,
        }
    }
}

/// Kind of birefringent plate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlateKind {
    HalfWave,
    QuarterWave,
}

/// One plate with its fast axis angle in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waveplate {
    pub kind: PlateKind,
    pub angle: f64,
}

/// An ordered stack of at most two plates; the photon traverses them in
/// list order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WaveplateStack(Vec<Waveplate>);

impl WaveplateStack {
    pub fn plates(&self) -> &[Waveplate] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Product of the plates' Jones matrices in traversal order (the first
    /// plate in the list acts first on the photon).
    pub fn jones_product(&self) -> Unitary2 {
        self.0.iter().fold(Unitary2::identity(), |acc, plate| {
            jones_matrix(plate.kind, plate.angle).compose(&acc)
        })
    }
}

/// All 32 valid apple variations in lexicographic order of
/// `(n_a, n_b, n_c)` half-units.
pub fn enumerate_valid_variations() -> Vec<AppleVariation> {
    let mut variations = Vec::with_capacity(32);
    for a in AppleCount::all() {
        for b in AppleCount::all() {
            for c in AppleCount::all() {
                if let Ok(v) = AppleVariation::new(a, b, c) {
                    variations.push(v);
                }
            }
        }
    }
    variations
}

/// The contestant's phase rotation `diag(1, e^{iπn})`. For `h` half-units
/// the V phase is exactly `i^h` on the set `{1, i, −1, −i}`.
pub fn rotation(n: AppleCount) -> Unitary2 {
    let phase = match n.half_units() {
        0 => Amplitude::ONE,
        1 => Amplitude::I,
        2 => -Amplitude::ONE,
        _ => -Amplitude::I,
    };
    Unitary2::phase_diagonal(Amplitude::ONE, phase).expect("unit phases are unitary")
}

/// Jones matrix of a waveplate. Conventions:
/// `HWP(θ) = [[cos2θ, sin2θ], [sin2θ, −cos2θ]]` and
/// `QWP(θ) = rot(θ)·diag(1, i)·rot(−θ)` with `rot` the real rotation.
pub fn jones_matrix(kind: PlateKind, angle: f64) -> Unitary2 {
    match kind {
        PlateKind::HalfWave => {
            let (sin, cos) = (2.0 * angle).sin_cos();
            Unitary2::new([
                [Amplitude::new(cos, 0.0), Amplitude::new(sin, 0.0)],
                [Amplitude::new(sin, 0.0), Amplitude::new(-cos, 0.0)],
            ])
            .expect("reflection matrix is unitary")
        }
        PlateKind::QuarterWave => {
            let (sin, cos) = angle.sin_cos();
            let (c2, s2, sc) = (cos * cos, sin * sin, sin * cos);
            Unitary2::new([
                [
                    Amplitude::new(c2, s2),
                    Amplitude::new(sc, -sc),
                ],
                [
                    Amplitude::new(sc, -sc),
                    Amplitude::new(s2, c2),
                ],
            ])
            .expect("retarder matrix is unitary")
        }
    }
}

/// The hardware realization of [`rotation`]: nothing for 0 apples, a QWP at
/// 0° for 1/2, an HWP at 0° for 1, and HWP then QWP (both at 0°) for 3/2.
/// The stack's Jones product equals the rotation up to a global phase.
pub fn waveplate_stack(n: AppleCount) -> WaveplateStack {
    let hwp = Waveplate {
        kind: PlateKind::HalfWave,
        angle: 0.0,
    };
    let qwp = Waveplate {
        kind: PlateKind::QuarterWave,
        angle: 0.0,
    };
    WaveplateStack(match n.half_units() {
        0 => vec![],
        1 => vec![qwp],
        2 => vec![hwp],
        _ => vec![hwp, qwp],
    })
}

/// `(|HHH⟩ + |VVV⟩)/√2`.
pub fn prepare_ghz_direct() -> PureState {
    let a = Amplitude::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut amps = vec![Amplitude::ZERO; 8];
    amps[0] = a;
    amps[7] = a;
    PureState::new(amps).expect("normalized by construction")
}

/// `(|HHH⟩ − |VVV⟩)/√2`, the state the rotations produce on odd totals.
pub fn prepare_ghz_perp() -> PureState {
    let a = Amplitude::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut amps = vec![Amplitude::ZERO; 8];
    amps[0] = a;
    amps[7] = -a;
    PureState::new(amps).expect("normalized by construction")
}

/// Result of the two-pair fusion pipeline.
#[derive(Debug, Clone)]
pub struct PbsPreparation {
    /// Three-photon state on modes (1, 2, 3).
    pub state: PureState,
    /// Success probability of the parity-check postselection.
    pub pbs_probability: f64,
    /// Success probability of the 45° trigger projection.
    pub trigger_probability: f64,
}

/// Builds the GHZ state the way the experiment does: two Bell pairs, a
/// polarizing-beam-splitter parity check on modes 2 and 4 that keeps only
/// the both-H / both-V components, then a 45° projection of the mode-4
/// trigger photon, which is removed from the state.
pub fn prepare_ghz_via_pbs() -> Result<PbsPreparation, ProtocolError> {
    let a = Amplitude::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let pair = PureState::new(vec![a, Amplitude::ZERO, Amplitude::ZERO, a])?;
    let four_modes = pair.tensor(&pair)?;
    // Modes are numbered 1..4, qubits 0..3.
    let (fused, pbs_probability) = four_modes.postselect(&[1, 3], &[0b00, 0b11])?;
    let (state, trigger_probability) = fused.project_diagonal(3, DiagonalSign::Plus)?;
    Ok(PbsPreparation {
        state,
        pbs_probability,
        trigger_probability,
    })
}

/// The analytic effect of the three rotations on the GHZ state: the GHZ
/// state itself when the apple total is even, its phase-flipped partner
/// when odd. No numerics involved.
pub fn ghz_transform_oracle(v: &AppleVariation) -> PureState {
    match v.parity() {
        Parity::Even => prepare_ghz_direct(),
        Parity::Odd => prepare_ghz_perp(),
    }
}

/// Measurement distribution of one round: rotations applied to the given
/// 3-qubit state, all parties measuring diagonally.
pub fn rotated_diagonal_distribution(
    v: &AppleVariation,
    state: &PureState,
) -> Result<Vec<f64>, ProtocolError> {
    let rotated = apply_rotations(v, state)?;
    Ok(rotated.outcome_distribution(&MeasurementBasis::all_diagonal(3))?)
}

/// Applies `rotation(n_j)` to qubit `j` for the three parties.
pub fn apply_rotations(
    v: &AppleVariation,
    state: &PureState,
) -> Result<PureState, ProtocolError> {
    let mut rotated = state.clone();
    for (qubit, count) in v.counts().into_iter().enumerate() {
        rotated = rotated.apply_single_qubit(&rotation(count), qubit)?;
    }
    Ok(rotated)
}

/// Density-operator counterpart of [`apply_rotations`].
pub fn apply_rotations_density(
    v: &AppleVariation,
    rho: &DensityOperator,
) -> Result<DensityOperator, ProtocolError> {
    let mut rotated = rho.clone();
    for (qubit, count) in v.counts().into_iter().enumerate() {
        rotated = rotated.apply_single_qubit(&rotation(count), qubit)?;
    }
    Ok(rotated)
}

/// Plays one quantum round: each party rotates by their apple count,
/// measures diagonally (`+ ↦ 0`, `− ↦ 1`), and the team answers with the
/// XOR of the three bits.
pub fn quantum_round(
    v: &AppleVariation,
    state: &PureState,
    rng: &mut impl Rng,
) -> Result<(AnswerBits, Parity), ProtocolError> {
    let rotated = apply_rotations(v, state)?;
    let outcome = rotated.sample_outcome(&MeasurementBasis::all_diagonal(3), rng)?;
    let bits = AnswerBits::from_outcome_index(outcome);
    let team = bits.team_parity();
    Ok((bits, team))
}
