//! Coherent-amplitude algebra for the signature optics.
//!
//! Every state in the protocol is a coherent state, and coherent states stay
//! coherent under beam splitters, phase shifts and loss. The whole optical
//! layer is therefore linear algebra over single complex amplitudes.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{check_unit, Result};

/// Complex amplitude of a single coherent mode. `|amplitude|²` is the mean
/// photon number.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ComplexAmplitude {
    pub re: f64,
    pub im: f64,
}

impl ComplexAmplitude {
    pub const ZERO: Self = Self { re: 0.0, im: 0.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    /// Real amplitude with mean photon number `mean_photons`.
    pub fn real_with_intensity(mean_photons: f64) -> Self {
        Self::new(mean_photons.sqrt(), 0.0)
    }

    pub fn intensity(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    pub fn scale(self, factor: f64) -> Self {
        Self::new(self.re * factor, self.im * factor)
    }

    /// Multiplication by `i`, exact in floating point.
    pub fn rotate_quarter(self) -> Self {
        Self::new(-self.im, self.re)
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl Add for ComplexAmplitude {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for ComplexAmplitude {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Neg for ComplexAmplitude {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

impl Mul for ComplexAmplitude {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl From<Complex64> for ComplexAmplitude {
    fn from(c: Complex64) -> Self {
        Self::new(c.re, c.im)
    }
}

impl From<ComplexAmplitude> for Complex64 {
    fn from(a: ComplexAmplitude) -> Self {
        Complex64::new(a.re, a.im)
    }
}

/// One of the four signature phases `index · π/2`, i.e. `b ∈ {1, i, −1, −i}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhaseSymbol(u8);

impl PhaseSymbol {
    pub const ZERO: Self = Self(0);
    pub const HALF_PI: Self = Self(1);
    pub const PI: Self = Self(2);
    pub const THREE_HALF_PI: Self = Self(3);

    pub const ALL: [Self; 4] = [Self::ZERO, Self::HALF_PI, Self::PI, Self::THREE_HALF_PI];

    /// Returns `None` unless `index < 4`.
    pub fn new(index: u8) -> Option<Self> {
        (index < 4).then_some(Self(index))
    }

    /// Wraps any integer onto the four phases.
    pub fn wrapping(index: usize) -> Self {
        Self((index % 4) as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn radians(self) -> f64 {
        self.0 as f64 * std::f64::consts::FRAC_PI_2
    }

    /// The phase factor `e^{i·index·π/2}`.
    pub fn unit(self) -> ComplexAmplitude {
        apply_phase(ComplexAmplitude::new(1.0, 0.0), self)
    }

    /// The phase shifted by `π`.
    pub fn opposite(self) -> Self {
        self.shifted(2)
    }

    pub fn shifted(self, quarter_turns: u8) -> Self {
        Self((self.0 + quarter_turns) % 4)
    }
}

impl fmt::Display for PhaseSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => f.write_str("0"),
            1 => f.write_str("π/2"),
            2 => f.write_str("π"),
            _ => f.write_str("3π/2"),
        }
    }
}

/// A 50:50 beam splitter with the `(1, 1; 1, −1)/√2` convention.
pub fn beam_splitter(
    a: ComplexAmplitude,
    b: ComplexAmplitude,
) -> (ComplexAmplitude, ComplexAmplitude) {
    let k = std::f64::consts::FRAC_1_SQRT_2;
    ((a + b).scale(k), (a - b).scale(k))
}

/// Multiplies `a` by `e^{i·index·π/2}`. Quarter turns are applied exactly.
pub fn apply_phase(a: ComplexAmplitude, s: PhaseSymbol) -> ComplexAmplitude {
    (0..s.0).fold(a, |acc, _| acc.rotate_quarter())
}

/// Attenuates a coherent amplitude to a fraction `transmittance` of its
/// intensity.
pub fn apply_loss(a: ComplexAmplitude, transmittance: f64) -> Result<ComplexAmplitude> {
    let t = check_unit("transmittance", transmittance)?;
    Ok(a.scale(t.sqrt()))
}

/// Converts an insertion loss in dB to a linear transmittance.
pub fn db_to_transmittance(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Outputs of the four-beam-splitter symmetrizing multiport.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiportOutput {
    pub bob_signal: ComplexAmplitude,
    pub charlie_signal: ComplexAmplitude,
    pub bob_null: ComplexAmplitude,
    pub charlie_null: ComplexAmplitude,
}

impl MultiportOutput {
    pub fn total_intensity(&self) -> f64 {
        self.bob_signal.intensity()
            + self.charlie_signal.intensity()
            + self.bob_null.intensity()
            + self.charlie_null.intensity()
    }
}

/// `|a⟩_B ⊗ |b⟩_C ⊗ |0⟩ ⊗ |0⟩ → |(a+b)/2⟩_{Bs} ⊗ |(a+b)/2⟩_{Cs} ⊗ |(a−b)/2⟩_{Bn} ⊗ |(a−b)/2⟩_{Cn}`.
///
/// The two vacuum inputs are implicit. Both signal ports carry the same value,
/// as do both null ports.
pub fn multiport(bob_in: ComplexAmplitude, charlie_in: ComplexAmplitude) -> MultiportOutput {
    let signal = (bob_in + charlie_in).scale(0.5);
    let null = (bob_in - charlie_in).scale(0.5);
    MultiportOutput {
        bob_signal: signal,
        charlie_signal: signal,
        bob_null: null,
        charlie_null: null,
    }
}

/// Amplitudes at the four elimination detectors of the USE receiver. A click
/// at the `¬φ` detector rules out phase `φ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UseModeAmplitudes {
    pub mode_not0: ComplexAmplitude,
    pub mode_not_pi: ComplexAmplitude,
    pub mode_not_half_pi: ComplexAmplitude,
    pub mode_not_three_half_pi: ComplexAmplitude,
}

impl UseModeAmplitudes {
    /// Amplitude at the detector that rules out `phase`.
    pub fn ruling_out(&self, phase: PhaseSymbol) -> ComplexAmplitude {
        match phase.index() {
            0 => self.mode_not0,
            1 => self.mode_not_half_pi,
            2 => self.mode_not_pi,
            _ => self.mode_not_three_half_pi,
        }
    }

    /// Detector intensities ordered by the phase each detector rules out.
    pub fn intensities(&self) -> [f64; 4] {
        PhaseSymbol::ALL.map(|p| self.ruling_out(p).intensity())
    }
}

/// Closed-form output of the state-elimination interferometer for signal `β`
/// and phase-0 reference `α`: modes `(β−α)/2`, `(β+α)/2`, `(β−iα)/2`, `(β+iα)/2`.
pub fn use_interferometer(
    signal: ComplexAmplitude,
    reference: ComplexAmplitude,
) -> UseModeAmplitudes {
    let half = |a: ComplexAmplitude| a.scale(0.5);
    let quarter = reference.rotate_quarter();
    UseModeAmplitudes {
        mode_not0: half(signal - reference),
        mode_not_pi: half(signal + reference),
        mode_not_half_pi: half(signal - quarter),
        mode_not_three_half_pi: half(signal + quarter),
    }
}
