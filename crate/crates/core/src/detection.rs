//! Photodetection: click probabilities for coherent light, sampled click
//! patterns, and the analytic elimination/discrimination success curves.

use rand::Rng;

use crate::error::{check_unit, Error, Result};
use crate::optics::{apply_phase, ComplexAmplitude, PhaseSymbol};

/// Threshold single-photon detector with an interference visibility for the
/// receiver it sits behind.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorModel {
    pub efficiency: f64,
    /// Probability of a dark click within one detection gate.
    pub dark_click_prob: f64,
    pub visibility: f64,
}

impl DetectorModel {
    pub const IDEAL: Self = Self {
        efficiency: 1.0,
        dark_click_prob: 0.0,
        visibility: 1.0,
    };

    pub fn new(efficiency: f64, dark_click_prob: f64, visibility: f64) -> Result<Self> {
        Ok(Self {
            efficiency: check_unit("efficiency", efficiency)?,
            dark_click_prob: check_unit("dark_click_prob", dark_click_prob)?,
            visibility: check_unit("visibility", visibility)?,
        })
    }

    /// Dark-click probability for a gate of `gate_seconds` at `dark_rate` counts/s.
    pub fn gated_dark_probability(dark_rate: f64, gate_seconds: f64) -> f64 {
        (dark_rate * gate_seconds).clamp(0.0, 1.0)
    }
}

/// Which of the four elimination detectors fired, indexed by the phase each
/// one rules out (`¬0, ¬π/2, ¬π, ¬3π/2`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClickPattern {
    pub clicked: [bool; 4],
}

impl ClickPattern {
    pub fn rules_out(&self, phase: PhaseSymbol) -> bool {
        self.clicked[phase.index()]
    }

    pub fn count(&self) -> usize {
        self.clicked.iter().filter(|&&c| c).count()
    }

    /// Classifies the pattern against the phase that was actually sent.
    pub fn outcome(&self, sent: PhaseSymbol) -> EliminationOutcome {
        let others = PhaseSymbol::ALL
            .iter()
            .filter(|&&p| p != sent)
            .filter(|&&p| self.rules_out(p))
            .count();
        EliminationOutcome {
            use_success: !self.rules_out(sent) && others > 0,
            use_failure: self.rules_out(sent),
            usd_success: !self.rules_out(sent) && others == 3,
            usd_failure: self.rules_out(sent) && others == 2,
        }
    }
}

/// Per-pulse classification of a click pattern.
///
/// A USD outcome needs exactly three clicks; it fails when the surviving
/// phase is not the one sent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EliminationOutcome {
    pub use_success: bool,
    pub use_failure: bool,
    pub usd_success: bool,
    pub usd_failure: bool,
}

/// `1 − (1 − dark)·exp(−efficiency·intensity)`.
pub fn click_probability(mode_intensity: f64, det: &DetectorModel) -> Result<f64> {
    if !(mode_intensity >= 0.0) {
        return Err(Error::Parameter {
            name: "mode_intensity",
            value: mode_intensity,
            reason: "must be non-negative",
        });
    }
    let no_click = (1.0 - det.dark_click_prob) * (-det.efficiency * mode_intensity).exp();
    Ok(1.0 - no_click)
}

/// Intensity at the detector that rules out `phase`, with the interference
/// cross term scaled by `visibility`:
/// `(|β|² + |α|²)/4 − V·Re(β*·α·e^{iφ})/2`.
pub fn visibility_adjusted_intensity(
    signal: ComplexAmplitude,
    reference: ComplexAmplitude,
    phase: PhaseSymbol,
    visibility: f64,
) -> f64 {
    let shifted = apply_phase(reference, phase);
    let cross = (signal.conj() * shifted).re;
    let value = (signal.intensity() + reference.intensity()) / 4.0 - visibility * cross / 2.0;
    value.max(0.0)
}

/// Samples each detector independently.
pub fn sample_clicks<R: Rng + ?Sized>(
    intensities: [f64; 4],
    det: &DetectorModel,
    rng: &mut R,
) -> Result<ClickPattern> {
    let mut clicked = [false; 4];
    for (slot, &intensity) in clicked.iter_mut().zip(&intensities) {
        let p = click_probability(intensity, det)?;
        *slot = rng.random::<f64>() < p;
    }
    Ok(ClickPattern { clicked })
}

/// Analytic per-pulse rates for the four outcome classes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UseUsdRates {
    pub use_success: f64,
    pub use_failure: f64,
    pub usd_success: f64,
    pub usd_failure: f64,
}

/// Detector intensities (indexed by ruled-out phase) when a phase-0 signal of
/// mean photon number `intensity` meets a matched reference.
pub fn receiver_intensities(intensity: f64, visibility: f64) -> [f64; 4] {
    let amp = ComplexAmplitude::real_with_intensity(intensity);
    PhaseSymbol::ALL.map(|p| visibility_adjusted_intensity(amp, amp, p, visibility))
}

/// Success and failure rates of the elimination receiver for a signal of
/// mean photon number `intensity_into_receiver`.
///
/// With `p` the click probability of the opposite-phase detector, `q` that
/// of each adjacent one and `c` that of the correct-phase detector:
/// USE success is `(1−c)(1−(1−p)(1−q)²)` and USD success is `(1−c)pq²`.
pub fn use_usd_rates(intensity_into_receiver: f64, det: &DetectorModel) -> Result<UseUsdRates> {
    let intensities = receiver_intensities(intensity_into_receiver, det.visibility);
    let c = click_probability(intensities[0], det)?;
    let q = click_probability(intensities[1], det)?;
    let p = click_probability(intensities[2], det)?;
    let q2 = click_probability(intensities[3], det)?;
    Ok(UseUsdRates {
        use_success: (1.0 - c) * (1.0 - (1.0 - p) * (1.0 - q) * (1.0 - q2)),
        use_failure: c,
        usd_success: (1.0 - c) * p * q * q2,
        usd_failure: c * (p * q * (1.0 - q2) + p * (1.0 - q) * q2 + (1.0 - p) * q * q2),
    })
}
