//! The optical path of one signature element: launch from Alice, multiport
//! loss and symmetrization, receiver loss, and the elimination detectors.

use rand::distr::{Bernoulli, Distribution};
use rand::Rng;

use crate::detection::{click_probability, visibility_adjusted_intensity, DetectorModel};
use crate::error::{check_unit, Error, Result};
use crate::optics::{
    apply_loss, apply_phase, db_to_transmittance, multiport, ComplexAmplitude, PhaseSymbol,
};

/// Static description of the optical hardware shared by Bob and Charlie.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpticalSetup {
    /// Transmittance of each multiport arm.
    pub multiport_transmittance: f64,
    /// Transmittance from the multiport signal port to the elimination detectors.
    pub receiver_transmittance: f64,
    pub multiport_visibility: f64,
    /// Detectors at the elimination outputs and at the null port. Its
    /// `visibility` is the visibility of the elimination interferometers.
    pub detector: DetectorModel,
}

/// Hardware figures for the 2014 desk-top demonstration.
pub mod lab_2014 {
    pub const MULTIPORT_DB: f64 = 7.7;
    pub const RECEIVER_SPLITTER_DB: f64 = 5.1;
    pub const INTERFEROMETER_DB: f64 = 9.1;
    pub const EFFICIENCY: f64 = 0.405;
    /// Fraction of raw detections that survive the ±1 ns time gate.
    pub const GATED_FRACTION: f64 = 0.91;
    pub const DARK_RATE_PER_S: f64 = 320.0;
    pub const GATE_NS: f64 = 2.0;
    pub const DETECTION_VISIBILITY: f64 = 0.809;
    pub const MULTIPORT_VISIBILITY: f64 = 0.997;
    pub const CLOCK_HZ: f64 = 100e6;
    pub const ALPHA_SQ: f64 = 1.0;
}

impl OpticalSetup {
    pub const IDEAL: Self = Self {
        multiport_transmittance: 1.0,
        receiver_transmittance: 1.0,
        multiport_visibility: 1.0,
        detector: DetectorModel::IDEAL,
    };

    pub fn lab_2014() -> Self {
        use lab_2014::*;
        Self::from_losses(
            MULTIPORT_DB,
            RECEIVER_SPLITTER_DB + INTERFEROMETER_DB,
            MULTIPORT_VISIBILITY,
            DetectorModel {
                efficiency: EFFICIENCY * GATED_FRACTION,
                dark_click_prob: DetectorModel::gated_dark_probability(
                    DARK_RATE_PER_S,
                    GATE_NS * 1e-9,
                ),
                visibility: DETECTION_VISIBILITY,
            },
        )
        .expect("preset values are in range")
    }

    pub fn from_losses(
        multiport_db: f64,
        receiver_db: f64,
        multiport_visibility: f64,
        detector: DetectorModel,
    ) -> Result<Self> {
        for (name, db) in [("multiport_db", multiport_db), ("receiver_db", receiver_db)] {
            if !(db >= 0.0) {
                return Err(Error::Parameter {
                    name,
                    value: db,
                    reason: "loss in dB must be non-negative",
                });
            }
        }
        let setup = Self {
            multiport_transmittance: db_to_transmittance(multiport_db),
            receiver_transmittance: db_to_transmittance(receiver_db),
            multiport_visibility,
            detector,
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("multiport_transmittance", self.multiport_transmittance)?;
        check_unit("receiver_transmittance", self.receiver_transmittance)?;
        check_unit("multiport_visibility", self.multiport_visibility)?;
        DetectorModel::new(
            self.detector.efficiency,
            self.detector.dark_click_prob,
            self.detector.visibility,
        )?;
        Ok(())
    }

    /// Phase-0 reference at the elimination interferometers, calibrated to an
    /// honest signal of launch intensity `alpha_sq`.
    pub fn reference(&self, alpha_sq: f64) -> ComplexAmplitude {
        ComplexAmplitude::real_with_intensity(
            alpha_sq * self.multiport_transmittance * self.receiver_transmittance,
        )
    }

    /// Mean photon number entering each elimination receiver when Alice
    /// launches identical copies of intensity `alpha_sq`.
    pub fn receiver_intensity(&self, alpha_sq: f64) -> f64 {
        let a = ComplexAmplitude::real_with_intensity(alpha_sq);
        self.signal_after_multiport(a, a).0.intensity() * self.receiver_transmittance
    }

    /// Multiport signal amplitude (identical at both recipients) and null-port
    /// intensity for the given launch amplitudes. The cross term of the
    /// interference is scaled by the multiport visibility.
    fn signal_after_multiport(
        &self,
        bob_in: ComplexAmplitude,
        charlie_in: ComplexAmplitude,
    ) -> (ComplexAmplitude, f64) {
        let t = self.multiport_transmittance;
        let b = bob_in.scale(t.sqrt());
        let c = charlie_in.scale(t.sqrt());
        let out = multiport(b, c);
        let v = self.multiport_visibility;
        // (b + c)/2 is the ¬π-style port of b against c.
        let signal_intensity = visibility_adjusted_intensity(b, c, PhaseSymbol::PI, v);
        let null_intensity = visibility_adjusted_intensity(b, c, PhaseSymbol::ZERO, v);
        let ideal = out.bob_signal.intensity();
        let signal = if ideal > 0.0 {
            out.bob_signal.scale((signal_intensity / ideal).sqrt())
        } else {
            out.bob_signal
        };
        (signal, null_intensity)
    }

    /// Click probabilities for one element launched as `bob_in` / `charlie_in`
    /// (amplitudes at Alice's output). Bob and Charlie see the same values.
    pub fn element_response(
        &self,
        alpha_sq: f64,
        bob_in: ComplexAmplitude,
        charlie_in: ComplexAmplitude,
    ) -> Result<ElementResponse> {
        let (signal, null_intensity) = self.signal_after_multiport(bob_in, charlie_in);
        let beta = apply_loss(signal, self.receiver_transmittance)?;
        let reference = self.reference(alpha_sq);
        let det = &self.detector;
        let mut clicks = [0.0; 4];
        for (slot, phase) in clicks.iter_mut().zip(PhaseSymbol::ALL) {
            let intensity = visibility_adjusted_intensity(beta, reference, phase, det.visibility);
            *slot = click_probability(intensity, det)?;
        }
        Ok(ElementResponse {
            clicks,
            null_click: click_probability(null_intensity, det)?,
        })
    }

    /// Per-phase response when Alice honestly sends identical copies.
    pub fn honest_table(&self, alpha_sq: f64) -> Result<ChannelTable> {
        if !(alpha_sq > 0.0) || !alpha_sq.is_finite() {
            return Err(Error::Parameter {
                name: "alpha_sq",
                value: alpha_sq,
                reason: "must be positive",
            });
        }
        let base = ComplexAmplitude::real_with_intensity(alpha_sq);
        let mut clicks = [[0.0; 4]; 4];
        let mut null_click = 0.0;
        for phase in PhaseSymbol::ALL {
            let a = apply_phase(base, phase);
            let resp = self.element_response(alpha_sq, a, a)?;
            clicks[phase.index()] = resp.clicks;
            null_click = resp.null_click;
        }
        ChannelTable::new(clicks, null_click)
    }
}

/// Detector click probabilities for a single element, indexed by the phase
/// each detector rules out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementResponse {
    pub clicks: [f64; 4],
    pub null_click: f64,
}

/// Click probabilities of one recipient's detectors conditioned on the phase
/// Alice sent: `clicks[i][j]` is the probability the `¬j` detector fires when
/// phase `i` was sent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelTable {
    clicks: [[f64; 4]; 4],
    null_click: f64,
}

impl ChannelTable {
    pub fn new(clicks: [[f64; 4]; 4], null_click: f64) -> Result<Self> {
        for row in &clicks {
            for &p in row {
                check_unit("click probability", p)?;
            }
        }
        check_unit("null_click", null_click)?;
        Ok(Self { clicks, null_click })
    }

    pub fn clicks(&self) -> &[[f64; 4]; 4] {
        &self.clicks
    }

    pub fn null_click(&self) -> f64 {
        self.null_click
    }

    /// Probability that an honest declaration is eliminated, averaged over
    /// the four phases.
    pub fn honest_mismatch_rate(&self) -> f64 {
        (0..4).map(|i| self.clicks[i][i]).sum::<f64>() / 4.0
    }

    pub(crate) fn sampler(&self) -> TableSampler {
        let b = |p: f64| Bernoulli::new(p).expect("validated probability");
        TableSampler {
            clicks: self.clicks.map(|row| row.map(b)),
            null: b(self.null_click),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct TableSampler {
    pub(crate) clicks: [[Bernoulli; 4]; 4],
    pub(crate) null: Bernoulli,
}

impl TableSampler {
    pub(crate) fn pattern<R: Rng + ?Sized>(&self, sent: PhaseSymbol, rng: &mut R) -> [bool; 4] {
        let row = &self.clicks[sent.index()];
        [
            row[0].sample(rng),
            row[1].sample(rng),
            row[2].sample(rng),
            row[3].sample(rng),
        ]
    }

    pub(crate) fn null<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        self.null.sample(rng)
    }
}

/// Where a recipient's elimination statistics come from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelModel {
    /// Derived from the optical hardware model.
    Optical(OpticalSetup),
    /// Fixed per-phase click probabilities, e.g. a measured cost matrix.
    Tabulated(ChannelTable),
}

impl ChannelModel {
    pub fn table(&self, alpha_sq: f64) -> Result<ChannelTable> {
        match self {
            Self::Optical(setup) => setup.honest_table(alpha_sq),
            Self::Tabulated(table) => Ok(*table),
        }
    }
}
