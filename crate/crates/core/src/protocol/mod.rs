//! The three-party signature protocol: distribution of quantum signatures
//! through the multiport, storage of elimination records, and the messaging
//! checks run by Bob (authentication) and Charlie (verification).

mod channel;
pub mod transcript;

pub use channel::{lab_2014, ChannelModel, ChannelTable, ElementResponse, OpticalSetup};

use rand::Rng;

use crate::error::{check_unit, Error, Result};
use crate::optics::PhaseSymbol;
use crate::sampling::{stream, BLOCK_LEN};

pub(crate) use channel::TableSampler;

/// Alice's secret phase sequence for one message bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrivateKey {
    pub message_bit: u8,
    pub phases: Vec<PhaseSymbol>,
}

impl PrivateKey {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

/// What a recipient stores for one signature element: the message bit, the
/// 1-based element index, and which phases the elimination measurement ruled
/// out (`a_0, a_{π/2}, a_π, a_{3π/2}`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EliminationRecord {
    pub message_bit: u8,
    pub element_index: usize,
    pub ruled_out: [bool; 4],
}

impl EliminationRecord {
    pub fn rules_out(&self, phase: PhaseSymbol) -> bool {
        self.ruled_out[phase.index()]
    }
}

/// One recipient's stored data for one message bit.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SignatureRecords {
    pub message_bit: u8,
    pub records: Vec<EliminationRecord>,
    /// Whether the multiport null-port detector fired, per element.
    pub null_clicks: Vec<bool>,
}

impl SignatureRecords {
    fn with_capacity(message_bit: u8, length: usize) -> Self {
        Self {
            message_bit,
            records: Vec::with_capacity(length),
            null_clicks: Vec::with_capacity(length),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn null_count(&self) -> usize {
        self.null_clicks.iter().filter(|&&c| c).count()
    }

    fn push(&mut self, ruled_out: [bool; 4], null_click: bool) {
        let element_index = self.records.len() + 1;
        self.records.push(EliminationRecord {
            message_bit: self.message_bit,
            element_index,
            ruled_out,
        });
        self.null_clicks.push(null_click);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolParams {
    /// Signature length `L`.
    pub length: usize,
    /// Authentication threshold, as a fraction of `L`.
    pub s_a: f64,
    /// Verification threshold, as a fraction of `L`.
    pub s_v: f64,
    /// Abort threshold on the fraction of elements with null-port clicks.
    pub r: f64,
    /// Margin between `r` and the honest null-port rate.
    pub epsilon: f64,
    /// Mean photon number of each copy at Alice's output.
    pub alpha_sq: f64,
    pub channel: ChannelModel,
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::Parameter {
                name: "length",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if !(self.alpha_sq > 0.0) || !self.alpha_sq.is_finite() {
            return Err(Error::Parameter {
                name: "alpha_sq",
                value: self.alpha_sq,
                reason: "must be positive",
            });
        }
        check_unit("s_a", self.s_a)?;
        check_unit("s_v", self.s_v)?;
        check_unit("r", self.r)?;
        if self.s_v >= 1.0 || self.r >= 1.0 {
            return Err(Error::Ordering("thresholds must be below 1"));
        }
        if self.s_a >= self.s_v {
            return Err(Error::Ordering("s_a < s_v"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Parameter {
                name: "epsilon",
                value: self.epsilon,
                reason: "must be positive",
            });
        }
        let honest_null = self.channel.table(self.alpha_sq)?.null_click();
        if self.r < honest_null + self.epsilon {
            return Err(Error::Ordering("r >= honest null-port rate + epsilon"));
        }
        Ok(())
    }

    /// Parameters for a simulation of length `length` whose robustness
    /// bounds equal `level`: thresholds sit `t`, `3t` above the honest
    /// mismatch rate and `r` sits `t` above the honest null-port rate, with
    /// `t = sqrt(ln(1/level) / 2L)`.
    pub fn for_simulation(
        length: usize,
        alpha_sq: f64,
        channel: ChannelModel,
        level: f64,
    ) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Parameter {
                name: "security_level",
                value: level,
                reason: "must lie in (0, 1)",
            });
        }
        let table = channel.table(alpha_sq)?;
        let t = ((1.0 / level).ln() / (2.0 * length.max(1) as f64)).sqrt();
        let p_h = table.honest_mismatch_rate();
        let params = Self {
            length,
            s_a: p_h + t,
            s_v: p_h + 3.0 * t,
            r: table.null_click() + t,
            epsilon: t,
            alpha_sq,
            channel,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Result of one recipient's check of a signed message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Decision {
    Accepted,
    Rejected,
    Aborted,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Accepted => "accepted",
            Self::Rejected => "rejected",
            Self::Aborted => "aborted",
        }
    }
}

/// A classical message with its private key, as sent by Alice or forwarded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedMessage {
    pub message_bit: u8,
    pub key: PrivateKey,
}

impl SignedMessage {
    /// Forwarding passes the pair on unchanged.
    pub fn forward(&self) -> SignedMessage {
        self.clone()
    }
}

/// What one element of the distribution stage produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ElementDraw {
    pub phase: PhaseSymbol,
    pub bob: [bool; 4],
    pub charlie: [bool; 4],
    pub bob_null: bool,
    pub charlie_null: bool,
}

/// Source of per-element distribution outcomes. The honest source samples
/// the channel table; attacks substitute their own.
pub trait ElementSource {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ElementDraw;
}

/// Alice honest: uniform phases, identical copies, independent detectors.
pub struct HonestSource {
    sampler: TableSampler,
}

impl HonestSource {
    pub fn new(table: &ChannelTable) -> Self {
        Self {
            sampler: table.sampler(),
        }
    }
}

impl ElementSource for HonestSource {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ElementDraw {
        let phase = PhaseSymbol::wrapping(rng.random_range(0..4usize));
        ElementDraw {
            phase,
            bob: self.sampler.pattern(phase, rng),
            charlie: self.sampler.pattern(phase, rng),
            bob_null: self.sampler.null(rng),
            charlie_null: self.sampler.null(rng),
        }
    }
}

/// The distribution-stage output for one message bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageSignature {
    pub key: PrivateKey,
    pub bob: SignatureRecords,
    pub charlie: SignatureRecords,
}

/// Both message bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution {
    pub messages: [MessageSignature; 2],
}

/// Runs the distribution stage for one message bit with an arbitrary
/// element source. Elements are drawn in blocks of [`BLOCK_LEN`], each from
/// its own stream, so the output depends only on `(seed, message_bit)`.
pub fn distribute_with<S: ElementSource>(
    source: &S,
    length: usize,
    message_bit: u8,
    seed: u64,
) -> MessageSignature {
    let mut phases = Vec::with_capacity(length);
    let mut bob = SignatureRecords::with_capacity(message_bit, length);
    let mut charlie = SignatureRecords::with_capacity(message_bit, length);
    let blocks = length.div_ceil(BLOCK_LEN);
    for block in 0..blocks {
        let mut rng = stream(seed, ((message_bit as u64) << 40) | block as u64);
        let n = BLOCK_LEN.min(length - block * BLOCK_LEN);
        for _ in 0..n {
            let d = source.draw(&mut rng);
            phases.push(d.phase);
            bob.push(d.bob, d.bob_null);
            charlie.push(d.charlie, d.charlie_null);
        }
    }
    MessageSignature {
        key: PrivateKey {
            message_bit,
            phases,
        },
        bob,
        charlie,
    }
}

/// Honest distribution of a single message bit.
pub fn distribute_message(
    params: &ProtocolParams,
    message_bit: u8,
    seed: u64,
) -> Result<MessageSignature> {
    params.validate()?;
    let source = HonestSource::new(&params.channel.table(params.alpha_sq)?);
    Ok(distribute_with(&source, params.length, message_bit, seed))
}

/// Honest distribution of both message bits.
pub fn distribute(params: &ProtocolParams, seed: u64) -> Result<Distribution> {
    Ok(Distribution {
        messages: [
            distribute_message(params, 0, seed)?,
            distribute_message(params, 1, seed)?,
        ],
    })
}

/// Number of elements whose declared phase the recipient ruled out.
pub fn count_mismatches(key: &PrivateKey, records: &SignatureRecords) -> Result<usize> {
    if key.message_bit != records.message_bit {
        return Err(Error::Usage(format!(
            "declaration is for message {} but records are for message {}",
            key.message_bit, records.message_bit
        )));
    }
    if key.len() != records.len() {
        return Err(Error::Usage(format!(
            "declaration has {} elements but {} records are stored",
            key.len(),
            records.len()
        )));
    }
    Ok(key
        .phases
        .iter()
        .zip(&records.records)
        .filter(|(&phase, rec)| rec.rules_out(phase))
        .count())
}

fn check(
    mismatches: usize,
    null_count: usize,
    threshold: f64,
    params: &ProtocolParams,
) -> Decision {
    let length = params.length as f64;
    if null_count as f64 > params.r * length {
        Decision::Aborted
    } else if (mismatches as f64) < threshold * length {
        Decision::Accepted
    } else {
        Decision::Rejected
    }
}

/// Bob's check of a message received directly from Alice.
pub fn authenticate(mismatches: usize, null_count: usize, params: &ProtocolParams) -> Decision {
    check(mismatches, null_count, params.s_a, params)
}

/// Charlie's check of a forwarded message.
pub fn verify(mismatches: usize, null_count: usize, params: &ProtocolParams) -> Decision {
    check(mismatches, null_count, params.s_v, params)
}

/// Everything observed in one messaging round for one message bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub message_bit: u8,
    pub bob: SignatureRecords,
    pub charlie: SignatureRecords,
    pub bob_mismatches: usize,
    pub charlie_mismatches: usize,
    pub bob_decision: Decision,
    pub charlie_decision: Decision,
}

/// Alice signs `signature.key`'s message to Bob, who authenticates and then
/// forwards it to Charlie for verification.
pub fn run_messaging(params: &ProtocolParams, signature: MessageSignature) -> Result<Transcript> {
    let MessageSignature { key, bob, charlie } = signature;
    let message = SignedMessage {
        message_bit: key.message_bit,
        key,
    };
    let bob_mismatches = count_mismatches(&message.key, &bob)?;
    let bob_decision = authenticate(bob_mismatches, bob.null_count(), params);
    let forwarded = message.forward();
    let charlie_mismatches = count_mismatches(&forwarded.key, &charlie)?;
    let charlie_decision = verify(charlie_mismatches, charlie.null_count(), params);
    Ok(Transcript {
        message_bit: message.message_bit,
        bob,
        charlie,
        bob_mismatches,
        charlie_mismatches,
        bob_decision,
        charlie_decision,
    })
}

/// A full honest run for one message bit.
pub fn run_honest(params: &ProtocolParams, message_bit: u8, seed: u64) -> Result<Transcript> {
    run_messaging(params, distribute_message(params, message_bit, seed)?)
}
