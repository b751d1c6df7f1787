//! Attack strategies run against the honest protocol code.
//!
//! Attacks only change what enters the protocol (Alice's states, Bob's
//! declaration); recording, counting and the accept/reject checks are the
//! ones honest parties use.

use rand::distr::{Bernoulli, Distribution};
use rand::Rng;

use crate::discrimination::{gram_matrix, min_error_probability, srm_outcomes, OutcomeMatrix};
use crate::error::{check_unit, Error, Result};
use crate::optics::{apply_phase, ComplexAmplitude, PhaseSymbol};
use crate::protocol::{
    distribute_message, distribute_with, run_messaging, verify, ChannelTable, Decision,
    ElementDraw, ElementResponse, ElementSource, OpticalSetup, ProtocolParams, TableSampler,
};
use crate::sampling::{stream, BLOCK_LEN};
use crate::security::{decompose, CostMatrix};

/// Alice trying to have Bob accept a message that Charlie then rejects. She
/// sends identical copies to both recipients, tuned so that each recipient
/// eliminates her declared phase with probability `target_mismatch_prob`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RepudiationStrategy {
    pub target_mismatch_prob: f64,
}

impl RepudiationStrategy {
    pub fn new(target_mismatch_prob: f64) -> Result<Self> {
        Ok(Self {
            target_mismatch_prob: check_unit("target_mismatch_prob", target_mismatch_prob)?,
        })
    }

    /// The midpoint of the two thresholds, where the repudiation bound is tight.
    pub fn optimal(params: &ProtocolParams) -> Self {
        Self {
            target_mismatch_prob: (params.s_a + params.s_v) / 2.0,
        }
    }

    /// One optical way to raise the mismatch rate: send every element rotated
    /// by `offset` radians away from the declared phase. Returns the strategy
    /// with the resulting per-element mismatch probability.
    pub fn intermediate_phase(setup: &OpticalSetup, alpha_sq: f64, offset: f64) -> Result<Self> {
        let rotated =
            ComplexAmplitude::from(num_complex::Complex64::from_polar(alpha_sq.sqrt(), offset));
        let resp = setup.element_response(alpha_sq, rotated, rotated)?;
        Self::new(resp.clicks[PhaseSymbol::ZERO.index()])
    }
}

struct RepudiatingSource {
    honest: TableSampler,
    declared: Bernoulli,
}

impl ElementSource for RepudiatingSource {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ElementDraw {
        let phase = PhaseSymbol::wrapping(rng.random_range(0..4usize));
        let mut bob = self.honest.pattern(phase, rng);
        let mut charlie = self.honest.pattern(phase, rng);
        bob[phase.index()] = self.declared.sample(rng);
        charlie[phase.index()] = self.declared.sample(rng);
        ElementDraw {
            phase,
            bob,
            charlie,
            bob_null: self.honest.null(rng),
            charlie_null: self.honest.null(rng),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RepudiationOutcome {
    pub bob: Decision,
    pub charlie: Decision,
    pub bob_mismatches: usize,
    pub charlie_mismatches: usize,
}

impl RepudiationOutcome {
    pub fn succeeded(&self) -> bool {
        self.bob == Decision::Accepted && self.charlie == Decision::Rejected
    }
}

/// One repudiation attempt on message bit 0.
pub fn repudiate_run(
    strategy: RepudiationStrategy,
    params: &ProtocolParams,
    seed: u64,
) -> Result<RepudiationOutcome> {
    params.validate()?;
    let table = params.channel.table(params.alpha_sq)?;
    let floor = table.honest_mismatch_rate();
    if strategy.target_mismatch_prob < floor {
        return Err(Error::Parameter {
            name: "target_mismatch_prob",
            value: strategy.target_mismatch_prob,
            reason: "below the honest mismatch rate, which Alice cannot undercut",
        });
    }
    let source = RepudiatingSource {
        honest: table.sampler(),
        declared: Bernoulli::new(strategy.target_mismatch_prob).expect("validated probability"),
    };
    let t = run_messaging(params, distribute_with(&source, params.length, 0, seed))?;
    Ok(RepudiationOutcome {
        bob: t.bob_decision,
        charlie: t.charlie_decision,
        bob_mismatches: t.bob_mismatches,
        charlie_mismatches: t.charlie_mismatches,
    })
}

/// Bob forging a message to Charlie by guessing each element of Alice's key
/// from his own copy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForgingStrategy {
    /// `P(declared j | sent i)`.
    pub outcome_matrix: OutcomeMatrix,
    /// Amplitude of Bob's copy relative to the honest one.
    pub amplitude_scale: f64,
}

impl ForgingStrategy {
    /// Square-root measurement on a copy of intensity `amplitude_scale² · alpha_sq`.
    pub fn srm(alpha_sq: f64, amplitude_scale: f64) -> Result<Self> {
        if !(amplitude_scale > 0.0) || !amplitude_scale.is_finite() {
            return Err(Error::Parameter {
                name: "amplitude_scale",
                value: amplitude_scale,
                reason: "must be positive",
            });
        }
        let g = gram_matrix(amplitude_scale * amplitude_scale * alpha_sq)?;
        Ok(Self {
            outcome_matrix: srm_outcomes(&g)?,
            amplitude_scale,
        })
    }

    pub fn uniform() -> Self {
        Self {
            outcome_matrix: OutcomeMatrix::UNIFORM,
            amplitude_scale: 1.0,
        }
    }

    /// A forger who knows the key.
    pub fn omniscient() -> Self {
        Self {
            outcome_matrix: OutcomeMatrix::IDENTITY,
            amplitude_scale: 1.0,
        }
    }

    /// Expected mismatch rate at a recipient with the given honest table.
    pub fn expected_mismatch_rate(&self, table: &ChannelTable) -> f64 {
        let c = table.clicks();
        (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| self.outcome_matrix.row(i)[j] * c[i][j])
                    .sum::<f64>()
            })
            .sum::<f64>()
            / 4.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForgeryOutcome {
    pub charlie: Decision,
    pub mismatches: usize,
    pub mismatch_fraction: f64,
}

impl ForgeryOutcome {
    pub fn succeeded(&self) -> bool {
        self.charlie == Decision::Accepted
    }
}

/// Stream id for Bob's guesses, disjoint from the distribution streams.
const FORGER_STREAM: u64 = 1 << 48;

/// One passive forgery of message bit 0: honest distribution, then Bob
/// declares a guessed key and Charlie verifies it against his records.
pub fn passive_forge_run(
    strategy: &ForgingStrategy,
    params: &ProtocolParams,
    seed: u64,
) -> Result<ForgeryOutcome> {
    let sig = distribute_message(params, 0, seed)?;
    let rows: Vec<_> = (0..4)
        .map(|i| {
            rand::distr::weighted::WeightedIndex::new(strategy.outcome_matrix.row(i))
                .expect("stochastic row")
        })
        .collect();
    let mut guess = Vec::with_capacity(sig.key.len());
    for (b, chunk) in sig.key.phases.chunks(BLOCK_LEN).enumerate() {
        let mut rng = stream(seed, FORGER_STREAM | b as u64);
        guess.extend(
            chunk
                .iter()
                .map(|p| PhaseSymbol::wrapping(rows[p.index()].sample(&mut rng))),
        );
    }
    let forged = crate::protocol::PrivateKey {
        message_bit: 0,
        phases: guess,
    };
    let mismatches = crate::protocol::count_mismatches(&forged, &sig.charlie)?;
    Ok(ForgeryOutcome {
        charlie: verify(mismatches, sig.charlie.null_count(), params),
        mismatches,
        mismatch_fraction: mismatches as f64 / params.length as f64,
    })
}

/// Components of the active-forging bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActiveForgeBound {
    /// Extra mismatch rate Bob can hide under the abort threshold, `√(ε + r)`.
    pub tamper_allowance: f64,
    /// Lower bound on the forger's minimum cost with the stronger copy.
    pub c_min: f64,
    /// `C_min − s_v − √(ε + r)`.
    pub margin: f64,
    /// `exp(−2·margin²·L)`, or 1 when the margin is not positive.
    pub main_term: f64,
    /// `2·exp(−2ε²·L)`.
    pub abort_term: f64,
    /// Sum of both terms, capped at 1.
    pub bound: f64,
    /// Whether the bound decays with `L`.
    pub decaying: bool,
}

/// Evaluates the active-forging bound at `params.length` for a forger whose
/// resource copy has amplitude `amplitude_scale` times the honest one.
pub fn active_forge_budget(
    params: &ProtocolParams,
    cost: &CostMatrix,
    amplitude_scale: f64,
) -> Result<ActiveForgeBound> {
    if !(amplitude_scale > 0.0) || !amplitude_scale.is_finite() {
        return Err(Error::Parameter {
            name: "amplitude_scale",
            value: amplitude_scale,
            reason: "must be positive",
        });
    }
    if !(params.epsilon >= 0.0) || !(params.r >= 0.0) {
        return Err(Error::Parameter {
            name: "epsilon",
            value: params.epsilon,
            reason: "epsilon and r must be non-negative",
        });
    }
    let dec = decompose(cost);
    let p_min = min_error_probability(amplitude_scale * amplitude_scale * params.alpha_sq)?;
    let c_min = dec.p_h + p_min * dec.guad.max(0.0);
    let tamper_allowance = (params.epsilon + params.r).sqrt();
    let margin = c_min - params.s_v - tamper_allowance;
    let length = params.length as f64;
    let decaying = margin > 0.0;
    let main_term = if decaying {
        (-2.0 * margin * margin * length).exp()
    } else {
        1.0
    };
    let abort_term = 2.0 * (-2.0 * params.epsilon * params.epsilon * length).exp();
    Ok(ActiveForgeBound {
        tamper_allowance,
        c_min,
        margin,
        main_term,
        abort_term,
        bound: (main_term + abort_term).min(1.0),
        decaying,
    })
}

/// Detector response when Bob replaces the copy on Charlie's arm with
/// `substitute` while Alice sends `phase` honestly on his own arm.
pub fn tampered_element(
    setup: &OpticalSetup,
    alpha_sq: f64,
    phase: PhaseSymbol,
    substitute: ComplexAmplitude,
) -> Result<ElementResponse> {
    let honest = apply_phase(ComplexAmplitude::real_with_intensity(alpha_sq), phase);
    setup.element_response(alpha_sq, honest, substitute)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::ChannelModel;

    fn ideal(length: usize) -> ProtocolParams {
        ProtocolParams {
            length,
            s_a: 0.1,
            s_v: 0.2,
            r: 0.05,
            epsilon: 0.01,
            alpha_sq: 1.0,
            channel: ChannelModel::Optical(OpticalSetup::IDEAL),
        }
    }

    #[test]
    fn target_below_floor_is_rejected() {
        let params = ProtocolParams {
            channel: ChannelModel::Tabulated(ChannelTable::new([[0.01; 4]; 4], 0.0).unwrap()),
            ..ideal(100)
        };
        let err = repudiate_run(RepudiationStrategy::new(0.005).unwrap(), &params, 1).unwrap_err();
        assert!(matches!(
            err,
            Error::Parameter {
                name: "target_mismatch_prob",
                ..
            }
        ));
        assert!(RepudiationStrategy::new(1.5).is_err());
    }

    #[test]
    fn honest_level_target_never_repudiates_on_ideal_optics() {
        let p = ideal(2000);
        for seed in 0..20 {
            let out = repudiate_run(RepudiationStrategy::new(0.0).unwrap(), &p, seed).unwrap();
            assert_eq!(
                (out.bob, out.charlie),
                (Decision::Accepted, Decision::Accepted)
            );
        }
    }

    #[test]
    fn optimal_target_is_midpoint() {
        assert!(
            (RepudiationStrategy::optimal(&ideal(1)).target_mismatch_prob - 0.15).abs() < 1e-15
        );
    }

    #[test]
    fn intermediate_phase_raises_mismatch() {
        let setup = OpticalSetup::IDEAL;
        assert!(
            RepudiationStrategy::intermediate_phase(&setup, 1.0, 0.0)
                .unwrap()
                .target_mismatch_prob
                .abs()
                < 1e-15
        );
        let small = RepudiationStrategy::intermediate_phase(&setup, 1.0, 0.2)
            .unwrap()
            .target_mismatch_prob;
        let large = RepudiationStrategy::intermediate_phase(&setup, 1.0, 0.6)
            .unwrap()
            .target_mismatch_prob;
        assert!(0.0 < small && small < large);
        // |1 − e^{iθ}|²/4 is the intensity at the ¬0 output
        let expected = 1.0 - (-(1.0 - 0.6f64.cos()) / 2.0).exp();
        assert!((large - expected).abs() < 1e-12);
    }

    #[test]
    fn omniscient_forger_matches_honest_rate() {
        let table = OpticalSetup::lab_2014().honest_table(1.0).unwrap();
        let f = ForgingStrategy::omniscient();
        assert!((f.expected_mismatch_rate(&table) - table.honest_mismatch_rate()).abs() < 1e-18);
        let out = passive_forge_run(&f, &ideal(3000), 5).unwrap();
        assert_eq!(out.mismatches, 0);
        assert!(out.succeeded());
    }

    #[test]
    fn uniform_forger_is_caught_on_ideal_optics() {
        let out = passive_forge_run(&ForgingStrategy::uniform(), &ideal(3000), 9).unwrap();
        assert_eq!(out.charlie, Decision::Rejected);
    }

    #[test]
    fn passive_forgery_is_replayable() {
        let f = ForgingStrategy::srm(1.0, 1.0).unwrap();
        let p = ideal(70_000);
        assert_eq!(
            passive_forge_run(&f, &p, 3).unwrap(),
            passive_forge_run(&f, &p, 3).unwrap()
        );
    }

    #[test]
    fn stronger_copy_lowers_active_cost() {
        let cost = CostMatrix::reference_2014();
        let p = ProtocolParams {
            s_v: 0.0,
            r: 0.0,
            epsilon: 0.0,
            ..ideal(1000)
        };
        let weak = active_forge_budget(&p, &cost, 1.0).unwrap();
        let strong = active_forge_budget(&p, &cost, 1.5f64.sqrt()).unwrap();
        assert!(strong.c_min <= weak.c_min);
        assert!(strong.main_term >= weak.main_term);
    }

    #[test]
    fn zero_budget_recovers_passive_form() {
        let cost = CostMatrix::reference_2014();
        let p = ProtocolParams {
            length: 1_000_000_000,
            s_v: 4.25e-5,
            r: 0.0,
            epsilon: 0.0,
            ..ideal(1)
        };
        let b = active_forge_budget(&p, &cost, 1.0).unwrap();
        assert_eq!(b.tamper_allowance, 0.0);
        let passive = (-2.0 * (b.c_min - p.s_v).powi(2) * 1e9).exp();
        assert!((b.main_term - passive).abs() < 1e-15);
        assert_eq!(b.abort_term, 2.0);
    }

    #[test]
    fn vacuous_active_bound_is_flagged() {
        let cost = CostMatrix::reference_2014();
        let p = ProtocolParams {
            s_v: 4.27e-5,
            r: 1e-6,
            epsilon: 1e-6,
            ..ideal(1000)
        };
        let b = active_forge_budget(&p, &cost, 1.5f64.sqrt()).unwrap();
        assert!((b.tamper_allowance - 2e-6f64.sqrt()).abs() < 1e-18);
        assert!(!b.decaying);
        assert_eq!(b.main_term, 1.0);
        assert_eq!(b.bound, 1.0);
    }

    #[test]
    fn honest_substitute_keeps_null_dark() {
        let setup = OpticalSetup::IDEAL;
        let honest = apply_phase(ComplexAmplitude::real_with_intensity(1.0), PhaseSymbol::PI);
        assert_eq!(
            tampered_element(&setup, 1.0, PhaseSymbol::PI, honest)
                .unwrap()
                .null_click,
            0.0
        );
        let swapped = apply_phase(honest, PhaseSymbol::HALF_PI);
        let expected = 1.0 - (-0.5f64).exp();
        assert!(
            (tampered_element(&setup, 1.0, PhaseSymbol::PI, swapped)
                .unwrap()
                .null_click
                - expected)
                .abs()
                < 1e-12
        );
    }
}
