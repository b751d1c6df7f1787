//! Subcommand implementations. Each returns a [`Report`]; trials run in
//! parallel from per-trial seeds and are merged in trial order, so output is
//! identical for a given configuration and seed.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;

use qds_core::adversary::{
    active_forge_budget, passive_forge_run, repudiate_run, ForgingStrategy, RepudiationStrategy,
};
use qds_core::detection::{receiver_intensities, sample_clicks, use_usd_rates};
use qds_core::discrimination::min_error_probability;
use qds_core::optics::PhaseSymbol;
use qds_core::protocol::transcript::write_records;
use qds_core::protocol::{
    distribute_message, run_messaging, ChannelModel, ChannelTable, Decision, ProtocolParams,
};
use qds_core::sampling::{child_seed, stream};
use qds_core::security::{
    analyze, bound_min_cost, decompose, rescale_for_loss, CostCounts, CostMatrix,
};

use crate::config::ExperimentConfig;
use crate::output::{num, Format, Report};
use crate::{
    AttackArgs, AttackKind, BoundsArgs, Cli, CliError, Command, ForgerKind, SimulateArgs, SweepArgs,
};

/// Longest signature simulated element by element.
pub const MAX_SIMULATED_LENGTH: usize = 10_000_000;

pub struct Outcome {
    pub report: Report,
    pub default_format: Format,
    /// False when the analysed matrix gives no positive gap.
    pub provable: bool,
}

impl Outcome {
    fn ok(report: Report, default_format: Format) -> Self {
        Self {
            report,
            default_format,
            provable: true,
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let mut config =
        ExperimentConfig::load(cli.common.config.as_deref(), cli.common.preset.as_deref())?;
    if let Some(seed) = cli.common.seed {
        config.run.seed = seed;
    }
    if let Some(trials) = cli.common.trials {
        config.run.trials = trials;
    }
    if let Command::Sweep(SweepArgs { grid: Some(grid) }) = &cli.command {
        config.run.sweep = grid.clone();
    }
    if let Command::Bounds(BoundsArgs {
        security_level: Some(level),
        ..
    }) = &cli.command
    {
        config.protocol.security_level = *level;
    }
    config.validate()?;
    match &cli.command {
        Command::Sweep(_) => sweep(&config).map(|r| Outcome::ok(r, Format::Csv)),
        Command::Bounds(args) => bounds(&config, args),
        Command::Simulate(args) => simulate(&config, args).map(|r| Outcome::ok(r, Format::Kv)),
        Command::Attack(args) => attack(&config, args).map(|r| Outcome::ok(r, Format::Csv)),
    }
}

fn table_report(columns: &[&str], rows: Vec<Vec<String>>) -> Report {
    Report::Table {
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows,
    }
}

fn three_sigma(p: f64, n: f64) -> f64 {
    3.0 * (p * (1.0 - p) / n).sqrt()
}

/// Columns: `alpha_sq, receiver_intensity, use_success, use_failure,
/// usd_success, usd_failure`, followed by `mc_`-prefixed sampled rates and
/// `mc_samples` when trials > 0.
pub fn sweep(config: &ExperimentConfig) -> Result<Report, CliError> {
    if config.run.sweep.is_empty() {
        return Err(CliError::Config {
            field: "run.sweep".into(),
            reason: "grid is empty".into(),
        });
    }
    let setup = config.setup()?;
    let det = setup.detector;
    let trials = config.run.trials;
    let rows = config
        .run
        .sweep
        .par_iter()
        .enumerate()
        .map(|(k, &alpha_sq)| {
            let intensity = setup.receiver_intensity(alpha_sq);
            let rates = use_usd_rates(intensity, &det)?;
            let mut row = vec![
                alpha_sq.to_string(),
                num(intensity),
                num(rates.use_success),
                num(rates.use_failure),
                num(rates.usd_success),
                num(rates.usd_failure),
            ];
            if trials > 0 {
                let mut rng = stream(child_seed(config.run.seed, k as u64), 0);
                let modes = receiver_intensities(intensity, det.visibility);
                let mut hits = [0u64; 4];
                for _ in 0..trials {
                    let o = sample_clicks(modes, &det, &mut rng)?.outcome(PhaseSymbol::ZERO);
                    for (h, flag) in hits.iter_mut().zip([
                        o.use_success,
                        o.use_failure,
                        o.usd_success,
                        o.usd_failure,
                    ]) {
                        *h += flag as u64;
                    }
                }
                row.extend(hits.iter().map(|&h| num(h as f64 / trials as f64)));
                row.push(trials.to_string());
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, qds_core::Error>>()?;
    let mut columns = vec![
        "alpha_sq",
        "receiver_intensity",
        "use_success",
        "use_failure",
        "usd_success",
        "usd_failure",
    ];
    if trials > 0 {
        columns.extend([
            "mc_use_success",
            "mc_use_failure",
            "mc_usd_success",
            "mc_usd_failure",
            "mc_samples",
        ]);
    }
    Ok(table_report(&columns, rows))
}

fn read_matrix(path: &Path) -> Result<CostMatrix, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read cost matrix {}: {e}", path.display())))?;
    CostMatrix::parse(&text).map_err(|e| match e {
        qds_core::Error::Parse {
            line,
            column,
            message,
        } => CliError::Usage(format!("{}:{line}:{column}: {message}", path.display())),
        other => other.into(),
    })
}

pub fn bounds(config: &ExperimentConfig, args: &BoundsArgs) -> Result<Outcome, CliError> {
    let (mut matrix, source) = match &args.matrix {
        Some(path) => (read_matrix(path)?, path.display().to_string()),
        None => (CostMatrix::reference_2014(), "reference-2014".to_string()),
    };
    if let (Some(from), Some(to)) = (args.rescale_from, args.rescale_to) {
        matrix = rescale_for_loss(&matrix, from, to)?;
    }
    let report = analyze(&matrix, config.alpha_sq, config.protocol.security_level)?;
    let mut fields: Vec<(String, String)> = vec![("matrix".into(), source)];
    fields.extend(report.fields().into_iter().map(|(k, v)| (k.to_string(), v)));
    let (time, bound) = match report.length_required {
        Some(l) => (
            num(l as f64 / config.run.clock_hz),
            num((-report.g_lower * report.g_lower * l as f64 / 8.0).exp()),
        ),
        None => ("none".into(), "none".into()),
    };
    fields.push(("distribution_time_s".into(), time));
    fields.push(("failure_bound_at_length".into(), bound));
    Ok(Outcome {
        report: Report::Fields(fields),
        default_format: Format::Kv,
        provable: report.provable(),
    })
}

fn check_simulated(config: &ExperimentConfig) -> Result<(), CliError> {
    if config.protocol.length > MAX_SIMULATED_LENGTH {
        return Err(CliError::Config {
            field: "protocol.length".into(),
            reason: format!("simulations are capped at {MAX_SIMULATED_LENGTH} elements; use `bounds` for longer signatures"),
        });
    }
    if config.run.trials == 0 {
        return Err(CliError::Config {
            field: "run.trials".into(),
            reason: "must be at least 1".into(),
        });
    }
    Ok(())
}

struct TrialSummary {
    bob: Decision,
    charlie: Decision,
    bob_mismatches: usize,
    charlie_mismatches: usize,
    nulls: usize,
    counts: CostCounts,
}

/// Honest runs. Trial `i` signs message bit `i mod 2`.
pub fn simulate(config: &ExperimentConfig, args: &SimulateArgs) -> Result<Report, CliError> {
    check_simulated(config)?;
    let channel = ChannelModel::Optical(config.setup()?);
    let params = config.params(channel)?;
    let table = channel.table(config.alpha_sq)?;
    if let Some(dir) = &args.transcripts {
        std::fs::create_dir_all(dir)?;
    }
    let trials = config.run.trials;
    let summaries = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<TrialSummary, CliError> {
            let bit = (i % 2) as u8;
            let sig = distribute_message(&params, bit, child_seed(config.run.seed, i))?;
            let mut counts = CostCounts::default();
            for (&phase, rec) in sig.key.phases.iter().zip(&sig.bob.records) {
                counts.record(phase, rec.ruled_out);
            }
            if let Some(dir) = &args.transcripts {
                for (who, recs) in [("bob", &sig.bob), ("charlie", &sig.charlie)] {
                    let file = File::create(dir.join(format!("trial-{i:06}-{who}.csv")))?;
                    write_records(BufWriter::new(file), recs)?;
                }
            }
            let t = run_messaging(&params, sig)?;
            Ok(TrialSummary {
                bob: t.bob_decision,
                charlie: t.charlie_decision,
                bob_mismatches: t.bob_mismatches,
                charlie_mismatches: t.charlie_mismatches,
                nulls: t.bob.null_count() + t.charlie.null_count(),
                counts,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let n = trials as f64;
    let elements = n * params.length as f64;
    let freq = |f: &dyn Fn(&TrialSummary) -> bool| {
        num(summaries.iter().filter(|s| f(s)).count() as f64 / n)
    };
    let mut counts = CostCounts::default();
    for s in &summaries {
        counts.merge(&s.counts);
    }
    let p_h = table.honest_mismatch_rate();
    let length = params.length as f64;
    let hon_rej = if params.s_a > p_h {
        (-2.0 * (params.s_a - p_h).powi(2) * length).exp()
    } else {
        1.0
    };
    let mut fields: Vec<(String, String)> = vec![
        ("trials".into(), trials.to_string()),
        ("length".into(), params.length.to_string()),
        ("seed".into(), config.run.seed.to_string()),
        ("alpha_sq".into(), config.alpha_sq.to_string()),
        ("s_a".into(), num(params.s_a)),
        ("s_v".into(), num(params.s_v)),
        ("r".into(), num(params.r)),
        ("epsilon".into(), num(params.epsilon)),
        (
            "bob_accepted".into(),
            freq(&|s| s.bob == Decision::Accepted),
        ),
        (
            "bob_rejected".into(),
            freq(&|s| s.bob == Decision::Rejected),
        ),
        ("bob_aborted".into(), freq(&|s| s.bob == Decision::Aborted)),
        (
            "charlie_accepted".into(),
            freq(&|s| s.charlie == Decision::Accepted),
        ),
        (
            "charlie_rejected".into(),
            freq(&|s| s.charlie == Decision::Rejected),
        ),
        (
            "charlie_aborted".into(),
            freq(&|s| s.charlie == Decision::Aborted),
        ),
        ("honest_rejection_bound".into(), num(hon_rej)),
        (
            "honest_abort_bound".into(),
            num((-2.0 * params.epsilon.powi(2) * length).exp()),
        ),
        (
            "bob_mismatch_rate".into(),
            num(summaries.iter().map(|s| s.bob_mismatches).sum::<usize>() as f64 / elements),
        ),
        (
            "charlie_mismatch_rate".into(),
            num(summaries
                .iter()
                .map(|s| s.charlie_mismatches)
                .sum::<usize>() as f64
                / elements),
        ),
        ("honest_mismatch_prob".into(), num(p_h)),
        (
            "null_rate".into(),
            num(summaries.iter().map(|s| s.nulls).sum::<usize>() as f64 / (2.0 * elements)),
        ),
        ("honest_null_prob".into(), num(table.null_click())),
    ];
    match counts.estimate() {
        Ok(est) => {
            for i in 0..4 {
                for j in 0..4 {
                    fields.push((format!("cost_{i}{j}"), num(est.matrix.entries()[i][j])));
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    fields.push((format!("cost_se_{i}{j}"), num(est.std_errors[i][j])));
                }
            }
        }
        // too few elements to see every phase
        Err(qds_core::Error::EmptyClass(p)) => {
            fields.push(("cost_matrix".into(), format!("no pulses of phase {p}")))
        }
        Err(e) => return Err(e.into()),
    }
    Ok(Report::Fields(fields))
}

fn attack_channel(
    config: &ExperimentConfig,
    matrix: Option<&Path>,
) -> Result<ChannelModel, CliError> {
    let setup = config.setup()?;
    match matrix {
        None => Ok(ChannelModel::Optical(setup)),
        Some(path) => {
            let m = read_matrix(path)?;
            let null = setup.honest_table(config.alpha_sq)?.null_click();
            Ok(ChannelModel::Tabulated(ChannelTable::new(
                *m.entries(),
                null,
            )?))
        }
    }
}

fn passive_bound(c_min: f64, params: &ProtocolParams) -> f64 {
    if c_min > params.s_v {
        (-2.0 * (c_min - params.s_v).powi(2) * params.length as f64).exp()
    } else {
        1.0
    }
}

pub fn attack(config: &ExperimentConfig, args: &AttackArgs) -> Result<Report, CliError> {
    let channel = attack_channel(config, args.matrix.as_deref())?;
    let table = channel.table(config.alpha_sq)?;
    let cost = CostMatrix::new(*table.clicks())?;
    let seed = config.run.seed;
    let trials = config.run.trials;
    match args.kind {
        AttackKind::Repudiate => {
            check_simulated(config)?;
            let params = config.params(channel)?;
            let strategy = match args.target {
                Some(t) => RepudiationStrategy::new(t)?,
                None => RepudiationStrategy::optimal(&params),
            };
            let wins = (0..trials)
                .into_par_iter()
                .map(|i| {
                    repudiate_run(strategy, &params, child_seed(seed, i))
                        .map(|o| o.succeeded() as u64)
                })
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .sum::<u64>();
            let bound = (-(params.s_v - params.s_a).powi(2) * params.length as f64 / 2.0).exp();
            let freq = wins as f64 / trials as f64;
            let limit = bound + three_sigma(bound, trials as f64);
            Ok(table_report(
                &[
                    "kind",
                    "trials",
                    "length",
                    "s_a",
                    "s_v",
                    "target",
                    "successes",
                    "empirical",
                    "bound",
                    "bound_plus_3sigma",
                    "within_bound",
                ],
                vec![vec![
                    "repudiate".into(),
                    trials.to_string(),
                    params.length.to_string(),
                    num(params.s_a),
                    num(params.s_v),
                    num(strategy.target_mismatch_prob),
                    wins.to_string(),
                    num(freq),
                    num(bound),
                    num(limit),
                    (freq <= limit).to_string(),
                ]],
            ))
        }
        AttackKind::ForgePassive => {
            check_simulated(config)?;
            let params = config.params(channel)?;
            let scale = args.amplitude_scale.unwrap_or(1.0);
            let (name, forger) = match args.strategy {
                ForgerKind::Srm => ("srm", ForgingStrategy::srm(config.alpha_sq, scale)?),
                ForgerKind::Uniform => ("uniform", ForgingStrategy::uniform()),
                ForgerKind::Omniscient => ("omniscient", ForgingStrategy::omniscient()),
            };
            let outcomes = (0..trials)
                .into_par_iter()
                .map(|i| passive_forge_run(&forger, &params, child_seed(seed, i)))
                .collect::<Result<Vec<_>, _>>()?;
            let elements = trials as f64 * params.length as f64;
            let mismatch = outcomes.iter().map(|o| o.mismatches).sum::<usize>() as f64 / elements;
            let accepted = outcomes.iter().filter(|o| o.succeeded()).count();
            let dec = decompose(&cost);
            let p_min = min_error_probability(scale * scale * config.alpha_sq)?;
            let c_min_lower = bound_min_cost(&dec, p_min)?.c_min_lower;
            let expected = forger.expected_mismatch_rate(&table);
            Ok(table_report(
                &[
                    "kind",
                    "strategy",
                    "trials",
                    "length",
                    "amplitude_scale",
                    "mismatch_fraction",
                    "std_error",
                    "expected_mismatch",
                    "c_min_lower",
                    "s_v",
                    "accepted",
                    "empirical",
                    "bound",
                ],
                vec![vec![
                    "forge_passive".into(),
                    name.into(),
                    trials.to_string(),
                    params.length.to_string(),
                    scale.to_string(),
                    num(mismatch),
                    num((mismatch * (1.0 - mismatch) / elements).sqrt()),
                    num(expected),
                    num(c_min_lower),
                    num(params.s_v),
                    accepted.to_string(),
                    num(accepted as f64 / trials as f64),
                    num(passive_bound(c_min_lower, &params)),
                ]],
            ))
        }
        AttackKind::ForgeActiveBound => {
            let params = config.raw_params(channel)?;
            let scale = args.amplitude_scale.unwrap_or(1.5f64.sqrt());
            let b = active_forge_budget(&params, &cost, scale)?;
            let passive_c_min =
                bound_min_cost(&decompose(&cost), min_error_probability(config.alpha_sq)?)?
                    .c_min_lower;
            Ok(table_report(
                &[
                    "kind",
                    "length",
                    "s_v",
                    "r",
                    "epsilon",
                    "amplitude_scale",
                    "tamper_allowance",
                    "c_min",
                    "margin",
                    "main_term",
                    "abort_term",
                    "bound",
                    "decaying",
                    "passive_bound",
                ],
                vec![vec![
                    "forge_active_bound".into(),
                    params.length.to_string(),
                    num(params.s_v),
                    num(params.r),
                    num(params.epsilon),
                    scale.to_string(),
                    num(b.tamper_allowance),
                    num(b.c_min),
                    num(b.margin),
                    num(b.main_term),
                    num(b.abort_term),
                    num(b.bound),
                    b.decaying.to_string(),
                    num(passive_bound(passive_c_min, &params)),
                ]],
            ))
        }
    }
}
