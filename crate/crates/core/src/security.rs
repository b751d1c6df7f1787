//! From a measured cost matrix to a signature length.
//!
//! The cost matrix `C_ij` is the probability that a recipient's `¬j`
//! detector fires when phase `i` was sent. Its diagonal is the honest
//! mismatch floor. Subtracting the constant-row matrix of diagonals leaves
//! `C′`; the smallest off-diagonal of `C′` (the guaranteed advantage) times
//! the minimum-error probability of the signature states bounds the gap `g`
//! between a forger's and an honest sender's mismatch rate. Hoeffding bounds
//! then turn `g` into a required length `L`.

use std::fmt;

use crate::discrimination::min_error_probability;
use crate::error::{check_unit, Error, Result};
use crate::optics::PhaseSymbol;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostMatrix {
    entries: [[f64; 4]; 4],
    /// Pulses sent per state, when the matrix was estimated from counts.
    pulses: Option<[u64; 4]>,
}

impl CostMatrix {
    pub fn new(entries: [[f64; 4]; 4]) -> Result<Self> {
        for row in &entries {
            for &c in row {
                check_unit("cost matrix entry", c)?;
            }
        }
        Ok(Self {
            entries,
            pulses: None,
        })
    }

    pub fn with_pulses(mut self, pulses: [u64; 4]) -> Self {
        self.pulses = Some(pulses);
        self
    }

    /// The 2014 experimental matrix at `|α|² = 1`, with the fourth-row entry
    /// in the `¬π/2` column read as `2.82e-4`. That value is the one the
    /// published `C′` decomposition (`2.57e-4` at that position) implies.
    pub fn reference_2014() -> Self {
        Self::new([
            [9.80e-5, 1.63e-4, 1.71e-4, 1.40e-4],
            [6.75e-5, 2.37e-5, 1.57e-4, 2.62e-4],
            [2.19e-4, 1.69e-4, 1.98e-5, 1.01e-4],
            [2.08e-4, 2.82e-4, 3.85e-5, 2.55e-5],
        ])
        .expect("reference entries are probabilities")
    }

    pub fn entries(&self) -> &[[f64; 4]; 4] {
        &self.entries
    }

    pub fn pulses(&self) -> Option<[u64; 4]> {
        self.pulses
    }

    pub fn get(&self, sent: PhaseSymbol, ruled_out: PhaseSymbol) -> f64 {
        self.entries[sent.index()][ruled_out.index()]
    }

    /// Parses the plain-text format: four rows of four numbers separated by
    /// whitespace or commas, optionally preceded by `pulses n0 n1 n2 n3`.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<[f64; 4]> = Vec::new();
        let mut pulses = None;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let tokens = tokenize(content);
            if tokens.first().map(|(_, t)| *t) == Some("pulses") {
                if pulses.is_some() || !rows.is_empty() {
                    return Err(Error::Parse {
                        line,
                        column: tokens[0].0,
                        message: "pulse header must come first".into(),
                    });
                }
                let counts = parse_fields::<u64>(&tokens[1..], line, raw.len() + 1)?;
                pulses = Some(counts);
                continue;
            }
            if rows.len() == 4 {
                return Err(Error::Parse {
                    line,
                    column: tokens[0].0,
                    message: "more than four matrix rows".into(),
                });
            }
            let row = parse_fields::<f64>(&tokens, line, raw.len() + 1)?;
            for (k, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Parse {
                        line,
                        column: tokens[k].0,
                        message: format!("entry {v} is not a probability"),
                    });
                }
            }
            rows.push(row);
        }
        if rows.len() != 4 {
            return Err(Error::Parse {
                line: text.lines().count().max(1),
                column: 1,
                message: format!("expected 4 matrix rows, found {}", rows.len()),
            });
        }
        let mut m = Self::new([rows[0], rows[1], rows[2], rows[3]])?;
        m.pulses = pulses;
        Ok(m)
    }
}

fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        let sep = ch.is_whitespace() || ch == ',';
        match (sep, start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn parse_fields<T: std::str::FromStr>(
    tokens: &[(usize, &str)],
    line: usize,
    eol: usize,
) -> Result<[T; 4]> {
    if tokens.len() != 4 {
        let column = tokens.get(4).map_or(eol, |t| t.0);
        return Err(Error::Parse {
            line,
            column,
            message: format!("expected 4 values, found {}", tokens.len()),
        });
    }
    let mut parsed = Vec::with_capacity(4);
    for &(column, tok) in tokens {
        let v = tok.parse::<T>().map_err(|_| Error::Parse {
            line,
            column,
            message: format!("invalid number `{tok}`"),
        })?;
        parsed.push(v);
    }
    Ok(parsed.try_into().unwrap_or_else(|_| unreachable!()))
}

impl fmt::Display for CostMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = self.pulses {
            writeln!(f, "pulses {} {} {} {}", p[0], p[1], p[2], p[3])?;
        }
        for row in &self.entries {
            writeln!(
                f,
                "{:.6e} {:.6e} {:.6e} {:.6e}",
                row[0], row[1], row[2], row[3]
            )?;
        }
        Ok(())
    }
}

/// An estimated cost matrix with binomial standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostEstimate {
    pub matrix: CostMatrix,
    pub std_errors: [[f64; 4]; 4],
}

/// Pulse and click tallies from which a cost matrix is estimated. Tallies
/// from separate runs can be merged before estimating.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CostCounts {
    pub pulses: [u64; 4],
    /// `clicks[i][j]`: pulses of state `i` after which the `¬j` detector fired.
    pub clicks: [[u64; 4]; 4],
}

impl CostCounts {
    pub fn record(&mut self, sent: PhaseSymbol, ruled_out: [bool; 4]) {
        let i = sent.index();
        self.pulses[i] += 1;
        for (c, &hit) in self.clicks[i].iter_mut().zip(&ruled_out) {
            *c += hit as u64;
        }
    }

    pub fn merge(&mut self, other: &CostCounts) {
        for i in 0..4 {
            self.pulses[i] += other.pulses[i];
            for j in 0..4 {
                self.clicks[i][j] += other.clicks[i][j];
            }
        }
    }

    pub fn estimate(&self) -> Result<CostEstimate> {
        let mut entries = [[0.0; 4]; 4];
        let mut std_errors = [[0.0; 4]; 4];
        for i in 0..4 {
            if self.pulses[i] == 0 {
                return Err(Error::EmptyClass(PhaseSymbol::wrapping(i)));
            }
            let n = self.pulses[i] as f64;
            for j in 0..4 {
                let p = self.clicks[i][j] as f64 / n;
                entries[i][j] = p;
                std_errors[i][j] = (p * (1.0 - p) / n).sqrt();
            }
        }
        Ok(CostEstimate {
            matrix: CostMatrix::new(entries)?.with_pulses(self.pulses),
            std_errors,
        })
    }
}

/// Estimates `C_ij` as clicks at `¬j` over pulses of state `i`.
pub fn estimate_cost_matrix<I>(samples: I) -> Result<CostEstimate>
where
    I: IntoIterator<Item = (PhaseSymbol, [bool; 4])>,
{
    let mut counts = CostCounts::default();
    for (sent, ruled_out) in samples {
        counts.record(sent, ruled_out);
    }
    counts.estimate()
}

/// `C = C_h + C′`, and the error-type lower matrix `C_l ≤ C′`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decomposition {
    pub c_h: [[f64; 4]; 4],
    pub c_prime: [[f64; 4]; 4],
    pub c_l: [[f64; 4]; 4],
    pub p_h: f64,
    /// Smallest off-diagonal of `C′`. Not positive means no provable security.
    pub guad: f64,
    /// Largest off-diagonal of `C′`.
    pub max_advantage: f64,
}

pub fn decompose(c: &CostMatrix) -> Decomposition {
    let e = c.entries();
    let c_h: [[f64; 4]; 4] = std::array::from_fn(|i| [e[i][i]; 4]);
    let c_prime: [[f64; 4]; 4] =
        std::array::from_fn(|i| std::array::from_fn(|j| e[i][j] - c_h[i][j]));
    let off = || (0..4).flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)));
    let guad = off()
        .map(|(i, j)| c_prime[i][j])
        .fold(f64::INFINITY, f64::min);
    let max_advantage = off()
        .map(|(i, j)| c_prime[i][j])
        .fold(f64::NEG_INFINITY, f64::max);
    let c_l = std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 0.0 } else { guad }));
    Decomposition {
        c_h,
        c_prime,
        c_l,
        p_h: (0..4).map(|i| e[i][i]).sum::<f64>() / 4.0,
        guad,
        max_advantage,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinCostBounds {
    pub c_min_lower: f64,
    pub c_min_upper: f64,
    pub g_lower: f64,
    pub g_upper: f64,
}

/// Bounds the forger's minimum cost by sandwiching `C′` between error-type
/// matrices built from its smallest and largest off-diagonal entries. The
/// minimum cost of an error-type matrix with off-diagonal `c` is `c·p_min`.
pub fn bound_min_cost(dec: &Decomposition, p_min: f64) -> Result<MinCostBounds> {
    let p_min = check_unit("p_min", p_min)?;
    let g_lower = (p_min * dec.guad).max(0.0);
    let g_upper = (p_min * dec.max_advantage).max(g_lower);
    Ok(MinCostBounds {
        c_min_lower: dec.p_h + g_lower,
        c_min_upper: dec.p_h + g_upper,
        g_lower,
        g_upper,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub s_a: f64,
    pub s_v: f64,
}

/// `s_a = p_h + g/4`, `s_v = p_h + 3g/4`, which makes the honest-rejection,
/// forging and repudiation bounds coincide.
pub fn choose_thresholds(p_h: f64, g: f64) -> Result<Thresholds> {
    if !(g > 0.0) {
        return Err(Error::NoSecurity { gap: g });
    }
    Ok(Thresholds {
        s_a: p_h + g / 4.0,
        s_v: p_h + 3.0 * g / 4.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tail {
    Upper,
    Lower,
    TwoSided,
}

/// Hoeffding's bound for the mean of `length` independent 0/1 variables
/// deviating by at least `t`. The two-sided value is returned unclamped and
/// can exceed 1.
pub fn hoeffding(t: f64, length: f64, tail: Tail) -> f64 {
    let one_sided = (-2.0 * t * t * length).exp();
    match tail {
        Tail::Upper | Tail::Lower => one_sided,
        Tail::TwoSided => 2.0 * one_sided,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FailureBounds {
    pub p_rep: f64,
    pub p_for: f64,
    pub p_hon_rej: f64,
    pub p_hon_ab: f64,
}

/// The four finite-size bounds at signature length `length`. Requires
/// `C_min ≥ s_v ≥ s_a ≥ p_h`.
pub fn failure_bounds(
    th: Thresholds,
    epsilon: f64,
    length: f64,
    p_h: f64,
    c_min: f64,
) -> Result<FailureBounds> {
    if th.s_a < p_h {
        return Err(Error::Ordering("s_a >= p_h"));
    }
    if th.s_v < th.s_a {
        return Err(Error::Ordering("s_v >= s_a"));
    }
    if c_min < th.s_v {
        return Err(Error::Ordering("C_min >= s_v"));
    }
    let d = th.s_v - th.s_a;
    Ok(FailureBounds {
        p_rep: (-d * d * length / 2.0).exp(),
        p_for: hoeffding(c_min - th.s_v, length, Tail::Lower),
        p_hon_rej: hoeffding(th.s_a - p_h, length, Tail::Upper),
        p_hon_ab: hoeffding(epsilon, length, Tail::Upper),
    })
}

/// Smallest `L` with `exp(−g²L/8) ≤ security_level`.
pub fn required_length(g: f64, security_level: f64) -> Result<u64> {
    if !(g > 0.0) {
        return Err(Error::NoSecurity { gap: g });
    }
    if !(security_level > 0.0 && security_level < 1.0) {
        return Err(Error::Parameter {
            name: "security_level",
            value: security_level,
            reason: "must lie in (0, 1)",
        });
    }
    Ok((8.0 * (1.0 / security_level).ln() / (g * g)).ceil() as u64)
}

/// Extrapolates a cost matrix to a different overall transmittance. In the
/// low-count regime every click probability is proportional to the
/// transmitted signal, so entries scale by `new / old`.
pub fn rescale_for_loss(
    c: &CostMatrix,
    old_transmittance: f64,
    new_transmittance: f64,
) -> Result<CostMatrix> {
    for (name, t) in [
        ("old_transmittance", old_transmittance),
        ("new_transmittance", new_transmittance),
    ] {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Parameter {
                name,
                value: t,
                reason: "must lie in (0, 1]",
            });
        }
    }
    let factor = new_transmittance / old_transmittance;
    let entries = c.entries().map(|row| row.map(|v| v * factor));
    CostMatrix::new(entries)
}

/// Summary of the security pipeline for one cost matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecurityReport {
    pub alpha_sq: f64,
    pub p_h: f64,
    pub guad: f64,
    pub p_min: f64,
    pub g_lower: f64,
    pub g_upper: f64,
    pub c_min_lower: f64,
    pub c_min_upper: f64,
    /// `None` when there is no positive gap.
    pub thresholds: Option<Thresholds>,
    pub length_required: Option<u64>,
    pub security_level: f64,
}

impl SecurityReport {
    pub fn provable(&self) -> bool {
        self.g_lower > 0.0
    }

    /// Ordered `(key, value)` pairs shared by the key-value and CSV outputs.
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x:.6e}"));
        vec![
            ("alpha_sq", format!("{}", self.alpha_sq)),
            ("security_level", format!("{:e}", self.security_level)),
            ("p_h", format!("{:.6e}", self.p_h)),
            ("guad", format!("{:.6e}", self.guad)),
            ("p_min", format!("{:.6e}", self.p_min)),
            ("g_lower", format!("{:.6e}", self.g_lower)),
            ("g_upper", format!("{:.6e}", self.g_upper)),
            ("c_min_lower", format!("{:.6e}", self.c_min_lower)),
            ("c_min_upper", format!("{:.6e}", self.c_min_upper)),
            ("s_a", opt(self.thresholds.map(|t| t.s_a))),
            ("s_v", opt(self.thresholds.map(|t| t.s_v))),
            (
                "length_required",
                self.length_required
                    .map_or_else(|| "none".into(), |l| l.to_string()),
            ),
            ("provable_security", self.provable().to_string()),
        ]
    }
}

/// Runs decomposition, the minimum-error probability at `alpha_sq`, the
/// minimum-cost bounds, threshold choice and the required length.
pub fn analyze(c: &CostMatrix, alpha_sq: f64, security_level: f64) -> Result<SecurityReport> {
    let dec = decompose(c);
    let p_min = min_error_probability(alpha_sq)?;
    let bounds = bound_min_cost(&dec, p_min)?;
    let (thresholds, length_required) = if bounds.g_lower > 0.0 {
        (
            Some(choose_thresholds(dec.p_h, bounds.g_lower)?),
            Some(required_length(bounds.g_lower, security_level)?),
        )
    } else {
        (None, None)
    };
    Ok(SecurityReport {
        alpha_sq,
        p_h: dec.p_h,
        guad: dec.guad,
        p_min,
        g_lower: bounds.g_lower,
        g_upper: bounds.g_upper,
        c_min_lower: bounds.c_min_lower,
        c_min_upper: bounds.c_min_upper,
        thresholds,
        length_required,
        security_level,
    })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_decomposition() {
        let dec = decompose(&CostMatrix::reference_2014());
        assert!((dec.p_h - 4.18e-5).abs() < 1e-7);
        assert!((dec.guad - 1.30e-5).abs() < 1e-18);
        // the published C′, rounded to three figures
        let expected = [
            [0.0, 0.65e-4, 0.73e-4, 0.42e-4],
            [4.38e-5, 0.0, 1.33e-4, 2.38e-4],
            [1.99e-4, 1.49e-4, 0.0, 0.81e-4],
            [1.83e-4, 2.57e-4, 1.30e-5, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!(
                    (dec.c_prime[i][j] - expected[i][j]).abs() < 1.1e-6,
                    "C′[{i}][{j}]"
                );
            }
        }
    }

    #[test]
    fn error_type_input() {
        let c = 3e-4;
        let m = CostMatrix::new(std::array::from_fn(|i| {
            std::array::from_fn(|j| if i == j { 0.0 } else { c })
        }))
        .unwrap();
        let dec = decompose(&m);
        assert_eq!(dec.p_h, 0.0);
        assert_eq!(dec.guad, c);
        let b = bound_min_cost(&dec, 0.3).unwrap();
        assert_eq!(b.c_min_lower, b.c_min_upper);
        assert_eq!(b.g_lower, b.g_upper);
    }

    #[test]
    fn reference_bounds_with_rounded_p_min() {
        let dec = decompose(&CostMatrix::reference_2014());
        let b = bound_min_cost(&dec, 0.092).unwrap();
        assert!((b.g_lower - 1.196e-6).abs() < 1e-15);
        assert!((b.c_min_lower - 4.30e-5).abs() < 1e-7);
    }

    #[test]
    fn zero_advantage_means_zero_gap() {
        let dec = decompose(&CostMatrix::new([[1e-4; 4]; 4]).unwrap());
        assert_eq!(dec.guad, 0.0);
        assert_eq!(bound_min_cost(&dec, 0.5).unwrap().g_lower, 0.0);
        assert!(matches!(
            choose_thresholds(dec.p_h, 0.0),
            Err(Error::NoSecurity { .. })
        ));
    }

    #[test]
    fn negative_advantage_is_reported() {
        let mut e = [[1e-4; 4]; 4];
        e[0][0] = 2e-4;
        let dec = decompose(&CostMatrix::new(e).unwrap());
        assert!(dec.guad < 0.0);
        assert_eq!(bound_min_cost(&dec, 0.5).unwrap().g_lower, 0.0);
    }

    #[test]
    fn threshold_example() {
        let th = choose_thresholds(4.18e-5, 1.20e-6).unwrap();
        assert!((th.s_a - 4.21e-5).abs() < 1e-12);
        assert!((th.s_v - 4.27e-5).abs() < 1e-12);
    }

    #[test]
    fn equal_thresholds_make_repudiation_vacuous() {
        let b = failure_bounds(Thresholds { s_a: 0.1, s_v: 0.1 }, 0.01, 1e4, 0.05, 0.2).unwrap();
        assert_eq!(b.p_rep, 1.0);
    }

    #[test]
    fn ordering_violations_are_named() {
        let th = Thresholds { s_a: 0.1, s_v: 0.2 };
        assert_eq!(
            failure_bounds(th, 0.1, 10.0, 0.15, 0.3),
            Err(Error::Ordering("s_a >= p_h"))
        );
        assert_eq!(
            failure_bounds(th, 0.1, 10.0, 0.05, 0.15),
            Err(Error::Ordering("C_min >= s_v"))
        );
        let swapped = Thresholds { s_a: 0.2, s_v: 0.1 };
        assert_eq!(
            failure_bounds(swapped, 0.1, 10.0, 0.05, 0.3),
            Err(Error::Ordering("s_v >= s_a"))
        );
    }

    #[test]
    fn required_length_reaches_target_level() {
        let g: f64 = 1.20e-6;
        let bound = (-g * g * 5.10e13 / 8.0).exp();
        assert!((bound.log10() + 4.0).abs() < 0.02, "{bound:e}");
    }

    #[test]
    fn required_length_examples() {
        let l = required_length(1.20e-6, 1e-4).unwrap() as f64;
        assert!((l / 5.10e13 - 1.0).abs() < 0.01);
        let l = required_length(8.05e-5, 1e-4).unwrap() as f64;
        assert!((l / 1.14e10 - 1.0).abs() < 0.01);
        assert!(required_length(0.0, 1e-4).is_err());
        assert!(required_length(1e-3, 1.0).is_err());
    }

    #[test]
    fn quoted_multiport_free_length_is_not_reproduced() {
        // g = 1.96e-4 at 1e-4 gives 1.92e9, not the quoted 1.19e9.
        let l = required_length(1.96e-4, 1e-4).unwrap() as f64;
        assert!((l / 1.92e9 - 1.0).abs() < 0.01);
        assert!((l / 1.19e9 - 1.0).abs() > 0.5);
    }

    #[test]
    fn hoeffding_basics() {
        assert_eq!(hoeffding(0.0, 100.0, Tail::Upper), 1.0);
        assert_eq!(
            hoeffding(0.1, 100.0, Tail::TwoSided),
            2.0 * hoeffding(0.1, 100.0, Tail::Lower)
        );
    }

    #[test]
    fn rescale_examples() {
        let c = CostMatrix::reference_2014();
        assert_eq!(rescale_for_loss(&c, 0.3, 0.3).unwrap(), c);
        assert!(rescale_for_loss(&c, 0.0, 0.3).is_err());
        assert!(rescale_for_loss(&c, 0.3, 1.2).is_err());

        let doubled = rescale_for_loss(&c, 0.25, 0.5).unwrap();
        let b = bound_min_cost(&decompose(&doubled), 0.092).unwrap();
        assert!((b.g_lower - 2.392e-6).abs() < 1e-15);
        let l1 =
            required_length(bound_min_cost(&decompose(&c), 0.092).unwrap().g_lower, 1e-4).unwrap();
        let l2 = required_length(b.g_lower, 1e-4).unwrap();
        assert!((l1 as f64 / l2 as f64 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn estimate_from_counts() {
        let samples = PhaseSymbol::ALL.into_iter().flat_map(|p| {
            (0..4).map(move |k| {
                let mut r = [false; 4];
                r[(p.index() + 2) % 4] = k % 2 == 0;
                (p, r)
            })
        });
        let est = estimate_cost_matrix(samples).unwrap();
        assert_eq!(est.matrix.pulses(), Some([4; 4]));
        assert_eq!(est.matrix.entries()[1][3], 0.5);
        assert_eq!(est.matrix.entries()[1][1], 0.0);
        assert!((est.std_errors[1][3] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn estimate_names_missing_state() {
        let samples = [
            (PhaseSymbol::ZERO, [false; 4]),
            (PhaseSymbol::HALF_PI, [false; 4]),
            (PhaseSymbol::THREE_HALF_PI, [false; 4]),
        ];
        assert_eq!(
            estimate_cost_matrix(samples).unwrap_err(),
            Error::EmptyClass(PhaseSymbol::PI)
        );
    }

    #[test]
    fn file_format() {
        let text = "# measured at |a|^2 = 1\npulses 10 20 30 40\n1e-4 2e-4, 3e-4 4e-4\n0 0 0 0\n\n0.5 0.5 0.5 0.5\n1 1 1 1\n";
        let m = CostMatrix::parse(text).unwrap();
        assert_eq!(m.pulses(), Some([10, 20, 30, 40]));
        assert_eq!(m.entries()[0][2], 3e-4);
        let again = CostMatrix::parse(&m.to_string()).unwrap();
        assert_eq!(again, m);

        let err = CostMatrix::parse("1 2x 3 4\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 1,
                column: 3,
                message: "invalid number `2x`".into()
            }
        );
        let err = CostMatrix::parse("0 0 0 0\n0 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = CostMatrix::parse("0 0 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = CostMatrix::parse("0 0 0 0\n0 0 1.5 0\n0 0 0 0\n0 0 0 0\n").unwrap_err();
        assert!(matches!(
            err,
            Error::Parse {
                line: 2,
                column: 5,
                ..
            }
        ));
    }

    #[test]
    fn analyze_reference_and_zero() {
        let r = analyze(&CostMatrix::reference_2014(), 1.0, 1e-4).unwrap();
        assert!(r.provable());
        assert!((r.g_lower - 1.20e-6).abs() < 5e-9);
        let l = r.length_required.unwrap() as f64;
        assert!((l / 5.10e13 - 1.0).abs() < 0.01);

        let zero = analyze(&CostMatrix::new([[0.0; 4]; 4]).unwrap(), 1.0, 1e-4).unwrap();
        assert!(!zero.provable());
        assert_eq!(zero.guad, 0.0);
        assert!(zero.thresholds.is_none() && zero.length_required.is_none());
    }

    fn matrix() -> impl Strategy<Value = CostMatrix> {
        proptest::array::uniform4(proptest::array::uniform4(0.0f64..1e-2))
            .prop_map(|e| CostMatrix::new(e).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn decomposition_reconstructs(m in matrix()) {
            let dec = decompose(&m);
            for i in 0..4 {
                for j in 0..4 {
                    // one rounding in the subtraction and one in the sum
                    let c = m.entries()[i][j];
                    prop_assert!((dec.c_h[i][j] + dec.c_prime[i][j] - c).abs() <= 2.0 * f64::EPSILON * c.max(dec.c_h[i][j]));
                    prop_assert!(dec.c_l[i][j] <= dec.c_prime[i][j]);
                }
            }
        }

        #[test]
        fn equalized_exponents(p_h in 0.0f64..0.3, ratio in 1e-2f64..10.0, length in 1.0f64..1e8) {
            // g small against p_h loses digits in s − p_h, so the gap is drawn
            // relative to the floor; the reference values sit at g/p_h ≈ 0.03.
            let g = (p_h * ratio).max(1e-9);
            let th = choose_thresholds(p_h, g).unwrap();
            let c_min = p_h + g;
            let target = g * g / 8.0;
            let rep = (th.s_v - th.s_a).powi(2) / 2.0;
            let rej = 2.0 * (th.s_a - p_h).powi(2);
            let forg = 2.0 * (c_min - th.s_v).powi(2);
            for e in [rep, rej, forg] {
                prop_assert!((e - target).abs() <= 1e-12 * target);
            }
            let b = failure_bounds(th, 0.01, length, p_h, c_min).unwrap();
            let common = target * length;
            for v in [b.p_rep, b.p_for, b.p_hon_rej] {
                prop_assert!((0.0..=1.0).contains(&v));
                if v > f64::MIN_POSITIVE {
                    prop_assert!((-v.ln() - common).abs() <= 1e-12 * common.max(1.0));
                }
            }
        }

        #[test]
        fn required_length_monotone(g in 1e-6f64..0.1, dg in 0.0f64..0.1, level in 1e-12f64..0.5) {
            let l = required_length(g, level).unwrap();
            prop_assert!(required_length(g + dg, level).unwrap() <= l);
            prop_assert!(required_length(g, level * 1.5).unwrap() <= l);
        }

        #[test]
        fn halving_gap_quadruples_length(g in 1e-6f64..0.1, level in 1e-12f64..0.5) {
            let l1 = required_length(g, level).unwrap() as f64;
            let l2 = required_length(g / 2.0, level).unwrap() as f64;
            prop_assert!((l2 - 4.0 * l1).abs() <= 4.0);
        }
    }
}
