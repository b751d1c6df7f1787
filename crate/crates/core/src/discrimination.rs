//! Minimum-error discrimination of the four-phase coherent constellation.
//!
//! The Gram matrix of `{|α⟩, |iα⟩, |−α⟩, |−iα⟩}` is circulant, so it is
//! diagonalized exactly by the 4-point discrete Fourier basis. Its square root,
//! and with it the square-root measurement (SRM) statistics, follow in closed
//! form from the four Fourier eigenvalues.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues below this are treated as rounding noise around zero.
const PSD_TOLERANCE: f64 = 1e-12;

/// `G_kl = ⟨α_k|α_l⟩` for the symmetric four-phase constellation.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    entries: [[Complex64; 4]; 4],
    /// Set when built by [`gram_matrix`], enabling the cancellation-free spectrum.
    alpha_sq: Option<f64>,
}

impl GramMatrix {
    /// Builds a Gram matrix from explicit entries. The entries must be
    /// Hermitian with a unit diagonal and circulant.
    pub fn from_entries(entries: [[Complex64; 4]; 4]) -> Result<Self> {
        for k in 0..4 {
            if (entries[k][k] - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
                return Err(Error::NumericalDomain(
                    "Gram matrix diagonal must be 1".into(),
                ));
            }
            for l in 0..4 {
                if (entries[k][l] - entries[l][k].conj()).norm() > 1e-12 {
                    return Err(Error::NumericalDomain(
                        "Gram matrix must be Hermitian".into(),
                    ));
                }
                if (entries[k][l] - entries[0][(l + 4 - k) % 4]).norm() > 1e-12 {
                    return Err(Error::NumericalDomain(
                        "Gram matrix must be circulant".into(),
                    ));
                }
            }
        }
        Ok(Self {
            entries,
            alpha_sq: None,
        })
    }

    pub fn entries(&self) -> &[[Complex64; 4]; 4] {
        &self.entries
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.entries[k][l]
    }

    /// `λ_m = Σ_k G_{0k}·e^{−iπmk/2}`. Real for a Hermitian circulant.
    pub fn eigenvalues(&self) -> [f64; 4] {
        if let Some(a) = self.alpha_sq {
            return constellation_spectrum(a);
        }
        std::array::from_fn(|m| {
            (0..4)
                .map(|k| {
                    self.entries[0][k] * Complex64::from_polar(1.0, -FRAC_PI_2 * (m * k) as f64)
                })
                .sum::<Complex64>()
                .re
        })
    }
}

/// Gram matrix of the four coherent states with mean photon number `alpha_sq`.
pub fn gram_matrix(alpha_sq: f64) -> Result<GramMatrix> {
    if !(alpha_sq >= 0.0) || !alpha_sq.is_finite() {
        return Err(Error::Parameter {
            name: "alpha_sq",
            value: alpha_sq,
            reason: "must be finite and non-negative",
        });
    }
    // ⟨α|β⟩ = exp(−|α|²/2 − |β|²/2 + α*β); with β = α·i^d this is
    // exp(|α|²(i^d − 1)).
    let first_row: [Complex64; 4] = std::array::from_fn(|d| {
        let unit = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ][d];
        (alpha_sq * (unit - 1.0)).exp()
    });
    let entries = std::array::from_fn(|k| std::array::from_fn(|l| first_row[(l + 4 - k) % 4]));
    Ok(GramMatrix {
        entries,
        alpha_sq: Some(alpha_sq),
    })
}

/// Spectrum of the constellation Gram matrix as Poisson weights:
/// `λ_m = 4·Σ_{n ≡ m (mod 4)} e^{−a}·aⁿ/n!`. Every term is positive, so the
/// small eigenvalues keep full relative precision where the Fourier sum of
/// the entries would cancel.
fn constellation_spectrum(alpha_sq: f64) -> [f64; 4] {
    let mut lambda = [0.0; 4];
    if alpha_sq == 0.0 {
        lambda[0] = 4.0;
        return lambda;
    }
    let ln_a = alpha_sq.ln();
    let mut ln_term = -alpha_sq;
    let mut n = 0usize;
    loop {
        let term = ln_term.exp();
        lambda[n % 4] += term;
        n += 1;
        if n as f64 > alpha_sq
            && n >= 4
            && term < 1e-18 * lambda[(n - 1) % 4].max(f64::MIN_POSITIVE)
        {
            break;
        }
        ln_term += ln_a - (n as f64).ln();
    }
    lambda.map(|l| 4.0 * l)
}

/// `P(j | i)`: probability a measurement reports state `j` when `i` was sent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeMatrix {
    entries: [[f64; 4]; 4],
}

impl OutcomeMatrix {
    pub const IDENTITY: Self = Self {
        entries: [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ],
    };

    pub const UNIFORM: Self = Self {
        entries: [[0.25; 4]; 4],
    };

    /// Rows must be probability vectors (sum 1 within `1e-9`).
    pub fn new(entries: [[f64; 4]; 4]) -> Result<Self> {
        for row in &entries {
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::NumericalDomain(
                    "outcome probabilities must lie in [0, 1]".into(),
                ));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::NumericalDomain(
                    "outcome matrix rows must sum to 1".into(),
                ));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[[f64; 4]; 4] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64; 4] {
        &self.entries[i]
    }

    /// Average probability of a correct answer under equal priors.
    pub fn success_probability(&self) -> f64 {
        (0..4).map(|i| self.entries[i][i]).sum::<f64>() / 4.0
    }
}

/// Square roots of the Gram eigenvalues, rejecting non-PSD input.
fn sqrt_eigenvalues(g: &GramMatrix) -> Result<[f64; 4]> {
    let lambda = g.eigenvalues();
    let mut roots = [0.0; 4];
    for (r, &l) in roots.iter_mut().zip(&lambda) {
        if l < -PSD_TOLERANCE || !l.is_finite() {
            return Err(Error::NumericalDomain(format!(
                "Gram matrix is not positive semidefinite (eigenvalue {l:e})"
            )));
        }
        *r = l.max(0.0).sqrt();
    }
    Ok(roots)
}

/// Outcome statistics of the square-root measurement, `P(j|i) = |(G^{1/2})_{ij}|²`.
pub fn srm_outcomes(g: &GramMatrix) -> Result<OutcomeMatrix> {
    let roots = sqrt_eigenvalues(g)?;
    // (G^{1/2})_{ij} depends only on d = j − i (mod 4).
    let sqrt_row: [Complex64; 4] = std::array::from_fn(|d| {
        roots
            .iter()
            .enumerate()
            .map(|(m, &r)| r * Complex64::from_polar(1.0, FRAC_PI_2 * (m * d) as f64))
            .sum::<Complex64>()
            / 4.0
    });
    let entries =
        std::array::from_fn(|i| std::array::from_fn(|j| sqrt_row[(j + 4 - i) % 4].norm_sqr()));
    Ok(OutcomeMatrix { entries })
}

/// Minimum probability of misidentifying which of the four equiprobable
/// signature states was sent, `1 − (Σ_m √λ_m)²/16`.
pub fn min_error_probability(alpha_sq: f64) -> Result<f64> {
    let roots = sqrt_eigenvalues(&gram_matrix(alpha_sq)?)?;
    let s: f64 = roots.iter().sum();
    Ok((1.0 - s * s / 16.0).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_at_zero_is_all_ones() {
        let g = gram_matrix(0.0).unwrap();
        for row in g.entries() {
            for &e in row {
                assert_eq!(e, Complex64::new(1.0, 0.0));
            }
        }
    }

    #[test]
    fn gram_at_one() {
        let g = gram_matrix(1.0).unwrap();
        assert!((g.get(0, 1).re - 0.19877).abs() < 1e-5);
        assert!((g.get(0, 1).im - 0.30956).abs() < 1e-5);
        assert!((g.get(0, 2).re - (-2f64).exp()).abs() < 1e-15);
        assert!(g.get(0, 2).im.abs() < 1e-15);
    }

    #[test]
    fn gram_is_hermitian_psd_circulant() {
        for a in [0.0, 0.1, 1.0, 3.7, 11.0] {
            let g = gram_matrix(a).unwrap();
            assert!(GramMatrix::from_entries(*g.entries()).is_ok());
            assert!(g.eigenvalues().iter().all(|&l| l >= -1e-12));
        }
    }

    #[test]
    fn gram_orthogonal_limit() {
        let g = gram_matrix(50.0).unwrap();
        for k in 0..4 {
            for l in 0..4 {
                if k != l {
                    assert!(g.get(k, l).norm() < 1e-20);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_gram() {
        let mut e = *gram_matrix(1.0).unwrap().entries();
        e[0][1] = Complex64::new(0.9, 0.0);
        assert!(GramMatrix::from_entries(e).is_err());
        assert!(gram_matrix(-1.0).is_err());
    }

    #[test]
    fn non_psd_input_is_a_domain_error() {
        // Circulant, Hermitian, unit diagonal, but with a negative eigenvalue.
        let c = |x: f64| Complex64::new(x, 0.0);
        let row = [c(1.0), c(0.0), c(0.9), c(0.0)];
        let entries = std::array::from_fn(|k| std::array::from_fn(|l| row[(l + 4 - k) % 4]));
        let row2 = [c(1.0), c(0.9), c(0.2), c(0.9)];
        let bad = std::array::from_fn(|k| std::array::from_fn(|l| row2[(l + 4 - k) % 4]));
        assert!(srm_outcomes(&GramMatrix::from_entries(entries).unwrap()).is_ok());
        assert!(matches!(
            srm_outcomes(&GramMatrix::from_entries(bad).unwrap()),
            Err(Error::NumericalDomain(_))
        ));
    }

    #[test]
    fn srm_on_orthogonal_states_is_perfect() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let mut id = [[c(0.0); 4]; 4];
        for (k, row) in id.iter_mut().enumerate() {
            row[k] = c(1.0);
        }
        let out = srm_outcomes(&GramMatrix::from_entries(id).unwrap()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((out.entries()[i][j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn srm_at_one_photon() {
        let out = srm_outcomes(&gram_matrix(1.0).unwrap()).unwrap();
        let diag = out.entries()[0][0];
        for i in 0..4 {
            assert!((out.entries()[i][i] - diag).abs() < 1e-14);
            assert!((out.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!((1.0 - diag - 0.092).abs() < 1e-3);
    }

    #[test]
    fn series_spectrum_matches_fourier_sum() {
        for a in [0.01, 0.3, 1.0, 4.0, 11.0] {
            let g = gram_matrix(a).unwrap();
            let generic = GramMatrix::from_entries(*g.entries())
                .unwrap()
                .eigenvalues();
            let series = g.eigenvalues();
            for m in 0..4 {
                assert!((generic[m] - series[m]).abs() < 1e-13, "a={a} m={m}");
            }
            assert!((series.iter().sum::<f64>() - 4.0).abs() < 1e-13);
        }
    }

    #[test]
    fn p_min_values() {
        assert_eq!(min_error_probability(0.0).unwrap(), 0.75);
        assert!((min_error_probability(1.0).unwrap() - 0.092).abs() < 1e-3);
        assert!(min_error_probability(40.0).unwrap() < 1e-15);
    }

    #[test]
    fn p_min_matches_srm_diagonal() {
        for a in [0.05, 0.5, 1.0, 2.5, 7.0] {
            let srm = srm_outcomes(&gram_matrix(a).unwrap()).unwrap();
            let p = min_error_probability(a).unwrap();
            assert!((1.0 - srm.success_probability() - p).abs() < 1e-12);
        }
    }

    #[test]
    fn p_min_is_monotone() {
        let grid: Vec<f64> = (0..=110).map(|k| k as f64 * 0.1).collect();
        let values: Vec<f64> = grid
            .iter()
            .map(|&a| min_error_probability(a).unwrap())
            .collect();
        for w in values.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "{w:?}");
        }
    }

    #[test]
    fn outcome_matrix_validation() {
        assert!(OutcomeMatrix::new([[0.5, 0.5, 0.0, 0.0]; 4]).is_ok());
        assert!(OutcomeMatrix::new([[0.5, 0.6, 0.0, 0.0]; 4]).is_err());
        assert_eq!(OutcomeMatrix::UNIFORM.success_probability(), 0.25);
    }
}
