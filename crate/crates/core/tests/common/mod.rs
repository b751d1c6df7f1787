//! Independent reference for the four-state discrimination problem, built in
//! a truncated photon-number basis with a general Hermitian eigensolver.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector};

pub struct FockReference {
    pub gram: [[Complex<f64>; 4]; 4],
    pub srm: [[f64; 4]; 4],
    pub p_min: f64,
    pub tail: f64,
}

/// Coherent state `|α·i^k⟩` with `|α|² = alpha_sq`, truncated at `dim` photons.
fn coherent(alpha_sq: f64, k: usize, dim: usize) -> DVector<Complex<f64>> {
    let alpha = Complex::new(0.0, std::f64::consts::FRAC_PI_2 * k as f64).exp() * alpha_sq.sqrt();
    let mut v = DVector::zeros(dim);
    let mut amp = Complex::new((-alpha_sq / 2.0).exp(), 0.0);
    for n in 0..dim {
        v[n] = amp;
        amp = amp * alpha / ((n + 1) as f64).sqrt();
    }
    v
}

pub fn fock_reference(alpha_sq: f64) -> FockReference {
    let dim = (4.0 * alpha_sq).ceil() as usize + 40;
    let states: Vec<_> = (0..4).map(|k| coherent(alpha_sq, k, dim)).collect();
    let tail = 1.0 - states[0].norm_squared();
    let gram = std::array::from_fn(|k| std::array::from_fn(|l| states[k].dotc(&states[l])));

    let mut rho = DMatrix::<Complex<f64>>::zeros(dim, dim);
    for s in &states {
        rho += s * s.adjoint() * Complex::new(0.25, 0.0);
    }
    let eig = rho.symmetric_eigen();
    let largest = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let inv_sqrt = DVector::from_iterator(
        dim,
        eig.eigenvalues.iter().map(|&l| {
            if l > 1e-13 * largest {
                1.0 / l.sqrt()
            } else {
                0.0
            }
        }),
    );
    let u = &eig.eigenvectors;
    let rho_inv_sqrt =
        u * DMatrix::from_diagonal(&inv_sqrt.map(|x| Complex::new(x, 0.0))) * u.adjoint();

    let srm: [[f64; 4]; 4] = std::array::from_fn(|i| {
        let w = &rho_inv_sqrt * &states[i];
        std::array::from_fn(|j| 0.25 * states[j].dotc(&w).norm_sqr())
    });
    let p_min = 1.0 - (0..4).map(|i| srm[i][i]).sum::<f64>() / 4.0;
    FockReference {
        gram,
        srm,
        p_min,
        tail,
    }
}
