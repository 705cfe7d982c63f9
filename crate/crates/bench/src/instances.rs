//! Deterministic small instances paired with their independent references.

use nep_core::probing::gaussian_matrix;
use nep_core::problems::{gun_form, loaded_string, quadratic, rational_damping, NepProblem};
use nep_core::sampling::{chebyshev_points, Region, SamplingSet};
use nep_core::{DenseMatrix, Result, C64};

use crate::oracle::{
    determinant_scan, loaded_string_polynomial, quadratic_polynomial, rational_damping_polynomial, to_mat, GunOracle,
};

/// `shift·I + scale·G Gᵀ / n` with a seeded Gaussian `G`; symmetric positive
/// semidefinite for `shift ≥ 0`.
pub fn spd(n: usize, seed: u64, shift: f64, scale: f64) -> DenseMatrix {
    let g = gaussian_matrix(n, n, true, seed);
    let mut s = g
        .matmul(&g.adjoint())
        .expect("square factors")
        .scaled(C64::new(scale / n as f64, 0.0));
    s.add_scaled(C64::new(shift, 0.0), &DenseMatrix::identity(n)).expect("same shape");
    s.into_real_if_exact()
}

/// A problem, its target region and sampling set, and reference eigenvalues
/// computed without the library's solvers.
pub struct OracleCase {
    pub name: &'static str,
    pub problem: NepProblem,
    pub sampling: SamplingSet,
    pub reference: Vec<C64>,
    pub tolerance: f64,
}

impl OracleCase {
    pub fn region(&self) -> Region {
        *self.sampling.region().expect("oracle sampling sets carry a region")
    }
}

/// `loaded_string(20)` on `[3, 5000]` against the cleared quadratic companion.
pub fn string_case() -> Result<OracleCase> {
    let region = Region::interval(3.0, 5000.0)?;
    Ok(OracleCase {
        name: "loaded_string_20",
        problem: loaded_string(20)?,
        sampling: chebyshev_points(&region, 60)?,
        reference: loaded_string_polynomial(20).eigenvalues(),
        tolerance: 1e-8,
    })
}

pub fn quadratic_matrices() -> (DenseMatrix, DenseMatrix, DenseMatrix) {
    (spd(6, 1, 1.0, 0.5), spd(6, 2, 0.0, 0.3), spd(6, 3, 1.0, 4.0))
}

/// Damped 6×6 quadratic on a rectangle holding four eigenvalues.
pub fn quadratic_case() -> Result<OracleCase> {
    let (m, c, k) = quadratic_matrices();
    let reference = quadratic_polynomial(&m, &c, &k).eigenvalues();
    let region = Region::rectangle(C64::new(-0.3, 0.7), C64::new(0.1, 1.6))?;
    Ok(OracleCase {
        name: "quadratic_6",
        problem: quadratic(m, c, k)?,
        sampling: region.default_contour(40)?,
        reference,
        tolerance: 1e-8,
    })
}

pub const DAMPING_G_INF: f64 = 0.5;
pub const DAMPING_A: [f64; 2] = [1.0, 0.5];
pub const DAMPING_B: [f64; 2] = [2.0, 5.0];

pub fn rational_damping_matrices() -> (DenseMatrix, DenseMatrix, DenseMatrix) {
    (spd(8, 4, 1.0, 0.5), spd(8, 5, 1.0, 3.0), spd(8, 6, 0.0, 1.0))
}

pub fn rational_damping_problem() -> Result<NepProblem> {
    let (m, ks, kv) = rational_damping_matrices();
    rational_damping(m, ks, kv, DAMPING_G_INF, &DAMPING_A, &DAMPING_B)
}

pub fn rational_damping_region() -> Region {
    Region::rectangle(C64::new(-0.3, 1.2), C64::new(0.1, 2.07)).expect("valid rectangle")
}

/// 8×8 two-term viscoelastic model against the degree-4 companion of the
/// denominator-cleared polynomial.
pub fn rational_damping_case() -> Result<OracleCase> {
    let (m, ks, kv) = rational_damping_matrices();
    let reference = rational_damping_polynomial(&m, &ks, &kv, DAMPING_G_INF, &DAMPING_A, &DAMPING_B).eigenvalues();
    Ok(OracleCase {
        name: "rational_damping_8",
        problem: rational_damping_problem()?,
        sampling: rational_damping_region().default_contour(40)?,
        reference,
        tolerance: 1e-8,
    })
}

pub const GUN_KAPPA: [f64; 2] = [0.0, 1.2];

/// Terms `K, M, W₁, W₂` of the synthetic 6×6 cavity model.
pub fn gun_matrices() -> (DenseMatrix, DenseMatrix, DenseMatrix, DenseMatrix) {
    let mut k = spd(6, 7, 0.0, 0.1);
    k.add_scaled(C64::new(1.0, 0.0), &DenseMatrix::diag(&[1.0, 2.25, 4.0, 6.25, 9.0, 12.25]))
        .expect("same shape");
    (k, spd(6, 8, 1.0, 0.05), spd(6, 9, 0.0, 0.1), spd(6, 10, 0.0, 0.05))
}

pub fn gun_problem() -> Result<NepProblem> {
    let (k, m, w1, w2) = gun_matrices();
    gun_form(k, m, vec![w1, w2], &GUN_KAPPA)
}

/// Rectangle right of the branch cut `(0, κ₂)` holding four eigenvalues.
pub fn gun_region() -> Region {
    Region::rectangle(C64::new(1.3, -0.2), C64::new(3.2, 0.5)).expect("valid rectangle")
}

pub fn gun_oracle() -> GunOracle {
    let (k, m, w1, w2) = gun_matrices();
    GunOracle {
        k: to_mat(&k),
        m: to_mat(&m),
        w: vec![to_mat(&w1), to_mat(&w2)],
        kappa: GUN_KAPPA.to_vec(),
    }
}

/// Synthetic cavity model against Newton-refined minima of `log |det T|`.
pub fn gun_case() -> Result<OracleCase> {
    let region = gun_region();
    Ok(OracleCase {
        name: "gun_6",
        problem: gun_problem()?,
        sampling: region.default_contour(40)?,
        reference: determinant_scan(&gun_oracle(), &region, 121, 31),
        tolerance: 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_is_symmetric_and_shifted() {
        let s = spd(5, 3, 2.0, 1.0);
        for i in 0..5 {
            assert!(s.get(i, i).re >= 2.0);
            for j in 0..5 {
                assert_eq!(s.get(i, j), s.get(j, i));
            }
        }
    }

    #[test]
    fn references_lie_in_their_regions() {
        for case in [quadratic_case().unwrap(), rational_damping_case().unwrap(), gun_case().unwrap()] {
            let region = case.region();
            let inside = case.reference.iter().filter(|&&z| region.contains(z, 0.0)).count();
            assert!(inside >= 4, "{}: {inside}", case.name);
        }
    }
}
