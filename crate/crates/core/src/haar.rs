//! Haar-random unitary matrices.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::C64;

/// Square unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(DMatrix<C64>);

impl UnitaryMatrix {
    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Wraps `m` if it is square and unitary to within `tol` (max-abs norm).
    pub fn try_from_matrix(m: DMatrix<C64>, tol: f64) -> Option<Self> {
        if !m.is_square() {
            return None;
        }
        (unitarity_defect(&m) <= tol).then_some(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }
}

/// `max |(M†M − I)_ij|`.
pub fn unitarity_defect(m: &DMatrix<C64>) -> f64 {
    let gram = m.adjoint() * m;
    let n = gram.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Draw from the Haar measure on `U(n)`.
///
/// QR-factorize a matrix of i.i.d. standard complex Gaussians and rotate each
/// column of `Q` by the phase of the matching diagonal entry of `R`. Without
/// that phase fix the distribution of `Q` depends on the factorization's
/// conventions and is not Haar.
pub fn sample_haar<R: Rng + ?Sized>(n: usize, rng: &mut R) -> UnitaryMatrix {
    assert!(n >= 1, "unitary dimension must be at least 1");
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    });
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    UnitaryMatrix(q)
}
