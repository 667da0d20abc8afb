//! Scattering matrices built from transmission eigenvalues and unitaries.
//!
//! For the time-reversal class the polar decomposition reads
//!
//! ```text
//! S = diag(U, V) · [[−√(1−T), √T], [√T, √(1−T)]] · diag(Uᵀ, Vᵀ)
//!   = [[ r, t′ ], [ t, r′ ]]
//! ```
//!
//! so `r = −U√(1−T)Uᵀ`, `t′ = U√T Vᵀ`, `t = V√T Uᵀ`, `r′ = V√(1−T)Vᵀ`.
//! `t` maps light incident from the left onto the transmitted channels.

use std::io::{self, Write};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::dmpk::TransmissionSpectrum;
use crate::haar::UnitaryMatrix;
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatteringError {
    #[error("dimension mismatch: U is {u}x{u}, V is {v}x{v}, spectrum has {t} eigenvalues")]
    DimensionMismatch { u: usize, v: usize, t: usize },
}

/// Full `2N × 2N` scattering matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    channels: usize,
    matrix: DMatrix<C64>,
}

impl ScatteringMatrix {
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    fn block(&self, row: usize, col: usize) -> DMatrix<C64> {
        let n = self.channels;
        self.matrix.view((row * n, col * n), (n, n)).into_owned()
    }

    /// Reflection block `r` (left to left).
    pub fn reflection(&self) -> DMatrix<C64> {
        self.block(0, 0)
    }

    /// Transmission block `t′` (right to left).
    pub fn transmission_reverse(&self) -> DMatrix<C64> {
        self.block(0, 1)
    }

    /// Reflection block `r′` (right to right).
    pub fn reflection_reverse(&self) -> DMatrix<C64> {
        self.block(1, 1)
    }

    /// `max |S − Sᵀ|`.
    pub fn symmetry_defect(&self) -> f64 {
        let diff = &self.matrix - self.matrix.transpose();
        diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Transmission block `t = V√T Uᵀ`; entry `(α, p)` is the amplitude from
/// incident channel `p` to transmitted channel `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionBlock(DMatrix<C64>);

impl TransmissionBlock {
    /// Wrap an arbitrary (not necessarily sub-unitary) amplitude matrix.
    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    /// `V√T Uᵀ` without building the full scattering matrix.
    pub fn from_decomposition(
        u: &UnitaryMatrix,
        v: &UnitaryMatrix,
        spectrum: &TransmissionSpectrum,
    ) -> Result<Self, ScatteringError> {
        check_dims(u, v, spectrum)?;
        let sqrt_t: Vec<f64> = spectrum.eigenvalues().iter().map(|t| t.sqrt()).collect();
        Ok(Self(scaled_product(v.matrix(), &sqrt_t, u.matrix())))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn outputs(&self) -> usize {
        self.0.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.0.ncols()
    }

    /// Amplitude `t_{α p}`.
    pub fn amplitude(&self, alpha: usize, p: usize) -> C64 {
        self.0[(alpha, p)]
    }

    /// Row-major dump with a `re,im` column pair per matrix column.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let header: Vec<String> = (1..=self.inputs()).map(|j| format!("re{j},im{j}")).collect();
        writeln!(out, "{}", header.join(","))?;
        for row in self.0.row_iter() {
            let cells: Vec<String> = row.iter().map(|z| format!("{},{}", z.re, z.im)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

fn check_dims(u: &UnitaryMatrix, v: &UnitaryMatrix, spectrum: &TransmissionSpectrum) -> Result<(), ScatteringError> {
    if u.dim() != v.dim() || u.dim() != spectrum.len() {
        return Err(ScatteringError::DimensionMismatch { u: u.dim(), v: v.dim(), t: spectrum.len() });
    }
    Ok(())
}

/// `A · diag(d) · Bᵀ`.
fn scaled_product(a: &DMatrix<C64>, d: &[f64], b: &DMatrix<C64>) -> DMatrix<C64> {
    let mut scaled = a.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= C64::new(d[j], 0.0);
    }
    scaled * b.transpose()
}

pub fn assemble(
    u: &UnitaryMatrix,
    v: &UnitaryMatrix,
    spectrum: &TransmissionSpectrum,
) -> Result<ScatteringMatrix, ScatteringError> {
    check_dims(u, v, spectrum)?;
    let n = spectrum.len();
    let sqrt_t: Vec<f64> = spectrum.eigenvalues().iter().map(|t| t.sqrt()).collect();
    let sqrt_r: Vec<f64> = spectrum.eigenvalues().iter().map(|t| (1.0 - t).max(0.0).sqrt()).collect();
    let (um, vm) = (u.matrix(), v.matrix());
    let r = -scaled_product(um, &sqrt_r, um);
    let t_rev = scaled_product(um, &sqrt_t, vm);
    let t = scaled_product(vm, &sqrt_t, um);
    let r_rev = scaled_product(vm, &sqrt_r, vm);

    let mut matrix = DMatrix::zeros(2 * n, 2 * n);
    matrix.view_mut((0, 0), (n, n)).copy_from(&r);
    matrix.view_mut((0, n), (n, n)).copy_from(&t_rev);
    matrix.view_mut((n, 0), (n, n)).copy_from(&t);
    matrix.view_mut((n, n), (n, n)).copy_from(&r_rev);
    Ok(ScatteringMatrix { channels: n, matrix })
}

pub fn transmission_block(s: &ScatteringMatrix) -> TransmissionBlock {
    TransmissionBlock(s.block(1, 0))
}
