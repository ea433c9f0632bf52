// SPDX-License-Identifier: Apache-2.0

//! Conversions between S, Y and two-port ABCD parameters.

use thiserror::Error;

use crate::linalg::{ComplexMatrix, LinalgError, C64, ONE};
use crate::tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConversionError {
    #[error("invalid reference impedance {0} ohm")]
    InvalidReference(f64),
    #[error("conversion is singular (condition estimate {condition:.3e})")]
    Singular { condition: f64 },
    #[error("degenerate branch: |b| = {b_abs:.3e} ohm has no admittance representation")]
    DegenerateBranch { b_abs: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn singular(e: LinalgError) -> ConversionError {
    match e {
        LinalgError::Singular { condition } => ConversionError::Singular { condition },
        other => ConversionError::Linalg(other),
    }
}

/// Uniform real reference impedance shared by all ports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortReference(f64);

impl PortReference {
    pub fn new(z_ref: f64) -> Result<Self, ConversionError> {
        if z_ref > 0.0 && z_ref.is_finite() {
            Ok(Self(z_ref))
        } else {
            Err(ConversionError::InvalidReference(z_ref))
        }
    }

    pub fn ohms(self) -> f64 {
        self.0
    }
}

impl Default for PortReference {
    fn default() -> Self {
        Self(tolerances::DEFAULT_Z_REF)
    }
}

/// Chain parameters of a two-port: `a, d` dimensionless, `b` in ohms, `c` in siemens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPortABCD {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl TwoPortABCD {
    pub fn determinant(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }
}

/// `y = (1/z_ref)·(I − s)·(I + s)⁻¹`.
pub fn s_to_y(s: &ComplexMatrix, reference: PortReference) -> Result<ComplexMatrix, ConversionError> {
    let n = s.rows();
    let eye = ComplexMatrix::identity(n);
    let plus = eye.checked_add(s)?;
    let minus = eye.checked_sub(s)?;
    // (I − s) and (I + s)⁻¹ commute, so a left solve gives the same product.
    let y = plus.solve(&minus).map_err(singular)?;
    Ok(y.scale_real(1.0 / reference.ohms()))
}

/// `s = (I − z_ref·y)·(I + z_ref·y)⁻¹`.
pub fn y_to_s(y: &ComplexMatrix, reference: PortReference) -> Result<ComplexMatrix, ConversionError> {
    let n = y.rows();
    let eye = ComplexMatrix::identity(n);
    let zy = y.scale_real(reference.ohms());
    let plus = eye.checked_add(&zy)?;
    let minus = eye.checked_sub(&zy)?;
    plus.solve(&minus).map_err(singular)
}

/// Admittance matrix of a two-port from its chain parameters.
pub fn abcd_to_y2(m: &TwoPortABCD) -> Result<ComplexMatrix, ConversionError> {
    let b_abs = m.b.norm();
    if !(b_abs > tolerances::DEGENERATE_B) {
        return Err(ConversionError::DegenerateBranch { b_abs });
    }
    let y = ComplexMatrix::from_rows(&[
        vec![m.d / m.b, (m.b * m.c - m.a * m.d) / m.b],
        vec![-ONE / m.b, m.a / m.b],
    ])?;
    Ok(y)
}
