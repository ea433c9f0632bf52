// SPDX-License-Identifier: Apache-2.0

//! Terminating the decoupling network in its load and sweeping the result.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{ComplexMatrix, LinalgError};
use crate::netconv::{y_to_s, ConversionError, PortReference};
use crate::tlmodel::{assemble_pi_y, PiNetwork, TlError};
use crate::tolerances;
use crate::touchstone::NetworkData;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CascadeError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("termination is singular (condition estimate {condition:.3e}){}", at_frequency(*.frequency))]
    TerminationSingular { condition: f64, frequency: Option<f64> },
    #[error("design frequency {f0} Hz lies outside the load's range {lo}..{hi} Hz")]
    DesignFrequencyOutOfRange { f0: f64, lo: f64, hi: f64 },
    #[error("network evaluation failed at {frequency} Hz: {source}")]
    Line { frequency: f64, source: TlError },
    #[error("conversion failed at {frequency} Hz: {source}")]
    Conversion { frequency: f64, source: ConversionError },
}

fn at_frequency(f: Option<f64>) -> String {
    f.map(|f| format!(" at {f} Hz")).unwrap_or_default()
}

/// `S_comp = S₁₁ + S₁₂·S_L·(I − S₂₂·S_L)⁻¹·S₂₁`, with ports `0..N` external and `N..2N` loaded.
pub fn terminate(s_dn: &ComplexMatrix, s_load: &ComplexMatrix) -> Result<ComplexMatrix, CascadeError> {
    let n = s_load.rows();
    if !s_load.is_square() || !s_dn.is_square() || s_dn.rows() != 2 * n {
        return Err(CascadeError::Dimension(format!(
            "a {}x{} network cannot be terminated by a {}x{} load",
            s_dn.rows(),
            s_dn.cols(),
            s_load.rows(),
            s_load.cols()
        )));
    }
    let s11 = s_dn.submatrix(0, 0, n, n);
    let s12 = s_dn.submatrix(0, n, n, n);
    let s21 = s_dn.submatrix(n, 0, n, n);
    let s22 = s_dn.submatrix(n, n, n, n);
    let loop_gain = &ComplexMatrix::identity(n) - &(&s22 * s_load);
    let x = loop_gain.solve(&s21).map_err(|e| match e {
        LinalgError::Singular { condition } => CascadeError::TerminationSingular {
            condition,
            frequency: None,
        },
        other => CascadeError::Dimension(other.to_string()),
    })?;
    Ok(&s11 + &(&(&s12 * s_load) * &x))
}

/// Per-point remarks attached to a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Annotation {
    /// A branch was singular at the grid frequency; the point was evaluated at `evaluated_hz`.
    PerturbedFrequency { evaluated_hz: f64 },
    /// The design frequency is not on the grid and this is the closest point.
    NearestToDesignFrequency { design_hz: f64 },
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PerturbedFrequency { evaluated_hz } => write!(f, "perturbed:{evaluated_hz:?}"),
            Self::NearestToDesignFrequency { design_hz } => write!(f, "nearest-to-f0:{design_hz:?}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompositeResponse {
    /// Strictly ascending, hertz.
    pub frequencies: Vec<f64>,
    pub s_matrices: Vec<ComplexMatrix>,
    pub annotations: Vec<Vec<Annotation>>,
}

impl CompositeResponse {
    pub fn n_ports(&self) -> usize {
        self.s_matrices.first().map_or(0, ComplexMatrix::rows)
    }

    pub fn is_annotated(&self) -> bool {
        self.annotations.iter().any(|a| !a.is_empty())
    }
}

/// Index of the grid point matching `f` within the grid tolerance.
pub fn grid_index(frequencies: &[f64], f: f64) -> Option<usize> {
    frequencies
        .iter()
        .position(|&g| (g - f).abs() <= tolerances::GRID_MATCH * f.abs())
}

/// Index of the grid point closest to `f`.
pub fn nearest_index(frequencies: &[f64], f: f64) -> Option<usize> {
    frequencies
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - f).abs().total_cmp(&(b.1 - f).abs()))
        .map(|(k, _)| k)
}

/// S-matrix of the π-network at `f`, nudging the frequency once if a branch is singular there.
fn network_s(
    pi: &PiNetwork,
    f: f64,
    reference: PortReference,
    fatal: bool,
) -> Result<(ComplexMatrix, Option<Annotation>), CascadeError> {
    let (y, note) = match assemble_pi_y(pi, f) {
        Ok(y) => (y, None),
        Err(TlError::FrequencySingular { .. }) if !fatal => {
            let nudged = f * (1.0 + tolerances::FREQUENCY_PERTURBATION);
            let y = assemble_pi_y(pi, nudged).map_err(|source| CascadeError::Line { frequency: f, source })?;
            (y, Some(Annotation::PerturbedFrequency { evaluated_hz: nudged }))
        }
        Err(source) => return Err(CascadeError::Line { frequency: f, source }),
    };
    let s = y_to_s(&y, reference).map_err(|source| CascadeError::Conversion { frequency: f, source })?;
    Ok((s, note))
}

/// Composite response of `pi` terminated in `load` at every grid point of the load.
pub fn sweep(pi: &PiNetwork, load: &NetworkData, reference: PortReference) -> Result<CompositeResponse, CascadeError> {
    let n = load.n_ports;
    if pi.n_ports() != 2 * n {
        return Err(CascadeError::Dimension(format!(
            "a {}-port network cannot drive a {n}-port load",
            pi.n_ports()
        )));
    }
    let f0 = pi.f0();
    let (lo, hi) = match (load.frequencies.first(), load.frequencies.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(CascadeError::Dimension("load has no frequency points".into())),
    };
    if f0 < lo * (1.0 - tolerances::GRID_MATCH) || f0 > hi * (1.0 + tolerances::GRID_MATCH) {
        return Err(CascadeError::DesignFrequencyOutOfRange { f0, lo, hi });
    }
    let on_grid = grid_index(&load.frequencies, f0);
    let nearest = if on_grid.is_none() {
        nearest_index(&load.frequencies, f0)
    } else {
        None
    };

    let points: Vec<(ComplexMatrix, Vec<Annotation>)> = load
        .frequencies
        .par_iter()
        .zip(load.matrices.par_iter())
        .enumerate()
        .map(|(k, (&f, s_load))| {
            let is_design = on_grid == Some(k);
            let (s_pi, note) = network_s(pi, f, reference, is_design)?;
            let s = terminate(&s_pi, s_load).map_err(|e| match e {
                CascadeError::TerminationSingular { condition, .. } => CascadeError::TerminationSingular {
                    condition,
                    frequency: Some(f),
                },
                other => other,
            })?;
            let mut notes: Vec<Annotation> = note.into_iter().collect();
            if nearest == Some(k) {
                notes.push(Annotation::NearestToDesignFrequency { design_hz: f0 });
            }
            Ok((s, notes))
        })
        .collect::<Result<_, CascadeError>>()?;

    let (s_matrices, annotations) = points.into_iter().unzip();
    Ok(CompositeResponse {
        frequencies: load.frequencies.clone(),
        s_matrices,
        annotations,
    })
}
