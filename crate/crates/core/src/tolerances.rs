// SPDX-License-Identifier: Apache-2.0

//! Numerical thresholds shared by the library, its tests and the CLI.

/// Maximum |s_ij - s_ji| accepted for an input that must be symmetric.
pub const SYMMETRY_INPUT: f64 = 1e-8;

/// Algebraic defects (unitarity, reconstruction) of the factorizations.
pub const ALGEBRAIC: f64 = 1e-10;

/// Passivity slack on the largest singular value of a load.
pub const PASSIVITY: f64 = 1e-9;

/// A matrix whose condition estimate reaches this value is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Relative real-part budget of an admittance matrix that should be lossless.
pub const LOSSLESS_REAL_PART: f64 = 1e-9;

/// Smallest |b| (ohms) for which a two-port has a Y representation.
pub const DEGENERATE_B: f64 = 1e-12;

/// Smallest |sin θ(f)| for which a branch is evaluable.
pub const EPS_SIN: f64 = 1e-9;

/// Relative frequency nudge applied when a sweep point lands on a branch singularity.
pub const FREQUENCY_PERTURBATION: f64 = 1e-9;

/// Singular values of the load within this distance of 1 are flagged as total reflection.
pub const TOTAL_REFLECTION: f64 = 1e-12;

/// Relative distance within which a frequency is considered to lie on a grid point.
pub const GRID_MATCH: f64 = 1e-9;

/// Default ceiling on synthesized characteristic impedance; larger branches are left out.
pub const DEFAULT_Z0_MAX: f64 = 5000.0;

/// Advisory window of characteristic impedances that are comfortable to fabricate.
pub const DEFAULT_Z0_BOUNDS: (f64, f64) = (10.0, 300.0);

/// Default reference impedance of every port.
pub const DEFAULT_Z_REF: f64 = 50.0;
