// SPDX-License-Identifier: Apache-2.0

//! Transmission-line branches and the generalized π-network built from them.
//!
//! A branch is an ideal TEM line described by its characteristic
//! impedance and its electrical length at the design frequency; the
//! length scales linearly with frequency. With `a = cos θ` and
//! `b̃ = Z₀ sin θ` the branch admittance is
//!
//! ```text
//! [ a/(j b̃)   −1/(j b̃) ]
//! [ −1/(j b̃)   a/(j b̃) ]
//! ```
//!
//! A series branch between ports `i` and `j` contributes the off-diagonal
//! term to `(i, j)` and the diagonal terms to both ports. A shunt branch
//! `(i, i)` is a line from port `i` to ground and only contributes
//! `a/(j b̃)` to the diagonal.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use thiserror::Error;

use crate::linalg::{ComplexMatrix, C64, J};
use crate::netconv::TwoPortABCD;
use crate::tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TlError {
    #[error("invalid branch ({i}, {j}): {reason}")]
    InvalidBranch { i: usize, j: usize, reason: String },
    #[error("invalid frequency {0} Hz")]
    InvalidFrequency(f64),
    #[error("branches {branches:?} have |sin θ| <= {eps:e} at {frequency} Hz")]
    FrequencySingular {
        frequency: f64,
        branches: Vec<(usize, usize)>,
        eps: f64,
    },
}

/// One ideal transmission line of the π-network. Port indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TLBranch {
    i: usize,
    j: usize,
    z0: f64,
    theta0: f64,
}

impl TLBranch {
    /// Endpoints are reordered so that `i <= j`; `i == j` is a shunt line to ground.
    pub fn new(i: usize, j: usize, z0: f64, theta0: f64) -> Result<Self, TlError> {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let invalid = |reason: String| TlError::InvalidBranch { i, j, reason };
        if !(z0 > 0.0 && z0.is_finite()) {
            return Err(invalid(format!("characteristic impedance {z0} ohm")));
        }
        if !(theta0 > 0.0 && theta0 < TAU) {
            return Err(invalid(format!("electrical length {theta0} rad outside (0, 2π)")));
        }
        Ok(Self { i, j, z0, theta0 })
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.i, self.j)
    }

    pub fn is_shunt(&self) -> bool {
        self.i == self.j
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    /// Electrical length at the design frequency, radians.
    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn theta_at(&self, f: f64, f0: f64) -> f64 {
        self.theta0 * f / f0
    }

    /// `(a, b̃)` at frequency `f`.
    pub fn a_b(&self, f: f64, f0: f64) -> (f64, f64) {
        let theta = self.theta_at(f, f0);
        (theta.cos(), self.z0 * theta.sin())
    }
}

/// Chain parameters of a branch at frequency `f`.
pub fn branch_abcd(branch: &TLBranch, f: f64, f0: f64) -> Result<TwoPortABCD, TlError> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(TlError::InvalidFrequency(f));
    }
    if !(f0 > 0.0 && f0.is_finite()) {
        return Err(TlError::InvalidFrequency(f0));
    }
    let theta = branch.theta_at(f, f0);
    let (s, c) = theta.sin_cos();
    Ok(TwoPortABCD {
        a: C64::from(c),
        b: J * (branch.z0 * s),
        c: J * (s / branch.z0),
        d: C64::from(c),
    })
}

/// Generalized π-network over `n_ports` ports with design frequency `f0`.
///
/// Branches are keyed by `(i, j)` with `i <= j`, so the map is symmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PiNetwork {
    n_ports: usize,
    f0: f64,
    branches: BTreeMap<(usize, usize), TLBranch>,
}

impl PiNetwork {
    pub fn new(n_ports: usize, f0: f64) -> Result<Self, TlError> {
        if !(f0 > 0.0 && f0.is_finite()) {
            return Err(TlError::InvalidFrequency(f0));
        }
        Ok(Self {
            n_ports,
            f0,
            branches: BTreeMap::new(),
        })
    }

    /// Inserts or replaces a branch.
    pub fn insert(&mut self, branch: TLBranch) -> Result<(), TlError> {
        let (i, j) = branch.endpoints();
        if j >= self.n_ports {
            return Err(TlError::InvalidBranch {
                i,
                j,
                reason: format!("port index outside a {}-port network", self.n_ports),
            });
        }
        self.branches.insert((i, j), branch);
        Ok(())
    }

    pub fn remove(&mut self, i: usize, j: usize) -> Option<TLBranch> {
        self.branches.remove(&(i.min(j), i.max(j)))
    }

    pub fn branch(&self, i: usize, j: usize) -> Option<&TLBranch> {
        self.branches.get(&(i.min(j), i.max(j)))
    }

    /// Branches in ascending `(i, j)` order.
    pub fn branches(&self) -> impl Iterator<Item = &TLBranch> {
        self.branches.values()
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }
}

/// Every `(i, j)` with `i <= j < n_ports`: `n(n−1)/2` series pairs and `n` shunts.
pub fn pi_topology(n_ports: usize) -> Vec<(usize, usize)> {
    (0..n_ports).flat_map(|i| (i..n_ports).map(move |j| (i, j))).collect()
}

/// Admittance matrix of the π-network at frequency `f`.
///
/// Absent branches are open circuits. Every term is a real number divided
/// by `j`, so the result is exactly imaginary and symmetric.
pub fn assemble_pi_y(net: &PiNetwork, f: f64) -> Result<ComplexMatrix, TlError> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(TlError::InvalidFrequency(f));
    }
    let n = net.n_ports;
    let mut im = vec![0.0_f64; n * n];
    let mut singular = Vec::new();
    for br in net.branches() {
        let (a, bt) = br.a_b(f, net.f0);
        if !(bt.abs() > tolerances::EPS_SIN * br.z0) {
            singular.push(br.endpoints());
            continue;
        }
        let (i, j) = br.endpoints();
        // a/(j b̃) = −j·a/b̃ and −1/(j b̃) = j/b̃
        im[i * n + i] -= a / bt;
        if i != j {
            im[j * n + j] -= a / bt;
            im[i * n + j] += 1.0 / bt;
            im[j * n + i] += 1.0 / bt;
        }
    }
    if !singular.is_empty() {
        return Err(TlError::FrequencySingular {
            frequency: f,
            branches: singular,
            eps: tolerances::EPS_SIN,
        });
    }
    let entries = im.into_iter().map(|x| C64::new(0.0, x)).collect();
    ComplexMatrix::from_row_major(n, n, entries).map_err(|_| TlError::InvalidFrequency(f))
}
