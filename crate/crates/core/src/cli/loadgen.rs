// SPDX-License-Identifier: Apache-2.0

//! Seeded synthetic coupled loads.
//!
//! At the design frequency the load is a random complex symmetric matrix
//! scaled so that its largest singular value equals the coupling level.
//! Away from it every entry is multiplied by a real roll-off
//! `1/(1 + (q·x)²)` and by per-port all-pass factors
//! `(1 − j·k_i·x)/(1 + j·k_i·x)`, with `x = (f − f0)/f0`. Both keep the
//! matrix symmetric and never raise its singular values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{ComplexMatrix, C64};
use crate::netconv::PortReference;
use crate::touchstone::NetworkData;

#[derive(Debug, Clone, PartialEq)]
pub struct LoadSpec {
    pub n: usize,
    pub f0: f64,
    /// Total width of the sweep, hertz.
    pub span: f64,
    pub points: usize,
    pub seed: u64,
    /// Largest singular value at the design frequency, in [0, 1).
    pub coupling_level: f64,
    pub reference: PortReference,
}

/// Frequency grid of `points` steps across `span` that contains `f0` exactly.
pub fn grid(f0: f64, span: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![f0];
    }
    let step = span / (points - 1) as f64;
    let center = (points - 1) / 2;
    (0..points)
        .map(|k| {
            if k == center {
                f0
            } else {
                f0 + (k as f64 - center as f64) * step
            }
        })
        .collect()
}

/// Random complex symmetric matrix with largest singular value `level`.
pub fn coupled_matrix(n: usize, level: f64, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let mut g = vec![C64::new(0.0, 0.0); n * n];
    for z in g.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *z = C64::new(re, im);
    }
    let sym = ComplexMatrix::from_fn(n, n, |i, j| 0.5 * (g[i * n + j] + g[j * n + i])).expect("finite draws");
    if level == 0.0 {
        return ComplexMatrix::zeros(n, n);
    }
    let sigma = sym.singular_values()[0];
    sym.scale_real(level / sigma)
}

pub fn generate(spec: &LoadSpec) -> Result<NetworkData, String> {
    if spec.n == 0 {
        return Err("n must be at least 1".into());
    }
    if spec.points == 0 {
        return Err("points must be at least 1".into());
    }
    if !(0.0..1.0).contains(&spec.coupling_level) {
        return Err(format!("coupling level {} must lie in [0, 1)", spec.coupling_level));
    }
    if !(spec.f0 > 0.0 && spec.f0.is_finite()) || !(spec.span >= 0.0 && spec.span.is_finite()) {
        return Err("f0 must be positive and span nonnegative".into());
    }
    let frequencies = grid(spec.f0, spec.span, spec.points);
    if frequencies[0] <= 0.0 {
        return Err(format!("span {} Hz reaches below zero frequency", spec.span));
    }
    if spec.points > 1 && spec.span == 0.0 {
        return Err("a multi-point sweep needs a positive span".into());
    }

    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let base = coupled_matrix(n, spec.coupling_level, &mut rng);
    let all_pass: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let roll_off: f64 = rng.random_range(1.0..3.0);

    let matrices = frequencies
        .iter()
        .map(|&f| {
            let x = (f - spec.f0) / spec.f0;
            let r = 1.0 / (1.0 + (roll_off * x).powi(2));
            let d: Vec<C64> = all_pass
                .iter()
                .map(|&k| C64::new(1.0, -k * x) / C64::new(1.0, k * x))
                .collect();
            ComplexMatrix::from_fn(n, n, |i, j| base[(i, j)] * (d[i] * d[j]) * r).expect("bounded entries")
        })
        .collect();
    NetworkData::new(frequencies, matrices, spec.reference).map_err(|e| e.to_string())
}
