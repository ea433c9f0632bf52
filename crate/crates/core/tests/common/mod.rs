// SPDX-License-Identifier: Apache-2.0

//! Independent reference computations shared by the integration tests.
//!
//! Everything here works on raw `nalgebra` matrices and re-derives the
//! circuit equations from scratch instead of calling the library's
//! conversion or assembly routines.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tldn::cli::loadgen;
use tldn::linalg::ComplexMatrix;
use tldn::netconv::PortReference;
use tldn::synth::{LoadNetwork, SynthesisConfig, VChoice};
use tldn::tlmodel::{PiNetwork, TLBranch};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_na(m: &ComplexMatrix) -> DMatrix<C> {
    m.as_nalgebra().clone()
}

pub fn max_abs(m: &DMatrix<C>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Chain parameters of an ideal line, `[[cos θ, jZ₀ sin θ], [j sin θ / Z₀, cos θ]]`,
/// turned into its 2×2 admittance matrix `[[D/B, (BC − AD)/B], [−1/B, A/B]]`.
pub fn line_admittance(z0: f64, theta: f64) -> [[C; 2]; 2] {
    let a = C::new(theta.cos(), 0.0);
    let b = C::new(0.0, z0 * theta.sin());
    let c = C::new(0.0, theta.sin() / z0);
    let d = a;
    [[d / b, (b * c - a * d) / b], [-C::new(1.0, 0.0) / b, a / b]]
}

/// Nodal admittance matrix of a π-network: each branch's 2×2 block is
/// stamped between its two nodes; shunt lines have their far end grounded.
pub fn nodal_pi_y(net: &PiNetwork, f: f64) -> DMatrix<C> {
    let n = net.n_ports();
    let mut y = DMatrix::<C>::zeros(n, n);
    for br in net.branches() {
        let (i, j) = br.endpoints();
        let blk = line_admittance(br.z0(), br.theta0() * f / net.f0());
        if i == j {
            y[(i, i)] += blk[0][0];
        } else {
            y[(i, i)] += blk[0][0];
            y[(i, j)] += blk[0][1];
            y[(j, i)] += blk[1][0];
            y[(j, j)] += blk[1][1];
        }
    }
    y
}

/// Admittance of an S-matrix at reference `z`, by Gauss-Jordan on `(I + S)`.
pub fn s_to_y_ref(s: &DMatrix<C>, z: f64) -> DMatrix<C> {
    let n = s.nrows();
    let eye = DMatrix::<C>::identity(n, n);
    let inv = (&eye + s).try_inverse().expect("I + S invertible");
    (&eye - s) * inv * C::new(1.0 / z, 0.0)
}

pub fn y_to_s_ref(y: &DMatrix<C>, z: f64) -> DMatrix<C> {
    let n = y.nrows();
    let eye = DMatrix::<C>::identity(n, n);
    let zy = y * C::new(z, 0.0);
    (&eye - &zy) * (&eye + &zy).try_inverse().expect("I + zY invertible")
}

/// Full-circuit solve: the network's nodes `N..2N` are loaded by `y_load`,
/// the internal nodes are eliminated (Schur complement) and the external
/// admittance is converted to S.
pub fn nodal_composite(y_net: &DMatrix<C>, y_load: &DMatrix<C>, z: f64) -> DMatrix<C> {
    let n = y_load.nrows();
    let yaa = y_net.view((0, 0), (n, n)).into_owned();
    let yab = y_net.view((0, n), (n, n)).into_owned();
    let yba = y_net.view((n, 0), (n, n)).into_owned();
    let ybb = y_net.view((n, n), (n, n)).into_owned() + y_load;
    let ext = yaa - yab * ybb.try_inverse().expect("loaded internal nodes solvable") * yba;
    y_to_s_ref(&ext, z)
}

/// Random complex symmetric matrix with largest singular value `level`.
pub fn random_symmetric(n: usize, level: f64, seed: u64) -> ComplexMatrix {
    let mut r = rng(seed);
    loadgen::coupled_matrix(n, level, &mut r)
}

pub fn random_load(n: usize, level: f64, seed: u64) -> LoadNetwork {
    LoadNetwork::new(random_symmetric(n, level, seed), 1e9, PortReference::default()).unwrap()
}

/// Random electrical length bounded away from 0, π and 2π.
pub fn random_theta(r: &mut ChaCha8Rng) -> f64 {
    let base = r.random_range(0.3..PI - 0.3);
    if r.random_bool(0.5) {
        base
    } else {
        base + PI
    }
}

/// Full-grid π-network with random lines; some branches dropped when `sparse`.
pub fn random_pi(n_ports: usize, seed: u64, sparse: bool) -> PiNetwork {
    let mut r = rng(seed);
    let mut net = PiNetwork::new(n_ports, 1e9).unwrap();
    for i in 0..n_ports {
        for j in i..n_ports {
            if sparse && r.random_bool(0.25) {
                continue;
            }
            let z0 = r.random_range(20.0..250.0);
            let theta = random_theta(&mut r);
            net.insert(TLBranch::new(i, j, z0, theta).unwrap()).unwrap();
        }
    }
    net
}

/// Random lossless symmetric admittance `j·B` with every entry away from zero.
pub fn random_imaginary_symmetric(n: usize, seed: u64) -> ComplexMatrix {
    let mut r = rng(seed);
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mag = r.random_range(0.002..0.05);
            let v = if r.random_bool(0.5) { mag } else { -mag };
            b[i * n + j] = v;
            b[j * n + i] = v;
        }
    }
    ComplexMatrix::from_fn(n, n, |i, j| C::new(0.0, b[i * n + j])).unwrap()
}

/// The corpus of the decoupling guarantee: N in 1..=5, three coupling
/// levels, identity and seeded-random V.
pub fn guarantee_corpus() -> Vec<(LoadNetwork, SynthesisConfig, String)> {
    let levels = [0.3, 0.6, 0.9];
    (0..200u64)
        .map(|k| {
            let n = 1 + (k % 5) as usize;
            let level = levels[((k / 5) % 3) as usize];
            let v_choice = if (k / 15) % 2 == 0 {
                VChoice::Identity
            } else {
                VChoice::RandomSeeded(1000 + k)
            };
            let label = format!("case {k}: N={n} level={level} V={v_choice:?}");
            let cfg = SynthesisConfig {
                v_choice,
                ..Default::default()
            };
            (random_load(n, level, 77_000 + k), cfg, label)
        })
        .collect()
}
