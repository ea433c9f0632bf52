// SPDX-License-Identifier: Apache-2.0

//! Decoupling-network synthesis.
//!
//! The pipeline is: Takagi-factor the reciprocal load `S_L = U Λ Uᵀ`,
//! build the lossless reciprocal 2N-port
//!
//! ```text
//!          [ −V Λ Vᵀ            V (I − Λ²)^½ Uᴴ ]
//! S_DN  =  [                                     ]
//!          [ U* (I − Λ²)^½ Vᵀ   U* Λ Uᴴ          ]
//! ```
//!
//! whose load-side block is `conj(S_L)`, convert it to `Y_DN`, and read
//! the branch values of a transmission-line π-network off `Y_DN`. Ports
//! `0..N` are the decoupled side, `N..2N` connect to the load. The unitary
//! `V` is free: every choice decouples and matches at the design frequency.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2, TAU};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::cascade::terminate;
use crate::linalg::{takagi, ComplexMatrix, LinalgError, TakagiFactors, C64};
use crate::netconv::{s_to_y, y_to_s, ConversionError, PortReference};
use crate::tlmodel::{assemble_pi_y, pi_topology, PiNetwork, TLBranch, TlError};
use crate::tolerances;

/// Number of re-randomizations of `V` attempted after the first seeded draw fails.
pub const MAX_V_RETRIES: usize = 8;

const STANDARD_THETA_POSITIVE: f64 = 0.75 * PI;
const STANDARD_THETA_NEGATIVE: f64 = 1.25 * PI;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid load: {0}")]
    InvalidLoad(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("admittance matrix is not lossless: max |Re y| = {max_real:.3e} against scale {scale:.3e}")]
    LosslessViolation { max_real: f64, scale: f64 },
    #[error("admittance matrix is not symmetric: defect {defect:.3e}")]
    AsymmetricAdmittance { defect: f64 },
    #[error(
        "S_DN has no admittance representation (condition estimate {condition:.3e}) after {attempts} attempt(s); \
         V is a free design parameter, choose another unitary V"
    )]
    ConversionSingular { condition: f64, attempts: usize },
    #[error("shunt branch at port {port} is degenerate: no finite line satisfies the diagonal")]
    DegenerateShunt { port: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Conversion(#[from] ConversionError),
    #[error(transparent)]
    Line(#[from] TlError),
}

/// Reciprocal, passive N-port load at the design frequency.
#[derive(Debug, Clone)]
pub struct LoadNetwork {
    s: ComplexMatrix,
    f0: f64,
    reference: PortReference,
}

impl LoadNetwork {
    pub fn new(s: ComplexMatrix, f0: f64, reference: PortReference) -> Result<Self, SynthError> {
        if !s.is_square() || s.rows() == 0 {
            return Err(SynthError::InvalidLoad(format!(
                "S must be square and non-empty, got {}x{}",
                s.rows(),
                s.cols()
            )));
        }
        if !(f0 > 0.0 && f0.is_finite()) {
            return Err(SynthError::InvalidLoad(format!("design frequency {f0} Hz")));
        }
        let defect = s.symmetry_defect();
        if defect > tolerances::SYMMETRY_INPUT {
            return Err(SynthError::InvalidLoad(format!(
                "load is not reciprocal: max |s_ij - s_ji| = {defect:.3e}"
            )));
        }
        let sigma_max = s.singular_values()[0];
        if sigma_max > 1.0 + tolerances::PASSIVITY {
            return Err(SynthError::InvalidLoad(format!(
                "load is not passive: largest singular value {sigma_max}"
            )));
        }
        Ok(Self { s, f0, reference })
    }

    pub fn s(&self) -> &ComplexMatrix {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.s.rows()
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn reference(&self) -> PortReference {
        self.reference
    }
}

/// `a = cos θ` of every π-network branch in custom mode.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AValues(BTreeMap<(usize, usize), f64>);

impl AValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, i: usize, j: usize, a: f64) -> Result<(), SynthError> {
        if !(a.abs() < 1.0) || a == 0.0 {
            return Err(SynthError::InvalidConfig(format!(
                "a value {a} for branch ({i}, {j}) must lie in (-1, 1) and be nonzero"
            )));
        }
        self.0.insert((i.min(j), i.max(j)), a);
        Ok(())
    }

    pub fn uniform(n_ports: usize, a: f64) -> Result<Self, SynthError> {
        let mut out = Self::new();
        for (i, j) in pi_topology(n_ports) {
            out.set(i, j, a)?;
        }
        Ok(out)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.0.get(&(i.min(j), i.max(j))).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthesisMode {
    /// Every line is 135° or 225° long at the design frequency.
    Standard,
    /// User-fixed `a = cos θ` per branch.
    Custom(AValues),
}

impl SynthesisMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VChoice {
    Identity,
    RandomSeeded(u64),
    Explicit(ComplexMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisConfig {
    pub mode: SynthesisMode,
    pub v_choice: VChoice,
    /// Branches whose characteristic impedance exceeds this are left out.
    pub z0_max: f64,
    /// Kept branches outside this window only produce warnings.
    pub z0_bounds: (f64, f64),
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            mode: SynthesisMode::Standard,
            v_choice: VChoice::Identity,
            z0_max: tolerances::DEFAULT_Z0_MAX,
            z0_bounds: tolerances::DEFAULT_Z0_BOUNDS,
        }
    }
}

impl SynthesisConfig {
    fn a_value(&self, i: usize, j: usize) -> Result<f64, SynthError> {
        match &self.mode {
            SynthesisMode::Standard => Ok(-FRAC_1_SQRT_2),
            SynthesisMode::Custom(values) => values.get(i, j).ok_or_else(|| {
                SynthError::InvalidConfig(format!("custom mode is missing the a value of branch ({i}, {j})"))
            }),
        }
    }

    /// `(Z₀, θ)` of a branch with parameters `(a, b̃)`.
    fn line_for(&self, a: f64, b: f64) -> (f64, f64) {
        match self.mode {
            SynthesisMode::Standard => {
                let theta = if b > 0.0 {
                    STANDARD_THETA_POSITIVE
                } else {
                    STANDARD_THETA_NEGATIVE
                };
                (SQRT_2 * b.abs(), theta)
            }
            SynthesisMode::Custom(_) => {
                let principal = a.acos();
                let theta = if b > 0.0 { principal } else { TAU - principal };
                (b.abs() / principal.sin(), theta)
            }
        }
    }
}

/// A branch removed from the synthesized network.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedBranch {
    pub i: usize,
    pub j: usize,
    /// `b̃` in ohms; infinite when the required admittance is exactly zero.
    pub b_ohm: f64,
    /// The line that was left out, when one exists.
    pub line: Option<TLBranch>,
}

#[derive(Debug, Clone)]
pub struct BranchSolution {
    pub network: PiNetwork,
    pub pruned: Vec<PrunedBranch>,
}

impl BranchSolution {
    /// The network with every finite pruned line put back.
    pub fn unpruned_network(&self) -> PiNetwork {
        let mut net = self.network.clone();
        for line in self.pruned.iter().filter_map(|p| p.line) {
            net.insert(line).expect("pruned line lies inside the network");
        }
        net
    }
}

/// Haar-distributed unitary matrix from a seed.
///
/// QR of a complex Gaussian matrix with the phases of `R`'s diagonal moved into `Q`.
pub fn random_unitary(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = FRAC_1_SQRT_2;
    let mut draws = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        draws.push(C64::new(re * scale, im * scale));
    }
    let g = DMatrix::from_row_slice(n, n, &draws);
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let q = DMatrix::from_fn(n, n, |i, k| {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::from(1.0) };
        q[(i, k)] * phase
    });
    ComplexMatrix::from_inner(q)
}

/// Seed of the `attempt`-th draw of `V`.
pub fn retry_seed(seed: u64, attempt: usize) -> u64 {
    seed.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Decoupler S-matrix from the load's Takagi factors and a unitary `V`.
pub fn build_sdn_from_factors(factors: &TakagiFactors, v: &ComplexMatrix) -> Result<ComplexMatrix, SynthError> {
    let n = factors.lambda.len();
    if v.rows() != n || v.cols() != n {
        return Err(SynthError::InvalidConfig(format!(
            "V must be {n}x{n}, got {}x{}",
            v.rows(),
            v.cols()
        )));
    }
    let defect = v.unitarity_defect();
    if defect > tolerances::ALGEBRAIC {
        return Err(SynthError::InvalidConfig(format!(
            "V is not unitary (defect {defect:.3e})"
        )));
    }
    let lambda = ComplexMatrix::from_real_diagonal(&factors.lambda)?;
    let through: Vec<f64> = factors.lambda.iter().map(|l| (1.0 - l * l).max(0.0).sqrt()).collect();
    let through = ComplexMatrix::from_real_diagonal(&through)?;
    let u = &factors.u;
    let (u_conj, u_adj, v_t) = (u.conj(), u.adjoint(), v.transpose());

    let s11 = (&(v * &lambda) * &v_t).scale_real(-1.0);
    let s12 = &(v * &through) * &u_adj;
    let s21 = &(&u_conj * &through) * &v_t;
    let s22 = &(&u_conj * &lambda) * &u_adj;
    Ok(ComplexMatrix::from_blocks(&s11, &s12, &s21, &s22)?)
}

pub fn build_sdn(load: &LoadNetwork, v: &ComplexMatrix) -> Result<ComplexMatrix, SynthError> {
    build_sdn_from_factors(&takagi(load.s())?, v)
}

/// Reads π-network branch values off a lossless admittance matrix.
///
/// Off-diagonal entries fix the series lines directly (`Y_nk = j/b̃_nk`);
/// the shunt lines then absorb whatever each diagonal still needs.
/// An exactly zero off-diagonal admittance is an open circuit and is
/// recorded as pruned with infinite `b̃`.
pub fn solve_branches(y_dn: &ComplexMatrix, cfg: &SynthesisConfig, f0: f64) -> Result<BranchSolution, SynthError> {
    if !y_dn.is_square() {
        return Err(SynthError::InvalidConfig("admittance matrix must be square".into()));
    }
    let n = y_dn.rows();
    let scale = y_dn.max_abs();
    let max_real = y_dn.max_abs_real();
    if max_real > tolerances::LOSSLESS_REAL_PART * scale {
        return Err(SynthError::LosslessViolation { max_real, scale });
    }
    let defect = y_dn.symmetry_defect();
    if defect > tolerances::SYMMETRY_INPUT * scale.max(f64::MIN_POSITIVE) {
        return Err(SynthError::AsymmetricAdmittance { defect });
    }
    let im = |i: usize, j: usize| 0.5 * (y_dn[(i, j)].im + y_dn[(j, i)].im);

    let mut b = vec![f64::INFINITY; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let y = im(i, j);
            if y != 0.0 {
                b[i * n + j] = 1.0 / y;
                b[j * n + i] = 1.0 / y;
            }
        }
    }
    for port in 0..n {
        let mut rhs = -im(port, port);
        for k in (0..n).filter(|&k| k != port) {
            let bk = b[port * n + k];
            if bk.is_finite() {
                rhs -= cfg.a_value(port, k)? / bk;
            }
        }
        let bt = cfg.a_value(port, port)? / rhs;
        if !bt.is_finite() || bt == 0.0 {
            return Err(SynthError::DegenerateShunt { port });
        }
        b[port * n + port] = bt;
    }

    let mut network = PiNetwork::new(n, f0)?;
    let mut pruned = Vec::new();
    for (i, j) in pi_topology(n) {
        let bt = b[i * n + j];
        if !bt.is_finite() {
            pruned.push(PrunedBranch {
                i,
                j,
                b_ohm: bt,
                line: None,
            });
            continue;
        }
        let (z0, theta) = cfg.line_for(cfg.a_value(i, j)?, bt);
        let line = TLBranch::new(i, j, z0, theta)?;
        if z0 > cfg.z0_max {
            pruned.push(PrunedBranch {
                i,
                j,
                b_ohm: bt,
                line: Some(line),
            });
        } else {
            network.insert(line)?;
        }
    }
    Ok(BranchSolution { network, pruned })
}

#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    /// max |S_DNᴴ S_DN − I|
    pub unitarity_defect: f64,
    /// max |S_DN − S_DNᵀ|
    pub symmetry_defect: f64,
    /// max |S_DN,22 − conj(S_L)|
    pub conjugate_match_defect: f64,
    /// max |Y_Π − Y_DN| for the network as built (pruned).
    pub y_residual: f64,
    /// max |Y_Π − Y_DN| with every pruned line restored.
    pub y_residual_unpruned: f64,
    pub pruned_count: usize,
    /// max |S_comp| at the design frequency for the network as built.
    pub composite_max_pruned: Option<f64>,
    /// max |S_comp| at the design frequency with every pruned line restored.
    pub composite_max_unpruned: Option<f64>,
    pub retries: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    /// As built: 2N ports, pruned lines removed.
    pub pi: PiNetwork,
    pub pruned: Vec<PrunedBranch>,
    pub s_dn: ComplexMatrix,
    pub y_dn: ComplexMatrix,
    /// The unitary actually used.
    pub v: ComplexMatrix,
    /// Index of the draw of `V` that succeeded (0 unless random draws were retried).
    pub v_attempt: usize,
    pub diagnostics: Diagnostics,
}

impl SynthesisResult {
    pub fn unpruned_network(&self) -> PiNetwork {
        BranchSolution {
            network: self.pi.clone(),
            pruned: self.pruned.clone(),
        }
        .unpruned_network()
    }
}

/// Composite response at the design frequency of `net` terminated in `load`.
pub fn composite_at_f0(net: &PiNetwork, load: &LoadNetwork) -> Result<ComplexMatrix, SynthError> {
    let y = assemble_pi_y(net, net.f0())?;
    let s = y_to_s(&y, load.reference())?;
    terminate(&s, load.s()).map_err(|e| SynthError::InvalidConfig(e.to_string()))
}

pub fn synthesize(load: &LoadNetwork, cfg: &SynthesisConfig) -> Result<SynthesisResult, SynthError> {
    let n = load.n();
    let factors = takagi(load.s())?;
    let mut diagnostics = Diagnostics::default();
    for (k, l) in factors.lambda.iter().enumerate() {
        if *l > 1.0 - tolerances::TOTAL_REFLECTION {
            diagnostics.warnings.push(format!(
                "Takagi value {k} of the load is {l}: total reflection, the matching block vanishes"
            ));
        }
    }

    let mut attempt = 0;
    let (v, s_dn, y_dn) = loop {
        let v = match &cfg.v_choice {
            VChoice::Identity => ComplexMatrix::identity(n),
            VChoice::RandomSeeded(seed) => random_unitary(n, retry_seed(*seed, attempt)),
            VChoice::Explicit(v) => v.clone(),
        };
        let s_dn = build_sdn_from_factors(&factors, &v)?;
        match s_to_y(&s_dn, load.reference()) {
            Ok(y) => break (v, s_dn, y),
            Err(ConversionError::Singular { condition }) => {
                let retryable = matches!(cfg.v_choice, VChoice::RandomSeeded(_));
                if !retryable || attempt >= MAX_V_RETRIES {
                    return Err(SynthError::ConversionSingular {
                        condition,
                        attempts: attempt + 1,
                    });
                }
                diagnostics.retries.push(format!(
                    "attempt {attempt}: I + S_DN ill-conditioned (condition {condition:.3e}), redrawing V"
                ));
                attempt += 1;
            }
            Err(e) => return Err(e.into()),
        }
    };

    let solution = solve_branches(&y_dn, cfg, load.f0())?;
    let full = solution.unpruned_network();

    diagnostics.unitarity_defect = s_dn.unitarity_defect();
    diagnostics.symmetry_defect = s_dn.symmetry_defect();
    diagnostics.conjugate_match_defect = s_dn.submatrix(n, n, n, n).max_abs_diff(&load.s().conj());
    diagnostics.y_residual = assemble_pi_y(&solution.network, load.f0())?.max_abs_diff(&y_dn);
    diagnostics.y_residual_unpruned = assemble_pi_y(&full, load.f0())?.max_abs_diff(&y_dn);
    diagnostics.pruned_count = solution.pruned.len();
    diagnostics.composite_max_pruned = composite_at_f0(&solution.network, load).ok().map(|s| s.max_abs());
    diagnostics.composite_max_unpruned = composite_at_f0(&full, load).ok().map(|s| s.max_abs());

    let (lo, hi) = cfg.z0_bounds;
    for br in solution.network.branches() {
        if br.z0() < lo || br.z0() > hi {
            let (i, j) = br.endpoints();
            diagnostics.warnings.push(format!(
                "TL_{}_{}: Z0 = {:.2} ohm lies outside the advisory window {lo}-{hi} ohm",
                i + 1,
                j + 1,
                br.z0()
            ));
        }
    }

    Ok(SynthesisResult {
        pi: solution.network,
        pruned: solution.pruned,
        s_dn,
        y_dn,
        v,
        v_attempt: attempt,
        diagnostics,
    })
}
