// SPDX-License-Identifier: Apache-2.0

//! JSON document describing a synthesized decoupling network.
//!
//! Port indices are one-based, as in the printed branch tables; lengths
//! are in degrees at the design frequency.

use serde::{Deserialize, Serialize};

use crate::linalg::{ComplexMatrix, C64};
use crate::synth::{SynthesisConfig, SynthesisResult, VChoice};
use crate::tlmodel::{PiNetwork, TLBranch};

pub const SCHEMA_VERSION: &str = "tldn-dn/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VSpec {
    Identity,
    Random { seed: u64, attempt: usize },
    Explicit { re: Vec<Vec<f64>>, im: Vec<Vec<f64>> },
}

impl VSpec {
    pub fn from_matrix(v: &ComplexMatrix) -> Self {
        let rows = |f: fn(C64) -> f64| {
            (0..v.rows())
                .map(|i| (0..v.cols()).map(|j| f(v[(i, j)])).collect())
                .collect()
        };
        Self::Explicit {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Option<ComplexMatrix> {
        match self {
            Self::Explicit { re, im } => {
                if re.len() != im.len() || re.iter().zip(im).any(|(a, b)| a.len() != b.len()) {
                    return None;
                }
                let rows: Vec<Vec<C64>> = re
                    .iter()
                    .zip(im)
                    .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| C64::new(x, y)).collect())
                    .collect();
                ComplexMatrix::from_rows(&rows).ok()
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub i: usize,
    pub j: usize,
    pub z0_ohm: f64,
    pub theta_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunedRecord {
    pub i: usize,
    pub j: usize,
    /// `None` when the branch would be an open circuit.
    pub b_ohm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0_ohm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DiagnosticsRecord {
    pub unitarity_defect: f64,
    pub y_residual: f64,
    #[serde(default)]
    pub symmetry_defect: f64,
    #[serde(default)]
    pub conjugate_match_defect: f64,
    #[serde(default)]
    pub y_residual_unpruned: f64,
    #[serde(default)]
    pub composite_max_pruned: Option<f64>,
    #[serde(default)]
    pub composite_max_unpruned: Option<f64>,
    #[serde(default)]
    pub retries: Vec<String>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnDocument {
    pub schema_version: String,
    /// Load ports; the network has `2n`.
    pub n: usize,
    pub f0_hz: f64,
    pub z_ref_ohm: f64,
    pub mode: String,
    pub v_spec: VSpec,
    pub branches: Vec<BranchRecord>,
    pub pruned: Vec<PrunedRecord>,
    pub diagnostics: DiagnosticsRecord,
}

fn record(br: &TLBranch) -> BranchRecord {
    let (i, j) = br.endpoints();
    BranchRecord {
        i: i + 1,
        j: j + 1,
        z0_ohm: br.z0(),
        theta_deg: br.theta0().to_degrees(),
    }
}

impl DnDocument {
    pub fn from_result(result: &SynthesisResult, cfg: &SynthesisConfig, z_ref_ohm: f64) -> Self {
        let v_spec = match &cfg.v_choice {
            VChoice::Identity => VSpec::Identity,
            VChoice::RandomSeeded(seed) => VSpec::Random {
                seed: *seed,
                attempt: result.v_attempt,
            },
            VChoice::Explicit(v) => VSpec::from_matrix(v),
        };
        let d = &result.diagnostics;
        Self {
            schema_version: SCHEMA_VERSION.into(),
            n: result.pi.n_ports() / 2,
            f0_hz: result.pi.f0(),
            z_ref_ohm,
            mode: cfg.mode.name().into(),
            v_spec,
            branches: result.pi.branches().map(record).collect(),
            pruned: result
                .pruned
                .iter()
                .map(|p| PrunedRecord {
                    i: p.i + 1,
                    j: p.j + 1,
                    b_ohm: p.b_ohm.is_finite().then_some(p.b_ohm),
                    z0_ohm: p.line.map(|l| l.z0()),
                    theta_deg: p.line.map(|l| l.theta0().to_degrees()),
                })
                .collect(),
            diagnostics: DiagnosticsRecord {
                unitarity_defect: d.unitarity_defect,
                y_residual: d.y_residual,
                symmetry_defect: d.symmetry_defect,
                conjugate_match_defect: d.conjugate_match_defect,
                y_residual_unpruned: d.y_residual_unpruned,
                composite_max_pruned: d.composite_max_pruned,
                composite_max_unpruned: d.composite_max_unpruned,
                retries: d.retries.clone(),
                warnings: d.warnings.clone(),
            },
        }
    }

    /// Checks the structural invariants of the document.
    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version '{}', expected '{SCHEMA_VERSION}'",
                self.schema_version
            ));
        }
        if self.n == 0 {
            return Err("n must be at least 1".into());
        }
        if !(self.f0_hz > 0.0 && self.f0_hz.is_finite()) {
            return Err(format!("f0_hz {} must be positive", self.f0_hz));
        }
        if !(self.z_ref_ohm > 0.0 && self.z_ref_ohm.is_finite()) {
            return Err(format!("z_ref_ohm {} must be positive", self.z_ref_ohm));
        }
        let ports = 2 * self.n;
        let mut seen = std::collections::BTreeSet::new();
        let pairs = self
            .branches
            .iter()
            .map(|b| (b.i, b.j))
            .chain(self.pruned.iter().map(|p| (p.i, p.j)));
        for (i, j) in pairs {
            if i == 0 || j > ports || i > j {
                return Err(format!("branch ({i}, {j}) must satisfy 1 <= i <= j <= {ports}"));
            }
            if !seen.insert((i, j)) {
                return Err(format!("branch ({i}, {j}) appears more than once"));
            }
        }
        for b in &self.branches {
            if !(b.theta_deg > 0.0 && b.theta_deg < 360.0) {
                return Err(format!(
                    "branch ({}, {}): theta_deg {} outside (0, 360)",
                    b.i, b.j, b.theta_deg
                ));
            }
            if !(b.z0_ohm > 0.0 && b.z0_ohm.is_finite()) {
                return Err(format!(
                    "branch ({}, {}): z0_ohm {} must be positive",
                    b.i, b.j, b.z0_ohm
                ));
            }
        }
        Ok(())
    }

    fn network_from(&self, records: impl Iterator<Item = (usize, usize, f64, f64)>) -> Result<PiNetwork, String> {
        let mut net = PiNetwork::new(2 * self.n, self.f0_hz).map_err(|e| e.to_string())?;
        for (i, j, z0, theta_deg) in records {
            let line = TLBranch::new(i - 1, j - 1, z0, theta_deg.to_radians()).map_err(|e| e.to_string())?;
            net.insert(line).map_err(|e| e.to_string())?;
        }
        Ok(net)
    }

    /// The network as built.
    pub fn to_network(&self) -> Result<PiNetwork, String> {
        self.validate()?;
        self.network_from(self.branches.iter().map(|b| (b.i, b.j, b.z0_ohm, b.theta_deg)))
    }

    /// The network with every pruned line that has a finite value put back.
    pub fn to_unpruned_network(&self) -> Result<PiNetwork, String> {
        self.validate()?;
        let restored = self
            .pruned
            .iter()
            .filter_map(|p| Some((p.i, p.j, p.z0_ohm?, p.theta_deg?)));
        self.network_from(
            self.branches
                .iter()
                .map(|b| (b.i, b.j, b.z0_ohm, b.theta_deg))
                .chain(restored),
        )
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }
}
