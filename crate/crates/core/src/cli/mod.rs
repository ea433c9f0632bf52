// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Every command is a plain function returning its standard output as a
//! string so it can be driven from tests. Exit codes: 0 success, 2 input
//! or file errors, 3 synthesis errors, 4 validation errors, 5 failed
//! verification.

pub mod document;
pub mod loadgen;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use thiserror::Error;

use crate::cascade::{grid_index, nearest_index, sweep, terminate, CompositeResponse};
use crate::linalg::ComplexMatrix;
use crate::netconv::{y_to_s, PortReference};
use crate::synth::{synthesize, AValues, LoadNetwork, SynthError, SynthesisConfig, SynthesisMode, VChoice};
use crate::tlmodel::{assemble_pi_y, PiNetwork};
use crate::tolerances;
use crate::touchstone::{self, DataFormat, NetworkData};

use document::DnDocument;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Synthesis,
    Validation,
    Verification,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Input => 2,
            Self::Synthesis => 3,
            Self::Validation => 4,
            Self::Verification => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Input => "input",
            Self::Synthesis => "synthesis",
            Self::Validation => "validation",
            Self::Verification => "verification",
        }
    }
}

#[derive(Debug, Clone, Error)]
#[error("{message}")]
pub struct CliError {
    pub class: ErrorClass,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Input,
            message: message.into(),
        }
    }

    fn synthesis(message: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Synthesis,
            message: message.into(),
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Validation,
            message: message.into(),
        }
    }

    /// Single-line JSON for standard error.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.class.name(), "message": self.message }).to_string()
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidLoad(_) | SynthError::InvalidConfig(_) => Self::validation(e.to_string()),
            _ => Self::synthesis(e.to_string()),
        }
    }
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub stdout: String,
    pub exit_code: i32,
}

impl CommandOutput {
    fn ok(stdout: String) -> Self {
        Self { stdout, exit_code: 0 }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tldn", version, about = "Transmission-line decoupling network synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a decoupling network for a load at the design frequency.
    Synthesize(SynthesizeArgs),
    /// Check that a network decouples and matches its load at the design frequency.
    Verify(VerifyArgs),
    /// Sweep the loaded network over the load's frequency grid.
    Sweep(SweepArgs),
    /// Generate a seeded synthetic coupled load.
    Loadgen(LoadgenArgs),
    /// Export a network document as CSV or a netlist.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Standard,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Ri,
    Ma,
    Db,
}

impl From<FormatArg> for DataFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Ri => DataFormat::RI,
            FormatArg::Ma => DataFormat::MA,
            FormatArg::Db => DataFormat::DB,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Csv,
    Netlist,
}

#[derive(Debug, Clone, Args)]
pub struct SynthesizeArgs {
    /// Touchstone file of the load.
    #[arg(long)]
    pub load: PathBuf,
    /// Port count when the file extension does not carry it.
    #[arg(long)]
    pub ports: Option<usize>,
    /// Design frequency in hertz; must lie on the load's grid.
    #[arg(long)]
    pub f0: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Standard)]
    pub mode: ModeArg,
    /// `identity`, `random:<seed>`, or `file:<path>` to a JSON {"re": [[..]], "im": [[..]]} matrix.
    #[arg(long, default_value = "identity")]
    pub v: String,
    /// JSON list of {"i", "j", "a"} (one-based) for custom mode.
    #[arg(long)]
    pub a_file: Option<PathBuf>,
    #[arg(long, default_value_t = tolerances::DEFAULT_Z0_MAX)]
    pub z0_max: f64,
    /// Output network document (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub load: PathBuf,
    #[arg(long)]
    pub ports: Option<usize>,
    #[arg(long)]
    pub dn: PathBuf,
    /// Largest acceptable |S_comp| at the design frequency.
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
    /// Put pruned branches back before evaluating.
    #[arg(long)]
    pub include_pruned: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub load: PathBuf,
    #[arg(long)]
    pub ports: Option<usize>,
    #[arg(long)]
    pub dn: PathBuf,
    /// Composite response as Touchstone.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional CSV of |S_ij| in dB.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub include_pruned: bool,
}

#[derive(Debug, Clone, Args)]
pub struct LoadgenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub f0: f64,
    /// Total sweep width in hertz.
    #[arg(long)]
    pub span: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub coupling: f64,
    #[arg(long, value_enum, default_value_t = FormatArg::Ri)]
    pub format: FormatArg,
    #[arg(long, default_value_t = tolerances::DEFAULT_Z_REF)]
    pub z_ref: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub dn: PathBuf,
    #[arg(long, value_enum)]
    pub format: ExportFormat,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<CommandOutput, CliError> {
    match cli.command {
        Command::Synthesize(a) => cmd_synthesize(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Loadgen(a) => cmd_loadgen(&a),
        Command::Export(a) => cmd_export(&a),
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

pub fn read_load(path: &Path, ports: Option<usize>) -> Result<NetworkData, CliError> {
    let n = ports.or_else(|| touchstone::ports_from_path(path)).ok_or_else(|| {
        CliError::input(format!(
            "cannot infer the port count of {}; pass --ports",
            path.display()
        ))
    })?;
    let bytes = read_file(path)?;
    touchstone::parse(&bytes, n).map_err(|e| CliError::input(format!("{} [{}]: {e}", path.display(), e.class())))
}

pub fn read_document(path: &Path) -> Result<DnDocument, CliError> {
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|_| CliError::input(format!("{} is not UTF-8", path.display())))?;
    let doc = DnDocument::from_json(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    doc.validate().map_err(CliError::validation)?;
    Ok(doc)
}

/// Grid index of `f0`, or an input error naming the neighbouring grid points.
fn design_point(load: &NetworkData, f0: f64) -> Result<usize, CliError> {
    if let Some(k) = grid_index(&load.frequencies, f0) {
        return Ok(k);
    }
    let below = load.frequencies.iter().rev().find(|&&f| f < f0);
    let above = load.frequencies.iter().find(|&&f| f > f0);
    let nearest = nearest_index(&load.frequencies, f0).map(|k| load.frequencies[k]);
    Err(CliError::input(format!(
        "design frequency {f0} Hz is not on the load's grid (nearest {:?} Hz; neighbours below {:?} Hz, above {:?} Hz)",
        nearest, below, above
    )))
}

#[derive(Deserialize)]
struct MatrixFile {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

fn parse_v(spec: &str) -> Result<VChoice, CliError> {
    if spec == "identity" {
        return Ok(VChoice::Identity);
    }
    if let Some(seed) = spec.strip_prefix("random:") {
        let seed = seed
            .parse()
            .map_err(|_| CliError::input(format!("invalid seed in --v {spec}")))?;
        return Ok(VChoice::RandomSeeded(seed));
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let bytes = read_file(Path::new(path))?;
        let m: MatrixFile = serde_json::from_slice(&bytes).map_err(|e| CliError::input(format!("{path}: {e}")))?;
        let v = document::VSpec::Explicit { re: m.re, im: m.im }
            .to_matrix()
            .ok_or_else(|| CliError::input(format!("{path}: malformed matrix")))?;
        return Ok(VChoice::Explicit(v));
    }
    Err(CliError::input(format!(
        "--v must be identity, random:<seed> or file:<path>, got '{spec}'"
    )))
}

#[derive(Deserialize)]
struct AEntry {
    i: usize,
    j: usize,
    a: f64,
}

fn read_a_values(path: &Path) -> Result<AValues, CliError> {
    let bytes = read_file(path)?;
    let entries: Vec<AEntry> =
        serde_json::from_slice(&bytes).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut values = AValues::new();
    for e in entries {
        if e.i == 0 || e.j == 0 {
            return Err(CliError::validation(format!(
                "a-value indices are one-based, got ({}, {})",
                e.i, e.j
            )));
        }
        values.set(e.i - 1, e.j - 1, e.a)?;
    }
    Ok(values)
}

fn trim_number(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn branch_name(i: usize, j: usize) -> String {
    format!("TL_{i}_{j}")
}

/// Branch table with one-based indices, sorted by `(i, j)`.
pub fn branch_table(doc: &DnDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12}{:>14}{:>16}", "TL Branch", "Z0 (ohm)", "theta (degree)");
    for b in &doc.branches {
        let _ = writeln!(
            out,
            "{:<12}{:>14.2}{:>16}",
            branch_name(b.i, b.j),
            b.z0_ohm,
            trim_number(b.theta_deg, 2)
        );
    }
    for p in &doc.pruned {
        let b = p.b_ohm.map_or("open".to_string(), |b| format!("b = {b:.2} ohm"));
        let _ = writeln!(out, "{:<12}{:>14}   pruned ({b})", branch_name(p.i, p.j), "-");
    }
    out
}

pub fn cmd_synthesize(args: &SynthesizeArgs) -> Result<CommandOutput, CliError> {
    let data = read_load(&args.load, args.ports)?;
    let k = design_point(&data, args.f0)?;
    let load = LoadNetwork::new(data.matrices[k].clone(), data.frequencies[k], data.reference)?;
    let mode = match args.mode {
        ModeArg::Standard => SynthesisMode::Standard,
        ModeArg::Custom => {
            let path = args
                .a_file
                .as_ref()
                .ok_or_else(|| CliError::input("custom mode needs --a-file"))?;
            SynthesisMode::Custom(read_a_values(path)?)
        }
    };
    if !(args.z0_max > 0.0) {
        return Err(CliError::validation(format!(
            "--z0-max {} must be positive",
            args.z0_max
        )));
    }
    let cfg = SynthesisConfig {
        mode,
        v_choice: parse_v(&args.v)?,
        z0_max: args.z0_max,
        ..Default::default()
    };
    let result = synthesize(&load, &cfg)?;
    let doc = DnDocument::from_result(&result, &cfg, data.reference.ohms());
    write_file(&args.out, &doc.to_json())?;

    let mut out = branch_table(&doc);
    let d = &doc.diagnostics;
    let _ = writeln!(out);
    let _ = writeln!(out, "unitarity defect     {:.3e}", d.unitarity_defect);
    let _ = writeln!(out, "Y residual (built)   {:.3e} S", d.y_residual);
    if let Some(c) = d.composite_max_pruned {
        let _ = writeln!(out, "max |S_comp(f0)|     {c:.3e}");
    }
    if !doc.pruned.is_empty() {
        if let Some(c) = d.composite_max_unpruned {
            let _ = writeln!(out, "  without pruning    {c:.3e}");
        }
    }
    for r in &d.retries {
        let _ = writeln!(out, "retry: {r}");
    }
    for w in &d.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    Ok(CommandOutput::ok(out))
}

fn db(x: f64) -> f64 {
    20.0 * x.max(1e-20).log10()
}

fn check_reference(doc: &DnDocument, load: &NetworkData) -> Result<PortReference, CliError> {
    if doc.n != load.n_ports {
        return Err(CliError::validation(format!(
            "network document is for {} load ports, the load has {}",
            doc.n, load.n_ports
        )));
    }
    if (doc.z_ref_ohm - load.reference.ohms()).abs() > 1e-9 * doc.z_ref_ohm {
        return Err(CliError::validation(format!(
            "reference impedance differs: document {} ohm, load {} ohm",
            doc.z_ref_ohm,
            load.reference.ohms()
        )));
    }
    PortReference::new(doc.z_ref_ohm).map_err(|e| CliError::validation(e.to_string()))
}

fn network_of(doc: &DnDocument, include_pruned: bool) -> Result<PiNetwork, CliError> {
    let net = if include_pruned {
        doc.to_unpruned_network()
    } else {
        doc.to_network()
    };
    net.map_err(CliError::validation)
}

/// Composite S at the design frequency of `net` for the load's matrix at that grid point.
pub fn composite_at_design(
    net: &PiNetwork,
    load: &NetworkData,
    reference: PortReference,
) -> Result<ComplexMatrix, CliError> {
    let k = design_point(load, net.f0())?;
    let y = assemble_pi_y(net, net.f0()).map_err(|e| CliError::synthesis(e.to_string()))?;
    let s = y_to_s(&y, reference).map_err(|e| CliError::synthesis(e.to_string()))?;
    terminate(&s, &load.matrices[k]).map_err(|e| CliError::synthesis(e.to_string()))
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<CommandOutput, CliError> {
    let load = read_load(&args.load, args.ports)?;
    let doc = read_document(&args.dn)?;
    let reference = check_reference(&doc, &load)?;
    let net = network_of(&doc, args.include_pruned)?;
    let s = composite_at_design(&net, &load, reference)?;

    let worst = s.max_abs();
    let pass = worst <= args.threshold;
    let mut out = String::new();
    let _ = writeln!(out, "design frequency {} Hz", doc.f0_hz);
    let _ = writeln!(out, "max |S_comp| = {worst:.3e} ({:.2} dB)", db(worst));
    for i in 0..s.rows() {
        for j in 0..s.cols() {
            let _ = writeln!(out, "S{}{} {:>10.2} dB", i + 1, j + 1, db(s[(i, j)].norm()));
        }
    }
    let _ = writeln!(
        out,
        "{} (threshold {:.1e})",
        if pass { "PASS" } else { "FAIL" },
        args.threshold
    );
    Ok(CommandOutput {
        stdout: out,
        exit_code: if pass { 0 } else { ErrorClass::Verification.exit_code() },
    })
}

/// `freq_hz` then `|S_ij|` in dB row-major; a trailing annotation column only when some point is annotated.
pub fn composite_csv(response: &CompositeResponse) -> String {
    let n = response.n_ports();
    let annotated = response.is_annotated();
    let mut out = String::from("freq_hz");
    for i in 0..n {
        for j in 0..n {
            let _ = write!(out, ",S{}_{}_db", i + 1, j + 1);
        }
    }
    if annotated {
        out.push_str(",annotation");
    }
    out.push('\n');
    for ((f, s), notes) in response
        .frequencies
        .iter()
        .zip(&response.s_matrices)
        .zip(&response.annotations)
    {
        let _ = write!(out, "{f:?}");
        for z in s.to_row_major() {
            let _ = write!(out, ",{:?}", db(z.norm()));
        }
        if annotated {
            let notes: Vec<String> = notes.iter().map(ToString::to_string).collect();
            let _ = write!(out, ",{}", notes.join(";"));
        }
        out.push('\n');
    }
    out
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<CommandOutput, CliError> {
    let load = read_load(&args.load, args.ports)?;
    let doc = read_document(&args.dn)?;
    let reference = check_reference(&doc, &load)?;
    let net = network_of(&doc, args.include_pruned)?;
    let response = sweep(&net, &load, reference).map_err(|e| CliError::synthesis(e.to_string()))?;

    let mut data = NetworkData::new(response.frequencies.clone(), response.s_matrices.clone(), reference)
        .map_err(|e| CliError::synthesis(e.to_string()))?;
    data.source_funit = load.source_funit;
    write_file(
        &args.out,
        &touchstone::write_annotated(&data, DataFormat::RI, Some(doc.f0_hz)),
    )?;
    if let Some(csv) = &args.csv {
        write_file(csv, &composite_csv(&response))?;
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} points written to {}",
        response.frequencies.len(),
        args.out.display()
    );
    for (f, notes) in response.frequencies.iter().zip(&response.annotations) {
        for note in notes {
            let _ = writeln!(out, "note at {f} Hz: {note}");
        }
    }
    Ok(CommandOutput::ok(out))
}

pub fn cmd_loadgen(args: &LoadgenArgs) -> Result<CommandOutput, CliError> {
    let reference = PortReference::new(args.z_ref).map_err(|e| CliError::input(e.to_string()))?;
    let spec = loadgen::LoadSpec {
        n: args.n,
        f0: args.f0,
        span: args.span,
        points: args.points,
        seed: args.seed,
        coupling_level: args.coupling,
        reference,
    };
    let data = loadgen::generate(&spec).map_err(CliError::input)?;
    let text = touchstone::write_annotated(&data, args.format.into(), Some(args.f0));
    write_file(&args.out, &text)?;
    Ok(CommandOutput::ok(format!(
        "{}-port load, {} points, written to {}\n",
        args.n,
        data.frequencies.len(),
        args.out.display()
    )))
}

/// Branch table as CSV with full-precision numbers.
pub fn export_csv(doc: &DnDocument) -> String {
    let mut out = String::from("branch,i,j,z0_ohm,theta_deg\n");
    for b in &doc.branches {
        let _ = writeln!(
            out,
            "{},{},{},{:?},{:?}",
            branch_name(b.i, b.j),
            b.i,
            b.j,
            b.z0_ohm,
            b.theta_deg
        );
    }
    out
}

/// Generic ideal-line netlist.
///
/// ```text
/// * comment
/// TL_<i>_<j> <node> <node> Z0=<ohm> EL=<degrees> F0=<hz>
/// .end
/// ```
///
/// Nodes are the one-based port numbers and `0` is ground, used as the
/// second node of shunt lines. Pruned lines appear as comments.
pub fn export_netlist(doc: &DnDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "* tldn ideal transmission-line netlist ({})", doc.schema_version);
    let _ = writeln!(
        out,
        "* ports 1..{} decoupled side, {}..{} load side, node 0 ground",
        doc.n,
        doc.n + 1,
        2 * doc.n
    );
    let _ = writeln!(
        out,
        "* element: TL_<i>_<j> <node a> <node b> Z0=<ohm> EL=<degrees at F0> F0=<hz>"
    );
    for b in &doc.branches {
        let other = if b.i == b.j { 0 } else { b.j };
        let _ = writeln!(
            out,
            "{} {} {} Z0={:?} EL={:?} F0={:?}",
            branch_name(b.i, b.j),
            b.i,
            other,
            b.z0_ohm,
            b.theta_deg,
            doc.f0_hz
        );
    }
    for p in &doc.pruned {
        match p.b_ohm {
            Some(b) => {
                let _ = writeln!(out, "* pruned {} b={b:?}", branch_name(p.i, p.j));
            }
            None => {
                let _ = writeln!(out, "* pruned {} open", branch_name(p.i, p.j));
            }
        }
    }
    out.push_str(".end\n");
    out
}

pub fn cmd_export(args: &ExportArgs) -> Result<CommandOutput, CliError> {
    let doc = read_document(&args.dn)?;
    let text = match args.format {
        ExportFormat::Csv => export_csv(&doc),
        ExportFormat::Netlist => export_netlist(&doc),
    };
    match &args.out {
        Some(path) => {
            write_file(path, &text)?;
            Ok(CommandOutput::ok(format!("written to {}\n", path.display())))
        }
        None => Ok(CommandOutput::ok(text)),
    }
}
