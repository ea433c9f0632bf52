// SPDX-License-Identifier: Apache-2.0

//! Touchstone v1 (`.sNp`) reader and writer for S-parameter data.
//!
//! Two-port records are stored column-wise (`S11 S21 S12 S22`); every
//! other port count is row-major, with each matrix row allowed to spill
//! over continuation lines. Only S-parameters are supported.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::linalg::{ComplexMatrix, C64};
use crate::netconv::PortReference;

/// Value written for a zero magnitude in dB form.
const DB_FLOOR: f64 = -400.0;

/// Guard against absurd port counts coming from file names.
pub const MAX_PORTS: usize = 1024;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TouchstoneError {
    #[error("input is not valid UTF-8 text")]
    Encoding,
    #[error("line {line}: Touchstone v2 keyword found; only v1 files are supported")]
    UnsupportedVersion { line: usize },
    #[error("line {line}: data before the option line")]
    MissingOptionLine { line: usize },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: unsupported network parameter '{parameter}', only S is supported")]
    UnsupportedParameter { line: usize, parameter: String },
    #[error("line {line}: frequency {current} Hz does not follow {previous} Hz")]
    Ordering { line: usize, previous: f64, current: f64 },
    #[error("line {line}: expected {expected} values in this record, found {found}")]
    Truncated { line: usize, expected: usize, found: usize },
    #[error("no network data")]
    Empty,
    #[error("invalid port count {0}")]
    PortCount(usize),
}

impl TouchstoneError {
    /// Short machine-readable class.
    pub fn class(&self) -> &'static str {
        match self {
            Self::Encoding => "encoding",
            Self::UnsupportedVersion { .. } => "unsupported-version",
            Self::MissingOptionLine { .. } | Self::Format { .. } => "format",
            Self::UnsupportedParameter { .. } => "unsupported-parameter",
            Self::Ordering { .. } => "ordering",
            Self::Truncated { .. } => "truncation",
            Self::Empty => "empty",
            Self::PortCount(_) => "port-count",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    RI,
    MA,
    DB,
}

impl DataFormat {
    pub fn keyword(self) -> &'static str {
        match self {
            Self::RI => "RI",
            Self::MA => "MA",
            Self::DB => "DB",
        }
    }

    fn decode(self, x: f64, y: f64) -> C64 {
        match self {
            Self::RI => C64::new(x, y),
            Self::MA => C64::from_polar(x, y.to_radians()),
            Self::DB => C64::from_polar(10f64.powf(x / 20.0), y.to_radians()),
        }
    }

    fn encode(self, z: C64) -> (f64, f64) {
        match self {
            Self::RI => (z.re, z.im),
            Self::MA => (z.norm(), z.arg().to_degrees()),
            Self::DB => {
                let mag = z.norm();
                let db = if mag > 0.0 {
                    (20.0 * mag.log10()).max(DB_FLOOR)
                } else {
                    DB_FLOOR
                };
                (db, z.arg().to_degrees())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyUnit {
    Hz,
    KHz,
    MHz,
    GHz,
}

impl FrequencyUnit {
    pub fn multiplier(self) -> f64 {
        match self {
            Self::Hz => 1.0,
            Self::KHz => 1e3,
            Self::MHz => 1e6,
            Self::GHz => 1e9,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Self::Hz => "HZ",
            Self::KHz => "KHZ",
            Self::MHz => "MHZ",
            Self::GHz => "GHZ",
        }
    }
}

/// An N-port S-parameter sweep.
#[derive(Debug, Clone)]
pub struct NetworkData {
    pub n_ports: usize,
    /// Strictly ascending, hertz.
    pub frequencies: Vec<f64>,
    pub matrices: Vec<ComplexMatrix>,
    pub reference: PortReference,
    pub source_format: DataFormat,
    pub source_funit: FrequencyUnit,
}

impl NetworkData {
    /// Validated sweep, tagged as RI data in hertz.
    pub fn new(
        frequencies: Vec<f64>,
        matrices: Vec<ComplexMatrix>,
        reference: PortReference,
    ) -> Result<Self, TouchstoneError> {
        let n_ports = matrices
            .first()
            .map(ComplexMatrix::rows)
            .ok_or(TouchstoneError::Empty)?;
        if n_ports == 0 || n_ports > MAX_PORTS {
            return Err(TouchstoneError::PortCount(n_ports));
        }
        if frequencies.len() != matrices.len() {
            return Err(TouchstoneError::Truncated {
                line: 0,
                expected: frequencies.len(),
                found: matrices.len(),
            });
        }
        for (k, m) in matrices.iter().enumerate() {
            if m.rows() != n_ports || m.cols() != n_ports {
                return Err(TouchstoneError::Format {
                    line: 0,
                    message: format!("matrix {k} is {}x{}, expected {n_ports}x{n_ports}", m.rows(), m.cols()),
                });
            }
        }
        for w in frequencies.windows(2) {
            if !(w[1] > w[0]) {
                return Err(TouchstoneError::Ordering {
                    line: 0,
                    previous: w[0],
                    current: w[1],
                });
            }
        }
        if frequencies.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(TouchstoneError::Format {
                line: 0,
                message: "frequencies must be finite and nonnegative".into(),
            });
        }
        Ok(Self {
            n_ports,
            frequencies,
            matrices,
            reference,
            source_format: DataFormat::RI,
            source_funit: FrequencyUnit::Hz,
        })
    }
}

/// Port count from a `.sNp` file name, e.g. `array.s3p` → 3.
pub fn ports_from_path(path: &Path) -> Option<usize> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    let digits = ext.strip_prefix('s')?.strip_suffix('p')?;
    digits.parse().ok().filter(|n| (1..=MAX_PORTS).contains(n))
}

#[derive(Debug, Clone)]
pub struct ParseOutput {
    pub network: NetworkData,
    pub warnings: Vec<String>,
}

struct OptionLine {
    unit: FrequencyUnit,
    format: DataFormat,
    resistance: f64,
}

fn parse_option_line(body: &str, line: usize) -> Result<OptionLine, TouchstoneError> {
    let garbled = |message: String| TouchstoneError::Format { line, message };
    let mut unit = None;
    let mut parameter = None;
    let mut format = None;
    let mut resistance = None;
    let mut tokens = body.split_whitespace();
    while let Some(tok) = tokens.next() {
        let upper = tok.to_ascii_uppercase();
        let slot_taken = |what: &str| garbled(format!("option line repeats the {what}"));
        match upper.as_str() {
            "HZ" | "KHZ" | "MHZ" | "GHZ" => {
                if unit.is_some() {
                    return Err(slot_taken("frequency unit"));
                }
                unit = Some(match upper.as_str() {
                    "HZ" => FrequencyUnit::Hz,
                    "KHZ" => FrequencyUnit::KHz,
                    "MHZ" => FrequencyUnit::MHz,
                    _ => FrequencyUnit::GHz,
                });
            }
            "S" | "Y" | "Z" | "H" | "G" => {
                if parameter.is_some() {
                    return Err(slot_taken("parameter"));
                }
                parameter = Some(upper);
            }
            "RI" | "MA" | "DB" => {
                if format.is_some() {
                    return Err(slot_taken("data format"));
                }
                format = Some(match upper.as_str() {
                    "RI" => DataFormat::RI,
                    "MA" => DataFormat::MA,
                    _ => DataFormat::DB,
                });
            }
            "R" => {
                if resistance.is_some() {
                    return Err(slot_taken("reference resistance"));
                }
                let value = tokens
                    .next()
                    .ok_or_else(|| garbled("R must be followed by a resistance".into()))?;
                let r: f64 = value
                    .parse()
                    .map_err(|_| garbled(format!("invalid reference resistance '{value}'")))?;
                if !(r > 0.0 && r.is_finite()) {
                    return Err(garbled(format!("reference resistance {r} must be positive")));
                }
                resistance = Some(r);
            }
            _ => return Err(garbled(format!("unrecognized option '{tok}'"))),
        }
    }
    if let Some(p) = parameter.filter(|p| p != "S") {
        return Err(TouchstoneError::UnsupportedParameter { line, parameter: p });
    }
    Ok(OptionLine {
        unit: unit.unwrap_or(FrequencyUnit::GHz),
        format: format.unwrap_or(DataFormat::MA),
        resistance: resistance.unwrap_or(50.0),
    })
}

fn parse_number(tok: &str, line: usize) -> Result<f64, TouchstoneError> {
    match tok.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(TouchstoneError::Format {
            line,
            message: format!("invalid number '{tok}'"),
        }),
    }
}

/// Parses a Touchstone v1 file holding an `n_ports`-port S-parameter sweep.
pub fn parse(bytes: &[u8], n_ports: usize) -> Result<NetworkData, TouchstoneError> {
    parse_with_warnings(bytes, n_ports).map(|out| out.network)
}

pub fn parse_with_warnings(bytes: &[u8], n_ports: usize) -> Result<ParseOutput, TouchstoneError> {
    if n_ports == 0 || n_ports > MAX_PORTS {
        return Err(TouchstoneError::PortCount(n_ports));
    }
    let text = std::str::from_utf8(bytes).map_err(|_| TouchstoneError::Encoding)?;
    let per_record = 1 + 2 * n_ports * n_ports;
    let mut warnings = Vec::new();
    let mut options: Option<OptionLine> = None;
    let mut records: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut current: Vec<f64> = Vec::new();
    let mut record_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('!').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            return Err(TouchstoneError::UnsupportedVersion { line });
        }
        if let Some(body) = content.strip_prefix('#') {
            if options.is_some() {
                warnings.push(format!("line {line}: additional option line ignored"));
            } else {
                options = Some(parse_option_line(body, line)?);
            }
            continue;
        }
        if options.is_none() {
            return Err(TouchstoneError::MissingOptionLine { line });
        }
        let values = content
            .split_whitespace()
            .map(|t| parse_number(t, line))
            .collect::<Result<Vec<_>, _>>()?;

        if current.is_empty() {
            let previous = records.last().map(|r| r.1[0]);
            if n_ports == 2 && values.len() == 5 && previous.is_some_and(|p| values[0] <= p) {
                warnings.push(format!("line {line}: noise parameter section skipped"));
                break;
            }
            record_line = line;
        }
        current.extend(values);
        if current.len() > per_record {
            return Err(TouchstoneError::Truncated {
                line: record_line,
                expected: per_record,
                found: current.len(),
            });
        }
        if current.len() == per_record {
            records.push((record_line, std::mem::take(&mut current)));
        }
    }
    if !current.is_empty() {
        return Err(TouchstoneError::Truncated {
            line: record_line,
            expected: per_record,
            found: current.len(),
        });
    }
    let options = match options {
        Some(o) => o,
        None => {
            return Err(TouchstoneError::MissingOptionLine {
                line: text.lines().count().max(1),
            })
        }
    };
    if records.is_empty() {
        return Err(TouchstoneError::Empty);
    }

    let n = n_ports;
    let mut frequencies = Vec::with_capacity(records.len());
    let mut matrices = Vec::with_capacity(records.len());
    for (line, rec) in &records {
        let f = rec[0] * options.unit.multiplier();
        if !(f.is_finite() && f >= 0.0) {
            return Err(TouchstoneError::Format {
                line: *line,
                message: format!("invalid frequency {}", rec[0]),
            });
        }
        if let Some(&previous) = frequencies.last() {
            if !(f > previous) {
                return Err(TouchstoneError::Ordering {
                    line: *line,
                    previous,
                    current: f,
                });
            }
        }
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        for k in 0..n * n {
            let z = options.format.decode(rec[1 + 2 * k], rec[2 + 2 * k]);
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(TouchstoneError::Format {
                    line: *line,
                    message: "value overflows".into(),
                });
            }
            // Two-port files list S11 S21 S12 S22.
            let (row, col) = if n == 2 { (k % 2, k / 2) } else { (k / n, k % n) };
            entries[row * n + col] = z;
        }
        frequencies.push(f);
        matrices.push(ComplexMatrix::from_row_major(n, n, entries).expect("finite entries checked above"));
    }

    Ok(ParseOutput {
        network: NetworkData {
            n_ports,
            frequencies,
            matrices,
            reference: PortReference::new(options.resistance).expect("validated resistance"),
            source_format: options.format,
            source_funit: options.unit,
        },
        warnings,
    })
}

/// Rounds to nine significant digits and prints the shortest text that reads back to it.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0.0".into();
    }
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    format!("{rounded:?}")
}

/// Serializes `net` in the given data format.
pub fn write(net: &NetworkData, format: DataFormat) -> String {
    write_annotated(net, format, None)
}

/// Serializes `net`, recording the design frequency in the comment header when given.
pub fn write_annotated(net: &NetworkData, format: DataFormat, design_frequency: Option<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "! Generated by tldn {}", env!("CARGO_PKG_VERSION"));
    if let Some(f0) = design_frequency {
        let _ = writeln!(out, "! Design frequency: {} Hz", format_sig9(f0));
    }
    let _ = writeln!(
        out,
        "# {} S {} R {}",
        net.source_funit.keyword(),
        format.keyword(),
        net.reference.ohms()
    );
    let n = net.n_ports;
    let scale = net.source_funit.multiplier();
    for (f, m) in net.frequencies.iter().zip(&net.matrices) {
        let pair = |i: usize, j: usize| {
            let (x, y) = format.encode(m[(i, j)]);
            format!("{} {}", format_sig9(x), format_sig9(y))
        };
        let freq = format_sig9(f / scale);
        if n <= 2 {
            let order: Vec<(usize, usize)> = if n == 1 {
                vec![(0, 0)]
            } else {
                vec![(0, 0), (1, 0), (0, 1), (1, 1)]
            };
            let values: Vec<String> = order.into_iter().map(|(i, j)| pair(i, j)).collect();
            let _ = writeln!(out, "{freq} {}", values.join(" "));
        } else {
            for i in 0..n {
                let row: Vec<String> = (0..n).map(|j| pair(i, j)).collect();
                for (chunk_index, chunk) in row.chunks(4).enumerate() {
                    let lead = if i == 0 && chunk_index == 0 { freq.as_str() } else { "" };
                    let pad = if lead.is_empty() {
                        " ".repeat(freq.len())
                    } else {
                        String::new()
                    };
                    let _ = writeln!(out, "{lead}{pad} {}", chunk.join(" "));
                }
            }
        }
    }
    out
}
