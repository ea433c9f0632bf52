// SPDX-License-Identifier: Apache-2.0

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};

use common::*;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::Rng;

use tldn::linalg::ComplexMatrix;
use tldn::netconv::PortReference;
use tldn::touchstone::{self, parse, parse_with_warnings, write, write_annotated, DataFormat, NetworkData};

const FORMATS: [DataFormat; 3] = [DataFormat::RI, DataFormat::MA, DataFormat::DB];

fn random_network(n: usize, points: usize, seed: u64) -> NetworkData {
    let mut r = rng(seed);
    let mut f = r.random_range(1e6..1e9);
    let mut freqs = Vec::new();
    let mut mats = Vec::new();
    for _ in 0..points {
        freqs.push(f);
        f += r.random_range(1e3..1e8);
        mats.push(
            ComplexMatrix::from_fn(n, n, |_, _| {
                C::from_polar(r.random_range(0.0..1.0), r.random_range(-3.1..3.1))
            })
            .unwrap(),
        );
    }
    NetworkData::new(freqs, mats, PortReference::new(r.random_range(10.0..100.0)).unwrap()).unwrap()
}

fn assert_close(a: &NetworkData, b: &NetworkData) {
    assert_eq!(a.n_ports, b.n_ports);
    assert_eq!(a.frequencies.len(), b.frequencies.len());
    for (x, y) in a.frequencies.iter().zip(&b.frequencies) {
        assert!((x - y).abs() <= 1e-8 * x);
    }
    for (x, y) in a.matrices.iter().zip(&b.matrices) {
        assert!(x.max_abs_diff(y) <= 1e-8, "{:.3e}", x.max_abs_diff(y));
    }
    assert!((a.reference.ohms() - b.reference.ohms()).abs() <= 1e-8 * a.reference.ohms());
}

#[test]
fn round_trip_every_format_and_size() {
    for fmt in FORMATS {
        for n in 1..=6 {
            let net = random_network(n, 5, 10 * n as u64);
            let text = write(&net, fmt);
            assert_close(&net, &parse(text.as_bytes(), n).unwrap());
        }
    }
}

#[test]
fn rewriting_is_stable() {
    for fmt in FORMATS {
        let net = random_network(3, 4, 7);
        let once = write(&net, fmt);
        let twice = write(&parse(once.as_bytes(), 3).unwrap(), fmt);
        assert_eq!(once, twice);
    }
}

#[test]
fn annotated_header() {
    let net = random_network(2, 3, 1);
    let text = write_annotated(&net, DataFormat::RI, Some(2.4e9));
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("! Generated by tldn"));
    assert!(lines.next().unwrap().contains("Design frequency"));
    assert!(lines.next().unwrap().starts_with("# HZ S RI R "));
}

#[test]
fn foreign_units_and_spacing() {
    let text = "!comment\n\n  #  khz   s   db   r   75  \n 1000\t-6.0206 90 ! point\n";
    let net = parse(text.as_bytes(), 1).unwrap();
    assert_eq!(net.frequencies, vec![1e6]);
    assert!((net.matrices[0][(0, 0)] - C::new(0.0, 0.5)).norm() < 1e-5);
    assert_eq!(net.reference.ohms(), 75.0);
}

#[test]
fn zero_magnitude_in_db_is_clamped() {
    let net = NetworkData::new(vec![1e9], vec![ComplexMatrix::zeros(2, 2)], PortReference::default()).unwrap();
    let back = parse(write(&net, DataFormat::DB).as_bytes(), 2).unwrap();
    assert!(back.matrices[0].max_abs() < 1e-15);
}

#[test]
fn two_port_noise_block_is_reported() {
    let net = random_network(2, 3, 4);
    let mut text = write(&net, DataFormat::RI);
    text.push_str("1e6 1.5 0.3 10 0.4\n2e6 1.6 0.3 12 0.4\n");
    let out = parse_with_warnings(text.as_bytes(), 2).unwrap();
    assert_eq!(out.network.frequencies.len(), 3);
    assert_eq!(out.warnings.len(), 1);
}

#[test]
fn truncated_records_are_rejected() {
    let net = random_network(3, 4, 9);
    let text = write(&net, DataFormat::MA);
    let body_start = text.find("\n#").unwrap() + 1;
    let body_start = body_start + text[body_start..].find('\n').unwrap() + 1;
    for cut in body_start + 1..text.len() - 1 {
        let prefix = &text.as_bytes()[..cut];
        if !text.as_bytes()[cut].is_ascii_whitespace() && !prefix[cut - 1].is_ascii_whitespace() {
            // A cut inside a number leaves a shorter, valid number.
            continue;
        }
        if let Ok(parsed) = parse(prefix, 3) {
            // Only a cut at a record boundary may succeed, keeping whole records.
            assert!(parsed.frequencies.len() < net.frequencies.len());
            for (a, b) in parsed.matrices.iter().zip(&net.matrices) {
                assert!(a.max_abs_diff(b) <= 1e-8);
            }
        }
    }
}

#[test]
fn fuzzed_inputs_produce_classified_errors() {
    let classes = [
        "encoding",
        "unsupported-version",
        "format",
        "unsupported-parameter",
        "ordering",
        "truncation",
        "empty",
        "port-count",
    ];
    let seeds: Vec<(String, usize)> = (1..=4)
        .flat_map(|n| FORMATS.map(|f| (write(&random_network(n, 3, n as u64), f), n)))
        .collect();
    let mut r = rng(2024);
    for k in 0..1500 {
        let (text, n) = &seeds[k % seeds.len()];
        let mut bytes = text.clone().into_bytes();
        for _ in 0..r.random_range(1..5) {
            if bytes.is_empty() {
                break;
            }
            let at = r.random_range(0..bytes.len());
            match r.random_range(0..4) {
                0 => bytes[at] = r.random(),
                1 => {
                    bytes.remove(at);
                }
                2 => bytes.insert(at, b" \n#!-.e9"[r.random_range(0..8)]),
                _ => bytes.truncate(at),
            }
        }
        let n = if k % 97 == 0 { 0 } else { *n };
        let result = catch_unwind(AssertUnwindSafe(|| parse(&bytes, n))).expect("parser must not panic");
        if let Err(e) = result {
            assert!(classes.contains(&e.class()), "unknown class {}", e.class());
            assert!(!e.to_string().is_empty());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..400), n in 0usize..5) {
        let _ = touchstone::parse(&bytes, n);
    }

    #[test]
    fn arbitrary_text_never_panics(text in "[#!0-9 .eE+\\-\\nSsRrIiMmAaDdBbGHzZ]{0,300}", n in 1usize..4) {
        let _ = touchstone::parse(text.as_bytes(), n);
    }

    #[test]
    fn round_trip_property(n in 1usize..7, points in 1usize..6, seed in any::<u64>(), fmt in 0usize..3) {
        let net = random_network(n, points, seed);
        let back = parse(write(&net, FORMATS[fmt]).as_bytes(), n).unwrap();
        for (x, y) in net.matrices.iter().zip(&back.matrices) {
            prop_assert!(x.max_abs_diff(y) <= 1e-8);
        }
    }
}
