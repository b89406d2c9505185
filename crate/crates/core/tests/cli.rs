use std::path::Path;
use std::process::{Command, Output};

use kweave::cli::io::{load_frame, load_operator, save_frame, FrameFileV1};
use kweave::{ComplexMatrix, Frame, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn kweave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kweave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn emit(dir: &Path, name: &str, dim: usize) -> String {
    let out = dir.join(format!("{name}_{dim}"));
    let o = kweave(&[
        "paper-example",
        name,
        "--dim",
        &dim.to_string(),
        "--emit",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    out.to_str().unwrap().to_string()
}

/// Parses a hand-written sequence such as `"0 e2 e2 e3"` into basis indices.
fn literal(dim: usize, seq: &str) -> Vec<Vec<C64>> {
    seq.split_whitespace()
        .map(|t| {
            let mut v = vec![C64::new(0.0, 0.0); dim];
            if let Some(k) = t.strip_prefix('e') {
                v[k.parse::<usize>().unwrap() - 1] = C64::new(1.0, 0.0);
            } else {
                assert_eq!(t, "0");
            }
            v
        })
        .collect()
}

fn projection_literal(dim: usize, from: usize) -> ComplexMatrix {
    let diag: Vec<f64> = (1..=dim)
        .map(|k| if k >= from { 1.0 } else { 0.0 })
        .collect();
    ComplexMatrix::diagonal(&diag)
}

const FIXTURES: &[(&str, usize, &str, &str)] = &[
    ("example_a", 4, "0 e2 0 e3 0 e4 0", "0 e2 e2 e3 e3 e4 e4"),
    (
        "example_a",
        6,
        "0 e2 0 e3 0 e4 0 e5 0 e6 0",
        "0 e2 e2 e3 e3 e4 e4 e5 e5 e6 e6",
    ),
    ("example_b", 4, "e1 e2 0 e3 e4", "e1 0 e2 e3 e4"),
    ("example_b", 6, "e1 e2 0 e3 e4 e5 e6", "e1 0 e2 e3 e4 e5 e6"),
    (
        "example_pr2",
        4,
        "e1 0 e2 0 e3 0 e4 0",
        "0 e1 0 e2 e3 e3 e4 e4",
    ),
    (
        "example_pr2",
        6,
        "e1 0 e2 0 e3 0 e4 0 e5 0 e6 0",
        "0 e1 0 e2 e3 e3 e4 e4 e5 e5 e6 e6",
    ),
];

#[test]
fn generator_matches_literal_fixtures() {
    let tmp = TempDir::new().unwrap();
    for &(name, dim, phi, psi) in FIXTURES {
        let dir = emit(tmp.path(), name, dim);
        let dir = Path::new(&dir);
        for (file, seq) in [("f1.json", phi), ("f2.json", psi)] {
            let got = load_frame(&dir.join(file)).unwrap().value;
            let want = Frame::from_columns(dim, &literal(dim, seq)).unwrap();
            assert_eq!(got, want, "{name} dim {dim} {file}");
        }
        let k = load_operator(&dir.join("k.json")).unwrap().value;
        assert_eq!(k, projection_literal(dim, 2));
        let u = dir.join("u.json");
        if name == "example_pr2" {
            assert_eq!(load_operator(&u).unwrap().value, projection_literal(dim, 3));
        } else {
            assert!(!u.exists());
        }
    }
}

#[test]
fn frame_file_round_trip_is_bit_exact() {
    let tmp = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..20 {
        let dim = rng.gen_range(1..6);
        let count = rng.gen_range(1..9);
        let cols: Vec<Vec<C64>> = (0..count)
            .map(|_| {
                (0..dim)
                    .map(|_| C64::new(rng.gen::<f64>() * 1e3 - 5e2, rng.gen::<f64>() * 1e-7))
                    .collect()
            })
            .collect();
        let f = Frame::from_columns(dim, &cols).unwrap();
        let path = tmp.path().join(format!("f{trial}.json"));
        save_frame(&path, &f).unwrap();
        let back = load_frame(&path).unwrap().value;
        assert_eq!(FrameFileV1::from_frame(&back), FrameFileV1::from_frame(&f));
        for j in 0..count {
            for (a, b) in back.vector(j).iter().zip(f.vector(j)) {
                assert_eq!(a.re.to_bits(), b.re.to_bits());
                assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }
}

#[test]
fn orthonormal_basis_bounds() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("onb.json");
    save_frame(
        &path,
        &Frame::from_basis_pattern(3, &[Some(0), Some(1), Some(2)]).unwrap(),
    )
    .unwrap();
    let o = kweave(&["frame-bounds", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("lower=1 upper=1"), "{}", stdout(&o));
}

#[test]
fn example_b_is_a_negative_certificate() {
    let tmp = TempDir::new().unwrap();
    let d = emit(tmp.path(), "example_b", 4);
    let o = kweave(&[
        "weave-certify",
        &format!("{d}/f1.json"),
        &format!("{d}/f2.json"),
        &format!("{d}/k.json"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("not woven"));
    assert!(
        text.contains("failing partition    {1,3,4,5} | {2}"),
        "{text}"
    );
}

#[test]
fn example_a_is_woven() {
    let tmp = TempDir::new().unwrap();
    let d = emit(tmp.path(), "example_a", 4);
    let report = tmp.path().join("r.json");
    let o = kweave(&[
        "weave-certify",
        &format!("{d}/f1.json"),
        &format!("{d}/f2.json"),
        &format!("{d}/k.json"),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    let res = &r["result"];
    assert_eq!(res["woven"], true);
    assert!((res["universal_lower"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!((res["universal_upper"].as_f64().unwrap() - 2.0).abs() < 1e-8);
    assert!((res["sum_upper_bound"].as_f64().unwrap() - 3.0).abs() < 1e-8);
    assert_eq!(res["partitions_checked"], 128);
    assert_eq!(r["format_version"], "kweave-report-v1");
    assert_eq!(r["inputs"].as_array().unwrap().len(), 3);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let d = emit(tmp.path(), "example_pr2", 5);
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let path = tmp.path().join("same.json");
        let o = Command::new(env!("CARGO_BIN_EXE_kweave"))
            .env("KWEAVE_THREADS", threads)
            .args([
                "weave-certify",
                &format!("{d}/f1.json"),
                &format!("{d}/f2.json"),
                &format!("{d}/k.json"),
                "--mode",
                "sampled",
                "--budget",
                "50",
                "--seed",
                "7",
                "--out",
                path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(1), "run {i}");
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn csv_table_has_one_row_per_partition() {
    let tmp = TempDir::new().unwrap();
    let d = emit(tmp.path(), "example_b", 4);
    let o = kweave(&[
        "weave-certify",
        &format!("{d}/f1.json"),
        &format!("{d}/f2.json"),
        &format!("{d}/k.json"),
        "--csv",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "partition,lower,upper");
    assert_eq!(lines.len(), 1 + 32);
    assert!(lines[1].starts_with("00000,"));
    assert!(lines[32].starts_with("11111,"));
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let d = emit(tmp.path(), "example_pr2", 4);
    let f1 = format!("{d}/f1.json");
    let f2 = format!("{d}/f2.json");
    let k = format!("{d}/k.json");
    let u = format!("{d}/u.json");

    assert_eq!(
        kweave(&["weave-certify", &f1, &f2, &k]).status.code(),
        Some(1)
    );
    assert_eq!(
        kweave(&["weave-transform", &f1, &f2, &k, "--u", &u])
            .status
            .code(),
        Some(0)
    );
    // Phi spans C^4, so it is a frame; a K-frame as well.
    assert_eq!(kweave(&["frame-bounds", &f1]).status.code(), Some(0));
    assert_eq!(kweave(&["kframe-check", &f1, &k]).status.code(), Some(0));
    assert_eq!(kweave(&["douglas", &k, &u]).status.code(), Some(1));
    assert_eq!(kweave(&["douglas", &u, &k]).status.code(), Some(0));
    assert_eq!(kweave(&["douglas", &f1, &k]).status.code(), Some(1));

    assert_eq!(kweave(&["weave-certify", &f1]).status.code(), Some(2));
    assert_eq!(
        kweave(&["weave-certify", &f1, &f2, "/no/such/file.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        kweave(&["paper-example", "example_q", "--dim", "5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        kweave(&["paper-example", "example_a", "--dim", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(kweave(&["kframe-check", &f1, &f1]).status.code(), Some(2));
    let bad = tmp.path().join("bad.json");
    std::fs::write(
        &bad,
        "{\"format_version\":\"kweave-frame-v1\",\"dim\":1,\"count\":1,\"vectors\":[[[1.0]]]}",
    )
    .unwrap();
    assert_eq!(
        kweave(&["frame-bounds", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    // Orthogonality fails for pr2's Phi (zero columns).
    assert_eq!(
        kweave(&[
            "perturb-check",
            &f1,
            &f2,
            &k,
            "--lambda",
            "0.1",
            "--alpha",
            "0.5"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn perturb_check_on_orthonormal_pair() {
    let tmp = TempDir::new().unwrap();
    let f1 = tmp.path().join("f1.json");
    let f2 = tmp.path().join("f2.json");
    let k = tmp.path().join("k.json");
    save_frame(
        &f1,
        &Frame::from_basis_pattern(2, &[Some(0), Some(1)]).unwrap(),
    )
    .unwrap();
    let near = Frame::from_columns(
        2,
        &[
            vec![C64::new(1.0, 0.0), C64::new(0.01, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        ],
    )
    .unwrap();
    save_frame(&f2, &near).unwrap();
    kweave::cli::io::save_operator(&k, &ComplexMatrix::identity(2)).unwrap();
    let args = |lambda: &str| {
        kweave(&[
            "perturb-check",
            f1.to_str().unwrap(),
            f2.to_str().unwrap(),
            k.to_str().unwrap(),
            "--lambda",
            lambda,
            "--alpha",
            "1",
            "--certify",
        ])
    };
    let o = args("0.01");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("consistent"));
    // lambda below the synthesis gap: the gap condition fails.
    assert_eq!(args("0.001").status.code(), Some(1));
    // lambda too large for the strict inequality.
    assert_eq!(args("5").status.code(), Some(1));
}
