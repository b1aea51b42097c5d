use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use topoattn::api;
use topoattn::attention::AttnConfig;
use topoattn::io::tnsr::Tensor;

fn topoattn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topoattn")).args(args).output().unwrap()
}

fn write_pgm(path: &Path, w: usize, h: usize, pixels: &[u8]) {
    let body: Vec<String> = pixels.iter().map(|p| p.to_string()).collect();
    fs::write(path, format!("P2\n{w} {h}\n255\n{}\n", body.join(" "))).unwrap();
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn pd_constant_image() {
    let dir = tempfile::tempdir().unwrap();
    let (input, output) = (dir.path().join("c.pgm"), dir.path().join("c.csv"));
    write_pgm(&input, 4, 3, &[100; 12]);
    let out = topoattn(&["pd", "--input", s(&input), "--output", s(&output)]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(&output).unwrap();
    assert_eq!(csv.lines().skip(1).collect::<Vec<_>>(), vec!["0,100,inf"]);
}

#[test]
fn pd_ring_has_loop_row() {
    let dir = tempfile::tempdir().unwrap();
    let (input, output) = (dir.path().join("r.pgm"), dir.path().join("r.csv"));
    let mut px = [10u8; 25];
    for i in [6, 7, 8, 11, 13, 16, 17, 18] {
        px[i] = 0;
    }
    px[12] = 200;
    write_pgm(&input, 5, 5, &px);
    assert_eq!(topoattn(&["pd", "--input", s(&input), "--output", s(&output)]).status.code(), Some(0));
    let csv = fs::read_to_string(&output).unwrap();
    let rows: Vec<_> = csv.lines().skip(1).collect();
    assert!(rows.contains(&"1,0,200"), "{rows:?}");
    assert!(rows.contains(&"0,0,inf"));
}

#[test]
fn missing_input_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = topoattn(&["pd", "--input", s(&dir.path().join("nope.pgm")), "--output", s(&dir.path().join("o.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn malformed_pgm_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.pgm");
    fs::write(&input, "P7\n1 1\n255\n0\n").unwrap();
    let out = topoattn(&["pd", "--input", s(&input), "--output", s(&dir.path().join("o.csv"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn betti_of_ring() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("r.pgm");
    write_pgm(&input, 3, 3, &[0, 0, 0, 0, 255, 0, 0, 0, 0]);
    let b0 = topoattn(&["betti", "--input", s(&input), "--threshold", "0", "--dim", "0"]);
    let b1 = topoattn(&["betti", "--input", s(&input), "--threshold", "0", "--dim", "1"]);
    let full = topoattn(&["betti", "--input", s(&input), "--threshold", "255", "--dim", "1"]);
    assert_eq!(stdout(&b0).trim(), "1");
    assert_eq!(stdout(&b1).trim(), "1");
    assert_eq!(stdout(&full).trim(), "0");
}

#[test]
fn bad_arguments_exit_one() {
    assert_eq!(topoattn(&["ssm-check", "--state-dim", "0"]).status.code(), Some(1));
    assert_eq!(topoattn(&["attn", "--input", "x.pgm", "--output", "y.tnsr", "--percentile", "101"]).status.code(), Some(1));
    assert_eq!(topoattn(&["no-such-command"]).status.code(), Some(1));
}

#[test]
fn ssm_check_is_deterministic() {
    let args = ["ssm-check", "--trials", "10", "--seed", "7"];
    let (a, b) = (topoattn(&args), topoattn(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).trim_end().ends_with("PASS"));
}

#[test]
fn attn_matches_api() {
    let dir = tempfile::tempdir().unwrap();
    let (input, output) = (dir.path().join("a.pgm"), dir.path().join("a.tnsr"));
    let px: Vec<u8> = (0..48u32).map(|i| ((i * 37 + i * i * 11) % 256) as u8).collect();
    write_pgm(&input, 8, 6, &px);
    assert_eq!(topoattn(&["attn", "--input", s(&input), "--output", s(&output)]).status.code(), Some(0));
    let tensor = Tensor::decode(&fs::read(&output).unwrap()).unwrap();
    assert_eq!(tensor.dims, vec![6, 8]);
    let values: Vec<f32> = px.iter().map(|&p| p as f32 / 255.0).collect();
    let direct = api::attention_array(&values, 6, 8, &AttnConfig::default()).unwrap();
    assert_eq!(tensor.data.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), direct.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
}

#[test]
fn empty_batch_directory() {
    let dir = tempfile::tempdir().unwrap();
    let (input, output) = (dir.path().join("in"), dir.path().join("out"));
    fs::create_dir(&input).unwrap();
    let out = topoattn(&["batch", "--input-dir", s(&input), "--output-dir", s(&output)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("images=0"));
}

#[test]
fn fuse_writes_four_scales() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["fuse".to_string()];
    for (i, side) in [16usize, 8, 4, 2].into_iter().enumerate() {
        let path = dir.path().join(format!("f{i}.tnsr"));
        Tensor { dims: vec![side, side, 3], data: vec![1.0; side * side * 3] }.write(&path).unwrap();
        args.extend(["--feature".into(), path.to_str().unwrap().into()]);
    }
    let attn = dir.path().join("attn.tnsr");
    Tensor { dims: vec![16, 16], data: vec![1.0; 256] }.write(&attn).unwrap();
    let out_dir = dir.path().join("out");
    args.extend(["--attention".into(), s(&attn).into(), "--output-dir".into(), s(&out_dir).into()]);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = topoattn(&refs);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for (i, side) in [16usize, 8, 4, 2].into_iter().enumerate() {
        let t = Tensor::read(&out_dir.join(format!("fused_{}.tnsr", i + 1))).unwrap();
        assert_eq!(t.dims, vec![side, side, 3]);
    }
}
