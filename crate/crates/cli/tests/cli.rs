use std::process::{Command, Output};

use serde_json::Value;

fn freeprob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freeprob"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn csv_body(out: &Output) -> Vec<Vec<String>> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn maxcorr_of_bernoulli_partial_sums() {
    let out = freeprob(&["maxcorr", "--dist", "bernoulli", "--m", "2", "--n", "3", "--degree", "4", "--mode", "exact"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["pass"], true);
    let rho = v["result"]["rho_max"].as_f64().unwrap();
    let theory = v["result"]["theoretical"].as_f64().unwrap();
    assert!((rho - 0.816497).abs() < 1e-6 && (theory - 0.816497).abs() < 1e-6);
    let float = json(&freeprob(&["maxcorr", "--dist", "bernoulli", "--m", "2", "--n", "3", "--degree", "4", "--mode", "float"]));
    assert!((float["result"]["rho_max"].as_f64().unwrap() - rho).abs() < 1e-9);
}

#[test]
fn fisher_of_the_semicircle() {
    let out = freeprob(&["fisher", "--dist", "semicircular", "--degree", "6"]);
    assert_eq!(code(&out), 0);
    let r = &json(&out)["result"];
    assert_eq!(r["phi_truncated"], "1/1");
    assert_eq!(r["conjugate_variable"], "z");
    let bern = json(&freeprob(&["fisher", "--dist", "bernoulli", "--degree", "4"]));
    assert_eq!(bern["result"]["divergent"], true);
    assert_eq!(bern["result"]["phi"], Value::Null);
}

#[test]
fn monotonicity_table_is_monotone() {
    let out = freeprob(&["monotonicity", "--dist", "bernoulli", "--smooth", "0.5", "--nmax", "6"]);
    assert_eq!(code(&out), 0);
    let rows = csv_body(&out);
    assert_eq!(rows[0], ["n", "chi", "chi_tol", "phi", "phi_divergent", "chi_ok", "phi_ok"]);
    assert_eq!(rows.len(), 7);
    let chi: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    let phi: Vec<f64> = rows[1..].iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(chi.windows(2).all(|w| w[1] > w[0]));
    assert!(phi.windows(2).all(|w| w[1] < w[0]));
    assert!(rows[1..].iter().all(|r| r[5] == "true" && r[6] == "true"));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&freeprob(&["maxcorr", "--m", "1", "--n", "2", "--bogus"])), 64);
    assert_eq!(code(&freeprob(&["no-such-command"])), 64);
    assert_eq!(code(&freeprob(&[])), 64);
    assert_eq!(code(&freeprob(&["cumulants", "--dist", "cauchy"])), 64);
    assert_eq!(code(&freeprob(&["project", "--poly", "x1 +", "--subset", "1"])), 64);
    assert_eq!(code(&freeprob(&["maxcorr", "--m", "3", "--n", "2"])), 1);
    assert_eq!(code(&freeprob(&["density", "--dist", "bernoulli"])), 1);
    let failing = freeprob(&[
        "rmt-check", "--dist", "bernoulli", "--size", "32", "--trials", "4", "--words", "1,2",
        "--maxcorr", "1,2", "--maxcorr-tolerance", "0",
    ]);
    assert_eq!(code(&failing), 2);
    assert_eq!(json(&failing)["pass"], false);
    assert_eq!(code(&freeprob(&["--version"])), 0);
}

#[test]
fn reports_are_reproducible_and_self_describing() {
    let args = ["rmt-check", "--dist", "bernoulli", "--smooth", "1/2", "--size", "48", "--trials", "5", "--random-words", "6", "--seed", "3"];
    let a = freeprob(&args);
    let b = freeprob(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["schema"], "freeprob-report/1");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["global"]["seed"], 3);
    assert_eq!(v["config"]["command"]["size"], 48);
    assert!(v["tolerances"]["sigmas"].is_number());
    let other = freeprob(&["--seed", "4", "rmt-check", "--dist", "bernoulli", "--smooth", "1/2", "--size", "48", "--trials", "5", "--random-words", "6"]);
    assert_ne!(json(&other)["result"], v["result"]);
    let text = String::from_utf8_lossy(&a.stdout);
    let line = text.lines().find(|l| l.contains("\"coverage\"")).unwrap();
    let number = line.split(": ").nth(1).unwrap().trim_end_matches(',');
    let mantissa = number.split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{line}");
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# maximal correlation\ncommand = maxcorr\ndist = bernoulli\nm = 1\nn = 4\ndegree = 3\nsweep = true\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let v = json(&freeprob(&["--config", cfg]));
    assert_eq!(v["pass"], true);
    assert!((v["result"]["rho_max"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(v["result"]["sweep"].as_array().unwrap().len(), 3);
    let over = json(&freeprob(&["--config", cfg, "maxcorr", "--degree", "2"]));
    assert_eq!(over["result"]["degree"], 2);
    std::fs::write(dir.path().join("bad.cfg"), "no equals sign\n").unwrap();
    assert_eq!(code(&freeprob(&["--config", dir.path().join("bad.cfg").to_str().unwrap()])), 64);
}

#[test]
fn output_file_and_formats() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.csv");
    let out = freeprob(&["cumulants", "--values", "0,1,0,2", "--format", "csv", "-o", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# freeprob-report/1"));
    assert!(text.contains("\nr,moment,cumulant\n1,0/1,0/1\n2,1/1,1/1\n3,0/1,0/1\n4,2/1,0/1\n"));
    let table = String::from_utf8(freeprob(&["moments", "--values", "0,1", "--format", "table"]).stdout).unwrap();
    assert!(table.starts_with("moments (") && table.contains("PASS"));
}

#[test]
fn projection_and_efron_stein() {
    let p = json(&freeprob(&["project", "--dist", "bernoulli", "--poly", "x1*x2*x1 + x2^2", "--subset", "1"]));
    assert_eq!(p["pass"], true);
    assert_eq!(p["result"]["projection"], serde_json::json!([{ "word": [], "coeff": "1/1" }]));
    let e = json(&freeprob(&["efron-stein", "--dist", "semicircular(1,2)", "--poly", "x1*x2 + x2*x1*x3"]));
    assert_eq!(e["pass"], true);
    assert_eq!(e["result"]["components"].as_array().unwrap().len(), 8);
    assert_eq!(e["result"]["parseval_defect"], "0/1");
}

#[test]
fn entropy_and_convolution() {
    let e = json(&freeprob(&["entropy", "--dist", "semicircular"]));
    assert!((e["result"]["chi"].as_f64().unwrap() - 1.4189385).abs() < 1e-4);
    let c = json(&freeprob(&["convolve", "--dist", "bernoulli", "--with", "bernoulli", "--order", "6"]));
    assert_eq!(c["result"]["moments"], serde_json::json!(["0/1", "2/1", "0/1", "6/1", "0/1", "20/1"]));
}

#[test]
fn density_of_a_gapped_law() {
    let out = freeprob(&["density", "--dist", "bernoulli", "--smooth", "1/2", "--cells", "400"]);
    assert_eq!(code(&out), 0);
    let rows = csv_body(&out);
    assert_eq!(rows[0], ["t", "density"]);
    let mid = rows[1..].iter().map(|r| (r[0].parse::<f64>().unwrap(), r[1].parse::<f64>().unwrap()));
    let (_, at_zero) = mid.min_by(|a, b| a.0.abs().total_cmp(&b.0.abs())).unwrap();
    assert!(at_zero < 1e-6, "{at_zero}");
}

#[test]
fn quick_verify_passes() {
    let out = freeprob(&["verify", "--quick", "--skip-rmt"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["result"]["passed"], v["result"]["total"]);
}
