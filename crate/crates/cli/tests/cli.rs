mod schema_check;

use std::path::Path;
use std::process::{Command, Output};

use drawdown_cds::RunConfig;
use serde_json::Value;

fn ddcds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddcds"))
        .args(args)
        .env_remove("DDCDS_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", stderr(out));
    serde_json::from_str(&stdout(out)).expect("valid JSON on stdout")
}

#[test]
fn price_reports_boundary_at_reference_point() {
    let out = ddcds(&["price", "--y", "1.0"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("h*           1.1476"), "{text}");

    let report = json(&ddcds(&["price", "--y", "1.0", "--json"]));
    schema_check::assert_valid("price.schema.json", &report);
    assert!((report["h_star"].as_f64().unwrap() - 1.1476).abs() < 1e-3);
    let total = report["total_value"].as_f64().unwrap();
    let parts = report["cds_value"].as_f64().unwrap() + report["switch_value"].as_f64().unwrap();
    assert!((total - parts).abs() < 1e-12);
}

#[test]
fn price_json_round_trips() {
    let out = ddcds(&["price", "--y", "0.3", "--json", "--set", "model.sigma=0.2"]);
    let first = json(&out);
    let again: Value = serde_json::from_str(&serde_json::to_string(&first).unwrap()).unwrap();
    assert_eq!(first, again);
}

#[test]
fn par_spread_is_null_at_immediate_default() {
    let b = 5f64.ln().to_string();
    let report = json(&ddcds(&["price", "--y", &b, "--json", "--set", "model.sigma=0.2"]));
    schema_check::assert_valid("price.schema.json", &report);
    assert!(report["par_spread"].is_null());
}

#[test]
fn price_outside_domain_is_usage_error() {
    let out = ddcds(&["price", "--y", "2.0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("y = 2"), "{}", stderr(&out));
    let out = ddcds(&["price", "--y", "-0.1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn boundary_reproduces_both_levels() {
    let report = json(&ddcds(&["boundary", "--json"]));
    schema_check::assert_valid("boundary.schema.json", &report);
    assert!((report["h_star"].as_f64().unwrap() - 1.1476).abs() < 1e-3);

    let report = json(&ddcds(&["boundary", "--json", "--set", "model.sigma=0.2"]));
    schema_check::assert_valid("boundary.schema.json", &report);
    assert!((report["h_star"].as_f64().unwrap() - 0.5590).abs() < 1e-3);
    assert!(report["pasting_gap"].as_f64().unwrap() <= 1e-8);

    let text = stdout(&ddcds(&["boundary"]));
    assert!(text.contains("h*              1.1476"), "{text}");
    assert!(text.contains("pasting gap"), "{text}");
}

#[test]
fn gamma_outside_window_is_reported() {
    let out = ddcds(&["boundary", "--set", "switch.gamma=-10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("outside the admissible window"), "{}", stderr(&out));
}

#[test]
fn analytic_verification_passes() {
    let out = ddcds(&["verify", "--analytic", "--json"]);
    let report = json(&out);
    schema_check::assert_valid("verify.schema.json", &report);
    assert_eq!(report["passed"], Value::Bool(true));
    assert!(report["mc"].is_null());
    let checks = report["analytic"].as_array().unwrap();
    let flat = checks.iter().find(|c| c["name"] == "generator_flatness").unwrap();
    assert!(flat["detail"].as_str().unwrap().contains("-0.1"));
    assert!(flat["value"].as_f64().unwrap() <= 1e-3);

    let out = ddcds(&["verify", "--set", "model.sigma=0.2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn failing_check_exits_one() {
    // a tolerance no numerical method can meet
    let out = ddcds(&["verify", "--set", "numerics.checks.pasting_gap=1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("smooth_pasting"), "{}", stderr(&out));
}

#[test]
fn invalid_config_is_rejected() {
    let out = ddcds(&["verify", "--set", "model.sigma=-0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sigma must be >= 0"), "{}", stderr(&out));

    let out = ddcds(&["verify", "--set", "model.volatility=0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown setting"), "{}", stderr(&out));

    let out = ddcds(&["verify", "--mc", "--analytic"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, r#"{"model": {"sigma": 0.2}}"#).unwrap();
    let p = path.to_str().unwrap();

    let report = json(&ddcds(&["--config", p, "boundary", "--json"]));
    assert!((report["h_star"].as_f64().unwrap() - 0.5590).abs() < 1e-3);

    let out = Command::new(env!("CARGO_BIN_EXE_ddcds"))
        .args(["boundary", "--json"])
        .env("DDCDS_CONFIG", p)
        .output()
        .unwrap();
    assert!((json(&out)["h_star"].as_f64().unwrap() - 0.5590).abs() < 1e-3);

    std::fs::write(&path, r#"{"model": {"sigma": "high"}}"#).unwrap();
    let out = ddcds(&["--config", p, "boundary"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn default_config_matches_schema() {
    let value = serde_json::to_value(RunConfig::default()).unwrap();
    schema_check::assert_valid("config.schema.json", &value);
}

#[test]
fn monte_carlo_verification_agrees() {
    let out = ddcds(&["verify", "--mc", "--json", "--set", "numerics.mc.n_paths=100000"]);
    let report = json(&out);
    schema_check::assert_valid("verify.schema.json", &report);
    let mc = &report["mc"];
    for check in mc["oracle"].as_array().unwrap() {
        let z = check["z_score"].as_f64().unwrap();
        assert!(z.abs() < 3.0, "{check}");
    }
    assert!(mc["martingale"]["flagged"].as_array().unwrap().is_empty());
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn column(text: &str, sigma: f64, name: &str) -> Vec<f64> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let idx = headers.iter().position(|h| h == name).unwrap();
    rdr.records()
        .map(|r| r.unwrap())
        .filter(|r| r[0].parse::<f64>().unwrap() == sigma)
        .map(|r| r[idx].parse().unwrap())
        .collect()
}

#[test]
fn figures_have_expected_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ddcds(&["figures", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));

    let headers = [
        ("fig1_scale.csv", "sigma,x,w_esscher,ratio_w"),
        ("fig2_roots.csv", "sigma,b,f_r,h,f_h"),
        ("fig3_value.csv", "sigma,y,g,j_minus,j_plus,v"),
        ("fig4_generator.csv", "sigma,y,generator_g"),
    ];
    for (name, header) in headers {
        let text = read(dir.path(), name);
        assert!(text.starts_with(&format!("{header}\n")), "{name}");
        assert!(!text.contains('\r'), "{name} has CR line endings");
    }

    let fig2 = read(dir.path(), "fig2_roots.csv");
    let fig3 = read(dir.path(), "fig3_value.csv");
    let fig4 = read(dir.path(), "fig4_generator.csv");
    for (sigma, h_star) in [(0.0, 1.1476), (0.2, 0.5590)] {
        for g in column(&fig4, sigma, "generator_g") {
            assert!((g + 0.1).abs() <= 1e-3, "sigma={sigma}: {g}");
        }

        let h = column(&fig2, sigma, "h");
        let f = column(&fig2, sigma, "f_h");
        let crossings: Vec<usize> = (1..f.len()).filter(|&i| f[i - 1] > 0.0 && f[i] <= 0.0).collect();
        assert_eq!(crossings.len(), 1, "sigma={sigma}");
        let i = crossings[0];
        assert!(h[i - 1] <= h_star + 1e-3 && h_star - 1e-3 <= h[i], "sigma={sigma}");
        let f_r = column(&fig2, sigma, "f_r");
        assert_eq!(f_r[0], 0.0);
        assert!(f_r.windows(2).all(|w| w[1] < w[0]));

        let g = column(&fig3, sigma, "g");
        let jm = column(&fig3, sigma, "j_minus");
        let jp = column(&fig3, sigma, "j_plus");
        let v = column(&fig3, sigma, "v");
        // the value dominates the payoff and both perturbed threshold rules
        for i in 0..g.len() {
            assert!(g[i] <= v[i] + 1e-12, "sigma={sigma} row {i}");
            assert!(jm[i] <= v[i] + 1e-12 && jp[i] <= v[i] + 1e-12, "sigma={sigma} row {i}");
        }
        // positive on [0, b); W(0) = 0 makes it vanish at b when sigma > 0
        assert!(v[..v.len() - 1].iter().all(|&x| x > 0.0));
        assert!(v[v.len() - 1] >= 0.0);
        assert!(v.windows(2).all(|w| w[1] < w[0]), "sigma={sigma}: value not decreasing");
        assert!(jm.iter().zip(&v).any(|(j, v)| v - j > 1e-6));
        assert!(jp.iter().zip(&v).any(|(j, v)| v - j > 1e-6));
    }

    let again = tempfile::tempdir().unwrap();
    ddcds(&["figures", "--out", again.path().to_str().unwrap()]);
    for (name, _) in headers {
        assert_eq!(read(dir.path(), name), read(again.path(), name), "{name} not deterministic");
    }
}
