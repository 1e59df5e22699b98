use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dimerlab"))
        .args(args)
        .env_remove("DIMERLAB_SEED")
        .env_remove("DIMERLAB_FORMAT")
        .env_remove("DIMERLAB_OUT")
        .env_remove("DIMERLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn mean_recurrence_value() {
    let out = run(&["mean", "--u", "0.1", "--v", "0.1", "--w", "0.5", "--n", "3", "--method", "recurrence"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!((v["value"].as_f64().unwrap() - 0.8875).abs() < 1e-12);
    assert_eq!(v["N"], 3);
    assert_eq!(v["method"], "recurrence");
    for key in ["u", "v", "w"] {
        assert!(v[key].is_number());
    }
}

#[test]
fn regions_near_critical_point() {
    let out = run(&["regions", "--u", "0.2222222", "--v", "0.2222222", "--w", "0.6666667"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["in_C"], false);
    assert!(v["c_reason"].is_string());
}

#[test]
fn closed_form_outside_region_b() {
    let out = run(&["mean", "--u", "0.1", "--v", "0.1", "--w", "1.9", "--method", "closed-form"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error: outside-region-b: outside region B"));
    let v = json(&out);
    assert_eq!(v["error"]["code"], "outside-region-b");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["bogus"],
        vec!["mean", "--u", "abc", "--v", "0.1", "--w", "0.5"],
        vec!["moment", "--u", "0.1", "--v", "0.1", "--w", "0.5", "--format", "csv"],
        vec!["mean", "--u", "0.1", "--v", "0.1", "--w", "0.5", "--method", "nope"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(stderr(&out).starts_with("error: usage: "), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn domain_error_for_illegal_sequence() {
    let out = run(&["hdc", "--sequence", "RBX"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error: illegal-character: "));
}

#[test]
fn clt_output_is_reproducible_and_thread_independent() {
    let base = ["clt", "--u", "0.1", "--v", "0.1", "--w", "0.5", "--n", "300", "--samples", "400"];
    let a = run(&base);
    let b = run(&base);
    let mut threaded = base.to_vec();
    threaded.extend(["--threads", "3"]);
    let c = run(&threaded);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let v = json(&a);
    assert_eq!(v["seed"], 42);
    assert!(v["moments"]["beta2_moment"].as_f64().unwrap() > 0.0);
    for key in ["alpha_hat", "alpha_se", "beta2_hat", "beta2_se", "ks_statistic", "zero_hits", "negative_fraction"] {
        assert!(!v[key].is_null(), "{key}");
    }

    let mut reseeded = base.to_vec();
    reseeded.extend(["--seed", "7"]);
    let d = run(&reseeded);
    assert_ne!(a.stdout, d.stdout);
}

#[test]
fn seed_from_environment() {
    let args = ["clt", "--u", "0.1", "--v", "0.1", "--w", "0.5", "--n", "50", "--samples", "200"];
    let flagged = run(&[&args[..], &["--seed", "9"]].concat());
    let env = Command::new(env!("CARGO_BIN_EXE_dimerlab"))
        .args(args)
        .env("DIMERLAB_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(flagged.stdout, env.stdout);
}

#[test]
fn csv_emitters_have_headers() {
    let cases: [(&[&str], &str); 7] = [
        (&["mean", "--u", "0.1", "--v", "0.1", "--w", "0.5", "--compare"], "N,brute,double_sum,matrix_power,recurrence,closed_one,closed_two"),
        (&["regions", "--grid", "8"], "u,w,in_A,in_B,in_C"),
        (&["clt", "--u", "0.1", "--v", "0.1", "--w", "0.5", "--n", "100", "--samples", "200", "--histogram"], "bin_left,bin_right,count"),
        (&["continuum", "appendix", "--fig3"], "w,u,value"),
        (&["continuum", "zbar", "--grid", "6"], "u,w,exponent,value,convergent"),
        (&["hdc", "--sequence", "RBBR", "--format", "csv"], "s_b,s_r,m,count"),
        (&["inverse-mean", "--u", "0.1", "--v", "0.1", "--w", "0.5", "--samples", "1000", "--trend"], "N,exhaustive,"),
    ];
    for (args, header) in cases {
        let out = run(args);
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.lines().next().unwrap().starts_with(header), "{args:?}");
        assert!(text.lines().count() > 1);
    }
}

#[test]
fn mean_compare_covers_sixteen_lengths() {
    let out = run(&["mean", "--u", "0.1", "--v", "0.1", "--w", "0.5", "--compare"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 17);
}

#[test]
fn floats_carry_seventeen_digits() {
    let out = run(&["moment", "--u", "0.1", "--v", "0.1", "--w", "0.5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let nu1 = text.split("\"nu1\":").nth(1).unwrap().split(',').next().unwrap();
    let mantissa = nu1.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{nu1}");
}

#[test]
fn continuum_subcommands() {
    let g = json(&run(&["continuum", "gamma-prime"]));
    assert!((g["gamma_prime"].as_f64().unwrap() - 3f64.ln()).abs() < 1e-12);

    let z = json(&run(&["continuum", "zbar", "--u", "0.1", "--v", "0.1", "--w", "0.5"]));
    assert_eq!(z["convergent"], true);

    let crit = ["continuum", "zbar", "--u", "0.2222222222222222", "--v", "0.2222222222222222", "--w", "0.6666666666666666"];
    let z = json(&run(&crit));
    assert_eq!(z["convergent"], false);
    assert!(z["value"].is_null());

    let s = json(&run(&["continuum", "scale", "--x", "1", "--y", "-0.5", "--lambda", "1", "--a", "0.1"]));
    assert_eq!(s["region"]["in_A"], true);

    let v = json(&run(&["continuum", "volume", "--u", "0.1", "--v", "0.1", "--w", "0.5"]));
    assert!(v["volume"].as_f64().unwrap().is_finite());

    let a = json(&run(&["continuum", "appendix", "--n", "10"]));
    assert_eq!(a["growth_table"].as_array().unwrap().len(), 4);
    let out = run(&["continuum", "appendix", "--n", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn spectra_and_zxi() {
    let s = json(&run(&["spectra", "--u", "0.2", "--v", "0.2", "--w", "0.5"]));
    let reports = s.as_array().unwrap();
    assert_eq!(reports.len(), 4);
    assert_eq!(reports[2]["word"], "BR");
    assert_eq!(reports[2]["eigenvalues"].as_array().unwrap().len(), 3);

    let z = json(&run(&["zxi", "--sequence", "RBBR", "--u", "0.1", "--v", "0.2", "--w", "0.3", "--exact"]));
    let value = z["value"].as_f64().unwrap();
    assert!((value - z["transfer_value"].as_f64().unwrap()).abs() < 1e-12);
    assert!((value - z["exact"]["value"].as_f64().unwrap()).abs() < 1e-15);
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(json(&out)["passed"], true);
    let err = stderr(&out);
    assert!(err.contains("PASS figure-one"));
    assert!(err.contains("PASS critical-locus"));
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("dimerlab-out-{}.json", std::process::id()));
    let out = run(&["moment", "--u", "0.1", "--v", "0.1", "--w", "0.5", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!(v["nu1"].is_number());
}
