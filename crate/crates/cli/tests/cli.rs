use std::path::Path;
use std::process::{Command, Output};

use thz_core::experiments::{read_results_csv, RESULTS_HEADER};

fn thz_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thz-sim")).args(args).output().expect("spawn thz-sim")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn nmse_run_writes_results_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nmse.csv");
    let o = thz_sim(&[
        "--profile",
        "desk",
        "--experiment",
        "nmse_vs_snr",
        "--snr",
        "0:10:10",
        "--trials",
        "2",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), RESULTS_HEADER.join(","));
    let table = read_results_csv(&out).unwrap();
    let snrs: Vec<f64> = table.series("hbg_sr", "nmse").iter().map(|r| r.snr_db).collect();
    assert_eq!(snrs, vec![0.0, 10.0]);
    assert!(table.rows.iter().all(|r| r.experiment == "nmse_vs_snr" && r.trials + r.failures == 2));
}

#[test]
fn same_seed_same_bytes_on_stdout() {
    let args = ["--profile", "desk", "--experiment", "se-vs-snr", "--snr", "5", "--trials", "2", "--seed", "3"];
    let a = thz_sim(&args);
    let b = thz_sim(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        "profile = \"desk\"\n[system]\nnum_nlos = 1\n[experiment]\nkind = \"adc_sweep\"\ntrials = 1\nestimators = [\"mmv_ls\"]\nsnr_grid = [0.0]\n",
    );
    let out = dir.path().join("adc.csv");
    let o = thz_sim(&["--config", &cfg, "--adc-bits", "1,inf", "--psf", "rect", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = read_results_csv(&out).unwrap();
    let mut methods: Vec<&str> = table.rows.iter().map(|r| r.method.as_str()).collect();
    methods.dedup();
    assert_eq!(methods, vec!["mmv_ls/b=1", "mmv_ls/b=inf"]);
}

#[test]
fn gain_profile_writes_sibling_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gain.csv");
    let o = thz_sim(&["--experiment", "gain_profile", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for method in ["ttd", "flat"] {
        let text = std::fs::read_to_string(dir.path().join(format!("gain_{method}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("angle_sine,subcarrier_index,gain"));
        // 201 sines by 128 subcarriers on the full-size profile
        assert_eq!(lines.count(), 201 * 128);
    }
    let table = read_results_csv(&out).unwrap();
    let ttd = table.rows.iter().find(|r| r.method == "ttd" && r.metric == "min_gain").unwrap();
    let flat = table.rows.iter().find(|r| r.method == "flat" && r.metric == "min_gain").unwrap();
    assert!(ttd.value > flat.value);
}

#[test]
fn errors_exit_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let bad_field = write(dir.path(), "bad.toml", "[system]\nn_bs = \"many\"\n");
    let bad_pad = write(dir.path(), "pad.toml", "[system]\nnum_subcarriers = 16\nnum_pilot_vectors = 16\n");
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["--experiment", "no_such_thing"], "no_such_thing"),
        (vec!["--snr", "10:0:20"], "SNR range"),
        (vec!["--snr", "a:b:c"], "bad SNR value"),
        (vec!["--trials", "0"], "experiment.trials"),
        (vec!["--adc-bits", "1,2"], "--adc-bits"),
        (vec!["--adc-bits", "0"], "ADC bits >= 1"),
        (vec!["--psf", "gauss"], "gauss"),
        (vec!["--profile", "huge"], "huge"),
        (vec!["--config", "/nonexistent/run.toml"], "cannot read config"),
        (vec!["--config", &bad_field], "system.n_bs"),
        (vec!["--config", &bad_pad], "K = P + D - 1"),
        (vec!["--profile", "desk", "--trials", "1", "--snr", "0", "--out", "/nonexistent/dir/r.csv"], "cannot write"),
    ];
    for (args, needle) in cases {
        let o = thz_sim(&args);
        assert!(!o.status.success(), "{args:?} should fail");
        let msg = stderr(&o);
        assert!(msg.contains(needle), "{args:?}: `{needle}` not in `{msg}`");
    }
}
