//! End-to-end runs of the `sawomit` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn sawomit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sawomit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run sawomit")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let cases: &[(&[&str], &str)] = &[
        (&["derive", "--set", "drive.P_pu_W=-1e-8"], "drive.P_pu"),
        (&["derive", "--set", "cavity.kappa_a=3.5e9"], "_GHz"),
        (&["derive", "--set", "cavity.Q=1e5"], "unknown key"),
        (&["derive", "--preset", "fig7"], "unknown preset"),
        (&["spectrum", "--set", "run.delta_points=1"], "delta_points"),
        (&["spectrum", "--set", "nonsense"], "section.key=value"),
    ];
    for (args, needle) in cases {
        let o = sawomit(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{args:?}: {}", stderr(&o));
    }
    let o = sawomit(&["spectrum", "--config", "/nonexistent/run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = sawomit(&["spectrum", "--branch", "sideways"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_with_laboratory_units() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        r#"
[material]
n_spacer = 3.57
lambda_nm = 925
rho_upper_g_cm3 = 4.47
d_upper_um = 1.42

[cavity]
omega_a_THz = 324
kappa_a_GHz = 3.5
L_nm = 259.1

[mechanics]
omega_b_GHz = 1.05
gamma_b_kHz = 10.5
m_b_fg = 0.33
l_idt_um = 400
lambda_s_um = 2.9

[coupling]
g_om_MHz = 15.4

[drive]
P_pu_nW = 15
P_rf_mW = 5
detuning = "lock"

[run]
delta_points = 11
"#,
    )
    .unwrap();
    let out = dir.path().join("a");
    let o = sawomit(&["steady", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("steady.json")).unwrap()).unwrap();
    let g = report["state"]["steady"]["total_coupling"].as_f64().unwrap();
    assert!((g / 2.957896626e8 - 1.0).abs() < 1e-6, "{g}");
}

#[test]
fn spectrum_with_and_without_saw() {
    let dir = TempDir::new().unwrap();
    let o = sawomit(&["spectrum"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let (header, on) = read_csv(&dir.path().join("spectrum.csv"));
    assert_eq!(
        header,
        ["delta_rad_s", "delta_over_wb_minus_1", "re_epsT", "im_epsT", "T_pr", "phi_T_rad", "tau_T_s", "branch_id", "flag"]
    );
    assert_eq!(on.len(), 2001);
    let (_, off) = read_csv(&dir.path().join("spectrum_nosaw.csv"));
    assert_eq!(off.len(), 2001);

    let (x, re, t) = (column(&header, "delta_over_wb_minus_1"), column(&header, "re_epsT"), column(&header, "T_pr"));
    let f = |s: &str| s.parse::<f64>().unwrap();
    for row in &off {
        assert!((f(&row[t]) - 1.0).abs() < 1e-12, "{row:?}");
    }
    // Without SAW Re ε_T is the cavity Lorentzian, 2 at its center.
    let center = on.iter().position(|r| f(&r[x]) == 0.0).unwrap();
    assert!((f(&off[center][re]) - 2.0).abs() < 1e-10);
    assert!(f(&on[center][re]) <= 0.01);
    let min = on.iter().map(|r| f(&r[re])).fold(f64::INFINITY, f64::min);
    assert_eq!(min, f(&on[center][re]));
    assert!(on.iter().all(|r| r[column(&header, "flag")] == "0"));

    let o = sawomit(&["spectrum", "--no-saw"], &dir.path().join("off"));
    assert_eq!(o.status.code(), Some(0));
    assert!(!dir.path().join("off/spectrum_nosaw.csv").exists());
    assert_eq!(
        fs::read(dir.path().join("off/spectrum.csv")).unwrap(),
        fs::read(dir.path().join("spectrum_nosaw.csv")).unwrap()
    );
}

#[test]
fn effective_config_round_trips_to_identical_csv() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first");
    let o = sawomit(&["sweep", "--set", "run.sweep_axis=\"P_rf\"", "--set", "run.delta_points=101", "--set", "drive.P_pu_nW=20"], &first);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let second = dir.path().join("second");
    let cfg = first.join("effective_config.toml");
    let o = sawomit(&["sweep", "--config", cfg.to_str().unwrap()], &second);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read(first.join("sweep.csv")).unwrap(), fs::read(second.join("sweep.csv")).unwrap());
    // The reloaded dump is the same apart from comments and the output path.
    let body = |dir: &Path| -> Vec<String> {
        fs::read_to_string(dir.join("effective_config.toml"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("out = "))
            .map(String::from)
            .collect()
    };
    assert_eq!(body(&first), body(&second));
}

#[test]
fn output_is_independent_of_thread_count() {
    let dir = TempDir::new().unwrap();
    let run = |threads: &str, sub: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_sawomit"))
            .args(["sweep", "--set", "run.delta_points=301", "--out"])
            .arg(dir.path().join(sub))
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read(dir.path().join(sub).join("sweep.csv")).unwrap()
    };
    let a = run("1", "one");
    let b = run("4", "four");
    let c = run("4", "again");
    assert_eq!(a, b);
    assert_eq!(b, c);
}

#[test]
fn sweep_and_delay_row_counts() {
    let dir = TempDir::new().unwrap();
    let o = sawomit(&["sweep", "--set", "run.delta_points=51", "--set", "run.sweep_points=7"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(header[0], "P_pu_W");
    assert_eq!(rows.len(), 7 * 51);
    let powers: Vec<&str> = rows.iter().step_by(51).map(|r| r[0].as_str()).collect();
    assert_eq!(powers.first(), Some(&"1e-8"));
    assert_eq!(powers.last(), Some(&"3e-8"));

    let o = sawomit(
        &["delay", "--set", "run.delay_points=6", "--set", "run.delay_spectrum_points=201"],
        &dir.path().join("d"),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = read_csv(&dir.path().join("d/delay.csv"));
    assert_eq!(rows.len(), 6);
    let p = column(&header, "P_pu_W");
    let p: Vec<f64> = rows.iter().map(|r| r[p].parse().unwrap()).collect();
    assert!(p.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn derive_reports_provenance_and_regime() {
    let dir = TempDir::new().unwrap();
    let o = sawomit(&["derive"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("INCONSISTENT"), "{text}");
    let r: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("derive.json")).unwrap()).unwrap();
    assert_eq!(r["coupling"]["used_provenance"], "user-supplied");
    assert!((r["coupling"]["quoted_hz"].as_f64().unwrap() - 1.54e7).abs() < 1e-3);
    let ratio = r["coupling"]["ratio_used_over_formula"].as_f64().unwrap();
    assert!((ratio - 2.502).abs() < 1e-3, "{ratio}");
    assert!((r["saw_velocity_m_s"].as_f64().unwrap() - 3045.0).abs() < 1e-9);
    for check in ["sideband", "omit", "threshold"] {
        assert_eq!(r["regime"][check]["status"], "pass", "{check}");
    }
    assert!(r["rf_window"]["p_rf_min_w"].as_f64().unwrap() < r["rf_window"]["p_rf_max_w"].as_f64().unwrap());
}

#[test]
fn runtime_failures_exit_1() {
    let dir = TempDir::new().unwrap();
    // The fig3 preset has a single steady-state branch.
    let o = sawomit(&["steady", "--branch", "middle"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("middle"));
}

#[test]
fn oracle_reports_closed_form_error() {
    let dir = TempDir::new().unwrap();
    let o = sawomit(&["oracle", "--set", "run.oracle_offsets=[2.0]", "--set", "run.oracle_ratio_small=0"], dir.path());
    let (header, rows) = read_csv(&dir.path().join("oracle.csv"));
    assert_eq!(rows.len(), 1);
    let full: f64 = rows[0][column(&header, "err_full_linear")].parse().unwrap();
    let closed: f64 = rows[0][column(&header, "err_closed_form")].parse().unwrap();
    assert!(full < 1e-5, "{full}");
    // The rotating-wave closed form misses the counter-rotating sidebands.
    assert!(closed > 1e-3);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn plot_matches_golden() {
    let dir = TempDir::new().unwrap();
    let o = sawomit(&["spectrum", "--plot", "--set", "run.delta_points=201"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["spectrum.svg", "spectrum.csv"] {
        let got = fs::read(dir.path().join(name)).unwrap();
        let want = fs::read(golden(&format!("fig3_201_{name}"))).unwrap();
        assert!(got == want, "{name} differs from golden file");
    }
}

#[test]
fn empty_plot_is_rejected() {
    let fig = sawomit_cli::plot::Figure {
        title: "x".into(),
        x_label: "x".into(),
        panels: vec![],
    };
    assert!(sawomit_cli::plot::render(&fig).is_err());
}
