use std::process::{Command, Output};

fn crossfield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crossfield")).args(args).output().unwrap()
}

const SMALL: [&str; 6] = ["--n-antennas", "64", "--trials", "2", "--seed", "9"];

fn small(figure: &str, extra: &[&str]) -> Output {
    let mut args = vec![figure];
    args.extend(SMALL);
    args.extend(extra);
    crossfield(&args)
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn every_figure_writes_a_commented_csv() {
    for (figure, columns) in [
        ("fig-capacity", "subarray_spacing_wl,tx_power_dbm,distance_m,capacity_swm,capacity_pwm,gap_percent"),
        ("fig-approx-error", "subarray_spacing_wl,distance_m,error_db_pwm,error_db_hspm,error_db_swm"),
        ("fig-estimation", "subarray_spacing_wl,distance_m,snr_db,nmse_db_dft,nmse_db_sse,nmse_db_dse"),
        ("fig-spectral-efficiency", "distance_m,tx_power_dbm,se_compact,se_wsms_64wl,se_wsms_128wl,se_wsms_256wl"),
    ] {
        let out = small(figure, &[]);
        assert!(out.status.success(), "{figure}: {}", String::from_utf8_lossy(&out.stderr));
        let csv = String::from_utf8(out.stdout).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), format!("# crossfield {}", env!("CARGO_PKG_VERSION")));
        assert_eq!(lines.next().unwrap(), format!("# figure = \"{figure}\""));
        assert!(csv.contains("# n_antennas = 64\n") && csv.contains("# seed = 9\n"));
        let rows = data_rows(&csv);
        assert!(rows[0].starts_with(columns), "{figure}: {}", rows[0]);
        let width = rows[0].split(',').count();
        assert!(rows.len() > 1);
        for row in &rows[1..] {
            let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(cells.len(), width);
            assert!(cells.iter().all(|c| c.is_finite()), "{figure}: {row}");
        }
    }
}

#[test]
fn header_echo_reproduces_the_run() {
    let first = small("fig-approx-error", &["--distance-m", "2,7.5"]);
    assert!(first.status.success());
    let csv = String::from_utf8(first.stdout).unwrap();
    let toml: String = csv
        .lines()
        .skip(2)
        .take_while(|l| l.starts_with("# "))
        .map(|l| format!("{}\n", &l[2..]))
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("echo.toml");
    std::fs::write(&path, toml).unwrap();
    let again = crossfield(&["fig-approx-error", "--config", path.to_str().unwrap()]);
    assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
    assert_eq!(String::from_utf8(again.stdout).unwrap(), csv);
}

#[test]
fn out_flag_writes_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cap.csv");
    let out = small("fig-capacity", &["--distance-m", "10,20", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    let piped = String::from_utf8(small("fig-capacity", &["--distance-m", "10,20"]).stdout).unwrap();
    assert!(written.contains("# output_path = "));
    assert_eq!(data_rows(&written), data_rows(&piped));
}

#[test]
fn thread_count_does_not_change_output() {
    let one = small("fig-estimation", &["--snr-db", "0,20", "--threads", "1"]);
    let two = small("fig-estimation", &["--snr-db", "0,20", "--threads", "2"]);
    let again = small("fig-estimation", &["--snr-db", "0,20", "--threads", "2"]);
    assert!(one.status.success());
    assert_eq!(one.stdout, two.stdout);
    assert_eq!(two.stdout, again.stdout);
}

#[test]
fn config_errors_exit_2() {
    let cases: [&[&str]; 6] = [
        &["fig-capacity", "--n-antennas", "1000"],
        &["fig-capacity", "--trials", "many"],
        &["fig-capacity", "--distance-m", "20,10"],
        &["fig-capacity", "--n-rf", "2"],
        &["fig-capacity", "--threads", "0"],
        &["fig-capacity", "--config", "/nonexistent/crossfield.toml"],
    ];
    for args in cases {
        let out = crossfield(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("config error"), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "antennas = 64\n").unwrap();
    let out = crossfield(&["fig-estimation", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`antennas`"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(crossfield(&["fig-nothing"]).status.code(), Some(2));
    assert_eq!(crossfield(&["fig-capacity", "--bogus"]).status.code(), Some(2));
    assert_eq!(crossfield(&[]).status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_3() {
    // -4000 dBm underflows to zero watts
    let out = small("fig-capacity", &["--distance-m", "10", "--tx-power-dbm=-4000"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
}

#[test]
fn unwritable_output_exits_1() {
    let out = small("fig-capacity", &["--distance-m", "10", "--out", "/nonexistent/dir/out.csv"]);
    assert_eq!(out.status.code(), Some(1));
}
