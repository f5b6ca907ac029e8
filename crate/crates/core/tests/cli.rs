use std::process::{Command, Output};

fn sphereheat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphereheat"))
        .args(args)
        .env("SPHEREHEAT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn moment_prints_limit_and_routes() {
    let o = sphereheat(&["moment", "--N", "16", "--t", "1", "--monomial", "0,2", "--routes", "matexp,series,eigen"]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("limit\t"));
    let exact = 1.0 - (-1.0f64).exp();
    for line in &lines[1..] {
        let v: f64 = line.split('\t').nth(1).unwrap().parse().unwrap();
        assert!((v - exact).abs() <= 1e-12, "{line}");
    }
    assert_eq!(lines.len(), 4);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(sphereheat(&["moment", "--N", "16", "--monomial", "2,x"]).status.code(), Some(2));
    assert_eq!(sphereheat(&["moment", "--N", "1", "--monomial", "2"]).status.code(), Some(2));
    assert_eq!(sphereheat(&["verify", "nonsense"]).status.code(), Some(2));
    assert_eq!(sphereheat(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn failed_route_exits_with_one() {
    // the eigen route does not cover mixed x1·x2 terms
    let o = sphereheat(&["moment", "--N", "8", "--monomial", "1,1", "--routes", "eigen"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("failed"));
}

#[test]
fn study_csv_is_reproducible() {
    let args = ["study", "--N", "16,32,64", "--t", "0.5,1", "--monomial", "2,0;0,4", "--routes", "matexp,eigen"];
    let a = sphereheat(&args);
    let b = sphereheat(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("monomial,N,t,route,value,limit,abs_error,stderr,fitted_rate"));
    assert_eq!(lines.count(), 2 * 2 * 3 * 2);
}

#[test]
fn study_mc_rows_are_byte_identical_across_threads() {
    let args = [
        "study",
        "--N",
        "8",
        "--t",
        "0.5",
        "--monomial",
        "2,0",
        "--routes",
        "mc",
        "--paths",
        "3000",
        "--step",
        "0.05",
        "--seed",
        "7",
    ];
    let a = sphereheat(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_sphereheat")).args(args).env("SPHEREHEAT_THREADS", "1").output().unwrap();
    assert!(a.status.success(), "{a:?}");
    assert_eq!(a.stdout, b.stdout);
    let row = stdout(&a).lines().nth(1).unwrap().to_string();
    assert!(!row.ends_with(",,"), "stderr column filled: {row}");
}

#[test]
fn study_reads_config_file_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.cfg");
    let out = dir.path().join("out.csv");
    std::fs::write(
        &cfg,
        format!("# sweep\nN = 16,32\nt = 2\nmonomial = 2,2\nroutes = matexp\nout = {}\n", out.display()),
    )
    .unwrap();
    let o = sphereheat(&["study", "--config", cfg.to_str().unwrap(), "--t", "0.5"]);
    assert!(o.status.success(), "{o:?}");
    assert!(o.stdout.is_empty());
    let csv = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.contains(",5.0000000000000000e-1,")), "{csv}");

    std::fs::write(&cfg, "N = 16\nmonomial = 2,0\ncolour = blue\n").unwrap();
    assert_eq!(sphereheat(&["study", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn study_marks_failed_rows() {
    let o = sphereheat(&["study", "--N", "8,16", "--t", "1", "--monomial", "1,1", "--routes", "eigen"]);
    // failures are recorded per row; the sweep itself completes
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert!(out.lines().skip(1).all(|l| l.contains(",failed,")), "{out}");
}

#[test]
fn verify_operators_suite_passes() {
    let o = sphereheat(&["verify", "operators"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn pde_subcommand_runs() {
    let o = sphereheat(&["pde", "--t", "1", "--variant", "other"]);
    assert!(o.status.success(), "{}", stdout(&o));
}
