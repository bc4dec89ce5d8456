use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_baker-thermo"));
    c.env_remove("BAKER_THERMO_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn column(csv: &str, idx: usize) -> Vec<f64> {
    csv.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('t'))
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn t_at_most_one_exits_3() {
    let o = run(&["pressure", "--ell", "2", "--c", "2", "--t", "0.9", "--depth", "3"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn huge_ifs_is_refused() {
    let o = run(&["ifs", "--ell", "2", "--c", "2", "--R", "12"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("branches"), "{}", stderr(&o));
}

#[test]
fn dimension_refuses_ell_one() {
    let o = run(&["dimension", "--ell", "1", "--c", "-0.5"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn flag_errors_exit_2_with_usage() {
    let o = run(&["pressure", "--ell", "2", "--c", "2", "--t", "1.5", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_exits_1() {
    let o = run(&[
        "render", "--ell", "2", "--c", "2", "--size", "8x6", "--out", "/nonexistent-dir/x.ppm",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn csv_artifacts_start_with_header() {
    let out = scratch("p.csv");
    let o = run(&[
        "pressure", "--ell", "2", "--c", "2", "--t", "1.5", "--depth", "4", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("# baker-thermo {}", env!("CARGO_PKG_VERSION")));
    assert_eq!(lines.next().unwrap(), "# command = pressure");
    assert!(text.contains("# depth = 4"));
    assert!(text.contains("t,pressure,method,depth_or_iters,tol,residual"));
    assert!(column(&text, 1)[0].is_finite());
}

#[test]
fn render_writes_header_and_warns_outside_regime() {
    let out = scratch("r.ppm");
    let labels = scratch("r.csv");
    let o = run(&[
        "render", "--ell", "1", "--c", "-0.5", "--size", "16x12", "--max-iter", "50", "--out",
        out.to_str().unwrap(), "--labels", labels.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    let bytes = std::fs::read(&out).unwrap();
    let head = String::from_utf8_lossy(&bytes[..80]);
    assert!(head.starts_with("P6\n# baker-thermo "), "{head}");
    let csv = std::fs::read_to_string(&labels).unwrap();
    assert!(csv.starts_with("# baker-thermo "));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 16 * 12);
}

#[test]
fn png_format_from_extension() {
    let out = scratch("r.png");
    let o = run(&["render", "--ell", "2", "--c", "2", "--size", "8x6", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(&std::fs::read(&out).unwrap()[1..4], b"PNG");
}

#[test]
fn flags_override_config_file() {
    let cfg = scratch("run.cfg");
    std::fs::write(&cfg, "# pressure run\nell = 2\nc = 2\nt = 1.4\ndepth = 3\n").unwrap();
    let o = run(&["pressure", "--config", cfg.to_str().unwrap(), "--t", "1.6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(column(&stdout(&o), 0), vec![1.6]);
    let o = run(&["pressure", "--config", cfg.to_str().unwrap()]);
    assert_eq!(column(&stdout(&o), 0), vec![1.4]);
}

#[test]
fn worker_count_never_changes_output() {
    let args = ["pressure-curve", "--ell", "2", "--c", "2", "--steps", "4", "--depth", "5"];
    let one = stdout(&run(&[&args[..], &["--workers", "1"]].concat()));
    let three = stdout(&run(&[&args[..], &["--workers", "3"]].concat()));
    let env = stdout(&bin().args(args).env("BAKER_THERMO_WORKERS", "2").output().unwrap());
    assert_eq!(one, three);
    assert_eq!(one, env);
    let p = column(&one, 1);
    assert!(p.windows(2).all(|w| w[1] < w[0]), "{p:?}");
}

#[test]
fn zero_workers_is_invalid() {
    let o = run(&["pressure", "--ell", "2", "--c", "2", "--t", "1.5", "--depth", "2", "--workers", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dimension_reports_containment() {
    let o = run(&["dimension", "--ell", "2", "--c", "2", "--depth", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.starts_with("t* = 1."), "{s}");
    assert!(s.contains("in_open_interval_1_2 = true"), "{s}");
}

#[test]
fn measure_prints_positive_chi() {
    let o = run(&["measure", "--ell", "2", "--c", "2", "--t", "1.5", "--depth", "4", "--lyapunov"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    let chi: f64 = s
        .lines()
        .find_map(|l| l.trim().strip_prefix("chi = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(chi > 0.0 && chi.is_finite(), "{s}");
}
