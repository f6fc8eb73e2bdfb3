use std::{ fs, path::Path, process::{ Command, Output } };

const BIN: &str = env!("CARGO_BIN_EXE_photon-filters");

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn every_shipped_config_runs() {
    let tmp = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let kind = text.lines().find_map(|l| l.strip_prefix("kind = ")).unwrap().trim_matches('"');
        let out_dir = tmp.path().join(path.file_stem().unwrap());
        let out = run(&[kind, path.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--seedless"]);
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
        assert!(out_dir.join("manifest.csv").is_file());
        assert!(out_dir.join("run.json").is_file());
    }
}

#[test]
fn defaults_without_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["feasibility", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    let table = fs::read_to_string(tmp.path().join("feasibility.csv")).unwrap();
    assert!(table.starts_with("atom_speed,mode_frequency,wavenumber,interaction_time,loss_time,ratio\n"));
    assert!(stdout(&out).contains("interaction_time = "));
}

#[test]
fn sequential_flag_gives_same_hashes() {
    let tmp = tempfile::tempdir().unwrap();
    let config = configs().join("sharpen.toml");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(run(&["sharpen", config.to_str().unwrap(), "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["sharpen", config.to_str().unwrap(), "--out", b.to_str().unwrap(), "--sequential"]).status.success());
    assert_eq!(fs::read(a.join("manifest.csv")).unwrap(), fs::read(b.join("manifest.csv")).unwrap());
}

#[test]
fn print_config_resolves_defaults() {
    let out = run(&["q-sweep", "--print-config"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("kind = \"q-sweep\""));
    assert!(text.contains("mean_photons = 20.0"));
}

#[test]
fn config_errors_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let wrong_kind = configs().join("sharpen.toml");
    let out = run(&["q-sweep", wrong_kind.to_str().unwrap(), "--print-config"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not `q-sweep`"));

    let typo = tmp.path().join("typo.toml");
    fs::write(&typo, "kind = \"sharpen\"\nmean_photon = 3.0\n").unwrap();
    let out = run(&["sharpen", typo.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mean_photon"));

    let missing = tmp.path().join("absent.toml");
    assert!(!run(&["sharpen", missing.to_str().unwrap()]).status.success());
}

#[test]
fn nonconvergence_sets_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("coarse.toml");
    fs::write(&cfg, "kind = \"filter-curves\"\nn_max = 20\n[numerics]\nmax_phase_step = 1.0\nmin_steps = 4\ntolerance = 1e-12\n").unwrap();
    let out = run(&["filter-curves", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}
