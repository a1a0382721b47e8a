use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use oceansim::io::read_heightfield;
use oceansim::scenario::Scenario;
use oceansim::surface::Cascades;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oceansim"))
}

fn exec(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

const SMALL: &str = r#"
seed = 3
duration = 0.1
[spectrum]
wind_speed = 8.0
convention = "physical"
[cascades]
resolution = 16
[output]
snapshot_stride = 3
snapshot_resolution = 16
"#;

#[test]
fn unknown_flag_rejected() {
    let o = exec(&["run", "--bogus"]);
    assert_eq!(code(&o), 2);
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "duration = \"long\"\n");
    let o = exec(&["run", "--config", &bad, "--out", &dir.path().join("o").display().to_string()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    let unknown = write(dir.path(), "unknown.toml", "durration = 1.0\n");
    assert_eq!(code(&exec(&["run", "--config", &unknown])), 2);
    assert_eq!(code(&exec(&["run"])), 2);
}

#[test]
fn mesh_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let open = write(dir.path(), "open.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    let o = exec(&["validate-mesh", &open]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("invalid"));

    let scenario = format!("{SMALL}\n[[body]]\nname = \"b\"\nmesh = \"open.obj\"\n");
    let cfg = write(dir.path(), "s.toml", &scenario);
    assert_eq!(code(&exec(&["run", "--config", &cfg, "--out", &dir.path().join("o").display().to_string()])), 3);
}

#[test]
fn blow_up_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("convention = \"physical\"", "convention = \"physical\"\ngravity = 1e300")
        + "\n[[body]]\nname = \"b\"\nmesh = { kind = \"cuboid\", size = [1.0, 1.0, 1.0] }\n";
    let cfg = write(dir.path(), "s.toml", &text);
    let o = exec(&["run", "--config", &cfg, "--out", &dir.path().join("o").display().to_string()]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn io_errors_exit_5() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml").display().to_string();
    assert_eq!(code(&exec(&["run", "--config", &missing])), 5);

    let cfg = write(dir.path(), "s.toml", SMALL);
    let blocker = write(dir.path(), "file", "x");
    let out = Path::new(&blocker).join("sub").display().to_string();
    assert_eq!(code(&exec(&["run", "--config", &cfg, "--out", &out])), 5);
}

#[test]
fn bundled_meshes_validate() {
    let mut args = vec!["validate-mesh".to_string()];
    for e in fs::read_dir(scenarios().join("meshes")).unwrap() {
        args.push(e.unwrap().path().display().to_string());
    }
    assert_eq!(args.len(), 6);
    let o = bin().args(&args).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(String::from_utf8_lossy(&o.stdout).matches(": ok,").count(), 5);
}

#[test]
fn dump_surface_is_deterministic_and_matches_queries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = exec(&["dump-surface", "--config", &cfg, "--time", "1.5", "--out", &out.display().to_string()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let surface = read_heightfield(&a.join("surface.abhf")).unwrap();
    assert_eq!(fs::read(a.join("surface.abhf")).unwrap(), fs::read(b.join("surface.abhf")).unwrap());
    assert_eq!((surface.n, surface.id, surface.time), (16, -1, 1.5));
    assert!(a.join("surface.csv").exists());
    assert_eq!(fs::read_dir(&a).unwrap().filter(|e| e.as_ref().unwrap().path().extension().unwrap() == "abhf").count(), 25);

    let scenario = Scenario::load(&cfg).unwrap();
    let maps = Cascades::generate(&scenario.cascades, &scenario.effective_spectrum()).unwrap().maps(1.5);
    let length = scenario.cascades.lengths[0];
    for (idx, v) in surface.values.iter().enumerate() {
        let (i, j) = (idx / 16, idx % 16);
        let h = maps.height_at(i as f64 * length / 16.0, j as f64 * length / 16.0);
        assert_eq!(*v, h as f32);
    }

    let c = dir.path().join("c");
    let o = exec(&["dump-surface", "--config", &cfg, "--time", "1.5", "--seed", "4", "--out", &c.display().to_string()]);
    assert!(o.status.success());
    assert_ne!(fs::read(a.join("surface.abhf")).unwrap(), fs::read(c.join("surface.abhf")).unwrap());
}

#[test]
fn empty_ocean_runs() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenarios().join("empty-ocean.toml")).unwrap().replace("duration = 2.0", "duration = 0.5")
        + "\n[cascades]\nresolution = 32\n";
    let cfg = write(dir.path(), "empty.toml", &text);
    let out = dir.path().join("o");
    let o = exec(&["run", "--config", &cfg, "--out", &out.display().to_string(), "--report-timing"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("with 0 bodies") && stdout.contains("timing"));
}

#[test]
fn shortened_one_solid_runs_and_seed_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = scenarios().join("meshes/motorboat.obj").display().to_string();
    let text = fs::read_to_string(scenarios().join("one-solid.toml"))
        .unwrap()
        .replace("duration = 20.0", "duration = 0.25")
        .replace("meshes/motorboat.obj", &mesh)
        .replace("snapshot_resolution = 128", "snapshot_resolution = 32")
        + "\n[cascades]\nresolution = 32\n";
    let cfg = write(dir.path(), "one.toml", &text);
    let run_to = |out: &Path, seed: Option<&str>| {
        let mut args = vec!["run".to_string(), "--config".into(), cfg.clone(), "--out".into(), out.display().to_string()];
        if let Some(s) = seed {
            args.extend(["--seed".into(), s.into()]);
        }
        let o = bin().args(&args).output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(out.join("trajectory.csv")).unwrap()
    };
    let a = run_to(&dir.path().join("a"), None);
    let b = run_to(&dir.path().join("b"), None);
    let c = run_to(&dir.path().join("c"), Some("99"));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.lines().count(), 1 + 15);
}

#[test]
fn bench_outputs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for (k, threads) in ["1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("r{k}"));
        let o = bin()
            .args(["bench", "normalization", "--samples", "400", "--threads", threads, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let o = bin()
            .args(["bench", "convergence", "--points", "30", "--wind-min", "1", "--wind-max", "3", "--wind-step", "1"])
            .args(["--convention", "physical", "--threads", threads, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        csvs.push((fs::read(out.join("normalization.csv")).unwrap(), fs::read(out.join("convergence.csv")).unwrap()));
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(String::from_utf8_lossy(&csvs[0].1).lines().count(), 4);
}
