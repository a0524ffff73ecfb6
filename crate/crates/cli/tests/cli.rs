use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const MODEL_R4: &str = r#"
[model]
plaquettes = 4
field = 3.141592653589793
couplings = [1.0, 2.0, 0.5]
"#;

fn model(r: usize) -> String {
    MODEL_R4.replace("plaquettes = 4", &format!("plaquettes = {r}"))
}

struct Run {
    out: PathBuf,
    output: Output,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().unwrap_or(-1)
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.output.stderr).into_owned()
    }

    fn stdout(&self) -> String {
        String::from_utf8_lossy(&self.output.stdout).into_owned()
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.out.join(name)).unwrap_or_else(|e| {
            panic!(
                "{name}: {e}\nstdout:\n{}\nstderr:\n{}",
                self.stdout(),
                self.stderr()
            )
        })
    }
}

fn run_in(dir: &Path, config: &str, out: &str, extra: &[&str]) -> Run {
    let cfg = dir.join(format!("{out}.toml"));
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join(out);
    let output = Command::new(env!("CARGO_BIN_EXE_spinlace"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    Run { out, output }
}

/// `#` header pairs and the numeric rows of a CSV file.
fn parse_csv(text: &str) -> (BTreeMap<String, String>, Vec<String>, Vec<Vec<String>>) {
    let mut header = BTreeMap::new();
    let mut lines = text.lines().peekable();
    while let Some(l) = lines.peek() {
        let Some(kv) = l.strip_prefix("# ") else {
            break;
        };
        let (k, v) = kv.split_once('=').unwrap();
        header.insert(k.to_string(), v.to_string());
        lines.next();
    }
    let columns = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, columns, rows)
}

fn manifest(run: &Run) -> toml::Table {
    run.read("manifest.toml").parse().unwrap()
}

/// Every listed file exists, hashes as recorded and carries the run's hash.
fn check_manifest(run: &Run) -> String {
    let m = manifest(run);
    let hash = m["config_hash"].as_str().unwrap().to_string();
    let files = m["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let name = f["name"].as_str().unwrap();
        let body = run.read(name);
        let digest: String = {
            use sha2::{Digest, Sha256};
            Sha256::digest(body.as_bytes())
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect()
        };
        assert_eq!(f["sha256"].as_str().unwrap(), digest, "{name}");
        assert!(
            body.starts_with(&format!("# config_hash={hash}\n")),
            "{name}"
        );
    }
    assert!(run.out.join("run_info.toml").exists());
    hash
}

#[test]
fn verify_ordered_lattice() {
    let dir = TempDir::new().unwrap();
    let run = run_in(
        dir.path(),
        &format!("schema_version = 1\ntask = \"verify\"\n{MODEL_R4}"),
        "v",
        &[],
    );
    assert_eq!(run.code(), 0, "{}", run.stderr());
    check_manifest(&run);
    let (_, cols, rows) = parse_csv(&run.read("delta_structure.csv"));
    assert_eq!(cols, ["p", "A_2", "A_3", "A_4"]);
    assert_eq!(rows.len(), 3);
    for row in &rows {
        for v in &row[1..] {
            assert!(v.parse::<f64>().unwrap() < 1e-12, "{row:?}");
        }
    }
    let (_, _, sym) = parse_csv(&run.read("symmetries.csv"));
    assert!(sym.iter().all(|r| r[5] == "true"));
    let m = manifest(&run);
    assert_eq!(m["model"]["n_sites"].as_integer(), Some(13));
}

#[test]
fn defect_breaks_only_its_own_symmetry() {
    let dir = TempDir::new().unwrap();
    let config = format!(
        "schema_version = 1\ntask = \"verify\"\n{MODEL_R4}\n[[model.defects]]\nterm = \"bond_left:2\"\noperator = \"3.0 0 IXIXIIIIIIIII\\n-2.5 0 IIZZIIIIIIIII\"\n"
    );
    let run = run_in(dir.path(), &config, "d", &[]);
    assert_eq!(run.code(), 1, "{}", run.stderr());
    let (_, _, sym) = parse_csv(&run.read("symmetries.csv"));
    let passes: Vec<(&str, &str)> = sym.iter().map(|r| (r[0].as_str(), r[5].as_str())).collect();
    assert_eq!(passes, [("2", "false"), ("3", "true"), ("4", "true")]);
}

#[test]
fn search_recovers_the_lowering_symmetry() {
    let dir = TempDir::new().unwrap();
    let config = format!(
        "schema_version = 1\ntask = \"search\"\n{}\n[search]\np = 2\n",
        model(3)
    );
    let run = run_in(dir.path(), &config, "s", &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    check_manifest(&run);
    let (_, cols, rows) = parse_csv(&run.read("eigenpairs.csv"));
    assert_eq!(cols[1], "omega");
    let hit = rows.iter().any(|r| {
        let w: f64 = r[1].parse().unwrap();
        let overlap: f64 = r[4].parse().unwrap();
        (w.abs() - 2.0 * std::f64::consts::PI).abs() < 1e-8 && overlap > 1.0 - 1e-10
    });
    assert!(hit, "{rows:?}");
    assert!(run.read("eigenoperators.txt").contains("# index=0"));
}

#[test]
fn symmetry_correlator_has_constant_modulus() {
    let dir = TempDir::new().unwrap();
    let config = format!(
        "schema_version = 1\ntask = \"evolve\"\n{}\n[dynamics]\ndt = 0.1\nt_max = 5.0\n[evolve]\nobservable = \"sym:2\"\nprobe = \"node:2:x\"\n",
        model(2)
    );
    let run = run_in(dir.path(), &config, "e", &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let (header, cols, rows) = parse_csv(&run.read("correlation.csv"));
    assert_eq!(cols, ["t", "re", "im", "abs"]);
    assert_eq!(header["label"], "sym:2 node:2:x");
    assert_eq!(header["mode"], "exact");
    assert_eq!(rows.len(), 51);
    for r in &rows {
        assert!(
            (r[3].parse::<f64>().unwrap() - 1.0 / 32.0).abs() < 1e-8,
            "{r:?}"
        );
    }
}

#[test]
fn spectrum_flags_the_symmetry_frequency() {
    let dir = TempDir::new().unwrap();
    let config = format!(
        "schema_version = 1\ntask = \"spectrum\"\n{}\n[spectrum]\nobservable = \"sym:2\"\nprobe = \"node:2:x\"\n",
        model(2)
    );
    let run = run_in(dir.path(), &config, "f", &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    check_manifest(&run);
    let peaks = run.read("peaks.txt");
    assert!(peaks.contains("dominant_matches = true"), "{peaks}");
    let (header, cols, rows) = parse_csv(&run.read("spectrum.csv"));
    assert_eq!(cols, ["omega", "re", "im", "abs"]);
    assert!(header.contains_key("window"));
    // default grid reaches twice the predicted 2B
    let last: f64 = rows.last().unwrap()[0].parse().unwrap();
    assert!(last >= 4.0 * std::f64::consts::PI - 1e-9);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let config = format!(
        "schema_version = 1\ntask = \"evolve\"\nseed = 3\n{}\n[dynamics]\ndt = 0.5\nt_max = 4.0\ntrace = \"typicality\"\nsamples = 4\n[evolve]\nobservable = \"node:2:x\"\nprobe = \"node:2:x\"\n",
        model(2)
    );
    let a = run_in(dir.path(), &config, "a", &[]);
    let b = run_in(dir.path(), &config, "b", &[]);
    let c = run_in(dir.path(), &config, "c", &["--seed", "4"]);
    for r in [&a, &b, &c] {
        assert_eq!(r.code(), 0, "{}", r.stderr());
    }
    for name in ["correlation.csv", "manifest.toml"] {
        assert_eq!(a.read(name), b.read(name), "{name}");
    }
    assert_ne!(check_manifest(&a), check_manifest(&c));
    let (header, cols, _) = parse_csv(&a.read("correlation.csv"));
    assert_eq!(header["mode"], "typicality");
    assert_eq!(header["seed"], "3");
    assert_eq!(cols.last().unwrap(), "std_err");
}

#[test]
fn task_flag_overrides_the_config() {
    let dir = TempDir::new().unwrap();
    let run = run_in(
        dir.path(),
        &format!("schema_version = 1\n{}", model(2)),
        "t",
        &["--task", "verify"],
    );
    assert_eq!(run.code(), 0, "{}", run.stderr());
    assert_eq!(manifest(&run)["task"].as_str(), Some("verify"));
    let missing = run_in(
        dir.path(),
        &format!("schema_version = 1\n{}", model(2)),
        "m",
        &[],
    );
    assert_eq!(missing.code(), 2);
    assert!(missing.stderr().contains("task"), "{}", missing.stderr());
}

#[test]
fn invalid_configs_name_the_field() {
    let dir = TempDir::new().unwrap();
    let typo = run_in(
        dir.path(),
        &format!(
            "schema_version = 1\ntask = \"verify\"\n{}",
            model(2).replace("field", "feild")
        ),
        "x",
        &[],
    );
    assert_eq!(typo.code(), 2);
    assert!(
        typo.stderr().contains("feild") && typo.stderr().contains("line"),
        "{}",
        typo.stderr()
    );
    let bad_site = run_in(
        dir.path(),
        &format!("schema_version = 1\ntask = \"evolve\"\n{}\n[evolve]\nobservable = \"node:7:x\"\nprobe = \"node:2:x\"\n", model(2)),
        "y",
        &[],
    );
    assert_eq!(bad_site.code(), 2);
    assert!(
        bad_site.stderr().contains("evolve.observable"),
        "{}",
        bad_site.stderr()
    );
    assert!(!bad_site.out.exists());
    let too_big = run_in(
        dir.path(),
        &format!("schema_version = 1\ntask = \"verify\"\n{}", model(22)),
        "z",
        &[],
    );
    assert_eq!(too_big.code(), 2);
    assert!(too_big.stderr().contains("67"), "{}", too_big.stderr());
}

#[test]
fn full_fig3_at_standard_parameters() {
    let dir = TempDir::new().unwrap();
    let run = run_in(
        dir.path(),
        &format!("schema_version = 1\ntask = \"full-fig3\"\n{MODEL_R4}"),
        "fig3",
        &[],
    );
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let hash = check_manifest(&run);
    for name in ["fig3_sigma_x.csv", "fig3_symmetry.csv", "fig3_spin_x.csv"] {
        let (header, _, rows) = parse_csv(&run.read(name));
        assert_eq!(header["config_hash"], hash);
        assert_eq!(rows.len(), 401);
    }
    let (_, _, sym) = parse_csv(&run.read("fig3_symmetry.csv"));
    for r in &sym {
        assert!((r[3].parse::<f64>().unwrap() - 1.0 / 32.0).abs() < 1e-8);
    }
    let sigma = run.read("peaks_sigma_x.txt");
    assert!(sigma.contains("dominant_matches = true"), "{sigma}");
    let spin = run.read("peaks_spin_x.txt");
    assert!(spin.contains("matches_predicted = false"), "{spin}");
}
