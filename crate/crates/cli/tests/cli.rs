use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_quadmech");

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn config(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn quadmech(&self, args: &[&str]) -> Output {
        Command::new(BIN)
            .args(args)
            .current_dir(self.dir.path())
            .env_remove("QUADMECH_OUT_DIR")
            .output()
            .unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Header and rows of a CSV written by the tool.
fn csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const SMALL_EVOLVE: &str = "\
[model]
g = 0.08
alpha = 1.0
[hilbert]
n_cav = 16
n_mech = 30
[grid]
t_end = 2.0
n_steps = 10
[output]
wigner_times = [0.5]
wigner_points = 21
";

#[test]
fn squeezeparam_defaults() {
    let r = Run::new();
    let o = r.quadmech(&["squeezeparam", "--out", "sq"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = csv(&r.path("sq/squeezeparam.csv"));
    assert_eq!(h, ["n", "r"]);
    assert_eq!(rows.len(), 501);
    assert_eq!(f(&rows[0][1]), 0.0);
    // r(n) = ln(1 + 4 g n) / 4 at the default g.
    let oracle = (1.0f64 + 4.0 * 0.003 * 100.0).ln() / 4.0;
    assert_eq!(rows[100][0], "100");
    assert!((f(&rows[100][1]) - oracle).abs() < 1e-15);
    assert!((f(&rows[100][1]) - 0.19711).abs() < 1e-5);
}

#[test]
fn malformed_config_exits_2_without_files() {
    let r = Run::new();
    let cfg = r.config("bad.toml", "[model]\ngg = 0.1\n");
    let o = r.quadmech(&["squeezeparam", "--config", cfg.to_str().unwrap(), "--out", "out"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("gg"));
    assert!(!r.path("out").exists());
    let left: Vec<_> = fs::read_dir(r.dir.path()).unwrap().collect();
    assert_eq!(left.len(), 1, "only the config remains");

    let cfg = r.config("bad2.toml", "[hilbert]\nn_cav = 0\n");
    let o = r.quadmech(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", "out"]);
    assert_eq!(code(&o), 2);
    assert!(!r.path("out").exists());
}

#[test]
fn spectrum_values_and_crossing_order() {
    let r = Run::new();
    let cfg = r.config("s.toml", "[sweep]\ng_max = 0.3\ng_points = 101\n");
    let o = r.quadmech(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", "s"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = csv(&r.path("s/spectrum.csv"));
    assert_eq!(h, ["g", "k", "n", "energy"]);
    let (ig, ik, in_, ie) = (col(&h, "g"), col(&h, "k"), col(&h, "n"), col(&h, "energy"));
    // g = 0: harmonic ladder n omega0 + k.
    for row in rows.iter().filter(|r| f(&r[ig]) == 0.0) {
        let (k, n) = (f(&row[ik]), f(&row[in_]));
        assert!((f(&row[ie]) - (2.0 * n + k)).abs() < 1e-14);
    }
    let row = rows
        .iter()
        .find(|r| (f(&r[ig]) - 0.003).abs() < 1e-12 && r[ik] == "0" && r[in_] == "1")
        .unwrap();
    assert!((f(&row[ie]) - 2.0029911).abs() < 1e-7);

    let (ch, crossings) = csv(&r.path("s/crossings.csv"));
    assert_eq!(ch, ["k", "n", "k2", "n2", "g_star", "energy"]);
    let gs: Vec<f64> = crossings.iter().map(|c| f(&c[4])).collect();
    assert!(!gs.is_empty());
    assert!(gs.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn evolve_initial_row_oracle_and_wigner() {
    let r = Run::new();
    let cfg = r.config("e.toml", SMALL_EVOLVE);
    let o = r.quadmech(&["evolve", "--config", cfg.to_str().unwrap(), "--out", "e", "--oracle"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = csv(&r.path("e/evolve.csv"));
    assert_eq!(h, ["t", "mean_phonons", "mandel_q", "entropy", "v_min", "db", "fidelity"]);
    assert_eq!(rows.len(), 11);
    let first: Vec<f64> = rows[0].iter().map(|s| f(s)).collect();
    assert_eq!(&first[..6], &[0.0, 0.0, -1.0, 0.0, 0.5, 0.0]);
    for row in &rows {
        assert!(f(&row[6]) >= 1.0 - 1e-7, "{row:?}");
    }

    let (wh, wrows) = csv(&r.path("e/wigner_t0.5.csv"));
    assert_eq!(wh, ["q", "p", "W"]);
    assert_eq!(wrows.len(), 21 * 21);
    let m = manifest(&r.path("e"));
    assert!(m["checks"]["oracle_min_fidelity"].as_f64().unwrap() >= 1.0 - 1e-7);
}

#[test]
fn evolve_truncation_exits_3_naming_the_sector() {
    let r = Run::new();
    let cfg = r.config(
        "t.toml",
        "[model]\ng = 0.08\nalpha = 3.0\n[hilbert]\nn_cav = 40\nn_mech = 6\n[grid]\nt_end = 1.0\nn_steps = 4\n",
    );
    let o = r.quadmech(&["evolve", "--config", cfg.to_str().unwrap(), "--out", "t"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("photon sector n = "), "{}", stderr(&o));
    assert!(!r.path("t").exists());
}

#[test]
fn determinism_across_runs_and_workers() {
    let r = Run::new();
    let cfg = r.config("e.toml", SMALL_EVOLVE);
    let c = cfg.to_str().unwrap();
    for (out, workers) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let o = r.quadmech(&["evolve", "--config", c, "--out", out, "--workers", workers]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for name in ["evolve.csv", "wigner_t0.5.csv"] {
        let a = fs::read(r.path("a").join(name)).unwrap();
        assert_eq!(a, fs::read(r.path("b").join(name)).unwrap(), "{name}");
        assert_eq!(a, fs::read(r.path("c").join(name)).unwrap(), "{name}");
    }
}

#[test]
fn manifest_checksums_and_replay() {
    let r = Run::new();
    let cfg = r.config("e.toml", SMALL_EVOLVE);
    let o = r.quadmech(&["evolve", "--config", cfg.to_str().unwrap(), "--out", "a"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = manifest(&r.path("a"));
    assert_eq!(m["tool"], "quadmech");
    assert_eq!(m["subcommand"], "evolve");
    assert!(m["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["config"]["model"]["g"], 0.08);
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    for rec in outputs {
        let bytes = fs::read(r.path("a").join(rec["file"].as_str().unwrap())).unwrap();
        let digest = sha2_hex(&bytes);
        assert_eq!(rec["sha256"].as_str().unwrap(), digest);
    }

    let replay = r.path("a/manifest.json");
    let o = r.quadmech(&["evolve", "--config", replay.to_str().unwrap(), "--out", "b"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        fs::read(r.path("a/evolve.csv")).unwrap(),
        fs::read(r.path("b/evolve.csv")).unwrap()
    );
}

/// SHA-256 through the system tool, independent of the crate under test.
fn sha2_hex(bytes: &[u8]) -> String {
    use std::io::Write;
    let mut child = Command::new("sha256sum")
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .expect("sha256sum available");
    child.stdin.take().unwrap().write_all(bytes).unwrap();
    let out = child.wait_with_output().unwrap();
    String::from_utf8(out.stdout).unwrap()[..64].to_string()
}

#[test]
fn output_dir_precedence() {
    let r = Run::new();
    let cfg = r.config("o.toml", "[sweep]\nn_max = 3\n[output]\ndir = \"from_config\"\n");
    let c = cfg.to_str().unwrap();
    assert_eq!(code(&r.quadmech(&["squeezeparam", "--config", c])), 0);
    assert!(r.path("from_config/squeezeparam.csv").exists());

    let o = Command::new(BIN)
        .args(["squeezeparam", "--config", c])
        .current_dir(r.dir.path())
        .env("QUADMECH_OUT_DIR", "from_env")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(r.path("from_env/squeezeparam.csv").exists());

    let o = Command::new(BIN)
        .args(["squeezeparam", "--config", c, "--out", "from_flag"])
        .current_dir(r.dir.path())
        .env("QUADMECH_OUT_DIR", "from_env_2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(r.path("from_flag/squeezeparam.csv").exists());
    assert!(!r.path("from_env_2").exists());
}

#[test]
fn nmech_scale_reports_drift() {
    let r = Run::new();
    let cfg = r.config("e.toml", SMALL_EVOLVE);
    let o = r.quadmech(&[
        "evolve", "--config", cfg.to_str().unwrap(), "--out", "e", "--nmech-scale", "1.5",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let conv = &manifest(&r.path("e"))["convergence"];
    assert_eq!(conv["n_mech"], 30);
    assert_eq!(conv["n_mech_scaled"], 45);
    assert!(conv["max_relative_drift"].as_f64().unwrap() < 1e-6);
    assert_eq!(conv["passed"], true);

    let o = r.quadmech(&["squeezeparam", "--out", "s", "--nmech-scale", "0.5"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn lindblad_without_rates_matches_evolve() {
    let r = Run::new();
    let common = "[model]\ng = 0.08\nalpha = 0.1\n[hilbert]\nn_cav = 6\nn_mech = 20\n[grid]\nt_end = 2.0\nn_steps = 10\n";
    let closed = r.config(
        "l.toml",
        &format!("{common}[sweep]\nsectors = \"full\"\n").replace(
            "alpha = 0.1\n",
            "alpha = 0.1\ngamma_o = 0.0\ngamma_m = 0.0\nnbar_m = 0.0\n",
        ),
    );
    let ev = r.config("e.toml", common);
    let o = r.quadmech(&["lindblad", "--config", closed.to_str().unwrap(), "--out", "l"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = r.quadmech(&["evolve", "--config", ev.to_str().unwrap(), "--out", "e"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (lh, lrows) = csv(&r.path("l/lindblad.csv"));
    let (eh, erows) = csv(&r.path("e/evolve.csv"));
    assert_eq!(lh, ["t", "mean_phonons", "mandel_q", "trace", "v_min", "db"]);
    for (a, b) in lrows.iter().zip(&erows) {
        assert_eq!(a[0], b[0]);
        for name in ["mean_phonons", "v_min"] {
            let (x, y) = (f(&a[col(&lh, name)]), f(&b[col(&eh, name)]));
            assert!((x - y).abs() < 1e-8, "{name}: {x} vs {y}");
        }
        assert!((f(&a[col(&lh, "trace")]) - 1.0).abs() < 1e-7);
    }
}

#[test]
fn lindblad_step_refusal_exits_3() {
    let r = Run::new();
    let cfg = r.config(
        "l.toml",
        "[model]\ng = 0.08\nalpha = 0.1\n[hilbert]\nn_cav = 4\nn_mech = 30\n[sweep]\nstep = 1.0\n",
    );
    let o = r.quadmech(&["lindblad", "--config", cfg.to_str().unwrap(), "--out", "l"]);
    assert_eq!(code(&o), 3);
    assert!(!r.path("l").exists());
}

#[test]
fn condition_records_and_degenerate_request() {
    let r = Run::new();
    let cfg = r.config(
        "c.toml",
        "[model]\ng = 0.08\nalpha = 1.0\n[hilbert]\nn_cav = 16\nn_mech = 40\n[sweep]\nphoton_numbers = [0, 2]\ncondition_times = [0.25, 0.5]\n",
    );
    let o = r.quadmech(&["condition", "--config", cfg.to_str().unwrap(), "--out", "c"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&fs::read_to_string(r.path("c/condition.json")).unwrap()).unwrap();
    let recs = doc["records"].as_array().unwrap();
    assert_eq!(recs.len(), 6);
    for rec in recs {
        let db = rec["db"].as_f64().unwrap();
        if rec["n"] == 0 {
            assert!(db.abs() < 1e-12);
        } else {
            // Squeezed vacuum of magnitude |xi|: 20 log10(e) |xi| dB.
            let oracle = 20.0 * std::f64::consts::E.log10() * rec["xi_abs"].as_f64().unwrap();
            assert!((db - oracle).abs() < 1e-6, "{db} vs {oracle}");
        }
    }
    let m = manifest(&r.path("c"));
    assert!(m["checks"]["max_probability_sum_deviation"].as_f64().unwrap() < 1e-10);

    let cfg = r.config(
        "z.toml",
        "[model]\nalpha = 0.1\n[hilbert]\nn_cav = 16\nn_mech = 10\n[sweep]\nphoton_numbers = [12]\n",
    );
    let o = r.quadmech(&["condition", "--config", cfg.to_str().unwrap(), "--out", "z"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(!r.path("z").exists());
}

#[test]
fn floquet_undriven_matches_folded_spectrum() {
    let r = Run::new();
    let text = "[model]\ndrive = 0.0\n[hilbert]\nn_cav = 6\nn_mech = 24\n[sweep]\ng_max = 0.1\ng_points = 2\nfloquet_g_points = 2\nsteps_per_period = 64\nk_max = 3\nlabel_n_max = 2\ngap_points = 5\n";
    let cfg = r.config("f.toml", text);
    let c = cfg.to_str().unwrap();
    let o = r.quadmech(&["floquet", "--config", c, "--out", "f"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = r.quadmech(&["spectrum", "--config", c, "--out", "s"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let omega_d = 0.5;
    let fold = |x: f64| x - omega_d * (x / omega_d).floor();
    let (fh, frows) = csv(&r.path("f/floquet.csv"));
    let (sh, srows) = csv(&r.path("s/spectrum.csv"));
    for s in &srows {
        let g = f(&s[col(&sh, "g")]);
        let target = fold(f(&s[col(&sh, "energy")]));
        let best = frows
            .iter()
            .filter(|q| f(&q[col(&fh, "g")]) == g)
            .map(|q| {
                let d = (f(&q[col(&fh, "eps_b")]) - target).abs();
                d.min(omega_d - d)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-6, "level {s:?} missing, nearest {best:e}");
    }
    assert_eq!(manifest(&r.path("f"))["checks"]["methods_agree"], true);
}

#[test]
fn floquet_method_disagreement_exits_nonzero() {
    let r = Run::new();
    let cfg = r.config(
        "f.toml",
        "[model]\ndrive = 1.0\n[hilbert]\nn_cav = 6\nn_mech = 16\n[sweep]\ng_min = 0.5\ng_max = 0.5\nfloquet_g_points = 1\nsteps_per_period = 16\n",
    );
    let o = r.quadmech(&["floquet", "--config", cfg.to_str().unwrap(), "--out", "f"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("disagree"));
    assert!(!r.path("f").exists());
}

#[test]
fn dressed_and_mandel_tables() {
    let r = Run::new();
    let cfg = r.config("d.toml", "[model]\ng = 0.08\n[hilbert]\nn_cav = 4\nn_mech = 60\n");
    let o = r.quadmech(&["dressed", "--config", cfg.to_str().unwrap(), "--out", "d"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = csv(&r.path("d/dressed.csv"));
    assert_eq!(rows.len(), 24);
    for row in &rows {
        assert!(f(&row[col(&h, "residual")]) <= 1e-7);
    }
    assert!(manifest(&r.path("d"))["checks"]["max_gram_deviation"].as_f64().unwrap() < 1e-8);

    let o = r.quadmech(&["mandel", "--config", cfg.to_str().unwrap(), "--out", "m"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = csv(&r.path("m/mandel.csv"));
    for row in &rows {
        let (k, n) = (row[col(&h, "k")].as_str(), row[col(&h, "n")].as_str());
        let q = f(&row[col(&h, "mandel_q")]);
        let r = f(&row[col(&h, "r")]);
        if n == "0" {
            assert_eq!(q, -1.0, "number state k = {k}");
        } else if k == "0" {
            // Squeezed vacuum: Var/mean - 1 = cosh 2r.
            assert!((q - (2.0 * r).cosh()).abs() < 1e-9);
        }
    }
    let (_, roots) = csv(&r.path("m/poissonian.csv"));
    assert_eq!(roots.len(), 5);
    for row in &roots {
        assert!(f(&row[2]).abs() <= 1e-9);
    }
}
