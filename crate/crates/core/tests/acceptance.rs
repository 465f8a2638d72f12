//! Acceptance criteria, one PASS/FAIL line each. Tolerances are fixed here;
//! a failing criterion is reported, never relaxed.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use quadmech::dynamics::sector::optimal_time;
use quadmech::dynamics::{
    analytic_state, floquet_spectrum, integrate_master, FloquetSweep, MasterOptions, SectorMode,
    TimeGrid,
};
use quadmech::hilbert::{Eigh, CMatrix, CVector};
use quadmech::model::{
    build_h_q, dressed_state, eigenvalue, squeeze_param_r, squeezed_number_state,
    sector_frequency,
};
use quadmech::observables::{
    condition_on_photon_number, entanglement_entropy, mandel_q, phonon_moments,
    phonon_moments_pure, poissonian_r, reduced_mech_state, squeezed_number_moments,
    squeezing_report,
};
use quadmech::{DensityMatrix, HilbertSpec, ModelParams, StateVector, C64};

type Checked = Result<(bool, String), String>;

struct Line {
    name: &'static str,
    outcome: Checked,
}

fn lines_of(name: &'static str, outcome: Checked) -> Vec<Line> {
    vec![Line { name, outcome }]
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// `20 log10(e)`, dB per unit of squeezing magnitude.
const DB_PER_NEPER: f64 = 8.685889638065036;

fn closed(g: f64) -> ModelParams {
    ModelParams::closed(g)
}

// Independent constructions used as oracles: plain Fock-space matrices
// assembled here, not through the library's operator builders.

fn ladder(dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `b^dag b + g n (b + b^dag)^2` with the square taken in the infinite
/// space and then truncated.
fn sector_block(n: usize, g: f64, dim: usize) -> CMatrix {
    let b = ladder(dim);
    let bd = b.adjoint();
    let mut h = &b * &b + &bd * &bd;
    for i in 0..dim {
        h[(i, i)] += C64::new(2.0 * i as f64 + 1.0, 0.0);
    }
    h *= C64::new(g * n as f64, 0.0);
    for i in 0..dim {
        h[(i, i)] += C64::new(i as f64, 0.0);
    }
    h
}

/// Number-state moments from the diagonal of `|psi><psi|`.
fn moments_of(amp: &CVector) -> (f64, f64) {
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (k, z) in amp.iter().enumerate() {
        let p = z.norm_sqr();
        m1 += k as f64 * p;
        m2 += (k * k) as f64 * p;
    }
    (m1, m2)
}

/// Smallest quadrature variance from the 2x2 covariance matrix of
/// `q = (b + b^dag)/sqrt 2`, `p = (b - b^dag)/(i sqrt 2)`.
fn covariance_min_variance(rho: &CMatrix) -> f64 {
    let dim = rho.nrows();
    let b = ladder(dim);
    let bd = b.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = (&b + &bd) * C64::new(s, 0.0);
    let p = (&b - &bd) * C64::new(0.0, -s);
    let ev = |op: &CMatrix| (rho * op).trace().re;
    let (mq, mp) = (ev(&q), ev(&p));
    let vqq = ev(&(&q * &q)) - mq * mq;
    let vpp = ev(&(&p * &p)) - mp * mp;
    let vqp = 0.5 * ev(&(&q * &p + &p * &q)) - mq * mp;
    let tr = vqq + vpp;
    let det = vqq * vpp - vqp * vqp;
    0.5 * tr - (0.25 * tr * tr - det).max(0.0).sqrt()
}

fn eigensystem_exactness() -> Checked {
    const RESIDUAL_TOL: f64 = 1e-7;
    const GRAM_TOL: f64 = 1e-8;
    const BUDGET_S: f64 = 30.0;
    let start = Instant::now();
    let spec = HilbertSpec::new(4, 120).map_err(err)?;
    let mut worst_res = 0.0f64;
    let mut worst_gram = 0.0f64;
    for g in [0.003, 0.08] {
        let p = closed(g);
        let h = build_h_q(&p, &spec).map_err(err)?;
        let mut states = Vec::new();
        for n in 0..=3 {
            for k in 0..=5 {
                let psi = dressed_state(k, n, &p, &spec).map_err(err)?;
                let e = eigenvalue(k, n, &p).map_err(err)?;
                let r = (h.matrix() * psi.amplitudes() - psi.amplitudes() * C64::new(e, 0.0)).norm();
                // E_{0,0} = 0: the residual is taken absolutely there.
                let rel = if e == 0.0 { r } else { r / e.abs() };
                worst_res = worst_res.max(rel);
                states.push(psi);
            }
        }
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                let z = a.inner(b).map_err(err)?;
                worst_gram = worst_gram.max((z - C64::new(target, 0.0)).norm());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst_res <= RESIDUAL_TOL && worst_gram <= GRAM_TOL && secs < BUDGET_S,
        format!(
            "max residual {worst_res:.3e} (tol {RESIDUAL_TOL:e}), gram {worst_gram:.3e} (tol {GRAM_TOL:e}), {secs:.1} s (budget {BUDGET_S} s)"
        ),
    ))
}

fn propagator_oracle() -> Checked {
    const FIDELITY_TOL: f64 = 1e-7;
    const BUDGET_S: f64 = 120.0;
    let start = Instant::now();
    let mut worst = 1.0f64;
    let mut at = String::new();
    for (g, alpha, n_cav) in [
        (0.003, 0.1, 8),
        (0.003, 1.0, 16),
        (0.08, 0.1, 8),
        (0.08, 1.0, 16),
    ] {
        let p = closed(g);
        let spec = HilbertSpec::new(n_cav, 60).map_err(err)?;
        let a = C64::new(alpha, 0.0);
        let psi0 = analytic_state(0.0, a, &p, &spec).map_err(err)?;
        // Block propagators exp(-i H_n t) from the spectral decomposition of
        // each independently built sector Hamiltonian.
        let blocks: Vec<Eigh> = (0..n_cav)
            .map(|n| Eigh::new(&sector_block(n, g, spec.n_mech())))
            .collect();
        for step in 1..=100 {
            let t = 0.2 * step as f64;
            let psi = analytic_state(t, a, &p, &spec).map_err(err)?;
            let mut overlap = C64::new(0.0, 0.0);
            for (n, eig) in blocks.iter().enumerate() {
                let v0 = CVector::from_fn(spec.n_mech(), |k, _| psi0.amplitudes()[spec.index(k, n)]);
                let v = eig.evolve(&v0, t);
                for k in 0..spec.n_mech() {
                    overlap += psi.amplitudes()[spec.index(k, n)].conj() * v[k];
                }
            }
            let f = overlap.norm_sqr();
            if f < worst {
                worst = f;
                at = format!("g = {g}, alpha = {alpha}, t = {t:.1}");
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst >= 1.0 - FIDELITY_TOL && secs < BUDGET_S,
        format!(
            "min fidelity 1 - {:.3e} at {at} (tol {FIDELITY_TOL:e}), 400 samples, {secs:.1} s (budget {BUDGET_S} s)",
            1.0 - worst
        ),
    ))
}

fn phonon_statistics() -> Checked {
    const TOL: f64 = 1e-9;
    let dim = 200;
    let mut worst_number = 0.0f64;
    for k in 0..=10 {
        let psi = StateVector::basis(dim, k).map_err(err)?;
        let (m1, m2) = moments_of(psi.amplitudes());
        worst_number = worst_number.max((mandel_q(m1, m2) + 1.0).abs());
    }
    let mut worst_vacuum = 0.0f64;
    for g in [0.003, 0.08] {
        for n in [1, 2, 5, 10, 50, 100] {
            let r = squeeze_param_r(n, g).map_err(err)?;
            let target = (2.0 * r).cosh();
            let psi = squeezed_number_state(0, C64::new(r, 0.0), dim).map_err(err)?;
            let (m1, m2) = moments_of(psi.amplitudes());
            worst_vacuum = worst_vacuum.max((mandel_q(m1, m2) - target).abs());
            let (c1, c2) = squeezed_number_moments(0, r);
            worst_vacuum = worst_vacuum.max((mandel_q(c1, c2) - target).abs());
        }
    }
    let mut worst_root = 0.0f64;
    for k in 1..=5 {
        let r = poissonian_r(k);
        let (c1, c2) = squeezed_number_moments(k, r);
        worst_root = worst_root.max(mandel_q(c1, c2).abs());
        let psi = squeezed_number_state(k, C64::new(r, 0.0), dim).map_err(err)?;
        let (m1, m2) = moments_of(psi.amplitudes());
        worst_root = worst_root.max(mandel_q(m1, m2).abs());
    }
    Ok((
        worst_number <= TOL && worst_vacuum <= TOL && worst_root <= TOL,
        format!(
            "number states |Q+1| {worst_number:.1e}, squeezed vacua |Q-cosh 2r| {worst_vacuum:.1e}, Poissonian roots |Q| {worst_root:.1e} (tol {TOL:e})"
        ),
    ))
}

/// Closed-system samples at `t = 0, 0.1, .., t_end` for `alpha`, `g`.
fn closed_series(g: f64, alpha: f64, t_end: f64, spec: &HilbertSpec) -> Result<Vec<(f64, StateVector)>, String> {
    let steps = (t_end / 0.1).round() as usize;
    (0..=steps)
        .map(|i| {
            let t = 0.1 * i as f64;
            analytic_state(t, C64::new(alpha, 0.0), &closed(g), spec)
                .map(|s| (t, s))
                .map_err(err)
        })
        .collect()
}

fn entanglement_persistence() -> Checked {
    const FLOOR: f64 = 1e-9;
    let spec = HilbertSpec::new(8, 20).map_err(err)?;
    let series = closed_series(0.003, 0.1, 20.0, &spec)?;
    let s0 = entanglement_entropy(&series[0].1, &spec).map_err(err)?;
    let mut min = (f64::INFINITY, 0.0);
    for (t, psi) in &series[1..] {
        let s = entanglement_entropy(psi, &spec).map_err(err)?;
        if s < min.0 {
            min = (s, *t);
        }
    }
    Ok((
        s0 == 0.0 && min.0 > FLOOR,
        format!(
            "S(0) = {s0:e}, min S over t = 0.1..20 is {:.4e} at t = {:.1} (floor {FLOOR:e})",
            min.0, min.1
        ),
    ))
}

fn weak_field_phonon_scale() -> Checked {
    let (lo, hi) = (1e-4, 1e-2);
    let spec = HilbertSpec::new(8, 20).map_err(err)?;
    let series = closed_series(0.003, 0.1, 50.0, &spec)?;
    let mut max = (0.0f64, 0.0);
    for (t, psi) in &series {
        let (m, _) = phonon_moments_pure(psi, &spec).map_err(err)?;
        if m > max.0 {
            max = (m, *t);
        }
    }
    Ok((
        max.0 > lo && max.0 < hi,
        format!(
            "alpha = 0.1, g = 0.003: max <b^dag b> = {:.4e} at t = {:.1}, required in ({lo:e}, {hi:e})",
            max.0, max.1
        ),
    ))
}

fn mandel_trajectory() -> Checked {
    let (lo, hi) = (0.9, 1.1);
    let spec = HilbertSpec::new(8, 20).map_err(err)?;
    let series = closed_series(0.003, 0.1, 50.0, &spec)?;
    let q_of = |psi: &StateVector| -> Result<f64, String> {
        let (m1, m2) = phonon_moments_pure(psi, &spec).map_err(err)?;
        Ok(mandel_q(m1, m2))
    };
    let q0 = q_of(&series[0].1)?;
    let mut max = (f64::NEG_INFINITY, 0.0);
    for (t, psi) in &series[1..] {
        let q = q_of(psi)?;
        if q > max.0 {
            max = (q, *t);
        }
    }
    Ok((
        q0 == -1.0 && max.0 >= lo && max.0 <= hi,
        format!(
            "Q(0) = {q0}, max Q over t = 0.1..50 is {:.6} at t = {:.1}, required in [{lo}, {hi}]",
            max.0, max.1
        ),
    ))
}

fn thermalization() -> Checked {
    const MEAN_TOL: f64 = 0.02;
    const Q_TOL: f64 = 0.05;
    const BUDGET_S: f64 = 600.0;
    let start = Instant::now();
    let nbar = 3.0;
    let spec = HilbertSpec::new(4, 30).map_err(err)?;
    let p = ModelParams {
        g: 0.003,
        gamma_o: 0.1,
        gamma_m: 1e-3,
        nbar_m: Some(nbar),
        ..ModelParams::default()
    };
    let mut cav = StateVector::coherent(4, C64::new(0.1, 0.0)).map_err(err)?;
    cav.normalize().map_err(err)?;
    let mech = StateVector::basis(30, 0).map_err(err)?;
    let rho0 = StateVector::product(&mech, &cav, &spec).map_err(err)?.to_density();
    let grid = TimeGrid::new(0.0, 1e4, 100).map_err(err)?;
    let opts = MasterOptions {
        sectors: SectorMode::PhotonDiagonal,
        step: None,
        check_positivity: false,
    };
    let traj = integrate_master(&rho0, &grid, &p, &spec, &opts).map_err(err)?;
    let rho_m = reduced_mech_state(traj.states.last().unwrap(), &spec).map_err(err)?;
    let (m1, m2) = phonon_moments(&rho_m);
    let q = mandel_q(m1, m2);
    let secs = start.elapsed().as_secs_f64();
    let (dm, dq) = ((m1 - nbar).abs() / nbar, (q - nbar).abs() / nbar);
    Ok((
        dm <= MEAN_TOL && dq <= Q_TOL && secs < BUDGET_S,
        format!(
            "t = 1e4: <b^dag b> = {m1:.5} ({:.2}% off, tol {}%), Q = {q:.5} ({:.2}% off, tol {}%), {secs:.0} s (budget {BUDGET_S} s)",
            100.0 * dm,
            100.0 * MEAN_TOL,
            100.0 * dq,
            100.0 * Q_TOL
        ),
    ))
}

fn squeezing() -> Vec<Line> {
    const CLOSED_FORM_TOL: f64 = 1e-6;
    const SECTOR_TARGET_DB: f64 = 9.77;
    const SECTOR_TARGET_TOL: f64 = 0.05;
    const ORACLE_TOL: f64 = 1e-8;
    const REFERENCE_DB: f64 = 1.8;
    let g = 0.08;
    let p = closed(g);

    let conditioned = (|| -> Result<(Vec<(usize, f64, f64)>, f64), String> {
        let spec = HilbertSpec::new(70, 200).map_err(err)?;
        let mut rows = Vec::new();
        let mut n49 = f64::NAN;
        for n in [1, 25, 36, 49] {
            let t = optimal_time(n, g).map_err(err)?;
            let psi = analytic_state(t, C64::new(5.0, 0.0), &p, &spec).map_err(err)?;
            let (mech, _) = condition_on_photon_number(&psi, n, &spec).map_err(err)?;
            let db = squeezing_report(&DensityMatrix::pure(&mech)).db;
            let chi = sector_frequency(n, g).map_err(err)?;
            let closed_form = DB_PER_NEPER * (2.0 * g * n as f64 / chi).asinh();
            rows.push((n, db, closed_form));
            if n == 49 {
                n49 = db;
            }
        }
        Ok((rows, n49))
    })();

    let mut out = Vec::new();
    match conditioned {
        Ok((rows, n49)) => {
            let worst = rows.iter().map(|r| (r.1 - r.2).abs()).fold(0.0, f64::max);
            let detail = rows
                .iter()
                .map(|(n, db, cf)| format!("n={n}: {db:.7} vs {cf:.7}"))
                .collect::<Vec<_>>()
                .join(", ");
            out.push(Line {
                name: "conditioned squeezing equals the closed form",
                outcome: Ok((
                    worst <= CLOSED_FORM_TOL,
                    format!("alpha = 5, g = 0.08, optimal t; {detail} dB; max deviation {worst:.2e} (tol {CLOSED_FORM_TOL:e})"),
                )),
            });
            out.push(Line {
                name: "conditioned squeezing of the n = 49 sector near 9.77 dB",
                outcome: Ok((
                    (n49 - SECTOR_TARGET_DB).abs() <= SECTOR_TARGET_TOL,
                    format!("computed {n49:.4} dB, required {SECTOR_TARGET_DB} +- {SECTOR_TARGET_TOL} dB"),
                )),
            });
        }
        Err(e) => {
            out.push(Line {
                name: "conditioned squeezing equals the closed form",
                outcome: Err(e.clone()),
            });
            out.push(Line {
                name: "conditioned squeezing of the n = 49 sector near 9.77 dB",
                outcome: Err(e),
            });
        }
    }

    let unconditioned = (|| -> Checked {
        let spec = HilbertSpec::new(16, 40).map_err(err)?;
        let psi = analytic_state(0.5, C64::new(1.0, 0.0), &p, &spec).map_err(err)?;
        let rho_m = reduced_mech_state(&psi, &spec).map_err(err)?;
        let rep = squeezing_report(&rho_m);
        let v_oracle = covariance_min_variance(rho_m.matrix());
        let db_oracle = -10.0 * (v_oracle / 0.5).log10();
        let dev = (rep.db - db_oracle).abs();
        Ok((
            dev <= ORACLE_TOL,
            format!(
                "t = 0.5, g = 0.08, alpha = 1: {:.6} dB (vacuum variance 1/2), covariance oracle {db_oracle:.6} dB, deviation {dev:.1e} (tol {ORACLE_TOL:e}); reference value {REFERENCE_DB} dB, agreement not required",
                rep.db
            ),
        ))
    })();
    out.push(Line {
        name: "unconditioned squeezing matches the covariance oracle",
        outcome: unconditioned,
    });
    out
}

fn floquet_gaps_open() -> Checked {
    const GAP_FLOOR: f64 = 1e-4;
    const METHOD_TOL: f64 = 1e-6;
    let spec = HilbertSpec::new(6, 16).map_err(err)?;
    let p = ModelParams {
        omega0: 2.0,
        drive: 1.0,
        ..closed(0.0)
    };
    let report = floquet_spectrum(&p, &spec, &FloquetSweep::default()).map_err(err)?;
    let dn1: Vec<_> = report.gaps.iter().filter(|g| g.delta_n == 1).collect();
    let closed_ones: Vec<String> = dn1
        .iter()
        .filter(|g| g.gap < GAP_FLOOR)
        .map(|g| {
            let c = g.crossing;
            format!(
                "({},{})/({},{}) at g* = {:.4}: {:.2e}{}",
                c.k,
                c.n,
                c.k2,
                c.n2,
                c.g_star,
                g.gap,
                if g.same_parity { "" } else { " [opposite phonon parity]" }
            )
        })
        .collect();
    let min = dn1.iter().map(|g| g.gap).fold(f64::INFINITY, f64::min);
    Ok((
        !dn1.is_empty() && closed_ones.is_empty() && report.max_method_deviation <= METHOD_TOL,
        format!(
            "E = 1, g in [0, 1]: {} delta-n = 1 crossings, min gap {min:.3e} (floor {GAP_FLOOR:e}); method deviation {:.2e} (tol {METHOD_TOL:e}){}",
            dn1.len(),
            report.max_method_deviation,
            if closed_ones.is_empty() {
                String::new()
            } else {
                format!("; below floor: {}", closed_ones.join("; "))
            }
        ),
    ))
}

/// The CLI binary built next to this test executable.
fn cli_binary() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?;
    let bin = dir.join(format!("quadmech{}", std::env::consts::EXE_SUFFIX));
    bin.exists().then_some(bin)
}

fn output_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map(|d| {
            d.filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| n != "manifest.json")
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
        .into_iter()
        .map(|n| {
            let bytes = std::fs::read(dir.join(&n)).unwrap_or_default();
            (n, bytes)
        })
        .collect()
}

fn determinism() -> Checked {
    let bin = cli_binary().ok_or("quadmech binary not built next to the test executable")?;
    let root = std::env::temp_dir().join(format!("quadmech-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&root).map_err(err)?;
    let runs: [(&str, &str, &[&str]); 8] = [
        ("squeezeparam", "", &[]),
        ("spectrum", "[sweep]\ng_points = 21\n", &[]),
        (
            "floquet",
            "[model]\ndrive = 0.3\n[hilbert]\nn_cav = 4\nn_mech = 8\n[sweep]\ng_max = 0.5\nfloquet_g_points = 2\nk_max = 2\nlabel_n_max = 1\ngap_points = 5\n",
            &[],
        ),
        (
            "evolve",
            "[model]\ng = 0.08\n[hilbert]\nn_cav = 16\nn_mech = 30\n[grid]\nt_end = 2.0\nn_steps = 10\n[output]\nwigner_times = [0.5]\nwigner_points = 21\n",
            &["--oracle"],
        ),
        (
            "lindblad",
            "[model]\ng = 0.08\nalpha = 0.1\ngamma_m = 1e-3\nnbar_m = 3.0\n[hilbert]\nn_cav = 4\nn_mech = 20\n[grid]\nt_end = 1.0\nn_steps = 5\n[output]\nwigner_times = [1.0]\nwigner_points = 21\n",
            &[],
        ),
        (
            "condition",
            "[model]\ng = 0.08\n[hilbert]\nn_cav = 16\nn_mech = 40\n[sweep]\nphoton_numbers = [1, 2]\n",
            &[],
        ),
        ("dressed", "[model]\ng = 0.08\n[hilbert]\nn_cav = 4\nn_mech = 80\n", &[]),
        ("mandel", "", &[]),
    ];
    let mut differing = Vec::new();
    let mut compared = 0;
    for (cmd, cfg, extra) in runs {
        let cfg_path = root.join(format!("{cmd}.toml"));
        std::fs::write(&cfg_path, cfg).map_err(err)?;
        let mut outputs = Vec::new();
        for (rep, workers) in [(0, "1"), (1, "2")] {
            let out = root.join(format!("{cmd}-{rep}"));
            let status = Command::new(&bin)
                .arg(cmd)
                .arg("--config")
                .arg(&cfg_path)
                .arg("--out")
                .arg(&out)
                .args(["--workers", workers])
                .args(extra)
                .env_remove("QUADMECH_OUT_DIR")
                .output()
                .map_err(err)?;
            if !status.status.success() {
                let _ = std::fs::remove_dir_all(&root);
                return Err(format!(
                    "{cmd} exited with {:?}: {}",
                    status.status.code(),
                    String::from_utf8_lossy(&status.stderr).trim()
                ));
            }
            outputs.push(output_files(&out));
        }
        compared += outputs[0].len();
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            differing.push(cmd);
        }
    }
    let _ = std::fs::remove_dir_all(&root);
    Ok((
        differing.is_empty(),
        format!(
            "8 subcommands run twice (1 and 2 workers), {compared} output files compared byte for byte{}",
            if differing.is_empty() {
                String::new()
            } else {
                format!("; differing: {}", differing.join(", "))
            }
        ),
    ))
}

fn emit(lines: Vec<Line>, failed: &mut usize, total: &mut usize) {
    use std::io::Write;
    for l in lines {
        let (tag, detail) = match l.outcome {
            Ok((true, d)) => ("PASS", d),
            Ok((false, d)) => ("FAIL", d),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        *total += 1;
        if tag == "FAIL" {
            *failed += 1;
        }
        println!("{tag} {}: {detail}", l.name);
    }
    let _ = std::io::stdout().flush();
}

fn main() {
    let (mut failed, mut total) = (0, 0);
    emit(lines_of("eigen-system exactness", eigensystem_exactness()), &mut failed, &mut total);
    emit(lines_of("propagator oracle", propagator_oracle()), &mut failed, &mut total);
    emit(lines_of("phonon statistics", phonon_statistics()), &mut failed, &mut total);
    emit(lines_of("entanglement persistence", entanglement_persistence()), &mut failed, &mut total);
    emit(lines_of("weak-field phonon scale", weak_field_phonon_scale()), &mut failed, &mut total);
    emit(lines_of("Mandel trajectory", mandel_trajectory()), &mut failed, &mut total);
    emit(lines_of("dissipative thermalization", thermalization()), &mut failed, &mut total);
    emit(squeezing(), &mut failed, &mut total);
    emit(
        lines_of("driven gaps at delta-n = 1 crossings", floquet_gaps_open()),
        &mut failed,
        &mut total,
    );
    emit(lines_of("determinism", determinism()), &mut failed, &mut total);
    println!("acceptance: {} passed, {failed} failed", total - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
