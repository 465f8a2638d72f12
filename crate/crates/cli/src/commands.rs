//! Subcommands. Each one turns a configuration and a truncation into a set
//! of output files plus the scalar observables used for the truncation
//! drift check.

use clap::ValueEnum;
use quadmech::dynamics::sector::optimal_time;
use quadmech::dynamics::{
    analytic_state, assemble_report, evolve_closed_numeric, floquet_gaps, floquet_slice,
    integrate_master, sector_phase, spectrum_sweep,
};
use quadmech::model::{build_h_q, build_number_conserving, dressed_state, eigenvalue, squeeze_param_r};
use quadmech::observables::{
    axis, condition_on_photon_number, entanglement_entropy, mandel_q, phonon_moments,
    phonon_moments_eigenstate, phonon_moments_pure, poissonian_r, reduced_mech_state,
    squeezed_number_moments, squeezing_report, WignerEvaluator, WignerField,
};
use quadmech::{DensityMatrix, Error, HilbertSpec, StateVector, C64};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::output::{float, Csv};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Squeezing parameter r(n) against photon number.
    Squeezeparam,
    /// Closed-form spectrum against the coupling, with level crossings.
    Spectrum,
    /// Quasi-energies of the driven system and gaps at undriven crossings.
    Floquet,
    /// Closed-system evolution from |0>|alpha>, optional Wigner grids.
    Evolve,
    /// Master-equation evolution from |0>|alpha>, optional Wigner grids.
    Lindblad,
    /// Squeezing of the mechanics after a photon-number measurement.
    Condition,
    /// Dressed eigenstates checked against the Hamiltonian.
    Dressed,
    /// Phonon statistics of the dressed eigenstates.
    Mandel,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Squeezeparam => "squeezeparam",
            Command::Spectrum => "spectrum",
            Command::Floquet => "floquet",
            Command::Evolve => "evolve",
            Command::Lindblad => "lindblad",
            Command::Condition => "condition",
            Command::Dressed => "dressed",
            Command::Mandel => "mandel",
        }
    }
}

/// Why a subcommand stopped, mapped onto the exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Precondition(String),
    Degenerate(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Precondition(_) => 3,
            Failure::Degenerate(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Precondition(m) | Failure::Degenerate(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidDimension(_)
            | Error::DimensionMismatch { .. }
            | Error::NonFinite(_)
            | Error::InvalidParameter(_)
            | Error::LabelOutOfRange(_) => Failure::Config(msg),
            Error::ZeroProbability(_) => Failure::Degenerate(msg),
            Error::TruncationInsufficient { .. }
            | Error::NotHermitian(_)
            | Error::NotNormalized(_)
            | Error::StepTooLarge { .. }
            | Error::InvalidDensityMatrix(_)
            | Error::Numerical(_) => Failure::Precondition(msg),
        }
    }
}

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub pool: &'a rayon::ThreadPool,
    pub oracle: bool,
}

#[derive(Debug, Default)]
pub struct Product {
    /// `(file name, contents)` in a fixed order.
    pub files: Vec<(String, Vec<u8>)>,
    /// Scalars compared across truncations.
    pub observables: Vec<f64>,
    pub checks: Map<String, Value>,
    pub notes: Vec<String>,
}

impl Product {
    fn file(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn check(&mut self, key: &str, value: impl Serialize) {
        self.checks.insert(key.into(), json!(value));
    }
}

pub fn run(cmd: Command, ctx: &Ctx, spec: &HilbertSpec) -> Result<Product, Failure> {
    match cmd {
        Command::Squeezeparam => squeezeparam(ctx),
        Command::Spectrum => spectrum(ctx),
        Command::Floquet => floquet(ctx, spec),
        Command::Evolve => evolve(ctx, spec),
        Command::Lindblad => lindblad(ctx, spec),
        Command::Condition => condition(ctx, spec),
        Command::Dressed => dressed(ctx, spec),
        Command::Mandel => mandel(ctx),
    }
}

fn squeezeparam(ctx: &Ctx) -> Result<Product, Failure> {
    let g = ctx.cfg.model.params()?.g;
    let mut out = Product::default();
    let mut csv = Csv::new(&["n", "r"]);
    for n in 0..=ctx.cfg.sweep.n_max {
        let r = squeeze_param_r(n, g)?;
        csv.row(&[n.to_string(), float(r)]);
        out.observables.push(r);
    }
    out.file("squeezeparam.csv", csv.into_bytes());
    Ok(out)
}

fn spectrum(ctx: &Ctx) -> Result<Product, Failure> {
    let p = ctx.cfg.model.params()?;
    let s = &ctx.cfg.sweep;
    let table = spectrum_sweep(&p, &s.g_values(s.g_points)?, s.k_max, s.label_n_max)?;
    let mut out = Product::default();
    let mut csv = Csv::new(&["g", "k", "n", "energy"]);
    for r in &table.rows {
        csv.row(&[float(r.g), r.k.to_string(), r.n.to_string(), float(r.energy)]);
        out.observables.push(r.energy);
    }
    let mut cx = Csv::new(&["k", "n", "k2", "n2", "g_star", "energy"]);
    for c in &table.crossings {
        cx.row(&[
            c.k.to_string(),
            c.n.to_string(),
            c.k2.to_string(),
            c.n2.to_string(),
            float(c.g_star),
            float(c.energy),
        ]);
    }
    out.check("crossings", table.crossings.len());
    out.file("spectrum.csv", csv.into_bytes());
    out.file("crossings.csv", cx.into_bytes());
    Ok(out)
}

fn floquet(ctx: &Ctx, spec: &HilbertSpec) -> Result<Product, Failure> {
    let p = ctx.cfg.model.params()?;
    let sweep = ctx.cfg.sweep.floquet()?;
    let slices = ctx.pool.install(|| {
        sweep
            .g_values
            .par_iter()
            .map(|&g| floquet_slice(&p, spec, g, sweep.steps_per_period))
            .collect::<quadmech::Result<Vec<_>>>()
    })?;
    let gaps = floquet_gaps(&p, spec, &sweep)?;
    let report = assemble_report(slices, gaps);

    let mut out = Product::default();
    let mut csv = Csv::new(&["g", "parity", "energy", "eps_a", "eps_b", "deviation"]);
    for r in &report.rows {
        csv.row(&[
            float(r.g),
            r.parity.to_string(),
            float(r.energy),
            float(r.eps_a),
            float(r.eps_b),
            float(r.deviation),
        ]);
    }
    let mut gx = Csv::new(&[
        "k", "n", "k2", "n2", "g_star", "delta_n", "same_parity", "gap", "g_at_min",
    ]);
    let mut min_dn1: Option<f64> = None;
    for gr in &report.gaps {
        let c = &gr.crossing;
        gx.row(&[
            c.k.to_string(),
            c.n.to_string(),
            c.k2.to_string(),
            c.n2.to_string(),
            float(c.g_star),
            gr.delta_n.to_string(),
            gr.same_parity.to_string(),
            float(gr.gap),
            float(gr.g_at_min),
        ]);
        if gr.delta_n == 1 {
            min_dn1 = Some(min_dn1.map_or(gr.gap, |m| m.min(gr.gap)));
        }
        // Opposite-parity separations vanish up to rounding, so they carry
        // no truncation information.
        if gr.same_parity {
            out.observables.push(gr.gap);
        }
    }
    out.check("max_method_deviation", report.max_method_deviation);
    out.check("methods_agree", report.methods_agree());
    out.check("max_unitarity_defect", report.max_unitarity_defect);
    out.check("degenerate_quasi_energies", &report.degenerate);
    out.check("min_gap_delta_n_1", min_dn1);
    out.file("floquet.csv", csv.into_bytes());
    out.file("gaps.csv", gx.into_bytes());
    if !report.methods_agree() {
        return Err(Failure::Precondition(format!(
            "quasi-energy methods disagree by {:.3e} (limit {:e})",
            report.max_method_deviation,
            quadmech::dynamics::floquet::METHOD_TOL
        )));
    }
    Ok(out)
}

/// Wigner grid of `rho_m` on the configured square, columns in parallel.
fn wigner_csv(ctx: &Ctx, rho_m: &DensityMatrix) -> Result<(Vec<u8>, WignerField), Failure> {
    let o = &ctx.cfg.output;
    if !(o.wigner_extent.is_finite() && o.wigner_extent > 0.0) {
        return Err(Failure::Config(format!("wigner_extent = {}", o.wigner_extent)));
    }
    let q = axis(-o.wigner_extent, o.wigner_extent, o.wigner_points)?;
    let p = q.clone();
    let columns: Vec<Vec<f64>> = ctx.pool.install(|| {
        q.par_iter()
            .map(|&qi| {
                let mut ev = WignerEvaluator::new(rho_m);
                p.iter().map(|&pj| ev.at(qi, pj)).collect()
            })
            .collect()
    });
    let field = WignerField::from_columns(q, p, columns)?;
    let mut bytes = Vec::new();
    field
        .write_csv(&mut bytes)
        .map_err(|e| Failure::Io(e.to_string()))?;
    Ok((bytes, field))
}

fn wigner_name(t: f64) -> String {
    format!("wigner_t{t}.csv")
}

fn note_wigner(out: &mut Product, t: f64, field: &WignerField) {
    if let Some(w) = &field.warning {
        out.notes.push(format!("wigner at t = {t}: {w}"));
    }
}

#[derive(Clone, Copy)]
struct ClosedSample {
    mean: f64,
    q: f64,
    entropy: f64,
    v_min: f64,
    db: f64,
}

fn evolve(ctx: &Ctx, spec: &HilbertSpec) -> Result<Product, Failure> {
    let m = &ctx.cfg.model;
    let p = m.closed_params()?;
    let alpha = m.alpha()?;
    let grid = ctx.cfg.grid.grid()?;
    let times = grid.times();
    let mut out = Product::default();
    let full = m.params()?;
    if full.gamma_o != 0.0 || full.gamma_m != 0.0 || full.drive != 0.0 {
        out.notes
            .push("evolve is closed-system: drive and dissipation rates are ignored".into());
    }

    let samples = ctx.pool.install(|| {
        times
            .par_iter()
            .map(|&t| {
                let psi = analytic_state(t, alpha, &p, spec)?;
                let (mean, second) = phonon_moments_pure(&psi, spec)?;
                let rho_m = reduced_mech_state(&psi, spec)?;
                let sq = squeezing_report(&rho_m);
                Ok(ClosedSample {
                    mean,
                    q: mandel_q(mean, second),
                    entropy: entanglement_entropy(&psi, spec)?,
                    v_min: sq.v_min,
                    db: sq.db,
                })
            })
            .collect::<quadmech::Result<Vec<_>>>()
    })?;

    let fidelity = if ctx.oracle {
        let psi0 = analytic_state(0.0, alpha, &p, spec)?;
        let h = build_number_conserving(0.0, p.g, spec)?;
        let numeric = evolve_closed_numeric(&psi0, &grid, &h, spec)?;
        let f = ctx.pool.install(|| {
            times
                .par_iter()
                .zip(numeric.states.par_iter())
                .map(|(&t, phi)| analytic_state(t, alpha, &p, spec)?.fidelity(phi))
                .collect::<quadmech::Result<Vec<_>>>()
        })?;
        out.check("oracle_min_fidelity", f.iter().copied().fold(1.0, f64::min));
        out.check("oracle_integrator", &numeric.meta.integrator);
        Some(f)
    } else {
        None
    };

    let mut header = vec!["t", "mean_phonons", "mandel_q", "entropy", "v_min", "db"];
    if fidelity.is_some() {
        header.push("fidelity");
    }
    let mut csv = Csv::new(&header);
    for (i, (&t, s)) in times.iter().zip(&samples).enumerate() {
        let mut row = vec![float(t), float(s.mean), float(s.q), float(s.entropy), float(s.v_min), float(s.db)];
        if let Some(f) = &fidelity {
            row.push(float(f[i]));
        }
        csv.row(&row);
        out.observables.extend([s.mean, s.q, s.entropy, s.v_min]);
    }
    out.check(
        "max_mean_phonons",
        samples.iter().map(|s| s.mean).fold(f64::NEG_INFINITY, f64::max),
    );
    out.check(
        "min_entropy_after_start",
        samples.iter().skip(1).map(|s| s.entropy).fold(f64::INFINITY, f64::min),
    );
    out.file("evolve.csv", csv.into_bytes());

    for &t in &ctx.cfg.output.wigner_times {
        let psi = analytic_state(t, alpha, &p, spec)?;
        let rho_m = reduced_mech_state(&psi, spec)?;
        let (bytes, field) = wigner_csv(ctx, &rho_m)?;
        note_wigner(&mut out, t, &field);
        out.file(wigner_name(t), bytes);
    }
    Ok(out)
}

/// Largest coherent-state tail beyond `n_cav` that `lindblad` renormalizes.
pub const INITIAL_TAIL_TOL: f64 = 1e-6;

fn lindblad(ctx: &Ctx, spec: &HilbertSpec) -> Result<Product, Failure> {
    let m = &ctx.cfg.model;
    let p = m.params()?;
    let alpha = m.alpha()?;
    let grid = ctx.cfg.grid.grid()?;
    // The photon tail cut off by n_cav is renormalized away rather than
    // refused at the closed-system tolerance; a few photon levels suffice
    // for weak fields.
    let mut cav = StateVector::coherent(spec.n_cav(), alpha)?;
    let photon_tail = (1.0 - cav.norm().powi(2)).max(0.0);
    if photon_tail > INITIAL_TAIL_TOL {
        return Err(Failure::Precondition(format!(
            "truncation insufficient in photon number >= {}: coherent tail {photon_tail:.3e} exceeds {INITIAL_TAIL_TOL:e}",
            spec.n_cav()
        )));
    }
    cav.normalize()?;
    let mech = StateVector::basis(spec.n_mech(), 0)?;
    let rho0 = StateVector::product(&mech, &cav, spec)?.to_density();
    let traj = integrate_master(&rho0, &grid, &p, spec, &ctx.cfg.sweep.master())?;

    let rows = ctx.pool.install(|| {
        traj.states
            .par_iter()
            .map(|rho| {
                let rho_m = reduced_mech_state(rho, spec)?;
                let (mean, second) = phonon_moments(&rho_m);
                let sq = squeezing_report(&rho_m);
                Ok([mean, mandel_q(mean, second), rho.trace().re, sq.v_min, sq.db])
            })
            .collect::<quadmech::Result<Vec<_>>>()
    })?;

    let mut out = Product::default();
    let mut csv = Csv::new(&["t", "mean_phonons", "mandel_q", "trace", "v_min", "db"]);
    let mut trace_dev = 0.0f64;
    for (&t, r) in traj.times.iter().zip(&rows) {
        csv.row(&[float(t), float(r[0]), float(r[1]), float(r[2]), float(r[3]), float(r[4])]);
        trace_dev = trace_dev.max((r[2] - 1.0).abs());
        out.observables.extend([r[0], r[1], r[3]]);
    }
    out.check("max_trace_deviation", trace_dev);
    out.check("initial_photon_tail", photon_tail);
    out.check("nbar_m", p.thermal_nbar()?);
    out.check("integrator", &traj.meta.integrator);
    out.check("step", traj.meta.step);
    out.check("min_eigenvalue", traj.meta.min_eigenvalue);
    out.check("max_hermiticity_correction", traj.meta.max_hermiticity_correction);
    out.notes.extend(traj.meta.warnings.iter().cloned());
    out.file("lindblad.csv", csv.into_bytes());

    for &t in &ctx.cfg.output.wigner_times {
        let (i, &ts) = traj
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .expect("grid has samples");
        if ts != t {
            out.notes
                .push(format!("wigner time {t} taken at nearest grid sample {ts}"));
        }
        let rho_m = reduced_mech_state(&traj.states[i], spec)?;
        let (bytes, field) = wigner_csv(ctx, &rho_m)?;
        note_wigner(&mut out, ts, &field);
        out.file(wigner_name(ts), bytes);
    }
    Ok(out)
}

fn unsigned_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

#[derive(Serialize)]
struct ConditionRecord {
    n: usize,
    t: f64,
    optimal: bool,
    probability: f64,
    xi_re: f64,
    xi_im: f64,
    xi_abs: f64,
    v_min: f64,
    theta_min: f64,
    db: f64,
    /// `20 log10(e) |xi|`, the squeezing of the ideal squeezed vacuum.
    predicted_db: f64,
}

#[derive(Serialize)]
struct ProbabilitySum {
    t: f64,
    sum: f64,
    deviation: f64,
}

fn condition(ctx: &Ctx, spec: &HilbertSpec) -> Result<Product, Failure> {
    let m = &ctx.cfg.model;
    let s = &ctx.cfg.sweep;
    let p = m.closed_params()?;
    let alpha = m.alpha()?;

    let mut requests: Vec<(usize, f64, bool)> = Vec::new();
    for &n in &s.photon_numbers {
        for &t in &s.condition_times {
            requests.push((n, t, false));
        }
        if s.condition_optimal {
            requests.push((n, optimal_time(n, p.g)?, true));
        }
    }
    if requests.is_empty() {
        return Err(Failure::Config("condition needs photon_numbers and times".into()));
    }

    let mut times: Vec<f64> = requests.iter().map(|r| r.1).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let states = ctx.pool.install(|| {
        times
            .par_iter()
            .map(|&t| analytic_state(t, alpha, &p, spec))
            .collect::<quadmech::Result<Vec<_>>>()
    })?;
    let state_at = |t: f64| &states[times.partition_point(|&x| x < t)];

    let records = ctx.pool.install(|| {
        requests
            .par_iter()
            .map(|&(n, t, optimal)| {
                let (mech, probability) = condition_on_photon_number(state_at(t), n, spec)?;
                let sq = squeezing_report(&DensityMatrix::pure(&mech));
                let xi = sector_phase(n, t, &p)?.xi;
                Ok(ConditionRecord {
                    n,
                    t,
                    optimal,
                    probability,
                    xi_re: unsigned_zero(xi.re),
                    xi_im: unsigned_zero(xi.im),
                    xi_abs: xi.norm(),
                    v_min: sq.v_min,
                    theta_min: unsigned_zero(sq.theta_min),
                    db: unsigned_zero(sq.db),
                    predicted_db: 20.0 * std::f64::consts::E.log10() * xi.norm(),
                })
            })
            .collect::<quadmech::Result<Vec<_>>>()
    })?;

    let sums: Vec<ProbabilitySum> = times
        .iter()
        .zip(&states)
        .map(|(&t, psi)| {
            let sum = psi.norm().powi(2);
            ProbabilitySum {
                t,
                sum,
                deviation: (sum - 1.0).abs(),
            }
        })
        .collect();

    let mut out = Product::default();
    for r in &records {
        out.observables.extend([r.probability, r.v_min]);
    }
    out.check(
        "max_probability_sum_deviation",
        sums.iter().map(|s| s.deviation).fold(0.0, f64::max),
    );
    let doc = json!({ "records": records, "probability_sums": sums });
    let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| Failure::Io(e.to_string()))?;
    bytes.push(b'\n');
    out.file("condition.json", bytes);
    Ok(out)
}

fn dressed(ctx: &Ctx, spec: &HilbertSpec) -> Result<Product, Failure> {
    let m = &ctx.cfg.model;
    let s = &ctx.cfg.sweep;
    let p = m.closed_params()?;
    let h = build_h_q(&p, spec)?;
    let labels: Vec<(usize, usize)> = (0..=s.label_n_max)
        .flat_map(|n| (0..=s.k_max).map(move |k| (k, n)))
        .collect();

    let states = ctx.pool.install(|| {
        labels
            .par_iter()
            .map(|&(k, n)| dressed_state(k, n, &p, spec))
            .collect::<quadmech::Result<Vec<_>>>()
    })?;

    let mut out = Product::default();
    let mut csv = Csv::new(&["k", "n", "r", "energy", "expectation", "residual"]);
    let mut worst = 0.0f64;
    for (&(k, n), psi) in labels.iter().zip(&states) {
        let e = eigenvalue(k, n, &p)?;
        let hpsi = h.apply(psi)?;
        let expectation = psi.inner(&hpsi)?.re;
        let diff = hpsi.amplitudes() - psi.amplitudes() * C64::new(e, 0.0);
        let residual = diff.norm() / e.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(residual);
        csv.row(&[
            k.to_string(),
            n.to_string(),
            float(squeeze_param_r(n, p.g)?),
            float(e),
            float(expectation),
            float(residual),
        ]);
        out.observables.push(expectation);
    }
    let mut gram = 0.0f64;
    for (i, a) in states.iter().enumerate() {
        for (j, b) in states.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            gram = gram.max((a.inner(b)? - C64::new(target, 0.0)).norm());
        }
    }
    out.check("max_residual", worst);
    out.check("max_gram_deviation", gram);
    out.file("dressed.csv", csv.into_bytes());
    Ok(out)
}

fn mandel(ctx: &Ctx) -> Result<Product, Failure> {
    let s = &ctx.cfg.sweep;
    let p = ctx.cfg.model.closed_params()?;
    let mut out = Product::default();
    let mut csv = Csv::new(&["k", "n", "r", "mean_phonons", "second_moment", "mandel_q"]);
    for n in 0..=s.label_n_max {
        for k in 0..=s.k_max {
            let (mean, second) = phonon_moments_eigenstate(k, n, &p)?;
            let q = mandel_q(mean, second);
            csv.row(&[
                k.to_string(),
                n.to_string(),
                float(squeeze_param_r(n, p.g)?),
                float(mean),
                float(second),
                float(q),
            ]);
            out.observables.push(q);
        }
    }
    let mut roots = Csv::new(&["k", "r_poissonian", "mandel_q"]);
    for k in 1..=s.k_max {
        let r = poissonian_r(k);
        let (mean, second) = squeezed_number_moments(k, r);
        roots.row(&[k.to_string(), float(r), float(mandel_q(mean, second))]);
    }
    out.file("mandel.csv", csv.into_bytes());
    out.file("poissonian.csv", roots.into_bytes());
    Ok(out)
}
