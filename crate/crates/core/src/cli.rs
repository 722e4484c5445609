//! Subcommands `synthesize`, `simulate`, `verify` and `sweep`.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 controllability
//! violation, 3 instability guard, 4 failed verification.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ControllerConfig, ExperimentConfig, Format, ProblemBlock};
use crate::controller::{certify, gauge_transform, tau_coeffs, ControllerSpec, GrowthCertificate};
use crate::error::{Error, Result};
use crate::feedback::{split_f, synth_f, FeedbackLaw};
use crate::output::{fmt_f64, json_document, matrix_text, write_atomic, Stamp, Table};
use crate::simulate::{
    closed_loop_galerkin, conjugate_trajectory, decay_fit, decay_prefactor, lyapunov_lower_bound,
    random_domain_state, target_trajectory, DecayFit, Method, SimConfig, Trajectory,
};
use crate::spectral::{eval_at, sobolev_norm, FourierVector};
use crate::transform::BacksteppingTransform;
use crate::verify::{run_suite, CertificationReport, SuiteConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_CONTROLLABILITY: i32 = 2;
pub const EXIT_UNSTABLE: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "backstep", version, about = "Backstepping feedback for the periodic transport equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Growth certificate, feedback coefficients, gain and split diagnostics.
    Synthesize(CommonArgs),
    /// Target, conjugation and Galerkin trajectories with decay diagnostics.
    Simulate(CommonArgs),
    /// Full certification suite.
    Verify(CommonArgs),
    /// Parameter grid over (λ, N, dt, controller).
    Sweep(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

/// A loaded configuration with overrides applied.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub stamp: Stamp,
}

impl Experiment {
    pub fn new(mut config: ExperimentConfig, out_dir: Option<PathBuf>, seed: Option<u64>, jobs: usize) -> Self {
        if let Some(s) = seed {
            config.numerics.seed = s;
        }
        let out_dir = out_dir.unwrap_or_else(|| PathBuf::from(&config.outputs.directory));
        let stamp = Stamp::new(config.hash());
        Self {
            config,
            out_dir,
            jobs: jobs.max(1),
            stamp,
        }
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        write_atomic(&self.out_dir, name, contents)
    }

    fn wants(&self, f: Format) -> bool {
        self.config.outputs.wants(f)
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ControllabilityViolation { .. } | Error::DegenerateJumps => EXIT_CONTROLLABILITY,
        Error::Unstable { .. } => EXIT_UNSTABLE,
        _ => EXIT_CONFIG,
    }
}

/// Everything derived from the problem block for one `(controller, λ, N)`.
pub struct Setup {
    pub spec: ControllerSpec,
    /// Mean of the potential, the damping of the normalized system.
    pub mu: f64,
    pub phi: FourierVector,
    pub certificate: GrowthCertificate,
    pub law: FeedbackLaw,
    pub transform: BacksteppingTransform,
}

pub fn build_setup(
    problem: &ProblemBlock,
    controller: &ControllerConfig,
    lambda: f64,
    n_work: usize,
    margin: usize,
) -> Result<Setup> {
    let base = controller.build(problem.period, problem.m)?;
    let (spec, mu) = if problem.a.is_zero() {
        (base, 0.0)
    } else {
        let g = gauge_transform(&problem.a.build(problem.period)?, &base, n_work, 8)?;
        (ControllerSpec::Raw { coeffs: g.phi }, g.mu)
    };
    let (phi, certificate) = certify(&spec, problem.m, n_work)?;
    let law = synth_f(&phi, lambda, problem.m)?;
    let transform = BacksteppingTransform::new(&phi, &law, n_work, margin)?;
    Ok(Setup {
        spec,
        mu,
        phi,
        certificate,
        law,
        transform,
    })
}

fn main_setup(exp: &Experiment) -> Result<Setup> {
    let c = &exp.config;
    build_setup(
        &c.problem,
        &c.problem.controller,
        c.problem.lambda,
        c.numerics.n_work(),
        c.numerics.margin,
    )
}

#[derive(Serialize)]
struct SplitSummary {
    jump_min: f64,
    jump_max: f64,
    regular_block_energy: Vec<f64>,
}

#[derive(Serialize)]
struct SynthesisSummary<'a> {
    #[serde(rename = "L")]
    period: f64,
    m: u32,
    lambda: f64,
    mu: f64,
    gain: f64,
    n_work: usize,
    certificate: &'a GrowthCertificate,
    feedback_growth: (f64, f64),
    forward_bound: f64,
    inverse_bound: f64,
    decay_prefactor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lyapunov_lower_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    split: Option<SplitSummary>,
}

pub fn cmd_synthesize(exp: &Experiment) -> Result<Vec<PathBuf>> {
    let setup = main_setup(exp)?;
    let c = &exp.config;
    let mut files = vec![];
    let mut split_table = None;
    let split = if let ControllerSpec::PiecewisePoly(_) = &setup.spec {
        let tau = tau_coeffs(&setup.spec, c.problem.m, c.numerics.n_work())?;
        let split = split_f(&setup.law, &tau)?;
        let mut t = Table::new(["n", "regular_re", "regular_im", "singular_re", "singular_im"]);
        for (n, r) in split.regular.iter() {
            let h = split.singular.coefficient(n);
            t.push(vec![n.to_string(), fmt_f64(r.re), fmt_f64(r.im), fmt_f64(h.re), fmt_f64(h.im)]);
        }
        split_table = Some(t);
        Some(SplitSummary {
            jump_min: tau.lower,
            jump_max: tau.upper,
            regular_block_energy: split.regular_block_energy(),
        })
    } else {
        None
    };
    let summary = SynthesisSummary {
        period: c.problem.period,
        m: c.problem.m,
        lambda: c.problem.lambda,
        mu: setup.mu,
        gain: setup.law.gain(),
        n_work: c.numerics.n_work(),
        certificate: &setup.certificate,
        feedback_growth: setup.law.growth()?,
        forward_bound: setup.transform.forward_bound(),
        inverse_bound: setup.transform.inverse_bound(),
        decay_prefactor: decay_prefactor(&setup.transform),
        lyapunov_lower_bound: (c.problem.m == 1).then(|| lyapunov_lower_bound(&setup.transform)),
        split,
    };
    if exp.wants(Format::Json) {
        files.push(exp.write("synthesis.json", &json_document(&exp.stamp, &summary)?)?);
    }
    if exp.wants(Format::Csv) {
        files.push(exp.write("feedback.csv", &setup.law.table().to_csv(&exp.stamp))?);
        if let Some(t) = &split_table {
            files.push(exp.write("split.csv", &t.to_csv(&exp.stamp))?);
        }
    }
    if exp.wants(Format::Txt) {
        let cert = &setup.certificate;
        let text = format!(
            "# {} config_hash={}\nK = {}\nc = {} (mode {})\nC = {} (mode {})\nF_0 = {}\nforward bound = {}\ninverse bound = {}\ndecay prefactor = {}\n",
            exp.stamp.version,
            exp.stamp.config_hash,
            fmt_f64(summary.gain),
            fmt_f64(cert.c),
            cert.argmin,
            fmt_f64(cert.big_c),
            cert.argmax,
            fmt_f64(setup.law.coeffs().get(0).re),
            fmt_f64(summary.forward_bound),
            fmt_f64(summary.inverse_bound),
            fmt_f64(summary.decay_prefactor),
        );
        files.push(exp.write("synthesis.txt", &text)?);
        let g = c.outputs.kernel_grid;
        if g > 0 {
            let grid = setup.transform.kernel_grid(g, g)?;
            files.push(exp.write("kernel_re.txt", &matrix_text(&exp.stamp, &grid.real_part(), grid.period))?);
            files.push(exp.write("kernel_im.txt", &matrix_text(&exp.stamp, &grid.imag_part(), grid.period))?);
        }
    }
    Ok(files)
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<DecayFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_rel_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodAgreement {
    /// `max_t ‖α_G(t) − α_C(t)‖_m / ‖α0‖_m`.
    pub relative_to_initial: f64,
    /// `max_t ‖α_G(t) − α_C(t)‖_m / ‖α_C(t)‖_m`.
    pub pointwise: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationSummary {
    pub lambda_prime: f64,
    pub initial_norm: f64,
    pub methods: Vec<MethodSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<MethodAgreement>,
}

pub fn sim_config(exp: &ExperimentConfig, lambda: f64, mu: f64, bandwidth: usize, dt: f64) -> SimConfig {
    SimConfig {
        period: exp.problem.period,
        order: exp.problem.m,
        lambda,
        mu,
        final_time: exp.numerics.final_time,
        dt,
        bandwidth,
        sample_every: exp.simulation.sample_every,
    }
}

pub fn method_agreement(galerkin: &Trajectory, conj: &Trajectory) -> Result<MethodAgreement> {
    let s = galerkin.order as f64;
    let n0 = conj.norms[0].max(f64::MIN_POSITIVE);
    let (mut rel0, mut pointwise) = (0.0f64, 0.0f64);
    for (g, c) in galerkin.states.iter().zip(&conj.states) {
        let d = sobolev_norm(&g.sub(c)?, s);
        rel0 = rel0.max(d / n0);
        pointwise = pointwise.max(d / sobolev_norm(c, s).max(f64::MIN_POSITIVE));
    }
    Ok(MethodAgreement {
        relative_to_initial: rel0,
        pointwise,
    })
}

/// Runs the requested methods from the same initial state.
pub fn run_methods(
    setup: &Setup,
    cfg: &SimConfig,
    alpha0: &FourierVector,
    methods: &[Method],
) -> Result<Vec<Trajectory>> {
    let prefactor = decay_prefactor(&setup.transform);
    let lp = cfg.lambda_prime();
    let n0 = sobolev_norm(alpha0, cfg.order as f64);
    let mut out = vec![];
    for &m in methods {
        let traj = match m {
            Method::Target => target_trajectory(&setup.transform.apply(alpha0)?, cfg)?,
            Method::Conjugation => conjugate_trajectory(alpha0, cfg, &setup.transform, &setup.law)?,
            Method::Galerkin => closed_loop_galerkin(alpha0, cfg, &setup.law, &setup.phi, |t| {
                prefactor * (-lp * t).exp() * n0
            })?,
        };
        out.push(traj);
    }
    Ok(out)
}

fn summarize(traj: &Trajectory, prefactor: f64, lambda_prime: f64) -> MethodSummary {
    match decay_fit(traj, prefactor, lambda_prime) {
        Ok(mut fit) => {
            if traj.method == Method::Target {
                // The bound concerns α, not the target state.
                fit.bound_margin = f64::NAN;
            }
            MethodSummary {
                method: traj.method,
                rate_rel_error: Some((fit.rate - lambda_prime).abs() / lambda_prime),
                fit: Some(fit),
                fit_error: None,
            }
        }
        Err(e) => MethodSummary {
            method: traj.method,
            fit: None,
            rate_rel_error: None,
            fit_error: Some(e.to_string()),
        },
    }
}

pub fn cmd_simulate(exp: &Experiment) -> Result<(SimulationSummary, Vec<PathBuf>)> {
    let c = &exp.config;
    let setup = main_setup(exp)?;
    let cfg = sim_config(c, c.problem.lambda, setup.mu, c.numerics.bandwidth, c.numerics.dt);
    let alpha0 = random_domain_state(&setup.law, c.simulation.degree, c.numerics.seed)?.resized(cfg.bandwidth);
    let mut methods = c.simulation.methods.clone();
    methods.dedup();
    let trajs = run_methods(&setup, &cfg, &alpha0, &methods)?;
    let prefactor = decay_prefactor(&setup.transform);
    let lp = cfg.lambda_prime();
    let find = |m: Method| trajs.iter().find(|t| t.method == m);
    let agreement = match (find(Method::Galerkin), find(Method::Conjugation)) {
        (Some(g), Some(cj)) => Some(method_agreement(g, cj)?),
        _ => None,
    };
    let summary = SimulationSummary {
        lambda_prime: lp,
        initial_norm: sobolev_norm(&alpha0, c.problem.m as f64),
        methods: trajs.iter().map(|t| summarize(t, prefactor, lp)).collect(),
        agreement,
    };

    let mut files = vec![];
    if exp.wants(Format::Csv) {
        for t in &trajs {
            files.push(exp.write(&format!("trajectory_{}.csv", t.method.as_str()), &t.table().to_csv(&exp.stamp))?);
        }
        let times = cfg.sample_times();
        let mut cols = vec!["t".to_string(), "bound".to_string()];
        cols.extend(trajs.iter().map(|t| t.method.as_str().to_string()));
        let mut norms = Table::new(cols);
        let mut cols = vec!["t".to_string()];
        let state_methods: Vec<&Trajectory> = trajs.iter().filter(|t| t.method != Method::Target).collect();
        cols.extend(state_methods.iter().map(|t| t.method.as_str().to_string()));
        let mut margins = Table::new(cols);
        for (i, &t) in times.iter().enumerate() {
            let bound = prefactor * (-lp * t).exp() * summary.initial_norm;
            let mut row = vec![t, bound];
            row.extend(trajs.iter().map(|tr| tr.norms[i]));
            norms.push_numbers(&row);
            let mut row = vec![t];
            row.extend(state_methods.iter().map(|tr| tr.norms[i] / bound));
            margins.push_numbers(&row);
        }
        files.push(exp.write("norms.csv", &norms.to_csv(&exp.stamp))?);
        files.push(exp.write("bound_margin.csv", &margins.to_csv(&exp.stamp))?);
        let k = c.simulation.snapshots;
        if k > 0 {
            for t in &trajs {
                let mut table = Table::new(["t", "n", "re", "im"]);
                for idx in snapshot_indices(t.times.len(), k) {
                    for (n, v) in t.states[idx].iter() {
                        table.push(vec![fmt_f64(t.times[idx]), n.to_string(), fmt_f64(v.re), fmt_f64(v.im)]);
                    }
                }
                files.push(exp.write(&format!("snapshots_{}.csv", t.method.as_str()), &table.to_csv(&exp.stamp))?);
            }
        }
    }
    if exp.wants(Format::Txt) && c.simulation.grid_points > 0 && c.simulation.snapshots > 0 {
        let p = c.simulation.grid_points;
        let l = c.problem.period;
        for t in &trajs {
            let rows: Vec<Vec<f64>> = snapshot_indices(t.times.len(), c.simulation.snapshots)
                .into_iter()
                .map(|idx| (0..p).map(|j| eval_at(&t.states[idx], l * j as f64 / p as f64).re).collect())
                .collect();
            files.push(exp.write(&format!("field_{}.txt", t.method.as_str()), &matrix_text(&exp.stamp, &rows, l))?);
        }
    }
    if exp.wants(Format::Json) {
        files.push(exp.write("simulation.json", &json_document(&exp.stamp, &summary)?)?);
    }
    if exp.wants(Format::Txt) {
        let mut text = format!("# {} config_hash={}\nlambda_prime = {}\n", exp.stamp.version, exp.stamp.config_hash, fmt_f64(lp));
        for m in &summary.methods {
            match (&m.fit, &m.fit_error) {
                (Some(f), _) if m.method == Method::Target => {
                    text.push_str(&format!("target: rate {}\n", fmt_f64(f.rate)))
                }
                (Some(f), _) => text.push_str(&format!(
                    "{}: rate {} bound_margin {}\n",
                    m.method.as_str(),
                    fmt_f64(f.rate),
                    fmt_f64(f.bound_margin)
                )),
                (None, Some(e)) => text.push_str(&format!("{}: {e}\n", m.method.as_str())),
                _ => {}
            }
        }
        if let Some(a) = &summary.agreement {
            text.push_str(&format!(
                "agreement: {} (relative to initial norm), {} (pointwise)\n",
                fmt_f64(a.relative_to_initial),
                fmt_f64(a.pointwise)
            ));
        }
        files.push(exp.write("simulation.txt", &text)?);
    }
    Ok((summary, files))
}

fn snapshot_indices(len: usize, k: usize) -> Vec<usize> {
    if len == 0 {
        return vec![];
    }
    let k = k.min(len);
    if k == 1 {
        return vec![0];
    }
    (0..k).map(|j| j * (len - 1) / (k - 1)).collect()
}

pub fn suite_config(exp: &ExperimentConfig, setup: &Setup) -> SuiteConfig {
    SuiteConfig {
        controller: setup.spec.clone(),
        lambda: exp.problem.lambda,
        m: exp.problem.m,
        mu: setup.mu,
        n_work: exp.numerics.n_work(),
        seed: exp.numerics.seed,
        corrupt_f0: exp.verify.corrupt_f0,
        finitedim: exp.verify.finitedim,
        tolerance: exp.numerics.tolerance,
    }
}

pub fn cmd_verify(exp: &Experiment) -> Result<(CertificationReport, Vec<PathBuf>)> {
    let setup = main_setup(exp)?;
    let report = run_suite(&suite_config(&exp.config, &setup))?;
    let mut files = vec![];
    if exp.wants(Format::Json) {
        files.push(exp.write("report.json", &json_document(&exp.stamp, &report)?)?);
    }
    if exp.wants(Format::Txt) {
        files.push(exp.write("report.txt", &report.to_text(&exp.stamp))?);
    }
    Ok((report, files))
}

/// One grid cell; ordered by `(controller, λ, N, dt)`.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub controller: usize,
    pub kind: &'static str,
    pub lambda: f64,
    pub bandwidth: usize,
    pub dt: f64,
    pub outcome: std::result::Result<CellResult, String>,
    pub runtime: f64,
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub lambda_prime: f64,
    pub rate: f64,
    pub rate_rel_error: f64,
    pub bound_margin: f64,
    pub agreement: f64,
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "controller",
    "kind",
    "lambda",
    "N",
    "dt",
    "status",
    "lambda_prime",
    "rate",
    "rate_rel_error",
    "bound_margin",
    "agreement",
];

fn sweep_cell(c: &ExperimentConfig, ctrl: &ControllerConfig, lambda: f64, bandwidth: usize, dt: f64) -> Result<CellResult> {
    let setup = build_setup(&c.problem, ctrl, lambda, bandwidth * c.numerics.margin, c.numerics.margin)?;
    let cfg = sim_config(c, lambda, setup.mu, bandwidth, dt);
    let alpha0 = random_domain_state(&setup.law, c.simulation.degree.min(bandwidth / 2), c.numerics.seed)?
        .resized(bandwidth);
    let trajs = run_methods(&setup, &cfg, &alpha0, &[Method::Conjugation, Method::Galerkin])?;
    let lp = cfg.lambda_prime();
    let fit = decay_fit(&trajs[0], decay_prefactor(&setup.transform), lp)?;
    let galerkin = decay_fit(&trajs[1], decay_prefactor(&setup.transform), lp)?;
    Ok(CellResult {
        lambda_prime: lp,
        rate: fit.rate,
        rate_rel_error: (fit.rate - lp).abs() / lp,
        bound_margin: fit.bound_margin.max(galerkin.bound_margin),
        agreement: method_agreement(&trajs[1], &trajs[0])?.relative_to_initial,
    })
}

pub fn sweep_rows(c: &ExperimentConfig, jobs: usize) -> Result<Vec<SweepRow>> {
    let sweep = c.sweep.clone().unwrap_or_default();
    let controllers = sweep.controller.unwrap_or_else(|| vec![c.problem.controller.clone()]);
    let lambdas = sweep.lambda.unwrap_or_else(|| vec![c.problem.lambda]);
    let bands = sweep.bandwidth.unwrap_or_else(|| vec![c.numerics.bandwidth]);
    let dts = sweep.dt.unwrap_or_else(|| vec![c.numerics.dt]);
    let mut cells = vec![];
    for (ci, ctrl) in controllers.iter().enumerate() {
        for &lambda in &lambdas {
            for &n in &bands {
                for &dt in &dts {
                    cells.push((ci, ctrl, lambda, n, dt));
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::param("jobs", e.to_string()))?;
    let mut rows: Vec<SweepRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(ci, ctrl, lambda, n, dt)| {
                let start = Instant::now();
                let outcome = sweep_cell(c, ctrl, lambda, n, dt).map_err(|e| e.to_string());
                SweepRow {
                    controller: ci,
                    kind: ctrl.kind(),
                    lambda,
                    bandwidth: n,
                    dt,
                    outcome,
                    runtime: start.elapsed().as_secs_f64(),
                }
            })
            .collect()
    });
    rows.sort_by(|a, b| {
        a.controller
            .cmp(&b.controller)
            .then(a.lambda.total_cmp(&b.lambda))
            .then(a.bandwidth.cmp(&b.bandwidth))
            .then(a.dt.total_cmp(&b.dt))
    });
    Ok(rows)
}

pub fn sweep_table(rows: &[SweepRow], runtimes: bool) -> Table {
    let mut cols: Vec<String> = SWEEP_COLUMNS.iter().map(|s| s.to_string()).collect();
    if runtimes {
        cols.push("runtime_s".into());
    }
    let mut table = Table::new(cols);
    for r in rows {
        let mut row = vec![
            r.controller.to_string(),
            r.kind.to_string(),
            fmt_f64(r.lambda),
            r.bandwidth.to_string(),
            fmt_f64(r.dt),
        ];
        match &r.outcome {
            Ok(v) => {
                row.push("ok".into());
                for x in [v.lambda_prime, v.rate, v.rate_rel_error, v.bound_margin, v.agreement] {
                    row.push(fmt_f64(x));
                }
            }
            Err(e) => {
                row.push(format!("\"{}\"", e.replace('"', "'").replace('\n', " ")));
                row.extend(std::iter::repeat_n(String::new(), 5));
            }
        }
        if runtimes {
            row.push(fmt_f64(r.runtime));
        }
        table.push(row);
    }
    table
}

pub fn cmd_sweep(exp: &Experiment) -> Result<Vec<PathBuf>> {
    let rows = sweep_rows(&exp.config, exp.jobs)?;
    let table = sweep_table(&rows, exp.config.outputs.runtimes);
    Ok(vec![exp.write("sweep.csv", &table.to_csv(&exp.stamp))?])
}

fn report_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn load(args: &CommonArgs) -> Result<Experiment> {
    let config = ExperimentConfig::from_file(Path::new(&args.config))?;
    Ok(Experiment::new(config, args.out_dir.clone(), args.seed, args.jobs))
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (Command::Synthesize(a) | Command::Simulate(a) | Command::Verify(a) | Command::Sweep(a)) = &cli.command;
    let exp = match load(a) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let result = match &cli.command {
        Command::Synthesize(_) => cmd_synthesize(&exp).map(|f| (f, true)),
        Command::Simulate(_) => cmd_simulate(&exp).map(|(_, f)| (f, true)),
        Command::Verify(_) => cmd_verify(&exp).map(|(r, f)| {
            for c in r.checks().iter().filter(|c| !c.passed) {
                eprintln!("check failed: {}", c.name);
            }
            (f, r.passed())
        }),
        Command::Sweep(_) => cmd_sweep(&exp).map(|f| (f, true)),
    };
    match result {
        Ok((files, ok)) => {
            report_files(&files);
            if ok {
                EXIT_OK
            } else {
                EXIT_VERIFICATION
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
