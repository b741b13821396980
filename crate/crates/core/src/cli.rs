//! The `systemic` command-line front end.
//!
//! Every subcommand except `sweep` writes one JSON [`Report`] to standard
//! output; `sweep` writes CSV. Diagnostics go to standard error.
//!
//! Exit codes: `0` success, `1` property violation or bound breach, `2`
//! input or format error, `3` numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::design::{
    exhaustive_augment, greedy_augment, optimize_weights, rewire_bruteforce, Candidate, RewireOptions,
    SolverSettings, Topology,
};
use crate::error::{Error, Result};
use crate::graph::{generate, parse_graph, Family, WeightedGraph};
use crate::measures::{entropy_via_trees, hp_norm, hp_norm_numeric, zeta, Exponent, Measure, Network, SchurFn, TREE_ENTROPY_WARNING};
use crate::properties::{check, Property, PropertyConfig};
use crate::quad::QuadSettings;
use crate::report::Report;
use crate::sim::{estimate_h2, SimConfig};
use crate::spectral::{eig_sym, zero_tol};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable capping the worker threads (`0` = one per core).
pub const THREADS_ENV: &str = "SYSTEMIC_THREADS";

#[derive(Parser, Debug)]
#[command(name = "systemic", version, about = "Systemic measures for linear consensus networks")]
struct Cli {
    /// Record wall-clock seconds in the report (off by default so that
    /// reports are byte-identical across runs).
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a measure on a graph.
    Measure(MeasureCmd),
    /// Spectral zeta function sum of λ_i^-p over nonzero eigenvalues.
    Zeta(ZetaCmd),
    /// H_p norm in closed form, optionally checked by frequency quadrature.
    Hpnorm(HpCmd),
    /// Spanning-tree count and the entropy cross-check.
    Trees(GraphOnly),
    /// Randomized check of one axiom for one measure.
    Props(PropsCmd),
    /// Optimal weight allocation on a fixed topology.
    OptimizeWeights(OptimizeCmd),
    /// Rank every connected graph with the given node and edge counts.
    Rewire(RewireCmd),
    /// Add k candidate edges and compare against the interlacing bound.
    Augment(AugmentCmd),
    /// Monte Carlo estimate of the H_2 energy.
    SimulateH2(SimCmd),
    /// Parse a graph file and audit its Laplacian spectrum.
    Validate(GraphOnly),
    /// CSV of a measure over a graph family for a range of sizes.
    Sweep(SweepCmd),
}

#[derive(Args, Debug, Serialize)]
struct MeasureSel {
    /// Measure identifier: zeta_measure, hp_norm, h2, hinf, energy1, energy2,
    /// convergence_time, local_error, entropy, schur_sum.
    #[arg(long = "measure")]
    measure: String,
    /// Exponent for zeta_measure and hp_norm (a number or `inf`).
    #[arg(long)]
    p: Option<String>,
    /// Scale for zeta_measure.
    #[arg(long)]
    k: Option<f64>,
    /// Scalar function for schur_sum: inverse, inverse_sq, inverse_pow:Q, exp_decay:C.
    #[arg(long = "f")]
    f: Option<String>,
}

impl MeasureSel {
    fn resolve(&self) -> Result<Measure> {
        let p = self.p.as_deref().map(str::parse::<Exponent>).transpose()?;
        Measure::from_parts(&self.measure, p, self.k, self.f.as_deref())
    }
}

#[derive(Args, Debug, Serialize)]
struct GraphOnly {
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct MeasureCmd {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    sel: MeasureSel,
}

#[derive(Args, Debug, Serialize)]
struct ZetaCmd {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    p: f64,
}

#[derive(Args, Debug, Serialize)]
struct HpCmd {
    #[arg(long)]
    graph: PathBuf,
    /// Exponent p > 1, or `inf`.
    #[arg(long)]
    p: String,
    /// Also integrate over frequency and report the difference.
    #[arg(long)]
    numeric: bool,
    /// Relative tolerance of the quadrature.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct PropsCmd {
    #[command(flatten)]
    #[serde(flatten)]
    sel: MeasureSel,
    /// homogeneity, monotonicity, convexity, subadditivity, orthogonal or schur.
    #[arg(long)]
    property: String,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 3)]
    n_min: usize,
    #[arg(long, default_value_t = 20)]
    n_max: usize,
}

#[derive(Args, Debug, Serialize)]
struct OptimizeCmd {
    /// Edge-list file; weights are ignored, only the edge set is used.
    #[arg(long)]
    topology: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    sel: MeasureSel,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
}

#[derive(Args, Debug, Serialize)]
struct RewireCmd {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Total weight, split evenly over the edges.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[command(flatten)]
    #[serde(flatten)]
    sel: MeasureSel,
    /// Also report each class at its optimal weights.
    #[arg(long)]
    optimize_weights: bool,
}

#[derive(Args, Debug, Serialize)]
struct AugmentCmd {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    k: usize,
    /// Edge-list file of candidate edges, with the same node count.
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long = "f", default_value = "inverse")]
    f: String,
    /// Search every k-subset instead of adding greedily.
    #[arg(long)]
    exhaustive: bool,
}

#[derive(Args, Debug, Serialize)]
struct SimCmd {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 200.0)]
    horizon: f64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Discarded initial time; defaults to 5/λ_2.
    #[arg(long)]
    burn_in: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum SweepFamily {
    Complete,
    Cycle,
    Path,
    Star,
    ErdosRenyi,
}

#[derive(Args, Debug, Serialize)]
struct SweepCmd {
    #[arg(long, value_enum)]
    family: SweepFamily,
    #[arg(long, default_value_t = 3)]
    n_min: usize,
    #[arg(long, default_value_t = 12)]
    n_max: usize,
    #[command(flatten)]
    #[serde(flatten)]
    sel: MeasureSel,
    /// Edge probability for erdos-renyi.
    #[arg(long, default_value_t = 0.5)]
    edge_prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Output {
    Report(Report),
    Csv(String),
}

struct Outcome {
    output: Output,
    code: i32,
}

impl Outcome {
    fn ok(report: Report) -> Self {
        Outcome { output: Output::Report(report), code: EXIT_OK }
    }
}

struct Failure {
    context: Option<String>,
    err: Error,
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure { context: None, err }
    }
}

type CmdResult = std::result::Result<Outcome, Failure>;

fn read_graph(path: &Path) -> std::result::Result<WeightedGraph, Failure> {
    let ctx = Some(path.display().to_string());
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        context: ctx.clone(),
        err: Error::Input(format!("cannot read file: {e}")),
    })?;
    parse_graph(&text).map_err(|err| Failure { context: ctx, err })
}

fn echo<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn cmd_measure(a: &MeasureCmd) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let m = a.sel.resolve()?;
    let value = Network::new(g.clone()).evaluate(&m)?;
    let results = json!({
        "measure": m.to_string(),
        "value": value,
        "n": g.n(),
        "edges": g.edge_count(),
    });
    Ok(Outcome::ok(Report::new("measure", echo(a), results)))
}

fn cmd_zeta(a: &ZetaCmd) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let value = zeta(&g, a.p)?;
    Ok(Outcome::ok(Report::new("zeta", echo(a), json!({ "p": a.p, "value": value }))))
}

fn cmd_hpnorm(a: &HpCmd) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let p: Exponent = a.p.parse()?;
    let closed = hp_norm(&g, p)?;
    let mut results = json!({ "p": p.to_string(), "closed_form": closed });
    if a.numeric {
        let Exponent::Finite(pf) = p else {
            return Err(Error::Input("--numeric needs a finite exponent".into()).into());
        };
        if !(a.tol > 0.0) {
            return Err(Error::Input(format!("quadrature tolerance must be positive, got {}", a.tol)).into());
        }
        let settings = QuadSettings { rel_tol: a.tol, ..QuadSettings::default() };
        let num = hp_norm_numeric(&g, pf, &settings)?;
        let diff = num.value - closed;
        let obj = results.as_object_mut().expect("object");
        obj.insert("numeric".into(), json!(num.value));
        obj.insert("difference".into(), json!(diff));
        obj.insert("relative_difference".into(), json!(diff.abs() / closed.abs()));
        obj.insert("quadrature_error".into(), json!(num.error));
        obj.insert("evaluations".into(), json!(num.evaluations));
    }
    Ok(Outcome::ok(Report::new("hpnorm", echo(a), results)))
}

fn cmd_trees(a: &GraphOnly) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let te = entropy_via_trees(&g)?;
    let spectral = Network::new(g).evaluate(&Measure::Entropy)?;
    let k3 = generate(Family::Complete, 3, 0)?;
    let k3e = entropy_via_trees(&k3)?;
    let deviates = (te.printed_form - te.value).abs() > 1e-12 * (1.0 + te.value.abs());
    let results = json!({
        "n": te.n,
        "tau": te.tau,
        "entropy_spectral": spectral,
        "entropy_matrix_tree": te.value,
        "relative_difference": (spectral - te.value).abs() / te.value.abs().max(f64::MIN_POSITIVE),
        "printed_form": te.printed_form,
        "printed_form_deviates": deviates,
        "counterexample": {
            "graph": "K_3, unit weights",
            "tau": k3e.tau,
            "matrix_tree": k3e.value,
            "printed_form": k3e.printed_form,
        },
    });
    let mut report = Report::new("trees", echo(a), results);
    report.warnings.push(TREE_ENTROPY_WARNING.to_string());
    Ok(Outcome::ok(report))
}

fn cmd_props(a: &PropsCmd) -> CmdResult {
    let m = a.sel.resolve()?;
    let property: Property = a.property.parse()?;
    let cfg = PropertyConfig {
        trials: a.trials,
        seed: a.seed,
        tol: a.tol,
        n_min: a.n_min,
        n_max: a.n_max,
        ..PropertyConfig::default()
    };
    let rep = check(property, &m, &cfg)?;
    let mut report = Report::new("props", echo(a), serde_json::to_value(&rep).expect("serializes"));
    if !Property::required_for(&m).contains(&property) {
        report
            .warnings
            .push(format!("{property} is not among the properties this measure is classified as having"));
    }
    let code = if rep.passed() { EXIT_OK } else { EXIT_VIOLATION };
    if rep.precondition_failures > 0 {
        report
            .warnings
            .push(format!("{} trials failed the ordering precondition", rep.precondition_failures));
    }
    Ok(Outcome { output: Output::Report(report), code })
}

fn cmd_optimize(a: &OptimizeCmd) -> CmdResult {
    let g = read_graph(&a.topology)?;
    let t = Topology::of_graph(&g)?;
    let m = a.sel.resolve()?;
    let settings = SolverSettings {
        tol: a.tol,
        max_iters: a.max_iters,
        ..SolverSettings::default()
    };
    let res = optimize_weights(&t, &m, &settings)?;
    let mut report = Report::new("optimize-weights", echo(a), serde_json::to_value(&res).expect("serializes"));
    if !res.converged {
        report
            .warnings
            .push(format!("solver stopped without converging ({})", res.stop_reason));
    }
    Ok(Outcome::ok(report))
}

fn cmd_rewire(a: &RewireCmd) -> CmdResult {
    let m = a.sel.resolve()?;
    let opts = RewireOptions {
        optimize_weights: a.optimize_weights.then(SolverSettings::default),
    };
    let res = rewire_bruteforce(a.n, a.m, a.alpha, &m, &opts)?;
    let mut report = Report::new("rewire", echo(a), serde_json::to_value(&res).expect("serializes"));
    if res.ties > 1 {
        report
            .warnings
            .push(format!("{} classes tie for the minimum; the smallest edge list is reported", res.ties));
    }
    Ok(Outcome::ok(report))
}

fn cmd_augment(a: &AugmentCmd) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let cg = read_graph(&a.candidates)?;
    if cg.n() != g.n() {
        return Err(Failure {
            context: Some(a.candidates.display().to_string()),
            err: Error::Input(format!("candidate file has n = {}, graph has n = {}", cg.n(), g.n())),
        });
    }
    let candidates: Vec<Candidate> = cg.edges().iter().copied().map(Candidate::from).collect();
    let f = SchurFn::parse(&a.f)?;
    let res = if a.exhaustive {
        exhaustive_augment(&g, a.k, &candidates, &f)?
    } else {
        greedy_augment(&g, a.k, &candidates, &f)?
    };
    let breach = res.gap < -1e-9 || !res.interlacing_holds;
    let mut report = Report::new("augment", echo(a), serde_json::to_value(&res).expect("serializes"));
    if !res.skipped.is_empty() {
        report
            .warnings
            .push(format!("{} candidates already present in the graph were skipped", res.skipped.len()));
    }
    if res.added.len() < a.k {
        report
            .warnings
            .push(format!("only {} of {} edges could be added", res.added.len(), a.k));
    }
    if breach {
        report.warnings.push("achieved value falls below the bound or interlacing fails".into());
    }
    let code = if breach { EXIT_VIOLATION } else { EXIT_OK };
    Ok(Outcome { output: Output::Report(report), code })
}

fn cmd_simulate(a: &SimCmd) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let cfg = SimConfig {
        dt: a.dt,
        horizon: a.horizon,
        burn_in: a.burn_in,
        trials: a.trials,
        seed: a.seed,
        x0: None,
    };
    let est = estimate_h2(&g, &cfg)?;
    let z = (est.estimate - est.closed_form) / est.stderr;
    let results = json!({
        "estimate": est.estimate,
        "stderr": est.stderr,
        "closed_form": est.closed_form,
        "z_score": z,
        "within_3_stderr": z.abs() <= 3.0,
        "steps": est.steps,
        "burn_in": est.burn_in,
        "per_trial": est.per_trial,
    });
    let mut report = Report::new("simulate-h2", echo(a), results);
    report.warnings.extend(est.warnings);
    Ok(Outcome::ok(report))
}

fn audit(check: &str, value: f64, limit: f64) -> Value {
    json!({ "check": check, "value": value, "limit": limit, "passed": value <= limit })
}

fn cmd_validate(a: &GraphOnly) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let lap = g.laplacian();
    let mat = lap.as_matrix();
    let n = g.n();
    let spec = eig_sym(mat)?;
    let ev = spec.eigenvalues();
    let lmax = spec.lambda_max();
    let ztol = zero_tol(lmax);
    let scale = lmax.max(1.0);
    let row_sum = (0..n).map(|i| mat.row(i).sum().abs()).fold(0.0, f64::max);
    let asym = (mat - mat.transpose()).amax();
    let trace_err = (ev.iter().sum::<f64>() - 2.0 * g.total_weight()).abs();
    let lambda2 = ev.get(1).copied();
    let connected = n == 1 || lambda2.is_some_and(|l| l > ztol);
    let mut checks = vec![
        json!({ "check": "connected", "value": lambda2, "limit": ztol, "passed": connected }),
        audit("laplacian_row_sums", row_sum, 1e-12 * scale * n as f64),
        audit("laplacian_symmetry", asym, 0.0),
        audit("smallest_eigenvalue", ev[0].abs(), ztol),
        audit("eigen_residual", spec.residual(), 1e-9 * scale),
        audit("orthonormality", spec.orthonormality_error(), 1e-9),
        audit("trace", trace_err, 1e-9 * scale * n as f64),
    ];
    let mut tau = Value::Null;
    if connected && n > 1 {
        let t = g.spanning_tree_count();
        let log_prod: f64 = ev[1..].iter().map(|l| l.ln()).sum();
        let err = (log_prod - (n as f64 * t).ln()).abs() / (1.0 + log_prod.abs());
        checks.push(audit("matrix_tree", err, 1e-8));
        tau = json!(t);
    }
    let passed = checks.iter().all(|c| c["passed"] == json!(true));
    let results = json!({
        "n": n,
        "edges": g.edge_count(),
        "total_weight": g.total_weight(),
        "connected": connected,
        "lambda2": lambda2,
        "lambda_max": lmax,
        "zero_tol": ztol,
        "tau": tau,
        "checks": checks,
    });
    let mut report = Report::new("validate", echo(a), results);
    if !connected {
        report.warnings.push("graph is disconnected; consensus measures are undefined".into());
    }
    let code = if passed { EXIT_OK } else { EXIT_VIOLATION };
    Ok(Outcome { output: Output::Report(report), code })
}

fn cmd_sweep(a: &SweepCmd) -> CmdResult {
    let m = a.sel.resolve()?;
    if a.n_min < 2 || a.n_max < a.n_min {
        return Err(Error::Input(format!("invalid size range [{}, {}]", a.n_min, a.n_max)).into());
    }
    let family = match a.family {
        SweepFamily::Complete => Family::Complete,
        SweepFamily::Cycle => Family::Cycle,
        SweepFamily::Path => Family::Path,
        SweepFamily::Star => Family::Star,
        SweepFamily::ErdosRenyi => Family::ErdosRenyi { p: a.edge_prob, weights: None },
    };
    let mut csv = String::from("n,value\n");
    for n in a.n_min..=a.n_max {
        let g = generate(family, n, a.seed.wrapping_add(n as u64))?;
        let v = Network::new(g).evaluate(&m)?;
        writeln!(csv, "{n},{v}").expect("writing to a String");
    }
    Ok(Outcome { output: Output::Csv(csv), code: EXIT_OK })
}

fn dispatch(cmd: &Command) -> CmdResult {
    match cmd {
        Command::Measure(a) => cmd_measure(a),
        Command::Zeta(a) => cmd_zeta(a),
        Command::Hpnorm(a) => cmd_hpnorm(a),
        Command::Trees(a) => cmd_trees(a),
        Command::Props(a) => cmd_props(a),
        Command::OptimizeWeights(a) => cmd_optimize(a),
        Command::Rewire(a) => cmd_rewire(a),
        Command::Augment(a) => cmd_augment(a),
        Command::SimulateH2(a) => cmd_simulate(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

fn thread_cap() -> std::result::Result<usize, String> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(s) if s.trim().is_empty() => Ok(0),
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| format!("{THREADS_ENV} must be a nonnegative integer, got `{s}`")),
    }
}

/// Runs one invocation. `args` includes the program name. Returns the exit
/// code; nothing is written to the process streams directly.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_INPUT
                }
            };
        }
    };
    let threads = match thread_cap() {
        Ok(t) => t,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_INPUT;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: cannot start worker threads: {e}");
            return EXIT_NUMERICAL;
        }
    };

    let start = Instant::now();
    let result = pool.install(|| dispatch(&cli.command));
    match result {
        Ok(Outcome { output, code }) => {
            let written = match output {
                Output::Report(mut r) => {
                    if cli.timing {
                        r.timing = Some(start.elapsed().as_secs_f64());
                    }
                    stdout.write_all(r.to_json().as_bytes())
                }
                Output::Csv(s) => stdout.write_all(s.as_bytes()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: cannot write output: {e}");
                return EXIT_INPUT;
            }
            code
        }
        Err(Failure { context, err }) => {
            let _ = match context {
                Some(c) => writeln!(stderr, "error: {c}: {err}"),
                None => writeln!(stderr, "error: {err}"),
            };
            if err.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INPUT
            }
        }
    }
}
