//! Command-line front end. [`run`] returns captured output and an exit code
//! so the binary stays a thin shell.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 parse error, 3 elaboration error.

use std::collections::BTreeMap;
use std::fs;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::catalog::Envelope;
use crate::dynamics::{
    fmt_e, linspace, liouvillian, liouvillian_coherent, liouvillian_gaussian, simulate, steady_state, Drive, GaussianEnv,
    Observable, Options, SimulationSpec, Trajectory,
};
use crate::error::{Error, Result};
use crate::hilbert::Coefficient;
use crate::linear::extract_linear;
use crate::netlang::{elaborate_with, parse, Elaborated};
use crate::reduction::{projector_from_spec, EliminationProblem};
use crate::slh::SlhTriple;
use crate::tol::TOL_OP;

type C64 = Complex64;

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (qnet-slh/1)");

#[derive(Parser, Debug)]
#[command(name = "qnet", version = VERSION, about = "Compose, analyse and simulate SLH quantum networks")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and elaborate a network, print the reduced triple as JSON.
    Compose(ComposeArgs),
    /// Integrate the master equation and print a trajectory.
    Simulate(SimulateArgs),
    /// Solve for the stationary state and print expectation values.
    SteadyState(SteadyArgs),
    /// Tabulate one entry of the transfer function of a linear network.
    TransferFunction(TransferArgs),
    /// Adiabatically eliminate the complement of a slow subspace.
    Eliminate(EliminateArgs),
    /// Audit the structural invariants of the elaborated triple.
    Check(CheckArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Emit {
    Ast,
    Slh,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct Common {
    /// Network description (.qnet)
    file: String,
    /// Override a declared `param`, e.g. `--set g=2.5` (repeatable)
    #[arg(long = "set", value_name = "NAME=VALUE", allow_hyphen_values = true)]
    set: Vec<String>,
    /// Write output here instead of stdout
    #[arg(long)]
    out: Option<String>,
    /// key=value file supplying defaults for any long flag
    #[arg(long)]
    config: Option<String>,
}

#[derive(Args, Debug)]
struct ComposeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "slh")]
    emit: Emit,
}

#[derive(Args, Debug)]
struct DriveArgs {
    /// vacuum | coherent(re[,im]) | fock(n) | thermal(N) | squeezed(r,phi,nth) | gaussian(N,Mre[,Mim])
    #[arg(long, default_value = "vacuum")]
    drive: String,
    /// Driven input: exposed label or 1-based index
    #[arg(long, default_value = "1")]
    port: String,
    /// Pulse mode for fock and coherent drives: gaussian(c,w) | square(t0,T) | exp_decay(t0,r) | exp_rise(t1,r)
    #[arg(long)]
    pulse: Option<String>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    drive: DriveArgs,
    #[arg(long)]
    t_end: f64,
    /// Number of sampling intervals
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Comma-separated observables: `label.op`, products with `*`, flux[k], emitted[k], trace
    #[arg(long, default_value = "trace")]
    observables: String,
    #[arg(long, default_value_t = 1e-10)]
    atol: f64,
    #[arg(long, default_value_t = 1e-8)]
    rtol: f64,
    /// Fixed-step RK4 with this step (bit-reproducible)
    #[arg(long)]
    fixed_step: Option<f64>,
    /// Allowed growth of top-level Fock population, or `off`
    #[arg(long, default_value = "1e-6")]
    guard: String,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Parameter sweep `name=lo:hi:n`, run in parallel
    #[arg(long, allow_hyphen_values = true)]
    sweep: Option<String>,
}

#[derive(Args, Debug)]
struct SteadyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    drive: DriveArgs,
    #[arg(long, default_value = "trace")]
    observables: String,
}

#[derive(Args, Debug)]
struct TransferArgs {
    #[command(flatten)]
    common: Common,
    /// Frequency grid `lo:hi:n`
    #[arg(long, default_value = "-5:5:101", allow_hyphen_values = true)]
    omega: String,
    /// 1-based input index
    #[arg(long, default_value_t = 1)]
    input: usize,
    /// 1-based output index
    #[arg(long, default_value_t = 1)]
    output: usize,
    /// Use the quadrature representation
    #[arg(long)]
    quadrature: bool,
}

#[derive(Args, Debug)]
struct EliminateArgs {
    #[command(flatten)]
    common: Common,
    /// Slow subspace, e.g. `cav.a=0,cav.q=0|1`; unlisted factors are kept whole
    #[arg(long)]
    p0: String,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
}

/// Captured result of one invocation.
#[derive(Clone, Debug, Default)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => 2,
        Error::Elaboration(_) => 3,
        _ => 1,
    }
}

/// Runs the CLI on `args` (including the program name).
pub fn run(args: &[String]) -> CliOutput {
    let args = match with_config(args) {
        Ok(a) => a,
        Err(e) => return CliOutput { code: 1, stderr: format!("error: {e}\n"), ..Default::default() },
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    CliOutput { code: 0, stdout: text, ..Default::default() }
                }
                _ => CliOutput { code: 2, stderr: text, ..Default::default() },
            };
        }
    };
    let mut out = CliOutput::default();
    let (result, dest) = match &cli.command {
        Command::Compose(a) => (compose(a), a.common.out.clone()),
        Command::Simulate(a) => (cmd_simulate(a), a.common.out.clone()),
        Command::SteadyState(a) => (cmd_steady(a), a.common.out.clone()),
        Command::TransferFunction(a) => (cmd_transfer(a), a.common.out.clone()),
        Command::Eliminate(a) => (cmd_eliminate(a, &mut out.stderr), a.common.out.clone()),
        Command::Check(a) => match cmd_check(a) {
            Ok((text, ok)) => {
                out.code = if ok { 0 } else { 1 };
                (Ok(text), a.common.out.clone())
            }
            Err(e) => (Err(e), None),
        },
    };
    match result {
        Ok(text) => match dest {
            Some(path) => {
                if let Err(e) = fs::write(&path, text) {
                    out.code = 1;
                    out.stderr.push_str(&format!("error: cannot write '{path}': {e}\n"));
                }
            }
            None => out.stdout = text,
        },
        Err(e) => {
            out.code = exit_code(&e);
            out.stderr.push_str(&format!("error: {e}\n"));
        }
    }
    out
}

/// Splices `--config` file entries in front of the user's flags so that
/// explicit flags win.
fn with_config(args: &[String]) -> Result<Vec<String>> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args.to_vec());
    };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => args.get(pos + 1).cloned().ok_or_else(|| Error::Validation("--config needs a path".into()))?,
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::Validation(format!("cannot read config '{path}': {e}")))?;
    let mut injected = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("{path}:{}: expected key = value", n + 1)))?;
        let key = k.trim().replace('_', "-");
        let v = v.trim().trim_matches('"');
        if v == "true" {
            injected.push(format!("--{key}"));
        } else {
            injected.push(format!("--{key}={v}"));
        }
    }
    // subcommand and positional file come first
    let split = 2.min(args.len());
    let mut out: Vec<String> = args[..split].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[split..]);
    Ok(out)
}

fn read(path: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Validation(format!("cannot read '{path}': {e}")))
}

fn overrides(set: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    for s in set {
        let (k, v) = s.split_once('=').ok_or_else(|| Error::Validation(format!("--set expects NAME=VALUE, got '{s}'")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Validation(format!("--set {k}: '{v}' is not a number")))?;
        map.insert(k.trim().to_string(), v);
    }
    Ok(map)
}

fn load(common: &Common, extra: &BTreeMap<String, f64>) -> Result<Elaborated> {
    let net = parse(&read(&common.file)?)?;
    let mut ov = overrides(&common.set)?;
    ov.extend(extra.iter().map(|(k, v)| (k.clone(), *v)));
    elaborate_with(&net, &ov)
}

fn compose(a: &ComposeArgs) -> Result<String> {
    let net = parse(&read(&a.common.file)?)?;
    match a.emit {
        Emit::Ast => {
            let mut s = serde_json::to_string_pretty(&net.without_spans())?;
            s.push('\n');
            Ok(s)
        }
        Emit::Slh => Ok(elaborate_with(&net, &overrides(&a.common.set)?)?.triple.to_json_string()),
    }
}

/// `name(a, b, ...)` with numeric arguments; a bare name has none.
fn call(text: &str) -> Result<(String, Vec<f64>)> {
    let text = text.trim();
    let Some(open) = text.find('(') else {
        return Ok((text.to_string(), Vec::new()));
    };
    let inner = text[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| Error::Validation(format!("missing ')' in '{text}'")))?;
    let args = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Validation(format!("'{s}' is not a number in '{text}'"))))
        .collect::<Result<Vec<_>>>()?;
    Ok((text[..open].trim().to_string(), args))
}

fn arity(name: &str, args: &[f64], lo: usize, hi: usize) -> Result<()> {
    if args.len() < lo || args.len() > hi {
        return Err(Error::Validation(format!("{name} takes {lo}..={hi} arguments, got {}", args.len())));
    }
    Ok(())
}

fn parse_pulse(text: &str) -> Result<Envelope> {
    let (name, a) = call(text)?;
    arity(&name, &a, 2, 2)?;
    match name.as_str() {
        "gaussian" => Envelope::gaussian(a[0], a[1]),
        "square" => Envelope::square(a[0], a[1]),
        "exp_decay" => Envelope::exp_decay(a[0], a[1]),
        "exp_rise" => Envelope::exp_rise(a[0], a[1]),
        _ => Err(Error::Validation(format!("unknown pulse shape '{name}'"))),
    }
}

fn parse_drive(d: &DriveArgs) -> Result<Drive> {
    let (name, a) = call(&d.drive)?;
    let pulse = d.pulse.as_deref().map(parse_pulse).transpose()?;
    Ok(match name.as_str() {
        "vacuum" => Drive::Vacuum,
        "coherent" => {
            arity(&name, &a, 1, 2)?;
            let alpha = C64::new(a[0], a.get(1).copied().unwrap_or(0.0));
            match pulse {
                Some(env) => Drive::Coherent(env.xi_coefficient(alpha)),
                None => Drive::Coherent(Coefficient::new(format!("{alpha}"), move |_| alpha)),
            }
        }
        "fock" => {
            arity(&name, &a, 1, 1)?;
            if a[0] < 0.0 || a[0].fract() != 0.0 {
                return Err(Error::Validation(format!("fock needs a photon number, got {}", a[0])));
            }
            let envelope = pulse.ok_or_else(|| Error::Validation("fock drive needs --pulse".into()))?;
            Drive::Fock { n: a[0] as usize, envelope }
        }
        "thermal" => {
            arity(&name, &a, 1, 1)?;
            Drive::Gaussian(GaussianEnv::thermal(a[0])?)
        }
        "squeezed" => {
            arity(&name, &a, 3, 3)?;
            Drive::Gaussian(GaussianEnv::squeezed(a[0], a[1], a[2])?)
        }
        "gaussian" => {
            arity(&name, &a, 2, 3)?;
            Drive::Gaussian(GaussianEnv::new(a[0], C64::new(a[1], a.get(2).copied().unwrap_or(0.0)), None)?)
        }
        _ => return Err(Error::Validation(format!("unknown drive '{name}'"))),
    })
}

fn resolve_port(e: &Elaborated, port: &str) -> Result<usize> {
    if let Some(k) = e.port_index(port) {
        return Ok(k);
    }
    let n = e.triple.n_ports();
    match port.parse::<usize>() {
        Ok(k) if (1..=n).contains(&k) => Ok(k - 1),
        _ => Err(Error::Validation(format!("no port '{port}' (network has {n} ports)"))),
    }
}

fn observables(text: &str) -> Vec<String> {
    text.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

/// `lo:hi:n` → `n` evenly spaced points including both ends.
fn grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Validation(format!("expected lo:hi:n, got '{text}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect())
}

fn run_one(a: &SimulateArgs, extra: &BTreeMap<String, f64>) -> Result<Trajectory> {
    let e = load(&a.common, extra)?;
    if !(a.t_end > 0.0) {
        return Err(Error::Validation(format!("--t-end must be positive, got {}", a.t_end)));
    }
    let mut spec = SimulationSpec::new(linspace(a.t_end, a.samples), observables(&a.observables))
        .with_drive(parse_drive(&a.drive)?, resolve_port(&e, &a.drive.port)?);
    spec.options = match a.fixed_step {
        Some(dt) => Options::rk4(dt),
        None => Options::dopri5(a.atol, a.rtol),
    };
    spec.truncation_guard = match a.guard.as_str() {
        "off" | "none" => None,
        g => Some(g.parse().map_err(|_| Error::Validation(format!("--guard expects a number or off, got '{g}'")))?),
    };
    simulate(&e.triple, &spec)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<String> {
    let Some(sweep) = &a.sweep else {
        let traj = run_one(a, &BTreeMap::new())?;
        return Ok(match a.format {
            Format::Csv => traj.to_csv(),
            Format::Json => traj.to_json(),
        });
    };
    let (name, range) = sweep
        .split_once('=')
        .ok_or_else(|| Error::Validation(format!("--sweep expects name=lo:hi:n, got '{sweep}'")))?;
    let values = grid(range)?;
    let runs: Vec<Result<Trajectory>> = values
        .par_iter()
        .map(|&v| run_one(a, &BTreeMap::from([(name.to_string(), v)])))
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(match a.format {
        Format::Csv => {
            let mut out = String::new();
            for (k, (v, traj)) in values.iter().zip(&runs).enumerate() {
                let csv = traj.to_csv();
                let mut lines = csv.lines();
                let header = lines.next().unwrap_or("");
                if k == 0 {
                    out.push_str(&format!("{name},{header}\n"));
                }
                for line in lines {
                    out.push_str(&format!("{},{line}\n", fmt_e(*v)));
                }
            }
            out
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = values
                .iter()
                .zip(&runs)
                .map(|(v, t)| {
                    let traj: serde_json::Value = serde_json::from_str(&t.to_json()).expect("trajectory JSON");
                    serde_json::json!({ "value": v, "trajectory": traj })
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&serde_json::json!({ "sweep": name, "runs": items }))?;
            s.push('\n');
            s
        }
    })
}

fn cmd_steady(a: &SteadyArgs) -> Result<String> {
    let e = load(&a.common, &BTreeMap::new())?;
    let g = &e.triple;
    let port = resolve_port(&e, &a.drive.port)?;
    let sup = match parse_drive(&a.drive)? {
        Drive::Vacuum => liouvillian(g)?,
        Drive::Coherent(c) => liouvillian_coherent(g, port, &c)?,
        Drive::Gaussian(env) => liouvillian_gaussian(g, port, &env)?,
        _ => return Err(Error::Unsupported("steady state under a pulsed Fock drive".into())),
    };
    let rho = steady_state(&sup)?;
    let mut out = String::from("observable,re,im\n");
    for text in observables(&a.observables) {
        let value = match Observable::parse(&text, g.space(), g.n_ports())? {
            Observable::Trace => rho.trace(),
            Observable::Expect { op, .. } => op.expect(&rho, 0.0),
            _ => return Err(Error::Unsupported(format!("'{text}' has no steady-state value"))),
        };
        out.push_str(&format!("{text},{},{}\n", fmt_e(value.re), fmt_e(value.im)));
    }
    Ok(out)
}

fn cmd_transfer(a: &TransferArgs) -> Result<String> {
    let e = load(&a.common, &BTreeMap::new())?;
    let mut model = extract_linear(&e.triple)?;
    if a.quadrature {
        model = model.quadrature();
    }
    let n = model.d.nrows();
    if !(1..=n).contains(&a.input) || !(1..=n).contains(&a.output) {
        return Err(Error::Validation(format!("transfer function is {n}x{n}; indices are 1-based")));
    }
    let mut out = String::from("omega,re,im\n");
    for w in grid(&a.omega)? {
        let xi = model.transfer_function(C64::new(0.0, w))?;
        let z = xi[(a.output - 1, a.input - 1)];
        out.push_str(&format!("{},{},{}\n", fmt_e(w), fmt_e(z.re), fmt_e(z.im)));
    }
    Ok(out)
}

fn cmd_eliminate(a: &EliminateArgs, stderr: &mut String) -> Result<String> {
    let e = load(&a.common, &BTreeMap::new())?;
    let p0 = projector_from_spec(e.triple.space(), &a.p0)?;
    let prob = EliminationProblem::decompose(&e.triple, &p0)?;
    let report = prob.check_assumptions();
    stderr.push_str(&report.describe());
    stderr.push('\n');
    Ok(prob.eliminate()?.to_json_string())
}

fn cmd_check(a: &CheckArgs) -> Result<(String, bool)> {
    let e = load(&a.common, &BTreeMap::new())?;
    let g: &SlhTriple = &e.triple;
    let inv = g.invariants();
    let sp = g.space();
    let mut out = String::new();
    let space: Vec<String> = sp.factors().iter().map(|f| format!("{}:{}", f.label, f.dim)).collect();
    out.push_str(&format!("space: {}\n", space.join(" ")));
    out.push_str(&format!("ports: {}\n", g.ports().join(" ")));
    out.push_str(&format!("time_dependent: {}\n", g.is_time_dependent()));
    out.push_str(&format!("unitarity_residual: {}\n", fmt_e(inv.unitarity)));
    out.push_str(&format!("hermiticity_residual: {}\n", fmt_e(inv.hermiticity)));
    match extract_linear(g) {
        Ok(m) => {
            let r = m.realizability();
            out.push_str(&format!("linear: {:?}\n", m.form));
            let res: Vec<String> = r.residuals.iter().map(|x| fmt_e(*x)).collect();
            out.push_str(&format!("realizability_residuals: {}\n", res.join(" ")));
        }
        Err(err) => out.push_str(&format!("linear: no ({err})\n")),
    }
    let ok = inv.passes(TOL_OP);
    out.push_str(&format!("invariants: {}\n", if ok { "pass" } else { "FAIL" }));
    Ok((out, ok))
}
