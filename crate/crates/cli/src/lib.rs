//! Command-line front end for the nonlinear-linear duality toolkit.

pub mod document;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ptrdual::fock::{transition_amplitudes, CapChoice, TruncationPolicy};
use ptrdual::gaussian::q_duality_residual;
use ptrdual::harness::{self, VerificationReport};
use ptrdual::linamp::{
    four_photon_awp_amplitude, four_photon_occupation, linear_fock_amplitude, verify_duality,
    AmplitudeComparison, DualityConfig,
};
use ptrdual::ptr::build_ptr;
use ptrdual::{Circuit, Cx, Occupation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use document::{cx, encode_matrix, parse_circuit, DocumentError};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_RESIDUAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_PHOTONS: usize = 4;

#[derive(Debug, Parser)]
#[command(
    name = "ptrdual",
    version,
    about = "Nonlinear-linear duality checks for PDC and linear-optics circuits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Args)]
pub struct Options {
    /// Circuit document (JSON)
    #[arg(long, global = true, value_name = "FILE")]
    pub circuit: Option<PathBuf>,
    /// Fixed photon cap; chosen automatically when absent
    #[arg(long, global = true, value_name = "N")]
    pub cutoff: Option<usize>,
    /// Largest total photon number per side
    #[arg(long, global = true, value_name = "N", default_value_t = DEFAULT_MAX_PHOTONS)]
    pub max_photons: usize,
    /// Residual tolerance
    #[arg(long, global = true, value_name = "X", default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    pub seed: u64,
    /// Machine-readable output
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the dual linear network, its coefficient and the cavity factors
    Ptr,
    /// Compare one nonlinear amplitude with its linear dual
    Amp {
        /// Input photon counts, `signal/idler`, e.g. `1,0/0`
        #[arg(long)]
        input: String,
        /// Output photon counts, same format
        #[arg(long)]
        output: String,
    },
    /// Compare all amplitudes up to --max-photons
    Verify {
        /// Check a seeded sample of this many amplitude pairs
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Q-function duality at seeded random coherent points
    Qfunc {
        #[arg(long, default_value_t = 10)]
        points: usize,
    },
    /// Four-photon amplitudes against the classical closed form
    Awp,
    /// Worked examples
    Examples,
    /// Polarization teleportation by four-fold postselection
    Teleport {
        #[arg(long, default_value_t = 0.05)]
        r: f64,
        /// Number of seeded random input polarizations
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Document(#[from] DocumentError),
    #[error("{0}")]
    Core(#[from] ptrdual::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) | CliError::Document(DocumentError::Circuit(e))
                if e.is_numerical() =>
            {
                EXIT_NUMERICAL
            }
            _ => EXIT_USAGE,
        }
    }
}

/// A finished command: its document and whether every residual passed.
pub struct Outcome {
    pub document: Value,
    pub text: String,
    pub passed: bool,
}

fn c(z: Cx<f64>) -> Value {
    json!(cx(z))
}

fn load_circuit(opts: &Options) -> Result<Circuit<f64>, CliError> {
    let path = opts
        .circuit
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs --circuit FILE".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(parse_circuit(&text)?)
}

fn cap_choice(opts: &Options) -> CapChoice {
    opts.cutoff.map_or(CapChoice::Auto, CapChoice::Fixed)
}

/// `1,0/0,2` into signal and idler counts.
pub fn parse_occupation(text: &str, n_s: usize, n_i: usize) -> Result<Occupation, CliError> {
    let bad = || {
        CliError::Usage(format!(
            "occupation `{text}` should look like `1,0/2` ({n_s} signal, {n_i} idler counts)"
        ))
    };
    let (s, i) = text.split_once('/').ok_or_else(bad)?;
    let counts = |part: &str, n: usize| -> Result<Vec<usize>, CliError> {
        let v = part
            .split(',')
            .map(|x| x.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        if v.len() == n {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    Ok(Occupation::new(counts(s, n_s)?, counts(i, n_i)?))
}

fn cmd_ptr(opts: &Options) -> Result<Outcome, CliError> {
    let circuit = load_circuit(opts)?;
    let p = build_ptr(&circuit)?;
    let dev = p.scattering.unitarity_deviation();
    let passed = dev <= opts.tol;
    let document = json!({
        "command": "ptr",
        "s_paths": circuit.n_s(),
        "i_paths": circuit.n_i(),
        "u": {
            "ss": encode_matrix(&p.scattering.ss),
            "si": encode_matrix(&p.scattering.si),
            "is": encode_matrix(&p.scattering.is),
            "ii": encode_matrix(&p.scattering.ii),
        },
        "nc": c(p.nc),
        "beta_factors": p.beta_factors.iter().map(|b| cx(*b)).collect::<Vec<_>>(),
        "t_product": p.t_product,
        "unitarity_deviation": dev,
        "passed": passed,
    });
    let mut text = String::new();
    let full = p.scattering.full();
    text.push_str(&format!(
        "U ({} signal + {} idler paths):\n",
        circuit.n_s(),
        circuit.n_i()
    ));
    for row in full.rows() {
        let cells: Vec<String> = row
            .iter()
            .map(|z| format!("{:+.12}{:+.12}i", z.re, z.im))
            .collect();
        text.push_str(&format!("  {}\n", cells.join("  ")));
    }
    text.push_str(&format!("nc = {:+.15}{:+.15}i\n", p.nc.re, p.nc.im));
    for (k, b) in p.beta_factors.iter().enumerate() {
        text.push_str(&format!("beta_{} = {:+.15}{:+.15}i\n", k + 1, b.re, b.im));
    }
    text.push_str(&format!(
        "product of transmittances = {:.15}\nunitarity deviation = {dev:.3e}\n",
        p.t_product
    ));
    Ok(Outcome {
        document,
        text,
        passed,
    })
}

fn cmd_amp(opts: &Options, input: &str, output: &str) -> Result<Outcome, CliError> {
    let circuit = load_circuit(opts)?;
    let (n_s, n_i) = (circuit.n_s(), circuit.n_i());
    let (a, b) = (
        parse_occupation(input, n_s, n_i)?,
        parse_occupation(output, n_s, n_i)?,
    );
    let p = build_ptr(&circuit)?;
    let t = transition_amplitudes(
        &circuit,
        std::slice::from_ref(&a),
        std::slice::from_ref(&b),
        cap_choice(opts),
        &TruncationPolicy::default(),
    )?;
    let linear = linear_fock_amplitude(
        &p.scattering,
        &Occupation::new(a.s.clone(), b.i.clone()),
        &Occupation::new(b.s.clone(), a.i.clone()),
    )?;
    let cmp = AmplitudeComparison::new(t.get(0, 0), linear, p.nc, t.cap);
    let scaled = cmp.scaled_residual(DualityConfig::default().noise_floor);
    let passed = scaled <= opts.tol;
    let document = json!({
        "command": "amp",
        "input": {"s": a.s, "i": a.i},
        "output": {"s": b.s, "i": b.i},
        "nonlinear": c(cmp.nonlinear),
        "ptr_linear": c(cmp.ptr_linear),
        "nc": c(cmp.nc),
        "dual": c(cmp.nc * cmp.ptr_linear),
        "abs_residual": cmp.abs_residual,
        "rel_residual": cmp.rel_residual,
        "scaled_residual": scaled,
        "cap": t.cap,
        "passed": passed,
    });
    let text = format!(
        "nonlinear  = {:+.15e}{:+.15e}i\nnc * PTR   = {:+.15e}{:+.15e}i\nresidual   = {:.3e} (abs {:.3e}, cap {})\n",
        cmp.nonlinear.re,
        cmp.nonlinear.im,
        (cmp.nc * cmp.ptr_linear).re,
        (cmp.nc * cmp.ptr_linear).im,
        scaled,
        cmp.abs_residual,
        t.cap
    );
    Ok(Outcome {
        document,
        text,
        passed,
    })
}

fn cmd_verify(opts: &Options, samples: Option<usize>) -> Result<Outcome, CliError> {
    let circuit = load_circuit(opts)?;
    let config = DualityConfig {
        budget: opts.max_photons,
        samples,
        seed: opts.seed,
        cap: cap_choice(opts),
        ..DualityConfig::default()
    };
    let r = verify_duality(&circuit, &config)?;
    let passed = r.max_scaled_residual <= opts.tol;
    let document = json!({
        "command": "verify",
        "max_photons": opts.max_photons,
        "cases": r.cases.len(),
        "max_abs_residual": r.max_abs_residual,
        "max_rel_residual": r.max_rel_residual,
        "max_scaled_residual": r.max_scaled_residual,
        "noise_floor": config.noise_floor,
        "cap": r.cap_used,
        "leak": r.leak,
        "nc": c(r.nc),
        "passed": passed,
    });
    let text = format!(
        "{} amplitude pairs, cap {}, leak {:.2e}\nmax residual {:.3e} (relative {:.3e}, absolute {:.3e})\n",
        r.cases.len(),
        r.cap_used,
        r.leak,
        r.max_scaled_residual,
        r.max_rel_residual,
        r.max_abs_residual
    );
    Ok(Outcome {
        document,
        text,
        passed,
    })
}

fn cmd_qfunc(opts: &Options, points: usize) -> Result<Outcome, CliError> {
    let circuit = load_circuit(opts)?;
    let (n_s, n_i) = (circuit.n_s(), circuit.n_i());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut draw = |n: usize| -> Vec<Cx<f64>> {
        (0..n)
            .map(|_| Cx::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)))
            .collect()
    };
    let mut rows = Vec::new();
    let (mut worst, mut nc_gap) = (0.0f64, 0.0f64);
    for _ in 0..points {
        let (a_s, a_i, b_s, b_i) = (draw(n_s), draw(n_i), draw(n_s), draw(n_i));
        let d = q_duality_residual(&circuit, &a_s, &a_i, &b_s, &b_i)?;
        worst = worst.max(d.rel_residual);
        nc_gap = nc_gap.max(d.nc_residual());
        let list = |v: &[Cx<f64>]| v.iter().map(|z| cx(*z)).collect::<Vec<_>>();
        rows.push(json!({
            "alpha_s": list(&a_s), "alpha_i": list(&a_i), "beta_s": list(&b_s), "beta_i": list(&b_i),
            "q_nonlinear": d.q_nonlinear, "q_ptr": d.q_ptr, "rel_residual": d.rel_residual,
        }));
    }
    let passed = worst <= opts.tol && nc_gap <= opts.tol;
    let document = json!({
        "command": "qfunc",
        "points": rows,
        "max_rel_residual": worst,
        "nc_vs_det_uii": nc_gap,
        "passed": passed,
    });
    let text = format!("{points} coherent points: max residual {worst:.3e}; | |nc| - |det U_ii| | = {nc_gap:.3e}\n");
    Ok(Outcome {
        document,
        text,
        passed,
    })
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect()
}

fn cmd_awp(opts: &Options) -> Result<Outcome, CliError> {
    if opts.circuit.is_none() {
        return Ok(reports("awp", vec![harness::awp_sweep(&[0.02, 0.05, 0.1])]));
    }
    let circuit = load_circuit(opts)?;
    let (n_s, n_i) = (circuit.n_s(), circuit.n_i());
    let p = build_ptr(&circuit)?;
    let mut outputs = Vec::new();
    let mut keys = Vec::new();
    for sp in pairs(n_s) {
        for ip in pairs(n_i) {
            outputs.push(four_photon_occupation(n_s, n_i, sp, ip));
            keys.push((sp, ip));
        }
    }
    let vac = Occupation::vacuum(n_s, n_i);
    let t = transition_amplitudes(
        &circuit,
        &[vac],
        &outputs,
        cap_choice(opts),
        &TruncationPolicy::default(),
    )?;
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut text = String::new();
    for (k, (sp, ip)) in keys.iter().enumerate() {
        let brute = t.get(k, 0);
        let closed = four_photon_awp_amplitude(&p, *sp, *ip)?;
        let cmp = AmplitudeComparison::new(brute, closed, p.nc, t.cap);
        let res = cmp.scaled_residual(DualityConfig::default().noise_floor);
        worst = worst.max(res);
        let ratio = if closed.norm() > 0.0 {
            brute / closed
        } else {
            Cx::new(f64::NAN, f64::NAN)
        };
        text.push_str(&format!(
            "s{:?} i{:?}: brute {:+.6e}{:+.6e}i  ratio to closed form {:.6}  residual {:.2e}\n",
            sp,
            ip,
            brute.re,
            brute.im,
            ratio.norm(),
            res
        ));
        rows.push(json!({
            "s_pair": [sp.0, sp.1], "i_pair": [ip.0, ip.1],
            "brute": c(brute), "closed_form": c(closed), "ratio": c(ratio), "residual": res,
        }));
    }
    let passed = worst <= opts.tol;
    text.push_str(&format!(
        "nc = {:+.12}{:+.12}i, max residual {worst:.3e}\n",
        p.nc.re, p.nc.im
    ));
    let document = json!({"command": "awp", "cases": rows, "nc": c(p.nc), "cap": t.cap, "max_residual": worst, "passed": passed});
    Ok(Outcome {
        document,
        text,
        passed,
    })
}

fn reports(command: &str, list: Vec<VerificationReport>) -> Outcome {
    let passed = list.iter().all(|r| r.passed());
    let text = list.iter().map(|r| r.to_string()).collect();
    Outcome {
        document: json!({"command": command, "reports": list, "passed": passed}),
        text,
        passed,
    }
}

fn cmd_teleport(opts: &Options, r: f64, count: usize) -> Result<Outcome, CliError> {
    let mut list = Vec::new();
    for (h, v) in harness::random_polarizations(opts.seed, count) {
        let mut rep = harness::teleportation_demo(r, h, v)?;
        rep.seed = Some(opts.seed);
        list.push(rep);
    }
    let (h, v) = harness::random_polarizations(opts.seed, 1)[0];
    list.push(harness::teleportation_sweep(&[0.02, 0.05, 0.1], h, v)?);
    Ok(reports("teleport", list))
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let opts = &cli.opts;
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(CliError::Usage(format!(
            "--tol must be positive, got {}",
            opts.tol
        )));
    }
    match &cli.command {
        Command::Ptr => cmd_ptr(opts),
        Command::Amp { input, output } => cmd_amp(opts, input, output),
        Command::Verify { samples } => cmd_verify(opts, *samples),
        Command::Qfunc { points } => cmd_qfunc(opts, *points),
        Command::Awp => cmd_awp(opts),
        Command::Examples => Ok(reports("examples", harness::run_examples())),
        Command::Teleport { r, count } => cmd_teleport(opts, *r, *count),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Results go to `out`, diagnostics to `err`.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok(o) => {
            let written = if cli.opts.json {
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&o.document).expect("json document")
                )
            } else {
                write!(out, "{}", o.text)
            };
            if written.is_err() {
                return EXIT_USAGE;
            }
            if o.passed {
                EXIT_PASS
            } else {
                let _ = writeln!(err, "residual above tolerance {}", cli.opts.tol);
                EXIT_RESIDUAL
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
