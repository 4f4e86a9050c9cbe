//! Command-line entry point: config parsing, run orchestration, checkpoint
//! persistence, and diagnostics emission.
//!
//! Config files are plain `key = value` lines with `#` comments and dotted
//! keys; every diagnostic names the offending key, constraint and line.
//! Checkpoints are fixed-layout little-endian binary ("DCRF"), bit-exact
//! under write/read/write.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, SimError};
use crate::evolve::{run, DiagnosticsRow, IntegratorSpec, Scheme};
use crate::experiment::{approx_sweep, conservation_audit, SweepParams};
use crate::field::{from_profile, sobolev_and_sigma, Field, Grid1D, Representation};
use crate::hermite::{build_basis, MAX_MODES};

/// Which equation a run integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Equation {
    Phnls,
    Dcr,
}

/// Initial datum selector.
#[derive(Debug, Clone, Serialize)]
pub enum InitialData {
    /// amplitude * e^{-x1^2/(2 sigma^2)} placed in mode 0.
    GaussianMode0 { sigma: f64, amplitude: f64 },
    /// Sum of per-mode Gaussians (n, amplitude, sigma).
    ModeMix(Vec<(usize, f64, f64)>),
    /// Resume from a binary checkpoint (grid and modes come from its header).
    Checkpoint(PathBuf),
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub equation: Equation,
    pub n_points: usize,
    pub half_length: f64,
    pub n_modes: usize,
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub diag_stride: usize,
    pub initial_data: InitialData,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Low-pass exponent for the approximation sweep.
    pub sweep_theta: f64,
    /// Target DCR step for the approximation sweep.
    pub sweep_dcr_dt: f64,
    /// Dyadic mesh intervals for the approximation sweep.
    pub sweep_samples: usize,
}

/// Line-precise configuration diagnostic.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn cfg_err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

/// Parse and validate a `key = value` config text into a full RunConfig,
/// applying documented defaults for absent keys.
pub fn parse_config(text: &str) -> std::result::Result<RunConfig, ConfigError> {
    let mut equation: Option<(Equation, usize)> = None;
    let mut scheme: Option<(Scheme, usize)> = None;
    let mut n_points = 256usize;
    let mut half_length = 32.0f64;
    let mut n_modes = 12usize;
    let mut dt = 1e-3f64;
    let mut t_end = 1.0f64;
    let mut diag_stride = 10usize;
    let mut initial_data = InitialData::GaussianMode0 {
        sigma: 3.0,
        amplitude: 0.5,
    };
    let mut seed = 0u64;
    let mut output_dir = PathBuf::from("out");
    let mut sweep_theta = 0.1f64;
    let mut sweep_dcr_dt = 2.5e-3f64;
    let mut sweep_samples = 16usize;
    let mut n_points_line = 0usize;
    let mut dt_line = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| cfg_err(lineno, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(cfg_err(lineno, format!("key `{key}` has an empty value")));
        }
        match key {
            "equation" => {
                let eq = match value {
                    "phnls" => Equation::Phnls,
                    "dcr" => Equation::Dcr,
                    other => {
                        return Err(cfg_err(
                            lineno,
                            format!("equation must be `phnls` or `dcr`, got `{other}`"),
                        ))
                    }
                };
                equation = Some((eq, lineno));
            }
            "integrator.scheme" => {
                let sc = match value {
                    "strang_phnls" => Scheme::StrangPhnls,
                    "lawson_rk4_dcr" => Scheme::LawsonRk4Dcr,
                    other => {
                        return Err(cfg_err(
                            lineno,
                            format!(
                                "integrator.scheme must be `strang_phnls` or `lawson_rk4_dcr`, got `{other}`"
                            ),
                        ))
                    }
                };
                scheme = Some((sc, lineno));
            }
            "grid.n_points" => {
                n_points = parse_num::<usize>(key, value, lineno)?;
                n_points_line = lineno;
            }
            "grid.half_length" => {
                half_length = parse_num::<f64>(key, value, lineno)?;
                if !(half_length > 0.0) {
                    return Err(cfg_err(lineno, "grid.half_length must be positive"));
                }
            }
            "n_modes" => {
                n_modes = parse_num::<usize>(key, value, lineno)?;
                if n_modes == 0 || n_modes > MAX_MODES {
                    return Err(cfg_err(
                        lineno,
                        format!("n_modes must be in 1..={MAX_MODES}"),
                    ));
                }
            }
            "integrator.dt" => {
                dt = parse_num::<f64>(key, value, lineno)?;
                if !(dt > 0.0) {
                    return Err(cfg_err(lineno, "integrator.dt must be positive"));
                }
                dt_line = lineno;
            }
            "integrator.t_end" => {
                t_end = parse_num::<f64>(key, value, lineno)?;
                if !(t_end > 0.0) {
                    return Err(cfg_err(lineno, "integrator.t_end must be positive"));
                }
            }
            "integrator.diag_stride" => {
                diag_stride = parse_num::<usize>(key, value, lineno)?;
                if diag_stride == 0 {
                    return Err(cfg_err(lineno, "integrator.diag_stride must be positive"));
                }
            }
            "initial_data" => {
                initial_data = parse_initial_data(value, lineno)?;
            }
            "seed" => {
                seed = parse_num::<u64>(key, value, lineno)?;
            }
            "output_dir" => {
                output_dir = PathBuf::from(value);
            }
            "sweep.theta" => {
                sweep_theta = parse_num::<f64>(key, value, lineno)?;
                if !(sweep_theta > 0.0 && sweep_theta < 1.0) {
                    return Err(cfg_err(lineno, "sweep.theta must lie in (0, 1)"));
                }
            }
            "sweep.dcr_dt" => {
                sweep_dcr_dt = parse_num::<f64>(key, value, lineno)?;
                if !(sweep_dcr_dt > 0.0) {
                    return Err(cfg_err(lineno, "sweep.dcr_dt must be positive"));
                }
            }
            "sweep.samples" => {
                sweep_samples = parse_num::<usize>(key, value, lineno)?;
                if sweep_samples == 0 {
                    return Err(cfg_err(lineno, "sweep.samples must be positive"));
                }
            }
            other => {
                return Err(cfg_err(lineno, format!("unknown key `{other}`")));
            }
        }
    }

    let (equation, eq_line) =
        equation.ok_or_else(|| cfg_err(0, "missing required key `equation`"))?;
    let scheme = match scheme {
        Some((sc, line)) => {
            let ok = matches!(
                (equation, sc),
                (Equation::Phnls, Scheme::StrangPhnls) | (Equation::Dcr, Scheme::LawsonRk4Dcr)
            );
            if !ok {
                return Err(cfg_err(
                    line,
                    format!(
                        "integrator.scheme {:?} cannot integrate equation {:?} (pairing: strang_phnls <-> phnls, lawson_rk4_dcr <-> dcr)",
                        sc, equation
                    ),
                ));
            }
            sc
        }
        None => match equation {
            Equation::Phnls => Scheme::StrangPhnls,
            Equation::Dcr => Scheme::LawsonRk4Dcr,
        },
    };
    if !n_points.is_power_of_two() || n_points < 8 {
        return Err(cfg_err(
            n_points_line,
            "grid.n_points must be a power of two >= 8",
        ));
    }
    if dt > t_end {
        return Err(cfg_err(dt_line, "integrator.dt must not exceed t_end"));
    }
    if scheme == Scheme::StrangPhnls {
        let guard = dt * (2.0 * n_modes as f64 + 1.0);
        if guard > std::f64::consts::FRAC_PI_4 + 1e-12 {
            return Err(cfg_err(
                dt_line.max(eq_line),
                format!("integrator.dt violates the trap phase guard: dt (2 n_modes + 1) = {guard:.4} > pi/4"),
            ));
        }
    }
    Ok(RunConfig {
        equation,
        n_points,
        half_length,
        n_modes,
        scheme,
        dt,
        t_end,
        diag_stride,
        initial_data,
        seed,
        output_dir,
        sweep_theta,
        sweep_dcr_dt,
        sweep_samples,
    })
}

fn parse_num<T: std::str::FromStr>(
    key: &str,
    value: &str,
    line: usize,
) -> std::result::Result<T, ConfigError> {
    value
        .parse::<T>()
        .map_err(|_| cfg_err(line, format!("key `{key}`: cannot parse `{value}`")))
}

fn parse_initial_data(value: &str, line: usize) -> std::result::Result<InitialData, ConfigError> {
    let open = value
        .find('(')
        .ok_or_else(|| cfg_err(line, "initial_data needs a parameter list, e.g. gaussian_mode0(3.0, 0.5)"))?;
    if !value.ends_with(')') {
        return Err(cfg_err(line, "initial_data: unbalanced parentheses"));
    }
    let name = value[..open].trim();
    let args = &value[open + 1..value.len() - 1];
    match name {
        "gaussian_mode0" => {
            let parts: Vec<&str> = args.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(cfg_err(line, "gaussian_mode0 takes (sigma, amplitude)"));
            }
            let sigma = parse_num::<f64>("initial_data.sigma", parts[0], line)?;
            let amplitude = parse_num::<f64>("initial_data.amplitude", parts[1], line)?;
            if !(sigma > 0.0) {
                return Err(cfg_err(line, "gaussian_mode0: sigma must be positive"));
            }
            Ok(InitialData::GaussianMode0 { sigma, amplitude })
        }
        "mode_mix" => {
            let mut comps = Vec::new();
            for group in split_groups(args) {
                let inner = group
                    .trim()
                    .strip_prefix('(')
                    .and_then(|s| s.strip_suffix(')'))
                    .ok_or_else(|| {
                        cfg_err(line, "mode_mix entries look like (n, amplitude, sigma)")
                    })?;
                let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(cfg_err(line, "mode_mix entries take (n, amplitude, sigma)"));
                }
                let n = parse_num::<usize>("mode_mix.n", parts[0], line)?;
                let amplitude = parse_num::<f64>("mode_mix.amplitude", parts[1], line)?;
                let sigma = parse_num::<f64>("mode_mix.sigma", parts[2], line)?;
                if !(sigma > 0.0) {
                    return Err(cfg_err(line, "mode_mix: sigma must be positive"));
                }
                comps.push((n, amplitude, sigma));
            }
            if comps.is_empty() {
                return Err(cfg_err(line, "mode_mix needs at least one component"));
            }
            Ok(InitialData::ModeMix(comps))
        }
        "checkpoint" => Ok(InitialData::Checkpoint(PathBuf::from(args.trim()))),
        other => Err(cfg_err(
            line,
            format!("unknown initial_data kind `{other}` (use gaussian_mode0, mode_mix or checkpoint)"),
        )),
    }
}

/// Split a comma-separated list at top level (parenthesized groups intact).
fn split_groups(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                cur.push(ch);
            }
            ',' if depth == 0 => {
                if !cur.trim().is_empty() {
                    out.push(cur.trim().to_string());
                }
                cur.clear();
            }
            _ => cur.push(ch),
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

/// Build the initial field described by the config. For checkpoint data the
/// stored header is authoritative for grid and truncation.
pub fn build_initial_field(config: &RunConfig) -> Result<(Field, f64)> {
    match &config.initial_data {
        InitialData::GaussianMode0 { sigma, amplitude } => {
            let grid = Grid1D::new(config.n_points, config.half_length)?;
            let basis = Arc::new(build_basis(config.n_modes)?);
            let (s, a) = (*sigma, *amplitude);
            Ok((
                from_profile(grid, basis, move |n, x| {
                    if n == 0 {
                        Complex64::new(a * (-x * x / (2.0 * s * s)).exp(), 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                }),
                0.0,
            ))
        }
        InitialData::ModeMix(comps) => {
            let grid = Grid1D::new(config.n_points, config.half_length)?;
            let basis = Arc::new(build_basis(config.n_modes)?);
            for (n, _, _) in comps {
                if *n >= config.n_modes {
                    return Err(SimError::invalid(format!(
                        "mode_mix component n = {n} outside truncation {}",
                        config.n_modes
                    )));
                }
            }
            let comps = comps.clone();
            Ok((
                from_profile(grid, basis, move |n, x| {
                    let mut v = Complex64::new(0.0, 0.0);
                    for &(m, amp, sigma) in &comps {
                        if m == n {
                            v += Complex64::new(amp * (-x * x / (2.0 * sigma * sigma)).exp(), 0.0);
                        }
                    }
                    v
                }),
                0.0,
            ))
        }
        InitialData::Checkpoint(path) => read_checkpoint(path),
    }
}

const MAGIC: &[u8; 4] = b"DCRF";
const VERSION: u32 = 1;

/// Write a bit-exact binary checkpoint: magic, version, dimensions, box,
/// time, then n_points x n_modes little-endian complex doubles, x1-major.
/// The payload stores the physical representation.
pub fn write_checkpoint(path: &Path, field: &Field, time: f64) -> Result<()> {
    let f = field.to_representation(Representation::PhysicalX1);
    let mut buf = Vec::with_capacity(28 + 16 * f.data().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(f.n_points() as u32).to_le_bytes());
    buf.extend_from_slice(&(f.n_modes() as u32).to_le_bytes());
    buf.extend_from_slice(&f.grid().half_length().to_le_bytes());
    buf.extend_from_slice(&time.to_le_bytes());
    let np = f.n_points();
    for j in 0..np {
        for n in 0..f.n_modes() {
            let v = f.data()[n * np + j];
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Read a checkpoint back into a field and its stored time.
pub fn read_checkpoint(path: &Path) -> Result<(Field, f64)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 28 || &bytes[0..4] != MAGIC {
        return Err(SimError::Checkpoint("missing DCRF magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(SimError::Checkpoint(format!(
            "unsupported version {version}"
        )));
    }
    let n_points = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let n_modes = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let half_length = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let time = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let expected = 32 + 16 * n_points * n_modes;
    if bytes.len() != expected {
        return Err(SimError::Checkpoint(format!(
            "payload length {} does not match header ({} expected)",
            bytes.len(),
            expected
        )));
    }
    let grid = Grid1D::new(n_points, half_length)?;
    let basis = Arc::new(build_basis(n_modes)?);
    let mut data = vec![Complex64::new(0.0, 0.0); n_points * n_modes];
    let mut off = 32;
    for j in 0..n_points {
        for n in 0..n_modes {
            let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
            data[n * n_points + j] = Complex64::new(re, im);
            off += 16;
        }
    }
    let field = Field::from_data(grid, basis, data, Representation::PhysicalX1)?;
    Ok((field, time))
}

/// Header-only view of a checkpoint (for `info`).
pub fn checkpoint_info(path: &Path) -> Result<(u32, u32, f64, f64)> {
    let mut bytes = [0u8; 32];
    let mut file = fs::File::open(path)?;
    file.read_exact(&mut bytes)?;
    if &bytes[0..4] != MAGIC {
        return Err(SimError::Checkpoint("missing DCRF magic".into()));
    }
    let n_points = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let n_modes = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
    let half_length = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let time = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    Ok((n_points, n_modes, half_length, time))
}

/// Render diagnostics rows as CSV; floats use the shortest round-trip
/// decimal form so parsing reproduces the binary values.
pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut out = String::from("t,mass,energy,m_s,e_s,l6_accum,max_amp,boundary_mass,mode_tail\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.t,
            r.mass,
            r.energy,
            r.m_s,
            r.e_s,
            r.l6_accum,
            r.max_amp,
            r.boundary_mass,
            r.mode_tail
        ));
    }
    out
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a RunConfig,
    start_time: f64,
    wall_time_s: f64,
    drift: crate::experiment::ConservationReport,
}

fn simulate(config: &RunConfig, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let (f0, t0) = build_initial_field(config)?;
    let spec = IntegratorSpec {
        scheme: config.scheme,
        dt: config.dt,
        t_end: config.t_end,
        diag_stride: config.diag_stride,
    };
    let clock = Instant::now();
    let output = run(&f0, &spec)?;
    let wall = clock.elapsed().as_secs_f64();
    fs::write(out_dir.join("diagnostics.csv"), diagnostics_csv(&output.rows))?;
    write_checkpoint(
        &out_dir.join("final.dcrf"),
        &output.final_field,
        t0 + config.t_end,
    )?;
    let summary = Summary {
        config,
        start_time: t0,
        wall_time_s: wall,
        drift: conservation_audit(&output.rows, None),
    };
    fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serialization"),
    )?;
    Ok(())
}

fn sweep(config: &RunConfig, lambdas: &[f64], out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let (phi, _) = build_initial_field(config)?;
    let params = SweepParams {
        horizon: config.t_end,
        phnls_dt: config.dt,
        dcr_dt: config.sweep_dcr_dt,
        cutoff_exponent: config.sweep_theta,
        n_samples: config.sweep_samples,
    };
    let res = approx_sweep(&phi, lambdas, &params)?;
    let mut csv = String::from("lambda,err_l2,err_h1,valid\n");
    for i in 0..res.lambdas.len() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            res.lambdas[i],
            res.errors_l2[i],
            res.errors_h1[i],
            if res.validity[i].ok { 1 } else { 0 }
        ));
    }
    fs::write(out_dir.join("sweep.csv"), csv)?;
    Ok(())
}

fn norms_cmd(path: &Path) -> Result<()> {
    let (field, time) = read_checkpoint(path)?;
    let report = sobolev_and_sigma(&field, 6.0, 1.0)?;
    #[derive(Serialize)]
    struct NormsOut {
        time: f64,
        mass: f64,
        l6_l2: f64,
        hermite_sobolev_1: f64,
        sigma: f64,
    }
    let out = NormsOut {
        time,
        mass: report.mass,
        l6_l2: report.lp_l2,
        hermite_sobolev_1: report.hermite_sobolev_s,
        sigma: report.sigma,
    };
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(())
}

fn info_cmd(path: &Path) -> Result<()> {
    let (n_points, n_modes, half_length, time) = checkpoint_info(path)?;
    println!(
        "{}",
        serde_json::json!({
            "format": "DCRF",
            "version": VERSION,
            "n_points": n_points,
            "n_modes": n_modes,
            "half_length": half_length,
            "time": time,
        })
    );
    Ok(())
}

mod selftest;
pub use selftest::run_selftest;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "dcr-lab",
    about = "Spectral lab for the trapped quintic Schrödinger equation and its resonant limit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured equation and write diagnostics, final state
    /// and a run summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the large-scale approximation sweep and write sweep.csv.
    ApproxSweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated dilation factors, e.g. 2,4,8.
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute the built-in invariant suite; exits nonzero on any failure.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the norm bundle of a checkpointed state.
    Norms {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Print a checkpoint header.
    Info {
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

/// Entry point used by the binary; returns the process exit code.
/// 0 success, 1 configuration error, 2 runtime abort, 3 selftest failure.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are successful exits
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Simulate { config, out } => match load_config(&config) {
            Err(code) => code,
            Ok(cfg) => {
                let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
                match simulate(&cfg, &dir) {
                    Ok(()) => 0,
                    Err(e) => {
                        eprintln!("runtime abort: {e}");
                        2
                    }
                }
            }
        },
        Command::ApproxSweep {
            config,
            lambda,
            out,
        } => match load_config(&config) {
            Err(code) => code,
            Ok(cfg) => {
                let lambdas: std::result::Result<Vec<f64>, _> =
                    lambda.split(',').map(|s| s.trim().parse::<f64>()).collect();
                let lambdas = match lambdas {
                    Ok(v) if !v.is_empty() => v,
                    _ => {
                        eprintln!("--lambda expects a comma-separated list of numbers");
                        return 1;
                    }
                };
                let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
                match sweep(&cfg, &lambdas, &dir) {
                    Ok(()) => 0,
                    Err(e) => {
                        eprintln!("runtime abort: {e}");
                        2
                    }
                }
            }
        },
        Command::Selftest { seed } => {
            let failures = run_selftest(seed);
            if failures == 0 {
                0
            } else {
                eprintln!("selftest: {failures} check(s) failed");
                3
            }
        }
        Command::Norms { checkpoint } => match norms_cmd(&checkpoint) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("runtime abort: {e}");
                2
            }
        },
        Command::Info { checkpoint } => match info_cmd(&checkpoint) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("runtime abort: {e}");
                2
            }
        },
    }
}

fn load_config(path: &Path) -> std::result::Result<RunConfig, i32> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read config {}: {e}", path.display());
            return Err(1);
        }
    };
    match parse_config(&text) {
        Ok(cfg) => Ok(cfg),
        Err(e) => {
            eprintln!("{e}");
            Err(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config("equation = phnls\n").unwrap();
        assert_eq!(cfg.equation, Equation::Phnls);
        assert_eq!(cfg.scheme, Scheme::StrangPhnls);
        assert_eq!(cfg.n_points, 256);
        assert_eq!(cfg.n_modes, 12);
        assert_eq!(cfg.diag_stride, 10);
        assert_eq!(cfg.seed, 0);
        assert!(matches!(
            cfg.initial_data,
            InitialData::GaussianMode0 { .. }
        ));
    }

    #[test]
    fn power_of_two_guard_names_line() {
        let err = parse_config("equation = phnls\ngrid.n_points = 100\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("power of two"), "{}", err.message);
    }

    #[test]
    fn pairing_is_enforced() {
        let err = parse_config("equation = dcr\nintegrator.scheme = strang_phnls\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("pairing"), "{}", err.message);
        // paired combos pass
        assert!(parse_config("equation = dcr\nintegrator.scheme = lawson_rk4_dcr\n").is_ok());
    }

    #[test]
    fn unknown_keys_and_bad_values_are_line_precise() {
        let err = parse_config("equation = phnls\nbogus = 1\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("unknown key"));
        let err = parse_config("equation = phnls\nintegrator.dt = fast\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("cannot parse"));
        let err = parse_config("equation = warp\n").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn comments_and_spacing_are_tolerated() {
        let cfg = parse_config(
            "# run setup\nequation = dcr   # resonant\n\n  n_modes = 6\ninitial_data = mode_mix((0, 0.5, 2.0), (2, 0.25, 1.0))\n",
        )
        .unwrap();
        assert_eq!(cfg.n_modes, 6);
        match cfg.initial_data {
            InitialData::ModeMix(v) => {
                assert_eq!(v.len(), 2);
                assert_eq!(v[1].0, 2);
            }
            _ => panic!("expected mode_mix"),
        }
    }

    #[test]
    fn dt_guard_for_strang() {
        let err =
            parse_config("equation = phnls\nintegrator.dt = 0.1\nn_modes = 16\n").unwrap_err();
        assert!(err.message.contains("phase guard"), "{}", err.message);
        // same dt is fine for the dcr integrator
        assert!(parse_config("equation = dcr\nintegrator.dt = 0.1\nn_modes = 16\n").is_ok());
    }

    #[test]
    fn checkpoint_round_trip_bytes() {
        let dir = std::env::temp_dir().join(format!("dcrf-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let f = crate::field::random_field(32, 8.0, 5, 71);
        let p1 = dir.join("a.dcrf");
        let p2 = dir.join("b.dcrf");
        write_checkpoint(&p1, &f, 1.25).unwrap();
        let (g, t) = read_checkpoint(&p1).unwrap();
        assert_eq!(t, 1.25);
        write_checkpoint(&p2, &g, t).unwrap();
        let b1 = fs::read(&p1).unwrap();
        let b2 = fs::read(&p2).unwrap();
        assert_eq!(b1, b2, "write/read/write must be byte-identical");
        assert_eq!(b1.len(), 32 + 16 * 32 * 5);
        let (np, nm, hl, _) = checkpoint_info(&p1).unwrap();
        assert_eq!((np, nm, hl), (32, 5, 8.0));
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn corrupted_checkpoints_are_rejected() {
        let dir = std::env::temp_dir().join(format!("dcrf-bad-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("bad.dcrf");
        fs::write(&p, b"NOPE").unwrap();
        assert!(read_checkpoint(&p).is_err());
        let f = crate::field::random_field(32, 8.0, 2, 3);
        write_checkpoint(&p, &f, 0.0).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 8);
        fs::write(&p, &bytes).unwrap();
        assert!(read_checkpoint(&p).is_err());
        fs::remove_dir_all(&dir).ok();
    }
}
