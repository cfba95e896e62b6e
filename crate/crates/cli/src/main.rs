//! Command-line front end: operation validation, capacity bound reports,
//! exact PDL analysis, superadditivity reports and heat-map grid scans.
//!
//! stdout carries machine-readable JSON or CSV only; human-readable notes go
//! to stderr. Exit codes: 0 success, 1 I/O or parse error, 2 invalid
//! operation or parameters, 3 numerical failure.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use gecap_core::capacity::{
    classical_bounds, holevo_capacity_bracket, quantum_bounds, BoundsReport, OptimOptions,
};
use gecap_core::erasure::{is_antidegradable_rank1, is_degradable_rank1};
use gecap_core::kraus::{pdl_operation, phase_covariant_operation, OperationClass, PdlParams};
use gecap_core::pdl::{
    entropy_decrement_check, scan_grid, solve_q1_pdl, superadditivity_report, Region, ScanKind,
};
use gecap_core::{Error as CoreError, KrausMap};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "gecap",
    about = "Capacity analysis for trace-decreasing quantum operations and generalized erasure channels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify an operation (channel / unbiased / biased / invalid) with
    /// spectral diagnostics.
    Validate {
        #[command(flatten)]
        input: OpInput,
        /// Classification tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Classical or quantum capacity bounds for the generalized erasure
    /// channel of the operation.
    Bounds {
        #[command(flatten)]
        input: OpInput,
        #[arg(long, value_enum)]
        which: WhichBounds,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Also compute the Holevo-capacity bracket through the
        /// normalized-image channel (classical bounds only; runs the
        /// ensemble optimizer).
        #[arg(long)]
        holevo_bracket: bool,
    },
    /// Exact single-letter quantum capacity of the PDL erasure channel.
    Q1Pdl {
        /// Transmission probabilities "p_H,p_V".
        #[arg(long, value_parser = Pair::from_str)]
        pdl: Pair,
    },
    /// Two-letter superadditivity report for the PDL erasure channel.
    Superadd {
        /// Transmission probabilities "p_H,p_V".
        #[arg(long, value_parser = Pair::from_str)]
        pdl: Pair,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Uniform (p_H, p_V) grid scan written as CSV.
    Scan {
        /// One of: q1-heatmap, superadd-lower-bound, superadd-gap.
        #[arg(long)]
        kind: String,
        /// Grid points per axis (default: 101 for q1-heatmap, 51 otherwise).
        #[arg(long)]
        resolution: Option<usize>,
        /// Scan rectangle "pH_min,pH_max,pV_min,pV_max" (default depends on kind).
        #[arg(long, value_parser = Quad::from_str)]
        region: Option<Quad>,
        /// CSV output path.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum WhichBounds {
    Classical,
    Quantum,
}

/// Operation input: a JSON file or one of the named constructor families.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct OpInput {
    /// Path to an operation spec: either a Kraus map
    /// {"dim_in":..,"dim_out":..,"kraus":[..]} or a named constructor
    /// {"pdl":{"p_h":..,"p_v":..}} / {"phase_covariant":{"a":..,..}}.
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    /// PDL transmission probabilities "p_H,p_V".
    #[arg(long, value_parser = Pair::from_str, value_name = "P_H,P_V")]
    pdl: Option<Pair>,
    /// Phase-covariant operation parameters "a,b,c,d".
    #[arg(long = "phase-covariant", value_parser = Quad::from_str, value_name = "A,B,C,D")]
    phase_covariant: Option<Quad>,
}

#[derive(Clone, Copy, Debug)]
struct Pair(f64, f64);

impl FromStr for Pair {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 2 {
            return Err(format!("expected two comma-separated numbers, got '{s}'"));
        }
        let a = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
        let b = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
        Ok(Pair(a, b))
    }
}

#[derive(Clone, Copy, Debug)]
struct Quad(f64, f64, f64, f64);

impl FromStr for Quad {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 4 {
            return Err(format!("expected four comma-separated numbers, got '{s}'"));
        }
        let mut vals = [0.0; 4];
        for (v, p) in vals.iter_mut().zip(&parts) {
            *v = p.trim().parse().map_err(|e| format!("{e}"))?;
        }
        Ok(Quad(vals[0], vals[1], vals[2], vals[3]))
    }
}

/// CLI failure with its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::Io(_) => 1,
            CoreError::NumericalFailure(_) => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

/// JSON shapes accepted by --spec files.
#[derive(Deserialize)]
#[serde(untagged)]
enum OperationSpecFile {
    Pdl { pdl: PdlParams },
    PhaseCovariant { phase_covariant: PhaseCovariantParams },
    Kraus(KrausMap),
}

#[derive(Deserialize)]
struct PhaseCovariantParams {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

fn load_operation(input: &OpInput) -> Result<KrausMap, Failure> {
    if let Some(path) = &input.spec {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::new(1, format!("cannot read {}: {e}", path.display())))?;
        let parsed: OperationSpecFile = serde_json::from_str(&text)
            .map_err(|e| Failure::new(1, format!("cannot parse {}: {e}", path.display())))?;
        return match parsed {
            OperationSpecFile::Pdl { pdl } => {
                let params = PdlParams::new(pdl.p_h, pdl.p_v)?;
                Ok(pdl_operation(params))
            }
            OperationSpecFile::PhaseCovariant { phase_covariant: p } => {
                Ok(phase_covariant_operation(p.a, p.b, p.c, p.d)?)
            }
            OperationSpecFile::Kraus(map) => Ok(map),
        };
    }
    if let Some(Pair(p_h, p_v)) = input.pdl {
        return Ok(pdl_operation(PdlParams::new(p_h, p_v)?));
    }
    if let Some(Quad(a, b, c, d)) = input.phase_covariant {
        return Ok(phase_covariant_operation(a, b, c, d)?);
    }
    Err(Failure::new(1, "one of --spec, --pdl, --phase-covariant is required"))
}

fn emit_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::new(1, format!("serialization failed: {e}")))?;
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct ValidateReport {
    schema_version: u32,
    classification: OperationClass,
    dim_in: usize,
    dim_out: usize,
    kraus_rank: usize,
    bias: f64,
    /// Spectrum of Lambda^dag[I], descending.
    dual_spectrum: Vec<f64>,
    choi_min_eigenvalue: f64,
}

fn cmd_validate(input: &OpInput, tol: f64) -> Result<u8, Failure> {
    let map = load_operation(input)?;
    let classification = map.validate_with_tol(tol);
    let dual_spectrum = map.dual_on_identity().eigenvalues()?;
    let bias = dual_spectrum[0] - dual_spectrum.last().copied().unwrap_or(0.0);
    let report = ValidateReport {
        schema_version: SCHEMA_VERSION,
        classification,
        dim_in: map.dim_in(),
        dim_out: map.dim_out(),
        kraus_rank: map.effective_kraus_rank(),
        bias,
        dual_spectrum,
        choi_min_eigenvalue: map.choi().matrix.min_eigenvalue()?,
    };
    emit_json(&report)?;
    eprintln!("classification: {classification}, bias {bias:.6}");
    Ok(if classification == OperationClass::Invalid { 2 } else { 0 })
}

#[derive(Serialize)]
struct DegradabilityVerdict {
    degradable: Option<bool>,
    antidegradable: Option<bool>,
    note: Option<String>,
}

#[derive(Serialize)]
struct BoundsCliReport {
    schema_version: u32,
    which: String,
    #[serde(flatten)]
    bounds: BoundsReport,
    degradability: DegradabilityVerdict,
    annotation: Option<String>,
    holevo_bracket: Option<BoundsReport>,
}

fn cmd_bounds(
    input: &OpInput,
    which: WhichBounds,
    restarts: usize,
    seed: u64,
    with_bracket: bool,
) -> Result<u8, Failure> {
    let map = load_operation(input)?;
    if map.validate() == OperationClass::Invalid {
        return Err(Failure::new(2, "operation is invalid (not CP trace-nonincreasing)"));
    }
    let opts = OptimOptions { restarts, seed, ..OptimOptions::default() };

    let degradability = if map.effective_kraus_rank() == 1 && map.dim_in() == map.dim_out() {
        let deg = is_degradable_rank1(&map)?;
        let anti = is_antidegradable_rank1(&map)?;
        DegradabilityVerdict {
            degradable: Some(deg.degradable),
            antidegradable: Some(anti),
            note: None,
        }
    } else {
        DegradabilityVerdict {
            degradable: None,
            antidegradable: None,
            note: Some("degradability undecided: closed form covers Kraus rank 1 only".into()),
        }
    };
    let annotation = match (degradability.degradable, degradability.antidegradable) {
        (Some(true), _) => Some("degradable: Q(Gamma) = Q1(Gamma)".to_string()),
        (_, Some(true)) => Some("antidegradable: Q(Gamma) = 0".to_string()),
        _ => None,
    };

    let (which_name, bounds, bracket) = match which {
        WhichBounds::Classical => {
            let b = classical_bounds(&map)?;
            let bracket = if with_bracket {
                Some(holevo_capacity_bracket(&map, &opts)?)
            } else {
                None
            };
            ("classical", b, bracket)
        }
        WhichBounds::Quantum => ("quantum", quantum_bounds(&map, &opts)?, None),
    };

    let report = BoundsCliReport {
        schema_version: SCHEMA_VERSION,
        which: which_name.into(),
        bounds,
        degradability,
        annotation,
        holevo_bracket: bracket,
    };
    eprintln!(
        "{} capacity of Gamma_Lambda in [{:.6}, {:.6}] bits",
        which_name, report.bounds.lower, report.bounds.upper
    );
    emit_json(&report)?;
    Ok(0)
}

fn cmd_q1_pdl(pdl: Pair) -> Result<u8, Failure> {
    let sol = solve_q1_pdl(pdl.0, pdl.1)?;
    #[derive(Serialize)]
    struct Report {
        schema_version: u32,
        #[serde(flatten)]
        result: gecap_core::pdl::PdlQ1Result,
    }
    eprintln!("Q1(Gamma_pdl({}, {})) = {:.9} bits", pdl.0, pdl.1, sol.q1);
    emit_json(&Report { schema_version: SCHEMA_VERSION, result: sol })?;
    Ok(0)
}

fn cmd_superadd(pdl: Pair, restarts: usize, seed: u64) -> Result<u8, Failure> {
    let opts = OptimOptions { restarts, seed, ..OptimOptions::default() };
    let report = superadditivity_report(pdl.0, pdl.1, &opts)?;
    let decrement = if solve_q1_pdl(pdl.0, pdl.1)?.z_star.is_some() {
        Some(entropy_decrement_check(pdl.0, pdl.1)?)
    } else {
        None
    };
    #[derive(Serialize)]
    struct Report {
        schema_version: u32,
        #[serde(flatten)]
        superadditivity: gecap_core::pdl::SuperadditivityReport,
        entropy_decrements: Option<gecap_core::pdl::EntropyDecrementReport>,
    }
    eprintln!(
        "gap = {:.6e} bits (proven lower bound {:.6e})",
        report.gap, report.lower_bound
    );
    emit_json(&Report {
        schema_version: SCHEMA_VERSION,
        superadditivity: report,
        entropy_decrements: decrement,
    })?;
    Ok(0)
}

fn cmd_scan(
    kind: &str,
    resolution: Option<usize>,
    region: Option<Quad>,
    output: &PathBuf,
    restarts: usize,
    seed: u64,
) -> Result<u8, Failure> {
    let kind = ScanKind::parse(kind)?;
    let resolution = resolution.unwrap_or(match kind {
        ScanKind::Q1Heatmap => 101,
        _ => 51,
    });
    let region = region.map(|Quad(a, b, c, d)| Region {
        p_h_min: a,
        p_h_max: b,
        p_v_min: c,
        p_v_max: d,
    });
    let opts = OptimOptions { restarts, seed, ..OptimOptions::default() };
    let scan = scan_grid(kind, resolution, region, &opts)?;

    let file = fs::File::create(output)
        .map_err(|e| Failure::new(1, format!("cannot create {}: {e}", output.display())))?;
    let mut writer = std::io::BufWriter::new(file);
    scan.write_csv(&mut writer)?;
    writer
        .flush()
        .map_err(|e| Failure::new(1, format!("cannot write {}: {e}", output.display())))?;

    let (p_h, p_v, value) = scan.argmax();
    #[derive(Serialize)]
    struct Summary {
        schema_version: u32,
        kind: ScanKind,
        resolution: usize,
        rows: usize,
        csv_path: String,
        argmax: ArgMax,
    }
    #[derive(Serialize)]
    struct ArgMax {
        p_h: f64,
        p_v: f64,
        value: f64,
    }
    eprintln!(
        "scan complete: {} rows, max {:.6e} at (p_H, p_V) = ({:.4}, {:.4})",
        scan.rows.len(),
        value,
        p_h,
        p_v
    );
    emit_json(&Summary {
        schema_version: SCHEMA_VERSION,
        kind,
        resolution,
        rows: scan.rows.len(),
        csv_path: output.display().to_string(),
        argmax: ArgMax { p_h, p_v, value },
    })?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Validate { input, tol } => cmd_validate(&input, tol),
        Command::Bounds { input, which, restarts, seed, holevo_bracket } => {
            cmd_bounds(&input, which, restarts, seed, holevo_bracket)
        }
        Command::Q1Pdl { pdl } => cmd_q1_pdl(pdl),
        Command::Superadd { pdl, restarts, seed } => cmd_superadd(pdl, restarts, seed),
        Command::Scan { kind, resolution, region, output, restarts, seed } => {
            cmd_scan(&kind, resolution, region, &output, restarts, seed)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is a
            // parse error (exit 1).
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
