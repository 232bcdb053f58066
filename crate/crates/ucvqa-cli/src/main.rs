//! `ucvqa <experiment> [flags]` — run one experiment and emit its sweep CSV.
//!
//! Exit codes: 0 on success, 2 on configuration errors (including flag and
//! config-file parsing), 1 on runtime I/O failures.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::Parser;

use ucvqa::circuits::{
    build_qsp_ansatz, build_qst_ansatz, single_qubit_tomography_ansatz, AnsatzSpec, Circuit,
    CircuitKind,
};
use ucvqa::harness::{
    records_to_csv, run_experiment, Experiment, ExperimentConfig, LayerChoice,
};
use ucvqa::noisemit::CalibrationMatrix;
use ucvqa::optimize::OptimizerKind;

#[derive(Parser, Debug)]
#[command(name = "ucvqa", version, about = "Variational quantum compilation experiments")]
struct Cli {
    /// Experiment: qsp, qst, qst1q, bp_scan, mitigation, shadow_compare
    experiment: String,

    /// Inclusive qubit range, e.g. `3..7` or a single value
    #[arg(long, value_name = "A..B")]
    qubits: Option<String>,

    /// Inclusive layer range `A..B`, or `optimal` for the built-in table
    #[arg(long, value_name = "A..B|optimal")]
    layers: Option<String>,

    /// Ansatz structure (linear, graph_polygon, graph_star, w_chain, w_alternating, w_all_to_all)
    #[arg(long)]
    ansatz: Option<String>,

    /// Target class for preparation experiments (ghz, w)
    #[arg(long)]
    target: Option<String>,

    /// Optimizer (sgd, adam, qng)
    #[arg(long)]
    optimizer: Option<String>,

    /// Measurement shots per cost evaluation (0 = exact)
    #[arg(long)]
    shots: Option<u64>,

    /// Iteration budget per training run
    #[arg(long)]
    iterations: Option<usize>,

    /// Readout flip probability per qubit
    #[arg(long, value_name = "EPS")]
    noise: Option<f64>,

    /// Apply calibration-matrix mitigation to measured distributions
    #[arg(long)]
    mitigate: bool,

    /// Trials per sweep point (sample count for bp_scan)
    #[arg(long)]
    trials: Option<usize>,

    /// Master seed; all per-trial seeds derive from it
    #[arg(long)]
    seed: Option<u64>,

    /// Write the sweep CSV here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Exact statevector mode (same as --shots 0)
    #[arg(long)]
    exact: bool,

    /// Print the configured ansatz circuit (line format) and exit
    #[arg(long)]
    dump_circuit: bool,

    /// Print the calibration matrix CSV for the configured N and noise, then exit
    #[arg(long)]
    dump_calibration: bool,

    /// INI-style key=value file; values in the file override flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Write per-run trace CSVs (iteration,cost,p0,ms) into this directory
    #[arg(long, value_name = "DIR")]
    trace_dir: Option<PathBuf>,
}

enum CliError {
    Config(String),
    Io(String),
}

impl From<ucvqa::Error> for CliError {
    fn from(e: ucvqa::Error) -> Self {
        match e {
            ucvqa::Error::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn parse_range(text: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("cannot parse qubit/layer range `{text}`"));
    if let Some((a, b)) = text.split_once("..") {
        let lo = a.trim().parse().map_err(|_| bad())?;
        let hi = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        Ok((lo, hi))
    } else {
        let v = text.trim().parse().map_err(|_| bad())?;
        Ok((v, v))
    }
}

fn apply_override(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), CliError> {
    let conf = |msg: String| CliError::Config(msg);
    match key {
        "qubits" => cfg.qubits = parse_range(value)?,
        "layers" => {
            cfg.layers = if value == "optimal" {
                LayerChoice::Optimal
            } else {
                let (a, b) = parse_range(value)?;
                LayerChoice::Range(a, b)
            }
        }
        "ansatz" => cfg.ansatz = CircuitKind::from_str(value)?,
        "target" => cfg.target = CircuitKind::from_str(value)?,
        "optimizer" => cfg.optimizer = OptimizerKind::from_str(value)?,
        "shots" => {
            cfg.shots = value.parse().map_err(|_| conf(format!("bad shots `{value}`")))?
        }
        "iterations" => {
            cfg.iterations =
                value.parse().map_err(|_| conf(format!("bad iterations `{value}`")))?
        }
        "noise" => cfg.noise = value.parse().map_err(|_| conf(format!("bad noise `{value}`")))?,
        "mitigate" => {
            cfg.mitigate = value.parse().map_err(|_| conf(format!("bad mitigate `{value}`")))?
        }
        "trials" => {
            cfg.trials = value.parse().map_err(|_| conf(format!("bad trials `{value}`")))?
        }
        "seed" => cfg.seed = value.parse().map_err(|_| conf(format!("bad seed `{value}`")))?,
        "exact" => {
            let flag: bool =
                value.parse().map_err(|_| conf(format!("bad exact `{value}`")))?;
            if flag {
                cfg.shots = 0;
            }
        }
        "shadow_measurements" => {
            cfg.shadow_measurements =
                value.parse().map_err(|_| conf(format!("bad shadow_measurements `{value}`")))?
        }
        other => return Err(conf(format!("unknown config key `{other}`"))),
    }
    Ok(())
}

fn apply_config_file(cfg: &mut ExperimentConfig, path: &PathBuf) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('[') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("malformed config line `{line}`")))?;
        apply_override(cfg, key.trim(), value.trim())?;
    }
    Ok(())
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let experiment = Experiment::from_str(&cli.experiment)?;
    let mut cfg = ExperimentConfig::defaults_for(experiment);
    if let Some(q) = &cli.qubits {
        apply_override(&mut cfg, "qubits", q)?;
    }
    if let Some(l) = &cli.layers {
        apply_override(&mut cfg, "layers", l)?;
    }
    if let Some(a) = &cli.ansatz {
        apply_override(&mut cfg, "ansatz", a)?;
    }
    if let Some(t) = &cli.target {
        apply_override(&mut cfg, "target", t)?;
    }
    if let Some(o) = &cli.optimizer {
        apply_override(&mut cfg, "optimizer", o)?;
    }
    if let Some(s) = cli.shots {
        cfg.shots = s;
    }
    if let Some(i) = cli.iterations {
        cfg.iterations = i;
    }
    if let Some(n) = cli.noise {
        cfg.noise = n;
    }
    if cli.mitigate {
        cfg.mitigate = true;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.exact {
        cfg.shots = 0;
    }
    // Per the interface contract, file values take precedence over flags.
    if let Some(path) = &cli.config {
        apply_config_file(&mut cfg, path)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ansatz_for_dump(cfg: &ExperimentConfig) -> Result<Circuit, CliError> {
    let n = cfg.qubits.0;
    let l = match cfg.layers {
        LayerChoice::Range(a, _) => a,
        LayerChoice::Optimal => 1,
    };
    let circuit = match cfg.experiment {
        Experiment::Qst1q => single_qubit_tomography_ansatz(),
        Experiment::Qst | Experiment::ShadowCompare => {
            build_qst_ansatz(&AnsatzSpec::new(cfg.ansatz, n, l))?
        }
        _ => build_qsp_ansatz(&AnsatzSpec::new(cfg.ansatz, n, l))?,
    };
    Ok(circuit)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = build_config(cli)?;

    if cli.dump_circuit || cli.dump_calibration {
        if cli.dump_circuit {
            let circuit = ansatz_for_dump(&cfg)?;
            print!(
                "# {} ansatz, N={} params={}\n{}",
                cfg.ansatz,
                circuit.n_qubits(),
                circuit.n_params(),
                circuit.to_lines()?
            );
        }
        if cli.dump_calibration {
            let calib = CalibrationMatrix::build(cfg.qubits.0, cfg.noise, 0, cfg.seed)?;
            print!("{}", calib.to_csv());
        }
        return Ok(());
    }

    let output = run_experiment(&cfg)?;
    let csv = records_to_csv(&output.records);
    match &cli.out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?,
        None => print!("{csv}"),
    }
    if let Some(dir) = &cli.trace_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
        for (key, trace) in &output.traces {
            let path = dir.join(format!("{key}.csv"));
            std::fs::write(&path, trace.to_csv())
                .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
