//! Experiment runner for the quantum multi-baker library.
//!
//! A run is described by a [`RunConfig`], assembled from an optional flat
//! `key = value` file and command-line flags (flags win). [`run`] computes the
//! requested series and renders it as CSV or JSON with a metadata block.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use multibaker_core::linalg::unitarity_residual;
use multibaker_core::rmt::msd_closed_form_at;
use multibaker_core::rmt::msd_monte_carlo_at;
use multibaker_core::series::thinned_times;
use multibaker_core::spectral::{decompose_with_tol, msd_exact_at};
use multibaker_core::{
    ballistic_coefficient, build_chain, chain_msd, classical_msd, crossover_time, quantum_baker,
    Ensemble, EnsembleSpec, LocalUnitary, MsdSeries, QuantizationPhases, DEFAULT_DEGENERACY_TOL,
};
use serde_json::{json, Value};

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Point count for `classical` when `samples` is not given.
pub const DEFAULT_CLASSICAL_POINTS: usize = 100_000;

/// Largest ring the `compare` mode builds on its own for the chain column.
pub const COMPARE_CHAIN_LIMIT: usize = 4096;

/// Keys accepted in a config file, identical to the long flag names.
pub const CONFIG_KEYS: [&str; 14] = [
    "mode", "n", "phi-q", "phi-p", "cells", "t-max", "ensemble", "samples", "seed", "deg-tol",
    "unitary", "out", "format", "config",
];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid value for `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("{context}: {source}")]
    Compute {
        context: String,
        #[source]
        source: multibaker_core::Error,
    },
    #[error("cannot access `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn config(field: &str, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }
}

fn compute<T>(context: &str, r: multibaker_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Compute {
        context: context.to_string(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Chain,
    RmtClosed,
    RmtMc,
    Classical,
    Compare,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "exact" => Mode::Exact,
            "chain" => Mode::Chain,
            "rmt-closed" => Mode::RmtClosed,
            "rmt-mc" => Mode::RmtMc,
            "classical" => Mode::Classical,
            "compare" => Mode::Compare,
            _ => {
                return Err(format!(
                    "unknown mode `{s}` (expected exact, chain, rmt-closed, rmt-mc, classical or compare)"
                ))
            }
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Chain => "chain",
            Mode::RmtClosed => "rmt-closed",
            Mode::RmtMc => "rmt-mc",
            Mode::Classical => "classical",
            Mode::Compare => "compare",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

/// Raw flags. Everything is a string so that bad values produce the same
/// one-line diagnostic whether they come from a flag or from a file.
#[derive(Debug, Default, Parser)]
#[command(
    name = "multibaker",
    version,
    about = "Mean square displacement of quantum multi-baker chains"
)]
pub struct Args {
    /// Flat `key = value` file; keys are the long flag names.
    #[arg(long)]
    pub config: Option<String>,
    /// exact | chain | rmt-closed | rmt-mc | classical | compare
    #[arg(long)]
    pub mode: Option<String>,
    /// Local Hilbert-space dimension (even).
    #[arg(long)]
    pub n: Option<String>,
    /// Position quantization phase in [0, 1).
    #[arg(long = "phi-q")]
    pub phi_q: Option<String>,
    /// Momentum quantization phase in [0, 1).
    #[arg(long = "phi-p")]
    pub phi_p: Option<String>,
    /// Number of cells on the ring.
    #[arg(long)]
    pub cells: Option<String>,
    /// Last time step.
    #[arg(long = "t-max")]
    pub t_max: Option<String>,
    /// CUE | COE
    #[arg(long)]
    pub ensemble: Option<String>,
    /// Monte Carlo sample count, or point count in classical mode.
    #[arg(long)]
    pub samples: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Eigenphase degeneracy tolerance.
    #[arg(long = "deg-tol")]
    pub deg_tol: Option<String>,
    /// Text file holding a custom local unitary (replaces the baker).
    #[arg(long)]
    pub unitary: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<String>,
    /// csv | json
    #[arg(long)]
    pub format: Option<String>,
}

impl Args {
    fn flag_values(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("mode", &self.mode),
            ("n", &self.n),
            ("phi-q", &self.phi_q),
            ("phi-p", &self.phi_p),
            ("cells", &self.cells),
            ("t-max", &self.t_max),
            ("ensemble", &self.ensemble),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("deg-tol", &self.deg_tol),
            ("unitary", &self.unitary),
            ("out", &self.out),
            ("format", &self.format),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }

    /// Config file values overlaid with flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut values = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.into(),
                    source,
                })?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        values.extend(self.flag_values());
        RunConfig::from_values(&values)
    }
}

/// Parses `key = value` lines. `#` starts a comment; `_` in keys reads as `-`.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config(
                "config",
                format!("line {}: expected `key = value`", i + 1),
            ));
        };
        let key = key.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) || key == "config" {
            return Err(CliError::config(
                &key,
                format!("unknown key on config line {}", i + 1),
            ));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub dim: Option<usize>,
    pub phases: QuantizationPhases,
    pub cells: Option<usize>,
    pub t_max: u64,
    pub ensemble: Option<Ensemble>,
    pub samples: Option<usize>,
    pub seed: u64,
    pub degeneracy_tol: f64,
    pub unitary: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn parse_field<T: FromStr>(
    values: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>, CliError>
where
    T::Err: fmt::Display,
{
    values
        .get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|e| CliError::config(key, format!("`{v}`: {e}")))
        })
        .transpose()
}

fn required<T>(value: Option<T>, key: &str, mode: Mode) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::config(key, format!("required in {mode} mode")))
}

impl RunConfig {
    pub fn from_values(values: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let mode: Mode =
            parse_field(values, "mode")?.ok_or_else(|| CliError::config("mode", "missing"))?;
        let dim: Option<usize> = parse_field(values, "n")?;
        let phi_q: f64 = parse_field(values, "phi-q")?.unwrap_or(0.0);
        let phi_p: f64 = parse_field(values, "phi-p")?.unwrap_or(0.0);
        let cells: Option<usize> = parse_field(values, "cells")?;
        let t_max: u64 =
            parse_field(values, "t-max")?.ok_or_else(|| CliError::config("t-max", "missing"))?;
        let ensemble: Option<Ensemble> = parse_field(values, "ensemble")?;
        let samples: Option<usize> = parse_field(values, "samples")?;
        let seed: u64 = parse_field(values, "seed")?.unwrap_or(0);
        let degeneracy_tol: f64 = parse_field(values, "deg-tol")?.unwrap_or(DEFAULT_DEGENERACY_TOL);
        let format: Format = parse_field(values, "format")?.unwrap_or_default();

        if !(0.0..1.0).contains(&phi_q) {
            return Err(CliError::config(
                "phi-q",
                format!("{phi_q} is outside [0, 1)"),
            ));
        }
        if !(0.0..1.0).contains(&phi_p) {
            return Err(CliError::config(
                "phi-p",
                format!("{phi_p} is outside [0, 1)"),
            ));
        }
        let phases = QuantizationPhases::new(phi_q, phi_p)
            .map_err(|e| CliError::config("phi-q", e.to_string()))?;
        if t_max < 1 {
            return Err(CliError::config("t-max", "must be at least 1"));
        }
        if !(degeneracy_tol.is_finite() && degeneracy_tol > 0.0) {
            return Err(CliError::config(
                "deg-tol",
                format!("{degeneracy_tol} is not a positive number"),
            ));
        }
        if let Some(d) = dim {
            if d == 0 || !d.is_multiple_of(2) {
                return Err(CliError::config(
                    "n",
                    format!("{d} is not a positive even integer"),
                ));
            }
        }
        if let Some(l) = cells {
            if l < 2 {
                return Err(CliError::config("cells", format!("{l} < 2")));
            }
        }

        let config = RunConfig {
            mode,
            dim,
            phases,
            cells,
            t_max,
            ensemble,
            samples,
            seed,
            degeneracy_tol,
            unitary: values.get("unitary").map(PathBuf::from),
            out: values.get("out").map(PathBuf::from),
            format,
        };
        config.check_mode()?;
        Ok(config)
    }

    fn check_mode(&self) -> Result<(), CliError> {
        let mode = self.mode;
        let needs_dim = matches!(mode, Mode::RmtClosed | Mode::RmtMc)
            || (matches!(mode, Mode::Exact | Mode::Chain | Mode::Compare)
                && self.unitary.is_none());
        if needs_dim {
            required(self.dim, "n", mode)?;
        }
        match mode {
            Mode::Chain => {
                let cells = required(self.cells, "cells", mode)?;
                if self.t_max > 4 * cells as u64 {
                    return Err(CliError::config(
                        "t-max",
                        format!(
                            "{} exceeds the 4·cells = {} horizon of the ring",
                            self.t_max,
                            4 * cells
                        ),
                    ));
                }
            }
            Mode::RmtClosed => {
                required(self.ensemble, "ensemble", mode)?;
                if self.dim == Some(0) {
                    return Err(CliError::config("n", "must be positive"));
                }
            }
            Mode::RmtMc => {
                required(self.ensemble, "ensemble", mode)?;
                let s = required(self.samples, "samples", mode)?;
                if s < 2 {
                    return Err(CliError::config("samples", format!("{s} < 2")));
                }
            }
            Mode::Classical => {
                let cells = required(self.cells, "cells", mode)?;
                if 2 * self.t_max >= cells as u64 {
                    return Err(CliError::config(
                        "t-max",
                        format!("{} is not below half the ring ({cells} cells)", self.t_max),
                    ));
                }
                if self.t_max > multibaker_core::classical::MAX_STEPS as u64 {
                    return Err(CliError::config(
                        "t-max",
                        format!(
                            "{} exceeds {} steps",
                            self.t_max,
                            multibaker_core::classical::MAX_STEPS
                        ),
                    ));
                }
                if self.samples == Some(0) {
                    return Err(CliError::config("samples", "must be positive"));
                }
            }
            Mode::Compare => {
                if let Some(cells) = self.cells {
                    if self.t_max > 4 * cells as u64 {
                        return Err(CliError::config(
                            "cells",
                            format!(
                                "{cells} cells give a horizon 4·cells below t-max {}",
                                self.t_max
                            ),
                        ));
                    }
                }
            }
            Mode::Exact => {}
        }
        Ok(())
    }

    fn local_unitary(&self) -> Result<LocalUnitary, CliError> {
        match &self.unitary {
            Some(path) => compute(
                &format!("reading local unitary {}", path.display()),
                LocalUnitary::read_from_path(path),
            ),
            None => compute(
                "building quantum baker",
                quantum_baker(self.dim.expect("checked by validation"), self.phases),
            ),
        }
    }

    fn base_metadata(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("library_version", LIBRARY_VERSION.to_string());
        put("mode", self.mode.to_string());
        put("t_max", self.t_max.to_string());
        put("seed", self.seed.to_string());
        put("degeneracy_tol", self.degeneracy_tol.to_string());
        put("phi_q", self.phases.phi_q().to_string());
        put("phi_p", self.phases.phi_p().to_string());
        if let Some(d) = self.dim {
            put("n", d.to_string());
        }
        if let Some(l) = self.cells {
            put("cells", l.to_string());
        }
        if let Some(e) = self.ensemble {
            put("ensemble", e.to_string());
        }
        if let Some(s) = self.samples {
            put("samples", s.to_string());
        }
        if let Some(u) = &self.unitary {
            put("unitary", u.display().to_string());
        }
        m
    }
}

/// One output table: an integer time column followed by named value columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub metadata: BTreeMap<String, String>,
    pub times: Vec<u64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Table {
    fn single(metadata: BTreeMap<String, String>, series: &MsdSeries) -> Self {
        let mut columns = vec![("msd".to_string(), series.values.clone())];
        if let Some(se) = &series.stderr {
            columns.push(("stderr".to_string(), se.clone()));
        }
        Table {
            metadata,
            times: series.times.clone(),
            columns,
        }
    }

    pub fn header(&self) -> Vec<&str> {
        std::iter::once("t")
            .chain(self.columns.iter().map(|(n, _)| n.as_str()))
            .collect()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            s.push_str(&format!("# {k}: {v}\n"));
        }
        s.push_str(&self.header().join(","));
        s.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            s.push_str(&t.to_string());
            for (_, col) in &self.columns {
                s.push(',');
                s.push_str(&col[i].to_string());
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let mut row = vec![json!(t)];
                row.extend(self.columns.iter().map(|(_, c)| json!(c[i])));
                Value::Array(row)
            })
            .collect();
        let doc = json!({
            "metadata": self.metadata,
            "columns": self.header(),
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

fn fmt_result(r: multibaker_core::Result<f64>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => format!("undefined ({e})"),
    }
}

fn exact_series(
    config: &RunConfig,
    times: &[u64],
    meta: &mut BTreeMap<String, String>,
) -> Result<MsdSeries, CliError> {
    let local = config.local_unitary()?;
    let spec = compute(
        "spectral decomposition",
        decompose_with_tol(&local, config.degeneracy_tol),
    )?;
    meta.insert("local_unitary".into(), local.kind().to_string());
    meta.insert("local_dim".into(), local.dim().to_string());
    meta.insert(
        "unitarity_residual".into(),
        local.unitarity_residual().to_string(),
    );
    meta.insert(
        "reconstruction_residual".into(),
        spec.reconstruction_residual().to_string(),
    );
    meta.insert(
        "eigenvector_residual".into(),
        spec.eigenvector_residual().to_string(),
    );
    meta.insert(
        "ballistic_coefficient".into(),
        ballistic_coefficient(&spec).to_string(),
    );
    meta.insert("crossover_time".into(), fmt_result(crossover_time(&spec)));
    meta.insert(
        "plateau_value".into(),
        fmt_result(multibaker_core::plateau_value(&spec)),
    );
    compute(
        "exact m.s.d.",
        msd_exact_at(&spec, times, config.degeneracy_tol),
    )
}

fn chain_series(
    local: &LocalUnitary,
    cells: usize,
    t_max: u64,
    meta: &mut BTreeMap<String, String>,
) -> Result<MsdSeries, CliError> {
    let chain = compute("building chain", build_chain(local, cells))?;
    if let Some(m) = chain.dense() {
        meta.insert(
            "chain_unitarity_residual".into(),
            unitarity_residual(m).to_string(),
        );
    }
    compute("chain m.s.d.", chain_msd(&chain, t_max as usize))
}

fn resample(series: &MsdSeries, times: &[u64]) -> Vec<f64> {
    times
        .iter()
        .map(|&t| series.at(t).expect("series covers the time axis"))
        .collect()
}

/// Computes the table for `config` without writing it.
pub fn build_table(config: &RunConfig) -> Result<Table, CliError> {
    let mut meta = config.base_metadata();
    let table = match config.mode {
        Mode::Exact => {
            let times = thinned_times(config.t_max);
            let s = exact_series(config, &times, &mut meta)?;
            Table::single(meta, &s)
        }
        Mode::Chain => {
            let local = config.local_unitary()?;
            meta.insert("local_unitary".into(), local.kind().to_string());
            meta.insert(
                "unitarity_residual".into(),
                local.unitarity_residual().to_string(),
            );
            let s = chain_series(&local, config.cells.unwrap(), config.t_max, &mut meta)?;
            Table::single(meta, &s)
        }
        Mode::RmtClosed => {
            let spec = EnsembleSpec::new(config.ensemble.unwrap(), config.dim.unwrap());
            let s = compute(
                "closed form",
                msd_closed_form_at(&spec, &thinned_times(config.t_max)),
            )?;
            Table::single(meta, &s)
        }
        Mode::RmtMc => {
            let spec = EnsembleSpec::new(config.ensemble.unwrap(), config.dim.unwrap())
                .with_sampling(config.seed, config.samples.unwrap());
            let times = thinned_times(config.t_max);
            let s = compute(
                "Monte Carlo",
                msd_monte_carlo_at(&spec, &times, config.degeneracy_tol),
            )?;
            Table::single(meta, &s)
        }
        Mode::Classical => {
            let points = config.samples.unwrap_or(DEFAULT_CLASSICAL_POINTS);
            meta.insert("points".into(), points.to_string());
            let s = compute(
                "classical ensemble",
                classical_msd(
                    config.cells.unwrap(),
                    points,
                    config.t_max as usize,
                    config.seed,
                ),
            )?;
            Table::single(meta, &s)
        }
        Mode::Compare => compare_table(config, meta)?,
    };
    Ok(table)
}

fn compare_table(
    config: &RunConfig,
    mut meta: BTreeMap<String, String>,
) -> Result<Table, CliError> {
    let times = thinned_times(config.t_max);
    let exact = exact_series(config, &times, &mut meta)?;
    let dim = exact_dim(&meta);
    let mut columns = vec![("exact".to_string(), exact.values.clone())];

    let default_cells = ((config.t_max as usize).div_ceil(4)).max(2);
    let cells = config
        .cells
        .or(Some(default_cells).filter(|l| l * dim <= COMPARE_CHAIN_LIMIT));
    match cells {
        Some(l) => {
            meta.insert("chain_cells".into(), l.to_string());
            let local = config.local_unitary()?;
            let s = chain_series(&local, l, config.t_max, &mut meta)?;
            columns.push(("chain".to_string(), resample(&s, &times)));
        }
        None => {
            meta.insert("chain_cells".into(), "omitted (ring too large)".into());
        }
    }
    for kind in [Ensemble::Cue, Ensemble::Coe] {
        let spec = EnsembleSpec::new(kind, dim);
        let s = compute("closed form", msd_closed_form_at(&spec, &times))?;
        columns.push((format!("rmt_{}", kind.to_string().to_lowercase()), s.values));
    }
    columns.push((
        "classical".to_string(),
        times.iter().map(|&t| t as f64).collect(),
    ));
    Ok(Table {
        metadata: meta,
        times,
        columns,
    })
}

fn exact_dim(meta: &BTreeMap<String, String>) -> usize {
    meta["local_dim"]
        .parse()
        .expect("local_dim is written by exact_series")
}

/// Runs `config`, writing to `config.out` or returning the rendered text.
pub fn run(config: &RunConfig) -> Result<Option<String>, CliError> {
    let mut table = build_table(config)?;
    table.metadata.insert("generated_at".into(), timestamp());
    let text = table.render(config.format);
    match &config.out {
        Some(path) => {
            write_file(path, &text)?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Seconds since the Unix epoch.
fn timestamp() -> String {
    let d = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default();
    format!("{}.{:03}", d.as_secs(), d.subsec_millis())
}
