//! Config-driven quench runs, sweeps over `j_z` and result files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ed::{self, DenseState, EdError, EdPropagator};
use crate::mps::{MpsError, MpsState, TruncationParams};
use crate::spin_model::{CouplingParams, ModelError, Spin, SpinOperators};
use crate::tebd::{self, EvolutionRecord, Observation, TebdError, TrotterSchedule};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CONCURRENCE_FILE: &str = "concurrence.csv";
pub const MAGNETIZATION_FILE: &str = "magnetization.csv";
pub const RUNLOG_FILE: &str = "runlog.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const INDEX_FILE: &str = "index.csv";

/// Default prominence for [`first_peak`].
pub const PEAK_PROMINENCE: f64 = 0.02;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Néel product state released under finite `j_z`.
    AnisotropyQuench,
    /// Left half up, right half down.
    DomainWall,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::AnisotropyQuench => "anisotropy_quench",
            Protocol::DomainWall => "domain_wall",
        }
    }

    pub fn pattern(self, n_sites: usize) -> Vec<Spin> {
        (0..n_sites)
            .map(|i| {
                let up = match self {
                    Protocol::AnisotropyQuench => i % 2 == 0,
                    Protocol::DomainWall => i < n_sites / 2,
                };
                if up { Spin::Up } else { Spin::Down }
            })
            .collect()
    }
}

fn operators_name(op: SpinOperators) -> &'static str {
    match op {
        SpinOperators::Pauli => "pauli",
        SpinOperators::SpinHalf => "spin_half",
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuenchConfig {
    pub protocol: Protocol,
    pub n_sites: usize,
    pub j_z: f64,
    pub j_xy: f64,
    pub operators: SpinOperators,
    pub dt: f64,
    pub t_max: f64,
    pub max_bond_dim: usize,
    pub discarded_weight_target: f64,
    pub observe_stride: usize,
    pub output_dir: PathBuf,
}

impl Default for QuenchConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::AnisotropyQuench,
            n_sites: 60,
            j_z: 1.0,
            j_xy: 1.0,
            operators: SpinOperators::SpinHalf,
            dt: 0.025,
            t_max: 40.0,
            max_bond_dim: 60,
            discarded_weight_target: 1e-8,
            observe_stride: 4,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },
    #[error("{key}: cannot parse '{value}'")]
    BadValue { key: &'static str, value: String },
    #[error("{0}")]
    Invalid(String),
}

const KEYS: [&str; 11] = [
    "protocol",
    "n_sites",
    "j_z",
    "j_xy",
    "operators",
    "dt",
    "t_max",
    "max_bond_dim",
    "discarded_weight_target",
    "observe_stride",
    "output_dir",
];

/// Parses flat `key = value` text. Blank lines and lines starting with `#`
/// are ignored. Missing keys keep their defaults.
pub fn parse_config(source: &str) -> Result<QuenchConfig, ConfigError> {
    let mut seen: Vec<(&'static str, String)> = Vec::new();
    for (i, raw) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: line_no })?;
        let k = k.trim();
        let key = KEYS
            .iter()
            .find(|&&known| known == k)
            .ok_or_else(|| ConfigError::UnknownKey { line: line_no, key: k.to_string() })?;
        if seen.iter().any(|(prev, _)| prev == key) {
            return Err(ConfigError::DuplicateKey { line: line_no, key: k.to_string() });
        }
        seen.push((key, v.trim().to_string()));
    }

    let mut c = QuenchConfig::default();
    for (key, value) in &seen {
        let key = *key;
        let bad = || ConfigError::BadValue { key, value: value.clone() };
        match key {
            "protocol" => {
                c.protocol = match value.as_str() {
                    "anisotropy_quench" => Protocol::AnisotropyQuench,
                    "domain_wall" => Protocol::DomainWall,
                    _ => return Err(bad()),
                }
            }
            "operators" => {
                c.operators = match value.as_str() {
                    "spin_half" => SpinOperators::SpinHalf,
                    "pauli" => SpinOperators::Pauli,
                    _ => return Err(bad()),
                }
            }
            "n_sites" => c.n_sites = value.parse().map_err(|_| bad())?,
            "max_bond_dim" => c.max_bond_dim = value.parse().map_err(|_| bad())?,
            "observe_stride" => c.observe_stride = value.parse().map_err(|_| bad())?,
            "j_z" => c.j_z = value.parse().map_err(|_| bad())?,
            "j_xy" => c.j_xy = value.parse().map_err(|_| bad())?,
            "dt" => c.dt = value.parse().map_err(|_| bad())?,
            "t_max" => c.t_max = value.parse().map_err(|_| bad())?,
            "discarded_weight_target" => c.discarded_weight_target = value.parse().map_err(|_| bad())?,
            "output_dir" => {
                if value.is_empty() {
                    return Err(ConfigError::Invalid("output_dir must not be empty".into()));
                }
                c.output_dir = PathBuf::from(value)
            }
            _ => unreachable!(),
        }
    }
    c.validate()?;
    Ok(c)
}

impl QuenchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if self.n_sites < 2 {
            return fail("n_sites must be at least 2");
        }
        if !self.n_sites.is_multiple_of(2) {
            return fail("n_sites must be even");
        }
        if !self.j_z.is_finite() {
            return fail("j_z must be finite");
        }
        if !self.j_xy.is_finite() {
            return fail("j_xy must be finite");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail("dt must be positive");
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return fail("t_max must be non-negative");
        }
        if self.max_bond_dim == 0 {
            return fail("max_bond_dim must be at least 1");
        }
        if !(0.0..1.0).contains(&self.discarded_weight_target) {
            return fail("discarded_weight_target must be in [0, 1)");
        }
        if self.observe_stride == 0 {
            return fail("observe_stride must be at least 1");
        }
        Ok(())
    }

    /// The config as `key = value` lines, parseable by [`parse_config`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("protocol", self.protocol.name().to_string()),
            ("n_sites", self.n_sites.to_string()),
            ("j_z", self.j_z.to_string()),
            ("j_xy", self.j_xy.to_string()),
            ("operators", operators_name(self.operators).to_string()),
            ("dt", self.dt.to_string()),
            ("t_max", self.t_max.to_string()),
            ("max_bond_dim", self.max_bond_dim.to_string()),
            ("discarded_weight_target", self.discarded_weight_target.to_string()),
            ("observe_stride", self.observe_stride.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
        ]
    }

    pub fn coupling_params(&self) -> Result<CouplingParams, ModelError> {
        Ok(CouplingParams::new(self.j_xy, self.j_z, self.n_sites)?.with_operators(self.operators))
    }

    pub fn schedule(&self) -> Result<TrotterSchedule, TebdError> {
        TrotterSchedule::new(self.dt, self.t_max, self.observe_stride)
    }

    pub fn truncation(&self) -> Result<TruncationParams, MpsError> {
        TruncationParams::new(self.max_bond_dim, self.discarded_weight_target)
    }

    pub fn initial_state(&self) -> Result<MpsState, MpsError> {
        MpsState::product_state(&self.protocol.pattern(self.n_sites))
    }
}

#[derive(Debug, Error)]
pub enum QuenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Tebd(#[from] TebdError),
    #[error(transparent)]
    Ed(#[from] EdError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> QuenchError + '_ {
    move |source| QuenchError::Io { path: path.to_path_buf(), source }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExitStatus {
    Success,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub config: std::collections::BTreeMap<String, String>,
    pub code_version: String,
    pub wall_clock_seconds: f64,
    pub final_cumulative_discarded_weight: f64,
    pub observations: usize,
    pub exit_status: ExitStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<(), QuenchError> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub record: EvolutionRecord,
    pub manifest: RunManifest,
}

/// Fixed-width scientific notation with 15 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.14e}")
}

struct CsvSet {
    concurrence: BufWriter<File>,
    magnetization: BufWriter<File>,
    runlog: BufWriter<File>,
}

impl CsvSet {
    fn create(dir: &Path, config: &QuenchConfig) -> io::Result<Self> {
        let echo: String = config.to_text().lines().map(|l| format!("# {l}\n")).collect();
        let open = |name: &str, header: &str| -> io::Result<BufWriter<File>> {
            let mut w = BufWriter::new(File::create(dir.join(name))?);
            w.write_all(echo.as_bytes())?;
            writeln!(w, "{header}")?;
            Ok(w)
        };
        Ok(Self {
            concurrence: open(CONCURRENCE_FILE, "time,bond,concurrence")?,
            magnetization: open(MAGNETIZATION_FILE, "time,site,sz")?,
            runlog: open(RUNLOG_FILE, "step,time,discarded_weight_step,discarded_weight_cum,energy,norm")?,
        })
    }

    fn push(&mut self, o: &Observation) -> io::Result<()> {
        let t = fmt_num(o.time);
        for (b, c) in o.concurrence.iter().enumerate() {
            writeln!(self.concurrence, "{t},{},{}", b + 1, fmt_num(*c))?;
        }
        for (i, m) in o.magnetization.iter().enumerate() {
            writeln!(self.magnetization, "{t},{},{}", i + 1, fmt_num(*m))?;
        }
        writeln!(
            self.runlog,
            "{},{t},{},{},{},{}",
            o.step,
            fmt_num(o.discarded_weight_step),
            fmt_num(o.discarded_weight_cum),
            fmt_num(o.energy),
            fmt_num(o.norm)
        )
    }

    fn finish(mut self) -> io::Result<()> {
        self.concurrence.flush()?;
        self.magnetization.flush()?;
        self.runlog.flush()
    }
}

/// Runs one quench and writes its CSV files and manifest into
/// `config.output_dir`. The manifest is written on failure too, whenever the
/// directory can be created.
pub fn run_quench(config: &QuenchConfig) -> Result<RunOutput, QuenchError> {
    let start = Instant::now();
    let dir = config.output_dir.clone();
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;

    let mut last_cum = 0.0;
    let mut n_obs = 0;
    let result = simulate_to_files(config, &dir, |o| {
        last_cum = o.discarded_weight_cum;
        n_obs += 1;
    });
    let manifest = RunManifest {
        config: config.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        code_version: CODE_VERSION.to_string(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        final_cumulative_discarded_weight: last_cum,
        observations: n_obs,
        exit_status: if result.is_ok() { ExitStatus::Success } else { ExitStatus::Failed },
        error: result.as_ref().err().map(|e| e.to_string()),
    };
    manifest.write(&dir)?;
    result.map(|record| RunOutput { record, manifest })
}

/// Writes a failed manifest for a run that never started, e.g. because its
/// config did not parse.
pub fn write_failed_manifest(dir: &Path, config_text: &str, error: &str) -> Result<(), QuenchError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let config = config_text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .filter(|(k, _)| !k.starts_with('#'))
        .collect();
    RunManifest {
        config,
        code_version: CODE_VERSION.to_string(),
        wall_clock_seconds: 0.0,
        final_cumulative_discarded_weight: 0.0,
        observations: 0,
        exit_status: ExitStatus::Failed,
        error: Some(error.to_string()),
    }
    .write(dir)
}

/// Best-effort `output_dir` from a config that may not validate.
pub fn raw_output_dir(config_text: &str) -> PathBuf {
    config_text
        .lines()
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| k.trim() == "output_dir")
        .map(|(_, v)| PathBuf::from(v.trim()))
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| QuenchConfig::default().output_dir)
}

fn simulate_to_files(
    config: &QuenchConfig,
    dir: &Path,
    mut tap: impl FnMut(&Observation),
) -> Result<EvolutionRecord, QuenchError> {
    config.validate()?;
    let params = config.coupling_params()?;
    let schedule = config.schedule()?;
    let trunc = config.truncation()?;
    let mut state = config.initial_state()?;
    let mut csv = CsvSet::create(dir, config).map_err(io_err(dir))?;
    let mut write_err = None;
    let record = tebd::evolve(&mut state, &params, &schedule, &trunc, |o| {
        tap(o);
        if write_err.is_none() {
            write_err = csv.push(o).err();
        }
    });
    // flush what was observed even if the engine aborted
    let flushed = csv.finish();
    let record = record?;
    if let Some(e) = write_err {
        return Err(io_err(dir)(e));
    }
    flushed.map_err(io_err(dir))?;
    Ok(record)
}

/// Runs the quench in memory, without touching the file system.
pub fn simulate(config: &QuenchConfig) -> Result<EvolutionRecord, QuenchError> {
    config.validate()?;
    let params = config.coupling_params()?;
    let mut state = config.initial_state()?;
    Ok(tebd::evolve(&mut state, &params, &config.schedule()?, &config.truncation()?, |_| {})?)
}

#[derive(Debug)]
pub struct SweepEntry {
    pub j_z: f64,
    pub dir: PathBuf,
    pub result: Result<RunOutput, QuenchError>,
}

/// Directory names for a list of `j_z`, suffixing repeats as `_2`, `_3`, ...
pub fn sweep_dir_names(j_z_values: &[f64]) -> Vec<String> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    j_z_values
        .iter()
        .map(|jz| {
            let base = format!("jz_{jz}");
            let n = counts.entry(base.clone()).or_insert(0);
            *n += 1;
            if *n == 1 { base } else { format!("{base}_{n}") }
        })
        .collect()
}

/// One run per `j_z` under `base.output_dir`, plus an index file. A failed
/// run is recorded and does not stop the others.
pub fn sweep(base: &QuenchConfig, j_z_values: &[f64]) -> Result<Vec<SweepEntry>, QuenchError> {
    if j_z_values.is_empty() {
        return Err(ConfigError::Invalid("j_z list must not be empty".into()).into());
    }
    let root = base.output_dir.clone();
    fs::create_dir_all(&root).map_err(io_err(&root))?;
    let names = sweep_dir_names(j_z_values);
    let entries: Vec<SweepEntry> = j_z_values
        .par_iter()
        .zip(names.par_iter())
        .map(|(&j_z, name)| {
            let cfg = QuenchConfig { j_z, output_dir: root.join(name), ..base.clone() };
            SweepEntry { j_z, dir: PathBuf::from(name), result: run_quench(&cfg) }
        })
        .collect();

    let mut index = String::from("j_z,directory,status\n");
    for e in &entries {
        let status = if e.result.is_ok() { "success" } else { "failed" };
        let _ = writeln!(index, "{},{},{status}", e.j_z, e.dir.display());
    }
    let path = root.join(INDEX_FILE);
    fs::write(&path, index).map_err(io_err(&path))?;
    Ok(entries)
}

/// Index of the first local maximum whose topographic prominence is at least
/// `min_prominence`. Endpoints never count.
pub fn first_peak(series: &[f64], min_prominence: f64) -> Option<usize> {
    let n = series.len();
    let mut i = 1;
    while i + 1 < n {
        let x = series[i];
        if x > series[i - 1] {
            // walk across a plateau
            let mut j = i;
            while j + 1 < n && series[j + 1] == x {
                j += 1;
            }
            if j + 1 < n && series[j + 1] < x && prominence(series, i, j) >= min_prominence {
                return Some(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    None
}

fn prominence(series: &[f64], lo: usize, hi: usize) -> f64 {
    let x = series[lo];
    let mut left_min = x;
    for &v in series[..lo].iter().rev() {
        if v > x {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = x;
    for &v in &series[hi + 1..] {
        if v > x {
            break;
        }
        right_min = right_min.min(v);
    }
    x - left_min.max(right_min)
}

/// Index of the first sample strictly above `threshold`.
pub fn onset(series: &[f64], threshold: f64) -> Option<usize> {
    series.iter().position(|&c| c > threshold)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleRow {
    pub protocol: Protocol,
    pub j_z: f64,
    pub dt: f64,
    /// Largest `|C_TEBD - C_ED|` over all bonds and observation times.
    pub max_deviation: f64,
}

/// Compares untruncated TEBD concurrences against exact evolution for both
/// protocols and every `j_z`.
pub fn oracle_check(
    n_sites: usize,
    j_z_values: &[f64],
    dt: f64,
    t_max: f64,
    observe_stride: usize,
    operators: SpinOperators,
) -> Result<Vec<OracleRow>, QuenchError> {
    let schedule = TrotterSchedule::new(dt, t_max, observe_stride)?;
    let full = TruncationParams::exact();
    let mut rows = Vec::new();
    for protocol in [Protocol::AnisotropyQuench, Protocol::DomainWall] {
        let pattern = protocol.pattern(n_sites);
        for &j_z in j_z_values {
            let params = CouplingParams::xxz(j_z, n_sites)?.with_operators(operators);
            let mut state = MpsState::product_state(&pattern)?;
            let record = tebd::evolve(&mut state, &params, &schedule, &full, |_| {})?;
            let exact = EdPropagator::new(&params)?.evolve(&DenseState::product(&pattern), &record.times)?;
            let mut max_deviation = 0.0f64;
            for (psi, tebd_row) in exact.iter().zip(&record.concurrence_profiles) {
                let ed_row = ed::ed_concurrence_profile(psi)?;
                for (a, b) in tebd_row.iter().zip(&ed_row) {
                    max_deviation = max_deviation.max((a - b).abs());
                }
            }
            rows.push(OracleRow { protocol, j_z, dt, max_deviation });
        }
    }
    Ok(rows)
}
