//! Command implementations behind the `earq` binary.
//!
//! Every output file is written to a temporary sibling first and then
//! renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use earq_core::montecarlo::{sweep_thresholds, with_thread_pool};
use earq_core::{run_montecarlo, Scenario, StatsTable, Thresholds, Trace};

pub const TRACE_HEADER: [&str; 13] = [
    "t_s",
    "target_x_m",
    "target_y_m",
    "path_kind",
    "nlos",
    "resi_db",
    "resi_noisefree_db",
    "outcome",
    "feedback",
    "tx_beam",
    "rx_beam",
    "power_w",
    "ue_snr_db",
];

const STATS_HEADER: [&str; 7] = [
    "ack_pct",
    "nack_pct",
    "lost_pct",
    "notfound_pct",
    "nlos_pct",
    "additional_resources_pct",
    "run_count",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    MonteCarlo,
    SweepThresholds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub command: Command,
    pub scenario_path: PathBuf,
    pub output_dir: PathBuf,
    pub n_runs: usize,
    /// Noise seed for `run`, master seed for the batch commands. `None`
    /// uses the scenario's `rng_seed`.
    pub master_seed: Option<u64>,
    pub obstacle_side_override: Option<f64>,
    pub ack_db: Option<f64>,
    pub nack_db: Option<f64>,
    pub threshold_grid: Option<Vec<Thresholds>>,
    /// Worker threads for batch commands. `None` uses the global pool.
    pub threads: Option<usize>,
}

impl RunOptions {
    pub fn new(command: Command, scenario_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            command,
            scenario_path: scenario_path.into(),
            output_dir: output_dir.into(),
            n_runs: 300,
            master_seed: None,
            obstacle_side_override: None,
            ack_db: None,
            nack_db: None,
            threshold_grid: None,
            threads: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.scenario_path.as_os_str().is_empty() {
            bail!("--scenario: path must not be empty");
        }
        if self.output_dir.as_os_str().is_empty() {
            bail!("--out: path must not be empty");
        }
        if self.command != Command::Run && self.n_runs == 0 {
            bail!("--runs: must be >= 1");
        }
        if let Some(side) = self.obstacle_side_override {
            if !(side.is_finite() && side > 0.0) {
                bail!("--obstacle-side: must be > 0, got {side}");
            }
        }
        if self.threads == Some(0) {
            bail!("--threads: must be >= 1");
        }
        Ok(())
    }
}

/// Threshold grid file: a JSON list of `{"ack_db": .., "nack_db": ..}`.
pub fn load_threshold_grid(path: &Path) -> Result<Vec<Thresholds>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let grid: Vec<Thresholds> =
        serde_json::from_str(&text).with_context(|| format!("parsing threshold grid {}", path.display()))?;
    if grid.is_empty() {
        bail!("threshold grid {}: must contain at least one pair", path.display());
    }
    for (i, t) in grid.iter().enumerate() {
        t.validate().with_context(|| format!("threshold grid entry {i}"))?;
    }
    Ok(grid)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
    Scenario::from_json_str(&text).with_context(|| format!("scenario {}", path.display()))
}

fn prepare_scenario(opts: &RunOptions) -> Result<Scenario> {
    let mut s = load_scenario(&opts.scenario_path)?;
    if let Some(side) = opts.obstacle_side_override {
        s = s.with_obstacle_side(side);
    }
    if let Some(a) = opts.ack_db {
        s.thresholds.ack_db = a;
    }
    if let Some(n) = opts.nack_db {
        s.thresholds.nack_db = n;
    }
    s.validate().context("scenario after command-line overrides")?;
    Ok(s)
}

/// Runs one command and writes its outputs. Returns the files written.
pub fn execute(opts: &RunOptions) -> Result<Vec<PathBuf>> {
    opts.validate()?;
    let mut scenario = prepare_scenario(opts)?;
    fs::create_dir_all(&opts.output_dir)
        .with_context(|| format!("creating output directory {}", opts.output_dir.display()))?;
    let seed = opts.master_seed.unwrap_or(scenario.rng_seed);
    let out = &opts.output_dir;

    match opts.command {
        Command::Run => {
            scenario.rng_seed = seed;
            let trace = earq_core::run_scenario(&scenario)?;
            let trace_path = out.join("trace.csv");
            let events_path = out.join("events.json");
            write_atomic(&trace_path, &trace_csv(&trace)?)?;
            write_atomic(&events_path, &to_json(&trace.events())?)?;
            Ok(vec![trace_path, events_path])
        }
        Command::MonteCarlo => {
            let batch = || run_montecarlo(&scenario, opts.n_runs, seed);
            let stats = match opts.threads {
                Some(t) => with_thread_pool(t, batch)?,
                None => batch()?,
            };
            let json_path = out.join("stats.json");
            let csv_path = out.join("stats.csv");
            write_atomic(&json_path, &to_json(&stats)?)?;
            write_atomic(&csv_path, &stats_csv(&[(None, stats)])?)?;
            Ok(vec![json_path, csv_path])
        }
        Command::SweepThresholds => {
            let grid = match &opts.threshold_grid {
                Some(g) if !g.is_empty() => g.clone(),
                Some(_) => bail!("--thresholds-grid: must contain at least one pair"),
                None => vec![scenario.thresholds],
            };
            let batch = || sweep_thresholds(&scenario, &grid, opts.n_runs, seed);
            let rows = match opts.threads {
                Some(t) => with_thread_pool(t, batch)?,
                None => batch()?,
            };
            let json_path = out.join("sweep.json");
            let csv_path = out.join("sweep.csv");
            write_atomic(&json_path, &to_json(&rows)?)?;
            let keyed: Vec<_> = rows.iter().map(|r| (Some(Thresholds { ack_db: r.ack_db, nack_db: r.nack_db }), r.stats)).collect();
            write_atomic(&csv_path, &stats_csv(&keyed)?)?;
            Ok(vec![json_path, csv_path])
        }
    }
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Formats like C's `%.6g`.
pub fn fmt_g6(x: f64) -> String {
    const PRECISION: i32 = 6;
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    // exponent after rounding to PRECISION significant digits
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PRECISION).contains(&exp) {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn trace_csv(trace: &Trace) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER)?;
    for r in &trace.records {
        w.write_record([
            fmt_g6(r.time_s),
            fmt_g6(r.target_position.x),
            fmt_g6(r.target_position.y),
            r.path_kind.as_str().to_string(),
            u8::from(r.nlos_flag).to_string(),
            fmt_g6(r.resi_db),
            fmt_g6(r.resi_noise_free_db),
            r.outcome.as_str().to_string(),
            r.feedback.as_str().to_string(),
            r.tx_beam_index.to_string(),
            r.rx_beam_index.to_string(),
            fmt_g6(r.power_w),
            fmt_g6(r.ue_snr_db),
        ])?;
    }
    Ok(w.into_inner()?)
}

/// Stats rows, optionally prefixed with the threshold pair that produced
/// them. Numbers use shortest round-trip formatting, matching the JSON.
pub fn stats_csv(rows: &[(Option<Thresholds>, StatsTable)]) -> Result<Vec<u8>> {
    let keyed = rows.iter().any(|(t, _)| t.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = Vec::new();
    if keyed {
        header.extend(["ack_db", "nack_db"]);
    }
    header.extend(STATS_HEADER);
    w.write_record(&header)?;
    for (thr, s) in rows {
        let mut rec: Vec<String> = Vec::new();
        if keyed {
            let t = thr.unwrap_or_default();
            rec.extend([num(t.ack_db), num(t.nack_db)]);
        }
        rec.extend([
            num(s.ack_pct),
            num(s.nack_pct),
            num(s.lost_pct),
            num(s.notfound_pct),
            num(s.nlos_pct),
            num(s.additional_resources_pct),
            s.run_count.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    Ok(w.into_inner()?)
}

fn num(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| "null".to_string())
}

/// Reads back a `stats.csv` written by [`stats_csv`] without threshold columns.
pub fn read_stats_csv(path: &Path) -> Result<Vec<StatsTable>> {
    #[derive(Deserialize)]
    struct Row {
        ack_pct: f64,
        nack_pct: f64,
        lost_pct: f64,
        notfound_pct: f64,
        nlos_pct: f64,
        additional_resources_pct: f64,
        run_count: u64,
    }
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    rdr.deserialize::<Row>()
        .map(|row| {
            let r = row?;
            Ok(StatsTable {
                ack_pct: r.ack_pct,
                nack_pct: r.nack_pct,
                lost_pct: r.lost_pct,
                notfound_pct: r.notfound_pct,
                nlos_pct: r.nlos_pct,
                additional_resources_pct: r.additional_resources_pct,
                run_count: r.run_count,
            })
        })
        .collect()
}

/// Writes `bytes` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().context("output path has no file name")?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| -> Result<()> {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
