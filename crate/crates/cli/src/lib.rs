//! Command-line driver: parameter sweeps, count simulation and ingestion.
//!
//! Every flag can also come from a JSON config file with the same names in
//! snake case; flags given on the command line win.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use tempsteer::metrics::{
    reference_s2_rotation_free, reference_s3_approx, stokes_evolution, ts_parameter_with_tol,
};
use tempsteer::montecarlo::{read_counts_csv, write_counts_csv, write_metadata, RunMetadata};
use tempsteer::montecarlo::{
    reconstruct_assemblage, simulate_counts, Reconstruction, RunConfig, StokesEstimate,
};
use tempsteer::{
    evolve_assemblage, initial_assemblage, security_verdict, steerable_weight, ts_parameter,
    Assemblage, ChannelParams, DimensionlessTime, Outcome, PauliAxis, PreparationConfig, Protocol,
    SdpStatus, SecurityVerdict, SteeringReport, WeightResult, WeightSettings,
};

/// Exit status for the three outcomes the tool distinguishes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Input = 1,
    Numerical = 2,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config, or input files.
    Input(String),
    /// A solve failed and `--strict` asked for it to be fatal.
    Numerical(String),
}

impl CliError {
    pub fn exit(&self) -> Exit {
        match self {
            CliError::Input(_) => Exit::Input,
            CliError::Numerical(_) => Exit::Numerical,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tempsteer::Error> for CliError {
    fn from(e: tempsteer::Error) -> Self {
        match e {
            tempsteer::Error::Solver(_) | tempsteer::Error::NonFinite(_) => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

fn io_error(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum SettingCount {
    #[value(name = "2")]
    #[serde(rename = "2")]
    Two,
    #[value(name = "3")]
    #[serde(rename = "3")]
    Three,
    #[value(name = "both")]
    #[serde(rename = "both")]
    Both,
}

impl SettingCount {
    pub fn values(self) -> &'static [usize] {
        match self {
            SettingCount::Two => &[2],
            SettingCount::Three => &[3],
            SettingCount::Both => &[2, 3],
        }
    }
}

/// Options shared by every command. All optional here so that a config file
/// can fill the gaps; see [`Options::resolve`].
#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Damping constant in s⁻¹ [default: 2e7]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Last grid point of the sweep in dimensionless time [default: 3]
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Number of grid points; 1 gives the single point t-max [default: 61]
    #[arg(long)]
    pub t_steps: Option<usize>,
    /// Dimensionless time of a simulated run [default: 0]
    #[arg(long = "t")]
    #[serde(rename = "t")]
    pub t_tilde: Option<f64>,
    /// Bloch-vector shrinking factor of the preparations [default: 0.96]
    #[arg(long)]
    pub shrink_s: Option<f64>,
    /// R(4t̃) rotation in the channel [default: on]
    #[arg(long)]
    pub rotation: Option<Switch>,
    /// Extra dephasing and analyzer rotation [default: on]
    #[arg(long)]
    pub imperfections: Option<Switch>,
    /// Number of measurement settings [default: both]
    #[arg(long)]
    pub n: Option<SettingCount>,
    /// Solve the steerable-weight SDP [default: on]
    #[arg(long)]
    pub weight: Option<Switch>,
    /// Shots per setting for simulations [default: 1000000]
    #[arg(long)]
    pub shots: Option<u64>,
    /// Seed of the simulation [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Duality-gap tolerance of the SDP [default: 1e-7]
    #[arg(long)]
    pub tol_gap: Option<f64>,
    /// Output file; standard output when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report file of `simulate`; standard output when absent
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Exit with status 2 when any SDP solve is not optimal
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub strict: Option<bool>,
}

impl Options {
    /// Fields set here win over `base`.
    pub fn over(self, base: Options) -> Options {
        Options {
            gamma: self.gamma.or(base.gamma),
            t_max: self.t_max.or(base.t_max),
            t_steps: self.t_steps.or(base.t_steps),
            t_tilde: self.t_tilde.or(base.t_tilde),
            shrink_s: self.shrink_s.or(base.shrink_s),
            rotation: self.rotation.or(base.rotation),
            imperfections: self.imperfections.or(base.imperfections),
            n: self.n.or(base.n),
            weight: self.weight.or(base.weight),
            shots: self.shots.or(base.shots),
            seed: self.seed.or(base.seed),
            tol_gap: self.tol_gap.or(base.tol_gap),
            out: self.out.or(base.out),
            report: self.report.or(base.report),
            strict: self.strict.or(base.strict),
        }
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let channel = ChannelParams {
            gamma: self.gamma.unwrap_or(2e7),
            rotation_enabled: self.rotation.unwrap_or(Switch::On).on(),
            ..ChannelParams::default()
        };
        channel.validate()?;
        let prep = PreparationConfig::new(self.shrink_s.unwrap_or(0.96))?;
        let t_max = self.t_max.unwrap_or(3.0);
        DimensionlessTime::new(t_max)?;
        let t_steps = self.t_steps.unwrap_or(61);
        if t_steps == 0 {
            return Err(CliError::Input("t-steps must be at least 1".into()));
        }
        let t_tilde = self.t_tilde.unwrap_or(0.0);
        DimensionlessTime::new(t_tilde)?;
        let mut weight_settings = WeightSettings::default();
        if let Some(g) = self.tol_gap {
            weight_settings.sdp.gap_tol = g;
            weight_settings.sdp.validate()?;
        }
        Ok(Resolved {
            channel,
            prep,
            imperfections: self.imperfections.unwrap_or(Switch::On).on(),
            t_max,
            t_steps,
            t_tilde,
            n_values: self.n.unwrap_or(SettingCount::Both).values().to_vec(),
            weight: self.weight.unwrap_or(Switch::On).on(),
            shots: self.shots.unwrap_or(1_000_000),
            seed: self.seed.unwrap_or(0),
            weight_settings,
            out: self.out.clone(),
            report: self.report.clone(),
            strict: self.strict.unwrap_or(false),
        })
    }
}

/// Options after defaults are applied and values validated.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub channel: ChannelParams,
    pub prep: PreparationConfig,
    pub imperfections: bool,
    pub t_max: f64,
    pub t_steps: usize,
    pub t_tilde: f64,
    pub n_values: Vec<usize>,
    pub weight: bool,
    pub shots: u64,
    pub seed: u64,
    pub weight_settings: WeightSettings,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub strict: bool,
}

impl Resolved {
    /// Evenly spaced grid from 0 to `t_max`, ascending.
    pub fn grid(&self) -> Vec<f64> {
        if self.t_steps == 1 {
            return vec![self.t_max];
        }
        let last = (self.t_steps - 1) as f64;
        (0..self.t_steps)
            .map(|k| self.t_max * k as f64 / last)
            .collect()
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            shots_per_setting: self.shots,
            rng_seed: self.seed,
            t_tilde: self.t_tilde,
            channel: self.channel,
            prep: self.prep,
            imperfections: self.imperfections,
            n_measurements: *self
                .n_values
                .iter()
                .max()
                .expect("at least one setting count"),
            include_loss_model: false,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tempsteer",
    version,
    about = "Temporal steering of a qubit through a damping channel"
)]
pub struct Cli {
    /// JSON file with default values for any of the flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic S_N, weight, QBER and Stokes parameters over a time grid
    Sweep(Options),
    /// Simulate photon counts, then reconstruct and report
    Simulate(Options),
    /// Reconstruct and report from an existing count CSV
    Ingest {
        /// Count CSV with the simulator's columns
        counts: PathBuf,
        #[command(flatten)]
        options: Options,
    },
}

pub fn load_config(path: &Path) -> Result<Options, CliError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    serde_json::from_reader(file).map_err(|e| io_error(path, e))
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros dropped,
/// exponent form outside `[1e-4, 1e12)`.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..12).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        trim(&format!("{v:.*}", (11 - exp) as usize))
    }
}

const FIXED_COLUMNS: [&str; 9] = [
    "t_tilde",
    "S2",
    "S3",
    "w2",
    "w3",
    "qber2",
    "qber3",
    "bb84_secure",
    "b98_secure",
];

pub fn sweep_header() -> Vec<String> {
    let mut h: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    for axis in PauliAxis::ALL {
        for a in Outcome::ALL {
            for k in PauliAxis::ALL {
                h.push(format!(
                    "stokes_{}{}_{}",
                    axis_name(axis),
                    sign_name(a),
                    axis_name(k)
                ));
            }
        }
    }
    h.extend(["ref_S2_rotation_free", "ref_S3_approx", "sdp_status"].map(String::from));
    h
}

fn axis_name(axis: PauliAxis) -> &'static str {
    match axis {
        PauliAxis::X => "x",
        PauliAxis::Y => "y",
        PauliAxis::Z => "z",
    }
}

fn sign_name(a: Outcome) -> &'static str {
    match a {
        Outcome::Plus => "+",
        Outcome::Minus => "-",
    }
}

/// Values for one `N` at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct SettingRow {
    pub n: usize,
    pub report: SteeringReport,
    pub verdict: SecurityVerdict,
    /// `None` when the weight is switched off.
    pub weight: Option<Result<WeightResult, String>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub t_tilde: f64,
    pub settings: Vec<SettingRow>,
    /// Bloch vectors of the six conditional states, X+, X−, Y+, …
    pub stokes: Vec<[f64; 3]>,
    pub ref_s2: f64,
    pub ref_s3: f64,
}

impl SweepRow {
    fn setting(&self, n: usize) -> Option<&SettingRow> {
        self.settings.iter().find(|s| s.n == n)
    }

    /// Every solve optimal (or none requested).
    pub fn all_optimal(&self) -> bool {
        self.settings.iter().all(|s| match &s.weight {
            None => true,
            Some(Ok(w)) => w.status == SdpStatus::Optimal,
            Some(Err(_)) => false,
        })
    }

    pub fn status(&self) -> String {
        let parts: Vec<String> = self
            .settings
            .iter()
            .filter_map(|s| {
                s.weight.as_ref().map(|w| match w {
                    Ok(w) => format!("w{}={}", s.n, w.status),
                    Err(e) => format!("w{}=error: {e}", s.n),
                })
            })
            .collect();
        if parts.is_empty() {
            "skipped".into()
        } else if self.all_optimal() {
            "optimal".into()
        } else {
            parts.join(";")
        }
    }

    pub fn fields(&self) -> Vec<String> {
        let num = |v: Option<f64>| v.map(format_number).unwrap_or_default();
        let s = |n| self.setting(n);
        let w = |n| {
            s(n).and_then(|r| r.weight.as_ref())
                .and_then(|w| w.as_ref().ok())
                .map(|w| w.w_t)
        };
        let secure = |n| {
            s(n).map(|r| r.verdict.secure_individual.to_string())
                .unwrap_or_default()
        };
        let mut f = vec![
            format_number(self.t_tilde),
            num(s(2).map(|r| r.report.s_param)),
            num(s(3).map(|r| r.report.s_param)),
            num(w(2)),
            num(w(3)),
            num(s(2).map(|r| r.report.qber)),
            num(s(3).map(|r| r.report.qber)),
            secure(2),
            secure(3),
        ];
        for b in &self.stokes {
            f.extend(b.iter().map(|v| format_number(*v)));
        }
        f.push(format_number(self.ref_s2));
        f.push(format_number(self.ref_s3));
        f.push(self.status());
        f
    }
}

fn protocol_for(n: usize) -> Protocol {
    if n == 2 {
        Protocol::Bb84
    } else {
        Protocol::B98
    }
}

pub fn sweep_row(opts: &Resolved, t_tilde: f64) -> Result<SweepRow, CliError> {
    let t = DimensionlessTime::new(t_tilde)?;
    let full = evolve_assemblage(
        &initial_assemblage(3, &opts.prep)?,
        t,
        &opts.channel,
        opts.imperfections,
    )?;
    let mut settings = Vec::new();
    for &n in &opts.n_values {
        let asm = full.truncated(n)?;
        let report = ts_parameter(&asm)?;
        let verdict = security_verdict(&report, protocol_for(n))?;
        let weight = opts
            .weight
            .then(|| steerable_weight(&asm, &opts.weight_settings).map_err(|e| e.to_string()));
        settings.push(SettingRow {
            n,
            report,
            verdict,
            weight,
        });
    }
    let stokes = stokes_evolution(t, &opts.channel, &opts.prep, opts.imperfections)?
        .iter()
        .map(|e| e.bloch.as_array())
        .collect();
    Ok(SweepRow {
        t_tilde,
        settings,
        stokes,
        ref_s2: reference_s2_rotation_free(opts.prep.shrink_s, t),
        ref_s3: reference_s3_approx(opts.prep.shrink_s, t),
    })
}

/// Rows in grid order; grid points are evaluated in parallel.
pub fn sweep(opts: &Resolved) -> Result<Vec<SweepRow>, CliError> {
    opts.grid()
        .par_iter()
        .map(|&t| sweep_row(opts, t))
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{}", sweep_header().join(","))?;
    for r in rows {
        writeln!(out, "{}", r.fields().join(","))?;
    }
    out.flush()
}

/// Analysis of one setting count in a count-based report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SettingReport {
    pub n: usize,
    pub steering: SteeringReport,
    /// Propagated standard error of `S_N`.
    pub s_std_error: f64,
    pub verdict: SecurityVerdict,
    /// `S_N` of the noiseless model, when the run configuration is known.
    pub analytic_s: Option<f64>,
    pub weight: Option<WeightResult>,
    pub weight_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountReport {
    pub source: String,
    pub config: Option<RunConfig>,
    pub min_shots: u64,
    pub consistency_tol: f64,
    pub stokes: Vec<StokesEstimate>,
    pub settings: Vec<SettingReport>,
}

impl CountReport {
    pub fn all_optimal(&self) -> bool {
        self.settings.iter().all(|s| {
            s.weight_error.is_none()
                && s.weight
                    .as_ref()
                    .is_none_or(|w| w.status == SdpStatus::Optimal)
        })
    }
}

fn analytic_assemblage(cfg: &RunConfig) -> Result<Assemblage, CliError> {
    let asm = initial_assemblage(cfg.n_measurements, &cfg.prep)?;
    Ok(evolve_assemblage(
        &asm,
        DimensionlessTime::new(cfg.t_tilde)?,
        &cfg.channel,
        cfg.imperfections,
    )?)
}

/// Reconstructs the assemblage from counts and reports every requested `N`
/// the counts cover.
pub fn count_report(
    records: &[tempsteer::montecarlo::CountRecord],
    opts: &Resolved,
    config: Option<&RunConfig>,
    source: &str,
) -> Result<CountReport, CliError> {
    let rec: Reconstruction = reconstruct_assemblage(records)?;
    let available = rec.assemblage.n_measurements();
    let tol = rec.consistency_tol();
    let analytic = config.map(analytic_assemblage).transpose()?;
    let mut settings = Vec::new();
    for &n in opts.n_values.iter().filter(|&&n| n <= available) {
        let asm = rec.assemblage.truncated(n)?;
        let steering = ts_parameter_with_tol(&asm, tol)?;
        let verdict = security_verdict(&steering, protocol_for(n))?;
        let analytic_s = match &analytic {
            Some(a) => Some(ts_parameter(&a.truncated(n)?)?.s_param),
            None => None,
        };
        let (weight, weight_error) = if opts.weight {
            let ws = WeightSettings {
                consistency_tol: Some(tol),
                ..opts.weight_settings
            };
            match steerable_weight(&asm, &ws) {
                Ok(w) => (Some(w), None),
                Err(e) => (None, Some(e.to_string())),
            }
        } else {
            (None, None)
        };
        settings.push(SettingReport {
            n,
            steering,
            s_std_error: rec.s_std_error_for(n),
            verdict,
            analytic_s,
            weight,
            weight_error,
        });
    }
    if settings.is_empty() {
        return Err(CliError::Input(format!(
            "counts cover {available} settings, none of the requested {:?}",
            opts.n_values
        )));
    }
    Ok(CountReport {
        source: source.into(),
        config: config.copied(),
        min_shots: rec.min_shots,
        consistency_tol: tol,
        stokes: rec.stokes,
        settings,
    })
}

fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|e| io_error(path, e))
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    match path {
        Some(p) => {
            let mut f = create(p)?;
            writeln!(f, "{text}").map_err(|e| io_error(p, e))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn strict_check(strict: bool, all_optimal: bool, what: &str) -> Result<(), CliError> {
    if strict && !all_optimal {
        Err(CliError::Numerical(format!(
            "{what}: at least one SDP solve was not optimal"
        )))
    } else {
        Ok(())
    }
}

pub fn run_sweep(opts: &Resolved) -> Result<(), CliError> {
    let rows = sweep(opts)?;
    match &opts.out {
        Some(p) => write_sweep_csv(&rows, create(p)?).map_err(|e| io_error(p, e))?,
        None => write_sweep_csv(&rows, io::stdout().lock())
            .map_err(|e| CliError::Input(e.to_string()))?,
    }
    strict_check(opts.strict, rows.iter().all(SweepRow::all_optimal), "sweep")
}

/// Path of the metadata sidecar written next to a count file.
pub fn metadata_path(counts: &Path) -> PathBuf {
    let mut name = counts.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn run_simulate(opts: &Resolved) -> Result<(), CliError> {
    let cfg = opts.run_config();
    let records = simulate_counts(&cfg)?;
    if let Some(p) = &opts.out {
        write_counts_csv(&records, create(p)?)?;
        write_metadata(&RunMetadata::for_run(&cfg)?, &metadata_path(p))?;
    }
    let report = count_report(&records, opts, Some(&cfg), "simulated")?;
    write_json(&report, opts.report.as_deref())?;
    strict_check(opts.strict, report.all_optimal(), "simulate")
}

pub fn run_ingest(counts: &Path, opts: &Resolved) -> Result<(), CliError> {
    let file = File::open(counts).map_err(|e| io_error(counts, e))?;
    let records = read_counts_csv(file)?;
    let report = count_report(&records, opts, None, &counts.display().to_string())?;
    write_json(&report, opts.out.as_deref())?;
    strict_check(opts.strict, report.all_optimal(), "ingest")
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let base = match &cli.config {
        Some(p) => load_config(p)?,
        None => Options::default(),
    };
    match cli.command {
        Command::Sweep(o) => run_sweep(&o.over(base).resolve()?),
        Command::Simulate(o) => run_simulate(&o.over(base).resolve()?),
        Command::Ingest { counts, options } => run_ingest(&counts, &options.over(base).resolve()?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolved(o: Options) -> Resolved {
        o.resolve().unwrap()
    }

    #[test]
    fn numbers_use_twelve_significant_digits() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(0.25), "0.25");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(format_number(2e7), "20000000");
        assert_eq!(format_number(1e12), "1e+12");
        assert_eq!(format_number(1.5e-5), "1.5e-05");
        assert_eq!(format_number(9.99e-6), "9.99e-06");
        assert_eq!(format_number(123456.7890123456), "123456.789012");
        assert_eq!(format_number(f64::NAN), "nan");
    }

    #[test]
    fn twelve_digits_round_trip_to_within_half_ulp_of_the_last_digit() {
        for v in [
            std::f64::consts::PI,
            1e-3 / 7.0,
            12345.678901234,
            0.999999999999,
        ] {
            let back: f64 = format_number(v).parse().unwrap();
            assert!((back - v).abs() <= 5e-12 * v.abs(), "{v} {back}");
        }
    }

    #[test]
    fn grid_is_ascending_and_hits_both_ends() {
        let g = resolved(Options {
            t_max: Some(3.0),
            t_steps: Some(7),
            ..Default::default()
        })
        .grid();
        assert_eq!(g, vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
        let single = resolved(Options {
            t_max: Some(50.0),
            t_steps: Some(1),
            ..Default::default()
        });
        assert_eq!(single.grid(), vec![50.0]);
    }

    #[test]
    fn defaults_mirror_the_reference_setup() {
        let r = resolved(Options::default());
        assert_eq!(r.channel, ChannelParams::default());
        assert_eq!(r.channel.gamma, 2e7);
        assert!(r.channel.rotation_enabled && r.imperfections && r.weight && !r.strict);
        assert_eq!(r.prep.shrink_s, 0.96);
        assert_eq!(r.n_values, vec![2, 3]);
    }

    #[test]
    fn invalid_values_are_input_errors() {
        for o in [
            Options {
                t_steps: Some(0),
                ..Default::default()
            },
            Options {
                t_max: Some(-1.0),
                ..Default::default()
            },
            Options {
                shrink_s: Some(1.5),
                ..Default::default()
            },
            Options {
                gamma: Some(0.0),
                ..Default::default()
            },
            Options {
                tol_gap: Some(-1e-7),
                ..Default::default()
            },
        ] {
            assert!(matches!(o.resolve(), Err(CliError::Input(_))), "{o:?}");
        }
    }

    #[test]
    fn flags_override_config_fields() {
        let file: Options =
            serde_json::from_str(r#"{"shrink_s": 0.5, "t_max": 2, "rotation": "off", "n": "3"}"#)
                .unwrap();
        let flags = Options {
            shrink_s: Some(0.9),
            ..Default::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.shrink_s, Some(0.9));
        assert_eq!(merged.t_max, Some(2.0));
        assert_eq!(merged.rotation, Some(Switch::Off));
        assert_eq!(merged.n, Some(SettingCount::Three));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(serde_json::from_str::<Options>(r#"{"t_maxx": 2}"#).is_err());
    }

    #[test]
    fn row_has_one_field_per_header_column() {
        let opts = resolved(Options {
            n: Some(SettingCount::Two),
            weight: Some(Switch::Off),
            ..Default::default()
        });
        let row = sweep_row(&opts, 0.4).unwrap();
        let fields = row.fields();
        assert_eq!(fields.len(), sweep_header().len());
        // N = 3 columns stay empty
        assert_eq!(fields[2], "");
        assert_eq!(fields[4], "");
        assert_eq!(fields.last().unwrap(), "skipped");
    }
}
