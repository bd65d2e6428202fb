//! Command-line front end for `vgpricer`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::density::{cdf_fourier, cdf_mixture, linspace, pdf_fourier, pdf_mixture, DensityConfig};
use crate::error::VgError;
use crate::esscher::{martingale_check, solvability};
use crate::pricing::{
    black_scholes, calibrate_q, er_objective, measure_for, pricing_grid, price_extended_with,
    price_generalized_with, replication_report, reference_strikes, MarketContext, PayoffGrid, PricingConfig,
    ER_HALF_RANGE, ER_SAMPLES, SPY_BS_VOL, SPY_RATE, SPY_SPOT, REFERENCE_TAUS,
};
use crate::simulate::{cointegration_residuals, ks_statistic, sample_stats, simulate_vg_path, OUConfig, DEFAULT_SEED};
use crate::vg::{cumulants, VgParams};

#[derive(Debug, Parser)]
#[command(name = "vgpricer", version, about = "Variance-Gamma option pricing, densities and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Extended,
    Generalized,
    Both,
    Bs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then the preset, then the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Risk-free rate per year, continuously compounded.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub rate: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub spot: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub strike: Option<f64>,
    /// Maturity in years.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub engine: Option<EngineArg>,
    /// Contour damping for the generalized engine (must be < -1).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub q: Option<f64>,
    /// Frequency nodes for the generalized engine.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Use this Esscher parameter instead of the solved h*.
    #[arg(long = "h-star-override", global = true, allow_hyphen_values = true)]
    pub h_star_override: Option<f64>,
    /// Parameter preset; `table1` loads the daily SPY estimates and market data.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Digits after the decimal point in numeric output.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub decimals: Option<usize>,
    /// Flat key=value file mirroring the long flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Black–Scholes benchmark volatility.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub vol: Option<f64>,
    /// Newton–Cotes panels for mixture integrals.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub panels: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price one European call.
    Price,
    /// Price surface over strikes and maturities.
    Table(TableArgs),
    /// Density and distribution function on a grid.
    Density(DensityArgs),
    /// Simulate OU variance and VG log-return paths.
    Simulate(SimulateArgs),
    /// Compare empirical moments of a price series with the model.
    Moments(MomentsArgs),
    /// Calibrate the contour damping q per strike ratio.
    CalibrateQ(CalibrateArgs),
    /// Report the Esscher measure.
    Esscher,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    /// Use the 31 printed strikes and six printed maturities.
    #[arg(long = "paper-grid")]
    pub reference_grid: bool,
    /// File with one strike per line (or a CSV with a `strike` column).
    #[arg(long)]
    pub strikes_file: Option<PathBuf>,
    /// Comma-separated maturities in years.
    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
    /// Emit printed values next to computed ones (with `--paper-grid` only).
    #[arg(long)]
    pub compare: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    /// Comma-separated horizons.
    #[arg(long = "t", value_delimiter = ',', default_values_t = vec![0.25, 0.5, 0.75, 1.0])]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = -8.0, allow_hyphen_values = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 8.0, allow_hyphen_values = true)]
    pub hi: f64,
    #[arg(long, default_value_t = 321)]
    pub points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1000.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long = "sigma2-0", default_value_t = 0.0)]
    pub sigma2_0: f64,
    /// Leading time excluded from the stationary statistics.
    #[arg(long, default_value_t = 20.0)]
    pub burn_in: f64,
}

#[derive(Debug, Clone, Args)]
pub struct MomentsArgs {
    /// CSV with `date` and `close` columns.
    #[arg(long)]
    pub returns: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    /// Comma-separated strike ratios.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.75, 1.0, 1.25, 1.5, 2.0])]
    pub k: Vec<f64>,
    /// Spacing of the recovery grid.
    #[arg(long)]
    pub gamma: Option<f64>,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid input: exit code 2.
    Validation(String),
    /// Numerical breakdown or output failure: exit code 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<VgError> for CliError {
    fn from(e: VgError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: VgParams,
    pub rate: f64,
    pub spot: f64,
    pub strike: Option<f64>,
    pub tau: Option<f64>,
    pub engine: EngineArg,
    pub q: Option<f64>,
    pub n: usize,
    pub panels: usize,
    pub seed: u64,
    pub h_star_override: Option<f64>,
    pub vol: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub decimals: usize,
}

impl RunConfig {
    pub fn pricing(&self) -> PricingConfig {
        PricingConfig {
            density: DensityConfig { panels: self.panels, ..DensityConfig::default() },
            n: self.n,
            q: self.q,
            h_star_override: self.h_star_override,
            ..PricingConfig::default()
        }
    }

    pub fn density(&self) -> DensityConfig {
        DensityConfig { panels: self.panels, ..DensityConfig::default() }
    }
}

/// Reads a flat `key=value` file; blank lines and `#` comments are ignored.
/// Keys may use `-` or `_`.
pub fn parse_config_file(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("config line {}: expected key=value", i + 1)))?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

const CONFIG_KEYS: [&str; 20] = [
    "mu", "delta", "sigma", "alpha", "theta", "rate", "spot", "strike", "tau", "engine", "q", "n", "seed",
    "h-star-override", "preset", "format", "out", "decimals", "vol", "panels",
];

/// Merges flags over the config file over the preset over the defaults, then
/// validates every numeric override.
pub fn resolve(common: &CommonArgs) -> CliResult<RunConfig> {
    let file = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    if let Some(k) = file.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        return Err(invalid(format!("unknown config key `{k}`")));
    }
    fn num<T: std::str::FromStr>(file: &BTreeMap<String, String>, key: &str) -> CliResult<Option<T>> {
        file.get(key)
            .map(|v| v.parse::<T>().map_err(|_| invalid(format!("config key `{key}`: cannot parse `{v}`"))))
            .transpose()
    }
    let preset = common.preset.clone().or_else(|| file.get("preset").cloned());
    match preset.as_deref() {
        None | Some("table1") => {}
        Some(other) => return Err(invalid(format!("unknown preset `{other}` (available: table1)"))),
    }
    let base = VgParams::spy_daily();
    let params = VgParams {
        mu: common.mu.or(num(&file, "mu")?).unwrap_or(base.mu),
        delta: common.delta.or(num(&file, "delta")?).unwrap_or(base.delta),
        sigma: common.sigma.or(num(&file, "sigma")?).unwrap_or(base.sigma),
        alpha: common.alpha.or(num(&file, "alpha")?).unwrap_or(base.alpha),
        theta: common.theta.or(num(&file, "theta")?).unwrap_or(base.theta),
    };
    params.validate()?;
    let engine = match common.engine {
        Some(e) => e,
        None => match file.get("engine") {
            Some(v) => EngineArg::from_str(v, true).map_err(|_| invalid(format!("unknown engine `{v}`")))?,
            None => EngineArg::Extended,
        },
    };
    let format = match common.format {
        Some(f) => f,
        None => match file.get("format") {
            Some(v) => Format::from_str(v, true).map_err(|_| invalid(format!("unknown format `{v}`")))?,
            None => Format::Csv,
        },
    };
    let cfg = RunConfig {
        params,
        rate: common.rate.or(num(&file, "rate")?).unwrap_or(SPY_RATE),
        spot: common.spot.or(num(&file, "spot")?).unwrap_or(SPY_SPOT),
        strike: common.strike.or(num(&file, "strike")?),
        tau: common.tau.or(num(&file, "tau")?),
        engine,
        q: common.q.or(num(&file, "q")?),
        n: common.n.or(num(&file, "n")?).unwrap_or(4096),
        panels: common.panels.or(num(&file, "panels")?).unwrap_or(DensityConfig::default().panels),
        seed: common.seed.or(num(&file, "seed")?).unwrap_or(DEFAULT_SEED),
        h_star_override: common.h_star_override.or(num(&file, "h-star-override")?),
        vol: common.vol.or(num(&file, "vol")?).unwrap_or(SPY_BS_VOL),
        format,
        out: common.out.clone().or_else(|| file.get("out").map(PathBuf::from)),
        decimals: common.decimals.or(num(&file, "decimals")?).unwrap_or(4),
    };
    if !(cfg.rate.is_finite()) {
        return Err(invalid("rate must be finite"));
    }
    if !(cfg.spot > 0.0 && cfg.spot.is_finite()) {
        return Err(invalid(format!("spot must be > 0, got {}", cfg.spot)));
    }
    if let Some(k) = cfg.strike {
        if !(k > 0.0 && k.is_finite()) {
            return Err(invalid(format!("strike must be > 0, got {k}")));
        }
    }
    if let Some(t) = cfg.tau {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("tau must be > 0, got {t}")));
        }
    }
    if let Some(q) = cfg.q {
        if !(q < -1.0) {
            return Err(invalid(format!("q must be < -1, got {q}")));
        }
    }
    if cfg.n < 16 || !cfg.n.is_power_of_two() {
        return Err(invalid(format!("n must be a power of two >= 16, got {}", cfg.n)));
    }
    if cfg.panels == 0 {
        return Err(invalid("panels must be >= 1"));
    }
    if !(cfg.vol > 0.0 && cfg.vol.is_finite()) {
        return Err(invalid(format!("vol must be > 0, got {}", cfg.vol)));
    }
    if cfg.decimals > 17 {
        return Err(invalid(format!("decimals must be <= 17, got {}", cfg.decimals)));
    }
    Ok(cfg)
}

/// Fixed-point text with `decimals` digits; Rust rounds the exact binary
/// value half-to-even. Negative zero prints without a sign.
pub fn fmt_num(x: f64, decimals: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{:.*}", decimals, x);
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn json_num(x: f64, decimals: usize) -> Value {
    fmt_num(x, decimals).parse::<f64>().map(Value::from).unwrap_or(Value::Null)
}

/// Tabular result rendered as CSV or JSON records.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

enum Cell {
    Num(f64),
    Text(String),
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn render(&self, format: Format, decimals: usize) -> CliResult<String> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io_err = |e: csv::Error| CliError::Numerical(format!("csv output failed: {e}"));
                w.write_record(&self.header).map_err(io_err)?;
                for row in &self.rows {
                    let rec: Vec<String> = row
                        .iter()
                        .map(|c| match c {
                            Cell::Num(x) => fmt_num(*x, decimals),
                            Cell::Text(s) => s.clone(),
                        })
                        .collect();
                    w.write_record(&rec).map_err(io_err)?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Numerical(e.to_string()))?;
                String::from_utf8(bytes).map_err(|e| CliError::Numerical(e.to_string()))
            }
            Format::Json => Ok(serde_json::to_string_pretty(&Value::Array(self.json_rows(decimals)))
                .map_err(|e| CliError::Numerical(e.to_string()))?
                + "\n"),
        }
    }

    fn json_rows(&self, decimals: usize) -> Vec<Value> {
        self.rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (h, c) in self.header.iter().zip(row) {
                    let v = match c {
                        Cell::Num(x) => json_num(*x, decimals),
                        Cell::Text(s) if s.is_empty() => Value::Null,
                        Cell::Text(s) => Value::from(s.clone()),
                    };
                    obj.insert(h.clone(), v);
                }
                Value::Object(obj)
            })
            .collect()
    }
}

fn write_output(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Numerical(format!("cannot write output: {e}"))),
    }
}

/// Parses arguments and runs the selected command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let cfg = resolve(&cli.common)?;
    match &cli.command {
        Command::Price => cmd_price(&cfg),
        Command::Table(a) => cmd_table(&cfg, a),
        Command::Density(a) => cmd_density(&cfg, a),
        Command::Simulate(a) => cmd_simulate(&cfg, a),
        Command::Moments(a) => cmd_moments(&cfg, a),
        Command::CalibrateQ(a) => cmd_calibrate_q(&cfg, a),
        Command::Esscher => cmd_esscher(&cfg),
    }
}

/// Measure for the run. An override without a valid tilted law is reported on
/// standard error and the solved `h*` is used.
fn run_measure(cfg: &RunConfig) -> CliResult<(crate::esscher::EsscherMeasure, PricingConfig)> {
    let pc = cfg.pricing();
    match measure_for(&cfg.params, cfg.rate, &pc) {
        Ok(m) => Ok((m, pc)),
        Err(e) if cfg.h_star_override.is_some() => {
            let solved_cfg = PricingConfig { h_star_override: None, ..pc };
            let m = measure_for(&cfg.params, cfg.rate, &solved_cfg)?;
            eprintln!(
                "note: h-star override {} outside strip / n/a ({e}); using solved h* = {}",
                cfg.h_star_override.unwrap_or_default(),
                fmt_num(m.h_star, 10)
            );
            Ok((m, solved_cfg))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_price(cfg: &RunConfig) -> CliResult<()> {
    let strike = cfg.strike.ok_or_else(|| invalid("--strike is required"))?;
    let tau = cfg.tau.ok_or_else(|| invalid("--tau is required"))?;
    let mkt = MarketContext::new(cfg.spot, strike, cfg.rate, tau)?;
    let bs = black_scholes(&mkt, cfg.vol)?;
    let mut table = Table::new(&["engine", "price", "h_star", "q", "imag_residue", "bsm"]);
    let mut prices = Vec::new();
    if cfg.engine == EngineArg::Bs {
        table.rows.push(vec![
            Cell::Text("black_scholes".into()),
            Cell::Num(bs.price),
            Cell::Text(String::new()),
            Cell::Text(String::new()),
            Cell::Text(String::new()),
            Cell::Num(bs.price),
        ]);
    } else {
        let (m, pc) = run_measure(cfg)?;
        let opt = |x: Option<f64>| x.map(Cell::Num).unwrap_or(Cell::Text(String::new()));
        if matches!(cfg.engine, EngineArg::Extended | EngineArg::Both) {
            let e = price_extended_with(&m, &mkt, &pc)?;
            prices.push(e.price);
            table.rows.push(vec![
                Cell::Text("extended".into()),
                Cell::Num(e.price),
                Cell::Num(m.h_star),
                Cell::Text(String::new()),
                Cell::Text(String::new()),
                Cell::Num(bs.price),
            ]);
        }
        if matches!(cfg.engine, EngineArg::Generalized | EngineArg::Both) {
            let q = pc.q.unwrap_or_else(crate::pricing::default_q);
            let grid = pricing_grid(&m.tilted, q, pc.n)?;
            let g = price_generalized_with(&m, &mkt, &grid, &pc)?;
            prices.push(g.price);
            table.rows.push(vec![
                Cell::Text("generalized".into()),
                Cell::Num(g.price),
                Cell::Num(m.h_star),
                Cell::Num(q),
                opt(g.diagnostics.imag_residue),
                Cell::Num(bs.price),
            ]);
        }
    }
    if prices.len() == 2 {
        eprintln!("agreement delta (extended - generalized): {}", fmt_num(prices[0] - prices[1], cfg.decimals.max(8)));
    }
    write_output(&cfg.out, &table.render(cfg.format, cfg.decimals)?)
}

fn read_strikes(path: &Path) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty()).peekable();
    let mut col = 0;
    if let Some(first) = lines.peek() {
        if first.parse::<f64>().is_err() {
            col = first
                .split(',')
                .position(|h| h.trim().eq_ignore_ascii_case("strike"))
                .ok_or_else(|| invalid("strikes file header has no `strike` column"))?;
            lines.next();
        }
    }
    let strikes = lines
        .map(|l| {
            l.split(',')
                .nth(col)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .filter(|k| *k > 0.0 && k.is_finite())
                .ok_or_else(|| invalid(format!("bad strike line `{l}`")))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    if strikes.is_empty() {
        return Err(invalid("strikes file is empty"));
    }
    Ok(strikes)
}

fn cmd_table(cfg: &RunConfig, a: &TableArgs) -> CliResult<()> {
    if a.compare {
        if !a.reference_grid {
            return Err(invalid("--compare requires --paper-grid"));
        }
        return cmd_replication(cfg);
    }
    let strikes = match (&a.strikes_file, a.reference_grid) {
        (Some(_), true) => return Err(invalid("use either --paper-grid or --strikes-file")),
        (Some(path), false) => read_strikes(path)?,
        (None, true) => reference_strikes(),
        (None, false) => return Err(invalid("one of --paper-grid or --strikes-file is required")),
    };
    let taus = match (&a.taus, a.reference_grid) {
        (Some(t), _) => t.clone(),
        (None, _) => REFERENCE_TAUS.to_vec(),
    };
    if taus.is_empty() || taus.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(invalid("every tau must be > 0"));
    }
    let (m, pc) = run_measure(cfg)?;
    let q = pc.q.unwrap_or_else(crate::pricing::default_q);
    let grid = pricing_grid(&m.tilted, q, pc.n)?;
    let mut table = Table::new(&["strike", "moneyness", "tau", "bsm", "vg_extended", "vg_generalized"]);
    for &k in &strikes {
        for &tau in &taus {
            let mkt = MarketContext::new(cfg.spot, k, cfg.rate, tau)?;
            let bs = black_scholes(&mkt, cfg.vol)?.price;
            let ext = price_extended_with(&m, &mkt, &pc)?.price;
            let gen = price_generalized_with(&m, &mkt, &grid, &pc)?.price;
            table.rows.push(vec![
                Cell::Num(k),
                Cell::Num(cfg.spot / k),
                Cell::Num(tau),
                Cell::Num(bs),
                Cell::Num(ext),
                Cell::Num(gen),
            ]);
        }
    }
    write_output(&cfg.out, &table.render(cfg.format, cfg.decimals)?)
}

fn cmd_replication(cfg: &RunConfig) -> CliResult<()> {
    let report = replication_report(&cfg.params, cfg.h_star_override, &cfg.pricing())?;
    eprintln!("{}", report.override_status);
    eprintln!(
        "max |deviation| from printed VG columns: extended {}, generalized {}",
        fmt_num(report.max_abs_dev_extended, cfg.decimals),
        fmt_num(report.max_abs_dev_generalized, cfg.decimals)
    );
    let mut table = Table::new(&[
        "strike",
        "moneyness",
        "tau",
        "bsm",
        "bsm_printed",
        "vg_extended",
        "vg_extended_printed",
        "vg_generalized",
        "vg_generalized_printed",
    ]);
    for r in &report.rows {
        table.rows.push(
            [r.strike, r.moneyness, r.tau, r.bsm, r.bsm_printed, r.extended, r.extended_printed, r.generalized, r.generalized_printed]
                .into_iter()
                .map(Cell::Num)
                .collect(),
        );
    }
    let text = match cfg.format {
        Format::Csv => table.render(Format::Csv, cfg.decimals)?,
        Format::Json => {
            let v = json!({
                "h_star": json_num(report.h_star, 10),
                "requested_override": report.requested_override,
                "override_status": report.override_status,
                "max_abs_dev_extended": json_num(report.max_abs_dev_extended, cfg.decimals),
                "max_abs_dev_generalized": json_num(report.max_abs_dev_generalized, cfg.decimals),
                "rows": table.json_rows(cfg.decimals),
            });
            serde_json::to_string_pretty(&v).map_err(|e| CliError::Numerical(e.to_string()))? + "\n"
        }
    };
    write_output(&cfg.out, &text)
}

fn cmd_density(cfg: &RunConfig, a: &DensityArgs) -> CliResult<()> {
    if a.points < 2 || !(a.lo < a.hi) {
        return Err(invalid("need --points >= 2 and --lo < --hi"));
    }
    if a.t.is_empty() || a.t.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(invalid("every t must be > 0"));
    }
    let ys = linspace(a.lo, a.hi, a.points);
    let dc = cfg.density();
    let mut table = Table::new(&["t", "y", "pdf_mixture", "pdf_fourier", "cdf"]);
    for &t in &a.t {
        let four = pdf_fourier(&cfg.params, &ys, t)?;
        let cdf = cdf_fourier(&cfg.params, &ys, t)?;
        for (k, &y) in ys.iter().enumerate() {
            let mix = pdf_mixture(&cfg.params, y, t, &dc)?;
            let c = if cdf.values[k].is_finite() { cdf.values[k] } else { cdf_mixture(&cfg.params, y, t, &dc)? };
            table.rows.push(vec![Cell::Num(t), Cell::Num(y), Cell::Num(mix), Cell::Num(four.values[k]), Cell::Num(c)]);
        }
    }
    write_output(&cfg.out, &table.render(cfg.format, cfg.decimals)?)
}

fn cmd_simulate(cfg: &RunConfig, a: &SimulateArgs) -> CliResult<()> {
    let ou = OUConfig {
        alpha: cfg.params.alpha,
        theta: cfg.params.theta,
        lambda: a.lambda,
        sigma2_0: a.sigma2_0,
        horizon: a.horizon,
        dt: a.dt,
    };
    if !(a.burn_in >= 0.0 && a.burn_in < a.horizon) {
        return Err(invalid("--burn-in must be in [0, horizon)"));
    }
    let b = simulate_vg_path(&cfg.params, &ou, cfg.seed)?;
    let resid = cointegration_residuals(&b).iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let after: Vec<f64> = b.times.iter().zip(&b.sigma2_path).filter(|(t, _)| **t >= a.burn_in).map(|(_, v)| *v).collect();
    let st = sample_stats(&after);
    let incs: Vec<f64> = b
        .y_path
        .windows(2)
        .zip(&b.times[1..])
        .filter(|(_, t)| **t > a.burn_in)
        .map(|(w, _)| w[1] - w[0])
        .collect();
    // model distribution function of one step, tabulated once and interpolated
    let span = 20.0 * (a.dt * cumulants(&cfg.params).variance).sqrt() + 10.0;
    let grid = linspace(-span, span, 4001);
    let tab = cdf_fourier(&cfg.params, &grid, a.dt)?.values;
    let h = grid[1] - grid[0];
    let model_cdf = |x: f64| {
        let u = ((x + span) / h).clamp(0.0, (grid.len() - 1) as f64);
        let k = (u.floor() as usize).min(grid.len() - 2);
        let f = u - k as f64;
        tab[k] * (1.0 - f) + tab[k + 1] * f
    };
    let ks = if incs.is_empty() { f64::NAN } else { ks_statistic(&incs, model_cdf) };
    let d = cfg.decimals;
    let stats = json!({
        "seed": cfg.seed,
        "samples": st.n,
        "stationary_mean": json_num(st.mean, d),
        "stationary_mean_se": json_num(st.mean_se, d),
        "stationary_mean_target": json_num(cfg.params.alpha * cfg.params.theta, d),
        "stationary_variance": json_num(st.variance, d),
        "stationary_variance_target": json_num(cfg.params.alpha * cfg.params.theta.powi(2), d),
        "cointegration_max_residual": resid,
        "ks_increments_vs_model": json_num(ks, d),
        "increments": incs.len(),
    });
    let mut table = Table::new(&["t", "z", "sigma2", "sigma2_star", "y"]);
    for k in 0..b.times.len() {
        table.rows.push(
            [b.times[k], b.z_path[k], b.sigma2_path[k], b.sigma2_star_path[k], b.y_path[k]].into_iter().map(Cell::Num).collect(),
        );
    }
    match cfg.format {
        Format::Csv => {
            eprintln!("{}", serde_json::to_string_pretty(&stats).map_err(|e| CliError::Numerical(e.to_string()))?);
            write_output(&cfg.out, &table.render(Format::Csv, d)?)
        }
        Format::Json => {
            let v = json!({ "stats": stats, "paths": table.json_rows(d) });
            write_output(&cfg.out, &(serde_json::to_string_pretty(&v).map_err(|e| CliError::Numerical(e.to_string()))? + "\n"))
        }
    }
}

/// Dates, closes and percentage log returns read from a price file.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsSeries {
    pub dates: Vec<String>,
    pub closes: Vec<f64>,
    pub log_returns_pct: Vec<f64>,
}

/// Reads a CSV with `date` and `close` columns in any order. Dates must be
/// ISO `YYYY-MM-DD` and strictly increasing.
pub fn read_returns(text: &str) -> CliResult<ReturnsSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| invalid(format!("malformed CSV header: {e}")))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| invalid(format!("returns file has no `{name}` column")))
    };
    let (di, ci) = (find("date")?, find("close")?);
    let mut dates = Vec::new();
    let mut closes = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| invalid(format!("malformed CSV row {}: {e}", i + 2)))?;
        let date = rec.get(di).unwrap_or("").to_string();
        let iso = date.len() == 10
            && date.chars().enumerate().all(|(k, c)| if k == 4 || k == 7 { c == '-' } else { c.is_ascii_digit() });
        if !iso {
            return Err(invalid(format!("row {}: date `{date}` is not YYYY-MM-DD", i + 2)));
        }
        if dates.last().is_some_and(|d: &String| d.as_str() >= date.as_str()) {
            return Err(invalid(format!("row {}: dates must be strictly increasing", i + 2)));
        }
        let close: f64 = rec
            .get(ci)
            .and_then(|v| v.parse().ok())
            .filter(|c: &f64| *c > 0.0 && c.is_finite())
            .ok_or_else(|| invalid(format!("row {}: close must be a positive number", i + 2)))?;
        dates.push(date);
        closes.push(close);
    }
    if closes.len() < 3 {
        return Err(invalid("need at least three prices"));
    }
    let log_returns_pct = closes.windows(2).map(|w| 100.0 * (w[1] / w[0]).ln()).collect();
    Ok(ReturnsSeries { dates, closes, log_returns_pct })
}

fn cmd_moments(cfg: &RunConfig, a: &MomentsArgs) -> CliResult<()> {
    let text = fs::read_to_string(&a.returns)
        .map_err(|e| invalid(format!("cannot read {}: {e}", a.returns.display())))?;
    let series = read_returns(&text)?;
    let st = sample_stats(&series.log_returns_pct);
    if st.variance == 0.0 {
        eprintln!("warning: price series is constant; variance is zero and shape statistics are undefined");
    }
    let model = cumulants(&cfg.params);
    let mut table = Table::new(&["statistic", "empirical", "standard_error", "model"]);
    let rows = [
        ("mean", st.mean, st.mean_se, model.mean),
        ("variance", st.variance, st.variance_se, model.variance),
        ("skewness", st.skewness, (6.0 / st.n as f64).sqrt(), model.skewness),
        ("kurtosis", st.excess_kurtosis + 3.0, (24.0 / st.n as f64).sqrt(), model.kurtosis()),
    ];
    for (name, emp, se, m) in rows {
        table.rows.push(vec![Cell::Text(name.into()), Cell::Num(emp), Cell::Num(se), Cell::Num(m)]);
    }
    write_output(&cfg.out, &table.render(cfg.format, cfg.decimals)?)
}

fn cmd_calibrate_q(cfg: &RunConfig, a: &CalibrateArgs) -> CliResult<()> {
    let grid = PayoffGrid { n: cfg.n, gamma: a.gamma.unwrap_or(PayoffGrid::default().gamma) };
    if !(grid.gamma > 0.0) {
        return Err(invalid("--gamma must be > 0"));
    }
    let mut table = Table::new(&["k", "q_opt", "er_min"]);
    for &k in &a.k {
        if !(k > 0.0 && k.is_finite()) {
            return Err(invalid(format!("k must be > 0, got {k}")));
        }
        let q = calibrate_q(k, &grid)?;
        let er = er_objective(k, q, ER_HALF_RANGE, ER_SAMPLES, &grid)?;
        table.rows.push(vec![Cell::Num(k), Cell::Num(q), Cell::Num(er)]);
    }
    write_output(&cfg.out, &table.render(cfg.format, cfg.decimals.max(6))?)
}

fn cmd_esscher(cfg: &RunConfig) -> CliResult<()> {
    let p = cfg.params;
    let s = p.strip();
    let mut table = Table::new(&["quantity", "value"]);
    let mut push = |name: &str, v: f64| table.rows.push(vec![Cell::Text(name.into()), Cell::Num(v)]);
    push("h1", s.h1);
    push("h2", s.h2);
    push("solvable", if solvability(&p) { 1.0 } else { 0.0 });
    let (m, _) = run_measure(cfg)?;
    push("h_star", m.h_star);
    push("delta_tilde", m.tilted.delta);
    push("theta_tilde", m.tilted.theta);
    push("delta_tilde_plus", m.tilted_plus.delta);
    push("theta_tilde_plus", m.tilted_plus.theta);
    let tau = cfg.tau.unwrap_or(1.0);
    push("martingale_residual", martingale_check(&m, tau)?);
    write_output(&cfg.out, &table.render(cfg.format, cfg.decimals.max(6))?)
}
