//! Configuration and dispatch for the `dualconv` binary.
//!
//! A run is described by a [`RunConfig`], assembled from an optional flat
//! `key=value` file and command-line overrides. [`run`] executes the verb and
//! returns the rendered output together with the pass flag.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use dualconv::coefficients::{
    check_fusion, check_intertwine_pe, check_parity_vanishing, check_w_isometry,
};
use dualconv::derivation::check_derivation_identity;
use dualconv::dual_conv::{check_associative, check_commutative};
use dualconv::family::{
    common_alpha_support, generate_group_samples, generate_group_samples_on,
    generate_kernel_points, parse_function, parse_kernel,
};
use dualconv::lp::{divergence_value, gamma_ratio_table, vp_isometry_check, LpExperimentRow};
use dualconv::suite::{self, B_MAX};
use dualconv::{
    FiniteRankKernel, HaarFunction, Kernel, PairingMode, QuadratureSpec, RankOneTensor, Report,
};
use thiserror::Error;

/// Invalid configuration; the binary exits with code 2.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Spec(#[from] dualconv::Error),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    DcCommute,
    DcAssoc,
    FusionCheck,
    ParityCheck,
    IntertwineCheck,
    DerivationCheck,
    WIsometry,
    LpTable,
    DemoDivergence,
}

impl Verb {
    pub const ALL: [Verb; 9] = [
        Verb::DcCommute,
        Verb::DcAssoc,
        Verb::FusionCheck,
        Verb::ParityCheck,
        Verb::IntertwineCheck,
        Verb::DerivationCheck,
        Verb::WIsometry,
        Verb::LpTable,
        Verb::DemoDivergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Verb::DcCommute => "dc-commute",
            Verb::DcAssoc => "dc-assoc",
            Verb::FusionCheck => "fusion-check",
            Verb::ParityCheck => "parity-check",
            Verb::IntertwineCheck => "intertwine-check",
            Verb::DerivationCheck => "derivation-check",
            Verb::WIsometry => "w-isometry",
            Verb::LpTable => "lp-table",
            Verb::DemoDivergence => "demo-divergence",
        }
    }

    fn default_tolerance(self) -> f64 {
        match self {
            Verb::DcCommute | Verb::IntertwineCheck => 1e-7,
            Verb::DcAssoc | Verb::FusionCheck => 1e-6,
            Verb::DerivationCheck => 1e-5,
            Verb::ParityCheck => 1e-12,
            Verb::WIsometry => 1e-8,
            Verb::LpTable => 1e-9,
            Verb::DemoDivergence => 1.0,
        }
    }

    fn default_format(self) -> Format {
        match self {
            Verb::LpTable | Verb::DemoDivergence => Format::Csv,
            _ => Format::Json,
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Verb {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Verb::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| invalid(format!("unknown verb {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(invalid(format!("unknown format {s:?}"))),
        }
    }
}

/// Command-line flags. Every flag may also be given as `key=value` in the
/// file passed to `--config`; flags win.
#[derive(Debug, Default, Parser)]
#[command(
    name = "dualconv",
    version,
    about = "Verify dual convolution identities numerically"
)]
pub struct Args {
    /// dc-commute, dc-assoc, fusion-check, parity-check, intertwine-check,
    /// derivation-check, w-isometry, lp-table or demo-divergence
    #[arg(long)]
    pub verb: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Samples per case
    #[arg(long)]
    pub samples: Option<usize>,
    /// Number of random cases
    #[arg(long)]
    pub cases: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Exponent for lp-table and w-isometry
    #[arg(long)]
    pub p: Option<f64>,
    /// Comma-separated `n` values for lp-table
    #[arg(long)]
    pub n: Option<String>,
    /// Function or `rank1:` kernel spec; repeat to build a custom case
    #[arg(long)]
    pub family: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// json or csv
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long = "rel-tol")]
    pub rel_tol: Option<f64>,
    #[arg(long = "abs-tol")]
    pub abs_tol: Option<f64>,
    #[arg(long = "max-subdiv")]
    pub max_subdiv: Option<usize>,
    /// Flat key=value file
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// A fully validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub verb: Verb,
    pub seed: u64,
    pub tolerance: f64,
    pub samples: usize,
    pub cases: usize,
    pub p: Option<f64>,
    pub n_values: Vec<u32>,
    pub quadrature: QuadratureSpec,
    pub function_specs: Vec<String>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

/// Parses `key=value` lines; `#` starts a comment. `family` may repeat.
pub fn parse_config_text(
    text: &str,
) -> Result<(HashMap<String, String>, Vec<String>), ConfigError> {
    let mut map = HashMap::new();
    let mut family = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("line {}: expected key=value", i + 1)))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if k == "family" {
            family.push(v);
        } else if map.insert(k.clone(), v).is_some() {
            return Err(invalid(format!("line {}: duplicate key {k:?}", i + 1)));
        }
    }
    Ok((map, family))
}

const KEYS: [&str; 12] = [
    "verb",
    "seed",
    "samples",
    "cases",
    "tol",
    "p",
    "n",
    "out",
    "format",
    "rel-tol",
    "abs-tol",
    "max-subdiv",
];

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| invalid(format!("bad value for {key}: {v:?}")))
}

fn parse_n(s: &str) -> Result<Vec<u32>, ConfigError> {
    let v = s
        .split(',')
        .map(|x| parse_value::<u32>("n", x.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    if v.contains(&0) {
        return Err(invalid("n values must be at least 1"));
    }
    Ok(v)
}

impl RunConfig {
    /// Merges flags over the config file and validates the result.
    pub fn from_args(args: Args) -> Result<Self, ConfigError> {
        let (file, mut family) = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                    path: path.clone(),
                    source,
                })?;
                parse_config_text(&text)?
            }
            None => Default::default(),
        };
        if let Some(k) = file.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(invalid(format!("unknown config key {k:?}")));
        }
        fn pick<T: FromStr>(
            flag: Option<T>,
            file: &HashMap<String, String>,
            key: &str,
        ) -> Result<Option<T>, ConfigError> {
            match flag {
                Some(v) => Ok(Some(v)),
                None => file.get(key).map(|v| parse_value(key, v)).transpose(),
            }
        }

        let verb: Verb = pick::<String>(args.verb, &file, "verb")?
            .ok_or_else(|| invalid("missing --verb"))?
            .parse()?;
        let tolerance = pick(args.tol, &file, "tol")?.unwrap_or(verb.default_tolerance());
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(invalid(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }
        let samples = pick(args.samples, &file, "samples")?.unwrap_or(25);
        if samples == 0 {
            return Err(invalid("samples must be at least 1"));
        }
        let cases = pick(args.cases, &file, "cases")?.unwrap_or(10);
        if cases == 0 {
            return Err(invalid("cases must be at least 1"));
        }
        let p = pick(args.p, &file, "p")?;
        if let Some(p) = p {
            if !(p > 1.0 && p.is_finite()) {
                return Err(invalid(format!("exponent must lie in (1, ∞), got {p}")));
            }
        }
        if verb == Verb::LpTable {
            match p {
                None => return Err(invalid("lp-table needs --p")),
                Some(2.0) => return Err(invalid("lp-table excludes p = 2")),
                _ => {}
            }
        }
        let n_values = match pick::<String>(args.n, &file, "n")? {
            Some(s) => parse_n(&s)?,
            None => vec![1, 2, 4, 8, 16],
        };
        let base = QuadratureSpec::default();
        let quadrature = QuadratureSpec::new(
            pick(args.rel_tol, &file, "rel-tol")?.unwrap_or(base.rel_tol),
            pick(args.abs_tol, &file, "abs-tol")?.unwrap_or(base.abs_tol),
            pick(args.max_subdiv, &file, "max-subdiv")?.unwrap_or(base.max_subdivisions),
            base.base_order,
        )?;
        if !args.family.is_empty() {
            family = args.family;
        }
        let format = match pick::<String>(args.format, &file, "format")? {
            Some(s) => s.parse()?,
            None => verb.default_format(),
        };
        let config = Self {
            verb,
            seed: pick(args.seed, &file, "seed")?.unwrap_or(1),
            tolerance,
            samples,
            cases,
            p,
            n_values,
            quadrature,
            function_specs: family,
            output_path: pick(args.out, &file, "out")?,
            format,
        };
        config.custom_case()?;
        Ok(config)
    }

    /// Tensors from `--family`: `rank1:` kernels contribute their terms,
    /// consecutive plain functions pair up as `ξ ⊗ η`.
    fn tensors(&self) -> Result<Vec<RankOneTensor>, ConfigError> {
        let mut out = Vec::new();
        let mut pending: Option<HaarFunction> = None;
        for s in &self.function_specs {
            if s.trim_start().starts_with("rank1:") {
                out.extend(parse_kernel(s, &self.quadrature)?.terms().iter().cloned());
            } else {
                let f = parse_function(s)?;
                match pending.take() {
                    Some(xi) => out.push(RankOneTensor::hilbert(xi, f)),
                    None => pending = Some(f),
                }
            }
        }
        if pending.is_some() {
            return Err(invalid(
                "an odd number of functions cannot be paired into tensors",
            ));
        }
        Ok(out)
    }

    fn functions(&self) -> Result<Vec<HaarFunction>, ConfigError> {
        let f = self
            .function_specs
            .iter()
            .map(|s| parse_function(s))
            .collect::<Result<Vec<_>, _>>()?;
        if f.len() % 2 == 1 {
            return Err(invalid("function checks need pairs of functions"));
        }
        Ok(f)
    }

    /// The user-supplied case, if `--family` was given; validated up front
    /// so that malformed specs are configuration errors.
    fn custom_case(&self) -> Result<Option<Custom>, ConfigError> {
        if self.function_specs.is_empty() {
            return Ok(None);
        }
        let arity = match self.verb {
            Verb::FusionCheck | Verb::DcCommute => 2,
            Verb::DcAssoc | Verb::DerivationCheck => 3,
            Verb::IntertwineCheck => 1,
            Verb::ParityCheck | Verb::WIsometry => {
                return Ok(Some(Custom::Functions(self.functions()?)))
            }
            Verb::LpTable | Verb::DemoDivergence => {
                return Err(invalid(format!("{} takes no --family", self.verb)))
            }
        };
        let t = self.tensors()?;
        if self.verb == Verb::IntertwineCheck {
            if t.is_empty() {
                return Err(invalid("intertwine-check needs at least one tensor"));
            }
        } else if t.len() != arity {
            return Err(invalid(format!(
                "{} needs exactly {arity} tensors, got {}",
                self.verb,
                t.len()
            )));
        }
        Ok(Some(Custom::Tensors(t)))
    }
}

enum Custom {
    Tensors(Vec<RankOneTensor>),
    Functions(Vec<HaarFunction>),
}

/// Rendered output of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub pass: bool,
}

const REPORT_CSV_HEADER: &str = "check_name,n_cases,n_samples,max_residual,mean_residual,max_rel_residual,tolerance,pass,pole_distance_min,wall_time_ms,seed,reason";

fn report_csv(r: &Report) -> String {
    let opt = |v: Option<String>| v.unwrap_or_default();
    format!(
        "{REPORT_CSV_HEADER}\n{},{},{},{:e},{:e},{:e},{:e},{},{},{},{},{}\n",
        r.check_name,
        r.n_cases,
        r.n_samples,
        r.max_residual,
        r.mean_residual,
        r.max_rel_residual,
        r.tolerance,
        r.pass,
        opt(r.pole_distance_min.map(|d| format!("{d:e}"))),
        r.wall_time_ms,
        opt(r.seed.map(|s| s.to_string())),
        opt(r
            .reason
            .as_ref()
            .map(|s| format!("\"{}\"", s.replace('"', "\"\"")))),
    )
}

fn render_report(r: &Report, format: Format) -> Outcome {
    let text = match format {
        Format::Json => serde_json::to_string_pretty(r).expect("reports serialize") + "\n",
        Format::Csv => report_csv(r),
    };
    Outcome { text, pass: r.pass }
}

fn kernels(t: &[RankOneTensor], q: &QuadratureSpec) -> Result<Vec<Kernel>, dualconv::Error> {
    t.iter().map(|x| Kernel::rank_one(x.clone(), q)).collect()
}

fn custom_report(cfg: &RunConfig, case: Custom) -> Result<Report, dualconv::Error> {
    let (seed, n, tol, q) = (cfg.seed, cfg.samples, cfg.tolerance, &cfg.quadrature);
    let report = match case {
        Custom::Tensors(t) => match cfg.verb {
            Verb::FusionCheck => {
                let xs = generate_group_samples_on(seed, n, B_MAX, &common_alpha_support(&t));
                check_fusion(&t[0], &t[1], &xs, tol, q)
            }
            Verb::DcCommute => {
                let k = kernels(&t, q)?;
                let pts = generate_kernel_points(seed, n, &[&k[0], &k[1]]);
                check_commutative(&k[0], &k[1], &pts, tol, q)
            }
            Verb::DcAssoc => {
                let k = kernels(&t, q)?;
                let pts = generate_kernel_points(seed, n, &[&k[0], &k[1], &k[2]]);
                check_associative(&t[0], &t[1], &t[2], &pts, tol, q)
            }
            Verb::DerivationCheck => check_derivation_identity(&t[0], &t[1], &t[2], q, tol),
            Verb::IntertwineCheck => {
                let xs = generate_group_samples_on(seed, n, B_MAX, &common_alpha_support(&t));
                let k = FiniteRankKernel::new(t, PairingMode::Hilbert, q)?;
                check_intertwine_pe(&k, &xs, tol, q)
            }
            _ => unreachable!("validated in custom_case"),
        },
        Custom::Functions(f) => {
            let mut reports = Vec::new();
            for pair in f.chunks(2) {
                let (a, b) = (&pair[0], &pair[1]);
                match cfg.verb {
                    Verb::ParityCheck => {
                        let xs = generate_group_samples(seed, n, B_MAX);
                        reports.push(check_parity_vanishing(a, b, &xs, tol, q)?);
                    }
                    _ => {
                        reports.push(check_w_isometry(a, b, tol, q));
                        if let Some(p) = cfg.p {
                            reports.push(vp_isometry_check(a, b, p, tol, q));
                        }
                    }
                }
            }
            Report::combine(cfg.verb.name(), &reports, tol)
        }
    };
    Ok(report.with_seed(seed))
}

fn suite_report(cfg: &RunConfig) -> Report {
    let (seed, cases, n, tol, q) = (
        cfg.seed,
        cfg.cases,
        cfg.samples,
        cfg.tolerance,
        &cfg.quadrature,
    );
    match cfg.verb {
        Verb::DcCommute => suite::commute(seed, cases, n, tol, q),
        Verb::DcAssoc => suite::assoc(seed, cases, n, tol, q),
        Verb::FusionCheck => suite::fusion(seed, cases, n, tol, q),
        Verb::ParityCheck => suite::parity(seed, cases, n, tol, q),
        Verb::IntertwineCheck => suite::intertwine(seed, cases, n, tol, q),
        Verb::DerivationCheck => suite::derivation(seed, cases, tol, q),
        Verb::WIsometry => {
            let ps: Vec<f64> = cfg.p.into_iter().collect();
            Report::combine(
                "w-isometry",
                &suite::isometries(seed, cases, &ps, tol, q),
                tol,
            )
            .with_seed(seed)
        }
        Verb::LpTable | Verb::DemoDivergence => unreachable!("not a report verb"),
    }
}

fn lp_table(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let p = cfg.p.expect("validated");
    let rows = gamma_ratio_table(p, &cfg.n_values, &cfg.quadrature)?;
    let pass = rows.iter().all(|r| r.residual <= cfg.tolerance);
    let text = match cfg.format {
        Format::Csv => {
            let mut s = String::from(LpExperimentRow::CSV_HEADER);
            s.push('\n');
            for r in &rows {
                s.push_str(&r.csv_line());
                s.push('\n');
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
    };
    Ok(Outcome { text, pass })
}

/// `ε` values of the divergence demonstration.
pub const DIVERGENCE_EPS: [f64; 3] = [1e-2, 1e-4, 1e-6];

fn demo_divergence(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let values = DIVERGENCE_EPS
        .iter()
        .map(|&e| Ok((e, divergence_value(e, &cfg.quadrature)?)))
        .collect::<Result<Vec<_>, dualconv::Error>>()?;
    let text = match cfg.format {
        Format::Csv => {
            let mut s = String::from("eps,norm_sq\n");
            for (e, v) in &values {
                s.push_str(&format!("{e:e},{v:e}\n"));
            }
            s
        }
        Format::Json => {
            let rows: Vec<_> = values
                .iter()
                .map(|(e, v)| serde_json::json!({ "eps": e, "norm_sq": v }))
                .collect();
            serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n"
        }
    };
    Ok(Outcome { text, pass: true })
}

/// Executes the configured verb.
///
/// Numerical failures, including non-convergence, come back as a failing
/// report; only configuration problems are errors.
pub fn run(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    match cfg.verb {
        Verb::LpTable => lp_table(cfg),
        Verb::DemoDivergence => demo_divergence(cfg),
        _ => {
            let report = match cfg.custom_case()? {
                Some(case) => custom_report(cfg, case).unwrap_or_else(|e| {
                    let mut r = Report::combine(cfg.verb.name(), &[], cfg.tolerance);
                    r.pass = false;
                    r.reason = Some(e.to_string());
                    r.with_seed(cfg.seed)
                }),
                None => suite_report(cfg),
            };
            Ok(render_report(&report, cfg.format))
        }
    }
}

/// Writes the output to `path`, or to stdout when `None`.
pub fn emit(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

/// Worker count from `DUALCONV_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Result<Option<usize>, ConfigError> {
    match std::env::var("DUALCONV_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(invalid(format!(
                "DUALCONV_THREADS must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(None),
    }
}
