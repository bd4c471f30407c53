//! Experiment runner behind the `sqsa` binary.
//!
//! Parameters resolve as CLI flag, then `--config` JSON file, then default.
//! Every output carries the tool version, resolved config, seed and the
//! content hash of any input family. Wall-clock time goes to a sidecar
//! `<out>.meta.json` (or stderr when writing to stdout) so the main output
//! stays byte-identical across runs.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::automata::{
    build_family, deserialize_family, k_threshold, min_word_length, serialize_family, FamilyConfig,
    ShuffleFamily,
};
use crate::error::{domain, Error, Result};
use crate::sq::{
    elimination_bound, query_lower_bound, sq_dim_certificate, BuiltinQuery, OracleSession,
};
use crate::symrep::StdCache;
use crate::walk::{
    cluster_eigenvalues, deviation_from_expected, expected_operator, expected_spectrum_at,
    mixing_scan, p_agree_bruteforce, p_agree_exact, p_agree_montecarlo, symmetric_eigenvalues,
    AgreementReport, CoupledWalk, DEFAULT_BRUTE_LIMIT,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "sqsa",
    version,
    about = "Shuffle-family semiautomata experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a shuffle family and write it in the binary family format.
    Family,
    /// Agreement probability of one member pair.
    Pagree,
    /// Spectrum of the expected or realized Fourier operator.
    Spectrum,
    /// Residual series with decay envelopes.
    Mixing,
    /// Pairwise-correlation certificate for the first `d` members.
    Certify,
    /// Scripted adversarial SQ oracle session.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Jsonl,
}

/// Flags as given on the command line; unset ones fall through.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    /// Number of states N.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Copies of each transposition in the alphabet.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Number of family members.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Bernoulli parameter of each mask bit.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Word length.
    #[arg(long, global = true)]
    pub t: Option<usize>,
    /// Largest word length of a scan.
    #[arg(long = "t-max", global = true)]
    #[serde(alias = "t-max")]
    pub t_max: Option<usize>,
    /// Number of concepts to certify or query.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Oracle tolerance.
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    /// pagree: exact | brute | mc. spectrum: expected | realized.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Family file to read (or, for `family`, to write).
    #[arg(long, global = true)]
    pub family: Option<PathBuf>,
    /// Output path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Worker threads; defaults to available parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Member pair `i,j` for pagree, spectrum and mixing.
    #[arg(long, global = true, value_parser = parse_pair)]
    #[serde(default, deserialize_with = "pair_from_json")]
    pub pair: Option<(usize, usize)>,
    /// JSON array of built-in queries for `oracle`.
    #[arg(long, global = true)]
    pub queries: Option<PathBuf>,
    /// JSON config file with any of the above keys.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected i,j, got {s:?}"))?;
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn pair_from_json<'de, D>(d: D) -> std::result::Result<Option<(usize, usize)>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    Ok(Option::<[usize; 2]>::deserialize(d)?.map(|[a, b]| (a, b)))
}

impl Flags {
    /// `self` wins over `other` field by field.
    fn or(self, other: Flags) -> Flags {
        Flags {
            n: self.n.or(other.n),
            k: self.k.or(other.k),
            m: self.m.or(other.m),
            p: self.p.or(other.p),
            t: self.t.or(other.t),
            t_max: self.t_max.or(other.t_max),
            d: self.d.or(other.d),
            tau: self.tau.or(other.tau),
            seed: self.seed.or(other.seed),
            samples: self.samples.or(other.samples),
            method: self.method.or(other.method),
            family: self.family.or(other.family),
            out: self.out.or(other.out),
            format: self.format.or(other.format),
            jobs: self.jobs.or(other.jobs),
            pair: self.pair.or(other.pair),
            queries: self.queries.or(other.queries),
            config: self.config.or(other.config),
        }
    }
}

/// Fully resolved parameters. Serialized into every output header.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub p: f64,
    pub seed: u64,
    pub t: usize,
    pub t_max: usize,
    pub d: usize,
    pub tau: f64,
    pub samples: u64,
    pub method: String,
    pub pair: (usize, usize),
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queries: Option<PathBuf>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub jobs: Option<usize>,
}

fn default_method(command: Command) -> &'static str {
    match command {
        Command::Pagree => "exact",
        Command::Spectrum => "expected",
        Command::Certify | Command::Mixing => "spectral",
        Command::Family | Command::Oracle => "none",
    }
}

fn default_format(command: Command) -> Format {
    match command {
        Command::Spectrum | Command::Mixing => Format::Csv,
        Command::Oracle => Format::Jsonl,
        _ => Format::Json,
    }
}

impl ExperimentConfig {
    /// Merges flags over the optional config file and fills defaults.
    /// Family parameters come from the family file header when one is read.
    pub fn resolve(command: Command, cli: Flags) -> Result<(Self, Option<LoadedFamily>)> {
        let file = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                serde_json::from_str::<Flags>(&text)
                    .map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))?
            }
            None => Flags::default(),
        };
        let f = cli.or(file);

        let loaded = match (&f.family, command) {
            (Some(path), c) if c != Command::Family => Some(LoadedFamily::read(path)?),
            _ => None,
        };
        let family_cfg = loaded.as_ref().map(|l| *l.family.config());

        let n = family_cfg.map_or(f.n.unwrap_or(5), |c| c.n);
        let k = match family_cfg {
            Some(c) => c.k,
            None => match f.k {
                Some(k) => k,
                None if n >= 4 => usize::try_from(k_threshold(n)?)
                    .map_err(|_| Error::Domain("k_threshold overflows usize".into()))?,
                None => 1,
            },
        };
        let m = family_cfg.map_or(f.m.unwrap_or(32), |c| c.m);
        let p = family_cfg.map_or(f.p.unwrap_or(0.5), |c| c.p);
        let seed = family_cfg.map_or(f.seed.unwrap_or(0), |c| c.seed);
        let t = match f.t {
            Some(t) => t,
            None if n >= 2 => min_word_length(n)? as usize,
            None => 0,
        };
        let cfg = ExperimentConfig {
            command,
            n,
            k,
            m,
            p,
            seed,
            t,
            t_max: f.t_max.unwrap_or(200),
            d: f.d.unwrap_or(m),
            tau: f.tau.unwrap_or(0.25),
            samples: f.samples.unwrap_or(100_000),
            method: f
                .method
                .unwrap_or_else(|| default_method(command).to_string()),
            pair: f.pair.unwrap_or((0, 1)),
            format: f.format.unwrap_or(default_format(command)),
            family: f.family,
            queries: f.queries,
            out: f.out,
            jobs: f.jobs,
        };
        cfg.family_config().validate()?;
        if cfg.jobs == Some(0) {
            return domain("--jobs must be at least 1");
        }
        Ok((cfg, loaded))
    }

    pub fn family_config(&self) -> FamilyConfig {
        FamilyConfig {
            n: self.n,
            k: self.k,
            m: self.m,
            p: self.p,
            seed: self.seed,
        }
    }
}

/// A family read from disk together with its content hash.
#[derive(Debug, Clone)]
pub struct LoadedFamily {
    pub family: ShuffleFamily,
    pub hash: String,
}

impl LoadedFamily {
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        Ok(LoadedFamily {
            family: deserialize_family(&bytes)?,
            hash: content_hash(&bytes),
        })
    }
}

/// Git-style blob hash over SHA-256: `sha256("blob <len>\0" ++ bytes)`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(7 + 64);
    out.push_str("sha256:");
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Brute-force guard, overridable through `SQSA_MAX_BRUTE`.
pub fn brute_limit() -> Result<u128> {
    match std::env::var("SQSA_MAX_BRUTE") {
        Ok(v) => v
            .trim()
            .parse::<u128>()
            .map_err(|e| Error::Parse(format!("SQSA_MAX_BRUTE={v:?}: {e}"))),
        Err(_) => Ok(DEFAULT_BRUTE_LIMIT),
    }
}

/// 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Header<'a> {
    cfg: &'a ExperimentConfig,
    family_hash: Option<&'a str>,
    summary: Vec<(&'static str, Value)>,
}

impl Header<'_> {
    fn json(&self) -> Value {
        let mut map = serde_json::Map::new();
        map.insert("tool".into(), json!("sqsa"));
        map.insert("version".into(), json!(VERSION));
        map.insert("seed".into(), json!(self.cfg.seed));
        map.insert("config".into(), json!(self.cfg));
        map.insert("family_hash".into(), json!(self.family_hash));
        for (k, v) in &self.summary {
            map.insert((*k).into(), v.clone());
        }
        Value::Object(map)
    }

    fn csv_lines(&self) -> String {
        let mut s = format!("# sqsa {VERSION}\n# seed: {}\n", self.cfg.seed);
        let _ = writeln!(s, "# config: {}", json!(self.cfg));
        let _ = writeln!(s, "# family_hash: {}", self.family_hash.unwrap_or("none"));
        for (k, v) in &self.summary {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s
    }
}

fn render_json(header: &Header<'_>, result: Value) -> Result<String> {
    let mut doc = header.json();
    doc["result"] = result;
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

/// Runs one command; returns the bytes of the main output.
pub fn execute(cfg: &ExperimentConfig, loaded: Option<&LoadedFamily>) -> Result<String> {
    let built;
    let (family, hash) = match loaded {
        Some(l) => (&l.family, Some(l.hash.as_str())),
        None => {
            built = build_family(&cfg.family_config())?;
            (&built, None)
        }
    };
    match cfg.command {
        Command::Family => cmd_family(cfg, family),
        Command::Pagree => cmd_pagree(cfg, family, hash),
        Command::Spectrum => cmd_spectrum(cfg, family, hash),
        Command::Mixing => cmd_mixing(cfg, family, hash),
        Command::Certify => cmd_certify(cfg, family, hash),
        Command::Oracle => cmd_oracle(cfg, family, hash),
    }
}

fn require_format(cfg: &ExperimentConfig, allowed: &[Format]) -> Result<()> {
    if allowed.contains(&cfg.format) {
        Ok(())
    } else {
        domain(format!(
            "{:?} output is not available for this command",
            cfg.format
        ))
    }
}

fn cmd_family(cfg: &ExperimentConfig, family: &ShuffleFamily) -> Result<String> {
    require_format(cfg, &[Format::Json])?;
    let path = cfg
        .family
        .as_ref()
        .ok_or_else(|| Error::Domain("family needs --family <path> to write to".into()))?;
    let bytes = serialize_family(family);
    let hash = content_hash(&bytes);
    fs::write(path, &bytes)?;
    let header = Header {
        cfg,
        family_hash: None,
        summary: vec![],
    };
    render_json(
        &header,
        json!({
            "path": path,
            "members": family.len(),
            "alphabet_size": family.alphabet().len(),
            "bytes": bytes.len(),
            "written_family_hash": hash,
        }),
    )
}

fn pair_members<'a>(
    cfg: &ExperimentConfig,
    family: &'a ShuffleFamily,
) -> Result<(&'a crate::Semiautomaton, &'a crate::Semiautomaton)> {
    let (i, j) = cfg.pair;
    Ok((family.member(i)?, family.member(j)?))
}

fn cmd_pagree(
    cfg: &ExperimentConfig,
    family: &ShuffleFamily,
    hash: Option<&str>,
) -> Result<String> {
    require_format(cfg, &[Format::Json, Format::Csv])?;
    let (a, b) = pair_members(cfg, family)?;
    let report: AgreementReport = match cfg.method.as_str() {
        "exact" | "exact-spectral" | "spectral" => {
            p_agree_exact(a, b, cfg.t, &StdCache::new(cfg.n)?)?
        }
        "brute" | "brute-force" => p_agree_bruteforce(a, b, cfg.t, brute_limit()?)?,
        "mc" | "monte-carlo" => p_agree_montecarlo(a, b, cfg.t, cfg.samples, cfg.seed)?,
        other => {
            return domain(format!(
                "unknown pagree method {other:?} (exact | brute | mc)"
            ))
        }
    };
    let header = Header {
        cfg,
        family_hash: hash,
        summary: vec![],
    };
    match cfg.format {
        Format::Csv => {
            let mut s = header.csv_lines();
            s.push_str("T,p_agree,residual,method,stderr\n");
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                report.t,
                fmt_num(report.p_agree),
                fmt_num(report.residual),
                report.method.as_str(),
                report.stderr.map(fmt_num).unwrap_or_default()
            );
            Ok(s)
        }
        _ => render_json(&header, to_value(&report)),
    }
}

fn cmd_spectrum(
    cfg: &ExperimentConfig,
    family: &ShuffleFamily,
    hash: Option<&str>,
) -> Result<String> {
    require_format(cfg, &[Format::Json, Format::Csv])?;
    let cache = StdCache::new(cfg.n)?;
    match cfg.method.as_str() {
        "expected" => {
            let numeric = symmetric_eigenvalues(expected_operator(cfg.n, cfg.p, &cache)?.matrix())?;
            let rows: Vec<Value> = expected_spectrum_at(cfg.n, cfg.p)?
                .into_iter()
                .map(|(irrep, value, mult)| {
                    let near: Vec<f64> = numeric
                        .iter()
                        .copied()
                        .filter(|x| (x - value).abs() <= 1e-9)
                        .collect();
                    let err = near.iter().fold(0.0_f64, |m, x| m.max((x - value).abs()));
                    json!({
                        "irrep": irrep,
                        "closed_form": value,
                        "multiplicity": mult,
                        "numeric_count": near.len(),
                        "max_abs_error": err,
                    })
                })
                .collect();
            let header = Header {
                cfg,
                family_hash: hash,
                summary: vec![("source", json!("expected"))],
            };
            match cfg.format {
                Format::Csv => {
                    let mut s = header.csv_lines();
                    s.push_str("irrep,closed_form,multiplicity,numeric_count,max_abs_error\n");
                    for r in &rows {
                        let _ = writeln!(
                            s,
                            "\"{}\",{},{},{},{}",
                            r["irrep"].as_str().unwrap_or_default(),
                            fmt_num(r["closed_form"].as_f64().unwrap_or(f64::NAN)),
                            r["multiplicity"],
                            r["numeric_count"],
                            fmt_num(r["max_abs_error"].as_f64().unwrap_or(f64::NAN)),
                        );
                    }
                    Ok(s)
                }
                _ => render_json(&header, Value::Array(rows)),
            }
        }
        "realized" => {
            let (a, b) = pair_members(cfg, family)?;
            let walk = CoupledWalk::new(a, b, &cache)?;
            let eigs = symmetric_eigenvalues(walk.operator().matrix())?;
            let deviation = deviation_from_expected(walk.operator(), cfg.p, &cache)?;
            let norm = eigs.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let header = Header {
                cfg,
                family_hash: hash,
                summary: vec![
                    ("source", json!("realized")),
                    ("spectral_norm", json!(norm)),
                    ("deviation_from_expected", json!(deviation)),
                ],
            };
            match cfg.format {
                Format::Csv => {
                    let mut s = header.csv_lines();
                    s.push_str("eigenvalue,multiplicity\n");
                    for (value, mult) in cluster_eigenvalues(&eigs, 1e-9) {
                        let _ = writeln!(s, "{},{mult}", fmt_num(value));
                    }
                    Ok(s)
                }
                _ => render_json(&header, json!({ "eigenvalues": eigs })),
            }
        }
        other => domain(format!(
            "unknown spectrum source {other:?} (expected | realized)"
        )),
    }
}

fn cmd_mixing(
    cfg: &ExperimentConfig,
    family: &ShuffleFamily,
    hash: Option<&str>,
) -> Result<String> {
    require_format(cfg, &[Format::Json, Format::Csv])?;
    let (a, b) = pair_members(cfg, family)?;
    let scan = mixing_scan(a, b, cfg.t_max, &StdCache::new(cfg.n)?)?;
    let header = Header {
        cfg,
        family_hash: hash,
        summary: vec![
            ("spectral_norm", json!(scan.spectral_norm)),
            ("lambda_min", json!(scan.lambda_min)),
            ("upper_applies", json!(scan.upper_applies)),
            ("lower_applies", json!(scan.lower_applies)),
            ("violations", json!(scan.violations)),
        ],
    };
    match cfg.format {
        Format::Csv => {
            let mut s = header.csv_lines();
            s.push_str("T,p_agree,residual,upper_bound,lower_bound,method\n");
            for r in &scan.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},exact-spectral",
                    r.t,
                    fmt_num(r.p_agree),
                    fmt_num(r.residual),
                    fmt_num(r.upper_bound),
                    fmt_num(r.lower_bound),
                );
            }
            Ok(s)
        }
        _ => render_json(&header, to_value(&scan)),
    }
}

fn cmd_certify(
    cfg: &ExperimentConfig,
    family: &ShuffleFamily,
    hash: Option<&str>,
) -> Result<String> {
    require_format(cfg, &[Format::Json, Format::Csv])?;
    let cert = sq_dim_certificate(family, cfg.t, cfg.d, &StdCache::new(cfg.n)?)?;
    let header = Header {
        cfg,
        family_hash: hash,
        summary: vec![],
    };
    match cfg.format {
        Format::Csv => {
            let mut s = header.csv_lines();
            s.push_str("d,T,pairs_checked,threshold,max_abs_chi,passed\n");
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                cert.d,
                cert.t,
                cert.pairs_checked,
                fmt_num(cert.threshold),
                fmt_num(cert.max_abs_chi),
                cert.passed
            );
            Ok(s)
        }
        _ => render_json(&header, to_value(&cert)),
    }
}

/// Built-in battery: constant, parity, every start shift, then the label
/// indicator of each concept in order.
pub fn default_queries(n: usize, d: usize) -> Vec<BuiltinQuery> {
    let mut q = vec![
        BuiltinQuery::Constant { value: 0.0 },
        BuiltinQuery::Parity {},
    ];
    q.extend((0..n).map(|shift| BuiltinQuery::StartAgreement { shift }));
    q.extend((0..d).map(|reference| BuiltinQuery::LabelIndicator { reference }));
    q
}

fn cmd_oracle(
    cfg: &ExperimentConfig,
    family: &ShuffleFamily,
    hash: Option<&str>,
) -> Result<String> {
    require_format(cfg, &[Format::Jsonl])?;
    if cfg.d == 0 || cfg.d > family.len() {
        return domain(format!("d = {} must lie in 1..={}", cfg.d, family.len()));
    }
    let queries = match &cfg.queries {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str::<Vec<BuiltinQuery>>(&text)
                .map_err(|e| Error::Parse(format!("queries {}: {e}", path.display())))?
        }
        None => default_queries(cfg.n, cfg.d),
    };
    let mut session = OracleSession::new(family.members()[..cfg.d].to_vec(), cfg.t, cfg.tau)?
        .with_sampling(cfg.samples, cfg.seed);
    let header = Header {
        cfg,
        family_hash: hash,
        summary: vec![
            ("exact", json!(session.is_exact())),
            (
                "support_size",
                json!(session.distribution().support_size().to_string()),
            ),
        ],
    };
    let line = |v: Value| -> Result<String> {
        serde_json::to_string(&v).map_err(|e| Error::Parse(e.to_string()))
    };
    let mut out = line(json!({ "header": header.json() }))? + "\n";
    for q in &queries {
        session.ask(q)?;
    }
    for entry in session.ledger() {
        out += &line(to_value(&entry.transcript()))?;
        out.push('\n');
    }
    let y = cfg.n;
    out += &line(json!({
        "summary": {
            "queries": session.ledger().len(),
            "survivors": session.survivor_ids(),
            "query_lower_bound": query_lower_bound(cfg.d, cfg.tau, y)?,
            "elimination_bound": elimination_bound(cfg.d, cfg.tau, y),
        }
    }))?;
    out.push('\n');
    Ok(out)
}

fn unix_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Parses, resolves, executes and writes output. Returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            report_error("usage", &e.to_string());
            return 2;
        }
    };
    match run_parsed(cli) {
        Ok(()) => 0,
        Err(e) => {
            report_error(e.kind(), &e.to_string());
            1
        }
    }
}

fn report_error(kind: &str, message: &str) {
    let err = json!({ "error": { "kind": kind, "message": message.trim_end() } });
    let _ = writeln!(io::stderr(), "{err}");
}

fn run_parsed(cli: Cli) -> Result<()> {
    let started = unix_seconds();
    let clock = Instant::now();
    let (cfg, loaded) = ExperimentConfig::resolve(cli.command, cli.flags)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cfg.jobs {
        pool = pool.num_threads(jobs);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    let output = pool.install(|| execute(&cfg, loaded.as_ref()))?;

    let meta = json!({
        "tool": "sqsa",
        "version": VERSION,
        "command": cfg.command,
        "wall_clock_unix": started,
        "elapsed_seconds": clock.elapsed().as_secs_f64(),
        "jobs": pool.current_num_threads(),
    });
    match &cfg.out {
        Some(path) => {
            if cfg.family.as_deref() == Some(path.as_path()) {
                return domain("--out must differ from the --family path");
            }
            fs::write(path, output.as_bytes())?;
            let mut meta_path = path.clone().into_os_string();
            meta_path.push(".meta.json");
            fs::write(meta_path, format!("{meta:#}\n"))?;
        }
        None => {
            io::stdout().write_all(output.as_bytes())?;
            let _ = writeln!(io::stderr(), "{}", json!({ "meta": meta }));
        }
    }
    Ok(())
}
