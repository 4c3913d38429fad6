//! Command-line front end: `gen`, `evolve`, `score`, `classify`, `paraproduct`, `lemmas`, `report`.
//!
//! Parameters come from a `key = value` config file (`--config`) and `--set key=value`
//! overrides; unknown keys are usage errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::extraction::{self, delta_sup, min_lambda, sup_scan, ScoreScan, Z_STRIDE};
use crate::field::ScalarFieldRZ;
use crate::grid::HalfPlaneGrid;
use crate::io;
use crate::lemmas::{self, LemmaCheckResult, Status, SuiteConfig, Tier};
use crate::packets::{classify, detect_packets, window_cover, ClassifyParams, CoverParams};
use crate::paraproduct::{analyze, AnalysisConfig, ParaproductReport};
use crate::recipes::{self, Recipe, RecipeParams};
use crate::report::{Check, Report};
use crate::solver::{self, RunConfig, RunLog};
use crate::spectral::{DyadicPartition, LittlewoodPaley, Profile, SpectralPlan};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "swirl5d", version, about = "Lifted 5D diagnostics for axisymmetric flows with swirl")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// `key = value` parameter file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// RNG seed; overrides `seed` from the config file
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the JSON report on stdout instead of a summary.
    #[arg(long, global = true)]
    pub json: bool,
    /// Override one config key, e.g. `--set nr=128`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an initial-data field to `<out>/<name>.swrl`.
    Gen {
        #[arg(long, default_value = "gaussian")]
        recipe: String,
        /// Thin-ring width over radius.
        #[arg(long)]
        ratio: Option<f64>,
        /// Number of dyadic shells for `diffuse`.
        #[arg(long)]
        shells: Option<i32>,
        #[arg(long, default_value = "field")]
        name: String,
    },
    /// Run the solver and write snapshots, `run.json` and `run.csv`.
    Evolve,
    /// Extraction-score scan of one field.
    Score {
        input: PathBuf,
        /// Stored field name, `G` or `gamma`
        #[arg(long, default_value = "G")]
        field: String,
    },
    /// Packet detection, branch labels and the window cover.
    Classify {
        input: PathBuf,
        /// Stored field name, `G` or `gamma`
        #[arg(long, default_value = "G")]
        field: String,
    },
    /// Bony decomposition over the singular range and the bound audit.
    Paraproduct {
        input: PathBuf,
        /// Stored field name, `G` or `gamma`
        #[arg(long, default_value = "G")]
        field: String,
    },
    /// Run the lemma-check suite.
    Lemmas {
        /// Restrict to these ids.
        #[arg(long = "only", value_delimiter = ',')]
        only: Vec<String>,
    },
    /// Merge JSON reports into `bundle.json` plus CSV tables.
    Report { inputs: Vec<PathBuf> },
}

/// Parsed `key = value` parameters; every key must be consumed by the command.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            kv.insert_pair(line).map_err(|_| Error::InvalidParameter(format!("config line {}: expected key = value", n + 1)))?;
        }
        Ok(kv)
    }

    fn insert_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got {pair:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::InvalidParameter(format!("empty key in {pair:?}")));
        }
        self.entries.insert(k.to_ascii_lowercase(), v.to_string());
        Ok(())
    }

    /// Removes and parses `key`, or returns `default`.
    pub fn take<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.entries.remove(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::InvalidParameter(format!("{key} = {v:?} is not valid"))),
        }
    }

    pub fn take_opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Error::InvalidParameter(format!("{key} = {v:?} is not valid"))),
        }
    }

    /// Fails on any key nobody consumed.
    pub fn finish(self) -> Result<()> {
        if self.entries.is_empty() {
            Ok(())
        } else {
            let keys: Vec<&str> = self.entries.keys().map(String::as_str).collect();
            Err(Error::InvalidParameter(format!("unknown config keys: {}", keys.join(", "))))
        }
    }
}

fn load_config(global: &Global) -> Result<KeyValues> {
    let mut kv = match &global.config {
        Some(path) => KeyValues::parse(&std::fs::read_to_string(path)?)?,
        None => KeyValues::default(),
    };
    for pair in &global.set {
        kv.insert_pair(pair)?;
    }
    if let Some(seed) = global.seed {
        kv.entries.insert("seed".into(), seed.to_string());
    }
    Ok(kv)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must be positive")))
    }
}

fn unit_interval(name: &str, v: f64) -> Result<f64> {
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must lie in [0, 1)")))
    }
}

/// Grid keys shared by `gen` and `evolve`: `nr`, `nz`, `r_max`, `l_z`.
fn take_grid(kv: &mut KeyValues, d: (usize, usize, f64, f64)) -> Result<(usize, usize, f64, f64)> {
    Ok((kv.take("nr", d.0)?, kv.take("nz", d.1)?, positive("r_max", kv.take("r_max", d.2)?)?, positive("l_z", kv.take("l_z", d.3)?)?))
}

fn take_recipe(kv: &mut KeyValues, base: RecipeParams) -> Result<RecipeParams> {
    let p = RecipeParams {
        amplitude: kv.take("amplitude", base.amplitude)?,
        width: positive("width", kv.take("width", base.width)?)?,
        radius: positive("radius", kv.take("radius", base.radius)?)?,
        separation: kv.take("separation", base.separation)?,
        shells: kv.take("shells", base.shells)?,
        swirl: kv.take("swirl", base.swirl)?,
    };
    if p.shells < 1 {
        return Err(Error::InvalidParameter(format!("shells = {} must be at least 1", p.shells)));
    }
    Ok(p)
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Cfl { .. } | Error::NonFinite { .. } => EXIT_NUMERIC,
        Error::Regime(_) => EXIT_CHECK,
        _ => EXIT_USAGE,
    }
}

/// What a command produced: the JSON report, a human summary and the exit code.
pub struct Outcome {
    pub report: Report,
    pub summary: String,
    pub code: i32,
}

fn outcome(report: Report, summary: String) -> Outcome {
    let code = if report.all_pass() { EXIT_OK } else { EXIT_CHECK };
    Outcome { report, summary, code }
}

/// Parses `args` (including the program name), runs, prints and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.global.threads {
        // A pool that already exists (e.g. under a test harness) is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match execute(&cli) {
        Ok(out) => {
            if cli.global.json {
                match out.report.to_json() {
                    Ok(text) => println!("{text}"),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return EXIT_USAGE;
                    }
                }
            } else {
                print!("{}", out.summary);
            }
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command, writing its files under `--out`.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let mut kv = load_config(&cli.global)?;
    std::fs::create_dir_all(&cli.global.out)?;
    let out = cli.global.out.as_path();
    let result = match &cli.command {
        Command::Gen { recipe, ratio, shells, name } => cmd_gen(&mut kv, out, recipe, *ratio, *shells, name),
        Command::Evolve => cmd_evolve(&mut kv, out),
        Command::Score { input, field } => cmd_score(&mut kv, out, input, field),
        Command::Classify { input, field } => cmd_classify(&mut kv, out, input, field),
        Command::Paraproduct { input, field } => cmd_paraproduct(&mut kv, out, input, field),
        Command::Lemmas { only } => cmd_lemmas(&mut kv, out, only),
        Command::Report { inputs } => cmd_report(&mut kv, out, inputs),
    }?;
    kv.finish()?;
    Ok(result)
}

fn write_report(out: &Path, name: &str, report: &Report) -> Result<PathBuf> {
    let path = out.join(name);
    io::atomic_write(&path, report.to_json()?.as_bytes())?;
    Ok(path)
}

fn write_csv(out: &Path, name: &str, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    io::atomic_write(&out.join(name), text.as_bytes())
}

fn read_field(input: &Path, field: &str) -> Result<(ScalarFieldRZ, f64)> {
    let bundle = io::read_fields(input)?;
    let f = bundle
        .get(field)
        .cloned()
        .ok_or_else(|| {
            let names: Vec<&str> = bundle.fields.iter().map(|(n, _)| n.as_str()).collect();
            Error::InvalidParameter(format!("{} has no field {field:?} (has {})", input.display(), names.join(", ")))
        })?;
    Ok((f, bundle.time))
}

/// Largest `k` in `[lo, hi]` whose balls are resolvable on `grid`.
fn resolvable(grid: &HalfPlaneGrid, lo: i32, hi: i32) -> i32 {
    let floor = min_lambda(grid);
    (lo..=hi).rev().find(|&k| 2f64.powi(-k) >= floor).unwrap_or(lo)
}

pub fn cmd_gen(kv: &mut KeyValues, out: &Path, recipe: &str, ratio: Option<f64>, shells: Option<i32>, name: &str) -> Result<Outcome> {
    let recipe: Recipe = recipe.parse()?;
    let (nr, nz, r_max, l_z) = take_grid(kv, (128, 128, 6.0, 4.0))?;
    let seed = kv.take("seed", 0u64)?;
    let mut params = take_recipe(kv, RecipeParams::default())?;
    if let Some(s) = shells {
        params.shells = s.max(1);
    }
    if let Some(r) = ratio {
        params.width = positive("ratio", r)? * params.radius;
    }
    let plan = SpectralPlan::new(HalfPlaneGrid::new(nr, nz, r_max, l_z)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = recipes::build(&plan, recipe, &params, &mut rng)?;
    let file = out.join(format!("{name}.swrl"));
    io::write_fields(&file, 0.0, &[("gamma", &data.gamma), ("G", &data.g)])?;
    let grid = plan.grid();
    let k_hi = resolvable(grid, 0, 6);
    let delta = delta_sup(&data.g, (0, k_hi))?;
    let mut report = Report::new(json!({
        "command": "gen", "recipe": recipe, "params": params, "seed": seed,
        "grid": {"nr": nr, "nz": nz, "r_max": r_max, "l_z": l_z},
    }))
    .with_results(json!({"file": file.file_name().and_then(|f| f.to_str()), "delta": delta}));
    report.push(Check::report_only("delta", delta.delta));
    report.push(Check::report_only("mass_mu5", data.g.norm_mu5().powi(2)));
    write_report(out, &format!("{name}.json"), &report)?;
    let summary = format!("wrote {} (δ = {:.4e} over k ∈ [0, {k_hi}])\n", file.display(), delta.delta);
    Ok(outcome(report, summary))
}

pub fn take_run_config(kv: &mut KeyValues) -> Result<RunConfig> {
    let d = RunConfig::default();
    let (nr, nz, r_max, l_z) = take_grid(kv, (d.nr, d.nz, d.r_max, d.l_z))?;
    let cfg = RunConfig {
        nr,
        nz,
        r_max,
        l_z,
        dt: positive("dt", kv.take("dt", d.dt)?)?,
        t_end: kv.take("t_end", d.t_end)?,
        snapshot_every: kv.take("snapshot_every", d.snapshot_every)?,
        initial: kv.take("initial", d.initial)?,
        recipe: take_recipe(kv, d.recipe)?,
        seed: kv.take("seed", d.seed)?,
        scan: kv.take("scan", d.scan)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Acceptance checks on a run log: divergence residual and the `Γ` maximum principle.
pub fn run_checks(log: &RunLog) -> Vec<Check> {
    let div = log.snapshots.iter().map(|s| s.divergence_residual).fold(0.0, f64::max);
    let growth = log
        .snapshots
        .windows(2)
        .map(|w| (w[1].gamma_max - w[0].gamma_max) / w[0].gamma_max.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    vec![
        Check::at_most("max_divergence_residual", div, 1e-6),
        Check::at_most("max_gamma_growth", growth, 1e-6),
        Check::report_only("snapshots", log.snapshots.len() as f64),
    ]
}

pub fn cmd_evolve(kv: &mut KeyValues, out: &Path) -> Result<Outcome> {
    let cfg = take_run_config(kv)?;
    let (log, state) = solver::run(&cfg, Some(out))?;
    let mut report = Report::new(json!({"command": "evolve", "config": cfg})).with_results(serde_json::to_value(&log)?);
    for c in run_checks(&log) {
        report.push(c);
    }
    write_report(out, "run.json", &report)?;
    let rows: Vec<String> = log
        .snapshots
        .iter()
        .map(|s| {
            let (l, z, q) = s.q_star.map_or((f64::NAN, f64::NAN, f64::NAN), |q| q);
            format!(
                "{},{:.9e},{:.9e},{:.9e},{:.9e},{:.3e},{:.9e},{:.9e},{:.9e}",
                s.index, s.time, s.energy, s.dissipation, s.gamma_max, s.divergence_residual, l, z, q
            )
        })
        .collect();
    write_csv(out, "run.csv", "index,time,energy,dissipation,gamma_max,divergence_residual,lambda_star,z_star,q_star", &rows)?;
    let mut summary = format!("{} snapshots to t = {:.4e}\n", log.snapshots.len(), state.time);
    if let Some(e) = &log.error {
        let _ = writeln!(summary, "stopped early: {e}");
        return Ok(Outcome { report, summary, code: EXIT_NUMERIC });
    }
    Ok(outcome(report, summary))
}

pub fn cmd_score(kv: &mut KeyValues, out: &Path, input: &Path, field: &str) -> Result<Outcome> {
    let (g, time) = read_field(input, field)?;
    let grid = g.grid().clone();
    let lambda_min = kv.take("lambda_min", min_lambda(&grid))?;
    let lambda_max = kv.take("lambda_max", grid.r_max().min(grid.z_extent()) / 2.0)?;
    let stride = positive("z_stride", kv.take("z_stride", Z_STRIDE)?)?;
    let scan: ScoreScan = sup_scan(&g, (lambda_min, lambda_max), stride)?;
    let (l, z, q) = scan.argmax;
    let mut report = Report::new(json!({
        "command": "score", "input": input, "field": field, "time": time,
        "lambda_range": [lambda_min, lambda_max], "z_stride": stride,
    }))
    .with_results(json!({"lambda_star": l, "z_star": z, "q_star": q, "lambdas": scan.lambdas}));
    report.push(Check::report_only("q_star", q));
    write_report(out, "score.json", &report)?;
    let mut rows = Vec::new();
    for (i, lam) in scan.lambdas.iter().enumerate() {
        for (z0, s) in scan.centers[i].iter().zip(&scan.scores[i]) {
            rows.push(format!("{lam:.9e},{z0:.9e},{s:.9e}"));
        }
    }
    write_csv(out, "score.csv", "lambda,z0,q", &rows)?;
    Ok(outcome(report, format!("Q* = {q:.6e} at λ = {l:.4e}, z₀ = {z:.4e}\n")))
}

pub fn cmd_classify(kv: &mut KeyValues, out: &Path, input: &Path, field: &str) -> Result<Outcome> {
    let (g, time) = read_field(input, field)?;
    let quantile = unit_interval("quantile", kv.take("quantile", 0.5)?)?;
    let d = ClassifyParams::default();
    let params = ClassifyParams {
        eta: unit_interval("eta", kv.take("eta", d.eta)?)?,
        c0: positive("c0", kv.take("c0", d.c0)?)?,
        aspect_max: positive("aspect_max", kv.take("aspect_max", d.aspect_max)?)?,
        k: kv.take_opt("k")?,
    };
    let cover_params = CoverParams { n0: kv.take("n0", CoverParams::default().n0)?, ..CoverParams::default() };
    let scan = extraction::sup_scan_default(&g).ok();
    let packets = detect_packets(&g, quantile)?;
    let mut listed = Vec::new();
    let mut summary = String::new();
    for p in &packets {
        let label = classify(p, &g, &params, scan.as_ref());
        listed.push(json!({
            "center": [p.center.0, p.center.1], "lambda": p.lambda, "mass": p.mass,
            "label": label, "eta_measured": p.eta_measured,
        }));
        let _ = writeln!(summary, "packet at (r, z) = ({:.4}, {:.4}), λ = {:.4e}: {}", p.center.0, p.center.1, p.lambda, label.as_str());
    }
    let cover = match packets.first() {
        Some(p) => {
            let k = params.k.unwrap_or_else(|| (cover_params.proximal_factor / p.max_radius(&g)).log2().floor() as i32);
            match window_cover(p, &g, k, &cover_params) {
                Ok(c) => json!({"k": c.k, "J": c.indices}),
                Err(Error::Regime(msg)) => {
                    let _ = writeln!(summary, "no window cover: {msg}");
                    Value::Null
                }
                Err(e) => return Err(e),
            }
        }
        None => Value::Null,
    };
    let mut report = Report::new(json!({"command": "classify", "input": input, "field": field, "time": time, "quantile": quantile, "params": params}))
        .with_results(json!({"packets": listed, "cover": cover}));
    report.push(Check::report_only("packets", packets.len() as f64));
    if let Some(n) = cover.get("J").and_then(Value::as_array).map(Vec::len) {
        report.push(Check::at_most("window_len", n as f64, cover_params.n0 as f64));
    }
    write_report(out, "classify.json", &report)?;
    Ok(outcome(report, summary))
}

pub fn cmd_paraproduct(kv: &mut KeyValues, out: &Path, input: &Path, field: &str) -> Result<Outcome> {
    let (g, time) = read_field(input, field)?;
    let grid = g.grid().clone();
    let k_min = kv.take("k_min", 0)?;
    let k_max = kv.take("k_max", resolvable(&grid, k_min, k_min + 3))?;
    let cfg = AnalysisConfig {
        k_range: (k_min, k_max),
        n0: kv.take("n0", 8usize)?,
        fitted_c: positive("fitted_c", kv.take("fitted_c", 1.0)?)?,
    };
    let lp = partition_for(&grid, kv, cfg.k_range)?;
    let report_pp: ParaproductReport = analyze(&lp, &g, &cfg)?;
    let mut report = Report::new(json!({"command": "paraproduct", "input": input, "field": field, "time": time, "config": cfg}))
        .with_results(serde_json::to_value(&report_pp)?);
    report.push(Check { name: "audit_bound".into(), value: report_pp.margin, bound: Some(0.0), pass: report_pp.bound_pass });
    report.push(Check::report_only("normalized_nonlinearity", report_pp.normalized_nonlinearity()));
    write_report(out, "paraproduct.json", &report)?;
    write_csv(out, "paraproduct.csv", "k,D_k,I_LH,I_HL,I_HH", &spectrum_rows(&report_pp))?;
    let summary = format!(
        "δ = {:.4e}, |N|/D_crit = {:.4e}, audit {} (margin {:.4e})\n",
        report_pp.delta,
        report_pp.normalized_nonlinearity(),
        if report_pp.bound_pass { "holds" } else { "FAILS" },
        report_pp.margin
    );
    Ok(outcome(report, summary))
}

fn partition_for(grid: &Arc<HalfPlaneGrid>, kv: &mut KeyValues, k_range: (i32, i32)) -> Result<LittlewoodPaley> {
    let lo = kv.take("partition_min", k_range.0 - 2)?;
    let hi = kv.take("partition_max", k_range.1 + 3)?;
    Ok(LittlewoodPaley::new(SpectralPlan::new(grid.clone())?, DyadicPartition::new(lo, hi)?))
}

fn spectrum_rows(r: &ParaproductReport) -> Vec<String> {
    r.d.iter()
        .map(|(k, d)| format!("{k},{d:.9e},{:.9e},{:.9e},{:.9e}", r.i_lh[k], r.i_hl[k], r.i_hh[k]))
        .collect()
}

pub fn take_suite_config(kv: &mut KeyValues) -> Result<SuiteConfig> {
    let d = SuiteConfig::default();
    let detune: Option<f64> = kv.take_opt("detune")?;
    Ok(SuiteConfig {
        seed: kv.take("seed", d.seed)?,
        k_shift: kv.take("k_shift", d.k_shift)?,
        profile: match detune {
            Some(r) => Profile::Detuned { inner_ratio: positive("detune", r)? },
            None => d.profile,
        },
        n0: kv.take("n0", d.n0)?,
        eta: unit_interval("eta", kv.take("eta", d.eta)?)?,
        c0: positive("c0", kv.take("c0", d.c0)?)?,
    })
}

fn lemma_check(r: &LemmaCheckResult) -> Check {
    let failed = r.checks.iter().filter(|c| !c.pass).count() as f64;
    match r.tier {
        Tier::Trend => Check::report_only(r.id.clone(), failed),
        _ => Check { name: r.id.clone(), value: failed, bound: Some(0.0), pass: r.status != Status::Fail },
    }
}

pub fn cmd_lemmas(kv: &mut KeyValues, out: &Path, only: &[String]) -> Result<Outcome> {
    let cfg = take_suite_config(kv)?;
    let results = if only.is_empty() {
        lemmas::run_suite(&cfg)?
    } else {
        only.iter().map(|id| lemmas::run_check(id, &cfg)).collect::<Result<Vec<_>>>()?
    };
    let mut report = Report::new(json!({"command": "lemmas", "config": cfg})).with_results(serde_json::to_value(&results)?);
    for r in &results {
        report.push(lemma_check(r));
    }
    write_report(out, "lemmas.json", &report)?;
    let code = if lemmas::failures(&results) > 0 { EXIT_CHECK } else { EXIT_OK };
    Ok(Outcome { report, summary: lemmas::table(&results), code })
}

/// One merged input: its run id (file stem) and report.
fn run_id(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
    match path.parent().and_then(Path::file_name).and_then(|s| s.to_str()) {
        Some(dir) if !dir.is_empty() => format!("{dir}/{stem}"),
        _ => stem.to_string(),
    }
}

pub fn cmd_report(_kv: &mut KeyValues, out: &Path, inputs: &[PathBuf]) -> Result<Outcome> {
    let mut runs = Vec::new();
    let mut checks = Vec::new();
    let (mut qstar, mut spectra, mut psi) = (Vec::new(), Vec::new(), Vec::new());
    for path in inputs {
        let report = Report::from_json(&std::fs::read_to_string(path)?)?;
        let id = run_id(path);
        let command = report.inputs.get("command").and_then(Value::as_str).unwrap_or("unknown").to_string();
        for c in &report.checks {
            checks.push(Check { name: format!("{id}:{}", c.name), ..c.clone() });
        }
        match command.as_str() {
            "evolve" => {
                let log: RunLog = serde_json::from_value(report.results.clone())?;
                for s in &log.snapshots {
                    if let Some((l, z, q)) = s.q_star {
                        qstar.push(format!("{id},{:.9e},{l:.9e},{z:.9e},{q:.9e}", s.time));
                    }
                }
            }
            "paraproduct" => {
                let pp: ParaproductReport = serde_json::from_value(report.results.clone())?;
                for row in spectrum_rows(&pp) {
                    spectra.push(format!("{id},{row}"));
                }
                psi.push((pp.delta, format!("{id},{:.9e},{:.9e},{:.9e}", pp.delta, pp.psi, pp.normalized_nonlinearity())));
            }
            _ => {}
        }
        runs.push(json!({"id": id, "command": command, "report": report}));
    }
    psi.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut bundle = Report::new(json!({"command": "report", "inputs": inputs})).with_results(json!({"runs": runs}));
    bundle.checks = checks;
    write_report(out, "bundle.json", &bundle)?;
    write_csv(out, "qstar.csv", "run,time,lambda_star,z_star,q_star", &qstar)?;
    write_csv(out, "spectra.csv", "run,k,D_k,I_LH,I_HL,I_HH", &spectra)?;
    write_csv(out, "psi.csv", "run,delta,psi,n_over_dcrit", &psi.into_iter().map(|p| p.1).collect::<Vec<_>>())?;
    let summary = format!("merged {} reports into {}\n", inputs.len(), out.join("bundle.json").display());
    Ok(Outcome { report: bundle, summary, code: EXIT_OK })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values_parse_and_reject_leftovers() {
        let mut kv = KeyValues::parse("# grid\nnr = 32\nR_max=3.5 # radius\n\n").unwrap();
        assert_eq!(kv.take("nr", 0usize).unwrap(), 32);
        assert_eq!(kv.take("r_max", 0.0).unwrap(), 3.5);
        assert_eq!(kv.take("nz", 7usize).unwrap(), 7);
        kv.finish().unwrap();
        let mut kv = KeyValues::parse("nr = lots\nextra = 1").unwrap();
        assert!(kv.take("nr", 0usize).is_err());
        assert!(kv.finish().is_err());
        assert!(KeyValues::parse("no equals sign").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Cfl { courant: 1.0, limit: 0.5 }), EXIT_NUMERIC);
        assert_eq!(exit_code(&Error::NonFinite { time: 0.0 }), EXIT_NUMERIC);
        assert_eq!(exit_code(&Error::InvalidParameter("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&Error::Regime("x".into())), EXIT_CHECK);
        assert_eq!(run_from(["swirl5d", "frobnicate"]), EXIT_USAGE);
    }
}
