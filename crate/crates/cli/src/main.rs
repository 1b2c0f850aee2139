mod cache;
mod lmfdb;

use std::collections::HashMap;
use std::io::{self, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gl3eis::classify::{classify_level, good_primes, FixtureKind, FixtureStore, Fixtures, LevelReport, SummaryRow, Verdict};
use gl3eis::complex::{CycleBasis, VoronoiComplexLevel};
use gl3eis::eisenstein::{ideals_up_to, EisIdeal, HnfLabel};
use gl3eis::hecke::{eigensystems, hecke_matrix, EigenClass, HeckeMatrix};

use cache::Cache;

/// Largest level norm accepted without `--allow-large`.
const NORM_GUARD: u64 = 1000;

const EXIT_PARTIAL: u8 = 2;
const EXIT_INVALID: u8 = 3;

#[derive(Parser)]
#[command(name = "gl3eis", version, about = "Cohomology and Hecke eigensystems of Γ₀(n) ⊂ GL₃ over the Eisenstein integers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List level labels up to complex conjugation.
    Levels(LevelsArgs),
    /// Dimension of the cuspidal range cohomology at each level.
    Cohomology(JobArgs),
    /// Hecke eigensystems and their Hecke polynomials.
    Hecke(JobArgs),
    /// Classify eigensystems and print the per-level summary.
    Classify(ClassifyArgs),
    /// Fetch a fixture record into the cache and print it.
    Fetch(FetchArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Table,
}

#[derive(Args)]
struct LevelsArgs {
    #[arg(long)]
    max_norm: u64,
    #[arg(long, default_value_t = 1)]
    min_norm: u64,
    /// Keep both members of each conjugate pair.
    #[arg(long)]
    all: bool,
    #[arg(long)]
    allow_large: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct JobArgs {
    /// Level as "[N,c,d]"; repeatable.
    #[arg(long = "level")]
    levels: Vec<String>,
    /// Every level of norm in [min-norm, max-norm], up to conjugation.
    #[arg(long)]
    max_norm: Option<u64>,
    #[arg(long, default_value_t = 1)]
    min_norm: u64,
    /// Use good primes of norm at most this.
    #[arg(long, default_value_t = 31)]
    prime_bound: u64,
    /// Levels computed in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Reduction steps allowed per cycle.
    #[arg(long, default_value_t = 200)]
    budget: usize,
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Never touch the network.
    #[arg(long)]
    offline: bool,
    /// Lift the norm guard.
    #[arg(long)]
    allow_large: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    job: JobArgs,
    /// Emit one CSV row per eigenclass instead of the level summary.
    #[arg(long)]
    verdicts: bool,
}

#[derive(Copy, Clone, ValueEnum)]
enum KindArg {
    Curve,
    Bianchi,
}

#[derive(Args)]
struct FetchArgs {
    #[arg(value_enum)]
    kind: KindArg,
    /// Label within the field, e.g. 73.1-a3.
    label: String,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    offline: bool,
}

struct Invalid(String);

fn invalid(msg: impl ToString) -> Invalid {
    Invalid(msg.to_string())
}

/// Levels with norm in `[lo, hi]`, keeping the smaller label of each
/// conjugate pair unless `all`.
fn levels_in_range(lo: u64, hi: u64, all: bool) -> Vec<EisIdeal> {
    let mut out: Vec<EisIdeal> = ideals_up_to(hi)
        .into_iter()
        .filter(|l| l.norm() >= lo && (all || l.label() <= l.conjugate().label()))
        .collect();
    out.sort_by_key(|l| l.label());
    out
}

fn select_levels(a: &JobArgs) -> Result<Vec<EisIdeal>, Invalid> {
    if a.levels.is_empty() && a.max_norm.is_none() {
        return Err(invalid("give --level or --max-norm"));
    }
    if a.budget == 0 {
        return Err(invalid("--budget must be at least 1"));
    }
    if a.jobs == 0 {
        return Err(invalid("--jobs must be at least 1"));
    }
    let mut out = Vec::new();
    for s in &a.levels {
        let label: HnfLabel = s.parse().map_err(invalid)?;
        out.push(EisIdeal::from_label(label).map_err(invalid)?);
    }
    if !a.allow_large {
        if let Some(l) = out.iter().find(|l| l.norm() > NORM_GUARD) {
            return Err(invalid(format!("level {} exceeds norm {NORM_GUARD}; pass --allow-large", l.label())));
        }
        if a.max_norm.is_some_and(|m| m > NORM_GUARD) {
            return Err(invalid(format!("--max-norm exceeds {NORM_GUARD}; pass --allow-large")));
        }
    }
    if let Some(max) = a.max_norm {
        out.extend(levels_in_range(a.min_norm, max, false));
    }
    out.sort_by_key(|l| l.label());
    out.dedup();
    Ok(out)
}

/// Runs `f` on every level over `jobs` threads; results come back in input
/// order and a panic only fails its own level.
fn run_parallel<T: Send>(levels: &[EisIdeal], jobs: usize, f: impl Fn(&EisIdeal) -> Result<T, String> + Sync) -> Vec<Result<T, String>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<T, String>>>> = levels.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, levels.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= levels.len() {
                    break;
                }
                let r = catch_unwind(AssertUnwindSafe(|| f(&levels[i]))).unwrap_or_else(|e| {
                    let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                    Err(format!("panicked: {}", msg.unwrap_or_default()))
                });
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().unwrap().expect("every slot filled")).collect()
}

struct LevelData {
    dim: usize,
    classes: Vec<EigenClass>,
}

/// Per-level computations shared by the subcommands, memoized in memory and
/// optionally on disk.
struct Engine {
    prime_bound: u64,
    budget: usize,
    cache: Option<Cache>,
    fixtures: Fixtures,
    data: Mutex<HashMap<HnfLabel, Arc<LevelData>>>,
    reports: Mutex<HashMap<HnfLabel, Arc<LevelReport>>>,
}

/// The complex and its cycle basis, built on first use.
struct Lazy {
    level: EisIdeal,
    built: Option<(VoronoiComplexLevel, Option<CycleBasis>)>,
}

impl Lazy {
    fn complex(&mut self) -> &VoronoiComplexLevel {
        &self.built.get_or_insert_with(|| (VoronoiComplexLevel::build(self.level), None)).0
    }

    fn basis(&mut self) -> Result<(&VoronoiComplexLevel, &CycleBasis), String> {
        self.complex();
        let (cx, cb) = self.built.as_mut().expect("built");
        if cb.is_none() {
            *cb = Some(cx.cycle_basis().map_err(|e| e.to_string())?);
        }
        Ok((cx, cb.as_ref().expect("set")))
    }
}

impl Engine {
    fn new(a: &JobArgs, fixtures: Fixtures) -> Self {
        Engine {
            prime_bound: a.prime_bound,
            budget: a.budget,
            cache: a.cache.clone().map(Cache::new),
            fixtures,
            data: Mutex::new(HashMap::new()),
            reports: Mutex::new(HashMap::new()),
        }
    }

    fn cache_warn(&self, e: io::Error) {
        eprintln!("warning: cache write failed: {e}");
    }

    fn dimension(&self, level: &EisIdeal, lazy: &mut Lazy) -> Result<usize, String> {
        let label = level.label();
        if let Some(d) = self.cache.as_ref().and_then(|c| c.cohomology(label)) {
            return Ok(d);
        }
        let d = lazy.complex().homology_dim().map_err(|e| e.to_string())?;
        if let Some(c) = &self.cache {
            c.put_cohomology(label, d).unwrap_or_else(|e| self.cache_warn(e));
        }
        Ok(d)
    }

    fn cohomology(&self, level: &EisIdeal) -> Result<usize, String> {
        self.dimension(level, &mut Lazy { level: *level, built: None })
    }

    fn level_data(&self, level: &EisIdeal) -> Result<Arc<LevelData>, String> {
        let label = level.label();
        if let Some(d) = self.data.lock().unwrap().get(&label) {
            return Ok(d.clone());
        }
        let mut lazy = Lazy { level: *level, built: None };
        let dim = self.dimension(level, &mut lazy)?;
        let mut classes = Vec::new();
        if dim > 0 {
            let mut matrices = Vec::new();
            for p in good_primes(level, self.prime_bound) {
                for k in 1..=2u8 {
                    let plabel = p.label();
                    let cached = self.cache.as_ref().and_then(|c| c.hecke(label, plabel, k));
                    let m = match cached {
                        Some(matrix) if matrix.rows == dim => HeckeMatrix { level: label, prime: p, k, matrix, traces: Vec::new() },
                        _ => {
                            let (cx, cb) = lazy.basis()?;
                            let m = hecke_matrix(cx, cb, &p, k, self.budget, 1).map_err(|e| format!("T({plabel},{k}): {e}"))?;
                            if let Some(t) = m.traces.iter().find(|t| !t.strictly_decreasing()) {
                                eprintln!("warning: level {label} T({plabel},{k}): reduction not strictly decreasing, sizes {:?}", t.sizes);
                            }
                            if let Some(c) = &self.cache {
                                c.put_hecke(label, plabel, k, &m.matrix).unwrap_or_else(|e| self.cache_warn(e));
                            }
                            m
                        }
                    };
                    matrices.push(m);
                }
            }
            classes = eigensystems(&matrices).map_err(|e| e.to_string())?;
        }
        let d = Arc::new(LevelData { dim, classes });
        self.data.lock().unwrap().insert(label, d.clone());
        Ok(d)
    }

    /// Classifies `level`, first classifying every proper divisor carrying
    /// cohomology so that old classes can be recognized.
    fn report(&self, level: &EisIdeal) -> Result<Arc<LevelReport>, String> {
        let label = level.label();
        if let Some(r) = self.reports.lock().unwrap().get(&label) {
            return Ok(r.clone());
        }
        let data = self.level_data(level)?;
        let mut old_sources = Vec::new();
        if data.dim > 0 {
            for m in level.divisors() {
                if m == *level || m.norm() == 1 || self.cohomology(&m)? == 0 {
                    continue;
                }
                let md = self.level_data(&m).map_err(|e| format!("divisor {}: {e}", m.label()))?;
                let mr = self.report(&m)?;
                for (c, v) in md.classes.iter().zip(&mr.classifications) {
                    if !matches!(v.verdict, Verdict::Old { .. }) {
                        old_sources.push(c.clone());
                    }
                }
            }
        }
        let r = Arc::new(classify_level(level, &data.classes, &self.fixtures, &old_sources));
        self.reports.lock().unwrap().insert(label, r.clone());
        Ok(r)
    }
}

/// Writes successful results in order and reports failures on stderr.
fn finish<T>(levels: &[EisIdeal], results: Vec<Result<T, String>>, mut emit: impl FnMut(&EisIdeal, &T) -> io::Result<()>) -> io::Result<ExitCode> {
    let mut failed = 0;
    for (l, r) in levels.iter().zip(results) {
        match r {
            Ok(v) => emit(l, &v)?,
            Err(e) => {
                failed += 1;
                eprintln!("error: level {}: {e}", l.label());
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} of {} levels failed", levels.len());
        return Ok(ExitCode::from(EXIT_PARTIAL));
    }
    Ok(ExitCode::SUCCESS)
}

fn csv_writer() -> csv::Writer<io::Stdout> {
    csv::WriterBuilder::new().from_writer(io::stdout())
}

fn cmd_levels(a: &LevelsArgs) -> Result<ExitCode, Invalid> {
    if a.max_norm > NORM_GUARD && !a.allow_large {
        return Err(invalid(format!("--max-norm exceeds {NORM_GUARD}; pass --allow-large")));
    }
    let levels = levels_in_range(a.min_norm, a.max_norm, a.all);
    let run = || -> io::Result<()> {
        match a.format {
            Format::Csv => {
                let mut w = csv_writer();
                w.write_record(["level", "conjugate"])?;
                for l in &levels {
                    w.write_record([l.label().to_string(), l.conjugate().label().to_string()])?;
                }
                w.flush()
            }
            Format::Table => {
                let mut out = io::stdout().lock();
                let total = levels_in_range(a.min_norm, a.max_norm, true).len();
                let distinct = levels_in_range(a.min_norm, a.max_norm, false).len();
                writeln!(out, "{total} ideals, {distinct} up to conjugation")?;
                for l in &levels {
                    writeln!(out, "{:<16}{}", l.label().to_string(), l.conjugate().label())?;
                }
                Ok(())
            }
        }
    };
    Ok(io_exit(run()))
}

fn io_exit(r: io::Result<()>) -> ExitCode {
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_PARTIAL)
        }
    }
}

fn io_code(r: io::Result<ExitCode>) -> ExitCode {
    r.unwrap_or_else(|e| io_exit(Err(e)))
}

fn cmd_cohomology(a: &JobArgs) -> Result<ExitCode, Invalid> {
    let levels = select_levels(a)?;
    let engine = Engine::new(a, Fixtures::builtin());
    let results = run_parallel(&levels, a.jobs, |l| engine.cohomology(l));
    let code = match a.format {
        Format::Csv => {
            let mut w = csv_writer();
            let r = w.write_record(["level", "conjugate", "dimension"]).map_err(io::Error::from).and_then(|_| {
                finish(&levels, results, |l, d| {
                    w.write_record([l.label().to_string(), l.conjugate().label().to_string(), d.to_string()])?;
                    Ok(())
                })
            });
            w.flush().and(r)
        }
        Format::Table => {
            let mut out = io::stdout().lock();
            writeln!(out, "{:<16}{:<16}dim", "level", "conjugate")
                .and_then(|_| finish(&levels, results, |l, d| writeln!(out, "{:<16}{:<16}{d}", l.label().to_string(), l.conjugate().label().to_string())))
        }
    };
    Ok(io_code(code))
}

fn class_rows(l: &EisIdeal, i: usize, c: &EigenClass) -> Vec<[String; 8]> {
    let head = |prime: String, a1: String, a2: String, poly: String| {
        [l.label().to_string(), (i + 1).to_string(), c.field.to_string(), c.dimension().to_string(), prime, a1, a2, poly]
    };
    if let Some(d) = c.unsplit {
        return vec![head(String::new(), String::new(), String::new(), format!("unsplit:{d}"))];
    }
    c.primes()
        .into_iter()
        .map(|p| {
            let a = |k| c.eigenvalue(p, k).map(|x| x.to_string()).unwrap_or_default();
            let poly = c.hecke_polynomial(p).map(|h| h.to_string()).unwrap_or_default();
            head(p.to_string(), a(1), a(2), poly)
        })
        .collect()
}

fn cmd_hecke(a: &JobArgs) -> Result<ExitCode, Invalid> {
    let levels = select_levels(a)?;
    let engine = Engine::new(a, Fixtures::builtin());
    let results = run_parallel(&levels, a.jobs, |l| engine.level_data(l));
    let code = match a.format {
        Format::Csv => {
            let mut w = csv_writer();
            let r = w
                .write_record(["level", "class", "field", "dimension", "prime", "a1", "a2", "polynomial"])
                .map_err(io::Error::from)
                .and_then(|_| {
                    finish(&levels, results, |l, d| {
                        for (i, c) in d.classes.iter().enumerate() {
                            for row in class_rows(l, i, c) {
                                w.write_record(&row)?;
                            }
                        }
                        Ok(())
                    })
                });
            w.flush().and(r)
        }
        Format::Table => {
            let mut out = io::stdout().lock();
            finish(&levels, results, |l, d| {
                writeln!(out, "level {}: dim {}", l.label(), d.dim)?;
                for (i, c) in d.classes.iter().enumerate() {
                    writeln!(out, "  class {} over {}, dimension {}", i + 1, c.field, c.dimension())?;
                    if let Some(u) = c.unsplit {
                        writeln!(out, "    unsplit, Q-dimension {u}")?;
                        continue;
                    }
                    writeln!(out, "    {:<14}h(phi,p)", "HNF(p)")?;
                    for p in c.primes() {
                        let poly = c.hecke_polynomial(p).map(|h| h.to_string()).unwrap_or_default();
                        writeln!(out, "    {:<14}{poly}", p.to_string())?;
                    }
                }
                Ok(())
            })
        }
    };
    Ok(io_code(code))
}

fn summary_fields(r: &SummaryRow) -> [String; 7] {
    [
        r.level.to_string(),
        r.conjugate.to_string(),
        r.d3.to_string(),
        r.d3_new.to_string(),
        r.g_prim.to_string(),
        r.c2_new.to_string(),
        r.delta.to_string(),
    ]
}

fn cmd_classify(a: &ClassifyArgs) -> Result<ExitCode, Invalid> {
    let job = &a.job;
    let levels = select_levels(job)?;
    let store = FixtureStore::new(job.cache.as_ref().map(|c| Cache::new(c.clone()).fixtures_dir()), job.offline);
    let engine = Engine::new(job, store.load_all());
    let results = run_parallel(&levels, job.jobs, |l| {
        let d = engine.level_data(l)?;
        Ok((d.clone(), engine.report(l)?))
    });
    let code = match (job.format, a.verdicts) {
        (Format::Csv, false) => {
            let mut w = csv_writer();
            let header: Vec<&str> = SummaryRow::CSV_HEADER.split(',').collect();
            let r = w.write_record(&header).map_err(io::Error::from).and_then(|_| {
                finish(&levels, results, |_, (_, r)| {
                    w.write_record(summary_fields(&r.row))?;
                    Ok(())
                })
            });
            w.flush().and(r)
        }
        (Format::Csv, true) => {
            let mut w = csv_writer();
            let r = w
                .write_record(["level", "class", "field", "dimension", "verdict", "primes"])
                .map_err(io::Error::from)
                .and_then(|_| {
                    finish(&levels, results, |l, (d, r)| {
                        for (i, (c, v)) in d.classes.iter().zip(&r.classifications).enumerate() {
                            let primes: Vec<String> = v.primes.iter().map(|p| p.to_string()).collect();
                            w.write_record([
                                l.label().to_string(),
                                (i + 1).to_string(),
                                c.field.to_string(),
                                v.dimension.to_string(),
                                v.verdict.to_string(),
                                primes.join(" "),
                            ])?;
                        }
                        Ok(())
                    })
                });
            w.flush().and(r)
        }
        (Format::Table, _) => {
            let mut out = io::stdout().lock();
            writeln!(out, "{:<14}{:<14}{:>4}{:>7}{:>7}{:>7}{:>7}", "level", "conjugate", "d3", "d3new", "gprim", "c2new", "delta").and_then(|_| {
                finish(&levels, results, |_, (d, r)| {
                    let f = summary_fields(&r.row);
                    writeln!(out, "{:<14}{:<14}{:>4}{:>7}{:>7}{:>7}{:>7}", f[0], f[1], f[2], f[3], f[4], f[5], f[6])?;
                    for (i, (c, v)) in d.classes.iter().zip(&r.classifications).enumerate() {
                        writeln!(out, "    class {} ({}, dim {}): {} [{} primes]", i + 1, c.field, v.dimension, v.verdict, v.primes.len())?;
                        for (p, x) in &v.residuals {
                            writeln!(out, "        residual at {p}: {x}")?;
                        }
                    }
                    Ok(())
                })
            })
        }
    };
    Ok(io_code(code))
}

fn cmd_fetch(a: &FetchArgs) -> Result<ExitCode, Invalid> {
    if a.label.trim().is_empty() {
        return Err(invalid("empty label"));
    }
    let kind = match a.kind {
        KindArg::Curve => FixtureKind::Curve,
        KindArg::Bianchi => FixtureKind::Bianchi,
    };
    let mut store = FixtureStore::new(a.cache.as_ref().map(|c| Cache::new(c.clone()).fixtures_dir()), a.offline);
    if !a.offline {
        let base = std::env::var("GL3EIS_LMFDB_URL").unwrap_or_else(|_| lmfdb::DEFAULT_BASE.to_string());
        match lmfdb::Lmfdb::new(&base) {
            Ok(client) => store = store.with_fetcher(Box::new(client)),
            Err(e) => eprintln!("warning: no HTTP client: {e}"),
        }
    }
    match store.get(kind, &a.label) {
        Ok(f) => Ok(io_exit(writeln!(io::stdout(), "{}", f.to_record()))),
        Err(e) => {
            eprintln!("error: {e}");
            Ok(ExitCode::from(EXIT_PARTIAL))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };
    let r = match &cli.command {
        Command::Levels(a) => cmd_levels(a),
        Command::Cohomology(a) => cmd_cohomology(a),
        Command::Hecke(a) => cmd_hecke(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Fetch(a) => cmd_fetch(a),
    };
    r.unwrap_or_else(|Invalid(msg)| {
        eprintln!("error: {msg}");
        ExitCode::from(EXIT_INVALID)
    })
}
