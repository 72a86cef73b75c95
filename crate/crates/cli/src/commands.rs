use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use s0l::grammar::text::{parse_grammar, parse_sequences, write_grammar, write_sequence_set, write_sequences};
use s0l::grammar::{derivation_log_probability, derive_sequence, Derivation, S0LSystem};
use s0l::metrics::{aggregate, compare_against};
use s0l::procgen::{generate_dataset, parse_manifest, render_manifest, DatasetKind, ManifestRecord};
use s0l::search::{run_search_with_progress, run_search_with_retry, SearchConfig, SearchResult, SearchStatus, SgaParams, Strategy};
use s0l::{SequenceSet, System};

use crate::manifest::{manifest_path, RunManifest};
use crate::report::{self, Footer, ReportRow};
use crate::{BenchmarkArgs, DeriveArgs, Exit, Failure, GenerateArgs, InferArgs, SearchArgs, StrategyArg};

type Outcome = Result<Exit, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::validation)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .map_err(Failure::validation)?;
    }
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::validation)
}

fn finish(mut manifest: RunManifest, at: &Path, exit: Exit) -> Outcome {
    manifest.exit_status = exit.code();
    manifest
        .write(at)
        .with_context(|| format!("cannot write {}", at.display()))
        .map_err(Failure::validation)?;
    Ok(exit)
}

/// Reads a grammar file and rejects systems that fail validation.
pub fn load_grammar(path: &Path) -> Result<System, Failure> {
    let system: System = parse_grammar(&read(path)?)
        .with_context(|| format!("{}", path.display()))
        .map_err(Failure::validation)?;
    let report = system.validate();
    if !report.is_ok() {
        return Err(Failure::validation(anyhow!("{}: {report}", path.display())));
    }
    Ok(system)
}

pub fn load_sequences(path: &Path) -> Result<SequenceSet, Failure> {
    parse_sequences(&read(path)?)
        .with_context(|| format!("{}", path.display()))
        .map_err(Failure::validation)
}

fn numbered(path: &Path, index: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}-{index}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{index}"),
    };
    path.with_file_name(name)
}

pub fn derive(args: &DeriveArgs) -> Outcome {
    if args.steps == 0 || args.count == 0 || args.per_file == 0 {
        return Err(Failure::validation(anyhow!("--steps, --count and --per-file must be at least 1")));
    }
    let system = load_grammar(&args.grammar)?;
    let mut manifest = RunManifest::new("derive");
    manifest.inputs.push(args.grammar.clone());
    manifest
        .set("steps", args.steps)
        .set("count", args.count)
        .set("per_file", args.per_file)
        .set("seed", args.seed);

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    for file in 0..args.count {
        let path = if args.count == 1 { args.output.clone() } else { numbered(&args.output, file + 1) };
        let derivations: Vec<Derivation> = (0..args.per_file)
            .map(|_| derive_sequence(&system, args.steps, &mut rng))
            .collect::<Result<_, _>>()
            .map_err(Failure::validation)?;
        write(&path, &write_sequences(derivations.iter().map(Derivation::trace)))?;
        for (i, d) in derivations.iter().enumerate() {
            let lp = derivation_log_probability(&system, d, false).map_err(Failure::validation)?;
            println!("{} {} log_probability={lp}", path.display(), i + 1);
        }
        manifest.outputs.push(path);
    }
    finish(manifest, &manifest_path(&args.output), Exit::Ok)
}

fn search_config(args: &SearchArgs, n: usize, seed: u64) -> SearchConfig {
    let strategy = match args.strategy {
        StrategyArg::Es => Strategy::Exhaustive,
        StrategyArg::Sga => Strategy::Genetic(SgaParams {
            population: args.population,
            crossover: args.crossover,
            mutation: args.mutation,
            seed,
        }),
    };
    let mut config = SearchConfig::new(n, args.mode.into(), strategy).with_time_budget(args.time_budget);
    config.extension_limit = args.extension_limit;
    config.pruning = !args.no_pruning;
    config
}

fn echo_search(manifest: &mut RunManifest, args: &SearchArgs) {
    manifest
        .set("mode", args.mode.to_possible_value_name())
        .set("strategy", args.strategy.to_possible_value_name())
        .set("time_budget", humantime::format_duration(args.time_budget).to_string())
        .set("extension_limit", args.extension_limit)
        .set("pruning", !args.no_pruning);
    if args.strategy == StrategyArg::Sga {
        manifest
            .set("seed", args.seed)
            .set("population", args.population)
            .set("crossover", args.crossover)
            .set("mutation", args.mutation);
    }
}

trait ValueName {
    fn to_possible_value_name(&self) -> String;
}

impl<V: clap::ValueEnum> ValueName for V {
    fn to_possible_value_name(&self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_owned()
    }
}

/// Deterministic text of an inference result: `# key: value` lines then the
/// grammar, if one was found.
pub fn render_inference(config: &SearchConfig, n: usize, result: &SearchResult<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# strategy: {}", config.strategy.name());
    let _ = writeln!(out, "# mode: {}", config.mode);
    let _ = writeln!(out, "# n: {n}");
    if let Strategy::Genetic(p) = &config.strategy {
        let _ = writeln!(out, "# seed: {}", p.seed);
    }
    let _ = writeln!(out, "# status: {}", result.status);
    let _ = writeln!(out, "# evaluated: {}", result.evaluated);
    if let Some((run, best)) = result.generations {
        let _ = writeln!(out, "# generations: {run}");
        let _ = writeln!(out, "# best_generation: {best}");
    }
    match &result.best {
        Some(best) => {
            let _ = writeln!(out, "# log_probability: {}", best.log_probability());
            let _ = writeln!(out, "# vector: {}", best.vector);
            out.push_str(&write_grammar(&best.success.system));
        }
        None => out.push_str("# no compatible system\n"),
    }
    out
}

pub fn infer(args: &InferArgs) -> Outcome {
    let rho = load_sequences(&args.input)?;
    let config = search_config(&args.search, args.n, args.search.seed);
    config.validate().map_err(Failure::validation)?;
    if let Some(cap) = args.retry_n {
        if cap < args.n {
            return Err(Failure::validation(anyhow!("--retry-n {cap} is below --n {}", args.n)));
        }
    }

    let start = Instant::now();
    let verbose = args.progress;
    let mut progress = |p: &s0l::search::Progress| {
        if verbose {
            eprintln!("improved: {p}");
        }
    };
    let (result, n) = match args.retry_n {
        Some(cap) => run_search_with_retry::<f64>(&rho, &config, cap, &mut progress),
        None => run_search_with_progress::<f64>(&rho, &config, &mut progress).map(|r| (r, args.n)),
    }
    .map_err(Failure::validation)?;
    write(&args.output, &render_inference(&config, n, &result))?;
    eprintln!(
        "{}: {} after {} vectors in {:.3}s",
        args.output.display(),
        result.status,
        result.evaluated,
        start.elapsed().as_secs_f64()
    );
    if let Some(best) = &result.best {
        println!("log_probability: {}", best.log_probability());
    }

    let exit = match (&result.best, result.status) {
        (_, SearchStatus::TimedOut) => Exit::Timeout,
        (None, _) => Exit::NoSolution,
        _ => Exit::Ok,
    };
    let mut manifest = RunManifest::new("infer");
    manifest.inputs.push(args.input.clone());
    manifest.outputs.push(args.output.clone());
    manifest.set("n", args.n);
    if let Some(cap) = args.retry_n {
        manifest.set("retry_n", cap).set("final_n", n);
    }
    echo_search(&mut manifest, &args.search);
    finish(manifest, &manifest_path(&args.output), exit)
}

pub fn generate(args: &GenerateArgs) -> Outcome {
    let kind: DatasetKind = args.kind.into();
    let cases = generate_dataset::<f64>(kind, args.scale, args.seed, args.words).map_err(Failure::validation)?;
    let mut manifest = RunManifest::new("generate");
    manifest
        .set("kind", kind.name())
        .set("scale", args.scale)
        .set("seed", args.seed)
        .set("words", args.words);
    let mut records = Vec::with_capacity(cases.len());
    for case in &cases {
        let grammar = format!("{}.grammar", case.id);
        let sequences = format!("{}.seq", case.id);
        write(&args.output.join(&grammar), &write_grammar(&case.system))?;
        write(&args.output.join(&sequences), &write_sequence_set(&case.inputs))?;
        manifest.outputs.push(PathBuf::from(&grammar));
        manifest.outputs.push(PathBuf::from(&sequences));
        records.push(ManifestRecord::for_case(case, grammar, sequences));
    }
    write(&args.output.join("manifest.tsv"), &render_manifest(&records))?;
    manifest.outputs.push(PathBuf::from("manifest.tsv"));
    println!("{} cases written to {}", cases.len(), args.output.display());
    finish(manifest, &args.output.join("run.manifest.json"), Exit::Ok)
}

struct CaseRun {
    row: ReportRow,
    comparison: s0l::metrics::ComparisonResult<f64>,
    elapsed: std::time::Duration,
}

fn run_case(dir: &Path, record: &ManifestRecord, args: &SearchArgs) -> Result<CaseRun, Failure> {
    let original: S0LSystem<f64> = load_grammar(&dir.join(&record.grammar))?;
    let rho = load_sequences(&dir.join(&record.sequence_file))?;
    let config = search_config(args, record.successors, args.seed.wrapping_add(record.seed));
    let result = run_search_with_progress::<f64>(&rho, &config, &mut |_| {}).map_err(Failure::validation)?;
    let candidate = result
        .best
        .as_ref()
        .map(|b| (&b.success.system, b.log_probability()));
    let mut comparison = compare_against(&original, record.log_probability, candidate)
        .with_context(|| record.case_id.clone())
        .map_err(Failure::validation)?;
    // a timed-out case counts as a failure whatever it found
    comparison.success &= result.status != SearchStatus::TimedOut;
    eprintln!(
        "{}: {} success={} in {:.3}s",
        record.case_id,
        result.status,
        comparison.success,
        result.elapsed.as_secs_f64()
    );
    Ok(CaseRun {
        row: ReportRow::new(record.case_id.clone(), record.successors, record.sequences, &comparison, result.elapsed),
        comparison,
        elapsed: result.elapsed,
    })
}

pub fn benchmark(args: &BenchmarkArgs) -> Outcome {
    let text = read(&args.manifest)?;
    let mut records = parse_manifest(&text)
        .with_context(|| format!("{}", args.manifest.display()))
        .map_err(Failure::validation)?;
    if records.is_empty() {
        return Err(Failure::validation(anyhow!("{} lists no cases", args.manifest.display())));
    }
    if args.workers == 0 {
        return Err(Failure::validation(anyhow!("--workers must be at least 1")));
    }
    search_config(&args.search, 1, 0).validate().map_err(Failure::validation)?;
    records.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    let dir = args.manifest.parent().unwrap_or(Path::new("")).to_path_buf();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers)
        .build()
        .map_err(Failure::validation)?;
    let runs: Vec<CaseRun> = pool.install(|| {
        records
            .par_iter()
            .map(|r| run_case(&dir, r, &args.search))
            .collect::<Result<_, _>>()
    })?;

    let results: Vec<_> = runs.iter().map(|r| (r.comparison.clone(), r.elapsed)).collect();
    let batch = aggregate(&results).map_err(Failure::validation)?;
    let rows: Vec<ReportRow> = runs.into_iter().map(|r| r.row).collect();
    write(&args.output, &report::render(&rows, &Footer::from(&batch)))?;
    println!(
        "SR={} MTTS={:.3}s wtp_s2c={} wtp_c2s={} e={} diffmax={} diffrate={}",
        batch.success_rate,
        batch.mtts.as_secs_f64(),
        batch.mean_wtp_s2c,
        batch.mean_wtp_c2s,
        batch.mean_prob_error,
        batch.diff_max,
        batch.diff_rate
    );

    let mut manifest = RunManifest::new("benchmark");
    manifest.inputs.push(args.manifest.clone());
    manifest.outputs.push(args.output.clone());
    manifest.set("n", "S").set("workers", args.workers);
    echo_search(&mut manifest, &args.search);
    finish(manifest, &manifest_path(&args.output), Exit::Ok)
}
