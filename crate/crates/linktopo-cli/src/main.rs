//! `linktopo` command line: crawl, analyze, fit, compare-domains, simulate,
//! gen-synth, and self-check over one reproducible configuration.

mod config;
mod rows;

use std::collections::BTreeMap;
use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use linktopo::corpus::{self, build_crawl_set, load_seeds, CrawlSet, StoreWriter, TopicSeed};
use linktopo::crawler::{bfs_crawl_with, CrawlConfig, CrawlError, LiveFetcher, OfflineFetcher};
use linktopo::fitting::{
    compare_domains, critical_distance, fit_likelihood_decay, fit_similarity_decay, pearson,
    DecayFit, EdgeStrength, FitError, ModelKind,
};
use linktopo::lexparse::StopList;
use linktopo::linkmetrics::{
    generality, likelihood_factor, mean_link_distance, mean_similarity, relevance_posterior,
    simulate_two_state, stationary_hit_rate,
};
use linktopo::synthweb::{self, SynthSpec};
use linktopo::vectorspace::{noise_level, NoiseEstimate};

use config::{config_digest, version, FileConfig};
use rows::{read_rows, write_rows, MetricRow};

#[derive(Parser)]
#[command(name = "linktopo", version, about = "Link topology vs. content measurement pipeline")]
struct Cli {
    /// Optional JSON run-config; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Breadth-first crawl of every seed topic into a JSON Lines store.
    Crawl(CrawlArgs),
    /// Per-(topic, depth) link and similarity statistics as CSV.
    Analyze(AnalyzeArgs),
    /// Nonlinear least-squares decay fit over an analyze CSV.
    Fit(FitArgs),
    /// Pairwise significance graph over per-domain fit files.
    CompareDomains(CompareArgs),
    /// Monte Carlo check of the stationary hit rate.
    Simulate(SimulateArgs),
    /// Generate a synthetic corpus with planted decay parameters.
    GenSynth(GenSynthArgs),
    /// Crawl, analyze, and fit a generated corpus; verify parameter
    /// recovery against its ground truth.
    SelfCheck(SelfCheckArgs),
}

#[derive(clap::Args)]
struct CrawlArgs {
    #[arg(long)]
    seeds: PathBuf,
    /// Output store (JSON Lines, one page record per line).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    depth: Option<u32>,
    /// Halt a topic once this many pages are downloaded at max depth.
    #[arg(long)]
    cap: Option<usize>,
    /// Per-page timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Restrict the crawl to one top-level domain.
    #[arg(long)]
    domain: Option<String>,
    /// Crawl an offline corpus directory instead of the live web.
    #[arg(long)]
    offline: Option<PathBuf>,
    /// Seconds between fetches against one host (live crawls).
    #[arg(long)]
    politeness: Option<f64>,
    #[arg(long)]
    min_seed_links: Option<usize>,
    #[arg(long)]
    max_seed_links: Option<usize>,
    /// Concurrent fetches within a crawl layer.
    #[arg(long)]
    jobs: Option<usize>,
    /// Override the built-in stop-word list.
    #[arg(long)]
    stoplist: Option<PathBuf>,
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    seeds: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FitModel {
    Similarity,
    Likelihood,
}

#[derive(clap::Args)]
struct FitArgs {
    #[arg(long, value_enum)]
    model: FitModel,
    /// Analyze CSV to fit.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Similarity noise level; defaults to the CSV's embedded estimate.
    #[arg(long)]
    sigma_inf: Option<f64>,
    /// Likelihood threshold for the critical distance.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(clap::Args)]
struct CompareArgs {
    /// Repeatable domain=fit.json pair.
    #[arg(long = "fit", value_parser = parse_domain_fit, required = true)]
    fits: Vec<(String, PathBuf)>,
    /// Output edge list; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Confidence level in percent. Only the one-sigma 68.3 level is
    /// supported.
    #[arg(long, default_value_t = 68.3)]
    confidence: f64,
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long)]
    g: f64,
    #[arg(long)]
    r1: f64,
    #[arg(long)]
    steps: Option<u64>,
    /// Discarded prefix; defaults to a tenth of the steps.
    #[arg(long)]
    burn_in: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct GenSynthArgs {
    /// Generator spec JSON; built-in defaults when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, required_unless_present = "emit_default_spec")]
    out: Option<PathBuf>,
    /// Override the spec's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the default spec JSON and exit.
    #[arg(long)]
    emit_default_spec: bool,
}

#[derive(clap::Args)]
struct SelfCheckArgs {
    corpus: PathBuf,
    /// Also write the report JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_domain_fit(raw: &str) -> Result<(String, PathBuf), String> {
    raw.split_once('=')
        .map(|(domain, path)| (domain.to_string(), PathBuf::from(path)))
        .ok_or_else(|| format!("expected domain=fit.json, got {raw:?}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file_config = match FileConfig::load(cli.config.as_ref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("linktopo: {e}");
            return ExitCode::FAILURE;
        }
    };
    let result = match cli.command {
        Command::Crawl(args) => run_crawl(args, &file_config),
        Command::Analyze(args) => run_analyze(args, &file_config),
        Command::Fit(args) => run_fit(args, &file_config),
        Command::CompareDomains(args) => run_compare(args),
        Command::Simulate(args) => run_simulate(args, &file_config),
        Command::GenSynth(args) => run_gen_synth(args, &file_config),
        Command::SelfCheck(args) => run_self_check(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("linktopo: {e}");
            ExitCode::FAILURE
        }
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(4)
}

#[derive(Serialize)]
struct ResolvedCrawl {
    seeds: String,
    out: String,
    depth: u32,
    cap: usize,
    timeout: f64,
    domain: Option<String>,
    offline: Option<String>,
    politeness: f64,
    min_seed_links: usize,
    max_seed_links: usize,
    jobs: usize,
}

fn run_crawl(args: CrawlArgs, file: &FileConfig) -> Result<ExitCode, Box<dyn Error>> {
    let defaults = CrawlConfig::default();
    let resolved = ResolvedCrawl {
        seeds: args.seeds.display().to_string(),
        out: args.out.display().to_string(),
        depth: args.depth.or(file.crawl.depth).unwrap_or(defaults.max_depth),
        cap: args.cap.or(file.crawl.cap).unwrap_or(defaults.max_pages_at_max_depth),
        timeout: args
            .timeout
            .or(file.crawl.timeout)
            .unwrap_or(defaults.per_page_timeout.as_secs_f64()),
        domain: args.domain.or_else(|| file.crawl.domain.clone()),
        offline: args.offline.as_ref().map(|p| p.display().to_string()),
        // Live crawls space same-host requests a second apart unless told
        // otherwise; offline replays need no spacing.
        politeness: args
            .politeness
            .or(file.crawl.politeness)
            .unwrap_or(if args.offline.is_some() { 0.0 } else { 1.0 }),
        min_seed_links: args
            .min_seed_links
            .or(file.crawl.min_seed_links)
            .unwrap_or(defaults.min_seed_links),
        max_seed_links: args
            .max_seed_links
            .or(file.crawl.max_seed_links)
            .unwrap_or(defaults.max_seed_links),
        jobs: args.jobs.or(file.crawl.jobs).unwrap_or_else(default_jobs),
    };
    let digest = config_digest(&resolved);

    let crawl_config = CrawlConfig {
        max_depth: resolved.depth,
        max_pages_at_max_depth: resolved.cap,
        per_page_timeout: Duration::from_secs_f64(resolved.timeout),
        min_seed_links: resolved.min_seed_links,
        max_seed_links: resolved.max_seed_links,
        domain_filter: resolved.domain.clone().map(|d| d.to_ascii_lowercase()),
        politeness_delay: Duration::from_secs_f64(resolved.politeness),
        max_concurrent_fetches: resolved.jobs,
    };
    crawl_config.validate()?;

    let stop = match &args.stoplist {
        Some(path) => StopList::from_file(path)?,
        None => StopList::default(),
    };

    let offline_fetcher;
    let live_fetcher;
    let fetcher: &dyn linktopo::crawler::Fetcher = match &args.offline {
        Some(root) => {
            offline_fetcher = OfflineFetcher::open(root)?;
            &offline_fetcher
        }
        None => {
            let cache = std::env::var_os("LINKTOPO_CACHE").map(PathBuf::from);
            live_fetcher = LiveFetcher::new(cache);
            &live_fetcher
        }
    };

    let seeds = load_seeds(&args.seeds)?;
    let mut writer = StoreWriter::create(&args.out)?;
    let mut validated_seeds = Vec::new();
    let mut pages = 0usize;
    let mut robots_skips = 0usize;
    let mut skipped_topics = 0usize;
    for seed in &seeds {
        match bfs_crawl_with(seed, &crawl_config, fetcher, &stop) {
            Ok(outcome) => {
                for record in &outcome.records {
                    writer.append(record)?;
                }
                pages += outcome.records.len();
                robots_skips += outcome.robots_skipped.len();
                validated_seeds.push(outcome.seed);
            }
            Err(err @ (CrawlError::SeedRejected { .. } | CrawlError::SourceUnreachable { .. })) => {
                eprintln!("linktopo: skipping topic {}: {err}", seed.topic_id);
                skipped_topics += 1;
            }
            Err(other) => return Err(other.into()),
        }
    }
    let seeds_out = args.out.with_extension("seeds.json");
    corpus::write_seeds(&seeds_out, &validated_seeds)?;
    eprintln!(
        "linktopo crawl [{digest}]: {} topics ({skipped_topics} skipped), {pages} pages, \
         {robots_skips} robots skips -> {} + {}",
        validated_seeds.len(),
        args.out.display(),
        seeds_out.display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ResolvedAnalyze {
    store: String,
    seeds: String,
    out: String,
    jobs: usize,
}

fn run_analyze(args: AnalyzeArgs, file: &FileConfig) -> Result<ExitCode, Box<dyn Error>> {
    let resolved = ResolvedAnalyze {
        store: args.store.display().to_string(),
        seeds: args.seeds.display().to_string(),
        out: args.out.display().to_string(),
        jobs: args.jobs.or(file.analyze.jobs).unwrap_or_else(default_jobs),
    };
    let digest = config_digest(&resolved);

    let seeds = load_seeds(&args.seeds)?;
    let seed_by_id: BTreeMap<&str, &TopicSeed> =
        seeds.iter().map(|s| (s.topic_id.as_str(), s)).collect();

    // Stream the store one topic at a time; full crawl sets are too large
    // to hold for every topic at once, so only a depth-1 slice per topic is
    // kept for the cross-topic noise estimate. Records of one topic must be
    // contiguous in the store, which is how the crawl writes them.
    let mut reader = corpus::StoreReader::open(&args.store)?;
    let mut rows: Vec<MetricRow> = Vec::new();
    let mut noise_slices: Vec<CrawlSet> = Vec::new();
    let mut finished_topics: std::collections::HashSet<String> = Default::default();
    let mut current: Vec<corpus::PageRecord> = Vec::new();
    let mut topics = 0usize;

    let flush = |records: &mut Vec<corpus::PageRecord>,
                     rows: &mut Vec<MetricRow>,
                     noise_slices: &mut Vec<CrawlSet>|
     -> Result<(), Box<dyn Error>> {
        if records.is_empty() {
            return Ok(());
        }
        let topic_id = records[0].topic_id.clone();
        let batch = std::mem::take(records);
        let Some(seed) = seed_by_id.get(topic_id.as_str()) else {
            eprintln!("linktopo: store topic {topic_id} missing from seeds file; skipped");
            return Ok(());
        };
        let shallow: Vec<_> = batch.iter().filter(|r| r.depth <= 1).cloned().collect();
        let max_depth = batch.iter().map(|r| r.depth).max().unwrap_or(0);
        let crawl = build_crawl_set(batch, max_depth)?;
        let g = generality(seed, &seeds)?;
        for d in 0..=crawl.max_depth() {
            let r = if d == 0 { 1.0 } else { relevance_posterior(&crawl, seed, d) };
            rows.push(MetricRow {
                topic_id: crawl.topic_id().to_string(),
                d,
                n_pages: crawl.n_pages(d),
                delta: mean_link_distance(&crawl, d),
                sigma: mean_similarity(&crawl, d),
                r,
                g,
                lambda: likelihood_factor(r, g).ok(),
            });
        }
        noise_slices.push(build_crawl_set(shallow, 1)?);
        Ok(())
    };

    while let Some(record) = reader.next_record()? {
        if let Some(last) = current.last() {
            if last.topic_id != record.topic_id {
                if !finished_topics.insert(current[0].topic_id.clone()) {
                    return Err(format!(
                        "store is not grouped by topic: {} appears in separate runs",
                        current[0].topic_id
                    )
                    .into());
                }
                flush(&mut current, &mut rows, &mut noise_slices)?;
                topics += 1;
            }
        }
        current.push(record);
    }
    if !current.is_empty() {
        if !finished_topics.insert(current[0].topic_id.clone()) {
            return Err(format!(
                "store is not grouped by topic: {} appears in separate runs",
                current[0].topic_id
            )
            .into());
        }
        flush(&mut current, &mut rows, &mut noise_slices)?;
        topics += 1;
    }
    for warning in reader.warnings() {
        eprintln!("linktopo: store warning: {warning}");
    }
    if rows.is_empty() {
        return Err("no analyzable topics: store and seeds do not overlap".into());
    }

    let noise = if noise_slices.len() >= 2 {
        Some(noise_level(&noise_slices)?)
    } else {
        None
    };

    let mut comments = vec![
        format!("linktopo {} analyze", version()),
        format!("config={digest}"),
    ];
    if let Some(NoiseEstimate { mean, stderr, pairs }) = noise {
        comments.push(format!(
            "sigma_inf={mean} sigma_inf_stderr={stderr} pairs={pairs} ordered_pairs=true"
        ));
    }
    write_rows(&args.out, &rows, &comments)?;
    eprintln!(
        "linktopo analyze [{digest}]: {topics} topics, {} rows -> {}",
        rows.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ResolvedFit {
    model: String,
    input: String,
    sigma_inf: Option<f64>,
    threshold: f64,
}

#[derive(Serialize)]
struct FitOutput {
    version: String,
    config: String,
    model: ModelKind,
    params: Vec<f64>,
    stderr: Vec<f64>,
    sse: f64,
    n_points: usize,
    converged: bool,
    degenerate: bool,
    sigma_inf: Option<f64>,
    rho: f64,
    p_value: f64,
    delta_star: Option<f64>,
    notes: Vec<String>,
}

fn run_fit(args: FitArgs, file: &FileConfig) -> Result<ExitCode, Box<dyn Error>> {
    let (rows, metadata) = read_rows(&args.input)?;
    let threshold = args.threshold.or(file.fit.threshold).unwrap_or(2.0);
    let sigma_inf_flag = args.sigma_inf.or(file.fit.sigma_inf);

    // Depth-0 rows are pinned by definition (sigma(0) = 1, lambda(0) = 1/G)
    // and stay out of the fits.
    let mut notes = Vec::new();
    let points: Vec<(f64, f64)> = match args.model {
        FitModel::Similarity => rows
            .iter()
            .filter(|r| r.d >= 1)
            .map(|r| (r.delta, r.sigma))
            .collect(),
        FitModel::Likelihood => rows
            .iter()
            .filter(|r| r.d >= 1 && r.lambda.is_some())
            .map(|r| (r.delta, r.lambda.unwrap()))
            .collect(),
    };

    let resolved = ResolvedFit {
        model: format!("{:?}", args.model).to_ascii_lowercase(),
        input: args.input.display().to_string(),
        sigma_inf: sigma_inf_flag.or(metadata.sigma_inf),
        threshold,
    };
    let digest = config_digest(&resolved);

    let (fit, delta_star) = match args.model {
        FitModel::Similarity => {
            let sigma_inf = sigma_inf_flag.or(metadata.sigma_inf).ok_or(
                "similarity fit needs --sigma-inf or an analyze CSV with an embedded estimate",
            )?;
            (fit_similarity_decay(&points, sigma_inf)?, None)
        }
        FitModel::Likelihood => {
            let fit = fit_likelihood_decay(&points)?;
            let delta_star = match critical_distance(&fit, threshold) {
                Ok(d) => Some(d),
                Err(FitError::NoCrossing { .. }) => {
                    notes.push(format!("model never crosses threshold {threshold}"));
                    None
                }
                Err(other) => return Err(other.into()),
            };
            (fit, delta_star)
        }
    };
    let (rho, p_value) = pearson(&points)?;
    if fit.degenerate {
        notes.push("fit degenerate: no decay signal".into());
    }

    let output = FitOutput {
        version: version().to_string(),
        config: digest,
        model: fit.model,
        params: fit.params.clone(),
        stderr: fit.stderr.clone(),
        sse: fit.sse,
        n_points: fit.n_points,
        converged: fit.converged,
        degenerate: fit.degenerate,
        sigma_inf: fit.sigma_inf,
        rho,
        p_value,
        delta_star,
        notes,
    };
    let mut body = serde_json::to_string_pretty(&output)?;
    body.push('\n');
    config::write_text(args.out.as_deref(), &body)?;
    Ok(ExitCode::SUCCESS)
}

fn run_compare(args: CompareArgs) -> Result<ExitCode, Box<dyn Error>> {
    if (args.confidence - 68.3).abs() > 0.05 {
        return Err(format!(
            "only the 68.3% (one-sigma) confidence level is supported, got {}",
            args.confidence
        )
        .into());
    }
    let mut fits: BTreeMap<String, DecayFit> = BTreeMap::new();
    for (domain, path) in &args.fits {
        let raw = std::fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&raw)?;
        let fit = DecayFit {
            model: serde_json::from_value(value["model"].clone())?,
            params: serde_json::from_value(value["params"].clone())?,
            stderr: serde_json::from_value(value["stderr"].clone())?,
            sse: value["sse"].as_f64().unwrap_or(0.0),
            n_points: value["n_points"].as_u64().unwrap_or(0) as usize,
            converged: value["converged"].as_bool().unwrap_or(false),
            gradient_norm: 0.0,
            degenerate: value["degenerate"].as_bool().unwrap_or(false),
            sigma_inf: value["sigma_inf"].as_f64(),
        };
        fits.insert(domain.clone(), fit);
    }
    if fits.len() < 2 {
        return Err("compare-domains needs at least two distinct domains".into());
    }
    let resolved: Vec<String> =
        args.fits.iter().map(|(d, p)| format!("{d}={}", p.display())).collect();
    let digest = config_digest(&resolved);
    let graph = compare_domains(&fits, 1.0);

    let mut body = format!(
        "# linktopo {} compare-domains config={digest}\n# from to significant-parameters\n",
        version()
    );
    for edge in &graph.edges {
        let strength = match edge.strength {
            EdgeStrength::Alpha1Only => "alpha1",
            EdgeStrength::Alpha1AndAlpha2 => "alpha1,alpha2",
        };
        body.push_str(&format!("{} {} {strength}\n", edge.from, edge.to));
    }
    config::write_text(args.out.as_deref(), &body)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SimulateOutput {
    version: String,
    config: String,
    g: f64,
    r1: f64,
    steps: u64,
    burn_in: u64,
    seed: u64,
    eta_star: f64,
    empirical_rate: f64,
    stderr: f64,
    within_two_stderr: bool,
}

fn run_simulate(args: SimulateArgs, file: &FileConfig) -> Result<ExitCode, Box<dyn Error>> {
    let steps = args.steps.or(file.simulate.steps).unwrap_or(1_000_000);
    let burn_in = args.burn_in.or(file.simulate.burn_in).unwrap_or(steps / 10);
    let seed = args.seed.or(file.simulate.seed).unwrap_or(0);
    let eta_star = stationary_hit_rate(args.g, args.r1)?;
    let outcome = simulate_two_state(args.r1, args.g, steps, burn_in, seed)?;
    let resolved = (args.g, args.r1, steps, burn_in, seed);
    let output = SimulateOutput {
        version: version().to_string(),
        config: config_digest(&resolved),
        g: args.g,
        r1: args.r1,
        steps,
        burn_in,
        seed,
        eta_star,
        empirical_rate: outcome.rate,
        stderr: outcome.stderr,
        within_two_stderr: (outcome.rate - eta_star).abs() <= 2.0 * outcome.stderr,
    };
    let mut body = serde_json::to_string_pretty(&output)?;
    body.push('\n');
    config::write_text(args.out.as_deref(), &body)?;
    Ok(ExitCode::SUCCESS)
}

fn run_gen_synth(args: GenSynthArgs, file: &FileConfig) -> Result<ExitCode, Box<dyn Error>> {
    if args.emit_default_spec {
        let mut body = serde_json::to_string_pretty(&SynthSpec::default())?;
        body.push('\n');
        print!("{body}");
        return Ok(ExitCode::SUCCESS);
    }
    let mut spec = match &args.spec {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => SynthSpec::default(),
    };
    if let Some(seed) = args.seed.or(file.gen_synth.seed) {
        spec.rng_seed = seed;
    }
    let out = args.out.as_ref().expect("clap enforces --out");
    let truth = synthweb::generate(&spec, out)?;
    eprintln!(
        "linktopo gen-synth: {} topics -> {} (sigma_inf {:.6}, g {:.6})",
        truth.topics.len(),
        out.display(),
        truth.realized_sigma_inf,
        truth.realized_g
    );
    Ok(ExitCode::SUCCESS)
}

fn run_self_check(args: SelfCheckArgs) -> Result<ExitCode, Box<dyn Error>> {
    let report = synthweb::self_check(&args.corpus)?;
    let mut body = serde_json::to_string_pretty(&report)?;
    body.push('\n');
    print!("{body}");
    if let Some(path) = &args.out {
        std::fs::write(path, &body)?;
    }
    let failed = !report.alpha_ok || report.delta_star_ok == Some(false);
    if failed {
        eprintln!("linktopo: self-check failed parameter recovery");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}
