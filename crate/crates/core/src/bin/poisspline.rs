use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use poisspline::data::{
    bin_events, load_counts, load_events, thin_counts, write_events, DataLayout,
};
use poisspline::dump::{read_dump, write_dump};
use poisspline::metrics::{distances, Constant, Intensity, Sine};
use poisspline::model::Likelihood;
use poisspline::prior::{sample_prior, PriorConfig, SplineState};
use poisspline::sampler::{
    flat_init, initial_sigma, run_chain, ChainConfig, ChainRun, MoveSchedule, Posterior,
};
use poisspline::simulate::simulate_path;
use poisspline::summary::{
    acceptance_table, band, dim_trace, knot_histogram, write_band, write_histogram, write_trace,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(
    name = "poisspline",
    version,
    about = "Bayesian free-knot spline intensity estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate event times from a periodic intensity.
    Simulate(SimulateArgs),
    /// Run the reversible-jump sampler and write a chain dump.
    Fit(FitArgs),
    /// Summarize a chain dump into band, histogram and trace CSVs.
    Summarize(SummarizeArgs),
    /// Print distances between two intensities.
    Distances(DistancesArgs),
}

/// `constant:c`, `sine:a,b` (a + b·sin(2πt/T)) or `spline:path[:iter]`
/// (a draw from a chain dump, the last one unless `iter` is given).
#[derive(Debug, Clone, PartialEq)]
enum IntensitySpec {
    Constant(f64),
    Sine(f64, f64),
    Spline(PathBuf, Option<usize>),
}

impl FromStr for IntensitySpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number {x:?} in intensity spec {s:?}"))
        };
        match s.split_once(':') {
            Some(("constant", v)) => Ok(Self::Constant(num(v)?)),
            Some(("sine", v)) => {
                let (a, b) = v
                    .split_once(',')
                    .ok_or_else(|| format!("sine needs `a,b`, got {v:?}"))?;
                Ok(Self::Sine(num(a)?, num(b)?))
            }
            Some(("spline", v)) => match v.rsplit_once(':') {
                Some((path, it)) if it.chars().all(|c| c.is_ascii_digit()) && !it.is_empty() => {
                    Ok(Self::Spline(path.into(), Some(it.parse().unwrap())))
                }
                _ => Ok(Self::Spline(v.into(), None)),
            },
            _ => Err(format!(
                "unknown intensity spec {s:?}; expected constant:c, sine:a,b or spline:path"
            )),
        }
    }
}

impl IntensitySpec {
    fn build(&self, period: f64) -> Result<Box<dyn Intensity>> {
        Ok(match self {
            Self::Constant(c) => Box::new(Constant { level: *c, period }),
            Self::Sine(a, b) => Box::new(Sine {
                base: *a,
                amplitude: *b,
                period,
            }),
            Self::Spline(path, it) => Box::new(load_draw(path, *it)?),
        })
    }

    /// Supremum over a period, when known in closed form.
    fn sup(&self) -> Option<f64> {
        match self {
            Self::Constant(c) => Some(*c),
            Self::Sine(a, b) => Some(a + b.abs()),
            Self::Spline(..) => None,
        }
    }
}

fn load_draw(path: &Path, iteration: Option<usize>) -> Result<SplineState> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let dump = read_dump(file).with_context(|| format!("reading {}", path.display()))?;
    let draw = match iteration {
        None => dump.draws.last(),
        Some(it) => dump.draws.iter().find(|d| d.iteration == it),
    };
    draw.map(|d| d.state.clone())
        .ok_or_else(|| anyhow!("no matching draw in {}", path.display()))
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Intensity: constant:c, sine:a,b or spline:path[:iter].
    #[arg(long)]
    intensity: IntensitySpec,
    #[arg(long, default_value_t = 24.0)]
    period: f64,
    #[arg(long)]
    days: usize,
    /// Upper bound on the intensity; required for spline intensities.
    #[arg(long)]
    bound: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Echo the configuration line to stdout.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LikelihoodKind {
    Binned,
    Full,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Counts CSV with header day,bin,count.
    #[arg(long, conflicts_with_all = ["events", "prior_only"])]
    counts: Option<PathBuf>,
    /// Events CSV with header time.
    #[arg(long, conflicts_with = "prior_only")]
    events: Option<PathBuf>,
    /// Sample the prior (log-likelihood ≡ 0).
    #[arg(long)]
    prior_only: bool,
    #[arg(long, default_value_t = 24.0)]
    period: f64,
    /// Bins per period.
    #[arg(long, default_value_t = 2880)]
    bins: usize,
    /// Number of periods; required with --counts, inferred for --events.
    #[arg(long)]
    days: Option<usize>,
    /// Likelihood used with --events.
    #[arg(long, value_enum, default_value_t = LikelihoodKind::Binned)]
    likelihood: LikelihoodKind,
    /// Thin the binned counts to about this many events before fitting.
    #[arg(long)]
    retain: Option<u64>,
    #[arg(long, default_value_t = 4)]
    order: usize,
    /// Prior mean dimension μ.
    #[arg(long, default_value_t = 10.0)]
    mu: f64,
    #[arg(long, default_value_t = 200.0)]
    m1: f64,
    #[arg(long, default_value_t = 20000.0)]
    m2: f64,
    /// Perturb probability.
    #[arg(long, default_value_t = 0.4)]
    pa: f64,
    /// Knot-move probability.
    #[arg(long, default_value_t = 0.3)]
    pb: f64,
    /// Initial random-walk scale; data-driven when omitted.
    #[arg(long)]
    sigma: Option<f64>,
    /// Perturb proposals per adaptation window.
    #[arg(long, default_value_t = 50)]
    adapt_window: u64,
    #[arg(long, default_value_t = 200_000)]
    iters: usize,
    #[arg(long, default_value_t = 100_000)]
    burnin: usize,
    #[arg(long, default_value_t = 10)]
    thin: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start at j = q with constant coefficients instead of a prior draw.
    #[arg(long)]
    init_flat: bool,
    /// Independent chains with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    chains: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    dump_config: bool,
}

#[derive(Args, Debug)]
struct SummarizeArgs {
    #[arg(long)]
    dump: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 512)]
    grid: usize,
    #[arg(long, default_value_t = 96)]
    hist_bins: usize,
    /// Writes PREFIX.band.csv, PREFIX.hist.csv and PREFIX.trace.csv.
    #[arg(long)]
    out_prefix: PathBuf,
    #[arg(long)]
    dump_config: bool,
}

#[derive(Args, Debug)]
struct DistancesArgs {
    #[arg(long)]
    a: IntensitySpec,
    #[arg(long)]
    b: IntensitySpec,
    /// Period for closed-form intensities.
    #[arg(long, default_value_t = 24.0)]
    period: f64,
    /// Bins per period for ρ; omitted when not given.
    #[arg(long)]
    bins: Option<usize>,
}

fn header(config: &str, seed: Option<u64>) -> Vec<String> {
    let mut h = vec![format!("poisspline {VERSION}")];
    if let Some(s) = seed {
        h.push(format!("seed={s}"));
    }
    h.push(format!("config {config}"));
    h
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{suffix}"),
    };
    path.with_file_name(name)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let config = format!("{args:?}");
    if args.dump_config {
        println!("{config}");
    }
    let bound = match (args.bound, args.intensity.sup()) {
        (Some(b), _) => b,
        (None, Some(s)) if s > 0.0 => s,
        (None, Some(_)) => 1.0,
        (None, None) => bail!("--bound is required for spline intensities"),
    };
    let intensity = args.intensity.build(args.period)?;
    if intensity.period() != args.period {
        bail!(
            "spline period {} differs from --period {}",
            intensity.period(),
            args.period
        );
    }
    let layout = DataLayout::new(args.period, 1, args.days)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let path = simulate_path(intensity.as_ref(), bound, &layout, &mut rng)?;
    let mut out = create(&args.out)?;
    write_events(&mut out, &header(&config, Some(args.seed)), &path)?;
    out.flush()?;
    println!("events: {}", path.len());
    Ok(())
}

fn build_likelihood(args: &FitArgs) -> Result<Likelihood> {
    if args.prior_only {
        return Ok(Likelihood::Flat);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x7468_696e);
    let lik = match (&args.counts, &args.events) {
        (Some(path), None) => {
            let days = args
                .days
                .ok_or_else(|| anyhow!("--days is required with --counts"))?;
            let layout = DataLayout::new(args.period, args.bins, days)?;
            let bc =
                load_counts(path, layout).with_context(|| format!("reading {}", path.display()))?;
            Likelihood::binned(match args.retain {
                Some(r) => thin_counts(&bc, r, &mut rng)?,
                None => bc,
            })
        }
        (None, Some(path)) => {
            let ep = load_events(path, args.period, args.bins, args.days)
                .with_context(|| format!("reading {}", path.display()))?;
            match args.likelihood {
                LikelihoodKind::Full => {
                    if args.retain.is_some() {
                        bail!("--retain applies to binned data only");
                    }
                    Likelihood::full(&ep)
                }
                LikelihoodKind::Binned => {
                    let bc = bin_events(&ep);
                    Likelihood::binned(match args.retain {
                        Some(r) => thin_counts(&bc, r, &mut rng)?,
                        None => bc,
                    })
                }
            }
        }
        (None, None) => bail!("one of --counts, --events or --prior-only is required"),
        (Some(_), Some(_)) => bail!("--counts and --events are mutually exclusive"),
    };
    Ok(lik)
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let config = format!("{args:?}");
    if args.dump_config {
        println!("{config}");
    }
    if args.chains == 0 {
        bail!("--chains must be at least 1");
    }
    let prior = PriorConfig::new(args.order, args.mu, args.m1, args.m2, args.period)?;
    let schedule = MoveSchedule::new(args.pa, args.pb, args.order, args.mu)?;
    let likelihood = build_likelihood(args)?;
    let sigma = args
        .sigma
        .unwrap_or_else(|| initial_sigma(&prior, &likelihood));
    let post = Posterior::new(prior, likelihood)?;
    let cfg = ChainConfig {
        schedule,
        sigma,
        adapt_window: args.adapt_window,
    };

    let run_one = |i: usize| -> Result<ChainRun> {
        let seed = args.seed + i as u64;
        let init = if args.init_flat {
            flat_init(&post.prior, &post.likelihood)?
        } else {
            sample_prior(
                &post.prior,
                &mut ChaCha8Rng::seed_from_u64(seed ^ 0x696e_6974),
            )
        };
        Ok(run_chain(
            &cfg,
            &post,
            init,
            args.iters,
            args.burnin,
            args.thin,
            seed,
        )?)
    };
    let runs: Vec<Result<ChainRun>> = if args.chains == 1 {
        vec![run_one(0)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..args.chains)
                .map(|i| {
                    let run_one = &run_one;
                    s.spawn(move || run_one(i))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("chain thread panicked"))
                .collect()
        })
    };

    for (i, run) in runs.into_iter().enumerate() {
        let run = run?;
        let seed = args.seed + i as u64;
        let path = if args.chains == 1 {
            args.out.clone()
        } else {
            with_suffix(&args.out, &format!("chain{}", i + 1))
        };
        let mut out = create(&path)?;
        write_dump(
            &mut out,
            &header(&config, Some(seed)),
            args.order,
            args.period,
            &run.draws,
        )?;
        out.flush()?;
        if args.chains > 1 {
            println!("chain {} (seed {seed}) -> {}", i + 1, path.display());
        }
        print!("{}", acceptance_table(&run.sampling_stats));
        println!("final sigma: {}", run.final_sigma);
    }
    Ok(())
}

fn cmd_summarize(args: &SummarizeArgs) -> Result<()> {
    let config = format!("{args:?}");
    if args.dump_config {
        println!("{config}");
    }
    let file =
        File::open(&args.dump).with_context(|| format!("opening {}", args.dump.display()))?;
    let dump = read_dump(file).with_context(|| format!("reading {}", args.dump.display()))?;
    if dump.draws.is_empty() {
        bail!("{} contains no draws", args.dump.display());
    }
    let h = header(&config, None);
    let b = band(&dump.draws, args.grid, args.level)?;
    let hist = knot_histogram(&dump.draws, args.hist_bins, dump.period)?;
    let trace = dim_trace(&dump.draws);
    let prefix = args.out_prefix.to_string_lossy();
    let mut out = create(Path::new(&format!("{prefix}.band.csv")))?;
    write_band(&mut out, &h, &b)?;
    out.flush()?;
    let mut out = create(Path::new(&format!("{prefix}.hist.csv")))?;
    write_histogram(&mut out, &h, &hist)?;
    out.flush()?;
    let mut out = create(Path::new(&format!("{prefix}.trace.csv")))?;
    write_trace(&mut out, &h, &trace)?;
    out.flush()?;
    print!("{}", acceptance_table(&trace.stats));
    Ok(())
}

fn cmd_distances(args: &DistancesArgs) -> Result<()> {
    let a = args.a.build(args.period)?;
    let b = args.b.build(args.period)?;
    if a.period() != b.period() {
        bail!("periods differ: {} vs {}", a.period(), b.period());
    }
    let layout = args
        .bins
        .map(|m| DataLayout::new(a.period(), m, 1))
        .transpose()?;
    let d = distances(a.as_ref(), b.as_ref(), layout.as_ref())?;
    println!("hellinger_sq,kl,variance_v,rho,sqrt_l2,sup");
    println!(
        "{},{},{},{},{},{}",
        d.hellinger_sq,
        d.kl,
        d.variance_v,
        d.rho.map(|r| r.to_string()).unwrap_or_default(),
        d.sqrt_l2,
        d.sup
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::Distances(a) => cmd_distances(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
