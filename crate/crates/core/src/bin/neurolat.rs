use clap::{Args, Parser, Subcommand, ValueEnum};
use neurolat::channel::{self, DecoderBundle, NoisePoint, SimMode, SimPlan};
use neurolat::decoder::{self, DecoderConfig, LlrMode};
use neurolat::format::fmt12;
use neurolat::lattice::{self, LatticeConfig, Vnr, VnrUnit};
use neurolat::tanner::{
    build_graph, gf2_rank, parse_alist, parse_culprits_file, random_regular, select_culprits, to_alist, CulpritSet, ParityCheckMatrix,
    TannerGraph,
};
use neurolat::trainer::{self, TrainConfig};
use neurolat::trellis::{build_trellis, parse_weights_file, TrellisSpec, WeightInit, WeightVector};
use neurolat::Error;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "neurolat", version, about = "Neural belief-propagation decoding of codes and Construction A lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print structural facts about a parity-check matrix.
    Analyze(AnalyzeArgs),
    /// Train decoder weights on the all-zero codeword.
    Train(TrainArgs),
    /// Decode one received vector.
    Decode(DecodeArgs),
    /// Monte Carlo BER/WER sweep.
    Simulate(SimulateArgs),
    /// Write a random regular parity-check matrix in alist format.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[arg(long)]
    col_weight: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Matchings drawn; the one with the fewest 4-cycles is kept.
    #[arg(long, default_value_t = 200)]
    attempts: usize,
    /// Alist output; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixArgs {
    /// Parity-check matrix in alist format.
    #[arg(long)]
    alist: PathBuf,
    /// Culprit edges, one 1-based `check var` pair per line.
    #[arg(long)]
    culprits_file: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    /// Also print the number of 4-cycles through each edge.
    #[arg(long)]
    edge_cycles: bool,
    /// Write per-edge cycle counts as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LlrModeArg {
    Initial,
    Updated,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitArg {
    Db,
    Linear,
}

impl From<UnitArg> for VnrUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Db => VnrUnit::Db,
            UnitArg::Linear => VnrUnit::Linear,
        }
    }
}

#[derive(Args)]
struct DecoderArgs {
    /// Decoding iterations; defaults to the weights file's value, else 4.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, value_enum, default_value = "initial")]
    llr_mode: LlrModeArg,
    /// Tanh-domain clipping margin.
    #[arg(long, default_value_t = 1e-12)]
    clip_eps: f64,
}

impl DecoderArgs {
    fn config(&self) -> DecoderConfig {
        DecoderConfig {
            llr_mode: match self.llr_mode {
                LlrModeArg::Initial => LlrMode::Initial,
                LlrModeArg::Updated => LlrMode::Updated,
            },
            clip_eps: self.clip_eps,
            ..Default::default()
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct WeightSource {
    /// Trained weights file.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Plain sum-product (all weights 1).
    #[arg(long)]
    unit_weights: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Gaussian,
    Constant,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    Code,
    Lattice,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    #[command(flatten)]
    decoder: DecoderArgs,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    /// Training noise level.
    #[arg(long)]
    vnr: f64,
    #[arg(long, value_enum)]
    vnr_unit: UnitArg,
    #[arg(long, value_enum, default_value = "lattice")]
    mode: ChannelArg,
    #[arg(long, default_value_t = 20)]
    batch: usize,
    #[arg(long, default_value_t = 1000)]
    max_steps: usize,
    #[arg(long, default_value_t = 10)]
    trend_window: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "gaussian")]
    init: InitArg,
    /// Mean of the gaussian initialization, or the constant value.
    #[arg(long, default_value_t = 1.0)]
    init_mean: f64,
    #[arg(long, default_value_t = 0.1)]
    init_std: f64,
    /// Weights file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Loss history CSV; defaults to `<out>.history.csv`.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecodeMode {
    /// The input vector already holds LLRs.
    Llr,
    Code,
    Lattice,
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    #[command(flatten)]
    decoder: DecoderArgs,
    #[command(flatten)]
    weights: WeightSource,
    /// Received vector: reals separated by whitespace or commas; `-` for stdin.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "lattice")]
    mode: DecodeMode,
    /// Noise level used to form LLRs in code and lattice modes.
    #[arg(long, conflicts_with = "vnr")]
    sigma: Option<f64>,
    #[arg(long, requires = "vnr_unit")]
    vnr: Option<f64>,
    #[arg(long, value_enum)]
    vnr_unit: Option<UnitArg>,
    #[arg(long, default_value_t = 4)]
    q: u32,
    /// Codeword to score against: `0` for all-zero, or n bits.
    #[arg(long)]
    reference: Option<String>,
    /// Print the multiloss gradient for every weight (reference defaults to 0).
    #[arg(long)]
    dump_gradients: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimModeArg {
    Code,
    Lattice,
    Uncoded,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    #[command(flatten)]
    decoder: DecoderArgs,
    #[command(flatten)]
    weights: WeightSource,
    #[arg(long, value_enum, default_value = "lattice")]
    mode: SimModeArg,
    /// Comma-separated VNR points.
    #[arg(long, value_delimiter = ',', required_unless_present = "sigma", requires = "vnr_unit")]
    vnr: Vec<f64>,
    #[arg(long, value_enum)]
    vnr_unit: Option<UnitArg>,
    /// Comma-separated noise standard deviations, instead of VNR points.
    #[arg(long, value_delimiter = ',', conflicts_with = "vnr")]
    sigma: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 100)]
    target_word_errors: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    q: u32,
    /// Transmit random codewords instead of the all-zero word.
    #[arg(long)]
    random_codewords: bool,
    /// Report CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Diverged { .. } | Error::Io(_) => 2,
            _ => 1,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 1, msg: msg.into() }
}

type CliResult<T> = Result<T, Failure>;

fn read_text(path: &Path) -> CliResult<String> {
    let read = if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin())
    } else {
        std::fs::read_to_string(path)
    };
    read.map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure { code: 2, msg: format!("cannot write {}: {e}", p.display()) }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn flag_echo() -> String {
    std::env::args().skip(1).collect::<Vec<_>>().join(" ")
}

fn run_metadata(h: &ParityCheckMatrix) -> Vec<String> {
    vec![
        format!("neurolat {}", env!("CARGO_PKG_VERSION")),
        format!("matrix_digest {}", h.digest()),
        format!("args {}", flag_echo()),
    ]
}

fn csv_with_trailer(csv: String, comments: &[String]) -> String {
    let mut out = csv;
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    out
}

struct Loaded {
    h: ParityCheckMatrix,
    graph: TannerGraph,
    culprits_override: Option<CulpritSet>,
}

fn load_matrix(args: &MatrixArgs) -> CliResult<Loaded> {
    let h = parse_alist(&read_text(&args.alist)?)?;
    h.warn_degenerate();
    let graph = build_graph(&h);
    let culprits_override = match &args.culprits_file {
        Some(p) => Some(parse_culprits_file(&read_text(p)?, &graph)?),
        None => None,
    };
    Ok(Loaded { h, graph, culprits_override })
}

fn warn_odd_checks(h: &ParityCheckMatrix) {
    let odd = h.odd_weight_rows();
    if !odd.is_empty() {
        log::warn!(
            "{} check(s) have odd weight; the tanh-domain check rule is sign-exact only for even-weight checks",
            odd.len()
        );
    }
}

/// Builds the decoder from either a weights file or unit weights.
fn load_decoder(m: &Loaded, d: &DecoderArgs, w: &WeightSource) -> CliResult<(TrellisSpec, WeightVector)> {
    warn_odd_checks(&m.h);
    match &w.weights {
        Some(path) => {
            let loaded = parse_weights_file(&read_text(path)?, &m.graph)?;
            if let Some(c) = &m.culprits_override {
                if c != &loaded.culprits {
                    return Err(usage("--culprits-file disagrees with the culprit edges in the weights file"));
                }
            }
            let spec = build_trellis(&m.graph, d.iters.unwrap_or(loaded.iterations), &loaded.culprits)?;
            Ok((spec, loaded.weights))
        }
        None => {
            let culprits = m.culprits_override.clone().unwrap_or_else(|| select_culprits(&m.graph));
            let spec = build_trellis(&m.graph, d.iters.unwrap_or(4), &culprits)?;
            let weights = WeightVector::unit(&spec);
            Ok((spec, weights))
        }
    }
}

fn cmd_analyze(args: &AnalyzeArgs) -> CliResult<()> {
    let m = load_matrix(&args.matrix)?;
    let g = &m.graph;
    let rank = gf2_rank(&m.h);
    let cycles = g.enumerate_4cycles();
    let culprits = m.culprits_override.clone().unwrap_or_else(|| select_culprits(g));
    let girth = |g: &TannerGraph| g.girth().map_or("inf".to_string(), |x| x.to_string());
    println!(
        "n={} m={} rank={} k={} E={} girth={} cycles4={} culprits={}",
        m.h.n_cols(),
        m.h.n_rows(),
        rank,
        m.h.n_cols() - rank,
        g.n_edges(),
        girth(g),
        cycles.len(),
        culprits.len()
    );
    for e in culprits.iter() {
        println!("culprit {e}");
    }
    let pruned = g.without_edges(&culprits.to_vec())?;
    println!(
        "after_removal girth={} cycles4={} params={}",
        girth(&pruned),
        pruned.enumerate_4cycles().len(),
        culprits.len() + g.n_edges()
    );
    let odd = m.h.odd_weight_rows();
    if !odd.is_empty() {
        println!("odd_weight_checks={}", odd.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(","));
    }
    if args.edge_cycles || args.out.is_some() {
        let counts = g.edge_cycle_counts();
        let mut csv = String::from("check,var,cycles4\n");
        for (e, c) in g.edges().iter().zip(&counts) {
            let _ = writeln!(csv, "{},{},{}", e.check + 1, e.var + 1, c);
        }
        if args.edge_cycles && args.out.is_none() {
            print!("{csv}");
        }
        if let Some(p) = &args.out {
            write_text(Some(p), &csv_with_trailer(csv, &run_metadata(&m.h)))?;
        }
    }
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> CliResult<()> {
    let m = load_matrix(&args.matrix)?;
    warn_odd_checks(&m.h);
    let culprits = m.culprits_override.clone().unwrap_or_else(|| select_culprits(&m.graph));
    let spec = build_trellis(&m.graph, args.decoder.iters.unwrap_or(4), &culprits)?;
    let dec_cfg = args.decoder.config();
    dec_cfg.validate()?;
    let cfg = TrainConfig {
        alpha: args.alpha,
        beta: args.beta,
        batch_size: args.batch,
        max_steps: args.max_steps,
        trend_window: args.trend_window,
        seed: args.seed,
        vnr: Vnr::new(args.vnr, args.vnr_unit.into())?,
        mode: match args.mode {
            ChannelArg::Code => SimMode::Code,
            ChannelArg::Lattice => SimMode::Lattice,
        },
        q: 4,
    };
    cfg.validate()?;
    let init = match args.init {
        InitArg::Gaussian => WeightInit::Gaussian { mean: args.init_mean, std: args.init_std },
        InitArg::Constant => WeightInit::Constant(args.init_mean),
    };
    let w0 = WeightVector::init(&spec, init, args.seed)?;
    let (weights, report) = trainer::train(&spec, w0, &dec_cfg, &cfg)?;

    let mut comments = run_metadata(&m.h);
    comments.push(format!("stop_reason {} steps {}", report.stop_reason, report.steps));
    if let Some(last) = report.losses.last() {
        comments.push(format!("final_mean_loss {}", fmt12(*last)));
    }
    write_text(args.out.as_deref(), &weights.to_file_string(&spec, &comments))?;
    let history = args.history.clone().or_else(|| {
        args.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".history.csv");
            PathBuf::from(s)
        })
    });
    if let Some(h) = history {
        write_text(Some(&h), &csv_with_trailer(report.history_csv(), &run_metadata(&m.h)))?;
    }
    eprintln!("stop_reason={} steps={}", report.stop_reason, report.steps);
    Ok(())
}

fn parse_reals(text: &str) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        for tok in content.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let v: f64 = tok
                .parse()
                .map_err(|_| Failure::from(Error::Parse { line: i + 1, msg: format!("`{tok}` is not a number") }))?;
            if !v.is_finite() {
                return Err(Error::Parse { line: i + 1, msg: format!("`{tok}` is not finite") }.into());
            }
            out.push(v);
        }
    }
    Ok(out)
}

fn parse_reference(s: &str, n: usize) -> CliResult<Vec<u8>> {
    let s = s.trim();
    if s == "0" {
        return Ok(vec![0; n]);
    }
    let bits: Vec<u8> = s
        .chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(usage(format!("reference contains `{other}`; expected bits"))),
        })
        .collect::<CliResult<_>>()?;
    if bits.len() != n {
        return Err(Error::Length { expected: n, found: bits.len() }.into());
    }
    Ok(bits)
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn cmd_decode(args: &DecodeArgs) -> CliResult<()> {
    let m = load_matrix(&args.matrix)?;
    let (spec, weights) = load_decoder(&m, &args.decoder, &args.weights)?;
    let cfg = args.decoder.config();
    cfg.validate()?;
    let y = parse_reals(&read_text(&args.input)?)?;
    let n = spec.n_vars();
    if y.len() != n {
        return Err(Error::Length { expected: n, found: y.len() }.into());
    }
    let lat = LatticeConfig::new(&m.h, args.q)?;
    let sigma = match (args.sigma, args.vnr, args.vnr_unit) {
        (Some(s), _, _) if s > 0.0 && s.is_finite() => Some(s),
        (Some(s), _, _) => return Err(usage(format!("--sigma must be positive, got {s}"))),
        (None, Some(v), Some(u)) => Some(lat.sigma(Vnr::new(v, u.into())?)),
        _ => None,
    };
    let sigma_required = || usage("code and lattice modes need --sigma or --vnr with --vnr-unit");

    let (llr, folded) = match args.mode {
        DecodeMode::Llr => (y.clone(), None),
        DecodeMode::Code => (channel::bpsk_llr(&y, sigma.ok_or_else(sigma_required)?), None),
        DecodeMode::Lattice => {
            let s = sigma.ok_or_else(sigma_required)?;
            let f = lattice::fold(&y, lat.q);
            (lattice::fold_llr(&f.a_hat, s), Some(f))
        }
    };
    let result = decoder::decode(&llr, &weights, &spec, &cfg)?;

    println!("n={} iterations_used={} converged={}", n, result.iterations_used, result.converged);
    if let Some(s) = sigma {
        println!("sigma={}", fmt12(s));
    }
    println!("hard_bits={}", join(&result.hard_bits));
    if let Some(f) = &folded {
        let x_hat = lattice::unfold(&result.hard_bits, &f.a, &f.z_hat, lat.q);
        println!("x_hat={}", join(&x_hat.0));
    }

    let reference = match (&args.reference, args.dump_gradients) {
        (Some(r), _) => Some(parse_reference(r, n)?),
        (None, true) => Some(vec![0; n]),
        (None, false) => None,
    };
    if let Some(c) = &reference {
        for (t, s) in result.states.iter().enumerate() {
            println!("loss[{}]={}", t + 1, fmt12(trainer::cross_entropy_logits(&s.o_pre, c)));
        }
    }
    if args.dump_gradients {
        let c = reference.as_deref().expect("set above");
        let (loss, grad) = trainer::forward_backward(&llr, &weights, &spec, &cfg, c)?;
        println!("multiloss={}", fmt12(loss));
        let edges = spec.graph().edges();
        for (e, g) in spec.culprit_edges().into_iter().zip(&grad.w) {
            println!("grad w {} {}", edges[e], fmt12(*g));
        }
        for (e, g) in edges.iter().zip(&grad.wp) {
            println!("grad wp {} {}", e, fmt12(*g));
        }
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let m = load_matrix(&args.matrix)?;
    let (spec, weights) = load_decoder(&m, &args.decoder, &args.weights)?;
    let cfg = args.decoder.config();
    cfg.validate()?;
    let points: Vec<NoisePoint> = if args.sigma.is_empty() {
        let unit: VnrUnit = args.vnr_unit.ok_or_else(|| usage("--vnr needs --vnr-unit"))?.into();
        args.vnr.iter().map(|&v| Vnr::new(v, unit).map(NoisePoint::Vnr)).collect::<Result<_, _>>()?
    } else {
        args.sigma.iter().map(|&s| NoisePoint::Sigma(s)).collect()
    };
    let plan = SimPlan {
        points,
        max_trials: args.trials,
        target_word_errors: args.target_word_errors,
        seed: args.seed,
        mode: match args.mode {
            SimModeArg::Code => SimMode::Code,
            SimModeArg::Lattice => SimMode::Lattice,
            SimModeArg::Uncoded => SimMode::Uncoded,
        },
        q: args.q,
        random_codewords: args.random_codewords,
        ..Default::default()
    };
    plan.validate()?;
    let bundle = DecoderBundle { spec: &spec, weights: &weights, cfg };
    let report = channel::run_montecarlo(&plan, Some(bundle))?;
    write_text(args.out.as_deref(), &csv_with_trailer(report.to_csv(), &run_metadata(&m.h)))
}

fn cmd_generate(args: &GenerateArgs) -> CliResult<()> {
    let h = random_regular(args.rows, args.cols, args.col_weight, args.seed, args.attempts)?;
    write_text(args.out.as_deref(), &to_alist(&h))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Train(a) => cmd_train(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
