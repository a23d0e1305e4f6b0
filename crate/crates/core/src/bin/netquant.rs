use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use netquant::analysis::{self, Distance, ExpressionMatrix, Subset};
use netquant::driver::{self, GeneOrder, Init, NetRstqOptions};
use netquant::em::EmOptions;
use netquant::io::{self, QuantTable, TruthTable};
use netquant::model::{CompatibilitySet, TranscriptCatalog, TranscriptNetwork};
use netquant::regalt::{self, RegInit, RegOptions};
use netquant::sim::{self, OverlapModel, SyntheticParams, TruthParams};
use netquant::{netbuild, Error, Result};

#[derive(Parser)]
#[command(
    name = "netquant",
    version,
    about = "Isoform quantification with network-derived priors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate isoform abundances from read compatibility.
    Quant(QuantArgs),
    /// Estimate abundances with the network-penalized joint objective.
    RegQuant(RegQuantArgs),
    /// Build a transcript network from domain annotations and domain interactions.
    BuildNetwork(BuildNetworkArgs),
    /// Print network statistics.
    NetStats(NetStatsArgs),
    /// Permute transcript labels of a network, keeping its shape.
    Randomize(RandomizeArgs),
    /// Delete a random fraction of network edges.
    DeleteEdges(DeleteEdgesArgs),
    /// Simulate ground-truth expression and reads.
    Simulate(SimulateArgs),
    /// Bin transcript pairs by co-expression and count network neighbors.
    Coexpress(CoexpressArgs),
    /// Correlate two expression estimates.
    Compare(CompareArgs),
}

#[derive(Args)]
struct ReadInputs {
    #[arg(long)]
    transcripts: PathBuf,
    #[arg(long)]
    compat: PathBuf,
    /// Read length used to derive sampling probabilities.
    #[arg(long)]
    read_length: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    BaseEm,
    NetRstq,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Uniform,
    BaseEm,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Fixed,
    Shuffled,
}

#[derive(Args)]
struct QuantArgs {
    #[command(flatten)]
    inputs: ReadInputs,
    #[arg(long, value_enum, default_value = "net-rstq")]
    method: Method,
    /// Required for net-rstq.
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "base-em")]
    init: InitArg,
    #[arg(long, default_value_t = 1e-6)]
    outer_tol: f64,
    #[arg(long, default_value_t = 100)]
    max_rounds: usize,
    #[arg(long, value_enum, default_value = "fixed")]
    order: OrderArg,
    /// Seeds the gene order when it is shuffled.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output quant.tsv; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the log pseudo-likelihood after every gene visit.
    #[arg(long)]
    trajectory: Option<PathBuf>,
}

#[derive(Args)]
struct RegQuantArgs {
    #[command(flatten)]
    inputs: ReadInputs,
    #[arg(long)]
    network: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    lambda_reg: f64,
    #[arg(long, value_enum, default_value = "base-em")]
    init: InitArg,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildNetworkArgs {
    #[arg(long)]
    transcripts: PathBuf,
    #[arg(long)]
    domains: PathBuf,
    #[arg(long)]
    ddi: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NetworkInputs {
    #[arg(long)]
    transcripts: PathBuf,
    #[arg(long)]
    network: PathBuf,
}

#[derive(Args)]
struct NetStatsArgs {
    #[command(flatten)]
    inputs: NetworkInputs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RandomizeArgs {
    #[command(flatten)]
    inputs: NetworkInputs,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DeleteEdgesArgs {
    #[command(flatten)]
    inputs: NetworkInputs,
    #[arg(long)]
    fraction: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OverlapArg {
    Exclusive,
    SharedPrefix,
}

#[derive(Args)]
struct SimulateArgs {
    /// Existing catalog; requires --network.
    #[arg(long, requires = "network", conflicts_with = "synthetic_genes")]
    transcripts: Option<PathBuf>,
    #[arg(long)]
    network: Option<PathBuf>,
    /// Generate a random catalog, domains and interactions with this many
    /// genes instead of reading them.
    #[arg(long, required_unless_present = "transcripts")]
    synthetic_genes: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    reads: usize,
    #[arg(long, default_value_t = 100)]
    read_length: u32,
    #[arg(long, value_enum, default_value = "exclusive")]
    overlap: OverlapArg,
    /// Fraction of reads falling in regions shared by all isoforms of a gene.
    #[arg(long, default_value_t = 0.5)]
    ambiguity: f64,
    #[arg(long, default_value_t = 50.0)]
    poisson_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    sim_alpha: f64,
    /// Defaults to a tenth of the Poisson mean.
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long, default_value_t = -0.6, allow_negative_numbers = true)]
    powerlaw_exponent: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CoexpressArgs {
    #[command(flatten)]
    inputs: NetworkInputs,
    /// Matrix with a transcript_id column followed by one column per sample.
    #[arg(long, conflicts_with = "quant")]
    matrix: Option<PathBuf>,
    /// quant.tsv files, one per sample; their pi columns form the matrix.
    #[arg(long, required_unless_present = "matrix")]
    quant: Vec<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    bin_size: usize,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    distance: u8,
    #[arg(long, default_value_t = 10)]
    top_bins: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SubsetArg {
    DifferentNeighbors,
    AllMultiIsoform,
    All,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    inputs: NetworkInputs,
    /// quant.tsv
    #[arg(long)]
    estimate: PathBuf,
    /// quant.tsv, or truth.tsv whose expected_pi column is used.
    #[arg(long)]
    other: PathBuf,
    #[arg(long, value_enum, default_value = "different-neighbors")]
    subset: SubsetArg,
}

fn name(path: &Path) -> String {
    path.display().to_string()
}

fn load_catalog(path: &Path) -> Result<TranscriptCatalog> {
    io::parse_transcripts(&io::read_file(path)?, &name(path))
}

fn load_network(path: &Path, catalog: &TranscriptCatalog) -> Result<TranscriptNetwork> {
    io::parse_network(&io::read_file(path)?, &name(path), catalog)
}

fn load_reads(inputs: &ReadInputs) -> Result<(TranscriptCatalog, CompatibilitySet)> {
    let catalog = load_catalog(&inputs.transcripts)?;
    let compat = io::parse_compat(
        &io::read_file(&inputs.compat)?,
        &name(&inputs.compat),
        &catalog,
        inputs.read_length,
    )?;
    Ok((catalog, compat))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => io::write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn quant(args: QuantArgs) -> Result<()> {
    let (catalog, compat) = load_reads(&args.inputs)?;
    let state = match args.method {
        Method::BaseEm => driver::base_em_all(&catalog, &compat, &EmOptions::default())?,
        Method::NetRstq => {
            let path = args
                .network
                .as_deref()
                .ok_or_else(|| Error::Invalid("net-rstq needs --network".into()))?;
            let network = load_network(path, &catalog)?;
            let opts = NetRstqOptions {
                lambda: args.lambda,
                init: match args.init {
                    InitArg::Uniform => Init::Uniform,
                    InitArg::BaseEm => Init::BaseEm,
                },
                outer_tol: args.outer_tol,
                max_rounds: args.max_rounds,
                em: EmOptions::default(),
                order: match args.order {
                    OrderArg::Fixed => GeneOrder::Fixed,
                    OrderArg::Shuffled => GeneOrder::Shuffled,
                },
                seed: args.seed,
            };
            let mut report = |p: &driver::Progress| {
                log::trace!(
                    "round {} gene {} accepted {} delta {}",
                    p.round,
                    p.gene,
                    p.accepted,
                    p.delta_log_likelihood
                );
            };
            let run = driver::net_rstq(&catalog, &compat, &network, &opts, Some(&mut report))?;
            log::info!(
                "{} rounds, converged: {}, accepted updates: {}",
                run.rounds,
                run.converged,
                run.accepted.iter().sum::<usize>()
            );
            if !run.converged {
                log::warn!("stopped after {} rounds without converging", run.rounds);
            }
            if let Some(path) = &args.trajectory {
                let mut text = String::from("step\tlog_pseudo_likelihood\n");
                for (i, v) in run.trajectory.iter().enumerate() {
                    text.push_str(&format!("{i}\t{}\n", io::format_sig10(*v)));
                }
                io::write_file(path, &text)?;
            }
            run.state
        }
    };
    emit(
        args.out.as_deref(),
        &io::format_quant(&QuantTable::from_state(&catalog, &state)),
    )
}

fn reg_quant(args: RegQuantArgs) -> Result<()> {
    let (catalog, compat) = load_reads(&args.inputs)?;
    let network = load_network(&args.network, &catalog)?;
    let opts = RegOptions {
        lambda_reg: args.lambda_reg,
        tol: args.tol,
        max_iter: args.max_iter,
        init: match args.init {
            InitArg::Uniform => RegInit::Uniform,
            InitArg::BaseEm => RegInit::BaseEm,
        },
    };
    let result = regalt::solve_penalized(&catalog, &compat, &network, &opts)?;
    log::info!("{} iterations, converged: {}", result.iterations, result.converged);
    if result.stalled {
        log::warn!("step size underflowed before convergence");
    }
    emit(
        args.out.as_deref(),
        &io::format_quant(&QuantTable::from_state(&catalog, &result.state)),
    )
}

fn build_network(args: BuildNetworkArgs) -> Result<()> {
    let catalog = load_catalog(&args.transcripts)?;
    let domains = io::parse_domains(&io::read_file(&args.domains)?, &name(&args.domains))?;
    let ddi = io::parse_ddi(&io::read_file(&args.ddi)?, &name(&args.ddi))?;
    let network = netbuild::build_network(&catalog, &domains, &ddi)?;
    emit(args.out.as_deref(), &io::format_network(&network, &catalog))
}

fn net_stats(args: NetStatsArgs) -> Result<()> {
    let catalog = load_catalog(&args.inputs.transcripts)?;
    let network = load_network(&args.inputs.network, &catalog)?;
    emit(
        args.out.as_deref(),
        &io::network_stats_report(&netbuild::network_stats(&network)),
    )
}

fn randomize(args: RandomizeArgs) -> Result<()> {
    let catalog = load_catalog(&args.inputs.transcripts)?;
    let network = load_network(&args.inputs.network, &catalog)?;
    let shuffled = netbuild::randomize_network(&network, args.seed)?;
    emit(args.out.as_deref(), &io::format_network(&shuffled, &catalog))
}

fn delete_edges(args: DeleteEdgesArgs) -> Result<()> {
    let catalog = load_catalog(&args.inputs.transcripts)?;
    let network = load_network(&args.inputs.network, &catalog)?;
    let thinned = netbuild::delete_edges(&network, args.fraction, args.seed)?;
    emit(args.out.as_deref(), &io::format_network(&thinned, &catalog))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out_dir).map_err(|source| Error::Io {
        path: args.out_dir.clone(),
        source,
    })?;
    let out = |file: &str| args.out_dir.join(file);
    let (catalog, network) = match (&args.transcripts, &args.network, args.synthetic_genes) {
        (Some(t), Some(n), _) => {
            let catalog = load_catalog(t)?;
            let network = load_network(n, &catalog)?;
            (catalog, network)
        }
        (None, _, Some(n_genes)) => {
            let params = SyntheticParams {
                n_genes,
                ..Default::default()
            };
            let (catalog, domains, ddi) = sim::synthetic_instance(&params, args.seed)?;
            let network = netbuild::build_network(&catalog, &domains, &ddi)?;
            io::write_file(&out("transcripts.tsv"), &io::format_transcripts(&catalog))?;
            io::write_file(&out("domains.tsv"), &io::format_domains(&domains))?;
            io::write_file(&out("ddi.tsv"), &io::format_ddi(&ddi))?;
            io::write_file(&out("network.tsv"), &io::format_network(&network, &catalog))?;
            (catalog, network)
        }
        _ => {
            return Err(Error::Invalid(
                "simulate needs --transcripts and --network, or --synthetic-genes".into(),
            ))
        }
    };
    let params = TruthParams {
        poisson_mean: args.poisson_mean,
        sim_alpha: args.sim_alpha,
        noise_sigma: args.noise_sigma.unwrap_or(0.1 * args.poisson_mean),
        powerlaw_exponent: args.powerlaw_exponent,
    };
    let truth = sim::generate_truth(&catalog, &network, &params, args.seed)?;
    let overlap = match args.overlap {
        OverlapArg::Exclusive => OverlapModel::Exclusive,
        OverlapArg::SharedPrefix => OverlapModel::SharedPrefix {
            ambiguity: args.ambiguity,
        },
    };
    // reads use a stream independent of the truth draw
    let compat = sim::sample_compat(
        &truth,
        &catalog,
        args.reads,
        args.read_length,
        overlap,
        args.seed ^ 0x005e_ed0f_2ead,
    )?;
    let expected = sim::expected_expression(&truth, &catalog, args.reads, args.read_length)?;
    io::write_file(
        &out("truth.tsv"),
        &io::format_truth(&TruthTable::from_truth(&catalog, &truth, &expected)),
    )?;
    io::write_file(&out("compat.tsv"), &io::format_compat(&compat, &catalog))
}

fn coexpress(args: CoexpressArgs) -> Result<()> {
    let catalog = load_catalog(&args.inputs.transcripts)?;
    let network = load_network(&args.inputs.network, &catalog)?;
    let matrix = match &args.matrix {
        Some(path) => io::parse_expression_matrix(&io::read_file(path)?, &name(path), &catalog)?,
        None => {
            let mut rows = vec![Vec::with_capacity(args.quant.len()); catalog.n_transcripts()];
            let mut samples = Vec::with_capacity(args.quant.len());
            for path in &args.quant {
                let table = io::parse_quant(&io::read_file(path)?, &name(path))?;
                for (row, v) in rows.iter_mut().zip(table.expression(&catalog, &name(path))?) {
                    row.push(v);
                }
                samples.push(
                    path.file_stem()
                        .map_or_else(|| name(path), |s| s.to_string_lossy().into_owned()),
                );
            }
            ExpressionMatrix { samples, rows }
        }
    };
    let distance = if args.distance == 1 {
        Distance::Neighbors
    } else {
        Distance::WithinTwo
    };
    let bins = analysis::coexpression_bins(&matrix, &network, args.bin_size, distance)?;
    let test = analysis::chi_square_enrichment(&bins, args.top_bins)?;
    if test.low_expected {
        log::warn!("an expected count is below 5; the chi-square approximation is unreliable");
    }
    std::fs::create_dir_all(&args.out_dir).map_err(|source| Error::Io {
        path: args.out_dir.clone(),
        source,
    })?;
    io::write_file(&args.out_dir.join("bins.tsv"), &io::format_bins(&bins))?;
    let report = io::format_report(&[
        ("total_pairs", bins.total_pairs.to_string()),
        ("total_adjacent", bins.total_adjacent.to_string()),
        ("excluded_transcripts", bins.excluded_transcripts.to_string()),
        ("tail_pairs", bins.tail_pairs.to_string()),
        ("tail_adjacent", bins.tail_adjacent.to_string()),
        ("baseline_per_bin", io::format_sig10(bins.baseline)),
        ("top_bins", args.top_bins.to_string()),
        ("top_adjacent", (test.table[0][0] as usize).to_string()),
        ("chi_square", io::format_sig10(test.statistic)),
        ("p_value", io::format_sig10(test.p_value)),
        ("low_expected_warning", test.low_expected.to_string()),
    ]);
    io::write_file(&args.out_dir.join("report.tsv"), &report)
}

fn load_expression(path: &Path, catalog: &TranscriptCatalog) -> Result<Vec<f64>> {
    let text = io::read_file(path)?;
    if text.starts_with(io::TRUTH_HEADER) {
        io::parse_truth(&text, &name(path))?.expected_expression(catalog, &name(path))
    } else {
        io::parse_quant(&text, &name(path))?.expression(catalog, &name(path))
    }
}

fn compare(args: CompareArgs) -> Result<()> {
    let catalog = load_catalog(&args.inputs.transcripts)?;
    let network = load_network(&args.inputs.network, &catalog)?;
    let estimate = load_expression(&args.estimate, &catalog)?;
    let other = load_expression(&args.other, &catalog)?;
    let subset = match args.subset {
        SubsetArg::DifferentNeighbors => Subset::DifferentNeighbors,
        SubsetArg::AllMultiIsoform => Subset::AllMultiIsoform,
        SubsetArg::All => Subset::All,
    };
    let r = analysis::compare_quant(&estimate, &other, &catalog, &network, subset)?;
    println!("{}", io::format_sig10(r));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Quant(a) => quant(a),
        Command::RegQuant(a) => reg_quant(a),
        Command::BuildNetwork(a) => build_network(a),
        Command::NetStats(a) => net_stats(a),
        Command::Randomize(a) => randomize(a),
        Command::DeleteEdges(a) => delete_edges(a),
        Command::Simulate(a) => simulate(a),
        Command::Coexpress(a) => coexpress(a),
        Command::Compare(a) => compare(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
