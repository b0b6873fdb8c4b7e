use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::ToPrimitive;

use nnkc::analysis::{self, AnalysisError, Polarity, Unateness};
use nnkc::formats::{to_pgm_levels, Bitmap};
use nnkc::network::{self, CompileOptions, InputOrder, NetworkError, Precision};
use nnkc::neuron::{self, identity_binding, NeuronError, NeuronFile, RoundMode};
use nnkc::trainer::{self, LabeledDataset, TrainConfig};
use nnkc::{Instance, Manager, NodeRef, ObddError, VarId};

#[derive(Parser)]
#[command(name = "nnkc", version, about = "Compile binary neurons and networks to OBDDs and query them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a neuron file to an OBDD file.
    CompileNeuron {
        neuron: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Quantize real weights to this many decimals first.
        #[arg(long)]
        digits: Option<u32>,
        #[arg(long, value_enum, default_value = "truncate")]
        round: Round,
        /// `natural`, `reverse`, or comma-separated input indices from the top level down.
        #[arg(long, default_value = "natural")]
        order: String,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Compile a network model file to one OBDD file per output.
    CompileNet {
        model: PathBuf,
        /// Directory for `output_<i>.obdd` files.
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        digits: Option<u32>,
        #[arg(long, value_enum, default_value = "truncate")]
        round: Round,
        #[arg(long, value_enum, default_value = "row-major")]
        order: PixelOrder,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Evaluate an OBDD on an image.
    Eval {
        obdd: PathBuf,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Robustness queries.
    #[command(subcommand)]
    Robustness(RobustnessCmd),
    /// Smallest set of pixels that fixes the classification of an image.
    Explain {
        obdd: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        /// Image whose remaining pixels fill in the explanation.
        #[arg(long)]
        fool_fill: Option<PathBuf>,
        /// Where to write the filled-in image (default: stdout).
        #[arg(long)]
        fool_out: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Per-variable probability of being 1 given output 1, as CSV.
    Marginals {
        obdd: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Per-variable monotonicity labels, as CSV.
    Unate {
        obdd: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Train a single neuron on a dataset.
    Train {
        dataset: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Accuracy and node count of a neuron at increasing precision.
    Sweep {
        dataset: PathBuf,
        /// Neuron to sweep; trained on the dataset when absent.
        #[arg(long)]
        neuron: Option<PathBuf>,
        /// Dataset to measure accuracy on (default: the training dataset).
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        min_digits: u32,
        #[arg(long, default_value_t = 5)]
        max_digits: u32,
        #[arg(long, value_enum, default_value = "truncate")]
        round: Round,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Write a synthetic linearly separable dataset.
    Synth {
        #[arg(long)]
        features: usize,
        #[arg(long)]
        rows: usize,
        #[arg(long, default_value_t = 1)]
        margin: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Node count, support size and model count of an OBDD.
    Stats { obdd: PathBuf },
}

#[derive(Subcommand)]
enum RobustnessCmd {
    /// Flips needed to change the label of one image.
    Instance {
        obdd: PathBuf,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Exact robustness distribution over all inputs.
    Model {
        obdd: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        polarity: PolarityArg,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Largest robustness of any input.
    Max {
        obdd: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        polarity: PolarityArg,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Instances per robustness level, as CSV.
    Hist {
        obdd: PathBuf,
        #[arg(long, value_enum, default_value = "positive")]
        polarity: PolarityArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Mean robustness over the rows of a dataset.
    Average { obdd: PathBuf, dataset: PathBuf },
}

#[derive(Args)]
struct InputArgs {
    /// PBM (P1) image.
    #[arg(required_unless_present = "bits", conflicts_with = "bits")]
    image: Option<PathBuf>,
    /// Input bits as a 0/1 string, variable 0 first.
    #[arg(long)]
    bits: Option<String>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write a greymap.
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    l2: f64,
}

impl TrainArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            epochs: self.epochs,
            batch_size: self.batch,
            seed: self.seed,
            l2: self.l2,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Round {
    Truncate,
    Nearest,
}

impl From<Round> for RoundMode {
    fn from(r: Round) -> Self {
        match r {
            Round::Truncate => RoundMode::Truncate,
            Round::Nearest => RoundMode::Nearest,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PixelOrder {
    RowMajor,
    ColumnMajor,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolarityArg {
    Positive,
    Negative,
    Both,
}

impl From<PolarityArg> for Polarity {
    fn from(p: PolarityArg) -> Self {
        match p {
            PolarityArg::Positive => Polarity::Positive,
            PolarityArg::Negative => Polarity::Negative,
            PolarityArg::Both => Polarity::Both,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(if is_budget(&e) { 3 } else { 2 })
        }
    }
}

fn is_budget(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(c.downcast_ref::<ObddError>(), Some(ObddError::NodeBudgetExceeded { .. }))
            || matches!(c.downcast_ref::<NetworkError>(), Some(NetworkError::Budget { .. }))
            || matches!(c.downcast_ref::<NeuronError>(), Some(NeuronError::Obdd(ObddError::NodeBudgetExceeded { .. })))
            || matches!(
                c.downcast_ref::<AnalysisError>(),
                Some(AnalysisError::Obdd(ObddError::NodeBudgetExceeded { .. }))
            )
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{}", text);
            Ok(())
        }
    }
}

fn load_obdd(path: &Path, budget: Option<usize>) -> Result<(Manager, NodeRef)> {
    let (mut m, f) = Manager::from_text(&read(path)?).with_context(|| format!("loading {}", path.display()))?;
    // the budget bounds nodes built by the query on top of the loaded diagram
    m.set_node_budget(budget.map(|b| b.saturating_add(m.total_nodes())));
    Ok((m, f))
}

fn load_input(args: &InputArgs, n: usize) -> Result<Instance> {
    let x = match (&args.bits, &args.image) {
        (Some(bits), _) => Instance::new(
            bits.chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(anyhow!("--bits: `{}` is not 0 or 1", other)),
                })
                .collect::<Result<_>>()?,
        ),
        (None, Some(path)) => load_image(path)?.to_instance(),
        (None, None) => unreachable!("clap requires one input"),
    };
    if x.len() != n {
        bail!("input has {} bits, the diagram has {} variables", x.len(), n);
    }
    Ok(x)
}

fn load_image(path: &Path) -> Result<Bitmap> {
    Bitmap::parse_pbm(&read(path)?).with_context(|| format!("reading image {}", path.display()))
}

fn parse_order(spec: &str, n: usize) -> Result<Vec<VarId>> {
    match spec {
        "natural" => Ok(identity_binding(n)),
        "reverse" => Ok((0..n as u32).rev().map(VarId).collect()),
        list => list
            .split(',')
            .map(|t| t.trim().parse::<u32>().map(VarId).map_err(|_| anyhow!("--order: bad index `{}`", t)))
            .collect(),
    }
}

fn grid_dims(grid: &GridArgs, n: usize) -> Result<(usize, usize)> {
    let (rows, cols) = match (grid.rows, grid.cols) {
        (Some(r), Some(c)) => (r, c),
        (Some(r), None) if r > 0 => (r, n / r),
        (None, Some(c)) if c > 0 => (n / c, c),
        (None, None) => (1, n),
        _ => bail!("grid dimensions must be positive"),
    };
    if rows * cols != n {
        bail!("a {}×{} grid does not match {} variables", rows, cols, n);
    }
    Ok((rows, cols))
}

fn decimal(q: &BigRational) -> String {
    format!("{} ({})", q, q.to_f64().unwrap_or(f64::NAN))
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::CompileNeuron { neuron, output, digits, round, order, budget } => {
            let file = neuron::parse_neuron(&read(&neuron)?).context("parsing neuron")?;
            let n = file.arity();
            let mut m = Manager::with_order(&parse_order(&order, n)?).context("--order")?;
            m.set_node_budget(budget);
            let vars = identity_binding(n);
            let f = match (&file, digits) {
                (NeuronFile::Real(u), Some(d)) => {
                    let q = neuron::quantize(u, d, round.into())?;
                    neuron::compile_pseudo(&mut m, &q, &vars)?
                }
                (NeuronFile::Real(u), None) => neuron::compile_exact(&mut m, u, &vars)?,
                (NeuronFile::Int(u), None) => neuron::compile_pseudo(&mut m, u, &vars)?,
                (NeuronFile::Int(_), Some(_)) => bail!("--digits applies to real-valued neurons only"),
            };
            write(&output, &m.to_text(f)?)?;
            println!("nodes {}", m.node_count(f)?);
        }
        Command::CompileNet { model, output, digits, round, order, budget } => {
            let spec = network::load_spec(&read(&model)?).context("loading model")?;
            for u in spec.uncovered() {
                eprintln!("warning: layer {} never reads {} of its input positions", u.layer, u.positions.len());
            }
            let opts = CompileOptions {
                precision: match digits {
                    Some(d) => Precision::Digits { digits: d, mode: round.into() },
                    None => Precision::Exact,
                },
                order: match order {
                    PixelOrder::RowMajor => InputOrder::RowMajor,
                    PixelOrder::ColumnMajor => InputOrder::ColumnMajor,
                },
                node_budget: budget,
                reverse_placeholders: false,
            };
            let c = network::compile_network(&spec, &opts)?;
            fs::create_dir_all(&output).with_context(|| format!("creating {}", output.display()))?;
            for (i, &f) in c.outputs.iter().enumerate() {
                write(&output.join(format!("output_{}.obdd", i)), &c.manager.to_text(f)?)?;
                println!("output {}: {} nodes", i, c.manager.node_count(f)?);
            }
        }
        Command::Eval { obdd, input } => {
            let (m, f) = load_obdd(&obdd, None)?;
            let x = load_input(&input, m.num_vars())?;
            println!("{}", u8::from(m.evaluate(f, &x)?));
        }
        Command::Robustness(r) => robustness(r)?,
        Command::Explain { obdd, input, fool_fill, fool_out, budget } => {
            let (mut m, f) = load_obdd(&obdd, budget)?;
            let x = load_input(&input, m.num_vars())?;
            let e = analysis::pi_explanation(&mut m, f, &x)?;
            println!("label {}", u8::from(e.label));
            println!("cardinality {}", e.cardinality());
            println!("literals {}", e.literals);
            if let Some(fill) = fool_fill {
                let bmp = load_image(&fill)?;
                let z = analysis::fooling_complete(&mut m, f, &e.literals, &bmp.to_instance())?;
                let out = Bitmap::from_instance(&z, bmp.height, bmp.width).expect("same size");
                write_or_print(fool_out.as_deref(), &out.to_pbm())?;
            }
        }
        Command::Marginals { obdd, grid } => {
            let (mut m, f) = load_obdd(&obdd, None)?;
            let n = m.num_vars();
            let (rows, cols) = grid_dims(&grid, n)?;
            let values = analysis::marginals(&mut m, f, n)?;
            if let Some(p) = &grid.pgm {
                write(p, &analysis::marginals_pgm(&values, rows, cols))?;
            }
            write_or_print(grid.output.as_deref(), &analysis::marginals_csv(&values, cols))?;
        }
        Command::Unate { obdd, grid } => {
            let (mut m, f) = load_obdd(&obdd, None)?;
            let (rows, cols) = grid_dims(&grid, m.num_vars())?;
            let labels = analysis::unateness_all(&mut m, f)?;
            if let Some(p) = &grid.pgm {
                let levels: Vec<u8> = labels
                    .iter()
                    .map(|u| match u {
                        Unateness::PosUnate => 255,
                        Unateness::NegUnate => 0,
                        Unateness::NonUnate => 170,
                        Unateness::Unused => 85,
                    })
                    .collect();
                write(p, &to_pgm_levels(&levels, rows, cols))?;
            }
            write_or_print(grid.output.as_deref(), &analysis::unateness_csv(&labels, cols))?;
        }
        Command::Train { dataset, output, train } => {
            let data = LabeledDataset::from_csv(&read(&dataset)?).context("reading dataset")?;
            let u = trainer::train_neuron(&data, &train.config())?;
            write(&output, &u.to_string())?;
            let acc = trainer::accuracy(&u.exact()?, &data)?;
            println!("train accuracy {}", *acc.numer() as f64 / *acc.denom() as f64);
        }
        Command::Sweep { dataset, neuron: neuron_path, test, min_digits, max_digits, round, budget, output, train } => {
            let data = LabeledDataset::from_csv(&read(&dataset)?).context("reading dataset")?;
            let u = match neuron_path {
                Some(p) => match neuron::parse_neuron(&read(&p)?)? {
                    NeuronFile::Real(u) => u,
                    NeuronFile::Int(_) => bail!("sweep needs a real-valued neuron"),
                },
                None => trainer::train_neuron(&data, &train.config())?,
            };
            let eval = match test {
                Some(p) => LabeledDataset::from_csv(&read(&p)?).context("reading test dataset")?,
                None => data,
            };
            let rows = trainer::precision_sweep(&u, &eval, min_digits..=max_digits, round.into(), budget)?;
            write_or_print(output.as_deref(), &trainer::sweep_csv(&rows))?;
        }
        Command::Synth { features, rows, margin, seed, output } => {
            if features == 0 || rows == 0 {
                bail!("--features and --rows must be positive");
            }
            write(&output, &trainer::separable_dataset(features, rows, margin, seed).to_csv())?;
        }
        Command::Stats { obdd } => {
            let (mut m, f) = load_obdd(&obdd, None)?;
            let n = m.num_vars();
            println!("vars {}", n);
            println!("nodes {}", m.node_count(f)?);
            println!("support {}", m.support(f)?.len());
            println!("models {}", m.model_count(f, n)?);
        }
    }
    Ok(())
}

fn robustness(cmd: RobustnessCmd) -> Result<()> {
    match cmd {
        RobustnessCmd::Instance { obdd, input } => {
            let (m, f) = load_obdd(&obdd, None)?;
            let x = load_input(&input, m.num_vars())?;
            println!("{}", analysis::instance_robustness(&m, f, &x)?);
        }
        RobustnessCmd::Model { obdd, polarity, budget } => {
            let (mut m, f) = load_obdd(&obdd, budget)?;
            if f.is_terminal() {
                println!("mr inf");
                return Ok(());
            }
            let n = m.num_vars();
            let p = analysis::model_robustness(&mut m, f, n, polarity.into())?;
            for (name, part) in [("positive", &p.positive), ("negative", &p.negative)] {
                if let Some(part) = part {
                    println!("{}_instances {}", name, part.instances);
                    println!("{}_sum {}", name, part.sum);
                    println!("{}_max {}", name, part.max());
                    println!("{}_mean {}", name, decimal(&part.mean()));
                }
            }
            println!("mr_over_all_inputs {}", decimal(&p.mr()));
            println!("mr_over_covered_inputs {}", decimal(&p.mr_covered()));
            println!("max {}", p.max());
        }
        RobustnessCmd::Max { obdd, polarity, budget } => {
            let (mut m, f) = load_obdd(&obdd, budget)?;
            if f.is_terminal() {
                println!("inf");
            } else {
                println!("{}", analysis::max_robustness(&mut m, f, polarity.into())?);
            }
        }
        RobustnessCmd::Hist { obdd, polarity, output, budget } => {
            let (mut m, f) = load_obdd(&obdd, budget)?;
            let n = m.num_vars();
            let p = analysis::model_robustness(&mut m, f, n, polarity.into())?;
            let rows = analysis::robustness_histogram(&p);
            write_or_print(output.as_deref(), &analysis::histogram_csv(&rows))?;
        }
        RobustnessCmd::Average { obdd, dataset } => {
            let (m, f) = load_obdd(&obdd, None)?;
            let data = LabeledDataset::from_csv(&read(&dataset)?).context("reading dataset")?;
            if data.features() != m.num_vars() {
                bail!("dataset has {} features, the diagram has {} variables", data.features(), m.num_vars());
            }
            let avg = analysis::dataset_average_robustness(&m, f, data.instances())?;
            println!("{}", decimal(&avg));
        }
    }
    Ok(())
}
