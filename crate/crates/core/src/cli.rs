//! Command-line front end: reads channels and experiment settings, runs one
//! computation and writes CSV/JSON artifacts into an output directory.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::builtin;
use crate::error::{Error, Result};
use crate::info::{entropy, mutual_information};
use crate::output::write_atomic;
use crate::prob::{Channel, Pmf};
use crate::regions::{
    game_region, limited_memory_region, local_randomness_region, necessary_conditional_entropy,
    public_channel_region, synthesis_region, wyner_common_information, AuxDecomposition,
    OptimizerConfig, Payoff, RatePoint, RegionBoundary,
};
use crate::softcover::{exponents, soft_decay, Trials};
use crate::synthesis::{tv_decay_experiment_with, TvMode};

/// Exit status for malformed input or a missing file.
pub const EXIT_PARSE: i32 = 2;
/// Exit status for infeasible requests and exhausted budgets.
pub const EXIT_INFEASIBLE: i32 = 3;
/// Exit status for internal invariant violations.
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "synthcap", version, about = "Channel synthesis and soft-covering toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Directory receiving the artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed for every random choice; required by stochastic commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON file with `optimizer` and `simulation` blocks.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Also write a gnuplot script next to each CSV.
    #[arg(long, global = true)]
    pub gnuplot: bool,
}

/// Where the target `(q_X, q_{Y|X})` comes from.
#[derive(Debug, Clone, Args)]
pub struct Source {
    /// JSON channel file: `{"input": Pmf, "channel": Channel}` or a bare Channel
    /// (uniform input).
    #[arg(long, conflicts_with = "builtin")]
    pub channel: Option<PathBuf>,
    /// Builtin example, e.g. `--builtin erasure 0.5`.
    #[arg(long, num_args = 2, value_names = ["NAME", "ARG"])]
    pub builtin: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Synthesis,
    Public,
    LocalRandomness,
    LimitedMemory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AuxChoice {
    /// `U = Y`, always a valid decomposition.
    Output,
    /// The decomposition attaining the common information.
    CommonInfo,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal (R, R0) boundary sampled on a rate grid.
    Region {
        #[command(flatten)]
        source: Source,
        /// Number of rate samples between I(X;Y) and min(H(X), H(Y)).
        #[arg(long, default_value_t = 20)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = Variant::Synthesis)]
        variant: Variant,
        /// Memory fraction for the limited-memory variant.
        #[arg(long, default_value_t = 1.0)]
        memory: f64,
    },
    /// Common information and necessary conditional entropy of the target.
    CommonInfo {
        #[command(flatten)]
        source: Source,
    },
    /// Distance of random synthesis codes from the target over block lengths.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        rate0: Option<f64>,
        /// Comma-separated block lengths.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        /// Number of codebook seeds per block length.
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long, value_enum)]
        aux: Option<AuxChoice>,
        /// Monte Carlo pairs per code; exact evaluation when absent.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Expected soft-covering distance against the exponential bound.
    Softcover {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        rate: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        n_list: Vec<usize>,
        /// Number of random codebooks, or `exhaustive`.
        #[arg(long, default_value = "200")]
        trials: String,
    },
    /// Decay exponents and Rényi information curves.
    Exponent {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        rate: f64,
    },
    /// Rate-payoff tradeoff of the zero-sum game.
    Game {
        /// JSON array `payoff[x][y][z]`.
        #[arg(long)]
        payoff: PathBuf,
        #[arg(long, default_value_t = 20)]
        grid: usize,
    },
}

/// Contents of a `--config` file. Command-line flags take precedence.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub optimizer: Option<OptimizerConfig>,
    pub simulation: Option<SimulationSpec>,
}

/// Settings of `simulate`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSpec {
    pub aux: Option<AuxDecomposition>,
    pub n_list: Option<Vec<usize>>,
    pub r: Option<f64>,
    pub r0: Option<f64>,
    pub seeds: Option<u64>,
    /// Monte Carlo pairs per code; exact when absent.
    pub trials: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    input: Pmf,
    channel: Channel,
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Loads the target from `--channel` or `--builtin`.
pub fn load_source(src: &Source) -> Result<(Pmf, Channel)> {
    match (&src.channel, &src.builtin) {
        (Some(path), _) => {
            let text = read_file(path)?;
            let value: serde_json::Value = parse_json(path, &text)?;
            if value.get("channel").is_some() {
                let f: ChannelFile = parse_json(path, &text)?;
                f.input.through(&f.channel)?;
                return Ok((f.input, f.channel));
            }
            let ch: Channel = parse_json(path, &text)?;
            let k = ch.n_inputs();
            Ok((Pmf::new(ch.input().to_vec(), vec![1.0 / k as f64; k])?, ch))
        }
        (None, Some(b)) => {
            let arg: f64 = b[1]
                .parse()
                .map_err(|_| Error::Parse(format!("builtin argument {:?} is not a number", b[1])))?;
            builtin::by_name(&b[0], &[arg])
        }
        (None, None) => Err(Error::Parse("one of --channel or --builtin is required".into())),
    }
}

/// Maps an error to the process exit status.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible(_) | Error::Budget { .. } => EXIT_INFEASIBLE,
        Error::Invariant(_) => EXIT_INVARIANT,
        _ => EXIT_PARSE,
    }
}

struct Ctx {
    out: PathBuf,
    gnuplot: bool,
    lines: Vec<String>,
}

impl Ctx {
    fn write(&mut self, name: &str, contents: &str, what: &str) -> Result<()> {
        let path = self.out.join(name);
        write_atomic(&path, contents.as_bytes())?;
        self.lines.push(format!("wrote {} ({what})", path.display()));
        Ok(())
    }

    /// Writes a CSV and, with `--gnuplot`, a script plotting column 2
    /// against column 1.
    fn write_csv(&mut self, name: &str, csv: &str, what: &str) -> Result<()> {
        self.write(name, csv, what)?;
        if self.gnuplot {
            let header: Vec<&str> = csv.lines().next().unwrap_or("").split(',').collect();
            let (x, y) = (header.first().copied().unwrap_or("x"), header.get(1).copied().unwrap_or("y"));
            let stem = name.trim_end_matches(".csv");
            let script = format!(
                "set datafile separator ','\nset xlabel '{x}'\nset ylabel '{y}'\nset key autotitle columnhead\nplot '{name}' using 1:2 with linespoints\n"
            );
            self.write(&format!("{stem}.gp"), &script, "gnuplot script")?;
        }
        Ok(())
    }
}

fn require_seed(seed: Option<u64>, cmd: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::Parse(format!("{cmd} is stochastic and needs --seed")))
}

fn rate_grid(lo: f64, hi: f64, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Parse("--grid must be positive".into()));
    }
    if k == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..k).map(|i| lo + (hi - lo).max(0.0) * i as f64 / (k - 1) as f64).collect())
}

fn output_aux(q: &Pmf, w: &Channel) -> Result<AuxDecomposition> {
    let joint = q.through(w)?;
    let p_y = joint.marginal(1)?;
    let (nx, ny) = (q.len(), w.n_outputs());
    let rows = (0..ny)
        .map(|y| {
            (0..nx)
                .map(|x| if p_y.prob(y) > 0.0 { q.prob(x) * w.prob(x, y) / p_y.prob(y) } else { 1.0 / nx as f64 })
                .collect()
        })
        .collect();
    let p_x = Channel::normalized(w.output().to_vec(), q.atoms().to_vec(), rows)?;
    let eye = (0..ny).map(|u| (0..ny).map(|y| f64::from(u8::from(u == y))).collect()).collect();
    let p_y_given_u = Channel::new(w.output().to_vec(), w.output().to_vec(), eye)?;
    AuxDecomposition::new(p_y, p_x, p_y_given_u)
}

fn boundary_json(b: &RegionBoundary) -> Result<String> {
    serde_json::to_string_pretty(b).map_err(|e| Error::Invariant(e.to_string()))
}

fn execute(cli: Cli) -> Result<Vec<String>> {
    let g = cli.global;
    let cfg: ConfigFile = match &g.config {
        Some(p) => parse_json(p, &read_file(p)?)?,
        None => ConfigFile::default(),
    };
    if let Some(t) = g.threads {
        // a pool may already exist when called in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    std::fs::create_dir_all(&g.out).map_err(|source| Error::Io {
        path: g.out.display().to_string(),
        source,
    })?;
    let mut opt = cfg.optimizer.clone().unwrap_or_default();
    if let Some(s) = g.seed {
        opt.seed = s;
    }
    let mut ctx = Ctx {
        out: g.out.clone(),
        gnuplot: g.gnuplot,
        lines: Vec::new(),
    };

    match cli.command {
        Command::Region { source, grid, variant, memory } => {
            let (q, w) = load_source(&source)?;
            let joint = q.through(&w)?;
            let lo = mutual_information(&joint)?;
            let hi = entropy(&q).min(entropy(&joint.marginal(1)?));
            let rs = rate_grid(lo, hi, grid)?;
            let b = match variant {
                Variant::Synthesis => synthesis_region(&q, &w, &rs, &opt)?,
                Variant::Public => public_channel_region(&q, &w, &opt)?,
                Variant::LocalRandomness => local_randomness_region(&q, &w, &rs, &opt)?.boundary,
                Variant::LimitedMemory => limited_memory_region(&q, &w, memory, &rs, &opt)?,
            };
            ctx.write_csv("region.csv", &b.to_csv(), &format!("{} boundary points", b.points.len()))?;
            ctx.write("region.json", &boundary_json(&b)?, "boundary with witnesses")?;
        }
        Command::CommonInfo { source } => {
            let (q, w) = load_source(&source)?;
            let joint = q.through(&w)?;
            let (c, wit) = wyner_common_information(&joint, &opt)?;
            let h = necessary_conditional_entropy(&joint).ok();
            let doc = serde_json::json!({
                "common_information": c,
                "necessary_conditional_entropy": h,
                "witness": wit,
            });
            let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Invariant(e.to_string()))?;
            ctx.write("common_info.json", &text, &format!("C = {c:.6} bits"))?;
        }
        Command::Simulate { source, rate, rate0, n_list, seeds, aux, trials } => {
            let seed = require_seed(g.seed, "simulate")?;
            let (q, w) = load_source(&source)?;
            let spec = cfg.simulation.clone().unwrap_or_default();
            let aux = match (aux, spec.aux) {
                (Some(AuxChoice::CommonInfo), _) => wyner_common_information(&q.through(&w)?, &opt)?.1,
                (Some(AuxChoice::Output), _) | (None, None) => output_aux(&q, &w)?,
                (None, Some(a)) => AuxDecomposition::new(a.p_u, a.p_x_given_u, a.p_y_given_u)?,
            };
            let r = rate.or(spec.r).ok_or_else(|| Error::Parse("simulate needs --rate".into()))?;
            let r0 = rate0.or(spec.r0).unwrap_or(0.0);
            let n_list = n_list.or(spec.n_list).unwrap_or_else(|| vec![1, 2, 3, 4]);
            let k = seeds.or(spec.seeds).unwrap_or(10);
            let mode = match trials.or(spec.trials) {
                Some(t) => TvMode::MonteCarlo { trials: t },
                None => TvMode::Exact,
            };
            let seed_list: Vec<u64> = (0..k).map(|i| crate::rng::derive(seed, i)).collect();
            let table = tv_decay_experiment_with(&aux, &q, &w, RatePoint::new(r, r0), &n_list, &seed_list, mode)?;
            ctx.write_csv("simulate.csv", &table.to_csv(), &format!("{} block lengths", table.rows.len()))?;
        }
        Command::Softcover { source, rate, n_list, trials } => {
            let trials: Trials = trials.parse()?;
            let seed = match trials {
                Trials::Exhaustive => g.seed.unwrap_or(0),
                Trials::Sampled(_) => require_seed(g.seed, "softcover")?,
            };
            let (q, w) = load_source(&source)?;
            let t = soft_decay(&q, &w, rate, &n_list, trials, seed)?;
            ctx.write_csv("softcover.csv", &t.to_csv(), &format!("{} block lengths", t.rows.len()))?;
        }
        Command::Exponent { source, rate } => {
            let (q, w) = load_source(&source)?;
            let rep = exponents(&q.through(&w)?, rate)?;
            ctx.write_csv("renyi.csv", &rep.curve_csv(), &format!("{} orders", rep.curve.len()))?;
            let text = serde_json::to_string_pretty(&rep).map_err(|e| Error::Invariant(e.to_string()))?;
            ctx.write(
                "exponents.json",
                &text,
                &format!("gamma = {:.6}, gamma_hat = {:.6}, gamma_hathat = {:.6}", rep.gamma, rep.gamma_hat, rep.gamma_hathat),
            )?;
        }
        Command::Game { payoff, grid } => {
            let p: Payoff = parse_json(&payoff, &read_file(&payoff)?)?;
            let hi = (p.dims()[0] as f64).log2();
            let pts = game_region(&p, &rate_grid(0.0, hi, grid)?, &opt)?;
            let mut csv = String::from("R,payoff\n");
            for pt in &pts {
                csv.push_str(&crate::output::csv_row(&[pt.rate, pt.payoff]));
                csv.push('\n');
            }
            ctx.write_csv("game.csv", &csv, &format!("{} rates", pts.len()))?;
        }
    }
    Ok(ctx.lines)
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Summaries go to stdout, diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { 0 };
        }
    };
    match execute(cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
