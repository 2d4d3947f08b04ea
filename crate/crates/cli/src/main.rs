use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use msgame::closedform::{cf_fingerprint, cf_mean, cf_success, product_grid, verify};
use msgame::discriminate::{classify, Estimate, Fingerprint};
use msgame::evaluate::{sample_plays, success_probability, sweep, SweepPoint};
use msgame::{ChannelKind, ChannelSpec, GameInput, MemoryModel};

mod grid;
mod output;

use output::{Cell, Format, Table};

/// Magic square game under noisy quantum memory channels.
///
/// Channel names: depolarizing, amplitude-damping, phase-damping, phase-flip,
/// bit-flip, bit-phase-flip. Grids are `start:stop:step` (inclusive) or a
/// single value in [0, 1].
///
/// Exit status: 0 on success, 1 when verification fails, 2 on usage errors.
#[derive(Debug, Parser)]
#[command(name = "msgame", version)]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,

    /// Write data here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form success probabilities per input, with the mean.
    ///
    /// Columns: kind,row,col,alpha,mu,probability,mean. Rows are ordered by
    /// kind, row, col, alpha, mu.
    Tables {
        /// Restrict to these kinds (repeatable); default all.
        #[arg(long)]
        kind: Vec<ChannelKind>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Success probabilities over a grid, for plotting.
    ///
    /// Columns: alpha,mu,p11,p12,p13,p21,p22,p23,p31,p32,p33,mean.
    Sweep {
        #[arg(long)]
        kind: ChannelKind,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = SourceArg::Numeric)]
        source: SourceArg,
        #[arg(long, default_value_t = MemoryModel::GlobalStream)]
        model: MemoryModel,
    },
    /// Compares simulated and closed-form probabilities.
    ///
    /// Columns: kind,model,points,max_deviation,worst_alpha,worst_mu,
    /// worst_row,worst_col,failures,status.
    Verify {
        /// Restrict to these kinds (repeatable); default all.
        #[arg(long)]
        kind: Vec<ChannelKind>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = MemoryModel::GlobalStream)]
        model: MemoryModel,
    },
    /// Plays the game repeatedly on one input and reports the win rate.
    ///
    /// Columns: kind,alpha,mu,row,col,n,seed,wins,estimate,std_error,exact.
    Play {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        row: u8,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        col: u8,
        #[arg(long, short, default_value_t = 10_000)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Ranks channel families by how well they explain a fingerprint.
    ///
    /// Columns: rank,kind,alpha,mu,residual,objective,kind_tie,degenerate,
    /// alternatives.
    Discriminate(DiscriminateArgs),
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value = "0:1:0.1")]
    alpha: String,
    #[arg(long, default_value = "0:1:0.1")]
    mu: String,
}

impl GridArgs {
    fn parse(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((grid::parse(&self.alpha)?, grid::parse(&self.mu)?))
    }
}

#[derive(Debug, Args)]
struct ChannelArgs {
    #[arg(long)]
    kind: ChannelKind,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    mu: f64,
}

impl ChannelArgs {
    fn spec(&self) -> Result<ChannelSpec> {
        Ok(ChannelSpec::new(self.kind, self.alpha, self.mu)?)
    }
}

#[derive(Debug, Args)]
struct DiscriminateArgs {
    /// Nine comma-separated success probabilities in input order
    /// (1,1), (1,2), …, (3,3).
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
    /// File holding nine probabilities separated by commas or whitespace.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Simulate `n` plays per input of this channel and classify the counts.
    #[arg(long, requires_all = ["alpha", "mu"])]
    simulate: Option<ChannelKind>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, short, default_value_t = 10_000)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SourceArg {
    Numeric,
    ClosedForm,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Returns `Ok(false)` when a verification ran and failed.
fn run(cli: &Cli) -> Result<bool> {
    let (table, ok) = match &cli.command {
        Command::Tables { kind, grid } => (tables(kind, grid)?, true),
        Command::Sweep {
            kind,
            grid,
            source,
            model,
        } => (sweep_table(*kind, grid, *source, *model)?, true),
        Command::Verify {
            kind,
            grid,
            tol,
            model,
        } => verify_table(kind, grid, *tol, *model)?,
        Command::Play {
            channel,
            row,
            col,
            n,
            seed,
        } => (play(channel, *row, *col, *n, *seed)?, true),
        Command::Discriminate(args) => (discriminate(args)?, true),
    };
    let text = table.render(cli.format)?;
    match &cli.output {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(ok)
}

fn kinds_or_all(kinds: &[ChannelKind]) -> Vec<ChannelKind> {
    ChannelKind::ALL
        .into_iter()
        .filter(|k| kinds.is_empty() || kinds.contains(k))
        .collect()
}

fn tables(kinds: &[ChannelKind], grid: &GridArgs) -> Result<Table> {
    let (alphas, mus) = grid.parse()?;
    let mut t = Table::new(vec![
        "kind",
        "row",
        "col",
        "alpha",
        "mu",
        "probability",
        "mean",
    ]);
    for kind in kinds_or_all(kinds) {
        for input in GameInput::all() {
            for &a in &alphas {
                for &m in &mus {
                    t.push(vec![
                        kind.name().into(),
                        input.row().into(),
                        input.col().into(),
                        a.into(),
                        m.into(),
                        cf_success(kind, input, a, m).into(),
                        cf_mean(kind, a, m).into(),
                    ]);
                }
            }
        }
    }
    Ok(t)
}

fn sweep_table(
    kind: ChannelKind,
    grid: &GridArgs,
    source: SourceArg,
    model: MemoryModel,
) -> Result<Table> {
    let (alphas, mus) = grid.parse()?;
    let points = match source {
        SourceArg::Numeric => sweep(kind, &alphas, &mus, model)?,
        SourceArg::ClosedForm => product_grid(&alphas, &mus)
            .into_iter()
            .map(|(a, m)| SweepPoint::new(a, m, cf_fingerprint(kind, a, m)))
            .collect(),
    };
    let mut t = Table::new(vec![
        "alpha", "mu", "p11", "p12", "p13", "p21", "p22", "p23", "p31", "p32", "p33", "mean",
    ]);
    for p in points {
        let mut row: Vec<Cell> = vec![p.alpha.into(), p.mu.into()];
        row.extend(p.probs.iter().map(|&x| Cell::from(x)));
        row.push(p.mean.into());
        t.push(row);
    }
    Ok(t)
}

fn verify_table(
    kinds: &[ChannelKind],
    grid: &GridArgs,
    tol: f64,
    model: MemoryModel,
) -> Result<(Table, bool)> {
    if tol.is_nan() || tol < 0.0 {
        bail!("tolerance must be nonnegative, got {tol}");
    }
    let (alphas, mus) = grid.parse()?;
    let points = product_grid(&alphas, &mus);
    let mut t = Table::new(vec![
        "kind",
        "model",
        "points",
        "max_deviation",
        "worst_alpha",
        "worst_mu",
        "worst_row",
        "worst_col",
        "failures",
        "status",
    ]);
    let mut all_ok = true;
    for kind in kinds_or_all(kinds) {
        let r = verify(kind, &points, tol, model)?;
        let worst: [Cell; 4] = match r.worst {
            Some(w) => [
                w.alpha.into(),
                w.mu.into(),
                w.input.row().into(),
                w.input.col().into(),
            ],
            None => std::array::from_fn(|_| Cell::from("")),
        };
        if !r.passed() {
            all_ok = false;
            let inputs: Vec<String> = r.failing_inputs().iter().map(|i| i.to_string()).collect();
            eprintln!(
                "{kind}: {} of {} comparisons exceed {tol:e}; failing inputs {}",
                r.failures.len(),
                r.points * 9,
                inputs.join(" ")
            );
        }
        let mut row: Vec<Cell> = vec![
            kind.name().into(),
            model.name().into(),
            r.points.into(),
            r.max_deviation.into(),
        ];
        row.extend(worst);
        row.push(r.failures.len().into());
        row.push(if r.passed() { "pass" } else { "fail" }.into());
        t.push(row);
    }
    Ok((t, all_ok))
}

fn play(channel: &ChannelArgs, row: u8, col: u8, n: u64, seed: u64) -> Result<Table> {
    let spec = channel.spec()?;
    let input = GameInput::new(row, col)?;
    let wins = sample_plays(&spec, input, n, seed)?;
    let estimate = wins as f64 / n as f64;
    let mut t = Table::new(vec![
        "kind",
        "alpha",
        "mu",
        "row",
        "col",
        "n",
        "seed",
        "wins",
        "estimate",
        "std_error",
        "exact",
    ]);
    t.push(vec![
        spec.kind.name().into(),
        spec.alpha.into(),
        spec.mu.into(),
        row.into(),
        col.into(),
        n.into(),
        seed.into(),
        wins.into(),
        estimate.into(),
        (estimate * (1.0 - estimate) / n as f64).sqrt().into(),
        success_probability(&spec, input)?.into(),
    ]);
    Ok(t)
}

fn parse_values(text: &str) -> Result<[f64; 9]> {
    let values: Vec<f64> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .with_context(|| format!("invalid probability '{s}'"))
        })
        .collect::<Result<_>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| anyhow::anyhow!("expected 9 probabilities, got {}", v.len()))
}

fn discriminate(args: &DiscriminateArgs) -> Result<Table> {
    let sources = [
        args.values.is_some(),
        args.file.is_some(),
        args.simulate.is_some(),
    ];
    if sources.iter().filter(|&&s| s).count() != 1 {
        bail!("give exactly one of --values, --file or --simulate");
    }
    let fp = if let Some(kind) = args.simulate {
        let (alpha, mu) = (args.alpha.unwrap_or_default(), args.mu.unwrap_or_default());
        let spec = ChannelSpec::new(kind, alpha, mu)?;
        let counts = counts_or_err(std::array::from_fn(|k| {
            sample_plays(
                &spec,
                GameInput::from_index(k),
                args.n,
                args.seed.wrapping_add(k as u64),
            )
        }))?;
        Fingerprint::from_counts(&counts, args.n)?
    } else if let Some(values) = &args.values {
        Fingerprint::new(parse_values(values)?)?
    } else if let Some(path) = &args.file {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Fingerprint::new(parse_values(&text)?)?
    } else {
        unreachable!("checked above")
    };
    Ok(estimates_table(&classify(&fp)))
}

fn counts_or_err(counts: [msgame::Result<u64>; 9]) -> Result<[u64; 9]> {
    let mut out = [0; 9];
    for (slot, c) in out.iter_mut().zip(counts) {
        *slot = c?;
    }
    Ok(out)
}

fn estimates_table(estimates: &[Estimate]) -> Table {
    let mut t = Table::new(vec![
        "rank",
        "kind",
        "alpha",
        "mu",
        "residual",
        "objective",
        "kind_tie",
        "degenerate",
        "alternatives",
    ]);
    for e in estimates {
        t.push(vec![
            e.rank.into(),
            e.kind.name().into(),
            e.alpha.into(),
            e.mu.into(),
            e.residual.into(),
            e.objective.into(),
            e.kind_tie.into(),
            e.degenerate().into(),
            Cell::Pairs(e.alternatives.clone()),
        ]);
    }
    t
}
