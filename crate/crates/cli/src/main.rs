//! `framelet`: command-line front end for Hankel lifting, perfect
//! reconstruction checks, restoration, training and multi-resolution
//! analysis.
//!
//! Exit codes: 0 on success (including a non-converged inpainting run, which
//! is flagged in the trace), 1 on data errors, 2 on usage errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};

use framelet::io::{
    format_inpaint_trace, format_loss_trace, load_banks, read_matrix, read_network, read_pgm, read_signal, save_banks,
    write_matrix, write_pgm, write_signal, BankSet,
};
use framelet::mra::{build_2d_mra, mra_decode, mra_encode};
use framelet::pr::{check_frame_local, check_frame_nonlocal, check_pr_fourier, min_channels, rank_bound_check};
use framelet::restore::{
    denoise, inpaint, FrameletNetwork, HankelShrinkage, InpaintProblem, MraNetwork, RestorationOperator, Schedule,
};
use framelet::trainer::{fit, noisy_cosines, spikes_on_constants, TrainConfig, TrainingSet};
use framelet::{hankel, Error, Result};

#[derive(Parser)]
#[command(name = "framelet", version, about = "Convolution framelet toolkit")]
struct Cli {
    /// Worker threads for parallel sections (falls back to FRAMELET_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Wrap-around Hankel lift of a signal file.
    Lift {
        #[arg(long)]
        input: PathBuf,
        #[arg(short, long)]
        d: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Anti-diagonal averaging of a lifted matrix back to `p` channels.
    Unlift {
        #[arg(long)]
        input: PathBuf,
        #[arg(short, long, default_value_t = 1)]
        p: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Perfect-reconstruction checks; prints `condition<TAB>pass|fail<TAB>deviation`.
    Check {
        #[command(subcommand)]
        check: Check,
    },
    /// One application of a restoration operator.
    Denoise {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        op: OperatorArgs,
        #[arg(long)]
        output: PathBuf,
    },
    /// Relaxed masked fixed-point inpainting.
    Inpaint {
        #[arg(long)]
        input: PathBuf,
        /// `n x 1` matrix file, 1 where the sample is observed.
        #[arg(long)]
        mask: PathBuf,
        #[command(flatten)]
        op: OperatorArgs,
        #[arg(long, default_value_t = 0.99)]
        mu: f64,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Ground truth for the error column of the trace.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Fit filter banks by gradient descent.
    Train {
        /// `n x N` matrix whose columns are the inputs.
        #[arg(long)]
        inputs: PathBuf,
        /// `n x N` matrix whose columns are the targets.
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        net: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        /// Directory for the trained banks.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Multi-resolution encode and decode of a signal or a PGM image.
    Mra {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        banks: PathBuf,
        /// Zero every high band before decoding.
        #[arg(long)]
        drop_high: bool,
        /// Directory for per-layer band coefficients (signals only).
        #[arg(long)]
        coeffs: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Generate a seeded toy training corpus.
    Toy {
        #[arg(long, value_enum, default_value_t = ToyKind::Cosines)]
        kind: ToyKind,
        #[arg(long, default_value_t = 8)]
        count: usize,
        #[arg(short, long, default_value_t = 32)]
        n: usize,
        /// Noise standard deviation (cosines only).
        #[arg(long, default_value_t = 0.3)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory receiving `inputs.txt` and `targets.txt`.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum Check {
    /// `Φ̃Φᵀ = I` (or `ΨΨ̃ᵀ = I` with `--local`).
    Frame {
        #[arg(long)]
        phi: PathBuf,
        /// Dual basis; defaults to the basis itself.
        #[arg(long)]
        dual: Option<PathBuf>,
        #[arg(long)]
        local: bool,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Frequency-domain PR condition of a local filter bank.
    Fourier {
        #[arg(long)]
        psi: PathBuf,
        #[arg(long)]
        dual: Option<PathBuf>,
        #[arg(short, long, default_value_t = 1)]
        p: usize,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Minimal channel counts for PR given per-layer filter lengths.
    Channels {
        #[arg(short, long, value_delimiter = ',', required = true)]
        d: Vec<usize>,
    },
    /// Per-layer extended-Hankel rank against its bound.
    Rankbound {
        #[arg(long)]
        signal: PathBuf,
        #[arg(long)]
        banks: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ToyKind {
    Cosines,
    Spikes,
}

#[derive(Clone, Debug)]
enum OperatorSpec {
    Rank(usize),
    Net(PathBuf),
}

impl FromStr for OperatorSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.split_once('=') {
            Some(("rank", r)) => r.parse().map(Self::Rank).map_err(|_| format!("bad rank '{r}'")),
            Some(("net", dir)) if !dir.is_empty() => Ok(Self::Net(PathBuf::from(dir))),
            _ => Err(format!("expected rank=<r> or net=<bankdir>, got '{s}'")),
        }
    }
}

#[derive(Args)]
struct OperatorArgs {
    /// `rank=<r>` for Hankel shrinkage or `net=<bankdir>` for a trained network.
    #[arg(long = "q")]
    q: OperatorSpec,
    /// Filter length for rank shrinkage (default: n / 2).
    #[arg(short, long)]
    d: Option<usize>,
    /// Treat the bank directory as a multi-resolution network.
    #[arg(long)]
    mra: bool,
}

impl OperatorArgs {
    fn build(&self, n: usize) -> Result<Box<dyn RestorationOperator>> {
        Ok(match &self.q {
            OperatorSpec::Rank(r) => Box::new(HankelShrinkage { d: self.d.unwrap_or((n / 2).max(1)), r: *r }),
            OperatorSpec::Net(dir) => {
                let set = load_banks(dir)?;
                if self.mra {
                    let banks = set.mra_banks();
                    Box::new(MraNetwork { net: set.net, banks, keep_high: true })
                } else {
                    Box::new(FrameletNetwork { net: set.net, banks: set.banks })
                }
            }
        })
    }
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var("FRAMELET_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| Error::Param(format!("FRAMELET_THREADS='{v}' is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Param(e.to_string()))?;
    }
    Ok(())
}

fn read_mask(path: &Path) -> Result<Vec<bool>> {
    let m = read_signal(path)?;
    m.iter()
        .map(|&v| match v {
            v if v == 1.0 => Ok(true),
            v if v == 0.0 => Ok(false),
            other => Err(Error::Param(format!("{}: mask entries must be 0 or 1, got {other}", path.display()))),
        })
        .collect()
}

fn columns(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    m.column_iter().map(|c| c.into_owned()).collect()
}

fn stack_columns(cols: &[&DVector<f64>]) -> DMatrix<f64> {
    let n = cols.first().map_or(0, |c| c.len());
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

fn run_check(check: Check) -> Result<()> {
    match check {
        Check::Frame { phi, dual, local, tol } => {
            let a = read_matrix(&phi)?;
            let b = match dual {
                Some(p) => read_matrix(&p)?,
                None => a.clone(),
            };
            let report = if local { check_frame_local(&a, &b, tol)? } else { check_frame_nonlocal(&a, &b, tol)? };
            println!("{}", report.to_line());
        }
        Check::Fourier { psi, dual, p, grid, tol } => {
            let a = read_matrix(&psi)?;
            let b = match dual {
                Some(path) => read_matrix(&path)?,
                None => a.clone(),
            };
            println!("{}", check_pr_fourier(&a, &b, p, grid, tol)?.to_line());
        }
        Check::Channels { d } => {
            let q: Vec<String> = min_channels(&d)?.iter().map(|q| q.to_string()).collect();
            println!("{}", q.join(","));
        }
        Check::Rankbound { signal, banks, tol } => {
            let f = read_signal(&signal)?;
            let set = load_banks(&banks)?;
            for row in rank_bound_check(&f, &set.net, &set.banks, tol)? {
                println!(
                    "rank_bound_layer{}\t{}\t{} <= {}",
                    row.layer,
                    if row.satisfied() { "pass" } else { "fail" },
                    row.rank,
                    row.bound()
                );
            }
        }
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Lift { input, d, output } => write_matrix(&output, &hankel::lift(&read_signal(&input)?, d)?),
        Command::Unlift { input, p, output } => write_matrix(&output, &hankel::unlift_extended(&read_matrix(&input)?, p)?),
        Command::Check { check } => run_check(check),
        Command::Denoise { input, op, output } => {
            let g = read_signal(&input)?;
            let q = op.build(g.len())?;
            write_signal(&output, &denoise(&g, q.as_ref())?)
        }
        Command::Inpaint { input, mask, op, mu, lambda, iters, tol, truth, output, trace } => {
            let g = read_signal(&input)?;
            let mut problem = InpaintProblem::new(g, read_mask(&mask)?);
            problem.mu = mu;
            problem.lambda = Schedule::Constant(lambda);
            problem.max_iters = iters;
            problem.tol = tol;
            problem.truth = truth.as_deref().map(read_signal).transpose()?;
            let q = op.build(problem.observed.len())?;
            let result = inpaint(&problem, q.as_ref())?;
            write_signal(&output, &result.signal)?;
            if let Some(path) = trace {
                std::fs::write(path, format_inpaint_trace(&result.trace))?;
            }
            let status = if result.converged { "converged" } else { "not converged" };
            eprintln!("{status} after {} iterations", result.trace.len());
            Ok(())
        }
        Command::Train { inputs, targets, net, seed, step, iters, out, trace } => {
            let (x, y) = (read_matrix(&inputs)?, read_matrix(&targets)?);
            if x.shape() != y.shape() {
                return Err(Error::Shape(format!("inputs {:?} and targets {:?} differ", x.shape(), y.shape())));
            }
            let data = TrainingSet::new(columns(&x).into_iter().zip(columns(&y)).collect())?;
            let net = read_network(&net)?;
            let outcome = fit(&data, &net, &TrainConfig { step, iterations: iters, seed })?;
            save_banks(&out, &BankSet::new(net, outcome.banks))?;
            if let Some(path) = trace {
                std::fs::write(path, format_loss_trace(&outcome.trace))?;
            }
            Ok(())
        }
        Command::Mra { input, banks, drop_high, coeffs, output } => {
            let set = load_banks(&banks)?;
            let mra_banks = set.mra_banks();
            if input.extension().is_some_and(|e| e == "pgm") {
                let net = build_2d_mra(&set.net)?;
                let mut state = net.encode(&read_pgm(&input)?, &mra_banks)?;
                if drop_high {
                    for band in state.lh.iter_mut().chain(&mut state.hl).chain(&mut state.hh) {
                        band.fill(0.0);
                    }
                }
                return write_pgm(&output, &net.decode(&state, &mra_banks)?);
            }
            let mut state = mra_encode(&read_signal(&input)?, &set.net, &mra_banks)?;
            if let Some(dir) = coeffs {
                std::fs::create_dir_all(&dir)?;
                for (l, (low, high)) in state.low.iter().zip(&state.high).enumerate() {
                    write_matrix(&dir.join(format!("layer{}_low.txt", l + 1)), low)?;
                    write_matrix(&dir.join(format!("layer{}_high.txt", l + 1)), high)?;
                }
            }
            if drop_high {
                state.high.iter_mut().for_each(|h| h.fill(0.0));
            }
            write_signal(&output, &mra_decode(&state, &set.net, &mra_banks)?)
        }
        Command::Toy { kind, count, n, noise, seed, out } => {
            let data = match kind {
                ToyKind::Cosines => noisy_cosines(count, n, noise, seed)?,
                ToyKind::Spikes => spikes_on_constants(count, n, seed)?,
            };
            std::fs::create_dir_all(&out)?;
            let inputs: Vec<&DVector<f64>> = data.pairs().iter().map(|(x, _)| x).collect();
            let targets: Vec<&DVector<f64>> = data.pairs().iter().map(|(_, y)| y).collect();
            write_matrix(&out.join("inputs.txt"), &stack_columns(&inputs))?;
            write_matrix(&out.join("targets.txt"), &stack_columns(&targets))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads(cli.threads).and_then(|()| run(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
