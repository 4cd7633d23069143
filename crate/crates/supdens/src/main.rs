use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use supdens::config::merge_config;
use supdens::grid::parse_grid;
use supdens::mc::{mc_supremum_cdf_par, series_cdf};
use supdens::output::{emit, format_num, Cell, Format, Table};
use supdens::verify::{core_checks, mc_checks, Check, MC_GRID};
use supdens::{diagnostic, exit_code};
use supdens_core::coefficients::{build_table, CoeffKind, StableParams};
use supdens_core::density::{Evaluator, ExtCache, Mode, SeriesResult, Status, T_MAX};
use supdens_core::diophantine::{classify_l, RealKind, RealSpec};
use supdens_core::oracle::McConfig;
use supdens_core::trigprod::{trig_log_product, TrigKind};
use supdens_core::Error;

/// Density, distribution and diagnostics for the supremum of a strictly stable Levy process.
#[derive(Parser, Debug)]
#[command(name = "supdens", version)]
struct Cli {
    /// Read `key = value` defaults from a file; keys are flag names without dashes.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Exit with status 3 if any evaluation did not converge.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Params {
    /// Index of stability: `sqrt:2`, `surd:(1+1*sqrt:5)/2`, `cf:[1;2,2,2]` or a decimal.
    #[arg(long, value_name = "REAL")]
    alpha: String,

    /// Positivity parameter P(X_1 > 0).
    #[arg(long)]
    rho: f64,
}

#[derive(Args, Debug)]
struct Output {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,

    /// Output file; relative paths are placed under $SUPDENS_OUT_DIR when set. Default: stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Auto,
    Convergent,
    Asymptotic,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Auto => Mode::Auto,
            ModeArg::Convergent => Mode::Convergent,
            ModeArg::Asymptotic => Mode::Asymptotic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TrigArg {
    Sec,
    Csc,
    CscShifted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Core,
    Mc,
    All,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate the density of the supremum on a grid.
    Density {
        #[command(flatten)]
        params: Params,
        /// Grid: `start:stop:count`, `log:start:stop:count`, `a,b,c` or a single value.
        #[arg(long, value_name = "GRID", allow_hyphen_values = true)]
        x: String,
        /// Relative accuracy target, in [1e-14, 1e-2].
        #[arg(long, default_value_t = 1e-10)]
        eps: f64,
        /// Series selection.
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
        /// Time horizon t of the supremum over [0, t].
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Tabulate the distribution function of the supremum on a grid.
    Cdf {
        #[command(flatten)]
        params: Params,
        /// Grid: `start:stop:count`, `log:start:stop:count`, `a,b,c` or a single value.
        #[arg(long, value_name = "GRID", allow_hyphen_values = true)]
        x: String,
        /// Relative accuracy target, in [1e-14, 1e-2].
        #[arg(long, default_value_t = 1e-10)]
        eps: f64,
        /// Series selection.
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
        #[command(flatten)]
        output: Output,
    },
    /// Quantiles of the supremum.
    Quantile {
        #[command(flatten)]
        params: Params,
        /// Probability levels in (0, 1), in grid syntax.
        #[arg(long, value_name = "GRID", allow_hyphen_values = true)]
        u: String,
        /// Absolute accuracy of the distribution function at the answer.
        #[arg(long, default_value_t = 1e-10)]
        eps: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Scan a continued fraction for membership witnesses of the exceptional set.
    Classify {
        /// The real number to classify.
        #[arg(long, value_name = "REAL")]
        alpha: String,
        /// Last continued-fraction index examined.
        #[arg(long, default_value_t = 40)]
        depth: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Trace of (1/k) sum ln|sec(pi l x)| or its csc analogue.
    Lemma1 {
        /// Multiplier x.
        #[arg(long, value_name = "REAL")]
        x: String,
        /// Product kind.
        #[arg(long, value_enum, default_value = "sec")]
        kind: TrigArg,
        /// Phase shift y for csc-shifted, as a multiple of pi.
        #[arg(long, default_value_t = 0.0)]
        shift: f64,
        /// Number of factors.
        #[arg(long, default_value_t = 10_000)]
        k_max: usize,
        /// Emit every n-th k (the last k is always emitted).
        #[arg(long, default_value_t = 1)]
        every: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Export the coefficient table of one series family.
    Table {
        #[command(flatten)]
        params: Params,
        /// Family: `a` (powers x^{m + alpha n}) or `b` (large-x family).
        #[arg(long, value_enum, default_value = "a")]
        kind: KindArg,
        /// Keep entries with exponent m + alpha n (resp. m + alpha (n - 1)) at most this.
        #[arg(long, default_value_t = 10.0)]
        t: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Random-walk estimate of the distribution function, next to the series.
    Montecarlo {
        #[command(flatten)]
        params: Params,
        /// Number of simulated paths.
        #[arg(long, default_value_t = 200_000)]
        paths: usize,
        /// Walk steps on [0, 1].
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        /// Generator seed; each path uses its own stream.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Evaluation grid.
        #[arg(long, value_name = "GRID", allow_hyphen_values = true, default_value = MC_GRID)]
        x: String,
        /// Worker threads; 0 picks one per core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Run self-consistency checks; nonzero exit if any fails.
    Verify {
        #[command(flatten)]
        params: Params,
        /// Which checks to run.
        #[arg(long, value_enum, default_value = "core")]
        suite: Suite,
        /// Paths for the Monte Carlo checks.
        #[arg(long, default_value_t = 200_000)]
        paths: usize,
        /// Walk steps for the Monte Carlo checks (also run at twice this).
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        /// Generator seed for the Monte Carlo checks.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

enum Failure {
    Lib(Error),
    Io(std::io::Error),
    Code(u8),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn parse_real(s: &str) -> Result<RealSpec, Error> {
    let r: RealSpec = s.parse()?;
    if matches!(r.kind(), RealKind::Decimal { .. }) {
        eprintln!("note: `{s}` is a decimal; it is treated as a truncated window onto an irrational number");
    }
    Ok(r)
}

fn evaluator(p: &Params) -> Result<Evaluator, Error> {
    Evaluator::new(StableParams::new(parse_real(&p.alpha)?, p.rho)?)
}

fn series_row(x: f64, r: &SeriesResult) -> Vec<Cell> {
    vec![
        x.into(),
        r.value.into(),
        r.est_error.into(),
        r.status.as_str().into(),
        r.mode.as_str().into(),
        r.terms_used.into(),
    ]
}

fn check_rows(checks: &[Check]) -> (Table, bool) {
    let mut t = Table::new(&["check", "value", "tolerance", "pass"]);
    for c in checks {
        t.push(vec![c.name.as_str().into(), c.value.into(), c.tolerance.into(), c.pass.into()]);
    }
    (t, checks.iter().all(|c| c.pass))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut not_converged = false;
    match cli.command {
        Command::Density { params, x, eps, mode, time, output } => {
            let ev = evaluator(&params)?;
            let grid = parse_grid(&x)?;
            let mut t = Table::new(&["x", "p", "est_error", "status", "mode", "terms"]);
            let mut cache = ExtCache::new();
            for x in grid {
                let r = if time == 1.0 {
                    ev.density_with(x, eps, mode.into(), &mut cache)?
                } else {
                    ev.density_at_time(time, x, eps, mode.into())?
                };
                not_converged |= r.status == Status::NotConverged;
                t.push(series_row(x, &r));
            }
            emit(&t, output.format, output.out.as_deref())?;
        }
        Command::Cdf { params, x, eps, mode, output } => {
            let ev = evaluator(&params)?;
            let grid = parse_grid(&x)?;
            let mut t = Table::new(&["x", "cdf", "est_error", "status", "mode", "terms"]);
            let mut cache = ExtCache::new();
            for x in grid {
                let r = ev.cdf_with(x, eps, mode.into(), &mut cache)?;
                not_converged |= r.status == Status::NotConverged;
                t.push(series_row(x, &r));
            }
            emit(&t, output.format, output.out.as_deref())?;
        }
        Command::Quantile { params, u, eps, output } => {
            let ev = evaluator(&params)?;
            let mut t = Table::new(&["u", "x"]);
            for u in parse_grid(&u)? {
                t.push(vec![u.into(), ev.quantile(u, eps)?.into()]);
            }
            emit(&t, output.format, output.out.as_deref())?;
        }
        Command::Classify { alpha, depth, output } => {
            let x = parse_real(&alpha)?;
            let c = classify_l(&x, depth)?;
            let mut t = Table::new(&["alpha", "verdict", "depth_examined", "n", "q_n", "log2_quotient", "base", "strong"]);
            let head = |t: &mut Table, rest: Vec<Cell>| {
                let mut row: Vec<Cell> = vec![alpha.as_str().into(), c.verdict.as_str().into(), c.depth_examined.into()];
                row.extend(rest);
                t.push(row);
            };
            let strong: Vec<_> = c.strong_witnesses().map(|w| w.n).collect();
            for w in &c.witnesses {
                head(
                    &mut t,
                    vec![
                        w.n.into(),
                        w.q_n.to_string().into(),
                        (w.quotient.bits().saturating_sub(1) as i64).into(),
                        w.base.into(),
                        strong.contains(&w.n).into(),
                    ],
                );
            }
            if c.witnesses.is_empty() {
                head(&mut t, vec![Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]);
            }
            emit(&t, output.format, output.out.as_deref())?;
        }
        Command::Lemma1 { x, kind, shift, k_max, every, output } => {
            if every == 0 {
                return Err(Error::Domain("--every must be at least 1".into()).into());
            }
            let x = parse_real(&x)?;
            let kind = match kind {
                TrigArg::Sec => TrigKind::Sec,
                TrigArg::Csc => TrigKind::Csc,
                TrigArg::CscShifted => TrigKind::CscShifted,
            };
            let trace = trig_log_product(kind, &x, shift, k_max)?;
            if trace.rational {
                eprintln!("note: x is rational; the trace carries no rate statement");
            }
            let mut t = Table::new(&["k", "normalized_log_product"]);
            for &(k, v) in &trace.cumulative {
                if k % every == 0 || k == k_max {
                    t.push(vec![k.into(), v.into()]);
                }
            }
            emit(&t, output.format, output.out.as_deref())?;
        }
        Command::Table { params, kind, t, output } => {
            if !(0.0..=T_MAX).contains(&t) {
                return Err(Error::Domain(format!("--t must lie in [0, {T_MAX}]")).into());
            }
            let sp = StableParams::new(parse_real(&params.alpha)?, params.rho)?;
            let kind = match kind {
                KindArg::A => CoeffKind::A,
                KindArg::B => CoeffKind::B,
            };
            let table = build_table(&sp, kind, t)?;
            let mut out = Table::new(&["m", "n", "sign", "log10_abs", "value_if_representable"]);
            for e in &table.entries {
                let v = e.value.to_f64();
                let repr = (v.is_finite() && (v == 0.0) == e.value.is_zero()).then_some(v);
                let log10 = if e.value.is_zero() { Cell::Empty } else { e.value.log10_abs().into() };
                out.push(vec![e.m.into(), e.n.into(), (e.value.sign as i64).into(), log10, repr.into()]);
            }
            emit(&out, output.format, output.out.as_deref())?;
        }
        Command::Montecarlo { params, paths, steps, seed, x, threads, output } => {
            let ev = evaluator(&params)?;
            let grid = parse_grid(&x)?;
            let cfg = McConfig { paths, steps, seed, grid: grid.clone() };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
            let emp = pool.install(|| mc_supremum_cdf_par(ev.params(), &cfg))?;
            let f_series = series_cdf(&ev, &grid, 1e-10)?;
            let mut t = Table::new(&["x", "F_emp", "stderr", "F_series"]);
            for i in 0..grid.len() {
                t.push(vec![grid[i].into(), emp.f_emp[i].into(), emp.stderr[i].into(), f_series[i].into()]);
            }
            emit(&t, output.format, output.out.as_deref())?;
        }
        Command::Verify { params, suite, paths, steps, seed, output } => {
            let ev = evaluator(&params)?;
            let mut checks = Vec::new();
            if suite != Suite::Mc {
                checks.extend(core_checks(&ev));
            }
            if suite != Suite::Core {
                checks.extend(mc_checks(&ev, paths, steps, seed)?);
            }
            let (t, ok) = check_rows(&checks);
            emit(&t, output.format, output.out.as_deref())?;
            for c in checks.iter().filter(|c| !c.pass) {
                eprintln!("FAIL {}: {} > {}", c.name, format_num(c.value), format_num(c.tolerance));
            }
            if !ok {
                return Err(Failure::Code(1));
            }
        }
    }
    if cli.strict && not_converged {
        eprintln!("error[E_NOT_CONVERGED]: at least one evaluation did not converge");
        return Err(Failure::Code(3));
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match merge_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{}", diagnostic(&e));
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("{}", diagnostic(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error[E_IO]: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Code(c)) => ExitCode::from(c),
    }
}
