//! Command-line front end: computes bound reports over parameter grids,
//! runs the reproducible Monte Carlo verifications, and exercises the
//! self-test suites. Exit codes: 0 all requested checks pass, 2 usage
//! error, 3 domain error (e.g. a bound requested outside H <= 3/4).

use clap::{Parser, Subcommand, ValueEnum};
use qvbound::chaos::selftest::run_identity_suite;
use qvbound::error::Error;
use qvbound::fbm::{
    fourth_cumulant_exact, kolmogorov_bound, kolmogorov_bound_from_fourth_moment,
    moment_gap_report, multidim_qv_bound, BoundReport, TimePartition,
};
use qvbound::report::{fmt_f64, to_csv, to_json_pretty, ReportDocument};
use qvbound::simulate::{batch_moments, mc_statistics, write_samples, McModel, McRun};
use qvbound::special::SQRT_2PI;
use qvbound::stein::SteinSolution;
use serde::Serialize;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Parser)]
#[command(
    name = "qvbound",
    version,
    about = "Normal-approximation bounds for Wiener chaos and fBm quadratic variation",
    long_about = None,
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundKindArg {
    Kolmogorov,
    MultidimSmooth,
    MomentGap,
}

#[derive(Subcommand)]
enum Command {
    /// Compute bound reports over an (H, n) grid.
    Bound {
        /// Comma-separated Hurst indices, each in (0, 3/4].
        #[arg(long, value_delimiter = ',', required = true)]
        hurst: Vec<f64>,
        /// Comma-separated sample sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Which bound family to compute.
        #[arg(long, value_enum, default_value = "kolmogorov")]
        kind: BoundKindArg,
        /// Chaos order (2 = exact quadratic-variation path; >= 3 estimates
        /// the fourth moment of the Hermite-power variation by Monte Carlo).
        #[arg(long, default_value_t = 2)]
        order: u32,
        /// Moment indices for the moment-gap bound.
        #[arg(long, value_delimiter = ',', default_value = "3,4,5,6")]
        k: Vec<u32>,
        /// Partition 0 = t0 < t1 < ... < td for the multidimensional bound.
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1")]
        partition: Vec<f64>,
        /// Seed for the Monte Carlo route (order >= 3).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replicates for the Monte Carlo route (order >= 3).
        #[arg(long, default_value_t = 50_000)]
        reps: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: OutputFormat,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Omit the generation timestamp (for byte-reproducible files).
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Sample the variation statistic and report empirical moments.
    Simulate {
        #[arg(long, required = true)]
        hurst: f64,
        #[arg(long, required = true)]
        n: usize,
        #[arg(long, required = true)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// 2 = quadratic variation, q >= 3 = Hermite-power variation.
        #[arg(long, default_value_t = 2)]
        order: u32,
        /// Highest moment to estimate.
        #[arg(long, default_value_t = 4)]
        kmax: u32,
        /// Stream the raw statistic samples to this binary file (QVMC).
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Monte Carlo verification: empirical Kolmogorov distance against the
    /// exact bound, and moment checks. Exit 0 iff every check passes.
    McVerify {
        #[arg(long, required = true)]
        hurst: f64,
        #[arg(long, required = true)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads for the replicate sweep (results are identical
        /// for any value; this only changes scheduling).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Run the chaos-algebra identity suite on random kernels.
    TensorSelftest {
        #[arg(long, default_value_t = 20260810)]
        seed: u64,
        #[arg(long, default_value_t = 120)]
        cases: usize,
        /// Also round-trip a sample of random kernels through this JSON file.
        #[arg(long)]
        dump_kernels: Option<PathBuf>,
    },
    /// Tabulate the Stein solution f_z and its equation residual on a grid.
    SteinEval {
        /// Comma-separated quantiles z.
        #[arg(long, value_delimiter = ',', default_value = "-2,-0.5,0,0.5,2", allow_hyphen_values = true)]
        z: Vec<f64>,
        #[arg(long, default_value_t = -8.0, allow_hyphen_values = true)]
        min: f64,
        #[arg(long, default_value_t = 8.0, allow_hyphen_values = true)]
        max: f64,
        #[arg(long, default_value_t = 100_000)]
        points: usize,
        /// Write the full grid table here (CSV: z,x,value,derivative,residual).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn emit(out: Option<&PathBuf>, content: &str) -> qvbound::Result<()> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct GridParams {
    hurst: Vec<f64>,
    n: Vec<usize>,
    order: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    partition: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reps: Option<usize>,
}

#[derive(Serialize)]
struct GridBody {
    reports: Vec<BoundReport>,
}

struct BoundArgs {
    hurst: Vec<f64>,
    n: Vec<usize>,
    kind: BoundKindArg,
    order: u32,
    k: Vec<u32>,
    partition: Vec<f64>,
    seed: u64,
    reps: usize,
    format: OutputFormat,
    out: Option<PathBuf>,
    no_timestamp: bool,
}

fn cmd_bound(args: BoundArgs) -> qvbound::Result<i32> {
    if args.hurst.is_empty() || args.n.is_empty() {
        return Err(Error::invalid("empty parameter grid"));
    }
    let mut reports = Vec::new();
    let mut params = GridParams {
        hurst: args.hurst.clone(),
        n: args.n.clone(),
        order: args.order,
        k: None,
        partition: None,
        seed: None,
        reps: None,
    };
    match args.kind {
        BoundKindArg::Kolmogorov => {
            if args.order < 2 {
                return Err(Error::invalid("chaos order must be >= 2"));
            }
            if args.order >= 3 {
                params.seed = Some(args.seed);
                params.reps = Some(args.reps);
            }
            for &h in &args.hurst {
                for &nn in &args.n {
                    if args.order == 2 {
                        reports.push(kolmogorov_bound(nn, h)?);
                    } else {
                        let model = McModel::hermite_variation(h, nn, args.order)?;
                        let run = McRun::new(args.seed, args.reps);
                        let samples = mc_statistics(&run, &model)?;
                        let (mean, stderr) = batch_moments(&samples, 4, run.batches);
                        reports.push(kolmogorov_bound_from_fourth_moment(
                            nn, h, args.order, mean[3], stderr[3],
                        )?);
                    }
                }
            }
        }
        BoundKindArg::MomentGap => {
            params.k = Some(args.k.clone());
            for &h in &args.hurst {
                for &nn in &args.n {
                    for &kk in &args.k {
                        reports.push(moment_gap_report(nn, h, kk)?);
                    }
                }
            }
        }
        BoundKindArg::MultidimSmooth => {
            let part = TimePartition::new(args.partition.clone())?;
            params.partition = Some(args.partition.clone());
            for &h in &args.hurst {
                for &nn in &args.n {
                    reports.push(multidim_qv_bound(&part, nn, h)?);
                }
            }
        }
    }
    let content = match args.format {
        OutputFormat::Csv => to_csv(&reports),
        OutputFormat::Json => {
            let doc = ReportDocument {
                command: "bound".to_string(),
                generated_at_unix: (!args.no_timestamp).then(now_unix),
                params,
                body: GridBody { reports },
            };
            let mut text = to_json_pretty(&doc)?;
            text.push('\n');
            text
        }
    };
    emit(args.out.as_ref(), &content)?;
    Ok(0)
}

#[derive(Serialize)]
struct SimulateParams {
    hurst: f64,
    n: usize,
    reps: usize,
    seed: u64,
    order: u32,
}

#[derive(Serialize)]
struct SimulateBody {
    moments: qvbound::simulate::MomentEstimates,
    #[serde(skip_serializing_if = "Option::is_none")]
    d_kol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dkw_radius_99: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_dump: Option<String>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    hurst: f64,
    n: usize,
    reps: usize,
    seed: u64,
    order: u32,
    kmax: u32,
    dump: Option<PathBuf>,
    out: Option<PathBuf>,
    no_timestamp: bool,
) -> qvbound::Result<i32> {
    let model = if order == 2 {
        McModel::quadratic_variation(hurst, n)?
    } else {
        McModel::hermite_variation(hurst, n, order)?
    };
    let run = McRun::new(seed, reps);
    let samples = mc_statistics(&run, &model)?;
    if samples.len() < 100 {
        return Err(Error::invalid("simulate needs at least 100 replicates"));
    }
    let kmax = kmax.clamp(1, 8);
    let (mean, stderr) = batch_moments(&samples, kmax, run.batches);
    let moments = qvbound::simulate::MomentEstimates {
        k_max: kmax,
        mean,
        stderr,
    };
    let (d_kol, radius) = if samples.len() >= 10_000 {
        let s = qvbound::stein::EmpiricalSample::new(samples.clone())?;
        (
            Some(qvbound::stein::empirical_kolmogorov(&s)?),
            Some(qvbound::special::dkw_radius(samples.len(), 0.99)?),
        )
    } else {
        (None, None)
    };
    let mut dumped = None;
    if let Some(path) = &dump {
        let file = fs::File::create(path)?;
        write_samples(file, hurst, n, &samples)?;
        dumped = Some(path.display().to_string());
    }
    let doc = ReportDocument {
        command: "simulate".to_string(),
        generated_at_unix: (!no_timestamp).then(now_unix),
        params: SimulateParams {
            hurst,
            n,
            reps,
            seed,
            order,
        },
        body: SimulateBody {
            moments,
            d_kol,
            dkw_radius_99: radius,
            sample_dump: dumped,
        },
    };
    let mut text = to_json_pretty(&doc)?;
    text.push('\n');
    emit(out.as_ref(), &text)?;
    Ok(0)
}

#[derive(Serialize)]
struct VerifyParams {
    hurst: f64,
    n: usize,
    reps: usize,
    seed: u64,
}

#[derive(Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct VerifyBody {
    bound: BoundReport,
    empirical_d_kol: f64,
    dkw_radius_99: f64,
    fourth_moment_exact: f64,
    moment_estimates: qvbound::simulate::MomentEstimates,
    checks: Vec<Check>,
    passed: bool,
}

fn cmd_mc_verify(
    hurst: f64,
    n: usize,
    reps: usize,
    seed: u64,
    out: Option<PathBuf>,
    no_timestamp: bool,
) -> qvbound::Result<i32> {
    let bound = kolmogorov_bound(n, hurst)?;
    let model = McModel::quadratic_variation(hurst, n)?;
    let run = McRun::new(seed, reps);
    let samples = mc_statistics(&run, &model)?;
    if samples.len() < 10_000 {
        return Err(Error::invalid("mc-verify needs at least 10^4 replicates"));
    }
    let (mean, stderr) = batch_moments(&samples, 4, run.batches);
    let est = qvbound::simulate::MomentEstimates {
        k_max: 4,
        mean,
        stderr,
    };
    let s = qvbound::stein::EmpiricalSample::new(samples)?;
    let d_kol = qvbound::stein::empirical_kolmogorov(&s)?;
    let radius = qvbound::special::dkw_radius(reps, 0.99)?;
    let exact_m4 = 3.0 + fourth_cumulant_exact(n, hurst)?;

    let mut checks = Vec::new();
    checks.push(Check {
        name: "kolmogorov-domination".into(),
        passed: d_kol <= bound.value + radius,
        detail: format!(
            "empirical {} <= bound {} + dkw {}",
            fmt_f64(d_kol),
            fmt_f64(bound.value),
            fmt_f64(radius)
        ),
    });
    checks.push(Check {
        name: "mean-centering".into(),
        passed: est.mean[0].abs() <= 5.0 * est.stderr[0],
        detail: format!("|{}| <= 5 x {}", fmt_f64(est.mean[0]), fmt_f64(est.stderr[0])),
    });
    checks.push(Check {
        name: "unit-variance".into(),
        passed: (est.mean[1] - 1.0).abs() <= 5.0 * est.stderr[1],
        detail: format!(
            "|{} - 1| <= 5 x {}",
            fmt_f64(est.mean[1]),
            fmt_f64(est.stderr[1])
        ),
    });
    checks.push(Check {
        name: "fourth-moment".into(),
        passed: (est.mean[3] - exact_m4).abs() <= 5.0 * est.stderr[3],
        detail: format!(
            "|{} - {}| <= 5 x {}",
            fmt_f64(est.mean[3]),
            fmt_f64(exact_m4),
            fmt_f64(est.stderr[3])
        ),
    });
    let passed = checks.iter().all(|c| c.passed);

    let doc = ReportDocument {
        command: "mc-verify".to_string(),
        generated_at_unix: (!no_timestamp).then(now_unix),
        params: VerifyParams {
            hurst,
            n,
            reps,
            seed,
        },
        body: VerifyBody {
            bound,
            empirical_d_kol: d_kol,
            dkw_radius_99: radius,
            fourth_moment_exact: exact_m4,
            moment_estimates: est,
            checks,
            passed,
        },
    };
    let mut text = to_json_pretty(&doc)?;
    text.push('\n');
    emit(out.as_ref(), &text)?;
    Ok(if passed { 0 } else { 1 })
}

fn cmd_tensor_selftest(
    seed: u64,
    cases: usize,
    dump_kernels: Option<PathBuf>,
) -> qvbound::Result<i32> {
    let reports = run_identity_suite(seed, cases)?;
    let mut all_passed = true;
    for r in &reports {
        println!(
            "{} {:<34} cases={:<4} max_err={:.3e} tol={:.1e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.cases,
            r.max_err,
            r.tolerance
        );
        all_passed &= r.passed;
    }
    if let Some(path) = dump_kernels {
        use qvbound::chaos::selftest::random_kernel;
        use qvbound::rng::NormalStream;
        let mut stream = NormalStream::new(seed, 1);
        let kernels: Vec<qvbound::chaos::SymmetricKernel> = (0..8)
            .map(|i| random_kernel(&mut stream, 1 + i % 4, 1 + i % 3))
            .collect();
        let text = serde_json::to_string_pretty(&kernels)
            .map_err(|e| Error::invalid(format!("kernel dump failed: {e}")))?;
        fs::write(&path, &text)?;
        let back: Vec<qvbound::chaos::SymmetricKernel> =
            serde_json::from_str(&fs::read_to_string(&path)?)
                .map_err(|e| Error::invalid(format!("kernel re-read failed: {e}")))?;
        let round_trip_ok = kernels.len() == back.len()
            && kernels.iter().zip(back.iter()).all(|(a, b)| {
                a.order() == b.order()
                    && a.dim() == b.dim()
                    && a.entries().all(|(idx, v)| b.get(idx) == v)
            });
        println!(
            "{} kernel-file-roundtrip                 file={}",
            if round_trip_ok { "PASS" } else { "FAIL" },
            path.display()
        );
        all_passed &= round_trip_ok;
    }
    Ok(if all_passed { 0 } else { 1 })
}

fn cmd_stein_eval(
    z: Vec<f64>,
    min: f64,
    max: f64,
    points: usize,
    out: Option<PathBuf>,
) -> qvbound::Result<i32> {
    if points < 2 {
        return Err(Error::invalid("grid needs at least 2 points"));
    }
    if !(max > min) {
        return Err(Error::invalid("grid needs max > min"));
    }
    let step = (max - min) / (points - 1) as f64;
    let mut table = out
        .as_ref()
        .map(|_| String::from("z,x,value,derivative,residual\n"));
    let mut all_ok = true;
    for &zq in &z {
        let sol = SteinSolution::new(zq)?;
        let phi_z = qvbound::special::norm_cdf(zq);
        let mut max_abs = 0.0f64;
        let mut max_lip = 0.0f64;
        let mut max_residual = 0.0f64;
        let mut prev = f64::NAN;
        for i in 0..points {
            let x = min + step * i as f64;
            let ev = sol.eval(x)?;
            max_abs = max_abs.max(ev.value.abs());
            if i > 0 {
                max_lip = max_lip.max(((ev.value - prev) / step).abs());
            }
            prev = ev.value;
            let residual = if ev.at_kink {
                0.0
            } else {
                let indicator = if x <= zq { 1.0 } else { 0.0 };
                (ev.derivative - x * ev.value - (indicator - phi_z)).abs()
            };
            max_residual = max_residual.max(residual);
            if let Some(t) = table.as_mut() {
                t.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt_f64(zq),
                    fmt_f64(x),
                    fmt_f64(ev.value),
                    fmt_f64(ev.derivative),
                    fmt_f64(residual)
                ));
            }
        }
        let bound_ok = max_abs <= SQRT_2PI / 4.0 + 1e-12;
        let lip_ok = max_lip <= 1.0 + 1e-9;
        let res_ok = max_residual <= 1e-12;
        println!(
            "z={zq:+.3}: sup|f|={max_abs:.12} (<= sqrt(2pi)/4: {bound_ok}), \
             lipschitz={max_lip:.9} (<= 1: {lip_ok}), residual={max_residual:.3e} (<= 1e-12: {res_ok})"
        );
        all_ok &= bound_ok && lip_ok && res_ok;
    }
    if let (Some(path), Some(t)) = (out.as_ref(), table) {
        fs::write(path, t)?;
    }
    Ok(if all_ok { 0 } else { 1 })
}

fn run(cli: Cli) -> qvbound::Result<i32> {
    match cli.command {
        Command::Bound {
            hurst,
            n,
            kind,
            order,
            k,
            partition,
            seed,
            reps,
            format,
            out,
            no_timestamp,
        } => cmd_bound(BoundArgs {
            hurst,
            n,
            kind,
            order,
            k,
            partition,
            seed,
            reps,
            format,
            out,
            no_timestamp,
        }),
        Command::Simulate {
            hurst,
            n,
            reps,
            seed,
            order,
            kmax,
            dump,
            out,
            no_timestamp,
        } => cmd_simulate(hurst, n, reps, seed, order, kmax, dump, out, no_timestamp),
        Command::McVerify {
            hurst,
            n,
            reps,
            seed,
            threads,
            out,
            no_timestamp,
        } => {
            let work = move || cmd_mc_verify(hurst, n, reps, seed, out, no_timestamp);
            match threads {
                Some(t) => {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(t.max(1))
                        .build()
                        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
                    pool.install(work)
                }
                None => work(),
            }
        }
        Command::TensorSelftest {
            seed,
            cases,
            dump_kernels,
        } => cmd_tensor_selftest(seed, cases, dump_kernels),
        Command::SteinEval {
            z,
            min,
            max,
            points,
            out,
        } => cmd_stein_eval(z, min, max, points, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(Error::Domain(msg)) => {
            eprintln!("domain error: {msg}");
            ExitCode::from(3)
        }
        Err(Error::InvalidArgument(msg)) => {
            eprintln!("invalid argument: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
