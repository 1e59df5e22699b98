mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dimerlab::continuum::{self, ScalingInput, VolumeConfig};
use dimerlab::dimer::{self, parse_sequence};
use dimerlab::lyapunov::{self, LyapunovEstimate, MomentExponents};
use dimerlab::mean::{self, MeanMethod};
use dimerlab::selftest;
use dimerlab::transfer::{self, Word};
use dimerlab::{CouplingPoint, Error};

use output::to_json;

#[derive(Parser)]
#[command(name = "dimerlab", version, about = "Coloured hard dimers, transfer matrices and random products")]
struct Cli {
    /// Seed for every Monte Carlo stream.
    #[arg(long, global = true, default_value_t = 42, env = "DIMERLAB_SEED")]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json, env = "DIMERLAB_FORMAT")]
    format: Format,
    /// Write the document here instead of standard output.
    #[arg(long, global = true, env = "DIMERLAB_OUT")]
    out: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true, env = "DIMERLAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone, Copy)]
struct PointArgs {
    #[arg(long, allow_negative_numbers = true)]
    u: f64,
    #[arg(long, allow_negative_numbers = true)]
    v: f64,
    #[arg(long, allow_negative_numbers = true)]
    w: f64,
}

impl PointArgs {
    fn point(&self) -> CouplingPoint {
        CouplingPoint::new(self.u, self.v, self.w)
    }
}

#[derive(Args, Clone, Copy)]
struct OptionalPointArgs {
    #[arg(long, allow_negative_numbers = true, required_unless_present = "grid")]
    u: Option<f64>,
    #[arg(long, allow_negative_numbers = true, required_unless_present = "grid")]
    v: Option<f64>,
    #[arg(long, allow_negative_numbers = true, required_unless_present = "grid")]
    w: Option<f64>,
}

impl OptionalPointArgs {
    fn point(&self) -> Option<CouplingPoint> {
        Some(CouplingPoint::new(self.u?, self.v?, self.w?))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate hard-dimer configurations of a word and count them.
    Hdc {
        #[arg(long)]
        sequence: String,
        /// Include every configuration in the JSON document.
        #[arg(long)]
        list: bool,
    },
    /// Generating function of one word.
    Zxi {
        #[arg(long)]
        sequence: String,
        #[command(flatten)]
        point: PointArgs,
        /// Evaluate at (u, v, w) instead of (-u, -v, w).
        #[arg(long)]
        unsigned: bool,
        /// Also evaluate in exact rational arithmetic.
        #[arg(long)]
        exact: bool,
    },
    /// Mean generating function over all words of length N.
    Mean {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value = "recurrence")]
        method: String,
        /// CSV comparison of every method for N = 1..n.
        #[arg(long)]
        compare: bool,
    },
    /// Eigenvalues of B, R, BR and RB.
    Spectra {
        #[command(flatten)]
        point: PointArgs,
        /// B, R, BR, RB or all.
        #[arg(long, default_value = "all")]
        word: String,
    },
    /// Membership in the regions A, B and C.
    Regions {
        #[command(flatten)]
        point: OptionalPointArgs,
        /// Emit a CSV grid over the u = v slice with this many steps per axis.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Monte Carlo Lyapunov exponent and CLT variance.
    Clt {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// CSV histogram of the standardized logs.
        #[arg(long)]
        histogram: bool,
        #[arg(long, default_value_t = 50)]
        bins: usize,
    },
    /// Moment exponents from the mean and Kronecker-mean matrices.
    Moment {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Inverse mean against its log-normal prediction.
    InverseMean {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// CSV trend over N = 8, 12, 16, 20.
        #[arg(long)]
        trend: bool,
    },
    /// Summed propagator, scaling map, volume and extremum analysis.
    #[command(subcommand)]
    Continuum(ContinuumCommand),
    /// Run the embedded fixture suite.
    Selftest,
}

#[derive(Subcommand)]
enum ContinuumCommand {
    /// Geometric-series propagator at one point or on a grid.
    Zbar {
        #[command(flatten)]
        point: OptionalPointArgs,
        /// Bare coupling; defaults to gamma'.
        #[arg(long, allow_negative_numbers = true)]
        gamma: Option<f64>,
        /// CSV grid over the u = v slice with this many steps per axis.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// The renormalized coupling gamma'.
    GammaPrime,
    /// Canonical scaling map to lattice couplings.
    Scale {
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long, allow_negative_numbers = true)]
        y: f64,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        b1: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        b2: f64,
    },
    /// Discrete volume observable.
    Volume {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, allow_negative_numbers = true)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        b1: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        b2: f64,
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
    },
    /// Extremum analysis of the inverse mean.
    Appendix {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        grid_u: usize,
        #[arg(long, default_value_t = 64)]
        grid_w: usize,
        /// CSV curves 2^(N-1) D1 D2 for the reference w values.
        #[arg(long)]
        fig3: bool,
        /// u samples per curve with --fig3.
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
}

enum Doc {
    Json(String),
    Csv(String),
}

enum Failure {
    Usage(String),
    Domain(Error),
    Selftest(String, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type Outcome = std::result::Result<Doc, Failure>;

#[derive(Serialize)]
struct HdcOutput {
    sequence: String,
    #[serde(rename = "N")]
    n: usize,
    configurations: u64,
    counts: Vec<CountRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    configs: Option<Vec<dimer::HardDimerConfig>>,
}

#[derive(Serialize)]
struct CountRow {
    s_b: usize,
    s_r: usize,
    m: usize,
    count: u64,
}

#[derive(Serialize)]
struct ZxiOutput {
    sequence: String,
    u: f64,
    v: f64,
    w: f64,
    signed: bool,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    transfer_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<dimer::ExactValue>,
}

#[derive(Serialize)]
struct MeanOutput {
    #[serde(rename = "N")]
    n: usize,
    u: f64,
    v: f64,
    w: f64,
    method: MeanMethod,
    value: f64,
}

#[derive(Serialize)]
struct CltOutput {
    #[serde(flatten)]
    estimate: LyapunovEstimate,
    moments: MomentExponents,
}

#[derive(Serialize)]
struct ScaleOutput {
    #[serde(flatten)]
    input: ScalingInput,
    b1: f64,
    b2: f64,
    u: f64,
    v: f64,
    w: f64,
    region: transfer::RegionMembership,
}

#[derive(Serialize)]
struct VolumeOutput {
    u: f64,
    v: f64,
    w: f64,
    gamma: f64,
    b1: f64,
    b2: f64,
    h: f64,
    volume: f64,
    /// Which function the logarithmic derivative acts on.
    ln_z_of: &'static str,
}

#[derive(Serialize)]
struct AppendixOutput {
    #[serde(flatten)]
    report: continuum::AppendixReport,
    growth_table: Vec<continuum::GrowthCheck>,
}

#[derive(Serialize)]
struct GammaPrimeOutput {
    gamma_prime: f64,
    gamma_prime_opposite_sign: f64,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    error: ErrorBody<'a>,
}

fn json_only(format: Format, what: &str) -> std::result::Result<(), Failure> {
    match format {
        Format::Json => Ok(()),
        Format::Csv => Err(Failure::Usage(format!("no CSV output for {what}"))),
    }
}

fn hdc(format: Format, sequence: &str, list: bool) -> Outcome {
    let seq = parse_sequence(sequence)?;
    let table = dimer::count_table(&seq)?;
    if format == Format::Csv {
        return Ok(Doc::Csv(table.to_csv()));
    }
    let configs = if list { Some(dimer::enumerate_hdcs(&seq)?) } else { None };
    Ok(Doc::Json(to_json(&HdcOutput {
        sequence: seq.to_string(),
        n: seq.len(),
        configurations: table.total(),
        counts: table
            .counts
            .iter()
            .map(|(&(s_b, s_r, m), &count)| CountRow { s_b, s_r, m, count })
            .collect(),
        configs,
    })))
}

fn zxi(format: Format, sequence: &str, p: CouplingPoint, unsigned: bool, exact: bool) -> Outcome {
    json_only(format, "zxi")?;
    let seq = parse_sequence(sequence)?;
    let signed = !unsigned;
    let value = dimer::generating_function(&seq, &p, signed)?;
    Ok(Doc::Json(to_json(&ZxiOutput {
        sequence: seq.to_string(),
        u: p.u,
        v: p.v,
        w: p.w,
        signed,
        value,
        transfer_value: signed.then(|| transfer::z_via_transfer(&seq, &p)),
        exact: if exact { Some(dimer::generating_function_exact_at(&seq, &p, signed)?) } else { None },
    })))
}

fn mean_cmd(format: Format, p: CouplingPoint, n: usize, method: &str, compare: bool) -> Outcome {
    if compare || format == Format::Csv {
        let rows = mean::mean_comparison(n, &p)?;
        return Ok(Doc::Csv(mean::mean_comparison_csv(&rows)));
    }
    let method: MeanMethod = method.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
    let r = mean::mean_by_method(n, &p, method)?;
    Ok(Doc::Json(to_json(&MeanOutput { n: r.n, u: p.u, v: p.v, w: p.w, method: r.method, value: r.value })))
}

fn spectra(format: Format, p: CouplingPoint, word: &str) -> Outcome {
    json_only(format, "spectra")?;
    p.require_unit_cube()?;
    if word.eq_ignore_ascii_case("all") {
        let reports: Vec<_> = Word::ALL.iter().map(|&w| transfer::spectral_report(w, &p)).collect();
        return Ok(Doc::Json(to_json(&reports)));
    }
    let word: Word = word.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
    Ok(Doc::Json(to_json(&transfer::spectral_report(word, &p))))
}

fn regions(format: Format, point: Option<CouplingPoint>, grid: Option<usize>) -> Outcome {
    if let Some(steps) = grid {
        if steps < 2 {
            return Err(Failure::Usage("--grid needs at least 2 steps".into()));
        }
        return Ok(Doc::Csv(transfer::region_grid_csv(&transfer::region_grid(steps))));
    }
    json_only(format, "regions without --grid")?;
    let p = point.expect("clap enforces the point");
    Ok(Doc::Json(to_json(&transfer::region_membership(&p)?)))
}

fn warn_outside_c(p: &CouplingPoint) {
    if !transfer::region_membership(p).map(|r| r.in_c).unwrap_or(false) {
        eprintln!("warning: point lies outside region C; the CLT is not guaranteed there");
    }
}

fn clt(format: Format, seed: u64, p: CouplingPoint, n: usize, samples: usize, histogram: bool, bins: usize) -> Outcome {
    warn_outside_c(&p);
    if histogram || format == Format::Csv {
        if bins == 0 {
            return Err(Failure::Usage("--bins must be positive".into()));
        }
        let bins = lyapunov::standardized_histogram(&p, n, samples, seed, bins)?;
        let mut out = String::from("bin_left,bin_right,count\n");
        for b in bins {
            out.push_str(&format!("{:.16e},{:.16e},{}\n", b.bin_left, b.bin_right, b.count));
        }
        return Ok(Doc::Csv(out));
    }
    let estimate = lyapunov::estimate_clt(&p, n, samples, seed)?;
    let moments = lyapunov::moment_exponents(&p)?;
    Ok(Doc::Json(to_json(&CltOutput { estimate, moments })))
}

fn inverse_mean(format: Format, seed: u64, p: CouplingPoint, n: usize, samples: usize, trend: bool) -> Outcome {
    warn_outside_c(&p);
    if trend || format == Format::Csv {
        let reports = [8usize, 12, 16, 20]
            .iter()
            .map(|&k| lyapunov::inverse_mean_experiment(&p, k, samples, seed))
            .collect::<dimerlab::Result<Vec<_>>>()?;
        return Ok(Doc::Csv(lyapunov::inverse_mean_trend_csv(&reports)));
    }
    let r = lyapunov::inverse_mean_experiment(&p, n, samples, seed)?;
    if !r.reliable {
        eprintln!("warning: {} exact zeros among the products; the inverse mean is unreliable", r.zero_hits);
    }
    Ok(Doc::Json(to_json(&r)))
}

fn continuum_cmd(format: Format, cmd: ContinuumCommand) -> Outcome {
    match cmd {
        ContinuumCommand::Zbar { point, gamma, grid } => {
            let gamma = gamma.unwrap_or_else(continuum::gamma_prime);
            if let Some(steps) = grid {
                if steps < 1 {
                    return Err(Failure::Usage("--grid needs at least 1 step".into()));
                }
                return Ok(Doc::Csv(continuum::zbar_grid_csv(&continuum::zbar_grid(gamma, steps))));
            }
            json_only(format, "continuum zbar without --grid")?;
            let p = point.point().expect("clap enforces the point");
            Ok(Doc::Json(to_json(&continuum::zbar_geometric(&p, gamma)?)))
        }
        ContinuumCommand::GammaPrime => {
            json_only(format, "continuum gamma-prime")?;
            Ok(Doc::Json(to_json(&GammaPrimeOutput {
                gamma_prime: continuum::gamma_prime(),
                gamma_prime_opposite_sign: continuum::gamma_prime_opposite_sign(),
            })))
        }
        ContinuumCommand::Scale { x, y, lambda, a, b1, b2 } => {
            json_only(format, "continuum scale")?;
            let input = ScalingInput { x, y, lambda, a };
            let cfg = VolumeConfig { b1, b2, ..VolumeConfig::default() };
            let p = continuum::scaling_map(&input, &cfg)?;
            Ok(Doc::Json(to_json(&ScaleOutput {
                input,
                b1,
                b2,
                u: p.u,
                v: p.v,
                w: p.w,
                region: transfer::region_membership(&p)?,
            })))
        }
        ContinuumCommand::Volume { point, gamma, b1, b2, h } => {
            json_only(format, "continuum volume")?;
            let p = point.point();
            let gamma = gamma.unwrap_or_else(continuum::gamma_prime);
            let cfg = VolumeConfig { b1, b2, h };
            let volume = continuum::discrete_volume(&p, gamma, &cfg)?;
            Ok(Doc::Json(to_json(&VolumeOutput {
                u: p.u,
                v: p.v,
                w: p.w,
                gamma,
                b1,
                b2,
                h,
                volume,
                ln_z_of: "zbar_geometric",
            })))
        }
        ContinuumCommand::Appendix { n, grid_u, grid_w, fig3, points } => {
            if fig3 || format == Format::Csv {
                return Ok(Doc::Csv(continuum::fig3_csv(&continuum::fig3_curves(n, points)?)));
            }
            let report = continuum::maxima_scan(n, grid_u, grid_w)?;
            let growth_table = [5usize, 10, 20, 40]
                .iter()
                .map(|&k| continuum::appendix_growth_check(k))
                .collect::<dimerlab::Result<Vec<_>>>()?;
            Ok(Doc::Json(to_json(&AppendixOutput { report, growth_table })))
        }
    }
}

fn selftest_cmd(format: Format) -> Outcome {
    let report = selftest::run_selftest();
    for f in &report.fixtures {
        eprintln!("{} {}: {}", if f.passed { "PASS" } else { "FAIL" }, f.name, f.detail);
    }
    let doc = match format {
        Format::Json => Doc::Json(to_json(&report)),
        Format::Csv => {
            let mut out = String::from("fixture,passed,detail\n");
            for f in &report.fixtures {
                out.push_str(&format!("{},{},\"{}\"\n", f.name, f.passed, f.detail.replace('"', "\"\"")));
            }
            Doc::Csv(out)
        }
    };
    if report.passed {
        Ok(doc)
    } else {
        let failed: Vec<_> = report.fixtures.iter().filter(|f| !f.passed).map(|f| f.name.as_str()).collect();
        Err(Failure::Selftest(
            match doc {
                Doc::Json(s) | Doc::Csv(s) => s,
            },
            failed.join(", "),
        ))
    }
}

fn dispatch(cli: Cli) -> Outcome {
    let (format, seed) = (cli.format, cli.seed);
    match cli.command {
        Command::Hdc { sequence, list } => hdc(format, &sequence, list),
        Command::Zxi { sequence, point, unsigned, exact } => zxi(format, &sequence, point.point(), unsigned, exact),
        Command::Mean { point, n, method, compare } => mean_cmd(format, point.point(), n, &method, compare),
        Command::Spectra { point, word } => spectra(format, point.point(), &word),
        Command::Regions { point, grid } => regions(format, point.point(), grid),
        Command::Clt { point, n, samples, histogram, bins } => {
            clt(format, seed, point.point(), n, samples, histogram, bins)
        }
        Command::Moment { point } => {
            json_only(format, "moment")?;
            Ok(Doc::Json(to_json(&lyapunov::moment_exponents(&point.point())?)))
        }
        Command::InverseMean { point, n, samples, trend } => {
            inverse_mean(format, seed, point.point(), n, samples, trend)
        }
        Command::Continuum(cmd) => continuum_cmd(format, cmd),
        Command::Selftest => selftest_cmd(format),
    }
}

fn write_document(out: &Option<PathBuf>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

fn usage_error(message: &str) -> ExitCode {
    let line = message.lines().next().unwrap_or("").trim();
    let line = line.strip_prefix("error: ").unwrap_or(line);
    eprintln!("error: usage: {line}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => usage_error(&e.to_string()),
            };
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return usage_error("--threads must be positive");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            return usage_error(&e.to_string());
        }
    }
    let out = cli.out.clone();
    let result = dispatch(cli);
    let (text, code) = match result {
        Ok(Doc::Json(s)) | Ok(Doc::Csv(s)) => (s, ExitCode::SUCCESS),
        Err(Failure::Usage(msg)) => return usage_error(&msg),
        Err(Failure::Domain(e)) => {
            eprintln!("error: {}: {}", e.code(), e);
            let doc = ErrorDoc { error: ErrorBody { code: e.code(), message: e.to_string() } };
            (to_json(&doc), ExitCode::from(1))
        }
        Err(Failure::Selftest(doc, failed)) => {
            eprintln!("error: selftest-failed: {failed}");
            (doc, ExitCode::from(1))
        }
    };
    if let Err(e) = write_document(&out, &text) {
        eprintln!("error: io: {e}");
        return ExitCode::from(1);
    }
    code
}
