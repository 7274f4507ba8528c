//! Command-line front end. Every command writes plain files; nothing is plotted.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::detect::{simulate, write_map_csv, RadarScene};
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, ComplexSequence, C64};
use crate::metrics::{af_surface, lag_poly, metrics_report, write_surface_csv, SidelobeRegion};
use crate::sdp::io;
use crate::srocr::{
    assemble_iteration_sdp, design_grid_baseline, srocr_run, write_trace_csv, ConstraintStyle,
    DesignSpec, LiftMode, RankRow,
};
use crate::trigpoly::{certify_bound, segment_weights, sup_modulus_on_band, BoundVerdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DESIGN: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_STALL: i32 = 4;

/// Doppler samples per lag in the cut export.
pub const CUT_POINTS: usize = 4096;

/// Exact rational read from flags such as `3/32`, `0.001` or `1e-3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational(pub Ratio<i128>);

impl Rational {
    pub fn from_integers(num: i128, den: i128) -> Self {
        Self(Ratio::new(num, den))
    }

    /// The one place a rational flag becomes a binary float. Both parts fit in
    /// 53 bits for every value the parser accepts, so the quotient is the
    /// correctly rounded value of the fraction.
    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

const EXACT_LIMIT: i128 = 1 << 53;

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("'{s}' is not an exact rational"));
        let t = s.trim();
        let r = if let Some((a, b)) = t.split_once('/') {
            let (a, b) = (
                parse_decimal(a).ok_or_else(bad)?,
                parse_decimal(b).ok_or_else(bad)?,
            );
            if *b.numer() == 0 {
                return Err(Error::Config(format!("'{s}' divides by zero")));
            }
            a / b
        } else {
            parse_decimal(t).ok_or_else(bad)?
        };
        if r.numer().abs() >= EXACT_LIMIT || *r.denom() >= EXACT_LIMIT {
            return Err(Error::Config(format!(
                "'{s}' needs more than 53 bits of numerator or denominator"
            )));
        }
        Ok(Self(r))
    }
}

/// `[-]digits[.digits][e[-]digits]` as an exact fraction.
fn parse_decimal(s: &str) -> Option<Ratio<i128>> {
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: i128 = format!("{int}{frac}").parse().ok()?;
    let scale = exp.checked_sub(frac.len() as i32)?;
    let pow = 10i128.checked_pow(scale.unsigned_abs())?;
    let r = if scale >= 0 {
        Ratio::from_integer(digits.checked_mul(pow)?)
    } else {
        Ratio::new(digits, pow)
    };
    Some(if neg { -r } else { r })
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Text(t) => t,
            // Shortest round-trip decimal, so 0.001 stays 1/1000.
            Raw::Number(v) => format!("{v:e}"),
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StyleFlag {
    #[default]
    Band,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeFlag {
    #[default]
    Trimmed,
    Paperfull,
}

/// Design configuration from a JSON file, flags, or both (flags win).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub l: Option<usize>,
    pub fr: Option<Rational>,
    pub zeta: Option<Rational>,
    pub kappa: Option<Rational>,
    pub eps: Option<Rational>,
    pub mode: Option<ModeFlag>,
    pub style: Option<StyleFlag>,
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub max_solves: Option<usize>,
    pub warm_start: Option<bool>,
    pub out: Option<PathBuf>,
    pub dump_sdp: Option<bool>,
    pub verbosity: Option<u8>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("run config: {e}")))
    }

    /// Fields set in `other` replace those here.
    pub fn merge(self, other: RunConfig) -> Self {
        Self {
            n: other.n.or(self.n),
            l: other.l.or(self.l),
            fr: other.fr.or(self.fr),
            zeta: other.zeta.or(self.zeta),
            kappa: other.kappa.or(self.kappa),
            eps: other.eps.or(self.eps),
            mode: other.mode.or(self.mode),
            style: other.style.or(self.style),
            m: other.m.or(self.m),
            k: other.k.or(self.k),
            seed: other.seed.or(self.seed),
            max_solves: other.max_solves.or(self.max_solves),
            warm_start: other.warm_start.or(self.warm_start),
            out: other.out.or(self.out),
            dump_sdp: other.dump_sdp.or(self.dump_sdp),
            verbosity: other.verbosity.or(self.verbosity),
        }
    }

    /// Validated design spec. Grid consistency is checked on the rationals.
    pub fn spec(&self) -> Result<DesignSpec> {
        let need = |name: &str| Error::Config(format!("missing --{name}"));
        let n = self.n.ok_or_else(|| need("n"))?;
        let l = self.l.ok_or_else(|| need("l"))?;
        let style = self.style.unwrap_or_default();
        let fr = match (style, self.fr, self.m, self.k) {
            (StyleFlag::Grid, fr, Some(m), Some(k)) => {
                if m == 0 {
                    return Err(Error::Config("grid size M must be positive".into()));
                }
                let grid = Rational::from_integers(k as i128, m as i128);
                match fr {
                    Some(fr) if fr != grid => {
                        return Err(Error::Config(format!(
                            "grid K/M = {grid} does not equal f_R = {fr}"
                        )))
                    }
                    _ => grid,
                }
            }
            (StyleFlag::Grid, _, _, _) => {
                return Err(Error::Config("grid style needs --m and --k".into()))
            }
            (StyleFlag::Band, fr, _, _) => fr.ok_or_else(|| need("fr"))?,
        };
        let default =
            |v: Option<Rational>, num, den| v.unwrap_or(Rational::from_integers(num, den));
        let mut spec = DesignSpec::new(
            n,
            l,
            fr.to_f64(),
            default(self.zeta, 10, 1).to_f64(),
            default(self.kappa, 99, 100).to_f64(),
            default(self.eps, 1, 1000).to_f64(),
        );
        spec.mode = match self.mode.unwrap_or_default() {
            ModeFlag::Trimmed => LiftMode::Trimmed,
            ModeFlag::Paperfull => LiftMode::PaperFull,
        };
        if let (StyleFlag::Grid, Some(m), Some(k)) = (style, self.m, self.k) {
            spec.style = ConstraintStyle::Grid { m, k };
        }
        spec.seed = self.seed.unwrap_or(0);
        if let Some(s) = self.max_solves {
            spec.max_solves = s;
        }
        spec.warm_start = self.warm_start.unwrap_or(true);
        spec.validate()?;
        Ok(spec)
    }
}

/// Waveform file metadata.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WaveformMeta {
    #[serde(default)]
    pub spec: Option<DesignSpec>,
    #[serde(default)]
    pub ntpsl_db: Option<f64>,
}

/// `{"n", "seq_re", "seq_im", "meta": {"spec", "ntpsl_db"}}`. Floats are
/// written as shortest round-trip decimals, so a reload is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformFile {
    pub n: usize,
    pub seq_re: Vec<f64>,
    pub seq_im: Vec<f64>,
    #[serde(default)]
    pub meta: WaveformMeta,
}

impl WaveformFile {
    pub fn new(x: &ComplexSequence, meta: WaveformMeta) -> Self {
        Self {
            n: x.len(),
            seq_re: x.as_slice().iter().map(|z| z.re).collect(),
            seq_im: x.as_slice().iter().map(|z| z.im).collect(),
            meta,
        }
    }

    pub fn sequence(&self) -> Result<ComplexSequence> {
        if self.seq_re.len() != self.n || self.seq_im.len() != self.n {
            return Err(Error::Config(format!(
                "waveform declares n = {} but carries {} real and {} imaginary parts",
                self.n,
                self.seq_re.len(),
                self.seq_im.len()
            )));
        }
        ComplexSequence::new(
            self.seq_re
                .iter()
                .zip(&self.seq_im)
                .map(|(&re, &im)| C64::new(re, im))
                .collect(),
        )
        .map_err(|e| Error::Config(format!("waveform: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dtaf",
    version,
    about = "Unimodular waveform design over a continuous Doppler band"
)]
pub struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a design and write waveform, metrics and trace files.
    Design(DesignArgs),
    /// Evaluate a waveform's sidelobe metrics and per-lag Doppler cuts.
    Eval(EvalArgs),
    /// Export the full ambiguity surface of a waveform.
    Surface(SurfaceArgs),
    /// Decide whether one lag stays under a bound across the band.
    Certify(CertifyArgs),
    /// Simulate a detection scene and score false alarms.
    Detect(DetectArgs),
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// JSON run config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long, value_parser = parse_rational)]
    pub fr: Option<Rational>,
    #[arg(long, value_parser = parse_rational)]
    pub zeta: Option<Rational>,
    #[arg(long, value_parser = parse_rational)]
    pub kappa: Option<Rational>,
    #[arg(long, value_parser = parse_rational)]
    pub eps: Option<Rational>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeFlag>,
    #[arg(long, value_enum)]
    pub style: Option<StyleFlag>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_solves: Option<usize>,
    #[arg(long)]
    pub no_warm_start: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the relaxed and final iteration problems.
    #[arg(long)]
    pub dump_sdp: bool,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long, value_parser = parse_rational)]
    pub fr: Option<Rational>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub waveform: PathBuf,
    #[command(flatten)]
    pub region: RegionArgs,
    #[arg(long, default_value_t = CUT_POINTS)]
    pub points: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    pub waveform: PathBuf,
    #[arg(long, default_value_t = 1025)]
    pub points: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    pub waveform: PathBuf,
    #[arg(long)]
    pub lag: usize,
    /// Bound as `20 log10(gamma / N)`; `-inf` asks for an identically zero lag.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_db: f64,
    #[arg(long, value_parser = parse_rational)]
    pub fr: Rational,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    pub scene: PathBuf,
    pub waveform: PathBuf,
    /// Velocity hypotheses per resolution cell.
    #[arg(long, default_value_t = 1)]
    pub oversample: usize,
    /// Override the scene threshold (dB on the normalized map).
    #[arg(long, allow_hyphen_values = true)]
    pub threshold_db: Option<f64>,
    /// Sidelobe region used to count in-region false alarms; defaults to the
    /// waveform's design region when it has one.
    #[arg(long)]
    pub region_l: Option<usize>,
    #[arg(long, value_parser = parse_rational)]
    pub region_fr: Option<Rational>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Design(_) => EXIT_DESIGN,
        Error::SolverStall(_) => EXIT_STALL,
        _ => EXIT_CONFIG,
    }
}

/// Parses the process arguments, runs one command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Design(a) => cmd_design(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Surface(a) => cmd_surface(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Detect(a) => cmd_detect(a),
    }
}

fn out_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct DesignSummary {
    #[serde(flatten)]
    report: crate::metrics::MetricsReport,
    iterations: usize,
    solves: usize,
    capped: bool,
    t_final_db: f64,
    pre_projection_deviation: f64,
    certificate_residual: Option<f64>,
}

pub fn cmd_design(a: DesignArgs) -> Result<()> {
    let base = match &a.config {
        Some(p) => RunConfig::from_json(
            &fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        )?,
        None => RunConfig::default(),
    };
    let flags = RunConfig {
        n: a.n,
        l: a.l,
        fr: a.fr,
        zeta: a.zeta,
        kappa: a.kappa,
        eps: a.eps,
        mode: a.mode,
        style: a.style,
        m: a.m,
        k: a.k,
        seed: a.seed,
        max_solves: a.max_solves,
        warm_start: a.no_warm_start.then_some(false),
        out: a.out,
        dump_sdp: a.dump_sdp.then_some(true),
        verbosity: None,
    };
    let cfg = base.merge(flags);
    let spec = cfg.spec()?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    out_dir(&out)?;
    if cfg.dump_sdp.unwrap_or(false) {
        let relaxed = assemble_iteration_sdp(&spec, None)?;
        fs::write(out.join("relaxed.sdp"), io::dump(&relaxed.problem))?;
    }

    let start = Instant::now();
    let result = match spec.style {
        ConstraintStyle::Band => srocr_run(&spec)?,
        ConstraintStyle::Grid { .. } => design_grid_baseline(&spec)?,
    };
    log::info!(
        "design finished in {:.1} s: NTPSL {:.3} dB after {} iterations",
        start.elapsed().as_secs_f64(),
        result.report.ntpsl_db,
        result.iterations()
    );

    if cfg.dump_sdp.unwrap_or(false) {
        let eig = eig_hermitian(&result.x_lifted)?;
        let w = result.trace.last().map(|r| r.w).unwrap_or(0.0);
        let rank = RankRow {
            u: eig.principal_vector(),
            w,
        };
        let last = assemble_iteration_sdp(&spec, Some(&rank))?;
        fs::write(out.join("final.sdp"), io::dump(&last.problem))?;
    }

    let weights = segment_weights(spec.f_r)?;
    let certificate_residual = (!result.certificates.is_empty()).then(|| {
        result
            .certificates
            .iter()
            .map(|c| c.equality_residual(weights))
            .fold(0.0, f64::max)
    });
    WaveformFile::new(
        &result.x_opt,
        WaveformMeta {
            spec: Some(spec.clone()),
            ntpsl_db: Some(result.report.ntpsl_db),
        },
    )
    .write(&out.join("waveform.json"))?;
    write_json(
        &out.join("metrics.json"),
        &DesignSummary {
            report: result.report.clone(),
            iterations: result.iterations(),
            solves: result.solves,
            capped: result.capped,
            t_final_db: 10.0 * result.t_final.max(0.0).log10(),
            pre_projection_deviation: result.pre_projection_deviation,
            certificate_residual,
        },
    )?;
    write_trace_csv(&result.trace, fs::File::create(out.join("trace.csv"))?)?;
    println!(
        "NTPSL {:.4} dB, {} iterations, files in {}",
        result.report.ntpsl_db,
        result.iterations(),
        out.display()
    );
    Ok(())
}

/// Region from flags, falling back to the waveform's design region.
fn eval_region(r: &RegionArgs, meta: &WaveformMeta) -> Result<SidelobeRegion> {
    let spec = meta.spec.as_ref();
    let l =
        r.l.or(spec.map(|s| s.max_lag))
            .ok_or_else(|| Error::Config("missing --l".into()))?;
    match (r.m, r.k) {
        (Some(m), Some(k)) => {
            if m == 0 {
                return Err(Error::Config("grid size M must be positive".into()));
            }
            if let Some(fr) = r.fr {
                if fr != Rational::from_integers(k as i128, m as i128) {
                    return Err(Error::Config(format!(
                        "grid K/M = {k}/{m} does not equal f_R = {fr}"
                    )));
                }
            }
            SidelobeRegion::gridded(l, m, k)
        }
        (None, None) => {
            let fr = match (r.fr, spec) {
                (Some(fr), _) => fr.to_f64(),
                (None, Some(s)) => s.f_r,
                (None, None) => return Err(Error::Config("missing --fr".into())),
            };
            let region = SidelobeRegion::continuous(l, fr)?;
            match spec.map(|s| s.style) {
                Some(ConstraintStyle::Grid { m, k }) if r.fr.is_none() && r.l.is_none() => {
                    region.with_grid(m, k)
                }
                _ => Ok(region),
            }
        }
        _ => Err(Error::Config("a grid needs both --m and --k".into())),
    }
}

#[derive(Debug, Serialize)]
struct EvalSummary {
    #[serde(flatten)]
    report: crate::metrics::MetricsReport,
    ngpsl_le_ntpsl: Option<bool>,
}

pub fn cmd_eval(a: EvalArgs) -> Result<()> {
    let file = WaveformFile::read(&a.waveform)?;
    let x = file.sequence()?;
    let region = eval_region(&a.region, &file.meta)?;
    if region.max_lag >= x.len() {
        return Err(Error::Config(format!(
            "max lag {} must be below N = {}",
            region.max_lag,
            x.len()
        )));
    }
    let report = metrics_report(&x, &region, None)?;
    let ngpsl_le_ntpsl = report.ngpsl_db.map(|g| g <= report.ntpsl_db + 1e-9);
    if ngpsl_le_ntpsl == Some(false) {
        return Err(Error::Design(
            "grid peak exceeds the continuous peak".into(),
        ));
    }
    out_dir(&a.out)?;
    let l = region.max_lag as isize;
    let cuts = af_surface(&x, -l..=l, a.points)?;
    write_surface_csv(&cuts, x.len(), fs::File::create(a.out.join("cuts.csv"))?)?;
    println!("{}", serde_json::to_string(&report)?);
    write_json(
        &a.out.join("metrics.json"),
        &EvalSummary {
            report,
            ngpsl_le_ntpsl,
        },
    )
}

pub fn cmd_surface(a: SurfaceArgs) -> Result<()> {
    let x = WaveformFile::read(&a.waveform)?.sequence()?;
    out_dir(&a.out)?;
    let l = x.len() as isize - 1;
    let surface = af_surface(&x, -l..=l, a.points)?;
    write_surface_csv(
        &surface,
        x.len(),
        fs::File::create(a.out.join("surface.csv"))?,
    )
}

#[derive(Debug, Serialize)]
pub struct CertifyReport {
    pub verdict: String,
    pub lag: usize,
    pub gamma: f64,
    pub sup: f64,
    pub sup_at: f64,
    pub equality_residual: Option<f64>,
    pub min_eig_bordered: Option<f64>,
    pub min_eig_p: Option<f64>,
}

pub fn cmd_certify(a: CertifyArgs) -> Result<()> {
    let x = WaveformFile::read(&a.waveform)?.sequence()?;
    let fr = a.fr.to_f64();
    let weights = segment_weights(fr).map_err(|e| Error::Config(e.to_string()))?;
    let h = lag_poly(&x, a.lag).map_err(|e| Error::Config(e.to_string()))?;
    let gamma = if a.gamma_db == f64::NEG_INFINITY {
        0.0
    } else if a.gamma_db.is_finite() {
        x.len() as f64 * 10f64.powf(a.gamma_db / 20.0)
    } else {
        return Err(Error::Config(format!(
            "bound {} dB is not usable",
            a.gamma_db
        )));
    };
    let (sup_at, sup) = sup_modulus_on_band(&h, fr);
    let mut report = CertifyReport {
        verdict: "infeasible".into(),
        lag: a.lag,
        gamma,
        sup,
        sup_at,
        equality_residual: None,
        min_eig_bordered: None,
        min_eig_p: None,
    };
    if let BoundVerdict::Feasible(c) = certify_bound(&h, gamma, fr)? {
        report.verdict = "feasible".into();
        report.equality_residual = Some(c.equality_residual(weights));
        report.min_eig_bordered = Some(c.bordered().min_eigenvalue()?);
        report.min_eig_p = if c.p.dim() > 0 {
            Some(c.p.min_eigenvalue()?)
        } else {
            None
        };
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

pub fn cmd_detect(a: DetectArgs) -> Result<()> {
    let text = fs::read_to_string(&a.scene)
        .map_err(|e| Error::Config(format!("{}: {e}", a.scene.display())))?;
    let scene = RadarScene::from_json(&text)?;
    let file = WaveformFile::read(&a.waveform)?;
    let x = file.sequence()?;
    let region = match (a.region_l, a.region_fr, file.meta.spec.as_ref()) {
        (Some(l), Some(fr), _) => Some((l, fr.to_f64())),
        (None, None, Some(s)) => Some((s.max_lag, s.f_r)),
        (None, None, None) => None,
        _ => {
            return Err(Error::Config(
                "--region-l and --region-fr go together".into(),
            ))
        }
    };
    let threshold = a.threshold_db.map(|db| 10f64.powf(db / 10.0));
    let (map, report) = simulate(&x, &scene, a.oversample, threshold, region)?;
    out_dir(&a.out)?;
    write_map_csv(&map, &report, fs::File::create(a.out.join("map.csv"))?)?;
    write_json(&a.out.join("report.json"), &report)?;
    println!(
        "{} detections, {} false alarms, {} of {} targets detected",
        report.detections.len(),
        report.false_alarms.len(),
        report.targets_detected,
        scene.targets.len()
    );
    Ok(())
}
