//! `normsieve`: counts, sieve pipeline, Euler products, lattices and volumes
//! from the command line. Tables go to stdout as CSV.

mod config;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Parser, Subcommand, ValueEnum};
use normsieve::arith::factor;
use normsieve::engine::{self, CongruenceClass, CountMode};
use normsieve::fields::Field;
use normsieve::forms::{self, FormSpec, SieveModulus};
use normsieve::lattices;
use normsieve::regions;
use normsieve::series::{self, LocalFactorFunction};
use normsieve::sieve::{self, PipelineParams};
use serde::Serialize;

use config::Config;

#[derive(Debug, Parser)]
#[command(name = "normsieve", version, about)]
struct Cli {
    /// Configuration files with [field], [form] and [engine] sections; later files win.
    #[arg(long = "config", global = true)]
    configs: Vec<PathBuf>,
    /// File holding the [field] section.
    #[arg(long, global = true)]
    field: Option<PathBuf>,
    /// File holding the [form] section.
    #[arg(long, global = true)]
    form: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    ExactNorm,
    Detector,
    LocUpper,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Weight {
    One,
    V0,
}

impl Weight {
    fn function(self) -> LocalFactorFunction {
        match self {
            Weight::One => LocalFactorFunction::one(),
            Weight::V0 => LocalFactorFunction::v0(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count pairs in [−B,B]² whose value is a norm.
    Count {
        #[arg(long = "B")]
        b: u64,
        #[arg(long, value_enum, default_value = "exact-norm")]
        mode: Mode,
        /// Also report every radius in this comma-separated list (all three counts).
        #[arg(long, value_delimiter = ',')]
        radii: Vec<u64>,
    },
    /// Direct minorant, sieve bound and predicted order at each B.
    SievePipeline {
        #[arg(long = "B", value_delimiter = ',', required = true)]
        b: Vec<u64>,
        /// Exponent of the sieve level y = B^eps0.
        #[arg(long)]
        eps0: Option<f64>,
        /// Exponent of the prime cutoff z = B^eta.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// The weighted sum S(y, a, k1; v) against its Euler-product limit.
    Series {
        #[arg(long, default_value_t = 1e6)]
        y: f64,
        /// Pairs a:k1, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "1:1")]
        pairs: Vec<String>,
        #[arg(long, value_enum, default_value = "v0")]
        v: Weight,
        /// Prime cutoff of the Euler product.
        #[arg(long, default_value_t = 10_000_000)]
        cutoff: u64,
    },
    /// Reduced bases of the lattices s ≡ ξt mod k, or point counts against the main term.
    Lattice {
        #[arg(long)]
        k: u64,
        /// One residue; by default every root of F(ξ,1) mod k.
        #[arg(long)]
        xi: Option<u64>,
        /// Count coprime points of [−B,B]² with k | F and |F| ≥ z instead.
        #[arg(long = "B")]
        b: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        z: f64,
    },
    /// Area of {(s,t) ∈ [−B,B]² : |F(s,t)| ≥ z}.
    Volume {
        #[arg(long = "B")]
        b: f64,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        z: Vec<f64>,
    },
    /// Normalized constants c_B = N (log B)^(1−r/n) / B² from a CSV of B,N.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        n: u32,
    },
    /// Key facts about the configured (L, F) as key,value rows.
    Report {
        /// Radius for the count profile; 0 skips the sweep.
        #[arg(long = "B", default_value_t = 1024)]
        b: u64,
    },
}

fn lib<T, E: Into<normsieve::Error>>(r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| anyhow::Error::new(e.into()))
}

fn csv_out() -> csv::Writer<io::Stdout> {
    csv::Writer::from_writer(io::stdout())
}

fn modulus(cfg: &Config, l: &Field, f: &FormSpec) -> SieveModulus {
    forms::compute_w(l, f, cfg.engine.w0.unwrap_or(forms::default_w0_min(l)))
}

fn class_for(cfg: &Config, l: &Field, f: &FormSpec) -> Result<CongruenceClass> {
    let m = modulus(cfg, l, f);
    let (s1, t1) = lib(forms::find_base_point(l, f, &m))?;
    Ok(CongruenceClass { s1, t1, w: m.w })
}

#[derive(Serialize)]
struct CountRow {
    #[serde(rename = "B")]
    b: u64,
    mode: &'static str,
    count: u64,
}

#[derive(Serialize)]
struct ProfileRow {
    #[serde(rename = "B")]
    b: u64,
    exact_norm: u64,
    detector: u64,
    loc_upper: u64,
}

fn count(cfg: &Config, b: u64, mode: Mode, radii: &[u64]) -> Result<()> {
    let (l, f) = (cfg.field()?, cfg.form()?);
    let sweep = cfg.sweep(b)?;
    let mut out = csv_out();
    if !radii.is_empty() {
        if let Some(&r) = radii.iter().find(|&&r| r > b) {
            bail!("radius {r} exceeds B = {b}");
        }
        let profile = lib(engine::count_profile(&l, &f, &sweep, class_for(cfg, &l, &f)?))?;
        for &r in radii {
            let i = r as usize;
            out.serialize(ProfileRow {
                b: r,
                exact_norm: profile.exact_norm[i],
                detector: profile.detector[i],
                loc_upper: profile.loc_upper[i],
            })?;
        }
        out.flush()?;
        return Ok(());
    }
    let (name, n) = match mode {
        Mode::ExactNorm => ("exact_norm", lib(engine::count_nfl(&l, &f, &sweep, CountMode::ExactNorm))?),
        Mode::Detector => {
            let class = class_for(cfg, &l, &f)?;
            ("detector", lib(engine::count_nfl(&l, &f, &sweep, CountMode::SquarefreeDetector(class)))?)
        }
        Mode::LocUpper => ("loc_upper", lib(engine::count_loc_upper(&l, &f, &sweep))?),
    };
    out.serialize(CountRow { b, mode: name, count: n })?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PipelineRow {
    #[serde(rename = "B")]
    b: u64,
    direct: f64,
    sieved: f64,
    predicted_order: f64,
    ratio: f64,
    minorized: bool,
    reducible: bool,
    y: f64,
    z: f64,
    support: usize,
    #[serde(rename = "W")]
    w: u64,
}

fn pipeline(cfg: &Config, bs: &[u64], eps0: Option<f64>, eta: Option<f64>, beta: f64) -> Result<()> {
    let (l, f) = (cfg.field()?, cfg.form()?);
    let mut out = csv_out();
    for &b in bs {
        let params = PipelineParams { eps0, eta, beta, strategy: Some(cfg.strategy(b)?), w0_min: cfg.engine.w0 };
        let r = lib(sieve::lower_bound_pipeline(&l, &f, b, &params))?;
        out.serialize(PipelineRow {
            b,
            direct: r.direct,
            sieved: r.sieved,
            predicted_order: r.predicted_order,
            ratio: r.ratio,
            minorized: r.minorized(),
            reducible: r.reducible,
            y: r.y,
            z: r.z,
            support: r.support,
            w: r.w,
        })?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SeriesRow {
    a: u64,
    k1: u64,
    frak_s: f64,
    c_fl: f64,
    c_fl_tail: f64,
    u_fl: f64,
    sigma: f64,
    target: f64,
    rel_error: f64,
}

fn parse_pair(s: &str) -> Result<(u64, u64)> {
    let (a, k1) = s.split_once(':').ok_or_else(|| anyhow!("expected a:k1, got {s:?}"))?;
    Ok((a.trim().parse()?, k1.trim().parse()?))
}

fn series_cmd(cfg: &Config, y: f64, pairs: &[String], v: Weight, cutoff: u64) -> Result<()> {
    let (l, f) = (cfg.field()?, cfg.form()?);
    let w = modulus(cfg, &l, &f).w;
    let v = v.function();
    let c = lib(series::c_fl(&l, &f, &v, w, cutoff))?;
    let mut out = csv_out();
    for p in pairs {
        let (a, k1) = parse_pair(p)?;
        if a == 0 || k1 == 0 {
            bail!("a and k1 must be positive");
        }
        let s = lib(series::frak_s(&l, &f, y, a, k1, &v, w))?;
        let u = lib(series::u_fl(&l, &f, &v, w, &lib(factor(a as u128 * k1 as u128))?))?;
        let sigma = series::sigma_k1(&l, k1, a, w);
        let target = c.value * u * sigma;
        out.serialize(SeriesRow {
            a,
            k1,
            frak_s: s,
            c_fl: c.value,
            c_fl_tail: c.tail,
            u_fl: u,
            sigma,
            target,
            rel_error: (s - target).abs() / target.abs(),
        })?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BasisRow {
    k: u64,
    xi: u64,
    lambda1: f64,
    b1_s: i64,
    b1_t: i64,
    b2_s: i64,
    b2_t: i64,
}

#[derive(Serialize)]
struct LatticeCountRow {
    k: u64,
    #[serde(rename = "B")]
    b: f64,
    z: f64,
    count: u64,
    estimate: f64,
    rel_error: f64,
}

fn lattice(cfg: &Config, k: u64, xi: Option<u64>, b: Option<f64>, z: f64) -> Result<()> {
    let f = cfg.form()?;
    let mut out = csv_out();
    if let Some(b) = b {
        let l = cfg.field()?;
        let class = class_for(cfg, &l, &f)?;
        let count = lib(lattices::lambda_star_count(&f, b, z, k, (class.s1, class.t1), class.w))?;
        let estimate = lib(lattices::lambda_star_estimate(&f, b, z, &lib(factor(k as u128))?, class.w))?;
        out.serialize(LatticeCountRow { k, b, z, count, estimate, rel_error: (count as f64 - estimate).abs() / estimate })?;
        out.flush()?;
        return Ok(());
    }
    let residues = match xi {
        Some(x) => vec![x],
        None => lib(f.roots_mod(&lib(factor(k as u128))?))?,
    };
    for x in residues {
        let lat = lib(lattices::CongruenceLattice::new(k, x))?;
        let [(a, b), (c, d)] = lat.basis;
        out.serialize(BasisRow { k, xi: x, lambda1: lat.lambda1, b1_s: a, b1_t: b, b2_s: c, b2_t: d })?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct VolumeRow {
    #[serde(rename = "B")]
    b: f64,
    z: f64,
    volume: f64,
    b_f: f64,
}

fn volume(cfg: &Config, b: f64, zs: &[f64]) -> Result<()> {
    let f = cfg.form()?;
    let mut out = csv_out();
    for &z in zs {
        out.serialize(VolumeRow { b, z, volume: regions::vol_region(&f, b, z), b_f: f.b_f() })?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FitRow {
    #[serde(rename = "B")]
    b: u64,
    #[serde(rename = "N")]
    n: u64,
    c_b: f64,
    spread: f64,
}

#[derive(serde::Deserialize)]
struct CountInput {
    #[serde(rename = "B")]
    b: u64,
    #[serde(rename = "N")]
    n: u64,
}

fn fit(input: &PathBuf, r: u32, n: u32) -> Result<()> {
    let mut rd = csv::Reader::from_path(input)?;
    let counts: Vec<(u64, u64)> =
        rd.deserialize::<CountInput>().map(|row| row.map(|c| (c.b, c.n))).collect::<std::result::Result<_, _>>()?;
    let fit = lib(engine::asymptotic_fit(&counts, r, n))?;
    let mut out = csv_out();
    for (&(b, c), &(_, count)) in fit.constants.iter().zip(&counts) {
        out.serialize(FitRow { b, n: count, c_b: c, spread: fit.spread })?;
    }
    out.flush()?;
    Ok(())
}

fn report(cfg: &Config, b: u64) -> Result<()> {
    let (l, f) = (cfg.field()?, cfg.form()?);
    let mut rows: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| rows.push((k.to_string(), v));
    put("field", l.spec().to_string());
    put("degree", l.degree().to_string());
    put("pid", l.pid().to_string());
    put("form", f.to_string());
    put("disc", f.disc().to_string());
    let r = lib(l.factor_count_over(&f))?;
    put("factors_over_L", r.to_string());
    let (_, _, c) = f.coefficients();
    let bad = f.disc().unsigned_abs() as u128 * c.unsigned_abs() as u128 * l.q() as u128;
    let largest = lib(factor(bad))?.primes().max().unwrap_or(1);
    let w0_min = cfg.engine.w0.unwrap_or(forms::default_w0_min(&l));
    let m = modulus(cfg, &l, &f);
    let mut binding = Vec::new();
    for (name, v) in [("w0_min", w0_min), ("2n+1", 2 * l.degree() as u64 + 1), ("largest_bad_prime", largest as u64)] {
        if v == m.w0 {
            binding.push(name);
        }
    }
    put("w0", m.w0.to_string());
    put("w0_set_by", binding.join(" "));
    put("W", m.w.to_string());
    match forms::find_base_point(&l, &f, &m) {
        Ok((s1, t1)) => put("base_point", format!("({s1} {t1})")),
        Err(e) => return Err(anyhow::Error::new(normsieve::Error::from(e))),
    }
    if r == 1 {
        let c = lib(series::c_fl(&l, &f, &LocalFactorFunction::v0(), m.w, 1_000_000))?;
        put("c_fl_v0", format!("{:.8}", c.value));
        put("c_fl_v0_tail", format!("{:.2e}", c.tail));
    }
    let (rho, rho_const) = series::mertens_rho(&f, 1_000_000);
    put("mertens_rho_1e6", format!("{rho:.6}"));
    put("mertens_rho_minus_loglog_1e6", format!("{rho_const:.6}"));
    put("mertens_twisted_1e6", format!("{:.6}", series::mertens_twisted(&l, &f, 1_000_000)));
    let nt = lib(engine::nt_product(&l, &f, 1_000_000))?;
    put("nt_diagnostic_1e6", format!("{:.6}", nt.diagnostic));
    if b > 0 {
        let class = class_for(cfg, &l, &f)?;
        let p = lib(engine::count_profile(&l, &f, &cfg.sweep(b)?, class))?;
        let i = b as usize;
        put("B", b.to_string());
        put("exact_norm", p.exact_norm[i].to_string());
        put("detector", p.detector[i].to_string());
        put("loc_upper", p.loc_upper[i].to_string());
        let n = l.degree() as f64;
        let c_b = p.exact_norm[i] as f64 * (b as f64).ln().powf(1.0 - r as f64 / n) / (b as f64).powi(2);
        put("c_B", format!("{c_b:.6}"));
    }
    put("primes_dividing_W", m.primes().iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" "));
    let mut out = csv_out();
    out.write_record(["key", "value"])?;
    for (k, v) in rows {
        out.write_record([k, v])?;
    }
    out.flush()?;
    Ok(())
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = Config::default();
    for p in cli.configs.iter().chain(&cli.field).chain(&cli.form) {
        cfg = cfg.merge(Config::load(p)?);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Count { b, mode, radii } => count(&cfg, *b, *mode, radii),
        Command::SievePipeline { b, eps0, eta, beta } => pipeline(&cfg, b, *eps0, *eta, *beta),
        Command::Series { y, pairs, v, cutoff } => series_cmd(&cfg, *y, pairs, *v, *cutoff),
        Command::Lattice { k, xi, b, z } => lattice(&cfg, *k, *xi, *b, *z),
        Command::Volume { b, z } => volume(&cfg, *b, z),
        Command::Fit { input, r, n } => fit(input, *r, *n),
        Command::Report { b } => report(&cfg, *b),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let hypothesis = e.downcast_ref::<normsieve::Error>().is_some_and(|e| e.is_hypothesis_violation());
            ExitCode::from(if hypothesis { 2 } else { 1 })
        }
    }
}
