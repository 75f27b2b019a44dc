//! Sweeps over (s,t) ∈ [−B,B]² that factor every value F(s,t), and the
//! counts built on top of them.
//!
//! A sweep walks rows of fixed t. Each row is an arithmetic progression in s
//! (step 1, or step W when a congruence class is imposed), factored by one of
//! three interchangeable strategies that must produce identical output.

use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{self, gcd_u64, ArithError, SpfTable};
use crate::fields::{Field, FieldError, NegativeNorms};
use crate::forms::{FormError, FormSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("b_F·B² overflows 63 bits at B = {0}")]
    Overflow(u64),
    #[error("exact norm counting needs a principal ideal domain (pid = true)")]
    NotPid,
    #[error("need at least {need} data points with increasing B, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Form(#[from] FormError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Trial division and Pollard rho on every value.
    Naive,
    /// Lookups in a smallest-prime-factor table covering b_F·B².
    SpfTable,
    /// Per-row sieving along the progressions s ≡ ξt (mod p).
    RowSieve,
}

impl Strategy {
    pub fn default_for(b: u64) -> Self {
        if b > 512 {
            Strategy::RowSieve
        } else {
            Strategy::SpfTable
        }
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "naive" => Ok(Strategy::Naive),
            "spf_table" | "spf" => Ok(Strategy::SpfTable),
            "row_sieve" | "row" => Ok(Strategy::RowSieve),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

pub const DEFAULT_BUDGET: u64 = 512 << 20;

/// (s, t) ≡ (s₁, t₁) mod W.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CongruenceClass {
    pub s1: u64,
    pub t1: u64,
    pub w: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub b: u64,
    pub strategy: Strategy,
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
    /// Memory budget in bytes for tables.
    pub budget: u64,
    pub squarefree_only: bool,
    pub coprime_only: bool,
    pub class: Option<CongruenceClass>,
    pub negatives: NegativeNorms,
}

impl SweepConfig {
    pub fn new(b: u64) -> Self {
        SweepConfig {
            b,
            strategy: Strategy::default_for(b),
            threads: 0,
            budget: DEFAULT_BUDGET,
            squarefree_only: false,
            coprime_only: false,
            class: None,
            negatives: NegativeNorms::AssumeOk,
        }
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_class(mut self, class: CongruenceClass) -> Self {
        self.class = Some(class);
        self
    }

    pub fn coprime(mut self) -> Self {
        self.coprime_only = true;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }
}

/// One visited pair with its factored value |F(s,t)| (primes ascending).
#[derive(Debug, Clone, Copy)]
pub struct Point<'a> {
    pub s: i64,
    pub t: i64,
    pub value: i128,
    pub factors: &'a [(u64, u32)],
}

impl Point<'_> {
    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }
}

/// Upper bound for |F| on the box, checked against 63 bits.
fn value_bound(form: &FormSpec, b: u64) -> Result<u64, EngineError> {
    let (a, bb, c) = form.coefficients();
    let bound = (a.unsigned_abs() as u128 + bb.unsigned_abs() as u128 + c.unsigned_abs() as u128) * (b as u128).pow(2);
    if bound >= 1 << 63 {
        return Err(EngineError::Overflow(b));
    }
    // the exact supremum is b_F·B²; the coefficient bound is only a guard
    Ok(((form.b_f() * (b * b) as f64).ceil() as u64 + 1).min(bound as u64))
}

enum Factorer {
    Naive,
    Table(SpfTable),
    Sieve(RowSieve),
}

/// Per-prime data for the row sieve.
struct RowSieve {
    limit: u64,
    primes: Vec<u64>,
    roots: Vec<Vec<u64>>,
    divides_a: Vec<bool>,
    /// step⁻¹ mod p, or 0 when p | step.
    step_inv: Vec<u64>,
}

impl RowSieve {
    fn new(form: &FormSpec, b: u64, step: u64) -> Self {
        let limit = b.max(2);
        let primes = arith::primes_up_to(limit);
        let (a, _, _) = form.coefficients();
        let roots = primes.iter().map(|&p| form.roots_mod_prime(p)).collect();
        let divides_a = primes.iter().map(|&p| a.rem_euclid(p as i64) == 0).collect();
        let step_inv = primes.iter().map(|&p| arith::mod_inv(step % p, p).unwrap_or(0)).collect();
        RowSieve { limit, primes, roots, divides_a, step_inv }
    }
}

/// Reusable per-row buffers.
#[derive(Default)]
struct RowBuf {
    vals: Vec<i128>,
    rem: Vec<u64>,
    facs: Vec<Vec<(u64, u32)>>,
    scratch: Vec<(u64, u32)>,
}

impl RowBuf {
    fn reset(&mut self, len: usize) {
        self.vals.clear();
        self.rem.clear();
        if self.facs.len() < len {
            self.facs.resize_with(len, Vec::new);
        }
        for f in &mut self.facs[..len] {
            f.clear();
        }
    }
}

/// Appends the factorization of a cofactor whose primes all exceed `limit`.
fn finish_cofactor(c: u64, limit: u64, out: &mut Vec<(u64, u32)>, scratch: &mut Vec<(u64, u32)>) {
    if c == 1 {
        return;
    }
    let l2 = limit as u128 * limit as u128;
    if (c as u128) <= l2 + 2 * limit as u128 || arith::is_prime_u64(c) {
        out.push((c, 1));
        return;
    }
    if (c as u128) < l2 * limit as u128 {
        // exactly two primes above the limit
        let r = arith::isqrt(c);
        if r * r == c {
            out.push((r, 2));
            return;
        }
    }
    arith::factor_u64_into(c, scratch);
    out.extend_from_slice(scratch);
}

impl Factorer {
    fn new(form: &FormSpec, cfg: &SweepConfig, step: u64) -> Result<Self, EngineError> {
        Ok(match cfg.strategy {
            Strategy::Naive => Factorer::Naive,
            Strategy::SpfTable => {
                Factorer::Table(SpfTable::with_budget(value_bound(form, cfg.b)?, cfg.budget)?)
            }
            Strategy::RowSieve => Factorer::Sieve(RowSieve::new(form, cfg.b, step)),
        })
    }

    /// Fills `buf` for s = s0 + step·i, i < len, at fixed t.
    fn factor_row(&self, form: &FormSpec, t: i64, s0: i64, step: u64, len: usize, buf: &mut RowBuf) {
        buf.reset(len);
        for i in 0..len {
            let v = form.eval(s0 + (step as i64) * i as i64, t);
            buf.vals.push(v);
            buf.rem.push(v.unsigned_abs() as u64);
        }
        match self {
            Factorer::Naive => {
                for i in 0..len {
                    if buf.rem[i] != 0 {
                        arith::factor_u64_into(buf.rem[i], &mut buf.scratch);
                        buf.facs[i].extend_from_slice(&buf.scratch);
                    }
                }
            }
            Factorer::Table(table) => {
                for i in 0..len {
                    if buf.rem[i] != 0 {
                        table.factor_into(buf.rem[i], &mut buf.scratch);
                        buf.facs[i].extend_from_slice(&buf.scratch);
                    }
                }
            }
            Factorer::Sieve(rs) => sieve_row(rs, t, s0, len, buf),
        }
    }
}

#[inline]
fn strip(rem: &mut u64, p: u64, facs: &mut Vec<(u64, u32)>) {
    if *rem == 0 || *rem % p != 0 {
        return;
    }
    let mut e = 0;
    while *rem % p == 0 {
        *rem /= p;
        e += 1;
    }
    facs.push((p, e));
}

fn sieve_row(rs: &RowSieve, t: i64, s0: i64, len: usize, buf: &mut RowBuf) {
    let RowBuf { rem, facs, scratch, .. } = buf;
    let mut targets: Vec<u64> = Vec::with_capacity(2);
    for (j, &p) in rs.primes.iter().enumerate() {
        let tm = t.rem_euclid(p as i64) as u64;
        targets.clear();
        let everywhere = tm == 0 && rs.divides_a[j];
        if everywhere {
            for i in 0..len {
                strip(&mut rem[i], p, &mut facs[i]);
            }
            continue;
        }
        if tm == 0 {
            targets.push(0);
        } else {
            targets.extend(rs.roots[j].iter().map(|&xi| xi * tm % p));
        }
        let s0m = s0.rem_euclid(p as i64) as u64;
        let inv = rs.step_inv[j];
        for &r in &targets {
            if inv == 0 {
                // p | step: divisibility by p is constant along the row
                if s0m == r {
                    for i in 0..len {
                        strip(&mut rem[i], p, &mut facs[i]);
                    }
                }
                continue;
            }
            let mut i = ((r + p - s0m) % p * inv % p) as usize;
            while i < len {
                strip(&mut rem[i], p, &mut facs[i]);
                i += p as usize;
            }
        }
    }
    for i in 0..len {
        if rem[i] > 1 {
            finish_cofactor(rem[i], rs.limit, &mut facs[i], scratch);
        }
    }
}

/// Rows and their progressions under the configured restrictions.
fn row_plan(cfg: &SweepConfig) -> (Vec<i64>, u64) {
    let b = cfg.b as i64;
    match cfg.class {
        None => ((-b..=b).collect(), 1),
        Some(c) => {
            let w = c.w as i64;
            let first = -b + (c.t1 as i64 - (-b)).rem_euclid(w);
            ((first..=b).step_by(c.w as usize).collect(), c.w)
        }
    }
}

fn row_start(cfg: &SweepConfig) -> (i64, usize) {
    let b = cfg.b as i64;
    match cfg.class {
        None => (-b, (2 * b + 1) as usize),
        Some(c) => {
            let w = c.w as i64;
            let s0 = -b + (c.s1 as i64 - (-b)).rem_euclid(w);
            let len = if s0 > b { 0 } else { ((b - s0) / w + 1) as usize };
            (s0, len)
        }
    }
}

const ROWS_PER_TASK: usize = 16;

/// Folds every admissible point of the box into an accumulator.
///
/// Points with F(s,t) = 0 (including (0,0)) are skipped. Rows are split into
/// fixed tasks whose results are merged in row order, so the result does
/// not depend on the thread count for associative merges.
pub fn sweep<A, I, F, M>(form: &FormSpec, cfg: &SweepConfig, init: I, fold: F, merge: M) -> Result<A, EngineError>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &Point<'_>) + Sync,
    M: Fn(A, A) -> A,
{
    if cfg.b < 1 {
        return Err(EngineError::Precondition("B must be at least 1".into()));
    }
    value_bound(form, cfg.b)?;
    let (rows, step) = row_plan(cfg);
    let (s0, len) = row_start(cfg);
    let factorer = Factorer::new(form, cfg, step)?;
    let run = || {
        rows.par_chunks(ROWS_PER_TASK)
            .map(|chunk| {
                let mut acc = init();
                let mut buf = RowBuf::default();
                for &t in chunk {
                    factorer.factor_row(form, t, s0, step, len, &mut buf);
                    for i in 0..len {
                        let value = buf.vals[i];
                        if value == 0 {
                            continue;
                        }
                        let s = s0 + (step as i64) * i as i64;
                        if cfg.coprime_only && gcd_u64(s.unsigned_abs(), t.unsigned_abs()) != 1 {
                            continue;
                        }
                        let p = Point { s, t, value, factors: &buf.facs[i] };
                        if cfg.squarefree_only && !p.is_squarefree() {
                            continue;
                        }
                        fold(&mut acc, &p);
                    }
                }
                acc
            })
            .collect::<Vec<A>>()
    };
    let parts = if cfg.threads == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| EngineError::Precondition(e.to_string()))?
            .install(run)
    };
    Ok(parts.into_iter().reduce(merge).unwrap_or_else(init))
}

/// The full stream of (s, t, F(s,t), factors of |F(s,t)|) in sweep order.
pub type FactorRecord = (i64, i64, i128, Vec<(u64, u32)>);

pub fn factor_stream(form: &FormSpec, cfg: &SweepConfig) -> Result<Vec<FactorRecord>, EngineError> {
    sweep(
        form,
        cfg,
        Vec::new,
        |acc: &mut Vec<FactorRecord>, p| acc.push((p.s, p.t, p.value, p.factors.to_vec())),
        |mut a, b| {
            a.extend(b);
            a
        },
    )
}

/// Which pairs [`count_nfl`] counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMode {
    /// |F(s,t)| is the norm of an integral ideal (hence of an element, as L is a PID).
    ExactNorm,
    /// μ²(F) = 1, gcd(s,t) = 1, (s,t) in the class, every prime of F split completely.
    SquarefreeDetector(CongruenceClass),
}

impl FromStr for CountMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact_norm" => Ok(CountMode::ExactNorm),
            other => Err(format!("unknown mode {other:?}; the detector mode needs a class")),
        }
    }
}

/// Point predicates against a fixed field.
pub struct Detectors<'a> {
    pub field: &'a Field,
    pub negatives: NegativeNorms,
}

impl Detectors<'_> {
    fn sign_ok(&self, p: &Point<'_>) -> bool {
        p.value > 0 || self.negatives == NegativeNorms::AssumeOk
    }

    pub fn exact_norm(&self, p: &Point<'_>) -> bool {
        self.sign_ok(p) && p.factors.iter().all(|&(q, e)| e % self.field.residue_degree(q) == 0)
    }

    pub fn varpi(&self, p: &Point<'_>) -> bool {
        p.factors.iter().all(|&(q, e)| {
            let s = self.field.splitting(q);
            e % (s.e * s.f) == 0
        })
    }

    /// μ²(F)·1[every prime of F splits completely].
    pub fn squarefree_split(&self, p: &Point<'_>) -> bool {
        let n = self.field.degree() as u32;
        self.sign_ok(p) && p.factors.iter().all(|&(q, e)| e == 1 && self.field.splitting(q).g == n)
    }

    /// r_L(|F(s,t)|) from splitting data.
    pub fn r_l(&self, p: &Point<'_>) -> u64 {
        p.factors.iter().map(|&(q, e)| self.field.ideal_count_prime_power(q, e)).product()
    }
}

fn in_class(p: &Point<'_>, c: &CongruenceClass) -> bool {
    let w = c.w as i64;
    p.s.rem_euclid(w) as u64 == c.s1 % c.w && p.t.rem_euclid(w) as u64 == c.t1 % c.w
}

/// N_{F,L}(B) under the chosen mode.
pub fn count_nfl(field: &Field, form: &FormSpec, cfg: &SweepConfig, mode: CountMode) -> Result<u64, EngineError> {
    let det = Detectors { field, negatives: cfg.negatives };
    match mode {
        CountMode::ExactNorm => {
            if !field.pid() {
                return Err(EngineError::NotPid);
            }
            sweep(form, cfg, || 0u64, |acc, p| *acc += det.exact_norm(p) as u64, |a, b| a + b)
        }
        CountMode::SquarefreeDetector(class) => {
            let mut c = cfg.clone().with_class(class).coprime();
            c.squarefree_only = true;
            sweep(form, &c, || 0u64, |acc, p| *acc += det.squarefree_split(p) as u64, |a, b| a + b)
        }
    }
}

/// Σ ϖ(F(s,t)) over the box.
pub fn count_loc_upper(field: &Field, form: &FormSpec, cfg: &SweepConfig) -> Result<u64, EngineError> {
    let det = Detectors { field, negatives: cfg.negatives };
    sweep(form, cfg, || 0u64, |acc, p| *acc += det.varpi(p) as u64, |a, b| a + b)
}

/// Counts by box radius: entry r covers max(|s|,|t|) ≤ r.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CountProfile {
    pub exact_norm: Vec<u64>,
    pub detector: Vec<u64>,
    pub loc_upper: Vec<u64>,
}

impl CountProfile {
    fn zeros(b: u64) -> Self {
        let n = b as usize + 1;
        CountProfile { exact_norm: vec![0; n], detector: vec![0; n], loc_upper: vec![0; n] }
    }

    fn add(mut self, other: Self) -> Self {
        for (x, y) in [
            (&mut self.exact_norm, &other.exact_norm),
            (&mut self.detector, &other.detector),
            (&mut self.loc_upper, &other.loc_upper),
        ] {
            for (a, b) in x.iter_mut().zip(y) {
                *a += b;
            }
        }
        self
    }

    fn accumulate(mut self) -> Self {
        for v in [&mut self.exact_norm, &mut self.detector, &mut self.loc_upper] {
            for i in 1..v.len() {
                v[i] += v[i - 1];
            }
        }
        self
    }
}

/// All three counts at every radius up to cfg.b from one sweep. The detector
/// column uses `class`; the other columns ignore it.
pub fn count_profile(
    field: &Field,
    form: &FormSpec,
    cfg: &SweepConfig,
    class: CongruenceClass,
) -> Result<CountProfile, EngineError> {
    if !field.pid() {
        return Err(EngineError::NotPid);
    }
    let det = Detectors { field, negatives: cfg.negatives };
    let b = cfg.b;
    let prof = sweep(
        form,
        cfg,
        || CountProfile::zeros(b),
        |acc, p| {
            let r = p.s.unsigned_abs().max(p.t.unsigned_abs()) as usize;
            acc.exact_norm[r] += det.exact_norm(p) as u64;
            acc.loc_upper[r] += det.varpi(p) as u64;
            let coprime = gcd_u64(p.s.unsigned_abs(), p.t.unsigned_abs()) == 1;
            if coprime && in_class(p, &class) && det.squarefree_split(p) {
                acc.detector[r] += 1;
            }
        },
        CountProfile::add,
    )?;
    Ok(prof.accumulate())
}

/// c_B = N·(log B)^{1−r/n}/B² per point and spread = max/min.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticFit {
    pub constants: Vec<(u64, f64)>,
    pub spread: f64,
}

pub fn asymptotic_fit(counts: &[(u64, u64)], r: u32, n: u32) -> Result<AsymptoticFit, EngineError> {
    let increasing = counts.windows(2).all(|w| w[0].0 < w[1].0);
    if counts.len() < 3 || !increasing || counts[0].0 < 2 {
        return Err(EngineError::TooFewPoints { need: 3, got: counts.len() });
    }
    let exponent = 1.0 - r as f64 / n as f64;
    let constants: Vec<(u64, f64)> = counts
        .iter()
        .map(|&(b, c)| (b, c as f64 * (b as f64).ln().powf(exponent) / (b as f64 * b as f64)))
        .collect();
    let max = constants.iter().map(|c| c.1).fold(f64::MIN, f64::max);
    let min = constants.iter().map(|c| c.1).fold(f64::MAX, f64::min);
    Ok(AsymptoticFit { constants, spread: max / min })
}

/// ρ_F(p) = #{(x,y) mod p : F(x,y) ≡ 0}.
fn rho_full_prime(form: &FormSpec, p: u64) -> Result<u64, FormError> {
    if p > 2 && form.disc().rem_euclid(p as i64) != 0 {
        Ok(1 + (p - 1) * form.rho_minus_prime(p) + (p - 1) * (form.coefficients().0.rem_euclid(p as i64) == 0) as u64)
    } else {
        form.rho_full_pp(p, 1)
    }
}

/// ∏_{p ≤ B} (1 + ρ_F(p)(ϖ(p) − 1)/p²) with the diagnostic product·(log B)^{1−r/n}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NtProduct {
    pub b: u64,
    pub product: f64,
    pub diagnostic: f64,
}

pub fn nt_product(field: &Field, form: &FormSpec, b: u64) -> Result<NtProduct, EngineError> {
    if b < 10 {
        return Err(EngineError::Precondition("B must be at least 10".into()));
    }
    let mut log_prod = 0.0f64;
    for p in arith::primes_up_to(b) {
        let s = field.splitting(p);
        if s.e * s.f == 1 {
            continue;
        }
        let factor = 1.0 - rho_full_prime(form, p)? as f64 / (p as f64 * p as f64);
        log_prod += factor.ln();
    }
    let r = field.factor_count_over(form)?;
    let n = field.degree() as f64;
    let product = log_prod.exp();
    Ok(NtProduct { b, product, diagnostic: product * (b as f64).ln().powf(1.0 - r as f64 / n) })
}

/// Σ_{p ≤ B} ϖ(p)ρ_F⁻(p)/p.
pub fn chebotarev_sum(field: &Field, form: &FormSpec, b: u64) -> f64 {
    arith::primes_up_to(b)
        .into_iter()
        .filter(|&p| {
            let s = field.splitting(p);
            s.e * s.f == 1
        })
        .map(|p| form.rho_minus_prime(p) as f64 / p as f64)
        .sum()
}

/// Least-squares slope of y against log log B.
pub fn loglog_slope(points: &[(u64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|&(b, _)| (b as f64).ln().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}
