//! β-sieve weights, the fundamental-lemma ratio, the sums M_d(B) and
//! S_d(B,m), and the sieve lower-bound pipeline.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::arith::{self, gcd_u64, Factorization};
use crate::engine::{self, CongruenceClass, EngineError, Strategy, SweepConfig};
use crate::fields::{Field, FieldError};
use crate::forms::{self, FormError, FormSpec};
use crate::series::{self, LocalFactorFunction, SeriesError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SieveError {
    #[error("no base point (s1, t1) mod {0}: F never takes a unit value in H")]
    NoBasePoint(u64),
    #[error("density must satisfy 0 ≤ g(p) < 1, got g({p}) = {value}")]
    Divergent { p: u64, value: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// λ_d^± of level y over the primes below z; only nonzero entries are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SieveWeights {
    pub y: f64,
    pub beta: f64,
    pub sign: Sign,
    pub z: f64,
    support: BTreeMap<u64, i8>,
}

impl SieveWeights {
    pub fn lambda(&self, d: u64) -> i8 {
        self.support.get(&d).copied().unwrap_or(0)
    }

    /// (d, λ_d) for every d with λ_d ≠ 0, increasing in d.
    pub fn support(&self) -> impl Iterator<Item = (u64, i8)> + '_ {
        self.support.iter().map(|(&d, &l)| (d, l))
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// The primes below z.
    pub fn primes(&self) -> Vec<u64> {
        sieve_primes(self.z)
    }

    /// Overwrites one weight; for mutation tests.
    pub fn set(&mut self, d: u64, lambda: i8) {
        if lambda == 0 {
            self.support.remove(&d);
        } else {
            self.support.insert(d, lambda);
        }
    }
}

fn sieve_primes(z: f64) -> Vec<u64> {
    if z <= 2.0 {
        return Vec::new();
    }
    let top = z.ceil() as u64;
    arith::primes_up_to(top).into_iter().filter(|&p| (p as f64) < z).collect()
}

/// Combinatorial β-sieve: d = p₁⋯p_r with p₁ > … > p_r > all below z is kept,
/// with λ_d = μ(d), iff d ≤ y and p₁⋯p_{m−1}·p_m^{β+1} ≤ y for every m of the
/// parity attached to the sign (odd for +, even for −).
pub fn beta_weights(y: f64, beta: f64, sign: Sign, z: f64) -> SieveWeights {
    let mut primes = sieve_primes(z);
    primes.reverse();
    let mut support = BTreeMap::new();
    support.insert(1, 1);
    let parity = match sign {
        Sign::Plus => 1,
        Sign::Minus => 0,
    };
    fn dfs(
        primes: &[u64],
        start: usize,
        d: u64,
        m: usize,
        y: f64,
        beta: f64,
        parity: usize,
        out: &mut BTreeMap<u64, i8>,
    ) {
        for i in start..primes.len() {
            let p = primes[i];
            let next = d * p;
            if next as f64 > y {
                continue;
            }
            let m = m + 1;
            if m % 2 == parity && d as f64 * (p as f64).powf(beta + 1.0) > y {
                // smaller primes may still pass
                continue;
            }
            out.insert(next, if m % 2 == 1 { -1 } else { 1 });
            dfs(primes, i + 1, next, m, y, beta, parity, out);
        }
    }
    dfs(&primes, 0, 1, 0, y, beta, parity, &mut support);
    SieveWeights { y, beta, sign, z, support }
}

/// The first failure found by [`check_weights`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeightViolation {
    LambdaOne(i8),
    OutOfRange { d: u64, lambda: i8 },
    BeyondLevel { d: u64 },
    SignCondition { n: u64, sum: i64 },
}

/// Checks λ₁ = 1, |λ_d| ≤ 1, support below y and, for every squarefree
/// n ≤ n_max with all prime factors below z and n > 1, the sign condition on
/// Σ_{d|n} λ_d.
pub fn check_weights(w: &SieveWeights, n_max: u64) -> Result<(), WeightViolation> {
    if w.lambda(1) != 1 {
        return Err(WeightViolation::LambdaOne(w.lambda(1)));
    }
    for (d, l) in w.support() {
        if l.abs() > 1 {
            return Err(WeightViolation::OutOfRange { d, lambda: l });
        }
        if d as f64 > w.y {
            return Err(WeightViolation::BeyondLevel { d });
        }
    }
    let primes = w.primes();
    let mut factors = Vec::new();
    check_dfs(w, &primes, 0, 1, n_max, &mut factors)
}

fn check_dfs(
    w: &SieveWeights,
    primes: &[u64],
    start: usize,
    n: u64,
    n_max: u64,
    factors: &mut Vec<u64>,
) -> Result<(), WeightViolation> {
    if n > 1 {
        let k = factors.len();
        let mut sum = 0i64;
        for mask in 0u32..(1 << k) {
            let d: u64 = (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| factors[i]).product();
            sum += w.lambda(d) as i64;
        }
        let ok = match w.sign {
            Sign::Plus => sum >= 0,
            Sign::Minus => sum <= 0,
        };
        if !ok {
            return Err(WeightViolation::SignCondition { n, sum });
        }
    }
    for i in start..primes.len() {
        let Some(next) = n.checked_mul(primes[i]).filter(|&v| v <= n_max) else { break };
        factors.push(primes[i]);
        check_dfs(w, primes, i + 1, next, n_max, factors)?;
        factors.pop();
    }
    Ok(())
}

/// (Σλ_d⁻ g(d), Σλ_d⁺ g(d)) divided by ∏_{p<z}(1 − g(p)), g multiplicative
/// and given at primes.
pub fn fundamental_lemma_check(
    g: &dyn Fn(u64) -> f64,
    plus: &SieveWeights,
    minus: &SieveWeights,
    z: f64,
) -> Result<(f64, f64), SieveError> {
    let primes = sieve_primes(z);
    let mut product = 1.0;
    for &p in &primes {
        let v = g(p);
        if !(0.0..1.0).contains(&v) {
            return Err(SieveError::Divergent { p, value: v });
        }
        product *= 1.0 - v;
    }
    let sum = |w: &SieveWeights| -> f64 {
        w.support()
            .map(|(d, l)| {
                let gd: f64 = arith::factor(d as u128).expect("d ≥ 1").primes().map(|p| g(p as u64)).product();
                l as f64 * gd
            })
            .sum()
    };
    Ok((sum(minus) / product, sum(plus) / product))
}

/// u₁(p) = 1 + Σ_{ν≥1} ψ_L(p^ν)/p^ν.
pub fn u1(field: &Field, d: &Factorization) -> f64 {
    d.primes().map(|p| series::psi_euler(field, p as u64)).product()
}

/// u₃(d) = ∏_{p|d} (1 − u₁(p)⁻¹/p)(1 − v₀(p)u_{F,L}(v₀)(p)g_{F,L}(p)/p²)⁻¹.
pub fn u3(field: &Field, form: &FormSpec, w: u64, d: &Factorization) -> Result<f64, SieveError> {
    let v0 = LocalFactorFunction::v0();
    let mut acc = 1.0;
    for p in d.primes() {
        let p = p as u64;
        let pf = Factorization::from_pairs(&[(p as u128, 1)]);
        let pp = p as f64;
        let first = 1.0 - 1.0 / (series::psi_euler(field, p) * pp);
        let inner = v0.at_prime(p) * series::u_fl(field, form, &v0, w, &pf)? * series::g_fl(field, form, &pf)?;
        acc *= first / (1.0 - inner / (pp * pp));
    }
    Ok(acc)
}

/// u(d) = u₁(d)u₃(d)u_{F,L}(v₀)(d).
pub fn u_total(field: &Field, form: &FormSpec, w: u64, d: &Factorization) -> Result<f64, SieveError> {
    let v0 = LocalFactorFunction::v0();
    Ok(u1(field, d) * u3(field, form, w, d)? * series::u_fl(field, form, &v0, w, d)?)
}

/// The coprime points of one congruence class in [−B,B]², with factored
/// values and r_L, for evaluating M_d and S_d repeatedly.
#[derive(Debug, Clone)]
pub struct ClassSample {
    pub b: u64,
    pub class: CongruenceClass,
    pub points: Vec<SamplePoint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePoint {
    pub s: i64,
    pub t: i64,
    pub factors: Vec<(u64, u32)>,
    pub r_l: u64,
}

impl SamplePoint {
    fn divisible_by(&self, k: &Factorization) -> bool {
        k.factors().iter().all(|&(p, e)| {
            self.factors.iter().any(|&(q, f)| q as u128 == p && f >= e)
        })
    }

    fn squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }
}

impl ClassSample {
    pub fn collect(
        field: &Field,
        form: &FormSpec,
        b: u64,
        class: CongruenceClass,
        strategy: Strategy,
    ) -> Result<Self, SieveError> {
        let cfg = SweepConfig::new(b).with_strategy(strategy).with_class(class).coprime();
        let det = engine::Detectors { field, negatives: cfg.negatives };
        let points = engine::sweep(
            form,
            &cfg,
            Vec::new,
            |acc: &mut Vec<SamplePoint>, p| {
                acc.push(SamplePoint { s: p.s, t: p.t, factors: p.factors.to_vec(), r_l: det.r_l(p) })
            },
            |mut a, b| {
                a.extend(b);
                a
            },
        )?;
        Ok(ClassSample { b, class, points })
    }

    /// M_d(B) = Σ μ²(F) r_L(F) over the sample with d | F.
    pub fn m_d(&self, d: u64) -> u64 {
        let df = arith::factor(d as u128).expect("d ≥ 1");
        self.points.iter().filter(|p| p.squarefree() && p.divisible_by(&df)).map(|p| p.r_l).sum()
    }

    /// S_d(B,m) = Σ r_L(F) over the sample with [d, m²] | F.
    pub fn s_d(&self, d: u64, m: u64) -> u64 {
        let l = d / gcd_u64(d, m * m) * m * m;
        let lf = arith::factor(l as u128).expect("lcm ≥ 1");
        self.points.iter().filter(|p| p.divisible_by(&lf)).map(|p| p.r_l).sum()
    }

    /// Σ_{m ≤ Y, gcd(m,W)=1} μ(m) S_d(B,m).
    pub fn m_d_reconstruction(&self, d: u64, y: u64) -> i64 {
        (1..=y)
            .filter(|&m| gcd_u64(m, self.class.w) == 1)
            .map(|m| arith::moebius(m) as i64 * self.s_d(d, m) as i64)
            .filter(|&v| v != 0)
            .sum()
    }
}

fn require_sieve_modulus(d: u64, w: u64) -> Result<(), SieveError> {
    if gcd_u64(d, w) != 1 {
        return Err(SieveError::Precondition(format!("d = {d} is not coprime to W = {w}")));
    }
    Ok(())
}

/// M_d(B) for squarefree d coprime to W.
pub fn m_d(field: &Field, form: &FormSpec, b: u64, d: u64, class: CongruenceClass) -> Result<u64, SieveError> {
    require_sieve_modulus(d, class.w)?;
    Ok(ClassSample::collect(field, form, b, class, Strategy::default_for(b))?.m_d(d))
}

/// S_d(B,m) for dm coprime to W.
pub fn s_d(field: &Field, form: &FormSpec, b: u64, d: u64, m: u64, class: CongruenceClass) -> Result<u64, SieveError> {
    require_sieve_modulus(d * m, class.w)?;
    Ok(ClassSample::collect(field, form, b, class, Strategy::default_for(b))?.s_d(d, m))
}

/// Exponents of y = B^{ε₀}, z = B^η and the β of the weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineParams {
    /// `None` uses 1/(8n²).
    pub eps0: Option<f64>,
    /// `None` uses 1/(16n²).
    pub eta: Option<f64>,
    pub beta: f64,
    pub strategy: Option<Strategy>,
    /// Lower bound for w₀; `None` uses the conductor.
    pub w0_min: Option<u64>,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams { eps0: None, eta: None, beta: 1.0, strategy: None, w0_min: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub b: u64,
    pub reducible: bool,
    /// n, or n/2 in the reducible case.
    pub n_eff: f64,
    pub w: u64,
    pub base: (u64, u64),
    pub y: f64,
    pub z: f64,
    pub support: usize,
    /// (a) Σ μ²(F)·(c/n)^{ω(F,z)}·r(F), c = 1 or 2.
    pub direct: f64,
    /// The same sum without the r(F) weight, as displayed in the sieve set-up.
    pub direct_unweighted: f64,
    /// (b) Σ_{d ≤ y} λ_d⁻(1 − c/n)^{ω(d)} M_d(B).
    pub sieved: f64,
    /// B²/(log B)^{1 − c/n}.
    pub predicted_order: f64,
    /// direct / predicted_order.
    pub ratio: f64,
}

impl PipelineReport {
    pub fn minorized(&self) -> bool {
        self.sieved <= self.direct * (1.0 + 1e-12)
    }
}

/// Runs the lower-bound chain at one B: the direct minorant (a), the sieve
/// bound (b) and the predicted order. When F is reducible over L the sums use
/// r_{L₀}, the factors 2/n and 1 − 2/n, and n/2 in the exponents.
pub fn lower_bound_pipeline(
    field: &Field,
    form: &FormSpec,
    b: u64,
    params: &PipelineParams,
) -> Result<PipelineReport, SieveError> {
    let reducible = field.factor_count_over(form)? == 2;
    let n = field.degree() as f64;
    let (counting, c) = if reducible { (field.construct_l0(form)?, 2.0) } else { (field.clone(), 1.0) };
    let n_eff = n / c;
    let modulus = forms::compute_w(field, form, params.w0_min.unwrap_or(forms::default_w0_min(field)));
    let base = forms::find_base_point(field, form, &modulus).map_err(|e| match e {
        FormError::NoBasePoint(w) => SieveError::NoBasePoint(w),
        other => other.into(),
    })?;
    let eps0 = params.eps0.unwrap_or(1.0 / (8.0 * n_eff * n_eff));
    let eta = params.eta.unwrap_or(1.0 / (16.0 * n_eff * n_eff));
    let bf = b as f64;
    let (y, z) = (bf.powf(eps0), bf.powf(eta));
    let weights = beta_weights(y, params.beta, Sign::Minus, z);
    let class = CongruenceClass { s1: base.0, t1: base.1, w: modulus.w };
    let strategy = params.strategy.unwrap_or(Strategy::default_for(b));
    let sample = ClassSample::collect(&counting, form, b, class, strategy)?;

    let (mut direct, mut direct_unweighted, mut sieved) = (0.0, 0.0, 0.0);
    for p in sample.points.iter().filter(|p| p.squarefree()) {
        let small: Vec<u64> = p.factors.iter().map(|f| f.0).filter(|&q| (q as f64) <= z).collect();
        let detector = (c / n).powi(small.len() as i32);
        direct += detector * p.r_l as f64;
        direct_unweighted += detector;
        // Σ_{d | F, d ≤ y} λ_d (1 − c/n)^{ω(d)}, over divisors built from primes below z
        let below: Vec<u64> = small.iter().copied().filter(|&q| (q as f64) < z).collect();
        let mut inner = 0.0;
        for mask in 0u32..(1 << below.len()) {
            let d: u64 = (0..below.len()).filter(|&i| mask >> i & 1 == 1).map(|i| below[i]).product();
            let l = weights.lambda(d);
            if l != 0 {
                inner += l as f64 * (1.0 - c / n).powi(mask.count_ones() as i32);
            }
        }
        sieved += inner * p.r_l as f64;
    }
    let predicted_order = bf * bf / bf.ln().powf(1.0 - c / n);
    Ok(PipelineReport {
        b,
        reducible,
        n_eff,
        w: modulus.w,
        base,
        y,
        z,
        support: weights.len(),
        direct,
        direct_unweighted,
        sieved,
        predicted_order,
        ratio: direct / predicted_order,
    })
}
