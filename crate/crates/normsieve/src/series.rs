//! Multiplicative functions of the class 𝒰, Euler products and truncated
//! Dirichlet sums built from ψ_L and ρ_F⁻.
//!
//! Every weight ψ_L(p^ν) used here is real because the character group of L
//! is closed under conjugation; values are carried as `f64` and the vanishing
//! imaginary part is checked in debug builds.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::arith::{self, gcd_u64, Factorization, SpfTable};
use crate::fields::{binomial, Field, FieldError};
use crate::forms::{FormError, FormSpec};
use crate::regions::{vol_region, RegionError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("prime {0} ramifies in L")]
    Ramified(u64),
    #[error("partial product up to {cutoff} is not positive; enlarge w0")]
    NonPositive { cutoff: u64 },
    #[error("enumeration is unbounded; give a product cap")]
    Unbounded,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// A truncated sum or product with its tail estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncated {
    pub value: f64,
    pub tail: f64,
    pub cutoff: u64,
}

/// A multiplicative function k ↦ ∏_{p|k} u(p) with u(p) = 1 + h(p), given by
/// its value at primes and a constant C with |u(p) − 1| ≤ C/p.
#[derive(Clone)]
pub struct LocalFactorFunction {
    pub name: String,
    rule: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
    pub certificate: f64,
}

impl fmt::Debug for LocalFactorFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LocalFactorFunction({}, C = {})", self.name, self.certificate)
    }
}

impl LocalFactorFunction {
    pub fn new(name: &str, certificate: f64, rule: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        LocalFactorFunction { name: name.to_string(), rule: Arc::new(rule), certificate }
    }

    /// The constant function 1.
    pub fn one() -> Self {
        Self::new("one", 0.0, |_| 1.0)
    }

    /// v₀(p) = (1 + 1/p)⁻¹.
    pub fn v0() -> Self {
        Self::new("v0", 1.0, |p| p as f64 / (p as f64 + 1.0))
    }

    #[inline]
    pub fn at_prime(&self, p: u64) -> f64 {
        (self.rule)(p)
    }

    pub fn eval(&self, k: &Factorization) -> f64 {
        k.primes().map(|p| self.at_prime(p as u64)).product()
    }

    /// u(k, a): the product over primes of k not dividing a.
    pub fn eval_restricted(&self, k: &Factorization, a: u64) -> f64 {
        k.primes().filter(|&p| a % p as u64 != 0).map(|p| self.at_prime(p as u64)).product()
    }

    /// Checks |u(p) − 1| ≤ C/p and 0 < u(p) ≤ 2 for every prime p ≤ limit;
    /// returns the first offending prime.
    pub fn check_certificate(&self, limit: u64) -> Result<(), u64> {
        for p in arith::primes_up_to(limit) {
            let u = self.at_prime(p);
            if !(u > 0.0 && u <= 2.0) || (u - 1.0).abs() > self.certificate / p as f64 + 1e-15 {
                return Err(p);
            }
        }
        Ok(())
    }
}

/// χ_i(p) for the nontrivial characters, through the primitive characters.
fn chi_values(field: &Field, p: u64) -> Vec<Complex64> {
    field.nontrivial_characters().iter().map(|c| c.value(p)).collect()
}

/// Coefficients ψ_L(p^ν), ν = 0..=max_nu, of ∏(1 − χ_i(p)x)⁻¹.
fn psi_coefficients(chis: &[Complex64], max_nu: u32) -> Vec<f64> {
    let mut c = vec![Complex64::new(0.0, 0.0); max_nu as usize + 1];
    c[0] = Complex64::new(1.0, 0.0);
    for &z in chis {
        for j in 1..c.len() {
            let prev = c[j - 1];
            c[j] += z * prev;
        }
    }
    c.iter()
        .map(|v| {
            debug_assert!(v.im.abs() < 1e-6 * (1.0 + v.re.abs()), "ψ_L is real");
            v.re
        })
        .collect()
}

/// ∏(1 − χ_i(p)x)⁻¹.
fn euler_factor(chis: &[Complex64], x: f64) -> Complex64 {
    chis.iter().map(|&z| (Complex64::new(1.0, 0.0) - z * x).inv()).product()
}

fn real(z: Complex64) -> f64 {
    debug_assert!(z.im.abs() < 1e-9 * (1.0 + z.re.abs()), "expected a real value, got {z}");
    z.re
}

/// E(p) = 1 + Σ_{ν≥1} ψ_L(p^ν)/p^ν.
pub fn psi_euler(field: &Field, p: u64) -> f64 {
    real(euler_factor(&chi_values(field, p), 1.0 / p as f64))
}

/// 1 + Σ_ν ψ_L(p^ν)·weight^ν in closed form.
pub fn local_psi_factor(field: &Field, p: u64, weight: f64) -> Result<Complex64, SeriesError> {
    if field.q() % p == 0 {
        return Err(SeriesError::Ramified(p));
    }
    Ok(euler_factor(&chi_values(field, p), weight))
}

/// The same quantity summed term by term up to weight^terms.
pub fn local_psi_series(field: &Field, p: u64, weight: f64, terms: u32) -> Result<Complex64, SeriesError> {
    if field.q() % p == 0 {
        return Err(SeriesError::Ramified(p));
    }
    let psi = field.psi_prime_powers_complex(p, terms);
    Ok(psi.iter().enumerate().map(|(nu, c)| c * weight.powi(nu as i32)).sum())
}

/// ρ_F⁻(p^ν), with the fast path when p ∤ disc (then ρ⁻ is Hensel-stable).
fn rho_at(form: &FormSpec, p: u64, nu: u32) -> Result<u64, FormError> {
    if form.disc().rem_euclid(p as i64) != 0 {
        Ok(form.rho_minus_prime(p))
    } else {
        form.rho_minus_pp(p, nu)
    }
}

/// The Euler factor of c_{F,L}(v) at p ∤ W:
/// 1 + v(p)ρ_F⁻(p)(E(p) − 1).
pub fn euler_local(field: &Field, form: &FormSpec, v: &LocalFactorFunction, p: u64) -> Result<f64, SeriesError> {
    if form.disc().rem_euclid(p as i64) == 0 {
        // not Hensel-stable: sum the series directly
        let psi = field.psi_prime_powers_complex(p, 40);
        let mut s = 1.0;
        for (nu, c) in psi.iter().enumerate().skip(1) {
            s += v.at_prime(p) * real(*c) * rho_at(form, p, nu as u32)? as f64 / (p as f64).powi(nu as i32);
        }
        return Ok(s);
    }
    let rho = form.rho_minus_prime(p) as f64;
    Ok(1.0 + v.at_prime(p) * rho * (psi_euler(field, p) - 1.0))
}

fn require_irreducible(field: &Field, form: &FormSpec) -> Result<(), SeriesError> {
    if field.factor_count_over(form)? != 1 {
        return Err(SeriesError::Precondition("F must be irreducible over L".into()));
    }
    Ok(())
}

/// c_{F,L}(v) = ∏_{p∤W} (Euler factor), truncated at p ≤ cutoff.
///
/// The product converges only conditionally, so the tail is a heuristic:
/// the largest relative movement of the partial products over
/// [cutoff/10, cutoff] plus C/(cutoff·log cutoff).
pub fn c_fl(
    field: &Field,
    form: &FormSpec,
    v: &LocalFactorFunction,
    w: u64,
    cutoff: u64,
) -> Result<Truncated, SeriesError> {
    require_irreducible(field, form)?;
    let mut log_prod = 0.0f64;
    let mut history = Vec::new();
    for p in arith::primes_up_to(cutoff) {
        if w % p == 0 {
            continue;
        }
        let local = euler_local(field, form, v, p)?;
        if local <= 0.0 {
            return Err(SeriesError::NonPositive { cutoff: p });
        }
        log_prod += local.ln();
        if p * 10 >= cutoff {
            history.push(log_prod);
        }
    }
    let value = log_prod.exp();
    let osc = history.iter().map(|l| (l - log_prod).abs()).fold(0.0, f64::max);
    let c = field.degree() as f64 * (1.0 + v.certificate);
    let lc = (cutoff.max(3) as f64).ln();
    let tail = value * ((osc + c / (cutoff.max(3) as f64 * lc)).exp() - 1.0);
    Ok(Truncated { value, tail, cutoff })
}

/// u_{F,L}(v)(k) = ∏_{p|k, p∤W} (Euler factor at p)⁻¹.
pub fn u_fl(
    field: &Field,
    form: &FormSpec,
    v: &LocalFactorFunction,
    w: u64,
    k: &Factorization,
) -> Result<f64, SeriesError> {
    let mut acc = 1.0;
    for p in k.primes() {
        let p = p as u64;
        if w % p != 0 {
            acc /= euler_local(field, form, v, p)?;
        }
    }
    Ok(acc)
}

/// u_{F,L}(v) as a member of 𝒰.
pub fn u_fl_function(field: &Field, form: &FormSpec, v: &LocalFactorFunction, w: u64) -> LocalFactorFunction {
    let (field, form, v2) = (field.clone(), *form, v.clone());
    let c = 2.0 * (field.degree() as f64) * (1.0 + v.certificate);
    LocalFactorFunction::new(&format!("u_FL({})", v.name), c, move |p| {
        if w % p == 0 {
            1.0
        } else {
            1.0 / euler_local(&field, &form, &v2, p).expect("unramified local factor")
        }
    })
}

/// g_{F,L}(d) = ρ_F⁻(d) ∏_{p|d} (1 + ψ_L(p) + Σ_{ν≥2} ψ_L(p^ν)/p^ν).
pub fn g_fl(field: &Field, form: &FormSpec, d: &Factorization) -> Result<f64, SeriesError> {
    let mut acc = form.rho_minus(d, 1)? as f64;
    for p in d.primes() {
        if acc == 0.0 {
            break;
        }
        let p = p as u64;
        let chis = chi_values(field, p);
        let psi_p = real(chis.iter().sum());
        let e = real(euler_factor(&chis, 1.0 / p as f64));
        acc *= e + psi_p * (1.0 - 1.0 / p as f64);
    }
    Ok(acc)
}

/// p^{v_k}·Σ_{ν<N} c_ν + p^{v_a}·(full − Σ_{ν<N} c_ν p^{−ν}), N = max(0, v_a − v_k):
/// the local sum Σ_ν c_ν p^{−ν} p^{min(v_k+ν, v_a)} with Σ c_ν p^{−ν} = full.
fn gcd_weighted_local(p: u64, vk: u32, va: u32, coeff: impl Fn(u32) -> f64, full: f64) -> f64 {
    let n = va.saturating_sub(vk);
    let pf = p as f64;
    let mut head = 0.0;
    let mut partial = 0.0;
    for nu in 0..n {
        head += coeff(nu);
        partial += coeff(nu) / pf.powi(nu as i32);
    }
    pf.powi(vk as i32) * head + pf.powi(va as i32) * (full - partial)
}

fn valuation(n: u64, p: u64) -> u32 {
    let mut v = 0;
    let mut m = n;
    while m % p == 0 {
        m /= p;
        v += 1;
    }
    v
}

/// σ_{k₁}(a) = Σ_{ℓ | (ak₁)^∞} ψ_L(ℓ)ρ⁻_{F,k₁a}(ℓ;u)/ℓ · gcd(k₁ℓ, a), in closed form.
///
/// Every prime of ℓ divides k₁a, so the ρ⁻ and u weights are 1 and only the
/// indicator gcd(ℓ, W) = 1 survives; F and u do not enter.
pub fn sigma_k1(field: &Field, k1: u64, a: u64, w: u64) -> f64 {
    let f = arith::factor((a as u128) * (k1 as u128)).expect("ak₁ ≥ 1");
    let mut acc = 1.0;
    for p in f.primes() {
        let p = p as u64;
        let (vk, va) = (valuation(k1, p), valuation(a, p));
        if w % p == 0 {
            acc *= (p as f64).powi(vk.min(va) as i32);
            continue;
        }
        let chis = chi_values(field, p);
        let coeffs = psi_coefficients(&chis, va);
        let e = real(euler_factor(&chis, 1.0 / p as f64));
        acc *= gcd_weighted_local(p, vk, va, |nu| coeffs[nu as usize], e);
    }
    acc
}

/// σ_{k₁}(a) summed over ℓ ≤ bound, with a rigorous tail from the divisor
/// bound |ψ_L(p^ν)| ≤ d_{n−1}(p^ν).
pub fn sigma_k1_truncated(field: &Field, k1: u64, a: u64, w: u64, bound: u64) -> Truncated {
    let f = arith::factor((a as u128) * (k1 as u128)).expect("ak₁ ≥ 1");
    let n1 = field.degree() as u64 - 1;
    let d_coeff = |nu: u32| binomial(nu as u64 + n1 - 1, n1 - 1) as f64;
    let mut constant = 1.0;
    let mut closed_major = 1.0;
    let mut primes = Vec::new();
    for p in f.primes() {
        let p = p as u64;
        let (vk, va) = (valuation(k1, p), valuation(a, p));
        if w % p == 0 {
            constant *= (p as f64).powi(vk.min(va) as i32);
            continue;
        }
        let full = (1.0 - 1.0 / p as f64).powi(-(n1 as i32));
        closed_major *= gcd_weighted_local(p, vk, va, d_coeff, full);
        primes.push(p);
    }
    let mut value = 0.0;
    let mut partial_major = 0.0;
    for l in arith::divisors_supported_on(&primes, bound) {
        let mut term = 1.0;
        let mut major = 1.0;
        for &p in &primes {
            let nu = valuation(l, p);
            let (vk, va) = (valuation(k1, p), valuation(a, p));
            let psi = psi_coefficients(&chi_values(field, p), nu)[nu as usize];
            let g = (p as f64).powi((vk + nu).min(va) as i32) / (p as f64).powi(nu as i32);
            term *= psi * g;
            major *= d_coeff(nu) * g;
        }
        value += term;
        partial_major += major;
    }
    Truncated {
        value: constant * value,
        tail: constant * (closed_major - partial_major).max(0.0),
        cutoff: bound,
    }
}

/// The closed product offered for σ₁(dm²/gcd(d,m²)) with d, m squarefree:
/// ∏_{p|d, p∤m}(1 + Σ_{ν≥1} ψ_L(p^ν)/p^ν) · ∏_{p|m}(1 + ψ_L(p) + Σ_{ν≥2} ψ_L(p^ν)/p^ν).
/// It does not agree with [`sigma_k1`] at k₁ = 1; both are reported.
pub fn sigma1_closed_product(field: &Field, d: u64, m: u64) -> f64 {
    let mut acc = 1.0;
    let f = arith::factor(d as u128 * m as u128).expect("dm ≥ 1");
    for p in f.primes() {
        let p = p as u64;
        let chis = chi_values(field, p);
        let e = real(euler_factor(&chis, 1.0 / p as f64));
        if m % p != 0 {
            acc *= e;
        } else {
            let psi_p = real(chis.iter().sum());
            acc *= e + psi_p * (1.0 - 1.0 / p as f64);
        }
    }
    acc
}

/// Table of k ↦ ψ_L(k)ρ⁻_{F,k₁a}(k;v)[gcd(k,W)=1]/k · gcd(k₁k,a)/gcd(k₁,a), k ≤ y.
fn frak_s_terms(
    field: &Field,
    form: &FormSpec,
    y: u64,
    a: u64,
    k1: u64,
    v: &LocalFactorFunction,
    w: u64,
) -> Result<Vec<f64>, SeriesError> {
    let spf = SpfTable::new(y.max(1));
    let ka = a.saturating_mul(k1);
    let mut err = None;
    let table = arith::multiplicative_table(&spf, y, 1.0f64, |p, nu| {
        if w % p == 0 {
            return 0.0;
        }
        let psi = psi_coefficients(&chi_values(field, p), nu)[nu as usize];
        if psi == 0.0 {
            return 0.0;
        }
        let weight = if ka % p == 0 {
            1.0
        } else {
            match rho_at(form, p, nu) {
                Ok(r) => r as f64 * v.at_prime(p),
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        };
        let (vk, va) = (valuation(k1, p), valuation(a, p));
        let g = (p as f64).powi((vk + nu).min(va) as i32 - vk.min(va) as i32);
        psi * weight * g / (p as f64).powi(nu as i32)
    });
    match err {
        Some(e) => Err(e.into()),
        None => Ok(table),
    }
}

/// 𝔖(y, a, k₁; v) = Σ_{k ≤ y, gcd(k,W)=1} ψ_L(k)ρ⁻_{F,k₁a}(k;v)/k · gcd(k₁k, a).
pub fn frak_s(
    field: &Field,
    form: &FormSpec,
    y: f64,
    a: u64,
    k1: u64,
    v: &LocalFactorFunction,
    w: u64,
) -> Result<f64, SeriesError> {
    if y < 1.0 {
        return Ok(0.0);
    }
    let yi = y.floor() as u64;
    let terms = frak_s_terms(field, form, yi, a, k1, v, w)?;
    let g0 = gcd_u64(k1, a) as f64;
    Ok(g0 * terms[1..].iter().sum::<f64>())
}

/// 𝔖^vol(y, a, k₁, z; v): the terms of [`frak_s`] weighted by vol R(B, z k₁ k).
#[allow(clippy::too_many_arguments)]
pub fn frak_s_vol(
    field: &Field,
    form: &FormSpec,
    y: f64,
    a: u64,
    k1: u64,
    z: f64,
    v: &LocalFactorFunction,
    w: u64,
    b: f64,
) -> Result<f64, SeriesError> {
    if k1 as f64 * z * y > form.b_f() * b * b {
        return Err(SeriesError::Precondition(format!(
            "k1·z·y = {} exceeds b_F·B² = {}",
            k1 as f64 * z * y,
            form.b_f() * b * b
        )));
    }
    if y < 1.0 {
        return Ok(0.0);
    }
    let yi = y.floor() as u64;
    let terms = frak_s_terms(field, form, yi, a, k1, v, w)?;
    let g0 = gcd_u64(k1, a) as f64;
    let mut total = 0.0;
    for (k, &t) in terms.iter().enumerate().skip(1) {
        if t != 0.0 {
            total += t * vol_region(form, b, z * (k1 * k as u64) as f64);
        }
    }
    Ok(g0 * total)
}

/// Summation domain 𝒜 ⊆ N^{n−1} for [`frak_s_box`].
#[derive(Debug, Clone, PartialEq)]
pub enum BoxDomain {
    /// Per-coordinate bounds lo ≤ k_i ≤ hi (hi = None: no upper bound).
    Box(Vec<(u64, Option<u64>)>),
    /// Vectors with max k_i > y.
    OutsideCube(u64),
}

/// Optional vol R(B, z·k₁⋯k_{n−1}) weight for [`frak_s_box`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolWeight {
    pub b: f64,
    pub z: f64,
}

/// 𝔖^#(𝒜, a; v) = Σ_{k⃗ ∈ 𝒜} Ψ_L(k⃗)ρ⁻_{F,a}(K;v)[gcd(K,W)=1]/K · gcd(K, a),
/// K = k₁⋯k_{n−1} ≤ cap, optionally weighted by vol R(B, zK).
#[allow(clippy::too_many_arguments)]
pub fn frak_s_box(
    field: &Field,
    form: &FormSpec,
    domain: &BoxDomain,
    a: u64,
    v: &LocalFactorFunction,
    w: u64,
    cap: Option<u64>,
    vol: Option<VolWeight>,
) -> Result<Complex64, SeriesError> {
    let dims = field.degree() - 1;
    let bounds: Vec<(u64, Option<u64>)> = match domain {
        BoxDomain::Box(b) => {
            if b.len() != dims {
                return Err(SeriesError::Precondition(format!("box has {} coordinates, need {dims}", b.len())));
            }
            b.clone()
        }
        BoxDomain::OutsideCube(_) => vec![(1, None); dims],
    };
    let implied = bounds.iter().try_fold(1u64, |acc, &(_, hi)| hi.and_then(|h| acc.checked_mul(h)));
    let cap = match (cap, implied) {
        (Some(c), Some(i)) => c.min(i),
        (Some(c), None) => c,
        (None, Some(i)) => i,
        (None, None) => return Err(SeriesError::Unbounded),
    };
    let spf = SpfTable::new(cap.max(1));
    let disc = form.disc();
    let mut err = None;
    let t = arith::multiplicative_table(&spf, cap, 1.0f64, |p, nu| {
        if w % p == 0 {
            return 0.0;
        }
        let weight = if a % p == 0 {
            1.0
        } else {
            match rho_at(form, p, nu) {
                Ok(r) => r as f64 * v.at_prime(p),
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        };
        let va = valuation(a, p);
        weight * (p as f64).powi(nu.min(va) as i32) / (p as f64).powi(nu as i32)
    });
    if let Some(e) = err {
        return Err(e.into());
    }
    // k_i with a prime p such that T vanishes at every multiple of p
    let alive = arith::multiplicative_table(&spf, cap, 1u8, |p, _| {
        let dead = w % p == 0 || (a % p != 0 && disc.rem_euclid(p as i64) != 0 && form.rho_minus_prime(p) == 0);
        u8::from(!dead)
    });
    let mut vol_cache: Vec<f64> = if vol.is_some() { vec![f64::NAN; cap as usize + 1] } else { Vec::new() };
    let ctx = BoxCtx {
        chars: field.nontrivial_characters(),
        bounds: &bounds,
        outside: match domain {
            BoxDomain::OutsideCube(y) => Some(*y),
            _ => None,
        },
        cap,
        t: &t,
        alive: &alive,
    };
    let m = field.cyclotomic().order();
    let mut by_root = vec![0.0f64; m];
    let mut weigh = |k: u64| -> f64 {
        match vol {
            None => 1.0,
            Some(VolWeight { b, z }) => {
                let slot = &mut vol_cache[k as usize];
                if slot.is_nan() {
                    *slot = vol_region(form, b, z * k as f64);
                }
                *slot
            }
        }
    };
    box_dfs(&ctx, 0, 1, 0, false, &mut by_root, &mut weigh);
    let cyc = field.cyclotomic();
    Ok(by_root.iter().enumerate().map(|(e, &s)| cyc.root_complex(e as u32) * s).sum())
}

struct BoxCtx<'a> {
    chars: &'a [crate::fields::Character],
    bounds: &'a [(u64, Option<u64>)],
    outside: Option<u64>,
    cap: u64,
    t: &'a [f64],
    alive: &'a [u8],
}

fn box_dfs(
    ctx: &BoxCtx<'_>,
    i: usize,
    prod: u64,
    exp: u32,
    escaped: bool,
    acc: &mut [f64],
    weigh: &mut dyn FnMut(u64) -> f64,
) {
    let m = acc.len() as u32;
    if i == ctx.bounds.len() {
        let t = ctx.t[prod as usize];
        if t != 0.0 {
            acc[(exp % m) as usize] += t * weigh(prod);
        }
        return;
    }
    let (lo, hi) = ctx.bounds[i];
    let mut lo = lo.max(1);
    let last = i + 1 == ctx.bounds.len();
    if let (Some(y), true, false) = (ctx.outside, last, escaped) {
        lo = lo.max(y + 1);
    }
    let top = (ctx.cap / prod).min(hi.unwrap_or(u64::MAX));
    for k in lo..=top {
        if ctx.alive[k as usize] == 0 {
            continue;
        }
        let Some(e) = ctx.chars[i].exp_at(k) else { continue };
        let esc = escaped || ctx.outside.is_some_and(|y| k > y);
        box_dfs(ctx, i + 1, prod * k, exp + e, esc, acc, weigh);
    }
}

/// Σ_{p ≤ z} ρ_F⁻(p)/p and the stabilizing constant value − log log z.
pub fn mertens_rho(form: &FormSpec, z: u64) -> (f64, f64) {
    let value: f64 = arith::primes_up_to(z).into_iter().map(|p| form.rho_minus_prime(p) as f64 / p as f64).sum();
    (value, value - (z.max(3) as f64).ln().ln())
}

/// Σ_{p ≤ z} ψ_L(p)ρ_F⁻(p)/p.
pub fn mertens_twisted(field: &Field, form: &FormSpec, z: u64) -> f64 {
    arith::primes_up_to(z)
        .into_iter()
        .map(|p| {
            let rho = form.rho_minus_prime(p);
            if rho == 0 {
                return 0.0;
            }
            let psi_p = real(chi_values(field, p).iter().sum());
            psi_p * rho as f64 / p as f64
        })
        .sum()
}

/// |L_p(s) · ∏_i L_p(s, χ̃_i)⁻¹ − 1|, where L_p is the local factor of
/// Σ ψ_L ρ_F⁻ n^{−s} and χ̃_i = χ_i ∘ N_{K/Q} on the primes of K over p.
pub fn local_factor_identity(field: &Field, form: &FormSpec, p: u64, s: f64) -> Result<f64, SeriesError> {
    let (a, _, _) = form.coefficients();
    if field.q() % p == 0 || form.disc().rem_euclid(p as i64) == 0 {
        return Err(SeriesError::Ramified(p));
    }
    if a.rem_euclid(p as i64) == 0 {
        return Err(SeriesError::Precondition(format!("{p} divides the leading coefficient")));
    }
    let x = (p as f64).powf(-s);
    let chis = chi_values(field, p);
    let one = Complex64::new(1.0, 0.0);
    let product = match form.rho_minus_prime(p) {
        2 => {
            // two primes of norm p
            let local = one + (euler_factor(&chis, x) - one) * 2.0;
            chis.iter().fold(local, |acc, &c| acc * (one - c * x) * (one - c * x))
        }
        0 => {
            // one prime of norm p²
            chis.iter().fold(one, |acc, &c| acc * (one - c * c * x * x))
        }
        r => unreachable!("ρ⁻({p}) = {r} at an unramified prime"),
    };
    Ok((product - one).norm())
}
