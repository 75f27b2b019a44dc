//! Congruence lattices {s ≡ ξt mod k}, their first minima, and exact and
//! estimated counts of primitive points with k | F(s,t) in a residue class.

use std::collections::HashMap;
use std::f64::consts::PI;

use thiserror::Error;

use crate::arith::{self, crt_pair, gcd_u64, Factorization};
use crate::forms::{FormError, FormSpec};
use crate::regions::vol_region;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("k = {k} shares a factor with W = {w}")]
    NotCoprime { k: u64, w: u64 },
    #[error("residue {xi} is not reduced modulo {k}")]
    BadResidue { k: u64, xi: u64 },
    #[error("enumeration of {0} residue classes exceeds the budget")]
    Budget(u128),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// Work limit (rows × residue classes) for exact counting.
pub const COUNT_BUDGET: u128 = 20_000_000_000;

/// The lattice {(s,t) ∈ Z² : s ≡ ξt mod k} with a Gauss-reduced basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CongruenceLattice {
    pub k: u64,
    pub xi: u64,
    /// Shortest vector first.
    pub basis: [(i64, i64); 2],
    pub lambda1: f64,
}

impl CongruenceLattice {
    pub fn new(k: u64, xi: u64) -> Result<Self, LatticeError> {
        if k == 0 || xi >= k {
            return Err(LatticeError::BadResidue { k, xi });
        }
        let (b1, b2) = gauss_reduce((k as i128, 0), (xi as i128, 1));
        let b1 = normalize(b1);
        let lambda1 = (norm2(b1) as f64).sqrt();
        Ok(CongruenceLattice { k, xi, basis: [(b1.0 as i64, b1.1 as i64), (b2.0 as i64, b2.1 as i64)], lambda1 })
    }

    pub fn determinant(&self) -> i128 {
        let [(a, b), (c, d)] = self.basis;
        a as i128 * d as i128 - b as i128 * c as i128
    }

    pub fn contains(&self, s: i64, t: i64) -> bool {
        (s as i128 - self.xi as i128 * t as i128).rem_euclid(self.k as i128) == 0
    }
}

fn norm2(v: (i128, i128)) -> i128 {
    v.0 * v.0 + v.1 * v.1
}

fn gauss_reduce(u: (i128, i128), v: (i128, i128)) -> ((i128, i128), (i128, i128)) {
    let (mut b1, mut b2) = if norm2(v) <= norm2(u) { (v, u) } else { (u, v) };
    loop {
        let n1 = norm2(b1);
        let dot = b1.0 * b2.0 + b1.1 * b2.1;
        // nearest integer to dot / n1, ties toward zero
        let m = {
            let q = dot.div_euclid(n1);
            let r = dot.rem_euclid(n1);
            if 2 * r > n1 {
                q + 1
            } else {
                q
            }
        };
        b2 = (b2.0 - m * b1.0, b2.1 - m * b1.1);
        if norm2(b2) < n1 {
            std::mem::swap(&mut b1, &mut b2);
        } else {
            return (b1, b2);
        }
    }
}

/// Sign convention for a shortest vector: t > 0, or s > 0 when t = 0.
fn normalize(v: (i128, i128)) -> (i128, i128) {
    if v.1 < 0 || (v.1 == 0 && v.0 < 0) {
        (-v.0, -v.1)
    } else {
        v
    }
}

/// λ₁(k,ξ) and a shortest nonzero vector.
pub fn lambda1(k: u64, xi: u64) -> Result<(f64, (i64, i64)), LatticeError> {
    let l = CongruenceLattice::new(k, xi)?;
    Ok((l.lambda1, l.basis[0]))
}

/// The constant c′ = W⁻² ∏_{p∤W}(1 − p⁻²), in closed form
/// (6/π²)/∏_{p|W}(1 − p⁻²) / W².
pub fn c_prime(w: u64) -> f64 {
    let mut local = 1.0;
    for (p, _) in arith::factor(w as u128).expect("W ≥ 1").factors() {
        let p = *p as f64;
        local *= 1.0 - 1.0 / (p * p);
    }
    6.0 / (PI * PI) / local / (w as f64 * w as f64)
}

/// v₀(k) = ∏_{p|k} (1 + 1/p)⁻¹.
pub fn v0(k: &Factorization) -> f64 {
    k.primes().map(|p| 1.0 / (1.0 + 1.0 / p as f64)).product()
}

/// Main term c′·vol R(B,z)·ρ_F⁻(k)v₀(k)/k of the lattice-point estimate.
pub fn lambda_star_estimate(form: &FormSpec, b: f64, z: f64, k: &Factorization, w: u64) -> Result<f64, LatticeError> {
    let kv = k.value() as u64;
    if gcd_u64(kv, w) != 1 {
        return Err(LatticeError::NotCoprime { k: kv, w });
    }
    let rho = form.rho_minus(k, 1)? as f64;
    Ok(c_prime(w) * vol_region(form, b, z) * rho * v0(k) / kv as f64)
}

/// #Λ*(R(B,z), k): points of R(B,z) with gcd(s,t) = 1,
/// (s,t) ≡ (s₁,t₁) mod W and k | F(s,t), counted exactly.
pub fn lambda_star_count(
    form: &FormSpec,
    b: f64,
    z: f64,
    k: u64,
    base: (u64, u64),
    w: u64,
) -> Result<u64, LatticeError> {
    if gcd_u64(k, w) != 1 {
        return Err(LatticeError::NotCoprime { k, w });
    }
    let bi = b.floor() as i64;
    let kf = arith::factor(k as u128).expect("k ≥ 1");
    let locals: Vec<(u64, u64, Vec<u64>)> = kf
        .factors()
        .iter()
        .map(|&(p, nu)| {
            let (p, nu) = (p as u64, nu);
            Ok((p, p.pow(nu), form.roots_mod_prime_power(p, nu)?))
        })
        .collect::<Result<_, FormError>>()?;
    let rows = (2 * bi as u128 + 1) / w as u128 + 1;
    let classes: u128 = locals.iter().map(|l| l.2.len().max(1) as u128).product();
    if rows * classes > COUNT_BUDGET {
        return Err(LatticeError::Budget(rows * classes));
    }
    let (s1, t1) = (base.0 % w, base.1 % w);
    let m = k * w;
    let zc = z.max(0.0).ceil() as i128;
    let mut cache: HashMap<(u64, u64), Vec<u64>> = HashMap::new();
    let mut total = 0u64;
    let t_start = first_in_class(-bi, t1, w);
    let mut t = t_start;
    while t <= bi {
        if t == 0 {
            for s in [-1i64, 1] {
                if s.abs() <= bi
                    && (s as i128).rem_euclid(w as i128) as u64 == s1
                    && form.eval(s, 0).rem_euclid(k as i128) == 0
                    && form.eval(s, 0).abs() >= zc
                {
                    total += 1;
                }
            }
            t += w as i64;
            continue;
        }
        // residues of s modulo k·W
        let mut residues = vec![s1 % w];
        let mut modulus = w;
        for (p, pk, roots) in &locals {
            let tm = (t as i128).rem_euclid(*pk as i128) as u64;
            let local: Vec<u64> = if tm % p != 0 {
                roots.iter().map(|&xi| (xi as u128 * tm as u128 % *pk as u128) as u64).collect()
            } else if form.coefficients().0.rem_euclid(*p as i64) != 0 {
                // p | t and p ∤ s force p ∤ F(s,t)
                Vec::new()
            } else {
                cache
                    .entry((*pk, tm))
                    .or_insert_with(|| {
                        (0..*pk)
                            .filter(|&s| s % p != 0 && form.eval(s as i64, tm as i64).rem_euclid(*pk as i128) == 0)
                            .collect()
                    })
                    .clone()
            };
            let mut next = Vec::with_capacity(residues.len() * local.len());
            for &r in &residues {
                for &l in &local {
                    next.push(crt_pair(r, modulus, l, *pk));
                }
            }
            residues = next;
            modulus *= pk;
            if residues.is_empty() {
                break;
            }
        }
        if !residues.is_empty() {
            let pieces = good_s_intervals(form, t, bi, zc);
            let rad: Vec<u64> = arith::factor(t.unsigned_abs() as u128)
                .expect("t ≠ 0")
                .primes()
                .map(|p| p as u64)
                .collect();
            for &r in &residues {
                total += coprime_in_class(&pieces, r, m, &rad);
            }
        }
        t += w as i64;
    }
    Ok(total)
}

fn first_in_class(lo: i64, r: u64, w: u64) -> i64 {
    let off = (r as i128 - lo as i128).rem_euclid(w as i128) as i64;
    lo + off
}

/// #{s ∈ pieces : s ≡ r mod m, gcd(s, rad) = 1} by inclusion–exclusion.
fn coprime_in_class(pieces: &[(i64, i64)], r: u64, m: u64, rad: &[u64]) -> u64 {
    let mut total: i128 = 0;
    for mask in 0u32..(1 << rad.len()) {
        let mut e = 1u64;
        let mut g = 1u64;
        for (i, &p) in rad.iter().enumerate() {
            if mask >> i & 1 == 1 {
                e *= p;
                if m % p == 0 {
                    g *= p;
                }
            }
        }
        if r % g != 0 {
            continue;
        }
        let e_rest = e / g;
        let modulus = m as u128 * e_rest as u128;
        let c = if e_rest == 1 { r as u128 } else { crt_pair(r, m, 0, e_rest) as u128 };
        let sign: i128 = if mask.count_ones() % 2 == 0 { 1 } else { -1 };
        for &(lo, hi) in pieces {
            total += sign * count_progression(lo, hi, c as i128, modulus as i128);
        }
    }
    total as u64
}

/// #{s ∈ [lo, hi] : s ≡ c mod m}.
fn count_progression(lo: i64, hi: i64, c: i128, m: i128) -> i128 {
    if hi < lo {
        return 0;
    }
    (hi as i128 - c).div_euclid(m) - (lo as i128 - 1 - c).div_euclid(m)
}

/// Integer s ∈ [−B, B] with |F(s,t)| ≥ zc, as disjoint closed intervals.
fn good_s_intervals(form: &FormSpec, t: i64, bi: i64, zc: i128) -> Vec<(i64, i64)> {
    if zc <= 0 {
        return vec![(-bi, bi)];
    }
    let (a, b, c) = form.coefficients();
    let (mut qa, mut qb, mut qc) = (a as i128, b as i128 * t as i128, c as i128 * t as i128 * t as i128);
    if qa < 0 {
        qa = -qa;
        qb = -qb;
        qc = -qc;
    }
    // bad set {−zc < g < zc} = {g ≤ zc−1} minus {g ≤ −zc}
    let Some((l1, h1)) = int_sublevel(qa, qb, qc, zc - 1) else { return vec![(-bi, bi)] };
    let mut out = vec![(-bi, (l1 - 1).min(bi))];
    if let Some((l2, h2)) = int_sublevel(qa, qb, qc, -zc) {
        out.push((l2.max(-bi), h2.min(bi)));
    }
    out.push(((h1 + 1).max(-bi), bi));
    out.retain(|(lo, hi)| lo <= hi);
    out
}

/// The integer interval {s : a s² + b s + c ≤ v} for a > 0.
fn int_sublevel(a: i128, b: i128, c: i128, v: i128) -> Option<(i64, i64)> {
    let g = |s: i128| a * s * s + b * s + c;
    let x0 = -(b as f64) / (2.0 * a as f64);
    let m = [x0.floor() as i128, x0.ceil() as i128].into_iter().min_by_key(|&s| g(s)).unwrap();
    if g(m) > v {
        return None;
    }
    let disc = (b as f64) * (b as f64) - 4.0 * (a as f64) * ((c - v) as f64);
    let half = disc.max(0.0).sqrt() / (2.0 * a as f64);
    let mut hi = ((x0 + half).floor() as i128).max(m);
    while g(hi + 1) <= v {
        hi += 1;
    }
    while g(hi) > v {
        hi -= 1;
    }
    let mut lo = ((x0 - half).ceil() as i128).min(m);
    while g(lo - 1) <= v {
        lo -= 1;
    }
    while g(lo) > v {
        lo += 1;
    }
    Some((lo as i64, hi as i64))
}

/// Σ_{k ≤ y} Σ_{ξ : F(ξ,1) ≡ 0 mod k} 1/λ₁(k,ξ).
pub fn inv_lambda1_sum(form: &FormSpec, y: u64) -> Result<f64, LatticeError> {
    let mut total = 0.0;
    for k in 1..=y {
        let kf = arith::factor(k as u128).expect("k ≥ 1");
        for xi in form.roots_mod(&kf)? {
            total += 1.0 / lambda1(k, xi)?.0;
        }
    }
    Ok(total)
}
