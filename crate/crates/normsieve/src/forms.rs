//! Integer binary quadratic forms F(s,t) = as² + bst + ct²: root counts
//! modulo prime powers, the sieve modulus W and base-point search.

use std::fmt;

use thiserror::Error;

use crate::arith::{self, gcd_u64, mod_inv, mod_mul, Factorization};
use crate::fields::Field;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormError {
    #[error("discriminant is zero")]
    Degenerate,
    #[error("discriminant {0} is a perfect square, so the form is reducible over Q")]
    SquareDiscriminant(i64),
    #[error("root count modulo {p}^{nu} is out of reach for a ramified prime")]
    Unsupported { p: u64, nu: u32 },
    #[error("no residue pair mod {0} gives F a unit lying in H")]
    NoBasePoint(u64),
}

/// F(s,t) = a s² + b s t + c t² with nonzero, non-square discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FormSpec {
    a: i64,
    b: i64,
    c: i64,
    disc: i64,
}

/// Exhaustive root scans are used up to this modulus.
pub const SCAN_LIMIT: u64 = 1_000_000;
const MAX_ROOTS: usize = 1_000_000;

impl FormSpec {
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self, FormError> {
        let disc = b * b - 4 * a * c;
        if disc == 0 {
            return Err(FormError::Degenerate);
        }
        if disc > 0 {
            let r = arith::isqrt(disc as u64) as i64;
            if r * r == disc {
                return Err(FormError::SquareDiscriminant(disc));
            }
        }
        Ok(FormSpec { a, b, c, disc })
    }

    pub fn coefficients(&self) -> (i64, i64, i64) {
        (self.a, self.b, self.c)
    }

    pub fn disc(&self) -> i64 {
        self.disc
    }

    /// gcd(a, b, c).
    pub fn content(&self) -> u64 {
        gcd_u64(gcd_u64(self.a.unsigned_abs(), self.b.unsigned_abs()), self.c.unsigned_abs())
    }

    pub fn is_primitive(&self) -> bool {
        self.content() == 1
    }

    /// Positive definite or negative definite.
    pub fn is_definite(&self) -> bool {
        self.disc < 0
    }

    #[inline]
    pub fn eval(&self, s: i64, t: i64) -> i128 {
        let (s, t) = (s as i128, t as i128);
        self.a as i128 * s * s + self.b as i128 * s * t + self.c as i128 * t * t
    }

    pub fn eval_f64(&self, s: f64, t: f64) -> f64 {
        self.a as f64 * s * s + self.b as f64 * s * t + self.c as f64 * t * t
    }

    /// The form with s and t exchanged, F(t,s).
    pub fn swapped(&self) -> FormSpec {
        FormSpec { a: self.c, b: self.b, c: self.a, disc: self.disc }
    }

    /// |disc(F)·F(0,1)|, whose primes are the bad primes for Hensel lifting.
    pub fn bad_part(&self) -> u64 {
        (self.disc.unsigned_abs() as u128 * self.c.unsigned_abs() as u128).min(u64::MAX as u128) as u64
    }

    /// sup of |F| on [−1,1]²: the maximum sits on the boundary, so compare
    /// corners with the vertex of each edge parabola.
    pub fn b_f(&self) -> f64 {
        let mut best: f64 = 0.0;
        let mut consider = |s: f64, t: f64| best = best.max(self.eval_f64(s, t).abs());
        for s in [-1.0, 1.0] {
            for t in [-1.0, 1.0] {
                consider(s, t);
            }
        }
        let (a, b, c) = (self.a as f64, self.b as f64, self.c as f64);
        for sign in [-1.0, 1.0] {
            if c != 0.0 {
                let t = -b * sign / (2.0 * c);
                if t.abs() <= 1.0 {
                    consider(sign, t);
                }
            }
            if a != 0.0 {
                let s = -b * sign / (2.0 * a);
                if s.abs() <= 1.0 {
                    consider(s, sign);
                }
            }
        }
        best
    }

    /// F(x, 1) mod m.
    #[inline]
    pub fn eval_mod(&self, x: u64, m: u64) -> u64 {
        let m128 = m as u128;
        let red = |v: i64| v.rem_euclid(m as i64) as u128;
        let x = x as u128 % m128;
        let x2 = mod_mul(x, x, m128);
        ((mod_mul(red(self.a), x2, m128) + mod_mul(red(self.b), x, m128) + red(self.c)) % m128) as u64
    }

    fn derivative_mod(&self, x: u64, m: u64) -> u64 {
        let m128 = m as u128;
        let red = |v: i64| v.rem_euclid(m as i64) as u128;
        ((mod_mul(red(2 * self.a), x as u128, m128) + red(self.b)) % m128) as u64
    }

    fn hensel_stable(&self, p: u64) -> bool {
        self.bad_part() % p != 0
    }

    /// Roots ξ mod p^ν of F(ξ,1) ≡ 0, sorted.
    pub fn roots_mod_prime_power(&self, p: u64, nu: u32) -> Result<Vec<u64>, FormError> {
        let pk = p.checked_pow(nu).filter(|&v| v < 1 << 62).ok_or(FormError::Unsupported { p, nu })?;
        if pk <= SCAN_LIMIT {
            return Ok((0..pk).filter(|&x| self.eval_mod(x, pk) == 0).collect());
        }
        let base: Vec<u64> = (0..p.min(SCAN_LIMIT + 1)).filter(|&x| self.eval_mod(x, p) == 0).collect();
        if p > SCAN_LIMIT && !self.hensel_stable(p) {
            return Err(FormError::Unsupported { p, nu });
        }
        let mut roots = if p > SCAN_LIMIT { self.large_prime_roots(p)? } else { base };
        let mut m = p;
        for _ in 1..nu {
            let next = m * p;
            let mut lifted = Vec::new();
            for &r in &roots {
                let d = self.derivative_mod(r, p);
                if d != 0 {
                    // simple root: exactly one lift
                    let inv = mod_inv(d, p).expect("p prime");
                    let f = self.eval_mod(r, next);
                    debug_assert_eq!(f % m, 0);
                    let k = (f / m) % p;
                    let i = (p - (k as u128 * inv as u128 % p as u128) as u64) % p;
                    lifted.push(r + i * m);
                } else {
                    for i in 0..p {
                        let x = r + i * m;
                        if self.eval_mod(x, next) == 0 {
                            lifted.push(x);
                        }
                    }
                }
                if lifted.len() > MAX_ROOTS {
                    return Err(FormError::Unsupported { p, nu });
                }
            }
            roots = lifted;
            m = next;
        }
        roots.sort_unstable();
        Ok(roots)
    }

    /// Roots modulo a prime beyond the scan limit (p odd, p ∤ disc).
    fn large_prime_roots(&self, p: u64) -> Result<Vec<u64>, FormError> {
        let a = self.a.rem_euclid(p as i64) as u64;
        let b = self.b.rem_euclid(p as i64) as u64;
        let c = self.c.rem_euclid(p as i64) as u64;
        if a == 0 {
            if b == 0 {
                return Ok(Vec::new());
            }
            let x = (p - c) % p * mod_inv(b, p).expect("p prime") % p;
            return Ok(vec![x]);
        }
        let d = self.disc.rem_euclid(p as i64) as u64;
        let Some(r) = sqrt_mod_prime(d, p) else { return Ok(Vec::new()) };
        let inv2a = mod_inv(2 * a % p, p).expect("p prime");
        let mut out = vec![
            ((p - b + r) % p) as u128 * inv2a as u128 % p as u128,
            ((2 * p - b - r) % p) as u128 * inv2a as u128 % p as u128,
        ];
        out.sort_unstable();
        out.dedup();
        Ok(out.into_iter().map(|x| x as u64).collect())
    }

    /// Roots ξ mod p of F(ξ,1) for a prime p, sorted; the quadratic formula
    /// when p is odd and p ∤ a, otherwise a scan.
    pub fn roots_mod_prime(&self, p: u64) -> Vec<u64> {
        let pi = p as i64;
        let am = self.a.rem_euclid(pi) as u64;
        if p == 2 || am == 0 {
            return (0..p).filter(|&x| self.eval_mod(x, p) == 0).collect();
        }
        let d = self.disc.rem_euclid(pi) as u64;
        let Some(r) = sqrt_mod_prime(d, p) else { return Vec::new() };
        let inv2a = arith::mod_inv(2 * am % p, p).expect("p odd, p ∤ a");
        let mb = (-self.b).rem_euclid(pi) as u64;
        let mut out: Vec<u64> = [(mb + r) % p, (mb + p - r) % p]
            .iter()
            .map(|&x| (x as u128 * inv2a as u128 % p as u128) as u64)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// ρ_F⁻(p) for a prime p; Euler's criterion on the discriminant when
    /// p is odd and coprime to a·disc.
    pub fn rho_minus_prime(&self, p: u64) -> u64 {
        let (a, _, _) = self.coefficients();
        let d = self.disc.rem_euclid(p as i64) as u64;
        if p > 2 && d != 0 && a.rem_euclid(p as i64) != 0 {
            let e = arith::mod_pow(d as u128, ((p - 1) / 2) as u128, p as u128);
            return if e == 1 { 2 } else { 0 };
        }
        self.roots_mod_prime_power(p, 1).map(|r| r.len() as u64).expect("prime modulus")
    }

    /// ρ_F⁻(p^ν), the number of roots of F(ξ,1) mod p^ν.
    pub fn rho_minus_pp(&self, p: u64, nu: u32) -> Result<u64, FormError> {
        if nu == 0 {
            return Ok(1);
        }
        let pk = p.checked_pow(nu);
        if pk.map_or(true, |v| v > SCAN_LIMIT) && self.hensel_stable(p) {
            return self.rho_minus_pp(p, 1);
        }
        Ok(self.roots_mod_prime_power(p, nu)?.len() as u64)
    }

    /// ρ_F⁻(k, a): product of ρ_F⁻(p^ν) over p^ν ∥ k with p ∤ a.
    pub fn rho_minus(&self, k: &Factorization, a: u64) -> Result<u64, FormError> {
        let mut acc = 1u64;
        for &(p, nu) in k.factors() {
            let p = p as u64;
            if a % p == 0 {
                continue;
            }
            acc *= self.rho_minus_pp(p, nu)?;
            if acc == 0 {
                break;
            }
        }
        Ok(acc)
    }

    /// ρ_F(p^ν): pairs mod p^ν with F ≡ 0.
    ///
    /// Pairs with ξ₂ a unit contribute φ(p^ν)ρ_F⁻(p^ν), pairs with only ξ₁ a
    /// unit contribute φ(p^ν) times the roots of F(1,y) divisible by p, and
    /// pairs divisible by p reduce to p²·ρ_F(p^{ν−2}).
    pub fn rho_full_pp(&self, p: u64, nu: u32) -> Result<u64, FormError> {
        if nu == 0 {
            return Ok(1);
        }
        let pk = p.pow(nu);
        let phi = pk - pk / p;
        let at_infinity = if self.a.rem_euclid(p as i64) == 0 {
            self.swapped().roots_mod_prime_power(p, nu)?.iter().filter(|&&y| y % p == 0).count() as u64
        } else {
            0
        };
        let inner = if nu == 1 { 1 } else { p * p * self.rho_full_pp(p, nu - 2)? };
        Ok(phi * (self.rho_minus_pp(p, nu)? + at_infinity) + inner)
    }

    /// ρ_F(k) for any k ≥ 1, multiplicatively.
    pub fn rho_full(&self, k: u64) -> Result<u64, FormError> {
        let f = arith::factor(k as u128).expect("k ≥ 1");
        let mut acc = 1u64;
        for &(p, nu) in f.factors() {
            acc *= self.rho_full_pp(p as u64, nu)?;
        }
        Ok(acc)
    }

    /// All ξ mod k with F(ξ,1) ≡ 0 mod k, assembled by CRT; sorted.
    pub fn roots_mod(&self, k: &Factorization) -> Result<Vec<u64>, FormError> {
        let mut roots = vec![0u64];
        let mut modulus = 1u64;
        for &(p, nu) in k.factors() {
            let (p, nu) = (p as u64, nu);
            let pk = p.pow(nu);
            let local = self.roots_mod_prime_power(p, nu)?;
            let mut next = Vec::with_capacity(roots.len() * local.len());
            for &r in &roots {
                for &l in &local {
                    next.push(arith::crt_pair(r, modulus, l, pk));
                }
            }
            roots = next;
            modulus *= pk;
        }
        roots.sort_unstable();
        Ok(roots)
    }
}

impl fmt::Display for FormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s^2{:+}st{:+}t^2", self.a, self.b, self.c)
    }
}

/// Square root modulo an odd prime (Tonelli–Shanks).
pub fn sqrt_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(a);
    }
    let pw = |b: u64, e: u64| arith::mod_pow(b as u128, e as u128, p as u128) as u64;
    if pw(a, (p - 1) / 2) != 1 {
        return None;
    }
    let s = (p - 1).trailing_zeros();
    let q = (p - 1) >> s;
    let z = (2..p).find(|&z| pw(z, (p - 1) / 2) == p - 1).expect("non-residue exists");
    let mul = |x: u64, y: u64| (x as u128 * y as u128 % p as u128) as u64;
    let (mut m, mut c, mut t, mut r) = (s, pw(z, q), pw(a, q), pw(a, q.div_ceil(2)));
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mul(tt, tt);
            i += 1;
        }
        let b = pw(c, 1 << (m - i - 1));
        m = i;
        c = mul(b, b);
        t = mul(t, c);
        r = mul(r, b);
    }
    Some(r)
}

/// The modulus W = ∏_{p ≤ w₀} p^{max(1, v_p(q))}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveModulus {
    pub w: u64,
    pub w0: u64,
}

impl SieveModulus {
    pub fn from_w0(w0: u64, q: u64) -> Self {
        let mut w = 1u64;
        for p in arith::primes_up_to(w0) {
            let mut pk = p;
            while q % (pk * p) == 0 {
                pk *= p;
            }
            w *= pk;
        }
        SieveModulus { w, w0 }
    }

    /// The primes dividing W.
    pub fn primes(&self) -> Vec<u64> {
        arith::primes_up_to(self.w0)
    }
}

/// Default lower bound for w₀: the conductor.
pub fn default_w0_min(field: &Field) -> u64 {
    field.q()
}

/// Smallest admissible w₀ ≥ max(w0_min, 2n+1, every prime of disc·F(0,1)·q),
/// and the resulting W.
pub fn compute_w(field: &Field, form: &FormSpec, w0_min: u64) -> SieveModulus {
    let (_, _, c) = form.coefficients();
    assert!(c != 0, "F(0,1) vanishes only for forms with a rational linear factor");
    let bad = form.disc().unsigned_abs() as u128 * c.unsigned_abs() as u128 * field.q() as u128;
    let largest = arith::factor(bad).expect("nonzero").primes().max().unwrap_or(1) as u64;
    let w0 = w0_min.max(2 * field.degree() as u64 + 1).max(largest);
    SieveModulus::from_w0(w0, field.q())
}

/// Lexicographically first (s₁, t₁) mod W with F(s₁,t₁) a unit mod W lying in H.
pub fn find_base_point(field: &Field, form: &FormSpec, modulus: &SieveModulus) -> Result<(u64, u64), FormError> {
    let w = modulus.w;
    let q = field.q();
    for s in 0..w {
        for t in 0..w {
            let v = form.eval(s as i64, t as i64);
            let vw = v.rem_euclid(w as i128) as u64;
            if gcd_u64(vw, w) != 1 {
                continue;
            }
            if field.in_h(v.rem_euclid(q as i128) as u64) {
                return Ok((s, t));
            }
        }
    }
    Err(FormError::NoBasePoint(w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_roots_match_scan() {
        for f in [FormSpec::new(1, 0, -2).unwrap(), FormSpec::new(3, 5, -7).unwrap(), FormSpec::new(2, 1, 3).unwrap()] {
            for p in arith::primes_up_to(500) {
                let scan: Vec<u64> = (0..p).filter(|&x| f.eval_mod(x, p) == 0).collect();
                assert_eq!(f.roots_mod_prime(p), scan, "{f} mod {p}");
                assert_eq!(f.rho_minus_prime(p), scan.len() as u64);
            }
        }
    }
    use crate::fields::FieldSpec;

    fn pell() -> FormSpec {
        FormSpec::new(1, 0, -2).unwrap()
    }

    #[test]
    fn rejects_degenerate_forms() {
        assert_eq!(FormSpec::new(1, 2, 1), Err(FormError::Degenerate));
        assert_eq!(FormSpec::new(1, 0, -4), Err(FormError::SquareDiscriminant(16)));
    }

    #[test]
    fn sup_on_square() {
        assert_eq!(pell().b_f(), 2.0);
        assert_eq!(FormSpec::new(1, 0, 1).unwrap().b_f(), 2.0);
        assert_eq!(FormSpec::new(1, 1, 1).unwrap().b_f(), 3.0);
        // corners give 3, the vertex of F(s,1) at s = −1/2 gives 3.25
        assert_eq!(FormSpec::new(1, 1, -3).unwrap().b_f(), 3.25);
    }

    #[test]
    fn root_counts() {
        let f = pell();
        assert_eq!(f.rho_minus_pp(7, 1).unwrap(), 2);
        assert_eq!(f.rho_minus_pp(7, 2).unwrap(), 2);
        assert_eq!(f.roots_mod_prime_power(7, 2).unwrap(), vec![10, 39]);
        assert_eq!(f.rho_minus_pp(5, 1).unwrap(), 0);
        let k = arith::factor(119).unwrap();
        assert_eq!(f.rho_minus(&k, 1).unwrap(), 4);
        assert_eq!(f.rho_minus(&k, 7).unwrap(), 2);
        assert_eq!(f.rho_minus(&Factorization::one(), 5).unwrap(), 1);
    }

    #[test]
    fn pair_counts() {
        let f = pell();
        assert_eq!(f.rho_full(7).unwrap(), 13);
        assert_eq!(f.rho_full(5).unwrap(), 1);
        assert_eq!(f.rho_full(1).unwrap(), 1);
    }

    #[test]
    fn roots_by_crt() {
        let f = pell();
        assert_eq!(f.roots_mod(&arith::factor(7).unwrap()).unwrap(), vec![3, 4]);
        assert_eq!(f.roots_mod(&arith::factor(17).unwrap()).unwrap(), vec![6, 11]);
        let r = f.roots_mod(&arith::factor(119).unwrap()).unwrap();
        assert_eq!(r.len(), 4);
        assert!(r.iter().all(|&x| f.eval_mod(x, 119) == 0));
    }

    #[test]
    fn hensel_beyond_scan_limit() {
        let f = pell();
        // 7^8 > 10^6: lifted, and each lift is a genuine root
        let r = f.roots_mod_prime_power(7, 8).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(|&x| f.eval_mod(x, 7u64.pow(8)) == 0));
        assert_eq!(f.rho_minus_pp(7, 8).unwrap(), 2);
        // ramified 2 with a large exponent: lifting by scan still terminates
        assert_eq!(f.rho_minus_pp(2, 25).unwrap(), 0);
        let big = 1_000_003u64;
        let r = f.roots_mod_prime_power(big, 1).unwrap();
        assert!(r.iter().all(|&x| f.eval_mod(x, big) == 0));
    }

    #[test]
    fn tonelli_shanks() {
        for p in [3u64, 5, 7, 13, 17, 41, 97, 1_000_003] {
            for a in 1..50u64 {
                if let Some(r) = sqrt_mod_prime(a, p) {
                    assert_eq!(r as u128 * r as u128 % p as u128, (a % p) as u128);
                }
            }
        }
    }

    #[test]
    fn sieve_modulus_examples() {
        let l9 = Field::new(&FieldSpec::new(9, &[1, 8], true)).unwrap();
        let m = compute_w(&l9, &pell(), 9);
        assert_eq!(m.w, 630);
        let l4 = Field::new(&FieldSpec::new(4, &[1], true)).unwrap();
        let m4 = compute_w(&l4, &FormSpec::new(1, 0, 1).unwrap(), 5);
        assert_eq!(m4.w, 60);
        assert_eq!(m.w % 9, 0);
    }

    #[test]
    fn base_points() {
        let l9 = Field::new(&FieldSpec::new(9, &[1, 8], true)).unwrap();
        let m = compute_w(&l9, &pell(), 9);
        let (s, t) = find_base_point(&l9, &pell(), &m).unwrap();
        let v = pell().eval(s as i64, t as i64);
        assert_eq!(gcd_u64(v.rem_euclid(630) as u64, 630), 1);
        assert!(l9.in_h(v.rem_euclid(9) as u64));
        // (1,1) qualifies as well
        assert!(l9.in_h(pell().eval(1, 1).rem_euclid(9) as u64));
    }

    #[test]
    fn base_point_absent() {
        // 3 = N(x) never occurs for F = s² + t² times 3 mod 4 on Q(i)
        let l4 = Field::new(&FieldSpec::new(4, &[1], true)).unwrap();
        let f = FormSpec::new(3, 0, 3).err();
        assert!(f.is_none());
        let f = FormSpec::new(3, 2, 3).unwrap();
        let m = compute_w(&l4, &f, 5);
        assert!(matches!(find_base_point(&l4, &f, &m), Err(FormError::NoBasePoint(_))));
    }
}
