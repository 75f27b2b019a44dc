//! Exact integer arithmetic: factorization up to 2^127, Möbius and friends,
//! smooth-divisor enumeration and smallest-prime-factor tables.

use std::sync::OnceLock;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("cannot factor zero")]
    Zero,
    #[error("value {0} exceeds 2^127")]
    TooLarge(u128),
    #[error("table of {entries} entries needs {bytes} bytes, budget is {budget}")]
    Budget { entries: u64, bytes: u64, budget: u64 },
}

/// Trial division covers every prime below this bound.
pub const TRIAL_LIMIT: u64 = 1_000_000;

/// A positive integer together with its prime factorization.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Factorization {
    value: u128,
    factors: Vec<(u128, u32)>,
}

impl Factorization {
    /// The factorization of 1.
    pub fn one() -> Self {
        Factorization { value: 1, factors: Vec::new() }
    }

    /// Builds from `(prime, exponent)` pairs. Pairs are sorted and merged;
    /// primality is the caller's responsibility.
    pub fn from_pairs(pairs: &[(u128, u32)]) -> Self {
        let mut factors: Vec<(u128, u32)> = pairs.iter().copied().filter(|&(_, e)| e > 0).collect();
        factors.sort_unstable();
        let mut merged: Vec<(u128, u32)> = Vec::with_capacity(factors.len());
        for (p, e) in factors {
            match merged.last_mut() {
                Some((q, f)) if *q == p => *f += e,
                _ => merged.push((p, e)),
            }
        }
        let value = merged.iter().fold(1u128, |acc, &(p, e)| acc * p.pow(e));
        Factorization { value, factors: merged }
    }

    pub fn value(&self) -> u128 {
        self.value
    }

    pub fn factors(&self) -> &[(u128, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u128> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Exponent of `p` in the value.
    pub fn valuation(&self, p: u128) -> u32 {
        self.factors.iter().find(|&&(q, _)| q == p).map_or(0, |&(_, e)| e)
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    /// Number of distinct prime factors.
    pub fn omega(&self) -> usize {
        self.factors.len()
    }

    pub fn moebius(&self) -> i8 {
        if !self.is_squarefree() {
            0
        } else if self.factors.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / gcd_u64(a, b) * b
}

/// Extended gcd: returns (g, x, y) with a·x + b·y = g.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inv(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (g, x, _) = ext_gcd(a as i128, m as i128);
    (g == 1).then(|| x.rem_euclid(m as i128) as u64)
}

/// Combines `x ≡ r1 mod m1` and `x ≡ r2 mod m2` for coprime moduli.
pub fn crt_pair(r1: u64, m1: u64, r2: u64, m2: u64) -> u64 {
    let inv = mod_inv(m1 % m2, m2).expect("crt moduli must be coprime");
    let m = m1 as u128 * m2 as u128;
    let diff = (r2 as i128 - r1 as i128).rem_euclid(m2 as i128) as u128;
    let k = diff * inv as u128 % m2 as u128;
    ((r1 as u128 + k * m1 as u128) % m) as u64
}

/// Modular multiplication valid for any modulus below 2^127.
#[inline]
pub fn mod_mul(a: u128, b: u128, m: u128) -> u128 {
    if m <= u64::MAX as u128 {
        return (a % m) * (b % m) % m;
    }
    // double-and-add; a + b never overflows because m < 2^127
    let (mut a, mut b) = (a % m, b % m);
    let mut acc = 0u128;
    while b > 0 {
        if b & 1 == 1 {
            acc += a;
            if acc >= m {
                acc -= m;
            }
        }
        a <<= 1;
        if a >= m {
            a -= m;
        }
        b >>= 1;
    }
    acc
}

pub fn mod_pow(mut base: u128, mut exp: u128, m: u128) -> u128 {
    if m == 1 {
        return 0;
    }
    let mut result = 1u128;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mod_mul(result, base, m);
        }
        base = mod_mul(base, base, m);
        exp >>= 1;
    }
    result
}

#[inline]
fn mod_mul_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn mod_pow_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut result = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mod_mul_u64(result, base, m);
        }
        base = mod_mul_u64(base, base, m);
        exp >>= 1;
    }
    result
}

// The first twelve primes are a deterministic witness set below 3.3e24.
const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
const DETERMINISTIC_BOUND: u128 = 3_317_044_064_679_887_385_961_981;
const EXTRA_WITNESSES: [u64; 8] = [41, 43, 47, 53, 59, 61, 67, 71];

/// Deterministic Miller–Rabin for 64-bit inputs.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    if n < 1 << 32 {
        return is_prime_u32(n);
    }
    let d = (n - 1) >> (n - 1).trailing_zeros();
    let s = (n - 1).trailing_zeros();
    'witness: for &a in &WITNESSES {
        let mut x = mod_pow_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mod_mul_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Miller–Rabin below 2^32 with the witnesses {2, 7, 61}, which are
/// deterministic there. `n` must be odd and free of factors below 38.
fn is_prime_u32(n: u64) -> bool {
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    let mul = |a: u64, b: u64| a * b % n;
    'witness: for a in [2u64, 7, 61] {
        if a % n == 0 {
            continue;
        }
        let (mut x, mut base, mut e) = (1u64, a % n, d);
        while e > 0 {
            if e & 1 == 1 {
                x = mul(x, base);
            }
            base = mul(base, base);
            e >>= 1;
        }
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Miller–Rabin for inputs up to 2^127.
///
/// Deterministic below 3.3e24; above that the witness set is widened to the
/// first twenty primes and the answer is a strong probable prime.
pub fn is_prime(n: u128) -> bool {
    if n <= u64::MAX as u128 {
        return is_prime_u64(n as u64);
    }
    for &p in WITNESSES.iter().chain(EXTRA_WITNESSES.iter()) {
        if n % p as u128 == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    let extra: &[u64] = if n < DETERMINISTIC_BOUND { &[] } else { &EXTRA_WITNESSES };
    'witness: for &a in WITNESSES.iter().chain(extra.iter()) {
        let mut x = mod_pow(a as u128, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mod_mul(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn abs_diff(a: u128, b: u128) -> u128 {
    if a > b {
        a - b
    } else {
        b - a
    }
}

/// Brent's variant of Pollard rho. `n` must be odd and composite.
fn pollard_brent(n: u128) -> u128 {
    let mut c = 1u128;
    loop {
        let f = |x: u128| (mod_mul(x, x, n) + c) % n;
        let (mut x, mut y, mut ys) = (0u128, 2u128, 2u128);
        let (mut g, mut r, mut q) = (1u128, 1u64, 1u128);
        let m = 128u64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..m.min(r - k) {
                    y = f(y);
                    q = mod_mul(q, abs_diff(x, y), n);
                }
                g = gcd_u128(q, n);
                k += m;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd_u128(abs_diff(x, ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

fn split_into(n: u128, out: &mut Vec<(u128, u32)>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push((n, 1));
        return;
    }
    let d = pollard_brent(n);
    split_into(d, out);
    split_into(n / d, out);
}

fn trial_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| primes_up_to(TRIAL_LIMIT).into_iter().map(|p| p as u32).collect())
}

/// Prime factorization of `n`, with primes in increasing order.
pub fn factor(n: u128) -> Result<Factorization, ArithError> {
    if n == 0 {
        return Err(ArithError::Zero);
    }
    if n >= 1u128 << 127 {
        return Err(ArithError::TooLarge(n));
    }
    if n <= u64::MAX as u128 {
        let mut out = Vec::new();
        factor_u64_into(n as u64, &mut out);
        let pairs: Vec<(u128, u32)> = out.into_iter().map(|(p, e)| (p as u128, e)).collect();
        return Ok(Factorization::from_pairs(&pairs));
    }
    let mut rest = n;
    let mut factors = Vec::new();
    for &p in trial_primes() {
        let p = p as u128;
        if p * p > rest {
            break;
        }
        if rest % p == 0 {
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            factors.push((p, e));
        }
    }
    if rest > 1 {
        let limit = TRIAL_LIMIT as u128;
        if rest < limit * limit {
            factors.push((rest, 1));
        } else {
            let mut big = Vec::new();
            split_into(rest, &mut big);
            factors.extend(big);
        }
    }
    Ok(Factorization::from_pairs(&factors))
}

/// Factors n ≥ 1 into `out` (primes ascending). Trial division stops once
/// p³ exceeds the cofactor, which then has at most two prime factors.
pub fn factor_u64_into(n: u64, out: &mut Vec<(u64, u32)>) {
    out.clear();
    let mut rest = n;
    let mut reached = false;
    for &p in trial_primes() {
        let p = p as u64;
        if p.saturating_mul(p).saturating_mul(p) > rest {
            reached = true;
            break;
        }
        if rest % p == 0 {
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    if rest == 1 {
        return;
    }
    if !reached || is_prime_u64(rest) {
        if reached {
            out.push((rest, 1));
            return;
        }
        // trial division exhausted below the cube root: split fully
        let mut big = Vec::new();
        split_into(rest as u128, &mut big);
        big.sort_unstable();
        for (p, e) in big {
            match out.last_mut() {
                Some(last) if last.0 == p as u64 => last.1 += e,
                _ => out.push((p as u64, e)),
            }
        }
        return;
    }
    let r = isqrt(rest);
    if r * r == rest {
        out.push((r, 2));
        return;
    }
    let d = if rest % 2 == 0 { 2 } else { pollard_brent(rest as u128) as u64 };
    let (p1, p2) = (d.min(rest / d), d.max(rest / d));
    out.push((p1, 1));
    out.push((p2, 1));
}

/// Möbius function; `moebius(0)` is defined as 0.
pub fn moebius(n: u64) -> i8 {
    if n == 0 {
        return 0;
    }
    factor(n as u128).map(|f| f.moebius()).unwrap_or(0)
}

/// Number of distinct primes `p | k` with `p ≤ z`.
pub fn omega_z(k: u64, z: f64) -> u32 {
    if k == 0 {
        return 0;
    }
    let f = factor(k as u128).expect("k is nonzero");
    f.primes().filter(|&p| (p as f64) <= z).count() as u32
}

/// All `ℓ ≤ bound` whose prime factors lie in `primes`, sorted (1 included).
pub fn divisors_supported_on(primes: &[u64], bound: u64) -> Vec<u64> {
    if bound == 0 {
        return Vec::new();
    }
    let mut ps: Vec<u64> = primes.iter().copied().filter(|&p| p >= 2).collect();
    ps.sort_unstable();
    ps.dedup();
    let mut out = vec![1u64];
    for &p in &ps {
        let len = out.len();
        for i in 0..len {
            let mut v = out[i];
            while let Some(next) = v.checked_mul(p).filter(|&x| x <= bound) {
                out.push(next);
                v = next;
            }
        }
    }
    out.sort_unstable();
    out
}

/// Primes up to and including `n` by a plain sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Smallest prime factor table on `0..=limit`. Entries 0 and 1 hold 0.
#[derive(Debug, Clone)]
pub struct SpfTable {
    limit: u64,
    spf: Vec<u32>,
}

/// Entries per segment when filling the table.
const SEGMENT: u64 = 1 << 18;

impl SpfTable {
    /// Builds the table with no memory cap.
    pub fn new(limit: u64) -> Self {
        Self::with_budget(limit, u64::MAX).expect("unbounded budget")
    }

    /// Builds the table if it fits within `budget` bytes.
    pub fn with_budget(limit: u64, budget: u64) -> Result<Self, ArithError> {
        let entries = limit + 1;
        let bytes = entries.saturating_mul(4);
        if bytes > budget || limit > u32::MAX as u64 {
            return Err(ArithError::Budget { entries, bytes, budget });
        }
        let mut spf = vec![0u32; entries as usize];
        let base = primes_up_to(isqrt(limit));
        let mut lo = 0u64;
        while lo <= limit {
            let hi = (lo + SEGMENT).min(limit + 1);
            fill_segment(&mut spf[lo as usize..hi as usize], lo, &base);
            lo = hi;
        }
        Ok(SpfTable { limit, spf })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Smallest prime factor of `n` for `2 ≤ n ≤ limit`.
    #[inline]
    pub fn spf(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    /// Factorization by repeated lookups; `n` must be in `1..=limit`.
    pub fn factor_into(&self, mut n: u64, out: &mut Vec<(u64, u32)>) {
        out.clear();
        while n > 1 {
            let p = self.spf(n);
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }

    pub fn factor(&self, n: u64) -> Factorization {
        let mut buf = Vec::new();
        self.factor_into(n, &mut buf);
        let pairs: Vec<(u128, u32)> = buf.into_iter().map(|(p, e)| (p as u128, e)).collect();
        Factorization::from_pairs(&pairs)
    }
}

/// Fills `seg[i] = spf(lo + i)` using base primes up to √(lo + len).
pub fn fill_segment(seg: &mut [u32], lo: u64, base: &[u64]) {
    let hi = lo + seg.len() as u64;
    for &p in base {
        if p * p >= hi {
            break;
        }
        let start = (p * p).max(lo.div_ceil(p) * p);
        let mut m = start;
        while m < hi {
            let slot = &mut seg[(m - lo) as usize];
            if *slot == 0 {
                *slot = p as u32;
            }
            m += p;
        }
    }
    for (i, slot) in seg.iter_mut().enumerate() {
        let v = lo + i as u64;
        if *slot == 0 && v >= 2 {
            *slot = v as u32;
        }
    }
}

pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Tabulates a multiplicative function on `1..=n` from its prime-power values.
/// Entry 0 is `one` and carries no meaning.
pub fn multiplicative_table<T, F>(spf: &SpfTable, n: u64, one: T, mut at_prime_power: F) -> Vec<T>
where
    T: Copy + std::ops::Mul<Output = T>,
    F: FnMut(u64, u32) -> T,
{
    assert!(n <= spf.limit(), "table limit below requested range");
    let mut out = vec![one; n as usize + 1];
    for k in 2..=n {
        let p = spf.spf(k);
        let mut rest = k;
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        out[k as usize] = out[rest as usize] * at_prime_power(p, e);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_examples() {
        assert!(factor(1).unwrap().factors().is_empty());
        assert_eq!(factor(360).unwrap().factors(), &[(2, 3), (3, 2), (5, 1)]);
        assert_eq!(factor(1_000_000_007).unwrap().factors(), &[(1_000_000_007, 1)]);
        assert_eq!(factor(0), Err(ArithError::Zero));
    }

    fn trial_factor(mut n: u64) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        let mut p = 2;
        while p * p <= n {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            if e > 0 {
                out.push((p, e));
            }
            p += 1;
        }
        if n > 1 {
            out.push((n, 1));
        }
        out
    }

    #[test]
    fn u64_factoring_matches_trial_division() {
        let mut buf = Vec::new();
        for n in (1..20_000u64).chain((1u64 << 34)..(1u64 << 34) + 2_000) {
            factor_u64_into(n, &mut buf);
            assert_eq!(buf, trial_factor(n), "{n}");
        }
        // products of two primes just above the trial bound, and a square
        for (p, q) in [(1_000_003u64, 1_000_033u64), (1_000_003, 1_000_003)] {
            factor_u64_into(p * q, &mut buf);
            let expect = if p == q { vec![(p, 2)] } else { vec![(p, 1), (q, 1)] };
            assert_eq!(buf, expect);
        }
    }

    #[test]
    fn small_primality_fast_path() {
        let sieve = primes_up_to(200_000);
        let mut it = sieve.iter().peekable();
        for n in 0..200_000u64 {
            let expect = it.peek() == Some(&&n);
            if expect {
                it.next();
            }
            assert_eq!(is_prime_u64(n), expect, "{n}");
        }
        assert!(is_prime_u64(4_294_967_291));
        assert!(!is_prime_u64(4_294_967_297));
    }

    #[test]
    fn factor_large_semiprimes() {
        let f = factor(1470626929934143021).unwrap();
        assert_eq!(f.factors(), &[(1206429347, 1), (1218991343, 1)]);
        // (2^61 - 1)(2^31 - 1)
        let p = (1u128 << 61) - 1;
        let q = (1u128 << 31) - 1;
        assert_eq!(factor(p * q).unwrap().factors(), &[(q, 1), (p, 1)]);
        // a 62-bit prime times two 30-bit primes, product near 2^122
        let a = 4611686018427387847u128;
        assert!(is_prime(a));
        let n = a * 998244353 * 1000000007;
        assert_eq!(factor(n).unwrap().factors(), &[(998244353, 1), (1000000007, 1), (a, 1)]);
    }

    #[test]
    fn miller_rabin_against_trial_division() {
        let small = primes_up_to(100_000);
        let mut idx = 0;
        for n in 0..100_000u64 {
            let expect = idx < small.len() && small[idx] == n;
            if expect {
                idx += 1;
            }
            assert_eq!(is_prime_u64(n), expect, "n = {n}");
        }
        // strong pseudoprime to bases 2..23
        assert!(!is_prime(3_825_123_056_546_413_051));
        assert!(is_prime((1u128 << 89) - 1));
        assert!(!is_prime((1u128 << 67) - 1));
    }

    #[test]
    fn moebius_examples() {
        assert_eq!(moebius(1), 1);
        assert_eq!(moebius(12), 0);
        assert_eq!(moebius(30), -1);
    }

    #[test]
    fn omega_z_examples() {
        assert_eq!(omega_z(60, 4.0), 2);
        assert_eq!(omega_z(60, 100.0), 3);
        assert_eq!(omega_z(1, 10.0), 0);
    }

    #[test]
    fn divisors_supported_examples() {
        assert_eq!(divisors_supported_on(&[2, 3], 18), vec![1, 2, 3, 4, 6, 8, 9, 12, 16, 18]);
        assert_eq!(divisors_supported_on(&[], 100), vec![1]);
        assert_eq!(divisors_supported_on(&[5], 30), vec![1, 5, 25]);
    }

    #[test]
    fn spf_examples() {
        let t = SpfTable::new(100);
        assert_eq!(t.spf(91), 7);
        assert_eq!(t.spf(97), 97);
        assert_eq!(t.spf(4), 2);
    }

    #[test]
    fn spf_segments_match_plain_sieve() {
        let t = SpfTable::new(600_000);
        for n in (2..600_000u64).filter(|n| *n < 5000 || n % 997 == 0 || n % 1009 == 1) {
            let expect = (2..).find(|d| n % d == 0).unwrap();
            assert_eq!(t.spf(n), expect);
        }
    }

    #[test]
    fn spf_budget_is_enforced() {
        assert!(matches!(SpfTable::with_budget(1000, 100), Err(ArithError::Budget { .. })));
    }

    #[test]
    fn crt_and_inverse() {
        assert_eq!(crt_pair(3, 7, 6, 17), 108);
        assert_eq!(mod_inv(3, 7), Some(5));
        assert_eq!(mod_inv(2, 4), None);
    }
}
