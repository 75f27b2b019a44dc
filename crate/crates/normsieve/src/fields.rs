//! Abelian number fields modelled as subfields of Q(ζ_q): a field is the
//! fixed field of a subgroup H ⊆ (Z/q)^×, and everything else (characters,
//! splitting of primes, ideal counts) is read off from that pair.

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::arith::{self, gcd_u64, Factorization};
use crate::cyclo::{CycloInt, Cyclotomic};
use crate::forms::FormSpec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("invalid subgroup: {0}")]
    InvalidSubgroup(String),
    #[error("field degree {0} is below 2")]
    DegreeTooSmall(u64),
    #[error("prime {0} ramifies (divides the conductor)")]
    Ramified(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("expected {expected} arguments, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("character sum at {0} is not a nonnegative integer")]
    NonIntegral(u64),
    #[error("form is reducible over Q")]
    ReducibleForm,
    #[error("construction of the half-degree subfield: {0}")]
    HalfField(String),
}

/// User-facing description of an abelian field: conductor, subgroup and the
/// asserted principal-ideal-domain flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    pub q: u64,
    pub h: Vec<u64>,
    pub pid: bool,
}

impl FieldSpec {
    pub fn new(q: u64, h: &[u64], pid: bool) -> Self {
        FieldSpec { q, h: h.to_vec(), pid }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h: Vec<String> = self.h.iter().map(|x| x.to_string()).collect();
        write!(f, "({}, {{{}}})", self.q, h.join(","))
    }
}

/// How negative form values are treated when deciding norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeNorms {
    /// Decide on |F(s,t)|. Sound for odd degree, where N(−x) = −N(x).
    AssumeOk,
    /// Never count negative values.
    Reject,
}

impl NegativeNorms {
    pub fn default_for(_degree: usize) -> Self {
        NegativeNorms::AssumeOk
    }

    /// Whether the sign question is open for this degree: for even degree a
    /// unit of norm −1 may not exist, and that is not checked here.
    pub fn sign_question_open(degree: usize) -> bool {
        degree % 2 == 0
    }
}

/// Fields of class number one recorded for cross-checking the `pid` flag.
const KNOWN_PID: &[(u64, &[u64])] = &[
    (3, &[1]),
    (4, &[1]),
    (5, &[1]),
    (5, &[1, 4]),
    (7, &[1]),
    (7, &[1, 6]),
    (7, &[1, 2, 4]),
    (8, &[1]),
    (8, &[1, 3]),
    (8, &[1, 7]),
    (9, &[1]),
    (9, &[1, 8]),
    (12, &[1]),
    (12, &[1, 11]),
];

/// `Some(true)` when the field is in the built-in table of class-number-one
/// fields, `None` when unknown.
pub fn known_pid(spec: &FieldSpec) -> Option<bool> {
    let mut h: Vec<u64> = spec.h.iter().map(|x| x % spec.q).collect();
    h.sort_unstable();
    h.dedup();
    KNOWN_PID.iter().any(|(q, hh)| *q == spec.q && *hh == h.as_slice()).then_some(true)
}

/// Ramification index, residue degree and number of primes above p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Splitting {
    pub e: u32,
    pub f: u32,
    pub g: u32,
}

const NONE: u32 = u32::MAX;

/// A Dirichlet character trivial on H, stored as an exponent table over the
/// residues modulo its conductor: χ(k) = ζ_m^table[k mod conductor].
#[derive(Debug, Clone)]
pub struct Character {
    modulus: u64,
    conductor: u64,
    order: u32,
    root_order: u32,
    exponents: Vec<u32>,
    table: Vec<u32>,
}

impl Character {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Values are powers of ζ_m for this m.
    pub fn root_order(&self) -> u32 {
        self.root_order
    }

    /// Exponents on the fixed generators of (Z/q)^×, the sort key of Ĝ.
    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    /// Exponent e with χ(k) = ζ_m^e, or `None` when χ(k) = 0. Evaluation is
    /// through the primitive character.
    #[inline]
    pub fn exp_at(&self, k: u64) -> Option<u32> {
        let e = self.table[(k % self.conductor) as usize];
        (e != NONE).then_some(e)
    }

    pub fn value(&self, k: u64) -> Complex64 {
        match self.exp_at(k) {
            None => Complex64::new(0.0, 0.0),
            Some(e) => Complex64::from_polar(
                1.0,
                2.0 * std::f64::consts::PI * e as f64 / self.root_order as f64,
            ),
        }
    }
}

/// A validated, conductor-normalized abelian field with its precomputed
/// character group and splitting tables.
#[derive(Debug, Clone)]
pub struct Field {
    spec: FieldSpec,
    input_q: u64,
    n: usize,
    gens: Vec<(u64, u32)>,
    dlog: Vec<u32>,
    in_h: Vec<bool>,
    chars: Vec<Character>,
    unit_degree: Vec<u32>,
    ramified: Vec<(u64, Splitting)>,
    cyclo: Cyclotomic,
}

impl Field {
    /// Validates the field data and normalizes it to its true conductor.
    pub fn new(spec: &FieldSpec) -> Result<Self, FieldError> {
        let raw = Field::build(spec)?;
        let conductor = raw.chars.iter().fold(1u64, |acc, c| arith::lcm_u64(acc, c.conductor));
        if conductor == raw.spec.q {
            return Ok(raw);
        }
        let h: Vec<u64> = (1..conductor.max(2))
            .filter(|&x| gcd_u64(x, conductor) == 1)
            .filter(|&x| raw.chars.iter().all(|c| c.exp_at(x) == Some(0)))
            .collect();
        let mut field = Field::build(&FieldSpec { q: conductor, h, pid: spec.pid })?;
        field.input_q = spec.q;
        Ok(field)
    }

    fn build(spec: &FieldSpec) -> Result<Self, FieldError> {
        let q = spec.q;
        if q < 3 {
            return Err(FieldError::DegreeTooSmall(1));
        }
        let (gens, dlog) = unit_group(q);
        let mut in_h = vec![false; q as usize];
        for &x in &spec.h {
            let x = x % q;
            if gcd_u64(x, q) != 1 {
                return Err(FieldError::InvalidSubgroup(format!("{x} is not a unit mod {q}")));
            }
            in_h[x as usize] = true;
        }
        if !in_h[1] {
            return Err(FieldError::InvalidSubgroup("1 is missing".into()));
        }
        let members: Vec<u64> = (0..q).filter(|&x| in_h[x as usize]).collect();
        for &a in &members {
            for &b in &members {
                if !in_h[(a * b % q) as usize] {
                    return Err(FieldError::InvalidSubgroup(format!("{a}·{b} leaves H")));
                }
            }
        }
        let phi: u64 = (1..q).filter(|&x| gcd_u64(x, q) == 1).count() as u64;
        let order_h = members.len() as u64;
        let n = phi / order_h;
        if n < 2 {
            return Err(FieldError::DegreeTooSmall(n));
        }
        let root_order = gens.iter().fold(1u64, |acc, &(_, m)| arith::lcm_u64(acc, m as u64)) as u32;
        let chars = character_table(q, &gens, &dlog, &members, root_order);
        debug_assert_eq!(chars.len() as u64, n);

        let mut unit_degree = vec![0u32; q as usize];
        for x in 1..q {
            if gcd_u64(x, q) != 1 {
                continue;
            }
            let mut y = x;
            let mut f = 1;
            while !in_h[y as usize] {
                y = y * x % q;
                f += 1;
            }
            unit_degree[x as usize] = f;
        }

        let mut h_sorted = members.clone();
        h_sorted.sort_unstable();
        let mut field = Field {
            spec: FieldSpec { q, h: h_sorted, pid: spec.pid },
            input_q: q,
            n: n as usize,
            gens,
            dlog,
            in_h,
            chars,
            unit_degree,
            ramified: Vec::new(),
            cyclo: Cyclotomic::new(root_order as usize),
        };
        let ramified: Vec<(u64, Splitting)> = arith::factor(q as u128)
            .expect("q > 0")
            .primes()
            .map(|p| (p as u64, field.ramified_splitting(p as u64)))
            .collect();
        field.ramified = ramified;
        Ok(field)
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn q(&self) -> u64 {
        self.spec.q
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn pid(&self) -> bool {
        self.spec.pid
    }

    /// Whether the input spec already had minimal conductor.
    pub fn was_minimal(&self) -> bool {
        self.input_q == self.spec.q
    }

    /// Generators of (Z/q)^× with their orders.
    pub fn generators(&self) -> &[(u64, u32)] {
        &self.gens
    }

    pub fn cyclotomic(&self) -> &Cyclotomic {
        &self.cyclo
    }

    /// Ĝ: trivial character first, then lexicographic in the exponents.
    pub fn characters(&self) -> &[Character] {
        &self.chars
    }

    pub fn nontrivial_characters(&self) -> &[Character] {
        &self.chars[1..]
    }

    pub fn in_h(&self, k: u64) -> bool {
        self.in_h[(k % self.spec.q) as usize]
    }

    /// ∏ q(χ) over Ĝ.
    pub fn conductor_discriminant(&self) -> u128 {
        self.chars.iter().map(|c| c.conductor as u128).product()
    }

    /// Exponent vector of a unit on the generators.
    pub fn discrete_log(&self, x: u64) -> Option<&[u32]> {
        let k = self.gens.len();
        let i = (x % self.spec.q) as usize;
        (self.dlog[i * k] != NONE).then(|| &self.dlog[i * k..i * k + k])
    }

    /// Root exponents of the nontrivial characters at p that do not vanish.
    fn nonzero_exps(&self, p: u64) -> Vec<u32> {
        self.nontrivial_characters().iter().filter_map(|c| c.exp_at(p)).collect()
    }

    /// Coefficients h_0..h_ν of ∏ (1 − z_i x)^{-1} over the given roots.
    fn power_series(&self, exps: &[u32], nu: u32) -> Vec<CycloInt> {
        let mut coeffs = vec![self.cyclo.zero(); nu as usize + 1];
        coeffs[0] = self.cyclo.one();
        for &e in exps {
            for j in 1..=nu as usize {
                let shifted = self.cyclo.mul_root(&coeffs[j - 1], e);
                coeffs[j].add_assign(&shifted);
            }
        }
        coeffs
    }

    /// ψ_L(p^ν) exactly.
    pub fn psi_prime_power(&self, p: u64, nu: u32) -> CycloInt {
        let exps = self.nonzero_exps(p);
        self.power_series(&exps, nu).pop().expect("nonempty")
    }

    /// ψ_L(k): the convolution of the nontrivial characters, exactly.
    pub fn psi(&self, k: u64) -> CycloInt {
        assert!(k >= 1, "psi is defined on positive integers");
        let f = arith::factor(k as u128).expect("k ≥ 1");
        let mut acc = self.cyclo.one();
        for &(p, e) in f.factors() {
            acc = self.cyclo.mul(&acc, &self.psi_prime_power(p as u64, e));
        }
        acc
    }

    pub fn psi_complex(&self, k: u64) -> Complex64 {
        self.cyclo.to_complex(&self.psi(k))
    }

    /// ψ_L(p^ν) for ν = 0..=max_nu as floating values.
    pub fn psi_prime_powers_complex(&self, p: u64, max_nu: u32) -> Vec<Complex64> {
        let exps = self.nonzero_exps(p);
        self.power_series(&exps, max_nu).iter().map(|c| self.cyclo.to_complex(c)).collect()
    }

    /// Ψ_L(k_1, …, k_{n−1}) = ∏ χ_ℓ(k_ℓ).
    #[allow(non_snake_case)]
    pub fn Psi(&self, ks: &[u64]) -> Result<CycloInt, FieldError> {
        if ks.len() != self.n - 1 {
            return Err(FieldError::Arity { expected: self.n - 1, got: ks.len() });
        }
        let mut total = 0u32;
        for (chi, &k) in self.nontrivial_characters().iter().zip(ks) {
            match chi.exp_at(k) {
                None => return Ok(self.cyclo.zero()),
                Some(e) => total += e,
            }
        }
        Ok(self.cyclo.root(total))
    }

    /// r_L(p^ν) = Σ_{j ≤ ν} ψ_L(p^j), as an exact integer.
    pub fn r_prime_power(&self, p: u64, nu: u32) -> Result<u64, FieldError> {
        let mut exps = self.nonzero_exps(p);
        exps.push(0);
        let top = self.power_series(&exps, nu).pop().expect("nonempty");
        match self.cyclo.as_integer(&top) {
            Some(v) if v >= 0 => Ok(v as u64),
            _ => Err(FieldError::NonIntegral(p.pow(nu))),
        }
    }

    /// Number of integral ideals of norm k, from the character sum.
    pub fn r_l(&self, k: u64) -> Result<u64, FieldError> {
        assert!(k >= 1, "r_L is defined on positive integers");
        let f = arith::factor(k as u128).expect("k ≥ 1");
        self.r_l_factored(&f)
    }

    pub fn r_l_factored(&self, k: &Factorization) -> Result<u64, FieldError> {
        let mut acc = 1u64;
        for &(p, e) in k.factors() {
            acc *= self.r_prime_power(p as u64, e)?;
            if acc == 0 {
                break;
            }
        }
        Ok(acc)
    }

    /// r_L(p^ν) from splitting data: [f | ν]·C(g − 1 + ν/f, g − 1).
    pub fn ideal_count_prime_power(&self, p: u64, nu: u32) -> u64 {
        let s = self.splitting(p);
        if nu % s.f != 0 {
            return 0;
        }
        binomial((s.g - 1 + nu / s.f) as u64, (s.g - 1) as u64)
    }

    /// Splitting-completely test for an unramified prime.
    pub fn is_norm_prime(&self, p: u64) -> Result<bool, FieldError> {
        if self.spec.q % p == 0 {
            return Err(FieldError::Ramified(p));
        }
        Ok(self.in_h(p))
    }

    /// (1/n)·Σ_χ χ(p), the character detector for splitting completely.
    pub fn detector_sum(&self, p: u64) -> Complex64 {
        let s: Complex64 = self.chars.iter().map(|c| c.value(p)).sum();
        s / self.n as f64
    }

    /// (e, f, g) for a prime p; `p` must be prime.
    pub fn splitting_data(&self, p: u64) -> Result<Splitting, FieldError> {
        if !arith::is_prime_u64(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(self.splitting(p))
    }

    /// (e, f, g) without the primality check.
    #[inline]
    pub fn splitting(&self, p: u64) -> Splitting {
        let q = self.spec.q;
        if q % p == 0 {
            return self.ramified.iter().find(|(r, _)| *r == p).expect("ramified prime listed").1;
        }
        let f = self.unit_degree[(p % q) as usize];
        Splitting { e: 1, f, g: self.n as u32 / f }
    }

    /// Residue degree f_p.
    #[inline]
    pub fn residue_degree(&self, p: u64) -> u32 {
        self.splitting(p).f
    }

    fn ramified_splitting(&self, p: u64) -> Splitting {
        let q = self.spec.q;
        let mut pa = 1;
        while q % (pa * p) == 0 {
            pa *= p;
        }
        let m = q / pa;
        // K_p·H where K_p = ker((Z/q)^× → (Z/m)^×)
        let mut inertia_h = vec![false; q as usize];
        let mut kp_h = BTreeSet::new();
        for x in (1..q).filter(|&x| gcd_u64(x, q) == 1 && x % m == 1 % m) {
            for h in 0..q {
                if self.in_h[h as usize] {
                    kp_h.insert(x * h % q);
                }
            }
        }
        for &y in &kp_h {
            inertia_h[y as usize] = true;
        }
        let order_h = self.in_h.iter().filter(|&&b| b).count() as u64;
        let e = (kp_h.len() as u64 / order_h) as u32;
        let frob = if m == 1 { 1 } else { arith::crt_pair(p % m, m, 1 % pa, pa) };
        let mut y = frob % q;
        let mut f = 1;
        while !inertia_h[y as usize] {
            y = y * frob % q;
            f += 1;
        }
        let g = self.n as u32 / (e * f);
        Splitting { e, f, g }
    }

    /// ∏_{p | k} 1[e_p·f_p divides v_p(k)].
    pub fn varpi(&self, k: &Factorization) -> u8 {
        k.factors().iter().all(|&(p, v)| {
            let s = self.splitting(p as u64);
            v % (s.e * s.f) == 0
        }) as u8
    }

    /// Whether k is the norm of an integral ideal: f_p | v_p(k) for all p | k.
    pub fn is_ideal_norm(&self, k: &Factorization) -> bool {
        k.factors().iter().all(|&(p, v)| v % self.residue_degree(p as u64) == 0)
    }

    /// r = [L ∩ K : Q] for K = Q(√disc F), the number of factors of F over L.
    pub fn factor_count_over(&self, form: &FormSpec) -> Result<u32, FieldError> {
        Ok(if self.quadratic_character(form)?.is_some() { 2 } else { 1 })
    }

    /// Index in Ĝ of the quadratic character cutting out K, if K ⊂ L.
    pub fn quadratic_character(&self, form: &FormSpec) -> Result<Option<usize>, FieldError> {
        let d = fundamental_discriminant(form.disc()).ok_or(FieldError::ReducibleForm)?;
        let q = self.spec.q;
        if q % d.unsigned_abs() != 0 {
            return Ok(None);
        }
        let trivial_on_h = (1..q).filter(|&h| self.in_h[h as usize]).all(|h| kronecker(d, h) == 1);
        if !trivial_on_h {
            return Ok(None);
        }
        let idx = self.chars.iter().position(|c| {
            c.order == 2
                && (1..q)
                    .filter(|&x| gcd_u64(x, q) == 1)
                    .all(|x| (c.exp_at(x) == Some(0)) == (kronecker(d, x) == 1))
        });
        Ok(idx)
    }

    /// The degree-n/2 subfield L₀ ⊂ L with Ĝ = Ĝ₀ ⊔ χ₀Ĝ₀, where χ₀ cuts out
    /// K = Q(√disc F). Among admissible index-two subgroups Ĝ₀ = ann(σ) the
    /// one with the lexicographically smallest sorted exponent list is taken.
    pub fn construct_l0(&self, form: &FormSpec) -> Result<Field, FieldError> {
        let chi0 = self
            .quadratic_character(form)?
            .ok_or_else(|| FieldError::HalfField("F is irreducible over L".into()))?;
        if self.n < 3 {
            return Err(FieldError::HalfField(format!("degree {} is below 3", self.n)));
        }
        let q = self.spec.q;
        let half = self.cyclo.order() as u32 / 2;
        let mut best: Option<Vec<usize>> = None;
        for sigma in 1..q {
            if gcd_u64(sigma, q) != 1 || self.in_h(sigma) || !self.in_h(sigma * sigma % q) {
                continue;
            }
            if self.chars[chi0].exp_at(sigma) != Some(half) {
                continue;
            }
            let kernel: Vec<usize> =
                (0..self.n).filter(|&i| self.chars[i].exp_at(sigma) == Some(0)).collect();
            let better = match &best {
                None => true,
                Some(b) => {
                    let key = |v: &Vec<usize>| -> Vec<Vec<u32>> {
                        let mut ks: Vec<Vec<u32>> = v.iter().map(|&i| self.chars[i].exponents.clone()).collect();
                        ks.sort();
                        ks
                    };
                    key(&kernel) < key(b)
                }
            };
            if better {
                best = Some(kernel);
            }
        }
        let sub = best.ok_or_else(|| {
            FieldError::HalfField(
                "the quadratic character is a square in Ĝ, so no index-two subgroup avoids it".into(),
            )
        })?;
        let h0: Vec<u64> = (1..q)
            .filter(|&x| gcd_u64(x, q) == 1)
            .filter(|&x| sub.iter().all(|&i| self.chars[i].exp_at(x) == Some(0)))
            .collect();
        Field::new(&FieldSpec { q, h: h0, pid: false })
    }
}

/// Generators of (Z/q)^× with orders, and the flattened discrete-log table
/// (row per residue, `NONE` rows for non-units).
fn unit_group(q: u64) -> (Vec<(u64, u32)>, Vec<u32>) {
    let f = arith::factor(q as u128).expect("q ≥ 1");
    let mut local: Vec<(u64, u64, u32)> = Vec::new(); // (generator mod p^a, p^a, order)
    for &(p, a) in f.factors() {
        let (p, a) = (p as u64, a);
        let pa = p.pow(a);
        if p == 2 {
            if a >= 2 {
                local.push((pa - 1, pa, 2));
            }
            if a >= 3 {
                local.push((5, pa, 1 << (a - 2)));
            }
        } else {
            let g = primitive_root_prime_power(p, a);
            local.push((g, pa, ((p - 1) * p.pow(a - 1)) as u32));
        }
    }
    let gens: Vec<(u64, u32)> = local
        .iter()
        .map(|&(g, pa, ord)| {
            let other = q / pa;
            let lifted = if other == 1 { g % q } else { arith::crt_pair(g, pa, 1, other) };
            (lifted, ord)
        })
        .collect();
    let k = gens.len();
    let mut dlog = vec![NONE; q as usize * k];
    let mut idx = vec![0u32; k];
    let mut x = 1 % q;
    loop {
        dlog[x as usize * k..x as usize * k + k].copy_from_slice(&idx);
        // odometer, last generator fastest
        let mut i = k;
        loop {
            if i == 0 {
                return (gens, dlog);
            }
            i -= 1;
            idx[i] += 1;
            x = x * gens[i].0 % q;
            if idx[i] < gens[i].1 {
                break;
            }
            idx[i] = 0; // x has wrapped back since g^ord = 1
        }
    }
}

fn primitive_root_prime_power(p: u64, a: u32) -> u64 {
    let phi = p - 1;
    let fac = arith::factor(phi as u128).expect("p ≥ 3");
    let g = (2..p)
        .find(|&g| fac.primes().all(|r| arith::mod_pow(g as u128, (phi / r as u64) as u128, p as u128) != 1))
        .expect("prime has a primitive root");
    if a == 1 {
        return g;
    }
    let p2 = (p * p) as u128;
    if arith::mod_pow(g as u128, phi as u128, p2) == 1 {
        g + p
    } else {
        g
    }
}

fn character_table(q: u64, gens: &[(u64, u32)], dlog: &[u32], h: &[u64], root_order: u32) -> Vec<Character> {
    let k = gens.len();
    let mut out = Vec::new();
    let mut c = vec![0u32; k];
    let scale: Vec<u32> = gens.iter().map(|&(_, m)| root_order / m).collect();
    let exp_of = |c: &[u32], x: u64| -> u32 {
        let row = &dlog[x as usize * k..x as usize * k + k];
        let mut e = 0u64;
        for i in 0..k {
            e += c[i] as u64 * row[i] as u64 * scale[i] as u64;
        }
        (e % root_order as u64) as u32
    };
    loop {
        if h.iter().all(|&x| exp_of(&c, x) == 0) {
            let full: Vec<u32> =
                (0..q).map(|x| if gcd_u64(x, q) == 1 { exp_of(&c, x) } else { NONE }).collect();
            out.push(finish_character(q, &c, &full, root_order, gens));
        }
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            c[i] += 1;
            if c[i] < gens[i].1 {
                break;
            }
            c[i] = 0;
        }
    }
}

fn finish_character(q: u64, c: &[u32], full: &[u32], root_order: u32, gens: &[(u64, u32)]) -> Character {
    let order = c
        .iter()
        .zip(gens)
        .map(|(&ci, &(_, m))| (m / gcd_u64(ci as u64, m as u64) as u32) as u64)
        .fold(1u64, arith::lcm_u64) as u32;
    let conductor = (1..=q)
        .filter(|d| q % d == 0)
        .find(|&d| (0..q / d).map(|j| 1 + j * d).filter(|&x| gcd_u64(x % q, q) == 1).all(|x| full[(x % q) as usize] == 0))
        .expect("q itself qualifies");
    let table: Vec<u32> = (0..conductor)
        .map(|x| {
            if gcd_u64(x, conductor) != 1 {
                return NONE;
            }
            let mut y = x;
            while gcd_u64(y % q, q) != 1 {
                y += conductor;
            }
            full[(y % q) as usize]
        })
        .collect();
    let table = if conductor == 1 { vec![0] } else { table };
    Character { modulus: q, conductor, order, root_order, exponents: c.to_vec(), table }
}

pub fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Fundamental discriminant of Q(√d), or `None` when d is a square.
pub fn fundamental_discriminant(d: i64) -> Option<i64> {
    if d == 0 {
        return None;
    }
    let f = arith::factor(d.unsigned_abs() as u128).expect("nonzero");
    let core: i64 = f.factors().iter().filter(|&&(_, e)| e % 2 == 1).map(|&(p, _)| p as i64).product();
    let core = core * d.signum();
    if core == 1 {
        return None;
    }
    Some(if core.rem_euclid(4) == 1 { core } else { 4 * core })
}

/// Kronecker symbol (d / n) for n ≥ 1.
pub fn kronecker(d: i64, n: u64) -> i32 {
    let mut n = n;
    let mut result = 1i32;
    let tz = n.trailing_zeros();
    if tz > 0 {
        if d % 2 == 0 {
            return 0;
        }
        let r = d.rem_euclid(8);
        if tz % 2 == 1 && (r == 3 || r == 5) {
            result = -result;
        }
        n >>= tz;
    }
    // Jacobi symbol (d / n) for odd n
    let mut a = d.rem_euclid(n as i64) as u64;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(q: u64, h: &[u64]) -> Field {
        Field::new(&FieldSpec::new(q, h, true)).unwrap()
    }

    fn int(f: &Field, z: &CycloInt) -> i64 {
        f.cyclotomic().as_integer(z).expect("integral")
    }

    #[test]
    fn character_groups() {
        let g4 = field(4, &[1]);
        assert_eq!(g4.characters().len(), 2);
        assert!(g4.characters()[0].is_trivial());
        assert!((g4.characters()[1].value(3) - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

        let g9 = field(9, &[1, 8]);
        let mut orders: Vec<u32> = g9.characters().iter().map(|c| c.order()).collect();
        orders.sort();
        assert_eq!(orders, vec![1, 3, 3]);

        let g8 = field(8, &[1]);
        assert_eq!(g8.characters().len(), 4);
        assert!(g8.characters().iter().all(|c| c.order() <= 2));
    }

    #[test]
    fn discriminants() {
        assert_eq!(field(4, &[1]).conductor_discriminant(), 4);
        assert_eq!(field(9, &[1, 8]).conductor_discriminant(), 81);
        assert_eq!(field(8, &[1]).conductor_discriminant(), 256);
    }

    #[test]
    fn psi_examples() {
        let g4 = field(4, &[1]);
        assert_eq!(int(&g4, &g4.psi(3)), -1);
        let g9 = field(9, &[1, 8]);
        assert_eq!(int(&g9, &g9.psi(17)), 2);
        assert_eq!(int(&g9, &g9.psi(49)), 0);
    }

    #[test]
    fn big_psi_examples() {
        let g9 = field(9, &[1, 8]);
        assert_eq!(int(&g9, &g9.Psi(&[7, 7]).unwrap()), 1);
        assert_eq!(g9.Psi(&[7]), Err(FieldError::Arity { expected: 2, got: 1 }));
        assert_eq!(int(&g9, &g9.Psi(&[1, 1]).unwrap()), 1);
        let g4 = field(4, &[1]);
        assert_eq!(int(&g4, &g4.Psi(&[5]).unwrap()), 1);
    }

    #[test]
    fn ideal_counts() {
        assert_eq!(field(4, &[1]).r_l(5).unwrap(), 2);
        let g9 = field(9, &[1, 8]);
        assert_eq!(g9.r_l(7).unwrap(), 0);
        assert_eq!(g9.r_l(17).unwrap(), 3);
    }

    #[test]
    fn norm_primes() {
        let g9 = field(9, &[1, 8]);
        assert!(g9.is_norm_prime(17).unwrap());
        assert!(!g9.is_norm_prime(7).unwrap());
        assert_eq!(g9.is_norm_prime(3), Err(FieldError::Ramified(3)));
        assert!(field(4, &[1]).is_norm_prime(5).unwrap());
    }

    #[test]
    fn splitting_examples() {
        let g9 = field(9, &[1, 8]);
        assert_eq!(g9.splitting_data(3).unwrap(), Splitting { e: 3, f: 1, g: 1 });
        assert_eq!(g9.splitting_data(17).unwrap(), Splitting { e: 1, f: 1, g: 3 });
        assert_eq!(g9.splitting_data(7).unwrap(), Splitting { e: 1, f: 3, g: 1 });
        assert_eq!(g9.splitting_data(9), Err(FieldError::NotPrime(9)));
    }

    #[test]
    fn partially_ramified_splitting() {
        // Q(ζ15): 3 has e = 2 and f = ord of 3 mod 5 = 4
        let g15 = field(15, &[1]);
        assert_eq!(g15.splitting(3), Splitting { e: 2, f: 4, g: 1 });
        assert_eq!(g15.splitting(5), Splitting { e: 4, f: 2, g: 1 });
        assert_eq!(g15.r_l(3).unwrap(), 0);
        assert_eq!(g15.r_l(81).unwrap(), 1);
    }

    #[test]
    fn varpi_and_ideal_norms() {
        let g4 = field(4, &[1]);
        let f = |k: u128| arith::factor(k).unwrap();
        assert_eq!(g4.varpi(&f(9)), 1);
        assert_eq!(g4.varpi(&f(3)), 0);
        assert_eq!(g4.varpi(&f(1)), 1);
        assert!(g4.is_ideal_norm(&f(9)));
        assert!(!g4.is_ideal_norm(&f(3)));
        assert!(g4.is_ideal_norm(&f(2)));
    }

    #[test]
    fn factor_counts() {
        let f1 = FormSpec::new(1, 0, -2).unwrap();
        let f2 = FormSpec::new(1, 0, 1).unwrap();
        assert_eq!(field(9, &[1, 8]).factor_count_over(&f1).unwrap(), 1);
        assert_eq!(field(8, &[1]).factor_count_over(&f1).unwrap(), 2);
        assert_eq!(field(4, &[1]).factor_count_over(&f2).unwrap(), 2);
    }

    #[test]
    fn half_field_of_zeta8() {
        let g8 = field(8, &[1]);
        let f = FormSpec::new(1, 0, -2).unwrap();
        let l0 = g8.construct_l0(&f).unwrap();
        assert_eq!((l0.q(), l0.spec().h.clone()), (4, vec![1]));
        assert_eq!(l0.degree(), 2);
        assert!(field(4, &[1]).construct_l0(&FormSpec::new(1, 0, 1).unwrap()).is_err());
    }

    #[test]
    fn conductor_normalization() {
        // (Z/8)^× / {1,5} cuts out Q(i)
        let f = field(8, &[1, 5]);
        assert_eq!(f.q(), 4);
        assert_eq!(f.spec().h, vec![1]);
        assert!(!f.was_minimal());
    }

    #[test]
    fn invalid_subgroups() {
        assert!(Field::new(&FieldSpec::new(9, &[1, 2], true)).is_err());
        assert!(Field::new(&FieldSpec::new(9, &[1, 3], true)).is_err());
        assert!(matches!(
            Field::new(&FieldSpec::new(4, &[1, 3], true)),
            Err(FieldError::DegreeTooSmall(1))
        ));
    }

    #[test]
    fn kronecker_symbols() {
        assert_eq!(kronecker(8, 7), 1);
        assert_eq!(kronecker(8, 3), -1);
        assert_eq!(kronecker(-4, 3), -1);
        assert_eq!(kronecker(-4, 5), 1);
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(-3, 2), -1);
        assert_eq!(fundamental_discriminant(8), Some(8));
        assert_eq!(fundamental_discriminant(-4), Some(-4));
        assert_eq!(fundamental_discriminant(12), Some(12));
        assert_eq!(fundamental_discriminant(-3 * 4), Some(-3));
        assert_eq!(fundamental_discriminant(9), None);
    }
}
