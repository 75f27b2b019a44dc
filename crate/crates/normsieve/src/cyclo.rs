//! Exact arithmetic in the cyclotomic integers Z[ζ_m].
//!
//! Elements are stored as coefficient vectors modulo x^m − 1; equality with
//! a rational integer is decided after reduction modulo Φ_m.

use num_complex::Complex64;

/// Shared data for one root-of-unity order `m`.
#[derive(Debug, Clone)]
pub struct Cyclotomic {
    m: usize,
    /// Φ_m, lowest degree first, monic.
    phi: Vec<i64>,
    roots: Vec<Complex64>,
}

impl Cyclotomic {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1);
        let roots = (0..m)
            .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / m as f64))
            .collect();
        Cyclotomic { m, phi: cyclotomic_poly(m), roots }
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn zero(&self) -> CycloInt {
        CycloInt { coeffs: vec![0; self.m] }
    }

    pub fn one(&self) -> CycloInt {
        self.root(0)
    }

    pub fn integer(&self, v: i64) -> CycloInt {
        let mut z = self.zero();
        z.coeffs[0] = v;
        z
    }

    /// ζ_m^e.
    pub fn root(&self, e: u32) -> CycloInt {
        let mut z = self.zero();
        z.coeffs[e as usize % self.m] = 1;
        z
    }

    pub fn root_complex(&self, e: u32) -> Complex64 {
        self.roots[e as usize % self.m]
    }

    pub fn mul(&self, a: &CycloInt, b: &CycloInt) -> CycloInt {
        let mut out = self.zero();
        for (i, &x) in a.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.coeffs.iter().enumerate() {
                if y != 0 {
                    out.coeffs[(i + j) % self.m] += x * y;
                }
            }
        }
        out
    }

    /// Multiplies by ζ_m^e (a rotation of coefficients).
    pub fn mul_root(&self, a: &CycloInt, e: u32) -> CycloInt {
        let mut out = self.zero();
        let e = e as usize % self.m;
        for (i, &x) in a.coeffs.iter().enumerate() {
            out.coeffs[(i + e) % self.m] = x;
        }
        out
    }

    pub fn to_complex(&self, a: &CycloInt) -> Complex64 {
        a.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(j, &c)| self.roots[j] * c as f64)
            .sum()
    }

    /// Canonical representative modulo Φ_m (degree below φ(m)).
    pub fn reduce(&self, a: &CycloInt) -> Vec<i64> {
        let mut r = a.coeffs.clone();
        let d = self.phi.len() - 1;
        for top in (d..r.len()).rev() {
            let lead = r[top];
            if lead == 0 {
                continue;
            }
            for (k, &c) in self.phi.iter().enumerate() {
                r[top - d + k] -= lead * c;
            }
        }
        r.truncate(d.max(1));
        r
    }

    /// The rational integer equal to `a`, if `a` is one.
    pub fn as_integer(&self, a: &CycloInt) -> Option<i64> {
        let r = self.reduce(a);
        r[1..].iter().all(|&c| c == 0).then_some(r[0])
    }
}

/// An element of Z[ζ_m]; interpret only through its [`Cyclotomic`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycloInt {
    coeffs: Vec<i64>,
}

impl CycloInt {
    pub fn add_assign(&mut self, other: &CycloInt) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += *b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}

fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let mut quot = vec![0i64; num.len() - dd];
    for i in (0..quot.len()).rev() {
        let c = rem[i + dd] / den[dd];
        quot[i] = c;
        for (k, &d) in den.iter().enumerate() {
            rem[i + k] -= c * d;
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0));
    quot
}

/// Φ_m with integer coefficients, lowest degree first.
pub fn cyclotomic_poly(m: usize) -> Vec<i64> {
    let mut num = vec![0i64; m + 1];
    num[0] = -1;
    num[m] = 1;
    for d in 1..m {
        if m % d == 0 {
            num = poly_div_exact(&num, &cyclotomic_poly(d));
        }
    }
    num
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cyclotomic_polys() {
        assert_eq!(cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(cyclotomic_poly(3), vec![1, 1, 1]);
        assert_eq!(cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn cube_roots_sum_to_zero() {
        let c = Cyclotomic::new(6);
        let mut s = c.one();
        s.add_assign(&c.root(2));
        s.add_assign(&c.root(4));
        assert_eq!(c.as_integer(&s), Some(0));
        let w = c.root(2);
        assert_eq!(c.as_integer(&c.mul(&w, &c.root(4))), Some(1));
        assert_eq!(c.as_integer(&w), None);
    }
}
