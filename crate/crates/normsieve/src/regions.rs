//! Superlevel sets R(B,z) = {(s,t) ∈ [−B,B]² : z ≤ |F(s,t)|} and their areas.

use thiserror::Error;

use crate::forms::FormSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("volume difference needs 0 < z1 < z2, got z1 = {z1}, z2 = {z2}")]
    BadInterval { z1: f64, z2: f64 },
}

/// R(B,z) for a fixed form.
#[derive(Debug, Clone, Copy)]
pub struct Region<'a> {
    pub form: &'a FormSpec,
    pub b: f64,
    pub z: f64,
}

impl<'a> Region<'a> {
    pub fn new(form: &'a FormSpec, b: f64, z: f64) -> Self {
        Region { form, b, z }
    }

    pub fn volume(&self) -> f64 {
        vol_region(self.form, self.b, self.z)
    }

    pub fn contains(&self, s: f64, t: f64) -> bool {
        s.abs() <= self.b && t.abs() <= self.b && self.form.eval_f64(s, t).abs() >= self.z
    }
}

/// Area of R(B,z).
pub fn vol_region(form: &FormSpec, b: f64, z: f64) -> f64 {
    let full = 4.0 * b * b;
    if z <= 0.0 {
        return full;
    }
    if z > form.b_f() * b * b {
        return 0.0;
    }
    (full - sublevel_area(form, b, z)).max(0.0)
}

/// Δvol(B, z1, z2) = vol R(B,z1) − vol R(B,z2), the area of z1 ≤ |F| < z2.
pub fn delta_vol(form: &FormSpec, b: f64, z1: f64, z2: f64) -> Result<f64, RegionError> {
    if !(z1 > 0.0 && z1 < z2) {
        return Err(RegionError::BadInterval { z1, z2 });
    }
    Ok((sublevel_area(form, b, z2) - sublevel_area(form, b, z1)).max(0.0))
}

/// Area of {(s,t) ∈ R² : |F(s,t)| < 1} for a definite form; `None` otherwise.
pub fn unit_sublevel_area(form: &FormSpec) -> Option<f64> {
    form.is_definite().then(|| 2.0 * std::f64::consts::PI / (-(form.disc() as f64)).sqrt())
}

/// Area of {(s,t) ∈ [−B,B]² : |F(s,t)| < z}.
pub fn sublevel_area(form: &FormSpec, b: f64, z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    let (a, bb, c) = form.coefficients();
    let (a, bb, c) = (a as f64, bb as f64, c as f64);
    let section = |s: f64| section_length(c, bb * s, a * s * s, z, b);

    // Section length is smooth except where a root of F(s,·) = ±z is born
    // or crosses t = ±B.
    let mut cuts = vec![-b, b];
    let disc = bb * bb - 4.0 * a * c;
    for sign in [1.0, -1.0] {
        let r2 = -4.0 * c * sign * z / disc;
        if r2 > 0.0 {
            cuts.push(r2.sqrt());
            cuts.push(-r2.sqrt());
        }
        for tb in [b, -b] {
            // a s² + bb·tb·s + c tb² − sign·z = 0
            for r in real_roots(a, bb * tb, c * tb * tb - sign * z) {
                cuts.push(r);
            }
        }
    }
    cuts.retain(|x| x.is_finite() && x.abs() <= b);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * b);

    let tol = 1e-10 * b * b;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        // s = lo + (hi−lo)(1−cos θ)/2 removes square-root endpoint behaviour
        let half = 0.5 * (hi - lo);
        let g = |th: f64| section(lo + half * (1.0 - th.cos())) * half * th.sin();
        total += adaptive_simpson(&g, 0.0, std::f64::consts::PI, tol / cuts.len() as f64, 40);
    }
    total
}

/// Length of {t ∈ [−B,B] : |c t² + β t + γ| < z}.
fn section_length(c: f64, beta: f64, gamma: f64, z: f64, b: f64) -> f64 {
    // normalise to a positive leading coefficient; |g| is unchanged
    let (c, beta, gamma) = if c < 0.0 { (-c, -beta, -gamma) } else { (c, beta, gamma) };
    let clip = |lo: f64, hi: f64| (hi.min(b) - lo.max(-b)).max(0.0);
    let below = |v: f64| match real_roots(c, beta, gamma - v).as_slice() {
        [r1, r2] => clip(*r1, *r2),
        _ => 0.0,
    };
    // {g < z} is an interval containing the interval {g ≤ −z}
    (below(z) - below(-z)).max(0.0)
}

/// Real roots of a x² + b x + c (a ≠ 0), ascending, via the stable formula.
fn real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let d = b * b - 4.0 * a * c;
    if d < 0.0 {
        return Vec::new();
    }
    let sgn = if b >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (b + sgn * d.sqrt());
    let (r1, r2) = if q == 0.0 {
        (0.0, 0.0)
    } else {
        (q / a, c / q)
    };
    if r1 <= r2 {
        vec![r1, r2]
    } else {
        vec![r2, r1]
    }
}

fn adaptive_simpson<G: Fn(f64) -> f64>(g: &G, lo: f64, hi: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (lo + hi);
    let (flo, fmid, fhi) = (g(lo), g(mid), g(hi));
    let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    simpson_step(g, lo, hi, flo, fmid, fhi, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<G: Fn(f64) -> f64>(
    g: &G,
    lo: f64,
    hi: f64,
    flo: f64,
    fmid: f64,
    fhi: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let mid = 0.5 * (lo + hi);
    let (lm, rm) = (0.5 * (lo + mid), 0.5 * (mid + hi));
    let (flm, frm) = (g(lm), g(rm));
    let left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    let right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    let err = left + right - whole;
    if depth == 0 || (err.abs() <= 15.0 * tol && depth < 36) {
        return left + right + err / 15.0;
    }
    simpson_step(g, lo, mid, flo, flm, fmid, left, 0.5 * tol, depth - 1)
        + simpson_step(g, mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth - 1)
}
