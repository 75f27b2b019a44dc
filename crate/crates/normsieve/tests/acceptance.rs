//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use normsieve::arith::{factor, primes_up_to};
use normsieve::engine::{
    asymptotic_fit, chebotarev_sum, count_profile, factor_stream, loglog_slope, nt_product, CongruenceClass, Strategy,
    SweepConfig,
};
use normsieve::fields::{Field, FieldSpec};
use normsieve::forms::{compute_w, default_w0_min, find_base_point, FormSpec};
use normsieve::lattices::{lambda_star_count, lambda_star_estimate};
use normsieve::series::{c_fl, frak_s, mertens_rho, mertens_twisted, sigma_k1, u_fl, LocalFactorFunction};
use normsieve::sieve::{beta_weights, check_weights, fundamental_lemma_check, Sign};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn cubic() -> Field {
    Field::new(&FieldSpec::new(9, &[1, 8], true)).unwrap()
}

fn eighth() -> Field {
    Field::new(&FieldSpec::new(8, &[1], true)).unwrap()
}

fn gaussian() -> Field {
    Field::new(&FieldSpec::new(4, &[1], true)).unwrap()
}

fn pell() -> FormSpec {
    FormSpec::new(1, 0, -2).unwrap()
}

fn within(elapsed: Duration, budget_s: f64) -> bool {
    elapsed.as_secs_f64() < budget_s
}

fn ideal_counts_match_two_squares() -> Outcome {
    let start = Instant::now();
    let l = gaussian();
    let mut reps = vec![0u64; 10_001];
    for a in -100i64..=100 {
        for b in -100i64..=100 {
            let k = (a * a + b * b) as usize;
            if (1..=10_000).contains(&k) {
                reps[k] += 1;
            }
        }
    }
    let bad: Vec<u64> = (1..=10_000u64).filter(|&k| 4 * l.r_l(k).unwrap() != reps[k as usize]).collect();
    let t = start.elapsed();
    outcome(bad.is_empty() && within(t, 5.0), format!("mismatches {} over k ≤ 10^4, {t:.2?} (budget 5 s)", bad.len()))
}

fn norm_primes_of_cubic_field() -> Outcome {
    let start = Instant::now();
    let l = cubic();
    let mut bad = 0;
    let mut checked = 0;
    for p in primes_up_to(10_000).into_iter().filter(|&p| p != 3) {
        let norm = l.is_norm_prime(p).unwrap();
        let congruence = p % 9 == 1 || p % 9 == 8;
        let detector = l.detector_sum(p);
        let agrees = (detector.re - norm as u8 as f64).abs() < 1e-9 && detector.im.abs() < 1e-9;
        bad += (norm != congruence || !agrees) as usize;
        checked += 1;
    }
    let t = start.elapsed();
    outcome(bad == 0 && within(t, 1.0), format!("{checked} primes, {bad} disagreements, {t:.2?} (budget 1 s)"))
}

fn root_count_suite() -> Outcome {
    let start = Instant::now();
    let scan = |f: &FormSpec, k: u64| (0..k).filter(|&x| f.eval_mod(x, k) == 0).count() as u64;
    let mut bad = Vec::new();
    for f in [pell(), FormSpec::new(1, 0, 1).unwrap()] {
        for p in primes_up_to(200) {
            let rho_p = scan(&f, p);
            if f.bad_part() % p != 0 {
                for nu in 1..=3 {
                    if scan(&f, p.pow(nu)) != rho_p || f.rho_minus_pp(p, nu).unwrap() != rho_p {
                        bad.push(format!("{f}: ρ⁻({p}^{nu})"));
                    }
                }
            }
            if (2 * f.disc()).rem_euclid(p as i64) != 0 {
                let pairs = (0..p as i64)
                    .flat_map(|x| (0..p as i64).map(move |y| (x, y)))
                    .filter(|&(x, y)| f.eval(x, y).rem_euclid(p as i128) == 0)
                    .count() as u64;
                if pairs != 1 + (p - 1) * rho_p || f.rho_full(p).unwrap() != pairs {
                    bad.push(format!("{f}: ρ({p})"));
                }
            }
        }
    }
    let t = start.elapsed();
    outcome(bad.is_empty() && within(t, 10.0), format!("failures {bad:?}, {t:.2?} (budget 10 s)"))
}

fn weight_axioms() -> Outcome {
    let start = Instant::now();
    let z: f64 = 30.0;
    let mut report = Vec::new();
    let mut pass = true;
    for sign in [Sign::Plus, Sign::Minus] {
        let w = beta_weights(z.powi(6), 1.0, sign, z);
        let r = check_weights(&w, 100_000);
        pass &= r.is_ok();
        report.push(format!("{sign:?}: {} weights, {r:?}", w.len()));
    }
    let t = start.elapsed();
    outcome(pass && within(t, 10.0), format!("{}, {t:.2?} (budget 10 s)", report.join("; ")))
}

fn fundamental_lemma_ratios() -> Outcome {
    let start = Instant::now();
    let z: f64 = 30.0;
    let plus = beta_weights(z.powi(6), 1.0, Sign::Plus, z);
    let minus = beta_weights(z.powi(6), 1.0, Sign::Minus, z);
    let (lo, hi) = fundamental_lemma_check(&|p| 1.0 / p as f64, &plus, &minus, z).unwrap();
    let t = start.elapsed();
    let pass = (0.95..=1.05).contains(&lo) && (0.95..=1.05).contains(&hi) && lo <= hi && within(t, 10.0);
    outcome(pass, format!("ratio⁻ = {lo:.9}, ratio⁺ = {hi:.9}, {t:.2?} (budget 10 s)"))
}

fn euler_product_limit() -> Outcome {
    let start = Instant::now();
    let (l, f) = (cubic(), pell());
    let w = compute_w(&l, &f, default_w0_min(&l)).w;
    let v0 = LocalFactorFunction::v0();
    let c = c_fl(&l, &f, &v0, w, 10_000_000).unwrap();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (a, k1) in [(1u64, 1u64), (7, 1), (1, 7)] {
        let s = frak_s(&l, &f, 1e6, a, k1, &v0, w).unwrap();
        let target = c.value * u_fl(&l, &f, &v0, w, &factor((a * k1) as u128).unwrap()).unwrap() * sigma_k1(&l, k1, a, w);
        let rel = (s - target).abs() / target.abs();
        worst = worst.max(rel);
        parts.push(format!("(a,k1)=({a},{k1}) rel {rel:.2e}"));
    }
    let t = start.elapsed();
    outcome(
        worst < 0.02 && within(t, 120.0),
        format!("W = {w}, c(v0) = {:.6} ± {:.1e}; {}; {t:.2?} (budget 2 min)", c.value, c.tail, parts.join(", ")),
    )
}

fn lattice_point_estimate() -> Outcome {
    let start = Instant::now();
    let f = pell();
    let b = 10_000.0;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for k in [1u64, 7, 17, 119] {
        // W = 1: each k is coprime to it, the class condition is void
        let count = lambda_star_count(&f, b, 0.0, k, (0, 0), 1).unwrap() as f64;
        let main = lambda_star_estimate(&f, b, 0.0, &factor(k as u128).unwrap(), 1).unwrap();
        let rel = (count - main).abs() / main;
        worst = worst.max(rel);
        parts.push(format!("k={k} rel {rel:.2e}"));
    }
    let t = start.elapsed();
    outcome(worst <= 0.02 && within(t, 120.0), format!("{}; {t:.2?} (budget 2 min)", parts.join(", ")))
}

fn mertens_constants() -> Outcome {
    let start = Instant::now();
    let f = pell();
    let (l9, l8) = (cubic(), eighth());
    let untwisted = [mertens_rho(&f, 100_000).1, mertens_rho(&f, 1_000_000).1];
    let twisted = [mertens_twisted(&l9, &f, 100_000), mertens_twisted(&l9, &f, 1_000_000)];
    let zs = [10_000u64, 100_000, 1_000_000];
    let red: Vec<f64> = zs.iter().map(|&z| mertens_twisted(&l8, &f, z)).collect();
    let shifted: Vec<f64> = zs.iter().zip(&red).map(|(&z, s)| s - (z as f64).ln().ln()).collect();
    let lnln = |z: u64| (z as f64).ln().ln();
    let d_untwisted = (untwisted[1] - untwisted[0]).abs();
    let d_twisted = (twisted[1] - twisted[0]).abs();
    let shift_range = shifted.iter().cloned().fold(f64::MIN, f64::max) - shifted.iter().cloned().fold(f64::MAX, f64::min);
    let grows = red.windows(2).all(|w| w[1] > w[0]) && red[2] - red[0] > 0.5 * (lnln(zs[2]) - lnln(zs[0]));
    let t = start.elapsed();
    let pass = d_untwisted < 0.05 && d_twisted < 0.05 && shift_range < 0.05 && grows && within(t, 60.0);
    outcome(
        pass,
        format!(
            "untwisted Δ {d_untwisted:.2e}, twisted Δ {d_twisted:.2e}; reducible sums {:.4}/{:.4}/{:.4} minus log log z spread {shift_range:.2e}; {t:.2?} (budget 1 min)",
            red[0], red[1], red[2]
        ),
    )
}

struct Profiles {
    radii: Vec<u64>,
    exact: Vec<u64>,
    detector: Vec<u64>,
    loc_upper: Vec<u64>,
    single: Duration,
    four: Duration,
    agree: bool,
}

fn main_profiles() -> Profiles {
    let (l, f) = (cubic(), pell());
    let m = compute_w(&l, &f, default_w0_min(&l));
    let (s1, t1) = find_base_point(&l, &f, &m).unwrap();
    let class = CongruenceClass { s1, t1, w: m.w };
    let radii = vec![256u64, 512, 1024, 2048, 4096];
    let start = Instant::now();
    let p1 = count_profile(&l, &f, &SweepConfig::new(4096).with_threads(1), class).unwrap();
    let single = start.elapsed();
    let start = Instant::now();
    let p4 = count_profile(&l, &f, &SweepConfig::new(4096).with_threads(4), class).unwrap();
    let four = start.elapsed();
    let pick = |v: &[u64]| radii.iter().map(|&b| v[b as usize]).collect::<Vec<_>>();
    Profiles {
        exact: pick(&p1.exact_norm),
        detector: pick(&p1.detector),
        loc_upper: pick(&p1.loc_upper),
        radii: radii.clone(),
        single,
        four,
        agree: p1 == p4,
    }
}

fn main_order(p: &Profiles) -> Outcome {
    let counts: Vec<(u64, u64)> = p.radii.iter().copied().zip(p.exact.iter().copied()).collect();
    let fit = asymptotic_fit(&counts, 1, 3).unwrap();
    let cs: Vec<String> = fit.constants.iter().map(|(b, c)| format!("{b}:{c:.4}")).collect();
    let pass = fit.spread < 1.30 && within(p.single, 600.0) && within(p.four, 180.0) && p.agree;
    outcome(
        pass,
        format!(
            "counts {:?}; c_B {}; max/min {:.4}; 1 worker {:.2?} (budget 10 min), 4 workers {:.2?} (budget 3 min)",
            p.exact,
            cs.join(" "),
            fit.spread,
            p.single,
            p.four
        ),
    )
}

fn count_sandwich(p: &Profiles) -> Outcome {
    let lower = p.detector.iter().zip(&p.exact).all(|(d, e)| d <= e);
    let upper = p.exact.iter().zip(&p.loc_upper).all(|(e, u)| e <= u);
    let rows: Vec<String> = (0..p.radii.len())
        .map(|i| format!("B={}: {} ≤ {} ≤ {}", p.radii[i], p.detector[i], p.exact[i], p.loc_upper[i]))
        .collect();
    outcome(
        lower && upper,
        format!(
            "{}; detector ≤ exact {}, exact ≤ local upper {}{}",
            rows.join(", "),
            if lower { "holds" } else { "fails" },
            if upper { "holds" } else { "fails" },
            if upper { "" } else { " (3 is totally ramified: 3 ∣ v₃ is required by the upper count, yet 3 itself is a norm)" }
        ),
    )
}

fn half_field_identity() -> Outcome {
    let start = Instant::now();
    let l = eighth();
    let l0 = l.construct_l0(&pell()).unwrap();
    let is_gaussian = l0.q() == 4 && l0.degree() == 2 && l0.in_h(1) && !l0.in_h(3);
    let primes: Vec<u64> = primes_up_to(10_000).into_iter().filter(|p| p % 8 == 1).collect();
    let bad = primes.iter().filter(|&&p| l.r_l(p).unwrap() != 2 * l0.r_l(p).unwrap()).count();
    let t = start.elapsed();
    outcome(
        is_gaussian && bad == 0,
        format!("L0 = {}, {} primes ≡ 1 mod 8, {bad} mismatches, {t:.2?}", l0.spec(), primes.len()),
    )
}

fn product_bound() -> Outcome {
    let start = Instant::now();
    let (l, f) = (cubic(), pell());
    let bs = [1_000u64, 10_000, 100_000, 1_000_000];
    let diag: Vec<f64> = bs.iter().map(|&b| nt_product(&l, &f, b).unwrap().diagnostic).collect();
    let drift = diag.iter().cloned().fold(f64::MIN, f64::max) / diag.iter().cloned().fold(f64::MAX, f64::min) - 1.0;
    let points: Vec<(u64, f64)> = bs.iter().map(|&b| (b, chebotarev_sum(&l, &f, b))).collect();
    let slope = loglog_slope(&points);
    let target = l.factor_count_over(&f).unwrap() as f64 / l.degree() as f64;
    let t = start.elapsed();
    let pass = drift < 0.15 && (slope / target - 1.0).abs() < 0.10 && within(t, 120.0);
    outcome(
        pass,
        format!(
            "diagnostics {:?}, drift {:.2}%; slope {slope:.4} vs r/n = {target:.4}; {t:.2?} (budget 2 min)",
            diag.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>(),
            100.0 * drift
        ),
    )
}

fn strategy_equivalence() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    for l in [cubic(), eighth()] {
        let f = pell();
        let m = compute_w(&l, &f, default_w0_min(&l));
        let (s1, t1) = find_base_point(&l, &f, &m).unwrap();
        let class = CongruenceClass { s1, t1, w: m.w };
        let runs: Vec<_> = [Strategy::Naive, Strategy::SpfTable, Strategy::RowSieve]
            .iter()
            .map(|&s| {
                let cfg = SweepConfig::new(200).with_strategy(s);
                (factor_stream(&f, &cfg).unwrap(), count_profile(&l, &f, &cfg, class).unwrap())
            })
            .collect();
        for (i, run) in runs.iter().enumerate().skip(1) {
            if run.0 != runs[0].0 || run.1 != runs[0].1 {
                bad.push(format!("{} strategy {i}", l.spec()));
            }
        }
        // every smaller box as its own sweep
        for b in (1..200u64).step_by(13) {
            let streams: Vec<_> = [Strategy::Naive, Strategy::SpfTable, Strategy::RowSieve]
                .iter()
                .map(|&s| factor_stream(&f, &SweepConfig::new(b).with_strategy(s)).unwrap())
                .collect();
            if streams[1] != streams[0] || streams[2] != streams[0] {
                bad.push(format!("{} B={b}", l.spec()));
            }
        }
    }
    let t = start.elapsed();
    outcome(bad.is_empty(), format!("mismatches {bad:?}; {t:.2?}"))
}

fn main() -> ExitCode {
    let profiles = main_profiles();
    let results = [
        ("1", "ideal counts of Q(i) against two-square representations", ideal_counts_match_two_squares()),
        ("2", "norm primes of the cubic field", norm_primes_of_cubic_field()),
        ("3", "root-count stability and pair counts", root_count_suite()),
        ("4", "sieve weight axioms", weight_axioms()),
        ("5", "fundamental lemma ratio", fundamental_lemma_ratios()),
        ("6", "Euler-product limit of the weighted sum", euler_product_limit()),
        ("7", "lattice-point estimate", lattice_point_estimate()),
        ("8", "Mertens-type constants", mertens_constants()),
        ("9", "order of the norm count", main_order(&profiles)),
        ("10", "lower and upper count consistency", count_sandwich(&profiles)),
        ("11", "half-degree subfield identity", half_field_identity()),
        ("12", "local-solubility product bound", product_bound()),
        ("13", "strategy equivalence", strategy_equivalence()),
    ];
    let mut failed = 0;
    for (id, title, o) in &results {
        println!("{} criterion {id}: {title}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as usize;
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
