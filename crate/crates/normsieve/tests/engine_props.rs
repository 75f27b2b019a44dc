use normsieve::arith::{factor, gcd_u64};
use normsieve::engine::{
    count_loc_upper, count_nfl, count_profile, factor_stream, CongruenceClass, CountMode, Detectors, Point, Strategy,
    SweepConfig,
};
use normsieve::fields::{Field, FieldSpec, NegativeNorms};
use normsieve::forms::FormSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STRATEGIES: [Strategy; 3] = [Strategy::Naive, Strategy::SpfTable, Strategy::RowSieve];

fn shipped() -> Vec<(Field, FormSpec)> {
    let pell = FormSpec::new(1, 0, -2).unwrap();
    vec![
        (Field::new(&FieldSpec::new(9, &[1, 8], true)).unwrap(), pell),
        (Field::new(&FieldSpec::new(8, &[1], true)).unwrap(), pell),
    ]
}

#[test]
fn strategies_give_identical_streams_and_counts() {
    for (l, f) in shipped() {
        let class = CongruenceClass { s1: 1, t1: 0, w: 30 };
        for b in [1u64, 2, 7, 64, 200] {
            let configs = |s: Strategy| {
                vec![
                    SweepConfig::new(b).with_strategy(s),
                    SweepConfig::new(b).with_strategy(s).coprime(),
                    SweepConfig::new(b).with_strategy(s).with_class(class),
                ]
            };
            let reference: Vec<_> = configs(Strategy::Naive).iter().map(|c| factor_stream(&f, c).unwrap()).collect();
            for s in STRATEGIES {
                for (cfg, want) in configs(s).iter().zip(&reference) {
                    assert_eq!(&factor_stream(&f, cfg).unwrap(), want, "{} {s:?} B = {b}", l.spec());
                }
                let cfg = SweepConfig::new(b).with_strategy(s);
                let base = SweepConfig::new(b).with_strategy(Strategy::Naive);
                assert_eq!(count_loc_upper(&l, &f, &cfg).unwrap(), count_loc_upper(&l, &f, &base).unwrap());
                assert_eq!(
                    count_nfl(&l, &f, &cfg, CountMode::ExactNorm).unwrap(),
                    count_nfl(&l, &f, &base, CountMode::ExactNorm).unwrap()
                );
            }
        }
    }
}

#[test]
fn streams_factor_every_value() {
    let (_, f) = &shipped()[0];
    for (s, t, v, facs) in factor_stream(f, &SweepConfig::new(60).with_strategy(Strategy::RowSieve)).unwrap() {
        assert_eq!(f.eval(s, t), v);
        let back: u128 = facs.iter().map(|&(p, e)| (p as u128).pow(e)).product();
        assert_eq!(back, v.unsigned_abs());
        assert_eq!(factor(back).unwrap().factors().len(), facs.len());
    }
}

#[test]
fn thread_count_does_not_change_counts() {
    for (l, f) in shipped() {
        let base = SweepConfig::new(700);
        let want = count_nfl(&l, &f, &base.clone().with_threads(1), CountMode::ExactNorm).unwrap();
        for threads in [2, 3, 4] {
            assert_eq!(count_nfl(&l, &f, &base.clone().with_threads(threads), CountMode::ExactNorm).unwrap(), want);
        }
    }
}

#[test]
fn detector_undercounts_exact_norms_in_its_class() {
    let (l, f) = &shipped()[0];
    let class = CongruenceClass { s1: 1, t1: 0, w: 630 };
    let b = 4096;
    let detector = count_nfl(l, f, &SweepConfig::new(b), CountMode::SquarefreeDetector(class)).unwrap();
    let det = Detectors { field: l, negatives: NegativeNorms::AssumeOk };
    let restricted = normsieve::engine::sweep(
        f,
        &SweepConfig::new(b).with_class(class).coprime(),
        || 0u64,
        |acc, p| *acc += det.exact_norm(p) as u64,
        |a, b| a + b,
    )
    .unwrap();
    assert!(detector <= restricted, "{detector} > {restricted}");
    let profile = count_profile(l, f, &SweepConfig::new(b), class).unwrap();
    assert_eq!(profile.detector[b as usize], detector);
}

#[test]
fn detector_expansion_holds_pointwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (l, f) in shipped() {
        let det = Detectors { field: &l, negatives: NegativeNorms::AssumeOk };
        let n = l.degree() as f64;
        let mut checked = 0;
        while checked < 10_000 {
            let (s, t) = (rng.gen_range(-100_000i64..=100_000), rng.gen_range(-100_000i64..=100_000));
            let v = f.eval(s, t);
            // the identity concerns values prime to the conductor
            if v == 0 || gcd_u64((v.unsigned_abs() % l.q() as u128) as u64, l.q()) != 1 {
                continue;
            }
            let facs: Vec<(u64, u32)> =
                factor(v.unsigned_abs()).unwrap().factors().iter().map(|&(p, e)| (p as u64, e)).collect();
            let p = Point { s, t, value: v, factors: &facs };
            let squarefree = p.is_squarefree() as u8 as f64;
            let lhs = squarefree * det.exact_norm(&p) as u8 as f64;
            let rhs = squarefree * det.r_l(&p) as f64 / n.powi(facs.len() as i32);
            assert_eq!(lhs, rhs, "{} at ({s}, {t}) ↦ {v}", l.spec());
            checked += 1;
        }
    }
}
