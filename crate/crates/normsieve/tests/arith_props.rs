use normsieve::arith::{divisors_supported_on, factor, gcd_u64, moebius, primes_up_to};
use proptest::prelude::*;

#[test]
fn factorizations_multiply_back() {
    for n in 1..=1_000_000u64 {
        let f = factor(n as u128).unwrap();
        let back: u128 = f.factors().iter().map(|&(p, e)| p.pow(e)).product();
        assert_eq!(back, n as u128);
    }
}

#[test]
fn supported_divisors_match_filter() {
    let sets: [&[u64]; 3] = [&[2, 3], &[3, 7, 11], &[2, 5, 13, 17]];
    for primes in sets {
        let smooth = |mut k: u64| {
            for &p in primes {
                while k % p == 0 {
                    k /= p;
                }
            }
            k == 1
        };
        for bound in [1u64, 10, 97, 1000, 10_000] {
            let want: Vec<u64> = (1..=bound).filter(|&k| smooth(k)).collect();
            let mut got = divisors_supported_on(primes, bound);
            got.sort_unstable();
            assert_eq!(got, want, "{primes:?} ≤ {bound}");
        }
    }
}

#[test]
fn prime_list_matches_trial_division() {
    let slow: Vec<u64> = (2..5000u64).filter(|&n| (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0)).collect();
    assert_eq!(primes_up_to(4999), slow);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10_000, max_global_rejects: 100_000, ..ProptestConfig::default() })]

    #[test]
    fn moebius_is_multiplicative(m in 1u64..1_000_000, n in 1u64..1_000_000) {
        prop_assume!(gcd_u64(m, n) == 1);
        prop_assert_eq!(moebius(m * n), moebius(m) * moebius(n));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn large_values_factor_into_primes(n in 2u128..(1u128 << 80)) {
        let f = factor(n).unwrap();
        prop_assert_eq!(f.value(), n);
        for &(p, _) in f.factors() {
            prop_assert!(normsieve::arith::is_prime(p));
        }
    }
}
