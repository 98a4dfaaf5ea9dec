mod common;

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use cmif::conjugacy::{apply_h, build_chain, build_h1, gap_at, lift_h, verify_commuting, HomeoChain, VERIFY_DEPTH};
use cmif::error::Error;
use cmif::function::GeneratedFn;
use cmif::pattern::{find_pattern_map, PatternMap, DEFAULT_SHIFT_BOUND};
use cmif::scalar::Rational;
use common::generated;
use proptest::prelude::*;

fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

fn tau(f: &GeneratedFn, g: &GeneratedFn) -> Arc<PatternMap> {
    Arc::new(find_pattern_map(f, g, DEFAULT_SHIFT_BOUND).expect("same pattern"))
}

fn chain(a: &str, b: &str, m: usize) -> HomeoChain {
    let (f, g) = (generated(a), generated(b));
    let t = tau(&f, &g);
    build_chain(&[f], &[g], t, m).unwrap()
}

fn samples(lo: i64, hi: i64, den: i64) -> Vec<Rational> {
    (0..=den * (hi - lo)).map(|k| Rational::new((lo * den + k).into(), den.into())).collect()
}

#[test]
fn h1_is_affine_on_gaps() {
    let (f, g) = (generated("tent"), generated("tent_quarter"));
    let h1 = build_h1(&tau(&f, &g));
    assert_eq!(h1.eval(&q("1/4")).unwrap(), q("1/8"));
    assert_eq!(h1.eval(&q("1/2")).unwrap(), q("1/4"));
    assert_eq!(h1.eval(&q("3/4")).unwrap(), q("5/8"));

    let id = generated("identity");
    let h = build_h1(&Arc::new(PatternMap::identity(id.partition_arc().clone())));
    for t in samples(0, 1, 37) {
        assert_eq!(h.eval(&t).unwrap(), t);
    }

    let (b, b2) = (generated("bennet"), generated("bennet_scaled"));
    let h = build_h1(&tau(&b, &b2));
    for t in samples(0, 1, 97) {
        assert_eq!(h.eval(&t).unwrap(), &t * q("2"));
    }
}

#[test]
fn lifted_maps_follow_the_slope_product() {
    let (f, g) = (generated("tent"), generated("tent_quarter"));
    let h1 = Arc::new(build_h1(&tau(&f, &g)));
    let h2 = Arc::new(lift_h(&h1, &f, &g).unwrap());
    // slope (1/4)(1/2)(2) left of the knot at 1/4, (1/4)(3/2)(2) right of it
    assert_eq!(h2.eval(&q("1/8")).unwrap(), q("1/32"));
    assert_eq!(h2.eval(&q("1/4")).unwrap(), q("1/16"));
    assert_eq!(h2.eval(&q("3/8")).unwrap(), q("5/32"));
    assert_eq!(verify_commuting(&h1, &f, &g, &h2, VERIFY_DEPTH).unwrap(), None);

    let id = generated("identity");
    let h = Arc::new(build_h1(&Arc::new(PatternMap::identity(id.partition_arc().clone()))));
    let next = lift_h(&h, &id, &id).unwrap();
    for t in samples(0, 1, 29) {
        assert_eq!(next.eval(&t).unwrap(), t);
    }
}

#[test]
fn doubling_chain_doubles_everywhere() {
    let c = chain("bennet", "bennet_scaled", 10);
    assert_eq!(c.len(), 11);
    for i in 0..c.len() {
        for t in samples(0, 1, 53) {
            assert_eq!(c.map(i).eval(&t).unwrap(), &t * q("2"), "h_{} at {t}", i + 1);
        }
    }
    let x = [q("1/4"), q("1/8"), q("1/2")];
    assert_eq!(apply_h(&c, &x, 3).unwrap(), vec![q("1/2"), q("1/4"), q("1")]);
}

#[test]
fn apply_h_checks_lengths() {
    let c = chain("identity", "identity", 2);
    assert_eq!(apply_h(&c, &[q("1/3"), q("1/5")], 2).unwrap(), vec![q("1/3"), q("1/5")]);
    assert!(matches!(apply_h(&c, &[q("1/3")], 2), Err(Error::LengthMismatch { .. })));
    assert!(matches!(apply_h(&c, &vec![q("0"); 4], 4), Err(Error::LengthMismatch { expected: 3, found: 4 })));
    let c = chain("tent", "tent_quarter", 5);
    assert_eq!(apply_h(&c, &vec![q("1/2"); 6], 6).unwrap()[0], q("1/4"));
}

#[test]
fn chains_verify_and_perturbations_are_caught() {
    let start = Instant::now();
    for (a, b) in [("bennet", "bennet_scaled"), ("tent", "tent_quarter"), ("tau_example_f", "tau_example_g")] {
        let c = chain(a, b, 10);
        assert_eq!(c.verify(VERIFY_DEPTH).unwrap(), None);
        let part = c.tau().source().clone();
        for t in [q("1/3"), q("9/10"), q("1/100")] {
            let Some(gap) = gap_at(&part, &t) else { continue };
            // perturbations are only visible on checked gaps
            if !part.gaps_to_depth(VERIFY_DEPTH).contains(&gap) {
                continue;
            }
            let last = if c.tau().source().is_finite() { 10 } else { 3 };
            for i in [1, last] {
                let bad = c.with_perturbation(i, gap, q("1/1000"));
                assert!(bad.verify(VERIFY_DEPTH).unwrap().is_some(), "{a}: h_{} on gap at {t}", i + 1);
            }
        }
    }
    eprintln!("chains: {:?}", start.elapsed());
}

#[test]
fn inverse_chain_inverts() {
    for (a, b) in [("bennet", "bennet_scaled"), ("tent", "tent_quarter"), ("tau_example_f", "tau_example_g")] {
        let c = chain(a, b, 4);
        let inv = c.inverse().unwrap();
        for i in 0..c.len() {
            for t in samples(0, 1, 41) {
                let y = c.map(i).eval(&t).unwrap();
                assert_eq!(inv.map(i).eval(&y).unwrap(), t, "{a}: h_{}", i + 1);
            }
        }
    }
}

#[test]
fn mismatched_patterns_are_refused() {
    let (f, g) = (generated("tent"), generated("tent_flipped"));
    let t = Arc::new(PatternMap::identity(f.partition_arc().clone()));
    assert!(matches!(build_chain(std::slice::from_ref(&f), &[g], t.clone(), 3), Err(Error::PatternMismatch(_))));
    let h = Arc::new(build_h1(&t));
    assert!(matches!(lift_h(&h, &f, &generated("bennet")), Err(Error::PatternMismatch(_))));
}

fn proptest_chains() -> &'static [HomeoChain] {
    static CHAINS: OnceLock<Vec<HomeoChain>> = OnceLock::new();
    CHAINS.get_or_init(|| {
        [("bennet", "bennet_scaled"), ("tent", "tent_quarter"), ("tau_example_f", "tau_example_g")]
            .into_iter()
            .map(|(a, b)| chain(a, b, 4))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn squares_commute_at_random_points(num in 0i64..=1_000_003, which in 0usize..3, i in 0usize..4) {
        let c = &proptest_chains()[which];
        let t = Rational::new(num.into(), 1_000_003.into());
        let f = &c.sources()[i];
        let g = &c.targets()[i];
        let lhs: Vec<Rational> = f.evaluate(&t).unwrap().components().iter()
            .flat_map(|(u, v)| [c.map(i).eval(u).unwrap(), c.map(i).eval(v).unwrap()]).collect();
        let rhs: Vec<Rational> = g.evaluate(&c.map(i + 1).eval(&t).unwrap()).unwrap().components().iter()
            .flat_map(|(u, v)| [u.clone(), v.clone()]).collect();
        prop_assert_eq!(lhs, rhs);
        // strictly increasing
        let s = &t + Rational::new(1.into(), 7_000_000.into());
        if s <= q("1") {
            prop_assert!(c.map(i + 1).eval(&t).unwrap() < c.map(i + 1).eval(&s).unwrap());
        }
    }
}
