mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use cmif::error::Error;
use cmif::partition::{Index, MarkovPartition, Point, PointRef};
use cmif::pattern::{
    check_same_pattern, find_pattern_map, parse_pattern_map, serialize_pattern_map, tau_apply, PatternMap,
    DEFAULT_SHIFT_BOUND,
};
use cmif::scalar::Rational;
use common::{generated, MARKOV};
use proptest::prelude::*;

fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

fn fam(p: &MarkovPartition, name: &str) -> usize {
    p.family_id(name).unwrap()
}

/// l(1) ↦ r(1), l(n) ↦ l(n - 1), r(n) ↦ r(n + 1).
fn tau2(p: Arc<MarkovPartition>) -> PatternMap {
    let (l, r) = (fam(&p, "l"), fam(&p, "r"));
    let mut table = BTreeMap::new();
    for i in 0..p.explicit().len() {
        table.insert(Point::Explicit(i), Point::Explicit(i));
    }
    table.insert(Point::Member(l, 1), Point::Member(r, 1));
    let mut families = vec![(0, 0); 2];
    families[l] = (l, -1);
    families[r] = (r, 1);
    PatternMap::new(p.clone(), p, table, families).unwrap()
}

#[test]
fn tau_example_images() {
    let f = generated("tau_example_f");
    let p = f.partition_arc().clone();
    let t2 = tau2(p.clone());
    let val = |r: PointRef| p.resolve(&r, None).unwrap();
    let l = fam(&p, "l");
    let half = PointRef::Value(q("1/2"));
    assert_eq!(val(tau_apply(&t2, &half).unwrap()), q("3/4"));
    assert_eq!(val(tau_apply(&t2, &PointRef::Member(l, Index::Fixed(2))).unwrap()), q("1/2"));
    let t1 = PatternMap::identity(p.clone());
    for pt in p.points_to_depth(12) {
        assert_eq!(t1.map_point(pt), pt);
    }
    assert!(matches!(tau_apply(&t1, &PointRef::Value(q("1/3"))), Err(Error::UnmappedPoint(_))));
}

#[test]
fn both_taus_pass_on_tau_example() {
    let f = generated("tau_example_f");
    let g = generated("tau_example_g");
    let t1 = PatternMap::identity(f.partition_arc().clone());
    let t2 = tau2(f.partition_arc().clone());
    assert_ne!(t1, t2);
    assert_eq!(check_same_pattern(&f, &g, &t1), None);
    assert_eq!(check_same_pattern(&f, &g, &t2), None);
    let found = find_pattern_map(&f, &f, DEFAULT_SHIFT_BOUND).unwrap();
    assert_eq!(found, t1);
}

#[test]
fn reflexive_on_every_markov_fixture() {
    for name in MARKOV {
        let f = generated(name);
        let t = PatternMap::identity(f.partition_arc().clone());
        assert_eq!(check_same_pattern(&f, &f, &t), None, "{name}");
    }
}

#[test]
fn bennet_and_scaled_bennet_follow_the_doubling() {
    let f = generated("bennet");
    let g = generated("bennet_scaled");
    let tau = find_pattern_map(&f, &g, DEFAULT_SHIFT_BOUND).expect("affine image follows the same pattern");
    // scaling oracle: τ(a) = 2a on every point
    for pt in f.partition().points_to_depth(40) {
        let a = f.partition().value(pt);
        assert_eq!(tau.map_value(&a).unwrap(), a * q("2"));
    }
    assert_eq!(check_same_pattern(&g, &f, &tau.inverse()), None);
}

#[test]
fn incompatible_tents_have_no_map() {
    let f = generated("tent");
    let g = generated("tent_flipped");
    assert!(find_pattern_map(&f, &g, DEFAULT_SHIFT_BOUND).is_none());
    let tau = find_pattern_map(&f, &generated("tent_quarter"), DEFAULT_SHIFT_BOUND).unwrap();
    assert_eq!(tau.map_value(&q("1/2")).unwrap(), q("1/4"));
}

#[test]
fn disordered_or_incomplete_maps_are_rejected() {
    let p = generated("tau_example_f").partition_arc().clone();
    let (l, r) = (fam(&p, "l"), fam(&p, "r"));
    let mut table = BTreeMap::new();
    for i in 0..p.explicit().len() {
        table.insert(Point::Explicit(i), Point::Explicit(i));
    }
    let mut families = vec![(0, 0); 2];
    families[l] = (l, -1);
    families[r] = (r, 1);
    // l(1) has nowhere to go
    let err = PatternMap::new(p.clone(), p.clone(), table.clone(), families.clone()).unwrap_err();
    assert!(matches!(err, Error::UnmappedPoint(_)), "{err}");
    // r shifted by +2 leaves r(2) unhit
    families[r] = (r, 2);
    table.insert(Point::Member(l, 1), Point::Member(r, 1));
    assert!(PatternMap::new(p.clone(), p.clone(), table.clone(), families.clone()).is_err());
    // swapping the ends reverses the order
    families[r] = (r, 1);
    let zero = p.explicit_id("zero").unwrap();
    let one = p.explicit_id("one").unwrap();
    table.insert(Point::Explicit(zero), Point::Explicit(one));
    table.insert(Point::Explicit(one), Point::Explicit(zero));
    assert!(matches!(PatternMap::new(p.clone(), p, table, families), Err(Error::InvalidPattern(_))));
}

#[test]
fn pattern_files_round_trip() {
    let f = generated("tau_example_f");
    let p = f.partition_arc().clone();
    let t2 = tau2(p.clone());
    let text = serialize_pattern_map(&t2.to_file());
    let back = PatternMap::from_file(&parse_pattern_map(&text).unwrap(), p.clone(), p).unwrap();
    assert_eq!(back, t2);
    assert_eq!(serialize_pattern_map(&back.to_file()), text);
}

#[test]
fn symmetry_over_found_maps() {
    for a in MARKOV {
        for b in MARKOV {
            let (f, g) = (generated(a), generated(b));
            if let Some(tau) = find_pattern_map(&f, &g, 2) {
                assert_eq!(check_same_pattern(&f, &g, &tau), None, "{a} {b}");
                assert_eq!(check_same_pattern(&g, &f, &tau.inverse()), None, "{a} {b}");
            }
        }
    }
}

proptest! {
    #[test]
    fn pattern_maps_are_increasing(i in 0usize..200, j in 0usize..200, which in 0usize..3) {
        let f = generated("tau_example_f");
        let p = f.partition_arc().clone();
        let tau = match which {
            0 => tau2(p.clone()),
            1 => tau2(p.clone()).inverse(),
            _ => find_pattern_map(&generated("bennet"), &generated("bennet_scaled"), 8).unwrap(),
        };
        let pts = tau.source().points_to_depth(60);
        let (a, b) = (pts[i % pts.len()], pts[j % pts.len()]);
        let (s, t) = (tau.source(), tau.target());
        prop_assert_eq!(s.value(a).cmp(&s.value(b)), t.value(tau.map_point(a)).cmp(&t.value(tau.map_point(b))));
    }
}
