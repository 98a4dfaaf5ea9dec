mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use cmif::conjugacy::{build_chain, gap_at, HomeoChain};
use cmif::error::Error;
use cmif::function::SetValuedFn;
use cmif::inverse_limit::{
    approximate, hausdorff_distance, membership_check, parse_cloud_csv, transport, transport_test, write_cloud_csv,
    DepthNApprox,
};
use cmif::pattern::find_pattern_map;
use cmif::scalar::Rational;
use common::{function, generated};
use num_traits::Signed;
use proptest::prelude::*;

fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

fn cloud(depth: usize, pts: &[&[&str]]) -> DepthNApprox {
    DepthNApprox {
        depth,
        resolution: None,
        truncation: None,
        tuples: pts.iter().map(|t| t.iter().map(|s| q(s)).collect()).collect(),
    }
}

fn chain(a: &str, b: &str, m: usize) -> HomeoChain {
    let (f, g) = (generated(a), generated(b));
    let tau = Arc::new(find_pattern_map(&f, &g, 8).unwrap());
    build_chain(&[f], &[g], tau, m).unwrap()
}

#[test]
fn membership_examples() {
    let id = [function("identity")];
    assert_eq!(membership_check(&id, &[q("1/3"), q("1/3"), q("1/3")]).unwrap(), None);
    assert_eq!(membership_check(&id, &[q("1/3"), q("1/2"), q("1/2")]).unwrap(), Some(1));
    assert_eq!(membership_check(&id, &[q("1/2"), q("1/2"), q("1/3")]).unwrap(), Some(2));
    let xxx = [function("xxx")];
    assert_eq!(membership_check(&xxx, &[q("9/10"), q("3/4")]).unwrap(), None);
    assert_eq!(membership_check(&xxx, &[q("1/2"), q("3/4")]).unwrap(), Some(1));
    assert!(matches!(membership_check(&xxx, &[q("1/2")]), Err(Error::LengthMismatch { .. })));
    assert_eq!(membership_check(&id, &[q("1/3"), q("3")]).unwrap(), Some(1));
}

#[test]
fn identity_cloud_is_the_diagonal() {
    let a = approximate(&[function("identity")], 2, &q("1/4")).unwrap();
    assert!(a.tuples.iter().all(|t| t[0] == t[1]));
    let firsts: BTreeSet<Rational> = a.tuples.iter().map(|t| t[0].clone()).collect();
    for s in ["0", "1/4", "1/2", "3/4", "1"] {
        assert!(firsts.contains(&q(s)));
    }
}

#[test]
fn depth_two_cloud_is_the_reversed_graph() {
    let f = function("xxx");
    let a = approximate(std::slice::from_ref(&f), 2, &q("1/16")).unwrap();
    assert!(!a.is_empty());
    for t in &a.tuples {
        // (y, x) with y ∈ f(x)
        assert!(f.evaluate(&t[1]).unwrap().contains(&t[0]));
    }
    // the vertical at 1/2 is sampled at the resolution, ends included
    let at_half: Vec<&Vec<Rational>> = a.tuples.iter().filter(|t| t[1] == q("1/2")).collect();
    assert_eq!(at_half.len(), 17);
}

#[test]
fn clouds_are_internally_consistent() {
    for (name, n, res) in [("bennet", 3, "1/64"), ("tent", 4, "1/32"), ("zigzag", 3, "1/16"), ("xxx", 3, "1/16")] {
        let fs = [function(name)];
        let a = approximate(&fs, n, &q(res)).unwrap();
        assert!(a.len() > 20, "{name}: {}", a.len());
        for t in &a.tuples {
            assert_eq!(membership_check(&fs, t).unwrap(), None, "{name}: {t:?}");
        }
    }
}

#[test]
fn hausdorff_examples() {
    let a = cloud(2, &[&["0", "0"], &["1/2", "1"]]);
    assert_eq!(hausdorff_distance(&a, &a).unwrap(), q("0"));
    assert_eq!(hausdorff_distance(&cloud(2, &[&["0", "0"]]), &cloud(2, &[&["1", "0"]])).unwrap(), q("1"));
    let two = cloud(2, &[&["0", "0"], &["1", "0"]]);
    let one = cloud(2, &[&["0", "0"]]);
    assert_eq!(hausdorff_distance(&two, &one).unwrap(), q("1"));
    assert_eq!(hausdorff_distance(&one, &two).unwrap(), q("1"));
    assert!(matches!(hausdorff_distance(&one, &cloud(3, &[&["0", "0", "0"]])), Err(Error::DepthMismatch(2, 3))));
}

#[test]
fn refinement_shrinks_the_distance() {
    // the distance bound needs gap slopes of at most 2; the families steepen
    for (name, bounded) in [("tent", true), ("identity", true), ("zigzag", false), ("bennet", false)] {
        let fs = [function(name)];
        let coarse = approximate(&fs, 2, &q("1/8")).unwrap();
        let fine = approximate(&fs, 2, &q("1/16")).unwrap();
        let fine_set: BTreeSet<&Vec<Rational>> = fine.tuples.iter().collect();
        assert!(coarse.tuples.iter().all(|t| fine_set.contains(t)), "{name}");
        if bounded {
            assert!(hausdorff_distance(&coarse, &fine).unwrap() <= q("1/8"), "{name}");
        }
    }
}

#[test]
fn csv_round_trip() {
    let a = approximate(&[function("tent")], 3, &q("1/8")).unwrap();
    let text = write_cloud_csv(&a).unwrap();
    assert!(text.starts_with("x1,x2,x3\n"));
    let back = parse_cloud_csv(&text).unwrap();
    assert_eq!(back.tuples, a.tuples);
    assert!(parse_cloud_csv("x1,x2\n1/2,zz\n").is_err());
    assert!(parse_cloud_csv("x1,x2\n1/2,1/3,1\n").is_err());
}

#[test]
fn identity_and_doubling_transport() {
    let c = chain("identity", "identity", 3);
    let a = approximate(&[function("identity")], 3, &q("1/8")).unwrap();
    assert_eq!(transport_test(&c, &a, &[function("identity")]).unwrap(), None);

    let c = chain("bennet", "bennet_scaled", 4);
    let a = approximate(&[function("bennet")], 4, &q("1/16")).unwrap();
    assert_eq!(transport_test(&c, &a, &[function("bennet_scaled")]).unwrap(), None);
    // the image of the cloud is exactly the cloud of the scaled copy at twice the resolution
    let b = approximate(&[function("bennet_scaled")], 4, &q("1/8")).unwrap();
    let image = transport(&c, &a).unwrap();
    assert_eq!(hausdorff_distance(&image, &b).unwrap(), q("0"));
}

#[test]
fn corrupted_chain_is_caught() {
    let c = chain("tent", "tent_quarter", 3);
    let a = approximate(&[function("tent")], 3, &q("1/16")).unwrap();
    let gs = [function("tent_quarter")];
    assert_eq!(transport_test(&c, &a, &gs).unwrap(), None);
    let gap = gap_at(c.tau().source(), &q("1/4")).unwrap();
    let bad = c.with_perturbation(1, gap, q("1/1000"));
    let w = transport_test(&bad, &a, &gs).unwrap().expect("perturbation breaks membership");
    assert!(w.index == 1 || w.index == 2);
}

#[test]
fn transport_needs_a_long_enough_chain() {
    let c = chain("tent", "tent_quarter", 1);
    let a = approximate(&[function("tent")], 3, &q("1/4")).unwrap();
    assert!(matches!(transport_test(&c, &a, &[function("tent_quarter")]), Err(Error::LengthMismatch { .. })));
}

#[test]
fn depth_five_transport_both_ways() {
    for (a, b, res) in [("tent", "tent_quarter", "1/1024"), ("bennet", "bennet_scaled", "1/64")] {
        let (fs, gs) = ([function(a)], [function(b)]);
        let c = chain(a, b, 4);
        let cloud = approximate(&fs, 5, &q(res)).unwrap();
        assert!(cloud.len() >= 1000, "{a}: {}", cloud.len());
        assert_eq!(transport_test(&c, &cloud, &gs).unwrap(), None, "{a}");
        let image = transport(&c, &cloud).unwrap();
        let inv = c.inverse().unwrap();
        assert_eq!(transport_test(&inv, &image, &fs).unwrap(), None, "{a}");
        assert_eq!(transport(&inv, &image).unwrap().tuples, cloud.tuples, "{a}");
    }
}

fn brute(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Rational {
    let d = |x: &Vec<Rational>, y: &Vec<Rational>| x.iter().zip(y).map(|(s, t)| (s - t).abs()).max().unwrap();
    let dir = |a: &[Vec<Rational>], b: &[Vec<Rational>]| {
        a.iter().map(|x| b.iter().map(|y| d(x, y)).min().unwrap()).max().unwrap()
    };
    dir(a, b).max(dir(b, a))
}

proptest! {
    #[test]
    fn hausdorff_matches_brute_force(
        a in prop::collection::vec(prop::collection::vec(-20i64..20, 3), 1..12),
        b in prop::collection::vec(prop::collection::vec(-20i64..20, 3), 1..12),
    ) {
        let conv = |v: &Vec<Vec<i64>>| -> Vec<Vec<Rational>> {
            v.iter().map(|t| t.iter().map(|&x| Rational::new(x.into(), 7.into())).collect()).collect()
        };
        let (ta, tb) = (conv(&a), conv(&b));
        let ca = DepthNApprox { depth: 3, resolution: None, truncation: None, tuples: ta.clone() };
        let cb = DepthNApprox { depth: 3, resolution: None, truncation: None, tuples: tb.clone() };
        prop_assert_eq!(hausdorff_distance(&ca, &cb).unwrap(), brute(&ta, &tb));
    }
}

#[test]
fn finite_graph_bonding_maps_seed_at_critical_points() {
    let f = function("xxxx");
    assert!(matches!(f, SetValuedFn::Finite(_)));
    let a = approximate(std::slice::from_ref(&f), 2, &q("1/4")).unwrap();
    assert!(a.tuples.iter().any(|t| t[1] == q("1/2") && t[0] == q("1/2")));
}
