mod common;

use cmif::markov::{is_point_of, verify_cmif, MarkovWitness};
use cmif::partition::Membership;
use cmif::scalar::{int, q, Side};
use cmif::set::ClosedSet1D;
use common::{generated, MARKOV};

#[test]
fn markov_fixtures_pass() {
    for name in MARKOV {
        let r = verify_cmif(&generated(name));
        assert!(r.passed(), "{name}: {r:?}");
    }
}

#[test]
fn bennet_report() {
    let r = verify_cmif(&generated("bennet"));
    assert!(r.passed());
    assert_eq!(r.derived_set, vec![int(1)]);
}

#[test]
fn finite_tent_has_empty_derived_set() {
    let r = verify_cmif(&generated("tent"));
    assert!(r.passed());
    assert!(r.derived_set.is_empty());
}

#[test]
fn condition_three_failure() {
    let r = verify_cmif(&generated("cond3_fail"));
    assert!(!r.passed());
    assert!(r.usc.is_none());
    assert!(r.conditions[0].passed() && r.conditions[1].passed() && r.conditions[3].passed());
    assert_eq!(
        r.conditions[2].witness,
        Some(MarkovWitness::LimitNotInA {
            point: "explicit:zero".into(),
            side: Side::Down,
            limit: ClosedSet1D::point(q(1, 3)),
        })
    );
}

#[test]
fn membership_in_bennet() {
    let f = generated("bennet");
    let p = f.partition();
    let fam = p.family_id("p").unwrap();
    assert_eq!(is_point_of(p, &q(5, 8)), Membership::Member(fam, 2));
    assert_eq!(is_point_of(p, &int(1)), Membership::Explicit(p.explicit_id("one").unwrap()));
    assert_eq!(is_point_of(p, &q(1, 3)), Membership::NotInA);
}
