mod common;

use cmif::function::SetValuedFn;
use cmif::limits::{lim_down, lim_sampling_oracle, lim_up, one_sided_limit};
use cmif::scalar::{int, q, Rational, Side};
use cmif::set::{hausdorff_to_set, ClosedSet1D};
use common::{function, ALL};
use proptest::prelude::*;

#[test]
fn worked_examples() {
    let f = function("xxx");
    assert_eq!(lim_up(&f, &q(1, 2)).unwrap(), ClosedSet1D::interval(q(1, 3), q(2, 3)));
    assert_eq!(lim_down(&f, &q(1, 2)).unwrap(), ClosedSet1D::point(q(4, 5)));
    let g = function("xxxx");
    assert_eq!(lim_up(&g, &q(1, 2)).unwrap(), ClosedSet1D::interval(int(0), int(1)));
    assert_eq!(lim_down(&g, &q(1, 2)).unwrap(), ClosedSet1D::point(q(1, 2)));
    assert!(!lim_up(&g, &q(1, 2)).unwrap().is_subset(&g.evaluate(&q(1, 2)).unwrap()));
}

#[test]
fn ambient_endpoints_have_empty_outer_limits() {
    for name in ALL {
        let f = function(name);
        let (lo, hi) = f.domain();
        assert!(lim_up(&f, lo).unwrap().is_empty(), "{name}");
        assert!(lim_down(&f, hi).unwrap().is_empty(), "{name}");
        assert!(!lim_down(&f, lo).unwrap().is_empty(), "{name}");
    }
}

#[test]
fn accumulation_limits() {
    let b = function("bennet");
    assert_eq!(lim_up(&b, &int(1)).unwrap(), ClosedSet1D::interval(int(0), int(1)));
    let z = function("zigzag");
    for side in [Side::Up, Side::Down] {
        assert_eq!(one_sided_limit(&z, &q(1, 2), side).unwrap(), ClosedSet1D::interval(int(0), int(1)));
    }
    let t = function("tau_example_f");
    assert_eq!(lim_down(&t, &int(0)).unwrap(), ClosedSet1D::interval(int(0), int(1)));
    // gap-adjacent sides are singletons from the affine rules
    assert_eq!(lim_up(&b, &q(1, 2)).unwrap(), ClosedSet1D::point(int(1)));
    assert_eq!(lim_down(&b, &q(1, 2)).unwrap(), ClosedSet1D::point(int(1)));
    assert_eq!(lim_down(&b, &q(1, 4)).unwrap(), ClosedSet1D::point(int(0)));
}

fn probe_points(f: &SetValuedFn) -> Vec<Rational> {
    match f {
        SetValuedFn::Generated(g) => {
            let p = g.partition();
            p.points_to_depth(4).into_iter().map(|x| p.value(x)).collect()
        }
        SetValuedFn::Finite(g) => g.critical_points(),
    }
}

#[test]
fn oracle_agrees_everywhere() {
    let eps = q(1, 100);
    for name in ALL {
        let f = function(name);
        for a in probe_points(&f) {
            for side in [Side::Up, Side::Down] {
                let exact = one_sided_limit(&f, &a, side).unwrap();
                let sample = lim_sampling_oracle(&f, &a, side, &eps).unwrap();
                let d = hausdorff_to_set(&sample, &exact)
                    .unwrap_or_else(|| panic!("{name} at {a} {side:?}: {exact} vs {} samples", sample.len()));
                assert!(d <= &eps * int(2), "{name} at {a} {side:?}: distance {d}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn limits_lie_in_the_value(n in 0i64..=1_000_000, k in 0usize..ALL.len(), up in any::<bool>()) {
        let f = function(ALL[k]);
        prop_assume!(f.closed_graph_check(64).unwrap().is_none());
        let (lo, hi) = f.domain();
        let a = lo + (hi - lo) * q(n, 1_000_000);
        let side = if up { Side::Up } else { Side::Down };
        let lim = one_sided_limit(&f, &a, side).unwrap();
        prop_assert!(lim.is_subset(&f.evaluate(&a).unwrap()), "{} at {a}: {lim}", ALL[k]);
    }
}
