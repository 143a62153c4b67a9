use std::sync::Arc;

use ffrestrict::paraboloid::{extension, extension_direct, ParaboloidCtx, SurfaceFn};
use ffrestrict::{Exec, Exponent, FieldCtx};
use num_complex::Complex64;
use proptest::prelude::*;

const SEQ: Exec = Exec::Sequential;

fn ctx(p: u32) -> Arc<ParaboloidCtx> {
    Arc::new(ParaboloidCtx::new(Arc::new(FieldCtx::prime(p).unwrap())).unwrap())
}

fn surface(pctx: &Arc<ParaboloidCtx>, v: Vec<(f64, f64)>) -> SurfaceFn {
    SurfaceFn::new(pctx.clone(), v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap()
}

fn values(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn galilean_transport_and_modulation_preserve_extension_norms(
        v in values(25), d in (0u32..5, 0u32..5), a in (0u32..5, 0u32..5, 0u32..5),
    ) {
        let pctx = ctx(5);
        let f = pctx.field();
        let g = surface(&pctx, v);
        let delta = [f.elem(d.0).unwrap(), f.elem(d.1).unwrap()];
        let shift = [f.elem(a.0).unwrap(), f.elem(a.1).unwrap(), f.elem(a.2).unwrap()];
        let base = extension(&g, SEQ).unwrap();
        for h in [g.galilean_transport(delta), g.modulate(shift)] {
            let e = extension(&h, SEQ).unwrap();
            for p in [2.0, 4.0] {
                let (x, y) = (base.lp_norm(Exponent::Finite(p), SEQ).unwrap(), e.lp_norm(Exponent::Finite(p), SEQ).unwrap());
                prop_assert!((x - y).abs() <= 1e-9 * x.max(1e-300));
            }
        }
    }

    #[test]
    fn sup_norm_below_l1(v in values(49)) {
        let pctx = ctx(7);
        let g = surface(&pctx, v);
        let sup = extension(&g, SEQ).unwrap().lp_norm(Exponent::Infinity, SEQ).unwrap();
        prop_assert!(sup <= g.lp_norm(Exponent::Finite(1.0), SEQ) * (1.0 + 1e-12));
    }

    #[test]
    fn extension_routes_agree(v in values(25)) {
        let pctx = ctx(5);
        let g = surface(&pctx, v);
        let a = extension(&g, Exec::Parallel).unwrap();
        let b = extension_direct(&g, SEQ).unwrap();
        let diff = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12);
    }
}

#[test]
fn galilean_maps_invert_exhaustively_on_gf5() {
    let pctx = ctx(5);
    let f = pctx.field();
    for nu in 0..25 {
        let d = [f.elem(nu % 5).unwrap(), f.elem(nu / 5).unwrap()];
        let minus = [f.neg(d[0]), f.neg(d[1])];
        let mut seen = vec![false; pctx.len()];
        for r in 0..pctx.len() {
            let x = pctx.point(r);
            let y = pctx.galilean(d, x).unwrap();
            assert!(pctx.contains(y));
            assert_eq!(pctx.galilean(minus, y).unwrap(), x);
            seen[pctx.rank_of_point(y).unwrap()] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}

#[test]
fn galilean_example_on_gf7() {
    let pctx = ctx(7);
    let f = pctx.field();
    let e = |v: u32| f.elem(v).unwrap();
    assert_eq!(pctx.galilean([e(1), e(0)], [e(2), e(3), e(6)]).unwrap(), [e(3), e(3), e(4)]);
    assert!(pctx.galilean([e(1), e(0)], [e(2), e(3), e(0)]).is_err());
}

#[test]
fn extension_of_one_at_origin_and_flat_points() {
    let pctx = ctx(7);
    let ext = extension(&SurfaceFn::constant(pctx.clone(), Complex64::new(1.0, 0.0)), SEQ).unwrap();
    let f = pctx.field();
    let e = |v: u32| f.elem(v).unwrap();
    assert!((ext.values()[0] - 1.0).norm() < 1e-12);
    assert!(ext.at(&[e(1), e(0), e(0)]).norm() < 1e-12);
    for x3 in 1..7 {
        assert!((ext.at(&[e(2), e(5), e(x3)]).norm() - 1.0 / 7.0).abs() < 1e-12);
    }
}
