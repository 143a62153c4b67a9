use std::collections::HashSet;
use std::sync::Arc;

use ffrestrict::incidence::{Line, PointLineConfig};
use ffrestrict::rng::seeded;
use ffrestrict::structure::{
    apply_projective, collinear_energy, extract_grid, growth_stats, GridOptions, PlantedGrid, ProjTransform,
};
use ffrestrict::{Elem, Exec, FieldCtx};
use proptest::prelude::*;
use rand::Rng;

const SEQ: Exec = Exec::Sequential;

fn elems(f: &FieldCtx, v: &[u32]) -> Vec<Elem> {
    v.iter().map(|&x| f.elem(x).unwrap()).collect()
}

/// Triple loop straight from the definition.
fn collinear_oracle(f: &FieldCtx, a: &[Elem], b: &[Elem]) -> u64 {
    let a: HashSet<Elem> = a.iter().copied().collect();
    let b: HashSet<Elem> = b.iter().copied().collect();
    let mut n = 0;
    for &y in &b {
        if y.value() == 0 || y.value() == 1 {
            continue;
        }
        for &x0 in &a {
            for &x1 in &a {
                if a.contains(&f.add(f.mul(f.sub(Elem::ONE, y), x0), f.mul(y, x1))) {
                    n += 1;
                }
            }
        }
    }
    n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projective_maps_preserve_incidence_pairs(m in proptest::array::uniform9(0u32..5), seed in any::<u64>()) {
        let f = FieldCtx::prime(5).unwrap();
        let t = ProjTransform::from_u32(&f, [[m[0], m[1], m[2]], [m[3], m[4], m[5]], [m[6], m[7], m[8]]]);
        prop_assume!(t.is_ok());
        let t = t.unwrap();
        let inv = t.inverse(&f);
        let mut rng = seeded(seed);
        let pts: Vec<[Elem; 2]> = (0..25).map(|i| [f.elem(i % 5).unwrap(), f.elem(i / 5).unwrap()]).collect();
        for _ in 0..6 {
            let (a, b, c) = (rng.gen_range(0..5), rng.gen_range(0..5), rng.gen_range(0..5));
            let Ok(l) = Line::new(&f, f.elem(a).unwrap(), f.elem(b).unwrap(), f.elem(c).unwrap()) else { continue };
            let Some(tl) = t.apply_line(&f, &inv, l) else { continue };
            for &p in &pts {
                if let Some(tp) = t.apply_point(&f, p) {
                    prop_assert_eq!(l.contains(&f, p), tl.contains(&f, tp));
                }
            }
        }
        let (imgs, lost) = apply_projective(&f, &t, &pts);
        prop_assert_eq!(imgs.len() + lost, 25);
        prop_assert_eq!(imgs.iter().collect::<HashSet<_>>().len(), imgs.len());
    }

    #[test]
    fn cauchy_davenport_and_product_growth(p_idx in 0usize..4, v in proptest::collection::vec(0u32..31, 1..16)) {
        let p = [7, 11, 13, 31][p_idx];
        let f = FieldCtx::prime(p).unwrap();
        let a = elems(&f, &v.iter().map(|x| x % p).collect::<Vec<_>>());
        let s = growth_stats(&f, &a);
        if s.size as u32 <= (p + 1) / 2 {
            prop_assert!(s.sumset >= 2 * s.size - 1);
        }
        prop_assert!(s.sumset <= s.size * (s.size + 1) / 2);
        let nonzero = a.iter().filter(|x| !x.is_zero()).collect::<HashSet<_>>().len();
        prop_assert!(s.nonzero_products >= nonzero);
    }

    #[test]
    fn collinear_energy_bounds(av in proptest::collection::vec(0u32..27, 1..10), bv in proptest::collection::vec(0u32..27, 1..10)) {
        let f = FieldCtx::new(3, 3).unwrap();
        let (a, b) = (elems(&f, &av), elems(&f, &bv));
        let e = collinear_energy(&f, &a, &b, SEQ).unwrap();
        prop_assert_eq!(e, collinear_oracle(&f, &a, &b));
        let na = a.iter().collect::<HashSet<_>>().len() as u64;
        let bs: HashSet<&Elem> = b.iter().collect();
        let nb = bs.len() as u64;
        let nb_free = bs.iter().filter(|y| y.value() > 1).count() as u64;
        prop_assert!(e <= na * na * nb);
        prop_assert!(e >= na * nb_free);
    }

    #[test]
    fn grid_witness_invariants_on_noisy_planted_grids(seed in any::<u64>(), extra_pts in 0usize..40, extra_lines in 0usize..40) {
        let f = Arc::new(FieldCtx::new(3, 4).unwrap());
        let planted = PlantedGrid::gf81_default(&f).unwrap().build(f.clone()).unwrap();
        let noise = PointLineConfig::random(f.clone(), extra_pts, extra_lines, &mut seeded(seed));
        let cfg = PointLineConfig::new(
            f.clone(),
            planted.points().iter().chain(noise.points()).copied().collect(),
            planted.lines().iter().chain(noise.lines()).copied().collect(),
        );
        let w = extract_grid(&cfg, &GridOptions { seed, ..GridOptions::default() }, Exec::Parallel).unwrap();
        prop_assert!(w.check_invariants(&f).is_ok());
        prop_assert!(w.image.len() <= w.a.len() * w.b.len());
    }
}
