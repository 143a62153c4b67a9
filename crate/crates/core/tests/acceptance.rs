//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed. The
//! process exits nonzero if any criterion fails, except a failure listed in
//! `DOCUMENTED` whose reason matches exactly.

use std::sync::Arc;
use std::time::{Duration, Instant};

use ffrestrict::estimator::exponents::{frac, fraction_string, target_exponent};
use ffrestrict::estimator::{
    exponent_algebra, local_restriction_sweep, st_bounded_level, st_decay, st_support_level, subspace_sharpness,
    EstimatorParams, StContext,
};
use ffrestrict::incidence::{
    additive_quadruples, additive_quadruples_cubic, galilean_reduction_check, incidence_from_energy_worst,
    l4_identity_check, line_map, line_map_injectivity, PointLineConfig,
};
use ffrestrict::paraboloid::{
    fourier_dimension_report, gauss_sum, kernel_formula_check, pseudo_conformal_identity, ParaboloidCtx, SliceFn,
};
use ffrestrict::regular::{level_bound, regular_decomposition, regularity_stats, slice_class_bound};
use ffrestrict::rng::seeded;
use ffrestrict::structure::{incidence_structure_pipeline, PipelineOptions, PipelineStatus, PlantedGrid};
use ffrestrict::{Exec, FieldCtx, GridFn, Measure};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;

const EXEC: Exec = Exec::Parallel;

// tolerances
const FDIM_TOL: f64 = 1e-9;
const FDIM_BUDGET: Duration = Duration::from_secs(5);
const KERNEL_TOL: f64 = 1e-9;
const GAUSS_TOL: f64 = 1e-9;
const L4_REL_TOL: f64 = 1e-9;
const SHARP_TOL: f64 = 1e-9;
const SHARP_GROWTH_TOL: f64 = 1e-6;
const ST_CAP: f64 = 4.0;
const PLANCHEREL_TOL: f64 = 1e-9;
const LOCAL_CAP: f64 = 4.0;
const PSEUDO_TOL: f64 = 1e-9;
const PIPELINE_BUDGET: Duration = Duration::from_secs(60);

/// Criteria that cannot hold as stated, with the exact failure detail expected.
const DOCUMENTED: &[(u32, &str)] = &[(10, "printed 47144/68587 is not reproducible: exact value is 47144/58587")];

fn ctx(p: u32, k: u32) -> Arc<ParaboloidCtx> {
    Arc::new(ParaboloidCtx::new(Arc::new(FieldCtx::new(p, k).unwrap())).unwrap())
}

fn odd_primes_to(n: u32) -> Vec<u32> {
    (3..=n).filter(|&p| (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0)).collect()
}

fn random_subset<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let size = rng.gen_range(1..=n);
    let mut v = sample(rng, n, size).into_vec();
    v.sort_unstable();
    v
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_fourier_dimension() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut flat: f64 = 0.0;
    for p in odd_primes_to(31) {
        let r = fourier_dimension_report(&ctx(p, 1), EXEC).unwrap();
        worst = worst.max((r.max_nonzero - r.reference).abs());
        flat = flat.max(r.max_on_flat);
    }
    let t = start.elapsed();
    outcome(
        worst < FDIM_TOL && flat < FDIM_TOL && t < FDIM_BUDGET,
        format!("max |max|dsigma^v| - 1/p| = {worst:.2e}, max on flat = {flat:.2e}, {:.2}s", t.as_secs_f64()),
    )
}

fn c2_kernel() -> Outcome {
    let mut dev: f64 = 0.0;
    for p in [3, 5, 7, 11] {
        dev = dev.max(kernel_formula_check(&ctx(p, 1), EXEC).unwrap().max_deviation);
    }
    let mut gauss: f64 = 0.0;
    let mut fields = 0;
    for p in odd_primes_to(81) {
        let mut k = 1;
        while p.pow(k) <= 81 {
            let f = FieldCtx::new(p, k).unwrap();
            for a in f.elements().skip(1) {
                gauss = gauss.max((gauss_sum(&f, a).norm_sqr() - f.order() as f64).abs());
            }
            fields += 1;
            k += 1;
        }
    }
    outcome(
        dev < KERNEL_TOL && gauss < GAUSS_TOL,
        format!("closed-form deviation {dev:.2e}; ||S(a)|^2 - q| <= {gauss:.2e} over {fields} fields"),
    )
}

fn c3_l4_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    for p in [3, 5, 7, 11] {
        let c = ctx(p, 1);
        let mut rng = seeded(3000 + p as u64);
        for _ in 0..50 {
            let e = random_subset(&mut rng, c.len());
            let id = l4_identity_check(&c, &e, EXEC).unwrap();
            worst = worst.max(id.rel_err);
            if additive_quadruples(&c, &e, EXEC).unwrap() != additive_quadruples_cubic(&c, &e, EXEC).unwrap() {
                mismatches += 1;
            }
        }
    }
    outcome(
        worst < L4_REL_TOL && mismatches == 0,
        format!("max rel err {worst:.2e}; quadruple algorithms disagree on {mismatches}/200"),
    )
}

fn c4_galilean() -> Outcome {
    let mut bad = 0;
    for p in [3, 5, 7] {
        let c = ctx(p, 1);
        let mut rng = seeded(4000 + p as u64);
        for _ in 0..50 {
            let e = random_subset(&mut rng, c.len());
            let b = c.point(rng.gen_range(0..c.len()));
            if !galilean_reduction_check(&c, &e, b, EXEC).unwrap().equal {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("{bad}/150 unequal counts"))
}

fn c5_line_map() -> Outcome {
    let mut wrong = Vec::new();
    let mut witnesses = 0;
    for p in odd_primes_to(31) {
        let f = FieldCtx::prime(p).unwrap();
        let r = line_map_injectivity(&f);
        if r.injective != (p % 4 == 3) {
            wrong.push(p);
        }
        if p % 4 == 1 {
            let ok = r.witness.is_some_and(|(y, y2)| {
                let (a, b) = ([f.elem(y[0]).unwrap(), f.elem(y[1]).unwrap()], [f.elem(y2[0]).unwrap(), f.elem(y2[1]).unwrap()]);
                y != y2 && line_map(&f, a).unwrap() == line_map(&f, b).unwrap()
            });
            if ok {
                witnesses += 1;
            } else {
                wrong.push(p);
            }
        }
    }
    let ones = odd_primes_to(31).iter().filter(|&&p| p % 4 == 1).count();
    outcome(wrong.is_empty(), format!("dichotomy wrong at {wrong:?}; {witnesses}/{ones} witnesses verified"))
}

fn c6_l4_chain() -> Outcome {
    let mut bad = 0;
    let mut max_ratio: f64 = 0.0;
    for p in [7, 11] {
        let c = ctx(p, 1);
        let mut rng = seeded(6000 + p as u64);
        for _ in 0..100 {
            let e = random_subset(&mut rng, c.len());
            let w = incidence_from_energy_worst(&c, &e, EXEC).unwrap();
            if !(w.chain_holds && w.l4_bound_holds) {
                bad += 1;
            }
            max_ratio = max_ratio.max(w.reduction.quadruples as f64 / w.reduction.chain_bound as f64);
        }
    }
    outcome(bad == 0, format!("{bad}/200 chain failures; max Lambda / (|E|(|E|+I)) = {max_ratio:.4}"))
}

fn c7_sharpness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut at4: f64 = 0.0;
    for p in [5, 13] {
        for qe in [3.0, 10.0 / 3.0, 4.0] {
            let r = subspace_sharpness(&ctx(p, 1), qe, EXEC).unwrap();
            worst = worst.max((r.measured - r.closed_form).abs());
            if qe == 4.0 {
                at4 = at4.max((r.measured - 1.0).abs());
            }
        }
    }
    let a = subspace_sharpness(&ctx(5, 1), 3.0, EXEC).unwrap().measured;
    let b = subspace_sharpness(&ctx(13, 1), 3.0, EXEC).unwrap().measured;
    let growth = b / a;
    let expected = (13.0f64 / 5.0).powf(1.0 / 6.0);
    outcome(
        worst < SHARP_TOL && at4 < SHARP_TOL && (growth - expected).abs() < SHARP_GROWTH_TOL,
        format!("max |measured - closed form| = {worst:.2e}; growth at q = 3: {growth:.9} vs {expected:.9}"),
    )
}

fn c8_stein_tomas() -> Outcome {
    let mut worst_const: f64 = 0.0;
    let mut worst_planch: f64 = 0.0;
    let mut failures = 0;
    let mut runs = 0;
    for p in [5, 7] {
        let st = StContext::new(ctx(p, 1), EXEC).unwrap();
        let field = st.pctx.field().clone();
        let params = EstimatorParams::default();
        for i in 0..100u64 {
            let mut rng = seeded(8000 + 100 * p as u64 + i);
            let density: f64 = rng.gen_range(0.005..0.5);
            let phases = i % 2 == 1;
            let mut f = GridFn::from_fn(field.clone(), 3, Measure::Counting, |_| {
                if !rng.gen_bool(density) {
                    return Complex64::new(0.0, 0.0);
                }
                if phases {
                    Complex64::from_polar(rng.gen_range(0.5..=1.0), rng.gen_range(0.0..std::f64::consts::TAU))
                } else {
                    Complex64::new(1.0, 0.0)
                }
            })
            .unwrap();
            let idx = rng.gen_range(0..f.len());
            f.values_mut()[idx] = Complex64::new(1.0, 0.0);
            for r in [
                st_bounded_level(&st, &f, &params, ST_CAP, EXEC).unwrap(),
                st_support_level(&st, &f, &params, ST_CAP, EXEC).unwrap(),
                st_decay(&st, &f, ST_CAP, EXEC).unwrap(),
            ] {
                runs += 1;
                worst_const = worst_const.max(r.measured_constant);
                worst_planch = worst_planch.max(r.plancherel_rel_err);
                if !r.holds || r.plancherel_rel_err > PLANCHEREL_TOL {
                    failures += 1;
                }
            }
        }
    }
    outcome(
        failures == 0,
        format!("{failures}/{runs} failures; max measured constant {worst_const:.4}; max Plancherel rel err {worst_planch:.2e}"),
    )
}

fn c9_local() -> Outcome {
    let r = local_restriction_sweep(&[3, 7, 11, 19], 48, 9, LOCAL_CAP, EXEC).unwrap();
    let rows: Vec<String> =
        r.rows.iter().map(|row| format!("p={}: {:.4} <= {:.4} ({})", row.p, row.max_ratio, row.bound, row.family.name())).collect();
    outcome(r.all_hold, rows.join("; "))
}

fn c10_exponents() -> Outcome {
    let r = exponent_algebra().unwrap();
    let failed: Vec<&str> = r.entries.iter().filter(|e| !e.holds).map(|e| e.name.as_str()).collect();
    let alpha = frac(496, 331);
    let beta = r.get("beta threshold at 496/331").unwrap();
    let printed = r.get("printed beta 47144/68587 disagrees with exact arithmetic").unwrap();
    let corollary = fraction_string(target_exponent(alpha).unwrap()) == fraction_string(frac(18, 5) - frac(1, 1035));
    if !failed.is_empty() || !corollary {
        return outcome(false, format!("exact identities failing: {failed:?}"));
    }
    if printed.holds && beta.value == "47144/58587" {
        return outcome(false, format!("printed 47144/68587 is not reproducible: exact value is {}", beta.value));
    }
    outcome(true, format!("{} exact identities", r.entries.len()))
}

fn c11_pseudo_conformal() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [3, 5] {
        let c = ctx(p, 1);
        let f = c.field().clone();
        let mut rng = seeded(11_000 + p as u64);
        for _ in 0..20 {
            let values = (0..c.len())
                .map(|_| {
                    if rng.gen_bool(0.6) {
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            let z = f.from_int(rng.gen_range(0..p) as i64);
            let r = pseudo_conformal_identity(&c, &SliceFn { z, values }, EXEC).unwrap();
            worst = worst.max(r.rel_err);
        }
    }
    outcome(worst < PSEUDO_TOL, format!("max rel err {worst:.2e} over 40 slices"))
}

fn c12_regular() -> Outcome {
    let mut bad = 0;
    let mut max_pieces = 0;
    let mut bound = 0;
    for p in [5u32, 7] {
        let f = Arc::new(FieldCtx::prime(p).unwrap());
        let mut rng = seeded(12_000 + p as u64);
        let b = level_bound(p) * slice_class_bound(p);
        bound = bound.max(b);
        for _ in 0..50 {
            let density: f64 = rng.gen_range(0.05..1.0);
            let g = GridFn::from_fn(f.clone(), 3, Measure::Counting, |_| {
                if rng.gen_bool(density) {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 10f64.powi(rng.gen_range(-12..3))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .unwrap();
            let d = regular_decomposition(&g, EXEC).unwrap();
            let exact = d.reconstruct(f.clone()).unwrap() == g && d.levels.supports_disjoint();
            let pieces_ok = d.all_pieces().all(|piece| regularity_stats(piece).is_ok());
            max_pieces = max_pieces.max(d.total_pieces);
            if !(exact && pieces_ok && d.total_pieces <= b) {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("{bad}/100 failures; max pieces {max_pieces} <= (floor(10 log2 q)+2)(floor(log2 q^2)+1) = {bound}"))
}

fn c13_pipeline() -> Outcome {
    let f = Arc::new(FieldCtx::new(3, 4).unwrap());
    let start = Instant::now();
    let cfg = PlantedGrid::gf81_default(&f).unwrap().build(f.clone()).unwrap();
    let r = incidence_structure_pipeline(&cfg, &PipelineOptions::default(), EXEC).unwrap();
    let t = start.elapsed();
    let mut notes = Vec::new();
    let mut pass = r.status == PipelineStatus::Ok && t < PIPELINE_BUDGET;
    if let (Some(w), Some(wa), Some(wb)) = (&r.grid, &r.witness_a, &r.witness_b) {
        pass &= 2 * w.grid_coverage >= cfg.points().len();
        pass &= wa.subfield_order == 9 && wb.subfield_order == 9;
        pass &= wa.exceptional.len() <= 8 && wb.exceptional.len() <= 8;
        pass &= wa.verify(&f, &w.a) && wb.verify(&f, &w.b);
        notes.push(format!(
            "coverage {}/81, orders ({}, {}), |X| = ({}, {}), {:.2}s",
            w.grid_coverage,
            wa.subfield_order,
            wb.subfield_order,
            wa.exceptional.len(),
            wb.exceptional.len(),
            t.as_secs_f64()
        ));
    } else {
        pass = false;
        notes.push("no witness".into());
    }
    let mut failed_ok = 0;
    for s in 0..20 {
        let cfg = PointLineConfig::random(f.clone(), 81, 81, &mut seeded(13_000 + s));
        let r = incidence_structure_pipeline(&cfg, &PipelineOptions::default(), EXEC);
        if matches!(r, Ok(ref rep) if rep.status == PipelineStatus::HypothesisFailed) {
            failed_ok += 1;
        }
    }
    pass &= failed_ok == 20;
    notes.push(format!("{failed_ok}/20 random configs hypothesis-failed"));
    outcome(pass, notes.join("; "))
}

fn c14_trivial_bound() -> Outcome {
    let mut bad = 0;
    for p in [7, 11] {
        let f = Arc::new(FieldCtx::prime(p).unwrap());
        let mut rng = seeded(14_000 + p as u64);
        let q2 = (p * p) as usize;
        for _ in 0..200 {
            let np = rng.gen_range(0..=q2);
            let nl = rng.gen_range(0..=q2 + p as usize);
            let cfg = PointLineConfig::random(f.clone(), np, nl, &mut rng);
            let tb = cfg.trivial_bound(EXEC);
            if !tb.holds || tb.incidences != cfg.count_incidences_naive(EXEC) {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("{bad}/400 violations"))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 14] = [
        (1, "Fourier dimension", c1_fourier_dimension),
        (2, "kernel closed form", c2_kernel),
        (3, "L4 / quadruple identity", c3_l4_identity),
        (4, "Galilean claim", c4_galilean),
        (5, "line-map dichotomy", c5_line_map),
        (6, "L4 incidence chain", c6_l4_chain),
        (7, "subspace sharpness", c7_sharpness),
        (8, "Stein-Tomas validators", c8_stein_tomas),
        (9, "local-restriction sweep", c9_local),
        (10, "exponent algebra", c10_exponents),
        (11, "pseudo-conformal identity", c11_pseudo_conformal),
        (12, "regular decomposition", c12_regular),
        (13, "incidence structure pipeline", c13_pipeline),
        (14, "trivial incidence bound", c14_trivial_bound),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {id:>2} {name}: {} [{:.2}s]", o.detail, start.elapsed().as_secs_f64());
        if !o.pass && !DOCUMENTED.iter().any(|&(d, why)| d == id && why == o.detail) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
