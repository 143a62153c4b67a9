//! `verify --suite core`: the library's validators on one field, with small
//! seeded instance counts. Any failing check makes the command exit 1.

use ffrestrict::estimator::{exponent_algebra, st_bounded_level, st_decay, st_support_level, subspace_sharpness, EstimatorParams, StContext};
use ffrestrict::incidence::{
    additive_quadruples, additive_quadruples_cubic, galilean_reduction_check, incidence_from_energy_worst,
    l4_identity_check, line_map_injectivity, PointLineConfig,
};
use ffrestrict::paraboloid::{fourier_dimension_report, gauss_sum, kernel_formula_check, pseudo_conformal_identity};
use ffrestrict::rng::substream;
use ffrestrict::{GridFn, Measure};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::commands::{paraboloid_ctx, random_slice, random_subset, IDENTITY_TOL};
use crate::{to_value, CliResult, Ctx, Outcome, VerifyArgs};

#[derive(Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

pub fn verify(ctx: &mut Ctx, a: &VerifyArgs) -> CliResult<Outcome> {
    let pctx = paraboloid_ctx(&ctx.field)?;
    let f = ctx.field.clone();
    let (exec, seed, n) = (ctx.exec, ctx.seed, a.trials as u64);
    let q = f.order();
    let mut checks = Vec::new();

    let fd = ctx.stage("fdim", |_| fourier_dimension_report(&pctx, exec))?;
    checks.push(check(
        "fourier dimension",
        (fd.max_nonzero - fd.reference).abs() < IDENTITY_TOL && fd.max_on_flat < IDENTITY_TOL,
        format!("max |dsigma^v| = {:.12}, 1/q = {:.12}", fd.max_nonzero, fd.reference),
    ));

    let k = ctx.stage("kernel", |_| kernel_formula_check(&pctx, exec))?;
    checks.push(check("kernel closed form", k.max_deviation < IDENTITY_TOL, format!("max deviation {:.2e}", k.max_deviation)));

    let g_err = f.elements().skip(1).map(|x| (gauss_sum(&f, x).norm_sqr() - q as f64).abs()).fold(0.0, f64::max);
    checks.push(check("gauss sums", g_err < IDENTITY_TOL, format!("max ||S(a)|^2 - q| = {g_err:.2e}")));

    let (mut worst, mut mismatch, mut unequal) = (0.0f64, 0, 0);
    ctx.stage("energy", |_| -> CliResult<()> {
        for i in 0..n {
            let size = substream(seed, 1000 + i).gen_range(1..=pctx.len());
            let e = random_subset(&pctx, size, seed, i);
            worst = worst.max(l4_identity_check(&pctx, &e, exec)?.rel_err);
            if additive_quadruples(&pctx, &e, exec)? != additive_quadruples_cubic(&pctx, &e, exec)? {
                mismatch += 1;
            }
            let b = pctx.point(substream(seed, 2000 + i).gen_range(0..pctx.len()));
            if !galilean_reduction_check(&pctx, &e, b, exec)?.equal {
                unequal += 1;
            }
        }
        Ok(())
    })?;
    checks.push(check(
        "L4 identity",
        worst < IDENTITY_TOL && mismatch == 0,
        format!("max rel err {worst:.2e}, {mismatch} quadruple mismatches"),
    ));
    checks.push(check("galilean claim", unequal == 0, format!("{unequal}/{n} unequal")));

    let lm = line_map_injectivity(&f);
    checks.push(check(
        "line map",
        lm.injective != f.minus_one_is_square(),
        format!("injective = {}, -1 square = {}", lm.injective, f.minus_one_is_square()),
    ));

    if f.minus_one_is_square() {
        let s = ctx.stage("sharpness", |_| subspace_sharpness(&pctx, 3.0, exec))?;
        checks.push(check("subspace sharpness", s.rel_err < IDENTITY_TOL, format!("rel err {:.2e}", s.rel_err)));
    } else {
        let mut bad = 0;
        ctx.stage("reduction", |_| -> CliResult<()> {
            for i in 0..n {
                let e = random_subset(&pctx, 1 + (i as usize * 7) % pctx.len(), seed, 3000 + i);
                let w = incidence_from_energy_worst(&pctx, &e, exec)?;
                if !(w.chain_holds && w.l4_bound_holds) {
                    bad += 1;
                }
            }
            Ok(())
        })?;
        checks.push(check("energy to incidence chain", bad == 0, format!("{bad}/{n} failures")));
    }

    let mut violations = 0;
    for i in 0..n {
        let mut rng = substream(seed, 4000 + i);
        let np = rng.gen_range(0..=(q * q) as usize);
        let nl = rng.gen_range(0..=(q * q + q) as usize);
        if !PointLineConfig::random(f.clone(), np, nl, &mut rng).trivial_bound(exec).holds {
            violations += 1;
        }
    }
    checks.push(check("trivial incidence bound", violations == 0, format!("{violations}/{n} violations")));

    let st = StContext::new(pctx.clone(), exec)?;
    let params = EstimatorParams::default();
    let cap = ctx.caps.stein_tomas;
    let (mut st_fail, mut st_const) = (0, 0.0f64);
    ctx.stage("stein_tomas", |_| -> CliResult<()> {
        for i in 0..n {
            let mut rng = substream(seed, 5000 + i);
            let density: f64 = rng.gen_range(0.01..0.5);
            let mut g = GridFn::from_fn(f.clone(), 3, Measure::Counting, |_| {
                if rng.gen_bool(density) {
                    Complex64::from_polar(rng.gen_range(0.5..=1.0), rng.gen_range(0.0..std::f64::consts::TAU))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })?;
            g.values_mut()[0] = Complex64::new(1.0, 0.0);
            for r in [
                st_bounded_level(&st, &g, &params, cap, exec)?,
                st_support_level(&st, &g, &params, cap, exec)?,
                st_decay(&st, &g, cap, exec)?,
            ] {
                st_const = st_const.max(r.measured_constant);
                if !r.holds {
                    st_fail += 1;
                }
            }
        }
        Ok(())
    })?;
    checks.push(check(
        "stein-tomas validators",
        st_fail == 0,
        format!("{st_fail}/{} failures, max constant {st_const:.4} (cap {cap})", 3 * n),
    ));

    let mut pc = 0.0f64;
    for i in 0..n.min(5) {
        pc = pc.max(pseudo_conformal_identity(&pctx, &random_slice(&pctx, seed, 6000 + i), exec)?.rel_err);
    }
    checks.push(check("pseudo-conformal identity", pc < IDENTITY_TOL, format!("max rel err {pc:.2e}")));

    let alg = exponent_algebra()?;
    let failed: Vec<&str> = alg.entries.iter().filter(|e| !e.holds).map(|e| e.name.as_str()).collect();
    checks.push(check("exponent algebra", failed.is_empty(), format!("{} identities, failing: {failed:?}", alg.entries.len())));

    let passed = checks.iter().all(|c| c.passed);
    Ok(Outcome { result: serde_json::json!({ "suite": a.suite, "field": f.description(), "checks": to_value(&checks) }), passed })
}
