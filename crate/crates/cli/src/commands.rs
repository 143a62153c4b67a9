use std::sync::Arc;

use ffrestrict::estimator::exponents::{parse_fraction, to_f64};
use ffrestrict::estimator::{
    exponent_algebra, l4_incidence_bound_check, local_restriction_sweep, mt_st_consistency, regular_l2_bound_check,
    search_lower_bound, subspace_sharpness, Family, SearchOptions,
};
use ffrestrict::fourier::rel_err;
use ffrestrict::incidence::{
    additive_quadruples, additive_quadruples_cubic, incidence_from_energy_worst, l4_identity_check, PointLineConfig,
};
use ffrestrict::paraboloid::{
    fourier_dimension_report, gauss_sum, kernel_formula_check, pseudo_conformal_identity, ParaboloidCtx, SliceFn,
};
use ffrestrict::regular::{planted_regular_set, regular_decomposition, regularity_stats};
use ffrestrict::rng::{seeded, substream};
use ffrestrict::structure::{incidence_structure_pipeline, GridOptions, PipelineOptions, PlantedGrid};
use ffrestrict::{FieldCtx, GridFn, Measure};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use serde_json::{json, Value};

use crate::{
    read_json, to_value, CliError, CliResult, Ctx, EstimateArgs, EstimateOp, GenerateArgs, GenerateKind, IncidenceArgs,
    IncidenceOp, Outcome, ParaboloidArgs, ParaboloidOp, RegularArgs, StructureArgs,
};

/// Tolerance for identities that hold exactly in real arithmetic.
pub const IDENTITY_TOL: f64 = 1e-9;

pub fn paraboloid_ctx(field: &Arc<FieldCtx>) -> CliResult<Arc<ParaboloidCtx>> {
    Ok(Arc::new(ParaboloidCtx::new(field.clone())?))
}

/// Seeded random slice with complex values on about half the plane.
pub fn random_slice(pctx: &ParaboloidCtx, seed: u64, index: u64) -> SliceFn {
    let mut rng = substream(seed, index);
    let z = pctx.field().elem(rng.gen_range(0..pctx.order())).expect("below q");
    let values = (0..pctx.len())
        .map(|_| {
            if rng.gen_bool(0.5) {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    SliceFn { z, values }
}

/// Seeded random nonempty subset of the paraboloid, as sorted ranks.
pub fn random_subset(pctx: &ParaboloidCtx, size: usize, seed: u64, index: u64) -> Vec<usize> {
    let mut rng = substream(seed, index);
    let size = size.clamp(1, pctx.len());
    let mut e = sample(&mut rng, pctx.len(), size).into_vec();
    e.sort_unstable();
    e
}

pub fn paraboloid(ctx: &mut Ctx, a: &ParaboloidArgs) -> CliResult<Outcome> {
    let pctx = paraboloid_ctx(&ctx.field)?;
    match a.op {
        ParaboloidOp::Fdim => {
            let r = ctx.stage("fdim", |c| fourier_dimension_report(&pctx, c.exec))?;
            let passed = (r.max_nonzero - r.reference).abs() < IDENTITY_TOL && r.max_on_flat < IDENTITY_TOL;
            Ok(Outcome { result: to_value(&r), passed })
        }
        ParaboloidOp::Kernel => {
            let r = ctx.stage("kernel", |c| kernel_formula_check(&pctx, c.exec))?;
            let passed = r.max_deviation < IDENTITY_TOL && r.max_on_flat < IDENTITY_TOL;
            Ok(Outcome { result: to_value(&r), passed })
        }
        ParaboloidOp::Gauss => {
            let f = ctx.field.clone();
            let q = f.order() as f64;
            let rows: Vec<Value> = ctx.stage("gauss", |_| {
                f.elements()
                    .map(|a| {
                        let s = gauss_sum(&f, a);
                        json!({ "a": a.value(), "re": s.re, "im": s.im, "modulus_sq": s.norm_sqr() })
                    })
                    .collect()
            });
            let err = f
                .elements()
                .map(|a| {
                    let s = gauss_sum(&f, a);
                    if a.is_zero() { (s.re - q).abs() + s.im.abs() } else { (s.norm_sqr() - q).abs() }
                })
                .fold(0.0, f64::max);
            Ok(Outcome { result: json!({ "field": f.description(), "max_error": err, "sums": rows }), passed: err < IDENTITY_TOL })
        }
        ParaboloidOp::Pseudoconformal => {
            let reports = ctx.stage("pseudoconformal", |c| {
                (0..a.slices as u64)
                    .map(|i| pseudo_conformal_identity(&pctx, &random_slice(&pctx, c.seed, i), c.exec))
                    .collect::<Result<Vec<_>, _>>()
            })?;
            let worst = reports.iter().map(|r| r.rel_err).fold(0.0, f64::max);
            Ok(Outcome {
                result: json!({ "field": ctx.field.description(), "max_rel_err": worst, "slices": reports }),
                passed: worst < IDENTITY_TOL,
            })
        }
    }
}

fn load_or_random_config(ctx: &Ctx, path: &Option<std::path::PathBuf>, points: usize, lines: usize) -> CliResult<PointLineConfig> {
    match path {
        Some(p) => {
            let cfg: PointLineConfig = read_json(p)?;
            if cfg.field().as_ref() != ctx.field.as_ref() {
                return Err(CliError::Usage(format!(
                    "config field {} differs from --field {}",
                    cfg.field().description(),
                    ctx.field.description()
                )));
            }
            Ok(cfg)
        }
        None => Ok(PointLineConfig::random(ctx.field.clone(), points, lines, &mut seeded(ctx.seed))),
    }
}

pub fn incidence(ctx: &mut Ctx, a: &IncidenceArgs) -> CliResult<Outcome> {
    match a.op {
        IncidenceOp::Count | IncidenceOp::Bound => {
            let cfg = load_or_random_config(ctx, &a.config_file, a.points, a.lines)?;
            let hashed = ctx.stage("count", |c| cfg.count_incidences(c.exec));
            let naive = ctx.stage("count_naive", |c| cfg.count_incidences_naive(c.exec));
            let mut result = json!({
                "field": ctx.field.description(),
                "points": cfg.points().len(),
                "lines": cfg.lines().len(),
                "incidences": hashed,
                "incidences_naive": naive,
            });
            let mut passed = hashed == naive;
            if a.op == IncidenceOp::Bound {
                let tb = ctx.stage("bound", |c| cfg.trivial_bound(c.exec));
                passed &= tb.holds;
                result["trivial_bound"] = to_value(&tb);
            }
            Ok(Outcome { result, passed })
        }
        IncidenceOp::Energy | IncidenceOp::Reduction => {
            let pctx = paraboloid_ctx(&ctx.field)?;
            // Points ω of a config file stand for (ω, ω·ω) on the paraboloid.
            let e: Vec<usize> = match &a.config_file {
                Some(_) => {
                    let cfg = load_or_random_config(ctx, &a.config_file, 0, 0)?;
                    cfg.points().iter().map(|&w| pctx.rank(w)).collect()
                }
                None => random_subset(&pctx, a.points, ctx.seed, 0),
            };
            if a.op == IncidenceOp::Energy {
                let hashed = ctx.stage("quadruples", |c| additive_quadruples(&pctx, &e, c.exec))?;
                let cubic = ctx.stage("quadruples_cubic", |c| additive_quadruples_cubic(&pctx, &e, c.exec))?;
                let id = ctx.stage("l4_identity", |c| l4_identity_check(&pctx, &e, c.exec))?;
                let passed = hashed == cubic && id.rel_err < IDENTITY_TOL;
                Ok(Outcome {
                    result: json!({
                        "field": ctx.field.description(),
                        "size": e.len(),
                        "quadruples": hashed,
                        "quadruples_cubic": cubic,
                        "l4_identity": id,
                    }),
                    passed,
                })
            } else {
                let w = ctx.stage("reduction", |c| incidence_from_energy_worst(&pctx, &e, c.exec))?;
                let b = ctx.stage("l4_bound", |c| l4_incidence_bound_check(&pctx, &e, c.exec))?;
                let passed = w.chain_holds && w.l4_bound_holds && b.holds && b.integer_chain_holds;
                Ok(Outcome { result: json!({ "reduction": w, "l4_bound": b }), passed })
            }
        }
    }
}

fn largest_proper_subfield(field: &FieldCtx) -> CliResult<u32> {
    field
        .subfields()
        .into_iter()
        .map(|s| s.order)
        .filter(|&o| o < field.order())
        .max()
        .ok_or_else(|| CliError::Usage(format!("{} has no proper subfield", field.description())))
}

fn planted_grid(field: &FieldCtx, order: Option<u32>) -> CliResult<PlantedGrid> {
    let order = match order {
        Some(o) => o,
        None => largest_proper_subfield(field)?,
    };
    if field.p() == 3 && field.k() == 4 && order == 9 {
        return Ok(PlantedGrid::gf81_default(field)?);
    }
    let one = field.from_int(1);
    Ok(PlantedGrid { subfield_order: order, x: one, tau: field.from_int(0), x_prime: one, tau_prime: field.from_int(0) })
}

pub fn structure(ctx: &mut Ctx, a: &StructureArgs) -> CliResult<Outcome> {
    let cfg = match &a.config_file {
        Some(_) => load_or_random_config(ctx, &a.config_file, 0, 0)?,
        None => planted_grid(&ctx.field, None)?.build(ctx.field.clone())?,
    };
    let defaults = GridOptions::default();
    let opts = PipelineOptions {
        grid: GridOptions { k: a.loss_factor, budget: a.budget.unwrap_or(defaults.budget), seed: ctx.seed, ..defaults },
        ..PipelineOptions::default()
    };
    let r = ctx.stage("pipeline", |c| incidence_structure_pipeline(&cfg, &opts, c.exec))?;
    let mut passed = true;
    if let Some(w) = &r.grid {
        passed &= w.check_invariants(&ctx.field).is_ok();
        if let Some(s) = &r.witness_a {
            passed &= s.verify(&ctx.field, &w.a);
        }
        if let Some(s) = &r.witness_b {
            passed &= s.verify(&ctx.field, &w.b);
        }
    }
    Ok(Outcome { result: to_value(&r), passed })
}

fn exponent(s: &str) -> CliResult<f64> {
    Ok(to_f64(parse_fraction(s)?))
}

pub fn estimate(ctx: &mut Ctx, a: &EstimateArgs) -> CliResult<Outcome> {
    match a.op {
        EstimateOp::Search => {
            let pctx = paraboloid_ctx(&ctx.field)?;
            let opts = SearchOptions {
                p_exp: exponent(&a.p)?,
                q_exp: exponent(&a.q)?,
                families: Family::parse_list(&a.family)?,
                seed: ctx.seed,
                iterations: a.iters,
                restarts: a.restarts,
            };
            let r = ctx.stage("search", |c| search_lower_bound(&pctx, &opts, c.exec))?;
            let again = ctx.stage("recompute", |c| r.recompute(&pctx, c.exec))?;
            let err = rel_err(again, r.value);
            Ok(Outcome { result: json!({ "report": r, "recomputed": again, "recompute_rel_err": err }), passed: err < IDENTITY_TOL })
        }
        EstimateOp::Sharpness => {
            let pctx = paraboloid_ctx(&ctx.field)?;
            let q = exponent(&a.q)?;
            let r = ctx.stage("sharpness", |c| subspace_sharpness(&pctx, q, c.exec))?;
            let passed = r.rel_err < IDENTITY_TOL;
            Ok(Outcome { result: to_value(&r), passed })
        }
        EstimateOp::Algebra => {
            let r = ctx.stage("algebra", |_| exponent_algebra())?;
            Ok(Outcome { passed: r.all_hold, result: to_value(&r) })
        }
        EstimateOp::LocalSweep => {
            let cap = ctx.caps.local_restriction;
            let r = ctx.stage("sweep", |c| local_restriction_sweep(&a.primes, a.iters, c.seed, cap, c.exec))?;
            Ok(Outcome { passed: r.all_hold, result: to_value(&r) })
        }
        EstimateOp::MtSt => {
            let pctx = paraboloid_ctx(&ctx.field)?;
            let cap = ctx.caps.mt_st;
            let r = ctx.stage("mt_st", |c| mt_st_consistency(&pctx, a.iters, c.seed, cap, c.exec))?;
            Ok(Outcome { passed: r.holds, result: to_value(&r) })
        }
    }
}

/// Random function on F³ whose magnitudes span many dyadic levels.
pub fn random_grid_fn(field: &Arc<FieldCtx>, density: f64, seed: u64) -> CliResult<GridFn> {
    if !(0.0..=1.0).contains(&density) {
        return Err(CliError::Usage(format!("density {density} outside [0, 1]")));
    }
    let mut rng = seeded(seed);
    Ok(GridFn::from_fn(field.clone(), 3, Measure::Counting, |_| {
        if rng.gen_bool(density) {
            Complex64::from_polar(2f64.powi(-rng.gen_range(0..24)), rng.gen_range(0.0..std::f64::consts::TAU))
        } else {
            Complex64::new(0.0, 0.0)
        }
    })?)
}

pub fn regular(ctx: &mut Ctx, a: &RegularArgs) -> CliResult<Outcome> {
    let g = match &a.config_file {
        Some(p) => {
            let g: GridFn = read_json(p)?;
            if g.dim() != 3 || g.measure() != Measure::Counting {
                return Err(CliError::Usage("regular expects a counting-measure function on F³".into()));
            }
            g
        }
        None => random_grid_fn(&ctx.field, a.density, ctx.seed)?,
    };
    let d = ctx.stage("decompose", |c| regular_decomposition(&g, c.exec))?;
    let exact = d.reconstruct(ctx.field.clone())? == g && d.levels.supports_disjoint();
    let stats: Vec<Value> = d
        .all_pieces()
        .map(|p| match regularity_stats(p) {
            Ok(s) => to_value(&s),
            Err(e) => json!({ "error": e.to_string() }),
        })
        .collect();
    let stats_ok = stats.iter().all(|s| s.get("error").is_none());
    let bound = d.level_bound * d.slice_class_bound;
    let mut passed = exact && stats_ok && d.total_pieces <= bound;
    let mut result = json!({
        "field": ctx.field.description(),
        "support": g.values().iter().filter(|v| v.norm_sqr() > 0.0).count(),
        "levels": d.levels.pieces.len(),
        "tail": d.levels.tail.len(),
        "total_pieces": d.total_pieces,
        "piece_bound": bound,
        "exact_reconstruction": exact,
        "pieces": stats,
    });
    if a.bound {
        let pctx = paraboloid_ctx(&ctx.field)?;
        let cap = ctx.caps.regular_l2;
        let reports = ctx.stage("regular_l2", |c| {
            d.all_pieces().map(|p| regular_l2_bound_check(&pctx, p, None, cap, c.exec)).collect::<Result<Vec<_>, _>>()
        })?;
        passed &= reports.iter().all(|r| r.holds);
        result["regular_l2"] = to_value(&reports);
    }
    Ok(Outcome { result, passed })
}

/// Merge a `construction` record into a serialized instance.
fn with_construction(mut v: Value, construction: Value) -> Value {
    v["construction"] = construction;
    v
}

pub fn generate(ctx: &mut Ctx, a: &GenerateArgs) -> CliResult<Outcome> {
    let f = ctx.field.clone();
    let result = match a.kind {
        GenerateKind::SubfieldGrid => {
            let planted = planted_grid(&f, a.subfield_order)?;
            let cfg = planted.build(f.clone())?;
            with_construction(to_value(&cfg), json!({ "kind": "subfield-grid", "planted": planted }))
        }
        GenerateKind::RegularSet => {
            let piece = planted_regular_set(f.order(), a.slices, a.slice_size, &mut seeded(ctx.seed))?;
            let stats = regularity_stats(&piece)?;
            let g = piece.to_grid(f.clone())?;
            with_construction(
                to_value(&g),
                json!({ "kind": "regular-set", "seed": ctx.seed, "slices": a.slices, "slice_size": a.slice_size, "stats": stats }),
            )
        }
        GenerateKind::RandomPoints => {
            let cfg = PointLineConfig::random(f.clone(), a.n, a.lines, &mut seeded(ctx.seed));
            with_construction(
                to_value(&cfg),
                json!({ "kind": "random-points", "seed": ctx.seed, "points": a.n, "lines": a.lines }),
            )
        }
    };
    Ok(Outcome { result, passed: true })
}
