//! Points and lines in F², incidence counts, and the reduction from additive
//! quadruples on the paraboloid to point–line incidences.
//!
//! A line is stored as `[a:b:c]`, meaning `ax + by = c`, scaled so that the
//! first nonzero entry among `(a, b)` is 1. Two lines are equal iff their
//! stored triples are.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ffield::{Elem, FieldCtx};
use crate::fourier::{rel_err, Exponent};
use crate::paraboloid::{extension, ParaboloidCtx, Point3, SurfaceFn};

pub type Point2 = [Elem; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[Elem; 3]", into = "[Elem; 3]")]
pub struct Line {
    pub a: Elem,
    pub b: Elem,
    pub c: Elem,
}

impl From<[Elem; 3]> for Line {
    fn from([a, b, c]: [Elem; 3]) -> Self {
        Line { a, b, c }
    }
}

impl From<Line> for [Elem; 3] {
    fn from(l: Line) -> Self {
        [l.a, l.b, l.c]
    }
}

impl Line {
    /// The normalized line `ax + by = c`.
    pub fn new(field: &FieldCtx, a: Elem, b: Elem, c: Elem) -> Result<Line> {
        let lead = if !a.is_zero() {
            a
        } else if !b.is_zero() {
            b
        } else {
            return Err(Error::ZeroDirection);
        };
        let s = field.inv(lead)?;
        Ok(Line { a: field.mul(a, s), b: field.mul(b, s), c: field.mul(c, s) })
    }

    /// Whether `(a, b, c)` is already in normalized form.
    pub fn is_normalized(&self) -> bool {
        self.a == Elem::ONE || (self.a.is_zero() && self.b == Elem::ONE)
    }

    /// The line through two distinct points.
    pub fn through(field: &FieldCtx, p: Point2, r: Point2) -> Result<Line> {
        if p == r {
            return Err(Error::CoincidentPoints);
        }
        // direction (dx, dy) has normal (dy, -dx)
        let dx = field.sub(r[0], p[0]);
        let dy = field.sub(r[1], p[1]);
        let (a, b) = (dy, field.neg(dx));
        let c = field.add(field.mul(a, p[0]), field.mul(b, p[1]));
        Line::new(field, a, b, c)
    }

    pub fn contains(&self, field: &FieldCtx, p: Point2) -> bool {
        field.add(field.mul(self.a, p[0]), field.mul(self.b, p[1])) == self.c
    }

    /// `y = const`.
    pub fn is_horizontal(&self) -> bool {
        self.a.is_zero()
    }

    /// `x = const`.
    pub fn is_vertical(&self) -> bool {
        self.b.is_zero()
    }

    /// The `q` points of the line, ordered by the free coordinate.
    pub fn points<'f>(&self, field: &'f FieldCtx) -> impl Iterator<Item = Point2> + 'f {
        let this = *self;
        field.elements().map(move |t| {
            if this.a.is_zero() {
                // y = c
                [t, this.c]
            } else {
                // x = c - b·y
                [field.sub(this.c, field.mul(this.b, t)), t]
            }
        })
    }

    /// Chart form `x = c·y + d`, available for non-horizontal lines.
    pub fn as_x_of_y(&self, field: &FieldCtx) -> Option<(Elem, Elem)> {
        (!self.is_horizontal()).then(|| (field.neg(self.b), self.c))
    }

    pub fn from_x_of_y(field: &FieldCtx, c: Elem, d: Elem) -> Line {
        Line::new(field, Elem::ONE, field.neg(c), d).expect("a = 1")
    }

    /// The stored `[a, b, c]` as integers.
    pub fn triple(&self) -> [u32; 3] {
        [self.a.0, self.b.0, self.c.0]
    }
}

/// Number of lines in F²: `q² + q`.
pub fn line_count(q: u32) -> u64 {
    q as u64 * q as u64 + q as u64
}

/// The `i`-th normalized line: `[1:b:c]` for `i < q²`, then `[0:1:c]`.
pub fn line_from_index(q: u32, i: u64) -> Line {
    let q64 = q as u64;
    if i < q64 * q64 {
        Line { a: Elem::ONE, b: Elem((i % q64) as u32), c: Elem((i / q64) as u32) }
    } else {
        Line { a: Elem::ZERO, b: Elem::ONE, c: Elem((i - q64 * q64) as u32) }
    }
}

/// Points and lines in F², both deduplicated and sorted.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ConfigRepr", into = "ConfigRepr")]
pub struct PointLineConfig {
    field: Arc<FieldCtx>,
    points: Vec<Point2>,
    lines: Vec<Line>,
    #[serde(skip)]
    line_counts: OnceLock<Vec<u32>>,
}

impl PartialEq for PointLineConfig {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.points == other.points && self.lines == other.lines
    }
}

#[derive(Serialize, Deserialize)]
struct ConfigRepr {
    field: String,
    points: Vec<[u32; 2]>,
    lines: Vec<[u32; 3]>,
}

impl From<PointLineConfig> for ConfigRepr {
    fn from(c: PointLineConfig) -> Self {
        ConfigRepr {
            field: c.field.description(),
            points: c.points.iter().map(|p| [p[0].0, p[1].0]).collect(),
            lines: c.lines.iter().map(|l| l.triple()).collect(),
        }
    }
}

impl TryFrom<ConfigRepr> for PointLineConfig {
    type Error = Error;

    fn try_from(r: ConfigRepr) -> Result<Self> {
        let field = Arc::new(FieldCtx::parse(&r.field)?);
        let pts = r
            .points
            .iter()
            .map(|p| Ok([field.elem(p[0])?, field.elem(p[1])?]))
            .collect::<Result<Vec<_>>>()?;
        let lines = r
            .lines
            .iter()
            .map(|l| Line::new(&field, field.elem(l[0])?, field.elem(l[1])?, field.elem(l[2])?))
            .collect::<Result<Vec<_>>>()?;
        Ok(PointLineConfig::new(field, pts, lines))
    }
}

impl PointLineConfig {
    /// Lines must come from [`Line::new`] (or be normalized); duplicates are dropped.
    pub fn new(field: Arc<FieldCtx>, mut points: Vec<Point2>, lines: Vec<Line>) -> PointLineConfig {
        points.sort_unstable();
        points.dedup();
        let mut lines: Vec<Line> = lines
            .into_iter()
            .map(|l| if l.is_normalized() { l } else { Line::new(&field, l.a, l.b, l.c).expect("nonzero direction") })
            .collect();
        lines.sort_unstable();
        lines.dedup();
        PointLineConfig { field, points, lines, line_counts: OnceLock::new() }
    }

    /// Every point and every line of F².
    pub fn full_plane(field: Arc<FieldCtx>) -> PointLineConfig {
        let q = field.order();
        let points = (0..q * q).map(|i| [Elem(i % q), Elem(i / q)]).collect();
        let lines = (0..line_count(q)).map(|i| line_from_index(q, i)).collect();
        PointLineConfig::new(field, points, lines)
    }

    /// Uniformly random distinct points and lines.
    pub fn random<R: Rng>(field: Arc<FieldCtx>, n_points: usize, n_lines: usize, rng: &mut R) -> PointLineConfig {
        let q = field.order();
        let np = (q as usize * q as usize).min(n_points);
        let nl = (line_count(q) as usize).min(n_lines);
        let points = sample(rng, q as usize * q as usize, np)
            .into_iter()
            .map(|i| [Elem(i as u32 % q), Elem(i as u32 / q)])
            .collect();
        let lines = sample(rng, line_count(q) as usize, nl)
            .into_iter()
            .map(|i| line_from_index(q, i as u64))
            .collect();
        PointLineConfig::new(field, points, lines)
    }

    pub fn field(&self) -> &Arc<FieldCtx> {
        &self.field
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    fn point_bitmap(&self) -> Vec<bool> {
        let q = self.field.order() as usize;
        let mut m = vec![false; q * q];
        for p in &self.points {
            m[p[0].0 as usize + q * p[1].0 as usize] = true;
        }
        m
    }

    /// `|l ∩ P|` for each line, cached.
    pub fn line_counts(&self) -> &[u32] {
        self.line_counts.get_or_init(|| {
            let bitmap = self.point_bitmap();
            let q = self.field.order() as usize;
            self.lines
                .iter()
                .map(|l| l.points(&self.field).filter(|p| bitmap[p[0].0 as usize + q * p[1].0 as usize]).count() as u32)
                .collect()
        })
    }

    /// Number of lines through each point.
    pub fn point_degrees(&self) -> Vec<u32> {
        let idx: HashMap<Point2, usize> = self.points.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut deg = vec![0u32; self.points.len()];
        for l in &self.lines {
            for p in l.points(&self.field) {
                if let Some(&i) = idx.get(&p) {
                    deg[i] += 1;
                }
            }
        }
        deg
    }

    /// `|I(P, L)|`, walking each line's points against a membership bitmap.
    pub fn count_incidences(&self, exec: Exec) -> u64 {
        if let Some(c) = self.line_counts.get() {
            return c.iter().map(|&x| x as u64).sum();
        }
        let bitmap = self.point_bitmap();
        let q = self.field.order() as usize;
        exec.sum_u64(self.lines.len(), |i| {
            self.lines[i]
                .points(&self.field)
                .filter(|p| bitmap[p[0].0 as usize + q * p[1].0 as usize])
                .count() as u64
        })
    }

    /// `|I(P, L)|` by testing every pair.
    pub fn count_incidences_naive(&self, exec: Exec) -> u64 {
        exec.sum_u64(self.lines.len(), |i| {
            let l = self.lines[i];
            self.points.iter().filter(|&&p| l.contains(&self.field, p)).count() as u64
        })
    }

    pub fn trivial_bound(&self, exec: Exec) -> TrivialBound {
        trivial_bound(self.count_incidences(exec), self.points.len() as u64, self.lines.len() as u64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configs always serialize")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrivialBound {
    pub incidences: u64,
    pub points: u64,
    pub lines: u64,
    /// `min(|P|^{1/2}|L| + |P|, |P||L|^{1/2} + |L|)`.
    pub bound: f64,
    /// Decided in integers, not from `bound`.
    pub holds: bool,
}

/// Whether `i ≤ √s·t + s`, i.e. `i ≤ s` or `(i - s)² ≤ s·t²`.
fn le_sqrt_form(i: u64, s: u64, t: u64) -> bool {
    i <= s || {
        let d = (i - s) as u128;
        d * d <= s as u128 * t as u128 * t as u128
    }
}

pub fn trivial_bound(incidences: u64, points: u64, lines: u64) -> TrivialBound {
    let (p, l) = (points as f64, lines as f64);
    let bound = (p.sqrt() * l + p).min(p * l.sqrt() + l);
    let holds = le_sqrt_form(incidences, points, lines) && le_sqrt_form(incidences, lines, points);
    TrivialBound { incidences, points, lines, bound, holds }
}

/// `ℓ(y) = {x : y·x = y·y}` for `y ≠ 0`.
pub fn line_map(field: &FieldCtx, y: Point2) -> Result<Line> {
    if y[0].is_zero() && y[1].is_zero() {
        return Err(Error::ZeroDirection);
    }
    let yy = field.add(field.mul(y[0], y[0]), field.mul(y[1], y[1]));
    Line::new(field, y[0], y[1], yy)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineMapReport {
    pub field: String,
    pub injective: bool,
    /// First colliding pair `y ≠ y'` in scan order.
    pub witness: Option<([u32; 2], [u32; 2])>,
    pub checked: u64,
}

/// Exhaustive injectivity test of `ℓ` on `F² ∖ {0}`.
pub fn line_map_injectivity(field: &FieldCtx) -> LineMapReport {
    let q = field.order();
    let mut seen: HashMap<Line, Point2> = HashMap::with_capacity((q * q) as usize);
    let mut witness = None;
    for i in 1..q * q {
        let y = [Elem(i % q), Elem(i / q)];
        let l = line_map(field, y).expect("y ≠ 0");
        if let Some(&prev) = seen.get(&l) {
            witness = Some(([prev[0].0, prev[1].0], [y[0].0, y[1].0]));
            break;
        }
        seen.insert(l, y);
    }
    LineMapReport {
        field: field.description(),
        injective: witness.is_none(),
        witness,
        checked: seen.len() as u64 + witness.is_some() as u64,
    }
}

fn grid_bitmap(pctx: &ParaboloidCtx, e: &[usize]) -> Vec<bool> {
    let q = pctx.order() as usize;
    let mut m = vec![false; q * q * q];
    for &r in e {
        m[pctx.grid_index(pctx.point(r))] = true;
    }
    m
}

fn check_ranks(pctx: &ParaboloidCtx, e: &[usize]) -> Result<()> {
    match e.iter().find(|&&r| r >= pctx.len()) {
        Some(&r) => Err(Error::BadLength { expected: pctx.len(), got: r + 1 }),
        None => Ok(()),
    }
}

/// Sort and dedup a rank list.
fn canonical(e: &[usize]) -> Vec<usize> {
    let mut v = e.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// `Λ(E) = #{(a,b,c,d) ∈ E⁴ : a + b = c + d}` from the multiset of pairwise sums.
pub fn additive_quadruples(pctx: &ParaboloidCtx, e: &[usize], exec: Exec) -> Result<u64> {
    check_ranks(pctx, e)?;
    let e = canonical(e);
    let pts: Vec<Point3> = e.iter().map(|&r| pctx.point(r)).collect();
    let mut r: HashMap<usize, u64> = HashMap::with_capacity(pts.len() * pts.len());
    for a in &pts {
        for b in &pts {
            *r.entry(pctx.grid_index(pctx.add3(*a, *b))).or_insert(0) += 1;
        }
    }
    // Σ_s r(s)² = Σ_{a,b} r(a + b)
    Ok(exec.sum_u64(pts.len(), |i| pts.iter().map(|b| r[&pctx.grid_index(pctx.add3(pts[i], *b))]).sum()))
}

/// `Λ(E)` by a cubic loop: for each `(a, b, c)`, test `a + b - c ∈ E`.
pub fn additive_quadruples_cubic(pctx: &ParaboloidCtx, e: &[usize], exec: Exec) -> Result<u64> {
    check_ranks(pctx, e)?;
    let e = canonical(e);
    let member = grid_bitmap(pctx, &e);
    let pts: Vec<Point3> = e.iter().map(|&r| pctx.point(r)).collect();
    Ok(exec.sum_u64(pts.len(), |i| {
        let a = pts[i];
        let mut n = 0u64;
        for b in &pts {
            let s = pctx.add3(a, *b);
            for c in &pts {
                n += member[pctx.grid_index(pctx.sub3(s, *c))] as u64;
            }
        }
        n
    }))
}

/// `Λ(E)` straight from the definition; only for small sets.
pub fn additive_quadruples_quartic(pctx: &ParaboloidCtx, e: &[usize]) -> Result<u64> {
    check_ranks(pctx, e)?;
    let e = canonical(e);
    let pts: Vec<Point3> = e.iter().map(|&r| pctx.point(r)).collect();
    let mut n = 0u64;
    for a in &pts {
        for b in &pts {
            let s = pctx.add3(*a, *b);
            for c in &pts {
                for d in &pts {
                    n += (pctx.add3(*c, *d) == s) as u64;
                }
            }
        }
    }
    Ok(n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L4Identity {
    pub size: usize,
    pub quadruples: u64,
    /// `‖(1_E dσ)^∨‖₄⁴` by summing over F³.
    pub direct: f64,
    /// `q³ Λ(E) / q⁸`.
    pub analytic: f64,
    pub rel_err: f64,
}

pub fn l4_identity_check(pctx: &Arc<ParaboloidCtx>, e: &[usize], exec: Exec) -> Result<L4Identity> {
    let e = canonical(e);
    let quadruples = additive_quadruples(pctx, &e, exec)?;
    let ext = extension(&SurfaceFn::indicator(pctx.clone(), &e)?, exec)?;
    let direct = ext.lp_norm(Exponent::Finite(4.0), exec)?.powi(4);
    let q = pctx.order() as f64;
    let analytic = quadruples as f64 * q.powi(3) / q.powi(8);
    Ok(L4Identity { size: e.len(), quadruples, direct, analytic, rel_err: rel_err(direct, analytic) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GalileanCheck {
    /// `#{(a, d, c) ∈ E × E × P : a - d = c - b}`.
    pub lhs: u64,
    /// `#{(a', d') ∈ E' × E' : a' - d' ∈ P}` with `E' = g_{-ν}(E)`.
    pub rhs: u64,
    pub equal: bool,
}

/// Inner count `#{(a, d, c) ∈ E × E × P : a - d = c - b}`, enumerating `c`.
pub fn inner_count(pctx: &ParaboloidCtx, e: &[usize], b: Point3, exec: Exec) -> u64 {
    let pts: Vec<Point3> = e.iter().map(|&r| pctx.point(r)).collect();
    exec.sum_u64(pts.len(), |i| {
        let a = pts[i];
        let mut n = 0u64;
        for d in &pts {
            let lhs = pctx.sub3(a, *d);
            for c in pctx.points() {
                n += (pctx.sub3(c, b) == lhs) as u64;
            }
        }
        n
    })
}

/// `E' = g_{-ν}(E)` for `b = (ν, ν·ν)`.
pub fn shift_to_origin(pctx: &ParaboloidCtx, e: &[usize], b: Point3) -> Result<Vec<usize>> {
    pctx.rank_of_point(b)?;
    let f = pctx.field();
    let minus_nu = [f.neg(b[0]), f.neg(b[1])];
    Ok(e.iter().map(|&r| pctx.galilean_rank(minus_nu, r)).collect())
}

fn pairs_with_difference_on_p(pctx: &ParaboloidCtx, e: &[usize], skip_origin: bool, exec: Exec) -> u64 {
    let pts: Vec<Point3> = e
        .iter()
        .filter(|&&r| !(skip_origin && r == 0))
        .map(|&r| pctx.point(r))
        .collect();
    exec.sum_u64(pts.len(), |i| pts.iter().filter(|&&d| pctx.contains(pctx.sub3(pts[i], d))).count() as u64)
}

pub fn galilean_reduction_check(pctx: &ParaboloidCtx, e: &[usize], b: Point3, exec: Exec) -> Result<GalileanCheck> {
    check_ranks(pctx, e)?;
    let e = canonical(e);
    let shifted = shift_to_origin(pctx, &e, b)?;
    let lhs = inner_count(pctx, &e, b, exec);
    let rhs = pairs_with_difference_on_p(pctx, &shifted, false, exec);
    Ok(GalileanCheck { lhs, rhs, equal: lhs == rhs })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReduction {
    pub b: [u32; 3],
    pub size: u64,
    /// `X_{E'}`: the ω of the nonzero points of `E'`.
    pub points: Vec<[u32; 2]>,
    /// `L_{E'} = {ℓ(y) : y ∈ X_{E'}}`.
    pub lines: Vec<[u32; 3]>,
    /// `#{(a', d') ∈ E'² : a' - d' ∈ P}`.
    pub shifted_count: u64,
    /// The same count with `a', d' ≠ 0`.
    pub nonzero_count: u64,
    /// `|I(X_{E'}, L_{E'})|`.
    pub incidences: u64,
    /// `nonzero_count == incidences`.
    pub incidence_equality: bool,
    /// `shifted_count ≤ |E| + nonzero_count`.
    pub origin_terms_bounded: bool,
    pub quadruples: u64,
    /// `|E| (|E| + I)`.
    pub chain_bound: u64,
    /// `Λ(E) ≤ |E| (|E| + I)`; guaranteed only at a maximizing b.
    pub chain_holds: bool,
    /// `ln max(I, 1) / ln max(N, 2)` with `N = |X_{E'}|`.
    pub alpha_hat: f64,
}

fn minus_one_guard(field: &FieldCtx) -> Result<()> {
    if field.minus_one_is_square() {
        let w = line_map_injectivity(field).witness.expect("ℓ collides when -1 is a square");
        return Err(Error::MinusOneIsSquare { y: w.0, y_prime: w.1 });
    }
    Ok(())
}

/// Materialize `X_{E'}` and `L_{E'}` for one `b ∈ P` and check the exact
/// count identities of the reduction.
pub fn incidence_from_energy(pctx: &ParaboloidCtx, e: &[usize], b: Point3, exec: Exec) -> Result<EnergyReduction> {
    let field = pctx.field();
    minus_one_guard(field)?;
    check_ranks(pctx, e)?;
    let e = canonical(e);
    let shifted = canonical(&shift_to_origin(pctx, &e, b)?);
    let shifted_count = pairs_with_difference_on_p(pctx, &shifted, false, exec);
    let nonzero_count = pairs_with_difference_on_p(pctx, &shifted, true, exec);

    let x: Vec<Point2> = shifted.iter().filter(|&&r| r != 0).map(|&r| pctx.omega(r)).collect();
    let lines: Vec<Line> = x.iter().map(|&y| line_map(field, y)).collect::<Result<_>>()?;
    let cfg = PointLineConfig::new(field.clone(), x.clone(), lines);
    debug_assert_eq!(cfg.lines().len(), x.len(), "ℓ is injective here");
    let incidences = cfg.count_incidences(exec);

    let size = e.len() as u64;
    let quadruples = additive_quadruples(pctx, &e, exec)?;
    let chain_bound = size * (size + incidences);
    let n = x.len().max(2) as f64;
    Ok(EnergyReduction {
        b: [b[0].0, b[1].0, b[2].0],
        size,
        points: cfg.points().iter().map(|p| [p[0].0, p[1].0]).collect(),
        lines: cfg.lines().iter().map(|l| l.triple()).collect(),
        shifted_count,
        nonzero_count,
        incidences,
        incidence_equality: nonzero_count == incidences,
        origin_terms_bounded: shifted_count <= size + nonzero_count,
        quadruples,
        chain_bound,
        chain_holds: quadruples <= chain_bound,
        alpha_hat: (incidences.max(1) as f64).ln() / n.ln(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstReduction {
    /// `max_{b ∈ E}` of the inner count.
    pub max_over_e: u64,
    /// `max_{b ∈ P}` of the inner count, attained at `reduction.b`.
    pub max_over_p: u64,
    /// `max_over_p - max_over_e`.
    pub gap: u64,
    /// `Λ(E) ≤ |E| max_E ≤ |E| max_P ≤ |E| (|E| + I)`, every link checked.
    pub chain_holds: bool,
    /// `‖(1_E dσ)^∨‖₄⁴ ≤ 2 q³ q⁻⁸ |E| (|E| + I)`, exact in integers.
    pub l4_bound_holds: bool,
    pub reduction: EnergyReduction,
}

/// Run the reduction at the `b ∈ P` that maximizes the inner count, which is
/// where the chain of inequalities is guaranteed.
pub fn incidence_from_energy_worst(pctx: &ParaboloidCtx, e: &[usize], exec: Exec) -> Result<WorstReduction> {
    minus_one_guard(pctx.field())?;
    check_ranks(pctx, e)?;
    let e = canonical(e);
    if e.is_empty() {
        return Err(Error::Precondition("E is empty".into()));
    }
    let counts: Vec<u64> = (0..pctx.len()).map(|r| inner_count(pctx, &e, pctx.point(r), exec)).collect();
    // first maximizer, so the choice is deterministic
    let (best, &max_over_p) = counts.iter().enumerate().fold((0, &counts[0]), |acc, x| if x.1 > acc.1 { x } else { acc });
    let max_over_e = e.iter().map(|&r| counts[r]).max().unwrap_or(0);
    let reduction = incidence_from_energy(pctx, &e, pctx.point(best), exec)?;
    let size = e.len() as u64;
    let lambda = reduction.quadruples;
    let chain_holds = lambda <= size * max_over_e
        && max_over_e <= max_over_p
        && max_over_p == reduction.shifted_count
        && reduction.shifted_count <= size + reduction.nonzero_count
        && reduction.nonzero_count == reduction.incidences
        && lambda <= reduction.chain_bound;
    // q³Λ/q⁸ ≤ 2 q³ q⁻⁸ |E|(|E| + I)  ⇔  Λ ≤ 2 |E|(|E| + I)
    let l4_bound_holds = lambda <= 2 * reduction.chain_bound;
    Ok(WorstReduction { max_over_e, max_over_p, gap: max_over_p - max_over_e, chain_holds, l4_bound_holds, reduction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn field(p: u32, k: u32) -> Arc<FieldCtx> {
        Arc::new(FieldCtx::new(p, k).unwrap())
    }

    fn pctx(p: u32) -> Arc<ParaboloidCtx> {
        Arc::new(ParaboloidCtx::new(field(p, 1)).unwrap())
    }

    fn el(v: u32) -> Elem {
        Elem(v)
    }

    #[test]
    fn line_normalization() {
        let f = field(7, 1);
        let l = Line::new(&f, el(3), el(6), el(2)).unwrap();
        assert_eq!(l.a, Elem::ONE);
        assert!(l.is_normalized());
        let h = Line::new(&f, el(0), el(5), el(3)).unwrap();
        assert_eq!((h.a, h.b), (Elem::ZERO, Elem::ONE));
        assert!(h.is_horizontal());
        assert_eq!(Line::new(&f, el(0), el(0), el(1)), Err(Error::ZeroDirection));
        let t = Line::through(&f, [el(1), el(2)], [el(4), el(0)]).unwrap();
        assert!(t.contains(&f, [el(1), el(2)]) && t.contains(&f, [el(4), el(0)]));
        let (c, d) = t.as_x_of_y(&f).unwrap();
        assert_eq!(Line::from_x_of_y(&f, c, d), t);
    }

    #[test]
    fn full_plane_gf3() {
        let cfg = PointLineConfig::full_plane(field(3, 1));
        assert_eq!(cfg.lines().len(), 12);
        assert_eq!(cfg.count_incidences(Exec::Parallel), 36);
        assert_eq!(cfg.count_incidences_naive(Exec::Sequential), 36);
        assert!(cfg.line_counts().iter().all(|&c| c == 3));
        let tb = cfg.trivial_bound(Exec::Sequential);
        assert!(tb.holds);
        assert!((tb.bound - (9.0 * 12f64.sqrt() + 12.0)).abs() < 1e-9);
    }

    #[test]
    fn tiny_configs() {
        let f = field(5, 1);
        let cfg = PointLineConfig::new(f.clone(), vec![[el(0), el(0)]], vec![Line::new(&f, el(1), el(0), el(0)).unwrap()]);
        assert_eq!(cfg.count_incidences(Exec::Sequential), 1);
        assert!(cfg.trivial_bound(Exec::Sequential).holds);
        let empty = PointLineConfig::new(f, vec![[el(0), el(0)]], vec![]);
        assert_eq!(empty.count_incidences(Exec::Sequential), 0);
    }

    #[test]
    fn trivial_bound_integer_logic() {
        // 5 points on one line: I = 5 ≤ √5·1 + 5
        assert!(trivial_bound(5, 5, 1).holds);
        // impossible counts are rejected
        assert!(!trivial_bound(100, 4, 4).holds);
    }

    #[test]
    fn line_map_examples() {
        let f7 = field(7, 1);
        let l = line_map(&f7, [el(1), el(2)]).unwrap();
        assert_eq!(l.triple(), [1, 2, 5]);
        assert!(line_map_injectivity(&f7).injective);
        let f5 = field(5, 1);
        assert_eq!(line_map(&f5, [el(1), el(2)]).unwrap(), line_map(&f5, [el(2), el(4)]).unwrap());
        let r = line_map_injectivity(&f5);
        assert!(!r.injective);
        let (y, y2) = r.witness.unwrap();
        assert_ne!(y, y2);
        assert_eq!(line_map(&f5, [el(y[0]), el(y[1])]).unwrap(), line_map(&f5, [el(y2[0]), el(y2[1])]).unwrap());
        assert_eq!(line_map(&f5, [el(0), el(0)]), Err(Error::ZeroDirection));
    }

    #[test]
    fn quadruple_routes_agree() {
        let p = pctx(3);
        let all: Vec<usize> = (0..9).collect();
        let h = additive_quadruples(&p, &all, Exec::Parallel).unwrap();
        assert_eq!(h, additive_quadruples_quartic(&p, &all).unwrap());
        assert_eq!(h, additive_quadruples_cubic(&p, &all, Exec::Sequential).unwrap());
        assert_eq!(additive_quadruples(&p, &[4], Exec::Sequential).unwrap(), 1);
    }

    #[test]
    fn energy_at_least_diagonal() {
        let p = pctx(7);
        let mut rng = seeded(1);
        for _ in 0..20 {
            let e: Vec<usize> = sample(&mut rng, 49, 12).into_vec();
            let lam = additive_quadruples_quartic(&p, &e).unwrap();
            assert!(lam >= 2 * 144 - 12, "a=c,b=d and a=d,b=c families");
            assert_eq!(lam, additive_quadruples(&p, &e, Exec::Sequential).unwrap());
        }
    }

    #[test]
    fn l4_identity_small() {
        let p = pctx(5);
        let r = l4_identity_check(&p, &[0, 3, 7, 11, 24], Exec::Sequential).unwrap();
        assert!(r.rel_err < 1e-9, "{r:?}");
    }

    #[test]
    fn galilean_claim_examples() {
        let p = pctx(3);
        let all: Vec<usize> = (0..9).collect();
        for b in 0..9 {
            assert!(galilean_reduction_check(&p, &all, p.point(b), Exec::Sequential).unwrap().equal);
        }
        let p7 = pctx(7);
        let b = p7.point(10);
        let single = galilean_reduction_check(&p7, &[10], b, Exec::Sequential).unwrap();
        assert!(single.equal && single.lhs == 1);
        assert!(galilean_reduction_check(&p7, &[10], [el(1), el(0), el(0)], Exec::Sequential).is_err());
    }

    #[test]
    fn reduction_singleton_and_guard() {
        let p = pctx(7);
        let b = p.point(17);
        let r = incidence_from_energy(&p, &[17], b, Exec::Sequential).unwrap();
        assert!(r.points.is_empty() && r.incidences == 0 && r.chain_holds);
        let p5 = pctx(5);
        assert!(matches!(
            incidence_from_energy(&p5, &[1], p5.point(1), Exec::Sequential),
            Err(Error::MinusOneIsSquare { .. })
        ));
    }

    #[test]
    fn config_json_round_trip() {
        let f = field(7, 1);
        let cfg = PointLineConfig::random(f, 10, 10, &mut seeded(3));
        let back: PointLineConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }
}
