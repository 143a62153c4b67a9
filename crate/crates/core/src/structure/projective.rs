//! Projective transforms of F² through homogeneous coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffield::{Elem, FieldCtx};
use crate::incidence::{Line, Point2, PointLineConfig};

pub type Homog = [Elem; 3];

/// An invertible 3×3 matrix over F acting on column vectors `(x, y, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjTransform {
    pub matrix: [[Elem; 3]; 3],
}

fn det3(f: &FieldCtx, m: &[[Elem; 3]; 3]) -> Elem {
    let minor = |r1: usize, r2: usize, c1: usize, c2: usize| {
        f.sub(f.mul(m[r1][c1], m[r2][c2]), f.mul(m[r1][c2], m[r2][c1]))
    };
    let t0 = f.mul(m[0][0], minor(1, 2, 1, 2));
    let t1 = f.mul(m[0][1], minor(1, 2, 0, 2));
    let t2 = f.mul(m[0][2], minor(1, 2, 0, 1));
    f.add(f.sub(t0, t1), t2)
}

impl ProjTransform {
    pub fn new(field: &FieldCtx, matrix: [[Elem; 3]; 3]) -> Result<ProjTransform> {
        if det3(field, &matrix).is_zero() {
            return Err(Error::SingularTransform);
        }
        Ok(ProjTransform { matrix })
    }

    pub fn identity() -> ProjTransform {
        let (o, z) = (Elem::ONE, Elem::ZERO);
        ProjTransform { matrix: [[o, z, z], [z, o, z], [z, z, o]] }
    }

    /// `(x, y) ↦ (y, x)`.
    pub fn swap() -> ProjTransform {
        let (o, z) = (Elem::ONE, Elem::ZERO);
        ProjTransform { matrix: [[z, o, z], [o, z, z], [z, z, o]] }
    }

    pub fn from_u32(field: &FieldCtx, m: [[u32; 3]; 3]) -> Result<ProjTransform> {
        let mut out = [[Elem::ZERO; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                out[r][c] = field.elem(m[r][c])?;
            }
        }
        ProjTransform::new(field, out)
    }

    pub fn determinant(&self, field: &FieldCtx) -> Elem {
        det3(field, &self.matrix)
    }

    /// Adjugate divided by the determinant.
    pub fn inverse(&self, field: &FieldCtx) -> ProjTransform {
        let m = &self.matrix;
        let d_inv = field.inv(det3(field, m)).expect("transforms are invertible by construction");
        let mut out = [[Elem::ZERO; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                // cofactor of (c, r), i.e. transposed
                let rs: Vec<usize> = (0..3).filter(|&i| i != c).collect();
                let cs: Vec<usize> = (0..3).filter(|&j| j != r).collect();
                let minor = field.sub(
                    field.mul(m[rs[0]][cs[0]], m[rs[1]][cs[1]]),
                    field.mul(m[rs[0]][cs[1]], m[rs[1]][cs[0]]),
                );
                let signed = if (r + c) % 2 == 0 { minor } else { field.neg(minor) };
                *entry = field.mul(signed, d_inv);
            }
        }
        ProjTransform { matrix: out }
    }

    /// `self ∘ other`.
    pub fn compose(&self, field: &FieldCtx, other: &ProjTransform) -> ProjTransform {
        let mut out = [[Elem::ZERO; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry = (0..3).fold(Elem::ZERO, |acc, k| {
                    field.add(acc, field.mul(self.matrix[r][k], other.matrix[k][c]))
                });
            }
        }
        ProjTransform { matrix: out }
    }

    pub fn apply_homog(&self, field: &FieldCtx, v: Homog) -> Homog {
        let mut out = [Elem::ZERO; 3];
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..3).fold(Elem::ZERO, |acc, k| field.add(acc, field.mul(self.matrix[r][k], v[k])));
        }
        out
    }

    /// Image of an affine point, or `None` when it lands on the line at infinity.
    pub fn apply_point(&self, field: &FieldCtx, p: Point2) -> Option<Point2> {
        let h = self.apply_homog(field, [p[0], p[1], Elem::ONE]);
        dehomogenize(field, h)
    }

    /// Image of a line under the inverse-transpose action `l ↦ l·T⁻¹`, or
    /// `None` when `T` sends it to the line at infinity.
    pub fn apply_line(&self, field: &FieldCtx, inverse: &ProjTransform, l: Line) -> Option<Line> {
        // ax + by = c  ⇔  (a, b, -c)·(x, y, 1) = 0
        let row = [l.a, l.b, field.neg(l.c)];
        let mut out = [Elem::ZERO; 3];
        for (c, o) in out.iter_mut().enumerate() {
            *o = (0..3).fold(Elem::ZERO, |acc, k| field.add(acc, field.mul(row[k], inverse.matrix[k][c])));
        }
        Line::new(field, out[0], out[1], field.neg(out[2])).ok()
    }
}

pub fn dehomogenize(field: &FieldCtx, h: Homog) -> Option<Point2> {
    if h[2].is_zero() {
        return None;
    }
    let s = field.inv(h[2]).expect("nonzero");
    Some([field.mul(h[0], s), field.mul(h[1], s)])
}

/// Whether two nonzero homogeneous vectors span the same projective point.
pub fn same_projective_point(field: &FieldCtx, u: Homog, v: Homog) -> bool {
    let cross = [
        field.sub(field.mul(u[1], v[2]), field.mul(u[2], v[1])),
        field.sub(field.mul(u[2], v[0]), field.mul(u[0], v[2])),
        field.sub(field.mul(u[0], v[1]), field.mul(u[1], v[0])),
    ];
    cross.iter().all(|c| c.is_zero()) && u.iter().any(|c| !c.is_zero()) && v.iter().any(|c| !c.is_zero())
}

/// Images of the surviving points, in input order, and how many were sent to infinity.
pub fn apply_projective(field: &FieldCtx, t: &ProjTransform, pts: &[Point2]) -> (Vec<Point2>, usize) {
    let mut out = Vec::with_capacity(pts.len());
    let mut lost = 0;
    for &p in pts {
        match t.apply_point(field, p) {
            Some(img) => out.push(img),
            None => lost += 1,
        }
    }
    (out, lost)
}

/// Outcome of transforming points and lines together.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointTransform {
    pub config: PointLineConfig,
    pub lost_points: usize,
    pub lost_lines: usize,
    /// Incidences before the transform among points that survive.
    pub surviving_incidences: u64,
    /// Incidences before the transform involving a lost point.
    pub incidences_at_infinity: u64,
}

/// Applies `t` to a whole configuration. Incidences among surviving pairs
/// are preserved exactly, so `I(after) = I(before) - incidences_at_infinity`.
pub fn transform_config(cfg: &PointLineConfig, t: &ProjTransform) -> JointTransform {
    let field = cfg.field();
    let inv = t.inverse(field);
    let mut points = Vec::with_capacity(cfg.points().len());
    let mut lost_mask = Vec::with_capacity(cfg.points().len());
    for &p in cfg.points() {
        match t.apply_point(field, p) {
            Some(img) => {
                points.push(img);
                lost_mask.push(false);
            }
            None => lost_mask.push(true),
        }
    }
    let mut lines = Vec::with_capacity(cfg.lines().len());
    let mut lost_lines = 0;
    for &l in cfg.lines() {
        match t.apply_line(field, &inv, l) {
            Some(img) => lines.push(img),
            None => lost_lines += 1,
        }
    }
    let mut surviving = 0u64;
    let mut at_infinity = 0u64;
    for l in cfg.lines() {
        for (p, &lost) in cfg.points().iter().zip(&lost_mask) {
            if l.contains(field, *p) {
                if lost {
                    at_infinity += 1;
                } else {
                    surviving += 1;
                }
            }
        }
    }
    JointTransform {
        config: PointLineConfig::new(field.clone(), points, lines),
        lost_points: lost_mask.iter().filter(|&&b| b).count(),
        lost_lines,
        surviving_incidences: surviving,
        incidences_at_infinity: at_infinity,
    }
}

/// A transform with `T(p₀) ~ (1,0,0)` and `T(q₀) ~ (0,1,0)`.
///
/// Built as the inverse of `M = [p̂₀ | q̂₀ | r]`, with `r` the first standard
/// basis vector making `M` invertible.
pub fn normalize_pair(field: &FieldCtx, p0: Point2, q0: Point2) -> Result<ProjTransform> {
    if p0 == q0 {
        return Err(Error::CoincidentPoints);
    }
    let (o, z) = (Elem::ONE, Elem::ZERO);
    let ph = [p0[0], p0[1], o];
    let qh = [q0[0], q0[1], o];
    for r in [[o, z, z], [z, o, z], [z, z, o]] {
        let m = [[ph[0], qh[0], r[0]], [ph[1], qh[1], r[1]], [ph[2], qh[2], r[2]]];
        if let Ok(mt) = ProjTransform::new(field, m) {
            return Ok(mt.inverse(field));
        }
    }
    unreachable!("two distinct affine points extend to a basis")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;
    use std::sync::Arc;

    fn random_transform(f: &FieldCtx, rng: &mut impl Rng) -> ProjTransform {
        loop {
            let mut m = [[0u32; 3]; 3];
            for row in m.iter_mut() {
                for e in row.iter_mut() {
                    *e = rng.gen_range(0..f.order());
                }
            }
            if let Ok(t) = ProjTransform::from_u32(f, m) {
                return t;
            }
        }
    }

    #[test]
    fn inverse_composes_to_identity() {
        let f = FieldCtx::new(3, 2).unwrap();
        let mut rng = seeded(1);
        for _ in 0..20 {
            let t = random_transform(&f, &mut rng);
            assert_eq!(t.compose(&f, &t.inverse(&f)), ProjTransform::identity());
        }
    }

    #[test]
    fn singular_rejected() {
        let f = FieldCtx::prime(7).unwrap();
        assert_eq!(ProjTransform::from_u32(&f, [[1, 2, 3], [2, 4, 6], [0, 0, 1]]), Err(Error::SingularTransform));
    }

    #[test]
    fn identity_and_swap() {
        let f = FieldCtx::prime(5).unwrap();
        let pts: Vec<Point2> = (0..25).map(|i| [Elem(i % 5), Elem(i / 5)]).collect();
        let (img, lost) = apply_projective(&f, &ProjTransform::identity(), &pts);
        assert_eq!((img, lost), (pts.clone(), 0));
        let (img, lost) = apply_projective(&f, &ProjTransform::swap(), &pts);
        assert_eq!(lost, 0);
        for (a, b) in pts.iter().zip(&img) {
            assert_eq!([a[1], a[0]], *b);
        }
    }

    #[test]
    fn incidences_preserved_exhaustively_gf5() {
        let f = Arc::new(FieldCtx::prime(5).unwrap());
        let full = PointLineConfig::full_plane(f.clone());
        let mut rng = seeded(2);
        for _ in 0..10 {
            let t = random_transform(&f, &mut rng);
            let inv = t.inverse(&f);
            for &l in full.lines() {
                let Some(tl) = t.apply_line(&f, &inv, l) else { continue };
                for &p in full.points() {
                    if let Some(tp) = t.apply_point(&f, p) {
                        assert_eq!(l.contains(&f, p), tl.contains(&f, tp));
                    }
                }
            }
            let j = transform_config(&full, &t);
            assert_eq!(j.config.count_incidences(crate::Exec::Sequential), j.surviving_incidences);
        }
    }

    #[test]
    fn normalize_pair_sends_centers() {
        let f = FieldCtx::prime(11).unwrap();
        let mut rng = seeded(3);
        for _ in 0..100 {
            let p = [Elem(rng.gen_range(0..11)), Elem(rng.gen_range(0..11))];
            let q = [Elem(rng.gen_range(0..11)), Elem(rng.gen_range(0..11))];
            if p == q {
                assert!(normalize_pair(&f, p, q).is_err());
                continue;
            }
            let t = normalize_pair(&f, p, q).unwrap();
            let (o, z) = (Elem::ONE, Elem::ZERO);
            assert!(same_projective_point(&f, t.apply_homog(&f, [p[0], p[1], o]), [o, z, z]));
            assert!(same_projective_point(&f, t.apply_homog(&f, [q[0], q[1], o]), [z, o, z]));
        }
    }
}
