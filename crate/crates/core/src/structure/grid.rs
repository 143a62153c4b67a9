//! Pruning, bushes, and extraction of a Cartesian grid from a rich
//! point–line configuration.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::projective::{apply_projective, normalize_pair, ProjTransform};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ffield::{Elem, FieldCtx};
use crate::incidence::{Line, Point2, PointLineConfig};
use crate::rng::substream;

/// Default number of pair evaluations before `best_pair` switches to sampling.
pub const DEFAULT_PAIR_BUDGET: u64 = 10_000_000;
/// Default exponent on `K` in the point-degree window.
pub const DEFAULT_C8: f64 = 2.0;

const SAMPLE_CHUNK: u64 = 4096;
const SLACK: f64 = 1e-12;

fn in_window(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo * (1.0 - SLACK) && x <= hi * (1.0 + SLACK)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    /// `max(|P|, |L|)`.
    pub n: usize,
    pub k: f64,
    pub c8: f64,
    pub line_window: [f64; 2],
    pub point_window: [f64; 2],
    pub points_before: usize,
    pub lines_before: usize,
    pub points_after: usize,
    pub lines_after: usize,
    pub incidences_before: u64,
    pub incidences_after: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pruned {
    pub points: Vec<Point2>,
    pub lines: Vec<Line>,
    pub report: PruneReport,
}

/// Keeps lines with `K⁻²√N ≤ |l ∩ P| ≤ K²√N`, then points whose degree
/// against the kept lines lies in `[K^{-C₈}√N, K^{C₈}√N]`.
pub fn prune(cfg: &PointLineConfig, k: f64, c8: f64, exec: Exec) -> Pruned {
    let field = cfg.field();
    let n = cfg.points().len().max(cfg.lines().len());
    let sqrt_n = (n as f64).sqrt();
    let line_window = [sqrt_n / (k * k), sqrt_n * k * k];
    let point_window = [sqrt_n / k.powf(c8), sqrt_n * k.powf(c8)];

    let counts = cfg.line_counts();
    let lines: Vec<Line> = cfg
        .lines()
        .iter()
        .zip(counts)
        .filter(|(_, &c)| in_window(c as f64, line_window[0], line_window[1]))
        .map(|(&l, _)| l)
        .collect();
    let l2 = PointLineConfig::new(field.clone(), cfg.points().to_vec(), lines.clone());
    let degrees = l2.point_degrees();
    let points: Vec<Point2> = l2
        .points()
        .iter()
        .zip(&degrees)
        .filter(|(_, &d)| in_window(d as f64, point_window[0], point_window[1]))
        .map(|(&p, _)| p)
        .collect();
    let after = PointLineConfig::new(field.clone(), points.clone(), lines.clone());
    let report = PruneReport {
        n,
        k,
        c8,
        line_window,
        point_window,
        points_before: cfg.points().len(),
        lines_before: cfg.lines().len(),
        points_after: points.len(),
        lines_after: lines.len(),
        incidences_before: cfg.count_incidences(exec),
        incidences_after: after.count_incidences(exec),
    };
    Pruned { points, lines, report }
}

/// Bitset bushes `U(p)` for every point of a configuration.
pub struct BushIndex {
    points: Vec<Point2>,
    words: usize,
    sets: Vec<Vec<u64>>,
}

impl BushIndex {
    pub fn new(field: &FieldCtx, points: &[Point2], lines: &[Line], exec: Exec) -> BushIndex {
        let idx: HashMap<Point2, usize> = points.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let words = points.len().div_ceil(64);
        // points of each line, as indices
        let on_line: Vec<Vec<usize>> =
            exec.map(lines.len(), |i| lines[i].points(field).filter_map(|p| idx.get(&p).copied()).collect());
        let mut through: Vec<Vec<usize>> = vec![Vec::new(); points.len()];
        for (li, pts) in on_line.iter().enumerate() {
            for &p in pts {
                through[p].push(li);
            }
        }
        let sets = exec.map(points.len(), |i| {
            let mut s = vec![0u64; words];
            for &li in &through[i] {
                for &j in &on_line[li] {
                    s[j / 64] |= 1 << (j % 64);
                }
            }
            s
        });
        BushIndex { points: points.to_vec(), words, sets }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bush(&self, i: usize) -> Vec<Point2> {
        self.members(&self.sets[i])
    }

    pub fn overlap(&self, i: usize, j: usize) -> u32 {
        self.sets[i].iter().zip(&self.sets[j]).map(|(a, b)| (a & b).count_ones()).sum()
    }

    pub fn intersection(&self, i: usize, j: usize) -> Vec<Point2> {
        let both: Vec<u64> = self.sets[i].iter().zip(&self.sets[j]).map(|(a, b)| a & b).collect();
        self.members(&both)
    }

    fn members(&self, bits: &[u64]) -> Vec<Point2> {
        (0..self.words * 64)
            .filter(|&j| j < self.points.len() && bits[j / 64] >> (j % 64) & 1 == 1)
            .map(|j| self.points[j])
            .collect()
    }
}

/// `U(p) = {p' : some line contains both p and p'}`.
pub fn bush(field: &FieldCtx, points: &[Point2], lines: &[Line], p: Point2) -> Result<Vec<Point2>> {
    let i = points
        .iter()
        .position(|&x| x == p)
        .ok_or_else(|| Error::Precondition("bush centre is not in the point set".into()))?;
    Ok(BushIndex::new(field, points, lines, Exec::Sequential).bush(i))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestPair {
    pub p0: Point2,
    pub q0: Point2,
    pub overlap: u32,
    pub exhaustive: bool,
    pub pairs_evaluated: u64,
    /// Mean of `|U(p) ∩ U(q)|` over the evaluated pairs; the averaging
    /// argument only promises a pair at least this good.
    pub mean_overlap: f64,
}

fn better(a: (u32, usize, usize), b: (u32, usize, usize)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && (a.1, a.2) < (b.1, b.2))
}

/// The distinct pair maximizing the bush overlap: exhaustive when `n² ≤ budget`,
/// otherwise the best of `budget` seeded random pairs.
pub fn best_pair(index: &BushIndex, budget: u64, seed: u64, exec: Exec) -> Option<BestPair> {
    let n = index.len();
    if n < 2 {
        return None;
    }
    let total_pairs = n as u64 * (n as u64 - 1) / 2;
    let exhaustive = (n as u64).saturating_mul(n as u64) <= budget;
    // per-block (best, sum, count)
    let blocks: Vec<((u32, usize, usize), u64, u64)> = if exhaustive {
        exec.map(n - 1, |i| {
            let mut best = (0u32, usize::MAX, usize::MAX);
            let mut sum = 0u64;
            for j in i + 1..n {
                let o = index.overlap(i, j);
                sum += o as u64;
                if better((o, i, j), best) {
                    best = (o, i, j);
                }
            }
            (best, sum, (n - 1 - i) as u64)
        })
    } else {
        let chunks = budget.div_ceil(SAMPLE_CHUNK);
        exec.map(chunks as usize, |c| {
            let mut rng = substream(seed, c as u64);
            let draws = SAMPLE_CHUNK.min(budget - c as u64 * SAMPLE_CHUNK);
            let mut best = (0u32, usize::MAX, usize::MAX);
            let mut sum = 0u64;
            for _ in 0..draws {
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let (i, j) = (i.min(j), i.max(j));
                let o = index.overlap(i, j);
                sum += o as u64;
                if better((o, i, j), best) {
                    best = (o, i, j);
                }
            }
            (best, sum, draws)
        })
    };
    let mut best = (0u32, usize::MAX, usize::MAX);
    let (mut sum, mut count) = (0u64, 0u64);
    for (b, s, c) in blocks {
        if b.1 != usize::MAX && better(b, best) {
            best = b;
        }
        sum += s;
        count += c;
    }
    if best.1 == usize::MAX {
        // every overlap was zero; fall back to the first pair
        best = (0, 0, 1);
    }
    Some(BestPair {
        p0: index.points[best.1],
        q0: index.points[best.2],
        overlap: best.0,
        exhaustive,
        pairs_evaluated: if exhaustive { total_pairs } else { count },
        mean_overlap: if count == 0 { 0.0 } else { sum as f64 / count as f64 },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    /// Loss factor `K ≥ 1`.
    pub k: f64,
    pub c8: f64,
    pub budget: u64,
    pub seed: u64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions { k: 2.0, c8: DEFAULT_C8, budget: DEFAULT_PAIR_BUDGET, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridWitness {
    pub transform: ProjTransform,
    pub a: Vec<Elem>,
    pub b: Vec<Elem>,
    /// Surviving original points, so `T(P') ⊆ A × B`.
    pub p_prime: Vec<Point2>,
    /// Kept lines meeting `P'`.
    pub l_prime: Vec<Line>,
    pub lost_at_infinity: usize,
    /// `T(P')`, sorted.
    pub image: Vec<Point2>,
    /// `|U(p₀) ∩ U(q₀)|`, equal to `|P'| + lost_at_infinity`.
    pub bush_size: usize,
    pub best_pair: Option<BestPair>,
    pub prune: PruneReport,
    pub n: usize,
    pub incidences: u64,
    /// `I(P', L')`.
    pub retained_incidences: u64,
    /// `|T(P') ∩ A×B|`.
    pub grid_coverage: usize,
    /// `|T(P') ∩ A×B| / |P|`.
    pub coverage_fraction: f64,
    /// `|A| / √N` and `|B| / √N`.
    pub a_over_sqrt_n: f64,
    pub b_over_sqrt_n: f64,
    /// `I < K⁻¹N^{3/2}`: the rich-configuration hypothesis fails.
    pub low_incidence: bool,
    pub degenerate: bool,
    pub notes: Vec<String>,
}

impl GridWitness {
    /// Re-derives the image from `P'` and checks containment, the size bound
    /// and the lost-point accounting.
    pub fn check_invariants(&self, field: &FieldCtx) -> Result<()> {
        let (mut img, lost) = apply_projective(field, &self.transform, &self.p_prime);
        img.sort_unstable();
        if lost != 0 || img != self.image {
            return Err(Error::Precondition("T(P') does not match the recorded image".into()));
        }
        let a: BTreeSet<Elem> = self.a.iter().copied().collect();
        let b: BTreeSet<Elem> = self.b.iter().copied().collect();
        if !img.iter().all(|p| a.contains(&p[0]) && b.contains(&p[1])) {
            return Err(Error::Precondition("T(P') is not contained in A x B".into()));
        }
        if self.a.len() * self.b.len() < img.len() {
            return Err(Error::Precondition("|A||B| < |T(P')|".into()));
        }
        if self.p_prime.len() + self.lost_at_infinity != self.bush_size {
            return Err(Error::Precondition("lost points are not accounted for".into()));
        }
        Ok(())
    }
}

fn all_collinear(field: &FieldCtx, pts: &[Point2]) -> bool {
    if pts.len() < 3 {
        return true;
    }
    let l = Line::through(field, pts[0], pts[1]).expect("points are distinct");
    pts.iter().all(|&p| l.contains(field, p))
}

/// prune → best_pair → normalize_pair → coordinates of the transformed bush
/// intersection.
pub fn extract_grid(cfg: &PointLineConfig, opts: &GridOptions, exec: Exec) -> Result<GridWitness> {
    if !(opts.k >= 1.0) {
        return Err(Error::Precondition(format!("loss factor K must be at least 1, got {}", opts.k)));
    }
    let field = cfg.field();
    let pruned = prune(cfg, opts.k, opts.c8, exec);
    let incidences = pruned.report.incidences_before;
    let n = pruned.report.n;
    let low_incidence = (incidences as f64) * opts.k < (n as f64).powf(1.5);
    let mut notes = Vec::new();
    if low_incidence {
        notes.push("incidence count below K^-1 N^(3/2)".to_string());
    }

    let index = BushIndex::new(field, &pruned.points, &pruned.lines, exec);
    let pair = best_pair(&index, opts.budget, opts.seed, exec);
    let mut degenerate = false;
    if all_collinear(field, &pruned.points) {
        degenerate = true;
        notes.push("pruned points are collinear; the bush line is sent to infinity".to_string());
    }

    let (transform, w) = match &pair {
        Some(bp) => {
            let i = pruned.points.iter().position(|&p| p == bp.p0).expect("p0 from the pruned set");
            let j = pruned.points.iter().position(|&p| p == bp.q0).expect("q0 from the pruned set");
            (normalize_pair(field, bp.p0, bp.q0)?, index.intersection(i, j))
        }
        None => {
            degenerate = true;
            notes.push("fewer than two points survive pruning".to_string());
            (ProjTransform::identity(), pruned.points.clone())
        }
    };

    let mut p_prime = Vec::with_capacity(w.len());
    let mut image = Vec::with_capacity(w.len());
    for &p in &w {
        if let Some(tp) = transform.apply_point(field, p) {
            p_prime.push(p);
            image.push(tp);
        }
    }
    let lost_at_infinity = w.len() - p_prime.len();
    let a: Vec<Elem> = image.iter().map(|p| p[0]).collect::<BTreeSet<_>>().into_iter().collect();
    let b: Vec<Elem> = image.iter().map(|p| p[1]).collect::<BTreeSet<_>>().into_iter().collect();
    image.sort_unstable();

    let on_p_prime: BTreeSet<Point2> = p_prime.iter().copied().collect();
    let l_prime: Vec<Line> = pruned
        .lines
        .iter()
        .filter(|l| l.points(field).any(|p| on_p_prime.contains(&p)))
        .copied()
        .collect();
    let retained = PointLineConfig::new(field.clone(), p_prime.clone(), l_prime.clone()).count_incidences(exec);

    let grid_coverage = image.len();
    let sqrt_n = (n.max(1) as f64).sqrt();
    let witness = GridWitness {
        transform,
        a_over_sqrt_n: a.len() as f64 / sqrt_n,
        b_over_sqrt_n: b.len() as f64 / sqrt_n,
        a,
        b,
        p_prime,
        l_prime,
        lost_at_infinity,
        image,
        bush_size: w.len(),
        best_pair: pair,
        prune: pruned.report,
        n,
        incidences,
        retained_incidences: retained,
        grid_coverage,
        coverage_fraction: grid_coverage as f64 / cfg.points().len().max(1) as f64,
        low_incidence,
        degenerate,
        notes,
    };
    witness.check_invariants(field)?;
    Ok(witness)
}
