//! Uniform-domain checks on tile grids (cigar and corkscrew conditions,
//! cut-out experiments) and planar obstacle collections (relative separation,
//! bounded turning).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connectivity::PathFragment;
use crate::error::{Error, Result};
use crate::graph::TileGraph;
use crate::rational::{pow_q, to_f64, Q};
use crate::sponge::{BoxQ, IBox, PointQ, SpongeSpec};

/// How the clearance of a tile is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clearance {
    /// Distance from the tile center to the boundary.
    #[default]
    Center,
    /// Center distance minus the tile half-diagonal, valid for every point of the tile.
    Conservative,
}

/// A tile graph of a domain `Omega` inside the unit cube, with per-vertex
/// clearance to `boundary([0,1]^d)` and to the boundaries of removed boxes.
#[derive(Clone, Debug)]
pub struct DomainGrid {
    pub graph: TileGraph,
    /// Removed boxes in cells of the graph level.
    pub obstacles: Vec<IBox>,
    /// Squared center-to-boundary distance in half-cell units.
    pub clear2_half: Vec<u128>,
    pub clearance: Vec<f64>,
    pub policy: Clearance,
}

impl DomainGrid {
    /// Cells of an `N^d` grid (`N = cells`) not covered by `obstacles`.
    pub fn from_grid(dim: usize, cells: u64, level: usize, obstacles: Vec<IBox>, policy: Clearance) -> Result<Self> {
        let total = (cells as u128).pow(dim as u32);
        if total > crate::graph::DEFAULT_MAX_VERTICES as u128 {
            return Err(Error::Resource(format!("{total} grid cells exceed the vertex cap")));
        }
        let mut coords = Vec::new();
        let mut c = vec![0u64; dim];
        for _ in 0..total {
            let covered = obstacles
                .iter()
                .any(|b| (0..dim).all(|j| c[j] >= b.lo[j] && c[j] < b.hi[j]));
            if !covered {
                coords.push(c.clone());
            }
            for slot in c.iter_mut() {
                *slot += 1;
                if *slot < cells {
                    break;
                }
                *slot = 0;
            }
        }
        let side = Q::new(BigInt::from(1), BigInt::from(cells));
        let mass = pow_q(&side, dim as u32);
        let graph = TileGraph::from_cells(dim, level, side, mass, coords);
        Ok(Self::with_graph(graph, cells, obstacles, policy))
    }

    /// Pre-sponge `S_level` of `spec` as a domain.
    pub fn from_sponge(spec: &SpongeSpec, level: usize, policy: Clearance) -> Result<Self> {
        let graph = TileGraph::build(spec, level, crate::graph::DEFAULT_MAX_VERTICES)?;
        let obstacles = spec
            .removed_boxes_int(level, level)?
            .into_iter()
            .map(|r| r.bx)
            .collect();
        Ok(Self::with_graph(graph, spec.cells_per_axis(level), obstacles, policy))
    }

    fn with_graph(graph: TileGraph, cells: u64, obstacles: Vec<IBox>, policy: Clearance) -> Self {
        let d = graph.dim;
        let clear2_half: Vec<u128> = (0..graph.len())
            .into_par_iter()
            .map(|v| {
                let c: Vec<i128> = graph.coords(v).iter().map(|&a| 2 * a as i128 + 1).collect();
                let n2 = 2 * cells as i128;
                let wall = c.iter().map(|&a| a.min(n2 - a)).min().unwrap_or(0);
                let mut best = (wall * wall) as u128;
                for b in &obstacles {
                    let mut d2 = 0i128;
                    for j in 0..d {
                        let (lo, hi) = (2 * b.lo[j] as i128, 2 * b.hi[j] as i128);
                        let g = if c[j] < lo {
                            lo - c[j]
                        } else if c[j] > hi {
                            c[j] - hi
                        } else {
                            0
                        };
                        d2 += g * g;
                    }
                    best = best.min(d2 as u128);
                }
                best
            })
            .collect();
        let half = 0.5 * graph.side_f64();
        let shrink = match policy {
            Clearance::Center => 0.0,
            Clearance::Conservative => half * (d as f64).sqrt(),
        };
        let clearance = clear2_half
            .iter()
            .map(|&c2| ((c2 as f64).sqrt() * half - shrink).max(0.0))
            .collect();
        DomainGrid {
            graph,
            obstacles,
            clear2_half,
            clearance,
            policy,
        }
    }

    /// Exact squared center clearance.
    pub fn clearance_sq(&self, v: usize) -> Q {
        let half = &self.graph.side / Q::from_integer(BigInt::from(2));
        Q::from_integer(BigInt::from(self.clear2_half[v])) * &half * &half
    }
}

/// Largest `A^{-1} min(diam(prefix), diam(suffix)) - clearance(v)` over the
/// vertices of `path`, clamped at 0.
pub fn cigar_violation(domain: &DomainGrid, path: &PathFragment, a: f64) -> f64 {
    let g = &domain.graph;
    let v = &path.vertices;
    let n = v.len();
    let mut pre = vec![0.0f64; n];
    let mut suf = vec![0.0f64; n];
    for i in 1..n {
        let far = (0..i).map(|j| g.dist(v[j], v[i])).fold(0.0, f64::max);
        pre[i] = pre[i - 1].max(far);
    }
    for i in (0..n.saturating_sub(1)).rev() {
        let far = (i + 1..n).map(|j| g.dist(v[j], v[i])).fold(0.0, f64::max);
        suf[i] = suf[i + 1].max(far);
    }
    (0..n)
        .map(|i| pre[i].min(suf[i]) / a - domain.clearance[v[i]])
        .fold(0.0, f64::max)
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest lengths from `root` through vertices with `clearance >= len / a`.
fn admissible_tree(domain: &DomainGrid, root: usize, a: f64) -> (Vec<f64>, Vec<usize>) {
    let g = &domain.graph;
    let s = g.side_f64();
    let mut dist = vec![f64::INFINITY; g.len()];
    let mut parent = vec![usize::MAX; g.len()];
    dist[root] = 0.0;
    let mut heap = BinaryHeap::from([Item(0.0, root)]);
    while let Some(Item(l, u)) = heap.pop() {
        if l > dist[u] {
            continue;
        }
        for &w in g.neighbors(u) {
            let nl = l + s;
            if nl < dist[w] && domain.clearance[w] * a >= nl * (1.0 - 1e-12) {
                dist[w] = nl;
                parent[w] = u;
                heap.push(Item(nl, w));
            }
        }
    }
    (dist, parent)
}

fn unwind(parent: &[usize], mut v: usize) -> Vec<usize> {
    let mut out = vec![v];
    while parent[v] != usize::MAX {
        v = parent[v];
        out.push(v);
    }
    out
}

/// Path from `x` to `y` certified by the length form of the cigar condition:
/// every vertex has clearance at least `1/A` times the length to the nearer end.
pub fn certified_uniform_curve(domain: &DomainGrid, x: usize, y: usize, a: f64) -> Option<PathFragment> {
    if x == y {
        return Some(PathFragment::single(x));
    }
    let (dx, px) = admissible_tree(domain, x, a);
    let (dy, py) = admissible_tree(domain, y, a);
    let g = &domain.graph;
    let s = g.side_f64();
    // Meet at a vertex in both trees, or across an edge joining the trees.
    let mut best: Option<(f64, usize, usize)> = None;
    for u in 0..g.len() {
        if dx[u].is_finite() && dy[u].is_finite() && best.is_none_or(|b| dx[u] + dy[u] < b.0) {
            best = Some((dx[u] + dy[u], u, u));
        }
        if dx[u].is_finite() {
            for &w in g.neighbors(u) {
                if dy[w].is_finite() && best.is_none_or(|b| dx[u] + s + dy[w] < b.0) {
                    best = Some((dx[u] + s + dy[w], u, w));
                }
            }
        }
    }
    let (_, u, w) = best?;
    let mut vertices = unwind(&px, u);
    vertices.reverse();
    if w != u {
        vertices.extend(unwind(&py, w));
    } else {
        vertices.extend(unwind(&py, w).into_iter().skip(1));
    }
    Some(PathFragment::from_vertices(vertices))
}

/// Smallest `A` (within relative tolerance `tol`) for which a certified
/// curve joins `x` and `y`, searched in `[1, a_max]`; `None` beyond `a_max`.
pub fn uniformity_threshold(domain: &DomainGrid, x: usize, y: usize, a_max: f64, tol: f64) -> Option<f64> {
    certified_uniform_curve(domain, x, y, a_max)?;
    if certified_uniform_curve(domain, x, y, 1.0).is_some() {
        return Some(1.0);
    }
    let (mut lo, mut hi) = (1.0f64, a_max);
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if certified_uniform_curve(domain, x, y, mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// A vertex `y` with center in `B(x, r)`, clearance at least `r/(4A)` and
/// `B(y, r/(4A)) inside B(x, r)`.
pub fn corkscrew_check(domain: &DomainGrid, x: &PointQ, r: f64, a: f64) -> Option<usize> {
    let g = &domain.graph;
    let rho = r / (4.0 * a);
    let xf: Vec<f64> = x.coords.iter().map(to_f64).collect();
    (0..g.len())
        .filter(|&v| {
            let c = g.center(v);
            let d = c
                .coords
                .iter()
                .zip(&xf)
                .map(|(p, q)| (to_f64(p) - q).powi(2))
                .sum::<f64>()
                .sqrt();
            d + rho <= r && domain.clearance[v] >= rho
        })
        .max_by(|&a, &b| domain.clearance[a].total_cmp(&domain.clearance[b]).then(b.cmp(&a)))
}

/// An obstacle in a collection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Obstacle {
    Box {
        #[serde(flatten)]
        bx: BoxQ,
    },
    Ball { center: Vec<f64>, radius: f64 },
    /// Closed planar polygon given by its vertices.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Obstacle {
    pub fn diam(&self) -> f64 {
        match self {
            Obstacle::Box { bx } => to_f64(&bx.diam2()).sqrt(),
            Obstacle::Ball { radius, .. } => 2.0 * radius,
            Obstacle::Polygon { vertices } => vertices
                .iter()
                .flat_map(|a| vertices.iter().map(move |b| dist2d(a, b)))
                .fold(0.0, f64::max),
        }
    }

    fn lo_hi(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Obstacle::Box { bx } => (bx.lo.iter().map(to_f64).collect(), bx.hi.iter().map(to_f64).collect()),
            Obstacle::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Obstacle::Polygon { vertices } => (
                vec![
                    vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min),
                    vertices.iter().map(|v| v[1]).fold(f64::INFINITY, f64::min),
                ],
                vec![
                    vertices.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max),
                    vertices.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max),
                ],
            ),
        }
    }

    fn as_polygon(&self) -> Option<Vec<[f64; 2]>> {
        match self {
            Obstacle::Polygon { vertices } => Some(vertices.clone()),
            Obstacle::Box { bx } if bx.dim() == 2 => {
                let (a, b) = (to_f64(&bx.lo[0]), to_f64(&bx.lo[1]));
                let (c, d) = (to_f64(&bx.hi[0]), to_f64(&bx.hi[1]));
                Some(vec![[a, b], [c, b], [c, d], [a, d]])
            }
            _ => None,
        }
    }

    /// Distance to the boundary of the unit cube (obstacle assumed inside).
    fn dist_to_cube_boundary(&self) -> f64 {
        let (lo, hi) = self.lo_hi();
        lo.iter()
            .zip(&hi)
            .map(|(a, b)| a.min(1.0 - b))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }
}

fn dist2d(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn point_segment(p: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    dist2d(p, &[a[0] + t * dx, a[1] + t * dy])
}

fn segments_cross(a: &[f64; 2], b: &[f64; 2], c: &[f64; 2], d: &[f64; 2]) -> bool {
    let orient = |p: &[f64; 2], q: &[f64; 2], r: &[f64; 2]| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |p: &[f64; 2], q: &[f64; 2], r: &[f64; 2], o: f64| {
        o == 0.0 && r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

fn polygon_distance(p: &[[f64; 2]], q: &[[f64; 2]]) -> f64 {
    let n = p.len();
    let m = q.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let (a, b) = (&p[i], &p[(i + 1) % n]);
        for j in 0..m {
            let (c, d) = (&q[j], &q[(j + 1) % m]);
            if segments_cross(a, b, c, d) {
                return 0.0;
            }
            best = best
                .min(point_segment(a, c, d))
                .min(point_segment(b, c, d))
                .min(point_segment(c, a, b))
                .min(point_segment(d, a, b));
        }
    }
    best
}

fn point_box(p: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    p.iter()
        .zip(lo.iter().zip(hi))
        .map(|(c, (l, h))| {
            let g = if c < l { l - c } else if c > h { c - h } else { 0.0 };
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

/// Distance between two obstacles; `None` for unsupported combinations.
fn obstacle_distance(a: &Obstacle, b: &Obstacle) -> Option<f64> {
    use Obstacle::*;
    Some(match (a, b) {
        (Box { bx: p }, Box { bx: q }) => to_f64(&p.dist2(q)).sqrt(),
        (Ball { center: c, radius: r }, Ball { center: e, radius: s }) => {
            let d = c.iter().zip(e).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            (d - r - s).max(0.0)
        }
        (Ball { center, radius }, other @ Box { .. }) | (other @ Box { .. }, Ball { center, radius }) => {
            let (lo, hi) = other.lo_hi();
            (point_box(center, &lo, &hi) - radius).max(0.0)
        }
        (Ball { center, radius }, Polygon { vertices }) | (Polygon { vertices }, Ball { center, radius }) => {
            if center.len() != 2 {
                return None;
            }
            let c = [center[0], center[1]];
            let n = vertices.len();
            let d = (0..n)
                .map(|i| point_segment(&c, &vertices[i], &vertices[(i + 1) % n]))
                .fold(f64::INFINITY, f64::min);
            (d - radius).max(0.0)
        }
        _ => polygon_distance(&a.as_polygon()?, &b.as_polygon()?),
    })
}

/// Result of [`collection_separation`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparationReport {
    /// `min Delta(R, R')` over pairs, including the outer boundary when requested.
    pub s: f64,
    /// Exact `s^2` when every obstacle is a box.
    #[serde(with = "crate::rational::qopt")]
    pub s_sq: Option<Q>,
    /// Indices of the minimizing pair; `None` in the second slot means the boundary.
    pub witness: Option<(usize, Option<usize>)>,
    pub obstacles: usize,
}

/// Relative separation `min d(R, R') / min(diam R, diam R')` of a collection,
/// optionally including the boundary of the unit cube.
pub fn collection_separation(obstacles: &[Obstacle], with_cube_boundary: bool) -> Result<SeparationReport> {
    if obstacles.is_empty() {
        return Err(Error::Argument("collection is empty".into()));
    }
    let diams: Vec<f64> = obstacles.iter().map(Obstacle::diam).collect();
    if diams.iter().any(|&d| d <= 0.0 || !d.is_finite()) {
        return Err(Error::Domain("obstacle with zero diameter".into()));
    }
    let all_boxes = obstacles.iter().all(|o| matches!(o, Obstacle::Box { .. }));
    let mut order: Vec<usize> = (0..obstacles.len()).collect();
    let lohi: Vec<(Vec<f64>, Vec<f64>)> = obstacles.iter().map(Obstacle::lo_hi).collect();
    order.sort_by(|&a, &b| lohi[a].0[0].total_cmp(&lohi[b].0[0]).then(a.cmp(&b)));
    let mut best = f64::INFINITY;
    let mut witness = None;
    let mut best_sq: Option<Q> = None;
    let exact_delta = |a: usize, b: Option<usize>| -> Option<Q> {
        let Obstacle::Box { bx: p } = &obstacles[a] else { return None };
        match b {
            Some(b) => {
                let Obstacle::Box { bx: q } = &obstacles[b] else { return None };
                Some(p.dist2(q) / p.diam2().min(q.diam2()))
            }
            None => {
                let one = Q::from_integer(BigInt::from(1));
                let g = p
                    .lo
                    .iter()
                    .zip(&p.hi)
                    .map(|(l, h)| l.clone().min(&one - h))
                    .min()
                    .unwrap_or_else(Q::zero);
                Some(&g * &g / p.diam2())
            }
        }
    };
    let mut consider = |a: usize, b: Option<usize>, delta: f64, best: &mut f64| {
        if all_boxes {
            let sq = exact_delta(a, b).expect("boxes");
            if best_sq.as_ref().is_none_or(|cur| sq < *cur) {
                *best = to_f64(&sq).sqrt();
                best_sq = Some(sq);
                witness = Some((a, b));
            }
        } else if delta < *best {
            *best = delta;
            witness = Some((a, b));
        }
    };
    for (pos, &a) in order.iter().enumerate() {
        for &b in &order[pos + 1..] {
            let gap = lohi[b].0[0] - lohi[a].1[0];
            if gap > 0.0 && gap >= best * diams[a] * (1.0 + 1e-9) {
                break;
            }
            let Some(d) = obstacle_distance(&obstacles[a], &obstacles[b]) else {
                return Err(Error::Argument("unsupported obstacle pair".into()));
            };
            let delta = d / diams[a].min(diams[b]);
            if delta <= best * (1.0 + 1e-9) {
                consider(a, Some(b), delta, &mut best);
            }
        }
    }
    if with_cube_boundary {
        for a in 0..obstacles.len() {
            let delta = obstacles[a].dist_to_cube_boundary() / diams[a];
            if delta <= best * (1.0 + 1e-9) {
                consider(a, None, delta, &mut best);
            }
        }
    }
    Ok(SeparationReport {
        s: best,
        s_sq: if all_boxes { best_sq } else { None },
        witness,
        obstacles: obstacles.len(),
    })
}

/// Exact `min Delta^2` over the removed boxes of a sponge up to `depth`, with
/// the unit cube boundary, in integer arithmetic.
pub fn sponge_collection_separation(spec: &SpongeSpec, depth: usize) -> Result<Q> {
    let boxes: Vec<IBox> = spec
        .removed_boxes_int(depth, depth)?
        .into_iter()
        .map(|r| r.bx)
        .collect();
    if boxes.is_empty() {
        return Err(Error::Argument("no removed boxes at depth 0".into()));
    }
    let n = spec.cells_per_axis(depth) as i128;
    let diam2 = |b: &IBox| -> i128 { b.lo.iter().zip(&b.hi).map(|(l, h)| ((h - l) as i128).pow(2)).sum() };
    // Best fraction num/den.
    let (mut num, mut den) = (i128::MAX, 1i128);
    let better = |a: i128, b: i128, num: &mut i128, den: &mut i128| {
        if a.checked_mul(*den).is_none_or(|l| l < num.saturating_mul(b)) {
            *num = a;
            *den = b;
        }
    };
    for b in &boxes {
        let g = b
            .lo
            .iter()
            .zip(&b.hi)
            .map(|(&l, &h)| (l as i128).min(n - h as i128))
            .min()
            .unwrap_or(0);
        better(g * g, diam2(b), &mut num, &mut den);
    }
    let mut order: Vec<&IBox> = boxes.iter().collect();
    order.sort_by_key(|b| b.lo[0]);
    for (i, a) in order.iter().enumerate() {
        let da = diam2(a);
        for b in &order[i + 1..] {
            let gap = b.lo[0] as i128 - a.hi[0] as i128;
            // gap^2 / da >= num / den means no later box can improve.
            if gap > 0 && gap * gap * den >= num * da {
                break;
            }
            better(a.dist2(b), da.min(diam2(b)), &mut num, &mut den);
        }
    }
    Ok(Q::new(BigInt::from(num), BigInt::from(den)))
}

/// Result of [`bounded_turning`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TurningReport {
    pub c: f64,
    /// Arclength parameters (in `[0, perimeter)`) of the maximizing pair.
    pub witness: (f64, f64),
    pub samples: usize,
}

struct Poly {
    pts: Vec<[f64; 2]>,
    cum: Vec<f64>,
    total: f64,
}

impl Poly {
    fn new(pts: &[[f64; 2]]) -> Self {
        let n = pts.len();
        let mut cum = vec![0.0; n + 1];
        for i in 0..n {
            cum[i + 1] = cum[i] + dist2d(&pts[i], &pts[(i + 1) % n]);
        }
        Poly {
            pts: pts.to_vec(),
            total: cum[n],
            cum,
        }
    }

    fn wrap(&self, s: f64) -> f64 {
        s.rem_euclid(self.total)
    }

    fn point(&self, s: f64) -> [f64; 2] {
        let s = self.wrap(s);
        let n = self.pts.len();
        let i = self.cum.partition_point(|&c| c <= s).saturating_sub(1).min(n - 1);
        let seg = self.cum[i + 1] - self.cum[i];
        let t = if seg > 0.0 { (s - self.cum[i]) / seg } else { 0.0 };
        let (a, b) = (&self.pts[i], &self.pts[(i + 1) % n]);
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    /// Diameter of the arc running forward from `s` to `t`.
    fn arc_diam(&self, s: f64, t: f64) -> f64 {
        let s = self.wrap(s);
        let mut t = self.wrap(t);
        if t < s {
            t += self.total;
        }
        let mut pts = vec![self.point(s)];
        let n = self.pts.len();
        for k in 0..2 * n {
            let c = self.cum[k % n] + (k / n) as f64 * self.total;
            if c > s && c < t {
                pts.push(self.pts[k % n]);
            }
        }
        pts.push(self.point(t));
        let mut best: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.max(dist2d(&pts[i], &pts[j]));
            }
        }
        best
    }

    fn ratio(&self, s: f64, t: f64) -> f64 {
        let chord = dist2d(&self.point(s), &self.point(t));
        if chord <= 1e-15 * self.total {
            return 0.0;
        }
        self.arc_diam(s, t).min(self.arc_diam(t, s)) / chord
    }
}

/// Bounded-turning constant of a simple closed polyline: the largest ratio of
/// the smaller arc diameter to the chord, over sampled pairs of points.
pub fn bounded_turning(vertices: &[[f64; 2]]) -> Result<TurningReport> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::Precondition("a closed polyline needs at least 3 vertices".into()));
    }
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_cross(&vertices[i], &vertices[(i + 1) % n], &vertices[j], &vertices[(j + 1) % n]) {
                return Err(Error::Precondition(format!("polyline self-intersects at edges {i} and {j}")));
            }
        }
    }
    let poly = Poly::new(vertices);
    if poly.total <= 0.0 {
        return Err(Error::Precondition("polyline has zero length".into()));
    }
    // Samples: vertices and edge midpoints.
    let mut params = Vec::with_capacity(2 * n);
    for i in 0..n {
        params.push(poly.cum[i]);
        params.push(0.5 * (poly.cum[i] + poly.cum[i + 1]));
    }
    let m = params.len();
    let pts: Vec<[f64; 2]> = params.iter().map(|&s| poly.point(s)).collect();
    // diam of the contiguous sample window i..=i+len (indices mod m).
    let mut window = vec![vec![0.0f64; m]; m];
    for len in 1..m {
        for i in 0..m {
            let j = (i + len) % m;
            let inner = window[i][len - 1].max(window[(i + 1) % m][len - 1]);
            window[i][len] = inner.max(dist2d(&pts[i], &pts[j]));
        }
    }
    let (best, bi, bj) = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut local = (0.0f64, i, i);
            for len in 1..m {
                let j = (i + len) % m;
                let chord = dist2d(&pts[i], &pts[j]);
                if chord <= 1e-15 * poly.total {
                    continue;
                }
                let r = window[i][len].min(window[j][m - len]) / chord;
                if r > local.0 {
                    local = (r, i, j);
                }
            }
            local
        })
        .reduce(|| (0.0, 0, 0), |a, b| if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a });
    let mut best = best;
    let (mut s, mut t) = (params[bi], params[bj]);
    let mut h = poly.total / m as f64;
    for _ in 0..3 {
        h *= 0.5;
        let (cs, ct) = (s, t);
        for a in -2i32..=2 {
            for b in -2i32..=2 {
                let (ss, tt) = (cs + a as f64 * h, ct + b as f64 * h);
                let r = poly.ratio(ss, tt);
                if r > best {
                    best = r;
                    s = poly.wrap(ss);
                    t = poly.wrap(tt);
                }
            }
        }
    }
    Ok(TurningReport {
        c: best,
        witness: (s, t),
        samples: m,
    })
}

/// Ratio of the smaller arc diameter to the chord for the points at
/// arclength parameters `s` and `t` of a closed polyline.
pub fn turning_ratio(vertices: &[[f64; 2]], s: f64, t: f64) -> Result<f64> {
    if vertices.len() < 3 {
        return Err(Error::Precondition("a closed polyline needs at least 3 vertices".into()));
    }
    Ok(Poly::new(vertices).ratio(s, t))
}

/// Result of [`cutout_experiment`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CutoutReport {
    /// Certified upper bound on the uniformity constant of `Omega`.
    pub a_before: f64,
    /// Certified upper bound for `Omega` minus the obstacles.
    pub a_after: f64,
    /// `min d(S, boundary) / diam(S)` over the obstacles.
    pub boundary_ratio: Option<f64>,
    pub pairs: usize,
    /// Pairs with no certified curve up to the search limit.
    pub uncertified: usize,
}

/// Certified uniformity before and after cutting `obstacles` (cell boxes at
/// the grid level) out of the full unit-cube grid with `cells` per axis.
pub fn cutout_experiment(dim: usize, cells: u64, obstacles: &[IBox], pairs: &[(Vec<u64>, Vec<u64>)], a_max: f64) -> Result<CutoutReport> {
    for b in obstacles {
        if b.lo.iter().any(|&l| l == 0) || b.hi.iter().any(|&h| h >= cells) {
            return Err(Error::Precondition("obstacle touches the outer boundary".into()));
        }
    }
    let before = DomainGrid::from_grid(dim, cells, 0, Vec::new(), Clearance::Center)?;
    let after = DomainGrid::from_grid(dim, cells, 0, obstacles.to_vec(), Clearance::Center)?;
    let scan = |dom: &DomainGrid| -> Result<(f64, usize)> {
        let vals = pairs
            .par_iter()
            .map(|(a, b)| {
                let x = dom.graph.require(a)?;
                let y = dom.graph.require(b)?;
                Ok(uniformity_threshold(dom, x, y, a_max, 1e-4))
            })
            .collect::<Result<Vec<_>>>()?;
        let worst = vals.iter().flatten().copied().fold(1.0, f64::max);
        Ok((worst, vals.iter().filter(|v| v.is_none()).count()))
    };
    let (a_before, _) = scan(&before)?;
    let (a_after, uncertified) = scan(&after)?;
    let boundary_ratio = obstacles
        .iter()
        .map(|b| {
            let g = b
                .lo
                .iter()
                .zip(&b.hi)
                .map(|(&l, &h)| l.min(cells - h))
                .min()
                .unwrap_or(0) as f64;
            g / b.lo.iter().zip(&b.hi).map(|(l, h)| ((h - l) as f64).powi(2)).sum::<f64>().sqrt()
        })
        .reduce(f64::min);
    Ok(CutoutReport {
        a_before,
        a_after,
        boundary_ratio,
        pairs: pairs.len(),
        uncertified,
    })
}

/// Removed boxes of the sponge as a collection.
pub fn sponge_obstacles(spec: &SpongeSpec, depth: usize) -> Result<Vec<Obstacle>> {
    let mut out = Vec::new();
    for k in 1..=depth {
        out.extend(spec.removed_boxes(k)?.into_iter().map(|bx| Obstacle::Box { bx }));
    }
    Ok(out)
}

/// Points of a regular polygon inscribed in the circle of radius `r` about `c`.
pub fn regular_polygon(sides: usize, c: [f64; 2], r: f64) -> Vec<[f64; 2]> {
    (0..sides)
        .map(|i| {
            let th = std::f64::consts::TAU * i as f64 / sides as f64;
            [c[0] + r * th.cos(), c[1] + r * th.sin()]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn ring() -> DomainGrid {
        let spec = SpongeSpec::full(2, vec![3]).unwrap();
        DomainGrid::from_sponge(&spec, 1, Clearance::Center).unwrap()
    }

    #[test]
    fn ring_clearances() {
        let d = ring();
        for v in 0..8 {
            assert_eq!(d.clearance_sq(v), q(1, 36));
        }
        let spec = SpongeSpec::full(2, vec![3]).unwrap();
        let cons = DomainGrid::from_sponge(&spec, 1, Clearance::Conservative).unwrap();
        assert!(cons.clearance.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn ring_certified_curve() {
        let d = ring();
        let x = d.graph.require(&[0, 1]).unwrap();
        let y = d.graph.require(&[2, 1]).unwrap();
        let p = certified_uniform_curve(&d, x, y, 16.0).unwrap();
        assert_eq!(p.first(), x);
        assert_eq!(p.last(), y);
        p.validate(&d.graph).unwrap();
        assert_eq!(cigar_violation(&d, &p, 16.0), 0.0);
        assert!(certified_uniform_curve(&d, x, y, 3.0).is_none());
        let th = uniformity_threshold(&d, x, y, 100.0, 1e-6).unwrap();
        assert!((th - 4.0).abs() < 1e-3, "{th}");
        assert_eq!(certified_uniform_curve(&d, x, x, 1.0).unwrap().vertices, vec![x]);
    }

    #[test]
    fn cigar_monotone_and_positive() {
        let spec = SpongeSpec::full(2, vec![3, 3]).unwrap();
        let d = DomainGrid::from_sponge(&spec, 2, Clearance::Center).unwrap();
        // Hug the level-1 removed square along its bottom side.
        let cells: Vec<Vec<u64>> = (2..=6).map(|i| vec![i, 2]).collect();
        let verts: Vec<usize> = cells.iter().map(|c| d.graph.require(c).unwrap()).collect();
        let p = PathFragment::from_vertices(verts);
        p.validate(&d.graph).unwrap();
        let v1 = cigar_violation(&d, &p, 1.0);
        assert!(v1 > 0.0);
        let mut prev = v1;
        for a in [2.0, 4.0, 8.0, 16.0] {
            let v = cigar_violation(&d, &p, a);
            assert!(v <= prev);
            prev = v;
        }
        let a = d.graph.require(&[0, 0]).unwrap();
        let b = d.graph.neighbors(a)[0];
        assert_eq!(cigar_violation(&d, &PathFragment::from_vertices(vec![a, b]), 100.0), 0.0);
    }

    #[test]
    fn corkscrew_examples() {
        let full = DomainGrid::from_grid(2, 9, 2, Vec::new(), Clearance::Center).unwrap();
        for x in [PointQ::new(vec![q(0, 1), q(0, 1)]), PointQ::new(vec![q(1, 2), q(1, 3)])] {
            assert!(corkscrew_check(&full, &x, 1.0 / 3.0, 1.0).is_some());
        }
        let spec = SpongeSpec::full(2, vec![3, 9]).unwrap();
        let fat = DomainGrid::from_sponge(&spec, 2, Clearance::Center).unwrap();
        let x = PointQ::new(vec![q(0, 1), q(1, 2)]);
        assert!(corkscrew_check(&fat, &x, 1.0 / 3.0, 4.0).is_some());
    }

    #[test]
    fn separation_examples() {
        let disks = [
            Obstacle::Ball { center: vec![0.0, 0.0], radius: 0.5 },
            Obstacle::Ball { center: vec![1.5, 0.0], radius: 0.5 },
        ];
        let r = collection_separation(&disks, false).unwrap();
        assert!((r.s - 0.5).abs() < 1e-12);
        let touching = [
            Obstacle::Ball { center: vec![0.0, 0.0], radius: 0.5 },
            Obstacle::Ball { center: vec![1.0, 0.0], radius: 0.5 },
        ];
        assert_eq!(collection_separation(&touching, false).unwrap().s, 0.0);
        let zero = [Obstacle::Ball { center: vec![0.0, 0.0], radius: 0.0 }];
        assert!(matches!(collection_separation(&zero, false), Err(Error::Domain(_))));
        assert!(collection_separation(&[], false).is_err());
    }

    #[test]
    fn sponge_boxes_are_separated() {
        for d in [2usize, 3] {
            let bound = q(1, 9 * d as i64);
            for n in [vec![3, 3, 3, 3], vec![3, 5, 7, 3]] {
                let spec = SpongeSpec::full(d, n).unwrap();
                let max_depth = if d == 3 { 3 } else { 4 };
                for depth in 1..=max_depth {
                    let s2 = sponge_collection_separation(&spec, depth).unwrap();
                    assert!(s2 >= bound, "d={d} depth={depth}: {s2}");
                }
                let coll = sponge_obstacles(&spec, 2).unwrap();
                let rep = collection_separation(&coll, true).unwrap();
                assert_eq!(rep.s_sq.unwrap(), sponge_collection_separation(&spec, 2).unwrap());
            }
        }
    }

    #[test]
    fn turning_examples() {
        let circle = regular_polygon(360, [0.0, 0.0], 1.0);
        let c = bounded_turning(&circle).unwrap().c;
        assert!((c - 1.0).abs() <= 0.01, "{c}");
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let c = bounded_turning(&square).unwrap().c;
        // Sup over pairs (0, a), (1, 1 - a) is attained at a = 1/phi.
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((c - phi / 2f64.sqrt()).abs() <= 0.01, "{c}");
        let mid = turning_ratio(&square, 3.5, 1.5).unwrap();
        assert!((mid - 5f64.sqrt() / 2.0).abs() < 1e-12, "{mid}");
        assert!(matches!(bounded_turning(&[[0.0, 0.0], [1.0, 0.0]]), Err(Error::Precondition(_))));
        let bowtie = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(bounded_turning(&bowtie), Err(Error::Precondition(_))));
    }

    #[test]
    fn cutout_examples() {
        let pairs = vec![(vec![0, 1], vec![2, 1]), (vec![1, 0], vec![1, 2]), (vec![0, 0], vec![2, 2])];
        let none = cutout_experiment(2, 3, &[], &pairs, 1e3).unwrap();
        assert_eq!(none.a_before, none.a_after);
        let central = IBox { lo: vec![1, 1], hi: vec![2, 2] };
        let one = cutout_experiment(2, 3, &[central], &pairs, 1e3).unwrap();
        assert!(one.a_after.is_finite() && one.a_after >= one.a_before);
        let edge = IBox { lo: vec![0, 1], hi: vec![1, 2] };
        assert!(matches!(cutout_experiment(2, 3, &[edge], &pairs, 1e3), Err(Error::Precondition(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn turning_similarity_invariant(angle in 0.0f64..6.28, scale in 0.1f64..10.0, tx in -5.0f64..5.0, ty in -5.0f64..5.0) {
            let shape = vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 0.4], [0.0, 1.0]];
            let base = bounded_turning(&shape).unwrap().c;
            let (c, s) = (angle.cos(), angle.sin());
            let moved: Vec<[f64; 2]> = shape
                .iter()
                .map(|p| [scale * (c * p[0] - s * p[1]) + tx, scale * (s * p[0] + c * p[1]) + ty])
                .collect();
            let other = bounded_turning(&moved).unwrap().c;
            prop_assert!((base - other).abs() <= 1e-9 * base.max(1.0));
        }
    }
}
