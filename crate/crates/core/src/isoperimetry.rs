//! Discrete perimeters and isoperimetric inequalities on tile grids.
//!
//! Sets are masks over the vertices of a [`TileGraph`]. Masses are tile counts
//! times `s^d`, perimeters are cut edges times `s^{d-1}`.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::TileGraph;
use crate::rational::{pow_q, qu, to_f64, Q};
use crate::sponge::{PointQ, SpongeSpec};

fn count_q(n: usize) -> Q {
    Q::from_integer(BigInt::from(n))
}

fn check_mask(graph: &TileGraph, e: &[bool]) -> Result<()> {
    if e.len() != graph.len() {
        return Err(Error::Argument(format!(
            "set mask has {} entries for {} tiles",
            e.len(),
            graph.len()
        )));
    }
    Ok(())
}

/// Number of edges with exactly one endpoint in `e` and both endpoints kept by `keep`.
fn cut_edges(graph: &TileGraph, e: &[bool], keep: impl Fn(usize, usize) -> bool) -> usize {
    (0..graph.len())
        .flat_map(|u| graph.neighbors(u).iter().map(move |&w| (u, w)))
        .filter(|&(u, w)| u < w && e[u] != e[w] && keep(u, w))
        .count()
}

/// Relative perimeter of `e` inside the pre-sponge: cut edges times `s^{d-1}`.
pub fn relative_perimeter(graph: &TileGraph, e: &[bool]) -> Result<Q> {
    check_mask(graph, e)?;
    let face = pow_q(&graph.side, graph.dim as u32 - 1);
    Ok(count_q(cut_edges(graph, e, |_, _| true)) * face)
}

/// `min(mu(E cap F), mu(F \ E)) / mu(F)` for uniform tile masses.
pub fn density_theta(e: &[bool], f: &[bool]) -> Result<Q> {
    if e.len() != f.len() {
        return Err(Error::Argument("masks differ in length".into()));
    }
    let total = f.iter().filter(|&&b| b).count();
    if total == 0 {
        return Err(Error::Domain("reference set has zero mass".into()));
    }
    let inside = e.iter().zip(f).filter(|(&a, &b)| a && b).count();
    Ok(count_q(inside.min(total - inside)) / count_q(total))
}

/// Mask of tiles whose centers lie in the open ball `B(x, r)`.
pub fn ball_mask(graph: &TileGraph, x: &PointQ, r: &Q) -> Vec<bool> {
    let r2 = r * r;
    (0..graph.len())
        .map(|v| graph.center(v).dist2(x) < r2)
        .collect()
}

/// Cut edges whose midpoints lie in the open ball `B(x, r)`.
fn cut_edges_in_ball(graph: &TileGraph, e: &[bool], x: &PointQ, r: &Q) -> usize {
    let r2 = r * r;
    let two = Q::from_integer(BigInt::from(2));
    cut_edges(graph, e, |u, w| {
        let (cu, cw) = (graph.center(u), graph.center(w));
        let mid = PointQ::new(
            cu.coords
                .iter()
                .zip(&cw.coords)
                .map(|(a, b)| (a + b) / &two)
                .collect(),
        );
        mid.dist2(x) < r2
    })
}

/// Report of [`relative_isoperimetric_check`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsoperimetricCheck {
    #[serde(with = "crate::rational::qser")]
    pub theta: Q,
    /// Relative perimeter of `E` inside the inflated ball.
    #[serde(with = "crate::rational::qser")]
    pub perimeter: Q,
    #[serde(with = "crate::rational::qser")]
    pub mass_inflated: Q,
    #[serde(with = "crate::rational::qser")]
    pub lhs: Q,
    #[serde(with = "crate::rational::qser")]
    pub rhs: Q,
    /// Smallest constant that would make the inequality hold; `None` when no
    /// constant works (positive density with zero perimeter).
    #[serde(with = "crate::rational::qopt")]
    pub required_c: Option<Q>,
    pub pass: bool,
}

/// Check `Theta(E, B) <= C_S r P(E, Lambda B) / mu(Lambda B)` for `B = B(x, r)`.
pub fn relative_isoperimetric_check(
    graph: &TileGraph,
    e: &[bool],
    x: &PointQ,
    r: &Q,
    c_s: &Q,
    lambda: &Q,
) -> Result<IsoperimetricCheck> {
    check_mask(graph, e)?;
    if *r <= Q::zero() || *lambda < Q::one() {
        return Err(Error::Argument("need r > 0 and inflation >= 1".into()));
    }
    let ball = ball_mask(graph, x, r);
    let theta = density_theta(e, &ball)?;
    let big_r = lambda * r;
    let inflated = ball_mask(graph, x, &big_r);
    let d = graph.dim as u32;
    let mass_inflated = count_q(inflated.iter().filter(|&&b| b).count()) * pow_q(&graph.side, d);
    let perimeter = count_q(cut_edges_in_ball(graph, e, x, &big_r)) * pow_q(&graph.side, d - 1);
    let scale = r * &perimeter / &mass_inflated;
    let rhs = c_s * &scale;
    let required_c = if theta.is_zero() {
        Some(Q::zero())
    } else if scale.is_zero() {
        None
    } else {
        Some(&theta / &scale)
    };
    Ok(IsoperimetricCheck {
        pass: theta <= rhs,
        lhs: theta.clone(),
        theta,
        perimeter,
        mass_inflated,
        rhs,
        required_c,
    })
}

/// Outcome of [`projection_bound_check`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionCheck {
    #[serde(with = "crate::rational::qser")]
    pub lhs: Q,
    #[serde(with = "crate::rational::qser")]
    pub rhs: Q,
    pub holds: bool,
}

/// Projection bound on a full rectangular grid of cells (no removals):
/// `Theta(E, R) <= n sum_i |pi_i(boundary_i E)| / |pi_i R|`, where the
/// one-sided boundary along axis `i` consists of cells whose axis-`i` neighbor
/// inside `R` has the opposite membership. `e` is indexed with axis 0 fastest.
pub fn projection_bound_check(dims: &[usize], e: &[bool]) -> Result<ProjectionCheck> {
    let n = dims.len();
    let total: usize = dims.iter().product();
    if n == 0 || dims.contains(&0) || e.len() != total {
        return Err(Error::Argument("grid dimensions do not match the set".into()));
    }
    let inside = e.iter().filter(|&&b| b).count();
    let lhs = count_q(inside.min(total - inside)) / count_q(total);
    let mut strides = vec![1usize; n];
    for i in 1..n {
        strides[i] = strides[i - 1] * dims[i - 1];
    }
    let mut rhs = Q::zero();
    for i in 0..n {
        let columns = total / dims[i];
        let mut hit = vec![false; columns];
        for idx in 0..total {
            let a = (idx / strides[i]) % dims[i];
            if a + 1 < dims[i] && e[idx] != e[idx + strides[i]] {
                // Drop coordinate i to get the column index.
                let col = idx % strides[i] + (idx / (strides[i] * dims[i])) * strides[i];
                hit[col] = true;
            }
        }
        let covered = hit.iter().filter(|&&b| b).count();
        rhs += count_q(covered) / count_q(columns);
    }
    rhs *= count_q(n);
    Ok(ProjectionCheck {
        holds: lhs <= rhs,
        lhs,
        rhs,
    })
}

/// Box of cells `prod_i [lo_i, hi_i)` at a level, in units of that level's side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TiledBox {
    pub level: usize,
    pub lo: Vec<u64>,
    pub hi: Vec<u64>,
}

impl TiledBox {
    pub fn new(level: usize, lo: Vec<u64>, hi: Vec<u64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::Argument("tiled box needs lo < hi on every axis".into()));
        }
        Ok(TiledBox { level, lo, hi })
    }

    pub fn sides(&self) -> Vec<u64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).collect()
    }

    pub fn aspect_ratio(&self) -> f64 {
        let s = self.sides();
        *s.iter().max().unwrap_or(&1) as f64 / *s.iter().min().unwrap_or(&1) as f64
    }

    pub fn diam(&self, spec: &SpongeSpec) -> f64 {
        let s = 1.0 / spec.cells_per_axis(self.level) as f64;
        self.sides().iter().map(|&a| (a * a) as f64).sum::<f64>().sqrt() * s
    }

    /// Euclidean distance from `x` to the box.
    pub fn dist_to(&self, spec: &SpongeSpec, x: &PointQ) -> f64 {
        let s = spec.scale(self.level).unwrap_or_else(|_| Q::one());
        let mut d2 = Q::zero();
        for j in 0..self.lo.len() {
            let lo = qu(self.lo[j]) * &s;
            let hi = qu(self.hi[j]) * &s;
            let c = &x.coords[j];
            let g = if *c < lo {
                &lo - c
            } else if *c > hi {
                c - &hi
            } else {
                Q::zero()
            };
            d2 += &g * &g;
        }
        to_f64(&d2).sqrt()
    }

    /// Every cell is a live tile of its level.
    pub fn is_tiled(&self, spec: &SpongeSpec) -> bool {
        let n = spec.cells_per_axis(self.level);
        if self.hi.iter().any(|&h| h > n) {
            return false;
        }
        let mut cell = self.lo.clone();
        loop {
            if !spec.is_live(self.level, &cell) {
                return false;
            }
            let mut j = 0;
            loop {
                if j == cell.len() {
                    return true;
                }
                cell[j] += 1;
                if cell[j] < self.hi[j] {
                    break;
                }
                cell[j] = self.lo[j];
                j += 1;
            }
        }
    }

    /// Mask of graph vertices inside the box (graph level at least the box level).
    pub fn mask(&self, graph: &TileGraph, spec: &SpongeSpec) -> Vec<bool> {
        let f = spec.cells_per_axis(graph.level) / spec.cells_per_axis(self.level);
        (0..graph.len())
            .map(|v| {
                graph
                    .coords(v)
                    .iter()
                    .enumerate()
                    .all(|(j, &a)| a >= self.lo[j] * f && a < self.hi[j] * f)
            })
            .collect()
    }
}

/// Which construction produced a comparable box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TileCase {
    Whole,
    Adjacent,
    Interior,
    Face,
    Fallback,
}

/// Result of [`comparable_tile`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparableTile {
    pub case: TileCase,
    pub tile: TiledBox,
    pub level_k: usize,
    #[serde(with = "crate::rational::qser")]
    pub theta_ball: Q,
    #[serde(with = "crate::rational::qser")]
    pub theta_tile: Q,
    /// The four comparison ratios: density, distance, size, volume.
    pub ratios: [f64; 4],
    /// `max(ratios)`, at least 1.
    pub c0: f64,
    pub aspect_ratio: f64,
}

struct Candidate {
    case: TileCase,
    tile: TiledBox,
}

fn evaluate(
    spec: &SpongeSpec,
    graph: &TileGraph,
    e: &[bool],
    x: &PointQ,
    r: &Q,
    ball: &[bool],
    theta_ball: &Q,
    k: usize,
    cand: Candidate,
) -> Option<ComparableTile> {
    if !cand.tile.is_tiled(spec) {
        return None;
    }
    let mask = cand.tile.mask(graph, spec);
    let mass_t = mask.iter().filter(|&&b| b).count();
    if mass_t == 0 {
        return None;
    }
    let theta_tile = density_theta(e, &mask).ok()?;
    let rf = to_f64(r);
    let density = if theta_ball.is_zero() {
        0.0
    } else if theta_tile.is_zero() {
        f64::INFINITY
    } else {
        to_f64(&(theta_ball / &theta_tile))
    };
    let mass_b = ball.iter().filter(|&&b| b).count() as f64;
    let volume = (mass_t as f64 / mass_b).max(mass_b / mass_t as f64);
    let ratios = [
        density,
        cand.tile.dist_to(spec, x) / rf,
        cand.tile.diam(spec) / rf,
        volume,
    ];
    let c0 = ratios.iter().copied().fold(1.0, f64::max);
    Some(ComparableTile {
        case: cand.case,
        aspect_ratio: cand.tile.aspect_ratio(),
        tile: cand.tile,
        level_k: k,
        theta_ball: theta_ball.clone(),
        theta_tile,
        ratios,
        c0,
    })
}

/// Level `k` with `s_{k+1} < r <= s_k`.
fn ball_level(spec: &SpongeSpec, r: &Q) -> Option<usize> {
    (0..spec.depth()).find(|&k| {
        let s_next = Q::new(BigInt::one(), BigInt::from(spec.cells_per_axis(k + 1)));
        let s_k = Q::new(BigInt::one(), BigInt::from(spec.cells_per_axis(k)));
        s_next < *r && *r <= s_k
    })
}

fn floor_cells(v: &Q, cells: u64) -> i128 {
    let t = v * qu(cells);
    let f = t.floor().to_integer();
    i128::try_from(f).unwrap_or(0)
}

/// Box at `level` whose cells range over `[lo, lo + side)` per axis, clamped to the grid.
fn clamp_box(level: usize, lo: &[i128], side: &[i128], cells: u64) -> Option<TiledBox> {
    let n = cells as i128;
    let mut a = Vec::with_capacity(lo.len());
    let mut b = Vec::with_capacity(lo.len());
    for j in 0..lo.len() {
        let s = side[j].min(n);
        let start = lo[j].clamp(0, n - s);
        a.push(start as u64);
        b.push((start + s) as u64);
    }
    TiledBox::new(level, a, b).ok()
}

/// Tiled box comparable to the ball `B(x, r)` for the set `e` (a mask over the
/// vertices of `graph`, whose level must be finer than the ball's scale).
pub fn comparable_tile(spec: &SpongeSpec, graph: &TileGraph, e: &[bool], x: &PointQ, r: &Q) -> Result<ComparableTile> {
    check_mask(graph, e)?;
    if x.coords.len() != spec.dim() || *r <= Q::zero() {
        return Err(Error::Argument("need a point of the right dimension and r > 0".into()));
    }
    if !spec.contains(x, graph.level)? {
        return Err(Error::Domain("center is not in the pre-sponge at the graph level".into()));
    }
    let ball = ball_mask(graph, x, r);
    if !ball.iter().any(|&b| b) {
        return Err(Error::Argument(format!(
            "ball resolves no tiles at level {}; use a finer graph",
            graph.level
        )));
    }
    let theta_ball = density_theta(e, &ball)?;
    let d = spec.dim();
    let eval = |k: usize, cand: Candidate| evaluate(spec, graph, e, x, r, &ball, &theta_ball, k, cand);
    let best = |cands: Vec<(usize, Candidate)>| {
        cands
            .into_iter()
            .filter_map(|(k, c)| eval(k, c))
            .min_by(|a, b| a.c0.total_cmp(&b.c0))
    };

    if *r >= Q::one() {
        let whole = TiledBox::new(0, vec![0; d], vec![1; d])?;
        return best(vec![(0, Candidate { case: TileCase::Whole, tile: whole })])
            .ok_or_else(|| Error::Precondition("unit cube has no tiles".into()));
    }
    let Some(k) = ball_level(spec, r).filter(|&k| k < graph.level) else {
        return Err(Error::Range(format!(
            "radius needs levels beyond graph level {}",
            graph.level
        )));
    };
    let s_k = spec.scale(k)?;
    let cells_k = spec.cells_per_axis(k);
    let cells_k1 = spec.cells_per_axis(k + 1);
    let dq = qu(d as u64);
    let chosen: Option<ComparableTile>;

    if qu(64) * &dq * r * r >= &s_k * &s_k {
        // Large ball relative to s_k: level-k tiles meeting it, and adjacent pairs.
        let lo: Vec<i128> = x.coords.iter().map(|c| floor_cells(&(c - r), cells_k)).collect();
        let hi: Vec<i128> = x.coords.iter().map(|c| floor_cells(&(c + r), cells_k)).collect();
        let mut singles = Vec::new();
        let mut cell = lo.clone();
        'outer: loop {
            if cell.iter().all(|&a| a >= 0 && a < cells_k as i128) {
                let c: Vec<u64> = cell.iter().map(|&a| a as u64).collect();
                if spec.is_live(k, &c) {
                    singles.push(c);
                }
            }
            let mut j = 0;
            loop {
                if j == d {
                    break 'outer;
                }
                cell[j] += 1;
                if cell[j] <= hi[j] {
                    break;
                }
                cell[j] = lo[j];
                j += 1;
            }
        }
        let mut cands = Vec::new();
        for c in &singles {
            let hi: Vec<u64> = c.iter().map(|a| a + 1).collect();
            cands.push((k, Candidate { case: TileCase::Adjacent, tile: TiledBox::new(k, c.clone(), hi)? }));
            for j in 0..d {
                let mut other = c.clone();
                other[j] += 1;
                if singles.contains(&other) {
                    let mut hi: Vec<u64> = c.iter().map(|a| a + 1).collect();
                    hi[j] += 1;
                    cands.push((k, Candidate { case: TileCase::Adjacent, tile: TiledBox::new(k, c.clone(), hi)? }));
                }
            }
        }
        chosen = best(cands);
    } else {
        let s1 = spec.scale(k + 1)?;
        let sqrt_d = (d as f64).sqrt();
        let rf = to_f64(r);
        let m = ((2.0 * sqrt_d * rf / to_f64(&s1)).ceil() as i128) + 1;
        // Smallest level-(k+1) box containing the ball.
        let lo: Vec<i128> = x.coords.iter().map(|c| floor_cells(&(c - r), cells_k1)).collect();
        let hi: Vec<i128> = x.coords.iter().map(|c| floor_cells(&(c + r), cells_k1) + 1).collect();
        let side: Vec<i128> = lo.iter().zip(&hi).map(|(a, b)| b - a).collect();
        let interior = lo.iter().all(|&a| a >= 0)
            && hi.iter().all(|&b| b <= cells_k1 as i128)
            && clamp_box(k + 1, &lo, &side, cells_k1).is_some_and(|b| b.is_tiled(spec));
        if interior {
            chosen = best(vec![(
                k + 1,
                Candidate {
                    case: TileCase::Interior,
                    tile: clamp_box(k + 1, &lo, &side, cells_k1).expect("checked above"),
                },
            )]);
        } else {
            // Nearest dead cell or boundary face; build boxes on its faces.
            let xc: Vec<i128> = x.coords.iter().map(|c| floor_cells(c, cells_k1)).collect();
            let reach = m + 1;
            let mut obstacle: Option<(i128, Vec<i128>)> = None;
            let mut cell: Vec<i128> = xc.iter().map(|a| a - reach).collect();
            'scan: loop {
                let inside = cell.iter().all(|&a| a >= 0 && a < cells_k1 as i128);
                let dead = !inside
                    || !spec.is_live(k + 1, &cell.iter().map(|&a| a as u64).collect::<Vec<_>>());
                if dead {
                    let d2: i128 = cell.iter().zip(&xc).map(|(a, b)| (a - b) * (a - b)).sum();
                    if obstacle.as_ref().is_none_or(|o| d2 < o.0) {
                        obstacle = Some((d2, cell.clone()));
                    }
                }
                let mut j = 0;
                loop {
                    if j == d {
                        break 'scan;
                    }
                    cell[j] += 1;
                    if cell[j] <= xc[j] + reach {
                        break;
                    }
                    cell[j] = xc[j] - reach;
                    j += 1;
                }
            }
            let mut cands = Vec::new();
            if let Some((_, ob)) = obstacle {
                let half = (m - 1) / 2;
                let mut faces = Vec::new();
                for j in 0..d {
                    for sign in [-1i128, 1] {
                        let mut lo: Vec<i128> = ob.iter().map(|a| a - half).collect();
                        lo[j] = if sign > 0 { ob[j] + 1 } else { ob[j] - m };
                        let side = vec![m; d];
                        if let Some(b) = clamp_box(k + 1, &lo, &side, cells_k1) {
                            faces.push((j, sign, b));
                        }
                    }
                }
                for (_, _, b) in &faces {
                    cands.push((k + 1, Candidate { case: TileCase::Face, tile: b.clone() }));
                }
                // Intersections of boxes on adjacent faces.
                for a in 0..faces.len() {
                    for b in a + 1..faces.len() {
                        if faces[a].0 == faces[b].0 {
                            continue;
                        }
                        let (ba, bb) = (&faces[a].2, &faces[b].2);
                        let lo: Vec<u64> = ba.lo.iter().zip(&bb.lo).map(|(p, q)| *p.max(q)).collect();
                        let hi: Vec<u64> = ba.hi.iter().zip(&bb.hi).map(|(p, q)| *p.min(q)).collect();
                        if let Ok(t) = TiledBox::new(k + 1, lo, hi) {
                            if t.aspect_ratio() <= 3.0 {
                                cands.push((k + 1, Candidate { case: TileCase::Face, tile: t }));
                            }
                        }
                    }
                }
            }
            chosen = best(cands);
        }
    }
    if chosen.as_ref().is_some_and(|c| c.c0.is_finite()) {
        let mut c = chosen.expect("checked");
        c.level_k = k;
        return Ok(c);
    }
    // Exhaustive fallback over boxes with aspect ratio at most 3 near the ball.
    let level = k + 1;
    let cells = spec.cells_per_axis(level);
    let unit = to_f64(&spec.scale(level)?);
    let max_side = ((4.0 * to_f64(r) / unit).ceil() as i128 + 2).min(cells as i128);
    let xc: Vec<i128> = x.coords.iter().map(|c| floor_cells(c, cells)).collect();
    let mut cands = Vec::new();
    let mut sides = vec![1i128; d];
    'sides: loop {
        let mx = *sides.iter().max().expect("d >= 1");
        let mn = *sides.iter().min().expect("d >= 1");
        if mx <= 3 * mn {
            let mut off = vec![0i128; d];
            'off: loop {
                let lo: Vec<i128> = (0..d).map(|j| xc[j] - off[j]).collect();
                if let Some(b) = clamp_box(level, &lo, &sides, cells) {
                    cands.push((level, Candidate { case: TileCase::Fallback, tile: b }));
                }
                let mut j = 0;
                loop {
                    if j == d {
                        break 'off;
                    }
                    off[j] += 1;
                    if off[j] < sides[j] {
                        break;
                    }
                    off[j] = 0;
                    j += 1;
                }
            }
        }
        let mut j = 0;
        loop {
            if j == d {
                break 'sides;
            }
            sides[j] += 1;
            if sides[j] <= max_side {
                break;
            }
            sides[j] = 1;
            j += 1;
        }
    }
    cands.sort_by(|a, b| a.1.tile.lo.cmp(&b.1.tile.lo).then(a.1.tile.hi.cmp(&b.1.tile.hi)));
    cands.dedup_by(|a, b| a.1.tile == b.1.tile);
    let fallback = best(cands);
    let mut out = match (chosen, fallback) {
        (Some(c), Some(f)) => if f.c0 < c.c0 { f } else { c },
        (Some(c), None) => c,
        (None, Some(f)) => f,
        (None, None) => return Err(Error::Precondition("no tiled box found near the ball".into())),
    };
    out.level_k = k;
    Ok(out)
}

/// Exact `prod_{i<=K} (1 - 1/n_i^{d-1})` and the number of level-`K` live tiles
/// met by the slice `x_1 = 1/2` (each meets it in a `(d-1)`-cell of content `s_K^{d-1}`).
pub fn half_slice_content(spec: &SpongeSpec, big_k: usize) -> Result<(Q, u128)> {
    if big_k > spec.depth() {
        return Err(Error::Range(format!("level {big_k} exceeds truncation")));
    }
    if spec.seq()[..big_k].iter().any(|n| n % 2 == 0) {
        return Err(Error::Precondition("slice through tile centers needs odd n_i".into()));
    }
    let d = spec.dim() as u32;
    let product = (1..=big_k).fold(Q::one(), |acc, i| {
        acc * (Q::one() - Q::new(BigInt::one(), BigInt::from(spec.n_at(i)).pow(d - 1)))
    });
    fn walk(spec: &SpongeSpec, level: usize, big_k: usize, coords: &mut Vec<u64>) -> u128 {
        if level == big_k {
            return 1;
        }
        let nk = spec.n_at(level + 1);
        let c = spec.central(level + 1);
        let d = spec.dim();
        let mut total = 0;
        let lateral = nk.pow(d as u32 - 1);
        let parent = coords.clone();
        for idx in 0..lateral {
            let mut rem = idx;
            let mut all_central = true;
            coords[0] = parent[0] * nk + c;
            for j in 1..d {
                let local = rem % nk;
                rem /= nk;
                all_central &= local == c;
                coords[j] = parent[j] * nk + local;
            }
            if !all_central {
                total += walk(spec, level + 1, big_k, coords);
            }
        }
        coords.copy_from_slice(&parent);
        total
    }
    let count = walk(spec, 0, big_k, &mut vec![0; spec.dim()]);
    Ok((product, count))
}

/// One sample of a tiled isoperimetric scan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TiledSample {
    pub tile: TiledBox,
    #[serde(with = "crate::rational::qser")]
    pub theta: Q,
    #[serde(with = "crate::rational::qser")]
    pub perimeter: Q,
    /// `mu(T) / (diam(T) P(E, T))`.
    pub constant: f64,
}

/// Result of [`tiled_isoperimetric_scan`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TiledScan {
    pub c_t: f64,
    pub evaluated: usize,
    pub skipped: usize,
    pub witness: Option<TiledSample>,
    /// `sum_{i > k} 1/n_i^{d-1}` for the tile level, reported for regime context.
    pub tail_sum: f64,
}

/// Random subsets of the graph vertices inside `mask`: axis half-cuts, random
/// balls and independent coin flips.
pub fn sample_sets(graph: &TileGraph, mask: &[bool], count: usize, seed: u64) -> Vec<Vec<bool>> {
    let mut rng = crate::rng::seeded(seed);
    let members: Vec<usize> = (0..graph.len()).filter(|&v| mask[v]).collect();
    if members.is_empty() {
        return Vec::new();
    }
    let lo: Vec<u64> = (0..graph.dim)
        .map(|j| members.iter().map(|&v| graph.coords(v)[j]).min().unwrap_or(0))
        .collect();
    let hi: Vec<u64> = (0..graph.dim)
        .map(|j| members.iter().map(|&v| graph.coords(v)[j]).max().unwrap_or(0))
        .collect();
    (0..count)
        .map(|i| {
            let mut e = vec![false; graph.len()];
            match i % 3 {
                0 => {
                    let j = rng.gen_range(0..graph.dim);
                    let cut = rng.gen_range(lo[j]..=hi[j]);
                    for &v in &members {
                        e[v] = graph.coords(v)[j] <= cut;
                    }
                }
                1 => {
                    let c = members[rng.gen_range(0..members.len())];
                    let rad = rng.gen_range(1..=(hi[0] - lo[0] + 1)) as u128;
                    for &v in &members {
                        e[v] = graph.dist2_units(c, v) < rad * rad;
                    }
                }
                _ => {
                    let p: f64 = rng.gen_range(0.1..0.9);
                    for &v in &members {
                        e[v] = rng.gen_bool(p);
                    }
                }
            }
            e
        })
        .collect()
}

/// `mu(T) / (diam(T) P(E, T))` together with the ingredients.
fn tiled_constant(spec: &SpongeSpec, graph: &TileGraph, tile: &TiledBox, mask: &[bool], e: &[bool]) -> (Q, Q, f64) {
    let inside_e: Vec<bool> = e.iter().zip(mask).map(|(&a, &b)| a && b).collect();
    let theta = density_theta(e, mask).unwrap_or_else(|_| Q::zero());
    let cuts = cut_edges(graph, &inside_e, |u, w| mask[u] && mask[w]);
    let d = graph.dim as u32;
    let perimeter = count_q(cuts) * pow_q(&graph.side, d - 1);
    let mass = count_q(mask.iter().filter(|&&b| b).count()) * pow_q(&graph.side, d);
    let constant = if cuts == 0 {
        f64::INFINITY
    } else {
        to_f64(&mass) / (tile.diam(spec) * to_f64(&perimeter))
    };
    (theta, perimeter, constant)
}

/// Measure the tiled isoperimetric constant on every live tile of `tile_level`
/// with sampled sets of density at least `tau`.
pub fn tiled_isoperimetric_scan(
    spec: &SpongeSpec,
    graph: &TileGraph,
    tile_level: usize,
    tau: &Q,
    sets_per_tile: usize,
    seed: u64,
) -> Result<TiledScan> {
    if tile_level > graph.level {
        return Err(Error::Range("tile level must not exceed the graph level".into()));
    }
    let tiles = spec.live_tiles(tile_level, crate::graph::DEFAULT_MAX_VERTICES)?;
    let results: Vec<(usize, usize, Option<TiledSample>)> = tiles
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let hi: Vec<u64> = t.coords.iter().map(|a| a + 1).collect();
            let tile = TiledBox::new(tile_level, t.coords.clone(), hi).expect("unit box");
            let mask = tile.mask(graph, spec);
            let mut best: Option<TiledSample> = None;
            let (mut ok, mut skip) = (0, 0);
            for e in sample_sets(graph, &mask, sets_per_tile, seed.wrapping_add(i as u64)) {
                let (theta, perimeter, constant) = tiled_constant(spec, graph, &tile, &mask, &e);
                if theta < *tau || theta.is_zero() {
                    skip += 1;
                    continue;
                }
                ok += 1;
                if best.as_ref().is_none_or(|b| constant > b.constant) {
                    best = Some(TiledSample { tile: tile.clone(), theta, perimeter, constant });
                }
            }
            (ok, skip, best)
        })
        .collect();
    let mut scan = TiledScan {
        c_t: 0.0,
        evaluated: 0,
        skipped: 0,
        witness: None,
        tail_sum: (tile_level + 1..=spec.seq().len())
            .map(|i| (spec.n_at(i) as f64).powi(-(spec.dim() as i32 - 1)))
            .sum(),
    };
    for (ok, skip, best) in results {
        scan.evaluated += ok;
        scan.skipped += skip;
        if let Some(b) = best {
            if b.constant > scan.c_t {
                scan.c_t = b.constant;
                scan.witness = Some(b);
            }
        }
    }
    Ok(scan)
}

/// One replay of the tile-to-ball inequality chain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallReplay {
    pub center: PointQ,
    #[serde(with = "crate::rational::qser")]
    pub radius: Q,
    pub c0: f64,
    /// Tiled constant of the comparable box for this set.
    pub c_tile: f64,
    /// `mu(B) / (diam(B) P(E, 3 C0 B))`.
    pub c_ball: f64,
    /// `c_ball <= C0^2 c_tile / 2`.
    pub holds: bool,
}

/// Push a ball through [`comparable_tile`] and compare the directly measured
/// ball constant with `C0^2 C_T / 2` at inflation `3 C0`.
pub fn ball_replay(spec: &SpongeSpec, graph: &TileGraph, e: &[bool], x: &PointQ, r: &Q) -> Result<Option<BallReplay>> {
    let ct = comparable_tile(spec, graph, e, x, r)?;
    let mask = ct.tile.mask(graph, spec);
    let (theta_t, _, c_tile) = tiled_constant(spec, graph, &ct.tile, &mask, e);
    if theta_t.is_zero() || ct.theta_ball.is_zero() || !c_tile.is_finite() {
        return Ok(None);
    }
    let ball = ball_mask(graph, x, r);
    let d = graph.dim as u32;
    let mass_b = to_f64(&(count_q(ball.iter().filter(|&&b| b).count()) * pow_q(&graph.side, d)));
    // Inflated radius 3 C0 r, rounded up to a rational so the mask only grows.
    let big = Q::new(
        BigInt::from((3.0 * ct.c0 * to_f64(r) * 1e9).ceil() as i128),
        BigInt::from(1_000_000_000i64),
    );
    let cuts = cut_edges_in_ball(graph, e, x, &big);
    if cuts == 0 {
        return Ok(None);
    }
    let perimeter = cuts as f64 * to_f64(&pow_q(&graph.side, d - 1));
    let c_ball = mass_b / (2.0 * to_f64(r) * perimeter);
    let bound = 0.5 * ct.c0 * ct.c0 * c_tile;
    Ok(Some(BallReplay {
        center: x.clone(),
        radius: r.clone(),
        c0: ct.c0,
        c_tile,
        c_ball,
        holds: c_ball <= bound * (1.0 + 1e-12),
    }))
}
