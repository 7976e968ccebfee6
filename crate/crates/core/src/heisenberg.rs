//! First Heisenberg group with the Korányi gauge, and sponges cut from the
//! closed Euclidean unit ball by left-translated, dilated Euclidean balls.
//!
//! Distances to ellipsoid boundaries are certified by branch and bound over
//! the faces of the cube `[-1,1]^3` projected radially onto the unit sphere.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Q;
use crate::rng::{block_rng, seeded};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeisPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl HeisPoint {
    pub const IDENTITY: HeisPoint = HeisPoint { x: 0.0, y: 0.0, t: 0.0 };

    pub fn new(x: f64, y: f64, t: f64) -> Self {
        HeisPoint { x, y, t }
    }

    fn euclid(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.t * self.t).sqrt()
    }
}

/// `(x+u, y+v, t+w + (xv - uy)/2)`.
pub fn h_mul(p: &HeisPoint, q: &HeisPoint) -> HeisPoint {
    HeisPoint {
        x: p.x + q.x,
        y: p.y + q.y,
        t: p.t + q.t + 0.5 * (p.x * q.y - q.x * p.y),
    }
}

pub fn h_inv(p: &HeisPoint) -> HeisPoint {
    HeisPoint { x: -p.x, y: -p.y, t: -p.t }
}

/// Korányi gauge `((x^2+y^2)^2 + t^2)^{1/4}`.
pub fn koranyi_norm(p: &HeisPoint) -> f64 {
    let r2 = p.x * p.x + p.y * p.y;
    (r2 * r2 + p.t * p.t).sqrt().sqrt()
}

/// `N(q^{-1} p)`.
pub fn koranyi_dist(p: &HeisPoint, q: &HeisPoint) -> f64 {
    koranyi_norm(&h_mul(&h_inv(q), p))
}

/// `(sx, sy, s^2 t)`, so that `N(dilation(s, p)) = s N(p)`.
pub fn dilation(s: f64, p: &HeisPoint) -> Result<HeisPoint> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("dilation factor must be positive, got {s}")));
    }
    Ok(dilate(s, p))
}

fn dilate(s: f64, p: &HeisPoint) -> HeisPoint {
    HeisPoint { x: s * p.x, y: s * p.y, t: s * s * p.t }
}

/// Exact group law on rational triples.
pub fn h_mul_q(p: &[Q; 3], q: &[Q; 3]) -> [Q; 3] {
    let half = Q::new(1.into(), 2.into());
    [
        &p[0] + &q[0],
        &p[1] + &q[1],
        &p[2] + &q[2] + half * (&p[0] * &q[1] - &q[0] * &p[1]),
    ]
}

pub fn dilation_q(s: &Q, p: &[Q; 3]) -> [Q; 3] {
    [s * &p[0], s * &p[1], s * s * &p[2]]
}

/// `N(p)^4`, exact.
pub fn koranyi_norm4_q(p: &[Q; 3]) -> Q {
    let r2 = &p[0] * &p[0] + &p[1] * &p[1];
    &r2 * &r2 + &p[2] * &p[2]
}

/// Upper bound on `d(u, u')` for points of the closed unit Euclidean ball at
/// Euclidean distance at most `h`.
pub fn holder_margin(h: f64) -> f64 {
    (h.powi(4) + 2.25 * h * h).sqrt().sqrt()
}

/// A square patch of one face of `[-1,1]^3`.
#[derive(Clone, Copy, Debug)]
struct Cell {
    axis: u8,
    sign: f64,
    u: f64,
    v: f64,
    size: f64,
}

impl Cell {
    fn center(&self) -> [f64; 3] {
        let (a, b) = (self.u + 0.5 * self.size, self.v + 0.5 * self.size);
        let mut c = [0.0; 3];
        let i = self.axis as usize;
        c[i] = self.sign;
        c[(i + 1) % 3] = a;
        c[(i + 2) % 3] = b;
        let n = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        [c[0] / n, c[1] / n, c[2] / n]
    }

    /// Euclidean radius of the projected patch around its projected center.
    fn radius(&self) -> f64 {
        self.size * std::f64::consts::FRAC_1_SQRT_2
    }

    fn split(&self) -> [Cell; 4] {
        let h = 0.5 * self.size;
        let mk = |du: f64, dv: f64| Cell {
            u: self.u + du,
            v: self.v + dv,
            size: h,
            ..*self
        };
        [mk(0.0, 0.0), mk(h, 0.0), mk(0.0, h), mk(h, h)]
    }

    fn grid(m: usize) -> Vec<Cell> {
        let size = 2.0 / m as f64;
        let mut out = Vec::with_capacity(6 * m * m);
        for axis in 0..3u8 {
            for sign in [-1.0, 1.0] {
                for i in 0..m {
                    for j in 0..m {
                        out.push(Cell {
                            axis,
                            sign,
                            u: -1.0 + i as f64 * size,
                            v: -1.0 + j as f64 * size,
                            size,
                        });
                    }
                }
            }
        }
        out
    }
}

/// `d(q, p)` for `p` the projected cell center, and a lower bound over the cell.
fn cell_bounds(q: &HeisPoint, cell: &Cell) -> (f64, f64) {
    let c = cell.center();
    // q^{-1} p is affine in p: (px - qx, py - qy, pt - qt + (px qy - qx py)/2).
    let x = c[0] - q.x;
    let y = c[1] - q.y;
    let t = c[2] - q.t + 0.5 * (c[0] * q.y - q.x * c[1]);
    let rho = (x * x + y * y).sqrt();
    let at = (rho.powi(4) + t * t).sqrt().sqrt();
    let h = cell.radius();
    let lt = h * (1.0 + 0.25 * (q.x * q.x + q.y * q.y)).sqrt();
    let r_lo = (rho - h).max(0.0);
    let t_lo = (t.abs() - lt).max(0.0);
    (at, (r_lo.powi(4) + t_lo * t_lo).sqrt().sqrt())
}

struct Pending(f64, Cell);

impl PartialEq for Pending {
    fn eq(&self, o: &Self) -> bool {
        self.0 == o.0
    }
}
impl Eq for Pending {}
impl Ord for Pending {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0)
    }
}
impl PartialOrd for Pending {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Korányi distance from `q` to the unit Euclidean sphere, bracketed to
/// absolute width `tol`: returns `(lower, upper)`.
pub fn sphere_distance(q: &HeisPoint, tol: f64) -> (f64, f64) {
    sphere_distance_capped(q, tol, f64::INFINITY)
}

/// As [`sphere_distance`], but cells whose lower bound reaches `cap` are
/// discarded; a returned lower bound `>= cap` only certifies `d >= cap`.
pub fn sphere_distance_capped(q: &HeisPoint, tol: f64, cap: f64) -> (f64, f64) {
    let mut upper = f64::INFINITY;
    let mut heap = BinaryHeap::new();
    for cell in Cell::grid(4) {
        let (at, lo) = cell_bounds(q, &cell);
        upper = upper.min(at);
        if lo < cap {
            heap.push(Pending(lo, cell));
        }
    }
    let mut steps = 0usize;
    while let Some(Pending(lo, cell)) = heap.pop() {
        if lo >= upper - tol || cell.size < 1e-12 || steps > 1_000_000 {
            return (lo.min(upper), upper);
        }
        steps += 1;
        for child in cell.split() {
            let (at, clo) = cell_bounds(q, &child);
            upper = upper.min(at);
            if clo < upper.min(cap) - tol {
                heap.push(Pending(clo, child));
            }
        }
    }
    (cap.min(upper - tol).max(0.0), upper)
}

/// `Some(true)` if `d(q, sphere) >= thr` is certified, `Some(false)` if a
/// sphere point closer than `thr` was found, `None` if unresolved at cell size `min_size`.
pub fn sphere_distance_decide(q: &HeisPoint, thr: f64, min_size: f64) -> Option<bool> {
    let mut stack = Cell::grid(4);
    let mut unresolved = false;
    while let Some(cell) = stack.pop() {
        let (at, lo) = cell_bounds(q, &cell);
        if at < thr {
            return Some(false);
        }
        if lo >= thr {
            continue;
        }
        if cell.size < min_size {
            unresolved = true;
            continue;
        }
        stack.extend(cell.split());
    }
    (!unresolved).then_some(true)
}

/// Certified `d(q, unit sphere) >= thr`; unresolved cases count as false.
pub fn sphere_distance_at_least(q: &HeisPoint, thr: f64) -> bool {
    sphere_distance_decide(q, thr, 1e-5) == Some(true)
}

/// The image `A_{s,g}(B_eucl(0,1)) = g * dilation(s, B)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeisObstacle {
    pub level: usize,
    pub center: HeisPoint,
    pub scale: f64,
}

impl HeisObstacle {
    /// Coordinates of `p` in the frame where the obstacle is the unit ball.
    fn local(&self, p: &HeisPoint) -> HeisPoint {
        dilate(1.0 / self.scale, &h_mul(&h_inv(&self.center), p))
    }

    fn global(&self, u: &HeisPoint) -> HeisPoint {
        h_mul(&self.center, &dilate(self.scale, u))
    }

    pub fn contains(&self, p: &HeisPoint) -> bool {
        self.local(p).euclid() <= 1.0
    }

    /// Bracket of `d(p, boundary)`, of width `tol * scale`.
    pub fn boundary_distance(&self, p: &HeisPoint, tol: f64) -> (f64, f64) {
        let (lo, hi) = sphere_distance(&self.local(p), tol);
        (lo * self.scale, hi * self.scale)
    }

    pub fn boundary_distance_at_least(&self, p: &HeisPoint, thr: f64) -> bool {
        // The obstacle lies in the closed Korányi ball B(center, scale).
        if koranyi_dist(p, &self.center) - self.scale >= thr && !self.contains(p) {
            return true;
        }
        sphere_distance_at_least(&self.local(p), thr / self.scale)
    }
}

/// Width, in units of the obstacle scale, of distance brackets used for
/// measurement; branch and bound needs about `1/LOCAL_TOL` cells near a
/// smooth minimum.
pub const LOCAL_TOL: f64 = 1e-2;

/// Built sponge state: levels of centers `G_k` with their obstacles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeisSpongeState {
    pub n: Vec<u64>,
    /// `s_0 = 1, s_k = s_{k-1} / n_k`.
    pub scales: Vec<f64>,
    /// `levels[k-1] = G_k`.
    pub levels: Vec<Vec<HeisPoint>>,
    pub seed: u64,
    /// Candidate lattice step used for each level after the first.
    pub steps: Vec<f64>,
}

impl HeisSpongeState {
    /// State with `G_1 = {0}`.
    pub fn new(n: Vec<u64>, seed: u64) -> Result<Self> {
        if n.is_empty() {
            return Err(Error::InvalidSpec("sequence must be nonempty".into()));
        }
        if let Some((i, v)) = n.iter().enumerate().find(|(_, &v)| v < 3) {
            return Err(Error::InvalidSpec(format!("n_{} = {v} must be >= 3", i + 1)));
        }
        let mut scales = vec![1.0];
        for &v in &n {
            let last = *scales.last().unwrap_or(&1.0);
            scales.push(last / v as f64);
        }
        Ok(HeisSpongeState {
            n,
            scales,
            levels: vec![vec![HeisPoint::IDENTITY]],
            seed,
            steps: Vec::new(),
        })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn obstacles(&self) -> Vec<HeisObstacle> {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(i, g)| {
                let scale = self.scales[i + 1];
                g.iter().map(move |&center| HeisObstacle { level: i + 1, center, scale })
            })
            .collect()
    }

    /// Certified `d(g, boundary(S_k)) >= thr` for `g` in the open pre-sponge.
    pub fn clear_of_boundary(&self, g: &HeisPoint, thr: f64) -> bool {
        let omega = HeisObstacle { level: 0, center: HeisPoint::IDENTITY, scale: 1.0 };
        if !omega.contains(g) {
            return false;
        }
        self.obstacles()
            .iter()
            .all(|r| !r.contains(g) && r.boundary_distance_at_least(g, thr))
            && omega.boundary_distance_at_least(g, thr)
    }
}

/// Lattice points with spacing `step` inside the closed unit Euclidean ball.
pub fn candidate_lattice(step: f64) -> Vec<HeisPoint> {
    let m = (1.0 / step).floor() as i64;
    let mut out = Vec::new();
    for i in -m..=m {
        for j in -m..=m {
            for k in -m..=m {
                let p = HeisPoint::new(i as f64 * step, j as f64 * step, k as f64 * step);
                if p.euclid() <= 1.0 {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Maximality summary of a greedy net.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetReport {
    pub level: usize,
    pub candidates: usize,
    pub admissible: usize,
    pub accepted: usize,
    /// Candidates farther than `2 s_k` from every accepted point, obstacle and `boundary(Omega)`.
    pub uncovered: usize,
}

/// Adds level `k+1 = state.depth() + 1` by greedy selection over a shuffled
/// candidate lattice: accept points with certified `d(g, boundary(S_k)) >= s_k`
/// and `d(g, g') >= s_k` from every accepted `g'`.
pub fn greedy_net(state: &mut HeisSpongeState, step: f64, seed: u64) -> Result<NetReport> {
    let k = state.depth();
    if k >= state.n.len() {
        return Err(Error::Range(format!("sequence has no entry for level {}", k + 1)));
    }
    let sk = state.scales[k];
    if !(step > 0.0) || step > sk / 4.0 {
        return Err(Error::Precondition(format!(
            "candidate step {step} must be in (0, s_k/4 = {}]",
            sk / 4.0
        )));
    }
    let mut cands = candidate_lattice(step);
    cands.shuffle(&mut seeded(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    let admissible: Vec<bool> = cands.par_iter().map(|g| state.clear_of_boundary(g, sk)).collect();
    let mut accepted: Vec<HeisPoint> = Vec::new();
    for (g, &ok) in cands.iter().zip(&admissible) {
        if ok && accepted.iter().all(|a| koranyi_dist(g, a) >= sk) {
            accepted.push(*g);
        }
    }
    let omega = HeisObstacle { level: 0, center: HeisPoint::IDENTITY, scale: 1.0 };
    let obstacles = state.obstacles();
    let uncovered = cands
        .par_iter()
        .filter(|g| {
            let near_point = accepted.iter().any(|a| koranyi_dist(g, a) <= 2.0 * sk);
            let near_obstacle = obstacles
                .iter()
                .chain(std::iter::once(&omega))
                .any(|r| r.contains(g) || sphere_distance_decide(&r.local(g), 2.0 * sk / r.scale, 1e-5) != Some(true));
            !(near_point || near_obstacle)
        })
        .count();
    let report = NetReport {
        level: k + 1,
        candidates: cands.len(),
        admissible: admissible.iter().filter(|&&a| a).count(),
        accepted: accepted.len(),
        uncovered,
    };
    state.levels.push(accepted);
    state.steps.push(step);
    Ok(report)
}

/// Builds levels `1..=levels` with the default lattice step `s_k / 4`.
pub fn build_state(n: Vec<u64>, levels: usize, seed: u64) -> Result<(HeisSpongeState, Vec<NetReport>)> {
    let mut state = HeisSpongeState::new(n, seed)?;
    let mut reports = Vec::new();
    while state.depth() < levels {
        let step = state.scales[state.depth()] / 4.0;
        reports.push(greedy_net(&mut state, step, seed)?);
    }
    Ok((state, reports))
}

/// Worst case found by [`heis_separation_verify`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparationWorst {
    /// Measured distance divided by its required bound.
    pub ratio: f64,
    /// Smallest distance attained between sampled points and the other set.
    pub measured: f64,
    /// Certified lower bound for the sampled points.
    pub certified: f64,
    pub bound: f64,
    pub margin: f64,
    /// `(level, index)` pairs; the second is `None` for `boundary(Omega)`.
    pub witness: ((usize, usize), Option<(usize, usize)>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeisSeparationReport {
    pub pass: bool,
    pub pairs: Option<SeparationWorst>,
    pub boundary: Option<SeparationWorst>,
    /// Largest `diam(R) / s_k`, measured on boundary samples.
    pub diam_ratio: f64,
    pub samples_per_obstacle: usize,
    pub failures: Vec<((usize, usize), Option<(usize, usize)>)>,
}

fn sphere_samples(m: usize) -> Vec<HeisPoint> {
    Cell::grid(m)
        .iter()
        .map(|c| {
            let p = c.center();
            HeisPoint::new(p[0], p[1], p[2])
        })
        .collect()
}

/// Korányi diameter of the unit Euclidean ball, measured on sphere samples.
pub fn unit_ball_diameter(m: usize) -> f64 {
    let pts = sphere_samples(m);
    pts.par_iter()
        .map(|p| pts.iter().map(|q| koranyi_dist(p, q)).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

/// Checks `d(R, R') >= s_{k-1}/3` (`k` the larger level), `d(R, boundary(Omega)) >= s_{k-1}/2`
/// and `diam(R) <= 2 s_k` using `samples` boundary points per obstacle; a
/// measured distance passes when it is at least the bound minus the sampling
/// margin `s_k * holder_margin(h)`.
pub fn heis_separation_verify(state: &HeisSpongeState, samples: usize) -> Result<HeisSeparationReport> {
    let m = ((samples as f64 / 6.0).sqrt().floor() as usize).max(1);
    let unit = sphere_samples(m);
    let h = 2.0 / m as f64 * std::f64::consts::FRAC_1_SQRT_2;
    let obstacles = state.obstacles();
    let index: Vec<(usize, usize)> = state
        .levels
        .iter()
        .enumerate()
        .flat_map(|(i, g)| (0..g.len()).map(move |j| (i + 1, j)))
        .collect();
    let omega = HeisObstacle { level: 0, center: HeisPoint::IDENTITY, scale: 1.0 };
    // Distance from sampled boundary points of `a` to the set `b` (0 if they
    // meet) as (certified lower bound, attained value), nearest samples first.
    let sampled = |a: &HeisObstacle, b: &HeisObstacle, inside_b_counts: bool| -> (f64, f64) {
        let mut pts: Vec<(f64, HeisPoint)> = unit
            .iter()
            .map(|u| {
                let p = b.local(&a.global(u));
                (koranyi_norm(&p), p)
            })
            .collect();
        pts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let (mut lo, mut hi) = (f64::INFINITY, f64::INFINITY);
        for (_, p) in pts {
            if (p.euclid() <= 1.0) == inside_b_counts {
                return (0.0, 0.0);
            }
            let (l, h) = sphere_distance_capped(&p, LOCAL_TOL, lo);
            lo = lo.min(l);
            hi = hi.min(h);
        }
        (lo * b.scale, hi * b.scale)
    };
    let mut jobs = Vec::new();
    for i in 0..obstacles.len() {
        for j in 0..i {
            jobs.push((i, j));
        }
    }
    let pair_results: Vec<(f64, f64, f64, f64, usize, usize)> = jobs
        .par_iter()
        .filter_map(|&(i, j)| {
            let (a, b) = if obstacles[i].level >= obstacles[j].level { (i, j) } else { (j, i) };
            let (ra, rb) = (&obstacles[a], &obstacles[b]);
            let k = ra.level;
            let bound = state.scales[k - 1] / 3.0;
            let crude = koranyi_dist(&ra.center, &rb.center) - ra.scale - rb.scale;
            if crude >= 2.0 * bound {
                return None;
            }
            let (certified, measured) = sampled(ra, rb, true);
            Some((measured, certified, bound, ra.scale * holder_margin(h), a, b))
        })
        .collect();
    let boundary_results: Vec<(f64, f64, f64, f64, usize)> = (0..obstacles.len())
        .into_par_iter()
        .map(|i| {
            let r = &obstacles[i];
            let bound = 0.5 * state.scales[r.level - 1];
            let (certified, measured) = sampled(r, &omega, false);
            (measured, certified, bound, r.scale * holder_margin(h), i)
        })
        .collect();
    let mut failures = Vec::new();
    let mut worst_pair: Option<SeparationWorst> = None;
    for &(measured, certified, bound, margin, a, b) in &pair_results {
        let w = ((index[a]), Some(index[b]));
        if measured < bound - margin {
            failures.push(w);
        }
        if worst_pair.as_ref().is_none_or(|cur| measured / bound < cur.ratio) {
            worst_pair = Some(SeparationWorst { ratio: measured / bound, measured, certified, bound, margin, witness: w });
        }
    }
    let mut worst_boundary: Option<SeparationWorst> = None;
    for &(measured, certified, bound, margin, i) in &boundary_results {
        let w = (index[i], None);
        if measured < bound - margin {
            failures.push(w);
        }
        if worst_boundary.as_ref().is_none_or(|cur| measured / bound < cur.ratio) {
            worst_boundary = Some(SeparationWorst { ratio: measured / bound, measured, certified, bound, margin, witness: w });
        }
    }
    let diam_ratio = unit_ball_diameter(m.min(12));
    if diam_ratio > 2.0 * (1.0 + 1e-12) {
        failures.extend(index.iter().map(|&w| (w, None)));
    }
    Ok(HeisSeparationReport {
        pass: failures.is_empty(),
        pairs: worst_pair,
        boundary: worst_boundary,
        diam_ratio,
        samples_per_obstacle: unit.len(),
        failures,
    })
}

/// Monte Carlo volume of a Korányi ball.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub estimate: f64,
    /// Half-width of the 95% normal-approximation interval.
    pub ci: f64,
    pub samples: u64,
    pub hits: u64,
}

const BLOCK: u64 = 4096;

/// Lebesgue volume of `B(x, r)` by sampling its Euclidean bounding box.
pub fn heis_ball_volume(x: &HeisPoint, r: f64, samples: u64, seed: u64) -> Result<VolumeEstimate> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    if samples < 1000 {
        return Err(Error::Precondition(format!("need at least 1000 samples, got {samples}")));
    }
    // x * q for N(q) <= r has |q_x|, |q_y| <= r and |q_t| <= r^2.
    let tw = r * r + 0.5 * (x.x.abs() + x.y.abs()) * r;
    let lo = [x.x - r, x.y - r, x.t - tw];
    let span = [2.0 * r, 2.0 * r, 2.0 * tw];
    let blocks = samples.div_ceil(BLOCK);
    let hits: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let count = BLOCK.min(samples - b * BLOCK);
            (0..count)
                .filter(|_| {
                    let p = HeisPoint::new(
                        lo[0] + span[0] * rng.gen::<f64>(),
                        lo[1] + span[1] * rng.gen::<f64>(),
                        lo[2] + span[2] * rng.gen::<f64>(),
                    );
                    koranyi_dist(&p, x) < r
                })
                .count() as u64
        })
        .sum();
    let box_vol = span[0] * span[1] * span[2];
    let p = hits as f64 / samples as f64;
    Ok(VolumeEstimate {
        estimate: p * box_vol,
        ci: 1.96 * (p * (1.0 - p) / samples as f64).sqrt() * box_vol,
        samples,
        hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::{prop_assert, prop_assume, proptest, ProptestConfig};

    fn close(a: &HeisPoint, b: &HeisPoint, tol: f64) -> bool {
        (a.x - b.x).abs() <= tol && (a.y - b.y).abs() <= tol && (a.t - b.t).abs() <= tol
    }

    fn random_point(rng: &mut impl Rng) -> HeisPoint {
        HeisPoint::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
    }

    #[test]
    fn group_law_examples() {
        let p = h_mul(&HeisPoint::new(1.0, 0.0, 0.0), &HeisPoint::new(0.0, 1.0, 0.0));
        assert_eq!(p, HeisPoint::new(1.0, 1.0, 0.5));
        let g = HeisPoint::new(0.3, -1.2, 2.5);
        assert_eq!(h_mul(&g, &HeisPoint::IDENTITY), g);
        assert_eq!(h_mul(&g, &h_inv(&g)), HeisPoint::IDENTITY);
        assert_eq!(koranyi_dist(&HeisPoint::new(1.0, 0.0, 0.0), &HeisPoint::IDENTITY), 1.0);
        assert_eq!(koranyi_dist(&HeisPoint::new(0.0, 0.0, 1.0), &HeisPoint::IDENTITY), 1.0);
        assert_eq!(dilation(1.0, &g).unwrap(), g);
        assert_eq!(koranyi_norm(&dilation(2.0, &HeisPoint::new(1.0, 0.0, 0.0)).unwrap()), 2.0);
        assert!(matches!(dilation(0.0, &g), Err(Error::Domain(_))));
        assert!(matches!(dilation(-1.0, &g), Err(Error::Domain(_))));
    }

    #[test]
    fn random_identities() {
        let mut rng = seeded(1);
        for _ in 0..10_000 {
            let (p, q, w) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
            assert!(close(&h_mul(&h_mul(&p, &q), &w), &h_mul(&p, &h_mul(&q, &w)), 1e-12));
            let lhs = koranyi_dist(&h_mul(&w, &p), &h_mul(&w, &q));
            assert!((lhs - koranyi_dist(&p, &q)).abs() <= 1e-12 * lhs.max(1.0));
            let s = rng.gen_range(0.1..4.0);
            let a = dilate(s, &h_mul(&p, &q));
            let b = h_mul(&dilate(s, &p), &dilate(s, &q));
            assert!(close(&a, &b, 1e-12 * s * s * 100.0));
            let (d1, d2, d3) = (koranyi_dist(&p, &q), koranyi_dist(&q, &w), koranyi_dist(&p, &w));
            assert!(d3 <= d1 + d2 + 1e-12);
        }
    }

    #[test]
    fn exact_homogeneity() {
        let p = [q(3, 7), q(-2, 5), q(11, 13)];
        let s = q(5, 3);
        let lhs = koranyi_norm4_q(&dilation_q(&s, &p));
        let s4 = &s * &s * &s * &s;
        assert_eq!(lhs, s4 * koranyi_norm4_q(&p));
        let w = [q(1, 2), q(1, 3), q(-1, 4)];
        let inv = [-&p[0], -&p[1], -&p[2]];
        assert_eq!(h_mul_q(&p, &inv), [q(0, 1), q(0, 1), q(0, 1)]);
        assert_eq!(h_mul_q(&h_mul_q(&p, &w), &inv), h_mul_q(&p, &h_mul_q(&w, &inv)));
        assert_eq!(dilation_q(&s, &h_mul_q(&p, &w)), h_mul_q(&dilation_q(&s, &p), &dilation_q(&s, &w)));
    }

    #[test]
    fn sphere_distance_brackets_sampled_minimum() {
        let mut rng = seeded(3);
        let dense = sphere_samples(60);
        for _ in 0..20 {
            let q = random_point(&mut rng);
            let (lo, hi) = sphere_distance(&q, 1e-4);
            assert!(hi - lo <= 1e-4 + 1e-15);
            let sampled = dense.iter().map(|p| koranyi_dist(p, &q)).fold(f64::INFINITY, f64::min);
            assert!(lo <= sampled + 1e-12, "{lo} > {sampled}");
            assert!(sampled - hi <= holder_margin(2.0 / 60.0));
            assert_eq!(sphere_distance_at_least(&q, lo - 1e-6), true);
            assert_eq!(sphere_distance_at_least(&q, hi + 1e-6), false);
        }
        // d(0, sphere) = min over r^2 + t^2 = 1 of (r^4 + t^2)^{1/4} = (3/4)^{1/4}.
        let (lo, hi) = sphere_distance(&HeisPoint::IDENTITY, 1e-6);
        let want = 0.75f64.powf(0.25);
        assert!(lo <= want + 1e-12 && want <= hi + 1e-12);
    }

    #[test]
    fn unit_ball_diameter_is_two() {
        let d = unit_ball_diameter(10);
        assert!(d <= 2.0 + 1e-12 && d >= 2.0 - 1e-2, "{d}");
    }

    #[test]
    fn net_and_separation() {
        let (state, reports) = build_state(vec![3, 3], 2, 7).unwrap();
        assert_eq!(state.levels[0], vec![HeisPoint::IDENTITY]);
        let r = &reports[0];
        assert!(r.accepted > 0, "{r:?}");
        assert_eq!(r.uncovered, 0);
        let s1 = state.scales[1];
        let g2 = &state.levels[1];
        for (i, a) in g2.iter().enumerate() {
            for b in &g2[i + 1..] {
                assert!(koranyi_dist(a, b) >= s1);
            }
            assert!(state.obstacles()[0].boundary_distance(a, LOCAL_TOL).1 >= s1);
        }
        let rep = heis_separation_verify(&state, 600).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.pairs.as_ref().unwrap().ratio >= 1.0);

        let mut bad = state.clone();
        let shifted = h_mul(&bad.levels[1][0], &HeisPoint::new(0.01, 0.0, 0.0));
        bad.levels[1].push(shifted);
        let last = bad.levels[1].len() - 1;
        let rep = heis_separation_verify(&bad, 600).unwrap();
        assert!(!rep.pass);
        assert!(rep.failures.contains(&((2, last), Some((2, 0)))) || rep.failures.contains(&((2, 0), Some((2, last)))), "{:?}", rep.failures);
        let again = build_state(vec![3, 3], 2, 7).unwrap().0;
        assert_eq!(again, state);
    }

    #[test]
    fn net_preconditions() {
        let mut st = HeisSpongeState::new(vec![3, 3], 0).unwrap();
        assert!(matches!(greedy_net(&mut st, 0.1, 0), Err(Error::Precondition(_))));
        assert!(HeisSpongeState::new(vec![2], 0).is_err());
        let mut one = HeisSpongeState::new(vec![3], 0).unwrap();
        assert!(matches!(greedy_net(&mut one, 0.05, 0), Err(Error::Range(_))));
    }

    #[test]
    fn ball_volume() {
        // vol B(0,1) = 2 pi int_0^1 2 sqrt(1 - rho^4) rho d rho = pi^2 / 2.
        let v = heis_ball_volume(&HeisPoint::IDENTITY, 1.0, 200_000, 5).unwrap();
        let exact = std::f64::consts::PI.powi(2) / 2.0;
        assert!((v.estimate - exact).abs() <= 2.0 * v.ci, "{v:?}");
        let g = HeisPoint::new(0.7, -1.1, 0.4);
        let w = heis_ball_volume(&g, 1.0, 200_000, 6).unwrap();
        assert!((w.estimate - exact).abs() <= 2.0 * w.ci, "{w:?}");
        let big = heis_ball_volume(&HeisPoint::IDENTITY, 2.0, 200_000, 5).unwrap();
        let ratio = big.estimate / v.estimate;
        assert!((ratio - 16.0).abs() < 16.0 * 0.04, "{ratio}");
        let tiny = heis_ball_volume(&HeisPoint::IDENTITY, 1e-3, 10_000, 5).unwrap();
        assert!(tiny.estimate < 1e-10);
        assert!(matches!(heis_ball_volume(&g, 1.0, 999, 0), Err(Error::Precondition(_))));
        assert!(matches!(heis_ball_volume(&g, 0.0, 1000, 0), Err(Error::Domain(_))));
        let again = heis_ball_volume(&HeisPoint::IDENTITY, 1.0, 200_000, 5).unwrap();
        assert_eq!(again.hits, v.hits);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn dilation_is_homogeneous(x in -3.0f64..3.0, y in -3.0f64..3.0, t in -3.0f64..3.0, s in 0.01f64..10.0) {
            let p = HeisPoint::new(x, y, t);
            let lhs = koranyi_norm(&dilation(s, &p).unwrap());
            prop_assert!((lhs - s * koranyi_norm(&p)).abs() <= 1e-12 * lhs.max(1.0));
        }

        #[test]
        fn holder_margin_bounds_close_points(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0,
                                             da in -0.1f64..0.1, db in -0.1f64..0.1, dc in -0.1f64..0.1) {
            let p = HeisPoint::new(a, b, c);
            let q = HeisPoint::new(a + da, b + db, c + dc);
            prop_assume!(p.euclid() <= 1.0 && q.euclid() <= 1.0);
            let h = (da * da + db * db + dc * dc).sqrt();
            prop_assert!(koranyi_dist(&p, &q) <= holder_margin(h) + 1e-12);
        }
    }
}
