//! Face-adjacency graph of the live tiles at one level.
//!
//! Distances between tile centers are kept as integers in half-tile units
//! squared where exactness matters, and as `f64` otherwise.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{pow_q, qu, to_f64, Q};
use crate::sponge::{PointQ, SpongeSpec, TileId};

/// Default limit on graph vertices.
pub const DEFAULT_MAX_VERTICES: usize = 100_000;

#[derive(Clone, Debug)]
pub struct TileGraph {
    pub dim: usize,
    pub level: usize,
    /// Side length `s_k` of every tile (and every edge).
    pub side: Q,
    /// Mass of each tile; all tiles of a level carry the same mass.
    pub mass: Q,
    coords: Vec<Vec<u64>>,
    index: HashMap<Vec<u64>, usize>,
    adj: Vec<Vec<usize>>,
    side_f: f64,
}

impl TileGraph {
    /// Live tiles of `spec` at `level`, joined when they share a face.
    pub fn build(spec: &SpongeSpec, level: usize, cap: usize) -> Result<Self> {
        let tiles = spec.live_tiles(level, cap)?;
        let coords: Vec<Vec<u64>> = tiles.into_iter().map(|t| t.coords).collect();
        let side = spec.scale(level)?;
        let mass = pow_q(&side, spec.dim() as u32);
        Ok(Self::from_cells(spec.dim(), level, side, mass, coords))
    }

    /// Graph on an arbitrary set of grid cells of side `side`.
    pub fn from_cells(dim: usize, level: usize, side: Q, mass: Q, mut coords: Vec<Vec<u64>>) -> Self {
        coords.sort();
        coords.dedup();
        let index: HashMap<Vec<u64>, usize> = coords
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        let mut adj = vec![Vec::new(); coords.len()];
        let mut probe = vec![0u64; dim];
        for (i, c) in coords.iter().enumerate() {
            for j in 0..dim {
                probe.copy_from_slice(c);
                probe[j] = c[j] + 1;
                if let Some(&k) = index.get(&probe) {
                    adj[i].push(k);
                    adj[k].push(i);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let side_f = to_f64(&side);
        TileGraph {
            dim,
            level,
            side,
            mass,
            coords,
            index,
            adj,
            side_f,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn coords(&self, v: usize) -> &[u64] {
        &self.coords[v]
    }

    pub fn tile(&self, v: usize) -> TileId {
        TileId {
            level: self.level,
            coords: self.coords[v].clone(),
        }
    }

    pub fn vertex(&self, coords: &[u64]) -> Option<usize> {
        self.index.get(coords).copied()
    }

    /// Vertex of the tile at `coords`, or an argument error.
    pub fn require(&self, coords: &[u64]) -> Result<usize> {
        self.vertex(coords)
            .ok_or_else(|| Error::Argument(format!("{coords:?} is not a live tile at level {}", self.level)))
    }

    pub fn center(&self, v: usize) -> PointQ {
        let half = Q::new(BigInt::from(1), BigInt::from(2));
        PointQ::new(
            self.coords[v]
                .iter()
                .map(|&a| (qu(a) + &half) * &self.side)
                .collect(),
        )
    }

    /// Squared center distance in tile units.
    pub fn dist2_units(&self, u: usize, v: usize) -> u128 {
        self.coords[u]
            .iter()
            .zip(&self.coords[v])
            .map(|(&a, &b)| {
                let t = a.abs_diff(b) as u128;
                t * t
            })
            .sum()
    }

    /// Euclidean distance between tile centers.
    pub fn dist(&self, u: usize, v: usize) -> f64 {
        (self.dist2_units(u, v) as f64).sqrt() * self.side_f
    }

    pub fn side_f64(&self) -> f64 {
        self.side_f
    }

    /// Hop counts from `src`, restricted to vertices with `allowed[v]` when given.
    pub fn bfs(&self, src: usize, allowed: Option<&[bool]>) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        if allowed.is_some_and(|a| !a[src]) {
            return dist;
        }
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &w in &self.adj[u] {
                if dist[w].is_none() && allowed.is_none_or(|a| a[w]) {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Shortest vertex path from `a` to `b` inside `allowed` (all vertices when `None`).
    pub fn shortest_path(&self, a: usize, b: usize, allowed: Option<&[bool]>) -> Option<Vec<usize>> {
        let dist = self.bfs(b, allowed);
        dist[a]?;
        let mut path = vec![a];
        let mut cur = a;
        while cur != b {
            let d = dist[cur]?;
            cur = *self.adj[cur]
                .iter()
                .find(|&&w| dist[w] == Some(d - 1))?;
            path.push(cur);
        }
        Some(path)
    }

    /// Component label per vertex.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.len()];
        let mut next = 0;
        for s in 0..self.len() {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &w in &self.adj[u] {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Vertices sorted by squared distance from `x`, with the distances.
    pub fn by_distance(&self, x: usize) -> Vec<(u128, usize)> {
        let mut order: Vec<(u128, usize)> = (0..self.len()).map(|v| (self.dist2_units(x, v), v)).collect();
        order.sort_unstable();
        order
    }
}

/// `M_s f(x)`: supremum over `rho in (0, s)` of the mass-weighted average of `f`
/// over the open ball `B(x, rho)` of tile centers.
pub fn discrete_maximal(graph: &TileGraph, f: &[f64], x: usize, s: f64) -> f64 {
    maximal_from_order(f, &graph.by_distance(x), s / graph.side_f64())
}

/// Maximal function with the distance order precomputed; `s_units` in tile units.
fn maximal_from_order(f: &[f64], order: &[(u128, usize)], s_units: f64) -> f64 {
    let s2 = s_units * s_units;
    let mut best = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let d2 = order[i].0;
        // Balls with radius just above this distance exist only when it is below s.
        if d2 as f64 >= s2 {
            break;
        }
        while i < order.len() && order[i].0 == d2 {
            sum += f[order[i].1];
            i += 1;
        }
        best = best.max(sum / i as f64);
    }
    if best == f64::NEG_INFINITY {
        0.0
    } else {
        best
    }
}

/// `M_s f` at every vertex.
pub fn maximal_all(graph: &TileGraph, f: &[f64], s: f64) -> Vec<f64> {
    use rayon::prelude::*;
    (0..graph.len())
        .into_par_iter()
        .map(|v| discrete_maximal(graph, f, v, s))
        .collect()
}

/// Measured doubling constant `sup mu(B(x, 2 rho)) / mu(B(x, rho))` over open
/// balls of radius `rho <= max_radius` (all radii when `None`).
pub fn doubling_constant(graph: &TileGraph, max_radius: Option<f64>) -> f64 {
    use rayon::prelude::*;
    let limit2 = max_radius.map(|r| {
        let u = r / graph.side_f64();
        u * u
    });
    (0..graph.len())
        .into_par_iter()
        .map(|x| {
            let order = graph.by_distance(x);
            let d2: Vec<u128> = order.iter().map(|p| p.0).collect();
            // Counts change where rho^2 crosses a squared distance or a quarter of one.
            let mut breaks: Vec<f64> = d2
                .iter()
                .flat_map(|&t| [t as f64, t as f64 / 4.0])
                .collect();
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            let count_below = |r2: f64| d2.partition_point(|&t| (t as f64) < r2);
            let mut best: f64 = 1.0;
            for w in breaks.windows(2) {
                let r2 = 0.5 * (w[0] + w[1]);
                if limit2.is_some_and(|l| r2 > l) {
                    break;
                }
                let inner = count_below(r2);
                if inner > 0 {
                    best = best.max(count_below(4.0 * r2) as f64 / inner as f64);
                }
            }
            best
        })
        .reduce(|| 1.0, f64::max)
}

/// Outcome of a weak-type maximal inequality check at one configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeakTypeCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Check `mu({M_R f > lambda} cap B(x, r)) <= D^3 ||f|_{B(x, r + R)}||_1 / lambda`.
pub fn weak_type_check(graph: &TileGraph, f: &[f64], lambda: f64, x: usize, r: f64, big_r: f64, doubling: f64) -> WeakTypeCheck {
    let m = to_f64(&graph.mass);
    let order = graph.by_distance(x);
    let unit = graph.side_f64();
    let within = |radius: f64| {
        let lim = radius / unit;
        let lim2 = lim * lim;
        order.iter().take_while(move |p| (p.0 as f64) < lim2).map(|p| p.1)
    };
    let lhs: f64 = within(r)
        .filter(|&v| discrete_maximal(graph, f, v, big_r) > lambda)
        .count() as f64
        * m;
    let l1: f64 = within(r + big_r).map(|v| f[v] * m).sum();
    let rhs = doubling.powi(3) * l1 / lambda;
    WeakTypeCheck {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-12),
    }
}
