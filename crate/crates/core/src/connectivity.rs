//! Obstacle-avoiding paths on tile graphs: quasiconvexity, penalized
//! geodesics with gaps, maximal connectivity probes, curve patching and the
//! connectivity function `alpha`.
//!
//! An obstacle is a vertex weight `g` with values in `[0, 1]`; a set `E` is its
//! indicator. An edge `uv` meets the obstacle in length `s (g(u) + g(v)) / 2`,
//! so it counts fully when both tiles lie in `E` and half when one does.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{discrete_maximal, TileGraph};
use crate::rational::Q;
use crate::sponge::TileId;

const EPS: f64 = 1e-9;

/// Indicator weights of a vertex set.
pub fn indicator(graph: &TileGraph, set: &[usize]) -> Vec<f64> {
    let mut g = vec![0.0; graph.len()];
    for &v in set {
        g[v] = 1.0;
    }
    g
}

/// A discrete curve fragment: consecutive vertices are joined by a graph
/// edge, or by a straight chord (a gap) where `jumps[i]` is set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathFragment {
    pub vertices: Vec<usize>,
    pub jumps: Vec<bool>,
}

/// Lengths of a fragment against an obstacle, recomputed from its vertices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FragmentMetrics {
    pub len: f64,
    pub gap: f64,
    pub obstacle: f64,
    pub edges: usize,
}

impl FragmentMetrics {
    /// `obstacle + gap`.
    pub fn penalty(&self) -> f64 {
        self.obstacle + self.gap
    }
}

/// Serialized form of a fragment: tile ids plus jump flags.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathRecord {
    pub tiles: Vec<TileId>,
    pub jumps: Vec<bool>,
}

impl PathFragment {
    pub fn single(v: usize) -> Self {
        PathFragment {
            vertices: vec![v],
            jumps: Vec::new(),
        }
    }

    /// Plain graph path.
    pub fn from_vertices(vertices: Vec<usize>) -> Self {
        let jumps = vec![false; vertices.len().saturating_sub(1)];
        PathFragment { vertices, jumps }
    }

    pub fn first(&self) -> usize {
        self.vertices[0]
    }

    pub fn last(&self) -> usize {
        *self.vertices.last().expect("fragments are nonempty")
    }

    /// Check structure: nonempty, one flag per step, non-jump steps are edges.
    pub fn validate(&self, graph: &TileGraph) -> Result<()> {
        if self.vertices.is_empty() || self.jumps.len() + 1 != self.vertices.len() {
            return Err(Error::Argument("malformed path fragment".into()));
        }
        for (i, w) in self.vertices.windows(2).enumerate() {
            if w.iter().any(|&v| v >= graph.len()) {
                return Err(Error::Argument(format!("vertex out of range at step {i}")));
            }
            if !self.jumps[i] && !graph.has_edge(w[0], w[1]) {
                return Err(Error::Argument(format!(
                    "step {i} joins non-adjacent tiles without a jump"
                )));
            }
        }
        Ok(())
    }

    pub fn metrics(&self, graph: &TileGraph, g: &[f64]) -> FragmentMetrics {
        let s = graph.side_f64();
        let mut m = FragmentMetrics {
            len: 0.0,
            gap: 0.0,
            obstacle: 0.0,
            edges: 0,
        };
        for (i, w) in self.vertices.windows(2).enumerate() {
            if self.jumps[i] {
                let c = graph.dist(w[0], w[1]);
                m.len += c;
                m.gap += c;
            } else {
                m.len += s;
                m.edges += 1;
                m.obstacle += s * 0.5 * (g[w[0]] + g[w[1]]);
            }
        }
        m
    }

    pub fn record(&self, graph: &TileGraph) -> PathRecord {
        PathRecord {
            tiles: self.vertices.iter().map(|&v| graph.tile(v)).collect(),
            jumps: self.jumps.clone(),
        }
    }
}

/// Why no fragment was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Infeasible {
    pub reason: String,
    pub from: TileId,
    pub to: TileId,
    pub budget: f64,
    /// Graph length of the shortest edge path, if one exists.
    pub shortest_len: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum GeodesicOutcome {
    Found {
        path: PathFragment,
        metrics: FragmentMetrics,
    },
    Infeasible(Infeasible),
}

impl GeodesicOutcome {
    pub fn found(&self) -> Option<(&PathFragment, &FragmentMetrics)> {
        match self {
            GeodesicOutcome::Found { path, metrics } => Some((path, metrics)),
            GeodesicOutcome::Infeasible(_) => None,
        }
    }
}

fn infeasible(graph: &TileGraph, x: usize, y: usize, budget: f64) -> Infeasible {
    let hops = graph.bfs(x, None)[y];
    let shortest_len = hops.map(|h| h as f64 * graph.side_f64());
    let reason = match shortest_len {
        None => "endpoints lie in different components".to_string(),
        Some(l) => format!("shortest edge path has length {l:.6} > budget {budget:.6}"),
    };
    Infeasible {
        reason,
        from: graph.tile(x),
        to: graph.tile(y),
        budget,
        shortest_len,
    }
}

struct Label {
    v: usize,
    len: f64,
    cost: f64,
    parent: Option<usize>,
    jump: bool,
    alive: bool,
}

#[derive(PartialEq)]
struct Key {
    cost: f64,
    len: f64,
    id: usize,
}

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap.
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.len.total_cmp(&self.len))
            .then(other.id.cmp(&self.id))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Fragment from `x` to `y` of length at most `budget_factor * d(x, y)`
/// minimizing `obstacle + gap`, by bicriteria label setting over `(cost, len)`.
pub fn penalized_geodesic(
    graph: &TileGraph,
    x: usize,
    y: usize,
    g: &[f64],
    budget_factor: f64,
    allow_jumps: bool,
) -> Result<GeodesicOutcome> {
    if x >= graph.len() || y >= graph.len() {
        return Err(Error::Argument("endpoint is not a vertex".into()));
    }
    if g.len() != graph.len() || g.iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(Error::Argument("obstacle weights must be one value in [0, 1] per vertex".into()));
    }
    if budget_factor < 1.0 {
        return Err(Error::Argument("length budget factor must be at least 1".into()));
    }
    if x == y {
        let path = PathFragment::single(x);
        let metrics = path.metrics(graph, g);
        return Ok(GeodesicOutcome::Found { path, metrics });
    }
    let budget = budget_factor * graph.dist(x, y);
    let tol = EPS * budget.max(graph.side_f64());
    let s = graph.side_f64();
    let to_y: Vec<f64> = (0..graph.len()).map(|v| graph.dist(v, y)).collect();

    let mut labels: Vec<Label> = Vec::new();
    let mut front: Vec<Vec<usize>> = vec![Vec::new(); graph.len()];
    let mut heap = BinaryHeap::new();

    let mut offer = |labels: &mut Vec<Label>, heap: &mut BinaryHeap<Key>, l: Label| {
        if l.len + to_y[l.v] > budget + tol {
            return;
        }
        let at = &mut front[l.v];
        if at
            .iter()
            .any(|&i| labels[i].len <= l.len + tol && labels[i].cost <= l.cost + tol)
        {
            return;
        }
        at.retain(|&i| {
            let keep = !(l.len <= labels[i].len + tol && l.cost <= labels[i].cost + tol);
            if !keep {
                labels[i].alive = false;
            }
            keep
        });
        let id = labels.len();
        heap.push(Key {
            cost: l.cost,
            len: l.len,
            id,
        });
        at.push(id);
        labels.push(l);
    };

    offer(
        &mut labels,
        &mut heap,
        Label {
            v: x,
            len: 0.0,
            cost: 0.0,
            parent: None,
            jump: false,
            alive: true,
        },
    );
    while let Some(Key { id, .. }) = heap.pop() {
        if !labels[id].alive {
            continue;
        }
        let (u, len, cost) = (labels[id].v, labels[id].len, labels[id].cost);
        if u == y {
            let mut vertices = Vec::new();
            let mut jumps = Vec::new();
            let mut cur = Some(id);
            while let Some(i) = cur {
                vertices.push(labels[i].v);
                if labels[i].parent.is_some() {
                    jumps.push(labels[i].jump);
                }
                cur = labels[i].parent;
            }
            vertices.reverse();
            jumps.reverse();
            let path = PathFragment { vertices, jumps };
            let metrics = path.metrics(graph, g);
            return Ok(GeodesicOutcome::Found { path, metrics });
        }
        for &w in graph.neighbors(u) {
            offer(
                &mut labels,
                &mut heap,
                Label {
                    v: w,
                    len: len + s,
                    cost: cost + s * 0.5 * (g[u] + g[w]),
                    parent: Some(id),
                    jump: false,
                    alive: true,
                },
            );
        }
        if allow_jumps {
            for w in 0..graph.len() {
                if w == u {
                    continue;
                }
                let c = graph.dist(u, w);
                if len + c + to_y[w] > budget + tol {
                    continue;
                }
                offer(
                    &mut labels,
                    &mut heap,
                    Label {
                        v: w,
                        len: len + c,
                        cost: cost + c,
                        parent: Some(id),
                        jump: true,
                        alive: true,
                    },
                );
            }
        }
    }
    Ok(GeodesicOutcome::Infeasible(infeasible(graph, x, y, budget)))
}

/// Result of [`quasiconvexity_scan`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuasiconvexityScan {
    /// Exact square of the worst ratio; `None` when some pair is disconnected.
    #[serde(with = "crate::rational::qopt")]
    pub ratio_sq: Option<Q>,
    pub ratio: f64,
    pub witness: Option<(TileId, TileId)>,
    pub disconnected: Option<(TileId, TileId)>,
    pub pairs: usize,
}

/// Worst ratio of graph distance to Euclidean distance between tile centers,
/// over `pairs` (all vertex pairs when `None`).
pub fn quasiconvexity_scan(graph: &TileGraph, pairs: Option<&[(usize, usize)]>) -> Result<QuasiconvexityScan> {
    quasiconvexity_within(graph, pairs, None)
}

fn quasiconvexity_within(
    graph: &TileGraph,
    pairs: Option<&[(usize, usize)]>,
    allowed: Option<&[bool]>,
) -> Result<QuasiconvexityScan> {
    let owned: Vec<(usize, usize)>;
    let pairs = match pairs {
        Some(p) => {
            if p.iter().any(|&(a, b)| a >= graph.len() || b >= graph.len()) {
                return Err(Error::Argument("pair endpoint is not a vertex".into()));
            }
            p
        }
        None => {
            let keep = |v: usize| allowed.is_none_or(|a| a[v]);
            owned = (0..graph.len())
                .filter(|&a| keep(a))
                .flat_map(|a| ((a + 1)..graph.len()).filter(move |&b| keep(b)).map(move |b| (a, b)))
                .collect();
            &owned
        }
    };
    let mut sources: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    sources.sort_unstable();
    sources.dedup();
    let bfs: std::collections::HashMap<usize, Vec<Option<u32>>> = sources
        .par_iter()
        .map(|&a| (a, graph.bfs(a, allowed)))
        .collect();
    // Best (hops^2, dist^2) as an exact fraction; ties keep the first pair.
    let mut best: Option<(u128, u128, usize, usize)> = None;
    let mut disconnected = None;
    for &(a, b) in pairs {
        if a == b {
            continue;
        }
        let Some(h) = bfs[&a][b] else {
            disconnected.get_or_insert((a, b));
            continue;
        };
        let h2 = (h as u128) * (h as u128);
        let d2 = graph.dist2_units(a, b);
        if best.is_none_or(|(bh, bd, _, _)| h2 * bd > bh * d2) {
            best = Some((h2, d2, a, b));
        }
    }
    let (ratio_sq, ratio, witness) = match (disconnected, best) {
        (Some(_), _) => (None, f64::INFINITY, None),
        (None, Some((h2, d2, a, b))) => {
            let r = Q::new(h2.into(), d2.into());
            let f = (h2 as f64 / d2 as f64).sqrt();
            (Some(r), f, Some((graph.tile(a), graph.tile(b))))
        }
        (None, None) => (Some(Q::from_integer(1.into())), 1.0, None),
    };
    Ok(QuasiconvexityScan {
        ratio_sq,
        ratio,
        witness,
        disconnected: disconnected.map(|(a, b)| (graph.tile(a), graph.tile(b))),
        pairs: pairs.len(),
    })
}

/// Result of [`max_connectivity_probe`]; all achieved values come from the path.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConnectivityProbe {
    pub x: TileId,
    pub y: TileId,
    pub obstacle_size: usize,
    pub p: f64,
    pub c_target: f64,
    pub delta_target: f64,
    pub distance: f64,
    /// `max(M_{C d} 1_E (x), M_{C d} 1_E (y))`.
    pub tau: f64,
    pub path: Option<PathRecord>,
    pub metrics: Option<FragmentMetrics>,
    pub achieved_c: Option<f64>,
    pub achieved_delta: Option<f64>,
    pub pass: bool,
    pub infeasible: Option<Infeasible>,
}

/// Probe the maximal connectivity inequalities
/// `Len <= C d(x, y)` and `int 1_E + Gap <= delta tau^{1/p} d(x, y)` for one triple.
#[allow(clippy::too_many_arguments)]
pub fn max_connectivity_probe(
    graph: &TileGraph,
    x: usize,
    y: usize,
    obstacle: &[usize],
    p: f64,
    c_target: f64,
    delta_target: f64,
    allow_jumps: bool,
) -> Result<ConnectivityProbe> {
    if p < 1.0 {
        return Err(Error::Argument("exponent p must be at least 1".into()));
    }
    if x == y {
        return Err(Error::Argument("probe endpoints must differ".into()));
    }
    let g = indicator(graph, obstacle);
    let distance = graph.dist(x, y);
    let s = c_target * distance;
    let tau = discrete_maximal(graph, &g, x, s).max(discrete_maximal(graph, &g, y, s));
    if tau >= 1.0 {
        return Err(Error::Precondition(format!(
            "maximal density of the obstacle at the endpoints is {tau} >= 1"
        )));
    }
    let outcome = penalized_geodesic(graph, x, y, &g, c_target, allow_jumps)?;
    let mut probe = ConnectivityProbe {
        x: graph.tile(x),
        y: graph.tile(y),
        obstacle_size: obstacle.len(),
        p,
        c_target,
        delta_target,
        distance,
        tau,
        path: None,
        metrics: None,
        achieved_c: None,
        achieved_delta: None,
        pass: false,
        infeasible: None,
    };
    match outcome {
        GeodesicOutcome::Found { path, .. } => {
            path.validate(graph)?;
            let m = path.metrics(graph, &g);
            let achieved_c = m.len / distance;
            let achieved_delta = achieved_delta(m.penalty(), tau, p, distance);
            probe.pass = m.len <= c_target * distance * (1.0 + EPS) && achieved_delta <= delta_target;
            probe.path = Some(path.record(graph));
            probe.metrics = Some(m);
            probe.achieved_c = Some(achieved_c);
            probe.achieved_delta = Some(achieved_delta);
        }
        GeodesicOutcome::Infeasible(w) => probe.infeasible = Some(w),
    }
    Ok(probe)
}

/// `penalty / (tau^{1/p} d)`, with `0/0 = 0` and `c/0 = infinity`.
pub fn achieved_delta(penalty: f64, tau: f64, p: f64, distance: f64) -> f64 {
    let denom = tau.powf(1.0 / p) * distance;
    if penalty <= EPS * distance {
        0.0
    } else if denom == 0.0 {
        f64::INFINITY
    } else {
        penalty / denom
    }
}

/// Replay of the exponent upgrade: a path with `penalty <= big_delta tau^{1/p} d`
/// satisfies `penalty <= delta tau^{1/q} d` whenever `tau <= tau0`.
/// Returns `None` when `tau > tau0` (the claim does not apply).
pub fn exponent_upgrade_holds(penalty: f64, tau: f64, distance: f64, q: f64, delta: f64, tau0: f64) -> Option<bool> {
    if tau > tau0 {
        return None;
    }
    Some(penalty <= delta * tau.powf(1.0 / q) * distance * (1.0 + EPS) + EPS * distance)
}

/// Result of [`patch_curve`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum PatchOutcome {
    Patched {
        path: PathFragment,
        len_in: f64,
        len_out: f64,
        replaced_len: f64,
        /// Measured quasiconvexity of the subgraph induced by `Y`.
        lambda_y: f64,
        bound_holds: bool,
    },
    Infeasible {
        reason: String,
        from: TileId,
        to: TileId,
    },
}

/// Replace every maximal excursion of `path` outside `y_set` by a shortest
/// route inside `y_set` between the excursion's boundary vertices.
pub fn patch_curve(graph: &TileGraph, path: &PathFragment, y_set: &[bool]) -> Result<PatchOutcome> {
    path.validate(graph)?;
    if y_set.len() != graph.len() {
        return Err(Error::Argument("membership mask has the wrong length".into()));
    }
    if !y_set[path.first()] || !y_set[path.last()] {
        return Err(Error::Precondition("path endpoints must lie in Y".into()));
    }
    let zero = vec![0.0; graph.len()];
    let len_in = path.metrics(graph, &zero).len;
    let mut out_v = vec![path.first()];
    let mut out_j = Vec::new();
    let mut replaced_len = 0.0;
    let mut i = 0;
    let n = path.vertices.len();
    while i + 1 < n {
        let next = path.vertices[i + 1];
        if y_set[next] {
            out_v.push(next);
            out_j.push(path.jumps[i]);
            i += 1;
            continue;
        }
        let a = path.vertices[i];
        let mut j = i + 1;
        while !y_set[path.vertices[j]] {
            j += 1;
        }
        let b = path.vertices[j];
        let segment = PathFragment {
            vertices: path.vertices[i..=j].to_vec(),
            jumps: path.jumps[i..j].to_vec(),
        };
        replaced_len += segment.metrics(graph, &zero).len;
        let Some(route) = graph.shortest_path(a, b, Some(y_set)) else {
            return Ok(PatchOutcome::Infeasible {
                reason: "excursion endpoints are disconnected inside Y".into(),
                from: graph.tile(a),
                to: graph.tile(b),
            });
        };
        for &v in &route[1..] {
            out_v.push(v);
            out_j.push(false);
        }
        i = j;
    }
    let patched = PathFragment {
        vertices: out_v,
        jumps: out_j,
    };
    let len_out = patched.metrics(graph, &zero).len;
    let lambda_y = if replaced_len > 0.0 {
        quasiconvexity_within(graph, None, Some(y_set))?.ratio
    } else {
        1.0
    };
    let finite_lambda = if lambda_y.is_finite() {
        lambda_y
    } else {
        // Only pairs inside one component matter for the bound.
        component_quasiconvexity(graph, y_set)
    };
    let bound_holds = len_out <= len_in + finite_lambda * replaced_len + EPS * len_in.max(1.0);
    Ok(PatchOutcome::Patched {
        path: patched,
        len_in,
        len_out,
        replaced_len,
        lambda_y: finite_lambda,
        bound_holds,
    })
}

/// Quasiconvexity of `Y` over pairs lying in a common component of `Y`.
fn component_quasiconvexity(graph: &TileGraph, y_set: &[bool]) -> f64 {
    let members: Vec<usize> = (0..graph.len()).filter(|&v| y_set[v]).collect();
    members
        .par_iter()
        .map(|&a| {
            let h = graph.bfs(a, Some(y_set));
            members
                .iter()
                .filter(|&&b| b > a)
                .filter_map(|&b| h[b].map(|k| k as f64 / (graph.dist2_units(a, b) as f64).sqrt()))
                .fold(1.0, f64::max)
        })
        .reduce(|| 1.0, f64::max)
}

/// One `(x, y, g)` sample for [`alpha_estimate`].
#[derive(Clone, Debug)]
pub struct ObstacleSample {
    pub x: usize,
    pub y: usize,
    pub weights: Vec<f64>,
}

/// Result of [`alpha_estimate`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub value: f64,
    pub admitted: usize,
    pub skipped: usize,
    /// Index of the sample attaining the maximum.
    pub witness: Option<usize>,
}

/// `alpha(L, tau)`: worst normalized penalty `min (int g + Gap) / d(x, y)` over
/// samples whose endpoint maximal functions (at scale `L d`) are below `tau`.
pub fn alpha_estimate(graph: &TileGraph, big_l: f64, tau: f64, samples: &[ObstacleSample]) -> Result<AlphaEstimate> {
    if big_l < 1.0 || !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Argument("need L >= 1 and tau in (0, 1]".into()));
    }
    let values = samples
        .par_iter()
        .map(|smp| {
            if smp.x == smp.y {
                return Ok(None);
            }
            let d = graph.dist(smp.x, smp.y);
            let m = discrete_maximal(graph, &smp.weights, smp.x, big_l * d)
                .max(discrete_maximal(graph, &smp.weights, smp.y, big_l * d));
            if m >= tau {
                return Ok(None);
            }
            let out = penalized_geodesic(graph, smp.x, smp.y, &smp.weights, big_l, true)?;
            let (_, metrics) = out.found().ok_or_else(|| Error::Precondition("direct chord must be feasible".into()))?;
            Ok(Some(metrics.penalty() / d))
        })
        .collect::<Result<Vec<Option<f64>>>>()?;
    let mut best = 0.0;
    let mut witness = None;
    let mut admitted = 0;
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = v {
            admitted += 1;
            if *v > best || witness.is_none() {
                best = v.max(best);
                witness = Some(i);
            }
        }
    }
    Ok(AlphaEstimate {
        value: best,
        admitted,
        skipped: samples.len() - admitted,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DEFAULT_MAX_VERTICES;
    use crate::rational::qi;
    use crate::sponge::SpongeSpec;

    fn graph(n: &[u64], level: usize) -> TileGraph {
        let spec = SpongeSpec::full(2, n.to_vec()).unwrap();
        TileGraph::build(&spec, level, DEFAULT_MAX_VERTICES).unwrap()
    }

    #[test]
    fn ring_quasiconvexity() {
        let g = graph(&[3], 1);
        let a = g.require(&[0, 1]).unwrap();
        let b = g.require(&[2, 1]).unwrap();
        let scan = quasiconvexity_scan(&g, Some(&[(a, b)])).unwrap();
        assert_eq!(scan.ratio_sq, Some(qi(4)));
        assert_eq!(g.bfs(a, None)[b], Some(4));
        let adj = g.neighbors(a)[0];
        let scan = quasiconvexity_scan(&g, Some(&[(a, adj), (a, a)])).unwrap();
        assert_eq!(scan.ratio_sq, Some(qi(1)));
        let all = quasiconvexity_scan(&g, None).unwrap();
        assert_eq!(all.ratio_sq, Some(qi(4)));
        assert_eq!(all.pairs, 28);
    }

    #[test]
    fn geodesic_without_obstacle_is_shortest() {
        let g = graph(&[3, 3], 2);
        let x = g.require(&[0, 4]).unwrap();
        let y = g.require(&[8, 4]).unwrap();
        let out = penalized_geodesic(&g, x, y, &vec![0.0; g.len()], 2.0, false).unwrap();
        let (_, m) = out.found().unwrap();
        assert_eq!(m.obstacle, 0.0);
        assert_eq!(m.edges as u32, g.bfs(x, None)[y].unwrap());
    }

    #[test]
    fn geodesic_all_obstacle_jumps() {
        let g = graph(&[3], 1);
        let x = g.require(&[0, 1]).unwrap();
        let y = g.require(&[2, 1]).unwrap();
        let w = vec![1.0; g.len()];
        let out = penalized_geodesic(&g, x, y, &w, 3.0, true).unwrap();
        let (p, m) = out.found().unwrap();
        let d = g.dist(x, y);
        assert!((m.penalty() - d).abs() < 1e-12);
        assert!((m.gap - d).abs() < 1e-12);
        assert_eq!(p.vertices, vec![x, y]);
        let plain = penalized_geodesic(&g, x, y, &w, 3.0, false).unwrap();
        let (_, m) = plain.found().unwrap();
        assert!((m.obstacle - m.len).abs() < 1e-12);
    }

    #[test]
    fn geodesic_avoids_top_middle() {
        let g = graph(&[3], 1);
        let x = g.require(&[0, 1]).unwrap();
        let y = g.require(&[2, 1]).unwrap();
        let e = [g.require(&[1, 2]).unwrap()];
        let out = penalized_geodesic(&g, x, y, &indicator(&g, &e), 3.0, false).unwrap();
        let (p, m) = out.found().unwrap();
        assert_eq!(m.obstacle, 0.0);
        assert!((m.len - 4.0 / 3.0).abs() < 1e-12);
        assert!(p.vertices.contains(&g.require(&[1, 0]).unwrap()));
    }

    #[test]
    fn geodesic_infeasible_budget() {
        let g = graph(&[3], 1);
        let x = g.require(&[0, 1]).unwrap();
        let y = g.require(&[2, 1]).unwrap();
        let out = penalized_geodesic(&g, x, y, &vec![0.0; 8], 1.5, false).unwrap();
        match out {
            GeodesicOutcome::Infeasible(w) => assert!(w.shortest_len.is_some()),
            _ => panic!("expected infeasible"),
        }
    }

    /// Every simple fragment from x to y, as (len, penalty).
    fn enumerate(g: &TileGraph, x: usize, y: usize, w: &[f64], jumps: bool) -> Vec<(f64, f64)> {
        fn rec(g: &TileGraph, w: &[f64], jumps: bool, y: usize, path: &mut PathFragment, seen: &mut Vec<bool>, out: &mut Vec<(f64, f64)>) {
            let u = path.last();
            if u == y {
                let m = path.metrics(g, w);
                out.push((m.len, m.penalty()));
                return;
            }
            for v in 0..g.len() {
                if seen[v] {
                    continue;
                }
                let edge = g.has_edge(u, v);
                for jump in [false, true] {
                    if (!jump && !edge) || (jump && !jumps) {
                        continue;
                    }
                    seen[v] = true;
                    path.vertices.push(v);
                    path.jumps.push(jump);
                    rec(g, w, jumps, y, path, seen, out);
                    path.vertices.pop();
                    path.jumps.pop();
                    seen[v] = false;
                }
            }
        }
        let mut out = Vec::new();
        let mut seen = vec![false; g.len()];
        seen[x] = true;
        rec(g, w, jumps, y, &mut PathFragment::single(x), &mut seen, &mut out);
        out
    }

    #[test]
    fn geodesic_is_pareto_optimal_on_ring() {
        let g = graph(&[3], 1);
        let weights = [
            vec![0.0, 1.0, 0.0, 0.5, 0.0, 1.0, 0.0, 0.0],
            vec![1.0; 8],
            vec![0.3, 0.9, 0.1, 0.0, 1.0, 0.2, 0.7, 0.4],
        ];
        for w in &weights {
            for (x, y) in [(0, 7), (1, 6), (0, 4), (3, 4)] {
                for budget in [1.0, 1.5, 2.0, 3.0] {
                    for jumps in [false, true] {
                        let d = g.dist(x, y);
                        let out = penalized_geodesic(&g, x, y, w, budget, jumps).unwrap();
                        let alts: Vec<(f64, f64)> = enumerate(&g, x, y, w, jumps)
                            .into_iter()
                            .filter(|a| a.0 <= budget * d + 1e-9)
                            .collect();
                        match out.found() {
                            Some((_, m)) => {
                                assert!(m.len <= budget * d + 1e-9);
                                for (l, c) in alts {
                                    assert!(c >= m.penalty() - 1e-9, "{c} < {}", m.penalty());
                                    assert!(!(l < m.len - 1e-9 && c < m.penalty() - 1e-9));
                                }
                            }
                            None => assert!(alts.is_empty()),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn probe_with_empty_obstacle() {
        let g = graph(&[3, 3], 2);
        let x = g.require(&[0, 0]).unwrap();
        let y = g.require(&[8, 8]).unwrap();
        let pr = max_connectivity_probe(&g, x, y, &[], 1.0, 2.0, 0.5, false).unwrap();
        assert_eq!(pr.tau, 0.0);
        assert_eq!(pr.achieved_delta, Some(0.0));
        assert!(pr.pass);
    }

    #[test]
    fn probe_recomputes_from_path() {
        let g = graph(&[3, 3], 2);
        let x = g.require(&[0, 4]).unwrap();
        let y = g.require(&[8, 4]).unwrap();
        let e = [g.require(&[4, 0]).unwrap()];
        let pr = max_connectivity_probe(&g, x, y, &e, 1.0, 2.0, 1.0, true).unwrap();
        let m = pr.metrics.unwrap();
        let delta = pr.achieved_delta.unwrap();
        assert!(delta.is_finite());
        assert!(m.penalty() <= delta * pr.tau * pr.distance + 1e-12);
        assert!(m.len <= pr.achieved_c.unwrap() * pr.distance + 1e-12);
    }

    #[test]
    fn probe_rejects_saturated_obstacle() {
        let g = graph(&[3], 1);
        let all: Vec<usize> = (0..g.len()).collect();
        assert!(matches!(
            max_connectivity_probe(&g, 0, 7, &all, 1.0, 2.0, 1.0, true),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn exponent_upgrade_replay() {
        // tau0 = (delta / (2 Delta))^{pq/(q-p)} with p = 1, q = 2, delta = 1/4, Delta = 2
        let tau0 = (0.25f64 / 4.0).powi(2);
        let (tau, d) = (tau0 * 0.5, 1.0);
        let penalty = 2.0 * tau * d;
        assert_eq!(exponent_upgrade_holds(penalty, tau, d, 2.0, 0.25, tau0), Some(true));
        assert_eq!(exponent_upgrade_holds(penalty, 2.0 * tau0, d, 2.0, 0.25, tau0), None);
    }

    #[test]
    fn patch_keeps_inside_path() {
        let g = graph(&[3, 3], 2);
        let x = g.require(&[0, 0]).unwrap();
        let y = g.require(&[0, 8]).unwrap();
        let p = PathFragment::from_vertices(g.shortest_path(x, y, None).unwrap());
        let out = patch_curve(&g, &p, &vec![true; g.len()]).unwrap();
        match out {
            PatchOutcome::Patched { path, replaced_len, .. } => {
                assert_eq!(path, p);
                assert_eq!(replaced_len, 0.0);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn patch_replaces_excursion() {
        let g = graph(&[3, 3], 2);
        let x = g.require(&[0, 0]).unwrap();
        let y = g.require(&[2, 0]).unwrap();
        let mid = g.require(&[1, 0]).unwrap();
        let p = PathFragment::from_vertices(vec![x, mid, y]);
        let mut ys = vec![true; g.len()];
        ys[mid] = false;
        match patch_curve(&g, &p, &ys).unwrap() {
            PatchOutcome::Patched { path, bound_holds, lambda_y, len_out, .. } => {
                assert!(path.vertices.iter().all(|&v| ys[v]));
                assert!(bound_holds);
                assert!(lambda_y >= 1.0);
                assert!(len_out > 2.0 * g.side_f64());
            }
            _ => panic!(),
        }
    }

    #[test]
    fn patch_reports_disconnection() {
        let g = graph(&[3], 1);
        let x = g.require(&[0, 1]).unwrap();
        let y = g.require(&[2, 1]).unwrap();
        let p = PathFragment::from_vertices(g.shortest_path(x, y, None).unwrap());
        let mut ys = vec![true; g.len()];
        ys[g.require(&[1, 0]).unwrap()] = false;
        ys[g.require(&[1, 2]).unwrap()] = false;
        assert!(matches!(patch_curve(&g, &p, &ys).unwrap(), PatchOutcome::Infeasible { .. }));
    }

    #[test]
    fn alpha_bounds_and_scaling() {
        let g = graph(&[3, 3], 2);
        let mut samples = Vec::new();
        let pairs = [([0, 0], [8, 8]), ([0, 4], [8, 4]), ([2, 0], [2, 8]), ([0, 8], [6, 2])];
        for (i, (a, b)) in pairs.iter().enumerate() {
            let x = g.require(a).unwrap();
            let y = g.require(b).unwrap();
            let mut base = vec![0.0; g.len()];
            for v in 0..g.len() {
                if (v * 7 + i) % 5 == 0 {
                    base[v] = 1.0;
                }
            }
            samples.push(ObstacleSample { x, y, weights: base });
        }
        let scaled = |c: f64| -> Vec<ObstacleSample> {
            samples
                .iter()
                .map(|smp| ObstacleSample {
                    weights: smp.weights.iter().map(|w| w / c).collect(),
                    ..smp.clone()
                })
                .collect()
        };
        for tau in [0.1, 0.2, 0.3] {
            let a = alpha_estimate(&g, 2.0, tau, &samples).unwrap();
            assert!(a.value <= 1.0 + 1e-12);
            for c in [2.0, 3.0] {
                if c * tau <= 1.0 {
                    // The family is closed under g -> g / c.
                    let mut closed = samples.clone();
                    closed.extend(scaled(c));
                    let lo = alpha_estimate(&g, 2.0, tau, &closed).unwrap();
                    let hi = alpha_estimate(&g, 2.0, c * tau, &samples).unwrap();
                    assert!(hi.value <= c * lo.value + 1e-9, "tau {tau} c {c}: {} vs {}", hi.value, lo.value);
                }
            }
        }
        let none = alpha_estimate(&g, 2.0, 1e-9, &samples[..1]).unwrap();
        assert_eq!(none.value, 0.0);
    }
}
