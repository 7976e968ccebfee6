//! Canned verification suites. Each returns report records; the CLI, the
//! Python bindings and the acceptance tests all run the same code.

use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::connectivity::{
    achieved_delta, exponent_upgrade_holds, max_connectivity_probe, quasiconvexity_scan, ConnectivityProbe,
};
use crate::constants::{
    filling_parameters, isoperimetric_constants, tau_threshold, verify_filling, FillingInputs,
};
use crate::error::{Error, Result};
use crate::graph::{doubling_constant, weak_type_check, TileGraph, DEFAULT_MAX_VERTICES};
use crate::heisenberg::{
    build_state, dilation, h_inv, h_mul, heis_ball_volume, heis_separation_verify, koranyi_dist, koranyi_norm,
    HeisPoint,
};
use crate::isoperimetry::{half_slice_content, projection_bound_check};
use crate::measure::{density_decay_scan, filling_density_check, filling_level, sample_sponge_points};
use crate::rational::{pow_q, q, qi, to_f64, to_pq, Q};
use crate::report::Check;
use crate::sponge::SpongeSpec;
use crate::uniformity::{bounded_turning, regular_polygon, turning_ratio};

pub const A_SEPARATION: &str = "Lemma squaresep: d(R, R') >= s_{k-1}/3";
pub const A_VOLUME: &str = "Lemma basicvol: mu(S_k) = prod_{i<=k} (1 - 1/n_i^d)";
pub const A_HALF_SLICE: &str = "Theorem 1, Case 4: H^{d-1}(S cap {x_1 = 1/2}) = prod (1 - 1/n_i^{d-1})";
pub const A_PROJECTION: &str = "Lemma projection: Theta(E, R) <= n sum_i |pi_i(boundary_i E)| / |pi_i R|";
pub const A_WEAK_TYPE: &str = "Lemma localmaximal: mu({M_R f > lambda} cap B) <= D^3 ||f||_1 / lambda";
pub const A_QUASICONVEX: &str = "quasiconvexity: d_graph(x, y) <= Lambda |x - y|";
pub const A_MAX_CONNECT: &str = "Def. finemax, Cor. deltasmall: int 1_E + Gap <= delta tau^{1/q} d(x, y)";
pub const A_FILLING: &str = "Lemma unifasympt: mu(Omega_r cap B \\ S) / mu(Omega_r cap B) < eps";
pub const A_DENSITY_DECAY: &str = "Thm. densitycarp: sup_x s_N(x, r) -> 0";
pub const A_HEIS_GROUP: &str = "Heisenberg group law, Koranyi gauge and dilations";
pub const A_HEIS_VOLUME: &str = "Heisenberg Haar measure: |B(x, 2r)| = 16 |B(x, r)|";
pub const A_HEIS_NET: &str = "Lemma sparsecollectionheis: 1/3-sparse obstacle collection";
pub const A_TURNING: &str = "Eq. boundturn: diam(gamma[s,t]) <= C |gamma(s) - gamma(t)|";
pub const A_TAU: &str = "Cor. deltasmall: tau_0 = min{1, (delta/(2 Delta))^{pq/(q-p)}}";
pub const A_ISOPERIMETRIC: &str = "Thm. largeenough: C_S = 2 D^{4 + 2 log2 Lambda_B} C_B, Lambda = 2 Lambda_B";

/// `n_i = 2i + 1` for `i = 1..=len`.
pub fn odd_sequence(len: usize) -> Vec<u64> {
    (1..=len as u64).map(|i| 2 * i + 1).collect()
}

/// Exhaustive exact separation for every listed dimension, sequence and depth.
pub fn separation_suite(dims: &[usize], seqs: &[Vec<u64>], depths: &[usize]) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &d in dims {
        for n in seqs {
            let spec = SpongeSpec::full(d, n.clone())?;
            for &depth in depths {
                let sep = spec.min_separation(depth)?;
                let bound = spec.scale(depth - 1)? / qi(3);
                out.push(
                    Check::verdict(format!("separation d={d} n={n:?} depth={depth}"), A_SEPARATION, sep.at_least(&bound))
                        .with("min_separation_sq", to_pq(&sep.distance_sq))
                        .with("min_separation", sep.distance.as_ref().map(to_pq))
                        .with("bound", to_pq(&bound))
                        .with("boxes", sep.box_count)
                        .with_witness(json!({
                            "a": sep.witness_a, "a_level": sep.witness_a_level,
                            "b": sep.witness_b, "b_level": sep.witness_b_level,
                        })),
                );
            }
        }
    }
    Ok(out)
}

/// Exact tile mass `count * s_k^d` against the product formula.
pub fn volume_check(spec: &SpongeSpec, depth: usize) -> Result<Check> {
    let d = spec.dim() as u32;
    let count = spec.live_tile_count(depth)?;
    let mass = Q::from_integer(count.clone().into()) * pow_q(&spec.scale(depth)?, d);
    let product = (1..=depth).fold(Q::one(), |acc, i| {
        acc * (Q::one() - Q::new(1.into(), num_bigint::BigInt::from(spec.n_at(i)).pow(d)))
    });
    Ok(Check::verdict(format!("volume d={} n={:?} depth={depth}", spec.dim(), spec.seq()), A_VOLUME, mass == product)
        .with("live_tiles", count.to_string())
        .with("mass", to_pq(&mass))
        .with("product", to_pq(&product)))
}

/// Slice count times `s_K^{d-1}` against the product formula.
pub fn half_slice_check(spec: &SpongeSpec, big_k: usize) -> Result<Check> {
    let (product, count) = half_slice_content(spec, big_k)?;
    let content = Q::from_integer(count.into()) * pow_q(&spec.scale(big_k)?, spec.dim() as u32 - 1);
    Ok(
        Check::verdict(format!("half-slice d={} n={:?} K={big_k}", spec.dim(), spec.seq()), A_HALF_SLICE, content == product)
            .with("slice_tiles", count.to_string())
            .with("content", to_pq(&content))
            .with("product", to_pq(&product)),
    )
}

/// Projection inequality on all subsets of a small grid, or on `random`
/// uniformly drawn subsets.
pub fn projection_suite(dims: &[usize], random: Option<usize>, seed: u64) -> Result<Check> {
    let total: usize = dims.iter().product();
    let sets: Vec<Vec<bool>> = match random {
        None => {
            if total > 20 {
                return Err(Error::Resource(format!("2^{total} subsets is too many for an exhaustive run")));
            }
            (0u64..1 << total)
                .map(|mask| (0..total).map(|i| mask >> i & 1 == 1).collect())
                .collect()
        }
        Some(count) => {
            let mut rng = crate::rng::seeded(seed);
            (0..count)
                .map(|_| {
                    let p: f64 = rng.gen_range(0.05..0.95);
                    (0..total).map(|_| rng.gen_bool(p)).collect()
                })
                .collect()
        }
    };
    let results = sets
        .par_iter()
        .map(|e| projection_bound_check(dims, e))
        .collect::<Result<Vec<_>>>()?;
    let violations: Vec<usize> = results.iter().enumerate().filter(|(_, r)| !r.holds).map(|(i, _)| i).collect();
    let worst = results
        .iter()
        .filter(|r| !r.rhs.is_zero())
        .map(|r| &r.lhs / &r.rhs)
        .max()
        .unwrap_or_else(Q::zero);
    let mode = if random.is_some() { "random" } else { "exhaustive" };
    let dims_s: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
    let mut check = Check::verdict(format!("projection {mode} {}", dims_s.join("x")), A_PROJECTION, violations.is_empty())
        .with("checks", sets.len())
        .with("violations", violations.len())
        .with("worst_lhs_over_rhs", to_pq(&worst));
    if let Some(&i) = violations.first() {
        check = check.with_witness(&sets[i]);
    }
    Ok(check)
}

/// Weak-type maximal inequality on random nonnegative functions and levels,
/// with `D` the measured doubling constant of the graph.
pub fn weak_type_suite(graph: &TileGraph, functions: usize, levels: usize, seed: u64) -> Result<Check> {
    if graph.is_empty() {
        return Err(Error::Argument("empty graph".into()));
    }
    let doubling = doubling_constant(graph, None);
    let s = graph.side_f64();
    let mut rng = crate::rng::seeded(seed);
    let n = graph.len();
    let mut configs = Vec::with_capacity(functions);
    for i in 0..functions {
        let f: Vec<f64> = match i % 3 {
            0 => (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(),
            1 => {
                let mut f = vec![0.0; n];
                for _ in 0..rng.gen_range(1..=4) {
                    f[rng.gen_range(0..n)] = rng.gen_range(1.0..10.0);
                }
                f
            }
            _ => {
                let c = rng.gen_range(0..n);
                let rad2 = rng.gen_range(1..=16u128);
                (0..n).map(|v| if graph.dist2_units(c, v) < rad2 { 1.0 } else { 0.0 }).collect()
            }
        };
        let x = rng.gen_range(0..n);
        let r = rng.gen_range(s..1.5);
        let big_r = rng.gen_range(s..1.0);
        configs.push((f, x, r, big_r));
    }
    let checks: Vec<(usize, usize, f64, bool)> = configs
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, (f, x, r, big_r))| {
            let top = f.iter().cloned().fold(0.0, f64::max).max(1e-3);
            (0..levels).map(move |j| {
                let lambda = top * (j + 1) as f64 / (levels + 1) as f64;
                let c = weak_type_check(graph, f, lambda, *x, *r, *big_r, doubling);
                (i, j, if c.rhs > 0.0 { c.lhs / c.rhs } else { 0.0 }, c.holds)
            })
        })
        .collect();
    let failures: Vec<_> = checks.iter().filter(|c| !c.3).collect();
    let worst = checks.iter().map(|c| c.2).fold(0.0, f64::max);
    let mut check = Check::verdict("weak-type maximal bound", A_WEAK_TYPE, failures.is_empty())
        .with("doubling", doubling)
        .with("checks", checks.len())
        .with("violations", failures.len())
        .with("worst_lhs_over_rhs", worst);
    if let Some(f) = failures.first() {
        check = check.with_witness(json!({"function": f.0, "level": f.1}));
    }
    Ok(check)
}

/// Ratio of graph to Euclidean distance for two tiles, exact when it is rational.
pub fn quasiconvexity_pair(graph: &TileGraph, a: &[u64], b: &[u64]) -> Result<Check> {
    let (x, y) = (graph.require(a)?, graph.require(b)?);
    let scan = quasiconvexity_scan(graph, Some(&[(x, y)]))?;
    let exact = scan.ratio_sq.as_ref().and_then(crate::rational::exact_sqrt);
    Ok(Check::measured(format!("quasiconvexity {a:?}-{b:?}"), A_QUASICONVEX)
        .with("ratio_sq", scan.ratio_sq.as_ref().map(to_pq))
        .with("ratio", exact.as_ref().map(to_pq))
        .with("ratio_f64", scan.ratio))
}

/// Worst graph/Euclidean ratio over all pairs, checked against `bound` when given.
pub fn quasiconvexity_full(graph: &TileGraph, bound: Option<f64>) -> Result<(Check, f64)> {
    let scan = quasiconvexity_scan(graph, None)?;
    let name = format!("quasiconvexity all pairs ({} vertices)", graph.len());
    let check = match bound {
        Some(b) => Check::verdict(name, A_QUASICONVEX, scan.ratio <= b).with("bound", b),
        None => Check::measured(name, A_QUASICONVEX),
    };
    Ok((
        check
            .with("lambda", scan.ratio)
            .with("lambda_sq", scan.ratio_sq.as_ref().map(to_pq))
            .with("pairs", scan.pairs)
            .with_witness(json!({"pair": scan.witness, "disconnected": scan.disconnected})),
        scan.ratio,
    ))
}

/// Outcome of [`exponent_upgrade_suite`].
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct UpgradeSuite {
    /// `sup (int 1_E + Gap) / (tau d)` over every feasible candidate.
    pub big_delta: f64,
    pub tau0: f64,
    pub c_target: f64,
    pub delta: f64,
    pub candidates: usize,
    /// Probes with `tau < tau0`, in sampling order, at most the requested count.
    pub probes: Vec<ConnectivityProbe>,
    pub passed: usize,
    pub feasible: usize,
    pub infeasible_with_witness: usize,
    pub pass: bool,
}

fn random_obstacle(graph: &TileGraph, rng: &mut impl Rng, x: usize, y: usize) -> Vec<usize> {
    let n = graph.len();
    let mut e: Vec<usize> = match rng.gen_range(0..4) {
        0 => Vec::new(),
        1 => (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..n)).collect(),
        2 => {
            let c = rng.gen_range(0..n);
            let rad2 = rng.gen_range(1..=9u128);
            (0..n).filter(|&v| graph.dist2_units(c, v) < rad2).collect()
        }
        _ => {
            // A small blob on the straight segment between the endpoints.
            let t: f64 = rng.gen_range(0.2..0.8);
            let (cx, cy) = (graph.coords(x), graph.coords(y));
            let mid: Vec<f64> = cx.iter().zip(cy).map(|(&a, &b)| a as f64 + t * (b as f64 - a as f64)).collect();
            let rad2 = rng.gen_range(1.0..4.0);
            (0..n)
                .filter(|&v| {
                    let c = graph.coords(v);
                    c.iter().zip(&mid).map(|(&a, m)| (a as f64 - m).powi(2)).sum::<f64>() < rad2
                })
                .collect()
        }
    };
    e.retain(|&v| v != x && v != y);
    e.sort_unstable();
    e.dedup();
    e
}

/// Exponent upgrade from maximal `(C, Delta, 1)` to `(C, delta, 2)` connectivity.
/// `candidates` random triples are probed with `p = 1`; `Delta` is the largest
/// achieved constant; the first `count` triples with `tau < tau_threshold(1, 2,
/// delta, Delta)` must satisfy the `q = 2` bound with `C = c_target`.
pub fn exponent_upgrade_suite(
    graph: &TileGraph,
    c_target: f64,
    delta: &Q,
    candidates: usize,
    count: usize,
    seed: u64,
) -> Result<UpgradeSuite> {
    if graph.len() < 2 {
        return Err(Error::Argument("graph needs two vertices".into()));
    }
    let delta_f = to_f64(delta);
    let mut rng = crate::rng::seeded(seed);
    let triples: Vec<(usize, usize, Vec<usize>)> = (0..candidates)
        .map(|_| {
            let x = rng.gen_range(0..graph.len());
            let mut y = rng.gen_range(0..graph.len() - 1);
            if y >= x {
                y += 1;
            }
            let e = random_obstacle(graph, &mut rng, x, y);
            (x, y, e)
        })
        .collect();
    let probes: Vec<Option<ConnectivityProbe>> = triples
        .par_iter()
        .map(|(x, y, e)| match max_connectivity_probe(graph, *x, *y, e, 1.0, c_target, delta_f, false) {
            Ok(p) => Ok(Some(p)),
            // tau = 1: the maximal connectivity hypothesis does not apply.
            Err(Error::Precondition(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let probes: Vec<ConnectivityProbe> = probes.into_iter().flatten().collect();
    let big_delta = probes
        .iter()
        .filter_map(|p| p.achieved_delta)
        .filter(|d| d.is_finite())
        .fold(0.0, f64::max);
    let tau0_value = if big_delta == 0.0 {
        1.0
    } else {
        let bd = Q::from_float(big_delta).ok_or_else(|| Error::Domain("non-finite Delta".into()))?;
        tau_threshold(&qi(1), &qi(2), delta, &bd)?.approx
    };
    let selected: Vec<ConnectivityProbe> = probes.into_iter().filter(|p| p.tau < tau0_value).take(count).collect();
    let mut passed = 0;
    let mut feasible = 0;
    let mut infeasible_with_witness = 0;
    for p in &selected {
        match (&p.metrics, &p.infeasible) {
            (Some(m), _) => {
                feasible += 1;
                let len_ok = m.len <= c_target * p.distance * (1.0 + 1e-9);
                let bound_ok = exponent_upgrade_holds(m.penalty(), p.tau, p.distance, 2.0, delta_f, tau0_value) == Some(true);
                if len_ok && bound_ok {
                    passed += 1;
                }
            }
            (None, Some(_)) => infeasible_with_witness += 1,
            (None, None) => {}
        }
    }
    let pass = selected.len() == count && passed == feasible && feasible + infeasible_with_witness == selected.len();
    Ok(UpgradeSuite {
        big_delta,
        tau0: tau0_value,
        c_target,
        delta: delta_f,
        candidates,
        probes: selected,
        passed,
        feasible,
        infeasible_with_witness,
        pass,
    })
}

impl UpgradeSuite {
    pub fn check(&self) -> Check {
        let first_failure = self.probes.iter().find(|p| {
            p.metrics.as_ref().is_some_and(|m| {
                achieved_delta(m.penalty(), p.tau, 2.0, p.distance) > self.delta || m.len > self.c_target * p.distance * (1.0 + 1e-9)
            })
        });
        let mut c = Check::verdict("max-connectivity exponent upgrade", A_MAX_CONNECT, self.pass)
            .with("Delta_measured", self.big_delta)
            .with("tau0", self.tau0)
            .with("C", self.c_target)
            .with("delta", self.delta)
            .with("candidates", self.candidates)
            .with("probes", self.probes.len())
            .with("feasible", self.feasible)
            .with("passed", self.passed)
            .with("infeasible_with_witness", self.infeasible_with_witness)
            .with(
                "max_tau",
                self.probes.iter().map(|p| p.tau).fold(0.0, f64::max),
            );
        if let Some(p) = first_failure {
            c = c.with_witness(json!({"x": p.x, "y": p.y, "tau": p.tau, "path": p.path}));
        }
        c
    }
}

/// Largest `delta = 2^{-j}` with `1 - (1 - delta)^d < eps / (4^{d+1} sqrt(d)^d lambda(B(0, 1)))`,
/// with the irrational factors replaced by upper bounds.
pub fn filling_delta(d: usize, eps: &Q) -> Result<Q> {
    if d == 0 || *eps <= Q::zero() || *eps >= Q::one() {
        return Err(Error::Argument("need d >= 1 and eps in (0, 1)".into()));
    }
    let df = d as f64;
    let ball = std::f64::consts::PI.powf(df / 2.0) / gamma_half_integer(d + 2);
    let root = df.powf(df / 2.0);
    let up = |v: f64| Q::from_float(v * (1.0 + 1e-9)).expect("finite");
    let denom = pow_q(&qi(4), d as u32 + 1) * up(root) * up(ball);
    let target = eps / denom;
    let mut delta = q(1, 2);
    while Q::one() - pow_q(&(Q::one() - &delta), d as u32) >= target {
        delta /= qi(2);
    }
    Ok(delta)
}

/// `Gamma(m / 2)` for integer `m >= 1`.
fn gamma_half_integer(m: usize) -> f64 {
    if m % 2 == 0 {
        (1..m / 2).map(|k| k as f64).product()
    } else {
        let mut g = std::f64::consts::PI.sqrt();
        let mut a = 0.5;
        while a < m as f64 / 2.0 - 0.25 {
            g *= a;
            a += 1.0;
        }
        g
    }
}

/// Filling density at radius `r` for `n_i = 2i + 1`, truncated one level below the
/// selected `k`, with the tail beyond the sequence bounded by `1 / (2(2L + 1))^{d-1}`.
pub fn filling_suite(d: usize, eps: &Q, r: &Q, samples: usize, seed: u64) -> Result<Vec<Check>> {
    let delta = filling_delta(d, eps)?;
    let seq = odd_sequence(9);
    let probe = SpongeSpec::full(d, seq.clone())?;
    let k = filling_level(&probe, r, &delta)?;
    let spec = SpongeSpec::new(d, seq.clone(), k + 1)?;
    // sum_{i > L} (2i + 1)^{-d} <= int_L^inf (2x + 1)^{-2} dx = 1 / (2(2L + 1)).
    let tail = Q::new(1.into(), (2 * (2 * seq.len() as i64 + 1)).into());
    let pts = sample_sponge_points(&spec, k + 1, samples, seed)?;
    let fill = filling_density_check(&spec, r, &delta, eps, &pts, &tail)?;
    let mut out = vec![Check::verdict(format!("filling density d={d} r={}", to_pq(r)), A_FILLING, fill.pass)
        .with("delta", to_pq(&delta))
        .with("eps", to_pq(eps))
        .with("level_k", fill.level)
        .with("samples", fill.samples)
        .with("worst_ratio", to_pq(&fill.worst_ratio))
        .with("worst_ratio_f64", fill.worst_ratio_f64)
        .with_witness(&fill.witness)];

    let depth = 4;
    let decay_spec = SpongeSpec::new(d, seq, depth)?;
    let decay_pts = sample_sponge_points(&decay_spec, depth, samples.min(30), seed ^ 1)?;
    let radii: Vec<Q> = (1..=3).map(|j| decay_spec.scale(j)).collect::<Result<_>>()?;
    let rows = density_decay_scan(&decay_spec, &decay_pts, &radii, 1, depth)?;
    let decreasing = rows.windows(2).all(|w| w[1].1 < w[0].1);
    let table: Vec<_> = rows.iter().map(|(r, v)| json!({"r": to_pq(r), "sup_s1": to_pq(v), "sup_s1_f64": to_f64(v)})).collect();
    out.push(
        Check::verdict(format!("density decay d={d} N=1"), A_DENSITY_DECAY, decreasing)
            .with("rows", table)
            .with("samples", decay_pts.len())
            .with("depth", depth),
    );
    Ok(out)
}

/// One record per radius: `(r, sup_x s_N(x, r))`, ready to plot.
pub fn density_table(spec: &SpongeSpec, radii: &[Q], n_excluded: usize, samples: usize, seed: u64) -> Result<Vec<Check>> {
    let depth = spec.depth();
    let pts = sample_sponge_points(spec, depth, samples, seed)?;
    let rows = density_decay_scan(spec, &pts, radii, n_excluded, depth)?;
    Ok(rows
        .iter()
        .map(|(r, v)| {
            Check::measured(format!("density r={}", to_pq(r)), A_DENSITY_DECAY)
                .with("r", to_pq(r))
                .with("r_f64", to_f64(r))
                .with("N", n_excluded)
                .with("sup_sN", to_pq(v))
                .with("sup_sN_f64", to_f64(v))
                .with("samples", samples)
        })
        .collect())
}

/// Group axioms, left invariance and homogeneity on `count` random instances.
pub fn heis_identities(count: usize, seed: u64) -> Result<Check> {
    let errors: Vec<[f64; 5]> = (0..count.div_ceil(1024))
        .into_par_iter()
        .map(|block| {
            let mut rng = crate::rng::block_rng(seed, block as u64);
            let mut pt = || HeisPoint::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let mut worst = [0.0f64; 5];
            for _ in 0..1024.min(count - block * 1024) {
                let (a, b, c) = (pt(), pt(), pt());
                let s = 0.1 + 1.9 * (koranyi_norm(&c) / 2.0).min(1.0);
                let diff = |p: &HeisPoint, q: &HeisPoint| (p.x - q.x).abs().max((p.y - q.y).abs()).max((p.t - q.t).abs());
                let assoc = diff(&h_mul(&h_mul(&a, &b), &c), &h_mul(&a, &h_mul(&b, &c)));
                let ident = diff(&h_mul(&a, &HeisPoint::IDENTITY), &a).max(diff(&h_mul(&HeisPoint::IDENTITY, &a), &a));
                let inv = diff(&h_mul(&a, &h_inv(&a)), &HeisPoint::IDENTITY).max(diff(&h_mul(&h_inv(&a), &a), &HeisPoint::IDENTITY));
                let left = (koranyi_dist(&h_mul(&c, &a), &h_mul(&c, &b)) - koranyi_dist(&a, &b)).abs();
                let hom = dilation(s, &a).map(|p| (koranyi_norm(&p) - s * koranyi_norm(&a)).abs()).unwrap_or(f64::INFINITY);
                for (w, e) in worst.iter_mut().zip([assoc, ident, inv, left, hom]) {
                    *w = w.max(e);
                }
            }
            worst
        })
        .collect();
    let worst = errors.iter().fold([0.0f64; 5], |mut acc, e| {
        for (a, b) in acc.iter_mut().zip(e) {
            *a = a.max(*b);
        }
        acc
    });
    let tol = 1e-10;
    Ok(Check::verdict("Heisenberg identities", A_HEIS_GROUP, worst.iter().all(|&e| e < tol))
        .with("instances", count)
        .with("tolerance", tol)
        .with("associativity", worst[0])
        .with("identity", worst[1])
        .with("inverse", worst[2])
        .with("left_invariance", worst[3])
        .with("homogeneity", worst[4]))
}

/// Monte Carlo ratio `|B(0, 2r)| / |B(0, r)|` against 16 within `rel_tol`.
pub fn heis_volume_ratio(r: f64, samples: u64, seed: u64, rel_tol: f64) -> Result<Check> {
    let small = heis_ball_volume(&HeisPoint::IDENTITY, r, samples, seed)?;
    let large = heis_ball_volume(&HeisPoint::IDENTITY, 2.0 * r, samples, seed ^ 0x9e37_79b9)?;
    let ratio = large.estimate / small.estimate;
    Ok(Check::verdict("Heisenberg ball volume scaling", A_HEIS_VOLUME, (ratio - 16.0).abs() <= 16.0 * rel_tol)
        .with("r", r)
        .with("samples", samples)
        .with("volume_r", small.estimate)
        .with("volume_r_ci", small.ci)
        .with("volume_2r", large.estimate)
        .with("volume_2r_ci", large.ci)
        .with("ratio", ratio)
        .with("expected", 16.0)
        .with("rel_tol", rel_tol))
}

/// Build a Heisenberg sponge state and verify its sparsity; with `inject_fault`
/// a near-duplicate of the first deepest-level center is appended and the
/// check passes only if verification fails and names that pair.
pub fn heis_net_suite(n: Vec<u64>, levels: usize, seed: u64, samples: usize, inject_fault: bool) -> Result<Vec<Check>> {
    let (state, nets) = build_state(n, levels, seed)?;
    let rep = heis_separation_verify(&state, samples)?;
    let mut out = vec![Check::verdict(format!("Heisenberg net levels={levels} seed={seed}"), A_HEIS_NET, rep.pass)
        .with("centers", state.levels.iter().map(Vec::len).collect::<Vec<_>>())
        .with("nets", &nets)
        .with("pairs", &rep.pairs)
        .with("boundary", &rep.boundary)
        .with("diam_ratio", rep.diam_ratio)
        .with("samples_per_obstacle", rep.samples_per_obstacle)
        .with("centers_by_level", &state.levels)
        .with_witness(&rep.failures)];
    if inject_fault && state.depth() >= 2 {
        let mut bad = state.clone();
        let lvl = bad.levels.len() - 1;
        let shifted = h_mul(&bad.levels[lvl][0], &HeisPoint::new(0.01, 0.0, 0.0));
        bad.levels[lvl].push(shifted);
        let last = bad.levels[lvl].len() - 1;
        let level = lvl + 1;
        let rep = heis_separation_verify(&bad, samples)?;
        let named = rep.failures.contains(&((level, last), Some((level, 0))))
            || rep.failures.contains(&((level, 0), Some((level, last))));
        out.push(
            Check::verdict("Heisenberg net injected fault detected", A_HEIS_NET, !rep.pass && named)
                .with("injected", json!({"level": level, "index": last, "near": 0}))
                .with("verify_pass", rep.pass)
                .with_witness(&rep.failures),
        );
    }
    Ok(out)
}

/// Bounded turning of the regular 360-gon and the unit square.
pub fn turning_suite() -> Result<Vec<Check>> {
    let circle = bounded_turning(&regular_polygon(360, [0.0, 0.0], 1.0))?;
    let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let sq = bounded_turning(&square)?;
    let golden = (1.0 + 5f64.sqrt()) / 2.0 / 2f64.sqrt();
    // Arc parameters of the midpoints of the bottom and top edges.
    let midpoint = turning_ratio(&square, 0.5, 2.5)?;
    Ok(vec![
        Check::verdict("bounded turning circle (360-gon)", A_TURNING, (circle.c - 1.0).abs() <= 0.01)
            .with("c", circle.c)
            .with("expected", 1.0)
            .with_witness(circle.witness),
        Check::verdict("bounded turning unit square", A_TURNING, (sq.c - golden).abs() <= 0.01)
            .with("c", sq.c)
            .with("expected", golden)
            .with("expected_closed_form", "phi / sqrt(2)")
            .with_witness(sq.witness),
        Check::verdict("turning ratio square edge midpoints", A_TURNING, (midpoint - 5f64.sqrt() / 2.0).abs() <= 1e-12)
            .with("ratio", midpoint)
            .with("expected", 5f64.sqrt() / 2.0),
    ])
}

/// Exact constant examples plus the filling-parameter round trip.
pub fn constants_suite(inputs: &[FillingInputs]) -> Result<Vec<Check>> {
    let tau = tau_threshold(&qi(1), &qi(2), &q(1, 2), &qi(1))?;
    let (cs, lambda) = isoperimetric_constants(&qi(2), &qi(1), &qi(1))?;
    let mut out = vec![
        Check::verdict("tau_threshold(1, 2, 1/2, 1)", A_TAU, tau.value() == Some(&q(1, 16)))
            .with("value", &tau)
            .with("expected", "1/16"),
        Check::verdict("isoperimetric_constants(2, 1, 1)", A_ISOPERIMETRIC, cs.value() == Some(&qi(32)) && lambda == qi(2))
            .with("C_S", &cs)
            .with("Lambda", to_pq(&lambda))
            .with("expected", ["32", "2"]),
    ];
    for inp in inputs {
        let bundle = filling_parameters(inp)?;
        let trips = verify_filling(inp, &bundle)?;
        let ok = trips.iter().all(|t| t.holds);
        out.push(
            Check::verdict("filling_parameters round trip", crate::constants::ANCHOR_EPS1, ok)
                .with("inputs", inp)
                .with("bundle", &bundle)
                .with("round_trip", &trips),
        );
    }
    Ok(out)
}

/// A small grid of filling inputs around the default.
pub fn filling_input_grid() -> Vec<FillingInputs> {
    let base = FillingInputs::default();
    let mut out = vec![base.clone()];
    for (p, qq) in [(qi(1), qi(3)), (q(3, 2), qi(2)), (qi(2), qi(5))] {
        out.push(FillingInputs { p, q: qq, ..base.clone() });
    }
    for c0 in [qi(1), qi(7), q(15, 2)] {
        out.push(FillingInputs { c0, ..base.clone() });
    }
    out.push(FillingInputs { d: qi(5), lambda: qi(4), big_delta: qi(3), ..base.clone() });
    out
}

/// Level-2 graph of a full sponge.
pub fn level_graph(d: usize, n: &[u64], level: usize, cap: Option<usize>) -> Result<TileGraph> {
    let spec = SpongeSpec::full(d, n.to_vec())?;
    TileGraph::build(&spec, level, cap.unwrap_or(DEFAULT_MAX_VERTICES))
}
