//! Exact and interval-valued Lebesgue measure on sponges and pre-sponges.
//!
//! Ball volumes are bracketed by a pruned descent of the tile tree: subtrees
//! entirely inside the ball are counted in closed form, subtrees outside are
//! skipped, and tiles straddling the sphere are refined down to a resolution
//! level where they only contribute to the upper bound.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{exp_neg_lower, exp_neg_upper, pow_q, qi, qu, to_f64, IntervalQ, Q};
use crate::sponge::{BoxQ, PointQ, SpongeSpec};

/// Density of the sponge inside a level-`k` tile, `lambda(T cap S) / lambda(T)`.
///
/// The upper endpoint is the exact product `prod_{i=k+1}^{K} (1 - 1/n_i^d)`.
/// The lower endpoint additionally multiplies by a rational lower bound of
/// `exp(-2 t)`, where `t` bounds the tail sum `sum_{i>K} 1/n_i^d`: the known
/// terms of the sequence beyond `K` plus `extra_tail` for terms beyond it.
pub fn tile_density(spec: &SpongeSpec, k: usize, big_k: usize, extra_tail: &Q) -> Result<IntervalQ> {
    let len = spec.seq().len();
    if big_k > len {
        return Err(Error::Range(format!(
            "truncation {big_k} exceeds sequence length {len}"
        )));
    }
    if k > big_k {
        return Err(Error::Range(format!("level {k} exceeds truncation {big_k}")));
    }
    let d = spec.dim() as u32;
    let upper = (k + 1..=big_k).fold(Q::one(), |acc, i| {
        acc * (Q::one() - Q::new(BigInt::one(), BigInt::from(spec.n_at(i)).pow(d)))
    });
    let tail = (big_k + 1..=len).fold(extra_tail.clone(), |acc, i| {
        acc + Q::new(BigInt::one(), BigInt::from(spec.n_at(i)).pow(d))
    });
    let lower = &upper * exp_neg_lower(&(qi(2) * tail));
    Ok(IntervalQ::new(lower, upper))
}

/// Rational bracket around the finite product `prod_{i=k+1}^{K}(1 - 1/n_i^d)`
/// from the two-sided exponential estimate: returns
/// `(lower bound of exp(-2 sigma), product, upper bound of exp(-sigma))`.
pub fn product_exp_bracket(spec: &SpongeSpec, k: usize, big_k: usize) -> Result<(Q, Q, Q)> {
    let product = tile_density(spec, k, big_k, &Q::zero())?.hi;
    let d = spec.dim() as u32;
    let sigma = (k + 1..=big_k).fold(Q::zero(), |acc, i| {
        acc + Q::new(BigInt::one(), BigInt::from(spec.n_at(i)).pow(d))
    });
    Ok((
        exp_neg_lower(&(qi(2) * &sigma)),
        product,
        exp_neg_upper(&sigma),
    ))
}

/// An open Euclidean ball in integer units `1 / (cells(res) * lcm)`.
struct IntBall {
    center: Vec<i128>,
    /// `r^2` expressed in squared units, as numerator / denominator.
    r2_num: i128,
    r2_den: i128,
    /// Units per level-`res` cell along one axis.
    lcm: i128,
}

fn overflow() -> Error {
    Error::Resource("integer overflow in exact ball geometry; reduce depth or denominators".into())
}

impl IntBall {
    fn new(spec: &SpongeSpec, x: &PointQ, r: &Q, res: usize) -> Result<Self> {
        let lcm = x
            .coords
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let lcm = lcm.to_i128().ok_or_else(overflow)?;
        let cells = spec.cells_per_axis(res) as i128;
        let scale = cells.checked_mul(lcm).ok_or_else(overflow)?;
        let center = x
            .coords
            .iter()
            .map(|c| {
                (c * Q::from_integer(BigInt::from(scale)))
                    .to_integer()
                    .to_i128()
                    .ok_or_else(overflow)
            })
            .collect::<Result<Vec<_>>>()?;
        let r2 = r * r * Q::from_integer(BigInt::from(scale) * BigInt::from(scale));
        Ok(IntBall {
            center,
            r2_num: r2.numer().to_i128().ok_or_else(overflow)?,
            r2_den: r2.denom().to_i128().ok_or_else(overflow)?,
            lcm,
        })
    }

    /// (nearest, farthest) squared distances from the center to a box given in units.
    fn near_far(&self, lo: &[i128], hi: &[i128]) -> (i128, i128) {
        let mut near = 0i128;
        let mut far = 0i128;
        for j in 0..lo.len() {
            let c = self.center[j];
            let g = if c < lo[j] {
                lo[j] - c
            } else if c > hi[j] {
                c - hi[j]
            } else {
                0
            };
            let f = (c - lo[j]).abs().max((hi[j] - c).abs());
            near += g * g;
            far += f * f;
        }
        (near, far)
    }

    fn lt_r2(&self, d2: i128) -> Result<bool> {
        Ok(d2.checked_mul(self.r2_den).ok_or_else(overflow)? < self.r2_num)
    }

    fn le_r2(&self, d2: i128) -> Result<bool> {
        Ok(d2.checked_mul(self.r2_den).ok_or_else(overflow)? <= self.r2_num)
    }
}

/// Per-level tallies from a ball descent.
struct Tally {
    inside: Vec<u128>,
    straddle: u128,
}

/// Visit children of a level-`k` cell; the central child is skipped when `remove`.
fn for_each_child(spec: &SpongeSpec, k: usize, coords: &[u64], remove: bool, mut f: impl FnMut(&[u64]) -> Result<()>) -> Result<()> {
    let nk = spec.n_at(k + 1);
    let c = spec.central(k + 1);
    let total = spec.children_per_tile(k + 1);
    let d = spec.dim();
    let mut child = vec![0u64; d];
    for idx in 0..total {
        let mut rem = idx;
        let mut all_central = true;
        for (j, slot) in child.iter_mut().enumerate() {
            let local = rem % nk;
            rem /= nk;
            all_central &= local == c;
            *slot = coords[j] * nk + local;
        }
        if !(remove && all_central) {
            f(&child)?;
        }
    }
    Ok(())
}

fn cell_units(spec: &SpongeSpec, ball: &IntBall, level: usize, res: usize, coords: &[u64]) -> (Vec<i128>, Vec<i128>) {
    let m = (spec.cells_per_axis(res) / spec.cells_per_axis(level)) as i128 * ball.lcm;
    let lo: Vec<i128> = coords.iter().map(|&a| a as i128 * m).collect();
    let hi: Vec<i128> = lo.iter().map(|a| a + m).collect();
    (lo, hi)
}

fn descend(
    spec: &SpongeSpec,
    ball: &IntBall,
    removal: usize,
    res: usize,
    level: usize,
    coords: &[u64],
    tally: &mut Tally,
) -> Result<()> {
    let (lo, hi) = cell_units(spec, ball, level, res, coords);
    let (near, far) = ball.near_far(&lo, &hi);
    if !ball.lt_r2(near)? {
        return Ok(());
    }
    if ball.le_r2(far)? {
        tally.inside[level] += 1;
        return Ok(());
    }
    if level == res {
        tally.straddle += 1;
        return Ok(());
    }
    for_each_child(spec, level, coords, level < removal, |c| {
        descend(spec, ball, removal, res, level + 1, c, tally)
    })
}

/// Bracket the mass of `B(x, r) cap S'` where `S'` is the pre-sponge with
/// removals at levels `1..=removal`, resolved to tiles of level `res`, and a
/// level-`j` tile of `S'` carries density `density(j)` relative to its volume.
fn ball_mass(
    spec: &SpongeSpec,
    x: &PointQ,
    r: &Q,
    removal: usize,
    res: usize,
    density: &dyn Fn(usize) -> Result<IntervalQ>,
) -> Result<IntervalQ> {
    let ball = IntBall::new(spec, x, r, res)?;
    let mut tally = Tally {
        inside: vec![0; res + 1],
        straddle: 0,
    };
    descend(spec, &ball, removal, res, 0, &vec![0; spec.dim()], &mut tally)?;
    let d = spec.dim() as u32;
    let mut lo = Q::zero();
    let mut hi = Q::zero();
    for (j, &count) in tally.inside.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let vol = pow_q(&spec.scale(j)?, d) * Q::from_integer(BigInt::from(count));
        let dens = density(j)?;
        lo += &vol * &dens.lo;
        hi += &vol * &dens.hi;
    }
    if tally.straddle > 0 {
        let vol = pow_q(&spec.scale(res)?, d) * Q::from_integer(BigInt::from(tally.straddle));
        hi += vol * density(res)?.hi;
    }
    // The ball sits inside a cube of side 2r.
    let cap = pow_q(&(qi(2) * r), d);
    if hi > cap {
        hi = cap;
    }
    if lo > hi {
        lo = hi.clone();
    }
    Ok(IntervalQ::new(lo, hi))
}

fn check_point(spec: &SpongeSpec, x: &PointQ) -> Result<()> {
    if x.coords.len() != spec.dim() {
        return Err(Error::Argument(format!(
            "point has {} coordinates, expected {}",
            x.coords.len(),
            spec.dim()
        )));
    }
    Ok(())
}

/// Bracket of `lambda(B(x, r) cap S)` for the sponge truncated at `spec.depth()`,
/// counting tiles of level `depth` and refining straddling tiles one level further.
pub fn ball_sponge_volume(spec: &SpongeSpec, x: &PointQ, r: &Q, depth: usize, extra_tail: &Q) -> Result<IntervalQ> {
    check_point(spec, x)?;
    if *r <= Q::zero() {
        return Err(Error::Argument("radius must be positive".into()));
    }
    if depth > spec.depth() {
        return Err(Error::Range(format!(
            "depth {depth} exceeds truncation depth {}",
            spec.depth()
        )));
    }
    if !spec.contains(x, depth)? {
        return Err(Error::Domain("center is not in the pre-sponge".into()));
    }
    let big_k = spec.depth();
    let res = (depth + 1).min(big_k);
    ball_mass(spec, x, r, big_k, res, &|j| tile_density(spec, j, big_k, extra_tail))
}

/// Exact-density bracket of `lambda(B(x, r) cap S_level)` for the pre-sponge
/// `S_level`, resolved at level `res >= level`.
pub fn ball_presponge_volume(spec: &SpongeSpec, x: &PointQ, r: &Q, level: usize, res: usize) -> Result<IntervalQ> {
    check_point(spec, x)?;
    if level > res || res > spec.depth() {
        return Err(Error::Range(format!(
            "need level {level} <= resolution {res} <= depth {}",
            spec.depth()
        )));
    }
    ball_mass(spec, x, r, level, res, &|j| {
        Ok(IntervalQ::point(
            tile_density(spec, j.min(level), level, &Q::zero())?.hi,
        ))
    })
}

/// Result of [`ahlfors_scan`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AhlforsScan {
    #[serde(with = "crate::rational::qser")]
    pub c_min: Q,
    #[serde(with = "crate::rational::qser")]
    pub c_max: Q,
    pub ratio: f64,
    /// `2 (8 sqrt d)^d / c_{n,0}`.
    pub c_ar: f64,
    pub within_bound: bool,
    pub upper_trivial_ok: bool,
    pub samples: usize,
    pub radii: usize,
    pub argmin: (usize, usize),
    pub argmax: (usize, usize),
}

/// Scan `mid(vol(B(x,r) cap S)) / r^d` over sample points and radii.
pub fn ahlfors_scan(spec: &SpongeSpec, samples: &[PointQ], radii: &[Q], depth: usize) -> Result<AhlforsScan> {
    if samples.is_empty() || radii.is_empty() {
        return Err(Error::Argument("ahlfors scan needs samples and radii".into()));
    }
    let d = spec.dim() as u32;
    let per_sample: Vec<Vec<Q>> = samples
        .par_iter()
        .map(|x| {
            radii
                .iter()
                .map(|r| {
                    let v = ball_sponge_volume(spec, x, r, depth, &Q::zero())?;
                    Ok(v.midpoint() / pow_q(r, d))
                })
                .collect::<Result<Vec<Q>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut argmin = (0, 0);
    let mut argmax = (0, 0);
    for (i, row) in per_sample.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if *v < per_sample[argmin.0][argmin.1] {
                argmin = (i, j);
            }
            if *v > per_sample[argmax.0][argmax.1] {
                argmax = (i, j);
            }
        }
    }
    let c_min = per_sample[argmin.0][argmin.1].clone();
    let c_max = per_sample[argmax.0][argmax.1].clone();
    let c0 = tile_density(spec, 0, spec.depth(), &Q::zero())?.lo;
    let df = spec.dim() as f64;
    let c_ar = 2.0 * (8.0 * df.sqrt()).powi(d as i32) / to_f64(&c0);
    let ratio = if c_min.is_zero() {
        f64::INFINITY
    } else {
        to_f64(&(&c_max / &c_min))
    };
    Ok(AhlforsScan {
        upper_trivial_ok: c_max <= pow_q(&qi(2), d),
        within_bound: c_min > Q::zero() && ratio <= c_ar * c_ar,
        c_min,
        c_max,
        ratio,
        c_ar,
        samples: samples.len(),
        radii: radii.len(),
        argmin,
        argmax,
    })
}

/// A removed region with its (exact or caller-supplied) volume.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Obstacle {
    pub level: usize,
    pub bx: BoxQ,
    #[serde(with = "crate::rational::qser")]
    pub volume: Q,
}

impl Obstacle {
    pub fn from_box(level: usize, bx: BoxQ) -> Self {
        let volume = bx.volume();
        Obstacle { level, bx, volume }
    }
}

/// Value of the N-fold density function at one ball.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityReport {
    pub point: PointQ,
    #[serde(with = "crate::rational::qser")]
    pub radius: Q,
    #[serde(with = "crate::rational::qser")]
    pub value: Q,
    /// Indices (into the obstacle list) discarded as the `N` largest.
    pub excluded: Vec<usize>,
    /// Indices of every obstacle meeting the open ball.
    pub meeting: Vec<usize>,
}

/// `s_N(x, r)`: total volume of the obstacles meeting `B(x, r)`, after
/// discarding the `N` largest ones, divided by `r^d`.
///
/// Ties in volume are broken by lower level first, then lexicographic lower corner.
pub fn n_fold_density(obstacles: &[Obstacle], x: &PointQ, r: &Q, n_excluded: usize) -> Result<DensityReport> {
    if *r <= Q::zero() {
        return Err(Error::Argument("radius must be positive".into()));
    }
    let r2 = r * r;
    let mut meeting: Vec<usize> = obstacles
        .iter()
        .enumerate()
        .filter(|(_, o)| o.bx.dist2_point(x) < r2)
        .map(|(i, _)| i)
        .collect();
    meeting.sort_by(|&a, &b| {
        let (oa, ob) = (&obstacles[a], &obstacles[b]);
        ob.volume
            .cmp(&oa.volume)
            .then(oa.level.cmp(&ob.level))
            .then_with(|| oa.bx.lo.cmp(&ob.bx.lo))
    });
    let cut = n_excluded.min(meeting.len());
    let excluded = meeting[..cut].to_vec();
    let total = meeting[cut..]
        .iter()
        .fold(Q::zero(), |acc, &i| acc + &obstacles[i].volume);
    let value = total / pow_q(r, x.coords.len() as u32);
    meeting.sort_unstable();
    Ok(DensityReport {
        point: x.clone(),
        radius: r.clone(),
        value,
        excluded,
        meeting,
    })
}

/// Removed boxes at levels `1..=depth` meeting the open ball `B(x, r)`.
pub fn removed_boxes_meeting_ball(spec: &SpongeSpec, x: &PointQ, r: &Q, depth: usize) -> Result<Vec<Obstacle>> {
    check_point(spec, x)?;
    if depth > spec.depth() {
        return Err(Error::Range(format!("depth {depth} exceeds truncation")));
    }
    if depth == 0 {
        return Ok(Vec::new());
    }
    let ball = IntBall::new(spec, x, r, depth)?;
    let mut out = Vec::new();
    fn walk(
        spec: &SpongeSpec,
        ball: &IntBall,
        depth: usize,
        level: usize,
        coords: &[u64],
        out: &mut Vec<Obstacle>,
    ) -> Result<()> {
        let (lo, hi) = cell_units(spec, ball, level, depth, coords);
        if !ball.lt_r2(ball.near_far(&lo, &hi).0)? {
            return Ok(());
        }
        if level == depth {
            return Ok(());
        }
        let nk = spec.n_at(level + 1);
        let c = spec.central(level + 1);
        let central: Vec<u64> = coords.iter().map(|a| a * nk + c).collect();
        let (clo, chi) = cell_units(spec, ball, level + 1, depth, &central);
        if ball.lt_r2(ball.near_far(&clo, &chi).0)? {
            let s = spec.scale(level + 1)?;
            out.push(Obstacle::from_box(level + 1, BoxQ::cell(&central, &s)));
        }
        for_each_child(spec, level, coords, true, |ch| walk(spec, ball, depth, level + 1, ch, out))
    }
    walk(spec, &ball, depth, 0, &vec![0; spec.dim()], &mut out)?;
    Ok(out)
}

/// Outcome of [`filling_density_check`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FillingCheck {
    /// Level `k` with `(2 sqrt d / delta) s_{k+1} <= r < (2 sqrt d / delta) s_k`.
    pub level: usize,
    /// Upper bound on the worst sampled ratio `mu(Omega_r cap B \ S) / mu(Omega_r cap B)`.
    #[serde(with = "crate::rational::qser")]
    pub worst_ratio: Q,
    pub worst_ratio_f64: f64,
    pub witness: Option<PointQ>,
    pub pass: bool,
    pub samples: usize,
}

/// Level selected by the `2 sqrt(d) / delta` rule; errors name the depth needed.
pub fn filling_level(spec: &SpongeSpec, r: &Q, delta: &Q) -> Result<usize> {
    let d = qu(spec.dim() as u64);
    // (2 sqrt d / delta) s  <=  r   <=>   4 d s^2 <= delta^2 r^2
    let lhs = |k: usize| -> Q {
        let s = Q::new(BigInt::one(), BigInt::from(spec.cells_per_axis(k)));
        qi(4) * &d * &s * &s
    };
    let target = delta * delta * r * r;
    if target >= lhs(0) {
        return Err(Error::Range(
            "radius too large: no level k >= 0 satisfies r < (2 sqrt d / delta) s_k".into(),
        ));
    }
    let len = spec.seq().len();
    let mut k = 0;
    loop {
        if k + 1 > len {
            return Err(Error::Range(format!(
                "radius too small for the sequence: level {} beyond the {len} known scales is needed",
                k + 1
            )));
        }
        if lhs(k + 1) <= target {
            if k + 1 > spec.depth() {
                return Err(Error::Range(format!(
                    "selected level {k} needs truncation depth >= {}",
                    k + 1
                )));
            }
            return Ok(k);
        }
        k += 1;
    }
}

/// Verify the relative density bound of the sponge inside its pre-sponge
/// filling `Omega_r = S_k` on balls of radius `r` around sample points.
pub fn filling_density_check(
    spec: &SpongeSpec,
    r: &Q,
    delta: &Q,
    eps: &Q,
    samples: &[PointQ],
    extra_tail: &Q,
) -> Result<FillingCheck> {
    if *r <= Q::zero() {
        return Err(Error::Argument("radius must be positive".into()));
    }
    let zero = Q::zero();
    let one = Q::one();
    if *delta <= zero || *delta >= one || *eps <= zero || *eps >= one {
        return Err(Error::Argument("delta and epsilon must lie in (0, 1)".into()));
    }
    let k = filling_level(spec, r, delta)?;
    let big_k = spec.depth();
    // Coarsest level from k on whose tile diameter is at most r/8.
    let mut res = k.max(1).min(big_k);
    while res < big_k {
        let s = spec.scale(res)?;
        if &s * &s * Q::from_integer((64 * spec.dim()).into()) <= r * r {
            break;
        }
        res += 1;
    }
    let ratios: Vec<Q> = samples
        .par_iter()
        .map(|x| {
            if !spec.contains(x, big_k)? {
                return Err(Error::Domain("sample point is not in the sponge".into()));
            }
            // Resolving at the filling level keeps both brackets valid; straddling
            // level-k tiles cost O(r / s_k) of slack, small next to the ball.
            let filled = ball_presponge_volume(spec, x, r, k, res)?;
            let sponge = ball_mass(spec, x, r, big_k, res, &|j| {
                tile_density(spec, j, big_k, extra_tail)
            })?;
            if filled.lo.is_zero() {
                return Ok(Q::one());
            }
            let gap = &filled.hi - &sponge.lo;
            let gap = if gap < Q::zero() { Q::zero() } else { gap };
            Ok(gap / &filled.lo)
        })
        .collect::<Result<Vec<_>>>()?;
    let (wi, worst) = ratios
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, v)| (Some(i), v.clone()))
        .unwrap_or((None, Q::zero()));
    Ok(FillingCheck {
        level: k,
        pass: worst < *eps,
        worst_ratio_f64: to_f64(&worst),
        worst_ratio: worst,
        witness: wi.map(|i| samples[i].clone()),
        samples: samples.len(),
    })
}

/// `sup_x s_N(x, r)` over sample points, for each radius, against the removed
/// boxes up to `depth`.
pub fn density_decay_scan(
    spec: &SpongeSpec,
    samples: &[PointQ],
    radii: &[Q],
    n_excluded: usize,
    depth: usize,
) -> Result<Vec<(Q, Q)>> {
    radii
        .iter()
        .map(|r| {
            let sups = samples
                .par_iter()
                .map(|x| {
                    let obstacles = removed_boxes_meeting_ball(spec, x, r, depth)?;
                    Ok(n_fold_density(&obstacles, x, r, n_excluded)?.value)
                })
                .collect::<Result<Vec<Q>>>()?;
            let sup = sups.into_iter().max().unwrap_or_else(Q::zero);
            Ok((r.clone(), sup))
        })
        .collect()
}

/// Corners of randomly chosen live tiles at `level`: points of the sponge.
pub fn sample_sponge_points(spec: &SpongeSpec, level: usize, count: usize, seed: u64) -> Result<Vec<PointQ>> {
    use rand::Rng;
    let mut rng = crate::rng::seeded(seed);
    let s = spec.scale(level)?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut coords = vec![0u64; spec.dim()];
        for k in 0..level {
            let nk = spec.n_at(k + 1);
            let c = spec.central(k + 1);
            loop {
                let local: Vec<u64> = (0..spec.dim()).map(|_| rng.gen_range(0..nk)).collect();
                if local.iter().any(|&l| l != c) {
                    for (a, l) in coords.iter_mut().zip(local) {
                        *a = *a * nk + l;
                    }
                    break;
                }
            }
        }
        let corner: Vec<u64> = coords
            .iter()
            .map(|&a| a + rng.gen_range(0..=1u64))
            .collect();
        out.push(PointQ::new(corner.iter().map(|&a| qu(a) * &s).collect()));
    }
    Ok(out)
}
