//! Euclidean Sierpinski sponges with exact rational geometry.
//!
//! A sponge is described by its dimension `d`, a sequence of odd integers
//! `n_1, n_2, ...` (each at least 3) and a truncation depth `K`. At stage `k`
//! every surviving cube of side `s_{k-1}` is cut into `n_k^d` sub-cubes and the
//! central one is removed. All coordinates are handled as integers at some
//! resolution level, which keeps every predicate exact.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{exact_sqrt, q, qu, Q};

/// Dimension, scale sequence and truncation depth of a sponge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct SpongeSpec {
    d: usize,
    n: Vec<u64>,
    depth: usize,
    /// `side[k] = n_1 * ... * n_k`, the number of level-`k` cells per axis.
    side: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    d: usize,
    n: Vec<u64>,
    #[serde(rename = "K")]
    k: usize,
}

impl TryFrom<RawSpec> for SpongeSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        SpongeSpec::new(raw.d, raw.n, raw.k)
    }
}

impl From<SpongeSpec> for RawSpec {
    fn from(s: SpongeSpec) -> Self {
        RawSpec {
            d: s.d,
            n: s.n,
            k: s.depth,
        }
    }
}

impl SpongeSpec {
    pub fn new(d: usize, n: Vec<u64>, depth: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidSpec(format!("dimension must be >= 2, got {d}")));
        }
        if d > 8 {
            return Err(Error::InvalidSpec(format!("dimension {d} is not supported (max 8)")));
        }
        if depth > n.len() {
            return Err(Error::InvalidSpec(format!(
                "truncation depth {depth} exceeds sequence length {}",
                n.len()
            )));
        }
        let mut side = Vec::with_capacity(n.len() + 1);
        side.push(1u64);
        for (i, &ni) in n.iter().enumerate() {
            if ni < 3 || ni % 2 == 0 {
                return Err(Error::InvalidSpec(format!(
                    "n_{} = {ni} must be an odd integer >= 3",
                    i + 1
                )));
            }
            let next = side[i]
                .checked_mul(ni)
                .filter(|v| *v < (1u64 << 40))
                .ok_or_else(|| {
                    Error::InvalidSpec(format!("cell count per axis overflows at level {}", i + 1))
                })?;
            side.push(next);
        }
        Ok(SpongeSpec { d, n, depth, side })
    }

    /// Spec truncated at the full length of its sequence.
    pub fn full(d: usize, n: Vec<u64>) -> Result<Self> {
        let k = n.len();
        SpongeSpec::new(d, n, k)
    }

    /// Same sequence with another truncation depth.
    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        SpongeSpec::new(self.d, self.n.clone(), depth)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn seq(&self) -> &[u64] {
        &self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `n_k` for `1 <= k <= |n|`.
    pub fn n_at(&self, k: usize) -> u64 {
        self.n[k - 1]
    }

    /// Number of level-`k` cells along one axis, `prod_{i<=k} n_i`.
    pub fn cells_per_axis(&self, k: usize) -> u64 {
        self.side[k]
    }

    /// Local index of the removed central sub-cube at level `k`.
    pub fn central(&self, k: usize) -> u64 {
        (self.n[k - 1] - 1) / 2
    }

    fn check_level(&self, k: usize) -> Result<()> {
        if k > self.depth {
            Err(Error::Range(format!(
                "level {k} exceeds truncation depth {}",
                self.depth
            )))
        } else {
            Ok(())
        }
    }

    /// Side length `s_k = prod_{i<=k} 1/n_i`.
    pub fn scale(&self, k: usize) -> Result<Q> {
        self.check_level(k)?;
        Ok(q(1, self.side[k] as i64))
    }

    /// `n_k^d`, the number of sub-cubes a level-`(k-1)` cube is cut into.
    pub fn children_per_tile(&self, k: usize) -> u64 {
        self.n[k - 1].pow(self.d as u32)
    }

    /// Closed-form count `prod_{i<=depth} (n_i^d - 1)`.
    pub fn live_tile_count(&self, depth: usize) -> Result<BigUint> {
        self.check_level(depth)?;
        Ok((1..=depth).fold(BigUint::one(), |acc, i| {
            acc * BigUint::from(self.children_per_tile(i) - 1)
        }))
    }

    /// Whether the level-`k` cell with integer coordinates `coords` survives
    /// all removals at levels `1..=k`.
    pub fn is_live(&self, k: usize, coords: &[u64]) -> bool {
        (1..=k).all(|i| {
            let stride = self.side[k] / self.side[i];
            let c = self.central(i);
            !coords
                .iter()
                .all(|&a| (a / stride) % self.n[i - 1] == c)
        })
    }

    /// Visit the live children of a live level-`k` cell.
    pub fn for_each_child(&self, k: usize, coords: &[u64], mut f: impl FnMut(&[u64])) {
        let nk = self.n[k];
        let c = self.central(k + 1);
        let total = self.children_per_tile(k + 1);
        let mut child = vec![0u64; self.d];
        for idx in 0..total {
            let mut rem = idx;
            let mut all_central = true;
            for j in 0..self.d {
                let local = rem % nk;
                rem /= nk;
                all_central &= local == c;
                child[j] = coords[j] * nk + local;
            }
            if !all_central {
                f(&child);
            }
        }
    }

    /// All live tiles at `level`, enumerated level by level; fails once more
    /// than `cap` tiles would be materialized.
    pub fn live_tiles(&self, level: usize, cap: usize) -> Result<Vec<TileId>> {
        self.check_level(level)?;
        let count = self.live_tile_count(level)?;
        if count > BigUint::from(cap) {
            return Err(Error::Resource(format!(
                "{count} live tiles at level {level} exceed the cap of {cap}"
            )));
        }
        let mut current: Vec<Vec<u64>> = vec![vec![0; self.d]];
        for k in 0..level {
            let mut next = Vec::with_capacity(current.len() * self.children_per_tile(k + 1) as usize);
            for t in &current {
                self.for_each_child(k, t, |c| next.push(c.to_vec()));
            }
            current = next;
        }
        Ok(current
            .into_iter()
            .map(|coords| TileId { level, coords })
            .collect())
    }

    /// Central removed boxes at level `k` (one per live level-`(k-1)` tile).
    pub fn removed_boxes(&self, k: usize) -> Result<Vec<BoxQ>> {
        if k == 0 {
            return Err(Error::Range("nothing is removed at stage 0".into()));
        }
        self.check_level(k)?;
        let parents = self.live_tiles(k - 1, usize::MAX)?;
        let c = self.central(k);
        let nk = self.n_at(k);
        let s = self.scale(k)?;
        Ok(parents
            .iter()
            .map(|p| {
                let coords: Vec<u64> = p.coords.iter().map(|a| a * nk + c).collect();
                BoxQ::cell(&coords, &s)
            })
            .collect())
    }

    /// Removed boxes at every level `1..=depth`, as integer boxes in units of
    /// `s_res` (requires `depth <= res`).
    pub fn removed_boxes_int(&self, depth: usize, res: usize) -> Result<Vec<RemovedBox>> {
        self.check_level(res)?;
        if depth > res {
            return Err(Error::Argument(format!(
                "resolution level {res} is coarser than removal depth {depth}"
            )));
        }
        let mut out = Vec::new();
        for k in 1..=depth {
            let parents = self.live_tiles(k - 1, usize::MAX)?;
            let c = self.central(k);
            let nk = self.n_at(k);
            let mult = self.side[res] / self.side[k];
            for p in parents {
                let lo: Vec<u64> = p.coords.iter().map(|a| (a * nk + c) * mult).collect();
                let hi: Vec<u64> = lo.iter().map(|a| a + mult).collect();
                out.push(RemovedBox {
                    level: k,
                    bx: IBox { lo, hi },
                });
            }
        }
        Ok(out)
    }

    /// Closed pre-sponge membership: `p` is in `S_depth` unless it lies in the
    /// open interior of some removed box at a level `1..=depth`.
    pub fn contains(&self, p: &PointQ, depth: usize) -> Result<bool> {
        self.check_level(depth)?;
        if p.coords.len() != self.d {
            return Err(Error::Argument(format!(
                "point has {} coordinates, expected {}",
                p.coords.len(),
                self.d
            )));
        }
        let zero = Q::zero();
        let one = Q::one();
        if p.coords.iter().any(|x| *x < zero || *x > one) {
            return Err(Error::Domain("point lies outside the unit cube".into()));
        }
        for i in 1..=depth {
            let ni = self.n_at(i) as i64;
            let c = self.central(i) as i64;
            let lo = q(c, ni);
            let hi = q(c + 1, ni);
            let m = qu(self.side[i - 1]);
            let inside = p.coords.iter().all(|x| {
                let v = x * &m;
                let frac = &v - v.floor();
                frac > lo && frac < hi
            });
            if inside {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Exact minimum Euclidean distance between distinct removed boxes at
    /// levels `1..=depth`, and between removed boxes and the boundary of the
    /// unit cube.
    pub fn min_separation(&self, depth: usize) -> Result<Separation> {
        if depth == 0 {
            return Err(Error::Range("separation needs depth >= 1".into()));
        }
        self.check_level(depth)?;
        let boxes = self.removed_boxes_int(depth, depth)?;
        let unit = self.side[depth] as i128;
        let mut best: Option<(i128, SeparationWitness)> = None;

        let mut order: Vec<usize> = (0..boxes.len()).collect();
        order.sort_by_key(|&i| boxes[i].bx.lo[0]);
        for (pos, &i) in order.iter().enumerate() {
            let a = &boxes[i].bx;
            for &j in &order[pos + 1..] {
                let b = &boxes[j].bx;
                let lead = b.lo[0] as i128 - a.hi[0] as i128;
                if lead > 0 {
                    if let Some((v, _)) = &best {
                        if lead * lead >= *v {
                            break;
                        }
                    }
                }
                let d2 = a.dist2(b);
                if best.as_ref().map_or(true, |(v, _)| d2 < *v) {
                    let (x, y) = if i < j { (i, j) } else { (j, i) };
                    best = Some((d2, SeparationWitness::Pair { a: x, b: y }));
                }
            }
        }

        for (i, b) in boxes.iter().enumerate() {
            let gap = b
                .bx
                .lo
                .iter()
                .zip(&b.bx.hi)
                .map(|(&lo, &hi)| (lo as i128).min(unit - hi as i128))
                .min()
                .unwrap();
            let d2 = gap * gap;
            if best.as_ref().map_or(true, |(v, _)| d2 < *v) {
                best = Some((d2, SeparationWitness::Boundary { a: i }));
            }
        }

        let (d2, witness) = best.expect("depth >= 1 removes at least one box");
        let distance_sq = Q::new(d2.into(), (unit * unit).into());
        let distance = exact_sqrt(&distance_sq);
        let to_box = |k: usize| {
            let rb = &boxes[k];
            (rb.level, rb.bx.to_box_q(&q(1, unit as i64)))
        };
        let (box_a, box_b) = match witness {
            SeparationWitness::Boundary { a } => (to_box(a), None),
            SeparationWitness::Pair { a, b } => (to_box(a), Some(to_box(b))),
        };
        Ok(Separation {
            depth,
            distance_sq,
            distance,
            witness_a: box_a.1,
            witness_a_level: box_a.0,
            witness_b: box_b.as_ref().map(|b| b.1.clone()),
            witness_b_level: box_b.map(|b| b.0),
            box_count: boxes.len(),
        })
    }
}

/// Integer address of a cube `prod_j [a_j s_k, (a_j + 1) s_k]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TileId {
    pub level: usize,
    pub coords: Vec<u64>,
}

impl TileId {
    pub fn box_q(&self, spec: &SpongeSpec) -> Result<BoxQ> {
        Ok(BoxQ::cell(&self.coords, &spec.scale(self.level)?))
    }

    pub fn is_live(&self, spec: &SpongeSpec) -> bool {
        spec.is_live(self.level, &self.coords)
    }
}

/// Point with exact rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointQ {
    #[serde(with = "crate::rational::qvec")]
    pub coords: Vec<Q>,
}

impl PointQ {
    pub fn new(coords: Vec<Q>) -> Self {
        PointQ { coords }
    }

    pub fn dist2(&self, other: &PointQ) -> Q {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .fold(Q::zero(), |acc, v| acc + v)
    }
}

/// Closed axis-aligned box with rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxQ {
    #[serde(with = "crate::rational::qvec")]
    pub lo: Vec<Q>,
    #[serde(with = "crate::rational::qvec")]
    pub hi: Vec<Q>,
}

impl BoxQ {
    pub fn new(lo: Vec<Q>, hi: Vec<Q>) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::Argument("box needs lo < hi on every axis".into()));
        }
        Ok(BoxQ { lo, hi })
    }

    /// The cube `prod_j [a_j s, (a_j+1) s]`.
    pub fn cell(coords: &[u64], s: &Q) -> Self {
        let lo: Vec<Q> = coords.iter().map(|&a| qu(a) * s).collect();
        let hi: Vec<Q> = coords.iter().map(|&a| qu(a + 1) * s).collect();
        BoxQ { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> Q {
        self.lo
            .iter()
            .zip(&self.hi)
            .fold(Q::one(), |acc, (a, b)| acc * (b - a))
    }

    /// Squared diameter (squared main diagonal).
    pub fn diam2(&self) -> Q {
        self.lo
            .iter()
            .zip(&self.hi)
            .fold(Q::zero(), |acc, (a, b)| acc + (b - a) * (b - a))
    }

    pub fn dist2(&self, other: &BoxQ) -> Q {
        let mut acc = Q::zero();
        for j in 0..self.dim() {
            let g = axis_gap(&self.lo[j], &self.hi[j], &other.lo[j], &other.hi[j]);
            acc += &g * &g;
        }
        acc
    }

    pub fn dist2_point(&self, p: &PointQ) -> Q {
        let mut acc = Q::zero();
        for j in 0..self.dim() {
            let x = &p.coords[j];
            let g = if x < &self.lo[j] {
                &self.lo[j] - x
            } else if x > &self.hi[j] {
                x - &self.hi[j]
            } else {
                Q::zero()
            };
            acc += &g * &g;
        }
        acc
    }

    /// Whether the open interiors of the two boxes intersect.
    pub fn interiors_meet(&self, other: &BoxQ) -> bool {
        (0..self.dim()).all(|j| self.lo[j] < other.hi[j] && other.lo[j] < self.hi[j])
    }
}

fn axis_gap(alo: &Q, ahi: &Q, blo: &Q, bhi: &Q) -> Q {
    if blo > ahi {
        blo - ahi
    } else if alo > bhi {
        alo - bhi
    } else {
        Q::zero()
    }
}

/// Integer axis-aligned box, half-open in the sense `[lo, hi]` of unit cells.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IBox {
    pub lo: Vec<u64>,
    pub hi: Vec<u64>,
}

impl IBox {
    pub fn dist2(&self, other: &IBox) -> i128 {
        let mut acc = 0i128;
        for j in 0..self.lo.len() {
            let g = (other.lo[j] as i128 - self.hi[j] as i128)
                .max(self.lo[j] as i128 - other.hi[j] as i128)
                .max(0);
            acc += g * g;
        }
        acc
    }

    pub fn to_box_q(&self, unit: &Q) -> BoxQ {
        BoxQ {
            lo: self.lo.iter().map(|&a| qu(a) * unit).collect(),
            hi: self.hi.iter().map(|&a| qu(a) * unit).collect(),
        }
    }

    pub fn volume_cells(&self) -> u128 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) as u128)
            .product()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemovedBox {
    pub level: usize,
    pub bx: IBox,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SeparationWitness {
    Boundary { a: usize },
    Pair { a: usize, b: usize },
}

/// Result of [`SpongeSpec::min_separation`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Separation {
    pub depth: usize,
    #[serde(with = "crate::rational::qser")]
    pub distance_sq: Q,
    /// Present when the squared distance is the square of a rational.
    #[serde(with = "crate::rational::qopt")]
    pub distance: Option<Q>,
    pub witness_a: BoxQ,
    pub witness_a_level: usize,
    /// `None` when the minimum is attained against the cube boundary.
    pub witness_b: Option<BoxQ>,
    pub witness_b_level: Option<usize>,
    pub box_count: usize,
}

impl Separation {
    /// Exact comparison `distance >= bound` through squares.
    pub fn at_least(&self, bound: &Q) -> bool {
        self.distance_sq.cmp(&(bound * bound)) != Ordering::Less
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{qi, q};
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    fn spec(d: usize, n: &[u64]) -> SpongeSpec {
        SpongeSpec::full(d, n.to_vec()).unwrap()
    }

    fn pt(c: &[(i64, i64)]) -> PointQ {
        PointQ::new(c.iter().map(|&(a, b)| q(a, b)).collect())
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(SpongeSpec::new(2, vec![3, 4], 2).is_err());
        assert!(SpongeSpec::new(2, vec![1], 1).is_err());
        assert!(SpongeSpec::new(1, vec![3], 1).is_err());
        assert!(SpongeSpec::new(2, vec![3], 2).is_err());
    }

    #[test]
    fn scales() {
        let s = spec(2, &[3, 3, 3]);
        assert_eq!(s.scale(0).unwrap(), qi(1));
        assert_eq!(s.scale(3).unwrap(), q(1, 27));
        assert_eq!(spec(2, &[3, 5]).scale(2).unwrap(), q(1, 15));
        assert!(matches!(s.scale(4), Err(Error::Range(_))));
    }

    #[test]
    fn removed_boxes_examples() {
        let b = spec(2, &[3]).removed_boxes(1).unwrap();
        assert_eq!(b, vec![BoxQ::new(vec![q(1, 3); 2], vec![q(2, 3); 2]).unwrap()]);

        let b = spec(2, &[3, 3]).removed_boxes(2).unwrap();
        assert_eq!(b.len(), 8);
        let corner = BoxQ::new(vec![q(1, 9); 2], vec![q(2, 9); 2]).unwrap();
        assert!(b.contains(&corner));

        let b = spec(3, &[5]).removed_boxes(1).unwrap();
        assert_eq!(b, vec![BoxQ::new(vec![q(2, 5); 3], vec![q(3, 5); 3]).unwrap()]);

        assert!(matches!(spec(2, &[3]).removed_boxes(0), Err(Error::Range(_))));
    }

    #[test]
    fn removed_count_matches_product() {
        let s = spec(2, &[3, 5, 3]);
        for k in 1..=3 {
            let expect = s.live_tile_count(k - 1).unwrap().to_usize().unwrap();
            assert_eq!(s.removed_boxes(k).unwrap().len(), expect);
        }
    }

    #[test]
    fn containment_examples() {
        let s = spec(2, &[3]);
        assert!(!s.contains(&pt(&[(1, 2), (1, 2)]), 1).unwrap());
        assert!(s.contains(&pt(&[(0, 1), (0, 1)]), 1).unwrap());
        assert!(s.contains(&pt(&[(1, 3), (1, 2)]), 1).unwrap());
        assert!(matches!(
            s.contains(&pt(&[(3, 2), (1, 2)]), 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn live_counts() {
        assert_eq!(spec(2, &[3, 3]).live_tile_count(2).unwrap(), BigUint::from(64u32));
        assert_eq!(spec(2, &[7]).live_tile_count(0).unwrap(), BigUint::from(1u32));
        assert_eq!(spec(3, &[3]).live_tile_count(1).unwrap(), BigUint::from(26u32));
        for (d, n) in [(2, vec![3, 3, 5]), (3, vec![3, 3]), (2, vec![5, 7])] {
            let s = SpongeSpec::full(d, n).unwrap();
            for k in 0..=s.depth() {
                let enumerated = s.live_tiles(k, 1_000_000).unwrap();
                assert_eq!(BigUint::from(enumerated.len()), s.live_tile_count(k).unwrap());
                assert!(enumerated.iter().all(|t| t.is_live(&s)));
            }
        }
    }

    #[test]
    fn tile_cap_is_enforced() {
        let s = spec(2, &[3, 3]);
        assert!(matches!(s.live_tiles(2, 10), Err(Error::Resource(_))));
    }

    #[test]
    fn separation_examples() {
        let sep = spec(2, &[3, 3]).min_separation(2).unwrap();
        assert_eq!(sep.distance, Some(q(1, 9)));
        assert_eq!(sep.box_count, 9);

        let sep = spec(2, &[3]).min_separation(1).unwrap();
        assert_eq!(sep.distance, Some(q(1, 3)));
        assert!(sep.witness_b.is_none());
    }

    /// Brute-force pairwise separation on rational boxes, independent of the
    /// integer sweep used by `min_separation`.
    fn brute_separation(s: &SpongeSpec, depth: usize) -> Q {
        let mut boxes = Vec::new();
        for k in 1..=depth {
            boxes.extend(s.removed_boxes(k).unwrap());
        }
        let mut best: Option<Q> = None;
        for (i, a) in boxes.iter().enumerate() {
            let g = a
                .lo
                .iter()
                .zip(&a.hi)
                .map(|(lo, hi)| std::cmp::min(lo.clone(), Q::one() - hi))
                .min()
                .unwrap();
            let g2 = &g * &g;
            best = Some(best.map_or(g2.clone(), |b| std::cmp::min(b, g2)));
            for b in &boxes[i + 1..] {
                let d2 = a.dist2(b);
                best = Some(best.map_or(d2.clone(), |v| std::cmp::min(v, d2)));
            }
        }
        best.unwrap()
    }

    #[test]
    fn separation_matches_brute_force() {
        for (d, n) in [(2, vec![3, 3]), (2, vec![3, 5, 3]), (3, vec![3, 3]), (2, vec![5, 3])] {
            let s = SpongeSpec::full(d, n).unwrap();
            for depth in 1..=s.depth() {
                assert_eq!(
                    s.min_separation(depth).unwrap().distance_sq,
                    brute_separation(&s, depth)
                );
            }
        }
    }

    #[test]
    fn spec_json_shape() {
        let s = spec(2, &[3, 5]);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"d":2,"n":[3,5],"K":2}"#);
        let back: SpongeSpec = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<SpongeSpec>(r#"{"d":2,"n":[4],"K":1}"#).is_err());
    }

    #[test]
    fn removed_boxes_are_pairwise_disjoint() {
        let s = spec(2, &[3, 5, 3]);
        let mut boxes = Vec::new();
        for k in 1..=3 {
            boxes.extend(s.removed_boxes(k).unwrap());
        }
        for (i, a) in boxes.iter().enumerate() {
            for b in &boxes[i + 1..] {
                assert!(!a.interiors_meet(b));
                assert!(a.dist2(b) > Q::zero());
            }
        }
    }

    fn odd_seq(max_len: usize) -> impl Strategy<Value = Vec<u64>> {
        prop::collection::vec(prop::sample::select(vec![3u64, 5, 7]), 1..=max_len)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn separation_lower_bound(d in 2usize..=3, n in odd_seq(3)) {
            let n = if d == 3 && n.iter().product::<u64>() > 45 { vec![3, 3] } else { n };
            let s = SpongeSpec::full(d, n).unwrap();
            for depth in 1..=s.depth() {
                let sep = s.min_separation(depth).unwrap();
                let bound = s.scale(depth - 1).unwrap() / qi(3);
                prop_assert!(sep.at_least(&bound));
            }
        }

        #[test]
        fn containment_monotone_in_depth(
            n in odd_seq(3),
            num in prop::collection::vec(0i64..=315, 2),
        ) {
            let s = SpongeSpec::full(2, n).unwrap();
            let p = PointQ::new(num.iter().map(|&a| q(a, 315)).collect());
            for k in 0..s.depth() {
                if s.contains(&p, k + 1).unwrap() {
                    prop_assert!(s.contains(&p, k).unwrap());
                }
            }
        }
    }
}
