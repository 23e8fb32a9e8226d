//! The diagonal group as the sum-zero time space `R_0^n`, its action on
//! lattice bases, the truncation regions, line segments in the
//! distinguished direction, and the coordinate-permutation action.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::basis::RealLatticeBasis;
use crate::error::{Error, Result};

/// Boundary tolerance for region membership (inclusive).
pub const REGION_TOL: f64 = 1e-9;

/// A point of `R_0^n`; coordinates are re-projected onto the sum-zero
/// hyperplane after every arithmetic operation to kill float drift.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVector {
    coords: Vec<f64>,
}

impl TimeVector {
    pub fn new(coords: Vec<f64>) -> Self {
        let n = coords.len();
        assert!(n >= 2);
        let mean = coords.iter().sum::<f64>() / n as f64;
        let coords = coords.iter().map(|&c| c - mean).collect();
        TimeVector { coords }
    }

    pub fn zero(n: usize) -> Self {
        TimeVector {
            coords: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn get(&self, i: usize) -> f64 {
        self.coords[i]
    }

    /// Sum-zero defect, bounded by `1e-12 · n · max(1, max |t_i|)` for
    /// every vector produced by this module.
    pub fn sum_defect(&self) -> f64 {
        self.coords.iter().sum::<f64>().abs()
    }

    pub fn scaled(&self, c: f64) -> Self {
        TimeVector::new(self.coords.iter().map(|&x| c * x).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        TimeVector::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn add_scaled(&self, other: &Self, c: f64) -> Self {
        assert_eq!(self.dim(), other.dim());
        TimeVector::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + c * b)
                .collect(),
        )
    }

    pub fn neg(&self) -> Self {
        TimeVector::new(self.coords.iter().map(|&x| -x).collect())
    }
}

/// The distinguished flow direction `(1-n, 1, ..., 1) / n`.
pub fn v_direction(n: usize) -> TimeVector {
    let mut coords = vec![1.0 / n as f64; n];
    coords[0] = (1.0 - n as f64) / n as f64;
    TimeVector::new(coords)
}

/// Permutation of `{0, .., n-1}`; `map[i]` is the image of `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Self {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            assert!(v < n && !seen[v], "not a permutation");
            seen[v] = true;
        }
        Permutation { map }
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            map: (0..n).collect(),
        }
    }

    /// The full cycle `0 -> 1 -> ... -> n-1 -> 0`.
    pub fn cycle(n: usize) -> Self {
        Permutation {
            map: (0..n).map(|i| (i + 1) % n).collect(),
        }
    }

    pub fn transposition(n: usize, i: usize, j: usize) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        map.swap(i, j);
        Permutation { map }
    }

    pub fn dim(&self) -> usize {
        self.map.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn compose(&self, then: &Permutation) -> Permutation {
        Permutation::new(self.map.iter().map(|&i| then.map[i]).collect())
    }

    pub fn pow(&self, k: usize) -> Permutation {
        let mut out = Permutation::identity(self.dim());
        for _ in 0..k {
            out = out.compose(self);
        }
        out
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { map: inv }
    }

    pub fn is_odd(&self) -> bool {
        let n = self.map.len();
        let mut seen = vec![false; n];
        let mut transpositions = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.map[i];
                len += 1;
            }
            transpositions += len - 1;
        }
        transpositions % 2 == 1
    }
}

/// Permutes the coordinates of a time vector: the new coordinate `σ(i)` is
/// the old coordinate `i`.
pub fn permute_time(t: &TimeVector, sigma: &Permutation) -> TimeVector {
    assert_eq!(t.dim(), sigma.dim());
    let mut coords = vec![0.0; t.dim()];
    for i in 0..t.dim() {
        coords[sigma.apply(i)] = t.get(i);
    }
    TimeVector::new(coords)
}

/// Permutes the coordinates of a lattice: right multiplication by the
/// permutation matrix, with the first row negated for odd permutations so
/// that the representative stays unimodular with determinant one.
pub fn permute_basis(b: &RealLatticeBasis, sigma: &Permutation) -> RealLatticeBasis {
    assert_eq!(b.dim(), sigma.dim());
    let map: Vec<usize> = (0..sigma.dim()).map(|i| sigma.apply(i)).collect();
    b.permute_columns(&map, sigma.is_odd())
}

/// Truncation regions in the sum-zero time space. The membership
/// inequalities are evaluated on `t / scale`, which makes membership
/// scale-equivariant by construction.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionKind {
    /// `t_i >= 0 >= t_1 >= -1` for `i >= 2`.
    DeltaFull,
    /// `t_i >= 0 >= t_1 >= -1 + t_i` for `i >= 2`.
    Delta,
    /// `Delta` intersected with `|t_i - t_j| <= s` for `i, j >= 2`.
    DeltaS(f64),
    /// `t_i >= bounds[i]`; the truncation region of an axis lattice.
    Axis(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub kind: RegionKind,
    pub scale: f64,
}

impl Region {
    pub fn delta_full(scale: f64) -> Self {
        assert!(scale > 0.0);
        Region {
            kind: RegionKind::DeltaFull,
            scale,
        }
    }

    pub fn delta(scale: f64) -> Self {
        assert!(scale > 0.0);
        Region {
            kind: RegionKind::Delta,
            scale,
        }
    }

    pub fn delta_s(s: f64, scale: f64) -> Self {
        assert!(s > 0.0 && scale > 0.0);
        Region {
            kind: RegionKind::DeltaS(s),
            scale,
        }
    }

    pub fn axis(bounds: Vec<f64>) -> Self {
        Region {
            kind: RegionKind::Axis(bounds),
            scale: 1.0,
        }
    }

    pub fn axis_scaled(bounds: Vec<f64>, scale: f64) -> Self {
        assert!(scale > 0.0);
        Region {
            kind: RegionKind::Axis(bounds),
            scale,
        }
    }

    pub fn contains(&self, t: &TimeVector) -> bool {
        let n = t.dim();
        let u: Vec<f64> = t.coords().iter().map(|&x| x / self.scale).collect();
        match &self.kind {
            RegionKind::DeltaFull => {
                u[0] <= REGION_TOL
                    && u[0] >= -1.0 - REGION_TOL
                    && u[1..].iter().all(|&x| x >= -REGION_TOL)
            }
            RegionKind::Delta => {
                u[0] <= REGION_TOL
                    && u[1..].iter().all(|&x| x >= -REGION_TOL)
                    && u[1..].iter().all(|&x| u[0] >= -1.0 + x - REGION_TOL)
            }
            RegionKind::DeltaS(s) => {
                if !(u[0] <= REGION_TOL
                    && u[1..].iter().all(|&x| x >= -REGION_TOL)
                    && u[1..].iter().all(|&x| u[0] >= -1.0 + x - REGION_TOL))
                {
                    return false;
                }
                for i in 1..n {
                    for j in i + 1..n {
                        if (u[i] - u[j]).abs() > s + REGION_TOL {
                            return false;
                        }
                    }
                }
                true
            }
            RegionKind::Axis(bounds) => {
                assert_eq!(bounds.len(), n);
                u.iter().zip(bounds).all(|(&x, &b)| x >= b - REGION_TOL)
            }
        }
    }
}

/// Right-multiplies the basis by `diag(e^{t_1}, ..., e^{t_n})`.
pub fn diag_apply(b: &RealLatticeBasis, t: &TimeVector) -> RealLatticeBasis {
    assert_eq!(b.dim(), t.dim());
    let scales: Vec<f64> = t.coords().iter().map(|&x| x.exp()).collect();
    b.scale_columns(&scales)
}

/// Right-multiplies by `diag(q^{t_1}, ..., q^{t_n})`. When the basis is
/// exact and every `t_i` is an integer, the scaling stays exact.
pub fn diag_apply_q(b: &RealLatticeBasis, t: &TimeVector, q: u64) -> RealLatticeBasis {
    assert_eq!(b.dim(), t.dim());
    let integral = t
        .coords()
        .iter()
        .all(|&x| (x - x.round()).abs() <= 1e-12 * x.abs().max(1.0));
    if b.is_exact() && integral {
        let scales: Vec<BigRational> = t
            .coords()
            .iter()
            .map(|&x| {
                let k = x.round() as i64;
                let pow = BigInt::from(q).pow(k.unsigned_abs() as u32);
                if k >= 0 {
                    BigRational::from_integer(pow)
                } else {
                    BigRational::new(BigInt::one(), pow)
                }
            })
            .collect();
        return b.scale_columns_exact(&scales);
    }
    let lnq = (q as f64).ln();
    let scales: Vec<f64> = t.coords().iter().map(|&x| (x * lnq).exp()).collect();
    b.scale_columns(&scales)
}

/// One step of the distinguished flow `T(x) = x a_q(v)`.
pub fn flow_t(b: &RealLatticeBasis, q: u64) -> RealLatticeBasis {
    diag_apply_q(b, &v_direction(b.dim()), q)
}

/// Admissible flow interval `[-min_{i>=2} n t_i, 1 + t_1 - max_{i>=2} t_i]`
/// for a base point of the tube `Delta_s` (unit scale).
pub fn segment_bounds(w: &TimeVector) -> Result<(f64, f64)> {
    let n = w.dim() as f64;
    let rest = &w.coords()[1..];
    let min = rest.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = rest.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = -n * min;
    let hi = 1.0 + w.get(0) - max;
    if hi < lo - REGION_TOL {
        return Err(Error::EmptyInterval);
    }
    Ok((lo, hi))
}

/// A line segment `{w + t v : 0 <= t <= length}` with a weight, used by the
/// tube decomposition.
#[derive(Debug, Clone)]
pub struct Segment {
    pub base: TimeVector,
    pub length: f64,
    pub weight: f64,
}

fn simplex_grid(n: usize, resolution: u32, mut visit: impl FnMut(&[u32])) {
    // All (n-1)-tuples of nonnegative integers with sum <= resolution,
    // lexicographic.
    let mut j = vec![0u32; n - 1];
    loop {
        visit(&j);
        // Odometer step respecting the sum constraint.
        let mut idx = n - 1;
        loop {
            if idx == 0 {
                return;
            }
            idx -= 1;
            j[idx] += 1;
            if j.iter().sum::<u32>() <= resolution {
                break;
            }
            j[idx] = 0;
        }
    }
}

fn compositions(n: usize, total: u32, mut visit: impl FnMut(&[u32])) {
    let mut j = vec![0u32; n];
    fn rec(j: &mut Vec<u32>, idx: usize, left: u32, visit: &mut impl FnMut(&[u32])) {
        if idx == j.len() - 1 {
            j[idx] = left;
            visit(j);
            return;
        }
        for v in 0..=left {
            j[idx] = v;
            rec(j, idx + 1, left - v, visit);
        }
    }
    rec(&mut j, 0, total, &mut visit);
}

/// Deterministic uniform grid over the `(n-1)`-dimensional region in
/// barycentric coordinates. Every returned point passes `contains`.
pub fn grid_sample(region: &Region, n: usize, resolution: u32) -> Vec<TimeVector> {
    assert!(resolution >= 1 && n >= 2);
    let res = resolution as f64;
    let mut out = Vec::new();
    match &region.kind {
        RegionKind::Axis(bounds) => {
            assert_eq!(bounds.len(), n);
            let volume: f64 = -bounds.iter().sum::<f64>();
            if volume <= REGION_TOL {
                out.push(TimeVector::new(
                    bounds.iter().map(|&b| region.scale * b).collect(),
                ));
                return out;
            }
            compositions(n, resolution, |j| {
                let coords: Vec<f64> = (0..n)
                    .map(|i| region.scale * (bounds[i] + volume * j[i] as f64 / res))
                    .collect();
                out.push(TimeVector::new(coords));
            });
        }
        _ => {
            let unit = Region {
                kind: region.kind.clone(),
                scale: 1.0,
            };
            simplex_grid(n, resolution, |j| {
                let mut coords = vec![0.0; n];
                let mut sum = 0.0;
                for (i, &ji) in j.iter().enumerate() {
                    coords[i + 1] = ji as f64 / res;
                    sum += coords[i + 1];
                }
                coords[0] = -sum;
                let t = TimeVector::new(coords);
                if unit.contains(&t) {
                    out.push(t.scaled(region.scale));
                }
            });
        }
    }
    out
}

/// Weighted segments that foliate the tube `Delta_s` (unit scale) by lines
/// in the direction `v` through base points with `min_{i>=2} t_i = 0`,
/// weighted by segment length.
pub fn nu_s_decomposition(n: usize, s: f64, resolution: u32) -> Vec<Segment> {
    assert!(n >= 2 && s > 0.0 && resolution >= 1);
    let mut raw: Vec<(TimeVector, f64)> = Vec::new();
    if n == 2 {
        // The base face is the single point 0.
        raw.push((TimeVector::zero(2), 1.0));
    } else {
        let res = resolution as f64;
        for zero_idx in 1..n {
            // Coordinates 1..n-1 other than zero_idx run over [0, s].
            let free: Vec<usize> = (1..n).filter(|&i| i != zero_idx).collect();
            let m = free.len();
            let mut j = vec![0u32; m];
            loop {
                // Smallest-zero-index convention avoids double counting
                // bases with several vanishing coordinates.
                let duplicate = free
                    .iter()
                    .zip(&j)
                    .any(|(&i, &ji)| i < zero_idx && ji == 0);
                if !duplicate {
                    let mut coords = vec![0.0; n];
                    for (&i, &ji) in free.iter().zip(&j) {
                        coords[i] = s * ji as f64 / res;
                    }
                    let sum: f64 = coords[1..].iter().sum();
                    coords[0] = -sum;
                    let w = TimeVector::new(coords);
                    if Region::delta_s(s, 1.0).contains(&w) {
                        if let Ok((lo, hi)) = segment_bounds(&w) {
                            debug_assert!(lo.abs() <= 1e-9);
                            if hi > 1e-12 {
                                raw.push((w, hi));
                            }
                        }
                    }
                }
                // Odometer over the free coordinates.
                let mut idx = m;
                loop {
                    if idx == 0 {
                        break;
                    }
                    idx -= 1;
                    j[idx] += 1;
                    if j[idx] <= resolution {
                        break;
                    }
                    j[idx] = 0;
                }
                if j.iter().all(|&x| x == 0) {
                    break;
                }
            }
        }
    }
    let total: f64 = raw.iter().map(|(_, len)| len).sum();
    raw.into_iter()
        .map(|(base, length)| Segment {
            base,
            length,
            weight: length / total,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tv(coords: &[f64]) -> TimeVector {
        TimeVector::new(coords.to_vec())
    }

    #[test]
    fn time_vector_projects() {
        let t = tv(&[1.0, 2.0, 3.0]);
        assert!(t.sum_defect() <= 1e-12 * 3.0 * 3.0);
        let u = t.add(&t.neg());
        assert!(u.coords().iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn diag_apply_examples() {
        let b = RealLatticeBasis::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        let same = diag_apply(&b, &TimeVector::zero(2));
        assert!(b.max_entry_distance(&same) == 0.0);

        let d = diag_apply_q(&RealLatticeBasis::identity(2), &v_direction(2), 4);
        assert!((d.entry(0, 0) - 0.5).abs() < 1e-12);
        assert!((d.entry(1, 1) - 2.0).abs() < 1e-12);
        assert!(d.entry(0, 1).abs() < 1e-15 && d.entry(1, 0).abs() < 1e-15);

        let t = tv(&[0.3, -0.8, 0.5]);
        let b3 = RealLatticeBasis::from_rows(&[
            vec![1.0, 0.2, 0.1],
            vec![0.0, 1.0, 0.4],
            vec![0.3, 0.0, 1.0],
        ])
        .unwrap();
        let round_trip = diag_apply(&diag_apply(&b3, &t), &t.neg());
        assert!(b3.max_entry_distance(&round_trip) < 1e-10);
        assert!((diag_apply(&b3, &t).det() / b3.det() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn region_membership_examples() {
        let n2_full = Region::delta_full(1.0);
        let n2_delta = Region::delta(1.0);
        assert!(n2_full.contains(&TimeVector::zero(2)));
        assert!(n2_delta.contains(&TimeVector::zero(2)));
        assert!(n2_full.contains(&tv(&[-1.0, 1.0])));
        assert!(!n2_full.contains(&tv(&[-1.01, 1.01])));

        // Regression pin for the Delta vs DeltaFull distinction.
        let t = tv(&[-1.0, 0.5, 0.5]);
        assert!(Region::delta_full(1.0).contains(&t));
        assert!(!Region::delta(1.0).contains(&t));
    }

    #[test]
    fn region_scale_equivariance() {
        let c = 7.3;
        let pts = [
            tv(&[-0.4, 0.1, 0.3]),
            tv(&[-1.2, 0.6, 0.6]),
            tv(&[0.1, -0.05, -0.05]),
        ];
        for t in &pts {
            let scaled_t = t.scaled(c);
            for region in [Region::delta_full(c), Region::delta(c)] {
                let unit = Region {
                    kind: region.kind.clone(),
                    scale: 1.0,
                };
                let u = TimeVector::new(scaled_t.coords().iter().map(|&x| x / c).collect());
                assert_eq!(region.contains(&scaled_t), unit.contains(&u));
            }
        }
    }

    #[test]
    fn segment_bounds_examples() {
        let (lo, hi) = segment_bounds(&TimeVector::zero(2)).unwrap();
        assert!((lo - 0.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);

        let (lo, hi) = segment_bounds(&tv(&[-0.5, 0.5])).unwrap();
        assert!((lo - -1.0).abs() < 1e-12, "lo = {lo}");
        assert!((hi - 0.0).abs() < 1e-12, "hi = {hi}");
    }

    #[test]
    fn grid_sample_one_dimensional() {
        let pts = grid_sample(&Region::delta_full(1.0), 2, 8);
        assert_eq!(pts.len(), 9);
        for (k, t) in pts.iter().enumerate() {
            assert!((t.get(0) + k as f64 / 8.0).abs() < 1e-12);
        }
        let axis = grid_sample(&Region::axis(vec![0.0, 0.0]), 2, 1);
        assert_eq!(axis.len(), 1);
        assert!(axis[0].coords().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn grid_sample_counts() {
        // DeltaFull at n = 3 fills the whole barycentric simplex.
        for res in [2u32, 4, 8] {
            let pts = grid_sample(&Region::delta_full(1.0), 3, res);
            let expect = ((res + 1) * (res + 2) / 2) as usize;
            assert_eq!(pts.len(), expect);
            assert!(pts
                .iter()
                .all(|t| Region::delta_full(1.0).contains(t)));
        }
        // Counts scale like resolution^{n-1}.
        let c4 = grid_sample(&Region::delta_full(1.0), 3, 4).len() as f64;
        let c8 = grid_sample(&Region::delta_full(1.0), 3, 8).len() as f64;
        assert!(c8 / c4 > 2.5 && c8 / c4 < 4.5);
    }

    #[test]
    fn grid_sample_axis_matches_family_region() {
        let lnq = 5.0f64.ln();
        let pts = grid_sample(&Region::axis(vec![-lnq, 0.0]), 2, 10);
        assert_eq!(pts.len(), 11);
        let region = Region::axis(vec![-lnq, 0.0]);
        assert!(pts.iter().all(|t| region.contains(t)));
        // Also inside ln(q) * DeltaFull.
        let full = Region::delta_full(lnq);
        assert!(pts.iter().all(|t| full.contains(t)));
    }

    #[test]
    fn nu_s_decomposition_properties() {
        for (n, s) in [(2usize, 0.25f64), (3, 0.25), (3, 0.45), (4, 0.2)] {
            let segs = nu_s_decomposition(n, s, 8);
            assert!(!segs.is_empty());
            let total: f64 = segs.iter().map(|sg| sg.weight).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let floor = (1.0 + (1.0 - n as f64) * s).max(0.0);
            let region = Region::delta_s(s, 1.0);
            let v = v_direction(n);
            for sg in &segs {
                assert!(sg.length >= floor - 1e-9, "length {} < {}", sg.length, floor);
                for k in 0..=8 {
                    let t = sg.base.add_scaled(&v, sg.length * k as f64 / 8.0);
                    assert!(region.contains(&t));
                }
            }
        }
    }

    #[test]
    fn permutation_basics() {
        let sigma = Permutation::cycle(3);
        assert!(!sigma.is_odd());
        assert_eq!(sigma.pow(3), Permutation::identity(3));
        let tau = Permutation::transposition(2, 0, 1);
        assert!(tau.is_odd());

        let t = tv(&[-0.6, 0.2, 0.4]);
        let u = permute_time(&t, &sigma);
        // new[sigma(i)] = old[i]
        assert!((u.get(1) - t.get(0)).abs() < 1e-15);
        assert!((u.get(2) - t.get(1)).abs() < 1e-15);
        assert!((u.get(0) - t.get(2)).abs() < 1e-15);
    }

    #[test]
    fn permute_identity_is_identity() {
        let b = RealLatticeBasis::from_rows(&[vec![1.0, 0.3], vec![0.2, 1.0]]).unwrap();
        let p = permute_basis(&b, &Permutation::identity(2));
        assert!(b.max_entry_distance(&p) == 0.0);
    }

    #[test]
    fn permute_diag_equivariance() {
        let b = RealLatticeBasis::from_rows(&[
            vec![1.0, 0.2, 0.1],
            vec![0.0, 1.0, 0.4],
            vec![0.3, 0.0, 1.0],
        ])
        .unwrap();
        let t = tv(&[0.5, -0.7, 0.2]);
        for sigma in [
            Permutation::cycle(3),
            Permutation::transposition(3, 0, 2),
            Permutation::transposition(3, 1, 2),
        ] {
            let lhs = permute_basis(&diag_apply(&b, &t), &sigma);
            let rhs = diag_apply(&permute_basis(&b, &sigma), &permute_time(&t, &sigma));
            assert!(lhs.max_entry_distance(&rhs) < 1e-10);
            assert!((permute_basis(&b, &sigma).det() - b.det()).abs() < 1e-10);
        }
    }

    #[test]
    fn flow_commutes_only_with_stabilizing_permutations() {
        let b = RealLatticeBasis::from_rows(&[
            vec![1.0, 0.2, 0.1],
            vec![0.0, 1.0, 0.4],
            vec![0.3, 0.0, 1.0],
        ])
        .unwrap();
        let q = 5;
        let fix_first = Permutation::transposition(3, 1, 2);
        let lhs = permute_basis(&flow_t(&b, q), &fix_first);
        let rhs = flow_t(&permute_basis(&b, &fix_first), q);
        assert!(lhs.max_entry_distance(&rhs) < 1e-10);

        let move_first = Permutation::transposition(3, 0, 1);
        let lhs = permute_basis(&flow_t(&b, q), &move_first);
        let rhs = flow_t(&permute_basis(&b, &move_first), q);
        assert!(lhs.max_entry_distance(&rhs) > 1e-3);
    }

    #[test]
    fn flow_iterates_match_diag() {
        let b = RealLatticeBasis::from_rows(&[vec![1.0, 0.37], vec![0.0, 1.0]]).unwrap();
        let q = 7;
        let mut x = b.clone();
        for _ in 0..100 {
            x = flow_t(&x, q);
        }
        let direct = diag_apply_q(&b, &v_direction(2).scaled(100.0), q);
        let scale = direct
            .rows_flat()
            .iter()
            .fold(1.0f64, |a, &b| a.max(b.abs()));
        assert!(x.max_entry_distance(&direct) < 1e-8 * scale);
        assert!((x.det() / b.det() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fundamental_domain_decomposition() {
        // Monte-Carlo check that the shifted cyclic translates of Delta tile
        // DeltaFull: with F = Delta - v, the sets sigma^i(F) + v for
        // i = 1..n partition DeltaFull up to boundary.
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(42);
        for n in [2usize, 3] {
            let v = v_direction(n);
            let sigma = Permutation::cycle(n);
            let full = Region::delta_full(1.0);
            let delta = Region::delta(1.0);
            let mut mismatches = 0usize;
            let mut overlaps = 0usize;
            let trials = 100_000;
            for _ in 0..trials {
                let coords: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
                let t = TimeVector::new(coords);
                let inside = full.contains(&t);
                // Count translates sigma^i(F) + v containing t, i.e.
                // sigma^{-i}(t - v) + v in Delta.
                let shifted = t.add(&v.neg());
                let mut count = 0;
                let mut strict = 0;
                for i in 1..=n {
                    let s_inv = sigma.pow(i).inverse();
                    let back = permute_time(&shifted, &s_inv).add(&v);
                    if delta.contains(&back) {
                        count += 1;
                    }
                    // Strict interior: shrink tolerance by hand.
                    let strictly = {
                        let u = back.coords();
                        u[0] < -1e-7
                            && u[1..].iter().all(|&x| x > 1e-7)
                            && u[1..].iter().all(|&x| u[0] > -1.0 + x + 1e-7)
                    };
                    if strictly {
                        strict += 1;
                    }
                }
                if (inside && count == 0) || (!inside && count > 0) {
                    mismatches += 1;
                }
                if strict > 1 {
                    overlaps += 1;
                }
            }
            assert!(
                (mismatches as f64) < 1e-3 * trials as f64,
                "n = {n}: {mismatches} mismatches"
            );
            assert_eq!(overlaps, 0, "interiors must be disjoint");
        }
    }
}
