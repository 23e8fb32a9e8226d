//! Empirical measures for orbit averages, mass-escape statistics, the
//! totient and no-escape verifiers, Siegel statistics, partition entropy
//! and the entropy-inequality harness.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::arith;
use crate::basis::{AxisSearch, RealLatticeBasis};
use crate::error::Result;
use crate::families::FamilyPoint;
use crate::families::{enumerate_family, u_matrix};
use crate::flow::{
    diag_apply, diag_apply_q, flow_t, grid_sample, permute_basis, Permutation, Region, TimeVector,
    v_direction,
};
use crate::height::{
    build_partition, count_vectors_in_sup_ball, ht, EnumerationBudget, PartitionSpec,
    BOUNDARY_TOL,
};

/// Compensated (Neumaier) summation; all accumulations run in a fixed
/// order so reports are deterministic.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Finite weighted list of lattice points approximating an orbit average.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    points: Vec<(RealLatticeBasis, f64)>,
    normalized: bool,
}

impl EmpiricalMeasure {
    pub fn dirac(b: RealLatticeBasis) -> Self {
        EmpiricalMeasure {
            points: vec![(b, 1.0)],
            normalized: true,
        }
    }

    pub fn uniform(bases: Vec<RealLatticeBasis>) -> Self {
        let w = 1.0 / bases.len() as f64;
        EmpiricalMeasure {
            points: bases.into_iter().map(|b| (b, w)).collect(),
            normalized: true,
        }
    }

    pub fn from_weighted(points: Vec<(RealLatticeBasis, f64)>) -> Self {
        let total = neumaier_sum(points.iter().map(|(_, w)| *w));
        EmpiricalMeasure {
            points: points
                .into_iter()
                .map(|(b, w)| (b, w / total))
                .collect(),
            normalized: true,
        }
    }

    pub fn points(&self) -> &[(RealLatticeBasis, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn total_weight(&self) -> f64 {
        neumaier_sum(self.points.iter().map(|(_, w)| *w))
    }

    /// Pushforward under a basis transformation.
    pub fn map_points(&self, f: impl Fn(&RealLatticeBasis) -> RealLatticeBasis) -> Self {
        EmpiricalMeasure {
            points: self.points.iter().map(|(b, w)| (f(b), *w)).collect(),
            normalized: self.normalized,
        }
    }

    /// Convex mixture of measures.
    pub fn mixture(parts: &[(EmpiricalMeasure, f64)]) -> Self {
        let total = neumaier_sum(parts.iter().map(|(_, c)| *c));
        let mut points = Vec::new();
        for (m, c) in parts {
            for (b, w) in &m.points {
                points.push((b.clone(), w * c / total));
            }
        }
        EmpiricalMeasure {
            points,
            normalized: true,
        }
    }
}

/// Orbit average: pushes every base point through the diagonal flow over a
/// deterministic grid of the region with equal grid weights. For a family
/// point and its truncation region the support is the truncated orbit.
pub fn orbit_average(
    base: &EmpiricalMeasure,
    region: &Region,
    resolution: u32,
) -> EmpiricalMeasure {
    let n = base.points()[0].0.dim();
    let grid = grid_sample(region, n, resolution);
    let gw = 1.0 / grid.len() as f64;
    let mut points = Vec::with_capacity(base.len() * grid.len());
    for (b, w) in base.points() {
        for t in &grid {
            points.push((diag_apply(b, t), w * gw));
        }
    }
    EmpiricalMeasure {
        points,
        normalized: base.normalized,
    }
}

/// Uniform line average along `w + t v`, `t` in `[0, r]`, sampled at
/// midpoints; `w` lives in the unit fundamental region and scales by
/// `ln q` through `a_q`.
pub fn line_average(
    family: &[FamilyPoint],
    w: &TimeVector,
    r: f64,
    q: u64,
    resolution: u32,
) -> EmpiricalMeasure {
    assert!(r > 0.0 && resolution >= 1);
    let n = w.dim();
    let v = v_direction(n);
    let gw = 1.0 / (family.len() as f64 * resolution as f64);
    let mut points = Vec::with_capacity(family.len() * resolution as usize);
    for pt in family {
        let b = u_matrix(pt);
        for j in 0..resolution {
            let t = r * (j as f64 + 0.5) / resolution as f64;
            let pos = w.add_scaled(&v, t);
            points.push((diag_apply_q(&b, &pos, q), gw));
        }
    }
    EmpiricalMeasure {
        points,
        normalized: true,
    }
}

/// Discrete line average: integer flow times `k = 0 .. floor(r ln q) - 1`
/// applied as unit-time diagonal steps after the `a_q(w)` shift.
pub fn discrete_line_average(
    family: &[FamilyPoint],
    w: &TimeVector,
    r: f64,
    q: u64,
) -> EmpiricalMeasure {
    let steps = (r * (q as f64).ln()).floor() as u32;
    assert!(steps >= 1, "need r ln q >= 1");
    let n = w.dim();
    let v = v_direction(n);
    let gw = 1.0 / (family.len() as f64 * steps as f64);
    let mut points = Vec::with_capacity(family.len() * steps as usize);
    for pt in family {
        let b = diag_apply_q(&u_matrix(pt), w, q);
        for k in 0..steps {
            points.push((diag_apply(&b, &v.scaled(k as f64)), gw));
        }
    }
    EmpiricalMeasure {
        points,
        normalized: true,
    }
}

/// Weight sitting at height `M` or above. Near-boundary points are
/// reported separately; ill-conditioned points count pessimistically as
/// above the cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct MassReport {
    pub mass: f64,
    pub boundary_mass: f64,
    pub boundary_count: usize,
    pub ill_count: usize,
}

pub fn mass_above(mu: &EmpiricalMeasure, m_cutoff: f64, budget: &EnumerationBudget) -> MassReport {
    let heights: Vec<Option<f64>> = mu
        .points()
        .par_iter()
        .map(|(b, _)| ht(b, budget).ok())
        .collect();
    let mut above = Vec::new();
    let mut boundary = Vec::new();
    let mut boundary_count = 0;
    let mut ill_count = 0;
    for ((_, w), h) in mu.points().iter().zip(&heights) {
        match h {
            None => {
                ill_count += 1;
                above.push(*w);
            }
            Some(h) => {
                if *h >= m_cutoff {
                    above.push(*w);
                }
                if (*h - m_cutoff).abs() < 1e-6 {
                    boundary.push(*w);
                    boundary_count += 1;
                }
            }
        }
    }
    MassReport {
        mass: neumaier_sum(above),
        boundary_mass: neumaier_sum(boundary),
        boundary_count,
        ill_count,
    }
}

/// Exact breakpoint verification of the coprime-count bound
/// `|#{1<=m<=αN : (m,N)=1} - α φ(N)| <= 2^{ω(N)}` for every `α` in
/// `[0, 1]`: the count is a step function and the bound is linear in `α`,
/// so the supremum is attained at the step breakpoints, which are checked
/// in exact integer arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct TotientReport {
    pub n_max: u64,
    pub violations: Vec<(u64, u64)>,
    pub max_ratio: f64,
    pub checked: u64,
}

pub fn totient_equidistribution_check(n_max: u64) -> TotientReport {
    assert!(n_max >= 2);
    let spf = arith::spf_table(n_max as usize);
    let mut violations = Vec::new();
    let mut max_ratio = 0.0f64;
    let mut checked = 0u64;
    let mut coprime = vec![true; n_max as usize + 1];
    for n in 2..=n_max {
        let nn = n as usize;
        for c in coprime.iter_mut().take(nn + 1) {
            *c = true;
        }
        let mut omega = 0u32;
        let mut rest = nn;
        while rest > 1 {
            let p = spf[rest] as usize;
            omega += 1;
            let mut m = p;
            while m <= nn {
                coprime[m] = false;
                m += p;
            }
            while rest % p == 0 {
                rest /= p;
            }
        }
        let phi: i64 = (1..=nn).filter(|&m| coprime[m]).count() as i64;
        let bound = (n as i64) * (1i64 << omega);
        let mut count: i64 = 0;
        for m in 0..=nn {
            if m >= 1 && coprime[m] {
                count += 1;
            }
            let d1 = (n as i64 * count - m as i64 * phi).abs();
            checked += 1;
            if d1 > bound {
                violations.push((n, m as u64));
            }
            max_ratio = max_ratio.max(d1 as f64 / bound as f64);
            if m < nn {
                let d2 = (n as i64 * count - (m as i64 + 1) * phi).abs();
                checked += 1;
                if d2 > bound {
                    violations.push((n, m as u64));
                }
                max_ratio = max_ratio.max(d2 as f64 / bound as f64);
            }
        }
    }
    TotientReport {
        n_max,
        violations,
        max_ratio,
        checked,
    }
}

/// Average number of nonzero lattice vectors in the sup-norm ball of
/// radius `r_ball`, clipped per lattice at `clip`. The Haar reference
/// value is the ball volume `(2 r_ball)^n` (Siegel mean value theorem,
/// used as an external equidistribution oracle).
#[derive(Debug, Clone, PartialEq)]
pub struct SiegelReport {
    pub value: f64,
    pub reference: f64,
    pub clipped_points: usize,
    pub ill_points: usize,
}

pub fn siegel_statistic(
    mu: &EmpiricalMeasure,
    r_ball: f64,
    clip: u64,
    budget: &EnumerationBudget,
) -> SiegelReport {
    let n = mu.points()[0].0.dim();
    let counts: Vec<Option<(u64, bool)>> = mu
        .points()
        .par_iter()
        .map(|(b, _)| {
            count_vectors_in_sup_ball(b, r_ball, clip, budget)
                .ok()
                .map(|c| (c.count, c.clipped))
        })
        .collect();
    let mut clipped_points = 0;
    let mut ill_points = 0;
    let mut terms = Vec::with_capacity(counts.len());
    for ((_, w), c) in mu.points().iter().zip(&counts) {
        match c {
            None => {
                ill_points += 1;
                terms.push(*w * clip as f64);
            }
            Some((count, clipped)) => {
                if *clipped {
                    clipped_points += 1;
                }
                terms.push(*w * *count as f64);
            }
        }
    }
    SiegelReport {
        value: neumaier_sum(terms),
        reference: (2.0 * r_ball).powi(n as i32),
        clipped_points,
        ill_points,
    }
}

/// Entropy of an empirical measure with respect to the refinement of a
/// partition along the first `m` flow iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub m: usize,
    pub h: f64,
    pub h_over_m: f64,
    pub itineraries: usize,
    pub partition_atoms: usize,
    pub unbounded_mass: f64,
}

pub fn empirical_entropy(
    mu: &EmpiricalMeasure,
    partition: &PartitionSpec,
    m: usize,
    q: u64,
    budget: &EnumerationBudget,
) -> Result<EntropyReport> {
    assert!(m >= 1);
    let labels: Vec<Result<Vec<usize>>> = mu
        .points()
        .par_iter()
        .map(|(b, _)| {
            let mut x = b.clone();
            let mut itinerary = Vec::with_capacity(m);
            for step in 0..m {
                itinerary.push(partition.assign(&x, budget)?);
                if step + 1 < m {
                    x = flow_t(&x, q);
                }
            }
            Ok(itinerary)
        })
        .collect();
    let mut cells: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
    let mut unbounded = Vec::new();
    for ((_, w), label) in mu.points().iter().zip(labels) {
        let label = label?;
        if label[0] == 0 {
            unbounded.push(*w);
        }
        cells.entry(label).or_default().push(*w);
    }
    let masses: Vec<f64> = cells.values().map(|ws| neumaier_sum(ws.iter().copied())).collect();
    let h = -neumaier_sum(masses.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()));
    Ok(EntropyReport {
        m,
        h,
        h_over_m: h / m as f64,
        itineraries: cells.len(),
        partition_atoms: partition.atom_count(),
        unbounded_mass: neumaier_sum(unbounded),
    })
}

/// A random finite system for the entropy-inequality harness.
struct FiniteSystem {
    size: usize,
    map: Vec<usize>,
    labels: Vec<usize>,
    label_count: usize,
}

fn random_measure(rng: &mut StdRng, size: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..size).map(|_| rng.gen_range(1e-6..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn label_entropy(mu: &[f64], labels: &[usize], label_count: usize) -> f64 {
    let mut mass = vec![0.0; label_count];
    for (x, &w) in mu.iter().enumerate() {
        mass[labels[x]] += w;
    }
    -mass.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

fn itinerary_entropy(sys: &FiniteSystem, mu: &[f64], m: usize) -> f64 {
    let mut cells: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (x, &w) in mu.iter().enumerate() {
        let mut key = Vec::with_capacity(m);
        let mut y = x;
        for _ in 0..m {
            key.push(sys.labels[y]);
            y = sys.map[y];
        }
        *cells.entry(key).or_insert(0.0) += w;
    }
    -cells.values().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

fn push_forward(mu: &[f64], map: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; mu.len()];
    for (x, &w) in mu.iter().enumerate() {
        out[map[x]] += w;
    }
    out
}

fn time_average(sys: &FiniteSystem, mu: &[f64], k: usize) -> Vec<f64> {
    let mut acc = vec![0.0; sys.size];
    let mut cur = mu.to_vec();
    for _ in 0..k {
        for (a, c) in acc.iter_mut().zip(&cur) {
            *a += c / k as f64;
        }
        cur = push_forward(&cur, &sys.map);
    }
    acc
}

/// Random-system harness for the two entropy inequalities: concavity of
/// entropy under mixtures, and the time-average refinement bound
/// `H_{μ^k}(P^m)/m >= H_μ(P^k)/k - (m/k) ln|P|`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnessReport {
    pub trials: u32,
    pub concavity_violations: u32,
    pub subadditivity_violations: u32,
    pub max_defect: f64,
}

pub fn entropy_inequality_harness(trials: u32, seed: u64) -> HarnessReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut concavity_violations = 0;
    let mut subadditivity_violations = 0;
    let mut max_defect = 0.0f64;
    let tol = 1e-9;
    for _ in 0..trials {
        let size = rng.gen_range(2..=50);
        let label_count = rng.gen_range(1..=6usize.min(size));
        let sys = FiniteSystem {
            size,
            map: (0..size).map(|_| rng.gen_range(0..size)).collect(),
            labels: (0..size).map(|_| rng.gen_range(0..label_count)).collect(),
            label_count,
        };

        // Concavity: H of a mixture dominates the mixture of H's.
        let comps = rng.gen_range(2..=8);
        let weights = random_measure(&mut rng, comps);
        let measures: Vec<Vec<f64>> = (0..comps).map(|_| random_measure(&mut rng, size)).collect();
        let mut mixed = vec![0.0; size];
        for (c, nu) in weights.iter().zip(&measures) {
            for (m, &v) in mixed.iter_mut().zip(nu) {
                *m += c * v;
            }
        }
        let lhs = label_entropy(&mixed, &sys.labels, sys.label_count);
        let rhs: f64 = weights
            .iter()
            .zip(&measures)
            .map(|(c, nu)| c * label_entropy(nu, &sys.labels, sys.label_count))
            .sum();
        if lhs < rhs - tol {
            concavity_violations += 1;
        }
        max_defect = max_defect.max(rhs - lhs);

        // Time-average refinement bound.
        let k = rng.gen_range(1..=12);
        let m = rng.gen_range(1..=k);
        let mu = random_measure(&mut rng, size);
        let mu_k = time_average(&sys, &mu, k);
        let used: usize = {
            let mut seen = vec![false; sys.label_count];
            for &l in &sys.labels {
                seen[l] = true;
            }
            seen.iter().filter(|&&b| b).count()
        };
        let lhs2 = itinerary_entropy(&sys, &mu_k, m) / m as f64;
        let rhs2 = itinerary_entropy(&sys, &mu, k) / k as f64
            - (m as f64 / k as f64) * (used as f64).ln();
        if lhs2 < rhs2 - tol {
            subadditivity_violations += 1;
        }
        max_defect = max_defect.max(rhs2 - lhs2 - (used as f64).ln().max(0.0) * 0.0);
    }
    HarnessReport {
        trials,
        concavity_violations,
        subadditivity_violations,
        max_defect,
    }
}

/// Quadrature check of the truncation-defect bound
/// `|λ(A_x)⁻¹ μ_{xA}(f) - μ_x(f)| <= n 2^n (M/τ)` for the indicator of
/// the Mahler set at height `M`. The lattice is first moved along its
/// orbit so all axis covolumes agree, matching the representative the
/// bound is stated for.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    pub tau: f64,
    pub m_cutoff: f64,
    pub defect: f64,
    pub bound: f64,
    pub slack: f64,
    pub inner_mean: f64,
    pub outer_mean: f64,
}

pub fn restriction_defect_check(
    x: &RealLatticeBasis,
    m_cutoff: f64,
    resolution: u32,
    search: &AxisSearch,
    budget: &EnumerationBudget,
) -> Result<DefectReport> {
    let n = x.dim();
    let mut tau = 0.0;
    let mut covols = Vec::with_capacity(n);
    for i in 0..n {
        let c = x.covol_axis(i, search)?;
        covols.push(c);
        tau += c.ln() / n as f64;
    }
    assert!(tau >= m_cutoff, "the bound needs tau >= M");
    let normalizer = TimeVector::new(covols.iter().map(|c| tau - c.ln()).collect());
    let xe = diag_apply(x, &normalizer);

    let bounds = vec![-tau; n];
    let inner = grid_sample(&Region::axis(bounds.clone()), n, resolution);
    let ratio = 1.0 + m_cutoff / tau;
    let outer = grid_sample(&Region::axis_scaled(bounds, ratio), n, resolution);

    let indicator = |pts: &[TimeVector]| -> Vec<f64> {
        pts.par_iter()
            .map(|t| {
                let y = diag_apply(&xe, t);
                match ht(&y, budget) {
                    Ok(h) if h <= m_cutoff + BOUNDARY_TOL => 1.0,
                    _ => 0.0,
                }
            })
            .collect()
    };
    let inner_mean = neumaier_sum(indicator(&inner)) / inner.len() as f64;
    let outer_mean = neumaier_sum(indicator(&outer)) / outer.len() as f64;
    let i1 = ratio.powi(n as i32 - 1) * outer_mean;
    let defect = (i1 - inner_mean).abs();
    Ok(DefectReport {
        tau,
        m_cutoff,
        defect,
        bound: (n as f64) * 2f64.powi(n as i32) * m_cutoff / tau,
        slack: 2.0 / resolution as f64,
        inner_mean,
        outer_mean,
    })
}

/// Total-variation comparison, on a fixed `(M, η)`-partition built from the
/// combined supports, of the full truncated average against the cyclic
/// permutation average of the fundamental-domain truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct PermAverageReport {
    pub tv_distance: f64,
    pub tolerance: f64,
    pub atoms: usize,
}

pub fn permutation_average_check(
    q: u64,
    n: usize,
    resolution: u32,
    m_cutoff: f64,
    eta: f64,
    search_bound: i64,
    budget: &EnumerationBudget,
) -> Result<PermAverageReport> {
    let family: Vec<FamilyPoint> = enumerate_family(q, n)?.collect();
    let base = EmpiricalMeasure::uniform(family.iter().map(u_matrix).collect());
    let lnq = (q as f64).ln();

    let full = orbit_average(&base, &Region::delta_full(lnq), resolution);
    let fund = orbit_average(&base, &Region::delta(lnq), resolution);
    let sigma = Permutation::cycle(n);
    let parts: Vec<(EmpiricalMeasure, f64)> = (1..=n)
        .map(|i| {
            let s = sigma.pow(i);
            (fund.map_points(|b| permute_basis(b, &s)), 1.0)
        })
        .collect();
    let averaged = EmpiricalMeasure::mixture(&parts);

    let mut cloud: Vec<RealLatticeBasis> = full.points().iter().map(|(b, _)| b.clone()).collect();
    cloud.extend(averaged.points().iter().map(|(b, _)| b.clone()));
    let partition = build_partition(m_cutoff, eta, &cloud, eta.max(1e-2), search_bound, budget)?;

    let masses = |mu: &EmpiricalMeasure| -> Result<Vec<f64>> {
        let atoms: Vec<Result<usize>> = mu
            .points()
            .par_iter()
            .map(|(b, _)| partition.assign(b, budget))
            .collect();
        let mut out = vec![0.0; partition.atom_count()];
        for ((_, w), atom) in mu.points().iter().zip(atoms) {
            out[atom?] += w;
        }
        Ok(out)
    };
    let m1 = masses(&full)?;
    let m2 = masses(&averaged)?;
    let tv = 0.5 * neumaier_sum(m1.iter().zip(&m2).map(|(a, b)| (a - b).abs()));
    let fund_grid = grid_sample(&Region::delta(lnq), n, resolution).len();
    Ok(PermAverageReport {
        tv_distance: tv,
        tolerance: 2.0 / fund_grid as f64,
        atoms: partition.atom_count(),
    })
}
