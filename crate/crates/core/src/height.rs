//! Sup-norm shortest vectors and heights, Mahler sets, Bowen balls and
//! their algebra, separation counts and `(M, η)`-partitions.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::basis::{mat_inv, mat_mul, RealLatticeBasis};
use crate::error::{Error, Result};
use crate::families::{enumerate_family, u_matrix};
use crate::flow::{diag_apply_q, TimeVector};

/// Inclusive boundary tolerance for heights and box memberships.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Budget for certified coefficient enumerations.
#[derive(Debug, Clone, Copy)]
pub struct EnumerationBudget {
    pub max_candidates: u128,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_candidates: 10_000_000,
        }
    }
}

/// Certified sup-norm shortest vector: `value` is the height `1 / norm`,
/// and `witness · B` attains the norm. No coefficient vector within the
/// certified search bound achieves a smaller sup-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightResult {
    pub value: f64,
    pub norm: f64,
    pub witness: Vec<i128>,
}

/// Gram-Schmidt data for the LLL loop.
fn gso(rows: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut bstar = rows.to_vec();
    let mut mu = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let denom: f64 = (0..n).map(|k| bstar[j * n + k] * bstar[j * n + k]).sum();
            let numer: f64 = (0..n).map(|k| rows[i * n + k] * bstar[j * n + k]).sum();
            let m = if denom > 0.0 { numer / denom } else { 0.0 };
            mu[i * n + j] = m;
            for k in 0..n {
                bstar[i * n + k] -= m * bstar[j * n + k];
            }
        }
    }
    (bstar, mu)
}

/// Floating-point LLL reduction (delta = 0.75) tracking the unimodular
/// transform: on return `rows = U · original`. Used purely as a
/// preconditioner; the enumeration bound below is valid for any basis.
fn lll_reduce(rows: &mut [f64], n: usize) -> Vec<i128> {
    let mut u = vec![0i128; n * n];
    for i in 0..n {
        u[i * n + i] = 1;
    }
    let delta = 0.75;
    let max_steps = 1000 * n * n;
    let mut steps = 0;
    let mut k = 1;
    while k < n && steps < max_steps {
        steps += 1;
        let (bstar, mu) = gso(rows, n);
        // Size-reduce row k.
        for j in (0..k).rev() {
            let (_, mu_now) = gso(rows, n);
            let q = mu_now[k * n + j].round();
            if q != 0.0 && q.abs() < 9e15 {
                let qi = q as i128;
                for c in 0..n {
                    rows[k * n + c] -= q * rows[j * n + c];
                    let s = qi * u[j * n + c];
                    u[k * n + c] -= s;
                }
            }
        }
        let (bstar2, mu2) = gso(rows, n);
        let norm2 = |b: &[f64], i: usize| -> f64 { (0..n).map(|c| b[i * n + c] * b[i * n + c]).sum() };
        let lhs = norm2(&bstar2, k);
        let m = mu2[k * n + (k - 1)];
        let rhs = (delta - m * m) * norm2(&bstar2, k - 1);
        let _ = (bstar, mu);
        if lhs >= rhs || !lhs.is_finite() {
            k += 1;
        } else {
            for c in 0..n {
                rows.swap(k * n + c, (k - 1) * n + c);
                u.swap(k * n + c, (k - 1) * n + c);
            }
            k = k.max(2) - 1;
        }
    }
    u
}

fn sign_normalized(k: &[i128]) -> Vec<i128> {
    match k.iter().find(|&&x| x != 0) {
        Some(&x) if x < 0 => k.iter().map(|&v| -v).collect(),
        _ => k.to_vec(),
    }
}

/// Canonical order on witnesses: smaller l1 norm first, then reverse
/// lexicographic, after normalizing the sign so the first nonzero
/// coefficient is positive.
fn witness_less(a: &[i128], b: &[i128]) -> bool {
    let a = sign_normalized(a);
    let b = sign_normalized(b);
    let l1 = |v: &[i128]| -> i128 { v.iter().map(|x| x.abs()).sum() };
    let (la, lb) = (l1(&a), l1(&b));
    if la != lb {
        return la < lb;
    }
    for i in (0..a.len()).rev() {
        if a[i] != b[i] {
            return a[i] < b[i];
        }
    }
    false
}

/// Exhaustive certified sup-norm shortest vector. LLL preconditions the
/// basis, the coefficient box `|k|_inf <= n · max|B⁻¹| · r_best` is then
/// swept completely, and ties resolve to the canonical witness.
pub fn shortest_sup_vector(
    b: &RealLatticeBasis,
    budget: &EnumerationBudget,
) -> Result<HeightResult> {
    let n = b.dim();
    let mut rows = b.rows_flat().to_vec();
    let u = lll_reduce(&mut rows, n);
    let inv = mat_inv(&rows, n).ok_or(Error::SingularBasis)?;
    let inv_max = inv.iter().fold(0.0f64, |a, &x| a.max(x.abs()));

    let sup = |k: &[i128]| -> f64 {
        let mut worst = 0.0f64;
        for j in 0..n {
            let mut v = 0.0;
            for (i, &ki) in k.iter().enumerate() {
                v += ki as f64 * rows[i * n + j];
            }
            worst = worst.max(v.abs());
        }
        worst
    };

    // Seed the bound from small combinations of the reduced rows.
    let mut best_norm = f64::INFINITY;
    {
        let mut k = vec![-1i128; n];
        loop {
            if k.iter().any(|&x| x != 0) {
                best_norm = best_norm.min(sup(&k));
            }
            let mut i = n;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                k[i] += 1;
                if k[i] <= 1 {
                    break;
                }
                k[i] = -1;
            }
            if k.iter().all(|&x| x == -1) {
                break;
            }
        }
    }
    if !best_norm.is_finite() || best_norm <= 0.0 {
        return Err(Error::SingularBasis);
    }

    let kbound = (n as f64 * inv_max * best_norm * (1.0 + 1e-12) + 1e-12).floor() as i128;
    let kbound = kbound.max(1);
    let width = (2 * kbound + 1) as u128;
    let candidates = width.checked_pow(n as u32).unwrap_or(u128::MAX);
    if candidates > budget.max_candidates {
        return Err(Error::IllConditioned {
            candidates,
            budget: budget.max_candidates,
        });
    }

    let mut best_k: Option<Vec<i128>> = None;
    let mut k = vec![-kbound; n];
    loop {
        if k.iter().any(|&x| x != 0) {
            // Half the box suffices: skip vectors whose first nonzero
            // coefficient is negative.
            let first = k.iter().find(|&&x| x != 0).copied().unwrap();
            if first > 0 {
                let norm = sup(&k);
                let tie = best_norm * (1.0 + 1e-12);
                if norm < best_norm * (1.0 - 1e-12) {
                    best_norm = norm;
                    best_k = Some(k.clone());
                } else if norm <= tie {
                    let mapped_new = map_witness(&k, &u, n);
                    match &best_k {
                        None => best_k = Some(k.clone()),
                        Some(old) => {
                            let mapped_old = map_witness(old, &u, n);
                            if witness_less(&mapped_new, &mapped_old) {
                                best_k = Some(k.clone());
                            }
                        }
                    }
                }
            }
        }
        let mut i = n;
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            k[i] += 1;
            if k[i] <= kbound {
                break;
            }
            k[i] = -kbound;
        }
        if k.iter().all(|&x| x == -kbound) {
            break;
        }
    }

    let best_k = best_k.ok_or(Error::SingularBasis)?;
    let witness = sign_normalized(&map_witness(&best_k, &u, n));
    Ok(HeightResult {
        value: 1.0 / best_norm,
        norm: best_norm,
        witness,
    })
}

fn map_witness(k_red: &[i128], u: &[i128], n: usize) -> Vec<i128> {
    (0..n)
        .map(|j| (0..n).map(|i| k_red[i] * u[i * n + j]).sum())
        .collect()
}

/// Height of the lattice: reciprocal of the shortest sup-norm.
pub fn ht(b: &RealLatticeBasis, budget: &EnumerationBudget) -> Result<f64> {
    shortest_sup_vector(b, budget).map(|r| r.value)
}

/// Exact count of nonzero lattice vectors with sup-norm at most `radius`,
/// clipped at `clip` to tame the divergent tail near the cusp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BallCount {
    pub count: u64,
    pub clipped: bool,
}

pub fn count_vectors_in_sup_ball(
    b: &RealLatticeBasis,
    radius: f64,
    clip: u64,
    budget: &EnumerationBudget,
) -> Result<BallCount> {
    assert!(radius > 0.0);
    let n = b.dim();
    let mut rows = b.rows_flat().to_vec();
    let _u = lll_reduce(&mut rows, n);
    let inv = mat_inv(&rows, n).ok_or(Error::SingularBasis)?;
    let inv_max = inv.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let kbound = (n as f64 * inv_max * radius * (1.0 + 1e-12) + 1e-12).floor() as i128;
    let kbound = kbound.max(1);
    let width = (2 * kbound + 1) as u128;
    let candidates = width.checked_pow(n as u32).unwrap_or(u128::MAX);
    if candidates > budget.max_candidates {
        return Err(Error::IllConditioned {
            candidates,
            budget: budget.max_candidates,
        });
    }
    // Vectors come in ± pairs; enumerate the half box and double.
    let mut half_count: u64 = 0;
    let mut k = vec![-kbound; n];
    loop {
        if k.iter().any(|&x| x != 0) {
            let first = k.iter().find(|&&x| x != 0).copied().unwrap();
            if first > 0 {
                let mut worst = 0.0f64;
                for j in 0..n {
                    let mut v = 0.0;
                    for (i, &ki) in k.iter().enumerate() {
                        v += ki as f64 * rows[i * n + j];
                    }
                    worst = worst.max(v.abs());
                    if worst > radius + BOUNDARY_TOL {
                        break;
                    }
                }
                if worst <= radius + BOUNDARY_TOL {
                    half_count += 1;
                    if 2 * half_count >= clip {
                        return Ok(BallCount {
                            count: clip,
                            clipped: true,
                        });
                    }
                }
            }
        }
        let mut i = n;
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            k[i] += 1;
            if k[i] <= kbound {
                break;
            }
            k[i] = -kbound;
        }
        if k.iter().all(|&x| x == -kbound) {
            break;
        }
    }
    Ok(BallCount {
        count: 2 * half_count,
        clipped: false,
    })
}

/// Mahler set membership `ht(x) <= M`, inclusive within tolerance.
pub fn in_x_leq(b: &RealLatticeBasis, m: f64, budget: &EnumerationBudget) -> Result<bool> {
    Ok(ht(b, budget)? <= m + BOUNDARY_TOL)
}

/// The dynamical ball `B_{η,N} = (I + V_{η,N}) ∩ SL_n(R)`: first-row
/// off-diagonal entries contract by `e^{-N}`, all others are bounded by
/// `η`.
#[derive(Debug, Clone, Copy)]
pub struct BowenBallSpec {
    pub dim: usize,
    pub eta: f64,
    pub n_param: f64,
}

impl BowenBallSpec {
    pub fn new(dim: usize, eta: f64, n_param: f64) -> Self {
        assert!(eta > 0.0 && n_param >= 0.0 && dim >= 2);
        BowenBallSpec { dim, eta, n_param }
    }

    /// Entry radius of the box `V_{η,N}`.
    pub fn radius(&self, i: usize, j: usize) -> f64 {
        if i == 0 && j >= 1 {
            self.eta * (-self.n_param).exp()
        } else {
            self.eta
        }
    }

    fn with_eta(&self, eta: f64) -> Self {
        BowenBallSpec {
            dim: self.dim,
            eta,
            n_param: self.n_param,
        }
    }
}

/// Largest entrywise excess of `W` over the box `V_{η,N}`; non-positive
/// means membership.
pub fn v_box_margin(w: &[f64], spec: &BowenBallSpec) -> f64 {
    let n = spec.dim;
    let mut margin = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            margin = margin.max(w[i * n + j].abs() - spec.radius(i, j));
        }
    }
    margin
}

/// Uniform sample from the box `V_{η,N}`.
pub fn sample_v_box(spec: &BowenBallSpec, rng: &mut StdRng) -> Vec<f64> {
    let n = spec.dim;
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let r = spec.radius(i, j);
            w[i * n + j] = rng.gen_range(-r..=r);
        }
    }
    w
}

/// Outcome of a Bowen-ball membership test `Γh ∈ Γg · B_{η,N}`.
#[derive(Debug, Clone)]
pub struct BowenOutcome {
    /// Candidate with the smallest box excess, flattened row-major.
    pub witness: Option<Vec<i64>>,
    /// Smallest entrywise excess over all admissible candidates.
    pub margin: f64,
    /// `margin <= tol`: the coset lies in the ball.
    pub contained: bool,
    /// `|margin| <= tol`: boundary-ambiguous, callers may exclude it.
    pub ambiguous: bool,
    /// At least two distinct `γ` certify containment; the ball wraps
    /// around the quotient at this radius.
    pub multivalued: bool,
}

fn det_int(m: &[i64], n: usize) -> i128 {
    fn rec(m: &[i128], n: usize) -> i128 {
        if n == 1 {
            return m[0];
        }
        let mut det = 0i128;
        let mut sign = 1i128;
        for c in 0..n {
            let sub: Vec<i128> = (1..n)
                .flat_map(|r| (0..n).filter(|&x| x != c).map(move |x| (r, x)))
                .map(|(r, x)| m[r * n + x])
                .collect();
            det += sign * m[c] * rec(&sub, n - 1);
            sign = -sign;
        }
        det
    }
    let wide: Vec<i128> = m.iter().map(|&x| x as i128).collect();
    rec(&wide, n)
}

/// Adjugate of an integer matrix; equals the inverse when det = 1.
fn adjugate_int(m: &[i64], n: usize) -> Vec<i128> {
    let wide: Vec<i128> = m.iter().map(|&x| x as i128).collect();
    let minor = |r: usize, c: usize| -> i128 {
        let sub: Vec<i64> = (0..n)
            .filter(|&i| i != r)
            .flat_map(|i| {
                let wide = &wide;
                (0..n).filter(move |&j| j != c).map(move |j| wide[i * n + j] as i64)
            })
            .collect();
        if n == 1 {
            1
        } else {
            det_int(&sub, n - 1)
        }
    };
    let mut adj = vec![0i128; n * n];
    for i in 0..n {
        for j in 0..n {
            let s = if (i + j) % 2 == 0 { 1 } else { -1 };
            adj[j * n + i] = s * minor(i, j);
        }
    }
    adj
}

/// Decides whether `Γh ∈ Γg · B_{η,N}` by scanning integer candidates `γ`
/// around the rounding of `h g⁻¹` and testing `g⁻¹ γ⁻¹ h ∈ I + V_{η,N}`
/// entrywise. The scan radius is clipped by the a-priori deviation bound
/// `|γ - h g⁻¹| <= 2 η n² max|h| max|g⁻¹|`, which any certifying candidate
/// must satisfy.
pub fn bowen_membership(
    g: &RealLatticeBasis,
    h: &RealLatticeBasis,
    spec: &BowenBallSpec,
    search_bound: i64,
    budget: &EnumerationBudget,
) -> Result<BowenOutcome> {
    let n = spec.dim;
    assert_eq!(g.dim(), n);
    assert_eq!(h.dim(), n);
    assert!(
        spec.eta < 0.5 / n as f64,
        "Bowen containment algebra requires eta < 1/(2n)"
    );
    let ginv = mat_inv(g.rows_flat(), n).ok_or(Error::SingularBasis)?;
    let c = mat_mul(h.rows_flat(), &ginv, n);

    let h_max = h.rows_flat().iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let ginv_max = ginv.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let gamma_dev = 2.0 * spec.eta * (n * n) as f64 * h_max * ginv_max;
    let eff = search_bound.min((gamma_dev + 0.5 + 1e-9).ceil() as i64);

    let cells = (2 * eff + 1) as u128;
    let candidates = cells.checked_pow((n * n) as u32).unwrap_or(u128::MAX);
    if candidates > budget.max_candidates {
        return Err(Error::SearchBudgetExceeded);
    }

    let rounded: Vec<i64> = c.iter().map(|&x| x.round() as i64).collect();
    let mut best_margin = f64::INFINITY;
    let mut best: Option<Vec<i64>> = None;
    let mut contained_count = 0u32;

    let mut offset = vec![-eff; n * n];
    loop {
        let gamma: Vec<i64> = rounded
            .iter()
            .zip(&offset)
            .map(|(&r, &o)| r + o)
            .collect();
        if det_int(&gamma, n) == 1 {
            let gamma_inv = adjugate_int(&gamma, n);
            let gamma_inv_f: Vec<f64> = gamma_inv.iter().map(|&x| x as f64).collect();
            let m = mat_mul(&mat_mul(&ginv, &gamma_inv_f, n), h.rows_flat(), n);
            let mut w = m;
            for i in 0..n {
                w[i * n + i] -= 1.0;
            }
            let margin = v_box_margin(&w, spec);
            if margin <= BOUNDARY_TOL {
                contained_count += 1;
            }
            if margin < best_margin {
                best_margin = margin;
                best = Some(gamma);
            }
        }
        let mut i = n * n;
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            offset[i] += 1;
            if offset[i] <= eff {
                break;
            }
            offset[i] = -eff;
        }
        if offset.iter().all(|&x| x == -eff) {
            break;
        }
    }

    Ok(BowenOutcome {
        witness: best,
        margin: best_margin,
        contained: best_margin <= BOUNDARY_TOL,
        ambiguous: best_margin.abs() <= BOUNDARY_TOL,
        multivalued: contained_count >= 2,
    })
}

/// Thin wrapper returning the witness on containment.
pub fn bowen_contains(
    g: &RealLatticeBasis,
    h: &RealLatticeBasis,
    spec: &BowenBallSpec,
    search_bound: i64,
    budget: &EnumerationBudget,
) -> Result<Option<Vec<i64>>> {
    let out = bowen_membership(g, h, spec, search_bound, budget)?;
    Ok(if out.contained { out.witness } else { None })
}

/// Count of family members whose flowed point lands in the Bowen ball
/// around `x`: exact sweep of `Λ_q` at time `a_q(t)`, `t` in the unit
/// fundamental region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeparationReport {
    pub count: u64,
    pub ambiguous: u64,
}

pub fn separation_count(
    q: u64,
    t_unit: &TimeVector,
    x: &RealLatticeBasis,
    spec: &BowenBallSpec,
    search_bound: i64,
    budget: &EnumerationBudget,
) -> Result<SeparationReport> {
    let pts: Vec<_> = enumerate_family(q, spec.dim)?.collect();
    let outcomes: Vec<Result<(bool, bool)>> = pts
        .par_iter()
        .map(|pt| {
            let h = diag_apply_q(&u_matrix(pt), t_unit, q);
            let out = bowen_membership(x, &h, spec, search_bound, budget)?;
            Ok((out.contained, out.ambiguous))
        })
        .collect();
    let mut count = 0;
    let mut ambiguous = 0;
    for o in outcomes {
        let (c, a) = o?;
        if c {
            count += 1;
        }
        if a {
            ambiguous += 1;
        }
    }
    Ok(SeparationReport { count, ambiguous })
}

/// Checks the lattice `Z^d (I + a(t) g a(-t))` keeps height at most 2
/// whenever `|g|_max < 1/(2d)`. Time coordinates beyond ±30 are rejected;
/// the certified enumeration bound degrades exponentially in the spread.
pub fn conjugated_height_check(
    g: &[f64],
    t: &TimeVector,
    budget: &EnumerationBudget,
) -> Result<bool> {
    let d = t.dim();
    assert_eq!(g.len(), d * d);
    let gmax = g.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    assert!(gmax < 0.5 / d as f64, "need |g|_max < 1/(2d)");
    if t.coords().iter().any(|&x| x.abs() > 30.0) {
        return Err(Error::IllConditioned {
            candidates: u128::MAX,
            budget: budget.max_candidates,
        });
    }
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let conj = (t.get(i) - t.get(j)).exp() * g[i * d + j];
            m[i * d + j] = conj + if i == j { 1.0 } else { 0.0 };
        }
    }
    let basis = RealLatticeBasis::from_rows(
        &(0..d).map(|i| m[i * d..(i + 1) * d].to_vec()).collect::<Vec<_>>(),
    )?;
    Ok(ht(&basis, budget)? <= 2.0 + BOUNDARY_TOL)
}

/// Report of the sampled Appendix ball-algebra checks.
#[derive(Debug, Clone, PartialEq)]
pub struct BallAlgebraReport {
    pub samples: u32,
    /// `(I+W)⁻¹ - (I - W)` escaped `V_{η²n,N}`.
    pub inverse_series_violations: u32,
    /// `(I+W)⁻¹` escaped `I + V_{1.5η,N}`.
    pub inverse_ball_violations: u32,
    /// `(I+W₁)⁻¹(I+W₂)` escaped `I + V_{4η,N}`.
    pub change_center_violations: u32,
    /// Additive cover of `V_{η,N}` by translates of `V_{η/(4R),N}`
    /// (dimension 2 only): cell count, the `(8R)^{n²}` bound, and sampled
    /// multiplicative containment failures.
    pub cover: Option<CoverReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverReport {
    pub count: u64,
    pub bound: f64,
    pub violations: u32,
    pub samples: u32,
}

pub fn ball_algebra_checks(
    spec: &BowenBallSpec,
    samples: u32,
    seed: u64,
    cover_r: Option<f64>,
) -> BallAlgebraReport {
    let n = spec.dim;
    assert!(spec.eta < 0.5 / n as f64);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut inverse_series_violations = 0;
    let mut inverse_ball_violations = 0;
    let mut change_center_violations = 0;

    for _ in 0..samples {
        let w = sample_v_box(spec, &mut rng);
        let mut iw = w.clone();
        for i in 0..n {
            iw[i * n + i] += 1.0;
        }
        let inv = mat_inv(&iw, n).expect("I + W is invertible for eta < 1/(2n)");

        // (I+W)⁻¹ ∈ I - W + V_{η²n,N}
        let mut tail = inv.clone();
        for i in 0..n {
            for j in 0..n {
                tail[i * n + j] -= if i == j { 1.0 } else { 0.0 };
                tail[i * n + j] += w[i * n + j];
            }
        }
        let series_spec = spec.with_eta(spec.eta * spec.eta * n as f64);
        if v_box_margin(&tail, &series_spec) > BOUNDARY_TOL {
            inverse_series_violations += 1;
        }

        // (I+W)⁻¹ ∈ I + V_{1.5η,N}
        let mut dev = inv.clone();
        for i in 0..n {
            dev[i * n + i] -= 1.0;
        }
        if v_box_margin(&dev, &spec.with_eta(1.5 * spec.eta)) > BOUNDARY_TOL {
            inverse_ball_violations += 1;
        }

        // Change of center: (I+W₁)⁻¹ (I+W₂) ∈ I + V_{4η,N}
        let w2 = sample_v_box(spec, &mut rng);
        let mut iw2 = w2.clone();
        for i in 0..n {
            iw2[i * n + i] += 1.0;
        }
        let mut prod = mat_mul(&inv, &iw2, n);
        for i in 0..n {
            prod[i * n + i] -= 1.0;
        }
        if v_box_margin(&prod, &spec.with_eta(4.0 * spec.eta)) > BOUNDARY_TOL {
            change_center_violations += 1;
        }
    }

    let cover = cover_r.map(|r| cover_check(spec, samples, &mut rng, r));

    BallAlgebraReport {
        samples,
        inverse_series_violations,
        inverse_ball_violations,
        change_center_violations,
        cover,
    }
}

/// Additive cover of `V_{η,N}` at n = 2 by per-entry interval splitting
/// into `4⌈R⌉` cells, checked multiplicatively on sampled SL₂ elements.
fn cover_check(spec: &BowenBallSpec, samples: u32, rng: &mut StdRng, r: f64) -> CoverReport {
    let n = spec.dim;
    assert_eq!(n, 2, "the cover construction is exercised at n = 2");
    assert!(r > 1.0 && spec.eta < 1.0 / (6.0 * n as f64 * r));
    let cells_per_entry = (4.0 * r.ceil()) as u64;
    let count = cells_per_entry.pow((n * n) as u32);
    let bound = (8.0 * r).powi((n * n) as i32);

    let mut violations = 0;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < samples && attempts < samples * 100 {
        attempts += 1;
        // Sample W in the box, then solve the (0,0) entry so that
        // det(I + W) = 1 exactly; reject if it leaves the box.
        let mut w = sample_v_box(spec, rng);
        let w01 = w[1];
        let w10 = w[2];
        let w11 = w[3];
        let w00 = (w01 * w10 - w11) / (1.0 + w11);
        if w00.abs() > spec.radius(0, 0) {
            continue;
        }
        w[0] = w00;
        accepted += 1;

        // Locate the covering cell and take its center as γ.
        let mut center = vec![0.0; 4];
        for i in 0..2 {
            for j in 0..2 {
                let c = spec.radius(i, j);
                let width = 2.0 * c / cells_per_entry as f64;
                let idx = (((w[i * 2 + j] + c) / width).floor() as i64)
                    .clamp(0, cells_per_entry as i64 - 1);
                center[i * 2 + j] = -c + (idx as f64 + 0.5) * width;
            }
        }
        let mut gamma = center.clone();
        gamma[0] += 1.0;
        gamma[3] += 1.0;
        let gamma_inv = mat_inv(&gamma, 2).expect("cell center is near identity");
        let mut g = w.clone();
        g[0] += 1.0;
        g[3] += 1.0;
        let mut dev = mat_mul(&gamma_inv, &g, 2);
        dev[0] -= 1.0;
        dev[3] -= 1.0;
        if v_box_margin(&dev, &spec.with_eta(spec.eta / r)) > BOUNDARY_TOL {
            violations += 1;
        }
    }

    CoverReport {
        count,
        bound,
        violations,
        samples: accepted,
    }
}

/// An `(M, η)`-partition: atom 0 is the set above height `M`, every other
/// atom is the Voronoi cell of a center, contained in `center · B_η`.
/// Points below the cutoff that no center covers at radius `η` also fall
/// into atom 0 and are reported by the audit as overflow.
#[derive(Debug, Clone)]
pub struct PartitionSpec {
    pub m_cutoff: f64,
    pub eta: f64,
    pub centers: Vec<RealLatticeBasis>,
    pub dim: usize,
    pub search_bound: i64,
}

/// Default injectivity threshold for partition radii at desk scale
/// (M = 10, n <= 3).
pub const DEFAULT_ETA0: f64 = 1e-2;

impl PartitionSpec {
    pub fn atom_count(&self) -> usize {
        self.centers.len() + 1
    }

    /// Atom index of a point: 0 for the unbounded atom, `i + 1` for the
    /// nearest covering center `i` (smallest box excess).
    pub fn assign(&self, x: &RealLatticeBasis, budget: &EnumerationBudget) -> Result<usize> {
        if ht(x, budget)? > self.m_cutoff + BOUNDARY_TOL {
            return Ok(0);
        }
        let spec = BowenBallSpec::new(self.dim, self.eta, 0.0);
        let mut best: Option<(f64, usize)> = None;
        for (i, c) in self.centers.iter().enumerate() {
            let out = bowen_membership(c, x, &spec, self.search_bound, budget)?;
            if out.contained && best.map_or(true, |(m, _)| out.margin < m) {
                best = Some((out.margin, i));
            }
        }
        Ok(best.map_or(0, |(_, i)| i + 1))
    }
}

/// Greedy cover of the sample cloud restricted to heights at most `M` by
/// balls of radius `eta / 4`; centers are the first uncovered samples.
pub fn build_partition(
    m_cutoff: f64,
    eta: f64,
    samples: &[RealLatticeBasis],
    eta0: f64,
    search_bound: i64,
    budget: &EnumerationBudget,
) -> Result<PartitionSpec> {
    assert!(eta <= eta0, "partition radius must stay below eta0");
    let dim = samples.first().map_or(2, RealLatticeBasis::dim);
    let quarter = BowenBallSpec::new(dim, eta / 4.0, 0.0);
    let mut centers: Vec<RealLatticeBasis> = Vec::new();
    for s in samples {
        if ht(s, budget)? > m_cutoff + BOUNDARY_TOL {
            continue;
        }
        let mut covered = false;
        for c in &centers {
            if bowen_membership(c, s, &quarter, search_bound, budget)?.contained {
                covered = true;
                break;
            }
        }
        if !covered {
            centers.push(s.clone());
        }
    }
    let spec = PartitionSpec {
        m_cutoff,
        eta,
        centers,
        dim,
        search_bound,
    };
    audit_centers(&spec, budget)?;
    Ok(spec)
}

/// Injectivity audit: at radius `eta` no center pair may admit a
/// multivalued membership certificate, and no center may sit inside
/// another's quarter ball.
pub fn audit_centers(spec: &PartitionSpec, budget: &EnumerationBudget) -> Result<()> {
    let ball = BowenBallSpec::new(spec.dim, spec.eta, 0.0);
    let quarter = BowenBallSpec::new(spec.dim, spec.eta / 4.0, 0.0);
    for i in 0..spec.centers.len() {
        for j in 0..spec.centers.len() {
            if i == j {
                continue;
            }
            let out = bowen_membership(
                &spec.centers[i],
                &spec.centers[j],
                &ball,
                spec.search_bound,
                budget,
            )?;
            if out.multivalued {
                return Err(Error::InjectivityRisk { first: i, second: j });
            }
            let quarter_out = bowen_membership(
                &spec.centers[i],
                &spec.centers[j],
                &quarter,
                spec.search_bound,
                budget,
            )?;
            if quarter_out.contained {
                return Err(Error::InjectivityRisk { first: i, second: j });
            }
        }
    }
    Ok(())
}

/// Audits that every assigned cloud point lies in its center's `η` ball.
pub fn audit_partition(
    spec: &PartitionSpec,
    cloud: &[RealLatticeBasis],
    budget: &EnumerationBudget,
) -> Result<PartitionAudit> {
    let ball = BowenBallSpec::new(spec.dim, spec.eta, 0.0);
    let mut atom_sizes = vec![0usize; spec.atom_count()];
    let mut overflow = 0usize;
    let mut max_margin = f64::NEG_INFINITY;
    for x in cloud {
        let atom = spec.assign(x, budget)?;
        atom_sizes[atom] += 1;
        if atom == 0 {
            if ht(x, budget)? <= spec.m_cutoff + BOUNDARY_TOL {
                overflow += 1;
            }
            continue;
        }
        let out = bowen_membership(&spec.centers[atom - 1], x, &ball, spec.search_bound, budget)?;
        assert!(out.contained, "assigned atom must contain its point");
        max_margin = max_margin.max(out.margin);
    }
    Ok(PartitionAudit {
        atom_sizes,
        overflow,
        max_margin,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionAudit {
    pub atom_sizes: Vec<usize>,
    /// Bounded-height points that no center covers; they land in atom 0.
    pub overflow: usize,
    pub max_margin: f64,
}
