//! Exact integer lattice algebra.
//!
//! Finite-index sublattices of `Z^n` are stored through a canonical
//! Hermite normal form basis. The convention, fixed once for the whole
//! crate, is row-style and lower-triangular: rows are basis vectors, the
//! pivot of column `j` sits on the diagonal and is positive, and entries
//! below a pivot are reduced modulo it. Two constructions of the same
//! sublattice therefore produce bit-identical bases.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A finite-index sublattice of `Z^n`, held in canonical HNF.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntegerLattice {
    dim: usize,
    basis: Vec<Vec<BigInt>>,
    index: BigInt,
}

/// Divisor chain `(q_1, ..., q_n)` of the quotient `Z^n / L`, ascending so
/// that `q_i | q_{i+1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeVector {
    divisors: Vec<BigInt>,
}

impl TypeVector {
    pub fn divisors(&self) -> &[BigInt] {
        &self.divisors
    }

    /// Product of the divisors; equals the index of the lattice.
    pub fn product(&self) -> BigInt {
        self.divisors.iter().product()
    }

    pub fn from_u64(divisors: &[u64]) -> Self {
        TypeVector {
            divisors: divisors.iter().map(|&d| BigInt::from(d)).collect(),
        }
    }
}

/// The two invariants of a divergent orbit: covolume of its axis-primitive
/// representative, and the type of that representative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitInvariants {
    pub discriminant: BigInt,
    pub type_vector: TypeVector,
}

fn big_rows_from_i64(rows: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    rows.iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}

/// Upper-triangular row HNF of an `m x n` generator stack with full column
/// rank: pivots positive, entries above each pivot reduced into `[0, pivot)`.
fn upper_hnf(mut a: Vec<Vec<BigInt>>, n: usize) -> Result<Vec<Vec<BigInt>>> {
    let m = a.len();
    if m < n {
        return Err(Error::SingularBasis);
    }
    for c in 0..n {
        let r = c;
        loop {
            let mut best: Option<usize> = None;
            for j in r..m {
                if !a[j][c].is_zero()
                    && best.map_or(true, |b| a[j][c].abs() < a[b][c].abs())
                {
                    best = Some(j);
                }
            }
            let Some(b) = best else {
                return Err(Error::SingularBasis);
            };
            a.swap(r, b);
            let mut done = true;
            for j in r + 1..m {
                if a[j][c].is_zero() {
                    continue;
                }
                let t = &a[j][c] / &a[r][c];
                if !t.is_zero() {
                    for k in 0..n {
                        let s = &a[r][k] * &t;
                        a[j][k] -= s;
                    }
                }
                if !a[j][c].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if a[r][c].is_negative() {
            for k in 0..n {
                let v = -a[r][k].clone();
                a[r][k] = v;
            }
        }
        for j in 0..r {
            let q = a[j][c].div_floor(&a[r][c]);
            if !q.is_zero() {
                for k in 0..n {
                    let s = &a[r][k] * &q;
                    a[j][k] -= s;
                }
            }
        }
    }
    a.truncate(n);
    Ok(a)
}

/// Lower-triangular HNF (the crate convention) via coordinate reversal of
/// the upper-triangular form.
fn lower_hnf(rows: Vec<Vec<BigInt>>, n: usize) -> Result<Vec<Vec<BigInt>>> {
    let reversed: Vec<Vec<BigInt>> = rows
        .into_iter()
        .map(|mut r| {
            r.reverse();
            r
        })
        .collect();
    let mut h = upper_hnf(reversed, n)?;
    for r in h.iter_mut() {
        r.reverse();
    }
    h.reverse();
    Ok(h)
}

impl IntegerLattice {
    /// Canonical HNF lattice spanned by the given generator rows (any
    /// number `m >= n` of them, as long as they span a finite-index
    /// sublattice).
    pub fn from_rows(rows: &[Vec<BigInt>]) -> Result<Self> {
        let n = rows.first().map_or(0, |r| r.len());
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::SingularBasis);
        }
        let basis = lower_hnf(rows.to_vec(), n)?;
        let index: BigInt = (0..n).map(|i| basis[i][i].clone()).product();
        debug_assert!(index.is_positive());
        Ok(IntegerLattice {
            dim: n,
            basis,
            index,
        })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::from_rows(&big_rows_from_i64(rows))
    }

    pub fn standard(n: usize) -> Self {
        let basis: Vec<Vec<BigInt>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                    .collect()
            })
            .collect();
        IntegerLattice {
            dim: n,
            basis,
            index: BigInt::one(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Canonical basis rows (lower-triangular HNF).
    pub fn basis(&self) -> &[Vec<BigInt>] {
        &self.basis
    }

    /// Index of the lattice in `Z^n`, equal to `|det|` of the basis.
    pub fn index(&self) -> &BigInt {
        &self.index
    }

    /// Exact membership test by back-substitution on the triangular basis.
    pub fn contains(&self, v: &[BigInt]) -> bool {
        assert_eq!(v.len(), self.dim);
        let mut rem = v.to_vec();
        for c in (0..self.dim).rev() {
            let (q, r) = rem[c].div_rem(&self.basis[c][c]);
            if !r.is_zero() {
                return false;
            }
            if !q.is_zero() {
                for k in 0..=c {
                    let s = &self.basis[c][k] * &q;
                    rem[k] -= s;
                }
            }
        }
        rem.iter().all(Zero::is_zero)
    }

    /// Smith normal form divisors of the quotient `Z^n / L`, ascending.
    pub fn smith_type(&self) -> TypeVector {
        TypeVector {
            divisors: snf_divisors(self.basis.clone()),
        }
    }

    /// Greatest common divisor of the `i`-th coordinates of the basis rows;
    /// generates the projection of the lattice to axis `i`.
    pub fn projection_gcd(&self, i: usize) -> BigInt {
        let mut g = BigInt::zero();
        for r in &self.basis {
            g = g.gcd(&r[i]);
        }
        g
    }

    /// Unique lattice in the diagonal orbit whose projection to every
    /// coordinate is all of `Z`: divide column `i` by the projection gcd.
    pub fn axis_primitive_rep(&self) -> Self {
        let gcds: Vec<BigInt> = (0..self.dim).map(|i| self.projection_gcd(i)).collect();
        if gcds.iter().all(One::is_one) {
            return self.clone();
        }
        let rows: Vec<Vec<BigInt>> = self
            .basis
            .iter()
            .map(|r| (0..self.dim).map(|i| &r[i] / &gcds[i]).collect())
            .collect();
        Self::from_rows(&rows).expect("column division preserves rank")
    }

    /// Discriminant and type of the divergent orbit through this lattice.
    pub fn orbit_invariants(&self) -> OrbitInvariants {
        let rep = self.axis_primitive_rep();
        OrbitInvariants {
            discriminant: rep.index.clone(),
            type_vector: rep.smith_type(),
        }
    }

    /// Covolume of `R e_i / (L ∩ R e_i)`: the length of the shortest
    /// nonzero lattice vector on axis `i`, always a positive integer for a
    /// finite-index integral lattice.
    pub fn covol_axis(&self, i: usize) -> BigInt {
        assert!(i < self.dim);
        if i == 0 {
            return self.basis[0][0].clone();
        }
        let rows: Vec<Vec<BigInt>> = self
            .basis
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.swap(0, i);
                r
            })
            .collect();
        let h = lower_hnf(rows, self.dim).expect("full rank is preserved by column swap");
        h[0][0].clone()
    }

    /// Arithmetic mean of the logarithms of the axis covolumes.
    pub fn tau(&self) -> f64 {
        let n = self.dim as f64;
        (0..self.dim)
            .map(|i| {
                self.covol_axis(i)
                    .to_f64()
                    .expect("covolume fits in f64 at desk scale")
                    .ln()
            })
            .sum::<f64>()
            / n
    }

    /// Lower bounds `-ln covol(L, i)` of the truncation region `A_L`.
    pub fn axis_bounds(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                -self
                    .covol_axis(i)
                    .to_f64()
                    .expect("covolume fits in f64 at desk scale")
                    .ln()
            })
            .collect()
    }
}

/// Exact axis covolume of a rational lattice: clear denominators, compute
/// the integral covolume, and scale back.
pub fn covol_axis_rational(rows: &[Vec<BigRational>], i: usize) -> Result<BigRational> {
    let n = rows.len();
    let mut denom_lcm = BigInt::one();
    for r in rows {
        for x in r {
            denom_lcm = denom_lcm.lcm(x.denom());
        }
    }
    let scaled: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| {
                    let y = x * BigRational::from_integer(denom_lcm.clone());
                    debug_assert!(y.is_integer());
                    y.to_integer()
                })
                .collect()
        })
        .collect();
    let lat = IntegerLattice::from_rows(&scaled)?;
    let _ = n;
    Ok(BigRational::new(lat.covol_axis(i), denom_lcm))
}

/// Smith normal form divisors (ascending `d_1 | d_2 | ... | d_n`) of a
/// square nonsingular integer matrix.
fn snf_divisors(mut a: Vec<Vec<BigInt>>) -> Vec<BigInt> {
    let n = a.len();
    for t in 0..n {
        'outer: loop {
            // Move a minimal nonzero entry of the trailing block to (t, t).
            let mut best: Option<(usize, usize)> = None;
            for i in t..n {
                for j in t..n {
                    if !a[i][j].is_zero()
                        && best.map_or(true, |(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let (bi, bj) = best.expect("nonsingular matrix has nonzero trailing block");
            a.swap(t, bi);
            for row in a.iter_mut() {
                row.swap(t, bj);
            }

            // Reduce column t below the pivot.
            for i in t + 1..n {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = &a[i][t] / &a[t][t];
                if !q.is_zero() {
                    for k in t..n {
                        let s = &a[t][k] * &q;
                        a[i][k] -= s;
                    }
                }
                if !a[i][t].is_zero() {
                    continue 'outer;
                }
            }
            // Reduce row t to the right of the pivot.
            for j in t + 1..n {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = &a[t][j] / &a[t][t];
                if !q.is_zero() {
                    for i in t..n {
                        let s = &a[i][t] * &q;
                        a[i][j] -= s;
                    }
                }
                if !a[t][j].is_zero() {
                    continue 'outer;
                }
            }
            // Divisibility sweep: the pivot must divide the trailing block.
            for i in t + 1..n {
                for j in t + 1..n {
                    if !(&a[i][j] % &a[t][t]).is_zero() {
                        for k in t..n {
                            let s = a[i][k].clone();
                            a[t][k] += s;
                        }
                        continue 'outer;
                    }
                }
            }
            break;
        }
        if a[t][t].is_negative() {
            for k in t..n {
                let v = -a[t][k].clone();
                a[t][k] = v;
            }
        }
    }
    (0..n).map(|i| a[i][i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn lat(rows: &[Vec<i64>]) -> IntegerLattice {
        IntegerLattice::from_i64_rows(rows).unwrap()
    }

    #[test]
    fn hnf_identity() {
        let l = lat(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        assert_eq!(l, IntegerLattice::standard(3));
        assert_eq!(l.index(), &BigInt::one());
    }

    #[test]
    fn hnf_singular_rejected() {
        assert_eq!(
            IntegerLattice::from_i64_rows(&[vec![1, 2], vec![2, 4]]),
            Err(Error::SingularBasis)
        );
    }

    #[test]
    fn hnf_same_lattice_same_basis() {
        // Oracle: brute-force cross membership of each generator.
        let a = lat(&[vec![1, 1], vec![0, 2]]);
        let b = lat(&[vec![1, -1], vec![2, 0]]);
        for g in [[1i64, 1], [0, 2]] {
            assert!(b.contains(&[BigInt::from(g[0]), BigInt::from(g[1])]));
        }
        for g in [[1i64, -1], [2, 0]] {
            assert!(a.contains(&[BigInt::from(g[0]), BigInt::from(g[1])]));
        }
        assert_eq!(a, b);
        assert_eq!(a.index(), &BigInt::from(2));
    }

    #[test]
    fn hnf_index_two() {
        let l = lat(&[vec![2, 0], vec![1, 1]]);
        assert_eq!(l.index(), &BigInt::from(2));
    }

    #[test]
    fn hnf_lower_triangular_shape() {
        let l = lat(&[vec![3, 5, 7], vec![2, 9, 4], vec![8, 1, 6]]);
        let b = l.basis();
        for i in 0..3 {
            assert!(b[i][i].is_positive());
            for j in i + 1..3 {
                assert!(b[i][j].is_zero(), "entry above diagonal must vanish");
            }
            for j in 0..i {
                assert!(!b[i][j].is_negative() && b[i][j] < b[j][j]);
            }
        }
    }

    fn random_basis(rng: &mut StdRng, n: usize) -> Vec<Vec<i64>> {
        loop {
            let rows: Vec<Vec<i64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(-20..=20)).collect())
                .collect();
            if IntegerLattice::from_i64_rows(&rows).is_ok() {
                return rows;
            }
        }
    }

    fn random_unimodular(rng: &mut StdRng, n: usize) -> Vec<Vec<i64>> {
        // Product of random shears and swaps.
        let mut u: Vec<Vec<i64>> = (0..n)
            .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
            .collect();
        for _ in 0..12 {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n);
            while j == i {
                j = rng.gen_range(0..n);
            }
            let c: i64 = rng.gen_range(-3..=3);
            for k in 0..n {
                u[i][k] += c * u[j][k];
            }
            if rng.gen_bool(0.3) {
                u.swap(i, j);
            }
        }
        u
    }

    fn mat_mul_i64(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
        let n = a.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn hnf_idempotent_and_unimodular_invariant() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(2..=4);
            let rows = random_basis(&mut rng, n);
            let l = lat(&rows);
            let again = IntegerLattice::from_rows(l.basis()).unwrap();
            assert_eq!(l, again, "HNF must be idempotent");
            let u = random_unimodular(&mut rng, n);
            let mixed = mat_mul_i64(&u, &rows);
            assert_eq!(l, lat(&mixed), "HNF must not see unimodular row ops");
        }
    }

    #[test]
    fn smith_type_examples() {
        assert_eq!(
            IntegerLattice::standard(3).smith_type(),
            TypeVector::from_u64(&[1, 1, 1])
        );
        // Oracle for {(2,0),(1,1)}: the quotient has two cosets, so it is
        // the cyclic group of order 2.
        let l = lat(&[vec![2, 0], vec![1, 1]]);
        let mut cosets = std::collections::HashSet::new();
        for x in 0..2i64 {
            for y in 0..2i64 {
                // Reduce (x, y) modulo L by brute force over small shifts.
                let mut found = None;
                'search: for cx in 0..2i64 {
                    for cy in 0..2i64 {
                        let d = [BigInt::from(x - cx), BigInt::from(y - cy)];
                        if l.contains(&d) {
                            found = Some((cx, cy));
                            break 'search;
                        }
                    }
                }
                cosets.insert(found.unwrap());
            }
        }
        assert_eq!(cosets.len(), 2);
        assert_eq!(l.smith_type(), TypeVector::from_u64(&[1, 2]));
    }

    #[test]
    fn smith_type_family_member() {
        // Axis-primitive lattice of the orbit through u_{p̄/q}, n = 3, q = 5.
        let l = lat(&[vec![1, 2, 3], vec![0, 5, 0], vec![0, 0, 5]]);
        assert_eq!(l.smith_type(), TypeVector::from_u64(&[1, 5, 5]));
        assert_eq!(l.smith_type().product(), *l.index());
    }

    #[test]
    fn smith_product_equals_index_random() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..60 {
            let n = rng.gen_range(2..=4);
            let l = lat(&random_basis(&mut rng, n));
            assert_eq!(l.smith_type().product(), *l.index());
        }
    }

    #[test]
    fn axis_primitive_examples() {
        let l = lat(&[vec![2, 0], vec![0, 2]]);
        assert_eq!(l.axis_primitive_rep(), IntegerLattice::standard(2));

        let l = lat(&[vec![2, 0], vec![1, 1]]);
        assert_eq!(l.axis_primitive_rep(), l, "already axis primitive");

        // q Z^n + Z (1, p1, p2) with gcd(p_i, q) = 1 stays fixed.
        let l = lat(&[vec![1, 2, 3], vec![0, 5, 0], vec![0, 0, 5]]);
        assert_eq!(l.axis_primitive_rep(), l);
    }

    #[test]
    fn axis_primitive_idempotent_random() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..60 {
            let n = rng.gen_range(2..=4);
            let l = lat(&random_basis(&mut rng, n));
            let rep = l.axis_primitive_rep();
            assert_eq!(rep.axis_primitive_rep(), rep);
            for i in 0..n {
                assert!(rep.projection_gcd(i).is_one());
            }
        }
    }

    #[test]
    fn orbit_invariants_examples() {
        let inv = IntegerLattice::standard(4).orbit_invariants();
        assert_eq!(inv.discriminant, BigInt::one());
        assert_eq!(inv.type_vector, TypeVector::from_u64(&[1, 1, 1, 1]));

        // n = 3, q = 5 family member, cleared of denominators.
        let l = lat(&[vec![5, 2, 3], vec![0, 5, 0], vec![0, 0, 5]]);
        let inv = l.orbit_invariants();
        assert_eq!(inv.discriminant, BigInt::from(25));
        assert_eq!(inv.type_vector, TypeVector::from_u64(&[1, 5, 5]));

        let inv = lat(&[vec![2, 0], vec![1, 1]]).orbit_invariants();
        assert_eq!(inv.discriminant, BigInt::from(2));
        assert_eq!(inv.type_vector, TypeVector::from_u64(&[1, 2]));
    }

    #[test]
    fn covol_axis_examples() {
        assert_eq!(IntegerLattice::standard(2).covol_axis(0), BigInt::one());

        // Oracle for {(2,0),(1,1)}: solve k·B ∈ R·e_i over integers by brute
        // force. Both axes have shortest vector of length 2: the lattice is
        // {(x, y) : x + y even}.
        let l = lat(&[vec![2, 0], vec![1, 1]]);
        let mut best = [i64::MAX; 2];
        for a in -8i64..=8 {
            for b in -8i64..=8 {
                let v = [2 * a + b, b];
                for i in 0..2 {
                    if v[i] != 0 && v[1 - i] == 0 {
                        best[i] = best[i].min(v[i].abs());
                    }
                }
            }
        }
        assert_eq!(best, [2, 2]);
        assert_eq!(l.covol_axis(0), BigInt::from(2));
        assert_eq!(l.covol_axis(1), BigInt::from(2));

        // Z² u_{1/2} cleared of denominators is spanned by (2, 1), (0, 2);
        // its covolumes are twice those of Z² u_{1/2}, namely (2·2, 2·1).
        let l = lat(&[vec![2, 1], vec![0, 2]]);
        assert_eq!(l.covol_axis(0), BigInt::from(4));
        assert_eq!(l.covol_axis(1), BigInt::from(2));
    }

    #[test]
    fn covol_axis_rational_u_half() {
        // Z² u_{1/2}: vectors (m, m/2 + k); on the first axis m must be even.
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let rows = vec![
            vec![BigRational::one(), half],
            vec![BigRational::zero(), BigRational::one()],
        ];
        assert_eq!(
            covol_axis_rational(&rows, 0).unwrap(),
            BigRational::from_integer(BigInt::from(2))
        );
        assert_eq!(covol_axis_rational(&rows, 1).unwrap(), BigRational::one());
    }

    #[test]
    fn tau_examples() {
        assert_eq!(IntegerLattice::standard(3).tau(), 0.0);
        let l = lat(&[vec![2, 1], vec![0, 2]]);
        // covols (4, 2): tau = (ln 4 + ln 2) / 2; subtracting the homothety
        // log 2 gives the Z² u_{1/2} value (ln 2)/2.
        let expected = (4.0f64.ln() + 2.0f64.ln()) / 2.0;
        assert!((l.tau() - expected).abs() < 1e-15);
        assert!((l.tau() - 2.0f64.ln() - 0.5 * 2.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn axis_bounds_examples() {
        assert_eq!(IntegerLattice::standard(3).axis_bounds(), vec![0.0; 3]);
        let l = lat(&[vec![2, 0], vec![1, 1]]);
        let b = l.axis_bounds();
        assert_eq!(b, vec![-2.0f64.ln(), -2.0f64.ln()]);
    }
}
