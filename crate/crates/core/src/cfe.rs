//! Dimension-two continued-fraction correspondence: the Gauss map on
//! rationals, finite expansions, empirical orbit measures, Gauss–Kuzmin
//! comparison and Zaremba censuses. Exact rational arithmetic end to end;
//! floats only appear when a cumulative distribution gets evaluated.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith;
use crate::error::{Error, Result};

/// Nonnegative rational in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational {
    num: BigUint,
    den: BigUint,
}

impl Rational {
    pub fn new(num: BigUint, den: BigUint) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::OutOfRange);
        }
        let g = num.gcd(&den);
        Ok(Rational {
            num: &num / &g,
            den: &den / &g,
        })
    }

    pub fn from_u64(num: u64, den: u64) -> Result<Self> {
        Self::new(BigUint::from(num), BigUint::from(den))
    }

    pub fn zero() -> Self {
        Rational {
            num: BigUint::zero(),
            den: BigUint::one(),
        }
    }

    pub fn num(&self) -> &BigUint {
        &self.num
    }

    pub fn den(&self) -> &BigUint {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        self.num.to_f64().unwrap() / self.den.to_f64().unwrap()
    }

    fn in_unit_interval_strict(&self) -> bool {
        !self.num.is_zero() && self.num < self.den
    }
}

/// One Gauss step `T(p/q) = (q mod p) / p`, exact.
pub fn gauss_map(x: &Rational) -> Result<Rational> {
    if x.is_zero() {
        return Err(Error::ZeroInput);
    }
    if x.num > x.den {
        return Err(Error::OutOfRange);
    }
    let rem = &x.den % &x.num;
    Rational::new(rem, x.num.clone())
}

/// Finite continued fraction expansion `[0; x_1, ..., x_len]` with the
/// canonical convention: the last quotient is at least 2 unless the
/// expansion has length one with denominator 2... the Euclidean algorithm
/// delivers this form directly for reduced p/q in (0, 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfe {
    pub quotients: Vec<u64>,
}

impl Cfe {
    pub fn len(&self) -> usize {
        self.quotients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotients.is_empty()
    }

    /// Exact reconstruction of the value `[0; x_1, ..., x_len]`.
    pub fn reconstruct(&self) -> Rational {
        let mut num = BigUint::one();
        let mut den = BigUint::from(*self.quotients.last().expect("nonempty expansion"));
        for &a in self.quotients.iter().rev().skip(1) {
            // 1/(a + num/den) = den / (a den + num)
            let new_den = BigUint::from(a) * &den + &num;
            num = den;
            den = new_den;
        }
        Rational::new(num, den).expect("denominator is positive")
    }
}

/// Euclidean-algorithm expansion of a reduced rational in (0, 1).
pub fn cfe_of_rational(x: &Rational) -> Result<Cfe> {
    if !x.in_unit_interval_strict() {
        return Err(Error::OutOfRange);
    }
    let mut quotients = Vec::new();
    let mut num = x.num.clone();
    let mut den = x.den.clone();
    while !num.is_zero() {
        let (q, r) = den.div_rem(&num);
        quotients.push(q.to_u64().ok_or(Error::OutOfRange)?);
        den = num;
        num = r;
    }
    Ok(Cfe { quotients })
}

/// Finite weighted measure on the unit interval with exact rational
/// support.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitIntervalMeasure {
    points: Vec<(Rational, f64)>,
}

impl UnitIntervalMeasure {
    pub fn from_weighted(points: Vec<(Rational, f64)>) -> Self {
        UnitIntervalMeasure { points }
    }

    pub fn points(&self) -> &[(Rational, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        crate::measures::neumaier_sum(self.points.iter().map(|(_, w)| *w))
    }
}

/// Uniform measure on the finite Gauss orbit of `p/q`.
pub fn nu_pq(x: &Rational) -> Result<UnitIntervalMeasure> {
    if !x.in_unit_interval_strict() {
        return Err(Error::OutOfRange);
    }
    let mut orbit = vec![x.clone()];
    let mut cur = x.clone();
    while {
        cur = gauss_map(&cur)?;
        !cur.is_zero()
    } {
        orbit.push(cur.clone());
    }
    let w = 1.0 / orbit.len() as f64;
    Ok(UnitIntervalMeasure {
        points: orbit.into_iter().map(|r| (r, w)).collect(),
    })
}

/// The `φ(q)`-averaged orbit measure `(1/φ(q)) Σ_p ν_{p/q}`.
pub fn averaged_nu(q: u64) -> Result<UnitIntervalMeasure> {
    let units = arith::units(q);
    let phi = units.len() as f64;
    let mut points = Vec::new();
    for p in units {
        let nu = nu_pq(&Rational::from_u64(p, q)?)?;
        for (r, w) in nu.points {
            points.push((r, w / phi));
        }
    }
    Ok(UnitIntervalMeasure { points })
}

/// Gauss–Kuzmin cumulative distribution `ln(1 + x) / ln 2`.
pub fn gauss_kuzmin_cdf(x: f64) -> f64 {
    (1.0 + x.clamp(0.0, 1.0)).ln() / 2f64.ln()
}

/// Kolmogorov–Smirnov distance of a finite measure on `[0, 1]` to the
/// Gauss–Kuzmin distribution, evaluated at the support breakpoints.
pub fn ks_distance(mu: &UnitIntervalMeasure) -> f64 {
    let mut pts: Vec<(Rational, f64)> = mu.points.clone();
    pts.sort_by(|a, b| {
        // p/q < r/s iff p s < r q, exactly.
        let lhs = a.0.num() * b.0.den();
        let rhs = b.0.num() * a.0.den();
        lhs.cmp(&rhs)
    });
    // Merge equal support points.
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    let mut i = 0;
    while i < pts.len() {
        let mut w = pts[i].1;
        let mut j = i + 1;
        while j < pts.len() && pts[j].0 == pts[i].0 {
            w += pts[j].1;
            j += 1;
        }
        merged.push((pts[i].0.to_f64(), w));
        i = j;
    }
    let mut cum = 0.0;
    let mut d = 0.0f64;
    for (x, w) in merged {
        let f = gauss_kuzmin_cdf(x);
        d = d.max((f - cum).abs());
        cum += w;
        d = d.max((f - cum).abs());
    }
    d = d.max((1.0 - cum).abs());
    d
}

/// Number of residues `p` coprime to `q` whose expansion keeps all partial
/// quotients at most `M`. A canonical expansion ending in `M + 1` also
/// counts: its variant form `[..., M, 1]` qualifies, and the paper's set
/// does not fix a representative.
pub fn zaremba_census(q: u64, m_bound: u64) -> u64 {
    assert!(q >= 2 && m_bound >= 1);
    let mut count = 0;
    for p in 1..q {
        if arith::gcd(p, q) != 1 {
            continue;
        }
        if quotients_bounded(p, q, m_bound) {
            count += 1;
        }
    }
    count
}

fn quotients_bounded(p: u64, q: u64, m_bound: u64) -> bool {
    let mut num = p;
    let mut den = q;
    let mut prev_ok = true;
    while num != 0 {
        if !prev_ok {
            return false;
        }
        let quot = den / num;
        let rem = den % num;
        den = num;
        num = rem;
        if num == 0 {
            // Last quotient: the variant form [..., quot - 1, 1] also
            // certifies boundedness.
            return quot <= m_bound + 1;
        }
        prev_ok = quot <= m_bound;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rat(p: u64, q: u64) -> Rational {
        Rational::from_u64(p, q).unwrap()
    }

    #[test]
    fn gauss_map_examples() {
        assert_eq!(gauss_map(&rat(3, 7)).unwrap(), rat(1, 3));
        for k in 2..20 {
            assert!(gauss_map(&rat(1, k)).unwrap().is_zero());
        }
        assert_eq!(gauss_map(&Rational::zero()), Err(Error::ZeroInput));
    }

    #[test]
    fn gauss_orbit_terminates_in_len_steps() {
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..1000 {
            let q = rng.gen_range(2u64..5000);
            let p = rng.gen_range(1..q);
            let x = rat(p, q);
            if !x.in_unit_interval_strict() {
                continue;
            }
            let len = cfe_of_rational(&x).unwrap().len();
            let mut cur = x;
            for _ in 0..len {
                cur = gauss_map(&cur).unwrap();
            }
            assert!(cur.is_zero(), "orbit must die after len steps");
        }
    }

    #[test]
    fn cfe_examples() {
        let c = cfe_of_rational(&rat(3, 7)).unwrap();
        assert_eq!(c.quotients, vec![2, 3]);
        assert_eq!(c.len(), 2);

        let c = cfe_of_rational(&rat(1, 5)).unwrap();
        assert_eq!(c.quotients, vec![5]);

        assert_eq!(cfe_of_rational(&Rational::zero()), Err(Error::OutOfRange));
        assert_eq!(cfe_of_rational(&rat(3, 2)), Err(Error::OutOfRange));
    }

    #[test]
    fn cfe_reconstruction_exhaustive() {
        for q in 2..=500u64 {
            for p in 1..q {
                if arith::gcd(p, q) != 1 {
                    continue;
                }
                let x = rat(p, q);
                let c = cfe_of_rational(&x).unwrap();
                assert_eq!(c.reconstruct(), x, "{p}/{q}");
                if c.len() > 1 {
                    assert!(
                        *c.quotients.last().unwrap() >= 2,
                        "canonical form for {p}/{q}"
                    );
                }
                // Classical Euclidean length bound.
                assert!(c.len() as f64 <= 2.0 * (q as f64).log2() + 1.0);
            }
        }
    }

    #[test]
    fn nu_pq_examples() {
        let mu = nu_pq(&rat(1, 5)).unwrap();
        assert_eq!(mu.len(), 1);
        assert_eq!(mu.points()[0].0, rat(1, 5));

        let mu = nu_pq(&rat(3, 7)).unwrap();
        assert_eq!(mu.len(), 2);
        assert_eq!(mu.points()[0].0, rat(3, 7));
        assert_eq!(mu.points()[1].0, rat(1, 3));
        assert!((mu.total_weight() - 1.0).abs() < 1e-15);

        for q in [11u64, 101] {
            for p in [1, 2, q - 1] {
                let x = rat(p, q);
                let len = cfe_of_rational(&x).unwrap().len();
                assert_eq!(nu_pq(&x).unwrap().len(), len);
            }
        }
    }

    #[test]
    fn gauss_kuzmin_cdf_values() {
        assert_eq!(gauss_kuzmin_cdf(0.0), 0.0);
        assert!((gauss_kuzmin_cdf(1.0) - 1.0).abs() < 1e-15);
        assert!((gauss_kuzmin_cdf(0.5) - 0.5849625007211562).abs() < 1e-12);
    }

    #[test]
    fn ks_distance_self_test() {
        // Discretize the Gauss-Kuzmin law itself at 10^6 quantile points.
        let n = 1_000_000u64;
        let mut points = Vec::with_capacity(n as usize);
        let w = 1.0 / n as f64;
        for i in 0..n {
            let u = (i as f64 + 0.5) / n as f64;
            let x = (2f64.powf(u) - 1.0).clamp(0.0, 1.0);
            // Rational approximation at 1e-9 resolution keeps ordering exact.
            let p = (x * 1e9).round() as u64;
            points.push((rat(p, 1_000_000_000), w));
        }
        let mu = UnitIntervalMeasure::from_weighted(points);
        assert!(ks_distance(&mu) < 1e-5);
    }

    #[test]
    fn zaremba_examples() {
        // q = 5: p = 2 has [2, 2], p = 3 has [1, 1, 2]; p = 1 is [5] and
        // p = 4 is [1, 4], both beyond the M = 2 window even through the
        // variant form.
        assert_eq!(zaremba_census(5, 2), 2);
        assert_eq!(zaremba_census(5, 5), 4);

        // Independent recomputation through the Gauss orbit: quotient i is
        // floor(1 / T^{i-1}(x)).
        for (q, m) in [(5u64, 2u64), (101, 2), (101, 3)] {
            let mut count = 0;
            for p in 1..q {
                if arith::gcd(p, q) != 1 {
                    continue;
                }
                let mut quots = Vec::new();
                let mut cur = rat(p, q);
                while !cur.is_zero() {
                    let inv = cur.den().to_f64().unwrap() / cur.num().to_f64().unwrap();
                    quots.push(inv.floor() as u64);
                    cur = gauss_map(&cur).unwrap();
                }
                let ok = quots[..quots.len() - 1].iter().all(|&a| a <= m)
                    && *quots.last().unwrap() <= m + 1;
                if ok {
                    count += 1;
                }
            }
            assert_eq!(zaremba_census(q, m), count, "q={q} M={m}");
        }
    }

    #[test]
    fn zaremba_variant_form_boundary() {
        // 4/7 = [1, 1, 3]: bounded by M = 2 through the variant [1, 1, 2, 1].
        let c = cfe_of_rational(&rat(4, 7)).unwrap();
        assert_eq!(c.quotients, vec![1, 1, 3]);
        assert!(quotients_bounded(4, 7, 2));
        assert!(!quotients_bounded(4, 7, 1));
    }
}
