//! Real lattice bases: points of the space of lattices, stored as a square
//! row matrix (rows are basis vectors). Bases built from family or exact
//! data also carry their rational entries, which keeps axis covolumes exact
//! wherever the geometry allows it.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact;

/// Search parameters for float-path axis-vector detection.
#[derive(Debug, Clone, Copy)]
pub struct AxisSearch {
    /// Largest coefficient tried for the dominant coordinate of the axis
    /// combination.
    pub bound: u64,
    /// Absolute integrality tolerance for candidate coefficient vectors.
    pub tol: f64,
}

impl Default for AxisSearch {
    fn default() -> Self {
        AxisSearch {
            bound: 1_000_000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RealLatticeBasis {
    dim: usize,
    rows: Vec<f64>,
    exact: Option<Vec<BigRational>>,
    det: f64,
}

impl RealLatticeBasis {
    pub fn identity(n: usize) -> Self {
        let mut rows = vec![0.0; n * n];
        for i in 0..n {
            rows[i * n + i] = 1.0;
        }
        RealLatticeBasis {
            dim: n,
            rows,
            exact: Some(identity_rational(n)),
            det: 1.0,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::SingularBasis);
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let det = mat_det(&flat, n);
        if det.abs() < 1e-300 || !det.is_finite() {
            return Err(Error::SingularBasis);
        }
        Ok(RealLatticeBasis {
            dim: n,
            rows: flat,
            exact: None,
            det,
        })
    }

    pub fn from_rational_rows(rows: &[Vec<BigRational>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::SingularBasis);
        }
        let exact: Vec<BigRational> = rows.iter().flatten().cloned().collect();
        let flat: Vec<f64> = exact
            .iter()
            .map(|x| x.to_f64().expect("rational fits in f64 at desk scale"))
            .collect();
        let det = mat_det(&flat, n);
        if det.abs() < 1e-300 || !det.is_finite() {
            return Err(Error::SingularBasis);
        }
        Ok(RealLatticeBasis {
            dim: n,
            rows: flat,
            exact: Some(exact),
            det,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows_flat(&self) -> &[f64] {
        &self.rows
    }

    pub fn exact_rows(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Right-multiplies by a square matrix (drops exactness).
    pub fn mul_right(&self, m: &[f64]) -> Self {
        let n = self.dim;
        let rows = mat_mul(&self.rows, m, n);
        let det = mat_det(&rows, n);
        RealLatticeBasis {
            dim: n,
            rows,
            exact: None,
            det,
        }
    }

    /// Scales column `j` by `scales[j]`.
    pub fn scale_columns(&self, scales: &[f64]) -> Self {
        let n = self.dim;
        assert_eq!(scales.len(), n);
        let mut rows = self.rows.clone();
        for i in 0..n {
            for j in 0..n {
                rows[i * n + j] *= scales[j];
            }
        }
        let det = self.det * scales.iter().product::<f64>();
        RealLatticeBasis {
            dim: n,
            rows,
            exact: None,
            det,
        }
    }

    /// Scales column `j` by the exact rational `scales[j]`, preserving the
    /// exact representation when one is present.
    pub fn scale_columns_exact(&self, scales: &[BigRational]) -> Self {
        let n = self.dim;
        assert_eq!(scales.len(), n);
        match &self.exact {
            Some(ex) => {
                let mut new_exact = ex.clone();
                for i in 0..n {
                    for j in 0..n {
                        new_exact[i * n + j] *= &scales[j];
                    }
                }
                let rows: Vec<f64> = new_exact
                    .iter()
                    .map(|x| x.to_f64().expect("rational fits in f64"))
                    .collect();
                let det = mat_det(&rows, n);
                RealLatticeBasis {
                    dim: n,
                    rows,
                    exact: Some(new_exact),
                    det,
                }
            }
            None => {
                let f: Vec<f64> = scales
                    .iter()
                    .map(|x| x.to_f64().expect("rational fits in f64"))
                    .collect();
                self.scale_columns(&f)
            }
        }
    }

    /// Applies the coordinate permutation `sigma` (as column moves: new
    /// column `sigma[j]` is old column `j`) and optionally negates the first
    /// row, which keeps the representative inside the unimodular group when
    /// the permutation is odd.
    pub fn permute_columns(&self, sigma: &[usize], negate_first_row: bool) -> Self {
        let n = self.dim;
        assert_eq!(sigma.len(), n);
        let mut rows = vec![0.0; n * n];
        let mut exact = self.exact.as_ref().map(|_| vec![BigRational::zero(); n * n]);
        for i in 0..n {
            for j in 0..n {
                let sign = if negate_first_row && i == 0 { -1.0 } else { 1.0 };
                rows[i * n + sigma[j]] = sign * self.rows[i * n + j];
                if let (Some(out), Some(src)) = (exact.as_mut(), self.exact.as_ref()) {
                    let mut v = src[i * n + j].clone();
                    if negate_first_row && i == 0 {
                        v = -v;
                    }
                    out[i * n + sigma[j]] = v;
                }
            }
        }
        let det = mat_det(&rows, n);
        RealLatticeBasis {
            dim: n,
            rows,
            exact,
            det,
        }
    }

    /// Length of the shortest nonzero lattice vector on axis `i`. Exact
    /// when the basis carries rational entries; otherwise detected by
    /// scanning coefficient multiples of the inverse row up to the search
    /// bound.
    pub fn covol_axis(&self, i: usize, search: &AxisSearch) -> Result<f64> {
        assert!(i < self.dim);
        if let Some(ex) = &self.exact {
            let rows: Vec<Vec<BigRational>> = (0..self.dim)
                .map(|r| ex[r * self.dim..(r + 1) * self.dim].to_vec())
                .collect();
            let c = exact::covol_axis_rational(&rows, i)?;
            return Ok(c.to_f64().expect("covolume fits in f64"));
        }
        let inv = mat_inv(&self.rows, self.dim).ok_or(Error::SingularBasis)?;
        // A vector on axis i is k·B = c·e_i with k = c · (row i of B⁻¹);
        // the smallest admissible c > 0 is the covolume.
        let v = &inv[i * self.dim..(i + 1) * self.dim];
        let (jstar, vmax) = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(j, x)| (j, x.abs()))
            .unwrap();
        if vmax < 1e-300 {
            return Err(Error::NoAxisVector { axis: i });
        }
        for m in 1..=search.bound {
            let c = m as f64 / vmax;
            let mut integral = true;
            for (j, &vj) in v.iter().enumerate() {
                if j == jstar {
                    continue;
                }
                let x = c * vj;
                if (x - x.round()).abs() > search.tol {
                    integral = false;
                    break;
                }
            }
            if integral {
                return Ok(c);
            }
        }
        Err(Error::NoAxisVector { axis: i })
    }

    /// Lower bounds `-ln covol(L, i)` of the truncation region.
    pub fn axis_bounds(&self, search: &AxisSearch) -> Result<Vec<f64>> {
        (0..self.dim)
            .map(|i| self.covol_axis(i, search).map(|c| -c.ln()))
            .collect()
    }

    /// Arithmetic mean of the log axis covolumes.
    pub fn tau(&self, search: &AxisSearch) -> Result<f64> {
        let mut s = 0.0;
        for i in 0..self.dim {
            s += self.covol_axis(i, search)?.ln();
        }
        Ok(s / self.dim as f64)
    }

    /// Entrywise distance to another basis; test helper for group laws.
    pub fn max_entry_distance(&self, other: &Self) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn identity_rational(n: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); n * n];
    for i in 0..n {
        out[i * n + i] = BigRational::from_integer(BigInt::from(1));
    }
    out
}

/// Row-major product of two square matrices.
pub fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn mat_det(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    let mut det = 1.0;
    for c in 0..n {
        let mut p = c;
        for r in c + 1..n {
            if m[r * n + c].abs() > m[p * n + c].abs() {
                p = r;
            }
        }
        if m[p * n + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for j in 0..n {
                m.swap(c * n + j, p * n + j);
            }
            det = -det;
        }
        det *= m[c * n + c];
        for r in c + 1..n {
            let f = m[r * n + c] / m[c * n + c];
            if f != 0.0 {
                for j in c..n {
                    m[r * n + j] -= f * m[c * n + j];
                }
            }
        }
    }
    det
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn mat_inv(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for c in 0..n {
        let mut p = c;
        for r in c + 1..n {
            if m[r * n + c].abs() > m[p * n + c].abs() {
                p = r;
            }
        }
        let piv = m[p * n + c];
        if piv == 0.0 || !piv.is_finite() {
            return None;
        }
        if p != c {
            for j in 0..n {
                m.swap(c * n + j, p * n + j);
                inv.swap(c * n + j, p * n + j);
            }
        }
        let f = 1.0 / m[c * n + c];
        for j in 0..n {
            m[c * n + j] *= f;
            inv[c * n + j] *= f;
        }
        for r in 0..n {
            if r == c {
                continue;
            }
            let g = m[r * n + c];
            if g != 0.0 {
                for j in 0..n {
                    m[r * n + j] -= g * m[c * n + j];
                    inv[r * n + j] -= g * inv[c * n + j];
                }
            }
        }
    }
    Some(inv)
}
