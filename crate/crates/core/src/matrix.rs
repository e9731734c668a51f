//! Dense symmetric matrices at desk scale (n ≤ 8) and the Cordes-condition
//! toolbox: the largest admissible δ, the explicit constants (c, C), the
//! basic and congruence-reduced gap inequalities, and the
//! transpose-product eigenvalue bound.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative eigenvalue floor below which a matrix is rejected as not
/// positive definite. Inputs below the floor are rejected, never
/// regularized.
pub const SPD_REL_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// matrix types
// ---------------------------------------------------------------------------

/// Dense symmetric n×n matrix with exactly mirrored entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    n: usize,
    a: Vec<T>,
}

/// Dense square n×n matrix (products of symmetric matrices are generally
/// not symmetric, so a few operations need this).
#[derive(Debug, Clone, PartialEq)]
pub struct SqMatrix<T> {
    n: usize,
    a: Vec<T>,
}

impl<T: Real> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1);
        Self {
            n,
            a: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = T::one();
        }
        m
    }

    pub fn diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m.a[i * d.len() + i] = x;
        }
        m
    }

    /// Builds from full rows, rejecting any exactly asymmetric entry pair.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "row {i} has length {} in a {n}x{n} matrix",
                    r.len()
                )));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        let mut a = Vec::with_capacity(n * n);
        for r in rows {
            a.extend_from_slice(r);
        }
        Ok(Self { n, a })
    }

    /// Symmetric part (G + Gᵀ)/2 of an arbitrary square matrix.
    pub fn symmetrized(g: &SqMatrix<T>) -> Self {
        let n = g.n;
        let mut m = Self::zeros(n);
        let half = T::of(0.5);
        for i in 0..n {
            for j in 0..n {
                m.a[i * n + j] = half * (g.get(i, j) + g.get(j, i));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }

    /// Sets the (i, j) and (j, i) entries together.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.a[i * self.n + j] = v;
        self.a[j * self.n + i] = v;
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Hilbert–Schmidt inner product ⟨M, N⟩ = Σ Mᵢⱼ Nᵢⱼ.
    pub fn hs_inner(&self, other: &Self) -> T {
        assert_eq!(self.n, other.n);
        self.a.iter().zip(&other.a).map(|(&x, &y)| x * y).sum()
    }

    /// Hilbert–Schmidt norm |M|.
    pub fn hs_norm(&self) -> T {
        self.hs_inner(self).sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            n: self.n,
            a: self.a.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            a: self.a.iter().zip(&other.a).map(|(&x, &y)| x + y).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            a: self.a.iter().zip(&other.a).map(|(&x, &y)| x - y).collect(),
        }
    }

    pub fn to_sq(&self) -> SqMatrix<T> {
        SqMatrix {
            n: self.n,
            a: self.a.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|&x| x == T::zero())
    }
}

impl<T: Real> SqMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            a: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = T::one();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.a[i * self.n + j] = v;
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut c = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == T::zero() {
                    continue;
                }
                for j in 0..n {
                    c.a[i * n + j] += aik * other.get(k, j);
                }
            }
        }
        c
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.a[j * n + i] = self.a[i * n + j];
            }
        }
        t
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn hs_inner(&self, other: &Self) -> T {
        assert_eq!(self.n, other.n);
        self.a.iter().zip(&other.a).map(|(&x, &y)| x * y).sum()
    }

    /// ⟨M, Mᵀ⟩ = Σᵢⱼ Mᵢⱼ Mⱼᵢ, the quantity controlled by the Cordes gap.
    pub fn transpose_inner(&self) -> T {
        let n = self.n;
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                s += self.get(i, j) * self.get(j, i);
            }
        }
        s
    }

    pub fn frobenius(&self) -> T {
        self.hs_inner(self).sqrt()
    }
}

// ---------------------------------------------------------------------------
// symmetric eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order together with the orthonormal
/// eigenvector matrix (columns), so that M = V diag(λ) Vᵀ.
pub fn sym_eigen<T: Real>(m: &SymMatrix<T>) -> (Vec<T>, SqMatrix<T>) {
    let n = m.dim();
    let mut a = m.to_sq();
    let mut v = SqMatrix::identity(n);

    let frob = a.frobenius().max(T::min_positive_value());
    let tol = frob * T::epsilon();

    for _sweep in 0..64 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += a.get(i, j) * a.get(i, j);
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= frob * T::epsilon() * T::of(0.01) {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let tau = (aqq - app) / (T::of(2.0) * apq);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(p, k, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                    a.set(q, k, s * akp + c * akq);
                }
                a.set(p, p, c * c * app - T::of(2.0) * s * c * apq + s * s * aqq);
                a.set(q, q, s * s * app + T::of(2.0) * s * c * apq + c * c * aqq);
                a.set(p, q, T::zero());
                a.set(q, p, T::zero());

                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(i, i)
            .partial_cmp(&a.get(j, j))
            .expect("eigenvalue comparison")
    });
    let values: Vec<T> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = SqMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, v.get(row, src));
        }
    }
    (values, vectors)
}

/// Eigendecomposition of a positive definite matrix; rejects inputs whose
/// smallest eigenvalue falls below `SPD_REL_TOL` times the largest.
pub fn spd_eigen<T: Real>(b: &SymMatrix<T>) -> Result<(Vec<T>, SqMatrix<T>)> {
    let (vals, vecs) = sym_eigen(b);
    let lambda_min = vals[0];
    let lambda_max = vals[vals.len() - 1];
    if lambda_max <= T::zero() || lambda_min <= T::of(SPD_REL_TOL) * lambda_max {
        return Err(Error::NotPositiveDefinite {
            lambda_min: lambda_min.to_f64().unwrap_or(f64::NAN),
            lambda_max: lambda_max.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((vals, vecs))
}

/// Applies f to the eigenvalues of an SPD matrix: V diag(f(λ)) Vᵀ.
fn spd_function<T: Real>(b: &SymMatrix<T>, f: impl Fn(T) -> T) -> Result<SymMatrix<T>> {
    let n = b.dim();
    let (vals, vecs) = spd_eigen(b)?;
    let mut out = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut s = T::zero();
            for k in 0..n {
                s += vecs.get(i, k) * f(vals[k]) * vecs.get(j, k);
            }
            out.set(i, j, s);
        }
    }
    Ok(out)
}

/// Inverse of a symmetric positive definite matrix.
pub fn spd_inverse<T: Real>(b: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    spd_function(b, |l| T::one() / l)
}

// ---------------------------------------------------------------------------
// Cordes condition
// ---------------------------------------------------------------------------

/// Largest δ with (n−1+δ)⟨B⁻¹A, (B⁻¹A)ᵀ⟩ ≤ (tr(B⁻¹A))², i.e.
/// δ = (tr(B⁻¹A))² / ⟨B⁻¹A, (B⁻¹A)ᵀ⟩ − (n−1).
///
/// Returns `None` when that value is not positive (the Cordes condition
/// fails for every admissible δ). Rejects `B` that is not symmetric
/// positive definite and `A = 0`.
pub fn cordes_delta<T: Real>(a: &SymMatrix<T>, b: &SymMatrix<T>) -> Result<Option<T>> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidParameter(
            "dimension mismatch between A and B".into(),
        ));
    }
    if a.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let n = a.dim();
    let b_inv = spd_inverse(b)?;
    let m = b_inv.to_sq().matmul(&a.to_sq());
    let denom = m.transpose_inner();
    let tr = m.trace();
    let delta = tr * tr / denom - T::of_usize(n - 1);
    if delta > T::zero() {
        Ok(Some(delta))
    } else {
        Ok(None)
    }
}

/// Splits A = A∥ + A⊥ into the multiple of the identity A∥ = (tr A / n) I
/// and its orthogonal complement. The two parts are Hilbert–Schmidt
/// orthogonal, so |A|² = |A∥|² + |A⊥|².
pub fn split_parallel_perp<T: Real>(a: &SymMatrix<T>) -> (SymMatrix<T>, SymMatrix<T>) {
    let n = a.dim();
    let par = SymMatrix::identity(n).scale(a.trace() / T::of_usize(n));
    let perp = a.sub(&par);
    (par, perp)
}

/// Explicit constants for the Cordes gap inequalities:
/// C = n/δ and c = 1/(2 − n + C).
///
/// C forces the determinant of the reduced quadratic form Q to be at least
/// one, and c is the det/trace lower bound for its smallest eigenvalue,
/// uniform over all matrices satisfying the condition with this δ. Neither
/// constant is sharp.
pub fn cordes_constants<T: Real>(n: usize, delta: T) -> Result<(T, T)> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n = {n} < 2")));
    }
    if delta <= T::zero() || delta > T::one() {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} outside (0, 1]"
        )));
    }
    let big_c = T::of_usize(n) / delta;
    let c = T::one() / (T::of(2.0) - T::of_usize(n) + big_c);
    Ok((c, big_c))
}

/// A δ together with the matching constants (c, C) and the reference basis
/// the Cordes condition was certified against (identity when absent).
#[derive(Debug, Clone)]
pub struct CordesCertificate<T> {
    pub delta: T,
    pub c: T,
    pub big_c: T,
    pub basis: Option<SymMatrix<T>>,
}

impl<T: Real> CordesCertificate<T> {
    /// Certificate against the identity basis. δ must lie in (0, 1]; the
    /// endpoint δ = 1 is attained exactly by multiples of the identity and
    /// is admitted.
    pub fn new(n: usize, delta: T) -> Result<Self> {
        let (c, big_c) = cordes_constants(n, delta)?;
        Ok(Self {
            delta,
            c,
            big_c,
            basis: None,
        })
    }

    /// Certificate against a symmetric positive definite basis B.
    pub fn with_basis(n: usize, delta: T, basis: SymMatrix<T>) -> Result<Self> {
        spd_eigen(&basis)?;
        let (c, big_c) = cordes_constants(n, delta)?;
        Ok(Self {
            delta,
            c,
            big_c,
            basis: Some(basis),
        })
    }
}

/// Gap (right side minus left side) of the basic Cordes inequality
/// c|M|² ≤ |M|² − (tr M)² + (C/|A|²)⟨A, M⟩²,
/// for A satisfying the Cordes condition against the identity with the
/// certificate's δ. Nonnegative up to rounding when the constants come
/// from `cordes_constants`.
pub fn basic_cordes_gap<T: Real>(
    a: &SymMatrix<T>,
    m: &SymMatrix<T>,
    cert: &CordesCertificate<T>,
) -> Result<T> {
    if a.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let a_norm2 = a.hs_inner(a);
    let m_norm2 = m.hs_inner(m);
    let tr_m = m.trace();
    let am = a.hs_inner(m);
    Ok(m_norm2 - tr_m * tr_m + cert.big_c / a_norm2 * am * am - cert.c * m_norm2)
}

/// Congruence transformation Φ with Φᵀ B Φ = I, realized as the symmetric
/// inverse square root B^{−1/2} = V diag(λ^{−1/2}) Vᵀ.
pub fn congruence_reduce<T: Real>(b: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    spd_function(b, |l| T::one() / l.sqrt())
}

/// Gap of the congruence-reduced Cordes inequality
/// c⟨BM,(BM)ᵀ⟩ ≤ ⟨BM,(BM)ᵀ⟩ − (tr BM)² + (C/⟨B⁻¹A,(B⁻¹A)ᵀ⟩)⟨A,M⟩²,
/// for A satisfying the Cordes condition against SPD B with the
/// certificate's δ. With B = I this reduces exactly to `basic_cordes_gap`.
pub fn general_cordes_gap<T: Real>(
    a: &SymMatrix<T>,
    b: &SymMatrix<T>,
    m: &SymMatrix<T>,
    cert: &CordesCertificate<T>,
) -> Result<T> {
    if a.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let b_inv = spd_inverse(b)?;
    let ba = b_inv.to_sq().matmul(&a.to_sq());
    let denom = ba.transpose_inner();
    let bm = b.to_sq().matmul(&m.to_sq());
    let bm_ti = bm.transpose_inner();
    let tr_bm = bm.trace();
    let am = a.hs_inner(m);
    Ok(bm_ti - tr_bm * tr_bm + cert.big_c / denom * am * am - cert.c * bm_ti)
}

/// The pair (|BM|², (λmax/λmin)²⟨BM,(BM)ᵀ⟩) for SPD B and symmetric M;
/// the first never exceeds the second.
pub fn transpose_product_bound<T: Real>(
    b: &SymMatrix<T>,
    m: &SymMatrix<T>,
) -> Result<(T, T)> {
    let (vals, _) = spd_eigen(b)?;
    let ratio = vals[vals.len() - 1] / vals[0];
    let bm = b.to_sq().matmul(&m.to_sq());
    let lhs = bm.hs_inner(&bm);
    let rhs = ratio * ratio * bm.transpose_inner();
    Ok((lhs, rhs))
}
