//! Small shared linear-algebra kernels: a matrix-free preconditioned
//! conjugate gradient used by both the energy minimizer and the capacity
//! solves.

use crate::scalar::Real;

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone, Copy)]
pub struct CgResult<T> {
    pub iterations: usize,
    pub converged: bool,
    /// Final residual norm, relative to the right-hand side norm.
    pub relative_residual: T,
}

/// Preconditioned conjugate gradient for a symmetric positive definite
/// operator given as a mat-vec closure.
///
/// `diag_inv`, when present, is the inverse diagonal used as a Jacobi
/// preconditioner. `x` carries the initial guess and receives the solution.
/// Iteration order is fixed, so the result is deterministic.
pub fn pcg<T, A>(
    mut apply: A,
    diag_inv: Option<&[T]>,
    b: &[T],
    x: &mut [T],
    rel_tol: T,
    max_iter: usize,
) -> CgResult<T>
where
    T: Real,
    A: FnMut(&[T], &mut [T]),
{
    let n = b.len();
    assert_eq!(x.len(), n);

    let mut r = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut ap = vec![T::zero(); n];

    apply(x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }

    let b_norm = norm2(b).max(T::min_positive_value());
    let precondition = |r: &[T], z: &mut [T]| match diag_inv {
        Some(d) => {
            for i in 0..n {
                z[i] = d[i] * r[i];
            }
        }
        None => z.copy_from_slice(r),
    };

    precondition(&r, &mut z);
    p.copy_from_slice(&z);
    let mut rz = dot(&r, &z);

    let mut res = norm2(&r) / b_norm;
    if res <= rel_tol {
        return CgResult {
            iterations: 0,
            converged: true,
            relative_residual: res,
        };
    }

    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= T::zero() {
            // loss of positive definiteness in finite precision; stop here
            return CgResult {
                iterations: it,
                converged: false,
                relative_residual: res,
            };
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm2(&r) / b_norm;
        if res <= rel_tol {
            return CgResult {
                iterations: it,
                converged: true,
                relative_residual: res,
            };
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    CgResult {
        iterations: max_iter,
        converged: false,
        relative_residual: res,
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
