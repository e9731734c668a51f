//! Random-matrix sampling for the verification sweeps.
//!
//! The sampling law is fixed so sweeps are reproducible: entries are
//! i.i.d. standard normal, symmetrized, and admissible matrices are
//! obtained by shifting towards the reference basis until the Cordes
//! condition holds with the requested δ. Every function takes the RNG
//! explicitly; sharded sweeps can pass per-shard generators.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::scalar::Real;

/// Symmetric matrix with i.i.d. standard-normal entries, symmetrized as
/// (G + Gᵀ)/2.
pub fn random_symmetric<T, R>(n: usize, rng: &mut R) -> SymMatrix<T>
where
    T: Real,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    let mut m = SymMatrix::zeros(n);
    let half = T::of(0.5);
    for i in 0..n {
        for j in i..n {
            let gij: T = rng.sample(StandardNormal);
            let gji: T = rng.sample(StandardNormal);
            m.set(i, j, half * (gij + gji));
        }
    }
    m
}

/// Random symmetric positive definite matrix GᵀG/n plus a trace-scaled
/// ridge, keeping the condition number moderate.
pub fn random_spd<T, R>(n: usize, rng: &mut R) -> SymMatrix<T>
where
    T: Real,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    let mut g = vec![T::zero(); n * n];
    for v in g.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut s = T::zero();
            for k in 0..n {
                s += g[k * n + i] * g[k * n + j];
            }
            m.set(i, j, s / T::of_usize(n));
        }
    }
    let ridge = m.trace() / T::of_usize(n) * T::of(0.05);
    for i in 0..n {
        m.set(i, i, m.get(i, i) + ridge);
    }
    m
}

/// Random matrix satisfying the Cordes condition against the identity
/// with at least the requested δ.
///
/// For δ < 1 a random symmetric matrix is shifted A → A + tI with the
/// smallest admissible t, so the sample sits on the admissibility
/// boundary. δ = 1 is attained only by positive multiples of the identity,
/// so that family is sampled directly.
pub fn random_admissible<T, R>(n: usize, delta: T, rng: &mut R) -> Result<SymMatrix<T>>
where
    T: Real,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    if delta == T::one() {
        let g: T = rng.sample(StandardNormal);
        let s = g.abs() + T::of(0.1);
        return Ok(SymMatrix::identity(n).scale(s));
    }
    let a0 = random_symmetric::<T, _>(n, rng);
    let tr = a0.trace();
    let ti = a0.hs_inner(&a0);
    let t = minimal_shift(n, delta, tr, ti)?;
    if t == T::zero() {
        return Ok(a0);
    }
    let mut out = a0;
    for i in 0..n {
        out.set(i, i, out.get(i, i) + t);
    }
    Ok(out)
}

/// Random matrix satisfying the Cordes condition against the given SPD
/// basis with at least the requested δ; the shift direction is the basis
/// itself, A → A + tB.
pub fn random_admissible_wrt<T, R>(
    n: usize,
    delta: T,
    basis: &SymMatrix<T>,
    rng: &mut R,
) -> Result<SymMatrix<T>>
where
    T: Real,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    if delta == T::one() {
        // only positive multiples of the basis attain δ = 1
        let g: T = rng.sample(StandardNormal);
        let s = g.abs() + T::of(0.1);
        return Ok(basis.scale(s));
    }
    let a0 = random_symmetric::<T, _>(n, rng);
    // B⁻¹(A + tB) = B⁻¹A + tI, so the shift acts on N = B⁻¹A exactly as
    // the identity shift acts on A
    let b_inv = crate::matrix::spd_inverse(basis)?;
    let nmat = b_inv.to_sq().matmul(&a0.to_sq());
    let t = minimal_shift(n, delta, nmat.trace(), nmat.transpose_inner())?;
    if t == T::zero() {
        return Ok(a0);
    }
    Ok(a0.add(&basis.scale(t)))
}

/// Smallest t ≥ 0 with (tr(N)+nt)² ≥ (n−1+δ)(⟨N,Nᵀ⟩+2t·tr(N)+nt²),
/// obtained from the quadratic's explicit larger root.
fn minimal_shift<T: Real>(n: usize, delta: T, tr: T, transpose_inner: T) -> Result<T> {
    if delta <= T::zero() || delta >= T::one() {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} outside (0, 1) for shifted sampling"
        )));
    }
    let nf = T::of_usize(n);
    let q = nf - T::one() + delta;
    if tr * tr >= q * transpose_inner && tr > T::zero() {
        return Ok(T::zero());
    }
    // n(1−δ)t² + 2tr(1−δ)t + (tr² − q⟨N,Nᵀ⟩) ≥ 0 has the larger root
    // t₊ = (−tr + sqrt(q(n⟨N,Nᵀ⟩ − tr²)/(1−δ)))/n; the radicand is
    // nonnegative by Cauchy–Schwarz
    let one_m = T::one() - delta;
    let t_plus = (-tr
        + (q * (nf * transpose_inner - tr * tr) / one_m)
            .max(T::zero())
            .sqrt())
        / nf;
    let t = t_plus.max(T::zero());
    // nudge off the exact boundary so rounding cannot drop below δ
    Ok(t + T::of(1e-9) * (T::one() + t.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::cordes_delta;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn admissible_samples_meet_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=6 {
            for &delta in &[0.25f64, 0.5, 0.99] {
                for _ in 0..50 {
                    let a = random_admissible(n, delta, &mut rng).unwrap();
                    let d = cordes_delta(&a, &SymMatrix::identity(n))
                        .unwrap()
                        .expect("admissible sample must have positive delta");
                    assert!(d >= delta - 1e-12, "n={n} delta={delta}: got {d}");
                }
            }
        }
    }

    #[test]
    fn admissible_wrt_basis_meets_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=4 {
            for _ in 0..50 {
                let b = random_spd::<f64, _>(n, &mut rng);
                let a = random_admissible_wrt(n, 0.4, &b, &mut rng).unwrap();
                let d = cordes_delta(&a, &b).unwrap().unwrap();
                assert!(d >= 0.4 - 1e-12);
            }
        }
    }

    #[test]
    fn delta_one_family_is_multiples_of_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_admissible::<f64, _>(3, 1.0, &mut rng).unwrap();
        let d = cordes_delta(&a, &SymMatrix::identity(3)).unwrap().unwrap();
        assert!((d - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn spd_samples_are_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 2..=6 {
            for _ in 0..50 {
                let b = random_spd::<f64, _>(n, &mut rng);
                crate::matrix::spd_eigen(&b).expect("sampled SPD matrix rejected");
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_for_fixed_seed() {
        let mut r1 = ChaCha8Rng::seed_from_u64(42);
        let mut r2 = ChaCha8Rng::seed_from_u64(42);
        let a = random_symmetric::<f64, _>(4, &mut r1);
        let b = random_symmetric::<f64, _>(4, &mut r2);
        assert_eq!(a, b);
    }
}
