//! Scalar operator profiles a(t) = (t²+ε)^{(p−2)/2}, b(t) = (t²+ε)^{β/2},
//! the structure matrices they induce on a gradient direction, and the
//! admissibility windows under which the Cordes machinery applies.

use crate::error::{Error, Result};
use crate::matrix::{cordes_constants, SymMatrix};
use crate::scalar::Real;

/// Number of grid points used when minimizing over the θ-range; no
/// unimodality of the minimized expression is assumed.
const THETA_GRID: usize = 10_000;

/// The triple (p, ε, β) defining the power-type profiles
/// a(t) = (t²+ε)^{(p−2)/2} and b(t) = (t²+ε)^{β/2}.
///
/// Requires p > 1, ε ∈ (0, 1) and β > −1, which keeps both profiles
/// positive with bounded logarithmic derivatives. The unregularized case
/// ε = 0 is reached only through sequences ε → 0 in experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorProfile<T> {
    p: T,
    eps: T,
    beta: T,
}

/// The matrices A = I + ϑ_a(|g|) g⊗g/|g|² and B (with ϑ_b) induced by a
/// gradient vector g. Both are symmetric with eigenvalues
/// {1 (n−1 times), 1+ϑ(|g|)} and equal the identity when g = 0.
#[derive(Debug, Clone)]
pub struct StructureMatrices<T> {
    pub a: SymMatrix<T>,
    pub b: SymMatrix<T>,
}

impl<T: Real> OperatorProfile<T> {
    pub fn new(p: T, eps: T, beta: T) -> Result<Self> {
        if !(p > T::one()) {
            return Err(Error::InvalidParameter(format!("p = {p} must exceed 1")));
        }
        if !(eps > T::zero() && eps < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "eps = {eps} must lie in (0, 1)"
            )));
        }
        if !(beta > -T::one()) {
            return Err(Error::InvalidParameter(format!(
                "beta = {beta} must exceed -1"
            )));
        }
        Ok(Self { p, eps, beta })
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// a(t) = (t² + ε)^{(p−2)/2}.
    pub fn a(&self, t: T) -> T {
        (t * t + self.eps).powf((self.p - T::of(2.0)) / T::of(2.0))
    }

    /// b(t) = (t² + ε)^{β/2}.
    pub fn b(&self, t: T) -> T {
        (t * t + self.eps).powf(self.beta / T::of(2.0))
    }

    /// Logarithmic derivative ϑ_a(t) = t a'(t)/a(t) = (p−2) t²/(t²+ε).
    pub fn vartheta_a(&self, t: T) -> T {
        (self.p - T::of(2.0)) * t * t / (t * t + self.eps)
    }

    /// Logarithmic derivative ϑ_b(t) = β t²/(t²+ε).
    pub fn vartheta_b(&self, t: T) -> T {
        self.beta * t * t / (t * t + self.eps)
    }

    /// Growth bounds (i_a, s_a) = (min{p−2, 0}, max{p−2, 0}).
    pub fn a_bounds(&self) -> (T, T) {
        let d = self.p - T::of(2.0);
        (d.min(T::zero()), d.max(T::zero()))
    }

    /// Growth bounds (i_b, s_b) = (min{β, 0}, max{β, 0}).
    pub fn b_bounds(&self) -> (T, T) {
        (self.beta.min(T::zero()), self.beta.max(T::zero()))
    }

    /// θ(t) = (1+ϑ_a(t))/(1+ϑ_b(t)) = ((p−1)t² + ε)/((β+1)t² + ε).
    pub fn theta(&self, t: T) -> T {
        let t2 = t * t;
        ((self.p - T::one()) * t2 + self.eps) / ((self.beta + T::one()) * t2 + self.eps)
    }

    /// Range (i_θ, s_θ) of θ: θ moves monotonically from 1 at t = 0 to
    /// (p−1)/(β+1) as t → ∞, so the range is the min/max of those two.
    pub fn theta_bounds(&self) -> (T, T) {
        let limit = (self.p - T::one()) / (self.beta + T::one());
        (limit.min(T::one()), limit.max(T::one()))
    }

    /// Whether the profile sits inside the Cordes admissibility window
    /// s_θ < 2(n−1)/(n−2) for dimension n (the bound is +∞ for n = 2).
    ///
    /// The window is equivalent to β > −1 + (n−2)(p−1)/(2(n−1)); both
    /// forms are computed and cross-checked.
    pub fn cordes_window_ok(&self, n: usize) -> bool {
        assert!(n >= 2);
        let (_, s_theta) = self.theta_bounds();
        let by_theta = if n == 2 {
            true
        } else {
            s_theta < T::of(2.0) * T::of_usize(n - 1) / T::of_usize(n - 2)
        };
        let beta_floor = -T::one()
            + T::of_usize(n - 2) * (self.p - T::one()) / (T::of(2.0) * T::of_usize(n - 1));
        let by_beta = self.beta > beta_floor;
        debug_assert_eq!(by_theta, by_beta, "window forms disagree");
        by_theta
    }

    /// Largest uniform δ admissible for the induced (A, B) pair: the
    /// infimum over the θ-range of
    /// g(θ) = (2(n−1) − (n−2)θ)θ / (n−1 + θ²),
    /// taken as the minimum over a dense θ-grid including both endpoints.
    /// Positive exactly inside the admissibility window.
    pub fn delta_max(&self, n: usize) -> Result<T> {
        if !self.cordes_window_ok(n) {
            return Err(Error::WindowViolated { n });
        }
        let (i_theta, s_theta) = self.theta_bounds();
        let nm1 = T::of_usize(n - 1);
        let nm2 = T::of_usize(n.saturating_sub(2));
        let g = |theta: T| (T::of(2.0) * nm1 - nm2 * theta) * theta / (nm1 + theta * theta);
        let mut best = g(i_theta).min(g(s_theta));
        if s_theta > i_theta {
            let step = (s_theta - i_theta) / T::of_usize(THETA_GRID);
            for k in 1..THETA_GRID {
                let theta = i_theta + step * T::of_usize(k);
                best = best.min(g(theta));
            }
        }
        debug_assert!(best > T::zero());
        Ok(best)
    }

    /// Structure matrices A, B for the given gradient; the zero gradient
    /// yields the identity for both.
    pub fn structure_matrices(&self, grad: &[T]) -> StructureMatrices<T> {
        let n = grad.len();
        let norm2: T = grad.iter().map(|&x| x * x).sum();
        let mut a = SymMatrix::identity(n);
        let mut b = SymMatrix::identity(n);
        if norm2 > T::zero() {
            let t = norm2.sqrt();
            let ta = self.vartheta_a(t);
            let tb = self.vartheta_b(t);
            for i in 0..n {
                for j in i..n {
                    let outer = grad[i] * grad[j] / norm2;
                    a.set(i, j, a.get(i, j) + ta * outer);
                    b.set(i, j, b.get(i, j) + tb * outer);
                }
            }
        }
        StructureMatrices { a, b }
    }

    /// Verifies the pointwise Cordes inequality
    /// (n−1+δ)(n−1+θ(t)²) ≤ (n−1+θ(t))² at the gradient magnitude t, with
    /// δ = `delta_max`. False whenever the window is violated (no positive
    /// δ exists there).
    pub fn pointwise_cordes_check(&self, n: usize, t: T) -> bool {
        let delta = match self.delta_max(n) {
            Ok(d) => d,
            Err(_) => return false,
        };
        let theta = self.theta(t);
        let nm1 = T::of_usize(n - 1);
        let lhs = (nm1 + delta) * (nm1 + theta * theta);
        let rhs = (nm1 + theta) * (nm1 + theta);
        lhs <= rhs * (T::one() + T::of(1e-10)) + T::of(1e-300)
    }

    /// Constants (c, C) for the pointwise gradient-field inequality
    /// c|DV_b|² ≤ div((D(V_b−W) − tr(D(V_b−W))I)(V_b−W))
    ///            + C(|DW|² + (b/a)²(div V_a)²),
    /// composed from the Cordes constants at `delta_max`, the eigenvalue
    /// ratio of B, and the quadratic splitting of the cross terms. Valid
    /// for grid dimensions 2 and 3; not sharp.
    pub fn key_inequality_constants(&self, n: usize) -> Result<(T, T)> {
        let delta = self.delta_max(n)?;
        let (c0, big_c0) = cordes_constants(n, delta)?;
        let (i_b, s_b) = self.b_bounds();
        let lo = T::one().min(T::one() + i_b);
        let hi = T::one().max(T::one() + s_b);
        let ratio = lo / hi;
        let c_raw = c0 * ratio * ratio;

        let (i_theta, _) = self.theta_bounds();
        let nm1 = T::of_usize(n - 1);
        let c_div = big_c0 / (nm1 + i_theta * i_theta);
        let c_young =
            T::of(2.0) * T::of_usize(n + 1) * (T::one() + T::of(2.0) / c_raw);
        Ok((c_raw / T::of(2.0), c_div.max(c_young)))
    }

    /// Serializes as a key=value block together with the ambient dimension.
    pub fn to_kv_block(&self, n: usize) -> String {
        format!("p = {}\neps = {:e}\nbeta = {}\nn = {}\n", self.p, self.eps, self.beta, n)
    }

    /// Parses a key=value block with keys p, eps, beta, n.
    pub fn parse_kv_block(text: &str) -> Result<(Self, usize)> {
        let mut p = None;
        let mut eps = None;
        let mut beta = None;
        let mut n = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {line:?}")))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "p" => p = Some(parse_scalar::<T>(value)?),
                "eps" => eps = Some(parse_scalar::<T>(value)?),
                "beta" => beta = Some(parse_scalar::<T>(value)?),
                "n" => {
                    n = Some(value.parse::<usize>().map_err(|e| {
                        Error::Parse(format!("bad n value {value:?}: {e}"))
                    })?)
                }
                _ => return Err(Error::Parse(format!("unknown profile key {key:?}"))),
            }
        }
        let profile = Self::new(
            p.ok_or_else(|| Error::Parse("missing key p".into()))?,
            eps.ok_or_else(|| Error::Parse("missing key eps".into()))?,
            beta.ok_or_else(|| Error::Parse("missing key beta".into()))?,
        )?;
        Ok((profile, n.ok_or_else(|| Error::Parse("missing key n".into()))?))
    }
}

fn parse_scalar<T: Real>(s: &str) -> Result<T> {
    let v: f64 = s
        .parse()
        .map_err(|e| Error::Parse(format!("bad numeric value {s:?}: {e}")))?;
    Ok(T::of(v))
}
