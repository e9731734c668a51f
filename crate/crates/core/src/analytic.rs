//! Named analytic test expressions with hand-coded exact derivatives.
//!
//! The catalog doubles as the Dirichlet-data dictionary for the problem
//! files and as the reference fields of the identity suites: the
//! finite-difference operators are compared against these exact gradients
//! and Hessians.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A named scalar expression on 2D or 3D points. Parameters are stored as
/// `f64` and converted to the working scalar per evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticField {
    /// x₁
    LinearX,
    /// 0.625x₁ − 0.375x₂ + 0.125x₃ + 0.25 (dyadic coefficients, so the
    /// stencils are exact to the last bit on power-of-two grids)
    Tilt,
    /// |x|²/2
    HalfSquareNorm,
    /// x₁x₂
    Saddle,
    /// Π_k sin(πx_k)
    SinPiProduct,
    /// e^{x₁} sin(x₂)
    ExpSin,
    /// sin(x₁) cos(x₂)
    SinCos,
    /// fixed dense degree-4 polynomial in (x₁, x₂)
    Poly4,
    /// exp(−|x|²)
    Gaussian,
    /// |x|^α (α > 0); singular at the origin, meant for annular domains
    RadialPower { alpha: f64 },
}

impl AnalyticField {
    pub fn name(&self) -> String {
        match self {
            AnalyticField::LinearX => "linear_x".into(),
            AnalyticField::Tilt => "tilt".into(),
            AnalyticField::HalfSquareNorm => "half_square".into(),
            AnalyticField::Saddle => "saddle".into(),
            AnalyticField::SinPiProduct => "sin_pi_product".into(),
            AnalyticField::ExpSin => "exp_sin".into(),
            AnalyticField::SinCos => "sin_cos".into(),
            AnalyticField::Poly4 => "poly4".into(),
            AnalyticField::Gaussian => "gaussian".into(),
            AnalyticField::RadialPower { alpha } => format!("radial:{alpha}"),
        }
    }

    /// Parses a catalog name; `radial:<alpha>` carries its exponent.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("radial:") {
            let alpha: f64 = rest
                .parse()
                .map_err(|e| Error::Parse(format!("bad radial exponent {rest:?}: {e}")))?;
            if alpha <= 0.0 {
                return Err(Error::Parse("radial exponent must be positive".into()));
            }
            return Ok(AnalyticField::RadialPower { alpha });
        }
        match s {
            "linear_x" => Ok(AnalyticField::LinearX),
            "tilt" => Ok(AnalyticField::Tilt),
            "half_square" => Ok(AnalyticField::HalfSquareNorm),
            "saddle" => Ok(AnalyticField::Saddle),
            "sin_pi_product" => Ok(AnalyticField::SinPiProduct),
            "exp_sin" => Ok(AnalyticField::ExpSin),
            "sin_cos" => Ok(AnalyticField::SinCos),
            "poly4" => Ok(AnalyticField::Poly4),
            "gaussian" => Ok(AnalyticField::Gaussian),
            other => Err(Error::Parse(format!("unknown analytic field {other:?}"))),
        }
    }

    /// Affine and quadratic entries, on which second-order stencils are
    /// exact to rounding.
    pub fn exact_catalog() -> Vec<Self> {
        vec![
            AnalyticField::LinearX,
            AnalyticField::Tilt,
            AnalyticField::HalfSquareNorm,
            AnalyticField::Saddle,
        ]
    }

    /// Transcendental and quartic entries used for the convergence-order
    /// studies.
    pub fn smooth_catalog() -> Vec<Self> {
        vec![
            AnalyticField::SinPiProduct,
            AnalyticField::ExpSin,
            AnalyticField::SinCos,
            AnalyticField::Poly4,
            AnalyticField::Gaussian,
        ]
    }

    pub fn value<T: Real>(&self, x: &[T; 3], dim: usize) -> T {
        match self {
            AnalyticField::LinearX => x[0],
            AnalyticField::Tilt => {
                let c = tilt_coeffs::<T>();
                let mut v = T::of(0.25);
                for k in 0..dim {
                    v += c[k] * x[k];
                }
                v
            }
            AnalyticField::HalfSquareNorm => {
                (0..dim).map(|k| x[k] * x[k]).sum::<T>() * T::of(0.5)
            }
            AnalyticField::Saddle => x[0] * x[1],
            AnalyticField::SinPiProduct => {
                let pi = T::PI();
                (0..dim).map(|k| (pi * x[k]).sin()).fold(T::one(), |a, b| a * b)
            }
            AnalyticField::ExpSin => x[0].exp() * x[1].sin(),
            AnalyticField::SinCos => x[0].sin() * x[1].cos(),
            AnalyticField::Poly4 => {
                let (x1, y) = (x[0], x[1]);
                let x2 = x1 * x1;
                let x3 = x2 * x1;
                let y2 = y * y;
                let y3 = y2 * y;
                x2 * x2 - T::of(2.0) * x3 * y + T::of(3.0) * x2 * y2 - x1 * y3
                    + T::of(0.5) * y2 * y2
                    + x3
                    - y3
                    + T::of(2.0) * x2 * y
            }
            AnalyticField::Gaussian => {
                let r2 = (0..dim).map(|k| x[k] * x[k]).sum::<T>();
                (-r2).exp()
            }
            AnalyticField::RadialPower { alpha } => {
                let r2 = (0..dim).map(|k| x[k] * x[k]).sum::<T>();
                r2.sqrt().powf(T::of(*alpha))
            }
        }
    }

    pub fn gradient<T: Real>(&self, x: &[T; 3], dim: usize) -> [T; 3] {
        let mut g = [T::zero(); 3];
        match self {
            AnalyticField::LinearX => g[0] = T::one(),
            AnalyticField::Tilt => {
                let c = tilt_coeffs::<T>();
                g[..dim].copy_from_slice(&c[..dim]);
            }
            AnalyticField::HalfSquareNorm => g[..dim].copy_from_slice(&x[..dim]),
            AnalyticField::Saddle => {
                g[0] = x[1];
                g[1] = x[0];
            }
            AnalyticField::SinPiProduct => {
                let pi = T::PI();
                for k in 0..dim {
                    let mut v = pi;
                    for l in 0..dim {
                        v = if l == k {
                            v * (pi * x[l]).cos()
                        } else {
                            v * (pi * x[l]).sin()
                        };
                    }
                    g[k] = v;
                }
            }
            AnalyticField::ExpSin => {
                g[0] = x[0].exp() * x[1].sin();
                g[1] = x[0].exp() * x[1].cos();
            }
            AnalyticField::SinCos => {
                g[0] = x[0].cos() * x[1].cos();
                g[1] = -x[0].sin() * x[1].sin();
            }
            AnalyticField::Poly4 => {
                let (x1, y) = (x[0], x[1]);
                let x2 = x1 * x1;
                let x3 = x2 * x1;
                let y2 = y * y;
                let y3 = y2 * y;
                g[0] = T::of(4.0) * x3 - T::of(6.0) * x2 * y + T::of(6.0) * x1 * y2 - y3
                    + T::of(3.0) * x2
                    + T::of(4.0) * x1 * y;
                g[1] = -T::of(2.0) * x3 + T::of(6.0) * x2 * y - T::of(3.0) * x1 * y2
                    + T::of(2.0) * y3
                    - T::of(3.0) * y2
                    + T::of(2.0) * x2;
            }
            AnalyticField::Gaussian => {
                let v = self.value(x, dim);
                for k in 0..dim {
                    g[k] = -T::of(2.0) * x[k] * v;
                }
            }
            AnalyticField::RadialPower { alpha } => {
                let a = T::of(*alpha);
                let r2 = (0..dim).map(|k| x[k] * x[k]).sum::<T>();
                let r = r2.sqrt();
                let scale = a * r.powf(a - T::of(2.0));
                for k in 0..dim {
                    g[k] = scale * x[k];
                }
            }
        }
        g
    }

    pub fn hessian<T: Real>(&self, x: &[T; 3], dim: usize) -> [[T; 3]; 3] {
        let mut h = [[T::zero(); 3]; 3];
        match self {
            AnalyticField::LinearX | AnalyticField::Tilt => {}
            AnalyticField::HalfSquareNorm => {
                for k in 0..dim {
                    h[k][k] = T::one();
                }
            }
            AnalyticField::Saddle => {
                h[0][1] = T::one();
                h[1][0] = T::one();
            }
            AnalyticField::SinPiProduct => {
                let pi = T::PI();
                let pi2 = pi * pi;
                let v = self.value(x, dim);
                for i in 0..dim {
                    h[i][i] = -pi2 * v;
                    for j in (i + 1)..dim {
                        let mut w = pi2;
                        for l in 0..dim {
                            w = if l == i || l == j {
                                w * (pi * x[l]).cos()
                            } else {
                                w * (pi * x[l]).sin()
                            };
                        }
                        h[i][j] = w;
                        h[j][i] = w;
                    }
                }
            }
            AnalyticField::ExpSin => {
                let (ex, s, c) = (x[0].exp(), x[1].sin(), x[1].cos());
                h[0][0] = ex * s;
                h[0][1] = ex * c;
                h[1][0] = ex * c;
                h[1][1] = -ex * s;
            }
            AnalyticField::SinCos => {
                let v = x[0].sin() * x[1].cos();
                h[0][0] = -v;
                h[1][1] = -v;
                h[0][1] = -x[0].cos() * x[1].sin();
                h[1][0] = h[0][1];
            }
            AnalyticField::Poly4 => {
                let (x1, y) = (x[0], x[1]);
                let x2 = x1 * x1;
                let y2 = y * y;
                h[0][0] = T::of(12.0) * x2 - T::of(12.0) * x1 * y + T::of(6.0) * y2
                    + T::of(6.0) * x1
                    + T::of(4.0) * y;
                h[0][1] = -T::of(6.0) * x2 + T::of(12.0) * x1 * y - T::of(3.0) * y2
                    + T::of(4.0) * x1;
                h[1][0] = h[0][1];
                h[1][1] = T::of(6.0) * x2 - T::of(6.0) * x1 * y + T::of(6.0) * y2 - T::of(6.0) * y;
            }
            AnalyticField::Gaussian => {
                let v = self.value(x, dim);
                for i in 0..dim {
                    for j in 0..dim {
                        let outer = T::of(4.0) * x[i] * x[j] * v;
                        h[i][j] = if i == j { outer - T::of(2.0) * v } else { outer };
                    }
                }
            }
            AnalyticField::RadialPower { alpha } => {
                let a = T::of(*alpha);
                let r2 = (0..dim).map(|k| x[k] * x[k]).sum::<T>();
                let r = r2.sqrt();
                let s1 = a * r.powf(a - T::of(2.0));
                let s2 = a * (a - T::of(2.0)) * r.powf(a - T::of(4.0));
                for i in 0..dim {
                    for j in 0..dim {
                        let outer = s2 * x[i] * x[j];
                        h[i][j] = if i == j { outer + s1 } else { outer };
                    }
                }
            }
        }
        h
    }
}

fn tilt_coeffs<T: Real>() -> [T; 3] {
    [T::of(0.625), T::of(-0.375), T::of(0.125)]
}

/// Named ambient vector expressions with exact Jacobians, for the
/// divergence-structure checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorExpr {
    /// X(x) = x
    Identity,
    /// constant vector (0.7, −0.3, 0.2)
    Constant,
    /// X = (sin x₂, cos x₁) padded with x₃ in 3D
    Swirl,
    /// X = (sin(x₁+2x₂), cos(x₁x₂)) padded with x₂x₃ in 3D; its components
    /// mix the variables, so nested stencil errors do not cancel
    Mixed,
}

impl VectorExpr {
    pub fn value<T: Real>(&self, x: &[T; 3], dim: usize) -> [T; 3] {
        match self {
            VectorExpr::Identity => {
                let mut v = [T::zero(); 3];
                v[..dim].copy_from_slice(&x[..dim]);
                v
            }
            VectorExpr::Constant => [T::of(0.7), T::of(-0.3), T::of(0.2)],
            VectorExpr::Swirl => {
                let mut v = [T::zero(); 3];
                v[0] = x[1].sin();
                v[1] = x[0].cos();
                if dim == 3 {
                    v[2] = x[2];
                }
                v
            }
            VectorExpr::Mixed => {
                let mut v = [T::zero(); 3];
                v[0] = (x[0] + T::of(2.0) * x[1]).sin();
                v[1] = (x[0] * x[1]).cos();
                if dim == 3 {
                    v[2] = x[1] * x[2];
                }
                v
            }
        }
    }

    pub fn jacobian<T: Real>(&self, x: &[T; 3], dim: usize) -> [[T; 3]; 3] {
        let mut j = [[T::zero(); 3]; 3];
        match self {
            VectorExpr::Identity => {
                for k in 0..dim {
                    j[k][k] = T::one();
                }
            }
            VectorExpr::Constant => {}
            VectorExpr::Swirl => {
                j[0][1] = x[1].cos();
                j[1][0] = -x[0].sin();
                if dim == 3 {
                    j[2][2] = T::one();
                }
            }
            VectorExpr::Mixed => {
                let c = (x[0] + T::of(2.0) * x[1]).cos();
                let s = (x[0] * x[1]).sin();
                j[0][0] = c;
                j[0][1] = T::of(2.0) * c;
                j[1][0] = -x[1] * s;
                j[1][1] = -x[0] * s;
                if dim == 3 {
                    j[2][1] = x[2];
                    j[2][2] = x[1];
                }
            }
        }
        j
    }
}
