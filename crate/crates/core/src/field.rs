//! Grid-sampled scalar, vector and matrix fields with second-order
//! finite-difference calculus, plus pointwise verification of the
//! divergence-form identities and the gradient-field inequality.
//!
//! Derivative operators use central stencils wherever both neighbors are
//! available and fall back to second-order one-sided stencils at
//! boundary-adjacent nodes. The residual operators chain several
//! differences; those chains use central stencils only, because mixing
//! one-sided and central inner stencils costs an order under the outer
//! difference. Each field carries a defined-mask, so nested operators
//! shrink their support instead of polluting values.

use std::io::Write as IoWrite;
use std::sync::Arc;

use crate::analytic::AnalyticField;
use crate::error::{Error, Result};
use crate::grid::GridDomain;
use crate::profile::OperatorProfile;
use crate::scalar::Real;

// ---------------------------------------------------------------------------
// field types
// ---------------------------------------------------------------------------

/// Scalar samples on the active nodes of a grid domain.
#[derive(Debug, Clone)]
pub struct ScalarField<T> {
    domain: Arc<GridDomain<T>>,
    values: Vec<T>,
    defined: Vec<bool>,
}

/// Vector samples (one d-vector per node, d = 2 or 3).
#[derive(Debug, Clone)]
pub struct VectorField<T> {
    domain: Arc<GridDomain<T>>,
    values: Vec<[T; 3]>,
    defined: Vec<bool>,
}

/// Matrix samples (Jacobians and Hessians).
#[derive(Debug, Clone)]
pub struct MatrixField<T> {
    domain: Arc<GridDomain<T>>,
    values: Vec<[[T; 3]; 3]>,
    defined: Vec<bool>,
}

macro_rules! common_field_impl {
    ($ty:ident, $val:ty, $zero:expr) => {
        impl<T: Real> $ty<T> {
            pub fn domain(&self) -> &Arc<GridDomain<T>> {
                &self.domain
            }

            pub fn is_defined(&self, idx: usize) -> bool {
                self.defined[idx]
            }

            pub fn defined_count(&self) -> usize {
                self.defined.iter().filter(|&&d| d).count()
            }

            pub fn defined_nodes(&self) -> impl Iterator<Item = usize> + '_ {
                (0..self.defined.len()).filter(move |&i| self.defined[i])
            }

            pub fn value(&self, idx: usize) -> &$val {
                &self.values[idx]
            }

            pub fn set(&mut self, idx: usize, v: $val) {
                self.values[idx] = v;
                self.defined[idx] = true;
            }
        }
    };
}

common_field_impl!(ScalarField, T, T::zero());
common_field_impl!(VectorField, [T; 3], [T::zero(); 3]);
common_field_impl!(MatrixField, [[T; 3]; 3], [[T::zero(); 3]; 3]);

impl<T: Real> ScalarField<T> {
    pub fn zeros(domain: &Arc<GridDomain<T>>) -> Self {
        let n = domain.node_count();
        let defined = (0..n).map(|i| domain.is_active(i)).collect();
        Self {
            domain: domain.clone(),
            values: vec![T::zero(); n],
            defined,
        }
    }

    /// Samples a closure of node position on all active nodes.
    pub fn sample(domain: &Arc<GridDomain<T>>, f: impl Fn(&[T; 3]) -> T) -> Self {
        let n = domain.node_count();
        let mut values = vec![T::zero(); n];
        let mut defined = vec![false; n];
        for idx in 0..n {
            if domain.is_active(idx) {
                values[idx] = f(&domain.node_pos(idx));
                defined[idx] = true;
            }
        }
        Self {
            domain: domain.clone(),
            values,
            defined,
        }
    }

    pub fn from_analytic(domain: &Arc<GridDomain<T>>, expr: &AnalyticField) -> Self {
        let dim = domain.dim();
        Self::sample(domain, |x| expr.value(x, dim))
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Largest absolute value over the defined nodes.
    pub fn max_abs(&self) -> T {
        self.defined_nodes()
            .map(|i| self.values[i].abs())
            .fold(T::zero(), T::max)
    }

    /// Smallest value over the defined nodes.
    pub fn min_defined(&self) -> T {
        self.defined_nodes()
            .map(|i| self.values[i])
            .fold(T::infinity(), T::min)
    }

    /// Largest value over the defined nodes.
    pub fn max_defined(&self) -> T {
        self.defined_nodes()
            .map(|i| self.values[i])
            .fold(-T::infinity(), T::max)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            domain: self.domain.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            defined: self.defined.clone(),
        }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert!(self.domain.same_layout(&other.domain));
        let defined: Vec<bool> = self
            .defined
            .iter()
            .zip(&other.defined)
            .map(|(&a, &b)| a && b)
            .collect();
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self {
            domain: self.domain.clone(),
            values,
            defined,
        }
    }

    /// Bilinear interpolation at a 2D point; falls back to the nearest
    /// defined corner of the containing cell when the full cell is not
    /// available (cut cells along a staircase boundary).
    pub fn interpolate(&self, x: [T; 2]) -> Option<T> {
        let dom = self.domain.as_ref();
        if dom.dim() != 2 {
            return None;
        }
        let h = dom.spacing();
        let origin = dom.origin();
        let counts = dom.counts();
        let fx = ((x[0] - origin[0]) / h).to_f64()?;
        let fy = ((x[1] - origin[1]) / h).to_f64()?;
        let i = (fx.floor() as isize).clamp(0, counts[0] as isize - 2) as usize;
        let j = (fy.floor() as isize).clamp(0, counts[1] as isize - 2) as usize;
        let tx = (x[0] - origin[0]) / h - T::of_usize(i);
        let ty = (x[1] - origin[1]) / h - T::of_usize(j);
        let corners = [
            dom.index(i, j, 0),
            dom.index(i + 1, j, 0),
            dom.index(i, j + 1, 0),
            dom.index(i + 1, j + 1, 0),
        ];
        if corners.iter().all(|&c| self.defined[c]) {
            let v00 = self.values[corners[0]];
            let v10 = self.values[corners[1]];
            let v01 = self.values[corners[2]];
            let v11 = self.values[corners[3]];
            let one = T::one();
            return Some(
                v00 * (one - tx) * (one - ty)
                    + v10 * tx * (one - ty)
                    + v01 * (one - tx) * ty
                    + v11 * tx * ty,
            );
        }
        // nearest defined corner
        let mut best = None;
        let mut best_d = T::infinity();
        for &c in &corners {
            if !self.defined[c] {
                continue;
            }
            let p = dom.node_pos(c);
            let d = (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2);
            if d < best_d {
                best_d = d;
                best = Some(self.values[c]);
            }
        }
        best
    }

    /// Writes `x,y[,z],value` rows for the defined nodes.
    pub fn write_csv<W: IoWrite>(&self, w: &mut W) -> std::io::Result<()> {
        let dim = self.domain.dim();
        if dim == 2 {
            writeln!(w, "x,y,value")?;
        } else {
            writeln!(w, "x,y,z,value")?;
        }
        for idx in self.defined_nodes() {
            let p = self.domain.node_pos(idx);
            if dim == 2 {
                writeln!(
                    w,
                    "{:.12e},{:.12e},{:.12e}",
                    p[0].to_f64().unwrap(),
                    p[1].to_f64().unwrap(),
                    self.values[idx].to_f64().unwrap()
                )?;
            } else {
                writeln!(
                    w,
                    "{:.12e},{:.12e},{:.12e},{:.12e}",
                    p[0].to_f64().unwrap(),
                    p[1].to_f64().unwrap(),
                    p[2].to_f64().unwrap(),
                    self.values[idx].to_f64().unwrap()
                )?;
            }
        }
        Ok(())
    }
}

impl<T: Real> VectorField<T> {
    pub fn sample(domain: &Arc<GridDomain<T>>, f: impl Fn(&[T; 3]) -> [T; 3]) -> Self {
        let n = domain.node_count();
        let mut values = vec![[T::zero(); 3]; n];
        let mut defined = vec![false; n];
        for idx in 0..n {
            if domain.is_active(idx) {
                values[idx] = f(&domain.node_pos(idx));
                defined[idx] = true;
            }
        }
        Self {
            domain: domain.clone(),
            values,
            defined,
        }
    }

    pub fn zeros(domain: &Arc<GridDomain<T>>) -> Self {
        Self::sample(domain, |_| [T::zero(); 3])
    }

    /// Largest Euclidean norm over the defined nodes.
    pub fn max_norm(&self) -> T {
        let d = self.domain.dim();
        self.defined_nodes()
            .map(|i| vec_norm(&self.values[i], d))
            .fold(T::zero(), T::max)
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert!(self.domain.same_layout(&other.domain));
        let defined: Vec<bool> = self
            .defined
            .iter()
            .zip(&other.defined)
            .map(|(&a, &b)| a && b)
            .collect();
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                let mut v = [T::zero(); 3];
                for k in 0..3 {
                    v[k] = a[k] - b[k];
                }
                v
            })
            .collect();
        Self {
            domain: self.domain.clone(),
            values,
            defined,
        }
    }
}

impl<T: Real> MatrixField<T> {
    /// Largest Hilbert–Schmidt norm over the defined nodes.
    pub fn max_norm(&self) -> T {
        let d = self.domain.dim();
        self.defined_nodes()
            .map(|i| mat_hs_norm2(&self.values[i], d).sqrt())
            .fold(T::zero(), T::max)
    }
}

// Pointwise helpers on fixed-size arrays, looping up to the grid
// dimension; public because downstream checks combine field values.

pub fn vec_norm<T: Real>(v: &[T; 3], d: usize) -> T {
    (0..d).map(|k| v[k] * v[k]).sum::<T>().sqrt()
}

pub fn mat_trace<T: Real>(m: &[[T; 3]; 3], d: usize) -> T {
    (0..d).map(|k| m[k][k]).sum()
}

pub fn mat_hs_norm2<T: Real>(m: &[[T; 3]; 3], d: usize) -> T {
    let mut s = T::zero();
    for i in 0..d {
        for j in 0..d {
            s += m[i][j] * m[i][j];
        }
    }
    s
}

pub fn mat_hs_inner_transpose<T: Real>(a: &[[T; 3]; 3], b: &[[T; 3]; 3], d: usize) -> T {
    // ⟨A, Bᵀ⟩ = Σ aᵢⱼ bⱼᵢ
    let mut s = T::zero();
    for i in 0..d {
        for j in 0..d {
            s += a[i][j] * b[j][i];
        }
    }
    s
}

pub fn mat_vec<T: Real>(m: &[[T; 3]; 3], v: &[T; 3], d: usize) -> [T; 3] {
    let mut out = [T::zero(); 3];
    for i in 0..d {
        for j in 0..d {
            out[i] += m[i][j] * v[j];
        }
    }
    out
}

// ---------------------------------------------------------------------------
// stencils
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum S1 {
    Central,
    Forward,
    Backward,
}

const S1_ORDER: [S1; 3] = [S1::Central, S1::Forward, S1::Backward];

/// First-derivative stencils, coefficients excluding the 1/h factor; the
/// zero-coefficient padding keeps the arrays fixed-size.
fn s1_terms(s: S1) -> [(isize, f64); 3] {
    match s {
        S1::Central => [(-1, -0.5), (1, 0.5), (0, 0.0)],
        S1::Forward => [(0, -1.5), (1, 2.0), (2, -0.5)],
        S1::Backward => [(0, 1.5), (-1, -2.0), (-2, 0.5)],
    }
}

/// Pure second-derivative stencils, excluding the 1/h² factor.
fn s2_terms(s: S1) -> [(isize, f64); 4] {
    match s {
        S1::Central => [(-1, 1.0), (0, -2.0), (1, 1.0), (0, 0.0)],
        S1::Forward => [(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)],
        S1::Backward => [(0, 2.0), (-1, -5.0), (-2, 4.0), (-3, -1.0)],
    }
}

/// Stencil-selection mode: `Fallback` prefers central and falls back to
/// one-sided; `CentralOnly` is for chained (nested) differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilMode {
    Fallback,
    CentralOnly,
}

fn s1_candidates(mode: StencilMode) -> &'static [S1] {
    match mode {
        StencilMode::Fallback => &S1_ORDER,
        StencilMode::CentralOnly => &S1_ORDER[..1],
    }
}

fn offsets_available<T: Real>(
    dom: &GridDomain<T>,
    defined: &[bool],
    idx: usize,
    axis: usize,
    terms: &[(isize, f64)],
) -> bool {
    terms.iter().all(|&(off, coeff)| {
        if coeff == 0.0 || off == 0 {
            return true;
        }
        match dom.neighbor(idx, axis, off) {
            Some(n) => defined[n],
            None => None::<usize>.is_some(),
        }
    }) && defined[idx]
}

fn pick_s1<T: Real>(
    dom: &GridDomain<T>,
    defined: &[bool],
    idx: usize,
    axis: usize,
    mode: StencilMode,
) -> Option<S1> {
    s1_candidates(mode)
        .iter()
        .copied()
        .find(|&s| offsets_available(dom, defined, idx, axis, &s1_terms(s)))
}

fn pick_s2<T: Real>(
    dom: &GridDomain<T>,
    defined: &[bool],
    idx: usize,
    axis: usize,
    mode: StencilMode,
) -> Option<S1> {
    s1_candidates(mode)
        .iter()
        .copied()
        .find(|&s| offsets_available(dom, defined, idx, axis, &s2_terms(s)))
}

fn apply_s1<T: Real>(
    dom: &GridDomain<T>,
    values: &dyn Fn(usize) -> T,
    idx: usize,
    axis: usize,
    s: S1,
) -> T {
    let mut acc = T::zero();
    for (off, coeff) in s1_terms(s) {
        if coeff == 0.0 {
            continue;
        }
        let n = if off == 0 {
            idx
        } else {
            dom.neighbor(idx, axis, off).expect("availability checked")
        };
        acc += T::of(coeff) * values(n);
    }
    acc / dom.spacing()
}

fn apply_s2<T: Real>(
    dom: &GridDomain<T>,
    values: &dyn Fn(usize) -> T,
    idx: usize,
    axis: usize,
    s: S1,
) -> T {
    let mut acc = T::zero();
    for (off, coeff) in s2_terms(s) {
        if coeff == 0.0 {
            continue;
        }
        let n = if off == 0 {
            idx
        } else {
            dom.neighbor(idx, axis, off).expect("availability checked")
        };
        acc += T::of(coeff) * values(n);
    }
    acc / (dom.spacing() * dom.spacing())
}

/// Mixed second derivative as a tensor product of two one-dimensional
/// first-derivative stencils applied directly to the samples; composing
/// the operators symbolically keeps the truncation error at O(h²)
/// uniformly over the stencil choice.
fn mixed_candidates() -> [(S1, S1); 9] {
    [
        (S1::Central, S1::Central),
        (S1::Central, S1::Forward),
        (S1::Central, S1::Backward),
        (S1::Forward, S1::Central),
        (S1::Backward, S1::Central),
        (S1::Forward, S1::Forward),
        (S1::Forward, S1::Backward),
        (S1::Backward, S1::Forward),
        (S1::Backward, S1::Backward),
    ]
}

fn mixed_node<T: Real>(
    dom: &GridDomain<T>,
    idx: usize,
    ax_i: usize,
    off_i: isize,
    ax_j: usize,
    off_j: isize,
) -> Option<usize> {
    let first = if off_i == 0 {
        idx
    } else {
        dom.neighbor(idx, ax_i, off_i)?
    };
    if off_j == 0 {
        Some(first)
    } else {
        dom.neighbor(first, ax_j, off_j)
    }
}

fn pick_mixed<T: Real>(
    dom: &GridDomain<T>,
    defined: &[bool],
    idx: usize,
    ax_i: usize,
    ax_j: usize,
    mode: StencilMode,
) -> Option<(S1, S1)> {
    let candidates: &[(S1, S1)] = match mode {
        StencilMode::Fallback => &mixed_candidates(),
        StencilMode::CentralOnly => &[(S1::Central, S1::Central)],
    };
    candidates.iter().copied().find(|&(si, sj)| {
        s1_terms(si).iter().all(|&(oi, ci)| {
            s1_terms(sj).iter().all(|&(oj, cj)| {
                if ci * cj == 0.0 {
                    return true;
                }
                match mixed_node(dom, idx, ax_i, oi, ax_j, oj) {
                    Some(n) => defined[n],
                    None => None::<usize>.is_some(),
                }
            })
        })
    })
}

fn apply_mixed<T: Real>(
    dom: &GridDomain<T>,
    values: &dyn Fn(usize) -> T,
    idx: usize,
    ax_i: usize,
    ax_j: usize,
    (si, sj): (S1, S1),
) -> T {
    let mut acc = T::zero();
    for (oi, ci) in s1_terms(si) {
        if ci == 0.0 {
            continue;
        }
        for (oj, cj) in s1_terms(sj) {
            if cj == 0.0 {
                continue;
            }
            let n = mixed_node(dom, idx, ax_i, oi, ax_j, oj).expect("availability checked");
            acc += T::of(ci * cj) * values(n);
        }
    }
    acc / (dom.spacing() * dom.spacing())
}

// ---------------------------------------------------------------------------
// derivative operators
// ---------------------------------------------------------------------------

fn ensure_nonempty<T>(count: usize, out: T) -> Result<T> {
    if count == 0 {
        Err(Error::GridTooCoarse)
    } else {
        Ok(out)
    }
}

/// Gradient with the given stencil mode.
pub fn gradient_mode<T: Real>(f: &ScalarField<T>, mode: StencilMode) -> Result<VectorField<T>> {
    let dom = f.domain.as_ref();
    let d = dom.dim();
    let n = dom.node_count();
    let mut values = vec![[T::zero(); 3]; n];
    let mut defined = vec![false; n];
    let getter = |i: usize| f.values[i];
    let mut count = 0;
    for idx in 0..n {
        if !f.defined[idx] {
            continue;
        }
        let mut g = [T::zero(); 3];
        let mut ok = true;
        for ax in 0..d {
            match pick_s1(dom, &f.defined, idx, ax, mode) {
                Some(s) => g[ax] = apply_s1(dom, &getter, idx, ax, s),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            values[idx] = g;
            defined[idx] = true;
            count += 1;
        }
    }
    ensure_nonempty(
        count,
        VectorField {
            domain: f.domain.clone(),
            values,
            defined,
        },
    )
}

/// Second-order gradient: central differences at interior nodes, one-sided
/// second-order stencils where a neighbor is missing. Exact on affine
/// samples.
pub fn gradient<T: Real>(f: &ScalarField<T>) -> Result<VectorField<T>> {
    gradient_mode(f, StencilMode::Fallback)
}

/// Hessian with the given stencil mode; symmetric by construction (the
/// mixed tensor stencils commute in their two axes).
pub fn hessian_mode<T: Real>(f: &ScalarField<T>, mode: StencilMode) -> Result<MatrixField<T>> {
    let dom = f.domain.as_ref();
    let d = dom.dim();
    let n = dom.node_count();
    let mut values = vec![[[T::zero(); 3]; 3]; n];
    let mut defined = vec![false; n];
    let getter = |i: usize| f.values[i];
    let mut count = 0;
    for idx in 0..n {
        if !f.defined[idx] {
            continue;
        }
        let mut h = [[T::zero(); 3]; 3];
        let mut ok = true;
        'axes: for i in 0..d {
            match pick_s2(dom, &f.defined, idx, i, mode) {
                Some(s) => h[i][i] = apply_s2(dom, &getter, idx, i, s),
                None => {
                    ok = false;
                    break 'axes;
                }
            }
            for j in (i + 1)..d {
                match pick_mixed(dom, &f.defined, idx, i, j, mode) {
                    Some(pair) => {
                        let v = apply_mixed(dom, &getter, idx, i, j, pair);
                        h[i][j] = v;
                        h[j][i] = v;
                    }
                    None => {
                        ok = false;
                        break 'axes;
                    }
                }
            }
        }
        if ok {
            values[idx] = h;
            defined[idx] = true;
            count += 1;
        }
    }
    ensure_nonempty(
        count,
        MatrixField {
            domain: f.domain.clone(),
            values,
            defined,
        },
    )
}

/// Symmetric second-order Hessian, exact on quadratic samples.
pub fn hessian<T: Real>(f: &ScalarField<T>) -> Result<MatrixField<T>> {
    hessian_mode(f, StencilMode::Fallback)
}

/// Jacobian J[i][j] = ∂Vᵢ/∂xⱼ with the given stencil mode.
pub fn jacobian_mode<T: Real>(v: &VectorField<T>, mode: StencilMode) -> Result<MatrixField<T>> {
    let dom = v.domain.as_ref();
    let d = dom.dim();
    let n = dom.node_count();
    let mut values = vec![[[T::zero(); 3]; 3]; n];
    let mut defined = vec![false; n];
    let mut count = 0;
    for idx in 0..n {
        if !v.defined[idx] {
            continue;
        }
        let mut j = [[T::zero(); 3]; 3];
        let mut ok = true;
        'axes: for ax in 0..d {
            match pick_s1(dom, &v.defined, idx, ax, mode) {
                Some(s) => {
                    for comp in 0..d {
                        let getter = |i: usize| v.values[i][comp];
                        j[comp][ax] = apply_s1(dom, &getter, idx, ax, s);
                    }
                }
                None => {
                    ok = false;
                    break 'axes;
                }
            }
        }
        if ok {
            values[idx] = j;
            defined[idx] = true;
            count += 1;
        }
    }
    ensure_nonempty(
        count,
        MatrixField {
            domain: v.domain.clone(),
            values,
            defined,
        },
    )
}

pub fn jacobian<T: Real>(v: &VectorField<T>) -> Result<MatrixField<T>> {
    jacobian_mode(v, StencilMode::Fallback)
}

pub fn divergence_mode<T: Real>(v: &VectorField<T>, mode: StencilMode) -> Result<ScalarField<T>> {
    let j = jacobian_mode(v, mode)?;
    let d = v.domain.dim();
    Ok(ScalarField {
        domain: v.domain.clone(),
        values: j.values.iter().map(|m| mat_trace(m, d)).collect(),
        defined: j.defined,
    })
}

pub fn divergence<T: Real>(v: &VectorField<T>) -> Result<ScalarField<T>> {
    divergence_mode(v, StencilMode::Fallback)
}

// ---------------------------------------------------------------------------
// identity residuals
// ---------------------------------------------------------------------------

/// Residual of |D²u|² = div(D²u Du − Δu Du) + (Δu)², per node.
///
/// Computed with nested central differences; the result is defined on the
/// nodes whose full chain of stencils is available, and is zero to rounding
/// on affine and quadratic samples.
pub fn basic_identity_residual<T: Real>(u: &ScalarField<T>) -> Result<ScalarField<T>> {
    let d = u.domain.dim();
    let g = gradient_mode(u, StencilMode::CentralOnly)?;
    let h = hessian_mode(u, StencilMode::CentralOnly)?;

    // W = D²u Du − Δu Du
    let n = u.domain.node_count();
    let mut w = VectorField {
        domain: u.domain.clone(),
        values: vec![[T::zero(); 3]; n],
        defined: vec![false; n],
    };
    for idx in 0..n {
        if !(g.defined[idx] && h.defined[idx]) {
            continue;
        }
        let hg = mat_vec(&h.values[idx], &g.values[idx], d);
        let lap = mat_trace(&h.values[idx], d);
        let mut val = [T::zero(); 3];
        for k in 0..d {
            val[k] = hg[k] - lap * g.values[idx][k];
        }
        w.values[idx] = val;
        w.defined[idx] = true;
    }

    let div_w = divergence_mode(&w, StencilMode::CentralOnly)?;
    let mut out = ScalarField {
        domain: u.domain.clone(),
        values: vec![T::zero(); n],
        defined: vec![false; n],
    };
    let mut count = 0;
    for idx in 0..n {
        if !(div_w.defined[idx] && h.defined[idx]) {
            continue;
        }
        let lap = mat_trace(&h.values[idx], d);
        out.values[idx] = mat_hs_norm2(&h.values[idx], d) - div_w.values[idx] - lap * lap;
        out.defined[idx] = true;
        count += 1;
    }
    ensure_nonempty(count, out)
}

/// Residual of div((DX − tr(DX)I)X) = ⟨DX, DXᵀ⟩ − (tr DX)², per node.
pub fn divergence_structure_residual<T: Real>(x: &VectorField<T>) -> Result<ScalarField<T>> {
    let d = x.domain.dim();
    let j = jacobian_mode(x, StencilMode::CentralOnly)?;
    let n = x.domain.node_count();

    let mut y = VectorField {
        domain: x.domain.clone(),
        values: vec![[T::zero(); 3]; n],
        defined: vec![false; n],
    };
    for idx in 0..n {
        if !(j.defined[idx] && x.defined[idx]) {
            continue;
        }
        let tr = mat_trace(&j.values[idx], d);
        let jx = mat_vec(&j.values[idx], &x.values[idx], d);
        let mut val = [T::zero(); 3];
        for k in 0..d {
            val[k] = jx[k] - tr * x.values[idx][k];
        }
        y.values[idx] = val;
        y.defined[idx] = true;
    }

    let div_y = divergence_mode(&y, StencilMode::CentralOnly)?;
    let mut out = ScalarField {
        domain: x.domain.clone(),
        values: vec![T::zero(); n],
        defined: vec![false; n],
    };
    let mut count = 0;
    for idx in 0..n {
        if !(div_y.defined[idx] && j.defined[idx]) {
            continue;
        }
        let tr = mat_trace(&j.values[idx], d);
        let rhs = mat_hs_inner_transpose(&j.values[idx], &j.values[idx], d) - tr * tr;
        out.values[idx] = div_y.values[idx] - rhs;
        out.defined[idx] = true;
        count += 1;
    }
    ensure_nonempty(count, out)
}

/// Norm of the vector residual (Du⊗Du)D²uDu − (tr((Du⊗Du)D²u))Du, per node.
/// The two routes agree algebraically, so this measures pure rounding for
/// exact derivatives and stays at rounding level for sampled ones.
pub fn infinity_laplacian_identity_residual<T: Real>(
    u: &ScalarField<T>,
) -> Result<ScalarField<T>> {
    let d = u.domain.dim();
    let g = gradient_mode(u, StencilMode::CentralOnly)?;
    let h = hessian_mode(u, StencilMode::CentralOnly)?;
    let n = u.domain.node_count();
    let mut out = ScalarField {
        domain: u.domain.clone(),
        values: vec![T::zero(); n],
        defined: vec![false; n],
    };
    let mut count = 0;
    for idx in 0..n {
        if !(g.defined[idx] && h.defined[idx]) {
            continue;
        }
        let gv = &g.values[idx];
        // outer product matrix Du⊗Du
        let mut outer = [[T::zero(); 3]; 3];
        for i in 0..d {
            for j in 0..d {
                outer[i][j] = gv[i] * gv[j];
            }
        }
        let hg = mat_vec(&h.values[idx], gv, d);
        let lhs = mat_vec(&outer, &hg, d);
        // tr((Du⊗Du) D²u)
        let mut tr = T::zero();
        for i in 0..d {
            for j in 0..d {
                tr += outer[i][j] * h.values[idx][j][i];
            }
        }
        let mut res = [T::zero(); 3];
        for k in 0..d {
            res[k] = lhs[k] - tr * gv[k];
        }
        out.values[idx] = vec_norm(&res, d);
        out.defined[idx] = true;
        count += 1;
    }
    ensure_nonempty(count, out)
}

// ---------------------------------------------------------------------------
// gradient-field inequality
// ---------------------------------------------------------------------------

/// Per-node slack (right side minus left side) of the pointwise inequality
///
///   c|DV_b|² ≤ div((D(V_b−W) − tr(D(V_b−W))I)(V_b−W))
///              + C(|DW|² + (b/a)²(div V_a)²),
///
/// with V_a = a(|Du|)Du and V_b = b(|Du|)Du built from the profile. With
/// `w` absent the W-terms vanish and the inequality is the plain
/// gradient-field bound. The constants should come from
/// [`OperatorProfile::key_inequality_constants`]; for smooth samples the
/// slack is bounded below by −K·h² with K from a refinement calibration.
pub fn key_inequality_slack<T: Real>(
    u: &ScalarField<T>,
    profile: &OperatorProfile<T>,
    w: Option<&VectorField<T>>,
    constants: (T, T),
) -> Result<ScalarField<T>> {
    let d = u.domain.dim();
    if !profile.cordes_window_ok(d) {
        return Err(Error::WindowViolated { n: d });
    }
    if let Some(wf) = w {
        if !u.domain.same_layout(&wf.domain) {
            return Err(Error::FieldMismatch("W lives on a different grid".into()));
        }
    }
    let (c_small, c_big) = constants;
    let n = u.domain.node_count();
    let g = gradient_mode(u, StencilMode::CentralOnly)?;

    let mut vb = VectorField {
        domain: u.domain.clone(),
        values: vec![[T::zero(); 3]; n],
        defined: g.defined.clone(),
    };
    let mut va = vb.clone();
    let mut ratio_ba = vec![T::zero(); n];
    for idx in 0..n {
        if !g.defined[idx] {
            continue;
        }
        let t = vec_norm(&g.values[idx], d);
        let a = profile.a(t);
        let b = profile.b(t);
        ratio_ba[idx] = b / a;
        for k in 0..d {
            vb.values[idx][k] = b * g.values[idx][k];
            va.values[idx][k] = a * g.values[idx][k];
        }
    }

    let x = match w {
        Some(wf) => vb.sub(wf),
        None => vb.clone(),
    };
    let jx = jacobian_mode(&x, StencilMode::CentralOnly)?;

    // Y = (DX − tr(DX) I) X, its divergence carries the main term
    let mut y = VectorField {
        domain: u.domain.clone(),
        values: vec![[T::zero(); 3]; n],
        defined: vec![false; n],
    };
    for idx in 0..n {
        if !(jx.defined[idx] && x.defined[idx]) {
            continue;
        }
        let tr = mat_trace(&jx.values[idx], d);
        let jv = mat_vec(&jx.values[idx], &x.values[idx], d);
        for k in 0..d {
            y.values[idx][k] = jv[k] - tr * x.values[idx][k];
        }
        y.defined[idx] = true;
    }
    let div_y = divergence_mode(&y, StencilMode::CentralOnly)?;

    let jvb = jacobian_mode(&vb, StencilMode::CentralOnly)?;
    let jva = jacobian_mode(&va, StencilMode::CentralOnly)?;
    let jw = match w {
        Some(wf) => Some(jacobian_mode(wf, StencilMode::CentralOnly)?),
        None => None,
    };

    let mut out = ScalarField {
        domain: u.domain.clone(),
        values: vec![T::zero(); n],
        defined: vec![false; n],
    };
    let mut count = 0;
    for idx in 0..n {
        let jw_ok = jw.as_ref().map_or(true, |f| f.defined[idx]);
        if !(div_y.defined[idx] && jvb.defined[idx] && jva.defined[idx] && jw_ok) {
            continue;
        }
        let div_va = mat_trace(&jva.values[idx], d);
        let dw2 = jw
            .as_ref()
            .map_or(T::zero(), |f| mat_hs_norm2(&f.values[idx], d));
        let lhs = c_small * mat_hs_norm2(&jvb.values[idx], d);
        let rhs = div_y.values[idx]
            + c_big * (dw2 + ratio_ba[idx] * ratio_ba[idx] * div_va * div_va);
        out.values[idx] = rhs - lhs;
        out.defined[idx] = true;
        count += 1;
    }
    ensure_nonempty(count, out)
}

/// Pointwise check of the quadratic splitting used to absorb the W cross
/// terms:
///
///   2(⟨DX, DWᵀ⟩ − tr(DX)tr(DW)) + ⟨DW, DWᵀ⟩ − (tr DW)²
///     ≤ (c/2)|D(X+W)|² + C|DW|²
///
/// with C = 2(n+1)(1 + 2/c). Returns true when it holds at every jointly
/// defined node (valid for grid dimensions 2 and 3).
pub fn young_split_check<T: Real>(
    x: &VectorField<T>,
    w: &VectorField<T>,
    c: T,
) -> Result<bool> {
    if !x.domain.same_layout(&w.domain) {
        return Err(Error::FieldMismatch("X and W live on different grids".into()));
    }
    let d = x.domain.dim();
    let jx = jacobian_mode(x, StencilMode::CentralOnly)?;
    let jw = jacobian_mode(w, StencilMode::CentralOnly)?;
    let big_c = T::of(2.0) * T::of_usize(d + 1) * (T::one() + T::of(2.0) / c);
    let mut checked = 0usize;
    for idx in 0..x.domain.node_count() {
        if !(jx.defined[idx] && jw.defined[idx]) {
            continue;
        }
        checked += 1;
        let a = &jx.values[idx];
        let b = &jw.values[idx];
        let tr_a = mat_trace(a, d);
        let tr_b = mat_trace(b, d);
        let lhs = T::of(2.0) * (mat_hs_inner_transpose(a, b, d) - tr_a * tr_b)
            + mat_hs_inner_transpose(b, b, d)
            - tr_b * tr_b;
        let mut sum = [[T::zero(); 3]; 3];
        for i in 0..d {
            for j in 0..d {
                sum[i][j] = a[i][j] + b[i][j];
            }
        }
        let rhs = c / T::of(2.0) * mat_hs_norm2(&sum, d) + big_c * mat_hs_norm2(b, d);
        let scale = T::one() + mat_hs_norm2(a, d) + mat_hs_norm2(b, d);
        if lhs > rhs + T::of(1e-12) * scale {
            return Ok(false);
        }
    }
    if checked == 0 {
        return Err(Error::GridTooCoarse);
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::VectorExpr;

    fn square_domain(cells: usize) -> Arc<GridDomain<f64>> {
        Arc::new(GridDomain::square([0.0, 0.0], 1.0, cells).unwrap())
    }

    fn cube_domain(cells: usize) -> Arc<GridDomain<f64>> {
        Arc::new(GridDomain::cube([0.0, 0.0, 0.0], 1.0, cells).unwrap())
    }

    #[test]
    fn gradient_exact_on_affine() {
        let dom = square_domain(16);
        let f = ScalarField::from_analytic(&dom, &AnalyticField::Tilt);
        let g = gradient(&f).unwrap();
        assert_eq!(g.defined_count(), dom.active_count());
        for idx in g.defined_nodes() {
            assert!((g.value(idx)[0] - 0.625).abs() <= 1e-14);
            assert!((g.value(idx)[1] + 0.375).abs() <= 1e-14);
        }
    }

    #[test]
    fn hessian_exact_on_quadratics() {
        let dom = square_domain(16);
        let f = ScalarField::from_analytic(&dom, &AnalyticField::HalfSquareNorm);
        let h = hessian(&f).unwrap();
        for idx in h.defined_nodes() {
            let m = h.value(idx);
            assert!((m[0][0] - 1.0).abs() <= 1e-12);
            assert!((m[1][1] - 1.0).abs() <= 1e-12);
            assert!(m[0][1].abs() <= 1e-12);
        }
        let f = ScalarField::from_analytic(&dom, &AnalyticField::Saddle);
        let h = hessian(&f).unwrap();
        for idx in h.defined_nodes() {
            let m = h.value(idx);
            assert!(m[0][0].abs() <= 1e-12);
            assert!((m[0][1] - 1.0).abs() <= 1e-12);
        }
    }

    fn hessian_max_error(cells: usize, expr: &AnalyticField) -> f64 {
        let dom = square_domain(cells);
        let f = ScalarField::from_analytic(&dom, expr);
        let h = hessian(&f).unwrap();
        let mut err = 0.0f64;
        for idx in h.defined_nodes() {
            let exact = expr.hessian(&dom.node_pos(idx), 2);
            let got = h.value(idx);
            for i in 0..2 {
                for j in 0..2 {
                    err = err.max((got[i][j] - exact[i][j]).abs());
                }
            }
        }
        err
    }

    /// Halving h divides the max-norm Hessian error by about 4.
    #[test]
    fn hessian_second_order_convergence() {
        let expr = AnalyticField::SinCos;
        let e1 = hessian_max_error(32, &expr);
        let e2 = hessian_max_error(64, &expr);
        let ratio = e1 / e2;
        assert!((3.2..=4.8).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn gradient_second_order_convergence() {
        let expr = AnalyticField::ExpSin;
        let err = |cells: usize| {
            let dom = square_domain(cells);
            let f = ScalarField::from_analytic(&dom, &expr);
            let g = gradient(&f).unwrap();
            let mut e = 0.0f64;
            for idx in g.defined_nodes() {
                let exact = expr.gradient(&dom.node_pos(idx), 2);
                for k in 0..2 {
                    e = e.max((g.value(idx)[k] - exact[k]).abs());
                }
            }
            e
        };
        let ratio = err(32) / err(64);
        assert!((3.2..=4.8).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn basic_identity_exact_on_quadratics() {
        let dom = square_domain(32);
        for expr in AnalyticField::exact_catalog() {
            let u = ScalarField::from_analytic(&dom, &expr);
            let r = basic_identity_residual(&u).unwrap();
            assert!(r.defined_count() > 0);
            assert!(
                r.max_abs() <= 1e-12,
                "{}: residual {}",
                expr.name(),
                r.max_abs()
            );
        }
    }

    #[test]
    fn basic_identity_second_order() {
        let run = |cells: usize| {
            let dom = square_domain(cells);
            let u = ScalarField::from_analytic(&dom, &AnalyticField::ExpSin);
            basic_identity_residual(&u).unwrap().max_abs()
        };
        let ratio = run(32) / run(64);
        assert!((3.2..=4.8).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn divergence_structure_exact_cases() {
        let dom = square_domain(24);
        // X = x: both sides equal −2
        let x = VectorField::sample(&dom, |p| VectorExpr::Identity.value(p, 2));
        let r = divergence_structure_residual(&x).unwrap();
        assert!(r.max_abs() <= 1e-12, "identity field residual {}", r.max_abs());
        // constant X: both sides zero
        let x = VectorField::sample(&dom, |p| VectorExpr::Constant.value(p, 2));
        let r = divergence_structure_residual(&x).unwrap();
        assert!(r.max_abs() <= 1e-12);
        // separable components make the discrete residual collapse to
        // rounding as well
        let x = VectorField::sample(&dom, |p| VectorExpr::Swirl.value(p, 2));
        let r = divergence_structure_residual(&x).unwrap();
        assert!(r.max_abs() <= 1e-11, "swirl residual {}", r.max_abs());
    }

    #[test]
    fn divergence_structure_second_order() {
        let run = |cells: usize| {
            let dom = square_domain(cells);
            let x = VectorField::sample(&dom, |p| VectorExpr::Mixed.value(p, 2));
            divergence_structure_residual(&x).unwrap().max_abs()
        };
        let ratio = run(32) / run(64);
        assert!((3.2..=4.8).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn infinity_identity_is_rounding_level() {
        let dom = square_domain(32);
        for expr in [AnalyticField::Saddle, AnalyticField::Tilt, AnalyticField::Poly4] {
            let u = ScalarField::from_analytic(&dom, &expr);
            let r = infinity_laplacian_identity_residual(&u).unwrap();
            assert!(
                r.max_abs() <= 1e-11,
                "{}: residual {}",
                expr.name(),
                r.max_abs()
            );
        }
    }

    #[test]
    fn slack_zero_on_affine_data() {
        let dom = square_domain(24);
        let profile = OperatorProfile::new(3.0, 1e-4, 0.0).unwrap();
        let constants = profile.key_inequality_constants(2).unwrap();
        let u = ScalarField::from_analytic(&dom, &AnalyticField::Tilt);
        let slack = key_inequality_slack(&u, &profile, None, constants).unwrap();
        assert!(slack.max_abs() <= 1e-10, "slack {}", slack.max_abs());
    }

    #[test]
    fn slack_reduces_to_basic_identity_for_p2() {
        // p = 2, β = 0: V_b = Du, V_a = Du, and the slack field equals
        // (1−c)|D²u|² + (C−1)(Δu)² − (identity residual) up to O(h²)
        let dom = square_domain(48);
        let profile = OperatorProfile::new(2.0, 1e-4, 0.0).unwrap();
        let (c, big_c) = profile.key_inequality_constants(2).unwrap();
        let u = ScalarField::from_analytic(&dom, &AnalyticField::SinCos);
        let slack = key_inequality_slack(&u, &profile, None, (c, big_c)).unwrap();
        let h = hessian_mode(&u, StencilMode::CentralOnly).unwrap();
        let mut max_dev = 0.0f64;
        for idx in slack.defined_nodes() {
            if !h.defined[idx] {
                continue;
            }
            let hm = h.value(idx);
            let lap = mat_trace(hm, 2);
            // |Du|² ≈ t², with a = b = 1 + O(ε) the formula below ignores the
            // O(ε) offset of a(t) relative to 1
            let formula = (1.0 - c) * mat_hs_norm2(hm, 2) + (big_c - 1.0) * lap * lap;
            max_dev = max_dev.max((slack.value(idx) - formula).abs());
        }
        let h_sq = dom.spacing() * dom.spacing();
        assert!(
            max_dev <= 300.0 * h_sq + 1e-3,
            "max deviation {max_dev} vs h² = {h_sq}"
        );
    }

    #[test]
    fn slack_nonnegative_up_to_h2_budget() {
        let profile = OperatorProfile::new(3.0, 1e-4, 0.0).unwrap();
        let constants = profile.key_inequality_constants(2).unwrap();
        let run = |cells: usize| {
            let dom = square_domain(cells);
            let u = ScalarField::from_analytic(&dom, &AnalyticField::HalfSquareNorm);
            key_inequality_slack(&u, &profile, None, constants)
                .unwrap()
                .min_defined()
        };
        let m64 = run(64);
        let m128 = run(128);
        assert!(m64 >= -1e-4, "min slack at h=1/64: {m64}");
        assert!(m128 >= -1e-6, "min slack at h=1/128: {m128}");
    }

    #[test]
    fn slack_rejects_window_violation() {
        let dom = cube_domain(8);
        let profile = OperatorProfile::new(5.0, 1e-4, 0.0).unwrap();
        let u = ScalarField::from_analytic(&dom, &AnalyticField::HalfSquareNorm);
        let err = key_inequality_slack(&u, &profile, None, (0.1, 10.0));
        assert!(matches!(err, Err(Error::WindowViolated { n: 3 })));
    }

    #[test]
    fn slack_invariant_under_constant_shift() {
        let dom = square_domain(32);
        let profile = OperatorProfile::new(2.5, 1e-3, 0.0).unwrap();
        let constants = profile.key_inequality_constants(2).unwrap();
        let u = ScalarField::from_analytic(&dom, &AnalyticField::SinCos);
        let shifted = u.map(|v| v + 0.5);
        let s1 = key_inequality_slack(&u, &profile, None, constants).unwrap();
        let s2 = key_inequality_slack(&shifted, &profile, None, constants).unwrap();
        let mut max_dev = 0.0f64;
        for idx in s1.defined_nodes() {
            max_dev = max_dev.max((s1.value(idx) - s2.value(idx)).abs());
        }
        assert!(max_dev <= 1e-10, "shift changed slack by {max_dev}");
    }

    #[test]
    fn young_split_trivial_cases() {
        let dom = square_domain(16);
        let x = VectorField::sample(&dom, |p| VectorExpr::Swirl.value(p, 2));
        let w0 = VectorField::zeros(&dom);
        assert!(young_split_check(&x, &w0, 0.25).unwrap());
        // X = 0: the left side is at most (n+1)|DW|²
        let x0 = VectorField::zeros(&dom);
        let w = VectorField::sample(&dom, |p| VectorExpr::Swirl.value(p, 2));
        assert!(young_split_check(&x0, &w, 0.25).unwrap());
    }

    #[test]
    fn young_split_random_smooth_fields() {
        let dom = square_domain(24);
        for (ax, ay, bx) in [(1.0, 0.7, -0.4), (0.3, -1.1, 0.9), (2.0, 0.2, 0.5)] {
            let x = VectorField::sample(&dom, |p| {
                [
                    (ax * p[0] + ay * p[1]).sin(),
                    (ax * p[0] - ay * p[1]).cos(),
                    0.0,
                ]
            });
            let w = VectorField::sample(&dom, |p| {
                [(bx * p[1]).cos(), (bx * p[0] * p[1]).sin(), 0.0]
            });
            for &c in &[0.1, 0.25, 0.5] {
                assert!(young_split_check(&x, &w, c).unwrap());
            }
        }
    }

    #[test]
    fn three_dimensional_gradient_and_hessian() {
        let dom = cube_domain(12);
        let u = ScalarField::from_analytic(&dom, &AnalyticField::HalfSquareNorm);
        let g = gradient(&u).unwrap();
        let h = hessian(&u).unwrap();
        for idx in g.defined_nodes() {
            let p = dom.node_pos(idx);
            for k in 0..3 {
                assert!((g.value(idx)[k] - p[k]).abs() <= 1e-12);
            }
        }
        for idx in h.defined_nodes() {
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((h.value(idx)[i][j] - want).abs() <= 1e-11);
                }
            }
        }
    }

    #[test]
    fn csv_snapshot_has_header_and_rows() {
        let dom = square_domain(4);
        let u = ScalarField::from_analytic(&dom, &AnalyticField::LinearX);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x,y,value");
        assert_eq!(text.lines().count(), 1 + dom.active_count());
    }
}
