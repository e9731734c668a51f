//! Uniform grid domains in 2D and 3D with an inside/boundary/outside node
//! mask. Curved shapes get a staircase boundary; every inside node has its
//! full box neighborhood inside or on the boundary, which is what the
//! finite-difference stencils require.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Node classification relative to the continuous domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Inside,
    Boundary,
    Outside,
}

/// Continuous shape the grid discretizes.
#[derive(Debug, Clone)]
pub enum DomainShape<T> {
    /// Axis-aligned box `[origin, origin + size]` (2D or 3D by `dim`).
    Box {
        origin: [T; 3],
        size: [T; 3],
        dim: usize,
    },
    Disk {
        center: [T; 2],
        radius: T,
    },
    Annulus {
        center: [T; 2],
        r_inner: T,
        r_outer: T,
    },
    Polygon {
        vertices: Vec<[T; 2]>,
    },
}

impl<T: Real> DomainShape<T> {
    pub fn dim(&self) -> usize {
        match self {
            DomainShape::Box { dim, .. } => *dim,
            _ => 2,
        }
    }

    /// Whether a point belongs to the closed domain.
    pub fn contains(&self, x: &[T; 3]) -> bool {
        let fuzz = T::of(1e-12);
        match self {
            DomainShape::Box { origin, size, dim } => (0..*dim).all(|k| {
                x[k] >= origin[k] - size[k] * fuzz && x[k] <= origin[k] + size[k] * (T::one() + fuzz)
            }),
            DomainShape::Disk { center, radius } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                (dx * dx + dy * dy).sqrt() <= *radius * (T::one() + fuzz)
            }
            DomainShape::Annulus {
                center,
                r_inner,
                r_outer,
            } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                let r = (dx * dx + dy * dy).sqrt();
                r >= *r_inner * (T::one() - fuzz) && r <= *r_outer * (T::one() + fuzz)
            }
            DomainShape::Polygon { vertices } => point_in_polygon(&[x[0], x[1]], vertices),
        }
    }

    /// Nearest point of the continuous boundary, used to impose Dirichlet
    /// data at staircase boundary nodes.
    pub fn project_to_boundary(&self, x: &[T; 3]) -> [T; 3] {
        match self {
            DomainShape::Box { origin, size, dim } => {
                // clamp to the box, then push the closest coordinate to a face
                let mut y = *x;
                for k in 0..*dim {
                    y[k] = y[k].max(origin[k]).min(origin[k] + size[k]);
                }
                let mut best_k = 0;
                let mut best_d = T::infinity();
                for k in 0..*dim {
                    let d_lo = y[k] - origin[k];
                    let d_hi = origin[k] + size[k] - y[k];
                    if d_lo < best_d {
                        best_d = d_lo;
                        best_k = k;
                    }
                    if d_hi < best_d {
                        best_d = d_hi;
                        best_k = k;
                    }
                }
                let k = best_k;
                let d_lo = y[k] - origin[k];
                let d_hi = origin[k] + size[k] - y[k];
                y[k] = if d_lo <= d_hi {
                    origin[k]
                } else {
                    origin[k] + size[k]
                };
                y
            }
            DomainShape::Disk { center, radius } => project_radial(x, center, *radius),
            DomainShape::Annulus {
                center,
                r_inner,
                r_outer,
            } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                let r = (dx * dx + dy * dy).sqrt();
                let target = if (r - *r_inner).abs() <= (r - *r_outer).abs() {
                    *r_inner
                } else {
                    *r_outer
                };
                project_radial(x, center, target)
            }
            DomainShape::Polygon { vertices } => {
                let p = [x[0], x[1]];
                let mut best = p;
                let mut best_d = T::infinity();
                let m = vertices.len();
                for i in 0..m {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % m];
                    let q = nearest_on_segment(&p, &a, &b);
                    let d = dist2(&p, &q);
                    if d < best_d {
                        best_d = d;
                        best = q;
                    }
                }
                [best[0], best[1], T::zero()]
            }
        }
    }
}

fn project_radial<T: Real>(x: &[T; 3], center: &[T; 2], radius: T) -> [T; 3] {
    let dx = x[0] - center[0];
    let dy = x[1] - center[1];
    let r = (dx * dx + dy * dy).sqrt();
    if r == T::zero() {
        return [center[0] + radius, center[1], T::zero()];
    }
    [center[0] + dx / r * radius, center[1] + dy / r * radius, T::zero()]
}

fn dist2<T: Real>(a: &[T; 2], b: &[T; 2]) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn nearest_on_segment<T: Real>(p: &[T; 2], a: &[T; 2], b: &[T; 2]) -> [T; 2] {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == T::zero() {
        return *a;
    }
    let t = ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2;
    let t = t.max(T::zero()).min(T::one());
    [a[0] + t * ab[0], a[1] + t * ab[1]]
}

fn point_in_polygon<T: Real>(p: &[T; 2], vertices: &[[T; 2]]) -> bool {
    // even-odd ray casting along +x
    let mut inside = false;
    let m = vertices.len();
    for i in 0..m {
        let a = vertices[i];
        let b = vertices[(i + 1) % m];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x_cross = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Uniform grid over the bounding box of a shape, with spacing `h` equal in
/// all axes and a node mask.
#[derive(Debug, Clone)]
pub struct GridDomain<T> {
    shape: DomainShape<T>,
    dim: usize,
    origin: [T; 3],
    counts: [usize; 3],
    h: T,
    mask: Vec<NodeKind>,
}

impl<T: Real> GridDomain<T> {
    /// Discretizes a shape with `cells` grid cells across the first axis of
    /// its bounding box; the spacing `h` is the same in every axis.
    pub fn new(shape: DomainShape<T>, cells: usize) -> Result<Self> {
        if cells < 4 {
            return Err(Error::GridTooCoarse);
        }
        let dim = shape.dim();
        let (origin, extent) = bounding_box(&shape);
        let h = extent[0] / T::of_usize(cells);
        let mut counts = [1usize; 3];
        for k in 0..dim {
            // cover the box; extents are expected to be h-commensurate
            let n = (extent[k] / h).round().to_f64().unwrap() as usize;
            counts[k] = n + 1;
        }
        let total: usize = counts.iter().product();
        let mut dom = Self {
            shape,
            dim,
            origin,
            counts,
            h,
            mask: vec![NodeKind::Outside; total],
        };
        dom.classify();
        if dom.inside_count() == 0 {
            return Err(Error::GridTooCoarse);
        }
        Ok(dom)
    }

    /// Axis-aligned square domain.
    pub fn square(origin: [T; 2], side: T, cells: usize) -> Result<Self> {
        Self::new(
            DomainShape::Box {
                origin: [origin[0], origin[1], T::zero()],
                size: [side, side, T::zero()],
                dim: 2,
            },
            cells,
        )
    }

    pub fn cube(origin: [T; 3], side: T, cells: usize) -> Result<Self> {
        Self::new(
            DomainShape::Box {
                origin,
                size: [side, side, side],
                dim: 3,
            },
            cells,
        )
    }

    /// Disk of given radius; `cells` counts grid cells across the diameter.
    pub fn disk(center: [T; 2], radius: T, cells: usize) -> Result<Self> {
        Self::new(DomainShape::Disk { center, radius }, cells)
    }

    pub fn annulus(center: [T; 2], r_inner: T, r_outer: T, cells: usize) -> Result<Self> {
        Self::new(
            DomainShape::Annulus {
                center,
                r_inner,
                r_outer,
            },
            cells,
        )
    }

    pub fn polygon(vertices: Vec<[T; 2]>, cells: usize) -> Result<Self> {
        Self::new(DomainShape::Polygon { vertices }, cells)
    }

    fn classify(&mut self) {
        let total = self.mask.len();
        let mut in_domain = vec![false; total];
        for (idx, flag) in in_domain.iter_mut().enumerate() {
            let x = self.node_pos(idx);
            *flag = self.shape.contains(&x);
        }
        for idx in 0..total {
            if !in_domain[idx] {
                continue;
            }
            let c = self.node_coords(idx);
            let mut interior = true;
            'offsets: for dk in neighbor_offsets(self.dim) {
                let mut cc = [c[0] as isize, c[1] as isize, c[2] as isize];
                for a in 0..3 {
                    cc[a] += dk[a];
                }
                for a in 0..self.dim {
                    if cc[a] < 0 || cc[a] >= self.counts[a] as isize {
                        interior = false;
                        break 'offsets;
                    }
                }
                let nidx = self.index(cc[0] as usize, cc[1] as usize, cc[2] as usize);
                if !in_domain[nidx] {
                    interior = false;
                    break;
                }
            }
            self.mask[idx] = if interior {
                NodeKind::Inside
            } else {
                NodeKind::Boundary
            };
        }
    }

    pub fn shape(&self) -> &DomainShape<T> {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> T {
        self.h
    }

    pub fn origin(&self) -> [T; 3] {
        self.origin
    }

    /// Side lengths of the index box, (counts − 1)·h per axis.
    pub fn extents(&self) -> [T; 3] {
        let mut e = [T::zero(); 3];
        for k in 0..self.dim {
            e[k] = T::of_usize(self.counts[k] - 1) * self.h;
        }
        e
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn node_count(&self) -> usize {
        self.mask.len()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.counts[1] + j) * self.counts[0] + i
    }

    pub fn node_coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.counts[0];
        let rest = idx / self.counts[0];
        let j = rest % self.counts[1];
        let k = rest / self.counts[1];
        [i, j, k]
    }

    pub fn node_pos(&self, idx: usize) -> [T; 3] {
        let c = self.node_coords(idx);
        let mut x = [T::zero(); 3];
        for a in 0..self.dim {
            x[a] = self.origin[a] + self.h * T::of_usize(c[a]);
        }
        x
    }

    pub fn kind(&self, idx: usize) -> NodeKind {
        self.mask[idx]
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.mask[idx] != NodeKind::Outside
    }

    pub fn is_inside(&self, idx: usize) -> bool {
        self.mask[idx] == NodeKind::Inside
    }

    /// Neighbor index offset by `step` nodes along an axis, if it stays in
    /// the index box.
    pub fn neighbor(&self, idx: usize, axis: usize, step: isize) -> Option<usize> {
        let c = self.node_coords(idx);
        let moved = c[axis] as isize + step;
        if moved < 0 || moved >= self.counts[axis] as isize {
            return None;
        }
        let mut cc = c;
        cc[axis] = moved as usize;
        Some(self.index(cc[0], cc[1], cc[2]))
    }

    pub fn inside_count(&self) -> usize {
        self.mask.iter().filter(|&&k| k == NodeKind::Inside).count()
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|&&k| k != NodeKind::Outside).count()
    }

    pub fn inside_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| self.is_inside(i)).collect()
    }

    /// 2D cells whose four corners are all active, as [SW, SE, NW, NE]
    /// index quadruples; these carry the midpoint quadrature.
    pub fn active_cells(&self) -> Vec<[usize; 4]> {
        assert_eq!(self.dim, 2, "cell quadrature is 2D only");
        let nx = self.counts[0];
        let ny = self.counts[1];
        let mut cells = Vec::new();
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let sw = self.index(i, j, 0);
                let se = self.index(i + 1, j, 0);
                let nw = self.index(i, j + 1, 0);
                let ne = self.index(i + 1, j + 1, 0);
                if self.is_active(sw) && self.is_active(se) && self.is_active(nw) && self.is_active(ne)
                {
                    cells.push([sw, se, nw, ne]);
                }
            }
        }
        cells
    }

    /// Area (2D) or volume (3D) covered by the quadrature cells.
    pub fn cell_measure(&self) -> T {
        match self.dim {
            2 => T::of_usize(self.active_cells().len()) * self.h * self.h,
            _ => {
                let [nx, ny, nz] = self.counts;
                let mut count = 0usize;
                for k in 0..nz - 1 {
                    for j in 0..ny - 1 {
                        for i in 0..nx - 1 {
                            let mut all = true;
                            'c: for dk in 0..2 {
                                for dj in 0..2 {
                                    for di in 0..2 {
                                        if !self.is_active(self.index(i + di, j + dj, k + dk)) {
                                            all = false;
                                            break 'c;
                                        }
                                    }
                                }
                            }
                            if all {
                                count += 1;
                            }
                        }
                    }
                }
                T::of_usize(count) * self.h * self.h * self.h
            }
        }
    }

    /// Nearest boundary point of the continuous shape.
    pub fn project_to_boundary(&self, x: &[T; 3]) -> [T; 3] {
        self.shape.project_to_boundary(x)
    }

    /// Whether two grids index the same nodes (dimension, counts, spacing
    /// and origin all agree); fields on same-layout grids may be combined.
    pub fn same_layout(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.counts == other.counts
            && self.h == other.h
            && (0..self.dim).all(|k| self.origin[k] == other.origin[k])
    }
}

fn bounding_box<T: Real>(shape: &DomainShape<T>) -> ([T; 3], [T; 3]) {
    match shape {
        DomainShape::Box { origin, size, .. } => (*origin, *size),
        DomainShape::Disk { center, radius } => (
            [center[0] - *radius, center[1] - *radius, T::zero()],
            [*radius * T::of(2.0), *radius * T::of(2.0), T::zero()],
        ),
        DomainShape::Annulus { center, r_outer, .. } => (
            [center[0] - *r_outer, center[1] - *r_outer, T::zero()],
            [*r_outer * T::of(2.0), *r_outer * T::of(2.0), T::zero()],
        ),
        DomainShape::Polygon { vertices } => {
            let mut lo = [T::infinity(); 2];
            let mut hi = [-T::infinity(); 2];
            for v in vertices {
                for a in 0..2 {
                    lo[a] = lo[a].min(v[a]);
                    hi[a] = hi[a].max(v[a]);
                }
            }
            (
                [lo[0], lo[1], T::zero()],
                [hi[0] - lo[0], hi[1] - lo[1], T::zero()],
            )
        }
    }
}

fn neighbor_offsets(dim: usize) -> Vec<[isize; 3]> {
    let mut out = Vec::new();
    let r = |d: usize| if d < dim { -1isize..=1 } else { 0..=0 };
    for dk in r(2) {
        for dj in r(1) {
            for di in r(0) {
                if di == 0 && dj == 0 && dk == 0 {
                    continue;
                }
                out.push([di, dj, dk]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_mask_layout() {
        let dom = GridDomain::<f64>::square([0.0, 0.0], 1.0, 8).unwrap();
        assert_eq!(dom.counts(), [9, 9, 1]);
        assert_eq!(dom.spacing(), 1.0 / 8.0);
        // corners and edges are boundary, the interior block inside
        assert_eq!(dom.kind(dom.index(0, 0, 0)), NodeKind::Boundary);
        assert_eq!(dom.kind(dom.index(4, 0, 0)), NodeKind::Boundary);
        assert_eq!(dom.kind(dom.index(4, 4, 0)), NodeKind::Inside);
        assert_eq!(dom.inside_count(), 49);
        assert_eq!(dom.active_count(), 81);
        assert_eq!(dom.active_cells().len(), 64);
        assert_eq!(dom.cell_measure(), 1.0);
    }

    #[test]
    fn inside_nodes_have_active_stencil_neighborhood() {
        for dom in [
            GridDomain::<f64>::disk([0.0, 0.0], 1.0, 24).unwrap(),
            GridDomain::<f64>::annulus([0.0, 0.0], 0.25, 1.0, 32).unwrap(),
            GridDomain::<f64>::square([0.0, 0.0], 1.0, 8).unwrap(),
        ] {
            for idx in 0..dom.node_count() {
                if !dom.is_inside(idx) {
                    continue;
                }
                let c = dom.node_coords(idx);
                for off in neighbor_offsets(dom.dim()) {
                    let i = (c[0] as isize + off[0]) as usize;
                    let j = (c[1] as isize + off[1]) as usize;
                    let n = dom.index(i, j, 0);
                    assert!(dom.is_active(n), "inside node with outside neighbor");
                }
            }
        }
    }

    #[test]
    fn disk_area_approximates_pi() {
        let dom = GridDomain::<f64>::disk([0.0, 0.0], 1.0, 128).unwrap();
        let area = dom.cell_measure();
        assert!((area - std::f64::consts::PI).abs() < 0.1, "area = {area}");
    }

    #[test]
    fn cube_mask_3d() {
        let dom = GridDomain::<f64>::cube([0.0, 0.0, 0.0], 1.0, 6).unwrap();
        assert_eq!(dom.counts(), [7, 7, 7]);
        assert_eq!(dom.inside_count(), 125);
        assert_eq!(dom.active_count(), 343);
    }

    #[test]
    fn disk_projection_lands_on_circle() {
        let dom = GridDomain::<f64>::disk([0.5, -0.5], 2.0, 16).unwrap();
        let p = dom.project_to_boundary(&[1.3, 0.2, 0.0]);
        let r = ((p[0] - 0.5).powi(2) + (p[1] + 0.5).powi(2)).sqrt();
        assert!((r - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polygon_contains_and_projection() {
        let vertices: Vec<[f64; 2]> = vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]];
        let shape = DomainShape::Polygon { vertices };
        assert!(shape.contains(&[1.0, 0.5, 0.0]));
        assert!(!shape.contains(&[2.5, 0.5, 0.0]));
        let p = shape.project_to_boundary(&[1.0, 0.8, 0.0]);
        assert!((p[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn too_coarse_is_rejected() {
        assert!(GridDomain::<f64>::disk([0.0, 0.0], 1.0, 3).is_err());
        assert!(GridDomain::<f64>::disk([0.0, 0.0], 1.0, 4).is_ok());
    }
}
