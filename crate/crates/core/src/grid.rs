//! Uniform Q2 mesh of the unit square and its subdomain decomposition.
//!
//! Conventions used throughout the crate:
//! - element indices (ix, iy) in 0..n, element (ix, iy) covers
//!   [ix*h, (ix+1)*h] x [iy*h, (iy+1)*h] with h = 1/n;
//! - node units (ux, uy) in 0..=2n, node coordinates (ux/(2n), uy/(2n)),
//!   node id = uy*(2n+1) + ux (x fastest);
//! - vertical edges carry the reference normal +x, horizontal edges +y; the
//!   minus element of an edge is the one the normal points away from.

use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Element {
    pub ix: usize,
    pub iy: usize,
}

/// A mesh edge of length h. `axis` is the direction of the reference normal:
/// `Axis::X` for vertical edges on the gridline x = line*h, `Axis::Y` for
/// horizontal edges on y = line*h. `cell` indexes the edge along the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub axis: Axis,
    pub line: usize,
    pub cell: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mesh {
    n: usize,
}

impl Mesh {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("mesh resolution n must be >= 1".into()));
        }
        Ok(Mesh { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h<T: Scalar>(&self) -> T {
        T::one() / T::of(self.n as f64)
    }

    pub fn nodes_per_side(&self) -> usize {
        2 * self.n + 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_side() * self.nodes_per_side()
    }

    pub fn element_count(&self) -> usize {
        self.n * self.n
    }

    pub fn edge_count(&self) -> usize {
        2 * self.n * (self.n + 1)
    }

    pub fn node_id(&self, ux: usize, uy: usize) -> usize {
        debug_assert!(ux <= 2 * self.n && uy <= 2 * self.n);
        uy * self.nodes_per_side() + ux
    }

    pub fn node_units(&self, id: usize) -> (usize, usize) {
        (id % self.nodes_per_side(), id / self.nodes_per_side())
    }

    pub fn node_coords<T: Scalar>(&self, ux: usize, uy: usize) -> (T, T) {
        let d = T::of(2.0 * self.n as f64);
        (T::of(ux as f64) / d, T::of(uy as f64) / d)
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        let n = self.n;
        (0..n * n).map(move |k| Element { ix: k % n, iy: k / n })
    }

    /// Node units of an element's local station (a, b), a and b in 0..3.
    pub fn element_node(&self, el: Element, a: usize, b: usize) -> (usize, usize) {
        (2 * el.ix + a, 2 * el.iy + b)
    }

    /// Edges in a fixed order: all vertical edges by (cell, line), then all
    /// horizontal edges by (line, cell); both orders are lexicographic by
    /// the edge midpoint (y-major).
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let n = self.n;
        let vertical = (0..n * (n + 1)).map(move |k| Edge {
            axis: Axis::X,
            line: k % (n + 1),
            cell: k / (n + 1),
        });
        let horizontal = (0..n * (n + 1)).map(move |k| Edge {
            axis: Axis::Y,
            line: k / n,
            cell: k % n,
        });
        vertical.chain(horizontal)
    }

    /// Element on the negative-normal side (left of a vertical edge, below a
    /// horizontal one); None on the domain boundary.
    pub fn minus_element(&self, e: Edge) -> Option<Element> {
        if e.line == 0 {
            return None;
        }
        Some(match e.axis {
            Axis::X => Element { ix: e.line - 1, iy: e.cell },
            Axis::Y => Element { ix: e.cell, iy: e.line - 1 },
        })
    }

    pub fn plus_element(&self, e: Edge) -> Option<Element> {
        if e.line == self.n {
            return None;
        }
        Some(match e.axis {
            Axis::X => Element { ix: e.line, iy: e.cell },
            Axis::Y => Element { ix: e.cell, iy: e.line },
        })
    }

    pub fn is_boundary_edge(&self, e: Edge) -> bool {
        e.line == 0 || e.line == self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeCategory {
    SubdomainInterior,
    GammaEdge,
    CrossPoint,
    DomainBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeCategory {
    /// Interior to one subdomain.
    SubdomainInterior,
    /// On the interface skeleton between two subdomains.
    OnGamma,
    /// On the domain boundary.
    OnBoundary,
}

/// Partition of the mesh into an m x m grid of square subdomains, m | n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decomposition {
    n: usize,
    m: usize,
}

impl Decomposition {
    pub fn new(mesh: &Mesh, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("subdomain count m must be >= 1".into()));
        }
        if mesh.n() % m != 0 {
            return Err(Error::Misaligned { n: mesh.n(), m });
        }
        Ok(Decomposition { n: mesh.n(), m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn subdomain_count(&self) -> usize {
        self.m * self.m
    }

    pub fn big_h<T: Scalar>(&self) -> T {
        T::one() / T::of(self.m as f64)
    }

    /// Elements per subdomain side (H/h).
    pub fn stride(&self) -> usize {
        self.n / self.m
    }

    pub fn subdomain_of_element(&self, el: Element) -> usize {
        let s = self.stride();
        (el.iy / s) * self.m + el.ix / s
    }

    /// Subdomain grid position (si, sj) of subdomain j.
    pub fn subdomain_pos(&self, j: usize) -> (usize, usize) {
        (j % self.m, j / self.m)
    }

    pub fn elements_of_subdomain(&self, j: usize) -> impl Iterator<Item = Element> + '_ {
        let s = self.stride();
        let (si, sj) = self.subdomain_pos(j);
        (0..s * s).map(move |k| Element {
            ix: si * s + k % s,
            iy: sj * s + k / s,
        })
    }

    /// Whether an element gridline index lies on a skeleton line (interior
    /// subdomain boundary, excludes the domain boundary).
    pub fn is_skeleton_line(&self, line: usize) -> bool {
        let s = self.stride();
        line % s == 0 && line != 0 && line != self.n
    }

    pub fn edge_category(&self, mesh: &Mesh, e: Edge) -> EdgeCategory {
        if mesh.is_boundary_edge(e) {
            EdgeCategory::OnBoundary
        } else if self.is_skeleton_line(e.line) {
            EdgeCategory::OnGamma
        } else {
            EdgeCategory::SubdomainInterior
        }
    }

    pub fn gamma_edge_count(&self) -> usize {
        2 * (self.m - 1) * self.n
    }

    /// Interior subdomain corner coordinates in node units.
    pub fn cross_points(&self) -> Vec<(usize, usize)> {
        let step = 2 * self.stride();
        let mut pts = Vec::new();
        for b in 1..self.m {
            for a in 1..self.m {
                pts.push((a * step, b * step));
            }
        }
        pts
    }

    /// Node classification over the full lattice, in node id order.
    pub fn classify_nodes(&self, mesh: &Mesh) -> Vec<NodeCategory> {
        let nn = mesh.nodes_per_side();
        let last = 2 * self.n;
        let step = 2 * self.stride();
        let mut out = Vec::with_capacity(nn * nn);
        for uy in 0..nn {
            for ux in 0..nn {
                let cat = if ux == 0 || ux == last || uy == 0 || uy == last {
                    NodeCategory::DomainBoundary
                } else {
                    let on_v = ux % step == 0;
                    let on_h = uy % step == 0;
                    match (on_v, on_h) {
                        (true, true) => NodeCategory::CrossPoint,
                        (false, false) => NodeCategory::SubdomainInterior,
                        _ => NodeCategory::GammaEdge,
                    }
                };
                out.push(cat);
            }
        }
        out
    }

    /// Subdomain containing a node that is strictly inside one (not on any
    /// skeleton line or the domain boundary).
    pub fn subdomain_of_interior_node(&self, ux: usize, uy: usize) -> usize {
        let step = 2 * self.stride();
        debug_assert!(
            ux % step != 0 && uy % step != 0,
            "node ({ux}, {uy}) lies on a subdomain line"
        );
        (uy / step) * self.m + ux / step
    }

    /// Edges interior to subdomain j (excludes its boundary edges).
    pub fn subdomain_interior_edges(&self, j: usize) -> Vec<Edge> {
        let s = self.stride();
        let (si, sj) = self.subdomain_pos(j);
        let mut edges = Vec::new();
        for cell in sj * s..(sj + 1) * s {
            for line in si * s + 1..(si + 1) * s {
                edges.push(Edge { axis: Axis::X, line, cell });
            }
        }
        for line in sj * s + 1..(sj + 1) * s {
            for cell in si * s..(si + 1) * s {
                edges.push(Edge { axis: Axis::Y, line, cell });
            }
        }
        edges
    }

    /// Subdomain whose local form owns the edge: interior edges belong to the
    /// subdomain containing them, domain boundary edges to the one adjacent
    /// subdomain, skeleton edges to none.
    pub fn owner_of_edge(&self, mesh: &Mesh, e: Edge) -> Option<usize> {
        if self.edge_category(mesh, e) == EdgeCategory::OnGamma {
            return None;
        }
        let el = mesh
            .minus_element(e)
            .or_else(|| mesh.plus_element(e))
            .expect("edge has an adjacent element");
        Some(self.subdomain_of_element(el))
    }
}
