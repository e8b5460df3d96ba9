//! Modified Q2 finite element space.
//!
//! The space itself is the standard C0 biquadratic space on the uniform mesh
//! with zero boundary values. Its basis is modified near the subdomain
//! skeleton and the domain boundary so that one-sided normal derivatives
//! appear as explicit degrees of freedom, which is what the subspace
//! splitting and the interface preconditioner operate on.
//!
//! Construction. Call a mesh gridline special when it lies on the skeleton or
//! on the domain boundary. In each direction, an element whose low (or high)
//! edge lies on a special line exchanges its middle line of nodal values for
//! one-sided derivative dofs anchored on the special line, through the
//! quadratic stencil h*v'(x0+) = -3 v(x0) + 4 v(x0+h/2) - v(x0+h). Elements
//! special in both directions additionally produce one quadrant mixed dof
//! h^2*dxdy per special corner. Derivative dofs are h-scaled (h*dn, h^2*dxdy)
//! so the assembled operator keeps the conditioning of the nodal basis.
//!
//! Consequences of the exchange:
//! - nodes in the lattice column or row next to a special line (distance h/2)
//!   carry no dofs; their nodal values are recovered from the stencil;
//! - skeleton nodes carry a value plus one one-sided normal derivative per
//!   side; cross points carry value, four one-sided first derivatives and
//!   four quadrant mixed dofs;
//! - boundary nodes where a skeleton line ends carry two quadrant mixed dofs
//!   and the domain corners carry one.
//!
//! The essential boundary condition v = 0 on the boundary removes the value
//! dofs of boundary nodes together with the boundary-tangential first
//! derivative dofs (those encode tangential variation of the trace), which
//! leaves exactly (2n-1)^2 free dofs.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grid::{Axis, Decomposition, Edge, Element, Mesh};
use crate::sparse::CsrMatrix;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    /// Nodal value.
    Value,
    /// h-scaled one-sided x derivative from below, h*dv/dx(x-).
    DxMinus,
    /// h-scaled one-sided x derivative from above, h*dv/dx(x+).
    DxPlus,
    DyMinus,
    DyPlus,
    /// h^2-scaled one-sided mixed derivative into the given quadrant.
    Mixed { x_plus: bool, y_plus: bool },
}

impl DofKind {
    pub const COUNT: usize = 9;

    pub fn index(self) -> usize {
        match self {
            DofKind::Value => 0,
            DofKind::DxMinus => 1,
            DofKind::DxPlus => 2,
            DofKind::DyMinus => 3,
            DofKind::DyPlus => 4,
            DofKind::Mixed { x_plus, y_plus } => {
                5 + usize::from(x_plus) + 2 * usize::from(y_plus)
            }
        }
    }

    pub fn all() -> [DofKind; Self::COUNT] {
        [
            DofKind::Value,
            DofKind::DxMinus,
            DofKind::DxPlus,
            DofKind::DyMinus,
            DofKind::DyPlus,
            DofKind::Mixed { x_plus: false, y_plus: false },
            DofKind::Mixed { x_plus: true, y_plus: false },
            DofKind::Mixed { x_plus: false, y_plus: true },
            DofKind::Mixed { x_plus: true, y_plus: true },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dof {
    pub ux: usize,
    pub uy: usize,
    pub kind: DofKind,
}

/// Coefficients of the h-scaled one-sided derivative stencil at node-unit
/// offsets 0, s, 2s from the anchor, where s = +1 toward the plus side and
/// s = -1 toward the minus side.
pub fn one_sided_stencil<T: Scalar>(toward_plus: bool) -> [T; 3] {
    if toward_plus {
        [T::of(-3.0), T::of(4.0), T::of(-1.0)]
    } else {
        [T::of(3.0), T::of(-4.0), T::of(1.0)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CoordStatus {
    OnLine { has_minus: bool, has_plus: bool },
    Adjacent,
    Plain,
}

fn coord_status(u: usize, two_n: usize, step: usize) -> CoordStatus {
    if u % step == 0 {
        CoordStatus::OnLine { has_minus: u > 0, has_plus: u < two_n }
    } else if (u >= 1 && (u - 1) % step == 0) || (u + 1) % step == 0 {
        CoordStatus::Adjacent
    } else {
        CoordStatus::Plain
    }
}

#[derive(Debug, Clone)]
pub struct DofMap {
    n: usize,
    m: usize,
    dofs: Vec<Dof>,
    by_node: Vec<[Option<u32>; DofKind::COUNT]>,
    free_of_full: Vec<Option<usize>>,
    full_of_free: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, dec: &Decomposition) -> Result<Self> {
        let n = mesh.n();
        let m = dec.m();
        if dec.stride() < 2 {
            return Err(Error::TooCoarse { n, m });
        }
        let two_n = 2 * n;
        let step = 2 * dec.stride();
        let nn = mesh.nodes_per_side();

        let mut dofs = Vec::new();
        let mut by_node = vec![[None; DofKind::COUNT]; nn * nn];
        for uy in 0..=two_n {
            let sy = coord_status(uy, two_n, step);
            for ux in 0..=two_n {
                let sx = coord_status(ux, two_n, step);
                if sx == CoordStatus::Adjacent || sy == CoordStatus::Adjacent {
                    continue;
                }
                let mut kinds = vec![DofKind::Value];
                if let CoordStatus::OnLine { has_minus, has_plus } = sx {
                    if has_minus {
                        kinds.push(DofKind::DxMinus);
                    }
                    if has_plus {
                        kinds.push(DofKind::DxPlus);
                    }
                }
                if let CoordStatus::OnLine { has_minus, has_plus } = sy {
                    if has_minus {
                        kinds.push(DofKind::DyMinus);
                    }
                    if has_plus {
                        kinds.push(DofKind::DyPlus);
                    }
                }
                if let (
                    CoordStatus::OnLine { has_minus: xm, has_plus: xp },
                    CoordStatus::OnLine { has_minus: ym, has_plus: yp },
                ) = (sx, sy)
                {
                    for &y_plus in &[false, true] {
                        for &x_plus in &[false, true] {
                            let x_ok = if x_plus { xp } else { xm };
                            let y_ok = if y_plus { yp } else { ym };
                            if x_ok && y_ok {
                                kinds.push(DofKind::Mixed { x_plus, y_plus });
                            }
                        }
                    }
                }
                kinds.sort_by_key(|k| k.index());
                let node = mesh.node_id(ux, uy);
                for kind in kinds {
                    by_node[node][kind.index()] = Some(dofs.len() as u32);
                    dofs.push(Dof { ux, uy, kind });
                }
            }
        }
        assert_eq!(dofs.len(), nn * nn, "modified basis must preserve dimension");

        // essential boundary condition: value dofs on the boundary plus the
        // boundary-tangential first derivative dofs
        let mut free_of_full = vec![None; dofs.len()];
        let mut full_of_free = Vec::new();
        for (id, d) in dofs.iter().enumerate() {
            let on_x_boundary = d.ux == 0 || d.ux == two_n;
            let on_y_boundary = d.uy == 0 || d.uy == two_n;
            let constrained = match d.kind {
                DofKind::Value => on_x_boundary || on_y_boundary,
                DofKind::DxMinus | DofKind::DxPlus => on_y_boundary,
                DofKind::DyMinus | DofKind::DyPlus => on_x_boundary,
                DofKind::Mixed { .. } => false,
            };
            if !constrained {
                free_of_full[id] = Some(full_of_free.len());
                full_of_free.push(id);
            }
        }

        Ok(DofMap { n, m, dofs, by_node, free_of_full, full_of_free })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn total_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn free_dim(&self) -> usize {
        self.full_of_free.len()
    }

    pub fn dof(&self, full_id: usize) -> Dof {
        self.dofs[full_id]
    }

    pub fn dofs(&self) -> &[Dof] {
        &self.dofs
    }

    pub fn dof_id(&self, ux: usize, uy: usize, kind: DofKind) -> Option<usize> {
        let node = uy * (2 * self.n + 1) + ux;
        self.by_node[node][kind.index()].map(|x| x as usize)
    }

    pub fn free_index(&self, full_id: usize) -> Option<usize> {
        self.free_of_full[full_id]
    }

    pub fn full_index(&self, free_id: usize) -> usize {
        self.full_of_free[free_id]
    }

    /// Whether the node anchors any dofs (false for the layer of nodes at
    /// distance h/2 from a special line, whose values were exchanged).
    pub fn anchored(&self, ux: usize, uy: usize) -> bool {
        let node = uy * (2 * self.n + 1) + ux;
        self.by_node[node][DofKind::Value.index()].is_some()
    }

    pub fn expand<T: Scalar>(&self, free: &DVector<T>) -> DVector<T> {
        assert_eq!(free.len(), self.free_dim());
        let mut full = DVector::zeros(self.total_dofs());
        for (fi, &id) in self.full_of_free.iter().enumerate() {
            full[id] = free[fi];
        }
        full
    }

    pub fn restrict<T: Scalar>(&self, full: &DVector<T>) -> DVector<T> {
        assert_eq!(full.len(), self.total_dofs());
        DVector::from_iterator(
            self.free_dim(),
            self.full_of_free.iter().map(|&id| full[id]),
        )
    }

    /// Inverse change of basis: modified dofs from standard nodal values,
    /// applying the one-sided stencils directly.
    pub fn modified_from_nodal<T: Scalar>(&self, nodal: &DVector<T>) -> DVector<T> {
        let nn = 2 * self.n + 1;
        assert_eq!(nodal.len(), nn * nn);
        let at = |ux: usize, uy: usize| nodal[uy * nn + ux];
        let dir = |plus: bool, u: usize, k: usize| if plus { u + k } else { u - k };
        let mut out = DVector::zeros(self.total_dofs());
        for (id, d) in self.dofs.iter().enumerate() {
            out[id] = match d.kind {
                DofKind::Value => at(d.ux, d.uy),
                DofKind::DxMinus | DofKind::DxPlus => {
                    let plus = d.kind == DofKind::DxPlus;
                    let c = one_sided_stencil::<T>(plus);
                    (0..3).map(|k| c[k] * at(dir(plus, d.ux, k), d.uy)).sum()
                }
                DofKind::DyMinus | DofKind::DyPlus => {
                    let plus = d.kind == DofKind::DyPlus;
                    let c = one_sided_stencil::<T>(plus);
                    (0..3).map(|k| c[k] * at(d.ux, dir(plus, d.uy, k))).sum()
                }
                DofKind::Mixed { x_plus, y_plus } => {
                    let cx = one_sided_stencil::<T>(x_plus);
                    let cy = one_sided_stencil::<T>(y_plus);
                    let mut acc = T::zero();
                    for ky in 0..3 {
                        for kx in 0..3 {
                            acc += cx[kx]
                                * cy[ky]
                                * at(dir(x_plus, d.ux, kx), dir(y_plus, d.uy, ky));
                        }
                    }
                    acc
                }
            };
        }
        out
    }

    /// Number of dofs of each kind over the full (pre-BC) map, indexed by
    /// `DofKind::index`.
    pub fn kind_counts(&self) -> [usize; DofKind::COUNT] {
        let mut counts = [0; DofKind::COUNT];
        for d in &self.dofs {
            counts[d.kind.index()] += 1;
        }
        counts
    }
}

/// Which end of an element's 1d span lies on a special line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mod1d {
    None,
    Lo,
    Hi,
}

fn mod_state(i: usize, stride: usize, n: usize) -> Mod1d {
    let lo = i % stride == 0;
    let hi = (i + 1) % stride == 0;
    debug_assert!(!(lo && hi), "stride >= 2 rules out doubly special spans");
    debug_assert!(i < n);
    if lo {
        Mod1d::Lo
    } else if hi {
        Mod1d::Hi
    } else {
        Mod1d::None
    }
}

/// Rows: standard stations 0, 1, 2 of the 1d span; columns: local modified
/// dofs (end value, derivative slot, end value). Maps modified to nodal.
fn tinv_1d<T: Scalar>(state: Mod1d) -> [[T; 3]; 3] {
    let (z, o) = (T::zero(), T::one());
    let q = T::of(0.25);
    let tq = T::of(0.75);
    match state {
        Mod1d::None => [[o, z, z], [z, o, z], [z, z, o]],
        Mod1d::Lo => [[o, z, z], [tq, q, q], [z, z, o]],
        Mod1d::Hi => [[o, z, z], [q, -q, tq], [z, z, o]],
    }
}

/// Sparse change of basis C with standard nodal values = C * modified dofs.
#[derive(Debug, Clone)]
pub struct ChangeOfBasis<T> {
    c: CsrMatrix<T>,
}

impl<T: Scalar> ChangeOfBasis<T> {
    pub fn new(mesh: &Mesh, dec: &Decomposition, dofs: &DofMap) -> Self {
        let stride = dec.stride();
        let n = mesh.n();
        let mut entries: BTreeMap<(usize, usize), T> = BTreeMap::new();
        for el in mesh.elements() {
            let xs = mod_state(el.ix, stride, n);
            let ys = mod_state(el.iy, stride, n);
            let tx = tinv_1d::<T>(xs);
            let ty = tinv_1d::<T>(ys);
            for b in 0..3 {
                for a in 0..3 {
                    let (ux, uy) = mesh.element_node(el, a, b);
                    let row = mesh.node_id(ux, uy);
                    for bp in 0..3 {
                        for ap in 0..3 {
                            let w = tx[a][ap] * ty[b][bp];
                            if w == T::zero() {
                                continue;
                            }
                            let col = local_modified_dof(mesh, dofs, el, xs, ys, ap, bp);
                            let prev = entries.insert((row, col), w);
                            if let Some(p) = prev {
                                debug_assert!(
                                    (p - w).abs() <= T::of(1e-14),
                                    "adjacent elements disagree on a basis entry"
                                );
                            }
                        }
                    }
                }
            }
        }
        let triplets: Vec<(usize, usize, T)> =
            entries.into_iter().map(|((r, c), v)| (r, c, v)).collect();
        let c = CsrMatrix::from_triplets(mesh.node_count(), dofs.total_dofs(), triplets);
        ChangeOfBasis { c }
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.c
    }

    pub fn nodal_from_modified(&self, modified: &DVector<T>) -> DVector<T> {
        self.c.matvec(modified)
    }

    /// Adjoint map, used to push nodal-basis loads into modified coordinates.
    pub fn transpose_apply(&self, nodal_dual: &DVector<T>) -> DVector<T> {
        self.c.matvec_transpose(nodal_dual)
    }
}

fn local_modified_dof(
    mesh: &Mesh,
    dofs: &DofMap,
    el: Element,
    xs: Mod1d,
    ys: Mod1d,
    ap: usize,
    bp: usize,
) -> usize {
    let resolve = |state: Mod1d, i: usize, p: usize| -> (bool, usize, bool) {
        // (is_derivative, node unit, toward_plus)
        match state {
            Mod1d::None => (false, 2 * i + p, false),
            Mod1d::Lo if p == 1 => (true, 2 * i, true),
            Mod1d::Hi if p == 1 => (true, 2 * i + 2, false),
            _ => (false, 2 * i + p, false),
        }
    };
    let (dx, ux, x_plus) = resolve(xs, el.ix, ap);
    let (dy, uy, y_plus) = resolve(ys, el.iy, bp);
    let kind = match (dx, dy) {
        (false, false) => DofKind::Value,
        (true, false) => {
            if x_plus {
                DofKind::DxPlus
            } else {
                DofKind::DxMinus
            }
        }
        (false, true) => {
            if y_plus {
                DofKind::DyPlus
            } else {
                DofKind::DyMinus
            }
        }
        (true, true) => DofKind::Mixed { x_plus, y_plus },
    };
    let _ = mesh;
    dofs.dof_id(ux, uy, kind)
        .expect("tensor exchange points at an anchored dof")
}

/// 1d quadratic shape function j at t in [0, 1] with stations 0, 1/2, 1;
/// `order` is the t-derivative order (0, 1 or 2).
pub fn shape1d<T: Scalar>(j: usize, t: T, order: usize) -> T {
    let (two, three, four) = (T::of(2.0), T::of(3.0), T::of(4.0));
    match (j, order) {
        (0, 0) => two * t * t - three * t + T::one(),
        (0, 1) => four * t - three,
        (0, 2) => four,
        (1, 0) => four * t * (T::one() - t),
        (1, 1) => four - T::of(8.0) * t,
        (1, 2) => T::of(-8.0),
        (2, 0) => two * t * t - t,
        (2, 1) => four * t - T::one(),
        (2, 2) => four,
        _ => T::zero(),
    }
}

/// Evaluates a biquadratic from its 9 nodal values (station order b*3+a) at
/// reference point (tx, ty); derivatives are with respect to the reference
/// coordinates.
pub fn eval_local<T: Scalar>(values: &[T; 9], tx: T, ty: T, dx: usize, dy: usize) -> T {
    let mut acc = T::zero();
    for b in 0..3 {
        let sy = shape1d(b, ty, dy);
        for a in 0..3 {
            acc += values[b * 3 + a] * shape1d(a, tx, dx) * sy;
        }
    }
    acc
}

/// The discretization space: mesh, decomposition, dof map and change of
/// basis bundled together.
#[derive(Debug, Clone)]
pub struct Space<T> {
    pub mesh: Mesh,
    pub dec: Decomposition,
    pub dofs: DofMap,
    pub basis: ChangeOfBasis<T>,
}

impl<T: Scalar> Space<T> {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        let mesh = Mesh::new(n)?;
        let dec = Decomposition::new(&mesh, m)?;
        let dofs = DofMap::new(&mesh, &dec)?;
        let basis = ChangeOfBasis::new(&mesh, &dec, &dofs);
        Ok(Space { mesh, dec, dofs, basis })
    }

    pub fn free_dim(&self) -> usize {
        self.dofs.free_dim()
    }

    /// Standard nodal values of a function given by free modified dofs.
    pub fn nodal_from_free(&self, free: &DVector<T>) -> DVector<T> {
        self.basis.nodal_from_modified(&self.dofs.expand(free))
    }

    pub fn local_nodal_values(&self, nodal: &DVector<T>, el: Element) -> [T; 9] {
        let mut values = [T::zero(); 9];
        for b in 0..3 {
            for a in 0..3 {
                let (ux, uy) = self.mesh.element_node(el, a, b);
                values[b * 3 + a] = nodal[self.mesh.node_id(ux, uy)];
            }
        }
        values
    }

    /// Point evaluation with physical derivatives of order (dx, dy) <= 2.
    pub fn evaluate(
        &self,
        free: &DVector<T>,
        el: Element,
        tx: T,
        ty: T,
        dx: usize,
        dy: usize,
    ) -> T {
        let nodal = self.nodal_from_free(free);
        self.evaluate_nodal(&nodal, el, tx, ty, dx, dy)
    }

    pub fn evaluate_nodal(
        &self,
        nodal: &DVector<T>,
        el: Element,
        tx: T,
        ty: T,
        dx: usize,
        dy: usize,
    ) -> T {
        let values = self.local_nodal_values(nodal, el);
        let scale = T::of(self.mesh.n() as f64).powi((dx + dy) as i32);
        eval_local(&values, tx, ty, dx, dy) * scale
    }

    /// Jump of the normal derivative across an edge at parameter t in [0, 1];
    /// on boundary edges the one-sided derivative, negated where the
    /// reference normal points out of the domain.
    pub fn normal_jump_at(&self, nodal: &DVector<T>, e: Edge, t: T) -> T {
        let (minus, plus) = (self.mesh.minus_element(e), self.mesh.plus_element(e));
        let side = |el: Element, at_low: bool| -> T {
            let (tx, ty, dx, dy) = match e.axis {
                Axis::X => (if at_low { T::zero() } else { T::one() }, t, 1, 0),
                Axis::Y => (t, if at_low { T::zero() } else { T::one() }, 0, 1),
            };
            self.evaluate_nodal(nodal, el, tx, ty, dx, dy)
        };
        match (minus, plus) {
            (Some(a), Some(b)) => side(b, true) - side(a, false),
            (None, Some(b)) => side(b, true),
            (Some(a), None) => -side(a, false),
            (None, None) => unreachable!(),
        }
    }

    /// Average of the normal derivative across an edge (one-sided on the
    /// boundary).
    pub fn normal_avg_at(&self, nodal: &DVector<T>, e: Edge, t: T) -> T {
        let (minus, plus) = (self.mesh.minus_element(e), self.mesh.plus_element(e));
        let side = |el: Element, at_low: bool| -> T {
            let (tx, ty, dx, dy) = match e.axis {
                Axis::X => (if at_low { T::zero() } else { T::one() }, t, 1, 0),
                Axis::Y => (t, if at_low { T::zero() } else { T::one() }, 0, 1),
            };
            self.evaluate_nodal(nodal, el, tx, ty, dx, dy)
        };
        match (minus, plus) {
            (Some(a), Some(b)) => (side(a, false) + side(b, true)) * T::of(0.5),
            (None, Some(b)) => side(b, true),
            (Some(a), None) => side(a, false),
            (None, None) => unreachable!(),
        }
    }

    /// Nodal interpolation (pre-BC modified dofs).
    pub fn interpolate_full(&self, f: impl Fn(T, T) -> T) -> DVector<T> {
        let nn = self.mesh.nodes_per_side();
        let mut nodal = DVector::zeros(nn * nn);
        for uy in 0..nn {
            for ux in 0..nn {
                let (x, y) = self.mesh.node_coords(ux, uy);
                nodal[self.mesh.node_id(ux, uy)] = f(x, y);
            }
        }
        self.dofs.modified_from_nodal(&nodal)
    }

    /// Nodal interpolation restricted to the free dofs.
    pub fn interpolate(&self, f: impl Fn(T, T) -> T) -> DVector<T> {
        self.dofs.restrict(&self.interpolate_full(f))
    }
}
