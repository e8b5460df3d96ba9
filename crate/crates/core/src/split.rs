//! Splitting of the free dofs into derivative-continuous and jump parts.
//!
//! At a skeleton node carrying both one-sided derivatives of an axis, the
//! pair (d+, d-) is replaced by the mean s = (d+ + d-)/2 and half-jump
//! t = (d+ - d-)/2, so d+ = s + t and d- = s - t. At a cross point the four
//! quadrant mixed dofs transform the same way in both axes at once:
//! m(sx, sy) = s + sx t2 + sy t3 + sx sy t1 with signs sx, sy in {-1, +1}.
//!
//! The C part collects nodal values, the means s, and the cross-point mean
//! s_q; the D part collects the jumps t and everything tied to the domain
//! boundary (inward normal derivative dofs and the mixed dofs of boundary
//! nodes), which vanish for functions mimicking the clamped conditions.
//! Every skeleton jump of the normal derivative vanishes identically on the
//! C subspace, so the bilinear form splits over subdomains there and its
//! interior block is block diagonal; that is what the Schur system below
//! exploits.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::grid::NodeCategory;
use crate::solve::{factor_spd, SpdFactor};
use crate::space::{DofKind, Space};
use crate::sparse::CsrMatrix;
use crate::Scalar;

/// Coordinate types of the C part at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CSlot {
    Value,
    SX,
    SY,
    SQuad,
}

impl CSlot {
    pub fn index(self) -> usize {
        match self {
            CSlot::Value => 0,
            CSlot::SX => 1,
            CSlot::SY => 2,
            CSlot::SQuad => 3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CCoord {
    pub ux: usize,
    pub uy: usize,
    pub slot: CSlot,
}

#[derive(Debug, Clone)]
pub struct Splitting<T> {
    /// Free dofs from C coordinates: columns are the C basis vectors.
    pub r_c: CsrMatrix<T>,
    /// C coordinates from free dofs; E_C R_C = identity.
    pub e_c: CsrMatrix<T>,
    pub r_d: CsrMatrix<T>,
    pub e_d: CsrMatrix<T>,
    pub c_coords: Vec<CCoord>,
    /// C indices of the interior values of each subdomain.
    pub interior: Vec<Vec<usize>>,
    /// C indices on the skeleton, in node order with slot order
    /// (Value, SX, SY, SQuad) within a node.
    pub interface: Vec<usize>,
    if_by_node: BTreeMap<(usize, usize), [Option<usize>; 4]>,
}

impl<T: Scalar> Splitting<T> {
    pub fn new(space: &Space<T>) -> Self {
        let dofs = &space.dofs;
        let mesh = &space.mesh;
        let dec = &space.dec;
        let categories = dec.classify_nodes(mesh);
        let two_n = 2 * mesh.n();
        let free = |ux: usize, uy: usize, kind: DofKind| -> Option<usize> {
            dofs.dof_id(ux, uy, kind).and_then(|id| dofs.free_index(id))
        };

        let mut rc = Vec::new();
        let mut ec = Vec::new();
        let mut rd = Vec::new();
        let mut ed = Vec::new();
        let mut c_coords: Vec<CCoord> = Vec::new();
        let mut interior: Vec<Vec<usize>> = vec![Vec::new(); dec.subdomain_count()];
        let mut interface: Vec<usize> = Vec::new();
        let mut if_by_node = BTreeMap::new();
        let mut d_count = 0usize;

        let push_c = |coords: &mut Vec<CCoord>,
                          rc: &mut Vec<(usize, usize, T)>,
                          ec: &mut Vec<(usize, usize, T)>,
                          coord: CCoord,
                          members: &[(usize, T)]| {
            let c = coords.len();
            let weight = T::one() / T::of(members.len() as f64);
            for &(f, sign) in members {
                rc.push((f, c, sign));
                ec.push((c, f, sign * weight));
            }
            coords.push(coord);
            c
        };
        let push_d = |rd: &mut Vec<(usize, usize, T)>,
                          ed: &mut Vec<(usize, usize, T)>,
                          count: &mut usize,
                          members: &[(usize, T)]| {
            let d = *count;
            *count += 1;
            let weight = T::one() / T::of(members.len() as f64);
            for &(f, sign) in members {
                rd.push((f, d, sign));
                ed.push((d, f, sign * weight));
            }
        };

        for uy in 0..=two_n {
            for ux in 0..=two_n {
                if !dofs.anchored(ux, uy) {
                    continue;
                }
                let mut node_c: [Option<usize>; 4] = [None; 4];
                if let Some(f) = free(ux, uy, DofKind::Value) {
                    let c = push_c(
                        &mut c_coords,
                        &mut rc,
                        &mut ec,
                        CCoord { ux, uy, slot: CSlot::Value },
                        &[(f, T::one())],
                    );
                    node_c[CSlot::Value.index()] = Some(c);
                }
                for (slot, lo, hi) in [
                    (CSlot::SX, DofKind::DxMinus, DofKind::DxPlus),
                    (CSlot::SY, DofKind::DyMinus, DofKind::DyPlus),
                ] {
                    match (free(ux, uy, lo), free(ux, uy, hi)) {
                        (Some(a), Some(b)) => {
                            let c = push_c(
                                &mut c_coords,
                                &mut rc,
                                &mut ec,
                                CCoord { ux, uy, slot },
                                &[(b, T::one()), (a, T::one())],
                            );
                            node_c[slot.index()] = Some(c);
                            push_d(
                                &mut rd,
                                &mut ed,
                                &mut d_count,
                                &[(b, T::one()), (a, -T::one())],
                            );
                        }
                        (Some(f), None) | (None, Some(f)) => {
                            push_d(&mut rd, &mut ed, &mut d_count, &[(f, T::one())]);
                        }
                        (None, None) => {}
                    }
                }
                let quadrants = [(false, false), (true, false), (false, true), (true, true)];
                let mixed: Vec<(T, T, usize)> = quadrants
                    .iter()
                    .filter_map(|&(x_plus, y_plus)| {
                        free(ux, uy, DofKind::Mixed { x_plus, y_plus }).map(|f| {
                            let sx = if x_plus { T::one() } else { -T::one() };
                            let sy = if y_plus { T::one() } else { -T::one() };
                            (sx, sy, f)
                        })
                    })
                    .collect();
                if mixed.len() == 4 {
                    let gather = |wx: bool, wy: bool| -> Vec<(usize, T)> {
                        mixed
                            .iter()
                            .map(|&(sx, sy, f)| {
                                let mut v = T::one();
                                if wx {
                                    v *= sx;
                                }
                                if wy {
                                    v *= sy;
                                }
                                (f, v)
                            })
                            .collect()
                    };
                    let c = push_c(
                        &mut c_coords,
                        &mut rc,
                        &mut ec,
                        CCoord { ux, uy, slot: CSlot::SQuad },
                        &gather(false, false),
                    );
                    node_c[CSlot::SQuad.index()] = Some(c);
                    push_d(&mut rd, &mut ed, &mut d_count, &gather(true, true));
                    push_d(&mut rd, &mut ed, &mut d_count, &gather(true, false));
                    push_d(&mut rd, &mut ed, &mut d_count, &gather(false, true));
                } else {
                    for &(_, _, f) in &mixed {
                        push_d(&mut rd, &mut ed, &mut d_count, &[(f, T::one())]);
                    }
                }

                let held: Vec<usize> = node_c.iter().flatten().copied().collect();
                if held.is_empty() {
                    continue;
                }
                match categories[mesh.node_id(ux, uy)] {
                    NodeCategory::GammaEdge | NodeCategory::CrossPoint => {
                        interface.extend(&held);
                        if_by_node.insert((ux, uy), node_c);
                    }
                    NodeCategory::SubdomainInterior => {
                        debug_assert_eq!(held.len(), 1, "interior nodes carry only a value");
                        interior[dec.subdomain_of_interior_node(ux, uy)].extend(&held);
                    }
                    NodeCategory::DomainBoundary => {
                        unreachable!("boundary nodes have no C coordinates")
                    }
                }
            }
        }

        let free_dim = dofs.free_dim();
        let c_dim = c_coords.len();
        debug_assert_eq!(c_dim + d_count, free_dim, "splitting must be a direct sum");
        Splitting {
            r_c: CsrMatrix::from_triplets(free_dim, c_dim, rc),
            e_c: CsrMatrix::from_triplets(c_dim, free_dim, ec),
            r_d: CsrMatrix::from_triplets(free_dim, d_count, rd),
            e_d: CsrMatrix::from_triplets(d_count, free_dim, ed),
            c_coords,
            interior,
            interface,
            if_by_node,
        }
    }

    pub fn c_dim(&self) -> usize {
        self.c_coords.len()
    }

    pub fn d_dim(&self) -> usize {
        self.r_d.ncols()
    }

    pub fn interface_dim(&self) -> usize {
        self.interface.len()
    }

    /// Position of a node's coordinate within the interface ordering.
    pub fn interface_slot(&self, ux: usize, uy: usize, slot: CSlot) -> Option<usize> {
        let c = (*self.if_by_node.get(&(ux, uy))?)[slot.index()]?;
        self.interface.iter().position(|&x| x == c)
    }
}

/// Interface Schur complement of the C block, with subdomain interior
/// solves kept factored.
pub struct SchurSystem<T: Scalar> {
    pub split: Splitting<T>,
    pub a_cc: CsrMatrix<T>,
    interior_chol: Vec<SpdFactor<T>>,
    a_ig: Vec<DMatrix<T>>,
    a_gg: DMatrix<T>,
    if_pos: Vec<Option<usize>>,
    int_pos: Vec<Option<(usize, usize)>>,
}

impl<T: Scalar> SchurSystem<T> {
    pub fn new(space: &Space<T>, a_free: &CsrMatrix<T>) -> Result<Self> {
        let split = Splitting::new(space);
        let a_cc = a_free.congruence(&split.r_c);
        let mut interior_chol = Vec::new();
        let mut a_ig = Vec::new();
        for (j, idx) in split.interior.iter().enumerate() {
            let a_ii = a_cc.submatrix_dense(idx, idx);
            interior_chol.push(factor_spd(a_ii, &format!("interior block of subdomain {j}"))?);
            a_ig.push(a_cc.submatrix_dense(idx, &split.interface));
        }
        let a_gg = a_cc.submatrix_dense(&split.interface, &split.interface);
        let mut if_pos = vec![None; split.c_dim()];
        for (p, &c) in split.interface.iter().enumerate() {
            if_pos[c] = Some(p);
        }
        let mut int_pos = vec![None; split.c_dim()];
        for (j, idx) in split.interior.iter().enumerate() {
            for (p, &c) in idx.iter().enumerate() {
                int_pos[c] = Some((j, p));
            }
        }
        Ok(SchurSystem { split, a_cc, interior_chol, a_ig, a_gg, if_pos, int_pos })
    }

    pub fn interface_dim(&self) -> usize {
        self.split.interface.len()
    }

    /// S g with S the interface Schur complement of the C block.
    pub fn apply_schur(&self, g: &DVector<T>) -> DVector<T> {
        let mut out = &self.a_gg * g;
        for (j, chol) in self.interior_chol.iter().enumerate() {
            let t = &self.a_ig[j] * g;
            out -= self.a_ig[j].tr_mul(&chol.solve(&t));
        }
        out
    }

    /// Energy-minimizing extension of interface data into the C space.
    pub fn ext(&self, g: &DVector<T>) -> DVector<T> {
        let mut c = DVector::zeros(self.split.c_dim());
        for (p, &ci) in self.split.interface.iter().enumerate() {
            c[ci] = g[p];
        }
        for (j, chol) in self.interior_chol.iter().enumerate() {
            let u = chol.solve(&(&self.a_ig[j] * g));
            for (p, &ci) in self.split.interior[j].iter().enumerate() {
                c[ci] = -u[p];
            }
        }
        c
    }

    /// Adjoint of `ext`: collapses a C residual onto the interface.
    pub fn ext_t(&self, w: &DVector<T>) -> DVector<T> {
        let mut out = DVector::from_iterator(
            self.interface_dim(),
            self.split.interface.iter().map(|&ci| w[ci]),
        );
        for (j, chol) in self.interior_chol.iter().enumerate() {
            let w_i = DVector::from_iterator(
                self.split.interior[j].len(),
                self.split.interior[j].iter().map(|&ci| w[ci]),
            );
            out -= self.a_ig[j].tr_mul(&chol.solve(&w_i));
        }
        out
    }

    /// Interior solves with zero interface data, embedded back into C
    /// coordinates.
    pub fn solve_interior_embed(&self, r_c: &DVector<T>) -> DVector<T> {
        let mut out = DVector::zeros(self.split.c_dim());
        for (j, chol) in self.interior_chol.iter().enumerate() {
            let r_i = DVector::from_iterator(
                self.split.interior[j].len(),
                self.split.interior[j].iter().map(|&ci| r_c[ci]),
            );
            let u = chol.solve(&r_i);
            for (p, &ci) in self.split.interior[j].iter().enumerate() {
                out[ci] = u[p];
            }
        }
        out
    }

    /// The Schur complement as a dense matrix, for eigenvalue studies.
    pub fn dense_schur(&self) -> DMatrix<T> {
        let mut s = self.a_gg.clone();
        for (j, chol) in self.interior_chol.iter().enumerate() {
            let x = chol.solve_matrix(&self.a_ig[j]);
            s -= self.a_ig[j].tr_mul(&x);
        }
        s
    }

    /// Whether a C coordinate lies on the interface, and where.
    pub fn interface_position(&self, c: usize) -> Option<usize> {
        self.if_pos[c]
    }

    pub fn interior_position(&self, c: usize) -> Option<(usize, usize)> {
        self.int_pos[c]
    }
}
