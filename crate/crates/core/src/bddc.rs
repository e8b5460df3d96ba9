//! Balancing domain decomposition by constraints for the interface problem.
//!
//! The interface coordinates of the C space live at skeleton nodes (value
//! and mean normal derivative) and at cross points (value, two means, mean
//! mixed). Cross point coordinates are primal: each subdomain touching the
//! corner sees the same four values, which glues the local problems and
//! forms the coarse space of dimension 4 (m-1)^2. Skeleton node coordinates
//! are dual: the two subdomains sharing the node each hold a copy, weighted
//! one half on both scatter and gather.
//!
//! Each subdomain contributes its local bilinear form restricted to the
//! local C dofs, ordered interior I, skeleton sides E, cross corners X:
//!
//!   S_j = K_EE - K_EI K_II^-1 K_IE     (local dual Schur, corners pinned)
//!   W_j = -(K_FF^-1 K_FX) E-rows, F = I + E   (corner extension traces)
//!   T_j = K_XX - K_XF K_FF^-1 K_FX     (local coarse matrix)
//!
//! and the preconditioner applies, for an interface residual r with dual
//! copies rho_j = r_E / 2,
//!
//!   y0   = (sum_j T_j)^-1 (r_X + sum_j W_j^T rho_j)
//!   z_X  = y0
//!   z_E += (W_j y0_j + S_j^-1 rho_j) / 2   per subdomain.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::assemble::assemble_subdomain_modified;
use crate::error::{Error, Result};
use crate::solve::{factor_spd, SpdFactor};
use crate::space::{DofKind, Space};
use crate::split::{CSlot, SchurSystem, Splitting};
use crate::sparse::CsrMatrix;
use crate::Scalar;

struct SubBlock<T: Scalar> {
    /// Interface positions of this subdomain's dual coordinates, in the
    /// order of the local E dofs.
    e_pos: Vec<usize>,
    /// Coarse indices of this subdomain's corner coordinates, in the order
    /// of the local X dofs.
    x_slots: Vec<usize>,
    s_chol: SpdFactor<T>,
    w: DMatrix<T>,
}

/// One element of the partially glued interface space: corner coordinates
/// are single valued, skeleton side coordinates carry one copy per adjacent
/// subdomain.
pub struct BrokenInterface<T> {
    pub primal: DVector<T>,
    pub duals: Vec<DVector<T>>,
}

pub struct BddcPreconditioner<T: Scalar> {
    dim: usize,
    primal_of_pos: Vec<Option<usize>>,
    subs: Vec<SubBlock<T>>,
    coarse: SpdFactor<T>,
    primal_dim: usize,
}

impl<T: Scalar> BddcPreconditioner<T> {
    pub fn new(space: &Space<T>, split: &Splitting<T>, eta: T, gauss: usize) -> Result<Self> {
        let dec = &space.dec;
        let mesh = &space.mesh;
        let m = dec.m();
        if m < 2 {
            return Err(Error::InvalidParameter(
                "the interface preconditioner needs at least a 2 x 2 subdomain grid".into(),
            ));
        }
        let two_n = 2 * mesh.n();
        let step = 2 * dec.stride();

        let crosses = dec.cross_points();
        let mut coarse_base = BTreeMap::new();
        for (k, &(ux, uy)) in crosses.iter().enumerate() {
            coarse_base.insert((ux, uy), 4 * k);
        }
        let primal_dim = 4 * crosses.len();

        let dim = split.interface_dim();
        let mut primal_of_pos = vec![None; dim];
        for (p, &c) in split.interface.iter().enumerate() {
            let coord = split.c_coords[c];
            if let Some(&base) = coarse_base.get(&(coord.ux, coord.uy)) {
                primal_of_pos[p] = Some(base + coord.slot.index());
            }
        }

        let mut s0: DMatrix<T> = DMatrix::zeros(primal_dim, primal_dim);
        let mut subs = Vec::with_capacity(dec.subdomain_count());
        for j in 0..dec.subdomain_count() {
            let k_full = assemble_subdomain_modified(space, j, eta, gauss);
            let dofs = &space.dofs;
            let (si, sj) = dec.subdomain_pos(j);
            let (x0, x1) = (si * step, (si + 1) * step);
            let (y0, y1) = (sj * step, (sj + 1) * step);

            let mut l: Vec<usize> = Vec::new();
            for uy in y0 + 1..y1 {
                for ux in x0 + 1..x1 {
                    if dofs.anchored(ux, uy) {
                        l.push(dofs.dof_id(ux, uy, DofKind::Value).expect("anchored value"));
                    }
                }
            }
            let n_i = l.len();

            // sides on the skeleton: (vertical, fixed coordinate, span, inside
            // derivative, interface slot)
            let mut sides = Vec::new();
            if si > 0 {
                sides.push((true, x0, DofKind::DxPlus));
            }
            if si + 1 < m {
                sides.push((true, x1, DofKind::DxMinus));
            }
            if sj > 0 {
                sides.push((false, y0, DofKind::DyPlus));
            }
            if sj + 1 < m {
                sides.push((false, y1, DofKind::DyMinus));
            }
            let mut e_pos = Vec::new();
            for &(vertical, fixed, inside) in &sides {
                let (lo, hi) = if vertical { (y0, y1) } else { (x0, x1) };
                let slot = if vertical { CSlot::SX } else { CSlot::SY };
                for u in lo + 1..hi {
                    let (ux, uy) = if vertical { (fixed, u) } else { (u, fixed) };
                    if !dofs.anchored(ux, uy) {
                        continue;
                    }
                    l.push(dofs.dof_id(ux, uy, DofKind::Value).expect("gamma value"));
                    l.push(dofs.dof_id(ux, uy, inside).expect("inside derivative"));
                    e_pos.push(
                        split.interface_slot(ux, uy, CSlot::Value).expect("gamma on interface"),
                    );
                    e_pos.push(split.interface_slot(ux, uy, slot).expect("mean on interface"));
                }
            }
            let n_e = e_pos.len();

            let mut x_slots = Vec::new();
            for (cy, cx) in [(y0, x0), (y0, x1), (y1, x0), (y1, x1)] {
                if cx == 0 || cx == two_n || cy == 0 || cy == two_n {
                    continue;
                }
                let (x_plus, y_plus) = (cx == x0, cy == y0);
                let dx = if x_plus { DofKind::DxPlus } else { DofKind::DxMinus };
                let dy = if y_plus { DofKind::DyPlus } else { DofKind::DyMinus };
                for kind in [DofKind::Value, dx, dy, DofKind::Mixed { x_plus, y_plus }] {
                    l.push(dofs.dof_id(cx, cy, kind).expect("corner dof"));
                }
                let base = coarse_base[&(cx, cy)];
                x_slots.extend([base, base + 1, base + 2, base + 3]);
            }
            let n_x = x_slots.len();
            let n_f = n_i + n_e;

            let k_ll = k_full.submatrix_dense(&l, &l);
            let k_ie = k_ll.view((0, n_i), (n_i, n_e)).into_owned();
            let k_ee = k_ll.view((n_i, n_i), (n_e, n_e)).into_owned();
            let ii_chol = factor_spd(
                k_ll.view((0, 0), (n_i, n_i)).into_owned(),
                &format!("local interior block of subdomain {j}"),
            )?;
            let s_j = &k_ee - k_ie.tr_mul(&ii_chol.solve_matrix(&k_ie));

            let k_fx = k_ll.view((0, n_f), (n_f, n_x)).into_owned();
            let k_xx = k_ll.view((n_f, n_f), (n_x, n_x)).into_owned();
            let ff_chol = factor_spd(
                k_ll.view((0, 0), (n_f, n_f)).into_owned(),
                &format!("pinned local problem of subdomain {j}"),
            )?;
            let w_full = -ff_chol.solve_matrix(&k_fx);
            let t_j = &k_xx + k_fx.tr_mul(&w_full);
            for (q, &sq) in x_slots.iter().enumerate() {
                for (p, &sp) in x_slots.iter().enumerate() {
                    s0[(sp, sq)] += t_j[(p, q)];
                }
            }

            subs.push(SubBlock {
                e_pos,
                x_slots,
                s_chol: factor_spd(s_j, &format!("dual Schur of subdomain {j}"))?,
                w: w_full.view((n_i, 0), (n_e, n_x)).into_owned(),
            });
        }
        let coarse = factor_spd(s0, "coarse problem")?;
        Ok(BddcPreconditioner { dim, primal_of_pos, subs, coarse, primal_dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coarse_dim(&self) -> usize {
        self.primal_dim
    }

    /// Scatter interface coefficients into the partially glued space: corner
    /// coordinates stay shared, every skeleton side coordinate is copied to
    /// both subdomains that hold it.
    pub fn inject(&self, g: &DVector<T>) -> BrokenInterface<T> {
        assert_eq!(g.len(), self.dim);
        let mut primal = DVector::zeros(self.primal_dim);
        for (p, slot) in self.primal_of_pos.iter().enumerate() {
            if let Some(k) = slot {
                primal[*k] = g[p];
            }
        }
        let duals = self
            .subs
            .iter()
            .map(|s| DVector::from_iterator(s.e_pos.len(), s.e_pos.iter().map(|&p| g[p])))
            .collect();
        BrokenInterface { primal, duals }
    }

    /// Average the duplicated copies back onto the interface; corner
    /// coordinates pass through. Left inverse of `inject`.
    pub fn project_gamma(&self, v: &BrokenInterface<T>) -> DVector<T> {
        let half = T::of(0.5);
        let mut g = DVector::zeros(self.dim);
        for (p, slot) in self.primal_of_pos.iter().enumerate() {
            if let Some(k) = slot {
                g[p] = v.primal[*k];
            }
        }
        for (s, d) in self.subs.iter().zip(&v.duals) {
            for (i, &p) in s.e_pos.iter().enumerate() {
                g[p] += half * d[i];
            }
        }
        g
    }

    pub fn apply(&self, r: &DVector<T>) -> DVector<T> {
        assert_eq!(r.len(), self.dim);
        let half = T::of(0.5);
        let rhos: Vec<DVector<T>> = self
            .subs
            .iter()
            .map(|s| DVector::from_iterator(s.e_pos.len(), s.e_pos.iter().map(|&p| r[p] * half)))
            .collect();

        let mut g0 = DVector::zeros(self.primal_dim);
        for (p, slot) in self.primal_of_pos.iter().enumerate() {
            if let Some(k) = slot {
                g0[*k] = r[p];
            }
        }
        for (s, rho) in self.subs.iter().zip(&rhos) {
            let wt = s.w.tr_mul(rho);
            for (q, &sq) in s.x_slots.iter().enumerate() {
                g0[sq] += wt[q];
            }
        }
        let y0 = self.coarse.solve(&g0);

        let mut z = DVector::zeros(self.dim);
        for (p, slot) in self.primal_of_pos.iter().enumerate() {
            if let Some(k) = slot {
                z[p] = y0[*k];
            }
        }
        for (s, rho) in self.subs.iter().zip(&rhos) {
            let y0_j =
                DVector::from_iterator(s.x_slots.len(), s.x_slots.iter().map(|&k| y0[k]));
            let corr = &s.w * y0_j + s.s_chol.solve(rho);
            for (i, &p) in s.e_pos.iter().enumerate() {
                z[p] += half * corr[i];
            }
        }
        z
    }
}

/// The complete preconditioner for the discrete operator: an exact solve on
/// the jump part, exact subdomain interior solves, and the interface
/// preconditioner composed with the energy-minimal extension:
///
///   B = R_D A_D^-1 R_D^T
///     + R_C (interior solves + ext o B_bddc o ext^T) R_C^T.
pub struct FullPreconditioner<T: Scalar> {
    schur: SchurSystem<T>,
    bddc: BddcPreconditioner<T>,
    d_chol: SpdFactor<T>,
}

impl<T: Scalar> FullPreconditioner<T> {
    pub fn new(space: &Space<T>, a_free: &CsrMatrix<T>, eta: T, gauss: usize) -> Result<Self> {
        let schur = SchurSystem::new(space, a_free)?;
        let bddc = BddcPreconditioner::new(space, &schur.split, eta, gauss)?;
        let a_dd = a_free.congruence(&schur.split.r_d).to_dense();
        let d_chol = factor_spd(a_dd, "jump block")?;
        Ok(FullPreconditioner { schur, bddc, d_chol })
    }

    pub fn schur(&self) -> &SchurSystem<T> {
        &self.schur
    }

    pub fn bddc(&self) -> &BddcPreconditioner<T> {
        &self.bddc
    }

    pub fn apply(&self, r: &DVector<T>) -> DVector<T> {
        let split = &self.schur.split;
        let z_d = split.r_d.matvec(&self.d_chol.solve(&split.r_d.matvec_transpose(r)));
        let r_c = split.r_c.matvec_transpose(r);
        let mut z_c = self.schur.solve_interior_embed(&r_c);
        z_c += self.schur.ext(&self.bddc.apply(&self.schur.ext_t(&r_c)));
        z_d + split.r_c.matvec(&z_c)
    }
}
