//! Assembly of the interior penalty bilinear form.
//!
//! The discrete operator couples element Hessians with edge terms over all
//! mesh edges, including those on the domain boundary:
//!
//!   a(v, w) = sum_K int_K D2v : D2w
//!           + sum_e int_e (eta / |e|) [dv/dn][dw/dn]
//!           + sum_e int_e ({d2v/dn2}[dw/dn] + {d2w/dn2}[dv/dn])
//!
//! with the edge normal fixed to +x for vertical and +y for horizontal
//! edges, jump = plus trace minus minus trace, and average the mean of the
//! two traces. On boundary edges the jump is the one-sided derivative,
//! negated where the fixed normal points out of the domain, and the average
//! is one-sided. The penalty weight eta must be large enough for coercivity;
//! eta = 5 is the working default.
//!
//! Everything is first assembled in the standard nodal basis on the full
//! lattice, then pushed through the change of basis and the essential
//! boundary restriction. Subdomain-local forms take the element sums plus
//! the edges owned by one subdomain, so that the global form is the sum of
//! the local forms plus the skeleton edge terms.

use nalgebra::{DMatrix, DVector};

use crate::grid::{Axis, Edge, Element, Mesh};
use crate::space::{shape1d, Space};
use crate::sparse::CsrMatrix;
use crate::Scalar;

/// Default quadrature order; exact for every integrand the form produces.
pub const GAUSS_DEFAULT: usize = 3;

/// Default penalty weight.
pub const DEFAULT_ETA: f64 = 5.0;

/// Gauss-Legendre rule on [0, 1] as (point, weight) pairs, weights summing
/// to one.
pub fn gauss_1d<T: Scalar>(points: usize) -> Vec<(T, T)> {
    let half = T::of(0.5);
    match points {
        1 => vec![(half, T::one())],
        2 => {
            let d = T::of(0.5 / 3.0f64.sqrt());
            vec![(half - d, half), (half + d, half)]
        }
        3 => {
            let d = T::of(0.5 * (3.0f64 / 5.0).sqrt());
            let (w0, w1) = (T::of(5.0 / 18.0), T::of(4.0 / 9.0));
            vec![(half - d, w0), (half, w1), (half + d, w0)]
        }
        4 => {
            let (p0, p1) = (0.339_981_043_584_856_3, 0.861_136_311_594_052_6);
            let (w0, w1) = (0.652_145_154_862_546_1, 0.347_854_845_137_545_4);
            [(-p1, w1), (-p0, w0), (p0, w0), (p1, w1)]
                .iter()
                .map(|&(p, w)| (T::of(0.5 * (1.0 + p)), T::of(0.5 * w)))
                .collect()
        }
        _ => panic!("unsupported quadrature order {points}"),
    }
}

/// Element stiffness in the standard station basis (index b*3 + a), for the
/// uniform mesh with n elements per side.
pub fn element_stiffness<T: Scalar>(n: usize, gauss: usize) -> DMatrix<T> {
    let g = gauss_1d::<T>(gauss);
    let nf = T::of(n as f64);
    let scale = nf * nf;
    let two = T::of(2.0);
    let mut k = DMatrix::zeros(9, 9);
    for &(ty, wy) in &g {
        for &(tx, wx) in &g {
            let w = wx * wy * scale;
            let mut dxx = [T::zero(); 9];
            let mut dxy = [T::zero(); 9];
            let mut dyy = [T::zero(); 9];
            for b in 0..3 {
                for a in 0..3 {
                    let i = b * 3 + a;
                    dxx[i] = shape1d(a, tx, 2) * shape1d(b, ty, 0);
                    dxy[i] = shape1d(a, tx, 1) * shape1d(b, ty, 1);
                    dyy[i] = shape1d(a, tx, 0) * shape1d(b, ty, 2);
                }
            }
            for i in 0..9 {
                for j in 0..9 {
                    k[(i, j)] +=
                        w * (dxx[i] * dxx[j] + two * dxy[i] * dxy[j] + dyy[i] * dyy[j]);
                }
            }
        }
    }
    k
}

/// Edge contribution as a dense block over the stations of the adjacent
/// elements (18 columns interior, 9 on the boundary).
pub struct EdgeOperator<T> {
    /// Global node ids, one per local column.
    pub nodes: Vec<usize>,
    pub matrix: DMatrix<T>,
}

pub fn edge_operator<T: Scalar>(mesh: &Mesh, e: Edge, eta: T, gauss: usize) -> EdgeOperator<T> {
    let nf = T::of(mesh.n() as f64);
    let minus = mesh.minus_element(e);
    let plus = mesh.plus_element(e);
    // (element, trace at its low face, jump sign)
    let sides: Vec<(Element, bool, T)> = match (minus, plus) {
        (Some(a), Some(b)) => vec![(a, false, -T::one()), (b, true, T::one())],
        (None, Some(b)) => vec![(b, true, T::one())],
        (Some(a), None) => vec![(a, false, -T::one())],
        (None, None) => unreachable!(),
    };
    let avg_w = if sides.len() == 2 { T::of(0.5) } else { T::one() };

    let mut nodes = Vec::with_capacity(9 * sides.len());
    for &(el, _, _) in &sides {
        for b in 0..3 {
            for a in 0..3 {
                let (ux, uy) = mesh.element_node(el, a, b);
                nodes.push(mesh.node_id(ux, uy));
            }
        }
    }

    let dim = nodes.len();
    let g = gauss_1d::<T>(gauss);
    let h = T::one() / nf;
    let mut matrix = DMatrix::zeros(dim, dim);
    for &(t, w) in &g {
        let mut jump = vec![T::zero(); dim];
        let mut avg2 = vec![T::zero(); dim];
        for (s, &(_, at_low, js)) in sides.iter().enumerate() {
            let face = if at_low { T::zero() } else { T::one() };
            for b in 0..3 {
                for a in 0..3 {
                    let i = s * 9 + b * 3 + a;
                    let (d1, d2) = match e.axis {
                        Axis::X => (
                            shape1d(a, face, 1) * shape1d(b, t, 0) * nf,
                            shape1d(a, face, 2) * shape1d(b, t, 0) * nf * nf,
                        ),
                        Axis::Y => (
                            shape1d(b, face, 1) * shape1d(a, t, 0) * nf,
                            shape1d(b, face, 2) * shape1d(a, t, 0) * nf * nf,
                        ),
                    };
                    jump[i] = js * d1;
                    avg2[i] = avg_w * d2;
                }
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                matrix[(i, j)] +=
                    w * (eta * jump[i] * jump[j] + h * (avg2[i] * jump[j] + jump[i] * avg2[j]));
            }
        }
    }
    EdgeOperator { nodes, matrix }
}

fn assemble_standard_filtered<T: Scalar>(
    mesh: &Mesh,
    eta: T,
    gauss: usize,
    elem_ok: impl Fn(Element) -> bool,
    edge_ok: impl Fn(Edge) -> bool,
) -> CsrMatrix<T> {
    let k_el = element_stiffness::<T>(mesh.n(), gauss);
    let mut trips = Vec::new();
    for el in mesh.elements() {
        if !elem_ok(el) {
            continue;
        }
        let mut nodes = [0usize; 9];
        for b in 0..3 {
            for a in 0..3 {
                let (ux, uy) = mesh.element_node(el, a, b);
                nodes[b * 3 + a] = mesh.node_id(ux, uy);
            }
        }
        for i in 0..9 {
            for j in 0..9 {
                let v = k_el[(i, j)];
                if v != T::zero() {
                    trips.push((nodes[i], nodes[j], v));
                }
            }
        }
    }
    for e in mesh.edges() {
        if !edge_ok(e) {
            continue;
        }
        let op = edge_operator(mesh, e, eta, gauss);
        for i in 0..op.nodes.len() {
            for j in 0..op.nodes.len() {
                let v = op.matrix[(i, j)];
                if v != T::zero() {
                    trips.push((op.nodes[i], op.nodes[j], v));
                }
            }
        }
    }
    let nc = mesh.node_count();
    CsrMatrix::from_triplets(nc, nc, trips)
}

/// Full form in the standard nodal basis, no boundary condition.
pub fn assemble_standard<T: Scalar>(space: &Space<T>, eta: T, gauss: usize) -> CsrMatrix<T> {
    assemble_standard_filtered(&space.mesh, eta, gauss, |_| true, |_| true)
}

/// Full form in the modified basis, no boundary condition.
pub fn assemble_full_modified<T: Scalar>(space: &Space<T>, eta: T, gauss: usize) -> CsrMatrix<T> {
    assemble_standard(space, eta, gauss).congruence(space.basis.matrix())
}

/// The discrete operator: modified basis, essential boundary condition
/// applied by restriction to the free dofs.
pub fn assemble_free<T: Scalar>(space: &Space<T>, eta: T, gauss: usize) -> CsrMatrix<T> {
    let full = assemble_full_modified(space, eta, gauss);
    let free: Vec<usize> = (0..space.dofs.free_dim()).map(|i| space.dofs.full_index(i)).collect();
    full.submatrix(&free, &free)
}

/// Local form of one subdomain (its elements, its interior edges and its
/// stretch of the domain boundary), modified basis, full pre-BC indexing.
pub fn assemble_subdomain_modified<T: Scalar>(
    space: &Space<T>,
    j: usize,
    eta: T,
    gauss: usize,
) -> CsrMatrix<T> {
    let dec = &space.dec;
    let std = assemble_standard_filtered(
        &space.mesh,
        eta,
        gauss,
        |el| dec.subdomain_of_element(el) == j,
        |e| dec.owner_of_edge(&space.mesh, e) == Some(j),
    );
    std.congruence(space.basis.matrix())
}

/// Skeleton edge terms alone, modified basis, full pre-BC indexing.
pub fn assemble_gamma_modified<T: Scalar>(space: &Space<T>, eta: T, gauss: usize) -> CsrMatrix<T> {
    let dec = &space.dec;
    let std = assemble_standard_filtered(
        &space.mesh,
        eta,
        gauss,
        |_| false,
        |e| dec.owner_of_edge(&space.mesh, e).is_none(),
    );
    std.congruence(space.basis.matrix())
}

/// Load vector int f v in the standard nodal basis.
pub fn assemble_load_standard<T: Scalar>(
    mesh: &Mesh,
    f: impl Fn(T, T) -> T,
    gauss: usize,
) -> DVector<T> {
    let g = gauss_1d::<T>(gauss);
    let nf = T::of(mesh.n() as f64);
    let h = T::one() / nf;
    let area = h * h;
    let mut b = DVector::zeros(mesh.node_count());
    for el in mesh.elements() {
        let (x0, y0) = (T::of(el.ix as f64) * h, T::of(el.iy as f64) * h);
        for &(ty, wy) in &g {
            for &(tx, wx) in &g {
                let w = wx * wy * area * f(x0 + tx * h, y0 + ty * h);
                for bb in 0..3 {
                    for aa in 0..3 {
                        let (ux, uy) = mesh.element_node(el, aa, bb);
                        b[mesh.node_id(ux, uy)] += w * shape1d(aa, tx, 0) * shape1d(bb, ty, 0);
                    }
                }
            }
        }
    }
    b
}

/// Load vector in the free modified dofs.
pub fn assemble_load<T: Scalar>(
    space: &Space<T>,
    f: impl Fn(T, T) -> T,
    gauss: usize,
) -> DVector<T> {
    let std = assemble_load_standard(&space.mesh, f, gauss);
    space.dofs.restrict(&space.basis.transpose_apply(&std))
}

/// a(u, v) through an assembled matrix.
pub fn energy_product<T: Scalar>(a: &CsrMatrix<T>, u: &DVector<T>, v: &DVector<T>) -> T {
    a.matvec(v).dot(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::EdgeCategory;
    use nalgebra::DVector;

    fn space(n: usize, m: usize) -> Space<f64> {
        Space::new(n, m).unwrap()
    }

    fn station_values(f: impl Fn(f64, f64) -> f64, el: Element, n: usize) -> [f64; 9] {
        let h = 1.0 / n as f64;
        let mut v = [0.0; 9];
        for b in 0..3 {
            for a in 0..3 {
                let x = (el.ix as f64 + a as f64 / 2.0) * h;
                let y = (el.iy as f64 + b as f64 / 2.0) * h;
                v[b * 3 + a] = f(x, y);
            }
        }
        v
    }

    #[test]
    fn element_energy_of_affine_is_zero() {
        let k = element_stiffness::<f64>(8, GAUSS_DEFAULT);
        let v = station_values(|x, y| 2.0 + 3.0 * x - y, Element { ix: 2, iy: 5 }, 8);
        let v = DVector::from_row_slice(&v);
        let scale = k.abs().max() * v.abs().max();
        assert!((&k * &v).abs().max() < 1e-13 * scale);
    }

    #[test]
    fn element_energy_of_parabola_is_four_times_area() {
        // v = x^2 has D2v : D2v = 4
        for n in [4usize, 8, 10] {
            let k = element_stiffness::<f64>(n, GAUSS_DEFAULT);
            let v = station_values(|x, _| x * x, Element { ix: 1, iy: 0 }, n);
            let v = DVector::from_row_slice(&v);
            let area = 1.0 / (n * n) as f64;
            assert!((v.dot(&(&k * &v)) - 4.0 * area).abs() < 1e-12);
        }
    }

    #[test]
    fn edge_penalty_of_unit_kink_is_exact() {
        // piecewise linear with slopes +-1/h across the edge: jump = -2/h,
        // second derivatives vanish, so the form gives eta * 4 / h^2
        let sp = space(8, 4);
        let e = Edge { axis: Axis::X, line: 3, cell: 2 };
        let eta = 5.0;
        let op = edge_operator(&sp.mesh, e, eta, GAUSS_DEFAULT);
        let mut v = Vec::new();
        for a in 0..18 {
            let station = a % 9 % 3;
            let t = station as f64 / 2.0;
            v.push(if a < 9 { t } else { 1.0 - t });
        }
        let v = DVector::from_vec(v);
        let h = 0.125f64;
        let got = v.dot(&(&op.matrix * &v));
        assert!((got - 4.0 * eta / (h * h)).abs() < 1e-9 * (1.0 + got.abs()));
    }

    #[test]
    fn smooth_function_sees_no_interior_edge_energy() {
        // x^2 y^2 is a single global biquadratic: interior jumps vanish and
        // with them both the penalty and the consistency terms
        let sp = space(8, 4);
        for e in sp.mesh.edges() {
            if sp.mesh.is_boundary_edge(e) {
                continue;
            }
            let op = edge_operator(&sp.mesh, e, 5.0, GAUSS_DEFAULT);
            let minus = sp.mesh.minus_element(e).unwrap();
            let plus = sp.mesh.plus_element(e).unwrap();
            let mut v = Vec::new();
            v.extend_from_slice(&station_values(|x, y| x * x * y * y, minus, 8));
            v.extend_from_slice(&station_values(|x, y| x * x * y * y, plus, 8));
            let v = DVector::from_vec(v);
            let got = v.dot(&(&op.matrix * &v));
            assert!(got.abs() < 1e-9, "edge {e:?}: {got}");
        }
    }

    #[test]
    fn boundary_edge_sign_matches_jump_convention() {
        // for v = x on the left boundary edge, jump = +1; on the right
        // boundary, jump = -1; the penalty part must be eta * jump^2 either
        // way, and the one-sided average of second derivatives is zero
        let sp = space(8, 4);
        let eta = 5.0;
        for (line, cell) in [(0usize, 3usize), (8, 3)] {
            let e = Edge { axis: Axis::X, line, cell };
            let op = edge_operator(&sp.mesh, e, eta, GAUSS_DEFAULT);
            let el = sp.mesh.minus_element(e).or(sp.mesh.plus_element(e)).unwrap();
            let v = DVector::from_row_slice(&station_values(|x, _| x, el, 8));
            let got = v.dot(&(&op.matrix * &v));
            assert!((got - eta).abs() < 1e-10, "line {line}: {got}");
        }
    }

    #[test]
    fn operator_is_symmetric_and_spd() {
        let sp = space(8, 4);
        let a = assemble_free(&sp, 5.0, GAUSS_DEFAULT);
        assert_eq!(a.nrows(), 225);
        assert!(a.asymmetry() < 1e-13);
        let dense = a.to_dense();
        assert!(nalgebra::Cholesky::new(dense).is_some(), "operator not SPD");
    }

    #[test]
    fn quadrature_order_does_not_change_the_operator() {
        let sp = space(8, 4);
        let a3 = assemble_free(&sp, 5.0, 3).to_dense();
        let a4 = assemble_free(&sp, 5.0, 4).to_dense();
        let scale = a3.abs().max();
        assert!((&a3 - &a4).abs().max() < 1e-12 * scale);
    }

    #[test]
    fn local_forms_sum_to_the_global_form() {
        let sp = space(8, 4);
        let eta = 5.0;
        let full = assemble_full_modified(&sp, eta, GAUSS_DEFAULT).to_dense();
        let mut sum = assemble_gamma_modified(&sp, eta, GAUSS_DEFAULT).to_dense();
        for j in 0..sp.dec.subdomain_count() {
            sum += assemble_subdomain_modified(&sp, j, eta, GAUSS_DEFAULT).to_dense();
        }
        let scale = full.abs().max();
        assert!((&full - &sum).abs().max() < 1e-10 * scale);
    }

    #[test]
    fn every_edge_is_owned_once_or_on_gamma() {
        let sp = space(12, 4);
        for e in sp.mesh.edges() {
            match sp.dec.owner_of_edge(&sp.mesh, e) {
                Some(_) => {
                    assert_ne!(sp.dec.edge_category(&sp.mesh, e), EdgeCategory::OnGamma)
                }
                None => assert_eq!(sp.dec.edge_category(&sp.mesh, e), EdgeCategory::OnGamma),
            }
        }
    }

    #[test]
    fn load_of_unit_forcing_sums_to_domain_area() {
        let sp = space(8, 4);
        let b: DVector<f64> = assemble_load_standard(&sp.mesh, |_, _| 1.0, GAUSS_DEFAULT);
        assert!((b.sum() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn load_pairs_correctly_with_interpolants() {
        // <b, v> must equal int f v for v in the space; take f = 1 and
        // v the interpolant of a biquadratic that satisfies the BC closely
        // enough to stay in the free space: x^2(1-x)^2 y^2(1-y)^2 is degree
        // 4, not in the space, so check against quadrature of v itself
        let sp = space(8, 4);
        let v_free = sp.interpolate(|x, y| x * (1.0 - x) * y * (1.0 - y));
        let b = assemble_load(&sp, |_, _| 1.0, GAUSS_DEFAULT);
        let nodal = sp.nodal_from_free(&v_free);
        let g = gauss_1d::<f64>(3);
        let mut integral = 0.0;
        for el in sp.mesh.elements() {
            for &(ty, wy) in &g {
                for &(tx, wx) in &g {
                    integral +=
                        wx * wy / 64.0 * sp.evaluate_nodal(&nodal, el, tx, ty, 0, 0);
                }
            }
        }
        assert!((b.dot(&v_free) - integral).abs() < 1e-12);
    }

    #[test]
    fn condition_number_matches_expected_scale() {
        // eta = 5, n = 8, m = 4: the operator in the h-scaled modified basis
        // has condition number about 1.1e3
        let sp = space(8, 4);
        let a = assemble_free(&sp, 5.0, GAUSS_DEFAULT).to_dense();
        let eig = nalgebra::SymmetricEigen::new(a);
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        assert!(min > 0.0);
        let kappa = max / min;
        assert!(
            kappa > 1.1064e3 / 3.0 && kappa < 1.1064e3 * 3.0,
            "kappa = {kappa}"
        );
    }

    #[test]
    fn congruent_subdomains_have_identical_local_spectra() {
        // interior subdomains of a uniform grid are translates; their local
        // forms agree up to renumbering
        let sp = space(12, 4);
        let eigs = |j: usize| {
            let k = assemble_subdomain_modified(&sp, j, 5.0, GAUSS_DEFAULT).to_dense();
            let mut e: Vec<f64> =
                nalgebra::SymmetricEigen::new(k).eigenvalues.iter().copied().collect();
            e.sort_by(|a, b| a.partial_cmp(b).unwrap());
            e
        };
        // subdomains 5 and 6 are both interior for m = 4
        let (e5, e6) = (eigs(5), eigs(6));
        let scale = e5.last().unwrap().abs();
        for (a, b) in e5.iter().zip(&e6) {
            assert!((a - b).abs() < 1e-9 * scale);
        }
    }
}
