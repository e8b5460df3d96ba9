//! Manufactured solution for convergence checks.
//!
//! u(x, y) = sin^2(pi x) sin^2(pi y) satisfies the clamped plate boundary
//! conditions u = du/dn = 0 on the boundary of the unit square, and its
//! biharmonic forcing has the closed form below.

use crate::Scalar;

pub fn exact_u<T: Scalar>(x: T, y: T) -> T {
    let pi = T::pi();
    let sx = (pi * x).sin();
    let sy = (pi * y).sin();
    sx * sx * sy * sy
}

/// f = biharmonic of u: with cx = cos(2 pi x), cy = cos(2 pi y),
/// f = -4 pi^4 (cx + cy) + 16 pi^4 cx cy.
pub fn exact_f<T: Scalar>(x: T, y: T) -> T {
    let pi = T::pi();
    let two_pi = T::of(2.0) * pi;
    let pi4 = pi.powi(4);
    let cx = (two_pi * x).cos();
    let cy = (two_pi * y).cos();
    -T::of(4.0) * pi4 * (cx + cy) + T::of(16.0) * pi4 * cx * cy
}

/// Hessian (u_xx, u_xy, u_yy) of the manufactured solution: u separates as
/// s(x) s(y) with s(t) = sin^2(pi t), s'(t) = pi sin(2 pi t) and
/// s''(t) = 2 pi^2 cos(2 pi t).
pub fn exact_hessian<T: Scalar>(x: T, y: T) -> (T, T, T) {
    let pi = T::pi();
    let two_pi = T::of(2.0) * pi;
    let s = |t: T| (pi * t).sin().powi(2);
    let ds = |t: T| pi * (two_pi * t).sin();
    let dds = |t: T| T::of(2.0) * pi * pi * (two_pi * t).cos();
    (dds(x) * s(y), ds(x) * ds(y), s(x) * dds(y))
}
