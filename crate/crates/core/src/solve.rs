//! Dense factorizations, conjugate gradients and spectrum utilities.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::Scalar;

/// Dense matrices above this size are refused by the eigenvalue routines.
pub const DENSE_EIG_LIMIT: usize = 5000;

/// Cholesky factor of a symmetric positive definite matrix.
pub struct SpdFactor<T: Scalar> {
    chol: nalgebra::Cholesky<T, nalgebra::Dyn>,
}

impl<T: Scalar> SpdFactor<T> {
    pub fn new(a: DMatrix<T>, context: &str) -> Result<Self> {
        debug_assert_eq!(a.nrows(), a.ncols());
        match nalgebra::Cholesky::new(a) {
            Some(chol) => Ok(SpdFactor { chol }),
            None => Err(Error::NotSpd(context.to_string())),
        }
    }

    pub fn solve(&self, b: &DVector<T>) -> DVector<T> {
        self.chol.solve(b)
    }

    pub fn solve_matrix(&self, b: &DMatrix<T>) -> DMatrix<T> {
        self.chol.solve(b)
    }

    pub fn l(&self) -> DMatrix<T> {
        self.chol.l()
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }
}

/// Factor a dense SPD matrix, naming the operator for error reporting.
pub fn factor_spd<T: Scalar>(a: DMatrix<T>, context: &str) -> Result<SpdFactor<T>> {
    SpdFactor::new(a, context)
}

/// Result of a conjugate gradient run; `x` is the last iterate whether or
/// not the tolerance was reached.
#[derive(Debug, Clone)]
pub struct SolveReport<T> {
    pub x: DVector<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Relative preconditioned residual norm after each iteration.
    pub residual_history: Vec<T>,
}

/// Preconditioned conjugate gradients from a zero initial guess, stopping
/// when the natural residual norm sqrt(r^T M r) drops below `tol` times its
/// initial value. For M = I this is the plain relative residual; in general
/// it is the monitor conjugate gradients track for free.
pub fn pcg<T: Scalar>(
    apply_a: impl Fn(&DVector<T>) -> DVector<T>,
    apply_m: impl Fn(&DVector<T>) -> DVector<T>,
    b: &DVector<T>,
    tol: T,
    max_iter: usize,
) -> Result<SolveReport<T>> {
    let mut x = DVector::zeros(b.len());
    if b.norm() == T::zero() {
        return Ok(SolveReport { x, iterations: 0, converged: true, residual_history: vec![] });
    }
    let mut r = b.clone();
    let mut z = apply_m(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    if rz <= T::zero() {
        return Err(Error::NotSpd("preconditioner gave a nonpositive inner product".into()));
    }
    let rz0 = rz;
    let mut history = Vec::new();
    for k in 1..=max_iter {
        let q = apply_a(&p);
        let pq = p.dot(&q);
        if pq <= T::zero() {
            return Err(Error::NotSpd(format!(
                "conjugate gradients met nonpositive curvature at iteration {k}"
            )));
        }
        let alpha = rz / pq;
        x.axpy(alpha, &p, T::one());
        r.axpy(-alpha, &q, T::one());
        z = apply_m(&r);
        let rz_new = r.dot(&z);
        // r^T M r is nonnegative for SPD M; rounding can cross zero once the
        // residual is at noise level, which just means converged.
        let rel = if rz_new > T::zero() { (rz_new / rz0).sqrt() } else { T::zero() };
        history.push(rel);
        if rel < tol {
            return Ok(SolveReport { x, iterations: k, converged: true, residual_history: history });
        }
        let beta = rz_new / rz;
        rz = rz_new;
        p = &z + &p * beta;
    }
    Ok(SolveReport { x, iterations: max_iter, converged: false, residual_history: history })
}

fn check_symmetric<T: Scalar>(b: &DMatrix<T>, context: &str) -> Result<()> {
    let mut num = T::zero();
    let mut den = T::zero();
    for i in 0..b.nrows() {
        for j in 0..i {
            num = num.max((b[(i, j)] - b[(j, i)]).abs());
        }
        for j in 0..b.nrows() {
            den = den.max(b[(i, j)].abs());
        }
    }
    if den > T::zero() && num > T::of(1e-10) * den {
        return Err(Error::SymmetryBug(format!(
            "{context}: relative asymmetry {:?}",
            num / den
        )));
    }
    Ok(())
}

/// Eigenvalues of a symmetric dense matrix, ascending.
pub fn sym_spectrum<T: Scalar>(a: &DMatrix<T>) -> Result<Vec<T>> {
    if a.nrows() > DENSE_EIG_LIMIT {
        return Err(Error::TooLargeForDense { dim: a.nrows(), limit: DENSE_EIG_LIMIT });
    }
    check_symmetric(a, "dense eigenproblem")?;
    let sym = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        (a[(i, j)] + a[(j, i)]) * T::of(0.5)
    });
    let mut eigs: Vec<T> = nalgebra::SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).expect("real eigenvalues"));
    Ok(eigs)
}

/// Eigenvalues of the generalized pencil M S with S symmetric positive
/// definite and M symmetric with respect to the S inner product. Writing
/// S = L L^T reduces the pencil to the symmetric matrix L^T M L, which must
/// come out symmetric; a violation means M or S is not what it claims to be.
pub fn pencil_spectrum<T: Scalar>(
    apply_m: impl Fn(&DVector<T>) -> DVector<T>,
    s: &DMatrix<T>,
) -> Result<Vec<T>> {
    let dim = s.nrows();
    if dim > DENSE_EIG_LIMIT {
        return Err(Error::TooLargeForDense { dim, limit: DENSE_EIG_LIMIT });
    }
    check_symmetric(s, "pencil right-hand side")?;
    let l = factor_spd(s.clone(), "pencil right-hand side")?.l();
    let mut ml = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let col = DVector::from_column_slice(l.column(k).as_slice());
        ml.set_column(k, &apply_m(&col));
    }
    let b = l.transpose() * ml;
    check_symmetric(&b, "reduced pencil")?;
    let eigs = sym_spectrum(&b)?;
    let scale = eigs.iter().fold(T::zero(), |acc, e| acc.max(e.abs()));
    if let Some(min) = eigs.first() {
        if *min < -T::of(1e-10) * scale {
            return Err(Error::NotSpd(format!(
                "pencil has negative eigenvalue {:?}",
                *min
            )));
        }
    }
    Ok(eigs)
}

/// Smallest and largest eigenvalue of the pencil M S.
pub fn extreme_eigs<T: Scalar>(
    apply_m: impl Fn(&DVector<T>) -> DVector<T>,
    s: &DMatrix<T>,
) -> Result<(T, T)> {
    let eigs = pencil_spectrum(apply_m, s)?;
    Ok((*eigs.first().expect("nonempty"), *eigs.last().expect("nonempty")))
}

/// Extreme eigenvalues of a symmetric operator by Lanczos with full
/// reorthogonalization; an independent cross-check for the dense path.
pub fn lanczos_extreme<T: Scalar>(
    dim: usize,
    op: impl Fn(&DVector<T>) -> DVector<T>,
    steps: usize,
    seed: u64,
) -> Result<(T, T)> {
    assert!(dim > 0);
    let steps = steps.min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(dim, |_, _| T::of(rng.gen_range(-1.0..1.0)));
    v /= v.norm();
    let mut basis: Vec<DVector<T>> = vec![v.clone()];
    let mut alphas: Vec<T> = Vec::new();
    let mut betas: Vec<T> = Vec::new();
    for k in 0..steps {
        let mut w = op(&basis[k]);
        let alpha = w.dot(&basis[k]);
        alphas.push(alpha);
        for q in &basis {
            let c = w.dot(q);
            w.axpy(-c, q, T::one());
        }
        // second orthogonalization pass for stability
        for q in &basis {
            let c = w.dot(q);
            w.axpy(-c, q, T::one());
        }
        let beta = w.norm();
        if beta < T::of(1e-14) || k + 1 == steps {
            break;
        }
        betas.push(beta);
        basis.push(w / beta);
    }
    let k = alphas.len();
    let mut tri = DMatrix::zeros(k, k);
    for i in 0..k {
        tri[(i, i)] = alphas[i];
        if i + 1 < k {
            tri[(i, i + 1)] = betas[i];
            tri[(i + 1, i)] = betas[i];
        }
    }
    let eigs = sym_spectrum(&tri)?;
    Ok((*eigs.first().expect("nonempty"), *eigs.last().expect("nonempty")))
}
