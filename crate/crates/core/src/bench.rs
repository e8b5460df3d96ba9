//! Drivers for the three benchmark tables and the manufactured-solution
//! convergence study.
//!
//! Every driver sweeps the configured mesh resolutions at one fixed
//! subdomain grid, producing one row per resolution:
//!
//! - table 1: spectrum of the preconditioned interface Schur complement.
//!   This path builds subdomain interior factorizations and the interface
//!   preconditioner but never factors the jump block or forms the full
//!   operator densely.
//! - table 2: spectrum of the fully preconditioned operator, plus the
//!   condition number of the plain operator.
//! - table 3: conjugate gradient iteration counts, plain against
//!   preconditioned, for the configured right-hand side.
//!
//! Wall times stay zero unless explicitly requested, keeping the default
//! output byte-reproducible.

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assemble::{assemble_free, assemble_load, GAUSS_DEFAULT};
use crate::bddc::{BddcPreconditioner, FullPreconditioner};
use crate::error::{Error, Result};
use crate::mms::{exact_f, exact_hessian, exact_u};
use crate::report::{MmsRow, ReportRow};
use crate::solve::{factor_spd, pcg, pencil_spectrum, sym_spectrum};
use crate::space::Space;
use crate::split::SchurSystem;

/// Mesh resolutions of the benchmark sweep (elements per side).
pub const DEFAULT_SWEEP: [usize; 5] = [8, 12, 16, 20, 24];

/// Subdomains per side of the benchmark sweep.
pub const DEFAULT_SUBDOMAINS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsMode {
    /// All-ones coefficient vector.
    Unit,
    /// Load vector of the manufactured source.
    Manufactured,
    /// Seeded uniform random coefficients.
    Random,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub n_list: Vec<usize>,
    pub m: usize,
    pub eta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub rhs: RhsMode,
    pub seed: u64,
    pub timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_list: DEFAULT_SWEEP.to_vec(),
            m: DEFAULT_SUBDOMAINS,
            eta: 5.0,
            tol: 1e-6,
            max_iter: 10_000,
            rhs: RhsMode::Unit,
            seed: 1,
            timings: false,
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "penalty must be positive, got {}",
                self.eta
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.m == 0 {
            return Err(Error::InvalidParameter("need at least one subdomain per side".into()));
        }
        Ok(())
    }
}

fn rhs_vector(space: &Space<f64>, cfg: &ExperimentConfig) -> DVector<f64> {
    match cfg.rhs {
        RhsMode::Unit => DVector::from_element(space.free_dim(), 1.0),
        RhsMode::Manufactured => assemble_load(space, exact_f, GAUSS_DEFAULT),
        RhsMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            DVector::from_fn(space.free_dim(), |_, _| rng.gen_range(-1.0..1.0))
        }
    }
}

/// Run one benchmark table over the configured sweep. Resolutions the
/// subdomain grid cannot tile are skipped with a warning; everything else
/// is an error.
pub fn run_table(table: u8, cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    if !(1..=3).contains(&table) {
        return Err(Error::InvalidParameter(format!("unknown table {table}, expected 1, 2 or 3")));
    }
    cfg.validate()?;
    if table != 3 && cfg.m < 2 {
        return Err(Error::InvalidParameter(
            "the preconditioner spectrum needs at least a 2 x 2 subdomain grid".into(),
        ));
    }
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let start = Instant::now();
        let space = match Space::new(n, cfg.m) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("warning: skipping n = {n}: {e}");
                continue;
            }
        };
        let a = assemble_free(&space, cfg.eta, GAUSS_DEFAULT);
        let mut row = ReportRow::new(n, cfg.m, cfg.eta);
        match table {
            1 => {
                let schur = SchurSystem::new(&space, &a)?;
                let bddc = BddcPreconditioner::new(&space, &schur.split, cfg.eta, GAUSS_DEFAULT)?;
                let eigs = pencil_spectrum(|v| bddc.apply(v), &schur.dense_schur())?;
                set_spectrum(&mut row, &eigs);
            }
            2 => {
                let prec = FullPreconditioner::new(&space, &a, cfg.eta, GAUSS_DEFAULT)?;
                let dense = a.to_dense();
                let eigs = pencil_spectrum(|v| prec.apply(v), &dense)?;
                set_spectrum(&mut row, &eigs);
                let plain = sym_spectrum(&dense)?;
                row.kappa_plain =
                    Some(plain.last().expect("nonempty") / plain.first().expect("nonempty"));
            }
            _ => {
                let b = rhs_vector(&space, cfg);
                let prec = FullPreconditioner::new(&space, &a, cfg.eta, GAUSS_DEFAULT)?;
                let plain = pcg(|v| a.matvec(v), |v| v.clone(), &b, cfg.tol, cfg.max_iter)?;
                let precond = pcg(|v| a.matvec(v), |v| prec.apply(v), &b, cfg.tol, cfg.max_iter)?;
                for (name, rep) in [("plain", &plain), ("preconditioned", &precond)] {
                    if !rep.converged {
                        eprintln!(
                            "warning: {name} conjugate gradients hit the iteration cap {} at n = {n}",
                            cfg.max_iter
                        );
                    }
                }
                row.niter_plain = Some(plain.iterations);
                row.niter_prec = Some(precond.iterations);
            }
        }
        if cfg.timings {
            row.wall_time_s = start.elapsed().as_secs_f64();
        }
        rows.push(row);
    }
    Ok(rows)
}

fn set_spectrum(row: &mut ReportRow, eigs: &[f64]) {
    let min = *eigs.first().expect("nonempty spectrum");
    let max = *eigs.last().expect("nonempty spectrum");
    row.lambda_min = Some(min);
    row.lambda_max = Some(max);
    row.kappa = Some(max / min);
}

/// Squared L2 distance between the discrete function and a reference, by
/// elementwise Gauss quadrature.
pub fn l2_error(space: &Space<f64>, free: &DVector<f64>, reference: impl Fn(f64, f64) -> f64) -> f64 {
    let gauss = crate::assemble::gauss_1d::<f64>(4);
    let nodal = space.nodal_from_free(free);
    let h = 1.0 / space.mesh.n() as f64;
    let area = h * h;
    let mut sum = 0.0;
    for el in space.mesh.elements() {
        let (x0, y0) = (el.ix as f64 * h, el.iy as f64 * h);
        for &(ty, wy) in &gauss {
            for &(tx, wx) in &gauss {
                let d = space.evaluate_nodal(&nodal, el, tx, ty, 0, 0)
                    - reference(x0 + tx * h, y0 + ty * h);
                sum += wx * wy * area * d * d;
            }
        }
    }
    sum.sqrt()
}

/// Broken energy seminorm distance to a smooth reference with the given
/// Hessian: elementwise Hessian misfit plus the normal-derivative jump
/// penalty. A smooth reference has no jumps, so the penalty sees only the
/// discrete function. Comparing coefficients against the interpolant would
/// instead measure supercloseness, which converges one order faster.
pub fn energy_error(
    space: &Space<f64>,
    eta: f64,
    free: &DVector<f64>,
    hessian: impl Fn(f64, f64) -> (f64, f64, f64),
) -> f64 {
    let gauss = crate::assemble::gauss_1d::<f64>(4);
    let nodal = space.nodal_from_free(free);
    let h = 1.0 / space.mesh.n() as f64;
    let area = h * h;
    let mut sum = 0.0;
    for el in space.mesh.elements() {
        let (x0, y0) = (el.ix as f64 * h, el.iy as f64 * h);
        for &(ty, wy) in &gauss {
            for &(tx, wx) in &gauss {
                let (uxx, uxy, uyy) = hessian(x0 + tx * h, y0 + ty * h);
                let dxx = space.evaluate_nodal(&nodal, el, tx, ty, 2, 0) - uxx;
                let dxy = space.evaluate_nodal(&nodal, el, tx, ty, 1, 1) - uxy;
                let dyy = space.evaluate_nodal(&nodal, el, tx, ty, 0, 2) - uyy;
                sum += wx * wy * area * (dxx * dxx + 2.0 * dxy * dxy + dyy * dyy);
            }
        }
    }
    for e in space.mesh.edges() {
        let mut jump_sq = 0.0;
        for &(t, w) in &gauss {
            let j = space.normal_jump_at(&nodal, e, t);
            jump_sq += w * j * j;
        }
        // (eta / |e|) integral of the squared jump; ds = |e| dt cancels |e|.
        sum += eta * jump_sq;
    }
    sum.sqrt()
}

/// Manufactured-solution study: solve with the independently derived source
/// and report errors and observed orders per resolution. Growing errors
/// under refinement are a hard failure.
pub fn mms_convergence(cfg: &ExperimentConfig) -> Result<Vec<MmsRow>> {
    cfg.validate()?;
    let mut rows: Vec<MmsRow> = Vec::new();
    for &n in &cfg.n_list {
        let space = match Space::new(n, cfg.m) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("warning: skipping n = {n}: {e}");
                continue;
            }
        };
        let a = assemble_free(&space, cfg.eta, GAUSS_DEFAULT);
        let b = assemble_load(&space, exact_f, GAUSS_DEFAULT);
        let u_h = factor_spd(a.to_dense(), "stiffness matrix")?.solve(&b);
        let e_energy = energy_error(&space, cfg.eta, &u_h, exact_hessian);
        let e_l2 = l2_error(&space, &u_h, exact_u);
        let (mut energy_order, mut l2_order) = (None, None);
        if let Some(prev) = rows.last() {
            let ratio = prev.h / (1.0 / n as f64);
            energy_order = Some((prev.energy_error / e_energy).ln() / ratio.ln());
            l2_order = Some((prev.l2_error / e_l2).ln() / ratio.ln());
            if e_energy > prev.energy_error || e_l2 > prev.l2_error {
                return Err(Error::Divergence(format!(
                    "errors grew from n = {} to n = {n}: energy {} -> {e_energy}, l2 {} -> {e_l2}",
                    1.0 / prev.h,
                    prev.energy_error,
                    prev.l2_error,
                )));
            }
        }
        rows.push(MmsRow {
            h: 1.0 / n as f64,
            energy_error: e_energy,
            l2_error: e_l2,
            energy_order,
            l2_order,
        });
    }
    Ok(rows)
}

/// Least-squares slope of log error against log h: the observed order over
/// a whole sweep.
pub fn fitted_order(hs: &[f64], errors: &[f64]) -> f64 {
    assert_eq!(hs.len(), errors.len());
    assert!(hs.len() >= 2);
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    num / den
}
