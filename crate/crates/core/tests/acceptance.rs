//! End-to-end acceptance checks for the benchmark targets: spectra and
//! iteration counts against their reference values, structural properties
//! of the subspace splitting and the preconditioners, convergence orders of
//! the manufactured solution, and byte determinism of the emitted reports.
//!
//! Each test prints one PASS line when its criterion holds.

use c0ip_bddc::assemble::{
    assemble_free, assemble_full_modified, assemble_gamma_modified, assemble_subdomain_modified,
    energy_product, GAUSS_DEFAULT,
};
use c0ip_bddc::bddc::{BddcPreconditioner, FullPreconditioner};
use c0ip_bddc::bench::{fitted_order, mms_convergence, run_table, ExperimentConfig};
use c0ip_bddc::solve::pencil_spectrum;
use c0ip_bddc::space::Space;
use c0ip_bddc::split::{SchurSystem, Splitting};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ETA: f64 = 5.0;
const SWEEP: [usize; 5] = [8, 12, 16, 20, 24];

/// Reference extreme eigenvalues of the preconditioned interface operator
/// over the sweep at four subdomains per side.
const REF_INTERFACE_LAMBDA_MAX: [f64; 5] = [3.6073, 2.9197, 3.0908, 3.2756, 3.4535];

/// Reference condition numbers and smallest eigenvalues of the fully
/// preconditioned operator, and the plain condition number at the finest
/// resolution.
const REF_FULL_KAPPA: [f64; 5] = [18.9490, 13.6054, 13.5244, 13.8787, 14.3181];
const REF_FULL_LAMBDA_MIN_BAND: (f64, f64) = (0.21, 0.26);
const REF_PLAIN_KAPPA_FINEST: f64 = 4.2288e5;

/// Reference conjugate gradient counts, plain and preconditioned.
const REF_NITER_PLAIN: [usize; 5] = [95, 235, 434, 704, 1026];
const REF_NITER_PREC: [usize; 5] = [27, 23, 23, 23, 23];

fn sweep_config() -> ExperimentConfig {
    ExperimentConfig { n_list: SWEEP.to_vec(), ..ExperimentConfig::default() }
}

fn rand_vec(dim: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0))
}

fn dense_from(dim: usize, apply: impl Fn(&DVector<f64>) -> DVector<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut e = DVector::zeros(dim);
        e[j] = 1.0;
        m.set_column(j, &apply(&e));
    }
    m
}

fn rel_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            num = num.max((m[(i, j)] - m[(j, i)]).abs());
            den = den.max(m[(i, j)].abs());
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

#[test]
fn interface_preconditioner_spectrum_matches_the_reference_sweep() {
    let rows = run_table(1, &sweep_config()).unwrap();
    assert_eq!(rows.len(), SWEEP.len());
    for (row, target) in rows.iter().zip(REF_INTERFACE_LAMBDA_MAX) {
        let min = row.lambda_min.unwrap();
        let max = row.lambda_max.unwrap();
        assert!(
            (1.0 - 1e-6..=1.01).contains(&min),
            "lambda_min {min} out of band at h = {}",
            row.h
        );
        assert!(
            (max - target).abs() <= 0.10 * target,
            "lambda_max {max} not within 10% of {target} at h = {}",
            row.h
        );
    }
    let maxes: Vec<f64> = rows.iter().map(|r| r.lambda_max.unwrap()).collect();
    assert!(maxes[1] < maxes[0], "expected a dip from the coarsest resolution");
    assert!(maxes[1] < maxes[2] && maxes[2] < maxes[3] && maxes[3] < maxes[4]);
    println!("PASS interface spectrum: lambda_min = 1, lambda_max within 10%, dip reproduced");
}

#[test]
fn interface_condition_number_grows_no_faster_than_polylog() {
    let rows = run_table(1, &sweep_config()).unwrap();
    let scaled: Vec<f64> = rows
        .iter()
        .zip(SWEEP)
        .map(|(row, n)| {
            let ratio = n as f64 / 4.0;
            row.kappa.unwrap() / (1.0 + ratio.ln()).powi(2)
        })
        .collect();
    let max = scaled.iter().cloned().fold(f64::MIN, f64::max);
    let min = scaled.iter().cloned().fold(f64::MAX, f64::min);
    assert!(
        max / min <= 2.0,
        "kappa / (1 + ln(H/h))^2 varies by {:.3}, expected bounded variation",
        max / min
    );
    println!("PASS polylog growth: kappa / (1 + ln(H/h))^2 varies by {:.3} <= 2", max / min);
}

#[test]
fn full_preconditioner_spectrum_matches_the_reference_sweep() {
    let rows = run_table(2, &sweep_config()).unwrap();
    assert_eq!(rows.len(), SWEEP.len());
    for (row, target) in rows.iter().zip(REF_FULL_KAPPA) {
        let kappa = row.kappa.unwrap();
        assert!(
            (kappa - target).abs() <= 0.15 * target,
            "kappa {kappa} not within 15% of {target} at h = {}",
            row.h
        );
        let min = row.lambda_min.unwrap();
        let (lo, hi) = REF_FULL_LAMBDA_MIN_BAND;
        assert!(
            (0.75 * lo..=1.25 * hi).contains(&min),
            "lambda_min {min} outside 25% of the band at h = {}",
            row.h
        );
    }
    let finest = rows.last().unwrap().kappa_plain.unwrap();
    assert!(
        finest >= REF_PLAIN_KAPPA_FINEST / 3.0 && finest <= REF_PLAIN_KAPPA_FINEST * 3.0,
        "plain kappa {finest} not within a factor 3 of {REF_PLAIN_KAPPA_FINEST}"
    );
    let prev = rows[rows.len() - 2].kappa_plain.unwrap();
    let exponent = (finest / prev).ln() / (SWEEP[4] as f64 / SWEEP[3] as f64).ln();
    assert!(
        (4.0..=5.5).contains(&exponent),
        "plain kappa growth exponent {exponent} outside [4, 5.5]"
    );
    println!(
        "PASS full spectrum: kappa within 15%, lambda_min in band, plain kappa {finest:.4e} \
         growing with exponent {exponent:.2}"
    );
}

#[test]
fn iteration_counts_match_the_reference_sweep() {
    let rows = run_table(3, &sweep_config()).unwrap();
    assert_eq!(rows.len(), SWEEP.len());
    let plain: Vec<usize> = rows.iter().map(|r| r.niter_plain.unwrap()).collect();
    let prec: Vec<usize> = rows.iter().map(|r| r.niter_prec.unwrap()).collect();
    for ((&p, &q), (&rp, &rq)) in plain
        .iter()
        .zip(&prec)
        .zip(REF_NITER_PLAIN.iter().zip(&REF_NITER_PREC))
    {
        assert!(q <= 35, "preconditioned count {q} above 35");
        let (p, q, rp, rq) = (p as f64, q as f64, rp as f64, rq as f64);
        assert!((p - rp).abs() <= 0.30 * rp, "plain count {p} not within 30% of {rp}");
        assert!((q - rq).abs() <= 0.30 * rq, "preconditioned count {q} not within 30% of {rq}");
    }
    let spread = prec.iter().max().unwrap() - prec.iter().min().unwrap();
    assert!(spread <= 8, "preconditioned counts spread {spread} > 8");
    assert!(
        plain[4] >= 8 * plain[0],
        "plain counts grew only {}x from coarsest to finest",
        plain[4] / plain[0]
    );
    println!(
        "PASS iteration counts: preconditioned {prec:?} flat, plain {plain:?} growing {}x",
        plain[4] / plain[0]
    );
}

#[test]
fn subspace_and_preconditioner_properties_hold_across_configurations() {
    let mut lemma_spreads = Vec::new();
    for (n, m) in [(8usize, 4usize), (12, 4), (8, 2), (16, 4), (4, 1)] {
        let space = Space::new(n, m).unwrap();
        let a = assemble_free(&space, ETA, GAUSS_DEFAULT);
        let split = Splitting::new(&space);
        let dim = space.free_dim();

        // Direct sum: both embeddings reconstruct any vector exactly.
        for seed in 0..20 {
            let v = rand_vec(dim, 100 + seed);
            let back = split.r_c.matvec(&split.e_c.matvec(&v))
                + split.r_d.matvec(&split.e_d.matvec(&v));
            assert!(
                (&back - &v).norm() <= 1e-12 * v.norm(),
                "direct-sum reconstruction failed at ({n}, {m})"
            );
        }

        // Localization: the global form equals the subdomain forms plus the
        // skeleton penalties on derivative-continuous functions.
        let k_full = assemble_full_modified(&space, ETA, GAUSS_DEFAULT);
        let k_gamma = assemble_gamma_modified(&space, ETA, GAUSS_DEFAULT);
        let k_subs: Vec<_> = (0..space.dec.subdomain_count())
            .map(|j| assemble_subdomain_modified(&space, j, ETA, GAUSS_DEFAULT))
            .collect();
        for seed in 0..5 {
            let v_c = rand_vec(split.c_dim(), 200 + seed);
            let vf = space.dofs.expand(&split.r_c.matvec(&v_c));
            let global = energy_product(&k_full, &vf, &vf);
            let local: f64 = k_subs.iter().map(|k| energy_product(k, &vf, &vf)).sum::<f64>()
                + energy_product(&k_gamma, &vf, &vf);
            assert!(
                (global - local).abs() <= 1e-10 * global.abs().max(1.0),
                "localization failed at ({n}, {m})"
            );
        }

        // Symmetry of the assembled operator.
        assert!(a.asymmetry() <= 1e-11, "operator asymmetry at ({n}, {m})");

        let schur = SchurSystem::new(&space, &a).unwrap();
        let gdim = schur.interface_dim();

        // Energy identity: total energy splits into the non-harmonic
        // interior part and the interface Schur part.
        for seed in 0..10 {
            let v = rand_vec(split.c_dim(), 300 + seed);
            let g = DVector::from_iterator(gdim, split.interface.iter().map(|&c| v[c]));
            let harmonic = schur.ext(&g);
            let interior = &v - &harmonic;
            let lhs = energy_product(&schur.a_cc, &v, &v);
            let rhs = energy_product(&schur.a_cc, &interior, &interior)
                + schur.apply_schur(&g).dot(&g);
            assert!(
                (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
                "energy identity failed at ({n}, {m}): {lhs} vs {rhs}"
            );
        }

        // Galerkin orthogonality: extensions have zero residual on interior
        // coordinates, relative to the input and the operator scale.
        let a_scale = (0..split.c_dim())
            .map(|r| schur.a_cc.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0f64, f64::max);
        for seed in 0..10 {
            let g = rand_vec(gdim, 400 + seed);
            let r = schur.a_cc.matvec(&schur.ext(&g));
            let interior_norm = split
                .interior
                .iter()
                .flatten()
                .map(|&c| r[c] * r[c])
                .sum::<f64>()
                .sqrt();
            assert!(
                interior_norm <= 1e-10 * g.norm().max(1.0) * a_scale,
                "extension residual {interior_norm} at ({n}, {m})"
            );
        }

        // Interface Schur complement symmetry.
        let s = schur.dense_schur();
        assert!(rel_asymmetry(&s) <= 1e-11, "Schur asymmetry at ({n}, {m})");

        if m >= 2 {
            let bddc = BddcPreconditioner::new(&space, &split, ETA, GAUSS_DEFAULT).unwrap();

            // Averaging the duplicated interface copies inverts injection.
            for seed in 0..10 {
                let g = rand_vec(gdim, 500 + seed);
                let back = bddc.project_gamma(&bddc.inject(&g));
                assert!((&back - &g).amax() <= 1e-14, "round trip failed at ({n}, {m})");
            }

            let b_dense = dense_from(gdim, |v| bddc.apply(v));
            assert!(rel_asymmetry(&b_dense) <= 1e-11, "interface preconditioner asymmetry");

            let eigs = pencil_spectrum(|v| bddc.apply(v), &s).unwrap();
            assert!(
                eigs.iter().all(|&e| e >= 1.0 - 1e-6),
                "preconditioned interface eigenvalue below one at ({n}, {m})"
            );

            let full = FullPreconditioner::new(&space, &a, ETA, GAUSS_DEFAULT).unwrap();
            let full_dense = dense_from(dim, |v| full.apply(v));
            assert!(rel_asymmetry(&full_dense) <= 1e-11, "full preconditioner asymmetry");
        }

        // Spectral equivalence of the split: record the energy ratio spread.
        if m == 4 && (n == 8 || n == 16) {
            let a_cc = &schur.a_cc;
            let a_dd = a.congruence(&split.r_d);
            let mut ratios = Vec::new();
            for seed in 0..100 {
                let v = rand_vec(dim, 600 + seed);
                let vc = split.e_c.matvec(&v);
                let vd = split.e_d.matvec(&v);
                let parts = energy_product(a_cc, &vc, &vc) + energy_product(&a_dd, &vd, &vd);
                ratios.push(parts / energy_product(&a, &v, &v));
            }
            let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
            let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
            println!(
                "split energy ratio at ({n}, {m}): min {min:.4}, max {max:.4}, spread {:.4}",
                max / min
            );
            lemma_spreads.push(max / min);
        }
    }
    let change = lemma_spreads[1] / lemma_spreads[0];
    assert!(
        (0.5..2.0).contains(&change),
        "split equivalence spread changed by {change} under refinement"
    );
    println!("PASS subspace properties: split, localization, extension, symmetry, round trip");
}

#[test]
fn manufactured_solution_converges_at_the_expected_orders() {
    let cfg = ExperimentConfig { n_list: vec![8, 16, 24], ..ExperimentConfig::default() };
    let rows = mms_convergence(&cfg).unwrap();
    assert_eq!(rows.len(), 3);
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let energy: Vec<f64> = rows.iter().map(|r| r.energy_error).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.l2_error).collect();
    let energy_order = fitted_order(&hs, &energy);
    let l2_order = fitted_order(&hs, &l2);
    assert!(
        (0.75..=1.25).contains(&energy_order),
        "energy order {energy_order} outside [0.75, 1.25]"
    );
    assert!((1.7..=2.3).contains(&l2_order), "l2 order {l2_order} outside [1.7, 2.3]");
    println!("PASS manufactured solution: energy order {energy_order:.3}, l2 order {l2_order:.3}");
}

#[test]
fn csv_output_is_byte_deterministic() {
    let run = |args: &[&str]| {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_c0ip-bench"))
            .args(args)
            .output()
            .expect("benchmark binary runs");
        assert!(out.status.success(), "run failed: {:?}", out);
        out.stdout
    };
    for args in [
        &["--table", "1", "--n", "8,12"] as &[&str],
        &["--table", "3"],
        &["--table", "3", "--rhs", "random", "--seed", "7"],
        &["--mms", "--n", "4,8", "--m", "1"],
    ] {
        let first = run(args);
        let second = run(args);
        assert_eq!(first, second, "outputs differ for {args:?}");
        assert!(!first.is_empty());
    }
    println!("PASS determinism: identical configurations give byte-identical output");
}
