//! End-to-end acceptance suite.  Each criterion prints one summary line
//! `ACCEPT c<N> <name>: PASS|FAIL (...)` and the test fails if any
//! criterion does.  Tolerances and time budgets are asserted, never
//! loosened at runtime; run with `--nocapture` to watch progress.

use std::time::Instant;

use chernforge::chernweil::{
    diag_connection, direct_sum, pontryagin1, random_sp_connection, secondary_form,
};
use chernforge::cli::bounds_report;
use chernforge::decompose::{
    decompose_exact_4form, jacobian_fd_error, realize_pontryagin, SolverOptions,
};
use chernforge::minorlemma::{codim_monte_carlo, factor_components, lemma_suite, plucker_matrix, FpPoly, Verdict};
use chernforge::quatlin::{char_poly_coeffs, f1_closed_form, random_sp_algebra};
use chernforge::regtuples::{generate_null_tuple, generate_regular_tuple, OneFormTuple};
use chernforge::tol;
use chernforge::torusforms::trig::{random_form, Harmonic, TrigSpec, TrigTerm};
use chernforge::torusforms::TorusGrid;
use chernforge::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Ledger {
    rows: Vec<(String, bool)>,
}

impl Ledger {
    fn new() -> Self {
        Ledger { rows: Vec::new() }
    }

    fn run(
        &mut self,
        number: usize,
        name: &str,
        body: impl FnOnce() -> Result<(bool, String)>,
    ) {
        let started = Instant::now();
        let (passed, detail) = match body() {
            Ok((passed, detail)) => (passed, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = started.elapsed().as_secs_f64();
        println!(
            "ACCEPT c{number} {name}: {} ({detail}, {secs:.1}s)",
            if passed { "PASS" } else { "FAIL" }
        );
        self.rows.push((format!("c{number} {name}"), passed));
    }
}

fn c1_algebra() -> Result<(bool, String)> {
    let started = Instant::now();
    let mut worst_trace = 0.0f64;
    let mut worst_odd = 0.0f64;
    let mut worst_f1 = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 1..=3usize {
            let x = random_sp_algebra(k, &mut rng);
            worst_trace = worst_trace.max(x.matrix().trace().norm());
            let cp = char_poly_coeffs(&x);
            worst_odd = worst_odd.max(cp.odd_residual);
            let rel = (f1_closed_form(&x) - cp.f[0]).abs() / cp.f[0].abs().max(1.0);
            worst_f1 = worst_f1.max(rel);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let passed = worst_trace < 1e-12 && worst_odd < 1e-9 && worst_f1 < 1e-9 && secs < 5.0;
    Ok((
        passed,
        format!("trace {worst_trace:.2e}, odd {worst_odd:.2e}, f1 rel {worst_f1:.2e}"),
    ))
}

fn c2_dec_identities() -> Result<(bool, String)> {
    let started = Instant::now();
    let mut worst = [0.0f64; 4]; // dd, leibniz, stokes, hodge
    let mut rng = ChaCha8Rng::seed_from_u64(2_000);
    for m in [3usize, 4] {
        let grid = TorusGrid::new(m, 16)?;
        for degree in 0..m {
            for _ in 0..50 {
                let (_, u) = random_form(grid, degree, 2, 2, 1.0, &mut rng)?;
                let scale = u.sup_norm().max(1.0);
                worst[0] = worst[0].max(u.exterior_d().exterior_d().sup_norm() / scale);

                let (_, v) = random_form(grid, 1, 2, 2, 1.0, &mut rng)?;
                let lhs = u.wedge(&v)?.exterior_d();
                let sign = if degree % 2 == 0 { 1.0 } else { -1.0 };
                let mut rhs = u.exterior_d().wedge(&v)?;
                rhs.axpy(sign, &u.wedge(&v.exterior_d())?)?;
                let pair_scale = scale * v.sup_norm().max(1.0);
                worst[1] = worst[1].max(lhs.sub(&rhs)?.sup_norm() / pair_scale);

                let sigma = u.exterior_d();
                if sigma.sup_norm() > 0.0 {
                    let beta = sigma.hodge_primitive(tol::EXACTNESS)?;
                    worst[3] =
                        worst[3].max(beta.exterior_d().sub(&sigma)?.sup_norm() / scale);
                }
            }
        }
        for _ in 0..50 {
            let (_, w) = random_form(grid, m - 1, 2, 2, 1.0, &mut rng)?;
            worst[2] = worst[2]
                .max(w.exterior_d().integrate()?.abs() / w.sup_norm().max(1.0));
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let passed = worst[0] < 1e-10
        && worst[1] < 1e-8
        && worst[2] < 1e-10
        && worst[3] < 1e-8
        && secs < 30.0;
    Ok((
        passed,
        format!(
            "dd {:.2e}, Leibniz {:.2e}, Stokes {:.2e}, primitive {:.2e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    ))
}

fn c3_chern_weil() -> Result<(bool, String)> {
    let started = Instant::now();
    let grid = TorusGrid::new(4, 16)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3_000);
    let mut worst_add = 0.0f64;
    let mut worst_trans = 0.0f64;
    let mut worst_closed = 0.0f64;
    for _ in 0..20 {
        let w1 = random_sp_connection(grid, 1, 1, 2, 0.7, &mut rng)?;
        let w2 = random_sp_connection(grid, 1, 1, 2, 0.7, &mut rng)?;
        let sum = direct_sum(&w1, &w2)?;

        let p1 = pontryagin1(&w1)?;
        let p2 = pontryagin1(&w2)?;
        let p_sum = pontryagin1(&sum)?;
        let scale = p1.sup_norm().max(p2.sup_norm()).max(1.0);
        worst_add =
            worst_add.max(p_sum.sub(&p1.add(&p2)?)?.sup_norm() / scale);
        worst_closed = worst_closed.max(p_sum.exterior_d().sup_norm() / scale);

        // Transgression on the summed sp(2) connection.
        let alpha = random_sp_connection(grid, 2, 1, 2, 0.7, &mut rng)?;
        let shifted = sum.add(&alpha)?;
        let p_shifted = pontryagin1(&shifted)?;
        let tp = secondary_form(&sum, &alpha)?;
        let mut resid = p_shifted.sub(&p_sum)?;
        resid.axpy(-1.0, &tp.exterior_d())?;
        worst_trans =
            worst_trans.max(resid.sup_norm() / p_shifted.sup_norm().max(scale));
    }
    let secs = started.elapsed().as_secs_f64();
    let passed =
        worst_add < 1e-9 && worst_trans < 1e-8 && worst_closed < 1e-8 && secs < 120.0;
    Ok((
        passed,
        format!(
            "additivity {worst_add:.2e}, transgression {worst_trans:.2e}, closed {worst_closed:.2e}"
        ),
    ))
}

fn c4_diagonal() -> Result<(bool, String)> {
    let grid = TorusGrid::new(4, 16)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4_000);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let mut forms = Vec::new();
        for _ in 0..4 {
            forms.push(random_form(grid, 1, 2, 2, 1.0, &mut rng)?.1);
        }
        let tuple = OneFormTuple::new(forms)?;
        let p1 = pontryagin1(&diag_connection(tuple.forms())?)?;
        let sos = tuple.sum_of_squares()?;
        worst = worst.max(p1.sub(&sos)?.sup_norm() / sos.sup_norm().max(1.0));
    }

    // Analytic witness against the trigonometric oracle.
    let omega_spec = TrigSpec {
        m: 4,
        degree: 1,
        terms: vec![
            TrigTerm {
                component: vec![2],
                harmonics: vec![Harmonic { k: vec![1, 0, 0, 0], cos: 0.0, sin: 1.0 }],
            },
            TrigTerm {
                component: vec![4],
                harmonics: vec![Harmonic { k: vec![0, 0, 1, 0], cos: 0.0, sin: 1.0 }],
            },
        ],
    };
    let omega = omega_spec.sample(grid)?;
    let p1 = pontryagin1(&diag_connection(std::slice::from_ref(&omega))?)?;
    let c = 4.0 * std::f64::consts::PI.powi(2);
    let expect_spec = TrigSpec {
        m: 4,
        degree: 4,
        terms: vec![TrigTerm {
            component: vec![1, 2, 3, 4],
            harmonics: vec![
                Harmonic { k: vec![1, 0, 1, 0], cos: c, sin: 0.0 },
                Harmonic { k: vec![1, 0, -1, 0], cos: c, sin: 0.0 },
            ],
        }],
    };
    let expect = expect_spec.sample(grid)?;
    let witness = p1.sub(&expect)?.sup_norm() / expect.sup_norm();
    let passed = worst < 1e-9 && witness < 1e-9;
    Ok((
        passed,
        format!("sum-of-squares {worst:.2e}, witness {witness:.2e}"),
    ))
}

fn c5_null_tuples() -> Result<(bool, String)> {
    let mut certified = 0usize;
    let mut total = 0usize;
    let mut worst_null = 0.0f64;
    for (m, q) in [(3usize, 6usize), (4, 10)] {
        let grid = TorusGrid::new(m, 16)?;
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(5_000 + seed);
            total += 1;
            let (tuple, cert) = generate_null_tuple(grid, q, 2, &mut rng)?;
            let null = tuple.sum_of_squares()?.sup_norm().max(
                tuple.transgression_sum()?.sup_norm(),
            );
            worst_null = worst_null.max(null / tuple.term_scale());
            if cert.certified {
                certified += 1;
            }
        }
    }
    let passed = worst_null < 1e-10 && certified * 10 >= total * 9;
    Ok((
        passed,
        format!("null sum {worst_null:.2e} of scale, certified {certified}/{total}"),
    ))
}

fn c6_jacobian() -> Result<(bool, String)> {
    let grid = TorusGrid::new(4, 8)?;
    let mut rng = ChaCha8Rng::seed_from_u64(6_000);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let mut forms = Vec::new();
        let mut dirs = Vec::new();
        for _ in 0..4 {
            forms.push(random_form(grid, 1, 2, 2, 1.0, &mut rng)?.1);
            dirs.push(random_form(grid, 1, 2, 2, 1.0, &mut rng)?.1);
        }
        worst = worst.max(jacobian_fd_error(&forms, &dirs, 1e-4)?);
    }
    Ok((worst < 1e-6, format!("max FD relative error {worst:.2e}")))
}

fn c7_plant_and_recover() -> Result<(bool, String)> {
    let grid = TorusGrid::new(4, 16)?;
    let opts = SolverOptions::default();
    let mut passes = 0usize;
    let mut details = Vec::new();
    for seed in 0..5u64 {
        let started = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(7_000 + seed);
        let outcome = (|| -> Result<_> {
            let (plant, _) = generate_regular_tuple(grid, 10, 2, &mut rng)?;
            let sigma = plant.sum_of_squares()?;
            let (start, _) = generate_null_tuple(grid, 10, 2, &mut rng)?;
            decompose_exact_4form(&sigma, &start, &opts)
        })();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(out) => {
                let steps = out.history.iter().filter(|s| s.accepted).count();
                let ok = out.residual_rel < 1e-6
                    && steps <= 10
                    && out.recompute_agreement
                        <= tol::REPORT_RECOMPUTE * out.sigma_sup.max(1.0)
                    && secs < 300.0;
                if ok {
                    passes += 1;
                }
                details.push(format!(
                    "seed {seed}: rel {:.2e} in {steps} steps, {secs:.0}s",
                    out.residual_rel
                ));
            }
            Err(e) => details.push(format!("seed {seed}: {e}")),
        }
    }
    Ok((passes >= 4, format!("{passes}/5 solved [{}]", details.join("; "))))
}

fn c8_realize() -> Result<(bool, String)> {
    let grid = TorusGrid::new(4, 16)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8_000);
    let (_, sigma) = random_form(grid, 4, 2, 3, 1.0, &mut rng)?;
    let outcome = realize_pontryagin(&sigma, 10, 2, &mut rng, &SolverOptions::default())?;
    let passed = outcome.p1_residual_rel < 2e-6 && outcome.sp_residual < 1e-10;
    Ok((
        passed,
        format!(
            "p1 rel {:.2e}, sp defect {:.2e}",
            outcome.p1_residual_rel, outcome.sp_residual
        ),
    ))
}

fn c9_minor_lemma() -> Result<(bool, String)> {
    // n = 3: every maximal subset of q = 4 columns.
    let report = lemma_suite(3, 4, 4, 900)?;
    let small_ok = report.all_irreducible
        && report.family_supports_disjoint
        && report.max_error_bound < 1e-12
        && report
            .subsets
            .iter()
            .all(|s| s.multilinear && s.nonzero && s.verdict == Verdict::Irreducible);

    // One n = 4 instance: the full 6 x 6 determinant.
    let started = Instant::now();
    let pm = plucker_matrix(4, 6)?;
    let det = pm.symbolic_det(&[0, 1, 2, 3, 4, 5])?;
    let mut rng = ChaCha8Rng::seed_from_u64(901);
    let f = factor_components(&det, 4, &mut rng)?;
    let secs = started.elapsed().as_secs_f64();
    let big_ok = det.is_multilinear()
        && !det.is_zero()
        && f.verdict == Verdict::Irreducible
        && secs < 600.0;

    // Reducible control must split.
    let left = FpPoly::monomial(8, &[(0, 1), (1, 1)], 1)
        .add(&FpPoly::monomial(8, &[(2, 1), (3, 1)], 1))?;
    let right = FpPoly::monomial(8, &[(4, 1), (5, 1)], 1)
        .add(&FpPoly::monomial(8, &[(6, 1), (7, 1)], 1))?;
    let fr = factor_components(&left.mul(&right)?, 4, &mut rng)?;
    let control_ok = fr.verdict == Verdict::Splits && fr.components.len() == 2;

    Ok((
        small_ok && big_ok && control_ok,
        format!(
            "n=3 error bound {:.2e}; n=4 det {} terms in {secs:.1}s; control splits {}",
            report.max_error_bound,
            det.num_terms(),
            control_ok
        ),
    ))
}

fn c10_codimension() -> Result<(bool, String)> {
    let a = codim_monte_carlo(3, 6, 1000, 1_000);
    let b = codim_monte_carlo(4, 10, 1000, 1_001);
    let passed = a.full_rank_fraction == 1.0 && b.full_rank_fraction == 1.0;
    Ok((
        passed,
        format!(
            "T^3 fraction {}, T^4 fraction {} over 1000 trials each",
            a.full_rank_fraction, b.full_rank_fraction
        ),
    ))
}

fn c11_bounds() -> Result<(bool, String)> {
    let r = bounds_report(4, Some(1))?;
    let passed = r.m0 == 0 && r.q_min == 10 && r.schlafly_n_min == Some(125);
    Ok((
        passed,
        format!(
            "m0 {}, q_min {}, schlafly {:?}",
            r.m0, r.q_min, r.schlafly_n_min
        ),
    ))
}

#[test]
fn acceptance() {
    let mut ledger = Ledger::new();
    ledger.run(1, "sp-algebra invariants", c1_algebra);
    ledger.run(2, "exterior calculus identities", c2_dec_identities);
    ledger.run(3, "chern-weil forms", c3_chern_weil);
    ledger.run(4, "diagonal sum of squares", c4_diagonal);
    ledger.run(5, "certified null tuples", c5_null_tuples);
    ledger.run(6, "linearization finite difference", c6_jacobian);
    ledger.run(7, "plant and recover", c7_plant_and_recover);
    ledger.run(8, "realize pontryagin form", c8_realize);
    ledger.run(9, "minor determinant irreducibility", c9_minor_lemma);
    ledger.run(10, "codimension monte carlo", c10_codimension);
    ledger.run(11, "dimension bounds", c11_bounds);

    let failed: Vec<&str> = ledger
        .rows
        .iter()
        .filter(|(_, passed)| !passed)
        .map(|(name, _)| name.as_str())
        .collect();
    assert!(failed.is_empty(), "failed criteria: {}", failed.join(", "));
}
