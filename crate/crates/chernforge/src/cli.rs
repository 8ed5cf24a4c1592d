//! Command-line front end: verification suites, generation and
//! decomposition jobs, lemma checks, and the dimension-bound calculator.
//!
//! One job runs per invocation, driven by an optional JSON [`JobConfig`]
//! plus flag overrides, and writes JSON artifacts (CSV for iteration
//! histories) into the output directory.  Runs are reproducible from the
//! config and seed alone.  Exit codes: 0 success, 1 failed verification
//! suite, 2 validation error, 3 solver failure, 4 budget refusal.

use crate::budget::Budget;
use crate::chernweil::{
    diag_connection, diag_connection_with_budget, direct_sum, pontryagin1, pontryagin1_with_c1,
    random_sp_connection, secondary_form, MatrixOneForm, C1_NORMALIZATION,
};
use crate::decompose::{
    decompose_exact_4form, jacobian_fd_error, realize_pontryagin, solve_dbar, DbarOutcome,
    DecomposeOutcome, SolverOptions, StepRecord,
};
use crate::error::{Error, Result};
use crate::minorlemma::{
    codim_monte_carlo, factor_components, lemma_suite, CodimReport, FpPoly, LemmaReport, Verdict,
};
use crate::quatlin::{char_poly_coeffs, f1_closed_form, random_sp_algebra};
use crate::regtuples::{
    generate_null_tuple, generate_regular_tuple, q_min, OneFormTuple, RegularityCertificate,
    TupleSpec,
};
use crate::tol;
use crate::torusforms::trig::{random_form, Harmonic, TrigSpec, TrigTerm};
use crate::torusforms::{DiffForm, ScalarField, TorusGrid};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

/// Declarative job parameters.  Unknown keys are rejected so a typo cannot
/// silently fall back to a default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JobConfig {
    /// Grid sizes per axis; all entries must be equal (square torus).
    pub grid: Vec<usize>,
    /// Tuple size for generation / decomposition jobs.
    pub q: usize,
    /// Band limit of generated data.
    pub h: usize,
    pub seed: u64,
    /// Relative residual target of the solvers.
    pub tol: f64,
    pub homotopy_steps: usize,
    pub max_gauss_newton: usize,
    pub max_cg: usize,
    /// Optional degree-4 trigonometric target for `decompose` / `realize`;
    /// when absent a planted or random target is generated from the seed.
    pub sigma_path: Option<PathBuf>,
    /// Optional degree-3 trigonometric target for `dbar`.
    pub beta_path: Option<PathBuf>,
    /// Artifact directory.
    pub out: PathBuf,
    /// Restrict `verify` to one suite.
    pub only: Option<String>,
    /// Negative-control hook; the only recognized value is
    /// "broken-normalization", which mis-scales `p_1` inside the verify
    /// suites so the transgression identity must fail.
    pub inject: Option<String>,
    /// Row-block parameter `n` of the lemma suite (`N = C(n,2)` rows).
    pub lemma_n: usize,
    /// Number of symbolic columns in the lemma suite.
    pub lemma_q: usize,
    /// Schwartz-Zippel trials per variable pair.
    pub pair_trials: usize,
    /// Base dimension of the Monte Carlo rank check.
    pub codim_m: usize,
    /// Columns of the Monte Carlo rank check; 0 means `q_min(codim_m)`.
    pub codim_q: usize,
    /// Monte Carlo trials.
    pub trials: usize,
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            grid: vec![16; 4],
            q: 10,
            h: 2,
            seed: 0,
            tol: tol::SOLVE_RESIDUAL,
            homotopy_steps: 10,
            max_gauss_newton: 30,
            max_cg: 500,
            sigma_path: None,
            beta_path: None,
            out: PathBuf::from("chernforge-out"),
            only: None,
            inject: None,
            lemma_n: 3,
            lemma_q: 4,
            pair_trials: 4,
            codim_m: 3,
            codim_q: 0,
            trials: 1000,
        }
    }
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: JobConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Validation("grid must list at least one axis".into()));
        }
        if self.grid.iter().any(|&n| n != self.grid[0]) {
            return Err(Error::Validation(format!(
                "grid axes must be equal (square torus), got {:?}",
                self.grid
            )));
        }
        if let Some(inject) = &self.inject {
            if inject != "broken-normalization" {
                return Err(Error::Validation(format!(
                    "unknown injection '{inject}'; the only hook is 'broken-normalization'"
                )));
            }
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Validation(format!(
                "tol must be positive and finite, got {}",
                self.tol
            )));
        }
        Ok(())
    }

    pub fn torus(&self) -> Result<TorusGrid> {
        self.validate()?;
        TorusGrid::with_budget(self.grid.len(), self.grid[0], &Budget::from_env())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            homotopy_steps: self.homotopy_steps,
            max_gauss_newton: self.max_gauss_newton,
            max_cg: self.max_cg,
            tol: self.tol,
            ..SolverOptions::default()
        }
    }
}

// ---------------------------------------------------------------------------
// artifacts
// ---------------------------------------------------------------------------

/// Grid-sampled form as plain JSON arrays, one per canonical component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFormJson {
    pub m: usize,
    pub n: usize,
    pub degree: usize,
    pub comps: Vec<Vec<f64>>,
}

impl GridFormJson {
    pub fn from_form(form: &DiffForm) -> Self {
        GridFormJson {
            m: form.grid().m(),
            n: form.grid().n(),
            degree: form.degree(),
            comps: form.comps().iter().map(|c| c.data().to_vec()).collect(),
        }
    }

    pub fn to_form(&self) -> Result<DiffForm> {
        let grid = TorusGrid::with_budget(self.m, self.n, &Budget::from_env())?;
        let comps = self
            .comps
            .iter()
            .map(|data| ScalarField::from_data(grid, data.clone()))
            .collect::<Result<Vec<_>>>()?;
        DiffForm::from_components(grid, self.degree, comps)
    }
}

#[derive(Debug, Serialize)]
struct TupleArtifact {
    m: usize,
    n: usize,
    q: usize,
    forms: Vec<GridFormJson>,
    /// Exact trigonometric description when the tuple still carries one.
    specs: Option<Vec<TrigSpec>>,
}

impl TupleArtifact {
    fn from_tuple(tuple: &OneFormTuple) -> Self {
        TupleArtifact {
            m: tuple.grid().m(),
            n: tuple.grid().n(),
            q: tuple.q(),
            forms: tuple.forms().iter().map(GridFormJson::from_form).collect(),
            specs: tuple.specs().map(|s| s.to_vec()),
        }
    }
}

#[derive(Debug, Serialize)]
struct ConnectionEntryJson {
    row: usize,
    col: usize,
    axis: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    re: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    im: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct ConnectionArtifact {
    k: usize,
    m: usize,
    n: usize,
    /// Sparse nonzero entries of each axis component of the sp(k)-valued
    /// connection 1-form.
    entries: Vec<ConnectionEntryJson>,
}

impl ConnectionArtifact {
    fn from_connection(conn: &MatrixOneForm) -> Self {
        let mut entries = Vec::new();
        let dim = 2 * conn.k();
        for (axis, field) in conn.comps().iter().enumerate() {
            for row in 0..dim {
                for col in 0..dim {
                    let Some(e) = field.entry(row, col) else {
                        continue;
                    };
                    if e.is_exactly_zero() {
                        continue;
                    }
                    let re = e.re.data();
                    let im = e.im.data();
                    entries.push(ConnectionEntryJson {
                        row,
                        col,
                        axis,
                        re: if re.iter().all(|&v| v == 0.0) {
                            None
                        } else {
                            Some(re.to_vec())
                        },
                        im: if im.iter().all(|&v| v == 0.0) {
                            None
                        } else {
                            Some(im.to_vec())
                        },
                    });
                }
            }
        }
        ConnectionArtifact {
            k: conn.k(),
            m: conn.grid().m(),
            n: conn.grid().n(),
            entries,
        }
    }
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)?;
    fs::write(&path, text)?;
    Ok(path)
}

fn write_history_csv(dir: &Path, history: &[StepRecord]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("residuals.csv");
    let mut text = String::from("step,tau,accepted,gn_iters,cg_iters,residual_sup\n");
    for (i, rec) in history.iter().enumerate() {
        text.push_str(&format!(
            "{},{},{},{},{},{:e}\n",
            i, rec.tau, rec.accepted, rec.gn_iters, rec.cg_iters, rec.residual_sup
        ));
    }
    fs::write(&path, text)?;
    Ok(path)
}

/// Diagonal connection of a recovered tuple.  An explicit request for `q`
/// forms legitimizes rank `q`, mirroring the solver's own widening.
fn diag_connection_wide(forms: &[DiffForm], q: usize) -> Result<MatrixOneForm> {
    let base = Budget::from_env();
    let budget = Budget {
        max_rank: q.max(base.max_rank),
        ..base
    };
    diag_connection_with_budget(forms, &budget)
}

fn load_trig_target(path: &Path, grid: TorusGrid, degree: usize) -> Result<DiffForm> {
    let text = fs::read_to_string(path)?;
    let spec: TrigSpec = serde_json::from_str(&text)?;
    spec.validate()?;
    let form = spec.sample(grid)?;
    if form.degree() != degree {
        return Err(Error::WrongDegree {
            expected: degree,
            got: form.degree(),
        });
    }
    Ok(form)
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

/// Evaluations of the dimension-bound formulas, with every rounding
/// convention spelled out in `conventions`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub m: usize,
    pub k: Option<usize>,
    /// Minimal tuple size `q_min = m(m+1)/2`.
    pub q_min: usize,
    /// Secondary-form bound `k >= m(m+1)/4`, rounded up.
    pub k_secondary_min: usize,
    /// Exact-characterization bound `n >= m(m+1)/6` (from `3k >= m(m+1)/2`),
    /// rounded up.
    pub n_exact_char_min: usize,
    /// `m0 = floor((m+1)/4) - 1`.
    pub m0: i64,
    /// Least integer `n` with `n > m0 + m(m+1)/6`.
    pub n_theorem_min: i64,
    /// `k(m+1)(4mk^2 + 2mk + 1)` when `k` is given.
    pub schlafly_n_min: Option<u64>,
    pub conventions: Vec<String>,
    pub theorem_1_1_note: String,
}

/// Evaluate every bound formula for base dimension `m` and optional rank `k`.
pub fn bounds_report(m: usize, k: Option<usize>) -> Result<BoundsReport> {
    if m == 0 {
        return Err(Error::Validation("bounds need m >= 1".into()));
    }
    let t = m * (m + 1);
    let m0 = ((m + 1) / 4) as i64 - 1;
    let schlafly = k.map(|k| {
        let (k, m) = (k as u64, m as u64);
        k * (m + 1) * (4 * m * k * k + 2 * m * k + 1)
    });
    Ok(BoundsReport {
        m,
        k,
        q_min: t / 2,
        k_secondary_min: t.div_ceil(4),
        n_exact_char_min: t.div_ceil(6),
        m0,
        n_theorem_min: m0 + (t / 6) as i64 + 1,
        schlafly_n_min: schlafly,
        conventions: vec![
            "the bracket in m0 = [(m+1)/4] - 1 is read as floor".into(),
            "bounds of the form 'x >= a/b' report the least integer x, i.e. ceil(a/b)".into(),
            "the strict bound n > m0 + m(m+1)/6 reports the least integer n, \
             i.e. m0 + floor(m(m+1)/6) + 1"
                .into(),
        ],
        theorem_1_1_note: "the source statement leaves its k and n thresholds blank; \
                           the section-4 bounds above are reported instead"
            .into(),
    })
}

// ---------------------------------------------------------------------------
// verification suites
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    /// Largest residual seen, normalized by each check's own tolerance
    /// scale (a value below 1.0 passes that check).
    pub worst_margin: f64,
    pub seconds: f64,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub only: Option<String>,
    pub inject: Option<String>,
    pub suites: Vec<SuiteResult>,
    pub all_passed: bool,
}

struct SuiteTracker {
    cases: usize,
    worst_margin: f64,
    failures: Vec<String>,
}

impl SuiteTracker {
    fn new() -> Self {
        SuiteTracker {
            cases: 0,
            worst_margin: 0.0,
            failures: Vec::new(),
        }
    }

    /// Record one check as the ratio residual/tolerance; >= 1 fails.
    fn check(&mut self, label: &str, residual: f64, tolerance: f64) {
        self.cases += 1;
        let margin = residual / tolerance;
        if margin > self.worst_margin || !margin.is_finite() {
            self.worst_margin = margin;
        }
        if !(margin < 1.0) {
            self.failures
                .push(format!("{label}: residual {residual:.3e} vs {tolerance:.3e}"));
        }
    }

    fn require(&mut self, label: &str, ok: bool) {
        self.cases += 1;
        if !ok {
            self.failures.push(format!("{label}: failed"));
        }
    }

    fn finish(self, name: &str, started: Instant) -> SuiteResult {
        SuiteResult {
            name: name.into(),
            passed: self.failures.is_empty(),
            cases: self.cases,
            worst_margin: self.worst_margin,
            seconds: started.elapsed().as_secs_f64(),
            detail: if self.failures.is_empty() {
                "ok".into()
            } else {
                self.failures.join("; ")
            },
        }
    }
}

fn suite_quatlin(seed: u64) -> Result<SuiteResult> {
    let started = Instant::now();
    let mut t = SuiteTracker::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x71);
    for k in 1..=3usize {
        for i in 0..25 {
            let x = random_sp_algebra(k, &mut rng);
            let label = format!("k={k} case {i}");
            t.check(
                &format!("{label} trace"),
                x.matrix().trace().norm(),
                tol::SP_MEMBERSHIP,
            );
            let cp = char_poly_coeffs(&x);
            t.check(
                &format!("{label} odd coefficients"),
                cp.odd_residual,
                tol::CHAR_POLY_ODD,
            );
            let f1 = f1_closed_form(&x);
            let rel = (f1 - cp.f[0]).abs() / cp.f[0].abs().max(1.0);
            t.check(&format!("{label} f1 closed form"), rel, tol::CHAR_POLY_ODD);
        }
    }
    Ok(t.finish("quatlin", started))
}

fn suite_dec(seed: u64) -> Result<SuiteResult> {
    let started = Instant::now();
    let mut t = SuiteTracker::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdec);
    for m in [3usize, 4] {
        // Wedge products of band-limit-2 forms carry harmonics up to 4, so
        // the grid must resolve band 4 for the Leibniz identity to be exact.
        let grid = TorusGrid::new(m, 16)?;
        for degree in 0..m {
            for i in 0..6 {
                let label = format!("T{m} degree {degree} case {i}");
                let (_, u) = random_form(grid, degree, 2, 2, 1.0, &mut rng)?;
                let scale = u.sup_norm().max(1.0);

                let ddu = u.exterior_d().exterior_d();
                t.check(&format!("{label} d.d=0"), ddu.sup_norm(), tol::DD_ZERO * scale);

                let (_, v) = random_form(grid, 1, 2, 2, 1.0, &mut rng)?;
                if degree + 1 <= m {
                    let lhs = u.wedge(&v)?.exterior_d();
                    let sign = if degree % 2 == 0 { 1.0 } else { -1.0 };
                    let mut rhs = u.exterior_d().wedge(&v)?;
                    rhs.axpy(sign, &u.wedge(&v.exterior_d())?)?;
                    let pair_scale = scale * v.sup_norm().max(1.0);
                    t.check(
                        &format!("{label} Leibniz"),
                        lhs.sub(&rhs)?.sup_norm(),
                        tol::LEIBNIZ * pair_scale,
                    );
                }

                // Round trip through the minimal primitive of an exact form.
                let sigma = u.exterior_d();
                if sigma.sup_norm() > 0.0 {
                    let beta = sigma.hodge_primitive(tol::EXACTNESS)?;
                    t.check(
                        &format!("{label} hodge round trip"),
                        beta.exterior_d().sub(&sigma)?.sup_norm(),
                        tol::HODGE_ROUND_TRIP * scale,
                    );
                }
            }
        }
        // Stokes on the top pairing: integral of an exact top form vanishes.
        for i in 0..6 {
            let (_, w) = random_form(grid, m - 1, 2, 2, 1.0, &mut rng)?;
            t.check(
                &format!("T{m} Stokes case {i}"),
                w.exterior_d().integrate()?.abs(),
                tol::STOKES * w.sup_norm().max(1.0),
            );
        }
    }
    Ok(t.finish("dec", started))
}

/// `p_1` through the configured normalization; the broken hook flips the
/// sign so the transgression identity must fail (negative control).
fn suite_pontryagin(omega: &MatrixOneForm, broken: bool) -> Result<DiffForm> {
    let c1 = if broken {
        -C1_NORMALIZATION
    } else {
        C1_NORMALIZATION
    };
    pontryagin1_with_c1(omega, c1)
}

fn suite_chernweil(seed: u64, inject: Option<&str>) -> Result<SuiteResult> {
    let started = Instant::now();
    let broken = inject == Some("broken-normalization");
    let mut t = SuiteTracker::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc3);
    // Band limit 1 keeps the secondary form at band 3, which n = 8
    // resolves; the exterior derivative is then exact and the identity
    // holds to roundoff.
    let grid = TorusGrid::new(4, 8)?;
    for i in 0..3 {
        let label = format!("case {i}");
        let omega = random_sp_connection(grid, 1, 1, 2, 0.6, &mut rng)?;
        let omega2 = random_sp_connection(grid, 1, 1, 2, 0.6, &mut rng)?;
        let alpha = random_sp_connection(grid, 1, 1, 2, 0.6, &mut rng)?;

        let p1 = suite_pontryagin(&omega, broken)?;
        let p2 = suite_pontryagin(&omega2, broken)?;
        let scale = p1.sup_norm().max(p2.sup_norm()).max(1.0);

        // Additivity under the direct sum.
        let sum = direct_sum(&omega, &omega2)?;
        let p_sum = suite_pontryagin(&sum, broken)?;
        t.check(
            &format!("{label} additivity"),
            p_sum.sub(&p1.add(&p2)?)?.sup_norm(),
            tol::ADDITIVITY * scale,
        );

        // Closedness of p1.
        t.check(
            &format!("{label} closedness"),
            p_sum.exterior_d().sup_norm(),
            tol::P1_CLOSED * scale,
        );

        // Transgression: d secondary(omega, alpha) = p1(omega+alpha) - p1(omega).
        let shifted = omega.add(&alpha)?;
        let p_shifted = suite_pontryagin(&shifted, broken)?;
        let secondary = secondary_form(&omega, &alpha)?;
        let mut expect = p_shifted.sub(&p1)?;
        expect.axpy(-1.0, &secondary.exterior_d())?;
        t.check(
            &format!("{label} transgression"),
            expect.sup_norm(),
            tol::TRANSGRESSION * p_shifted.sup_norm().max(scale),
        );
    }
    Ok(t.finish("chernweil", started))
}

fn suite_diagonal(seed: u64) -> Result<SuiteResult> {
    let started = Instant::now();
    let mut t = SuiteTracker::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd1a);
    let grid = TorusGrid::new(4, 8)?;
    for i in 0..2 {
        let mut forms = Vec::new();
        for _ in 0..4 {
            let (_, f) = random_form(grid, 1, 2, 2, 1.0, &mut rng)?;
            forms.push(f);
        }
        let tuple = OneFormTuple::new(forms)?;
        let conn = diag_connection(tuple.forms())?;
        let p1 = pontryagin1(&conn)?;
        let direct = tuple.sum_of_squares()?;
        t.check(
            &format!("case {i} diagonal identity"),
            p1.sub(&direct)?.sup_norm(),
            tol::P1_DIAGONAL * direct.sup_norm().max(1.0),
        );
    }

    // Analytic witness: omega = sin(2 pi x1) dx2 + sin(2 pi x3) dx4 gives
    // p1 = 8 pi^2 cos(2 pi x1) cos(2 pi x3) vol.  Both sides enter through
    // the independent trigonometric oracle (product-to-sum on the right).
    let fine = TorusGrid::new(4, 16)?;
    let omega_spec = TrigSpec {
        m: 4,
        degree: 1,
        terms: vec![
            TrigTerm {
                component: vec![2],
                harmonics: vec![Harmonic {
                    k: vec![1, 0, 0, 0],
                    cos: 0.0,
                    sin: 1.0,
                }],
            },
            TrigTerm {
                component: vec![4],
                harmonics: vec![Harmonic {
                    k: vec![0, 0, 1, 0],
                    cos: 0.0,
                    sin: 1.0,
                }],
            },
        ],
    };
    omega_spec.validate()?;
    let witness_form = omega_spec.sample(fine)?;
    let conn = diag_connection(std::slice::from_ref(&witness_form))?;
    let p1 = pontryagin1(&conn)?;
    let four_pi_sq = 4.0 * std::f64::consts::PI.powi(2);
    let expect_spec = TrigSpec {
        m: 4,
        degree: 4,
        terms: vec![TrigTerm {
            component: vec![1, 2, 3, 4],
            harmonics: vec![
                Harmonic {
                    k: vec![1, 0, 1, 0],
                    cos: four_pi_sq,
                    sin: 0.0,
                },
                Harmonic {
                    k: vec![1, 0, -1, 0],
                    cos: four_pi_sq,
                    sin: 0.0,
                },
            ],
        }],
    };
    expect_spec.validate()?;
    let expect = expect_spec.sample(fine)?;
    t.check(
        "analytic witness",
        p1.sub(&expect)?.sup_norm(),
        tol::P1_DIAGONAL * expect.sup_norm().max(1.0),
    );
    Ok(t.finish("diagonal", started))
}

fn suite_nulltuple(seed: u64) -> Result<SuiteResult> {
    let started = Instant::now();
    let mut t = SuiteTracker::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x20);
    let jobs = [(3usize, 16usize, 6usize, 2usize), (4, 8, 10, 1)];
    for (m, n, q, h) in jobs {
        let grid = TorusGrid::new(m, n)?;
        for i in 0..2 {
            let (tuple, cert) = generate_null_tuple(grid, q, h, &mut rng)?;
            let label = format!("T{m} q={q} case {i}");
            t.check(
                &format!("{label} null sum"),
                tuple.transgression_sum()?.sup_norm(),
                tol::NULL_SUM * tuple.term_scale(),
            );
            t.require(&format!("{label} certificate"), cert.certified);
        }
    }
    Ok(t.finish("nulltuple", started))
}

fn suite_jacobian(seed: u64) -> Result<SuiteResult> {
    let started = Instant::now();
    let mut t = SuiteTracker::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7ac);
    let grid = TorusGrid::new(4, 8)?;
    for i in 0..5 {
        let mut forms = Vec::new();
        let mut dirs = Vec::new();
        for _ in 0..4 {
            forms.push(random_form(grid, 1, 2, 2, 1.0, &mut rng)?.1);
            dirs.push(random_form(grid, 1, 2, 2, 1.0, &mut rng)?.1);
        }
        let rel = jacobian_fd_error(&forms, &dirs, 1e-4)?;
        t.check(&format!("case {i} jacobian"), rel, tol::JACOBIAN_FD);
    }
    Ok(t.finish("jacobian", started))
}

fn suite_lemma(seed: u64) -> Result<SuiteResult> {
    let started = Instant::now();
    let mut t = SuiteTracker::new();
    let report = lemma_suite(3, 4, 4, seed ^ 0x1e)?;
    t.require("all determinants irreducible", report.all_irreducible);
    t.require("family supports disjoint", report.family_supports_disjoint);
    t.check("error budget", report.max_error_bound, 1e-12);

    // Constructed reducible control must split into its two factors.
    let left = FpPoly::monomial(8, &[(0, 1), (1, 1)], 1)
        .add(&FpPoly::monomial(8, &[(2, 1), (3, 1)], 1))?;
    let right = FpPoly::monomial(8, &[(4, 1), (5, 1)], 1)
        .add(&FpPoly::monomial(8, &[(6, 1), (7, 1)], 1))?;
    let product = left.mul(&right)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1f);
    let f = factor_components(&product, 4, &mut rng)?;
    t.require(
        "reducible witness splits",
        f.verdict == Verdict::Splits && f.components.len() == 2,
    );

    let codim = codim_monte_carlo(3, 6, 200, seed ^ 0x2e);
    t.require("codim full rank", codim.full_rank_fraction == 1.0);
    Ok(t.finish("lemma", started))
}

/// Run the property suites, optionally restricted to one by name.
pub fn run_verify(cfg: &JobConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let seed = cfg.seed;
    let wanted = |name: &str| cfg.only.as_deref().is_none_or(|only| only == name);
    let mut suites = Vec::new();
    if wanted("quatlin") {
        suites.push(suite_quatlin(seed)?);
    }
    if wanted("dec") {
        suites.push(suite_dec(seed)?);
    }
    if wanted("chernweil") {
        suites.push(suite_chernweil(seed, cfg.inject.as_deref())?);
    }
    if wanted("diagonal") {
        suites.push(suite_diagonal(seed)?);
    }
    if wanted("nulltuple") {
        suites.push(suite_nulltuple(seed)?);
    }
    if wanted("jacobian") {
        suites.push(suite_jacobian(seed)?);
    }
    if wanted("lemma") {
        suites.push(suite_lemma(seed)?);
    }
    if suites.is_empty() {
        return Err(Error::Validation(format!(
            "unknown suite '{}'; have quatlin, dec, chernweil, diagonal, nulltuple, jacobian, lemma",
            cfg.only.as_deref().unwrap_or("")
        )));
    }
    let all_passed = suites.iter().all(|s| s.passed);
    Ok(VerifyReport {
        seed,
        only: cfg.only.clone(),
        inject: cfg.inject.clone(),
        suites,
        all_passed,
    })
}

// ---------------------------------------------------------------------------
// job commands
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct GenTupleReport {
    pub m: usize,
    pub n: usize,
    pub q: usize,
    pub h: usize,
    pub seed: u64,
    pub null_sum_sup: f64,
    pub term_scale: f64,
    pub certificate: RegularityCertificate,
}

pub fn run_gen_tuple(cfg: &JobConfig) -> Result<GenTupleReport> {
    let grid = cfg.torus()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (tuple, certificate) = generate_null_tuple(grid, cfg.q, cfg.h, &mut rng)?;
    let report = GenTupleReport {
        m: grid.m(),
        n: grid.n(),
        q: cfg.q,
        h: cfg.h,
        seed: cfg.seed,
        null_sum_sup: tuple.transgression_sum()?.sup_norm(),
        term_scale: tuple.term_scale(),
        certificate,
    };
    let spec = TupleSpec {
        m: grid.m(),
        n: grid.n(),
        h: cfg.h,
        forms: tuple
            .specs()
            .expect("generated null tuples carry their specs")
            .to_vec(),
    };
    write_json(&cfg.out, "tuple.json", &spec)?;
    write_json(&cfg.out, "report.json", &report)?;
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub command: String,
    pub m: usize,
    pub n: usize,
    pub q: usize,
    pub h: usize,
    pub seed: u64,
    pub planted_target: bool,
    pub sigma_sup: f64,
    pub residual_sup: f64,
    pub residual_rel: f64,
    pub recomputed_residual_sup: f64,
    pub recompute_agreement: f64,
    pub homotopy_steps_taken: usize,
    pub total_gn: usize,
    pub total_cg: usize,
    pub start_certificate: RegularityCertificate,
    pub history: Vec<StepRecord>,
}

fn solve_report(
    command: &str,
    cfg: &JobConfig,
    grid: TorusGrid,
    planted: bool,
    cert: RegularityCertificate,
    out: &DecomposeOutcome,
) -> SolveReport {
    SolveReport {
        command: command.into(),
        m: grid.m(),
        n: grid.n(),
        q: cfg.q,
        h: cfg.h,
        seed: cfg.seed,
        planted_target: planted,
        sigma_sup: out.sigma_sup,
        residual_sup: out.residual_sup,
        residual_rel: out.residual_rel,
        recomputed_residual_sup: out.recomputed_residual_sup,
        recompute_agreement: out.recompute_agreement,
        homotopy_steps_taken: out.history.iter().filter(|s| s.accepted).count(),
        total_gn: out.total_gn,
        total_cg: out.total_cg,
        start_certificate: cert,
        history: out.history.clone(),
    }
}

pub fn run_decompose(cfg: &JobConfig) -> Result<SolveReport> {
    let grid = cfg.torus()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (sigma, planted) = match &cfg.sigma_path {
        Some(path) => (load_trig_target(path, grid, 4)?, false),
        None => {
            // Planted target: the squares of a fresh regular tuple, so the
            // job is solvable by construction and self-checking.
            let (plant, _) = generate_regular_tuple(grid, cfg.q, cfg.h, &mut rng)?;
            (plant.sum_of_squares()?, true)
        }
    };
    let (start, certificate) = generate_null_tuple(grid, cfg.q, cfg.h, &mut rng)?;
    let outcome = decompose_exact_4form(&sigma, &start, &cfg.solver_options())?;
    let report = solve_report("decompose", cfg, grid, planted, certificate, &outcome);

    write_json(&cfg.out, "report.json", &report)?;
    write_history_csv(&cfg.out, &outcome.history)?;
    write_json(
        &cfg.out,
        "tuple.json",
        &TupleArtifact::from_tuple(&outcome.tuple),
    )?;
    let conn = diag_connection_wide(outcome.tuple.forms(), cfg.q)?;
    write_json(
        &cfg.out,
        "connection.json",
        &ConnectionArtifact::from_connection(&conn),
    )?;
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct DbarReport {
    pub m: usize,
    pub n: usize,
    pub q: usize,
    pub h: usize,
    pub seed: u64,
    pub planted_target: bool,
    pub beta_sup: f64,
    pub residual_sup: f64,
    pub residual_rel: f64,
    pub recomputed_residual_sup: f64,
    pub recompute_agreement: f64,
    pub harmonic_defect_sup: f64,
    pub homotopy_steps_taken: usize,
    pub total_gn: usize,
    pub total_cg: usize,
    pub start_certificate: RegularityCertificate,
    pub history: Vec<StepRecord>,
}

pub fn run_dbar(cfg: &JobConfig) -> Result<DbarReport> {
    let grid = cfg.torus()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (beta, planted) = match &cfg.beta_path {
        Some(path) => (load_trig_target(path, grid, 3)?, false),
        None => {
            let (plant, _) = generate_regular_tuple(grid, cfg.q, cfg.h, &mut rng)?;
            (plant.transgression_sum()?, true)
        }
    };
    let (start, certificate) = generate_null_tuple(grid, cfg.q, cfg.h, &mut rng)?;
    let outcome: DbarOutcome = solve_dbar(&beta, &start, &cfg.solver_options())?;
    let report = DbarReport {
        m: grid.m(),
        n: grid.n(),
        q: cfg.q,
        h: cfg.h,
        seed: cfg.seed,
        planted_target: planted,
        beta_sup: outcome.beta_sup,
        residual_sup: outcome.residual_sup,
        residual_rel: outcome.residual_rel,
        recomputed_residual_sup: outcome.recomputed_residual_sup,
        recompute_agreement: outcome.recompute_agreement,
        harmonic_defect_sup: outcome.harmonic_defect_sup,
        homotopy_steps_taken: outcome.history.iter().filter(|s| s.accepted).count(),
        total_gn: outcome.total_gn,
        total_cg: outcome.total_cg,
        start_certificate: certificate,
        history: outcome.history.clone(),
    };
    write_json(&cfg.out, "report.json", &report)?;
    write_history_csv(&cfg.out, &outcome.history)?;
    write_json(
        &cfg.out,
        "tuple.json",
        &TupleArtifact::from_tuple(&outcome.tuple),
    )?;
    write_json(&cfg.out, "phi.json", &GridFormJson::from_form(&outcome.phi))?;
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct RealizeReport {
    pub solve: SolveReport,
    pub p1_residual_sup: f64,
    pub p1_residual_rel: f64,
    pub sp_residual: f64,
}

pub fn run_realize(cfg: &JobConfig) -> Result<RealizeReport> {
    let grid = cfg.torus()?;
    if grid.m() != 4 {
        return Err(Error::Validation(format!(
            "realize generates a random top-degree target and needs a 4-torus, got m = {}",
            grid.m()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sigma = match &cfg.sigma_path {
        Some(path) => load_trig_target(path, grid, 4)?,
        None => {
            // A zero-mean band-limited top form is exact on the torus.
            let (_, form) = random_form(grid, 4, cfg.h, 3, 1.0, &mut rng)?;
            form
        }
    };
    let outcome = realize_pontryagin(&sigma, cfg.q, cfg.h, &mut rng, &cfg.solver_options())?;
    let report = RealizeReport {
        solve: solve_report(
            "realize",
            cfg,
            grid,
            cfg.sigma_path.is_none(),
            outcome.certificate.clone(),
            &outcome.solve,
        ),
        p1_residual_sup: outcome.p1_residual_sup,
        p1_residual_rel: outcome.p1_residual_rel,
        sp_residual: outcome.sp_residual,
    };
    write_json(&cfg.out, "report.json", &report)?;
    write_history_csv(&cfg.out, &outcome.solve.history)?;
    write_json(
        &cfg.out,
        "tuple.json",
        &TupleArtifact::from_tuple(&outcome.solve.tuple),
    )?;
    let conn = diag_connection_wide(outcome.solve.tuple.forms(), cfg.q)?;
    write_json(
        &cfg.out,
        "connection.json",
        &ConnectionArtifact::from_connection(&conn),
    )?;
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct LemmaCommandReport {
    pub lemma: LemmaReport,
    pub codim: CodimReport,
}

pub fn run_lemma(cfg: &JobConfig) -> Result<LemmaCommandReport> {
    cfg.validate()?;
    let lemma = lemma_suite(cfg.lemma_n, cfg.lemma_q, cfg.pair_trials, cfg.seed).map_err(|e| {
        match e {
            Error::BudgetExceeded(msg) => Error::BudgetExceeded(format!(
                "{msg}; Monte Carlo rank evidence remains available via the codim check"
            )),
            other => other,
        }
    })?;
    let codim_q = if cfg.codim_q == 0 {
        q_min(cfg.codim_m)
    } else {
        cfg.codim_q
    };
    let codim = codim_monte_carlo(cfg.codim_m, codim_q, cfg.trials, cfg.seed);
    let report = LemmaCommandReport { lemma, codim };
    write_json(&cfg.out, "report.json", &report)?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// argument parsing and dispatch
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "chernforge",
    about = "Curvature-form toolkit: verification suites, sum-of-squares \
             decompositions, minor-determinant irreducibility, and bound \
             calculators on flat tori",
    version
)]
struct CliArgs {
    #[command(subcommand)]
    command: CliCommand,
    /// JSON job configuration; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid points per axis (keeps the configured number of axes).
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Tuple size (also the lemma column count for `lemma`).
    #[arg(long, global = true)]
    q: Option<usize>,
    /// Relative residual target for solvers.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Artifact directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Restrict `verify` to a single suite.
    #[arg(long, global = true)]
    only: Option<String>,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Run the property suites across all modules.
    Verify,
    /// Generate a certified null tuple and write its exact spec.
    GenTuple,
    /// Decompose an exact 4-form into a sum of squares of exact 2-forms.
    Decompose,
    /// Solve the transgression-sum equation for a 3-form target.
    Dbar,
    /// Realize a 4-form as the first Pontrjagin form of a connection.
    Realize,
    /// Symbolic irreducibility suite plus Monte Carlo rank check.
    Lemma,
    /// Evaluate the dimension-bound formulas.
    Bounds {
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long)]
        k: Option<usize>,
    },
}

fn effective_config(args: &CliArgs) -> Result<JobConfig> {
    let mut cfg = match &args.config {
        Some(path) => JobConfig::load(path)?,
        None => JobConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.grid {
        let m = cfg.grid.len();
        cfg.grid = vec![n; m];
    }
    if let Some(q) = args.q {
        cfg.q = q;
        cfg.lemma_q = q;
    }
    if let Some(tol) = args.tol {
        cfg.tol = tol;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(only) = &args.only {
        cfg.only = Some(only.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(args: &CliArgs) -> Result<i32> {
    match &args.command {
        CliCommand::Verify => {
            let cfg = effective_config(args)?;
            let report = run_verify(&cfg)?;
            for suite in &report.suites {
                println!(
                    "suite {}: {} ({} checks, worst margin {:.3e}, {:.2}s)",
                    suite.name,
                    if suite.passed { "PASS" } else { "FAIL" },
                    suite.cases,
                    suite.worst_margin,
                    suite.seconds
                );
                if !suite.passed {
                    println!("  {}", suite.detail);
                }
            }
            write_json(&cfg.out, "report.json", &report)?;
            Ok(if report.all_passed { 0 } else { 1 })
        }
        CliCommand::GenTuple => {
            let cfg = effective_config(args)?;
            let report = run_gen_tuple(&cfg)?;
            println!(
                "null tuple: T{} n={} q={} null sum {:.3e} (scale {:.3e}), certified={} \
                 min sv {:.3e} -> {}",
                report.m,
                report.n,
                report.q,
                report.null_sum_sup,
                report.term_scale,
                report.certificate.certified,
                report.certificate.min_sigma,
                cfg.out.display()
            );
            Ok(0)
        }
        CliCommand::Decompose => {
            let cfg = effective_config(args)?;
            let report = run_decompose(&cfg)?;
            println!(
                "decompose: residual {:.3e} ({:.3e} relative) in {} homotopy steps, \
                 {} GN / {} CG -> {}",
                report.residual_sup,
                report.residual_rel,
                report.homotopy_steps_taken,
                report.total_gn,
                report.total_cg,
                cfg.out.display()
            );
            Ok(0)
        }
        CliCommand::Dbar => {
            let cfg = effective_config(args)?;
            let report = run_dbar(&cfg)?;
            println!(
                "dbar: residual {:.3e} ({:.3e} relative), harmonic defect {:.3e} -> {}",
                report.residual_sup,
                report.residual_rel,
                report.harmonic_defect_sup,
                cfg.out.display()
            );
            Ok(0)
        }
        CliCommand::Realize => {
            let cfg = effective_config(args)?;
            let report = run_realize(&cfg)?;
            println!(
                "realize: p1 residual {:.3e} ({:.3e} relative), sp defect {:.3e} -> {}",
                report.p1_residual_sup,
                report.p1_residual_rel,
                report.sp_residual,
                cfg.out.display()
            );
            Ok(0)
        }
        CliCommand::Lemma => {
            let cfg = effective_config(args)?;
            let report = run_lemma(&cfg)?;
            println!(
                "lemma: n={} q={} subsets={} all_irreducible={} max error {:.3e}; \
                 codim m={} q={} full-rank fraction {}",
                report.lemma.n,
                report.lemma.q,
                report.lemma.subsets.len(),
                report.lemma.all_irreducible,
                report.lemma.max_error_bound,
                report.codim.m,
                report.codim.q,
                report.codim.full_rank_fraction
            );
            Ok(0)
        }
        CliCommand::Bounds { m, k } => {
            let report = bounds_report(*m, *k)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if let Some(out) = &args.out {
                write_json(out, "report.json", &report)?;
            }
            Ok(0)
        }
    }
}

/// Entry point used by the binary: parse, dispatch, map errors to exit
/// codes, never panic on user input.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match CliArgs::try_parse_from(argv) {
        Ok(args) => args,
        Err(e) => {
            // clap prints help/version through this path too.
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { 0 } else { 2 };
        }
    };
    match dispatch(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
