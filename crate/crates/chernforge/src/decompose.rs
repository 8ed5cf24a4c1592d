//! Decomposition of exact 4-forms as sums of squares of exact 2-forms.
//!
//! Given an exact 4-form `sigma` on `T^m` (m >= 4), find a tuple
//! `t = (omega_1, ..., omega_q)` of 1-forms with
//!
//! ```text
//!     D(t) = sum_i d omega_i ^ d omega_i = sigma.
//! ```
//!
//! The map `D` is quadratic, so its derivative at `t` in direction
//! `a = (a_1, ..., a_q)` is exactly
//!
//! ```text
//!     L_t(a) = 2 sum_i d a_i ^ d omega_i,
//! ```
//!
//! and the second-order remainder is `Q(a) = sum_i d a_i ^ d a_i` with no
//! higher terms.  The solver is a homotopy from a certified-regular null
//! tuple (`D = 0`): the target grows as `tau sigma` with adaptive
//! increments, and each increment is absorbed by Gauss-Newton steps.  A
//! step solves the damped normal equations in *residual space*,
//!
//! ```text
//!     (L L^T + mu I) z = r,        a = L^T z,
//! ```
//!
//! by preconditioned conjugate gradients; this is algebraically the same
//! correction as the primal Tikhonov system `(L^T L + mu I) a = L^T r`,
//! but the iteration space is one 4-form instead of q 1-forms.  The
//! preconditioner is a scalar Laplacian surrogate applied per Fourier
//! mode.  Because `D` is quadratic, the line search along `a` uses the
//! exact residual update `r(s) = r - s L a - s^2 Q(a)`.
//!
//! On convergence the residual is recomputed from scratch from the stored
//! tuple and reported next to the solver's claimed value; the two must
//! agree to roundoff, guarding against accumulated solver-state drift.

use rand::Rng;
use std::time::Instant;

use crate::budget::Budget;
use crate::chernweil::{diag_connection_with_budget, pontryagin1};
use crate::error::{Error, Result};
use crate::regtuples::{generate_null_tuple, OneFormTuple, RegularityCertificate};
use crate::tol;
use crate::torusforms::spectral::{deriv_multipliers, fft_full, ifft_full, kappa_sq};
use crate::torusforms::{merge_sign, DiffForm, FormBasis, TorusGrid};

/// Knobs of the homotopy Gauss-Newton solver.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Initial number of homotopy increments (the step adapts from 1/steps).
    pub homotopy_steps: usize,
    /// Gauss-Newton iteration cap per homotopy increment.
    pub max_gauss_newton: usize,
    /// Conjugate-gradient iteration cap per Gauss-Newton step.
    pub max_cg: usize,
    /// Relative residual reduction demanded of each CG solve.
    pub cg_tol: f64,
    /// Tikhonov damping, relative to the operator scale.
    pub mu: f64,
    /// Relative residual target: converged when `|r|_sup <= tol |sigma|_sup`.
    pub tol: f64,
    /// How often a failed increment may be halved before giving up.
    pub max_halvings: u32,
    pub budget: Budget,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            homotopy_steps: 10,
            max_gauss_newton: 30,
            max_cg: 500,
            cg_tol: 1e-2,
            mu: 1e-8,
            tol: tol::SOLVE_RESIDUAL,
            max_halvings: 8,
            budget: Budget::from_env(),
        }
    }
}

/// One accepted or rejected homotopy increment.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StepRecord {
    pub tau: f64,
    pub accepted: bool,
    pub gn_iters: usize,
    pub cg_iters: usize,
    pub residual_sup: f64,
}

/// Result of a successful decomposition.
#[derive(Debug, Clone)]
pub struct DecomposeOutcome {
    pub tuple: OneFormTuple,
    /// Solver's claimed final residual (sup norm).
    pub residual_sup: f64,
    /// Claimed residual relative to `|sigma|_sup`.
    pub residual_rel: f64,
    /// Residual recomputed from scratch from the stored tuple.
    pub recomputed_residual_sup: f64,
    /// `|recomputed - claimed|`; must sit at roundoff.
    pub recompute_agreement: f64,
    pub sigma_sup: f64,
    pub history: Vec<StepRecord>,
    pub total_gn: usize,
    pub total_cg: usize,
}

// ---------------------------------------------------------------------------
// linearization
// ---------------------------------------------------------------------------

/// The frozen linearization `L` of `D` at a tuple, with the cached exterior
/// derivatives `d omega_i` and the spectral preconditioner scale.
pub struct Linearization {
    grid: TorusGrid,
    d_forms: Vec<DiffForm>,
    gamma: f64,
    mu_eff: f64,
    term_sup: f64,
}

impl Linearization {
    pub fn new(grid: TorusGrid, forms: &[DiffForm], mu_rel: f64) -> Self {
        let d_forms: Vec<DiffForm> = forms.iter().map(|f| f.exterior_d()).collect();
        // Operator scale: L L^T ~ 4 sum_i |d omega_i|^2 |kappa|^2, estimated
        // with mean squares.  Only the order of magnitude matters.
        let points = grid.points() as f64;
        let mut gamma = 0.0;
        let mut term_sup = 0.0f64;
        for df in &d_forms {
            for c in df.comps() {
                gamma += 4.0 * c.data().iter().map(|v| v * v).sum::<f64>() / points;
            }
            let sup = df.sup_norm();
            term_sup = term_sup.max(sup * sup);
        }
        let gamma = gamma.max(f64::MIN_POSITIVE);
        Linearization {
            grid,
            d_forms,
            gamma,
            mu_eff: mu_rel * gamma,
            term_sup,
        }
    }

    /// Roundoff floor of `target - D(t)`: cancellations in `D` happen
    /// against the magnitude of the individual squares `(d omega_i)^2`,
    /// not against the (possibly zero) result.
    pub fn residual_floor(&self, target_sup: f64) -> f64 {
        1e-13 * self.term_sup.max(target_sup)
    }

    pub fn d_forms(&self) -> &[DiffForm] {
        &self.d_forms
    }

    /// `D(t)` assembled from the cached derivatives.
    pub fn d_value(&self) -> Result<DiffForm> {
        let mut out = DiffForm::zeros(self.grid, 4);
        for df in &self.d_forms {
            out.axpy(1.0, &df.wedge(df)?)?;
        }
        Ok(out)
    }

    /// `L(a) = 2 sum_i d a_i ^ d omega_i`.
    pub fn apply(&self, a: &[DiffForm]) -> Result<DiffForm> {
        let mut out = DiffForm::zeros(self.grid, 4);
        for (ai, df) in a.iter().zip(&self.d_forms) {
            out.axpy(2.0, &ai.exterior_d().wedge(df)?)?;
        }
        Ok(out)
    }

    /// `L(a)` and the quadratic remainder `Q(a) = sum_i d a_i ^ d a_i`,
    /// sharing one derivative pass.
    pub fn apply_with_quadratic(&self, a: &[DiffForm]) -> Result<(DiffForm, DiffForm)> {
        let mut la = DiffForm::zeros(self.grid, 4);
        let mut qa = DiffForm::zeros(self.grid, 4);
        for (ai, df) in a.iter().zip(&self.d_forms) {
            let dai = ai.exterior_d();
            la.axpy(2.0, &dai.wedge(df)?)?;
            qa.axpy(1.0, &dai.wedge(&dai)?)?;
        }
        Ok((la, qa))
    }

    /// Adjoint `L^T r`: per member, `2 d^T (W_i^T r)` where
    /// `(W_i^T r)_I = sum_{J disjoint I} sign(I, J) (d omega_i)_J r_{I u J}`
    /// is the pointwise adjoint of wedging with `d omega_i`.
    pub fn apply_transpose(&self, r: &DiffForm) -> Result<Vec<DiffForm>> {
        let m = self.grid.m();
        let basis2 = FormBasis::get(m, 2);
        let basis4 = FormBasis::get(m, 4);
        let mut out = Vec::with_capacity(self.d_forms.len());
        for df in &self.d_forms {
            let mut u = DiffForm::zeros(self.grid, 2);
            for (ci, &mi) in basis2.masks.iter().enumerate() {
                for (cj, &mj) in basis2.masks.iter().enumerate() {
                    if mi & mj != 0 {
                        continue;
                    }
                    let sign = merge_sign(mi, mj);
                    let target = basis4.pos[(mi | mj) as usize];
                    u.comps_mut()[ci].add_product(sign, df.comp(cj), r.comp(target))?;
                }
            }
            out.push(u.d_adjoint().scaled(2.0));
        }
        Ok(out)
    }

    /// `(L L^T + mu) z`.
    pub fn normal_apply(&self, z: &DiffForm) -> Result<DiffForm> {
        let mut out = self.apply(&self.apply_transpose(z)?)?;
        out.axpy(self.mu_eff, z)?;
        Ok(out)
    }

    fn precondition(&self, r: &DiffForm) -> DiffForm {
        spectral_precondition(self.grid, self.gamma, self.mu_eff, r)
    }
}

/// Spectral diagonal preconditioner shared by the normal-equation solves:
/// per Fourier mode, divide by `gamma (|kappa|^2 + 1) + mu`.
fn spectral_precondition(grid: TorusGrid, gamma: f64, mu: f64, r: &DiffForm) -> DiffForm {
    let n = grid.n();
    let m = grid.m();
    let mult = deriv_multipliers(n);
    let mut out = DiffForm::zeros(grid, r.degree());
    for (ci, comp) in r.comps().iter().enumerate() {
        let mut coef = fft_full(comp.data(), n, m);
        for (flat, c) in coef.iter_mut().enumerate() {
            let k2 = kappa_sq(flat, n, m, &mult);
            *c /= gamma * (k2 + 1.0) + mu;
        }
        let data = ifft_full(coef, n, m);
        out.comps_mut()[ci] =
            crate::torusforms::ScalarField::from_data(grid, data).expect("shape preserved");
    }
    out
}

// ---------------------------------------------------------------------------
// conjugate gradients
// ---------------------------------------------------------------------------

/// Preconditioned CG on `(G G^T + mu) z = b`, generic over the normal
/// operator.  Returns the solution, iterations used, and the final
/// relative residual.
fn pcg(
    normal: impl Fn(&DiffForm) -> Result<DiffForm>,
    precond: impl Fn(&DiffForm) -> DiffForm,
    b: &DiffForm,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(DiffForm, usize, f64)> {
    let b_norm = b.dot(b)?.sqrt();
    let mut x = DiffForm::zeros(b.grid(), b.degree());
    if b_norm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut r = b.clone();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z)?;
    let mut rel = 1.0;
    for it in 1..=max_iter {
        let ap = normal(&p)?;
        let pap = p.dot(&ap)?;
        if !(pap.is_finite() && pap > 0.0) {
            return Ok((x, it - 1, rel));
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p)?;
        r.axpy(-alpha, &ap)?;
        rel = r.dot(&r)?.sqrt() / b_norm;
        if rel <= rel_tol {
            return Ok((x, it, rel));
        }
        z = precond(&r);
        let rz_new = r.dot(&z)?;
        let beta = rz_new / rz;
        rz = rz_new;
        p.scale_in_place(beta);
        p.axpy(1.0, &z)?;
    }
    Ok((x, max_iter, rel))
}

// ---------------------------------------------------------------------------
// Gauss-Newton inner loop
// ---------------------------------------------------------------------------

struct GnResult {
    converged: bool,
    iters: usize,
    cg_iters: usize,
    residual_sup: f64,
}

fn gauss_newton(
    grid: TorusGrid,
    forms: &mut Vec<DiffForm>,
    target: &DiffForm,
    abs_tol: f64,
    opts: &SolverOptions,
    started: Instant,
) -> Result<GnResult> {
    let mut total_cg = 0usize;
    let mut last_sup = f64::INFINITY;
    for iter in 0..=opts.max_gauss_newton {
        check_deadline(&opts.budget, started)?;
        let lin = Linearization::new(grid, forms, opts.mu);
        let d_t = lin.d_value()?;
        let mut r = target.sub(&d_t)?;
        // The residual of two exact forms is exact; strip the roundoff
        // harmonic part so CG works in the operator's range.
        r.remove_harmonic_part();
        let r_sup = r.sup_norm();
        last_sup = r_sup;
        // Converged when below target, with a roundoff floor relative to
        // the magnitudes actually present.
        let floor = lin.residual_floor(target.sup_norm());
        let goal = abs_tol.max(floor);
        if r_sup <= goal {
            return Ok(GnResult {
                converged: true,
                iters: iter,
                cg_iters: total_cg,
                residual_sup: r_sup,
            });
        }
        if iter == opts.max_gauss_newton {
            break;
        }
        // Inexact-Newton forcing: solve the normal equations only as
        // tightly as the remaining decrease requires, never looser than
        // a fixed contraction and never tighter than `cg_tol`.
        let eta = (0.5 * (goal / r_sup).sqrt())
            .max(opts.cg_tol)
            .min(0.25f64.max(opts.cg_tol));
        let (z, cg_used, _) = pcg(
            |v| lin.normal_apply(v),
            |v| lin.precondition(v),
            &r,
            eta,
            opts.max_cg,
        )?;
        total_cg += cg_used;
        let a = lin.apply_transpose(&z)?;
        let (la, qa) = lin.apply_with_quadratic(&a)?;
        // Exact quadratic line search: r(s) = r - s La - s^2 Qa.
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..6 {
            let mut r_new = r.clone();
            r_new.axpy(-s, &la)?;
            r_new.axpy(-s * s, &qa)?;
            if r_new.sup_norm() < r_sup * (1.0 - 1e-4 * s) {
                for (f, ai) in forms.iter_mut().zip(&a) {
                    f.axpy(s, ai)?;
                }
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            return Ok(GnResult {
                converged: false,
                iters: iter + 1,
                cg_iters: total_cg,
                residual_sup: r_sup,
            });
        }
    }
    Ok(GnResult {
        converged: false,
        iters: opts.max_gauss_newton,
        cg_iters: total_cg,
        residual_sup: last_sup,
    })
}

/// Relative sup error between the frozen linearization and the central
/// finite difference of `D` at `forms` along `dirs`.  The map is quadratic,
/// so the central difference is exact up to roundoff and any discrepancy
/// isolates a linearization bug.
pub fn jacobian_fd_error(forms: &[DiffForm], dirs: &[DiffForm], step: f64) -> Result<f64> {
    if forms.is_empty() || forms.len() != dirs.len() {
        return Err(Error::LengthMismatch(format!(
            "tuple has {} forms, directions {}",
            forms.len(),
            dirs.len()
        )));
    }
    let grid = forms[0].grid();
    let lin = Linearization::new(grid, forms, 0.0);
    let la = lin.apply(dirs)?;
    let shift = |s: f64| -> Result<DiffForm> {
        let mut shifted = Vec::with_capacity(forms.len());
        for (f, d) in forms.iter().zip(dirs) {
            let mut g = f.clone();
            g.axpy(s, d)?;
            shifted.push(g);
        }
        Linearization::new(grid, &shifted, 0.0).d_value()
    };
    let mut fd = shift(step)?.sub(&shift(-step)?)?;
    fd.scale_in_place(1.0 / (2.0 * step));
    Ok(fd.sub(&la)?.sup_norm() / la.sup_norm().max(f64::MIN_POSITIVE))
}

fn check_deadline(budget: &Budget, started: Instant) -> Result<()> {
    if budget.max_secs > 0 && started.elapsed().as_secs() >= budget.max_secs {
        return Err(Error::BudgetExceeded(format!(
            "solver wall clock exceeded {} s",
            budget.max_secs
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// public solvers
// ---------------------------------------------------------------------------

/// Solve `D(t) = sigma` by homotopy from `start` (normally a certified null
/// tuple).  `sigma` must be an exact 4-form; failure to make progress at
/// the smallest allowed increment reports [`Error::Stalled`] with the
/// fraction reached.
pub fn decompose_exact_4form(
    sigma: &DiffForm,
    start: &OneFormTuple,
    opts: &SolverOptions,
) -> Result<DecomposeOutcome> {
    let grid = sigma.grid();
    grid.ensure_same(&start.grid())?;
    if sigma.degree() != 4 {
        return Err(Error::WrongDegree {
            expected: 4,
            got: sigma.degree(),
        });
    }
    if grid.m() < 4 {
        return Err(Error::BadDegree {
            degree: 4,
            m: grid.m(),
        });
    }
    let exactness = sigma.is_exact(tol::EXACTNESS);
    if !exactness.exact {
        return Err(Error::NotExact {
            detail: format!(
                "d residual {:.3e}, harmonic residual {:.3e}, allowed {:.3e}",
                exactness.d_residual, exactness.harmonic_residual, exactness.tol
            ),
        });
    }

    let sigma_sup = sigma.sup_norm();
    let abs_tol = opts.tol * sigma_sup;
    let started = Instant::now();

    let mut forms = start.forms().to_vec();
    let mut history = Vec::new();
    let mut tau = 0.0f64;
    let mut dtau = 1.0 / opts.homotopy_steps.max(1) as f64;
    let mut halvings = 0u32;
    let mut total_gn = 0usize;
    let mut total_cg = 0usize;
    let mut claimed = f64::NAN;

    while tau < 1.0 {
        check_deadline(&opts.budget, started)?;
        let tau_next = (tau + dtau).min(1.0);
        let target = sigma.scaled(tau_next);
        // Intermediate path points only steer the homotopy; solving them
        // to the square root of the final relative tolerance keeps the
        // path error far below any increment while saving most CG work.
        let step_tol = if tau_next >= 1.0 {
            abs_tol
        } else {
            (opts.tol.abs().sqrt() * sigma_sup).max(abs_tol)
        };
        let mut trial = forms.clone();
        let gn = gauss_newton(grid, &mut trial, &target, step_tol, opts, started)?;
        total_gn += gn.iters;
        total_cg += gn.cg_iters;
        history.push(StepRecord {
            tau: tau_next,
            accepted: gn.converged,
            gn_iters: gn.iters,
            cg_iters: gn.cg_iters,
            residual_sup: gn.residual_sup,
        });
        if gn.converged {
            forms = trial;
            tau = tau_next;
            claimed = gn.residual_sup;
            dtau = (dtau * 2.0).min(0.25);
        } else {
            halvings += 1;
            if halvings > opts.max_halvings {
                return Err(Error::Stalled {
                    fraction: tau,
                    residual: gn.residual_sup,
                    target: abs_tol,
                    detail: format!(
                        "no Gauss-Newton progress after {halvings} increment halvings"
                    ),
                });
            }
            dtau *= 0.5;
        }
    }

    // Fresh recomputation from the stored tuple alone.
    let tuple = OneFormTuple::new(forms)?;
    let fresh = tuple.sum_of_squares()?;
    let mut resid = sigma.sub(&fresh)?;
    resid.remove_harmonic_part();
    let recomputed = resid.sup_norm();
    Ok(DecomposeOutcome {
        tuple,
        residual_sup: claimed,
        residual_rel: if sigma_sup > 0.0 { claimed / sigma_sup } else { claimed },
        recomputed_residual_sup: recomputed,
        recompute_agreement: (recomputed - claimed).abs(),
        sigma_sup,
        history,
        total_gn,
        total_cg,
    })
}

// ---------------------------------------------------------------------------
// the Dbar equation
// ---------------------------------------------------------------------------

/// Frozen linearization of the joint quadratic map
/// `(t, phi) -> Dbar(t, phi) = sum_i omega_i ^ d omega_i + d phi` at a
/// tuple: the direction `(a, psi)` maps to
/// `sum_i (a_i ^ d omega_i + omega_i ^ d a_i) + d psi`, with remainder
/// `sum_i a_i ^ d a_i` (phi enters linearly).
///
/// Note the map is *not* driven through `d Dbar = D`: the discrete Leibniz
/// rule fails on aliased pointwise products, so the 3-form equation is
/// solved directly.  The harmonic component of the target is reachable
/// because `mean(a_i ^ d omega_i)` does not vanish at generic tuples.
pub struct DbarLinearization {
    grid: TorusGrid,
    forms: Vec<DiffForm>,
    d_forms: Vec<DiffForm>,
    gamma: f64,
    mu_eff: f64,
    term_sup: f64,
}

impl DbarLinearization {
    pub fn new(grid: TorusGrid, forms: &[DiffForm], mu_rel: f64) -> Self {
        let d_forms: Vec<DiffForm> = forms.iter().map(|f| f.exterior_d()).collect();
        let points = grid.points() as f64;
        let mut gamma = 1.0; // the d psi channel contributes ~ |kappa|^2
        let mut term_sup = 0.0f64;
        for (f, df) in forms.iter().zip(&d_forms) {
            for c in f.comps().iter().chain(df.comps()) {
                gamma += c.data().iter().map(|v| v * v).sum::<f64>() / points;
            }
            term_sup = term_sup.max(f.sup_norm() * df.sup_norm());
        }
        DbarLinearization {
            grid,
            forms: forms.to_vec(),
            d_forms,
            gamma,
            mu_eff: mu_rel * gamma,
            term_sup,
        }
    }

    pub fn residual_floor(&self, target_sup: f64) -> f64 {
        1e-13 * self.term_sup.max(target_sup)
    }

    /// `Dbar(t, phi)` from the cached derivatives.
    pub fn value(&self, phi: &DiffForm) -> Result<DiffForm> {
        let mut out = phi.exterior_d();
        for (f, df) in self.forms.iter().zip(&self.d_forms) {
            out.axpy(1.0, &f.wedge(df)?)?;
        }
        Ok(out)
    }

    /// `G(a, psi)`.
    pub fn apply(&self, a: &[DiffForm], psi: &DiffForm) -> Result<DiffForm> {
        let mut out = psi.exterior_d();
        for ((ai, f), df) in a.iter().zip(&self.forms).zip(&self.d_forms) {
            out.axpy(1.0, &ai.wedge(df)?)?;
            out.axpy(1.0, &f.wedge(&ai.exterior_d())?)?;
        }
        Ok(out)
    }

    /// Quadratic remainder `sum_i a_i ^ d a_i`.
    pub fn quadratic(&self, a: &[DiffForm]) -> Result<DiffForm> {
        let mut out = DiffForm::zeros(self.grid, 3);
        for ai in a {
            out.axpy(1.0, &ai.wedge(&ai.exterior_d())?)?;
        }
        Ok(out)
    }

    /// Adjoint `G^T r` for a 3-form `r`: per member
    /// `W1_i^T r + d^T (V_i^T r)` where `W1_i a = a ^ d omega_i` and
    /// `V_i u = omega_i ^ u` are pointwise; the `psi` part is `d^T r`.
    pub fn apply_transpose(&self, r: &DiffForm) -> Result<(Vec<DiffForm>, DiffForm)> {
        let m = self.grid.m();
        let basis2 = FormBasis::get(m, 2);
        let basis3 = FormBasis::get(m, 3);
        let mut tuple_part = Vec::with_capacity(self.forms.len());
        for (f, df) in self.forms.iter().zip(&self.d_forms) {
            // (W1^T r)_a = sum_{J: a not in J} sign(a, J) (d omega)_J r_{a u J}
            let mut w1 = DiffForm::zeros(self.grid, 1);
            for axis in 0..m {
                let mi = 1u32 << axis;
                for (cj, &mj) in basis2.masks.iter().enumerate() {
                    if mi & mj != 0 {
                        continue;
                    }
                    let sign = merge_sign(mi, mj);
                    let target = basis3.pos[(mi | mj) as usize];
                    w1.comps_mut()[axis].add_product(sign, df.comp(cj), r.comp(target))?;
                }
            }
            // (V^T r)_J = sum_{a not in J} sign(a, J) omega_a r_{a u J}
            let mut v = DiffForm::zeros(self.grid, 2);
            for (cj, &mj) in basis2.masks.iter().enumerate() {
                for axis in 0..m {
                    let mi = 1u32 << axis;
                    if mi & mj != 0 {
                        continue;
                    }
                    let sign = merge_sign(mi, mj);
                    let target = basis3.pos[(mi | mj) as usize];
                    v.comps_mut()[cj].add_product(sign, f.comp(axis), r.comp(target))?;
                }
            }
            w1.axpy(1.0, &v.d_adjoint())?;
            tuple_part.push(w1);
        }
        Ok((tuple_part, r.d_adjoint()))
    }

    pub fn normal_apply(&self, z: &DiffForm) -> Result<DiffForm> {
        let (a, psi) = self.apply_transpose(z)?;
        let mut out = self.apply(&a, &psi)?;
        out.axpy(self.mu_eff, z)?;
        Ok(out)
    }

    fn precondition(&self, r: &DiffForm) -> DiffForm {
        spectral_precondition(self.grid, self.gamma, self.mu_eff, r)
    }
}

fn gauss_newton_dbar(
    grid: TorusGrid,
    forms: &mut Vec<DiffForm>,
    phi: &mut DiffForm,
    target: &DiffForm,
    abs_tol: f64,
    opts: &SolverOptions,
    started: Instant,
) -> Result<GnResult> {
    let mut total_cg = 0usize;
    let mut last_sup = f64::INFINITY;
    for iter in 0..=opts.max_gauss_newton {
        check_deadline(&opts.budget, started)?;
        let lin = DbarLinearization::new(grid, forms, opts.mu);
        let r = target.sub(&lin.value(phi)?)?;
        let r_sup = r.sup_norm();
        last_sup = r_sup;
        let floor = lin.residual_floor(target.sup_norm());
        let goal = abs_tol.max(floor);
        if r_sup <= goal {
            return Ok(GnResult {
                converged: true,
                iters: iter,
                cg_iters: total_cg,
                residual_sup: r_sup,
            });
        }
        if iter == opts.max_gauss_newton {
            break;
        }
        let eta = (0.5 * (goal / r_sup).sqrt())
            .max(opts.cg_tol)
            .min(0.25f64.max(opts.cg_tol));
        let (z, cg_used, _) = pcg(
            |v| lin.normal_apply(v),
            |v| lin.precondition(v),
            &r,
            eta,
            opts.max_cg,
        )?;
        total_cg += cg_used;
        let (a, psi) = lin.apply_transpose(&z)?;
        let ga = lin.apply(&a, &psi)?;
        let qa = lin.quadratic(&a)?;
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..6 {
            let mut r_new = r.clone();
            r_new.axpy(-s, &ga)?;
            r_new.axpy(-s * s, &qa)?;
            if r_new.sup_norm() < r_sup * (1.0 - 1e-4 * s) {
                for (f, ai) in forms.iter_mut().zip(&a) {
                    f.axpy(s, ai)?;
                }
                phi.axpy(s, &psi)?;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            return Ok(GnResult {
                converged: false,
                iters: iter + 1,
                cg_iters: total_cg,
                residual_sup: r_sup,
            });
        }
    }
    Ok(GnResult {
        converged: false,
        iters: opts.max_gauss_newton,
        cg_iters: total_cg,
        residual_sup: last_sup,
    })
}

/// Result of [`solve_dbar`].
#[derive(Debug, Clone)]
pub struct DbarOutcome {
    pub tuple: OneFormTuple,
    /// Gauge 2-form with `Dbar(t, phi) = sum omega_i ^ d omega_i + d phi`.
    pub phi: DiffForm,
    pub residual_sup: f64,
    pub residual_rel: f64,
    pub recomputed_residual_sup: f64,
    pub recompute_agreement: f64,
    /// Harmonic component of the final defect (diagnostic; bounded by the
    /// full residual since the solver steers it too).
    pub harmonic_defect_sup: f64,
    pub beta_sup: f64,
    pub history: Vec<StepRecord>,
    pub total_gn: usize,
    pub total_cg: usize,
}

/// Solve `sum_i omega_i ^ d omega_i + d phi = beta` for a given 3-form
/// `beta` by homotopy from `start` (normally a certified null tuple) with
/// `phi = 0`.  Any 3-form target is admissible a priori; unreachable
/// targets surface as [`Error::Stalled`].
pub fn solve_dbar(
    beta: &DiffForm,
    start: &OneFormTuple,
    opts: &SolverOptions,
) -> Result<DbarOutcome> {
    let grid = beta.grid();
    grid.ensure_same(&start.grid())?;
    if beta.degree() != 3 {
        return Err(Error::WrongDegree {
            expected: 3,
            got: beta.degree(),
        });
    }
    if grid.m() < 3 {
        return Err(Error::BadDegree {
            degree: 3,
            m: grid.m(),
        });
    }

    let beta_sup = beta.sup_norm();
    let abs_tol = opts.tol * beta_sup;
    let started = Instant::now();

    let mut forms = start.forms().to_vec();
    let mut phi = DiffForm::zeros(grid, 2);
    let mut history = Vec::new();
    let mut tau = 0.0f64;
    let mut dtau = 1.0 / opts.homotopy_steps.max(1) as f64;
    let mut halvings = 0u32;
    let mut total_gn = 0usize;
    let mut total_cg = 0usize;
    let mut claimed = f64::NAN;

    while tau < 1.0 {
        check_deadline(&opts.budget, started)?;
        let tau_next = (tau + dtau).min(1.0);
        let target = beta.scaled(tau_next);
        let step_tol = if tau_next >= 1.0 {
            abs_tol
        } else {
            (opts.tol.abs().sqrt() * beta_sup).max(abs_tol)
        };
        let mut trial_forms = forms.clone();
        let mut trial_phi = phi.clone();
        let gn = gauss_newton_dbar(
            grid,
            &mut trial_forms,
            &mut trial_phi,
            &target,
            step_tol,
            opts,
            started,
        )?;
        total_gn += gn.iters;
        total_cg += gn.cg_iters;
        history.push(StepRecord {
            tau: tau_next,
            accepted: gn.converged,
            gn_iters: gn.iters,
            cg_iters: gn.cg_iters,
            residual_sup: gn.residual_sup,
        });
        if gn.converged {
            forms = trial_forms;
            phi = trial_phi;
            tau = tau_next;
            claimed = gn.residual_sup;
            dtau = (dtau * 2.0).min(0.25);
        } else {
            halvings += 1;
            if halvings > opts.max_halvings {
                return Err(Error::Stalled {
                    fraction: tau,
                    residual: gn.residual_sup,
                    target: abs_tol,
                    detail: format!(
                        "no Gauss-Newton progress after {halvings} increment halvings"
                    ),
                });
            }
            dtau *= 0.5;
        }
    }

    let tuple = OneFormTuple::new(forms)?;
    let fresh = tuple.transgression_sum()?.add(&phi.exterior_d())?;
    let resid = beta.sub(&fresh)?;
    let recomputed = resid.sup_norm();
    Ok(DbarOutcome {
        tuple,
        phi,
        residual_sup: claimed,
        residual_rel: if beta_sup > 0.0 { claimed / beta_sup } else { claimed },
        recomputed_residual_sup: recomputed,
        recompute_agreement: (recomputed - claimed).abs(),
        harmonic_defect_sup: resid.harmonic_sup(),
        beta_sup,
        history,
        total_gn,
        total_cg,
    })
}

/// Result of [`realize_pontryagin`].
#[derive(Debug, Clone)]
pub struct RealizeOutcome {
    pub certificate: RegularityCertificate,
    pub solve: DecomposeOutcome,
    /// Sup defect of `p_1(diag connection) - sigma`, recomputed through the
    /// full curvature and trace machinery (an independent code path from
    /// the solver's residual).
    pub p1_residual_sup: f64,
    pub p1_residual_rel: f64,
    /// sp(q) membership defect of the assembled connection.
    pub sp_residual: f64,
}

/// Realize an exact 4-form as the first Pontrjagin form of an sp(q)
/// connection: decompose `sigma = sum (d omega_i)^2` from a fresh null
/// tuple, assemble the diagonal connection, and confirm by recomputing
/// `p_1` through the curvature path.  The rank budget is widened to `q`,
/// which the caller requested explicitly.
pub fn realize_pontryagin<R: Rng>(
    sigma: &DiffForm,
    q: usize,
    h: usize,
    rng: &mut R,
    opts: &SolverOptions,
) -> Result<RealizeOutcome> {
    let grid = sigma.grid();
    let (start, certificate) = generate_null_tuple(grid, q, h, rng)?;
    let solve = decompose_exact_4form(sigma, &start, opts)?;
    let allowance = Budget {
        max_rank: q.max(opts.budget.max_rank),
        ..opts.budget.clone()
    };
    let conn = diag_connection_with_budget(solve.tuple.forms(), &allowance)?;
    let sp_residual = conn.sp_residuals().max();
    let p1 = pontryagin1(&conn)?;
    let p1_residual_sup = p1.sub(sigma)?.sup_norm();
    let sigma_sup = sigma.sup_norm();
    Ok(RealizeOutcome {
        certificate,
        solve,
        p1_residual_sup,
        p1_residual_rel: if sigma_sup > 0.0 {
            p1_residual_sup / sigma_sup
        } else {
            p1_residual_sup
        },
        sp_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regtuples::generate_regular_tuple;
    use crate::torusforms::trig::random_form;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_tuple_forms(grid: TorusGrid, q: usize, seed: u64) -> Vec<DiffForm> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..q)
            .map(|_| random_form(grid, 1, 1, 2, 1.0, &mut rng).unwrap().1)
            .collect()
    }

    #[test]
    fn linearization_is_adjoint_consistent() {
        let g = TorusGrid::new(4, 8).unwrap();
        let forms = random_tuple_forms(g, 3, 60);
        let lin = Linearization::new(g, &forms, 0.0);
        let a = random_tuple_forms(g, 3, 61);
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let r = random_form(g, 4, 2, 3, 1.0, &mut rng).unwrap().1;
        let lhs = lin.apply(&a).unwrap().dot(&r).unwrap();
        let lt = lin.apply_transpose(&r).unwrap();
        let rhs: f64 = a.iter().zip(&lt).map(|(x, y)| x.dot(y).unwrap()).sum();
        let scale = lhs.abs().max(rhs.abs()).max(1e-30);
        assert!(
            ((lhs - rhs) / scale).abs() < 1e-11,
            "adjoint mismatch: {lhs} vs {rhs}"
        );
    }

    #[test]
    fn central_difference_matches_linearization() {
        // D is quadratic, so the central difference is exact up to roundoff.
        let g = TorusGrid::new(4, 8).unwrap();
        for seed in 0..3u64 {
            let forms = random_tuple_forms(g, 4, 70 + seed);
            let dir = random_tuple_forms(g, 4, 80 + seed);
            let lin = Linearization::new(g, &forms, 0.0);
            let la = lin.apply(&dir).unwrap();
            let eps = tol::JACOBIAN_FD_STEP;
            let eval = |s: f64| -> DiffForm {
                let shifted: Vec<DiffForm> = forms
                    .iter()
                    .zip(&dir)
                    .map(|(f, d)| {
                        let mut out = f.clone();
                        out.axpy(s, d).unwrap();
                        out
                    })
                    .collect();
                OneFormTuple::new(shifted).unwrap().sum_of_squares().unwrap()
            };
            let fd = eval(eps).sub(&eval(-eps)).unwrap().scaled(0.5 / eps);
            let scale = la.sup_norm().max(1.0);
            let rel = fd.sub(&la).unwrap().sup_norm() / scale;
            assert!(rel < tol::JACOBIAN_FD, "seed {seed}: FD mismatch {rel:.3e}");
        }
    }

    #[test]
    fn pcg_solves_the_damped_normal_equations() {
        let g = TorusGrid::new(4, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(90);
        let (tuple, _) = generate_regular_tuple(g, 10, 1, &mut rng).unwrap();
        let lin = Linearization::new(g, tuple.forms(), 1e-8);
        let mut b = random_form(g, 4, 2, 3, 1.0, &mut rng).unwrap().1;
        b.remove_harmonic_part();
        let (z, iters, _) = pcg(
            |v| lin.normal_apply(v),
            |v| lin.precondition(v),
            &b,
            1e-8,
            2000,
        )
        .unwrap();
        let applied = lin.normal_apply(&z).unwrap();
        let rel = applied.sub(&b).unwrap().dot(&applied.sub(&b).unwrap()).unwrap().sqrt()
            / b.dot(&b).unwrap().sqrt();
        assert!(rel < 1e-6, "CG residual {rel:.3e} after {iters} iterations");
    }

    #[test]
    fn plants_and_recovers_a_decomposition() {
        let g = TorusGrid::new(4, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let (planted, _) = generate_regular_tuple(g, 10, 1, &mut rng).unwrap();
        let sigma = planted.sum_of_squares().unwrap();
        assert!(sigma.is_exact(tol::EXACTNESS).exact);
        let (start, _) = generate_null_tuple(g, 10, 1, &mut rng).unwrap();
        let opts = SolverOptions::default();
        let out = decompose_exact_4form(&sigma, &start, &opts).unwrap();
        assert!(
            out.residual_rel <= opts.tol,
            "residual_rel = {:.3e}",
            out.residual_rel
        );
        assert!(
            out.recompute_agreement
                <= tol::REPORT_RECOMPUTE * out.sigma_sup.max(1.0),
            "recompute agreement {:.3e}",
            out.recompute_agreement
        );
    }

    #[test]
    fn rejects_non_exact_targets() {
        let g = TorusGrid::new(4, 8).unwrap();
        let mut sigma = DiffForm::zeros(g, 4);
        for v in sigma.comps_mut()[0].data_mut() {
            *v = 1.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let (start, _) = generate_null_tuple(g, 10, 1, &mut rng).unwrap();
        let err = decompose_exact_4form(&sigma, &start, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotExact { .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn stalls_cleanly_when_iteration_budget_is_tiny() {
        let g = TorusGrid::new(4, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let (planted, _) = generate_regular_tuple(g, 10, 1, &mut rng).unwrap();
        let sigma = planted.sum_of_squares().unwrap();
        let (start, _) = generate_null_tuple(g, 10, 1, &mut rng).unwrap();
        let opts = SolverOptions {
            max_gauss_newton: 0,
            max_halvings: 1,
            ..SolverOptions::default()
        };
        let err = decompose_exact_4form(&sigma, &start, &opts).unwrap_err();
        assert!(matches!(err, Error::Stalled { .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn dbar_linearization_is_adjoint_consistent() {
        let g = TorusGrid::new(4, 8).unwrap();
        let forms = random_tuple_forms(g, 3, 110);
        let lin = DbarLinearization::new(g, &forms, 0.0);
        let a = random_tuple_forms(g, 3, 111);
        let mut rng = ChaCha8Rng::seed_from_u64(112);
        let psi = random_form(g, 2, 2, 3, 1.0, &mut rng).unwrap().1;
        let r = random_form(g, 3, 2, 3, 1.0, &mut rng).unwrap().1;
        let lhs = lin.apply(&a, &psi).unwrap().dot(&r).unwrap();
        let (ta, tpsi) = lin.apply_transpose(&r).unwrap();
        let rhs: f64 = a.iter().zip(&ta).map(|(x, y)| x.dot(y).unwrap()).sum::<f64>()
            + psi.dot(&tpsi).unwrap();
        let scale = lhs.abs().max(rhs.abs()).max(1e-30);
        assert!(
            ((lhs - rhs) / scale).abs() < 1e-11,
            "adjoint mismatch: {lhs} vs {rhs}"
        );
    }

    #[test]
    fn dbar_recovers_planted_data() {
        let g = TorusGrid::new(4, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        let (planted, _) = generate_regular_tuple(g, 10, 1, &mut rng).unwrap();
        let phi_star = random_form(g, 2, 2, 3, 0.3, &mut rng).unwrap().1;
        let beta = planted
            .transgression_sum()
            .unwrap()
            .add(&phi_star.exterior_d())
            .unwrap();
        let (start, _) = generate_null_tuple(g, 10, 1, &mut rng).unwrap();
        let opts = SolverOptions::default();
        let out = solve_dbar(&beta, &start, &opts).unwrap();
        assert!(
            out.residual_rel <= opts.tol,
            "residual_rel = {:.3e}",
            out.residual_rel
        );
        assert!(
            out.recompute_agreement <= tol::REPORT_RECOMPUTE * out.beta_sup.max(1.0),
            "recompute agreement {:.3e}",
            out.recompute_agreement
        );
        // The harmonic component is solved, not just reported.
        assert!(out.harmonic_defect_sup <= out.residual_sup + 1e-15);
    }

    #[test]
    fn dbar_solves_exact_targets_quickly() {
        // For beta exact, phi alone can carry the solution.
        let g = TorusGrid::new(4, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(114);
        let phi_star = random_form(g, 2, 2, 3, 1.0, &mut rng).unwrap().1;
        let beta = phi_star.exterior_d();
        let (start, _) = generate_null_tuple(g, 10, 1, &mut rng).unwrap();
        let opts = SolverOptions::default();
        let out = solve_dbar(&beta, &start, &opts).unwrap();
        assert!(
            out.residual_rel <= opts.tol,
            "residual {:.3e}",
            out.residual_rel
        );
    }

    #[test]
    fn realize_reproduces_sigma_through_the_curvature_path() {
        let g = TorusGrid::new(4, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(120);
        let (planted, _) = generate_regular_tuple(g, 10, 1, &mut rng).unwrap();
        let sigma = planted.sum_of_squares().unwrap();
        let out = realize_pontryagin(&sigma, 10, 1, &mut rng, &SolverOptions::default()).unwrap();
        assert!(out.certificate.certified);
        assert!(
            out.p1_residual_rel <= tol::REALIZE_END_TO_END,
            "end-to-end residual {:.3e}",
            out.p1_residual_rel
        );
        assert!(out.sp_residual < tol::SP_MEMBERSHIP);
    }
}
