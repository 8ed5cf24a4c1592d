//! Chern-Weil forms of sp(k)-valued connections on torus grids.
//!
//! A connection is a matrix-valued 1-form: one grid of 2k x 2k complex
//! matrices per axis, each pointwise value in sp(k).  Its curvature is
//! `Omega = d omega + omega ^ omega`, where the matrix wedge of 1-forms has
//! components `omega_a omega_b - omega_b omega_a = [omega_a, omega_b]`.
//!
//! The first symplectic Pontrjagin form is
//!
//! ```text
//!     p_1(omega) = c_1 trace(Omega ^ Omega),      c_1 = -1/2,
//! ```
//!
//! with the normalization pinned (and verified in tests) by the diagonal
//! identity: for the rank-q diagonal connection of a tuple (omega_1..omega_q)
//! of scalar 1-forms, `p_1 = sum_i (d omega_i)^2`.  Because curvature values
//! stay in sp(k), `trace(Omega ^ Omega)` is real up to rounding; the
//! imaginary residual is checked against [`crate::tol::P1_DIAGONAL`].
//!
//! The transgression (secondary) form of a pair `omega, omega + alpha` is
//!
//! ```text
//!     pbar_1 = 2 c_1 integral_0^1 trace(alpha ^ Omega_t) dt,
//!     Omega_t = curvature(omega + t alpha) = C_0 + t C_1 + t^2 C_2,
//! ```
//!
//! integrated in closed form with weights 1, 1/2, 1/3 on the coefficient
//! forms, so that `d pbar_1 = p_1(omega + alpha) - p_1(omega)` exactly.
//!
//! Matrix entries are stored entry-major with structural zeros elided,
//! which keeps diagonal connections of large rank cheap while every
//! operation remains the generic dense formula.

use num_complex::Complex64;
use std::sync::Arc;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::quatlin::SpAlgebraResiduals;
use crate::tol;
use crate::torusforms::{merge_sign, DiffForm, FormBasis, ScalarField, TorusGrid};

/// Normalization constant of the invariant polynomial: `p_1 = c_1 tr(Omega^2)`.
pub const C1_NORMALIZATION: f64 = -0.5;

// ---------------------------------------------------------------------------
// complex scalar fields
// ---------------------------------------------------------------------------

/// Complex scalar field as a pair of real fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub re: ScalarField,
    pub im: ScalarField,
}

impl ComplexField {
    pub fn zeros(grid: TorusGrid) -> Self {
        ComplexField {
            re: ScalarField::zeros(grid),
            im: ScalarField::zeros(grid),
        }
    }

    pub fn from_parts(re: ScalarField, im: ScalarField) -> Self {
        ComplexField { re, im }
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.im.scale_in_place(-1.0);
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        out.re.scale_in_place(-1.0);
        out.im.scale_in_place(-1.0);
        out
    }

    /// Multiply by the imaginary unit: `i (a + b i) = -b + a i`.
    pub fn times_i(&self) -> Self {
        ComplexField {
            re: self.im.clone().tap(|f| f.scale_in_place(-1.0)),
            im: self.re.clone(),
        }
    }

    pub fn deriv(&self, axis: usize) -> Self {
        ComplexField {
            re: self.re.deriv(axis),
            im: self.im.deriv(axis),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        // Entrywise max of |re| + |im| bounds the complex modulus within
        // a factor sqrt(2); fine for residual thresholds.
        self.re.sup_norm().max(self.im.sup_norm())
    }

    pub fn axpy(&mut self, s: f64, other: &ComplexField) -> Result<()> {
        self.re.axpy(s, &other.re)?;
        self.im.axpy(s, &other.im)
    }

    pub fn is_exactly_zero(&self) -> bool {
        self.re.data().iter().all(|&v| v == 0.0) && self.im.data().iter().all(|&v| v == 0.0)
    }

    /// `self += sign * a * b` (pointwise complex product).
    pub fn mac(&mut self, sign: f64, a: &ComplexField, b: &ComplexField) {
        let (ar, ai) = (a.re.data(), a.im.data());
        let (br, bi) = (b.re.data(), b.im.data());
        let re = self.re.data_mut();
        for i in 0..re.len() {
            re[i] += sign * (ar[i] * br[i] - ai[i] * bi[i]);
        }
        let im = self.im.data_mut();
        for i in 0..im.len() {
            im[i] += sign * (ar[i] * bi[i] + ai[i] * br[i]);
        }
    }
}

trait Tap: Sized {
    fn tap(self, f: impl FnOnce(&mut Self)) -> Self;
}
impl<T> Tap for T {
    fn tap(mut self, f: impl FnOnce(&mut Self)) -> Self {
        f(&mut self);
        self
    }
}

// ---------------------------------------------------------------------------
// matrix fields
// ---------------------------------------------------------------------------

/// Grid of `dim x dim` complex matrices, entry-major, with structural zeros
/// stored as `None`.
#[derive(Debug, Clone)]
pub struct MatrixField {
    grid: TorusGrid,
    dim: usize,
    entries: Vec<Option<ComplexField>>,
}

impl MatrixField {
    pub fn zeros(grid: TorusGrid, dim: usize) -> Self {
        MatrixField {
            grid,
            dim,
            entries: (0..dim * dim).map(|_| None).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, r: usize, c: usize) -> Option<&ComplexField> {
        self.entries[r * self.dim + c].as_ref()
    }

    pub fn set_entry(&mut self, r: usize, c: usize, v: ComplexField) {
        self.entries[r * self.dim + c] = Some(v);
    }

    fn entry_mut(&mut self, r: usize, c: usize) -> &mut ComplexField {
        let grid = self.grid;
        self.entries[r * self.dim + c].get_or_insert_with(|| ComplexField::zeros(grid))
    }

    pub fn sup_norm(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .map(|e| e.sup_norm())
            .fold(0.0, f64::max)
    }

    pub fn axpy(&mut self, s: f64, other: &MatrixField) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::LengthMismatch(format!(
                "matrix dims {} vs {}",
                self.dim, other.dim
            )));
        }
        for r in 0..self.dim {
            for c in 0..self.dim {
                if let Some(e) = other.entry(r, c) {
                    self.entry_mut(r, c).axpy(s, e)?;
                }
            }
        }
        Ok(())
    }

    /// Entrywise spectral derivative along one axis, scaled.
    fn accumulate_deriv(&mut self, sign: f64, source: &MatrixField, axis: usize) {
        for r in 0..self.dim {
            for c in 0..self.dim {
                if let Some(e) = source.entry(r, c) {
                    let d = e.deriv(axis);
                    self.entry_mut(r, c).axpy(sign, &d).expect("same grid");
                }
            }
        }
    }

    /// `self += sign * (A B - B A)` pointwise.
    fn accumulate_commutator(&mut self, sign: f64, a: &MatrixField, b: &MatrixField) {
        for r in 0..self.dim {
            for c in 0..self.dim {
                for t in 0..self.dim {
                    if let (Some(x), Some(y)) = (a.entry(r, t), b.entry(t, c)) {
                        self.entry_mut(r, c).mac(sign, x, y);
                    }
                    if let (Some(x), Some(y)) = (b.entry(r, t), a.entry(t, c)) {
                        self.entry_mut(r, c).mac(-sign, x, y);
                    }
                }
            }
        }
    }

    /// `self += sign * A B` pointwise.
    fn accumulate_product(&mut self, sign: f64, a: &MatrixField, b: &MatrixField) {
        for r in 0..self.dim {
            for c in 0..self.dim {
                for t in 0..self.dim {
                    if let (Some(x), Some(y)) = (a.entry(r, t), b.entry(t, c)) {
                        self.entry_mut(r, c).mac(sign, x, y);
                    }
                }
            }
        }
    }

    /// Accumulate `sign * trace(A B)` into a complex pair of fields.
    fn accumulate_trace_product(
        re: &mut ScalarField,
        im: &mut ScalarField,
        sign: f64,
        a: &MatrixField,
        b: &MatrixField,
    ) {
        for r in 0..a.dim {
            for t in 0..a.dim {
                if let (Some(x), Some(y)) = (a.entry(r, t), b.entry(t, r)) {
                    let (xr, xi) = (x.re.data(), x.im.data());
                    let (yr, yi) = (y.re.data(), y.im.data());
                    let rd = re.data_mut();
                    for idx in 0..rd.len() {
                        rd[idx] += sign * (xr[idx] * yr[idx] - xi[idx] * yi[idx]);
                    }
                    let id = im.data_mut();
                    for idx in 0..id.len() {
                        id[idx] += sign * (xr[idx] * yi[idx] + xi[idx] * yr[idx]);
                    }
                }
            }
        }
    }

    /// Drop entries that are identically zero (keeps diagonal structures
    /// sparse after generic operations).
    fn prune_zeros(&mut self) {
        for slot in &mut self.entries {
            if slot.as_ref().is_some_and(|e| e.is_exactly_zero()) {
                *slot = None;
            }
        }
    }

    /// sp(k) membership residuals, maximized over the grid:
    /// skew-Hermitian defect and the block relations of `X^t J + J X = 0`
    /// (top-right and bottom-left blocks symmetric, bottom-right = -A^t).
    pub fn sp_residuals(&self) -> SpAlgebraResiduals {
        let k = self.dim / 2;
        let zero = ComplexField::zeros(self.grid);
        let get = |r: usize, c: usize| -> &ComplexField { self.entry(r, c).unwrap_or(&zero) };
        let mut herm = 0.0f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                // (X* + X)[r][c] = conj(X[c][r]) + X[r][c]
                let a = get(c, r);
                let b = get(r, c);
                let mut d = a.conj();
                d.axpy(1.0, b).expect("same grid");
                herm = herm.max(d.sup_norm());
            }
        }
        let mut jrel = 0.0f64;
        // X^t J + J X = [[X21 - X21^t, X22 + X11^t], [-X11 - X22^t, X12 - X12^t]]
        for r in 0..k {
            for c in 0..k {
                let mut d = get(k + r, c).clone();
                d.axpy(-1.0, get(k + c, r)).expect("same grid");
                jrel = jrel.max(d.sup_norm());
                let mut d = get(r, k + c).clone();
                d.axpy(-1.0, get(c, k + r)).expect("same grid");
                jrel = jrel.max(d.sup_norm());
                let mut d = get(k + r, k + c).clone();
                d.axpy(1.0, get(c, r)).expect("same grid");
                jrel = jrel.max(d.sup_norm());
            }
        }
        SpAlgebraResiduals { herm, jrel }
    }
}

// ---------------------------------------------------------------------------
// matrix-valued forms
// ---------------------------------------------------------------------------

/// sp(k)-valued 1-form: one matrix field per axis.
#[derive(Debug, Clone)]
pub struct MatrixOneForm {
    grid: TorusGrid,
    k: usize,
    comps: Vec<MatrixField>,
}

/// sp(k)-valued 2-form: one matrix field per ascending axis pair
/// (lexicographic order).
#[derive(Debug, Clone)]
pub struct MatrixTwoForm {
    grid: TorusGrid,
    k: usize,
    comps: Vec<MatrixField>,
}

impl MatrixOneForm {
    pub fn zeros(grid: TorusGrid, k: usize) -> Result<Self> {
        Self::zeros_with_budget(grid, k, &Budget::from_env())
    }

    pub fn zeros_with_budget(grid: TorusGrid, k: usize, budget: &Budget) -> Result<Self> {
        if k == 0 {
            return Err(Error::Validation("rank k must be >= 1".into()));
        }
        budget.check_rank(k)?;
        Ok(MatrixOneForm {
            grid,
            k,
            comps: (0..grid.m()).map(|_| MatrixField::zeros(grid, 2 * k)).collect(),
        })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn comps(&self) -> &[MatrixField] {
        &self.comps
    }

    pub fn comp(&self, axis: usize) -> &MatrixField {
        &self.comps[axis]
    }

    pub fn comp_mut(&mut self, axis: usize) -> &mut MatrixField {
        &mut self.comps[axis]
    }

    pub fn sup_norm(&self) -> f64 {
        self.comps.iter().map(|c| c.sup_norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &MatrixOneForm) -> Result<MatrixOneForm> {
        self.grid.ensure_same(&other.grid)?;
        if self.k != other.k {
            return Err(Error::LengthMismatch(format!("ranks {} vs {}", self.k, other.k)));
        }
        let mut out = self.clone();
        for (a, b) in out.comps.iter_mut().zip(&other.comps) {
            a.axpy(1.0, b)?;
        }
        Ok(out)
    }

    /// Largest sp(k) membership residual over all axis components.
    pub fn sp_residuals(&self) -> SpAlgebraResiduals {
        self.comps.iter().map(|c| c.sp_residuals()).fold(
            SpAlgebraResiduals { herm: 0.0, jrel: 0.0 },
            |acc, r| SpAlgebraResiduals {
                herm: acc.herm.max(r.herm),
                jrel: acc.jrel.max(r.jrel),
            },
        )
    }
}

impl MatrixTwoForm {
    pub fn zeros(grid: TorusGrid, k: usize) -> Self {
        let basis = FormBasis::get(grid.m(), 2);
        MatrixTwoForm {
            grid,
            k,
            comps: (0..basis.len()).map(|_| MatrixField::zeros(grid, 2 * k)).collect(),
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn basis(&self) -> Arc<FormBasis> {
        FormBasis::get(self.grid.m(), 2)
    }

    pub fn comps(&self) -> &[MatrixField] {
        &self.comps
    }

    pub fn sup_norm(&self) -> f64 {
        self.comps.iter().map(|c| c.sup_norm()).fold(0.0, f64::max)
    }

    pub fn sp_residuals(&self) -> SpAlgebraResiduals {
        self.comps.iter().map(|c| c.sp_residuals()).fold(
            SpAlgebraResiduals { herm: 0.0, jrel: 0.0 },
            |acc, r| SpAlgebraResiduals {
                herm: acc.herm.max(r.herm),
                jrel: acc.jrel.max(r.jrel),
            },
        )
    }
}

// ---------------------------------------------------------------------------
// constructions
// ---------------------------------------------------------------------------

/// The sp(1) connection `[[i alpha, beta + i gamma], [-beta + i gamma, -i alpha]]`
/// built from three real scalar 1-forms.
pub fn sp1_connection(alpha: &DiffForm, beta: &DiffForm, gamma: &DiffForm) -> Result<MatrixOneForm> {
    let grid = alpha.grid();
    grid.ensure_same(&beta.grid())?;
    grid.ensure_same(&gamma.grid())?;
    for f in [alpha, beta, gamma] {
        if f.degree() != 1 {
            return Err(Error::WrongDegree {
                expected: 1,
                got: f.degree(),
            });
        }
    }
    let mut out = MatrixOneForm::zeros(grid, 1)?;
    for a in 0..grid.m() {
        let al = &alpha.comps()[a];
        let be = &beta.comps()[a];
        let ga = &gamma.comps()[a];
        let comp = out.comp_mut(a);
        comp.set_entry(0, 0, ComplexField::from_parts(ScalarField::zeros(grid), al.clone()));
        comp.set_entry(0, 1, ComplexField::from_parts(be.clone(), ga.clone()));
        comp.set_entry(
            1,
            0,
            ComplexField::from_parts(be.clone().tap(|f| f.scale_in_place(-1.0)), ga.clone()),
        );
        comp.set_entry(
            1,
            1,
            ComplexField::from_parts(
                ScalarField::zeros(grid),
                al.clone().tap(|f| f.scale_in_place(-1.0)),
            ),
        );
    }
    Ok(out)
}

/// Diagonal rank-q connection `diag(i w_1..i w_q, -i w_1..-i w_q)` of a
/// tuple of scalar 1-forms.
pub fn diag_connection(forms: &[DiffForm]) -> Result<MatrixOneForm> {
    diag_connection_with_budget(forms, &Budget::from_env())
}

pub fn diag_connection_with_budget(forms: &[DiffForm], budget: &Budget) -> Result<MatrixOneForm> {
    let q = forms.len();
    if q == 0 {
        return Err(Error::Validation("empty tuple".into()));
    }
    let grid = forms[0].grid();
    for f in forms {
        grid.ensure_same(&f.grid())?;
        if f.degree() != 1 {
            return Err(Error::WrongDegree {
                expected: 1,
                got: f.degree(),
            });
        }
    }
    let mut out = MatrixOneForm::zeros_with_budget(grid, q, budget)?;
    for a in 0..grid.m() {
        let comp = out.comp_mut(a);
        for (j, f) in forms.iter().enumerate() {
            let w = &f.comps()[a];
            comp.set_entry(
                j,
                j,
                ComplexField::from_parts(ScalarField::zeros(grid), w.clone()),
            );
            comp.set_entry(
                q + j,
                q + j,
                ComplexField::from_parts(
                    ScalarField::zeros(grid),
                    w.clone().tap(|f| f.scale_in_place(-1.0)),
                ),
            );
        }
    }
    Ok(out)
}

/// Quaternionic direct sum of connections: the A and B blocks concatenate,
/// then reassemble in the `[A, B; -conj(B), -A^t]` convention (the naive
/// block diagonal of the complex matrices would break the J-relation).
pub fn direct_sum(x: &MatrixOneForm, y: &MatrixOneForm) -> Result<MatrixOneForm> {
    x.grid.ensure_same(&y.grid)?;
    let (k1, k2) = (x.k, y.k);
    let k = k1 + k2;
    let mut out = MatrixOneForm::zeros_with_budget(
        x.grid,
        k,
        &Budget {
            max_rank: k.max(Budget::from_env().max_rank),
            ..Budget::from_env()
        },
    )?;
    let remap = |idx: usize, rank: usize, offset: usize| -> usize {
        let block = idx / rank;
        let inner = idx % rank;
        block * k + offset + inner
    };
    for a in 0..x.grid.m() {
        let comp = out.comp_mut(a);
        for (src, rank, offset) in [(&x.comps[a], k1, 0usize), (&y.comps[a], k2, k1)] {
            for r in 0..2 * rank {
                for c in 0..2 * rank {
                    if let Some(e) = src.entry(r, c) {
                        comp.set_entry(remap(r, rank, offset), remap(c, rank, offset), e.clone());
                    }
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// curvature and invariant forms
// ---------------------------------------------------------------------------

/// Exterior derivative of a matrix 1-form (no bracket term).
pub fn matrix_d(omega: &MatrixOneForm) -> MatrixTwoForm {
    let m = omega.grid.m();
    let basis = FormBasis::get(m, 2);
    let mut out = MatrixTwoForm::zeros(omega.grid, omega.k);
    for (ci, &mask) in basis.masks.iter().enumerate() {
        let axes: Vec<usize> = (0..m).filter(|&a| mask & (1 << a) != 0).collect();
        let (a, b) = (axes[0], axes[1]);
        out.comps[ci].accumulate_deriv(1.0, &omega.comps[b], a);
        out.comps[ci].accumulate_deriv(-1.0, &omega.comps[a], b);
        out.comps[ci].prune_zeros();
    }
    out
}

/// Matrix wedge of two matrix 1-forms: `(u ^ v)_{ab} = u_a v_b - u_b v_a`.
pub fn matrix_wedge_11(u: &MatrixOneForm, v: &MatrixOneForm) -> Result<MatrixTwoForm> {
    u.grid.ensure_same(&v.grid)?;
    if u.k != v.k {
        return Err(Error::LengthMismatch(format!("ranks {} vs {}", u.k, v.k)));
    }
    let m = u.grid.m();
    let basis = FormBasis::get(m, 2);
    let mut out = MatrixTwoForm::zeros(u.grid, u.k);
    for (ci, &mask) in basis.masks.iter().enumerate() {
        let axes: Vec<usize> = (0..m).filter(|&a| mask & (1 << a) != 0).collect();
        let (a, b) = (axes[0], axes[1]);
        out.comps[ci].accumulate_product(1.0, &u.comps[a], &v.comps[b]);
        out.comps[ci].accumulate_product(-1.0, &u.comps[b], &v.comps[a]);
        out.comps[ci].prune_zeros();
    }
    Ok(out)
}

/// Curvature `Omega = d omega + omega ^ omega` (the quadratic term is the
/// pointwise commutator per axis pair).
pub fn curvature(omega: &MatrixOneForm) -> MatrixTwoForm {
    let m = omega.grid.m();
    let basis = FormBasis::get(m, 2);
    let mut out = matrix_d(omega);
    for (ci, &mask) in basis.masks.iter().enumerate() {
        let axes: Vec<usize> = (0..m).filter(|&a| mask & (1 << a) != 0).collect();
        let (a, b) = (axes[0], axes[1]);
        out.comps[ci].accumulate_commutator(1.0, &omega.comps[a], &omega.comps[b]);
        out.comps[ci].prune_zeros();
    }
    out
}

/// Real trace-wedge of two matrix 2-forms: the degree-4 form
/// `trace(P ^ Q)` together with the sup norm of its imaginary residual.
pub fn trace_wedge_22(p: &MatrixTwoForm, q: &MatrixTwoForm) -> Result<(DiffForm, f64)> {
    p.grid.ensure_same(&q.grid)?;
    let m = p.grid.m();
    let basis2 = FormBasis::get(m, 2);
    let basis4 = FormBasis::get(m, 4);
    let grid = p.grid;
    let mut re_comps: Vec<ScalarField> =
        (0..basis4.len()).map(|_| ScalarField::zeros(grid)).collect();
    let mut im_comps: Vec<ScalarField> =
        (0..basis4.len()).map(|_| ScalarField::zeros(grid)).collect();
    for (ci, &mi) in basis2.masks.iter().enumerate() {
        for (cj, &mj) in basis2.masks.iter().enumerate() {
            if mi & mj != 0 {
                continue;
            }
            let sign = merge_sign(mi, mj);
            let target = basis4.pos[(mi | mj) as usize];
            MatrixField::accumulate_trace_product(
                &mut re_comps[target],
                &mut im_comps[target],
                sign,
                &p.comps[ci],
                &q.comps[cj],
            );
        }
    }
    let imag_sup = im_comps.iter().map(|c| c.sup_norm()).fold(0.0, f64::max);
    Ok((DiffForm::from_components(grid, 4, re_comps)?, imag_sup))
}

/// Real trace-wedge of a matrix 1-form and a matrix 2-form (degree 3).
pub fn trace_wedge_12(a: &MatrixOneForm, c: &MatrixTwoForm) -> Result<(DiffForm, f64)> {
    a.grid.ensure_same(&c.grid)?;
    let m = a.grid.m();
    let basis2 = FormBasis::get(m, 2);
    let basis3 = FormBasis::get(m, 3);
    let grid = a.grid;
    let mut re_comps: Vec<ScalarField> =
        (0..basis3.len()).map(|_| ScalarField::zeros(grid)).collect();
    let mut im_comps: Vec<ScalarField> =
        (0..basis3.len()).map(|_| ScalarField::zeros(grid)).collect();
    for axis in 0..m {
        let mi = 1u32 << axis;
        for (cj, &mj) in basis2.masks.iter().enumerate() {
            if mi & mj != 0 {
                continue;
            }
            let sign = merge_sign(mi, mj);
            let target = basis3.pos[(mi | mj) as usize];
            MatrixField::accumulate_trace_product(
                &mut re_comps[target],
                &mut im_comps[target],
                sign,
                &a.comps[axis],
                &c.comps[cj],
            );
        }
    }
    let imag_sup = im_comps.iter().map(|c| c.sup_norm()).fold(0.0, f64::max);
    Ok((DiffForm::from_components(grid, 3, re_comps)?, imag_sup))
}

/// First symplectic Pontrjagin form `p_1 = c_1 trace(Omega ^ Omega)` with a
/// configurable constant (used by the verification suite's fault-injection
/// hook); [`pontryagin1`] pins `c_1 = -1/2`.
pub fn pontryagin1_with_c1(omega: &MatrixOneForm, c1: f64) -> Result<DiffForm> {
    if omega.grid.m() < 4 {
        return Err(Error::BadDegree {
            degree: 4,
            m: omega.grid.m(),
        });
    }
    let om = curvature(omega);
    let (tr, imag_sup) = trace_wedge_22(&om, &om)?;
    let scale = tr.sup_norm().max(1.0);
    if imag_sup > tol::P1_DIAGONAL * scale {
        return Err(Error::Validation(format!(
            "trace(Omega^2) has imaginary residual {imag_sup:.3e}; connection is not sp(k)-valued"
        )));
    }
    Ok(tr.scaled(c1))
}

/// First symplectic Pontrjagin form with the pinned normalization.
pub fn pontryagin1(omega: &MatrixOneForm) -> Result<DiffForm> {
    pontryagin1_with_c1(omega, C1_NORMALIZATION)
}

/// Transgression form `pbar_1(omega, omega + alpha)`: a 3-form with
/// `d pbar_1 = p_1(omega + alpha) - p_1(omega)`.  The t-integral of
/// `trace(alpha ^ Omega_t)` is evaluated in closed form: `Omega_t` is
/// quadratic in t with coefficients `C_0 = curvature(omega)`,
/// `C_1 = d alpha + omega^alpha + alpha^omega`, `C_2 = alpha^alpha`,
/// so the weights are 1, 1/2, 1/3.
pub fn secondary_form(omega: &MatrixOneForm, alpha: &MatrixOneForm) -> Result<DiffForm> {
    omega.grid.ensure_same(&alpha.grid)?;
    if omega.k != alpha.k {
        return Err(Error::LengthMismatch(format!(
            "ranks {} vs {}",
            omega.k, alpha.k
        )));
    }
    let c0 = curvature(omega);
    let mut c1 = matrix_d(alpha);
    for (ci, comp) in matrix_wedge_11(omega, alpha)?.comps.iter().enumerate() {
        c1.comps[ci].axpy(1.0, comp)?;
    }
    for (ci, comp) in matrix_wedge_11(alpha, omega)?.comps.iter().enumerate() {
        c1.comps[ci].axpy(1.0, comp)?;
    }
    let c2 = matrix_wedge_11(alpha, alpha)?;

    let (t0, i0) = trace_wedge_12(alpha, &c0)?;
    let (t1, i1) = trace_wedge_12(alpha, &c1)?;
    let (t2, i2) = trace_wedge_12(alpha, &c2)?;
    let mut out = t0;
    out.axpy(0.5, &t1)?;
    out.axpy(1.0 / 3.0, &t2)?;
    let scale = out.sup_norm().max(1.0);
    let imag_sup = i0.max(i1).max(i2);
    if imag_sup > tol::TRANSGRESSION * scale {
        return Err(Error::Validation(format!(
            "secondary form has imaginary residual {imag_sup:.3e}"
        )));
    }
    Ok(out.scaled(2.0 * C1_NORMALIZATION))
}

// ---------------------------------------------------------------------------
// diagnostic checks
// ---------------------------------------------------------------------------

/// Report of [`sp1_formula_check`]: sup-norm discrepancies between
/// `p_1(sp1_connection(alpha, beta, gamma))` and
/// `c ((d alpha)^2 + (d beta)^2 + (d gamma)^2)` for candidate constants,
/// plus whether the bracket term `omega ^ omega` vanished and whether the
/// best discrepancy is an exact form.
#[derive(Debug, Clone)]
pub struct Sp1FormulaReport {
    pub discrepancies: Vec<(f64, f64)>,
    pub best_c: f64,
    pub best_discrepancy: f64,
    pub omega_wedge_omega_sup: f64,
    pub best_discrepancy_is_exact: bool,
}

/// Compare the computed `p_1` of an sp(1) connection against the claimed
/// sum-of-squares formula for `c` in `{1, -1, 1/2, -1/2}`.
pub fn sp1_formula_check(
    alpha: &DiffForm,
    beta: &DiffForm,
    gamma: &DiffForm,
) -> Result<Sp1FormulaReport> {
    let omega = sp1_connection(alpha, beta, gamma)?;
    let p1 = pontryagin1(&omega)?;
    let bracket = matrix_wedge_11(&omega, &omega)?;

    let mut sos = DiffForm::zeros(alpha.grid(), 4);
    for f in [alpha, beta, gamma] {
        let df = f.exterior_d();
        sos.axpy(1.0, &df.wedge(&df)?)?;
    }

    let mut discrepancies = Vec::new();
    let mut best = (f64::INFINITY, 0.0);
    let mut best_diff: Option<DiffForm> = None;
    for c in [1.0, -1.0, 0.5, -0.5] {
        let diff = p1.sub(&sos.scaled(c))?;
        let sup = diff.sup_norm();
        discrepancies.push((c, sup));
        if sup < best.0 {
            best = (sup, c);
            best_diff = Some(diff);
        }
    }
    let best_diff = best_diff.expect("candidate list is nonempty");
    Ok(Sp1FormulaReport {
        discrepancies,
        best_c: best.1,
        best_discrepancy: best.0,
        omega_wedge_omega_sup: bracket.sup_norm(),
        best_discrepancy_is_exact: best_diff.is_exact(tol::EXACTNESS).exact,
    })
}

/// Random sp(k)-valued connection with band-limited entries: skew-Hermitian
/// A block and symmetric B block per axis, assembled so membership holds
/// exactly.
pub fn random_sp_connection<R: rand::Rng>(
    grid: TorusGrid,
    k: usize,
    h: usize,
    harmonics: usize,
    amplitude: f64,
    rng: &mut R,
) -> Result<MatrixOneForm> {
    use crate::torusforms::trig::random_form;
    let mut out = MatrixOneForm::zeros(grid, k)?;
    let rand_field = |rng: &mut R| -> Result<ScalarField> {
        let (_, f) = random_form(grid, 0, h, harmonics, amplitude, rng)?;
        Ok(f.comps()[0].clone())
    };
    for a in 0..grid.m() {
        // A block: strictly upper entries free, diagonal purely imaginary.
        let mut a_re = vec![vec![None::<ScalarField>; k]; k];
        let mut a_im = vec![vec![None::<ScalarField>; k]; k];
        for r in 0..k {
            for c in r..k {
                if r == c {
                    a_re[r][c] = None;
                    a_im[r][c] = Some(rand_field(rng)?);
                } else {
                    a_re[r][c] = Some(rand_field(rng)?);
                    a_im[r][c] = Some(rand_field(rng)?);
                }
            }
        }
        // B block: symmetric, free complex entries on r <= c.
        let mut b_re = vec![vec![None::<ScalarField>; k]; k];
        let mut b_im = vec![vec![None::<ScalarField>; k]; k];
        for r in 0..k {
            for c in r..k {
                b_re[r][c] = Some(rand_field(rng)?);
                b_im[r][c] = Some(rand_field(rng)?);
            }
        }
        let comp = out.comp_mut(a);
        let zero = || ScalarField::zeros(grid);
        for r in 0..k {
            for c in 0..k {
                // A entry (r, c): skew-Hermitian closure of the upper part.
                let (re, im) = if r <= c {
                    (
                        a_re[r][c].clone().unwrap_or_else(zero),
                        a_im[r][c].clone().unwrap_or_else(zero),
                    )
                } else {
                    (
                        a_re[c][r].clone().unwrap_or_else(zero).tap(|f| f.scale_in_place(-1.0)),
                        a_im[c][r].clone().unwrap_or_else(zero),
                    )
                };
                let a_entry = ComplexField::from_parts(re, im);
                let (rr, cc) = (r.min(c), r.max(c));
                let b_entry = ComplexField::from_parts(
                    b_re[rr][cc].clone().unwrap_or_else(zero),
                    b_im[rr][cc].clone().unwrap_or_else(zero),
                );
                comp.set_entry(r, c, a_entry.clone());
                comp.set_entry(r, k + c, b_entry.clone());
                comp.set_entry(k + r, c, b_entry.conj().neg());
                // (-A^t)[r][c] = -A[c][r] = conj(A[r][c]) by skew-Hermiticity.
                comp.set_entry(k + r, k + c, a_entry.conj());
            }
        }
    }
    debug_assert!(out.sp_residuals().max() == 0.0);
    Ok(out)
}

/// Evaluate a matrix field at one grid node as a dense complex matrix
/// (cross-validation against the small-matrix checks in `quatlin`).
pub fn matrix_at(field: &MatrixField, idx: usize) -> crate::quatlin::ComplexMatrix {
    let dim = field.dim();
    crate::quatlin::ComplexMatrix::from_fn(dim, dim, |r, c| match field.entry(r, c) {
        Some(e) => Complex64::new(e.re.data()[idx], e.im.data()[idx]),
        None => Complex64::new(0.0, 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quatlin::sp_algebra_check;
    use crate::torusforms::trig::random_form;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn grid4() -> TorusGrid {
        TorusGrid::new(4, 8).unwrap()
    }

    fn random_1form(grid: TorusGrid, seed: u64) -> DiffForm {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_form(grid, 1, 1, 2, 1.0, &mut rng).unwrap().1
    }

    #[test]
    fn pointwise_values_pass_the_small_matrix_check() {
        let g = grid4();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let omega = random_sp_connection(g, 2, 1, 2, 1.0, &mut rng).unwrap();
        assert!(omega.sp_residuals().max() < tol::SP_MEMBERSHIP);
        for axis in 0..g.m() {
            for idx in [0usize, 17, 1000] {
                let x = matrix_at(omega.comp(axis), idx);
                assert!(sp_algebra_check(&x).unwrap().max() < tol::SP_MEMBERSHIP);
            }
        }
    }

    #[test]
    fn curvature_values_stay_in_sp() {
        let g = grid4();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let omega = random_sp_connection(g, 1, 1, 2, 1.0, &mut rng).unwrap();
        let om = curvature(&omega);
        let scale = om.sup_norm().max(1.0);
        assert!(om.sp_residuals().max() < tol::SP_MEMBERSHIP * scale);
    }

    #[test]
    fn curvature_of_abelian_diagonal_is_diagonal_derivative() {
        // omega = diag(i a, -i a) has Omega = diag(i da, -i da).
        let g = grid4();
        let a = random_1form(g, 22);
        let omega = diag_connection(std::slice::from_ref(&a)).unwrap();
        let om = curvature(&omega);
        let da = a.exterior_d();
        let basis = om.basis();
        for (ci, _) in basis.masks.iter().enumerate() {
            let f = &om.comps()[ci];
            // Off-diagonal entries absent; diagonal matches i (da).
            for r in 0..2 {
                for c in 0..2 {
                    if r != c {
                        assert!(f.entry(r, c).is_none());
                    }
                }
            }
            let d = f.entry(0, 0).unwrap();
            assert!(d.re.sup_norm() < 1e-12);
            let diff: f64 = d
                .im
                .data()
                .iter()
                .zip(da.comp(ci).data())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-10);
        }
    }

    #[test]
    fn curvature_commutator_matches_pointwise_matrices() {
        let g = TorusGrid::new(4, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let omega = random_sp_connection(g, 1, 1, 2, 1.0, &mut rng).unwrap();
        let om = curvature(&omega);
        let d_om = matrix_d(&omega);
        let basis = om.basis();
        // Omega - d omega at a node equals the commutator of the pointwise
        // matrices.
        for idx in [3usize, 77, 501] {
            for (ci, &mask) in basis.masks.iter().enumerate() {
                let axes: Vec<usize> = (0..4).filter(|&a| mask & (1 << a) != 0).collect();
                let wa = matrix_at(omega.comp(axes[0]), idx);
                let wb = matrix_at(omega.comp(axes[1]), idx);
                let expect = &wa * &wb - &wb * &wa;
                let got = matrix_at(&om.comps()[ci], idx) - matrix_at(&d_om.comps()[ci], idx);
                let diff = (got - expect).iter().map(|z| z.norm()).fold(0.0, f64::max);
                assert!(diff < 1e-12);
            }
        }
    }

    #[test]
    fn p1_of_single_entry_diagonal_matches_analytic_witness() {
        // omega_1 = sin(2 pi x_1) dx_2 + sin(2 pi x_3) dx_4 gives
        // p_1 = 8 pi^2 cos(2 pi x_1) cos(2 pi x_3) vol.
        let g = TorusGrid::new(4, 16).unwrap();
        let mut comps = vec![ScalarField::zeros(g); 4];
        comps[1] = ScalarField::from_coords(g, |x| (TAU * x[0]).sin());
        comps[3] = ScalarField::from_coords(g, |x| (TAU * x[2]).sin());
        let w = DiffForm::from_components(g, 1, comps).unwrap();
        let conn = diag_connection(std::slice::from_ref(&w)).unwrap();
        let p1 = pontryagin1(&conn).unwrap();
        let expect = ScalarField::from_coords(g, |x| {
            8.0 * std::f64::consts::PI.powi(2) * (TAU * x[0]).cos() * (TAU * x[2]).cos()
        });
        let diff: f64 = p1
            .comp(0)
            .data()
            .iter()
            .zip(expect.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = expect.sup_norm();
        assert!(diff < tol::P1_DIAGONAL * scale, "diff = {diff:.3e}");
    }

    #[test]
    fn p1_of_diag_connection_is_sum_of_squares() {
        let g = grid4();
        let forms: Vec<DiffForm> = (0..3).map(|s| random_1form(g, 30 + s)).collect();
        let conn = diag_connection(&forms).unwrap();
        let p1 = pontryagin1(&conn).unwrap();
        let mut sos = DiffForm::zeros(g, 4);
        for f in &forms {
            let df = f.exterior_d();
            sos.axpy(1.0, &df.wedge(&df).unwrap()).unwrap();
        }
        let scale = sos.sup_norm().max(1.0);
        assert!(p1.sub(&sos).unwrap().sup_norm() < tol::P1_DIAGONAL * scale);
    }

    #[test]
    fn p1_is_closed_and_additive_under_direct_sum() {
        let g = grid4();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let w1 = random_sp_connection(g, 1, 1, 2, 1.0, &mut rng).unwrap();
        let w2 = random_sp_connection(g, 1, 1, 2, 1.0, &mut rng).unwrap();
        let sum = direct_sum(&w1, &w2).unwrap();
        assert!(sum.sp_residuals().max() < tol::SP_MEMBERSHIP);
        let p_sum = pontryagin1(&sum).unwrap();
        let p_split = pontryagin1(&w1).unwrap().add(&pontryagin1(&w2).unwrap()).unwrap();
        let scale = p_split.sup_norm().max(1.0);
        assert!(
            p_sum.sub(&p_split).unwrap().sup_norm() < tol::ADDITIVITY * scale,
            "additivity residual {}",
            p_sum.sub(&p_split).unwrap().sup_norm()
        );
        assert!(p_sum.exterior_d().sup_norm() < tol::P1_CLOSED * scale);
    }

    #[test]
    fn transgression_identity_holds() {
        let g = grid4();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let omega = random_sp_connection(g, 1, 1, 2, 0.7, &mut rng).unwrap();
        let alpha = random_sp_connection(g, 1, 1, 2, 0.7, &mut rng).unwrap();
        let sec = secondary_form(&omega, &alpha).unwrap();
        let lhs = sec.exterior_d();
        let total = omega.add(&alpha).unwrap();
        let rhs = pontryagin1(&total)
            .unwrap()
            .sub(&pontryagin1(&omega).unwrap())
            .unwrap();
        let scale = rhs.sup_norm().max(1.0);
        assert!(
            lhs.sub(&rhs).unwrap().sup_norm() < tol::TRANSGRESSION * scale,
            "transgression residual {}",
            lhs.sub(&rhs).unwrap().sup_norm()
        );
    }

    #[test]
    fn secondary_form_of_zero_difference_vanishes() {
        let g = grid4();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let omega = random_sp_connection(g, 1, 1, 2, 1.0, &mut rng).unwrap();
        let zero = MatrixOneForm::zeros(g, 1).unwrap();
        let sec = secondary_form(&omega, &zero).unwrap();
        assert_eq!(sec.sup_norm(), 0.0);
    }

    #[test]
    fn abelian_secondary_form_is_sum_alpha_wedge_d_alpha() {
        // For omega = 0 and the diagonal connection of a tuple, the
        // secondary form reduces to sum_j alpha_j ^ d alpha_j with
        // proportionality constant exactly 1 in this normalization.
        let g = grid4();
        let forms: Vec<DiffForm> = (0..2).map(|s| random_1form(g, 40 + s)).collect();
        let alpha = diag_connection(&forms).unwrap();
        let zero = MatrixOneForm::zeros(g, forms.len()).unwrap();
        let sec = secondary_form(&zero, &alpha).unwrap();
        let mut expect = DiffForm::zeros(g, 3);
        for f in &forms {
            expect.axpy(1.0, &f.wedge(&f.exterior_d()).unwrap()).unwrap();
        }
        let scale = expect.sup_norm().max(1.0);
        let resid = sec.sub(&expect).unwrap().sup_norm();
        assert!(resid < 1e-10 * scale, "proportionality broke: {resid:.3e}");
    }

    #[test]
    fn sp1_formula_check_reports_zero_discrepancy_for_pure_alpha() {
        let g = grid4();
        let alpha = random_1form(g, 50);
        let zero = DiffForm::zeros(g, 1);
        let report = sp1_formula_check(&alpha, &zero, &zero).unwrap();
        assert_eq!(report.best_c, 1.0);
        let scale = 1.0f64
            .max(alpha.exterior_d().sup_norm().powi(2));
        assert!(report.best_discrepancy < 1e-9 * scale);
        assert!(report.omega_wedge_omega_sup < 1e-12);
    }

    #[test]
    fn sp1_formula_check_sees_the_bracket_discrepancy() {
        let g = grid4();
        let alpha = random_1form(g, 51);
        let beta = random_1form(g, 52);
        let gamma = random_1form(g, 53);
        let report = sp1_formula_check(&alpha, &beta, &gamma).unwrap();
        // The bracket does not vanish and no constant fits pointwise, but
        // the defect is exact (the claimed formula holds in cohomology).
        assert!(report.omega_wedge_omega_sup > 1e-3);
        assert!(report.best_discrepancy > 1e-3);
        assert!(report.best_discrepancy_is_exact);
    }

    #[test]
    fn budget_caps_rank() {
        let g = grid4();
        let b = Budget {
            max_rank: 2,
            ..Budget::default()
        };
        assert!(MatrixOneForm::zeros_with_budget(g, 3, &b).is_err());
    }
}
