//! Discrete exterior calculus on flat tori `T^m = (R/Z)^m`.
//!
//! Forms live on a uniform periodic grid with `n` nodes per axis; a
//! degree-p form stores one real scalar field per sorted p-tuple of axes,
//! ordered lexicographically.  The exterior derivative is spectral (exact
//! on band-limited data), wedge products are pointwise with shuffle signs,
//! integration is the grid mean (the torus has unit volume), and
//! [`DiffForm::hodge_primitive`] inverts `d` on exact forms per Fourier
//! mode, returning the minimal-norm (coexact-gauge) primitive.
//!
//! Pointwise products are exact at the nodes for any inputs; their spectra
//! are trustworthy only under the band-limit rule `n > 2 h_total`, where
//! `h_total` is the largest harmonic of the product.  All random test data
//! honors that rule.

pub mod spectral;
pub mod trig;

use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::budget::Budget;
use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// grid
// ---------------------------------------------------------------------------

/// Uniform periodic grid on `T^m` with `n` nodes per axis (n even, >= 4).
/// Node `(i_1, ..., i_m)` sits at `x_a = i_a / n`; the flat index has axis 0
/// contiguous: `idx = i_1 + n i_2 + n^2 i_3 + ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    m: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        Self::with_budget(m, n, &Budget::from_env())
    }

    pub fn with_budget(m: usize, n: usize, budget: &Budget) -> Result<Self> {
        if m == 0 {
            return Err(Error::Validation("torus dimension m must be >= 1".into()));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::Validation(format!(
                "grid size n = {n} must be even and >= 4"
            )));
        }
        let points = (n as u128).checked_pow(m as u32).ok_or_else(|| {
            Error::BudgetExceeded(format!("grid {n}^{m} overflows the point counter"))
        })?;
        if points > usize::MAX as u128 {
            return Err(Error::BudgetExceeded(format!("grid {n}^{m} is unaddressable")));
        }
        budget.check_points(points as usize)?;
        Ok(TorusGrid { m, n })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> usize {
        self.n.pow(self.m as u32)
    }

    /// Largest harmonic the grid can carry without aliasing: `n/2 - 1`.
    pub fn max_resolved_harmonic(&self) -> usize {
        self.n / 2 - 1
    }

    /// Check that harmonics up to `h` are resolved (`n > 2h`).
    pub fn check_resolves(&self, h: usize) -> Result<()> {
        if self.n <= 2 * h {
            return Err(Error::UnderResolved {
                n: self.n,
                h,
                need: 2 * h,
            });
        }
        Ok(())
    }

    /// Coordinates of a flat index, each in `[0, 1)`.
    pub fn coords(&self, mut idx: usize) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.m);
        for _ in 0..self.m {
            x.push((idx % self.n) as f64 / self.n as f64);
            idx /= self.n;
        }
        x
    }

    /// Integer node indices of a flat index.
    pub fn node(&self, mut idx: usize) -> Vec<usize> {
        let mut x = Vec::with_capacity(self.m);
        for _ in 0..self.m {
            x.push(idx % self.n);
            idx /= self.n;
        }
        x
    }

    fn describe(&self) -> String {
        format!("T^{} with n = {}", self.m, self.n)
    }

    pub(crate) fn ensure_same(&self, other: &TorusGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(self.describe(), other.describe()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// scalar fields
// ---------------------------------------------------------------------------

/// Real scalar field sampled on a torus grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: TorusGrid) -> Self {
        ScalarField {
            grid,
            data: vec![0.0; grid.points()],
        }
    }

    pub fn from_data(grid: TorusGrid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.points() {
            return Err(Error::LengthMismatch(format!(
                "field data has {} entries, grid has {}",
                data.len(),
                grid.points()
            )));
        }
        Ok(ScalarField { grid, data })
    }

    /// Evaluate a function of the node coordinates at every grid point.
    pub fn from_coords(grid: TorusGrid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let data = (0..grid.points()).map(|i| f(&grid.coords(i))).collect();
        ScalarField { grid, data }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Root mean square over the grid, i.e. the L2 norm for unit volume.
    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|v| v * v).sum::<f64>() / self.data.len() as f64).sqrt()
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &ScalarField) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    /// Pointwise `self += s * f * g`.
    pub fn add_product(&mut self, s: f64, f: &ScalarField, g: &ScalarField) -> Result<()> {
        self.grid.ensure_same(&f.grid)?;
        self.grid.ensure_same(&g.grid)?;
        for i in 0..self.data.len() {
            self.data[i] += s * f.data[i] * g.data[i];
        }
        Ok(())
    }

    /// Spectral derivative along one axis.
    pub fn deriv(&self, axis: usize) -> ScalarField {
        assert!(axis < self.grid.m, "axis {axis} out of range");
        ScalarField {
            grid: self.grid,
            data: spectral::deriv_axis(&self.data, self.grid.n, self.grid.m, axis),
        }
    }
}

// ---------------------------------------------------------------------------
// component bases
// ---------------------------------------------------------------------------

/// Sorted p-subsets of `{0..m-1}` in lexicographic order, as bitmasks, with
/// a reverse lookup table.  Cached per `(m, p)`.
#[derive(Debug)]
pub struct FormBasis {
    pub m: usize,
    pub p: usize,
    /// Component masks in lexicographic order of the sorted index tuples.
    pub masks: Vec<u32>,
    /// Position of each mask (indexed by mask value), or usize::MAX.
    pub pos: Vec<usize>,
}

fn enumerate_subsets(m: usize, p: usize) -> Vec<u32> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(p);
    fn rec(m: usize, p: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<u32>) {
        if current.len() == p {
            out.push(current.iter().fold(0u32, |acc, &i| acc | (1 << i)));
            return;
        }
        for i in start..m {
            current.push(i);
            rec(m, p, i + 1, current, out);
            current.pop();
        }
    }
    rec(m, p, 0, &mut current, &mut out);
    out
}

impl FormBasis {
    pub fn get(m: usize, p: usize) -> Arc<FormBasis> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<FormBasis>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut cache = cache.lock().unwrap();
        cache
            .entry((m, p))
            .or_insert_with(|| {
                let masks = if p > m { Vec::new() } else { enumerate_subsets(m, p) };
                let mut pos = vec![usize::MAX; 1 << m];
                for (i, &mask) in masks.iter().enumerate() {
                    pos[mask as usize] = i;
                }
                Arc::new(FormBasis { m, p, masks, pos })
            })
            .clone()
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Axis tuple of component `c`, ascending.
    pub fn axes(&self, c: usize) -> Vec<usize> {
        let mask = self.masks[c];
        (0..self.m).filter(|&a| mask & (1 << a) != 0).collect()
    }
}

/// Sign of merging two disjoint ascending tuples given as masks: `(-1)^s`
/// where `s` counts pairs `(i in I, j in J)` with `j < i`.
#[inline]
pub fn merge_sign(i_mask: u32, j_mask: u32) -> f64 {
    debug_assert_eq!(i_mask & j_mask, 0);
    let mut inversions = 0u32;
    let mut rest = i_mask;
    while rest != 0 {
        let i = rest.trailing_zeros();
        inversions += (j_mask & ((1 << i) - 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign of inserting axis `a` in front of the ascending tuple `I`:
/// `(-1)^{#(elements of I below a)}`.
#[inline]
pub fn insert_sign(a: usize, i_mask: u32) -> f64 {
    if (i_mask & ((1 << a) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

// ---------------------------------------------------------------------------
// differential forms
// ---------------------------------------------------------------------------

/// Real differential p-form on a torus grid.  Components follow the
/// lexicographic order of [`FormBasis`].  Degrees above `m` are legal and
/// identically zero (no components), which lets `d` of a top form exist.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffForm {
    grid: TorusGrid,
    degree: usize,
    comps: Vec<ScalarField>,
}

/// Result of the exactness test: sup norms of `d sigma` and of the harmonic
/// part, and the verdict at the supplied tolerance.
#[derive(Debug, Clone, Copy)]
pub struct ExactnessReport {
    pub d_residual: f64,
    pub harmonic_residual: f64,
    pub tol: f64,
    pub exact: bool,
}

impl DiffForm {
    pub fn zeros(grid: TorusGrid, degree: usize) -> Self {
        let basis = FormBasis::get(grid.m(), degree);
        DiffForm {
            grid,
            degree,
            comps: (0..basis.len()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_components(grid: TorusGrid, degree: usize, comps: Vec<ScalarField>) -> Result<Self> {
        let basis = FormBasis::get(grid.m(), degree);
        if comps.len() != basis.len() {
            return Err(Error::LengthMismatch(format!(
                "degree-{degree} form on T^{} needs {} components, got {}",
                grid.m(),
                basis.len(),
                comps.len()
            )));
        }
        for c in &comps {
            grid.ensure_same(&c.grid)?;
        }
        Ok(DiffForm { grid, degree, comps })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis(&self) -> Arc<FormBasis> {
        FormBasis::get(self.grid.m(), self.degree)
    }

    pub fn comps(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [ScalarField] {
        &mut self.comps
    }

    pub fn comp(&self, c: usize) -> &ScalarField {
        &self.comps[c]
    }

    /// Component for an ascending axis tuple, if the degree matches.
    pub fn comp_by_axes(&self, axes: &[usize]) -> Result<&ScalarField> {
        if axes.len() != self.degree {
            return Err(Error::WrongDegree {
                expected: self.degree,
                got: axes.len(),
            });
        }
        let mask = axes.iter().fold(0u32, |acc, &a| acc | (1 << a));
        let basis = self.basis();
        let pos = basis.pos[mask as usize];
        if pos == usize::MAX {
            return Err(Error::Validation(format!("axes {axes:?} are not ascending and distinct")));
        }
        Ok(&self.comps[pos])
    }

    pub fn sup_norm(&self) -> f64 {
        self.comps.iter().map(|c| c.sup_norm()).fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        (self.comps.iter().map(|c| c.l2_norm().powi(2)).sum::<f64>()).sqrt()
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for c in &mut self.comps {
            c.scale_in_place(s);
        }
    }

    pub fn scaled(&self, s: f64) -> DiffForm {
        let mut out = self.clone();
        out.scale_in_place(s);
        out
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &DiffForm) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        if self.degree != other.degree {
            return Err(Error::WrongDegree {
                expected: self.degree,
                got: other.degree,
            });
        }
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            a.axpy(s, b)?;
        }
        Ok(())
    }

    pub fn add(&self, other: &DiffForm) -> Result<DiffForm> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &DiffForm) -> Result<DiffForm> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Spectral exterior derivative.
    pub fn exterior_d(&self) -> DiffForm {
        let m = self.grid.m();
        let in_basis = self.basis();
        let out_basis = FormBasis::get(m, self.degree + 1);
        let mut out = DiffForm::zeros(self.grid, self.degree + 1);
        for (ci, &mask) in in_basis.masks.iter().enumerate() {
            for a in 0..m {
                if mask & (1 << a) != 0 {
                    continue;
                }
                let sign = insert_sign(a, mask);
                let target = out_basis.pos[(mask | (1 << a)) as usize];
                let d = self.comps[ci].deriv(a);
                out.comps[target].axpy(sign, &d).expect("same grid");
            }
        }
        out
    }

    /// Adjoint of [`DiffForm::exterior_d`] in the grid inner product
    /// (the spectral codifferential up to sign conventions).
    pub fn d_adjoint(&self) -> DiffForm {
        let m = self.grid.m();
        if self.degree == 0 {
            return DiffForm {
                grid: self.grid,
                degree: 0,
                comps: vec![ScalarField::zeros(self.grid)],
            };
        }
        let in_basis = self.basis();
        let out_basis = FormBasis::get(m, self.degree - 1);
        let mut out = DiffForm::zeros(self.grid, self.degree - 1);
        for (co, &mask) in out_basis.masks.iter().enumerate() {
            for a in 0..m {
                if mask & (1 << a) != 0 {
                    continue;
                }
                let sign = insert_sign(a, mask);
                let source = in_basis.pos[(mask | (1 << a)) as usize];
                let d = self.comps[source].deriv(a);
                out.comps[co].axpy(-sign, &d).expect("same grid");
            }
        }
        out
    }

    /// Pointwise wedge product with shuffle signs.
    pub fn wedge(&self, other: &DiffForm) -> Result<DiffForm> {
        self.grid.ensure_same(&other.grid)?;
        let m = self.grid.m();
        let basis_p = self.basis();
        let basis_q = other.basis();
        let out_degree = self.degree + other.degree;
        let out_basis = FormBasis::get(m, out_degree);
        let mut out = DiffForm::zeros(self.grid, out_degree);
        for (ci, &mi) in basis_p.masks.iter().enumerate() {
            for (cj, &mj) in basis_q.masks.iter().enumerate() {
                if mi & mj != 0 {
                    continue;
                }
                let sign = merge_sign(mi, mj);
                let target = out_basis.pos[(mi | mj) as usize];
                out.comps[target]
                    .add_product(sign, &self.comps[ci], &other.comps[cj])
                    .expect("same grid");
            }
        }
        Ok(out)
    }

    /// Integral over the torus; defined for top-degree forms (unit volume,
    /// so this is the mean of the single component).
    pub fn integrate(&self) -> Result<f64> {
        if self.degree != self.grid.m() {
            return Err(Error::WrongDegree {
                expected: self.grid.m(),
                got: self.degree,
            });
        }
        Ok(self.comps[0].mean())
    }

    /// Componentwise means: the harmonic part of the form on a flat torus.
    pub fn harmonic_part(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c.mean()).collect()
    }

    /// Remove the harmonic part in place (subtract componentwise means).
    pub fn remove_harmonic_part(&mut self) {
        for c in &mut self.comps {
            let mean = c.mean();
            for v in c.data_mut() {
                *v -= mean;
            }
        }
    }

    /// Plain-sum inner product over all components and nodes.
    pub fn dot(&self, other: &DiffForm) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        if self.degree != other.degree {
            return Err(Error::WrongDegree {
                expected: self.degree,
                got: other.degree,
            });
        }
        let mut acc = 0.0;
        for (a, b) in self.comps.iter().zip(&other.comps) {
            acc += a
                .data()
                .iter()
                .zip(b.data())
                .map(|(x, y)| x * y)
                .sum::<f64>();
        }
        Ok(acc)
    }

    pub fn harmonic_sup(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| c.mean().abs())
            .fold(0.0, f64::max)
    }

    /// Exactness test: `d self` small and harmonic part small, both against
    /// `tol * max(1, sup norm)`.
    pub fn is_exact(&self, tol: f64) -> ExactnessReport {
        let d_residual = if self.degree >= self.grid.m() {
            0.0
        } else {
            self.exterior_d().sup_norm()
        };
        let harmonic_residual = self.harmonic_sup();
        let scaled_tol = tol * self.sup_norm().max(1.0);
        ExactnessReport {
            d_residual,
            harmonic_residual,
            tol: scaled_tol,
            exact: d_residual <= scaled_tol && harmonic_residual <= scaled_tol,
        }
    }

    /// Minimal-norm primitive of an exact form: `beta` with `d beta = self`,
    /// computed per Fourier mode as `d^T sigma / |kappa|^2`.  Fails with
    /// [`Error::NotClosed`] or [`Error::HarmonicObstruction`].
    pub fn hodge_primitive(&self, tol: f64) -> Result<DiffForm> {
        if self.degree == 0 || self.degree > self.grid.m() {
            return Err(Error::WrongDegree {
                expected: 1,
                got: self.degree,
            });
        }
        let scale = self.sup_norm().max(1.0);
        if self.degree < self.grid.m() {
            let d_res = self.exterior_d().sup_norm();
            if d_res > tol * scale {
                return Err(Error::NotClosed {
                    residual: d_res,
                    tol: tol * scale,
                });
            }
        }

        let (n, m) = (self.grid.n(), self.grid.m());
        let mult = spectral::deriv_multipliers(n);
        let in_basis = self.basis();
        let out_basis = FormBasis::get(m, self.degree - 1);

        let spectra: Vec<Vec<Complex64>> = self
            .comps
            .iter()
            .map(|c| spectral::fft_full(c.data(), n, m))
            .collect();

        let points = self.grid.points();
        let norm = points as f64;
        let mut out_spectra: Vec<Vec<Complex64>> =
            (0..out_basis.len()).map(|_| vec![Complex64::default(); points]).collect();

        for flat in 0..points {
            let ksq = spectral::kappa_sq(flat, n, m, &mult);
            if ksq == 0.0 {
                // Covers the zero mode (harmonic part) and pure-Nyquist
                // modes, which the zeroed derivative cannot reach.
                let mag = spectra
                    .iter()
                    .map(|s| s[flat].norm())
                    .fold(0.0, f64::max)
                    / norm;
                if mag > tol * scale {
                    return Err(Error::HarmonicObstruction {
                        detail: if flat == 0 {
                            "nonzero harmonic part".into()
                        } else {
                            format!("unresolvable Nyquist content at mode {flat}")
                        },
                        magnitude: mag,
                    });
                }
                continue;
            }
            // kappa components of this mode.
            let mut idx = flat;
            let mut kappa = [0.0f64; 32];
            for ka in kappa.iter_mut().take(m) {
                *ka = mult[idx % n];
                idx /= n;
            }
            for (co, &mask) in out_basis.masks.iter().enumerate() {
                let mut acc = Complex64::default();
                for (a, &ka) in kappa.iter().enumerate().take(m) {
                    if mask & (1 << a) != 0 {
                        continue;
                    }
                    let sign = insert_sign(a, mask);
                    let source = in_basis.pos[(mask | (1 << a)) as usize];
                    // d^T multiplies by -(i kappa_a) with the insert sign.
                    acc += spectra[source][flat] * Complex64::new(0.0, -ka * sign);
                }
                out_spectra[co][flat] = acc / ksq;
            }
        }

        let comps = out_spectra
            .into_iter()
            .map(|s| {
                ScalarField::from_data(self.grid, spectral::ifft_full(s, n, m))
                    .expect("sized by construction")
            })
            .collect();
        Ok(DiffForm {
            grid: self.grid,
            degree: self.degree - 1,
            comps,
        })
    }
}
