//! Quaternion linear algebra and the symplectic Lie algebra sp(k).
//!
//! A quaternion `w + x i + y j + z k` is identified with the complex pair
//! `(w + x i, y + z i)`, i.e. `q = a + b j` with `a, b` complex and `j` on
//! the right of the complex coefficient.  Under this identification a k x k
//! quaternionic matrix `M = P + Q j` embeds into `M_{2k}(C)` as
//!
//! ```text
//!     [  P       Q    ]
//!     [ -conj(Q) conj(P) ]
//! ```
//!
//! which is a ring homomorphism sending quaternionic conjugate transpose to
//! complex adjoint.  Quaternionic anti-Hermitian matrices land exactly on
//!
//! ```text
//!     sp(k) = { X = [ A, B; -conj(B), -A^t ] : A* = -A, B^t = B },
//! ```
//!
//! the complex 2k x 2k matrices that are skew-Hermitian and satisfy
//! `X^t J + J X = 0` with `J = [0, I; -I, 0]`.  The real dimension is
//! `k(2k + 1)` and every element is trace-free.
//!
//! For `X` in sp(k) the matrix `iX` is Hermitian with spectrum symmetric
//! about zero, so `det(lambda I + iX)` has only even-degree coefficients:
//!
//! ```text
//!     det(lambda I + iX) = lambda^{2k} - f_1(X) lambda^{2k-2}
//!                          + f_2(X) lambda^{2k-4} - ...
//! ```
//!
//! [`char_poly_coeffs`] returns the `f_i` in this alternating-sign
//! convention together with the residual of the odd coefficients, and
//! [`f1_closed_form`] evaluates the closed form
//! `f_1(X) = (trace((iX)^2) - trace(iX)^2) / 2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::tol;

pub type ComplexMatrix = DMatrix<Complex64>;

// ---------------------------------------------------------------------------
// quaternions
// ---------------------------------------------------------------------------

/// Quaternion `w + x i + y j + z k`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    /// Complex pair `(w + x i, y + z i)` of the identification H = C + C j.
    pub fn complex_pair(self) -> (Complex64, Complex64) {
        (Complex64::new(self.w, self.x), Complex64::new(self.y, self.z))
    }

    pub fn from_complex_pair(a: Complex64, b: Complex64) -> Self {
        Quaternion::new(a.re, a.im, b.re, b.im)
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sqr(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn approx_eq(self, other: Quaternion, tol: f64) -> bool {
        (self - other).norm() <= tol
    }
}

impl std::ops::Add for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn add(self, r: Quaternion) -> Quaternion {
        Quaternion::new(self.w + r.w, self.x + r.x, self.y + r.y, self.z + r.z)
    }
}

impl std::ops::Sub for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn sub(self, r: Quaternion) -> Quaternion {
        Quaternion::new(self.w - r.w, self.x - r.x, self.y - r.y, self.z - r.z)
    }
}

impl std::ops::Neg for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl std::ops::Mul for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn mul(self, r: Quaternion) -> Quaternion {
        // Hamilton product with i j = k, j k = i, k i = j.
        Quaternion::new(
            self.w * r.w - self.x * r.x - self.y * r.y - self.z * r.z,
            self.w * r.x + self.x * r.w + self.y * r.z - self.z * r.y,
            self.w * r.y - self.x * r.z + self.y * r.w + self.z * r.x,
            self.w * r.z + self.x * r.y - self.y * r.x + self.z * r.w,
        )
    }
}

impl std::ops::Mul<f64> for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn mul(self, s: f64) -> Quaternion {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }
}

/// Quaternionic inner product on H^n: `<v, w> = sum v_i conj(w_i)`.
///
/// Writing each slot as a complex pair, the complex part of the result is
/// the canonical Hermitian inner product on C^{2n} and the j-part is the
/// complex symplectic pairing (up to the documented sign); see
/// [`hn_inner_parts`].
pub fn hn_inner(v: &[Quaternion], w: &[Quaternion]) -> Result<Quaternion> {
    if v.len() != w.len() {
        return Err(Error::LengthMismatch(format!(
            "hn_inner: {} vs {}",
            v.len(),
            w.len()
        )));
    }
    let mut acc = Quaternion::ZERO;
    for (a, b) in v.iter().zip(w) {
        acc = acc + *a * b.conj();
    }
    Ok(acc)
}

/// Split `hn_inner` into its complex part and j-part, both complex numbers:
/// `<v, w> = h(v, w) + omega(v, w) j`.
pub fn hn_inner_parts(v: &[Quaternion], w: &[Quaternion]) -> Result<(Complex64, Complex64)> {
    Ok(hn_inner(v, w)?.complex_pair())
}

// ---------------------------------------------------------------------------
// quaternionic matrices and the complex embedding
// ---------------------------------------------------------------------------

/// Dense quaternionic matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QuatMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Quaternion>,
}

impl QuatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QuatMatrix {
            rows,
            cols,
            data: vec![Quaternion::ZERO; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Quaternion) -> Self {
        let mut m = QuatMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        QuatMatrix::from_fn(n, n, |r, c| if r == c { Quaternion::ONE } else { Quaternion::ZERO })
    }

    pub fn mul(&self, rhs: &QuatMatrix) -> Result<QuatMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::LengthMismatch(format!(
                "matrix product {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = QuatMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for c in 0..rhs.cols {
                let mut acc = Quaternion::ZERO;
                for t in 0..self.cols {
                    acc = acc + self[(r, t)] * rhs[(t, c)];
                }
                out[(r, c)] = acc;
            }
        }
        Ok(out)
    }

    /// Quaternionic conjugate transpose.
    pub fn conj_transpose(&self) -> QuatMatrix {
        QuatMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }
}

impl std::ops::Index<(usize, usize)> for QuatMatrix {
    type Output = Quaternion;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Quaternion {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QuatMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Quaternion {
        &mut self.data[r * self.cols + c]
    }
}

/// Embed a quaternionic matrix `M = P + Q j` as the complex block matrix
/// `[P, Q; -conj(Q), conj(P)]`.  Ring homomorphism; sends the quaternionic
/// conjugate transpose to the complex adjoint.
pub fn quat_to_complex(m: &QuatMatrix) -> ComplexMatrix {
    let (r, c) = (m.rows, m.cols);
    let mut out = ComplexMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let (a, b) = m[(i, j)].complex_pair();
            out[(i, j)] = a;
            out[(i, j + c)] = b;
            out[(i + r, j)] = -b.conj();
            out[(i + r, j + c)] = a.conj();
        }
    }
    out
}

/// The standard symplectic form `J = [0, I; -I, 0]` on C^{2k}.
pub fn standard_j(k: usize) -> ComplexMatrix {
    let mut j = ComplexMatrix::zeros(2 * k, 2 * k);
    for t in 0..k {
        j[(t, t + k)] = Complex64::new(1.0, 0.0);
        j[(t + k, t)] = Complex64::new(-1.0, 0.0);
    }
    j
}

fn sup_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn even_half_dim(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() % 2 != 0 {
        return Err(Error::OddDimension(m.nrows()));
    }
    Ok(m.nrows() / 2)
}

/// Residuals of the two sp(k) membership conditions for a 2k x 2k matrix:
/// skew-Hermitian `X* + X = 0` and the symplectic relation `X^t J + J X = 0`.
#[derive(Debug, Clone, Copy)]
pub struct SpAlgebraResiduals {
    pub herm: f64,
    pub jrel: f64,
}

impl SpAlgebraResiduals {
    pub fn max(&self) -> f64 {
        self.herm.max(self.jrel)
    }
}

/// Compute sp(k) membership residuals (sup-norm of each defect matrix).
pub fn sp_algebra_check(x: &ComplexMatrix) -> Result<SpAlgebraResiduals> {
    let k = even_half_dim(x)?;
    let j = standard_j(k);
    let herm = sup_abs(&(x.adjoint() + x));
    let jrel = sup_abs(&(x.transpose() * &j + &j * x));
    Ok(SpAlgebraResiduals { herm, jrel })
}

/// Residuals of the Sp(k) group conditions for a 2k x 2k matrix:
/// unitarity `U* U = I` and `U^t J U = J`.
#[derive(Debug, Clone, Copy)]
pub struct SpGroupResiduals {
    pub unitary: f64,
    pub jrel: f64,
}

impl SpGroupResiduals {
    pub fn max(&self) -> f64 {
        self.unitary.max(self.jrel)
    }
}

pub fn sp_group_check(u: &ComplexMatrix) -> Result<SpGroupResiduals> {
    let k = even_half_dim(u)?;
    let j = standard_j(k);
    let eye = ComplexMatrix::identity(2 * k, 2 * k);
    let unitary = sup_abs(&(u.adjoint() * u - eye));
    let jrel = sup_abs(&(u.transpose() * &j * u - j));
    Ok(SpGroupResiduals { unitary, jrel })
}

// ---------------------------------------------------------------------------
// validated elements
// ---------------------------------------------------------------------------

/// A validated element of sp(k), stored as its 2k x 2k complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpAlgebraElement {
    k: usize,
    x: ComplexMatrix,
}

impl SpAlgebraElement {
    /// Validate membership within [`tol::SP_MEMBERSHIP`] relative to the
    /// matrix scale.
    pub fn new(x: ComplexMatrix) -> Result<Self> {
        let k = even_half_dim(&x)?;
        let res = sp_algebra_check(&x)?;
        let tol = tol::SP_MEMBERSHIP * sup_abs(&x).max(1.0);
        if res.max() > tol {
            return Err(Error::NotSpAlgebra {
                herm: res.herm,
                jrel: res.jrel,
                tol,
            });
        }
        Ok(SpAlgebraElement { k, x })
    }

    /// Assemble `X = [A, B; -conj(B), -A^t]` after projecting `A` to its
    /// skew-Hermitian part and `B` to its symmetric part, so membership
    /// holds exactly by construction.
    pub fn from_blocks(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Self> {
        let k = a.nrows();
        if a.ncols() != k || b.nrows() != k || b.ncols() != k {
            return Err(Error::LengthMismatch(format!(
                "blocks must be square of equal size, got {}x{} and {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        let a = (a - a.adjoint()).scale(0.5);
        let b = (b + b.transpose()).scale(0.5);
        let mut x = ComplexMatrix::zeros(2 * k, 2 * k);
        for r in 0..k {
            for c in 0..k {
                x[(r, c)] = a[(r, c)];
                x[(r, c + k)] = b[(r, c)];
                x[(r + k, c)] = -b[(r, c)].conj();
                x[(r + k, c + k)] = -a[(c, r)];
            }
        }
        SpAlgebraElement::new(x)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.x
    }

    /// Top-left k x k block A (skew-Hermitian).
    pub fn a_block(&self) -> ComplexMatrix {
        self.x.view((0, 0), (self.k, self.k)).into()
    }

    /// Top-right k x k block B (complex symmetric).
    pub fn b_block(&self) -> ComplexMatrix {
        self.x.view((0, self.k), (self.k, self.k)).into()
    }

    pub fn trace(&self) -> Complex64 {
        self.x.trace()
    }

    /// Real dimension of sp(k) as a vector space: k(2k + 1).
    pub fn algebra_dim(k: usize) -> usize {
        k * (2 * k + 1)
    }
}

/// A validated element of the group Sp(k) = U(2k) intersect Sp(2k, C).
#[derive(Debug, Clone, PartialEq)]
pub struct SpGroupElement {
    k: usize,
    u: ComplexMatrix,
}

impl SpGroupElement {
    pub fn new(u: ComplexMatrix) -> Result<Self> {
        let k = even_half_dim(&u)?;
        let res = sp_group_check(&u)?;
        let tol = tol::SP_MEMBERSHIP * sup_abs(&u).max(1.0);
        if res.max() > tol {
            return Err(Error::NotSpGroup {
                unitary: res.unitary,
                jrel: res.jrel,
                tol,
            });
        }
        Ok(SpGroupElement { k, u })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.u
    }
}

/// Draw a random sp(k) element: blocks with independent standard-normal
/// real and imaginary parts, then symmetrized by [`SpAlgebraElement::from_blocks`].
pub fn random_sp_algebra<R: Rng>(k: usize, rng: &mut R) -> SpAlgebraElement {
    let normal = |rng: &mut R| {
        // Box-Muller keeps the dependency surface small.
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        (-2.0 * u1.ln()).sqrt() * u2.cos()
    };
    let draw = |rng: &mut R| Complex64::new(normal(rng), normal(rng));
    let a = ComplexMatrix::from_fn(k, k, |_, _| draw(rng));
    let b = ComplexMatrix::from_fn(k, k, |_, _| draw(rng));
    SpAlgebraElement::from_blocks(&a, &b).expect("symmetrized blocks are always in sp(k)")
}

// ---------------------------------------------------------------------------
// characteristic polynomial
// ---------------------------------------------------------------------------

/// Coefficients of `det(lambda I + iX)` for `X` in sp(k).
#[derive(Debug, Clone)]
pub struct CharPoly {
    /// `coeffs[j]` multiplies `lambda^{2k - j}`; `coeffs[0] = 1`.
    pub coeffs: Vec<f64>,
    /// `f[i - 1] = f_i(X) = (-1)^i coeffs[2i]`, the sign-normalized
    /// invariant polynomials.
    pub f: Vec<f64>,
    /// Largest scale-normalized odd coefficient `|coeffs[2i+1]| / scale^{2i+1}`
    /// where `scale = max(1, spectral radius of iX)`.
    pub odd_residual: f64,
}

/// Compute the characteristic polynomial of `iX` via its (real) Hermitian
/// spectrum and elementary symmetric polynomials.
pub fn char_poly_coeffs(x: &SpAlgebraElement) -> CharPoly {
    let h = x.matrix().map(|z| z * Complex64::new(0.0, 1.0));
    // iX is Hermitian, so the eigenvalues are real.
    let eig = h.symmetric_eigen();
    let nu: DVector<f64> = eig.eigenvalues;
    let dim = nu.len();

    // Expand prod (lambda + nu_t) incrementally; coeffs[j] is the
    // elementary symmetric polynomial e_j(nu).
    let mut coeffs = vec![0.0; dim + 1];
    coeffs[0] = 1.0;
    for t in 0..dim {
        for j in (1..=t + 1).rev() {
            coeffs[j] += nu[t] * coeffs[j - 1];
        }
    }

    let scale = nu.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut odd_residual = 0.0f64;
    for (j, c) in coeffs.iter().enumerate() {
        if j % 2 == 1 {
            odd_residual = odd_residual.max(c.abs() / scale.powi(j as i32));
        }
    }

    let f = (1..=dim / 2)
        .map(|i| if i % 2 == 0 { coeffs[2 * i] } else { -coeffs[2 * i] })
        .collect();

    CharPoly {
        coeffs,
        f,
        odd_residual,
    }
}

/// Closed form `f_1(X) = (trace(A^2) - trace(A)^2) / 2` with `A = iX`.
pub fn f1_closed_form(x: &SpAlgebraElement) -> f64 {
    let a = x.matrix().map(|z| z * Complex64::new(0.0, 1.0));
    let tr_a = a.trace();
    let tr_a2 = (&a * &a).trace();
    (0.5 * (tr_a2 - tr_a * tr_a)).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hamilton_relations() {
        let (i, j, k) = (Quaternion::I, Quaternion::J, Quaternion::K);
        let minus_one = -Quaternion::ONE;
        assert_eq!(i * i, minus_one);
        assert_eq!(j * j, minus_one);
        assert_eq!(k * k, minus_one);
        assert_eq!(i * j, k);
        assert_eq!(j * k, i);
        assert_eq!(k * i, j);
        assert_eq!(j * i, -k);
        assert_eq!((i * j) * k, minus_one);
    }

    #[test]
    fn product_of_one_plus_i_and_one_minus_i_is_two() {
        let p = Quaternion::new(1.0, 1.0, 0.0, 0.0) * Quaternion::new(1.0, -1.0, 0.0, 0.0);
        assert!(p.approx_eq(Quaternion::new(2.0, 0.0, 0.0, 0.0), 1e-15));
    }

    #[test]
    fn inner_product_of_j_and_k_is_minus_i() {
        let got = hn_inner(&[Quaternion::J], &[Quaternion::K]).unwrap();
        assert!(got.approx_eq(-Quaternion::I, 1e-15));
    }

    #[test]
    fn complex_part_of_inner_product_is_hermitian_pairing() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rand_q = |rng: &mut ChaCha8Rng| {
            Quaternion::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
        };
        let v: Vec<Quaternion> = (0..5).map(|_| rand_q(&mut rng)).collect();
        let w: Vec<Quaternion> = (0..5).map(|_| rand_q(&mut rng)).collect();
        let (h, om) = hn_inner_parts(&v, &w).unwrap();

        // Identified complex vectors (a_1..a_n, b_1..b_n).
        let vc: Vec<Complex64> = v
            .iter()
            .map(|q| q.complex_pair().0)
            .chain(v.iter().map(|q| q.complex_pair().1))
            .collect();
        let wc: Vec<Complex64> = w
            .iter()
            .map(|q| q.complex_pair().0)
            .chain(w.iter().map(|q| q.complex_pair().1))
            .collect();
        let herm: Complex64 = vc.iter().zip(&wc).map(|(a, b)| a * b.conj()).sum();
        assert!((h - herm).norm() < 1e-12);

        // j-part is the symplectic pairing -(v^t J w) for our J convention.
        let n = v.len();
        let mut symp = Complex64::new(0.0, 0.0);
        for t in 0..n {
            symp += vc[t] * wc[t + n] - vc[t + n] * wc[t];
        }
        assert!((om + symp).norm() < 1e-12);
    }

    #[test]
    fn embedding_sends_j_to_standard_block() {
        let m = QuatMatrix::from_fn(1, 1, |_, _| Quaternion::J);
        let e = quat_to_complex(&m);
        let expect = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)],
        );
        assert!(sup_abs(&(e - expect)) < 1e-15);
    }

    #[test]
    fn embedding_is_a_ring_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rand_q = |rng: &mut ChaCha8Rng| {
            Quaternion::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
        };
        for _ in 0..20 {
            let m = QuatMatrix::from_fn(3, 3, |_, _| rand_q(&mut rng));
            let p = QuatMatrix::from_fn(3, 3, |_, _| rand_q(&mut rng));
            let lhs = quat_to_complex(&m.mul(&p).unwrap());
            let rhs = quat_to_complex(&m) * quat_to_complex(&p);
            assert!(sup_abs(&(lhs - rhs)) < 1e-12);
            // Conjugate transpose maps to adjoint.
            let lhs = quat_to_complex(&m.conj_transpose());
            let rhs = quat_to_complex(&m).adjoint();
            assert!(sup_abs(&(lhs - rhs)) < 1e-15);
        }
    }

    #[test]
    fn anti_hermitian_quaternionic_matrices_land_in_sp() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rand_q = |rng: &mut ChaCha8Rng| {
            Quaternion::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
        };
        let m = QuatMatrix::from_fn(3, 3, |_, _| rand_q(&mut rng));
        // M - M* is quaternionic anti-Hermitian.
        let mut anti = QuatMatrix::zeros(3, 3);
        let mc = m.conj_transpose();
        for r in 0..3 {
            for q in 0..3 {
                anti[(r, q)] = m[(r, q)] - mc[(r, q)];
            }
        }
        let x = quat_to_complex(&anti);
        let res = sp_algebra_check(&x).unwrap();
        assert!(res.max() < 1e-12);
        SpAlgebraElement::new(x).unwrap();
    }

    #[test]
    fn diag_i_minus_i_is_in_sp1_with_char_poly_lambda_sq_minus_one() {
        let x = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)],
        );
        let res = sp_algebra_check(&x).unwrap();
        assert_eq!(res.max(), 0.0);
        let e = SpAlgebraElement::new(x).unwrap();
        let cp = char_poly_coeffs(&e);
        // det(lambda I + iX) = (lambda - 1)(lambda + 1) = lambda^2 - 1.
        assert_relative_eq!(cp.coeffs[0], 1.0, max_relative = 1e-12);
        assert!(cp.coeffs[1].abs() < 1e-12);
        assert_relative_eq!(cp.coeffs[2], -1.0, max_relative = 1e-12);
        assert_relative_eq!(cp.f[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(f1_closed_form(&e), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn random_elements_have_vanishing_odd_coefficients_and_matching_f1() {
        for k in 1..=3usize {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
            for _ in 0..25 {
                let e = random_sp_algebra(k, &mut rng);
                assert!(e.trace().norm() < tol::SP_MEMBERSHIP);
                let cp = char_poly_coeffs(&e);
                assert!(
                    cp.odd_residual < tol::CHAR_POLY_ODD,
                    "odd residual {} at k = {k}",
                    cp.odd_residual
                );
                let f1 = f1_closed_form(&e);
                let scale = f1.abs().max(1.0);
                assert!(
                    (cp.f[0] - f1).abs() < 1e-9 * scale,
                    "f1 mismatch: {} vs {}",
                    cp.f[0],
                    f1
                );
                assert_eq!(cp.f.len(), k);
            }
        }
    }

    #[test]
    fn dimension_formula() {
        assert_eq!(SpAlgebraElement::algebra_dim(1), 3);
        assert_eq!(SpAlgebraElement::algebra_dim(2), 10);
        assert_eq!(SpAlgebraElement::algebra_dim(3), 21);
    }

    #[test]
    fn group_membership_examples() {
        // Identity, J, and embeddings of unit quaternions are in Sp(k).
        let eye = ComplexMatrix::identity(4, 4);
        SpGroupElement::new(eye).unwrap();
        SpGroupElement::new(standard_j(2)).unwrap();

        let q = Quaternion::new(0.5, 0.5, 0.5, 0.5); // unit norm
        let u = quat_to_complex(&QuatMatrix::from_fn(1, 1, |_, _| q));
        SpGroupElement::new(u).unwrap();

        // A unitary with det != 1 cannot preserve J (for 2x2 matrices
        // M^t J M = det(M) J).
        let bad = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        );
        assert!(SpGroupElement::new(bad).is_err());
    }

    #[test]
    fn rejects_non_members() {
        // Hermitian, not skew-Hermitian.
        let x = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        );
        assert!(SpAlgebraElement::new(x).is_err());
        // Odd dimension.
        let x = ComplexMatrix::zeros(3, 3);
        assert!(matches!(
            SpAlgebraElement::new(x),
            Err(Error::OddDimension(3))
        ));
    }
}
