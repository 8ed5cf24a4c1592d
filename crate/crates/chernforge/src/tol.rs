//! Centralized numerical tolerances.
//!
//! Every acceptance-grade comparison in the crate routes through a constant
//! defined here, so the precision contract is auditable in one place.  Each
//! constant notes the error mechanism that sets its size.  Scale-relative
//! tolerances multiply a problem-dependent scale computed at the call site.

/// Membership residual for sp(k) / Sp(k) checks.  Elements are assembled
/// from symmetrized blocks, so only rounding from the assembly survives.
pub const SP_MEMBERSHIP: f64 = 1e-10;

/// Odd characteristic-polynomial coefficients of an sp(k) element vanish
/// identically; the numeric residual comes from the Hermitian eigensolver
/// and from forming elementary symmetric polynomials.  Relative to scale^j
/// for the degree-j coefficient.
pub const CHAR_POLY_ODD: f64 = 1e-9;

/// d(d(form)) on a spectral grid cancels exactly in the Fourier multipliers;
/// the residual is pure rounding in the transforms.
pub const DD_ZERO: f64 = 1e-10;

/// Graded Leibniz rule for band-limited forms; products of transforms
/// accumulate a few more ulps than a single derivative.
pub const LEIBNIZ: f64 = 1e-8;

/// Integral of an exact top form; the k = 0 Fourier multiplier is exactly
/// zero so only the quadrature summation rounds.
pub const STOKES: f64 = 1e-10;

/// Round trip d(hodge_primitive(sigma)) = sigma for exact band-limited sigma.
pub const HODGE_ROUND_TRIP: f64 = 1e-8;

/// Default closedness / harmonic-part threshold used by exactness tests.
pub const EXACTNESS: f64 = 1e-9;

/// Pontrjagin additivity under quaternionic direct sum: the trace splits
/// exactly, so only rounding in the wedge products survives.
pub const ADDITIVITY: f64 = 1e-9;

/// Transgression identity p1(w + a) - p1(w) = d(secondary form).
pub const TRANSGRESSION: f64 = 1e-8;

/// Closedness of computed Pontrjagin forms.
pub const P1_CLOSED: f64 = 1e-8;

/// p1(diagonal connection of tuple) = sum of (d omega_i)^2, relative to the
/// sup norm of the right-hand side.
pub const P1_DIAGONAL: f64 = 1e-9;

/// Null tuples cancel pointwise term by term; the residual of the assembled
/// 3-form is rounding on the summed products, relative to the product scale.
pub const NULL_SUM: f64 = 1e-10;

/// Rank decision threshold for the pointwise regularity certificate,
/// relative to the largest singular value at that node.
pub const RANK_RELATIVE: f64 = 1e-8;

/// Absolute floor on the smallest structural singular value for a tuple to
/// count as comfortably regular.
pub const CERT_SV_FLOOR: f64 = 1e-6;

/// Relative agreement between the analytic linearization and a central
/// finite difference of the quadratic map (which is exact for quadratics up
/// to rounding amplified by 1/(2 eps)).
pub const JACOBIAN_FD: f64 = 1e-6;

/// Central finite-difference step for the Jacobian check.
pub const JACOBIAN_FD_STEP: f64 = 1e-4;

/// Default relative residual target for the decomposition solver.
pub const SOLVE_RESIDUAL: f64 = 1e-6;

/// Agreement between the solver's reported residual and an independent
/// recomputation from the returned tuple.
pub const REPORT_RECOMPUTE: f64 = 1e-12;

/// End-to-end realization: the Chern-Weil recomputation of p1 from the
/// diagonal connection adds one more rounding pass over the solver residual.
pub const REALIZE_END_TO_END: f64 = 2e-6;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_are_ordered_sensibly() {
        assert!(SP_MEMBERSHIP < CHAR_POLY_ODD);
        assert!(DD_ZERO < LEIBNIZ);
        assert!(P1_DIAGONAL < TRANSGRESSION);
        assert!(REPORT_RECOMPUTE < SOLVE_RESIDUAL);
        assert!(SOLVE_RESIDUAL < REALIZE_END_TO_END);
        assert!(CERT_SV_FLOOR > RANK_RELATIVE);
    }

    #[test]
    fn tolerances_exceed_machine_epsilon() {
        for t in [
            SP_MEMBERSHIP,
            CHAR_POLY_ODD,
            DD_ZERO,
            STOKES,
            NULL_SUM,
            REPORT_RECOMPUTE,
        ] {
            assert!(t > f64::EPSILON);
        }
    }
}
