//! Characteristic coefficients of compact symplectic algebra elements.
//!
//! Draws random X in sp(k), checks the structural facts the rest of the
//! crate builds on (zero trace, vanishing odd characteristic coefficients)
//! and compares the first invariant f_1 against its closed form
//! f_1 = (tr(A^2) - (tr A)^2) / 2 with A = iX.

use chernforge::quatlin::{char_poly_coeffs, f1_closed_form, random_sp_algebra};
use chernforge::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 1..=3usize {
        let x = random_sp_algebra(k, &mut rng);
        let cp = char_poly_coeffs(&x);
        let f1 = f1_closed_form(&x);
        println!("k = {k}  (matrix dimension {})", 2 * k);
        println!("  |trace|            = {:.3e}", x.matrix().trace().norm());
        println!("  odd coeff residual = {:.3e}", cp.odd_residual);
        println!("  f_1 from spectrum  = {:+.12e}", cp.f[0]);
        println!("  f_1 closed form    = {:+.12e}", f1);
        for (i, f) in cp.f.iter().enumerate() {
            println!("  f_{} = {:+.6e}", i + 1, f);
        }
    }

    // The even coefficients are the elementary symmetric functions of the
    // squared eigenvalues of iX; for k = 1 the single invariant is the
    // determinant of X itself, which is nonnegative on sp(1).
    let x = random_sp_algebra(1, &mut rng);
    let cp = char_poly_coeffs(&x);
    let det = x.matrix().determinant();
    println!("k = 1 cross-check: f_1 = {:+.9e}, det(X) = {:+.9e}", cp.f[0], det.re);
    Ok(())
}
